use std::collections::VecDeque;

use serde::Serialize;

use crate::word::Word;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum ChannelToken {
    Data(Word),
    End,
    Pause,
}

impl std::fmt::Display for ChannelToken {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ChannelToken::Data(w) => write!(f, "data {w}"),
            ChannelToken::End => f.write_str("end"),
            ChannelToken::Pause => f.write_str("pause"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct QueueFull;

/// The incoming queue of one port. Pause tokens are never stored: they only
/// wait for room like any other token and are then dropped.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TokenQueue {
    tokens: VecDeque<ChannelToken>,
    capacity: Option<usize>,
}

impl TokenQueue {
    pub fn with_capacity(capacity: usize) -> Self {
        TokenQueue { tokens: VecDeque::new(), capacity: Some(capacity) }
    }

    pub fn unbounded() -> Self {
        TokenQueue { tokens: VecDeque::new(), capacity: None }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.capacity.is_some_and(|c| self.tokens.len() >= c)
    }

    pub fn head(&self) -> Option<ChannelToken> {
        self.tokens.front().copied()
    }

    pub fn push(&mut self, token: ChannelToken) -> Result<(), QueueFull> {
        if self.is_full() {
            return Err(QueueFull);
        }
        if token != ChannelToken::Pause {
            self.tokens.push_back(token);
        }
        Ok(())
    }

    pub fn pop(&mut self) -> Option<ChannelToken> {
        self.tokens.pop_front()
    }

    pub fn iter(&self) -> impl Iterator<Item = &ChannelToken> {
        self.tokens.iter()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReceiveTarget {
    /// `port ? variable`
    Variable,
    /// `port ? end`
    End,
}

/// Result of a reception factor: the factor's value, and the word to store
/// into the target variable when data was consumed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Reception {
    pub value: Word,
    pub data: Option<Word>,
}

/// Non-blocking reception. Both forms consume a pending end token; only the
/// variable form consumes data.
pub fn receive_factor(queue: &mut TokenQueue, target: ReceiveTarget) -> Reception {
    let none = Reception { value: 0, data: None };
    match (target, queue.head()) {
        (ReceiveTarget::Variable, Some(ChannelToken::Data(w))) => {
            queue.pop();
            Reception { value: 1, data: Some(w) }
        }
        (ReceiveTarget::Variable, Some(ChannelToken::End)) => {
            queue.pop();
            none
        }
        (ReceiveTarget::End, Some(ChannelToken::End)) => {
            queue.pop();
            Reception { value: 1, data: None }
        }
        _ => none,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn queue(tokens: &[ChannelToken]) -> TokenQueue {
        let mut q = TokenQueue::with_capacity(8);
        for t in tokens {
            q.push(*t).unwrap();
        }
        q
    }

    #[test]
    fn data_into_variable() {
        let mut q = queue(&[ChannelToken::Data(7)]);
        assert_eq!(receive_factor(&mut q, ReceiveTarget::Variable), Reception { value: 1, data: Some(7) });
        assert!(q.is_empty());
    }

    #[test]
    fn end_consumed_by_variable_form() {
        let mut q = queue(&[ChannelToken::End]);
        assert_eq!(receive_factor(&mut q, ReceiveTarget::Variable), Reception { value: 0, data: None });
        assert!(q.is_empty());
    }

    #[test]
    fn end_form_leaves_data() {
        let mut q = queue(&[ChannelToken::Data(7)]);
        assert_eq!(receive_factor(&mut q, ReceiveTarget::End).value, 0);
        assert_eq!(q.head(), Some(ChannelToken::Data(7)));
        let mut q = queue(&[ChannelToken::End, ChannelToken::Data(1)]);
        assert_eq!(receive_factor(&mut q, ReceiveTarget::End).value, 1);
        assert_eq!(q.head(), Some(ChannelToken::Data(1)));
    }

    #[test]
    fn empty_queue_yields_zero() {
        let mut q = TokenQueue::with_capacity(1);
        for target in [ReceiveTarget::Variable, ReceiveTarget::End] {
            assert_eq!(receive_factor(&mut q, target), Reception { value: 0, data: None });
        }
    }

    #[test]
    fn capacity_and_pause() {
        let mut q = TokenQueue::with_capacity(2);
        q.push(ChannelToken::Pause).unwrap();
        assert!(q.is_empty());
        q.push(ChannelToken::Data(1)).unwrap();
        q.push(ChannelToken::End).unwrap();
        assert_eq!(q.push(ChannelToken::Data(2)), Err(QueueFull));
        assert_eq!(q.push(ChannelToken::Pause), Err(QueueFull));
        assert!(TokenQueue::unbounded().push(ChannelToken::End).is_ok());
    }
}
