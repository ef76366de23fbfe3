//! Execution of a single process image.

mod channel;
mod vm;

pub use channel::{receive_factor, ChannelToken, QueueFull, Reception, ReceiveTarget, TokenQueue};
pub use vm::{Endpoint, Limits, Process};

use serde::Serialize;

use crate::word::Word;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, thiserror::Error)]
pub enum Trap {
    #[error("division by zero")]
    DivideByZero,
    #[error("index {index} out of bounds for length {len}")]
    OutOfBounds { index: Word, len: Word },
    #[error("offset {offset} beyond array of length {len}")]
    BadSlice { offset: Word, len: Word },
    #[error("array of length {len} passed where {required} words are required")]
    TooShort { len: Word, required: Word },
    #[error("invalid reference 0x{0:08x}")]
    BadReference(Word),
    #[error("write to constant memory at 0x{0:08x}")]
    WriteToConstant(Word),
    #[error("call depth limit {0} exceeded")]
    CallDepth(usize),
    #[error("data stack limit {0} exceeded")]
    StackOverflow(usize),
    #[error("frame memory limit {0} exceeded")]
    FrameOverflow(usize),
    #[error("data stack underflow")]
    StackUnderflow,
    #[error("return without call")]
    ReturnWithoutCall,
    #[error("unknown opcode 0x{word:08x} at {pc}")]
    UnknownOpcode { pc: usize, word: Word },
    #[error("program counter {0} outside the code")]
    PcOutOfRange(usize),
    #[error("no local port {0}")]
    NoSuchPort(Word),
    #[error("transmission on local port {0} without destination")]
    UnsetDestination(Word),
    #[error("destination {0} does not exist")]
    DanglingDestination(Word),
    #[error("no current state")]
    NoState,
    #[error("state {0} outside the state table")]
    NoSuchState(Word),
    #[error("trap instruction")]
    Explicit,
}

/// What one scheduler step did.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum StepOutcome {
    /// Executed one instruction.
    Ran,
    /// Guard selection chose arm `arm` (its index in the state's guard table).
    Selected { state: Word, arm: usize },
    /// Nothing could be done: no guard ready, or a transmission waits for room.
    Stalled,
    Halted,
    Trapped(Trap),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SendError {
    Full,
    Dangling,
}

/// Everything a process needs from its environment.
pub trait Services {
    /// Simulated time.
    fn now(&self) -> u64;
    /// Allocates a fresh global identification for a local port.
    fn new_port(&mut self, local: Word) -> Word;
    fn send(&mut self, destination: Word, token: ChannelToken) -> Result<(), SendError>;
    /// Whether a token could be sent to `destination` without waiting.
    fn ready_to_send(&self, destination: Word) -> bool;
    /// The incoming queue of one of the calling process's own ports.
    fn incoming(&mut self, port: Word) -> &mut TokenQueue;
    /// Starts a process; returns its control port's identification, or 0.
    fn spawn(&mut self, name: &[Word], dimension: Word, extra: Word, creator_control: Word) -> Word;
    /// Uniform choice in `0..n`.
    fn choose(&mut self, n: usize) -> usize;
}
