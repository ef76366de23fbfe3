//! Checks that every execution path of a main-program statement list ends
//! in a transition.
//!
//! A statement terminates its path if it is a transition, or a conditional
//! with an `else` branch whose every branch terminates. A repetition never
//! terminates a path: its body may run zero times. Statements following a
//! terminating statement are rejected as unreachable.

use crate::diag::{Code, Diagnostic, Pos};
use crate::syntax::Stmt;

pub fn require_transition(list: &[Stmt], block: Pos, what: &str) -> Result<(), Diagnostic> {
    if terminates(list)? {
        Ok(())
    } else {
        Err(Diagnostic::new(
            Code::PathNoTransition,
            list.last().map(Stmt::pos).unwrap_or(block),
            format!("{what}: an execution path does not end in a transition"),
        ))
    }
}

/// Reports unreachable statements even where no transition is required.
pub fn check_reachable(list: &[Stmt]) -> Result<(), Diagnostic> {
    terminates(list).map(|_| ())
}

fn terminates(list: &[Stmt]) -> Result<bool, Diagnostic> {
    for (i, s) in list.iter().enumerate() {
        if statement_terminates(s)? {
            if let Some(next) = list.get(i + 1) {
                return Err(Diagnostic::new(
                    Code::Unreachable,
                    next.pos(),
                    "statement follows a transition on every path",
                ));
            }
            return Ok(true);
        }
    }
    Ok(false)
}

fn statement_terminates(s: &Stmt) -> Result<bool, Diagnostic> {
    match s {
        Stmt::Next(_) => Ok(true),
        Stmt::If { arms, otherwise, .. } => {
            let mut all = true;
            for (_, body) in arms {
                all &= terminates(body)?;
            }
            match otherwise {
                Some(body) => Ok(terminates(body)? && all),
                None => Ok(false),
            }
        }
        Stmt::Repeat { body, .. } => {
            terminates(body)?;
            Ok(false)
        }
        _ => Ok(false),
    }
}
