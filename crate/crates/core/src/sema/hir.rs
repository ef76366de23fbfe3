//! The checked program: every identifier resolved to what it denotes,
//! every operator to its signed or unsigned variant.

use std::fmt;

use crate::word::{BinaryOp, UnaryOp, Word};

/// `a * dimension + b`, with wrapping word arithmetic.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub struct Affine {
    pub a: Word,
    pub b: Word,
}

pub type AffineSize = Affine;

impl Affine {
    pub const ZERO: Affine = Affine { a: 0, b: 0 };

    pub const fn constant(b: Word) -> Self {
        Affine { a: 0, b }
    }

    pub const DIMENSION: Affine = Affine { a: 1, b: 0 };

    pub fn as_constant(self) -> Option<Word> {
        (self.a == 0).then_some(self.b)
    }

    pub fn at(self, dimension: Word) -> Word {
        self.a.wrapping_mul(dimension).wrapping_add(self.b)
    }
}

impl fmt::Display for Affine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.a, self.b) {
            (0, b) => write!(f, "{b}"),
            (a, 0) => write!(f, "{a}*dimension"),
            (a, b) => write!(f, "{a}*dimension+{b}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CheckedProgram {
    pub name: String,
    /// Header fields d1/d0.
    pub data_size: AffineSize,
    pub globals: Vec<GlobalVar>,
    pub const_arrays: Vec<Vec<Word>>,
    pub states: Vec<String>,
    /// Local ports in declaration order; index 0 is the control port.
    pub ports: Vec<String>,
    pub routines: Vec<Routine>,
    pub init: Vec<Stmt>,
    pub guarded: Vec<Guarded>,
    /// Per state: the expiration guard's delay expression, if any.
    pub deadlines: Vec<Option<Expr>>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GlobalVar {
    pub name: String,
    pub size: AffineSize,
    /// Data memory address; dimension-independent variables come first,
    /// so scalars always have constant addresses.
    pub base: Affine,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Routine {
    pub name: String,
    /// Frame slots filled from the caller's arguments.
    pub param_slots: Word,
    /// Further zero-initialized frame slots for local variables.
    pub local_slots: Word,
    pub body: Vec<Stmt>,
    pub result: Option<Expr>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Guarded {
    pub states: Vec<Word>,
    pub guard: Guard,
    pub body: Vec<Stmt>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Guard {
    Always,
    TransmitReady(Word),
    Receive { port: Word, target: Place },
    ReceiveEnd(Word),
    After,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PortRef {
    Local(Word),
    /// A formal port parameter: the frame slot holding the local port index.
    Formal(Word),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ArrayRef {
    Global(usize),
    Const { id: usize, len: Word },
    /// A local array occupying `len` frame slots starting at `slot`.
    Frame { slot: Word, len: Word },
    /// A formal array: reference at `slot`, length at `slot + 1`.
    Formal { slot: Word },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Place {
    Global(usize),
    Slot(Word),
    Port(PortRef),
    Element(ArrayRef, Box<Expr>),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Expr {
    Value(Affine),
    Load(Place),
    Length(ArrayRef),
    Now,
    /// `None` target: the `? end` variant.
    Receive { port: PortRef, target: Option<Box<Place>> },
    Call { routine: usize, args: Vec<Arg> },
    New(Vec<Arg>),
    Unary(UnaryOp, Box<Expr>),
    Binary(BinaryOp, Box<Expr>, Box<Expr>),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Arg {
    Word(Expr),
    Array { array: ArrayRef, offset: Option<Expr>, narrow: Option<Word> },
    Port(PortRef),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Stmt {
    If { arms: Vec<(Expr, Vec<Stmt>)>, otherwise: Vec<Stmt> },
    Repeat { condition: Option<Expr>, count: Expr, body: Vec<Stmt>, until: Option<Expr> },
    Next(Word),
    Assign { place: Place, value: Expr },
    AssignAsm { place: Place, items: Vec<AsmItem> },
    Send { port: PortRef, payload: Payload },
    Call { routine: usize, args: Vec<Arg> },
    Asm(Vec<AsmItem>),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Payload {
    Data(Expr),
    End,
    Pause,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum AsmItem {
    Word(Word),
    Expr(Expr),
}
