//! Syntax tree and recursive-descent parser.
//!
//! The tree mirrors the grammar one-to-one; identifiers are not resolved
//! here (a bare name may turn out to be a word, constant, or port).

mod dump;
mod parser;
mod unparse;

pub use dump::dump;
pub use parser::parse;
pub use unparse::unparse;

use crate::diag::Pos;
use crate::word::Word;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Ident {
    pub name: String,
    pub pos: Pos,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Program {
    /// Declarations written before the `process` header.
    pub prelude: Vec<Decl>,
    pub header: Header,
    pub states: Vec<Ident>,
    pub ports: Vec<Ident>,
    /// Declarations between the header (and state/port lists) and `start`.
    pub decls: Vec<Decl>,
    pub init: Vec<Stmt>,
    pub guarded: Vec<GuardedState>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Header {
    pub name: Ident,
    pub control_port: Ident,
    pub dimension: Option<Ident>,
    pub pos: Pos,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Decl {
    Const { name: Ident, value: Expr },
    ConstArray { name: Ident, size: Option<Expr>, items: Vec<ConstItem> },
    Words(Vec<WordDecl>),
    Subroutine(Subroutine),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ConstItem {
    Expr(Expr),
    Str { words: Vec<Word>, pos: Pos },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum WordDecl {
    Scalar(Ident),
    Array { name: Ident, size: Expr },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Subroutine {
    pub name: Ident,
    pub params: Vec<FormalParam>,
    pub locals: Vec<Vec<WordDecl>>,
    pub body: Vec<Stmt>,
    /// `Some` for functions: the expression after `return`.
    pub result: Option<Expr>,
    pub is_function: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum FormalParam {
    ConstArray { name: Ident, size: Option<Expr> },
    Array { name: Ident, size: Option<Expr> },
    Word(Ident),
    Port(Ident),
}

impl FormalParam {
    pub fn name(&self) -> &Ident {
        match self {
            FormalParam::ConstArray { name, .. }
            | FormalParam::Array { name, .. }
            | FormalParam::Word(name)
            | FormalParam::Port(name) => name,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GuardedState {
    pub states: Vec<Ident>,
    pub guard: Option<Guard>,
    pub body: Vec<Stmt>,
    pub pos: Pos,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Guard {
    TransmitReady(Ident),
    Receive { port: Ident, target: Variable },
    ReceiveEnd(Ident),
    After(Expr),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Stmt {
    If { arms: Vec<(Expr, Vec<Stmt>)>, otherwise: Option<Vec<Stmt>>, pos: Pos },
    Repeat {
        condition: Option<Expr>,
        count: Expr,
        body: Vec<Stmt>,
        until: Option<Expr>,
        pos: Pos,
    },
    Next(Ident),
    Assign { target: Variable, value: AssignValue, pos: Pos },
    Transmit { port: Ident, payload: Payload, pos: Pos },
    Call { name: Ident, args: Vec<Expr> },
    Asm { items: Vec<AsmItem>, pos: Pos },
}

impl Stmt {
    pub fn pos(&self) -> Pos {
        match self {
            Stmt::If { pos, .. }
            | Stmt::Repeat { pos, .. }
            | Stmt::Assign { pos, .. }
            | Stmt::Transmit { pos, .. }
            | Stmt::Asm { pos, .. } => *pos,
            Stmt::Next(id) | Stmt::Call { name: id, .. } => id.pos,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum AssignValue {
    Expr(Expr),
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
    /// A constant emitted verbatim as one code word.
    Constant { op: Option<UnaryOp>, value: Expr },
    /// A parenthesized expression whose result is left on the data stack.
    Expr(Expr),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Variable {
    Name(Ident),
    Index(Ident, Box<Expr>),
}

impl Variable {
    pub fn ident(&self) -> &Ident {
        match self {
            Variable::Name(id) | Variable::Index(id, _) => id,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum UnaryOp {
    Minus,
    Tilde,
    Not,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BinOp {
    // relational
    Eq,
    Ne,
    Lt,
    Gt,
    Le,
    Ge,
    // simple expression level
    Add,
    Sub,
    Bar,
    Caret,
    Or,
    // term level
    Mul,
    Amp,
    And,
    Shl,
    Div,
    Mod,
    Shr,
}

impl BinOp {
    /// Whether a trailing `$` may select the signed variant.
    pub fn accepts_signed(self) -> bool {
        matches!(self, BinOp::Lt | BinOp::Gt | BinOp::Le | BinOp::Ge | BinOp::Div | BinOp::Mod | BinOp::Shr)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Expr {
    Number { value: Word, pos: Pos },
    Name(Ident),
    Index(Ident, Box<Expr>),
    SizeOf(Ident),
    Call { name: Ident, args: Vec<Expr> },
    Now(Pos),
    Receive { port: Ident, target: Option<Variable> },
    Paren(Box<Expr>),
    Unary { op: UnaryOp, operand: Box<Expr>, pos: Pos },
    Binary { op: BinOp, signed: bool, lhs: Box<Expr>, rhs: Box<Expr>, pos: Pos },
}

impl Expr {
    pub fn pos(&self) -> Pos {
        match self {
            Expr::Number { pos, .. } | Expr::Now(pos) | Expr::Unary { pos, .. } | Expr::Binary { pos, .. } => *pos,
            Expr::Name(id) | Expr::Index(id, _) | Expr::SizeOf(id) => id.pos,
            Expr::Call { name, .. } => name.pos,
            Expr::Receive { port, .. } => port.pos,
            Expr::Paren(e) => e.pos(),
        }
    }
}
