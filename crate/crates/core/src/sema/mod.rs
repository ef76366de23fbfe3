//! Static semantics: name resolution, constant evaluation, data layout
//! and the guard/transition rules.
//!
//! Each statement reports at most its first error; analysis then moves on
//! to the next statement, so independent mistakes are all reported.

pub mod hir;
mod paths;

use std::collections::HashMap;

use crate::diag::{Code, Diagnostic, Pos};
use crate::syntax::{self as ast, Ident};
use crate::word::{self, BinaryOp, UnaryOp, Word};

pub use hir::*;

type R<T> = Result<T, Diagnostic>;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WordLoc {
    Global(usize),
    Slot(Word),
}

impl WordLoc {
    fn place(self) -> Place {
        match self {
            WordLoc::Global(v) => Place::Global(v),
            WordLoc::Slot(s) => Place::Slot(s),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ParamKind {
    Word,
    Array { narrow: Option<Word> },
    ConstArray { narrow: Option<Word> },
    Port,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SymbolKind {
    Process,
    State(Word),
    Port(PortRef),
    Const(Affine),
    ConstArray { id: usize, len: Word },
    Word(WordLoc),
    /// Word arrays, formal arrays, and formal constant arrays (read-only).
    Array { array: ArrayRef, writable: bool },
    Routine { index: usize, function: bool, params: Vec<ParamKind> },
    /// The system-provided `function new(const name[], dimension, extra)`.
    New,
}

impl SymbolKind {
    pub fn describe(&self) -> &'static str {
        match self {
            SymbolKind::Process => "process name",
            SymbolKind::State(_) => "state",
            SymbolKind::Port(PortRef::Local(_)) => "port",
            SymbolKind::Port(PortRef::Formal(_)) => "formal port",
            SymbolKind::Const(_) => "constant",
            SymbolKind::ConstArray { .. } => "constant array",
            SymbolKind::Word(WordLoc::Global(_)) => "word",
            SymbolKind::Word(WordLoc::Slot(_)) => "local word",
            SymbolKind::Array { array: ArrayRef::Formal { .. }, writable: true } => "formal array",
            SymbolKind::Array { array: ArrayRef::Formal { .. }, writable: false } => "formal constant array",
            SymbolKind::Array { .. } => "array",
            SymbolKind::Routine { function: true, .. } | SymbolKind::New => "function",
            SymbolKind::Routine { function: false, .. } => "procedure",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Symbol {
    pub name: String,
    pub kind: SymbolKind,
    pub pos: Pos,
}

const NEW_PARAMS: [ParamKind; 3] = [ParamKind::ConstArray { narrow: None }, ParamKind::Word, ParamKind::Word];

pub fn analyze(program: &ast::Program) -> Result<CheckedProgram, Vec<Diagnostic>> {
    let mut a = Analyzer {
        globals: HashMap::new(),
        locals: None,
        new_builtin: Symbol { name: "new".into(), kind: SymbolKind::New, pos: Pos::default() },
        diags: Vec::new(),
        vars: Vec::new(),
        const_arrays: Vec::new(),
        routines: Vec::new(),
    };
    let checked = a.program(program);
    if a.diags.is_empty() {
        Ok(checked)
    } else {
        Err(a.diags)
    }
}

struct Analyzer {
    globals: HashMap<String, Symbol>,
    locals: Option<HashMap<String, Symbol>>,
    new_builtin: Symbol,
    diags: Vec<Diagnostic>,
    vars: Vec<(String, Affine)>,
    const_arrays: Vec<Vec<Word>>,
    routines: Vec<Option<Routine>>,
}

fn kind_error(id: &Ident, sym: &Symbol, expected: &str) -> Diagnostic {
    Diagnostic::new(
        Code::Kind,
        id.pos,
        format!("`{}` is a {}, expected {}", id.name, sym.kind.describe(), expected),
    )
}

fn binary_op(op: ast::BinOp, signed: bool) -> BinaryOp {
    use ast::BinOp as B;
    match (op, signed) {
        (B::Eq, _) => BinaryOp::Eq,
        (B::Ne, _) => BinaryOp::Ne,
        (B::Lt, false) => BinaryOp::LtU,
        (B::Lt, true) => BinaryOp::LtS,
        (B::Gt, false) => BinaryOp::GtU,
        (B::Gt, true) => BinaryOp::GtS,
        (B::Le, false) => BinaryOp::LeU,
        (B::Le, true) => BinaryOp::LeS,
        (B::Ge, false) => BinaryOp::GeU,
        (B::Ge, true) => BinaryOp::GeS,
        (B::Add, _) => BinaryOp::Add,
        (B::Sub, _) => BinaryOp::Sub,
        (B::Bar | B::Or, _) => BinaryOp::Or,
        (B::Caret, _) => BinaryOp::Xor,
        (B::Mul, _) => BinaryOp::Mul,
        (B::Amp | B::And, _) => BinaryOp::And,
        (B::Shl, _) => BinaryOp::Shl,
        (B::Div, false) => BinaryOp::DivU,
        (B::Div, true) => BinaryOp::DivE,
        (B::Mod, false) => BinaryOp::ModU,
        (B::Mod, true) => BinaryOp::ModE,
        (B::Shr, false) => BinaryOp::ShrU,
        (B::Shr, true) => BinaryOp::ShrA,
    }
}

fn unary_op(op: ast::UnaryOp) -> UnaryOp {
    match op {
        ast::UnaryOp::Minus => UnaryOp::Neg,
        ast::UnaryOp::Tilde | ast::UnaryOp::Not => UnaryOp::Not,
    }
}

/// Affine arithmetic is exact modulo 2^32 for sums, negation, and scaling
/// by a constant, which is all a dimension-dependent constant may use.
fn affine_binary(op: BinaryOp, l: Affine, r: Affine, pos: Pos) -> R<Affine> {
    let scale = |v: Affine, k: Word| Affine { a: v.a.wrapping_mul(k), b: v.b.wrapping_mul(k) };
    match op {
        BinaryOp::Add => Ok(Affine { a: l.a.wrapping_add(r.a), b: l.b.wrapping_add(r.b) }),
        BinaryOp::Sub => Ok(Affine { a: l.a.wrapping_sub(r.a), b: l.b.wrapping_sub(r.b) }),
        BinaryOp::Mul if l.a == 0 => Ok(scale(r, l.b)),
        BinaryOp::Mul if r.a == 0 => Ok(scale(l, r.b)),
        BinaryOp::Shl if r.a == 0 => {
            let shift = |v: Word| word::binary(BinaryOp::Shl, v, r.b).expect("shift is total");
            Ok(Affine { a: shift(l.a), b: shift(l.b) })
        }
        _ if l.a == 0 && r.a == 0 => word::binary(op, l.b, r.b)
            .map(Affine::constant)
            .map_err(|_| Diagnostic::new(Code::DivZero, pos, "division by zero in constant expression")),
        _ => Err(Diagnostic::new(
            Code::NotAffine,
            pos,
            "the dimension may only be added, subtracted, or scaled by a constant here",
        )),
    }
}

impl Analyzer {
    fn lookup(&self, id: &Ident) -> R<&Symbol> {
        if let Some(sym) = self.locals.as_ref().and_then(|l| l.get(&id.name)) {
            return Ok(sym);
        }
        if let Some(sym) = self.globals.get(&id.name) {
            return Ok(sym);
        }
        if id.name == self.new_builtin.name {
            return Ok(&self.new_builtin);
        }
        Err(Diagnostic::new(Code::Undeclared, id.pos, format!("`{}` is not declared", id.name)))
    }

    fn in_subroutine(&self) -> bool {
        self.locals.is_some()
    }

    fn declare(&mut self, id: &Ident, kind: SymbolKind) {
        let clash = self.globals.get(&id.name).or_else(|| self.locals.as_ref().and_then(|l| l.get(&id.name)));
        if let Some(prev) = clash {
            let msg = format!("`{}` is already declared as a {} at {}", id.name, prev.kind.describe(), prev.pos);
            self.diags.push(Diagnostic::new(Code::Redeclared, id.pos, msg));
            return;
        }
        let sym = Symbol { name: id.name.clone(), kind, pos: id.pos };
        match &mut self.locals {
            Some(locals) => locals.insert(id.name.clone(), sym),
            None => self.globals.insert(id.name.clone(), sym),
        };
    }

    fn report<T>(&mut self, r: R<T>) -> Option<T> {
        match r {
            Ok(v) => Some(v),
            Err(d) => {
                self.diags.push(d);
                None
            }
        }
    }

    // ---- constants ----------------------------------------------------------

    fn const_eval(&self, e: &ast::Expr) -> R<Affine> {
        let not_const = |id: &Ident, what: &str| {
            Diagnostic::new(Code::ConstExpr, id.pos, format!("`{}` is a {what}, not a compile-time constant", id.name))
        };
        match e {
            ast::Expr::Number { value, .. } => Ok(Affine::constant(*value)),
            ast::Expr::Name(id) => {
                let sym = self.lookup(id)?;
                match sym.kind {
                    SymbolKind::Const(v) => Ok(v),
                    _ => Err(not_const(id, sym.kind.describe())),
                }
            }
            ast::Expr::SizeOf(id) => {
                let sym = self.lookup(id)?;
                match sym.kind {
                    SymbolKind::ConstArray { len, .. } => Ok(Affine::constant(len)),
                    SymbolKind::Array { array: ArrayRef::Global(v), .. } => Ok(self.vars[v].1),
                    SymbolKind::Array { array: ArrayRef::Frame { len, .. }, .. } => Ok(Affine::constant(len)),
                    SymbolKind::Array { .. } => Err(not_const(id, "formal array")),
                    _ => Err(kind_error(id, sym, "an array")),
                }
            }
            ast::Expr::Index(id, index) => {
                let sym = self.lookup(id)?;
                let SymbolKind::ConstArray { id: array, len } = sym.kind else {
                    return Err(not_const(id, sym.kind.describe()));
                };
                let i = self.const_eval(index)?.as_constant().ok_or_else(|| {
                    Diagnostic::new(Code::ConstExpr, index.pos(), "constant array index depends on the dimension")
                })?;
                if i >= len {
                    return Err(Diagnostic::new(
                        Code::ConstIndex,
                        index.pos(),
                        format!("index {i} outside of `{}` (length {len})", id.name),
                    ));
                }
                Ok(Affine::constant(self.const_arrays[array][i as usize]))
            }
            ast::Expr::Paren(inner) => self.const_eval(inner),
            ast::Expr::Unary { op, operand, pos } => {
                let v = self.const_eval(operand)?;
                match unary_op(*op) {
                    UnaryOp::Neg => Ok(Affine { a: v.a.wrapping_neg(), b: v.b.wrapping_neg() }),
                    UnaryOp::Not => v
                        .as_constant()
                        .map(|b| Affine::constant(!b))
                        .ok_or_else(|| Diagnostic::new(Code::NotAffine, *pos, "complement of a dimension-dependent value")),
                }
            }
            ast::Expr::Binary { op, signed, lhs, rhs, pos } => {
                let l = self.const_eval(lhs)?;
                let r = self.const_eval(rhs)?;
                affine_binary(binary_op(*op, *signed), l, r, *pos)
            }
            ast::Expr::Call { name, .. } => {
                Err(Diagnostic::new(Code::ConstExpr, name.pos, "function call in constant expression"))
            }
            ast::Expr::Now(pos) => Err(Diagnostic::new(Code::ConstExpr, *pos, "`now` in constant expression")),
            ast::Expr::Receive { port, .. } => {
                Err(Diagnostic::new(Code::ConstExpr, port.pos, "reception in constant expression"))
            }
        }
    }

    fn constant_word(&self, e: &ast::Expr) -> R<Word> {
        self.const_eval(e)?
            .as_constant()
            .ok_or_else(|| Diagnostic::new(Code::ConstExpr, e.pos(), "value must not depend on the dimension"))
    }

    // ---- declarations -------------------------------------------------------

    fn decl(&mut self, d: &ast::Decl) {
        match d {
            ast::Decl::Const { name, value } => {
                let v = self.const_eval(value);
                let v = self.report(v).unwrap_or_default();
                self.declare(name, SymbolKind::Const(v));
            }
            ast::Decl::ConstArray { name, size, items } => {
                let words = self.const_array(size.as_ref(), items, name);
                let words = self.report(words).unwrap_or_default();
                let kind = SymbolKind::ConstArray { id: self.const_arrays.len(), len: words.len() as Word };
                self.const_arrays.push(words);
                self.declare(name, kind);
            }
            ast::Decl::Words(list) => {
                for w in list {
                    let (name, size) = match w {
                        ast::WordDecl::Scalar(name) => (name, None),
                        ast::WordDecl::Array { name, size } => {
                            let s = self.const_eval(size);
                            (name, Some(self.report(s).unwrap_or_default()))
                        }
                    };
                    let var = self.vars.len();
                    self.vars.push((name.name.clone(), size.unwrap_or(Affine::constant(1))));
                    let kind = match size {
                        None => SymbolKind::Word(WordLoc::Global(var)),
                        Some(_) => SymbolKind::Array { array: ArrayRef::Global(var), writable: true },
                    };
                    self.declare(name, kind);
                }
            }
            ast::Decl::Subroutine(s) => self.subroutine(s),
        }
    }

    fn const_array(&self, size: Option<&ast::Expr>, items: &[ast::ConstItem], name: &Ident) -> R<Vec<Word>> {
        let mut words = Vec::new();
        for item in items {
            match item {
                ast::ConstItem::Str { words: chars, .. } => words.extend_from_slice(chars),
                ast::ConstItem::Expr(e) => words.push(self.constant_word(e)?),
            }
        }
        if let Some(size) = size {
            let n = self.constant_word(size)?;
            if (n as usize) < words.len() {
                return Err(Diagnostic::new(
                    Code::ConstArraySize,
                    size.pos(),
                    format!("`{}` declares {n} words but is initialized with {}", name.name, words.len()),
                ));
            }
            words.resize(n as usize, 0);
        }
        Ok(words)
    }

    fn subroutine(&mut self, s: &ast::Subroutine) {
        let narrow = |a: &Self, size: &Option<ast::Expr>| -> Option<Word> {
            let r = size.as_ref().map(|e| a.constant_word(e)).transpose();
            r.unwrap_or_default()
        };
        let mut params = Vec::new();
        for p in &s.params {
            let kind = match p {
                ast::FormalParam::Word(_) => ParamKind::Word,
                ast::FormalParam::Port(_) => ParamKind::Port,
                ast::FormalParam::Array { size, .. } | ast::FormalParam::ConstArray { size, .. } => {
                    if let Some(Err(d)) = size.as_ref().map(|e| self.constant_word(e)) {
                        self.diags.push(d);
                    }
                    let n = narrow(self, size);
                    if matches!(p, ast::FormalParam::Array { .. }) {
                        ParamKind::Array { narrow: n }
                    } else {
                        ParamKind::ConstArray { narrow: n }
                    }
                }
            };
            params.push(kind);
        }

        let index = self.routines.len();
        self.routines.push(None);
        self.declare(&s.name, SymbolKind::Routine { index, function: s.is_function, params: params.clone() });

        self.locals = Some(HashMap::new());
        let mut slot: Word = 0;
        for (p, kind) in s.params.iter().zip(&params) {
            let sym = match kind {
                ParamKind::Word => SymbolKind::Word(WordLoc::Slot(slot)),
                ParamKind::Port => SymbolKind::Port(PortRef::Formal(slot)),
                ParamKind::Array { .. } => SymbolKind::Array { array: ArrayRef::Formal { slot }, writable: true },
                ParamKind::ConstArray { .. } => SymbolKind::Array { array: ArrayRef::Formal { slot }, writable: false },
            };
            slot += if matches!(kind, ParamKind::Array { .. } | ParamKind::ConstArray { .. }) { 2 } else { 1 };
            self.declare(p.name(), sym);
        }
        let param_slots = slot;
        for list in &s.locals {
            for w in list {
                match w {
                    ast::WordDecl::Scalar(name) => {
                        self.declare(name, SymbolKind::Word(WordLoc::Slot(slot)));
                        slot += 1;
                    }
                    ast::WordDecl::Array { name, size } => {
                        let len = match self.const_eval(size) {
                            Ok(v) => match v.as_constant() {
                                Some(n) => n,
                                None => {
                                    self.diags.push(Diagnostic::new(
                                        Code::LocalArraySize,
                                        size.pos(),
                                        format!("local array `{}` must have a dimension-independent size", name.name),
                                    ));
                                    0
                                }
                            },
                            Err(d) => {
                                self.diags.push(d);
                                0
                            }
                        };
                        self.declare(name, SymbolKind::Array { array: ArrayRef::Frame { slot, len }, writable: true });
                        slot = slot.saturating_add(len);
                    }
                }
            }
        }
        let body = self.block(&s.body);
        let result = match &s.result {
            Some(e) => {
                let r = self.expr(e);
                self.report(r)
            }
            None => None,
        };
        self.locals = None;
        self.routines[index] =
            Some(Routine { name: s.name.name.clone(), param_slots, local_slots: slot - param_slots, body, result });
    }

    // ---- expressions --------------------------------------------------------

    fn port(&self, id: &Ident) -> R<PortRef> {
        let sym = self.lookup(id)?;
        match sym.kind {
            SymbolKind::Port(p) => Ok(p),
            _ => Err(kind_error(id, sym, "a port")),
        }
    }

    fn place(&self, v: &ast::Variable) -> R<Place> {
        match v {
            ast::Variable::Name(id) => {
                let sym = self.lookup(id)?;
                match sym.kind {
                    SymbolKind::Word(loc) => Ok(loc.place()),
                    SymbolKind::Port(p) => Ok(Place::Port(p)),
                    _ => Err(kind_error(id, sym, "a word variable or port")),
                }
            }
            ast::Variable::Index(id, index) => {
                let sym = self.lookup(id)?;
                match sym.kind {
                    SymbolKind::Array { array, writable: true } => {
                        Ok(Place::Element(array, Box::new(self.expr(index)?)))
                    }
                    _ => Err(kind_error(id, sym, "a writable array")),
                }
            }
        }
    }

    fn expr(&self, e: &ast::Expr) -> R<Expr> {
        Ok(match e {
            ast::Expr::Number { value, .. } => Expr::Value(Affine::constant(*value)),
            ast::Expr::Name(id) => {
                let sym = self.lookup(id)?;
                match sym.kind {
                    SymbolKind::Const(v) => Expr::Value(v),
                    SymbolKind::Word(loc) => Expr::Load(loc.place()),
                    SymbolKind::Port(p) => Expr::Load(Place::Port(p)),
                    _ => return Err(kind_error(id, sym, "a word, constant, or port")),
                }
            }
            ast::Expr::Index(id, index) => {
                let sym = self.lookup(id)?;
                let array = match sym.kind {
                    SymbolKind::Array { array, .. } => array,
                    SymbolKind::ConstArray { id, len } => ArrayRef::Const { id, len },
                    _ => return Err(kind_error(id, sym, "an array")),
                };
                Expr::Load(Place::Element(array, Box::new(self.expr(index)?)))
            }
            ast::Expr::SizeOf(id) => {
                let sym = self.lookup(id)?;
                match sym.kind {
                    SymbolKind::Array { array: array @ ArrayRef::Formal { .. }, .. } => Expr::Length(array),
                    SymbolKind::Array { .. } | SymbolKind::ConstArray { .. } => Expr::Value(self.const_eval(e)?),
                    _ => return Err(kind_error(id, sym, "an array")),
                }
            }
            ast::Expr::Call { name, args } => {
                let sym = self.lookup(name)?;
                match &sym.kind {
                    SymbolKind::Routine { index, function: true, params } => {
                        Expr::Call { routine: *index, args: self.args(name, params, args)? }
                    }
                    SymbolKind::New => Expr::New(self.args(name, &NEW_PARAMS, args)?),
                    _ => return Err(kind_error(name, sym, "a function")),
                }
            }
            ast::Expr::Now(_) => Expr::Now,
            ast::Expr::Receive { port, target } => Expr::Receive {
                port: self.port(port)?,
                target: target.as_ref().map(|t| self.place(t).map(Box::new)).transpose()?,
            },
            ast::Expr::Paren(inner) => self.expr(inner)?,
            ast::Expr::Unary { op, operand, .. } => Expr::Unary(unary_op(*op), Box::new(self.expr(operand)?)),
            ast::Expr::Binary { op, signed, lhs, rhs, .. } => {
                Expr::Binary(binary_op(*op, *signed), Box::new(self.expr(lhs)?), Box::new(self.expr(rhs)?))
            }
        })
    }

    fn args(&self, callee: &Ident, params: &[ParamKind], actuals: &[ast::Expr]) -> R<Vec<Arg>> {
        if params.len() != actuals.len() {
            return Err(Diagnostic::new(
                Code::Arity,
                callee.pos,
                format!("`{}` takes {} parameters, {} given", callee.name, params.len(), actuals.len()),
            ));
        }
        let mismatch = |e: &ast::Expr, expected: &str| {
            Diagnostic::new(Code::ParamKind, e.pos(), format!("parameter of `{}` must be {expected}", callee.name))
        };
        params
            .iter()
            .zip(actuals)
            .map(|(param, actual)| match param {
                ParamKind::Word => {
                    if let ast::Expr::Name(id) = actual {
                        let sym = self.lookup(id)?;
                        if matches!(sym.kind, SymbolKind::Array { .. } | SymbolKind::ConstArray { .. }) {
                            return Err(mismatch(actual, "a word expression"));
                        }
                    }
                    Ok(Arg::Word(self.expr(actual)?))
                }
                ParamKind::Array { narrow } | ParamKind::ConstArray { narrow } => {
                    let read_only = matches!(param, ParamKind::ConstArray { .. });
                    let expected = if read_only { "an array or constant array" } else { "a word array" };
                    let (id, offset) = match actual {
                        ast::Expr::Name(id) => (id, None),
                        ast::Expr::Index(id, off) => (id, Some(off)),
                        _ => return Err(mismatch(actual, expected)),
                    };
                    let sym = self.lookup(id)?;
                    let array = match sym.kind {
                        SymbolKind::Array { array, writable } if writable || read_only => array,
                        SymbolKind::ConstArray { id, len } if read_only => ArrayRef::Const { id, len },
                        _ => return Err(mismatch(actual, expected)),
                    };
                    let offset = offset.map(|o| self.expr(o)).transpose()?;
                    Ok(Arg::Array { array, offset, narrow: *narrow })
                }
                ParamKind::Port => match actual {
                    ast::Expr::Name(id) => match self.lookup(id)?.kind {
                        SymbolKind::Port(p) => Ok(Arg::Port(p)),
                        _ => Err(mismatch(actual, "a port")),
                    },
                    _ => Err(mismatch(actual, "a port")),
                },
            })
            .collect()
    }

    fn asm_items(&self, items: &[ast::AsmItem]) -> R<Vec<AsmItem>> {
        items
            .iter()
            .map(|item| match item {
                ast::AsmItem::Constant { op, value } => {
                    let w = self.constant_word(value)?;
                    Ok(AsmItem::Word(op.map_or(w, |op| word::unary(unary_op(op), w))))
                }
                ast::AsmItem::Expr(e) => Ok(AsmItem::Expr(self.expr(e)?)),
            })
            .collect()
    }

    // ---- statements -----------------------------------------------------------

    fn block(&mut self, list: &[ast::Stmt]) -> Vec<Stmt> {
        list.iter().filter_map(|s| self.stmt(s)).collect()
    }

    fn stmt(&mut self, s: &ast::Stmt) -> Option<Stmt> {
        let r = match s {
            ast::Stmt::If { arms, otherwise, .. } => {
                let bodies: Vec<Vec<Stmt>> = arms.iter().map(|(_, body)| self.block(body)).collect();
                let otherwise = otherwise.as_ref().map(|b| self.block(b)).unwrap_or_default();
                arms.iter()
                    .map(|(c, _)| self.expr(c))
                    .collect::<R<Vec<_>>>()
                    .map(|conds| Stmt::If { arms: conds.into_iter().zip(bodies).collect(), otherwise })
            }
            ast::Stmt::Repeat { condition, count, body, until, .. } => {
                let body = self.block(body);
                (|| {
                    Ok(Stmt::Repeat {
                        condition: condition.as_ref().map(|c| self.expr(c)).transpose()?,
                        count: self.expr(count)?,
                        body,
                        until: until.as_ref().map(|u| self.expr(u)).transpose()?,
                    })
                })()
            }
            ast::Stmt::Next(id) => {
                if self.in_subroutine() {
                    Err(Diagnostic::new(
                        Code::TransitionInSub,
                        id.pos,
                        "transitions are not allowed inside subroutines",
                    ))
                } else {
                    self.lookup(id).and_then(|sym| match sym.kind {
                        SymbolKind::State(i) => Ok(Stmt::Next(i)),
                        _ => Err(kind_error(id, sym, "a state")),
                    })
                }
            }
            ast::Stmt::Assign { target, value, .. } => self.place(target).and_then(|place| match value {
                ast::AssignValue::Expr(e) => Ok(Stmt::Assign { place, value: self.expr(e)? }),
                ast::AssignValue::Asm(items) => Ok(Stmt::AssignAsm { place, items: self.asm_items(items)? }),
            }),
            ast::Stmt::Transmit { port, payload, .. } => self.port(port).and_then(|port| {
                let payload = match payload {
                    ast::Payload::Data(e) => Payload::Data(self.expr(e)?),
                    ast::Payload::End => Payload::End,
                    ast::Payload::Pause => Payload::Pause,
                };
                Ok(Stmt::Send { port, payload })
            }),
            ast::Stmt::Call { name, args } => self.lookup(name).and_then(|sym| match &sym.kind {
                SymbolKind::Routine { index, function: false, params } => {
                    Ok(Stmt::Call { routine: *index, args: self.args(name, params, args)? })
                }
                _ => Err(kind_error(name, sym, "a procedure")),
            }),
            ast::Stmt::Asm { items, .. } => self.asm_items(items).map(Stmt::Asm),
        };
        self.report(r)
    }

    // ---- main program ---------------------------------------------------------

    fn program(&mut self, p: &ast::Program) -> CheckedProgram {
        for d in &p.prelude {
            self.decl(d);
        }
        let h = &p.header;
        self.declare(&h.name, SymbolKind::Process);
        self.declare(&h.control_port, SymbolKind::Port(PortRef::Local(0)));
        if let Some(dim) = &h.dimension {
            self.declare(dim, SymbolKind::Const(Affine::DIMENSION));
        }
        for (i, s) in p.states.iter().enumerate() {
            self.declare(s, SymbolKind::State(i as Word));
        }
        for (i, port) in p.ports.iter().enumerate() {
            self.declare(port, SymbolKind::Port(PortRef::Local(i as Word + 1)));
        }
        for d in &p.decls {
            self.decl(d);
        }

        let init = self.block(&p.init);
        let transitions = if p.states.is_empty() {
            paths::check_reachable(&p.init)
        } else {
            paths::require_transition(&p.init, h.pos, "initialization")
        };
        self.report(transitions);

        let mut deadlines: Vec<Option<Expr>> = vec![None; p.states.len()];
        let mut per_state: Vec<Vec<(GuardKey, Pos)>> = vec![Vec::new(); p.states.len()];
        let mut guarded = Vec::new();
        for g in &p.guarded {
            let body = self.block(&g.body);
            let r = paths::require_transition(&g.body, g.pos, "guarded statement");
            self.report(r);
            let Some((states, guard, key, after)) = self.guarded_head(g) else { continue };
            for &s in &states {
                per_state[s as usize].push((key, g.pos));
                if let Some(e) = &after {
                    deadlines[s as usize] = Some(e.clone());
                }
            }
            guarded.push(Guarded { states, guard, body });
        }
        self.guard_rules(&p.states, &per_state);

        let (globals, data_size) = self.layout(h.pos);
        let routines = self.routines.drain(..).map(|r| r.unwrap_or_else(|| panic!("routine analyzed"))).collect();
        CheckedProgram {
            name: h.name.name.clone(),
            data_size,
            globals,
            const_arrays: std::mem::take(&mut self.const_arrays),
            states: p.states.iter().map(|s| s.name.clone()).collect(),
            ports: std::iter::once(&h.control_port).chain(&p.ports).map(|s| s.name.clone()).collect(),
            routines,
            init,
            guarded,
            deadlines,
        }
    }

    #[allow(clippy::type_complexity)]
    fn guarded_head(&mut self, g: &ast::GuardedState) -> Option<(Vec<Word>, Guard, GuardKey, Option<Expr>)> {
        let mut states = Vec::new();
        for id in &g.states {
            let r = self.lookup(id).and_then(|sym| match sym.kind {
                SymbolKind::State(i) => Ok(i),
                _ => Err(kind_error(id, sym, "a state")),
            });
            let i = self.report(r)?;
            if states.contains(&i) {
                self.diags.push(Diagnostic::new(Code::DupGuard, id.pos, format!("state `{}` listed twice", id.name)));
                return None;
            }
            states.push(i);
        }
        let local = |p: PortRef| match p {
            PortRef::Local(i) => i,
            PortRef::Formal(_) => unreachable!("no formal ports outside subroutines"),
        };
        let r = match &g.guard {
            None => Ok((Guard::Always, GuardKey::Always, None)),
            Some(ast::Guard::TransmitReady(p)) => {
                self.port(p).map(|p| (Guard::TransmitReady(local(p)), GuardKey::Transmit(local(p)), None))
            }
            Some(ast::Guard::Receive { port, target }) => self.port(port).and_then(|p| {
                let target = self.place(target)?;
                Ok((Guard::Receive { port: local(p), target }, GuardKey::Receive(local(p)), None))
            }),
            Some(ast::Guard::ReceiveEnd(p)) => {
                self.port(p).map(|p| (Guard::ReceiveEnd(local(p)), GuardKey::ReceiveEnd(local(p)), None))
            }
            Some(ast::Guard::After(e)) => self.expr(e).map(|e| (Guard::After, GuardKey::After, Some(e))),
        };
        let (guard, key, after) = self.report(r)?;
        Some((states, guard, key, after))
    }

    fn guard_rules(&mut self, states: &[Ident], per_state: &[Vec<(GuardKey, Pos)>]) {
        for (state, guards) in states.iter().zip(per_state) {
            for (i, (key, pos)) in guards.iter().enumerate() {
                let earlier = &guards[..i];
                match key {
                    GuardKey::Always => {}
                    GuardKey::After => {
                        if earlier.iter().any(|(k, _)| *k == GuardKey::After) {
                            self.diags.push(Diagnostic::new(
                                Code::DupExpire,
                                *pos,
                                format!("state `{}` already has an expiration guard", state.name),
                            ));
                        }
                    }
                    _ => {
                        if earlier.iter().any(|(k, _)| k == key) {
                            self.diags.push(Diagnostic::new(
                                Code::DupGuard,
                                *pos,
                                format!("state `{}` already checks this condition on this port", state.name),
                            ));
                        }
                    }
                }
                if let GuardKey::Receive(p) = key {
                    if !guards.iter().any(|(k, _)| *k == GuardKey::ReceiveEnd(*p)) {
                        self.diags.push(Diagnostic::new(
                            Code::EndGuard,
                            *pos,
                            format!("state `{}` receives data on this port but has no `? end` guard for it", state.name),
                        ));
                    }
                }
            }
        }
    }

    /// Dimension-independent variables first, so every scalar gets a fixed
    /// address; dimension-dependent arrays follow with affine bases.
    fn layout(&mut self, pos: Pos) -> (Vec<GlobalVar>, AffineSize) {
        let mut globals: Vec<GlobalVar> = self
            .vars
            .iter()
            .map(|(name, size)| GlobalVar { name: name.clone(), size: *size, base: Affine::ZERO })
            .collect();
        let mut fixed: u64 = 0;
        for g in globals.iter_mut().filter(|g| g.size.a == 0) {
            g.base = Affine::constant(fixed as Word);
            fixed += g.size.b as u64;
        }
        let (mut a, mut b) = (0u64, fixed);
        for g in globals.iter_mut().filter(|g| g.size.a != 0) {
            g.base = Affine { a: a as Word, b: b as Word };
            a += g.size.a as u64;
            b += g.size.b as u64;
        }
        if a > Word::MAX as u64 || b > Word::MAX as u64 {
            self.diags.push(Diagnostic::new(Code::DataSize, pos, "data memory size exceeds 32 bits"));
        }
        (globals, Affine { a: a as Word, b: b as Word })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum GuardKey {
    Always,
    Transmit(Word),
    Receive(Word),
    ReceiveEnd(Word),
    After,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lexer::tokenize;
    use crate::syntax::parse;

    fn check(src: &str) -> Result<CheckedProgram, Vec<Code>> {
        let tree = parse(&tokenize(src).unwrap()).unwrap();
        analyze(&tree).map_err(|ds| ds.into_iter().map(|d| d.code).collect())
    }

    fn codes(src: &str) -> Vec<Code> {
        check(src).unwrap_err()
    }

    #[test]
    fn affine_data_size() {
        let p = check("process p(c, dimension) word buf[2*dimension+3], x start stop").unwrap();
        assert_eq!(p.data_size, Affine { a: 2, b: 4 });
        // scalar first, then the dimension-dependent array
        assert_eq!(p.globals[1].base, Affine::constant(0));
        assert_eq!(p.globals[0].base, Affine::constant(1));
    }

    #[test]
    fn missing_end_guard() {
        let src = "process p(c) state run word v start next run on run \\ c ? v : next run stop";
        assert_eq!(codes(src), vec![Code::EndGuard]);
    }

    #[test]
    fn duplicate_expiration() {
        let src = "process p(c) state s start next s on s \\ after 5 : next s on s \\ after 9 : next s stop";
        assert_eq!(codes(src), vec![Code::DupExpire]);
    }

    #[test]
    fn transition_in_subroutine() {
        let src = "process p(c) state idle procedure q() do next idle return start next idle stop";
        assert_eq!(codes(src), vec![Code::TransitionInSub]);
    }

    #[test]
    fn recursion_rules() {
        check("procedure f(n) do if n then f(n - 1) done return process p(c) start f(3) stop").unwrap();
        let forward = "procedure f() do g() return procedure g() do return process p(c) start stop";
        assert_eq!(codes(forward), vec![Code::Undeclared]);
    }

    #[test]
    fn shadowing_rejected() {
        let src = "word x procedure f(x) do return process p(c) start stop";
        assert_eq!(codes(src), vec![Code::Redeclared]);
    }

    #[test]
    fn non_affine_sizes() {
        assert_eq!(codes("process p(c, d) word b[d*d] start stop"), vec![Code::NotAffine]);
        assert_eq!(codes("process p(c, d) word x, b[x] start stop"), vec![Code::ConstExpr]);
        assert_eq!(codes("process p(c, d) word b[4/0] start stop"), vec![Code::DivZero]);
        let p = check("const n = 4 process p(c, d) const m = n * d - 1 word b[(m + 1) << 1] start stop").unwrap();
        assert_eq!(p.data_size, Affine { a: 8, b: 0 });
    }

    #[test]
    fn const_arrays() {
        let p = check(r#"const s[] = "ab", 0 const t[5] = 1, 2 process p(c) start stop"#).unwrap();
        assert_eq!(p.const_arrays, vec![vec![97, 98, 0], vec![1, 2, 0, 0, 0]]);
        assert_eq!(codes(r#"const s[2] = "abc" process p(c) start stop"#), vec![Code::ConstArraySize]);
        assert_eq!(codes("const s[] = 1 const k = s[1] process p(c) start stop"), vec![Code::ConstIndex]);
    }

    #[test]
    fn parameter_matching() {
        let pre = "procedure f(a[], w, port q) do return word arr[3], x ";
        check(&format!("{pre} process p(c) port o start f(arr, x + 1, o) f(arr[1], 0, c) stop")).unwrap();
        assert_eq!(codes(&format!("{pre} process p(c) start f(arr, 1) stop")), vec![Code::Arity]);
        assert_eq!(codes(&format!("{pre} process p(c) start f(x, 1, c) stop")), vec![Code::ParamKind]);
        assert_eq!(codes(&format!("{pre} process p(c) start f(arr, arr, c) stop")), vec![Code::ParamKind]);
        assert_eq!(codes(&format!("{pre} process p(c) start f(arr, 1, x) stop")), vec![Code::ParamKind]);
        let konst = "const k[] = 1, 2 procedure f(a[]) do return procedure g(const a[]) do return";
        assert_eq!(codes(&format!("{konst} process p(c) start f(k) stop")), vec![Code::ParamKind]);
        check(&format!("{konst} word w[2] process p(c) start g(k) g(w) stop")).unwrap();
    }

    #[test]
    fn kinds() {
        assert_eq!(codes("const k = 1 process p(c) start k := 2 stop"), vec![Code::Kind]);
        assert_eq!(codes("word a[2] process p(c) start a := 2 stop"), vec![Code::Kind]);
        assert_eq!(codes("process p(c) state s start next c stop"), vec![Code::Kind]);
        assert_eq!(codes("word x process p(c) start x ! 1 stop"), vec![Code::Kind]);
        assert_eq!(codes("word x process p(c) start x := #x stop"), vec![Code::Kind]);
        assert_eq!(codes("function f() do return 1 process p(c) start f() stop"), vec![Code::Kind]);
        assert_eq!(codes("const k[] = 1 process p(c) start k[0] := 1 stop"), vec![Code::Kind]);
        assert_eq!(codes("process p(c) start x := 1 stop"), vec![Code::Undeclared]);
    }

    #[test]
    fn multiple_independent_errors() {
        let src = "process p(c) start a := 1 b := 2 stop";
        assert_eq!(codes(src), vec![Code::Undeclared, Code::Undeclared]);
    }

    #[test]
    fn guard_duplicates() {
        let dup = "process p(c) state s word v start next s on s \\ c ! : next s on s \\ c ! : next s stop";
        assert_eq!(codes(dup), vec![Code::DupGuard]);
        let two_bare = "process p(c) state s start next s on s : next s on s : next s stop";
        check(two_bare).unwrap();
        let multi = "process p(c) state a, b word v start next a \
                     on a, b \\ c ? v : next a on a \\ c ? end : next b stop";
        assert_eq!(codes(multi), vec![Code::EndGuard]);
    }

    #[test]
    fn zero_state_program_may_fall_through() {
        check("process p(c) word x start x := 1 stop").unwrap();
        assert_eq!(codes("process p(c) state s word x start x := 1 stop"), vec![Code::PathNoTransition]);
    }

    #[test]
    fn asm_constants() {
        let p = check("const ADD = 18 process p(c) word x start x := asm (1), (2), ADD asm -1, ~0 stop").unwrap();
        assert_eq!(p.init[1], Stmt::Asm(vec![AsmItem::Word(u32::MAX), AsmItem::Word(u32::MAX)]));
        assert_eq!(codes("word y process p(c) start asm y stop"), vec![Code::ConstExpr]);
    }

    #[test]
    fn dimension_is_an_ordinary_constant() {
        let p = check("process p(c, dim) const half = dim * 2 word x start x := half stop").unwrap();
        assert_eq!(p.init[0], Stmt::Assign { place: Place::Global(0), value: Expr::Value(Affine { a: 2, b: 0 }) });
    }

    #[test]
    fn user_may_replace_new() {
        check("function new(a, b) do return a process p(c) word x start x := new(1, 2) stop").unwrap();
        check(r#"const n[] = "w" process p(c) port q start q := new(n, 0, 0) stop"#).unwrap();
        assert_eq!(codes("process p(c) port q start q := new(1, 0, 0) stop"), vec![Code::ParamKind]);
    }

    #[test]
    fn layout_is_order_independent() {
        let a = check("process p(c, d) word x, b[d+2], y, z[3*d] start stop").unwrap();
        let b = check("process p(c, d) word z[3*d], y, b[d+2], x start stop").unwrap();
        assert_eq!(a.data_size, b.data_size);
        assert_eq!(a.data_size, Affine { a: 4, b: 4 });
    }

    #[test]
    fn idempotent() {
        let src = "procedure f(n) do return process p(c) state s word v start next s \
                   on s \\ c ? v : f(v) next s on s \\ c ? end : next s stop";
        assert_eq!(check(src), check(src));
    }
}
