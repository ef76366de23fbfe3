//! Renders a syntax tree back to source text that parses to an equal tree.

use std::fmt::Write;

use super::*;

pub fn unparse(p: &Program) -> String {
    let mut w = Writer { out: String::new(), indent: 0 };
    w.program(p);
    w.out
}

struct Writer {
    out: String,
    indent: usize,
}

fn string_literal(words: &[Word]) -> String {
    let mut s = String::from("\"");
    for &w in words {
        match char::from_u32(w) {
            Some('"') => s.push_str("\"\""),
            Some(c) => s.push(c),
            None => s.push(char::REPLACEMENT_CHARACTER),
        }
    }
    s.push('"');
    s
}

impl Writer {
    fn line(&mut self, text: &str) {
        for _ in 0..self.indent {
            self.out.push_str("  ");
        }
        self.out.push_str(text);
        self.out.push('\n');
    }

    fn program(&mut self, p: &Program) {
        for d in &p.prelude {
            self.decl(d);
        }
        let h = &p.header;
        let mut head = format!("process {}({}", h.name.name, h.control_port.name);
        if let Some(d) = &h.dimension {
            let _ = write!(head, ", {}", d.name);
        }
        head.push(')');
        self.line(&head);
        if !p.states.is_empty() {
            self.line(&format!("state {}", names(&p.states)));
        }
        if !p.ports.is_empty() {
            self.line(&format!("port {}", names(&p.ports)));
        }
        for d in &p.decls {
            self.decl(d);
        }
        self.line("start");
        self.indent += 1;
        self.statements(&p.init);
        self.indent -= 1;
        for g in &p.guarded {
            let mut head = format!("on {}", names(&g.states));
            if let Some(guard) = &g.guard {
                head.push_str(" \\ ");
                head.push_str(&self.guard(guard));
            }
            head.push_str(" :");
            self.line(&head);
            self.indent += 1;
            self.statements(&g.body);
            self.indent -= 1;
        }
        self.line("stop");
    }

    fn guard(&self, g: &Guard) -> String {
        match g {
            Guard::TransmitReady(p) => format!("{} !", p.name),
            Guard::Receive { port, target } => format!("{} ? {}", port.name, variable(target)),
            Guard::ReceiveEnd(p) => format!("{} ? end", p.name),
            Guard::After(e) => format!("after {}", expr(e)),
        }
    }

    fn decl(&mut self, d: &Decl) {
        match d {
            Decl::Const { name, value } => self.line(&format!("const {} = {}", name.name, expr(value))),
            Decl::ConstArray { name, size, items } => {
                let size = size.as_ref().map(expr).unwrap_or_default();
                let items: Vec<String> = items
                    .iter()
                    .map(|i| match i {
                        ConstItem::Expr(e) => expr(e),
                        ConstItem::Str { words, .. } => string_literal(words),
                    })
                    .collect();
                self.line(&format!("const {}[{}] = {}", name.name, size, items.join(", ")));
            }
            Decl::Words(list) => self.line(&words_decl(list)),
            Decl::Subroutine(s) => {
                let params: Vec<String> = s
                    .params
                    .iter()
                    .map(|p| match p {
                        FormalParam::ConstArray { name, size } => {
                            format!("const {}[{}]", name.name, size.as_ref().map(expr).unwrap_or_default())
                        }
                        FormalParam::Array { name, size } => {
                            format!("{}[{}]", name.name, size.as_ref().map(expr).unwrap_or_default())
                        }
                        FormalParam::Word(n) => n.name.clone(),
                        FormalParam::Port(n) => format!("port {}", n.name),
                    })
                    .collect();
                let kw = if s.is_function { "function" } else { "procedure" };
                self.line(&format!("{kw} {}({})", s.name.name, params.join(", ")));
                self.indent += 1;
                for l in &s.locals {
                    self.line(&words_decl(l));
                }
                self.indent -= 1;
                self.line("do");
                self.indent += 1;
                self.statements(&s.body);
                self.indent -= 1;
                match &s.result {
                    Some(e) => self.line(&format!("return {}", expr(e))),
                    None => self.line("return"),
                }
            }
        }
    }

    fn statements(&mut self, list: &[Stmt]) {
        for s in list {
            self.statement(s);
        }
    }

    fn statement(&mut self, s: &Stmt) {
        match s {
            Stmt::If { arms, otherwise, .. } => {
                for (i, (cond, body)) in arms.iter().enumerate() {
                    let kw = if i == 0 { "if" } else { "elseif" };
                    self.line(&format!("{kw} {} then", expr(cond)));
                    self.indent += 1;
                    self.statements(body);
                    self.indent -= 1;
                }
                if let Some(body) = otherwise {
                    self.line("else");
                    self.indent += 1;
                    self.statements(body);
                    self.indent -= 1;
                }
                self.line("done");
            }
            Stmt::Repeat { condition, count, body, until, .. } => {
                let mut head = String::new();
                if let Some(c) = condition {
                    let _ = write!(head, "while {} ", expr(c));
                }
                let _ = write!(head, "repeat {} times", expr(count));
                self.line(&head);
                self.indent += 1;
                self.statements(body);
                self.indent -= 1;
                match until {
                    Some(u) => self.line(&format!("until {}", expr(u))),
                    None => self.line("done"),
                }
            }
            Stmt::Next(s) => self.line(&format!("next {}", s.name)),
            Stmt::Assign { target, value, .. } => {
                let rhs = match value {
                    AssignValue::Expr(e) => expr(e),
                    AssignValue::Asm(items) => asm(items),
                };
                self.line(&format!("{} := {}", variable(target), rhs));
            }
            Stmt::Transmit { port, payload, .. } => {
                let rhs = match payload {
                    Payload::Data(e) => expr(e),
                    Payload::End => "end".to_string(),
                    Payload::Pause => "pause".to_string(),
                };
                self.line(&format!("{} ! {}", port.name, rhs));
            }
            Stmt::Call { name, args } => self.line(&format!("{}({})", name.name, exprs(args))),
            Stmt::Asm { items, .. } => self.line(&asm(items)),
        }
    }
}

fn names(list: &[Ident]) -> String {
    list.iter().map(|i| i.name.as_str()).collect::<Vec<_>>().join(", ")
}

fn words_decl(list: &[WordDecl]) -> String {
    let parts: Vec<String> = list
        .iter()
        .map(|d| match d {
            WordDecl::Scalar(n) => n.name.clone(),
            WordDecl::Array { name, size } => format!("{}[{}]", name.name, expr(size)),
        })
        .collect();
    format!("word {}", parts.join(", "))
}

fn asm(items: &[AsmItem]) -> String {
    let parts: Vec<String> = items
        .iter()
        .map(|i| match i {
            AsmItem::Constant { op, value } => format!("{}{}", op.map(unary).unwrap_or(""), expr(value)),
            AsmItem::Expr(e) => format!("({})", expr(e)),
        })
        .collect();
    format!("asm {}", parts.join(", "))
}

fn variable(v: &Variable) -> String {
    match v {
        Variable::Name(n) => n.name.clone(),
        Variable::Index(n, i) => format!("{}[{}]", n.name, expr(i)),
    }
}

fn exprs(list: &[Expr]) -> String {
    list.iter().map(expr).collect::<Vec<_>>().join(", ")
}

fn unary(op: UnaryOp) -> &'static str {
    match op {
        UnaryOp::Minus => "-",
        UnaryOp::Tilde => "~",
        UnaryOp::Not => "not ",
    }
}

fn binary(op: BinOp) -> &'static str {
    match op {
        BinOp::Eq => "=",
        BinOp::Ne => "<>",
        BinOp::Lt => "<",
        BinOp::Gt => ">",
        BinOp::Le => "<=",
        BinOp::Ge => ">=",
        BinOp::Add => "+",
        BinOp::Sub => "-",
        BinOp::Bar => "|",
        BinOp::Caret => "^",
        BinOp::Or => "or",
        BinOp::Mul => "*",
        BinOp::Amp => "&",
        BinOp::And => "and",
        BinOp::Shl => "<<",
        BinOp::Div => "/",
        BinOp::Mod => "%",
        BinOp::Shr => ">>",
    }
}

/// Binary nodes come straight from the grammar's precedence levels, so
/// printing operands in order with single spaces reproduces the tree.
pub(super) fn expr(e: &Expr) -> String {
    match e {
        Expr::Number { value, .. } => value.to_string(),
        Expr::Name(n) => n.name.clone(),
        Expr::Index(n, i) => format!("{}[{}]", n.name, expr(i)),
        Expr::SizeOf(n) => format!("#{}", n.name),
        Expr::Call { name, args } => format!("{}({})", name.name, exprs(args)),
        Expr::Now(_) => "now".to_string(),
        Expr::Receive { port, target } => match target {
            Some(v) => format!("{} ? {}", port.name, variable(v)),
            None => format!("{} ? end", port.name),
        },
        Expr::Paren(inner) => format!("({})", expr(inner)),
        Expr::Unary { op, operand, .. } => format!("{}{}", unary(*op), expr(operand)),
        Expr::Binary { op, signed, lhs, rhs, .. } => {
            format!("{} {}{} {}", expr(lhs), binary(*op), if *signed { "$" } else { "" }, expr(rhs))
        }
    }
}
