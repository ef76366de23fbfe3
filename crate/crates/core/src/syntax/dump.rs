//! Indented debug rendering of the syntax tree (`--dump-ast`).
//! The format is for humans and may change.

use super::unparse::expr;
use super::*;

pub fn dump(p: &Program) -> String {
    let mut out = String::new();
    let mut put = |depth: usize, text: String| {
        out.push_str(&"  ".repeat(depth));
        out.push_str(&text);
        out.push('\n');
    };
    put(0, format!("Program {} @{}", p.header.name.name, p.header.pos));
    put(1, format!("ControlPort {}", p.header.control_port.name));
    if let Some(d) = &p.header.dimension {
        put(1, format!("Dimension {}", d.name));
    }
    for d in p.prelude.iter().chain(&p.decls) {
        decl(&mut put, 1, d);
    }
    for s in &p.states {
        put(1, format!("State {}", s.name));
    }
    for s in &p.ports {
        put(1, format!("Port {}", s.name));
    }
    put(1, "Init".to_string());
    stmts(&mut put, 2, &p.init);
    for g in &p.guarded {
        let states: Vec<&str> = g.states.iter().map(|s| s.name.as_str()).collect();
        let guard = match &g.guard {
            None => "always".to_string(),
            Some(Guard::TransmitReady(p)) => format!("TransmitReady({})", p.name),
            Some(Guard::Receive { port, target }) => format!("Receive({}, {})", port.name, target.ident().name),
            Some(Guard::ReceiveEnd(p)) => format!("ReceiveEnd({})", p.name),
            Some(Guard::After(e)) => format!("After({})", expr(e)),
        };
        put(1, format!("Guarded [{}] {} @{}", states.join(", "), guard, g.pos));
        stmts(&mut put, 2, &g.body);
    }
    out
}

fn decl(put: &mut impl FnMut(usize, String), depth: usize, d: &Decl) {
    match d {
        Decl::Const { name, value } => put(depth, format!("Const {} = {}", name.name, expr(value))),
        Decl::ConstArray { name, size, items } => {
            let size = size.as_ref().map(expr).unwrap_or_else(|| "inferred".into());
            put(depth, format!("ConstArray {}[{}] ({} items)", name.name, size, items.len()));
        }
        Decl::Words(list) => {
            for w in list {
                match w {
                    WordDecl::Scalar(n) => put(depth, format!("Word {}", n.name)),
                    WordDecl::Array { name, size } => put(depth, format!("Array {}[{}]", name.name, expr(size))),
                }
            }
        }
        Decl::Subroutine(s) => {
            let kind = if s.is_function { "Function" } else { "Procedure" };
            put(depth, format!("{kind} {} ({} params)", s.name.name, s.params.len()));
            for l in &s.locals {
                decl(put, depth + 1, &Decl::Words(l.clone()));
            }
            stmts(put, depth + 1, &s.body);
            if let Some(r) = &s.result {
                put(depth + 1, format!("Result {}", expr(r)));
            }
        }
    }
}

fn stmts(put: &mut impl FnMut(usize, String), depth: usize, list: &[Stmt]) {
    for s in list {
        match s {
            Stmt::If { arms, otherwise, .. } => {
                put(depth, "If".into());
                for (c, body) in arms {
                    put(depth + 1, format!("Arm {}", expr(c)));
                    stmts(put, depth + 2, body);
                }
                if let Some(body) = otherwise {
                    put(depth + 1, "Else".into());
                    stmts(put, depth + 2, body);
                }
            }
            Stmt::Repeat { condition, count, body, until, .. } => {
                let mut head = format!("Repeat max={}", expr(count));
                if let Some(c) = condition {
                    head.push_str(&format!(" while={}", expr(c)));
                }
                if let Some(u) = until {
                    head.push_str(&format!(" until={}", expr(u)));
                }
                put(depth, head);
                stmts(put, depth + 1, body);
            }
            Stmt::Next(s) => put(depth, format!("Next {}", s.name)),
            Stmt::Assign { target, value, .. } => {
                let rhs = match value {
                    AssignValue::Expr(e) => expr(e),
                    AssignValue::Asm(items) => format!("asm[{}]", items.len()),
                };
                put(depth, format!("Assign {} := {}", target.ident().name, rhs));
            }
            Stmt::Transmit { port, payload, .. } => {
                let what = match payload {
                    Payload::Data(e) => expr(e),
                    Payload::End => "end".into(),
                    Payload::Pause => "pause".into(),
                };
                put(depth, format!("Transmit {} ! {}", port.name, what));
            }
            Stmt::Call { name, args } => put(depth, format!("Call {} ({} args)", name.name, args.len())),
            Stmt::Asm { items, .. } => put(depth, format!("Asm ({} items)", items.len())),
        }
    }
}
