use crate::diag::{Code, Diagnostic, Pos};
use crate::lexer::{Reserved, Special, Token, TokenKind};

use super::*;

type PResult<T> = Result<T, Diagnostic>;

/// Parses a complete program. Stops at the first error.
pub fn parse(tokens: &[Token]) -> Result<Program, Diagnostic> {
    let mut p = Parser { toks: tokens, i: 0 };
    let program = p.program()?;
    if let Some(t) = p.peek() {
        return Err(p.unexpected(t, &["end of input"]));
    }
    Ok(program)
}

struct Parser<'t> {
    toks: &'t [Token],
    i: usize,
}

fn describe(t: &Token) -> String {
    match &t.kind {
        TokenKind::Identifier(n) => format!("identifier `{n}`"),
        TokenKind::Number(_) => format!("number `{}`", t.text),
        TokenKind::Str(_) => "string".to_string(),
        _ => format!("`{}`", t.text),
    }
}

impl<'t> Parser<'t> {
    fn peek(&self) -> Option<&'t Token> {
        self.toks.get(self.i)
    }

    fn peek_kind(&self) -> Option<&'t TokenKind> {
        self.peek().map(|t| &t.kind)
    }

    fn peek_second_kind(&self) -> Option<&'t TokenKind> {
        self.toks.get(self.i + 1).map(|t| &t.kind)
    }

    fn here(&self) -> Pos {
        match self.peek() {
            Some(t) => t.pos,
            None => match self.toks.last() {
                Some(t) => {
                    let mut pos = t.pos;
                    for c in t.text.chars() {
                        if c == '\n' {
                            pos.line += 1;
                            pos.column = 1;
                        } else {
                            pos.column += 1;
                        }
                    }
                    pos
                }
                None => Pos::new(1, 1),
            },
        }
    }

    fn unexpected(&self, found: &Token, expected: &[&str]) -> Diagnostic {
        Diagnostic::new(
            Code::Parse,
            found.pos,
            format!("expected {}, found {}", expected.join(" or "), describe(found)),
        )
    }

    fn error(&self, expected: &[&str]) -> Diagnostic {
        match self.peek() {
            Some(t) => self.unexpected(t, expected),
            None => Diagnostic::new(
                Code::Parse,
                self.here(),
                format!("expected {}, found end of input", expected.join(" or ")),
            ),
        }
    }

    fn at_special(&self, s: Special) -> bool {
        self.peek_kind() == Some(&TokenKind::Special(s))
    }

    fn at_reserved(&self, r: Reserved) -> bool {
        self.peek_kind() == Some(&TokenKind::Reserved(r))
    }

    fn eat_special(&mut self, s: Special) -> bool {
        let hit = self.at_special(s);
        if hit {
            self.i += 1;
        }
        hit
    }

    fn eat_reserved(&mut self, r: Reserved) -> bool {
        let hit = self.at_reserved(r);
        if hit {
            self.i += 1;
        }
        hit
    }

    fn expect_special(&mut self, s: Special) -> PResult<Pos> {
        let pos = self.here();
        if self.eat_special(s) {
            Ok(pos)
        } else {
            Err(self.error(&[&format!("`{}`", s.as_str())]))
        }
    }

    fn expect_reserved(&mut self, r: Reserved) -> PResult<Pos> {
        let pos = self.here();
        if self.eat_reserved(r) {
            Ok(pos)
        } else {
            Err(self.error(&[&format!("`{}`", r.as_str())]))
        }
    }

    fn ident(&mut self) -> PResult<Ident> {
        match self.peek() {
            Some(Token { kind: TokenKind::Identifier(name), pos, .. }) => {
                self.i += 1;
                Ok(Ident { name: name.clone(), pos: *pos })
            }
            _ => Err(self.error(&["identifier"])),
        }
    }

    fn at_ident(&self) -> bool {
        matches!(self.peek_kind(), Some(TokenKind::Identifier(_)))
    }

    // ---- declarations -------------------------------------------------

    fn program(&mut self) -> PResult<Program> {
        let prelude = self.decls()?;
        let pos = self.expect_reserved(Reserved::Process)?;
        let name = self.ident()?;
        self.expect_special(Special::LParen)?;
        let control_port = self.ident()?;
        let dimension = if self.eat_special(Special::Comma) { Some(self.ident()?) } else { None };
        self.expect_special(Special::RParen)?;
        let header = Header { name, control_port, dimension, pos };

        let states = if self.eat_reserved(Reserved::State) { self.ident_list()? } else { Vec::new() };
        let ports = if self.eat_reserved(Reserved::Port) { self.ident_list()? } else { Vec::new() };
        let decls = self.decls()?;
        self.expect_reserved(Reserved::Start)?;
        let init = self.statements()?;
        let mut guarded = Vec::new();
        while self.at_reserved(Reserved::On) {
            guarded.push(self.guarded_state()?);
        }
        if !self.at_reserved(Reserved::Stop) {
            return Err(self.error(&["statement", "`on`", "`stop`"]));
        }
        self.i += 1;
        Ok(Program { prelude, header, states, ports, decls, init, guarded })
    }

    fn ident_list(&mut self) -> PResult<Vec<Ident>> {
        let mut list = vec![self.ident()?];
        while self.eat_special(Special::Comma) {
            list.push(self.ident()?);
        }
        Ok(list)
    }

    fn decls(&mut self) -> PResult<Vec<Decl>> {
        let mut decls = Vec::new();
        loop {
            match self.peek_kind() {
                Some(TokenKind::Reserved(Reserved::Const)) => decls.push(self.const_def()?),
                Some(TokenKind::Reserved(Reserved::Word)) => decls.push(Decl::Words(self.words_decl()?)),
                Some(TokenKind::Reserved(Reserved::Procedure)) => {
                    decls.push(Decl::Subroutine(self.subroutine(false)?))
                }
                Some(TokenKind::Reserved(Reserved::Function)) => {
                    decls.push(Decl::Subroutine(self.subroutine(true)?))
                }
                _ => return Ok(decls),
            }
        }
    }

    fn const_def(&mut self) -> PResult<Decl> {
        self.expect_reserved(Reserved::Const)?;
        let name = self.ident()?;
        if self.eat_special(Special::Equal) {
            let value = self.expression()?;
            return Ok(Decl::Const { name, value });
        }
        if !self.eat_special(Special::LBracket) {
            return Err(self.error(&["`=`", "`[`"]));
        }
        let size = if self.at_special(Special::RBracket) { None } else { Some(self.expression()?) };
        self.expect_special(Special::RBracket)?;
        self.expect_special(Special::Equal)?;
        let mut items = vec![self.const_item()?];
        while self.eat_special(Special::Comma) {
            items.push(self.const_item()?);
        }
        Ok(Decl::ConstArray { name, size, items })
    }

    fn const_item(&mut self) -> PResult<ConstItem> {
        if let Some(Token { kind: TokenKind::Str(words), pos, .. }) = self.peek() {
            self.i += 1;
            return Ok(ConstItem::Str { words: words.clone(), pos: *pos });
        }
        Ok(ConstItem::Expr(self.expression()?))
    }

    fn words_decl(&mut self) -> PResult<Vec<WordDecl>> {
        self.expect_reserved(Reserved::Word)?;
        let mut list = vec![self.word_decl()?];
        while self.eat_special(Special::Comma) {
            list.push(self.word_decl()?);
        }
        Ok(list)
    }

    fn word_decl(&mut self) -> PResult<WordDecl> {
        let name = self.ident()?;
        if self.eat_special(Special::LBracket) {
            let size = self.expression()?;
            self.expect_special(Special::RBracket)?;
            Ok(WordDecl::Array { name, size })
        } else {
            Ok(WordDecl::Scalar(name))
        }
    }

    fn subroutine(&mut self, is_function: bool) -> PResult<Subroutine> {
        self.i += 1; // `procedure` / `function`
        let name = self.ident()?;
        self.expect_special(Special::LParen)?;
        let mut params = Vec::new();
        if !self.at_special(Special::RParen) {
            params.push(self.formal()?);
            while self.eat_special(Special::Comma) {
                params.push(self.formal()?);
            }
        }
        self.expect_special(Special::RParen)?;
        let mut locals = Vec::new();
        while self.at_reserved(Reserved::Word) {
            locals.push(self.words_decl()?);
        }
        if !self.at_reserved(Reserved::Do) {
            return Err(self.error(&["`word`", "`do`"]));
        }
        self.i += 1;
        let body = self.statements()?;
        if !self.at_reserved(Reserved::Return) {
            return Err(self.error(&["statement", "`return`"]));
        }
        self.i += 1;
        let result = if is_function { Some(self.expression()?) } else { None };
        Ok(Subroutine { name, params, locals, body, result, is_function })
    }

    fn optional_size(&mut self) -> PResult<Option<Expr>> {
        self.expect_special(Special::LBracket)?;
        let size = if self.at_special(Special::RBracket) { None } else { Some(self.expression()?) };
        self.expect_special(Special::RBracket)?;
        Ok(size)
    }

    fn formal(&mut self) -> PResult<FormalParam> {
        if self.eat_reserved(Reserved::Const) {
            let name = self.ident()?;
            let size = self.optional_size()?;
            return Ok(FormalParam::ConstArray { name, size });
        }
        if self.eat_reserved(Reserved::Port) {
            return Ok(FormalParam::Port(self.ident()?));
        }
        if !self.at_ident() {
            return Err(self.error(&["`const`", "`port`", "identifier"]));
        }
        let name = self.ident()?;
        if self.at_special(Special::LBracket) {
            let size = self.optional_size()?;
            Ok(FormalParam::Array { name, size })
        } else {
            Ok(FormalParam::Word(name))
        }
    }

    // ---- main program ---------------------------------------------------

    fn guarded_state(&mut self) -> PResult<GuardedState> {
        let pos = self.expect_reserved(Reserved::On)?;
        let states = self.ident_list()?;
        let guard = if self.eat_special(Special::Backslash) { Some(self.guard()?) } else { None };
        self.expect_special(Special::Colon)?;
        let body = self.statements()?;
        Ok(GuardedState { states, guard, body, pos })
    }

    fn guard(&mut self) -> PResult<Guard> {
        if self.eat_reserved(Reserved::After) {
            return Ok(Guard::After(self.expression()?));
        }
        if !self.at_ident() {
            return Err(self.error(&["identifier", "`after`"]));
        }
        let port = self.ident()?;
        if self.eat_special(Special::Bang) {
            return Ok(Guard::TransmitReady(port));
        }
        if self.eat_special(Special::Question) {
            return Ok(match self.reception_target()? {
                Some(target) => Guard::Receive { port, target },
                None => Guard::ReceiveEnd(port),
            });
        }
        Err(self.error(&["`!`", "`?`"]))
    }

    fn reception_target(&mut self) -> PResult<Option<Variable>> {
        if self.eat_reserved(Reserved::End) {
            return Ok(None);
        }
        if !self.at_ident() {
            return Err(self.error(&["`end`", "identifier"]));
        }
        Ok(Some(self.variable()?))
    }

    fn variable(&mut self) -> PResult<Variable> {
        let name = self.ident()?;
        if self.eat_special(Special::LBracket) {
            let index = self.expression()?;
            self.expect_special(Special::RBracket)?;
            Ok(Variable::Index(name, Box::new(index)))
        } else {
            Ok(Variable::Name(name))
        }
    }

    // ---- statements -------------------------------------------------------

    fn at_statement(&self) -> bool {
        matches!(
            self.peek_kind(),
            Some(TokenKind::Identifier(_))
                | Some(TokenKind::Reserved(
                    Reserved::If | Reserved::While | Reserved::Repeat | Reserved::Next | Reserved::Asm
                ))
        )
    }

    fn statements(&mut self) -> PResult<Vec<Stmt>> {
        let mut list = Vec::new();
        while self.at_statement() {
            list.push(self.statement()?);
        }
        Ok(list)
    }

    fn statement(&mut self) -> PResult<Stmt> {
        let pos = self.here();
        match self.peek_kind() {
            Some(TokenKind::Reserved(Reserved::If)) => self.conditional(),
            Some(TokenKind::Reserved(Reserved::While | Reserved::Repeat)) => self.repetition(),
            Some(TokenKind::Reserved(Reserved::Next)) => {
                self.i += 1;
                Ok(Stmt::Next(self.ident()?))
            }
            Some(TokenKind::Reserved(Reserved::Asm)) => {
                let items = self.inline_asm()?;
                Ok(Stmt::Asm { items, pos })
            }
            _ => match self.peek_second_kind() {
                Some(TokenKind::Special(Special::Assign | Special::LBracket)) => {
                    let target = self.variable()?;
                    self.expect_special(Special::Assign)?;
                    let value = if self.at_reserved(Reserved::Asm) {
                        AssignValue::Asm(self.inline_asm()?)
                    } else {
                        AssignValue::Expr(self.expression()?)
                    };
                    Ok(Stmt::Assign { target, value, pos })
                }
                Some(TokenKind::Special(Special::Bang)) => {
                    let port = self.ident()?;
                    self.i += 1;
                    let payload = if self.eat_reserved(Reserved::End) {
                        Payload::End
                    } else if self.eat_reserved(Reserved::Pause) {
                        Payload::Pause
                    } else {
                        Payload::Data(self.expression()?)
                    };
                    Ok(Stmt::Transmit { port, payload, pos })
                }
                Some(TokenKind::Special(Special::LParen)) => {
                    let name = self.ident()?;
                    let args = self.actuals()?;
                    Ok(Stmt::Call { name, args })
                }
                _ => {
                    self.i += 1;
                    Err(self.error(&["`:=`", "`[`", "`!`", "`(`"]))
                }
            },
        }
    }

    fn conditional(&mut self) -> PResult<Stmt> {
        let pos = self.expect_reserved(Reserved::If)?;
        let mut arms = Vec::new();
        loop {
            let cond = self.expression()?;
            self.expect_reserved(Reserved::Then)?;
            let body = self.statements()?;
            arms.push((cond, body));
            if !self.eat_reserved(Reserved::Elseif) {
                break;
            }
        }
        let otherwise = if self.eat_reserved(Reserved::Else) { Some(self.statements()?) } else { None };
        if !self.eat_reserved(Reserved::Done) {
            return Err(self.error(&["statement", "`elseif`", "`else`", "`done`"]));
        }
        Ok(Stmt::If { arms, otherwise, pos })
    }

    fn repetition(&mut self) -> PResult<Stmt> {
        let pos = self.here();
        let condition = if self.eat_reserved(Reserved::While) { Some(self.expression()?) } else { None };
        self.expect_reserved(Reserved::Repeat)?;
        let count = self.expression()?;
        self.expect_reserved(Reserved::Times)?;
        let body = self.statements()?;
        let until = if self.eat_reserved(Reserved::Done) {
            None
        } else if self.eat_reserved(Reserved::Until) {
            Some(self.expression()?)
        } else {
            return Err(self.error(&["statement", "`done`", "`until`"]));
        };
        Ok(Stmt::Repeat { condition, count, body, until, pos })
    }

    fn inline_asm(&mut self) -> PResult<Vec<AsmItem>> {
        self.expect_reserved(Reserved::Asm)?;
        let mut items = vec![self.single_asm()?];
        while self.eat_special(Special::Comma) {
            items.push(self.single_asm()?);
        }
        Ok(items)
    }

    fn single_asm(&mut self) -> PResult<AsmItem> {
        if self.eat_special(Special::LParen) {
            let e = self.expression()?;
            self.expect_special(Special::RParen)?;
            return Ok(AsmItem::Expr(e));
        }
        let op = self.unary_op();
        let pos = self.here();
        let value = match self.peek_kind() {
            Some(TokenKind::Number(value)) => {
                self.i += 1;
                Expr::Number { value: *value, pos }
            }
            Some(TokenKind::Special(Special::Hash)) => {
                self.i += 1;
                Expr::SizeOf(self.ident()?)
            }
            Some(TokenKind::Identifier(_)) => {
                let name = self.ident()?;
                if self.eat_special(Special::LBracket) {
                    let index = self.expression()?;
                    self.expect_special(Special::RBracket)?;
                    Expr::Index(name, Box::new(index))
                } else {
                    Expr::Name(name)
                }
            }
            _ => return Err(self.error(&["constant", "`(`"])),
        };
        Ok(AsmItem::Constant { op, value })
    }

    fn actuals(&mut self) -> PResult<Vec<Expr>> {
        self.expect_special(Special::LParen)?;
        let mut args = Vec::new();
        if !self.at_special(Special::RParen) {
            args.push(self.expression()?);
            while self.eat_special(Special::Comma) {
                args.push(self.expression()?);
            }
        }
        self.expect_special(Special::RParen)?;
        Ok(args)
    }

    // ---- expressions -------------------------------------------------------

    fn signed_suffix(&mut self, op: BinOp) -> bool {
        op.accepts_signed() && self.eat_special(Special::Dollar)
    }

    fn expression(&mut self) -> PResult<Expr> {
        let lhs = self.simple_expr()?;
        let pos = self.here();
        let op = match self.peek_kind() {
            Some(TokenKind::Special(Special::Equal)) => BinOp::Eq,
            Some(TokenKind::Special(Special::NotEqual)) => BinOp::Ne,
            Some(TokenKind::Special(Special::Less)) => BinOp::Lt,
            Some(TokenKind::Special(Special::Greater)) => BinOp::Gt,
            Some(TokenKind::Special(Special::LessEqual)) => BinOp::Le,
            Some(TokenKind::Special(Special::GreaterEqual)) => BinOp::Ge,
            _ => return Ok(lhs),
        };
        self.i += 1;
        let signed = self.signed_suffix(op);
        let rhs = self.simple_expr()?;
        Ok(Expr::Binary { op, signed, lhs: Box::new(lhs), rhs: Box::new(rhs), pos })
    }

    fn simple_expr(&mut self) -> PResult<Expr> {
        let mut lhs = self.term()?;
        loop {
            let pos = self.here();
            let op = match self.peek_kind() {
                Some(TokenKind::Special(Special::Plus)) => BinOp::Add,
                Some(TokenKind::Special(Special::Minus)) => BinOp::Sub,
                Some(TokenKind::Special(Special::Bar)) => BinOp::Bar,
                Some(TokenKind::Special(Special::Caret)) => BinOp::Caret,
                Some(TokenKind::Reserved(Reserved::Or)) => BinOp::Or,
                _ => return Ok(lhs),
            };
            self.i += 1;
            let rhs = self.term()?;
            lhs = Expr::Binary { op, signed: false, lhs: Box::new(lhs), rhs: Box::new(rhs), pos };
        }
    }

    fn term(&mut self) -> PResult<Expr> {
        let mut lhs = self.factor()?;
        loop {
            let pos = self.here();
            let op = match self.peek_kind() {
                Some(TokenKind::Special(Special::Star)) => BinOp::Mul,
                Some(TokenKind::Special(Special::Amp)) => BinOp::Amp,
                Some(TokenKind::Reserved(Reserved::And)) => BinOp::And,
                Some(TokenKind::Special(Special::ShiftLeft)) => BinOp::Shl,
                Some(TokenKind::Special(Special::Slash)) => BinOp::Div,
                Some(TokenKind::Special(Special::Percent)) => BinOp::Mod,
                Some(TokenKind::Special(Special::ShiftRight)) => BinOp::Shr,
                _ => return Ok(lhs),
            };
            self.i += 1;
            let signed = self.signed_suffix(op);
            let rhs = self.factor()?;
            lhs = Expr::Binary { op, signed, lhs: Box::new(lhs), rhs: Box::new(rhs), pos };
        }
    }

    fn unary_op(&mut self) -> Option<UnaryOp> {
        let op = match self.peek_kind() {
            Some(TokenKind::Special(Special::Minus)) => UnaryOp::Minus,
            Some(TokenKind::Special(Special::Tilde)) => UnaryOp::Tilde,
            Some(TokenKind::Reserved(Reserved::Not)) => UnaryOp::Not,
            _ => return None,
        };
        self.i += 1;
        Some(op)
    }

    fn factor(&mut self) -> PResult<Expr> {
        let pos = self.here();
        match self.unary_op() {
            Some(op) => {
                let operand = self.primary()?;
                Ok(Expr::Unary { op, operand: Box::new(operand), pos })
            }
            None => self.primary(),
        }
    }

    fn primary(&mut self) -> PResult<Expr> {
        let pos = self.here();
        match self.peek_kind() {
            Some(TokenKind::Number(value)) => {
                self.i += 1;
                Ok(Expr::Number { value: *value, pos })
            }
            Some(TokenKind::Special(Special::Hash)) => {
                self.i += 1;
                Ok(Expr::SizeOf(self.ident()?))
            }
            Some(TokenKind::Reserved(Reserved::Now)) => {
                self.i += 1;
                Ok(Expr::Now(pos))
            }
            Some(TokenKind::Special(Special::LParen)) => {
                self.i += 1;
                let e = self.expression()?;
                self.expect_special(Special::RParen)?;
                Ok(Expr::Paren(Box::new(e)))
            }
            Some(TokenKind::Identifier(_)) => match self.peek_second_kind() {
                Some(TokenKind::Special(Special::LBracket)) => {
                    let name = self.ident()?;
                    self.i += 1;
                    let index = self.expression()?;
                    self.expect_special(Special::RBracket)?;
                    Ok(Expr::Index(name, Box::new(index)))
                }
                Some(TokenKind::Special(Special::LParen)) => {
                    let name = self.ident()?;
                    let args = self.actuals()?;
                    Ok(Expr::Call { name, args })
                }
                Some(TokenKind::Special(Special::Question)) => {
                    let port = self.ident()?;
                    self.i += 1;
                    let target = self.reception_target()?;
                    Ok(Expr::Receive { port, target })
                }
                _ => Ok(Expr::Name(self.ident()?)),
            },
            _ => Err(self.error(&["number", "identifier", "`#`", "`now`", "`(`"])),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lexer::tokenize;

    fn prog(src: &str) -> Program {
        parse(&tokenize(src).unwrap()).unwrap()
    }

    fn perr(src: &str) -> Diagnostic {
        parse(&tokenize(src).unwrap()).unwrap_err()
    }

    fn id(name: &str) -> Ident {
        Ident { name: name.into(), pos: Pos::default() }
    }

    fn num(value: u32) -> Expr {
        Expr::Number { value, pos: Pos::default() }
    }

    fn name(n: &str) -> Expr {
        Expr::Name(id(n))
    }

    fn bin(op: BinOp, l: Expr, r: Expr) -> Expr {
        Expr::Binary { op, signed: false, lhs: Box::new(l), rhs: Box::new(r), pos: Pos::default() }
    }

    fn expr(src: &str) -> Expr {
        let p = prog(&format!("process p(c) start x := {src} stop"));
        match p.init.into_iter().next().unwrap() {
            Stmt::Assign { value: AssignValue::Expr(e), .. } => e,
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn minimal_program() {
        let p = prog("process p(c) start stop");
        assert_eq!(p.header.name.name, "p");
        assert!(p.init.is_empty() && p.guarded.is_empty() && p.states.is_empty());
    }

    #[test]
    fn guarded_state_with_reception() {
        let p = prog("process p(c) state idle, busy port q word v start next idle on idle \\ q ? v : next busy stop");
        assert_eq!(
            p.guarded[0],
            GuardedState {
                states: vec![id("idle")],
                guard: Some(Guard::Receive { port: id("q"), target: Variable::Name(id("v")) }),
                body: vec![Stmt::Next(id("busy"))],
                pos: Pos::default(),
            }
        );
    }

    #[test]
    fn bare_guard_and_other_guards() {
        let p = prog(
            "process p(c) state s start next s on s: next s on s \\ c ! : next s on s \\ c ? end : next s on s \\ after 5 : next s stop",
        );
        let guards: Vec<_> = p.guarded.iter().map(|g| g.guard.clone()).collect();
        assert_eq!(
            guards,
            vec![None, Some(Guard::TransmitReady(id("c"))), Some(Guard::ReceiveEnd(id("c"))), Some(Guard::After(num(5)))]
        );
    }

    #[test]
    fn repetition_forms() {
        let p = prog("process p(c) word x start while x repeat 10 times x := x - 1 done repeat 3 times until x = 0 stop");
        match &p.init[0] {
            Stmt::Repeat { condition, count, body, until, .. } => {
                assert_eq!(condition, &Some(name("x")));
                assert_eq!(count, &num(10));
                assert_eq!(body.len(), 1);
                assert!(until.is_none());
            }
            other => panic!("{other:?}"),
        }
        match &p.init[1] {
            Stmt::Repeat { condition: None, until: Some(u), body, .. } => {
                assert!(body.is_empty());
                assert_eq!(u, &bin(BinOp::Eq, name("x"), num(0)));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn precedence() {
        assert_eq!(expr("a + b * c"), bin(BinOp::Add, name("a"), bin(BinOp::Mul, name("b"), name("c"))));
        assert_eq!(expr("a < b + c"), bin(BinOp::Lt, name("a"), bin(BinOp::Add, name("b"), name("c"))));
        assert_eq!(expr("a - b - c"), bin(BinOp::Sub, bin(BinOp::Sub, name("a"), name("b")), name("c")));
        let neg_a = Expr::Unary { op: UnaryOp::Minus, operand: Box::new(name("a")), pos: Pos::default() };
        assert_eq!(expr("-a*b"), bin(BinOp::Mul, neg_a, name("b")));
    }

    #[test]
    fn signed_marker() {
        match expr("a /$ b") {
            Expr::Binary { op: BinOp::Div, signed: true, .. } => {}
            other => panic!("{other:?}"),
        }
        match expr("a <$ b") {
            Expr::Binary { op: BinOp::Lt, signed: true, .. } => {}
            other => panic!("{other:?}"),
        }
        // `$` is only legal after operators that have a signed variant
        assert_eq!(perr("process p(c) start x := a +$ b stop").code, Code::Parse);
        assert_eq!(perr("process p(c) start x := a =$ b stop").code, Code::Parse);
    }

    #[test]
    fn one_relation_per_expression() {
        let e = perr("process p(c) start x := a < b < c stop");
        assert_eq!(e.code, Code::Parse);
    }

    #[test]
    fn declarations_everywhere() {
        let p = prog(
            r#"const n = 4
            const msg[] = "hi", 0
            function f(const s[], a[4], w, port q) word t do t := w return t + 1
            process p(c, dim)
            state s
            port q
            word buf[n * dim + 1], z
            procedure g() do return
            start next s
            on s: z := asm 1, -2, (z + 1), #buf, msg[0] next s
            stop"#,
        );
        assert_eq!(p.prelude.len(), 3);
        assert_eq!(p.decls.len(), 2);
        assert_eq!(p.header.dimension, Some(id("dim")));
        match &p.prelude[2] {
            Decl::Subroutine(s) => {
                assert!(s.is_function);
                assert_eq!(s.params.len(), 4);
                assert!(matches!(s.params[3], FormalParam::Port(_)));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn transition_in_procedure_parses() {
        prog("procedure q() do next idle return process p(c) start stop");
    }

    #[test]
    fn errors_carry_expectations() {
        let e = perr("process p(c) start x stop");
        assert_eq!(e.code, Code::Parse);
        assert!(e.message.contains("`:=`"), "{}", e.message);
        let e = perr("");
        assert!(e.message.contains("end of input"));
        let e = perr("process p(c) start stop extra");
        assert_eq!((e.line, e.column), (1, 25));
    }
}
