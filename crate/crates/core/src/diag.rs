//! Source positions and compiler diagnostics.

use std::fmt;

use serde::Serialize;

/// A 1-based line/column position in the source text.
///
/// Positions never take part in equality: two syntax trees or token
/// streams that differ only in where things were written compare equal.
#[derive(Clone, Copy, Debug, Default, Serialize)]
pub struct Pos {
    pub line: u32,
    pub column: u32,
}

impl Pos {
    pub const fn new(line: u32, column: u32) -> Self {
        Pos { line, column }
    }
}

impl PartialEq for Pos {
    fn eq(&self, _other: &Self) -> bool {
        true
    }
}

impl Eq for Pos {}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

/// Stable diagnostic codes. The string form is part of the tool's
/// public contract (see `docs/diagnostics.md`).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Code {
    // lexical
    LexInvalidUtf8,
    LexInvalidChar,
    LexUnterminatedString,
    LexUnterminatedComment,
    LexStrayBrace,
    LexNumberOverflow,
    LexBadNumber,
    LexBadCharLiteral,
    // syntax
    Parse,
    // static semantics
    Undeclared,
    Redeclared,
    Kind,
    TransitionInSub,
    PathNoTransition,
    Unreachable,
    EndGuard,
    DupGuard,
    DupExpire,
    Arity,
    ParamKind,
    ConstExpr,
    NotAffine,
    DivZero,
    ConstArraySize,
    ConstIndex,
    LocalArraySize,
    DataSize,
}

impl Code {
    pub const ALL: [Code; 27] = [
        Code::LexInvalidUtf8,
        Code::LexInvalidChar,
        Code::LexUnterminatedString,
        Code::LexUnterminatedComment,
        Code::LexStrayBrace,
        Code::LexNumberOverflow,
        Code::LexBadNumber,
        Code::LexBadCharLiteral,
        Code::Parse,
        Code::Undeclared,
        Code::Redeclared,
        Code::Kind,
        Code::TransitionInSub,
        Code::PathNoTransition,
        Code::Unreachable,
        Code::EndGuard,
        Code::DupGuard,
        Code::DupExpire,
        Code::Arity,
        Code::ParamKind,
        Code::ConstExpr,
        Code::NotAffine,
        Code::DivZero,
        Code::ConstArraySize,
        Code::ConstIndex,
        Code::LocalArraySize,
        Code::DataSize,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Code::LexInvalidUtf8 => "E-LEX-UTF8",
            Code::LexInvalidChar => "E-LEX-CHAR",
            Code::LexUnterminatedString => "E-LEX-STRING",
            Code::LexUnterminatedComment => "E-LEX-COMMENT",
            Code::LexStrayBrace => "E-LEX-BRACE",
            Code::LexNumberOverflow => "E-LEX-OVERFLOW",
            Code::LexBadNumber => "E-LEX-NUMBER",
            Code::LexBadCharLiteral => "E-LEX-CHARLIT",
            Code::Parse => "E-PARSE",
            Code::Undeclared => "E-UNDECLARED",
            Code::Redeclared => "E-REDECLARED",
            Code::Kind => "E-KIND",
            Code::TransitionInSub => "E-TRANSITION-IN-SUB",
            Code::PathNoTransition => "E-PATH-NO-TRANSITION",
            Code::Unreachable => "E-UNREACHABLE",
            Code::EndGuard => "E-END-GUARD",
            Code::DupGuard => "E-DUP-GUARD",
            Code::DupExpire => "E-DUP-EXPIRE",
            Code::Arity => "E-ARITY",
            Code::ParamKind => "E-PARAM-KIND",
            Code::ConstExpr => "E-CONST-EXPR",
            Code::NotAffine => "E-NOT-AFFINE",
            Code::DivZero => "E-DIV-ZERO",
            Code::ConstArraySize => "E-CONST-ARRAY-SIZE",
            Code::ConstIndex => "E-CONST-INDEX",
            Code::LocalArraySize => "E-LOCAL-ARRAY-SIZE",
            Code::DataSize => "E-DATA-SIZE",
        }
    }

    pub fn summary(self) -> &'static str {
        match self {
            Code::LexInvalidUtf8 => "source is not valid UTF-8",
            Code::LexInvalidChar => "character cannot start a symbol",
            Code::LexUnterminatedString => "string not closed before end of input",
            Code::LexUnterminatedComment => "comment not closed before end of input",
            Code::LexStrayBrace => "`}` outside of a comment",
            Code::LexNumberOverflow => "number does not fit in 32 bits",
            Code::LexBadNumber => "malformed number",
            Code::LexBadCharLiteral => "character notation must enclose exactly one character",
            Code::Parse => "unexpected symbol",
            Code::Undeclared => "identifier used before (or without) declaration",
            Code::Redeclared => "identifier declared twice in the same scope, or shadowing a global",
            Code::Kind => "identifier of the wrong kind for this position",
            Code::TransitionInSub => "transition statement inside a subroutine",
            Code::PathNoTransition => "an execution path of the main program does not end in a transition",
            Code::Unreachable => "statement after a transition can never execute",
            Code::EndGuard => "data reception guard without an end-token guard on the same port and state",
            Code::DupGuard => "two guards of one state check the same condition on the same port",
            Code::DupExpire => "two expiration guards for one state",
            Code::Arity => "actual parameter count differs from the declaration",
            Code::ParamKind => "actual parameter does not match the kind of the formal parameter",
            Code::ConstExpr => "expression must be a compile-time constant",
            Code::NotAffine => "size is not of the form a*dimension+b",
            Code::DivZero => "division by zero in a constant expression",
            Code::ConstArraySize => "constant array initializer exceeds its declared size",
            Code::ConstIndex => "constant index outside of constant array",
            Code::LocalArraySize => "local array size must not depend on the dimension",
            Code::DataSize => "total data memory size exceeds one word",
        }
    }
}

impl fmt::Display for Code {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl Serialize for Code {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

/// The published table of diagnostic codes.
pub fn codes_markdown() -> String {
    let mut s = String::from(
        "# Diagnostic codes\n\n\
         Generated by `gustl codes`. Each rejected program reports one or more of these codes.\n\n\
         | code | meaning |\n\
         |------|---------|\n",
    );
    for code in Code::ALL {
        s.push_str(&format!("| `{}` | {} |\n", code.as_str(), code.summary()));
    }
    s
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    pub code: Code,
    pub message: String,
    pub line: u32,
    pub column: u32,
}

impl Diagnostic {
    pub fn new(code: Code, pos: Pos, message: impl Into<String>) -> Self {
        Diagnostic { code, message: message.into(), line: pos.line, column: pos.column }
    }

    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("diagnostic serializes")
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}: {}", self.line, self.column, self.code, self.message)
    }
}

impl std::error::Error for Diagnostic {}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn codes_are_unique() {
        let mut seen: Vec<&str> = Code::ALL.iter().map(|c| c.as_str()).collect();
        seen.sort();
        seen.dedup();
        assert_eq!(seen.len(), Code::ALL.len());
    }

    #[test]
    fn published_table_is_current() {
        let on_disk = include_str!("../../../docs/diagnostics.md");
        assert_eq!(on_disk, codes_markdown(), "regenerate docs/diagnostics.md with `gustl codes`");
    }

    #[test]
    fn json_line_shape() {
        let d = Diagnostic::new(Code::EndGuard, Pos::new(3, 7), "missing");
        assert_eq!(
            d.to_json_line(),
            r#"{"code":"E-END-GUARD","message":"missing","line":3,"column":7}"#
        );
    }
}
