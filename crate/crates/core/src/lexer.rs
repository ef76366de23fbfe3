//! Lexical analysis: UTF-8 source text to tokens.
//!
//! Whitespace is blank, tab, newline (and carriage return, so CRLF
//! sources lex the same as LF ones). `{ ... }` comments do not nest: the
//! first `}` closes them. Character notation `'c'` yields a number token
//! holding the code point.

use std::fmt;

use crate::diag::{Code, Diagnostic, Pos};
use crate::word::Word;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Special {
    LParen,
    RParen,
    Comma,
    LBracket,
    RBracket,
    Equal,
    Colon,
    Backslash,
    Bang,
    Question,
    Assign,
    NotEqual,
    Less,
    Greater,
    LessEqual,
    GreaterEqual,
    Dollar,
    Plus,
    Minus,
    Bar,
    Caret,
    Star,
    Amp,
    ShiftLeft,
    ShiftRight,
    Slash,
    Percent,
    Tilde,
    Hash,
}

impl Special {
    pub fn as_str(self) -> &'static str {
        use Special::*;
        match self {
            LParen => "(",
            RParen => ")",
            Comma => ",",
            LBracket => "[",
            RBracket => "]",
            Equal => "=",
            Colon => ":",
            Backslash => "\\",
            Bang => "!",
            Question => "?",
            Assign => ":=",
            NotEqual => "<>",
            Less => "<",
            Greater => ">",
            LessEqual => "<=",
            GreaterEqual => ">=",
            Dollar => "$",
            Plus => "+",
            Minus => "-",
            Bar => "|",
            Caret => "^",
            Star => "*",
            Amp => "&",
            ShiftLeft => "<<",
            ShiftRight => ">>",
            Slash => "/",
            Percent => "%",
            Tilde => "~",
            Hash => "#",
        }
    }
}

macro_rules! reserved_words {
    ($($variant:ident => $text:literal,)*) => {
        #[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
        pub enum Reserved {
            $($variant,)*
        }

        impl Reserved {
            pub const ALL: &'static [Reserved] = &[$(Reserved::$variant,)*];

            pub fn as_str(self) -> &'static str {
                match self {
                    $(Reserved::$variant => $text,)*
                }
            }

            pub fn lookup(word: &str) -> Option<Reserved> {
                match word {
                    $($text => Some(Reserved::$variant),)*
                    _ => None,
                }
            }
        }
    };
}

reserved_words! {
    Process => "process",
    Start => "start",
    Stop => "stop",
    State => "state",
    Port => "port",
    Const => "const",
    Word => "word",
    Procedure => "procedure",
    Function => "function",
    Do => "do",
    Return => "return",
    On => "on",
    If => "if",
    Then => "then",
    Elseif => "elseif",
    Else => "else",
    Done => "done",
    While => "while",
    Repeat => "repeat",
    Times => "times",
    Until => "until",
    Next => "next",
    End => "end",
    Pause => "pause",
    Or => "or",
    And => "and",
    Not => "not",
    Now => "now",
    After => "after",
    Asm => "asm",
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TokenKind {
    Special(Special),
    Reserved(Reserved),
    Identifier(String),
    Number(Word),
    /// One word per code point, doubled quotes already collapsed.
    Str(Vec<Word>),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Token {
    pub kind: TokenKind,
    /// The exact source slice the token was read from.
    pub text: String,
    pub pos: Pos,
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.text)
    }
}

/// Tokenizes raw bytes, reporting invalid UTF-8 with its position.
pub fn tokenize_bytes(source: &[u8]) -> Result<Vec<Token>, Diagnostic> {
    match std::str::from_utf8(source) {
        Ok(text) => tokenize(text),
        Err(e) => {
            let valid = std::str::from_utf8(&source[..e.valid_up_to()]).unwrap_or_default();
            let mut pos = Pos::new(1, 1);
            for c in valid.chars() {
                advance(&mut pos, c);
            }
            Err(Diagnostic::new(Code::LexInvalidUtf8, pos, "invalid UTF-8 byte sequence"))
        }
    }
}

pub fn tokenize(source: &str) -> Result<Vec<Token>, Diagnostic> {
    Lexer::new(source).run()
}

fn advance(pos: &mut Pos, c: char) {
    if c == '\n' {
        pos.line += 1;
        pos.column = 1;
    } else {
        pos.column += 1;
    }
}

fn is_ident_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_'
}

fn is_ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_'
}

struct Lexer<'a> {
    src: &'a str,
    offset: usize,
    pos: Pos,
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Self {
        Lexer { src, offset: 0, pos: Pos::new(1, 1) }
    }

    fn peek(&self) -> Option<char> {
        self.src[self.offset..].chars().next()
    }

    fn peek_second(&self) -> Option<char> {
        let mut it = self.src[self.offset..].chars();
        it.next();
        it.next()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.offset += c.len_utf8();
        advance(&mut self.pos, c);
        Some(c)
    }

    fn run(mut self) -> Result<Vec<Token>, Diagnostic> {
        let mut tokens = Vec::new();
        loop {
            self.skip_blank()?;
            let Some(c) = self.peek() else { break };
            let start = self.offset;
            let pos = self.pos;
            let kind = if is_ident_start(c) {
                self.identifier()
            } else if c.is_ascii_digit() {
                self.number(pos)?
            } else if c == '"' {
                self.string(pos)?
            } else if c == '\'' {
                self.character(pos)?
            } else {
                self.special(pos)?
            };
            tokens.push(Token { kind, text: self.src[start..self.offset].to_string(), pos });
        }
        Ok(tokens)
    }

    fn skip_blank(&mut self) -> Result<(), Diagnostic> {
        while let Some(c) = self.peek() {
            match c {
                ' ' | '\t' | '\n' | '\r' => {
                    self.bump();
                }
                '{' => {
                    let pos = self.pos;
                    self.bump();
                    loop {
                        match self.bump() {
                            Some('}') => break,
                            Some(_) => {}
                            None => {
                                return Err(Diagnostic::new(
                                    Code::LexUnterminatedComment,
                                    pos,
                                    "comment is not closed",
                                ))
                            }
                        }
                    }
                }
                '}' => {
                    return Err(Diagnostic::new(
                        Code::LexStrayBrace,
                        self.pos,
                        "`}` without an open comment (comments do not nest)",
                    ))
                }
                _ => break,
            }
        }
        Ok(())
    }

    fn identifier(&mut self) -> TokenKind {
        let start = self.offset;
        while self.peek().is_some_and(is_ident_char) {
            self.bump();
        }
        let text = &self.src[start..self.offset];
        match Reserved::lookup(text) {
            Some(r) => TokenKind::Reserved(r),
            None => TokenKind::Identifier(text.to_string()),
        }
    }

    fn number(&mut self, pos: Pos) -> Result<TokenKind, Diagnostic> {
        let (radix, digits_start) = if self.peek() == Some('0') && self.peek_second() == Some('x') {
            self.bump();
            self.bump();
            (16, self.offset)
        } else {
            (10, self.offset)
        };
        while self.peek().is_some_and(|c| c.is_digit(radix)) {
            self.bump();
        }
        let digits = &self.src[digits_start..self.offset];
        if digits.is_empty() || self.peek().is_some_and(is_ident_char) {
            return Err(Diagnostic::new(Code::LexBadNumber, pos, "malformed number"));
        }
        // Leading zeros cannot overflow on their own, so parse as u64 after
        // stripping them and range-check.
        let significant = digits.trim_start_matches('0');
        if significant.len() > 10 {
            return Err(Diagnostic::new(Code::LexNumberOverflow, pos, "number exceeds 32 bits"));
        }
        let value = if significant.is_empty() {
            0
        } else {
            u64::from_str_radix(significant, radix).expect("digits checked")
        };
        Word::try_from(value)
            .map(TokenKind::Number)
            .map_err(|_| Diagnostic::new(Code::LexNumberOverflow, pos, "number exceeds 32 bits"))
    }

    fn string(&mut self, pos: Pos) -> Result<TokenKind, Diagnostic> {
        self.bump();
        let mut words = Vec::new();
        loop {
            match self.bump() {
                Some('"') => {
                    if self.peek() == Some('"') {
                        self.bump();
                        words.push('"' as Word);
                    } else {
                        return Ok(TokenKind::Str(words));
                    }
                }
                Some(c) => words.push(c as Word),
                None => {
                    return Err(Diagnostic::new(Code::LexUnterminatedString, pos, "string is not closed"))
                }
            }
        }
    }

    fn character(&mut self, pos: Pos) -> Result<TokenKind, Diagnostic> {
        self.bump();
        let bad = || Diagnostic::new(Code::LexBadCharLiteral, pos, "expected one character between single quotes");
        let c = match self.bump() {
            Some(c) if c != '\'' && c != '\n' => c,
            _ => return Err(bad()),
        };
        if self.bump() != Some('\'') {
            return Err(bad());
        }
        Ok(TokenKind::Number(c as Word))
    }

    fn special(&mut self, pos: Pos) -> Result<TokenKind, Diagnostic> {
        use Special::*;
        let c = self.bump().expect("caller peeked");
        let next = self.peek();
        let (sym, two) = match (c, next) {
            (':', Some('=')) => (Assign, true),
            ('<', Some('>')) => (NotEqual, true),
            ('<', Some('=')) => (LessEqual, true),
            ('<', Some('<')) => (ShiftLeft, true),
            ('>', Some('=')) => (GreaterEqual, true),
            ('>', Some('>')) => (ShiftRight, true),
            ('(', _) => (LParen, false),
            (')', _) => (RParen, false),
            (',', _) => (Comma, false),
            ('[', _) => (LBracket, false),
            (']', _) => (RBracket, false),
            ('=', _) => (Equal, false),
            (':', _) => (Colon, false),
            ('\\', _) => (Backslash, false),
            ('!', _) => (Bang, false),
            ('?', _) => (Question, false),
            ('<', _) => (Less, false),
            ('>', _) => (Greater, false),
            ('$', _) => (Dollar, false),
            ('+', _) => (Plus, false),
            ('-', _) => (Minus, false),
            ('|', _) => (Bar, false),
            ('^', _) => (Caret, false),
            ('*', _) => (Star, false),
            ('&', _) => (Amp, false),
            ('/', _) => (Slash, false),
            ('%', _) => (Percent, false),
            ('~', _) => (Tilde, false),
            ('#', _) => (Hash, false),
            _ => {
                return Err(Diagnostic::new(
                    Code::LexInvalidChar,
                    pos,
                    format!("unexpected character {c:?}"),
                ))
            }
        };
        if two {
            self.bump();
        }
        Ok(TokenKind::Special(sym))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn kinds(src: &str) -> Vec<TokenKind> {
        tokenize(src).unwrap().into_iter().map(|t| t.kind).collect()
    }

    fn err(src: &str) -> Code {
        tokenize(src).unwrap_err().code
    }

    #[test]
    fn numbers() {
        assert_eq!(kinds("0x10"), vec![TokenKind::Number(16)]);
        assert_eq!(kinds("'A'"), vec![TokenKind::Number(65)]);
        assert_eq!(kinds("4294967295 0xffffffff"), vec![TokenKind::Number(u32::MAX); 2]);
        assert_eq!(kinds("0000000000000000007"), vec![TokenKind::Number(7)]);
        assert_eq!(kinds("'€'"), vec![TokenKind::Number(0x20ac)]);
        assert_eq!(err("4294967296"), Code::LexNumberOverflow);
        assert_eq!(err("0x100000000"), Code::LexNumberOverflow);
        assert_eq!(err("0x"), Code::LexBadNumber);
        assert_eq!(err("12ab"), Code::LexBadNumber);
    }

    #[test]
    fn strings_double_quotes() {
        assert_eq!(kinds(r#""a""b""#), vec![TokenKind::Str(vec![97, 34, 98])]);
        assert_eq!(kinds(r#""""#), vec![TokenKind::Str(vec![])]);
        assert_eq!(kinds(r#""{x}""#), vec![TokenKind::Str("{x}".chars().map(|c| c as u32).collect())]);
        assert_eq!(err("\"abc"), Code::LexUnterminatedString);
    }

    #[test]
    fn comments_do_not_nest() {
        // The first `}` closes the comment, so the second one is stray.
        let e = tokenize("{comment {inner} x }").unwrap_err();
        assert_eq!(e.code, Code::LexStrayBrace);
        assert_eq!((e.line, e.column), (1, 20));
        assert_eq!(kinds("{a {b} x"), vec![TokenKind::Identifier("x".into())]);
        assert_eq!(err("{ open"), Code::LexUnterminatedComment);
        assert_eq!(err("}"), Code::LexStrayBrace);
    }

    #[test]
    fn char_literal_errors() {
        assert_eq!(err("''"), Code::LexBadCharLiteral);
        assert_eq!(err("'ab'"), Code::LexBadCharLiteral);
        assert_eq!(err("''''"), Code::LexBadCharLiteral);
        assert_eq!(err("'a"), Code::LexBadCharLiteral);
    }

    #[test]
    fn specials_and_words() {
        assert_eq!(
            kinds("x := a <> b <= c >>$ 2"),
            vec![
                TokenKind::Identifier("x".into()),
                TokenKind::Special(Special::Assign),
                TokenKind::Identifier("a".into()),
                TokenKind::Special(Special::NotEqual),
                TokenKind::Identifier("b".into()),
                TokenKind::Special(Special::LessEqual),
                TokenKind::Identifier("c".into()),
                TokenKind::Special(Special::ShiftRight),
                TokenKind::Special(Special::Dollar),
                TokenKind::Number(2),
            ]
        );
        assert_eq!(kinds("Process process"), vec![
            TokenKind::Identifier("Process".into()),
            TokenKind::Reserved(Reserved::Process),
        ]);
        assert_eq!(err("x @ y"), Code::LexInvalidChar);
    }

    #[test]
    fn positions_and_newlines() {
        let toks = tokenize("a\r\n  bb {c\n}  d").unwrap();
        let at: Vec<_> = toks.iter().map(|t| (t.pos.line, t.pos.column)).collect();
        assert_eq!(at, vec![(1, 1), (2, 3), (3, 4)]);
        assert_eq!(
            tokenize("a\r\nb").unwrap().iter().map(|t| t.kind.clone()).collect::<Vec<_>>(),
            tokenize("a\nb").unwrap().iter().map(|t| t.kind.clone()).collect::<Vec<_>>()
        );
    }

    #[test]
    fn invalid_utf8_has_position() {
        let e = tokenize_bytes(b"ab\ncd\xff").unwrap_err();
        assert_eq!(e.code, Code::LexInvalidUtf8);
        assert_eq!((e.line, e.column), (2, 3));
    }

    fn token_text() -> impl Strategy<Value = String> {
        prop_oneof![
            "[A-Za-z_][A-Za-z0-9_]{0,6}",
            (0u32..=u32::MAX).prop_map(|n| n.to_string()),
            (0u32..=u32::MAX).prop_map(|n| format!("0x{n:x}")),
            "[a-z\"{}' ]{0,5}".prop_map(|s| format!("\"{}\"", s.replace('"', "\"\""))),
            "[a-z0-9#]".prop_map(|c| format!("'{c}'")),
            prop::sample::select(vec![
                "(", ")", ",", "[", "]", "=", ":", "\\", "!", "?", ":=", "<>", "<", ">", "<=",
                ">=", "$", "+", "-", "|", "^", "*", "&", "<<", ">>", "/", "%", "~", "#",
            ])
            .prop_map(str::to_string),
        ]
    }

    proptest! {
        #[test]
        fn rejoined_tokens_relex_identically(parts in prop::collection::vec(token_text(), 0..20)) {
            let src = parts.join(" ");
            let toks = tokenize(&src).unwrap();
            let joined: Vec<&str> = toks.iter().map(|t| t.text.as_str()).collect();
            let again = tokenize(&joined.join(" ")).unwrap();
            prop_assert_eq!(toks, again);
        }

        #[test]
        fn positions_point_at_token_start(parts in prop::collection::vec(token_text(), 1..12), seps in prop::collection::vec("[ \t\n]{1,3}", 12)) {
            let mut src = String::new();
            for (i, p) in parts.iter().enumerate() {
                src.push_str(p);
                src.push_str(&seps[i]);
            }
            let lines: Vec<Vec<char>> = src.split('\n').map(|l| l.chars().collect()).collect();
            for t in tokenize(&src).unwrap() {
                let line = &lines[t.pos.line as usize - 1];
                let first = t.text.chars().next().unwrap();
                prop_assert_eq!(line[t.pos.column as usize - 1], first);
            }
        }
    }
}
