//! Lexer for the Java subset.
//!
//! Produces a flat token stream with byte spans. Comments are skipped.
//! Characters that cannot start any token become [`TokenKind::Error`]
//! tokens; the parser turns those into parse errors when it reaches them.

use std::fmt;

use thiserror::Error;

/// Half-open byte range into the source text.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn new(start: usize, end: usize) -> Self {
        Span { start, end }
    }

    pub fn contains(&self, other: &Span) -> bool {
        self.start <= other.start && other.end <= self.end
    }

    pub fn contains_pos(&self, pos: usize) -> bool {
        self.start <= pos && pos < self.end.max(self.start + 1)
    }
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}..{}", self.start, self.end)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Keyword {
    Abstract,
    Assert,
    Boolean,
    Break,
    Byte,
    Case,
    Catch,
    Char,
    Class,
    Continue,
    Default,
    Do,
    Double,
    Else,
    Enum,
    Extends,
    Final,
    Finally,
    Float,
    For,
    If,
    Implements,
    Import,
    Instanceof,
    Int,
    Interface,
    Long,
    Native,
    New,
    Package,
    Private,
    Protected,
    Public,
    Return,
    Short,
    Static,
    Strictfp,
    Super,
    Switch,
    Synchronized,
    This,
    Throw,
    Throws,
    Transient,
    Try,
    Void,
    Volatile,
    While,
}

impl Keyword {
    fn from_str(s: &str) -> Option<Keyword> {
        use Keyword::*;
        Some(match s {
            "abstract" => Abstract,
            "assert" => Assert,
            "boolean" => Boolean,
            "break" => Break,
            "byte" => Byte,
            "case" => Case,
            "catch" => Catch,
            "char" => Char,
            "class" => Class,
            "continue" => Continue,
            "default" => Default,
            "do" => Do,
            "double" => Double,
            "else" => Else,
            "enum" => Enum,
            "extends" => Extends,
            "final" => Final,
            "finally" => Finally,
            "float" => Float,
            "for" => For,
            "if" => If,
            "implements" => Implements,
            "import" => Import,
            "instanceof" => Instanceof,
            "int" => Int,
            "interface" => Interface,
            "long" => Long,
            "native" => Native,
            "new" => New,
            "package" => Package,
            "private" => Private,
            "protected" => Protected,
            "public" => Public,
            "return" => Return,
            "short" => Short,
            "static" => Static,
            "strictfp" => Strictfp,
            "super" => Super,
            "switch" => Switch,
            "synchronized" => Synchronized,
            "this" => This,
            "throw" => Throw,
            "throws" => Throws,
            "transient" => Transient,
            "try" => Try,
            "void" => Void,
            "volatile" => Volatile,
            "while" => While,
            _ => return None,
        })
    }

    pub fn is_modifier(self) -> bool {
        use Keyword::*;
        matches!(
            self,
            Public
                | Private
                | Protected
                | Static
                | Final
                | Abstract
                | Synchronized
                | Native
                | Strictfp
                | Transient
                | Volatile
                | Default
        )
    }

    pub fn is_primitive_type(self) -> bool {
        use Keyword::*;
        matches!(
            self,
            Boolean | Byte | Char | Double | Float | Int | Long | Short
        )
    }

    pub fn as_str(self) -> &'static str {
        use Keyword::*;
        match self {
            Abstract => "abstract",
            Assert => "assert",
            Boolean => "boolean",
            Break => "break",
            Byte => "byte",
            Case => "case",
            Catch => "catch",
            Char => "char",
            Class => "class",
            Continue => "continue",
            Default => "default",
            Do => "do",
            Double => "double",
            Else => "else",
            Enum => "enum",
            Extends => "extends",
            Final => "final",
            Finally => "finally",
            Float => "float",
            For => "for",
            If => "if",
            Implements => "implements",
            Import => "import",
            Instanceof => "instanceof",
            Int => "int",
            Interface => "interface",
            Long => "long",
            Native => "native",
            New => "new",
            Package => "package",
            Private => "private",
            Protected => "protected",
            Public => "public",
            Return => "return",
            Short => "short",
            Static => "static",
            Strictfp => "strictfp",
            Super => "super",
            Switch => "switch",
            Synchronized => "synchronized",
            This => "this",
            Throw => "throw",
            Throws => "throws",
            Transient => "transient",
            Try => "try",
            Void => "void",
            Volatile => "volatile",
            While => "while",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TokenKind {
    Ident(String),
    Kw(Keyword),
    /// Integer literal, raw text (suffixes and radix prefixes kept).
    Int(String),
    Float(String),
    /// String literal with escapes decoded.
    Str(String),
    CharLit(String),
    Bool(bool),
    Null,
    /// Operator or separator, e.g. `.` `(` `&&` `>>>=`.
    Punct(&'static str),
    /// A character no token can start with.
    Error(char),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub kind: TokenKind,
    pub span: Span,
}

impl Token {
    pub fn is_punct(&self, p: &str) -> bool {
        matches!(&self.kind, TokenKind::Punct(s) if *s == p)
    }

    pub fn is_kw(&self, kw: Keyword) -> bool {
        matches!(&self.kind, TokenKind::Kw(k) if *k == kw)
    }
}

#[derive(Debug, Clone, Error, PartialEq)]
#[error("{message} at offset {offset}")]
pub struct LexError {
    pub message: String,
    pub offset: usize,
}

// Longest first so maximal munch falls out of a linear scan.
const PUNCTS: &[&str] = &[
    ">>>=", "<<=", ">>=", ">>>", "...", "->", "::", "++", "--", "<<", ">>", "<=", ">=", "==",
    "!=", "&&", "||", "+=", "-=", "*=", "/=", "%=", "&=", "|=", "^=", "(", ")", "{", "}", "[",
    "]", ";", ",", ".", "=", ">", "<", "!", "~", "?", ":", "+", "-", "*", "/", "%", "&", "|",
    "^", "@",
];

fn is_ident_start(c: char) -> bool {
    c.is_alphabetic() || c == '_' || c == '$'
}

fn is_ident_continue(c: char) -> bool {
    c.is_alphanumeric() || c == '_' || c == '$'
}

struct Lexer<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn peek2(&self) -> Option<char> {
        let mut it = self.src[self.pos..].chars();
        it.next();
        it.next()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += c.len_utf8();
        Some(c)
    }

    fn skip_trivia(&mut self) -> Result<(), LexError> {
        loop {
            match self.peek() {
                Some(c) if c.is_whitespace() => {
                    self.bump();
                }
                Some('/') if self.peek2() == Some('/') => {
                    while let Some(c) = self.peek() {
                        if c == '\n' {
                            break;
                        }
                        self.bump();
                    }
                }
                Some('/') if self.peek2() == Some('*') => {
                    let start = self.pos;
                    self.bump();
                    self.bump();
                    let mut closed = false;
                    while let Some(c) = self.bump() {
                        if c == '*' && self.peek() == Some('/') {
                            self.bump();
                            closed = true;
                            break;
                        }
                    }
                    if !closed {
                        return Err(LexError {
                            message: "unterminated block comment".to_string(),
                            offset: start,
                        });
                    }
                }
                _ => return Ok(()),
            }
        }
    }

    fn lex_number(&mut self) -> Token {
        let start = self.pos;
        let mut is_float = false;
        // Radix prefix.
        if self.peek() == Some('0') && matches!(self.peek2(), Some('x' | 'X' | 'b' | 'B')) {
            self.bump();
            self.bump();
            while matches!(self.peek(), Some(c) if c.is_ascii_hexdigit() || c == '_') {
                self.bump();
            }
        } else {
            while matches!(self.peek(), Some(c) if c.is_ascii_digit() || c == '_') {
                self.bump();
            }
            if self.peek() == Some('.') && matches!(self.peek2(), Some(c) if c.is_ascii_digit()) {
                is_float = true;
                self.bump();
                while matches!(self.peek(), Some(c) if c.is_ascii_digit() || c == '_') {
                    self.bump();
                }
            }
            if matches!(self.peek(), Some('e' | 'E')) {
                let save = self.pos;
                self.bump();
                if matches!(self.peek(), Some('+' | '-')) {
                    self.bump();
                }
                if matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
                    is_float = true;
                    while matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
                        self.bump();
                    }
                } else {
                    self.pos = save;
                }
            }
        }
        match self.peek() {
            Some('f' | 'F' | 'd' | 'D') => {
                is_float = true;
                self.bump();
            }
            Some('l' | 'L') => {
                self.bump();
            }
            _ => {}
        }
        let text = self.src[start..self.pos].to_string();
        let kind = if is_float {
            TokenKind::Float(text)
        } else {
            TokenKind::Int(text)
        };
        Token {
            kind,
            span: Span::new(start, self.pos),
        }
    }

    fn lex_quoted(&mut self, quote: char) -> Result<Token, LexError> {
        let start = self.pos;
        self.bump(); // opening quote
        let mut value = String::new();
        loop {
            match self.bump() {
                None | Some('\n') => {
                    return Err(LexError {
                        message: format!(
                            "unterminated {} literal",
                            if quote == '"' { "string" } else { "char" }
                        ),
                        offset: start,
                    });
                }
                Some(c) if c == quote => break,
                Some('\\') => {
                    let esc = self.bump().ok_or_else(|| LexError {
                        message: "unterminated escape".to_string(),
                        offset: start,
                    })?;
                    value.push(match esc {
                        'n' => '\n',
                        't' => '\t',
                        'r' => '\r',
                        'b' => '\u{8}',
                        'f' => '\u{c}',
                        '0' => '\0',
                        'u' => {
                            let mut code = 0u32;
                            for _ in 0..4 {
                                let d = self.bump().and_then(|c| c.to_digit(16)).ok_or_else(
                                    || LexError {
                                        message: "bad unicode escape".to_string(),
                                        offset: start,
                                    },
                                )?;
                                code = code * 16 + d;
                            }
                            char::from_u32(code).unwrap_or('\u{fffd}')
                        }
                        other => other, // covers \\ \' \" and permissively anything else
                    });
                }
                Some(c) => value.push(c),
            }
        }
        let span = Span::new(start, self.pos);
        let kind = if quote == '"' {
            TokenKind::Str(value)
        } else {
            TokenKind::CharLit(value)
        };
        Ok(Token { kind, span })
    }

    fn lex_punct(&mut self) -> Option<Token> {
        let rest = &self.src[self.pos..];
        for p in PUNCTS {
            if rest.starts_with(p) {
                let span = Span::new(self.pos, self.pos + p.len());
                self.pos += p.len();
                return Some(Token {
                    kind: TokenKind::Punct(p),
                    span,
                });
            }
        }
        None
    }
}

/// Tokenize Java source text. Unknown characters become `Error` tokens;
/// only unterminated strings/comments abort the lex.
pub fn tokenize(src: &str) -> Result<Vec<Token>, LexError> {
    let mut lx = Lexer { src, pos: 0 };
    let mut tokens = Vec::new();
    loop {
        lx.skip_trivia()?;
        let start = lx.pos;
        let Some(c) = lx.peek() else { break };
        if is_ident_start(c) {
            while matches!(lx.peek(), Some(c) if is_ident_continue(c)) {
                lx.bump();
            }
            let text = &src[start..lx.pos];
            let span = Span::new(start, lx.pos);
            let kind = match text {
                "true" => TokenKind::Bool(true),
                "false" => TokenKind::Bool(false),
                "null" => TokenKind::Null,
                _ => match Keyword::from_str(text) {
                    Some(kw) => TokenKind::Kw(kw),
                    None => TokenKind::Ident(text.to_string()),
                },
            };
            tokens.push(Token { kind, span });
        } else if c.is_ascii_digit() {
            tokens.push(lx.lex_number());
        } else if c == '"' || c == '\'' {
            tokens.push(lx.lex_quoted(c)?);
        } else if let Some(tok) = lx.lex_punct() {
            tokens.push(tok);
        } else {
            lx.bump();
            tokens.push(Token {
                kind: TokenKind::Error(c),
                span: Span::new(start, lx.pos),
            });
        }
    }
    Ok(tokens)
}
