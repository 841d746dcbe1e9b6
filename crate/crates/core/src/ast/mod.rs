//! Snippet classification, harnessing and parsing.
//!
//! Answer snippets arrive in four shapes: a full compilation unit, a bare
//! method, a list of statements, or a single expression. Everything that is
//! not already a compilation unit gets wrapped in fixed synthetic scaffolding
//! so one parser entry point handles all of them. The wrapper text is a fixed
//! constant per shape, so spans of the original text are recoverable by
//! subtracting a constant prefix length.

mod lexer;
mod parser;

pub use lexer::{tokenize, Keyword, LexError, Span, Token, TokenKind};
pub use parser::{AstNode, LiteralValue, NodeKind, Param, ParseError};

use thiserror::Error;

/// Raw source text of one snippet plus an optional corpus identifier.
#[derive(Debug, Clone, PartialEq)]
pub struct SourceSnippet {
    pub text: String,
    pub origin_id: Option<String>,
}

impl SourceSnippet {
    /// Rejects blank input; everything else is accepted as-is.
    pub fn new(text: impl Into<String>, origin_id: Option<String>) -> Result<Self, AstError> {
        let text = text.into();
        if text.trim().is_empty() {
            return Err(AstError::EmptyInput);
        }
        Ok(SourceSnippet { text, origin_id })
    }
}

/// Shape of a snippet, decided before harnessing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SnippetKind {
    Expression,
    StatementList,
    Method,
    CompilationUnit,
}

impl SnippetKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SnippetKind::Expression => "expression",
            SnippetKind::StatementList => "statement-list",
            SnippetKind::Method => "method",
            SnippetKind::CompilationUnit => "compilation-unit",
        }
    }
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum AstError {
    #[error("empty input")]
    EmptyInput,
    #[error("lex error: {0}")]
    Lex(#[from] LexError),
    #[error("parse error: {0}")]
    Parse(#[from] ParseError),
}

/// Synthetic wrapper names. Fixed so harness output is a pure function of
/// the input and prefix offsets are constants.
pub const HARNESS_CLASS: &str = "__Harness";
pub const HARNESS_METHOD: &str = "__run";

const STMT_PREFIX: &str = "class __Harness { void __run() {\n";
const STMT_SUFFIX: &str = "\n} }";
const EXPR_PREFIX: &str = "class __Harness { void __run() {\n";
const EXPR_SUFFIX: &str = "\n; } }";
const METHOD_PREFIX: &str = "class __Harness {\n";
const METHOD_SUFFIX: &str = "\n}";

/// Result of `parse_snippet`: the tree over the harnessed text plus enough
/// context to map spans back to the original snippet.
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedSnippet {
    /// The harnessed source the spans refer to.
    pub source: String,
    pub ast: AstNode,
    pub kind: SnippetKind,
    /// Byte length of the synthetic prefix (0 for compilation units).
    pub harness_offset: usize,
}

impl ParsedSnippet {
    /// Map a span over the harnessed text back into the original snippet.
    /// Returns `None` for spans inside the synthetic wrapper.
    pub fn original_span(&self, span: Span) -> Option<Span> {
        let start = span.start.checked_sub(self.harness_offset)?;
        let end = span.end.checked_sub(self.harness_offset)?;
        Some(Span::new(start, end))
    }
}

/// Decide the snippet shape. Categories are tried in a fixed order:
/// compilation-unit, method, statement-list; expression is the fallback.
pub fn classify_snippet(text: &str) -> Result<SnippetKind, AstError> {
    if text.trim().is_empty() {
        return Err(AstError::EmptyInput);
    }
    let Ok(tokens) = tokenize(text) else {
        // Unlexable text still classifies; the parse will report the error.
        return Ok(SnippetKind::Expression);
    };
    if opens_compilation_unit(&tokens) {
        return Ok(SnippetKind::CompilationUnit);
    }
    if opens_method_signature(&tokens) {
        return Ok(SnippetKind::Method);
    }
    let mut p = parser::Parser::new(text, &tokens);
    if p.parse_statements_to_end().is_ok() {
        return Ok(SnippetKind::StatementList);
    }
    Ok(SnippetKind::Expression)
}

/// True when a top-level `class`/`interface`/`enum` declaration opens the
/// text, allowing leading package/import declarations, annotations and
/// modifiers.
fn opens_compilation_unit(tokens: &[Token]) -> bool {
    let mut i = 0;
    if tokens.get(i).is_some_and(|t| t.is_kw(Keyword::Package)) {
        return true; // only legal in a compilation unit
    }
    if tokens.get(i).is_some_and(|t| t.is_kw(Keyword::Import)) {
        return true;
    }
    while i < tokens.len() {
        match &tokens[i].kind {
            TokenKind::Punct("@") => {
                // Skip annotation: @ Name(.Name)* (args)?
                i += 1;
                while matches!(tokens.get(i), Some(Token { kind: TokenKind::Ident(_), .. })) {
                    i += 1;
                    if tokens.get(i).is_some_and(|t| t.is_punct(".")) {
                        i += 1;
                    } else {
                        break;
                    }
                }
                if tokens.get(i).is_some_and(|t| t.is_punct("(")) {
                    let mut depth = 0usize;
                    while i < tokens.len() {
                        if tokens[i].is_punct("(") {
                            depth += 1;
                        } else if tokens[i].is_punct(")") {
                            depth -= 1;
                            if depth == 0 {
                                i += 1;
                                break;
                            }
                        }
                        i += 1;
                    }
                }
            }
            TokenKind::Kw(kw) if kw.is_modifier() => i += 1,
            TokenKind::Kw(Keyword::Class | Keyword::Interface | Keyword::Enum) => return true,
            _ => return false,
        }
    }
    false
}

/// True when the text opens with a method (or constructor) signature:
/// optional modifiers/annotations/type-params, a return type + name (or a
/// bare constructor name), a balanced parameter list, then `{`.
fn opens_method_signature(tokens: &[Token]) -> bool {
    let mut i = skip_annotations_and_modifiers(tokens, 0);
    // Method type parameters.
    if tokens.get(i).is_some_and(|t| t.is_punct("<")) {
        i = match skip_angle_brackets(tokens, i) {
            Some(n) => n,
            None => return false,
        };
    }
    // Return type or constructor name.
    let after_type = match skip_type_tokens(tokens, i) {
        Some(n) => n,
        None => return false,
    };
    let i = if tokens.get(after_type).is_some_and(|t| t.is_punct("(")) {
        // Constructor form: Name ( — the "type" was the constructor name,
        // which must be a plain identifier.
        if !matches!(tokens.get(i), Some(Token { kind: TokenKind::Ident(_), .. }))
            || after_type != i + 1
        {
            return false;
        }
        after_type
    } else if matches!(tokens.get(after_type), Some(Token { kind: TokenKind::Ident(_), .. }))
        && tokens.get(after_type + 1).is_some_and(|t| t.is_punct("("))
    {
        after_type + 1
    } else {
        return false;
    };
    // Balanced parameter list, then optional throws, then `{`.
    let mut depth = 0usize;
    let mut j = i;
    while j < tokens.len() {
        if tokens[j].is_punct("(") {
            depth += 1;
        } else if tokens[j].is_punct(")") {
            depth -= 1;
            if depth == 0 {
                break;
            }
        }
        j += 1;
    }
    if depth != 0 || j >= tokens.len() {
        return false;
    }
    let mut k = j + 1;
    if tokens.get(k).is_some_and(|t| t.is_kw(Keyword::Throws)) {
        while k < tokens.len() && !tokens[k].is_punct("{") {
            k += 1;
        }
    }
    tokens.get(k).is_some_and(|t| t.is_punct("{"))
}

fn skip_annotations_and_modifiers(tokens: &[Token], mut i: usize) -> usize {
    loop {
        match tokens.get(i) {
            Some(Token { kind: TokenKind::Punct("@"), .. }) => {
                i += 1;
                while matches!(tokens.get(i), Some(Token { kind: TokenKind::Ident(_), .. })) {
                    i += 1;
                    if tokens.get(i).is_some_and(|t| t.is_punct(".")) {
                        i += 1;
                    } else {
                        break;
                    }
                }
                if tokens.get(i).is_some_and(|t| t.is_punct("(")) {
                    let mut depth = 0usize;
                    while i < tokens.len() {
                        if tokens[i].is_punct("(") {
                            depth += 1;
                        } else if tokens[i].is_punct(")") {
                            depth -= 1;
                            if depth == 0 {
                                i += 1;
                                break;
                            }
                        }
                        i += 1;
                    }
                }
            }
            Some(Token { kind: TokenKind::Kw(kw), .. }) if kw.is_modifier() => i += 1,
            _ => return i,
        }
    }
}

/// Token-level skip over one type use; returns the index after it.
fn skip_type_tokens(tokens: &[Token], mut i: usize) -> Option<usize> {
    match tokens.get(i)? {
        Token { kind: TokenKind::Kw(Keyword::Void), .. } => i += 1,
        Token { kind: TokenKind::Kw(kw), .. } if kw.is_primitive_type() => i += 1,
        Token { kind: TokenKind::Ident(_), .. } => {
            i += 1;
            if tokens.get(i).is_some_and(|t| t.is_punct("<")) {
                i = skip_angle_brackets(tokens, i)?;
            }
            while tokens.get(i).is_some_and(|t| t.is_punct("."))
                && matches!(tokens.get(i + 1), Some(Token { kind: TokenKind::Ident(_), .. }))
            {
                i += 2;
                if tokens.get(i).is_some_and(|t| t.is_punct("<")) {
                    i = skip_angle_brackets(tokens, i)?;
                }
            }
        }
        _ => return None,
    }
    while tokens.get(i).is_some_and(|t| t.is_punct("["))
        && tokens.get(i + 1).is_some_and(|t| t.is_punct("]"))
    {
        i += 2;
    }
    Some(i)
}

fn skip_angle_brackets(tokens: &[Token], mut i: usize) -> Option<usize> {
    let mut depth = 0isize;
    while i < tokens.len() {
        match &tokens[i].kind {
            TokenKind::Punct("<") => depth += 1,
            TokenKind::Punct(">") => depth -= 1,
            TokenKind::Punct(">>") => depth -= 2,
            TokenKind::Punct(">>>") => depth -= 3,
            TokenKind::Punct(";") | TokenKind::Punct("{") => return None,
            _ => {}
        }
        i += 1;
        if depth <= 0 {
            return Some(i);
        }
    }
    None
}

/// Wrap a snippet into a full compilation unit according to its kind.
/// Compilation units pass through unchanged.
pub fn harness_snippet(text: &str, kind: SnippetKind) -> String {
    match kind {
        SnippetKind::CompilationUnit => text.to_string(),
        SnippetKind::Method => format!("{METHOD_PREFIX}{text}{METHOD_SUFFIX}"),
        SnippetKind::StatementList => format!("{STMT_PREFIX}{text}{STMT_SUFFIX}"),
        SnippetKind::Expression => format!("{EXPR_PREFIX}{text}{EXPR_SUFFIX}"),
    }
}

/// Prefix length added by `harness_snippet` for the given kind.
pub fn harness_offset(kind: SnippetKind) -> usize {
    match kind {
        SnippetKind::CompilationUnit => 0,
        SnippetKind::Method => METHOD_PREFIX.len(),
        SnippetKind::StatementList => STMT_PREFIX.len(),
        SnippetKind::Expression => EXPR_PREFIX.len(),
    }
}

/// Parse a full compilation unit (typically harness output).
pub fn parse(text: &str) -> Result<AstNode, AstError> {
    let tokens = tokenize(text)?;
    let mut p = parser::Parser::new(text, &tokens);
    Ok(p.parse_compilation_unit()?)
}

/// Classify, harness and parse in one step.
pub fn parse_snippet(text: &str) -> Result<ParsedSnippet, AstError> {
    let kind = classify_snippet(text)?;
    let source = harness_snippet(text, kind);
    let ast = parse(&source)?;
    Ok(ParsedSnippet {
        source,
        ast,
        kind,
        harness_offset: harness_offset(kind),
    })
}
