//! Recursive-descent parser for the Java subset.
//!
//! The grammar covers what shows up in answer snippets: class/interface/enum
//! shells, methods, fields, the usual statements, and an expression grammar
//! with calls, object creation, casts, lambdas and field/array access.
//! Generic argument lists and annotations are consumed and dropped. Lambda
//! bodies are parsed so calls inside callbacks stay visible.
//!
//! There is no error recovery: the first error aborts the parse, which is
//! what classifies a snippet as non-compilable downstream.

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

use super::lexer::{Keyword as Kw, Span, Token, TokenKind};

/// One node of the syntax tree. Children are in source order and their
/// spans are contained in the parent's span.
#[derive(Debug, Clone, PartialEq)]
pub struct AstNode {
    pub kind: NodeKind,
    pub span: Span,
    pub children: Vec<AstNode>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Param {
    pub type_name: Option<String>,
    pub name: String,
}

#[derive(Debug, Clone, PartialEq)]
pub enum NodeKind {
    /// Class, interface or enum declaration; children are the members.
    ClassDecl { name: String },
    /// Children: the body block (absent for abstract/interface methods).
    MethodDecl { name: String, params: Vec<Param> },
    /// One declarator of a field; children: optional initializer.
    FieldDecl { type_name: String, name: String },
    /// One declarator of a local variable; children: optional initializer.
    LocalVarDecl { type_name: String, name: String },
    /// Children: condition, then-statement, optional else-statement.
    If,
    /// Children: condition, body.
    While,
    /// Children: body, condition.
    DoWhile,
    /// Children: inits..., optional condition, updates..., body.
    For { n_init: usize, has_cond: bool, n_update: usize },
    /// Children: iterable expression, body.
    EnhancedFor { type_name: String, var: String },
    /// Children: resources..., body block, catch clauses..., optional finally block.
    Try { n_resources: usize, has_finally: bool },
    /// Children: the handler block.
    CatchClause { types: Vec<String>, var: String },
    /// Children: selector expression, then one block per case group.
    Switch,
    Return,
    Throw,
    ExprStmt,
    Block,
    Break,
    Continue,
    /// Children: optional receiver first (`has_receiver`), then arguments.
    MethodCall { method: String, has_receiver: bool },
    /// Children: arguments, then members of an anonymous class body if present.
    ObjectCreation { type_name: String, arg_count: usize },
    /// `new T[...]` / `new T[]{...}`; children: dimension or initializer expressions.
    ArrayCreation { type_name: String },
    /// Children: base expression.
    FieldAccess { field: String },
    /// Children: lhs, rhs. `op` is `=` or a compound operator.
    Assignment { op: String },
    /// Children: two operands (three for `?:`).
    BinaryOp { op: String },
    /// Children: the operand.
    UnaryOp { op: String, prefix: bool },
    /// Children: the expression being cast.
    Cast { type_name: String },
    Literal { value: LiteralValue },
    Name { text: String },
    /// Children: base expression, index expression.
    ArrayAccess,
    /// Lambda or method reference; body statements are parsed as children.
    LambdaOpaque { params: Vec<Param> },
}

#[derive(Debug, Clone, PartialEq)]
pub enum LiteralValue {
    Int(String),
    Float(String),
    Str(String),
    Char(String),
    Bool(bool),
    Null,
}

impl AstNode {
    pub fn new(kind: NodeKind, span: Span, children: Vec<AstNode>) -> Self {
        AstNode { kind, span, children }
    }

    /// Receiver expression of a method call, if the call has one.
    pub fn call_receiver(&self) -> Option<&AstNode> {
        match &self.kind {
            NodeKind::MethodCall { has_receiver: true, .. } => self.children.first(),
            _ => None,
        }
    }

    /// Argument expressions of a method call.
    pub fn call_args(&self) -> &[AstNode] {
        match &self.kind {
            NodeKind::MethodCall { has_receiver, .. } => {
                let skip = usize::from(*has_receiver);
                &self.children[skip..]
            }
            _ => &[],
        }
    }

    /// Depth-first, source-order walk over the node and all descendants.
    pub fn walk<'a>(&'a self, visit: &mut impl FnMut(&'a AstNode)) {
        visit(self);
        for c in &self.children {
            c.walk(visit);
        }
    }
}

/// Parse failure: position of the first unconsumable token plus the token
/// categories that would have been accepted there.
#[derive(Debug, Clone, Error, PartialEq)]
pub struct ParseError {
    pub message: String,
    pub offset: usize,
    pub expected: BTreeSet<String>,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} at offset {}", self.message, self.offset)?;
        if !self.expected.is_empty() {
            let cats: Vec<&str> = self.expected.iter().map(|s| s.as_str()).collect();
            write!(f, " (expected {})", cats.join(", "))?;
        }
        Ok(())
    }
}

pub(crate) struct Parser<'a> {
    src: &'a str,
    tokens: &'a [Token],
    pos: usize,
}

type PResult<T> = Result<T, ParseError>;

impl<'a> Parser<'a> {
    pub(crate) fn new(src: &'a str, tokens: &'a [Token]) -> Self {
        Parser { src, tokens, pos: 0 }
    }

    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn peek_at(&self, n: usize) -> Option<&Token> {
        self.tokens.get(self.pos + n)
    }

    fn bump(&mut self) -> Option<&Token> {
        let t = self.tokens.get(self.pos);
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn at_end(&self) -> bool {
        self.pos >= self.tokens.len()
    }

    fn offset(&self) -> usize {
        self.peek()
            .map(|t| t.span.start)
            .unwrap_or_else(|| self.src.len())
    }

    fn prev_end(&self) -> usize {
        if self.pos == 0 {
            0
        } else {
            self.tokens[self.pos - 1].span.end
        }
    }

    fn err<T>(&self, message: impl Into<String>, expected: &[&str]) -> PResult<T> {
        Err(ParseError {
            message: message.into(),
            offset: self.offset(),
            expected: expected.iter().map(|s| s.to_string()).collect(),
        })
    }

    fn check_punct(&self, p: &str) -> bool {
        self.peek().is_some_and(|t| t.is_punct(p))
    }

    fn check_kw(&self, kw: Kw) -> bool {
        self.peek().is_some_and(|t| t.is_kw(kw))
    }

    fn eat_punct(&mut self, p: &str) -> bool {
        if self.check_punct(p) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn eat_kw(&mut self, kw: Kw) -> bool {
        if self.check_kw(kw) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect_punct(&mut self, p: &str) -> PResult<Span> {
        if self.check_punct(p) {
            let span = self.peek().unwrap().span;
            self.pos += 1;
            Ok(span)
        } else {
            self.err(format!("expected `{p}`"), &[p])
        }
    }

    fn expect_kw(&mut self, kw: Kw) -> PResult<Span> {
        if self.check_kw(kw) {
            let span = self.peek().unwrap().span;
            self.pos += 1;
            Ok(span)
        } else {
            self.err(format!("expected `{}`", kw.as_str()), &[kw.as_str()])
        }
    }

    fn expect_ident(&mut self) -> PResult<(String, Span)> {
        match self.peek() {
            Some(Token { kind: TokenKind::Ident(name), span }) => {
                let out = (name.clone(), *span);
                self.pos += 1;
                Ok(out)
            }
            _ => self.err("expected identifier", &["identifier"]),
        }
    }

    // --- trivia-level helpers -------------------------------------------

    /// Consume `@Name(...)` / `@Name` annotations.
    fn skip_annotations(&mut self) -> PResult<()> {
        while self.check_punct("@") {
            self.bump();
            self.expect_ident()?;
            while self.eat_punct(".") {
                self.expect_ident()?;
            }
            if self.check_punct("(") {
                self.skip_balanced("(", ")")?;
            }
        }
        Ok(())
    }

    fn skip_modifiers(&mut self) -> PResult<()> {
        loop {
            self.skip_annotations()?;
            match self.peek() {
                Some(Token { kind: TokenKind::Kw(kw), .. }) if kw.is_modifier() => {
                    self.pos += 1;
                }
                _ => return Ok(()),
            }
        }
    }

    fn skip_balanced(&mut self, open: &str, close: &str) -> PResult<()> {
        self.expect_punct(open)?;
        let mut depth = 1usize;
        while depth > 0 {
            match self.bump() {
                Some(t) if t.is_punct(open) => depth += 1,
                Some(t) if t.is_punct(close) => depth -= 1,
                Some(_) => {}
                None => return self.err(format!("unbalanced `{open}`"), &[close]),
            }
        }
        Ok(())
    }

    /// Skip a generic argument list starting at `<`. Handles `>>` / `>>>`
    /// closing several levels at once.
    fn skip_type_args(&mut self) -> PResult<()> {
        let start = self.offset();
        let mut depth = 0isize;
        loop {
            match self.peek() {
                Some(t) if t.is_punct("<") => {
                    depth += 1;
                    self.pos += 1;
                }
                Some(t) if t.is_punct(">") => {
                    depth -= 1;
                    self.pos += 1;
                }
                Some(t) if t.is_punct(">>") => {
                    depth -= 2;
                    self.pos += 1;
                }
                Some(t) if t.is_punct(">>>") => {
                    depth -= 3;
                    self.pos += 1;
                }
                Some(Token { kind: TokenKind::Ident(_) | TokenKind::Kw(_), .. }) => {
                    self.pos += 1;
                }
                Some(t) if t.is_punct(",") || t.is_punct(".") || t.is_punct("?") => {
                    self.pos += 1;
                }
                Some(t) if t.is_punct("[") => {
                    self.pos += 1;
                    self.expect_punct("]")?;
                }
                Some(t) if t.is_punct("@") => {
                    self.skip_annotations()?;
                }
                _ => {
                    return Err(ParseError {
                        message: "malformed type arguments".to_string(),
                        offset: start,
                        expected: [">".to_string()].into(),
                    })
                }
            }
            if depth <= 0 {
                return Ok(());
            }
        }
    }

    /// Parse a type use and return its simple name ("List", "byte[]", ...).
    /// Qualified names keep only the last segment; generics are dropped.
    fn parse_type(&mut self) -> PResult<String> {
        let mut name = match self.peek() {
            Some(Token { kind: TokenKind::Kw(kw), .. }) if kw.is_primitive_type() => {
                let n = kw.as_str().to_string();
                self.pos += 1;
                n
            }
            Some(Token { kind: TokenKind::Kw(Kw::Void), .. }) => {
                self.pos += 1;
                "void".to_string()
            }
            Some(Token { kind: TokenKind::Ident(_), .. }) => {
                let (mut n, _) = self.expect_ident()?;
                if self.check_punct("<") {
                    self.skip_type_args()?;
                }
                // Qualified name: keep the final segment.
                while self.check_punct(".")
                    && matches!(self.peek_at(1), Some(Token { kind: TokenKind::Ident(_), .. }))
                {
                    self.bump();
                    let (seg, _) = self.expect_ident()?;
                    n = seg;
                    if self.check_punct("<") {
                        self.skip_type_args()?;
                    }
                }
                n
            }
            _ => return self.err("expected type", &["type"]),
        };
        while self.check_punct("[")
            && matches!(self.peek_at(1), Some(t) if t.is_punct("]"))
        {
            self.pos += 2;
            name.push_str("[]");
        }
        if self.eat_punct("...") {
            name.push_str("[]");
        }
        Ok(name)
    }

    // --- compilation unit ----------------------------------------------

    pub(crate) fn parse_compilation_unit(&mut self) -> PResult<AstNode> {
        let start = self.offset();
        self.skip_annotations()?;
        if self.check_kw(Kw::Package) {
            self.bump();
            self.expect_ident()?;
            while self.eat_punct(".") {
                self.expect_ident()?;
            }
            self.expect_punct(";")?;
        }
        loop {
            self.skip_annotations()?;
            if self.check_kw(Kw::Import) {
                self.bump();
                self.eat_kw(Kw::Static);
                self.expect_ident()?;
                while self.eat_punct(".") {
                    if self.eat_punct("*") {
                        break;
                    }
                    self.expect_ident()?;
                }
                self.expect_punct(";")?;
            } else {
                break;
            }
        }
        let mut types = Vec::new();
        while !self.at_end() {
            if self.eat_punct(";") {
                continue;
            }
            types.push(self.parse_type_decl()?);
        }
        let span = Span::new(
            types.first().map(|t: &AstNode| t.span.start).unwrap_or(start),
            self.prev_end(),
        );
        Ok(AstNode::new(
            NodeKind::ClassDecl { name: "<unit>".to_string() },
            span,
            types,
        ))
    }

    fn parse_type_decl(&mut self) -> PResult<AstNode> {
        let start = self.offset();
        self.skip_modifiers()?;
        let is_enum = self.check_kw(Kw::Enum);
        if !(self.eat_kw(Kw::Class) || self.eat_kw(Kw::Interface) || self.eat_kw(Kw::Enum)) {
            return self.err("expected type declaration", &["class", "interface", "enum"]);
        }
        let (name, _) = self.expect_ident()?;
        if self.check_punct("<") {
            self.skip_type_args()?;
        }
        if self.eat_kw(Kw::Extends) {
            self.parse_type()?;
            while self.eat_punct(",") {
                self.parse_type()?;
            }
        }
        if self.eat_kw(Kw::Implements) {
            self.parse_type()?;
            while self.eat_punct(",") {
                self.parse_type()?;
            }
        }
        let members = self.parse_class_body(is_enum)?;
        let span = Span::new(start, self.prev_end());
        Ok(AstNode::new(NodeKind::ClassDecl { name }, span, members))
    }

    fn parse_class_body(&mut self, is_enum: bool) -> PResult<Vec<AstNode>> {
        self.expect_punct("{")?;
        let mut members = Vec::new();
        if is_enum {
            // Enum constants: Name, Name(args), ... terminated by `;` or `}`.
            loop {
                if self.check_punct("}") || self.check_punct(";") {
                    self.eat_punct(";");
                    break;
                }
                self.skip_annotations()?;
                self.expect_ident()?;
                if self.check_punct("(") {
                    self.skip_balanced("(", ")")?;
                }
                if self.check_punct("{") {
                    self.skip_balanced("{", "}")?;
                }
                if !self.eat_punct(",") {
                    self.eat_punct(";");
                    break;
                }
            }
        }
        while !self.check_punct("}") {
            if self.at_end() {
                return self.err("unterminated class body", &["}"]);
            }
            if self.eat_punct(";") {
                continue;
            }
            members.push(self.parse_member()?);
        }
        self.expect_punct("}")?;
        Ok(members)
    }

    fn parse_member(&mut self) -> PResult<AstNode> {
        let start = self.offset();
        self.skip_modifiers()?;
        if self.check_kw(Kw::Class) || self.check_kw(Kw::Interface) || self.check_kw(Kw::Enum) {
            // Roll back over the modifiers so the nested decl owns them.
            return self.parse_type_decl_at(start);
        }
        if self.check_punct("{") {
            // Instance or static initializer.
            return self.parse_block();
        }
        if self.check_punct("<") {
            self.skip_type_args()?; // method type parameters
        }
        // Constructor: `Name (` directly.
        if matches!(self.peek(), Some(Token { kind: TokenKind::Ident(_), .. }))
            && matches!(self.peek_at(1), Some(t) if t.is_punct("("))
        {
            let (name, _) = self.expect_ident()?;
            return self.parse_method_rest(name, start);
        }
        let type_name = self.parse_type()?;
        let (name, _) = self.expect_ident()?;
        if self.check_punct("(") {
            return self.parse_method_rest(name, start);
        }
        // Field declaration, possibly multiple declarators.
        self.parse_declarators(type_name, start, true, Some(name))
    }

    fn parse_type_decl_at(&mut self, start: usize) -> PResult<AstNode> {
        let mut node = self.parse_type_decl_inner()?;
        node.span.start = start.min(node.span.start);
        Ok(node)
    }

    fn parse_type_decl_inner(&mut self) -> PResult<AstNode> {
        let is_enum = self.check_kw(Kw::Enum);
        if !(self.eat_kw(Kw::Class) || self.eat_kw(Kw::Interface) || self.eat_kw(Kw::Enum)) {
            return self.err("expected type declaration", &["class", "interface", "enum"]);
        }
        let start = self.prev_end();
        let (name, _) = self.expect_ident()?;
        if self.check_punct("<") {
            self.skip_type_args()?;
        }
        if self.eat_kw(Kw::Extends) {
            self.parse_type()?;
            while self.eat_punct(",") {
                self.parse_type()?;
            }
        }
        if self.eat_kw(Kw::Implements) {
            self.parse_type()?;
            while self.eat_punct(",") {
                self.parse_type()?;
            }
        }
        let members = self.parse_class_body(is_enum)?;
        let span = Span::new(start, self.prev_end());
        Ok(AstNode::new(NodeKind::ClassDecl { name }, span, members))
    }

    fn parse_method_rest(&mut self, name: String, start: usize) -> PResult<AstNode> {
        let params = self.parse_params()?;
        while self.check_punct("[") {
            self.bump();
            self.expect_punct("]")?;
        }
        if self.eat_kw(Kw::Throws) {
            self.parse_type()?;
            while self.eat_punct(",") {
                self.parse_type()?;
            }
        }
        let mut children = Vec::new();
        if self.check_punct("{") {
            children.push(self.parse_block()?);
        } else if self.eat_kw(Kw::Default) {
            // Annotation-style default value; not in the subset, consume to `;`.
            self.parse_expression()?;
            self.expect_punct(";")?;
        } else {
            self.expect_punct(";")?;
        }
        let span = Span::new(start, self.prev_end());
        Ok(AstNode::new(NodeKind::MethodDecl { name, params }, span, children))
    }

    fn parse_params(&mut self) -> PResult<Vec<Param>> {
        self.expect_punct("(")?;
        let mut params = Vec::new();
        if !self.check_punct(")") {
            loop {
                self.skip_annotations()?;
                while self.eat_kw(Kw::Final) {
                    self.skip_annotations()?;
                }
                let type_name = self.parse_type()?;
                let (name, _) = self.expect_ident()?;
                let mut type_name = type_name;
                while self.check_punct("[") {
                    self.bump();
                    self.expect_punct("]")?;
                    type_name.push_str("[]");
                }
                params.push(Param { type_name: Some(type_name), name });
                if !self.eat_punct(",") {
                    break;
                }
            }
        }
        self.expect_punct(")")?;
        Ok(params)
    }

    /// Declarator list after the element type. `first_name` is set when the
    /// caller already consumed the first declarator's name (member path).
    fn parse_declarators(
        &mut self,
        type_name: String,
        start: usize,
        is_field: bool,
        first_name: Option<String>,
    ) -> PResult<AstNode> {
        let mut decls = Vec::new();
        let mut pending_name = first_name;
        loop {
            let (name, name_span) = match pending_name.take() {
                Some(n) => (n, Span::new(start, start)),
                None => self.expect_ident()?,
            };
            let mut tname = type_name.clone();
            while self.check_punct("[") {
                self.bump();
                self.expect_punct("]")?;
                tname.push_str("[]");
            }
            let mut children = Vec::new();
            if self.eat_punct("=") {
                children.push(self.parse_variable_init()?);
            }
            let span = Span::new(
                if decls.is_empty() { start } else { name_span.start },
                self.prev_end(),
            );
            let kind = if is_field {
                NodeKind::FieldDecl { type_name: tname, name }
            } else {
                NodeKind::LocalVarDecl { type_name: tname, name }
            };
            decls.push(AstNode::new(kind, span, children));
            if !self.eat_punct(",") {
                break;
            }
        }
        self.expect_punct(";")?;
        let end = self.prev_end();
        if decls.len() == 1 {
            let mut d = decls.pop().unwrap();
            d.span = Span::new(start, end);
            Ok(d)
        } else {
            // Wrap multiple declarators in a block so each stays a node.
            let span = Span::new(start, end);
            Ok(AstNode::new(NodeKind::Block, span, decls))
        }
    }

    fn parse_variable_init(&mut self) -> PResult<AstNode> {
        if self.check_punct("{") {
            let start = self.expect_punct("{")?.start;
            let mut elems = Vec::new();
            while !self.check_punct("}") {
                elems.push(self.parse_variable_init()?);
                if !self.eat_punct(",") {
                    break;
                }
            }
            self.expect_punct("}")?;
            let span = Span::new(start, self.prev_end());
            Ok(AstNode::new(
                NodeKind::ArrayCreation { type_name: String::new() },
                span,
                elems,
            ))
        } else {
            self.parse_expression()
        }
    }

    // --- statements ------------------------------------------------------

    pub(crate) fn parse_block(&mut self) -> PResult<AstNode> {
        let start = self.expect_punct("{")?.start;
        let mut stmts = Vec::new();
        while !self.check_punct("}") {
            if self.at_end() {
                return self.err("unterminated block", &["}"]);
            }
            stmts.push(self.parse_statement()?);
        }
        self.expect_punct("}")?;
        let span = Span::new(start, self.prev_end());
        Ok(AstNode::new(NodeKind::Block, span, stmts))
    }

    /// Statements until end of input; used when parsing harnessed
    /// statement-list snippets speculatively.
    pub(crate) fn parse_statements_to_end(&mut self) -> PResult<Vec<AstNode>> {
        let mut stmts = Vec::new();
        while !self.at_end() {
            stmts.push(self.parse_statement()?);
        }
        Ok(stmts)
    }

    pub(crate) fn parse_statement(&mut self) -> PResult<AstNode> {
        let start = self.offset();
        match self.peek() {
            None => self.err("expected statement", &["statement"]),
            Some(t) if t.is_punct("{") => self.parse_block(),
            Some(t) if t.is_punct(";") => {
                self.bump();
                Ok(AstNode::new(NodeKind::ExprStmt, Span::new(start, self.prev_end()), vec![]))
            }
            Some(t) if t.is_kw(Kw::If) => self.parse_if(),
            Some(t) if t.is_kw(Kw::While) => self.parse_while(),
            Some(t) if t.is_kw(Kw::Do) => self.parse_do_while(),
            Some(t) if t.is_kw(Kw::For) => self.parse_for(),
            Some(t) if t.is_kw(Kw::Try) => self.parse_try(),
            Some(t) if t.is_kw(Kw::Switch) => self.parse_switch(),
            Some(t) if t.is_kw(Kw::Return) => {
                self.bump();
                let mut children = Vec::new();
                if !self.check_punct(";") {
                    children.push(self.parse_expression()?);
                }
                self.expect_punct(";")?;
                Ok(AstNode::new(NodeKind::Return, Span::new(start, self.prev_end()), children))
            }
            Some(t) if t.is_kw(Kw::Throw) => {
                self.bump();
                let e = self.parse_expression()?;
                self.expect_punct(";")?;
                Ok(AstNode::new(NodeKind::Throw, Span::new(start, self.prev_end()), vec![e]))
            }
            Some(t) if t.is_kw(Kw::Break) => {
                self.bump();
                if matches!(self.peek(), Some(Token { kind: TokenKind::Ident(_), .. })) {
                    self.bump();
                }
                self.expect_punct(";")?;
                Ok(AstNode::new(NodeKind::Break, Span::new(start, self.prev_end()), vec![]))
            }
            Some(t) if t.is_kw(Kw::Continue) => {
                self.bump();
                if matches!(self.peek(), Some(Token { kind: TokenKind::Ident(_), .. })) {
                    self.bump();
                }
                self.expect_punct(";")?;
                Ok(AstNode::new(NodeKind::Continue, Span::new(start, self.prev_end()), vec![]))
            }
            Some(t) if t.is_kw(Kw::Assert) => {
                self.bump();
                let mut children = vec![self.parse_expression()?];
                if self.eat_punct(":") {
                    children.push(self.parse_expression()?);
                }
                self.expect_punct(";")?;
                Ok(AstNode::new(NodeKind::ExprStmt, Span::new(start, self.prev_end()), children))
            }
            Some(t) if t.is_kw(Kw::Synchronized) => {
                self.bump();
                self.expect_punct("(")?;
                let lock = self.parse_expression()?;
                self.expect_punct(")")?;
                let body = self.parse_block()?;
                Ok(AstNode::new(
                    NodeKind::Block,
                    Span::new(start, self.prev_end()),
                    vec![lock, body],
                ))
            }
            Some(t) if t.is_kw(Kw::Class) || t.is_kw(Kw::Interface) || t.is_kw(Kw::Enum) => {
                self.parse_type_decl()
            }
            Some(t) if t.is_punct("@") => {
                // Annotated local class or annotated declaration.
                self.skip_annotations()?;
                self.parse_statement()
            }
            // Labeled statement: `name : statement` (but not `::`).
            Some(Token { kind: TokenKind::Ident(_), .. })
                if matches!(self.peek_at(1), Some(t) if t.is_punct(":")) =>
            {
                self.bump();
                self.bump();
                self.parse_statement()
            }
            _ => {
                // Local variable declaration or expression statement —
                // resolved by speculative parsing.
                if let Some(node) = self.try_parse_local_var_decl(start)? {
                    return Ok(node);
                }
                let e = self.parse_expression()?;
                self.expect_punct(";")?;
                Ok(AstNode::new(NodeKind::ExprStmt, Span::new(start, self.prev_end()), vec![e]))
            }
        }
    }

    /// Try `[final] Type name [= init][, name2 ...] ;` — backtracks on failure.
    fn try_parse_local_var_decl(&mut self, start: usize) -> PResult<Option<AstNode>> {
        let save = self.pos;
        let mut has_final = false;
        while self.check_kw(Kw::Final) {
            self.bump();
            has_final = true;
        }
        let looks_like_decl = has_final || {
            let save2 = self.pos;
            let ok = self.parse_type().is_ok()
                && matches!(self.peek(), Some(Token { kind: TokenKind::Ident(_), .. }))
                && matches!(
                    self.peek_at(1),
                    Some(t) if t.is_punct("=") || t.is_punct(";") || t.is_punct(",")
                        || t.is_punct("[")
                );
            self.pos = save2;
            ok
        };
        if !looks_like_decl {
            self.pos = save;
            return Ok(None);
        }
        let type_name = self.parse_type()?;
        let node = self.parse_declarators(type_name, start, false, None)?;
        Ok(Some(node))
    }

    fn parse_if(&mut self) -> PResult<AstNode> {
        let start = self.expect_kw(Kw::If)?.start;
        self.expect_punct("(")?;
        let cond = self.parse_expression()?;
        self.expect_punct(")")?;
        let then = self.parse_statement()?;
        let mut children = vec![cond, then];
        if self.eat_kw(Kw::Else) {
            children.push(self.parse_statement()?);
        }
        Ok(AstNode::new(NodeKind::If, Span::new(start, self.prev_end()), children))
    }

    fn parse_while(&mut self) -> PResult<AstNode> {
        let start = self.expect_kw(Kw::While)?.start;
        self.expect_punct("(")?;
        let cond = self.parse_expression()?;
        self.expect_punct(")")?;
        let body = self.parse_statement()?;
        Ok(AstNode::new(NodeKind::While, Span::new(start, self.prev_end()), vec![cond, body]))
    }

    fn parse_do_while(&mut self) -> PResult<AstNode> {
        let start = self.expect_kw(Kw::Do)?.start;
        let body = self.parse_statement()?;
        self.expect_kw(Kw::While)?;
        self.expect_punct("(")?;
        let cond = self.parse_expression()?;
        self.expect_punct(")")?;
        self.expect_punct(";")?;
        Ok(AstNode::new(NodeKind::DoWhile, Span::new(start, self.prev_end()), vec![body, cond]))
    }

    fn parse_for(&mut self) -> PResult<AstNode> {
        let start = self.expect_kw(Kw::For)?.start;
        self.expect_punct("(")?;
        // Enhanced for: `(Type name : iterable)`.
        if let Some(node) = self.try_parse_enhanced_for(start)? {
            return Ok(node);
        }
        let mut inits = Vec::new();
        if !self.check_punct(";") {
            let init_start = self.offset();
            if let Some(decl) = self.try_parse_local_var_decl_no_semi(init_start)? {
                inits.push(decl);
            } else {
                loop {
                    let e = self.parse_expression()?;
                    let span = e.span;
                    inits.push(AstNode::new(NodeKind::ExprStmt, span, vec![e]));
                    if !self.eat_punct(",") {
                        break;
                    }
                }
            }
        }
        self.expect_punct(";")?;
        let mut children = inits;
        let n_init = children.len();
        let has_cond = !self.check_punct(";");
        if has_cond {
            children.push(self.parse_expression()?);
        }
        self.expect_punct(";")?;
        let mut n_update = 0;
        if !self.check_punct(")") {
            loop {
                let e = self.parse_expression()?;
                let span = e.span;
                children.push(AstNode::new(NodeKind::ExprStmt, span, vec![e]));
                n_update += 1;
                if !self.eat_punct(",") {
                    break;
                }
            }
        }
        self.expect_punct(")")?;
        children.push(self.parse_statement()?);
        Ok(AstNode::new(
            NodeKind::For { n_init, has_cond, n_update },
            Span::new(start, self.prev_end()),
            children,
        ))
    }

    fn try_parse_enhanced_for(&mut self, start: usize) -> PResult<Option<AstNode>> {
        let save = self.pos;
        while self.check_kw(Kw::Final) || self.check_punct("@") {
            if self.check_punct("@") {
                self.skip_annotations()?;
            } else {
                self.bump();
            }
        }
        let Ok(type_name) = self.parse_type() else {
            self.pos = save;
            return Ok(None);
        };
        let Ok((var, _)) = self.expect_ident() else {
            self.pos = save;
            return Ok(None);
        };
        if !self.eat_punct(":") {
            self.pos = save;
            return Ok(None);
        }
        let iterable = self.parse_expression()?;
        self.expect_punct(")")?;
        let body = self.parse_statement()?;
        Ok(Some(AstNode::new(
            NodeKind::EnhancedFor { type_name, var },
            Span::new(start, self.prev_end()),
            vec![iterable, body],
        )))
    }

    /// For-init variant of the local-var probe: no trailing `;` consumed.
    fn try_parse_local_var_decl_no_semi(&mut self, start: usize) -> PResult<Option<AstNode>> {
        let save = self.pos;
        while self.check_kw(Kw::Final) {
            self.bump();
        }
        let looks = (|| {
            let s = self.pos;
            let ok = self.parse_type().is_ok()
                && matches!(self.peek(), Some(Token { kind: TokenKind::Ident(_), .. }));
            self.pos = s;
            ok
        })();
        if !looks {
            self.pos = save;
            return Ok(None);
        }
        let type_name = self.parse_type()?;
        let mut decls = Vec::new();
        loop {
            let (name, name_span) = self.expect_ident()?;
            let mut tname = type_name.clone();
            while self.check_punct("[") {
                self.bump();
                self.expect_punct("]")?;
                tname.push_str("[]");
            }
            let mut children = Vec::new();
            if self.eat_punct("=") {
                children.push(self.parse_variable_init()?);
            }
            let span = Span::new(
                if decls.is_empty() { start } else { name_span.start },
                self.prev_end(),
            );
            decls.push(AstNode::new(
                NodeKind::LocalVarDecl { type_name: tname, name },
                span,
                children,
            ));
            if !self.eat_punct(",") {
                break;
            }
        }
        if decls.len() == 1 {
            Ok(decls.pop().map(Some).unwrap())
        } else {
            let span = Span::new(start, self.prev_end());
            Ok(Some(AstNode::new(NodeKind::Block, span, decls)))
        }
    }

    fn parse_try(&mut self) -> PResult<AstNode> {
        let start = self.expect_kw(Kw::Try)?.start;
        let mut children = Vec::new();
        let mut n_resources = 0;
        if self.check_punct("(") {
            self.bump();
            loop {
                while self.eat_kw(Kw::Final) {}
                self.skip_annotations()?;
                let res_start = self.offset();
                // Either `Type name = expr` or an existing variable name.
                let save = self.pos;
                let decl = (|p: &mut Self| -> PResult<AstNode> {
                    let type_name = p.parse_type()?;
                    let (name, _) = p.expect_ident()?;
                    p.expect_punct("=")?;
                    let init = p.parse_expression()?;
                    let span = Span::new(res_start, p.prev_end());
                    Ok(AstNode::new(
                        NodeKind::LocalVarDecl { type_name, name },
                        span,
                        vec![init],
                    ))
                })(self);
                match decl {
                    Ok(d) => children.push(d),
                    Err(_) => {
                        self.pos = save;
                        let e = self.parse_expression()?;
                        children.push(e);
                    }
                }
                n_resources += 1;
                if !self.eat_punct(";") || self.check_punct(")") {
                    break;
                }
            }
            self.expect_punct(")")?;
        }
        children.push(self.parse_block()?);
        let mut saw_handler = n_resources > 0;
        while self.check_kw(Kw::Catch) {
            saw_handler = true;
            let cstart = self.expect_kw(Kw::Catch)?.start;
            self.expect_punct("(")?;
            while self.eat_kw(Kw::Final) {}
            let mut types = vec![self.parse_type()?];
            while self.eat_punct("|") {
                types.push(self.parse_type()?);
            }
            let (var, _) = self.expect_ident()?;
            self.expect_punct(")")?;
            let body = self.parse_block()?;
            let span = Span::new(cstart, self.prev_end());
            children.push(AstNode::new(NodeKind::CatchClause { types, var }, span, vec![body]));
        }
        let has_finally = self.check_kw(Kw::Finally);
        if has_finally {
            saw_handler = true;
            self.bump();
            children.push(self.parse_block()?);
        }
        if !saw_handler {
            return self.err("try without catch, finally or resources", &["catch", "finally"]);
        }
        Ok(AstNode::new(
            NodeKind::Try { n_resources, has_finally },
            Span::new(start, self.prev_end()),
            children,
        ))
    }

    fn parse_switch(&mut self) -> PResult<AstNode> {
        let start = self.expect_kw(Kw::Switch)?.start;
        self.expect_punct("(")?;
        let selector = self.parse_expression()?;
        self.expect_punct(")")?;
        self.expect_punct("{")?;
        let mut children = vec![selector];
        let mut group: Vec<AstNode> = Vec::new();
        let mut group_start = self.offset();
        let flush =
            |children: &mut Vec<AstNode>, group: &mut Vec<AstNode>, start: usize, end: usize| {
                if !group.is_empty() {
                    let stmts = std::mem::take(group);
                    children.push(AstNode::new(NodeKind::Block, Span::new(start, end), stmts));
                }
            };
        while !self.check_punct("}") {
            if self.at_end() {
                return self.err("unterminated switch", &["}"]);
            }
            if self.check_kw(Kw::Case) || self.check_kw(Kw::Default) {
                flush(&mut children, &mut group, group_start, self.prev_end());
                group_start = self.offset();
                let is_default = self.check_kw(Kw::Default);
                self.bump();
                if !is_default {
                    self.parse_expression()?;
                    while self.eat_punct(",") {
                        self.parse_expression()?;
                    }
                }
                if self.eat_punct("->") {
                    // Arrow form: one statement or block per label.
                    if self.check_punct("{") {
                        group.push(self.parse_block()?);
                    } else if self.check_kw(Kw::Throw) {
                        group.push(self.parse_statement()?);
                    } else {
                        let e = self.parse_expression()?;
                        let span = e.span;
                        self.expect_punct(";")?;
                        group.push(AstNode::new(NodeKind::ExprStmt, span, vec![e]));
                    }
                } else {
                    self.expect_punct(":")?;
                }
            } else {
                group.push(self.parse_statement()?);
            }
        }
        flush(&mut children, &mut group, group_start, self.prev_end());
        self.expect_punct("}")?;
        Ok(AstNode::new(NodeKind::Switch, Span::new(start, self.prev_end()), children))
    }

    // --- expressions ------------------------------------------------------

    pub(crate) fn parse_expression(&mut self) -> PResult<AstNode> {
        self.parse_assignment()
    }

    fn parse_assignment(&mut self) -> PResult<AstNode> {
        let lhs = self.parse_ternary()?;
        const ASSIGN_OPS: &[&str] = &[
            "=", "+=", "-=", "*=", "/=", "%=", "&=", "|=", "^=", "<<=", ">>=", ">>>=",
        ];
        if let Some(op) = ASSIGN_OPS
            .iter()
            .find(|op| self.check_punct(op))
            .copied()
        {
            self.bump();
            let rhs = self.parse_assignment()?;
            let span = Span::new(lhs.span.start, rhs.span.end);
            return Ok(AstNode::new(
                NodeKind::Assignment { op: op.to_string() },
                span,
                vec![lhs, rhs],
            ));
        }
        Ok(lhs)
    }

    fn parse_ternary(&mut self) -> PResult<AstNode> {
        let cond = self.parse_binary(0)?;
        if self.eat_punct("?") {
            let then = self.parse_expression()?;
            self.expect_punct(":")?;
            let other = self.parse_expression()?;
            let span = Span::new(cond.span.start, other.span.end);
            return Ok(AstNode::new(
                NodeKind::BinaryOp { op: "?:".to_string() },
                span,
                vec![cond, then, other],
            ));
        }
        Ok(cond)
    }

    fn binary_op_at(&self, min_prec: u8) -> Option<(&'static str, u8)> {
        // (operator, precedence); higher binds tighter.
        const OPS: &[(&str, u8)] = &[
            ("||", 1),
            ("&&", 2),
            ("|", 3),
            ("^", 4),
            ("&", 5),
            ("==", 6),
            ("!=", 6),
            ("<", 7),
            (">", 7),
            ("<=", 7),
            (">=", 7),
            ("<<", 8),
            (">>", 8),
            (">>>", 8),
            ("+", 9),
            ("-", 9),
            ("*", 10),
            ("/", 10),
            ("%", 10),
        ];
        let t = self.peek()?;
        if t.is_kw(Kw::Instanceof) && 7 >= min_prec {
            return Some(("instanceof", 7));
        }
        for (op, prec) in OPS {
            if t.is_punct(op) && *prec >= min_prec {
                return Some((op, *prec));
            }
        }
        None
    }

    fn parse_binary(&mut self, min_prec: u8) -> PResult<AstNode> {
        let mut lhs = self.parse_unary()?;
        while let Some((op, prec)) = self.binary_op_at(min_prec) {
            self.bump();
            let rhs = if op == "instanceof" {
                let start = self.offset();
                let t = self.parse_type()?;
                AstNode::new(NodeKind::Name { text: t }, Span::new(start, self.prev_end()), vec![])
            } else {
                self.parse_binary(prec + 1)?
            };
            let span = Span::new(lhs.span.start, rhs.span.end);
            lhs = AstNode::new(NodeKind::BinaryOp { op: op.to_string() }, span, vec![lhs, rhs]);
        }
        Ok(lhs)
    }

    fn parse_unary(&mut self) -> PResult<AstNode> {
        let start = self.offset();
        for op in ["!", "~", "++", "--", "+", "-"] {
            if self.check_punct(op) {
                self.bump();
                let operand = self.parse_unary()?;
                let span = Span::new(start, operand.span.end);
                return Ok(AstNode::new(
                    NodeKind::UnaryOp { op: op.to_string(), prefix: true },
                    span,
                    vec![operand],
                ));
            }
        }
        // Cast: `(Type) unary` — resolved by backtracking.
        if self.check_punct("(") {
            let save = self.pos;
            if let Some(node) = self.try_parse_cast(start)? {
                return Ok(node);
            }
            self.pos = save;
        }
        self.parse_postfix()
    }

    fn try_parse_cast(&mut self, start: usize) -> PResult<Option<AstNode>> {
        let save = self.pos;
        self.bump(); // '('
        let Ok(type_name) = self.parse_type() else {
            self.pos = save;
            return Ok(None);
        };
        if !self.eat_punct(")") {
            self.pos = save;
            return Ok(None);
        }
        // `(x)` could be a parenthesized expression; treat it as a cast only
        // when what follows can begin an operand. For identifier "types" a
        // following `+`/`-` is read as arithmetic on the parenthesized value,
        // matching how javac resolves the ambiguity without type context.
        let operand_follows = matches!(
            self.peek(),
            Some(Token {
                kind: TokenKind::Ident(_)
                    | TokenKind::Kw(Kw::New | Kw::This | Kw::Super)
                    | TokenKind::Int(_)
                    | TokenKind::Float(_)
                    | TokenKind::Str(_)
                    | TokenKind::CharLit(_)
                    | TokenKind::Bool(_)
                    | TokenKind::Null,
                ..
            })
        ) || self.check_punct("(")
            || self.check_punct("!")
            || self.check_punct("~");
        let primitive_or_array = type_name.ends_with("[]")
            || matches!(
                type_name.as_str(),
                "boolean" | "byte" | "char" | "double" | "float" | "int" | "long" | "short"
            );
        let numeric_follows = self.check_punct("+") || self.check_punct("-");
        if !(operand_follows || (primitive_or_array && numeric_follows)) {
            self.pos = save;
            return Ok(None);
        }
        let operand = self.parse_unary()?;
        let span = Span::new(start, operand.span.end);
        Ok(Some(AstNode::new(NodeKind::Cast { type_name }, span, vec![operand])))
    }

    fn parse_postfix(&mut self) -> PResult<AstNode> {
        let mut expr = self.parse_primary()?;
        loop {
            if self.check_punct(".") {
                // Member access or method call.
                self.bump();
                if self.check_punct("<") {
                    self.skip_type_args()?; // explicit type witness
                }
                if self.check_kw(Kw::New) {
                    // Qualified `outer.new Inner()` — rare; treat as creation.
                    self.bump();
                    let type_name = self.parse_type()?;
                    let args = self.parse_args()?;
                    let span = Span::new(expr.span.start, self.prev_end());
                    let arg_count = args.len();
                    let mut children = vec![expr];
                    children.extend(args);
                    expr = AstNode::new(
                        NodeKind::ObjectCreation { type_name, arg_count },
                        span,
                        children,
                    );
                    continue;
                }
                if self.check_kw(Kw::This) || self.check_kw(Kw::Super) {
                    let t = self.bump().unwrap();
                    let field = match &t.kind {
                        TokenKind::Kw(kw) => kw.as_str().to_string(),
                        _ => unreachable!(),
                    };
                    let span = Span::new(expr.span.start, self.prev_end());
                    expr = AstNode::new(NodeKind::FieldAccess { field }, span, vec![expr]);
                    continue;
                }
                let (name, _) = match self.expect_ident() {
                    Ok(v) => v,
                    Err(_) if self.check_kw(Kw::Class) => {
                        self.bump();
                        ("class".to_string(), Span::new(0, 0))
                    }
                    Err(e) => return Err(e),
                };
                if self.check_punct("(") {
                    let args = self.parse_args()?;
                    let span = Span::new(expr.span.start, self.prev_end());
                    let mut children = vec![expr];
                    children.extend(args);
                    expr = AstNode::new(
                        NodeKind::MethodCall { method: name, has_receiver: true },
                        span,
                        children,
                    );
                } else {
                    let span = Span::new(expr.span.start, self.prev_end());
                    expr = AstNode::new(NodeKind::FieldAccess { field: name }, span, vec![expr]);
                }
            } else if self.check_punct("[") {
                self.bump();
                let index = self.parse_expression()?;
                self.expect_punct("]")?;
                let span = Span::new(expr.span.start, self.prev_end());
                expr = AstNode::new(NodeKind::ArrayAccess, span, vec![expr, index]);
            } else if self.check_punct("::") {
                // Method reference — opaque, no call emitted.
                self.bump();
                if self.check_kw(Kw::New) {
                    self.bump();
                } else {
                    self.expect_ident()?;
                }
                let span = Span::new(expr.span.start, self.prev_end());
                expr = AstNode::new(
                    NodeKind::LambdaOpaque { params: vec![] },
                    span,
                    vec![expr],
                );
            } else if self.check_punct("++") || self.check_punct("--") {
                let op = match self.bump().unwrap().kind {
                    TokenKind::Punct(p) => p.to_string(),
                    _ => unreachable!(),
                };
                let span = Span::new(expr.span.start, self.prev_end());
                expr = AstNode::new(NodeKind::UnaryOp { op, prefix: false }, span, vec![expr]);
            } else {
                return Ok(expr);
            }
        }
    }

    fn parse_args(&mut self) -> PResult<Vec<AstNode>> {
        self.expect_punct("(")?;
        let mut args = Vec::new();
        if !self.check_punct(")") {
            loop {
                args.push(self.parse_expression()?);
                if !self.eat_punct(",") {
                    break;
                }
            }
        }
        self.expect_punct(")")?;
        Ok(args)
    }

    fn parse_primary(&mut self) -> PResult<AstNode> {
        let start = self.offset();
        let Some(tok) = self.peek().cloned() else {
            return self.err("expected expression", &["expression"]);
        };
        match tok.kind {
            TokenKind::Int(v) => {
                self.bump();
                Ok(AstNode::new(NodeKind::Literal { value: LiteralValue::Int(v) }, tok.span, vec![]))
            }
            TokenKind::Float(v) => {
                self.bump();
                Ok(AstNode::new(
                    NodeKind::Literal { value: LiteralValue::Float(v) },
                    tok.span,
                    vec![],
                ))
            }
            TokenKind::Str(v) => {
                self.bump();
                Ok(AstNode::new(NodeKind::Literal { value: LiteralValue::Str(v) }, tok.span, vec![]))
            }
            TokenKind::CharLit(v) => {
                self.bump();
                Ok(AstNode::new(
                    NodeKind::Literal { value: LiteralValue::Char(v) },
                    tok.span,
                    vec![],
                ))
            }
            TokenKind::Bool(v) => {
                self.bump();
                Ok(AstNode::new(
                    NodeKind::Literal { value: LiteralValue::Bool(v) },
                    tok.span,
                    vec![],
                ))
            }
            TokenKind::Null => {
                self.bump();
                Ok(AstNode::new(NodeKind::Literal { value: LiteralValue::Null }, tok.span, vec![]))
            }
            TokenKind::Kw(Kw::This) => {
                self.bump();
                if self.check_punct("(") {
                    let args = self.parse_args()?;
                    let span = Span::new(start, self.prev_end());
                    return Ok(AstNode::new(
                        NodeKind::MethodCall { method: "this".to_string(), has_receiver: false },
                        span,
                        args,
                    ));
                }
                Ok(AstNode::new(NodeKind::Name { text: "this".to_string() }, tok.span, vec![]))
            }
            TokenKind::Kw(Kw::Super) => {
                self.bump();
                if self.check_punct("(") {
                    let args = self.parse_args()?;
                    let span = Span::new(start, self.prev_end());
                    return Ok(AstNode::new(
                        NodeKind::MethodCall { method: "super".to_string(), has_receiver: false },
                        span,
                        args,
                    ));
                }
                Ok(AstNode::new(NodeKind::Name { text: "super".to_string() }, tok.span, vec![]))
            }
            TokenKind::Kw(Kw::New) => self.parse_creation(),
            TokenKind::Kw(kw) if kw.is_primitive_type() || kw == Kw::Void => {
                // `int.class`, `void.class` style references.
                self.bump();
                while self.check_punct("[") && matches!(self.peek_at(1), Some(t) if t.is_punct("]"))
                {
                    self.pos += 2;
                }
                Ok(AstNode::new(
                    NodeKind::Name { text: kw.as_str().to_string() },
                    Span::new(start, self.prev_end()),
                    vec![],
                ))
            }
            TokenKind::Punct("(") => {
                // Lambda `(a, b) -> ...` or parenthesized expression.
                if let Some(lambda) = self.try_parse_lambda(start)? {
                    return Ok(lambda);
                }
                self.bump();
                let inner = self.parse_expression()?;
                self.expect_punct(")")?;
                Ok(inner)
            }
            TokenKind::Ident(name) => {
                // Single-parameter lambda `x -> ...`.
                if matches!(self.peek_at(1), Some(t) if t.is_punct("->")) {
                    self.bump();
                    self.bump();
                    return self.parse_lambda_body(
                        vec![Param { type_name: None, name }],
                        start,
                    );
                }
                self.bump();
                if self.check_punct("(") {
                    let args = self.parse_args()?;
                    let span = Span::new(start, self.prev_end());
                    return Ok(AstNode::new(
                        NodeKind::MethodCall { method: name, has_receiver: false },
                        span,
                        args,
                    ));
                }
                Ok(AstNode::new(NodeKind::Name { text: name }, tok.span, vec![]))
            }
            _ => self.err("expected expression", &["expression"]),
        }
    }

    fn parse_creation(&mut self) -> PResult<AstNode> {
        let start = self.expect_kw(Kw::New)?.start;
        if self.check_punct("<") {
            self.skip_type_args()?;
        }
        let type_name = self.parse_type_for_creation()?;
        if self.check_punct("[") {
            // Array creation: `new T[expr]...` or `new T[] { ... }`.
            let mut children = Vec::new();
            let mut tname = type_name;
            while self.eat_punct("[") {
                if !self.check_punct("]") {
                    children.push(self.parse_expression()?);
                }
                self.expect_punct("]")?;
                tname.push_str("[]");
            }
            if self.check_punct("{") {
                children.push(self.parse_variable_init()?);
            }
            let span = Span::new(start, self.prev_end());
            return Ok(AstNode::new(NodeKind::ArrayCreation { type_name: tname }, span, children));
        }
        let args = self.parse_args()?;
        let arg_count = args.len();
        let mut children = args;
        if self.check_punct("{") {
            // Anonymous class body.
            let members = self.parse_class_body(false)?;
            children.extend(members);
        }
        let span = Span::new(start, self.prev_end());
        Ok(AstNode::new(NodeKind::ObjectCreation { type_name, arg_count }, span, children))
    }

    /// Type after `new`: like `parse_type` but without array-suffix
    /// consumption (creation handles `[` itself).
    fn parse_type_for_creation(&mut self) -> PResult<String> {
        match self.peek() {
            Some(Token { kind: TokenKind::Kw(kw), .. }) if kw.is_primitive_type() => {
                let n = kw.as_str().to_string();
                self.pos += 1;
                Ok(n)
            }
            _ => {
                let (mut n, _) = self.expect_ident()?;
                if self.check_punct("<") {
                    self.skip_type_args()?;
                }
                while self.check_punct(".")
                    && matches!(self.peek_at(1), Some(Token { kind: TokenKind::Ident(_), .. }))
                {
                    self.bump();
                    let (seg, _) = self.expect_ident()?;
                    n = seg;
                    if self.check_punct("<") {
                        self.skip_type_args()?;
                    }
                }
                Ok(n)
            }
        }
    }

    fn try_parse_lambda(&mut self, start: usize) -> PResult<Option<AstNode>> {
        let save = self.pos;
        self.bump(); // '('
        let mut params = Vec::new();
        if !self.check_punct(")") {
            loop {
                while self.eat_kw(Kw::Final) {}
                // Either `name` or `Type name`.
                let can_start_param = matches!(
                    self.peek(),
                    Some(Token { kind: TokenKind::Ident(_), .. })
                ) || matches!(
                    self.peek(),
                    Some(Token { kind: TokenKind::Kw(kw), .. }) if kw.is_primitive_type()
                );
                if !can_start_param {
                    self.pos = save;
                    return Ok(None);
                }
                let save_param = self.pos;
                if let Ok(type_name) = self.parse_type() {
                    if let Ok((name, _)) = self.expect_ident() {
                        params.push(Param { type_name: Some(type_name), name });
                    } else {
                        // The "type" was actually the bare parameter name.
                        self.pos = save_param;
                        let Ok((name, _)) = self.expect_ident() else {
                            self.pos = save;
                            return Ok(None);
                        };
                        params.push(Param { type_name: None, name });
                    }
                } else {
                    self.pos = save;
                    return Ok(None);
                }
                if !self.eat_punct(",") {
                    break;
                }
            }
        }
        if !self.eat_punct(")") || !self.eat_punct("->") {
            self.pos = save;
            return Ok(None);
        }
        self.parse_lambda_body(params, start).map(Some)
    }

    fn parse_lambda_body(&mut self, params: Vec<Param>, start: usize) -> PResult<AstNode> {
        let children = if self.check_punct("{") {
            vec![self.parse_block()?]
        } else {
            vec![self.parse_expression()?]
        };
        let span = Span::new(start, self.prev_end());
        Ok(AstNode::new(NodeKind::LambdaOpaque { params }, span, children))
    }
}
