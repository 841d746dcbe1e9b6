//! Call-sequence extraction.
//!
//! The AST is linearized depth-first in source order into control markers
//! (`TRY`, `CATCH`, `FINALLY`, `LOOP`, `IF`, `ELSE`, each closed by `END`)
//! and `CALL` tokens. A call token records the method name, the inferred
//! receiver type, the argument count and the guard predicates dominating
//! the call site. Within an expression the receiver's calls come first,
//! then argument calls left to right, then the call itself — Java's
//! evaluation order.
//!
//! try-with-resources additionally emits one synthetic `close()` per
//! resource just before the try's `END`, since the language guarantees
//! those calls happen.

mod guards;
mod types;

pub use guards::{BranchSide, CallCtx, GuardOp, GuardPredicate, Operand};
pub use types::{infer_types, infer_types_with, ReturnTypeTable, TypeEnv};

use std::collections::BTreeSet;
use std::fmt;

use crate::ast::{AstNode, LiteralValue, NodeKind, ParsedSnippet, SnippetKind, Span};

/// One element of a call sequence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SeqToken {
    Try,
    Catch { exception: String },
    Finally,
    Loop,
    If,
    Else,
    End,
    Call(CallTok),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CallTok {
    pub method: String,
    /// Inferred receiver type; `None` when unknown.
    pub receiver_type: Option<String>,
    /// Source text of the receiver expression, when there is one.
    pub receiver_expr: Option<String>,
    pub arg_count: usize,
    pub guards: BTreeSet<GuardPredicate>,
    pub span: Span,
}

impl SeqToken {
    pub fn is_opener(&self) -> bool {
        matches!(
            self,
            SeqToken::Try
                | SeqToken::Catch { .. }
                | SeqToken::Finally
                | SeqToken::Loop
                | SeqToken::If
                | SeqToken::Else
        )
    }

    pub fn as_call(&self) -> Option<&CallTok> {
        match self {
            SeqToken::Call(c) => Some(c),
            _ => None,
        }
    }
}

impl fmt::Display for SeqToken {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SeqToken::Try => write!(f, "TRY"),
            SeqToken::Catch { exception } => write!(f, "CATCH({exception})"),
            SeqToken::Finally => write!(f, "FINALLY"),
            SeqToken::Loop => write!(f, "LOOP"),
            SeqToken::If => write!(f, "IF"),
            SeqToken::Else => write!(f, "ELSE"),
            SeqToken::End => write!(f, "END"),
            SeqToken::Call(c) => {
                write!(
                    f,
                    "CALL {} rcv:{}",
                    c.method,
                    c.receiver_type.as_deref().unwrap_or("UNKNOWN")
                )?;
                if !c.guards.is_empty() {
                    let gs: Vec<String> = c.guards.iter().map(|g| g.to_string()).collect();
                    write!(f, " @{{{}}}", gs.join(", "))?;
                }
                Ok(())
            }
        }
    }
}

/// Ordered token list for one snippet.
#[derive(Debug, Clone, PartialEq)]
pub struct CallSequence {
    pub tokens: Vec<SeqToken>,
    pub snippet_kind: SnippetKind,
}

impl CallSequence {
    /// True when every opener is closed by exactly one `END` and the
    /// running counter never goes negative.
    pub fn is_balanced(&self) -> bool {
        let mut depth = 0i64;
        for t in &self.tokens {
            if t.is_opener() {
                depth += 1;
            } else if matches!(t, SeqToken::End) {
                depth -= 1;
                if depth < 0 {
                    return false;
                }
            }
        }
        depth == 0
    }

    pub fn calls(&self) -> impl Iterator<Item = &CallTok> {
        self.tokens.iter().filter_map(SeqToken::as_call)
    }
}

struct CondFrame<'a> {
    cond: &'a AstNode,
    side: BranchSide,
}

struct Extractor<'a> {
    src: &'a str,
    env: &'a TypeEnv,
    tokens: Vec<SeqToken>,
    conds: Vec<CondFrame<'a>>,
}

/// Linearize a parsed snippet using a previously built type environment.
pub fn extract_sequence(snippet: &ParsedSnippet, env: &TypeEnv) -> CallSequence {
    let mut ex = Extractor {
        src: &snippet.source,
        env,
        tokens: Vec::new(),
        conds: Vec::new(),
    };
    ex.walk(&snippet.ast);
    CallSequence {
        tokens: ex.tokens,
        snippet_kind: snippet.kind,
    }
}

impl<'a> Extractor<'a> {
    fn text_of(&self, node: &AstNode) -> String {
        self.src[node.span.start..node.span.end].trim().to_string()
    }

    fn walk(&mut self, node: &'a AstNode) {
        match &node.kind {
            NodeKind::Try { n_resources, has_finally } => {
                self.tokens.push(SeqToken::Try);
                let resources = &node.children[..*n_resources];
                for r in resources {
                    self.walk(r);
                }
                let body = &node.children[*n_resources];
                self.walk(body);
                // Implicit close() per resource, innermost first.
                for r in resources.iter().rev() {
                    if let NodeKind::LocalVarDecl { type_name, name } = &r.kind {
                        self.tokens.push(SeqToken::Call(CallTok {
                            method: "close".to_string(),
                            receiver_type: Some(type_name.clone()),
                            receiver_expr: Some(name.clone()),
                            arg_count: 0,
                            guards: self.guards_for(&CallCtx {
                                receiver_text: Some(name.clone()),
                                arg_texts: vec![],
                            }),
                            span: r.span,
                        }));
                    } else {
                        // Existing-variable resource: `try (res) { ... }`.
                        let text = self.text_of(r);
                        let ty = self.env.lookup(&text, r.span.start).map(str::to_string);
                        self.tokens.push(SeqToken::Call(CallTok {
                            method: "close".to_string(),
                            receiver_type: ty,
                            receiver_expr: Some(text.clone()),
                            arg_count: 0,
                            guards: self.guards_for(&CallCtx {
                                receiver_text: Some(text),
                                arg_texts: vec![],
                            }),
                            span: r.span,
                        }));
                    }
                }
                self.tokens.push(SeqToken::End);
                let rest = &node.children[*n_resources + 1..];
                if *has_finally {
                    let (fin, clauses) = rest.split_last().expect("finally block present");
                    for clause in clauses {
                        self.walk_catch(clause);
                    }
                    self.tokens.push(SeqToken::Finally);
                    self.walk(fin);
                    self.tokens.push(SeqToken::End);
                } else {
                    for clause in rest {
                        self.walk_catch(clause);
                    }
                }
            }
            NodeKind::While => {
                self.tokens.push(SeqToken::Loop);
                self.walk(&node.children[0]);
                self.conds.push(CondFrame {
                    cond: &node.children[0],
                    side: BranchSide::ConditionTrue,
                });
                self.walk(&node.children[1]);
                self.conds.pop();
                self.tokens.push(SeqToken::End);
            }
            NodeKind::DoWhile => {
                // Body runs before the first check, so it is not dominated.
                self.tokens.push(SeqToken::Loop);
                self.walk(&node.children[0]);
                self.walk(&node.children[1]);
                self.tokens.push(SeqToken::End);
            }
            NodeKind::For { n_init, has_cond, n_update } => {
                self.tokens.push(SeqToken::Loop);
                let mut idx = 0;
                for _ in 0..*n_init {
                    self.walk(&node.children[idx]);
                    idx += 1;
                }
                let cond = if *has_cond {
                    let c = &node.children[idx];
                    self.walk(c);
                    idx += 1;
                    Some(c)
                } else {
                    None
                };
                if let Some(c) = cond {
                    self.conds.push(CondFrame { cond: c, side: BranchSide::ConditionTrue });
                }
                for _ in 0..*n_update {
                    self.walk(&node.children[idx]);
                    idx += 1;
                }
                self.walk(&node.children[idx]);
                if cond.is_some() {
                    self.conds.pop();
                }
                self.tokens.push(SeqToken::End);
            }
            NodeKind::EnhancedFor { .. } => {
                self.tokens.push(SeqToken::Loop);
                self.walk(&node.children[0]);
                self.walk(&node.children[1]);
                self.tokens.push(SeqToken::End);
            }
            NodeKind::If => {
                self.tokens.push(SeqToken::If);
                self.walk(&node.children[0]);
                self.conds.push(CondFrame {
                    cond: &node.children[0],
                    side: BranchSide::ConditionTrue,
                });
                self.walk(&node.children[1]);
                self.conds.pop();
                self.tokens.push(SeqToken::End);
                if let Some(else_branch) = node.children.get(2) {
                    self.tokens.push(SeqToken::Else);
                    self.conds.push(CondFrame {
                        cond: &node.children[0],
                        side: BranchSide::ConditionFalse,
                    });
                    self.walk(else_branch);
                    self.conds.pop();
                    self.tokens.push(SeqToken::End);
                }
            }
            NodeKind::MethodCall { method, .. } => {
                if let Some(recv) = node.call_receiver() {
                    self.walk(recv);
                }
                for arg in node.call_args() {
                    self.walk(arg);
                }
                let receiver = node.call_receiver();
                let receiver_expr = receiver.map(|r| self.text_of(r));
                let receiver_type = receiver.and_then(|r| self.receiver_type(r));
                let ctx = CallCtx {
                    receiver_text: receiver_expr.clone(),
                    arg_texts: node.call_args().iter().map(|a| self.text_of(a)).collect(),
                };
                self.tokens.push(SeqToken::Call(CallTok {
                    method: method.clone(),
                    receiver_type,
                    receiver_expr,
                    arg_count: node.call_args().len(),
                    guards: self.guards_for(&ctx),
                    span: node.span,
                }));
            }
            NodeKind::ObjectCreation { type_name, arg_count } => {
                let args = &node.children[..*arg_count];
                for arg in args {
                    self.walk(arg);
                }
                let ctx = CallCtx {
                    receiver_text: None,
                    arg_texts: args.iter().map(|a| self.text_of(a)).collect(),
                };
                self.tokens.push(SeqToken::Call(CallTok {
                    method: format!("new {type_name}"),
                    receiver_type: Some(type_name.clone()),
                    receiver_expr: None,
                    arg_count: *arg_count,
                    guards: self.guards_for(&ctx),
                    span: node.span,
                }));
                // Anonymous class body members, in source order.
                for member in &node.children[*arg_count..] {
                    self.walk(member);
                }
            }
            _ => {
                for c in &node.children {
                    self.walk(c);
                }
            }
        }
    }

    fn walk_catch(&mut self, clause: &'a AstNode) {
        let NodeKind::CatchClause { types, .. } = &clause.kind else {
            // Malformed tree; walk defensively.
            self.walk(clause);
            return;
        };
        let exception = types.first().cloned().unwrap_or_default();
        self.tokens.push(SeqToken::Catch { exception });
        for c in &clause.children {
            self.walk(c);
        }
        self.tokens.push(SeqToken::End);
    }

    fn guards_for(&self, ctx: &CallCtx) -> BTreeSet<GuardPredicate> {
        let mut out = Vec::new();
        for frame in &self.conds {
            guards::normalize_condition(frame.cond, frame.side, ctx, &mut out);
        }
        out.into_iter().collect()
    }

    /// Inferred type of a receiver expression.
    fn receiver_type(&self, expr: &AstNode) -> Option<String> {
        match &expr.kind {
            NodeKind::Name { text } => {
                if text == "this" || text == "super" {
                    return None;
                }
                if let Some(ty) = self.env.lookup(text, expr.span.start) {
                    return Some(ty.to_string());
                }
                // An unresolved capitalized name is read as a class used for
                // a static call, e.g. `Cipher.getInstance(...)`.
                if text.chars().next().is_some_and(|c| c.is_uppercase()) {
                    return Some(text.clone());
                }
                None
            }
            NodeKind::ObjectCreation { type_name, .. } => Some(type_name.clone()),
            NodeKind::ArrayCreation { type_name } if !type_name.is_empty() => {
                Some(type_name.clone())
            }
            NodeKind::Cast { type_name } => Some(type_name.clone()),
            NodeKind::Literal { value: LiteralValue::Str(_) } => Some("String".to_string()),
            NodeKind::MethodCall { method, .. } => {
                let recv = expr.call_receiver()?;
                let base = self.receiver_type(recv)?;
                self.env
                    .return_types()
                    .lookup(&base, method)
                    .map(str::to_string)
            }
            NodeKind::ArrayAccess => {
                let base = self.receiver_type(&expr.children[0])?;
                base.strip_suffix("[]").map(str::to_string)
            }
            NodeKind::FieldAccess { field } => {
                // `this.field` resolves through the environment.
                if matches!(&expr.children[0].kind, NodeKind::Name { text } if text == "this") {
                    return self.env.lookup(field, expr.span.start).map(str::to_string);
                }
                None
            }
            _ => None,
        }
    }
}

/// Guard predicates dominating a call site, located by its span. This is
/// the standalone form of what `extract_sequence` computes inline.
pub fn dominating_guards(snippet: &ParsedSnippet, call_site: Span) -> BTreeSet<GuardPredicate> {
    // Path search carrying (condition node, side) frames.
    fn search<'a>(
        node: &'a AstNode,
        call_site: Span,
        stack: &mut Vec<(&'a AstNode, BranchSide)>,
        out: &mut Option<(Vec<(&'a AstNode, BranchSide)>, &'a AstNode)>,
    ) {
        if out.is_some() {
            return;
        }
        if matches!(node.kind, NodeKind::MethodCall { .. }) && node.span == call_site {
            *out = Some((stack.clone(), node));
            return;
        }
        match &node.kind {
            NodeKind::If => {
                search(&node.children[0], call_site, stack, out);
                stack.push((&node.children[0], BranchSide::ConditionTrue));
                search(&node.children[1], call_site, stack, out);
                stack.pop();
                if let Some(else_branch) = node.children.get(2) {
                    stack.push((&node.children[0], BranchSide::ConditionFalse));
                    search(else_branch, call_site, stack, out);
                    stack.pop();
                }
            }
            NodeKind::While => {
                search(&node.children[0], call_site, stack, out);
                stack.push((&node.children[0], BranchSide::ConditionTrue));
                search(&node.children[1], call_site, stack, out);
                stack.pop();
            }
            NodeKind::For { n_init, has_cond, n_update } => {
                let mut idx = 0;
                for _ in 0..*n_init {
                    search(&node.children[idx], call_site, stack, out);
                    idx += 1;
                }
                let cond = if *has_cond {
                    let c = &node.children[idx];
                    search(c, call_site, stack, out);
                    idx += 1;
                    Some(c)
                } else {
                    None
                };
                if let Some(c) = cond {
                    stack.push((c, BranchSide::ConditionTrue));
                }
                for _ in 0..(*n_update + 1) {
                    search(&node.children[idx], call_site, stack, out);
                    idx += 1;
                }
                if cond.is_some() {
                    stack.pop();
                }
            }
            _ => {
                for c in &node.children {
                    search(c, call_site, stack, out);
                }
            }
        }
    }

    let mut stack = Vec::new();
    let mut out = None;
    search(&snippet.ast, call_site, &mut stack, &mut out);
    let Some((path, call)) = out else {
        return BTreeSet::new();
    };

    let text_of = |n: &AstNode| snippet.source[n.span.start..n.span.end].trim().to_string();
    let ctx = CallCtx {
        receiver_text: call.call_receiver().map(text_of),
        arg_texts: call.call_args().iter().map(text_of).collect(),
    };
    let mut preds = Vec::new();
    for (cond, side) in path {
        guards::normalize_condition(cond, side, &ctx, &mut preds);
    }
    preds.into_iter().collect()
}
