//! Guard predicates and their normalization.
//!
//! A guard is a condition that dominates a call site, rewritten so it talks
//! about the call itself: the receiver becomes `rcv`, the k-th argument
//! becomes `argk`. Conditions that cannot be expressed in this mini-language
//! with the call's operands are dropped.

use std::fmt;

use crate::ast::{AstNode, LiteralValue, NodeKind};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Operand {
    /// The call's receiver object.
    Rcv,
    /// The call's k-th argument (0-based).
    Arg(usize),
    Null,
    True,
    False,
    Int(i64),
    /// Zero-argument call on another operand, e.g. `rcv.size()`.
    CallOn(Box<Operand>, String),
}

impl fmt::Display for Operand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Operand::Rcv => write!(f, "rcv"),
            Operand::Arg(k) => write!(f, "arg{k}"),
            Operand::Null => write!(f, "null"),
            Operand::True => write!(f, "true"),
            Operand::False => write!(f, "false"),
            Operand::Int(v) => write!(f, "{v}"),
            Operand::CallOn(base, m) => write!(f, "{base}.{m}()"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum GuardOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    /// Unary: the operand is known true.
    Truthy,
    /// Unary: the operand is known false.
    Falsy,
}

impl GuardOp {
    pub fn negated(self) -> GuardOp {
        match self {
            GuardOp::Eq => GuardOp::Ne,
            GuardOp::Ne => GuardOp::Eq,
            GuardOp::Lt => GuardOp::Ge,
            GuardOp::Ge => GuardOp::Lt,
            GuardOp::Gt => GuardOp::Le,
            GuardOp::Le => GuardOp::Gt,
            GuardOp::Truthy => GuardOp::Falsy,
            GuardOp::Falsy => GuardOp::Truthy,
        }
    }

    /// Mirror for swapped operands: `a < b` equals `b > a`.
    fn mirrored(self) -> GuardOp {
        match self {
            GuardOp::Lt => GuardOp::Gt,
            GuardOp::Gt => GuardOp::Lt,
            GuardOp::Le => GuardOp::Ge,
            GuardOp::Ge => GuardOp::Le,
            other => other,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            GuardOp::Eq => "==",
            GuardOp::Ne => "!=",
            GuardOp::Lt => "<",
            GuardOp::Le => "<=",
            GuardOp::Gt => ">",
            GuardOp::Ge => ">=",
            GuardOp::Truthy => "",
            GuardOp::Falsy => "!",
        }
    }
}

/// Normalized predicate over the call's operands. Binary forms always keep
/// a constant side on the right.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct GuardPredicate {
    pub lhs: Operand,
    pub op: GuardOp,
    pub rhs: Option<Operand>,
}

impl GuardPredicate {
    pub fn unary(op: GuardOp, lhs: Operand) -> Self {
        debug_assert!(matches!(op, GuardOp::Truthy | GuardOp::Falsy));
        GuardPredicate { lhs, op, rhs: None }
    }

    pub fn binary(lhs: Operand, op: GuardOp, rhs: Operand) -> Self {
        GuardPredicate { lhs, op, rhs: Some(rhs) }.canonicalized()
    }

    pub fn negated(&self) -> GuardPredicate {
        GuardPredicate {
            lhs: self.lhs.clone(),
            op: self.op.negated(),
            rhs: self.rhs.clone(),
        }
    }

    fn canonicalized(self) -> GuardPredicate {
        let Some(rhs) = self.rhs else { return self };
        let lhs_const = is_const(&self.lhs);
        let rhs_const = is_const(&rhs);
        // Constant side goes right; `x == true` collapses to truthiness.
        let (lhs, op, rhs) = if lhs_const && !rhs_const {
            (rhs, self.op.mirrored(), self.lhs)
        } else {
            (self.lhs, self.op, rhs)
        };
        match (&op, &rhs) {
            (GuardOp::Eq, Operand::True) | (GuardOp::Ne, Operand::False) => {
                GuardPredicate::unary(GuardOp::Truthy, lhs)
            }
            (GuardOp::Eq, Operand::False) | (GuardOp::Ne, Operand::True) => {
                GuardPredicate::unary(GuardOp::Falsy, lhs)
            }
            _ => GuardPredicate { lhs, op, rhs: Some(rhs) },
        }
    }
}

fn is_const(op: &Operand) -> bool {
    matches!(op, Operand::Null | Operand::True | Operand::False | Operand::Int(_))
}

impl fmt::Display for GuardPredicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (&self.op, &self.rhs) {
            (GuardOp::Truthy, _) => write!(f, "{}", self.lhs),
            (GuardOp::Falsy, _) => write!(f, "!{}", self.lhs),
            (op, Some(rhs)) => write!(f, "{}{}{}", self.lhs, op.symbol(), rhs),
            (op, None) => write!(f, "{}{}", self.lhs, op.symbol()),
        }
    }
}

/// How a condition dominates a site: through the branch where it held, or
/// the branch where it failed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BranchSide {
    ConditionTrue,
    ConditionFalse,
}

/// The call-site context a condition is rewritten against: source texts of
/// the receiver expression and each argument.
#[derive(Debug, Clone, Default)]
pub struct CallCtx {
    pub receiver_text: Option<String>,
    pub arg_texts: Vec<String>,
}

impl CallCtx {
    fn resolve_name(&self, name: &str) -> Option<Operand> {
        if self.receiver_text.as_deref() == Some(name) {
            return Some(Operand::Rcv);
        }
        self.arg_texts
            .iter()
            .position(|a| a == name)
            .map(Operand::Arg)
    }
}

/// Rewrite one dominating condition into zero or more predicates for the
/// given call. Conjunctions split; negation flips the operator; anything
/// that does not reduce to the mini-language is dropped.
pub fn normalize_condition(
    cond: &AstNode,
    side: BranchSide,
    ctx: &CallCtx,
    out: &mut Vec<GuardPredicate>,
) {
    let positive = side == BranchSide::ConditionTrue;
    normalize_expr(cond, positive, ctx, out);
}

fn normalize_expr(expr: &AstNode, positive: bool, ctx: &CallCtx, out: &mut Vec<GuardPredicate>) {
    match &expr.kind {
        NodeKind::BinaryOp { op } if op == "&&" => {
            if positive {
                // Both conjuncts hold in the true branch. The negation of a
                // conjunction is a disjunction and is dropped.
                normalize_expr(&expr.children[0], true, ctx, out);
                normalize_expr(&expr.children[1], true, ctx, out);
            }
        }
        NodeKind::BinaryOp { op } if op == "||" => {
            if !positive {
                // Both disjuncts fail in the false branch.
                normalize_expr(&expr.children[0], false, ctx, out);
                normalize_expr(&expr.children[1], false, ctx, out);
            }
        }
        NodeKind::UnaryOp { op, prefix: true } if op == "!" => {
            normalize_expr(&expr.children[0], !positive, ctx, out);
        }
        NodeKind::BinaryOp { op } => {
            let gop = match op.as_str() {
                "==" => GuardOp::Eq,
                "!=" => GuardOp::Ne,
                "<" => GuardOp::Lt,
                "<=" => GuardOp::Le,
                ">" => GuardOp::Gt,
                ">=" => GuardOp::Ge,
                _ => return,
            };
            let (Some(lhs), Some(rhs)) = (
                operand_of(&expr.children[0], ctx),
                operand_of(&expr.children[1], ctx),
            ) else {
                return;
            };
            let mut p = GuardPredicate::binary(lhs, gop, rhs);
            if !positive {
                p = p.negated();
            }
            out.push(p);
        }
        _ => {
            // A truthy expression: a call like `it.hasNext()` or a plain
            // boolean variable that maps to an operand.
            if let Some(opnd) = operand_of(expr, ctx) {
                let op = if positive { GuardOp::Truthy } else { GuardOp::Falsy };
                out.push(GuardPredicate::unary(op, opnd));
            }
        }
    }
}

fn operand_of(expr: &AstNode, ctx: &CallCtx) -> Option<Operand> {
    match &expr.kind {
        NodeKind::Literal { value } => match value {
            LiteralValue::Null => Some(Operand::Null),
            LiteralValue::Bool(true) => Some(Operand::True),
            LiteralValue::Bool(false) => Some(Operand::False),
            LiteralValue::Int(text) => parse_int(text).map(Operand::Int),
            _ => None,
        },
        NodeKind::Name { text } => ctx.resolve_name(text),
        NodeKind::MethodCall { method, has_receiver: true } if expr.call_args().is_empty() => {
            let base = operand_of(expr.call_receiver()?, ctx)?;
            Some(Operand::CallOn(Box::new(base), method.clone()))
        }
        _ => None,
    }
}

fn parse_int(text: &str) -> Option<i64> {
    let cleaned: String = text
        .trim_end_matches(['l', 'L'])
        .chars()
        .filter(|c| *c != '_')
        .collect();
    if let Some(hex) = cleaned.strip_prefix("0x").or_else(|| cleaned.strip_prefix("0X")) {
        i64::from_str_radix(hex, 16).ok()
    } else if let Some(bin) = cleaned.strip_prefix("0b").or_else(|| cleaned.strip_prefix("0B")) {
        i64::from_str_radix(bin, 2).ok()
    } else {
        cleaned.parse().ok()
    }
}
