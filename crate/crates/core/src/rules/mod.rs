//! Usage-rule DSL: parsing, the rule registry, and rendering.
//!
//! A rule line reads `Class.method :: item,item,...` where items are
//! control tokens (`try`, `end`, `loop`, `catch(Type)`) or call items with
//! an optional argument signature and an optional `@guard`. Rules for the
//! same API are alternatives: satisfying any one of them is enough.

mod matcher;

pub use matcher::{
    check_sequence, check_snippet, item_matches, lcs, ApiTarget, CheckVerdict, VerdictStatus,
};

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::sequence::{GuardOp, GuardPredicate, Operand};

/// Wildcard method name in call items: matches any call.
pub const ANY_METHOD: &str = "*";

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RuleItem {
    Try,
    End,
    Catch { exception: String },
    Loop,
    Call(CallItem),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CallItem {
    /// Method name, `new Type` for creations, or `*` for any call.
    pub method: String,
    /// `None` leaves the arity unconstrained; `Some` pins it. The type
    /// names inside are documentation — matching is arity-only because
    /// extracted calls carry no argument types.
    pub arg_signature: Option<Vec<String>>,
    pub guard: Option<GuardPredicate>,
}

impl fmt::Display for RuleItem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RuleItem::Try => write!(f, "try"),
            RuleItem::End => write!(f, "end"),
            RuleItem::Loop => write!(f, "loop"),
            RuleItem::Catch { exception } => write!(f, "catch({exception})"),
            RuleItem::Call(c) => {
                write!(f, "{}(", c.method)?;
                if let Some(sig) = &c.arg_signature {
                    write!(f, "{}", sig.join(","))?;
                }
                write!(f, ")")?;
                if let Some(g) = &c.guard {
                    write!(f, "@{g}")?;
                }
                Ok(())
            }
        }
    }
}

/// One parsed usage rule. `ids` holds the identifiers this rule appears
/// under in the shipped file (several when duplicates were folded).
#[derive(Debug, Clone, PartialEq)]
pub struct UsageRule {
    pub api_class: String,
    pub api_method: String,
    pub items: Vec<RuleItem>,
    pub ids: Vec<u32>,
    pub description: String,
}

impl UsageRule {
    pub fn primary_id(&self) -> Option<u32> {
        self.ids.first().copied()
    }

    /// The DSL line this rule parses back from.
    pub fn pattern(&self) -> String {
        let items: Vec<String> = self.items.iter().map(|i| i.to_string()).collect();
        items.join(",")
    }
}

impl fmt::Display for UsageRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{} :: {}", self.api_class, self.api_method, self.pattern())
    }
}

#[derive(Debug, Clone, Error, PartialEq)]
#[error("{message} at column {offset}")]
pub struct RuleParseError {
    pub message: String,
    /// Byte offset into the rule line.
    pub offset: usize,
}

#[derive(Debug, Error)]
pub enum RuleLoadError {
    #[error("rule file errors:\n{}", format_line_errors(.0))]
    Parse(Vec<(usize, RuleParseError)>),
    #[error("cannot read rule file: {0}")]
    Io(#[from] std::io::Error),
}

fn format_line_errors(errors: &[(usize, RuleParseError)]) -> String {
    errors
        .iter()
        .map(|(line, e)| format!("  line {line}: {e}"))
        .collect::<Vec<_>>()
        .join("\n")
}

/// Registry of rules keyed by (class, method). Lookup of an unknown API
/// yields an empty slice.
#[derive(Debug, Clone, Default)]
pub struct RuleRegistry {
    by_api: BTreeMap<(String, String), Vec<UsageRule>>,
}

impl RuleRegistry {
    pub fn rules_for(&self, class: &str, method: &str) -> &[UsageRule] {
        self.by_api
            .get(&(class.to_string(), method.to_string()))
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    pub fn api_count(&self) -> usize {
        self.by_api.len()
    }

    pub fn rule_count(&self) -> usize {
        self.by_api.values().map(Vec::len).sum()
    }

    /// All identifiers present, sorted.
    pub fn ids(&self) -> Vec<u32> {
        let mut ids: Vec<u32> = self
            .by_api
            .values()
            .flatten()
            .flat_map(|r| r.ids.iter().copied())
            .collect();
        ids.sort_unstable();
        ids
    }

    pub fn find_by_id(&self, id: u32) -> Option<&UsageRule> {
        self.by_api
            .values()
            .flatten()
            .find(|r| r.ids.contains(&id))
    }

    pub fn iter(&self) -> impl Iterator<Item = &UsageRule> {
        self.by_api.values().flatten()
    }

    pub fn apis(&self) -> impl Iterator<Item = (&str, &str)> {
        self.by_api.keys().map(|(c, m)| (c.as_str(), m.as_str()))
    }

    fn insert(&mut self, rule: UsageRule) {
        self.by_api
            .entry((rule.api_class.clone(), rule.api_method.clone()))
            .or_default()
            .push(rule);
    }
}

const DEFAULT_RULES: &str = include_str!("../../data/rules.txt");

/// The rule set shipped with the crate.
pub fn default_registry() -> RuleRegistry {
    load_rules(DEFAULT_RULES).expect("builtin rule file is well-formed")
}

/// Raw text of the shipped rule file.
pub fn default_rules_text() -> &'static str {
    DEFAULT_RULES
}

/// Parse a whole rule file. `#` starts a comment; a comment of the form
/// `# rule 1,2: description` annotates the next rule line. All per-line
/// errors are collected and reported together.
pub fn load_rules(text: &str) -> Result<RuleRegistry, RuleLoadError> {
    let mut registry = RuleRegistry::default();
    let mut errors = Vec::new();
    let mut pending_ids: Vec<u32> = Vec::new();
    let mut pending_desc = String::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            if let Some((ids, desc)) = parse_rule_annotation(comment) {
                pending_ids = ids;
                pending_desc = desc;
            }
            continue;
        }
        match parse_rule(line) {
            Ok(mut rule) => {
                rule.ids = std::mem::take(&mut pending_ids);
                rule.description = std::mem::take(&mut pending_desc);
                registry.insert(rule);
            }
            Err(e) => {
                errors.push((idx + 1, e));
                pending_ids.clear();
                pending_desc.clear();
            }
        }
    }
    if errors.is_empty() {
        Ok(registry)
    } else {
        Err(RuleLoadError::Parse(errors))
    }
}

fn parse_rule_annotation(comment: &str) -> Option<(Vec<u32>, String)> {
    let rest = comment.trim().strip_prefix("rule ")?;
    let (ids_part, desc) = rest.split_once(':')?;
    let ids: Option<Vec<u32>> = ids_part
        .split(',')
        .map(|s| s.trim().parse::<u32>().ok())
        .collect();
    Some((ids?, desc.trim().to_string()))
}

/// Parse one `Class.method :: pattern` line.
pub fn parse_rule(line: &str) -> Result<UsageRule, RuleParseError> {
    let sep = line.find("::").ok_or_else(|| RuleParseError {
        message: "missing `::` between API and pattern".to_string(),
        offset: line.len(),
    })?;
    let api = line[..sep].trim();
    let (api_class, api_method) = api.rsplit_once('.').ok_or_else(|| RuleParseError {
        message: "API must have the form Class.method".to_string(),
        offset: 0,
    })?;
    if api_class.is_empty() || api_method.is_empty() {
        return Err(RuleParseError {
            message: "API must have the form Class.method".to_string(),
            offset: 0,
        });
    }
    let pattern_off = sep + 2;
    let pattern = &line[pattern_off..];
    let mut items = Vec::new();
    for (piece, off) in split_top_level(pattern) {
        let piece_trimmed = piece.trim();
        if piece_trimmed.is_empty() {
            return Err(RuleParseError {
                message: "empty rule item".to_string(),
                offset: pattern_off + off,
            });
        }
        let item = parse_item(piece_trimmed).map_err(|mut e| {
            e.offset += pattern_off + off;
            e
        })?;
        items.push(item);
    }
    if items.is_empty() {
        return Err(RuleParseError {
            message: "rule has no items".to_string(),
            offset: pattern_off,
        });
    }
    check_balance(&items, pattern_off)?;
    Ok(UsageRule {
        api_class: api_class.trim().to_string(),
        api_method: api_method.trim().to_string(),
        items,
        ids: Vec::new(),
        description: String::new(),
    })
}

/// Split on commas outside parentheses, keeping each piece's offset.
fn split_top_level(pattern: &str) -> Vec<(&str, usize)> {
    let mut pieces = Vec::new();
    let mut depth = 0usize;
    let mut start = 0usize;
    for (i, c) in pattern.char_indices() {
        match c {
            '(' => depth += 1,
            ')' => depth = depth.saturating_sub(1),
            ',' if depth == 0 => {
                pieces.push((&pattern[start..i], start));
                start = i + 1;
            }
            _ => {}
        }
    }
    pieces.push((&pattern[start..], start));
    pieces
}

fn parse_item(text: &str) -> Result<RuleItem, RuleParseError> {
    match text {
        "try" => return Ok(RuleItem::Try),
        "end" => return Ok(RuleItem::End),
        "loop" => return Ok(RuleItem::Loop),
        _ => {}
    }
    if let Some(rest) = text.strip_prefix("catch(") {
        let exception = rest.strip_suffix(')').ok_or_else(|| RuleParseError {
            message: "unterminated catch(...)".to_string(),
            offset: 0,
        })?;
        return Ok(RuleItem::Catch { exception: exception.trim().to_string() });
    }
    // Call item: name(sig?)@guard?
    let open = text.find('(').ok_or_else(|| RuleParseError {
        message: format!("unrecognized item `{text}`"),
        offset: 0,
    })?;
    let close = text[open..].find(')').ok_or_else(|| RuleParseError {
        message: "unterminated argument list".to_string(),
        offset: open,
    })? + open;
    let method = text[..open].trim();
    if method.is_empty() {
        return Err(RuleParseError {
            message: "call item needs a method name".to_string(),
            offset: 0,
        });
    }
    let valid_name = method == ANY_METHOD
        || method
            .strip_prefix("new ")
            .unwrap_or(method)
            .chars()
            .all(|c| c.is_alphanumeric() || c == '_' || c == '$');
    if !valid_name {
        return Err(RuleParseError {
            message: format!("bad method name `{method}`"),
            offset: 0,
        });
    }
    let sig_text = text[open + 1..close].trim();
    let arg_signature = if sig_text.is_empty() {
        None
    } else {
        Some(
            sig_text
                .split(',')
                .map(|s| s.trim().to_string())
                .collect::<Vec<_>>(),
        )
    };
    let rest = text[close + 1..].trim();
    let guard = if rest.is_empty() {
        None
    } else if let Some(g) = rest.strip_prefix('@') {
        Some(parse_guard(g.trim()).map_err(|mut e| {
            e.offset += close + 1;
            e
        })?)
    } else {
        return Err(RuleParseError {
            message: format!("unexpected trailing `{rest}`"),
            offset: close + 1,
        });
    };
    Ok(RuleItem::Call(CallItem {
        method: method.to_string(),
        arg_signature,
        guard,
    }))
}

/// Parse the guard mini-language: `rcv!=null`, `arg0<rcv.size()`,
/// `rcv.hasNext()`, `!rcv.exists()`, `rcv.isReady()==true`.
pub fn parse_guard(text: &str) -> Result<GuardPredicate, RuleParseError> {
    let text = text.trim();
    if let Some(rest) = text.strip_prefix('!') {
        // Negated truthy form, unless this is the start of `!=`.
        if !rest.starts_with('=') {
            let opnd = parse_operand(rest.trim())?;
            return Ok(GuardPredicate::unary(GuardOp::Falsy, opnd));
        }
    }
    for (sym, op) in [
        ("==", GuardOp::Eq),
        ("!=", GuardOp::Ne),
        ("<=", GuardOp::Le),
        (">=", GuardOp::Ge),
        ("<", GuardOp::Lt),
        (">", GuardOp::Gt),
    ] {
        if let Some(pos) = text.find(sym) {
            let lhs = parse_operand(text[..pos].trim())?;
            let rhs = parse_operand(text[pos + sym.len()..].trim())?;
            return Ok(GuardPredicate::binary(lhs, op, rhs));
        }
    }
    Ok(GuardPredicate::unary(GuardOp::Truthy, parse_operand(text)?))
}

fn parse_operand(text: &str) -> Result<Operand, RuleParseError> {
    let bad = |msg: String| RuleParseError { message: msg, offset: 0 };
    // Trailing `.method()` chain.
    if let Some(stripped) = text.strip_suffix("()") {
        if let Some(dot) = stripped.rfind('.') {
            let base = parse_operand(stripped[..dot].trim())?;
            let method = stripped[dot + 1..].trim();
            if method.is_empty() {
                return Err(bad("missing method name in guard call".to_string()));
            }
            return Ok(Operand::CallOn(Box::new(base), method.to_string()));
        }
        return Err(bad(format!("bad guard call `{text}`")));
    }
    match text {
        "rcv" => return Ok(Operand::Rcv),
        "null" => return Ok(Operand::Null),
        "true" => return Ok(Operand::True),
        "false" => return Ok(Operand::False),
        _ => {}
    }
    if let Some(num) = text.strip_prefix("arg") {
        if let Ok(k) = num.parse::<usize>() {
            return Ok(Operand::Arg(k));
        }
    }
    if let Ok(v) = text.parse::<i64>() {
        return Ok(Operand::Int(v));
    }
    Err(bad(format!("unrecognized guard operand `{text}`")))
}

/// Structural balance: every `try`/`catch` needs its `end`; `loop` may
/// stay open (rules often only anchor the loop entry).
fn check_balance(items: &[RuleItem], base_offset: usize) -> Result<(), RuleParseError> {
    let mut stack: Vec<&RuleItem> = Vec::new();
    for item in items {
        match item {
            RuleItem::Try | RuleItem::Catch { .. } | RuleItem::Loop => stack.push(item),
            RuleItem::End => {
                if stack.pop().is_none() {
                    return Err(RuleParseError {
                        message: "unbalanced `end`".to_string(),
                        offset: base_offset,
                    });
                }
            }
            RuleItem::Call(_) => {}
        }
    }
    if stack
        .iter()
        .any(|i| matches!(i, RuleItem::Try | RuleItem::Catch { .. }))
    {
        return Err(RuleParseError {
            message: "unclosed try/catch in pattern".to_string(),
            offset: base_offset,
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_verbatim_get_as_string_pattern() {
        let rule = parse_rule(
            "JsonElement.getAsString :: try,getAsString()@rcv!=null,end,catch(Exception),end",
        )
        .unwrap();
        assert_eq!(rule.api_class, "JsonElement");
        assert_eq!(rule.api_method, "getAsString");
        assert_eq!(rule.items.len(), 5);
        assert_eq!(rule.items[0], RuleItem::Try);
        let RuleItem::Call(c) = &rule.items[1] else { panic!() };
        assert_eq!(c.method, "getAsString");
        assert_eq!(c.arg_signature, None);
        let g = c.guard.as_ref().unwrap();
        assert_eq!(g.to_string(), "rcv!=null");
        assert_eq!(rule.items[2], RuleItem::End);
        assert_eq!(rule.items[3], RuleItem::Catch { exception: "Exception".into() });
        assert_eq!(rule.items[4], RuleItem::End);
    }

    #[test]
    fn parses_iterator_rule() {
        let rule = parse_rule("Iterator.next :: loop,hasNext(),next()").unwrap();
        assert_eq!(rule.items[0], RuleItem::Loop);
        let RuleItem::Call(h) = &rule.items[1] else { panic!() };
        assert_eq!(h.method, "hasNext");
        let RuleItem::Call(n) = &rule.items[2] else { panic!() };
        assert_eq!(n.method, "next");
    }

    #[test]
    fn rejects_unbalanced_pattern() {
        assert!(parse_rule("X.y :: try,end,end").is_err());
        assert!(parse_rule("X.y :: try,foo()").is_err());
        assert!(parse_rule("X.y :: catch(Exception)").is_err());
    }

    #[test]
    fn loop_may_stay_open() {
        assert!(parse_rule("Iterator.next :: loop,next()").is_ok());
    }

    #[test]
    fn rejects_malformed_lines() {
        assert!(parse_rule("no-separator").is_err());
        assert!(parse_rule("NotAnApi :: foo()").is_err());
        assert!(parse_rule("X.y :: ").is_err());
        assert!(parse_rule("X.y :: bareword").is_err());
        assert!(parse_rule("X.y :: m()@zzz").is_err());
    }

    #[test]
    fn parses_arg_signature_and_new() {
        let rule = parse_rule("BufferedReader.readLine :: new BufferedReader(),readLine()").unwrap();
        let RuleItem::Call(c) = &rule.items[0] else { panic!() };
        assert_eq!(c.method, "new BufferedReader");
        let rule2 = parse_rule("PrintWriter.write :: write(String)").unwrap();
        let RuleItem::Call(c2) = &rule2.items[0] else { panic!() };
        assert_eq!(c2.arg_signature, Some(vec!["String".to_string()]));
    }

    #[test]
    fn guard_mini_language() {
        assert_eq!(parse_guard("rcv!=null").unwrap().to_string(), "rcv!=null");
        assert_eq!(
            parse_guard("arg0<rcv.size()").unwrap().to_string(),
            "arg0<rcv.size()"
        );
        assert_eq!(
            parse_guard("rcv.hasNext()").unwrap().to_string(),
            "rcv.hasNext()"
        );
        assert_eq!(
            parse_guard("!rcv.exists()").unwrap().to_string(),
            "!rcv.exists()"
        );
        // Normalization mirrors constants to the right.
        assert_eq!(parse_guard("null!=rcv").unwrap().to_string(), "rcv!=null");
        assert_eq!(
            parse_guard("rcv.isReady()==true").unwrap().to_string(),
            "rcv.isReady()"
        );
        assert!(parse_guard("wat").is_err());
    }

    #[test]
    fn default_registry_shape() {
        let reg = default_registry();
        assert_eq!(reg.api_count(), 18);
        assert_eq!(reg.ids(), (1..=27).collect::<Vec<u32>>());
        // Items 1 and 2 are folded into one rule carrying both ids.
        let folded = reg.find_by_id(1).unwrap();
        assert_eq!(folded.ids, vec![1, 2]);
        assert_eq!(reg.rule_count(), 26);
        // Every rule has a description.
        assert!(reg.iter().all(|r| !r.description.is_empty()));
    }

    #[test]
    fn lookup_of_unknown_api_is_empty() {
        let reg = default_registry();
        assert!(reg.rules_for("Nothing", "here").is_empty());
    }

    #[test]
    fn empty_file_gives_empty_registry() {
        let reg = load_rules("").unwrap();
        assert_eq!(reg.api_count(), 0);
        assert_eq!(reg.rule_count(), 0);
    }

    #[test]
    fn load_aggregates_errors_with_line_numbers() {
        let text = "A.b :: ok()\nbroken line\nC.d :: try,end,end\n";
        let err = load_rules(text).unwrap_err();
        let RuleLoadError::Parse(errors) = err else { panic!() };
        let lines: Vec<usize> = errors.iter().map(|(l, _)| *l).collect();
        assert_eq!(lines, vec![2, 3]);
    }

    #[test]
    fn duplicate_keys_accumulate() {
        let text = "A.b :: x()\nA.b :: y()\n";
        let reg = load_rules(text).unwrap();
        assert_eq!(reg.rules_for("A", "b").len(), 2);
    }

    #[test]
    fn rule_display_round_trips() {
        let reg = default_registry();
        for rule in reg.iter() {
            let printed = rule.to_string();
            let reparsed = parse_rule(&printed).unwrap();
            assert_eq!(reparsed.api_class, rule.api_class);
            assert_eq!(reparsed.api_method, rule.api_method);
            assert_eq!(reparsed.items, rule.items, "round-trip failed for `{printed}`");
        }
    }
}
