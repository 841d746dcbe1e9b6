//! Rule matching: item/token compatibility, longest common subsequence,
//! and per-snippet verdicts.
//!
//! A rule is satisfied when all of its items embed, in order, into the call
//! sequence — the LCS between rule and sequence equals the rule length.
//! Rules for one API are alternatives; if none embeds fully the snippet
//! misuses the API, reported against the closest rule.

use std::fmt;
use std::str::FromStr;

use super::{CallItem, RuleItem, RuleRegistry, UsageRule, ANY_METHOD};
use crate::ast::parse_snippet;
use crate::sequence::{
    extract_sequence, infer_types, CallSequence, GuardOp, GuardPredicate, Operand, SeqToken,
};

/// The API a check runs against, e.g. `PrintWriter.write`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct ApiTarget {
    pub class: String,
    pub method: String,
}

impl FromStr for ApiTarget {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (class, method) = s
            .rsplit_once('.')
            .ok_or_else(|| format!("API must have the form Class.method, got `{s}`"))?;
        if class.is_empty() || method.is_empty() || method.contains(' ') || class.contains(' ') {
            return Err(format!("API must have the form Class.method, got `{s}`"));
        }
        Ok(ApiTarget {
            class: class.to_string(),
            method: method.to_string(),
        })
    }
}

impl fmt::Display for ApiTarget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}", self.class, self.method)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum VerdictStatus {
    Misuse,
    Pass,
    NonParsable,
    ApiNotUsed,
}

impl VerdictStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            VerdictStatus::Misuse => "misuse",
            VerdictStatus::Pass => "pass",
            VerdictStatus::NonParsable => "non-parsable",
            VerdictStatus::ApiNotUsed => "api-not-used",
        }
    }
}

impl fmt::Display for VerdictStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Outcome of checking one snippet against one API.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckVerdict {
    pub status: VerdictStatus,
    /// Identifier of the satisfied rule, or of the closest rule on misuse.
    pub best_rule: Option<u32>,
    pub matched_len: usize,
    /// Items of the best rule that did not embed.
    pub missing_items: Vec<RuleItem>,
    /// (rule item index, sequence token index) pairs of the best alignment.
    pub alignment: Vec<(usize, usize)>,
}

impl CheckVerdict {
    fn bare(status: VerdictStatus) -> Self {
        CheckVerdict {
            status,
            best_rule: None,
            matched_len: 0,
            missing_items: Vec::new(),
            alignment: Vec::new(),
        }
    }
}

/// Pairwise compatibility between a rule item and a sequence token.
/// `history` holds the tokens before the candidate token; it backs the
/// second entailment route for truthy-call guards (the guard's call was
/// made earlier on the same receiver).
pub fn item_matches(
    item: &RuleItem,
    token: &SeqToken,
    rule: &UsageRule,
    history: &[SeqToken],
) -> bool {
    match (item, token) {
        (RuleItem::Try, SeqToken::Try) => true,
        (RuleItem::End, SeqToken::End) => true,
        (RuleItem::Loop, SeqToken::Loop) => true,
        (RuleItem::Catch { exception: want }, SeqToken::Catch { exception: got }) => {
            // `Exception` is the catch-all in rules; otherwise exact.
            want == "Exception" || want == got
        }
        (RuleItem::Call(item), SeqToken::Call(call)) => {
            if item.method != ANY_METHOD && item.method != call.method {
                return false;
            }
            if let Some(sig) = &item.arg_signature {
                if sig.len() != call.arg_count {
                    return false;
                }
            }
            // Receiver typing is enforced only on the rule's own API call;
            // unknown receivers match permissively.
            if item.method == rule.api_method {
                if let Some(ty) = &call.receiver_type {
                    if ty != &rule.api_class {
                        return false;
                    }
                }
            }
            match &item.guard {
                None => true,
                Some(g) => guard_entailed(g, item, call, history),
            }
        }
        _ => false,
    }
}

fn guard_entailed(
    guard: &GuardPredicate,
    _item: &CallItem,
    call: &crate::sequence::CallTok,
    history: &[SeqToken],
) -> bool {
    if call.guards.contains(guard) {
        return true;
    }
    // Truthy call on the receiver: also satisfied when the same call was
    // made earlier on the same receiver expression.
    if let GuardPredicate {
        lhs: Operand::CallOn(base, method),
        op: GuardOp::Truthy,
        rhs: None,
    } = guard
    {
        if **base == Operand::Rcv {
            if let Some(recv) = &call.receiver_expr {
                return history.iter().any(|t| match t {
                    SeqToken::Call(c) => {
                        &c.method == method && c.receiver_expr.as_deref() == Some(recv)
                    }
                    _ => false,
                });
            }
        }
    }
    false
}

/// Longest common subsequence between the rule's items and the token
/// sequence under `item_matches`. Returns the length and one maximal
/// alignment with the earliest possible sequence indices.
pub fn lcs(rule: &UsageRule, tokens: &[SeqToken]) -> (usize, Vec<(usize, usize)>) {
    let n = rule.items.len();
    let m = tokens.len();
    let mat: Vec<Vec<bool>> = (0..n)
        .map(|i| {
            (0..m)
                .map(|j| item_matches(&rule.items[i], &tokens[j], rule, &tokens[..j]))
                .collect()
        })
        .collect();
    // suf[i][j] = LCS(items[i..], tokens[j..]). The matching relation is an
    // arbitrary predicate, so the recurrence keeps all three branches.
    let mut suf = vec![vec![0usize; m + 1]; n + 1];
    for i in (0..n).rev() {
        for j in (0..m).rev() {
            let mut best = suf[i + 1][j].max(suf[i][j + 1]);
            if mat[i][j] {
                best = best.max(1 + suf[i + 1][j + 1]);
            }
            suf[i][j] = best;
        }
    }
    // Forward walk; preferring a match, then dropping the item, yields the
    // lexicographically earliest token indices among maximal alignments.
    let mut alignment = Vec::new();
    let (mut i, mut j) = (0, 0);
    while i < n && j < m && suf[i][j] > 0 {
        if mat[i][j] && 1 + suf[i + 1][j + 1] == suf[i][j] {
            alignment.push((i, j));
            i += 1;
            j += 1;
        } else if suf[i + 1][j] == suf[i][j] {
            i += 1;
        } else {
            j += 1;
        }
    }
    (suf[0][0], alignment)
}

/// Check a call sequence against every rule for `target`.
pub fn check_sequence(
    seq: &CallSequence,
    registry: &RuleRegistry,
    target: &ApiTarget,
) -> CheckVerdict {
    let api_used = seq.calls().any(|c| {
        c.method == target.method
            && c.receiver_type
                .as_deref()
                .map_or(true, |ty| ty == target.class)
    });
    if !api_used {
        return CheckVerdict::bare(VerdictStatus::ApiNotUsed);
    }
    let rules = registry.rules_for(&target.class, &target.method);
    if rules.is_empty() {
        // Nothing to violate.
        return CheckVerdict::bare(VerdictStatus::Pass);
    }
    let mut best: Option<(&UsageRule, usize, Vec<(usize, usize)>)> = None;
    for rule in rules {
        let (len, alignment) = lcs(rule, &seq.tokens);
        if len == rule.items.len() {
            return CheckVerdict {
                status: VerdictStatus::Pass,
                best_rule: rule.primary_id(),
                matched_len: len,
                missing_items: Vec::new(),
                alignment,
            };
        }
        if best.as_ref().is_none_or(|(_, l, _)| len > *l) {
            best = Some((rule, len, alignment));
        }
    }
    let (rule, matched_len, alignment) = best.expect("at least one rule");
    let matched_items: Vec<usize> = alignment.iter().map(|(i, _)| *i).collect();
    let missing_items = rule
        .items
        .iter()
        .enumerate()
        .filter(|(i, _)| !matched_items.contains(i))
        .map(|(_, item)| item.clone())
        .collect();
    CheckVerdict {
        status: VerdictStatus::Misuse,
        best_rule: rule.primary_id(),
        matched_len,
        missing_items,
        alignment,
    }
}

/// Full pipeline for one snippet: parse, infer types, extract the call
/// sequence, and match. Parse failures become `NonParsable`.
pub fn check_snippet(text: &str, registry: &RuleRegistry, target: &ApiTarget) -> CheckVerdict {
    let Ok(snippet) = parse_snippet(text) else {
        return CheckVerdict::bare(VerdictStatus::NonParsable);
    };
    let env = infer_types(&snippet);
    let seq = extract_sequence(&snippet, &env);
    check_sequence(&seq, registry, target)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rules::{default_registry, parse_rule};
    use crate::sequence::CallTok;
    use std::collections::BTreeSet;

    // --- independent oracle ------------------------------------------------
    //
    // Enumerates every subsequence of the rule's items and greedily embeds
    // it into the tokens; the best embedded size is the LCS length. Written
    // against the same `item_matches` predicate but sharing no code with
    // the DP.

    fn lcs_oracle(rule: &UsageRule, tokens: &[SeqToken]) -> usize {
        let n = rule.items.len();
        assert!(n <= 16, "oracle is exponential in rule size");
        let mut best = 0usize;
        for mask in 0u32..(1u32 << n) {
            let picked: Vec<usize> = (0..n).filter(|i| mask & (1 << i) != 0).collect();
            if picked.len() <= best {
                continue;
            }
            let mut j = 0usize;
            let mut ok = true;
            for &i in &picked {
                let mut found = false;
                while j < tokens.len() {
                    let matches = item_matches(&rule.items[i], &tokens[j], rule, &tokens[..j]);
                    j += 1;
                    if matches {
                        found = true;
                        break;
                    }
                }
                if !found {
                    ok = false;
                    break;
                }
            }
            if ok {
                best = picked.len();
            }
        }
        best
    }

    fn call(method: &str) -> SeqToken {
        SeqToken::Call(CallTok {
            method: method.to_string(),
            receiver_type: None,
            receiver_expr: None,
            arg_count: 0,
            guards: BTreeSet::new(),
            span: crate::ast::Span::new(0, 0),
        })
    }

    fn seq_of(text: &str) -> CallSequence {
        let s = parse_snippet(text).unwrap();
        let env = infer_types(&s);
        extract_sequence(&s, &env)
    }

    const ZERO_SHOT_LISTING: &str = r#"PrintWriter writer = new PrintWriter("f.txt", true);
writer.write("text to append");
writer.close();"#;

    const ONE_IRRELEVANT_LISTING: &str = r#"String text = "Hello, World!";
PrintWriter writer = new PrintWriter("f.txt", true);
writer.write(text);
writer.close();"#;

    const ONE_RELEVANT_LISTING: &str = r#"try {String text = "Hello, World!";
PrintWriter writer = new PrintWriter("f.txt", true);
writer.write(text);
} catch (IOException e) {e.printStackTrace();}"#;

    const RAF_LISTING: &str = r#"try {
    RandomAccessFile raf =
      new RandomAccessFile("/tmp/file.json", "r");
    byte[] buffer = new byte[1024 * 1024];
    int bytesRead = raf.read(buffer, 0, buffer.length);
    raf.close();
} catch(Exception e) {}"#;

    #[test]
    fn lcs_literal_skeleton() {
        // rule [A,B,C] vs tokens [A,X,B,Y,C] matches all three.
        let rule = parse_rule("T.a :: a(),b(),c()").unwrap();
        let tokens = vec![call("a"), call("x"), call("b"), call("y"), call("c")];
        let (len, alignment) = lcs(&rule, &tokens);
        assert_eq!(len, 3);
        assert_eq!(alignment, vec![(0, 0), (1, 2), (2, 4)]);
        assert_eq!(lcs_oracle(&rule, &tokens), 3);
    }

    #[test]
    fn lcs_rule7_vs_zero_shot_sequence_is_one() {
        let reg = default_registry();
        let rule7 = reg.find_by_id(7).unwrap();
        let seq = seq_of(ZERO_SHOT_LISTING);
        let (len, _) = lcs(rule7, &seq.tokens);
        assert_eq!(len, 1, "only write matches; no try/catch in sequence");
        assert_eq!(lcs_oracle(rule7, &seq.tokens), 1);
    }

    #[test]
    fn lcs_empty_rule_is_zero() {
        let rule = UsageRule {
            api_class: "T".into(),
            api_method: "a".into(),
            items: vec![],
            ids: vec![],
            description: String::new(),
        };
        let tokens = vec![call("a"), call("b")];
        assert_eq!(lcs(&rule, &tokens).0, 0);
        assert_eq!(lcs_oracle(&rule, &tokens), 0);
    }

    #[test]
    fn lcs_bounds_and_self_match() {
        let rule = parse_rule("T.a :: try,a(),end,catch(Exception),end").unwrap();
        let tokens = vec![
            SeqToken::Try,
            call("a"),
            SeqToken::End,
            SeqToken::Catch { exception: "Exception".into() },
            SeqToken::End,
        ];
        let (len, _) = lcs(&rule, &tokens);
        assert_eq!(len, rule.items.len());
        assert_eq!(lcs_oracle(&rule, &tokens), rule.items.len());
    }

    #[test]
    fn lcs_monotone_under_token_append() {
        let rule = parse_rule("T.a :: a(),b()").unwrap();
        let mut tokens = vec![call("x")];
        let mut last = lcs(&rule, &tokens).0;
        for t in ["a", "y", "b", "a"] {
            tokens.push(call(t));
            let now = lcs(&rule, &tokens).0;
            assert!(now >= last);
            last = now;
        }
    }

    #[test]
    fn catch_exception_matches_any_catch() {
        let rule = parse_rule("T.a :: try,a(),end,catch(Exception),end").unwrap();
        let item = &rule.items[3];
        let tok = SeqToken::Catch { exception: "IOException".into() };
        assert!(item_matches(item, &tok, &rule, &[]));
        // Non-Exception rule types need an exact match.
        let strict = parse_rule("T.a :: try,a(),end,catch(IOException),end").unwrap();
        let got_sql = SeqToken::Catch { exception: "SQLException".into() };
        assert!(!item_matches(&strict.items[3], &got_sql, &strict, &[]));
        let got_io = SeqToken::Catch { exception: "IOException".into() };
        assert!(item_matches(&strict.items[3], &got_io, &strict, &[]));
    }

    #[test]
    fn unknown_receiver_matches_permissively() {
        let rule = parse_rule("PrintWriter.write :: write(String)").unwrap();
        let tok = SeqToken::Call(CallTok {
            method: "write".into(),
            receiver_type: None,
            receiver_expr: Some("w".into()),
            arg_count: 1,
            guards: BTreeSet::new(),
            span: crate::ast::Span::new(0, 0),
        });
        assert!(item_matches(&rule.items[0], &tok, &rule, &[]));
        // A known mismatching receiver type does not match.
        let tok2 = SeqToken::Call(CallTok {
            method: "write".into(),
            receiver_type: Some("FileWriter".into()),
            receiver_expr: Some("w".into()),
            arg_count: 1,
            guards: BTreeSet::new(),
            span: crate::ast::Span::new(0, 0),
        });
        assert!(!item_matches(&rule.items[0], &tok2, &rule, &[]));
    }

    #[test]
    fn guarded_item_rejects_unguarded_token() {
        let reg = default_registry();
        let rule14 = reg.find_by_id(14).unwrap();
        let item = rule14
            .items
            .iter()
            .find(|i| matches!(i, RuleItem::Call(_)))
            .unwrap();
        let unguarded = SeqToken::Call(CallTok {
            method: "getAsString".into(),
            receiver_type: Some("JsonElement".into()),
            receiver_expr: Some("el".into()),
            arg_count: 0,
            guards: BTreeSet::new(),
            span: crate::ast::Span::new(0, 0),
        });
        assert!(!item_matches(item, &unguarded, rule14, &[]));
    }

    #[test]
    fn truthy_guard_satisfied_by_earlier_call_on_same_receiver() {
        let rule = parse_rule("StringTokenizer.nextToken :: nextToken()@rcv.hasMoreTokens()")
            .unwrap();
        let earlier = SeqToken::Call(CallTok {
            method: "hasMoreTokens".into(),
            receiver_type: None,
            receiver_expr: Some("st".into()),
            arg_count: 0,
            guards: BTreeSet::new(),
            span: crate::ast::Span::new(0, 0),
        });
        let tok = SeqToken::Call(CallTok {
            method: "nextToken".into(),
            receiver_type: None,
            receiver_expr: Some("st".into()),
            arg_count: 0,
            guards: BTreeSet::new(),
            span: crate::ast::Span::new(0, 0),
        });
        assert!(item_matches(&rule.items[0], &tok, &rule, &[earlier.clone()]));
        // Different receiver: not entailed.
        let other = SeqToken::Call(CallTok {
            receiver_expr: Some("other".into()),
            ..match earlier {
                SeqToken::Call(c) => c,
                _ => unreachable!(),
            }
        });
        assert!(!item_matches(&rule.items[0], &tok, &rule, &[other]));
    }

    #[test]
    fn raf_listing_never_calls_write_so_api_not_used() {
        // The correct-usage listing reads; with write as the target the
        // verdict is api-not-used, which the metrics count as a pass.
        let reg = default_registry();
        let target: ApiTarget = "RandomAccessFile.write".parse().unwrap();
        let v = check_snippet(RAF_LISTING, &reg, &target);
        assert_eq!(v.status, VerdictStatus::ApiNotUsed);
    }

    #[test]
    fn raf_write_variant_passes_rule6() {
        let text = r#"try {
    RandomAccessFile raf = new RandomAccessFile("/tmp/file.json", "rw");
    byte[] buffer = new byte[16];
    raf.write(buffer);
    raf.close();
} catch(Exception e) {}"#;
        let reg = default_registry();
        let target: ApiTarget = "RandomAccessFile.write".parse().unwrap();
        let v = check_snippet(text, &reg, &target);
        assert_eq!(v.status, VerdictStatus::Pass);
        assert_eq!(v.best_rule, Some(6));
    }

    #[test]
    fn zero_shot_listing_is_misuse_missing_try_catch() {
        let reg = default_registry();
        let target: ApiTarget = "PrintWriter.write".parse().unwrap();
        let seq = seq_of(ZERO_SHOT_LISTING);
        let v = check_sequence(&seq, &reg, &target);
        assert_eq!(v.status, VerdictStatus::Misuse);
        // Closest rule is 8 (write+close both match, 2 of 6 items).
        assert_eq!(v.best_rule, Some(8));
        assert_eq!(v.matched_len, 2);
        assert!(v.missing_items.contains(&RuleItem::Try));
        assert!(v
            .missing_items
            .contains(&RuleItem::Catch { exception: "Exception".into() }));
    }

    #[test]
    fn case_study_three_listings() {
        let reg = default_registry();
        let target: ApiTarget = "PrintWriter.write".parse().unwrap();
        assert_eq!(
            check_snippet(ZERO_SHOT_LISTING, &reg, &target).status,
            VerdictStatus::Misuse
        );
        assert_eq!(
            check_snippet(ONE_IRRELEVANT_LISTING, &reg, &target).status,
            VerdictStatus::Misuse
        );
        let relevant = check_snippet(ONE_RELEVANT_LISTING, &reg, &target);
        assert_eq!(relevant.status, VerdictStatus::Pass);
        assert_eq!(relevant.best_rule, Some(7));
    }

    #[test]
    fn snippet_without_target_call_is_api_not_used() {
        let reg = default_registry();
        let target: ApiTarget = "PrintWriter.write".parse().unwrap();
        let v = check_snippet("int x = 5;", &reg, &target);
        assert_eq!(v.status, VerdictStatus::ApiNotUsed);
    }

    #[test]
    fn garbage_is_non_parsable() {
        let reg = default_registry();
        let target: ApiTarget = "PrintWriter.write".parse().unwrap();
        let v = check_snippet("not java at all $$$", &reg, &target);
        assert_eq!(v.status, VerdictStatus::NonParsable);
    }

    #[test]
    fn verdict_is_exactly_one_status() {
        let reg = default_registry();
        let target: ApiTarget = "PrintWriter.write".parse().unwrap();
        for text in [
            ZERO_SHOT_LISTING,
            ONE_RELEVANT_LISTING,
            "int x = 5;",
            "not java $$$",
        ] {
            let v = check_snippet(text, &reg, &target);
            let statuses = [
                VerdictStatus::Misuse,
                VerdictStatus::Pass,
                VerdictStatus::NonParsable,
                VerdictStatus::ApiNotUsed,
            ];
            assert_eq!(statuses.iter().filter(|s| **s == v.status).count(), 1);
        }
    }

    #[test]
    fn pass_invariant_full_match() {
        let reg = default_registry();
        let target: ApiTarget = "PrintWriter.write".parse().unwrap();
        let v = check_snippet(ONE_RELEVANT_LISTING, &reg, &target);
        assert_eq!(v.status, VerdictStatus::Pass);
        assert!(v.missing_items.is_empty());
        let rule = reg.find_by_id(v.best_rule.unwrap()).unwrap();
        assert_eq!(v.matched_len, rule.items.len());
    }

    #[test]
    fn api_target_parsing() {
        let t: ApiTarget = "PrintWriter.write".parse().unwrap();
        assert_eq!(t.class, "PrintWriter");
        assert_eq!(t.method, "write");
        assert!("not-an-api".parse::<ApiTarget>().is_err());
        assert!(".write".parse::<ApiTarget>().is_err());
    }

    #[test]
    fn dp_equals_oracle_on_paper_shaped_cases() {
        let reg = default_registry();
        let sequences = [
            seq_of(ZERO_SHOT_LISTING),
            seq_of(ONE_RELEVANT_LISTING),
            seq_of(RAF_LISTING),
            seq_of("while (it.hasNext()) { it.next(); }"),
            seq_of("if (f.exists()) { f.mkdirs(); } else { f.delete(); }"),
        ];
        for rule in reg.iter() {
            for seq in &sequences {
                assert_eq!(
                    lcs(rule, &seq.tokens).0,
                    lcs_oracle(rule, &seq.tokens),
                    "rule {:?} disagrees with oracle",
                    rule.ids
                );
            }
        }
    }

    #[test]
    fn alignment_is_strictly_increasing_and_valid() {
        let reg = default_registry();
        let seq = seq_of(ONE_RELEVANT_LISTING);
        for rule in reg.iter() {
            let (len, alignment) = lcs(rule, &seq.tokens);
            assert_eq!(alignment.len(), len);
            for w in alignment.windows(2) {
                assert!(w[0].0 < w[1].0);
                assert!(w[0].1 < w[1].1);
            }
            for (i, j) in &alignment {
                assert!(item_matches(
                    &rule.items[*i],
                    &seq.tokens[*j],
                    rule,
                    &seq.tokens[..*j]
                ));
            }
        }
    }
}
