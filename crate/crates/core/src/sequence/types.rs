//! Variable typing for receiver inference.
//!
//! Types come from declarations, parameters, catch clauses, enhanced-for
//! variables, `new T(...)` assignments and casts. Anything else stays
//! unknown; the matcher treats unknown receivers permissively. A small
//! return-type table covers common chained calls; it can be replaced from a
//! plain text file.

use std::collections::BTreeMap;

use crate::ast::{AstNode, NodeKind, ParsedSnippet, Span};

/// `Type.method -> ReturnType` lookups for chained receivers.
#[derive(Debug, Clone, Default)]
pub struct ReturnTypeTable {
    map: BTreeMap<(String, String), String>,
}

const DEFAULT_RETURN_TYPES: &str = include_str!("../../data/return_types.txt");

impl ReturnTypeTable {
    pub fn empty() -> Self {
        Self::default()
    }

    /// The table shipped with the crate.
    pub fn builtin() -> Self {
        Self::parse(DEFAULT_RETURN_TYPES).expect("builtin return-type table is well-formed")
    }

    /// Parse `Type.method -> ReturnType` lines; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self, String> {
        let mut map = BTreeMap::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let parse_line = || -> Option<((String, String), String)> {
                let (lhs, ret) = line.split_once("->")?;
                let (ty, method) = lhs.trim().rsplit_once('.')?;
                Some((
                    (ty.trim().to_string(), method.trim().to_string()),
                    ret.trim().to_string(),
                ))
            };
            let (key, ret) = parse_line()
                .ok_or_else(|| format!("line {}: expected `Type.method -> ReturnType`", lineno + 1))?;
            map.insert(key, ret);
        }
        Ok(ReturnTypeTable { map })
    }

    pub fn lookup(&self, type_name: &str, method: &str) -> Option<&str> {
        self.map
            .get(&(type_name.to_string(), method.to_string()))
            .map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum BindingKind {
    /// Locals, parameters, catch/for variables, `x = new T()` assignments.
    Local,
    /// Fields: visible in the whole class body regardless of position.
    Field,
}

#[derive(Debug, Clone)]
struct Binding {
    name: String,
    type_name: String,
    scope: Span,
    decl_pos: usize,
    kind: BindingKind,
}

/// Lexically scoped variable types plus the return-type table.
#[derive(Debug, Clone)]
pub struct TypeEnv {
    bindings: Vec<Binding>,
    return_types: ReturnTypeTable,
}

impl TypeEnv {
    /// Declared/inferred type of `name` as seen from byte position `at`,
    /// or `None` when nothing is known.
    pub fn lookup(&self, name: &str, at: usize) -> Option<&str> {
        let mut best: Option<&Binding> = None;
        for b in &self.bindings {
            if b.name != name || !b.scope.contains_pos(at) {
                continue;
            }
            if b.kind == BindingKind::Local && b.decl_pos > at {
                continue;
            }
            let better = match best {
                None => true,
                Some(cur) => match (b.kind, cur.kind) {
                    // Locals shadow fields; later declarations win.
                    (BindingKind::Local, BindingKind::Field) => true,
                    (BindingKind::Field, BindingKind::Local) => false,
                    _ => b.decl_pos >= cur.decl_pos,
                },
            };
            if better {
                best = Some(b);
            }
        }
        best.map(|b| b.type_name.as_str())
    }

    pub fn return_types(&self) -> &ReturnTypeTable {
        &self.return_types
    }

    pub fn binding_count(&self) -> usize {
        self.bindings.len()
    }
}

/// Collect variable types from a parsed snippet using the builtin
/// return-type table.
pub fn infer_types(snippet: &ParsedSnippet) -> TypeEnv {
    infer_types_with(snippet, ReturnTypeTable::builtin())
}

/// Collect variable types using a caller-provided return-type table.
pub fn infer_types_with(snippet: &ParsedSnippet, return_types: ReturnTypeTable) -> TypeEnv {
    let mut env = TypeEnv { bindings: Vec::new(), return_types };
    collect(&snippet.ast, snippet.ast.span, &mut env.bindings);
    env
}

fn push(bindings: &mut Vec<Binding>, name: &str, ty: &str, scope: Span, pos: usize, kind: BindingKind) {
    if ty.is_empty() || ty == "var" || ty == "void" {
        return;
    }
    bindings.push(Binding {
        name: name.to_string(),
        type_name: ty.to_string(),
        scope,
        decl_pos: pos,
        kind,
    });
}

/// Type inferred for an initializer/assignment right-hand side: object
/// creations and casts give their type directly.
fn rhs_type(expr: &AstNode) -> Option<&str> {
    match &expr.kind {
        NodeKind::ObjectCreation { type_name, .. } => Some(type_name),
        NodeKind::ArrayCreation { type_name } if !type_name.is_empty() => Some(type_name),
        NodeKind::Cast { type_name } => Some(type_name),
        _ => None,
    }
}

fn collect(node: &AstNode, enclosing_scope: Span, bindings: &mut Vec<Binding>) {
    match &node.kind {
        NodeKind::ClassDecl { .. } => {
            for m in &node.children {
                if let NodeKind::FieldDecl { type_name, name } = &m.kind {
                    push(bindings, name, type_name, node.span, m.span.start, BindingKind::Field);
                }
                collect(m, node.span, bindings);
            }
        }
        NodeKind::MethodDecl { params, .. } => {
            for p in params {
                if let Some(ty) = &p.type_name {
                    push(bindings, &p.name, ty, node.span, node.span.start, BindingKind::Local);
                }
            }
            for c in &node.children {
                collect(c, node.span, bindings);
            }
        }
        NodeKind::LocalVarDecl { type_name, name } => {
            let ty = if type_name == "var" {
                node.children.first().and_then(rhs_type).unwrap_or("")
            } else {
                type_name
            };
            push(bindings, name, ty, enclosing_scope, node.span.start, BindingKind::Local);
            for c in &node.children {
                collect(c, enclosing_scope, bindings);
            }
        }
        NodeKind::EnhancedFor { type_name, var } => {
            push(bindings, var, type_name, node.span, node.span.start, BindingKind::Local);
            for c in &node.children {
                collect(c, node.span, bindings);
            }
        }
        NodeKind::CatchClause { types, var } => {
            if let Some(first) = types.first() {
                push(bindings, var, first, node.span, node.span.start, BindingKind::Local);
            }
            for c in &node.children {
                collect(c, node.span, bindings);
            }
        }
        NodeKind::LambdaOpaque { params } => {
            for p in params {
                if let Some(ty) = &p.type_name {
                    push(bindings, &p.name, ty, node.span, node.span.start, BindingKind::Local);
                }
            }
            for c in &node.children {
                collect(c, node.span, bindings);
            }
        }
        NodeKind::Assignment { op } if op == "=" => {
            // `x = new T(...)` / `x = (T) e` binds x when x is a plain name.
            if let (NodeKind::Name { text }, Some(ty)) =
                (&node.children[0].kind, rhs_type(&node.children[1]))
            {
                push(bindings, text, ty, enclosing_scope, node.span.start, BindingKind::Local);
            }
            for c in &node.children {
                collect(c, enclosing_scope, bindings);
            }
        }
        NodeKind::Block | NodeKind::For { .. } | NodeKind::Try { .. } => {
            // These introduce a scope for declarations inside them.
            for c in &node.children {
                collect(c, node.span, bindings);
            }
        }
        _ => {
            for c in &node.children {
                collect(c, enclosing_scope, bindings);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ast::parse_snippet;

    fn env_of(text: &str) -> (ParsedSnippet, TypeEnv) {
        let s = parse_snippet(text).unwrap();
        let env = infer_types(&s);
        (s, env)
    }

    /// Position of `needle` inside the harnessed source.
    fn pos_of(s: &ParsedSnippet, needle: &str) -> usize {
        s.source.find(needle).unwrap()
    }

    #[test]
    fn declared_type_from_initializer_decl() {
        let (s, env) = env_of("PrintWriter writer = new PrintWriter(\"f.txt\", true);");
        let at = s.source.rfind(';').unwrap();
        assert_eq!(env.lookup("writer", at), Some("PrintWriter"));
    }

    #[test]
    fn declared_type_without_initializer() {
        let (s, env) = env_of("Object o; o.toString();");
        let at = pos_of(&s, "o.toString");
        assert_eq!(env.lookup("o", at), Some("Object"));
    }

    #[test]
    fn undeclared_assignment_is_unknown() {
        let (s, env) = env_of("x = foo();");
        let at = s.source.len() - 1;
        assert_eq!(env.lookup("x", at), None);
    }

    #[test]
    fn assignment_from_new_binds() {
        let (s, env) = env_of("x = new StringBuilder();\nx.append(\"a\");");
        let at = pos_of(&s, "x.append");
        assert_eq!(env.lookup("x", at), Some("StringBuilder"));
    }

    #[test]
    fn cast_assignment_binds() {
        let (s, env) = env_of("y = (FileChannel) ch;\ny.write(buf);");
        let at = pos_of(&s, "y.write");
        assert_eq!(env.lookup("y", at), Some("FileChannel"));
    }

    #[test]
    fn use_before_declaration_is_unknown() {
        let (s, env) = env_of("o.toString(); Object o = new Object();");
        let at = pos_of(&s, "o.toString");
        assert_eq!(env.lookup("o", at), None);
    }

    #[test]
    fn inner_scope_shadows_outer() {
        let text = "String v = \"s\";\nif (ok) {\n  Integer v = 1;\n  v.intValue();\n}\nv.trim();";
        let (s, env) = env_of(text);
        assert_eq!(env.lookup("v", pos_of(&s, "v.intValue")), Some("Integer"));
        assert_eq!(env.lookup("v", pos_of(&s, "v.trim")), Some("String"));
    }

    #[test]
    fn method_and_catch_params_bind() {
        let text = "public void go(BufferedReader reader) {\n  try {\n    reader.readLine();\n  } catch (IOException e) {\n    e.printStackTrace();\n  }\n}";
        let (s, env) = env_of(text);
        assert_eq!(env.lookup("reader", pos_of(&s, "reader.readLine")), Some("BufferedReader"));
        assert_eq!(env.lookup("e", pos_of(&s, "e.printStackTrace")), Some("IOException"));
    }

    #[test]
    fn enhanced_for_var_binds() {
        let text = "for (String item : items) {\n  item.trim();\n}";
        let (s, env) = env_of(text);
        assert_eq!(env.lookup("item", pos_of(&s, "item.trim")), Some("String"));
    }

    #[test]
    fn field_type_visible_in_methods() {
        let text = "public class A {\n  private PrintWriter out;\n  void go() { out.write(\"x\"); }\n}";
        let (s, env) = env_of(text);
        assert_eq!(env.lookup("out", pos_of(&s, "out.write")), Some("PrintWriter"));
    }

    #[test]
    fn var_keyword_infers_from_new() {
        let (s, env) = env_of("var sb = new StringBuilder();\nsb.append(\"x\");");
        assert_eq!(env.lookup("sb", pos_of(&s, "sb.append")), Some("StringBuilder"));
    }

    #[test]
    fn builtin_table_has_seeded_entries() {
        let t = ReturnTypeTable::builtin();
        assert_eq!(t.lookup("Activity", "getPackageManager"), Some("PackageManager"));
        assert_eq!(t.lookup("List", "iterator"), Some("Iterator"));
        assert_eq!(t.lookup("Nope", "nothing"), None);
        assert!(t.len() > 20);
    }

    #[test]
    fn table_parses_from_text_and_rejects_garbage() {
        let t = ReturnTypeTable::parse("# c\nA.b -> C\n").unwrap();
        assert_eq!(t.lookup("A", "b"), Some("C"));
        assert!(ReturnTypeTable::parse("A.b C").is_err());
    }
}
