//! Text preprocessing before embedding, and the placeholder abstraction
//! fingerprinted by the hash baseline.

use std::collections::{BTreeMap, HashSet};
use std::ops::Range;

use md5::{Digest, Md5};
use serde::{Deserialize, Serialize};
use tree_sitter::Node;

use crate::corpus::{self, FunctionRecord, Language};
use crate::lexer::{self, TokenKind};

/// Removes `//` and `/* */` comments outside literals. Line comments vanish
/// (their newline stays); block comments become a single space.
pub fn strip_comments(text: &str, _language: Language) -> String {
    let mut out = String::with_capacity(text.len());
    let mut last = 0;
    for tok in lexer::tokenize(text) {
        if !tok.kind.is_comment() {
            continue;
        }
        out.push_str(&text[last..tok.span.start]);
        if tok.kind == TokenKind::BlockComment {
            out.push(' ');
        }
        last = tok.span.end;
    }
    out.push_str(&text[last..]);
    out
}

/// Standardizes whitespace: LF line endings, tabs as spaces, single spaces,
/// no indentation, no trailing spaces and no blank lines.
pub fn normalize_whitespace(text: &str) -> String {
    let unix = text.replace("\r\n", "\n");
    let mut out = String::with_capacity(unix.len());
    for line in unix.split('\n') {
        let mut collapsed = String::with_capacity(line.len());
        for word in line.split([' ', '\t']).filter(|w| !w.is_empty()) {
            if !collapsed.is_empty() {
                collapsed.push(' ');
            }
            collapsed.push_str(word);
        }
        if collapsed.is_empty() {
            continue;
        }
        if !out.is_empty() {
            out.push('\n');
        }
        out.push_str(&collapsed);
    }
    out
}

/// Lowercases keyword tokens in case-insensitive languages. C, C++ and Java
/// keywords are case-sensitive and already lowercase, so an upper-case
/// spelling there is an identifier and the text is returned as is.
pub fn normalize_keyword_case(text: &str, language: Language) -> String {
    match language {
        Language::C | Language::Cpp | Language::Java => text.to_string(),
    }
}

/// Comment stripping, whitespace standardization and keyword-case
/// normalization, in that order.
pub fn preprocess(text: &str, language: Language) -> String {
    let stripped = strip_comments(text, language);
    let spaced = normalize_whitespace(&stripped);
    normalize_keyword_case(&spaced, language)
}

pub const FPARAM: &str = "FPARAM";
pub const LVAR: &str = "LVAR";
pub const DTYPE: &str = "DTYPE";
pub const FUNCCALL: &str = "FUNCCALL";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AbstractedFunction {
    pub source_id: String,
    pub abstracted_text: String,
    pub digest: String,
    pub abstraction_degraded: bool,
}

pub fn md5_hex(text: &str) -> String {
    hex::encode(Md5::digest(text.as_bytes()))
}

/// Replaces parameters, locals, type names and called function names with
/// placeholders, then drops comments and all whitespace. When no function
/// can be located in the text the result is the comment- and
/// whitespace-free text, flagged as degraded.
pub fn abstract_function(record: &FunctionRecord) -> AbstractedFunction {
    let (body, degraded) = match abstract_source(&record.text, record.language) {
        Some(text) => (text, false),
        None => (record.text.clone(), true),
    };
    let abstracted_text: String = strip_comments(&body, record.language)
        .chars()
        .filter(|c| !c.is_whitespace())
        .collect();
    AbstractedFunction {
        source_id: record.id.clone(),
        digest: md5_hex(&abstracted_text),
        abstracted_text,
        abstraction_degraded: degraded,
    }
}

/// True iff both abstractions carry the same digest.
pub fn hash_match(a: &AbstractedFunction, b: &AbstractedFunction) -> bool {
    a.digest == b.digest
}

fn abstract_source(text: &str, language: Language) -> Option<String> {
    let tree = corpus::parse_tree(text, language).ok()?;
    let func = *corpus::function_nodes(tree.root_node(), language).first()?;
    let mut rep = Replacements::default();
    let rules = Rules::for_language(language);

    for node in descendants(func) {
        if rules.type_kinds.contains(&node.kind()) {
            rep.claim(node.byte_range(), DTYPE);
        }
    }
    for node in descendants(func) {
        if let Some(callee) = rules.callee(node) {
            rep.claim(callee.byte_range(), FUNCCALL);
        }
    }

    let params = collect_names(func, text, &rules, Scope::Params);
    let locals = collect_names(func, text, &rules, Scope::Locals);
    for (names, placeholder) in [(&params, FPARAM), (&locals, LVAR)] {
        for node in descendants(func) {
            if node.kind() == "identifier" && names.contains(&text[node.byte_range()]) {
                rep.claim(node.byte_range(), placeholder);
            }
        }
    }
    Some(rep.apply(text, func.byte_range()))
}

#[derive(Default)]
struct Replacements {
    // start byte -> (end byte, placeholder); claimed ranges never overlap
    spans: BTreeMap<usize, (usize, &'static str)>,
}

impl Replacements {
    fn claim(&mut self, range: Range<usize>, placeholder: &'static str) {
        let overlaps_prev = self
            .spans
            .range(..=range.start)
            .next_back()
            .is_some_and(|(_, &(end, _))| end > range.start);
        let overlaps_next = self
            .spans
            .range(range.start..range.end)
            .next()
            .is_some();
        if !overlaps_prev && !overlaps_next {
            self.spans.insert(range.start, (range.end, placeholder));
        }
    }

    fn apply(&self, text: &str, within: Range<usize>) -> String {
        let mut out = String::new();
        let mut pos = within.start;
        for (&start, &(end, placeholder)) in self.spans.range(within.start..within.end) {
            out.push_str(&text[pos..start]);
            out.push_str(placeholder);
            pos = end;
        }
        out.push_str(&text[pos..within.end]);
        out
    }
}

struct Rules {
    language: Language,
    type_kinds: &'static [&'static str],
}

#[derive(Clone, Copy, PartialEq)]
enum Scope {
    Params,
    Locals,
}

impl Rules {
    fn for_language(language: Language) -> Self {
        let type_kinds: &'static [&'static str] = match language {
            Language::C | Language::Cpp => {
                &["sized_type_specifier", "primitive_type", "type_identifier"]
            }
            Language::Java => &[
                "scoped_type_identifier",
                "integral_type",
                "floating_point_type",
                "boolean_type",
                "void_type",
                "type_identifier",
            ],
        };
        Rules {
            language,
            type_kinds,
        }
    }

    fn callee<'t>(&self, node: Node<'t>) -> Option<Node<'t>> {
        match (self.language, node.kind()) {
            (Language::Java, "method_invocation") => node.child_by_field_name("name"),
            (Language::C | Language::Cpp, "call_expression") => {
                let f = node.child_by_field_name("function")?;
                match f.kind() {
                    "identifier" | "qualified_identifier" => Some(f),
                    "field_expression" => f.child_by_field_name("field"),
                    "template_function" => f.child_by_field_name("name"),
                    _ => None,
                }
            }
            _ => None,
        }
    }

    /// Declared names of the given scope within `func`.
    fn declared<'t>(&self, node: Node<'t>, scope: Scope) -> Vec<Node<'t>> {
        let kind = node.kind();
        match (self.language, scope) {
            (Language::C | Language::Cpp, Scope::Params) => match kind {
                "parameter_declaration" | "optional_parameter_declaration" => {
                    node.child_by_field_name("declarator").into_iter().collect()
                }
                _ => vec![],
            },
            (Language::C | Language::Cpp, Scope::Locals) => match kind {
                "declaration" => {
                    let mut cursor = node.walk();
                    node.children_by_field_name("declarator", &mut cursor).collect()
                }
                _ => vec![],
            },
            (Language::Java, Scope::Params) => match kind {
                "formal_parameter" => node.child_by_field_name("name").into_iter().collect(),
                "spread_parameter" => node
                    .named_children(&mut node.walk())
                    .filter(|c| c.kind() == "variable_declarator")
                    .filter_map(|c| c.child_by_field_name("name"))
                    .collect(),
                _ => vec![],
            },
            (Language::Java, Scope::Locals) => match kind {
                "local_variable_declaration" => {
                    let mut cursor = node.walk();
                    node.children_by_field_name("declarator", &mut cursor)
                        .filter_map(|d| d.child_by_field_name("name"))
                        .collect()
                }
                "enhanced_for_statement" | "catch_formal_parameter" => {
                    node.child_by_field_name("name").into_iter().collect()
                }
                "lambda_expression" => node
                    .child_by_field_name("parameters")
                    .map(|p| {
                        if p.kind() == "identifier" {
                            vec![p]
                        } else {
                            descendants(p)
                                .into_iter()
                                .filter(|n| n.kind() == "identifier")
                                .collect()
                        }
                    })
                    .unwrap_or_default(),
                _ => vec![],
            },
        }
    }
}

fn collect_names<'s>(func: Node, src: &'s str, rules: &Rules, scope: Scope) -> HashSet<&'s str> {
    let mut names = HashSet::new();
    let roots: Vec<Node> = match (scope, rules.language) {
        // parameters of the function itself, not of nested lambdas/classes
        (Scope::Params, Language::C | Language::Cpp) => func
            .child_by_field_name("declarator")
            .and_then(find_function_declarator)
            .and_then(|d| d.child_by_field_name("parameters"))
            .into_iter()
            .collect(),
        (Scope::Params, Language::Java) => {
            func.child_by_field_name("parameters").into_iter().collect()
        }
        (Scope::Locals, _) => func.child_by_field_name("body").into_iter().collect(),
    };
    for root in roots {
        for node in descendants(root) {
            for decl in rules.declared(node, scope) {
                if let Some(ident) = declarator_identifier(decl) {
                    names.insert(&src[ident.byte_range()]);
                }
            }
        }
    }
    names
}

fn find_function_declarator(mut node: Node) -> Option<Node> {
    loop {
        if node.kind() == "function_declarator" {
            return Some(node);
        }
        node = node.child_by_field_name("declarator")?;
    }
}

/// Follows pointer/array/init declarators down to the declared identifier.
fn declarator_identifier(mut node: Node) -> Option<Node> {
    loop {
        match node.kind() {
            "identifier" => return Some(node),
            "pointer_declarator" | "array_declarator" | "init_declarator"
            | "reference_declarator" | "parenthesized_declarator" | "attributed_declarator" => {
                node = node
                    .child_by_field_name("declarator")
                    .or_else(|| node.named_children(&mut node.walk()).find(|c| c.kind().ends_with("declarator") || c.kind() == "identifier"))?;
            }
            _ => return None,
        }
    }
}

fn descendants(root: Node) -> Vec<Node> {
    let mut out = Vec::new();
    let mut stack = vec![root];
    while let Some(node) = stack.pop() {
        out.push(node);
        let mut cursor = node.walk();
        let children: Vec<_> = node.children(&mut cursor).collect();
        stack.extend(children.into_iter().rev());
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(text: &str, language: Language) -> FunctionRecord {
        FunctionRecord {
            id: "fixture".into(),
            repo: "r".into(),
            path: "f".into(),
            language,
            name: String::new(),
            start_line: 1,
            end_line: text.lines().count().max(1),
            text: text.into(),
        }
    }

    #[test]
    fn strip_line_comment() {
        assert_eq!(strip_comments("int x; // note", Language::C), "int x; ");
    }

    #[test]
    fn comment_markers_inside_literals_survive() {
        let src = r#"char*s="/*not a comment*/";"#;
        assert_eq!(strip_comments(src, Language::C), src);
    }

    #[test]
    fn block_comment_becomes_space_and_unterminated_runs_to_end() {
        assert_eq!(strip_comments("a/*x*/b", Language::C), "a b");
        assert_eq!(strip_comments("a /* open", Language::C), "a  ");
    }

    #[test]
    fn mixed_comments_keep_token_stream() {
        let src = "int f(int a) {\n  /* block */ int b = a; // line\n  /** doc\n   */\n  return b; // end\n}";
        let stripped = strip_comments(src, Language::C);
        assert!(!stripped.contains("//") && !stripped.contains("/*"));
        assert_eq!(lexer::code_tokens(src), lexer::code_tokens(&stripped));
    }

    #[test]
    fn whitespace_rules() {
        assert_eq!(normalize_whitespace("a \t b"), "a b");
        assert_eq!(normalize_whitespace("a\r\nb\n\n\n  c  \r\n"), "a\nb\nc");
        let once = normalize_whitespace("x  =\t1;\r\n\r\n\ty;");
        assert_eq!(normalize_whitespace(&once), once);
        assert!(!normalize_whitespace("p\r\nq\nr\r\n").contains('\r'));
    }

    #[test]
    fn keyword_case_is_identity_for_case_sensitive_languages() {
        assert_eq!(normalize_keyword_case("RETURN x;", Language::Java), "RETURN x;");
        assert_eq!(normalize_keyword_case("return x;", Language::C), "return x;");
    }

    #[test]
    fn preprocess_is_composition() {
        let src = "int f(){ // c\n\treturn  1; }\n";
        let composed = normalize_keyword_case(
            &normalize_whitespace(&strip_comments(src, Language::C)),
            Language::C,
        );
        assert_eq!(preprocess(src, Language::C), composed);
    }

    #[test]
    fn preprocess_ignores_comments_and_indentation() {
        let a = "int f(int a) {\n    // explain\n    return a;\n}\n";
        let b = "int f(int a) {\n\treturn a; /* tail */\n}";
        let c = "int f(int a) {\nreturn a;\n}";
        assert_eq!(preprocess(a, Language::C), preprocess(b, Language::C));
        assert_eq!(preprocess(b, Language::C), preprocess(c, Language::C));
        let d = "int f(int z) {\nreturn z;\n}";
        assert_ne!(preprocess(c, Language::C), preprocess(d, Language::C));
    }

    #[test]
    fn renamed_parameters_share_digest() {
        let a = abstract_function(&record("int add(int a,int b){return a+b;}", Language::C));
        let b = abstract_function(&record("int add(int x,int y){return x+y;}", Language::C));
        assert_eq!(a.abstracted_text, "DTYPEadd(DTYPEFPARAM,DTYPEFPARAM){returnFPARAM+FPARAM;}");
        assert!(hash_match(&a, &b));
        assert!(!a.abstraction_degraded);
    }

    #[test]
    fn extra_statement_changes_digest() {
        let a = abstract_function(&record(
            "int add(int a,int b){int s=a+b;return s;}",
            Language::C,
        ));
        let b = abstract_function(&record(
            "int add(int a,int b){int s=a+b;log_sum(s);return s;}",
            Language::C,
        ));
        assert_eq!(a.abstracted_text, "DTYPEadd(DTYPEFPARAM,DTYPEFPARAM){DTYPELVAR=FPARAM+FPARAM;returnLVAR;}");
        assert_eq!(
            b.abstracted_text,
            "DTYPEadd(DTYPEFPARAM,DTYPEFPARAM){DTYPELVAR=FPARAM+FPARAM;FUNCCALL(LVAR);returnLVAR;}"
        );
        assert!(!hash_match(&a, &b));
    }

    #[test]
    fn pointers_structs_fields_and_globals() {
        let src = "static size_t grow(struct buf *b, unsigned int n) {\n  char *p = realloc(b->data, n);\n  counter++;\n  return b->len;\n}";
        let a = abstract_function(&record(src, Language::C));
        assert_eq!(
            a.abstracted_text,
            "staticDTYPEgrow(structDTYPE*FPARAM,DTYPEFPARAM){DTYPE*LVAR=FUNCCALL(FPARAM->data,FPARAM);counter++;returnFPARAM->len;}"
        );
    }

    #[test]
    fn java_abstraction() {
        let src = "public int total(List<Item> items) {\n  int sum = 0;\n  for (Item it : items) { sum += it.price(); }\n  return sum;\n}";
        let a = abstract_function(&record(src, Language::Java));
        assert_eq!(
            a.abstracted_text,
            "publicDTYPEtotal(DTYPE<DTYPE>FPARAM){DTYPELVAR=0;for(DTYPELVAR:FPARAM){LVAR+=LVAR.FUNCCALL();}returnLVAR;}"
        );
    }

    #[test]
    fn degraded_when_no_function_found() {
        let a = abstract_function(&record("x = 1; /* c */ y", Language::C));
        assert!(a.abstraction_degraded);
        assert_eq!(a.abstracted_text, "x=1;y");
        assert_eq!(a.digest, md5_hex("x=1;y"));
    }

    #[test]
    fn abstraction_has_no_whitespace_even_in_literals() {
        let a = abstract_function(&record("void f(){ puts(\"a b\tc\"); }", Language::C));
        assert!(!a.abstracted_text.chars().any(char::is_whitespace));
    }

    #[test]
    fn md5_known_value() {
        assert_eq!(md5_hex(""), "d41d8cd98f00b204e9800998ecf8427e");
    }
}
