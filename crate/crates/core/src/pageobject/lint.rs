use std::collections::BTreeMap;
use std::fmt;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use super::{type_head, PageObjectConfig, PageObjectSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LintRule {
    BaseClass,
    ReturnType,
    MissingEnsurePageVisible,
    SelectorNaming,
}

impl fmt::Display for LintRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LintRule::BaseClass => "base-class",
            LintRule::ReturnType => "return-type",
            LintRule::MissingEnsurePageVisible => "missing-ensure-page-visible",
            LintRule::SelectorNaming => "selector-naming",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub rule: LintRule,
    pub line: usize,
    pub message: String,
}

/// Framework conventions the lint checks against.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LintContext {
    /// Accepted base classes; empty accepts any.
    pub allowed_bases: Vec<String>,
    /// Exact base class required, when the page's convention is known.
    pub expected_base: Option<String>,
    /// Method name → expected head of the declared return type.
    pub expected_returns: BTreeMap<String, String>,
}

impl LintContext {
    pub fn from_config(cfg: &PageObjectConfig) -> Self {
        Self { allowed_bases: cfg.allowed_bases(), ..Self::default() }
    }

    /// Context pinning the base class and method return types of `spec`.
    pub fn for_spec(spec: &PageObjectSpec, cfg: &PageObjectConfig) -> Self {
        Self {
            allowed_bases: cfg.allowed_bases(),
            expected_base: Some(spec.base_class.clone()),
            expected_returns: spec
                .methods
                .iter()
                .map(|m| (m.name.clone(), type_head(&m.return_type).to_string()))
                .collect(),
        }
    }
}

fn fun_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(r"^\s*((?:(?:override|open|public|private|internal|protected)\s+)*)fun\s+(\w+)\s*\(([^)]*)\)\s*(?::\s*([^={]+?))?\s*\{").unwrap()
    })
}

fn val_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"\bval\s+(\w+)\s*=\s*by[A-Z]\w*\(").unwrap())
}

fn selector_name_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"^[a-z][A-Za-z0-9]*Selector$").unwrap())
}

fn ctor_call_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"^([A-Z]\w*)\s*(?:<[^>]*>)?\s*\(\s*this\s*\)$").unwrap())
}

/// Removes `//` and `/* */` comments, keeping line structure.
fn strip_comments(src: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut in_block = false;
    for line in src.split('\n') {
        let mut kept = String::new();
        let mut chars = line.chars().peekable();
        let mut in_str = false;
        while let Some(c) = chars.next() {
            if in_block {
                if c == '*' && chars.peek() == Some(&'/') {
                    chars.next();
                    in_block = false;
                }
                continue;
            }
            if in_str {
                kept.push(c);
                if c == '\\' {
                    if let Some(n) = chars.next() {
                        kept.push(n);
                    }
                } else if c == '"' {
                    in_str = false;
                }
                continue;
            }
            match c {
                '"' => {
                    in_str = true;
                    kept.push(c);
                }
                '/' if chars.peek() == Some(&'/') => break,
                '/' if chars.peek() == Some(&'*') => {
                    chars.next();
                    in_block = true;
                }
                _ => kept.push(c),
            }
        }
        out.push(kept);
    }
    out
}

struct ClassHeader {
    line: usize,
    name: String,
    type_params: Vec<String>,
    previous_type: Option<String>,
    base: Option<String>,
}

/// Splits on `sep` at angle/paren depth zero.
fn split_top(s: &str, sep: char) -> Vec<&str> {
    let mut parts = Vec::new();
    let mut depth = 0i32;
    let mut start = 0;
    for (i, c) in s.char_indices() {
        match c {
            '<' | '(' => depth += 1,
            '>' | ')' => depth -= 1,
            c if c == sep && depth == 0 => {
                parts.push(&s[start..i]);
                start = i + c.len_utf8();
            }
            _ => {}
        }
    }
    parts.push(&s[start..]);
    parts
}

fn parse_header(lines: &[String]) -> Option<ClassHeader> {
    let (idx, first) = lines.iter().enumerate().find(|(_, l)| {
        let t = l.trim_start();
        t.starts_with("class ") || t.contains(" class ")
    })?;
    let mut text = first.clone();
    let mut j = idx;
    while !text.contains('{') && j + 1 < lines.len() {
        j += 1;
        text.push(' ');
        text.push_str(&lines[j]);
    }
    let after_class = &text[text.find("class ")? + 6..];
    let header = after_class.split('{').next().unwrap_or(after_class).trim();

    let name_end = header.find(|c: char| !(c.is_alphanumeric() || c == '_')).unwrap_or(header.len());
    let name = header[..name_end].to_string();
    let mut rest = header[name_end..].trim_start();

    let mut type_params = Vec::new();
    if rest.starts_with('<') {
        let mut depth = 0;
        let mut end = rest.len();
        for (i, c) in rest.char_indices() {
            match c {
                '<' => depth += 1,
                '>' => {
                    depth -= 1;
                    if depth == 0 {
                        end = i;
                        break;
                    }
                }
                _ => {}
            }
        }
        for p in split_top(&rest[1..end], ',') {
            let n = p.split(':').next().unwrap_or("").trim();
            if !n.is_empty() {
                type_params.push(n.to_string());
            }
        }
        rest = rest.get(end + 1..).unwrap_or("").trim_start();
    }

    let mut previous_type = None;
    if rest.starts_with('(') {
        let mut depth = 0;
        let mut end = rest.len();
        for (i, c) in rest.char_indices() {
            match c {
                '(' => depth += 1,
                ')' => {
                    depth -= 1;
                    if depth == 0 {
                        end = i;
                        break;
                    }
                }
                _ => {}
            }
        }
        for p in split_top(&rest[1..end], ',') {
            if let Some((n, t)) = p.split_once(':') {
                let n = n.trim().trim_start_matches("val ").trim_start_matches("var ").trim();
                if n == "previousPage" {
                    previous_type = Some(t.trim().to_string());
                }
            }
        }
        rest = rest.get(end + 1..).unwrap_or("").trim_start();
    }

    let base = rest.strip_prefix(':').map(|b| {
        let first = split_top(b, ',').into_iter().next().unwrap_or("").trim();
        type_head(first.split('(').next().unwrap_or(first)).to_string()
    });
    let base = base.filter(|b| !b.is_empty());
    Some(ClassHeader { line: idx + 1, name, type_params, previous_type, base })
}

/// Returns the first `return` expression in the body starting at `start`.
fn first_return(lines: &[String], start: usize) -> Option<String> {
    let mut depth = 0i32;
    for (i, line) in lines.iter().enumerate().skip(start) {
        let t = line.trim();
        if i > start {
            if let Some(expr) = t.strip_prefix("return ") {
                return Some(expr.trim().to_string());
            }
        }
        depth += line.matches('{').count() as i32 - line.matches('}').count() as i32;
        if depth <= 0 && i > start {
            return None;
        }
        if depth <= 0 && i == start && line.contains('}') {
            return None;
        }
    }
    None
}

/// Checks page-object source against the framework conventions. An empty
/// result means compliant.
pub fn lint_page_object(source: &str, ctx: &LintContext) -> Vec<Violation> {
    let lines = strip_comments(source);
    let mut out = Vec::new();
    let header = parse_header(&lines);

    match &header {
        None => out.push(Violation { rule: LintRule::BaseClass, line: 1, message: "no class declaration".into() }),
        Some(h) => match &h.base {
            None => out.push(Violation {
                rule: LintRule::BaseClass,
                line: h.line,
                message: format!("`{}` does not extend a page base class", h.name),
            }),
            Some(b) => {
                if let Some(exp) = &ctx.expected_base {
                    if b != exp {
                        out.push(Violation {
                            rule: LintRule::BaseClass,
                            line: h.line,
                            message: format!("`{}` extends `{b}`, expected `{exp}`", h.name),
                        });
                    }
                } else if !ctx.allowed_bases.is_empty() && !ctx.allowed_bases.iter().any(|a| a == b) {
                    out.push(Violation {
                        rule: LintRule::BaseClass,
                        line: h.line,
                        message: format!("`{}` extends `{b}`, which is not a page base class", h.name),
                    });
                }
            }
        },
    }

    let mut has_ensure = false;
    for (i, line) in lines.iter().enumerate() {
        if let Some(c) = val_re().captures(line) {
            let name = &c[1];
            if !selector_name_re().is_match(name) {
                out.push(Violation {
                    rule: LintRule::SelectorNaming,
                    line: i + 1,
                    message: format!("selector `{name}` must be lowerCamelCase ending in `Selector`"),
                });
            }
        }
        let Some(c) = fun_re().captures(line) else { continue };
        let name = &c[2];
        if name == "ensurePageVisible" {
            has_ensure = true;
            continue;
        }
        if c[1].contains("override") {
            continue;
        }
        let declared = c.get(4).map(|m| m.as_str().trim().to_string());
        let Some(expr) = first_return(&lines, i) else { continue };
        let Some(declared) = declared else {
            out.push(Violation {
                rule: LintRule::ReturnType,
                line: i + 1,
                message: format!("`{name}` returns `{expr}` but declares no return type"),
            });
            continue;
        };
        let head = type_head(&declared);
        if let Some(exp) = ctx.expected_returns.get(name) {
            if head != type_head(exp) {
                out.push(Violation {
                    rule: LintRule::ReturnType,
                    line: i + 1,
                    message: format!("`{name}` declares `{declared}`, expected `{exp}`"),
                });
                continue;
            }
        }
        let Some(h) = &header else { continue };
        let ok = if expr == "this" {
            head == h.name
        } else if expr == "previousPage" {
            h.type_params.iter().any(|p| p == head) || h.previous_type.as_deref().is_some_and(|t| type_head(t) == head)
        } else if let Some(cc) = ctor_call_re().captures(&expr) {
            head == &cc[1]
        } else {
            true
        };
        if !ok {
            out.push(Violation {
                rule: LintRule::ReturnType,
                line: i + 1,
                message: format!("`{name}` declares `{declared}` but returns `{expr}`"),
            });
        }
    }
    if !has_ensure {
        out.push(Violation {
            rule: LintRule::MissingEnsurePageVisible,
            line: header.as_ref().map_or(1, |h| h.line),
            message: "no `ensurePageVisible` override".into(),
        });
    }
    out.sort_by_key(|v| (v.line, v.rule));
    out
}
