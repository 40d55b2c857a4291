use std::sync::OnceLock;

use super::{NavMethod, PageObjectSpec, ReturnKind};
use crate::template::{Template, TemplateError, Vars};

pub const PAGE_OBJECT_SECTIONS: &[&str] = &[
    "class",
    "import",
    "header_plain",
    "header_popup",
    "selector",
    "ensure_selector",
    "ensure_idle",
    "method_destination",
    "method_owner",
    "method_previous",
];

/// The shipped page-object template.
pub fn default_template() -> &'static Template {
    static T: OnceLock<Template> = OnceLock::new();
    T.get_or_init(|| Template::parse("page_object.kt.tmpl", include_str!("../../templates/page_object.kt.tmpl")))
}

fn vars<'a>(pairs: &[(&'a str, &str)]) -> Vars<'a> {
    pairs.iter().map(|(k, v)| (*k, v.to_string())).collect()
}

fn render_method(spec: &PageObjectSpec, m: &NavMethod, tpl: &Template) -> Result<String, TemplateError> {
    let selector = m.selector_ref.as_deref().unwrap_or_default();
    let mut v = vars(&[
        ("name", &m.name),
        ("return_type", &m.return_type),
        ("click", m.action_kind.driver_call()),
        ("selector", selector),
        ("page_id", &spec.page_id),
    ]);
    let section = match &m.returns {
        ReturnKind::Destination(d) => {
            v.insert("destination", d.clone());
            "method_destination"
        }
        ReturnKind::Owner => "method_owner",
        ReturnKind::Previous => "method_previous",
    };
    tpl.render(section, &v)
}

fn render_selector(sel: &str, key: &str, tpl: &Template) -> Result<String, TemplateError> {
    tpl.render("selector", &vars(&[("selector", sel), ("key", key)]))
}

fn render_import(path: &str, tpl: &Template) -> Result<String, TemplateError> {
    tpl.render("import", &vars(&[("path", path)]))
}

/// Renders a spec to source text. Fresh specs produce a whole class; update
/// specs splice new selectors, methods and imports into the prior source and
/// leave every existing byte in place.
pub fn render_page_object(spec: &PageObjectSpec, tpl: &Template) -> Result<String, TemplateError> {
    tpl.require(PAGE_OBJECT_SECTIONS)?;
    match &spec.prior {
        Some(prior) => render_update(spec, &prior.text, tpl),
        None => render_fresh(spec, tpl),
    }
}

fn render_fresh(spec: &PageObjectSpec, tpl: &Template) -> Result<String, TemplateError> {
    let imports = spec.imports.iter().map(|i| render_import(i, tpl)).collect::<Result<Vec<_>, _>>()?.join("\n");
    let header_vars = vars(&[("page_id", &spec.page_id), ("base_class", &spec.base_class)]);
    let header = tpl.render(if spec.popup { "header_popup" } else { "header_plain" }, &header_vars)?;

    let mut selectors = String::new();
    for e in &spec.elements {
        selectors.push_str(&render_selector(&e.selector_name, &e.key.raw, tpl)?);
        selectors.push('\n');
    }
    if !selectors.is_empty() {
        selectors.push('\n');
    }
    let ensure = match spec.elements.first() {
        Some(e) => tpl.render("ensure_selector", &vars(&[("selector", &e.selector_name)]))?,
        None => tpl.render("ensure_idle", &Vars::new())?,
    };
    let mut methods = String::new();
    for m in &spec.methods {
        methods.push_str(&render_method(spec, m, tpl)?);
        methods.push('\n');
    }
    let mut out = tpl.render(
        "class",
        &vars(&[
            ("package", &spec.package),
            ("imports", &imports),
            ("header", &header),
            ("selectors", &selectors),
            ("ensure", &ensure),
            ("methods", &methods),
        ]),
    )?;
    if !out.ends_with('\n') {
        out.push('\n');
    }
    Ok(out)
}

fn render_update(spec: &PageObjectSpec, prior: &str, tpl: &Template) -> Result<String, TemplateError> {
    let mut lines: Vec<String> = prior.split('\n').map(str::to_string).collect();
    let parsed = spec.prior.as_ref().expect("update spec carries prior source");

    let new_imports: Vec<String> = spec
        .imports
        .iter()
        .filter(|i| !parsed.imports.contains(i))
        .map(|i| render_import(i, tpl))
        .collect::<Result<_, _>>()?;
    let new_selectors: Vec<String> = spec
        .elements
        .iter()
        .filter(|e| !e.retained)
        .map(|e| render_selector(&e.selector_name, &e.key.raw, tpl))
        .collect::<Result<_, _>>()?;
    let new_methods: Vec<String> =
        spec.methods.iter().filter(|m| !m.retained).map(|m| render_method(spec, m, tpl)).collect::<Result<_, _>>()?;

    let last_import = lines.iter().rposition(|l| l.starts_with("import "));
    let package_line = lines.iter().position(|l| l.starts_with("package "));
    let class_line = lines.iter().position(|l| l.contains("class ") && l.trim_end().ends_with('{'));
    let last_selector = parsed.selectors.last().map(|s| s.line - 1);
    let closing = lines.iter().rposition(|l| l.trim() == "}");

    // Apply bottom-up so earlier indices stay valid.
    if let Some(close) = closing {
        if !new_methods.is_empty() {
            let block: Vec<String> = new_methods.iter().flat_map(|m| m.split('\n').map(str::to_string)).collect();
            lines.splice(close..close, block);
        }
    }
    if let Some(at) = last_selector.or(class_line) {
        if !new_selectors.is_empty() {
            lines.splice(at + 1..at + 1, new_selectors);
        }
    }
    if !new_imports.is_empty() {
        match last_import.or(package_line) {
            Some(at) => {
                lines.splice(at + 1..at + 1, new_imports);
            }
            None => {
                lines.splice(0..0, new_imports);
            }
        }
    }
    Ok(lines.join("\n"))
}
