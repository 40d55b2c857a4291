use std::collections::{BTreeMap, BTreeSet};
use std::sync::OnceLock;

use regex::Regex;

use super::naming::{page_identity, PageIdentity};
use super::{ActionKind, Element, NavMethod, PageObjectConfig, PageObjectError, PageObjectSpec, ReturnKind};
use crate::depgraph::LocatedKey;
use crate::diagnostics::Diagnostic;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegisteredPage {
    pub source_file: String,
    pub package: String,
    pub base_class: String,
    pub popup: bool,
}

/// Every page known to the run, so return types and imports of
/// destinations can be resolved.
#[derive(Debug, Clone)]
pub struct PageRegistry {
    cfg: PageObjectConfig,
    pages: BTreeMap<String, RegisteredPage>,
}

impl PageRegistry {
    pub fn new(cfg: PageObjectConfig) -> Self {
        Self { cfg, pages: BTreeMap::new() }
    }

    /// Registers every conforming page file; the rest become diagnostics.
    pub fn from_files<'a>(cfg: PageObjectConfig, files: impl IntoIterator<Item = &'a str>) -> (Self, Vec<Diagnostic>) {
        let mut reg = Self::new(cfg);
        let mut diags = Vec::new();
        for f in files {
            if !f.ends_with(&reg.cfg.page_suffix) {
                continue;
            }
            if let Err(e) = reg.register(f) {
                diags.push(Diagnostic::warning("non-conforming-page-name", e.to_string()).at(f, None));
            }
        }
        (reg, diags)
    }

    pub fn register(&mut self, page_file: &str) -> Result<PageIdentity, PageObjectError> {
        let id = page_identity(page_file, &self.cfg)?;
        let base_class = self.cfg.base_for(&id.page_id).to_string();
        let popup = self.cfg.is_popup_base(&base_class);
        self.pages.insert(
            id.page_id.clone(),
            RegisteredPage { source_file: page_file.to_string(), package: id.package.clone(), base_class, popup },
        );
        Ok(id)
    }

    pub fn config(&self) -> &PageObjectConfig {
        &self.cfg
    }

    pub fn get(&self, page_id: &str) -> Option<&RegisteredPage> {
        self.pages.get(page_id)
    }

    pub fn page_ids(&self) -> impl Iterator<Item = &str> {
        self.pages.keys().map(String::as_str)
    }

    pub fn is_popup(&self, page_id: &str) -> bool {
        match self.pages.get(page_id) {
            Some(p) => p.popup,
            None => self.cfg.is_popup_base(self.cfg.base_for(page_id)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PriorSelector {
    pub name: String,
    pub key: String,
    pub line: usize,
}

/// What the merge needs to know about an existing page object.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PriorSource {
    pub text: String,
    pub selectors: Vec<PriorSelector>,
    pub methods: Vec<String>,
    pub imports: Vec<String>,
}

fn selector_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r#"^\s*(?:private\s+)?val\s+(\w+)\s*=\s*byValueKey\(\s*"([^"]*)"\s*\)"#).unwrap())
}

fn fun_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"^\s*(?:(?:override|open|public|private)\s+)*fun\s+(\w+)\s*\(").unwrap())
}

fn import_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"^import\s+(\S+)").unwrap())
}

impl PriorSource {
    pub fn parse(text: &str) -> Self {
        let mut selectors = Vec::new();
        let mut methods = Vec::new();
        let mut imports = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if let Some(c) = selector_re().captures(line) {
                selectors.push(PriorSelector { name: c[1].to_string(), key: c[2].to_string(), line: i + 1 });
            } else if let Some(c) = fun_re().captures(line) {
                methods.push(c[1].to_string());
            } else if let Some(c) = import_re().captures(line) {
                imports.push(c[1].to_string());
            }
        }
        Self { text: text.to_string(), selectors, methods, imports }
    }

    fn selector_for_key(&self, key: &str) -> Option<&PriorSelector> {
        self.selectors.iter().find(|s| s.key == key)
    }

    fn has_method(&self, name: &str) -> bool {
        self.methods.iter().any(|m| m == name)
    }
}

#[derive(Debug, Clone)]
pub struct Synthesis {
    pub spec: PageObjectSpec,
    pub diagnostics: Vec<Diagnostic>,
}

/// Turns a key identifier into a Kotlin method name.
pub(crate) fn method_name(identifier: &str) -> String {
    let clean: String = identifier.chars().filter(char::is_ascii_alphanumeric).collect();
    let mut cs = clean.chars();
    let name: String = match cs.next() {
        Some(c) if c.is_ascii_alphabetic() => c.to_ascii_lowercase().to_string() + cs.as_str(),
        Some(_) => format!("tap{clean}"),
        None => "tap".to_string(),
    };
    name
}

fn in_list(k: &LocatedKey) -> bool {
    k.enclosing_widget.as_deref().is_some_and(|w| w.contains("List"))
}

/// Builds the spec for one page. `keys` are the keys found in the page's
/// import closure; `prior` is the current page-object source, if any.
pub fn synthesize_page_object(
    page_file: &str,
    keys: &[LocatedKey],
    prior: Option<&str>,
    registry: &PageRegistry,
) -> Result<Synthesis, PageObjectError> {
    let cfg = registry.config();
    let id = page_identity(page_file, cfg)?;
    let base_class = cfg.base_for(&id.page_id).to_string();
    let popup = cfg.is_popup_base(&base_class);
    let mut diagnostics = Vec::new();

    let mut seen = BTreeSet::new();
    let unique: Vec<&LocatedKey> = keys.iter().filter(|k| seen.insert(k.key.raw.as_str())).collect();

    let mut by_name: BTreeMap<String, Vec<&str>> = BTreeMap::new();
    for k in &unique {
        by_name.entry(method_name(&k.key.identifier)).or_default().push(&k.key.raw);
    }
    let collisions: Vec<String> = by_name
        .iter()
        .filter(|(_, raws)| raws.len() > 1)
        .map(|(name, raws)| format!("{name}: {}", raws.join(", ")))
        .collect();
    if !collisions.is_empty() {
        return Err(PageObjectError::DuplicateIdentifiers { page: id.page_id, collisions });
    }

    let prior = prior.map(PriorSource::parse);
    let self_type = if popup { format!("{}<P>", id.page_id) } else { id.page_id.clone() };
    let mut elements = Vec::new();
    let mut methods = Vec::new();

    for k in unique {
        let name = method_name(&k.key.identifier);
        let existing = prior.as_ref().and_then(|p| p.selector_for_key(&k.key.raw));
        let method_exists = prior.as_ref().is_some_and(|p| p.has_method(&name));
        if existing.is_none() && method_exists {
            diagnostics.push(
                Diagnostic::warning(
                    "method-name-clash",
                    format!("key `{}` maps to existing method `{name}` backed by another selector; skipped", k.key.raw),
                )
                .at(&id.output_path, None),
            );
            continue;
        }
        let list = in_list(k);
        let selector_name = match existing {
            Some(s) => s.name.clone(),
            None if list => format!("{name}ListItemSelector"),
            None => format!("{name}Selector"),
        };
        elements.push(Element {
            selector_name: selector_name.clone(),
            key: k.key.clone(),
            retained: existing.is_some(),
        });

        let (returns, return_type) = match &k.key.target_page {
            Some(dest) if registry.is_popup(dest) => {
                (ReturnKind::Destination(dest.clone()), format!("{dest}<{self_type}>"))
            }
            Some(dest) => (ReturnKind::Destination(dest.clone()), dest.clone()),
            None if popup => (ReturnKind::Previous, "P".to_string()),
            None => (ReturnKind::Owner, self_type.clone()),
        };
        if let Some(dest) = &k.key.target_page {
            if registry.get(dest).is_none() {
                diagnostics.push(
                    Diagnostic::info(
                        "unknown-destination",
                        format!("`{dest}` (from `{}`) has no page file", k.key.raw),
                    )
                    .at(&k.file, Some(k.line)),
                );
            }
        }
        methods.push(NavMethod {
            name,
            action_kind: if list { ActionKind::ScrollAndTap } else { ActionKind::Tap },
            destination: k.key.target_page.clone(),
            selector_ref: Some(selector_name),
            returns,
            return_type,
            retained: method_exists,
        });
    }

    if let Some(p) = &prior {
        let current: BTreeSet<&str> = elements.iter().map(|e| e.key.raw.as_str()).collect();
        for s in &p.selectors {
            if !current.contains(s.key.as_str()) {
                diagnostics.push(
                    Diagnostic::warning(
                        "deprecated-key",
                        format!("selector `{}` references key `{}`, which is no longer in the source", s.name, s.key),
                    )
                    .at(&id.output_path, Some(s.line)),
                );
            }
        }
    }

    let mut imports: BTreeSet<String> = BTreeSet::new();
    let base_pkg = cfg.base_package.trim_end_matches('.');
    imports.insert(format!("{base_pkg}.{}", cfg.default_base));
    imports.insert(format!("{base_pkg}.{base_class}"));
    for m in &methods {
        if let Some(dest) = &m.destination {
            if let Some(page) = registry.get(dest) {
                if page.package != id.package {
                    imports.insert(format!("{}.{dest}", page.package));
                }
            }
        }
    }

    let spec = PageObjectSpec {
        page_id: id.page_id,
        source_page_file: page_file.to_string(),
        output_path: id.output_path,
        package: id.package,
        base_class,
        popup,
        imports: imports.into_iter().collect(),
        elements,
        methods,
        is_update: prior.is_some(),
        prior,
    };
    Ok(Synthesis { spec, diagnostics })
}
