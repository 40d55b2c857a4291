//! Page objects: one class per screen, exposing its widgets as selectors and
//! its navigation keys as methods.
//!
//! Naming follows the file convention (`profile_page.dart` ↔ `ProfilePage`)
//! and the output tree mirrors the source tree. Specs are synthesised
//! deterministically from widget keys, rendered through a template, and may
//! be refined by a provider; refined text is only kept when it passes
//! [`lint_page_object`].

mod lint;
mod naming;
mod refine;
mod render;
mod synth;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::depgraph::WidgetKey;

pub use lint::{lint_page_object, LintContext, LintRule, Violation};
pub use naming::{page_file_name, page_identity, PageIdentity};
pub use refine::{refine_page_object, refine_prompt, RefineOutcome};
pub use render::{default_template, render_page_object, PAGE_OBJECT_SECTIONS};
pub use synth::{synthesize_page_object, PageRegistry, PriorSource, Synthesis};

/// Reference page object in the house style, shown to the refiner.
pub const EXAMPLE_PAGE_OBJECT: &str = include_str!("../../templates/example_page_object.kt");

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PageObjectError {
    #[error("`{path}` does not follow the page naming convention (lower_snake_case ending in `{suffix}`)")]
    NonConformingName { path: String, suffix: String },
    #[error("duplicate key identifiers on {page}: {}", .collisions.join("; "))]
    DuplicateIdentifiers { page: String, collisions: Vec<String> },
}

/// Naming, layout and inheritance conventions for generated page objects.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct PageObjectConfig {
    /// Root of the mirrored output tree.
    pub test_root: String,
    pub extension: String,
    pub package_prefix: String,
    /// Leading source directory dropped when mirroring, usually `lib`.
    pub mirror_strip_prefix: String,
    pub page_suffix: String,
    pub default_base: String,
    /// Package holding the base classes.
    pub base_package: String,
    /// Base classes with popup semantics: destination-less actions return
    /// to the previous page instead of staying on this one.
    pub popup_bases: Vec<String>,
    /// Per-page base-class overrides, keyed by page id.
    pub base_classes: BTreeMap<String, String>,
    /// Further base classes accepted by the lint.
    pub extra_bases: Vec<String>,
}

impl Default for PageObjectConfig {
    fn default() -> Self {
        Self {
            test_root: "pages".into(),
            extension: "kt".into(),
            package_prefix: "pages".into(),
            mirror_strip_prefix: "lib".into(),
            page_suffix: "_page.dart".into(),
            default_base: "BasePage".into(),
            base_package: "pages.base".into(),
            popup_bases: vec!["BasePopupPage".into()],
            base_classes: BTreeMap::new(),
            extra_bases: vec!["BaseTabPage".into()],
        }
    }
}

impl PageObjectConfig {
    pub fn base_for(&self, page_id: &str) -> &str {
        self.base_classes.get(page_id).map_or(self.default_base.as_str(), String::as_str)
    }

    pub fn is_popup_base(&self, base: &str) -> bool {
        self.popup_bases.iter().any(|b| b == base)
    }

    pub fn allowed_bases(&self) -> Vec<String> {
        let mut v: Vec<String> = std::iter::once(self.default_base.clone())
            .chain(self.popup_bases.iter().cloned())
            .chain(self.base_classes.values().cloned())
            .chain(self.extra_bases.iter().cloned())
            .collect();
        v.sort();
        v.dedup();
        v
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum ActionKind {
    Tap,
    ScrollAndTap,
    Back,
}

impl ActionKind {
    /// Driver call used for the action.
    pub fn driver_call(self) -> &'static str {
        match self {
            ActionKind::Tap => "waitAndClick",
            ActionKind::ScrollAndTap => "scrollAndClick",
            ActionKind::Back => "back",
        }
    }
}

/// What a method hands back to the caller.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "page")]
pub enum ReturnKind {
    Destination(String),
    /// The page itself (fluent style).
    Owner,
    /// The page that opened this one (popups).
    Previous,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NavMethod {
    pub name: String,
    pub action_kind: ActionKind,
    /// Target page when the originating key had a target segment.
    pub destination: Option<String>,
    pub selector_ref: Option<String>,
    pub returns: ReturnKind,
    pub return_type: String,
    /// Already present in the prior source; not rendered again.
    #[serde(default)]
    pub retained: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Element {
    pub selector_name: String,
    pub key: WidgetKey,
    #[serde(default)]
    pub retained: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PageObjectSpec {
    pub page_id: String,
    pub source_page_file: String,
    pub output_path: String,
    pub package: String,
    pub base_class: String,
    pub popup: bool,
    /// Fully qualified, sorted.
    pub imports: Vec<String>,
    pub elements: Vec<Element>,
    pub methods: Vec<NavMethod>,
    pub is_update: bool,
    /// Prior source for update runs; rendering inserts into it.
    #[serde(skip)]
    pub prior: Option<PriorSource>,
}

impl PageObjectSpec {
    /// Type used for `this` inside the class.
    pub fn self_type(&self) -> String {
        if self.popup {
            format!("{}<P>", self.page_id)
        } else {
            self.page_id.clone()
        }
    }

    pub fn method(&self, name: &str) -> Option<&NavMethod> {
        self.methods.iter().find(|m| m.name == name)
    }
}

/// Strips generic arguments: `AboutAdaptersPage<T>` → `AboutAdaptersPage`.
pub(crate) fn type_head(t: &str) -> &str {
    let t = t.trim();
    t.split('<').next().unwrap_or(t).trim().trim_end_matches('?')
}
