//! Minimal placeholder templates.
//!
//! A template file is split into named sections by marker lines of the form
//! `=== name ===`. Inside a section, `{{name}}` is replaced by the bound
//! value. Rendering fails on any placeholder without a binding, so a
//! project override cannot silently drop content.

use std::collections::BTreeMap;
use std::path::Path;

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TemplateError {
    #[error("template `{template}`: placeholder `{{{{{placeholder}}}}}` is unbound in section `{section}`")]
    Unbound { template: String, section: String, placeholder: String },
    #[error("template `{template}`: missing section `{section}`")]
    MissingSection { template: String, section: String },
    #[error("template `{template}`: unterminated placeholder in section `{section}`")]
    Unterminated { template: String, section: String },
    #[error("cannot read template {path}: {message}")]
    Io { path: String, message: String },
}

/// A parsed template set.
#[derive(Debug, Clone)]
pub struct Template {
    id: String,
    sections: BTreeMap<String, String>,
}

/// Placeholder bindings for one section render.
pub type Vars<'a> = BTreeMap<&'a str, String>;

impl Template {
    /// Parses template text. Text before the first marker is ignored, which
    /// leaves room for a header comment in shipped template files.
    pub fn parse(id: impl Into<String>, text: &str) -> Self {
        let mut sections = BTreeMap::new();
        let mut current: Option<(String, String)> = None;
        for line in text.split_inclusive('\n') {
            let trimmed = line.trim_end_matches(['\n', '\r']);
            if let Some(name) = section_marker(trimmed) {
                if let Some((n, body)) = current.take() {
                    sections.insert(n, finish_body(body));
                }
                current = Some((name.to_string(), String::new()));
            } else if let Some((_, body)) = current.as_mut() {
                body.push_str(line);
            }
        }
        if let Some((n, body)) = current.take() {
            sections.insert(n, finish_body(body));
        }
        Self { id: id.into(), sections }
    }

    pub fn load(path: &Path) -> Result<Self, TemplateError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| TemplateError::Io { path: path.display().to_string(), message: e.to_string() })?;
        let id = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
        Ok(Self::parse(id, &text))
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn has_section(&self, name: &str) -> bool {
        self.sections.contains_key(name)
    }

    /// Checks that every named section exists.
    pub fn require(&self, names: &[&str]) -> Result<(), TemplateError> {
        for name in names {
            if !self.has_section(name) {
                return Err(TemplateError::MissingSection { template: self.id.clone(), section: (*name).to_string() });
            }
        }
        Ok(())
    }

    pub fn render(&self, section: &str, vars: &Vars<'_>) -> Result<String, TemplateError> {
        let body = self
            .sections
            .get(section)
            .ok_or_else(|| TemplateError::MissingSection { template: self.id.clone(), section: section.to_string() })?;
        let mut out = String::with_capacity(body.len());
        let mut rest = body.as_str();
        while let Some(start) = rest.find("{{") {
            out.push_str(&rest[..start]);
            let after = &rest[start + 2..];
            let end = after.find("}}").ok_or_else(|| TemplateError::Unterminated {
                template: self.id.clone(),
                section: section.to_string(),
            })?;
            let name = after[..end].trim();
            match vars.get(name) {
                Some(v) => out.push_str(v),
                None => {
                    return Err(TemplateError::Unbound {
                        template: self.id.clone(),
                        section: section.to_string(),
                        placeholder: name.to_string(),
                    })
                }
            }
            rest = &after[end + 2..];
        }
        out.push_str(rest);
        Ok(out)
    }
}

fn section_marker(line: &str) -> Option<&str> {
    let inner = line.strip_prefix("=== ")?.strip_suffix(" ===")?;
    let inner = inner.trim();
    (!inner.is_empty()).then_some(inner)
}

// The newline that precedes the next marker belongs to the marker line, so
// sections keep exactly the text between markers minus that one newline.
fn finish_body(mut body: String) -> String {
    if body.ends_with('\n') {
        body.pop();
        if body.ends_with('\r') {
            body.pop();
        }
    }
    body
}
