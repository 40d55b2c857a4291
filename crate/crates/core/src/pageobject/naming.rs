use std::sync::OnceLock;

use regex::Regex;

use super::{PageObjectConfig, PageObjectError};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PageIdentity {
    pub page_id: String,
    /// `test_root/mirrored/dirs/PageId.ext`, forward slashes.
    pub output_path: String,
    pub package: String,
    pub mirrored_dir: String,
}

fn id_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"^([A-Z][a-z0-9]*)+$").unwrap())
}

/// Maps a page file to its page-object identity.
pub fn page_identity(dart_path: &str, cfg: &PageObjectConfig) -> Result<PageIdentity, PageObjectError> {
    let bad = || PageObjectError::NonConformingName { path: dart_path.to_string(), suffix: cfg.page_suffix.clone() };
    let (dir, file) = match dart_path.rsplit_once('/') {
        Some((d, f)) => (d, f),
        None => ("", dart_path),
    };
    let suffix_stem = cfg.page_suffix.trim_end_matches(".dart");
    let stem = file.strip_suffix(".dart").ok_or_else(bad)?;
    if !file.ends_with(&cfg.page_suffix) {
        return Err(bad());
    }
    let segments: Vec<&str> = stem.split('_').collect();
    let conforming = segments.iter().all(|s| {
        let mut cs = s.chars();
        cs.next().is_some_and(|c| c.is_ascii_lowercase()) && cs.all(|c| c.is_ascii_lowercase() || c.is_ascii_digit())
    });
    if !conforming || stem.len() <= suffix_stem.len() {
        return Err(bad());
    }
    let page_id: String = segments.iter().map(|s| capitalize(s)).collect();

    let strip = cfg.mirror_strip_prefix.trim_matches('/');
    let mirrored = if strip.is_empty() {
        dir
    } else if dir == strip {
        ""
    } else {
        dir.strip_prefix(&format!("{strip}/")).unwrap_or(dir)
    };
    let root = cfg.test_root.trim_end_matches('/');
    let mut output_path = String::new();
    for part in [root, mirrored] {
        if !part.is_empty() {
            output_path.push_str(part);
            output_path.push('/');
        }
    }
    output_path.push_str(&page_id);
    output_path.push('.');
    output_path.push_str(&cfg.extension);

    let mut package = cfg.package_prefix.clone();
    for d in mirrored.split('/').filter(|d| !d.is_empty()) {
        let clean: String = d.chars().filter(char::is_ascii_alphanumeric).collect::<String>().to_lowercase();
        if !clean.is_empty() {
            if !package.is_empty() {
                package.push('.');
            }
            package.push_str(&clean);
        }
    }
    Ok(PageIdentity { page_id, output_path, package, mirrored_dir: mirrored.to_string() })
}

/// Inverse of the page-id rule: `AddAdapterPage` → `add_adapter_page.dart`.
/// Returns `None` for ids outside the convention.
pub fn page_file_name(page_id: &str) -> Option<String> {
    if !id_re().is_match(page_id) || !page_id.ends_with("Page") || page_id == "Page" {
        return None;
    }
    let mut out = String::new();
    for (i, c) in page_id.char_indices() {
        if c.is_ascii_uppercase() {
            if i > 0 {
                out.push('_');
            }
            out.push(c.to_ascii_lowercase());
        } else {
            out.push(c);
        }
    }
    out.push_str(".dart");
    Some(out)
}

fn capitalize(s: &str) -> String {
    let mut cs = s.chars();
    match cs.next() {
        Some(c) => c.to_uppercase().chain(cs).collect(),
        None => String::new(),
    }
}
