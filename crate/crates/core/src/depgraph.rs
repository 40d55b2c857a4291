//! Source index, import dependency graph and widget-key extraction.
//!
//! Every `.dart` file under the source root becomes a node. Edges follow
//! `import`, `export`, `part` and `part of` directives between files of the
//! tree. Forward reachability gives the set of files that compose a page;
//! reverse reachability maps changed files back onto the pages they affect.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet, VecDeque};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rayon::prelude::*;
use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;
use walkdir::WalkDir;

use crate::dart::{self, DirectiveKind, Token, TokenKind};
use crate::diagnostics::Diagnostic;
use crate::ingest::{normalize_path, FilterRules};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DepGraphError {
    #[error("source root {0} does not exist or is not a directory")]
    BadRoot(String),
    #[error("`{0}` is not a node of the dependency graph")]
    NotInGraph(String),
}

/// Resolution settings for `package:` URIs.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScanConfig {
    /// Package name to directory, relative to the source root.
    #[serde(default)]
    pub packages: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ImportTarget {
    Internal(String),
    /// `dart:` libraries and packages without a configured mapping.
    External,
    /// A path that should be in the tree but is not.
    Unresolved,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Import {
    pub kind: DirectiveKind,
    pub uri: String,
    pub line: usize,
    pub target: ImportTarget,
}

#[derive(Debug, Clone)]
pub struct SourceFile {
    pub imports: Vec<Import>,
    pub text: Arc<str>,
}

#[derive(Debug, Clone, Default)]
pub struct SourceIndex {
    pub root: PathBuf,
    pub files: BTreeMap<String, SourceFile>,
    pub diagnostics: Vec<Diagnostic>,
    /// Each entry is one cycle formed by `part` directives.
    pub part_cycles: Vec<Vec<String>>,
}

impl SourceIndex {
    pub fn len(&self) -> usize {
        self.files.len()
    }

    pub fn is_empty(&self) -> bool {
        self.files.is_empty()
    }

    pub fn text(&self, path: &str) -> Option<&str> {
        self.files.get(path).map(|f| &*f.text)
    }

    /// Builds an index from in-memory sources. Paths are repository-relative.
    pub fn from_sources<I, P, T>(sources: I, cfg: &ScanConfig) -> Self
    where
        I: IntoIterator<Item = (P, T)>,
        P: Into<String>,
        T: Into<Arc<str>>,
    {
        let texts: Vec<(String, Arc<str>)> = sources.into_iter().map(|(p, t)| (p.into(), t.into())).collect();
        assemble(PathBuf::new(), texts, Vec::new(), cfg)
    }
}

/// Walks `root` and indexes every `.dart` file. Files are read and lexed in
/// parallel; unreadable files are skipped with a warning.
pub fn scan_sources(root: &Path, cfg: &ScanConfig) -> Result<SourceIndex, DepGraphError> {
    if !root.is_dir() {
        return Err(DepGraphError::BadRoot(root.display().to_string()));
    }
    let mut diagnostics = Vec::new();
    let mut paths = Vec::new();
    for entry in WalkDir::new(root).sort_by_file_name() {
        match entry {
            Ok(e) if e.file_type().is_file() && e.path().extension().is_some_and(|x| x == "dart") => {
                let rel = e.path().strip_prefix(root).unwrap_or(e.path());
                let rel = rel.to_string_lossy().replace('\\', "/");
                paths.push((rel, e.into_path()));
            }
            Ok(_) => {}
            Err(err) => diagnostics.push(Diagnostic::warning("unreadable-entry", err.to_string())),
        }
    }
    let read: Vec<(String, Result<String, String>)> = paths
        .into_par_iter()
        .map(|(rel, abs)| {
            let r = std::fs::read_to_string(&abs).map_err(|e| e.to_string());
            (rel, r)
        })
        .collect();
    let mut texts = Vec::with_capacity(read.len());
    for (rel, r) in read {
        match r {
            Ok(t) => texts.push((rel, Arc::<str>::from(t))),
            Err(e) => diagnostics.push(Diagnostic::warning("unreadable-file", e).at(rel, None)),
        }
    }
    Ok(assemble(root.to_path_buf(), texts, diagnostics, cfg))
}

fn assemble(
    root: PathBuf,
    texts: Vec<(String, Arc<str>)>,
    mut diagnostics: Vec<Diagnostic>,
    cfg: &ScanConfig,
) -> SourceIndex {
    let known: HashSet<&str> = texts.iter().map(|(p, _)| p.as_str()).collect();
    let lexed: Vec<_> = texts
        .par_iter()
        .map(|(path, text)| {
            let lx = dart::lex(text);
            let imports: Vec<Import> = lx
                .directives
                .into_iter()
                .map(|d| {
                    let target = resolve(path, &d.uri, cfg, &known);
                    Import { kind: d.kind, uri: d.uri, line: d.line, target }
                })
                .collect();
            (imports, lx.problems)
        })
        .collect();
    let mut files = BTreeMap::new();
    for ((path, text), (imports, problems)) in texts.into_iter().zip(lexed) {
        for (line, msg) in problems {
            diagnostics.push(Diagnostic::warning("lex-problem", msg).at(path.clone(), Some(line)));
        }
        for imp in &imports {
            if imp.target == ImportTarget::Unresolved {
                diagnostics.push(
                    Diagnostic::warning("unresolved-import", format!("cannot resolve `{}`", imp.uri))
                        .at(path.clone(), Some(imp.line)),
                );
            }
        }
        files.insert(path, SourceFile { imports, text });
    }
    let part_cycles = find_part_cycles(&files);
    for cycle in &part_cycles {
        diagnostics.push(
            Diagnostic::warning("part-cycle", format!("cyclic part declarations: {}", cycle.join(" -> ")))
                .at(cycle[0].clone(), None),
        );
    }
    SourceIndex { root, files, diagnostics, part_cycles }
}

fn resolve(importer: &str, uri: &str, cfg: &ScanConfig, known: &HashSet<&str>) -> ImportTarget {
    let candidate = if let Some(rest) = uri.strip_prefix("package:") {
        let Some((pkg, sub)) = rest.split_once('/') else {
            return ImportTarget::Unresolved;
        };
        match cfg.packages.get(pkg) {
            Some(dir) if dir.is_empty() || dir == "." => sub.to_string(),
            Some(dir) => format!("{}/{sub}", dir.trim_end_matches('/')),
            None => return ImportTarget::External,
        }
    } else if uri.contains(':') {
        return ImportTarget::External;
    } else {
        match importer.rsplit_once('/') {
            Some((dir, _)) => format!("{dir}/{uri}"),
            None => uri.to_string(),
        }
    };
    match normalize_path(&candidate) {
        Ok(p) if known.contains(p.as_str()) => ImportTarget::Internal(p),
        _ => ImportTarget::Unresolved,
    }
}

// Strongly connected components over `part` edges (not `part of`, which
// mirrors them). Any component with more than one file, or a self-part, is
// a cycle.
fn find_part_cycles(files: &BTreeMap<String, SourceFile>) -> Vec<Vec<String>> {
    let names: Vec<&str> = files.keys().map(String::as_str).collect();
    let idx: HashMap<&str, usize> = names.iter().enumerate().map(|(i, n)| (*n, i)).collect();
    let mut adj = vec![Vec::new(); names.len()];
    let mut any = false;
    for (i, f) in files.values().enumerate() {
        for imp in &f.imports {
            if let (DirectiveKind::Part, ImportTarget::Internal(t)) = (imp.kind, &imp.target) {
                adj[i].push(idx[t.as_str()]);
                any = true;
            }
        }
    }
    if !any {
        return Vec::new();
    }
    let sccs = strongly_connected(&adj);
    let mut out = Vec::new();
    for comp in sccs {
        let cyclic = comp.len() > 1 || adj[comp[0]].contains(&comp[0]);
        if cyclic {
            let mut c: Vec<String> = comp.iter().map(|&i| names[i].to_string()).collect();
            c.sort();
            out.push(c);
        }
    }
    out.sort();
    out
}

// Kosaraju, iterative.
fn strongly_connected(adj: &[Vec<usize>]) -> Vec<Vec<usize>> {
    let n = adj.len();
    let mut order = Vec::with_capacity(n);
    let mut seen = vec![false; n];
    for s in 0..n {
        if seen[s] {
            continue;
        }
        seen[s] = true;
        let mut stack = vec![(s, 0usize)];
        while let Some((v, i)) = stack.pop() {
            if i < adj[v].len() {
                stack.push((v, i + 1));
                let w = adj[v][i];
                if !seen[w] {
                    seen[w] = true;
                    stack.push((w, 0));
                }
            } else {
                order.push(v);
            }
        }
    }
    let mut radj = vec![Vec::new(); n];
    for (v, ws) in adj.iter().enumerate() {
        for &w in ws {
            radj[w].push(v);
        }
    }
    let mut comp_of = vec![usize::MAX; n];
    let mut comps = Vec::new();
    for &s in order.iter().rev() {
        if comp_of[s] != usize::MAX {
            continue;
        }
        let id = comps.len();
        let mut members = vec![s];
        comp_of[s] = id;
        let mut stack = vec![s];
        while let Some(v) = stack.pop() {
            for &w in &radj[v] {
                if comp_of[w] == usize::MAX {
                    comp_of[w] = id;
                    members.push(w);
                    stack.push(w);
                }
            }
        }
        comps.push(members);
    }
    comps
}

/// Directed graph over source files, importer to imported.
#[derive(Debug, Clone, Default)]
pub struct DependencyGraph {
    nodes: Vec<String>,
    index: HashMap<String, usize>,
    forward: Vec<Vec<usize>>,
    reverse: Vec<Vec<usize>>,
}

impl DependencyGraph {
    /// Builds a graph from explicit nodes and edges. Self-edges and edges
    /// touching unknown nodes are dropped.
    pub fn from_edges<N, E>(nodes: N, edges: E) -> Self
    where
        N: IntoIterator<Item = String>,
        E: IntoIterator<Item = (String, String)>,
    {
        let mut nodes: Vec<String> = nodes.into_iter().collect();
        nodes.sort();
        nodes.dedup();
        let index: HashMap<String, usize> = nodes.iter().enumerate().map(|(i, n)| (n.clone(), i)).collect();
        let mut forward = vec![Vec::new(); nodes.len()];
        for (a, b) in edges {
            if let (Some(&i), Some(&j)) = (index.get(&a), index.get(&b)) {
                if i != j {
                    forward[i].push(j);
                }
            }
        }
        let mut reverse = vec![Vec::new(); nodes.len()];
        for (i, succ) in forward.iter_mut().enumerate() {
            succ.sort_unstable();
            succ.dedup();
            for &j in succ.iter() {
                reverse[j].push(i);
            }
        }
        Self { nodes, index, forward, reverse }
    }

    pub fn nodes(&self) -> &[String] {
        &self.nodes
    }

    pub fn contains(&self, path: &str) -> bool {
        self.index.contains_key(path)
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.forward.iter().map(Vec::len).sum()
    }

    pub fn edges(&self) -> impl Iterator<Item = (&str, &str)> + '_ {
        self.forward
            .iter()
            .enumerate()
            .flat_map(move |(i, succ)| succ.iter().map(move |&j| (self.nodes[i].as_str(), self.nodes[j].as_str())))
    }

    pub fn imports_of(&self, path: &str) -> Vec<&str> {
        self.index
            .get(path)
            .map(|&i| self.forward[i].iter().map(|&j| self.nodes[j].as_str()).collect())
            .unwrap_or_default()
    }

    fn reach(&self, starts: &[usize], adj: &[Vec<usize>]) -> Vec<bool> {
        self.reach_until(starts, adj, |_| false)
    }

    // Nodes for which `stop` holds are reached but not expanded.
    fn reach_until(&self, starts: &[usize], adj: &[Vec<usize>], stop: impl Fn(usize) -> bool) -> Vec<bool> {
        let mut seen = vec![false; self.nodes.len()];
        let mut queue = VecDeque::new();
        for &s in starts {
            if !seen[s] {
                seen[s] = true;
                queue.push_back(s);
            }
        }
        while let Some(v) = queue.pop_front() {
            for &w in &adj[v] {
                if !seen[w] {
                    seen[w] = true;
                    if !stop(w) {
                        queue.push_back(w);
                    }
                }
            }
        }
        seen
    }
}

pub fn build_dependency_graph(idx: &SourceIndex) -> DependencyGraph {
    let edges = idx.files.iter().flat_map(|(from, f)| {
        f.imports.iter().filter_map(move |imp| match &imp.target {
            ImportTarget::Internal(to) => Some((from.clone(), to.clone())),
            _ => None,
        })
    });
    DependencyGraph::from_edges(idx.files.keys().cloned(), edges)
}

/// Files forward-reachable from `page_file`, itself included. With `rules`,
/// members rejected by the UI filter are left out of the result (but are
/// still traversed).
pub fn page_closure(
    page_file: &str,
    g: &DependencyGraph,
    rules: Option<&FilterRules>,
) -> Result<BTreeSet<String>, DepGraphError> {
    let &start = g.index.get(page_file).ok_or_else(|| DepGraphError::NotInGraph(page_file.to_string()))?;
    let seen = g.reach(&[start], &g.forward);
    Ok(seen
        .iter()
        .enumerate()
        .filter(|(i, &s)| s && (*i == start || rules.is_none_or(|r| r.accepts(&g.nodes[*i]))))
        .map(|(i, _)| g.nodes[i].clone())
        .collect())
}

/// Page files from which some changed file is reachable. Changed files not
/// in the graph are reported and otherwise ignored.
pub fn affected_pages(
    changed: &[String],
    g: &DependencyGraph,
    page_suffix: &str,
) -> (BTreeSet<String>, Vec<Diagnostic>) {
    let mut diags = Vec::new();
    let mut starts = Vec::new();
    for c in changed {
        match g.index.get(c) {
            Some(&i) => starts.push(i),
            None => diags.push(
                Diagnostic::warning("changed-file-not-indexed", "changed file is not part of the source index")
                    .at(c.clone(), None),
            ),
        }
    }
    let seen = g.reach(&starts, &g.reverse);
    let pages = seen
        .iter()
        .enumerate()
        .filter(|(i, &s)| s && g.nodes[*i].ends_with(page_suffix))
        .map(|(i, _)| g.nodes[i].clone())
        .collect();
    (pages, diags)
}

/// Files composing one screen: forward reachability from `page_file` that
/// neither enters nor includes other page files.
pub fn screen_closure(
    page_file: &str,
    g: &DependencyGraph,
    page_suffix: &str,
    rules: Option<&FilterRules>,
) -> Result<BTreeSet<String>, DepGraphError> {
    let &start = g.index.get(page_file).ok_or_else(|| DepGraphError::NotInGraph(page_file.to_string()))?;
    let is_page = |i: usize| g.nodes[i].ends_with(page_suffix);
    let seen = g.reach_until(&[start], &g.forward, is_page);
    Ok(seen
        .iter()
        .enumerate()
        .filter(|(i, &s)| s && (*i == start || (!is_page(*i) && rules.is_none_or(|r| r.accepts(&g.nodes[*i])))))
        .map(|(i, _)| g.nodes[i].clone())
        .collect())
}

/// Dual of [`screen_closure`]: the page files whose screen closure
/// contains some changed file.
pub fn affected_screens(
    changed: &[String],
    g: &DependencyGraph,
    page_suffix: &str,
) -> (BTreeSet<String>, Vec<Diagnostic>) {
    let mut diags = Vec::new();
    let mut pages = BTreeSet::new();
    let mut starts = Vec::new();
    for c in changed {
        match g.index.get(c) {
            Some(_) if c.ends_with(page_suffix) => {
                pages.insert(c.clone());
            }
            Some(&i) => starts.push(i),
            None => diags.push(
                Diagnostic::warning("changed-file-not-indexed", "changed file is not part of the source index")
                    .at(c.clone(), None),
            ),
        }
    }
    let is_page = |i: usize| g.nodes[i].ends_with(page_suffix);
    let seen = g.reach_until(&starts, &g.reverse, is_page);
    pages.extend(seen.iter().enumerate().filter(|(i, &s)| s && is_page(*i)).map(|(i, _)| g.nodes[i].clone()));
    (pages, diags)
}

/// A structured widget key, `context_identifier[_target]`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct WidgetKey {
    pub raw: String,
    pub context: String,
    pub identifier: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_segment: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_page: Option<String>,
}

impl WidgetKey {
    pub fn reconstruct(&self) -> String {
        match &self.target_segment {
            Some(t) => format!("{}_{}_{}", self.context, self.identifier, t),
            None => format!("{}_{}", self.context, self.identifier),
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("key `{raw}` has {segments} segment(s); expected context_identifier or context_identifier_target")]
pub struct NonConformingKey {
    pub raw: String,
    pub segments: usize,
}

pub fn parse_widget_key(raw: &str) -> Result<WidgetKey, NonConformingKey> {
    let parts: Vec<&str> = raw.split('_').collect();
    let bad = || NonConformingKey { raw: raw.to_string(), segments: parts.len() };
    if parts.iter().any(|p| p.is_empty()) {
        return Err(bad());
    }
    match parts.as_slice() {
        [ctx, id] => Ok(WidgetKey {
            raw: raw.to_string(),
            context: ctx.to_string(),
            identifier: id.to_string(),
            target_segment: None,
            target_page: None,
        }),
        [ctx, id, target] => Ok(WidgetKey {
            raw: raw.to_string(),
            context: ctx.to_string(),
            identifier: id.to_string(),
            target_segment: Some(target.to_string()),
            target_page: Some(segment_to_page_id(target)),
        }),
        _ => Err(bad()),
    }
}

/// `electricMobility` → `ElectricMobilityPage`; segments already ending in
/// "page" (any case) only get capitalised.
pub fn segment_to_page_id(segment: &str) -> String {
    let mut chars = segment.chars();
    let mut out: String = match chars.next() {
        Some(c) => c.to_uppercase().chain(chars).collect(),
        None => String::new(),
    };
    if !out.to_ascii_lowercase().ends_with("page") {
        out.push_str("Page");
    }
    out
}

/// A key occurrence in the source tree.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LocatedKey {
    pub key: WidgetKey,
    pub file: String,
    pub line: usize,
    /// Constructor call the key is passed to, e.g. `ListTile`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub enclosing_widget: Option<String>,
}

#[derive(Debug, Clone, Default)]
pub struct KeyScanOptions {
    /// Also treat any plain string literal matching this pattern as a key.
    pub raw_literal_pattern: Option<Regex>,
}

#[derive(Debug, Clone, Default)]
pub struct KeyExtraction {
    pub keys: Vec<LocatedKey>,
    pub diagnostics: Vec<Diagnostic>,
}

/// Finds key literals in `files` (in the given order). Occurrences are
/// reported individually, so a key used twice appears twice.
pub fn extract_widget_keys(files: &[String], idx: &SourceIndex, opts: &KeyScanOptions) -> KeyExtraction {
    let mut out = KeyExtraction::default();
    for file in files {
        let Some(text) = idx.text(file) else {
            out.diagnostics.push(
                Diagnostic::warning("file-not-indexed", "requested file is not in the source index")
                    .at(file.clone(), None),
            );
            continue;
        };
        let tokens = dart::lex(text).tokens;
        let mut key_positions = HashSet::new();
        for i in 0..tokens.len() {
            let Some(name) = tokens[i].ident() else { continue };
            if name != "ValueKey" && name != "Key" {
                continue;
            }
            let Some(lit) = key_literal_after(&tokens, i + 1) else { continue };
            key_positions.insert(lit);
            let tok = &tokens[lit];
            match &tok.kind {
                TokenKind::Str { interpolated: true, .. } => out.diagnostics.push(
                    Diagnostic::warning("dynamic-key", "interpolated key literal cannot be analysed")
                        .at(file.clone(), Some(tok.line)),
                ),
                TokenKind::Str { value, .. } => {
                    record_key(&mut out, value, file, tok.line, enclosing_call(&tokens, i));
                }
                _ => {}
            }
        }
        if let Some(re) = &opts.raw_literal_pattern {
            for (i, tok) in tokens.iter().enumerate() {
                if key_positions.contains(&i) {
                    continue;
                }
                if let Some(value) = tok.plain_str() {
                    if re.is_match(value) {
                        record_key(&mut out, value, file, tok.line, enclosing_call(&tokens, i));
                    }
                }
            }
        }
    }
    out
}

fn record_key(out: &mut KeyExtraction, raw: &str, file: &str, line: usize, enclosing: Option<String>) {
    match parse_widget_key(raw) {
        Ok(key) => out.keys.push(LocatedKey { key, file: file.to_string(), line, enclosing_widget: enclosing }),
        Err(e) => out
            .diagnostics
            .push(Diagnostic::warning("non-conforming-key", e.to_string()).at(file.to_string(), Some(line))),
    }
}

// After `ValueKey`/`Key`: optional `<...>` type arguments, `(`, string.
fn key_literal_after(tokens: &[Token], mut i: usize) -> Option<usize> {
    if tokens.get(i)?.is_punct('<') {
        let mut depth = 0usize;
        loop {
            let t = tokens.get(i)?;
            if t.is_punct('<') {
                depth += 1;
            } else if t.is_punct('>') {
                depth -= 1;
                if depth == 0 {
                    i += 1;
                    break;
                }
            }
            i += 1;
        }
    }
    if !tokens.get(i)?.is_punct('(') {
        return None;
    }
    matches!(tokens.get(i + 1)?.kind, TokenKind::Str { .. }).then_some(i + 1)
}

fn enclosing_call(tokens: &[Token], at: usize) -> Option<String> {
    let mut depth = 0usize;
    let lower = at.saturating_sub(400);
    for j in (lower..at).rev() {
        let t = &tokens[j];
        if t.is_punct(')') {
            depth += 1;
        } else if t.is_punct('(') {
            if depth == 0 {
                let name = tokens.get(j.checked_sub(1)?)?.ident()?;
                return name.chars().next().is_some_and(char::is_uppercase).then(|| name.to_string());
            }
            depth -= 1;
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    fn index(files: &[(&str, &str)]) -> SourceIndex {
        let cfg = ScanConfig { packages: [("app".to_string(), "lib".to_string())].into_iter().collect() };
        SourceIndex::from_sources(files.iter().map(|(p, t)| (p.to_string(), t.to_string())), &cfg)
    }

    #[test]
    fn chain_closure() {
        let idx = index(&[
            ("lib/a.dart", "import 'b.dart';"),
            ("lib/b.dart", "import 'package:app/c.dart';"),
            ("lib/c.dart", "import 'package:flutter/material.dart'; import 'dart:io';"),
        ]);
        let g = build_dependency_graph(&idx);
        let edges: Vec<_> = g.edges().collect();
        assert_eq!(edges, vec![("lib/a.dart", "lib/b.dart"), ("lib/b.dart", "lib/c.dart")]);
        let c = page_closure("lib/a.dart", &g, None).unwrap();
        assert_eq!(c.len(), 3);
        assert!(idx.diagnostics.is_empty());
    }

    #[test]
    fn screen_closure_stops_at_pages() {
        let g = DependencyGraph::from_edges(
            ["a_page.dart", "b_page.dart", "w.dart", "shared.dart"].map(String::from),
            [
                ("a_page.dart", "w.dart"),
                ("a_page.dart", "b_page.dart"),
                ("b_page.dart", "shared.dart"),
                ("w.dart", "shared.dart"),
            ]
            .map(|(a, b)| (a.to_string(), b.to_string())),
        );
        let a = screen_closure("a_page.dart", &g, "_page.dart", None).unwrap();
        assert_eq!(a.into_iter().collect::<Vec<_>>(), vec!["a_page.dart", "shared.dart", "w.dart"]);
        let (hit, _) = affected_screens(&["shared.dart".into()], &g, "_page.dart");
        assert_eq!(hit.len(), 2);
        let (hit, _) = affected_screens(&["b_page.dart".into()], &g, "_page.dart");
        assert_eq!(hit.into_iter().collect::<Vec<_>>(), vec!["b_page.dart"]);
        let (wide, _) = affected_pages(&["b_page.dart".into()], &g, "_page.dart");
        assert_eq!(wide.len(), 2);
    }

    #[test]
    fn unresolved_import_recorded() {
        let idx = index(&[("lib/a.dart", "import 'missing.dart';\nimport 'package:app/gone.dart';")]);
        let imports = &idx.files["lib/a.dart"].imports;
        assert!(imports.iter().all(|i| i.target == ImportTarget::Unresolved));
        assert_eq!(idx.diagnostics.len(), 2);
        assert_eq!(idx.diagnostics[0].code, "unresolved-import");
        assert_eq!(idx.diagnostics[1].line, Some(2));
        assert_eq!(build_dependency_graph(&idx).edge_count(), 0);
    }

    #[test]
    fn relative_parent_and_self_import() {
        let idx = index(&[("lib/x/a_page.dart", "import '../w/b.dart'; import 'a_page.dart';"), ("lib/w/b.dart", "")]);
        let g = build_dependency_graph(&idx);
        assert_eq!(g.edges().collect::<Vec<_>>(), vec![("lib/x/a_page.dart", "lib/w/b.dart")]);
    }

    #[test]
    fn part_cycle_reported() {
        let idx = index(&[
            ("lib/a.dart", "part 'b.dart';"),
            ("lib/b.dart", "part of 'a.dart'; part 'a.dart';"),
            ("lib/c.dart", "part 'd.dart';"),
            ("lib/d.dart", "part of 'c.dart';"),
        ]);
        assert_eq!(idx.part_cycles, vec![vec!["lib/a.dart".to_string(), "lib/b.dart".to_string()]]);
        assert!(idx.diagnostics.iter().any(|d| d.code == "part-cycle"));
        let g = build_dependency_graph(&idx);
        assert!(page_closure("lib/c.dart", &g, None).unwrap().contains("lib/d.dart"));
    }

    #[test]
    fn page_importing_nothing() {
        let idx = index(&[("lib/p_page.dart", "class P {}")]);
        let g = build_dependency_graph(&idx);
        let c = page_closure("lib/p_page.dart", &g, None).unwrap();
        assert_eq!(c.into_iter().collect::<Vec<_>>(), vec!["lib/p_page.dart"]);
        assert_eq!(page_closure("lib/nope.dart", &g, None), Err(DepGraphError::NotInGraph("lib/nope.dart".into())));
    }

    #[test]
    fn closure_restricted_by_rules() {
        let idx = index(&[
            ("lib/p_page.dart", "import 'utils/h.dart'; import 'w.dart';"),
            ("lib/utils/h.dart", "import '../x.dart';"),
            ("lib/w.dart", ""),
            ("lib/x.dart", ""),
        ]);
        let g = build_dependency_graph(&idx);
        let c = page_closure("lib/p_page.dart", &g, Some(&FilterRules::default())).unwrap();
        assert_eq!(c.into_iter().collect::<Vec<_>>(), vec!["lib/p_page.dart", "lib/w.dart", "lib/x.dart"]);
    }

    #[test]
    fn affected_direct_import() {
        let idx = index(&[
            ("lib/p1_page.dart", "import 'w.dart';"),
            ("lib/p2_page.dart", "import 'v.dart';"),
            ("lib/w.dart", ""),
            ("lib/v.dart", ""),
        ]);
        let g = build_dependency_graph(&idx);
        let (pages, diags) = affected_pages(&["lib/w.dart".into()], &g, "_page.dart");
        assert_eq!(pages.into_iter().collect::<Vec<_>>(), vec!["lib/p1_page.dart"]);
        assert!(diags.is_empty());
        let (pages, _) = affected_pages(&[], &g, "_page.dart");
        assert!(pages.is_empty());
        let (pages, diags) = affected_pages(&["lib/p2_page.dart".into(), "lib/gone.dart".into()], &g, "_page.dart");
        assert_eq!(pages.into_iter().collect::<Vec<_>>(), vec!["lib/p2_page.dart"]);
        assert_eq!(diags.len(), 1);
    }

    #[test]
    fn key_grammar() {
        let k = parse_widget_key("vehicleTab_charging_electricMobility").unwrap();
        assert_eq!(k.context, "vehicleTab");
        assert_eq!(k.identifier, "charging");
        assert_eq!(k.target_page.as_deref(), Some("ElectricMobilityPage"));
        let k = parse_widget_key("profile_saveButton").unwrap();
        assert_eq!((k.context.as_str(), k.identifier.as_str()), ("profile", "saveButton"));
        assert!(k.target_page.is_none());
        assert_eq!(parse_widget_key("a_b_c_d").unwrap_err().segments, 4);
        assert!(parse_widget_key("single").is_err());
        assert!(parse_widget_key("a__b").is_err());
        assert_eq!(segment_to_page_id("settingsPage"), "SettingsPage");
        assert_eq!(segment_to_page_id("homepage"), "Homepage");
    }

    #[test]
    fn key_extraction_positions() {
        let src = r#"
            import 'package:flutter/material.dart';
            class P extends StatelessWidget {
              Widget build(BuildContext c) => Column(children: [
                ListTile(key: const ValueKey<String>('addAdapter_selectAdapter_aboutAdapters')),
                ElevatedButton(key: Key("addAdapter_save"), onPressed: () {}),
                Text('not_a_key_but_matches_nothing'),
                Container(key: ValueKey('a_b_c_d')),
                Container(key: ValueKey('dyn_${id}')),
                // ValueKey('commented_out')
              ]);
            }
        "#;
        let idx = index(&[("lib/p_page.dart", src)]);
        let ex = extract_widget_keys(&["lib/p_page.dart".into()], &idx, &KeyScanOptions::default());
        let raws: Vec<_> = ex.keys.iter().map(|k| k.key.raw.as_str()).collect();
        assert_eq!(raws, vec!["addAdapter_selectAdapter_aboutAdapters", "addAdapter_save"]);
        assert_eq!(ex.keys[0].enclosing_widget.as_deref(), Some("ListTile"));
        assert_eq!(ex.keys[1].enclosing_widget.as_deref(), Some("ElevatedButton"));
        assert_eq!(ex.keys[0].line, 5);
        let codes: Vec<_> = ex.diagnostics.iter().map(|d| d.code.as_str()).collect();
        assert_eq!(codes, vec!["non-conforming-key", "dynamic-key"]);
    }

    #[test]
    fn raw_literal_mode() {
        let src = "const k = 'home_open_settings'; const other = 'hello world';";
        let idx = index(&[("lib/a.dart", src)]);
        let opts = KeyScanOptions {
            raw_literal_pattern: Some(Regex::new(r"^[a-z][A-Za-z0-9]*_[A-Za-z0-9]+(_[A-Za-z0-9]+)?$").unwrap()),
        };
        let ex = extract_widget_keys(&["lib/a.dart".into()], &idx, &opts);
        assert_eq!(ex.keys.len(), 1);
        assert_eq!(ex.keys[0].key.target_page.as_deref(), Some("SettingsPage"));
    }

    #[test]
    fn scan_empty_and_missing_root() {
        let dir = tempfile::tempdir().unwrap();
        let idx = scan_sources(dir.path(), &ScanConfig::default()).unwrap();
        assert!(idx.is_empty());
        assert!(scan_sources(&dir.path().join("nope"), &ScanConfig::default()).is_err());
    }

    use proptest::prelude::*;

    proptest! {
        #[test]
        fn key_round_trip(
            ctx in "[a-z][A-Za-z0-9]{0,8}",
            id in "[a-z][A-Za-z0-9]{0,8}",
            target in proptest::option::of("[a-z][A-Za-z0-9]{0,8}"),
        ) {
            let raw = match &target {
                Some(t) => format!("{ctx}_{id}_{t}"),
                None => format!("{ctx}_{id}"),
            };
            let k = parse_widget_key(&raw).unwrap();
            prop_assert_eq!(k.reconstruct(), raw);
            prop_assert!(!k.context.contains('_'));
            prop_assert_eq!(k.target_page.is_some(), target.is_some());
        }
    }
}
