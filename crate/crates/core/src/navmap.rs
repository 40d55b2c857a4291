//! Application-wide navigation multigraph and path discovery.
//!
//! Nodes are page ids, edges are navigation methods. Parallel edges between
//! the same pair model alternative flows and are kept as long as their
//! action names differ. [`find_paths`] enumerates simple paths from an
//! entry page up to a depth limit and ranks them by length, then by the
//! sequence of action names.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt::Write as _;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::diagnostics::Diagnostic;
use crate::pageobject::PageObjectSpec;

pub const DEFAULT_DEPTH_LIMIT: usize = 10;
pub const DEFAULT_PER_TARGET_CAP: usize = 5;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum NavMapError {
    #[error("entry page `{0}` is not in the navigation map")]
    UnknownEntry(String),
    #[error("depth limit must be at least 1")]
    ZeroDepth,
    #[error("{format} line {line}: {message}")]
    Parse { format: &'static str, line: usize, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeKind {
    Page,
    /// Referenced as a destination but without a page object of its own.
    External,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct NavEdge {
    pub from: String,
    pub to: String,
    pub action: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct NavigationMap {
    nodes: BTreeMap<String, NodeKind>,
    edges: Vec<NavEdge>,
    out: BTreeMap<String, Vec<usize>>,
}

impl NavigationMap {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a node; a page declaration upgrades an external one.
    pub fn add_node(&mut self, id: &str, kind: NodeKind) {
        let slot = self.nodes.entry(id.to_string()).or_insert(kind);
        if kind == NodeKind::Page {
            *slot = NodeKind::Page;
        }
    }

    /// Adds an edge, creating missing endpoints as external nodes. Returns
    /// `false` when the same (from, to, action) edge already exists.
    pub fn add_edge(&mut self, from: &str, to: &str, action: &str) -> bool {
        let exists = self
            .out
            .get(from)
            .is_some_and(|ix| ix.iter().any(|&i| self.edges[i].to == to && self.edges[i].action == action));
        if exists {
            return false;
        }
        self.nodes.entry(from.to_string()).or_insert(NodeKind::External);
        self.nodes.entry(to.to_string()).or_insert(NodeKind::External);
        let idx = self.edges.len();
        self.edges.push(NavEdge { from: from.into(), to: to.into(), action: action.into() });
        let edges = &self.edges;
        let list = self.out.entry(from.to_string()).or_default();
        let pos = list
            .binary_search_by(|&i| (&edges[i].action, &edges[i].to).cmp(&(&edges[idx].action, &edges[idx].to)))
            .unwrap_or_else(|p| p);
        list.insert(pos, idx);
        true
    }

    pub fn nodes(&self) -> impl Iterator<Item = (&str, NodeKind)> {
        self.nodes.iter().map(|(k, v)| (k.as_str(), *v))
    }

    pub fn contains(&self, id: &str) -> bool {
        self.nodes.contains_key(id)
    }

    pub fn kind(&self, id: &str) -> Option<NodeKind> {
        self.nodes.get(id).copied()
    }

    pub fn edges(&self) -> &[NavEdge] {
        &self.edges
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Outgoing edges ordered by action name, then destination.
    pub fn out_edges<'a>(&'a self, from: &str) -> impl Iterator<Item = &'a NavEdge> + 'a {
        self.out.get(from).into_iter().flatten().map(|&i| &self.edges[i])
    }

    pub fn edge(&self, from: &str, action: &str, to: &str) -> Option<&NavEdge> {
        self.out_edges(from).find(|e| e.action == action && e.to == to)
    }
}

/// One node per spec, one edge per method with a destination. Destinations
/// without a spec become external nodes and are reported.
pub fn build_navigation_map(specs: &[PageObjectSpec]) -> (NavigationMap, Vec<Diagnostic>) {
    let mut map = NavigationMap::new();
    for s in specs {
        map.add_node(&s.page_id, NodeKind::Page);
    }
    let mut diags = Vec::new();
    let mut reported = BTreeSet::new();
    for s in specs {
        for m in &s.methods {
            let Some(dest) = &m.destination else { continue };
            map.add_edge(&s.page_id, dest, &m.name);
            if map.kind(dest) == Some(NodeKind::External) && reported.insert(dest.clone()) {
                diags.push(
                    Diagnostic::info(
                        "dangling-destination",
                        format!("`{dest}` is a navigation target of {}.{} but has no page object", s.page_id, m.name),
                    )
                    .at(&s.output_path, None),
                );
            }
        }
    }
    (map, diags)
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Step {
    pub page: String,
    pub action: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NavigationPath {
    pub steps: Vec<Step>,
    pub terminal: String,
}

impl NavigationPath {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn entry(&self) -> &str {
        self.steps.first().map_or(&self.terminal, |s| &s.page)
    }

    pub fn actions(&self) -> Vec<&str> {
        self.steps.iter().map(|s| s.action.as_str()).collect()
    }

    /// Every page visited, entry first, terminal last.
    pub fn pages(&self) -> Vec<&str> {
        self.steps.iter().map(|s| s.page.as_str()).chain(std::iter::once(self.terminal.as_str())).collect()
    }

    /// Checks that every step is an edge of `map` and that the steps chain.
    pub fn replays_on(&self, map: &NavigationMap) -> bool {
        let pages = self.pages();
        self.steps.iter().enumerate().all(|(i, s)| map.edge(&s.page, &s.action, pages[i + 1]).is_some())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PathQuery {
    pub depth_limit: usize,
    /// Maximum paths kept per target; `None` keeps all.
    pub per_target_cap: Option<usize>,
}

impl Default for PathQuery {
    fn default() -> Self {
        Self { depth_limit: DEFAULT_DEPTH_LIMIT, per_target_cap: Some(DEFAULT_PER_TARGET_CAP) }
    }
}

#[derive(Debug, Clone, Default)]
pub struct PathSearch {
    pub paths: Vec<NavigationPath>,
    pub diagnostics: Vec<Diagnostic>,
}

fn rank(p: &NavigationPath) -> (usize, Vec<&str>, Vec<&str>) {
    (p.len(), p.actions(), p.pages())
}

/// Enumerates simple paths from `entry` to any of `targets` no longer than
/// the depth limit, ordered by length and then by action sequence.
pub fn find_paths(
    map: &NavigationMap,
    entry: &str,
    targets: &BTreeSet<String>,
    query: PathQuery,
) -> Result<PathSearch, NavMapError> {
    if !map.contains(entry) {
        return Err(NavMapError::UnknownEntry(entry.to_string()));
    }
    if query.depth_limit == 0 {
        return Err(NavMapError::ZeroDepth);
    }
    let ids: Vec<&str> = map.nodes.keys().map(String::as_str).collect();
    let index: BTreeMap<&str, usize> = ids.iter().enumerate().map(|(i, id)| (*id, i)).collect();
    let adj: Vec<Vec<(usize, &str)>> =
        ids.iter().map(|id| map.out_edges(id).map(|e| (index[e.to.as_str()], e.action.as_str())).collect()).collect();
    let is_target: Vec<bool> = ids.iter().map(|id| targets.contains(*id)).collect();

    // Distance to the nearest target, ignoring simplicity, bounds the search.
    let mut dist = vec![usize::MAX; ids.len()];
    let mut rev: Vec<Vec<usize>> = vec![Vec::new(); ids.len()];
    for (u, outs) in adj.iter().enumerate() {
        for &(v, _) in outs {
            rev[v].push(u);
        }
    }
    let mut queue = VecDeque::new();
    for (i, t) in is_target.iter().enumerate() {
        if *t {
            dist[i] = 0;
            queue.push_back(i);
        }
    }
    while let Some(v) = queue.pop_front() {
        for &u in &rev[v] {
            if dist[u] == usize::MAX {
                dist[u] = dist[v] + 1;
                queue.push_back(u);
            }
        }
    }

    let start = index[entry];
    let mut found: Vec<NavigationPath> = Vec::new();
    let mut visited = vec![false; ids.len()];
    let mut trail: Vec<(usize, &str)> = Vec::new();
    visited[start] = true;
    walk(start, query.depth_limit, &adj, &dist, &is_target, &mut visited, &mut trail, &mut |trail, end| {
        found.push(NavigationPath {
            steps: trail.iter().map(|(p, a)| Step { page: ids[*p].to_string(), action: a.to_string() }).collect(),
            terminal: ids[end].to_string(),
        });
    });
    found.sort_by(|a, b| rank(a).cmp(&rank(b)));

    if let Some(cap) = query.per_target_cap {
        let mut kept: BTreeMap<String, usize> = BTreeMap::new();
        found.retain(|p| {
            let n = kept.entry(p.terminal.clone()).or_default();
            *n += 1;
            *n <= cap
        });
    }

    let mut diagnostics = Vec::new();
    for t in targets {
        if !found.iter().any(|p| &p.terminal == t) {
            let why = if map.contains(t) {
                format!("no path from `{entry}` to `{t}` within {} steps", query.depth_limit)
            } else {
                format!("target `{t}` is not in the navigation map")
            };
            diagnostics.push(Diagnostic::warning("unreachable-target", why));
        }
    }
    Ok(PathSearch { paths: found, diagnostics })
}

#[allow(clippy::too_many_arguments)]
fn walk<'a>(
    node: usize,
    budget: usize,
    adj: &[Vec<(usize, &'a str)>],
    dist: &[usize],
    is_target: &[bool],
    visited: &mut [bool],
    trail: &mut Vec<(usize, &'a str)>,
    emit: &mut impl FnMut(&[(usize, &'a str)], usize),
) {
    if is_target[node] {
        emit(trail, node);
    }
    if budget == 0 {
        return;
    }
    for &(next, action) in &adj[node] {
        if visited[next] || dist[next] >= budget {
            continue;
        }
        visited[next] = true;
        trail.push((node, action));
        walk(next, budget - 1, adj, dist, is_target, visited, trail, emit);
        trail.pop();
        visited[next] = false;
    }
}

/// Reachability hygiene: unreachable pages, external nodes and action names
/// used for more than one edge out of the same page.
pub fn validate_map(map: &NavigationMap, entry: &str) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let mut seen: BTreeSet<&str> = BTreeSet::new();
    if map.contains(entry) {
        let mut queue = VecDeque::from([entry]);
        seen.insert(entry);
        while let Some(n) = queue.pop_front() {
            for e in map.out_edges(n) {
                if seen.insert(e.to.as_str()) {
                    queue.push_back(e.to.as_str());
                }
            }
        }
    } else {
        out.push(Diagnostic::error("unknown-entry", format!("entry page `{entry}` is not in the map")));
    }
    for (id, kind) in map.nodes() {
        match kind {
            NodeKind::External => {
                out.push(Diagnostic::warning("external-node", format!("`{id}` has no page object")));
            }
            NodeKind::Page if !seen.contains(id) => {
                out.push(Diagnostic::warning("unreachable-node", format!("`{id}` is not reachable from `{entry}`")));
            }
            NodeKind::Page => {}
        }
    }
    for (from, idx) in &map.out {
        let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
        for &i in idx {
            *counts.entry(map.edges[i].action.as_str()).or_default() += 1;
        }
        for (action, n) in counts.into_iter().filter(|(_, n)| *n > 1) {
            out.push(Diagnostic::warning("duplicate-action", format!("`{from}.{action}` labels {n} edges")));
        }
    }
    out
}

/// Arrow listing of ranked paths, numbered from 1.
pub fn render_paths(paths: &[NavigationPath]) -> String {
    let mut out = String::new();
    for (i, p) in paths.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        let _ = writeln!(out, "Path {}:", i + 1);
        let _ = writeln!(out, "  {}", p.entry());
        let pages = p.pages();
        for (j, s) in p.steps.iter().enumerate() {
            let _ = writeln!(out, "  -> {} (via {})", pages[j + 1], s.action);
        }
    }
    out
}

const EDGE_LIST_HEADER: &str = "# navmap v1";

/// Line-oriented interchange format: `node <id> [external]` and
/// `edge <from> <to> <action>` records.
pub fn to_edge_list(map: &NavigationMap) -> String {
    let mut out = format!("{EDGE_LIST_HEADER}\n");
    for (id, kind) in map.nodes() {
        match kind {
            NodeKind::Page => {
                let _ = writeln!(out, "node {id}");
            }
            NodeKind::External => {
                let _ = writeln!(out, "node {id} external");
            }
        }
    }
    for e in &map.edges {
        let _ = writeln!(out, "edge {} {} {}", e.from, e.to, e.action);
    }
    out
}

pub fn from_edge_list(text: &str) -> Result<NavigationMap, NavMapError> {
    let err = |line: usize, message: String| NavMapError::Parse { format: "edge list", line, message };
    let mut map = NavigationMap::new();
    let mut pending = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        match fields.as_slice() {
            ["node", id] => map.add_node(id, NodeKind::Page),
            ["node", id, "external"] => map.add_node(id, NodeKind::External),
            ["edge", from, to, action] => pending.push((i + 1, *from, *to, *action)),
            _ => return Err(err(i + 1, format!("unrecognised record `{line}`"))),
        }
    }
    for (line, from, to, action) in pending {
        if !map.contains(from) || !map.contains(to) {
            return Err(err(line, format!("edge {from} -> {to} references an undeclared node")));
        }
        map.add_edge(from, to, action);
    }
    Ok(map)
}

fn dot_escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

pub fn to_dot(map: &NavigationMap) -> String {
    let mut out = String::from("digraph navmap {\n");
    for (id, kind) in map.nodes() {
        match kind {
            NodeKind::Page => {
                let _ = writeln!(out, "  \"{}\";", dot_escape(id));
            }
            NodeKind::External => {
                let _ = writeln!(out, "  \"{}\" [style=dashed];", dot_escape(id));
            }
        }
    }
    for e in &map.edges {
        let _ = writeln!(
            out,
            "  \"{}\" -> \"{}\" [label=\"{}\"];",
            dot_escape(&e.from),
            dot_escape(&e.to),
            dot_escape(&e.action)
        );
    }
    out.push_str("}\n");
    out
}

const Q: &str = r#""((?:[^"\\]|\\.)*)""#;

fn dot_node_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(&format!(r"^{Q}\s*(\[[^\]]*\])?\s*;?$")).unwrap())
}

fn dot_edge_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(&format!(r#"^{Q}\s*->\s*{Q}\s*\[\s*label\s*=\s*{Q}\s*\]\s*;?$"#)).unwrap())
}

fn dot_unescape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    let mut chars = s.chars();
    while let Some(c) = chars.next() {
        if c == '\\' {
            if let Some(n) = chars.next() {
                out.push(n);
            }
        } else {
            out.push(c);
        }
    }
    out
}

/// Reads back the subset of DOT written by [`to_dot`].
pub fn from_dot(text: &str) -> Result<NavigationMap, NavMapError> {
    let err = |line: usize, message: String| NavMapError::Parse { format: "dot", line, message };
    let mut map = NavigationMap::new();
    let mut opened = false;
    let mut closed = false;
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with("//") {
            continue;
        }
        if !opened {
            if line.starts_with("digraph") && line.ends_with('{') {
                opened = true;
                continue;
            }
            return Err(err(i + 1, "expected `digraph <name> {`".into()));
        }
        if line == "}" {
            closed = true;
            continue;
        }
        if closed {
            return Err(err(i + 1, "content after closing brace".into()));
        }
        if let Some(c) = dot_edge_re().captures(line) {
            map.add_edge(&dot_unescape(&c[1]), &dot_unescape(&c[2]), &dot_unescape(&c[3]));
        } else if let Some(c) = dot_node_re().captures(line) {
            let external = c.get(2).is_some_and(|a| a.as_str().contains("dashed"));
            map.add_node(&dot_unescape(&c[1]), if external { NodeKind::External } else { NodeKind::Page });
        } else {
            return Err(err(i + 1, format!("unrecognised statement `{line}`")));
        }
    }
    if !closed {
        return Err(err(text.lines().count(), "missing closing brace".into()));
    }
    Ok(map)
}
