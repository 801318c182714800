//! Ownership graphs and target expansion.
//!
//! Line-oriented UTF-8, one record per line, fields separated by a single
//! tab (shown as `→` here):
//!
//! ```text
//! # comment
//! node→<entity_id>→<name>→<domain>|<domain>...→<alias>|<alias>...
//! edge→<parent_id>→<child_id>→<kind>
//! ```
//!
//! The domain and alias columns may be empty or omitted. Records may appear
//! in any order; edge endpoints are checked once the whole file is read.
//! Cycles are allowed.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use boycott_core::normalize_domain;
use serde::Serialize;

/// Edge kinds followed when none are given.
pub const DEFAULT_EDGE_KINDS: [&str; 2] = ["subsidiary", "brand"];

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Entity {
    pub id: String,
    pub name: String,
    pub domains: BTreeSet<String>,
    pub aliases: BTreeSet<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Edge {
    pub parent: String,
    pub child: String,
    pub kind: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct OwnershipGraph {
    nodes: BTreeMap<String, Entity>,
    /// Outgoing edges per parent, in file order.
    out: BTreeMap<String, Vec<Edge>>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GraphError {
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("line {line}: duplicate entity {id:?}")]
    DuplicateEntity { line: usize, id: String },
    #[error("line {line}: edge endpoint {id:?} is not a node")]
    DanglingEdge { line: usize, id: String },
    #[error("UNKNOWN_ENTITY: {0}")]
    UnknownEntity(String),
}

impl GraphError {
    pub fn code(&self) -> &'static str {
        match self {
            GraphError::UnknownEntity(_) => "UNKNOWN_ENTITY",
            _ => "GRAPH_PARSE_ERROR",
        }
    }
}

/// Entities reachable from the roots and the targets they contribute.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct Expansion {
    pub entities: BTreeSet<String>,
    pub keywords: BTreeSet<String>,
    pub domains: BTreeSet<String>,
}

fn list(field: Option<&str>) -> impl Iterator<Item = &str> {
    field.unwrap_or("").split('|').map(str::trim).filter(|s| !s.is_empty())
}

impl OwnershipGraph {
    pub fn parse(text: &str) -> Result<OwnershipGraph, GraphError> {
        let mut g = OwnershipGraph::default();
        let mut edges: Vec<(usize, Edge)> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let trimmed = raw.trim_end_matches('\r');
            if trimmed.trim().is_empty() || trimmed.trim_start().starts_with('#') {
                continue;
            }
            let cols: Vec<&str> = trimmed.split('\t').collect();
            let bad = |reason: String| GraphError::Parse { line, reason };
            match cols[0] {
                "node" => {
                    if !(3..=5).contains(&cols.len()) {
                        return Err(bad(format!("node record has {} fields, expected 3 to 5", cols.len())));
                    }
                    let id = cols[1].trim();
                    let name = cols[2].trim();
                    if id.is_empty() || name.is_empty() {
                        return Err(bad("node id and name must be non-empty".into()));
                    }
                    let domains = list(cols.get(3).copied())
                        .map(|d| normalize_domain(d).map_err(|e| bad(format!("domain {d:?}: {e}"))))
                        .collect::<Result<_, _>>()?;
                    let aliases = list(cols.get(4).copied()).map(str::to_owned).collect();
                    let entity = Entity { id: id.into(), name: name.into(), domains, aliases };
                    if g.nodes.insert(id.into(), entity).is_some() {
                        return Err(GraphError::DuplicateEntity { line, id: id.into() });
                    }
                }
                "edge" => {
                    if cols.len() != 4 {
                        return Err(bad(format!("edge record has {} fields, expected 4", cols.len())));
                    }
                    let [parent, child, kind] = [cols[1], cols[2], cols[3]].map(str::trim);
                    if kind.is_empty() {
                        return Err(bad("edge kind must be non-empty".into()));
                    }
                    edges.push((line, Edge { parent: parent.into(), child: child.into(), kind: kind.into() }));
                }
                other => return Err(bad(format!("unknown record type {other:?}"))),
            }
        }
        for (line, e) in edges {
            for id in [&e.parent, &e.child] {
                if !g.nodes.contains_key(id) {
                    return Err(GraphError::DanglingEdge { line, id: id.clone() });
                }
            }
            g.out.entry(e.parent.clone()).or_default().push(e);
        }
        Ok(g)
    }

    pub fn entity(&self, id: &str) -> Option<&Entity> {
        self.nodes.get(id)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Breadth-first closure over edges whose kind is in `kinds`. Each
    /// entity is visited once, so cycles terminate.
    pub fn reachable(&self, roots: &[String], kinds: &BTreeSet<String>) -> Result<BTreeSet<String>, GraphError> {
        let mut seen = BTreeSet::new();
        let mut queue = VecDeque::new();
        for r in roots {
            if !self.nodes.contains_key(r) {
                return Err(GraphError::UnknownEntity(r.clone()));
            }
            if seen.insert(r.clone()) {
                queue.push_back(r.as_str());
            }
        }
        while let Some(id) = queue.pop_front() {
            for e in self.out.get(id).into_iter().flatten() {
                if kinds.contains(&e.kind) && seen.insert(e.child.clone()) {
                    queue.push_back(&e.child);
                }
            }
        }
        Ok(seen)
    }

    /// Names and aliases become keywords; domains are already normalized.
    pub fn expand_targets(&self, roots: &[String], kinds: &BTreeSet<String>) -> Result<Expansion, GraphError> {
        let entities = self.reachable(roots, kinds)?;
        let mut out = Expansion::default();
        for id in &entities {
            let e = &self.nodes[id];
            out.keywords.insert(e.name.clone());
            out.keywords.extend(e.aliases.iter().cloned());
            out.domains.extend(e.domains.iter().cloned());
        }
        out.entities = entities;
        Ok(out)
    }
}

pub fn default_kinds() -> BTreeSet<String> {
    DEFAULT_EDGE_KINDS.iter().map(|k| k.to_string()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = "# toy\nnode\ta\tAlpha\twww.alpha.com|alpha.co.uk\tAlpha Inc\nnode\tb\tBeta\t\nnode\tc\tGamma\tgamma.io\nedge\ta\tb\tsubsidiary\nedge\tb\ta\tbrand\nedge\tb\tc\tminority_stake\n";

    fn ids(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn cycle_terminates_and_kinds_filter() {
        let g = OwnershipGraph::parse(SAMPLE).unwrap();
        let x = g.expand_targets(&ids(&["a"]), &default_kinds()).unwrap();
        assert_eq!(x.entities, ["a", "b"].map(String::from).into());
        assert_eq!(x.domains, ["alpha.co.uk", "alpha.com"].map(String::from).into());
        assert_eq!(x.keywords, ["Alpha", "Alpha Inc", "Beta"].map(String::from).into());
        let all: BTreeSet<String> = ["subsidiary", "brand", "minority_stake"].map(String::from).into();
        assert!(g.expand_targets(&ids(&["a"]), &all).unwrap().domains.contains("gamma.io"));
    }

    #[test]
    fn leaf_root_yields_only_itself() {
        let g = OwnershipGraph::parse(SAMPLE).unwrap();
        let x = g.expand_targets(&ids(&["c"]), &default_kinds()).unwrap();
        assert_eq!(x.keywords, ["Gamma".to_string()].into());
        assert_eq!(x.domains, ["gamma.io".to_string()].into());
    }

    #[test]
    fn errors() {
        let g = OwnershipGraph::parse(SAMPLE).unwrap();
        assert_eq!(g.expand_targets(&ids(&["zz"]), &default_kinds()), Err(GraphError::UnknownEntity("zz".into())));
        assert!(matches!(OwnershipGraph::parse("edge\ta\tb\tbrand\n"), Err(GraphError::DanglingEdge { line: 1, .. })));
        assert!(matches!(OwnershipGraph::parse("node\ta\tA\nnode\ta\tB\n"), Err(GraphError::DuplicateEntity { line: 2, .. })));
        assert!(matches!(OwnershipGraph::parse("vertex\ta\n"), Err(GraphError::Parse { line: 1, .. })));
        assert!(matches!(OwnershipGraph::parse("node\ta\tA\tnot a domain\n"), Err(GraphError::Parse { .. })));
    }
}
