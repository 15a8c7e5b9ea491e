//! Enumeration and ranking of source-to-sink flow paths.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::edges::{AssignmentEdge, EdgeGraph, EdgeRecord};
use super::labels::{BitRange, Labels};
use crate::hdl::FlatNetlist;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Limits {
    pub max_paths: usize,
    pub max_edges: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            max_paths: 256,
            max_edges: 8,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LeakagePath {
    /// `P<rank>`, assigned after ranking.
    pub id: String,
    pub source: BitRange,
    pub sink: BitRange,
    pub edges: Vec<AssignmentEdge>,
}

impl LeakagePath {
    pub fn edge_ids(&self) -> Vec<usize> {
        self.edges.iter().map(|e| e.id).collect()
    }

    pub fn conditional_edges(&self) -> usize {
        self.edges.iter().filter(|e| e.is_conditional()).count()
    }

    /// (conditional edges, length); lower means more likely to be exploitable.
    pub fn score(&self) -> (usize, usize) {
        (self.conditional_edges(), self.edges.len())
    }

    pub fn signal_names(&self, netlist: &FlatNetlist) -> Vec<String> {
        std::iter::once(self.source.display(netlist).to_string())
            .chain(self.edges.iter().map(|e| e.to.display(netlist).to_string()))
            .collect()
    }
}

#[derive(Clone, Debug)]
pub struct PathSet {
    pub paths: Vec<LeakagePath>,
    /// More than `max_paths` paths exist.
    pub truncated: bool,
    /// Some path may need more than `max_edges` edges.
    pub depth_limited: bool,
}

impl PathSet {
    pub fn limits_hit(&self) -> bool {
        self.truncated || self.depth_limited
    }

    pub fn get(&self, id: &str) -> Option<&LeakagePath> {
        self.paths.iter().find(|p| p.id == id)
    }
}

struct Search<'a> {
    graph: &'a EdgeGraph,
    labels: &'a Labels,
    /// Lower bound on edges needed to reach a sink from each signal.
    dist: Vec<usize>,
    visited: Vec<bool>,
    stack: Vec<usize>,
}

impl Search<'_> {
    fn can_enter(&self, e: &AssignmentEdge) -> bool {
        !self.visited[e.to.signal.index()] && !self.labels.declassifiers.contains(&e.to.signal)
    }

    fn successors(&self, at: &BitRange) -> impl Iterator<Item = &AssignmentEdge> + '_ {
        let at = *at;
        self.graph
            .outgoing(at.signal)
            .iter()
            .map(|&i| self.graph.edge(i))
            .filter(move |e| e.from.overlaps(&at))
    }

    /// Walks simple paths of exactly `left` more edges from `at`, calling
    /// `found` for each complete one; stops early when `found` returns false.
    fn walk(&mut self, at: BitRange, left: usize, found: &mut dyn FnMut(&[usize]) -> bool) -> bool {
        let next: Vec<usize> = self
            .successors(&at)
            .filter(|e| self.can_enter(e))
            .filter(|e| {
                if left == 1 {
                    self.labels.is_sink(&e.to)
                } else {
                    self.dist[e.to.signal.index()] < left
                }
            })
            .map(|e| e.id)
            .collect();
        for id in next {
            let to = self.graph.edge(id).to;
            self.stack.push(id);
            let go_on = if left == 1 {
                found(&self.stack)
            } else {
                self.visited[to.signal.index()] = true;
                let r = self.walk(to, left - 1, found);
                self.visited[to.signal.index()] = false;
                r
            };
            self.stack.pop();
            if !go_on {
                return false;
            }
        }
        true
    }

    /// Whether a simple path of `left` edges exists from `at` ending in a
    /// signal that can still reach a sink.
    fn partial_exists(&mut self, at: BitRange, left: usize) -> bool {
        let next: Vec<usize> = self
            .successors(&at)
            .filter(|e| self.can_enter(e) && self.dist[e.to.signal.index()] < usize::MAX)
            .map(|e| e.id)
            .collect();
        for id in next {
            let to = self.graph.edge(id).to;
            if left == 1 {
                let extendable = self
                    .successors(&to)
                    .any(|f| self.can_enter(f) && f.to.signal != to.signal);
                if extendable {
                    return true;
                }
                continue;
            }
            self.visited[to.signal.index()] = true;
            let r = self.partial_exists(to, left - 1);
            self.visited[to.signal.index()] = false;
            if r {
                return true;
            }
        }
        false
    }
}

fn sink_distances(netlist: &FlatNetlist, graph: &EdgeGraph, labels: &Labels) -> Vec<usize> {
    let mut dist = vec![usize::MAX; netlist.signals.len()];
    let mut incoming = vec![Vec::new(); netlist.signals.len()];
    let mut queue = VecDeque::new();
    for e in &graph.edges {
        if labels.declassifiers.contains(&e.to.signal) {
            continue;
        }
        incoming[e.to.signal.index()].push(e.from.signal);
        if labels.is_sink(&e.to) && dist[e.from.signal.index()] != 1 {
            dist[e.from.signal.index()] = 1;
            queue.push_back(e.from.signal);
        }
    }
    while let Some(s) = queue.pop_front() {
        let d = dist[s.index()];
        for &p in &incoming[s.index()] {
            if dist[p.index()] == usize::MAX {
                dist[p.index()] = d + 1;
                queue.push_back(p);
            }
        }
    }
    dist
}

/// Simple paths (no signal visited twice) from every sensitive range to every
/// untrusted range, without passing through a declassifier.
///
/// Paths are produced shortest first and, within a length, source by source
/// in lexicographic order of edge ids; the first `max_paths` are kept and then ranked by
/// [`LeakagePath::score`].
pub fn enumerate_paths(
    netlist: &FlatNetlist,
    graph: &EdgeGraph,
    labels: &Labels,
    limits: Limits,
) -> PathSet {
    let mut search = Search {
        graph,
        labels,
        dist: sink_distances(netlist, graph, labels),
        visited: vec![false; netlist.signals.len()],
        stack: Vec::new(),
    };
    let mut found: Vec<(BitRange, Vec<usize>)> = Vec::new();
    // an edge leaving overlapping source ranges is reported once
    let mut seen = std::collections::HashSet::new();
    let mut truncated = false;
    'lengths: for len in 1..=limits.max_edges {
        for source in &labels.sources {
            search.visited[source.signal.index()] = true;
            let mut collect = |edges: &[usize]| {
                if seen.contains(edges) {
                    return true;
                }
                if found.len() == limits.max_paths {
                    truncated = true;
                    return false;
                }
                seen.insert(edges.to_vec());
                found.push((*source, edges.to_vec()));
                true
            };
            let complete = search.walk(*source, len, &mut collect);
            search.visited[source.signal.index()] = false;
            if !complete {
                break 'lengths;
            }
        }
    }
    let depth_limited = !truncated
        && limits.max_edges > 0
        && labels.sources.iter().any(|s| {
            search.visited[s.signal.index()] = true;
            let r = search.partial_exists(*s, limits.max_edges);
            search.visited[s.signal.index()] = false;
            r
        });

    let mut paths: Vec<LeakagePath> = found
        .into_iter()
        .map(|(source, ids)| {
            let edges: Vec<AssignmentEdge> = ids.iter().map(|&i| graph.edge(i).clone()).collect();
            let sink = labels
                .sink_for(&edges.last().expect("non-empty path").to)
                .expect("path ends in a sink");
            LeakagePath {
                id: String::new(),
                source,
                sink,
                edges,
            }
        })
        .collect();
    rank_paths(&mut paths);
    PathSet {
        paths,
        truncated,
        depth_limited,
    }
}

/// Sorts by score, breaking ties by edge ids, and renumbers `P1, P2, ...`.
pub fn rank_paths(paths: &mut [LeakagePath]) {
    paths.sort_by_cached_key(|p| (p.score(), p.edge_ids()));
    for (i, p) in paths.iter_mut().enumerate() {
        p.id = format!("P{}", i + 1);
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct PathRecord {
    pub id: String,
    pub source: String,
    pub sink: String,
    pub conditional_edges: usize,
    pub length: usize,
    pub signals: Vec<String>,
    pub edges: Vec<EdgeRecord>,
}

impl PathRecord {
    pub fn new(netlist: &FlatNetlist, p: &LeakagePath) -> Self {
        PathRecord {
            id: p.id.clone(),
            source: p.source.display(netlist).to_string(),
            sink: p.sink.display(netlist).to_string(),
            conditional_edges: p.conditional_edges(),
            length: p.edges.len(),
            signals: p.signal_names(netlist),
            edges: p.edges.iter().map(|e| EdgeRecord::new(netlist, e)).collect(),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct PathReport {
    pub design: String,
    pub truncated: bool,
    pub depth_limited: bool,
    pub paths: Vec<PathRecord>,
}

impl PathReport {
    pub fn new(netlist: &FlatNetlist, set: &PathSet) -> Self {
        PathReport {
            design: netlist.top.clone(),
            truncated: set.truncated,
            depth_limited: set.depth_limited,
            paths: set.paths.iter().map(|p| PathRecord::new(netlist, p)).collect(),
        }
    }
}
