//! Undirected weighted graphs: the agent communication network and the
//! hashtag co-occurrence network, plus the three centralities used by the
//! targeting stage and file export.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::io::Write;
use std::path::Path;

use serde::Serialize;
use thiserror::Error;

use crate::corpus::Corpus;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed edgelist line {0}")]
    BadEdgeList(usize),
    #[error("unknown export format `{0}`")]
    UnknownFormat(String),
}

/// Undirected weighted graph. Nodes are kept sorted by label so
/// construction is invariant to input order; edges store a single
/// orientation with `u < v` (by node index). Self-loops are dropped.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedGraph {
    labels: Vec<String>,
    index: BTreeMap<String, usize>,
    edges: BTreeMap<(usize, usize), f64>,
    adjacency: Vec<Vec<(usize, f64)>>,
    /// Optional per-node attribute (hashtag usage count in the
    /// co-occurrence network).
    pub frequency: BTreeMap<String, u64>,
}

/// Accumulates nodes and edge weights; labels are sorted at build time.
#[derive(Debug, Default)]
pub struct GraphBuilder {
    nodes: BTreeSet<String>,
    weights: BTreeMap<(String, String), f64>,
    frequency: BTreeMap<String, u64>,
}

impl GraphBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_node(&mut self, label: &str) {
        self.nodes.insert(label.to_string());
    }

    pub fn add_edge_weight(&mut self, a: &str, b: &str, w: f64) {
        self.add_node(a);
        self.add_node(b);
        if a == b || w <= 0.0 {
            return;
        }
        let key = if a < b {
            (a.to_string(), b.to_string())
        } else {
            (b.to_string(), a.to_string())
        };
        *self.weights.entry(key).or_insert(0.0) += w;
    }

    pub fn bump_frequency(&mut self, label: &str) {
        self.add_node(label);
        *self.frequency.entry(label.to_string()).or_insert(0) += 1;
    }

    pub fn build(self) -> WeightedGraph {
        let labels: Vec<String> = self.nodes.into_iter().collect();
        let index: BTreeMap<String, usize> = labels
            .iter()
            .enumerate()
            .map(|(i, l)| (l.clone(), i))
            .collect();
        let mut edges = BTreeMap::new();
        let mut adjacency = vec![Vec::new(); labels.len()];
        for ((a, b), w) in self.weights {
            let (mut u, mut v) = (index[&a], index[&b]);
            if u > v {
                std::mem::swap(&mut u, &mut v);
            }
            edges.insert((u, v), w);
            adjacency[u].push((v, w));
            adjacency[v].push((u, w));
        }
        for adj in &mut adjacency {
            adj.sort_unstable_by_key(|a| a.0);
        }
        WeightedGraph {
            labels,
            index,
            edges,
            adjacency,
            frequency: self.frequency,
        }
    }
}

impl WeightedGraph {
    pub fn node_count(&self) -> usize {
        self.labels.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn node_index(&self, label: &str) -> Option<usize> {
        self.index.get(label).copied()
    }

    pub fn label(&self, idx: usize) -> &str {
        &self.labels[idx]
    }

    pub fn neighbors(&self, idx: usize) -> &[(usize, f64)] {
        &self.adjacency[idx]
    }

    /// Edges as `(u, v, weight)` with `u < v`.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.edges.iter().map(|(&(u, v), &w)| (u, v, w))
    }

    pub fn total_edge_weight(&self) -> f64 {
        self.edges.values().sum()
    }

    pub fn has_edge(&self, a: &str, b: &str) -> bool {
        match (self.node_index(a), self.node_index(b)) {
            (Some(mut u), Some(mut v)) => {
                if u > v {
                    std::mem::swap(&mut u, &mut v);
                }
                self.edges.contains_key(&(u, v))
            }
            _ => false,
        }
    }

    pub fn edge_weight(&self, a: &str, b: &str) -> Option<f64> {
        let (mut u, mut v) = (self.node_index(a)?, self.node_index(b)?);
        if u > v {
            std::mem::swap(&mut u, &mut v);
        }
        self.edges.get(&(u, v)).copied()
    }

    /// Connected components as lists of node indices (BFS, unweighted).
    pub fn components(&self) -> Vec<Vec<usize>> {
        let n = self.node_count();
        let mut seen = vec![false; n];
        let mut out = Vec::new();
        for start in 0..n {
            if seen[start] {
                continue;
            }
            let mut comp = Vec::new();
            let mut queue = VecDeque::from([start]);
            seen[start] = true;
            while let Some(u) = queue.pop_front() {
                comp.push(u);
                for &(v, _) in &self.adjacency[u] {
                    if !seen[v] {
                        seen[v] = true;
                        queue.push_back(v);
                    }
                }
            }
            out.push(comp);
        }
        out
    }
}

/// Agent communication network: one node per active agent, edge weight =
/// number of retweet/mention events between the pair in either direction.
pub fn build_communication_network(corpus: &Corpus) -> WeightedGraph {
    let mut b = GraphBuilder::new();
    for t in &corpus.tweets {
        b.add_node(&t.author_id);
        for m in &t.mentions {
            b.add_edge_weight(&t.author_id, m, 1.0);
        }
        if let Some(rt) = &t.retweet_of_author {
            b.add_edge_weight(&t.author_id, rt, 1.0);
        }
    }
    b.build()
}

/// Hashtag co-occurrence network: edge weight = number of tweets carrying
/// both tags; node frequency = usage count.
pub fn build_hashtag_cooccurrence(corpus: &Corpus) -> WeightedGraph {
    let mut b = GraphBuilder::new();
    for t in &corpus.tweets {
        let tags: BTreeSet<&str> = t.hashtags.iter().map(String::as_str).collect();
        for tag in &tags {
            b.bump_frequency(tag);
        }
        let tags: Vec<&str> = tags.into_iter().collect();
        for i in 0..tags.len() {
            for j in i + 1..tags.len() {
                b.add_edge_weight(tags[i], tags[j], 1.0);
            }
        }
    }
    b.build()
}

#[derive(Debug, Clone, Serialize)]
pub struct CentralityScores {
    pub betweenness: BTreeMap<String, f64>,
    pub eigenvector: BTreeMap<String, f64>,
    pub total_degree: BTreeMap<String, f64>,
    /// Set when power iteration hit `max_iter` without converging.
    pub eigenvector_iterations: usize,
    pub eigenvector_converged: bool,
}

/// Exact unnormalized shortest-path betweenness (Brandes), edges treated
/// as unweighted hops, each unordered pair counted once.
pub fn betweenness_centrality(g: &WeightedGraph) -> BTreeMap<String, f64> {
    let n = g.node_count();
    let mut score = vec![0.0f64; n];
    for s in 0..n {
        let mut stack = Vec::with_capacity(n);
        let mut pred: Vec<Vec<usize>> = vec![Vec::new(); n];
        let mut sigma = vec![0.0f64; n];
        let mut dist = vec![-1i64; n];
        sigma[s] = 1.0;
        dist[s] = 0;
        let mut queue = VecDeque::from([s]);
        while let Some(v) = queue.pop_front() {
            stack.push(v);
            for &(w, _) in g.neighbors(v) {
                if dist[w] < 0 {
                    dist[w] = dist[v] + 1;
                    queue.push_back(w);
                }
                if dist[w] == dist[v] + 1 {
                    sigma[w] += sigma[v];
                    pred[w].push(v);
                }
            }
        }
        let mut delta = vec![0.0f64; n];
        while let Some(w) = stack.pop() {
            for &v in &pred[w] {
                delta[v] += sigma[v] / sigma[w] * (1.0 + delta[w]);
            }
            if w != s {
                score[w] += delta[w];
            }
        }
    }
    // each unordered pair was accumulated from both endpoints
    g.labels
        .iter()
        .enumerate()
        .map(|(i, l)| (l.clone(), score[i] / 2.0))
        .collect()
}

pub struct EigenvectorResult {
    pub scores: BTreeMap<String, f64>,
    pub iterations: usize,
    pub converged: bool,
}

/// Power iteration on the weighted adjacency of the largest connected
/// component; nodes outside it score 0. The result has unit Euclidean
/// norm over the component.
pub fn eigenvector_centrality(g: &WeightedGraph, tol: f64, max_iter: usize) -> EigenvectorResult {
    let n = g.node_count();
    let mut scores = vec![0.0f64; n];
    let mut iterations = 0;
    let mut converged = true;
    if n > 0 {
        let comp = g
            .components()
            .into_iter()
            .max_by_key(|c| (c.len(), std::cmp::Reverse(c[0])))
            .unwrap();
        let mut x = vec![1.0f64 / (comp.len() as f64).sqrt(); n];
        for (i, xi) in x.iter_mut().enumerate() {
            if !comp.contains(&i) {
                *xi = 0.0;
            }
        }
        let in_comp: Vec<bool> = {
            let mut v = vec![false; n];
            for &i in &comp {
                v[i] = true;
            }
            v
        };
        converged = false;
        for it in 1..=max_iter {
            iterations = it;
            let mut next = vec![0.0f64; n];
            for &u in &comp {
                // shift by +I so the dominant eigenvalue is strictly
                // largest in magnitude (bipartite components oscillate
                // otherwise); the eigenvector is unchanged
                next[u] = x[u];
                for &(v, w) in g.neighbors(u) {
                    next[u] += w * x[v];
                }
            }
            let norm: f64 = next.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm == 0.0 {
                // component with no edges (single node): centrality 1
                for &u in &comp {
                    next[u] = 1.0 / (comp.len() as f64).sqrt();
                }
                x = next;
                converged = true;
                break;
            }
            for v in next.iter_mut() {
                *v /= norm;
            }
            let diff = x
                .iter()
                .zip(&next)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0f64, f64::max);
            x = next;
            if diff < tol {
                converged = true;
                break;
            }
        }
        for i in 0..n {
            scores[i] = if in_comp[i] { x[i] } else { 0.0 };
        }
    }
    EigenvectorResult {
        scores: g
            .labels
            .iter()
            .enumerate()
            .map(|(i, l)| (l.clone(), scores[i]))
            .collect(),
        iterations,
        converged,
    }
}

/// Sum of incident edge weights.
pub fn total_degree_centrality(g: &WeightedGraph) -> BTreeMap<String, f64> {
    g.labels
        .iter()
        .enumerate()
        .map(|(i, l)| (l.clone(), g.neighbors(i).iter().map(|&(_, w)| w).sum()))
        .collect()
}

pub fn centrality_scores(g: &WeightedGraph, tol: f64, max_iter: usize) -> CentralityScores {
    let eig = eigenvector_centrality(g, tol, max_iter);
    CentralityScores {
        betweenness: betweenness_centrality(g),
        eigenvector: eig.scores,
        total_degree: total_degree_centrality(g),
        eigenvector_iterations: eig.iterations,
        eigenvector_converged: eig.converged,
    }
}

/// Optional per-node annotations carried into exports.
#[derive(Debug, Default, Clone)]
pub struct NodeAttributes {
    pub community: BTreeMap<String, usize>,
    pub discovered: BTreeSet<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExportFormat {
    GraphMl,
    Dot,
    EdgeList,
}

impl std::str::FromStr for ExportFormat {
    type Err = GraphError;
    fn from_str(s: &str) -> Result<Self, GraphError> {
        match s {
            "graphml" => Ok(Self::GraphMl),
            "dot" => Ok(Self::Dot),
            "edgelist" => Ok(Self::EdgeList),
            other => Err(GraphError::UnknownFormat(other.to_string())),
        }
    }
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

pub fn export_graph(
    g: &WeightedGraph,
    format: ExportFormat,
    attrs: &NodeAttributes,
    path: impl AsRef<Path>,
) -> Result<(), GraphError> {
    let mut out: Vec<u8> = Vec::new();
    match format {
        ExportFormat::EdgeList => {
            writeln!(out, "# u v weight")?;
            for (u, v, w) in g.edges() {
                writeln!(out, "{} {} {}", g.label(u), g.label(v), w)?;
            }
        }
        ExportFormat::Dot => {
            writeln!(out, "graph g {{")?;
            for (i, l) in g.labels.iter().enumerate() {
                let mut extra = String::new();
                if let Some(f) = g.frequency.get(l) {
                    extra.push_str(&format!(", frequency={f}"));
                }
                if let Some(c) = attrs.community.get(l) {
                    extra.push_str(&format!(", community={c}"));
                }
                if attrs.discovered.contains(l) {
                    extra.push_str(", discovered=true");
                }
                writeln!(out, "  n{i} [label=\"{l}\"{extra}];")?;
            }
            for (u, v, w) in g.edges() {
                writeln!(out, "  n{u} -- n{v} [weight={w}];")?;
            }
            writeln!(out, "}}")?;
        }
        ExportFormat::GraphMl => {
            writeln!(out, r#"<?xml version="1.0" encoding="UTF-8"?>"#)?;
            writeln!(
                out,
                r#"<graphml xmlns="http://graphml.graphdrawing.org/xmlns">"#
            )?;
            writeln!(
                out,
                r#"  <key id="frequency" for="node" attr.name="frequency" attr.type="long"/>"#
            )?;
            writeln!(
                out,
                r#"  <key id="community" for="node" attr.name="community" attr.type="long"/>"#
            )?;
            writeln!(
                out,
                r#"  <key id="discovered" for="node" attr.name="discovered" attr.type="boolean"/>"#
            )?;
            writeln!(
                out,
                r#"  <key id="weight" for="edge" attr.name="weight" attr.type="double"/>"#
            )?;
            writeln!(out, r#"  <graph edgedefault="undirected">"#)?;
            for (i, l) in g.labels.iter().enumerate() {
                writeln!(out, r#"    <node id="n{i}">"#)?;
                writeln!(
                    out,
                    r#"      <data key="label">{}</data>"#,
                    xml_escape(l)
                )?;
                if let Some(f) = g.frequency.get(l) {
                    writeln!(out, r#"      <data key="frequency">{f}</data>"#)?;
                }
                if let Some(c) = attrs.community.get(l) {
                    writeln!(out, r#"      <data key="community">{c}</data>"#)?;
                }
                if attrs.discovered.contains(l) {
                    writeln!(out, r#"      <data key="discovered">true</data>"#)?;
                }
                writeln!(out, r#"    </node>"#)?;
            }
            for (u, v, w) in g.edges() {
                writeln!(out, r#"    <edge source="n{u}" target="n{v}">"#)?;
                writeln!(out, r#"      <data key="weight">{w}</data>"#)?;
                writeln!(out, r#"    </edge>"#)?;
            }
            writeln!(out, r#"  </graph>"#)?;
            writeln!(out, r#"</graphml>"#)?;
        }
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Parse the whitespace-separated `u v weight` edgelist written by
/// [`export_graph`]. Lines starting with `#` are comments.
pub fn parse_edgelist(content: &str) -> Result<WeightedGraph, GraphError> {
    let mut b = GraphBuilder::new();
    for (i, line) in content.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut parts = line.split_whitespace();
        let (u, v, w) = (
            parts.next().ok_or(GraphError::BadEdgeList(i + 1))?,
            parts.next().ok_or(GraphError::BadEdgeList(i + 1))?,
            parts.next().ok_or(GraphError::BadEdgeList(i + 1))?,
        );
        let w: f64 = w.parse().map_err(|_| GraphError::BadEdgeList(i + 1))?;
        b.add_edge_weight(u, v, w);
    }
    Ok(b.build())
}

#[cfg(test)]
pub(crate) fn graph_from_edges(edges: &[(&str, &str, f64)]) -> WeightedGraph {
    let mut b = GraphBuilder::new();
    for (u, v, w) in edges {
        b.add_edge_weight(u, v, *w);
    }
    b.build()
}
