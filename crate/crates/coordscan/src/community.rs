//! Modularity and Louvain community detection, used for hashtag clusters,
//! agent communities and polarization subgroups.

use std::collections::BTreeMap;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::graph::WeightedGraph;

#[derive(Debug, Error)]
pub enum CommunityError {
    #[error("modularity undefined for a graph with zero total edge weight")]
    ZeroEdgeWeight,
    #[error("partition does not cover node `{0}`")]
    UncoveredNode(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

/// Node-to-community assignment with dense community ids from 0.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    pub assignment: BTreeMap<String, usize>,
    pub num_communities: usize,
}

impl Partition {
    /// Build from an arbitrary labeling, renumbering communities to be
    /// contiguous in order of first appearance over sorted node labels.
    pub fn from_labels(labels: BTreeMap<String, usize>) -> Self {
        let mut remap: BTreeMap<usize, usize> = BTreeMap::new();
        let mut assignment = BTreeMap::new();
        for (node, c) in labels {
            let next = remap.len();
            let dense = *remap.entry(c).or_insert(next);
            assignment.insert(node, dense);
        }
        let num_communities = remap.len();
        Partition {
            assignment,
            num_communities,
        }
    }

    pub fn community_of(&self, node: &str) -> Option<usize> {
        self.assignment.get(node).copied()
    }

    /// Members per community, indexed by community id.
    pub fn members(&self) -> Vec<Vec<&str>> {
        let mut out = vec![Vec::new(); self.num_communities];
        for (node, &c) in &self.assignment {
            out[c].push(node.as_str());
        }
        out
    }

    /// Two-column `node community` text.
    pub fn write_to(&self, path: impl AsRef<Path>) -> Result<(), CommunityError> {
        let mut s = String::new();
        for (node, c) in &self.assignment {
            s.push_str(&format!("{node} {c}\n"));
        }
        std::fs::write(path, s)?;
        Ok(())
    }
}

/// Weighted modularity
/// `Q = (1/2m) sum_ij [A_ij - gamma k_i k_j / 2m] delta(c_i, c_j)`.
pub fn modularity(
    g: &WeightedGraph,
    p: &Partition,
    resolution: f64,
) -> Result<f64, CommunityError> {
    let m = g.total_edge_weight();
    if m <= 0.0 {
        return Err(CommunityError::ZeroEdgeWeight);
    }
    for l in g.labels() {
        if !p.assignment.contains_key(l) {
            return Err(CommunityError::UncoveredNode(l.clone()));
        }
    }
    let comm: Vec<usize> = g
        .labels()
        .iter()
        .map(|l| p.assignment[l])
        .collect();
    let ncomm = comm.iter().copied().max().map_or(0, |c| c + 1);
    let mut internal = vec![0.0f64; ncomm]; // 2 * internal edge weight
    let mut total = vec![0.0f64; ncomm]; // sum of degrees
    for (u, v, w) in g.edges() {
        if comm[u] == comm[v] {
            internal[comm[u]] += 2.0 * w;
        }
        total[comm[u]] += w;
        total[comm[v]] += w;
    }
    let two_m = 2.0 * m;
    let q = (0..ncomm)
        .map(|c| internal[c] / two_m - resolution * (total[c] / two_m).powi(2))
        .sum();
    Ok(q)
}

#[derive(Debug, Clone)]
pub struct LouvainResult {
    pub partition: Partition,
    /// True when the graph had no edges and every node was left in its
    /// own singleton community.
    pub degenerate: bool,
    pub levels: usize,
}

// Aggregated graph used between Louvain levels: adjacency without
// self-loops plus per-node self-loop weight (collapsed internal edges).
struct LevelGraph {
    adj: Vec<Vec<(usize, f64)>>,
    self_loop: Vec<f64>,
}

impl LevelGraph {
    fn n(&self) -> usize {
        self.adj.len()
    }

    fn degree(&self, u: usize) -> f64 {
        self.adj[u].iter().map(|&(_, w)| w).sum::<f64>() + 2.0 * self.self_loop[u]
    }

    fn total_weight(&self) -> f64 {
        let edge_sum: f64 = self
            .adj
            .iter()
            .flat_map(|a| a.iter().map(|&(_, w)| w))
            .sum();
        edge_sum / 2.0 + self.self_loop.iter().sum::<f64>()
    }
}

/// Louvain with seeded node-visit shuffling. Deterministic for a given
/// seed; each phase never decreases modularity.
pub fn louvain(g: &WeightedGraph, resolution: f64, seed: u64) -> LouvainResult {
    let n = g.node_count();
    if g.edge_count() == 0 {
        let labels: BTreeMap<String, usize> = g
            .labels()
            .iter()
            .enumerate()
            .map(|(i, l)| (l.clone(), i))
            .collect();
        return LouvainResult {
            partition: Partition::from_labels(labels),
            degenerate: true,
            levels: 0,
        };
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut level = LevelGraph {
        adj: (0..n).map(|u| g.neighbors(u).to_vec()).collect(),
        self_loop: vec![0.0; n],
    };
    // node index in the original graph -> community in the current level
    let mut node_to_comm: Vec<usize> = (0..n).collect();
    let mut levels = 0;

    loop {
        let moved = local_move_phase(&mut rng, &level, resolution);
        let (comm_of, num_comms) = renumber(&moved.assignment);
        levels += 1;
        for c in node_to_comm.iter_mut() {
            *c = comm_of[*c];
        }
        if !moved.improved || num_comms == level.n() {
            break;
        }
        level = aggregate(&level, &comm_of, num_comms);
    }

    let labels: BTreeMap<String, usize> = g
        .labels()
        .iter()
        .enumerate()
        .map(|(i, l)| (l.clone(), node_to_comm[i]))
        .collect();
    LouvainResult {
        partition: Partition::from_labels(labels),
        degenerate: false,
        levels,
    }
}

struct MoveOutcome {
    assignment: Vec<usize>,
    improved: bool,
}

fn local_move_phase(rng: &mut ChaCha8Rng, g: &LevelGraph, resolution: f64) -> MoveOutcome {
    let n = g.n();
    let two_m = 2.0 * g.total_weight();
    let mut comm: Vec<usize> = (0..n).collect();
    let mut comm_total: Vec<f64> = (0..n).map(|u| g.degree(u)).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);

    let mut improved = false;
    loop {
        let mut moved_any = false;
        for &u in &order {
            let ku = g.degree(u);
            let own = comm[u];
            comm_total[own] -= ku;

            // weight from u into each neighboring community
            let mut links: BTreeMap<usize, f64> = BTreeMap::new();
            links.insert(own, 0.0);
            for &(v, w) in &g.adj[u] {
                *links.entry(comm[v]).or_insert(0.0) += w;
            }

            let gain = |c: usize, k_in: f64| k_in - resolution * comm_total[c] * ku / two_m;
            let mut best = own;
            let mut best_gain = gain(own, links[&own]);
            for (&c, &k_in) in &links {
                let gc = gain(c, k_in);
                // strict improvement required; ties keep the lower id
                if gc > best_gain + 1e-12 || (gc > best_gain - 1e-12 && c < best) {
                    best = c;
                    best_gain = gc;
                }
            }
            comm[u] = best;
            comm_total[best] += ku;
            if best != own {
                moved_any = true;
                improved = true;
            }
        }
        if !moved_any {
            break;
        }
    }
    MoveOutcome {
        assignment: comm,
        improved,
    }
}

fn renumber(assignment: &[usize]) -> (Vec<usize>, usize) {
    let mut remap: BTreeMap<usize, usize> = BTreeMap::new();
    let mut out = Vec::with_capacity(assignment.len());
    for &c in assignment {
        let next = remap.len();
        out.push(*remap.entry(c).or_insert(next));
    }
    let n = remap.len();
    (out, n)
}

fn aggregate(g: &LevelGraph, comm_of: &[usize], num_comms: usize) -> LevelGraph {
    let mut self_loop = vec![0.0f64; num_comms];
    let mut between: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    for u in 0..g.n() {
        self_loop[comm_of[u]] += g.self_loop[u];
        for &(v, w) in &g.adj[u] {
            let (cu, cv) = (comm_of[u], comm_of[v]);
            if cu == cv {
                // each undirected edge appears twice in adj
                self_loop[cu] += w / 2.0;
            } else if cu < cv {
                *between.entry((cu, cv)).or_insert(0.0) += w;
            }
        }
    }
    let mut adj = vec![Vec::new(); num_comms];
    for ((u, v), w) in between {
        adj[u].push((v, w));
        adj[v].push((u, w));
    }
    LevelGraph { adj, self_loop }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{graph_from_edges, GraphBuilder};

    fn two_triangles() -> WeightedGraph {
        graph_from_edges(&[
            ("a", "b", 1.0),
            ("b", "c", 1.0),
            ("a", "c", 1.0),
            ("x", "y", 1.0),
            ("y", "z", 1.0),
            ("x", "z", 1.0),
        ])
    }

    fn partition_of(pairs: &[(&str, usize)]) -> Partition {
        Partition::from_labels(pairs.iter().map(|(n, c)| (n.to_string(), *c)).collect())
    }

    #[test]
    fn modularity_two_triangles_is_half() {
        let g = two_triangles();
        let p = partition_of(&[("a", 0), ("b", 0), ("c", 0), ("x", 1), ("y", 1), ("z", 1)]);
        let q = modularity(&g, &p, 1.0).unwrap();
        assert!((q - 0.5).abs() < 1e-12);
    }

    #[test]
    fn modularity_k2_single_and_singleton_partitions() {
        let g = graph_from_edges(&[("a", "b", 1.0)]);
        let one = partition_of(&[("a", 0), ("b", 0)]);
        assert!(modularity(&g, &one, 1.0).unwrap().abs() < 1e-12);
        let two = partition_of(&[("a", 0), ("b", 1)]);
        assert!((modularity(&g, &two, 1.0).unwrap() + 0.5).abs() < 1e-12);
    }

    #[test]
    fn modularity_errors() {
        let empty = GraphBuilder::new().build();
        let p = Partition::from_labels(BTreeMap::new());
        assert!(matches!(
            modularity(&empty, &p, 1.0),
            Err(CommunityError::ZeroEdgeWeight)
        ));

        let g = graph_from_edges(&[("a", "b", 1.0)]);
        let partial = partition_of(&[("a", 0)]);
        assert!(matches!(
            modularity(&g, &partial, 1.0),
            Err(CommunityError::UncoveredNode(_))
        ));
    }

    fn two_cliques_with_bridge() -> WeightedGraph {
        let mut edges = Vec::new();
        let a = ["a1", "a2", "a3", "a4"];
        let b = ["b1", "b2", "b3", "b4"];
        for grp in [&a, &b] {
            for i in 0..4 {
                for j in i + 1..4 {
                    edges.push((grp[i], grp[j], 1.0));
                }
            }
        }
        edges.push(("a1", "b1", 1.0));
        let mut builder = GraphBuilder::new();
        for (u, v, w) in edges {
            builder.add_edge_weight(u, v, w);
        }
        builder.build()
    }

    #[test]
    fn louvain_recovers_two_cliques() {
        let g = two_cliques_with_bridge();
        let r = louvain(&g, 1.0, 7);
        assert!(!r.degenerate);
        assert_eq!(r.partition.num_communities, 2);
        let c = |n: &str| r.partition.community_of(n).unwrap();
        for n in ["a2", "a3", "a4"] {
            assert_eq!(c(n), c("a1"));
        }
        for n in ["b2", "b3", "b4"] {
            assert_eq!(c(n), c("b1"));
        }
        assert_ne!(c("a1"), c("b1"));
    }

    #[test]
    fn louvain_separates_disconnected_triangles() {
        let g = two_triangles();
        let r = louvain(&g, 1.0, 0);
        assert_eq!(r.partition.num_communities, 2);
    }

    #[test]
    fn louvain_deterministic_per_seed() {
        let g = two_cliques_with_bridge();
        let a = louvain(&g, 1.0, 42);
        let b = louvain(&g, 1.0, 42);
        assert_eq!(a.partition, b.partition);
    }

    #[test]
    fn louvain_edgeless_graph_is_degenerate_singletons() {
        let mut b = GraphBuilder::new();
        b.add_node("a");
        b.add_node("b");
        let g = b.build();
        let r = louvain(&g, 1.0, 0);
        assert!(r.degenerate);
        assert_eq!(r.partition.num_communities, 2);
    }

    #[test]
    fn louvain_beats_trivial_partition() {
        let g = two_cliques_with_bridge();
        let r = louvain(&g, 1.0, 3);
        let trivial = Partition::from_labels(
            g.labels().iter().map(|l| (l.clone(), 0)).collect(),
        );
        assert!(
            modularity(&g, &r.partition, 1.0).unwrap()
                >= modularity(&g, &trivial, 1.0).unwrap()
        );
    }
}
