//! Impact stage: Krackhardt E/I indices for the post-activity
//! communication subgroups, contrasted against the pre-activity baseline.

use std::collections::BTreeSet;

use serde::Serialize;
use thiserror::Error;

use crate::community::louvain;
use crate::corpus::Corpus;
use crate::graph::{build_communication_network, WeightedGraph};

#[derive(Debug, Error)]
pub enum ImpactError {
    #[error("subgroup has no internal or external links; E/I undefined")]
    IsolatedSubgroup,
    #[error("window produced an empty corpus")]
    EmptyWindow,
}

/// `(EL - IL) / (EL + IL)` with IL = edges inside the subgroup and EL =
/// edges with exactly one endpoint inside. Links are counted by
/// existence, not weight, unless `weighted` is set.
pub fn ei_index_with(
    g: &WeightedGraph,
    subgroup: &BTreeSet<String>,
    weighted: bool,
) -> Result<f64, ImpactError> {
    let (il, el) = link_counts(g, subgroup, weighted);
    if il + el == 0.0 {
        return Err(ImpactError::IsolatedSubgroup);
    }
    Ok((el - il) / (el + il))
}

pub fn ei_index(g: &WeightedGraph, subgroup: &BTreeSet<String>) -> Result<f64, ImpactError> {
    ei_index_with(g, subgroup, false)
}

fn link_counts(g: &WeightedGraph, subgroup: &BTreeSet<String>, weighted: bool) -> (f64, f64) {
    let inside: Vec<bool> = g
        .labels()
        .iter()
        .map(|l| subgroup.contains(l))
        .collect();
    let mut il = 0.0;
    let mut el = 0.0;
    for (u, v, w) in g.edges() {
        let val = if weighted { w } else { 1.0 };
        match (inside[u], inside[v]) {
            (true, true) => il += val,
            (true, false) | (false, true) => el += val,
            _ => {}
        }
    }
    (il, el)
}

#[derive(Debug, Clone, Serialize)]
pub struct SubgroupRow {
    pub subgroup: usize,
    pub size: usize,
    pub internal_links: f64,
    pub external_links: f64,
    pub ei_index: f64,
    /// E/I of the same node set on the pre-activity network; `None` when
    /// the subgroup is absent or isolated there.
    pub baseline_ei: Option<f64>,
    pub baseline_nodes_present: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct EIReport {
    pub rows: Vec<SubgroupRow>,
    pub weighted: bool,
    pub pre_nodes: usize,
    pub post_nodes: usize,
}

/// Build the pre- and post-window communication networks, find Louvain
/// subgroups on the post network, and report per-subgroup E/I on both,
/// projecting the post-hoc subgroups back onto the pre network.
#[allow(clippy::too_many_arguments)]
pub fn polarization_report(
    pre: &Corpus,
    post: &Corpus,
    resolution: f64,
    seed: u64,
    weighted: bool,
) -> Result<EIReport, ImpactError> {
    if pre.is_empty() || post.is_empty() {
        return Err(ImpactError::EmptyWindow);
    }
    let pre_g = build_communication_network(pre);
    let post_g = build_communication_network(post);
    let partition = louvain(&post_g, resolution, seed).partition;

    let mut rows = Vec::new();
    for (cid, members) in partition.members().iter().enumerate() {
        let set: BTreeSet<String> = members.iter().map(|s| s.to_string()).collect();
        let (il, el) = link_counts(&post_g, &set, weighted);
        if il + el == 0.0 {
            continue; // isolated singleton communities carry no signal
        }
        let present: BTreeSet<String> = set
            .iter()
            .filter(|n| pre_g.node_index(n).is_some())
            .cloned()
            .collect();
        let baseline_ei = if present.is_empty() {
            None
        } else {
            ei_index_with(&pre_g, &present, weighted).ok()
        };
        rows.push(SubgroupRow {
            subgroup: cid,
            size: set.len(),
            internal_links: il,
            external_links: el,
            ei_index: (el - il) / (el + il),
            baseline_ei,
            baseline_nodes_present: present.len(),
        });
    }
    Ok(EIReport {
        rows,
        weighted,
        pre_nodes: pre_g.node_count(),
        post_nodes: post_g.node_count(),
    })
}
