//! Discovery stage: anomalous hashtags, hijacked clusters, the
//! coordinated agents behind them and their burst signature.

use std::collections::{BTreeMap, BTreeSet};

use chrono::{Datelike, NaiveDate};
use serde::Serialize;
use thiserror::Error;

use crate::community::{louvain, Partition};
use crate::corpus::Corpus;
use crate::graph::{build_hashtag_cooccurrence, WeightedGraph};

#[derive(Debug, Error)]
pub enum DiscoveryError {
    #[error("agent set has no tweets in the corpus")]
    EmptyProfile,
}

/// True for the campaign-marker pattern: exactly four characters, all
/// lowercase ASCII alphanumerics, at least one digit.
pub fn is_anomalous_hashtag(tag: &str) -> bool {
    tag.len() == 4
        && tag
            .bytes()
            .all(|b| b.is_ascii_lowercase() || b.is_ascii_digit())
        && tag.bytes().any(|b| b.is_ascii_digit())
}

#[derive(Debug, Clone, Serialize)]
pub struct DiscoveryResult {
    pub anomalous_hashtags: BTreeSet<String>,
    /// community id -> fraction of anomalous member tags, for clusters
    /// clearing the configured threshold
    pub flagged_clusters: BTreeMap<usize, f64>,
    pub coordinated_agents: BTreeSet<String>,
    /// agent -> (tweet id, anomalous tags used in that tweet)
    pub per_agent_evidence: BTreeMap<String, Vec<(String, Vec<String>)>>,
}

#[derive(Debug, Clone)]
pub struct DiscoveryConfig {
    pub min_cluster_fraction: f64,
    pub min_cluster_size: usize,
    pub louvain_resolution: f64,
    pub louvain_seed: u64,
}

impl Default for DiscoveryConfig {
    fn default() -> Self {
        Self {
            min_cluster_fraction: 0.5,
            min_cluster_size: 3,
            louvain_resolution: 1.0,
            louvain_seed: 0,
        }
    }
}

/// Clusters of size >= `min_size` whose fraction of anomalous member tags
/// is >= `min_fraction` (boundary inclusive).
pub fn flag_coordination_clusters(
    hashtag_graph: &WeightedGraph,
    p: &Partition,
    min_fraction: f64,
    min_size: usize,
) -> BTreeMap<usize, f64> {
    let mut size = vec![0usize; p.num_communities];
    let mut anomalous = vec![0usize; p.num_communities];
    for l in hashtag_graph.labels() {
        if let Some(c) = p.community_of(l) {
            size[c] += 1;
            if is_anomalous_hashtag(l) {
                anomalous[c] += 1;
            }
        }
    }
    (0..p.num_communities)
        .filter(|&c| size[c] >= min_size)
        .filter_map(|c| {
            let frac = anomalous[c] as f64 / size[c] as f64;
            (frac >= min_fraction).then_some((c, frac))
        })
        .collect()
}

/// Coordinated agents are authors of at least one tweet carrying an
/// anomalous hashtag; every one comes with its evidence tweets. Cluster
/// flags are computed from the corpus co-occurrence graph.
pub fn extract_coordinated_agents(corpus: &Corpus, cfg: &DiscoveryConfig) -> DiscoveryResult {
    let mut anomalous_hashtags = BTreeSet::new();
    let mut coordinated_agents = BTreeSet::new();
    let mut per_agent_evidence: BTreeMap<String, Vec<(String, Vec<String>)>> = BTreeMap::new();
    for t in &corpus.tweets {
        let bad: Vec<String> = t
            .hashtags
            .iter()
            .filter(|tag| is_anomalous_hashtag(tag))
            .cloned()
            .collect();
        if !bad.is_empty() {
            anomalous_hashtags.extend(bad.iter().cloned());
            coordinated_agents.insert(t.author_id.clone());
            per_agent_evidence
                .entry(t.author_id.clone())
                .or_default()
                .push((t.id.clone(), bad));
        }
    }

    let hashtag_graph = build_hashtag_cooccurrence(corpus);
    let flagged_clusters = if hashtag_graph.edge_count() > 0 {
        let p = louvain(&hashtag_graph, cfg.louvain_resolution, cfg.louvain_seed).partition;
        flag_coordination_clusters(
            &hashtag_graph,
            &p,
            cfg.min_cluster_fraction,
            cfg.min_cluster_size,
        )
    } else {
        BTreeMap::new()
    };

    DiscoveryResult {
        anomalous_hashtags,
        flagged_clusters,
        coordinated_agents,
        per_agent_evidence,
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BurstProfile {
    pub per_day_counts: BTreeMap<NaiveDate, usize>,
    /// max single-day count / total
    pub peak_fraction: f64,
}

/// Per-UTC-calendar-day tweet counts for the given agent set.
pub fn burst_concentration(
    corpus: &Corpus,
    agents: &BTreeSet<String>,
) -> Result<BurstProfile, DiscoveryError> {
    let mut per_day_counts: BTreeMap<NaiveDate, usize> = BTreeMap::new();
    let mut total = 0usize;
    for t in &corpus.tweets {
        if agents.contains(&t.author_id) {
            let day = NaiveDate::from_ymd_opt(
                t.created_at.year(),
                t.created_at.month(),
                t.created_at.day(),
            )
            .expect("valid date");
            *per_day_counts.entry(day).or_insert(0) += 1;
            total += 1;
        }
    }
    if total == 0 {
        return Err(DiscoveryError::EmptyProfile);
    }
    let peak = per_day_counts.values().copied().max().unwrap_or(0);
    Ok(BurstProfile {
        per_day_counts,
        peak_fraction: peak as f64 / total as f64,
    })
}

/// Agents discovered in both results.
pub fn recurring_agents(a: &DiscoveryResult, b: &DiscoveryResult) -> BTreeSet<String> {
    a.coordinated_agents
        .intersection(&b.coordinated_agents)
        .cloned()
        .collect()
}
