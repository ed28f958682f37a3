//! Targeting stage: who the coordinated activity was aimed at, their
//! maneuver ratios, and correlations against metadata and centralities.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::bend::{extract_cues, score_maneuvers, Lexicon, Maneuver, ManeuverContext, ManeuverWeights};
use crate::corpus::Corpus;
use crate::graph::{CentralityScores, WeightedGraph};

#[derive(Debug, Error)]
pub enum TargetingError {
    #[error("pearson requires two samples of equal length >= 2")]
    TooFewSamples,
    #[error("correlation undefined: zero variance in one of the vectors")]
    ZeroVariance,
    #[error("only {0} targets authored tweets; at least 2 are required")]
    InsufficientTargets(usize),
}

/// Agents @-mentioned or retweeted by coordinated-agent tweets, excluding
/// the coordinated agents themselves.
pub fn extract_targets(corpus: &Corpus, coordinated: &BTreeSet<String>) -> BTreeSet<String> {
    let mut targets = BTreeSet::new();
    for t in &corpus.tweets {
        if !coordinated.contains(&t.author_id) {
            continue;
        }
        for m in &t.mentions {
            targets.insert(m.clone());
        }
        if let Some(rt) = &t.retweet_of_author {
            targets.insert(rt.clone());
        }
    }
    targets.retain(|a| !coordinated.contains(a));
    targets
}

/// Fraction of the agent's tweets whose maneuver score clears
/// `threshold`. `None` when the agent authored no tweets.
pub fn maneuver_ratio(
    agent: &str,
    corpus: &Corpus,
    ctx: &ManeuverContext,
    lex: &Lexicon,
    weights: &ManeuverWeights,
    threshold: f64,
) -> Option<BTreeMap<Maneuver, f64>> {
    let mut hits: BTreeMap<Maneuver, usize> =
        Maneuver::ALL.iter().map(|&m| (m, 0usize)).collect();
    let mut n = 0usize;
    for t in corpus.tweets_by(agent) {
        let cues = extract_cues(t, lex);
        let s = score_maneuvers(t, &cues, ctx, weights);
        for m in Maneuver::ALL {
            if s.get(m) >= threshold {
                *hits.get_mut(&m).unwrap() += 1;
            }
        }
        n += 1;
    }
    if n == 0 {
        return None;
    }
    Some(
        hits.into_iter()
            .map(|(m, h)| (m, h as f64 / n as f64))
            .collect(),
    )
}

/// Sample Pearson correlation coefficient.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64, TargetingError> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(TargetingError::TooFewSamples);
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(TargetingError::ZeroVariance);
    }
    Ok(sxy / (sxx * syy).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetAttribute {
    Verified,
    BotProbability,
    Followers,
    Following,
    Betweenness,
    Eigenvector,
    TotalDegree,
}

impl TargetAttribute {
    pub const ALL: [TargetAttribute; 7] = [
        TargetAttribute::Verified,
        TargetAttribute::BotProbability,
        TargetAttribute::Followers,
        TargetAttribute::Following,
        TargetAttribute::Betweenness,
        TargetAttribute::Eigenvector,
        TargetAttribute::TotalDegree,
    ];
}

impl fmt::Display for TargetAttribute {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            TargetAttribute::Verified => "verified",
            TargetAttribute::BotProbability => "bot_probability",
            TargetAttribute::Followers => "followers",
            TargetAttribute::Following => "following",
            TargetAttribute::Betweenness => "betweenness",
            TargetAttribute::Eigenvector => "eigenvector",
            TargetAttribute::TotalDegree => "total_degree",
        };
        f.write_str(s)
    }
}

/// One correlation cell: `None` when the pair was undefined (zero
/// variance after pairwise exclusion of missing metadata).
#[derive(Debug, Clone, Copy, Serialize)]
pub struct CorrelationCell {
    pub r: Option<f64>,
    pub samples: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct CorrelationTable {
    pub cells: BTreeMap<(Maneuver, TargetAttribute), CorrelationCell>,
    pub usable_targets: usize,
    /// Targets dropped because they authored no tweets.
    pub dropped_targets: usize,
}

impl CorrelationTable {
    pub fn cell(&self, m: Maneuver, a: TargetAttribute) -> CorrelationCell {
        self.cells[&(m, a)]
    }
}

/// Correlate the targets' per-maneuver ratios against their metadata and
/// centralities on the communication network. Agents lacking an attribute
/// are excluded pairwise, not listwise.
#[allow(clippy::too_many_arguments)]
pub fn correlation_table(
    targets: &BTreeSet<String>,
    corpus: &Corpus,
    ctx: &ManeuverContext,
    lex: &Lexicon,
    weights: &ManeuverWeights,
    ratio_threshold: f64,
    network: &WeightedGraph,
    centralities: &CentralityScores,
) -> Result<CorrelationTable, TargetingError> {
    let mut ratios: BTreeMap<&str, BTreeMap<Maneuver, f64>> = BTreeMap::new();
    let mut dropped = 0usize;
    for t in targets {
        match maneuver_ratio(t, corpus, ctx, lex, weights, ratio_threshold) {
            Some(r) => {
                ratios.insert(t.as_str(), r);
            }
            None => dropped += 1,
        }
    }
    if ratios.len() < 2 {
        return Err(TargetingError::InsufficientTargets(ratios.len()));
    }

    let attribute_of = |agent: &str, attr: TargetAttribute| -> Option<f64> {
        let meta = corpus.agents.get(agent);
        match attr {
            TargetAttribute::Verified => meta?.verified.map(|v| if v { 1.0 } else { 0.0 }),
            TargetAttribute::BotProbability => meta?.bot_probability,
            TargetAttribute::Followers => meta?.followers_count.map(|v| v as f64),
            TargetAttribute::Following => meta?.following_count.map(|v| v as f64),
            // agents absent from the network snapshot score 0
            TargetAttribute::Betweenness => Some(
                network
                    .node_index(agent)
                    .map_or(0.0, |_| centralities.betweenness[agent]),
            ),
            TargetAttribute::Eigenvector => Some(
                network
                    .node_index(agent)
                    .map_or(0.0, |_| centralities.eigenvector[agent]),
            ),
            TargetAttribute::TotalDegree => Some(
                network
                    .node_index(agent)
                    .map_or(0.0, |_| centralities.total_degree[agent]),
            ),
        }
    };

    let mut cells = BTreeMap::new();
    for m in Maneuver::ALL {
        for attr in TargetAttribute::ALL {
            let mut xs = Vec::new();
            let mut ys = Vec::new();
            for (agent, r) in &ratios {
                if let Some(v) = attribute_of(agent, attr) {
                    xs.push(r[&m]);
                    ys.push(v);
                }
            }
            let samples = xs.len();
            let r = pearson(&xs, &ys).ok();
            cells.insert((m, attr), CorrelationCell { r, samples });
        }
    }
    Ok(CorrelationTable {
        cells,
        usable_targets: ratios.len(),
        dropped_targets: dropped,
    })
}
