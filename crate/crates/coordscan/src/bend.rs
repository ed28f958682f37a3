//! B-/D- maneuver scoring: lexicon-based linguistic cues plus network
//! cues, combined into eight per-tweet maneuver scores and aggregated to
//! per-agent profiles and group comparisons.
//!
//! Each maneuver score is a weighted mean of binary indicators (uniform
//! weights by default), so every score lies in [0, 1].

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::community::Partition;
use crate::corpus::{Corpus, Tweet};

#[derive(Debug, Error)]
pub enum BendError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("lexicon line {line}: expected `term,category`")]
    BadLexiconLine { line: usize },
    #[error("lexicon line {line}: unknown category `{category}`")]
    UnknownCategory { line: usize, category: String },
    #[error("lexicon line {line}: duplicate term `{term}`")]
    DuplicateTerm { line: usize, term: String },
    #[error("no agent carries follower metadata")]
    NoFollowerMetadata,
    #[error("agent `{0}` authored no tweets")]
    NoTweets(String),
    #[error("comparison groups must be disjoint and non-empty")]
    BadGroups,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CueCategory {
    Encouragement,
    PositiveEmotion,
    NegativeEmotion,
    Belittling,
    Unimportance,
    DoubtEquivocal,
    JoinInvitation,
    JointActivity,
    Rhetorical,
}

impl CueCategory {
    pub const ALL: [CueCategory; 9] = [
        CueCategory::Encouragement,
        CueCategory::PositiveEmotion,
        CueCategory::NegativeEmotion,
        CueCategory::Belittling,
        CueCategory::Unimportance,
        CueCategory::DoubtEquivocal,
        CueCategory::JoinInvitation,
        CueCategory::JointActivity,
        CueCategory::Rhetorical,
    ];

    fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "encouragement" => Self::Encouragement,
            "positive_emotion" => Self::PositiveEmotion,
            "negative_emotion" => Self::NegativeEmotion,
            "belittling" => Self::Belittling,
            "unimportance" => Self::Unimportance,
            "doubt_equivocal" => Self::DoubtEquivocal,
            "join_invitation" => Self::JoinInvitation,
            "joint_activity" => Self::JointActivity,
            "rhetorical" => Self::Rhetorical,
            _ => return None,
        })
    }
}

/// Term -> category lookup. Terms are single lowercase tokens.
#[derive(Debug, Clone, Default)]
pub struct Lexicon {
    pub entries: BTreeMap<String, CueCategory>,
}

impl Lexicon {
    pub fn categories_present(&self) -> BTreeSet<CueCategory> {
        self.entries.values().copied().collect()
    }
}

/// Parse the comma-separated `term,category` lexicon format. `#` starts a
/// comment line; duplicate terms are rejected.
pub fn parse_lexicon(content: &str) -> Result<Lexicon, BendError> {
    let mut entries = BTreeMap::new();
    for (i, raw) in content.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (term, category) = line
            .split_once(',')
            .ok_or(BendError::BadLexiconLine { line: i + 1 })?;
        let term = term.trim().to_lowercase();
        let category = CueCategory::parse(category.trim()).ok_or_else(|| {
            BendError::UnknownCategory {
                line: i + 1,
                category: category.trim().to_string(),
            }
        })?;
        if entries.insert(term.clone(), category).is_some() {
            return Err(BendError::DuplicateTerm { line: i + 1, term });
        }
    }
    Ok(Lexicon { entries })
}

pub fn load_lexicon(path: impl AsRef<Path>) -> Result<Lexicon, BendError> {
    parse_lexicon(&std::fs::read_to_string(path)?)
}

/// Curated Indonesian/English seed lexicon shipped with the crate.
pub fn default_lexicon() -> Lexicon {
    parse_lexicon(include_str!("../assets/lexicon_id.csv")).expect("bundled lexicon is valid")
}

const NEGATIVE_EMOJI: [char; 10] = ['😢', '😭', '😠', '😡', '💔', '😞', '😱', '😰', '😨', '👎'];
const NEGATIVE_EMOTICONS: [&str; 3] = [":(", ":'(", ":-("];

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct CueVector {
    pub counts: BTreeMap<CueCategory, u32>,
    pub question_marks: u32,
    pub exclamations: u32,
    pub negative_emoji: u32,
}

impl CueVector {
    pub fn count(&self, c: CueCategory) -> u32 {
        self.counts.get(&c).copied().unwrap_or(0)
    }
}

/// Token-level lexicon matching on lowercased, punctuation-stripped
/// tokens; punctuation and emoji counts come from the raw text.
pub fn extract_cues(tweet: &Tweet, lex: &Lexicon) -> CueVector {
    let mut cues = CueVector::default();
    for token in tweet.text.split_whitespace() {
        let token: String = token
            .trim_matches(|c: char| !c.is_alphanumeric())
            .to_lowercase();
        if token.is_empty() {
            continue;
        }
        if let Some(&cat) = lex.entries.get(&token) {
            *cues.counts.entry(cat).or_insert(0) += 1;
        }
    }
    for c in tweet.text.chars() {
        match c {
            '?' => cues.question_marks += 1,
            '!' => cues.exclamations += 1,
            c if NEGATIVE_EMOJI.contains(&c) => cues.negative_emoji += 1,
            _ => {}
        }
    }
    for emo in NEGATIVE_EMOTICONS {
        cues.negative_emoji += tweet.text.matches(emo).count() as u32;
    }
    cues
}

/// Agents whose follower count reaches the given percentile of the
/// follower distribution (over agents with metadata); ties kept.
pub fn identify_opinion_leaders(
    corpus: &Corpus,
    percentile: f64,
) -> Result<BTreeSet<String>, BendError> {
    let mut counts: Vec<u64> = corpus
        .agents
        .values()
        .filter_map(|a| a.followers_count)
        .collect();
    if counts.is_empty() {
        return Err(BendError::NoFollowerMetadata);
    }
    counts.sort_unstable();
    let idx = ((percentile * counts.len() as f64).floor() as usize).min(counts.len() - 1);
    let threshold = counts[idx];
    Ok(corpus
        .agents
        .values()
        .filter(|a| a.followers_count.is_some_and(|f| f >= threshold))
        .map(|a| a.id.clone())
        .collect())
}

/// Corpus-wide context shared by all tweet scorings.
#[derive(Debug, Clone)]
pub struct ManeuverContext {
    pub opinion_leaders: BTreeSet<String>,
    /// Louvain partition of the communication network.
    pub agent_community: Partition,
    /// tag -> (first timestamp, tweet id); ties broken by tweet id.
    pub hashtag_first_use: BTreeMap<String, (DateTime<Utc>, String)>,
    /// tag -> community holding the majority of the tag's distinct users
    /// (ties to the lowest community id).
    pub tag_majority_community: BTreeMap<String, usize>,
}

impl ManeuverContext {
    pub fn build(
        corpus: &Corpus,
        agent_community: Partition,
        leader_percentile: f64,
    ) -> Result<Self, BendError> {
        let opinion_leaders = identify_opinion_leaders(corpus, leader_percentile)?;
        let mut hashtag_first_use: BTreeMap<String, (DateTime<Utc>, String)> = BTreeMap::new();
        let mut tag_users: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
        for t in &corpus.tweets {
            for tag in &t.hashtags {
                let candidate = (t.created_at, t.id.clone());
                hashtag_first_use
                    .entry(tag.clone())
                    .and_modify(|cur| {
                        if candidate < *cur {
                            *cur = candidate.clone();
                        }
                    })
                    .or_insert(candidate);
                tag_users
                    .entry(tag.clone())
                    .or_default()
                    .insert(t.author_id.clone());
            }
        }
        let mut tag_majority_community = BTreeMap::new();
        for (tag, users) in &tag_users {
            let mut per_comm: BTreeMap<usize, usize> = BTreeMap::new();
            for u in users {
                if let Some(c) = agent_community.community_of(u) {
                    *per_comm.entry(c).or_insert(0) += 1;
                }
            }
            if let Some((&c, _)) = per_comm.iter().max_by(|a, b| {
                a.1.cmp(b.1).then(b.0.cmp(a.0)) // max count, ties to lowest id
            }) {
                tag_majority_community.insert(tag.clone(), c);
            }
        }
        Ok(Self {
            opinion_leaders,
            agent_community,
            hashtag_first_use,
            tag_majority_community,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Maneuver {
    Back,
    Build,
    Bridge,
    Boost,
    Dismay,
    Dismiss,
    Distort,
    Distract,
}

impl Maneuver {
    pub const ALL: [Maneuver; 8] = [
        Maneuver::Back,
        Maneuver::Build,
        Maneuver::Bridge,
        Maneuver::Boost,
        Maneuver::Dismay,
        Maneuver::Dismiss,
        Maneuver::Distort,
        Maneuver::Distract,
    ];
}

impl fmt::Display for Maneuver {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Maneuver::Back => "back",
            Maneuver::Build => "build",
            Maneuver::Bridge => "bridge",
            Maneuver::Boost => "boost",
            Maneuver::Dismay => "dismay",
            Maneuver::Dismiss => "dismiss",
            Maneuver::Distort => "distort",
            Maneuver::Distract => "distract",
        };
        f.write_str(s)
    }
}

/// The eight maneuver values, each in [0, 1].
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct ManeuverScores {
    pub back: f64,
    pub build: f64,
    pub bridge: f64,
    pub boost: f64,
    pub dismay: f64,
    pub dismiss: f64,
    pub distort: f64,
    pub distract: f64,
}

impl ManeuverScores {
    pub fn get(&self, m: Maneuver) -> f64 {
        match m {
            Maneuver::Back => self.back,
            Maneuver::Build => self.build,
            Maneuver::Bridge => self.bridge,
            Maneuver::Boost => self.boost,
            Maneuver::Dismay => self.dismay,
            Maneuver::Dismiss => self.dismiss,
            Maneuver::Distort => self.distort,
            Maneuver::Distract => self.distract,
        }
    }

    fn set(&mut self, m: Maneuver, v: f64) {
        match m {
            Maneuver::Back => self.back = v,
            Maneuver::Build => self.build = v,
            Maneuver::Bridge => self.bridge = v,
            Maneuver::Boost => self.boost = v,
            Maneuver::Dismay => self.dismay = v,
            Maneuver::Dismiss => self.dismiss = v,
            Maneuver::Distort => self.distort = v,
            Maneuver::Distract => self.distract = v,
        }
    }
}

/// Per-indicator weights, defaulting to uniform. A maneuver's score is
/// `sum(w_i * indicator_i) / sum(w_i)`.
#[derive(Debug, Clone, Serialize, Deserialize, Default)]
pub struct ManeuverWeights {
    #[serde(default)]
    pub overrides: BTreeMap<Maneuver, Vec<f64>>,
}

impl ManeuverWeights {
    fn combine(&self, m: Maneuver, indicators: &[bool]) -> f64 {
        let uniform = vec![1.0; indicators.len()];
        let weights = self
            .overrides
            .get(&m)
            .filter(|w| w.len() == indicators.len())
            .map_or(&uniform[..], |w| &w[..]);
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return 0.0;
        }
        indicators
            .iter()
            .zip(weights)
            .map(|(&ind, w)| if ind { *w } else { 0.0 })
            .sum::<f64>()
            / total
    }
}

/// Score one tweet. `ctx` must have been built on the same corpus so the
/// first-use and community lookups line up.
pub fn score_maneuvers(
    tweet: &Tweet,
    cues: &CueVector,
    ctx: &ManeuverContext,
    weights: &ManeuverWeights,
) -> ManeuverScores {
    let mentioned: BTreeSet<&str> = tweet
        .mentions
        .iter()
        .map(String::as_str)
        .filter(|m| *m != tweet.author_id)
        .collect();
    let author_comm = ctx.agent_community.community_of(&tweet.author_id);
    let mention_comms: Vec<usize> = mentioned
        .iter()
        .filter_map(|m| ctx.agent_community.community_of(m))
        .collect();
    let distinct_comms: BTreeSet<usize> = mention_comms.iter().copied().collect();
    let mut comm_counts: BTreeMap<usize, usize> = BTreeMap::new();
    for c in &mention_comms {
        *comm_counts.entry(*c).or_insert(0) += 1;
    }

    let mentions_leader = mentioned.iter().any(|m| ctx.opinion_leaders.contains(*m));
    let mentions_own_community =
        author_comm.is_some_and(|ac| mention_comms.contains(&ac));
    let carries_foreign_majority_tag = author_comm.is_some_and(|ac| {
        tweet
            .hashtags
            .iter()
            .any(|t| ctx.tag_majority_community.get(t).is_some_and(|&c| c != ac))
    });
    let introduces_hashtag = tweet
        .hashtags
        .iter()
        .any(|t| ctx.hashtag_first_use.get(t).is_some_and(|(_, id)| *id == tweet.id));

    let mut scores = ManeuverScores::default();
    let indicators: [(Maneuver, Vec<bool>); 8] = [
        (
            Maneuver::Back,
            vec![cues.count(CueCategory::Encouragement) > 0, mentions_leader],
        ),
        (
            Maneuver::Build,
            vec![
                mentioned.len() >= 2,
                cues.count(CueCategory::JoinInvitation) > 0,
                mentions_own_community,
            ],
        ),
        (
            Maneuver::Bridge,
            vec![distinct_comms.len() >= 2, carries_foreign_majority_tag],
        ),
        (
            Maneuver::Boost,
            vec![
                mentioned.len() >= 3,
                cues.count(CueCategory::JointActivity) > 0,
                comm_counts.values().any(|&n| n >= 2),
            ],
        ),
        (
            Maneuver::Dismay,
            vec![cues.count(CueCategory::NegativeEmotion) > 0 || cues.negative_emoji > 0],
        ),
        (
            Maneuver::Dismiss,
            vec![
                cues.count(CueCategory::Belittling) > 0,
                cues.count(CueCategory::Unimportance) > 0,
            ],
        ),
        (
            Maneuver::Distort,
            vec![
                cues.count(CueCategory::DoubtEquivocal) > 0,
                cues.question_marks > 0,
            ],
        ),
        (
            Maneuver::Distract,
            vec![
                introduces_hashtag,
                cues.count(CueCategory::Rhetorical) > 0 || cues.exclamations > 0,
            ],
        ),
    ];
    for (m, inds) in indicators {
        scores.set(m, weights.combine(m, &inds));
    }
    scores
}

/// Per-maneuver mean over the agent's tweets.
pub fn agent_maneuver_profile(
    agent: &str,
    corpus: &Corpus,
    ctx: &ManeuverContext,
    lex: &Lexicon,
    weights: &ManeuverWeights,
) -> Result<ManeuverScores, BendError> {
    let mut sum = ManeuverScores::default();
    let mut n = 0usize;
    for t in corpus.tweets_by(agent) {
        let cues = extract_cues(t, lex);
        let s = score_maneuvers(t, &cues, ctx, weights);
        for m in Maneuver::ALL {
            sum.set(m, sum.get(m) + s.get(m));
        }
        n += 1;
    }
    if n == 0 {
        return Err(BendError::NoTweets(agent.to_string()));
    }
    for m in Maneuver::ALL {
        sum.set(m, sum.get(m) / n as f64);
    }
    Ok(sum)
}

/// Per-maneuver group means and their difference (`a - b`).
#[derive(Debug, Clone, Serialize)]
pub struct GroupComparison {
    pub rows: Vec<ComparisonRow>,
    pub agents_a: usize,
    pub agents_b: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct ComparisonRow {
    pub maneuver: Maneuver,
    pub mean_a: f64,
    pub mean_b: f64,
    pub difference: f64,
}

pub fn compare_groups(
    group_a: &BTreeSet<String>,
    group_b: &BTreeSet<String>,
    corpus: &Corpus,
    ctx: &ManeuverContext,
    lex: &Lexicon,
    weights: &ManeuverWeights,
) -> Result<GroupComparison, BendError> {
    if group_a.is_empty() || group_b.is_empty() || group_a.intersection(group_b).next().is_some() {
        return Err(BendError::BadGroups);
    }
    let mean_of = |group: &BTreeSet<String>| -> (ManeuverScores, usize) {
        let mut sum = ManeuverScores::default();
        let mut n = 0usize;
        for agent in group {
            if let Ok(p) = agent_maneuver_profile(agent, corpus, ctx, lex, weights) {
                for m in Maneuver::ALL {
                    sum.set(m, sum.get(m) + p.get(m));
                }
                n += 1;
            }
        }
        if n > 0 {
            for m in Maneuver::ALL {
                sum.set(m, sum.get(m) / n as f64);
            }
        }
        (sum, n)
    };
    let (mean_a, agents_a) = mean_of(group_a);
    let (mean_b, agents_b) = mean_of(group_b);
    let rows = Maneuver::ALL
        .iter()
        .map(|&m| ComparisonRow {
            maneuver: m,
            mean_a: mean_a.get(m),
            mean_b: mean_b.get(m),
            difference: mean_a.get(m) - mean_b.get(m),
        })
        .collect();
    Ok(GroupComparison {
        rows,
        agents_a,
        agents_b,
    })
}
