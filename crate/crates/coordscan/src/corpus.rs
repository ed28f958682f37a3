//! Corpus ingestion: line-oriented tweet records, agent resolution and
//! corpus-wide statistics / time windows.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("i/o error reading corpus: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed record at line {line}: {source}")]
    Parse {
        line: usize,
        source: serde_json::Error,
    },
    #[error("record at line {line} missing required field `{field}`")]
    Schema { line: usize, field: &'static str },
    #[error("duplicate tweet id `{id}` at line {line}")]
    DuplicateId { line: usize, id: String },
    #[error("unknown agent id `{0}` in subset")]
    UnknownAgent(String),
    #[error("window start is after window end")]
    InvalidWindow,
}

/// One microblog record. Hashtags are normalized (lowercase, no `#`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tweet {
    pub id: String,
    pub author_id: String,
    pub created_at: DateTime<Utc>,
    pub text: String,
    #[serde(default)]
    pub hashtags: Vec<String>,
    #[serde(default)]
    pub mentions: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub retweet_of_author: Option<String>,
    #[serde(default)]
    pub urls: Vec<String>,
}

/// One account. Metadata fields are absent for agents only seen as
/// mention or retweet targets.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Agent {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub screen_name_hash: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub followers_count: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub following_count: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verified: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bot_probability: Option<f64>,
}

/// Immutable tweet corpus with every referenced agent resolved.
#[derive(Debug, Clone, Default)]
pub struct Corpus {
    pub tweets: Vec<Tweet>,
    pub agents: BTreeMap<String, Agent>,
    pub time_span: Option<(DateTime<Utc>, DateTime<Utc>)>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorpusStats {
    pub num_agents: usize,
    pub num_tweets: usize,
    pub bot_percentage: f64,
}

/// Raw on-disk record shape. Unknown fields are ignored; entity lists are
/// optional and fall back to extraction from `text`.
#[derive(Debug, Deserialize)]
struct RawRecord {
    id: Option<String>,
    author_id: Option<String>,
    created_at: Option<DateTime<Utc>>,
    #[serde(default)]
    text: String,
    hashtags: Option<Vec<String>>,
    mentions: Option<Vec<String>>,
    #[serde(default)]
    retweet_of_author: Option<String>,
    #[serde(default)]
    urls: Option<Vec<String>>,
    #[serde(default)]
    author: Option<Agent>,
}

/// Lowercase, strip a leading `#`, keep ASCII alphanumerics and underscores.
pub fn normalize_hashtag(raw: &str) -> String {
    raw.trim_start_matches('#')
        .chars()
        .filter(|c| c.is_ascii_alphanumeric() || *c == '_')
        .collect::<String>()
        .to_ascii_lowercase()
}

fn extract_hashtags(text: &str) -> Vec<String> {
    let mut tags = Vec::new();
    let chars = text.char_indices().peekable();
    for (i, c) in chars {
        if c == '#' {
            let rest: String = text[i + 1..]
                .chars()
                .take_while(|c| c.is_alphanumeric() || *c == '_')
                .collect();
            if !rest.is_empty() {
                let tag = normalize_hashtag(&rest);
                if !tag.is_empty() {
                    tags.push(tag);
                }
            }
        }
    }
    tags
}

fn extract_mentions(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    for (i, c) in text.char_indices() {
        if c == '@' {
            let rest: String = text[i + 1..]
                .chars()
                .take_while(|c| c.is_alphanumeric() || *c == '_')
                .collect();
            if !rest.is_empty() {
                out.push(rest);
            }
        }
    }
    out
}

/// Parse one record line. `line_no` is 1-based and only used for error
/// reporting.
pub fn parse_tweet_record(line: &str, line_no: usize) -> Result<(Tweet, Option<Agent>), CorpusError> {
    let raw: RawRecord =
        serde_json::from_str(line).map_err(|source| CorpusError::Parse { line: line_no, source })?;
    let id = raw.id.filter(|s| !s.is_empty()).ok_or(CorpusError::Schema {
        line: line_no,
        field: "id",
    })?;
    let author_id = raw
        .author_id
        .filter(|s| !s.is_empty())
        .ok_or(CorpusError::Schema {
            line: line_no,
            field: "author_id",
        })?;
    let created_at = raw.created_at.ok_or(CorpusError::Schema {
        line: line_no,
        field: "created_at",
    })?;

    let hashtags = match raw.hashtags {
        Some(tags) => tags
            .iter()
            .map(|t| normalize_hashtag(t))
            .filter(|t| !t.is_empty())
            .collect(),
        None => extract_hashtags(&raw.text),
    };
    let mentions = match raw.mentions {
        Some(m) => m,
        None => extract_mentions(&raw.text),
    };

    let author = raw.author.map(|mut a| {
        a.id = author_id.clone();
        a
    });

    Ok((
        Tweet {
            id,
            author_id,
            created_at,
            text: raw.text,
            hashtags,
            mentions,
            retweet_of_author: raw.retweet_of_author,
            urls: raw.urls.unwrap_or_default(),
        },
        author,
    ))
}

impl Corpus {
    /// Build a corpus from already-parsed tweets, materializing every
    /// referenced agent. Tweets keep their input order.
    pub fn from_tweets(
        tweets: Vec<Tweet>,
        mut agents: BTreeMap<String, Agent>,
    ) -> Result<Self, CorpusError> {
        let mut seen = BTreeSet::new();
        for (i, t) in tweets.iter().enumerate() {
            if !seen.insert(t.id.clone()) {
                return Err(CorpusError::DuplicateId {
                    line: i + 1,
                    id: t.id.clone(),
                });
            }
        }
        let mut span: Option<(DateTime<Utc>, DateTime<Utc>)> = None;
        for t in &tweets {
            span = Some(match span {
                None => (t.created_at, t.created_at),
                Some((lo, hi)) => (lo.min(t.created_at), hi.max(t.created_at)),
            });
            for id in referenced_agents(t) {
                agents.entry(id.to_string()).or_insert_with(|| Agent {
                    id: id.to_string(),
                    ..Agent::default()
                });
            }
        }
        Ok(Corpus {
            tweets,
            agents,
            time_span: span,
        })
    }

    pub fn is_empty(&self) -> bool {
        self.tweets.is_empty()
    }

    /// Tweets authored by `agent`, in corpus order.
    pub fn tweets_by<'a>(&'a self, agent: &'a str) -> impl Iterator<Item = &'a Tweet> + 'a {
        self.tweets.iter().filter(move |t| t.author_id == agent)
    }
}

fn referenced_agents(t: &Tweet) -> impl Iterator<Item = &str> {
    std::iter::once(t.author_id.as_str())
        .chain(t.mentions.iter().map(String::as_str))
        .chain(t.retweet_of_author.iter().map(String::as_str))
}

/// Load a corpus from a file of one record per line. Blank lines are
/// skipped; the first malformed line aborts the load.
pub fn load_corpus(path: impl AsRef<Path>) -> Result<Corpus, CorpusError> {
    let reader = BufReader::new(File::open(path)?);
    let mut tweets = Vec::new();
    let mut agents: BTreeMap<String, Agent> = BTreeMap::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let (tweet, author) = parse_tweet_record(&line, i + 1)?;
        if let Some(a) = author {
            merge_agent(&mut agents, a);
        }
        tweets.push(tweet);
    }
    Corpus::from_tweets(tweets, agents)
}

/// Later records fill in fields earlier records left absent; present
/// fields are overwritten by later present values.
fn merge_agent(agents: &mut BTreeMap<String, Agent>, a: Agent) {
    let entry = agents.entry(a.id.clone()).or_insert_with(|| Agent {
        id: a.id.clone(),
        ..Agent::default()
    });
    if a.screen_name_hash.is_some() {
        entry.screen_name_hash = a.screen_name_hash;
    }
    if a.followers_count.is_some() {
        entry.followers_count = a.followers_count;
    }
    if a.following_count.is_some() {
        entry.following_count = a.following_count;
    }
    if a.verified.is_some() {
        entry.verified = a.verified;
    }
    if a.bot_probability.is_some() {
        entry.bot_probability = a.bot_probability;
    }
}

/// Fallback bot score for agents without one; a crude stand-in for an
/// external classifier, applied only when explicitly requested.
pub fn apply_fallback_bot_heuristic(corpus: &mut Corpus) {
    for agent in corpus.agents.values_mut() {
        if agent.bot_probability.is_none() {
            let followers = agent.followers_count.unwrap_or(0) as f64;
            let p = 0.5 - (0.5f64).min((1.0 + followers).log10() / 10.0);
            agent.bot_probability = Some(p);
        }
    }
}

/// Corpus-level counts, optionally restricted to a subset of agents.
/// `bot_percentage` is over agents that carry a bot probability.
pub fn corpus_stats(
    corpus: &Corpus,
    subset: Option<&BTreeSet<String>>,
    bot_threshold: f64,
) -> Result<CorpusStats, CorpusError> {
    if let Some(subset) = subset {
        for id in subset {
            if !corpus.agents.contains_key(id) {
                return Err(CorpusError::UnknownAgent(id.clone()));
            }
        }
    }
    let in_subset = |id: &str| subset.is_none_or(|s| s.contains(id));
    let num_agents = corpus.agents.keys().filter(|id| in_subset(id)).count();
    let num_tweets = corpus
        .tweets
        .iter()
        .filter(|t| in_subset(&t.author_id))
        .count();
    let mut with_prob = 0usize;
    let mut bots = 0usize;
    for (id, agent) in &corpus.agents {
        if !in_subset(id) {
            continue;
        }
        if let Some(p) = agent.bot_probability {
            with_prob += 1;
            if p >= bot_threshold {
                bots += 1;
            }
        }
    }
    let bot_percentage = if with_prob == 0 {
        0.0
    } else {
        100.0 * bots as f64 / with_prob as f64
    };
    Ok(CorpusStats {
        num_agents,
        num_tweets,
        bot_percentage,
    })
}

/// Restrict to tweets with `from <= created_at < to`; agents restricted to
/// those appearing in the retained tweets.
pub fn window(
    corpus: &Corpus,
    from: DateTime<Utc>,
    to: DateTime<Utc>,
) -> Result<Corpus, CorpusError> {
    if from > to {
        return Err(CorpusError::InvalidWindow);
    }
    let tweets: Vec<Tweet> = corpus
        .tweets
        .iter()
        .filter(|t| t.created_at >= from && t.created_at < to)
        .cloned()
        .collect();
    let mut agents = BTreeMap::new();
    for t in &tweets {
        for id in referenced_agents(t) {
            if let Some(a) = corpus.agents.get(id) {
                agents.insert(id.to_string(), a.clone());
            }
        }
    }
    Corpus::from_tweets(tweets, agents)
}
