//! Narrative stage: tweet-text preprocessing and LDA topic modeling via
//! collapsed Gibbs sampling, with UMass coherence for choosing the topic
//! count.

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::corpus::Tweet;

#[derive(Debug, Error)]
pub enum NarrativeError {
    #[error("need at least {k} documents for {k} topics, got {docs}")]
    TooFewDocuments { docs: usize, k: usize },
    #[error("document set has an empty vocabulary")]
    EmptyVocabulary,
    #[error("top_n {top_n} exceeds vocabulary size {vocab}")]
    TopNTooLarge { top_n: usize, vocab: usize },
    #[error("topic count must be at least 1")]
    ZeroTopics,
}

/// Tokenized documents over a shared vocabulary. Documents store
/// vocabulary indices; `provenance[i]` is the source tweet id of doc `i`.
#[derive(Debug, Clone)]
pub struct DocumentSet {
    pub docs: Vec<Vec<usize>>,
    pub vocabulary: BTreeMap<String, usize>,
    pub vocab_list: Vec<String>,
    pub provenance: Vec<String>,
    /// Tweets dropped because no tokens survived preprocessing.
    pub dropped: usize,
}

fn is_url(token: &str) -> bool {
    token.starts_with("http://") || token.starts_with("https://") || token.starts_with("www.")
}

/// Tokenize tweets, removing URLs, hashtags, @-mentions and stopwords.
/// The retweet marker `rt` is always treated as a stopword. Tweets left
/// with no tokens are dropped.
pub fn preprocess(tweets: &[Tweet], stopwords: &BTreeSet<String>) -> DocumentSet {
    let mut vocabulary: BTreeMap<String, usize> = BTreeMap::new();
    let mut vocab_list: Vec<String> = Vec::new();
    let mut docs = Vec::new();
    let mut provenance = Vec::new();
    let mut dropped = 0usize;
    for t in tweets {
        let mut tokens: Vec<String> = Vec::new();
        for raw in t.text.split_whitespace() {
            if is_url(raw) || raw.starts_with('#') || raw.starts_with('@') {
                continue;
            }
            let token = raw
                .trim_matches(|c: char| !c.is_alphanumeric())
                .to_lowercase();
            if token.len() < 2 || token == "rt" || stopwords.contains(&token) {
                continue;
            }
            tokens.push(token);
        }
        if tokens.is_empty() {
            dropped += 1;
            continue;
        }
        let doc = tokens
            .into_iter()
            .map(|tok| {
                *vocabulary.entry(tok.clone()).or_insert_with(|| {
                    vocab_list.push(tok);
                    vocab_list.len() - 1
                })
            })
            .collect();
        docs.push(doc);
        provenance.push(t.id.clone());
    }
    DocumentSet {
        docs,
        vocabulary,
        vocab_list,
        provenance,
        dropped,
    }
}

/// One line per token from a file of stopwords.
pub fn parse_stopwords(content: &str) -> BTreeSet<String> {
    content
        .lines()
        .map(|l| l.trim().to_lowercase())
        .filter(|l| !l.is_empty())
        .collect()
}

pub fn default_stopwords() -> BTreeSet<String> {
    parse_stopwords(include_str!("../assets/stopwords_id.txt"))
}

#[derive(Debug, Clone, Serialize)]
pub struct LdaModel {
    pub k: usize,
    /// K x V token counts.
    pub topic_word_counts: Vec<Vec<u32>>,
    /// D x K token counts.
    pub doc_topic_counts: Vec<Vec<u32>>,
    pub alpha: f64,
    pub beta: f64,
    pub seed: u64,
    pub iterations_run: usize,
}

impl LdaModel {
    /// Per-topic word distributions (rows sum to 1).
    pub fn phi(&self) -> Vec<Vec<f64>> {
        let v = self.topic_word_counts[0].len();
        self.topic_word_counts
            .iter()
            .map(|row| {
                let total: f64 = row.iter().map(|&c| c as f64).sum::<f64>() + v as f64 * self.beta;
                row.iter().map(|&c| (c as f64 + self.beta) / total).collect()
            })
            .collect()
    }

    /// Per-document topic distributions (rows sum to 1).
    pub fn theta(&self) -> Vec<Vec<f64>> {
        self.doc_topic_counts
            .iter()
            .map(|row| {
                let total: f64 =
                    row.iter().map(|&c| c as f64).sum::<f64>() + self.k as f64 * self.alpha;
                row.iter()
                    .map(|&c| (c as f64 + self.alpha) / total)
                    .collect()
            })
            .collect()
    }
}

/// Collapsed Gibbs sampling for `iters` full sweeps. Deterministic for a
/// given seed. `alpha <= 0` selects the 50/K default.
pub fn fit_lda(
    ds: &DocumentSet,
    k: usize,
    alpha: f64,
    beta: f64,
    iters: usize,
    seed: u64,
) -> Result<LdaModel, NarrativeError> {
    if k == 0 {
        return Err(NarrativeError::ZeroTopics);
    }
    if ds.docs.len() < k {
        return Err(NarrativeError::TooFewDocuments {
            docs: ds.docs.len(),
            k,
        });
    }
    let v = ds.vocab_list.len();
    if v == 0 {
        return Err(NarrativeError::EmptyVocabulary);
    }
    let alpha = if alpha > 0.0 { alpha } else { 50.0 / k as f64 };

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut nkw = vec![vec![0u32; v]; k];
    let mut nk = vec![0u32; k];
    let mut ndk = vec![vec![0u32; k]; ds.docs.len()];
    let mut z: Vec<Vec<usize>> = Vec::with_capacity(ds.docs.len());

    for (d, doc) in ds.docs.iter().enumerate() {
        let mut zs = Vec::with_capacity(doc.len());
        for &w in doc {
            let topic = rng.gen_range(0..k);
            nkw[topic][w] += 1;
            nk[topic] += 1;
            ndk[d][topic] += 1;
            zs.push(topic);
        }
        z.push(zs);
    }

    let vb = v as f64 * beta;
    let mut weights = vec![0.0f64; k];
    for _ in 0..iters {
        for (d, doc) in ds.docs.iter().enumerate() {
            for (i, &w) in doc.iter().enumerate() {
                let old = z[d][i];
                nkw[old][w] -= 1;
                nk[old] -= 1;
                ndk[d][old] -= 1;

                let mut total = 0.0;
                for t in 0..k {
                    let p = (ndk[d][t] as f64 + alpha) * (nkw[t][w] as f64 + beta)
                        / (nk[t] as f64 + vb);
                    total += p;
                    weights[t] = total;
                }
                let u: f64 = rng.gen_range(0.0..total);
                let new = weights.partition_point(|&cum| cum <= u).min(k - 1);

                nkw[new][w] += 1;
                nk[new] += 1;
                ndk[d][new] += 1;
                z[d][i] = new;
            }
        }
        debug_assert_eq!(
            nk.iter().map(|&c| c as u64).sum::<u64>(),
            ds.docs.iter().map(|d| d.len() as u64).sum::<u64>()
        );
    }

    Ok(LdaModel {
        k,
        topic_word_counts: nkw,
        doc_topic_counts: ndk,
        alpha,
        beta,
        seed,
        iterations_run: iters,
    })
}

/// `n` highest-count words per topic, ties broken lexicographically.
pub fn top_words(model: &LdaModel, ds: &DocumentSet, n: usize) -> Vec<Vec<String>> {
    model
        .topic_word_counts
        .iter()
        .map(|row| {
            let mut ranked: Vec<(u32, &str)> = row
                .iter()
                .enumerate()
                .map(|(w, &c)| (c, ds.vocab_list[w].as_str()))
                .collect();
            ranked.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(b.1)));
            ranked
                .into_iter()
                .take(n)
                .map(|(_, w)| w.to_string())
                .collect()
        })
        .collect()
}

/// UMass coherence per topic over the model's top `top_n` words:
/// `sum over ranked pairs of log((D(wi,wj) + 1) / D(wj))`, with D the
/// document co-occurrence counts of `ds`.
pub fn coherence(
    model: &LdaModel,
    ds: &DocumentSet,
    top_n: usize,
) -> Result<Vec<f64>, NarrativeError> {
    let v = ds.vocab_list.len();
    if top_n > v {
        return Err(NarrativeError::TopNTooLarge { top_n, vocab: v });
    }
    let tops = top_words(model, ds, top_n);
    let doc_sets: Vec<BTreeSet<usize>> = ds
        .docs
        .iter()
        .map(|d| d.iter().copied().collect())
        .collect();
    let word_idx = |w: &str| ds.vocabulary[w];
    let doc_freq = |w: usize| doc_sets.iter().filter(|d| d.contains(&w)).count();
    let co_freq = |a: usize, b: usize| {
        doc_sets
            .iter()
            .filter(|d| d.contains(&a) && d.contains(&b))
            .count()
    };
    Ok(tops
        .iter()
        .map(|words| {
            let idx: Vec<usize> = words.iter().map(|w| word_idx(w)).collect();
            let mut c = 0.0;
            for i in 1..idx.len() {
                for j in 0..i {
                    let dj = doc_freq(idx[j]);
                    if dj == 0 {
                        continue;
                    }
                    c += ((co_freq(idx[i], idx[j]) as f64 + 1.0) / dj as f64).ln();
                }
            }
            c
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::{TimeZone, Utc};

    fn tweet(id: &str, text: &str) -> Tweet {
        Tweet {
            id: id.into(),
            author_id: "a".into(),
            created_at: Utc.with_ymd_and_hms(2021, 5, 14, 0, 0, 0).unwrap(),
            text: text.into(),
            hashtags: vec![],
            mentions: vec![],
            retweet_of_author: None,
            urls: vec![],
        }
    }

    #[test]
    fn preprocess_removes_urls_tags_mentions() {
        let ds = preprocess(
            &[tweet("t1", "Bela Palestina #zyl7 @x http://t.co/a")],
            &BTreeSet::new(),
        );
        let tokens: Vec<&str> = ds.docs[0]
            .iter()
            .map(|&w| ds.vocab_list[w].as_str())
            .collect();
        assert_eq!(tokens, vec!["bela", "palestina"]);
    }

    #[test]
    fn preprocess_drops_stopword_only_tweets() {
        let stop: BTreeSet<String> = ["yang".to_string(), "dan".to_string()].into();
        let ds = preprocess(&[tweet("t1", "yang dan"), tweet("t2", "rt RT")], &stop);
        assert!(ds.docs.is_empty());
        assert_eq!(ds.dropped, 2);
    }

    #[test]
    fn preprocess_build_template_tweet() {
        // retweet marker and entities stripped, content words kept
        let ds = preprocess(
            &[tweet("t1", "RT @I25: Jihad dan Khilafah, Solusi Hakiki Palestina #2z22")],
            &default_stopwords(),
        );
        let tokens: Vec<&str> = ds.docs[0]
            .iter()
            .map(|&w| ds.vocab_list[w].as_str())
            .collect();
        assert_eq!(
            tokens,
            vec!["jihad", "khilafah", "solusi", "hakiki", "palestina"]
        );
    }

    #[test]
    fn preprocess_idempotent() {
        let ds = preprocess(
            &[tweet("t1", "Bela! Palestina, merdeka #x @y http://z")],
            &default_stopwords(),
        );
        let rendered = ds.docs[0]
            .iter()
            .map(|&w| ds.vocab_list[w].clone())
            .collect::<Vec<_>>()
            .join(" ");
        let again = preprocess(&[tweet("t1", &rendered)], &default_stopwords());
        assert_eq!(
            again.docs[0].iter().map(|&w| again.vocab_list[w].clone()).collect::<Vec<_>>(),
            ds.docs[0].iter().map(|&w| ds.vocab_list[w].clone()).collect::<Vec<_>>()
        );
    }

    #[test]
    fn single_doc_single_topic() {
        let ds = preprocess(&[tweet("t1", "palestina merdeka sekarang")], &BTreeSet::new());
        let m = fit_lda(&ds, 1, 0.0, 0.01, 50, 1).unwrap();
        let theta = m.theta();
        assert!((theta[0][0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn fit_errors() {
        let ds = preprocess(&[tweet("t1", "palestina merdeka")], &BTreeSet::new());
        assert!(matches!(
            fit_lda(&ds, 5, 0.0, 0.01, 10, 1),
            Err(NarrativeError::TooFewDocuments { .. })
        ));
        assert!(matches!(
            fit_lda(&ds, 0, 0.0, 0.01, 10, 1),
            Err(NarrativeError::ZeroTopics)
        ));
        assert!(matches!(
            coherence(&fit_lda(&ds, 1, 0.0, 0.01, 5, 1).unwrap(), &ds, 100),
            Err(NarrativeError::TopNTooLarge { .. })
        ));
    }

    #[test]
    fn deterministic_per_seed() {
        let tweets: Vec<Tweet> = (0..10)
            .map(|i| {
                tweet(
                    &format!("t{i}"),
                    if i % 2 == 0 {
                        "gaza palestina donasi"
                    } else {
                        "miras haram tolak"
                    },
                )
            })
            .collect();
        let ds = preprocess(&tweets, &BTreeSet::new());
        let a = fit_lda(&ds, 2, 0.0, 0.01, 100, 9).unwrap();
        let b = fit_lda(&ds, 2, 0.0, 0.01, 100, 9).unwrap();
        assert_eq!(a.topic_word_counts, b.topic_word_counts);
        assert_eq!(a.doc_topic_counts, b.doc_topic_counts);
    }

    #[test]
    fn count_consistency_and_valid_distributions() {
        let tweets: Vec<Tweet> = (0..20)
            .map(|i| tweet(&format!("t{i}"), "satu dua tiga empat lima"))
            .collect();
        let ds = preprocess(&tweets, &BTreeSet::new());
        let m = fit_lda(&ds, 3, 0.0, 0.01, 50, 4).unwrap();
        let total_tokens: u64 = ds.docs.iter().map(|d| d.len() as u64).sum();
        let from_topics: u64 = m
            .topic_word_counts
            .iter()
            .flat_map(|r| r.iter().map(|&c| c as u64))
            .sum();
        let from_docs: u64 = m
            .doc_topic_counts
            .iter()
            .flat_map(|r| r.iter().map(|&c| c as u64))
            .sum();
        assert_eq!(from_topics, total_tokens);
        assert_eq!(from_docs, total_tokens);
        for row in m.phi().iter().chain(m.theta().iter()) {
            let s: f64 = row.iter().sum();
            assert!((s - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn top_words_ranked_with_lexicographic_ties() {
        let ds = preprocess(
            &[tweet("t1", "zebra zebra apel buku")],
            &BTreeSet::new(),
        );
        let m = fit_lda(&ds, 1, 0.0, 0.01, 10, 1).unwrap();
        let tops = top_words(&m, &ds, 3);
        assert_eq!(tops[0], vec!["zebra", "apel", "buku"]);
    }

    #[test]
    fn coherence_near_zero_for_always_cooccurring_words() {
        let tweets: Vec<Tweet> = (0..10)
            .map(|i| tweet(&format!("t{i}"), "gaza palestina donasi"))
            .collect();
        let ds = preprocess(&tweets, &BTreeSet::new());
        let m = fit_lda(&ds, 1, 0.0, 0.01, 20, 2).unwrap();
        let c = coherence(&m, &ds, 3).unwrap();
        // log((10+1)/10) per pair, 3 pairs
        assert!((c[0] - 3.0 * (11.0f64 / 10.0).ln()).abs() < 1e-9);
    }

    #[test]
    fn coherence_negative_for_disjoint_words() {
        let mut tweets = Vec::new();
        for i in 0..10 {
            tweets.push(tweet(&format!("a{i}"), "gaza palestina"));
            tweets.push(tweet(&format!("b{i}"), "miras haram"));
        }
        let ds = preprocess(&tweets, &BTreeSet::new());
        let m = fit_lda(&ds, 1, 0.0, 0.01, 20, 2).unwrap();
        let c = coherence(&m, &ds, 4).unwrap();
        assert!(c[0] < -1.0);
    }
}
