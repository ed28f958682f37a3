//! Seeded generator for labeled synthetic campaigns: templated
//! coordinated tweets carrying 4-character hijack hashtags, a one-day
//! burst, influencer targeting, and an organic background whose mention
//! structure shifts from mixed to polarized partway through the window.
//!
//! Organic agents are grouped into mention "cells" (sub-communities of a
//! topic group). Before `polarization_onset_day` an agent's mentions
//! cycle within-cell, within-cell, outside (2/3 inside, which balances
//! internal links against both outgoing and incoming external ones);
//! afterwards mentions stay inside the cell with high probability, so
//! post-onset subgroups are strongly inward-facing.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use chrono::{Duration, TimeZone, Utc};
use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{Agent, Tweet};
use crate::discovery::is_anomalous_hashtag;

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid config: {0:?}")]
    InvalidConfig(Vec<String>),
    #[error("self-check failed: {0}")]
    SelfCheck(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct CampaignConfig {
    pub n_organic_agents: usize,
    pub n_coordinated_agents: usize,
    pub n_influencers: usize,
    pub n_decoy_targets: usize,
    pub n_days: u32,
    /// Organic tweets per agent per day.
    pub organic_tweets_per_day: u32,
    pub coordinated_tweets_per_agent: u32,
    pub burst_day: u32,
    pub burst_fraction: f64,
    /// Day from which organic mentions become cell-bound.
    pub polarization_onset_day: u32,
    /// Organic mention cell size (cells subdivide topic groups).
    pub cell_size: usize,
    pub within_cell_mention_prob: f64,
    pub organic_topic_vocabularies: Vec<Vec<String>>,
    pub organic_hashtag_pools: Vec<Vec<String>>,
    pub coordinated_templates: Vec<String>,
    pub template_times: Vec<String>,
    pub template_cities: Vec<String>,
    pub n_anomalous_hashtags: usize,
    pub bot_fraction_coordinated: f64,
    pub bot_fraction_organic: f64,
    pub coordinated_intra_mention_prob: f64,
    pub coordinated_decoy_mention_prob: f64,
    /// Chance a campaign tweet also drags in a random organic bystander,
    /// pulling the mention set across community lines.
    pub coordinated_organic_mention_prob: f64,
    pub seed: u64,
}

impl Default for CampaignConfig {
    fn default() -> Self {
        let topic_a = [
            "palestina", "gaza", "donasi", "kemanusiaan", "rakyat", "saudara", "perang",
            "tanah", "rumah", "doa", "bantuan", "anak", "keluarga", "warga", "damai",
            "konflik", "serangan", "wilayah", "dunia", "solidaritas",
        ];
        let topic_b = [
            "miras", "investasi", "industri", "tolak", "presiden", "aturan", "daerah",
            "papua", "izin", "saham", "modal", "kebijakan", "hukum", "larangan", "pabrik",
            "ekonomi", "pasar", "produk", "cukai", "pengusaha",
        ];
        let pool_a = [
            "savepalestina", "gazaunderattack", "freepalestine", "doauntukpalestina",
            "belapalestina",
        ];
        let pool_b = [
            "batalkanperpresmiras", "mirasindukmaksiat", "tolakmiras", "papuatolakmiras",
            "perpresmiras",
        ];
        let own = |words: &[&str]| words.iter().map(|s| s.to_string()).collect();
        Self {
            n_organic_agents: 1000,
            n_coordinated_agents: 60,
            n_influencers: 5,
            n_decoy_targets: 15,
            n_days: 6,
            organic_tweets_per_day: 2,
            coordinated_tweets_per_agent: 10,
            burst_day: 1,
            burst_fraction: 0.8,
            polarization_onset_day: 3,
            cell_size: 40,
            within_cell_mention_prob: 0.9,
            organic_topic_vocabularies: vec![own(&topic_a), own(&topic_b)],
            organic_hashtag_pools: vec![own(&pool_a), own(&pool_b)],
            coordinated_templates: vec![
                "{time} alhamdulillah saya melihat di kota {city} sudah banyak orang sadar khilafah ayo gabung bersama kamu gimana!".into(),
                "ayo gabung perjuangan khilafah di {city} gimana menurutmu!".into(),
                "khilafah solusi umat ayo ikut bersama kami {time} gimana!".into(),
            ],
            template_times: vec!["pekan ini".into(), "bulan ini".into(), "minggu ini".into()],
            template_cities: vec![
                "jakarta".into(),
                "surabaya".into(),
                "bandung".into(),
                "medan".into(),
            ],
            n_anomalous_hashtags: 8,
            bot_fraction_coordinated: 0.23,
            bot_fraction_organic: 0.22,
            coordinated_intra_mention_prob: 0.5,
            coordinated_decoy_mention_prob: 0.25,
            coordinated_organic_mention_prob: 0.5,
            seed: 0,
        }
    }
}

/// All config invariants; violations are returned as a list, never
/// thrown mid-generation.
pub fn validate_config(cfg: &CampaignConfig) -> Result<Vec<String>, Vec<String>> {
    let mut errors = Vec::new();
    let mut warnings = Vec::new();
    if cfg.n_organic_agents == 0 || cfg.n_coordinated_agents == 0 {
        errors.push("agent counts must be positive".to_string());
    }
    if cfg.n_days == 0 {
        errors.push("n_days must be positive".to_string());
    } else if cfg.n_days == 1 {
        warnings.push("n_days = 1 makes the burst signature degenerate".to_string());
    }
    if cfg.burst_day >= cfg.n_days {
        errors.push(format!(
            "burst_day {} must be < n_days {}",
            cfg.burst_day, cfg.n_days
        ));
    }
    if !(0.0..=1.0).contains(&cfg.burst_fraction) || cfg.burst_fraction == 0.0 {
        errors.push("burst_fraction must be in (0, 1]".to_string());
    }
    if cfg.burst_day >= cfg.polarization_onset_day {
        warnings.push(
            "burst_day outside the discovery window weakens the discovery stage".to_string(),
        );
    }
    if cfg.polarization_onset_day >= cfg.n_days {
        errors.push("polarization_onset_day must be < n_days".to_string());
    }
    if cfg.organic_topic_vocabularies.len() < 2 {
        errors.push("need at least 2 topic vocabularies".to_string());
    }
    if cfg.organic_hashtag_pools.len() != cfg.organic_topic_vocabularies.len() {
        errors.push("hashtag pools must match topic vocabularies one-to-one".to_string());
    }
    let mut seen: BTreeSet<&str> = BTreeSet::new();
    for vocab in &cfg.organic_topic_vocabularies {
        for w in vocab {
            if !seen.insert(w.as_str()) {
                errors.push(format!("topic vocabularies overlap on `{w}`"));
            }
        }
    }
    for pool in &cfg.organic_hashtag_pools {
        for tag in pool {
            if is_anomalous_hashtag(tag) {
                errors.push(format!("organic hashtag pool contains anomalous tag `{tag}`"));
            }
        }
    }
    if cfg.coordinated_templates.is_empty() {
        errors.push("need at least one coordinated template".to_string());
    }
    if cfg.n_anomalous_hashtags == 0 {
        errors.push("need at least one anomalous hashtag".to_string());
    }
    for (name, p) in [
        ("bot_fraction_coordinated", cfg.bot_fraction_coordinated),
        ("bot_fraction_organic", cfg.bot_fraction_organic),
        ("coordinated_intra_mention_prob", cfg.coordinated_intra_mention_prob),
        ("coordinated_decoy_mention_prob", cfg.coordinated_decoy_mention_prob),
        ("coordinated_organic_mention_prob", cfg.coordinated_organic_mention_prob),
        ("within_cell_mention_prob", cfg.within_cell_mention_prob),
    ] {
        if !(0.0..=1.0).contains(&p) {
            errors.push(format!("{name} must be in [0, 1]"));
        }
    }
    if cfg.cell_size < 2 {
        errors.push("cell_size must be at least 2".to_string());
    }
    if errors.is_empty() {
        Ok(warnings)
    } else {
        Err(errors)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TweetLabel {
    pub campaign: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub template_id: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub topic_id: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GroundTruth {
    pub coordinated_agents: BTreeSet<String>,
    pub influencers: BTreeSet<String>,
    pub decoy_targets: BTreeSet<String>,
    pub bot_flags: BTreeMap<String, bool>,
    pub tweet_labels: BTreeMap<String, TweetLabel>,
    pub anomalous_hashtags: BTreeSet<String>,
}

pub struct GeneratedCampaign {
    pub tweets: Vec<Tweet>,
    pub agents: BTreeMap<String, Agent>,
    pub truth: GroundTruth,
}

struct AgentPlan {
    agent: Agent,
    /// organic cell index; usize::MAX for non-organic agents
    cell: usize,
    topic: usize,
}

fn sample_anomalous_tags(rng: &mut ChaCha8Rng, n: usize, forbidden: &BTreeSet<String>) -> Vec<String> {
    const ALPHABET: &[u8] = b"abcdefghijklmnopqrstuvwxyz0123456789";
    let mut tags = BTreeSet::new();
    while tags.len() < n {
        let tag: String = (0..4)
            .map(|_| ALPHABET[rng.gen_range(0..ALPHABET.len())] as char)
            .collect();
        if is_anomalous_hashtag(&tag) && !forbidden.contains(&tag) {
            tags.insert(tag);
        }
    }
    tags.into_iter().collect()
}

/// Generate a labeled campaign. Deterministic for a given config.
pub fn generate(cfg: &CampaignConfig) -> Result<GeneratedCampaign, SynthError> {
    validate_config(cfg).map_err(SynthError::InvalidConfig)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let base_day = Utc.with_ymd_and_hms(2021, 5, 14, 0, 0, 0).unwrap();
    let n_topics = cfg.organic_topic_vocabularies.len();

    let forbidden: BTreeSet<String> = cfg
        .organic_hashtag_pools
        .iter()
        .flatten()
        .cloned()
        .collect();
    let anomalous_tags = sample_anomalous_tags(&mut rng, cfg.n_anomalous_hashtags, &forbidden);

    // ---- agents -------------------------------------------------------
    let mut agents: BTreeMap<String, Agent> = BTreeMap::new();
    let mut plans: Vec<AgentPlan> = Vec::new();
    let mut bot_flags: BTreeMap<String, bool> = BTreeMap::new();

    let mut organic_ids = Vec::new();
    for i in 0..cfg.n_organic_agents {
        let id = format!("org{i:05}");
        let bot = rng.gen_bool(cfg.bot_fraction_organic);
        let p = if bot {
            0.55 + 0.40 * rng.gen::<f64>()
        } else {
            0.02 + 0.43 * rng.gen::<f64>()
        };
        let agent = Agent {
            id: id.clone(),
            screen_name_hash: Some(format!("h{i:05x}")),
            followers_count: Some(10 + rng.gen_range(0..990)),
            following_count: Some(10 + rng.gen_range(0..500)),
            verified: Some(false),
            bot_probability: Some(p),
        };
        bot_flags.insert(id.clone(), bot);
        let cell = i / cfg.cell_size;
        plans.push(AgentPlan {
            agent: agent.clone(),
            cell,
            topic: cell % n_topics,
        });
        agents.insert(id.clone(), agent);
        organic_ids.push(id);
    }
    let n_cells = cfg.n_organic_agents.div_ceil(cfg.cell_size);

    let mut influencer_ids = Vec::new();
    for i in 0..cfg.n_influencers {
        let id = format!("inf{i:03}");
        let agent = Agent {
            id: id.clone(),
            screen_name_hash: Some(format!("hi{i:04x}")),
            followers_count: Some(100_000 + rng.gen_range(0..50_000)),
            following_count: Some(100 + rng.gen_range(0..900)),
            verified: Some(true),
            bot_probability: Some(0.02 + 0.08 * rng.gen::<f64>()),
        };
        bot_flags.insert(id.clone(), false);
        plans.push(AgentPlan {
            agent: agent.clone(),
            cell: usize::MAX,
            topic: i % n_topics,
        });
        agents.insert(id.clone(), agent);
        influencer_ids.push(id);
    }

    let mut decoy_ids = Vec::new();
    for i in 0..cfg.n_decoy_targets {
        let id = format!("dcy{i:03}");
        let agent = Agent {
            id: id.clone(),
            screen_name_hash: Some(format!("hd{i:04x}")),
            followers_count: Some(1 + rng.gen_range(0..10)),
            following_count: Some(rng.gen_range(0..50)),
            verified: Some(false),
            bot_probability: Some(0.60 + 0.30 * rng.gen::<f64>()),
        };
        bot_flags.insert(id.clone(), true);
        plans.push(AgentPlan {
            agent: agent.clone(),
            cell: usize::MAX,
            topic: i % n_topics,
        });
        agents.insert(id.clone(), agent);
        decoy_ids.push(id);
    }

    // exact bot proportion among coordinated agents
    let mut coordinated_ids = Vec::new();
    let n_coord_bots =
        (cfg.bot_fraction_coordinated * cfg.n_coordinated_agents as f64).round() as usize;
    let mut coord_bot_order: Vec<usize> = (0..cfg.n_coordinated_agents).collect();
    coord_bot_order.shuffle(&mut rng);
    let coord_bot_set: BTreeSet<usize> = coord_bot_order.into_iter().take(n_coord_bots).collect();
    for i in 0..cfg.n_coordinated_agents {
        let id = format!("coord{i:04}");
        let bot = coord_bot_set.contains(&i);
        let p = if bot {
            0.55 + 0.40 * rng.gen::<f64>()
        } else {
            0.02 + 0.43 * rng.gen::<f64>()
        };
        let agent = Agent {
            id: id.clone(),
            screen_name_hash: Some(format!("hc{i:04x}")),
            followers_count: Some(5 + rng.gen_range(0..45)),
            following_count: Some(50 + rng.gen_range(0..450)),
            verified: Some(false),
            bot_probability: Some(p),
        };
        bot_flags.insert(id.clone(), bot);
        agents.insert(id.clone(), agent);
        coordinated_ids.push(id);
    }

    // ---- tweets -------------------------------------------------------
    let mut tweets: Vec<Tweet> = Vec::new();
    let mut tweet_labels: BTreeMap<String, TweetLabel> = BTreeMap::new();
    let mut tweet_no = 0usize;
    let next_id = |n: &mut usize| {
        let id = format!("tw{:07}", *n);
        *n += 1;
        id
    };
    let timestamp = |rng: &mut ChaCha8Rng, day: u32| {
        base_day + Duration::days(day as i64) + Duration::seconds(rng.gen_range(0..86_400))
    };

    let cell_members: Vec<Vec<usize>> = {
        let mut cells = vec![Vec::new(); n_cells];
        for (i, p) in plans.iter().enumerate() {
            if p.cell != usize::MAX {
                cells[p.cell].push(i);
            }
        }
        cells
    };

    // organic background
    for (pi, plan) in plans.iter().enumerate() {
        if plan.cell == usize::MAX {
            continue;
        }
        let vocab = &cfg.organic_topic_vocabularies[plan.topic];
        let pool = &cfg.organic_hashtag_pools[plan.topic];
        // Pre-onset mentions follow a fixed ring: every third tweet goes
        // to a distinct agent in a neighbouring cell, the rest to
        // distinct cell neighbours. All mention pairs are unique, so each
        // cell sees exactly as many distinct external links (in plus out)
        // as internal ones and its pre-onset E/I is 0 by construction.
        let mut pre_k = 0usize;
        for day in 0..cfg.n_days {
            for _ in 0..cfg.organic_tweets_per_day {
                let words: Vec<&str> = (0..8)
                    .map(|_| vocab[rng.gen_range(0..vocab.len())].as_str())
                    .collect();
                let tag = pool[rng.gen_range(0..pool.len())].clone();
                let target = if day < cfg.polarization_onset_day {
                    let k = pre_k;
                    pre_k += 1;
                    if k % 3 == 2 {
                        // cross-cell: offsets cell_size and 2*cell_size+1
                        // never produce the same unordered pair twice
                        let hop = (k / 3 + 1) * cfg.cell_size + k / 3;
                        let mut t = (pi + hop) % organic_ids.len();
                        while plans[t].cell == plan.cell {
                            t = (t + cfg.cell_size) % organic_ids.len();
                        }
                        organic_ids[t].clone()
                    } else {
                        let members = &cell_members[plan.cell];
                        let local = members.iter().position(|&m| m == pi).expect("member");
                        let step = 1 + k - k / 3; // distinct offsets 1, 2, 3, 4, ...
                        let t = members[(local + step) % members.len()];
                        if t == pi {
                            plans[members[(local + 1) % members.len()]].agent.id.clone()
                        } else {
                            plans[t].agent.id.clone()
                        }
                    }
                } else if rng.gen_bool(cfg.within_cell_mention_prob) {
                    let members = &cell_members[plan.cell];
                    loop {
                        let t = members[rng.gen_range(0..members.len())];
                        if t != pi {
                            break plans[t].agent.id.clone();
                        }
                    }
                } else {
                    loop {
                        let t = rng.gen_range(0..organic_ids.len());
                        if plans[t].cell != plan.cell {
                            break organic_ids[t].clone();
                        }
                    }
                };
                let id = next_id(&mut tweet_no);
                tweet_labels.insert(
                    id.clone(),
                    TweetLabel {
                        campaign: false,
                        template_id: None,
                        topic_id: Some(plan.topic),
                    },
                );
                tweets.push(Tweet {
                    id,
                    author_id: plan.agent.id.clone(),
                    created_at: timestamp(&mut rng, day),
                    text: words.join(" "),
                    hashtags: vec![tag],
                    mentions: vec![target],
                    retweet_of_author: None,
                    urls: vec![],
                });
            }
        }
    }

    // influencers: visible supportive posting, mentioning a fellow
    // influencer of the same topic where one exists
    for (i, id) in influencer_ids.iter().enumerate() {
        let topic = i % n_topics;
        let vocab = &cfg.organic_topic_vocabularies[topic];
        let partner = influencer_ids
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != i && *j % n_topics == topic)
            .map(|(_, p)| p.clone())
            .next()
            .unwrap_or_else(|| influencer_ids[(i + 1) % influencer_ids.len()].clone());
        for day in 0..cfg.n_days {
            for _ in 0..2 {
                let words: Vec<&str> = (0..6)
                    .map(|_| vocab[rng.gen_range(0..vocab.len())].as_str())
                    .collect();
                let tid = next_id(&mut tweet_no);
                tweet_labels.insert(
                    tid.clone(),
                    TweetLabel {
                        campaign: false,
                        template_id: None,
                        topic_id: Some(topic),
                    },
                );
                tweets.push(Tweet {
                    id: tid,
                    author_id: id.clone(),
                    created_at: timestamp(&mut rng, day),
                    text: format!("ayo {}", words.join(" ")),
                    hashtags: vec![],
                    mentions: vec![partner.clone()],
                    retweet_of_author: None,
                    urls: vec![],
                });
            }
        }
    }

    // decoy targets: plain low-signal posting, no mentions
    for (i, id) in decoy_ids.iter().enumerate() {
        let topic = i % n_topics;
        let vocab = &cfg.organic_topic_vocabularies[topic];
        for day in 0..cfg.n_days {
            let words: Vec<&str> = (0..6)
                .map(|_| vocab[rng.gen_range(0..vocab.len())].as_str())
                .collect();
            let tid = next_id(&mut tweet_no);
            tweet_labels.insert(
                tid.clone(),
                TweetLabel {
                    campaign: false,
                    template_id: None,
                    topic_id: Some(topic),
                },
            );
            tweets.push(Tweet {
                id: tid,
                author_id: id.clone(),
                created_at: timestamp(&mut rng, day),
                text: words.join(" "),
                hashtags: vec![],
                mentions: vec![],
                retweet_of_author: None,
                urls: vec![],
            });
        }
    }

    // coordinated campaign: burst-day concentration, templated text,
    // hijacked proper tag plus an anomalous marker tag, mentions aimed at
    // influencers, fellow coordinated agents, and decoys
    let non_burst_days: Vec<u32> = (0..cfg.polarization_onset_day.max(1))
        .filter(|&d| d != cfg.burst_day)
        .collect();
    for (ci, id) in coordinated_ids.iter().enumerate() {
        let total = cfg.coordinated_tweets_per_agent;
        let on_burst = (cfg.burst_fraction * total as f64).ceil() as u32;
        for k in 0..total {
            let day = if k < on_burst || non_burst_days.is_empty() {
                cfg.burst_day
            } else {
                non_burst_days[rng.gen_range(0..non_burst_days.len())]
            };
            let template_id = rng.gen_range(0..cfg.coordinated_templates.len());
            let text = cfg.coordinated_templates[template_id]
                .replace(
                    "{time}",
                    &cfg.template_times[rng.gen_range(0..cfg.template_times.len().max(1))],
                )
                .replace(
                    "{city}",
                    &cfg.template_cities[rng.gen_range(0..cfg.template_cities.len().max(1))],
                );
            let mut mentions = vec![influencer_ids[rng.gen_range(0..influencer_ids.len())].clone()];
            if rng.gen_bool(cfg.coordinated_intra_mention_prob) {
                loop {
                    let j = rng.gen_range(0..coordinated_ids.len());
                    if j != ci {
                        mentions.push(coordinated_ids[j].clone());
                        break;
                    }
                }
            }
            if !decoy_ids.is_empty() && rng.gen_bool(cfg.coordinated_decoy_mention_prob) {
                mentions.push(decoy_ids[rng.gen_range(0..decoy_ids.len())].clone());
            }
            if rng.gen_bool(cfg.coordinated_organic_mention_prob) {
                mentions.push(organic_ids[rng.gen_range(0..organic_ids.len())].clone());
            }
            // each agent rides one fixed trending tag, keeping every
            // tag's distinct-user majority inside an organic cell
            let n_pools = cfg.organic_hashtag_pools.len();
            let pool = &cfg.organic_hashtag_pools[ci % n_pools];
            let hashtags = vec![
                pool[(ci / n_pools) % pool.len()].clone(),
                anomalous_tags[rng.gen_range(0..anomalous_tags.len())].clone(),
            ];
            let tid = next_id(&mut tweet_no);
            tweet_labels.insert(
                tid.clone(),
                TweetLabel {
                    campaign: true,
                    template_id: Some(template_id),
                    topic_id: None,
                },
            );
            tweets.push(Tweet {
                id: tid,
                author_id: id.clone(),
                created_at: timestamp(&mut rng, day),
                text,
                hashtags,
                mentions,
                retweet_of_author: None,
                urls: vec![],
            });
        }
    }

    let truth = GroundTruth {
        coordinated_agents: coordinated_ids.iter().cloned().collect(),
        influencers: influencer_ids.iter().cloned().collect(),
        decoy_targets: decoy_ids.iter().cloned().collect(),
        bot_flags,
        tweet_labels,
        anomalous_hashtags: anomalous_tags.into_iter().collect(),
    };
    let campaign = GeneratedCampaign {
        tweets,
        agents,
        truth,
    };
    self_check(cfg, &campaign)?;
    Ok(campaign)
}

/// Post-generation assertions on the planted proportions.
fn self_check(cfg: &CampaignConfig, c: &GeneratedCampaign) -> Result<(), SynthError> {
    let fail = |msg: String| Err(SynthError::SelfCheck(msg));

    // every coordinated tweet carries an anomalous tag; no organic does
    for t in &c.tweets {
        let is_campaign = c.truth.tweet_labels[&t.id].campaign;
        let has_anomalous = t.hashtags.iter().any(|h| is_anomalous_hashtag(h));
        if is_campaign != has_anomalous {
            return fail(format!("tweet {} anomalous-tag mismatch", t.id));
        }
    }

    // burst concentration by construction
    let mut per_day: BTreeMap<i64, usize> = BTreeMap::new();
    let mut total = 0usize;
    for t in &c.tweets {
        if c.truth.coordinated_agents.contains(&t.author_id) {
            *per_day.entry(t.created_at.timestamp() / 86_400).or_insert(0) += 1;
            total += 1;
        }
    }
    let peak = per_day.values().copied().max().unwrap_or(0);
    if total > 0 && (peak as f64) < cfg.burst_fraction * total as f64 {
        return fail(format!(
            "burst peak {peak}/{total} below configured fraction {}",
            cfg.burst_fraction
        ));
    }

    // exact coordinated bot proportion
    let coord_bots = c
        .truth
        .coordinated_agents
        .iter()
        .filter(|a| c.truth.bot_flags[*a])
        .count();
    let expected =
        (cfg.bot_fraction_coordinated * cfg.n_coordinated_agents as f64).round() as usize;
    if coord_bots != expected {
        return fail(format!("coordinated bots {coord_bots} != planted {expected}"));
    }

    // organic bots within binomial 3 sigma
    let n = cfg.n_organic_agents as f64;
    let organic_bots = c
        .truth
        .bot_flags
        .iter()
        .filter(|(id, &b)| b && id.starts_with("org"))
        .count() as f64;
    let sigma = (n * cfg.bot_fraction_organic * (1.0 - cfg.bot_fraction_organic)).sqrt();
    if (organic_bots - n * cfg.bot_fraction_organic).abs() > 3.0 * sigma {
        return fail(format!("organic bot count {organic_bots} outside 3 sigma"));
    }

    // influencer followers dominate everyone else's
    let max_other = c
        .agents
        .values()
        .filter(|a| !c.truth.influencers.contains(&a.id))
        .filter_map(|a| a.followers_count)
        .max()
        .unwrap_or(0);
    let min_inf = c
        .agents
        .values()
        .filter(|a| c.truth.influencers.contains(&a.id))
        .filter_map(|a| a.followers_count)
        .min()
        .unwrap_or(0);
    if min_inf <= max_other {
        return fail(format!(
            "influencer followers {min_inf} do not dominate organic max {max_other}"
        ));
    }
    Ok(())
}

/// Serialize the corpus in the line-record input schema.
pub fn corpus_records(c: &GeneratedCampaign) -> String {
    let mut out = String::new();
    for t in &c.tweets {
        let author = &c.agents[&t.author_id];
        let mut record = serde_json::to_value(t).expect("tweet serializes");
        record["author"] = serde_json::to_value(author).expect("agent serializes");
        out.push_str(&record.to_string());
        out.push('\n');
    }
    out
}

/// Write corpus and ground truth files.
pub fn write_campaign(
    c: &GeneratedCampaign,
    corpus_path: impl AsRef<Path>,
    truth_path: impl AsRef<Path>,
) -> Result<(), SynthError> {
    std::fs::write(corpus_path, corpus_records(c))?;
    let truth = serde_json::to_string_pretty(&c.truth).expect("truth serializes");
    std::fs::write(truth_path, truth)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::load_corpus;
    use crate::discovery::{burst_concentration, extract_coordinated_agents, DiscoveryConfig};

    #[test]
    fn default_config_validates() {
        assert!(validate_config(&CampaignConfig::default()).is_ok());
    }

    #[test]
    fn shipped_default_config_matches_default_impl() {
        let text = include_str!("../assets/default_campaign.toml");
        let parsed: CampaignConfig = toml::from_str(text).unwrap();
        assert_eq!(
            toml::to_string_pretty(&parsed).unwrap(),
            toml::to_string_pretty(&CampaignConfig::default()).unwrap()
        );
    }

    #[test]
    fn config_validation_errors() {
        let mut cfg = CampaignConfig::default();
        cfg.burst_day = cfg.n_days;
        assert!(validate_config(&cfg).is_err());

        let mut cfg = CampaignConfig::default();
        cfg.organic_topic_vocabularies[1] =
            cfg.organic_topic_vocabularies[0].clone();
        assert!(validate_config(&cfg).is_err());
    }

    fn small_config(seed: u64) -> CampaignConfig {
        CampaignConfig {
            n_organic_agents: 80,
            n_coordinated_agents: 10,
            n_influencers: 3,
            n_decoy_targets: 4,
            cell_size: 20,
            seed,
            ..CampaignConfig::default()
        }
    }

    #[test]
    fn deterministic_per_seed() {
        let a = generate(&small_config(7)).unwrap();
        let b = generate(&small_config(7)).unwrap();
        assert_eq!(corpus_records(&a), corpus_records(&b));
        assert_eq!(
            serde_json::to_string(&a.truth).unwrap(),
            serde_json::to_string(&b.truth).unwrap()
        );
    }

    #[test]
    fn emitted_corpus_parses_and_discovery_recovers_planted_agents() {
        let cfg = small_config(3);
        let c = generate(&cfg).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("corpus.jsonl");
        write_campaign(&c, &path, dir.path().join("truth.json")).unwrap();

        let corpus = load_corpus(&path).unwrap();
        assert_eq!(corpus.tweets.len(), c.tweets.len());

        let r = extract_coordinated_agents(&corpus, &DiscoveryConfig::default());
        assert_eq!(r.coordinated_agents, c.truth.coordinated_agents);
        assert_eq!(r.coordinated_agents.len(), 10);
    }

    #[test]
    fn burst_fraction_holds_by_construction() {
        let cfg = small_config(5);
        let c = generate(&cfg).unwrap();
        let corpus =
            crate::corpus::Corpus::from_tweets(c.tweets.clone(), c.agents.clone()).unwrap();
        let p = burst_concentration(&corpus, &c.truth.coordinated_agents).unwrap();
        assert!(p.peak_fraction >= cfg.burst_fraction);
    }

    #[test]
    fn anomalous_tags_partition_campaign_from_organic() {
        let c = generate(&small_config(11)).unwrap();
        for t in &c.tweets {
            let campaign = c.truth.tweet_labels[&t.id].campaign;
            assert_eq!(
                campaign,
                t.hashtags.iter().any(|h| is_anomalous_hashtag(h)),
                "tweet {}",
                t.id
            );
        }
    }
}
