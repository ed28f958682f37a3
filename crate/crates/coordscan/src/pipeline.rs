//! End-to-end orchestration: DISCOVERY → WHO → DID WHAT → TO WHOM → WHY
//! → IMPACT, reading one line-record corpus and writing a bundle of plain
//! report files under a run directory.
//!
//! Every artifact is a pure function of the input bytes and the config;
//! nothing time- or environment-dependent is written, so reruns are
//! byte-identical and diffable.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use chrono::{DateTime, Duration, Timelike, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bend::{
    compare_groups, default_lexicon, load_lexicon, GroupComparison, Lexicon, Maneuver,
    ManeuverContext, ManeuverWeights,
};
use crate::community::louvain;
use crate::corpus::{self, corpus_stats, load_corpus, Corpus, CorpusStats};
use crate::discovery::{
    burst_concentration, extract_coordinated_agents, BurstProfile, DiscoveryConfig,
    DiscoveryResult,
};
use crate::graph::{
    build_communication_network, build_hashtag_cooccurrence, centrality_scores, export_graph,
    CentralityScores, ExportFormat, NodeAttributes,
};
use crate::impact::{polarization_report, EIReport};
use crate::narrative::{
    coherence, default_stopwords, fit_lda, parse_stopwords, preprocess, top_words,
};
use crate::targeting::{correlation_table, extract_targets, CorrelationTable, TargetAttribute};

#[derive(Debug, Error)]
#[error("stage {stage}: {message}")]
pub struct PipelineError {
    pub stage: &'static str,
    pub message: String,
}

fn stage_err(stage: &'static str, e: impl std::fmt::Display) -> PipelineError {
    PipelineError {
        stage,
        message: e.to_string(),
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub input: PathBuf,
    pub output_dir: PathBuf,
    /// DISCOVERY examines the first `discovery_window_days` UTC days of
    /// the corpus; IMPACT contrasts that window (minus the discovered
    /// agents) against everything after it.
    pub discovery_window_days: u32,
    pub bot_threshold: f64,
    pub min_cluster_fraction: f64,
    pub min_cluster_size: usize,
    pub louvain_resolution: f64,
    pub louvain_seed: u64,
    /// Empty paths select the built-in Indonesian resources.
    pub lexicon_path: Option<PathBuf>,
    pub stopword_path: Option<PathBuf>,
    pub leader_percentile: f64,
    /// maneuver name -> per-indicator weights (uniform when absent)
    pub maneuver_weights: BTreeMap<String, Vec<f64>>,
    pub ratio_threshold: f64,
    pub lda_k: usize,
    pub lda_alpha: f64,
    pub lda_beta: f64,
    pub lda_iters: usize,
    pub lda_seed: u64,
    pub lda_top_words: usize,
    pub weighted_ei: bool,
    pub export_format: String,
    pub eigenvector_tol: f64,
    pub eigenvector_max_iter: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            input: PathBuf::from("corpus.jsonl"),
            output_dir: PathBuf::from("run"),
            discovery_window_days: 3,
            bot_threshold: 0.5,
            min_cluster_fraction: 0.5,
            min_cluster_size: 3,
            louvain_resolution: 1.0,
            louvain_seed: 0,
            lexicon_path: None,
            stopword_path: None,
            leader_percentile: 0.9,
            maneuver_weights: BTreeMap::new(),
            ratio_threshold: 0.5,
            lda_k: 2,
            lda_alpha: 0.0,
            lda_beta: 0.01,
            lda_iters: 200,
            lda_seed: 0,
            lda_top_words: 10,
            weighted_ei: false,
            export_format: "graphml".to_string(),
            eigenvector_tol: 1e-10,
            eigenvector_max_iter: 10_000,
        }
    }
}

pub fn load_pipeline_config(path: impl AsRef<Path>) -> Result<PipelineConfig, PipelineError> {
    let text = std::fs::read_to_string(path.as_ref())
        .map_err(|e| stage_err("config", format!("{}: {e}", path.as_ref().display())))?;
    toml::from_str(&text).map_err(|e| stage_err("config", e))
}

fn parse_maneuver(name: &str) -> Option<Maneuver> {
    Maneuver::ALL.into_iter().find(|m| m.to_string() == name)
}

fn maneuver_weights(cfg: &PipelineConfig) -> Result<ManeuverWeights, PipelineError> {
    let mut overrides = BTreeMap::new();
    for (name, w) in &cfg.maneuver_weights {
        let m = parse_maneuver(name)
            .ok_or_else(|| stage_err("config", format!("unknown maneuver `{name}`")))?;
        overrides.insert(m, w.clone());
    }
    Ok(ManeuverWeights { overrides })
}

#[derive(Debug, Clone, Serialize)]
pub struct TopicReport {
    pub k: usize,
    pub top_words: Vec<Vec<String>>,
    pub coherence: Vec<f64>,
    pub documents: usize,
    pub vocabulary: usize,
    pub dropped_documents: usize,
}

#[derive(Debug)]
pub struct ReportBundle {
    pub discovery: DiscoveryResult,
    pub stats: Vec<(String, CorpusStats)>,
    pub coordinated_burst: BurstProfile,
    pub organic_burst: BurstProfile,
    pub maneuvers: GroupComparison,
    pub correlations: CorrelationTable,
    pub topics: TopicReport,
    pub ei: EIReport,
    /// Relative artifact file names under the output directory.
    pub artifacts: Vec<String>,
}

/// Render dataset statistics: one row per dataset with
/// agent count, tweet count, and bot percentage at one decimal.
pub fn render_stats_table(rows: &[(String, CorpusStats)]) -> String {
    let mut out = String::from("dataset,agents,tweets,bots\n");
    for (name, s) in rows {
        let _ = writeln!(
            out,
            "{name},{},{},{:.1}%",
            s.num_agents, s.num_tweets, s.bot_percentage
        );
    }
    out
}

fn render_burst(rows: &[(&str, &BurstProfile)]) -> String {
    let mut out = String::from("group,date,count,peak_fraction\n");
    for (name, p) in rows {
        for (day, n) in &p.per_day_counts {
            let _ = writeln!(out, "{name},{day},{n},{}", p.peak_fraction);
        }
    }
    out
}

fn render_maneuvers(c: &GroupComparison) -> String {
    let mut out = String::from("maneuver,coordinated_mean,other_mean,difference\n");
    for row in &c.rows {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            row.maneuver, row.mean_a, row.mean_b, row.difference
        );
    }
    out
}

fn render_correlations(t: &CorrelationTable) -> String {
    let mut out = String::from("maneuver,attribute,r,samples\n");
    for m in Maneuver::ALL {
        for a in TargetAttribute::ALL {
            let cell = t.cell(m, a);
            let r = cell.r.map_or(String::new(), |r| r.to_string());
            let _ = writeln!(out, "{m},{a},{r},{}", cell.samples);
        }
    }
    out
}

fn render_topics(t: &TopicReport) -> String {
    let mut out = String::from("topic,coherence,top_words\n");
    for (i, words) in t.top_words.iter().enumerate() {
        let _ = writeln!(out, "{i},{},{}", t.coherence[i], words.join(" "));
    }
    out
}

fn render_ei(r: &EIReport) -> String {
    let mut out = String::from(
        "subgroup,size,internal_links,external_links,ei_index,baseline_ei,baseline_nodes_present\n",
    );
    for row in &r.rows {
        let baseline = row.baseline_ei.map_or(String::new(), |v| v.to_string());
        let _ = writeln!(
            out,
            "{},{},{},{},{},{baseline},{}",
            row.subgroup,
            row.size,
            row.internal_links,
            row.external_links,
            row.ei_index,
            row.baseline_nodes_present
        );
    }
    out
}

fn load_resources(cfg: &PipelineConfig) -> Result<(Lexicon, BTreeSet<String>), PipelineError> {
    let lexicon = match &cfg.lexicon_path {
        Some(p) => load_lexicon(p).map_err(|e| stage_err("didwhat", e))?,
        None => default_lexicon(),
    };
    let stopwords = match &cfg.stopword_path {
        Some(p) => {
            let text =
                std::fs::read_to_string(p).map_err(|e| stage_err("why", format!("{}: {e}", p.display())))?;
            parse_stopwords(&text)
        }
        None => default_stopwords(),
    };
    Ok((lexicon, stopwords))
}

fn day_floor(t: DateTime<Utc>) -> DateTime<Utc> {
    t - Duration::seconds(i64::from(t.num_seconds_from_midnight()))
}

/// Run all six stages, writing each stage's artifacts before the next
/// stage starts so a failure preserves everything already produced.
pub fn run_pipeline(cfg: &PipelineConfig) -> Result<ReportBundle, PipelineError> {
    let out = &cfg.output_dir;
    std::fs::create_dir_all(out).map_err(|e| stage_err("setup", e))?;
    let mut artifacts: Vec<String> = Vec::new();
    fn emit_into(
        out: &Path,
        artifacts: &mut Vec<String>,
        name: &str,
        content: &str,
    ) -> Result<(), PipelineError> {
        std::fs::write(out.join(name), content).map_err(|e| stage_err("emit", e))?;
        artifacts.push(name.to_string());
        Ok(())
    }
    macro_rules! emit {
        ($name:expr, $content:expr $(,)?) => {
            emit_into(out, &mut artifacts, $name, $content)?
        };
    }

    let (lexicon, stopwords) = load_resources(cfg)?;
    let weights = maneuver_weights(cfg)?;
    let export_format: ExportFormat = cfg
        .export_format
        .parse()
        .map_err(|e| stage_err("config", e))?;

    // ---- DISCOVERY ----------------------------------------------------
    let mut full = load_corpus(&cfg.input).map_err(|e| stage_err("discovery", e))?;
    if full.is_empty() {
        return Err(stage_err(
            "discovery",
            format!("{}: corpus contains zero tweets", cfg.input.display()),
        ));
    }
    corpus::apply_fallback_bot_heuristic(&mut full);
    let (t0, _) = full.time_span.expect("non-empty corpus has a span");
    let window_end = day_floor(t0) + Duration::days(i64::from(cfg.discovery_window_days));
    let discovery_corpus =
        corpus::window(&full, day_floor(t0), window_end).map_err(|e| stage_err("discovery", e))?;
    if discovery_corpus.is_empty() {
        return Err(stage_err("discovery", "discovery window contains no tweets"));
    }
    let dcfg = DiscoveryConfig {
        min_cluster_fraction: cfg.min_cluster_fraction,
        min_cluster_size: cfg.min_cluster_size,
        louvain_resolution: cfg.louvain_resolution,
        louvain_seed: cfg.louvain_seed,
    };
    let discovery = extract_coordinated_agents(&discovery_corpus, &dcfg);
    let discovery_json =
        serde_json::to_string_pretty(&discovery).map_err(|e| stage_err("discovery", e))?;
    emit!("discovery.json", &format!("{discovery_json}\n"));

    let tag_graph = build_hashtag_cooccurrence(&discovery_corpus);
    export_graph(
        &tag_graph,
        export_format,
        &NodeAttributes::default(),
        out.join(export_name("hashtag_cooccurrence", export_format)),
    )
    .map_err(|e| stage_err("discovery", e))?;
    artifacts.push(export_name("hashtag_cooccurrence", export_format));

    let coordinated = &discovery.coordinated_agents;
    let organic: BTreeSet<String> = full
        .agents
        .keys()
        .filter(|a| !coordinated.contains(*a))
        .cloned()
        .collect();

    // ---- WHO ----------------------------------------------------------
    let stats = vec![
        (
            "all".to_string(),
            corpus_stats(&full, None, cfg.bot_threshold).map_err(|e| stage_err("who", e))?,
        ),
        (
            "coordinated".to_string(),
            corpus_stats(&full, Some(coordinated), cfg.bot_threshold)
                .map_err(|e| stage_err("who", e))?,
        ),
        (
            "other".to_string(),
            corpus_stats(&full, Some(&organic), cfg.bot_threshold)
                .map_err(|e| stage_err("who", e))?,
        ),
    ];
    emit!("corpus_stats.csv", &render_stats_table(&stats));

    let coordinated_burst =
        burst_concentration(&full, coordinated).map_err(|e| stage_err("who", e))?;
    let organic_burst = burst_concentration(&full, &organic).map_err(|e| stage_err("who", e))?;
    emit!(
        "burst.csv",
        &render_burst(&[
            ("coordinated", &coordinated_burst),
            ("other", &organic_burst),
        ]),
    );

    // ---- DID WHAT -----------------------------------------------------
    let comm = build_communication_network(&full);
    let partition = louvain(&comm, cfg.louvain_resolution, cfg.louvain_seed).partition;
    let ctx = ManeuverContext::build(&full, partition.clone(), cfg.leader_percentile)
        .map_err(|e| stage_err("didwhat", e))?;
    let maneuvers = compare_groups(coordinated, &organic, &full, &ctx, &lexicon, &weights)
        .map_err(|e| stage_err("didwhat", e))?;
    emit!("maneuvers.csv", &render_maneuvers(&maneuvers));
    export_graph(
        &comm,
        export_format,
        &NodeAttributes {
            community: partition.assignment.clone(),
            discovered: coordinated.clone(),
        },
        out.join(export_name("communication", export_format)),
    )
    .map_err(|e| stage_err("didwhat", e))?;
    artifacts.push(export_name("communication", export_format));

    // ---- TO WHOM ------------------------------------------------------
    let targets = extract_targets(&full, coordinated);
    let centralities: CentralityScores =
        centrality_scores(&comm, cfg.eigenvector_tol, cfg.eigenvector_max_iter);
    let correlations = correlation_table(
        &targets,
        &full,
        &ctx,
        &lexicon,
        &weights,
        cfg.ratio_threshold,
        &comm,
        &centralities,
    )
    .map_err(|e| stage_err("towhom", e))?;
    emit!("correlations.csv", &render_correlations(&correlations));

    // ---- WHY ----------------------------------------------------------
    let campaign_tweets: Vec<_> = full
        .tweets
        .iter()
        .filter(|t| coordinated.contains(&t.author_id))
        .cloned()
        .collect();
    let ds = preprocess(&campaign_tweets, &stopwords);
    let model = fit_lda(
        &ds,
        cfg.lda_k,
        cfg.lda_alpha,
        cfg.lda_beta,
        cfg.lda_iters,
        cfg.lda_seed,
    )
    .map_err(|e| stage_err("why", e))?;
    let n_top = cfg.lda_top_words.min(ds.vocab_list.len());
    let topics = TopicReport {
        k: cfg.lda_k,
        top_words: top_words(&model, &ds, n_top),
        coherence: coherence(&model, &ds, n_top).map_err(|e| stage_err("why", e))?,
        documents: ds.docs.len(),
        vocabulary: ds.vocab_list.len(),
        dropped_documents: ds.dropped,
    };
    emit!("topics.csv", &render_topics(&topics));

    // ---- IMPACT -------------------------------------------------------
    // pre-activity baseline: the discovery window without the discovered
    // agents' own tweets; post-activity: everything after the window
    let pre_tweets: Vec<_> = discovery_corpus
        .tweets
        .iter()
        .filter(|t| !coordinated.contains(&t.author_id))
        .cloned()
        .collect();
    let pre = Corpus::from_tweets(pre_tweets, discovery_corpus.agents.clone())
        .map_err(|e| stage_err("impact", e))?;
    let (_, t_end) = full.time_span.expect("non-empty corpus has a span");
    let post = corpus::window(&full, window_end, t_end + Duration::seconds(1))
        .map_err(|e| stage_err("impact", e))?;
    let ei = polarization_report(
        &pre,
        &post,
        cfg.louvain_resolution,
        cfg.louvain_seed,
        cfg.weighted_ei,
    )
    .map_err(|e| stage_err("impact", e))?;
    emit!("ei_report.csv", &render_ei(&ei));

    // ---- manifest -----------------------------------------------------
    let config_echo = toml::to_string_pretty(cfg).map_err(|e| stage_err("emit", e))?;
    let manifest = format!(
        "version = \"{}\"\n\n[config]\n{config_echo}",
        env!("CARGO_PKG_VERSION")
    );
    emit!("manifest.toml", &manifest);

    Ok(ReportBundle {
        discovery,
        stats,
        coordinated_burst,
        organic_burst,
        maneuvers,
        correlations,
        topics,
        ei,
        artifacts,
    })
}

fn export_name(stem: &str, format: ExportFormat) -> String {
    let ext = match format {
        ExportFormat::GraphMl => "graphml",
        ExportFormat::Dot => "dot",
        ExportFormat::EdgeList => "edgelist",
    };
    format!("{stem}.{ext}")
}
