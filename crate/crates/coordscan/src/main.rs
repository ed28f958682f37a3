//! Command-line front end: the full six-stage run plus per-stage
//! subcommands that accept earlier-stage outputs as plain files.

use std::collections::BTreeSet;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use coordscan::bend::{compare_groups, default_lexicon, ManeuverContext, ManeuverWeights};
use coordscan::community::louvain;
use coordscan::corpus::{self, corpus_stats, load_corpus, Corpus};
use coordscan::discovery::{burst_concentration, extract_coordinated_agents, DiscoveryConfig};
use coordscan::graph::{
    build_communication_network, build_hashtag_cooccurrence, centrality_scores, export_graph,
    ExportFormat, NodeAttributes,
};
use coordscan::impact::polarization_report;
use coordscan::narrative::{coherence, default_stopwords, fit_lda, preprocess, top_words};
use coordscan::pipeline::{
    load_pipeline_config, render_stats_table, run_pipeline,
};
use coordscan::synthgen::{generate, validate_config, write_campaign, CampaignConfig};
use coordscan::targeting::{correlation_table, extract_targets};

#[derive(Parser)]
#[command(
    name = "coordscan",
    about = "Discover and profile coordinated hashtag-hijacking campaigns in microblog corpora",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct CorpusArgs {
    /// Line-delimited JSON corpus file
    #[arg(long)]
    input: PathBuf,
    /// Output directory for stage artifacts
    #[arg(long, default_value = "run")]
    output: PathBuf,
}

#[derive(clap::Args)]
struct AgentsArg {
    /// Discovered-agent list: one agent id per line (from `discover`)
    #[arg(long)]
    agents: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Run all six stages end to end from a config file
    Run {
        /// Pipeline config (structured key-value text)
        #[arg(long)]
        config: PathBuf,
        /// Override the configured input corpus
        #[arg(long)]
        input: Option<PathBuf>,
        /// Override the configured output directory
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Stage 1-2: flag anomalous hashtags and extract coordinated agents
    Discover {
        #[command(flatten)]
        corpus: CorpusArgs,
        #[arg(long, default_value_t = 1.0)]
        resolution: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "graphml")]
        format: String,
    },
    /// Stage WHO: dataset statistics and burst profile for a group
    Who {
        #[command(flatten)]
        corpus: CorpusArgs,
        #[command(flatten)]
        agents: AgentsArg,
        #[arg(long, default_value_t = 0.5)]
        bot_threshold: f64,
    },
    /// Stage DID WHAT: maneuver comparison of the group vs everyone else
    Didwhat {
        #[command(flatten)]
        corpus: CorpusArgs,
        #[command(flatten)]
        agents: AgentsArg,
        #[arg(long, default_value_t = 0.9)]
        leader_percentile: f64,
    },
    /// Stage TO WHOM: correlation of target maneuver ratios with metadata
    Towhom {
        #[command(flatten)]
        corpus: CorpusArgs,
        #[command(flatten)]
        agents: AgentsArg,
        #[arg(long, default_value_t = 0.9)]
        leader_percentile: f64,
        #[arg(long, default_value_t = 0.5)]
        ratio_threshold: f64,
    },
    /// Stage WHY: topic model over the group's tweets
    Why {
        #[command(flatten)]
        corpus: CorpusArgs,
        #[command(flatten)]
        agents: AgentsArg,
        #[arg(long, default_value_t = 2)]
        k: usize,
        #[arg(long, default_value_t = 200)]
        iters: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Stage IMPACT: pre/post E/I polarization report
    Impact {
        #[command(flatten)]
        corpus: CorpusArgs,
        #[command(flatten)]
        agents: AgentsArg,
        /// Days in the pre-activity window
        #[arg(long, default_value_t = 3)]
        window_days: u32,
        #[arg(long)]
        weighted: bool,
        #[arg(long, default_value_t = 1.0)]
        resolution: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Generate a labeled synthetic campaign corpus
    Synth {
        /// Campaign config; defaults describe the standard scenario
        #[arg(long)]
        config: Option<PathBuf>,
        /// Override the config's RNG seed
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = "run")]
        output: PathBuf,
    },
    /// Dataset statistics rows for the whole corpus or an agent subset
    Stats {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        agents: Option<PathBuf>,
        #[arg(long, default_value_t = 0.5)]
        bot_threshold: f64,
    },
}

fn read_agent_list(path: &PathBuf) -> Result<BTreeSet<String>> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("required agent list not found: {}", path.display()))?;
    Ok(text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_string)
        .collect())
}

fn load_prepared(path: &PathBuf) -> Result<Corpus> {
    let mut c = load_corpus(path).with_context(|| format!("reading {}", path.display()))?;
    if c.is_empty() {
        bail!("{}: corpus contains zero tweets", path.display());
    }
    corpus::apply_fallback_bot_heuristic(&mut c);
    Ok(c)
}

fn scored_context(
    corpus: &Corpus,
    leader_percentile: f64,
) -> Result<(coordscan::graph::WeightedGraph, ManeuverContext)> {
    let comm = build_communication_network(corpus);
    let partition = louvain(&comm, 1.0, 0).partition;
    let ctx = ManeuverContext::build(corpus, partition, leader_percentile)?;
    Ok((comm, ctx))
}

fn write_artifact(dir: &PathBuf, name: &str, content: &str) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let path = dir.join(name);
    std::fs::write(&path, content).with_context(|| format!("writing {}", path.display()))?;
    println!("wrote {}", path.display());
    Ok(())
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run {
            config,
            input,
            output,
        } => {
            let mut cfg = load_pipeline_config(&config)?;
            if let Some(input) = input {
                cfg.input = input;
            }
            if let Some(output) = output {
                cfg.output_dir = output;
            }
            let bundle = run_pipeline(&cfg)?;
            for a in &bundle.artifacts {
                println!("wrote {}", cfg.output_dir.join(a).display());
            }
        }
        Command::Discover {
            corpus,
            resolution,
            seed,
            format,
        } => {
            let c = load_prepared(&corpus.input)?;
            let dcfg = DiscoveryConfig {
                louvain_resolution: resolution,
                louvain_seed: seed,
                ..DiscoveryConfig::default()
            };
            let result = extract_coordinated_agents(&c, &dcfg);
            let json = serde_json::to_string_pretty(&result)?;
            write_artifact(&corpus.output, "discovery.json", &format!("{json}\n"))?;
            let list = result
                .coordinated_agents
                .iter()
                .map(|a| format!("{a}\n"))
                .collect::<String>();
            write_artifact(&corpus.output, "coordinated.list", &list)?;
            let fmt: ExportFormat = format.parse()?;
            let name = format!("hashtag_cooccurrence.{format}");
            export_graph(
                &build_hashtag_cooccurrence(&c),
                fmt,
                &NodeAttributes::default(),
                corpus.output.join(&name),
            )?;
            println!("wrote {}", corpus.output.join(&name).display());
        }
        Command::Who {
            corpus,
            agents,
            bot_threshold,
        } => {
            let c = load_prepared(&corpus.input)?;
            let group = read_agent_list(&agents.agents)?;
            let rest: BTreeSet<String> = c
                .agents
                .keys()
                .filter(|a| !group.contains(*a))
                .cloned()
                .collect();
            let rows = vec![
                ("all".to_string(), corpus_stats(&c, None, bot_threshold)?),
                (
                    "coordinated".to_string(),
                    corpus_stats(&c, Some(&group), bot_threshold)?,
                ),
                (
                    "other".to_string(),
                    corpus_stats(&c, Some(&rest), bot_threshold)?,
                ),
            ];
            write_artifact(&corpus.output, "corpus_stats.csv", &render_stats_table(&rows))?;
            let mut burst = String::from("group,date,count,peak_fraction\n");
            for (name, set) in [("coordinated", &group), ("other", &rest)] {
                let p = burst_concentration(&c, set)?;
                for (day, n) in &p.per_day_counts {
                    burst.push_str(&format!("{name},{day},{n},{}\n", p.peak_fraction));
                }
            }
            write_artifact(&corpus.output, "burst.csv", &burst)?;
        }
        Command::Didwhat {
            corpus,
            agents,
            leader_percentile,
        } => {
            let c = load_prepared(&corpus.input)?;
            let group = read_agent_list(&agents.agents)?;
            let rest: BTreeSet<String> = c
                .agents
                .keys()
                .filter(|a| !group.contains(*a))
                .cloned()
                .collect();
            let (_, ctx) = scored_context(&c, leader_percentile)?;
            let cmp = compare_groups(
                &group,
                &rest,
                &c,
                &ctx,
                &default_lexicon(),
                &ManeuverWeights::default(),
            )?;
            let mut out = String::from("maneuver,coordinated_mean,other_mean,difference\n");
            for row in &cmp.rows {
                out.push_str(&format!(
                    "{},{},{},{}\n",
                    row.maneuver, row.mean_a, row.mean_b, row.difference
                ));
            }
            write_artifact(&corpus.output, "maneuvers.csv", &out)?;
        }
        Command::Towhom {
            corpus,
            agents,
            leader_percentile,
            ratio_threshold,
        } => {
            let c = load_prepared(&corpus.input)?;
            let group = read_agent_list(&agents.agents)?;
            let (comm, ctx) = scored_context(&c, leader_percentile)?;
            let targets = extract_targets(&c, &group);
            let cent = centrality_scores(&comm, 1e-10, 10_000);
            let table = correlation_table(
                &targets,
                &c,
                &ctx,
                &default_lexicon(),
                &ManeuverWeights::default(),
                ratio_threshold,
                &comm,
                &cent,
            )?;
            let mut out = String::from("maneuver,attribute,r,samples\n");
            for m in coordscan::bend::Maneuver::ALL {
                for a in coordscan::targeting::TargetAttribute::ALL {
                    let cell = table.cell(m, a);
                    let r = cell.r.map_or(String::new(), |r| r.to_string());
                    out.push_str(&format!("{m},{a},{r},{}\n", cell.samples));
                }
            }
            write_artifact(&corpus.output, "correlations.csv", &out)?;
        }
        Command::Why {
            corpus,
            agents,
            k,
            iters,
            seed,
        } => {
            let c = load_prepared(&corpus.input)?;
            let group = read_agent_list(&agents.agents)?;
            let tweets: Vec<_> = c
                .tweets
                .iter()
                .filter(|t| group.contains(&t.author_id))
                .cloned()
                .collect();
            let ds = preprocess(&tweets, &default_stopwords());
            let model = fit_lda(&ds, k, 0.0, 0.01, iters, seed)?;
            let n_top = 10.min(ds.vocab_list.len());
            let tops = top_words(&model, &ds, n_top);
            let coh = coherence(&model, &ds, n_top)?;
            let mut out = String::from("topic,coherence,top_words\n");
            for (i, words) in tops.iter().enumerate() {
                out.push_str(&format!("{i},{},{}\n", coh[i], words.join(" ")));
            }
            write_artifact(&corpus.output, "topics.csv", &out)?;
        }
        Command::Impact {
            corpus,
            agents,
            window_days,
            weighted,
            resolution,
            seed,
        } => {
            let c = load_prepared(&corpus.input)?;
            let group = read_agent_list(&agents.agents)?;
            let (t0, t_end) = c.time_span.expect("non-empty corpus");
            let split = t0 + chrono::Duration::days(i64::from(window_days));
            let pre_window = corpus::window(&c, t0, split)?;
            let pre_tweets: Vec<_> = pre_window
                .tweets
                .iter()
                .filter(|t| !group.contains(&t.author_id))
                .cloned()
                .collect();
            let pre = Corpus::from_tweets(pre_tweets, pre_window.agents.clone())?;
            let post = corpus::window(&c, split, t_end + chrono::Duration::seconds(1))?;
            let report = polarization_report(&pre, &post, resolution, seed, weighted)?;
            let mut out = String::from(
                "subgroup,size,internal_links,external_links,ei_index,baseline_ei,baseline_nodes_present\n",
            );
            for row in &report.rows {
                let baseline = row.baseline_ei.map_or(String::new(), |v| v.to_string());
                out.push_str(&format!(
                    "{},{},{},{},{},{baseline},{}\n",
                    row.subgroup,
                    row.size,
                    row.internal_links,
                    row.external_links,
                    row.ei_index,
                    row.baseline_nodes_present
                ));
            }
            write_artifact(&corpus.output, "ei_report.csv", &out)?;
        }
        Command::Synth {
            config,
            seed,
            output,
        } => {
            let mut cfg = match config {
                Some(path) => {
                    let text = std::fs::read_to_string(&path)
                        .with_context(|| format!("reading {}", path.display()))?;
                    toml::from_str::<CampaignConfig>(&text)?
                }
                None => CampaignConfig::default(),
            };
            if let Some(seed) = seed {
                cfg.seed = seed;
            }
            for warning in validate_config(&cfg).map_err(|e| anyhow::anyhow!("{e:?}"))? {
                eprintln!("warning: {warning}");
            }
            let campaign = generate(&cfg)?;
            std::fs::create_dir_all(&output)?;
            let corpus_path = output.join("corpus.jsonl");
            let truth_path = output.join("truth.json");
            write_campaign(&campaign, &corpus_path, &truth_path)?;
            println!("wrote {}", corpus_path.display());
            println!("wrote {}", truth_path.display());
        }
        Command::Stats {
            input,
            agents,
            bot_threshold,
        } => {
            let c = load_prepared(&input)?;
            let mut rows = vec![("all".to_string(), corpus_stats(&c, None, bot_threshold)?)];
            if let Some(path) = agents {
                let group = read_agent_list(&path)?;
                rows.push((
                    "subset".to_string(),
                    corpus_stats(&c, Some(&group), bot_threshold)?,
                ));
            }
            print!("{}", render_stats_table(&rows));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    // name the failing stage so batch callers can tell where a run died
    let stage = match &cli.command {
        Command::Run { .. } => "run",
        Command::Discover { .. } => "discover",
        Command::Who { .. } => "who",
        Command::Didwhat { .. } => "didwhat",
        Command::Towhom { .. } => "towhom",
        Command::Why { .. } => "why",
        Command::Impact { .. } => "impact",
        Command::Synth { .. } => "synth",
        Command::Stats { .. } => "stats",
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error [{stage}]: {e:#}");
            ExitCode::FAILURE
        }
    }
}
