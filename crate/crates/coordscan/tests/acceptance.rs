//! Acceptance gate: one test per criterion, each printing a single
//! pass/fail line. The graph and community criteria are checked against
//! brute-force oracles; the behavioral criteria run on the default
//! synthetic campaign against its ground truth.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::OnceLock;
use std::time::Instant;

use chrono::Duration;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use coordscan::bend::{
    compare_groups, default_lexicon, GroupComparison, Maneuver, ManeuverContext, ManeuverWeights,
};
use coordscan::community::{louvain, modularity, Partition};
use coordscan::corpus::{self, corpus_stats, Agent, Corpus, Tweet};
use coordscan::discovery::{burst_concentration, extract_coordinated_agents, DiscoveryConfig};
use coordscan::graph::{
    betweenness_centrality, build_communication_network, centrality_scores,
    eigenvector_centrality, GraphBuilder, WeightedGraph,
};
use coordscan::impact::{ei_index, polarization_report};
use coordscan::narrative::{coherence, fit_lda, preprocess, top_words};
use coordscan::pipeline::{render_stats_table, run_pipeline, PipelineConfig};
use coordscan::synthgen::{generate, write_campaign, CampaignConfig, GeneratedCampaign};
use coordscan::targeting::{correlation_table, extract_targets, CorrelationTable, TargetAttribute};

fn report(criterion: u32, name: &str, pass: bool) {
    println!(
        "criterion {criterion} ({name}): {}",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "criterion {criterion} ({name}) failed");
}

// ---------------------------------------------------------------------
// shared default-scenario artifacts, one per seed
// ---------------------------------------------------------------------

struct Scenario {
    campaign: GeneratedCampaign,
    corpus: Corpus,
    discovered: BTreeSet<String>,
    organic: BTreeSet<String>,
    discovery_secs: f64,
    comparison: GroupComparison,
    correlations: CorrelationTable,
}

fn build_scenario(seed: u64) -> Scenario {
    let campaign = generate(&CampaignConfig {
        seed,
        ..CampaignConfig::default()
    })
    .expect("default campaign generates");
    let mut corpus = Corpus::from_tweets(campaign.tweets.clone(), campaign.agents.clone())
        .expect("generated corpus is well-formed");
    corpus::apply_fallback_bot_heuristic(&mut corpus);

    let t = Instant::now();
    let discovery = extract_coordinated_agents(&corpus, &DiscoveryConfig::default());
    let discovery_secs = t.elapsed().as_secs_f64();
    let discovered = discovery.coordinated_agents;
    let organic: BTreeSet<String> = corpus
        .agents
        .keys()
        .filter(|a| !discovered.contains(*a))
        .cloned()
        .collect();

    let comm = build_communication_network(&corpus);
    let partition = louvain(&comm, 1.0, 0).partition;
    let ctx = ManeuverContext::build(&corpus, partition, 0.9).expect("context builds");
    let lex = default_lexicon();
    let weights = ManeuverWeights::default();
    let comparison = compare_groups(&discovered, &organic, &corpus, &ctx, &lex, &weights)
        .expect("group comparison");
    let targets = extract_targets(&corpus, &discovered);
    let centralities = centrality_scores(&comm, 1e-10, 10_000);
    let correlations = correlation_table(
        &targets,
        &corpus,
        &ctx,
        &lex,
        &weights,
        0.5,
        &comm,
        &centralities,
    )
    .expect("correlation table");

    Scenario {
        campaign,
        corpus,
        discovered,
        organic,
        discovery_secs,
        comparison,
        correlations,
    }
}

fn scenarios() -> &'static [Scenario] {
    static CELL: OnceLock<Vec<Scenario>> = OnceLock::new();
    CELL.get_or_init(|| (0..5).map(build_scenario).collect())
}

// ---------------------------------------------------------------------
// oracles
// ---------------------------------------------------------------------

fn random_graph(rng: &mut ChaCha8Rng, min_edges: usize) -> WeightedGraph {
    loop {
        let n = rng.gen_range(2..=8);
        let mut b = GraphBuilder::new();
        for i in 0..n {
            b.add_node(&format!("n{i}"));
        }
        let mut edges = 0;
        for i in 0..n {
            for j in (i + 1)..n {
                if rng.gen_bool(0.45) {
                    b.add_edge_weight(&format!("n{i}"), &format!("n{j}"), 1.0);
                    edges += 1;
                }
            }
        }
        if edges >= min_edges {
            return b.build();
        }
    }
}

/// All shortest paths between every unordered pair, enumerated one path
/// at a time; interior-node occurrence fractions summed per node.
fn brute_betweenness(g: &WeightedGraph) -> Vec<f64> {
    let n = g.node_count();
    let mut score = vec![0.0; n];
    for s in 0..n {
        for t in (s + 1)..n {
            // BFS distances from s
            let mut dist = vec![usize::MAX; n];
            dist[s] = 0;
            let mut queue = std::collections::VecDeque::from([s]);
            while let Some(u) = queue.pop_front() {
                for &(v, _) in g.neighbors(u) {
                    if dist[v] == usize::MAX {
                        dist[v] = dist[u] + 1;
                        queue.push_back(v);
                    }
                }
            }
            if dist[t] == usize::MAX {
                continue;
            }
            // enumerate every shortest path t -> s by stepping down dist
            let mut paths: Vec<Vec<usize>> = Vec::new();
            let mut stack = vec![vec![t]];
            while let Some(path) = stack.pop() {
                let u = *path.last().unwrap();
                if u == s {
                    paths.push(path);
                    continue;
                }
                for &(v, _) in g.neighbors(u) {
                    if dist[v] + 1 == dist[u] {
                        let mut next = path.clone();
                        next.push(v);
                        stack.push(next);
                    }
                }
            }
            let sigma = paths.len() as f64;
            let mut interior = vec![0usize; n];
            for p in &paths {
                for &v in &p[1..p.len() - 1] {
                    interior[v] += 1;
                }
            }
            for v in 0..n {
                score[v] += interior[v] as f64 / sigma;
            }
        }
    }
    score
}

/// Every partition of `n` items as restricted-growth assignments.
fn all_partitions(n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut current = vec![0usize; n];
    fn rec(i: usize, max_used: usize, current: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if i == current.len() {
            out.push(current.clone());
            return;
        }
        for c in 0..=max_used + 1 {
            current[i] = c;
            rec(i + 1, max_used.max(c), current, out);
        }
    }
    if n > 0 {
        rec(1, 0, &mut current, &mut out);
    }
    out
}

fn best_modularity(g: &WeightedGraph) -> f64 {
    let labels: Vec<&str> = g.labels().iter().map(String::as_str).collect();
    let mut best = f64::NEG_INFINITY;
    for assignment in all_partitions(labels.len()) {
        let map: BTreeMap<String, usize> = labels
            .iter()
            .zip(&assignment)
            .map(|(l, &c)| (l.to_string(), c))
            .collect();
        let q = modularity(g, &Partition::from_labels(map), 1.0).expect("modularity");
        best = best.max(q);
    }
    best
}

fn edge_graph(edges: &[(&str, &str)]) -> WeightedGraph {
    let mut b = GraphBuilder::new();
    for (a, c) in edges {
        b.add_edge_weight(a, c, 1.0);
    }
    b.build()
}

// ---------------------------------------------------------------------
// criteria
// ---------------------------------------------------------------------

#[test]
fn criterion_01_ei_exactness() {
    let t = Instant::now();
    let set = |ids: &[&str]| -> BTreeSet<String> { ids.iter().map(|s| s.to_string()).collect() };
    // (edges, subgroup, expected E/I)
    type EiFixture = (Vec<(&'static str, &'static str)>, Vec<&'static str>, f64);
    let fixtures: Vec<EiFixture> = vec![
        // triangle plus one external spoke: IL=3, EL=1
        (
            vec![("a", "b"), ("b", "c"), ("a", "c"), ("a", "x")],
            vec!["a", "b", "c"],
            -0.5,
        ),
        // fully internal clique
        (
            vec![("a", "b"), ("b", "c"), ("a", "c"), ("x", "y")],
            vec!["a", "b", "c"],
            -1.0,
        ),
        // star leaf: all links external
        (
            vec![("c", "l1"), ("c", "l2"), ("c", "l3")],
            vec!["l1"],
            1.0,
        ),
        // star hub: all its links external too
        (
            vec![("c", "l1"), ("c", "l2"), ("c", "l3")],
            vec!["c"],
            1.0,
        ),
        // balanced: one internal, one external
        (vec![("a", "b"), ("a", "x")], vec!["a", "b"], 0.0),
        // IL=1, EL=3
        (
            vec![("a", "b"), ("a", "x"), ("a", "y"), ("b", "z")],
            vec!["a", "b"],
            0.5,
        ),
        // IL=3 path inside 4-group, EL=2
        (
            vec![("a", "b"), ("b", "c"), ("c", "d"), ("a", "x"), ("d", "y")],
            vec!["a", "b", "c", "d"],
            -0.2,
        ),
        // IL=6 (K4), EL=2
        (
            vec![
                ("a", "b"),
                ("a", "c"),
                ("a", "d"),
                ("b", "c"),
                ("b", "d"),
                ("c", "d"),
                ("a", "x"),
                ("b", "y"),
            ],
            vec!["a", "b", "c", "d"],
            -0.5,
        ),
        // IL=2, EL=4
        (
            vec![
                ("a", "b"),
                ("b", "c"),
                ("a", "x"),
                ("b", "x"),
                ("c", "y"),
                ("c", "z"),
            ],
            vec!["a", "b", "c"],
            1.0 / 3.0,
        ),
        // single edge crossing the boundary
        (vec![("a", "x")], vec!["a"], 1.0),
        // IL=1, EL=5
        (
            vec![
                ("a", "b"),
                ("a", "u"),
                ("a", "v"),
                ("a", "w"),
                ("b", "u"),
                ("b", "v"),
            ],
            vec!["a", "b"],
            2.0 / 3.0,
        ),
    ];
    let mut pass = fixtures.len() >= 10;
    for (edges, subgroup, expected) in &fixtures {
        let g = edge_graph(edges);
        let got = ei_index(&g, &set(subgroup)).expect("defined E/I");
        if (got - expected).abs() > 1e-12 {
            eprintln!("E/I fixture {subgroup:?}: got {got}, expected {expected}");
            pass = false;
        }
    }
    pass &= t.elapsed().as_secs_f64() < 1.0;
    report(1, "E/I exactness", pass);
}

#[test]
fn criterion_02_centrality_oracles() {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let mut pass = true;
    for _ in 0..100 {
        let g = random_graph(&mut rng, 0);
        let oracle = brute_betweenness(&g);
        let got = betweenness_centrality(&g);
        for (i, label) in g.labels().iter().enumerate() {
            if (got[label] - oracle[i]).abs() > 1e-9 {
                eprintln!("betweenness mismatch at {label}: {} vs {}", got[label], oracle[i]);
                pass = false;
            }
        }

        if g.edge_count() == 0 {
            continue;
        }
        let eig = eigenvector_centrality(&g, 1e-12, 100_000);
        let x: Vec<f64> = g.labels().iter().map(|l| eig.scores[l]).collect();
        // Rayleigh quotient of the unit-norm iterate
        let ax: Vec<f64> = (0..g.node_count())
            .map(|u| g.neighbors(u).iter().map(|&(v, w)| w * x[v]).sum())
            .collect();
        let lambda: f64 = x.iter().zip(&ax).map(|(a, b)| a * b).sum();
        let residual = x
            .iter()
            .zip(&ax)
            .map(|(xi, axi)| (axi - lambda * xi).abs())
            .fold(0.0, f64::max);
        if residual >= 1e-6 {
            eprintln!("eigenvector residual {residual} on {} nodes", g.node_count());
            pass = false;
        }
    }
    pass &= t.elapsed().as_secs_f64() < 30.0;
    report(2, "centrality oracles", pass);
}

#[test]
fn criterion_03_louvain_quality() {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut pass = true;
    for _ in 0..50 {
        let g = random_graph(&mut rng, 1);
        let optimum = best_modularity(&g);
        let achieved = modularity(&g, &louvain(&g, 1.0, 0).partition, 1.0).expect("modularity");
        if achieved < optimum - 0.05 {
            eprintln!("louvain {achieved} vs optimum {optimum}");
            pass = false;
        }
    }
    // two 4-cliques joined by one bridge: the cliques exactly
    let g = edge_graph(&[
        ("a0", "a1"),
        ("a0", "a2"),
        ("a0", "a3"),
        ("a1", "a2"),
        ("a1", "a3"),
        ("a2", "a3"),
        ("b0", "b1"),
        ("b0", "b2"),
        ("b0", "b3"),
        ("b1", "b2"),
        ("b1", "b3"),
        ("b2", "b3"),
        ("a0", "b0"),
    ]);
    let p = louvain(&g, 1.0, 0).partition;
    pass &= p.num_communities == 2;
    for side in ["a", "b"] {
        let c0 = p.community_of(&format!("{side}0"));
        for i in 1..4 {
            pass &= p.community_of(&format!("{side}{i}")) == c0;
        }
    }
    pass &= t.elapsed().as_secs_f64() < 60.0;
    report(3, "louvain quality", pass);
}

#[test]
fn criterion_04_discovery_recall_precision() {
    let s = &scenarios()[0];
    let truth = &s.campaign.truth.coordinated_agents;
    let hit = s.discovered.intersection(truth).count() as f64;
    let recall = hit / truth.len() as f64;
    let precision = if s.discovered.is_empty() {
        0.0
    } else {
        hit / s.discovered.len() as f64
    };
    let pass = recall >= 0.95 && precision >= 0.95 && s.discovery_secs < 10.0;
    report(4, "discovery recall/precision", pass);
}

#[test]
fn criterion_05_burst_signature() {
    let s = &scenarios()[0];
    let coordinated = burst_concentration(&s.corpus, &s.discovered).expect("coordinated burst");
    let organic = burst_concentration(&s.corpus, &s.organic).expect("organic burst");
    let pass = coordinated.peak_fraction >= 0.8 && organic.peak_fraction <= 0.3;
    report(5, "burst signature", pass);
}

#[test]
fn criterion_06_maneuver_separation() {
    let mut pass = true;
    for (seed, s) in scenarios().iter().enumerate() {
        for m in [
            Maneuver::Back,
            Maneuver::Build,
            Maneuver::Bridge,
            Maneuver::Distract,
        ] {
            let row = s
                .comparison
                .rows
                .iter()
                .find(|r| r.maneuver == m)
                .expect("row present");
            if row.mean_a <= row.mean_b {
                eprintln!("seed {seed}: {m} coordinated {} <= other {}", row.mean_a, row.mean_b);
                pass = false;
            }
        }
    }
    report(6, "maneuver separation", pass);
}

#[test]
fn criterion_07_correlation_signs() {
    let mut pass = true;
    for (seed, s) in scenarios().iter().enumerate() {
        let r = |a: TargetAttribute| {
            s.correlations
                .cell(Maneuver::Back, a)
                .r
                .unwrap_or(f64::NAN)
        };
        let ok = r(TargetAttribute::TotalDegree) > 0.0
            && r(TargetAttribute::Followers) > 0.0
            && r(TargetAttribute::BotProbability) < 0.0;
        if !ok {
            eprintln!(
                "seed {seed}: degree {} followers {} bot {}",
                r(TargetAttribute::TotalDegree),
                r(TargetAttribute::Followers),
                r(TargetAttribute::BotProbability)
            );
            pass = false;
        }
    }
    report(7, "correlation signs", pass);
}

#[test]
fn criterion_08_polarization_direction() {
    let s = &scenarios()[0];
    let (t0, t_end) = s.corpus.time_span.expect("span");
    let split = t0 + Duration::days(3);
    let pre_window = corpus::window(&s.corpus, t0, split).expect("pre window");
    let pre_tweets: Vec<Tweet> = pre_window
        .tweets
        .iter()
        .filter(|t| !s.discovered.contains(&t.author_id))
        .cloned()
        .collect();
    let pre =
        Corpus::from_tweets(pre_tweets, pre_window.agents.clone()).expect("pre corpus");
    let post =
        corpus::window(&s.corpus, split, t_end + Duration::seconds(1)).expect("post window");
    let ei = polarization_report(&pre, &post, 1.0, 0, false).expect("polarization report");
    let mut pass = false;
    for row in ei.rows.iter().filter(|r| r.size >= 10) {
        pass = true;
        if row.ei_index > -0.3 {
            eprintln!("subgroup {} post E/I {}", row.subgroup, row.ei_index);
            pass = false;
            break;
        }
        if let Some(b) = row.baseline_ei {
            if b.abs() >= 0.1 {
                eprintln!("subgroup {} pre E/I {b}", row.subgroup);
                pass = false;
                break;
            }
        }
    }
    report(8, "polarization direction", pass);
}

#[test]
fn criterion_09_lda_recovery() {
    let t = Instant::now();
    // two planted topics over disjoint 50-word vocabularies: 10 core
    // words in every document of the topic plus 5 random tail words
    let vocab = |prefix: &str| -> Vec<String> { (0..50).map(|i| format!("{prefix}{i:02}")).collect() };
    let vocab_a = vocab("aqua");
    let vocab_b = vocab("briz");
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut tweets = Vec::new();
    for d in 0..200 {
        let v = if d % 2 == 0 { &vocab_a } else { &vocab_b };
        let mut words: Vec<String> = v[..10].to_vec();
        for _ in 0..5 {
            words.push(v[10 + rng.gen_range(0..40)].clone());
        }
        tweets.push(Tweet {
            id: format!("d{d:03}"),
            author_id: "author".into(),
            created_at: chrono::TimeZone::with_ymd_and_hms(&chrono::Utc, 2021, 5, 14, 0, 0, 0)
                .unwrap(),
            text: words.join(" "),
            hashtags: vec![],
            mentions: vec![],
            retweet_of_author: None,
            urls: vec![],
        });
    }
    let ds = preprocess(&tweets, &BTreeSet::new());
    assert_eq!(ds.docs.len(), 200);

    let model = fit_lda(&ds, 2, 0.0, 0.01, 300, 11).expect("k=2 fit");
    let model_again = fit_lda(&ds, 2, 0.0, 0.01, 300, 11).expect("k=2 refit");
    let mut pass = model.topic_word_counts == model_again.topic_word_counts;

    for topic in top_words(&model, &ds, 10) {
        let in_a = topic.iter().filter(|w| w.starts_with("aqua")).count();
        let purity = in_a.max(10 - in_a) as f64 / 10.0;
        if purity < 0.9 {
            eprintln!("impure topic: {topic:?}");
            pass = false;
        }
    }

    let mean_coherence = |k: usize| {
        let m = fit_lda(&ds, k, 0.0, 0.01, 300, 11).expect("fit");
        let c = coherence(&m, &ds, 10).expect("coherence");
        c.iter().sum::<f64>() / c.len() as f64
    };
    let c2 = mean_coherence(2);
    for k in 3..=8 {
        let ck = mean_coherence(k);
        if ck > c2 + 1e-9 {
            eprintln!("coherence at k={k} ({ck}) exceeds k=2 ({c2})");
            pass = false;
        }
    }
    pass &= t.elapsed().as_secs_f64() < 60.0;
    report(9, "lda recovery", pass);
}

#[test]
fn criterion_10_end_to_end_determinism() {
    let dir = tempfile::tempdir().expect("tempdir");
    let campaign = generate(&CampaignConfig::default()).expect("campaign");
    let input = dir.path().join("corpus.jsonl");
    write_campaign(&campaign, &input, dir.path().join("truth.json")).expect("write");
    let cfg = PipelineConfig {
        input,
        output_dir: dir.path().join("run"),
        ..PipelineConfig::default()
    };
    let first = run_pipeline(&cfg).expect("first run");
    let snapshot: Vec<(String, Vec<u8>)> = first
        .artifacts
        .iter()
        .map(|a| (a.clone(), std::fs::read(cfg.output_dir.join(a)).expect("read")))
        .collect();
    let second = run_pipeline(&cfg).expect("second run");
    let mut pass = first.artifacts == second.artifacts;
    for (name, bytes) in &snapshot {
        if &std::fs::read(cfg.output_dir.join(name)).expect("read") != bytes {
            eprintln!("artifact {name} differs between runs");
            pass = false;
        }
    }
    report(10, "end-to-end determinism", pass);
}

#[test]
fn criterion_11_dataset_statistics_format() {
    let mk_agent = |id: &str, p: f64| Agent {
        id: id.into(),
        screen_name_hash: None,
        followers_count: Some(10),
        following_count: Some(10),
        verified: Some(false),
        bot_probability: Some(p),
    };
    let tweet = Tweet {
        id: "t0".into(),
        author_id: "a".into(),
        created_at: chrono::TimeZone::with_ymd_and_hms(&chrono::Utc, 2021, 5, 14, 0, 0, 0)
            .unwrap(),
        text: "halo".into(),
        hashtags: vec![],
        mentions: vec![],
        retweet_of_author: None,
        urls: vec![],
    };
    let agents: BTreeMap<String, Agent> = [
        ("a".to_string(), mk_agent("a", 0.6)),
        ("b".to_string(), mk_agent("b", 0.2)),
    ]
    .into();
    let corpus = Corpus::from_tweets(vec![tweet], agents).expect("corpus");
    let stats = corpus_stats(&corpus, None, 0.5).expect("stats");
    let mut pass = stats.bot_percentage == 50.0 && stats.num_agents == 2 && stats.num_tweets == 1;
    let rendered = render_stats_table(&[("all".to_string(), stats)]);
    pass &= rendered == "dataset,agents,tweets,bots\nall,2,1,50.0%\n";
    report(11, "dataset statistics format", pass);
}
