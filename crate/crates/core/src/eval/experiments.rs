//! Leave-one-out precision, NDCG-versus-effort traces and the
//! dataset-size sweep. Reports are JSON lines: one record per measurement
//! cell, echoing the experiment spec.

use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::BufReader;
use std::path::PathBuf;
use std::str::FromStr;
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::{ndcg_at, precision_at};
use super::synth::{generate_synthetic_stream, SynthError, SynthSpec, TripleStream};
use crate::corpus::{expand_tags, filter_corpus, read_raw_triples, Cooccurrence, Corpus, CorpusBuilder};
use crate::dataset::Dataset;
use crate::engine::{execute, ConfigError, EngineConfig, Keystroke, Query, Session};
use crate::ids::TagId;
use crate::socialgraph::{dice_network, filter_edges, proximity_iterator, DiceSource, SimilarityGraph};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DataSource {
    Files {
        triples: PathBuf,
        edges: Option<PathBuf>,
        cooccurrence: Option<PathBuf>,
    },
    Synthetic(SynthSpec),
}

/// Which user network the search walks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NetworkKind {
    /// Dice overlap of neighbour sets in the supplied network.
    Social,
    /// Dice overlap of users' (item, tag) pairs.
    ItemTag,
    /// Dice overlap of users' tag sets.
    Tag,
    /// The supplied network with its own weights.
    Raw,
}

impl FromStr for NetworkKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "social" => Ok(NetworkKind::Social),
            "itemtag" => Ok(NetworkKind::ItemTag),
            "tag" => Ok(NetworkKind::Tag),
            "raw" => Ok(NetworkKind::Raw),
            _ => Err(format!("unknown network {s:?} (social, itemtag, tag, raw)")),
        }
    }
}

/// Edge-weight threshold, absolute or as a percentile of the weights.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Theta {
    Weight(f64),
    Percentile(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub source: DataSource,
    pub network: NetworkKind,
    pub theta: Theta,
    pub alpha: f64,
    /// `None` normalizes tf against sf on the sampled queries.
    pub tf_scale: Option<f64>,
    pub k: usize,
    pub prefix_lengths: Vec<usize>,
    pub min_users_per_item: usize,
    pub min_items_per_user: usize,
    pub max_keywords: usize,
    pub budget_ms: Option<u64>,
    pub sample: usize,
    pub two_word: bool,
    pub seed: u64,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        Self {
            source: DataSource::Synthetic(SynthSpec::default()),
            network: NetworkKind::Raw,
            theta: Theta::Weight(0.0),
            alpha: 0.0,
            tf_scale: None,
            k: 20,
            prefix_lengths: vec![1, 2, 3, 4],
            min_users_per_item: 2,
            min_items_per_user: 2,
            max_keywords: 5,
            budget_ms: None,
            sample: 800,
            two_word: false,
            seed: 1,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Synth(#[from] SynthError),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("the {0:?} network needs an edge file")]
    NoNetwork(NetworkKind),
    #[error("nothing to sample: {0}")]
    TooSmall(String),
    #[error("invalid spec: {0}")]
    Spec(String),
}

/// Data after expansion and filtering, with the network before any
/// threshold is applied.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub stream: TripleStream,
    pub corpus: Corpus,
    pub network: SimilarityGraph,
    pub cooccurrence: Option<Cooccurrence>,
    pub base: Option<SimilarityGraph>,
}

fn load_source(
    spec: &ExperimentSpec,
) -> Result<(TripleStream, Option<SimilarityGraph>, Option<Cooccurrence>), EvalError> {
    match &spec.source {
        DataSource::Synthetic(s) => {
            let (stream, g) = generate_synthetic_stream(s)?;
            Ok((stream, Some(g), None))
        }
        DataSource::Files {
            triples,
            edges,
            cooccurrence,
        } => {
            let (stream, _) = read_raw_triples(BufReader::new(File::open(triples)?))?;
            let graph = match edges {
                Some(p) => Some(SimilarityGraph::read(BufReader::new(File::open(p)?))?.0),
                None => None,
            };
            let table = match cooccurrence {
                Some(p) => Some(Cooccurrence::read(BufReader::new(File::open(p)?))?.0),
                None => None,
            };
            Ok((stream, graph, table))
        }
    }
}

/// Builds corpus and network from a prefix of the triple stream.
pub fn prepare_stream(
    spec: &ExperimentSpec,
    stream: &[(String, String, String)],
    base: Option<&SimilarityGraph>,
    cooccurrence: Option<&Cooccurrence>,
) -> Result<(Corpus, SimilarityGraph), EvalError> {
    let mut b = CorpusBuilder::new();
    if let Some(t) = cooccurrence {
        b = b.with_cooccurrence(t.clone());
    }
    for (u, i, t) in stream {
        b.add(u, i, t).expect("validated on load");
    }
    let corpus = expand_tags(&b.build(), spec.max_keywords);
    let corpus = filter_corpus(&corpus, spec.min_users_per_item, spec.min_items_per_user);
    let network = match spec.network {
        NetworkKind::Raw => base.ok_or(EvalError::NoNetwork(spec.network))?.clone(),
        NetworkKind::Social => dice_network(DiceSource::CommonNeighbors(
            base.ok_or(EvalError::NoNetwork(spec.network))?,
        )),
        NetworkKind::ItemTag => dice_network(DiceSource::ItemTagPairs(&corpus)),
        NetworkKind::Tag => dice_network(DiceSource::Tags(&corpus)),
    };
    Ok((corpus, network))
}

pub fn prepare(spec: &ExperimentSpec) -> Result<Prepared, EvalError> {
    let (stream, base, cooccurrence) = load_source(spec)?;
    let (corpus, network) = prepare_stream(spec, &stream, base.as_ref(), cooccurrence.as_ref())?;
    Ok(Prepared {
        stream,
        corpus,
        network,
        cooccurrence,
        base,
    })
}

/// Absolute weight for a threshold spec. Percentile `q` cuts the lowest
/// `q`% of edges.
pub fn theta_weight(g: &SimilarityGraph, theta: Theta) -> f64 {
    match theta {
        Theta::Weight(w) => w,
        Theta::Percentile(q) if q <= 0.0 => 0.0,
        Theta::Percentile(q) => {
            let mut w: Vec<f64> = g.edges().map(|e| e.2).collect();
            if w.is_empty() {
                return 0.0;
            }
            w.sort_by(f64::total_cmp);
            let at = ((q / 100.0) * w.len() as f64).floor() as usize;
            w[at.min(w.len() - 1)]
        }
    }
}

/// One leave-one-out probe: `seeker` tagged `item` with `tag`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Trial {
    pub seeker: String,
    pub item: String,
    pub tag: String,
    /// Two-word mode: another tag the seeker gave the item.
    pub first_word: Option<String>,
}

/// Draws up to `spec.sample` triples whose tag has at least three letters.
pub fn sample_trials(corpus: &Corpus, spec: &ExperimentSpec, seed: u64) -> Result<Vec<Trial>, EvalError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut eligible = Vec::new();
    for t in corpus.triples() {
        if corpus.tag_name(t.tag).chars().count() < 3 {
            continue;
        }
        let first_word = if spec.two_word {
            let others: Vec<TagId> = corpus
                .p_space(t.user)
                .iter()
                .filter(|o| o.item == t.item && o.tag != t.tag)
                .map(|o| o.tag)
                .collect();
            if others.is_empty() {
                continue;
            }
            Some(others)
        } else {
            None
        };
        eligible.push((*t, first_word));
    }
    if eligible.is_empty() {
        return Err(EvalError::TooSmall(
            "no triple with a tag of three or more letters".into(),
        ));
    }
    let picked = rand::seq::index::sample(&mut rng, eligible.len(), spec.sample.min(eligible.len()));
    Ok(picked
        .into_iter()
        .map(|ix| {
            let (t, others) = &eligible[ix];
            Trial {
                seeker: corpus.user_name(t.user).to_string(),
                item: corpus.item_name(t.item).to_string(),
                tag: corpus.tag_name(t.tag).to_string(),
                first_word: others
                    .as_ref()
                    .map(|o| corpus.tag_name(o[rng.random_range(0..o.len())]).to_string()),
            }
        })
        .collect())
}

/// Ratio of mean social frequency to mean tf over the items carrying each
/// sampled tag, seen from each sampled seeker.
pub fn normalized_tf_scale(
    corpus: &Corpus,
    graph: &SimilarityGraph,
    trials: &[Trial],
    agg: crate::ProximityAggregator,
) -> f64 {
    let (mut sf_total, mut tf_total) = (0.0, 0.0);
    for t in trials.iter().take(50) {
        let prox: HashMap<&str, f64> = proximity_iterator(graph, &t.seeker, agg)
            .map(|e| (graph.user_name(e.user), e.proximity))
            .collect();
        let Some(tag) = corpus.tag_id(&t.tag) else { continue };
        let mut sf: HashMap<u32, f64> = HashMap::new();
        for tr in corpus.triples().iter().filter(|tr| tr.tag == tag) {
            *sf.entry(tr.item.0).or_default() += prox.get(corpus.user_name(tr.user)).copied().unwrap_or(0.0);
        }
        for &(item, tf) in corpus.postings(tag) {
            sf_total += sf.get(&item.0).copied().unwrap_or(0.0);
            tf_total += tf as f64;
        }
    }
    if sf_total > 0.0 && tf_total > 0.0 {
        sf_total / tf_total
    } else {
        1.0
    }
}

fn engine_config(spec: &ExperimentSpec, tf_scale: f64) -> EngineConfig {
    EngineConfig {
        k: spec.k,
        alpha: spec.alpha,
        tf_scale,
        time_budget: spec.budget_ms.map(Duration::from_millis),
        ..EngineConfig::default()
    }
}

fn validate(spec: &ExperimentSpec) -> Result<(), EvalError> {
    if spec.sample == 0 {
        return Err(EvalError::Spec("sample size must be at least 1".into()));
    }
    if spec.prefix_lengths.is_empty() || spec.prefix_lengths.contains(&0) {
        return Err(EvalError::Spec("prefix lengths must be at least 1".into()));
    }
    engine_config(spec, 1.0).validate()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrecisionRow {
    pub l: usize,
    pub trials: usize,
    /// P@k for k in 1, 5 and 20 (those not above the engine's k).
    pub precision: BTreeMap<usize, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrecisionReport {
    pub spec: ExperimentSpec,
    pub theta_weight: f64,
    pub tf_scale: f64,
    pub rows: Vec<PrecisionRow>,
}

/// The data a trial searches: the corpus without the held-out triple,
/// restricted in two-word mode to items carrying the first word. The
/// network stays as it was.
pub fn trial_dataset(corpus: &Corpus, graph: &Arc<SimilarityGraph>, trial: &Trial) -> Dataset {
    let mut reduced = corpus.retain(|t| {
        !(corpus.user_name(t.user) == trial.seeker
            && corpus.item_name(t.item) == trial.item
            && corpus.tag_name(t.tag) == trial.tag)
    });
    if let Some(w1) = &trial.first_word {
        let keep: std::collections::HashSet<_> = reduced
            .tag_id(w1)
            .map(|t| reduced.postings(t).iter().map(|p| p.0).collect())
            .unwrap_or_default();
        reduced = reduced.retain(|t| keep.contains(&t.item));
    }
    Dataset::with_shared_graph(reduced, graph.clone())
}

/// Zero-based rank of the trial's item after typing each requested number
/// of letters of its tag (capped at the tag length).
pub fn trial_ranks(
    corpus: &Corpus,
    graph: &Arc<SimilarityGraph>,
    trial: &Trial,
    cfg: &EngineConfig,
    lengths: &[usize],
) -> Vec<Option<usize>> {
    let ds = Arc::new(trial_dataset(corpus, graph, trial));
    let target = ds.corpus().item_id(&trial.item);
    let mut session = Session::new(ds.clone(), ds.seeker(&trial.seeker), cfg.clone()).expect("validated config");
    let chars: Vec<char> = trial.tag.chars().collect();
    let longest = lengths.iter().copied().max().unwrap_or(0).min(chars.len());
    let mut at_len = HashMap::new();
    for (n, &c) in chars.iter().take(longest).enumerate() {
        let r = session.keystroke(Keystroke::AppendChar(c));
        at_len.insert(n + 1, target.and_then(|t| r.rank_of(t)));
    }
    lengths
        .iter()
        .map(|l| at_len.get(&(*l).min(chars.len())).copied().flatten())
        .collect()
}

/// Leave-one-out precision on already prepared data, so sweeps can reuse
/// one preparation.
pub fn leave_one_out_on(p: &Prepared, spec: &ExperimentSpec) -> Result<PrecisionReport, EvalError> {
    validate(spec)?;
    let theta = theta_weight(&p.network, spec.theta);
    let graph = Arc::new(filter_edges(&p.network, theta));
    let trials = sample_trials(&p.corpus, spec, spec.seed)?;
    let tf_scale = match spec.tf_scale {
        Some(s) => s,
        None if spec.alpha > 0.0 && spec.alpha < 1.0 => {
            normalized_tf_scale(&p.corpus, &graph, &trials, EngineConfig::default().aggregator)
        }
        None => 1.0,
    };
    let cfg = engine_config(spec, tf_scale);
    let ranks: Vec<Vec<Option<usize>>> = trials
        .par_iter()
        .map(|t| trial_ranks(&p.corpus, &graph, t, &cfg, &spec.prefix_lengths))
        .collect();
    let rows = spec
        .prefix_lengths
        .iter()
        .enumerate()
        .map(|(j, &l)| {
            let col: Vec<Option<usize>> = ranks.iter().map(|r| r[j]).collect();
            let precision = [1, 5, 20]
                .into_iter()
                .filter(|&k| k <= spec.k)
                .map(|k| (k, precision_at(&col, k)))
                .collect();
            PrecisionRow {
                l,
                trials: col.len(),
                precision,
            }
        })
        .collect();
    Ok(PrecisionReport {
        spec: spec.clone(),
        theta_weight: theta,
        tf_scale,
        rows,
    })
}

pub fn leave_one_out_precision(spec: &ExperimentSpec) -> Result<PrecisionReport, EvalError> {
    leave_one_out_on(&prepare(spec)?, spec)
}

/// Where along a run an anytime answer was taken.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Checkpoint {
    VisitedUsers(usize),
    TimeMs(u64),
    Termination,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NdcgPoint {
    pub l: usize,
    pub checkpoint: Checkpoint,
    pub queries: usize,
    pub mean_ndcg: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NdcgTrace {
    pub spec: ExperimentSpec,
    pub points: Vec<NdcgPoint>,
}

pub const NDCG_K: usize = 20;

/// NDCG@20 of anytime answers against the exact top-20, after visiting a
/// fixed number of users or spending a fixed time, for sampled personal
/// queries (seeker and tag from a sampled triple, prefix of length `l`).
pub fn ndcg_trace_on(
    p: &Prepared,
    spec: &ExperimentSpec,
    visited: &[usize],
    times_ms: &[u64],
) -> Result<NdcgTrace, EvalError> {
    validate(spec)?;
    let theta = theta_weight(&p.network, spec.theta);
    let ds = Dataset::new(p.corpus.clone(), filter_edges(&p.network, theta));
    let trials = sample_trials(&p.corpus, spec, spec.seed)?;
    let tf_scale = spec.tf_scale.unwrap_or(1.0);
    let base = EngineConfig {
        k: NDCG_K,
        ..engine_config(spec, tf_scale)
    };
    let mut checkpoints: Vec<Checkpoint> = visited.iter().map(|&v| Checkpoint::VisitedUsers(v)).collect();
    checkpoints.extend(times_ms.iter().map(|&t| Checkpoint::TimeMs(t)));
    checkpoints.push(Checkpoint::Termination);
    let mut points = Vec::new();
    for &l in &spec.prefix_lengths {
        let per_query: Vec<Vec<f64>> = trials
            .par_iter()
            .map(|t| {
                let prefix: String = t.tag.chars().take(l).collect();
                let q = Query::new(Vec::<String>::new(), &prefix);
                let seeker = ds.seeker(&t.seeker);
                let exact_cfg = EngineConfig {
                    time_budget: None,
                    max_visited_users: None,
                    ..base.clone()
                };
                let exact = execute(&ds, seeker, &q, &exact_cfg).expect("validated").items();
                checkpoints
                    .iter()
                    .map(|cp| {
                        let cfg = match *cp {
                            Checkpoint::VisitedUsers(v) => EngineConfig {
                                max_visited_users: Some(v),
                                ..exact_cfg.clone()
                            },
                            Checkpoint::TimeMs(ms) => EngineConfig {
                                time_budget: Some(Duration::from_millis(ms)),
                                ..exact_cfg.clone()
                            },
                            Checkpoint::Termination => exact_cfg.clone(),
                        };
                        let got = execute(&ds, seeker, &q, &cfg).expect("validated").items();
                        ndcg_at(&got, &exact, NDCG_K)
                    })
                    .collect()
            })
            .collect();
        for (j, cp) in checkpoints.iter().enumerate() {
            let sum: f64 = per_query.iter().map(|v| v[j]).sum();
            points.push(NdcgPoint {
                l,
                checkpoint: *cp,
                queries: per_query.len(),
                mean_ndcg: sum / per_query.len() as f64,
            });
        }
    }
    Ok(NdcgTrace {
        spec: spec.clone(),
        points,
    })
}

pub fn ndcg_trace(spec: &ExperimentSpec, visited: &[usize], times_ms: &[u64]) -> Result<NdcgTrace, EvalError> {
    ndcg_trace_on(&prepare(spec)?, spec, visited, times_ms)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaleRow {
    pub chunk: usize,
    pub fraction: f64,
    pub triples: usize,
    pub l: usize,
    pub queries: usize,
    /// Time to the exact top-k.
    pub mean_ms: f64,
    pub median_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaleReport {
    pub spec: ExperimentSpec,
    pub rows: Vec<ScaleRow>,
}

/// Time to the exact top-k on cumulative chunks of the triple stream
/// (first 1/n, first 2/n, ...), per prefix length.
pub fn scalability_sweep(spec: &ExperimentSpec, chunks: usize) -> Result<ScaleReport, EvalError> {
    validate(spec)?;
    if chunks == 0 {
        return Err(EvalError::Spec("at least one chunk".into()));
    }
    let (stream, base, table) = load_source(spec)?;
    let mut rows = Vec::new();
    for c in 1..=chunks {
        let end = stream.len() * c / chunks;
        let (corpus, network) = prepare_stream(spec, &stream[..end], base.as_ref(), table.as_ref())?;
        let theta = theta_weight(&network, spec.theta);
        let trials = sample_trials(&corpus, spec, spec.seed)?;
        let ds = Dataset::new(corpus, filter_edges(&network, theta));
        let cfg = EngineConfig {
            time_budget: None,
            ..engine_config(spec, spec.tf_scale.unwrap_or(1.0))
        };
        for &l in &spec.prefix_lengths {
            let mut ms: Vec<f64> = trials
                .iter()
                .map(|t| {
                    let prefix: String = t.tag.chars().take(l).collect();
                    let start = Instant::now();
                    let r = execute(
                        &ds,
                        ds.seeker(&t.seeker),
                        &Query::new(Vec::<String>::new(), &prefix),
                        &cfg,
                    )
                    .expect("validated");
                    debug_assert!(r.exact);
                    start.elapsed().as_secs_f64() * 1e3
                })
                .collect();
            ms.sort_by(f64::total_cmp);
            rows.push(ScaleRow {
                chunk: c,
                fraction: c as f64 / chunks as f64,
                triples: ds.corpus().num_triples(),
                l,
                queries: ms.len(),
                mean_ms: ms.iter().sum::<f64>() / ms.len() as f64,
                median_ms: ms[ms.len() / 2],
            });
        }
    }
    Ok(ScaleReport {
        spec: spec.clone(),
        rows,
    })
}

/// Writes one JSON object per row, each merged with the spec fields.
pub fn write_jsonl<W: std::io::Write, R: Serialize>(
    mut w: W,
    experiment: &str,
    spec: &ExperimentSpec,
    extra: &serde_json::Value,
    rows: &[R],
) -> std::io::Result<()> {
    for row in rows {
        let mut rec = serde_json::Map::new();
        rec.insert("experiment".into(), experiment.into());
        for v in [serde_json::to_value(spec)?, extra.clone(), serde_json::to_value(row)?] {
            if let serde_json::Value::Object(m) = v {
                rec.extend(m);
            }
        }
        serde_json::to_writer(&mut w, &rec)?;
        writeln!(w)?;
    }
    Ok(())
}
