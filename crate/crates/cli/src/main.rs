use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;
use topks_api::{CreateSession, KeystrokeEvent};
use topks_client::Client;
use topks_core::eval::experiments::{
    leave_one_out_precision, ndcg_trace, prepare, scalability_sweep, theta_weight, write_jsonl, DataSource,
    ExperimentSpec, NetworkKind, Theta,
};
use topks_core::eval::{write_synthetic, SynthSpec};
use topks_core::socialgraph::filter_edges;

#[derive(Parser)]
#[command(
    name = "topks",
    about = "Network-aware as-you-type search: experiments, data preparation and a service client"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Leave-one-out P@k per prefix length.
    Precision(Experiment),
    /// NDCG@20 of anytime answers after visited-user and time budgets.
    Ndcg {
        #[command(flatten)]
        exp: Experiment,
        #[arg(long, value_delimiter = ',', default_value = "10,50,100,200,500,1000")]
        visited: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_value = "1,5,10,20,50")]
        times_ms: Vec<u64>,
    },
    /// Time to the exact top-k on growing chunks of the triple stream.
    Scale {
        #[command(flatten)]
        exp: Experiment,
        #[arg(long, default_value_t = 5)]
        chunks: usize,
    },
    /// Writes a synthetic corpus and network as TSV into a directory.
    Synth {
        #[command(flatten)]
        synth: SynthArgs,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Expands, filters and thresholds data, then writes files and a
    /// config for the service into a directory.
    ServePrep {
        #[command(flatten)]
        exp: Experiment,
    },
    /// Types a query against a running service, one line per keystroke.
    Query {
        #[arg(long, default_value = "http://127.0.0.1:8080")]
        server: String,
        #[arg(long)]
        seeker: String,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        budget_ms: Option<u64>,
        text: String,
    },
}

#[derive(Args, Clone)]
struct SynthArgs {
    #[arg(long, default_value_t = 2_000)]
    synth_users: usize,
    #[arg(long, default_value_t = 3_000)]
    synth_items: usize,
    #[arg(long, default_value_t = 500)]
    synth_tags: usize,
    #[arg(long, default_value_t = 30_000)]
    synth_triples: usize,
}

impl SynthArgs {
    fn spec(&self, seed: u64) -> SynthSpec {
        SynthSpec {
            seed,
            users: self.synth_users,
            items: self.synth_items,
            tags: self.synth_tags,
            triples: self.synth_triples,
            ..SynthSpec::default()
        }
    }
}

/// Data and parameters shared by the experiment commands. Without
/// `--triples` the data are synthetic.
#[derive(Args, Clone)]
struct Experiment {
    #[arg(long)]
    triples: Option<PathBuf>,
    #[arg(long)]
    edges: Option<PathBuf>,
    /// Tag to keyword co-occurrence counts used for tag expansion.
    #[arg(long)]
    cooccurrence: Option<PathBuf>,
    /// social, itemtag, tag or raw. Defaults to raw when a network is
    /// given (or synthetic) and itemtag otherwise.
    #[arg(long)]
    network: Option<NetworkKind>,
    /// Edge-weight threshold; a trailing % or a leading p makes it a
    /// percentile of the weights.
    #[arg(long, default_value = "0")]
    theta: String,
    #[arg(long, default_value_t = 0.0)]
    alpha: f64,
    #[arg(long)]
    tf_scale: Option<f64>,
    #[arg(long, default_value_t = 20)]
    k: usize,
    #[arg(long)]
    budget_ms: Option<u64>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 800)]
    sample: usize,
    #[arg(long)]
    two_word: bool,
    #[arg(long, value_delimiter = ',')]
    lengths: Option<Vec<usize>>,
    #[arg(long, default_value_t = 2)]
    min_users_per_item: usize,
    #[arg(long, default_value_t = 2)]
    min_items_per_user: usize,
    #[arg(long, default_value_t = 5)]
    max_keywords: usize,
    #[command(flatten)]
    synth: SynthArgs,
    /// Report file (JSON lines) or, for serve-prep, output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_theta(s: &str) -> Result<Theta, String> {
    let s = s.trim();
    let pct = s.strip_suffix('%').or_else(|| s.strip_prefix('p'));
    let v: f64 = pct.unwrap_or(s).parse().map_err(|_| format!("bad theta {s:?}"))?;
    match pct {
        Some(_) if (0.0..=100.0).contains(&v) => Ok(Theta::Percentile(v)),
        None if (0.0..=1.0).contains(&v) => Ok(Theta::Weight(v)),
        _ => Err(format!("theta {s:?} out of range")),
    }
}

impl Experiment {
    fn spec(&self, default_lengths: &[usize]) -> Result<ExperimentSpec, String> {
        let source = match &self.triples {
            Some(t) => DataSource::Files {
                triples: t.clone(),
                edges: self.edges.clone(),
                cooccurrence: self.cooccurrence.clone(),
            },
            None => DataSource::Synthetic(self.synth.spec(self.seed)),
        };
        let has_network = self.edges.is_some() || self.triples.is_none();
        let network = self.network.unwrap_or(if has_network {
            NetworkKind::Raw
        } else {
            NetworkKind::ItemTag
        });
        Ok(ExperimentSpec {
            source,
            network,
            theta: parse_theta(&self.theta)?,
            alpha: self.alpha,
            tf_scale: self.tf_scale,
            k: self.k,
            prefix_lengths: self.lengths.clone().unwrap_or_else(|| default_lengths.to_vec()),
            min_users_per_item: self.min_users_per_item,
            min_items_per_user: self.min_items_per_user,
            max_keywords: self.max_keywords,
            budget_ms: self.budget_ms,
            sample: self.sample,
            two_word: self.two_word,
            seed: self.seed,
        })
    }
}

fn report_sink(out: &Option<PathBuf>) -> std::io::Result<Box<dyn Write>> {
    Ok(match out {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(std::io::stdout().lock())),
    })
}

fn serve_prep(spec: &ExperimentSpec, dir: &Path) -> Result<(), Box<dyn std::error::Error>> {
    let p = prepare(spec)?;
    let theta = theta_weight(&p.network, spec.theta);
    let g = filter_edges(&p.network, theta);
    std::fs::create_dir_all(dir)?;
    p.corpus
        .write_tsv(BufWriter::new(File::create(dir.join("triples.tsv"))?))?;
    g.write_tsv(BufWriter::new(File::create(dir.join("edges.tsv"))?))?;
    let mut conf = BufWriter::new(File::create(dir.join("service.conf"))?);
    writeln!(conf, "triples = triples.tsv")?;
    writeln!(conf, "edges = edges.tsv")?;
    writeln!(conf, "default_k = {}", spec.k)?;
    writeln!(conf, "default_alpha = {}", spec.alpha)?;
    match spec.budget_ms {
        Some(ms) => writeln!(conf, "default_budget_ms = {ms}")?,
        None => writeln!(conf, "default_budget_ms = 50")?,
    }
    conf.flush()?;
    eprintln!(
        "wrote {} triples, {} users and {} edges (theta {theta}) to {}",
        p.corpus.num_triples(),
        g.num_users(),
        g.num_edges(),
        dir.display()
    );
    Ok(())
}

async fn query(
    server: &str,
    req: CreateSession,
    text: &str,
    out: &mut impl Write,
) -> Result<(), Box<dyn std::error::Error>> {
    let client = Client::new(server);
    let id = client.create_session(&req).await?;
    let mut typed = String::new();
    for event in KeystrokeEvent::typing(text) {
        typed.push(match &event {
            KeystrokeEvent::Char { value } => value.chars().next().unwrap_or(' '),
            _ => ' ',
        });
        let r = client.keystroke(&id, &event).await?;
        let items: Vec<String> = r
            .items
            .iter()
            .map(|i| format!("{}[{:.3},{:.3}]", i.item, i.min.0, i.max.0))
            .collect();
        writeln!(
            out,
            "{typed:?}\t{}\t{:.1} ms\t{} users\t{}",
            if r.exact { "exact" } else { "anytime" },
            r.elapsed_ms,
            r.visited_users,
            items.join(" ")
        )?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), Box<dyn std::error::Error>> {
    match cli.command {
        Command::Precision(exp) => {
            let spec = exp.spec(&[1, 2, 3, 4, 5])?;
            let r = leave_one_out_precision(&spec)?;
            let extra = json!({ "theta_weight": r.theta_weight, "tf_scale": r.tf_scale });
            write_jsonl(report_sink(&exp.out)?, "precision", &spec, &extra, &r.rows)?;
        }
        Command::Ndcg { exp, visited, times_ms } => {
            let spec = exp.spec(&[2, 3])?;
            let r = ndcg_trace(&spec, &visited, &times_ms)?;
            write_jsonl(report_sink(&exp.out)?, "ndcg", &spec, &json!({}), &r.points)?;
        }
        Command::Scale { exp, chunks } => {
            let spec = exp.spec(&[2, 3, 4, 5])?;
            let r = scalability_sweep(&spec, chunks)?;
            write_jsonl(
                report_sink(&exp.out)?,
                "scale",
                &spec,
                &json!({ "chunks": chunks }),
                &r.rows,
            )?;
            let l3: Vec<f64> = r.rows.iter().filter(|row| row.l == 3).map(|row| row.mean_ms).collect();
            if let (Some(first), Some(last)) = (l3.first(), l3.last()) {
                eprintln!("l=3: full data takes {:.2}x the time of the first chunk", last / first);
            }
        }
        Command::Synth { synth, seed, out } => {
            std::fs::create_dir_all(&out)?;
            let spec = synth.spec(seed.unwrap_or(SynthSpec::default().seed));
            write_synthetic(
                &spec,
                File::create(out.join("triples.tsv"))?,
                File::create(out.join("edges.tsv"))?,
            )?;
        }
        Command::ServePrep { exp } => {
            let dir = exp.out.clone().ok_or("serve-prep needs --out <directory>")?;
            serve_prep(&exp.spec(&[1])?, &dir)?;
        }
        Command::Query {
            server,
            seeker,
            k,
            alpha,
            budget_ms,
            text,
        } => {
            let req = CreateSession {
                seeker,
                k,
                alpha,
                budget_ms,
            };
            let rt = tokio::runtime::Builder::new_current_thread().enable_all().build()?;
            rt.block_on(query(&server, req, &text, &mut std::io::stdout().lock()))?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
