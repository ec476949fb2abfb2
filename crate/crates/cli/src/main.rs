use std::io::{self, BufReader, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use rwest_core::estimators::{self, pair_counts};
use rwest_core::experiment::{self, ExperimentConfig, Format, OutputSpec};
use rwest_core::generators::{GenSpec, FAMILY_NAMES};
use rwest_core::intersections::WindowSpec;
use rwest_core::oracle;
use rwest_core::stopping::{self, StoppingParams};
use rwest_core::walk::{self, derive_seed, WalkSource};
use rwest_core::{load_graph, Graph};

const OUTPUT_HELP: &str = "\
Experiment output (schema version 1):
  JSON  one object with schema_version, artifact_version, config_hash, rng,
        log_base, config, graph {n, m, fingerprint}, records[], summary,
        optional oracle, and a metadata block (wall clock) that reproduce ignores.
  CSV   '#'-prefixed provenance lines, then columns
          row, seed, value, steps, within_target, std
        one row per replication followed by a 'summary' row where value is the
        mean, steps the total step count, within_target the success fraction and
        std the sample standard deviation; a final '# metadata=' line holds the
        wall clock.";

#[derive(Parser)]
#[command(
    name = "rwest",
    version,
    about = "Estimate edge count, vertex count and mixing time from lazy random walk intersections",
    after_help = OUTPUT_HELP
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct GraphArg {
    /// Edge-list file ("n m" header, one "u v" pair per line); "-" reads stdin.
    #[arg(long)]
    graph: PathBuf,
}

#[derive(Args)]
struct OutArg {
    /// Write to this file instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a graph in canonical edge-list format.
    Generate {
        #[arg(long, value_parser = clap::builder::PossibleValuesParser::new(FAMILY_NAMES))]
        family: String,
        /// Family parameters, e.g. "k=8,ell=5".
        #[arg(long, default_value = "")]
        params: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        out: OutArg,
    },
    /// Print one lazy walk as whitespace-separated vertex ids.
    Walk {
        #[command(flatten)]
        graph: GraphArg,
        #[arg(long)]
        start: usize,
        /// Number of positions, including the start.
        #[arg(long)]
        steps: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Print the profile of one walk as CSV columns rank,degree.
    Profile {
        #[command(flatten)]
        graph: GraphArg,
        #[arg(long)]
        start: usize,
        #[arg(long)]
        steps: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Per-pair intersection counts with the running mean, as CSV.
    Intersect {
        #[command(flatten)]
        graph: GraphArg,
        #[arg(long)]
        start: usize,
        #[arg(long)]
        t: usize,
        #[arg(long, default_value_t = estimators::DEFAULT_PAIRS)]
        pairs: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Running mean of the degree-weighted count instead of the plain one.
        #[arg(long)]
        weighted: bool,
        /// Burn-in before the window: a step count or "auto" (oracle t_unif).
        #[arg(long)]
        burn_in: Option<BurnIn>,
    },
    /// Edge count estimate t²/(2·mean weighted intersections), as JSON.
    EstimateEdges {
        #[command(flatten)]
        est: EstimateArgs,
        /// Burn-in: a step count or "auto" (oracle t_unif).
        #[arg(long)]
        burn_in: Option<BurnIn>,
    },
    /// Vertex count estimate t²/mean intersections on a regular graph, as JSON.
    EstimateVertices {
        #[command(flatten)]
        est: EstimateArgs,
    },
    /// Vertex count from an edge estimate and the mean inverse degree, as JSON.
    EstimateVerticesGeneral {
        #[command(flatten)]
        graph: GraphArg,
        #[arg(long)]
        start: usize,
        #[arg(long)]
        t: usize,
        #[arg(long)]
        m_hat: f64,
        /// Burn-in: a step count or "auto" (oracle t_unif).
        #[arg(long)]
        burn_in: BurnIn,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Self-stopping edge count search; prints the value and its log as JSON.
    SelfstopEdges {
        #[command(flatten)]
        graph: GraphArg,
        #[arg(long)]
        start: usize,
        #[arg(long)]
        tau: usize,
        #[arg(long, default_value_t = 0.2)]
        eps: f64,
        #[arg(long, default_value_t = stopping::DEFAULT_K)]
        k: usize,
        #[arg(long, default_value_t = stopping::DEFAULT_MAX_Q)]
        max_q: u32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Self-stopping mixing time search given m; prints the value and its log as JSON.
    SelfstopMixing {
        #[command(flatten)]
        graph: GraphArg,
        #[arg(long)]
        start: usize,
        #[arg(long)]
        m: usize,
        #[arg(long, default_value_t = 0.5)]
        delta: f64,
        #[arg(long, default_value_t = 0.2)]
        eps: f64,
        #[arg(long, default_value_t = stopping::DEFAULT_C)]
        c: f64,
        #[arg(long, default_value_t = stopping::DEFAULT_MAX_Q)]
        max_q: u32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Composition: selfstop-edges, then selfstop-mixing with the returned edge count.
    ///
    /// The edge search uses derive_seed(seed, 0) and the mixing search derive_seed(seed, 1).
    /// The mixing stage only stops when the edge count is close to exact; with a
    /// coarse one it fails at its round cap.
    PipelineEdgesThenMixing {
        #[command(flatten)]
        graph: GraphArg,
        #[arg(long)]
        start: usize,
        #[arg(long)]
        tau: usize,
        #[arg(long, default_value_t = 0.2)]
        eps: f64,
        #[arg(long, default_value_t = stopping::DEFAULT_K)]
        k: usize,
        #[arg(long, default_value_t = 0.5)]
        delta: f64,
        #[arg(long, default_value_t = stopping::DEFAULT_C)]
        c: f64,
        #[arg(long, default_value_t = stopping::DEFAULT_MAX_Q)]
        max_q: u32,
        /// Round cap for the mixing stage; defaults to ⌈log2 τ⌉ + 2, since τ
        /// bounds the mixing time and an overestimated m never stops.
        #[arg(long)]
        mixing_max_q: Option<u32>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Exact spectral summary, expectations and bound verification, as JSON.
    ///
    /// Graphs above RWEST_ORACLE_CAP vertices (default 4096) are refused.
    Oracle {
        #[command(flatten)]
        graph: GraphArg,
        #[arg(long, default_value_t = 0)]
        start: usize,
        #[arg(long, conflicts_with = "sweep")]
        t: Option<usize>,
        /// Run the full bound sweep.
        #[arg(long)]
        sweep: bool,
        /// Also report the ℓ² mixing time from the start at this threshold.
        #[arg(long)]
        delta: Option<f64>,
    },
    /// Run an experiment described by a TOML config file.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the config's output path.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum)]
        format: Option<OutFormat>,
    },
    /// Re-run a recorded experiment output and compare it field by field.
    Reproduce {
        /// JSON or CSV output written by `run`.
        record: PathBuf,
    },
}

#[derive(Args)]
struct EstimateArgs {
    #[command(flatten)]
    graph: GraphArg,
    #[arg(long)]
    start: usize,
    #[arg(long)]
    t: usize,
    /// Number of walk pairs.
    #[arg(long, default_value_t = estimators::DEFAULT_PAIRS)]
    k: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Clone, Copy, Debug)]
enum BurnIn {
    Auto,
    Steps(usize),
}

impl std::str::FromStr for BurnIn {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        if s == "auto" {
            return Ok(BurnIn::Auto);
        }
        s.parse()
            .map(BurnIn::Steps)
            .map_err(|_| format!("expected a step count or \"auto\", got {s:?}"))
    }
}

impl BurnIn {
    fn resolve(self, g: &Graph) -> Result<usize> {
        match self {
            BurnIn::Steps(b) => Ok(b),
            BurnIn::Auto => {
                let s = oracle::spectral_summary(g)
                    .context("resolving burn-in from the oracle; pass --burn-in explicitly")?;
                Ok(s.t_unif)
            }
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum OutFormat {
    Json,
    Csv,
}

fn default_mixing_max_q(tau: usize) -> u32 {
    tau.max(1).next_power_of_two().trailing_zeros() + 2
}

fn read_graph(path: &Path) -> Result<Graph> {
    let g = if path == Path::new("-") {
        let mut text = String::new();
        io::stdin().read_to_string(&mut text)?;
        load_graph(text.as_bytes())
    } else {
        let f = std::fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
        load_graph(BufReader::new(f))
    };
    g.with_context(|| format!("reading graph {}", path.display()))
}

fn emit(text: &str, out: Option<&Path>) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            let mut stdout = io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn emit_json<T: serde::Serialize>(v: &T) -> Result<()> {
    let mut s = serde_json::to_string_pretty(v)?;
    s.push('\n');
    emit(&s, None)
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Generate {
            family,
            params,
            seed,
            out,
        } => {
            let g = GenSpec::parse(&family, &params, seed)?.build()?;
            emit(&g.to_edge_list_string(), out.out.as_deref())
        }
        Command::Walk {
            graph,
            start,
            steps,
            seed,
        } => {
            let g = read_graph(&graph.graph)?;
            let trace = walk::simulate_lazy_walk(&g, start, steps, seed)?;
            let ids: Vec<String> = trace.steps.iter().map(usize::to_string).collect();
            emit(&(ids.join(" ") + "\n"), None)
        }
        Command::Profile {
            graph,
            start,
            steps,
            seed,
        } => {
            let g = read_graph(&graph.graph)?;
            let p = g.profile(start, steps, &[seed])?;
            let mut w = csv::Writer::from_writer(io::stdout().lock());
            w.write_record(["rank", "degree"])?;
            for (r, d) in p.ranks.iter().zip(&p.degrees) {
                w.write_record([r.to_string(), d.to_string()])?;
            }
            w.flush()?;
            Ok(())
        }
        Command::Intersect {
            graph,
            start,
            t,
            pairs,
            seed,
            weighted,
            burn_in,
        } => {
            let g = read_graph(&graph.graph)?;
            let b = burn_in.map(|b| b.resolve(&g)).transpose()?.unwrap_or(0);
            let counts = pair_counts(&g, start, WindowSpec::new(b, b + t)?, pairs, seed)?;
            let mut w = csv::Writer::from_writer(io::stdout().lock());
            w.write_record(["pair", "intersections", "weighted", "running_mean"])?;
            let mut sum = 0.0;
            for (i, (&c, &wc)) in counts.plain.iter().zip(&counts.weighted).enumerate() {
                sum += if weighted { wc } else { c as f64 };
                w.write_record([
                    i.to_string(),
                    c.to_string(),
                    wc.to_string(),
                    (sum / (i + 1) as f64).to_string(),
                ])?;
            }
            w.flush()?;
            Ok(())
        }
        Command::EstimateEdges { est, burn_in } => {
            let g = read_graph(&est.graph.graph)?;
            let r = match burn_in {
                Some(b) => {
                    let b = b.resolve(&g)?;
                    estimators::estimate_edges_burnin(&g, est.start, est.t, est.k, b, est.seed)?
                }
                None => estimators::estimate_edges(&g, est.start, est.t, est.k, est.seed)?,
            };
            emit_json(&r)
        }
        Command::EstimateVertices { est } => {
            let g = read_graph(&est.graph.graph)?;
            let r = estimators::estimate_vertices_regular(&g, est.start, est.t, est.k, est.seed)?;
            emit_json(&r)
        }
        Command::EstimateVerticesGeneral {
            graph,
            start,
            t,
            m_hat,
            burn_in,
            seed,
        } => {
            let g = read_graph(&graph.graph)?;
            let b = burn_in.resolve(&g)?;
            let r = estimators::estimate_vertices_general(&g, start, m_hat, b, t, seed)?;
            emit_json(&r)
        }
        Command::SelfstopEdges {
            graph,
            start,
            tau,
            eps,
            k,
            max_q,
            seed,
        } => {
            let g = read_graph(&graph.graph)?;
            let params = StoppingParams::Edges {
                x: start,
                tau,
                eps,
                k,
                max_q,
            };
            let log = stopping::run(&g, &params, seed)?;
            emit_json(&json!({ "value": log.final_value, "log": log }))
        }
        Command::SelfstopMixing {
            graph,
            start,
            m,
            delta,
            eps,
            c,
            max_q,
            seed,
        } => {
            let g = read_graph(&graph.graph)?;
            let params = StoppingParams::Mixing {
                x: start,
                m,
                delta,
                eps,
                c,
                max_q,
            };
            let log = stopping::run(&g, &params, seed)?;
            emit_json(&json!({ "value": log.final_value, "log": log }))
        }
        Command::PipelineEdgesThenMixing {
            graph,
            start,
            tau,
            eps,
            k,
            delta,
            c,
            max_q,
            mixing_max_q,
            seed,
        } => {
            let g = read_graph(&graph.graph)?;
            let edges = StoppingParams::Edges {
                x: start,
                tau,
                eps,
                k,
                max_q,
            };
            let edge_log =
                stopping::run(&g, &edges, derive_seed(seed, 0)).context("edge count stage")?;
            let mixing = StoppingParams::Mixing {
                x: start,
                m: edge_log.final_value as usize,
                delta,
                eps,
                c,
                max_q: mixing_max_q.unwrap_or(default_mixing_max_q(tau)),
            };
            let mixing_log =
                stopping::run(&g, &mixing, derive_seed(seed, 1)).with_context(|| {
                    format!(
                        "mixing time stage with m = {} (an overestimated edge count never stops)",
                        edge_log.final_value
                    )
                })?;
            emit_json(&json!({
                "m_hat": edge_log.final_value,
                "t_hat": mixing_log.final_value,
                "edges": edge_log,
                "mixing": mixing_log,
            }))
        }
        Command::Oracle {
            graph,
            start,
            t,
            sweep,
            delta,
        } => {
            let g = read_graph(&graph.graph)?;
            let report = experiment::oracle_report(&g, start, t, delta, sweep)?;
            emit_json(&report)
        }
        Command::Run {
            config,
            out,
            format,
        } => {
            let cfg = ExperimentConfig::load(&config)?;
            let mut spec = cfg.output.clone();
            if let Some(path) = out {
                spec = Some(OutputSpec {
                    path,
                    format: spec.map(|s| s.format).unwrap_or_default(),
                });
            }
            let format = match format {
                Some(OutFormat::Json) => Format::Json,
                Some(OutFormat::Csv) => Format::Csv,
                None => spec.as_ref().map(|s| s.format).unwrap_or_default(),
            };
            let result = experiment::run_experiment(&cfg)
                .with_context(|| format!("running {}", config.display()))?;
            let text = experiment::render(&result, format);
            emit(&text, spec.as_ref().map(|s| s.path.as_path()))
        }
        Command::Reproduce { record } => {
            let text = std::fs::read_to_string(&record)
                .with_context(|| format!("reading {}", record.display()))?;
            let v = experiment::reproduce(&text)?;
            emit_json(&v)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<io::Error>().is_some() {
                return ExitCode::from(2);
            }
            ExitCode::FAILURE
        }
    }
}
