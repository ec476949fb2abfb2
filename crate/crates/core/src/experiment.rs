//! Replicated, reproducible experiments driven by a TOML configuration.
//!
//! A run produces one record per replication plus a summary. The output
//! carries the artifact version and a hash of the configuration, so it can be
//! re-run later and compared field by field; wall-clock data lives in a
//! separate `metadata` block that the comparison ignores.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::estimators::{
    estimate_edges, estimate_edges_burnin, estimate_vertices_general, estimate_vertices_regular,
    EstimateError,
};
use crate::generators::{GenError, GenSpec};
use crate::graph::{load_graph, Graph, GraphError};
use crate::oracle::{self, BoundReport, OracleError, SpectralSummary};
use crate::stopping::{self, StoppingError, StoppingParams};
use crate::walk::{derive_seed, RNG_ALGORITHM};

pub const SCHEMA_VERSION: u32 = 1;
pub const ARTIFACT_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Columns of the CSV output, in order.
pub const CSV_COLUMNS: [&str; 6] = ["row", "seed", "value", "steps", "within_target", "std"];

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("config: {0}")]
    Config(String),
    #[error("i/o: {0}")]
    Io(String),
    #[error("graph: {0}")]
    Graph(#[from] GraphError),
    #[error("generator: {0}")]
    Generator(#[from] GenError),
    #[error("estimator: {0}")]
    Estimate(#[from] EstimateError),
    #[error("stopping: {0}")]
    Stopping(#[from] StoppingError),
    #[error("oracle: {0}")]
    Oracle(#[from] OracleError),
    #[error("record was produced by schema {record_schema} / version {record_version}, this is schema {SCHEMA_VERSION} / version {ARTIFACT_VERSION}")]
    VersionMismatch {
        record_schema: u32,
        record_version: String,
    },
    #[error("config hash mismatch: record says {recorded}, config hashes to {computed}")]
    ConfigHashMismatch { recorded: String, computed: String },
    #[error("output diverges at {field}: recorded {recorded}, re-run gives {rerun}")]
    Divergence {
        field: String,
        recorded: String,
        rerun: String,
    },
    #[error("malformed record: {0}")]
    Malformed(String),
}

impl From<std::io::Error> for ExperimentError {
    fn from(e: std::io::Error) -> Self {
        ExperimentError::Io(e.to_string())
    }
}

/// Where the graph comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GraphSource {
    File { file: PathBuf },
    Generated(GenSpec),
}

impl GraphSource {
    pub fn load(&self) -> Result<Graph, ExperimentError> {
        match self {
            GraphSource::File { file } => {
                let f = std::fs::File::open(file)
                    .map_err(|e| ExperimentError::Io(format!("{}: {e}", file.display())))?;
                Ok(load_graph(std::io::BufReader::new(f))?)
            }
            GraphSource::Generated(spec) => Ok(spec.build()?),
        }
    }
}

fn default_k() -> usize {
    crate::estimators::DEFAULT_PAIRS
}
fn default_stop_k() -> usize {
    stopping::DEFAULT_K
}
fn default_c() -> f64 {
    stopping::DEFAULT_C
}
fn default_max_q() -> u32 {
    stopping::DEFAULT_MAX_Q
}

/// The operation run in every replication.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Operation {
    EstimateVertices {
        x: usize,
        t: usize,
        #[serde(default = "default_k")]
        k: usize,
    },
    EstimateEdges {
        x: usize,
        t: usize,
        #[serde(default = "default_k")]
        k: usize,
        #[serde(default)]
        burn_in: Option<usize>,
    },
    EstimateVerticesGeneral {
        x: usize,
        m_hat: f64,
        burn_in: usize,
        t: usize,
    },
    SelfstopEdges {
        x: usize,
        tau: usize,
        eps: f64,
        #[serde(default = "default_stop_k")]
        k: usize,
        #[serde(default = "default_max_q")]
        max_q: u32,
    },
    SelfstopMixing {
        x: usize,
        m: usize,
        delta: f64,
        eps: f64,
        #[serde(default = "default_c")]
        c: f64,
        #[serde(default = "default_max_q")]
        max_q: u32,
    },
    /// Exact quantities; deterministic, so replications are ignored.
    Oracle {
        #[serde(default)]
        x: usize,
        #[serde(default)]
        t: Option<usize>,
        #[serde(default)]
        delta: Option<f64>,
        #[serde(default)]
        sweep: bool,
    },
}

/// Replications whose value lands in this set count as successes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Target {
    /// `|value / truth − 1| ≤ tolerance`.
    Relative { truth: f64, tolerance: f64 },
    /// `lo ≤ value ≤ hi`.
    Interval { lo: f64, hi: f64 },
}

impl Target {
    pub fn contains(&self, v: f64) -> bool {
        match *self {
            Target::Relative { truth, tolerance } => (v / truth - 1.0).abs() <= tolerance,
            Target::Interval { lo, hi } => lo <= v && v <= hi,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputSpec {
    pub path: PathBuf,
    #[serde(default)]
    pub format: Format,
}

fn default_replications() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub graph: GraphSource,
    pub operation: Operation,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_replications")]
    pub replications: usize,
    #[serde(default)]
    pub target: Option<Target>,
    /// Not part of the hashed experiment identity.
    #[serde(default, skip_serializing)]
    pub output: Option<OutputSpec>,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, ExperimentError> {
        toml::from_str(text).map_err(|e| ExperimentError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, ExperimentError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ExperimentError::Io(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    /// SHA-256 of the canonical JSON form, hex encoded.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_string(self).expect("config serializes");
        hex::encode(Sha256::digest(canonical.as_bytes()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub replication: usize,
    pub seed: u64,
    pub value: f64,
    pub steps: u64,
    pub within_target: Option<bool>,
    /// Full result of the operation (estimate or stopping log).
    #[serde(default, skip_serializing_if = "Value::is_null")]
    pub detail: Value,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub count: usize,
    pub mean: f64,
    pub std: f64,
    pub success_fraction: Option<f64>,
    pub total_steps: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphInfo {
    pub n: usize,
    pub m: usize,
    pub fingerprint: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OracleReport {
    pub spectral: SpectralSummary,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub expectations: Option<Expectations>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mixing_time: Option<MixingTime>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bounds: Option<BoundReport>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Expectations {
    pub x: usize,
    pub t: usize,
    pub weighted_intersections: f64,
    pub weighted_intersections_return_form: f64,
    pub burn_in_intersections: f64,
    pub expected_l: f64,
    pub l2_distance_sq: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MixingTime {
    pub x: usize,
    pub delta: f64,
    pub t: usize,
}

/// Exact oracle quantities for the CLI and `oracle` experiments.
pub fn oracle_report(
    g: &Graph,
    x: usize,
    t: Option<usize>,
    delta: Option<f64>,
    sweep: bool,
) -> Result<OracleReport, OracleError> {
    let spectral = oracle::spectral_summary(g)?;
    let expectations = match t {
        Some(t) => Some(Expectations {
            x,
            t,
            weighted_intersections: oracle::expected_weighted_intersections(g, x, t)?,
            weighted_intersections_return_form:
                oracle::expected_weighted_intersections_return_form(g, x, t)?,
            burn_in_intersections: oracle::expected_j(g, x, t, spectral.t_unif)?,
            expected_l: oracle::expected_l(g, x, t)?,
            l2_distance_sq: oracle::l2_distance_sq(g, x, t)?,
        }),
        None => None,
    };
    let mixing_time = match delta {
        Some(delta) => Some(MixingTime {
            x,
            delta,
            t: oracle::mixing_time_from(g, x, delta)?,
        }),
        None => None,
    };
    let bounds = if sweep {
        Some(oracle::verify_bounds(g)?)
    } else {
        None
    };
    Ok(OracleReport {
        spectral,
        expectations,
        mixing_time,
        bounds,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Metadata {
    pub wall_clock_seconds: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentOutput {
    pub schema_version: u32,
    pub artifact_version: String,
    pub config_hash: String,
    pub rng: String,
    pub log_base: String,
    pub config: ExperimentConfig,
    pub graph: GraphInfo,
    pub records: Vec<Record>,
    pub summary: Summary,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oracle: Option<OracleReport>,
    pub metadata: Metadata,
}

fn replicate(g: &Graph, op: &Operation, seed: u64) -> Result<(f64, u64, Value), ExperimentError> {
    Ok(match *op {
        Operation::EstimateVertices { x, t, k } => {
            let r = estimate_vertices_regular(g, x, t, k, seed)?;
            (r.value, r.diagnostics.total_steps, to_value(&r))
        }
        Operation::EstimateEdges { x, t, k, burn_in } => {
            let r = match burn_in {
                Some(b) => estimate_edges_burnin(g, x, t, k, b, seed)?,
                None => estimate_edges(g, x, t, k, seed)?,
            };
            (r.value, r.diagnostics.total_steps, to_value(&r))
        }
        Operation::EstimateVerticesGeneral {
            x,
            m_hat,
            burn_in,
            t,
        } => {
            let r = estimate_vertices_general(g, x, m_hat, burn_in, t, seed)?;
            (r.value, r.diagnostics.total_steps, to_value(&r))
        }
        Operation::SelfstopEdges {
            x,
            tau,
            eps,
            k,
            max_q,
        } => {
            let params = StoppingParams::Edges {
                x,
                tau,
                eps,
                k,
                max_q,
            };
            let log = stopping::run(g, &params, seed)?;
            (log.final_value as f64, log.total_steps, to_value(&log))
        }
        Operation::SelfstopMixing {
            x,
            m,
            delta,
            eps,
            c,
            max_q,
        } => {
            let params = StoppingParams::Mixing {
                x,
                m,
                delta,
                eps,
                c,
                max_q,
            };
            let log = stopping::run(g, &params, seed)?;
            (log.final_value as f64, log.total_steps, to_value(&log))
        }
        Operation::Oracle { .. } => unreachable!("oracle runs are not replicated"),
    })
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("result serializes")
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentOutput, ExperimentError> {
    let started = Instant::now();
    let g = config.graph.load()?;
    let graph = GraphInfo {
        n: g.vertex_count(),
        m: g.edge_count(),
        fingerprint: format!("{:016x}", g.fingerprint()),
    };
    let mut oracle_out = None;
    let records = match config.operation {
        Operation::Oracle { x, t, delta, sweep } => {
            oracle_out = Some(oracle_report(&g, x, t, delta, sweep)?);
            Vec::new()
        }
        ref op => {
            if config.replications == 0 {
                return Err(ExperimentError::Config(
                    "replications must be at least 1".into(),
                ));
            }
            (0..config.replications)
                .into_par_iter()
                .map(|i| {
                    let seed = derive_seed(config.seed, i as u64);
                    let (value, steps, detail) = replicate(&g, op, seed)?;
                    Ok(Record {
                        replication: i,
                        seed,
                        value,
                        steps,
                        within_target: config.target.as_ref().map(|t| t.contains(value)),
                        detail,
                    })
                })
                .collect::<Result<Vec<_>, ExperimentError>>()?
        }
    };
    let summary = summarize(&records, oracle_out.as_ref());
    Ok(ExperimentOutput {
        schema_version: SCHEMA_VERSION,
        artifact_version: ARTIFACT_VERSION.into(),
        config_hash: config.hash(),
        rng: RNG_ALGORITHM.into(),
        log_base: stopping::LOG_BASE.into(),
        config: config.clone(),
        graph,
        records,
        summary,
        oracle: oracle_out,
        metadata: Metadata {
            wall_clock_seconds: started.elapsed().as_secs_f64(),
        },
    })
}

fn summarize(records: &[Record], oracle: Option<&OracleReport>) -> Summary {
    let values: Vec<f64> = records.iter().map(|r| r.value).collect();
    let (mean, var) = if values.is_empty() {
        (0.0, 0.0)
    } else {
        crate::estimators::mean_and_variance(&values)
    };
    let flags: Vec<bool> = records.iter().filter_map(|r| r.within_target).collect();
    let mut success_fraction = (!flags.is_empty())
        .then(|| flags.iter().filter(|&&b| b).count() as f64 / flags.len() as f64);
    if let Some(b) = oracle.and_then(|o| o.bounds.as_ref()) {
        success_fraction = Some(if b.all_passed { 1.0 } else { 0.0 });
    }
    Summary {
        count: records.len(),
        mean,
        std: var.sqrt(),
        success_fraction,
        total_steps: records.iter().map(|r| r.steps).sum(),
    }
}

pub fn render_json(out: &ExperimentOutput) -> String {
    let mut s = serde_json::to_string_pretty(out).expect("output serializes");
    s.push('\n');
    s
}

fn opt_bool(b: Option<bool>) -> String {
    b.map_or(String::new(), |b| b.to_string())
}

/// CSV body with `#` header lines carrying the provenance needed to re-run.
pub fn render_csv(out: &ExperimentOutput) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# schema_version={}", out.schema_version);
    let _ = writeln!(s, "# artifact_version={}", out.artifact_version);
    let _ = writeln!(s, "# config_hash={}", out.config_hash);
    let _ = writeln!(s, "# rng={}", out.rng);
    let _ = writeln!(s, "# log_base={}", out.log_base);
    let _ = writeln!(s, "# graph={}", serde_json::to_string(&out.graph).unwrap());
    let _ = writeln!(
        s,
        "# config={}",
        serde_json::to_string(&out.config).unwrap()
    );
    let mut w = csv::WriterBuilder::new().from_writer(Vec::new());
    w.write_record(CSV_COLUMNS).unwrap();
    for r in &out.records {
        w.write_record([
            r.replication.to_string(),
            r.seed.to_string(),
            r.value.to_string(),
            r.steps.to_string(),
            opt_bool(r.within_target),
            String::new(),
        ])
        .unwrap();
    }
    let sm = &out.summary;
    w.write_record([
        "summary".to_string(),
        String::new(),
        sm.mean.to_string(),
        sm.total_steps.to_string(),
        sm.success_fraction.map_or(String::new(), |f| f.to_string()),
        sm.std.to_string(),
    ])
    .unwrap();
    s.push_str(&String::from_utf8(w.into_inner().unwrap()).unwrap());
    let _ = writeln!(
        s,
        "# metadata={}",
        serde_json::to_string(&out.metadata).unwrap()
    );
    s
}

pub fn render(out: &ExperimentOutput, format: Format) -> String {
    match format {
        Format::Json => render_json(out),
        Format::Csv => render_csv(out),
    }
}

pub fn write_output(out: &ExperimentOutput, spec: &OutputSpec) -> Result<(), ExperimentError> {
    std::fs::write(&spec.path, render(out, spec.format))
        .map_err(|e| ExperimentError::Io(format!("{}: {e}", spec.path.display())))
}

/// A parsed output record: the provenance and the comparable body.
struct Recorded {
    schema: u32,
    version: String,
    hash: String,
    config: ExperimentConfig,
    format: Format,
    text: String,
}

fn parse_recorded(text: &str) -> Result<Recorded, ExperimentError> {
    let malformed = |m: &str| ExperimentError::Malformed(m.into());
    if text.trim_start().starts_with('{') {
        let v: Value = serde_json::from_str(text).map_err(|e| malformed(&e.to_string()))?;
        let schema = v["schema_version"]
            .as_u64()
            .ok_or_else(|| malformed("missing schema_version"))? as u32;
        let version = v["artifact_version"]
            .as_str()
            .ok_or_else(|| malformed("missing artifact_version"))?
            .to_string();
        let hash = v["config_hash"]
            .as_str()
            .ok_or_else(|| malformed("missing config_hash"))?
            .to_string();
        let config: ExperimentConfig = serde_json::from_value(v["config"].clone())
            .map_err(|e| malformed(&format!("config: {e}")))?;
        return Ok(Recorded {
            schema,
            version,
            hash,
            config,
            format: Format::Json,
            text: text.to_string(),
        });
    }
    let header = |key: &str| {
        let prefix = format!("# {key}=");
        text.lines()
            .find_map(|l| l.strip_prefix(&prefix).map(str::to_string))
            .ok_or_else(|| malformed(&format!("missing header {key}")))
    };
    let schema = header("schema_version")?
        .parse()
        .map_err(|_| malformed("schema_version"))?;
    let config: ExperimentConfig =
        serde_json::from_str(&header("config")?).map_err(|e| malformed(&format!("config: {e}")))?;
    Ok(Recorded {
        schema,
        version: header("artifact_version")?,
        hash: header("config_hash")?,
        config,
        format: Format::Csv,
        text: text.to_string(),
    })
}

fn first_json_divergence(path: &str, a: &Value, b: &Value) -> Option<(String, String, String)> {
    match (a, b) {
        (Value::Object(x), Value::Object(y)) => {
            for (k, va) in x {
                if path.is_empty() && k == "metadata" {
                    continue;
                }
                let p = if path.is_empty() {
                    k.clone()
                } else {
                    format!("{path}.{k}")
                };
                match y.get(k) {
                    Some(vb) => {
                        if let Some(d) = first_json_divergence(&p, va, vb) {
                            return Some(d);
                        }
                    }
                    None => return Some((p, va.to_string(), "<absent>".into())),
                }
            }
            y.keys()
                .find(|k| !x.contains_key(*k) && !(path.is_empty() && *k == "metadata"))
                .map(|k| (format!("{path}.{k}"), "<absent>".into(), y[k].to_string()))
        }
        (Value::Array(x), Value::Array(y)) => {
            for (i, (va, vb)) in x.iter().zip(y).enumerate() {
                if let Some(d) = first_json_divergence(&format!("{path}[{i}]"), va, vb) {
                    return Some(d);
                }
            }
            (x.len() != y.len()).then(|| {
                (
                    format!("{path}.length"),
                    x.len().to_string(),
                    y.len().to_string(),
                )
            })
        }
        _ => (a != b).then(|| (path.to_string(), a.to_string(), b.to_string())),
    }
}

fn first_csv_divergence(recorded: &str, rerun: &str) -> Option<(String, String, String)> {
    let body = |s: &str| -> Vec<Vec<String>> {
        let lines: Vec<&str> = s
            .lines()
            .filter(|l| !l.starts_with("# metadata="))
            .collect();
        let mut rows = Vec::new();
        let (comments, data): (Vec<&str>, Vec<&str>) =
            lines.into_iter().partition(|l| l.starts_with('#'));
        for c in comments {
            rows.push(vec![c.to_string()]);
        }
        let joined = data.join("\n");
        let mut r = csv::ReaderBuilder::new()
            .has_headers(false)
            .from_reader(joined.as_bytes());
        for rec in r.records().flatten() {
            rows.push(rec.iter().map(str::to_string).collect());
        }
        rows
    };
    let (a, b) = (body(recorded), body(rerun));
    let header: Vec<String> = CSV_COLUMNS.iter().map(|s| s.to_string()).collect();
    for (i, (ra, rb)) in a.iter().zip(&b).enumerate() {
        for (j, (fa, fb)) in ra.iter().zip(rb).enumerate() {
            if fa != fb {
                let field = if ra.len() == header.len() {
                    format!("line {} column {}", i + 1, header[j])
                } else {
                    format!("line {}", i + 1)
                };
                return Some((field, fa.clone(), fb.clone()));
            }
        }
        if ra.len() != rb.len() {
            return Some((format!("line {}", i + 1), ra.join(","), rb.join(",")));
        }
    }
    (a.len() != b.len()).then(|| ("row count".into(), a.len().to_string(), b.len().to_string()))
}

/// Outcome of a successful [`reproduce`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Verification {
    pub config_hash: String,
    pub records: usize,
    pub matched: bool,
}

/// Re-runs the experiment recorded in `text` (JSON or CSV output) and
/// compares everything except the metadata block.
pub fn reproduce(text: &str) -> Result<Verification, ExperimentError> {
    let rec = parse_recorded(text)?;
    if rec.schema != SCHEMA_VERSION || rec.version != ARTIFACT_VERSION {
        return Err(ExperimentError::VersionMismatch {
            record_schema: rec.schema,
            record_version: rec.version,
        });
    }
    let computed = rec.config.hash();
    if computed != rec.hash {
        return Err(ExperimentError::ConfigHashMismatch {
            recorded: rec.hash,
            computed,
        });
    }
    let out = run_experiment(&rec.config)?;
    let divergence = match rec.format {
        Format::Json => {
            let a: Value = serde_json::from_str(&rec.text)
                .map_err(|e| ExperimentError::Malformed(e.to_string()))?;
            let b = serde_json::to_value(&out).expect("output serializes");
            first_json_divergence("", &a, &b)
        }
        Format::Csv => first_csv_divergence(&rec.text, &render_csv(&out)),
    };
    if let Some((field, recorded, rerun)) = divergence {
        return Err(ExperimentError::Divergence {
            field,
            recorded,
            rerun,
        });
    }
    Ok(Verification {
        config_hash: rec.hash,
        records: out.records.len(),
        matched: true,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const EDGES: &str = r#"
seed = 7
replications = 6
target = { truth = 16.0, tolerance = 0.5 }

[graph]
family = "barbell"
clique_size = 4
path_length = 4

[operation]
name = "estimate-edges"
x = 0
t = 60
k = 30
"#;

    #[test]
    fn config_parses_and_hashes_stably() {
        let c = ExperimentConfig::from_toml(EDGES).unwrap();
        assert_eq!(c.replications, 6);
        assert_eq!(
            c.graph,
            GraphSource::Generated(
                GenSpec::parse("barbell", "clique_size=4,path_length=4", 0).unwrap()
            )
        );
        assert_eq!(c.hash(), ExperimentConfig::from_toml(EDGES).unwrap().hash());
        let mut d = c.clone();
        d.seed = 8;
        assert_ne!(c.hash(), d.hash());
        let mut e = c.clone();
        e.output = Some(OutputSpec {
            path: "elsewhere.json".into(),
            format: Format::Csv,
        });
        assert_eq!(c.hash(), e.hash());
    }

    #[test]
    fn bad_config_is_reported() {
        let err = ExperimentConfig::from_toml(
            "seed = 1\n[graph]\nfamily = \"cycle\"\nn = 5\n[operation]\nname = \"nope\"\n",
        )
        .unwrap_err();
        assert!(matches!(err, ExperimentError::Config(_)));
    }

    #[test]
    fn records_and_summary() {
        let c = ExperimentConfig::from_toml(EDGES).unwrap();
        let out = run_experiment(&c).unwrap();
        assert_eq!(out.records.len(), 6);
        let seeds: Vec<u64> = out.records.iter().map(|r| r.seed).collect();
        let expect: Vec<u64> = (0..6).map(|i| derive_seed(7, i)).collect();
        assert_eq!(seeds, expect);
        let steps: u64 = out.records.iter().map(|r| r.steps).sum();
        assert_eq!(out.summary.total_steps, steps);
        assert_eq!(steps, 6 * 2 * 30 * 60);
        assert!(out.summary.success_fraction.is_some());
        // same config, same bytes (metadata aside)
        let again = run_experiment(&c).unwrap();
        let mut a = serde_json::to_value(&out).unwrap();
        let mut b = serde_json::to_value(&again).unwrap();
        a["metadata"] = Value::Null;
        b["metadata"] = Value::Null;
        assert_eq!(a, b);
    }

    #[test]
    fn json_and_csv_reproduce() {
        let c = ExperimentConfig::from_toml(EDGES).unwrap();
        let out = run_experiment(&c).unwrap();
        assert!(reproduce(&render_json(&out)).unwrap().matched);
        let csv = render_csv(&out);
        assert_eq!(
            csv.lines().filter(|l| !l.starts_with('#')).count(),
            1 + 6 + 1
        );
        assert!(reproduce(&csv).unwrap().matched);
    }

    #[test]
    fn tampering_is_detected() {
        let c = ExperimentConfig::from_toml(EDGES).unwrap();
        let out = run_experiment(&c).unwrap();

        let mut seed_changed = out.clone();
        seed_changed.records[2].seed ^= 1;
        match reproduce(&render_json(&seed_changed)).unwrap_err() {
            ExperimentError::Divergence { field, .. } => assert_eq!(field, "records[2].seed"),
            e => panic!("unexpected {e}"),
        }

        let mut master_changed = out.clone();
        master_changed.config.seed = 8;
        assert!(matches!(
            reproduce(&render_json(&master_changed)).unwrap_err(),
            ExperimentError::ConfigHashMismatch { .. }
        ));

        let mut old = out.clone();
        old.artifact_version = "0.0.1".into();
        assert!(matches!(
            reproduce(&render_csv(&old)).unwrap_err(),
            ExperimentError::VersionMismatch { .. }
        ));

        let csv = render_csv(&out).replace(&format!(",{},", out.records[0].seed), ",1,");
        match reproduce(&csv).unwrap_err() {
            ExperimentError::Divergence { field, .. } => assert!(field.contains("seed"), "{field}"),
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn oracle_sweep_experiment() {
        let c = ExperimentConfig::from_toml(
            "[graph]\nfamily = \"complete\"\nn = 3\n[operation]\nname = \"oracle\"\nsweep = true\nt = 4\ndelta = 0.25\n",
        )
        .unwrap();
        let out = run_experiment(&c).unwrap();
        let report = out.oracle.as_ref().unwrap();
        assert!(report.bounds.as_ref().unwrap().all_passed);
        assert_eq!(out.summary.success_fraction, Some(1.0));
        assert!(reproduce(&render_json(&out)).unwrap().matched);
    }

    #[test]
    fn targets() {
        let rel = Target::Relative {
            truth: 10.0,
            tolerance: 0.5,
        };
        assert!(rel.contains(5.0) && rel.contains(15.0) && !rel.contains(15.1));
        let iv = Target::Interval { lo: 2.0, hi: 4.0 };
        assert!(iv.contains(2.0) && !iv.contains(4.5));
    }
}
