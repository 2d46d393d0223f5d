use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;
use serde_json::{json, Value};

use quivernet::approx::{uat_sweep, ApproxError, BoxDomain, UatResult, WebSpec};
use quivernet::io::{IoError, QuiverFile};
use quivernet::metrics::{property_suite, MetricError};
use quivernet::network::{ActivationKind, Dataset, NetworkError};
use quivernet::representation::RepError;
use quivernet::scalar::matrix_to_json;
use quivernet::toric::BaseMap;
use quivernet::topology::{
    chain_comparison, chain_sweep, chi_rows_to_csv, dim_moduli, emit_chi_plot, euler_characteristic, parse_template,
    poincare_polynomial, sweep_to_csv, ChainKind, TopologyError,
};
use quivernet::trainer::{train, MetricMode, Termination, TrainConfig, TrainError};

const SCHEMA_VERSION: u32 = 1;

#[derive(Parser)]
#[command(name = "quivernet", version, about = "Neural networks on framed quiver moduli")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Output {
    /// Directory for reports and CSVs.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Print the report JSON to stdout instead of writing files.
    #[arg(long)]
    stdout: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Metric property suite on random stable representations.
    Verify {
        #[arg(long)]
        quiver: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 100)]
        samples: usize,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
        #[command(flatten)]
        output: Output,
    },
    /// Euler characteristics and Poincaré polynomials.
    Topology {
        /// Quiver file; prints the invariants of its moduli space.
        #[arg(long, conflicts_with_all = ["chain", "d", "sweep"])]
        quiver: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Chain::Both)]
        chain: Chain,
        /// Number of inner vertices; the template has `k + 2` entries.
        #[arg(long)]
        k: Option<usize>,
        /// Dimension template such as `600,m,m,m,10`.
        #[arg(long)]
        d: Option<String>,
        /// Range of `m`, e.g. `1..64` (inclusive).
        #[arg(long, default_value = "1..64")]
        sweep: String,
        #[command(flatten)]
        output: Output,
    },
    /// Gradient descent on the chart.
    Train {
        #[arg(long)]
        quiver: PathBuf,
        /// CSV with a header, input columns then target columns.
        #[arg(long)]
        data: PathBuf,
        /// TrainConfig JSON; flags override its fields.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        steps: Option<usize>,
        #[arg(long)]
        lr: Option<f64>,
        #[arg(long, value_enum)]
        metric: Option<Metric>,
        #[arg(long, value_enum, default_value_t = Activation::Sigma)]
        activation: Activation,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        tol: Option<f64>,
        #[command(flatten)]
        output: Output,
    },
    /// Constructive two-layer approximation on a web.
    Approx {
        /// `step`, `sin` or `csv:<path>` with columns `x,y` (1-d) or `x1,x2,y` (2-d).
        #[arg(long, default_value = "step")]
        target: String,
        /// Web JSON: `{"breakpoints": [...]}` or `{"n": 2, "steps": [...]}`.
        #[arg(long)]
        web: Option<PathBuf>,
        /// Domain box `lo,hi` per coordinate, e.g. `0,12` or `-1,1,-1,1`.
        #[arg(long, default_value = "0,12")]
        domain: String,
        /// Comma-separated scales.
        #[arg(long, default_value = "5,10,20")]
        t: String,
        #[command(flatten)]
        output: Output,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Chain {
    #[value(name = "A", alias = "a")]
    A,
    #[value(name = "Aprime", alias = "aprime")]
    Aprime,
    #[value(name = "both")]
    Both,
}

#[derive(Clone, Copy, ValueEnum)]
enum Metric {
    Euclidean,
    Ricci,
}

#[derive(Clone, Copy, ValueEnum)]
enum Activation {
    Sigma,
    Psi,
    None,
}

impl Activation {
    fn kind(self) -> ActivationKind {
        match self {
            Activation::Sigma => ActivationKind::Sigma(BaseMap::Simplex),
            Activation::Psi => ActivationKind::Psi,
            Activation::None => ActivationKind::Identity,
        }
    }
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Validation(String),
    Numerical(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Validation(_) => 2,
            Failure::Numerical(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Validation(m) | Failure::Numerical(m) => m,
        }
    }
}

fn numerical_metric(e: &MetricError) -> bool {
    match e {
        MetricError::Rep(r) => matches!(r, RepError::NonConvergence { .. } | RepError::SamplingFailed(_)),
        _ => true,
    }
}

impl From<IoError> for Failure {
    fn from(e: IoError) -> Self {
        Failure::Validation(e.to_string())
    }
}

impl From<TopologyError> for Failure {
    fn from(e: TopologyError) -> Self {
        Failure::Validation(e.to_string())
    }
}

impl From<MetricError> for Failure {
    fn from(e: MetricError) -> Self {
        if numerical_metric(&e) {
            Failure::Numerical(e.to_string())
        } else {
            Failure::Validation(e.to_string())
        }
    }
}

impl From<TrainError> for Failure {
    fn from(e: TrainError) -> Self {
        match &e {
            TrainError::SingularMetric { .. } => Failure::Numerical(e.to_string()),
            TrainError::Network(NetworkError::Metric(m)) if numerical_metric(m) => Failure::Numerical(e.to_string()),
            _ => Failure::Validation(e.to_string()),
        }
    }
}

impl From<ApproxError> for Failure {
    fn from(e: ApproxError) -> Self {
        match e {
            ApproxError::LiftFailure { .. } => Failure::Numerical(e.to_string()),
            _ => Failure::Validation(e.to_string()),
        }
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Validation(format!("{}: {e}", path.display())))
}

/// Writes the report (and extra files) or prints the report to stdout.
fn emit(output: &Output, name: &str, report: &Value, extra: &[(&str, String)], elapsed: f64) -> Result<(), Failure> {
    let text = serde_json::to_string_pretty(report).expect("reports serialize") + "\n";
    if output.stdout {
        print!("{text}");
        return Ok(());
    }
    fs::create_dir_all(&output.out).map_err(|e| Failure::Validation(format!("{}: {e}", output.out.display())))?;
    let write = |file: &str, body: &str| {
        let path = output.out.join(file);
        fs::write(&path, body).map_err(|e| Failure::Validation(format!("{}: {e}", path.display())))?;
        info!("wrote {}", path.display());
        Ok::<(), Failure>(())
    };
    write(&format!("{name}_report.json"), &text)?;
    for (file, body) in extra {
        write(file, body)?;
    }
    write("timing.json", &format!("{}\n", json!({ "command": name, "wall_time_s": elapsed })))
}

fn parse_list(s: &str) -> Result<Vec<f64>, Failure> {
    s.split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|_| Failure::Usage(format!("bad number `{t}`"))))
        .collect()
}

fn parse_range(s: &str) -> Result<Vec<usize>, Failure> {
    let (a, b) = s.split_once("..").ok_or_else(|| Failure::Usage(format!("bad range `{s}`, expected `lo..hi`")))?;
    let lo: usize = a.trim().parse().map_err(|_| Failure::Usage(format!("bad range start `{a}`")))?;
    let hi: usize = b.trim().trim_start_matches('=').parse().map_err(|_| Failure::Usage(format!("bad range end `{b}`")))?;
    if lo > hi {
        return Err(Failure::Usage(format!("empty range `{s}`")));
    }
    Ok((lo..=hi).collect())
}

fn verify(quiver: &Path, seed: u64, samples: usize, tol: f64, output: &Output) -> Result<(), Failure> {
    let start = Instant::now();
    let file = QuiverFile::parse(&read(quiver)?)?;
    let fq = file.framed_quiver()?;
    let suite = property_suite(&fq, samples, seed)?;
    let checks = json!({
        "h_positive_definite": suite.min_h_eigen > 0.0,
        "equivariance": suite.max_equivariance_residual <= tol,
        "unitary_frame_invariance": suite.max_unitary_frame_residual <= tol,
        "gram_recursion": suite.max_gram_recursion_residual <= 1e-10,
        "level_excess": suite.min_level_excess_eigen >= -tol,
    });
    let pass = checks.as_object().expect("object").values().all(|v| v == &Value::Bool(true));
    let report = json!({
        "schema_version": SCHEMA_VERSION,
        "command": "verify",
        "seed": seed,
        "tol": tol,
        "d": fq.dims.d,
        "n": fq.dims.n,
        "suite": suite,
        "checks": checks,
        "pass": pass,
    });
    emit(output, "verify", &report, &[], start.elapsed().as_secs_f64())?;
    if pass {
        Ok(())
    } else {
        Err(Failure::Numerical("metric property suite failed".into()))
    }
}

fn topology(
    quiver: Option<&Path>,
    chain: Chain,
    k: Option<usize>,
    d: Option<&str>,
    sweep: &str,
    output: &Output,
) -> Result<(), Failure> {
    let start = Instant::now();
    if let Some(path) = quiver {
        let fq = QuiverFile::parse(&read(path)?)?.framed_quiver()?;
        let p = poincare_polynomial(&fq)?;
        let report = json!({
            "schema_version": SCHEMA_VERSION,
            "command": "topology",
            "poincare": p.to_string(),
            "poincare_coefficients": p.coeffs().iter().map(|c| c.to_string()).collect::<Vec<_>>(),
            "euler_characteristic": euler_characteristic(&fq)?.to_string(),
            "dim": dim_moduli(&fq)?,
            "palindromic": p.is_palindromic(),
        });
        return emit(output, "topology", &report, &[], start.elapsed().as_secs_f64());
    }
    let d = d.ok_or_else(|| Failure::Usage("either --quiver or --d is required".into()))?;
    let template = parse_template(d)?;
    if let Some(k) = k {
        if template.len() != k + 2 {
            return Err(Failure::Usage(format!("--k {k} needs a template with {} entries", k + 2)));
        }
    }
    let ms = parse_range(sweep)?;
    let (points, extra) = match chain {
        Chain::Both => {
            let (a, ap) = chain_comparison(&template, &ms)?;
            let rows = emit_chi_plot(&a, &ap);
            let all: Vec<_> = a.into_iter().chain(ap).collect();
            let csv = sweep_to_csv(&all);
            (all, vec![("chi.csv", chi_rows_to_csv(&rows)), ("sweep.csv", csv)])
        }
        Chain::A | Chain::Aprime => {
            let kind = if matches!(chain, Chain::A) { ChainKind::A } else { ChainKind::Aprime };
            let pts = chain_sweep(kind, &template, &ms)?;
            let csv = sweep_to_csv(&pts);
            (pts, vec![("sweep.csv", csv)])
        }
    };
    let report = json!({
        "schema_version": SCHEMA_VERSION,
        "command": "topology",
        "template": d,
        "m": ms,
        "routes_agree": points.iter().all(|p| p.routes_agree),
        "dims_agree": points.iter().all(|p| p.dims_agree),
        "palindromic": points.iter().all(|p| p.palindromic),
        "points": points,
    });
    if output.stdout {
        print!("{}", extra[0].1);
        return Ok(());
    }
    emit(output, "topology", &report, &extra, start.elapsed().as_secs_f64())
}

#[allow(clippy::too_many_arguments)]
fn train_cmd(
    quiver: &Path,
    data: &Path,
    config: Option<&Path>,
    steps: Option<usize>,
    lr: Option<f64>,
    metric: Option<Metric>,
    activation: Activation,
    seed: Option<u64>,
    tol: Option<f64>,
    output: &Output,
) -> Result<(), Failure> {
    let start = Instant::now();
    let mut cfg: TrainConfig = match config {
        Some(p) => serde_json::from_str(&read(p)?).map_err(|e| Failure::Validation(format!("config: {e}")))?,
        None => TrainConfig::default(),
    };
    if let Some(v) = steps {
        cfg.steps = v;
    }
    if let Some(v) = lr {
        cfg.lr = v;
    }
    if let Some(m) = metric {
        cfg.metric = match m {
            Metric::Euclidean => MetricMode::EuclideanChart,
            Metric::Ricci => MetricMode::RicciHt,
        };
    }
    if let Some(v) = seed {
        cfg.seed = v;
    }
    if let Some(v) = tol {
        cfg.tol = v;
    }
    cfg.validate()?;
    let net = QuiverFile::parse(&read(quiver)?)?.network(activation.kind())?;
    let file = fs::File::open(data).map_err(|e| Failure::Validation(format!("{}: {e}", data.display())))?;
    let ds = Dataset::from_csv(file, net.input_dim()).map_err(|e| Failure::Validation(e.to_string()))?;
    if ds.output_dim() != net.output_dim() {
        return Err(Failure::Validation(format!(
            "dataset has {} target columns, network outputs {}",
            ds.output_dim(),
            net.output_dim()
        )));
    }
    info!("training {} parameters on {} samples", quivernet::representation::ChartPoint::<f64>::zeros(&net.fq).num_params(), ds.len());
    let rep = train(&net, &ds, &cfg)?;
    let mut report = json!({
        "schema_version": SCHEMA_VERSION,
        "command": "train",
        "config": cfg,
    });
    if let (Value::Object(dst), Value::Object(src)) = (&mut report, rep.to_json(&net.fq)) {
        dst.extend(src);
    }
    emit(output, "train", &report, &[("loss_trace.csv", rep.trace_csv())], start.elapsed().as_secs_f64())?;
    if rep.termination == Termination::NonFinite {
        return Err(Failure::Numerical("training diverged".into()));
    }
    Ok(())
}

fn interpolate_csv(path: &Path) -> Result<Box<dyn Fn(&[f64]) -> f64 + Sync>, Failure> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Failure::Validation(format!("{}: {e}", path.display())))?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Failure::Validation(e.to_string()))?;
        let vals = rec
            .iter()
            .map(|f| f.parse::<f64>().map_err(|_| Failure::Validation(format!("bad number `{f}`"))))
            .collect::<Result<Vec<_>, _>>()?;
        rows.push(vals);
    }
    if rows.is_empty() || rows.iter().any(|r| r.len() != rows[0].len() || r.len() < 2) {
        return Err(Failure::Validation("target CSV needs rows of equal length with at least two columns".into()));
    }
    if rows[0].len() == 2 {
        rows.sort_by(|a, b| a[0].total_cmp(&b[0]));
        return Ok(Box::new(move |x: &[f64]| {
            let k = rows.partition_point(|r| r[0] < x[0]);
            if k == 0 {
                return rows[0][1];
            }
            if k == rows.len() {
                return rows[k - 1][1];
            }
            let (a, b) = (&rows[k - 1], &rows[k]);
            let s = if b[0] > a[0] { (x[0] - a[0]) / (b[0] - a[0]) } else { 0.0 };
            a[1] + s * (b[1] - a[1])
        }));
    }
    Ok(Box::new(move |x: &[f64]| {
        let nearest = rows
            .iter()
            .min_by(|a, b| {
                let da: f64 = x.iter().zip(a.iter()).map(|(p, q)| (p - q).powi(2)).sum();
                let db: f64 = x.iter().zip(b.iter()).map(|(p, q)| (p - q).powi(2)).sum();
                da.total_cmp(&db)
            })
            .expect("nonempty");
        *nearest.last().expect("nonempty")
    }))
}

fn uat_json(r: &UatResult) -> Value {
    json!({
        "t": r.t,
        "l2_error": r.l2_error,
        "relative_error": r.relative_error(),
        "f_norm": r.f_norm,
        "components": {
            "step_function": r.step_error,
            "tropical_tail": r.tail_error,
            "wall_mass": r.wall_error,
            "wall_margin": r.wall_margin,
        },
        "interpolation_residual": r.interpolation_residual,
        "W1": matrix_to_json(&r.w1),
        "b": r.b.as_slice(),
        "W2": matrix_to_json(&r.w2),
        "W2_offset": r.w2_offset,
    })
}

fn approx_cmd(target: &str, web: Option<&Path>, domain: &str, t: &str, output: &Output) -> Result<(), Failure> {
    let start = Instant::now();
    let spec: WebSpec = match web {
        Some(p) => serde_json::from_str(&read(p)?).map_err(|e| Failure::Validation(format!("web: {e}")))?,
        None => WebSpec::Breakpoints { breakpoints: vec![0.0, 4.0, 8.0, 12.0] },
    };
    let web = spec.build()?;
    let bounds = parse_list(domain)?;
    if bounds.len() != 2 * web.n {
        return Err(Failure::Usage(format!("--domain needs {} numbers for a {}-d web", 2 * web.n, web.n)));
    }
    let k = BoxDomain::new(bounds.iter().step_by(2).copied().collect(), bounds.iter().skip(1).step_by(2).copied().collect())?;
    let ts = parse_list(t)?;
    let (lo, hi) = (k.lo[0], k.hi[0]);
    let f: Box<dyn Fn(&[f64]) -> f64 + Sync> = match target {
        "step" => {
            let jump = lo + (hi - lo) / 3.0;
            Box::new(move |x: &[f64]| if x[0] >= jump { 1.0 } else { 0.0 })
        }
        "sin" => Box::new(move |x: &[f64]| (2.0 * std::f64::consts::PI * (x[0] - lo) / (hi - lo)).sin()),
        other => match other.strip_prefix("csv:") {
            Some(p) => interpolate_csv(Path::new(p))?,
            None => return Err(Failure::Usage(format!("unknown target `{other}`"))),
        },
    };
    let results = uat_sweep(f.as_ref(), &k, &web, &ts)?;
    let report = json!({
        "schema_version": SCHEMA_VERSION,
        "command": "approx",
        "target": target,
        "domain": { "lo": k.lo, "hi": k.hi },
        "web": spec,
        "lift_dim": web.lift_dim(),
        "results": results.iter().map(uat_json).collect::<Vec<_>>(),
    });
    emit(output, "approx", &report, &[], start.elapsed().as_secs_f64())
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Verify { quiver, seed, samples, tol, output } => verify(&quiver, seed, samples, tol, &output),
        Command::Topology { quiver, chain, k, d, sweep, output } => {
            topology(quiver.as_deref(), chain, k, d.as_deref(), &sweep, &output)
        }
        Command::Train { quiver, data, config, steps, lr, metric, activation, seed, tol, output } => {
            train_cmd(&quiver, &data, config.as_deref(), steps, lr, metric, activation, seed, tol, &output)
        }
        Command::Approx { target, web, domain, t, output } => approx_cmd(&target, web.as_deref(), &domain, &t, &output),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .target(env_logger::Target::Stderr)
        .init();
    if let Some(n) = std::env::var("QUIVERNET_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            log::warn!("QUIVERNET_THREADS ignored: {e}");
        }
    }
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
