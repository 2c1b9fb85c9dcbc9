//! The `bellscope` command line.
//!
//! Exit codes: 0 success, 1 check failure, 2 usage or input error,
//! 3 resource guard.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use crate::bell::{analyze, bell_state, AnalyzerSpec, BellLabel, DiscriminationReport, BELL_MODES, DEFAULT_EPSILON};
use crate::error::Error;
use crate::fock::{ModePolynomial, Occupation};
use crate::measurement::{outcome_distribution, DetectorModel, Distribution};
use crate::network::{compose, reck_decompose, Circuit, ModeUnitary};
use crate::nogo::{verify, NogoReport, VerifyConfig, ZERO_TOLERANCE};
use crate::search::{optimize, sweep, OptimizeResult, OptimizerConfig, SweepRow};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_RESOURCE: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "bellscope", version, about = "Linear-optical Bell measurement simulator and no-go certifier")]
pub struct Cli {
    /// Seed for every random draw of the command.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,

    /// Output format; each command has its own default.
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,

    /// Write the result here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    /// Numerical tolerance of the command's check (must be positive).
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub tolerance: Option<f64>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Text,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Detector {
    Number,
    Threshold,
}

impl From<Detector> for DetectorModel {
    fn from(d: Detector) -> Self {
        match d {
            Detector::Number => DetectorModel::NumberResolving,
            Detector::Threshold => DetectorModel::Threshold,
        }
    }
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Reproduce the two-splitter analyzer and its event table.
    Innsbruck {
        #[arg(long, value_enum, default_value = "number")]
        detector: Detector,
    },
    /// Send a state through a circuit file and print the count distribution.
    Simulate {
        /// JSON element list or matrix.
        #[arg(long)]
        circuit: PathBuf,
        /// Psi1..Psi4, a mode product such as a1b1, fock:1,0,1,0, or @state.json.
        #[arg(long)]
        input: String,
        #[arg(long, value_enum, default_value = "number")]
        detector: Detector,
    },
    /// Run the full no-go verification battery.
    VerifyNogo {
        #[arg(long, default_value_t = 1000)]
        samples: usize,
    },
    /// Multistart search for the best unambiguous success fraction.
    Optimize {
        #[arg(long, default_value_t = 4)]
        modes: usize,
        #[arg(long, default_value_t = 0)]
        aux: u32,
        #[command(flatten)]
        search: SearchArgs,
    },
    /// Best success fraction over a grid of mode and auxiliary-photon counts.
    Sweep {
        /// A count, a list `4,5` or an inclusive range `4..6`.
        #[arg(long)]
        modes: String,
        #[arg(long, default_value = "0")]
        aux: String,
        #[command(flatten)]
        search: SearchArgs,
    },
    /// Decompose a matrix into a splitter mesh, or compose an element list.
    Reck {
        #[command(subcommand)]
        action: ReckAction,
    },
}

#[derive(Args, Debug)]
pub struct SearchArgs {
    #[arg(long, default_value_t = 50)]
    pub starts: usize,
    #[arg(long, default_value_t = 200)]
    pub max_iterations: usize,
    #[arg(long, default_value_t = DEFAULT_EPSILON)]
    pub epsilon: f64,
    #[arg(long, default_value_t = 100_000)]
    pub outcome_bound: u128,
    /// Start the first search from the two-splitter analyzer.
    #[arg(long)]
    pub innsbruck_start: bool,
    /// Lattice perturbations per start after convergence.
    #[arg(long, default_value_t = 30)]
    pub kicks: usize,
}

#[derive(Subcommand, Debug)]
pub enum ReckAction {
    Decompose { matrix: PathBuf },
    Compose {
        elements: PathBuf,
        /// Mode count; defaults to one past the largest mode used.
        #[arg(long)]
        modes: Option<usize>,
    },
}

/// Provenance attached to every output.
#[derive(Clone, Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub config: Value,
    pub seed: u64,
    pub version: String,
    pub wall_time_ms: u128,
}

/// A failure with its exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::ResourceGuard { .. } => EXIT_RESOURCE,
            _ => EXIT_USAGE,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

/// What a command produced before formatting.
struct Rendered {
    /// Body in the requested format.
    body: String,
    /// Whether the command's own check passed.
    passed: bool,
    /// Extra diagnostics for stderr on failure.
    diagnostic: Option<String>,
}

/// Parses `args` (program name first) and runs the command.
pub fn run<I, T, O, E>(args: I, stdout: &mut O, stderr: &mut E) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
    O: Write,
    E: Write,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            if code == EXIT_OK {
                let _ = write!(stdout, "{text}");
            } else {
                let _ = write!(stderr, "{text}");
            }
            return code;
        }
    };
    match execute(&cli, stdout, stderr) {
        Ok(code) => code,
        Err(f) => {
            let _ = writeln!(stderr, "error: {}", f.message);
            f.code
        }
    }
}

fn execute<O: Write, E: Write>(cli: &Cli, stdout: &mut O, stderr: &mut E) -> Result<i32, Failure> {
    if let Some(t) = cli.tolerance {
        if !(t > 0.0) || !t.is_finite() {
            return Err(Failure::usage(format!("--tolerance must be positive, got {t}")));
        }
    }
    let clock = Instant::now();
    let (name, config, format) = describe(cli);
    let format = cli.format.unwrap_or(format);
    let rendered = match &cli.command {
        Command::Innsbruck { detector } => cmd_innsbruck(cli, *detector, format)?,
        Command::Simulate {
            circuit,
            input,
            detector,
        } => cmd_simulate(circuit, input, *detector, format)?,
        Command::VerifyNogo { samples } => cmd_verify(cli, *samples, format)?,
        Command::Optimize { modes, aux, search } => cmd_optimize(cli, *modes, *aux, search, format)?,
        Command::Sweep { modes, aux, search } => cmd_sweep(cli, modes, aux, search, format)?,
        Command::Reck { action } => cmd_reck(action, format)?,
    };
    let manifest = RunManifest {
        command: name.to_string(),
        config,
        seed: cli.seed,
        version: env!("CARGO_PKG_VERSION").to_string(),
        wall_time_ms: clock.elapsed().as_millis(),
    };
    emit(cli, format, &manifest, &rendered.body, stdout, stderr)?;
    if let Some(d) = &rendered.diagnostic {
        let _ = writeln!(stderr, "{d}");
    }
    Ok(if rendered.passed { EXIT_OK } else { EXIT_CHECK_FAILED })
}

/// Command name, configuration echo and default format.
fn describe(cli: &Cli) -> (&'static str, Value, Format) {
    let search = |s: &SearchArgs| {
        json!({
            "starts": s.starts,
            "max_iterations": s.max_iterations,
            "epsilon": s.epsilon,
            "outcome_bound": s.outcome_bound.to_string(),
            "innsbruck_start": s.innsbruck_start,
            "kicks": s.kicks,
        })
    };
    let (name, mut config, format) = match &cli.command {
        Command::Innsbruck { detector } => ("innsbruck", json!({ "detector": format!("{detector:?}").to_lowercase() }), Format::Text),
        Command::Simulate {
            circuit,
            input,
            detector,
        } => (
            "simulate",
            json!({ "circuit": circuit, "input": input, "detector": format!("{detector:?}").to_lowercase() }),
            Format::Text,
        ),
        Command::VerifyNogo { samples } => ("verify-nogo", json!({ "samples": samples }), Format::Json),
        Command::Optimize { modes, aux, search: s } => (
            "optimize",
            json!({ "modes": modes, "aux": aux, "search": search(s) }),
            Format::Json,
        ),
        Command::Sweep { modes, aux, search: s } => (
            "sweep",
            json!({ "modes": modes, "aux": aux, "search": search(s) }),
            Format::Csv,
        ),
        Command::Reck { action } => match action {
            ReckAction::Decompose { matrix } => ("reck", json!({ "decompose": matrix }), Format::Json),
            ReckAction::Compose { elements, modes } => {
                ("reck", json!({ "compose": elements, "modes": modes }), Format::Json)
            }
        },
    };
    config["tolerance"] = json!(cli.tolerance);
    (name, config, format)
}

fn emit<O: Write, E: Write>(
    cli: &Cli,
    format: Format,
    manifest: &RunManifest,
    body: &str,
    stdout: &mut O,
    stderr: &mut E,
) -> Result<(), Failure> {
    let manifest_json = serde_json::to_string_pretty(manifest).expect("manifest serializes");
    let io = |e: std::io::Error| Failure {
        code: EXIT_USAGE,
        message: format!("cannot write output: {e}"),
    };
    let content = match format {
        Format::Json => {
            let result: Value = serde_json::from_str(body).expect("command bodies are JSON in json mode");
            let doc = json!({ "manifest": manifest, "result": result });
            serde_json::to_string_pretty(&doc).expect("document serializes") + "\n"
        }
        _ => body.to_string(),
    };
    match &cli.out {
        Some(path) => {
            std::fs::write(path, content).map_err(io)?;
            if format != Format::Json {
                std::fs::write(sidecar(path), manifest_json + "\n").map_err(io)?;
            }
        }
        None => {
            stdout.write_all(content.as_bytes()).map_err(io)?;
            if format != Format::Json {
                let _ = writeln!(stderr, "manifest: {}", serde_json::to_string(manifest).expect("manifest serializes"));
            }
        }
    }
    Ok(())
}

/// `<out>.manifest.json` next to a CSV or text output.
pub fn sidecar(path: &Path) -> PathBuf {
    let mut name = path.as_os_str().to_owned();
    name.push(".manifest.json");
    PathBuf::from(name)
}

fn to_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string(value).expect("result types serialize")
}

fn csv_rows<T: Serialize>(rows: &[T]) -> Result<String, Failure> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(|e| Failure::usage(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| Failure::usage(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

/// Detectors that fired, 1-based, with repeats for multiple photons.
fn detectors(counts: &[u32]) -> String {
    let mut out = Vec::new();
    for (k, &n) in counts.iter().enumerate() {
        for _ in 0..n {
            out.push((k + 1).to_string());
        }
    }
    format!("{{{}}}", out.join(","))
}

fn report_text(report: &DiscriminationReport) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{:<10} {:<10} {:>8} {:>8} {:>8} {:>8}  attribution",
        "counts", "detectors", "Psi1", "Psi2", "Psi3", "Psi4"
    );
    for row in &report.outcomes {
        let counts: Vec<String> = row.counts.iter().map(u32::to_string).collect();
        let _ = writeln!(
            s,
            "{:<10} {:<10} {:>8.4} {:>8.4} {:>8.4} {:>8.4}  {}",
            counts.join(","),
            detectors(&row.counts),
            row.probs[0],
            row.probs[1],
            row.probs[2],
            row.probs[3],
            row.attribution.map_or("ambiguous", BellLabel::name)
        );
    }
    let _ = writeln!(s, "S = {:.6}", report.success_fraction);
    s
}

#[derive(Serialize)]
struct ReportCsvRow {
    counts: String,
    p_psi1: f64,
    p_psi2: f64,
    p_psi3: f64,
    p_psi4: f64,
    attribution: String,
}

fn report_csv(report: &DiscriminationReport) -> Result<String, Failure> {
    let rows: Vec<ReportCsvRow> = report
        .outcomes
        .iter()
        .map(|r| ReportCsvRow {
            counts: r.counts.iter().map(u32::to_string).collect::<Vec<_>>().join(" "),
            p_psi1: r.probs[0],
            p_psi2: r.probs[1],
            p_psi3: r.probs[2],
            p_psi4: r.probs[3],
            attribution: r.attribution.map_or("ambiguous", BellLabel::name).to_string(),
        })
        .collect();
    csv_rows(&rows)
}

fn cmd_innsbruck(cli: &Cli, detector: Detector, format: Format) -> Result<Rendered, Failure> {
    let tolerance = cli.tolerance.unwrap_or(1e-9);
    let report = analyze(&AnalyzerSpec::innsbruck(detector.into()), DEFAULT_EPSILON)?;
    let passed = (report.success_fraction - 0.5).abs() < tolerance;
    let body = match format {
        Format::Json => to_json(&report),
        Format::Csv => report_csv(&report)?,
        Format::Text => report_text(&report),
    };
    Ok(Rendered {
        body,
        passed,
        diagnostic: (!passed).then(|| format!("S = {} differs from 0.5", report.success_fraction)),
    })
}

fn mode_names(modes: usize) -> String {
    let names: Vec<String> = (0..modes)
        .map(|k| match k {
            0 => "a1".to_string(),
            1 => "a2".to_string(),
            2 => "b1".to_string(),
            3 => "b2".to_string(),
            _ => format!("x{}", k + 1),
        })
        .collect();
    names.join(", ")
}

fn read_file(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::usage(format!("cannot read {}: {e}", path.display())))
}

fn parse_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, Failure> {
    let text = read_file(path)?;
    serde_json::from_str(&text).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))
}

/// Parses a `--input` value into a normalized state.
pub fn parse_input(spec: &str) -> Result<ModePolynomial, Failure> {
    if let Some(label) = BellLabel::parse(spec) {
        return Ok(bell_state(label));
    }
    if let Some(path) = spec.strip_prefix('@') {
        let poly: ModePolynomial = parse_json(Path::new(path))?;
        return Ok(poly.normalize()?);
    }
    if let Some(list) = spec.strip_prefix("fock:") {
        let counts = list
            .split(',')
            .map(|t| t.trim().parse::<u32>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| Failure::usage(format!("bad occupation {list:?}: {e}")))?;
        return Ok(ModePolynomial::fock_state(counts));
    }
    // A product of mode names on the four Bell modes, e.g. a1b1 or a1a1.
    let mut counts = vec![0u32; BELL_MODES];
    let bytes = spec.as_bytes();
    if bytes.is_empty() || !bytes.len().is_multiple_of(2) {
        return Err(Failure::usage(format!("unrecognized input {spec:?}")));
    }
    for pair in bytes.chunks(2) {
        let k = match pair {
            b"a1" => 0,
            b"a2" => 1,
            b"b1" => 2,
            b"b2" => 3,
            _ => {
                return Err(Failure::usage(format!(
                    "unrecognized input {spec:?}; mode names are {}",
                    mode_names(BELL_MODES)
                )))
            }
        };
        counts[k] += 1;
    }
    Ok(ModePolynomial::fock_state(counts))
}

#[derive(Serialize)]
struct DistributionRow {
    counts: Vec<u32>,
    p: f64,
}

#[derive(Serialize)]
struct CountsCsvRow {
    counts: String,
    p: f64,
}

fn distribution_rows(d: &Distribution) -> Vec<DistributionRow> {
    d.reportable()
        .map(|(o, p)| DistributionRow {
            counts: o.to_vec(),
            p,
        })
        .collect()
}

fn cmd_simulate(circuit: &Path, input: &str, detector: Detector, format: Format) -> Result<Rendered, Failure> {
    let circuit: Circuit = parse_json(circuit)?;
    let state = parse_input(input)?;
    let dim = state.modes();
    let with_names = |e: Error| match e {
        Error::Dimension(m) => Failure::usage(format!("dimension mismatch: {m}; input modes are {}", mode_names(dim))),
        other => other.into(),
    };
    let u = circuit.to_unitary(dim).map_err(with_names)?;
    let out = u.apply(&state).map_err(with_names)?;
    let dist = outcome_distribution(&out, detector.into())?;
    let rows = distribution_rows(&dist);
    let body = match format {
        Format::Json => to_json(&json!({ "modes": dim, "outcomes": rows })),
        Format::Csv => csv_rows(
            &rows
                .iter()
                .map(|r| CountsCsvRow {
                    counts: r.counts.iter().map(u32::to_string).collect::<Vec<_>>().join(" "),
                    p: r.p,
                })
                .collect::<Vec<_>>(),
        )?,
        Format::Text => {
            let mut s = String::new();
            for r in &rows {
                let _ = writeln!(s, "{}  {:.12}", Occupation::new(r.counts.clone()), r.p);
            }
            s
        }
    };
    Ok(Rendered {
        body,
        passed: true,
        diagnostic: None,
    })
}

fn nogo_text(r: &NogoReport) -> String {
    let mut s = String::new();
    let mark = |v: usize| if v == 0 { "ok" } else { "FAILED" };
    let t = &r.two_photon_scan;
    let _ = writeln!(s, "two-photon scan     {:>8} samples  violations {}  {}", t.samples, t.violations, mark(t.violations));
    let f = &r.factorization;
    let _ = writeln!(
        s,
        "factorization       {:>8} samples  max |lhs-rhs| {:.3e}  violations {}  {}",
        f.samples, f.max_abs_diff, f.violations, mark(f.violations)
    );
    let o = &r.overlap_oracle;
    let _ = writeln!(
        s,
        "overlap oracle      {:>8} samples  max diff {:.3e}  violations {}  {}",
        o.samples, o.max_abs_diff, o.violations, mark(o.violations)
    );
    let c = &r.contradiction;
    let _ = writeln!(
        s,
        "contradiction       {:>8} samples  min max|overlap| {:.4}  violations {}  {}",
        c.samples, c.min_max_overlap, c.violations, mark(c.violations)
    );
    s
}

fn cmd_verify(cli: &Cli, samples: usize, format: Format) -> Result<Rendered, Failure> {
    if samples == 0 {
        return Err(Failure::usage("--samples must be at least 1"));
    }
    let config = VerifyConfig {
        tolerance: cli.tolerance.unwrap_or(ZERO_TOLERANCE),
        ..VerifyConfig::from_samples(samples, cli.seed)
    };
    let report = verify(&config)?;
    let passed = report.passed();
    let diagnostic = (!passed).then(|| {
        let failing = json!({
            "two_photon_scan": report.two_photon_scan.first_violation,
            "factorization": report.factorization.first_violation,
            "overlap_oracle": report.overlap_oracle.first_violation,
            "contradiction": report.contradiction.first_violation,
        });
        format!("check failed; first failing samples: {failing}")
    });
    let body = match format {
        Format::Json => to_json(&report),
        Format::Text => nogo_text(&report),
        Format::Csv => return Err(Failure::usage("verify-nogo supports json and text output")),
    };
    Ok(Rendered {
        body,
        passed,
        diagnostic,
    })
}

fn search_config(cli: &Cli, s: &SearchArgs) -> OptimizerConfig {
    OptimizerConfig {
        starts: s.starts,
        max_iterations: s.max_iterations,
        tolerance: cli.tolerance.unwrap_or(1e-9),
        seed: cli.seed,
        epsilon: s.epsilon,
        outcome_bound: s.outcome_bound,
        innsbruck_start: s.innsbruck_start,
        kicks: s.kicks,
    }
}

fn cmd_optimize(cli: &Cli, modes: usize, aux: u32, s: &SearchArgs, format: Format) -> Result<Rendered, Failure> {
    let clock = Instant::now();
    let result: OptimizeResult = optimize(&search_config(cli, s), modes, aux)?;
    let wall = clock.elapsed().as_millis();
    let body = match format {
        Format::Json => to_json(&json!({ "empirical": true, "optimization": result })),
        Format::Csv => csv_rows(&[SweepRow {
            modes,
            aux_photons: aux,
            best_s: result.best_s,
            seed: cli.seed,
            iterations: result.iterations,
            wall_time_ms: wall,
        }])?,
        Format::Text => format!(
            "D = {modes}, auxiliary photons = {aux}: best S = {:.6} (start {}, {} sweeps, empirical)\n",
            result.best_s, result.best_start, result.iterations
        ),
    };
    Ok(Rendered {
        body,
        passed: true,
        diagnostic: None,
    })
}

/// Parses `5`, `4,5,7` or the inclusive range `4..6`.
pub fn parse_range<T>(text: &str) -> Result<Vec<T>, Failure>
where
    T: std::str::FromStr + Copy + Into<u64> + TryFrom<u64>,
{
    let bad = || Failure::usage(format!("bad range {text:?}; use 5, 4,5 or 4..6"));
    let one = |t: &str| t.trim().parse::<T>().map_err(|_| bad());
    if text.trim().is_empty() {
        return Ok(Vec::new());
    }
    if let Some((lo, hi)) = text.split_once("..") {
        let (lo, hi): (u64, u64) = (one(lo)?.into(), one(hi)?.into());
        return (lo..=hi).map(|v| T::try_from(v).map_err(|_| bad())).collect();
    }
    text.split(',').map(one).collect()
}

fn cmd_sweep(cli: &Cli, modes: &str, aux: &str, s: &SearchArgs, format: Format) -> Result<Rendered, Failure> {
    let modes: Vec<usize> = parse_range::<u32>(modes)?.into_iter().map(|m| m as usize).collect();
    let aux: Vec<u32> = parse_range(aux)?;
    let rows = sweep(&search_config(cli, s), &modes, &aux)?;
    let body = match format {
        Format::Csv => csv_rows(&rows)?,
        Format::Json => to_json(&json!({ "empirical": true, "rows": rows })),
        Format::Text => {
            let mut t = String::new();
            let _ = writeln!(t, "{:>3} {:>4} {:>10} {:>20} {:>10}", "D", "aux", "best_S", "seed", "iterations");
            for r in &rows {
                let _ = writeln!(t, "{:>3} {:>4} {:>10.6} {:>20} {:>10}", r.modes, r.aux_photons, r.best_s, r.seed, r.iterations);
            }
            t
        }
    };
    Ok(Rendered {
        body,
        passed: true,
        diagnostic: None,
    })
}

fn cmd_reck(action: &ReckAction, format: Format) -> Result<Rendered, Failure> {
    if format == Format::Csv {
        return Err(Failure::usage("reck supports json and text output"));
    }
    let (value, residual) = match action {
        ReckAction::Decompose { matrix } => {
            let u: ModeUnitary = parse_json(matrix)?;
            let elements = reck_decompose(&u)?;
            let residual = compose(&elements, u.dim())?.matrix().max_abs_diff(u.matrix());
            (json!({ "elements": elements, "round_trip_error": residual }), residual)
        }
        ReckAction::Compose { elements, modes } => {
            let circuit: Circuit = parse_json(elements)?;
            let u = match &circuit {
                Circuit::Elements(list) => {
                    let dim = modes.unwrap_or_else(|| list.iter().map(|e| e.max_mode() + 1).max().unwrap_or(0));
                    compose(list, dim)?
                }
                Circuit::Matrix(u) => u.clone(),
            };
            (json!({ "matrix": u, "unitarity_residual": u.unitarity_residual() }), 0.0)
        }
    };
    let passed = residual < 1e-10;
    let body = match format {
        Format::Text => serde_json::to_string_pretty(&value).expect("serializes") + "\n",
        _ => value.to_string(),
    };
    Ok(Rendered {
        body,
        passed,
        diagnostic: (!passed).then(|| format!("round-trip error {residual:e}")),
    })
}
