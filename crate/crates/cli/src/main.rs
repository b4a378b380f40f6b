//! `reflexive` — command-line driver for the synchronization toolkit.
//!
//! Subcommands: `validate` (configuration data), `audit` (hypothesis
//! checks over a field spec), `solve` (height minimization with a
//! certificate), `scan` (grid tabulation to CSV), and `oracle` (discrete
//! cylinder cross-check).
//!
//! Exit codes: 0 = pass, 1 = fail, 2 = usage/malformed input, 3 = only
//! inconclusive outcomes. Outputs are byte-deterministic for fixed inputs
//! and seed; each run records a manifest (a `<out>.manifest.json` sidecar
//! when writing files, stderr otherwise) with the resolved options, seed,
//! tool version, and wall time.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use reflexive_core::audit::{
    audit_degeneration, audit_pushability, audit_regularity, default_boundary_rays,
    halton_samples, AuditReport, Verdict, DEFAULT_BLOW_THRESHOLD, DEFAULT_DEGENERATION_STEPS,
    DEFAULT_MARGIN, DEFAULT_RANK_TOL, DEFAULT_SAMPLES,
};
use reflexive_core::config::{validate_datum, ConfigurationDatum};
use reflexive_core::families::FieldConfig;
use reflexive_core::solver::{
    certify_reflexive, default_certificate_tol, grid_scan, push_descent, trace_csv, SolveError,
    SolveOptions,
};
use reflexive_core::surfaces::{discrete_extremal_length_oracle, EuclideanCylinder};

const EXIT_PASS: u8 = 0;
const EXIT_FAIL: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_INCONCLUSIVE: u8 = 3;

#[derive(Parser)]
#[command(
    name = "reflexive",
    version,
    about = "Synchronized flat structures: validation, audits, height minimization, scans, and oracles"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a configuration datum file and print the validation report.
    Validate {
        /// Configuration datum (JSON).
        config: PathBuf,
    },
    /// Run hypothesis audits (regularity, degeneration, pushability) over
    /// a field spec.
    Audit {
        /// Field spec (JSON): family, parameters, optional sample box and
        /// push preset.
        spec: PathBuf,
        /// Which hypothesis to audit.
        #[arg(long, value_enum, default_value_t = HypothesisArg::All)]
        hypothesis: HypothesisArg,
        /// Number of quasi-random sample points.
        #[arg(long, default_value_t = DEFAULT_SAMPLES)]
        samples: usize,
        /// Sampling seed (offsets the quasi-random sequence).
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Singular values below rank_tol·max(σ_max, 1) count as zero.
        #[arg(long, default_value_t = DEFAULT_RANK_TOL)]
        rank_tol: f64,
        /// The dominant |mismatch| must exceed this along each boundary ray.
        #[arg(long, default_value_t = DEFAULT_BLOW_THRESHOLD)]
        blow_threshold: f64,
        /// Probe depths per ray (geometric schedule down to t = 1e-3).
        #[arg(long, default_value_t = DEFAULT_DEGENERATION_STEPS)]
        steps: usize,
        /// Mismatches below this margin are treated as inactive.
        #[arg(long, default_value_t = DEFAULT_MARGIN)]
        margin: f64,
        /// Where to write the report JSON.
        #[arg(long)]
        out: PathBuf,
    },
    /// Minimize the height from a starting point and certify the result.
    Solve {
        /// Field spec (JSON).
        spec: PathBuf,
        /// Starting point, comma-separated (e.g. "2.5,0.8").
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
        start: Vec<f64>,
        /// Reflexivity threshold on the height.
        #[arg(long, default_value_t = 1e-12)]
        eps: f64,
        /// Iteration cap.
        #[arg(long, default_value_t = 10_000)]
        max_iters: usize,
        /// Optional path for the iterate trace CSV.
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Where to write the result + certificate JSON.
        #[arg(long)]
        out: PathBuf,
    },
    /// Tabulate mismatches and height over a parameter grid (CSV).
    Scan {
        /// Field spec (JSON).
        spec: PathBuf,
        /// Grid bounds, comma-separated lo,hi per axis (e.g. "0.6,3,0.6,3").
        #[arg(long = "box", value_delimiter = ',', allow_hyphen_values = true, required = true)]
        bounds: Vec<f64>,
        /// Points per axis, comma-separated (e.g. "241,241").
        #[arg(long, value_delimiter = ',', required = true)]
        res: Vec<usize>,
        /// Where to write the CSV (argmin goes to `<out>.argmin.json`).
        #[arg(long)]
        out: PathBuf,
    },
    /// Estimate a cylinder's core extremal length on a discrete grid and
    /// compare with the closed form w/h.
    Oracle {
        /// Cylinder circumference.
        #[arg(long)]
        w: f64,
        /// Cylinder height.
        #[arg(long)]
        h: f64,
        /// Grid columns around the circumference (≥ 4).
        #[arg(long, default_value_t = 64)]
        n: usize,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum HypothesisArg {
    H1,
    H2,
    H3,
    All,
}

#[derive(Serialize)]
struct RunManifest {
    command: String,
    inputs: Vec<String>,
    options: serde_json::Value,
    seed: Option<u64>,
    version: String,
    wall_time_s: f64,
}

impl RunManifest {
    fn new(
        command: &str,
        inputs: &[&Path],
        options: serde_json::Value,
        seed: Option<u64>,
        clock: Instant,
    ) -> Self {
        RunManifest {
            command: command.to_string(),
            inputs: inputs
                .iter()
                .map(|p| p.display().to_string())
                .collect(),
            options,
            seed,
            version: env!("CARGO_PKG_VERSION").to_string(),
            wall_time_s: clock.elapsed().as_secs_f64(),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Validate { config } => cmd_validate(&config),
        Command::Audit {
            spec,
            hypothesis,
            samples,
            seed,
            rank_tol,
            blow_threshold,
            steps,
            margin,
            out,
        } => cmd_audit(
            &spec,
            hypothesis,
            samples,
            seed,
            rank_tol,
            blow_threshold,
            steps,
            margin,
            &out,
        ),
        Command::Solve {
            spec,
            start,
            eps,
            max_iters,
            trace,
            out,
        } => cmd_solve(&spec, &start, eps, max_iters, trace.as_deref(), &out),
        Command::Scan {
            spec,
            bounds,
            res,
            out,
        } => cmd_scan(&spec, &bounds, &res, &out),
        Command::Oracle { w, h, n } => cmd_oracle(w, h, n),
    };
    ExitCode::from(code)
}

fn usage_error(msg: impl std::fmt::Display) -> u8 {
    eprintln!("error: {msg}");
    EXIT_USAGE
}

fn read_text(path: &Path) -> Result<String, u8> {
    fs::read_to_string(path).map_err(|e| usage_error(format!("{}: {e}", path.display())))
}

fn json_line<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable value");
    s.push('\n');
    s
}

fn write_file(path: &Path, content: &str) -> Result<(), u8> {
    fs::write(path, content).map_err(|e| usage_error(format!("{}: {e}", path.display())))
}

fn sidecar(path: &Path, suffix: &str) -> PathBuf {
    let mut name = path.as_os_str().to_os_string();
    name.push(suffix);
    PathBuf::from(name)
}

fn write_manifest(out: &Path, manifest: &RunManifest) -> Result<(), u8> {
    write_file(&sidecar(out, ".manifest.json"), &json_line(manifest))
}

fn load_field(path: &Path) -> Result<FieldConfigBuilt, u8> {
    let text = read_text(path)?;
    let config = FieldConfig::from_json_str(&text).map_err(usage_error)?;
    let (field, push) = config.build().map_err(usage_error)?;
    Ok(FieldConfigBuilt { field, push })
}

struct FieldConfigBuilt {
    field: reflexive_core::HeightField64,
    push: reflexive_core::PushFieldSpec64,
}

fn cmd_validate(config: &Path) -> u8 {
    let clock = Instant::now();
    let text = match read_text(config) {
        Ok(t) => t,
        Err(code) => return code,
    };
    let datum = match ConfigurationDatum::from_json_str(&text) {
        Ok(d) => d,
        Err(e) => return usage_error(e),
    };
    let report = match validate_datum(&datum) {
        Ok(r) => r,
        Err(e) => return usage_error(e),
    };
    print!("{}", json_line(&report));
    let manifest = RunManifest::new("validate", &[config], json!({}), None, clock);
    eprint!("{}", json_line(&manifest));
    if report.ok {
        EXIT_PASS
    } else {
        EXIT_FAIL
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_audit(
    spec: &Path,
    hypothesis: HypothesisArg,
    samples: usize,
    seed: u64,
    rank_tol: f64,
    blow_threshold: f64,
    steps: usize,
    margin: f64,
    out: &Path,
) -> u8 {
    let clock = Instant::now();
    let built = match load_field(spec) {
        Ok(b) => b,
        Err(code) => return code,
    };
    let field = &built.field;

    let mut reports: Vec<AuditReport> = Vec::new();
    let run_h1 = matches!(hypothesis, HypothesisArg::H1 | HypothesisArg::All);
    let run_h2 = matches!(hypothesis, HypothesisArg::H2 | HypothesisArg::All);
    let run_h3 = matches!(hypothesis, HypothesisArg::H3 | HypothesisArg::All);

    if run_h1 {
        let points = match halton_samples(field, samples, seed) {
            Ok(s) => s,
            Err(e) => return usage_error(e),
        };
        match audit_regularity(field, &points, rank_tol) {
            Ok(r) => reports.push(r),
            Err(e) => return usage_error(e),
        }
    }
    if run_h2 {
        let rays = default_boundary_rays(field);
        match audit_degeneration(field, &rays, blow_threshold, steps) {
            Ok(r) => reports.push(r),
            Err(e) => return usage_error(e),
        }
    }
    if run_h3 {
        let points = match halton_samples(field, samples, seed) {
            Ok(s) => s,
            Err(e) => return usage_error(e),
        };
        match audit_pushability(field, &built.push, &points, margin) {
            Ok(r) => reports.push(r),
            Err(e) => return usage_error(e),
        }
    }

    let worst = if reports.iter().any(|r| r.verdict == Verdict::Fail) {
        Verdict::Fail
    } else if reports.iter().any(|r| r.verdict == Verdict::Inconclusive) {
        Verdict::Inconclusive
    } else {
        Verdict::Pass
    };
    let document = json!({ "verdict": worst, "reports": reports });
    if let Err(code) = write_file(out, &json_line(&document)) {
        return code;
    }
    let manifest = RunManifest::new(
        "audit",
        &[spec],
        json!({
            "hypothesis": match hypothesis {
                HypothesisArg::H1 => "h1",
                HypothesisArg::H2 => "h2",
                HypothesisArg::H3 => "h3",
                HypothesisArg::All => "all",
            },
            "samples": samples,
            "rank_tol": rank_tol,
            "blow_threshold": blow_threshold,
            "steps": steps,
            "margin": margin,
            "out": out.display().to_string(),
        }),
        Some(seed),
        clock,
    );
    if let Err(code) = write_manifest(out, &manifest) {
        return code;
    }
    match worst {
        Verdict::Pass => EXIT_PASS,
        Verdict::Fail => EXIT_FAIL,
        Verdict::Inconclusive => EXIT_INCONCLUSIVE,
    }
}

fn cmd_solve(
    spec: &Path,
    start: &[f64],
    eps: f64,
    max_iters: usize,
    trace: Option<&Path>,
    out: &Path,
) -> u8 {
    let clock = Instant::now();
    let built = match load_field(spec) {
        Ok(b) => b,
        Err(code) => return code,
    };
    let field = &built.field;
    if start.len() != field.dim() {
        return usage_error(format!(
            "start point has {} coordinates; the field has {} parameters",
            start.len(),
            field.dim()
        ));
    }
    let opts = SolveOptions {
        eps_reflexive: eps,
        max_iters,
        ..SolveOptions::default()
    };
    let result = match push_descent(field, &built.push, start, &opts) {
        Ok(r) => r,
        Err(SolveError::OutOfDomain(u)) => {
            return usage_error(format!("out_of_domain: start {u:?} violates the domain"))
        }
        Err(e) => return usage_error(e),
    };
    let certificate = match certify_reflexive(field, &result.u_star, default_certificate_tol(eps))
    {
        Ok(c) => c,
        Err(e) => return usage_error(e),
    };
    let document = json!({ "result": result, "certificate": certificate });
    if let Err(code) = write_file(out, &json_line(&document)) {
        return code;
    }
    if let Some(trace_path) = trace {
        if let Err(code) = write_file(trace_path, &trace_csv(&result, field.dim())) {
            return code;
        }
    }
    let manifest = RunManifest::new(
        "solve",
        &[spec],
        json!({
            "start": start,
            "eps": eps,
            "max_iters": max_iters,
            "trace": trace.map(|p| p.display().to_string()),
            "out": out.display().to_string(),
        }),
        None,
        clock,
    );
    if let Err(code) = write_manifest(out, &manifest) {
        return code;
    }
    if certificate.certified {
        EXIT_PASS
    } else {
        EXIT_FAIL
    }
}

fn cmd_scan(spec: &Path, bounds: &[f64], res: &[usize], out: &Path) -> u8 {
    let clock = Instant::now();
    let built = match load_field(spec) {
        Ok(b) => b,
        Err(code) => return code,
    };
    let field = &built.field;
    if bounds.len() != 2 * field.dim() || res.len() != field.dim() {
        return usage_error(format!(
            "the field has {} parameters: --box needs {} numbers (lo,hi per axis), --res needs {}",
            field.dim(),
            2 * field.dim(),
            field.dim()
        ));
    }
    let ranges: Vec<(f64, f64)> = bounds.chunks(2).map(|c| (c[0], c[1])).collect();
    let table = match grid_scan(field, &ranges, res) {
        Ok(t) => t,
        Err(e) => return usage_error(e),
    };
    if let Err(code) = write_file(out, &table.to_csv()) {
        return code;
    }
    if let Err(code) = write_file(&sidecar(out, ".argmin.json"), &json_line(&table.argmin)) {
        return code;
    }
    let manifest = RunManifest::new(
        "scan",
        &[spec],
        json!({
            "box": bounds,
            "res": res,
            "out": out.display().to_string(),
        }),
        None,
        clock,
    );
    if let Err(code) = write_manifest(out, &manifest) {
        return code;
    }
    EXIT_PASS
}

fn cmd_oracle(w: f64, h: f64, n: usize) -> u8 {
    let clock = Instant::now();
    let cylinder = match EuclideanCylinder::new(w, h) {
        Ok(c) => c,
        Err(e) => return usage_error(e),
    };
    let estimate = match discrete_extremal_length_oracle(&cylinder, n) {
        Ok(v) => v,
        Err(e) => return usage_error(e),
    };
    let exact = w / h;
    let document = json!({
        "circumference": w,
        "height": h,
        "n": n,
        "estimate": estimate,
        "closed_form": exact,
        "relative_error": (estimate - exact).abs() / exact,
    });
    print!("{}", json_line(&document));
    let manifest = RunManifest::new(
        "oracle",
        &[],
        json!({ "w": w, "h": h, "n": n }),
        None,
        clock,
    );
    eprint!("{}", json_line(&manifest));
    EXIT_PASS
}
