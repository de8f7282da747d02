//! Command-line experiment runner.
//!
//! Every subcommand writes `<out>/<command>.csv` and `<out>/<command>.json`
//! and prints one verdict line. Exit status: 0 on success, 2 when a
//! theorem-level invariant fails, 3 when the grid is too coarse, 1 for any
//! other error.

pub mod config;

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::Path;

use clap::{Parser, Subcommand};
use serde::Serialize;
use serde_json::{Map, Value};

use crate::conformal::{conformal_scalar_curvature, epsilon_unboundedness_sweep, ConformalError};
use crate::format::{fmt_f64, fmt_opt};
use crate::geometry::{conjectured_bound, curvature_csv, global_quantities, scalar_curvature_field, GeometryError};
use crate::inequalities::{
    bound_report, certificate_for_profile, counterexample_certificate, sweep, yamabe_mu1, BoundInputs,
    CounterexampleCertificate, InequalityError, SweepBase,
};
use crate::modes::{round_dirac_multiplicity, round_laplace_multiplicity};
use crate::profile::{validate_profile, ProfileError, ProfileRecipe};
use crate::radial_operators::RadialError;
use crate::spectra::{
    attach_errors, dirac_spectrum_with, laplace_spectrum_with, yamabe_spectrum_with, OperatorKind, Spectrum,
    SpectrumError, SpectrumOptions,
};
use config::{ConfigError, ExperimentConfig, Overrides, ProfileKind};

/// Version of every JSON artifact layout.
pub const SCHEMA_VERSION: u32 = 1;

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_VIOLATION: i32 = 2;
pub const EXIT_RESOLUTION: i32 = 3;

/// Relative error accepted by the round-sphere oracle.
pub const ORACLE_TOL: f64 = 1e-3;
const ORACLE_LAPLACE_VALUES: usize = 10;
const ORACLE_DIRAC_VALUES: usize = 6;

#[derive(Debug, Parser)]
#[command(name = "pinocchio", version, about = "Spectral experiments on warped-product spheres")]
pub struct Cli {
    #[command(subcommand)]
    pub command: CommandName,
    #[command(flatten)]
    pub overrides: Overrides,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum CommandName {
    /// Dirac, Laplace or Yamabe spectrum with error estimates.
    Spectrum,
    /// Scalar curvature field and global quantities.
    Curvature,
    /// Classical eigenvalue bounds and the conjectured bound.
    Bounds,
    /// Counterexample certificate for one metric.
    Certificate,
    /// Table over neck radii and lengths.
    Sweep,
    /// Total scalar curvature identity and epsilon sweep.
    Conformal,
    /// Round-sphere validation against closed forms.
    Oracle,
}

impl CommandName {
    pub fn name(self) -> &'static str {
        match self {
            CommandName::Spectrum => "spectrum",
            CommandName::Curvature => "curvature",
            CommandName::Bounds => "bounds",
            CommandName::Certificate => "certificate",
            CommandName::Sweep => "sweep",
            CommandName::Conformal => "conformal",
            CommandName::Oracle => "oracle",
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("i/o error on {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{0}")]
    Resolution(String),
    #[error("{0}")]
    Violation(String),
    #[error("{0}")]
    Failed(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Resolution(_) => EXIT_RESOLUTION,
            CliError::Violation(_) => EXIT_VIOLATION,
            _ => EXIT_ERROR,
        }
    }
}

impl From<SpectrumError> for CliError {
    fn from(e: SpectrumError) -> Self {
        match e {
            SpectrumError::Resolution { .. } | SpectrumError::Exhausted { .. } => CliError::Resolution(e.to_string()),
            SpectrumError::Profile(p) => p.into(),
            other => CliError::Failed(other.to_string()),
        }
    }
}

impl From<InequalityError> for CliError {
    fn from(e: InequalityError) -> Self {
        match e {
            InequalityError::Spectrum(s) => s.into(),
            InequalityError::Profile(p) => p.into(),
            InequalityError::TheoremViolation { .. } => CliError::Violation(e.to_string()),
            other => CliError::Failed(other.to_string()),
        }
    }
}

macro_rules! failed_from {
    ($($t:ty),*) => {
        $(impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                CliError::Failed(e.to_string())
            }
        })*
    };
}
failed_from!(GeometryError, RadialError, ConformalError);

impl From<ProfileError> for CliError {
    fn from(e: ProfileError) -> Self {
        match e {
            ProfileError::Resolution(_) => CliError::Resolution(e.to_string()),
            other => CliError::Failed(other.to_string()),
        }
    }
}

/// Result of one command before it is written out.
struct Artifacts {
    csv: String,
    json: Value,
    verdict: String,
    /// Set when the command completed but found a theorem-level failure.
    violation: Option<String>,
}

/// Parses `args` (including the program name), runs the command and
/// returns the process exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match cli.overrides.resolve() {
        Ok(cfg) => match execute(cli.command, &cfg) {
            Ok(code) => code,
            Err(e) => {
                eprintln!("{}: {e}", cli.command.name());
                e.exit_code()
            }
        },
        Err(e) => {
            eprintln!("{e}");
            EXIT_ERROR
        }
    }
}

/// Runs a resolved command, writes its artifacts and prints the verdict line.
pub fn execute(command: CommandName, cfg: &ExperimentConfig) -> Result<i32, CliError> {
    let artifacts = match cfg.jobs {
        Some(jobs) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(jobs)
                .build()
                .map_err(|e| CliError::Failed(e.to_string()))?;
            pool.install(|| dispatch(command, cfg))?
        }
        None => dispatch(command, cfg)?,
    };
    write_artifacts(&cfg.out, command, cfg, &artifacts)?;
    println!("{}", artifacts.verdict);
    match artifacts.violation {
        Some(msg) => {
            eprintln!("{}: {msg}", command.name());
            Ok(EXIT_VIOLATION)
        }
        None => Ok(EXIT_OK),
    }
}

fn dispatch(command: CommandName, cfg: &ExperimentConfig) -> Result<Artifacts, CliError> {
    match command {
        CommandName::Spectrum => cmd_spectrum(cfg),
        CommandName::Curvature => cmd_curvature(cfg),
        CommandName::Bounds => cmd_bounds(cfg),
        CommandName::Certificate => cmd_certificate(cfg),
        CommandName::Sweep => cmd_sweep(cfg),
        CommandName::Conformal => cmd_conformal(cfg),
        CommandName::Oracle => cmd_oracle(cfg),
    }
}

fn write_artifacts(
    dir: &Path,
    command: CommandName,
    cfg: &ExperimentConfig,
    artifacts: &Artifacts,
) -> Result<(), CliError> {
    let io = |path: &Path| {
        let path = path.display().to_string();
        move |source| CliError::Io { path, source }
    };
    std::fs::create_dir_all(dir).map_err(io(dir))?;
    let mut map = match &artifacts.json {
        Value::Object(m) => m.clone(),
        other => {
            let mut m = Map::new();
            m.insert("result".into(), other.clone());
            m
        }
    };
    map.insert("schema_version".into(), Value::from(SCHEMA_VERSION));
    map.insert("command".into(), Value::from(command.name()));
    map.insert("config".into(), to_value(cfg));
    let csv_path = dir.join(format!("{}.csv", command.name()));
    let json_path = dir.join(format!("{}.json", command.name()));
    std::fs::write(&csv_path, &artifacts.csv).map_err(io(&csv_path))?;
    let mut text = serde_json::to_string_pretty(&Value::Object(map)).expect("json value serializes");
    text.push('\n');
    std::fs::write(&json_path, text).map_err(io(&json_path))?;
    Ok(())
}

fn to_value<T: Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("artifact serializes")
}

fn options(cfg: &ExperimentConfig) -> SpectrumOptions {
    SpectrumOptions {
        tol: cfg.tol,
        check_resolution: true,
    }
}

fn compute_spectrum(
    cfg: &ExperimentConfig,
    kind: OperatorKind,
    k: usize,
) -> Result<(crate::profile::ProfileGrid, Spectrum), CliError> {
    let p = cfg.recipe().build()?;
    let opts = options(cfg);
    let mut s = match kind {
        OperatorKind::Dirac => dirac_spectrum_with(&p, k, &opts)?,
        OperatorKind::LaplaceFunctions => laplace_spectrum_with(&p, k, &opts)?,
        OperatorKind::Yamabe => {
            let c = scalar_curvature_field(&p)?;
            yamabe_spectrum_with(&p, &c, k, &opts)?
        }
    };
    attach_errors(&mut s, &p)?;
    Ok((p, s))
}

fn cmd_spectrum(cfg: &ExperimentConfig) -> Result<Artifacts, CliError> {
    let kind = OperatorKind::from(cfg.operator);
    let (p, s) = compute_spectrum(cfg, kind, cfg.k)?;
    let first = s.entries.first().map(|e| e.value.abs()).unwrap_or(f64::NAN);
    let verdict = format!(
        "spectrum {}: {} values (with multiplicity), lowest |value| {:.6}, complete below {:.6} ({})",
        kind.name(),
        s.total_multiplicity(),
        first,
        s.truncation_floor,
        if s.certified { "certified" } else { "heuristic" }
    );
    let json = serde_json::json!({
        "metadata": s.metadata(p.recipe()),
        "spectrum": s,
    });
    Ok(Artifacts {
        csv: s.to_csv(),
        json,
        verdict,
        violation: None,
    })
}

fn cmd_curvature(cfg: &ExperimentConfig) -> Result<Artifacts, CliError> {
    let p = cfg.recipe().build()?;
    let c = scalar_curvature_field(&p)?;
    let q = global_quantities(&p, &c);
    let validation = validate_profile(&p, 0.05);
    let rhs = conjectured_bound(&q, p.n);
    let verdict = format!(
        "curvature: vol {:.6}, int S {:.6}, ratio {:.6}, S_min {:.6}, conjecture rhs {:.6}",
        q.vol, q.total_s, q.ratio, c.s_min, rhs
    );
    let json = serde_json::json!({
        "global": q,
        "s_min": c.s_min,
        "conjecture_rhs": rhs,
        "region_integrals": c.region_integrals,
        "validation": validation,
    });
    Ok(Artifacts {
        csv: curvature_csv(&p, &c),
        json,
        verdict,
        violation: None,
    })
}

fn cmd_bounds(cfg: &ExperimentConfig) -> Result<Artifacts, CliError> {
    let (p, dirac) = compute_spectrum(cfg, OperatorKind::Dirac, 1)?;
    let c = scalar_curvature_field(&p)?;
    let q = global_quantities(&p, &c);
    let mu1 = if p.n >= 3 { Some(yamabe_mu1(&p, &c, cfg.tol)?) } else { None };
    let inputs = BoundInputs::from_spectrum(&dirac, mu1, cfg.bound_tol)?;
    let report = bound_report(p.n, &inputs, &c, &q);
    let mut csv = String::from("inequality,rhs,slack,holds\n");
    let rows = [
        ("lichnerowicz", Some(report.lichnerowicz_rhs), Some(report.slack.lichnerowicz)),
        ("friedrich", Some(report.friedrich_rhs), Some(report.slack.friedrich)),
        ("hijazi", report.hijazi_rhs, report.slack.hijazi),
        ("baer", report.baer_rhs, report.slack.baer),
        ("conjecture", Some(report.conjecture_rhs), Some(report.slack.conjecture)),
    ];
    for (name, rhs, slack) in rows {
        if let (Some(rhs), Some(slack)) = (rhs, slack) {
            let _ = writeln!(csv, "{name},{},{},{}", fmt_f64(rhs), fmt_f64(slack), slack >= -report.tol);
        }
    }
    let violation = (!report.violations.is_empty()).then(|| format!("violated: {}", report.violations.join(", ")));
    let verdict = format!(
        "bounds: lambda1^2 {:.6}, friedrich {:.6}, hijazi {}, conjecture {:.6}: {}",
        report.lambda1_sq,
        report.friedrich_rhs,
        report.hijazi_rhs.map_or("n/a".to_string(), |h| format!("{h:.6}")),
        report.conjecture_rhs,
        if violation.is_some() { "VIOLATION" } else { "OK" }
    );
    let json = serde_json::json!({
        "report": report,
        "ordering_holds": report.ordering_holds(),
    });
    Ok(Artifacts {
        csv,
        json,
        verdict,
        violation,
    })
}

pub const CERTIFICATE_CSV_HEADER: &str = "n,r,L,N,lambda1_sq,err_lambda,conjecture_rhs,err_rhs,cap_C1,margin,verdict";

pub fn certificate_csv(cert: &CounterexampleCertificate) -> String {
    format!(
        "{CERTIFICATE_CSV_HEADER}\n{},{},{},{},{},{},{},{},{},{},{}\n",
        cert.n,
        fmt_f64(cert.r),
        fmt_f64(cert.l),
        cert.resolution,
        fmt_f64(cert.lambda1_sq),
        fmt_f64(cert.err_lambda),
        fmt_f64(cert.conjecture_rhs),
        fmt_f64(cert.err_rhs),
        fmt_opt(cert.cap_c1),
        fmt_f64(cert.margin),
        cert.verdict.name()
    )
}

fn cmd_certificate(cfg: &ExperimentConfig) -> Result<Artifacts, CliError> {
    let opts = options(cfg);
    let cert = match cfg.profile {
        ProfileKind::Pinocchio => counterexample_certificate(&cfg.pinocchio_spec(), &opts)?,
        ProfileKind::Round => {
            let p = cfg.recipe().build()?;
            certificate_for_profile(&p, cfg.radius, 0.0, None, &opts)?
        }
    };
    let verdict = format!(
        "certificate: {} (margin {:.6}, error budget {:.3e}, lambda1^2 {:.6}, rhs {:.6})",
        cert.verdict.name(),
        cert.margin,
        cert.error_budget(),
        cert.lambda1_sq,
        cert.conjecture_rhs
    );
    Ok(Artifacts {
        csv: certificate_csv(&cert),
        json: to_value(&cert),
        verdict,
        violation: None,
    })
}

fn cmd_sweep(cfg: &ExperimentConfig) -> Result<Artifacts, CliError> {
    let base = SweepBase {
        n: cfg.n,
        t_body: cfg.t_body,
        w_taper: cfg.w_taper,
        resolution: cfg.resolution,
        tol: cfg.bound_tol,
    };
    let table = sweep(&cfg.sweep_r, &cfg.sweep_l, &base)?;
    let violations = table.violations();
    let cap_failures: Vec<(f64, f64)> = table
        .rows
        .iter()
        .filter(|row| row.report.as_ref().is_some_and(|r| !r.cap_holds))
        .map(|row| (row.r, row.l))
        .collect();
    let mut problems = Vec::new();
    if !violations.is_empty() {
        problems.push(format!("classical inequality violated in {} cells", violations.len()));
    }
    if !cap_failures.is_empty() {
        problems.push(format!("lambda_k^2 > C_k in {} cells", cap_failures.len()));
    }
    if !table.cap_invariant {
        problems.push("C_k differs between cells".to_string());
    }
    let failed_cells = table.rows.iter().filter(|r| r.error.is_some()).count();
    let refuted = table
        .rows
        .iter()
        .filter(|r| {
            r.report
                .as_ref()
                .is_some_and(|rep| rep.certificate.verdict == crate::inequalities::Verdict::Refuted)
        })
        .count();
    let verdict = format!(
        "sweep: {} cells, {} refuted, {} failed, {}",
        table.rows.len(),
        refuted,
        failed_cells,
        if problems.is_empty() { "invariants OK".to_string() } else { problems.join("; ") }
    );
    Ok(Artifacts {
        csv: table.to_csv(),
        json: to_value(&table),
        verdict,
        violation: (!problems.is_empty()).then(|| problems.join("; ")),
    })
}

fn cmd_conformal(cfg: &ExperimentConfig) -> Result<Artifacts, CliError> {
    let p = cfg.recipe().build()?;
    let c = scalar_curvature_field(&p)?;
    let total = p.total_length;
    let u: Vec<f64> = p
        .t
        .iter()
        .map(|t| 1.0 + 0.5 * (std::f64::consts::PI * t / total).cos())
        .collect();
    let identity = conformal_scalar_curvature(&p, &c, &u)?;
    let mut csv = String::from("eps,value,normalized,j\n");
    let mut summaries = Vec::new();
    for &j in &cfg.modes {
        let sweep = epsilon_unboundedness_sweep(&p, &c, j, &cfg.eps)?;
        for line in sweep.to_csv().lines().skip(1) {
            csv.push_str(line);
            csv.push('\n');
        }
        summaries.push(sweep.summary());
    }
    let limits: Vec<String> = summaries
        .iter()
        .map(|s| format!("j={} -> {:.6} (mu {:.6})", s.j, s.extrapolated_limit, s.mu_j))
        .collect();
    let verdict = format!(
        "conformal: identity residual {:.3e}, energy residual {:.3e}; {}",
        identity.identity_residual,
        identity.energy_residual,
        limits.join(", ")
    );
    let json = serde_json::json!({
        "identity": {
            "factor": "1 + 0.5 cos(pi t / T)",
            "total_s1": identity.total_s1,
            "u_yu": identity.u_yu,
            "energy": identity.energy,
            "identity_residual": identity.identity_residual,
            "energy_residual": identity.energy_residual,
        },
        "sweeps": summaries,
    });
    Ok(Artifacts {
        csv,
        json,
        verdict,
        violation: None,
    })
}

/// One closed-form comparison of the oracle.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleRow {
    pub operator: &'static str,
    pub index: usize,
    pub computed: f64,
    pub exact: f64,
    pub rel_err: f64,
    pub multiplicity: u64,
    pub expected_multiplicity: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleReport {
    pub n: usize,
    pub radius: f64,
    #[serde(rename = "N")]
    pub resolution: usize,
    pub rows: Vec<OracleRow>,
    pub max_rel_err: f64,
    pub multiplicities_match: bool,
    pub passed: bool,
}

/// Distinct Laplace and positive Dirac eigenvalues of the round sphere
/// against `l(l+n-1)/R^2` and `(n/2+k)/R` with their multiplicities.
pub fn round_sphere_oracle(n: usize, radius: f64, resolution: usize, tol: f64) -> Result<OracleReport, CliError> {
    let recipe = ProfileRecipe::Round { n, radius, resolution };
    let p = recipe.build()?;
    let opts = SpectrumOptions {
        tol,
        check_resolution: true,
    };
    let mut rows = Vec::new();
    // one extra distinct value so the last compared cluster is complete
    let laplace_count: u64 = (0..=ORACLE_LAPLACE_VALUES).map(|l| round_laplace_multiplicity(n, l)).sum();
    let lap = laplace_spectrum_with(&p, laplace_count as usize, &opts)?;
    for (l, dv) in lap.distinct(ORACLE_TOL).iter().take(ORACLE_LAPLACE_VALUES).enumerate() {
        let exact = (l * (l + n - 1)) as f64 / (radius * radius);
        rows.push(OracleRow {
            operator: "laplace",
            index: l,
            computed: dv.value,
            exact,
            rel_err: (dv.value - exact).abs() / exact.max(1.0 / (radius * radius)),
            multiplicity: dv.multiplicity,
            expected_multiplicity: round_laplace_multiplicity(n, l),
        });
    }
    let dirac_count: u64 = (0..=ORACLE_DIRAC_VALUES).map(|k| 2 * round_dirac_multiplicity(n, k)).sum();
    let dir = dirac_spectrum_with(&p, dirac_count as usize, &opts)?;
    let positive = Spectrum {
        entries: dir.entries.iter().filter(|e| e.value > 0.0).cloned().collect(),
        ..dir.clone()
    };
    let negative_total: u64 = dir.entries.iter().filter(|e| e.value < 0.0).map(|e| e.multiplicity).sum();
    let symmetric = negative_total == positive.total_multiplicity();
    for (k, dv) in positive.distinct(ORACLE_TOL).iter().take(ORACLE_DIRAC_VALUES).enumerate() {
        let exact = (n as f64 / 2.0 + k as f64) / radius;
        rows.push(OracleRow {
            operator: "dirac",
            index: k,
            computed: dv.value,
            exact,
            rel_err: (dv.value - exact).abs() / exact,
            multiplicity: dv.multiplicity,
            expected_multiplicity: round_dirac_multiplicity(n, k),
        });
    }
    let max_rel_err = rows.iter().map(|r| r.rel_err).fold(0.0, f64::max);
    let multiplicities_match = symmetric
        && rows.len() == ORACLE_LAPLACE_VALUES + ORACLE_DIRAC_VALUES
        && rows.iter().all(|r| r.multiplicity == r.expected_multiplicity);
    Ok(OracleReport {
        n,
        radius,
        resolution,
        passed: max_rel_err <= ORACLE_TOL && multiplicities_match,
        rows,
        max_rel_err,
        multiplicities_match,
    })
}

fn cmd_oracle(cfg: &ExperimentConfig) -> Result<Artifacts, CliError> {
    let report = round_sphere_oracle(cfg.n, cfg.radius, cfg.resolution, cfg.tol)?;
    let mut csv = String::from("operator,index,computed,exact,rel_err,multiplicity,expected_multiplicity\n");
    for r in &report.rows {
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{},{}",
            r.operator,
            r.index,
            fmt_f64(r.computed),
            fmt_f64(r.exact),
            fmt_f64(r.rel_err),
            r.multiplicity,
            r.expected_multiplicity
        );
    }
    let verdict = format!(
        "oracle n={} N={}: {} (max relative error {:.3e}, multiplicities {})",
        report.n,
        report.resolution,
        if report.passed { "PASS" } else { "FAIL" },
        report.max_rel_err,
        if report.multiplicities_match { "exact" } else { "MISMATCH" }
    );
    let violation = (!report.passed).then(|| "round-sphere oracle failed".to_string());
    Ok(Artifacts {
        csv,
        json: to_value(&report),
        verdict,
        violation,
    })
}
