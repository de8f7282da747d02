//! Classical lower bounds for the first Dirac eigenvalue, the conjectured
//! bound by normalized total scalar curvature, body-supported upper bounds
//! `C_k`, and counterexample certificates.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::eigensolve::{lowest_k_generalized, EigenError, DEFAULT_TOL};
use crate::format::{fmt_f64, fmt_opt};
use crate::geometry::{
    conjectured_bound, dimension_factor, global_quantities, scalar_curvature_field, CurvatureField, GeometryError,
    GlobalQuantities,
};
use crate::modes::{DiracMode, LaplaceMode};
use crate::profile::{build_pinocchio_profile, ProfileError, ProfileGrid, ProfileSpec};
use crate::radial_operators::{assemble_cap_dirichlet, assemble_yamabe_radial, CapOperator, RadialError};
use crate::spectra::{dirac_spectrum_with, Spectrum, SpectrumError, SpectrumOptions};

/// Euler characteristic of the 2-sphere.
pub const SPHERE_EULER_CHARACTERISTIC: f64 = 2.0;
/// Neck radii of the standard sweep.
pub const STANDARD_SWEEP_R: [f64; 3] = [0.05, 0.1, 0.5];
/// Neck lengths of the standard sweep.
pub const STANDARD_SWEEP_L: [f64; 3] = [1.0, 10.0, 100.0];
/// Number of eigenvalues compared against `C_k` per instance.
pub const CAP_CHECK_COUNT: usize = 5;
/// Default slack allowed before a classical inequality counts as violated.
pub const DEFAULT_BOUND_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum InequalityError {
    #[error("{0} needs n >= 3")]
    Dimension(&'static str),
    #[error("{inequality} inequality violated: slack {slack:e} < -{tol:e}")]
    TheoremViolation {
        inequality: &'static str,
        slack: f64,
        tol: f64,
    },
    #[error("spectrum is empty")]
    EmptySpectrum,
    #[error(transparent)]
    Spectrum(#[from] SpectrumError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Profile(#[from] ProfileError),
    #[error(transparent)]
    Radial(#[from] RadialError),
    #[error(transparent)]
    Eigen(#[from] EigenError),
}

/// Lowest eigenvalue of the Yamabe operator, from the rotationally
/// symmetric mode (the other modes have larger forms).
pub fn yamabe_mu1(p: &ProfileGrid, c: &CurvatureField, tol: f64) -> Result<f64, InequalityError> {
    let op = assemble_yamabe_radial(p, c, &LaplaceMode::new(p.n, 0))?;
    Ok(lowest_k_generalized(&op.a, &op.b, 1, tol)?.values[0])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Slacks {
    pub lichnerowicz: f64,
    pub friedrich: f64,
    pub hijazi: Option<f64>,
    pub baer: Option<f64>,
    pub conjecture: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub n: usize,
    pub lambda1_sq: f64,
    pub err_lambda: f64,
    pub s_min: f64,
    pub mu1: Option<f64>,
    /// `S_min / 4`.
    pub lichnerowicz_rhs: f64,
    /// `n S_min / (4(n-1))`.
    pub friedrich_rhs: f64,
    /// `n mu_1 / (4(n-1))`.
    pub hijazi_rhs: Option<f64>,
    /// `2 pi chi / area` on surfaces.
    pub baer_rhs: Option<f64>,
    /// `n / (4(n-1))` times the normalized total scalar curvature.
    pub conjecture_rhs: f64,
    /// `lambda1_sq - rhs` for each inequality.
    pub slack: Slacks,
    /// Allowed negative slack: the requested tolerance plus the
    /// discretization error budget of both sides.
    pub tol: f64,
    /// Names of the theorems whose slack is below `-tol`.
    pub violations: Vec<String>,
}

impl BoundReport {
    /// `hijazi >= friedrich >= lichnerowicz`, the first up to eigenvalue
    /// bisection accuracy. The second step needs `S_min >= 0`.
    pub fn ordering_holds(&self) -> bool {
        let hf = self.hijazi_rhs.map_or(true, |h| h >= self.friedrich_rhs - 1e-9 * h.abs().max(1.0));
        let fl = self.s_min < 0.0 || self.friedrich_rhs >= self.lichnerowicz_rhs;
        hf && fl
    }

    pub fn check(&self) -> Result<(), InequalityError> {
        let pairs: [(&'static str, Option<f64>); 4] = [
            ("lichnerowicz", Some(self.slack.lichnerowicz)),
            ("friedrich", Some(self.slack.friedrich)),
            ("hijazi", self.slack.hijazi),
            ("baer", self.slack.baer),
        ];
        for (name, slack) in pairs {
            if let Some(slack) = slack {
                if slack < -self.tol {
                    return Err(InequalityError::TheoremViolation {
                        inequality: name,
                        slack,
                        tol: self.tol,
                    });
                }
            }
        }
        Ok(())
    }
}

/// Inputs to [`bound_report`] that come with error estimates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundInputs {
    pub lambda1: f64,
    pub err_lambda1: f64,
    pub mu1: Option<f64>,
    pub err_mu1: f64,
    pub tol: f64,
}

impl BoundInputs {
    /// Takes `lambda_1` and its error from the first entry of `dirac`.
    pub fn from_spectrum(dirac: &Spectrum, mu1: Option<f64>, tol: f64) -> Result<Self, InequalityError> {
        Ok(Self {
            lambda1: dirac.lambda1().ok_or(InequalityError::EmptySpectrum)?,
            err_lambda1: dirac.lambda1_err().unwrap_or(0.0),
            mu1,
            err_mu1: 0.0,
            tol,
        })
    }
}

/// All right-hand sides and slacks, without failing on violations.
pub fn bound_report(n: usize, inputs: &BoundInputs, c: &CurvatureField, q: &GlobalQuantities) -> BoundReport {
    let lambda1_sq = inputs.lambda1 * inputs.lambda1;
    let err_lambda = 2.0 * inputs.lambda1.abs() * inputs.err_lambda1;
    let factor = dimension_factor(n);
    let s_min = c.s_min;
    let lichnerowicz_rhs = s_min / 4.0;
    let friedrich_rhs = factor * s_min;
    let (mu1, hijazi_rhs) = if n >= 3 {
        (inputs.mu1, inputs.mu1.map(|m| factor * m))
    } else {
        (None, None)
    };
    let baer_rhs = (n == 2).then(|| 2.0 * std::f64::consts::PI * SPHERE_EULER_CHARACTERISTIC / q.vol);
    let conjecture_rhs = conjectured_bound(q, n);
    let slack = Slacks {
        lichnerowicz: lambda1_sq - lichnerowicz_rhs,
        friedrich: lambda1_sq - friedrich_rhs,
        hijazi: hijazi_rhs.map(|h| lambda1_sq - h),
        baer: baer_rhs.map(|b| lambda1_sq - b),
        conjecture: lambda1_sq - conjecture_rhs,
    };
    let tol = inputs.tol + err_lambda + factor * inputs.err_mu1;
    let mut report = BoundReport {
        n,
        lambda1_sq,
        err_lambda,
        s_min,
        mu1,
        lichnerowicz_rhs,
        friedrich_rhs,
        hijazi_rhs,
        baer_rhs,
        conjecture_rhs,
        slack,
        tol,
        violations: Vec::new(),
    };
    let candidates = [
        ("lichnerowicz", Some(slack.lichnerowicz)),
        ("friedrich", Some(slack.friedrich)),
        ("hijazi", slack.hijazi),
        ("baer", slack.baer),
    ];
    report.violations = candidates
        .iter()
        .filter(|(_, s)| s.is_some_and(|s| s < -tol))
        .map(|(name, _)| name.to_string())
        .collect();
    report
}

/// Like [`bound_report`], but a violated theorem is an error.
pub fn evaluate_bounds(
    n: usize,
    dirac: &Spectrum,
    mu1: Option<f64>,
    c: &CurvatureField,
    q: &GlobalQuantities,
    tol: f64,
) -> Result<BoundReport, InequalityError> {
    let inputs = BoundInputs::from_spectrum(dirac, mu1, tol)?;
    let report = bound_report(n, &inputs, c, q);
    report.check()?;
    Ok(report)
}

/// Upper bounds `C_1 <= ... <= C_k` for `lambda_k^2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CapBounds {
    pub n: usize,
    pub t_body: f64,
    pub w_taper: f64,
    #[serde(rename = "N")]
    pub resolution: usize,
    pub values: Vec<f64>,
    /// Richardson estimates from the `2N` recomputation.
    pub errs: Vec<f64>,
}

/// The `k` smallest eigenvalues (with multiplicity) of the square of the
/// Dirac operator compressed to spinors supported in the body, merged over
/// modes. With `k` such eigenvectors as trial space, min-max gives
/// `lambda_j^2 <= C_j` for every `j <= k`.
pub fn cap_values(p: &ProfileGrid, k: usize, tol: f64) -> Result<Vec<f64>, InequalityError> {
    let n = p.n;
    let body = p
        .region(crate::profile::Region::Body)
        .ok_or(RadialError::EmptyBody)?
        .clone();
    let mut pool: Vec<(f64, u64)> = Vec::new();
    for m in 0.. {
        let mode = DiracMode::new(n, m);
        let kth = kth_with_multiplicity(&mut pool, k);
        if let Some(kth) = kth {
            // every body-supported form of mode m is at least this
            let floor = body_floor(p, body.last_node, mode.mu);
            if floor >= kth {
                break;
            }
        }
        let blocks = assemble_cap_dirichlet(CapOperator::Dirac(mode), p)?;
        let mut any_below = kth.is_none();
        for block in blocks {
            let res = lowest_k_generalized(&block.a, &block.b, k.min(block.dim()), tol)?;
            for v in res.values {
                if kth.map_or(true, |t| v < t) {
                    any_below = true;
                }
                pool.push((v, block.multiplicity));
            }
        }
        if !any_below && m > 64 {
            break;
        }
    }
    let mut out = Vec::with_capacity(k);
    pool.sort_by(|a, b| a.0.total_cmp(&b.0));
    for (v, mult) in pool {
        for _ in 0..mult {
            if out.len() < k {
                out.push(v);
            }
        }
    }
    Ok(out)
}

fn kth_with_multiplicity(pool: &mut [(f64, u64)], k: usize) -> Option<f64> {
    pool.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut seen = 0;
    for &(v, m) in pool.iter() {
        seen += m;
        if seen >= k as u64 {
            return Some(v);
        }
    }
    None
}

/// `0.99 * min (mu^2 - mu |f'|) / f^2` over the body, `-inf` when that is not positive.
fn body_floor(p: &ProfileGrid, last_node: usize, mu: f64) -> f64 {
    let mut least = f64::INFINITY;
    for i in 1..=last_node {
        let f = p.f[i];
        least = least.min((mu * mu - mu * p.f1[i].abs()) / (f * f));
    }
    if least > 0.0 {
        0.99 * least
    } else {
        f64::NEG_INFINITY
    }
}

/// Neck radius for a reference profile with the given body; the cap
/// matrices do not depend on it.
fn reference_spec(n: usize, t_body: f64, w_taper: f64, resolution: usize) -> ProfileSpec {
    let r = 0.25 * t_body.sin().min(0.9);
    ProfileSpec::new(n, r, 0.0)
        .with_body(t_body, w_taper)
        .with_resolution(resolution)
}

pub fn cap_upper_bounds(
    n: usize,
    t_body: f64,
    w_taper: f64,
    resolution: usize,
    k: usize,
) -> Result<CapBounds, InequalityError> {
    let spec = reference_spec(n, t_body, w_taper, resolution);
    let coarse = build_pinocchio_profile(&spec)?;
    let fine = coarse.refined()?;
    let tol = 1e-12;
    let values = cap_values(&coarse, k, tol)?;
    let refined = cap_values(&fine, k, tol)?;
    let errs = values.iter().zip(&refined).map(|(a, b)| (a - b).abs() / 3.0).collect();
    Ok(CapBounds {
        n,
        t_body,
        w_taper,
        resolution,
        values,
        errs,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    Refuted,
    NotRefuted,
}

impl Verdict {
    pub fn name(self) -> &'static str {
        match self {
            Verdict::Refuted => "REFUTED",
            Verdict::NotRefuted => "NOT_REFUTED",
        }
    }
}

/// Evidence that `lambda_1^2 < (n/(4(n-1))) int S / vol` for one metric.
///
/// `lambda1_sq` and `conjecture_rhs` are Richardson-extrapolated from the
/// solves at `N` and `2N`; `err_lambda` and `err_rhs` are the corresponding
/// refinement deltas.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CounterexampleCertificate {
    pub n: usize,
    pub r: f64,
    #[serde(rename = "L")]
    pub l: f64,
    #[serde(rename = "N")]
    pub resolution: usize,
    pub lambda1_sq: f64,
    pub err_lambda: f64,
    pub conjecture_rhs: f64,
    pub err_rhs: f64,
    #[serde(rename = "cap_C1")]
    pub cap_c1: Option<f64>,
    /// `conjecture_rhs - lambda1_sq`.
    pub margin: f64,
    pub verdict: Verdict,
}

impl CounterexampleCertificate {
    pub fn error_budget(&self) -> f64 {
        self.err_lambda + self.err_rhs
    }
}

/// `lambda_1` and the conjectured bound at one resolution.
struct Sample {
    lambda1: f64,
    rhs: f64,
}

fn sample(p: &ProfileGrid, opts: &SpectrumOptions) -> Result<Sample, InequalityError> {
    let c = scalar_curvature_field(p)?;
    let q = global_quantities(p, &c);
    let spectrum = dirac_spectrum_with(p, 1, opts)?;
    Ok(Sample {
        lambda1: spectrum.lambda1().ok_or(InequalityError::EmptySpectrum)?,
        rhs: conjectured_bound(&q, p.n),
    })
}

/// Certificate for an arbitrary profile; `cap_c1` is filled in by the caller.
pub fn certificate_for_profile(
    p: &ProfileGrid,
    r: f64,
    l: f64,
    cap_c1: Option<f64>,
    opts: &SpectrumOptions,
) -> Result<CounterexampleCertificate, InequalityError> {
    if p.n < 3 {
        return Err(InequalityError::Dimension("counterexample certificate"));
    }
    let coarse = sample(p, opts)?;
    let fine = sample(&p.refined()?, opts)?;
    let l1 = fine.lambda1 + (fine.lambda1 - coarse.lambda1) / 3.0;
    let err_l1 = (fine.lambda1 - coarse.lambda1).abs() / 3.0;
    let lambda1_sq = l1 * l1;
    let err_lambda = 2.0 * l1.abs() * err_l1;
    // Simpson: the fine value is already four orders better; the delta is a loose bound
    let conjecture_rhs = fine.rhs;
    let err_rhs = (fine.rhs - coarse.rhs).abs();
    let margin = conjecture_rhs - lambda1_sq;
    let verdict = if margin > err_lambda + err_rhs {
        Verdict::Refuted
    } else {
        Verdict::NotRefuted
    };
    Ok(CounterexampleCertificate {
        n: p.n,
        r,
        l,
        resolution: p.resolution(),
        lambda1_sq,
        err_lambda,
        conjecture_rhs,
        err_rhs,
        cap_c1,
        margin,
        verdict,
    })
}

pub fn counterexample_certificate(
    spec: &ProfileSpec,
    opts: &SpectrumOptions,
) -> Result<CounterexampleCertificate, InequalityError> {
    if spec.n < 3 {
        return Err(InequalityError::Dimension("counterexample certificate"));
    }
    let p = build_pinocchio_profile(spec)?;
    let cap = cap_values(&p, 1, 1e-12)?;
    certificate_for_profile(&p, spec.r, spec.neck_length, cap.first().copied(), opts)
}

/// Everything computed for one Pinocchio metric.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceReport {
    pub spec: ProfileSpec,
    pub ratio: f64,
    /// `lambda_j^2` for `j <= CAP_CHECK_COUNT`, at resolution `N`.
    pub lambda_sq: Vec<f64>,
    pub cap: Vec<f64>,
    /// `lambda_j^2 <= C_j + tol` for every listed `j`.
    pub cap_holds: bool,
    pub bounds: BoundReport,
    pub certificate: CounterexampleCertificate,
}

pub fn analyze_instance(spec: &ProfileSpec, tol: f64) -> Result<InstanceReport, InequalityError> {
    let opts = SpectrumOptions::default();
    let p = build_pinocchio_profile(spec)?;
    let c = scalar_curvature_field(&p)?;
    let q = global_quantities(&p, &c);
    let mut dirac = dirac_spectrum_with(&p, CAP_CHECK_COUNT, &opts)?;
    crate::spectra::attach_errors(&mut dirac, &p)?;
    let lambda_sq: Vec<f64> = dirac
        .values_with_multiplicity()
        .iter()
        .take(CAP_CHECK_COUNT)
        .map(|v| v * v)
        .collect();
    let cap = cap_values(&p, CAP_CHECK_COUNT, 1e-12)?;
    let cap_holds = lambda_sq
        .iter()
        .zip(&cap)
        .all(|(l, c)| *l <= c + tol.max(1e-9 * c.abs()));
    let mu1 = if p.n >= 3 { Some(yamabe_mu1(&p, &c, DEFAULT_TOL)?) } else { None };
    let inputs = BoundInputs::from_spectrum(&dirac, mu1, tol)?;
    let bounds = bound_report(p.n, &inputs, &c, &q);
    let certificate = certificate_for_profile(&p, spec.r, spec.neck_length, cap.first().copied(), &opts)?;
    Ok(InstanceReport {
        spec: *spec,
        ratio: q.ratio,
        lambda_sq,
        cap,
        cap_holds,
        bounds,
        certificate,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub r: f64,
    #[serde(rename = "L")]
    pub l: f64,
    pub report: Option<InstanceReport>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub n: usize,
    #[serde(rename = "N")]
    pub resolution: usize,
    pub rows: Vec<SweepRow>,
    /// `C_k` of the body shared by every row.
    pub reference_cap: Vec<f64>,
    /// Every row's own `C_k` equals `reference_cap` bitwise.
    pub cap_invariant: bool,
}

pub const SWEEP_CSV_HEADER: &str = "n,r,L,N,ratio,conjecture_rhs,lambda1_sq,err_lambda,cap_C1,cap_holds,\
lichnerowicz_slack,friedrich_slack,hijazi_slack,margin,verdict,error";

impl SweepTable {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(SWEEP_CSV_HEADER);
        out.push('\n');
        for row in &self.rows {
            match &row.report {
                Some(rep) => {
                    let cert = &rep.certificate;
                    let _ = writeln!(
                        out,
                        "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},",
                        self.n,
                        fmt_f64(row.r),
                        fmt_f64(row.l),
                        self.resolution,
                        fmt_f64(rep.ratio),
                        fmt_f64(cert.conjecture_rhs),
                        fmt_f64(cert.lambda1_sq),
                        fmt_f64(cert.err_lambda),
                        fmt_opt(cert.cap_c1),
                        rep.cap_holds,
                        fmt_f64(rep.bounds.slack.lichnerowicz),
                        fmt_f64(rep.bounds.slack.friedrich),
                        fmt_opt(rep.bounds.slack.hijazi),
                        fmt_f64(cert.margin),
                        cert.verdict.name(),
                    );
                }
                None => {
                    let msg = row.error.clone().unwrap_or_default().replace([',', '\n'], ";");
                    let _ = writeln!(
                        out,
                        "{},{},{},{},,,,,,,,,,,,{}",
                        self.n,
                        fmt_f64(row.r),
                        fmt_f64(row.l),
                        self.resolution,
                        msg
                    );
                }
            }
        }
        out
    }

    /// Rows whose classical inequalities failed.
    pub fn violations(&self) -> Vec<(f64, f64, Vec<String>)> {
        self.rows
            .iter()
            .filter_map(|row| {
                let rep = row.report.as_ref()?;
                (!rep.bounds.violations.is_empty()).then(|| (row.r, row.l, rep.bounds.violations.clone()))
            })
            .collect()
    }
}

/// Parameters shared by every sweep cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepBase {
    pub n: usize,
    pub t_body: f64,
    pub w_taper: f64,
    pub resolution: usize,
    pub tol: f64,
}

/// Analyzes every `(r, L)` cell in parallel. Cells fail independently.
pub fn sweep(r_values: &[f64], l_values: &[f64], base: &SweepBase) -> Result<SweepTable, InequalityError> {
    let cells: Vec<(f64, f64)> = r_values
        .iter()
        .flat_map(|&r| l_values.iter().map(move |&l| (r, l)))
        .collect();
    let rows: Vec<SweepRow> = cells
        .par_iter()
        .map(|&(r, l)| {
            let spec = ProfileSpec::new(base.n, r, l)
                .with_body(base.t_body, base.w_taper)
                .with_resolution(base.resolution);
            match analyze_instance(&spec, base.tol) {
                Ok(report) => SweepRow {
                    r,
                    l,
                    report: Some(report),
                    error: None,
                },
                Err(e) => SweepRow {
                    r,
                    l,
                    report: None,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect();
    let reference = build_pinocchio_profile(&reference_spec(base.n, base.t_body, base.w_taper, base.resolution))?;
    let reference_cap = cap_values(&reference, CAP_CHECK_COUNT, 1e-12)?;
    let cap_invariant = rows
        .iter()
        .filter_map(|row| row.report.as_ref())
        .all(|rep| rep.cap == reference_cap);
    Ok(SweepTable {
        n: base.n,
        resolution: base.resolution,
        rows,
        reference_cap,
        cap_invariant,
    })
}
