//! Radial conformal changes `g_1 = u^{4/(n-2)} g`.
//!
//! `S_1 = u^{-(n+2)/(n-2)} Y(u)` and `dvol_1 = u^{2n/(n-2)} dvol`, so the
//! total scalar curvature of `g_1` is `int u Y(u) dvol`. The pointwise
//! product `S_1 u^{2n/(n-2)}` equals `u Y(u)` algebraically, so the
//! identity residual measures floating-point consistency of the two
//! formulas. The energy residual compares against the integrated-by-parts
//! form `int (a |u'|^2 + S u^2) dvol` and does measure discretization.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::eigensolve::{EigenError, Selection, SymmetricPencil};
use crate::format::fmt_f64;
use crate::geometry::{extrapolate, integrate_nodal, unit_sphere_volume, volume_density, CurvatureField};
use crate::modes::LaplaceMode;
use crate::profile::ProfileGrid;
use crate::radial_operators::{assemble_yamabe_radial, yamabe_coefficient, RadialError};

/// Default regularization grid `1, 1e-1, ..., 1e-8`.
pub const DEFAULT_EPS: [f64; 9] = [1.0, 1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6, 1e-7, 1e-8];

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConformalError {
    #[error("the Yamabe operator needs n >= 3 (got n = {0})")]
    Dimension(usize),
    #[error("conformal factor has {got} samples, profile has {want} nodes")]
    Length { got: usize, want: usize },
    #[error("conformal factor must be positive; u[{index}] = {value}")]
    NonPositive { index: usize, value: f64 },
    #[error("Yamabe eigenvalue mu_{j} = {mu} is not positive")]
    NonPositiveEigenvalue { j: usize, mu: f64 },
    #[error("epsilon values must be positive and finite, got {0}")]
    Epsilon(f64),
    #[error("at least two epsilon values are needed to extrapolate")]
    TooFewEpsilon,
    #[error(transparent)]
    Radial(#[from] RadialError),
    #[error(transparent)]
    Eigen(#[from] EigenError),
}

fn check_inputs(p: &ProfileGrid, c: &CurvatureField, u: &[f64]) -> Result<(), ConformalError> {
    if p.n < 3 {
        return Err(ConformalError::Dimension(p.n));
    }
    let want = p.node_count();
    if u.len() != want {
        return Err(ConformalError::Length { got: u.len(), want });
    }
    if c.s.len() != want {
        return Err(ConformalError::Length { got: c.s.len(), want });
    }
    Ok(())
}

/// `u'` and `u''` at interior node `i` from the three-point stencil on a
/// possibly nonuniform grid.
fn derivatives(p: &ProfileGrid, u: &[f64], i: usize) -> (f64, f64) {
    let hl = p.t[i] - p.t[i - 1];
    let hr = p.t[i + 1] - p.t[i];
    let denom = hl * hr * (hl + hr);
    let d1 = (hl * hl * (u[i + 1] - u[i]) + hr * hr * (u[i] - u[i - 1])) / denom;
    let d2 = 2.0 * (hl * u[i + 1] - (hl + hr) * u[i] + hr * u[i - 1]) / denom;
    (d1, d2)
}

/// `Y(u) = a (-u'' - (n-1) (f'/f) u') + S u` at every node; pole values are
/// extrapolated from the three nearest interior nodes.
pub fn yamabe_apply(p: &ProfileGrid, c: &CurvatureField, u: &[f64]) -> Result<Vec<f64>, ConformalError> {
    check_inputs(p, c, u)?;
    let a = yamabe_coefficient(p.n);
    let m = (p.n - 1) as f64;
    let last = p.node_count() - 1;
    let mut y = vec![0.0; last + 1];
    for i in 1..last {
        let (d1, d2) = derivatives(p, u, i);
        y[i] = a * (-d2 - m * p.f1[i] / p.f[i] * d1) + c.s[i] * u[i];
    }
    y[0] = extrapolate(y[1], y[2], y[3]);
    y[last] = extrapolate(y[last - 1], y[last - 2], y[last - 3]);
    Ok(y)
}

/// `u'` at every node; one-sided second order at the poles.
fn gradient(p: &ProfileGrid, u: &[f64]) -> Vec<f64> {
    let last = p.node_count() - 1;
    let mut g = vec![0.0; last + 1];
    for (i, gi) in g.iter_mut().enumerate().take(last).skip(1) {
        *gi = derivatives(p, u, i).0;
    }
    let h0 = p.t[1] - p.t[0];
    g[0] = (-3.0 * u[0] + 4.0 * u[1] - u[2]) / (2.0 * h0);
    let hl = p.t[last] - p.t[last - 1];
    g[last] = (3.0 * u[last] - 4.0 * u[last - 1] + u[last - 2]) / (2.0 * hl);
    g
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConformalReport {
    pub u: Vec<f64>,
    pub eps: Option<f64>,
    /// Source Yamabe eigenvalue, when `u` came from an eigenfunction.
    pub mu: Option<f64>,
    pub s1: Vec<f64>,
    /// `int S_1 dvol_1`.
    pub total_s1: f64,
    /// `vol(g_1)`.
    pub vol1: f64,
    /// `int u Y(u) dvol`.
    pub u_yu: f64,
    /// `int (a |u'|^2 + S u^2) dvol`.
    pub energy: f64,
    /// `|total_s1 - u_yu| / max(1, |total_s1|)`.
    pub identity_residual: f64,
    /// `|u_yu - energy| / max(1, |u_yu|)`.
    pub energy_residual: f64,
}

pub fn conformal_scalar_curvature(
    p: &ProfileGrid,
    c: &CurvatureField,
    u: &[f64],
) -> Result<ConformalReport, ConformalError> {
    check_inputs(p, c, u)?;
    if let Some((index, &value)) = u.iter().enumerate().find(|(_, &v)| !(v > 0.0)) {
        return Err(ConformalError::NonPositive { index, value });
    }
    let n = p.n as f64;
    let omega = unit_sphere_volume(p.n - 1);
    let density = volume_density(p);
    let y = yamabe_apply(p, c, u)?;
    let s1: Vec<f64> = u
        .iter()
        .zip(&y)
        .map(|(ui, yi)| ui.powf(-(n + 2.0) / (n - 2.0)) * yi)
        .collect();
    let vol_factor: Vec<f64> = u.iter().map(|ui| ui.powf(2.0 * n / (n - 2.0))).collect();
    let weighted = |g: &dyn Fn(usize) -> f64| -> f64 {
        let vals: Vec<f64> = (0..u.len()).map(|i| g(i) * density[i]).collect();
        omega * integrate_nodal(p, &vals)
    };
    let total_s1 = weighted(&|i| s1[i] * vol_factor[i]);
    let vol1 = weighted(&|i| vol_factor[i]);
    let u_yu = weighted(&|i| u[i] * y[i]);
    let grad = gradient(p, u);
    let a = yamabe_coefficient(p.n);
    let energy = weighted(&|i| a * grad[i] * grad[i] + c.s[i] * u[i] * u[i]);
    let mut report = ConformalReport {
        u: u.to_vec(),
        eps: None,
        mu: None,
        s1,
        total_s1,
        vol1,
        u_yu,
        energy,
        identity_residual: 0.0,
        energy_residual: (u_yu - energy).abs() / u_yu.abs().max(1.0),
    };
    report.identity_residual = total_scalar_identity_check(&report);
    Ok(report)
}

/// `|int S_1 dvol_1 - int u Y(u) dvol| / max(1, |int S_1 dvol_1|)`.
pub fn total_scalar_identity_check(report: &ConformalReport) -> f64 {
    (report.total_s1 - report.u_yu).abs() / report.total_s1.abs().max(1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpsilonRow {
    pub eps: f64,
    /// `int u_eps Y(u_eps) dvol`.
    pub value: f64,
    /// `value / int u_eps^2 dvol`.
    pub normalized: f64,
    pub identity_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpsilonSweep {
    pub j: usize,
    pub mu_j: f64,
    pub rows: Vec<EpsilonRow>,
    /// Linear extrapolation of `value` to `eps = 0` from the two smallest `eps`.
    pub extrapolated_limit: f64,
    /// `|extrapolated_limit - mu_j| / |mu_j|`.
    pub residual: f64,
}

impl EpsilonSweep {
    /// Header `eps,value,normalized,j`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("eps,value,normalized,j\n");
        for row in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{}",
                fmt_f64(row.eps),
                fmt_f64(row.value),
                fmt_f64(row.normalized),
                self.j
            );
        }
        out
    }

    pub fn summary(&self) -> EpsilonSummary {
        EpsilonSummary {
            j: self.j,
            mu_j: self.mu_j,
            extrapolated_limit: self.extrapolated_limit,
            residual: self.residual,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpsilonSummary {
    pub j: usize,
    pub mu_j: f64,
    pub extrapolated_limit: f64,
    pub residual: f64,
}

/// The `j`-th rotationally symmetric Yamabe eigenpair, with `int u^2 dvol = 1`
/// and the sign fixed so that `u(0) > 0` (or `int u > 0` if `u(0) = 0`).
pub fn radial_yamabe_eigenpair(
    p: &ProfileGrid,
    c: &CurvatureField,
    j: usize,
) -> Result<(f64, Vec<f64>), ConformalError> {
    if p.n < 3 {
        return Err(ConformalError::Dimension(p.n));
    }
    let op = assemble_yamabe_radial(p, c, &LaplaceMode::new(p.n, 0))?;
    let pencil = SymmetricPencil::new(op.a, op.b)?;
    let res = pencil.solve(Selection::Indices(j..j + 1), 1e-12, true)?;
    let mu = res.values[0];
    let mut u = res.vectors.unwrap().remove(0);
    let omega = unit_sphere_volume(p.n - 1);
    let density = volume_density(p);
    let sq: Vec<f64> = u.iter().zip(&density).map(|(v, d)| v * v * d).collect();
    let norm = (omega * integrate_nodal(p, &sq)).sqrt();
    let sign = if u[0] != 0.0 { u[0].signum() } else { u.iter().sum::<f64>().signum() };
    for v in &mut u {
        *v *= sign / norm;
    }
    Ok((mu, u))
}

/// Builds `u_eps = sqrt(u_j^2 + eps)` from the `j`-th radial Yamabe
/// eigenfunction and evaluates its total scalar curvature for every `eps`.
pub fn epsilon_unboundedness_sweep(
    p: &ProfileGrid,
    c: &CurvatureField,
    j: usize,
    eps: &[f64],
) -> Result<EpsilonSweep, ConformalError> {
    if let Some(&bad) = eps.iter().find(|e| !(**e > 0.0 && e.is_finite())) {
        return Err(ConformalError::Epsilon(bad));
    }
    if eps.len() < 2 {
        return Err(ConformalError::TooFewEpsilon);
    }
    let (mu_j, u) = radial_yamabe_eigenpair(p, c, j)?;
    if !(mu_j > 0.0) {
        return Err(ConformalError::NonPositiveEigenvalue { j, mu: mu_j });
    }
    let omega = unit_sphere_volume(p.n - 1);
    let density = volume_density(p);
    let rows: Vec<Result<EpsilonRow, ConformalError>> = eps
        .par_iter()
        .map(|&e| {
            let ue: Vec<f64> = u.iter().map(|v| (v * v + e).sqrt()).collect();
            let report = conformal_scalar_curvature(p, c, &ue)?;
            let sq: Vec<f64> = ue.iter().zip(&density).map(|(v, d)| v * v * d).collect();
            let mass = omega * integrate_nodal(p, &sq);
            Ok(EpsilonRow {
                eps: e,
                value: report.u_yu,
                normalized: report.u_yu / mass,
                identity_residual: report.identity_residual,
            })
        })
        .collect();
    let rows = rows.into_iter().collect::<Result<Vec<_>, _>>()?;
    let mut by_eps: Vec<&EpsilonRow> = rows.iter().collect();
    by_eps.sort_by(|a, b| a.eps.total_cmp(&b.eps));
    let (a, b) = (by_eps[0], by_eps[1]);
    let slope = (b.value - a.value) / (b.eps - a.eps);
    let extrapolated_limit = a.value - slope * a.eps;
    Ok(EpsilonSweep {
        j,
        mu_j,
        residual: (extrapolated_limit - mu_j).abs() / mu_j.abs(),
        rows,
        extrapolated_limit,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{global_quantities, scalar_curvature_field};
    use crate::profile::{build_pinocchio_profile, build_round_profile, ProfileSpec};
    use std::f64::consts::PI;

    fn round(resolution: usize) -> (ProfileGrid, CurvatureField) {
        let p = build_round_profile(3, 1.0, resolution).unwrap();
        let c = scalar_curvature_field(&p).unwrap();
        (p, c)
    }

    #[test]
    fn constants_give_curvature() {
        let (p, c) = round(64);
        let y = yamabe_apply(&p, &c, &vec![2.5; p.node_count()]).unwrap();
        for (yi, si) in y.iter().zip(&c.s) {
            assert!((yi - 2.5 * si).abs() < 1e-10);
        }
    }

    #[test]
    fn first_harmonic_is_an_eigenfunction() {
        let (p, c) = round(400);
        let u: Vec<f64> = p.t.iter().map(|t| t.cos()).collect();
        let y = yamabe_apply(&p, &c, &u).unwrap();
        for i in 0..p.node_count() {
            assert!((y[i] - 30.0 * u[i]).abs() < 1e-3, "{i}: {} vs {}", y[i], 30.0 * u[i]);
        }
    }

    #[test]
    fn constant_factor_law() {
        let p = build_pinocchio_profile(&ProfileSpec::new(4, 0.2, 1.0)).unwrap();
        let c = scalar_curvature_field(&p).unwrap();
        let q = global_quantities(&p, &c);
        let k = 1.7f64;
        let rep = conformal_scalar_curvature(&p, &c, &vec![k; p.node_count()]).unwrap();
        let n = 4.0;
        for (s1, s) in rep.s1.iter().zip(&c.s) {
            assert!((s1 - k.powf(-4.0 / (n - 2.0)) * s).abs() <= 1e-10 * s.abs().max(1.0));
        }
        assert!((rep.vol1 - k.powf(2.0 * n / (n - 2.0)) * q.vol).abs() < 1e-10 * rep.vol1);
    }

    #[test]
    fn round_sphere_constant_two() {
        let (p, c) = round(128);
        let rep = conformal_scalar_curvature(&p, &c, &vec![2.0; p.node_count()]).unwrap();
        let exact = 4.0 * 6.0 * 2.0 * PI * PI;
        assert!((rep.total_s1 - exact).abs() < 1e-8 * exact);
        assert!(rep.identity_residual < 1e-12);
    }

    #[test]
    fn identity_and_energy_for_smooth_factor() {
        let (p, c) = round(400);
        let u: Vec<f64> = p.t.iter().map(|t| 1.0 + 0.5 * t.cos()).collect();
        let rep = conformal_scalar_curvature(&p, &c, &u).unwrap();
        assert!(rep.identity_residual <= 1e-6);
        assert!(rep.energy_residual <= 1e-4, "{}", rep.energy_residual);
    }

    #[test]
    fn nonpositive_factor_is_rejected() {
        let (p, c) = round(32);
        let mut u = vec![1.0; p.node_count()];
        u[5] = 0.0;
        assert!(matches!(
            conformal_scalar_curvature(&p, &c, &u),
            Err(ConformalError::NonPositive { index: 5, .. })
        ));
        let p2 = build_round_profile(2, 1.0, 32).unwrap();
        let c2 = scalar_curvature_field(&p2).unwrap();
        assert!(matches!(
            yamabe_apply(&p2, &c2, &vec![1.0; p2.node_count()]),
            Err(ConformalError::Dimension(2))
        ));
    }

    #[test]
    fn constant_mode_sweep_is_exact_after_normalization() {
        let (p, c) = round(64);
        let sweep = epsilon_unboundedness_sweep(&p, &c, 0, &DEFAULT_EPS).unwrap();
        for row in &sweep.rows {
            assert!((row.normalized - 6.0).abs() < 1e-8, "{row:?}");
        }
        assert!((sweep.extrapolated_limit - 6.0).abs() < 1e-6);
        assert!(sweep.to_csv().starts_with("eps,value,normalized,j\n"));
    }

    #[test]
    fn sign_changing_mode_sweep() {
        let (p, c) = round(200);
        let sweep = epsilon_unboundedness_sweep(&p, &c, 1, &DEFAULT_EPS).unwrap();
        assert!((sweep.mu_j - 30.0).abs() < 1e-2);
        assert!(sweep.residual < 1e-2, "{sweep:?}");
    }

    #[test]
    fn bad_epsilon_is_rejected() {
        let (p, c) = round(32);
        assert!(matches!(
            epsilon_unboundedness_sweep(&p, &c, 0, &[1.0, 0.0]),
            Err(ConformalError::Epsilon(_))
        ));
    }
}
