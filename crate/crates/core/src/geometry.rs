//! Scalar curvature, volume and total scalar curvature of warped-product
//! profile metrics, and the conjectured eigenvalue bound they induce.

use std::f64::consts::PI;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::format::fmt_f64;
use crate::profile::{ProfileGrid, Region};

/// Profile values at or below this are treated as corrupt at interior nodes.
pub const POSITIVITY_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GeometryError {
    #[error("profile value {value:e} at interior node {index} is below the positivity floor")]
    NonPositiveProfile { index: usize, value: f64 },
    #[error("grid has {0} nodes; at least 4 are needed")]
    TooFewNodes(usize),
}

/// Volume of the unit `m`-sphere, `2 pi^{(m+1)/2} / Gamma((m+1)/2)`.
pub fn unit_sphere_volume(m: usize) -> f64 {
    match m {
        0 => 2.0,
        1 => 2.0 * PI,
        _ => 2.0 * PI / (m as f64 - 1.0) * unit_sphere_volume(m - 2),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionIntegral {
    pub region: Region,
    pub volume: f64,
    pub total_scalar: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurvatureField {
    /// Scalar curvature per node; pole values extrapolated from the interior.
    pub s: Vec<f64>,
    pub s_min: f64,
    pub region_integrals: Vec<RegionIntegral>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GlobalQuantities {
    pub vol: f64,
    pub total_s: f64,
    pub ratio: f64,
    /// `omega_{n-1}`.
    pub omega: f64,
}

/// `S = -2(n-1) f''/f + (n-1)(n-2)(1 - f'^2)/f^2`.
pub fn warped_scalar_curvature(n: usize, f: f64, f1: f64, f2: f64) -> f64 {
    let m = (n - 1) as f64;
    -2.0 * m * f2 / f + m * (m - 1.0) * (1.0 - f1 * f1) / (f * f)
}

/// Composite Simpson on uniformly spaced samples `[a, b]`; an odd cell count
/// closes with the 3/8 rule on the last three cells.
pub fn simpson_uniform(values: &[f64], a: f64, b: f64) -> f64 {
    let m = values.len().saturating_sub(1);
    if m == 0 {
        return 0.0;
    }
    let h = (b - a) / m as f64;
    if m == 1 {
        return 0.5 * h * (values[0] + values[1]);
    }
    let simpson_cells = if m.is_multiple_of(2) { m } else { m - 3 };
    let mut sum = 0.0;
    if simpson_cells > 0 {
        let mut acc = values[0] + values[simpson_cells];
        for (i, v) in values.iter().enumerate().take(simpson_cells).skip(1) {
            acc += if i % 2 == 1 { 4.0 * v } else { 2.0 * v };
        }
        sum += acc * h / 3.0;
    }
    if m % 2 == 1 {
        let v = &values[simpson_cells..];
        sum += 3.0 * h / 8.0 * (v[0] + 3.0 * v[1] + 3.0 * v[2] + v[3]);
    }
    sum
}

/// Integral over `[0, T]` of nodal samples, region by region (regions are
/// quadrature breakpoints). The angular factor is not included.
pub fn integrate_nodal(p: &ProfileGrid, values: &[f64]) -> f64 {
    integrate_by_region(p, values).iter().map(|(_, v)| v).sum()
}

pub fn integrate_by_region(p: &ProfileGrid, values: &[f64]) -> Vec<(Region, f64)> {
    assert_eq!(values.len(), p.node_count());
    p.regions
        .iter()
        .map(|span| {
            let v = if span.is_empty() {
                0.0
            } else {
                simpson_uniform(&values[span.first_node..=span.last_node], span.start, span.end)
            };
            (span.region, v)
        })
        .collect()
}

/// `f^{n-1}` at every node.
pub fn volume_density(p: &ProfileGrid) -> Vec<f64> {
    p.f.iter().map(|f| f.max(0.0).powi(p.n as i32 - 1)).collect()
}

/// Quadratic extrapolation to an end node from the next three.
pub(crate) fn extrapolate(a1: f64, a2: f64, a3: f64) -> f64 {
    3.0 * a1 - 3.0 * a2 + a3
}

pub fn scalar_curvature_field(p: &ProfileGrid) -> Result<CurvatureField, GeometryError> {
    let m = p.node_count();
    if m < 4 {
        return Err(GeometryError::TooFewNodes(m));
    }
    let mut s = vec![0.0; m];
    for i in 1..m - 1 {
        if !(p.f[i] > POSITIVITY_FLOOR) {
            return Err(GeometryError::NonPositiveProfile {
                index: i,
                value: p.f[i],
            });
        }
        s[i] = warped_scalar_curvature(p.n, p.f[i], p.f1[i], p.f2[i]);
    }
    s[0] = extrapolate(s[1], s[2], s[3]);
    s[m - 1] = extrapolate(s[m - 2], s[m - 3], s[m - 4]);
    let s_min = s.iter().copied().fold(f64::INFINITY, f64::min);

    let omega = unit_sphere_volume(p.n - 1);
    let density = volume_density(p);
    let weighted: Vec<f64> = s.iter().zip(&density).map(|(s, w)| s * w).collect();
    let vols = integrate_by_region(p, &density);
    let totals = integrate_by_region(p, &weighted);
    let region_integrals = vols
        .into_iter()
        .zip(totals)
        .map(|((region, v), (_, ts))| RegionIntegral {
            region,
            volume: omega * v,
            total_scalar: omega * ts,
        })
        .collect();
    Ok(CurvatureField {
        s,
        s_min,
        region_integrals,
    })
}

pub fn global_quantities(p: &ProfileGrid, c: &CurvatureField) -> GlobalQuantities {
    let omega = unit_sphere_volume(p.n - 1);
    // Sum the per-region integrals so that region data independent of L
    // contributes bitwise-identical terms.
    let vol: f64 = c.region_integrals.iter().map(|r| r.volume).sum();
    let total_s: f64 = c.region_integrals.iter().map(|r| r.total_scalar).sum();
    GlobalQuantities {
        vol,
        total_s,
        ratio: total_s / vol,
        omega,
    }
}

/// `(n / (4(n-1))) * (int S) / vol`; may be negative.
pub fn conjectured_bound(q: &GlobalQuantities, n: usize) -> f64 {
    dimension_factor(n) * q.ratio
}

/// `n / (4(n-1))`.
pub fn dimension_factor(n: usize) -> f64 {
    n as f64 / (4.0 * (n as f64 - 1.0))
}

/// CSV with columns `t,S,f_pow`.
pub fn curvature_csv(p: &ProfileGrid, c: &CurvatureField) -> String {
    let density = volume_density(p);
    let mut out = String::from("t,S,f_pow\n");
    for i in 0..p.node_count() {
        let _ = writeln!(out, "{},{},{}", fmt_f64(p.t[i]), fmt_f64(c.s[i]), fmt_f64(density[i]));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profile::{build_pinocchio_profile, build_round_profile, ProfileSpec};

    #[test]
    fn sphere_volumes() {
        assert!((unit_sphere_volume(1) - 2.0 * PI).abs() < 1e-15);
        assert!((unit_sphere_volume(2) - 4.0 * PI).abs() < 1e-14);
        assert!((unit_sphere_volume(3) - 2.0 * PI * PI).abs() < 1e-14);
        // Gamma formula at m = 4: 2 pi^{5/2} / Gamma(5/2), Gamma(5/2) = 3 sqrt(pi) / 4
        let expected = 2.0 * PI.powf(2.5) / (0.75 * PI.sqrt());
        assert!((unit_sphere_volume(4) - expected).abs() < 1e-12);
    }

    #[test]
    fn round_three_sphere_quantities() {
        let p = build_round_profile(3, 1.0, 64).unwrap();
        let c = scalar_curvature_field(&p).unwrap();
        for &s in &c.s {
            assert!((s - 6.0).abs() < 1e-6, "S = {s}");
        }
        let q = global_quantities(&p, &c);
        assert!((q.vol - 2.0 * PI * PI).abs() < 1e-8);
        assert!((q.total_s - 12.0 * PI * PI).abs() < 1e-6);
        assert!((q.ratio - 6.0).abs() < 1e-8);
        assert!((conjectured_bound(&q, 3) - 2.25).abs() < 1e-8);
    }

    #[test]
    fn small_round_sphere_curvature() {
        let p = build_round_profile(3, 0.1, 256).unwrap();
        let c = scalar_curvature_field(&p).unwrap();
        let last = p.node_count() - 1;
        for &s in &c.s[1..last] {
            assert!((s - 600.0).abs() < 1e-6);
        }
    }

    #[test]
    fn round_two_sphere_area() {
        let p = build_round_profile(2, 1.0, 64).unwrap();
        let c = scalar_curvature_field(&p).unwrap();
        let q = global_quantities(&p, &c);
        assert!((q.vol - 4.0 * PI).abs() < 1e-8);
        assert!((q.ratio - 2.0).abs() < 1e-8);
    }

    #[test]
    fn neck_curvature_and_contributions() {
        let (r, l) = (0.1, 10.0);
        let p = build_pinocchio_profile(&ProfileSpec::new(3, r, l)).unwrap();
        let c = scalar_curvature_field(&p).unwrap();
        let neck = p.region(Region::Neck).unwrap();
        for i in neck.first_node..=neck.last_node {
            assert!((c.s[i] - 200.0).abs() <= 1e-12 * 200.0);
        }
        let cap = p.region(Region::NoseCap).unwrap();
        // past the blend the cap is a round sphere of radius r
        let i = cap.last_node - 2;
        assert!((c.s[i] - 600.0).abs() < 1e-6);
        let ri = c.region_integrals.iter().find(|r| r.region == Region::Neck).unwrap();
        assert!((ri.volume - 4.0 * PI * r * r * l).abs() < 1e-12);
        assert!((ri.total_scalar - 4.0 * PI * 2.0 * l).abs() < 1e-10);
    }

    #[test]
    fn zero_ratio_gives_zero_bound() {
        let q = GlobalQuantities {
            vol: 1.0,
            total_s: 0.0,
            ratio: 0.0,
            omega: 1.0,
        };
        assert_eq!(conjectured_bound(&q, 3), 0.0);
    }

    #[test]
    fn simpson_rules() {
        // cubic exact on even and odd cell counts
        for m in [2usize, 3, 4, 5, 8, 9] {
            let xs: Vec<f64> = (0..=m).map(|i| i as f64 / m as f64 * 2.0).collect();
            let ys: Vec<f64> = xs.iter().map(|x| x * x * x - x).collect();
            let exact = 16.0 / 4.0 - 2.0;
            assert!((simpson_uniform(&ys, 0.0, 2.0) - exact).abs() < 1e-13, "m = {m}");
        }
    }

    #[test]
    fn simpson_order_on_smooth_profile() {
        // |vol(h) - vol(h/2)| shrinks by at least 8 under refinement
        let spec = ProfileSpec::new(3, 0.3, 1.0).with_blend(0.0);
        let mut prev = None;
        let mut diffs = Vec::new();
        for res in [16usize, 32, 64, 128] {
            let p = build_pinocchio_profile(&spec.with_resolution(res)).unwrap();
            let v = integrate_nodal(&p, &volume_density(&p));
            if let Some(pv) = prev {
                diffs.push((v - pv as f64).abs());
            }
            prev = Some(v);
        }
        for w in diffs.windows(2) {
            assert!(w[0] >= 8.0 * w[1], "{diffs:?}");
        }
    }

    #[test]
    fn corrupt_profile_rejected() {
        let mut p = build_round_profile(3, 1.0, 16).unwrap();
        p.f[5] = 0.0;
        assert!(matches!(
            scalar_curvature_field(&p),
            Err(GeometryError::NonPositiveProfile { index: 5, .. })
        ));
    }
}
