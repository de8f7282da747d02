//! Discrete self-adjoint radial operators, one per angular mode.
//!
//! Laplace and Yamabe operators come from the quadratic form
//! `int (u'^2 + V u^2) f^{n-1} dt` with half-node stiffness weights and
//! lumped dual-cell masses. The Dirac operator is discretized in its chiral
//! form `[[0, A^*], [A, 0]]`, `A = d/dt + mu/f`, on a staggered grid: the
//! node component is Dirichlet at both poles and the midpoint component
//! lives on every midpoint except the one next to `t = T`. This gives a
//! zero-diagonal tridiagonal pencil whose spectrum is symmetric about zero
//! at the discrete level and which has no doubled modes.

use std::fmt::Write as _;
use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::eigensolve::SymBand;
use crate::geometry::CurvatureField;
use crate::modes::{DiracMode, LaplaceMode};
use crate::profile::{ProfileGrid, Region};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RadialError {
    #[error("mode belongs to dimension {mode} but profile has dimension {profile}")]
    DimensionMismatch { mode: usize, profile: usize },
    #[error("the Yamabe operator needs n >= 3 (got n = {0})")]
    YamabeDimension(usize),
    #[error("curvature field has {field} nodes but profile has {profile}")]
    CurvatureMismatch { field: usize, profile: usize },
    #[error("profile has no body region to restrict to")]
    EmptyBody,
}

/// Which of the equivalent sign conventions the Dirac chain realizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DiracConvention {
    /// `A = d/dt + mu/f` maps the node component to the midpoint component.
    NodeToMidpoint,
}

/// Component of the staggered Dirac field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Chirality {
    Node,
    Midpoint,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum RadialKind {
    Laplace { ell: usize },
    Yamabe { ell: usize },
    Dirac { k: usize, mu: f64, convention: DiracConvention },
    /// One chirality block of the Dirac square, `A^*A` or `AA^*`.
    DiracSquared { k: usize, mu: f64, chirality: Chirality },
    CapRestriction(Box<RadialKind>),
}

/// Pencil `(A, diag(B))` for one radial mode.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialOperator {
    pub kind: RadialKind,
    pub a: SymBand,
    pub b: Vec<f64>,
    /// Largest cell length of the underlying grid.
    pub h: f64,
    /// Range of profile node indices spanned by the unknowns.
    pub domain: Range<usize>,
    /// Position `t` of every unknown.
    pub points: Vec<f64>,
    /// Copies of this radial problem in the full spectrum.
    pub multiplicity: u64,
}

impl RadialOperator {
    pub fn dim(&self) -> usize {
        self.b.len()
    }

    /// `% A` block of `row col value` lines (lower triangle), then a `% B`
    /// block of `row value` lines.
    pub fn to_coordinate_text(&self) -> String {
        let mut out = String::from("% A\n");
        for (i, j, v) in self.a.coordinate_entries() {
            let _ = writeln!(out, "{i} {j} {v:e}");
        }
        out.push_str("% B\n");
        for (i, v) in self.b.iter().enumerate() {
            let _ = writeln!(out, "{i} {v:e}");
        }
        out
    }
}

/// Simpson on `[a, b]` of `f^{n-1}` using the analytic profile.
fn half_cell_mass(p: &ProfileGrid, a: f64, b: f64) -> f64 {
    let w = |t: f64| p.eval(t)[0].max(0.0).powi(p.n as i32 - 1);
    (b - a) / 6.0 * (w(a) + 4.0 * w(0.5 * (a + b)) + w(b))
}

/// Full-grid stiffness (tridiagonal) and lumped masses for the weighted
/// Dirichlet form `int u'^2 f^{n-1}`.
struct LaplaceParts {
    diag: Vec<f64>,
    off: Vec<f64>,
    mass: Vec<f64>,
}

fn laplace_parts(p: &ProfileGrid) -> LaplaceParts {
    let m = p.node_count();
    let mut diag = vec![0.0; m];
    let mut off = vec![0.0; m - 1];
    let mut mass = vec![0.0; m];
    for i in 0..m - 1 {
        let h = p.spacing(i);
        let mid = p.midpoint(i);
        let w = p.eval(mid)[0].powi(p.n as i32 - 1) / h;
        diag[i] += w;
        diag[i + 1] += w;
        off[i] = -w;
        mass[i] += half_cell_mass(p, p.t[i], mid);
        mass[i + 1] += half_cell_mass(p, mid, p.t[i + 1]);
    }
    LaplaceParts { diag, off, mass }
}

fn check_dimension(p: &ProfileGrid, n: usize) -> Result<(), RadialError> {
    if p.n != n {
        return Err(RadialError::DimensionMismatch {
            mode: n,
            profile: p.n,
        });
    }
    Ok(())
}

/// Unknown nodes for a scalar mode: natural at the poles for `ell = 0`,
/// Dirichlet at the pole nodes otherwise.
fn scalar_domain(p: &ProfileGrid, ell: usize) -> Range<usize> {
    let m = p.node_count();
    if ell == 0 {
        0..m
    } else {
        1..m - 1
    }
}

fn scalar_operator(
    p: &ProfileGrid,
    ell: usize,
    potential: impl Fn(usize) -> f64,
    stiffness_factor: f64,
    kind: RadialKind,
    multiplicity: u64,
) -> RadialOperator {
    let parts = laplace_parts(p);
    let domain = scalar_domain(p, ell);
    let dim = domain.len();
    let mut a = SymBand::zeros(dim, 1);
    let mut b = Vec::with_capacity(dim);
    for (row, node) in domain.clone().enumerate() {
        a.set(row, row, stiffness_factor * parts.diag[node] + potential(node) * parts.mass[node]);
        if row + 1 < dim {
            a.set(row + 1, row, stiffness_factor * parts.off[node]);
        }
        b.push(parts.mass[node]);
    }
    RadialOperator {
        kind,
        a,
        b,
        h: p.max_spacing(),
        points: p.t[domain.clone()].to_vec(),
        domain,
        multiplicity,
    }
}

pub fn assemble_laplace_radial(p: &ProfileGrid, mode: &LaplaceMode) -> Result<RadialOperator, RadialError> {
    check_dimension(p, mode.n)?;
    let value = mode.value;
    let f = &p.f;
    Ok(scalar_operator(
        p,
        mode.ell,
        |i| if value == 0.0 { 0.0 } else { value / (f[i] * f[i]) },
        1.0,
        RadialKind::Laplace { ell: mode.ell },
        mode.mult,
    ))
}

/// `4(n-1)/(n-2)`.
pub fn yamabe_coefficient(n: usize) -> f64 {
    4.0 * (n as f64 - 1.0) / (n as f64 - 2.0)
}

/// `A_Y = (4(n-1)/(n-2)) A_Delta + diag(S) B`.
pub fn assemble_yamabe_radial(
    p: &ProfileGrid,
    c: &CurvatureField,
    mode: &LaplaceMode,
) -> Result<RadialOperator, RadialError> {
    check_dimension(p, mode.n)?;
    if p.n < 3 {
        return Err(RadialError::YamabeDimension(p.n));
    }
    if c.s.len() != p.node_count() {
        return Err(RadialError::CurvatureMismatch {
            field: c.s.len(),
            profile: p.node_count(),
        });
    }
    let coef = yamabe_coefficient(p.n);
    let value = mode.value;
    let f = &p.f;
    let s = &c.s;
    Ok(scalar_operator(
        p,
        mode.ell,
        |i| {
            let angular = if value == 0.0 { 0.0 } else { coef * value / (f[i] * f[i]) };
            angular + s[i]
        },
        coef,
        RadialKind::Yamabe { ell: mode.ell },
        mode.mult,
    ))
}

/// Couplings of the staggered chiral Dirac discretization for one `mu`.
///
/// Midpoint unknowns `i = 0..M-1` (cell `i`), node unknowns `j = 1..M`
/// where `M = cells - 1` is the last interior node. `lower[i]` couples
/// midpoint `i` with node `i` and `upper[i]` with node `i + 1`; both already
/// carry the midpoint weight, so the pencil is `(K, diag(B))`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiracCouplings {
    pub mu: f64,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    /// Midpoint weights `h_i`.
    pub midpoint_weight: Vec<f64>,
    /// Node weights `(h_{j-1} + h_j)/2`, indexed by node (entry 0 unused).
    pub node_weight: Vec<f64>,
    pub midpoints: Vec<f64>,
}

pub fn dirac_couplings(p: &ProfileGrid, mu: f64) -> DiracCouplings {
    let cells = p.cell_count();
    let count = cells - 1;
    let mut lower = vec![0.0; count];
    let mut upper = vec![0.0; count];
    let mut midpoint_weight = vec![0.0; count];
    let mut midpoints = vec![0.0; count];
    for i in 0..count {
        let h = p.spacing(i);
        let mid = p.midpoint(i);
        let g = 0.5 * h * mu / p.eval(mid)[0];
        lower[i] = -1.0 + g;
        upper[i] = 1.0 + g;
        midpoint_weight[i] = h;
        midpoints[i] = mid;
    }
    let mut node_weight = vec![0.0; cells];
    for (j, w) in node_weight.iter_mut().enumerate().skip(1) {
        *w = 0.5 * (p.spacing(j - 1) + p.spacing(j));
    }
    DiracCouplings {
        mu,
        lower,
        upper,
        midpoint_weight,
        node_weight,
        midpoints,
    }
}

impl DiracCouplings {
    /// Number of midpoint unknowns (equal to the number of node unknowns).
    pub fn size(&self) -> usize {
        self.lower.len()
    }

    /// `A^*A` on node unknowns `1..=last` with weight `B_node`.
    fn node_square(&self, last: usize) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let mut diag = Vec::with_capacity(last);
        let mut off = Vec::with_capacity(last.saturating_sub(1));
        let mut weight = Vec::with_capacity(last);
        for j in 1..=last {
            let mut d = self.upper[j - 1] * self.upper[j - 1] / self.midpoint_weight[j - 1];
            if j < self.size() {
                d += self.lower[j] * self.lower[j] / self.midpoint_weight[j];
            }
            diag.push(d);
            weight.push(self.node_weight[j]);
            if j < last {
                off.push(self.lower[j] * self.upper[j] / self.midpoint_weight[j]);
            }
        }
        (diag, off, weight)
    }

    /// `AA^*` on midpoint unknowns `0..=last` with weight `B_mid`.
    fn midpoint_square(&self, last: usize) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let mut diag = Vec::with_capacity(last + 1);
        let mut off = Vec::with_capacity(last);
        let mut weight = Vec::with_capacity(last + 1);
        for i in 0..=last {
            let mut d = self.upper[i] * self.upper[i] / self.node_weight[i + 1];
            if i >= 1 {
                d += self.lower[i] * self.lower[i] / self.node_weight[i];
            }
            diag.push(d);
            weight.push(self.midpoint_weight[i]);
            if i < last {
                off.push(self.upper[i] * self.lower[i + 1] / self.node_weight[i + 1]);
            }
        }
        (diag, off, weight)
    }
}

pub fn assemble_dirac_radial(p: &ProfileGrid, mode: &DiracMode) -> Result<RadialOperator, RadialError> {
    check_dimension(p, mode.n)?;
    let c = dirac_couplings(p, mode.mu);
    let m = c.size();
    let dim = 2 * m;
    let mut a = SymBand::zeros(dim, 1);
    let mut b = vec![0.0; dim];
    let mut points = vec![0.0; dim];
    for i in 0..m {
        // chain: midpoint i at 2i, node i+1 at 2i+1
        b[2 * i] = c.midpoint_weight[i];
        points[2 * i] = c.midpoints[i];
        b[2 * i + 1] = c.node_weight[i + 1];
        points[2 * i + 1] = p.t[i + 1];
        a.set(2 * i + 1, 2 * i, c.upper[i]);
        if i >= 1 {
            a.set(2 * i, 2 * i - 1, c.lower[i]);
        }
    }
    Ok(RadialOperator {
        kind: RadialKind::Dirac {
            k: mode.k,
            mu: mode.mu,
            convention: DiracConvention::NodeToMidpoint,
        },
        a,
        b,
        h: p.max_spacing(),
        domain: 0..p.node_count(),
        points,
        multiplicity: mode.radial_multiplicity(),
    })
}

/// One chirality block of the square of the full radial Dirac operator.
/// The node block's eigenvalues are exactly the squares of the chain's
/// positive eigenvalues.
pub fn assemble_dirac_squared(
    p: &ProfileGrid,
    mode: &DiracMode,
    chirality: Chirality,
) -> Result<RadialOperator, RadialError> {
    check_dimension(p, mode.n)?;
    let c = dirac_couplings(p, mode.mu);
    let last = c.size();
    let (diag, off, b, points) = match chirality {
        Chirality::Node => {
            let (d, o, w) = c.node_square(last);
            (d, o, w, p.t[1..=last].to_vec())
        }
        Chirality::Midpoint => {
            let (d, o, w) = c.midpoint_square(last - 1);
            (d, o, w, c.midpoints.clone())
        }
    };
    Ok(RadialOperator {
        kind: RadialKind::DiracSquared {
            k: mode.k,
            mu: mode.mu,
            chirality,
        },
        a: SymBand::from_tridiagonal(&diag, &off),
        b,
        h: p.max_spacing(),
        domain: 0..p.node_count(),
        points,
        multiplicity: mode.radial_multiplicity(),
    })
}

/// Operator selector for cap restrictions.
#[derive(Debug, Clone, Copy)]
pub enum CapOperator<'a> {
    Laplace(LaplaceMode),
    Yamabe(&'a CurvatureField, LaplaceMode),
    Dirac(DiracMode),
}

/// Restriction to trial functions supported in the body `[0, t_body]`,
/// Dirichlet at `t_body` in every component. Built only from body data (and,
/// for the Dirac midpoint block, the length of the first taper cell), so the
/// matrices are identical for every `(r, L)`.
///
/// Scalar operators give one block. The Dirac operator gives the two
/// chirality blocks of the compressed square `P D^2 P`, whose eigenvalues
/// bound the full `lambda^2` spectrum from above by min-max.
pub fn assemble_cap_dirichlet(op: CapOperator<'_>, p: &ProfileGrid) -> Result<Vec<RadialOperator>, RadialError> {
    let body = p.region(Region::Body).ok_or(RadialError::EmptyBody)?;
    if body.cells() < 2 {
        return Err(RadialError::EmptyBody);
    }
    let jb = body.last_node;
    let cap = |kind: RadialKind| RadialKind::CapRestriction(Box::new(kind));
    match op {
        CapOperator::Laplace(mode) | CapOperator::Yamabe(_, mode) => {
            let full = match op {
                CapOperator::Laplace(_) => assemble_laplace_radial(p, &mode)?,
                CapOperator::Yamabe(c, _) => assemble_yamabe_radial(p, c, &mode)?,
                CapOperator::Dirac(_) => unreachable!(),
            };
            // unknowns are nodes domain.start..jb, Dirichlet at jb
            let start = full.domain.start;
            let rows = 0..jb - start;
            Ok(vec![RadialOperator {
                kind: cap(full.kind.clone()),
                a: full.a.principal_submatrix(rows.clone()),
                b: full.b[rows.clone()].to_vec(),
                h: body_spacing(p, jb),
                domain: start..jb,
                points: full.points[rows].to_vec(),
                multiplicity: full.multiplicity,
            }])
        }
        CapOperator::Dirac(mode) => {
            check_dimension(p, mode.n)?;
            let c = dirac_couplings(p, mode.mu);
            let h = body_spacing(p, jb);
            let (nd, no, nw) = c.node_square(jb - 1);
            let (md, mo, mw) = c.midpoint_square(jb - 1);
            Ok(vec![
                RadialOperator {
                    kind: cap(RadialKind::DiracSquared {
                        k: mode.k,
                        mu: mode.mu,
                        chirality: Chirality::Node,
                    }),
                    a: SymBand::from_tridiagonal(&nd, &no),
                    b: nw,
                    h,
                    domain: 1..jb,
                    points: p.t[1..jb].to_vec(),
                    multiplicity: mode.radial_multiplicity(),
                },
                RadialOperator {
                    kind: cap(RadialKind::DiracSquared {
                        k: mode.k,
                        mu: mode.mu,
                        chirality: Chirality::Midpoint,
                    }),
                    a: SymBand::from_tridiagonal(&md, &mo),
                    b: mw,
                    h,
                    domain: 0..jb,
                    points: c.midpoints[..jb].to_vec(),
                    multiplicity: mode.radial_multiplicity(),
                },
            ])
        }
    }
}

fn body_spacing(p: &ProfileGrid, jb: usize) -> f64 {
    (0..jb).map(|i| p.spacing(i)).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eigensolve::{lowest_k_generalized, Selection, SymmetricPencil};
    use crate::geometry::scalar_curvature_field;
    use crate::profile::{build_pinocchio_profile, build_round_profile, ProfileSpec};

    fn lowest(op: &RadialOperator, k: usize) -> Vec<f64> {
        lowest_k_generalized(&op.a, &op.b, k, 1e-12).unwrap().values
    }

    #[test]
    fn laplace_round_three_sphere() {
        let p = build_round_profile(3, 1.0, 200).unwrap();
        let op0 = assemble_laplace_radial(&p, &LaplaceMode::new(3, 0)).unwrap();
        let v0 = lowest(&op0, 3);
        assert!(v0[0].abs() < 1e-8, "{v0:?}");
        assert!((v0[1] - 3.0).abs() < 1e-4);
        assert!((v0[2] - 8.0).abs() < 1e-3);
        let op1 = assemble_laplace_radial(&p, &LaplaceMode::new(3, 1)).unwrap();
        assert!((lowest(&op1, 1)[0] - 3.0).abs() < 1e-4);
    }

    #[test]
    fn constants_are_in_the_kernel() {
        let p = build_pinocchio_profile(&ProfileSpec::new(3, 0.2, 2.0)).unwrap();
        let op = assemble_laplace_radial(&p, &LaplaceMode::new(3, 0)).unwrap();
        let ones = vec![1.0; op.dim()];
        let a1 = op.a.matvec(&ones);
        let scale = op.a.inf_norm();
        assert!(a1.iter().all(|v| v.abs() <= 1e-13 * scale));
    }

    #[test]
    fn yamabe_round_three_sphere() {
        let p = build_round_profile(3, 1.0, 200).unwrap();
        let c = scalar_curvature_field(&p).unwrap();
        let y0 = assemble_yamabe_radial(&p, &c, &LaplaceMode::new(3, 0)).unwrap();
        assert!((lowest(&y0, 1)[0] - 6.0).abs() < 1e-6);
        let y1 = assemble_yamabe_radial(&p, &c, &LaplaceMode::new(3, 1)).unwrap();
        assert!((lowest(&y1, 1)[0] - 30.0).abs() < 1e-3);
    }

    #[test]
    fn yamabe_rejects_surfaces() {
        let p = build_round_profile(2, 1.0, 32).unwrap();
        let c = scalar_curvature_field(&p).unwrap();
        assert!(matches!(
            assemble_yamabe_radial(&p, &c, &LaplaceMode::new(2, 0)),
            Err(RadialError::YamabeDimension(2))
        ));
    }

    #[test]
    fn yamabe_mode_ordering_on_pinocchio() {
        let p = build_pinocchio_profile(&ProfileSpec::new(3, 0.1, 3.0)).unwrap();
        let c = scalar_curvature_field(&p).unwrap();
        let y0 = lowest(&assemble_yamabe_radial(&p, &c, &LaplaceMode::new(3, 0)).unwrap(), 1)[0];
        let y1 = lowest(&assemble_yamabe_radial(&p, &c, &LaplaceMode::new(3, 1)).unwrap(), 1)[0];
        assert!(y1 >= y0);
    }

    #[test]
    fn dirac_round_spheres() {
        let p = build_round_profile(3, 1.0, 200).unwrap();
        let op = assemble_dirac_radial(&p, &DiracMode::new(3, 0)).unwrap();
        let pencil = SymmetricPencil::new(op.a.clone(), op.b.clone()).unwrap();
        let zero = pencil.count_below(0.0);
        assert_eq!(zero, op.dim() / 2);
        let res = pencil.solve(Selection::Indices(zero - 1..zero + 1), 1e-12, false).unwrap();
        assert!((res.values[1] - 1.5).abs() < 1e-4, "{:?}", res.values);
        assert!((res.values[0] + 1.5).abs() < 1e-4);

        let p2 = build_round_profile(2, 1.0, 200).unwrap();
        let op2 = assemble_dirac_radial(&p2, &DiracMode::new(2, 0)).unwrap();
        let pencil2 = SymmetricPencil::new(op2.a.clone(), op2.b.clone()).unwrap();
        let z2 = pencil2.count_below(0.0);
        let v = pencil2.solve(Selection::Indices(z2..z2 + 1), 1e-12, false).unwrap();
        assert!((v.values[0] - 1.0).abs() < 1e-4);
    }

    #[test]
    fn dirac_chain_spectrum_is_symmetric() {
        let p = build_pinocchio_profile(&ProfileSpec::new(3, 0.2, 1.0).with_resolution(16)).unwrap();
        let op = assemble_dirac_radial(&p, &DiracMode::new(3, 1)).unwrap();
        assert!(op.a.diagonal().iter().all(|&d| d == 0.0));
        let pencil = SymmetricPencil::new(op.a.clone(), op.b.clone()).unwrap();
        let all = pencil.solve(Selection::Indices(0..op.dim()), 1e-14, false).unwrap().values;
        let n = all.len();
        for i in 0..n {
            assert!((all[i] + all[n - 1 - i]).abs() < 1e-9 * all[n - 1].abs());
        }
    }

    #[test]
    fn node_square_matches_chain_squared() {
        let p = build_round_profile(3, 1.0, 50).unwrap();
        let mode = DiracMode::new(3, 2);
        let chain = assemble_dirac_radial(&p, &mode).unwrap();
        let pencil = SymmetricPencil::new(chain.a.clone(), chain.b.clone()).unwrap();
        let z = pencil.count_below(0.0);
        let pos = pencil.solve(Selection::Indices(z..z + 4), 1e-13, false).unwrap().values;
        for chir in [Chirality::Node, Chirality::Midpoint] {
            let sq = assemble_dirac_squared(&p, &mode, chir).unwrap();
            let vals = lowest(&sq, 4);
            for (l, s) in pos.iter().zip(&vals) {
                assert!((l * l - s).abs() < 1e-8 * s, "{l} {s}");
            }
        }
    }

    #[test]
    fn operators_are_exactly_symmetric() {
        let p = build_pinocchio_profile(&ProfileSpec::new(4, 0.3, 1.0).with_resolution(16)).unwrap();
        let c = scalar_curvature_field(&p).unwrap();
        let ops = vec![
            assemble_laplace_radial(&p, &LaplaceMode::new(4, 2)).unwrap(),
            assemble_yamabe_radial(&p, &c, &LaplaceMode::new(4, 0)).unwrap(),
            assemble_dirac_radial(&p, &DiracMode::new(4, 1)).unwrap(),
        ];
        for op in ops {
            let d = op.a.to_dense();
            let mut defect = 0.0f64;
            for i in 0..d.len() {
                for j in 0..d.len() {
                    defect = defect.max((d[i][j] - d[j][i]).abs());
                }
            }
            assert_eq!(defect, 0.0);
            assert!(op.b.iter().all(|&w| w > 0.0));
            assert!(op.a.effective_bandwidth() <= 2);
        }
    }

    #[test]
    fn cap_matrices_identical_across_parameters() {
        let a = build_pinocchio_profile(&ProfileSpec::new(3, 0.1, 1.0)).unwrap();
        let b = build_pinocchio_profile(&ProfileSpec::new(3, 0.5, 100.0)).unwrap();
        let mode = DiracMode::new(3, 0);
        let ca = assemble_cap_dirichlet(CapOperator::Dirac(mode), &a).unwrap();
        let cb = assemble_cap_dirichlet(CapOperator::Dirac(mode), &b).unwrap();
        assert_eq!(ca, cb);
        let la = assemble_cap_dirichlet(CapOperator::Laplace(LaplaceMode::new(3, 0)), &a).unwrap();
        let lb = assemble_cap_dirichlet(CapOperator::Laplace(LaplaceMode::new(3, 0)), &b).unwrap();
        assert_eq!(la, lb);
    }

    #[test]
    fn laplace_cap_dominates_full_profile() {
        let p = build_pinocchio_profile(&ProfileSpec::new(3, 0.2, 2.0)).unwrap();
        for ell in 0..3 {
            let mode = LaplaceMode::new(3, ell);
            let full = lowest(&assemble_laplace_radial(&p, &mode).unwrap(), 4);
            let cap = &assemble_cap_dirichlet(CapOperator::Laplace(mode), &p).unwrap()[0];
            let capv = lowest(cap, 4);
            if ell == 0 {
                assert!(capv[0] > 0.0);
            }
            for (c, f) in capv.iter().zip(&full) {
                assert!(c >= f, "ell {ell}: cap {c} < full {f}");
            }
        }
    }

    #[test]
    fn coordinate_dump_lists_entries() {
        let p = build_round_profile(3, 1.0, 16).unwrap();
        let op = assemble_laplace_radial(&p, &LaplaceMode::new(3, 1)).unwrap();
        let text = op.to_coordinate_text();
        assert!(text.starts_with("% A\n0 0 "));
        assert_eq!(text.lines().filter(|l| !l.starts_with('%')).count(), 2 * op.dim() - 1 + op.dim());
    }

    #[test]
    fn mode_dimension_mismatch() {
        let p = build_round_profile(3, 1.0, 16).unwrap();
        assert!(matches!(
            assemble_laplace_radial(&p, &LaplaceMode::new(4, 0)),
            Err(RadialError::DimensionMismatch { .. })
        ));
    }
}
