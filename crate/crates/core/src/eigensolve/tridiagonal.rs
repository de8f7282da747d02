//! Sturm-sequence bisection and inverse iteration for symmetric tridiagonal matrices.

use std::ops::Range;

/// Symmetric tridiagonal matrix: `diag[i]` and `off[i] = T[i + 1][i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Tridiagonal {
    pub diag: Vec<f64>,
    pub off: Vec<f64>,
}

/// Which eigenvalues to compute.
#[derive(Debug, Clone, PartialEq)]
pub enum Selection {
    /// Ascending indices (0-based).
    Indices(Range<usize>),
    /// All eigenvalues in the half-open interval `[lower, upper)`.
    Interval { lower: f64, upper: f64 },
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SolverStats {
    pub sturm_counts: usize,
    pub bisection_steps: usize,
    pub inverse_iterations: usize,
    /// Shifts at which a later Sturm count came out smaller than an earlier
    /// one at a smaller shift. Always zero for a well-posed input.
    pub monotonicity_violations: usize,
}

impl SolverStats {
    pub fn merge(&mut self, other: &SolverStats) {
        self.sturm_counts += other.sturm_counts;
        self.bisection_steps += other.bisection_steps;
        self.inverse_iterations += other.inverse_iterations;
        self.monotonicity_violations += other.monotonicity_violations;
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EigenResult {
    /// Ascending.
    pub values: Vec<f64>,
    /// Scaled residual per value.
    pub residuals: Vec<f64>,
    /// Unit eigenvectors, present when requested.
    pub vectors: Option<Vec<Vec<f64>>>,
    pub stats: SolverStats,
}

impl EigenResult {
    pub fn empty() -> Self {
        Self {
            values: Vec::new(),
            residuals: Vec::new(),
            vectors: None,
            stats: SolverStats::default(),
        }
    }

    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().copied().fold(0.0, f64::max)
    }
}

impl Tridiagonal {
    pub fn new(diag: Vec<f64>, off: Vec<f64>) -> Self {
        assert_eq!(
            off.len(),
            diag.len().saturating_sub(1),
            "off-diagonal length must be dim - 1"
        );
        Self { diag, off }
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    /// Gershgorin enclosure of the spectrum.
    pub fn gershgorin(&self) -> (f64, f64) {
        let n = self.dim();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            let left = if i > 0 { self.off[i - 1].abs() } else { 0.0 };
            let right = if i + 1 < n { self.off[i].abs() } else { 0.0 };
            lo = lo.min(self.diag[i] - left - right);
            hi = hi.max(self.diag[i] + left + right);
        }
        (lo, hi)
    }

    pub fn inf_norm(&self) -> f64 {
        let (lo, hi) = self.gershgorin();
        lo.abs().max(hi.abs())
    }

    fn pivot_floor(&self) -> f64 {
        let emax = self.off.iter().map(|e| e * e).fold(1.0, f64::max);
        f64::MIN_POSITIVE * emax
    }

    /// Number of eigenvalues strictly below `sigma` (negative LDL^T pivots).
    pub fn sturm_count(&self, sigma: f64) -> usize {
        let n = self.dim();
        if n == 0 {
            return 0;
        }
        let pivmin = self.pivot_floor();
        let mut count = 0;
        let mut q = self.diag[0] - sigma;
        if q.abs() < pivmin {
            q = -pivmin;
        }
        if q < 0.0 {
            count += 1;
        }
        for i in 1..n {
            let e = self.off[i - 1];
            q = (self.diag[i] - sigma) - e * e / q;
            if q.abs() < pivmin {
                q = -pivmin;
            }
            if q < 0.0 {
                count += 1;
            }
        }
        count
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let n = self.dim();
        let mut y: Vec<f64> = self.diag.iter().zip(x).map(|(d, v)| d * v).collect();
        for i in 0..n.saturating_sub(1) {
            y[i] += self.off[i] * x[i + 1];
            y[i + 1] += self.off[i] * x[i];
        }
        y
    }

    /// Resolves a selection into an index range using Sturm counts.
    pub fn selection_indices(&self, which: &Selection, stats: &mut SolverStats) -> Range<usize> {
        match which {
            Selection::Indices(r) => r.start.min(self.dim())..r.end.min(self.dim()),
            Selection::Interval { lower, upper } => {
                if !(lower < upper) {
                    return 0..0;
                }
                stats.sturm_counts += 2;
                let a = self.sturm_count(*lower);
                let b = self.sturm_count(*upper);
                if b < a {
                    stats.monotonicity_violations += 1;
                    return a..a;
                }
                a..b
            }
        }
    }

    /// Bisection for the `index`-th smallest eigenvalue, starting from the
    /// global Gershgorin bracket so the answer does not depend on which other
    /// eigenvalues are requested alongside it.
    pub fn bisect_eigenvalue(&self, index: usize, tol: f64, stats: &mut SolverStats) -> f64 {
        let (g_lo, g_hi) = self.gershgorin();
        let pad = 2.0 * f64::EPSILON * g_lo.abs().max(g_hi.abs()) + self.pivot_floor();
        let mut lo = g_lo - pad;
        let mut hi = g_hi + pad;
        let mut count_lo = 0usize;
        let mut count_hi = self.dim();
        loop {
            let width = hi - lo;
            let scale = lo.abs().max(hi.abs()).max(1.0);
            if width <= tol * scale {
                break;
            }
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            stats.bisection_steps += 1;
            stats.sturm_counts += 1;
            let c = self.sturm_count(mid);
            if c < count_lo || c > count_hi {
                stats.monotonicity_violations += 1;
            }
            if c <= index {
                lo = mid;
                count_lo = c;
            } else {
                hi = mid;
                count_hi = c;
            }
        }
        0.5 * (lo + hi)
    }

    /// Solves `(T - shift I) x = rhs` by Gaussian elimination with partial
    /// pivoting. Exact zero pivots are replaced by a tiny perturbation, which
    /// is what inverse iteration wants.
    pub fn solve_shifted(&self, shift: f64, rhs: &[f64]) -> Vec<f64> {
        let n = self.dim();
        let mut b = rhs.to_vec();
        if n == 0 {
            return b;
        }
        let tiny = f64::EPSILON * self.inf_norm().max(f64::MIN_POSITIVE);
        let mut d: Vec<f64> = self.diag.iter().map(|v| v - shift).collect();
        if n == 1 {
            if d[0] == 0.0 {
                d[0] = tiny;
            }
            b[0] /= d[0];
            return b;
        }
        let mut dl = self.off.clone();
        let mut du = self.off.clone();
        let mut du2 = vec![0.0; n.saturating_sub(2)];
        let mut swapped = vec![false; n - 1];
        for i in 0..n - 1 {
            if d[i].abs() >= dl[i].abs() {
                if d[i] == 0.0 {
                    d[i] = tiny;
                }
                let fact = dl[i] / d[i];
                dl[i] = fact;
                d[i + 1] -= fact * du[i];
            } else {
                let fact = d[i] / dl[i];
                d[i] = dl[i];
                dl[i] = fact;
                let temp = du[i];
                du[i] = d[i + 1];
                d[i + 1] = temp - fact * d[i + 1];
                if i + 2 < n {
                    du2[i] = du[i + 1];
                    du[i + 1] *= -fact;
                }
                swapped[i] = true;
            }
        }
        if d[n - 1] == 0.0 {
            d[n - 1] = tiny;
        }
        for i in 0..n - 1 {
            if swapped[i] {
                let temp = b[i];
                b[i] = b[i + 1];
                b[i + 1] = temp - dl[i] * b[i];
            } else {
                b[i + 1] -= dl[i] * b[i];
            }
        }
        b[n - 1] /= d[n - 1];
        b[n - 2] = (b[n - 2] - du[n - 2] * b[n - 1]) / d[n - 2];
        for i in (0..n.saturating_sub(2)).rev() {
            b[i] = (b[i] - du[i] * b[i + 1] - du2[i] * b[i + 2]) / d[i];
        }
        b
    }

    /// Unit eigenvector for a converged eigenvalue by inverse iteration.
    pub fn inverse_iteration(&self, lambda: f64, stats: &mut SolverStats) -> Vec<f64> {
        let n = self.dim();
        let mut x: Vec<f64> = (0..n).map(|i| 1.0 + 0.01 * ((i * 7919) % 13) as f64).collect();
        normalize(&mut x);
        for _ in 0..3 {
            stats.inverse_iterations += 1;
            x = self.solve_shifted(lambda, &x);
            if x.iter().any(|v| !v.is_finite()) {
                x = vec![1.0; n];
            }
            normalize(&mut x);
        }
        x
    }
}

pub(crate) fn normalize(x: &mut [f64]) {
    let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm > 0.0 {
        x.iter_mut().for_each(|v| *v /= norm);
    }
}

pub(crate) fn norm2(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Eigenvalues of a symmetric tridiagonal matrix by Sturm bisection, with
/// inverse-iteration residuals `||T x - lambda x|| / (||x|| max(1, ||T||))`.
pub fn tridiag_eigen_bisection(t: &Tridiagonal, which: Selection, tol: f64) -> EigenResult {
    let mut stats = SolverStats::default();
    let range = t.selection_indices(&which, &mut stats);
    if range.is_empty() {
        return EigenResult {
            stats,
            ..EigenResult::empty()
        };
    }
    let scale = t.inf_norm().max(1.0);
    let mut values = Vec::with_capacity(range.len());
    let mut residuals = Vec::with_capacity(range.len());
    for index in range {
        let lambda = t.bisect_eigenvalue(index, tol, &mut stats);
        let x = t.inverse_iteration(lambda, &mut stats);
        let tx = t.matvec(&x);
        let r: Vec<f64> = tx.iter().zip(&x).map(|(a, b)| a - lambda * b).collect();
        values.push(lambda);
        residuals.push(norm2(&r) / scale);
    }
    EigenResult {
        values,
        residuals,
        vectors: None,
        stats,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_by_two_closed_form() {
        let t = Tridiagonal::new(vec![2.0, 2.0], vec![-1.0]);
        let res = tridiag_eigen_bisection(&t, Selection::Indices(0..2), 1e-14);
        assert!((res.values[0] - 1.0).abs() < 1e-13);
        assert!((res.values[1] - 3.0).abs() < 1e-13);
        assert!(res.max_residual() < 1e-12);
    }

    #[test]
    fn one_by_one() {
        let t = Tridiagonal::new(vec![5.0], vec![]);
        let res = tridiag_eigen_bisection(&t, Selection::Indices(0..1), 1e-14);
        assert!((res.values[0] - 5.0).abs() < 1e-13);
    }

    #[test]
    fn dirichlet_laplacian_closed_form() {
        // interior nodes of [0, pi] with m cells
        let m = 400;
        let h = std::f64::consts::PI / m as f64;
        let n = m - 1;
        let t = Tridiagonal::new(vec![2.0 / (h * h); n], vec![-1.0 / (h * h); n - 1]);
        let res = tridiag_eigen_bisection(&t, Selection::Indices(0..5), 1e-14);
        for (k, &v) in res.values.iter().enumerate() {
            let kk = (k + 1) as f64;
            let exact = 2.0 / (h * h) * (1.0 - (kk * h).cos());
            assert!((v - exact).abs() < 1e-9 * exact, "{v} vs {exact}");
            assert!((v - kk * kk).abs() < 1e-3 * kk * kk);
        }
    }

    #[test]
    fn empty_interval_is_not_an_error() {
        let t = Tridiagonal::new(vec![2.0, 2.0], vec![-1.0]);
        let res = tridiag_eigen_bisection(&t, Selection::Interval { lower: 1.5, upper: 2.5 }, 1e-12);
        assert!(res.values.is_empty());
        let res = tridiag_eigen_bisection(&t, Selection::Interval { lower: 4.0, upper: 3.0 }, 1e-12);
        assert!(res.values.is_empty());
    }

    #[test]
    fn interval_partition_matches_union() {
        let n = 60;
        let diag: Vec<f64> = (0..n).map(|i| (i as f64 * 0.37).sin() * 3.0).collect();
        let off: Vec<f64> = (0..n - 1).map(|i| 0.5 + (i as f64 * 0.11).cos()).collect();
        let t = Tridiagonal::new(diag, off);
        let whole = tridiag_eigen_bisection(&t, Selection::Interval { lower: -2.0, upper: 2.0 }, 1e-13);
        let mut parts = tridiag_eigen_bisection(&t, Selection::Interval { lower: -2.0, upper: 0.3 }, 1e-13).values;
        parts.extend(tridiag_eigen_bisection(&t, Selection::Interval { lower: 0.3, upper: 2.0 }, 1e-13).values);
        assert_eq!(whole.values, parts);
    }

    #[test]
    fn shifted_solve_matches_matvec() {
        let t = Tridiagonal::new(vec![1.0, -3.0, 0.5, 2.0], vec![4.0, 0.1, -2.0]);
        let x = vec![1.0, 2.0, -1.0, 0.5];
        let mut b = t.matvec(&x);
        for (bi, xi) in b.iter_mut().zip(&x) {
            *bi -= 0.7 * xi;
        }
        let y = t.solve_shifted(0.7, &b);
        for (u, v) in x.iter().zip(&y) {
            assert!((u - v).abs() < 1e-12);
        }
    }
}
