//! Generalized problems `A v = lambda B v` with positive diagonal `B`.

use super::band::{reduce_band_to_tridiagonal, BandReduction, SymBand};
use super::tridiagonal::{norm2, EigenResult, Selection, SolverStats, Tridiagonal};
use super::EigenError;

/// A pencil `(A, diag(B))` reduced once to `T = Q B^{-1/2} A B^{-1/2} Q^T`,
/// after which Sturm counts and eigenpairs are cheap to query repeatedly.
#[derive(Debug, Clone)]
pub struct SymmetricPencil {
    a: SymBand,
    weight: Vec<f64>,
    inv_sqrt_weight: Vec<f64>,
    reduction: BandReduction,
    scaled_norm: f64,
}

impl SymmetricPencil {
    pub fn new(a: SymBand, weight: Vec<f64>) -> Result<Self, EigenError> {
        if a.dim() != weight.len() {
            return Err(EigenError::DimensionMismatch {
                matrix: a.dim(),
                weight: weight.len(),
            });
        }
        if let Some((index, &value)) = weight
            .iter()
            .enumerate()
            .find(|(_, &w)| !(w > 0.0 && w.is_finite()))
        {
            return Err(EigenError::NonPositiveWeight { index, value });
        }
        let inv_sqrt_weight: Vec<f64> = weight.iter().map(|w| 1.0 / w.sqrt()).collect();
        let scaled = a.scaled_symmetric(&inv_sqrt_weight);
        let scaled_norm = scaled.inf_norm();
        let reduction = reduce_band_to_tridiagonal(&scaled);
        Ok(Self {
            a,
            weight,
            inv_sqrt_weight,
            reduction,
            scaled_norm,
        })
    }

    pub fn dim(&self) -> usize {
        self.weight.len()
    }

    pub fn tridiagonal(&self) -> &Tridiagonal {
        &self.reduction.tridiagonal
    }

    pub fn matrix(&self) -> &SymBand {
        &self.a
    }

    pub fn weight(&self) -> &[f64] {
        &self.weight
    }

    /// `||B^{-1/2} A B^{-1/2}||_inf`, the scale for residuals and tolerances.
    pub fn scaled_norm(&self) -> f64 {
        self.scaled_norm
    }

    pub fn orthogonality_defect(&self) -> f64 {
        self.reduction.orthogonality_defect
    }

    /// Number of generalized eigenvalues strictly below `sigma`.
    pub fn count_below(&self, sigma: f64) -> usize {
        self.reduction.tridiagonal.sturm_count(sigma)
    }

    /// Eigenvalues with residuals checked against the original pencil:
    /// `||B^{-1/2}(A v - lambda B v)|| / (||B^{1/2} v|| max(1, ||B^{-1/2} A B^{-1/2}||))`.
    /// Vectors, when requested, are in the original coordinates and
    /// normalized so that `v^T B v = 1`.
    pub fn solve(
        &self,
        which: Selection,
        tol: f64,
        want_vectors: bool,
    ) -> Result<EigenResult, EigenError> {
        let t = &self.reduction.tridiagonal;
        let mut stats = SolverStats::default();
        let range = t.selection_indices(&which, &mut stats);
        let mut values = Vec::with_capacity(range.len());
        let mut residuals = Vec::with_capacity(range.len());
        let mut vectors = want_vectors.then(Vec::new);
        let scale = self.scaled_norm.max(1.0);
        for index in range {
            let lambda = t.bisect_eigenvalue(index, tol, &mut stats);
            let mut x = t.inverse_iteration(lambda, &mut stats);
            self.reduction.back_transform(&mut x);
            let v: Vec<f64> = x
                .iter()
                .zip(&self.inv_sqrt_weight)
                .map(|(xi, s)| xi * s)
                .collect();
            let av = self.a.matvec(&v);
            let r: Vec<f64> = av
                .iter()
                .zip(&v)
                .zip(&self.weight)
                .zip(&self.inv_sqrt_weight)
                .map(|(((a, vi), b), s)| (a - lambda * b * vi) * s)
                .collect();
            let bnorm = v
                .iter()
                .zip(&self.weight)
                .map(|(vi, b)| vi * vi * b)
                .sum::<f64>()
                .sqrt();
            let residual = norm2(&r) / (bnorm * scale);
            if !(residual <= tol.max(64.0 * f64::EPSILON)) {
                return Err(EigenError::ResidualTooLarge {
                    index,
                    value: lambda,
                    residual,
                    tol,
                });
            }
            values.push(lambda);
            residuals.push(residual);
            if let Some(vs) = vectors.as_mut() {
                vs.push(v.iter().map(|vi| vi / bnorm).collect());
            }
        }
        Ok(EigenResult {
            values,
            residuals,
            vectors,
            stats,
        })
    }
}

/// The `k` smallest generalized eigenvalues of `(A, diag(B))`.
pub fn lowest_k_generalized(
    a: &SymBand,
    b: &[f64],
    k: usize,
    tol: f64,
) -> Result<EigenResult, EigenError> {
    let pencil = SymmetricPencil::new(a.clone(), b.to_vec())?;
    pencil.solve(Selection::Indices(0..k.min(pencil.dim())), tol, false)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eigensolve::tridiag_eigen_bisection;

    #[test]
    fn identity_weight_matches_tridiagonal_path() {
        let diag = vec![2.0, 1.0, 3.0, -1.0];
        let off = vec![0.5, -0.2, 0.9];
        let a = SymBand::from_tridiagonal(&diag, &off);
        let gen = lowest_k_generalized(&a, &[1.0; 4], 4, 1e-13).unwrap();
        let plain =
            tridiag_eigen_bisection(&Tridiagonal::new(diag, off), Selection::Indices(0..4), 1e-13);
        assert_eq!(gen.values, plain.values);
    }

    #[test]
    fn a_equal_b_gives_unit_eigenvalues() {
        let b = vec![0.3, 2.0, 5.0, 1.5, 0.01];
        let mut a = SymBand::zeros(5, 1);
        for (i, &w) in b.iter().enumerate() {
            a.set(i, i, w);
        }
        let res = lowest_k_generalized(&a, &b, 5, 1e-12).unwrap();
        for v in res.values {
            assert!((v - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn non_positive_weight_rejected() {
        let a = SymBand::from_tridiagonal(&[1.0, 1.0], &[0.0]);
        let err = lowest_k_generalized(&a, &[1.0, 0.0], 1, 1e-10).unwrap_err();
        assert!(matches!(err, EigenError::NonPositiveWeight { index: 1, .. }));
        let err = lowest_k_generalized(&a, &[1.0], 1, 1e-10).unwrap_err();
        assert!(matches!(err, EigenError::DimensionMismatch { .. }));
    }

    #[test]
    fn vectors_are_b_normalized_eigenvectors() {
        let mut a = SymBand::zeros(6, 2);
        for i in 0..6 {
            a.set(i, i, 3.0 + i as f64);
            if i >= 1 {
                a.set(i, i - 1, -1.0);
            }
            if i >= 2 {
                a.set(i, i - 2, 0.25);
            }
        }
        let b = vec![1.0, 2.0, 0.5, 1.5, 1.0, 3.0];
        let pencil = SymmetricPencil::new(a.clone(), b.clone()).unwrap();
        let res = pencil.solve(Selection::Indices(0..3), 1e-12, true).unwrap();
        for (lambda, v) in res.values.iter().zip(res.vectors.unwrap()) {
            let av = a.matvec(&v);
            let vbv: f64 = v.iter().zip(&b).map(|(x, w)| x * x * w).sum();
            assert!((vbv - 1.0).abs() < 1e-12);
            for i in 0..6 {
                assert!((av[i] - lambda * b[i] * v[i]).abs() < 1e-10);
            }
        }
    }
}
