//! Symmetric banded storage and Givens band-to-tridiagonal reduction.

use std::ops::Range;

use super::tridiagonal::Tridiagonal;

/// Symmetric matrix stored by its lower bands: `bands[d][i] = A[i + d][i]`.
///
/// Only one triangle is stored, so the represented matrix is exactly
/// symmetric regardless of how it was assembled.
#[derive(Debug, Clone, PartialEq)]
pub struct SymBand {
    dim: usize,
    bands: Vec<Vec<f64>>,
}

impl SymBand {
    pub fn zeros(dim: usize, bandwidth: usize) -> Self {
        let bands = (0..=bandwidth)
            .map(|d| vec![0.0; dim.saturating_sub(d)])
            .collect();
        Self { dim, bands }
    }

    pub fn from_tridiagonal(diag: &[f64], off: &[f64]) -> Self {
        assert_eq!(off.len() + 1, diag.len().max(1), "off-diagonal length must be dim - 1");
        Self {
            dim: diag.len(),
            bands: vec![diag.to_vec(), off.to_vec()],
        }
    }

    /// Builds from a dense row-major square matrix, reading the lower triangle.
    pub fn from_dense_lower(a: &[Vec<f64>], bandwidth: usize) -> Self {
        let dim = a.len();
        let mut out = Self::zeros(dim, bandwidth);
        for d in 0..=bandwidth.min(dim.saturating_sub(1)) {
            for i in 0..dim - d {
                out.bands[d][i] = a[i + d][i];
            }
        }
        out
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Storage bandwidth (number of stored sub-diagonals).
    pub fn bandwidth(&self) -> usize {
        self.bands.len() - 1
    }

    /// Largest sub-diagonal index holding a nonzero entry.
    pub fn effective_bandwidth(&self) -> usize {
        (1..self.bands.len())
            .rev()
            .find(|&d| self.bands[d].iter().any(|&v| v != 0.0))
            .unwrap_or(0)
    }

    /// `d`-th sub-diagonal, `band(d)[i] = A[i + d][i]`.
    pub fn band(&self, d: usize) -> &[f64] {
        &self.bands[d]
    }

    pub fn diagonal(&self) -> &[f64] {
        &self.bands[0]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (row, col) = if i >= j { (i, j) } else { (j, i) };
        let d = row - col;
        if d >= self.bands.len() {
            0.0
        } else {
            self.bands[d][col]
        }
    }

    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        let (row, col) = if i >= j { (i, j) } else { (j, i) };
        let d = row - col;
        assert!(d < self.bands.len(), "entry ({i}, {j}) outside band");
        self.bands[d][col] = value;
    }

    pub fn add(&mut self, i: usize, j: usize, value: f64) {
        let (row, col) = if i >= j { (i, j) } else { (j, i) };
        let d = row - col;
        assert!(d < self.bands.len(), "entry ({i}, {j}) outside band");
        self.bands[d][col] += value;
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.dim);
        let mut y: Vec<f64> = self.bands[0].iter().zip(x).map(|(a, v)| a * v).collect();
        for (d, band) in self.bands.iter().enumerate().skip(1) {
            for (i, &a) in band.iter().enumerate() {
                y[i + d] += a * x[i];
                y[i] += a * x[i + d];
            }
        }
        y
    }

    /// Maximum absolute row sum.
    pub fn inf_norm(&self) -> f64 {
        let mut rows = vec![0.0; self.dim];
        for (d, band) in self.bands.iter().enumerate() {
            for (i, &a) in band.iter().enumerate() {
                rows[i + d] += a.abs();
                if d > 0 {
                    rows[i] += a.abs();
                }
            }
        }
        rows.into_iter().fold(0.0, f64::max)
    }

    /// `diag(s) * A * diag(s)`.
    pub fn scaled_symmetric(&self, s: &[f64]) -> Self {
        assert_eq!(s.len(), self.dim);
        let bands = self
            .bands
            .iter()
            .enumerate()
            .map(|(d, band)| {
                band.iter()
                    .enumerate()
                    .map(|(i, &a)| s[i + d] * a * s[i])
                    .collect()
            })
            .collect();
        Self {
            dim: self.dim,
            bands,
        }
    }

    pub fn principal_submatrix(&self, range: Range<usize>) -> Self {
        assert!(range.end <= self.dim);
        let dim = range.len();
        let bands = self
            .bands
            .iter()
            .enumerate()
            .map(|(d, band)| {
                (0..dim.saturating_sub(d))
                    .map(|i| band[range.start + i])
                    .collect()
            })
            .collect();
        Self { dim, bands }
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut out = vec![vec![0.0; self.dim]; self.dim];
        for (d, band) in self.bands.iter().enumerate() {
            for (i, &a) in band.iter().enumerate() {
                out[i + d][i] = a;
                out[i][i + d] = a;
            }
        }
        out
    }

    /// Lower-triangle entries `(row, col, value)` for `row >= col`, row-major.
    pub fn coordinate_entries(&self) -> Vec<(usize, usize, f64)> {
        let mut out = Vec::new();
        for row in 0..self.dim {
            for d in (0..self.bands.len()).rev() {
                if d <= row {
                    out.push((row, row - d, self.bands[d][row - d]));
                }
            }
        }
        out
    }
}

/// Plane rotation acting on coordinates `(plane, plane + 1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rotation {
    pub plane: usize,
    pub c: f64,
    pub s: f64,
}

impl Rotation {
    /// Applies `G` to a vector: `(x_p, x_q) <- (c x_p + s x_q, -s x_p + c x_q)`.
    pub fn apply(&self, x: &mut [f64]) {
        let (p, q) = (self.plane, self.plane + 1);
        let (a, b) = (x[p], x[q]);
        x[p] = self.c * a + self.s * b;
        x[q] = -self.s * a + self.c * b;
    }

    /// Applies `G^T` to a vector.
    pub fn apply_transpose(&self, x: &mut [f64]) {
        let (p, q) = (self.plane, self.plane + 1);
        let (a, b) = (x[p], x[q]);
        x[p] = self.c * a - self.s * b;
        x[q] = self.s * a + self.c * b;
    }
}

/// Result of reducing a banded matrix `A` to `T = Q A Q^T`.
#[derive(Debug, Clone)]
pub struct BandReduction {
    pub tridiagonal: Tridiagonal,
    /// Rotations in application order; `Q = G_m ... G_1`.
    pub rotations: Vec<Rotation>,
    /// Accumulated `sum |c^2 + s^2 - 1|`, a first-order bound on `||Q^T Q - I||`.
    pub orthogonality_defect: f64,
}

impl BandReduction {
    /// Maps an eigenvector of the tridiagonal back to one of the input matrix.
    pub fn back_transform(&self, x: &mut [f64]) {
        for rot in self.rotations.iter().rev() {
            rot.apply_transpose(x);
        }
    }
}

/// Working storage with one extra band to hold the bulge during chasing.
struct BulgeBand {
    inner: SymBand,
}

impl BulgeBand {
    fn rotate(&mut self, rot: Rotation) {
        let n = self.inner.dim;
        let reach = self.inner.bandwidth();
        let (p, q) = (rot.plane, rot.plane + 1);
        let (c, s) = (rot.c, rot.s);
        let lo = p.saturating_sub(reach);
        let hi = (q + reach).min(n - 1);
        for j in lo..=hi {
            if j == p || j == q {
                continue;
            }
            let stores_p = p.abs_diff(j) <= reach;
            let stores_q = q.abs_diff(j) <= reach;
            let a = if stores_p { self.inner.get(p, j) } else { 0.0 };
            let b = if stores_q { self.inner.get(q, j) } else { 0.0 };
            if a == 0.0 && b == 0.0 {
                continue;
            }
            let new_p = c * a + s * b;
            let new_q = -s * a + c * b;
            if stores_p {
                self.inner.set(p, j, new_p);
            } else {
                debug_assert!(new_p.abs() <= 1e-300, "fill outside bulge band");
            }
            if stores_q {
                self.inner.set(q, j, new_q);
            } else {
                debug_assert!(new_q.abs() <= 1e-300, "fill outside bulge band");
            }
        }
        let app = self.inner.get(p, p);
        let aqq = self.inner.get(q, q);
        let apq = self.inner.get(p, q);
        self.inner
            .set(p, p, c * c * app + 2.0 * c * s * apq + s * s * aqq);
        self.inner
            .set(q, q, s * s * app - 2.0 * c * s * apq + c * c * aqq);
        self.inner
            .set(p, q, c * s * (aqq - app) + (c * c - s * s) * apq);
    }

    /// Rotation in plane `(row - 1, row)` that annihilates `(row, col)`.
    fn annihilate(&mut self, row: usize, col: usize) -> Option<Rotation> {
        let y = self.inner.get(row, col);
        if y == 0.0 {
            return None;
        }
        let x = self.inner.get(row - 1, col);
        let r = x.hypot(y);
        let rot = Rotation {
            plane: row - 1,
            c: x / r,
            s: y / r,
        };
        self.rotate(rot);
        // The rotation zeroes the target analytically; pin it so rounding
        // does not leave a residue outside the tridiagonal band.
        self.inner.set(row, col, 0.0);
        self.inner.set(row - 1, col, r);
        Some(rot)
    }
}

/// Reduces a symmetric banded matrix to tridiagonal form with Givens
/// rotations and bulge chasing. Matrices already of bandwidth <= 1 are
/// returned unchanged.
pub fn reduce_band_to_tridiagonal(a: &SymBand) -> BandReduction {
    let n = a.dim();
    let bw = a.effective_bandwidth();
    if bw <= 1 || n <= 2 {
        let off = if a.bandwidth() >= 1 {
            a.band(1).to_vec()
        } else {
            vec![0.0; n.saturating_sub(1)]
        };
        return BandReduction {
            tridiagonal: Tridiagonal::new(a.diagonal().to_vec(), off),
            rotations: Vec::new(),
            orthogonality_defect: 0.0,
        };
    }

    let mut work = BulgeBand {
        inner: SymBand::zeros(n, bw + 1),
    };
    for d in 0..=bw {
        work.inner.bands[d].copy_from_slice(&a.bands[d]);
    }

    let mut rotations = Vec::new();
    for k in 0..n - 2 {
        for l in (2..=bw).rev() {
            let q = k + l;
            if q >= n {
                continue;
            }
            let Some(rot) = work.annihilate(q, k) else {
                continue;
            };
            rotations.push(rot);
            // bulge at (q + bw, q - 1); chase it off the end
            let mut col = q - 1;
            let mut row = q + bw;
            while row < n {
                if let Some(rot) = work.annihilate(row, col) {
                    rotations.push(rot);
                }
                col = row - 1;
                row += bw;
            }
        }
    }

    let orthogonality_defect = rotations
        .iter()
        .map(|r| (r.c * r.c + r.s * r.s - 1.0).abs())
        .sum();
    let tridiagonal = Tridiagonal::new(work.inner.bands[0].clone(), work.inner.bands[1].clone());
    BandReduction {
        tridiagonal,
        rotations,
        orthogonality_defect,
    }
}
