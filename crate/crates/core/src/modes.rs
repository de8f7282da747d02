//! Angular modes on the fiber `S^{n-1}(1)`: spherical-harmonic Laplace
//! eigenvalues and Dirac eigenvalue magnitudes, with multiplicities.

use serde::{Deserialize, Serialize};

/// Binomial coefficient, zero when `k > a`.
pub fn binomial(a: u64, k: u64) -> u64 {
    if k > a {
        return 0;
    }
    let k = k.min(a - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (a - i) as u128 / (i + 1) as u128;
    }
    acc as u64
}

/// Binomial with a possibly negative top argument (returns 0 then).
fn binomial_signed(a: i64, k: u64) -> u64 {
    if a < 0 {
        0
    } else {
        binomial(a as u64, k)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LaplaceMode {
    /// Sphere dimension of the total space.
    pub n: usize,
    pub ell: usize,
    /// `ell (ell + n - 2)`.
    pub value: f64,
    pub mult: u64,
}

impl LaplaceMode {
    pub fn new(n: usize, ell: usize) -> Self {
        let (nn, l) = (n as i64, ell as i64);
        let mult = binomial_signed(l + nn - 1, (n - 1) as u64) - binomial_signed(l + nn - 3, (n - 1) as u64);
        Self {
            n,
            ell,
            value: (ell * (ell + n - 2)) as f64,
            mult,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiracMode {
    pub n: usize,
    pub k: usize,
    /// `(n-1)/2 + k`.
    pub mu: f64,
    /// Fiber eigenspinors per sign of the fiber eigenvalue,
    /// `2^{floor((n-1)/2)} C(k+n-2, k)`.
    pub mult: u64,
}

impl DiracMode {
    pub fn new(n: usize, k: usize) -> Self {
        let mult = (1u64 << ((n - 1) / 2)) * binomial((k + n - 2) as u64, k as u64);
        Self {
            n,
            k,
            mu: (n as f64 - 1.0) / 2.0 + k as f64,
            mult,
        }
    }

    /// Number of copies of this mode's radial system in the spinor bundle of
    /// the total space, `2^{floor(n/2)} C(k+n-2, k)`. For even `n` the
    /// spinor bundle restricts to two copies of the fiber spinor bundle, so
    /// both signs of the fiber eigenvalue spawn an (equivalent) radial system.
    pub fn radial_multiplicity(&self) -> u64 {
        if self.n.is_multiple_of(2) {
            2 * self.mult
        } else {
            self.mult
        }
    }
}

pub fn laplace_modes(n: usize, ell_max: usize) -> Vec<LaplaceMode> {
    assert!(n >= 2, "n must be at least 2");
    (0..=ell_max).map(|ell| LaplaceMode::new(n, ell)).collect()
}

/// For `n = 2` the circle fibers carry the bounding spin structure, so
/// `mu = 1/2 + k` with one eigenspinor per sign.
pub fn dirac_modes(n: usize, k_max: usize) -> Vec<DiracMode> {
    assert!(n >= 2, "n must be at least 2");
    (0..=k_max).map(|k| DiracMode::new(n, k)).collect()
}

/// Multiplicity of the round-sphere Laplace eigenvalue `ell (ell + n - 1)` on `S^n`.
pub fn round_laplace_multiplicity(n: usize, ell: usize) -> u64 {
    let (nn, l) = (n as i64, ell as i64);
    binomial_signed(l + nn, n as u64) - binomial_signed(l + nn - 2, n as u64)
}

/// Multiplicity of each sign of the round-sphere Dirac eigenvalue `n/2 + k` on `S^n`.
pub fn round_dirac_multiplicity(n: usize, k: usize) -> u64 {
    (1u64 << (n / 2)) * binomial((k + n - 1) as u64, k as u64)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Dimension of degree-`d` homogeneous polynomials in `m` variables.
    fn homogeneous_dim(m: usize, d: usize) -> u64 {
        // brute-force count of exponent vectors
        fn count(m: usize, d: usize) -> u64 {
            if m == 1 {
                return 1;
            }
            (0..=d).map(|e| count(m - 1, d - e)).sum()
        }
        count(m, d)
    }

    #[test]
    fn fiber_two_sphere() {
        for m in laplace_modes(3, 10) {
            assert_eq!(m.mult, 2 * m.ell as u64 + 1);
            assert_eq!(m.value, (m.ell * (m.ell + 1)) as f64);
        }
        let m0 = LaplaceMode::new(5, 0);
        assert_eq!((m0.value, m0.mult), (0.0, 1));
    }

    #[test]
    fn fiber_three_sphere_matches_harmonic_polynomial_count() {
        for ell in 0..=4 {
            // harmonic degree-ell polynomials in 4 variables: P_ell - P_{ell-2}
            let brute = homogeneous_dim(4, ell) - if ell >= 2 { homogeneous_dim(4, ell - 2) } else { 0 };
            let m = LaplaceMode::new(4, ell);
            assert_eq!(m.mult, brute);
            assert_eq!(m.mult, ((ell + 1) * (ell + 1)) as u64);
        }
    }

    #[test]
    fn dirac_fiber_counts() {
        for m in dirac_modes(3, 6) {
            assert_eq!(m.mu, 1.0 + m.k as f64);
            assert_eq!(m.mult, 2 * (m.k as u64 + 1));
        }
        for m in dirac_modes(2, 4) {
            assert_eq!(m.mu, 0.5 + m.k as f64);
            assert_eq!(m.mult, 1);
            assert_eq!(m.radial_multiplicity(), 2);
        }
        let m = DiracMode::new(5, 0);
        assert_eq!((m.mu, m.mult), (2.0, 4));
    }

    #[test]
    fn assembled_multiplicities_reproduce_round_sphere() {
        // sum over modes feeding one round-sphere eigenvalue
        for n in 2..=6 {
            for j in 0..8 {
                let lap: u64 = (0..=j).map(|ell| LaplaceMode::new(n, ell).mult).sum();
                assert_eq!(lap, round_laplace_multiplicity(n, j), "Laplace n={n} j={j}");
                let dir: u64 = (0..=j).map(|k| DiracMode::new(n, k).radial_multiplicity()).sum();
                assert_eq!(dir, round_dirac_multiplicity(n, j), "Dirac n={n} j={j}");
            }
        }
        assert_eq!(round_laplace_multiplicity(3, 2), 9);
        assert_eq!(round_dirac_multiplicity(3, 1), 6);
    }

    #[test]
    fn binomial_edge_cases() {
        assert_eq!(binomial(0, 0), 1);
        assert_eq!(binomial(3, 5), 0);
        assert_eq!(binomial(10, 3), 120);
    }
}
