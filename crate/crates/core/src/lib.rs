//! Spectral geometry of warped-product metrics on spheres with a long thin
//! neck: profile construction, curvature, radial Laplace/Yamabe/Dirac
//! spectra, eigenvalue bounds and conformal checks.

pub mod eigensolve;
pub mod format;
pub mod geometry;
pub mod modes;
pub mod profile;
pub mod radial_operators;
pub mod spectra;
pub mod inequalities;
pub mod conformal;
pub mod cli;
