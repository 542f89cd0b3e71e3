//! Single-particle propagator `U(t) = exp(+iHt)`.
//!
//! `U[r][s]` is the amplitude for a particle starting on site `s` to be found
//! on site `r`. The `+i` sign follows the transition-amplitude convention
//! used throughout the crate; every observable here is built from `|·|²` of
//! products of `U` entries, and since `H` is real `exp(−iHt) = conj(exp(+iHt))`,
//! so either sign gives the same numbers.
//!
//! `H` is diagonalized once and each column is assembled as
//! `U[·][s] = Σ_k exp(iλ_k t)·V[s][k]·V[·][k]`. The full matrix and the
//! single-column path share that routine, so they agree bit for bit.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::lattice::Hamiltonian;

/// Maximum tolerated `|H − Hᵀ|` entry.
pub const SYMMETRY_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    /// Orthonormal eigenvectors, one per column, matching `eigenvalues`.
    pub eigenvectors: DMatrix<f64>,
}

impl SpectralDecomposition {
    pub fn size(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Column `source` of `U(t)`.
    pub fn column(&self, time: f64, source: usize) -> Result<Vec<Complex64>> {
        let n = self.size();
        if source >= n {
            return Err(Error::OutOfRange {
                what: "source site",
                index: source,
                size: n,
            });
        }
        Ok(self.column_unchecked(time, source))
    }

    fn column_unchecked(&self, time: f64, source: usize) -> Vec<Complex64> {
        let n = self.size();
        let v = &self.eigenvectors;
        let mut col = vec![Complex64::new(0.0, 0.0); n];
        for (k, &lambda) in self.eigenvalues.iter().enumerate() {
            let weight = Complex64::from_polar(1.0, lambda * time) * v[(source, k)];
            for (r, slot) in col.iter_mut().enumerate() {
                *slot += weight * v[(r, k)];
            }
        }
        col
    }

    /// `max |HV − V·diag(λ)|` for the matrix this decomposition came from.
    pub fn reconstruction_residual(&self, h: &DMatrix<f64>) -> f64 {
        let lambda = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(self.eigenvalues.clone()));
        (h * &self.eigenvectors - &self.eigenvectors * lambda).amax()
    }
}

pub fn decompose(h: &Hamiltonian) -> Result<SpectralDecomposition> {
    decompose_matrix(&h.elements)
}

/// Full real-symmetric eigendecomposition with ascending eigenvalues.
pub fn decompose_matrix(h: &DMatrix<f64>) -> Result<SpectralDecomposition> {
    if !h.is_square() {
        return Err(Error::DimensionMismatch {
            expected: h.nrows(),
            actual: h.ncols(),
        });
    }
    let asymmetry = (h - h.transpose()).amax();
    if asymmetry > SYMMETRY_TOLERANCE {
        return Err(Error::NotSymmetric(asymmetry));
    }

    let eig = SymmetricEigen::new(h.clone());
    let mut order: Vec<usize> = (0..h.nrows()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));

    let eigenvalues = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let eigenvectors = DMatrix::from_fn(h.nrows(), h.nrows(), |r, c| eig.eigenvectors[(r, order[c])]);
    Ok(SpectralDecomposition {
        eigenvalues,
        eigenvectors,
    })
}

#[derive(Debug, Clone)]
pub struct Propagator {
    pub time: f64,
    pub elements: DMatrix<Complex64>,
}

impl Propagator {
    pub fn size(&self) -> usize {
        self.elements.nrows()
    }

    pub fn amplitude(&self, to: usize, from: usize) -> Complex64 {
        self.elements[(to, from)]
    }

    /// `max |U†U − I|`.
    pub fn unitarity_error(&self) -> f64 {
        let n = self.size();
        let product = self.elements.adjoint() * &self.elements;
        (product - DMatrix::<Complex64>::identity(n, n))
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }
}

/// `U(t)`; negative `t` is allowed and gives `U(t)†`.
pub fn evolve(decomposition: &SpectralDecomposition, time: f64) -> Propagator {
    let n = decomposition.size();
    let mut elements = DMatrix::<Complex64>::zeros(n, n);
    for s in 0..n {
        let col = decomposition.column_unchecked(time, s);
        elements.column_mut(s).copy_from_slice(&col);
    }
    Propagator { time, elements }
}

/// `n_r = |U[r][source]|²`.
pub fn single_particle_density(u: &Propagator, source: usize) -> Result<Vec<f64>> {
    let n = u.size();
    if source >= n {
        return Err(Error::OutOfRange {
            what: "source site",
            index: source,
            size: n,
        });
    }
    Ok(u.elements.column(source).iter().map(|z| z.norm_sqr()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{build_hamiltonian, DisorderKind, LatticeSpec};

    fn max_abs_diff(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> f64 {
        (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    #[test]
    fn two_site_spectrum() {
        let h = DMatrix::from_row_slice(2, 2, &[0.0, -1.0, -1.0, 0.0]);
        let d = decompose_matrix(&h).unwrap();
        assert!((d.eigenvalues[0] + 1.0).abs() < 1e-14);
        assert!((d.eigenvalues[1] - 1.0).abs() < 1e-14);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        // ground state (1, 1)/√2, excited (1, −1)/√2, each up to sign
        let g = d.eigenvectors.column(0);
        let e = d.eigenvectors.column(1);
        assert!((g[0].abs() - s).abs() < 1e-14 && g[0] * g[1] > 0.0);
        assert!((e[0].abs() - s).abs() < 1e-14 && e[0] * e[1] < 0.0);
    }

    #[test]
    fn zero_hamiltonian_gives_identity() {
        let d = decompose_matrix(&DMatrix::zeros(3, 3)).unwrap();
        assert_eq!(d.eigenvalues, vec![0.0; 3]);
        let u = evolve(&d, 7.3);
        assert!(max_abs_diff(&u.elements, &DMatrix::identity(3, 3)) < 1e-14);
    }

    #[test]
    fn rejects_asymmetric_input() {
        let h = DMatrix::from_row_slice(2, 2, &[0.0, -1.0, -1.0 + 1e-9, 0.0]);
        assert!(matches!(decompose_matrix(&h), Err(Error::NotSymmetric(_))));
    }

    #[test]
    fn disordered_reconstruction() {
        let spec = LatticeSpec::chain(6, 1.0).with_disorder(DisorderKind::Both, 0.8);
        let h = build_hamiltonian(&spec, 11).unwrap();
        let d = decompose(&h).unwrap();
        assert!(d.reconstruction_residual(&h.elements) < 1e-10 * h.elements.norm());
        let vtv = d.eigenvectors.transpose() * &d.eigenvectors;
        assert!((vtv - DMatrix::identity(6, 6)).amax() < 1e-12);
        assert!(d.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn rabi_oscillation() {
        let h = build_hamiltonian(&LatticeSpec::chain(2, 1.0), 0).unwrap();
        let d = decompose(&h).unwrap();
        for &t in &[0.0, 0.3, 1.0, 2.5, 10.0] {
            let u = evolve(&d, t);
            let p = u.amplitude(0, 1).norm_sqr();
            assert!((p - t.sin().powi(2)).abs() < 1e-13, "t = {t}");
            // exp(iHt) = cos t · I − i sin t · σx  for H = −σx
            let expected = Complex64::new(0.0, -t.sin());
            assert!((u.amplitude(0, 1) - expected).norm() < 1e-13);
        }
    }

    #[test]
    fn identity_at_zero_and_time_reversal() {
        let spec = LatticeSpec::chain(12, 1.0).with_disorder(DisorderKind::OffDiagonal, 1.0);
        let d = decompose(&build_hamiltonian(&spec, 3).unwrap()).unwrap();
        let id = evolve(&d, 0.0);
        assert!(max_abs_diff(&id.elements, &DMatrix::identity(12, 12)) < 1e-10);
        let fwd = evolve(&d, 4.2);
        let back = evolve(&d, -4.2);
        assert!(max_abs_diff(&back.elements, &fwd.elements.adjoint()) < 1e-10);
    }

    #[test]
    fn column_path_matches_full_matrix_bitwise() {
        let spec = LatticeSpec::chain(9, 1.0).with_disorder(DisorderKind::OffDiagonal, 0.6);
        let d = decompose(&build_hamiltonian(&spec, 8).unwrap()).unwrap();
        let u = evolve(&d, 3.3);
        for s in 0..9 {
            let col = d.column(3.3, s).unwrap();
            assert!(col.iter().zip(u.elements.column(s).iter()).all(|(a, b)| a == b));
        }
        assert!(d.column(3.3, 9).is_err());
    }

    #[test]
    fn density_delta_at_zero() {
        let d = decompose(&build_hamiltonian(&LatticeSpec::chain(5, 1.0), 0).unwrap()).unwrap();
        let n = single_particle_density(&evolve(&d, 0.0), 2).unwrap();
        for (r, v) in n.iter().enumerate() {
            let want = if r == 2 { 1.0 } else { 0.0 };
            assert!((v - want).abs() < 1e-14);
        }
        assert!(single_particle_density(&evolve(&d, 0.0), 5).is_err());
    }
}
