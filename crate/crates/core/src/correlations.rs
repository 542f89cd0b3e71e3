//! Two-particle correlation matrices `Γ_qr`, the probability of finding one
//! particle on site `q` and one on site `r`.
//!
//! For particles launched on sites `A` and `B`:
//!
//! ```text
//! separable:       Γ_qr = |U_qA·U_rB ± U_qB·U_rA|²        (+ bosons, − fermions)
//! path-entangled:  Γ_qr = |U_qA·U_rA + e^{iθ}·U_qB·U_rB|²
//! ```
//!
//! The path-entangled state is `(|AA⟩ + e^{iθ}|BB⟩)/√2` in normalized Fock
//! states. Both forms are checked against brute-force Fock evolution in
//! [`crate::oracle`]. With this normalization `Σ_qr Γ_qr = 2`.

use std::f64::consts::TAU;
use std::ops::RangeInclusive;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::LatticeSpec;
use crate::propagator::Propagator;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Statistics {
    Boson,
    Fermion,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case")]
pub enum TwoParticleInput {
    SeparableBoson { site_a: usize, site_b: usize },
    SeparableFermion { site_a: usize, site_b: usize },
    PathEntangled { site_a: usize, site_b: usize, theta: f64 },
}

impl TwoParticleInput {
    pub fn boson(site_a: usize, site_b: usize) -> Self {
        TwoParticleInput::SeparableBoson { site_a, site_b }
    }

    pub fn fermion(site_a: usize, site_b: usize) -> Self {
        TwoParticleInput::SeparableFermion { site_a, site_b }
    }

    /// `theta` is wrapped into `[0, 2π)`.
    pub fn path_entangled(site_a: usize, site_b: usize, theta: f64) -> Self {
        TwoParticleInput::PathEntangled {
            site_a,
            site_b,
            theta: theta.rem_euclid(TAU),
        }
    }

    pub fn sites(&self) -> (usize, usize) {
        match *self {
            TwoParticleInput::SeparableBoson { site_a, site_b }
            | TwoParticleInput::SeparableFermion { site_a, site_b }
            | TwoParticleInput::PathEntangled { site_a, site_b, .. } => (site_a, site_b),
        }
    }

    pub fn statistics(&self) -> Statistics {
        match self {
            TwoParticleInput::SeparableFermion { .. } => Statistics::Fermion,
            _ => Statistics::Boson,
        }
    }

    pub fn label(&self) -> String {
        match *self {
            TwoParticleInput::SeparableBoson { .. } => "separable_boson".into(),
            TwoParticleInput::SeparableFermion { .. } => "separable_fermion".into(),
            TwoParticleInput::PathEntangled { theta, .. } => format!("path_entangled(θ={theta})"),
        }
    }

    pub fn validate(&self, size: usize) -> Result<()> {
        let (a, b) = self.sites();
        for s in [a, b] {
            if s >= size {
                return Err(Error::OutOfRange {
                    what: "input site",
                    index: s,
                    size,
                });
            }
        }
        if a == b {
            return Err(Error::IdenticalSites(a));
        }
        if let TwoParticleInput::PathEntangled { theta, .. } = *self {
            if !(0.0..TAU).contains(&theta) {
                return Err(Error::InvalidSpec(format!("phase {theta} outside [0, 2π)")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationMatrix {
    pub elements: DMatrix<f64>,
    pub input: TwoParticleInput,
    pub time: f64,
}

impl CorrelationMatrix {
    pub fn size(&self) -> usize {
        self.elements.nrows()
    }

    pub fn total(&self) -> f64 {
        self.elements.sum()
    }

    pub fn max_asymmetry(&self) -> f64 {
        (&self.elements - self.elements.transpose()).amax()
    }

    pub fn min_element(&self) -> f64 {
        self.elements.min()
    }

    pub fn max_diagonal(&self) -> f64 {
        self.elements.diagonal().max()
    }

    /// Fraction of the total mass on the diagonal `q = r`.
    pub fn diagonal_fraction(&self) -> f64 {
        self.elements.trace() / self.total()
    }

    /// Square sub-block over `sites × sites`.
    pub fn restricted(&self, sites: RangeInclusive<usize>) -> DMatrix<f64> {
        let (lo, hi) = (*sites.start(), *sites.end());
        self.elements.view((lo, lo), (hi - lo + 1, hi - lo + 1)).into_owned()
    }
}

/// `Γ` from the two propagator columns `U[·][A]` and `U[·][B]`.
///
/// Only the upper triangle is evaluated; the lower one is mirrored so `Γ` is
/// exactly symmetric.
pub fn correlation_from_columns(
    col_a: &[Complex64],
    col_b: &[Complex64],
    input: &TwoParticleInput,
) -> DMatrix<f64> {
    let n = col_a.len();
    let mut gamma = DMatrix::<f64>::zeros(n, n);
    let amplitude = |q: usize, r: usize| -> Complex64 {
        match *input {
            TwoParticleInput::SeparableBoson { .. } => col_a[q] * col_b[r] + col_b[q] * col_a[r],
            TwoParticleInput::SeparableFermion { .. } => col_a[q] * col_b[r] - col_b[q] * col_a[r],
            TwoParticleInput::PathEntangled { theta, .. } => {
                col_a[q] * col_a[r] + Complex64::from_polar(1.0, theta) * (col_b[q] * col_b[r])
            }
        }
    };
    for r in 0..n {
        for q in 0..=r {
            let v = amplitude(q, r).norm_sqr();
            gamma[(q, r)] = v;
            gamma[(r, q)] = v;
        }
    }
    gamma
}

pub fn correlation_single(u: &Propagator, input: &TwoParticleInput) -> Result<CorrelationMatrix> {
    input.validate(u.size())?;
    let (a, b) = input.sites();
    let col_a: Vec<Complex64> = u.elements.column(a).iter().copied().collect();
    let col_b: Vec<Complex64> = u.elements.column(b).iter().copied().collect();
    Ok(CorrelationMatrix {
        elements: correlation_from_columns(&col_a, &col_b, input),
        input: *input,
        time: u.time,
    })
}

/// `n_q = Σ_r Γ_qr`; sums to 2.
pub fn density_marginal(gamma: &CorrelationMatrix) -> Vec<f64> {
    matrix_marginal(&gamma.elements)
}

pub(crate) fn matrix_marginal(gamma: &DMatrix<f64>) -> Vec<f64> {
    gamma.row_iter().map(|row| row.sum()).collect()
}

/// `g(Δ) = Σ_q Γ_{q,q+Δ}` for `Δ ∈ [−(N−1), N−1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceDistribution {
    /// `values[Δ + max_offset]`.
    pub values: Vec<f64>,
}

impl DistanceDistribution {
    pub fn max_offset(&self) -> usize {
        self.values.len() / 2
    }

    pub fn get(&self, delta: isize) -> f64 {
        let m = self.max_offset() as isize;
        if delta.abs() > m {
            0.0
        } else {
            self.values[(delta + m) as usize]
        }
    }

    pub fn total(&self) -> f64 {
        self.values.iter().sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = (isize, f64)> + '_ {
        let m = self.max_offset() as isize;
        self.values.iter().enumerate().map(move |(i, &v)| (i as isize - m, v))
    }
}

pub fn interparticle_distance(gamma: &CorrelationMatrix) -> DistanceDistribution {
    distance_distribution(&gamma.elements)
}

/// Distance distribution of an arbitrary square block (e.g. a restricted window).
pub fn distance_distribution(gamma: &DMatrix<f64>) -> DistanceDistribution {
    let n = gamma.nrows();
    let m = n.saturating_sub(1);
    let mut values = vec![0.0; 2 * m + 1];
    for (slot, delta) in values.iter_mut().zip(-(m as isize)..=m as isize) {
        let lo = (-delta).max(0) as usize;
        let hi = (n as isize - delta.max(0)) as usize;
        *slot = (lo..hi).map(|q| gamma[(q, (q as isize + delta) as usize)]).sum();
    }
    DistanceDistribution { values }
}

/// Distance distribution along one axis of a grid, counting only pairs that
/// share every other coordinate.
pub fn distance_along_axis(
    gamma: &CorrelationMatrix,
    spec: &LatticeSpec,
    axis: usize,
) -> Result<DistanceDistribution> {
    spec.validate()?;
    let n = spec.num_sites();
    if gamma.size() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: gamma.size(),
        });
    }
    if axis >= spec.dimension() {
        return Err(Error::InvalidSpec(format!(
            "axis {axis} does not exist in a {}-dimensional lattice",
            spec.dimension()
        )));
    }
    let coords: Vec<Vec<usize>> = (0..n).map(|i| spec.site_coordinates(i)).collect::<Result<_>>()?;
    let m = spec.extent[axis] - 1;
    let mut values = vec![0.0; 2 * m + 1];
    for q in 0..n {
        for r in 0..n {
            let aligned = (0..spec.dimension()).all(|d| d == axis || coords[q][d] == coords[r][d]);
            if aligned {
                let delta = coords[r][axis] as isize - coords[q][axis] as isize;
                values[(delta + m as isize) as usize] += gamma.elements[(q, r)];
            }
        }
    }
    Ok(DistanceDistribution { values })
}
