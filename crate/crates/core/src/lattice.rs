//! Disordered tight-binding lattices in one and two dimensions.
//!
//! The Hamiltonian is
//!
//! ```text
//! H = Σ_n W_n a†_n a_n − Σ_<n,m> T_nm a†_n a_m
//! ```
//!
//! on an open chain or an open rectangular grid. Sites are flattened
//! row-major: coordinate `(x, y)` on an `Nx × Ny` grid maps to `x·Ny + y`.
//!
//! Disorder models, all driven by a ChaCha8 stream seeded from the
//! realization seed:
//!
//! * off-diagonal: every bond draws `T_nm = T·(1 + W·u)` with `u` uniform on
//!   `[−½, ½)`; `W < 2` keeps every tunneling positive.
//! * diagonal: every site draws `W_n` uniform on `[−W, W)`.
//! * both: bonds are drawn first (in [`neighbor_pairs`] order), then sites.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DisorderKind {
    None,
    OffDiagonal,
    Diagonal,
    Both,
}

impl DisorderKind {
    pub fn has_off_diagonal(self) -> bool {
        matches!(self, DisorderKind::OffDiagonal | DisorderKind::Both)
    }

    pub fn has_diagonal(self) -> bool {
        matches!(self, DisorderKind::Diagonal | DisorderKind::Both)
    }
}

/// Only hard-wall ends are supported.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    #[default]
    Open,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatticeSpec {
    /// Site count per axis; one entry for a chain, two for a grid.
    pub extent: Vec<usize>,
    pub tunneling: f64,
    pub disorder_kind: DisorderKind,
    pub disorder_strength: f64,
    #[serde(default)]
    pub boundary: Boundary,
}

impl LatticeSpec {
    pub fn chain(sites: usize, tunneling: f64) -> Self {
        LatticeSpec {
            extent: vec![sites],
            tunneling,
            disorder_kind: DisorderKind::None,
            disorder_strength: 0.0,
            boundary: Boundary::Open,
        }
    }

    pub fn grid(nx: usize, ny: usize, tunneling: f64) -> Self {
        LatticeSpec {
            extent: vec![nx, ny],
            ..LatticeSpec::chain(0, tunneling)
        }
    }

    pub fn with_disorder(mut self, kind: DisorderKind, strength: f64) -> Self {
        self.disorder_kind = kind;
        self.disorder_strength = strength;
        self
    }

    pub fn dimension(&self) -> usize {
        self.extent.len()
    }

    pub fn num_sites(&self) -> usize {
        self.extent.iter().product()
    }

    pub fn validate(&self) -> Result<()> {
        let invalid = |msg: String| Err(Error::InvalidSpec(msg));
        if !(1..=2).contains(&self.dimension()) {
            return invalid(format!(
                "dimension must be 1 or 2, got {}",
                self.dimension()
            ));
        }
        if self.extent.contains(&0) {
            return invalid(format!("extent {:?} has an empty axis", self.extent));
        }
        if self.num_sites() < 2 {
            return invalid(format!("need at least 2 sites, got {}", self.num_sites()));
        }
        if !(self.tunneling.is_finite() && self.tunneling > 0.0) {
            return invalid(format!("tunneling must be positive, got {}", self.tunneling));
        }
        if !(self.disorder_strength.is_finite() && self.disorder_strength >= 0.0) {
            return invalid(format!(
                "disorder strength must be non-negative, got {}",
                self.disorder_strength
            ));
        }
        if self.disorder_kind.has_off_diagonal() && self.disorder_strength >= 2.0 {
            return invalid(format!(
                "off-diagonal disorder strength {} >= 2 can flip the tunneling sign",
                self.disorder_strength
            ));
        }
        Ok(())
    }

    /// Row-major flat index of `coords`.
    pub fn site_index(&self, coords: &[usize]) -> Result<usize> {
        self.validate()?;
        if coords.len() != self.dimension() || coords.iter().zip(&self.extent).any(|(c, e)| c >= e)
        {
            return Err(Error::CoordinatesOutOfRange {
                coords: coords.to_vec(),
                extent: self.extent.clone(),
            });
        }
        Ok(coords
            .iter()
            .zip(&self.extent)
            .fold(0, |acc, (&c, &e)| acc * e + c))
    }

    /// Inverse of [`LatticeSpec::site_index`].
    pub fn site_coordinates(&self, index: usize) -> Result<Vec<usize>> {
        let size = self.num_sites();
        if index >= size {
            return Err(Error::OutOfRange {
                what: "site",
                index,
                size,
            });
        }
        let mut coords = vec![0; self.dimension()];
        let mut rest = index;
        for (axis, &e) in self.extent.iter().enumerate().rev() {
            coords[axis] = rest % e;
            rest /= e;
        }
        Ok(coords)
    }

    /// Distance in sites from `index` to the nearest hard wall.
    pub fn boundary_distance(&self, index: usize) -> Result<usize> {
        let coords = self.site_coordinates(index)?;
        Ok(coords
            .iter()
            .zip(&self.extent)
            .map(|(&c, &e)| c.min(e - 1 - c))
            .min()
            .unwrap_or(0))
    }
}

/// Every undirected nearest-neighbour bond exactly once.
///
/// Bonds along the fast (last) axis come first in row-major order, then bonds
/// along the slow axis.
pub fn neighbor_pairs(spec: &LatticeSpec) -> Result<Vec<(usize, usize)>> {
    spec.validate()?;
    let pairs = match spec.extent[..] {
        [n] => (0..n - 1).map(|i| (i, i + 1)).collect(),
        [nx, ny] => {
            let mut pairs = Vec::with_capacity(nx * (ny - 1) + ny * (nx - 1));
            for x in 0..nx {
                for y in 0..ny - 1 {
                    pairs.push((x * ny + y, x * ny + y + 1));
                }
            }
            for x in 0..nx - 1 {
                for y in 0..ny {
                    pairs.push((x * ny + y, (x + 1) * ny + y));
                }
            }
            pairs
        }
        _ => unreachable!("validated dimension"),
    };
    Ok(pairs)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Hamiltonian {
    pub elements: DMatrix<f64>,
    pub spec: LatticeSpec,
    pub seed: u64,
}

impl Hamiltonian {
    pub fn size(&self) -> usize {
        self.elements.nrows()
    }

    /// Tunneling amplitudes `T_nm = −H[n][m]` in [`neighbor_pairs`] order.
    pub fn bond_tunnelings(&self) -> Vec<f64> {
        neighbor_pairs(&self.spec)
            .expect("spec validated at construction")
            .into_iter()
            .map(|(n, m)| -self.elements[(n, m)])
            .collect()
    }

    pub fn onsite_energies(&self) -> Vec<f64> {
        self.elements.diagonal().iter().copied().collect()
    }
}

pub fn build_hamiltonian(spec: &LatticeSpec, seed: u64) -> Result<Hamiltonian> {
    let pairs = neighbor_pairs(spec)?;
    let n = spec.num_sites();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut h = DMatrix::<f64>::zeros(n, n);

    let t = spec.tunneling;
    let w = spec.disorder_strength;
    for (a, b) in pairs {
        let tab = if spec.disorder_kind.has_off_diagonal() {
            let u: f64 = rng.random::<f64>() - 0.5;
            t * (1.0 + w * u)
        } else {
            t
        };
        h[(a, b)] = -tab;
        h[(b, a)] = -tab;
    }
    if spec.disorder_kind.has_diagonal() {
        for i in 0..n {
            h[(i, i)] = w * (2.0 * rng.random::<f64>() - 1.0);
        }
    }

    Ok(Hamiltonian {
        elements: h,
        spec: spec.clone(),
        seed,
    })
}
