//! Brute-force two-particle evolution in explicit Fock space.
//!
//! This path never forms products of single-particle propagators. It builds
//! the second-quantized Hamiltonian in the normalized two-particle basis,
//! exponentiates it, and evaluates `Γ_qr = ‖a_r a_q |ψ(t)⟩‖²`. It exists to
//! validate the closed forms in [`crate::correlations`] on small lattices.
//!
//! Basis convention: the boson state for pair `(n, m)`, `n ≤ m`, is
//! `a†_n a†_m |0⟩ / √(1 + δ_nm)`; the fermion state for `n < m` is
//! `a†_n a†_m |0⟩`. Consequently `Γ_qq = 2|ψ_qq|²` for bosons and the
//! correlation matrix sums to 2.

use std::f64::consts::{FRAC_1_SQRT_2, PI, SQRT_2};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::correlations::{correlation_single, CorrelationMatrix, Statistics, TwoParticleInput};
use crate::error::{Error, Result};
use crate::lattice::{build_hamiltonian, DisorderKind, Hamiltonian, LatticeSpec};
use crate::propagator::{decompose, decompose_matrix, evolve, Propagator};

/// Largest lattice the oracle accepts.
pub const ORACLE_MAX_SITES: usize = 64;

/// Largest lattice `oracle-check` accepts.
pub const CHECK_MAX_SITES: usize = 8;

/// Agreement required between the closed form and the Fock evolution.
pub const EQUIVALENCE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct TwoParticleBasis {
    pub statistics: Statistics,
    pub sites: usize,
    /// Lexicographically sorted, `n ≤ m` (bosons) or `n < m` (fermions).
    pub pairs: Vec<(usize, usize)>,
}

impl TwoParticleBasis {
    pub fn new(sites: usize, statistics: Statistics) -> Self {
        let pairs = (0..sites)
            .flat_map(|n| {
                let start = match statistics {
                    Statistics::Boson => n,
                    Statistics::Fermion => n + 1,
                };
                (start..sites).map(move |m| (n, m))
            })
            .collect();
        TwoParticleBasis {
            statistics,
            sites,
            pairs,
        }
    }

    pub fn dimension(&self) -> usize {
        self.pairs.len()
    }

    pub fn index_of(&self, n: usize, m: usize) -> Option<usize> {
        let (lo, hi) = (n.min(m), n.max(m));
        // Closed form of the lexicographic position.
        let before = match self.statistics {
            Statistics::Boson => lo * self.sites - lo * lo.saturating_sub(1) / 2,
            Statistics::Fermion => lo * self.sites - lo * (lo + 1) / 2,
        };
        let offset = match self.statistics {
            Statistics::Boson => hi.checked_sub(lo)?,
            Statistics::Fermion => hi.checked_sub(lo + 1)?,
        };
        let idx = before + offset;
        (self.pairs.get(idx) == Some(&(lo, hi))).then_some(idx)
    }

    /// Expands `a†_x a†_y |0⟩` as `coefficient × basis state`.
    fn create_pair(&self, x: usize, y: usize) -> Option<(usize, f64)> {
        match self.statistics {
            Statistics::Boson => {
                let norm = if x == y { SQRT_2 } else { 1.0 };
                Some((self.index_of(x, y)?, norm))
            }
            Statistics::Fermion => {
                if x == y {
                    return None;
                }
                let sign = if x < y { 1.0 } else { -1.0 };
                Some((self.index_of(x, y)?, sign))
            }
        }
    }

    fn normalization(&self, pair: (usize, usize)) -> f64 {
        if pair.0 == pair.1 {
            FRAC_1_SQRT_2
        } else {
            1.0
        }
    }
}

#[derive(Debug, Clone)]
pub struct TwoParticleState {
    pub basis: TwoParticleBasis,
    pub amplitudes: DVector<Complex64>,
}

impl TwoParticleState {
    pub fn norm(&self) -> f64 {
        self.amplitudes.norm()
    }
}

fn check_size(sites: usize) -> Result<()> {
    if sites > ORACLE_MAX_SITES {
        return Err(Error::OracleTooLarge {
            size: sites,
            limit: ORACLE_MAX_SITES,
        });
    }
    Ok(())
}

/// Matrix of `Σ_ij h_ij a†_i a_j` in the two-particle basis.
pub fn fock_hamiltonian(h: &Hamiltonian, statistics: Statistics) -> Result<DMatrix<f64>> {
    fock_hamiltonian_matrix(&h.elements, statistics)
}

pub fn fock_hamiltonian_matrix(h: &DMatrix<f64>, statistics: Statistics) -> Result<DMatrix<f64>> {
    let n = h.nrows();
    check_size(n)?;
    let basis = TwoParticleBasis::new(n, statistics);
    let d = basis.dimension();
    let mut fock = DMatrix::<f64>::zeros(d, d);
    // H a†_n a†_m |0⟩ = Σ_i (h_in a†_i a†_m + h_im a†_n a†_i) |0⟩
    for (col, &(p, q)) in basis.pairs.iter().enumerate() {
        let c = basis.normalization((p, q));
        for i in 0..n {
            for (x, y, hij) in [(i, q, h[(i, p)]), (p, i, h[(i, q)])] {
                if hij == 0.0 {
                    continue;
                }
                if let Some((row, coeff)) = basis.create_pair(x, y) {
                    fock[(row, col)] += c * hij * coeff;
                }
            }
        }
    }
    Ok(fock)
}

pub fn prepare_input(input: &TwoParticleInput, basis: &TwoParticleBasis) -> Result<TwoParticleState> {
    input.validate(basis.sites)?;
    if input.statistics() != basis.statistics {
        return Err(Error::InvalidSpec(format!(
            "{} input cannot live in a {:?} basis",
            input.label(),
            basis.statistics
        )));
    }
    let mut amplitudes = DVector::<Complex64>::zeros(basis.dimension());
    let (a, b) = input.sites();
    match *input {
        TwoParticleInput::SeparableBoson { .. } | TwoParticleInput::SeparableFermion { .. } => {
            // a†_A a†_B |0⟩ in the sorted basis carries a sign for fermions.
            let (idx, coeff) = basis.create_pair(a, b).expect("distinct sites");
            amplitudes[idx] = Complex64::new(coeff, 0.0);
        }
        TwoParticleInput::PathEntangled { theta, .. } => {
            // ½[(a†_A)² + e^{iθ}(a†_B)²]|0⟩ = (|AA⟩ + e^{iθ}|BB⟩)/√2
            let ia = basis.index_of(a, a).expect("boson basis");
            let ib = basis.index_of(b, b).expect("boson basis");
            amplitudes[ia] = Complex64::new(FRAC_1_SQRT_2, 0.0);
            amplitudes[ib] = Complex64::from_polar(FRAC_1_SQRT_2, theta);
        }
    }
    Ok(TwoParticleState {
        basis: basis.clone(),
        amplitudes,
    })
}

/// `exp(+iH₂t)|ψ⟩` using the eigendecomposition of the Fock Hamiltonian.
pub fn fock_evolve(h: &Hamiltonian, state: &TwoParticleState, time: f64) -> Result<TwoParticleState> {
    let fock = fock_hamiltonian(h, state.basis.statistics)?;
    let eig = decompose_matrix(&fock)?;
    let v = eig.eigenvectors.map(|x| Complex64::new(x, 0.0));
    let phases = DVector::from_iterator(
        eig.eigenvalues.len(),
        eig.eigenvalues.iter().map(|&l| Complex64::from_polar(1.0, l * time)),
    );
    let coeffs = v.adjoint() * &state.amplitudes;
    let amplitudes = &v * coeffs.component_mul(&phases);
    Ok(TwoParticleState {
        basis: state.basis.clone(),
        amplitudes,
    })
}

/// `Γ_qr = ⟨ψ|a†_q a†_r a_r a_q|ψ⟩` of a Fock state.
pub fn state_correlation(state: &TwoParticleState) -> DMatrix<f64> {
    let basis = &state.basis;
    let n = basis.sites;
    let sign = match basis.statistics {
        Statistics::Boson => 1.0,
        Statistics::Fermion => -1.0,
    };
    // ⟨0|a_r a_q a†_x a†_y|0⟩ = δ_qx δ_ry ± δ_qy δ_rx
    let mut vacuum_amp = DMatrix::<Complex64>::zeros(n, n);
    for (k, &(x, y)) in basis.pairs.iter().enumerate() {
        let psi = state.amplitudes[k] * basis.normalization((x, y));
        vacuum_amp[(x, y)] += psi;
        vacuum_amp[(y, x)] += psi * sign;
    }
    vacuum_amp.map(|z| z.norm_sqr())
}

pub fn fock_evolve_correlation(
    h: &Hamiltonian,
    input: &TwoParticleInput,
    time: f64,
) -> Result<CorrelationMatrix> {
    check_size(h.size())?;
    let basis = TwoParticleBasis::new(h.size(), input.statistics());
    let state = prepare_input(input, &basis)?;
    let evolved = fock_evolve(h, &state, time)?;
    Ok(CorrelationMatrix {
        elements: state_correlation(&evolved),
        input: *input,
        time,
    })
}

/// Worst disagreement seen by [`oracle_check`].
#[derive(Debug, Clone, Serialize)]
pub struct Mismatch {
    pub trial: usize,
    pub q: usize,
    pub r: usize,
    pub time: f64,
    pub variant: String,
    pub error: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct OracleReport {
    pub size: usize,
    pub trials: usize,
    pub tolerance: f64,
    pub worst: Option<Mismatch>,
}

impl OracleReport {
    pub fn max_error(&self) -> f64 {
        self.worst.as_ref().map_or(0.0, |m| m.error)
    }

    pub fn passed(&self) -> bool {
        self.max_error() < self.tolerance
    }
}

pub const CHECK_TIMES: [f64; 3] = [0.5, 2.0, 8.0];

/// The variants exercised by [`oracle_check`], cycled over trials.
pub fn check_variants(a: usize, b: usize) -> [TwoParticleInput; 5] {
    [
        TwoParticleInput::boson(a, b),
        TwoParticleInput::fermion(a, b),
        TwoParticleInput::path_entangled(a, b, 0.0),
        TwoParticleInput::path_entangled(a, b, PI / 2.0),
        TwoParticleInput::path_entangled(a, b, PI),
    ]
}

/// Compare `formula` against Fock evolution on `trials` random instances.
///
/// Trial `i` draws a lattice with off-diagonal and on-site disorder, a time
/// from [`CHECK_TIMES`], two distinct sites, and uses variant `i mod 5` of
/// [`check_variants`].
pub fn oracle_check_with<F>(size: usize, trials: usize, seed: u64, formula: F) -> Result<OracleReport>
where
    F: Fn(&Propagator, &TwoParticleInput) -> Result<CorrelationMatrix>,
{
    if !(2..=CHECK_MAX_SITES).contains(&size) {
        return Err(Error::InvalidSpec(format!(
            "oracle check size must be in 2..={CHECK_MAX_SITES}, got {size}"
        )));
    }
    let spec = LatticeSpec::chain(size, 1.0).with_disorder(DisorderKind::Both, 0.9);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: Option<Mismatch> = None;

    for trial in 0..trials {
        let h = build_hamiltonian(&spec, rng.random())?;
        let time = *CHECK_TIMES.choose(&mut rng).expect("non-empty");
        let a = rng.random_range(0..size);
        let b = (a + rng.random_range(1..size)) % size;
        let input = check_variants(a, b)[trial % 5];

        let u = evolve(&decompose(&h)?, time);
        let closed = formula(&u, &input)?;
        let brute = fock_evolve_correlation(&h, &input, time)?;
        for q in 0..size {
            for r in 0..size {
                let error = (closed.elements[(q, r)] - brute.elements[(q, r)]).abs();
                if worst.as_ref().is_none_or(|w| error > w.error) {
                    worst = Some(Mismatch {
                        trial,
                        q,
                        r,
                        time,
                        variant: input.label(),
                        error,
                    });
                }
            }
        }
    }

    Ok(OracleReport {
        size,
        trials,
        tolerance: EQUIVALENCE_TOLERANCE,
        worst,
    })
}

pub fn oracle_check(size: usize, trials: usize, seed: u64) -> Result<OracleReport> {
    oracle_check_with(size, trials, seed, correlation_single)
}
