//! Disorder-averaged Monte Carlo.
//!
//! Realization `i` draws its Hamiltonian with seed [`split_seed`]`(master, i)`,
//! is diagonalized once and evaluated at every time on the grid. Realizations
//! run on a rayon pool in fixed-size chunks; each produces a private buffer
//! and the buffers are summed on one thread in index order, so the result does
//! not depend on the number of workers.

use std::sync::atomic::{AtomicBool, Ordering};

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::{region_masses, RegionMasses, RegionPartition};
use crate::correlations::{
    correlation_from_columns, distance_distribution, matrix_marginal, CorrelationMatrix,
    DistanceDistribution, TwoParticleInput,
};
use crate::error::{Error, Result};
use crate::lattice::{build_hamiltonian, LatticeSpec};
use crate::propagator::{decompose, SpectralDecomposition};

/// Realizations evaluated per parallel batch. Fixed so the summation order
/// never depends on the pool size.
pub const CHUNK: usize = 32;

/// Upper bound on the working set of one ensemble run.
pub const MEMORY_BUDGET_BYTES: u64 = 4 << 30;

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

fn splitmix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of realization `index`: the `index + 1`-th output of a splitmix64
/// stream whose state starts at `splitmix64(master)`.
pub fn split_seed(master: u64, index: u64) -> u64 {
    splitmix64(splitmix64(master).wrapping_add(GOLDEN_GAMMA.wrapping_mul(index.wrapping_add(1))))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Source {
    SingleParticle { site: usize },
    Pair(TwoParticleInput),
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleConfig {
    pub lattice: LatticeSpec,
    pub source: Source,
    pub times: Vec<f64>,
    pub realizations: usize,
    pub master_seed: u64,
    /// Worker threads; 0 means rayon's default.
    pub workers: usize,
}

impl EnsembleConfig {
    pub fn validate(&self) -> Result<()> {
        self.lattice.validate()?;
        let n = self.lattice.num_sites();
        match self.source {
            Source::SingleParticle { site } if site >= n => {
                return Err(Error::OutOfRange {
                    what: "source site",
                    index: site,
                    size: n,
                })
            }
            Source::Pair(input) => input.validate(n)?,
            _ => {}
        }
        if self.realizations == 0 {
            return Err(Error::InvalidEnsemble("at least one realization is required".into()));
        }
        if self.times.is_empty() {
            return Err(Error::InvalidEnsemble("the time grid is empty".into()));
        }
        if self.times.iter().any(|t| !t.is_finite() || *t < 0.0) {
            return Err(Error::InvalidEnsemble(format!(
                "times must be finite and non-negative: {:?}",
                self.times
            )));
        }
        if self.times.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidEnsemble(format!(
                "times must be strictly ascending: {:?}",
                self.times
            )));
        }
        Ok(())
    }

    /// Peak bytes held at once: the accumulators plus one chunk of
    /// per-realization buffers and decompositions.
    pub fn estimated_bytes(&self) -> u64 {
        let n = self.lattice.num_sites() as u64;
        let t = self.times.len() as u64;
        let per_time = match self.source {
            Source::SingleParticle { .. } => n,
            Source::Pair(_) => n * n + n,
        };
        let in_flight = CHUNK.min(self.realizations) as u64;
        8 * ((in_flight + 1) * t * per_time + in_flight * 3 * n * n)
    }

    fn check_resources(&self) -> Result<()> {
        let bytes = self.estimated_bytes();
        if bytes > MEMORY_BUDGET_BYTES {
            return Err(Error::Resource(format!(
                "{} sites × {} times needs ~{} MiB, budget is {} MiB",
                self.lattice.num_sites(),
                self.times.len(),
                bytes >> 20,
                MEMORY_BUDGET_BYTES >> 20
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimeSlice {
    pub time: f64,
    /// Averaged density; sums to 1 for one particle, 2 for a pair.
    pub density: Vec<f64>,
    pub correlation: Option<CorrelationMatrix>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleResult {
    pub config: EnsembleConfig,
    pub realizations: usize,
    pub slices: Vec<TimeSlice>,
    pub version: &'static str,
}

/// One realization's evaluation at every time.
fn realize<T>(
    config: &EnsembleConfig,
    index: usize,
    observe: &(impl Fn(&SpectralDecomposition, f64) -> Result<T> + Sync),
) -> Result<Vec<T>> {
    let h = build_hamiltonian(&config.lattice, split_seed(config.master_seed, index as u64))?;
    let d = decompose(&h)?;
    config.times.iter().map(|&t| observe(&d, t)).collect()
}

fn pair_correlation(d: &SpectralDecomposition, input: &TwoParticleInput, time: f64) -> Result<DMatrix<f64>> {
    let (a, b) = input.sites();
    Ok(correlation_from_columns(&d.column(time, a)?, &d.column(time, b)?, input))
}

fn single_density(d: &SpectralDecomposition, site: usize, time: f64) -> Result<Vec<f64>> {
    Ok(d.column(time, site)?.iter().map(|z| z.norm_sqr()).collect())
}

/// Run every realization through `observe` and fold the outputs into `acc`
/// in realization order.
fn accumulate<T: Send>(
    config: &EnsembleConfig,
    observe: impl Fn(&SpectralDecomposition, f64) -> Result<T> + Sync,
    mut fold: impl FnMut(usize, Vec<T>),
    progress: &mut dyn FnMut(usize, usize),
) -> Result<()> {
    config.validate()?;
    config.check_resources()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers)
        .build()
        .map_err(|e| Error::Resource(format!("cannot start worker pool: {e}")))?;
    let failed = AtomicBool::new(false);
    let total = config.realizations;
    let mut start = 0;
    while start < total {
        let end = (start + CHUNK).min(total);
        let batch: Vec<Result<Vec<T>>> = pool.install(|| {
            (start..end)
                .into_par_iter()
                .map(|i| {
                    if failed.load(Ordering::Relaxed) {
                        return Err(Error::Resource("aborted".into()));
                    }
                    let out = realize(config, i, &observe);
                    if out.is_err() {
                        failed.store(true, Ordering::Relaxed);
                    }
                    out
                })
                .collect()
        });
        for (i, out) in (start..end).zip(batch) {
            fold(i, out?);
        }
        progress(end, total);
        start = end;
    }
    Ok(())
}

fn add_into(acc: &mut [f64], x: &[f64]) {
    acc.iter_mut().zip(x).for_each(|(a, b)| *a += b);
}

pub fn run_ensemble(config: &EnsembleConfig) -> Result<EnsembleResult> {
    run_ensemble_with_progress(config, &mut |_, _| {})
}

/// [`run_ensemble`] reporting `(done, total)` after every chunk.
pub fn run_ensemble_with_progress(
    config: &EnsembleConfig,
    progress: &mut dyn FnMut(usize, usize),
) -> Result<EnsembleResult> {
    config.validate()?;
    config.check_resources()?;
    let n = config.lattice.num_sites();
    let steps = config.times.len();
    let r = config.realizations as f64;
    let slices = match config.source {
        Source::SingleParticle { site } => {
            let mut acc = vec![vec![0.0; n]; steps];
            accumulate(
                config,
                |d, t| single_density(d, site, t),
                |_, out| acc.iter_mut().zip(&out).for_each(|(a, x)| add_into(a, x)),
                progress,
            )?;
            config
                .times
                .iter()
                .zip(acc)
                .map(|(&time, sum)| TimeSlice {
                    time,
                    density: sum.iter().map(|v| v / r).collect(),
                    correlation: None,
                })
                .collect()
        }
        Source::Pair(input) => {
            let mut acc = vec![DMatrix::<f64>::zeros(n, n); steps];
            accumulate(
                config,
                |d, t| pair_correlation(d, &input, t),
                |_, out| acc.iter_mut().zip(&out).for_each(|(a, x)| *a += x),
                progress,
            )?;
            config
                .times
                .iter()
                .zip(acc)
                .map(|(&time, sum)| {
                    let elements = sum / r;
                    TimeSlice {
                        time,
                        density: matrix_marginal(&elements),
                        correlation: Some(CorrelationMatrix {
                            elements,
                            input,
                            time,
                        }),
                    }
                })
                .collect()
        }
    };
    Ok(EnsembleResult {
        config: config.clone(),
        realizations: config.realizations,
        slices,
        version: env!("CARGO_PKG_VERSION"),
    })
}

/// What [`stream_observable`] keeps from each realization instead of `Γ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Reducer {
    Density,
    GOfDelta,
    RegionMass(RegionPartition),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Reduced {
    Density(Vec<f64>),
    GOfDelta(DistanceDistribution),
    RegionMass(RegionMasses),
}

/// Per-time ensemble mean of a linear reduction, holding only the reduced
/// value per realization.
pub fn stream_observable(config: &EnsembleConfig, reducer: &Reducer) -> Result<Vec<(f64, Reduced)>> {
    config.validate()?;
    config.check_resources()?;
    let n = config.lattice.num_sites();
    let steps = config.times.len();
    let r = config.realizations as f64;
    let mut progress = |_: usize, _: usize| {};

    let input = match (config.source, reducer) {
        (Source::SingleParticle { site }, Reducer::Density) => {
            let mut acc = vec![vec![0.0; n]; steps];
            accumulate(
                config,
                |d, t| single_density(d, site, t),
                |_, out| acc.iter_mut().zip(&out).for_each(|(a, x)| add_into(a, x)),
                &mut progress,
            )?;
            return Ok(config
                .times
                .iter()
                .zip(acc)
                .map(|(&t, s)| (t, Reduced::Density(s.iter().map(|v| v / r).collect())))
                .collect());
        }
        (Source::SingleParticle { .. }, _) => {
            return Err(Error::InvalidEnsemble(
                "a single particle has no pair observables".into(),
            ))
        }
        (Source::Pair(input), _) => input,
    };

    if let Reducer::RegionMass(p) = reducer {
        if p.size != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: p.size,
            });
        }
    }

    let width = match reducer {
        Reducer::Density => n,
        Reducer::GOfDelta => 2 * n - 1,
        Reducer::RegionMass(_) => 5,
    };
    let mut acc = vec![vec![0.0; width]; steps];
    accumulate(
        config,
        |d, t| {
            let gamma = pair_correlation(d, &input, t)?;
            Ok(match reducer {
                Reducer::Density => matrix_marginal(&gamma),
                Reducer::GOfDelta => distance_distribution(&gamma).values,
                Reducer::RegionMass(p) => {
                    let m = region_masses(&gamma, p)?;
                    vec![m.both_localized, m.same_side, m.opposite_sides, m.split, m.unclassified]
                }
            })
        },
        |_, out| acc.iter_mut().zip(&out).for_each(|(a, x)| add_into(a, x)),
        &mut progress,
    )?;

    Ok(config
        .times
        .iter()
        .zip(acc)
        .map(|(&t, sum)| {
            let mean: Vec<f64> = sum.iter().map(|v| v / r).collect();
            let value = match reducer {
                Reducer::Density => Reduced::Density(mean),
                Reducer::GOfDelta => Reduced::GOfDelta(DistanceDistribution { values: mean }),
                Reducer::RegionMass(_) => Reduced::RegionMass(RegionMasses {
                    both_localized: mean[0],
                    same_side: mean[1],
                    opposite_sides: mean[2],
                    split: mean[3],
                    unclassified: mean[4],
                }),
            };
            (t, value)
        })
        .collect())
}
