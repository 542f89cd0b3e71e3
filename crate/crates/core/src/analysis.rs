//! Scalar reductions of densities and correlation matrices: localization
//! length, even/odd separation contrast, localized/ballistic pair
//! classification, eigenmode staggering and boundary leakage.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::correlations::{
    distance_along_axis, distance_distribution, matrix_marginal, CorrelationMatrix,
    DistanceDistribution,
};
use crate::error::{Error, Result};
use crate::lattice::LatticeSpec;

/// Fit window, relative to the density peak.
pub const FIT_WINDOW: (f64, f64) = (1e-8, 1e-1);
/// Minimum number of sites in the fit window.
pub const FIT_MIN_POINTS: usize = 6;
/// RMS residual of `ln n_r` above which a fit is not considered exponential.
pub const FIT_MAX_RESIDUAL: f64 = 0.25;
/// Default half-width of the separation window used for parity contrast.
pub const PARITY_WINDOW: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocalizationFit {
    /// Localization length from `n_r ∝ exp(−2|r − c|/ξ)`; infinite when the
    /// fitted envelope does not decay.
    pub xi: f64,
    /// RMS residual of `ln n_r`.
    pub residual: f64,
    pub points: usize,
}

impl LocalizationFit {
    pub fn is_exponential(&self) -> bool {
        self.xi.is_finite() && self.xi > 0.0 && self.residual < FIT_MAX_RESIDUAL
    }
}

/// Least-squares fit of `ln n_r` against `|r − center|` over the sites where
/// `n_r` lies within [`FIT_WINDOW`] of the peak.
pub fn localization_fit(density: &[f64], center: f64) -> Result<LocalizationFit> {
    let peak = density.iter().copied().fold(0.0, f64::max);
    let (lo, hi) = (FIT_WINDOW.0 * peak, FIT_WINDOW.1 * peak);
    let points: Vec<(f64, f64)> = density
        .iter()
        .enumerate()
        .filter(|&(_, &n)| n > 0.0 && n >= lo && n <= hi)
        .map(|(r, &n)| ((r as f64 - center).abs(), n.ln()))
        .collect();
    if points.len() < FIT_MIN_POINTS {
        return Err(Error::FitFailure {
            points: points.len(),
        });
    }

    let m = points.len() as f64;
    let mean_x = points.iter().map(|p| p.0).sum::<f64>() / m;
    let mean_y = points.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = points.iter().map(|p| (p.0 - mean_x).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mean_x) * (p.1 - mean_y)).sum();
    if sxx == 0.0 {
        return Err(Error::FitFailure {
            points: points.len(),
        });
    }
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let residual = (points
        .iter()
        .map(|p| (p.1 - intercept - slope * p.0).powi(2))
        .sum::<f64>()
        / m)
        .sqrt();
    let xi = if slope < 0.0 { -2.0 / slope } else { f64::INFINITY };
    Ok(LocalizationFit {
        xi,
        residual,
        points: points.len(),
    })
}

/// `(odd − even) / (odd + even)` over `1 ≤ |Δ| ≤ window`; positive when odd
/// separations dominate.
pub fn parity_contrast(g: &DistanceDistribution, window: usize) -> Result<f64> {
    if window < 2 {
        return Err(Error::InvalidSpec(format!("parity window must be ≥ 2, got {window}")));
    }
    let (mut odd, mut even) = (0.0, 0.0);
    for (delta, v) in g.iter() {
        let d = delta.unsigned_abs();
        if d == 0 || d > window {
            continue;
        }
        if d % 2 == 1 {
            odd += v;
        } else {
            even += v;
        }
    }
    let total = odd + even;
    if total <= 0.0 {
        return Err(Error::ZeroMass);
    }
    Ok((odd - even) / total)
}

/// Inclusive site interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Window {
    pub lo: usize,
    pub hi: usize,
}

impl Window {
    pub fn new(lo: usize, hi: usize) -> Self {
        Window { lo, hi }
    }

    pub fn contains(&self, site: usize) -> bool {
        (self.lo..=self.hi).contains(&site)
    }

    pub fn len(&self) -> usize {
        self.hi - self.lo + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// A localized core and two ballistic lobes on a chain; everything else is a
/// gap.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegionPartition {
    pub size: usize,
    pub center: Window,
    pub left: Window,
    pub right: Window,
}

/// Placement rules for [`RegionPartition::from_density`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PartitionRule {
    /// Each lobe covers this fraction of the occupied extent.
    pub edge_fraction: f64,
    /// Sites with density at least this fraction of the peak are occupied.
    pub occupancy_threshold: f64,
    /// Core half-width in units of the fitted localization length.
    pub xi_multiple: f64,
}

impl Default for PartitionRule {
    fn default() -> Self {
        PartitionRule {
            edge_fraction: 0.15,
            occupancy_threshold: 1e-3,
            xi_multiple: 2.0,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Region {
    Center,
    Left,
    Right,
    Gap,
}

impl RegionPartition {
    pub fn new(size: usize, center: Window, left: Window, right: Window) -> Result<Self> {
        let bad = |msg: String| Err(Error::InvalidPartition(msg));
        for (name, w) in [("center", center), ("left", left), ("right", right)] {
            if w.lo > w.hi || w.hi >= size {
                return bad(format!("{name} window {w:?} invalid for {size} sites"));
            }
        }
        if !(left.hi < center.lo && center.hi < right.lo) {
            return bad(format!(
                "windows must be ordered and disjoint: left {left:?}, center {center:?}, right {right:?}"
            ));
        }
        Ok(RegionPartition {
            size,
            center,
            left,
            right,
        })
    }

    /// Lobes are the outermost `edge_fraction` of the occupied extent; the
    /// core is `|r − center| ≤ xi_multiple·ξ`, clipped so it never touches a
    /// lobe. Without a usable ξ the core half-width falls back to one eighth
    /// of the occupied extent.
    pub fn from_density(
        density: &[f64],
        center: f64,
        xi: Option<f64>,
        rule: &PartitionRule,
    ) -> Result<Self> {
        let size = density.len();
        let peak = density.iter().copied().fold(0.0, f64::max);
        if peak <= 0.0 {
            return Err(Error::ZeroMass);
        }
        let occupied: Vec<usize> = (0..size)
            .filter(|&r| density[r] >= rule.occupancy_threshold * peak)
            .collect();
        let (lo, hi) = (occupied[0], *occupied.last().expect("peak is occupied"));
        let extent = hi - lo + 1;
        let edge = ((rule.edge_fraction * extent as f64).round() as usize).max(1);
        let left = Window::new(lo, lo + edge - 1);
        let right = Window::new((hi + 1).saturating_sub(edge), hi);

        let half = match xi {
            Some(x) if x.is_finite() && x > 0.0 => rule.xi_multiple * x,
            _ => extent as f64 / 8.0,
        };
        let core_lo = ((center - half).ceil().max(0.0) as usize).max(left.hi + 1);
        let core_hi = ((center + half).floor() as usize).min(right.lo.saturating_sub(1));
        if core_lo > core_hi {
            return Err(Error::InvalidPartition(format!(
                "no room for a core between lobes {left:?} and {right:?}"
            )));
        }
        RegionPartition::new(size, Window::new(core_lo, core_hi), left, right)
    }

    fn region(&self, site: usize) -> Region {
        if self.center.contains(site) {
            Region::Center
        } else if self.left.contains(site) {
            Region::Left
        } else if self.right.contains(site) {
            Region::Right
        } else {
            Region::Gap
        }
    }
}

/// Fractions of the correlation mass by where the two particles are found.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairClassification {
    pub both_localized: f64,
    pub both_ballistic_same_side: f64,
    pub both_ballistic_opposite_sides: f64,
    /// One particle in the core, the other in a lobe.
    pub split: f64,
    pub unclassified: f64,
}

impl PairClassification {
    pub fn total(&self) -> f64 {
        self.both_localized
            + self.both_ballistic_same_side
            + self.both_ballistic_opposite_sides
            + self.split
            + self.unclassified
    }

    /// Name of the largest of the four classified fractions (gap mass is not
    /// a class).
    pub fn largest_class(&self) -> &'static str {
        [
            ("both_localized", self.both_localized),
            ("both_ballistic_same_side", self.both_ballistic_same_side),
            ("both_ballistic_opposite_sides", self.both_ballistic_opposite_sides),
            ("split", self.split),
        ]
        .into_iter()
        .fold(("", f64::NEG_INFINITY), |best, c| if c.1 > best.1 { c } else { best })
        .0
    }

    fn from_masses(masses: &RegionMasses) -> Self {
        let total = masses.total();
        let f = |m: f64| if total > 0.0 { m / total } else { 0.0 };
        PairClassification {
            both_localized: f(masses.both_localized),
            both_ballistic_same_side: f(masses.same_side),
            both_ballistic_opposite_sides: f(masses.opposite_sides),
            split: f(masses.split),
            unclassified: f(masses.unclassified),
        }
    }
}

/// Unnormalized region sums; linear in `Γ`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct RegionMasses {
    pub both_localized: f64,
    pub same_side: f64,
    pub opposite_sides: f64,
    pub split: f64,
    pub unclassified: f64,
}

impl RegionMasses {
    pub fn total(&self) -> f64 {
        self.both_localized + self.same_side + self.opposite_sides + self.split + self.unclassified
    }

    pub fn add(&mut self, other: &RegionMasses) {
        self.both_localized += other.both_localized;
        self.same_side += other.same_side;
        self.opposite_sides += other.opposite_sides;
        self.split += other.split;
        self.unclassified += other.unclassified;
    }

    pub fn scaled(&self, factor: f64) -> RegionMasses {
        RegionMasses {
            both_localized: self.both_localized * factor,
            same_side: self.same_side * factor,
            opposite_sides: self.opposite_sides * factor,
            split: self.split * factor,
            unclassified: self.unclassified * factor,
        }
    }

    pub fn classification(&self) -> PairClassification {
        PairClassification::from_masses(self)
    }
}

pub fn region_masses(gamma: &DMatrix<f64>, partition: &RegionPartition) -> Result<RegionMasses> {
    if gamma.nrows() != partition.size || gamma.ncols() != partition.size {
        return Err(Error::DimensionMismatch {
            expected: partition.size,
            actual: gamma.nrows(),
        });
    }
    let regions: Vec<Region> = (0..partition.size).map(|s| partition.region(s)).collect();
    let mut m = RegionMasses::default();
    for (r, &rr) in regions.iter().enumerate() {
        for (q, &rq) in regions.iter().enumerate() {
            let v = gamma[(q, r)];
            let slot = match (rq, rr) {
                (Region::Center, Region::Center) => &mut m.both_localized,
                (Region::Left, Region::Left) | (Region::Right, Region::Right) => &mut m.same_side,
                (Region::Left, Region::Right) | (Region::Right, Region::Left) => &mut m.opposite_sides,
                (Region::Center, Region::Left | Region::Right)
                | (Region::Left | Region::Right, Region::Center) => &mut m.split,
                _ => &mut m.unclassified,
            };
            *slot += v;
        }
    }
    Ok(m)
}

pub fn classify_pair_mass(
    gamma: &DMatrix<f64>,
    partition: &RegionPartition,
) -> Result<PairClassification> {
    Ok(region_masses(gamma, partition)?.classification())
}

/// Fraction of bond weight `|v_n||v_m|` carried by sign-alternating bonds;
/// 0 for a flat-phased mode, 1 for a fully staggered one.
pub fn staggering_measure_on(v: &[f64], bonds: &[(usize, usize)]) -> Result<f64> {
    if v.iter().all(|&x| x == 0.0) {
        return Err(Error::ZeroVector);
    }
    let (mut staggered, mut total) = (0.0, 0.0);
    for &(n, m) in bonds {
        let w = v[n].abs() * v[m].abs();
        total += w;
        if v[n] * v[m] < 0.0 {
            staggered += w;
        }
    }
    Ok(if total > 0.0 { staggered / total } else { 0.0 })
}

/// [`staggering_measure_on`] for a chain.
pub fn staggering_measure(v: &[f64]) -> Result<f64> {
    let bonds: Vec<(usize, usize)> = (1..v.len()).map(|n| (n - 1, n)).collect();
    staggering_measure_on(v, &bonds)
}

/// Density within `margin` sites of either end of a chain.
pub fn edge_leakage(density: &[f64], margin: usize) -> f64 {
    let n = density.len();
    density
        .iter()
        .enumerate()
        .filter(|&(r, _)| r < margin || r + margin >= n)
        .map(|(_, &v)| v)
        .sum()
}

/// Density within `margin` sites of any wall of the lattice.
pub fn edge_leakage_on(spec: &LatticeSpec, density: &[f64], margin: usize) -> Result<f64> {
    let mut leaked = 0.0;
    for (site, &v) in density.iter().enumerate() {
        if spec.boundary_distance(site)? < margin {
            leaked += v;
        }
    }
    Ok(leaked)
}

/// Margin used for the leakage figure reported with every slice.
pub const EDGE_MARGIN: usize = 5;

/// Scalar summary of one averaged two-particle slice.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairMetrics {
    pub time: f64,
    pub total: f64,
    pub max_asymmetry: f64,
    pub diagonal_fraction: f64,
    pub edge_leakage: f64,
    /// Fit of the density marginal about the midpoint of the input sites;
    /// absent when it fails or the envelope does not decay.
    pub localization: Option<LocalizationFit>,
    pub partition: Option<RegionPartition>,
    pub classification: Option<PairClassification>,
    pub largest_class: Option<String>,
    /// Over the whole `g(Δ)`; on a grid, along the axis joining the input
    /// sites.
    pub parity_contrast: Option<f64>,
    /// Restricted to the localized core of the partition.
    pub parity_contrast_core: Option<f64>,
}

/// Chains get the full set of metrics; grids get the sum rules, leakage and
/// the along-axis parity contrast when the input sites share a line.
pub fn pair_metrics(spec: &LatticeSpec, gamma: &CorrelationMatrix) -> Result<PairMetrics> {
    let density = matrix_marginal(&gamma.elements);
    let (a, b) = gamma.input.sites();
    let mut m = PairMetrics {
        time: gamma.time,
        total: gamma.total(),
        max_asymmetry: gamma.max_asymmetry(),
        diagonal_fraction: gamma.diagonal_fraction(),
        edge_leakage: edge_leakage_on(spec, &density, EDGE_MARGIN)?,
        localization: None,
        partition: None,
        classification: None,
        largest_class: None,
        parity_contrast: None,
        parity_contrast_core: None,
    };

    if spec.dimension() == 1 {
        let center = (a + b) as f64 / 2.0;
        m.localization = localization_fit(&density, center).ok().filter(|f| f.xi.is_finite());
        m.parity_contrast = parity_contrast(&distance_distribution(&gamma.elements), PARITY_WINDOW).ok();
        let xi = m.localization.map(|f| f.xi);
        if let Ok(p) = RegionPartition::from_density(&density, center, xi, &PartitionRule::default()) {
            let c = classify_pair_mass(&gamma.elements, &p)?;
            m.largest_class = Some(c.largest_class().to_string());
            m.classification = Some(c);
            let core = gamma.restricted(p.center.lo..=p.center.hi);
            m.parity_contrast_core = parity_contrast(&distance_distribution(&core), PARITY_WINDOW).ok();
            m.partition = Some(p);
        }
    } else {
        let (ca, cb) = (spec.site_coordinates(a)?, spec.site_coordinates(b)?);
        let differing: Vec<usize> = (0..spec.dimension()).filter(|&d| ca[d] != cb[d]).collect();
        if let [axis] = differing[..] {
            let g = distance_along_axis(gamma, spec, axis)?;
            m.parity_contrast = parity_contrast(&g, PARITY_WINDOW).ok();
        }
    }
    Ok(m)
}

/// Scalar summary of one averaged single-particle slice.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityMetrics {
    pub time: f64,
    pub total: f64,
    pub edge_leakage: f64,
    /// Chains only; fitted about the source site.
    pub localization: Option<LocalizationFit>,
}

pub fn density_metrics(spec: &LatticeSpec, source: usize, time: f64, density: &[f64]) -> Result<DensityMetrics> {
    Ok(DensityMetrics {
        time,
        total: density.iter().sum(),
        edge_leakage: edge_leakage_on(spec, density, EDGE_MARGIN)?,
        localization: if spec.dimension() == 1 {
            localization_fit(density, source as f64).ok().filter(|f| f.xi.is_finite())
        } else {
            None
        },
    })
}
