//! Acceptance suite: one line per criterion, `PASS` or `FAIL`, with the
//! measured value next to its pinned threshold. Exits non-zero if any
//! criterion fails.

use std::f64::consts::PI;
use std::fs;
use std::path::Path;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use anderson_pairs::analysis::{
    classify_pair_mass, edge_leakage, localization_fit, pair_metrics, parity_contrast,
    PairClassification, PairMetrics, FIT_MAX_RESIDUAL,
};
use anderson_pairs::commands::{cmd_correlation, RunOptions};
use anderson_pairs::config::RunConfig;
use anderson_pairs::correlations::{
    correlation_single, density_marginal, distance_distribution, CorrelationMatrix, Statistics,
    TwoParticleInput,
};
use anderson_pairs::ensemble::{run_ensemble, EnsembleConfig, EnsembleResult, Source};
use anderson_pairs::lattice::{build_hamiltonian, DisorderKind, LatticeSpec};
use anderson_pairs::oracle::{fock_evolve_correlation, oracle_check};
use anderson_pairs::propagator::{decompose, evolve};

// 1
const BESSEL_SITES: usize = 201;
const BESSEL_TIME: f64 = 10.0;
const BESSEL_TOLERANCE: f64 = 1e-8;
const BESSEL_LEAKAGE: f64 = 1e-12;
const BESSEL_BUDGET: Duration = Duration::from_secs(1);
// 2
const UNITARY_SITES: usize = 64;
const UNITARY_TRIALS: usize = 100;
const UNITARITY_TOLERANCE: f64 = 1e-10;
const GROUP_TOLERANCE: f64 = 1e-9;
const UNITARY_BUDGET: Duration = Duration::from_secs(5);
// 3
const ORACLE_SITES: usize = 7;
const ORACLE_TRIALS: usize = 100;
const ORACLE_TOLERANCE: f64 = 1e-9;
const ORACLE_BUDGET: Duration = Duration::from_secs(30);
// 4
const SUM_TOLERANCE: f64 = 1e-9;
const SYMMETRY_TOLERANCE: f64 = 1e-12;
const FERMION_DIAGONAL: f64 = 1e-16;
const MARGINAL_TOLERANCE: f64 = 1e-12;
// 5–8
const CHAIN_SITES: usize = 99;
const DISORDER: f64 = 0.6;
const REALIZATIONS: usize = 1000;
const MASTER_SEED: u64 = 1;
const INTERMEDIATE: f64 = 15.0;
const LATE: f64 = 60.0;
const VERY_LATE: f64 = 120.0;
const CORNER_RATIO: f64 = 0.1;
const PARITY_MARGIN: f64 = 0.05;
const PARITY_WINDOW: usize = 10;
/// Boson separation-2 split fraction at t = 15, measured 0.0469 with the
/// default preset and frozen here.
const BOSON_SPLIT_MAX: f64 = 0.05;
const ENSEMBLE_BUDGET: Duration = Duration::from_secs(180);
// 9
const EARLY: f64 = 2.5;
const XI_CHANGE: f64 = 0.5;
// 10
const GRID: usize = 21;
const GRID_REALIZATIONS: usize = 100;
const GRID_TIME: f64 = 4.0;
const GRID_BUDGET: Duration = Duration::from_secs(600);
// 11
const WORKER_COUNTS: [usize; 2] = [1, 8];

struct Report {
    lines: usize,
    failures: usize,
}

impl Report {
    fn line(&mut self, id: &str, pass: bool, text: String) {
        self.lines += 1;
        if !pass {
            self.failures += 1;
        }
        println!("{} {id:<5} {text}", if pass { "PASS" } else { "FAIL" });
    }
}

/// `J_n(x)` for `0 ≤ n ≤ n_max` by Miller's backward recurrence, normalized
/// with `J_0 + 2 Σ J_2k = 1`.
fn bessel_table(n_max: usize, x: f64) -> Vec<f64> {
    let start = 2 * ((n_max + x.ceil() as usize + 40) / 2);
    let mut j = vec![0.0; start + 2];
    j[start] = 1e-280;
    for k in (1..=start).rev() {
        j[k - 1] = 2.0 * k as f64 / x * j[k] - j[k + 1];
        if j[k - 1].abs() > 1e250 {
            j.iter_mut().for_each(|v| *v *= 1e-250);
        }
    }
    let norm = j[0] + 2.0 * j.iter().skip(2).step_by(2).sum::<f64>();
    j.truncate(n_max + 1);
    j.iter().map(|v| v / norm).collect()
}

fn chain() -> LatticeSpec {
    LatticeSpec::chain(CHAIN_SITES, 1.0).with_disorder(DisorderKind::OffDiagonal, DISORDER)
}

fn ensemble(source: Source, times: Vec<f64>) -> EnsembleConfig {
    EnsembleConfig {
        lattice: chain(),
        source,
        times,
        realizations: REALIZATIONS,
        master_seed: MASTER_SEED,
        workers: 0,
    }
}

fn slice(result: &EnsembleResult, time: f64) -> &CorrelationMatrix {
    result
        .slices
        .iter()
        .find(|s| s.time == time)
        .and_then(|s| s.correlation.as_ref())
        .expect("time on grid")
}

fn classification(spec: &LatticeSpec, g: &CorrelationMatrix) -> (PairMetrics, PairClassification) {
    let m = pair_metrics(spec, g).expect("metrics");
    let c = classify_pair_mass(&g.elements, m.partition.as_ref().expect("partition")).unwrap();
    (m, c)
}

/// Sum rules and symmetry of one Γ; returns the worst violation of each.
#[derive(Default)]
struct SumRules {
    checked: usize,
    total: f64,
    symmetry: f64,
    fermion_diagonal: f64,
    negative: f64,
}

impl SumRules {
    fn check(&mut self, g: &CorrelationMatrix) {
        self.checked += 1;
        self.total = self.total.max((g.total() - 2.0).abs());
        self.symmetry = self.symmetry.max(g.max_asymmetry());
        self.negative = self.negative.min(g.min_element());
        if g.input.statistics() == Statistics::Fermion {
            self.fermion_diagonal = self.fermion_diagonal.max(g.max_diagonal());
        }
    }

    fn passed(&self) -> bool {
        self.total < SUM_TOLERANCE
            && self.symmetry < SYMMETRY_TOLERANCE
            && self.fermion_diagonal < FERMION_DIAGONAL
            && self.negative >= 0.0
    }
}

fn max_abs(m: &DMatrix<Complex64>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn bundles_identical(a: &Path, b: &Path) -> Result<usize, String> {
    let mut names: Vec<_> = fs::read_dir(a)
        .map_err(|e| e.to_string())?
        .map(|e| e.unwrap().file_name())
        .collect();
    names.sort();
    let other = fs::read_dir(b).map_err(|e| e.to_string())?.count();
    if other != names.len() {
        return Err(format!("{} vs {other} files", names.len()));
    }
    for n in &names {
        if fs::read(a.join(n)).unwrap() != fs::read(b.join(n)).unwrap() {
            return Err(format!("{} differs", n.to_string_lossy()));
        }
    }
    Ok(names.len())
}

fn main() -> ExitCode {
    let mut r = Report { lines: 0, failures: 0 };
    let mut sums = SumRules::default();

    // 1. Clean-chain quantum walk against Bessel functions.
    let start = Instant::now();
    let spec = LatticeSpec::chain(BESSEL_SITES, 1.0);
    let center = BESSEL_SITES / 2;
    let d = decompose(&build_hamiltonian(&spec, 0).unwrap()).unwrap();
    let n: Vec<f64> = d.column(BESSEL_TIME, center).unwrap().iter().map(|z| z.norm_sqr()).collect();
    let elapsed = start.elapsed();
    let j = bessel_table(center, 2.0 * BESSEL_TIME);
    let err = n
        .iter()
        .enumerate()
        .map(|(site, v)| (v - j[site.abs_diff(center)].powi(2)).abs())
        .fold(0.0, f64::max);
    let leak = edge_leakage(&n, 5);
    r.line(
        "1",
        err < BESSEL_TOLERANCE && leak < BESSEL_LEAKAGE && elapsed < BESSEL_BUDGET,
        format!(
            "Bessel walk N={BESSEL_SITES} 2Tt=20: max|n−J²|={err:.2e} (<{BESSEL_TOLERANCE:.0e}), \
             leakage={leak:.2e} (<{BESSEL_LEAKAGE:.0e}), {elapsed:.2?} (<{BESSEL_BUDGET:?})"
        ),
    );

    // 2. Unitarity and the group property.
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let spec = LatticeSpec::chain(UNITARY_SITES, 1.0).with_disorder(DisorderKind::Both, 0.9);
    let (mut unitarity, mut group) = (0.0_f64, 0.0_f64);
    for _ in 0..UNITARY_TRIALS {
        let d = decompose(&build_hamiltonian(&spec, rng.random()).unwrap()).unwrap();
        let (t1, t2) = (rng.random_range(0.0..20.0), rng.random_range(0.0..20.0));
        let (u1, u2, u12) = (evolve(&d, t1), evolve(&d, t2), evolve(&d, t1 + t2));
        unitarity = unitarity.max(u1.unitarity_error()).max(u12.unitarity_error());
        group = group.max(max_abs(&(&u12.elements - &u1.elements * &u2.elements)));
    }
    let elapsed = start.elapsed();
    r.line(
        "2",
        unitarity < UNITARITY_TOLERANCE && group < GROUP_TOLERANCE && elapsed < UNITARY_BUDGET,
        format!(
            "unitarity over {UNITARY_TRIALS} H (N={UNITARY_SITES}): ‖U†U−I‖={unitarity:.2e} \
             (<{UNITARITY_TOLERANCE:.0e}), ‖U(t1+t2)−U(t1)U(t2)‖={group:.2e} (<{GROUP_TOLERANCE:.0e}), \
             {elapsed:.2?} (<{UNITARY_BUDGET:?})"
        ),
    );

    // 3. Closed forms against brute-force Fock evolution.
    let start = Instant::now();
    let report = oracle_check(ORACLE_SITES, ORACLE_TRIALS, 3).unwrap();
    let elapsed = start.elapsed();
    let worst = report
        .worst
        .as_ref()
        .map(|w| format!(" worst at q={} r={} t={} {}", w.q, w.r, w.time, w.variant))
        .unwrap_or_default();
    r.line(
        "3",
        report.max_error() < ORACLE_TOLERANCE && elapsed < ORACLE_BUDGET,
        format!(
            "oracle N={ORACLE_SITES}, {ORACLE_TRIALS} trials: max|Γ−Γ_Fock|={:.2e} \
             (<{ORACLE_TOLERANCE:.0e}),{worst}, {elapsed:.2?} (<{ORACLE_BUDGET:?})",
            report.max_error()
        ),
    );

    // Disorder ensembles shared by 4–8.
    let start = Instant::now();
    let times = vec![INTERMEDIATE, LATE, VERY_LATE];
    let run = |input| run_ensemble(&ensemble(Source::Pair(input), times.clone())).unwrap();
    let boson_adj = run(TwoParticleInput::boson(49, 50));
    let fermion_adj = run(TwoParticleInput::fermion(49, 50));
    let adjacent_elapsed = start.elapsed();
    let boson_sep = run(TwoParticleInput::boson(48, 50));
    let fermion_sep = run(TwoParticleInput::fermion(48, 50));
    let entangled_0 = run(TwoParticleInput::path_entangled(49, 50, 0.0));
    let entangled_pi = run(TwoParticleInput::path_entangled(48, 50, PI));
    let all_elapsed = start.elapsed();

    // 4. Sum rules on every Γ computed here, single and averaged, and the
    // boson/fermion marginal identity.
    for res in [&boson_adj, &fermion_adj, &boson_sep, &fermion_sep, &entangled_0, &entangled_pi] {
        for s in &res.slices {
            sums.check(s.correlation.as_ref().unwrap());
        }
    }
    let mut marginal = 0.0_f64;
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..20 {
        let u = evolve(
            &decompose(&build_hamiltonian(&chain(), rng.random()).unwrap()).unwrap(),
            rng.random_range(0.0..60.0),
        );
        let a = rng.random_range(0..CHAIN_SITES - 3);
        let b = a + rng.random_range(1..3);
        let gb = correlation_single(&u, &TwoParticleInput::boson(a, b)).unwrap();
        let gf = correlation_single(&u, &TwoParticleInput::fermion(a, b)).unwrap();
        sums.check(&gb);
        sums.check(&gf);
        for (x, y) in density_marginal(&gb).iter().zip(density_marginal(&gf)) {
            marginal = marginal.max((x - y).abs());
        }
    }
    let averaged_marginal = boson_adj
        .slices
        .iter()
        .zip(&fermion_adj.slices)
        .flat_map(|(b, f)| b.density.iter().zip(&f.density).map(|(x, y)| (x - y).abs()))
        .fold(0.0, f64::max);
    r.line(
        "4",
        sums.passed() && marginal < MARGINAL_TOLERANCE && averaged_marginal < MARGINAL_TOLERANCE,
        format!(
            "sum rules over {} Γ: |ΣΓ−2|={:.1e} (<{SUM_TOLERANCE:.0e}), asym={:.1e} \
             (<{SYMMETRY_TOLERANCE:.0e}), fermion diag={:.1e} (<{FERMION_DIAGONAL:.0e}), min={:.1e}; \
             boson−fermion marginal {marginal:.1e} single, {averaged_marginal:.1e} averaged (<{MARGINAL_TOLERANCE:.0e})",
            sums.checked, sums.total, sums.symmetry, sums.fermion_diagonal, sums.negative
        ),
    );

    // 5. Adjacent input at the intermediate time.
    let spec = chain();
    let (_, cb) = classification(&spec, slice(&boson_adj, INTERMEDIATE));
    let (mf, cf) = classification(&spec, slice(&fermion_adj, INTERMEDIATE));
    let boson_ratio = cb.both_ballistic_opposite_sides / cb.both_ballistic_same_side;
    let fermion_ratio = cf.both_ballistic_same_side / cf.both_ballistic_opposite_sides;
    let fermion_parity = mf.parity_contrast.unwrap();
    r.line(
        "5a",
        boson_ratio < CORNER_RATIO,
        format!("boson adjacent t={INTERMEDIATE}: opposite/same corner mass {boson_ratio:.4} (<{CORNER_RATIO})"),
    );
    r.line(
        "5b",
        fermion_ratio < CORNER_RATIO,
        format!("fermion adjacent t={INTERMEDIATE}: same/opposite corner mass {fermion_ratio:.4} (<{CORNER_RATIO})"),
    );
    r.line(
        "5c",
        fermion_parity > PARITY_MARGIN,
        format!("fermion adjacent t={INTERMEDIATE}: parity contrast ℓ={PARITY_WINDOW} {fermion_parity:+.4} (>{PARITY_MARGIN})"),
    );
    r.line(
        "5d",
        adjacent_elapsed < ENSEMBLE_BUDGET,
        format!(
            "two R={REALIZATIONS} N={CHAIN_SITES} ensembles in {adjacent_elapsed:.1?} (<{ENSEMBLE_BUDGET:?}); \
             all six in {all_elapsed:.1?}"
        ),
    );

    // 6. Separation-2 input.
    let (mb, cb) = classification(&spec, slice(&boson_sep, INTERMEDIATE));
    let (_, cf) = classification(&spec, slice(&fermion_sep, INTERMEDIATE));
    let core_parity = mb.parity_contrast_core.unwrap();
    r.line(
        "6a",
        cb.split < BOSON_SPLIT_MAX,
        format!("boson separation-2 t={INTERMEDIATE}: split mass {:.4} (<{BOSON_SPLIT_MAX})", cb.split),
    );
    r.line(
        "6b",
        core_parity < -PARITY_MARGIN,
        format!(
            "boson separation-2 t={INTERMEDIATE}: parity contrast in localized core {core_parity:+.4} (<−{PARITY_MARGIN})"
        ),
    );
    r.line(
        "6c",
        cf.largest_class() == "split",
        format!(
            "fermion separation-2 t={INTERMEDIATE}: largest class {} (split {:.4}, both localized {:.4})",
            cf.largest_class(),
            cf.split,
            cf.both_localized
        ),
    );

    // 7. Path-entangled inputs.
    let g0 = slice(&entangled_0, INTERMEDIATE);
    let (_, c0) = classification(&spec, g0);
    let same_opposite = c0.both_ballistic_same_side / c0.both_ballistic_opposite_sides;
    let fermion_diag = slice(&fermion_adj, INTERMEDIATE).diagonal_fraction();
    r.line(
        "7a",
        same_opposite < CORNER_RATIO,
        format!("path-entangled θ=0 adjacent t={INTERMEDIATE}: same/opposite corner mass {same_opposite:.4} (<{CORNER_RATIO})"),
    );
    r.line(
        "7b",
        g0.diagonal_fraction() > fermion_diag,
        format!(
            "path-entangled θ=0 adjacent: diagonal fraction {:.4} (> fermion {fermion_diag:.1e})",
            g0.diagonal_fraction()
        ),
    );
    let gpi = slice(&entangled_pi, INTERMEDIATE);
    let (_, cpi) = classification(&spec, gpi);
    let fermion_sep_diag = slice(&fermion_sep, INTERMEDIATE).diagonal_fraction();
    r.line(
        "7c",
        cpi.largest_class() == "split" && gpi.diagonal_fraction() > fermion_sep_diag,
        format!(
            "path-entangled θ=π separation-2: largest class {} (split {:.4}), diagonal fraction {:.4} (> fermion {fermion_sep_diag:.1e})",
            cpi.largest_class(),
            cpi.split,
            gpi.diagonal_fraction()
        ),
    );

    // 8. Parity contrast persists.
    let late: Vec<f64> = [LATE, VERY_LATE]
        .iter()
        .map(|&t| parity_contrast(&distance_distribution(&slice(&fermion_adj, t).elements), PARITY_WINDOW).unwrap())
        .collect();
    r.line(
        "8",
        late.iter().all(|&c| c > PARITY_MARGIN),
        format!(
            "fermion adjacent parity contrast t={LATE}: {:+.4}, t={VERY_LATE}: {:+.4} (>{PARITY_MARGIN})",
            late[0], late[1]
        ),
    );

    // 9. Ballistic to localized crossover of the single-particle density.
    let single = run_ensemble(&ensemble(Source::SingleParticle { site: 49 }, vec![EARLY, LATE])).unwrap();
    let fit_late = localization_fit(&single.slices[1].density, 49.0);
    let fit_early = localization_fit(&single.slices[0].density, 49.0);
    let late_ok = fit_late.as_ref().is_ok_and(|f| f.is_exponential());
    let early_describe;
    let early_ok = match (&fit_early, &fit_late) {
        (Err(_), _) => {
            early_describe = "fit failed".to_string();
            true
        }
        (Ok(e), Ok(l)) => {
            let change = (e.xi - l.xi).abs() / l.xi;
            early_describe = format!("ξ={:.3} residual={:.3}, change vs late {:.0}%", e.xi, e.residual, 100.0 * change);
            e.residual >= FIT_MAX_RESIDUAL || change > XI_CHANGE
        }
        (Ok(e), Err(_)) => {
            early_describe = format!("ξ={:.3} residual={:.3}", e.xi, e.residual);
            e.residual >= FIT_MAX_RESIDUAL
        }
    };
    let late_describe = match &fit_late {
        Ok(f) => format!("ξ={:.2} residual={:.3}", f.xi, f.residual),
        Err(e) => e.to_string(),
    };
    r.line(
        "9",
        late_ok && early_ok,
        format!(
            "single particle t={LATE}: {late_describe} (finite, residual <{FIT_MAX_RESIDUAL}); \
             2Tt=5: {early_describe} (fit fails, residual ≥{FIT_MAX_RESIDUAL} or ξ change >{:.0}%)",
            100.0 * XI_CHANGE
        ),
    );

    // 10. Two dimensions.
    let start = Instant::now();
    let small = LatticeSpec::grid(3, 3, 1.0).with_disorder(DisorderKind::OffDiagonal, DISORDER);
    let mut grid_oracle = 0.0_f64;
    for seed in 0..5 {
        let h = build_hamiltonian(&small, seed).unwrap();
        let u = evolve(&decompose(&h).unwrap(), 2.0);
        let input = TwoParticleInput::fermion(4, 5);
        let closed = correlation_single(&u, &input).unwrap();
        let brute = fock_evolve_correlation(&h, &input, 2.0).unwrap();
        grid_oracle = grid_oracle.max((&closed.elements - &brute.elements).amax());
    }
    let grid = LatticeSpec::grid(GRID, GRID, 1.0).with_disorder(DisorderKind::OffDiagonal, DISORDER);
    let a = grid.site_index(&[GRID / 2, GRID / 2]).unwrap();
    let b = grid.site_index(&[GRID / 2, GRID / 2 + 1]).unwrap();
    let res = run_ensemble(&EnsembleConfig {
        lattice: grid.clone(),
        source: Source::Pair(TwoParticleInput::fermion(a, b)),
        times: vec![GRID_TIME],
        realizations: GRID_REALIZATIONS,
        master_seed: MASTER_SEED,
        workers: 0,
    })
    .unwrap();
    let g2 = slice(&res, GRID_TIME);
    let mut grid_sums = SumRules::default();
    grid_sums.check(g2);
    let m2 = pair_metrics(&grid, g2).unwrap();
    let parity_2d = m2.parity_contrast.unwrap();
    let elapsed = start.elapsed();
    r.line(
        "10",
        grid_oracle < ORACLE_TOLERANCE && grid_sums.passed() && parity_2d > 0.0 && elapsed < GRID_BUDGET,
        format!(
            "{GRID}×{GRID} fermion R={GRID_REALIZATIONS} t={GRID_TIME}: 3×3 oracle {grid_oracle:.1e} \
             (<{ORACLE_TOLERANCE:.0e}), |ΣΓ−2|={:.1e}, along-axis parity {parity_2d:+.4} (>0), {elapsed:.1?} (<{GRID_BUDGET:?})",
            grid_sums.total
        ),
    );

    // 11. Bundles do not depend on the worker count.
    let root = tempfile::tempdir().unwrap();
    let mut outcome = Ok(0);
    for (label, input) in [
        ("separable_boson", TwoParticleInput::boson(49, 50)),
        ("separable_fermion", TwoParticleInput::fermion(49, 50)),
    ] {
        let text = format!(
            "[lattice]\ndimension = 1\nextent = [{CHAIN_SITES}]\ndisorder_kind = \"off_diagonal\"\n\
             disorder_strength = {DISORDER}\n\n[input]\nvariant = \"{label}\"\nsite_a = {}\nsite_b = {}\n\n\
             [evolution]\ntimes = [{INTERMEDIATE:?}, {LATE:?}, {VERY_LATE:?}]\n\n[ensemble]\n\
             realizations = {REALIZATIONS}\nmaster_seed = {MASTER_SEED}\n",
            input.sites().0,
            input.sites().1
        );
        let config = RunConfig::from_toml_str(&text).unwrap();
        let dirs: Vec<_> = WORKER_COUNTS
            .iter()
            .map(|&w| {
                let dir = root.path().join(format!("{label}_{w}"));
                cmd_correlation(
                    &config,
                    &RunOptions {
                        out: Some(dir.clone()),
                        workers: Some(w),
                        ..Default::default()
                    },
                )
                .unwrap();
                dir
            })
            .collect();
        outcome = outcome.and_then(|count| bundles_identical(&dirs[0], &dirs[1]).map(|c| count + c));
    }
    r.line(
        "11",
        outcome.is_ok(),
        match &outcome {
            Ok(files) => format!("criterion-5 bundles with workers {WORKER_COUNTS:?}: {files} files byte-identical"),
            Err(e) => format!("criterion-5 bundles with workers {WORKER_COUNTS:?}: {e}"),
        },
    );

    println!("{} of {} criterion lines failed", r.failures, r.lines);
    if r.failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
