//! The operations behind the command-line subcommands, returning structured
//! results so they can be driven and tested without a process boundary.

use std::fmt::Write as _;
use std::fs;
use std::io::{IsTerminal, Write};
use std::path::PathBuf;

use crate::analysis::{density_metrics, pair_metrics, DensityMetrics, PairMetrics};
use crate::config::{preset, PresetOverrides, RunConfig};
use crate::correlations::interparticle_distance;
use crate::ensemble::{run_ensemble_with_progress, EnsembleResult, Source};
use crate::error::{Error, Result};
use crate::lattice::{DisorderKind, LatticeSpec};
use crate::output::{time_tag, BundleWriter, Meta};
use crate::special::bessel_j;

/// Command-line overrides shared by the run commands.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub out: Option<PathBuf>,
    pub workers: Option<usize>,
    pub seed: Option<u64>,
    /// Print a progress line on stderr when it is a terminal.
    pub progress: bool,
}

#[derive(Debug, Clone)]
pub struct BundleSummary {
    pub dir: PathBuf,
    pub files: Vec<String>,
    pub density_metrics: Vec<DensityMetrics>,
    pub pair_metrics: Vec<PairMetrics>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    Density,
    Correlation,
}

fn out_dir(config: &RunConfig, opts: &RunOptions) -> Result<PathBuf> {
    opts.out
        .clone()
        .or_else(|| config.output.as_ref().and_then(|o| o.directory.clone()))
        .ok_or_else(|| Error::Config("no output directory: pass --out or set output.directory".into()))
}

fn apply_overrides(config: &RunConfig, opts: &RunOptions) -> RunConfig {
    let mut c = config.clone();
    if let Some(seed) = opts.seed {
        c.ensemble.master_seed = seed;
    }
    if let Some(w) = opts.workers {
        c.ensemble.workers = Some(w);
    }
    c
}

/// `n_r = Π_axes J²_{x_r − x_s}(2Tt)` on a clean lattice.
pub fn bessel_density(spec: &LatticeSpec, source: usize, time: f64) -> Result<Vec<f64>> {
    let origin = spec.site_coordinates(source)?;
    let x = 2.0 * spec.tunneling * time;
    (0..spec.num_sites())
        .map(|r| {
            let c = spec.site_coordinates(r)?;
            Ok(c.iter()
                .zip(&origin)
                .map(|(&a, &b)| bessel_j(a as i64 - b as i64, x).powi(2))
                .product())
        })
        .collect()
}

fn is_clean(spec: &LatticeSpec) -> bool {
    spec.disorder_kind == DisorderKind::None || spec.disorder_strength == 0.0
}

fn run(config: &RunConfig, opts: &RunOptions, kind: Kind) -> Result<BundleSummary> {
    let config = apply_overrides(config, opts);
    let dir = out_dir(&config, opts)?;
    let ensemble = config.to_ensemble()?;
    match (kind, ensemble.source) {
        (Kind::Density, Source::Pair(_)) => {
            return Err(Error::Config(
                "input.variant: density runs take a single_particle input".into(),
            ))
        }
        (Kind::Correlation, Source::SingleParticle { .. }) => {
            return Err(Error::Config(
                "input.variant: correlation runs take a two-particle input".into(),
            ))
        }
        _ => {}
    }

    let writer = BundleWriter::create(&dir)?;
    let show = opts.progress && std::io::stderr().is_terminal();
    let label = dir.display().to_string();
    let result = run_ensemble_with_progress(&ensemble, &mut |done, total| {
        if show {
            eprint!("\r{label}: {done}/{total} realizations");
            if done == total {
                eprintln!();
            }
            let _ = std::io::stderr().flush();
        }
    })?;
    write_bundle(writer, &config, &result, kind)
}

fn write_bundle(
    mut w: BundleWriter,
    config: &RunConfig,
    result: &EnsembleResult,
    kind: Kind,
) -> Result<BundleSummary> {
    let spec = &result.config.lattice;
    let mut dm = Vec::new();
    let mut pm = Vec::new();
    for slice in &result.slices {
        let tag = time_tag(slice.time);
        w.write_vector(
            &format!("density_{tag}.csv"),
            "site,density",
            slice.density.iter().copied().enumerate(),
        )?;
        match (&slice.correlation, result.config.source) {
            (Some(gamma), _) => {
                w.write_matrix(&format!("gamma_{tag}.csv"), &gamma.elements)?;
                w.write_vector(
                    &format!("g_{tag}.csv"),
                    "delta,g",
                    interparticle_distance(gamma).iter(),
                )?;
                pm.push(pair_metrics(spec, gamma)?);
            }
            (None, Source::SingleParticle { site }) => {
                if is_clean(spec) {
                    let reference = bessel_density(spec, site, slice.time)?;
                    w.write_vector(
                        &format!("bessel_{tag}.csv"),
                        "site,bessel",
                        reference.into_iter().enumerate(),
                    )?;
                }
                dm.push(density_metrics(spec, site, slice.time, &slice.density)?);
            }
            (None, Source::Pair(_)) => unreachable!("pair runs always carry a correlation matrix"),
        }
    }
    let meta = Meta {
        tool: env!("CARGO_PKG_NAME").into(),
        version: result.version.into(),
        command: match kind {
            Kind::Density => "density",
            Kind::Correlation => "correlation",
        }
        .into(),
        config: config.echo(),
        realizations: result.realizations,
        files: Vec::new(),
        density_metrics: dm.clone(),
        pair_metrics: pm.clone(),
    };
    let dir = w.dir().to_path_buf();
    let files = w.finish(meta)?;
    Ok(BundleSummary {
        dir,
        files,
        density_metrics: dm,
        pair_metrics: pm,
    })
}

pub fn cmd_density(config: &RunConfig, opts: &RunOptions) -> Result<BundleSummary> {
    run(config, opts, Kind::Density)
}

pub fn cmd_correlation(config: &RunConfig, opts: &RunOptions) -> Result<BundleSummary> {
    run(config, opts, Kind::Correlation)
}

/// Run every panel of every preset into `<out>/<preset>/<panel>/` and write
/// `<out>/<preset>/index.dat` listing `panel kind time file` per line.
pub fn cmd_figures(
    names: &[String],
    overrides: &PresetOverrides,
    opts: &RunOptions,
) -> Result<Vec<PathBuf>> {
    if names.is_empty() {
        return Err(Error::Config("no presets given".into()));
    }
    let root = opts
        .out
        .clone()
        .ok_or_else(|| Error::Config("figures needs --out".into()))?;
    let presets = names.iter().map(|n| preset(n)).collect::<Result<Vec<_>>>()?;
    let mut written = Vec::new();
    for p in presets {
        let base = root.join(&p.name);
        fs::create_dir_all(&base)?;
        let mut index = format!("# {}: {}\n# panel kind time file\n", p.name, p.description);
        for (panel, config) in p.panels(overrides)? {
            let kind = match config.to_ensemble()?.source {
                Source::SingleParticle { .. } => Kind::Density,
                Source::Pair(_) => Kind::Correlation,
            };
            let panel_opts = RunOptions {
                out: Some(base.join(&panel)),
                ..opts.clone()
            };
            let summary = run(&config, &panel_opts, kind)?;
            for f in &summary.files {
                if let Some((stem, time)) = f.strip_suffix(".csv").and_then(|s| s.split_once("_t")) {
                    writeln!(index, "{panel} {stem} {time} {panel}/{f}").expect("write to string");
                }
            }
            written.push(summary.dir);
        }
        fs::write(base.join("index.dat"), index)?;
    }
    Ok(written)
}

/// Exit status for an error, following the command-line contract.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Resource(_) | Error::Io(_) | Error::OracleTooLarge { .. } => 3,
        _ => 2,
    }
}
