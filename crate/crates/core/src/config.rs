//! TOML run configurations and the bundled figure presets.
//!
//! ```toml
//! [lattice]
//! dimension = 1
//! extent = [99]
//! tunneling = 1.0
//! disorder_kind = "off_diagonal"
//! disorder_strength = 0.6
//!
//! [input]
//! variant = "separable_fermion"   # single_particle | separable_boson | path_entangled
//! site_a = 49                     # flat index, or [x, y] on a grid
//! site_b = 50
//!
//! [evolution]
//! times = [15.0, 60.0]
//!
//! [ensemble]
//! realizations = 1000
//! master_seed = 1
//!
//! [output]
//! directory = "out"
//! formats = ["csv"]
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::correlations::TwoParticleInput;
use crate::ensemble::{EnsembleConfig, Source};
use crate::error::{Error, Result};
use crate::lattice::{Boundary, DisorderKind, LatticeSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub lattice: LatticeSection,
    pub input: InputSection,
    pub evolution: EvolutionSection,
    #[serde(default)]
    pub ensemble: EnsembleSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<OutputSection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeSection {
    pub dimension: usize,
    pub extent: Vec<usize>,
    #[serde(default = "unit")]
    pub tunneling: f64,
    #[serde(default = "no_disorder")]
    pub disorder_kind: DisorderKind,
    #[serde(default)]
    pub disorder_strength: f64,
}

fn unit() -> f64 {
    1.0
}

fn no_disorder() -> DisorderKind {
    DisorderKind::None
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    SingleParticle,
    SeparableBoson,
    SeparableFermion,
    PathEntangled,
}

/// A site as a flat index or as grid coordinates.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SiteRef {
    Index(usize),
    Coords(Vec<usize>),
}

impl SiteRef {
    fn resolve(&self, spec: &LatticeSpec, key: &str) -> Result<usize> {
        let index = match self {
            SiteRef::Index(i) => *i,
            SiteRef::Coords(c) => {
                if c.len() != spec.dimension() {
                    return Err(Error::Config(format!(
                        "{key}: {} coordinates given for a {}-dimensional lattice",
                        c.len(),
                        spec.dimension()
                    )));
                }
                spec.site_index(c).map_err(|e| Error::Config(format!("{key}: {e}")))?
            }
        };
        if index >= spec.num_sites() {
            return Err(Error::Config(format!(
                "{key}: site {index} is outside the {}-site lattice",
                spec.num_sites()
            )));
        }
        Ok(index)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputSection {
    pub variant: Variant,
    pub site_a: SiteRef,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub site_b: Option<SiteRef>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolutionSection {
    pub times: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleSection {
    #[serde(default = "default_realizations")]
    pub realizations: usize,
    #[serde(default = "default_seed")]
    pub master_seed: u64,
    /// Execution hint only; never affects results.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
}

fn default_realizations() -> usize {
    1000
}

fn default_seed() -> u64 {
    1
}

impl Default for EnsembleSection {
    fn default() -> Self {
        EnsembleSection {
            realizations: default_realizations(),
            master_seed: default_seed(),
            workers: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub directory: Option<PathBuf>,
    #[serde(default = "default_formats")]
    pub formats: Vec<String>,
}

fn default_formats() -> Vec<String> {
    vec!["csv".into()]
}

pub const SUPPORTED_FORMATS: [&str; 1] = ["csv"];

impl RunConfig {
    /// Parse errors carry the TOML line and column.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let config: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.to_ensemble()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        RunConfig::from_toml_str(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn lattice_spec(&self) -> Result<LatticeSpec> {
        let l = &self.lattice;
        if l.dimension != l.extent.len() {
            return Err(Error::Config(format!(
                "lattice.extent: {} entries for dimension {}",
                l.extent.len(),
                l.dimension
            )));
        }
        let spec = LatticeSpec {
            extent: l.extent.clone(),
            tunneling: l.tunneling,
            disorder_kind: l.disorder_kind,
            disorder_strength: l.disorder_strength,
            boundary: Boundary::Open,
        };
        spec.validate().map_err(|e| Error::Config(format!("lattice: {e}")))?;
        Ok(spec)
    }

    pub fn source(&self) -> Result<Source> {
        let spec = self.lattice_spec()?;
        let i = &self.input;
        let a = i.site_a.resolve(&spec, "input.site_a")?;
        if i.theta.is_some() && i.variant != Variant::PathEntangled {
            return Err(Error::Config("input.theta: only path_entangled inputs take a phase".into()));
        }
        if i.variant == Variant::SingleParticle {
            if i.site_b.is_some() {
                return Err(Error::Config("input.site_b: a single particle has one site".into()));
            }
            return Ok(Source::SingleParticle { site: a });
        }
        let b = i
            .site_b
            .as_ref()
            .ok_or_else(|| Error::Config("input.site_b: required for two-particle inputs".into()))?
            .resolve(&spec, "input.site_b")?;
        let input = match i.variant {
            Variant::SeparableBoson => TwoParticleInput::boson(a, b),
            Variant::SeparableFermion => TwoParticleInput::fermion(a, b),
            Variant::PathEntangled => {
                let theta = i.theta.unwrap_or(0.0);
                if !theta.is_finite() {
                    return Err(Error::Config(format!("input.theta: {theta} is not finite")));
                }
                TwoParticleInput::path_entangled(a, b, theta)
            }
            Variant::SingleParticle => unreachable!(),
        };
        input
            .validate(spec.num_sites())
            .map_err(|e| Error::Config(format!("input: {e}")))?;
        Ok(Source::Pair(input))
    }

    pub fn to_ensemble(&self) -> Result<EnsembleConfig> {
        if let Some(out) = &self.output {
            if let Some(f) = out.formats.iter().find(|f| !SUPPORTED_FORMATS.contains(&f.as_str())) {
                return Err(Error::Config(format!(
                    "output.formats: unsupported format {f:?} (supported: {SUPPORTED_FORMATS:?})"
                )));
            }
        }
        let config = EnsembleConfig {
            lattice: self.lattice_spec()?,
            source: self.source()?,
            times: self.evolution.times.clone(),
            realizations: self.ensemble.realizations,
            master_seed: self.ensemble.master_seed,
            workers: self.ensemble.workers.unwrap_or(0),
        };
        config.validate().map_err(|e| match e {
            Error::InvalidEnsemble(msg) => Error::Config(format!("evolution/ensemble: {msg}")),
            other => Error::Config(other.to_string()),
        })?;
        Ok(config)
    }

    /// The experiment definition alone: no output location and no worker
    /// hint, so bundles from different machines or directories compare equal.
    pub fn echo(&self) -> RunConfig {
        RunConfig {
            output: None,
            ensemble: EnsembleSection {
                workers: None,
                ..self.ensemble.clone()
            },
            ..self.clone()
        }
    }
}

/// A named figure preset: shared settings plus one run per panel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Preset {
    pub name: String,
    pub description: String,
    pub lattice: LatticeSection,
    pub evolution: EvolutionSection,
    #[serde(default)]
    pub ensemble: EnsembleSection,
    pub panel: Vec<Panel>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Panel {
    pub name: String,
    pub input: InputSection,
    /// Panels showing disorder effects are dropped when the effective
    /// disorder strength is zero.
    #[serde(default = "yes")]
    pub disordered: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub disorder_strength: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub realizations: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub times: Option<Vec<f64>>,
}

fn yes() -> bool {
    true
}

const PRESET_SOURCES: [(&str, &str); 4] = [
    ("fig1", include_str!("../presets/fig1.toml")),
    ("fig2", include_str!("../presets/fig2.toml")),
    ("fig3", include_str!("../presets/fig3.toml")),
    ("fig4", include_str!("../presets/fig4.toml")),
];

pub fn preset_names() -> Vec<&'static str> {
    PRESET_SOURCES.iter().map(|p| p.0).collect()
}

pub fn preset(name: &str) -> Result<Preset> {
    let text = PRESET_SOURCES
        .iter()
        .find(|p| p.0 == name)
        .map(|p| p.1)
        .ok_or_else(|| {
            Error::Config(format!("unknown preset {name:?}; available: {}", preset_names().join(", ")))
        })?;
    toml::from_str(text).map_err(|e| Error::Config(format!("preset {name}: {e}")))
}

/// Overrides applied to every panel of a preset.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PresetOverrides {
    pub disorder_strength: Option<f64>,
    pub realizations: Option<usize>,
    pub master_seed: Option<u64>,
}

impl Preset {
    /// Runnable `(panel name, config)` pairs after overrides.
    pub fn panels(&self, overrides: &PresetOverrides) -> Result<Vec<(String, RunConfig)>> {
        let mut out = Vec::new();
        for p in &self.panel {
            let mut lattice = self.lattice.clone();
            if let Some(w) = p.disorder_strength {
                lattice.disorder_strength = w;
            }
            if p.disordered {
                if let Some(w) = overrides.disorder_strength {
                    lattice.disorder_strength = w;
                }
                if lattice.disorder_strength == 0.0 {
                    continue;
                }
            }
            let mut ensemble = self.ensemble.clone();
            if let Some(r) = p.realizations {
                ensemble.realizations = r;
            }
            if let Some(r) = overrides.realizations {
                if ensemble.realizations > 1 {
                    ensemble.realizations = r;
                }
            }
            if let Some(s) = overrides.master_seed {
                ensemble.master_seed = s;
            }
            let config = RunConfig {
                lattice,
                input: p.input.clone(),
                evolution: EvolutionSection {
                    times: p.times.clone().unwrap_or_else(|| self.evolution.times.clone()),
                },
                ensemble,
                output: None,
            };
            config.to_ensemble()?;
            out.push((p.name.clone(), config));
        }
        Ok(out)
    }
}
