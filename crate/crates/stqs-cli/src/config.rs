//! TOML configuration schema and parsing.
//!
//! One human-editable document with four sections: `[experiment]` describes
//! the run, `[noise]` the platform profile and scope, `[sweep]` optional
//! named grids, `[output]` where results go. Unknown keys are rejected so
//! misspellings never fall back to silent defaults.

use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use stqs_core::experiment::{
    BackendChoice, ExperimentConfig, ExperimentKind, ScalingMode, SwapBase, DEFAULT_SHOTS,
};
use stqs_core::noise::{default_profile, ErrorClass, NoiseProfile, NoiseScope, Platform};
use stqs_core::pipeline::CorrectionMode;
use stqs_core::state::Role;

fn default_shots() -> u64 {
    DEFAULT_SHOTS
}

fn default_backend() -> BackendChoice {
    BackendChoice::Auto
}

fn default_correction() -> CorrectionMode {
    CorrectionMode::PostProcessing
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSection {
    pub kind: ExperimentKind,
    #[serde(default = "three")]
    pub n_s: usize,
    #[serde(default = "three")]
    pub n_f: usize,
    #[serde(default = "four")]
    pub n_dm: usize,
    #[serde(default = "two")]
    pub n_probes: usize,
    #[serde(default = "ghz_mode")]
    pub scaling_mode: ScalingMode,
    #[serde(default = "dm_base")]
    pub swap_base: SwapBase,
    #[serde(default)]
    pub phi: f64,
    #[serde(default)]
    pub phi_soil: f64,
    #[serde(default)]
    pub phi_free: f64,
    #[serde(default = "default_shots")]
    pub shots: u64,
    #[serde(default = "default_backend")]
    pub backend: BackendChoice,
    #[serde(default)]
    pub post_select: bool,
    #[serde(default)]
    pub delay_tau: f64,
    #[serde(default = "default_correction")]
    pub correction: CorrectionMode,
}

fn three() -> usize {
    3
}
fn four() -> usize {
    4
}
fn two() -> usize {
    2
}
fn ghz_mode() -> ScalingMode {
    ScalingMode::Ghz
}
fn dm_base() -> SwapBase {
    SwapBase::DarkMatter
}

/// Platform selector accepting the registry names plus `noiseless`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlatformChoice {
    TrappedIon,
    Rydberg,
    Superconducting,
    NvCenter,
    Custom,
    Noiseless,
}

impl PlatformChoice {
    pub fn profile(&self) -> NoiseProfile {
        match self {
            PlatformChoice::TrappedIon => default_profile(Platform::TrappedIon),
            PlatformChoice::Rydberg => default_profile(Platform::Rydberg),
            PlatformChoice::Superconducting => default_profile(Platform::Superconducting),
            PlatformChoice::NvCenter => default_profile(Platform::NvCenter),
            PlatformChoice::Custom | PlatformChoice::Noiseless => NoiseProfile::noiseless(),
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            PlatformChoice::TrappedIon => "trapped_ion",
            PlatformChoice::Rydberg => "rydberg",
            PlatformChoice::Superconducting => "superconducting",
            PlatformChoice::NvCenter => "nv_center",
            PlatformChoice::Custom => "custom",
            PlatformChoice::Noiseless => "noiseless",
        }
    }
}

/// Per-field profile overrides; unset fields keep the platform default.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileOverride {
    pub t1: Option<f64>,
    pub t2: Option<f64>,
    pub sge: Option<f64>,
    pub tge: Option<f64>,
    pub spe: Option<f64>,
    /// Symmetric measurement flip rate.
    pub me: Option<f64>,
    pub me01: Option<f64>,
    pub me10: Option<f64>,
    pub single_gate_time: Option<f64>,
    pub two_gate_time: Option<f64>,
    pub readout_time: Option<f64>,
}

impl ProfileOverride {
    pub fn apply(&self, mut profile: NoiseProfile) -> NoiseProfile {
        if let Some(v) = self.t1 {
            profile.t1 = v;
        }
        if let Some(v) = self.t2 {
            profile.t2 = v;
        }
        if let Some(v) = self.sge {
            profile.sge = v;
        }
        if let Some(v) = self.tge {
            profile.tge = v;
        }
        if let Some(v) = self.spe {
            profile.spe = v;
        }
        if let Some(v) = self.me {
            profile.me = (v, v);
        }
        if let Some(v) = self.me01 {
            profile.me.0 = v;
        }
        if let Some(v) = self.me10 {
            profile.me.1 = v;
        }
        if let Some(v) = self.single_gate_time {
            profile.durations.single_gate = v;
        }
        if let Some(v) = self.two_gate_time {
            profile.durations.two_gate = v;
        }
        if let Some(v) = self.readout_time {
            profile.durations.readout = v;
        }
        profile
    }

    /// Short bracket annotation for the CSV platform column.
    pub fn label(&self) -> String {
        let mut parts = Vec::new();
        let fmt = |v: f64| {
            if v.is_infinite() {
                "inf".to_string()
            } else {
                format!("{v}")
            }
        };
        if let Some(v) = self.t1 {
            parts.push(format!("t1={}", fmt(v)));
        }
        if let Some(v) = self.t2 {
            parts.push(format!("t2={}", fmt(v)));
        }
        if let Some(v) = self.sge {
            parts.push(format!("sge={}", fmt(v)));
        }
        if let Some(v) = self.tge {
            parts.push(format!("tge={}", fmt(v)));
        }
        if let Some(v) = self.spe {
            parts.push(format!("spe={}", fmt(v)));
        }
        if let Some(v) = self.me {
            parts.push(format!("me={}", fmt(v)));
        }
        parts.join(",")
    }
}

fn all_classes() -> Vec<ErrorClass> {
    ErrorClass::all().to_vec()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSection {
    pub platform: PlatformChoice,
    #[serde(default)]
    pub epsilon: f64,
    /// Error classes that are attached (and epsilon-scaled). Everything
    /// else stays off. Defaults to all classes.
    #[serde(default = "all_classes")]
    pub classes: Vec<ErrorClass>,
    /// Qubit roles that receive noise; empty means all.
    #[serde(default)]
    pub roles: Vec<Role>,
    #[serde(default, rename = "override")]
    pub override_: ProfileOverride,
}

impl Default for NoiseSection {
    fn default() -> Self {
        Self {
            platform: PlatformChoice::Noiseless,
            epsilon: 0.0,
            classes: all_classes(),
            roles: Vec::new(),
            override_: ProfileOverride::default(),
        }
    }
}

impl NoiseSection {
    pub fn profile(&self) -> NoiseProfile {
        self.override_.apply(self.platform.profile())
    }

    pub fn scope(&self) -> NoiseScope {
        NoiseScope {
            epsilon: self.epsilon,
            enabled_classes: self.classes.iter().copied().collect(),
            role_filter: self.roles.iter().copied().collect(),
        }
    }

    pub fn platform_label(&self) -> String {
        let o = self.override_.label();
        if o.is_empty() {
            self.platform.label().to_string()
        } else {
            format!("{}[{o}]", self.platform.label())
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    #[serde(default = "one")]
    pub repetitions: usize,
    #[serde(default)]
    pub shots: Vec<u64>,
    /// Sensor counts: n_dm for dark matter, n_s = n_f for radar,
    /// probe count for scaling.
    #[serde(default)]
    pub n: Vec<usize>,
    #[serde(default)]
    pub phi: Vec<f64>,
    #[serde(default)]
    pub epsilon: Vec<f64>,
    #[serde(default)]
    pub platform: Vec<PlatformChoice>,
    #[serde(default)]
    pub classes: Vec<Vec<ErrorClass>>,
    #[serde(default)]
    pub roles: Vec<Vec<Role>>,
    #[serde(default)]
    pub overrides: Vec<ProfileOverride>,
}

fn one() -> usize {
    1
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            repetitions: 1,
            shots: Vec::new(),
            n: Vec::new(),
            phi: Vec::new(),
            epsilon: Vec::new(),
            platform: Vec::new(),
            classes: Vec::new(),
            roles: Vec::new(),
            overrides: Vec::new(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default = "default_out")]
    pub path: String,
    #[serde(default)]
    pub format: OutputFormat,
    #[serde(default)]
    pub seed: u64,
    /// Worker threads; 0 means one per core.
    #[serde(default)]
    pub jobs: usize,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            path: default_out(),
            format: OutputFormat::Csv,
            seed: 0,
            jobs: 0,
        }
    }
}

fn default_out() -> String {
    "results.csv".to_string()
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    #[default]
    Csv,
    Jsonl,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub experiment: ExperimentSection,
    #[serde(default)]
    pub noise: NoiseSection,
    #[serde(default)]
    pub sweep: SweepSection,
    #[serde(default)]
    pub output: OutputSection,
}

impl ConfigFile {
    /// Base experiment config before any sweep-axis substitution.
    pub fn base_experiment(&self) -> ExperimentConfig {
        let e = &self.experiment;
        let mut config = match e.kind {
            ExperimentKind::Radar => {
                ExperimentConfig::radar(e.n_s, e.n_f, e.phi_soil, e.phi_free)
            }
            ExperimentKind::DarkMatter => ExperimentConfig::dark_matter(e.n_dm, e.phi),
            ExperimentKind::Scaling => {
                ExperimentConfig::scaling(e.n_probes, e.scaling_mode, e.phi)
            }
            ExperimentKind::SwapTest => {
                let mut c = ExperimentConfig::swap_test(e.swap_base);
                c.n_s = e.n_s;
                c.n_f = e.n_f;
                c.n_dm = e.n_dm;
                c.phi = e.phi;
                c.phi_soil = e.phi_soil;
                c.phi_free = e.phi_free;
                c
            }
        };
        config.shots = e.shots;
        config.backend = e.backend;
        config.post_select = e.post_select;
        config.delay_tau = e.delay_tau;
        config.correction = e.correction;
        config.profile = self.noise.profile();
        config.scope = self.noise.scope();
        config
    }

    /// Effective document with every default resolved, for the round-trip
    /// guarantee: re-parsing this text yields an identical config.
    pub fn effective_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.noise.epsilon) {
            bail!("noise.epsilon = {} outside [0, 1]", self.noise.epsilon);
        }
        for &eps in &self.sweep.epsilon {
            if !(0.0..=1.0).contains(&eps) {
                bail!("sweep.epsilon value {eps} outside [0, 1]");
            }
        }
        if self.sweep.repetitions == 0 {
            bail!("sweep.repetitions must be at least 1");
        }
        self.base_experiment()
            .validate()
            .context("experiment section invalid")?;
        Ok(())
    }
}

/// Parse and validate a config document from disk.
pub fn parse_config(path: &Path) -> Result<ConfigFile> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read config file {}", path.display()))?;
    parse_config_str(&text)
}

pub fn parse_config_str(text: &str) -> Result<ConfigFile> {
    let config: ConfigFile = toml::from_str(text).context("config schema violation")?;
    config.validate()?;
    Ok(config)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_dark_matter_config_fills_defaults() {
        let config = parse_config_str(
            r#"
            [experiment]
            kind = "dark_matter"
            n_dm = 4
            phi = 0.1

            [noise]
            platform = "superconducting"
            "#,
        )
        .unwrap();
        assert_eq!(config.experiment.shots, 1_000_000);
        assert_eq!(config.experiment.backend, BackendChoice::Auto);
        let base = config.base_experiment();
        assert_eq!(base.shots, 1_000_000);
        // 5 qubits: auto resolves to dense downstream.
        assert_eq!(base.n_sensors(), 4);
    }

    #[test]
    fn unknown_key_is_named_in_the_error() {
        let err = parse_config_str(
            r#"
            [experiment]
            kind = "dark_matter"
            n_dm = 4
            phi = 0.1
            shotz = 100
            "#,
        )
        .unwrap_err();
        let msg = format!("{err:?}");
        assert!(msg.contains("shotz"), "error does not name the key: {msg}");
    }

    #[test]
    fn out_of_range_epsilon_rejected() {
        let err = parse_config_str(
            r#"
            [experiment]
            kind = "dark_matter"
            n_dm = 4
            phi = 0.1

            [noise]
            platform = "noiseless"
            epsilon = 1.3
            "#,
        )
        .unwrap_err();
        assert!(format!("{err}").contains("epsilon"));
    }

    #[test]
    fn effective_config_round_trips() {
        let config = parse_config_str(
            r#"
            [experiment]
            kind = "radar"
            n_s = 3
            n_f = 3
            phi_soil = 0.9
            phi_free = 0.1

            [noise]
            platform = "rydberg"
            epsilon = 0.25
            classes = ["readout", "single_gate"]

            [sweep]
            repetitions = 2
            n = [2, 3]

            [output]
            path = "out.csv"
            seed = 99
            "#,
        )
        .unwrap();
        let text = config.effective_toml();
        let reparsed = parse_config_str(&text).unwrap();
        assert_eq!(config, reparsed);
    }

    #[test]
    fn overrides_apply_to_profile() {
        let config = parse_config_str(
            r#"
            [experiment]
            kind = "dark_matter"
            n_dm = 4
            phi = 0.1

            [noise]
            platform = "rydberg"

            [noise.override]
            t1 = inf
            me = 0.02
            "#,
        )
        .unwrap();
        let p = config.noise.profile();
        assert!(p.t1.is_infinite());
        assert_eq!(p.me, (0.02, 0.02));
        assert!(config.noise.platform_label().starts_with("rydberg[t1=inf"));
    }
}
