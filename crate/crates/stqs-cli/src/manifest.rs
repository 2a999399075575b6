//! Sweep-grid expansion: a manifest turns one config document into the
//! full cartesian product of its axes, with a stable per-row seed derived
//! from the master seed and the grid coordinates.

use stqs_core::experiment::{ExperimentConfig, ExperimentKind};
use stqs_core::stats::stable_hash;

use crate::config::{ConfigFile, OutputFormat, PlatformChoice, ProfileOverride};

/// One grid point: a fully resolved experiment config plus the labels the
/// output row carries.
#[derive(Clone, Debug)]
pub struct GridPoint {
    /// Axis indices (shots, n, phi, epsilon, platform, classes, roles,
    /// overrides, repetition); rows sort by these.
    pub coords: [usize; 9],
    pub config: ExperimentConfig,
    pub platform_label: String,
    pub classes_label: String,
    pub roles_label: String,
}

#[derive(Clone, Debug)]
pub struct RunManifest {
    pub base: ConfigFile,
    pub output_path: String,
    pub format: OutputFormat,
    pub master_seed: u64,
    pub jobs: usize,
}

impl RunManifest {
    pub fn from_config(config: ConfigFile) -> Self {
        Self {
            output_path: config.output.path.clone(),
            format: config.output.format,
            master_seed: config.output.seed,
            jobs: config.output.jobs,
            base: config,
        }
    }

    /// Expand the sweep axes into the ordered grid. Axes left empty in the
    /// config contribute a single point carrying the base value.
    pub fn grid(&self) -> Vec<GridPoint> {
        let sweep = &self.base.sweep;
        let shots_axis: Vec<Option<u64>> = axis(&sweep.shots);
        let n_axis: Vec<Option<usize>> = axis(&sweep.n);
        let phi_axis: Vec<Option<f64>> = axis(&sweep.phi);
        let eps_axis: Vec<Option<f64>> = axis(&sweep.epsilon);
        let platform_axis: Vec<Option<PlatformChoice>> = axis(&sweep.platform);
        let classes_axis: Vec<Option<Vec<_>>> = axis(&sweep.classes);
        let roles_axis: Vec<Option<Vec<_>>> = axis(&sweep.roles);
        let override_axis: Vec<Option<ProfileOverride>> = axis(&sweep.overrides);

        let mut out = Vec::new();
        for (i_shots, shots) in shots_axis.iter().enumerate() {
            for (i_n, n) in n_axis.iter().enumerate() {
                for (i_phi, phi) in phi_axis.iter().enumerate() {
                    for (i_eps, eps) in eps_axis.iter().enumerate() {
                        for (i_plat, plat) in platform_axis.iter().enumerate() {
                            for (i_cls, cls) in classes_axis.iter().enumerate() {
                                for (i_role, roles) in roles_axis.iter().enumerate() {
                                    for (i_ovr, ovr) in override_axis.iter().enumerate() {
                                        for rep in 0..sweep.repetitions {
                                            out.push(self.point(
                                                [
                                                    i_shots, i_n, i_phi, i_eps, i_plat,
                                                    i_cls, i_role, i_ovr, rep,
                                                ],
                                                shots, n, phi, eps, plat, cls, roles, ovr,
                                            ));
                                        }
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
        out
    }

    #[allow(clippy::too_many_arguments)]
    fn point(
        &self,
        coords: [usize; 9],
        shots: &Option<u64>,
        n: &Option<usize>,
        phi: &Option<f64>,
        eps: &Option<f64>,
        platform: &Option<PlatformChoice>,
        classes: &Option<Vec<stqs_core::noise::ErrorClass>>,
        roles: &Option<Vec<stqs_core::state::Role>>,
        override_: &Option<ProfileOverride>,
    ) -> GridPoint {
        let mut noise = self.base.noise.clone();
        if let Some(p) = platform {
            noise.platform = *p;
        }
        if let Some(e) = eps {
            noise.epsilon = *e;
        }
        if let Some(c) = classes {
            noise.classes = c.clone();
        }
        if let Some(r) = roles {
            noise.roles = r.clone();
        }
        if let Some(o) = override_ {
            noise.override_ = o.clone();
        }

        let mut config = self.base.base_experiment();
        config.profile = noise.profile();
        config.scope = noise.scope();
        if let Some(s) = shots {
            config.shots = *s;
        }
        if let Some(p) = phi {
            config.phi = *p;
        }
        if let Some(count) = n {
            match config.kind {
                ExperimentKind::Radar => {
                    // The sensor axis sweeps balanced ensembles.
                    config.n_s = count / 2;
                    config.n_f = count - count / 2;
                }
                ExperimentKind::DarkMatter => config.n_dm = *count,
                ExperimentKind::Scaling => config.n_probes = *count,
                ExperimentKind::SwapTest => match config.swap_base {
                    stqs_core::experiment::SwapBase::Radar => {
                        config.n_s = count / 2;
                        config.n_f = count - count / 2;
                    }
                    stqs_core::experiment::SwapBase::DarkMatter => config.n_dm = *count,
                },
            }
        }
        config.seed = stable_hash(&[
            self.master_seed,
            coords[0] as u64,
            coords[1] as u64,
            coords[2] as u64,
            coords[3] as u64,
            coords[4] as u64,
            coords[5] as u64,
            coords[6] as u64,
            coords[7] as u64,
            coords[8] as u64,
        ]);

        let classes_label = if noise.classes.is_empty() {
            "none".to_string()
        } else if noise.classes.len() == stqs_core::noise::ErrorClass::all().len() {
            "all".to_string()
        } else {
            noise
                .classes
                .iter()
                .map(class_name)
                .collect::<Vec<_>>()
                .join("+")
        };
        let roles_label = if noise.roles.is_empty() {
            "all".to_string()
        } else {
            noise
                .roles
                .iter()
                .map(|r| role_name(*r))
                .collect::<Vec<_>>()
                .join("+")
        };
        GridPoint {
            coords,
            platform_label: noise.platform_label(),
            classes_label,
            roles_label,
            config,
        }
    }
}

fn axis<T: Clone>(values: &[T]) -> Vec<Option<T>> {
    if values.is_empty() {
        vec![None]
    } else {
        values.iter().cloned().map(Some).collect()
    }
}

pub fn class_name(c: &stqs_core::noise::ErrorClass) -> &'static str {
    use stqs_core::noise::ErrorClass::*;
    match c {
        Readout => "readout",
        SingleGate => "single_gate",
        TwoGate => "two_gate",
        StatePrep => "state_prep",
        T1 => "t1",
        T2 => "t2",
    }
}

pub fn role_name(r: stqs_core::state::Role) -> &'static str {
    use stqs_core::state::Role::*;
    match r {
        Sensing => "sensing",
        Memory => "memory",
        Computing => "computing",
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_config_str;

    #[test]
    fn grid_is_the_axis_product_times_repetitions() {
        let config = parse_config_str(
            r#"
            [experiment]
            kind = "dark_matter"
            n_dm = 4
            phi = 0.1

            [noise]
            platform = "superconducting"

            [sweep]
            repetitions = 2
            n = [4, 6]
            epsilon = [0.0, 0.5, 1.0]
            "#,
        )
        .unwrap();
        let manifest = RunManifest::from_config(config);
        let grid = manifest.grid();
        assert_eq!(grid.len(), 2 * 3 * 2);
        // Seeds are distinct across the grid.
        let mut seeds: Vec<u64> = grid.iter().map(|g| g.config.seed).collect();
        seeds.sort_unstable();
        seeds.dedup();
        assert_eq!(seeds.len(), 12);
    }

    #[test]
    fn radar_sensor_axis_splits_evenly() {
        let config = parse_config_str(
            r#"
            [experiment]
            kind = "radar"
            phi_soil = 0.9
            phi_free = 0.1

            [noise]
            platform = "rydberg"

            [sweep]
            n = [4, 6]
            "#,
        )
        .unwrap();
        let grid = RunManifest::from_config(config).grid();
        assert_eq!(grid[0].config.n_s, 2);
        assert_eq!(grid[0].config.n_f, 2);
        assert_eq!(grid[1].config.n_s, 3);
        assert_eq!(grid[1].config.n_f, 3);
    }

    #[test]
    fn same_master_seed_reproduces_row_seeds() {
        let text = r#"
            [experiment]
            kind = "dark_matter"
            n_dm = 4
            phi = 0.1

            [noise]
            platform = "superconducting"

            [sweep]
            n = [4, 6, 8]

            [output]
            seed = 777
        "#;
        let a = RunManifest::from_config(parse_config_str(text).unwrap()).grid();
        let b = RunManifest::from_config(parse_config_str(text).unwrap()).grid();
        for (x, y) in a.iter().zip(b.iter()) {
            assert_eq!(x.config.seed, y.config.seed);
        }
    }
}
