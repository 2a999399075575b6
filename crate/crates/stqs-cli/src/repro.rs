//! Shipped study manifests reproducing the standard benchmark sweeps:
//! platform comparisons, probe-count scans under partial noise, epsilon
//! scans per error class, role-scoped errors, and the swap-test bars.

use stqs_core::experiment::{ExperimentKind, SwapBase};
use stqs_core::noise::ErrorClass::{self, *};

use crate::config::{
    ConfigFile, ExperimentSection, NoiseSection, OutputSection, PlatformChoice, ProfileOverride,
    SweepSection,
};

pub struct ReproStudy {
    pub id: &'static str,
    pub alias: &'static str,
    pub about: &'static str,
    pub build: fn() -> ConfigFile,
}

pub const STUDIES: [ReproStudy; 10] = [
    ReproStudy {
        id: "radar-platforms",
        alias: "fig5",
        about: "radar accuracy per platform profile vs shot count (3+3 sensors, signal difference 0.8)",
        build: radar_platforms,
    },
    ReproStudy {
        id: "radar-probes-coherence",
        alias: "fig8",
        about: "radar accuracy vs total sensors with T1/T2 lifted to infinity (rydberg)",
        build: radar_probes_coherence,
    },
    ReproStudy {
        id: "radar-epsilon",
        alias: "fig9",
        about: "radar accuracy vs epsilon for readout, gate, and combined error classes (5+5 sensors)",
        build: radar_epsilon,
    },
    ReproStudy {
        id: "dm-probes-noise",
        alias: "fig10",
        about: "dark-matter accuracy vs sensor count under noiseless/default/one-class-off profiles",
        build: dm_probes_noise,
    },
    ReproStudy {
        id: "radar-swap",
        alias: "fig11",
        about: "swap-test overlap of the radar memory state under four noise conditions",
        build: radar_swap,
    },
    ReproStudy {
        id: "radar-epsilon-roles",
        alias: "fig12",
        about: "radar accuracy vs epsilon with errors restricted to sensing or memory qubits",
        build: radar_epsilon_roles,
    },
    ReproStudy {
        id: "dm-swap",
        alias: "fig14",
        about: "swap-test overlap of the dark-matter memory state under four noise conditions",
        build: dm_swap,
    },
    ReproStudy {
        id: "dm-signal-strong",
        alias: "fig15",
        about: "dark-matter accuracy vs sensors at phi = 0.1 (default / readout-off / gates-off)",
        build: dm_signal_strong,
    },
    ReproStudy {
        id: "dm-signal-weak",
        alias: "fig16",
        about: "dark-matter accuracy vs sensors at phi = 0.01 (default / readout-off / gates-off)",
        build: dm_signal_weak,
    },
    ReproStudy {
        id: "dm-epsilon",
        alias: "fig17",
        about: "dark-matter accuracy vs epsilon isolating gate and readout errors (10 sensors, phi = 0.01)",
        build: dm_epsilon,
    },
];

pub fn find(id: &str) -> Option<&'static ReproStudy> {
    STUDIES.iter().find(|s| s.id == id || s.alias == id)
}

fn all_classes() -> Vec<ErrorClass> {
    ErrorClass::all().to_vec()
}

fn all_but(class: ErrorClass) -> Vec<ErrorClass> {
    ErrorClass::all().into_iter().filter(|&c| c != class).collect()
}

fn experiment(kind: ExperimentKind) -> ExperimentSection {
    ExperimentSection {
        kind,
        n_s: 3,
        n_f: 3,
        n_dm: 4,
        n_probes: 2,
        scaling_mode: stqs_core::experiment::ScalingMode::Ghz,
        swap_base: SwapBase::DarkMatter,
        phi: 0.1,
        phi_soil: 0.9,
        phi_free: 0.1,
        shots: 1_000_000,
        backend: stqs_core::experiment::BackendChoice::Auto,
        post_select: false,
        delay_tau: 0.0,
        correction: stqs_core::pipeline::CorrectionMode::PostProcessing,
    }
}

fn noise(platform: PlatformChoice) -> NoiseSection {
    NoiseSection {
        platform,
        epsilon: 0.0,
        classes: all_classes(),
        roles: Vec::new(),
        override_: ProfileOverride::default(),
    }
}

fn output(name: &str) -> OutputSection {
    OutputSection {
        path: format!("{name}.csv"),
        format: crate::config::OutputFormat::Csv,
        seed: 20_26,
        jobs: 0,
    }
}

fn epsilon_grid() -> Vec<f64> {
    (0..=10).map(|i| i as f64 / 10.0).collect()
}

fn radar_platforms() -> ConfigFile {
    ConfigFile {
        experiment: experiment(ExperimentKind::Radar),
        noise: noise(PlatformChoice::Noiseless),
        sweep: SweepSection {
            shots: vec![100, 1000, 10_000, 100_000],
            platform: vec![
                PlatformChoice::Noiseless,
                PlatformChoice::TrappedIon,
                PlatformChoice::Rydberg,
                PlatformChoice::Superconducting,
                PlatformChoice::NvCenter,
            ],
            ..SweepSection::default()
        },
        output: output("radar-platforms"),
    }
}

fn radar_probes_coherence() -> ConfigFile {
    let mut e = experiment(ExperimentKind::Radar);
    // Keep the trajectory points (13 qubits) affordable.
    e.shots = 100_000;
    ConfigFile {
        experiment: e,
        noise: noise(PlatformChoice::Rydberg),
        sweep: SweepSection {
            n: vec![4, 6, 8, 10, 12],
            overrides: vec![
                ProfileOverride::default(),
                ProfileOverride {
                    t1: Some(f64::INFINITY),
                    ..ProfileOverride::default()
                },
                ProfileOverride {
                    t2: Some(f64::INFINITY),
                    ..ProfileOverride::default()
                },
                ProfileOverride {
                    t1: Some(f64::INFINITY),
                    t2: Some(f64::INFINITY),
                    ..ProfileOverride::default()
                },
            ],
            ..SweepSection::default()
        },
        output: output("radar-probes-coherence"),
    }
}

fn radar_epsilon() -> ConfigFile {
    let mut e = experiment(ExperimentKind::Radar);
    e.n_s = 5;
    e.n_f = 5;
    e.phi_soil = 0.2;
    e.phi_free = 0.1;
    ConfigFile {
        experiment: e,
        noise: noise(PlatformChoice::Rydberg),
        sweep: SweepSection {
            epsilon: epsilon_grid(),
            classes: vec![
                vec![Readout, SingleGate, TwoGate],
                vec![SingleGate, TwoGate],
                vec![Readout],
            ],
            ..SweepSection::default()
        },
        output: output("radar-epsilon"),
    }
}

fn dm_probes_noise() -> ConfigFile {
    ConfigFile {
        experiment: experiment(ExperimentKind::DarkMatter),
        noise: noise(PlatformChoice::Superconducting),
        sweep: SweepSection {
            n: vec![4, 6, 8, 10],
            classes: vec![
                vec![],
                all_classes(),
                all_but(Readout),
                all_but(SingleGate),
                all_but(TwoGate),
            ],
            ..SweepSection::default()
        },
        output: output("dm-probes-noise"),
    }
}

fn radar_swap() -> ConfigFile {
    let mut e = experiment(ExperimentKind::SwapTest);
    e.swap_base = SwapBase::Radar;
    e.phi_soil = 0.2;
    e.phi_free = 0.1;
    ConfigFile {
        experiment: e,
        noise: noise(PlatformChoice::Rydberg),
        sweep: SweepSection {
            classes: vec![
                all_classes(),
                vec![SingleGate, TwoGate],
                vec![Readout],
                vec![],
            ],
            ..SweepSection::default()
        },
        output: output("radar-swap"),
    }
}

fn radar_epsilon_roles() -> ConfigFile {
    let mut e = experiment(ExperimentKind::Radar);
    e.n_s = 5;
    e.n_f = 5;
    e.phi_soil = 0.2;
    e.phi_free = 0.1;
    ConfigFile {
        experiment: e,
        noise: noise(PlatformChoice::Rydberg),
        sweep: SweepSection {
            epsilon: epsilon_grid(),
            classes: vec![vec![Readout], vec![SingleGate, TwoGate]],
            roles: vec![
                vec![stqs_core::state::Role::Sensing],
                vec![stqs_core::state::Role::Memory],
            ],
            ..SweepSection::default()
        },
        output: output("radar-epsilon-roles"),
    }
}

fn dm_swap() -> ConfigFile {
    ConfigFile {
        experiment: experiment(ExperimentKind::SwapTest),
        noise: noise(PlatformChoice::Superconducting),
        sweep: SweepSection {
            classes: vec![
                all_classes(),
                vec![SingleGate, TwoGate],
                vec![Readout],
                vec![],
            ],
            ..SweepSection::default()
        },
        output: output("dm-swap"),
    }
}

fn dm_signal_strong() -> ConfigFile {
    ConfigFile {
        experiment: experiment(ExperimentKind::DarkMatter),
        noise: noise(PlatformChoice::Superconducting),
        sweep: SweepSection {
            n: vec![4, 6, 8, 10],
            classes: vec![
                all_classes(),
                all_but(Readout),
                ErrorClass::all()
                    .into_iter()
                    .filter(|c| !matches!(c, SingleGate | TwoGate))
                    .collect(),
            ],
            ..SweepSection::default()
        },
        output: output("dm-signal-strong"),
    }
}

fn dm_signal_weak() -> ConfigFile {
    let mut c = dm_signal_strong();
    c.experiment.phi = 0.01;
    c.output = output("dm-signal-weak");
    c
}

fn dm_epsilon() -> ConfigFile {
    let mut e = experiment(ExperimentKind::DarkMatter);
    e.n_dm = 10;
    e.phi = 0.01;
    ConfigFile {
        experiment: e,
        noise: noise(PlatformChoice::Superconducting),
        sweep: SweepSection {
            epsilon: epsilon_grid(),
            classes: vec![vec![Readout], vec![SingleGate, TwoGate]],
            ..SweepSection::default()
        },
        output: output("dm-epsilon"),
    }
}
