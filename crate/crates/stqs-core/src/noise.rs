//! Platform noise profiles, epsilon scaling, and the policy that attaches
//! channels to ideal circuits.
//!
//! The shipped per-platform defaults sit at documented midpoints of the
//! published NISQ characteristics ranges; every parameter stays
//! configurable. Gate durations are typical literature magnitudes (the
//! characteristics tables list readout times but not gate times) and are
//! likewise overridable.

use std::collections::BTreeSet;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::channel::QuantumChannel;
use crate::circuit::{Circuit, Instruction};
use crate::error::NoiseError;
use crate::gate::GateKind;
use crate::state::Role;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Platform {
    TrappedIon,
    Rydberg,
    Superconducting,
    NvCenter,
    Custom,
}

impl Platform {
    pub fn all() -> [Platform; 4] {
        [
            Platform::TrappedIon,
            Platform::Rydberg,
            Platform::Superconducting,
            Platform::NvCenter,
        ]
    }

    pub fn name(&self) -> &'static str {
        match self {
            Platform::TrappedIon => "trapped_ion",
            Platform::Rydberg => "rydberg",
            Platform::Superconducting => "superconducting",
            Platform::NvCenter => "nv_center",
            Platform::Custom => "custom",
        }
    }
}

impl FromStr for Platform {
    type Err = NoiseError;

    fn from_str(s: &str) -> Result<Self, NoiseError> {
        match s {
            "trapped_ion" => Ok(Platform::TrappedIon),
            "rydberg" => Ok(Platform::Rydberg),
            "superconducting" => Ok(Platform::Superconducting),
            "nv_center" => Ok(Platform::NvCenter),
            "custom" => Ok(Platform::Custom),
            other => Err(NoiseError::UnknownPlatform(other.to_string())),
        }
    }
}

/// Error mechanism classes that can be toggled and epsilon-scaled.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorClass {
    Readout,
    SingleGate,
    TwoGate,
    StatePrep,
    T1,
    T2,
}

impl ErrorClass {
    pub fn all() -> [ErrorClass; 6] {
        [
            ErrorClass::Readout,
            ErrorClass::SingleGate,
            ErrorClass::TwoGate,
            ErrorClass::StatePrep,
            ErrorClass::T1,
            ErrorClass::T2,
        ]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Durations {
    /// Single-qubit gate time, seconds.
    pub single_gate: f64,
    /// Two-or-more-qubit gate time, seconds.
    pub two_gate: f64,
    /// Readout time, seconds.
    pub readout: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseProfile {
    pub platform: Platform,
    /// Relaxation time, seconds. May be infinite.
    pub t1: f64,
    /// Decoherence time, seconds. May be infinite.
    pub t2: f64,
    /// Single-qubit gate error probability.
    pub sge: f64,
    /// Two-qubit (and wider) gate error probability.
    pub tge: f64,
    /// State-preparation error probability.
    pub spe: f64,
    /// Measurement flip rates (p_{0->1}, p_{1->0}).
    pub me: (f64, f64),
    pub durations: Durations,
}

impl NoiseProfile {
    /// All error mechanisms off: zero rates, infinite coherence times.
    pub fn noiseless() -> Self {
        Self {
            platform: Platform::Custom,
            t1: f64::INFINITY,
            t2: f64::INFINITY,
            sge: 0.0,
            tge: 0.0,
            spe: 0.0,
            me: (0.0, 0.0),
            durations: Durations {
                single_gate: 1e-9,
                two_gate: 1e-9,
                readout: 1e-9,
            },
        }
    }

    // `!(x > 0)` deliberately treats NaN as invalid.
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn validate(&self) -> Result<(), NoiseError> {
        for (name, p) in [
            ("sge", self.sge),
            ("tge", self.tge),
            ("spe", self.spe),
            ("me.0", self.me.0),
            ("me.1", self.me.1),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(NoiseError::InvalidProfile(format!(
                    "{name} = {p} outside [0, 1]"
                )));
            }
        }
        if !(self.t1 > 0.0) || !(self.t2 > 0.0) {
            return Err(NoiseError::InvalidProfile(
                "T1 and T2 must be positive".into(),
            ));
        }
        // An infinite T2 with finite T1 is accepted as the "no pure
        // dephasing" idealization; the relaxation channel caps the
        // effective coherence decay at the amplitude-damping rate.
        if self.t2.is_finite() && self.t2 > 2.0 * self.t1 {
            return Err(NoiseError::InvalidProfile(format!(
                "T2 = {} exceeds 2*T1 = {}",
                self.t2,
                2.0 * self.t1
            )));
        }
        if !(self.durations.single_gate > 0.0)
            || !(self.durations.two_gate > 0.0)
            || !(self.durations.readout > 0.0)
        {
            return Err(NoiseError::InvalidProfile(
                "durations must be positive".into(),
            ));
        }
        Ok(())
    }

    pub fn is_noiseless(&self) -> bool {
        self.sge == 0.0
            && self.tge == 0.0
            && self.spe == 0.0
            && self.me == (0.0, 0.0)
            && self.t1.is_infinite()
            && self.t2.is_infinite()
    }
}

/// Shipped per-platform defaults (documented midpoints of published ranges).
pub fn default_profile(platform: Platform) -> NoiseProfile {
    match platform {
        Platform::TrappedIon => NoiseProfile {
            platform,
            t1: 600.0, // 10 minutes
            t2: 1.0,
            sge: 0.005,
            tge: 0.015,
            spe: 0.005,
            me: (0.015, 0.015),
            durations: Durations {
                single_gate: 10e-6,
                two_gate: 200e-6,
                readout: 50e-6,
            },
        },
        Platform::Rydberg => NoiseProfile {
            platform,
            t1: 100e-6,
            t2: 50e-6,
            sge: 0.005,
            tge: 0.03,
            spe: 0.03,
            me: (0.05, 0.05),
            durations: Durations {
                single_gate: 1e-6,
                two_gate: 1e-6,
                readout: 5e-6,
            },
        },
        Platform::Superconducting => NoiseProfile {
            platform,
            t1: 100e-6,
            t2: 100e-6,
            sge: 0.0005,
            tge: 0.015,
            spe: 0.01,
            me: (0.03, 0.03),
            durations: Durations {
                single_gate: 35e-9,
                two_gate: 300e-9,
                readout: 300e-9,
            },
        },
        Platform::NvCenter => NoiseProfile {
            platform,
            t1: 5e-3,
            t2: 50e-6,
            sge: 0.005,
            tge: 0.03,
            spe: 0.005,
            me: (0.05, 0.05),
            durations: Durations {
                single_gate: 50e-9,
                two_gate: 1e-6,
                readout: 5e-6,
            },
        },
        Platform::Custom => NoiseProfile::noiseless(),
    }
}

/// Which error classes are active, how strongly, and on which roles.
///
/// `epsilon` interpolates every enabled class between its profile rate
/// (epsilon = 0) and zero (epsilon = 1). Classes not enabled are not
/// attached at all. An empty role filter means all roles.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseScope {
    pub epsilon: f64,
    pub enabled_classes: BTreeSet<ErrorClass>,
    pub role_filter: BTreeSet<Role>,
}

impl Default for NoiseScope {
    fn default() -> Self {
        Self {
            epsilon: 0.0,
            enabled_classes: ErrorClass::all().into_iter().collect(),
            role_filter: BTreeSet::new(),
        }
    }
}

impl NoiseScope {
    pub fn full(epsilon: f64) -> Self {
        Self {
            epsilon,
            ..Self::default()
        }
    }

    /// Only the listed classes, scaled by epsilon; everything else off.
    pub fn isolating(classes: impl IntoIterator<Item = ErrorClass>, epsilon: f64) -> Self {
        Self {
            epsilon,
            enabled_classes: classes.into_iter().collect(),
            role_filter: BTreeSet::new(),
        }
    }

    pub fn with_roles(mut self, roles: impl IntoIterator<Item = Role>) -> Self {
        self.role_filter = roles.into_iter().collect();
        self
    }

    pub fn validate(&self) -> Result<(), NoiseError> {
        if !(0.0..=1.0).contains(&self.epsilon) {
            return Err(NoiseError::BadEpsilon(self.epsilon));
        }
        Ok(())
    }

    pub fn accepts_role(&self, role: Role) -> bool {
        self.role_filter.is_empty() || self.role_filter.contains(&role)
    }

    fn enabled(&self, class: ErrorClass) -> bool {
        self.enabled_classes.contains(&class)
    }
}

/// Scale the enabled classes of a profile: error probabilities shrink to
/// (1 - epsilon) * p, coherence times grow to T / (1 - epsilon) (infinite at
/// epsilon = 1). Disabled classes are left untouched.
pub fn scale_profile(profile: &NoiseProfile, scope: &NoiseScope) -> Result<NoiseProfile, NoiseError> {
    scope.validate()?;
    let shrink = 1.0 - scope.epsilon;
    let stretch = |t: f64| if shrink == 0.0 { f64::INFINITY } else { t / shrink };
    let mut out = profile.clone();
    if scope.enabled(ErrorClass::SingleGate) {
        out.sge *= shrink;
    }
    if scope.enabled(ErrorClass::TwoGate) {
        out.tge *= shrink;
    }
    if scope.enabled(ErrorClass::StatePrep) {
        out.spe *= shrink;
    }
    if scope.enabled(ErrorClass::Readout) {
        out.me = (out.me.0 * shrink, out.me.1 * shrink);
    }
    if scope.enabled(ErrorClass::T1) {
        out.t1 = stretch(out.t1);
    }
    if scope.enabled(ErrorClass::T2) {
        out.t2 = stretch(out.t2);
    }
    Ok(out)
}

/// Profile actually inserted by `attach_noise`: enabled classes are scaled,
/// disabled classes are switched off entirely.
fn insertion_profile(profile: &NoiseProfile, scope: &NoiseScope) -> Result<NoiseProfile, NoiseError> {
    let mut out = scale_profile(profile, scope)?;
    if !scope.enabled(ErrorClass::SingleGate) {
        out.sge = 0.0;
    }
    if !scope.enabled(ErrorClass::TwoGate) {
        out.tge = 0.0;
    }
    if !scope.enabled(ErrorClass::StatePrep) {
        out.spe = 0.0;
    }
    if !scope.enabled(ErrorClass::Readout) {
        out.me = (0.0, 0.0);
    }
    if !scope.enabled(ErrorClass::T1) {
        out.t1 = f64::INFINITY;
    }
    if !scope.enabled(ErrorClass::T2) {
        out.t2 = f64::INFINITY;
    }
    Ok(out)
}

/// Knobs of the attachment policy that the profile itself does not fix.
#[derive(Clone, Debug, PartialEq)]
pub struct AttachOptions {
    /// Thermal relaxation on the delayed qubit over the delay's wall time.
    pub delay_relaxation: bool,
    /// Thermal relaxation on qubits idling while another qubit is gated.
    pub idle_relaxation: bool,
    /// Conversion from delay phase (radians) to wall time (seconds).
    pub delay_rate: f64,
    /// Restrict state-preparation flips to these qubits. `None` means every
    /// qubit the role filter accepts; circuits fed an already-prepared
    /// state limit the flips to their freshly initialized qubits.
    pub spe_qubits: Option<Vec<usize>>,
}

impl Default for AttachOptions {
    fn default() -> Self {
        Self {
            delay_relaxation: true,
            idle_relaxation: true,
            delay_rate: 1.0,
            spe_qubits: None,
        }
    }
}

/// Insert noise channels into an ideal circuit.
///
/// Policy: a bit-flip with probability SPE at each qubit's initialization;
/// after every gate a depolarizing channel (SGE or TGE) on the gate's
/// accepted qubits plus thermal relaxation over the gate duration; thermal
/// relaxation on accepted idle qubits for the same duration; readout flips
/// folded into the circuit's per-qubit readout table. Delays relax over
/// their wall time instead of receiving gate errors. Classically controlled
/// corrections are classical feedback and stay noise free. Qubits already
/// measured receive nothing further.
pub fn attach_noise(
    circuit: &Circuit,
    profile: &NoiseProfile,
    scope: &NoiseScope,
) -> Result<Circuit, NoiseError> {
    attach_noise_with(circuit, profile, scope, &AttachOptions::default())
}

pub fn attach_noise_with(
    circuit: &Circuit,
    profile: &NoiseProfile,
    scope: &NoiseScope,
    options: &AttachOptions,
) -> Result<Circuit, NoiseError> {
    profile.validate()?;
    if circuit.noise_attached()
        || circuit
            .instructions()
            .iter()
            .any(|i| matches!(i, Instruction::Channel { .. }))
    {
        return Err(NoiseError::AlreadyNoisy);
    }
    let eff = insertion_profile(profile, scope)?;
    let n = circuit.n_qubits();
    let accepted: Vec<bool> = circuit
        .roles()
        .iter()
        .map(|&r| scope.accepts_role(r))
        .collect();

    let mut out = Vec::with_capacity(circuit.instructions().len() * 3);
    let mut changed = false;
    let mut measured = vec![false; n];

    // State-preparation flips at initialization.
    #[allow(clippy::needless_range_loop)]
    if eff.spe > 0.0 {
        for q in 0..n {
            let fresh = options
                .spe_qubits
                .as_ref()
                .is_none_or(|qs| qs.contains(&q));
            if accepted[q] && fresh {
                out.push(Instruction::Channel {
                    channel: QuantumChannel::bit_flip(eff.spe)?,
                    targets: vec![q],
                });
                changed = true;
            }
        }
    }

    let relax = |dur: f64| -> Result<Option<QuantumChannel>, NoiseError> {
        let ch = QuantumChannel::thermal_relaxation(dur, eff.t1, eff.t2)?;
        Ok(if ch.is_identity() { None } else { Some(ch) })
    };

    let mut readout_rates = vec![(0.0f64, 0.0f64); n];
    for instr in circuit.instructions() {
        match instr {
            Instruction::Gate(g) => {
                out.push(instr.clone());
                let (dur, rate) = match g.kind {
                    GateKind::Delay(tau) => {
                        let wall = tau.abs() / options.delay_rate;
                        let q = g.targets[0];
                        if options.delay_relaxation && accepted[q] && !measured[q] {
                            if let Some(ch) = relax(wall)? {
                                out.push(Instruction::Channel {
                                    channel: ch,
                                    targets: vec![q],
                                });
                                changed = true;
                            }
                        }
                        if options.idle_relaxation {
                            for other in 0..n {
                                if other == q || measured[other] || !accepted[other] {
                                    continue;
                                }
                                if let Some(ch) = relax(wall)? {
                                    out.push(Instruction::Channel {
                                        channel: ch,
                                        targets: vec![other],
                                    });
                                    changed = true;
                                }
                            }
                        }
                        continue;
                    }
                    kind if kind.arity() == 1 => (eff.durations.single_gate, eff.sge),
                    _ => (eff.durations.two_gate, eff.tge),
                };
                let gate_qubits: Vec<usize> = g
                    .targets
                    .iter()
                    .copied()
                    .filter(|&q| accepted[q])
                    .collect();
                if rate > 0.0 && !gate_qubits.is_empty() {
                    out.push(Instruction::Channel {
                        channel: QuantumChannel::depolarizing(rate, gate_qubits.len())?,
                        targets: gate_qubits.clone(),
                    });
                    changed = true;
                }
                for &q in &gate_qubits {
                    if let Some(ch) = relax(dur)? {
                        out.push(Instruction::Channel {
                            channel: ch,
                            targets: vec![q],
                        });
                        changed = true;
                    }
                }
                if options.idle_relaxation {
                    for q in 0..n {
                        if g.targets.contains(&q) || measured[q] || !accepted[q] {
                            continue;
                        }
                        if let Some(ch) = relax(dur)? {
                            out.push(Instruction::Channel {
                                channel: ch,
                                targets: vec![q],
                            });
                            changed = true;
                        }
                    }
                }
            }
            Instruction::Measure { qubit, .. } => {
                out.push(instr.clone());
                measured[*qubit] = true;
                if accepted[*qubit] && eff.me != (0.0, 0.0) {
                    readout_rates[*qubit] = eff.me;
                    changed = true;
                }
            }
            Instruction::Conditional { .. } => out.push(instr.clone()),
            Instruction::Channel { .. } => unreachable!("rejected above"),
        }
    }

    let mut result = Circuit::from_parts(n, circuit.roles().to_vec(), out, readout_rates);
    if changed {
        result.set_noise_attached();
    }
    Ok(result)
}
