//! Experiment configuration: JSON loading, unit handling, overrides,
//! derived-quantity reports, and validation.
//!
//! Configs are plain JSON in SI units with angular frequencies in rad/s.
//! For convenience, any string value of the form `"200 kHz"` / `"1 MHz"` /
//! `"1 GHz"` / `"5 Hz"` is read as an ordinary frequency and converted to
//! rad/s (multiplied by 2π) while loading.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::model::{self, GateConfig, ModeSpec, MoleculeConfig, TrapConfig};
use crate::scalar::Real;
use crate::{Error, Result};

fn default_molecule<T: Real>() -> MoleculeConfig<T> {
    MoleculeConfig::silicon_monoxide()
}

fn default_trap<T: Real>() -> TrapConfig<T> {
    TrapConfig {
        field_radius: T::of(0.5e-3),
        secular_frequency: T::tau() * T::of(1e6),
        x_eq: T::zero(),
        n_ions: 2,
    }
}

fn default_gate<T: Real>() -> GateConfig<T> {
    GateConfig {
        detuning: T::tau() * T::of(200e3),
        target_mode: 0,
        temperature: T::of(0.5e-3),
    }
}

fn default_amplitude<T: Real>() -> T {
    T::of(10.0)
}

fn default_participation<T: Real>() -> T {
    T::one()
}

fn default_thermal_epsilon<T: Real>() -> T {
    T::of(1e-4)
}

fn default_n_samples() -> usize {
    201
}

fn default_divisions() -> usize {
    160
}

fn default_fock_margin() -> usize {
    8
}

fn zero<T: Real>() -> T {
    T::zero()
}

/// Which internal state the SPAM scenario prepares before measuring.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum SpamPrepare {
    G,
    E,
    /// (|g⟩ + |e⟩)/√2.
    #[default]
    Equal,
}

/// SPAM scenario parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SpamSection<T: Real> {
    pub prepare: SpamPrepare,
    /// Drive duration; `None` picks the duration at which |α|² = max(10 n̄, 25).
    pub drive_time: Option<T>,
    /// Detection threshold in units of ħω_q; `None` uses
    /// max(4 n̄, (2Ωη t_d)²/4).
    pub threshold: Option<T>,
    pub seed: u64,
}

impl<T: Real> Default for SpamSection<T> {
    fn default() -> Self {
        Self {
            prepare: SpamPrepare::default(),
            drive_time: None,
            threshold: None,
            seed: 20260823,
        }
    }
}

/// Ultrafast-gate design parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct UltrafastSection<T: Real> {
    /// Number of kicks in the sequence.
    pub n_pulses: usize,
    /// Base momentum kick Δp₁ per pulse for the center-of-mass mode,
    /// in units of the mode zero-point momentum.
    pub dp_base: T,
    /// Physical pulse duration; must satisfy 2π/Δ ≪ t_pulse ≪ 2π/ω_p.
    pub t_pulse: T,
}

impl<T: Real> Default for UltrafastSection<T> {
    fn default() -> Self {
        Self {
            n_pulses: 4,
            dp_base: T::of(0.75),
            t_pulse: T::of(1e-8),
        }
    }
}

/// Full experiment description, loadable from JSON.
///
/// Defaults reproduce the reference parameter set: SiO⁺ with d = 2.3 D,
/// V_m = 10 V, r_o = 0.5 mm, ω₁ = 2π·1 MHz, γ = 2π·200 kHz, T = 0.5 mK.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig<T: Real> {
    pub molecule: MoleculeConfig<T>,
    pub trap: TrapConfig<T>,
    pub gate: GateConfig<T>,
    /// Microwave voltage amplitude V_m, V (see scenario docs for how it is
    /// split across tones).
    pub drive_amplitude: T,
    /// Mode participation b for single-ion scenarios.
    pub participation: T,
    /// Sideband amplitude mismatch fraction ε: tones get V_m(1 ± ε/2).
    pub mismatch: T,
    /// Scenario duration; `None` picks a scenario-specific default.
    pub t_end: Option<T>,
    pub n_samples: usize,
    /// Thermal mixture truncation weight.
    pub thermal_epsilon: T,
    /// Integrator steps per cycle of the fastest envelope.
    pub divisions_per_cycle: usize,
    /// Extra Fock levels on top of the computed requirement.
    pub fock_margin: usize,
    pub spam: SpamSection<T>,
    pub ultrafast: UltrafastSection<T>,
}

impl<T: Real> Default for ExperimentConfig<T> {
    fn default() -> Self {
        Self {
            molecule: default_molecule(),
            trap: default_trap(),
            gate: default_gate(),
            drive_amplitude: default_amplitude(),
            participation: default_participation(),
            mismatch: zero(),
            t_end: None,
            n_samples: default_n_samples(),
            thermal_epsilon: default_thermal_epsilon(),
            divisions_per_cycle: default_divisions(),
            fock_margin: default_fock_margin(),
            spam: SpamSection::default(),
            ultrafast: UltrafastSection::default(),
        }
    }
}

impl<T: Real + serde::de::DeserializeOwned + Serialize> ExperimentConfig<T> {
    /// Parses a config from a JSON string, converting frequency-suffixed
    /// string values and applying dotted-key overrides.
    pub fn from_json_str(text: &str, overrides: &[(String, String)]) -> Result<Self> {
        let mut value: Value = serde_json::from_str(text)
            .map_err(|e| Error::Config(format!("config is not valid JSON: {e}")))?;
        for (key, val) in overrides {
            apply_override(&mut value, key, val)?;
        }
        convert_frequency_strings(&mut value);
        // merge over the defaults so partially specified nested objects
        // (e.g. {"trap": {"x_eq": 1e-8}}) keep their remaining defaults
        let mut base = Self::default().echo();
        deep_merge(&mut base, value);
        Self::from_value(base)
    }

    pub fn from_value(value: Value) -> Result<Self> {
        serde_json::from_value(value).map_err(|e| Error::Config(format!("config: {e}")))
    }

    /// The fully resolved config as JSON, suitable for echoing into results.
    pub fn echo(&self) -> Value {
        serde_json::to_value(self).expect("config serializes")
    }
}

impl<T: Real> ExperimentConfig<T> {
    /// Rabi frequency Ω for the configured amplitude.
    pub fn omega_rabi(&self) -> T {
        model::rabi_frequency_v(&self.molecule, self.drive_amplitude, &self.trap)
    }

    /// The single-ion target mode with the configured participation.
    pub fn single_ion_mode(&self) -> ModeSpec<T> {
        ModeSpec {
            frequency: self.trap.secular_frequency,
            participation: vec![self.participation],
        }
    }

    /// Center-of-mass and relative modes of the two-ion chain.
    pub fn two_ion_modes(&self) -> Result<(ModeSpec<T>, ModeSpec<T>)> {
        model::two_ion_modes(&self.trap)
    }
}

/// Parses strings like "200 kHz" or "1.5MHz" as ordinary frequencies,
/// returning the angular frequency in rad/s.
pub fn parse_frequency(text: &str) -> Option<f64> {
    let t = text.trim();
    for (suffix, scale) in [("GHz", 1e9), ("MHz", 1e6), ("kHz", 1e3), ("Hz", 1.0)] {
        if let Some(prefix) = t.strip_suffix(suffix) {
            let num: f64 = prefix.trim().parse().ok()?;
            return Some(std::f64::consts::TAU * num * scale);
        }
    }
    None
}

fn deep_merge(base: &mut Value, overlay: Value) {
    match (base, overlay) {
        (Value::Object(b), Value::Object(o)) => {
            for (k, v) in o {
                match b.get_mut(&k) {
                    Some(slot) => deep_merge(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

fn convert_frequency_strings(value: &mut Value) {
    match value {
        Value::String(s) => {
            if let Some(rad) = parse_frequency(s) {
                *value = serde_json::json!(rad);
            }
        }
        Value::Array(items) => items.iter_mut().for_each(convert_frequency_strings),
        Value::Object(map) => map.values_mut().for_each(convert_frequency_strings),
        _ => {}
    }
}

/// Sets a dotted-key path (e.g. `trap.x_eq`) in a JSON document. The value
/// is parsed as JSON, falling back to a plain string.
pub fn apply_override(root: &mut Value, key: &str, raw: &str) -> Result<()> {
    let parsed: Value = serde_json::from_str(raw).unwrap_or(Value::String(raw.to_string()));
    let mut cursor = root;
    let parts: Vec<&str> = key.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        if part.is_empty() {
            return Err(Error::Config(format!(
                "empty segment in override key '{key}'"
            )));
        }
        let map = cursor.as_object_mut().ok_or_else(|| {
            Error::Config(format!("override key '{key}' descends into a non-object"))
        })?;
        if i + 1 == parts.len() {
            map.insert(part.to_string(), parsed);
            return Ok(());
        }
        cursor = map
            .entry(part.to_string())
            .or_insert_with(|| Value::Object(Default::default()));
    }
    unreachable!("override key has at least one segment");
}

/// All closed-form derived quantities for a config, with stable key order.
pub fn derived_quantities(cfg: &ExperimentConfig<f64>) -> Result<Value> {
    let omega = cfg.omega_rabi();
    let trap = &cfg.trap;
    let gamma = cfg.gate.detuning;
    let single = cfg.single_ion_mode();
    let eta_single = model::eta(&single, 0, &cfg.molecule, trap)?;
    let (com, rel) = model::two_ion_modes(trap)?;
    let eta_com = model::eta(&com, 0, &cfg.molecule, trap)?;
    let eta_rel = model::eta(&rel, 0, &cfg.molecule, trap)?;
    let n_bar = model::thermal_occupation(cfg.gate.temperature, trap.secular_frequency);
    let t_gate = model::ms_gate_time(omega, eta_com, eta_com, gamma)?;
    let xeq_tol = model::xeq_tolerance(
        1e-4,
        trap.secular_frequency,
        gamma,
        trap.field_radius,
        cfg.drive_amplitude,
        cfg.molecule.dipole_moment,
    );
    Ok(serde_json::json!({
        "rabi_frequency_rad_s": omega,
        "rabi_frequency_hz": omega / std::f64::consts::TAU,
        "eta_single_ion": eta_single,
        "eta_com": eta_com,
        "eta_relative": eta_rel.abs(),
        "mode_com_rad_s": com.frequency,
        "mode_relative_rad_s": rel.frequency,
        "thermal_occupation": n_bar,
        "ms_gate_time_s": t_gate,
        "ms_bell_time_s": t_gate / 4.0,
        "ms_validity_ratio": model::ms_validity_ratio(omega, eta_com, gamma),
        "carrier_phase_bound": model::carrier_phase_bound(
            omega, trap.x_eq, trap.field_radius, trap.secular_frequency, gamma),
        "xeq_tolerance_m": xeq_tol,
        "quadrupole_carrier_rate_rad_s": model::quadrupole_carrier_rate(
            cfg.drive_amplitude, trap.field_radius),
    }))
}

/// Outcome of one validation check.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CheckStatus {
    Pass,
    Warn,
    Fail,
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckReport {
    pub name: String,
    pub status: CheckStatus,
    pub message: String,
}

fn check(name: &str, result: Result<()>) -> CheckReport {
    match result {
        Ok(()) => CheckReport {
            name: name.into(),
            status: CheckStatus::Pass,
            message: "ok".into(),
        },
        Err(e) => CheckReport {
            name: name.into(),
            status: CheckStatus::Fail,
            message: e.to_string(),
        },
    }
}

/// Runs all type invariants plus physics sanity checks; warns (does not
/// fail) when the gate detuning is not well separated from the sideband
/// coupling (γ/(2Ωη) ≤ 10).
pub fn validate(cfg: &ExperimentConfig<f64>) -> Vec<CheckReport> {
    let single = cfg.single_ion_mode();
    let mut modes = vec![single.clone()];
    let mut reports = vec![
        check("trap", cfg.trap.validate()),
        check("gate", cfg.gate.validate()),
        check("mode", single.validate()),
        check(
            "drive_amplitude",
            if cfg.drive_amplitude >= 0.0 {
                Ok(())
            } else {
                Err(Error::Config("drive amplitude must be nonnegative".into()))
            },
        ),
        check(
            "mismatch",
            if (0.0..1.0).contains(&cfg.mismatch) {
                Ok(())
            } else {
                Err(Error::Config("mismatch must lie in [0, 1)".into()))
            },
        ),
        check("numerics", {
            if !(cfg.thermal_epsilon > 0.0 && cfg.thermal_epsilon <= 0.1) {
                Err(Error::Config("thermal_epsilon must lie in (0, 0.1]".into()))
            } else if cfg.fock_margin < 2 {
                Err(Error::Config("fock_margin must be at least 2".into()))
            } else if cfg.divisions_per_cycle < 16 {
                Err(Error::Config(
                    "divisions_per_cycle must be at least 16".into(),
                ))
            } else if cfg.n_samples == 0 {
                Err(Error::Config("n_samples must be positive".into()))
            } else {
                Ok(())
            }
        }),
        check("ultrafast_pulse_duration", {
            let tp = cfg.ultrafast.t_pulse;
            let period_mode = std::f64::consts::TAU / cfg.trap.secular_frequency;
            let period_qubit = std::f64::consts::TAU / cfg.molecule.splitting;
            if tp > 5.0 * period_qubit && tp < 0.1 * period_mode {
                Ok(())
            } else {
                Err(Error::Config(format!(
                    "pulse duration {tp:.2e} s must satisfy \
                         2pi/splitting << t_pulse << 2pi/omega_q"
                )))
            }
        }),
    ];
    if let Ok((com, rel)) = model::two_ion_modes(&cfg.trap) {
        modes.push(com);
        modes.push(rel);
    }
    reports.insert(0, check("molecule", cfg.molecule.validate(&modes)));
    // rate the entangling gate on its target mode (the center-of-mass mode
    // of the two-ion chain when available)
    let gate_mode = modes.get(1 + cfg.gate.target_mode).unwrap_or(&modes[0]);
    let ratio = model::ms_validity_ratio(
        cfg.omega_rabi(),
        model::eta(gate_mode, 0, &cfg.molecule, &cfg.trap).unwrap_or(0.0),
        cfg.gate.detuning,
    );
    reports.push(if ratio > 10.0 {
        CheckReport {
            name: "ms_validity_ratio".into(),
            status: CheckStatus::Pass,
            message: format!("gamma/(2 Omega eta) = {ratio:.1}"),
        }
    } else {
        CheckReport {
            name: "ms_validity_ratio".into(),
            status: CheckStatus::Warn,
            message: format!(
                "gamma/(2 Omega eta) = {ratio:.2} <= 10; entangling-gate \
                 closed form is inaccurate at this detuning"
            ),
        }
    });
    reports
}
