//! Experiment parameters and closed-form derived quantities.
//!
//! Everything here is a pure function of the configuration; no dynamics.
//! Angular frequencies are in rad/s, all other quantities in SI units.

use serde::{Deserialize, Serialize};

use crate::constants;
use crate::scalar::Real;
use crate::{Error, Result};

/// Electrode drive geometry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Geometry {
    /// Uniform field at the ion: drives carrier transitions.
    Dipole,
    /// Field gradient with a null at the trap center: drives sidebands,
    /// plus a residual carrier when the ion sits off the null.
    Quadrupole,
}

/// Molecular-ion parameters.
///
/// The qubit is a pair of opposite-parity states |g⟩, |e⟩ connected by an
/// electric-dipole transition; |a⟩ is an optional long-lived shelf state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MoleculeConfig<T> {
    /// Transition dipole moment d = ⟨e|d|g⟩·x̂, C·m.
    pub dipole_moment: T,
    /// Ion mass, kg.
    pub mass: T,
    /// Qubit splitting Δ, rad/s.
    pub splitting: T,
    /// Whether the auxiliary shelf state |a⟩ is modeled.
    pub has_aux: bool,
}

impl<T: Real> MoleculeConfig<T> {
    /// ²⁹Si¹⁶O⁺: d = 2.3 D, m = 45 u, Δ = 2π·1 GHz, with a shelf state.
    pub fn silicon_monoxide() -> Self {
        Self {
            dipole_moment: T::of(2.3 * constants::DEBYE),
            mass: T::of(45.0 * constants::ATOMIC_MASS),
            splitting: T::tau() * T::of(1e9),
            has_aux: true,
        }
    }

    /// Checks positivity and Δ ≫ ω_p (ratio > 100) for every mode.
    pub fn validate(&self, modes: &[ModeSpec<T>]) -> Result<()> {
        if self.dipole_moment <= T::zero() {
            return Err(Error::Config("dipole moment must be positive".into()));
        }
        if self.mass <= T::zero() {
            return Err(Error::Config("mass must be positive".into()));
        }
        if self.splitting <= T::zero() {
            return Err(Error::Config("qubit splitting must be positive".into()));
        }
        for (p, mode) in modes.iter().enumerate() {
            if self.splitting <= T::of(100.0) * mode.frequency {
                return Err(Error::Config(format!(
                    "qubit splitting must exceed 100x the mode frequency (mode {p})"
                )));
            }
        }
        Ok(())
    }
}

/// Trap parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrapConfig<T> {
    /// Trap field radius r_o, m.
    pub field_radius: T,
    /// Radial center-of-mass secular frequency ω₁, rad/s.
    pub secular_frequency: T,
    /// Equilibrium offset of the ion from the microwave field null, m.
    pub x_eq: T,
    /// Number of ions in the chain.
    pub n_ions: usize,
}

impl<T: Real> TrapConfig<T> {
    pub fn validate(&self) -> Result<()> {
        if self.field_radius <= T::zero() {
            return Err(Error::Config("field radius must be positive".into()));
        }
        if self.secular_frequency <= T::zero() {
            return Err(Error::Config("secular frequency must be positive".into()));
        }
        if self.x_eq.abs() >= T::of(0.1) * self.field_radius {
            return Err(Error::Config(
                "|x_eq| must be small compared to the field radius (< 0.1 r_o)".into(),
            ));
        }
        if self.n_ions == 0 {
            return Err(Error::Config("need at least one ion".into()));
        }
        Ok(())
    }
}

/// One normal mode of the chain: frequency and per-ion participation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeSpec<T> {
    /// Mode angular frequency ω_p, rad/s.
    pub frequency: T,
    /// Participation vector b_p^(i), one entry per ion, Σᵢ b² = 1.
    pub participation: Vec<T>,
}

impl<T: Real> ModeSpec<T> {
    /// Single ion, unit participation.
    pub fn single_ion(frequency: T) -> Self {
        Self {
            frequency,
            participation: vec![T::one()],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.frequency <= T::zero() {
            return Err(Error::Config("mode frequency must be positive".into()));
        }
        let norm_sq: T = self
            .participation
            .iter()
            .fold(T::zero(), |acc, &b| acc + b * b);
        if (norm_sq - T::one()).abs() > T::of(1e-9) {
            return Err(Error::Config(
                "mode participation vector must be normalized".into(),
            ));
        }
        Ok(())
    }

    /// Σᵢ b_p^(i) b_q^(i); 0 for distinct modes of the same chain.
    pub fn overlap(&self, other: &Self) -> T {
        self.participation
            .iter()
            .zip(&other.participation)
            .fold(T::zero(), |acc, (&a, &b)| acc + a * b)
    }
}

/// One microwave tone applied to the trap electrodes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriveTone<T> {
    pub geometry: Geometry,
    /// Tone angular frequency ω_m, rad/s.
    pub frequency: T,
    /// Voltage amplitude V_m, V.
    pub amplitude: T,
    /// Tone phase φ_m, rad.
    pub phase: T,
}

impl<T: Real> DriveTone<T> {
    pub fn validate(&self) -> Result<()> {
        if self.amplitude < T::zero() {
            return Err(Error::Config("tone amplitude must be nonnegative".into()));
        }
        Ok(())
    }
}

/// Two-qubit gate parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GateConfig<T> {
    /// Gate detuning γ from the target sideband, rad/s.
    pub detuning: T,
    /// Index of the target motional mode q.
    pub target_mode: usize,
    /// Motional temperature, K.
    pub temperature: T,
}

impl<T: Real> GateConfig<T> {
    pub fn validate(&self) -> Result<()> {
        if self.detuning <= T::zero() {
            return Err(Error::Config("gate detuning must be positive".into()));
        }
        if self.temperature < T::zero() {
            return Err(Error::Config("temperature must be nonnegative".into()));
        }
        Ok(())
    }
}

/// Carrier Rabi frequency Ω = d·V_m / (2 r_o ħ), rad/s.
///
/// Ω is the shared prefactor of both the dipole- and quadrupole-geometry
/// couplings.
pub fn rabi_frequency<T: Real>(
    mol: &MoleculeConfig<T>,
    tone: &DriveTone<T>,
    trap: &TrapConfig<T>,
) -> T {
    mol.dipole_moment * tone.amplitude / (T::of(2.0) * trap.field_radius * constants::hbar::<T>())
}

/// Same as [`rabi_frequency`] from a bare voltage amplitude.
pub fn rabi_frequency_v<T: Real>(mol: &MoleculeConfig<T>, amplitude: T, trap: &TrapConfig<T>) -> T {
    mol.dipole_moment * amplitude / (T::of(2.0) * trap.field_radius * constants::hbar::<T>())
}

/// Gradient coupling η_q^(i) = √(ħ / (2 m ω_q r_o²)) · b_q^(i).
///
/// Dimensionless; plays the role of a Lamb-Dicke parameter with the trap
/// electrode spacing as the length scale instead of an optical wavelength.
pub fn eta<T: Real>(
    mode: &ModeSpec<T>,
    ion_index: usize,
    mol: &MoleculeConfig<T>,
    trap: &TrapConfig<T>,
) -> Result<T> {
    let b = *mode
        .participation
        .get(ion_index)
        .ok_or(Error::InvalidMolecule {
            index: ion_index,
            n_molecules: mode.participation.len(),
        })?;
    let r = trap.field_radius;
    Ok((constants::hbar::<T>() / (T::of(2.0) * mol.mass * mode.frequency * r * r)).sqrt() * b)
}

/// Bose–Einstein occupation n̄ = 1 / (exp(ħω/k_B T) − 1); 0 at T = 0.
pub fn thermal_occupation<T: Real>(temperature: T, omega: T) -> T {
    if temperature <= T::zero() {
        return T::zero();
    }
    let x = constants::hbar::<T>() * omega / (constants::boltzmann::<T>() * temperature);
    T::one() / x.exp_m1()
}

/// The two radial modes of a two-ion chain with equal masses: the
/// center-of-mass mode at ω₁ with b = (1,1)/√2 and the relative mode at
/// ω₁/√3 with b = (1,−1)/√2.
pub fn two_ion_modes<T: Real>(trap: &TrapConfig<T>) -> Result<(ModeSpec<T>, ModeSpec<T>)> {
    if trap.n_ions != 2 {
        return Err(Error::Unsupported(format!(
            "two-ion mode model requires exactly 2 ions, got {}",
            trap.n_ions
        )));
    }
    let w1 = trap.secular_frequency;
    let inv_sqrt2 = T::one() / T::of(2.0).sqrt();
    let com = ModeSpec {
        frequency: w1,
        participation: vec![inv_sqrt2, inv_sqrt2],
    };
    let rel = ModeSpec {
        frequency: w1 / T::of(3.0).sqrt(),
        participation: vec![inv_sqrt2, -inv_sqrt2],
    };
    Ok((com, rel))
}

/// Two-qubit gate time t = πγ / (2 Ω² η_q^(1) η_q^(2)).
pub fn ms_gate_time<T: Real>(omega_rabi: T, eta1: T, eta2: T, detuning: T) -> Result<T> {
    let coupling = eta1 * eta2;
    if coupling <= T::zero() {
        return Err(Error::Config(
            "zero spin-motion coupling: eta1 * eta2 must be positive".into(),
        ));
    }
    Ok(T::pi() * detuning / (T::of(2.0) * omega_rabi * omega_rabi * coupling))
}

/// Validity ratio γ / (2 Ω η_q) of the analytic Mølmer–Sørensen propagator.
pub fn ms_validity_ratio<T: Real>(omega_rabi: T, eta_q: T, detuning: T) -> T {
    detuning / (T::of(2.0) * omega_rabi * eta_q)
}

/// Worst-case phase |Φ_C| ≤ 8 Ω x_eq / (r_o (ω_q + γ)) accumulated from the
/// residual carrier drive on an off-null ion during the two-qubit gate.
pub fn carrier_phase_bound<T: Real>(omega_rabi: T, x_eq: T, r_o: T, omega_q: T, detuning: T) -> T {
    T::of(8.0) * omega_rabi * x_eq / (r_o * (omega_q + detuning))
}

/// Largest equilibrium offset x_eq compatible with a target gate infidelity.
///
/// Inverts Φ_C²/2 = infidelity with the bound of [`carrier_phase_bound`];
/// at the 1e-4 target this reduces to ħ(ω_q + γ) r_o² / (200 √2 V_m d).
pub fn xeq_tolerance<T: Real>(
    target_infidelity: T,
    omega_q: T,
    detuning: T,
    r_o: T,
    amplitude: T,
    dipole_moment: T,
) -> T {
    let omega_rabi = dipole_moment * amplitude / (T::of(2.0) * r_o * constants::hbar::<T>());
    (T::of(2.0) * target_infidelity).sqrt() * r_o * (omega_q + detuning) / (T::of(8.0) * omega_rabi)
}

/// Electric-quadrupole carrier rate estimate e a₀² · 2V / (ħ r_o²), rad/s.
///
/// Order-of-magnitude rate for driving ΔN = 2 rotational transitions with
/// the trap's own field gradient, e.g. for shelving.
pub fn quadrupole_carrier_rate<T: Real>(voltage: T, r_o: T) -> T {
    let ea02 =
        T::of(constants::ELEMENTARY_CHARGE * constants::BOHR_RADIUS * constants::BOHR_RADIUS);
    ea02 * T::of(2.0) * voltage / (constants::hbar::<T>() * r_o * r_o)
}
