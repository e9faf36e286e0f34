//! Analytic gate propagators and the SPAM/QND measurement protocol.
//!
//! The state-dependent displacement [`u_displacement`], the two-qubit
//! entangling propagator [`u_ms`], single-qubit rotations, and a
//! state-preparation-and-measurement protocol that reads out the qubit via
//! deposited motional energy with an ideal threshold detector.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::fock::{HilbertSpace, MixedEnsemble, Operator, StateVector, LVL_AUX, LVL_E, LVL_G};
use crate::scalar::{im, re, Real, C};
use crate::{fock, Error, Result};

/// Result of applying an analytic gate to a state.
#[derive(Debug, Clone)]
pub struct GateOutcome<T: Real> {
    pub final_state: StateVector<T>,
    /// Fidelity against the ideal Bell target (two-qubit gates only).
    pub fidelity: T,
    /// Accumulated σ_Xσ_X angle θ.
    pub accumulated_phase: T,
    pub duration: T,
}

/// State-dependent displacement propagator of the symmetric bichromatic
/// drive: U = |−X⟩⟨−X| D(2iΩηt) + |+X⟩⟨+X| D(−2iΩηt), identity on the shelf
/// level if present.
pub fn u_displacement<T: Real>(
    space: &HilbertSpace,
    molecule: usize,
    mode: usize,
    omega_rabi: T,
    eta: T,
    t: T,
) -> Result<Operator<T>> {
    let beta = T::of(2.0) * omega_rabi * eta * t;
    let d_plus = space.displacement(mode, C::new(T::zero(), -beta))?;
    let d_minus = space.displacement(mode, C::new(T::zero(), beta))?;
    let pp = space.x_projector(molecule, 1.0)?;
    let pm = space.x_projector(molecule, -1.0)?;
    let mut u = pp.mul(&d_plus)?.add(&pm.mul(&d_minus)?)?;
    if space.internal_dim(molecule)? == 3 {
        u = u.add(&space.level_projector(molecule, LVL_AUX)?)?;
    }
    Ok(u)
}

/// Two-qubit entangling propagator U = exp(−iθ σ_X^(1) σ_X^(2)) with
/// θ = 2Ω²η₁η₂ t / γ; acts trivially on the motion.
pub fn u_ms<T: Real>(
    space: &HilbertSpace,
    omega_rabi: T,
    eta1: T,
    eta2: T,
    detuning: T,
    t: T,
) -> Result<Operator<T>> {
    if space.n_molecules() != 2 {
        return Err(Error::Config(
            "entangling propagator needs a two-molecule space".into(),
        ));
    }
    if detuning <= T::zero() {
        return Err(Error::Config("detuning must be positive".into()));
    }
    let theta = ms_angle(omega_rabi, eta1, eta2, detuning, t);
    let xx = space
        .pauli::<T>(0, fock::Pauli::X)?
        .mul(&space.pauli(1, fock::Pauli::X)?)?;
    // exp(−iθ XX) = cos θ − i sin θ XX since (XX)² = 1
    let u = space
        .identity::<T>()
        .scale(re(theta.cos()))
        .add(&xx.scale(-im::<T>() * re(theta.sin())))?;
    Ok(u)
}

/// Accumulated σ_Xσ_X angle θ = 2Ω²η₁η₂ t / γ.
pub fn ms_angle<T: Real>(omega_rabi: T, eta1: T, eta2: T, detuning: T, t: T) -> T {
    T::of(2.0) * omega_rabi * omega_rabi * eta1 * eta2 * t / detuning
}

/// Bloch rotation exp(−i(θ/2)(cos φ σ_X + sin φ σ_Y)) on the (g, e) block of
/// one molecule; identity on the shelf level.
pub fn single_qubit_rotation<T: Real>(
    space: &HilbertSpace,
    molecule: usize,
    phi: T,
    theta: T,
) -> Result<Operator<T>> {
    let d = space.internal_dim(molecule)?;
    let c = (theta * T::of(0.5)).cos();
    let s = (theta * T::of(0.5)).sin();
    let mut local: DMatrix<C<T>> = DMatrix::identity(d, d);
    local[(LVL_G, LVL_G)] = re(c);
    local[(LVL_E, LVL_E)] = re(c);
    // −i sin(θ/2) (cos φ X + sin φ Y) on the block
    local[(LVL_G, LVL_E)] = -im::<T>() * re(s) * C::new(phi.cos(), -phi.sin());
    local[(LVL_E, LVL_G)] = -im::<T>() * re(s) * C::new(phi.cos(), phi.sin());
    space.internal_op(molecule, &local)
}

/// The readout basis change: maps |e⟩ → |+X⟩ and |g⟩ → |−X⟩
/// (rotation θ = π/2 about the −Y axis).
pub fn hadamard_like<T: Real>(space: &HilbertSpace, molecule: usize) -> Result<Operator<T>> {
    single_qubit_rotation(space, molecule, -T::pi() * T::of(0.5), T::pi() * T::of(0.5))
}

/// Shelving unitary: swaps |g⟩ ↔ |a⟩, leaving |e⟩ alone.
pub fn shelve<T: Real>(space: &HilbertSpace, molecule: usize) -> Result<Operator<T>> {
    let d = space.internal_dim(molecule)?;
    if d != 3 {
        return Err(Error::Config(
            "shelving requires the auxiliary level (internal dimension 3)".into(),
        ));
    }
    let mut local: DMatrix<C<T>> = DMatrix::zeros(d, d);
    local[(LVL_AUX, LVL_G)] = re(T::one());
    local[(LVL_G, LVL_AUX)] = re(T::one());
    local[(LVL_E, LVL_E)] = re(T::one());
    space.internal_op(molecule, &local)
}

/// Fidelity ⟨target|ρ|target⟩ of a two-qubit reduced internal density matrix
/// against the ideal image of [`u_ms`] on |g,g⟩: cos θ |g,g⟩ − i sin θ |e,e⟩.
pub fn bell_fidelity<T: Real>(rho_internal: &DMatrix<C<T>>, theta: T) -> Result<T> {
    if rho_internal.nrows() != 4 || rho_internal.ncols() != 4 {
        return Err(Error::Unsupported(
            "Bell fidelity expects a 4x4 two-qubit internal density matrix".into(),
        ));
    }
    // internal flat index: |gg⟩ = 0, |ge⟩ = 1, |eg⟩ = 2, |ee⟩ = 3
    let mut target: DVector<C<T>> = DVector::zeros(4);
    target[0] = re(theta.cos());
    target[3] = -im::<T>() * re(theta.sin());
    let f = (target.adjoint() * rho_internal * &target)[(0, 0)].re;
    if f < -T::of(1e-9) || f > T::one() + T::of(1e-9) {
        return Err(Error::Config(format!(
            "fidelity {:.6} outside [0, 1]; input is not a density matrix",
            f.to_f64().unwrap_or(f64::NAN)
        )));
    }
    Ok(f)
}

/// Detector outcome of one SPAM measurement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Herald {
    Bright,
    Dark,
}

/// Parameters of the SPAM measurement branch.
#[derive(Debug, Clone, Copy)]
pub struct SpamConfig<T> {
    /// Carrier Rabi frequency Ω of the bichromatic drive, rad/s.
    pub omega_rabi: T,
    /// Gradient coupling η of the readout mode.
    pub eta: T,
    /// Thermal occupation of the readout mode.
    pub n_bar: T,
    /// Thermal-mixture truncation weight.
    pub thermal_epsilon: T,
    /// Bichromatic drive duration t_d; `None` picks the duration at which
    /// |α|² = max(10 n̄, 25).
    pub drive_time: Option<T>,
    /// Detection threshold in units of ħω_q; `None` picks
    /// max(4 n̄, (2Ωη t_d)²/4).
    pub threshold: Option<T>,
    /// RNG seed for the projective branch draw.
    pub seed: u64,
    /// Extra Fock levels on top of the computed requirement.
    pub fock_margin: usize,
}

impl<T: Real> SpamConfig<T> {
    pub fn resolved_drive_time(&self) -> T {
        match self.drive_time {
            Some(t) => t,
            None => {
                let alpha = T::of(10.0)
                    .max(self.n_bar * T::of(10.0))
                    .sqrt()
                    .max(T::of(5.0));
                alpha / (T::of(2.0) * self.omega_rabi * self.eta)
            }
        }
    }

    pub fn resolved_threshold(&self) -> T {
        match self.threshold {
            Some(th) => th,
            None => {
                let alpha = T::of(2.0) * self.omega_rabi * self.eta * self.resolved_drive_time();
                (T::of(4.0) * self.n_bar).max(alpha * alpha * T::of(0.25))
            }
        }
    }
}

/// Step-by-step record of one SPAM run.
#[derive(Debug, Clone, Serialize)]
pub struct SpamRecord<T> {
    pub herald: Herald,
    /// Deposited motional energy of the realized branch, units of ħω_q.
    pub delta_e: T,
    /// Post-measurement computational label: "e" for bright, "g" for dark.
    pub label: char,
    /// Probability of the bright branch before the projective draw.
    pub p_bright: T,
    /// Mean deposited energy of the dark branch, if populated.
    pub dark_mean: Option<T>,
    /// Mean deposited energy of the bright branch, if populated.
    pub bright_mean: Option<T>,
    pub threshold: T,
    pub drive_time: T,
    pub steps: Vec<String>,
}

/// Post-measurement state, mapped back to computational labels so the
/// protocol can be repeated without re-preparation.
#[derive(Debug, Clone)]
pub struct SpamOutcome<T: Real> {
    pub record: SpamRecord<T>,
    pub post: MixedEnsemble<T>,
}

/// Runs the four-step measurement on a fresh thermal motional state with the
/// given internal qubit amplitudes (c_g, c_e).
///
/// Steps: shelve |g⟩ → |a⟩; map |e⟩ → |+X⟩; bichromatic state-dependent
/// displacement; ideal energy-threshold detection of the co-trapped ion. The
/// detector projects onto the shelf/qubit branch, so a second run
/// reproduces the herald deterministically (QND).
pub fn spam_protocol<T: Real>(c_g: C<T>, c_e: C<T>, cfg: &SpamConfig<T>) -> Result<SpamOutcome<T>> {
    let norm = (c_g.norm_sqr() + c_e.norm_sqr()).sqrt();
    if (norm - T::one()).abs() > T::of(1e-9) {
        return Err(Error::Config(
            "initial internal amplitudes must be normalized".into(),
        ));
    }
    let t_d = cfg.resolved_drive_time();
    let alpha = T::of(2.0) * cfg.omega_rabi * cfg.eta * t_d;
    let weights = fock::thermal_fock_weights(cfg.n_bar, cfg.thermal_epsilon);
    let dim = fock::required_mode_dim(
        weights.len(),
        alpha.to_f64().unwrap_or(f64::NAN),
        cfg.fock_margin,
    );
    let space = HilbertSpace::new(vec![3], vec![dim])?;
    let mut members = Vec::with_capacity(weights.len());
    for (n, &w) in weights.iter().enumerate() {
        let mut state = StateVector::basis(&space, &[LVL_G], &[n])?;
        let g_idx = space.compose(&[LVL_G], &[n])?;
        let e_idx = space.compose(&[LVL_E], &[n])?;
        state.amplitudes_mut()[g_idx] = c_g;
        state.amplitudes_mut()[e_idx] = c_e;
        members.push((w, state));
    }
    run_measurement(MixedEnsemble { members }, cfg, cfg.seed)
}

/// Repeats the measurement on the post state of a previous run.
pub fn spam_remeasure<T: Real>(
    previous: &SpamOutcome<T>,
    cfg: &SpamConfig<T>,
) -> Result<SpamOutcome<T>> {
    run_measurement(previous.post.clone(), cfg, cfg.seed.wrapping_add(1))
}

fn run_measurement<T: Real>(
    ensemble: MixedEnsemble<T>,
    cfg: &SpamConfig<T>,
    seed: u64,
) -> Result<SpamOutcome<T>> {
    let space = ensemble.members[0].1.space().clone();
    let t_d = cfg.resolved_drive_time();
    let threshold = cfg.resolved_threshold();
    let mut steps = Vec::new();

    let n_before = ensemble.mean_phonons(0)?;
    steps.push(format!(
        "prepare: mean phonons {:.4}",
        n_before.to_f64().unwrap_or(f64::NAN)
    ));

    let shelve_op = shelve::<T>(&space, 0)?;
    let had = hadamard_like::<T>(&space, 0)?;
    let displace = u_displacement(&space, 0, 0, cfg.omega_rabi, cfg.eta, t_d)?;

    let mut driven = Vec::with_capacity(ensemble.members.len());
    for (w, state) in &ensemble.members {
        let s = displace.apply(&had.apply(&shelve_op.apply(state)?)?)?;
        driven.push((*w, s));
    }
    steps.push("shelve g->a".into());
    steps.push("map e -> +X".into());
    steps.push(format!(
        "bichromatic displacement for {:.3e} s",
        t_d.to_f64().unwrap_or(f64::NAN)
    ));

    // branch statistics: dark = shelf level, bright = qubit block
    let mut p_dark = T::zero();
    let mut p_bright = T::zero();
    let mut n_dark = T::zero();
    let mut n_bright = T::zero();
    for (w, state) in &driven {
        for (idx, a) in state.amplitudes().iter().enumerate() {
            let prob = a.norm_sqr() * *w;
            if prob == T::zero() {
                continue;
            }
            let (il, fl) = space.decompose(idx);
            let n = T::of(fl[0] as f64);
            if il[0] == LVL_AUX {
                p_dark += prob;
                n_dark += prob * n;
            } else {
                p_bright += prob;
                n_bright += prob * n;
            }
        }
    }
    let tiny = T::of(1e-12);
    let dark_mean = (p_dark > tiny).then(|| n_dark / p_dark - n_before);
    let bright_mean = (p_bright > tiny).then(|| n_bright / p_bright - n_before);
    if let Some(dm) = dark_mean {
        if dm >= threshold {
            return Err(Error::AmbiguousThreshold {
                threshold: threshold.to_f64().unwrap_or(f64::NAN),
                dark_mean: dm.to_f64().unwrap_or(f64::NAN),
                bright_mean: bright_mean
                    .map(|b| b.to_f64().unwrap_or(f64::NAN))
                    .unwrap_or(f64::NAN),
            });
        }
    }
    if let Some(bm) = bright_mean {
        if bm < threshold {
            return Err(Error::AmbiguousThreshold {
                threshold: threshold.to_f64().unwrap_or(f64::NAN),
                dark_mean: dark_mean
                    .map(|d| d.to_f64().unwrap_or(f64::NAN))
                    .unwrap_or(f64::NAN),
                bright_mean: bm.to_f64().unwrap_or(f64::NAN),
            });
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let draw: f64 = rng.gen();
    let bright = draw < p_bright.to_f64().unwrap_or(0.0);
    steps.push(format!(
        "threshold detector: p_bright {:.6}, drew {}",
        p_bright.to_f64().unwrap_or(f64::NAN),
        if bright { "bright" } else { "dark" }
    ));

    // collapse onto the realized branch and map back to computational labels
    let had_inv = had.adjoint();
    let p_branch = if bright { p_bright } else { p_dark };
    let mut post_members = Vec::with_capacity(driven.len());
    for (w, state) in &driven {
        let mut amps = state.amplitudes().clone();
        let mut kept = T::zero();
        for (idx, a) in amps.iter_mut().enumerate() {
            let (il, _) = space.decompose(idx);
            let in_branch = (il[0] == LVL_AUX) != bright;
            if in_branch {
                kept += a.norm_sqr();
            } else {
                *a = C::new(T::zero(), T::zero());
            }
        }
        if kept <= tiny {
            continue;
        }
        let mut s = StateVector::from_amplitudes(space.clone(), amps)?;
        s.normalize();
        // bright branch support is |+X⟩: map back to |e⟩; dark is |a⟩ → |g⟩
        let s = shelve_op.apply(&had_inv.apply(&s)?)?;
        post_members.push((*w * kept / p_branch, s));
    }
    steps.push("map back: +X -> e, a -> g".into());

    let branch_mean = if bright { bright_mean } else { dark_mean };
    let record = SpamRecord {
        herald: if bright { Herald::Bright } else { Herald::Dark },
        delta_e: branch_mean.unwrap_or(T::zero()),
        label: if bright { 'e' } else { 'g' },
        p_bright,
        dark_mean,
        bright_mean,
        threshold,
        drive_time: t_d,
        steps,
    };
    Ok(SpamOutcome {
        record,
        post: MixedEnsemble {
            members: post_members,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{self, EvolveOptions};
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    type C64 = C<f64>;

    fn plus_x(space: &HilbertSpace, sign: f64, fock: usize) -> StateVector<f64> {
        let g = StateVector::<f64>::basis(space, &[LVL_G], &[fock]).unwrap();
        let e = StateVector::<f64>::basis(space, &[LVL_E], &[fock]).unwrap();
        let mut out = g.clone();
        for i in 0..space.dim() {
            out.amplitudes_mut()[i] = (g.amplitudes()[i] + e.amplitudes()[i] * re(sign))
                * re(std::f64::consts::FRAC_1_SQRT_2);
        }
        out
    }

    #[test]
    fn displacement_gate_basics() {
        let sp = HilbertSpace::new(vec![2], vec![32]).unwrap();
        // t = 0 → identity
        let u0 = u_displacement(&sp, 0, 0, 1.0, 1.0, 0.0).unwrap();
        assert!((u0.matrix() - sp.identity::<f64>().matrix()).norm() < 1e-10);

        let (omega, eta, t) = (2.0, 0.5, 1.3);
        let u = u_displacement(&sp, 0, 0, omega, eta, t).unwrap();
        assert!(u.unitarity_defect() < 1e-10);
        let beta = 2.0 * omega * eta * t;
        // on |g⟩|0⟩: ⟨n⟩ = (2Ωηt)², independent of the qubit state
        let g0 = StateVector::<f64>::basis(&sp, &[LVL_G], &[0]).unwrap();
        let out = u.apply(&g0).unwrap();
        assert_relative_eq!(out.mean_phonons(0).unwrap(), beta * beta, epsilon = 1e-9);
        // energy deposition identical on |+X⟩ and |−X⟩ exactly
        let ep = u
            .apply(&plus_x(&sp, 1.0, 0))
            .unwrap()
            .mean_phonons(0)
            .unwrap();
        let em = u
            .apply(&plus_x(&sp, -1.0, 0))
            .unwrap()
            .mean_phonons(0)
            .unwrap();
        assert_abs_diff_eq!(ep, em, epsilon = 1e-12);
        assert_relative_eq!(ep, beta * beta, epsilon = 1e-9);
    }

    #[test]
    fn displacement_gate_matches_numeric_propagator() {
        let sp = HilbertSpace::new(vec![2], vec![28]).unwrap();
        let (omega, eta, t) = (1.0, 0.4, 1.5);
        let h = dynamics::build_static_bichromatic(&sp, &[(0, 0, 2.0 * omega * eta)]).unwrap();
        let u = u_displacement(&sp, 0, 0, omega, eta, t).unwrap();
        for (lvl, fockn) in [(LVL_G, 0), (LVL_E, 0), (LVL_G, 2)] {
            let psi0 = StateVector::<f64>::basis(&sp, &[lvl], &[fockn]).unwrap();
            let numeric = dynamics::evolve(&h, &psi0, &EvolveOptions::to(t)).unwrap();
            let analytic = u.apply(&psi0).unwrap();
            let overlap = numeric
                .final_state
                .overlap(&analytic)
                .unwrap()
                .norm_sqr()
                .sqrt();
            assert!(1.0 - overlap < 1e-4, "overlap {overlap}");
        }
    }

    #[test]
    fn ms_gate_populations() {
        let sp = HilbertSpace::new(vec![2, 2], vec![2]).unwrap();
        let (omega, eta, gamma) = (100.0, 0.01, 5.0);
        let t_quarter = std::f64::consts::FRAC_PI_4 * gamma / (2.0 * omega * omega * eta * eta);
        let gg = StateVector::<f64>::basis(&sp, &[LVL_G, LVL_G], &[0]).unwrap();

        // θ = π/4: Bell state
        let u = u_ms(&sp, omega, eta, eta, gamma, t_quarter).unwrap();
        assert!(u.unitarity_defect() < 1e-12);
        let bell = u.apply(&gg).unwrap();
        assert_relative_eq!(
            bell.level_population(0, LVL_G).unwrap(),
            0.5,
            epsilon = 1e-10
        );
        let rho = bell.reduced_internal();
        assert_relative_eq!(rho[(0, 0)].re, 0.5, epsilon = 1e-10);
        assert_relative_eq!(rho[(3, 3)].re, 0.5, epsilon = 1e-10);
        assert_relative_eq!(rho[(3, 0)].im, -0.5, epsilon = 1e-10);
        assert_relative_eq!(
            bell_fidelity(&rho, std::f64::consts::FRAC_PI_4).unwrap(),
            1.0,
            epsilon = 1e-10
        );

        // θ = π/2: full transfer to |e,e⟩
        let u2 = u_ms(&sp, omega, eta, eta, gamma, 2.0 * t_quarter).unwrap();
        let ee = u2.apply(&gg).unwrap();
        let rho2 = ee.reduced_internal();
        assert_relative_eq!(rho2[(3, 3)].re, 1.0, epsilon = 1e-10);

        // |+X,+X⟩ is an eigenstate for any t
        let px = {
            let mut s = gg.clone();
            for (i1, i2) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
                let idx = sp.compose(&[i1, i2], &[0]).unwrap();
                s.amplitudes_mut()[idx] = re(0.5);
            }
            s.amplitudes_mut()[sp.compose(&[0, 0], &[0]).unwrap()] = re(0.5);
            s
        };
        let out = u.apply(&px).unwrap();
        assert_relative_eq!(
            out.overlap(&px).unwrap().norm_sqr().sqrt(),
            1.0,
            epsilon = 1e-10
        );
    }

    #[test]
    fn bell_fidelity_edge_cases() {
        let theta = std::f64::consts::FRAC_PI_4;
        // maximally mixed internal state → 1/4
        let rho = DMatrix::<C64>::identity(4, 4) * re(0.25);
        assert_relative_eq!(bell_fidelity(&rho, theta).unwrap(), 0.25, epsilon = 1e-12);
        let bad = DMatrix::<C64>::identity(3, 3);
        assert!(bell_fidelity(&bad, theta).is_err());
    }

    #[test]
    fn rotations() {
        let sp = HilbertSpace::new(vec![2], vec![2]).unwrap();
        // θ = π about φ = 0 is σ_X up to phase (−i)
        let u = single_qubit_rotation(&sp, 0, 0.0, std::f64::consts::PI).unwrap();
        let x = sp
            .pauli::<f64>(0, fock::Pauli::X)
            .unwrap()
            .scale(-im::<f64>());
        assert!((u.matrix() - x.matrix()).norm() < 1e-12);

        // hadamard_like maps |e⟩ → |+X⟩
        let h = hadamard_like::<f64>(&sp, 0).unwrap();
        let e = StateVector::<f64>::basis(&sp, &[LVL_E], &[0]).unwrap();
        let px = plus_x(&sp, 1.0, 0);
        assert_relative_eq!(
            h.apply(&e).unwrap().overlap(&px).unwrap().re,
            1.0,
            epsilon = 1e-12
        );

        // two θ = π/2 rotations compose to θ = π
        let q = single_qubit_rotation(&sp, 0, 0.3, std::f64::consts::FRAC_PI_2).unwrap();
        let full = single_qubit_rotation(&sp, 0, 0.3, std::f64::consts::PI).unwrap();
        assert!((q.mul(&q).unwrap().matrix() - full.matrix()).norm() < 1e-12);

        // shelf level untouched
        let sp3 = HilbertSpace::new(vec![3], vec![2]).unwrap();
        let u3 = single_qubit_rotation::<f64>(&sp3, 0, 0.0, 1.1).unwrap();
        let aux = StateVector::<f64>::basis(&sp3, &[LVL_AUX], &[0]).unwrap();
        assert_relative_eq!(
            u3.apply(&aux).unwrap().overlap(&aux).unwrap().re,
            1.0,
            epsilon = 1e-12
        );
        assert!(u3.unitarity_defect() < 1e-12);
    }

    fn test_cfg() -> SpamConfig<f64> {
        SpamConfig {
            omega_rabi: 1.0e3,
            eta: 1.0e-2,
            n_bar: 0.8,
            thermal_epsilon: 1e-6,
            drive_time: None,
            threshold: None,
            seed: 42,
            fock_margin: 8,
        }
    }

    #[test]
    fn spam_classifies_basis_states() {
        let cfg = test_cfg();
        // |g⟩ → dark, label g, ΔE ≈ 0
        let dark = spam_protocol(C64::new(1.0, 0.0), C64::new(0.0, 0.0), &cfg).unwrap();
        assert_eq!(dark.record.herald, Herald::Dark);
        assert_eq!(dark.record.label, 'g');
        assert_abs_diff_eq!(dark.record.delta_e, 0.0, epsilon = 1e-9);
        assert_abs_diff_eq!(dark.record.p_bright, 0.0, epsilon = 1e-12);

        // |e⟩ → bright, label e, ΔE ≈ (2Ωη t_d)²
        let bright = spam_protocol(C64::new(0.0, 0.0), C64::new(1.0, 0.0), &cfg).unwrap();
        assert_eq!(bright.record.herald, Herald::Bright);
        assert_eq!(bright.record.label, 'e');
        let alpha = 2.0 * cfg.omega_rabi * cfg.eta * bright.record.drive_time;
        assert_relative_eq!(bright.record.delta_e, alpha * alpha, max_relative = 1e-6);
        assert!(bright.record.delta_e >= bright.record.threshold);
    }

    #[test]
    fn spam_superposition_is_qnd() {
        let cfg = test_cfg();
        let amp = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        let first = spam_protocol(amp, amp, &cfg).unwrap();
        assert_relative_eq!(first.record.p_bright, 0.5, epsilon = 1e-9);
        // rerunning the measurement on the post state repeats the herald
        // with certainty, several times over
        let mut prev = first;
        for _ in 0..3 {
            let next = spam_remeasure(&prev, &cfg).unwrap();
            assert_eq!(next.record.herald, prev.record.herald);
            let p = next.record.p_bright;
            assert!(p < 1e-9 || p > 1.0 - 1e-9, "not projective: p_bright {p}");
            prev = next;
        }
    }

    #[test]
    fn spam_ambiguous_threshold() {
        let mut cfg = test_cfg();
        let alpha = 2.0 * cfg.omega_rabi * cfg.eta * cfg.resolved_drive_time();
        cfg.threshold = Some(alpha * alpha * 10.0);
        let err = spam_protocol(C64::new(0.0, 0.0), C64::new(1.0, 0.0), &cfg).unwrap_err();
        assert!(matches!(err, Error::AmbiguousThreshold { .. }));
    }

    #[test]
    fn spam_seed_determinism() {
        let cfg = test_cfg();
        let amp = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        let a = spam_protocol(amp, amp, &cfg).unwrap();
        let b = spam_protocol(amp, amp, &cfg).unwrap();
        assert_eq!(a.record.herald, b.record.herald);
        let mut cfg2 = cfg;
        cfg2.seed = 7;
        // a different seed may flip the draw but stays valid
        let c = spam_protocol(amp, amp, &cfg2).unwrap();
        assert_relative_eq!(c.record.p_bright, 0.5, epsilon = 1e-9);
    }
}
