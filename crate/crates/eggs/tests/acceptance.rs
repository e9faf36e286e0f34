//! End-to-end acceptance checks for the full pipeline, one criterion per
//! test. Each prints a single PASS/FAIL line; run with `--nocapture` to see
//! them for passing tests.

use std::f64::consts::{FRAC_PI_4, TAU};

use eggs::config::ExperimentConfig;
use eggs::dynamics::{self, EvolveOptions};
use eggs::fock::{HilbertSpace, StateVector, LVL_E, LVL_G};
use eggs::gates::{self, Herald, SpamConfig};
use eggs::model;
use eggs::scenarios::{heating_scenario, ms_scenario, MsInitial};
use eggs::ultrafast::{self, coherent_local, fock_local};
use eggs::C;
use nalgebra::DVector;

type C64 = C<f64>;

fn report(name: &str, outcome: Result<(), String>) {
    match outcome {
        Ok(()) => println!("[acceptance] {name}: PASS"),
        Err(why) => {
            println!("[acceptance] {name}: FAIL ({why})");
            panic!("{name}: {why}");
        }
    }
}

fn check(ok: bool, why: impl Fn() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(why())
    }
}

#[test]
fn criterion_1_heating_law() {
    report(
        "1 heating law",
        (|| {
            let mut cfg = ExperimentConfig::<f64>::default();
            cfg.t_end = Some(100e-6);
            cfg.n_samples = 51;
            let run = heating_scenario(&cfg, false).map_err(|e| e.to_string())?;
            let omega = cfg.omega_rabi();
            let eta = model::eta(&cfg.single_ion_mode(), 0, &cfg.molecule, &cfg.trap)
                .map_err(|e| e.to_string())?;
            let n_bar = run.n_bar;
            for (t, n) in run.result.times.iter().zip(&run.result.mean_n) {
                let law = n_bar + (2.0 * omega * eta * t).powi(2);
                check((n - law).abs() / law <= 0.02, || {
                    format!("<n>({t}) = {n} vs law {law}")
                })?;
            }
            let final_n = *run.result.mean_n.last().unwrap();
            check(final_n > 15.0, || {
                format!("expected a visible displacement ladder, got {final_n}")
            })
        })(),
    );
}

#[test]
fn criterion_2_stark_mismatch() {
    report(
        "2 AC-Stark mismatch",
        (|| {
            let mut matched = ExperimentConfig::<f64>::default();
            matched.t_end = Some(100e-6);
            matched.n_samples = 3;
            matched.trap.x_eq = 10e-6;

            let mut mismatched = matched.clone();
            mismatched.mismatch = 0.05;

            let mut on_null = matched.clone();
            on_null.trap.x_eq = 0.0;

            let n_matched = *heating_scenario(&matched, false)
                .map_err(|e| e.to_string())?
                .result
                .mean_n
                .last()
                .unwrap();
            let n_mismatched = *heating_scenario(&mismatched, false)
                .map_err(|e| e.to_string())?
                .result
                .mean_n
                .last()
                .unwrap();
            let n_null = *heating_scenario(&on_null, false)
                .map_err(|e| e.to_string())?
                .result
                .mean_n
                .last()
                .unwrap();

            check(n_mismatched < n_matched, || {
                format!("mismatch run {n_mismatched} not below matched run {n_matched}")
            })?;
            check((n_matched - n_null).abs() / n_null <= 0.01, || {
                format!("matched off-null {n_matched} vs on-null {n_null}")
            })
        })(),
    );
}

fn rescaled_ms_config() -> ExperimentConfig<f64> {
    // 10x time-rescaled gate: drive amplitude and detuning both scaled so
    // the validity ratio gamma/(2 Omega eta) stays at its design value.
    let mut cfg = ExperimentConfig::<f64>::default();
    cfg.drive_amplitude = 100.0;
    cfg.gate.detuning = TAU * 2.0e6;
    cfg.gate.temperature = 0.1e-3;
    cfg
}

#[test]
fn criterion_3_entangling_gate() {
    report(
        "3 entangling gate",
        (|| {
            let mut cfg = rescaled_ms_config();
            cfg.n_samples = 41;
            let run = ms_scenario(&cfg, MsInitial::Thermal, false).map_err(|e| e.to_string())?;
            for k in 0..run.result.times.len() {
                let (pg, pe) = (run.result.p_gg[k], run.result.p_ee[k]);
                let (ag, ae) = (run.analytic_p_gg[k], run.analytic_p_ee[k]);
                check((pg - ag).abs() <= 0.02 && (pe - ae).abs() <= 0.02, || {
                    format!(
                        "theta={}: P_gg {pg} vs {ag}, P_ee {pe} vs {ae}",
                        run.theta[k]
                    )
                })?;
            }

            // Bell state at theta = pi/4
            let mut bell_cfg = rescaled_ms_config();
            bell_cfg.t_end = Some(run.t_bell);
            bell_cfg.n_samples = 2;
            let bell =
                ms_scenario(&bell_cfg, MsInitial::Thermal, false).map_err(|e| e.to_string())?;
            let rho = bell.result.final_ensemble.reduced_internal();
            let fidelity = gates::bell_fidelity(&rho, FRAC_PI_4).map_err(|e| e.to_string())?;
            check(fidelity >= 0.98, || format!("Bell fidelity {fidelity}"))?;

            // phonon-number independence at the Bell point
            let mut populations = Vec::new();
            for n in [0usize, 1, 2, 5, 10] {
                let run_n =
                    ms_scenario(&bell_cfg, MsInitial::Fock(n), false).map_err(|e| e.to_string())?;
                populations.push((n, *run_n.result.p_gg.last().unwrap()));
            }
            for &(n, p) in &populations {
                check((p - 0.5).abs() <= 0.02, || {
                    format!("P_gg at Bell point for n={n} is {p}")
                })?;
            }
            let spread = populations.iter().map(|&(_, p)| p).fold(f64::NAN, f64::max)
                - populations.iter().map(|&(_, p)| p).fold(f64::NAN, f64::min);
            check(spread <= 0.02, || format!("per-Fock spread {spread}"))
        })(),
    );
}

#[test]
fn criterion_4_carrier_phase_bound() {
    report(
        "4 carrier phase bound",
        (|| {
            let cfg = ExperimentConfig::<f64>::default();
            let omega = cfg.omega_rabi();
            let omega_q = cfg.trap.secular_frequency;
            let gamma = cfg.gate.detuning;
            let r_o = cfg.trap.field_radius;
            let xeq_tol = model::xeq_tolerance(
                1e-4,
                omega_q,
                gamma,
                r_o,
                cfg.drive_amplitude,
                cfg.molecule.dipole_moment,
            );

            // spin-only dynamics; the small spectator mode stays in vacuum
            let space = HilbertSpace::new(vec![2, 2], vec![4]).map_err(|e| e.to_string())?;
            let mut amps = DVector::zeros(space.dim());
            for i1 in [LVL_G, LVL_E] {
                for i2 in [LVL_G, LVL_E] {
                    let idx = space.compose(&[i1, i2], &[0]).map_err(|e| e.to_string())?;
                    amps[idx] = C64::new(0.5, 0.0);
                }
            }
            let psi0 =
                StateVector::from_amplitudes(space.clone(), amps).map_err(|e| e.to_string())?;
            let period = TAU / (omega_q + gamma);

            let mut phi_at_tolerance = 0.0f64;
            for x_eq in [1e-9, 9.2e-9, 100e-9, xeq_tol] {
                let bound = model::carrier_phase_bound(omega, x_eq, r_o, omega_q, gamma);
                let h = dynamics::build_carrier_error(&space, omega, x_eq, r_o, omega_q, gamma)
                    .map_err(|e| e.to_string())?;
                let mut max_phase = 0.0f64;
                for k in 1..=32usize {
                    let mut opts = EvolveOptions::to(period * k as f64 / 32.0);
                    opts.n_samples = 2;
                    opts.divisions_per_cycle = 2000;
                    let out = dynamics::evolve(&h, &psi0, &opts).map_err(|e| e.to_string())?;
                    let ov = psi0.overlap(&out.final_state).map_err(|e| e.to_string())?;
                    max_phase = max_phase.max(ov.im.atan2(ov.re).abs());
                }
                check(max_phase <= bound * (1.0 + 1e-6), || {
                    format!("x_eq={x_eq}: phase {max_phase} exceeds bound {bound}")
                })?;
                if x_eq == xeq_tol {
                    phi_at_tolerance = max_phase;
                }
            }
            let infidelity = phi_at_tolerance * phi_at_tolerance / 2.0;
            check((0.9e-4..=1.1e-4).contains(&infidelity), || {
                format!("implied infidelity {infidelity} at x_eq tolerance {xeq_tol}")
            })
        })(),
    );
}

fn designed_sequence() -> Result<ultrafast::PulseSequence<f64>, String> {
    let omega1 = TAU * 1.0e6;
    ultrafast::design_sequence(4, 0.75, FRAC_PI_4, 5e-6, omega1, 1e-8).map_err(|e| e.to_string())
}

#[test]
fn criterion_5_pulse_designer() {
    report(
        "5 pulse designer",
        (|| {
            let seq = designed_sequence()?;
            let residual = seq.closure_residual();
            check(residual[0] < 1e-9 && residual[1] < 1e-9, || {
                format!("closure residuals {residual:?}")
            })?;
            let phi = seq.accumulated_phase();
            check((phi - FRAC_PI_4).abs() < 1e-6, || {
                format!("designed phase {phi}")
            })?;

            // operator product: coherent restore and motional independence
            let motional_sets: Vec<([DVector<C64>; 2], [usize; 2], bool)> = vec![
                ([fock_local(28, 0), fock_local(28, 0)], [28, 28], false),
                ([fock_local(28, 1), fock_local(28, 0)], [28, 28], false),
                ([fock_local(28, 0), fock_local(28, 2)], [28, 28], false),
                (
                    [
                        coherent_local(48, C64::new(0.9, -0.4)),
                        coherent_local(48, C64::new(0.0, 0.5)),
                    ],
                    [48, 48],
                    true,
                ),
                (
                    [
                        coherent_local(64, C64::new(2.0, 0.0)),
                        coherent_local(56, C64::new(-1.2, 0.8)),
                    ],
                    [64, 56],
                    true,
                ),
            ];
            let mut phases = Vec::new();
            for (motional, dims, coherent) in &motional_sets {
                let action = ultrafast::analyze_sequence(&seq, *dims, motional)
                    .map_err(|e| e.to_string())?;
                if *coherent {
                    check(action.restore_overlap >= 1.0 - 1e-6, || {
                        format!("restore overlap {}", action.restore_overlap)
                    })?;
                }
                phases.push(action.phase);
            }
            let spread = phases.iter().cloned().fold(f64::NAN, f64::max)
                - phases.iter().cloned().fold(f64::NAN, f64::min);
            check(spread < 1e-6, || {
                format!("motional phase spread {spread} over {phases:?}")
            })?;

            // off-null robustness
            let cfg = ExperimentConfig::<f64>::default();
            let mut trap = cfg.trap.clone();
            trap.x_eq = 1e-6;
            let shift = ultrafast::xeq_robustness_check(&seq, &cfg.molecule, &trap, [20, 20])
                .map_err(|e| e.to_string())?;
            check(shift < 1e-3, || {
                format!("phase shift {shift} rad at x_eq = 1 um")
            })
        })(),
    );
}

#[test]
fn criterion_6_trajectory_topology() {
    report(
        "6 trajectory topology",
        (|| {
            let seq = designed_sequence()?;
            for (branch, active) in [
                ((1i8, 1i8), 0usize),
                ((-1, -1), 0),
                ((1, -1), 1),
                ((-1, 1), 1),
            ] {
                let traj = ultrafast::trajectory(&seq, branch, 256).map_err(|e| e.to_string())?;
                let spectator = 1 - active;
                for pt in &traj.modes[spectator] {
                    check(pt.x.abs() < 1e-12 && pt.p.abs() < 1e-12, || {
                        format!(
                            "branch {branch:?}: spectator mode moved to ({}, {})",
                            pt.x, pt.p
                        )
                    })?;
                }
                let gap = traj.endpoint_gap();
                check(gap[active] < 1e-9, || {
                    format!("branch {branch:?}: loop endpoint gap {}", gap[active])
                })?;
            }
            Ok(())
        })(),
    );
}

#[test]
fn criterion_7_spam_protocol() {
    report(
        "7 SPAM protocol",
        (|| {
            let cfg = ExperimentConfig::<f64>::default();
            let mode = cfg.single_ion_mode();
            let spam_cfg = SpamConfig {
                omega_rabi: cfg.omega_rabi(),
                eta: model::eta(&mode, 0, &cfg.molecule, &cfg.trap).map_err(|e| e.to_string())?,
                n_bar: model::thermal_occupation(cfg.gate.temperature, mode.frequency),
                thermal_epsilon: 1e-4,
                drive_time: None,
                threshold: None,
                seed: 11,
                fock_margin: 8,
            };
            check((spam_cfg.n_bar - 9.9).abs() < 0.1, || {
                format!("thermal occupation {}", spam_cfg.n_bar)
            })?;

            for (c_g, c_e, herald) in [
                (C64::new(1.0, 0.0), C64::new(0.0, 0.0), Herald::Dark),
                (C64::new(0.0, 0.0), C64::new(1.0, 0.0), Herald::Bright),
            ] {
                let first = gates::spam_protocol(c_g, c_e, &spam_cfg).map_err(|e| e.to_string())?;
                check(first.record.herald == herald, || {
                    format!("herald {:?} for input ({c_g}, {c_e})", first.record.herald)
                })?;
                let certain = |p: f64| p.abs() < 1e-9 || (p - 1.0).abs() < 1e-9;
                let p = first.record.p_bright;
                check(certain(p), || {
                    format!("classification not error-free: p_bright = {p}")
                })?;
                let again = gates::spam_remeasure(&first, &spam_cfg).map_err(|e| e.to_string())?;
                check(
                    again.record.herald == first.record.herald && certain(again.record.p_bright),
                    || {
                        format!(
                            "repeat herald {:?} (p = {}) differs from first {:?}",
                            again.record.herald, again.record.p_bright, first.record.herald
                        )
                    },
                )?;
            }
            Ok(())
        })(),
    );
}

#[test]
fn criterion_8_derived_quantities() {
    report(
        "8 derived quantities",
        (|| {
            let cfg = ExperimentConfig::<f64>::default();
            let derived = eggs::config::derived_quantities(&cfg).map_err(|e| e.to_string())?;
            let get = |key: &str| -> Result<f64, String> {
                derived
                    .get(key)
                    .and_then(|v| v.as_f64())
                    .ok_or_else(|| format!("missing key {key}"))
            };
            for (key, reference) in [
                ("rabi_frequency_rad_s", 7.275e8),
                ("eta_single_ion", 2.120e-5),
                ("thermal_occupation", 9.93),
                ("ms_gate_time_s", 16.6e-3),
            ] {
                let value = get(key)?;
                check((value - reference).abs() / reference <= 1e-3, || {
                    format!("{key} = {value}, reference {reference}")
                })?;
            }
            // shelving-rate estimate is quoted for a tighter r_o = 100 um trap
            let rate = model::quadrupole_carrier_rate(cfg.drive_amplitude, 100e-6) / TAU;
            check(rate >= 0.5e3 && rate <= 2.0e3, || {
                format!("quadrupole carrier rate {rate} Hz")
            })
        })(),
    );
}
