//! Time-dependent Schrödinger integration on the truncated Fock space.
//!
//! A [`Hamiltonian`] is a sum of terms `c · f(t) · O` (each optionally with
//! its hermitian conjugate added), where `f` is drawn from a closed set of
//! envelopes: constant, `e^{i(ωt+φ)}`, or `cos(ωt+φ)`. [`evolve`] integrates
//! `i ∂ψ/∂t = H(t) ψ` (H in rad/s, ħ scaled out) with a fixed-step RK4
//! scheme; [`evolve_ensemble`] averages over a thermal mixture in parallel
//! with a deterministic fixed-order reduction.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::fock::{HilbertSpace, MixedEnsemble, Operator, StateVector, LVL_E, LVL_G};
use crate::model::{DriveTone, Geometry, ModeSpec, MoleculeConfig, TrapConfig};
use crate::scalar::{re, Real, C};
use crate::{model, Error, Result};

/// Scalar time envelope of a Hamiltonian term.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Envelope<T> {
    Constant,
    /// e^{i(ωt + φ)}
    Exp {
        omega: T,
        phase: T,
    },
    /// cos(ωt + φ)
    Cos {
        omega: T,
        phase: T,
    },
}

impl<T: Real> Envelope<T> {
    fn eval(&self, t: T) -> C<T> {
        match *self {
            Envelope::Constant => C::new(T::one(), T::zero()),
            Envelope::Exp { omega, phase } => {
                let a = omega * t + phase;
                C::new(a.cos(), a.sin())
            }
            Envelope::Cos { omega, phase } => C::new((omega * t + phase).cos(), T::zero()),
        }
    }

    fn max_omega(&self) -> T {
        match *self {
            Envelope::Constant => T::zero(),
            Envelope::Exp { omega, .. } | Envelope::Cos { omega, .. } => omega.abs(),
        }
    }
}

/// Column-compressed sparse matrix, the integrator's workhorse.
#[derive(Debug, Clone)]
pub struct SparseOp<T: Real> {
    dim: usize,
    col_ptr: Vec<usize>,
    row: Vec<usize>,
    val: Vec<C<T>>,
}

impl<T: Real> SparseOp<T> {
    pub fn from_dense(m: &DMatrix<C<T>>) -> Self {
        let dim = m.nrows();
        let mut col_ptr = Vec::with_capacity(dim + 1);
        let mut row = Vec::new();
        let mut val = Vec::new();
        col_ptr.push(0);
        for c in 0..dim {
            for r in 0..dim {
                let v = m[(r, c)];
                if v.norm_sqr() != T::zero() {
                    row.push(r);
                    val.push(v);
                }
            }
            col_ptr.push(row.len());
        }
        Self {
            dim,
            col_ptr,
            row,
            val,
        }
    }

    /// Product of one-factor local operators, built column by column without
    /// materializing Kronecker products. Each listed factor is a local dense
    /// matrix acting on that molecule or mode; unlisted factors are identity.
    pub fn product(
        space: &HilbertSpace,
        internal: &[(usize, DMatrix<C<T>>)],
        modes: &[(usize, DMatrix<C<T>>)],
    ) -> Result<Self> {
        for &(m, ref local) in internal {
            let d = space.internal_dim(m)?;
            if local.nrows() != d || local.ncols() != d {
                return Err(Error::SpaceMismatch);
            }
        }
        for &(p, ref local) in modes {
            let d = space.mode_dim(p)?;
            if local.nrows() != d || local.ncols() != d {
                return Err(Error::SpaceMismatch);
            }
        }
        let dim = space.dim();
        let mut col_ptr = Vec::with_capacity(dim + 1);
        let mut row = Vec::new();
        let mut val = Vec::new();
        col_ptr.push(0);
        // scratch: (internal levels, fock numbers, amplitude) branches
        for c in 0..dim {
            let (ilev, flev) = space.decompose(c);
            let mut branches: Vec<(Vec<usize>, Vec<usize>, C<T>)> =
                vec![(ilev, flev, C::new(T::one(), T::zero()))];
            for &(m, ref local) in internal {
                let mut next = Vec::new();
                for (il, fl, amp) in &branches {
                    let colv = local.column(il[m]);
                    for r in 0..colv.len() {
                        let v = colv[r];
                        if v.norm_sqr() != T::zero() {
                            let mut il2 = il.clone();
                            il2[m] = r;
                            next.push((il2, fl.clone(), *amp * v));
                        }
                    }
                }
                branches = next;
            }
            for &(p, ref local) in modes {
                let mut next = Vec::new();
                for (il, fl, amp) in &branches {
                    let colv = local.column(fl[p]);
                    for r in 0..colv.len() {
                        let v = colv[r];
                        if v.norm_sqr() != T::zero() {
                            let mut fl2 = fl.clone();
                            fl2[p] = r;
                            next.push((il.clone(), fl2, *amp * v));
                        }
                    }
                }
                branches = next;
            }
            let mut entries: Vec<(usize, C<T>)> = branches
                .into_iter()
                .map(|(il, fl, amp)| (space.compose(&il, &fl).expect("in-range indices"), amp))
                .collect();
            entries.sort_by_key(|&(r, _)| r);
            for (r, v) in entries {
                row.push(r);
                val.push(v);
            }
            col_ptr.push(row.len());
        }
        Ok(Self {
            dim,
            col_ptr,
            row,
            val,
        })
    }

    pub fn adjoint(&self) -> Self {
        // transpose-conjugate via counting sort by row
        let mut counts = vec![0usize; self.dim + 1];
        for &r in &self.row {
            counts[r + 1] += 1;
        }
        for i in 0..self.dim {
            counts[i + 1] += counts[i];
        }
        let col_ptr = counts.clone();
        let mut row = vec![0usize; self.row.len()];
        let mut val = vec![C::new(T::zero(), T::zero()); self.val.len()];
        for c in 0..self.dim {
            for k in self.col_ptr[c]..self.col_ptr[c + 1] {
                let r = self.row[k];
                let slot = counts[r];
                counts[r] += 1;
                row[slot] = c;
                val[slot] = self.val[k].conj();
            }
        }
        Self {
            dim: self.dim,
            col_ptr,
            row,
            val,
        }
    }

    /// y += c · A x
    pub(crate) fn acc_mul(&self, c: C<T>, x: &[C<T>], y: &mut [C<T>]) {
        for col in 0..self.dim {
            let xc = x[col] * c;
            if xc.norm_sqr() == T::zero() {
                continue;
            }
            for k in self.col_ptr[col]..self.col_ptr[col + 1] {
                y[self.row[k]] += self.val[k] * xc;
            }
        }
    }

    /// max(column-sum norm, row-sum norm); an upper bound on the spectral norm.
    fn norm_bound(&self) -> T {
        let mut col_max = T::zero();
        let mut row_sums = vec![T::zero(); self.dim];
        for c in 0..self.dim {
            let mut s = T::zero();
            for k in self.col_ptr[c]..self.col_ptr[c + 1] {
                let a = self.val[k].norm_sqr().sqrt();
                s += a;
                row_sums[self.row[k]] += a;
            }
            col_max = col_max.max(s);
        }
        let row_max = row_sums.into_iter().fold(T::zero(), |a, b| a.max(b));
        col_max.max(row_max)
    }

    pub(crate) fn scatter_dense(&self, c: C<T>, out: &mut DMatrix<C<T>>) {
        for col in 0..self.dim {
            for k in self.col_ptr[col]..self.col_ptr[col + 1] {
                out[(self.row[k], col)] += self.val[k] * c;
            }
        }
    }
}

struct Term<T: Real> {
    coeff: C<T>,
    envelope: Envelope<T>,
    op: SparseOp<T>,
    /// Some(O†) when the conjugate term is included: c f(t) O + c̄ f̄(t) O†.
    op_adjoint: Option<SparseOp<T>>,
}

/// Time-dependent Hamiltonian H(t) = Σ terms, in rad/s (ħ divided out).
pub struct Hamiltonian<T: Real> {
    space: HilbertSpace,
    terms: Vec<Term<T>>,
}

impl<T: Real> Hamiltonian<T> {
    pub fn new(space: HilbertSpace) -> Self {
        Self {
            space,
            terms: Vec::new(),
        }
    }

    pub fn space(&self) -> &HilbertSpace {
        &self.space
    }

    /// Adds `coeff · envelope(t) · op`, plus the hermitian conjugate when
    /// `with_adjoint` is set. Without the conjugate the caller is responsible
    /// for the term being hermitian on its own.
    pub fn add_sparse(
        &mut self,
        op: SparseOp<T>,
        coeff: C<T>,
        envelope: Envelope<T>,
        with_adjoint: bool,
    ) {
        let op_adjoint = with_adjoint.then(|| op.adjoint());
        self.terms.push(Term {
            coeff,
            envelope,
            op,
            op_adjoint,
        });
    }

    /// [`add_sparse`](Self::add_sparse) from a dense [`Operator`].
    pub fn add_term(
        &mut self,
        op: &Operator<T>,
        coeff: C<T>,
        envelope: Envelope<T>,
        with_adjoint: bool,
    ) -> Result<()> {
        if op.space() != &self.space {
            return Err(Error::SpaceMismatch);
        }
        self.add_sparse(
            SparseOp::from_dense(op.matrix()),
            coeff,
            envelope,
            with_adjoint,
        );
        Ok(())
    }

    /// y = scale · H(t) x
    fn apply(&self, t: T, scale: C<T>, x: &[C<T>], y: &mut [C<T>]) {
        for v in y.iter_mut() {
            *v = C::new(T::zero(), T::zero());
        }
        for term in &self.terms {
            let f = term.coeff * term.envelope.eval(t);
            term.op.acc_mul(f * scale, x, y);
            if let Some(adj) = &term.op_adjoint {
                adj.acc_mul(f.conj() * scale, x, y);
            }
        }
    }

    /// Dense H(t), for checks and small-space tests.
    pub fn to_dense(&self, t: T) -> Operator<T> {
        let dim = self.space.dim();
        let mut m = DMatrix::zeros(dim, dim);
        for term in &self.terms {
            let f = term.coeff * term.envelope.eval(t);
            term.op.scatter_dense(f, &mut m);
            if let Some(adj) = &term.op_adjoint {
                adj.scatter_dense(f.conj(), &mut m);
            }
        }
        Operator::from_matrix(self.space.clone(), m).expect("matching dims")
    }

    /// ‖H(t) − H(t)†‖_max relative to ‖H(t)‖_max.
    pub fn hermiticity_defect(&self, t: T) -> T {
        let m = self.to_dense(t);
        let m = m.matrix();
        let mut dev = T::zero();
        let mut mag = T::zero();
        for r in 0..m.nrows() {
            for c in r..m.ncols() {
                dev = dev.max((m[(r, c)] - m[(c, r)].conj()).norm_sqr().sqrt());
                mag = mag.max(m[(r, c)].norm_sqr().sqrt());
            }
        }
        if mag > T::zero() {
            dev / mag
        } else {
            dev
        }
    }

    fn max_envelope_omega(&self) -> T {
        self.terms
            .iter()
            .map(|t| t.envelope.max_omega())
            .fold(T::zero(), |a, b| a.max(b))
    }

    fn norm_bound(&self) -> T {
        self.terms
            .iter()
            .map(|t| {
                let n = t.op.norm_bound() * t.coeff.norm_sqr().sqrt();
                if t.op_adjoint.is_some() {
                    n + n
                } else {
                    n
                }
            })
            .fold(T::zero(), |a, b| a + b)
    }
}

/// Step-size and guard policy for [`evolve`].
#[derive(Debug, Clone, Copy)]
pub struct EvolveOptions<T> {
    pub t_final: T,
    /// Number of recorded samples including t = 0 and t_final.
    pub n_samples: usize,
    /// Steps per cycle of the fastest envelope frequency.
    pub divisions_per_cycle: usize,
    /// Additional cap dt ≤ stability_factor / ‖H‖.
    pub stability_factor: f64,
    /// Hard step override (used by the convergence checker).
    pub dt_override: Option<T>,
    /// Mode whose ⟨n⟩ is recorded.
    pub target_mode: usize,
    /// Max tolerated |‖ψ‖ − 1| over the run.
    pub norm_tol: f64,
    /// Max tolerated population in the top two Fock levels of any mode.
    pub truncation_limit: f64,
}

impl<T: Real> EvolveOptions<T> {
    pub fn to(t_final: T) -> Self {
        Self {
            t_final,
            n_samples: 201,
            divisions_per_cycle: 160,
            stability_factor: 0.1,
            dt_override: None,
            target_mode: 0,
            norm_tol: 1e-6,
            truncation_limit: 1e-6,
        }
    }
}

/// Recorded traces of one evolution.
#[derive(Debug, Clone)]
pub struct EvolutionResult<T: Real> {
    pub times: Vec<T>,
    /// ⟨a†a⟩ on the target mode.
    pub mean_n: Vec<T>,
    /// All molecules in |g⟩.
    pub p_gg: Vec<T>,
    /// All molecules in |e⟩.
    pub p_ee: Vec<T>,
    /// Molecules in a mix of |g⟩ and |e⟩ (zero for one molecule).
    pub p_mixed: Vec<T>,
    /// ⟨σ_X⟩ of molecule 0.
    pub sigma_x1: Vec<T>,
    pub final_state: StateVector<T>,
    /// Max |‖ψ‖ − 1| seen.
    pub norm_drift: T,
    pub dt: T,
    pub steps: usize,
}

fn record_observables<T: Real>(
    space: &HilbertSpace,
    amps: &DVector<C<T>>,
    target_mode: usize,
) -> (T, T, T, T, T) {
    let n_mol = space.n_molecules();
    let has_modes = space.n_modes() > 0;
    let mut mean_n = T::zero();
    let mut p_gg = T::zero();
    let mut p_ee = T::zero();
    let mut p_mixed = T::zero();
    for (idx, a) in amps.iter().enumerate() {
        let w = a.norm_sqr();
        if w == T::zero() {
            continue;
        }
        let (ilev, flev) = space.decompose(idx);
        if has_modes {
            mean_n += T::of(flev[target_mode] as f64) * w;
        }
        let all_g = ilev.iter().all(|&l| l == LVL_G);
        let all_e = ilev.iter().all(|&l| l == LVL_E);
        let qubit_only = ilev.iter().all(|&l| l == LVL_G || l == LVL_E);
        if all_g {
            p_gg += w;
        } else if all_e {
            p_ee += w;
        } else if qubit_only {
            p_mixed += w;
        }
    }
    // ⟨σ_X^{(1)}⟩: molecule 0 is the slowest index
    let mut sx = T::zero();
    if n_mol > 0 {
        let stride = space.dim() / space.internal_dim(0).expect("molecule 0");
        for rest in 0..stride {
            let g = amps[LVL_G * stride + rest];
            let e = amps[LVL_E * stride + rest];
            sx += T::of(2.0) * (g.conj() * e).re;
        }
    }
    (mean_n, p_gg, p_ee, p_mixed, sx)
}

/// Integrates i ∂ψ/∂t = H(t) ψ from `psi0` with fixed-step RK4.
pub fn evolve<T: Real>(
    h: &Hamiltonian<T>,
    psi0: &StateVector<T>,
    opts: &EvolveOptions<T>,
) -> Result<EvolutionResult<T>> {
    if psi0.space() != &h.space {
        return Err(Error::SpaceMismatch);
    }
    if opts.t_final < T::zero() {
        return Err(Error::Config("t_final must be nonnegative".into()));
    }
    let space = h.space.clone();
    let herm_tol = T::of(1e-10);
    for probe in [T::zero(), opts.t_final * T::of(0.381_966)] {
        let defect = h.hermiticity_defect(probe);
        if defect > herm_tol {
            return Err(Error::Config(format!(
                "Hamiltonian is not hermitian (relative defect {:.3e} at t = {:.3e})",
                defect.to_f64().unwrap_or(f64::NAN),
                probe.to_f64().unwrap_or(f64::NAN),
            )));
        }
    }

    let n_samples = opts.n_samples.max(2);
    let mut result = EvolutionResult {
        times: Vec::with_capacity(n_samples),
        mean_n: Vec::with_capacity(n_samples),
        p_gg: Vec::with_capacity(n_samples),
        p_ee: Vec::with_capacity(n_samples),
        p_mixed: Vec::with_capacity(n_samples),
        sigma_x1: Vec::with_capacity(n_samples),
        final_state: psi0.clone(),
        norm_drift: T::zero(),
        dt: T::zero(),
        steps: 0,
    };

    let record = |t: T, amps: &DVector<C<T>>, res: &mut EvolutionResult<T>| -> Result<()> {
        let (n, gg, ee, mixed, sx) = record_observables(&space, amps, opts.target_mode);
        res.times.push(t);
        res.mean_n.push(n);
        res.p_gg.push(gg);
        res.p_ee.push(ee);
        res.p_mixed.push(mixed);
        res.sigma_x1.push(sx);
        let state = StateVector::from_amplitudes(space.clone(), amps.clone())?;
        for mode in 0..space.n_modes() {
            let top = state.top_population(mode, 2)?;
            if top.to_f64().unwrap_or(f64::NAN) > opts.truncation_limit {
                return Err(Error::TruncationBreach {
                    mode,
                    population: top.to_f64().unwrap_or(f64::NAN),
                    limit: opts.truncation_limit,
                });
            }
        }
        Ok(())
    };

    if opts.t_final == T::zero() {
        record(T::zero(), psi0.amplitudes(), &mut result)?;
        return Ok(result);
    }

    // step size: resolve the fastest envelope and stay in RK4's accurate range
    let dt = match opts.dt_override {
        Some(dt) => dt,
        None => {
            let mut dt = opts.t_final;
            let w_fast = h.max_envelope_omega();
            if w_fast > T::zero() {
                dt = dt.min(T::tau() / (w_fast * T::of(opts.divisions_per_cycle as f64)));
            }
            let bound = h.norm_bound();
            if bound > T::zero() {
                dt = dt.min(T::of(opts.stability_factor) / bound);
            }
            dt
        }
    };
    let segments = n_samples - 1;
    let steps_per_segment = ((opts.t_final / T::of(segments as f64)) / dt)
        .ceil()
        .to_f64()
        .unwrap_or(1.0)
        .max(1.0) as usize;
    let n_steps = segments * steps_per_segment;
    let dt = opts.t_final / T::of(n_steps as f64);
    result.dt = dt;
    result.steps = n_steps;

    let dim = space.dim();
    let mut psi = psi0.amplitudes().clone();
    let mut k1 = DVector::zeros(dim);
    let mut k2 = DVector::zeros(dim);
    let mut k3 = DVector::zeros(dim);
    let mut k4 = DVector::zeros(dim);
    let mut tmp = DVector::zeros(dim);
    let minus_i = C::new(T::zero(), -T::one());
    let half = T::of(0.5);
    let sixth = T::of(1.0 / 6.0);

    record(T::zero(), &psi, &mut result)?;
    let mut max_drift = T::zero();
    for step in 0..n_steps {
        let t = dt * T::of(step as f64);
        let th = t + dt * half;
        let tf = t + dt;

        h.apply(t, minus_i, psi.as_slice(), k1.as_mut_slice());
        for i in 0..dim {
            tmp[i] = psi[i] + k1[i] * re(dt * half);
        }
        h.apply(th, minus_i, tmp.as_slice(), k2.as_mut_slice());
        for i in 0..dim {
            tmp[i] = psi[i] + k2[i] * re(dt * half);
        }
        h.apply(th, minus_i, tmp.as_slice(), k3.as_mut_slice());
        for i in 0..dim {
            tmp[i] = psi[i] + k3[i] * re(dt);
        }
        h.apply(tf, minus_i, tmp.as_slice(), k4.as_mut_slice());
        for i in 0..dim {
            psi[i] += (k1[i] + (k2[i] + k3[i]) * re(T::of(2.0)) + k4[i]) * re(dt * sixth);
        }

        if (step + 1) % steps_per_segment == 0 {
            let drift = (psi.norm() - T::one()).abs();
            max_drift = max_drift.max(drift);
            if drift.to_f64().unwrap_or(f64::NAN) > opts.norm_tol {
                return Err(Error::NormDrift {
                    drift: drift.to_f64().unwrap_or(f64::NAN),
                    tol: opts.norm_tol,
                });
            }
            record(tf, &psi, &mut result)?;
        }
    }
    result.norm_drift = max_drift;
    result.final_state = StateVector::from_amplitudes(space, psi)?;
    Ok(result)
}

/// Max absolute change of any recorded trace when the step is halved; the
/// convergence-check mode of the CLI.
pub fn convergence_check<T: Real>(
    h: &Hamiltonian<T>,
    psi0: &StateVector<T>,
    opts: &EvolveOptions<T>,
) -> Result<(EvolutionResult<T>, T)> {
    let coarse = evolve(h, psi0, opts)?;
    let mut fine_opts = *opts;
    fine_opts.dt_override = Some(coarse.dt * T::of(0.5));
    let fine = evolve(h, psi0, &fine_opts)?;
    let mut delta = T::zero();
    for (a, b) in [
        (&coarse.mean_n, &fine.mean_n),
        (&coarse.p_gg, &fine.p_gg),
        (&coarse.p_ee, &fine.p_ee),
        (&coarse.p_mixed, &fine.p_mixed),
        (&coarse.sigma_x1, &fine.sigma_x1),
    ] {
        for (x, y) in a.iter().zip(b.iter()) {
            delta = delta.max((*x - *y).abs());
        }
    }
    Ok((fine, delta))
}

/// Weight-averaged traces of an ensemble evolution.
#[derive(Debug, Clone)]
pub struct EnsembleEvolutionResult<T: Real> {
    pub times: Vec<T>,
    pub mean_n: Vec<T>,
    pub p_gg: Vec<T>,
    pub p_ee: Vec<T>,
    pub p_mixed: Vec<T>,
    pub sigma_x1: Vec<T>,
    pub final_ensemble: MixedEnsemble<T>,
    pub norm_drift: T,
    pub dt: T,
    pub steps: usize,
}

/// Evolves every ensemble member under the same Hamiltonian and averages the
/// traces. Members run in parallel; the reduction is a sequential weighted
/// sum in member order, so results are bit-stable for a fixed member list.
pub fn evolve_ensemble<T: Real + Send + Sync>(
    h: &Hamiltonian<T>,
    ensemble: &MixedEnsemble<T>,
    opts: &EvolveOptions<T>,
) -> Result<EnsembleEvolutionResult<T>> {
    if ensemble.members.is_empty() {
        return Err(Error::Config("empty ensemble".into()));
    }
    let runs: Vec<Result<EvolutionResult<T>>> = ensemble
        .members
        .par_iter()
        .map(|(_, state)| evolve(h, state, opts))
        .collect();
    let mut acc: Option<EnsembleEvolutionResult<T>> = None;
    let mut members = Vec::with_capacity(ensemble.members.len());
    for ((w, _), run) in ensemble.members.iter().zip(runs) {
        let run = run?;
        members.push((*w, run.final_state.clone()));
        match &mut acc {
            None => {
                acc = Some(EnsembleEvolutionResult {
                    times: run.times.clone(),
                    mean_n: scaled(&run.mean_n, *w),
                    p_gg: scaled(&run.p_gg, *w),
                    p_ee: scaled(&run.p_ee, *w),
                    p_mixed: scaled(&run.p_mixed, *w),
                    sigma_x1: scaled(&run.sigma_x1, *w),
                    final_ensemble: MixedEnsemble { members: vec![] },
                    norm_drift: run.norm_drift,
                    dt: run.dt,
                    steps: run.steps,
                });
            }
            Some(acc) => {
                add_scaled(&mut acc.mean_n, &run.mean_n, *w);
                add_scaled(&mut acc.p_gg, &run.p_gg, *w);
                add_scaled(&mut acc.p_ee, &run.p_ee, *w);
                add_scaled(&mut acc.p_mixed, &run.p_mixed, *w);
                add_scaled(&mut acc.sigma_x1, &run.sigma_x1, *w);
                acc.norm_drift = acc.norm_drift.max(run.norm_drift);
            }
        }
    }
    let mut out = acc.expect("nonempty ensemble");
    out.final_ensemble = MixedEnsemble { members };
    Ok(out)
}

fn scaled<T: Real>(v: &[T], w: T) -> Vec<T> {
    v.iter().map(|&x| x * w).collect()
}

fn add_scaled<T: Real>(acc: &mut [T], v: &[T], w: T) {
    for (a, &x) in acc.iter_mut().zip(v) {
        *a += x * w;
    }
}

/// Frame for [`build_e2`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Frame {
    /// Spin interaction picture only; motion stays in the lab frame, so the
    /// trap term Σ_p ω_p a_p†a_p is included explicitly.
    SpinOnly,
    /// Full interaction picture: a_p carries e^{−iω_p t}, no static term.
    Interaction,
}

fn local_lower<T: Real>(d: usize) -> DMatrix<C<T>> {
    let mut m = DMatrix::zeros(d, d);
    for n in 1..d {
        m[(n - 1, n)] = re(T::of(n as f64).sqrt());
    }
    m
}

fn local_number<T: Real>(d: usize) -> DMatrix<C<T>> {
    let mut m = DMatrix::zeros(d, d);
    for n in 0..d {
        m[(n, n)] = re(T::of(n as f64));
    }
    m
}

/// Dipole-configuration carrier drive on one molecule:
/// (Ω/2)(σ₊ e^{i(δt+φ)} + h.c.).
pub fn build_e1<T: Real>(
    space: &HilbertSpace,
    molecule: usize,
    omega_rabi: T,
    delta: T,
    phase: T,
) -> Result<Hamiltonian<T>> {
    let d = space.internal_dim(molecule)?;
    let sp = SparseOp::product(
        space,
        &[(
            molecule,
            crate::fock::pauli_local(d, crate::fock::Pauli::Plus),
        )],
        &[],
    )?;
    let mut h = Hamiltonian::new(space.clone());
    h.add_sparse(
        sp,
        re(omega_rabi * T::of(0.5)),
        Envelope::Exp {
            omega: delta,
            phase,
        },
        true,
    );
    Ok(h)
}

/// Quadrupole-configuration gradient drive: for every tone m, molecule i and
/// mode p, the sideband term 2Ω_m η_p^{(i)} (a_p + a_p†)(σ₊^{(i)} e^{i(δ_m t+φ_m)} + h.c.)
/// plus, when x_eq ≠ 0, the residual carrier
/// (2Ω_m x_eq/r_o)(σ₊^{(i)} e^{i(δ_m t+φ_m)} + h.c.), with δ_m = Δ − ω_m.
pub fn build_e2<T: Real>(
    space: &HilbertSpace,
    tones: &[DriveTone<T>],
    modes: &[ModeSpec<T>],
    mol: &MoleculeConfig<T>,
    trap: &TrapConfig<T>,
    frame: Frame,
) -> Result<Hamiltonian<T>> {
    if modes.len() != space.n_modes() {
        return Err(Error::SpaceMismatch);
    }
    let mut h = Hamiltonian::new(space.clone());
    for tone in tones {
        if tone.geometry != Geometry::Quadrupole {
            return Err(Error::Config(
                "gradient Hamiltonian takes quadrupole tones only".into(),
            ));
        }
        let omega_rabi = model::rabi_frequency(mol, tone, trap);
        let delta = mol.splitting - tone.frequency;
        for i in 0..space.n_molecules() {
            let di = space.internal_dim(i)?;
            let raise_spin = crate::fock::pauli_local::<T>(di, crate::fock::Pauli::Plus);
            for (p, mode) in modes.iter().enumerate() {
                let eta = model::eta(mode, i, mol, trap)?;
                if eta == T::zero() {
                    continue;
                }
                let coeff = re(T::of(2.0) * omega_rabi * eta);
                let dp = space.mode_dim(p)?;
                let a = local_lower::<T>(dp);
                let adag = a.adjoint();
                match frame {
                    Frame::Interaction => {
                        let op_a = SparseOp::product(
                            space,
                            &[(i, raise_spin.clone())],
                            &[(p, a.clone())],
                        )?;
                        h.add_sparse(
                            op_a,
                            coeff,
                            Envelope::Exp {
                                omega: delta - mode.frequency,
                                phase: tone.phase,
                            },
                            true,
                        );
                        let op_ad =
                            SparseOp::product(space, &[(i, raise_spin.clone())], &[(p, adag)])?;
                        h.add_sparse(
                            op_ad,
                            coeff,
                            Envelope::Exp {
                                omega: delta + mode.frequency,
                                phase: tone.phase,
                            },
                            true,
                        );
                    }
                    Frame::SpinOnly => {
                        let op = SparseOp::product(
                            space,
                            &[(i, raise_spin.clone())],
                            &[(p, &a + &adag)],
                        )?;
                        h.add_sparse(
                            op,
                            coeff,
                            Envelope::Exp {
                                omega: delta,
                                phase: tone.phase,
                            },
                            true,
                        );
                    }
                }
            }
            if trap.x_eq != T::zero() {
                let carrier = SparseOp::product(space, &[(i, raise_spin)], &[])?;
                h.add_sparse(
                    carrier,
                    re(T::of(2.0) * omega_rabi * trap.x_eq / trap.field_radius),
                    Envelope::Exp {
                        omega: delta,
                        phase: tone.phase,
                    },
                    true,
                );
            }
        }
    }
    if frame == Frame::SpinOnly {
        for (p, mode) in modes.iter().enumerate() {
            let dp = space.mode_dim(p)?;
            let num = SparseOp::product(space, &[], &[(p, local_number::<T>(dp))])?;
            h.add_sparse(num, re(mode.frequency), Envelope::Constant, false);
        }
    }
    Ok(h)
}

/// Static bichromatic effective Hamiltonian: Σ over the given couplings of
/// c · (a_p + a_p†) σ_X^{(i)}, the time-independent limit of the symmetric
/// two-tone drive.
pub fn build_static_bichromatic<T: Real>(
    space: &HilbertSpace,
    couplings: &[(usize, usize, T)],
) -> Result<Hamiltonian<T>> {
    let mut h = Hamiltonian::new(space.clone());
    for &(molecule, mode, c) in couplings {
        let di = space.internal_dim(molecule)?;
        let dp = space.mode_dim(mode)?;
        let a = local_lower::<T>(dp);
        let pos = &a + a.adjoint();
        let op = SparseOp::product(
            space,
            &[(
                molecule,
                crate::fock::pauli_local(di, crate::fock::Pauli::X),
            )],
            &[(mode, pos)],
        )?;
        h.add_sparse(op, re(c), Envelope::Constant, false);
    }
    Ok(h)
}

/// Residual carrier error during the two-qubit gate:
/// (4Ω x_eq/r_o)(σ_X^{(1)} + σ_X^{(2)}) cos((ω_q + γ)t).
pub fn build_carrier_error<T: Real>(
    space: &HilbertSpace,
    omega_rabi: T,
    x_eq: T,
    r_o: T,
    omega_q: T,
    detuning: T,
) -> Result<Hamiltonian<T>> {
    if space.n_molecules() != 2 {
        return Err(Error::Config(
            "carrier-error Hamiltonian needs a two-molecule space".into(),
        ));
    }
    let amp = T::of(4.0) * omega_rabi * x_eq / r_o;
    let mut h = Hamiltonian::new(space.clone());
    for i in 0..2 {
        let di = space.internal_dim(i)?;
        let op = SparseOp::product(
            space,
            &[(i, crate::fock::pauli_local::<T>(di, crate::fock::Pauli::X))],
            &[],
        )?;
        h.add_sparse(
            op,
            re(amp),
            Envelope::Cos {
                omega: omega_q + detuning,
                phase: T::zero(),
            },
            false,
        );
    }
    Ok(h)
}
