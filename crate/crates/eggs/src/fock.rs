//! Truncated Fock-space representation: Hilbert-space layout, dense
//! operators, pure states, and thermal mixtures.
//!
//! A [`HilbertSpace`] is a tensor product of per-molecule internal factors
//! (dimension 2, or 3 with a shelf state) and per-mode truncated oscillator
//! factors. Basis ordering: internal indices vary slowest (molecule 0
//! slowest of all), then mode Fock indices in declared order.

use nalgebra::{DMatrix, DVector};

use crate::scalar::{im, re, Real, C};
use crate::{Error, Result};

/// Internal level indices.
pub const LVL_G: usize = 0;
pub const LVL_E: usize = 1;
pub const LVL_AUX: usize = 2;

/// Default displacement truncation guard: D(α) is refused when
/// |α|² > guard · n_max. At 0.5 the coherent-state population left above the
/// cutoff is below 1e-8.
pub const TRUNCATION_GUARD: f64 = 0.5;

/// Tensor-product space layout shared by states and operators.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HilbertSpace {
    internal_dims: Vec<u8>,
    mode_dims: Vec<usize>,
}

impl HilbertSpace {
    /// `internal_dims` holds one entry per molecule (2 or 3 levels);
    /// `mode_dims` holds the truncated dimension n_max + 1 per mode.
    pub fn new(internal_dims: Vec<u8>, mode_dims: Vec<usize>) -> Result<Self> {
        if internal_dims.is_empty() && mode_dims.is_empty() {
            return Err(Error::Config("empty Hilbert space".into()));
        }
        for &d in &internal_dims {
            if d != 2 && d != 3 {
                return Err(Error::Config(format!(
                    "internal dimension must be 2 or 3, got {d}"
                )));
            }
        }
        for &d in &mode_dims {
            if d < 2 {
                return Err(Error::Config(format!(
                    "mode truncation dimension must be at least 2, got {d}"
                )));
            }
        }
        Ok(Self {
            internal_dims,
            mode_dims,
        })
    }

    /// Single molecule with one motional mode.
    pub fn single(internal_dim: u8, mode_dim: usize) -> Result<Self> {
        Self::new(vec![internal_dim], vec![mode_dim])
    }

    pub fn dim(&self) -> usize {
        self.internal_dims
            .iter()
            .map(|&d| d as usize)
            .chain(self.mode_dims.iter().copied())
            .product()
    }

    pub fn n_molecules(&self) -> usize {
        self.internal_dims.len()
    }

    pub fn n_modes(&self) -> usize {
        self.mode_dims.len()
    }

    pub fn internal_dim(&self, molecule: usize) -> Result<usize> {
        self.internal_dims
            .get(molecule)
            .map(|&d| d as usize)
            .ok_or(Error::InvalidMolecule {
                index: molecule,
                n_molecules: self.n_molecules(),
            })
    }

    pub fn mode_dim(&self, mode: usize) -> Result<usize> {
        self.mode_dims.get(mode).copied().ok_or(Error::InvalidMode {
            index: mode,
            n_modes: self.n_modes(),
        })
    }

    /// Flat index of the product basis state with the given internal levels
    /// and Fock numbers.
    pub fn compose(&self, internal: &[usize], fock: &[usize]) -> Result<usize> {
        if internal.len() != self.n_molecules() || fock.len() != self.n_modes() {
            return Err(Error::SpaceMismatch);
        }
        let mut idx = 0usize;
        for (m, &lvl) in internal.iter().enumerate() {
            let d = self.internal_dims[m] as usize;
            if lvl >= d {
                return Err(Error::Config(format!(
                    "internal level {lvl} out of range for molecule {m} (dim {d})"
                )));
            }
            idx = idx * d + lvl;
        }
        for (p, &n) in fock.iter().enumerate() {
            let d = self.mode_dims[p];
            if n >= d {
                return Err(Error::Config(format!(
                    "Fock index {n} out of range for mode {p} (dim {d})"
                )));
            }
            idx = idx * d + n;
        }
        Ok(idx)
    }

    /// Inverse of [`compose`](Self::compose).
    pub fn decompose(&self, mut idx: usize) -> (Vec<usize>, Vec<usize>) {
        let mut fock = vec![0usize; self.n_modes()];
        for p in (0..self.n_modes()).rev() {
            fock[p] = idx % self.mode_dims[p];
            idx /= self.mode_dims[p];
        }
        let mut internal = vec![0usize; self.n_molecules()];
        for m in (0..self.n_molecules()).rev() {
            let d = self.internal_dims[m] as usize;
            internal[m] = idx % d;
            idx /= d;
        }
        (internal, fock)
    }

    /// Identity operator.
    pub fn identity<T: Real>(&self) -> Operator<T> {
        Operator {
            space: self.clone(),
            matrix: DMatrix::identity(self.dim(), self.dim()),
        }
    }

    /// Embeds a local operator on one internal factor, identity elsewhere.
    pub fn internal_op<T: Real>(
        &self,
        molecule: usize,
        local: &DMatrix<C<T>>,
    ) -> Result<Operator<T>> {
        let d = self.internal_dim(molecule)?;
        if local.nrows() != d || local.ncols() != d {
            return Err(Error::SpaceMismatch);
        }
        let mut matrix = DMatrix::identity(1, 1);
        for (m, &dm) in self.internal_dims.iter().enumerate() {
            if m == molecule {
                matrix = matrix.kronecker(local);
            } else {
                matrix = matrix.kronecker(&DMatrix::identity(dm as usize, dm as usize));
            }
        }
        let motion_dim: usize = self.mode_dims.iter().product();
        matrix = matrix.kronecker(&DMatrix::identity(motion_dim, motion_dim));
        Ok(Operator {
            space: self.clone(),
            matrix,
        })
    }

    /// Embeds a local operator on one motional mode, identity elsewhere.
    pub fn mode_op<T: Real>(&self, mode: usize, local: &DMatrix<C<T>>) -> Result<Operator<T>> {
        let d = self.mode_dim(mode)?;
        if local.nrows() != d || local.ncols() != d {
            return Err(Error::SpaceMismatch);
        }
        let internal_dim: usize = self.internal_dims.iter().map(|&d| d as usize).product();
        let mut matrix = DMatrix::identity(internal_dim, internal_dim);
        for (p, &dp) in self.mode_dims.iter().enumerate() {
            if p == mode {
                matrix = matrix.kronecker(local);
            } else {
                matrix = matrix.kronecker(&DMatrix::identity(dp, dp));
            }
        }
        Ok(Operator {
            space: self.clone(),
            matrix,
        })
    }

    /// Lowering operator a on the given mode.
    pub fn lower<T: Real>(&self, mode: usize) -> Result<Operator<T>> {
        let d = self.mode_dim(mode)?;
        let mut local = DMatrix::zeros(d, d);
        for n in 1..d {
            local[(n - 1, n)] = re(T::of(n as f64).sqrt());
        }
        self.mode_op(mode, &local)
    }

    /// Raising operator a† on the given mode.
    pub fn raise<T: Real>(&self, mode: usize) -> Result<Operator<T>> {
        Ok(self.lower(mode)?.adjoint())
    }

    /// Number operator a†a on the given mode.
    pub fn number<T: Real>(&self, mode: usize) -> Result<Operator<T>> {
        let d = self.mode_dim(mode)?;
        let mut local = DMatrix::zeros(d, d);
        for n in 0..d {
            local[(n, n)] = re(T::of(n as f64));
        }
        self.mode_op(mode, &local)
    }

    /// Displacement operator D(α) = exp(α a† − α* a) on the given mode,
    /// exact on the truncated space (unitary by construction).
    ///
    /// Rejects |α|² > [`TRUNCATION_GUARD`] · n_max, the point past which a
    /// coherent state's population above the cutoff stops being negligible.
    pub fn displacement<T: Real>(&self, mode: usize, alpha: C<T>) -> Result<Operator<T>> {
        self.displacement_guarded(mode, alpha, TRUNCATION_GUARD)
    }

    /// [`displacement`](Self::displacement) with an explicit guard factor.
    pub fn displacement_guarded<T: Real>(
        &self,
        mode: usize,
        alpha: C<T>,
        guard: f64,
    ) -> Result<Operator<T>> {
        let d = self.mode_dim(mode)?;
        let alpha_sq = alpha.norm_sqr().to_f64().unwrap_or(f64::INFINITY);
        let n_max = d - 1;
        if alpha_sq > guard * n_max as f64 {
            return Err(Error::TruncationGuard {
                alpha_sq,
                guard,
                n_max,
                needed_n_max: (alpha_sq / guard).ceil() as usize,
            });
        }
        let mut local = DMatrix::zeros(d, d);
        // hermitian generator h = i (alpha a† − alpha* a), so D = exp(−i h)
        for n in 1..d {
            let s = T::of(n as f64).sqrt();
            local[(n, n - 1)] = im::<T>() * alpha * re(s);
            local[(n - 1, n)] = -im::<T>() * alpha.conj() * re(s);
        }
        let expd = exp_minus_i_hermitian(&local);
        self.mode_op(mode, &expd)
    }

    /// Embeds a Pauli operator on the qubit (g, e) subspace of one molecule.
    pub fn pauli<T: Real>(&self, molecule: usize, which: Pauli) -> Result<Operator<T>> {
        let d = self.internal_dim(molecule)?;
        self.internal_op(molecule, &pauli_local(d, which))
    }

    /// Projector onto the internal level of one molecule.
    pub fn level_projector<T: Real>(&self, molecule: usize, level: usize) -> Result<Operator<T>> {
        let d = self.internal_dim(molecule)?;
        if level >= d {
            return Err(Error::Config(format!(
                "level {level} out of range for molecule {molecule} (dim {d})"
            )));
        }
        let mut local = DMatrix::zeros(d, d);
        local[(level, level)] = re(T::one());
        self.internal_op(molecule, &local)
    }

    /// Projector onto |±X⟩ = (|g⟩ ± |e⟩)/√2 of one molecule (zero on the
    /// shelf level if present).
    pub fn x_projector<T: Real>(&self, molecule: usize, sign: f64) -> Result<Operator<T>> {
        let d = self.internal_dim(molecule)?;
        let s = re(T::of(sign.signum()));
        let half = re(T::of(0.5));
        let mut local = DMatrix::zeros(d, d);
        local[(LVL_G, LVL_G)] = half;
        local[(LVL_E, LVL_E)] = half;
        local[(LVL_G, LVL_E)] = s * half;
        local[(LVL_E, LVL_G)] = s * half;
        self.internal_op(molecule, &local)
    }
}

/// Concatenation of two spaces into one product space. Supported when the
/// basis ordering is preserved, i.e. when `a` has no modes or `b` has no
/// internal factors (internal indices must stay slowest).
fn tensor_space(a: &HilbertSpace, b: &HilbertSpace) -> Result<HilbertSpace> {
    if a.n_modes() != 0 && b.n_molecules() != 0 {
        return Err(Error::Unsupported(
            "tensor product would interleave internal and motional factors; \
             put all internal factors in the left operand"
                .into(),
        ));
    }
    let mut internal = a.internal_dims.clone();
    internal.extend_from_slice(&b.internal_dims);
    let mut modes = a.mode_dims.clone();
    modes.extend_from_slice(&b.mode_dims);
    HilbertSpace::new(internal, modes)
}

/// Tensor product of two operators on disjoint factors.
pub fn tensor<T: Real>(a: &Operator<T>, b: &Operator<T>) -> Result<Operator<T>> {
    let space = tensor_space(&a.space, &b.space)?;
    Ok(Operator {
        space,
        matrix: a.matrix.kronecker(&b.matrix),
    })
}

/// Tensor product of two states on disjoint factors.
pub fn tensor_state<T: Real>(a: &StateVector<T>, b: &StateVector<T>) -> Result<StateVector<T>> {
    let space = tensor_space(&a.space, &b.space)?;
    let mut amplitudes = DVector::zeros(space.dim());
    for (i, &ai) in a.amplitudes.iter().enumerate() {
        for (j, &bj) in b.amplitudes.iter().enumerate() {
            amplitudes[i * b.amplitudes.len() + j] = ai * bj;
        }
    }
    Ok(StateVector { space, amplitudes })
}

/// Pauli operators on the (g, e) qubit subspace. `Plus` is |e⟩⟨g|.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pauli {
    X,
    Y,
    Z,
    Plus,
    Minus,
}

/// Local d×d matrix (d = 2 or 3) of a Pauli operator on the (g, e) block.
pub fn pauli_local<T: Real>(d: usize, which: Pauli) -> DMatrix<C<T>> {
    let mut m = DMatrix::zeros(d, d);
    let one = re(T::one());
    match which {
        Pauli::X => {
            m[(LVL_G, LVL_E)] = one;
            m[(LVL_E, LVL_G)] = one;
        }
        Pauli::Y => {
            m[(LVL_G, LVL_E)] = -im::<T>();
            m[(LVL_E, LVL_G)] = im::<T>();
        }
        Pauli::Z => {
            m[(LVL_G, LVL_G)] = one;
            m[(LVL_E, LVL_E)] = -one;
        }
        Pauli::Plus => {
            m[(LVL_E, LVL_G)] = one;
        }
        Pauli::Minus => {
            m[(LVL_G, LVL_E)] = one;
        }
    }
    m
}

/// exp(−i h) for hermitian h, via eigendecomposition. Exactly unitary up
/// to roundoff regardless of ‖h‖.
pub fn exp_minus_i_hermitian<T: Real>(h: &DMatrix<C<T>>) -> DMatrix<C<T>> {
    let eig = h.clone().symmetric_eigen();
    let d = h.nrows();
    let mut out = DMatrix::zeros(d, d);
    for k in 0..d {
        let lam = eig.eigenvalues[k];
        let phase = C::new(lam.cos(), -lam.sin());
        let v = eig.eigenvectors.column(k);
        for r in 0..d {
            for c in 0..d {
                out[(r, c)] += v[r] * v[c].conj() * phase;
            }
        }
    }
    out
}

/// Dense operator on a [`HilbertSpace`].
#[derive(Debug, Clone, PartialEq)]
pub struct Operator<T: Real> {
    space: HilbertSpace,
    matrix: DMatrix<C<T>>,
}

impl<T: Real> Operator<T> {
    pub fn from_matrix(space: HilbertSpace, matrix: DMatrix<C<T>>) -> Result<Self> {
        if matrix.nrows() != space.dim() || matrix.ncols() != space.dim() {
            return Err(Error::SpaceMismatch);
        }
        Ok(Self { space, matrix })
    }

    pub fn space(&self) -> &HilbertSpace {
        &self.space
    }

    pub fn matrix(&self) -> &DMatrix<C<T>> {
        &self.matrix
    }

    pub fn adjoint(&self) -> Self {
        Self {
            space: self.space.clone(),
            matrix: self.matrix.adjoint(),
        }
    }

    pub fn scale(&self, c: C<T>) -> Self {
        Self {
            space: self.space.clone(),
            matrix: self.matrix.map(|x| x * c),
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.space != other.space {
            return Err(Error::SpaceMismatch);
        }
        Ok(Self {
            space: self.space.clone(),
            matrix: &self.matrix + &other.matrix,
        })
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        if self.space != other.space {
            return Err(Error::SpaceMismatch);
        }
        Ok(Self {
            space: self.space.clone(),
            matrix: &self.matrix * &other.matrix,
        })
    }

    /// exp(−i self), requiring hermiticity within `tol` (∞-norm, relative).
    pub fn exp_minus_i(&self, tol: T) -> Result<Self> {
        let mut max_dev = T::zero();
        let mut max_mag = T::zero();
        for r in 0..self.matrix.nrows() {
            for c in r..self.matrix.ncols() {
                let dev = (self.matrix[(r, c)] - self.matrix[(c, r)].conj())
                    .norm_sqr()
                    .sqrt();
                max_dev = max_dev.max(dev);
                max_mag = max_mag.max(self.matrix[(r, c)].norm_sqr().sqrt());
            }
        }
        if max_dev > tol * max_mag.max(T::one()) {
            return Err(Error::Unsupported(
                "matrix exponential implemented only for hermitian generators".into(),
            ));
        }
        Ok(Self {
            space: self.space.clone(),
            matrix: exp_minus_i_hermitian(&self.matrix),
        })
    }

    /// Applies the operator to a state.
    pub fn apply(&self, state: &StateVector<T>) -> Result<StateVector<T>> {
        if self.space != state.space {
            return Err(Error::SpaceMismatch);
        }
        Ok(StateVector {
            space: state.space.clone(),
            amplitudes: &self.matrix * &state.amplitudes,
        })
    }

    /// Max deviation from unitarity, ‖U†U − 1‖_max.
    pub fn unitarity_defect(&self) -> T {
        let prod = self.matrix.adjoint() * &self.matrix;
        let mut max = T::zero();
        for r in 0..prod.nrows() {
            for c in 0..prod.ncols() {
                let target = if r == c { T::one() } else { T::zero() };
                max = max.max((prod[(r, c)] - re(target)).norm_sqr().sqrt());
            }
        }
        max
    }
}

/// Pure state on a [`HilbertSpace`].
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector<T: Real> {
    space: HilbertSpace,
    amplitudes: DVector<C<T>>,
}

impl<T: Real> StateVector<T> {
    pub fn from_amplitudes(space: HilbertSpace, amplitudes: DVector<C<T>>) -> Result<Self> {
        if amplitudes.len() != space.dim() {
            return Err(Error::SpaceMismatch);
        }
        Ok(Self { space, amplitudes })
    }

    /// Product basis state |internal…⟩|n…⟩.
    pub fn basis(space: &HilbertSpace, internal: &[usize], fock: &[usize]) -> Result<Self> {
        let idx = space.compose(internal, fock)?;
        let mut amplitudes = DVector::zeros(space.dim());
        amplitudes[idx] = re(T::one());
        Ok(Self {
            space: space.clone(),
            amplitudes,
        })
    }

    pub fn space(&self) -> &HilbertSpace {
        &self.space
    }

    pub fn amplitudes(&self) -> &DVector<C<T>> {
        &self.amplitudes
    }

    pub fn amplitudes_mut(&mut self) -> &mut DVector<C<T>> {
        &mut self.amplitudes
    }

    pub fn norm(&self) -> T {
        self.amplitudes.norm()
    }

    pub fn normalize(&mut self) {
        let n = self.norm();
        if n > T::zero() {
            let inv = re(T::one() / n);
            self.amplitudes.apply(|a| *a *= inv);
        }
    }

    pub fn overlap(&self, other: &Self) -> Result<C<T>> {
        if self.space != other.space {
            return Err(Error::SpaceMismatch);
        }
        Ok(self.amplitudes.dotc(&other.amplitudes))
    }

    /// ⟨ψ|O|ψ⟩.
    pub fn expectation(&self, op: &Operator<T>) -> Result<C<T>> {
        if self.space != op.space {
            return Err(Error::SpaceMismatch);
        }
        Ok(self.amplitudes.dotc(&(&op.matrix * &self.amplitudes)))
    }

    /// ⟨a†a⟩ on one mode, computed directly from the amplitudes.
    pub fn mean_phonons(&self, mode: usize) -> Result<T> {
        self.space.mode_dim(mode)?;
        let mut total = T::zero();
        for (idx, a) in self.amplitudes.iter().enumerate() {
            let (_, fock) = self.space.decompose(idx);
            total += T::of(fock[mode] as f64) * a.norm_sqr();
        }
        Ok(total)
    }

    /// Population in the top `levels` Fock states of one mode; used as a
    /// truncation health check.
    pub fn top_population(&self, mode: usize, levels: usize) -> Result<T> {
        let d = self.space.mode_dim(mode)?;
        let floor = d.saturating_sub(levels);
        let mut total = T::zero();
        for (idx, a) in self.amplitudes.iter().enumerate() {
            let (_, fock) = self.space.decompose(idx);
            if fock[mode] >= floor {
                total += a.norm_sqr();
            }
        }
        Ok(total)
    }

    /// Reduced density matrix over the internal factors (motion traced out).
    pub fn reduced_internal(&self) -> DMatrix<C<T>> {
        let int_dim: usize = self
            .space
            .internal_dims
            .iter()
            .map(|&d| d as usize)
            .product();
        let motion_dim: usize = self.space.mode_dims.iter().product();
        let mut rho = DMatrix::zeros(int_dim, int_dim);
        // basis layout: index = internal_flat * motion_dim + motion_flat
        for r in 0..int_dim {
            for c in 0..int_dim {
                let mut s = C::new(T::zero(), T::zero());
                for k in 0..motion_dim {
                    s += self.amplitudes[r * motion_dim + k]
                        * self.amplitudes[c * motion_dim + k].conj();
                }
                rho[(r, c)] = s;
            }
        }
        rho
    }

    /// Total probability of finding molecule `molecule` in `level`.
    pub fn level_population(&self, molecule: usize, level: usize) -> Result<T> {
        let d = self.space.internal_dim(molecule)?;
        if level >= d {
            return Err(Error::Config(format!(
                "level {level} out of range for molecule {molecule} (dim {d})"
            )));
        }
        let mut total = T::zero();
        for (idx, a) in self.amplitudes.iter().enumerate() {
            let (internal, _) = self.space.decompose(idx);
            if internal[molecule] == level {
                total += a.norm_sqr();
            }
        }
        Ok(total)
    }
}

/// Statistical mixture of pure states with classical weights.
///
/// Used for thermal motional states: the dynamics here is unitary, so a
/// thermal density matrix evolves as an ensemble of independently evolved
/// Fock states.
#[derive(Debug, Clone)]
pub struct MixedEnsemble<T: Real> {
    pub members: Vec<(T, StateVector<T>)>,
}

impl<T: Real> MixedEnsemble<T> {
    pub fn pure(state: StateVector<T>) -> Self {
        Self {
            members: vec![(T::one(), state)],
        }
    }

    /// Thermal mixture over one mode at mean occupation `n_bar`, with every
    /// other factor as given by `template` (whose amplitudes on the chosen
    /// mode must be concentrated on n = 0; member n is built by replacing
    /// that factor with |n⟩). Truncated at cumulative weight 1 − ε and
    /// renormalized.
    pub fn thermal(
        space: &HilbertSpace,
        internal: &[usize],
        mode: usize,
        n_bar: T,
        epsilon: T,
    ) -> Result<Self> {
        let d = space.mode_dim(mode)?;
        let weights = thermal_fock_weights(n_bar, epsilon);
        if weights.len() > d {
            return Err(Error::Config(format!(
                "thermal state needs {} Fock levels on mode {mode}, truncation has {d}",
                weights.len()
            )));
        }
        let mut members = Vec::with_capacity(weights.len());
        for (n, &w) in weights.iter().enumerate() {
            let mut fock = vec![0usize; space.n_modes()];
            fock[mode] = n;
            members.push((w, StateVector::basis(space, internal, &fock)?));
        }
        Ok(Self { members })
    }

    /// Weighted ⟨O⟩ over the mixture.
    pub fn expectation(&self, op: &Operator<T>) -> Result<C<T>> {
        let mut total = C::new(T::zero(), T::zero());
        for (w, state) in &self.members {
            total += state.expectation(op)? * re(*w);
        }
        Ok(total)
    }

    /// Weighted mean phonon number on one mode.
    pub fn mean_phonons(&self, mode: usize) -> Result<T> {
        let mut total = T::zero();
        for (w, state) in &self.members {
            total += *w * state.mean_phonons(mode)?;
        }
        Ok(total)
    }

    /// Weighted reduced internal density matrix.
    pub fn reduced_internal(&self) -> DMatrix<C<T>> {
        let mut rho = self.members[0].1.reduced_internal() * re(self.members[0].0);
        for (w, state) in &self.members[1..] {
            rho += state.reduced_internal() * re(*w);
        }
        rho
    }

    pub fn total_weight(&self) -> T {
        self.members.iter().fold(T::zero(), |acc, (w, _)| acc + *w)
    }
}

/// Fock weights p_n ∝ n̄ⁿ/(n̄+1)ⁿ⁺¹ of a thermal state, truncated at
/// cumulative weight 1 − ε and renormalized to sum to 1.
pub fn thermal_fock_weights<T: Real>(n_bar: T, epsilon: T) -> Vec<T> {
    if n_bar <= T::zero() {
        return vec![T::one()];
    }
    let ratio = n_bar / (n_bar + T::one());
    let mut p = T::one() / (n_bar + T::one());
    let mut cum = T::zero();
    let target = T::one() - epsilon;
    let mut weights = Vec::new();
    loop {
        weights.push(p);
        cum += p;
        if cum >= target {
            break;
        }
        p *= ratio;
    }
    for w in &mut weights {
        *w /= cum;
    }
    weights
}

/// Smallest safe mode truncation for states reaching Fock level `n_top`
/// before a displacement of magnitude up to `alpha_max`.
///
/// A displaced |n⟩ has negligible weight beyond
/// n_edge = ((√(2n+1) + √2|α|)² − 1)/2; the returned dimension covers that
/// plus `margin` extra levels.
pub fn required_mode_dim(n_top: usize, alpha_max: f64, margin: usize) -> usize {
    let s = (2.0 * n_top as f64 + 1.0).sqrt() + std::f64::consts::SQRT_2 * alpha_max.abs();
    let n_edge = (s * s - 1.0) / 2.0;
    // the envelope edge plus a multiple of the number-distribution width,
    // so the population left above the cutoff stays below ~1e-6
    let tail = 6.0 * (n_edge + 1.0).sqrt();
    (n_edge + tail).ceil() as usize + margin + 1
}
