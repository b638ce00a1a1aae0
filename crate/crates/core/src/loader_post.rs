//! Recovering the data state from a sign-extended loader.
//!
//! A loader for a mixed-sign vector prepares `|psi_bar>` on `n + 1` qubits
//! with the sign ancilla last. A Hadamard on the ancilla followed by
//! post-selecting `|1>` leaves the signed data on the first `n` qubits with
//! probability 1/2; one round of amplitude amplification raises that to 1.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::simulator::{AnsatzSpec, Gate, StateVector};

#[derive(Clone, Debug, PartialEq)]
pub struct PostSelectResult<T: Real> {
    /// Renormalized data register.
    pub data_state: StateVector<T>,
    /// Squared norm of the selected branch before renormalization.
    pub success_probability: T,
}

/// Unnormalized `|1>`-branch of `(I (x) H)` applied to `state`.
fn selected_branch<T: Real>(state: &StateVector<T>) -> Result<Vec<Complex<T>>> {
    if state.n_qubits() < 2 {
        return Err(Error::QubitCount(state.n_qubits(), crate::simulator::MAX_QUBITS));
    }
    let mut h = state.clone();
    h.apply(&Gate::Hadamard(state.n_qubits() - 1))?;
    Ok(h.amplitudes().iter().skip(1).step_by(2).copied().collect())
}

/// Hadamard on the last qubit, then keep the `|1>` outcome.
pub fn post_select<T: Real>(state: &StateVector<T>) -> Result<PostSelectResult<T>> {
    let branch = selected_branch(state)?;
    let prob: T = branch.iter().map(|a| a.norm_sqr()).sum();
    if !(prob > T::zero()) {
        return Err(Error::ZeroBranch);
    }
    let mut data_state = StateVector::from_amplitudes(branch)?;
    data_state.scale(T::one() / prob.sqrt());
    Ok(PostSelectResult { data_state, success_probability: prob })
}

fn check_target<T: Real>(candidate: &StateVector<T>, target_d: &[T]) -> Result<()> {
    if candidate.dim() != 2 * target_d.len() {
        return Err(Error::Dimension { expected: 2 * target_d.len(), got: candidate.dim() });
    }
    Ok(())
}

/// `|<d| post-selected state>|` with the selected branch renormalized, so an
/// exact loader scores 1. A zero branch scores 0.
pub fn overlap<T: Real>(candidate: &StateVector<T>, target_d: &[T]) -> Result<T> {
    check_target(candidate, target_d)?;
    let branch = selected_branch(candidate)?;
    let norm = branch.iter().map(|a| a.norm_sqr()).sum::<T>().sqrt();
    if !(norm > T::zero()) {
        return Ok(T::zero());
    }
    Ok(project(&branch, target_d).norm() / norm)
}

/// `|<1|<d| (I (x) H) candidate>|` without renormalization (at most `1/sqrt(2)`
/// for an exact loader).
pub fn raw_overlap<T: Real>(candidate: &StateVector<T>, target_d: &[T]) -> Result<T> {
    check_target(candidate, target_d)?;
    Ok(project(&selected_branch(candidate)?, target_d).norm())
}

fn project<T: Real>(branch: &[Complex<T>], d: &[T]) -> Complex<T> {
    branch
        .iter()
        .zip(d)
        .fold(Complex::new(T::zero(), T::zero()), |acc, (a, &x)| acc + *a * x)
}

/// Flips the global sign of `state` so that its largest-magnitude real
/// amplitude agrees in sign with the corresponding entry of `reference`.
pub fn align_sign<T: Real>(state: &mut StateVector<T>, reference: &[T]) {
    let Some((idx, _)) = reference
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.abs().partial_cmp(&b.1.abs()).unwrap_or(std::cmp::Ordering::Equal))
    else {
        return;
    };
    if idx < state.dim() && state.amplitudes()[idx].re * reference[idx] < T::zero() {
        state.negate();
    }
}

/// A state preparation `U` acting on the leading qubits of a register.
pub trait Loader<T: Real> {
    fn n_qubits(&self) -> usize;
    /// `U` on qubits `0..n_qubits()` of `state`.
    fn load(&self, state: &mut StateVector<T>) -> Result<()>;
    /// `U^dagger` on the same qubits.
    fn unload(&self, state: &mut StateVector<T>) -> Result<()>;
}

/// A layered circuit with fixed parameters.
#[derive(Clone, Copy, Debug)]
pub struct CircuitLoader<'a, T> {
    pub spec: &'a AnsatzSpec,
    pub params: &'a [T],
}

impl<'a, T: Real> CircuitLoader<'a, T> {
    pub fn new(spec: &'a AnsatzSpec, params: &'a [T]) -> Result<Self> {
        if params.len() != spec.n_params() {
            return Err(Error::Dimension { expected: spec.n_params(), got: params.len() });
        }
        Ok(Self { spec, params })
    }
}

impl<T: Real> Loader<T> for CircuitLoader<'_, T> {
    fn n_qubits(&self) -> usize {
        self.spec.n_qubits
    }

    fn load(&self, state: &mut StateVector<T>) -> Result<()> {
        self.spec.apply(state, self.params, 0)
    }

    fn unload(&self, state: &mut StateVector<T>) -> Result<()> {
        self.spec.apply_inverse(state, self.params, 0)
    }
}

/// Exact real loader: the reflection `I - 2|w><w|` with `w` proportional to
/// `|0> - |psi>`, which swaps `|0>` and `|psi>` and is its own inverse.
#[derive(Clone, Debug, PartialEq)]
pub struct HouseholderLoader<T: Real> {
    n_qubits: usize,
    /// Unit `w`, or `None` when `psi = |0>`.
    w: Option<Vec<T>>,
}

impl<T: Real> HouseholderLoader<T> {
    pub fn new(psi: &[T]) -> Result<Self> {
        if !psi.len().is_power_of_two() || psi.len() < 2 {
            return Err(Error::NotPowerOfTwo(psi.len()));
        }
        let norm = psi.iter().map(|&x| x * x).sum::<T>().sqrt();
        if (norm - T::one()).abs() > T::of(1e-9) {
            return Err(Error::Config(format!("loader target has norm {norm}")));
        }
        let mut w: Vec<T> = psi.iter().map(|&x| -x).collect();
        w[0] += T::one();
        let wn = w.iter().map(|&x| x * x).sum::<T>().sqrt();
        let w = (wn > T::of(1e-12)).then(|| w.into_iter().map(|x| x / wn).collect());
        Ok(Self { n_qubits: psi.len().trailing_zeros() as usize, w })
    }
}

impl<T: Real> Loader<T> for HouseholderLoader<T> {
    fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    fn load(&self, state: &mut StateVector<T>) -> Result<()> {
        if state.n_qubits() < self.n_qubits {
            return Err(Error::QubitCount(self.n_qubits, state.n_qubits()));
        }
        let Some(w) = &self.w else { return Ok(()) };
        let stride = state.dim() >> self.n_qubits;
        let amps = state.amplitudes_mut();
        for low in 0..stride {
            let dot = w
                .iter()
                .enumerate()
                .fold(Complex::new(T::zero(), T::zero()), |acc, (i, &wi)| acc + amps[i * stride + low] * wi);
            let two_dot = dot * T::of(2.0);
            for (i, &wi) in w.iter().enumerate() {
                amps[i * stride + low] -= two_dot * wi;
            }
        }
        Ok(())
    }

    fn unload(&self, state: &mut StateVector<T>) -> Result<()> {
        self.load(state)
    }
}

/// Amplitude amplification of the `|11>` ancilla branch for a loader on
/// `n + 1` qubits, acting on `n + 2` qubits.
///
/// `A = ((I_n (x) H) U) (x) H` and
/// `Q = A (I - 2|0><0|) A^dagger (I - 2 I_n (x) |11><11|)`.
pub struct Amplifier<'a, T: Real> {
    loader: &'a dyn Loader<T>,
    n_total: usize,
}

impl<'a, T: Real> Amplifier<'a, T> {
    pub fn new(loader: &'a dyn Loader<T>) -> Self {
        Self { loader, n_total: loader.n_qubits() + 1 }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_total
    }

    pub fn apply_a(&self, state: &mut StateVector<T>) -> Result<()> {
        self.loader.load(state)?;
        state.apply(&Gate::Hadamard(self.n_total - 2))?;
        state.apply(&Gate::Hadamard(self.n_total - 1))
    }

    pub fn apply_a_dagger(&self, state: &mut StateVector<T>) -> Result<()> {
        state.apply(&Gate::Hadamard(self.n_total - 1))?;
        state.apply(&Gate::Hadamard(self.n_total - 2))?;
        self.loader.unload(state)
    }

    /// `I - 2 I_n (x) |11><11|`
    pub fn reflect_marked(&self, state: &mut StateVector<T>) {
        for (j, a) in state.amplitudes_mut().iter_mut().enumerate() {
            if j & 0b11 == 0b11 {
                *a = -*a;
            }
        }
    }

    /// `I - 2|0><0|`
    pub fn reflect_zero(&self, state: &mut StateVector<T>) {
        let a = &mut state.amplitudes_mut()[0];
        *a = -*a;
    }

    pub fn apply_q(&self, state: &mut StateVector<T>) -> Result<()> {
        self.reflect_marked(state);
        self.apply_a_dagger(state)?;
        self.reflect_zero(state);
        self.apply_a(state)
    }

    pub fn apply_q_dagger(&self, state: &mut StateVector<T>) -> Result<()> {
        self.apply_a_dagger(state)?;
        self.reflect_zero(state);
        self.apply_a(state)?;
        self.reflect_marked(state);
        Ok(())
    }

    /// `A |0>`
    pub fn prepare(&self) -> Result<StateVector<T>> {
        let mut s = StateVector::zero(self.n_total)?;
        self.apply_a(&mut s)?;
        Ok(s)
    }
}

/// `Q A |0>` on `n + 2` qubits.
pub fn amplitude_amplify<T: Real>(loader: &dyn Loader<T>) -> Result<StateVector<T>> {
    let amp = Amplifier::new(loader);
    let mut s = amp.prepare()?;
    amp.apply_q(&mut s)?;
    Ok(s)
}

/// Probability that the last two qubits read `|11>`.
pub fn marked_probability<T: Real>(state: &StateVector<T>) -> T {
    state
        .amplitudes()
        .iter()
        .enumerate()
        .filter(|(j, _)| j & 0b11 == 0b11)
        .map(|(_, a)| a.norm_sqr())
        .sum()
}

/// Renormalized data register of the `|11>` branch.
pub fn marked_branch<T: Real>(state: &StateVector<T>) -> Result<StateVector<T>> {
    let branch: Vec<Complex<T>> = state.amplitudes().iter().skip(3).step_by(4).copied().collect();
    let norm = branch.iter().map(|a| a.norm_sqr()).sum::<T>().sqrt();
    if !(norm > T::zero()) {
        return Err(Error::ZeroBranch);
    }
    let mut s = StateVector::from_amplitudes(branch)?;
    s.scale(T::one() / norm);
    Ok(s)
}
