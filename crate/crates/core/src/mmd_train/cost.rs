use serde::{Deserialize, Serialize};

use super::kernel::{KernelConfig, KernelTable};
use crate::encoding::TargetEncoding;
use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::simulator::{run_ansatz, validate_distribution, AnsatzSpec, StateVector};

/// `E_qq[k] - 2 E_qp[k] + E_pp[k]` with full double sums.
pub fn mmd_exact<T: Real>(q: &[T], p: &[T], cfg: &KernelConfig<T>) -> Result<T> {
    if q.len() != p.len() {
        return Err(Error::Dimension { expected: p.len(), got: q.len() });
    }
    validate_distribution(q)?;
    validate_distribution(p)?;
    let table = KernelTable::new(q.len(), cfg);
    Ok(mmd_with_table(q, p, &table))
}

pub(crate) fn mmd_with_table<T: Real>(q: &[T], p: &[T], table: &KernelTable<T>) -> T {
    let diff: Vec<T> = q.iter().zip(p).map(|(&a, &b)| a - b).collect();
    // (q - p)^T K (q - p) is the same quantity with less cancellation.
    table.bilinear(&diff, &diff).max(T::zero())
}

/// Sample estimate of the MMD from one stream per distribution.
///
/// Cross terms pair sample `l` of `samples_q` with sample `l` of `samples_p`.
/// Self terms pair each sample with its cyclic successor in the same stream,
/// so each pair holds two independent draws when the stream has at least two.
pub fn mmd_sampled<T: Real>(samples_q: &[usize], samples_p: &[usize], cfg: &KernelConfig<T>) -> Result<T> {
    if samples_q.is_empty() || samples_p.is_empty() {
        return Err(Error::Empty("sample sequence"));
    }
    let max = samples_q.iter().chain(samples_p).copied().max().unwrap_or(0);
    let table = KernelTable::new(max + 1, cfg);
    let self_term = |s: &[usize]| {
        let shifted: Vec<usize> = s.iter().cycle().skip(1).take(s.len()).copied().collect();
        table.paired_mean(s, &shifted)
    };
    Ok(self_term(samples_q) - T::of(2.0) * table.paired_mean(samples_q, samples_p) + self_term(samples_p))
}

/// What the loader is asked to reproduce.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Objective {
    /// Match both the computational and the Hadamard-basis distribution
    /// (sign-aware encoding, ancilla included for mixed signs).
    Amplitude,
    /// Match `|d_j|^2` only, on the data register (sign-blind baseline).
    MagnitudeOnly,
}

/// Target distributions for one training run.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainingTarget<T> {
    pub p: Vec<T>,
    pub p_hadamard: Option<Vec<T>>,
}

impl<T: Real> TrainingTarget<T> {
    pub fn new(enc: &TargetEncoding<T>, objective: Objective) -> Self {
        match objective {
            Objective::Amplitude => Self { p: enc.p.clone(), p_hadamard: Some(enc.p_hadamard.clone()) },
            Objective::MagnitudeOnly => Self { p: enc.magnitude_distribution(), p_hadamard: None },
        }
    }

    pub fn n_qubits(&self) -> usize {
        self.p.len().trailing_zeros() as usize
    }

    pub(crate) fn basis_weight(&self) -> T {
        if self.p_hadamard.is_some() {
            T::of(0.5)
        } else {
            T::one()
        }
    }
}

/// Exact costs `(L, L1, L2)`.
///
/// `L1` compares the computational basis and `L2` the Hadamard basis, with
/// `L = (L1 + L2) / 2`. Without a Hadamard target, `L = L1` and `L2 = 0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Real"))]
pub struct CostTriple<T: Real> {
    pub l: T,
    pub l1: T,
    pub l2: T,
}

impl<T: Real> CostTriple<T> {
    pub fn meets(&self, threshold: T) -> bool {
        self.l1 < threshold && self.l2 < threshold
    }
}

pub(crate) fn cost_of_state<T: Real>(
    state: &StateVector<T>,
    target: &TrainingTarget<T>,
    table: &KernelTable<T>,
) -> CostTriple<T> {
    let l1 = mmd_with_table(&state.probabilities(), &target.p, table);
    match &target.p_hadamard {
        Some(ph) => {
            let mut h = state.clone();
            h.hadamard_all();
            let l2 = mmd_with_table(&h.probabilities(), ph, table);
            CostTriple { l: (l1 + l2) / T::of(2.0), l1, l2 }
        }
        None => CostTriple { l: l1, l1, l2: T::zero() },
    }
}

/// Exact cost of the ansatz output against `target`.
pub fn exact_cost<T: Real>(
    spec: &AnsatzSpec,
    params: &[T],
    target: &TrainingTarget<T>,
    kernel: &KernelConfig<T>,
) -> Result<CostTriple<T>> {
    if spec.n_qubits != target.n_qubits() {
        return Err(Error::Dimension { expected: target.n_qubits(), got: spec.n_qubits });
    }
    let state = run_ansatz(spec, params)?;
    Ok(cost_of_state(&state, target, &KernelTable::new(target.p.len(), kernel)))
}

/// Exact costs of an arbitrary state (e.g. a sign-flipped copy of the target).
pub fn state_cost<T: Real>(
    state: &StateVector<T>,
    target: &TrainingTarget<T>,
    kernel: &KernelConfig<T>,
) -> Result<CostTriple<T>> {
    if state.dim() != target.p.len() {
        return Err(Error::Dimension { expected: target.p.len(), got: state.dim() });
    }
    Ok(cost_of_state(state, target, &KernelTable::new(target.p.len(), kernel)))
}
