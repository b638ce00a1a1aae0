//! Variational Schmidt decomposition of a bipartite `stock (x) time` state.
//!
//! Two layered circuits act on the stock register (first `n_s` qubits) and
//! the time register (last `n_t` qubits). Training drives the joint state
//! towards `sum_m c_m |m>|m>` in the computational basis, after which the
//! Schmidt weights `|c_m|^2` (the eigenvalues of the reduced stock state) can
//! be read off the diagonal.
//!
//! When the registers differ in size, the surplus (least significant) qubits
//! of the larger register are driven to `|0>`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mmd_train::{adam_step, shifted_params, AdamConfig, AdamState};
use crate::scalar::Real;
use crate::simulator::{AnsatzSpec, ParamVector, Sampler, StateVector};

/// Default cut-off for Schmidt weights.
pub const DEFAULT_SPECTRUM_THRESHOLD: f64 = 1e-4;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Real"))]
pub struct SvdAnsatzPair<T: Real> {
    pub stock: AnsatzSpec,
    pub time: AnsatzSpec,
    pub stock_params: ParamVector<T>,
    pub time_params: ParamVector<T>,
}

impl<T: Real> SvdAnsatzPair<T> {
    /// Random rotation axes and angles for both registers.
    pub fn random(n_s: usize, n_t: usize, n_layers: usize, rng: &mut impl Rng) -> Result<Self> {
        let stock = AnsatzSpec::random_axes(n_s, n_layers, rng)?;
        let time = AnsatzSpec::random_axes(n_t, n_layers, rng)?;
        let stock_params = ParamVector::random(stock.n_params(), rng);
        let time_params = ParamVector::random(time.n_params(), rng);
        Ok(Self { stock, time, stock_params, time_params })
    }

    /// Given circuits with every angle zero (the identity).
    pub fn identity(stock: AnsatzSpec, time: AnsatzSpec) -> Self {
        let stock_params = ParamVector::zeros(stock.n_params());
        let time_params = ParamVector::zeros(time.n_params());
        Self { stock, time, stock_params, time_params }
    }

    pub fn n_params(&self) -> usize {
        self.stock.n_params() + self.time.n_params()
    }

    /// Stock parameters followed by time parameters.
    pub fn flat_params(&self) -> Vec<T> {
        self.stock_params.iter().chain(self.time_params.iter()).copied().collect()
    }

    pub fn set_flat_params(&mut self, flat: &[T]) -> Result<()> {
        if flat.len() != self.n_params() {
            return Err(Error::Dimension { expected: self.n_params(), got: flat.len() });
        }
        let (s, t) = flat.split_at(self.stock.n_params());
        self.stock_params = ParamVector(s.to_vec());
        self.time_params = ParamVector(t.to_vec());
        Ok(())
    }

    fn check(&self, state: &StateVector<T>) -> Result<()> {
        let n = self.stock.n_qubits + self.time.n_qubits;
        if state.n_qubits() != n {
            return Err(Error::Dimension { expected: n, got: state.n_qubits() });
        }
        Ok(())
    }

    /// `(U_stock (x) U_time) state` for the given flat parameters.
    pub fn apply_with(&self, state: &StateVector<T>, flat: &[T]) -> Result<StateVector<T>> {
        self.check(state)?;
        let (s, t) = flat.split_at(self.stock.n_params());
        let mut out = state.clone();
        self.stock.apply(&mut out, s, 0)?;
        self.time.apply(&mut out, t, self.stock.n_qubits)?;
        Ok(out)
    }

    pub fn apply(&self, state: &StateVector<T>) -> Result<StateVector<T>> {
        self.apply_with(state, &self.flat_params())
    }
}

/// Observables of the cost: paired `Z_q Z_{n_s + q}` and single surplus `Z`s.
fn cost_terms(n_s: usize, n_t: usize) -> Vec<Vec<usize>> {
    let m = n_s.min(n_t);
    let mut terms: Vec<Vec<usize>> = (0..m).map(|q| vec![q, n_s + q]).collect();
    terms.extend((m..n_s).map(|q| vec![q]));
    terms.extend((m..n_t).map(|q| vec![n_s + q]));
    terms
}

fn check_split<T: Real>(state: &StateVector<T>, n_s: usize, n_t: usize) -> Result<()> {
    if n_s == 0 || n_t == 0 || n_s + n_t != state.n_qubits() {
        return Err(Error::Dimension { expected: state.n_qubits(), got: n_s + n_t });
    }
    Ok(())
}

/// `sum (1 - <Z...>) / 2` over paired and surplus qubits: the expected
/// Hamming distance between the two register readouts, plus the number of
/// surplus qubits found in `|1>`.
pub fn svd_cost<T: Real>(state: &StateVector<T>, n_s: usize, n_t: usize) -> Result<T> {
    check_split(state, n_s, n_t)?;
    let half = T::of(0.5);
    cost_terms(n_s, n_t)
        .iter()
        .map(|qs| Ok((T::one() - state.expectation_z_product(qs)?) * half))
        .sum()
}

/// Shot-based estimate of [`svd_cost`] from `n_shot` computational-basis reads.
pub fn svd_cost_sampled<T: Real>(state: &StateVector<T>, n_s: usize, n_t: usize, n_shot: usize, rng: &mut impl Rng) -> Result<T> {
    check_split(state, n_s, n_t)?;
    if n_shot == 0 {
        return Err(Error::Config("n_shot must be at least 1".into()));
    }
    let n = state.n_qubits();
    let masks: Vec<usize> = cost_terms(n_s, n_t)
        .iter()
        .map(|qs| qs.iter().fold(0, |m, &q| m ^ (1 << (n - 1 - q))))
        .collect();
    let sampler = Sampler::new_unchecked(&state.probabilities());
    let mut flips = 0usize;
    for _ in 0..n_shot {
        let j = sampler.sample(rng);
        flips += masks.iter().filter(|&&m| (j & m).count_ones() % 2 == 1).count();
    }
    Ok(T::from_usize(flips) / T::from_usize(n_shot))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SvdCostMode {
    Exact,
    Sampled { n_shot: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QsvdConfig {
    pub n_layers: usize,
    pub iterations: usize,
    pub lr: f64,
    pub adam: AdamConfig,
    pub mode: SvdCostMode,
    /// Independent random initializations; the lowest final cost wins.
    pub n_trials: usize,
    /// Stop restarting once a run ends below this cost.
    #[serde(default)]
    pub good_enough: Option<f64>,
    pub spectrum_threshold: f64,
}

impl Default for QsvdConfig {
    fn default() -> Self {
        Self {
            n_layers: 8,
            iterations: 500,
            lr: 0.01,
            adam: AdamConfig::default(),
            mode: SvdCostMode::Exact,
            n_trials: 1,
            good_enough: None,
            spectrum_threshold: DEFAULT_SPECTRUM_THRESHOLD,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Real"))]
pub struct QsvdRun<T: Real> {
    pub pair: SvdAnsatzPair<T>,
    /// Exact cost before training and after each update.
    pub costs: Vec<T>,
}

impl<T: Real> QsvdRun<T> {
    pub fn final_cost(&self) -> T {
        *self.costs.last().expect("initial cost is always recorded")
    }
}

/// Parameter-shift gradient of the SVD cost with respect to the flat
/// parameters of `pair`.
pub fn svd_cost_gradient<T: Real>(
    data_state: &StateVector<T>,
    pair: &SvdAnsatzPair<T>,
    flat: &[T],
    mode: SvdCostMode,
    rng: &mut impl Rng,
) -> Result<Vec<T>> {
    let (n_s, n_t) = (pair.stock.n_qubits, pair.time.n_qubits);
    let mut eval = |p: &[T]| -> Result<T> {
        let s = pair.apply_with(data_state, p)?;
        match mode {
            SvdCostMode::Exact => svd_cost(&s, n_s, n_t),
            SvdCostMode::Sampled { n_shot } => svd_cost_sampled(&s, n_s, n_t, n_shot, rng),
        }
    };
    let half = T::of(0.5);
    (0..flat.len())
        .map(|r| {
            let plus = eval(&shifted_params(flat, r, 1)?)?;
            let minus = eval(&shifted_params(flat, r, -1)?)?;
            Ok((plus - minus) * half)
        })
        .collect()
}

/// Adam minimization of the SVD cost starting from `pair`.
pub fn train_qsvd<T: Real>(
    data_state: &StateVector<T>,
    mut pair: SvdAnsatzPair<T>,
    cfg: &QsvdConfig,
    rng: &mut impl Rng,
) -> Result<QsvdRun<T>> {
    pair.check(data_state)?;
    if !(cfg.lr > 0.0) {
        return Err(Error::Config("qSVD learning rate must be positive".into()));
    }
    let (n_s, n_t) = (pair.stock.n_qubits, pair.time.n_qubits);
    let mut flat = pair.flat_params();
    let mut adam = AdamState::new(flat.len());
    let mut costs = Vec::with_capacity(cfg.iterations + 1);
    costs.push(svd_cost(&pair.apply_with(data_state, &flat)?, n_s, n_t)?);
    for _ in 0..cfg.iterations {
        let grad = svd_cost_gradient(data_state, &pair, &flat, cfg.mode, rng)?;
        adam_step(&mut flat, &grad, &mut adam, T::of(cfg.lr), &cfg.adam);
        costs.push(svd_cost(&pair.apply_with(data_state, &flat)?, n_s, n_t)?);
    }
    pair.set_flat_params(&flat)?;
    Ok(QsvdRun { pair, costs })
}

/// Runs up to `cfg.n_trials` randomly initialized trainings and keeps the one
/// with the lowest final cost, stopping early once a run beats
/// `cfg.good_enough`.
pub fn train_qsvd_trials<T: Real>(
    data_state: &StateVector<T>,
    n_s: usize,
    n_t: usize,
    cfg: &QsvdConfig,
    rng: &mut impl Rng,
) -> Result<QsvdRun<T>> {
    let mut best: Option<QsvdRun<T>> = None;
    for _ in 0..cfg.n_trials.max(1) {
        let pair = SvdAnsatzPair::random(n_s, n_t, cfg.n_layers, rng)?;
        let run = train_qsvd(data_state, pair, cfg, rng)?;
        if best.as_ref().map_or(true, |b| run.final_cost() < b.final_cost()) {
            best = Some(run);
        }
        let cost = best.as_ref().map(|b| b.final_cost().as_f64());
        if matches!((cost, cfg.good_enough), (Some(c), Some(g)) if c < g) {
            break;
        }
    }
    Ok(best.expect("at least one trial"))
}

/// Diagonal Schmidt weights read from a trained state.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Real"))]
pub struct SchmidtSpectrum<T: Real> {
    /// Kept weights `|<m,m|state>|^2` in index order, before renormalization.
    pub weights: Vec<T>,
    /// Mass not kept: off-diagonal probability plus dropped small weights.
    pub residual: T,
}

impl<T: Real> SchmidtSpectrum<T> {
    pub fn kept_mass(&self) -> T {
        self.weights.iter().copied().sum()
    }

    /// Kept weights rescaled to sum to one.
    pub fn probabilities(&self) -> Vec<T> {
        let total = self.kept_mass();
        self.weights.iter().map(|&w| w / total).collect()
    }

    pub fn entropy(&self) -> Result<T> {
        svd_entropy(&self.probabilities())
    }
}

/// Reads the weights at the paired basis states `|m, m>` (surplus qubits 0)
/// and drops those below `threshold`.
pub fn extract_schmidt_spectrum<T: Real>(state: &StateVector<T>, n_s: usize, n_t: usize, threshold: T) -> Result<SchmidtSpectrum<T>> {
    check_split(state, n_s, n_t)?;
    let m = n_s.min(n_t);
    let probs = state.probabilities();
    let total: T = probs.iter().copied().sum();
    let weights: Vec<T> = (0..1usize << m)
        .map(|k| {
            let stock = k << (n_s - m);
            let time = k << (n_t - m);
            probs[(stock << n_t) | time]
        })
        .filter(|&w| w >= threshold)
        .collect();
    let kept: T = weights.iter().copied().sum();
    if kept < T::of(0.5) {
        return Err(Error::SpectrumMass(kept.as_f64()));
    }
    Ok(SchmidtSpectrum { weights, residual: total - kept })
}

/// `-sum l ln l` with `0 ln 0 = 0`.
pub fn svd_entropy<T: Real>(spectrum: &[T]) -> Result<T> {
    crate::simulator::validate_distribution(spectrum)?;
    Ok(spectrum
        .iter()
        .filter(|&&l| l > T::zero())
        .map(|&l| -l * l.ln())
        .sum())
}
