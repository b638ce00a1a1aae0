use std::collections::BTreeMap;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::adam::{adam_step, AdamConfig, AdamState};
use super::cost::{cost_of_state, CostTriple, Objective, TrainingTarget};
use super::gradient::{mmd_gradient, GradientMode};
use super::kernel::{KernelConfig, KernelTable};
use crate::encoding::TargetEncoding;
use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::simulator::{rng_for, run_ansatz, AnsatzSpec, ParamVector};

/// Learning rate `lr` applies to iterations `<= until` (1-based); `None`
/// means every remaining iteration.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LrStage {
    pub until: Option<usize>,
    pub lr: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub n_shot: usize,
    pub iterations: usize,
    pub lr_schedule: Vec<LrStage>,
    pub adam: AdamConfig,
    pub n_trials: usize,
    /// Iterations whose parameters are saved for later selection.
    pub checkpoints: Vec<usize>,
    pub seed: u64,
    pub gradient: GradientMode,
    pub objective: Objective,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            n_shot: 400,
            iterations: 200,
            lr_schedule: vec![LrStage { until: Some(100), lr: 0.1 }, LrStage { until: None, lr: 0.01 }],
            adam: AdamConfig::default(),
            n_trials: 10,
            checkpoints: Vec::new(),
            seed: 0,
            gradient: GradientMode::Sampled,
            objective: Objective::Amplitude,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_shot == 0 {
            return Err(Error::Config("n_shot must be at least 1".into()));
        }
        if self.lr_schedule.is_empty() || self.lr_schedule.iter().any(|s| !(s.lr > 0.0)) {
            return Err(Error::Config("learning rates must be positive".into()));
        }
        if self.n_trials == 0 {
            return Err(Error::Config("n_trials must be at least 1".into()));
        }
        Ok(())
    }

    /// Learning rate for 1-based iteration `t`.
    pub fn learning_rate(&self, t: usize) -> f64 {
        self.lr_schedule
            .iter()
            .find(|s| s.until.map_or(true, |u| t <= u))
            .or(self.lr_schedule.last())
            .map_or(0.0, |s| s.lr)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Real"))]
pub struct TrainRecord<T: Real> {
    pub trial: usize,
    pub seed: u64,
    pub config: TrainConfig,
    pub kernel: KernelConfig<T>,
    pub ansatz: AnsatzSpec,
    /// Entry `i` is the exact cost after `i` updates; entry 0 is the start.
    pub costs: Vec<CostTriple<T>>,
    pub checkpoints: BTreeMap<usize, ParamVector<T>>,
    pub initial_params: ParamVector<T>,
    pub final_params: ParamVector<T>,
    /// Wall-clock time of the run; skipped when comparing reports.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub duration_secs: Option<f64>,
}

impl<T: Real> TrainRecord<T> {
    pub fn final_cost(&self) -> CostTriple<T> {
        *self.costs.last().expect("a record always holds the initial cost")
    }

    /// Record without wall-clock information, for byte-stable output.
    pub fn without_timing(mut self) -> Self {
        self.duration_secs = None;
        self
    }
}

/// Trains one loader for `enc` from the trial's own random start.
pub fn train_encoder<T: Real>(
    enc: &TargetEncoding<T>,
    spec: &AnsatzSpec,
    cfg: &TrainConfig,
    kernel: &KernelConfig<T>,
    trial: usize,
) -> Result<TrainRecord<T>> {
    cfg.validate()?;
    kernel.validate()?;
    let target = TrainingTarget::new(enc, cfg.objective);
    if spec.n_qubits != target.n_qubits() {
        return Err(Error::Dimension { expected: target.n_qubits(), got: spec.n_qubits });
    }
    let started = Instant::now();
    let table = KernelTable::new(target.p.len(), kernel);
    let mut rng = rng_for(cfg.seed, trial as u64);
    let mut params = ParamVector::<T>::random(spec.n_params(), &mut rng);
    let initial_params = params.clone();
    let mut adam = AdamState::new(params.len());
    let mut costs = Vec::with_capacity(cfg.iterations + 1);
    let mut checkpoints = BTreeMap::new();

    costs.push(cost_of_state(&run_ansatz(spec, &params)?, &target, &table));
    if cfg.checkpoints.contains(&0) {
        checkpoints.insert(0, params.clone());
    }
    for t in 1..=cfg.iterations {
        let grad = mmd_gradient(spec, &params, &target, kernel, cfg.gradient, cfg.n_shot, &mut rng)?;
        adam_step(&mut params, &grad, &mut adam, T::of(cfg.learning_rate(t)), &cfg.adam);
        costs.push(cost_of_state(&run_ansatz(spec, &params)?, &target, &table));
        if cfg.checkpoints.contains(&t) {
            checkpoints.insert(t, params.clone());
        }
    }

    Ok(TrainRecord {
        trial,
        seed: cfg.seed,
        config: cfg.clone(),
        kernel: *kernel,
        ansatz: spec.clone(),
        costs,
        checkpoints,
        initial_params,
        final_params: params,
        duration_secs: Some(started.elapsed().as_secs_f64()),
    })
}

/// Runs `cfg.n_trials` independent trials in parallel; results are ordered by
/// trial index.
pub fn train_trials<T: Real>(
    enc: &TargetEncoding<T>,
    spec: &AnsatzSpec,
    cfg: &TrainConfig,
    kernel: &KernelConfig<T>,
) -> Result<Vec<TrainRecord<T>>> {
    (0..cfg.n_trials)
        .into_par_iter()
        .map(|trial| train_encoder(enc, spec, cfg, kernel, trial))
        .collect()
}

/// The winning parameters among a set of trials.
#[derive(Clone, Copy, Debug)]
pub struct BestTrial<'a, T: Real> {
    pub record: &'a TrainRecord<T>,
    pub iteration: usize,
    pub params: &'a ParamVector<T>,
    pub cost: CostTriple<T>,
}

/// Picks the record and saved iteration with the lowest exact cost `L`.
///
/// Candidates in each record are its checkpoints plus its final parameters.
/// Ties keep the earliest trial.
pub fn select_best_trial<T: Real>(records: &[TrainRecord<T>]) -> Result<BestTrial<'_, T>> {
    let mut best: Option<BestTrial<'_, T>> = None;
    for record in records {
        let last = record.costs.len() - 1;
        let candidates = record
            .checkpoints
            .iter()
            .filter(|(&it, _)| it < record.costs.len())
            .map(|(&it, p)| (it, p))
            .chain(std::iter::once((last, &record.final_params)));
        for (iteration, params) in candidates {
            let cost = record.costs[iteration];
            if best.map_or(true, |b| cost.l < b.cost.l) {
                best = Some(BestTrial { record, iteration, params, cost });
            }
        }
    }
    best.ok_or(Error::Empty("trial records"))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fake_record(trial: usize, ls: &[f64], checkpoints: &[usize]) -> TrainRecord<f64> {
        let spec = AnsatzSpec::all_y(1, 1).unwrap();
        TrainRecord {
            trial,
            seed: 0,
            config: TrainConfig::default(),
            kernel: KernelConfig::default(),
            ansatz: spec,
            costs: ls.iter().map(|&l| CostTriple { l, l1: l, l2: l }).collect(),
            checkpoints: checkpoints.iter().map(|&c| (c, ParamVector(vec![c as f64]))).collect(),
            initial_params: ParamVector(vec![0.0]),
            final_params: ParamVector(vec![-1.0]),
            duration_secs: None,
        }
    }

    #[test]
    fn learning_rate_schedule() {
        let cfg = TrainConfig::default();
        assert_eq!(cfg.learning_rate(1), 0.1);
        assert_eq!(cfg.learning_rate(100), 0.1);
        assert_eq!(cfg.learning_rate(101), 0.01);
        assert_eq!(cfg.learning_rate(10_000), 0.01);
    }

    #[test]
    fn selection() {
        let one = [fake_record(0, &[1.0, 0.5], &[])];
        let b = select_best_trial(&one).unwrap();
        assert_eq!((b.record.trial, b.iteration), (0, 1));

        let two = [fake_record(0, &[1.0, 0.5], &[]), fake_record(1, &[1.0, 0.005], &[])];
        assert_eq!(select_best_trial(&two).unwrap().record.trial, 1);

        let mut ls = vec![1.0; 301];
        ls[200] = 0.02;
        ls[300] = 0.008;
        let ck = [fake_record(0, &ls, &[200, 300])];
        let b = select_best_trial(&ck).unwrap();
        assert_eq!(b.iteration, 300);
        assert_eq!(b.cost.l, 0.008);

        let mut ls = vec![1.0; 301];
        ls[200] = 0.002;
        ls[300] = 0.008;
        let ck = [fake_record(0, &ls, &[200, 300])];
        let b = select_best_trial(&ck).unwrap();
        assert_eq!(b.iteration, 200);
        assert_eq!(b.params.0, vec![200.0]);

        assert!(select_best_trial::<f64>(&[]).is_err());
    }
}
