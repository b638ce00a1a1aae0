//! End-to-end entropy series: window, load, post-select, Schmidt readout.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::finance::{build_data_vector, correlation_spectrum, market_windows, MarketWindow, StockSeries};
use crate::loader_post::{overlap, post_select};
use crate::mmd_train::{select_best_trial, train_trials, KernelConfig, Objective, TrainConfig};
use crate::qsvd::{extract_schmidt_spectrum, train_qsvd_trials, QsvdConfig};
use crate::scalar::Real;
use crate::simulator::{rng_for, run_ansatz, AnsatzSpec, StateVector};

/// Everything that determines a report. Echoed verbatim into it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    /// Prices per window.
    pub window: usize,
    /// Loader depth.
    pub layers: usize,
    pub train: TrainConfig,
    pub kernel: KernelConfig<f64>,
    pub qsvd: QsvdConfig,
    /// Also run the sign-blind loader on the data register alone.
    pub baseline: bool,
    /// Master seed; every trial and qSVD run derives its stream from it.
    pub seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            window: 5,
            layers: 8,
            train: TrainConfig::default(),
            kernel: KernelConfig::default(),
            qsvd: QsvdConfig { n_trials: 6, good_enough: Some(1e-3), ..QsvdConfig::default() },
            baseline: true,
            seed: 0,
        }
    }
}

/// Distinct sub-seeds of the master seed.
#[derive(Clone, Copy)]
enum Purpose {
    Loader = 0,
    Baseline = 1,
    Schmidt = 2,
    BaselineSchmidt = 3,
}

fn derive_seed(master: u64, term: usize, purpose: Purpose) -> u64 {
    rng_for(master, (term as u64) << 2 | purpose as u64).gen()
}

/// Outcome of one loader + Schmidt chain.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Real"))]
pub struct ChainResult<T: Real> {
    pub entropy: T,
    /// Renormalized Schmidt weights, in readout order.
    pub spectrum: Vec<T>,
    pub schmidt_cost: T,
    pub best_trial: usize,
    pub best_iteration: usize,
    pub l: T,
    pub l1: T,
    pub l2: T,
    /// Trials whose final cost has both terms below 0.01.
    pub converged_trials: usize,
    /// Exact cost `L` of the winning trial after each update.
    pub cost_curve: Vec<T>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Real"))]
pub struct TermRecord<T: Real> {
    pub term: String,
    pub exact: Option<T>,
    /// Eigenvalues of the correlation matrix, descending.
    pub exact_spectrum: Vec<T>,
    pub aae: Option<ChainResult<T>>,
    /// Overlap of the post-selected best loader with the data vector.
    pub overlap: Option<T>,
    pub success_probability: Option<T>,
    pub naive: Option<ChainResult<T>>,
    pub errors: Vec<String>,
}

impl<T: Real> TermRecord<T> {
    /// `|aae - exact| / exact`, when both exist.
    pub fn relative_error(&self) -> Option<T> {
        Some((self.aae.as_ref()?.entropy - self.exact?).abs() / self.exact?)
    }

    pub fn naive_relative_error(&self) -> Option<T> {
        Some((self.naive.as_ref()?.entropy - self.exact?).abs() / self.exact?)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Real"))]
pub struct EntropyReport<T: Real> {
    pub config: PipelineConfig,
    pub symbols: Vec<String>,
    pub terms: Vec<TermRecord<T>>,
}

/// One line of the flat CSV.
#[derive(Serialize)]
struct CsvRow {
    term: String,
    exact: Option<f64>,
    aae: Option<f64>,
    naive: Option<f64>,
    overlap: Option<f64>,
    #[serde(rename = "L1")]
    l1: Option<f64>,
    #[serde(rename = "L2")]
    l2: Option<f64>,
}

impl<T: Real> EntropyReport<T> {
    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Io(e.to_string()))
    }

    /// `term,exact,aae,naive,overlap,L1,L2`; missing values are empty.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for t in &self.terms {
            w.serialize(CsvRow {
                term: t.term.clone(),
                exact: t.exact.map(Real::as_f64),
                aae: t.aae.as_ref().map(|c| c.entropy.as_f64()),
                naive: t.naive.as_ref().map(|c| c.entropy.as_f64()),
                overlap: t.overlap.map(Real::as_f64),
                l1: t.aae.as_ref().map(|c| c.l1.as_f64()),
                l2: t.aae.as_ref().map(|c| c.l2.as_f64()),
            })?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::Io(e.to_string()))
    }
}

fn kernel_as<T: Real>(k: &KernelConfig<f64>) -> KernelConfig<T> {
    KernelConfig { sigma_sq: T::of(k.sigma_sq), scale: T::of(k.scale) }
}

/// Trains loaders, returns the best state on the data register together with
/// its training summary.
fn load_and_read<T: Real>(
    data_state_of: impl Fn(&StateVector<T>) -> Result<StateVector<T>>,
    enc: &crate::encoding::TargetEncoding<T>,
    spec: &AnsatzSpec,
    train: &TrainConfig,
    kernel: &KernelConfig<T>,
    split: crate::finance::RegisterSplit,
    qsvd: &QsvdConfig,
    qsvd_seed: u64,
) -> Result<(ChainResult<T>, StateVector<T>)> {
    let records = train_trials(enc, spec, train, kernel)?;
    let converged_trials = records.iter().filter(|r| r.final_cost().meets(T::of(0.01))).count();
    let best = select_best_trial(&records)?;
    let loaded = run_ansatz(spec, best.params)?;
    let data = data_state_of(&loaded)?;
    let (n_s, n_t) = (split.stock_qubits, split.time_qubits);
    let mut rng = rng_for(qsvd_seed, 0);
    let run = train_qsvd_trials(&data, n_s, n_t, qsvd, &mut rng)?;
    let spectrum = extract_schmidt_spectrum(&run.pair.apply(&data)?, n_s, n_t, T::of(qsvd.spectrum_threshold))?;
    let chain = ChainResult {
        entropy: spectrum.entropy()?,
        spectrum: spectrum.probabilities(),
        schmidt_cost: run.final_cost(),
        best_trial: best.record.trial,
        best_iteration: best.iteration,
        l: best.cost.l,
        l1: best.cost.l1,
        l2: best.cost.l2,
        converged_trials,
        cost_curve: best.record.costs.iter().map(|c| c.l).collect(),
    };
    Ok((chain, loaded))
}

fn run_term<T: Real>(index: usize, window: &MarketWindow<T>, cfg: &PipelineConfig) -> TermRecord<T> {
    let mut rec = TermRecord {
        term: window.term.clone(),
        exact: None,
        exact_spectrum: Vec::new(),
        aae: None,
        overlap: None,
        success_probability: None,
        naive: None,
        errors: Vec::new(),
    };
    match correlation_spectrum(&window.coefficients.correlation) {
        Ok(ev) => {
            rec.exact = Some(ev.iter().map(|&l| -l * l.ln()).sum());
            rec.exact_spectrum = ev;
        }
        Err(e) => rec.errors.push(format!("exact: {e}")),
    }
    let dv = match build_data_vector(&window.coefficients.a) {
        Ok(dv) => dv,
        Err(e) => {
            rec.errors.push(format!("data vector: {e}"));
            return rec;
        }
    };
    let kernel = kernel_as::<T>(&cfg.kernel);

    let aae = (|| {
        let spec = AnsatzSpec::all_y(dv.encoding.n_qubits(), cfg.layers)?;
        let train = TrainConfig {
            seed: derive_seed(cfg.seed, index, Purpose::Loader),
            objective: Objective::Amplitude,
            ..cfg.train.clone()
        };
        let with_ancilla = dv.encoding.d_bar.is_some();
        let read = |s: &StateVector<T>| if with_ancilla { Ok(post_select(s)?.data_state) } else { Ok(s.clone()) };
        let qseed = derive_seed(cfg.seed, index, Purpose::Schmidt);
        let (chain, loaded) = load_and_read(read, &dv.encoding, &spec, &train, &kernel, dv.split, &cfg.qsvd, qseed)?;
        let (o, p) = if with_ancilla {
            (overlap(&loaded, &dv.encoding.d)?, post_select(&loaded)?.success_probability)
        } else {
            let d = StateVector::from_real(&dv.encoding.d)?;
            (loaded.inner(&d)?.norm(), T::one())
        };
        Ok::<_, Error>((chain, o, p))
    })();
    match aae {
        Ok((chain, o, p)) => {
            rec.aae = Some(chain);
            rec.overlap = Some(o);
            rec.success_probability = Some(p);
        }
        Err(e) => rec.errors.push(format!("aae: {e}")),
    }

    if cfg.baseline {
        let naive = (|| {
            let spec = AnsatzSpec::all_y(dv.encoding.data_qubits(), cfg.layers)?;
            let train = TrainConfig {
                seed: derive_seed(cfg.seed, index, Purpose::Baseline),
                objective: Objective::MagnitudeOnly,
                ..cfg.train.clone()
            };
            let qseed = derive_seed(cfg.seed, index, Purpose::BaselineSchmidt);
            let read = |s: &StateVector<T>| Ok(s.clone());
            load_and_read(read, &dv.encoding, &spec, &train, &kernel, dv.split, &cfg.qsvd, qseed).map(|(c, _)| c)
        })();
        match naive {
            Ok(chain) => rec.naive = Some(chain),
            Err(e) => rec.errors.push(format!("naive: {e}")),
        }
    }
    rec
}

/// Runs every sliding term in parallel. Failures inside a term are recorded
/// on that term; only malformed input or configuration aborts the run.
pub fn run_entropy_pipeline<T: Real>(series: &StockSeries<T>, cfg: &PipelineConfig) -> Result<EntropyReport<T>> {
    cfg.train.validate()?;
    cfg.kernel.validate()?;
    if cfg.layers == 0 {
        return Err(Error::Config("layers must be at least 1".into()));
    }
    let windows = market_windows(series, cfg.window)?;
    let terms = windows
        .into_par_iter()
        .enumerate()
        .map(|(k, (term, w))| match w {
            Ok(w) => run_term(k, &w, cfg),
            Err(e) => TermRecord {
                term,
                exact: None,
                exact_spectrum: Vec::new(),
                aae: None,
                overlap: None,
                success_probability: None,
                naive: None,
                errors: vec![e.to_string()],
            },
        })
        .collect();
    Ok(EntropyReport { config: cfg.clone(), symbols: series.symbols.clone(), terms })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::finance::load_prices;

    fn quick() -> PipelineConfig {
        PipelineConfig {
            layers: 2,
            train: TrainConfig { iterations: 3, n_trials: 2, n_shot: 20, ..TrainConfig::default() },
            qsvd: QsvdConfig { iterations: 3, n_layers: 1, n_trials: 1, ..QsvdConfig::default() },
            ..PipelineConfig::default()
        }
    }

    #[test]
    fn report_shape_and_determinism() {
        let series = load_prices::<f64>(include_str!("../data/table2.csv").as_bytes()).unwrap();
        let cfg = quick();
        let a = run_entropy_pipeline(&series, &cfg).unwrap();
        assert_eq!(a.terms.len(), 8);
        assert_eq!(a.terms[0].term, "Aug 08");
        assert_eq!(a.terms[7].term, "Mar 09");
        assert!(a.terms.iter().all(|t| t.exact.is_some()));
        let b = run_entropy_pipeline(&series, &cfg).unwrap();
        assert_eq!(a.to_json().unwrap(), b.to_json().unwrap());
        let csv = a.to_csv().unwrap();
        assert_eq!(csv.lines().next().unwrap(), "term,exact,aae,naive,overlap,L1,L2");
        assert_eq!(csv.lines().count(), 9);
    }

    #[test]
    fn degenerate_window_is_recorded_and_skipped() {
        let text = "Symbol,a,b,c,d,e,f\nX,1,1,1,1,2,3\nY,1,2,1,2,1,2\n";
        let series = load_prices::<f64>(text.as_bytes()).unwrap();
        let cfg = PipelineConfig { window: 4, baseline: false, ..quick() };
        let r = run_entropy_pipeline(&series, &cfg).unwrap();
        assert_eq!(r.terms.len(), 3);
        assert!(r.terms[0].errors[0].contains('X'), "{:?}", r.terms[0].errors);
        assert!(r.terms[0].exact.is_none());
        assert!(r.terms[1].exact.is_some());
    }
}
