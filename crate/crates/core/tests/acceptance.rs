//! Acceptance run: one PASS/FAIL line per criterion.
//!
//! The end-to-end entropy check (criterion 8) takes minutes and only runs
//! with `AAE_FULL=1`; otherwise it is reported as SKIP.

use std::time::Instant;

use aae_core::encoding::{fwht, Case, TargetEncoding};
use aae_core::finance::{build_data_vector, exact_svd_entropy, load_prices, market_windows, StockSeries};
use aae_core::loader_post::{align_sign, amplitude_amplify, marked_probability, overlap, post_select, HouseholderLoader};
use aae_core::mmd_train::{
    exact_cost, mmd_gradient, state_cost, train_trials, GradientMode, KernelConfig, Objective, TrainConfig, TrainingTarget,
};
use aae_core::pipeline::{run_entropy_pipeline, PipelineConfig};
use aae_core::qsvd::{extract_schmidt_spectrum, svd_cost, svd_cost_gradient, train_qsvd_trials, QsvdConfig, SvdAnsatzPair, SvdCostMode};
use aae_core::simulator::{rng_for, run_ansatz, AnsatzSpec, ParamVector, SimRng, StateVector};
use rand::Rng;
use rayon::prelude::*;

const FWHT_TOL: f64 = 1e-12;
const FD_STEP: f64 = 1e-5;
const FD_TOL: f64 = 1e-6;
const SIGN_GAP: f64 = 1e-10;
const POST_PROB_TOL: f64 = 1e-12;
const POST_STATE_TOL: f64 = 1e-10;
const AMPLIFY_TOL: f64 = 1e-9;
const CONVERGED: f64 = 0.01;
const MIN_OVERLAP: f64 = 0.90;
const TRAINING_RERUNS: u64 = 3;
const ENTROPY_BAND: f64 = 0.1;
const PIPELINE_REL_TOL: f64 = 0.10;
const QSVD_COST_TOL: f64 = 0.01;
const QSVD_SPECTRUM_TOL: f64 = 0.02;
const SIGN_FLIP_MIN_L: f64 = 0.01;
const FULL_SEED: u64 = 7;

const TABLE2: &str = include_str!("../data/table2.csv");

struct Outcome {
    passed: Option<bool>,
    detail: String,
}

fn pass_if(ok: bool, detail: String) -> Outcome {
    Outcome { passed: Some(ok), detail }
}

// ---------------------------------------------------------------- oracles

/// `H^{(x)n} v` by the explicit sum over `(-1)^{j.k}`.
fn dense_hadamard(v: &[f64]) -> Vec<f64> {
    let s = 1.0 / (v.len() as f64).sqrt();
    (0..v.len())
        .map(|j| s * v.iter().enumerate().map(|(k, &x)| if (j & k).count_ones() % 2 == 0 { x } else { -x }).sum::<f64>())
        .collect()
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn unit(v: Vec<f64>) -> Vec<f64> {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.into_iter().map(|x| x / n).collect()
}

fn random_mixed(len: usize, rng: &mut SimRng) -> Vec<f64> {
    loop {
        let v = unit((0..len).map(|_| rng.gen_range(-1.0..1.0)).collect());
        if v.iter().any(|&x| x > 1e-3) && v.iter().any(|&x| x < -1e-3) {
            return v;
        }
    }
}

/// Sign-extended state built from the layout rule directly: slot `2j` holds
/// non-negative entries, slot `2j + 1` holds the magnitude of negative ones.
fn injected_psi_bar(d: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; 2 * d.len()];
    for (j, &x) in d.iter().enumerate() {
        if x >= 0.0 {
            out[2 * j] = x;
        } else {
            out[2 * j + 1] = -x;
        }
    }
    out
}

/// Windowed correlation matrices rebuilt from the prices, one per term.
fn oracle_correlations(prices: &StockSeries<f64>, window: usize) -> Vec<(String, nalgebra::DMatrix<f64>)> {
    let n_s = prices.symbols.len();
    let t_len = window - 1;
    (0..=prices.dates.len() - window)
        .map(|k| {
            let mut a = nalgebra::DMatrix::<f64>::zeros(n_s, t_len);
            for j in 0..n_s {
                let r: Vec<f64> = (0..t_len)
                    .map(|t| (prices.prices.get(j, k + t + 1) / prices.prices.get(j, k + t)).ln())
                    .collect();
                let mean = r.iter().sum::<f64>() / t_len as f64;
                let sd = (r.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / t_len as f64).sqrt();
                for t in 0..t_len {
                    a[(j, t)] = (r[t] - mean) / (sd * ((n_s * t_len) as f64).sqrt());
                }
            }
            (prices.dates[k + window - 1].clone(), &a * a.transpose())
        })
        .collect()
}

fn descending_eigenvalues(c: &nalgebra::DMatrix<f64>) -> Vec<f64> {
    let mut ev: Vec<f64> = c.clone().symmetric_eigen().eigenvalues.iter().copied().collect();
    ev.sort_by(|a, b| b.partial_cmp(a).unwrap());
    ev
}

fn oracle_entropy(c: &nalgebra::DMatrix<f64>) -> f64 {
    descending_eigenvalues(c).into_iter().filter(|&l| l > 1e-12).map(|l| -l * l.ln()).sum()
}

/// `sum_jk (q-p)_j (q-p)_k exp(-(j-k)^2 / (2 sigma^2))`
fn oracle_mmd(q: &[f64], p: &[f64], sigma_sq: f64) -> f64 {
    let mut s = 0.0;
    for j in 0..q.len() {
        for k in 0..q.len() {
            let dj = j as f64 - k as f64;
            s += (q[j] - p[j]) * (q[k] - p[k]) * (-(dj * dj) / (2.0 * sigma_sq)).exp();
        }
    }
    s
}

fn series() -> StockSeries<f64> {
    load_prices(TABLE2.as_bytes()).expect("bundled fixture parses")
}

// ---------------------------------------------------------------- criteria

fn c1_fwht() -> Outcome {
    let mut rng = rng_for(101, 0);
    let lens: Vec<usize> = (0..1000).map(|_| 1usize << rng.gen_range(1..=12)).collect();
    let inputs: Vec<Vec<f64>> = lens.iter().map(|&n| (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
    let worst = inputs
        .par_iter()
        .map(|v| {
            let fast = fwht(v).unwrap();
            max_diff(&fast, &dense_hadamard(v)).max(max_diff(&fwht(&fast).unwrap(), v))
        })
        .reduce(|| 0.0, f64::max);
    pass_if(worst <= FWHT_TOL, format!("1000 vectors, lengths 2..4096, worst deviation {worst:.2e} (tol {FWHT_TOL:e})"))
}

fn c2_gradients() -> Outcome {
    let mut rng = rng_for(102, 0);
    let kernel = KernelConfig::<f64>::default();
    let mut worst_mmd = 0.0f64;
    let mut worst_svd = 0.0f64;
    let mut worst_cost = 0.0f64;
    for c in 0..50 {
        // Loader gradient on 2 or 3 circuit qubits.
        let objective = if c % 2 == 0 { Objective::Amplitude } else { Objective::MagnitudeOnly };
        let (data_len, circuit_qubits) = match (objective, c % 4 < 2) {
            (Objective::Amplitude, true) => (2, 2),
            (Objective::Amplitude, false) => (4, 3),
            (Objective::MagnitudeOnly, true) => (4, 2),
            (Objective::MagnitudeOnly, false) => (8, 3),
        };
        let enc = TargetEncoding::new(&random_mixed(data_len, &mut rng)).unwrap();
        let target = TrainingTarget::new(&enc, objective);
        assert_eq!(target.n_qubits(), circuit_qubits);
        let spec = AnsatzSpec::random_axes(circuit_qubits, rng.gen_range(1..=3), &mut rng).unwrap();
        let params = ParamVector::<f64>::random(spec.n_params(), &mut rng);
        let g = mmd_gradient(&spec, &params, &target, &kernel, GradientMode::Exact, 1, &mut rng).unwrap();
        let cost = |p: &[f64]| exact_cost(&spec, p, &target, &kernel).unwrap().l;
        for r in 0..params.len() {
            let (mut a, mut b) = (params.to_vec(), params.to_vec());
            a[r] += FD_STEP;
            b[r] -= FD_STEP;
            worst_mmd = worst_mmd.max((g[r] - (cost(&a) - cost(&b)) / (2.0 * FD_STEP)).abs());
        }
        // The cost itself against the explicit double sum.
        let state = run_ansatz(&spec, &params).unwrap();
        let l1 = oracle_mmd(&state.probabilities(), &target.p, kernel.sigma_sq);
        let lib = exact_cost(&spec, &params, &target, &kernel).unwrap();
        worst_cost = worst_cost.max((lib.l1 - l1).abs());

        // Schmidt-stage gradient on 2 or 3 qubits.
        let (n_s, n_t) = [(1, 1), (1, 2), (2, 1)][c % 3];
        let pair = SvdAnsatzPair::<f64>::random(n_s, n_t, rng.gen_range(1..=3), &mut rng).unwrap();
        let data = StateVector::from_real(&unit((0..1 << (n_s + n_t)).map(|_| rng.gen_range(-1.0..1.0)).collect())).unwrap();
        let flat = pair.flat_params();
        let g = svd_cost_gradient(&data, &pair, &flat, SvdCostMode::Exact, &mut rng).unwrap();
        let cost = |p: &[f64]| svd_cost(&pair.apply_with(&data, p).unwrap(), n_s, n_t).unwrap();
        for r in 0..flat.len() {
            let (mut a, mut b) = (flat.clone(), flat.clone());
            a[r] += FD_STEP;
            b[r] -= FD_STEP;
            worst_svd = worst_svd.max((g[r] - (cost(&a) - cost(&b)) / (2.0 * FD_STEP)).abs());
        }
    }
    let ok = worst_mmd <= FD_TOL && worst_svd <= FD_TOL && worst_cost <= 1e-12;
    pass_if(
        ok,
        format!("50 configs, max |grad - fd|: mmd {worst_mmd:.2e}, qsvd {worst_svd:.2e} (tol {FD_TOL:e}); mmd cost vs double sum {worst_cost:.1e}"),
    )
}

fn c3_sign_patterns() -> Outcome {
    let mut rng = rng_for(103, 0);
    let mut closest_other = f64::INFINITY;
    let mut worst_own = 0.0f64;
    let mut cases = 0;
    for &len in &[4usize, 8] {
        for _ in 0..20 {
            let d = unit((0..len).map(|_| rng.gen_range(0.05..1.0)).collect());
            let enc = TargetEncoding::from_unit(d.clone()).unwrap();
            assert_eq!(enc.case, Case::Case1);
            cases += 1;
            for mask in 0u32..1 << len {
                let a: Vec<f64> = d.iter().enumerate().map(|(j, &x)| if mask >> j & 1 == 1 { -x } else { x }).collect();
                // Computational-basis condition holds for every pattern by construction.
                let p_gap = max_diff(&a.iter().map(|x| x * x).collect::<Vec<_>>(), &enc.p);
                let ph: Vec<f64> = dense_hadamard(&a).iter().map(|x| x * x).collect();
                let h_gap = max_diff(&ph, &enc.p_hadamard);
                if mask == 0 || mask == (1 << len) - 1 {
                    worst_own = worst_own.max(p_gap).max(h_gap);
                } else {
                    closest_other = closest_other.min(h_gap);
                }
            }
        }
    }
    pass_if(
        worst_own <= 1e-12 && closest_other > SIGN_GAP,
        format!("{cases} vectors: +-d mismatch {worst_own:.1e}, smallest mismatch of any other pattern {closest_other:.2e} (> {SIGN_GAP:e})"),
    )
}

fn exact_case2_targets() -> Vec<Vec<f64>> {
    let mut rng = rng_for(104, 0);
    (0..10).map(|i| random_mixed(1 << (1 + i % 4), &mut rng)).collect()
}

fn c4_post_selection() -> Outcome {
    let mut worst_p = 0.0f64;
    let mut worst_state = 0.0f64;
    for d in exact_case2_targets() {
        let psi = StateVector::from_real(&injected_psi_bar(&d)).unwrap();
        let mut r = post_select(&psi).unwrap();
        worst_p = worst_p.max((r.success_probability - 0.5).abs());
        align_sign(&mut r.data_state, &d);
        worst_state = worst_state.max(max_diff(&r.data_state.real_parts(), &d)).max(r.data_state.max_imag());
    }
    pass_if(
        worst_p <= POST_PROB_TOL && worst_state <= POST_STATE_TOL,
        format!("10 targets: |P - 1/2| {worst_p:.1e} (tol {POST_PROB_TOL:e}), state error {worst_state:.1e} (tol {POST_STATE_TOL:e})"),
    )
}

fn c5_amplification() -> Outcome {
    let mut worst = 0.0f64;
    let mut before = 0.0f64;
    for d in exact_case2_targets() {
        let loader = HouseholderLoader::new(&injected_psi_bar(&d)).unwrap();
        let amp = aae_core::loader_post::Amplifier::new(&loader);
        before = before.max((marked_probability(&amp.prepare().unwrap()) - 0.25).abs());
        worst = worst.max((marked_probability(&amplitude_amplify(&loader).unwrap()) - 1.0).abs());
    }
    pass_if(worst <= AMPLIFY_TOL, format!("10 loaders: |P(11) - 1| {worst:.1e} (tol {AMPLIFY_TOL:e}); before Q |P - 1/4| {before:.1e}"))
}

fn c6_training() -> Outcome {
    let s = series();
    let window = market_windows(&s, 5).unwrap().remove(0);
    assert_eq!(window.0, "Aug 08");
    let dv = build_data_vector(&window.1.unwrap().coefficients.a).unwrap();
    let spec = AnsatzSpec::all_y(dv.encoding.n_qubits(), 8).unwrap();
    assert_eq!(spec.n_qubits, 5);
    let mut notes = Vec::new();
    for attempt in 0..TRAINING_RERUNS {
        let cfg = TrainConfig { seed: attempt, ..TrainConfig::default() };
        let records = train_trials(&dv.encoding, &spec, &cfg, &KernelConfig::default()).unwrap();
        let converged: Vec<f64> = records
            .iter()
            .filter(|r| {
                let c = r.final_cost();
                c.l1 < CONVERGED && c.l2 < CONVERGED
            })
            .map(|r| overlap(&run_ansatz(&spec, &r.final_params).unwrap(), &dv.encoding.d).unwrap())
            .collect();
        let min_o = converged.iter().copied().fold(f64::INFINITY, f64::min);
        let mean_o = converged.iter().sum::<f64>() / converged.len().max(1) as f64;
        let ok = !converged.is_empty() && min_o >= MIN_OVERLAP;
        notes.push(format!("seed {attempt}: {}/10 converged, O min {min_o:.3} mean {mean_o:.3}", converged.len()));
        if ok {
            return pass_if(true, notes.join("; "));
        }
    }
    pass_if(false, format!("{} (need >= 1 trial with L1, L2 < {CONVERGED} and all such O >= {MIN_OVERLAP})", notes.join("; ")))
}

fn c7_entropy_pattern() -> Outcome {
    let s = series();
    let oracle = oracle_correlations(&s, 5);
    let entropies: Vec<f64> = oracle.iter().map(|(_, c)| oracle_entropy(c)).collect();
    let lib: Vec<f64> = market_windows(&s, 5)
        .unwrap()
        .into_iter()
        .map(|(_, w)| exact_svd_entropy(&w.unwrap().coefficients.correlation).unwrap())
        .collect();
    let agree = max_diff(&entropies, &lib);
    let labels: Vec<&str> = oracle.iter().map(|(t, _)| t.as_str()).collect();
    let at = |label: &str| entropies[labels.iter().position(|&t| t == label).unwrap()];
    let crisis_min = ["Oct 08", "Nov 08", "Dec 08", "Jan 09", "Feb 09"].iter().map(|t| at(t)).fold(f64::INFINITY, f64::min);
    let (aug, mar) = (at("Aug 08"), at("Mar 09"));
    let ok = entropies.len() == 8
        && (aug - 0.9).abs() <= ENTROPY_BAND
        && (crisis_min - 0.7).abs() <= ENTROPY_BAND
        && mar > crisis_min
        && agree <= 1e-10;
    pass_if(
        ok,
        format!("Aug 08 {aug:.4}, crisis min {crisis_min:.4}, Mar 09 {mar:.4}; library vs oracle {agree:.1e}"),
    )
}

fn c8_pipeline() -> Outcome {
    if std::env::var("AAE_FULL").map_or(true, |v| v != "1") {
        return Outcome { passed: None, detail: "end-to-end run skipped (set AAE_FULL=1)".into() };
    }
    let s = series();
    let oracle = oracle_correlations(&s, 5);
    let cfg = PipelineConfig { seed: FULL_SEED, ..PipelineConfig::default() };
    let report = run_entropy_pipeline(&s, &cfg).unwrap();
    let mut worst: f64 = 0.0;
    let mut parts = Vec::new();
    let mut ok = report.terms.len() == 8;
    for (t, (label, c)) in report.terms.iter().zip(&oracle) {
        assert_eq!(&t.term, label);
        let exact = oracle_entropy(c);
        match &t.aae {
            Some(chain) => {
                let rel = (chain.entropy - exact).abs() / exact;
                worst = worst.max(rel);
                ok &= rel <= PIPELINE_REL_TOL;
                parts.push(format!("{label} {:.1}%", 100.0 * rel));
            }
            None => {
                ok = false;
                parts.push(format!("{label} failed {:?}", t.errors));
            }
        }
    }
    pass_if(ok, format!("seed {FULL_SEED}, worst relative error {:.1}% (tol 10%): {}", 100.0 * worst, parts.join(", ")))
}

fn c9_qsvd_exact() -> Outcome {
    let s = series();
    let oracle = oracle_correlations(&s, 5);
    let windows = market_windows(&s, 5).unwrap();
    let cfg = PipelineConfig::default().qsvd;
    let results: Vec<(f64, f64)> = windows
        .into_par_iter()
        .zip(oracle.par_iter())
        .enumerate()
        .map(|(k, ((_, w), (_, c)))| {
            let dv = build_data_vector(&w.unwrap().coefficients.a).unwrap();
            let data = StateVector::from_real(&dv.encoding.d).unwrap();
            let (n_s, n_t) = (dv.split.stock_qubits, dv.split.time_qubits);
            let mut rng = rng_for(109, k as u64);
            let run = train_qsvd_trials(&data, n_s, n_t, &cfg, &mut rng).unwrap();
            let spectrum = extract_schmidt_spectrum(&run.pair.apply(&data).unwrap(), n_s, n_t, cfg.spectrum_threshold).unwrap();
            let mut got = spectrum.probabilities();
            got.sort_by(|a, b| b.partial_cmp(a).unwrap());
            let want = descending_eigenvalues(c);
            got.resize(want.len().max(got.len()), 0.0);
            let mut want = want;
            want.resize(got.len(), 0.0);
            (run.final_cost(), max_diff(&got, &want))
        })
        .collect();
    let worst_cost = results.iter().map(|r| r.0).fold(0.0, f64::max);
    let worst_gap = results.iter().map(|r| r.1).fold(0.0, f64::max);
    pass_if(
        worst_cost < QSVD_COST_TOL && worst_gap <= QSVD_SPECTRUM_TOL,
        format!("8 exact data states: worst cost {worst_cost:.4} (< {QSVD_COST_TOL}), worst spectrum gap {worst_gap:.4} (<= {QSVD_SPECTRUM_TOL})"),
    )
}

fn c10_sign_blindness() -> Outcome {
    let s = series();
    let kernel = KernelConfig::<f64>::default();
    let (_, w) = market_windows(&s, 5).unwrap().remove(0);
    let a = w.unwrap().coefficients.a;
    let dv = build_data_vector(&a).unwrap();
    let d = &dv.encoding.d;
    let naive = TrainingTarget::new(&dv.encoding, Objective::MagnitudeOnly);
    let aae = TrainingTarget::new(&dv.encoding, Objective::Amplitude);
    // Flip the returns of the first stock (indices 0..4 of the data register).
    let flipped: Vec<f64> = d.iter().enumerate().map(|(i, &x)| if i < 4 { -x } else { x }).collect();
    let naive_cost = state_cost(&StateVector::from_real(&flipped).unwrap(), &naive, &kernel).unwrap().l;
    let aae_cost = state_cost(&StateVector::from_real(&injected_psi_bar(&flipped)).unwrap(), &aae, &kernel).unwrap().l;
    let exact_cost = state_cost(&StateVector::from_real(&injected_psi_bar(d)).unwrap(), &aae, &kernel).unwrap().l;
    pass_if(
        naive_cost == 0.0 && aae_cost > SIGN_FLIP_MIN_L,
        format!("first stock sign-flipped: naive cost {naive_cost:e}, AAE cost L {aae_cost:.4} (> {SIGN_FLIP_MIN_L}); unflipped L {exact_cost:.1e}"),
    )
}

fn c11_determinism() -> Outcome {
    let s = series();
    let cfg = PipelineConfig {
        seed: 11,
        layers: 4,
        train: TrainConfig { iterations: 30, n_trials: 3, ..TrainConfig::default() },
        qsvd: QsvdConfig { iterations: 50, n_trials: 1, ..QsvdConfig::default() },
        ..PipelineConfig::default()
    };
    let a = run_entropy_pipeline(&s, &cfg).unwrap();
    let b = run_entropy_pipeline(&s, &cfg).unwrap();
    let (ja, jb) = (a.to_json().unwrap(), b.to_json().unwrap());
    let (ca, cb) = (a.to_csv().unwrap(), b.to_csv().unwrap());
    pass_if(
        ja.as_bytes() == jb.as_bytes() && ca.as_bytes() == cb.as_bytes(),
        format!("two pipeline runs, seed 11: JSON {} bytes, CSV {} bytes, identical", ja.len(), ca.len()),
    )
}

fn main() {
    let criteria: [(u32, &str, fn() -> Outcome); 11] = [
        (1, "FWHT oracle", c1_fwht),
        (2, "gradient fidelity", c2_gradients),
        (3, "sign patterns by brute force", c3_sign_patterns),
        (4, "post-selection", c4_post_selection),
        (5, "amplitude amplification", c5_amplification),
        (6, "training reproduction", c6_training),
        (7, "classical entropy pattern", c7_entropy_pattern),
        (8, "end-to-end pipeline", c8_pipeline),
        (9, "qSVD spectrum on exact input", c9_qsvd_exact),
        (10, "sign-blindness separation", c10_sign_blindness),
        (11, "determinism", c11_determinism),
    ];
    let mut failed = Vec::new();
    for (n, name, f) in criteria {
        let t = Instant::now();
        let o = f();
        let tag = match o.passed {
            Some(true) => "PASS",
            Some(false) => {
                failed.push(n);
                "FAIL"
            }
            None => "SKIP",
        };
        println!("[{tag}] criterion {n:>2} {name}: {} ({:.1}s)", o.detail, t.elapsed().as_secs_f64());
    }
    if !failed.is_empty() {
        println!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
