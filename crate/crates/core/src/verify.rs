//! Self-checks run by `aae verify`: each suite compares a fast routine with a
//! slow, obviously correct reference on seeded random inputs.

use rand::Rng;
use serde::Serialize;

use crate::encoding::{fwht, TargetEncoding};
use crate::error::Result;
use crate::loader_post::{align_sign, amplitude_amplify, marked_probability, post_select, HouseholderLoader};
use crate::mmd_train::{exact_cost, mmd_gradient, GradientMode, KernelConfig, Objective, TrainingTarget};
use crate::qsvd::{svd_cost, svd_cost_gradient, SvdAnsatzPair, SvdCostMode};
use crate::simulator::{rng_for, AnsatzSpec, ParamVector, SimRng, StateVector};

#[derive(Clone, Debug, Serialize)]
pub struct SuiteResult {
    pub name: &'static str,
    pub cases: usize,
    /// Largest deviation seen.
    pub worst: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl SuiteResult {
    fn new(name: &'static str, cases: usize, worst: f64, tolerance: f64) -> Self {
        Self { name, cases, worst, tolerance, passed: worst <= tolerance }
    }
}

fn random_unit(len: usize, rng: &mut SimRng) -> Vec<f64> {
    let v: Vec<f64> = (0..len).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.into_iter().map(|x| x / n).collect()
}

/// Mixed-sign unit vector of `len` entries.
pub fn random_case2(len: usize, rng: &mut SimRng) -> Vec<f64> {
    loop {
        let v = random_unit(len, rng);
        if v.iter().any(|&x| x > 1e-3) && v.iter().any(|&x| x < -1e-3) {
            return v;
        }
    }
}

/// `(H^{(x)n} v)_j = 2^{-n/2} sum_k (-1)^{popcount(j & k)} v_k`
pub fn dense_hadamard(v: &[f64]) -> Vec<f64> {
    let scale = 1.0 / (v.len() as f64).sqrt();
    (0..v.len())
        .map(|j| {
            v.iter()
                .enumerate()
                .map(|(k, &x)| if (j & k).count_ones() % 2 == 0 { x } else { -x })
                .sum::<f64>()
                * scale
        })
        .collect()
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

pub fn fwht_suite(cases: usize, seed: u64) -> Result<SuiteResult> {
    let mut rng = rng_for(seed, 1);
    let mut worst = 0.0f64;
    for _ in 0..cases {
        let len = 1usize << rng.gen_range(1..=9);
        let v: Vec<f64> = (0..len).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let fast = fwht(&v)?;
        worst = worst.max(max_abs_diff(&fast, &dense_hadamard(&v)));
        worst = worst.max(max_abs_diff(&fwht(&fast)?, &v));
    }
    Ok(SuiteResult::new("fwht vs dense Hadamard", cases, worst, 1e-12))
}

/// Central difference of `f` along coordinate `r`.
pub fn central_difference(f: impl Fn(&[f64]) -> Result<f64>, x: &[f64], r: usize, h: f64) -> Result<f64> {
    let mut xp = x.to_vec();
    let mut xm = x.to_vec();
    xp[r] += h;
    xm[r] -= h;
    Ok((f(&xp)? - f(&xm)?) / (2.0 * h))
}

pub fn gradient_suite(cases: usize, seed: u64) -> Result<SuiteResult> {
    let mut rng = rng_for(seed, 2);
    let kernel = KernelConfig::default();
    let h = 1e-5;
    let mut worst = 0.0f64;
    for c in 0..cases {
        let n = rng.gen_range(2..=3);
        let layers = rng.gen_range(1..=2);
        if c % 2 == 0 {
            let objective = if c % 4 == 0 { Objective::Amplitude } else { Objective::MagnitudeOnly };
            let enc = TargetEncoding::new(&random_unit(1 << n, &mut rng))?;
            let target = TrainingTarget::new(&enc, objective);
            let spec = AnsatzSpec::random_axes(target.n_qubits(), layers, &mut rng)?;
            let params = ParamVector::<f64>::random(spec.n_params(), &mut rng);
            let g = mmd_gradient(&spec, &params, &target, &kernel, GradientMode::Exact, 1, &mut rng)?;
            for r in 0..params.len() {
                let fd = central_difference(|p| Ok(exact_cost(&spec, p, &target, &kernel)?.l), &params, r, h)?;
                worst = worst.max((g[r] - fd).abs());
            }
        } else {
            let (n_s, n_t) = (rng.gen_range(1..=2), rng.gen_range(1..=2));
            let pair = SvdAnsatzPair::<f64>::random(n_s, n_t, layers, &mut rng)?;
            let data = StateVector::from_real(&random_unit(1 << (n_s + n_t), &mut rng))?;
            let flat = pair.flat_params();
            let g = svd_cost_gradient(&data, &pair, &flat, SvdCostMode::Exact, &mut rng)?;
            for r in 0..flat.len() {
                let fd = central_difference(|p| svd_cost(&pair.apply_with(&data, p)?, n_s, n_t), &flat, r, h)?;
                worst = worst.max((g[r] - fd).abs());
            }
        }
    }
    Ok(SuiteResult::new("parameter-shift vs finite difference", cases, worst, 1e-6))
}

/// Largest Hadamard-basis mismatch over sign patterns other than `+-d`; the
/// suite passes when every such pattern is separated by more than `gap`.
pub fn sign_pattern_suite(cases: usize, seed: u64) -> Result<SuiteResult> {
    let mut rng = rng_for(seed, 3);
    let gap = 1e-10;
    let mut closest = f64::INFINITY;
    let mut own_worst = 0.0f64;
    for c in 0..cases {
        let len = if c % 2 == 0 { 4 } else { 8 };
        let d: Vec<f64> = random_unit(len, &mut rng).into_iter().map(f64::abs).collect();
        let ph: Vec<f64> = fwht(&d)?.iter().map(|x| x * x).collect();
        for mask in 0..1u32 << len {
            let a: Vec<f64> = d.iter().enumerate().map(|(j, &x)| if mask >> j & 1 == 1 { -x } else { x }).collect();
            let qh: Vec<f64> = fwht(&a)?.iter().map(|x| x * x).collect();
            let mismatch = max_abs_diff(&qh, &ph);
            if mask == 0 || mask == (1 << len) - 1 {
                own_worst = own_worst.max(mismatch);
            } else {
                closest = closest.min(mismatch);
            }
        }
    }
    // Report the margin: own patterns must match, every other one must miss.
    let worst = if closest > gap { own_worst } else { f64::INFINITY };
    Ok(SuiteResult::new("sign patterns identified by both bases", cases, worst, 1e-12))
}

pub fn post_selection_suite(cases: usize, seed: u64) -> Result<SuiteResult> {
    let mut rng = rng_for(seed, 4);
    let mut worst = 0.0f64;
    for _ in 0..cases {
        let n = rng.gen_range(1..=4);
        let enc = TargetEncoding::from_unit(random_case2(1 << n, &mut rng))?;
        let psi = StateVector::from_real(enc.loaded_vector())?;
        let mut r = post_select(&psi)?;
        worst = worst.max((r.success_probability - 0.5).abs());
        align_sign(&mut r.data_state, &enc.d);
        worst = worst.max(max_abs_diff(&r.data_state.real_parts(), &enc.d)).max(r.data_state.max_imag());
    }
    Ok(SuiteResult::new("post-selection on exact loaders", cases, worst, 1e-10))
}

pub fn amplification_suite(cases: usize, seed: u64) -> Result<SuiteResult> {
    let mut rng = rng_for(seed, 5);
    let mut worst = 0.0f64;
    for _ in 0..cases {
        let n = rng.gen_range(1..=4);
        let enc = TargetEncoding::from_unit(random_case2(1 << n, &mut rng))?;
        let loader = HouseholderLoader::new(enc.loaded_vector())?;
        let s = amplitude_amplify(&loader)?;
        worst = worst.max((marked_probability(&s) - 1.0).abs());
    }
    Ok(SuiteResult::new("amplitude amplification to |11>", cases, worst, 1e-9))
}

/// All suites with their default sizes.
pub fn run_all(seed: u64) -> Result<Vec<SuiteResult>> {
    Ok(vec![
        fwht_suite(200, seed)?,
        gradient_suite(20, seed)?,
        sign_pattern_suite(20, seed)?,
        post_selection_suite(10, seed)?,
        amplification_suite(10, seed)?,
    ])
}
