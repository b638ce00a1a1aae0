use std::f64::consts::FRAC_PI_2;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::cost::TrainingTarget;
use super::kernel::{KernelConfig, KernelTable};
use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::simulator::{run_ansatz, AnsatzSpec, ParamVector, Sampler, StateVector};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GradientMode {
    /// Every expectation is estimated from measurement samples.
    Sampled,
    /// Every expectation uses the full output distribution.
    Exact,
}

/// Copy of `params` with entry `r` shifted by `sign * pi/2`.
pub fn shifted_params<T: Real>(params: &[T], r: usize, sign: i8) -> Result<ParamVector<T>> {
    if r >= params.len() {
        return Err(Error::IndexOutOfRange { index: r, len: params.len() });
    }
    let mut out = params.to_vec();
    let shift = T::of(FRAC_PI_2);
    if sign >= 0 {
        out[r] += shift;
    } else {
        out[r] -= shift;
    }
    Ok(ParamVector(out))
}

struct Distributions<T> {
    comp: Vec<T>,
    had: Option<Vec<T>>,
}

fn distributions<T: Real>(state: &StateVector<T>, with_hadamard: bool) -> Distributions<T> {
    let comp = state.probabilities();
    let had = with_hadamard.then(|| {
        let mut h = state.clone();
        h.hadamard_all();
        h.probabilities()
    });
    Distributions { comp, had }
}

/// Parameter-shift gradient of the MMD training cost.
///
/// For one basis the shifted expectations combine into
/// `E[k(q+, q)] - E[k(q-, q)] - E[k(q+, p)] + E[k(q-, p)]`, which is exactly
/// `dL1/dtheta_r`. The Hadamard basis contributes the same four terms and the
/// two bases are averaged, matching `L = (L1 + L2) / 2`.
pub fn mmd_gradient<T: Real>(
    spec: &AnsatzSpec,
    params: &[T],
    target: &TrainingTarget<T>,
    kernel: &KernelConfig<T>,
    mode: GradientMode,
    n_shot: usize,
    rng: &mut impl Rng,
) -> Result<Vec<T>> {
    if spec.n_qubits != target.n_qubits() {
        return Err(Error::Dimension { expected: target.n_qubits(), got: spec.n_qubits });
    }
    let table = KernelTable::new(target.p.len(), kernel);
    let with_h = target.p_hadamard.is_some();
    let base = distributions(&run_ansatz(spec, params)?, with_h);
    let weight = target.basis_weight();

    match mode {
        GradientMode::Exact => {
            // K (q - p) per basis, shared by every parameter.
            let residual = |q: &[T], p: &[T]| {
                let diff: Vec<T> = q.iter().zip(p).map(|(&a, &b)| a - b).collect();
                table.apply(&diff)
            };
            let k_comp = residual(&base.comp, &target.p);
            let k_had = match (&base.had, &target.p_hadamard) {
                (Some(q), Some(p)) => Some(residual(q, p)),
                _ => None,
            };
            let dot = |a: &[T], b: &[T], c: &[T]| -> T { a.iter().zip(b).zip(c).map(|((&x, &y), &z)| (x - y) * z).sum() };
            (0..params.len())
                .map(|r| {
                    let plus = distributions(&run_ansatz(spec, &shifted_params(params, r, 1)?)?, with_h);
                    let minus = distributions(&run_ansatz(spec, &shifted_params(params, r, -1)?)?, with_h);
                    let mut g = dot(&plus.comp, &minus.comp, &k_comp);
                    if let (Some(hp), Some(hm), Some(kh)) = (&plus.had, &minus.had, &k_had) {
                        g += dot(hp, hm, kh);
                    }
                    Ok(weight * g)
                })
                .collect()
        }
        GradientMode::Sampled => {
            if n_shot == 0 {
                return Err(Error::Config("n_shot must be at least 1".into()));
            }
            let s_q = Sampler::new_unchecked(&base.comp);
            let s_p = Sampler::new_unchecked(&target.p);
            let s_qh = base.had.as_ref().map(|d| Sampler::new_unchecked(d));
            let s_ph = target.p_hadamard.as_ref().map(|d| Sampler::new_unchecked(d));
            let term = |a: &Sampler, b: &Sampler, rng: &mut dyn rand::RngCore| -> T {
                let xs = a.sample_n(n_shot, rng);
                let ys = b.sample_n(n_shot, rng);
                table.paired_mean(&xs, &ys)
            };
            let mut grad = Vec::with_capacity(params.len());
            for r in 0..params.len() {
                let plus = distributions(&run_ansatz(spec, &shifted_params(params, r, 1)?)?, with_h);
                let minus = distributions(&run_ansatz(spec, &shifted_params(params, r, -1)?)?, with_h);
                let sp = Sampler::new_unchecked(&plus.comp);
                let sm = Sampler::new_unchecked(&minus.comp);
                let mut g = term(&sp, &s_q, rng) - term(&sm, &s_q, rng) - term(&sp, &s_p, rng) + term(&sm, &s_p, rng);
                if let (Some(hp), Some(hm), Some(sqh), Some(sph)) = (&plus.had, &minus.had, &s_qh, &s_ph) {
                    let shp = Sampler::new_unchecked(hp);
                    let shm = Sampler::new_unchecked(hm);
                    g += term(&shp, sqh, rng) - term(&shm, sqh, rng) - term(&shp, sph, rng) + term(&shm, sph, rng);
                }
                grad.push(weight * g);
            }
            Ok(grad)
        }
    }
}
