use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Gaussian kernel `scale * exp(-(j - k)^2 / (2 sigma_sq))` over outcome indices.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Real"))]
pub struct KernelConfig<T: Real> {
    pub sigma_sq: T,
    pub scale: T,
}

impl<T: Real> Default for KernelConfig<T> {
    /// `exp(-(j - k)^2 / 0.25)`
    fn default() -> Self {
        Self { sigma_sq: T::of(0.125), scale: T::one() }
    }
}

impl<T: Real> KernelConfig<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma_sq > T::zero()) || !(self.scale > T::zero()) {
            return Err(Error::Config(format!(
                "kernel needs sigma_sq > 0 and scale > 0, got {} and {}",
                self.sigma_sq, self.scale
            )));
        }
        Ok(())
    }
}

pub fn kernel<T: Real>(j: usize, k: usize, cfg: &KernelConfig<T>) -> T {
    let dist = T::from_usize(j.abs_diff(k));
    cfg.scale * (-(dist * dist) / (T::of(2.0) * cfg.sigma_sq)).exp()
}

/// Kernel values indexed by `|j - k|` for outcomes `0..len`.
#[derive(Clone, Debug)]
pub struct KernelTable<T> {
    by_distance: Vec<T>,
}

impl<T: Real> KernelTable<T> {
    pub fn new(len: usize, cfg: &KernelConfig<T>) -> Self {
        Self { by_distance: (0..len.max(1)).map(|d| kernel(0, d, cfg)).collect() }
    }

    pub fn len(&self) -> usize {
        self.by_distance.len()
    }

    pub fn is_empty(&self) -> bool {
        self.by_distance.is_empty()
    }

    #[inline]
    pub fn get(&self, j: usize, k: usize) -> T {
        self.by_distance[j.abs_diff(k)]
    }

    /// `sum_{j,k} a_j kappa(j,k) b_k`
    pub fn bilinear(&self, a: &[T], b: &[T]) -> T {
        let mut total = T::zero();
        for (j, &aj) in a.iter().enumerate() {
            if aj == T::zero() {
                continue;
            }
            let mut row = T::zero();
            for (k, &bk) in b.iter().enumerate() {
                row += self.get(j, k) * bk;
            }
            total += aj * row;
        }
        total
    }

    /// `K v`
    pub fn apply(&self, v: &[T]) -> Vec<T> {
        (0..v.len())
            .map(|j| v.iter().enumerate().map(|(k, &x)| self.get(j, k) * x).sum())
            .collect()
    }

    /// Mean of `kappa(a_l, b_l)` over paired samples.
    pub fn paired_mean(&self, a: &[usize], b: &[usize]) -> T {
        let n = a.len().min(b.len());
        let total: T = a.iter().zip(b).map(|(&j, &k)| self.get(j, k)).sum();
        total / T::from_usize(n)
    }
}
