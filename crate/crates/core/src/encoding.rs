//! Training targets for amplitude encoding.
//!
//! A real vector `d` with a single sign is loaded directly. A mixed-sign
//! vector gets one extra (least significant) qubit: entry `d_j` moves to slot
//! `2j` when non-negative and `-d_j` to slot `2j + 1` otherwise, giving a
//! non-negative vector `d_bar` of twice the length. Training matches the
//! squared amplitudes in both the computational and the Hadamard basis.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Entries smaller than this in magnitude count as zero in sign tests.
pub const SIGN_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Case {
    /// All entries non-negative or all non-positive.
    Case1,
    /// Mixed signs; needs the sign ancilla.
    Case2,
}

/// Appends zeros up to the next power of two (at least 2).
pub fn pad_to_power_of_two<T: Real>(raw: &[T]) -> Vec<T> {
    let len = raw.len().next_power_of_two().max(2);
    let mut v = raw.to_vec();
    v.resize(len, T::zero());
    v
}

pub fn normalize<T: Real>(raw: &[T]) -> Result<Vec<T>> {
    if raw.is_empty() {
        return Err(Error::Empty("data vector"));
    }
    if !raw.len().is_power_of_two() {
        return Err(Error::NotPowerOfTwo(raw.len()));
    }
    let norm = raw.iter().map(|&x| x * x).sum::<T>().sqrt();
    if norm == T::zero() || !norm.is_finite() {
        return Err(Error::ZeroVector);
    }
    Ok(raw.iter().map(|&x| x / norm).collect())
}

pub fn classify_case<T: Real>(d: &[T]) -> Case {
    let tol = T::of(SIGN_TOLERANCE);
    let any_pos = d.iter().any(|&x| x > tol);
    let any_neg = d.iter().any(|&x| x < -tol);
    if any_pos && any_neg {
        Case::Case2
    } else {
        Case::Case1
    }
}

/// Sign-extended vector of length `2 * d.len()`.
pub fn extend_case2<T: Real>(d: &[T]) -> Result<Vec<T>> {
    if classify_case(d) != Case::Case2 {
        return Err(Error::NotCase2);
    }
    Ok(sign_split(d))
}

/// Layout used by [`extend_case2`], without the case check.
pub(crate) fn sign_split<T: Real>(d: &[T]) -> Vec<T> {
    let mut out = vec![T::zero(); 2 * d.len()];
    for (j, &x) in d.iter().enumerate() {
        if x >= T::zero() {
            out[2 * j] = x;
        } else {
            out[2 * j + 1] = -x;
        }
    }
    out
}

/// Inverse of the sign split: `d_j = d_bar[2j] - d_bar[2j+1]`.
pub fn collapse_case2<T: Real>(d_bar: &[T]) -> Vec<T> {
    d_bar.chunks_exact(2).map(|p| p[0] - p[1]).collect()
}

/// In-place orthonormal Walsh-Hadamard transform (`H^{(x)n}`).
pub fn fwht_in_place<T: Real>(v: &mut [T]) -> Result<()> {
    let n = v.len();
    if n == 0 || !n.is_power_of_two() {
        return Err(Error::NotPowerOfTwo(n));
    }
    let mut h = 1;
    while h < n {
        for block in v.chunks_exact_mut(2 * h) {
            let (lo, hi) = block.split_at_mut(h);
            for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
                let (x, y) = (*a, *b);
                *a = x + y;
                *b = x - y;
            }
        }
        h *= 2;
    }
    let scale = T::one() / T::from_usize(n).sqrt();
    for x in v.iter_mut() {
        *x *= scale;
    }
    Ok(())
}

pub fn fwht<T: Real>(v: &[T]) -> Result<Vec<T>> {
    let mut out = v.to_vec();
    fwht_in_place(&mut out)?;
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Real"))]
pub struct TargetEncoding<T: Real> {
    /// Unit-norm data vector, length `2^n`.
    pub d: Vec<T>,
    pub case: Case,
    /// Sign-extended vector, present for [`Case::Case2`].
    pub d_bar: Option<Vec<T>>,
    /// Target distribution in the computational basis.
    pub p: Vec<T>,
    /// Target distribution in the Hadamard basis.
    pub p_hadamard: Vec<T>,
}

impl<T: Real> TargetEncoding<T> {
    /// Pads, normalizes, classifies and builds both target distributions.
    pub fn new(raw: &[T]) -> Result<Self> {
        if raw.is_empty() {
            return Err(Error::Empty("data vector"));
        }
        let d = normalize(&pad_to_power_of_two(raw))?;
        Self::from_unit(d)
    }

    /// Builds the encoding from an already normalized power-of-two vector.
    pub fn from_unit(d: Vec<T>) -> Result<Self> {
        if !d.len().is_power_of_two() || d.len() < 2 {
            return Err(Error::NotPowerOfTwo(d.len()));
        }
        let case = classify_case(&d);
        let d_bar = match case {
            Case::Case1 => None,
            Case::Case2 => Some(extend_case2(&d)?),
        };
        let (p, p_hadamard) = target_distributions(d_bar.as_deref().unwrap_or(&d))?;
        Ok(Self { d, case, d_bar, p, p_hadamard })
    }

    /// The vector the loader is trained to produce (`d` or `d_bar`).
    pub fn loaded_vector(&self) -> &[T] {
        self.d_bar.as_deref().unwrap_or(&self.d)
    }

    /// Qubits of the loader circuit, ancilla included.
    pub fn n_qubits(&self) -> usize {
        self.p.len().trailing_zeros() as usize
    }

    /// Qubits holding the data register.
    pub fn data_qubits(&self) -> usize {
        self.d.len().trailing_zeros() as usize
    }

    /// `|d_j|^2` over the data register, ignoring signs.
    pub fn magnitude_distribution(&self) -> Vec<T> {
        self.d.iter().map(|&x| x * x).collect()
    }
}

/// `(v_j^2, (H v)_j^2)` for a unit vector `v`.
pub fn target_distributions<T: Real>(v: &[T]) -> Result<(Vec<T>, Vec<T>)> {
    let p = v.iter().map(|&x| x * x).collect();
    let vh = fwht(v)?;
    let ph = vh.iter().map(|&x| x * x).collect();
    Ok((p, ph))
}
