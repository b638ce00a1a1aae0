//! Dense statevector simulation.
//!
//! Qubit `0` is the most significant bit of the amplitude index, so basis
//! state `|j_0 j_1 ... j_{n-1}>` sits at index `sum_k 2^(n-1-k) j_k`. Every
//! other module relies on this ordering.

use std::fmt;
use std::ops::{Deref, DerefMut};

use num_complex::Complex;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Largest register the simulator accepts.
pub const MAX_QUBITS: usize = 24;

/// Deterministic generator used for sampling and initialization.
pub type SimRng = ChaCha8Rng;

/// Builds the generator for stream `stream` of master seed `seed`.
pub fn rng_for(seed: u64, stream: u64) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Axis::X => "x",
            Axis::Y => "y",
            Axis::Z => "z",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Gate<T> {
    /// `exp(-i angle sigma_axis / 2)`
    Rotation { axis: Axis, qubit: usize, angle: T },
    Hadamard(usize),
    Cnot { control: usize, target: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Real"))]
pub struct StateVector<T: Real> {
    n_qubits: usize,
    amplitudes: Vec<Complex<T>>,
}

fn check_qubits(n: usize) -> Result<()> {
    if n == 0 || n > MAX_QUBITS {
        return Err(Error::QubitCount(n, MAX_QUBITS));
    }
    Ok(())
}

impl<T: Real> StateVector<T> {
    /// `|0...0>` on `n_qubits` qubits.
    pub fn zero(n_qubits: usize) -> Result<Self> {
        check_qubits(n_qubits)?;
        let mut amplitudes = vec![Complex::new(T::zero(), T::zero()); 1 << n_qubits];
        amplitudes[0] = Complex::new(T::one(), T::zero());
        Ok(Self { n_qubits, amplitudes })
    }

    /// Wraps raw amplitudes. The length must be `2^n` with `n >= 1`; no
    /// normalization is applied.
    pub fn from_amplitudes(amplitudes: Vec<Complex<T>>) -> Result<Self> {
        let len = amplitudes.len();
        if !len.is_power_of_two() || len < 2 {
            return Err(Error::NotPowerOfTwo(len));
        }
        let n_qubits = len.trailing_zeros() as usize;
        check_qubits(n_qubits)?;
        Ok(Self { n_qubits, amplitudes })
    }

    pub fn from_real(values: &[T]) -> Result<Self> {
        Self::from_amplitudes(values.iter().map(|&v| Complex::new(v, T::zero())).collect())
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[Complex<T>] {
        &self.amplitudes
    }

    pub(crate) fn amplitudes_mut(&mut self) -> &mut [Complex<T>] {
        &mut self.amplitudes
    }

    pub fn into_amplitudes(self) -> Vec<Complex<T>> {
        self.amplitudes
    }

    pub fn norm_sqr(&self) -> T {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Real parts of the amplitudes.
    pub fn real_parts(&self) -> Vec<T> {
        self.amplitudes.iter().map(|a| a.re).collect()
    }

    pub fn max_imag(&self) -> T {
        self.amplitudes
            .iter()
            .fold(T::zero(), |m, a| m.max(a.im.abs()))
    }

    /// `<self|other>`
    pub fn inner(&self, other: &Self) -> Result<Complex<T>> {
        if self.dim() != other.dim() {
            return Err(Error::Dimension { expected: self.dim(), got: other.dim() });
        }
        Ok(self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .fold(Complex::new(T::zero(), T::zero()), |acc, x| acc + x))
    }

    fn check_qubit(&self, q: usize) -> Result<()> {
        if q >= self.n_qubits {
            return Err(Error::QubitIndex { index: q, n_qubits: self.n_qubits });
        }
        Ok(())
    }

    #[inline]
    fn stride(&self, q: usize) -> usize {
        1 << (self.n_qubits - 1 - q)
    }

    /// Applies the 2x2 matrix `[[m00, m01], [m10, m11]]` to qubit `q`.
    fn apply_single(&mut self, q: usize, m: [[Complex<T>; 2]; 2]) {
        let stride = self.stride(q);
        for block in self.amplitudes.chunks_exact_mut(2 * stride) {
            let (lo, hi) = block.split_at_mut(stride);
            for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
                let (x, y) = (*a, *b);
                *a = m[0][0] * x + m[0][1] * y;
                *b = m[1][0] * x + m[1][1] * y;
            }
        }
    }

    fn apply_ry(&mut self, q: usize, angle: T) {
        let half = angle / T::of(2.0);
        let (s, c) = half.sin_cos();
        let stride = self.stride(q);
        for block in self.amplitudes.chunks_exact_mut(2 * stride) {
            let (lo, hi) = block.split_at_mut(stride);
            for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
                let (x, y) = (*a, *b);
                *a = x * c - y * s;
                *b = x * s + y * c;
            }
        }
    }

    pub fn apply(&mut self, gate: &Gate<T>) -> Result<()> {
        let zero = Complex::new(T::zero(), T::zero());
        match *gate {
            Gate::Rotation { axis, qubit, angle } => {
                self.check_qubit(qubit)?;
                let half = angle / T::of(2.0);
                let (s, c) = half.sin_cos();
                match axis {
                    Axis::Y => self.apply_ry(qubit, angle),
                    Axis::X => {
                        let cc = Complex::new(c, T::zero());
                        let ms = Complex::new(T::zero(), -s);
                        self.apply_single(qubit, [[cc, ms], [ms, cc]]);
                    }
                    Axis::Z => {
                        let m0 = Complex::new(c, -s);
                        let m1 = Complex::new(c, s);
                        self.apply_single(qubit, [[m0, zero], [zero, m1]]);
                    }
                }
            }
            Gate::Hadamard(q) => {
                self.check_qubit(q)?;
                self.hadamard_unchecked(q);
            }
            Gate::Cnot { control, target } => {
                self.check_qubit(control)?;
                self.check_qubit(target)?;
                if control == target {
                    return Err(Error::ControlIsTarget(control));
                }
                let cbit = self.stride(control);
                let tbit = self.stride(target);
                for i in 0..self.amplitudes.len() {
                    if i & cbit != 0 && i & tbit == 0 {
                        self.amplitudes.swap(i, i | tbit);
                    }
                }
            }
        }
        Ok(())
    }

    fn hadamard_unchecked(&mut self, q: usize) {
        let r = T::FRAC_1_SQRT_2();
        let stride = self.stride(q);
        for block in self.amplitudes.chunks_exact_mut(2 * stride) {
            let (lo, hi) = block.split_at_mut(stride);
            for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
                let (x, y) = (*a, *b);
                *a = (x + y) * r;
                *b = (x - y) * r;
            }
        }
    }

    /// Applies `H` to every qubit.
    pub fn hadamard_all(&mut self) {
        for q in 0..self.n_qubits {
            self.hadamard_unchecked(q);
        }
    }

    /// `|amplitude_j|^2` for every basis state `j`.
    pub fn probabilities(&self) -> Vec<T> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }

    /// `<Z_{q_1} Z_{q_2} ...>` over the given qubits.
    pub fn expectation_z_product(&self, qubits: &[usize]) -> Result<T> {
        if qubits.is_empty() {
            return Err(Error::Empty("qubit set"));
        }
        let mut mask = 0usize;
        for &q in qubits {
            self.check_qubit(q)?;
            mask ^= self.stride(q);
        }
        Ok(self
            .amplitudes
            .iter()
            .enumerate()
            .map(|(j, a)| {
                let p = a.norm_sqr();
                if (j & mask).count_ones() % 2 == 0 {
                    p
                } else {
                    -p
                }
            })
            .sum())
    }

    pub(crate) fn scale(&mut self, factor: T) {
        for a in &mut self.amplitudes {
            *a = *a * factor;
        }
    }

    pub(crate) fn negate(&mut self) {
        for a in &mut self.amplitudes {
            *a = -*a;
        }
    }
}

/// Trainable angles of an ansatz, in radians.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ParamVector<T>(pub Vec<T>);

impl<T> Deref for ParamVector<T> {
    type Target = [T];
    fn deref(&self) -> &[T] {
        &self.0
    }
}

impl<T> DerefMut for ParamVector<T> {
    fn deref_mut(&mut self) -> &mut [T] {
        &mut self.0
    }
}

impl<T> From<Vec<T>> for ParamVector<T> {
    fn from(v: Vec<T>) -> Self {
        Self(v)
    }
}

impl<T: Real> ParamVector<T> {
    /// Angles drawn uniformly from `[0, 2*pi)`.
    pub fn random(len: usize, rng: &mut impl Rng) -> Self {
        let tau = std::f64::consts::TAU;
        Self((0..len).map(|_| T::of(rng.gen::<f64>() * tau)).collect())
    }

    pub fn zeros(len: usize) -> Self {
        Self(vec![T::zero(); len])
    }
}

/// Hardware-efficient layered ansatz: each layer rotates every qubit about
/// its own axis, then entangles neighbours with a CNOT ladder
/// `0->1, 1->2, ..., (n-2)->(n-1)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnsatzSpec {
    pub n_qubits: usize,
    pub n_layers: usize,
    /// One axis per rotation, layer-major.
    pub axes: Vec<Axis>,
}

impl AnsatzSpec {
    /// All-`R_y` ansatz; its unitary is real in the computational basis.
    pub fn all_y(n_qubits: usize, n_layers: usize) -> Result<Self> {
        check_qubits(n_qubits)?;
        Ok(Self { n_qubits, n_layers, axes: vec![Axis::Y; n_qubits * n_layers] })
    }

    /// Rotation axes drawn uniformly from `{x, y, z}`.
    pub fn random_axes(n_qubits: usize, n_layers: usize, rng: &mut impl Rng) -> Result<Self> {
        check_qubits(n_qubits)?;
        let axes = (0..n_qubits * n_layers)
            .map(|_| Axis::ALL[rng.gen_range(0..3)])
            .collect();
        Ok(Self { n_qubits, n_layers, axes })
    }

    pub fn with_axes(n_qubits: usize, n_layers: usize, axes: Vec<Axis>) -> Result<Self> {
        check_qubits(n_qubits)?;
        if axes.len() != n_qubits * n_layers {
            return Err(Error::Dimension { expected: n_qubits * n_layers, got: axes.len() });
        }
        Ok(Self { n_qubits, n_layers, axes })
    }

    pub fn n_params(&self) -> usize {
        self.n_qubits * self.n_layers
    }

    pub fn is_real(&self) -> bool {
        self.axes.iter().all(|&a| a == Axis::Y)
    }

    fn check_params<T>(&self, params: &[T]) -> Result<()> {
        if params.len() != self.n_params() {
            return Err(Error::Dimension { expected: self.n_params(), got: params.len() });
        }
        Ok(())
    }

    /// Gate sequence with qubit indices shifted by `offset`.
    pub fn gates<T: Real>(&self, params: &[T], offset: usize) -> Result<Vec<Gate<T>>> {
        self.check_params(params)?;
        let n = self.n_qubits;
        let mut gates = Vec::with_capacity(self.n_layers * (2 * n - 1));
        for layer in 0..self.n_layers {
            for q in 0..n {
                let r = layer * n + q;
                gates.push(Gate::Rotation { axis: self.axes[r], qubit: offset + q, angle: params[r] });
            }
            for q in 0..n.saturating_sub(1) {
                gates.push(Gate::Cnot { control: offset + q, target: offset + q + 1 });
            }
        }
        Ok(gates)
    }

    /// Applies the circuit to qubits `offset..offset + n_qubits` of `state`.
    pub fn apply<T: Real>(&self, state: &mut StateVector<T>, params: &[T], offset: usize) -> Result<()> {
        if offset + self.n_qubits > state.n_qubits() {
            return Err(Error::QubitIndex { index: offset + self.n_qubits - 1, n_qubits: state.n_qubits() });
        }
        for g in self.gates(params, offset)? {
            state.apply(&g)?;
        }
        Ok(())
    }

    /// Applies the inverse circuit.
    pub fn apply_inverse<T: Real>(&self, state: &mut StateVector<T>, params: &[T], offset: usize) -> Result<()> {
        if offset + self.n_qubits > state.n_qubits() {
            return Err(Error::QubitIndex { index: offset + self.n_qubits - 1, n_qubits: state.n_qubits() });
        }
        for g in self.gates(params, offset)?.into_iter().rev() {
            let inv = match g {
                Gate::Rotation { axis, qubit, angle } => Gate::Rotation { axis, qubit, angle: -angle },
                other => other,
            };
            state.apply(&inv)?;
        }
        Ok(())
    }
}

/// Runs the ansatz on `|0...0>`.
pub fn run_ansatz<T: Real>(spec: &AnsatzSpec, params: &[T]) -> Result<StateVector<T>> {
    spec.check_params(params)?;
    let mut state = StateVector::zero(spec.n_qubits)?;
    spec.apply(&mut state, params, 0)?;
    Ok(state)
}

fn distribution_tolerance<T: Real>() -> f64 {
    (T::epsilon().as_f64() * 256.0).max(1e-9)
}

/// Checks that `dist` is a probability vector.
pub fn validate_distribution<T: Real>(dist: &[T]) -> Result<()> {
    if dist.is_empty() {
        return Err(Error::Empty("distribution"));
    }
    let mut total = 0.0;
    for (j, &p) in dist.iter().enumerate() {
        let p = p.as_f64();
        if !(p >= -1e-15) || !p.is_finite() {
            return Err(Error::Distribution(format!("entry {j} is {p}")));
        }
        total += p;
    }
    if (total - 1.0).abs() > distribution_tolerance::<T>() {
        return Err(Error::Distribution(format!("sums to {total}")));
    }
    Ok(())
}

/// Inverse-CDF sampler over a fixed distribution.
#[derive(Clone, Debug)]
pub struct Sampler {
    cdf: Vec<f64>,
}

impl Sampler {
    pub fn new<T: Real>(dist: &[T]) -> Result<Self> {
        validate_distribution(dist)?;
        Ok(Self::new_unchecked(dist))
    }

    pub(crate) fn new_unchecked<T: Real>(dist: &[T]) -> Self {
        let mut acc = 0.0;
        let cdf = dist
            .iter()
            .map(|p| {
                acc += p.as_f64().max(0.0);
                acc
            })
            .collect();
        Self { cdf }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let total = *self.cdf.last().expect("non-empty cdf");
        let u = rng.gen::<f64>() * total;
        let idx = self.cdf.partition_point(|&c| c <= u);
        // Guard against u landing on the final cumulative value.
        idx.min(self.cdf.len() - 1)
    }

    pub fn sample_n<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<usize> {
        (0..n).map(|_| self.sample(rng)).collect()
    }
}

/// Draws `n_shot` outcomes from `dist`.
pub fn sample_counts<T: Real>(dist: &[T], n_shot: usize, rng: &mut impl Rng) -> Result<Vec<usize>> {
    if n_shot == 0 {
        return Err(Error::Empty("shot count"));
    }
    Ok(Sampler::new(dist)?.sample_n(n_shot, rng))
}

/// [`sample_counts`] with a fresh generator seeded by `seed`.
pub fn sample_counts_seeded<T: Real>(dist: &[T], n_shot: usize, seed: u64) -> Result<Vec<usize>> {
    sample_counts(dist, n_shot, &mut rng_for(seed, 0))
}
