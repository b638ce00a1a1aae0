//! Price ingestion and the classical side of the SVD-entropy indicator.

use std::collections::HashSet;
use std::io::Read;

use serde::{Deserialize, Serialize};

use crate::encoding::TargetEncoding;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Dense row-major matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Real"))]
pub struct Matrix<T: Real> {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<T>,
}

impl<T: Real> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![T::zero(); rows * cols] }
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::Prices("ragged matrix rows".into()));
        }
        Ok(Self { rows: rows.len(), cols, data: rows.concat() })
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> T {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: T) {
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[T] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    /// Columns `start..start + len`.
    pub fn columns(&self, start: usize, len: usize) -> Self {
        let mut out = Self::zeros(self.rows, len);
        for r in 0..self.rows {
            for c in 0..len {
                out.set(r, c, self.get(r, start + c));
            }
        }
        out
    }

    pub fn trace(&self) -> T {
        (0..self.rows.min(self.cols)).map(|i| self.get(i, i)).sum()
    }
}

/// Monthly prices, one row per symbol.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Real"))]
pub struct StockSeries<T: Real> {
    pub symbols: Vec<String>,
    pub dates: Vec<String>,
    pub prices: Matrix<T>,
}

impl<T: Real> StockSeries<T> {
    pub fn n_stocks(&self) -> usize {
        self.symbols.len()
    }
}

/// Parses comma-separated prices: a header `Symbol,<month>,...` followed by
/// one row per symbol.
pub fn load_prices<T: Real>(source: impl Read) -> Result<StockSeries<T>> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(source);
    let header = reader.headers()?.clone();
    if header.len() < 2 {
        return Err(Error::Prices("header needs a symbol column and at least one month".into()));
    }
    let dates: Vec<String> = header.iter().skip(1).map(str::to_string).collect();
    let mut seen = HashSet::new();
    let mut symbols = Vec::new();
    let mut rows = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record?;
        if record.len() != header.len() {
            return Err(Error::Prices(format!("row {} has {} fields, expected {}", line + 2, record.len(), header.len())));
        }
        let symbol = record[0].to_string();
        if !seen.insert(symbol.clone()) {
            return Err(Error::Prices(format!("duplicate symbol {symbol}")));
        }
        let mut row = Vec::with_capacity(dates.len());
        for (field, date) in record.iter().skip(1).zip(&dates) {
            let price: f64 = field
                .parse()
                .map_err(|_| Error::Prices(format!("{symbol} {date}: cannot parse {field:?}")))?;
            if !(price > 0.0) || !price.is_finite() {
                return Err(Error::Prices(format!("{symbol} {date}: price {price} must be positive")));
            }
            row.push(T::of(price));
        }
        symbols.push(symbol);
        rows.push(row);
    }
    if symbols.is_empty() {
        return Err(Error::Prices("no price rows".into()));
    }
    Ok(StockSeries { symbols, dates, prices: Matrix::from_rows(&rows)? })
}

/// `r_{j,t} = ln s_{j,t} - ln s_{j,t-1}`; one column fewer than the prices.
pub fn log_returns<T: Real>(series: &StockSeries<T>) -> Result<Matrix<T>> {
    let p = &series.prices;
    if p.cols < 2 {
        return Err(Error::Prices("need at least two dates for returns".into()));
    }
    let mut out = Matrix::zeros(p.rows, p.cols - 1);
    for j in 0..p.rows {
        for t in 1..p.cols {
            out.set(j, t - 1, p.get(j, t).ln() - p.get(j, t - 1).ln());
        }
    }
    Ok(out)
}

/// Standardized coefficients `a_jt` and the correlation matrix `C = a a^T`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Real"))]
pub struct WindowCoefficients<T: Real> {
    pub a: Matrix<T>,
    pub correlation: Matrix<T>,
}

fn row_stats<T: Real>(row: &[T]) -> (T, T) {
    let n = T::from_usize(row.len());
    let mean = row.iter().copied().sum::<T>() / n;
    let var = row.iter().map(|&r| (r - mean) * (r - mean)).sum::<T>() / n;
    (mean, var.sqrt())
}

/// First row whose population deviation is zero up to rounding.
fn flat_row<T: Real>(returns: &Matrix<T>) -> Option<usize> {
    (0..returns.rows).find(|&j| {
        let (mean, sigma) = row_stats(returns.row(j));
        !(sigma > T::epsilon() * mean.abs().max(T::one()))
    })
}

/// `a_jt = (r_jt - mean_j) / (sigma_j sqrt(N_s T))` with the population
/// standard deviation, and `C_jk = sum_t a_jt a_kt` (unit trace).
pub fn window_coefficients<T: Real>(returns: &Matrix<T>) -> Result<WindowCoefficients<T>> {
    let (n_s, t_len) = (returns.rows, returns.cols);
    if t_len < 2 {
        return Err(Error::Config(format!("window needs at least 2 return columns, got {t_len}")));
    }
    if n_s == 0 {
        return Err(Error::Empty("stock list"));
    }
    let scale = T::from_usize(n_s * t_len).sqrt();
    let mut a = Matrix::zeros(n_s, t_len);
    if let Some(j) = flat_row(returns) {
        return Err(Error::ZeroVariance { window: String::new(), symbol: format!("row {j}") });
    }
    for j in 0..n_s {
        let row = returns.row(j);
        let (mean, sigma) = row_stats(row);
        for (t, &r) in row.iter().enumerate() {
            a.set(j, t, (r - mean) / (sigma * scale));
        }
    }
    let mut c = Matrix::zeros(n_s, n_s);
    for j in 0..n_s {
        for k in 0..n_s {
            let v = a.row(j).iter().zip(a.row(k)).map(|(&x, &y)| x * y).sum();
            c.set(j, k, v);
        }
    }
    Ok(WindowCoefficients { a, correlation: c })
}

/// One sliding term: `window` prices, hence `window - 1` returns.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Real"))]
pub struct MarketWindow<T: Real> {
    /// Label of the last month in the window.
    pub term: String,
    pub returns: Matrix<T>,
    pub coefficients: WindowCoefficients<T>,
}

/// Number of terms a series of `n_dates` prices yields for a `window`-month window.
pub fn n_terms(n_dates: usize, window: usize) -> usize {
    (n_dates + 1).saturating_sub(window)
}

/// Windows sliding by one month. A term whose window is degenerate is
/// returned as an error in its slot so the caller can carry on.
pub fn market_windows<T: Real>(series: &StockSeries<T>, window: usize) -> Result<Vec<(String, Result<MarketWindow<T>>)>> {
    if window < 3 {
        return Err(Error::Config(format!("window must span at least 3 prices, got {window}")));
    }
    let count = n_terms(series.dates.len(), window);
    if count == 0 {
        return Err(Error::Prices(format!("{} dates cannot fill a {window}-month window", series.dates.len())));
    }
    let returns = log_returns(series)?;
    Ok((0..count)
        .map(|k| {
            let term = series.dates[k + window - 1].clone();
            let r = returns.columns(k, window - 1);
            let w = match flat_row(&r) {
                Some(j) => Err(Error::ZeroVariance { window: term.clone(), symbol: series.symbols[j].clone() }),
                None => window_coefficients(&r).map(|coefficients| MarketWindow { term: term.clone(), returns: r, coefficients }),
            };
            (term, w)
        })
        .collect())
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, ascending.
pub fn symmetric_eigenvalues<T: Real>(m: &Matrix<T>) -> Result<Vec<T>> {
    if m.rows != m.cols {
        return Err(Error::Dimension { expected: m.rows, got: m.cols });
    }
    let n = m.rows;
    let mut a = m.clone();
    let off = |a: &Matrix<T>| -> T {
        let mut s = T::zero();
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    s += a.get(i, j) * a.get(i, j);
                }
            }
        }
        s
    };
    let tiny = T::epsilon() * T::epsilon();
    for _sweep in 0..100 {
        if off(&a) <= tiny {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a.get(p, q);
                if apq == T::zero() {
                    continue;
                }
                let theta = (a.get(q, q) - a.get(p, p)) / (T::of(2.0) * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
                let c = T::one() / (t * t + T::one()).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a.get(k, p);
                    let akq = a.get(k, q);
                    a.set(k, p, c * akp - s * akq);
                    a.set(k, q, s * akp + c * akq);
                }
                for k in 0..n {
                    let apk = a.get(p, k);
                    let aqk = a.get(q, k);
                    a.set(p, k, c * apk - s * aqk);
                    a.set(q, k, s * apk + c * aqk);
                }
            }
        }
    }
    let mut ev: Vec<T> = (0..n).map(|i| a.get(i, i)).collect();
    ev.sort_by(|x, y| x.partial_cmp(y).unwrap_or(std::cmp::Ordering::Equal));
    Ok(ev)
}

/// Eigenvalue cut-off below which a correlation eigenvalue is treated as zero.
pub const EIGEN_FLOOR: f64 = 1e-12;

/// Positive eigenvalues of a symmetric PSD correlation matrix, descending.
pub fn correlation_spectrum<T: Real>(c: &Matrix<T>) -> Result<Vec<T>> {
    let tol = T::of(1e-9);
    let mut asym = T::zero();
    for i in 0..c.rows {
        for j in 0..c.cols.min(c.rows) {
            asym = asym.max((c.get(i, j) - c.get(j, i)).abs());
        }
    }
    if asym > tol {
        return Err(Error::Asymmetric(asym.as_f64()));
    }
    let ev = symmetric_eigenvalues(c)?;
    if let Some(&lowest) = ev.first() {
        if lowest < -tol {
            return Err(Error::NegativeEigenvalue(lowest.as_f64()));
        }
    }
    Ok(ev.into_iter().rev().filter(|&l| l > T::of(EIGEN_FLOOR)).collect())
}

/// `-sum l ln l` over the positive eigenvalues of `C`.
pub fn exact_svd_entropy<T: Real>(c: &Matrix<T>) -> Result<T> {
    Ok(correlation_spectrum(c)?.into_iter().map(|l| -l * l.ln()).sum())
}

/// Register layout of a flattened `stock (x) time` data vector.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegisterSplit {
    pub stock_qubits: usize,
    pub time_qubits: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound(deserialize = "T: Real"))]
pub struct DataVector<T: Real> {
    pub encoding: TargetEncoding<T>,
    pub split: RegisterSplit,
}

fn qubits_for(len: usize) -> usize {
    len.next_power_of_two().max(2).trailing_zeros() as usize
}

/// Flattens `a_jt` stock-major (index `j * 2^{n_t} + t`) with zero padding of
/// each register to a power of two, then builds the training target.
pub fn build_data_vector<T: Real>(a: &Matrix<T>) -> Result<DataVector<T>> {
    let norm: T = a.data.iter().map(|&x| x * x).sum();
    if (norm - T::one()).abs() > T::of(1e-8) {
        return Err(Error::Config(format!("coefficients have squared norm {norm}, expected 1")));
    }
    let split = RegisterSplit { stock_qubits: qubits_for(a.rows), time_qubits: qubits_for(a.cols) };
    let t_dim = 1usize << split.time_qubits;
    let mut d = vec![T::zero(); (1 << split.stock_qubits) * t_dim];
    for j in 0..a.rows {
        for t in 0..a.cols {
            d[j * t_dim + t] = a.get(j, t);
        }
    }
    let norm = d.iter().map(|&x| x * x).sum::<T>().sqrt();
    let d = d.into_iter().map(|x| x / norm).collect();
    Ok(DataVector { encoding: TargetEncoding::from_unit(d)?, split })
}

/// `rho_jk = sum_t psi_{j t} psi_{k t}^*` for a real bipartite amplitude vector.
pub fn reduced_stock_density<T: Real>(amplitudes: &[T], split: RegisterSplit) -> Result<Matrix<T>> {
    let (ns, nt) = (1usize << split.stock_qubits, 1usize << split.time_qubits);
    if amplitudes.len() != ns * nt {
        return Err(Error::Dimension { expected: ns * nt, got: amplitudes.len() });
    }
    let mut rho = Matrix::zeros(ns, ns);
    for j in 0..ns {
        for k in 0..ns {
            let v = (0..nt).map(|t| amplitudes[j * nt + t] * amplitudes[k * nt + t]).sum();
            rho.set(j, k, v);
        }
    }
    Ok(rho)
}
