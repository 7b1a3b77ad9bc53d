//! Toeplitz view of the convolution stage and the coherence analysis built on
//! it.
//!
//! Two different quantities live here and must not be confused:
//!
//! * `normalized` coherence, the largest |cosine| between distinct columns (or
//!   rows), always in `[0, 1]`;
//! * `raw` overlaps `T_ij = <phi_i, phi_j>` without normalization, which is
//!   what the Chebyshev/union bound [`coherence_bound`] speaks about.

use nalgebra::{Complex, DMatrix};
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{sample_weights, KernelSpec, Padding, WeightLaw};
use crate::rng::{self, Domain};

/// Above this signal length the dense matrix is not materialized.
pub const DENSE_LIMIT: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    Columns,
    Rows,
}

/// Valid-mode convolution matrix of a kernel: `(N - span + 1) x N`, such that
/// `matrix * x == convolve(x, kernel)` with bias 0 and no padding.
///
/// Row `r` holds the time-reversed kernel taps at columns
/// `r + (K-1-j)*d`, so every row is row 0 shifted right by `r`.
#[derive(Debug, Clone)]
pub struct ToeplitzView {
    kernel: KernelSpec,
    n: usize,
    dense: Option<DMatrix<f64>>,
}

pub fn build_toeplitz(k: &KernelSpec, n: usize) -> Result<ToeplitzView> {
    k.check_span(n)?;
    let kernel = KernelSpec {
        bias: 0.0,
        padding: Padding::None,
        ..k.clone()
    };
    let mut view = ToeplitzView {
        kernel,
        n,
        dense: None,
    };
    if n <= DENSE_LIMIT {
        let rows = view.n_rows();
        let mut m = DMatrix::zeros(rows, n);
        for r in 0..rows {
            for (c, w) in view.row_support(r) {
                m[(r, c)] = w;
            }
        }
        view.dense = Some(m);
    }
    Ok(view)
}

impl ToeplitzView {
    pub fn kernel(&self) -> &KernelSpec {
        &self.kernel
    }

    pub fn n_rows(&self) -> usize {
        self.n - self.kernel.span() + 1
    }

    pub fn n_cols(&self) -> usize {
        self.n
    }

    pub fn dense(&self) -> Option<&DMatrix<f64>> {
        self.dense.as_ref()
    }

    /// Nonzero pattern of row `r` as `(column, weight)`, columns ascending.
    pub fn row_support(&self, r: usize) -> Vec<(usize, f64)> {
        let k = &self.kernel;
        let last = k.len() - 1;
        (0..k.len())
            .rev()
            .map(|j| (r + (last - j) * k.dilation, k.weights[j]))
            .collect()
    }

    /// Nonzero pattern of column `c` as `(row, weight)`, rows ascending.
    pub fn column_support(&self, c: usize) -> Vec<(usize, f64)> {
        let k = &self.kernel;
        let last = k.len() - 1;
        let rows = self.n_rows();
        (0..k.len())
            .filter_map(|j| {
                let back = (last - j) * k.dilation;
                (c >= back && c - back < rows).then(|| (c - back, k.weights[j]))
            })
            .collect()
    }

    pub fn entry(&self, r: usize, c: usize) -> f64 {
        let k = &self.kernel;
        let base = r + (k.len() - 1) * k.dilation;
        if c < r || c > base || !(base - c).is_multiple_of(k.dilation) {
            return 0.0;
        }
        k.weights[(base - c) / k.dilation]
    }

    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.n {
            return Err(Error::Dimension(format!(
                "signal length {} does not match Toeplitz width {}",
                x.len(),
                self.n
            )));
        }
        if let Some(m) = &self.dense {
            let v = nalgebra::DVector::from_column_slice(x);
            return Ok((m * v).as_slice().to_vec());
        }
        Ok((0..self.n_rows())
            .map(|r| self.row_support(r).iter().map(|(c, w)| w * x[*c]).sum())
            .collect())
    }

    fn supports(&self, axis: Axis) -> Vec<Vec<(usize, f64)>> {
        match axis {
            Axis::Columns => (0..self.n_cols()).map(|c| self.column_support(c)).collect(),
            Axis::Rows => (0..self.n_rows()).map(|r| self.row_support(r)).collect(),
        }
    }

    /// Largest `|T_ij|` over distinct vectors along `axis`, computed from the
    /// shift structure (only pairs closer than the kernel span can overlap).
    pub fn max_raw_overlap(&self, axis: Axis) -> PairValue {
        let supports = self.supports(axis);
        scan_pairs(&supports, self.kernel.span(), false)
    }

    /// Normalized coherence along `axis`, from the shift structure.
    pub fn coherence(&self, axis: Axis) -> Result<PairValue> {
        let supports = self.supports(axis);
        let nonzero = supports
            .iter()
            .filter(|s| s.iter().any(|(_, w)| *w != 0.0))
            .count();
        if nonzero < 2 {
            return Err(Error::UndefinedCoherence(format!(
                "{nonzero} nonzero vectors along {axis:?}"
            )));
        }
        Ok(scan_pairs(&supports, self.kernel.span(), true))
    }
}

/// A maximum over vector pairs and the pair that attains it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairValue {
    pub value: f64,
    pub pair: (usize, usize),
}

fn sparse_dot(a: &[(usize, f64)], b: &[(usize, f64)]) -> f64 {
    let (mut i, mut j, mut acc) = (0, 0, 0.0);
    while i < a.len() && j < b.len() {
        match a[i].0.cmp(&b[j].0) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                acc += a[i].1 * b[j].1;
                i += 1;
                j += 1;
            }
        }
    }
    acc
}

fn scan_pairs(supports: &[Vec<(usize, f64)>], span: usize, normalize: bool) -> PairValue {
    let norms: Vec<f64> = supports
        .iter()
        .map(|s| s.iter().map(|(_, w)| w * w).sum::<f64>().sqrt())
        .collect();
    let mut best = PairValue {
        value: 0.0,
        pair: (0, 1),
    };
    for i in 0..supports.len() {
        if normalize && norms[i] == 0.0 {
            continue;
        }
        for j in (i + 1)..supports.len().min(i + span) {
            if normalize && norms[j] == 0.0 {
                continue;
            }
            let mut v = sparse_dot(&supports[i], &supports[j]).abs();
            if normalize {
                v = (v / (norms[i] * norms[j])).min(1.0);
            }
            if v > best.value {
                best = PairValue {
                    value: v,
                    pair: (i, j),
                };
            }
        }
    }
    best
}

/// Maximum normalized absolute inner product over distinct vectors of a dense
/// matrix. Zero vectors are skipped and reported.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Coherence {
    pub mu: f64,
    pub arg_pair: (usize, usize),
    pub axis: Axis,
    pub skipped_zero_vectors: Vec<usize>,
}

pub fn coherence(m: &DMatrix<f64>, axis: Axis) -> Result<Coherence> {
    let vectors: Vec<Vec<f64>> = match axis {
        Axis::Columns => m.column_iter().map(|c| c.iter().copied().collect()).collect(),
        Axis::Rows => m.row_iter().map(|r| r.iter().copied().collect()).collect(),
    };
    let norms: Vec<f64> = vectors
        .iter()
        .map(|v| v.iter().map(|x| x * x).sum::<f64>().sqrt())
        .collect();
    let skipped: Vec<usize> = (0..vectors.len()).filter(|&i| norms[i] == 0.0).collect();
    if vectors.len() - skipped.len() < 2 {
        return Err(Error::UndefinedCoherence(format!(
            "need at least 2 nonzero vectors along {axis:?}, found {}",
            vectors.len() - skipped.len()
        )));
    }
    let mut mu = -1.0;
    let mut arg_pair = (0, 0);
    for i in 0..vectors.len() {
        if norms[i] == 0.0 {
            continue;
        }
        for j in (i + 1)..vectors.len() {
            if norms[j] == 0.0 {
                continue;
            }
            let dot: f64 = vectors[i].iter().zip(&vectors[j]).map(|(a, b)| a * b).sum();
            let v = (dot.abs() / (norms[i] * norms[j])).min(1.0);
            if v > mu {
                mu = v;
                arg_pair = (i, j);
            }
        }
    }
    Ok(Coherence {
        mu,
        arg_pair,
        axis,
        skipped_zero_vectors: skipped,
    })
}

/// `theta_ij`: number of overlapping taps between Toeplitz vectors `i < j`.
pub fn overlap_theta(i: usize, j: usize, k: usize) -> Result<usize> {
    if i >= j {
        return Err(Error::Argument(format!("overlap_theta needs i < j, got i={i}, j={j}")));
    }
    Ok(k.saturating_sub(j - i))
}

/// Row-wise overlap accounting: each of the `n` rows `i` is paired with every
/// later index `j` (not truncated at `n`, i.e. a periodically extended
/// signal), giving `n * K(K-1)/2`.
pub fn overlap_sum(n: usize, k: usize) -> Result<usize> {
    let mut total = 0;
    for i in 0..n {
        for j in (i + 1)..=(i + k) {
            total += overlap_theta(i, j, k)?;
        }
    }
    Ok(total)
}

/// Same sum restricted to pairs inside a finite `n`-column matrix; never
/// exceeds [`overlap_sum`].
pub fn overlap_sum_truncated(n: usize, k: usize) -> Result<usize> {
    let mut total = 0;
    for i in 0..n {
        for j in (i + 1)..n.min(i + k) {
            total += overlap_theta(i, j, k)?;
        }
    }
    Ok(total)
}

/// `Var[T_01] = (K-1)/K^2` for i.i.d. taps with variance `1/K`.
pub fn t01_variance(k: usize) -> Result<f64> {
    if k < 2 {
        return Err(Error::Argument(format!("t01_variance needs K >= 2, got {k}")));
    }
    let k = k as f64;
    Ok((k - 1.0) / (k * k))
}

/// Sample variance of `T_01 = sum_k h_k h_{k+1}` with `h ~ N(0, 1/K)`.
pub fn t01_variance_monte_carlo(k: usize, samples: usize, seed: u64) -> Result<f64> {
    if k < 2 || samples < 2 {
        return Err(Error::Argument("need K >= 2 and at least 2 samples".into()));
    }
    let normal = Normal::new(0.0, (1.0 / k as f64).sqrt()).expect("valid std");
    let mut rng = rng::stream(seed, Domain::Trials, k as u64);
    let mut h = vec![0.0; k];
    let t: Vec<f64> = (0..samples)
        .map(|_| {
            h.iter_mut().for_each(|v| *v = normal.sample(&mut rng));
            h.windows(2).map(|w| w[0] * w[1]).sum()
        })
        .collect();
    let n = samples as f64;
    let mean = t.iter().sum::<f64>() / n;
    Ok(t.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0))
}

/// Union/Chebyshev bound `N (K-1) / (2 K alpha^2)` on
/// `P(max_{i<j} |T_ij| > alpha)`. May exceed 1.
pub fn coherence_bound(n: usize, k: usize, alpha: f64) -> Result<f64> {
    if !(alpha > 0.0) {
        return Err(Error::Argument(format!("alpha must be > 0, got {alpha}")));
    }
    if k < 2 {
        return Err(Error::Argument(format!("coherence bound needs K >= 2, got {k}")));
    }
    let (n, k) = (n as f64, k as f64);
    Ok(n * (k - 1.0) / (2.0 * k * alpha * alpha))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundCheck {
    pub n: usize,
    pub k: usize,
    pub alpha: f64,
    pub trials: usize,
    pub seed: u64,
    pub axis: Axis,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoherenceReport {
    pub n: usize,
    pub k: usize,
    pub axis: Axis,
    /// Normalized coherence of the first sampled kernel's Toeplitz matrix.
    pub mu: f64,
    pub arg_pair: (usize, usize),
    /// Mean normalized coherence over all trials.
    pub mean_mu: f64,
    pub alpha: f64,
    pub bound_value: f64,
    pub vacuous: bool,
    pub trials: usize,
    pub exceed_count: usize,
    pub empirical_exceed_rate: f64,
    /// Binomial standard error at `min(1, bound)`.
    pub std_error: f64,
    pub passes: bool,
}

/// Samples `trials` kernels with N(0, 1/K) taps and checks the empirical
/// frequency of `max |T_ij| > alpha` against [`coherence_bound`].
pub fn verify_bound_monte_carlo(check: &BoundCheck) -> Result<CoherenceReport> {
    let BoundCheck {
        n,
        k,
        alpha,
        trials,
        seed,
        axis,
    } = *check;
    if trials == 0 {
        return Err(Error::Argument("trials must be >= 1".into()));
    }
    let bound_value = coherence_bound(n, k, alpha)?;
    if k > n {
        return Err(Error::Span {
            k,
            dilation: 1,
            span: k,
            n,
        });
    }

    let per_trial: Vec<(f64, PairValue)> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = rng::stream(seed, Domain::Trials, t as u64);
            let weights = sample_weights(&mut rng, k, WeightLaw::ScaledNormal);
            let kernel = KernelSpec::new(weights, 0.0, 1, Padding::None)?;
            let view = build_toeplitz(&kernel, n)?;
            let raw = view.max_raw_overlap(axis).value;
            let mu = view.coherence(axis).unwrap_or(PairValue {
                value: 0.0,
                pair: (0, 0),
            });
            Ok((raw, mu))
        })
        .collect::<Result<_>>()?;

    let exceed_count = per_trial.iter().filter(|(raw, _)| *raw > alpha).count();
    let rate = exceed_count as f64 / trials as f64;
    let capped = bound_value.min(1.0);
    let std_error = (capped * (1.0 - capped) / trials as f64).sqrt();
    let mean_mu = per_trial.iter().map(|(_, m)| m.value).sum::<f64>() / trials as f64;
    Ok(CoherenceReport {
        n,
        k,
        axis,
        mu: per_trial[0].1.value,
        arg_pair: per_trial[0].1.pair,
        mean_mu,
        alpha,
        bound_value,
        vacuous: bound_value >= 1.0,
        trials,
        exceed_count,
        empirical_exceed_rate: rate,
        std_error,
        passes: rate <= capped + 3.0 * std_error,
    })
}

/// Heuristic recoverability checks for an `s`-sparse input.
///
/// The RIP constant `delta_s` is not estimated; `rip_ok` only evaluates the
/// sufficient kernel-length condition `K > s^2 ln(N) / c_s`, whose constant
/// `c_s` is user supplied.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoverabilityVerdict {
    pub s: usize,
    pub n: usize,
    pub k: usize,
    pub c_s: f64,
    pub rip_threshold: f64,
    pub rip_ok: bool,
    pub coherence_threshold: f64,
    pub mu_used: f64,
    pub coherence_ok: bool,
}

impl RecoverabilityVerdict {
    /// Recomputes both booleans from the stored fields.
    pub fn is_consistent(&self) -> bool {
        let rip = self.s.pow(2) as f64 * (self.n as f64).ln() / self.c_s;
        let coh = 1.0 / (2.0 * self.s as f64 - 1.0);
        self.rip_ok == ((self.k as f64) > rip) && self.coherence_ok == (self.mu_used < coh)
    }
}

pub fn recoverability(s: usize, n: usize, k: usize, c_s: f64, mu: f64) -> Result<RecoverabilityVerdict> {
    if s == 0 {
        return Err(Error::Argument("sparsity s must be >= 1".into()));
    }
    if n < 2 {
        return Err(Error::Argument("N must be >= 2".into()));
    }
    if !(c_s > 0.0) {
        return Err(Error::Argument(format!("c_s must be > 0, got {c_s}")));
    }
    if !(0.0..=1.0).contains(&mu) {
        return Err(Error::Argument(format!("mu must be in [0, 1], got {mu}")));
    }
    let rip_threshold = (s * s) as f64 * (n as f64).ln() / c_s;
    let coherence_threshold = 1.0 / (2.0 * s as f64 - 1.0);
    Ok(RecoverabilityVerdict {
        s,
        n,
        k,
        c_s,
        rip_threshold,
        rip_ok: k as f64 > rip_threshold,
        coherence_threshold,
        mu_used: mu,
        coherence_ok: mu < coherence_threshold,
    })
}

pub type Complex64 = Complex<f64>;

/// Unitary DFT basis; row `k` is `exp(-2 pi i k t / N) / sqrt(N)`.
pub fn dft_basis(n: usize) -> DMatrix<Complex64> {
    let scale = 1.0 / (n as f64).sqrt();
    DMatrix::from_fn(n, n, |k, t| {
        let phase = -2.0 * std::f64::consts::PI * ((k * t) % n) as f64 / n as f64;
        Complex::from_polar(scale, phase)
    })
}

pub fn to_complex(m: &DMatrix<f64>) -> DMatrix<Complex64> {
    m.map(|v| Complex::new(v, 0.0))
}

/// Maximum normalized `|<a_r, b_s>|` over all rows `r` of `a` and `s` of `b`.
pub fn cross_basis_coherence(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> Result<PairValue> {
    if a.ncols() != b.ncols() {
        return Err(Error::Dimension(format!(
            "basis vectors have lengths {} and {}",
            a.ncols(),
            b.ncols()
        )));
    }
    let norms = |m: &DMatrix<Complex64>| -> Result<Vec<f64>> {
        m.row_iter()
            .enumerate()
            .map(|(i, r)| {
                let nrm = r.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
                if nrm == 0.0 {
                    Err(Error::Argument(format!("zero basis vector at row {i}")))
                } else {
                    Ok(nrm)
                }
            })
            .collect()
    };
    let (na, nb) = (norms(a)?, norms(b)?);
    let mut best = PairValue {
        value: -1.0,
        pair: (0, 0),
    };
    for r in 0..a.nrows() {
        for s in 0..b.nrows() {
            let dot: Complex64 = (0..a.ncols()).map(|c| a[(r, c)] * b[(s, c)].conj()).sum();
            let v = (dot.norm() / (na[r] * nb[s])).min(1.0);
            if v > best.value {
                best = PairValue { value: v, pair: (r, s) };
            }
        }
    }
    Ok(best)
}

pub fn cross_basis_coherence_real(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<PairValue> {
    cross_basis_coherence(&to_complex(a), &to_complex(b))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DilationComparison {
    pub n: usize,
    pub k: usize,
    pub dilation: usize,
    pub pairs: usize,
    /// Mean cross coherence of two undilated kernel bases.
    pub mean_undilated: f64,
    /// Mean cross coherence when the second kernel is dilated.
    pub mean_dilated: f64,
}

/// For each seed pair, draws kernels A and B and compares
/// `mu(T(A, d=1), T(B, d=1))` with `mu(T(A, d=1), T(B, d=dilation))`, using
/// Toeplitz rows as sensing vectors.
pub fn dilation_comparison(n: usize, k: usize, dilation: usize, pairs: usize, seed: u64) -> Result<DilationComparison> {
    if pairs == 0 {
        return Err(Error::Argument("pairs must be >= 1".into()));
    }
    let results: Vec<(f64, f64)> = (0..pairs)
        .into_par_iter()
        .map(|p| {
            let mut rng = rng::stream(seed, Domain::Trials, p as u64);
            let wa = sample_weights(&mut rng, k, WeightLaw::ScaledNormal);
            let wb = sample_weights(&mut rng, k, WeightLaw::ScaledNormal);
            let a = build_toeplitz(&KernelSpec::new(wa, 0.0, 1, Padding::None)?, n)?;
            let b1 = build_toeplitz(&KernelSpec::new(wb.clone(), 0.0, 1, Padding::None)?, n)?;
            let bd = build_toeplitz(&KernelSpec::new(wb, 0.0, dilation, Padding::None)?, n)?;
            let dense = |v: &ToeplitzView| -> Result<DMatrix<f64>> {
                v.dense()
                    .cloned()
                    .ok_or_else(|| Error::Argument(format!("N={n} exceeds dense limit {DENSE_LIMIT}")))
            };
            let a = dense(&a)?;
            Ok((
                cross_basis_coherence_real(&a, &dense(&b1)?)?.value,
                cross_basis_coherence_real(&a, &dense(&bd)?)?.value,
            ))
        })
        .collect::<Result<_>>()?;
    let m = pairs as f64;
    Ok(DilationComparison {
        n,
        k,
        dilation,
        pairs,
        mean_undilated: results.iter().map(|r| r.0).sum::<f64>() / m,
        mean_dilated: results.iter().map(|r| r.1).sum::<f64>() / m,
    })
}
