//! Random kernels, dilated convolution with bias, and PPV pooling.
//!
//! Stage one maps a series `x` to `y[n] = sum_j w[j] * x[n - j*d] + bias`
//! (causal indexing, boundary handled by the kernel's padding mode). Stage two
//! keeps only the proportion of strictly positive outputs.

use std::fmt::Write as _;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{self, Domain};
use crate::series::{standardize, Dataset, TimeSeries};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Padding {
    /// Valid mode: output positions needing out-of-range samples are dropped.
    None,
    Zero,
    Circular,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    /// 1-based kernel index.
    pub id: usize,
    pub weights: Vec<f64>,
    pub bias: f64,
    pub dilation: usize,
    pub padding: Padding,
}

impl KernelSpec {
    pub fn new(weights: Vec<f64>, bias: f64, dilation: usize, padding: Padding) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::Config("kernel needs at least one weight".into()));
        }
        if dilation == 0 {
            return Err(Error::Config("dilation must be >= 1".into()));
        }
        if !bias.is_finite() || weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::Config("kernel parameters must be finite".into()));
        }
        Ok(Self {
            id: 1,
            weights,
            bias,
            dilation,
            padding,
        })
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Effective receptive field `(K-1)*d + 1`.
    pub fn span(&self) -> usize {
        (self.weights.len() - 1) * self.dilation + 1
    }

    pub fn check_span(&self, n: usize) -> Result<()> {
        if self.span() > n {
            return Err(Error::Span {
                k: self.len(),
                dilation: self.dilation,
                span: self.span(),
                n,
            });
        }
        Ok(())
    }

    /// Length of the convolved series for an input of length `n`.
    pub fn output_len(&self, n: usize) -> Result<usize> {
        self.check_span(n)?;
        Ok(match self.padding {
            Padding::None => n - self.span() + 1,
            Padding::Zero | Padding::Circular => n,
        })
    }

    pub fn with_bias(&self, bias: f64) -> Self {
        Self {
            bias,
            ..self.clone()
        }
    }

    pub fn with_padding(&self, padding: Padding) -> Self {
        Self {
            padding,
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "value")]
pub enum DilationPolicy {
    Fixed(usize),
    /// `d = 2^u` with `u` uniform on `0..=floor(log2((N-1)/(K-1)))`.
    ExponentialRandom,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PaddingPolicy {
    AlwaysZero,
    RandomZeroOrNone,
    Circular,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightLaw {
    /// i.i.d. N(0, 1/K).
    ScaledNormal,
    /// i.i.d. N(0, 1), then mean-centred (the original Rocket recipe).
    CenteredUnit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransformConfig {
    pub num_kernels: usize,
    pub kernel_lengths: Vec<usize>,
    pub seed: u64,
    pub dilation_policy: DilationPolicy,
    pub padding_policy: PaddingPolicy,
    pub weight_law: WeightLaw,
    pub standardize_inputs: bool,
}

impl Default for TransformConfig {
    fn default() -> Self {
        Self {
            num_kernels: 10_000,
            kernel_lengths: vec![7, 9, 11],
            seed: 0,
            dilation_policy: DilationPolicy::ExponentialRandom,
            padding_policy: PaddingPolicy::AlwaysZero,
            weight_law: WeightLaw::ScaledNormal,
            standardize_inputs: true,
        }
    }
}

impl TransformConfig {
    pub fn validate(&self) -> Result<()> {
        if self.num_kernels == 0 {
            return Err(Error::Config("num_kernels must be >= 1".into()));
        }
        if self.kernel_lengths.is_empty() {
            return Err(Error::Config("kernel_lengths must not be empty".into()));
        }
        if self.kernel_lengths.contains(&0) {
            return Err(Error::Config("kernel lengths must be >= 1".into()));
        }
        if self.dilation_policy == DilationPolicy::Fixed(0) {
            return Err(Error::Config("fixed dilation must be >= 1".into()));
        }
        Ok(())
    }

    /// Stable identifier of the kernel set this configuration generates.
    pub fn kernel_set_id(&self) -> String {
        let canonical = serde_json::to_string(self).expect("config serializes");
        format!("{:016x}-{:016x}", self.seed, fnv1a(canonical.as_bytes()))
    }
}

fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325u64, |h, b| {
        (h ^ u64::from(*b)).wrapping_mul(0x0000_0100_0000_01b3)
    })
}

/// Largest `u` with `2^u * (k - 1) <= n - 1`.
fn max_dilation_exponent(k: usize, n: usize) -> u32 {
    if k <= 1 {
        return 0;
    }
    let ratio = (n - 1) / (k - 1);
    if ratio == 0 {
        0
    } else {
        ratio.ilog2()
    }
}

/// Generates `cfg.num_kernels` kernels for series of length `n_hint`.
///
/// Kernel `i` is drawn from its own random stream, so it is independent of how
/// many other kernels are generated or in which order.
pub fn generate_kernels(cfg: &TransformConfig, n_hint: usize) -> Result<Vec<KernelSpec>> {
    cfg.validate()?;
    let feasible: Vec<usize> = cfg
        .kernel_lengths
        .iter()
        .copied()
        .filter(|&k| match cfg.dilation_policy {
            DilationPolicy::Fixed(d) => (k - 1) * d < n_hint,
            DilationPolicy::ExponentialRandom => k <= n_hint,
        })
        .collect();
    if feasible.is_empty() {
        return Err(Error::Config(format!(
            "no kernel length in {:?} fits series length {n_hint} under {:?}",
            cfg.kernel_lengths, cfg.dilation_policy
        )));
    }

    (1..=cfg.num_kernels)
        .map(|id| {
            let mut rng = rng::stream(cfg.seed, Domain::Kernels, id as u64);
            let k = feasible[rng.random_range(0..feasible.len())];
            let weights = sample_weights(&mut rng, k, cfg.weight_law);
            let bias = rng.random_range(-1.0..1.0);
            let dilation = match cfg.dilation_policy {
                DilationPolicy::Fixed(d) => d,
                DilationPolicy::ExponentialRandom => {
                    let u = rng.random_range(0..=max_dilation_exponent(k, n_hint));
                    1usize << u
                }
            };
            let padding = match cfg.padding_policy {
                PaddingPolicy::AlwaysZero => Padding::Zero,
                PaddingPolicy::Circular => Padding::Circular,
                PaddingPolicy::RandomZeroOrNone => {
                    if rng.random_bool(0.5) {
                        Padding::Zero
                    } else {
                        Padding::None
                    }
                }
            };
            Ok(KernelSpec {
                id,
                weights,
                bias,
                dilation,
                padding,
            })
        })
        .collect()
}

pub(crate) fn sample_weights<R: Rng>(rng: &mut R, k: usize, law: WeightLaw) -> Vec<f64> {
    match law {
        WeightLaw::ScaledNormal => {
            let normal = Normal::new(0.0, (1.0 / k as f64).sqrt()).expect("valid std");
            (0..k).map(|_| normal.sample(rng)).collect()
        }
        WeightLaw::CenteredUnit => {
            let normal = Normal::new(0.0, 1.0).expect("valid std");
            let mut w: Vec<f64> = (0..k).map(|_| normal.sample(rng)).collect();
            let mean = w.iter().sum::<f64>() / k as f64;
            w.iter_mut().for_each(|v| *v -= mean);
            w
        }
    }
}

/// Output of stage one for one kernel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvolvedSeries(pub Vec<f64>);

impl ConvolvedSeries {
    pub fn values(&self) -> &[f64] {
        &self.0
    }
}

/// Calls `emit` with every output sample, in order.
#[inline]
fn for_each_output(x: &[f64], k: &KernelSpec, mut emit: impl FnMut(f64)) -> Result<()> {
    let n = x.len();
    k.check_span(n)?;
    let d = k.dilation;
    let w = &k.weights;
    match k.padding {
        Padding::None => {
            for t in (k.span() - 1)..n {
                let mut acc = 0.0;
                for (j, wj) in w.iter().enumerate() {
                    acc += wj * x[t - j * d];
                }
                emit(acc + k.bias);
            }
        }
        Padding::Zero => {
            for t in 0..n {
                let mut acc = 0.0;
                for (j, wj) in w.iter().enumerate() {
                    let back = j * d;
                    if back > t {
                        break;
                    }
                    acc += wj * x[t - back];
                }
                emit(acc + k.bias);
            }
        }
        Padding::Circular => {
            for t in 0..n {
                let mut acc = 0.0;
                for (j, wj) in w.iter().enumerate() {
                    let back = (j * d) % n;
                    let idx = if back > t { t + n - back } else { t - back };
                    acc += wj * x[idx];
                }
                emit(acc + k.bias);
            }
        }
    }
    Ok(())
}

pub fn convolve(x: &TimeSeries, k: &KernelSpec) -> Result<ConvolvedSeries> {
    let mut out = Vec::with_capacity(x.len());
    for_each_output(x.values(), k, |y| out.push(y))?;
    Ok(ConvolvedSeries(out))
}

/// Fraction of strictly positive entries. Zeros do not count.
pub fn ppv(y: &ConvolvedSeries) -> Result<f64> {
    if y.0.is_empty() {
        return Err(Error::Argument("PPV of an empty series".into()));
    }
    let pos = y.0.iter().filter(|v| **v > 0.0).count();
    Ok(pos as f64 / y.0.len() as f64)
}

/// Numerator and denominator of the PPV of `convolve(x, k)`, without
/// materializing the convolved series.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PositiveCount {
    pub positive: u32,
    pub len: u32,
}

impl PositiveCount {
    pub fn ppv(self) -> f64 {
        f64::from(self.positive) / f64::from(self.len)
    }
}

pub fn positive_count(x: &[f64], k: &KernelSpec) -> Result<PositiveCount> {
    let mut positive = 0u32;
    let mut len = 0u32;
    for_each_output(x, k, |y| {
        positive += u32::from(y > 0.0);
        len += 1;
    })?;
    Ok(PositiveCount { positive, len })
}

fn prepare(x: &TimeSeries, standardize_inputs: bool) -> TimeSeries {
    if standardize_inputs {
        standardize(x).series
    } else {
        x.clone()
    }
}

/// Positive counts of one series against every kernel, in kernel order.
pub fn series_counts(
    x: &TimeSeries,
    kernels: &[KernelSpec],
    standardize_inputs: bool,
) -> Result<Vec<PositiveCount>> {
    let x = prepare(x, standardize_inputs);
    kernels.iter().map(|k| positive_count(x.values(), k)).collect()
}

/// PPV feature vector of one series.
pub fn series_features(
    x: &TimeSeries,
    kernels: &[KernelSpec],
    standardize_inputs: bool,
) -> Result<Vec<f64>> {
    Ok(series_counts(x, kernels, standardize_inputs)?
        .into_iter()
        .map(PositiveCount::ppv)
        .collect())
}

/// Rows = instances, columns = kernels; entries are PPVs in `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureMatrix {
    n_rows: usize,
    n_cols: usize,
    data: Vec<f64>,
    pub kernel_ids: Vec<usize>,
    pub kernel_set_id: String,
}

impl FeatureMatrix {
    pub fn from_rows(rows: Vec<Vec<f64>>, kernel_ids: Vec<usize>, kernel_set_id: String) -> Result<Self> {
        let n_cols = kernel_ids.len();
        let n_rows = rows.len();
        let mut data = Vec::with_capacity(n_rows * n_cols);
        for (r, row) in rows.into_iter().enumerate() {
            if row.len() != n_cols {
                return Err(Error::Dimension(format!(
                    "row {r} has {} features, expected {n_cols}",
                    row.len()
                )));
            }
            if let Some(c) = row.iter().position(|v| !(0.0..=1.0).contains(v)) {
                return Err(Error::Argument(format!(
                    "feature ({r}, {c}) = {} outside [0, 1]",
                    row[c]
                )));
            }
            data.extend(row);
        }
        Ok(Self {
            n_rows,
            n_cols,
            data,
            kernel_ids,
            kernel_set_id,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.n_cols..(r + 1) * self.n_cols]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks(self.n_cols.max(1)).take(self.n_rows)
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.n_cols + c]
    }

    pub fn to_dmatrix(&self) -> nalgebra::DMatrix<f64> {
        nalgebra::DMatrix::from_row_slice(self.n_rows, self.n_cols, &self.data)
    }

    /// Header of kernel ids (`k1,k2,...`), then one row per instance.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let header: Vec<String> = self.kernel_ids.iter().map(|i| format!("k{i}")).collect();
        out.push_str(&header.join(","));
        out.push('\n');
        for row in self.rows() {
            for (c, v) in row.iter().enumerate() {
                if c > 0 {
                    out.push(',');
                }
                let _ = write!(out, "{v}");
            }
            out.push('\n');
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or(Error::EmptyDataset)?;
        let kernel_ids = header
            .split(',')
            .enumerate()
            .map(|(i, h)| {
                h.trim()
                    .strip_prefix('k')
                    .and_then(|s| s.parse().ok())
                    .ok_or_else(|| Error::Parse {
                        row: 0,
                        field: i,
                        message: format!("bad kernel id {h:?}"),
                    })
            })
            .collect::<Result<Vec<usize>>>()?;
        let rows = lines
            .enumerate()
            .map(|(r, line)| {
                line.split(',')
                    .enumerate()
                    .map(|(c, f)| {
                        f.trim().parse::<f64>().map_err(|_| Error::Parse {
                            row: r + 1,
                            field: c,
                            message: format!("non-numeric feature {f:?}"),
                        })
                    })
                    .collect::<Result<Vec<f64>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_rows(rows, kernel_ids, String::new())
    }

    /// Keeps only the listed rows, in the given order.
    pub fn select_rows(&self, idx: &[usize]) -> Self {
        let mut data = Vec::with_capacity(idx.len() * self.n_cols);
        for &r in idx {
            data.extend_from_slice(self.row(r));
        }
        Self {
            n_rows: idx.len(),
            n_cols: self.n_cols,
            data,
            kernel_ids: self.kernel_ids.clone(),
            kernel_set_id: self.kernel_set_id.clone(),
        }
    }
}

/// JSON form of a feature matrix with enough provenance to regenerate it.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FeatureEnvelope {
    pub schema_version: u32,
    pub generator: String,
    pub kernel_set_id: String,
    pub config: TransformConfig,
    pub labels: Vec<String>,
    pub kernel_ids: Vec<usize>,
    pub rows: Vec<Vec<f64>>,
}

impl FeatureEnvelope {
    pub fn new(fm: &FeatureMatrix, cfg: &TransformConfig, labels: Vec<String>) -> Self {
        Self {
            schema_version: crate::SCHEMA_VERSION,
            generator: rng::GENERATOR.to_string(),
            kernel_set_id: fm.kernel_set_id.clone(),
            config: cfg.clone(),
            labels,
            kernel_ids: fm.kernel_ids.clone(),
            rows: fm.rows().map(<[f64]>::to_vec).collect(),
        }
    }
}

/// Applies a fixed kernel set to every instance. Rows are computed in
/// parallel; placement is by instance index.
pub fn transform_with_kernels(
    ds: &Dataset,
    kernels: &[KernelSpec],
    standardize_inputs: bool,
    kernel_set_id: String,
) -> Result<FeatureMatrix> {
    let rows = ds
        .instances()
        .par_iter()
        .map(|inst| series_features(&inst.series, kernels, standardize_inputs))
        .collect::<Result<Vec<_>>>()?;
    FeatureMatrix::from_rows(rows, kernels.iter().map(|k| k.id).collect(), kernel_set_id)
}

/// Generates kernels against the shortest series in `ds` and transforms it.
pub fn transform(ds: &Dataset, cfg: &TransformConfig) -> Result<FeatureMatrix> {
    let kernels = generate_kernels(cfg, ds.min_len())?;
    transform_with_kernels(ds, &kernels, cfg.standardize_inputs, cfg.kernel_set_id())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::LabeledSeries;
    use proptest::prelude::*;

    fn ts(v: &[f64]) -> TimeSeries {
        TimeSeries::new(v.to_vec()).unwrap()
    }

    fn kernel(w: &[f64], bias: f64, d: usize, p: Padding) -> KernelSpec {
        KernelSpec::new(w.to_vec(), bias, d, p).unwrap()
    }

    fn cfg(l: usize, seed: u64) -> TransformConfig {
        TransformConfig {
            num_kernels: l,
            seed,
            ..TransformConfig::default()
        }
    }

    #[test]
    fn convolve_examples() {
        let id = kernel(&[1.0], 0.0, 1, Padding::Zero);
        assert_eq!(convolve(&ts(&[1.0, 2.0, 3.0]), &id).unwrap().0, vec![1.0, 2.0, 3.0]);

        let sum = kernel(&[1.0, 1.0], 0.0, 1, Padding::None);
        assert_eq!(convolve(&ts(&[1.0, 1.0, 1.0]), &sum).unwrap().0, vec![2.0, 2.0]);

        let wrap = kernel(&[0.0, 1.0], 0.0, 2, Padding::Circular);
        assert_eq!(
            convolve(&ts(&[1.0, 0.0, 0.0, 0.0]), &wrap).unwrap().0,
            vec![0.0, 0.0, 1.0, 0.0]
        );
    }

    #[test]
    fn causal_orientation_and_zero_padding() {
        // y[n] = 1*x[n] + 10*x[n-1]
        let k = kernel(&[1.0, 10.0], 0.5, 1, Padding::Zero);
        assert_eq!(
            convolve(&ts(&[1.0, 2.0, 3.0]), &k).unwrap().0,
            vec![1.5, 12.5, 23.5]
        );
        let k = k.with_padding(Padding::Circular);
        assert_eq!(
            convolve(&ts(&[1.0, 2.0, 3.0]), &k).unwrap().0,
            vec![31.5, 12.5, 23.5]
        );
    }

    #[test]
    fn span_error_names_parameters() {
        let k = kernel(&[1.0; 3], 0.0, 2, Padding::None);
        match convolve(&ts(&[1.0; 4]), &k) {
            Err(Error::Span { k, dilation, span, n }) => assert_eq!((k, dilation, span, n), (3, 2, 5, 4)),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn ppv_examples() {
        assert_eq!(ppv(&ConvolvedSeries(vec![1.0, -1.0, 2.0, -2.0])).unwrap(), 0.5);
        assert_eq!(ppv(&ConvolvedSeries(vec![-1.0, -2.0, 0.0])).unwrap(), 0.0);
        assert_eq!(ppv(&ConvolvedSeries(vec![3.0, 3.0, 3.0])).unwrap(), 1.0);
        assert!(ppv(&ConvolvedSeries(vec![])).is_err());
    }

    #[test]
    fn generation_is_deterministic() {
        let a = generate_kernels(&cfg(3, 7), 100).unwrap();
        let b = generate_kernels(&cfg(3, 7), 100).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 3);
        let c = generate_kernels(&cfg(3, 8), 100).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn kernel_i_independent_of_set_size() {
        let small = generate_kernels(&cfg(5, 11), 200).unwrap();
        let large = generate_kernels(&cfg(50, 11), 200).unwrap();
        assert_eq!(&small[..], &large[..5]);
    }

    #[test]
    fn weight_law_variance_matches_one_over_k() {
        let c = TransformConfig {
            num_kernels: 100_000 / 9 + 1,
            kernel_lengths: vec![9],
            seed: 3,
            ..TransformConfig::default()
        };
        let ks = generate_kernels(&c, 100).unwrap();
        let w: Vec<f64> = ks.iter().flat_map(|k| k.weights.iter().copied()).collect();
        assert!(w.len() >= 100_000);
        let n = w.len() as f64;
        let mean = w.iter().sum::<f64>() / n;
        let var = w.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        assert!((var - 1.0 / 9.0).abs() <= 0.05 / 9.0, "var = {var}");
    }

    #[test]
    fn bias_is_uniform_on_minus_one_one() {
        let ks = generate_kernels(&cfg(100_000, 5), 100).unwrap();
        let b: Vec<f64> = ks.iter().map(|k| k.bias).collect();
        let min = b.iter().cloned().fold(f64::MAX, f64::min);
        let max = b.iter().cloned().fold(f64::MIN, f64::max);
        let mean = b.iter().sum::<f64>() / b.len() as f64;
        assert!(min >= -1.0 && max <= 1.0);
        assert!(mean.abs() <= 0.01, "mean = {mean}");
    }

    #[test]
    fn centered_unit_law_has_zero_mean_weights() {
        let c = TransformConfig {
            weight_law: WeightLaw::CenteredUnit,
            ..cfg(20, 1)
        };
        for k in generate_kernels(&c, 100).unwrap() {
            assert!(k.weights.iter().sum::<f64>().abs() < 1e-12);
        }
    }

    #[test]
    fn exponential_dilation_stays_within_span() {
        for n in [9usize, 10, 24, 80, 500] {
            let ks = generate_kernels(&cfg(500, n as u64), n).unwrap();
            let max_seen = ks.iter().map(|k| k.dilation).max().unwrap();
            for k in &ks {
                assert!(k.span() <= n);
                assert!(k.dilation.is_power_of_two());
            }
            if n == 500 {
                // K=7 allows u up to floor(log2(499/6)) = 6
                assert_eq!(max_seen, 64);
            }
        }
    }

    #[test]
    fn infeasible_lengths_are_resampled_or_rejected() {
        let c = TransformConfig {
            kernel_lengths: vec![3, 50],
            ..cfg(100, 2)
        };
        let ks = generate_kernels(&c, 10).unwrap();
        assert!(ks.iter().all(|k| k.len() == 3));

        let c = TransformConfig {
            kernel_lengths: vec![9],
            dilation_policy: DilationPolicy::Fixed(4),
            ..cfg(5, 2)
        };
        assert!(matches!(generate_kernels(&c, 20), Err(Error::Config(_))));
        assert!(matches!(generate_kernels(&cfg(0, 2), 20), Err(Error::Config(_))));
    }

    #[test]
    fn identity_kernel_on_positive_series() {
        let ds = Dataset::new(
            "p",
            vec![LabeledSeries {
                label: "a".into(),
                series: ts(&[1.0, 2.0, 3.0]),
            }],
        )
        .unwrap();
        let k = kernel(&[1.0], 0.0, 1, Padding::Zero);
        let fm = transform_with_kernels(&ds, &[k], false, String::new()).unwrap();
        assert_eq!(fm.get(0, 0), 1.0);
    }

    #[test]
    fn transform_is_bit_identical_across_runs() {
        let instances = (0..6)
            .map(|i| LabeledSeries {
                label: (i % 2).to_string(),
                series: ts(&(0..40).map(|t| ((t * (i + 1)) as f64).sin()).collect::<Vec<_>>()),
            })
            .collect();
        let ds = Dataset::new("d", instances).unwrap();
        let c = cfg(64, 42);
        let a = transform(&ds, &c).unwrap();
        let b = transform(&ds, &c).unwrap();
        assert_eq!(a.to_csv(), b.to_csv());
        assert_eq!((a.n_rows(), a.n_cols()), (6, 64));
        assert!(a.rows().flatten().all(|v| (0.0..=1.0).contains(v)));
        assert_eq!(FeatureMatrix::from_csv(&a.to_csv()).unwrap().to_csv(), a.to_csv());
    }

    #[test]
    fn circular_shift_gives_identical_row() {
        let x = ts(&(0..50).map(|t| (t as f64 * 0.37).sin() + 0.1 * t as f64).collect::<Vec<_>>());
        let c = TransformConfig {
            padding_policy: PaddingPolicy::Circular,
            ..cfg(200, 9)
        };
        let ks = generate_kernels(&c, 50).unwrap();
        let base = series_counts(&x, &ks, true).unwrap();
        for shift in [1, 17, 25, 49] {
            assert_eq!(series_counts(&x.circular_shift(shift), &ks, true).unwrap(), base);
        }
    }

    fn kernel_strategy() -> impl Strategy<Value = KernelSpec> {
        (
            prop::collection::vec(-2.0..2.0f64, 1..8),
            -1.0..1.0f64,
            1usize..4,
            prop_oneof![Just(Padding::None), Just(Padding::Zero), Just(Padding::Circular)],
        )
            .prop_map(|(w, b, d, p)| KernelSpec::new(w, b, d, p).unwrap())
    }

    proptest! {
        #[test]
        fn bias_monotone(k in kernel_strategy(), x in prop::collection::vec(-3.0..3.0f64, 30..40), delta in 0.0..2.0f64) {
            let x = ts(&x);
            let lo = convolve(&x, &k).unwrap();
            let hi = convolve(&x, &k.with_bias(k.bias + delta)).unwrap();
            for (a, b) in lo.0.iter().zip(&hi.0) {
                prop_assert!(b >= a);
            }
            prop_assert!(ppv(&hi).unwrap() >= ppv(&lo).unwrap());
        }

        #[test]
        fn stage_one_is_linear(
            k in kernel_strategy(),
            x1 in prop::collection::vec(-3.0..3.0f64, 30),
            x2 in prop::collection::vec(-3.0..3.0f64, 30),
            a in -2.0..2.0f64,
            b in -2.0..2.0f64,
        ) {
            let k0 = k.with_bias(0.0);
            let mix: Vec<f64> = x1.iter().zip(&x2).map(|(u, v)| a * u + b * v).collect();
            let lhs = convolve(&ts(&mix), &k0).unwrap();
            let c1 = convolve(&ts(&x1), &k0).unwrap();
            let c2 = convolve(&ts(&x2), &k0).unwrap();
            for i in 0..lhs.0.len() {
                prop_assert!((lhs.0[i] - (a * c1.0[i] + b * c2.0[i])).abs() <= 1e-9);
            }
        }

        #[test]
        fn output_length_matches_padding(k in kernel_strategy(), n in 22usize..40) {
            let x = ts(&vec![0.5; n]);
            let y = convolve(&x, &k).unwrap();
            let expect = if k.padding == Padding::None { n - k.span() + 1 } else { n };
            prop_assert_eq!(y.0.len(), expect);
            let pc = positive_count(x.values(), &k).unwrap();
            prop_assert_eq!(pc.ppv(), ppv(&y).unwrap());
        }
    }
}
