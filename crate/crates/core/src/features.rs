//! Ridge classification of PPV features and PCA effective dimensionality.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::FeatureMatrix;

/// Ten log-spaced values in `[1e-3, 1e3]`.
pub fn default_lambda_grid() -> Vec<f64> {
    (0..10).map(|i| 10f64.powf(-3.0 + 6.0 * i as f64 / 9.0)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RidgeOptions {
    pub lambda_grid: Vec<f64>,
    pub folds: usize,
}

impl Default for RidgeOptions {
    fn default() -> Self {
        Self {
            lambda_grid: default_lambda_grid(),
            folds: 5,
        }
    }
}

/// One-vs-rest ridge regression on `+-1` targets over standardized columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RidgeModel {
    pub schema_version: u32,
    /// Class labels; position is the class index used for tie-breaking.
    pub labels: Vec<String>,
    pub lambda: f64,
    /// `num_classes x L`.
    pub weights: Vec<Vec<f64>>,
    pub intercepts: Vec<f64>,
    pub feature_mean: Vec<f64>,
    pub feature_scale: Vec<f64>,
    pub kernel_ids: Vec<usize>,
    /// `(lambda, cross-validated accuracy)`; empty when CV was skipped.
    pub cv_accuracy: Vec<(f64, f64)>,
}

#[derive(Debug, Clone)]
struct Standardizer {
    mean: Vec<f64>,
    scale: Vec<f64>,
}

impl Standardizer {
    fn fit(x: &DMatrix<f64>) -> Self {
        let n = x.nrows() as f64;
        let (mean, scale) = x
            .column_iter()
            .map(|c| {
                let m = c.sum() / n;
                let sd = (c.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / n).sqrt();
                // constant columns keep unit scale and end up all-zero
                let s = if sd <= 1e-12 * m.abs().max(1.0) { 1.0 } else { sd };
                (m, s)
            })
            .unzip();
        Self { mean, scale }
    }

    fn apply(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        let mut out = x.clone();
        for (j, mut col) in out.column_iter_mut().enumerate() {
            let (m, s) = (self.mean[j], self.scale[j]);
            col.apply(|v| *v = (*v - m) / s);
        }
        out
    }
}

/// Closed-form ridge solutions for any lambda from one eigendecomposition.
///
/// With `p <= n` it decomposes `X^T X`; otherwise `X X^T`, using
/// `(X^T X + lI)^-1 X^T = X^T (X X^T + lI)^-1`.
struct RidgeSolver {
    eigenvalues: DVector<f64>,
    /// Primal: `V`; dual: `X^T U`.
    left: DMatrix<f64>,
    /// Primal: `V^T X^T Y`; dual: `U^T Y`.
    right: DMatrix<f64>,
}

impl RidgeSolver {
    fn new(x: &DMatrix<f64>, y: &DMatrix<f64>) -> Self {
        if x.ncols() <= x.nrows() {
            let eig = SymmetricEigen::new(x.tr_mul(x));
            let right = eig.eigenvectors.tr_mul(&x.tr_mul(y));
            Self {
                eigenvalues: eig.eigenvalues,
                left: eig.eigenvectors,
                right,
            }
        } else {
            let eig = SymmetricEigen::new(x * x.transpose());
            let right = eig.eigenvectors.tr_mul(y);
            Self {
                eigenvalues: eig.eigenvalues,
                left: x.tr_mul(&eig.eigenvectors),
                right,
            }
        }
    }

    /// `p x C` weight matrix for `lambda`.
    fn weights(&self, lambda: f64) -> DMatrix<f64> {
        let mut scaled = self.right.clone();
        for (i, mut row) in scaled.row_iter_mut().enumerate() {
            row /= self.eigenvalues[i].max(0.0) + lambda;
        }
        &self.left * scaled
    }
}

fn label_index(labels: &[String]) -> (Vec<String>, Vec<usize>) {
    let classes: Vec<String> = labels
        .iter()
        .cloned()
        .collect::<std::collections::BTreeSet<_>>()
        .into_iter()
        .collect();
    let lookup: BTreeMap<&str, usize> = classes.iter().enumerate().map(|(i, c)| (c.as_str(), i)).collect();
    let idx = labels.iter().map(|l| lookup[l.as_str()]).collect();
    (classes, idx)
}

fn targets(idx: &[usize], classes: usize) -> DMatrix<f64> {
    DMatrix::from_fn(idx.len(), classes, |r, c| if idx[r] == c { 1.0 } else { -1.0 })
}

struct Fitted {
    std: Standardizer,
    solver: RidgeSolver,
    intercepts: DVector<f64>,
}

fn fit_core(x: &DMatrix<f64>, y: &DMatrix<f64>) -> Fitted {
    let std = Standardizer::fit(x);
    let xs = std.apply(x);
    let intercepts = DVector::from_iterator(y.ncols(), y.column_iter().map(|c| c.mean()));
    let mut yc = y.clone();
    for (j, mut col) in yc.column_iter_mut().enumerate() {
        col.add_scalar_mut(-intercepts[j]);
    }
    Fitted {
        solver: RidgeSolver::new(&xs, &yc),
        std,
        intercepts,
    }
}

fn scores(xs: &DMatrix<f64>, w: &DMatrix<f64>, b: &DVector<f64>) -> DMatrix<f64> {
    let mut s = xs * w;
    for mut row in s.row_iter_mut() {
        row += b.transpose();
    }
    s
}

/// Row-wise argmax; ties go to the lowest class index.
fn argmax_rows(s: &DMatrix<f64>) -> Vec<usize> {
    s.row_iter()
        .map(|row| {
            let mut best = 0;
            for c in 1..row.len() {
                if row[c] > row[best] {
                    best = c;
                }
            }
            best
        })
        .collect()
}

/// Deterministic stratified fold assignment: instances of each class are dealt
/// round-robin in their original order.
fn fold_of(idx: &[usize], folds: usize) -> Vec<usize> {
    let mut seen: BTreeMap<usize, usize> = BTreeMap::new();
    idx.iter()
        .map(|c| {
            let k = seen.entry(*c).or_insert(0);
            let f = *k % folds;
            *k += 1;
            f
        })
        .collect()
}

fn select_rows(x: &DMatrix<f64>, rows: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), x.ncols(), |r, c| x[(rows[r], c)])
}

/// Fits on a dense design matrix; see [`fit_ridge`].
pub fn fit_ridge_dense(x: &DMatrix<f64>, labels: &[String], opts: &RidgeOptions) -> Result<RidgeModel> {
    let n = x.nrows();
    if labels.len() != n {
        return Err(Error::Dimension(format!("{} labels for {n} instances", labels.len())));
    }
    if opts.lambda_grid.is_empty() {
        return Err(Error::Argument("lambda grid is empty".into()));
    }
    if let Some(l) = opts.lambda_grid.iter().find(|l| !(**l > 0.0 && l.is_finite())) {
        return Err(Error::Argument(format!("lambda must be positive and finite, got {l}")));
    }
    let (classes, idx) = label_index(labels);
    if classes.len() < 2 {
        return Err(Error::Argument(format!(
            "ridge classifier needs at least 2 classes, found {}",
            classes.len()
        )));
    }
    let y = targets(&idx, classes.len());

    let mut grid = opts.lambda_grid.clone();
    grid.sort_by(f64::total_cmp);
    grid.dedup();

    let mut cv_accuracy = Vec::new();
    let lambda = if grid.len() == 1 {
        grid[0]
    } else {
        if opts.folds < 2 {
            return Err(Error::Argument("cross-validation needs at least 2 folds".into()));
        }
        if n < 2 * opts.folds {
            return Err(Error::Argument(format!(
                "{n} instances is too few for {} folds (need {})",
                opts.folds,
                2 * opts.folds
            )));
        }
        let fold = fold_of(&idx, opts.folds);
        let mut correct = vec![0usize; grid.len()];
        for f in 0..opts.folds {
            let train: Vec<usize> = (0..n).filter(|&i| fold[i] != f).collect();
            let valid: Vec<usize> = (0..n).filter(|&i| fold[i] == f).collect();
            if valid.is_empty() {
                continue;
            }
            let fitted = fit_core(&select_rows(x, &train), &select_rows(&y, &train));
            let xv = fitted.std.apply(&select_rows(x, &valid));
            for (g, &lam) in grid.iter().enumerate() {
                let pred = argmax_rows(&scores(&xv, &fitted.solver.weights(lam), &fitted.intercepts));
                correct[g] += pred.iter().zip(&valid).filter(|(p, v)| **p == idx[**v]).count();
            }
        }
        cv_accuracy = grid
            .iter()
            .zip(&correct)
            .map(|(l, c)| (*l, *c as f64 / n as f64))
            .collect();
        // first maximum in ascending lambda order, so ties go to the smaller lambda
        let best = (0..grid.len()).fold(0, |b, g| if correct[g] > correct[b] { g } else { b });
        grid[best]
    };

    let fitted = fit_core(x, &y);
    let w = fitted.solver.weights(lambda);
    Ok(RidgeModel {
        schema_version: crate::SCHEMA_VERSION,
        labels: classes,
        lambda,
        weights: w.column_iter().map(|c| c.iter().copied().collect()).collect(),
        intercepts: fitted.intercepts.iter().copied().collect(),
        feature_mean: fitted.std.mean,
        feature_scale: fitted.std.scale,
        kernel_ids: Vec::new(),
        cv_accuracy,
    })
}

/// One-vs-rest ridge classifier; lambda picked by stratified k-fold CV
/// accuracy unless the grid has a single value.
pub fn fit_ridge(train: &FeatureMatrix, labels: &[String], opts: &RidgeOptions) -> Result<RidgeModel> {
    let mut model = fit_ridge_dense(&train.to_dmatrix(), labels, opts)?;
    model.kernel_ids = train.kernel_ids.clone();
    Ok(model)
}

impl RidgeModel {
    pub fn num_features(&self) -> usize {
        self.feature_mean.len()
    }

    /// Per-class scores, `instances x classes`.
    pub fn decision_function(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if x.ncols() != self.num_features() {
            return Err(Error::Dimension(format!(
                "model expects {} features, got {}",
                self.num_features(),
                x.ncols()
            )));
        }
        let std = Standardizer {
            mean: self.feature_mean.clone(),
            scale: self.feature_scale.clone(),
        };
        let w = DMatrix::from_fn(self.num_features(), self.labels.len(), |r, c| self.weights[c][r]);
        let b = DVector::from_column_slice(&self.intercepts);
        Ok(scores(&std.apply(x), &w, &b))
    }

    pub fn predict_dense(&self, x: &DMatrix<f64>) -> Result<Vec<String>> {
        Ok(argmax_rows(&self.decision_function(x)?)
            .into_iter()
            .map(|c| self.labels[c].clone())
            .collect())
    }
}

pub fn predict(model: &RidgeModel, features: &FeatureMatrix) -> Result<Vec<String>> {
    model.predict_dense(&features.to_dmatrix())
}

pub fn accuracy(predicted: &[String], truth: &[String]) -> f64 {
    let hits = predicted.iter().zip(truth).filter(|(a, b)| a == b).count();
    hits as f64 / truth.len().max(1) as f64
}

/// Counts indexed `[true][predicted]` over `labels`.
pub fn confusion(labels: &[String], predicted: &[String], truth: &[String]) -> Vec<Vec<usize>> {
    let pos = |l: &String| labels.iter().position(|x| x == l);
    let mut m = vec![vec![0; labels.len()]; labels.len()];
    for (p, t) in predicted.iter().zip(truth) {
        if let (Some(pi), Some(ti)) = (pos(p), pos(t)) {
            m[ti][pi] += 1;
        }
    }
    m
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaReport {
    /// Descending, restricted to numerically nonzero components.
    pub explained_variance_ratio: Vec<f64>,
    /// `(threshold, components needed)` for each requested threshold.
    pub components: Vec<(f64, usize)>,
    pub k90: usize,
    pub k95: usize,
    pub rank: usize,
    pub instances: usize,
    pub total_features: usize,
}

/// Singular values of `x`, descending. Wide matrices are first reduced to the
/// `R` factor of a QR decomposition of `x^T`, which has the same spectrum.
fn singular_values(x: &DMatrix<f64>) -> Vec<f64> {
    let sv = if x.ncols() > x.nrows() {
        let r = x.transpose().qr().r();
        r.singular_values()
    } else {
        x.singular_values()
    };
    let mut v: Vec<f64> = sv.iter().copied().collect();
    v.sort_by(|a, b| b.total_cmp(a));
    v
}

fn components_for(cumulative: &[f64], threshold: f64) -> usize {
    cumulative
        .iter()
        .position(|c| *c >= threshold - 1e-12)
        .map_or(cumulative.len(), |i| i + 1)
}

/// Explained-variance spectrum of the column-centred matrix and the number of
/// leading components reaching each threshold.
pub fn pca_effective_dim_dense(x: &DMatrix<f64>, thresholds: &[f64]) -> Result<PcaReport> {
    if x.nrows() < 2 {
        return Err(Error::Argument(format!("PCA needs at least 2 instances, got {}", x.nrows())));
    }
    if let Some(t) = thresholds.iter().find(|t| !(**t > 0.0 && **t <= 1.0)) {
        return Err(Error::Argument(format!("threshold {t} outside (0, 1]")));
    }
    let mut centred = x.clone();
    for mut col in centred.column_iter_mut() {
        let m = col.mean();
        col.add_scalar_mut(-m);
    }
    let sv = singular_values(&centred);
    let energy: Vec<f64> = sv.iter().map(|s| s * s).collect();
    let total: f64 = energy.iter().sum();
    let cutoff = total * 1e-24 * (x.nrows().max(x.ncols()) as f64);
    let ratio: Vec<f64> = if total > 0.0 {
        energy.iter().filter(|e| **e > cutoff).map(|e| e / total).collect()
    } else {
        Vec::new()
    };
    let cumulative: Vec<f64> = ratio
        .iter()
        .scan(0.0, |acc, r| {
            *acc += r;
            Some(*acc)
        })
        .collect();
    Ok(PcaReport {
        components: thresholds.iter().map(|t| (*t, components_for(&cumulative, *t))).collect(),
        k90: components_for(&cumulative, 0.90),
        k95: components_for(&cumulative, 0.95),
        rank: ratio.len(),
        explained_variance_ratio: ratio,
        instances: x.nrows(),
        total_features: x.ncols(),
    })
}

pub fn pca_effective_dim(features: &FeatureMatrix, thresholds: &[f64]) -> Result<PcaReport> {
    pca_effective_dim_dense(&features.to_dmatrix(), thresholds)
}

/// min / quartiles / max with linear interpolation between order statistics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FiveNumber {
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
}

impl FiveNumber {
    pub fn from_values(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        let q = |p: f64| {
            let pos = p * (v.len() - 1) as f64;
            let lo = pos.floor() as usize;
            let hi = pos.ceil() as usize;
            v[lo] + (v[hi] - v[lo]) * (pos - lo as f64)
        };
        Some(Self {
            min: v[0],
            q1: q(0.25),
            median: q(0.5),
            q3: q(0.75),
            max: v[v.len() - 1],
        })
    }
}

/// Text summary of k90/k95 across datasets, one row per statistic.
pub fn render_dimension_summary(reports: &[(String, PcaReport)]) -> String {
    let k90: Vec<f64> = reports.iter().map(|(_, r)| r.k90 as f64).collect();
    let k95: Vec<f64> = reports.iter().map(|(_, r)| r.k95 as f64).collect();
    let mut out = String::new();
    let _ = writeln!(out, "{:<14} {:>8} {:>8}", "statistic", "90%", "95%");
    if let (Some(a), Some(b)) = (FiveNumber::from_values(&k90), FiveNumber::from_values(&k95)) {
        for (name, x, y) in [
            ("Min", a.min, b.min),
            ("Q1", a.q1, b.q1),
            ("Median (Q2)", a.median, b.median),
            ("Q3", a.q3, b.q3),
            ("Max", a.max, b.max),
        ] {
            let _ = writeln!(out, "{name:<14} {x:>8} {y:>8}");
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{self, Domain};
    use proptest::prelude::*;
    use rand_distr::{Distribution, StandardNormal};

    fn labels(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    fn gaussian(rows: usize, cols: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = rng::stream(seed, Domain::Synthetic, 0);
        DMatrix::from_fn(rows, cols, |_, _| StandardNormal.sample(&mut rng))
    }

    fn separable(n: usize, p: usize, seed: u64) -> (DMatrix<f64>, Vec<String>) {
        let mut x = gaussian(n, p, seed);
        let y: Vec<String> = (0..n).map(|i| if i % 2 == 0 { "a" } else { "b" }.to_string()).collect();
        for i in 0..n {
            x[(i, 0)] += if i % 2 == 0 { 6.0 } else { -6.0 };
        }
        (x, y)
    }

    #[test]
    fn lambda_grid_default() {
        let g = default_lambda_grid();
        assert_eq!(g.len(), 10);
        assert!((g[0] - 1e-3).abs() < 1e-15 && (g[9] - 1e3).abs() < 1e-9);
    }

    #[test]
    fn separable_training_accuracy_is_one() {
        for p in [5, 60] {
            let (x, y) = separable(40, p, 1);
            let m = fit_ridge_dense(&x, &y, &RidgeOptions::default()).unwrap();
            assert_eq!(accuracy(&m.predict_dense(&x).unwrap(), &y), 1.0);
            assert_eq!(m.cv_accuracy.len(), 10);
        }
    }

    #[test]
    fn rejects_single_class_and_bad_lambda() {
        let x = gaussian(10, 3, 2);
        let one = vec!["a".to_string(); 10];
        assert!(fit_ridge_dense(&x, &one, &RidgeOptions::default()).is_err());
        let (x, y) = separable(10, 3, 2);
        let bad = RidgeOptions {
            lambda_grid: vec![0.0],
            folds: 2,
        };
        assert!(fit_ridge_dense(&x, &y, &bad).is_err());
        let few = RidgeOptions {
            folds: 6,
            ..RidgeOptions::default()
        };
        assert!(fit_ridge_dense(&x, &y, &few).is_err());
    }

    #[test]
    fn closed_form_matches_brute_force() {
        // tall (primal path) and wide (dual path)
        for (n, p) in [(12usize, 4usize), (8, 15)] {
            let x = gaussian(n, p, 3);
            let y: Vec<String> = (0..n).map(|i| ["a", "b", "c"][i % 3].to_string()).collect();
            let lambda = 0.7;
            let m = fit_ridge_dense(
                &x,
                &y,
                &RidgeOptions {
                    lambda_grid: vec![lambda],
                    folds: 2,
                },
            )
            .unwrap();

            let std = Standardizer::fit(&x);
            let xs = std.apply(&x);
            let (_, idx) = label_index(&y);
            let t = targets(&idx, 3);
            let a = xs.tr_mul(&xs) + DMatrix::<f64>::identity(p, p) * lambda;
            let a_inv = a.try_inverse().unwrap();
            for c in 0..3 {
                let mut yc = t.column(c).clone_owned();
                let mean = yc.mean();
                yc.add_scalar_mut(-mean);
                let w = &a_inv * xs.tr_mul(&yc);
                for r in 0..p {
                    assert!((w[r] - m.weights[c][r]).abs() < 1e-8, "n={n} p={p}");
                }
                assert!((m.intercepts[c] - mean).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn duplicated_columns_match_half_lambda() {
        let (x, y) = separable(30, 20, 4);
        let dup = DMatrix::from_fn(30, 40, |r, c| x[(r, c % 20)]);
        let opts = |l| RidgeOptions {
            lambda_grid: vec![l],
            folds: 2,
        };
        let base = fit_ridge_dense(&x, &y, &opts(0.5)).unwrap();
        let doubled = fit_ridge_dense(&dup, &y, &opts(1.0)).unwrap();
        let s1 = base.decision_function(&x).unwrap();
        let s2 = doubled.decision_function(&dup).unwrap();
        assert!((s1 - s2).abs().max() < 1e-8);

        let cv1 = fit_ridge_dense(&x, &y, &RidgeOptions::default()).unwrap();
        let cv2 = fit_ridge_dense(&dup, &y, &RidgeOptions::default()).unwrap();
        let (xt, _) = separable(30, 20, 5);
        let xt2 = DMatrix::from_fn(30, 40, |r, c| xt[(r, c % 20)]);
        assert_eq!(cv1.predict_dense(&xt).unwrap(), cv2.predict_dense(&xt2).unwrap());
    }

    #[test]
    fn huge_lambda_predicts_majority() {
        let x = gaussian(21, 6, 6);
        let y: Vec<String> = (0..21).map(|i| if i < 13 { "maj" } else { "min" }.to_string()).collect();
        let m = fit_ridge_dense(
            &x,
            &y,
            &RidgeOptions {
                lambda_grid: vec![1e12],
                folds: 2,
            },
        )
        .unwrap();
        assert!(m.predict_dense(&gaussian(15, 6, 7)).unwrap().iter().all(|l| l == "maj"));
    }

    #[test]
    fn zero_weights_give_majority_and_ties_go_to_first_class() {
        let model = RidgeModel {
            schema_version: 1,
            labels: labels(&["a", "b"]),
            lambda: 1.0,
            weights: vec![vec![0.0; 3], vec![0.0; 3]],
            intercepts: vec![-0.2, 0.2],
            feature_mean: vec![0.0; 3],
            feature_scale: vec![1.0; 3],
            kernel_ids: vec![],
            cv_accuracy: vec![],
        };
        let row = DMatrix::from_element(1, 3, 0.5);
        assert_eq!(model.predict_dense(&row).unwrap(), labels(&["b"]));
        let tie = RidgeModel {
            intercepts: vec![0.0, 0.0],
            ..model.clone()
        };
        assert_eq!(tie.predict_dense(&row).unwrap(), labels(&["a"]));
        assert!(matches!(model.predict_dense(&DMatrix::zeros(1, 4)), Err(Error::Dimension(_))));
    }

    #[test]
    fn prediction_permutes_with_rows() {
        let (x, y) = separable(20, 8, 8);
        let m = fit_ridge_dense(&x, &y, &RidgeOptions::default()).unwrap();
        let perm: Vec<usize> = (0..20).rev().collect();
        let a = m.predict_dense(&x).unwrap();
        let b = m.predict_dense(&select_rows(&x, &perm)).unwrap();
        for (i, &p) in perm.iter().enumerate() {
            assert_eq!(b[i], a[p]);
        }
    }

    #[test]
    fn constant_columns_are_neutralized() {
        let (mut x, y) = separable(20, 4, 9);
        x.column_mut(3).fill(0.37);
        let m = fit_ridge_dense(&x, &y, &RidgeOptions::default()).unwrap();
        assert_eq!(m.feature_scale[3], 1.0);
        assert!(m.weights.iter().all(|w| w[3].abs() < 1e-12));
    }

    #[test]
    fn ridge_model_json_round_trip() {
        let (x, y) = separable(20, 4, 10);
        let m = fit_ridge_dense(&x, &y, &RidgeOptions::default()).unwrap();
        let back: RidgeModel = serde_json::from_str(&serde_json::to_string(&m).unwrap()).unwrap();
        assert_eq!(back.predict_dense(&x).unwrap(), m.predict_dense(&x).unwrap());
    }

    #[test]
    fn rank_one_data_needs_one_component() {
        let pattern = [0.3, -1.0, 2.0, 0.5, 0.0];
        let mean = [1.0, 1.0, -2.0, 0.0, 4.0];
        let x = DMatrix::from_fn(12, 5, |r, c| mean[c] + (r as f64 - 5.5) * pattern[c]);
        let rep = pca_effective_dim_dense(&x, &[0.5, 0.9]).unwrap();
        assert_eq!((rep.k90, rep.k95, rep.rank), (1, 1, 1));
        assert_eq!(rep.components, vec![(0.5, 1), (0.9, 1)]);
    }

    #[test]
    fn isotropic_features_have_flat_spectrum() {
        // n >> p: nearly flat spectrum, so k90 ~ 0.9 p
        let x = gaussian(4000, 20, 11);
        let rep = pca_effective_dim_dense(&x, &[]).unwrap();
        assert_eq!(rep.rank, 20);
        assert!((16..=19).contains(&rep.k90), "k90 = {}", rep.k90);
    }

    #[test]
    fn wide_matrix_spectrum_matches_direct_svd() {
        let x = gaussian(15, 200, 12);
        let direct = {
            let mut v: Vec<f64> = x.clone().singular_values().iter().copied().collect();
            v.sort_by(|a, b| b.total_cmp(a));
            v
        };
        let via_qr = singular_values(&x);
        for (a, b) in direct.iter().zip(&via_qr) {
            assert!((a - b).abs() < 1e-9 * direct[0]);
        }
    }

    #[test]
    fn pca_validation() {
        assert!(pca_effective_dim_dense(&gaussian(1, 4, 1), &[0.9]).is_err());
        assert!(pca_effective_dim_dense(&gaussian(5, 4, 1), &[0.0]).is_err());
        assert!(pca_effective_dim_dense(&gaussian(5, 4, 1), &[1.5]).is_err());
        let flat = pca_effective_dim_dense(&DMatrix::from_element(5, 3, 2.0), &[0.9]).unwrap();
        assert_eq!(flat.rank, 0);
    }

    #[test]
    fn five_number_summary() {
        let s = FiveNumber::from_values(&[1.0, 2.0, 3.0, 4.0, 5.0]).unwrap();
        assert_eq!((s.min, s.q1, s.median, s.q3, s.max), (1.0, 2.0, 3.0, 4.0, 5.0));
        let s = FiveNumber::from_values(&[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!((s.q1, s.median, s.q3), (1.75, 2.5, 3.25));
        assert!(FiveNumber::from_values(&[]).is_none());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn pca_invariants(seed in 0u64..1000, rows in 3usize..20, cols in 2usize..30, shift in -5.0..5.0f64, col in 0usize..30) {
            let x = gaussian(rows, cols, seed);
            let rep = pca_effective_dim_dense(&x, &[0.9, 0.95]).unwrap();
            let r = &rep.explained_variance_ratio;
            prop_assert!(r.windows(2).all(|w| w[0] >= w[1]));
            prop_assert!(r.iter().all(|v| *v >= 0.0));
            prop_assert!(r.iter().sum::<f64>() <= 1.0 + 1e-9);
            prop_assert!(rep.k90 <= rep.k95 && rep.k95 <= rep.rank && rep.rank <= (rows - 1).min(cols));

            let perm: Vec<usize> = (0..rows).rev().collect();
            let permuted = pca_effective_dim_dense(&select_rows(&x, &perm), &[0.9, 0.95]).unwrap();
            prop_assert_eq!((permuted.k90, permuted.k95), (rep.k90, rep.k95));

            let mut moved = x.clone();
            moved.column_mut(col % cols).add_scalar_mut(shift);
            let moved = pca_effective_dim_dense(&moved, &[0.9, 0.95]).unwrap();
            prop_assert_eq!((moved.k90, moved.k95), (rep.k90, rep.k95));
            for (a, b) in moved.explained_variance_ratio.iter().zip(r) {
                prop_assert!((a - b).abs() < 1e-9);
            }
        }

        #[test]
        fn argmax_invariant_to_positive_rescaling(vals in prop::collection::vec(-3.0..3.0f64, 12), scale in 0.01..100.0f64) {
            let s = DMatrix::from_row_slice(4, 3, &vals);
            prop_assert_eq!(argmax_rows(&s), argmax_rows(&(s.clone() * scale)));
        }
    }
}
