//! Seeded synthetic data: two-class template datasets and sparse spike signals.

use rand::seq::index::sample;
use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{self, Domain};
use crate::series::{Dataset, LabeledSeries, TimeSeries};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TemplateConfig {
    pub classes: usize,
    pub train_per_class: usize,
    pub test_per_class: usize,
    pub len: usize,
    /// Standard deviation of the per-instance noise.
    pub noise_sigma: f64,
    /// Moving-average width applied to templates and noise.
    pub smooth_width: usize,
    pub seed: u64,
}

impl Default for TemplateConfig {
    fn default() -> Self {
        Self {
            classes: 2,
            train_per_class: 50,
            test_per_class: 50,
            len: 80,
            noise_sigma: 0.3,
            smooth_width: 9,
            seed: 0,
        }
    }
}

/// Centred moving average with wrap-around, so the output keeps length `n`.
fn smooth(x: &[f64], width: usize) -> Vec<f64> {
    if width <= 1 {
        return x.to_vec();
    }
    let n = x.len() as isize;
    let half = (width / 2) as isize;
    (0..n)
        .map(|i| {
            let s: f64 = (i - half..i - half + width as isize)
                .map(|j| x[j.rem_euclid(n) as usize])
                .sum();
            s / width as f64
        })
        .collect()
}

fn white(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| StandardNormal.sample(rng)).collect()
}

/// Rescales to zero mean and unit population variance.
fn unit(x: Vec<f64>) -> Vec<f64> {
    let n = x.len() as f64;
    let m = x.iter().sum::<f64>() / n;
    let sd = (x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / n).sqrt();
    x.into_iter().map(|v| (v - m) / sd).collect()
}

/// Each class has a smoothed random template of unit variance; every instance
/// is its class template plus smoothed Gaussian noise of standard deviation
/// `noise_sigma`. Instances are interleaved by class. Returns `(train, test)`.
pub fn template_dataset(cfg: &TemplateConfig) -> Result<(Dataset, Dataset)> {
    if cfg.classes < 2 || cfg.len < 2 || cfg.train_per_class == 0 || cfg.test_per_class == 0 {
        return Err(Error::Argument(
            "template dataset needs >= 2 classes, length >= 2 and non-empty splits".into(),
        ));
    }
    if !(cfg.noise_sigma >= 0.0 && cfg.noise_sigma.is_finite()) {
        return Err(Error::Argument(format!("noise sigma {} is invalid", cfg.noise_sigma)));
    }
    let width = cfg.smooth_width.max(1);
    let templates: Vec<Vec<f64>> = (0..cfg.classes)
        .map(|c| {
            let mut rng = rng::stream(cfg.seed, Domain::Synthetic, c as u64);
            let mut t = smooth(&white(&mut rng, cfg.len), 2 * width + 1);
            if t.iter().all(|v| *v == t[0]) {
                t[0] += 1.0;
            }
            unit(t)
        })
        .collect();

    // noise smoothing by `width` shrinks the variance by 1/width; undo that
    let gain = cfg.noise_sigma * (width as f64).sqrt();
    let split = |name: &str, per_class: usize, offset: u64| -> Result<Dataset> {
        let mut instances = Vec::with_capacity(per_class * cfg.classes);
        for i in 0..per_class {
            for (c, t) in templates.iter().enumerate() {
                let id = offset + (i * cfg.classes + c) as u64;
                let mut rng = rng::stream(cfg.seed, Domain::Noise, id);
                let noise = smooth(&white(&mut rng, cfg.len), width);
                let values = t.iter().zip(&noise).map(|(a, e)| a + gain * e).collect();
                instances.push(LabeledSeries {
                    label: format!("class{c}"),
                    series: TimeSeries::new(values)?,
                });
            }
        }
        Dataset::new(name, instances)
    };
    let train = split("synthetic_train", cfg.train_per_class, 0)?;
    let test = split("synthetic_test", cfg.test_per_class, 1 << 32)?;
    Ok((train, test))
}

/// Standardized sparse vector: `s` nonzeros at random positions, half `+a`
/// and half `-a` with `a = sqrt(n / s)`, zero elsewhere. `s` must be even.
pub fn balanced_sparse(n: usize, s: usize, seed: u64) -> Result<Vec<f64>> {
    if s == 0 || !s.is_multiple_of(2) || s > n {
        return Err(Error::Argument(format!("need an even sparsity 0 < s <= n, got s={s}, n={n}")));
    }
    let mut rng = rng::stream(seed, Domain::Synthetic, 1);
    let a = (n as f64 / s as f64).sqrt();
    let mut x = vec![0.0; n];
    for (i, pos) in sample(&mut rng, n, s).into_iter().enumerate() {
        x[pos] = if i % 2 == 0 { a } else { -a };
    }
    Ok(x)
}

/// Signal with `spikes` positive spikes of amplitude in `[amp_lo, amp_hi]` on
/// top of `N(0, sigma^2)` noise. Returns the signal and the sorted spike
/// positions.
pub fn noisy_spikes(
    n: usize,
    spikes: usize,
    amp_lo: f64,
    amp_hi: f64,
    sigma: f64,
    seed: u64,
) -> Result<(Vec<f64>, Vec<usize>)> {
    if spikes > n || !(amp_lo <= amp_hi) || !(sigma >= 0.0) {
        return Err(Error::Argument("invalid spike signal parameters".into()));
    }
    let mut rng = rng::stream(seed, Domain::Synthetic, 2);
    let noise = Normal::new(0.0, sigma).map_err(|e| Error::Argument(e.to_string()))?;
    let mut x: Vec<f64> = (0..n).map(|_| noise.sample(&mut rng)).collect();
    let mut pos = sample(&mut rng, n, spikes).into_vec();
    pos.sort_unstable();
    for &p in &pos {
        x[p] += rng.random_range(amp_lo..=amp_hi);
    }
    Ok((x, pos))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn template_dataset_shapes_and_determinism() {
        let cfg = TemplateConfig::default();
        let (train, test) = template_dataset(&cfg).unwrap();
        assert_eq!((train.len(), test.len()), (100, 100));
        assert_eq!(train.common_len().unwrap(), 80);
        assert_eq!(train.labels()[..4], ["class0", "class1", "class0", "class1"]);
        let (again, _) = template_dataset(&cfg).unwrap();
        assert_eq!(train, again);
        assert_ne!(train.instances()[0].series, test.instances()[0].series);
    }

    #[test]
    fn smoothing_preserves_constants() {
        assert_eq!(smooth(&[2.0; 7], 3), vec![2.0; 7]);
        assert_eq!(smooth(&[0.0, 3.0, 0.0], 3), vec![1.0; 3]);
    }

    #[test]
    fn balanced_sparse_is_standardized() {
        for s in [2, 4, 10, 80] {
            let x = balanced_sparse(80, s, 3).unwrap();
            let mean = x.iter().sum::<f64>() / 80.0;
            let var = x.iter().map(|v| v * v).sum::<f64>() / 80.0;
            assert!(mean.abs() < 1e-12 && (var - 1.0).abs() < 1e-12);
            assert_eq!(x.iter().filter(|v| **v > 0.0).count(), s / 2);
            assert_eq!(x.iter().filter(|v| **v < 0.0).count(), s / 2);
        }
        assert!(balanced_sparse(10, 3, 0).is_err());
        assert!(balanced_sparse(10, 12, 0).is_err());
    }

    #[test]
    fn noisy_spikes_positions() {
        let (x, pos) = noisy_spikes(100, 3, 1.0, 3.0, 0.05, 7).unwrap();
        assert_eq!(pos.len(), 3);
        assert!(pos.iter().all(|p| x[*p] > 0.8));
    }
}
