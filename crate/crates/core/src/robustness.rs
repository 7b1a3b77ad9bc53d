//! Noise-robustness certificates and shift-invariance checks for the full
//! transform `x -> [PPV(x * h_l + b_l)]_l`.
//!
//! Every feature difference lies in `[-1, 1]`, so `|Phi g - Phi f|^2 <= L`.
//! For Gaussian noise `|g - f|^2 ~ sigma^2 chi2_N`, which exceeds its lower
//! `alpha`-quantile with probability `1 - alpha`; together these bound the
//! squared ratio by `L / (sigma^2 x2_{N,alpha})` with the same probability.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{generate_kernels, series_counts, KernelSpec, PaddingPolicy, PositiveCount, TransformConfig};
use crate::rng::{self, Domain};
use crate::series::TimeSeries;
use crate::special;

/// `q` with `P(chi2_dof <= q) = alpha`, i.e. `P(chi2_dof > q) = 1 - alpha`.
pub fn chi2_lower_quantile(dof: usize, alpha: f64) -> Result<f64> {
    if dof == 0 {
        return Err(Error::Argument("degrees of freedom must be >= 1".into()));
    }
    if !(alpha > 0.0 && alpha <= 0.5) {
        return Err(Error::Argument(format!("alpha must be in (0, 0.5], got {alpha}")));
    }
    special::chi2_quantile(dof as f64, alpha)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseModel {
    Gaussian,
    /// Uniform with the same variance; no analytic chi-square bound.
    Uniform,
    /// Laplace with the same variance; no analytic chi-square bound.
    Laplace,
}

impl NoiseModel {
    fn sample<R: Rng>(self, rng: &mut R, sigma: f64) -> f64 {
        match self {
            NoiseModel::Gaussian => sigma * Normal::new(0.0, 1.0).expect("unit normal").sample(rng),
            NoiseModel::Uniform => {
                let half = sigma * 3f64.sqrt();
                rng.random_range(-half..half)
            }
            NoiseModel::Laplace => {
                let b = sigma / 2f64.sqrt();
                let u: f64 = rng.random_range(-0.5..0.5);
                -b * u.signum() * (1.0 - 2.0 * u.abs()).ln()
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalCheck {
    pub trials: usize,
    /// Trials skipped because the sampled noise was exactly zero.
    pub excluded_zero_noise: usize,
    pub max_observed_ratio: f64,
    pub max_feature_sq_distance: f64,
    pub violation_count: usize,
    pub violation_rate: f64,
    /// Binomial standard error at `alpha`.
    pub std_error: f64,
    pub passes: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobustnessCertificate {
    pub l: usize,
    pub n: usize,
    pub alpha: f64,
    pub confidence: f64,
    pub sigma: f64,
    pub noise: NoiseModel,
    /// False for non-Gaussian noise, where the chi-square bound is only a CLT
    /// approximation.
    pub analytic: bool,
    pub chi2_quantile: f64,
    /// Bound on `|Phi g - Phi f|^2 / |g - f|^2` (squared ratio).
    pub ratio_bound: f64,
    /// `sqrt(ratio_bound)`, the bound on the unsquared norm ratio.
    pub norm_ratio_bound: f64,
    pub empirical: Option<EmpiricalCheck>,
}

/// Analytic certificate for unit-variance Gaussian noise.
pub fn lipschitz_certificate(l: usize, n: usize, alpha: f64) -> Result<RobustnessCertificate> {
    certificate(l, n, alpha, 1.0, NoiseModel::Gaussian)
}

fn certificate(l: usize, n: usize, alpha: f64, sigma: f64, noise: NoiseModel) -> Result<RobustnessCertificate> {
    if l == 0 {
        return Err(Error::Argument("L must be >= 1".into()));
    }
    if !(sigma > 0.0) {
        return Err(Error::Argument(format!("sigma must be > 0, got {sigma}")));
    }
    let chi2_quantile = chi2_lower_quantile(n, alpha)?;
    let ratio_bound = l as f64 / (sigma * sigma * chi2_quantile);
    Ok(RobustnessCertificate {
        l,
        n,
        alpha,
        confidence: 1.0 - alpha,
        sigma,
        noise,
        analytic: noise == NoiseModel::Gaussian,
        chi2_quantile,
        ratio_bound,
        norm_ratio_bound: ratio_bound.sqrt(),
        empirical: None,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseCheck {
    pub alpha: f64,
    pub trials: usize,
    pub seed: u64,
    pub sigma: f64,
    pub noise: NoiseModel,
}

impl Default for NoiseCheck {
    fn default() -> Self {
        Self {
            alpha: 0.005,
            trials: 1000,
            seed: 0,
            sigma: 1.0,
            noise: NoiseModel::Gaussian,
        }
    }
}

fn squared_feature_distance(a: &[PositiveCount], b: &[PositiveCount]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x.ppv() - y.ppv()).powi(2))
        .sum()
}

/// `(|Phi(f+eps) - Phi(f)|^2, |eps|^2)`; the ratio is undefined for zero noise.
pub fn noise_response(
    f: &TimeSeries,
    eps: &[f64],
    kernels: &[KernelSpec],
    standardize_inputs: bool,
) -> Result<(f64, f64)> {
    if eps.len() != f.len() {
        return Err(Error::Dimension(format!(
            "noise length {} vs series length {}",
            eps.len(),
            f.len()
        )));
    }
    let g = TimeSeries::new(f.values().iter().zip(eps).map(|(a, b)| a + b).collect())?;
    let base = series_counts(f, kernels, standardize_inputs)?;
    let noisy = series_counts(&g, kernels, standardize_inputs)?;
    Ok((
        squared_feature_distance(&base, &noisy),
        eps.iter().map(|e| e * e).sum(),
    ))
}

/// Monte-Carlo check of the certificate on a fixed series `f`.
pub fn verify_noise_robustness(
    f: &TimeSeries,
    cfg: &TransformConfig,
    check: &NoiseCheck,
) -> Result<RobustnessCertificate> {
    if check.trials < 100 {
        return Err(Error::Argument(format!(
            "noise verification needs >= 100 trials, got {}",
            check.trials
        )));
    }
    let n = f.len();
    let mut cert = certificate(cfg.num_kernels, n, check.alpha, check.sigma, check.noise)?;
    let kernels = generate_kernels(cfg, n)?;
    let base = series_counts(f, &kernels, cfg.standardize_inputs)?;
    let l = kernels.len() as f64;

    let outcomes: Vec<Option<(f64, f64)>> = (0..check.trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = rng::stream(check.seed, Domain::Noise, t as u64);
            let eps: Vec<f64> = (0..n).map(|_| check.noise.sample(&mut rng, check.sigma)).collect();
            let eps_sq: f64 = eps.iter().map(|e| e * e).sum();
            if eps_sq == 0.0 {
                return Ok(None);
            }
            let g = TimeSeries::new(f.values().iter().zip(&eps).map(|(a, b)| a + b).collect())?;
            let noisy = series_counts(&g, &kernels, cfg.standardize_inputs)?;
            let d2 = squared_feature_distance(&base, &noisy);
            if d2 > l {
                return Err(Error::Numerical(format!(
                    "squared feature distance {d2} exceeds L = {l}"
                )));
            }
            Ok(Some((d2, eps_sq)))
        })
        .collect::<Result<_>>()?;

    let mut max_ratio = 0.0f64;
    let mut max_d2 = 0.0f64;
    let mut violations = 0;
    let mut excluded = 0;
    for o in &outcomes {
        match o {
            None => excluded += 1,
            Some((d2, e2)) => {
                let r = d2 / e2;
                max_ratio = max_ratio.max(r);
                max_d2 = max_d2.max(*d2);
                if r > cert.ratio_bound {
                    violations += 1;
                }
            }
        }
    }
    let used = (check.trials - excluded).max(1) as f64;
    let rate = violations as f64 / used;
    let std_error = (check.alpha * (1.0 - check.alpha) / used).sqrt();
    cert.empirical = Some(EmpiricalCheck {
        trials: check.trials,
        excluded_zero_noise: excluded,
        max_observed_ratio: max_ratio,
        max_feature_sq_distance: max_d2,
        violation_count: violations,
        violation_rate: rate,
        std_error,
        passes: rate <= check.alpha + 3.0 * std_error,
    });
    Ok(cert)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShiftInvarianceReport {
    pub n: usize,
    pub l: usize,
    pub shifts_tested: Vec<i64>,
    pub padding: PaddingPolicy,
    /// Whether exact invariance is promised for this padding (circular only).
    pub exactness_claimed: bool,
    pub max_feature_discrepancy: f64,
    pub mismatched_features: usize,
    pub exact: bool,
}

/// Compares the positive counts of `f` and each circular shift of `f`
/// kernel by kernel, as integers.
pub fn verify_shift_invariance(
    f: &TimeSeries,
    cfg: &TransformConfig,
    shifts: &[i64],
) -> Result<ShiftInvarianceReport> {
    let kernels = generate_kernels(cfg, f.len())?;
    let base = series_counts(f, &kernels, cfg.standardize_inputs)?;
    let mut max_disc = 0.0f64;
    let mut mismatched = 0;
    for &c in shifts {
        let shifted = series_counts(&f.circular_shift(c), &kernels, cfg.standardize_inputs)?;
        for (a, b) in base.iter().zip(&shifted) {
            if a != b {
                mismatched += 1;
                max_disc = max_disc.max((a.ppv() - b.ppv()).abs());
            }
        }
    }
    Ok(ShiftInvarianceReport {
        n: f.len(),
        l: kernels.len(),
        shifts_tested: shifts.to_vec(),
        padding: cfg.padding_policy,
        exactness_claimed: cfg.padding_policy == PaddingPolicy::Circular,
        max_feature_discrepancy: max_disc,
        mismatched_features: mismatched,
        exact: mismatched == 0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn series(n: usize) -> TimeSeries {
        TimeSeries::new((0..n).map(|t| (t as f64 * 0.31).sin() + 0.2 * (t as f64 * 1.7).cos()).collect()).unwrap()
    }

    fn cfg(l: usize, padding: PaddingPolicy) -> TransformConfig {
        TransformConfig {
            num_kernels: l,
            seed: 17,
            padding_policy: padding,
            ..TransformConfig::default()
        }
    }

    #[test]
    fn quantile_examples() {
        let q = chi2_lower_quantile(80, 0.005).unwrap();
        assert!((q - 51.2).abs() < 0.05, "q = {q}");
        let q2 = chi2_lower_quantile(2, 0.5).unwrap();
        assert!((q2 - 2.0 * std::f64::consts::LN_2).abs() < 1e-12);
        assert!(chi2_lower_quantile(0, 0.1).is_err());
        assert!(chi2_lower_quantile(10, 0.6).is_err());
        assert!(chi2_lower_quantile(10, 0.0).is_err());
    }

    #[test]
    fn certificate_examples() {
        let c = lipschitz_certificate(10_000, 80, 0.005).unwrap();
        assert!((c.ratio_bound - 195.3).abs() < 0.4, "{}", c.ratio_bound);
        assert!((c.norm_ratio_bound - c.ratio_bound.sqrt()).abs() < 1e-12);
        let one = lipschitz_certificate(1, 80, 0.005).unwrap();
        assert_eq!(one.ratio_bound, 1.0 / one.chi2_quantile);
        let two = lipschitz_certificate(20_000, 80, 0.005).unwrap();
        assert_eq!(two.ratio_bound, 2.0 * c.ratio_bound);
    }

    #[test]
    fn zero_noise_has_no_ratio() {
        let f = series(40);
        let ks = generate_kernels(&cfg(50, PaddingPolicy::AlwaysZero), 40).unwrap();
        let (d2, e2) = noise_response(&f, &[0.0; 40], &ks, true).unwrap();
        assert_eq!((d2, e2), (0.0, 0.0));
    }

    #[test]
    fn empirical_certificate_holds() {
        let f = series(60);
        let cert = verify_noise_robustness(
            &f,
            &cfg(300, PaddingPolicy::AlwaysZero),
            &NoiseCheck {
                trials: 300,
                seed: 3,
                ..NoiseCheck::default()
            },
        )
        .unwrap();
        let e = cert.empirical.unwrap();
        assert!(e.passes);
        assert!(e.max_feature_sq_distance <= 300.0);
        assert!(e.max_observed_ratio < cert.ratio_bound);
        assert!(verify_noise_robustness(&f, &cfg(10, PaddingPolicy::AlwaysZero), &NoiseCheck { trials: 99, ..NoiseCheck::default() }).is_err());
    }

    #[test]
    fn violation_rate_respects_confidence_across_seeds() {
        // small L makes violations possible; alpha large enough to observe them
        let f = series(20);
        let check = |seed| NoiseCheck {
            alpha: 0.2,
            trials: 200,
            seed,
            ..NoiseCheck::default()
        };
        let c = TransformConfig {
            num_kernels: 3,
            kernel_lengths: vec![3],
            ..cfg(3, PaddingPolicy::AlwaysZero)
        };
        let mut total = 0;
        for seed in 0..20 {
            let e = verify_noise_robustness(&f, &c, &check(seed)).unwrap().empirical.unwrap();
            assert!(e.passes, "seed {seed}: {e:?}");
            total += e.violation_count;
        }
        // pooled rate over 4000 trials stays under alpha + 3 SE
        let rate = total as f64 / 4000.0;
        assert!(rate <= 0.2 + 3.0 * (0.2f64 * 0.8 / 4000.0).sqrt());
    }

    #[test]
    fn non_gaussian_modes_are_flagged() {
        for noise in [NoiseModel::Uniform, NoiseModel::Laplace] {
            let cert = verify_noise_robustness(
                &series(30),
                &cfg(50, PaddingPolicy::AlwaysZero),
                &NoiseCheck {
                    trials: 100,
                    noise,
                    ..NoiseCheck::default()
                },
            )
            .unwrap();
            assert!(!cert.analytic);
            assert!(cert.empirical.unwrap().max_feature_sq_distance <= 50.0);
        }
    }

    #[test]
    fn noise_samplers_have_requested_variance() {
        for noise in [NoiseModel::Gaussian, NoiseModel::Uniform, NoiseModel::Laplace] {
            let mut rng = rng::stream(1, Domain::Noise, 0);
            let xs: Vec<f64> = (0..200_000).map(|_| noise.sample(&mut rng, 2.0)).collect();
            let var = xs.iter().map(|x| x * x).sum::<f64>() / xs.len() as f64;
            assert!((var / 4.0 - 1.0).abs() < 0.03, "{noise:?}: {var}");
        }
    }

    #[test]
    fn circular_padding_is_exactly_shift_invariant() {
        let f = series(37);
        let r = verify_shift_invariance(&f, &cfg(200, PaddingPolicy::Circular), &[1, 18, 36, -5]).unwrap();
        assert!(r.exact && r.exactness_claimed);
        assert_eq!(r.max_feature_discrepancy, 0.0);
    }

    #[test]
    fn identity_shift_is_exact_for_any_padding() {
        for p in [PaddingPolicy::AlwaysZero, PaddingPolicy::RandomZeroOrNone, PaddingPolicy::Circular] {
            assert!(verify_shift_invariance(&series(30), &cfg(50, p), &[0]).unwrap().exact);
        }
    }

    #[test]
    fn zero_padding_breaks_invariance_near_boundary() {
        // spike at the end: after a shift of 3 it wraps to the start, where
        // zero padding truncates the kernel's view of it
        let mut v = vec![0.0; 40];
        v[38] = 5.0;
        let f = TimeSeries::new(v).unwrap();
        let r = verify_shift_invariance(&f, &cfg(200, PaddingPolicy::AlwaysZero), &[3]).unwrap();
        assert!(!r.exact);
        assert!(r.max_feature_discrepancy > 0.0);
        assert!(!r.exactness_claimed);
    }

    proptest! {
        #[test]
        fn quantile_increasing(dof in 1usize..300, a in 0.001..0.49f64) {
            let q = chi2_lower_quantile(dof, a).unwrap();
            prop_assert!(q > 0.0);
            prop_assert!(chi2_lower_quantile(dof + 1, a).unwrap() > q);
            prop_assert!(chi2_lower_quantile(dof, a + 0.005).unwrap() > q);
        }
    }
}
