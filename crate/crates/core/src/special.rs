//! Log-gamma, regularized incomplete gamma and the χ² distribution built on
//! them.

use crate::error::{Error, Result};

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

/// `ln Γ(x)` for `x > 0` (Lanczos, g = 7).
pub fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        // reflection
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut a = LANCZOS[0];
    let t = x + LANCZOS_G + 0.5;
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + a.ln()
}

const MAX_ITER: usize = 10_000;
const EPS: f64 = 1e-16;

/// Regularized lower incomplete gamma `P(a, x) = γ(a, x) / Γ(a)`.
pub fn gamma_p(a: f64, x: f64) -> Result<f64> {
    if !(a > 0.0) || !(x >= 0.0) {
        return Err(Error::Argument(format!("gamma_p domain: a={a}, x={x}")));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    if x < a + 1.0 {
        gamma_p_series(a, x)
    } else {
        Ok(1.0 - gamma_q_fraction(a, x)?)
    }
}

/// Regularized upper incomplete gamma `Q(a, x) = 1 - P(a, x)`.
pub fn gamma_q(a: f64, x: f64) -> Result<f64> {
    if !(a > 0.0) || !(x >= 0.0) {
        return Err(Error::Argument(format!("gamma_q domain: a={a}, x={x}")));
    }
    if x == 0.0 {
        return Ok(1.0);
    }
    if x < a + 1.0 {
        Ok(1.0 - gamma_p_series(a, x)?)
    } else {
        gamma_q_fraction(a, x)
    }
}

fn prefactor(a: f64, x: f64) -> f64 {
    (a * x.ln() - x - ln_gamma(a)).exp()
}

fn gamma_p_series(a: f64, x: f64) -> Result<f64> {
    let mut ap = a;
    let mut term = 1.0 / a;
    let mut sum = term;
    for _ in 0..MAX_ITER {
        ap += 1.0;
        term *= x / ap;
        sum += term;
        if term.abs() < sum.abs() * EPS {
            return Ok(sum * prefactor(a, x));
        }
    }
    Err(Error::Numerical(format!("gamma_p series did not converge (a={a}, x={x})")))
}

/// Modified Lentz evaluation of the continued fraction for `Q(a, x)`.
fn gamma_q_fraction(a: f64, x: f64) -> Result<f64> {
    const TINY: f64 = 1e-300;
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..MAX_ITER {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < TINY {
            d = TINY;
        }
        c = b + an / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < EPS {
            return Ok(prefactor(a, x) * h);
        }
    }
    Err(Error::Numerical(format!("gamma_q continued fraction did not converge (a={a}, x={x})")))
}

pub fn chi2_cdf(dof: f64, x: f64) -> Result<f64> {
    if x <= 0.0 {
        return Ok(0.0);
    }
    gamma_p(dof / 2.0, x / 2.0)
}

pub fn chi2_pdf(dof: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let k = dof / 2.0;
    ((k - 1.0) * x.ln() - x / 2.0 - k * std::f64::consts::LN_2 - ln_gamma(k)).exp()
}

/// `q` with `P(χ²_dof <= q) = p`, by safeguarded Newton iteration on the
/// incomplete gamma function.
pub fn chi2_quantile(dof: f64, p: f64) -> Result<f64> {
    if !(dof > 0.0) || !(p > 0.0 && p < 1.0) {
        return Err(Error::Argument(format!("chi2 quantile domain: dof={dof}, p={p}")));
    }

    // bracket [lo, hi] with cdf(lo) < p <= cdf(hi)
    let mut lo = 0.0;
    let mut hi = dof.max(1.0);
    while chi2_cdf(dof, hi)? < p {
        lo = hi;
        hi *= 2.0;
    }

    // Wilson–Hilferty starting point, clamped into the bracket
    let z = normal_quantile(p);
    let h = 2.0 / (9.0 * dof);
    let wh = dof * (1.0 - h + z * h.sqrt()).powi(3);
    let mut q = if wh > lo && wh < hi { wh } else { 0.5 * (lo + hi) };

    for _ in 0..200 {
        let f = chi2_cdf(dof, q)? - p;
        if f == 0.0 {
            return Ok(q);
        }
        if f < 0.0 {
            lo = q;
        } else {
            hi = q;
        }
        let pdf = chi2_pdf(dof, q);
        let mut next = if pdf > 0.0 { q - f / pdf } else { f64::NAN };
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - q).abs() <= 1e-15 * q.abs().max(f64::MIN_POSITIVE) || hi - lo <= 1e-15 * hi {
            return Ok(next);
        }
        q = next;
    }
    Ok(q)
}

/// Standard normal quantile (Acklam's rational approximation, ~1e-9).
pub fn normal_quantile(p: f64) -> f64 {
    const A: [f64; 6] = [
        -3.969_683_028_665_376e1,
        2.209_460_984_245_205e2,
        -2.759_285_104_469_687e2,
        1.383_577_518_672_69e2,
        -3.066_479_806_614_716e1,
        2.506_628_277_459_239,
    ];
    const B: [f64; 5] = [
        -5.447_609_879_822_406e1,
        1.615_858_368_580_409e2,
        -1.556_989_798_598_866e2,
        6.680_131_188_771_972e1,
        -1.328_068_155_288_572e1,
    ];
    const C: [f64; 6] = [
        -7.784_894_002_430_293e-3,
        -3.223_964_580_411_365e-1,
        -2.400_758_277_161_838,
        -2.549_732_539_343_734,
        4.374_664_141_464_968,
        2.938_163_982_698_783,
    ];
    const D: [f64; 4] = [
        7.784_695_709_041_462e-3,
        3.224_671_290_700_398e-1,
        2.445_134_137_142_996,
        3.754_408_661_907_416,
    ];
    let plow = 0.024_25;
    if p < plow {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - plow {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        -normal_quantile(1.0 - p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn ln_gamma_known_values() {
        assert!(ln_gamma(1.0).abs() < 1e-14);
        assert!(ln_gamma(2.0).abs() < 1e-14);
        assert!(rel(ln_gamma(5.0), 24f64.ln()) < 1e-14);
        assert!(rel(ln_gamma(0.5), std::f64::consts::PI.sqrt().ln()) < 1e-13);
        assert!(rel(ln_gamma(40.0), 106.631_760_260_643_46) < 1e-13);
    }

    #[test]
    fn gamma_p_closed_forms() {
        for x in [0.1, 1.0, 1.5, 4.0, 20.0] {
            assert!((gamma_p(1.0, x).unwrap() - (1.0 - (-x).exp())).abs() < 1e-14);
            let q = gamma_q(1.0, x).unwrap();
            assert!((q - (-x).exp()).abs() < 1e-14 * (1.0 + (-x).exp()).max(1e-300));
        }
        assert!(gamma_p(0.0, 1.0).is_err());
        assert!(gamma_p(1.0, -1.0).is_err());
    }

    #[test]
    fn chi2_two_dof_median() {
        let q = chi2_quantile(2.0, 0.5).unwrap();
        assert!(rel(q, 2.0 * std::f64::consts::LN_2) < 1e-12);
    }

    #[test]
    fn normal_quantile_symmetry() {
        assert!(normal_quantile(0.5).abs() < 1e-12);
        assert!((normal_quantile(0.975) - 1.959_963_984_540_054).abs() < 1e-8);
        assert!((normal_quantile(0.001) + normal_quantile(0.999)).abs() < 1e-9);
    }
}
