//! Normal-distribution special functions and Gauss-Legendre quadrature.

use std::f64::consts::{FRAC_1_SQRT_2, SQRT_2};

use libm::erfc;
use statrs::function::erf::erfc_inv;

use crate::model::density::LN_SQRT_2PI;

/// Standard normal CDF.
#[inline]
pub fn norm_cdf(x: f64) -> f64 {
    0.5 * erfc(-x * FRAC_1_SQRT_2)
}

/// Standard normal survival function `1 - Phi(x)`, accurate in the upper tail.
#[inline]
pub fn norm_sf(x: f64) -> f64 {
    0.5 * erfc(x * FRAC_1_SQRT_2)
}

/// Standard normal quantile. The starting approximation is polished by
/// Newton steps on the accurate CDF.
pub fn norm_ppf(q: f64) -> f64 {
    if !(q > 0.0 && q < 1.0) {
        return -SQRT_2 * erfc_inv(2.0 * q);
    }
    let mut x = -SQRT_2 * erfc_inv(2.0 * q);
    for _ in 0..3 {
        // work in the smaller tail for relative accuracy
        let (err, tail) = if x < 0.0 {
            (norm_cdf(x) - q, q)
        } else {
            ((1.0 - q) - norm_sf(x), 1.0 - q)
        };
        let pdf = norm_log_pdf(x).exp();
        if pdf == 0.0 || err.abs() <= f64::EPSILON * tail {
            break;
        }
        x -= err / pdf;
    }
    x
}

#[inline]
pub fn norm_log_pdf(x: f64) -> f64 {
    -LN_SQRT_2PI - 0.5 * x * x
}

/// `log Phi(x)`, using the asymptotic Mills-ratio series far in the lower tail.
pub fn log_norm_cdf(x: f64) -> f64 {
    if x > -30.0 {
        norm_cdf(x).ln()
    } else {
        let x2 = x * x;
        // Phi(x) ~ phi(x)/|x| * (1 - 1/x^2 + 3/x^4 - 15/x^6)
        let series = 1.0 - 1.0 / x2 + 3.0 / (x2 * x2) - 15.0 / (x2 * x2 * x2);
        norm_log_pdf(x) - (-x).ln() + series.ln()
    }
}

/// `log P(a < X <= b)` for standard normal `X`, stable when the interval
/// sits deep in either tail.
pub fn log_norm_interval(a: f64, b: f64) -> f64 {
    if !(a < b) {
        return f64::NEG_INFINITY;
    }
    if a >= 0.0 {
        // upper tail: Q(a) - Q(b) with Q(x) = Phi(-x)
        let la = log_norm_cdf(-a);
        let lb = log_norm_cdf(-b);
        la + log1m_exp(lb - la)
    } else if b <= 0.0 {
        let lb = log_norm_cdf(b);
        let la = log_norm_cdf(a);
        lb + log1m_exp(la - lb)
    } else {
        (1.0 - norm_cdf(a) - norm_sf(b)).ln()
    }
}

/// `log(1 - exp(x))` for `x <= 0`.
#[inline]
pub fn log1m_exp(x: f64) -> f64 {
    if x == f64::NEG_INFINITY {
        0.0
    } else if x > -std::f64::consts::LN_2 {
        (-x.exp_m1()).ln()
    } else {
        (-x.exp()).ln_1p()
    }
}

/// Numerically stable `log(sum(exp(xs)))`; `-inf` for an empty or all
/// `-inf` input.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    max + xs.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(order: usize) -> (Vec<f64>, Vec<f64>) {
    let n = order;
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        // Chebyshev-like initial guess, then Newton on P_n.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 0 { 1.0 } else { p1 };
            let pn1 = if n == 0 { 0.0 } else { p0 };
            dp = n as f64 * (x * pn - pn1) / (x * x - 1.0);
            let dx = pn / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// Composite Gauss-Legendre rule over `[a, b]`.
pub struct CompositeRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    panels: usize,
}

impl CompositeRule {
    pub fn new(panels: usize, order: usize) -> Self {
        let (nodes, weights) = gauss_legendre(order);
        CompositeRule { nodes, weights, panels }
    }

    pub fn integrate(&self, a: f64, b: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
        let h = (b - a) / self.panels as f64;
        let mut total = 0.0;
        for k in 0..self.panels {
            let lo = a + k as f64 * h;
            let mid = lo + 0.5 * h;
            let half = 0.5 * h;
            for (x, w) in self.nodes.iter().zip(&self.weights) {
                total += w * half * f(mid + half * x);
            }
        }
        total
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normal_reference_values() {
        assert!((norm_cdf(1.0) - norm_cdf(-1.0) - 0.682_689_492_137_085_9).abs() < 1e-14);
        assert!((norm_sf(1.0) - 0.158_655_253_931_457_05).abs() < 1e-15);
        assert!((norm_ppf(0.975) - 1.959_963_984_540_054).abs() < 1e-12);
        assert!((norm_ppf(1e-10) + 6.361_340_902_404_056).abs() < 1e-12);
        for q in [1e-300, 1e-5, 0.3, 0.5, 0.9, 1.0 - 1e-9] {
            let x = norm_ppf(q);
            let back = if x < 0.0 {
                norm_cdf(x) / q
            } else {
                norm_sf(x) / (1.0 - q)
            };
            assert!((back - 1.0).abs() < 1e-6, "q = {q}");
        }
    }

    #[test]
    fn log_cdf_is_continuous_across_the_switch() {
        let a = log_norm_cdf(-29.999_999);
        let b = log_norm_cdf(-30.000_001);
        assert!((a - b).abs() < 1e-4);
        assert!(log_norm_cdf(-40.0).is_finite());
    }

    #[test]
    fn interval_mass_in_tails() {
        let v = log_norm_interval(1.0, f64::INFINITY).exp();
        assert!((v - 0.158_655_253_931_457_05).abs() < 1e-15);
        let deep = log_norm_interval(35.0, 36.0);
        assert!(deep.is_finite() && deep < -600.0);
        let deep_low = log_norm_interval(f64::NEG_INFINITY, -35.0);
        assert!((deep - deep_low).abs() < 1.0);
        assert_eq!(log_norm_interval(1.0, 1.0), f64::NEG_INFINITY);
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(8);
        let s: f64 = w.iter().sum();
        assert!((s - 2.0).abs() < 1e-14);
        // x^14 integrates to 2/15 exactly with 8 points
        let v: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(14)).sum();
        assert!((v - 2.0 / 15.0).abs() < 1e-14);
        let rule = CompositeRule::new(10, 10);
        let v = rule.integrate(0.0, std::f64::consts::PI, f64::sin);
        assert!((v - 2.0).abs() < 1e-13);
    }
}
