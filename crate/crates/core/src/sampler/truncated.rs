//! Exact samplers for truncated normal and truncated gamma laws.

use rand::Rng;
use rand_distr::{Distribution, Exp1, Gamma, StandardNormal};
use statrs::function::gamma::{gamma_lr, gamma_ur};

use crate::special::{norm_cdf, norm_ppf};

/// Draws from `N(mean, var)` restricted to `(lo, hi)`. Infinite bounds are
/// allowed; the interval must be non-empty.
pub fn truncated_normal<R: Rng + ?Sized>(rng: &mut R, mean: f64, var: f64, lo: f64, hi: f64) -> f64 {
    let sd = var.sqrt();
    let a = (lo - mean) / sd;
    let b = (hi - mean) / sd;
    mean + sd * standard_truncated_normal(rng, a, b)
}

/// Standard normal restricted to `(a, b)`.
pub fn standard_truncated_normal<R: Rng + ?Sized>(rng: &mut R, a: f64, b: f64) -> f64 {
    debug_assert!(a < b, "empty truncation interval ({a}, {b})");
    if a == f64::NEG_INFINITY && b == f64::INFINITY {
        return rng.sample(StandardNormal);
    }
    if b - a < 0.25 {
        return narrow_uniform(rng, a, b);
    }
    if a >= 0.5 {
        return exponential_tail(rng, a, b);
    }
    if b <= -0.5 {
        return -exponential_tail(rng, -b, -a);
    }
    // The interval reaches into (-0.5, 0.5), so its mass is not tiny and
    // inverse-CDF sampling keeps full precision.
    let fa = norm_cdf(a);
    let fb = norm_cdf(b);
    loop {
        let u = fa + rng.random::<f64>() * (fb - fa);
        let x = norm_ppf(u);
        if x > a && x < b {
            return x;
        }
    }
}

/// Uniform proposal with the density maximum over `[a, b]` as envelope.
fn narrow_uniform<R: Rng + ?Sized>(rng: &mut R, a: f64, b: f64) -> f64 {
    let peak = if a > 0.0 {
        a
    } else if b < 0.0 {
        b
    } else {
        0.0
    };
    loop {
        let x = a + rng.random::<f64>() * (b - a);
        if x <= a || x >= b {
            continue;
        }
        let log_accept = 0.5 * (peak * peak - x * x);
        if rng.random::<f64>().ln() <= log_accept {
            return x;
        }
    }
}

/// Robert's translated-exponential rejection sampler for `(a, b)`, `a > 0`.
fn exponential_tail<R: Rng + ?Sized>(rng: &mut R, a: f64, b: f64) -> f64 {
    let lambda = 0.5 * (a + (a * a + 4.0).sqrt());
    loop {
        let e: f64 = rng.sample(Exp1);
        let x = a + e / lambda;
        if x >= b {
            continue;
        }
        let log_accept = -0.5 * (x - lambda) * (x - lambda);
        if rng.random::<f64>().ln() <= log_accept {
            return x;
        }
    }
}

/// Draws from `Gamma(shape, rate)` restricted to `[lo, hi]` (`hi` may be
/// infinite, `lo` may be zero).
pub fn truncated_gamma<R: Rng + ?Sized>(rng: &mut R, shape: f64, rate: f64, lo: f64, hi: f64) -> f64 {
    debug_assert!(shape > 0.0 && rate > 0.0);
    debug_assert!(lo >= 0.0 && lo < hi, "empty truncation interval [{lo}, {hi}]");
    let x_lo = lo * rate;
    let x_hi = hi * rate;
    let p_lo = if x_lo > 0.0 { gamma_lr(shape, x_lo) } else { 0.0 };
    let p_hi = if x_hi.is_finite() { gamma_lr(shape, x_hi) } else { 1.0 };
    let mass = p_hi - p_lo;
    let dist = Gamma::new(shape, 1.0).expect("positive shape");
    if mass > 0.3 {
        loop {
            let x: f64 = dist.sample(rng);
            if x >= x_lo && x <= x_hi {
                return x / rate;
            }
        }
    }
    let q_lo = if x_lo > 0.0 { gamma_ur(shape, x_lo) } else { 1.0 };
    if x_lo > 0.0 && q_lo < 1e-280 {
        return exponential_gamma_tail(rng, shape, x_lo, x_hi) / rate;
    }
    // Inverse CDF by bisection, on the survival scale when the interval
    // sits above the median so upper-tail masses keep their precision.
    let upper_side = p_lo > 0.5;
    let (c_lo, c_hi) = if upper_side {
        let q_hi = if x_hi.is_finite() { gamma_ur(shape, x_hi) } else { 0.0 };
        (q_hi, q_lo)
    } else {
        (p_lo, p_hi)
    };
    let target = c_lo + rng.random::<f64>() * (c_hi - c_lo);
    let mut left = x_lo;
    let mut right = if x_hi.is_finite() {
        x_hi
    } else {
        // bracket: grow until the survival drops below the target
        let mut r = (x_lo.max(shape)).max(1.0) * 2.0;
        while gamma_ur(shape, r) > target {
            r *= 2.0;
        }
        r
    };
    for _ in 0..200 {
        let mid = 0.5 * (left + right);
        if mid <= left || mid >= right {
            break;
        }
        let below = if upper_side {
            gamma_ur(shape, mid) > target
        } else {
            gamma_lr(shape, mid) < target
        };
        if below {
            left = mid;
        } else {
            right = mid;
        }
    }
    0.5 * (left + right) / rate
}

/// Unit-rate gamma restricted to `[c, hi]` far in the upper tail: exponential
/// proposal from `c` with slope matched at `c`.
fn exponential_gamma_tail<R: Rng + ?Sized>(rng: &mut R, shape: f64, c: f64, hi: f64) -> f64 {
    let lambda = if shape > 1.0 { 1.0 - (shape - 1.0) / c } else { 1.0 };
    let lambda = lambda.max(1e-3);
    loop {
        let e: f64 = rng.sample(Exp1);
        let x = c + e / lambda;
        if x > hi {
            continue;
        }
        let log_accept = (shape - 1.0) * (x / c).ln() - (1.0 - lambda) * (x - c);
        if rng.random::<f64>().ln() <= log_accept {
            return x;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::norm_sf;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn moments(xs: &[f64]) -> (f64, f64) {
        let n = xs.len() as f64;
        let m = xs.iter().sum::<f64>() / n;
        let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
        (m, v)
    }

    /// Mean and variance of a standard normal truncated to (a, b).
    fn tn_moments(a: f64, b: f64) -> (f64, f64) {
        let pdf = |x: f64| {
            if x.is_finite() {
                (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
            } else {
                0.0
            }
        };
        // mass from the nearer tail to avoid cancellation near 1
        let z = if a > 0.0 {
            norm_sf(a) - norm_sf(b)
        } else {
            norm_cdf(b) - norm_cdf(a)
        };
        let xa = if a.is_finite() { a * pdf(a) } else { 0.0 };
        let xb = if b.is_finite() { b * pdf(b) } else { 0.0 };
        let mean = (pdf(a) - pdf(b)) / z;
        let var = 1.0 + (xa - xb) / z - mean * mean;
        (mean, var)
    }

    #[test]
    fn truncated_normal_regimes_match_moments() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let cases = [
            (-1.0, 1.0),
            (f64::NEG_INFINITY, -1.0),
            (1.0, f64::INFINITY),
            (4.0, f64::INFINITY),
            (8.0, 9.0),
            (-12.0, -11.5),
            (0.3, 0.4),
            (-0.2, 2.0),
        ];
        for (a, b) in cases {
            let xs: Vec<f64> = (0..40_000).map(|_| standard_truncated_normal(&mut rng, a, b)).collect();
            assert!(xs.iter().all(|&x| x > a && x < b));
            let (m, v) = moments(&xs);
            let (tm, tv) = tn_moments(a, b);
            let se = (tv / xs.len() as f64).sqrt();
            assert!((m - tm).abs() < 5.0 * se, "({a},{b}): mean {m} vs {tm}");
            assert!((v - tv).abs() < 0.05 * tv + 1e-6, "({a},{b}): var {v} vs {tv}");
        }
    }

    #[test]
    fn truncated_gamma_regimes_stay_in_bounds() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let cases = [
            (2.0, 1.0, 0.0, f64::INFINITY),
            (2.0, 1.0, 0.0, 0.05),
            (3.5, 2.0, 10.0, f64::INFINITY),
            (0.7, 1.0, 0.5, 0.6),
            (1.5, 1.0, 900.0, f64::INFINITY),
        ];
        for (shape, rate, lo, hi) in cases {
            for _ in 0..2000 {
                let x = truncated_gamma(&mut rng, shape, rate, lo, hi);
                assert!(x >= lo && x <= hi && x.is_finite(), "{x} outside [{lo},{hi}]");
            }
        }
    }

    #[test]
    fn untruncated_gamma_moments() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let xs: Vec<f64> = (0..40_000)
            .map(|_| truncated_gamma(&mut rng, 3.0, 2.0, 0.0, f64::INFINITY))
            .collect();
        let (m, v) = moments(&xs);
        assert!((m - 1.5).abs() < 0.02);
        assert!((v - 0.75).abs() < 0.03);
    }
}
