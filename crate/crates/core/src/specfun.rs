//! Special functions behind every transition probability: the modified Bessel
//! function `I0` kept in the log domain, its functional inverse, the
//! first-order Marcum Q-function and log binomial coefficients.
//!
//! `I0(x)` overflows an `f64` near `x = 713`, and the OOFSK detection
//! threshold involves `I0^{-1}(xi)` with `xi` containing `e^{alpha^2}`, so
//! nothing here ever materialises `I0` in linear form for large arguments.

use crate::error::{domain, Result};

/// Switch point between the power series and the large-argument expansion of `I0`.
const ASYMPTOTIC_CUTOFF: f64 = 25.0;

/// Natural logarithm of a nonnegative quantity.
///
/// `ln 0 = -inf` is allowed so that a zero magnitude (for instance the
/// threshold ratio at full duty cycle) round-trips.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct LogValue(f64);

impl LogValue {
    pub fn from_ln(log_magnitude: f64) -> Self {
        LogValue(log_magnitude)
    }

    pub fn from_value(value: f64) -> Self {
        LogValue(value.ln())
    }

    pub fn ln(self) -> f64 {
        self.0
    }

    pub fn value(self) -> f64 {
        self.0.exp()
    }

    pub fn is_zero(self) -> bool {
        self.0 == f64::NEG_INFINITY
    }
}

/// `sum_{k>=1} (x^2/4)^k / (k!)^2`, i.e. `I0(x) - 1`.
fn i0_series_minus_one(x: f64) -> f64 {
    let q = 0.25 * x * x;
    let mut term = 1.0;
    let mut sum = 0.0;
    for k in 1..1000u32 {
        let kf = f64::from(k);
        term *= q / (kf * kf);
        sum += term;
        if term <= 1e-17 * sum {
            break;
        }
    }
    sum
}

/// `sqrt(2 pi x) e^{-x} I0(x)` from the Hankel expansion, truncated at its smallest term.
fn i0_asymptotic_sum(x: f64) -> f64 {
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..400u32 {
        let odd = f64::from(2 * k - 1);
        let next = term * odd * odd / (8.0 * f64::from(k) * x);
        if next >= term {
            break;
        }
        term = next;
        sum += term;
        if term <= 1e-17 * sum {
            break;
        }
    }
    sum
}

/// Exponentially scaled Bessel function `e^{-x} I0(x)` for `x >= 0`.
pub fn bessel_i0_scaled(x: f64) -> f64 {
    let x = x.abs();
    if x <= ASYMPTOTIC_CUTOFF {
        (1.0 + i0_series_minus_one(x)) * (-x).exp()
    } else {
        i0_asymptotic_sum(x) / (2.0 * std::f64::consts::PI * x).sqrt()
    }
}

/// Unchecked `ln I0(x)` for finite `x >= 0`.
pub(crate) fn ln_i0(x: f64) -> f64 {
    if x <= ASYMPTOTIC_CUTOFF {
        i0_series_minus_one(x).ln_1p()
    } else {
        x + (i0_asymptotic_sum(x) / (2.0 * std::f64::consts::PI * x).sqrt()).ln()
    }
}

/// `ln I0(x)`, accurate to a few ulps across the whole nonnegative axis.
pub fn log_bessel_i0(x: f64) -> Result<f64> {
    if !x.is_finite() || x < 0.0 {
        return Err(domain(format!(
            "log_bessel_i0 needs finite x >= 0, got {x}"
        )));
    }
    Ok(ln_i0(x))
}

/// Ratios `I_k(z) / I_{k-1}(z)` for `k = 1..=n`, stored at index `k` (index 0 is unused).
///
/// Backward recurrence `r_k = z / (2k + z r_{k+1})` started far enough above
/// `n` that the seed error is damped below double precision.
pub(crate) fn bessel_ratios(z: f64, n: usize) -> Vec<f64> {
    let mut ratios = vec![0.0; n + 1];
    if z == 0.0 {
        return ratios;
    }
    let start = n + (40.0 * z).sqrt() as usize + 30;
    let seed_order = (start + 1) as f64;
    let mut next = z / (seed_order + (seed_order * seed_order + z * z).sqrt());
    for k in (1..=start).rev() {
        let cur = z / (2.0 * k as f64 + z * next);
        if k <= n {
            ratios[k] = cur;
        }
        next = cur;
    }
    ratios
}

/// `I1(x) / I0(x)`, the derivative of `ln I0` at `x`.
pub(crate) fn bessel_i1_i0_ratio(x: f64) -> f64 {
    bessel_ratios(x, 1)[1]
}

/// Functional inverse of `I0` on `[0, inf)`: returns `x >= 0` with `ln I0(x) = log_xi`.
///
/// Bracketing bisection safeguards a Newton iteration on `ln I0`, which is
/// strictly increasing and convex in `x^2` near the origin.
pub fn bessel_i0_inverse(log_xi: f64) -> Result<f64> {
    if !log_xi.is_finite() || log_xi < 0.0 {
        return Err(domain(format!(
            "I0 inverse needs ln(xi) >= 0, got {log_xi}"
        )));
    }
    if log_xi == 0.0 {
        return Ok(0.0);
    }
    // ln I0(x) ~ x^2/4 near zero and ~ x - ln(2 pi x)/2 for large x.
    let guess = if log_xi < 2.0 {
        2.0 * log_xi.sqrt()
    } else {
        log_xi + 0.5 * (2.0 * std::f64::consts::PI * log_xi).ln()
    };
    let mut lo = 0.0;
    let mut hi = guess.max(1e-300);
    while ln_i0(hi) < log_xi {
        lo = hi;
        hi *= 2.0;
    }
    let mut x = guess.clamp(lo, hi);
    for _ in 0..200 {
        let f = ln_i0(x) - log_xi;
        if f == 0.0 {
            return Ok(x);
        }
        if f > 0.0 {
            hi = x;
        } else {
            lo = x;
        }
        let slope = bessel_i1_i0_ratio(x);
        let mut next = x - f / slope;
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - x).abs() <= 4.0 * f64::EPSILON * x || hi - lo <= 4.0 * f64::EPSILON * hi {
            return Ok(next);
        }
        x = next;
    }
    Ok(x)
}

/// Marcum `Q1(a, b)` together with its complement `1 - Q1(a, b)`.
///
/// Whichever of the two is computed directly by the series keeps full
/// relative accuracy; the other is `1 -` it. Inputs must be finite and `>= 0`.
pub(crate) fn marcum_q1_pair(a: f64, b: f64) -> (f64, f64) {
    if b == 0.0 {
        return (1.0, 0.0);
    }
    let half_b_sq = 0.5 * b * b;
    if a == 0.0 {
        return ((-half_b_sq).exp(), -(-half_b_sq).exp_m1());
    }
    let gap = b - a;
    let prefactor = (-0.5 * gap * gap).exp();
    if prefactor == 0.0 {
        return if b > a { (0.0, 1.0) } else { (1.0, 0.0) };
    }
    let z = a * b;
    // For b >= a:  Q1 = e^{-(b-a)^2/2} sum_{k>=0} (a/b)^k e^{-z} I_k(z).
    // For b < a:   1 - Q1 = e^{-(b-a)^2/2} sum_{k>=1} (b/a)^k e^{-z} I_k(z).
    let (rho, first) = if b >= a { (a / b, 0) } else { (b / a, 1) };
    let sum = scaled_bessel_series(z, rho, first);
    let direct = (prefactor * sum).min(1.0);
    if b >= a {
        (direct, 1.0 - direct)
    } else {
        (1.0 - direct, direct)
    }
}

/// `sum_{k>=first} rho^k e^{-z} I_k(z)` for `0 < rho <= 1`.
fn scaled_bessel_series(z: f64, rho: f64, first: usize) -> f64 {
    let mut order_cap = (9.0 * z.sqrt() + 60.0) as usize;
    loop {
        let ratios = bessel_ratios(z, order_cap + 1);
        let mut term = bessel_i0_scaled(z);
        let mut sum = if first == 0 { term } else { 0.0 };
        let mut converged = false;
        for k in 1..=order_cap {
            term *= rho * ratios[k];
            if k >= first {
                sum += term;
            }
            let q = rho * ratios[k + 1];
            let tail = term * q / (1.0 - q);
            if term == 0.0 || (k >= first && tail <= 1e-17 * sum) {
                converged = true;
                break;
            }
        }
        if converged {
            return sum;
        }
        order_cap *= 2;
    }
}

fn check_marcum_args(a: f64, b: f64) -> Result<()> {
    if !a.is_finite() || !b.is_finite() || a < 0.0 || b < 0.0 {
        return Err(domain(format!(
            "Marcum Q1 needs finite a, b >= 0, got ({a}, {b})"
        )));
    }
    Ok(())
}

/// First-order Marcum Q-function, the tail probability `P(R > b)` of a Rician
/// envelope `R` with noncentrality `a` and unit per-dimension variance.
pub fn marcum_q1(a: f64, b: f64) -> Result<f64> {
    check_marcum_args(a, b)?;
    Ok(marcum_q1_pair(a, b).0)
}

/// `1 - Q1(a, b)`, accurate when `Q1` is close to one.
pub fn marcum_q1_complement(a: f64, b: f64) -> Result<f64> {
    check_marcum_args(a, b)?;
    Ok(marcum_q1_pair(a, b).1)
}

/// `ln C(n, k)` through log-gamma.
pub fn log_binomial(n: u64, k: u64) -> Result<f64> {
    if k > n {
        return Err(domain(format!(
            "log_binomial needs k <= n, got n={n}, k={k}"
        )));
    }
    if k == 0 || k == n {
        return Ok(0.0);
    }
    let lg = |v: u64| libm::lgamma(v as f64 + 1.0);
    Ok(lg(n) - lg(k) - lg(n - k))
}
