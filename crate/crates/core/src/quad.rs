//! Globally adaptive Gauss-Kronrod (7/15) quadrature on finite and semi-infinite ranges.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{numerical, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];

/// Gauss weights for the odd-indexed Kronrod abscissae and the centre.
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Debug, Clone, Copy)]
pub struct QuadConfig {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
}

impl Default for QuadConfig {
    fn default() -> Self {
        QuadConfig {
            abs_tol: 1e-15,
            rel_tol: 1e-10,
            max_intervals: 4000,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
    pub intervals: usize,
}

#[derive(Debug, Clone, Copy)]
struct Piece {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
    roundoff: f64,
}

impl PartialEq for Piece {
    fn eq(&self, other: &Self) -> bool {
        self.error.total_cmp(&other.error) == Ordering::Equal
    }
}

impl Eq for Piece {}

impl PartialOrd for Piece {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Piece {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn kronrod15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Piece {
    let centre = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let f_centre = f(centre);
    let mut kronrod = f_centre * WGK[7];
    let mut gauss = f_centre * WG[3];
    let mut abs_sum = kronrod.abs();
    let mut fv = [0.0; 14];
    for j in 0..7 {
        let dx = half * XGK[j];
        let f1 = f(centre - dx);
        let f2 = f(centre + dx);
        fv[2 * j] = f1;
        fv[2 * j + 1] = f2;
        kronrod += WGK[j] * (f1 + f2);
        abs_sum += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            gauss += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * kronrod;
    let mut asc = WGK[7] * (f_centre - mean).abs();
    for j in 0..7 {
        asc += WGK[j] * ((fv[2 * j] - mean).abs() + (fv[2 * j + 1] - mean).abs());
    }
    let value = kronrod * half;
    let resabs = abs_sum * half.abs();
    let resasc = asc * half.abs();
    let mut error = ((kronrod - gauss) * half).abs();
    if resasc != 0.0 && error != 0.0 {
        error = resasc * (200.0 * error / resasc).powf(1.5).min(1.0);
    }
    let roundoff = 50.0 * f64::EPSILON * resabs;
    if resabs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        error = error.max(roundoff);
    }
    Piece {
        a,
        b,
        value,
        error,
        roundoff,
    }
}

/// Integrates `f` over `[a, b]`, pre-splitting at the given interior points.
pub fn integrate<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    breakpoints: &[f64],
    config: &QuadConfig,
) -> Result<Estimate> {
    let mut edges: Vec<f64> = std::iter::once(a)
        .chain(breakpoints.iter().copied().filter(|&p| p > a && p < b))
        .chain(std::iter::once(b))
        .collect();
    edges.sort_by(f64::total_cmp);
    edges.dedup();
    let mut heap: BinaryHeap<Piece> = edges
        .windows(2)
        .map(|w| kronrod15(&f, w[0], w[1]))
        .collect();
    loop {
        let (value, error, roundoff) = heap.iter().fold((0.0, 0.0, 0.0), |(v, e, r), p| {
            (v + p.value, e + p.error, r + p.roundoff)
        });
        if !value.is_finite() {
            return Err(numerical(format!(
                "non-finite integrand on [{a}, {b}] after {} intervals",
                heap.len()
            )));
        }
        let target = config.abs_tol.max(config.rel_tol * value.abs());
        // Past the roundoff floor further bisection cannot help.
        if error <= target || error <= 2.0 * roundoff {
            return Ok(Estimate {
                value,
                error,
                intervals: heap.len(),
            });
        }
        if heap.len() >= config.max_intervals {
            return Err(numerical(format!(
                "quadrature on [{a}, {b}] stalled at {} intervals: estimate {value:e}, error {error:e}, target {target:e}",
                heap.len()
            )));
        }
        let worst = heap.pop().expect("at least one interval");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // Interval cannot be split further; accept it as is.
            heap.push(Piece {
                error: 0.0,
                ..worst
            });
            continue;
        }
        heap.push(kronrod15(&f, worst.a, mid));
        heap.push(kronrod15(&f, mid, worst.b));
    }
}

/// Integrates `f` over `[a, inf)`.
///
/// The finite part `[a, c]`, with `c` the largest breakpoint above `a`, is
/// handled directly. The tail `[c, inf)` is mapped onto `(0, 1]` through
/// `v = c - scale ln u`; `scale` should match the decay length of `f` so the
/// mapped integrand stays bounded at `u = 0`.
pub fn integrate_to_infinity<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    breakpoints: &[f64],
    scale: f64,
    config: &QuadConfig,
) -> Result<Estimate> {
    let split = breakpoints
        .iter()
        .copied()
        .filter(|&p| p > a)
        .fold(a, f64::max);
    let head = if split > a {
        integrate(&f, a, split, breakpoints, config)?
    } else {
        Estimate {
            value: 0.0,
            error: 0.0,
            intervals: 0,
        }
    };
    let mapped = |u: f64| {
        let v = split - scale * u.ln();
        let fv = f(v);
        if fv == 0.0 {
            0.0
        } else {
            fv * scale / u
        }
    };
    let tail_config = QuadConfig {
        abs_tol: config.abs_tol.max(config.rel_tol * head.value.abs()),
        ..*config
    };
    let tail = integrate(mapped, 0.0, 1.0, &[1e-8, 1e-4, 1e-2, 0.2], &tail_config)?;
    Ok(Estimate {
        value: head.value + tail.value,
        error: head.error + tail.error,
        intervals: head.intervals + tail.intervals,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_is_exact() {
        let est = integrate(
            |x| x * x * x - 2.0 * x,
            0.0,
            2.0,
            &[],
            &QuadConfig::default(),
        )
        .unwrap();
        assert!((est.value - 0.0).abs() < 1e-14);
        let est = integrate(|x| x.powi(6), -1.0, 1.0, &[], &QuadConfig::default()).unwrap();
        assert!((est.value - 2.0 / 7.0).abs() < 1e-15);
    }

    #[test]
    fn peaked_integrand_converges_adaptively() {
        let est = integrate(
            |x| 1.0 / (1e-4 + x * x),
            -1.0,
            1.0,
            &[],
            &QuadConfig::default(),
        )
        .unwrap();
        let exact = 2.0 * (1.0 / 1e-2) * (1.0_f64 / 1e-2).atan();
        assert!(((est.value - exact) / exact).abs() < 1e-10);
        assert!(est.intervals > 1);
    }

    #[test]
    fn exponential_tail() {
        let cfg = QuadConfig::default();
        let est = integrate_to_infinity(|x| (-x).exp(), 0.0, &[], 1.0, &cfg).unwrap();
        assert!((est.value - 1.0).abs() < 1e-12);
        let est = integrate_to_infinity(
            |x| x * (-x / 300.0).exp(),
            0.0,
            &[300.0, 3000.0],
            300.0,
            &cfg,
        )
        .unwrap();
        assert!(((est.value - 90_000.0) / 90_000.0).abs() < 1e-10);
    }

    #[test]
    fn gaussian_with_breakpoints() {
        let cfg = QuadConfig::default();
        let mu = 400.0;
        let f = |x: f64| (-(x - mu) * (x - mu) / 2.0).exp() / (2.0 * std::f64::consts::PI).sqrt();
        let est = integrate_to_infinity(f, 0.0, &[mu - 10.0, mu, mu + 10.0], 1.0, &cfg).unwrap();
        assert!((est.value - 1.0).abs() < 1e-10);
    }

    #[test]
    fn non_finite_integrand_is_an_error() {
        let r = integrate(
            |x| 1.0 / x,
            0.0,
            1.0,
            &[],
            &QuadConfig {
                max_intervals: 50,
                ..Default::default()
            },
        );
        assert!(r.is_err());
    }
}
