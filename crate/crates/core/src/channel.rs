//! Hard-decision transition probabilities of energy-detected M-ary FSK and
//! on-off FSK (OOFSK) over AWGN, coherent Rician and noncoherent Rician channels.
//!
//! All SNRs are linear `E / N0`. Index convention: `P_{l,m} = P(y = l | x = m)`,
//! with `0` the "no transmission" symbol of OOFSK.

use crate::error::{contract, domain, numerical, Result};
use crate::quad::{integrate_to_infinity, QuadConfig};
use crate::specfun::{
    bessel_i0_inverse, bessel_i0_scaled, bessel_i1_i0_ratio, ln_i0, log_binomial, marcum_q1_pair,
    LogValue,
};

/// Largest alphabet evaluated through the FSK sum form; larger alphabets use quadrature.
pub const FSK_SUM_FORM_MAX_M: u32 = 30;

/// Largest alphabet for which the OOFSK correct-detection sum (alternating, with
/// Marcum factors) is used; larger alphabets use the thresholded integral.
pub const OOFSK_SUM_FORM_MAX_M: u32 = 16;

/// Probabilities may stray outside `[0, 1]` by at most this much before it is an error.
const PROBABILITY_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Family {
    Fsk,
    Oofsk,
}

/// Modulation family, alphabet size `M` and duty cycle `nu`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModulationSpec {
    family: Family,
    m: u32,
    duty: f64,
}

impl ModulationSpec {
    pub fn new(family: Family, m: u32, duty: f64) -> Result<Self> {
        if m < 2 {
            return Err(domain(format!("alphabet size must be at least 2, got {m}")));
        }
        if !(duty > 0.0 && duty <= 1.0) {
            return Err(domain(format!("duty cycle must lie in (0, 1], got {duty}")));
        }
        if family == Family::Fsk && duty != 1.0 {
            return Err(domain(format!("FSK has duty cycle 1, got {duty}")));
        }
        Ok(ModulationSpec { family, m, duty })
    }

    pub fn fsk(m: u32) -> Result<Self> {
        Self::new(Family::Fsk, m, 1.0)
    }

    pub fn oofsk(m: u32, duty: f64) -> Result<Self> {
        Self::new(Family::Oofsk, m, duty)
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    pub fn duty(&self) -> f64 {
        self.duty
    }

    /// Input distribution: equiprobable tones for FSK; `1 - nu` on silence and
    /// `nu / M` per tone for OOFSK (silence first).
    pub fn input_distribution(&self) -> Vec<f64> {
        let m = self.m as usize;
        match self.family {
            Family::Fsk => vec![1.0 / m as f64; m],
            Family::Oofsk => {
                let mut p = vec![self.duty / m as f64; m + 1];
                p[0] = 1.0 - self.duty;
                p
            }
        }
    }
}

/// Rician fading `h ~ CN(d, gamma^2)` normalised to unit average power,
/// `|d|^2 = K / (K + 1)` and `gamma^2 = 1 / (K + 1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RicianFading {
    k: f64,
    d_sq: f64,
    gamma_sq: f64,
}

impl RicianFading {
    /// `k = f64::INFINITY` gives the unfaded limit `h = 1`.
    pub fn from_k(k: f64) -> Result<Self> {
        if k.is_nan() || k < 0.0 {
            return Err(domain(format!("Rician factor must be >= 0, got {k}")));
        }
        let gamma_sq = 1.0 / (k + 1.0);
        Ok(RicianFading {
            k,
            d_sq: 1.0 - gamma_sq,
            gamma_sq,
        })
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    pub fn d_sq(&self) -> f64 {
        self.d_sq
    }

    pub fn gamma_sq(&self) -> f64 {
        self.gamma_sq
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ChannelKind {
    Awgn,
    CoherentRician,
    NoncoherentRician,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ChannelModel {
    Awgn,
    /// Receiver knows each fading realisation.
    CoherentRician(RicianFading),
    /// Neither side knows the fading realisation.
    NoncoherentRician(RicianFading),
}

impl ChannelModel {
    pub fn coherent_rician(k: f64) -> Result<Self> {
        Ok(ChannelModel::CoherentRician(RicianFading::from_k(k)?))
    }

    pub fn noncoherent_rician(k: f64) -> Result<Self> {
        Ok(ChannelModel::NoncoherentRician(RicianFading::from_k(k)?))
    }

    pub fn kind(&self) -> ChannelKind {
        match self {
            ChannelModel::Awgn => ChannelKind::Awgn,
            ChannelModel::CoherentRician(_) => ChannelKind::CoherentRician,
            ChannelModel::NoncoherentRician(_) => ChannelKind::NoncoherentRician,
        }
    }

    pub fn fading(&self) -> Option<&RicianFading> {
        match self {
            ChannelModel::Awgn => None,
            ChannelModel::CoherentRician(f) | ChannelModel::NoncoherentRician(f) => Some(f),
        }
    }
}

/// Correct-detection probability `P_{1,1}` of the symmetric M-ary channel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FskTransition {
    pub p11: f64,
    pub m: u32,
}

impl FskTransition {
    /// `P_{l,1}` for `l != 1`.
    pub fn p_off(&self) -> f64 {
        (1.0 - self.p11) / f64::from(self.m - 1)
    }

    /// Row-per-input transition matrix, `matrix[x][y] = P(y | x)`.
    pub fn matrix(&self) -> Vec<Vec<f64>> {
        let m = self.m as usize;
        let off = self.p_off();
        (0..m)
            .map(|x| {
                (0..m)
                    .map(|y| if x == y { self.p11 } else { off })
                    .collect()
            })
            .collect()
    }
}

/// The five distinct entries of the (M+1)-ary OOFSK channel plus the threshold that produced them.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OofskTransition {
    pub p00: f64,
    pub pl0: f64,
    pub pll: f64,
    pub p0l: f64,
    pub plm: f64,
    pub tau: f64,
    pub alpha_sq: f64,
    pub m: u32,
}

impl OofskTransition {
    /// Row-per-input matrix of size `(M+1) x (M+1)`, silence at index 0.
    pub fn matrix(&self) -> Vec<Vec<f64>> {
        let m = self.m as usize;
        let mut rows = Vec::with_capacity(m + 1);
        let mut silent = vec![self.pl0; m + 1];
        silent[0] = self.p00;
        rows.push(silent);
        for x in 1..=m {
            let mut row = vec![self.plm; m + 1];
            row[0] = self.p0l;
            row[x] = self.pll;
            rows.push(row);
        }
        rows
    }

    /// Output is independent of input: every tone decision is a coin flip or silence is forced.
    fn uninformative(m: u32, tau: f64) -> Self {
        let mf = f64::from(m);
        if tau == 0.0 {
            OofskTransition {
                p00: 0.0,
                pl0: 1.0 / mf,
                pll: 1.0 / mf,
                p0l: 0.0,
                plm: 1.0 / mf,
                tau,
                alpha_sq: 0.0,
                m,
            }
        } else {
            OofskTransition {
                p00: 1.0,
                pl0: 0.0,
                pll: 0.0,
                p0l: 1.0,
                plm: 0.0,
                tau,
                alpha_sq: 0.0,
                m,
            }
        }
    }
}

/// Either kind of transition, as returned for a single coherent fading realisation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Transition {
    Fsk(FskTransition),
    Oofsk(OofskTransition),
}

impl Transition {
    pub fn matrix(&self) -> Vec<Vec<f64>> {
        match self {
            Transition::Fsk(t) => t.matrix(),
            Transition::Oofsk(t) => t.matrix(),
        }
    }
}

/// Law of the received energy `|r|^2` on the transmitted tone: noncentral
/// chi-square with complex variance `variance` and mean power `mean_sq`
/// (density normalised for `N0 = 1`).
#[derive(Debug, Clone, Copy)]
pub(crate) struct ToneEnergy {
    pub variance: f64,
    pub mean_sq: f64,
}

impl ToneEnergy {
    pub fn density(&self, v: f64) -> f64 {
        if v < 0.0 {
            return 0.0;
        }
        let (vb, s) = (self.variance, self.mean_sq);
        let root_gap = v.sqrt() - s.sqrt();
        (-root_gap * root_gap / vb).exp() * bessel_i0_scaled(2.0 * (v * s).sqrt() / vb) / vb
    }

    /// Points where the density changes character, for splitting quadrature ranges.
    pub fn breakpoints(&self) -> Vec<f64> {
        let centre = self.mean_sq + self.variance;
        let spread = (self.variance * self.variance + 2.0 * self.mean_sq * self.variance).sqrt();
        [-6.0, -3.0, -1.0, 0.0, 1.0, 3.0, 6.0, 12.0, 20.0]
            .iter()
            .map(|&w| centre + w * spread)
            .filter(|&p| p > 0.0)
            .collect()
    }
}

fn check_snr(snr: f64) -> Result<()> {
    if !snr.is_finite() || snr < 0.0 {
        return Err(domain(format!("SNR must be finite and >= 0, got {snr}")));
    }
    Ok(())
}

fn check_m(m: u32) -> Result<()> {
    if m < 2 {
        return Err(domain(format!("alphabet size must be at least 2, got {m}")));
    }
    Ok(())
}

fn checked_probability(name: &str, p: f64) -> Result<f64> {
    if !(-PROBABILITY_SLACK..=1.0 + PROBABILITY_SLACK).contains(&p) {
        return Err(numerical(format!("{name} = {p:e} falls outside [0, 1]")));
    }
    Ok(p.clamp(0.0, 1.0))
}

/// Neumaier-compensated summation.
fn compensated_sum(terms: impl Iterator<Item = f64>) -> f64 {
    let mut sum = 0.0_f64;
    let mut carry = 0.0_f64;
    for t in terms {
        let next = sum + t;
        if sum.abs() >= t.abs() {
            carry += (sum - next) + t;
        } else {
            carry += (t - next) + sum;
        }
        sum = next;
    }
    sum + carry
}

/// `(1 - e^{-v})^n` evaluated as `exp(n ln(1 - e^{-v}))`.
fn none_exceed(v: f64, n: u32) -> f64 {
    if n == 0 {
        return 1.0;
    }
    (f64::from(n) * (-(-v).exp_m1()).ln()).exp()
}

/// The literal alternating sum
/// `sum_n (-1)^n C(M-1, n) e^{-n s / (n vb + 1)} / (n vb + 1)`
/// with `vb = variance_scale` and `s = mean_sq * snr`.
///
/// Exact in exact arithmetic, but the binomial weights reach `2^M / M`, so in
/// double precision it is only trustworthy for small alphabets.
pub fn fsk_p11_alternating(m: u32, snr: f64, variance_scale: f64, mean_sq: f64) -> Result<f64> {
    check_m(m)?;
    check_snr(snr)?;
    let s = mean_sq * snr;
    let terms = (0..m).map(|n| {
        let nf = f64::from(n);
        let denom = nf * variance_scale + 1.0;
        let weight = log_binomial(u64::from(m - 1), u64::from(n))
            .map(f64::exp)
            .unwrap_or(0.0);
        let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
        sign * weight * (-nf * s / denom).exp() / denom
    });
    Ok(compensated_sum(terms))
}

/// Sum form of `P_{1,1}`, regrouped so that every term is nonnegative.
///
/// Writing `mu = s / vb` and `y_k = 1 / (1 + k vb)`, the alternating sum equals
///
/// `prod_{k=1}^{M-1} (1 - y_k) * sum_j Poisson(j; mu) h_j(y_0, ..., y_{M-1})`
///
/// where `h_j` is the complete homogeneous symmetric polynomial of degree `j`.
/// `h_j` increases to `prod 1 / (1 - y_k)` geometrically, so once it settles
/// the remaining Poisson mass is folded in at once.
pub fn fsk_p11_sum(m: u32, snr: f64, variance_scale: f64, mean_sq: f64) -> Result<f64> {
    check_m(m)?;
    check_snr(snr)?;
    if !(variance_scale > 0.0) || mean_sq < 0.0 {
        return Err(domain(format!(
            "need variance_scale > 0 and mean_sq >= 0, got ({variance_scale}, {mean_sq})"
        )));
    }
    let vb = variance_scale;
    let mu = mean_sq * snr / vb;
    let ys: Vec<f64> = (1..m).map(|k| 1.0 / (1.0 + f64::from(k) * vb)).collect();
    let prefactor: f64 = (1..m)
        .map(|k| {
            let kv = f64::from(k) * vb;
            kv / (1.0 + kv)
        })
        .product();
    if mu == 0.0 {
        return Ok(prefactor);
    }

    // partial[k] = h_j over (y_0 = 1, y_1, ..., y_k) at the current degree j.
    let mut partial = vec![1.0; ys.len() + 1];
    let ln_mu = mu.ln();
    let last_degree = (mu + 12.0 * mu.sqrt() + 40.0).ceil() as u32;
    let mut sum = 0.0;
    let mut mass = 0.0_f64;
    let mut h_prev = 0.0;
    for j in 0..=last_degree {
        if j > 0 {
            // h^{(k)}_j = h^{(k-1)}_j + y_k h^{(k)}_{j-1}; y_0 = 1 keeps h^{(0)}_j = 1.
            let mut below = 1.0;
            for (k, &y) in ys.iter().enumerate() {
                let updated = below + y * partial[k + 1];
                partial[k + 1] = updated;
                below = updated;
            }
        }
        let h = partial[ys.len()];
        let weight = (-mu + f64::from(j) * ln_mu - libm::lgamma(f64::from(j) + 1.0)).exp();
        if j > 0 && h - h_prev <= 1e-17 * h {
            sum += h * (1.0 - mass).max(0.0);
            break;
        }
        sum += weight * h;
        mass += weight;
        h_prev = h;
    }
    Ok(prefactor * sum)
}

fn quad_config() -> QuadConfig {
    QuadConfig {
        abs_tol: 1e-15,
        rel_tol: 1e-12,
        max_intervals: 4000,
    }
}

/// `int_threshold^inf f(v) (1 - e^{-v})^{M-1} dv` for the tone-energy density `f`.
fn correct_detection_integral(m: u32, energy: ToneEnergy, threshold: f64) -> Result<f64> {
    let competitors = m - 1;
    let integrand = |v: f64| energy.density(v) * none_exceed(v, competitors);
    let mut points = energy.breakpoints();
    let lm = f64::from(m).ln();
    points.extend([0.5 * lm, lm, lm + 3.0, lm + 10.0]);
    let est = integrate_to_infinity(
        integrand,
        threshold,
        &points,
        energy.variance,
        &quad_config(),
    )?;
    Ok(est.value)
}

/// `P_{1,1}` as the integral over the transmitted-tone energy `v` of the
/// probability that all `M - 1` noise-only tones stay below `v`.
///
/// `v-bar = variance_scale`, `s-bar = mean_sq * snr`. AWGN is `(1, 1)`;
/// noncoherent Rician is `(1 + gamma^2 snr, |d|^2)`.
pub fn fsk_p11_quadrature(m: u32, snr: f64, variance_scale: f64, mean_sq: f64) -> Result<f64> {
    check_m(m)?;
    check_snr(snr)?;
    if !(variance_scale > 0.0) || mean_sq < 0.0 {
        return Err(domain(format!(
            "need variance_scale > 0 and mean_sq >= 0, got ({variance_scale}, {mean_sq})"
        )));
    }
    let energy = ToneEnergy {
        variance: variance_scale,
        mean_sq: mean_sq * snr,
    };
    checked_probability("P11", correct_detection_integral(m, energy, 0.0)?)
}

fn fsk_p11(m: u32, snr: f64, variance_scale: f64, mean_sq: f64) -> Result<FskTransition> {
    let p11 = if m <= FSK_SUM_FORM_MAX_M {
        fsk_p11_sum(m, snr, variance_scale, mean_sq)?
    } else {
        fsk_p11_quadrature(m, snr, variance_scale, mean_sq)?
    };
    Ok(FskTransition {
        p11: checked_probability("P11", p11)?,
        m,
    })
}

/// `P_{1,1}` of energy-detected M-FSK in AWGN.
pub fn fsk_p11_awgn(m: u32, snr: f64) -> Result<FskTransition> {
    check_m(m)?;
    check_snr(snr)?;
    fsk_p11(m, snr, 1.0, 1.0)
}

/// `P_{1,1}` of energy-detected M-FSK in noncoherent Rician fading.
pub fn fsk_p11_noncoherent_rician(
    m: u32,
    snr: f64,
    channel: &ChannelModel,
) -> Result<FskTransition> {
    check_m(m)?;
    check_snr(snr)?;
    let ChannelModel::NoncoherentRician(fading) = channel else {
        return Err(contract(format!(
            "expected a noncoherent Rician channel, got {:?}",
            channel.kind()
        )));
    };
    fsk_p11(m, snr, 1.0 + fading.gamma_sq * snr, fading.d_sq)
}

fn require_oofsk(spec: &ModulationSpec) -> Result<()> {
    if spec.family != Family::Oofsk {
        return Err(contract("operation requires an OOFSK modulation spec"));
    }
    Ok(())
}

fn require_positive_snr(snr: f64) -> Result<()> {
    check_snr(snr)?;
    if snr == 0.0 {
        return Err(domain("OOFSK detection threshold is undefined at zero SNR"));
    }
    Ok(())
}

/// `ln xi` of the AWGN threshold rule, `xi = M (1 - nu) e^{alpha^2} / nu`.
fn log_xi_awgn(spec: &ModulationSpec, alpha_sq: f64) -> LogValue {
    if spec.duty >= 1.0 {
        return LogValue::from_ln(f64::NEG_INFINITY);
    }
    LogValue::from_ln(f64::from(spec.m).ln() + (-spec.duty).ln_1p() + alpha_sq - spec.duty.ln())
}

fn threshold_awgn_from_alpha(spec: &ModulationSpec, alpha_sq: f64) -> Result<f64> {
    let log_xi = log_xi_awgn(spec, alpha_sq);
    if log_xi.ln() < 0.0 {
        return Ok(0.0);
    }
    let x = bessel_i0_inverse(log_xi.ln())?;
    Ok(x * x / (4.0 * alpha_sq))
}

/// MAP threshold `tau` on the largest tone energy for OOFSK in AWGN.
pub fn oofsk_threshold_awgn(spec: &ModulationSpec, snr: f64) -> Result<f64> {
    require_oofsk(spec)?;
    require_positive_snr(snr)?;
    threshold_awgn_from_alpha(spec, snr / spec.duty)
}

/// `ln Phi(x) = c_lin x + ln I0(c_root sqrt(x))`.
fn ln_phi(c_lin: f64, c_root: f64, x: f64) -> f64 {
    c_lin * x + ln_i0(c_root * x.sqrt())
}

/// Solves `ln Phi(x) = target` for `x >= 0` by safeguarded Newton iteration.
fn invert_phi(c_lin: f64, c_root: f64, target: f64) -> Result<f64> {
    if target <= 0.0 {
        return Ok(0.0);
    }
    if c_root == 0.0 {
        return Ok(target / c_lin);
    }
    let via_bessel = {
        let z = bessel_i0_inverse(target)?;
        (z / c_root).powi(2)
    };
    if c_lin == 0.0 {
        return Ok(via_bessel);
    }
    // Both terms of ln Phi are nonnegative, so each alone bounds the root from above.
    let mut lo = 0.0_f64;
    let mut hi = via_bessel.min(target / c_lin);
    let mut x = 0.5 * hi;
    for _ in 0..300 {
        let g = ln_phi(c_lin, c_root, x) - target;
        if g == 0.0 {
            return Ok(x);
        }
        if g > 0.0 {
            hi = x;
        } else {
            lo = x;
        }
        let slope = if x > 0.0 {
            let z = c_root * x.sqrt();
            c_lin + bessel_i1_i0_ratio(z) * c_root / (2.0 * x.sqrt())
        } else {
            c_lin + 0.25 * c_root * c_root
        };
        let mut next = x - g / slope;
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - x).abs() <= 4.0 * f64::EPSILON * next.abs() || hi - lo <= 4.0 * f64::EPSILON * hi
        {
            return Ok(next);
        }
        x = next;
    }
    Ok(x)
}

/// Coefficients of `ln Phi` and `ln xi` for the noncoherent Rician threshold rule.
fn noncoherent_threshold_terms(
    spec: &ModulationSpec,
    alpha_sq: f64,
    fading: &RicianFading,
) -> (f64, f64, LogValue) {
    let spread = 1.0 + alpha_sq * fading.gamma_sq;
    let c_lin = alpha_sq * fading.gamma_sq / spread;
    let c_root = 2.0 * (alpha_sq * fading.d_sq).sqrt() / spread;
    let log_xi = if spec.duty >= 1.0 {
        LogValue::from_ln(f64::NEG_INFINITY)
    } else {
        LogValue::from_ln(
            f64::from(spec.m).ln() + (-spec.duty).ln_1p() - spec.duty.ln()
                + spread.ln()
                + alpha_sq * fading.d_sq / spread,
        )
    };
    (c_lin, c_root, log_xi)
}

/// MAP threshold `tau = Phi^{-1}(xi)` for OOFSK in noncoherent Rician fading (0 when `xi < 1`).
pub fn oofsk_threshold_noncoherent(
    spec: &ModulationSpec,
    snr: f64,
    channel: &ChannelModel,
) -> Result<f64> {
    require_oofsk(spec)?;
    require_positive_snr(snr)?;
    let ChannelModel::NoncoherentRician(fading) = channel else {
        return Err(contract(format!(
            "expected a noncoherent Rician channel, got {:?}",
            channel.kind()
        )));
    };
    let (c_lin, c_root, log_xi) = noncoherent_threshold_terms(spec, snr / spec.duty, fading);
    if log_xi.ln() < 0.0 {
        return Ok(0.0);
    }
    invert_phi(c_lin, c_root, log_xi.ln())
}

/// Builds the five OOFSK entries from the tone-energy law and a threshold.
fn oofsk_from_threshold(
    m: u32,
    energy: ToneEnergy,
    tau: f64,
    alpha_sq: f64,
) -> Result<OofskTransition> {
    let mf = f64::from(m);
    let ln_below = (-(-tau).exp_m1()).ln(); // ln(1 - e^{-tau})
    let p00 = (mf * ln_below).exp();
    let pl0 = -(mf * ln_below).exp_m1() / mf;

    let (vb, s) = (energy.variance, energy.mean_sq);
    let (_, tone_below) = marcum_q1_pair((2.0 * s / vb).sqrt(), (2.0 * tau / vb).sqrt());
    let p0l = ((mf - 1.0) * ln_below).exp() * tone_below;

    let pll = if m <= OOFSK_SUM_FORM_MAX_M {
        let terms = (0..m).map(|n| {
            let nf = f64::from(n);
            let denom = nf * vb + 1.0;
            let weight = log_binomial(u64::from(m - 1), u64::from(n))
                .map(f64::exp)
                .unwrap_or(0.0);
            let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
            let (q, _) = marcum_q1_pair(
                (2.0 * s / (vb * denom)).sqrt(),
                (2.0 * denom * tau / vb).sqrt(),
            );
            sign * weight * (-nf * s / denom).exp() / denom * q
        });
        compensated_sum(terms)
    } else {
        correct_detection_integral(m, energy, tau)?
    };
    let pll = checked_probability("P_{l,l}", pll)?;
    let p0l = checked_probability("P_{0,l}", p0l)?;
    let plm = checked_probability("P_{l,m}", (1.0 - pll - p0l) / (mf - 1.0))?;
    Ok(OofskTransition {
        p00: checked_probability("P_{0,0}", p00)?,
        pl0: checked_probability("P_{l,0}", pl0)?,
        pll,
        p0l,
        plm,
        tau,
        alpha_sq,
        m,
    })
}

/// All OOFSK transition probabilities in AWGN with the MAP threshold.
pub fn oofsk_transitions_awgn(spec: &ModulationSpec, snr: f64) -> Result<OofskTransition> {
    require_oofsk(spec)?;
    require_positive_snr(snr)?;
    let alpha_sq = snr / spec.duty;
    let tau = threshold_awgn_from_alpha(spec, alpha_sq)?;
    oofsk_from_threshold(
        spec.m,
        ToneEnergy {
            variance: 1.0,
            mean_sq: alpha_sq,
        },
        tau,
        alpha_sq,
    )
}

/// All OOFSK transition probabilities in noncoherent Rician fading with the MAP threshold.
pub fn oofsk_transitions_noncoherent(
    spec: &ModulationSpec,
    snr: f64,
    channel: &ChannelModel,
) -> Result<OofskTransition> {
    let tau = oofsk_threshold_noncoherent(spec, snr, channel)?;
    let fading = channel
        .fading()
        .expect("threshold checked the channel kind");
    let alpha_sq = snr / spec.duty;
    let energy = ToneEnergy {
        variance: 1.0 + fading.gamma_sq * alpha_sq,
        mean_sq: fading.d_sq * alpha_sq,
    };
    oofsk_from_threshold(spec.m, energy, tau, alpha_sq)
}

/// Threshold of a coherent receiver that knows `|h|^2 = h_sq`. With no
/// received signal the MAP rule either always declares silence (`xi >= 1`
/// sends the threshold to infinity) or never does.
pub fn oofsk_threshold_coherent(spec: &ModulationSpec, snr: f64, h_sq: f64) -> Result<f64> {
    require_oofsk(spec)?;
    check_snr(snr)?;
    if !h_sq.is_finite() || h_sq < 0.0 {
        return Err(domain(format!("|h|^2 must be finite and >= 0, got {h_sq}")));
    }
    let effective = snr * h_sq;
    if effective == 0.0 {
        return Ok(if log_xi_awgn(spec, 0.0).ln() >= 0.0 {
            f64::INFINITY
        } else {
            0.0
        });
    }
    oofsk_threshold_awgn(spec, effective)
}

/// Transitions seen by a coherent receiver for one fading realisation with gain `|h|^2 = h_sq`:
/// the AWGN expressions at effective SNR `snr * h_sq`, with the OOFSK threshold
/// recomputed from `alpha^2 = snr h_sq / nu`.
pub fn coherent_realization_transition(
    spec: &ModulationSpec,
    snr: f64,
    h_sq: f64,
) -> Result<Transition> {
    check_snr(snr)?;
    if !h_sq.is_finite() || h_sq < 0.0 {
        return Err(domain(format!("|h|^2 must be finite and >= 0, got {h_sq}")));
    }
    let effective = snr * h_sq;
    match spec.family {
        Family::Fsk => Ok(Transition::Fsk(fsk_p11_awgn(spec.m, effective)?)),
        Family::Oofsk if effective == 0.0 => {
            let tau = oofsk_threshold_coherent(spec, snr, h_sq)?;
            Ok(Transition::Oofsk(OofskTransition::uninformative(
                spec.m, tau,
            )))
        }
        Family::Oofsk => Ok(Transition::Oofsk(oofsk_transitions_awgn(spec, effective)?)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn oofsk(m: u32, duty: f64) -> ModulationSpec {
        ModulationSpec::oofsk(m, duty).unwrap()
    }

    #[test]
    fn modulation_validation() {
        assert!(ModulationSpec::fsk(1).is_err());
        assert!(ModulationSpec::oofsk(4, 0.0).is_err());
        assert!(ModulationSpec::oofsk(4, 1.5).is_err());
        assert!(ModulationSpec::new(Family::Fsk, 4, 0.5).is_err());
        let p = oofsk(4, 0.2).input_distribution();
        assert_eq!(p.len(), 5);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn fading_normalisation() {
        for &k in &[0.0, 1.0, 4.0, 9.0, 16.0, 1e6] {
            let f = RicianFading::from_k(k).unwrap();
            assert!((f.d_sq() + f.gamma_sq() - 1.0).abs() < 1e-15);
            assert!((f.d_sq() / f.gamma_sq() - k).abs() <= 1e-9 * k.max(1.0));
        }
        let inf = RicianFading::from_k(f64::INFINITY).unwrap();
        assert_eq!((inf.d_sq(), inf.gamma_sq()), (1.0, 0.0));
        assert!(RicianFading::from_k(-1.0).is_err());
    }

    #[test]
    fn chance_level_at_zero_snr() {
        for m in [2, 5, 8, 30, 31, 48] {
            let t = fsk_p11_awgn(m, 0.0).unwrap();
            assert!((t.p11 - 1.0 / f64::from(m)).abs() < 1e-12, "m={m}");
            let nc =
                fsk_p11_noncoherent_rician(m, 0.0, &ChannelModel::noncoherent_rician(1.0).unwrap())
                    .unwrap();
            assert!((nc.p11 - 1.0 / f64::from(m)).abs() < 1e-12);
        }
    }

    #[test]
    fn binary_awgn_closed_form() {
        let expected = 1.0 - 0.5 * (-1.0_f64).exp();
        assert!((fsk_p11_awgn(2, 2.0).unwrap().p11 - expected).abs() < 1e-15);
        assert!((fsk_p11_quadrature(2, 2.0, 1.0, 1.0).unwrap() - expected).abs() < 1e-12);
        assert!((expected - 0.81606).abs() < 1e-5);
    }

    #[test]
    fn noiseless_limit() {
        for m in [2, 8, 30, 48] {
            assert!(fsk_p11_awgn(m, 200.0).unwrap().p11 > 1.0 - 1e-12);
        }
    }

    #[test]
    fn regrouped_sum_matches_literal_alternating_sum_for_small_m() {
        for m in [2, 3, 4, 8, 12] {
            for &snr in &[1e-3, 0.2, 1.0, 4.0, 15.0, 40.0] {
                for &(vb_slope, d_sq) in &[(0.0, 1.0), (0.5, 0.5), (1.0, 0.0)] {
                    let vb = 1.0 + vb_slope * snr;
                    let a = fsk_p11_alternating(m, snr, vb, d_sq).unwrap();
                    let b = fsk_p11_sum(m, snr, vb, d_sq).unwrap();
                    assert!((a - b).abs() < 1e-13, "m={m} snr={snr}: {a} vs {b}");
                }
            }
        }
    }

    #[test]
    fn forty_eight_tones_sum_and_quadrature_agree() {
        // The literal alternating sum has lost several digits here; the regrouped one has not.
        let q = fsk_p11_quadrature(48, 10.0, 1.0, 1.0).unwrap();
        let s = fsk_p11_sum(48, 10.0, 1.0, 1.0).unwrap();
        assert!((q - s).abs() < 1e-9, "{q} vs {s}");
    }

    #[test]
    fn noncoherent_degenerates_to_awgn() {
        let unfaded = ChannelModel::noncoherent_rician(f64::INFINITY).unwrap();
        for m in [2, 8, 16, 40] {
            for &snr in &[0.1, 1.0, 5.0] {
                let a = fsk_p11_awgn(m, snr).unwrap().p11;
                let b = fsk_p11_noncoherent_rician(m, snr, &unfaded).unwrap().p11;
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn noncoherent_eight_tones_k1_matches_quadrature_oracle() {
        let ch = ChannelModel::noncoherent_rician(1.0).unwrap();
        let got = fsk_p11_noncoherent_rician(8, 5.0, &ch).unwrap().p11;
        let oracle = fsk_p11_quadrature(8, 5.0, 1.0 + 0.5 * 5.0, 0.5).unwrap();
        assert!((got - oracle).abs() < 1e-10);
    }

    #[test]
    fn wrong_channel_kind_is_a_contract_error() {
        let r = fsk_p11_noncoherent_rician(4, 1.0, &ChannelModel::Awgn);
        assert!(matches!(r, Err(crate::Error::Contract(_))));
        let r = oofsk_threshold_noncoherent(&oofsk(4, 0.5), 1.0, &ChannelModel::Awgn);
        assert!(matches!(r, Err(crate::Error::Contract(_))));
        let r = oofsk_transitions_awgn(&ModulationSpec::fsk(4).unwrap(), 1.0);
        assert!(matches!(r, Err(crate::Error::Contract(_))));
    }

    #[test]
    fn threshold_full_duty_is_zero() {
        assert_eq!(oofsk_threshold_awgn(&oofsk(8, 1.0), 1.0).unwrap(), 0.0);
        let ch = ChannelModel::noncoherent_rician(1.0).unwrap();
        assert_eq!(
            oofsk_threshold_noncoherent(&oofsk(8, 1.0), 1.0, &ch).unwrap(),
            0.0
        );
        assert!(oofsk_threshold_awgn(&oofsk(8, 0.5), 0.0).is_err());
    }

    #[test]
    fn threshold_satisfies_defining_identity() {
        let spec = oofsk(8, 0.01);
        let snr = 0.1;
        let tau = oofsk_threshold_awgn(&spec, snr).unwrap();
        let alpha_sq = snr / 0.01;
        let log_xi = 8f64.ln() + 0.99f64.ln() + alpha_sq - 0.01f64.ln();
        let lhs = ln_i0(2.0 * (alpha_sq * tau).sqrt());
        assert!((lhs - log_xi).abs() <= 1e-10 * log_xi);

        // independent bisection on the linear-domain I0 (alpha^2 = 10 keeps it finite)
        let i0 = |x: f64| bessel_i0_scaled(x) * x.exp();
        let xi = log_xi.exp();
        let (mut lo, mut hi) = (0.0, 100.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if i0(mid) < xi {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let oracle = lo * lo / (4.0 * alpha_sq);
        assert!(((tau - oracle) / oracle).abs() < 1e-12, "{tau} vs {oracle}");
    }

    #[test]
    fn noncoherent_threshold_round_trip() {
        let spec = oofsk(8, 0.1);
        let ch = ChannelModel::noncoherent_rician(1.0).unwrap();
        let tau = oofsk_threshold_noncoherent(&spec, 1.0, &ch).unwrap();
        let fading = ch.fading().unwrap();
        let (c_lin, c_root, log_xi) = noncoherent_threshold_terms(&spec, 10.0, fading);
        assert!(tau > 0.0);
        assert!((ln_phi(c_lin, c_root, tau) - log_xi.ln()).abs() <= 1e-10);
    }

    #[test]
    fn noncoherent_threshold_degenerates_to_awgn() {
        let spec = oofsk(8, 0.05);
        let unfaded = ChannelModel::noncoherent_rician(f64::INFINITY).unwrap();
        for &snr in &[0.05, 0.5, 2.0] {
            let a = oofsk_threshold_awgn(&spec, snr).unwrap();
            let b = oofsk_threshold_noncoherent(&spec, snr, &unfaded).unwrap();
            assert!((a - b).abs() <= 1e-12 * a.max(1.0));
        }
    }

    #[test]
    fn rayleigh_threshold_is_linear_inversion() {
        let spec = oofsk(4, 0.2);
        let ch = ChannelModel::noncoherent_rician(0.0).unwrap();
        let tau = oofsk_threshold_noncoherent(&spec, 2.0, &ch).unwrap();
        let alpha_sq = 10.0_f64;
        let log_xi = (4.0_f64 * 0.8 / 0.2).ln() + (1.0 + alpha_sq).ln();
        assert!((tau - log_xi * (1.0 + alpha_sq) / alpha_sq).abs() < 1e-12);
    }

    fn assert_stochastic(t: &OofskTransition) {
        let mf = f64::from(t.m);
        assert!((t.p00 + mf * t.pl0 - 1.0).abs() <= 1e-12, "{t:?}");
        assert!(
            (t.p0l + t.pll + (mf - 1.0) * t.plm - 1.0).abs() <= 1e-12,
            "{t:?}"
        );
        for p in [t.p00, t.pl0, t.pll, t.p0l, t.plm] {
            assert!((0.0..=1.0).contains(&p));
        }
        for row in t.matrix() {
            assert!((row.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn full_duty_oofsk_collapses_to_fsk() {
        for m in [2, 8, 16] {
            let t = oofsk_transitions_awgn(&oofsk(m, 1.0), 3.0).unwrap();
            assert_eq!(t.tau, 0.0);
            assert_eq!(t.p00, 0.0);
            assert_eq!(t.p0l, 0.0);
            assert!((t.pll - fsk_p11_awgn(m, 3.0).unwrap().p11).abs() < 1e-12);
            assert_stochastic(&t);
        }
        let ch = ChannelModel::noncoherent_rician(1.0).unwrap();
        let t = oofsk_transitions_noncoherent(&oofsk(8, 1.0), 2.0, &ch).unwrap();
        assert!((t.pll - fsk_p11_noncoherent_rician(8, 2.0, &ch).unwrap().p11).abs() < 1e-12);
    }

    #[test]
    fn vanishing_snr_is_chance_level() {
        let t = oofsk_transitions_awgn(&oofsk(8, 0.3), 1e-8).unwrap();
        assert!((t.pll - t.plm).abs() < 1e-6);
        assert_stochastic(&t);
    }

    #[test]
    fn oofsk_noncoherent_degenerates_to_awgn() {
        let unfaded = ChannelModel::noncoherent_rician(f64::INFINITY).unwrap();
        for &(m, duty, snr) in &[(8, 0.01, 0.1), (4, 0.5, 2.0), (2, 0.9, 0.3)] {
            let spec = oofsk(m, duty);
            let a = oofsk_transitions_awgn(&spec, snr).unwrap();
            let b = oofsk_transitions_noncoherent(&spec, snr, &unfaded).unwrap();
            for (x, y) in [
                (a.p00, b.p00),
                (a.pl0, b.pl0),
                (a.pll, b.pll),
                (a.p0l, b.p0l),
                (a.plm, b.plm),
            ] {
                assert!((x - y).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn eight_tone_one_percent_duty_entries() {
        // Frozen from an independent scipy evaluation (ive, marcumq via ncx2.sf).
        let t = oofsk_transitions_awgn(&oofsk(8, 0.01), 0.1).unwrap();
        let frozen = [
            (t.tau, 9.0826),
            (t.p00, 0.9990914),
            (t.pl0, 1.13577e-4),
            (t.pll, 0.627572),
            (t.p0l, 0.372062),
            (t.plm, 5.2278e-5),
        ];
        for (got, want) in frozen {
            assert!(((got - want) / want).abs() < 5e-5, "{got} vs {want}");
        }
        assert_stochastic(&t);
    }

    #[test]
    fn oofsk_sum_and_integral_agree() {
        for &(m, duty, snr) in &[(8, 0.01, 0.1), (4, 0.3, 1.0), (16, 0.1, 0.5)] {
            let spec = oofsk(m, duty);
            let t = oofsk_transitions_awgn(&spec, snr).unwrap();
            let energy = ToneEnergy {
                variance: 1.0,
                mean_sq: t.alpha_sq,
            };
            let integral = correct_detection_integral(m, energy, t.tau).unwrap();
            assert!(
                (integral - t.pll).abs() < 1e-10,
                "m={m}: {integral} vs {}",
                t.pll
            );
        }
    }

    #[test]
    fn oofsk_large_alphabet_uses_integral_and_stays_stochastic() {
        let t = oofsk_transitions_awgn(&oofsk(32, 0.1), 0.8).unwrap();
        assert_stochastic(&t);
        let ch = ChannelModel::noncoherent_rician(4.0).unwrap();
        let t = oofsk_transitions_noncoherent(&oofsk(24, 0.2), 1.5, &ch).unwrap();
        assert_stochastic(&t);
    }

    #[test]
    fn coherent_realization_cases() {
        let fsk4 = ModulationSpec::fsk(4).unwrap();
        let Transition::Fsk(t) = coherent_realization_transition(&fsk4, 1.0, 2.0).unwrap() else {
            panic!()
        };
        assert_eq!(t.p11, fsk_p11_awgn(4, 2.0).unwrap().p11);
        let Transition::Fsk(t) = coherent_realization_transition(&fsk4, 1.0, 0.0).unwrap() else {
            panic!()
        };
        assert!((t.p11 - 0.25).abs() < 1e-15);

        let spec = oofsk(8, 0.1);
        let Transition::Oofsk(t) = coherent_realization_transition(&spec, 0.5, 1.0).unwrap() else {
            panic!()
        };
        assert_eq!(t, oofsk_transitions_awgn(&spec, 0.5).unwrap());
        let Transition::Oofsk(t) = coherent_realization_transition(&spec, 0.5, 0.0).unwrap() else {
            panic!()
        };
        assert_stochastic(&t);
        assert_eq!(t.p00, 1.0);
        assert_eq!(t.p0l, 1.0);
    }
}
