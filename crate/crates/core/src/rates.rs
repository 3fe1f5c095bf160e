//! Achievable rates, spectral efficiency and bit energy.

use std::cell::RefCell;
use std::f64::consts::{LN_2, LOG2_E};

use crate::channel::{
    coherent_realization_transition, fsk_p11_awgn, fsk_p11_noncoherent_rician,
    oofsk_transitions_awgn, oofsk_transitions_noncoherent, ChannelModel, Family, FskTransition,
    ModulationSpec, OofskTransition, ToneEnergy, Transition,
};
use crate::error::{contract, Error, Result};
use crate::quad::{integrate_to_infinity, QuadConfig};

/// Default relative tolerance of [`expect_over_rician`].
pub const DEFAULT_EXPECTATION_TOL: f64 = 1e-8;

/// Tolerance used when a coherent rate feeds a curve or an optimiser.
const COHERENT_RATE_TOL: f64 = 1e-10;

/// `x ln x` with `0 ln 0 = 0`.
fn xlx(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        x * x.ln()
    }
}

/// Mutual information of the symmetric M-ary channel with equiprobable inputs,
/// `ln M + p ln p + (1 - p) ln((1 - p) / (M - 1))`.
pub fn fsk_capacity(trans: &FskTransition) -> f64 {
    let p = trans.p11;
    let m = f64::from(trans.m);
    // Same expression arranged around ln(pM) and ln((1-p)M/(M-1)) so it does not
    // cancel near chance level.
    let hit = if p > 0.0 {
        p * (p * m - 1.0).ln_1p()
    } else {
        0.0
    };
    let miss = if p < 1.0 {
        (1.0 - p) * ((1.0 - p * m) / (m - 1.0)).ln_1p()
    } else {
        0.0
    };
    (hit + miss).max(0.0)
}

/// Mutual information of OOFSK with silence probability `1 - nu` and `nu / M` per tone.
pub fn oofsk_rate(trans: &OofskTransition, spec: &ModulationSpec) -> Result<f64> {
    if spec.family() != Family::Oofsk || spec.m() != trans.m {
        return Err(contract(
            "transition and modulation spec do not describe the same OOFSK alphabet",
        ));
    }
    let nu = spec.duty();
    let m = f64::from(trans.m);
    let silent_out = (1.0 - nu) * trans.p00 + nu * trans.p0l;
    let tone_out = (1.0 - nu) * trans.pl0 + (nu / m) * trans.pll + ((m - 1.0) * nu / m) * trans.plm;
    let output_entropy = -xlx(silent_out) - m * xlx(tone_out);
    let neg_conditional = (1.0 - nu) * (xlx(trans.p00) + m * xlx(trans.pl0))
        + nu * (xlx(trans.p0l) + xlx(trans.pll) + (m - 1.0) * xlx(trans.plm));
    Ok((output_entropy + neg_conditional).max(0.0))
}

/// `I(X; Y)` for a discrete memoryless channel with `matrix[x][y] = P(y | x)`.
pub fn generic_dmc_mi(matrix: &[Vec<f64>], input: &[f64]) -> Result<f64> {
    if matrix.len() != input.len() || matrix.is_empty() {
        return Err(contract(format!(
            "matrix has {} rows but the input distribution has {} entries",
            matrix.len(),
            input.len()
        )));
    }
    let outputs = matrix[0].len();
    for (x, row) in matrix.iter().enumerate() {
        if row.len() != outputs {
            return Err(contract(format!(
                "row {x} has {} entries, expected {outputs}",
                row.len()
            )));
        }
        let total: f64 = row.iter().sum();
        if (total - 1.0).abs() > 1e-10 || row.iter().any(|&p| !(0.0..=1.0).contains(&p)) {
            return Err(contract(format!(
                "row {x} is not a probability vector (sum {total})"
            )));
        }
    }
    let input_total: f64 = input.iter().sum();
    if (input_total - 1.0).abs() > 1e-12 || input.iter().any(|&p| p < 0.0) {
        return Err(contract(format!(
            "input distribution sums to {input_total}"
        )));
    }

    let mut output = vec![0.0; outputs];
    let mut neg_conditional = 0.0;
    for (row, &px) in matrix.iter().zip(input) {
        for (out, &p) in output.iter_mut().zip(row) {
            *out += px * p;
        }
        neg_conditional += px * row.iter().map(|&p| xlx(p)).sum::<f64>();
    }
    let output_entropy: f64 = -output.iter().map(|&p| xlx(p)).sum::<f64>();
    Ok((output_entropy + neg_conditional).max(0.0))
}

/// `E[f(|h|^2)]` for `h ~ CN(d, gamma^2)` of a coherent Rician channel.
pub fn expect_over_rician<F: Fn(f64) -> f64>(
    f: F,
    channel: &ChannelModel,
    tol: f64,
) -> Result<f64> {
    expect_over_rician_hinted(|x| Ok(f(x)), channel, tol, &[])
}

/// As [`expect_over_rician`] for a fallible integrand, with extra breakpoints where `f` bends.
pub(crate) fn expect_over_rician_hinted<F: Fn(f64) -> Result<f64>>(
    f: F,
    channel: &ChannelModel,
    tol: f64,
    hints: &[f64],
) -> Result<f64> {
    let ChannelModel::CoherentRician(fading) = channel else {
        return Err(contract(format!(
            "expected a coherent Rician channel, got {:?}",
            channel.kind()
        )));
    };
    if fading.gamma_sq() == 0.0 {
        return f(fading.d_sq());
    }
    let gain = ToneEnergy {
        variance: fading.gamma_sq(),
        mean_sq: fading.d_sq(),
    };
    let failure: RefCell<Option<Error>> = RefCell::new(None);
    let integrand = |x: f64| {
        let weight = gain.density(x);
        if weight == 0.0 {
            return 0.0;
        }
        match f(x) {
            Ok(v) => weight * v,
            Err(e) => {
                failure.borrow_mut().get_or_insert(e);
                f64::NAN
            }
        }
    };
    let mut points = gain.breakpoints();
    points.extend(hints.iter().copied().filter(|&p| p > 0.0 && p.is_finite()));
    let config = QuadConfig {
        abs_tol: 1e-15,
        rel_tol: tol,
        max_intervals: 4000,
    };
    let est = integrate_to_infinity(integrand, 0.0, &points, gain.variance, &config);
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    Ok(est?.value)
}

/// One point of a rate curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatePoint {
    pub snr: f64,
    pub rate_nats: f64,
    /// Bits/s/Hz over the `M` tone bandwidth.
    pub spectral_eff: f64,
    /// `+inf` when the rate is zero.
    pub ebn0_db: f64,
}

impl RatePoint {
    pub fn new(m: u32, snr: f64, rate_nats: f64) -> Self {
        RatePoint {
            snr,
            rate_nats,
            spectral_eff: rate_nats * LOG2_E / f64::from(m),
            ebn0_db: ebn0_db(snr, rate_nats),
        }
    }
}

/// `10 log10(snr ln 2 / rate)`, infinite at zero rate.
pub fn ebn0_db(snr: f64, rate_nats: f64) -> f64 {
    if rate_nats <= 0.0 {
        f64::INFINITY
    } else {
        10.0 * (snr * LN_2 / rate_nats).log10()
    }
}

fn transition_rate(spec: &ModulationSpec, trans: &Transition) -> Result<f64> {
    match trans {
        Transition::Fsk(t) => Ok(fsk_capacity(t)),
        Transition::Oofsk(t) => oofsk_rate(t, spec),
    }
}

/// Achievable rate in nats per symbol at linear SNR `snr`.
pub fn rate_nats(spec: &ModulationSpec, channel: &ChannelModel, snr: f64) -> Result<f64> {
    if !(snr > 0.0) || !snr.is_finite() {
        return Err(crate::error::domain(format!(
            "SNR must be finite and > 0, got {snr}"
        )));
    }
    match (spec.family(), channel) {
        (Family::Fsk, ChannelModel::Awgn) => Ok(fsk_capacity(&fsk_p11_awgn(spec.m(), snr)?)),
        (Family::Fsk, ChannelModel::NoncoherentRician(_)) => Ok(fsk_capacity(
            &fsk_p11_noncoherent_rician(spec.m(), snr, channel)?,
        )),
        (Family::Oofsk, ChannelModel::Awgn) => {
            oofsk_rate(&oofsk_transitions_awgn(spec, snr)?, spec)
        }
        (Family::Oofsk, ChannelModel::NoncoherentRician(_)) => {
            oofsk_rate(&oofsk_transitions_noncoherent(spec, snr, channel)?, spec)
        }
        (_, ChannelModel::CoherentRician(_)) => {
            // The rate saturates once snr |h|^2 / nu is a few times ln M.
            let knee = f64::from(spec.m()).ln().max(1.0) * spec.duty() / snr;
            let hints = [
                0.1 * knee,
                0.5 * knee,
                knee,
                2.0 * knee,
                5.0 * knee,
                20.0 * knee,
            ];
            expect_over_rician_hinted(
                |h_sq| transition_rate(spec, &coherent_realization_transition(spec, snr, h_sq)?),
                channel,
                COHERENT_RATE_TOL,
                &hints,
            )
        }
    }
}

pub fn rate_point(spec: &ModulationSpec, channel: &ChannelModel, snr: f64) -> Result<RatePoint> {
    Ok(RatePoint::new(
        spec.m(),
        snr,
        rate_nats(spec, channel, snr)?,
    ))
}

/// Rate points for each SNR, evaluated concurrently when the `parallel` feature is on.
pub fn rate_curve(
    spec: &ModulationSpec,
    channel: &ChannelModel,
    snrs: &[f64],
) -> Result<Vec<RatePoint>> {
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        snrs.par_iter()
            .map(|&snr| rate_point(spec, channel, snr))
            .collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        snrs.iter()
            .map(|&snr| rate_point(spec, channel, snr))
            .collect()
    }
}
