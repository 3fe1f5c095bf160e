//! Minimum-bit-energy search and the low-SNR schedules.

use crate::channel::{fsk_p11_awgn, oofsk_transitions_awgn, ChannelModel, Family, ModulationSpec};
use crate::error::{domain, Result};
use crate::rates::{ebn0_db, fsk_capacity, oofsk_rate, rate_nats, RatePoint};

/// Points in the log-spaced pre-scan.
pub const GRID_POINTS: usize = 201;

/// Default search bracket in linear SNR.
pub const DEFAULT_BRACKET: (f64, f64) = (1e-3, 1e3);

/// Bracket widenings attempted by [`min_bit_energy_auto`].
pub const MAX_WIDENINGS: usize = 3;

/// Golden-section stops once the bracket in `ln snr` is this narrow.
const LN_SNR_WIDTH: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MinBitEnergyResult {
    pub ebn0_min_db: f64,
    /// Spectral efficiency at the optimum, bits/s/Hz.
    pub se_star: f64,
    pub snr_star: f64,
    /// False when the pre-scan minimum sat on a bracket edge.
    pub converged: bool,
}

fn ebn0_at(spec: &ModulationSpec, channel: &ChannelModel, ln_snr: f64) -> Result<f64> {
    let snr = ln_snr.exp();
    Ok(ebn0_db(snr, rate_nats(spec, channel, snr)?))
}

/// Minimises `Eb/N0` over `snr in [snr_lo, snr_hi]`: log-grid pre-scan, then
/// golden section in `ln snr` around the best grid point.
pub fn min_bit_energy(
    spec: &ModulationSpec,
    channel: &ChannelModel,
    snr_lo: f64,
    snr_hi: f64,
) -> Result<MinBitEnergyResult> {
    if !(snr_lo > 0.0 && snr_lo < snr_hi && snr_hi.is_finite()) {
        return Err(domain(format!(
            "need 0 < snr_lo < snr_hi, got [{snr_lo}, {snr_hi}]"
        )));
    }
    let (a, b) = (snr_lo.ln(), snr_hi.ln());
    let step = (b - a) / (GRID_POINTS - 1) as f64;
    let grid: Vec<f64> = (0..GRID_POINTS).map(|i| a + step * i as f64).collect();
    let values = grid
        .iter()
        .map(|&x| ebn0_at(spec, channel, x))
        .collect::<Result<Vec<f64>>>()?;
    let best = values
        .iter()
        .enumerate()
        .min_by(|l, r| l.1.total_cmp(r.1))
        .map(|(i, _)| i)
        .expect("grid is nonempty");

    let finish = |ln_snr: f64, converged: bool| -> Result<MinBitEnergyResult> {
        let snr = ln_snr.exp();
        let point = RatePoint::new(spec.m(), snr, rate_nats(spec, channel, snr)?);
        Ok(MinBitEnergyResult {
            ebn0_min_db: point.ebn0_db,
            se_star: point.spectral_eff,
            snr_star: snr,
            converged,
        })
    };
    if best == 0 || best == GRID_POINTS - 1 {
        return finish(grid[best], false);
    }

    let inv_phi = 0.5 * (5f64.sqrt() - 1.0);
    let (mut lo, mut hi) = (grid[best - 1], grid[best + 1]);
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let mut f1 = ebn0_at(spec, channel, x1)?;
    let mut f2 = ebn0_at(spec, channel, x2)?;
    while hi - lo > LN_SNR_WIDTH {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = ebn0_at(spec, channel, x1)?;
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = ebn0_at(spec, channel, x2)?;
        }
    }
    // Never report worse than the grid optimum.
    let (x, fx) = if f1 <= f2 { (x1, f1) } else { (x2, f2) };
    if fx <= values[best] {
        finish(x, true)
    } else {
        finish(grid[best], true)
    }
}

/// [`min_bit_energy`] over [`DEFAULT_BRACKET`], widening the offending side
/// tenfold up to [`MAX_WIDENINGS`] times while the optimum sits on an edge.
pub fn min_bit_energy_auto(
    spec: &ModulationSpec,
    channel: &ChannelModel,
) -> Result<MinBitEnergyResult> {
    let (mut lo, mut hi) = DEFAULT_BRACKET;
    let mut result = min_bit_energy(spec, channel, lo, hi)?;
    for _ in 0..MAX_WIDENINGS {
        if result.converged {
            break;
        }
        if (result.snr_star / lo).ln() < (hi / result.snr_star).ln() {
            lo /= 10.0;
        } else {
            hi *= 10.0;
        }
        result = min_bit_energy(spec, channel, lo, hi)?;
    }
    Ok(result)
}

/// Minimum bit energy for each alphabet size; cells run concurrently with the `parallel` feature.
pub fn sweep_m(
    family: Family,
    duty: f64,
    channel: &ChannelModel,
    m_list: &[u32],
) -> Result<Vec<(u32, MinBitEnergyResult)>> {
    if m_list.is_empty() {
        return Err(domain("alphabet list is empty"));
    }
    let cell = |&m: &u32| -> Result<(u32, MinBitEnergyResult)> {
        let spec = ModulationSpec::new(family, m, duty)?;
        Ok((m, min_bit_energy_auto(&spec, channel)?))
    };
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        m_list.par_iter().map(cell).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        m_list.iter().map(cell).collect()
    }
}

/// `C_M(snr) / snr` at `snr = (1 + eps) ln M` for FSK in AWGN.
pub fn logm_snr_ratio(m: u32, eps: f64) -> Result<f64> {
    if !(eps > 0.0) {
        return Err(domain(format!("eps must be > 0, got {eps}")));
    }
    let snr = (1.0 + eps) * f64::from(m.max(2)).ln();
    let rate = fsk_capacity(&fsk_p11_awgn(m, snr)?);
    Ok(rate / snr)
}

/// One point of the vanishing-duty schedule `nu = snr / ((1 + eps) ln(1/snr))` in AWGN.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SchedulePoint {
    pub snr: f64,
    pub nu: f64,
    pub alpha_sq: f64,
    pub tau: f64,
    pub rate_nats: f64,
    pub rate_over_snr: f64,
}

pub fn vanishing_duty_schedule(m: u32, eps: f64, snr: f64) -> Result<SchedulePoint> {
    if !(eps > 0.0) {
        return Err(domain(format!("eps must be > 0, got {eps}")));
    }
    if !(snr > 0.0 && snr < 1.0) {
        return Err(domain(format!("schedule needs 0 < snr < 1, got {snr}")));
    }
    let nu = snr / ((1.0 + eps) * (1.0 / snr).ln());
    if nu >= 1.0 {
        return Err(domain(format!(
            "schedule gives duty {nu} >= 1 at snr {snr}"
        )));
    }
    let spec = ModulationSpec::oofsk(m, nu)?;
    let trans = oofsk_transitions_awgn(&spec, snr)?;
    let rate = oofsk_rate(&trans, &spec)?;
    Ok(SchedulePoint {
        snr,
        nu,
        alpha_sq: trans.alpha_sq,
        tau: trans.tau,
        rate_nats: rate,
        rate_over_snr: rate / snr,
    })
}
