//! Browser bindings for the demo page. Every call returns a flat `Float64Array`
//! (or CSV text) so the page can plot without any glue beyond wasm-bindgen.

use fsk_energy::channel::{ChannelModel, Family, ModulationSpec};
use fsk_energy::mc::{compare_with_analytic, simulate_transitions, McConfig};
use fsk_energy::optim::sweep_m;
use fsk_energy::rates::rate_curve;
use wasm_bindgen::prelude::*;

const MAX_DEMO_TRIALS: u64 = 2_000_000;
const MAX_GRID_POINTS: usize = 2_000;

fn family(name: &str) -> Result<Family, String> {
    match name {
        "fsk" => Ok(Family::Fsk),
        "oofsk" => Ok(Family::Oofsk),
        other => Err(format!("unknown modulation '{other}'")),
    }
}

fn channel(name: &str, rician_k: f64) -> Result<ChannelModel, String> {
    let model = match name {
        "awgn" => Ok(ChannelModel::Awgn),
        "coherent-rician" => ChannelModel::coherent_rician(rician_k),
        "noncoherent-rician" => ChannelModel::noncoherent_rician(rician_k),
        other => return Err(format!("unknown channel '{other}'")),
    };
    model.map_err(|e| e.to_string())
}

fn spec(modulation: &str, m: u32, duty: f64) -> Result<ModulationSpec, String> {
    let family = family(modulation)?;
    let duty = if family == Family::Fsk { 1.0 } else { duty };
    ModulationSpec::new(family, m, duty).map_err(|e| e.to_string())
}

/// `[snr_db, ebn0_db, spectral_eff, ...]` triples over `lo_db..=hi_db`.
#[wasm_bindgen]
#[allow(clippy::too_many_arguments)]
pub fn bit_energy_curve(
    modulation: &str,
    m: u32,
    duty: f64,
    channel_name: &str,
    rician_k: f64,
    lo_db: f64,
    hi_db: f64,
    step_db: f64,
) -> Result<Vec<f64>, String> {
    let spec = spec(modulation, m, duty)?;
    let ch = channel(channel_name, rician_k)?;
    if !(step_db > 0.0 && hi_db > lo_db) {
        return Err("grid needs lo < hi and a positive step".into());
    }
    let n = ((hi_db - lo_db) / step_db - 0.5).ceil() as usize + 1;
    if n > MAX_GRID_POINTS {
        return Err(format!("grid has {n} points, limit is {MAX_GRID_POINTS}"));
    }
    let dbs: Vec<f64> = (0..n).map(|i| lo_db + i as f64 * step_db).collect();
    let snrs: Vec<f64> = dbs.iter().map(|db| 10f64.powf(db / 10.0)).collect();
    let points = rate_curve(&spec, &ch, &snrs).map_err(|e| e.to_string())?;
    Ok(dbs
        .iter()
        .zip(points)
        .flat_map(|(&db, p)| [db, p.ebn0_db, p.spectral_eff])
        .collect())
}

/// `[m, ebn0_min_db, se_star, ...]` triples, one per alphabet size.
#[wasm_bindgen]
pub fn min_bit_energy_vs_m(
    modulation: &str,
    duty: f64,
    channel_name: &str,
    rician_k: f64,
    ms: Vec<u32>,
) -> Result<Vec<f64>, String> {
    let family = family(modulation)?;
    let duty = if family == Family::Fsk { 1.0 } else { duty };
    let ch = channel(channel_name, rician_k)?;
    let cells = sweep_m(family, duty, &ch, &ms).map_err(|e| e.to_string())?;
    Ok(cells
        .into_iter()
        .flat_map(|(m, r)| [f64::from(m), r.ebn0_min_db, r.se_star])
        .collect())
}

/// Analytic against simulated transition entries as CSV `entry,analytic,empirical,z`.
#[wasm_bindgen]
#[allow(clippy::too_many_arguments)]
pub fn transition_check(
    modulation: &str,
    m: u32,
    duty: f64,
    channel_name: &str,
    rician_k: f64,
    snr_db: f64,
    trials: u32,
    seed: u32,
) -> Result<String, String> {
    let trials = u64::from(trials);
    if !(1..=MAX_DEMO_TRIALS).contains(&trials) {
        return Err(format!("trials must lie in 1..={MAX_DEMO_TRIALS}"));
    }
    let config = McConfig {
        spec: spec(modulation, m, duty)?,
        channel: channel(channel_name, rician_k)?,
        snr: 10f64.powf(snr_db / 10.0),
        trials_per_input: trials,
        seed: u64::from(seed),
    };
    let emp = simulate_transitions(&config).map_err(|e| e.to_string())?;
    let report = compare_with_analytic(&config, &emp).map_err(|e| e.to_string())?;
    let mut out = String::from("entry,analytic,empirical,z\n");
    for c in report {
        out.push_str(&format!(
            "{},{:.6e},{:.6e},{:.2}\n",
            c.entry, c.analytic, c.empirical, c.z
        ));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn curve_triples() {
        let v = bit_energy_curve("fsk", 2, 1.0, "awgn", 0.0, 0.0, 10.0, 0.5).unwrap();
        assert_eq!(v.len(), 21 * 3);
        let min = v.chunks(3).map(|c| c[1]).fold(f64::INFINITY, f64::min);
        assert!((min - 7.82).abs() < 0.01);
        assert!(bit_energy_curve("fsk", 2, 1.0, "awgn", 0.0, 1.0, 0.0, 0.5).is_err());
        assert!(bit_energy_curve("psk", 2, 1.0, "awgn", 0.0, 0.0, 1.0, 0.5).is_err());
    }

    #[test]
    fn sweep_triples() {
        let v = min_bit_energy_vs_m("fsk", 1.0, "noncoherent-rician", 1.0, vec![2, 48]).unwrap();
        assert_eq!(v[0], 2.0);
        assert_eq!(v[3], 48.0);
        assert!((v[4] - 4.233).abs() < 1e-3);
    }

    #[test]
    fn transition_report() {
        let csv = transition_check("oofsk", 8, 0.01, "awgn", 0.0, -10.0, 100_000, 7).unwrap();
        assert_eq!(csv.lines().count(), 6);
        assert!(csv.lines().nth(1).unwrap().starts_with("p00,"));
        assert!(transition_check("fsk", 2, 1.0, "rayleigh", 0.0, 0.0, 10, 1).is_err());
    }
}
