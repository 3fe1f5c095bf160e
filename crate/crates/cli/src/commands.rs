use std::fmt::Write;

use fsk_energy::channel::{ChannelModel, Family, ModulationSpec};
use fsk_energy::mc::{compare_with_analytic, simulate_transitions, McConfig};
use fsk_energy::optim::{sweep_m, vanishing_duty_schedule};
use fsk_energy::rates::rate_curve;

use crate::format::{db_to_linear, linear_to_db, parse_list, parse_range, sig12};
use crate::{
    ChannelArg, CliError, CurveArgs, LinkArgs, McArgs, MinbeArgs, Modulation, ScheduleArgs,
};

const MIN_TRIALS: u64 = 10_000;

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn check_m(m: u32) -> Result<(), CliError> {
    if m < 2 {
        return Err(usage(format!("--m must be at least 2, got {m}")));
    }
    Ok(())
}

fn check_duty(duty: f64) -> Result<(), CliError> {
    if !(duty > 0.0 && duty <= 1.0) {
        return Err(usage(format!("duty must lie in (0, 1], got {duty}")));
    }
    Ok(())
}

fn channel_model(link: &LinkArgs) -> Result<ChannelModel, CliError> {
    match (link.channel, link.rician_k) {
        (ChannelArg::Awgn, None) => Ok(ChannelModel::Awgn),
        (ChannelArg::Awgn, Some(_)) => Err(usage("--rician-k is meaningless on the awgn channel")),
        (_, None) => Err(usage("fading channels need --rician-k")),
        (_, Some(k)) if !(k >= 0.0) => Err(usage(format!("--rician-k must be >= 0, got {k}"))),
        (ChannelArg::CoherentRician, Some(k)) => Ok(ChannelModel::coherent_rician(k)?),
        (ChannelArg::NoncoherentRician, Some(k)) => Ok(ChannelModel::noncoherent_rician(k)?),
    }
}

fn channel_name(c: ChannelArg) -> &'static str {
    match c {
        ChannelArg::Awgn => "awgn",
        ChannelArg::CoherentRician => "coherent-rician",
        ChannelArg::NoncoherentRician => "noncoherent-rician",
    }
}

fn family(modulation: Modulation) -> Family {
    match modulation {
        Modulation::Fsk => Family::Fsk,
        Modulation::Oofsk => Family::Oofsk,
    }
}

/// Resolves the duty cycle: FSK accepts only 1, OOFSK must state one.
fn resolve_duty(modulation: Modulation, duty: Option<f64>) -> Result<f64, CliError> {
    match (modulation, duty) {
        (Modulation::Fsk, None) => Ok(1.0),
        (Modulation::Fsk, Some(1.0)) => Ok(1.0),
        (Modulation::Fsk, Some(d)) => Err(usage(format!("fsk has duty 1, got --duty {d}"))),
        (Modulation::Oofsk, None) => Err(usage("oofsk needs --duty")),
        (Modulation::Oofsk, Some(d)) => {
            check_duty(d)?;
            Ok(d)
        }
    }
}

fn spec_for(modulation: Modulation, m: u32, duty: Option<f64>) -> Result<ModulationSpec, CliError> {
    check_m(m)?;
    let duty = resolve_duty(modulation, duty)?;
    Ok(ModulationSpec::new(family(modulation), m, duty)?)
}

pub fn curve(args: &CurveArgs) -> Result<String, CliError> {
    let spec = spec_for(args.link.modulation, args.m, args.duty)?;
    let channel = channel_model(&args.link)?;
    let grid = parse_range(&args.snr_db).map_err(usage)?;
    if grid.len() < 2 || grid[1] <= grid[0] {
        return Err(usage(format!(
            "--snr-db '{}' must ascend with start < stop",
            args.snr_db
        )));
    }
    let snrs: Vec<f64> = grid.iter().map(|&db| db_to_linear(db)).collect();
    let points = rate_curve(&spec, &channel, &snrs)?;
    let mut out = String::from("snr_db,rate_nats,spectral_eff_bpshz,ebn0_db\n");
    for (db, p) in grid.iter().zip(points) {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            sig12(*db),
            sig12(p.rate_nats),
            sig12(p.spectral_eff),
            sig12(p.ebn0_db)
        );
    }
    Ok(out)
}

pub fn minbe(args: &MinbeArgs) -> Result<String, CliError> {
    let channel = channel_model(&args.link)?;
    let ms: Vec<u32> = parse_list(&args.m_list).map_err(usage)?;
    for &m in &ms {
        check_m(m)?;
    }
    let duties: Vec<f64> = match (&args.duty_list, args.link.modulation) {
        (None, Modulation::Fsk) => vec![1.0],
        (None, Modulation::Oofsk) => return Err(usage("oofsk needs --duty-list")),
        (Some(list), modulation) => {
            let duties: Vec<f64> = parse_list(list).map_err(usage)?;
            for &d in &duties {
                resolve_duty(modulation, Some(d))?;
            }
            duties
        }
    };
    let k_text = args.link.rician_k.map(sig12).unwrap_or_default();
    let name = channel_name(args.link.channel);
    let mut out =
        String::from("m,duty,channel,rician_k,ebn0_min_db,se_star_bpshz,snr_star_db,converged\n");
    for &duty in &duties {
        for (m, r) in sweep_m(family(args.link.modulation), duty, &channel, &ms)? {
            if !r.converged {
                eprintln!(
                    "fsk-energy: warning: minimum for m={m} duty={} sits on the search edge",
                    sig12(duty)
                );
            }
            let _ = writeln!(
                out,
                "{m},{},{name},{k_text},{},{},{},{}",
                sig12(duty),
                sig12(r.ebn0_min_db),
                sig12(r.se_star),
                sig12(linear_to_db(r.snr_star)),
                r.converged
            );
        }
    }
    Ok(out)
}

/// Returns the report and the number of entries outside the agreement band.
pub fn mc(args: &McArgs) -> Result<(String, usize), CliError> {
    let spec = spec_for(args.link.modulation, args.m, args.duty)?;
    let channel = channel_model(&args.link)?;
    if args.trials < MIN_TRIALS {
        return Err(usage(format!(
            "--trials must be at least {MIN_TRIALS}, got {}",
            args.trials
        )));
    }
    if !args.snr_db.is_finite() {
        return Err(usage(format!(
            "--snr-db must be finite, got {}",
            args.snr_db
        )));
    }
    let config = McConfig {
        spec,
        channel,
        snr: db_to_linear(args.snr_db),
        trials_per_input: args.trials,
        seed: args.seed,
    };
    let emp = simulate_transitions(&config)?;
    let report = compare_with_analytic(&config, &emp)?;
    let mut out = String::from("entry,analytic,empirical,sigma,z\n");
    let mut outside = 0;
    for c in &report {
        if !c.within_limit() {
            outside += 1;
        }
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            c.entry,
            sig12(c.analytic),
            sig12(c.empirical),
            sig12(c.sigma),
            sig12(c.z)
        );
    }
    Ok((out, outside))
}

pub fn schedule(args: &ScheduleArgs) -> Result<String, CliError> {
    check_m(args.m)?;
    if !(args.epsilon > 0.0) {
        return Err(usage(format!(
            "--epsilon must be > 0, got {}",
            args.epsilon
        )));
    }
    let grid = parse_range(&args.snr_db).map_err(usage)?;
    let mut out = String::from("snr_db,nu,alpha_sq,tau,rate_nats,rate_over_snr\n");
    for db in grid {
        let snr = db_to_linear(db);
        let p = vanishing_duty_schedule(args.m, args.epsilon, snr).map_err(|e| match e {
            fsk_energy::Error::Domain(msg) => usage(format!(
                "snr_db {} has no valid schedule point: {msg}",
                sig12(db)
            )),
            other => other.into(),
        })?;
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            sig12(db),
            sig12(p.nu),
            sig12(p.alpha_sq),
            sig12(p.tau),
            sig12(p.rate_nats),
            sig12(p.rate_over_snr)
        );
    }
    Ok(out)
}
