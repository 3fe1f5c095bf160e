//! Seeded Monte Carlo simulation of tone transmission and energy detection.
//!
//! Noise is `CN(0, 1)` per tone (`E|n|^2 = N0 = 1`), so a tone carrying
//! energy `E` has `|r|^2` noncentral chi-square with mean `E + 1`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::channel::{
    coherent_realization_transition, fsk_p11_awgn, fsk_p11_noncoherent_rician,
    oofsk_threshold_awgn, oofsk_threshold_coherent, oofsk_threshold_noncoherent,
    oofsk_transitions_awgn, oofsk_transitions_noncoherent, ChannelModel, Family, ModulationSpec,
    Transition,
};
use crate::error::{domain, Result};
use crate::rates::{expect_over_rician, generic_dmc_mi};

/// Trials per independently seeded work item.
pub const BLOCK_TRIALS: u64 = 8192;

/// Empirical entries further than this many standard deviations from the analytic value fail.
pub const Z_LIMIT: f64 = 4.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McConfig {
    pub spec: ModulationSpec,
    pub channel: ChannelModel,
    pub snr: f64,
    pub trials_per_input: u64,
    pub seed: u64,
}

/// Counts and frequencies with `counts[x][y]` = decisions `y` given input `x`.
/// OOFSK uses index 0 for silence and `1..=M` for the tones.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalTransitions {
    pub counts: Vec<Vec<u64>>,
    pub probs: Vec<Vec<f64>>,
    pub trials_per_input: u64,
}

/// How the OOFSK detector obtains its threshold.
#[derive(Clone, Copy)]
enum Threshold {
    None,
    Fixed(f64),
    PerRealization,
}

fn validate(config: &McConfig) -> Result<()> {
    if config.trials_per_input == 0 {
        return Err(domain("trials_per_input must be positive"));
    }
    if !config.snr.is_finite() || config.snr < 0.0 {
        return Err(domain(format!(
            "SNR must be finite and >= 0, got {}",
            config.snr
        )));
    }
    if config.spec.family() == Family::Oofsk && config.snr == 0.0 {
        return Err(domain("OOFSK simulation needs SNR > 0"));
    }
    Ok(())
}

/// Stream identifier for one (input, block) work item; noise and fading never share a stream.
fn stream_id(input: usize, block: u64, fading: bool) -> u64 {
    ((input as u64) << 33) | (block << 1) | u64::from(fading)
}

fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn complex_normal(rng: &mut ChaCha8Rng, std_per_dim: f64) -> (f64, f64) {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    (std_per_dim * re, std_per_dim * im)
}

struct Simulator {
    spec: ModulationSpec,
    channel: ChannelModel,
    snr: f64,
    amplitude: f64,
    threshold: Threshold,
    seed: u64,
}

impl Simulator {
    fn new(config: &McConfig) -> Result<Self> {
        validate(config)?;
        let spec = config.spec;
        let snr = config.snr;
        let threshold = match (spec.family(), &config.channel) {
            (Family::Fsk, _) => Threshold::None,
            (Family::Oofsk, ChannelModel::Awgn) => {
                Threshold::Fixed(oofsk_threshold_awgn(&spec, snr)?)
            }
            (Family::Oofsk, ChannelModel::NoncoherentRician(_)) => {
                Threshold::Fixed(oofsk_threshold_noncoherent(&spec, snr, &config.channel)?)
            }
            (Family::Oofsk, ChannelModel::CoherentRician(_)) => Threshold::PerRealization,
        };
        Ok(Simulator {
            spec,
            channel: config.channel,
            snr,
            amplitude: (snr / spec.duty()).sqrt(),
            threshold,
            seed: config.seed,
        })
    }

    fn outputs(&self) -> usize {
        match self.spec.family() {
            Family::Fsk => self.spec.m() as usize,
            Family::Oofsk => self.spec.m() as usize + 1,
        }
    }

    /// Tone index (0-based) carrying energy for input `x`, if any.
    fn active_tone(&self, x: usize) -> Option<usize> {
        match self.spec.family() {
            Family::Fsk => Some(x),
            Family::Oofsk => x.checked_sub(1),
        }
    }

    fn run_block(&self, x: usize, block: u64, trials: u64) -> Result<Vec<u64>> {
        let m = self.spec.m() as usize;
        let mut counts = vec![0u64; self.outputs()];
        let mut noise = rng_for(self.seed, stream_id(x, block, false));
        let mut fading_rng = rng_for(self.seed, stream_id(x, block, true));
        let fading = self.channel.fading().copied();
        let noise_std = std::f64::consts::FRAC_1_SQRT_2;
        let mut energies = vec![0.0; m];
        for _ in 0..trials {
            let h = match fading {
                None => (1.0, 0.0),
                Some(f) => {
                    let (gr, gi) = complex_normal(&mut fading_rng, (0.5 * f.gamma_sq()).sqrt());
                    (f.d_sq().sqrt() + gr, gi)
                }
            };
            let active = self.active_tone(x);
            for (i, e) in energies.iter_mut().enumerate() {
                let (mut re, mut im) = complex_normal(&mut noise, noise_std);
                if active == Some(i) {
                    re += h.0 * self.amplitude;
                    im += h.1 * self.amplitude;
                }
                *e = re * re + im * im;
            }
            let mut best = 0;
            for i in 1..m {
                if energies[i] > energies[best] {
                    best = i;
                }
            }
            let decision = match self.threshold {
                Threshold::None => best,
                Threshold::Fixed(tau) => usize::from(energies[best] > tau) * (best + 1),
                Threshold::PerRealization => {
                    let h_sq = h.0 * h.0 + h.1 * h.1;
                    let tau = oofsk_threshold_coherent(&self.spec, self.snr, h_sq)?;
                    usize::from(energies[best] > tau) * (best + 1)
                }
            };
            counts[decision] += 1;
        }
        Ok(counts)
    }
}

/// Estimates the transition matrix with `trials_per_input` transmissions of each input.
///
/// Every (input, block) pair draws from its own ChaCha stream, so the counts
/// are identical for any thread count.
pub fn simulate_transitions(config: &McConfig) -> Result<EmpiricalTransitions> {
    let sim = Simulator::new(config)?;
    let inputs = sim.outputs();
    let blocks = config.trials_per_input.div_ceil(BLOCK_TRIALS);
    let items: Vec<(usize, u64)> = (0..inputs)
        .flat_map(|x| (0..blocks).map(move |b| (x, b)))
        .collect();
    let block_len = |b: u64| BLOCK_TRIALS.min(config.trials_per_input - b * BLOCK_TRIALS);
    let run = |&(x, b): &(usize, u64)| sim.run_block(x, b, block_len(b)).map(|c| (x, c));

    #[cfg(feature = "parallel")]
    let partials: Vec<(usize, Vec<u64>)> = {
        use rayon::prelude::*;
        items.par_iter().map(run).collect::<Result<_>>()?
    };
    #[cfg(not(feature = "parallel"))]
    let partials: Vec<(usize, Vec<u64>)> = items.iter().map(run).collect::<Result<_>>()?;

    let mut counts = vec![vec![0u64; inputs]; inputs];
    for (x, c) in partials {
        for (total, n) in counts[x].iter_mut().zip(c) {
            *total += n;
        }
    }
    let t = config.trials_per_input as f64;
    let probs = counts
        .iter()
        .map(|row| row.iter().map(|&n| n as f64 / t).collect())
        .collect();
    Ok(EmpiricalTransitions {
        counts,
        probs,
        trials_per_input: config.trials_per_input,
    })
}

/// Plug-in mutual information of the simulated channel.
pub fn estimate_rate(config: &McConfig) -> Result<f64> {
    let emp = simulate_transitions(config)?;
    generic_dmc_mi(&emp.probs, &config.spec.input_distribution())
}

/// One pooled transition entry compared against its analytic value.
#[derive(Debug, Clone, PartialEq)]
pub struct EntryComparison {
    pub entry: &'static str,
    pub analytic: f64,
    pub empirical: f64,
    /// Binomial standard deviation of the pooled estimate under the analytic value.
    pub sigma: f64,
    pub z: f64,
}

impl EntryComparison {
    pub fn within_limit(&self) -> bool {
        self.z.abs() <= Z_LIMIT
    }
}

/// A set of matrix cells sharing one analytic value, `k` cells in each listed row.
struct Pool {
    entry: &'static str,
    analytic: f64,
    rows: Vec<usize>,
    cells: Box<dyn Fn(usize, usize) -> bool>,
    per_row: usize,
}

fn compare_pool(pool: &Pool, emp: &EmpiricalTransitions) -> EntryComparison {
    let t = emp.trials_per_input as f64;
    let k = pool.per_row as f64;
    let p = pool.analytic;
    let mut hits = 0u64;
    for &x in &pool.rows {
        for (y, &n) in emp.counts[x].iter().enumerate() {
            if (pool.cells)(x, y) {
                hits += n;
            }
        }
    }
    let cells = pool.rows.len() as f64 * k;
    let empirical = hits as f64 / (cells * t);
    let var: f64 = pool.rows.len() as f64 * t * k * p * (1.0 - k * p).max(0.0);
    let sigma = var.sqrt() / (cells * t);
    let diff = empirical - p;
    let z = if sigma > 0.0 {
        diff / sigma
    } else if diff == 0.0 {
        0.0
    } else {
        f64::INFINITY.copysign(diff)
    };
    EntryComparison {
        entry: pool.entry,
        analytic: p,
        empirical,
        sigma,
        z,
    }
}

/// Distinct analytic transition entries; coherent channels average over the fading.
pub fn analytic_entries(config: &McConfig) -> Result<Vec<(&'static str, f64)>> {
    validate(config)?;
    let spec = &config.spec;
    let snr = config.snr;
    let m = spec.m();
    let fsk_entries = |p11: f64| vec![("p11", p11), ("p_off", (1.0 - p11) / f64::from(m - 1))];
    match (spec.family(), &config.channel) {
        (Family::Fsk, ChannelModel::Awgn) => Ok(fsk_entries(fsk_p11_awgn(m, snr)?.p11)),
        (Family::Fsk, ChannelModel::NoncoherentRician(_)) => Ok(fsk_entries(
            fsk_p11_noncoherent_rician(m, snr, &config.channel)?.p11,
        )),
        (Family::Oofsk, ChannelModel::Awgn) => {
            Ok(oofsk_entries(&oofsk_transitions_awgn(spec, snr)?))
        }
        (Family::Oofsk, ChannelModel::NoncoherentRician(_)) => Ok(oofsk_entries(
            &oofsk_transitions_noncoherent(spec, snr, &config.channel)?,
        )),
        (_, ChannelModel::CoherentRician(_)) => {
            let names = match spec.family() {
                Family::Fsk => vec!["p11", "p_off"],
                Family::Oofsk => vec!["p00", "pl0", "pll", "p0l", "plm"],
            };
            names
                .into_iter()
                .enumerate()
                .map(|(i, name)| {
                    let entry = |h_sq: f64| match coherent_realization_transition(spec, snr, h_sq) {
                        Ok(Transition::Fsk(t)) => fsk_entries(t.p11)[i].1,
                        Ok(Transition::Oofsk(t)) => oofsk_entries(&t)[i].1,
                        Err(_) => f64::NAN,
                    };
                    Ok((name, expect_over_rician(entry, &config.channel, 1e-9)?))
                })
                .collect()
        }
    }
}

fn oofsk_entries(t: &crate::channel::OofskTransition) -> Vec<(&'static str, f64)> {
    vec![
        ("p00", t.p00),
        ("pl0", t.pl0),
        ("pll", t.pll),
        ("p0l", t.p0l),
        ("plm", t.plm),
    ]
}

/// Pools symmetric cells of the empirical matrix and scores each against the analytic value.
pub fn compare_with_analytic(
    config: &McConfig,
    emp: &EmpiricalTransitions,
) -> Result<Vec<EntryComparison>> {
    let analytic = analytic_entries(config)?;
    let m = config.spec.m() as usize;
    let value = |name: &str| {
        analytic
            .iter()
            .find(|(n, _)| *n == name)
            .map(|(_, v)| *v)
            .unwrap()
    };
    let pools = match config.spec.family() {
        Family::Fsk => vec![
            Pool {
                entry: "p11",
                analytic: value("p11"),
                rows: (0..m).collect(),
                cells: Box::new(|x, y| x == y),
                per_row: 1,
            },
            Pool {
                entry: "p_off",
                analytic: value("p_off"),
                rows: (0..m).collect(),
                cells: Box::new(|x, y| x != y),
                per_row: m - 1,
            },
        ],
        Family::Oofsk => vec![
            Pool {
                entry: "p00",
                analytic: value("p00"),
                rows: vec![0],
                cells: Box::new(|_, y| y == 0),
                per_row: 1,
            },
            Pool {
                entry: "pl0",
                analytic: value("pl0"),
                rows: vec![0],
                cells: Box::new(|_, y| y != 0),
                per_row: m,
            },
            Pool {
                entry: "pll",
                analytic: value("pll"),
                rows: (1..=m).collect(),
                cells: Box::new(|x, y| x == y),
                per_row: 1,
            },
            Pool {
                entry: "p0l",
                analytic: value("p0l"),
                rows: (1..=m).collect(),
                cells: Box::new(|_, y| y == 0),
                per_row: 1,
            },
            Pool {
                entry: "plm",
                analytic: value("plm"),
                rows: (1..=m).collect(),
                cells: Box::new(|x, y| y != 0 && y != x),
                per_row: m - 1,
            },
        ],
    };
    Ok(pools.iter().map(|p| compare_pool(p, emp)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(
        spec: ModulationSpec,
        channel: ChannelModel,
        snr: f64,
        trials: u64,
        seed: u64,
    ) -> McConfig {
        McConfig {
            spec,
            channel,
            snr,
            trials_per_input: trials,
            seed,
        }
    }

    #[test]
    fn counts_are_complete_and_deterministic() {
        let c = config(
            ModulationSpec::oofsk(4, 0.3).unwrap(),
            ChannelModel::Awgn,
            1.0,
            20_001,
            7,
        );
        let a = simulate_transitions(&c).unwrap();
        let b = simulate_transitions(&c).unwrap();
        assert_eq!(a, b);
        for row in &a.counts {
            assert_eq!(row.iter().sum::<u64>(), 20_001);
        }
        let other = simulate_transitions(&McConfig { seed: 8, ..c }).unwrap();
        assert_ne!(a.counts, other.counts);
    }

    #[test]
    fn unfaded_coherent_matches_awgn_exactly() {
        let spec = ModulationSpec::oofsk(4, 0.2).unwrap();
        let awgn = simulate_transitions(&config(spec, ChannelModel::Awgn, 0.5, 30_000, 3)).unwrap();
        let coh = ChannelModel::coherent_rician(f64::INFINITY).unwrap();
        let faded = simulate_transitions(&config(spec, coh, 0.5, 30_000, 3)).unwrap();
        assert_eq!(awgn.counts, faded.counts);
        let fsk = ModulationSpec::fsk(4).unwrap();
        let a = simulate_transitions(&config(fsk, ChannelModel::Awgn, 2.0, 10_000, 5)).unwrap();
        let b = simulate_transitions(&config(fsk, coh, 2.0, 10_000, 5)).unwrap();
        assert_eq!(a.counts, b.counts);
    }

    #[test]
    fn binary_awgn_agrees_with_closed_form() {
        let c = config(
            ModulationSpec::fsk(2).unwrap(),
            ChannelModel::Awgn,
            2.0,
            200_000,
            11,
        );
        let emp = simulate_transitions(&c).unwrap();
        for cmp in compare_with_analytic(&c, &emp).unwrap() {
            assert!(cmp.within_limit(), "{cmp:?}");
        }
    }

    #[test]
    fn invalid_configs() {
        let fsk = ModulationSpec::fsk(2).unwrap();
        assert!(simulate_transitions(&config(fsk, ChannelModel::Awgn, 1.0, 0, 1)).is_err());
        assert!(simulate_transitions(&config(fsk, ChannelModel::Awgn, -1.0, 10, 1)).is_err());
        let oofsk = ModulationSpec::oofsk(2, 0.5).unwrap();
        assert!(simulate_transitions(&config(oofsk, ChannelModel::Awgn, 0.0, 10, 1)).is_err());
    }

    #[test]
    fn pooled_sigma_formula() {
        // Two rows of 3 outputs, off-diagonal pool: k = 2 cells per row.
        let emp = EmpiricalTransitions {
            counts: vec![vec![60, 20, 20], vec![20, 60, 20], vec![20, 20, 60]],
            probs: vec![],
            trials_per_input: 100,
        };
        let pool = Pool {
            entry: "p_off",
            analytic: 0.2,
            rows: vec![0, 1, 2],
            cells: Box::new(|x, y| x != y),
            per_row: 2,
        };
        let cmp = compare_pool(&pool, &emp);
        assert_eq!(cmp.empirical, 0.2);
        let expected = (3.0_f64 * 100.0 * 2.0 * 0.2 * 0.6).sqrt() / 600.0;
        assert!((cmp.sigma - expected).abs() < 1e-15);
        assert_eq!(cmp.z, 0.0);
    }
}
