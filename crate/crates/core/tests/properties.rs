use fsk_energy::channel::{
    fsk_p11_awgn, fsk_p11_noncoherent_rician, oofsk_threshold_awgn, oofsk_transitions_awgn,
    oofsk_transitions_noncoherent, ChannelModel, ModulationSpec,
};
use fsk_energy::rates::{expect_over_rician, fsk_capacity, oofsk_rate, rate_nats};
use fsk_energy::specfun::{log_bessel_i0, log_binomial, marcum_q1, marcum_q1_complement};
use proptest::prelude::*;

fn channel_strategy() -> impl Strategy<Value = ChannelModel> {
    prop_oneof![
        Just(ChannelModel::Awgn),
        (0.0..20.0f64).prop_map(|k| ChannelModel::noncoherent_rician(k).unwrap()),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn marcum_is_a_probability(a in 0.0..40.0f64, b in 0.0..40.0f64) {
        let q = marcum_q1(a, b).unwrap();
        let qc = marcum_q1_complement(a, b).unwrap();
        prop_assert!((0.0..=1.0).contains(&q));
        prop_assert!((q + qc - 1.0).abs() < 1e-12);
    }

    #[test]
    fn marcum_monotone(a in 0.0..30.0f64, b in 0.0..30.0f64, da in 0.0..2.0f64, db in 0.0..2.0f64) {
        let q = marcum_q1(a, b).unwrap();
        prop_assert!(marcum_q1(a, b + db).unwrap() <= q + 1e-13);
        prop_assert!(marcum_q1(a + da, b).unwrap() >= q - 1e-13);
    }

    #[test]
    fn binomial_symmetry(n in 0u64..200, k in 0u64..200) {
        prop_assume!(k <= n);
        let a = log_binomial(n, k).unwrap();
        let b = log_binomial(n, n - k).unwrap();
        prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
    }

    #[test]
    fn fsk_detection_between_chance_and_one(m in 2u32..60, snr in 0.0..50.0f64, ch in channel_strategy()) {
        let p = match ch {
            ChannelModel::Awgn => fsk_p11_awgn(m, snr).unwrap().p11,
            _ => fsk_p11_noncoherent_rician(m, snr, &ch).unwrap().p11,
        };
        prop_assert!(p >= 1.0 / f64::from(m) - 1e-12 && p <= 1.0);
        let cap = fsk_capacity(&fsk_energy::channel::FskTransition { p11: p, m });
        prop_assert!(cap >= 0.0 && cap <= f64::from(m).ln() + 1e-15);
    }

    #[test]
    fn oofsk_rows_are_stochastic(m in 2u32..24, nu in 0.001..1.0f64, snr in 0.001..20.0f64, ch in channel_strategy()) {
        let spec = ModulationSpec::oofsk(m, nu).unwrap();
        let t = match ch {
            ChannelModel::Awgn => oofsk_transitions_awgn(&spec, snr).unwrap(),
            _ => oofsk_transitions_noncoherent(&spec, snr, &ch).unwrap(),
        };
        let mf = f64::from(m);
        prop_assert!((t.p00 + mf * t.pl0 - 1.0).abs() <= 1e-12);
        prop_assert!((t.p0l + t.pll + (mf - 1.0) * t.plm - 1.0).abs() <= 1e-12);
        prop_assert!(t.tau >= 0.0);
        let rate = oofsk_rate(&t, &spec).unwrap();
        let input_entropy = -(1.0 - nu) * (1.0 - nu).ln() + nu * (mf / nu).ln();
        prop_assert!(rate >= 0.0 && rate <= input_entropy + 1e-12);
    }

    #[test]
    fn threshold_solves_map_equation(m in 2u32..64, snr in 1e-3..20.0f64, nu in 1e-4..1.0f64) {
        let tau = oofsk_threshold_awgn(&ModulationSpec::oofsk(m, nu).unwrap(), snr).unwrap();
        let alpha_sq = snr / nu;
        let log_xi = f64::from(m).ln() + (-nu).ln_1p() + alpha_sq - nu.ln();
        if log_xi < 0.0 {
            prop_assert_eq!(tau, 0.0);
        } else {
            let lhs = log_bessel_i0(2.0 * (alpha_sq * tau).sqrt()).unwrap();
            prop_assert!((lhs - log_xi).abs() <= 1e-10 * log_xi.max(1.0));
        }
    }
}

#[test]
fn detection_nondecreasing_in_snr() {
    let channels = [
        ChannelModel::Awgn,
        ChannelModel::noncoherent_rician(0.0).unwrap(),
        ChannelModel::noncoherent_rician(4.0).unwrap(),
    ];
    for m in [2, 4, 8, 16, 30, 48] {
        for ch in &channels {
            let mut last = 0.0;
            for i in 0..=60 {
                let snr = 1e-3 * 10f64.powf(f64::from(i) / 15.0);
                let p = match ch {
                    ChannelModel::Awgn => fsk_p11_awgn(m, snr).unwrap().p11,
                    _ => fsk_p11_noncoherent_rician(m, snr, ch).unwrap().p11,
                };
                assert!(p >= last - 1e-14, "m={m} snr={snr}");
                last = p;
            }
        }
    }
}

#[test]
fn near_unfaded_rician_approaches_awgn() {
    let ch = ChannelModel::noncoherent_rician(1e6).unwrap();
    for m in [2, 8, 48] {
        for snr in [0.1, 1.0, 5.0, 20.0] {
            let a = fsk_p11_awgn(m, snr).unwrap().p11;
            let b = fsk_p11_noncoherent_rician(m, snr, &ch).unwrap().p11;
            assert!((a - b).abs() < 1e-5);
        }
    }
    let spec = ModulationSpec::oofsk(8, 0.1).unwrap();
    let a = oofsk_transitions_awgn(&spec, 1.0).unwrap();
    let b = oofsk_transitions_noncoherent(&spec, 1.0, &ch).unwrap();
    for (x, y) in [
        (a.p00, b.p00),
        (a.pll, b.pll),
        (a.p0l, b.p0l),
        (a.plm, b.plm),
    ] {
        assert!((x - y).abs() < 1e-5);
    }
}

#[test]
fn receiver_fading_knowledge_helps() {
    for k in [0.0, 1.0, 9.0] {
        let coh = ChannelModel::coherent_rician(k).unwrap();
        let nc = ChannelModel::noncoherent_rician(k).unwrap();
        for m in [2, 8] {
            let spec = ModulationSpec::fsk(m).unwrap();
            for snr in [0.05, 0.5, 3.0, 10.0] {
                let c = rate_nats(&spec, &coh, snr).unwrap();
                let n = rate_nats(&spec, &nc, snr).unwrap();
                assert!(c >= n && n >= 0.0, "K={k} M={m} snr={snr}: {c} < {n}");
            }
        }
    }
}

#[test]
fn rician_density_moments_over_k() {
    for k in [0.0, 0.5, 1.0, 4.0, 16.0, 100.0] {
        let ch = ChannelModel::coherent_rician(k).unwrap();
        let mass = expect_over_rician(|_| 1.0, &ch, 1e-10).unwrap();
        let mean = expect_over_rician(|x| x, &ch, 1e-10).unwrap();
        assert!(
            (mass - 1.0).abs() < 1e-8 && (mean - 1.0).abs() < 1e-8,
            "K={k}"
        );
    }
}
