use num_complex::Complex64;
use pilotgmi_core::decoder::{
    decode, generate_codebook, messages_for_rate, nn_metric, simulate_link, DEFAULT_CODEBOOK_BYTES, MAX_MESSAGES,
};
use pilotgmi_core::gmi::gmi_lower_bound_asymptotic;
use pilotgmi_core::linalg::CMatrix;
use pilotgmi_core::rng::{complex_normal, stream, Purpose};
use pilotgmi_core::stats::mean_se;
use pilotgmi_core::{ChannelParams, Codebook, FrameSchedule, LinkChain, SpectralDensity};
use proptest::prelude::*;

fn rect() -> SpectralDensity {
    SpectralDensity::rectangular(0.1).unwrap()
}

fn codebook(m: usize, n: usize, nt: usize, seed: u64) -> Codebook {
    generate_codebook(m, n, nt, seed, DEFAULT_CODEBOOK_BYTES).unwrap()
}

fn random_instance(n: usize, nt: usize, nr: usize, seed: u64) -> (Vec<Vec<Complex64>>, Vec<CMatrix<f64>>, Vec<Complex64>) {
    let mut rng = stream(seed, Purpose::Matrix, 0, 0, 0);
    let y = (0..n).map(|_| (0..nr).map(|_| complex_normal(&mut rng)).collect()).collect();
    let h = (0..n).map(|_| CMatrix::from_fn(nr, nt, |_, _| complex_normal(&mut rng))).collect();
    let x = (0..n * nt).map(|_| complex_normal(&mut rng)).collect();
    (y, h, x)
}

fn naive_metric(y: &[Vec<Complex64>], h: &[CMatrix<f64>], x: &[Complex64], snr: f64, nt: usize) -> f64 {
    let amp = (snr / nt as f64).sqrt();
    let mut d = 0.0;
    for k in 0..y.len() {
        for r in 0..y[k].len() {
            let mut re = y[k][r].re;
            let mut im = y[k][r].im;
            for t in 0..nt {
                let (a, b) = (h[k][(r, t)].re, h[k][(r, t)].im);
                let (c, e) = (x[k * nt + t].re, x[k * nt + t].im);
                re -= amp * (a * c - b * e);
                im -= amp * (a * e + b * c);
            }
            d += re * re + im * im;
        }
    }
    d
}

/// Noiseless outputs of codeword `m` through `h`.
fn noiseless(cb: &Codebook, m: usize, h: &[CMatrix<f64>], snr: f64) -> Vec<Vec<Complex64>> {
    let nt = cb.n_t();
    let amp = (snr / nt as f64).sqrt();
    h.iter()
        .enumerate()
        .map(|(k, hk)| {
            hk.mul_vec(&cb.codeword(m)[k * nt..(k + 1) * nt])
                .into_iter()
                .map(|v| v * amp)
                .collect()
        })
        .collect()
}

#[test]
fn codebook_is_reproducible() {
    assert_eq!(codebook(2, 1, 1, 3), codebook(2, 1, 1, 3));
    assert_ne!(codebook(2, 1, 1, 3), codebook(2, 1, 1, 4));
    assert!(generate_codebook::<f64>(0, 4, 1, 1, DEFAULT_CODEBOOK_BYTES).is_err());
    assert!(generate_codebook::<f64>(4, 0, 1, 1, DEFAULT_CODEBOOK_BYTES).is_err());
}

#[test]
fn codebook_power_concentrates() {
    let cb = codebook(64, 512, 2, 17);
    let powers: Vec<f64> = (0..64).map(|m| cb.codeword_power(m) / 2.0).collect();
    assert!(mean_se(&powers).agrees_with(1.0, 3.0, 0.0));
    for part in [|z: &Complex64| z.re, |z: &Complex64| z.im] {
        let per_word: Vec<f64> = (0..64)
            .map(|m| cb.codeword(m).iter().map(|z| part(z).powi(2)).sum::<f64>() / 1024.0)
            .collect();
        assert!(mean_se(&per_word).agrees_with(0.5, 3.0, 0.0));
    }
}

#[test]
fn codebook_respects_memory_cap() {
    assert!(generate_codebook::<f64>(1 << 12, 1 << 12, 2, 0, 1 << 20).is_err());
}

#[test]
fn metric_examples() {
    let (_, h, x) = random_instance(6, 2, 3, 1);
    let cb_y: Vec<Vec<Complex64>> = h
        .iter()
        .enumerate()
        .map(|(k, hk)| hk.mul_vec(&x[2 * k..2 * k + 2]).into_iter().map(|v| v * 5.0).collect())
        .collect();
    assert!(nn_metric(&cb_y, &h, &x, 50.0, 2).unwrap().abs() < 1e-24);

    let (y, h, _) = random_instance(6, 2, 3, 2);
    let zero = vec![Complex64::new(0.0, 0.0); 12];
    let energy: f64 = y.iter().flatten().map(|v| v.norm_sqr()).sum();
    assert!((nn_metric(&y, &h, &zero, 9.0, 2).unwrap() - energy).abs() < 1e-12);
    assert!(nn_metric(&y[..5], &h, &zero, 9.0, 2).is_err());
    assert!(nn_metric(&y, &h, &zero[..10], 9.0, 2).is_err());
}

#[test]
fn metric_matches_naive_loop() {
    for seed in 0..20 {
        let (y, h, x) = random_instance(4, 2, 2, seed);
        let fast = nn_metric(&y, &h, &x, 37.0, 2).unwrap();
        assert!((fast - naive_metric(&y, &h, &x, 37.0, 2)).abs() < 1e-12);
    }
}

#[test]
fn noiseless_perfect_csi_recovers_every_message() {
    let cb = codebook(16, 8, 2, 5);
    let mut rng = stream(1, Purpose::Matrix, 0, 0, 0);
    let h: Vec<CMatrix<f64>> = (0..8).map(|_| CMatrix::from_fn(2, 2, |_, _| complex_normal(&mut rng))).collect();
    for m in 0..16 {
        let y = noiseless(&cb, m, &h, 100.0);
        let res = decode(&y, &h, &cb, 100.0, true).unwrap();
        assert_eq!(res.message, m);
        let d = res.metrics.unwrap();
        assert!(d.iter().all(|&v| d[m] <= v));
    }
}

#[test]
fn ties_go_to_the_lowest_index() {
    let cb = codebook(5, 4, 1, 0);
    let (y, _, _) = random_instance(4, 1, 2, 3);
    let h = vec![CMatrix::zeros(2, 1); 4];
    let res = decode(&y, &h, &cb, 10.0, true).unwrap();
    assert_eq!(res.message, 0);
    assert!(res.metrics.unwrap().windows(2).all(|w| w[0] == w[1]));
}

#[test]
fn rate_to_message_count() {
    assert_eq!(messages_for_rate(10, 0.0, MAX_MESSAGES), 1);
    assert_eq!(messages_for_rate(10, 0.1, MAX_MESSAGES), 3);
    assert_eq!(messages_for_rate(256, 1.0, MAX_MESSAGES), MAX_MESSAGES);
}

fn chain(snr: f64, n: usize, window: usize) -> LinkChain {
    let params = ChannelParams::new(1, 1, snr, rect()).unwrap();
    LinkChain::new(params, FrameSchedule::build(5, 1, window, n).unwrap()).unwrap()
}

#[test]
fn high_snr_link_mostly_decodes() {
    let ch = chain(1e4, 64, 10);
    let stats = simulate_link(&ch, &codebook(4, 64, 1, 2), 100, 3).unwrap();
    assert!(stats.fer < 0.5, "{stats:?}");
    assert!(stats.mean_metric_incorrect.unwrap() > stats.mean_metric_correct);
    assert_eq!(simulate_link(&ch, &codebook(4, 64, 1, 2), 100, 3).unwrap(), stats);
}

#[test]
fn single_message_never_fails() {
    let stats = simulate_link(&chain(10.0, 16, 4), &codebook(1, 16, 1, 0), 50, 1).unwrap();
    assert_eq!(stats.frame_errors, 0);
    assert!(stats.mean_metric_incorrect.is_none());
}

#[test]
fn vanishing_snr_guesses_uniformly() {
    let m = 4;
    let trials = 400;
    let stats = simulate_link(&chain(1e-10, 16, 4), &codebook(m, 16, 1, 9), trials, 2).unwrap();
    let p = 1.0 - 1.0 / m as f64;
    let se = (p * (1.0 - p) / trials as f64).sqrt();
    assert!((stats.fer - p).abs() <= 3.0 * se, "{stats:?}");
}

#[test]
fn mismatched_codebook_is_rejected() {
    assert!(simulate_link(&chain(10.0, 16, 4), &codebook(2, 12, 1, 0), 5, 1).is_err());
}

#[test]
fn error_rate_falls_with_block_length_at_half_the_bound() {
    let bound = gmi_lower_bound_asymptotic(100.0, 5, 1, 1, &rect(), 100_000, 0).unwrap();
    let rate = 0.5 * bound.logdet_form.mean;
    let fer: Vec<f64> = [64, 128, 256]
        .iter()
        .map(|&n| {
            let m = messages_for_rate(n, rate, MAX_MESSAGES);
            simulate_link(&chain(100.0, n, 10), &codebook(m, n, 1, 1), 200, 5).unwrap().fer
        })
        .collect();
    assert!(fer.windows(2).all(|w| w[1] <= w[0]), "{fer:?}");
}

#[test]
fn error_rate_falls_with_block_length_at_fixed_codebook_size() {
    let fer: Vec<f64> = [8, 16, 32]
        .iter()
        .map(|&n| simulate_link(&chain(1.0, n, 6), &codebook(64, n, 1, 4), 400, 6).unwrap().fer)
        .collect();
    assert!(fer.windows(2).all(|w| w[1] < w[0]), "{fer:?}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn metric_is_a_sum_over_instants(seed in 0u64..10_000, n in 1usize..9, nt in 1usize..4, nr in 1usize..4, split in 0usize..9) {
        let (y, h, x) = random_instance(n, nt, nr, seed);
        let whole = nn_metric(&y, &h, &x, 7.0, nt).unwrap();
        let cut = split.min(n);
        let a = if cut > 0 { nn_metric(&y[..cut], &h[..cut], &x[..cut * nt], 7.0, nt).unwrap() } else { 0.0 };
        let b = if cut < n { nn_metric(&y[cut..], &h[cut..], &x[cut * nt..], 7.0, nt).unwrap() } else { 0.0 };
        prop_assert!((whole - (a + b)).abs() <= 1e-9 * whole.max(1.0));
        prop_assert!(whole >= 0.0);

        let mut order: Vec<usize> = (0..n).collect();
        order.reverse();
        order.rotate_left(seed as usize % n);
        let yp: Vec<_> = order.iter().map(|&k| y[k].clone()).collect();
        let hp: Vec<_> = order.iter().map(|&k| h[k].clone()).collect();
        let xp: Vec<_> = order.iter().flat_map(|&k| x[k * nt..(k + 1) * nt].to_vec()).collect();
        prop_assert!((nn_metric(&yp, &hp, &xp, 7.0, nt).unwrap() - whole).abs() <= 1e-12 * whole.max(1.0));
    }
}
