use num_complex::Complex64;
use pilotgmi_core::fading_sim::{
    apply_channel, build_inputs, read_trace, sample_fading, sample_noise, simulate_trace, write_trace, FadingSequence,
    FadingSynthesizer, SynthesisOptions,
};
use pilotgmi_core::linalg::CMatrix;
use pilotgmi_core::stats::{combined_se, mean_se};
use pilotgmi_core::{ChannelParams, FrameSchedule, MeanEstimate, SpectralDensity};

const LEN: usize = 100_000;
const BLOCK: usize = 1_000;

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// Batch-means estimate of `E[g(k)]` over `k + lag < len`.
fn blocked(len: usize, lag: usize, g: impl Fn(usize) -> f64) -> MeanEstimate {
    let means: Vec<f64> = (0..(len - lag) / BLOCK)
        .map(|b| (b * BLOCK..(b + 1) * BLOCK).map(&g).sum::<f64>() / BLOCK as f64)
        .collect();
    mean_se(&means)
}

fn long_rectangular() -> FadingSequence<f64> {
    let psd = SpectralDensity::rectangular(0.1).unwrap();
    sample_fading(&psd, 1, 2, LEN, 11, SynthesisOptions::default()).unwrap()
}

#[test]
fn second_order_statistics() {
    let h = long_rectangular();
    let s0 = h.stream(0, 0);
    let s1 = h.stream(0, 1);

    let mean_re = blocked(LEN, 0, |k| s0[k].re);
    assert!(mean_re.agrees_with(0.0, 3.0, 0.0), "{mean_re:?}");

    let var = blocked(LEN, 0, |k| s0[k].norm_sqr());
    assert!(var.agrees_with(1.0, 3.0, 0.0), "{var:?}");

    let lag1 = blocked(LEN, 1, |k| (s0[k + 1] * s0[k].conj()).re);
    assert!(lag1.agrees_with(0.935_489_283_788_639_7, 3.0, 0.0), "{lag1:?}");

    let cross = blocked(LEN, 0, |k| (s0[k] * s1[k].conj()).re);
    assert!(cross.agrees_with(0.0, 3.0, 0.0), "{cross:?}");
}

#[test]
fn entries_are_gaussian() {
    let h = long_rectangular();
    let s = h.stream(0, 1);
    for part in [|z: Complex64| z.re, |z: Complex64| z.im] {
        let means: Vec<f64> = s
            .chunks(BLOCK)
            .map(|b| {
                let m2 = b.iter().map(|&z| part(z).powi(2)).sum::<f64>() / BLOCK as f64;
                let m4 = b.iter().map(|&z| part(z).powi(4)).sum::<f64>() / BLOCK as f64;
                m4 / (m2 * m2) - 3.0
            })
            .collect();
        let k = mean_se(&means);
        assert!(k.agrees_with(0.0, 3.0, 0.0), "{k:?}");
    }
}

#[test]
fn autocovariance_is_stationary() {
    let h = long_rectangular();
    let s = h.stream(0, 0);
    let half = LEN / 2;
    for lag in [1, 3, 7] {
        let a = blocked(half, lag, |k| (s[k + lag] * s[k].conj()).re);
        let b = blocked(half, lag, |k| (s[half + k + lag] * s[half + k].conj()).re);
        assert!((a.mean - b.mean).abs() <= 3.0 * combined_se(&a, &b), "lag {lag}: {a:?} {b:?}");
    }
}

#[test]
fn synthesized_covariance_follows_the_spectrum() {
    for psd in [
        SpectralDensity::rectangular(0.1).unwrap(),
        SpectralDensity::raised_cosine(0.05, 0.5).unwrap(),
    ] {
        let synth = FadingSynthesizer::new(&psd, 500, SynthesisOptions { oversampling: 64, margin: 200 }).unwrap();
        let tol = 4.0 / synth.grid_len() as f64;
        for m in 0..40 {
            assert!((synth.realized_autocovariance(m) - psd.autocovariance(m)).norm() < tol, "lag {m}");
        }
    }
}

#[test]
fn noise_has_identity_covariance() {
    let z = sample_noise::<f64>(2, LEN, 5, 0);
    let p0 = blocked(LEN, 0, |k| z[0][k].norm_sqr());
    let p1 = blocked(LEN, 0, |k| z[1][k].norm_sqr());
    let x = blocked(LEN, 0, |k| (z[0][k] * z[1][k].conj()).re);
    let re2 = blocked(LEN, 0, |k| z[0][k].re.powi(2));
    assert!(p0.agrees_with(1.0, 3.0, 0.0) && p1.agrees_with(1.0, 3.0, 0.0));
    assert!(x.agrees_with(0.0, 3.0, 0.0));
    assert!(re2.agrees_with(0.5, 3.0, 0.0));
}

#[test]
fn channel_law_examples() {
    let psd = SpectralDensity::rectangular(0.1).unwrap();
    let params = ChannelParams::new(1, 1, 4.0, psd.clone()).unwrap();
    let h = FadingSequence::constant(&CMatrix::identity(1), 3);
    let y = apply_channel(&params, &h, &[vec![c(1.0); 3]], &[vec![c(0.0); 3]]).unwrap();
    assert_eq!(y, vec![vec![c(2.0); 3]]);

    let params = ChannelParams::new(2, 2, 37.0, psd).unwrap();
    let h = FadingSequence::constant(&CMatrix::from_fn(2, 2, |r, t| Complex64::new(r as f64, t as f64)), 4);
    let y = apply_channel(&params, &h, &vec![vec![c(0.0); 4]; 2], &vec![vec![c(0.0); 4]; 2]).unwrap();
    assert!(y.iter().flatten().all(|v| *v == c(0.0)));
    assert!(apply_channel(&params, &h, &vec![vec![c(0.0); 3]; 2], &vec![vec![c(0.0); 4]; 2]).is_err());
    assert!(apply_channel(&params, &h, &vec![vec![c(0.0); 4]; 1], &vec![vec![c(0.0); 4]; 2]).is_err());
}

#[test]
fn trace_is_recomputable_and_reproducible() {
    let psd = SpectralDensity::rectangular(0.1).unwrap();
    let schedule = FrameSchedule::build(5, 2, 3, 6).unwrap();
    let params = ChannelParams::new(2, 3, 20.0, psd.clone()).unwrap();
    let synth = FadingSynthesizer::new(&psd, schedule.total_len(), SynthesisOptions::for_schedule(&schedule)).unwrap();
    let codeword: Vec<Complex64> = (0..12).map(|i| Complex64::new(i as f64, -1.0)).collect();
    let trace = simulate_trace(&params, &schedule, &synth, &codeword, 9, 4).unwrap();

    assert_eq!(apply_channel(&params, &trace.h, &trace.x, &trace.z).unwrap(), trace.y);
    assert_eq!(simulate_trace(&params, &schedule, &synth, &codeword, 9, 4).unwrap(), trace);
    assert_ne!(simulate_trace(&params, &schedule, &synth, &codeword, 9, 5).unwrap().h, trace.h);

    let x = build_inputs(&schedule, &codeword).unwrap();
    for &p in schedule.pilot_indices() {
        let on: Vec<usize> = (0..2).filter(|&t| x[t][p] != c(0.0)).collect();
        assert_eq!(on, vec![p % 5]);
        assert_eq!(x[p % 5][p], c(1.0));
    }
    for &k in schedule.silent_indices() {
        assert!(x.iter().all(|s| s[k] == c(0.0)));
    }
}

#[test]
fn binary_trace_round_trip() {
    let psd = SpectralDensity::rectangular(0.2).unwrap();
    let schedule = FrameSchedule::build(3, 1, 2, 4).unwrap();
    let params = ChannelParams::new(1, 2, 5.0, psd.clone()).unwrap();
    let synth = FadingSynthesizer::new(&psd, schedule.total_len(), SynthesisOptions::for_schedule(&schedule)).unwrap();
    let codeword: Vec<Complex64> = (0..4).map(|i| Complex64::new(0.5, i as f64)).collect();
    let trace = simulate_trace(&params, &schedule, &synth, &codeword, 1, 2).unwrap();

    let mut buf = Vec::new();
    write_trace(&trace, &mut buf).unwrap();
    let back = read_trace::<f64, _>(buf.as_slice()).unwrap();
    assert_eq!((back.seed, back.trial, back.snr), (1, 2, 5.0));
    assert_eq!((back.h.n_r(), back.h.n_t(), back.len()), (2, 1, trace.len()));
    let close = |a: Complex64, b: Complex64| (a - b).norm() <= 1e-6 * (1.0 + b.norm());
    for k in 0..trace.len() {
        assert!(close(back.h.entry(k, 1, 0), trace.h.entry(k, 1, 0)));
        assert!(close(back.y[1][k], trace.y[1][k]));
        assert!(close(back.x[0][k], trace.x[0][k]));
    }
    let mut again = Vec::new();
    write_trace(&back, &mut again).unwrap();
    assert_eq!(again, buf);

    buf[0] = b'X';
    assert!(read_trace::<f64, _>(buf.as_slice()).is_err());
    assert!(read_trace::<f64, _>(&again[..again.len() - 3]).is_err());
}
