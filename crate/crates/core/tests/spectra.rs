use std::f64::consts::TAU;
use std::io::Write;

use pilotgmi_core::estimator::asymptotic_error_variance;
use pilotgmi_core::{SpectralDensity, SpectralDensity32};
use proptest::prelude::*;

fn sinc_autocov(bw: f64, m: i64) -> f64 {
    if m == 0 {
        return 1.0;
    }
    let x = TAU * bw * m as f64;
    x.sin() / x
}

/// Midpoint rule, independent of the library's quadrature.
fn midpoint(lo: f64, hi: f64, n: usize, f: impl Fn(f64) -> f64) -> f64 {
    let h = (hi - lo) / n as f64;
    (0..n).map(|i| f(lo + (i as f64 + 0.5) * h)).sum::<f64>() * h
}

fn shapes() -> Vec<SpectralDensity> {
    vec![
        SpectralDensity::rectangular(0.1).unwrap(),
        SpectralDensity::rectangular(0.37).unwrap(),
        SpectralDensity::raised_cosine(0.1, 0.0).unwrap(),
        SpectralDensity::raised_cosine(0.2, 0.5).unwrap(),
        SpectralDensity::raised_cosine(0.05, 1.0).unwrap(),
        SpectralDensity::tabulated(&[(-0.15, 0.0), (-0.05, 2.0), (0.0, 1.0), (0.1, 3.0), (0.15, 0.0)]).unwrap(),
    ]
}

#[test]
fn unit_power_for_every_shape() {
    for psd in shapes() {
        let r0 = psd.autocovariance(0);
        assert!((r0.re - 1.0).abs() < 1e-12 && r0.im.abs() < 1e-12);
        let mass = midpoint(-0.5, 0.5, 400_000, |x| psd.value(x));
        assert!((mass - 1.0).abs() < 1e-4, "{mass}");
    }
}

#[test]
fn support_is_the_band() {
    for psd in shapes() {
        let bw = psd.bandwidth();
        for i in 0..=1000 {
            let x = -0.5 + i as f64 / 1000.0;
            let v = psd.value(x);
            assert!(v >= 0.0);
            if x.abs() > bw + 1e-12 {
                assert_eq!(v, 0.0, "{x}");
            }
        }
    }
    for psd in &shapes()[..5] {
        let bw = psd.bandwidth();
        for i in 1..1000 {
            let x = -bw + 2.0 * bw * i as f64 / 1000.0;
            assert!(psd.value(x) > 0.0, "{x}");
        }
    }
}

#[test]
fn sinc_zero_at_half_period() {
    let psd = SpectralDensity::rectangular(0.25).unwrap();
    assert!(psd.autocovariance(2).norm() < 1e-12);
}

#[test]
fn rectangular_autocovariance_is_sinc() {
    let psd = SpectralDensity::rectangular(0.1).unwrap();
    assert!((psd.autocovariance(1).re - 0.935_489_283_788_639_7).abs() < 1e-9);
    for m in -40..=40 {
        let r = psd.autocovariance(m);
        assert!((r.re - sinc_autocov(0.1, m)).abs() < 1e-9, "lag {m}");
        assert!(r.im.abs() < 1e-9);
    }
}

#[test]
fn tabulated_rectangle_matches_closed_form() {
    // nodes land on the band edges; linear ramps there cost about 2 pi m (5/3) h^2 per edge
    let n = 20_000;
    let pts: Vec<(f64, f64)> = (0..=n)
        .map(|i| {
            let x = -0.5 + i as f64 / n as f64;
            let v = if (x.abs() - 0.1).abs() < 1e-12 {
                2.5
            } else if x.abs() < 0.1 {
                5.0
            } else {
                0.0
            };
            (x, v)
        })
        .collect();
    let tab = SpectralDensity::tabulated(&pts).unwrap();
    for m in 0..=20 {
        assert!((tab.autocovariance(m).re - sinc_autocov(0.1, m)).abs() < 1e-6, "lag {m}: {} vs {}", tab.autocovariance(m), sinc_autocov(0.1, m));
    }
}

#[test]
fn folded_examples() {
    let psd = SpectralDensity::rectangular(0.1).unwrap();
    let f = psd.folded_spectrum(5, 0, 0.0).unwrap();
    assert!((f.re - 1.0).abs() < 1e-12 && f.im.abs() < 1e-12);
    let mag = psd.folded_spectrum(5, 3, 0.2).unwrap().norm();
    assert!((mag - psd.folded_spectrum(5, 0, 0.2).unwrap().re).abs() < 1e-12);
    for psd in shapes() {
        for i in 0..=20 {
            let x = -0.5 + i as f64 / 20.0;
            let single = psd.folded_spectrum(1, 0, x).unwrap();
            assert!((single.re - psd.periodized_value(x)).abs() < 1e-12);
            assert!(single.im.abs() < 1e-12);
        }
    }
}

#[test]
fn folded_rejects_out_of_range_arguments() {
    let psd = SpectralDensity::rectangular(0.1).unwrap();
    assert!(psd.folded_spectrum(5, 5, 0.0).is_err());
    assert!(psd.folded_spectrum(5, 0, 0.51).is_err());
    assert!(psd.folded_spectrum(5, 0, -0.51).is_err());
}

#[test]
fn alias_free_folded_spectrum_integrates_to_one() {
    for psd in shapes() {
        for l in 1..=psd.nyquist_spacing() {
            let mass = midpoint(-0.5, 0.5, 200_000, |x| psd.folded_spectrum(l, 0, x).unwrap().re);
            assert!((mass - 1.0).abs() < 1e-4, "L = {l}: {mass}");
        }
    }
}

#[test]
fn csv_round_trip() {
    let mut file = tempfile::NamedTempFile::new().unwrap();
    writeln!(file, "lambda,value\n# comment\n-0.2,0\n-0.1,1\n0.1,1\n0.2,0").unwrap();
    let psd = SpectralDensity::from_csv_path(file.path()).unwrap();
    assert!((psd.bandwidth() - 0.2).abs() < 1e-15);
    assert!((psd.autocovariance(0).re - 1.0).abs() < 1e-12);
    assert!(SpectralDensity::from_csv_reader("0,1\n-0.1,1\n".as_bytes()).is_err());
    assert!(SpectralDensity::from_csv_reader("-0.6,1\n0.1,1\n".as_bytes()).is_err());
    assert!(SpectralDensity::from_csv_reader("-0.1,-1\n0.1,1\n".as_bytes()).is_err());
}

#[test]
fn invalid_bandwidths_are_rejected() {
    for bw in [0.0, -0.1, 0.5, 0.7, f64::NAN] {
        assert!(SpectralDensity::rectangular(bw).is_err(), "{bw}");
    }
    assert!(SpectralDensity::raised_cosine(0.1, 1.5).is_err());
}

#[test]
fn single_precision_tracks_double() {
    let d = SpectralDensity::rectangular(0.1).unwrap();
    let s = SpectralDensity32::rectangular(0.1).unwrap();
    for m in 0..10 {
        assert!((d.autocovariance(m).re - s.autocovariance(m).re as f64).abs() < 1e-4);
    }
    let vd = asymptotic_error_variance(&d, 5, 10.0, 2);
    let vs = asymptotic_error_variance(&s, 5, 10.0f32, 2);
    assert!((vd - vs as f64).abs() < 1e-4);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn autocovariance_is_bounded_and_hermitian(bw in 0.01f64..0.49, beta in 0.0f64..=1.0, m in -60i64..60) {
        let psd = SpectralDensity::raised_cosine(bw, beta).unwrap().with_quadrature_points(2048);
        let (p, n) = (psd.autocovariance(m), psd.autocovariance(-m));
        prop_assert!(p.norm() <= 1.0 + 1e-12);
        prop_assert!((p - n.conj()).norm() < 1e-12);
    }

    #[test]
    fn folded_magnitude_is_offset_free_without_aliasing(
        bw in 0.01f64..0.25,
        beta in 0.0f64..=1.0,
        l_frac in 0.0f64..1.0,
        off_frac in 0.0f64..1.0,
        x in -0.5f64..=0.5,
    ) {
        let psd = SpectralDensity::raised_cosine(bw, beta).unwrap();
        let l_star = psd.nyquist_spacing();
        let l = 1 + ((l_star as f64 * l_frac) as usize).min(l_star - 1);
        let offset = ((l as f64 * off_frac) as usize).min(l - 1);
        let f0 = psd.folded_spectrum(l, 0, x).unwrap();
        let fl = psd.folded_spectrum(l, offset, x).unwrap();
        prop_assert!(f0.re >= 0.0 && f0.im.abs() < 1e-12);
        prop_assert!((fl.norm() - f0.re).abs() < 1e-10);
        prop_assert!((f0.re - psd.value(x / l as f64) / l as f64).abs() < 1e-10);
    }
}
