//! The four subcommands. Each returns its outputs in memory; [`crate::emit`] writes them.

use std::fmt::Write as _;

use num_rational::Rational64;
use pilotgmi_core::chain::par_trials;
use pilotgmi_core::decoder::{generate_codebook, messages_for_rate, simulate_link, LinkStats, MAX_MESSAGES};
use pilotgmi_core::estimator::AsymptoticErrorProfile;
use pilotgmi_core::gmi::{gmi_report, ReportOptions};
use pilotgmi_core::prelog::{prelog_for_spacing, theorem1_bound};
use pilotgmi_core::stats::mean_se;
use pilotgmi_core::{ChannelParams, FrameSchedule, GmiConfig, LinkChain, SpectralDensity};
use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::error::CliError;

/// A named output; the first one of a command is its main table.
#[derive(Clone, Debug, PartialEq)]
pub struct Artifact {
    pub name: String,
    pub contents: String,
}

impl Artifact {
    fn new(name: &str, contents: String) -> Self {
        Self { name: name.to_string(), contents }
    }
}

fn csv_text<T: Serialize>(rows: &[T]) -> Result<String, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.serialize(row).map_err(pilotgmi_core::Error::from)?;
    }
    let bytes = w.into_inner().map_err(|e| std::io::Error::other(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

fn json_text<T: Serialize>(value: &T) -> Result<String, CliError> {
    Ok(serde_json::to_string_pretty(value)? + "\n")
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VarianceLine {
    pub snr_db: f64,
    pub offset: usize,
    pub antenna: usize,
    pub window: usize,
    pub finite_variance: f64,
    pub asymptotic_variance: f64,
    pub mc_variance: f64,
    pub mc_se: f64,
}

#[derive(Serialize)]
struct Document<'a, T> {
    config: &'a ExperimentConfig,
    results: T,
}

/// Finite-window and limiting interpolation error variances, with a Monte Carlo check.
pub fn cmd_variance(cfg: &ExperimentConfig, psd: &SpectralDensity) -> Result<Vec<Artifact>, CliError> {
    let mut rows = Vec::new();
    for (&db, snr) in cfg.snr_db.iter().zip(cfg.snr_linear()) {
        let limit = AsymptoticErrorProfile::new(psd, cfg.period, cfg.n_t, snr / cfg.n_t as f64)?;
        for &t in &cfg.windows {
            let schedule = FrameSchedule::build(cfg.period, cfg.n_t, t, cfg.data_len)?;
            let params = ChannelParams::new(cfg.n_t, cfg.n_r, snr, psd.clone())?;
            let chain = LinkChain::new(params, schedule)?;
            let slots = cfg.period * cfg.n_t;
            // per frame: mean |e|^2 for every (offset, antenna), one batch each
            let frames = par_trials(cfg.frames, |trial| {
                let mut acc = vec![(0.0, 0usize); slots];
                for s in chain.frame_samples(cfg.seed, trial)? {
                    let e = s.error();
                    for a in 0..cfg.n_t {
                        let slot = &mut acc[s.offset * cfg.n_t + a];
                        for r in 0..cfg.n_r {
                            slot.0 += e[(r, a)].norm_sqr();
                            slot.1 += 1;
                        }
                    }
                }
                Ok(acc)
            })?;
            for f in chain.bank.filters() {
                let slot = f.offset * cfg.n_t + f.antenna;
                let batches: Vec<f64> =
                    frames.iter().filter(|acc| acc[slot].1 > 0).map(|acc| acc[slot].0 / acc[slot].1 as f64).collect();
                let mc = mean_se(&batches);
                let asymptotic = limit
                    .variances
                    .iter()
                    .find(|v| v.0 == f.offset && v.1 == f.antenna)
                    .map(|v| v.2)
                    .unwrap_or(f64::NAN);
                rows.push(VarianceLine {
                    snr_db: db,
                    offset: f.offset,
                    antenna: f.antenna,
                    window: t,
                    finite_variance: f.error_variance,
                    asymptotic_variance: asymptotic,
                    mc_variance: mc.mean,
                    mc_se: mc.se,
                });
            }
        }
    }
    Ok(vec![
        Artifact::new("variance.csv", csv_text(&rows)?),
        Artifact::new("variance.json", json_text(&Document { config: cfg, results: &rows })?),
    ])
}

/// GMI lower bounds over the SNR grid, with fitted pre-log slopes.
pub fn cmd_gmi(cfg: &ExperimentConfig, psd: &SpectralDensity) -> Result<Vec<Artifact>, CliError> {
    let gmi = GmiConfig {
        data_periods: cfg.gmi.data_periods,
        frames: cfg.frames,
        asymptotic_samples: cfg.gmi.asymptotic_samples,
        seed: cfg.seed,
        ..GmiConfig::new(cfg.n_t, cfg.n_r, cfg.period, cfg.window, psd.clone())
    };
    let mut report = gmi_report(&gmi, &cfg.snr_linear(), ReportOptions { sweep: cfg.gmi.sweep })?;
    if cfg.bits {
        report = report.in_bits();
    }
    let mut main = Vec::new();
    report.write_csv(&mut main)?;
    let mut out = vec![Artifact::new("gmi.csv", String::from_utf8(main).expect("csv output is utf-8"))];
    if cfg.gmi.sweep {
        let mut sweep = Vec::new();
        report.write_sweep_csv(&mut sweep)?;
        out.push(Artifact::new("gmi_sweep.csv", String::from_utf8(sweep).expect("csv output is utf-8")));
    }
    out.push(Artifact::new("gmi.json", json_text(&Document { config: cfg, results: &report })?));
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PrelogRow {
    pub antennas: i64,
    pub prelog: String,
    pub value: f64,
}

/// Pre-log reference values in exact arithmetic.
pub fn cmd_prelog(cfg: &ExperimentConfig, psd: &SpectralDensity) -> Result<Vec<Artifact>, CliError> {
    let lambda = exact_bandwidth(psd.bandwidth())?;
    let r = theorem1_bound(cfg.n_t, cfg.n_r, lambda)?;
    let f = r.to_f64();
    let mut table = String::new();
    let _ = writeln!(table, "n_t = {}, n_r = {}, lambda_D = {}, L* = {}", r.n_t, r.n_r, r.bandwidth, r.l_star);
    let _ = writeln!(table, "{:<38}{:>10}{:>12}", "quantity", "exact", "value");
    let lines = [
        ("achievable pre-log n(1 - n/L*)", r.achievable, f.achievable),
        ("MIMO capacity pre-log lower bound", r.mimo_lower_bound, f.mimo_lower_bound),
        ("MISO capacity pre-log 1 - 2 lambda_D", r.miso_capacity, f.miso_capacity),
        ("best antenna count L*/2", r.optimal_antennas, f.optimal_antennas),
        ("best pre-log L*/4", r.optimal_prelog, f.optimal_prelog),
        ("ceiling 1/(8 lambda_D)", r.prelog_cap, f.prelog_cap),
        ("best integer antenna count", Rational64::from_integer(r.best_integer_antennas), r.best_integer_antennas as f64),
        ("its pre-log", r.best_integer_prelog, f.best_integer_prelog),
    ];
    for (name, exact, value) in lines {
        let _ = writeln!(table, "{name:<38}{:>10}{value:>12.6}", exact.to_string());
    }
    let rows: Vec<PrelogRow> = (1..=r.l_star)
        .map(|n| {
            let p: Rational64 = prelog_for_spacing(n, r.l_star);
            PrelogRow { antennas: n, prelog: p.to_string(), value: *p.numer() as f64 / *p.denom() as f64 }
        })
        .collect();
    let _ = writeln!(table, "\n{:<10}{:>12}{:>14}", "antennas", "pre-log", "value");
    for row in &rows {
        let _ = writeln!(table, "{:<10}{:>12}{:>14.6}", row.antennas, row.prelog, row.value);
    }

    #[derive(Serialize)]
    struct Results<'a> {
        reference: pilotgmi_core::PrelogReference,
        exact: ExactStrings,
        by_antennas: &'a [PrelogRow],
    }
    #[derive(Serialize)]
    struct ExactStrings {
        bandwidth: String,
        achievable: String,
        optimal_prelog: String,
        prelog_cap: String,
    }
    let results = Results {
        reference: f,
        exact: ExactStrings {
            bandwidth: r.bandwidth.to_string(),
            achievable: r.achievable.to_string(),
            optimal_prelog: r.optimal_prelog.to_string(),
            prelog_cap: r.prelog_cap.to_string(),
        },
        by_antennas: &rows,
    };
    Ok(vec![
        Artifact::new("prelog.txt", table),
        Artifact::new("prelog.csv", csv_text(&rows)?),
        Artifact::new("prelog.json", json_text(&Document { config: cfg, results })?),
    ])
}

/// Nearest rational with a denominator small enough to be the intended value.
pub fn exact_bandwidth(lambda: f64) -> Result<Rational64, CliError> {
    Rational64::approximate_float(lambda)
        .ok_or_else(|| CliError::Config(format!("bandwidth {lambda} has no rational approximation")))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SimulateResult {
    pub snr_db: f64,
    pub messages: usize,
    /// `ln M / N` in the reported units.
    pub rate: f64,
    pub stats: LinkStats,
}

/// Monte Carlo frame error rate of the mismatched nearest-neighbour decoder.
pub fn cmd_simulate(cfg: &ExperimentConfig, psd: &SpectralDensity) -> Result<Vec<Artifact>, CliError> {
    let n = cfg.data_len;
    let messages = match (cfg.simulate.messages, cfg.simulate.rate) {
        (Some(m), _) => m,
        (None, Some(rate)) => messages_for_rate(n, rate, MAX_MESSAGES),
        (None, None) => return Err(CliError::Config("simulate needs `messages` or `rate`".into())),
    };
    let codebook = generate_codebook(messages, n, cfg.n_t, cfg.seed, cfg.simulate.codebook_bytes)?;
    let schedule = FrameSchedule::build(cfg.period, cfg.n_t, cfg.window, n)?;
    let scale = if cfg.bits { std::f64::consts::LOG2_E } else { 1.0 };
    let mut results = Vec::new();
    for (&db, snr) in cfg.snr_db.iter().zip(cfg.snr_linear()) {
        let chain = LinkChain::new(ChannelParams::new(cfg.n_t, cfg.n_r, snr, psd.clone())?, schedule.clone())?;
        let stats = simulate_link(&chain, &codebook, cfg.frames, cfg.seed)?;
        results.push(SimulateResult { snr_db: db, messages, rate: (messages as f64).ln() / n as f64 * scale, stats });
    }
    #[derive(Serialize)]
    struct Results<'a> {
        units: &'static str,
        points: &'a [SimulateResult],
    }
    let units = if cfg.bits { "bits" } else { "nats" };
    Ok(vec![Artifact::new(
        "simulate.json",
        json_text(&Document { config: cfg, results: Results { units, points: &results } })?,
    )])
}
