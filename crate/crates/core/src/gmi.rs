//! Generalized mutual information of the nearest-neighbour decoder with
//! pilot-aided estimates: the closed-form constant `B`, the Monte Carlo
//! log-moment `kappa`, the fixed-window and infinite-window lower bounds, a
//! `theta` sweep, and pre-log slope fitting.
//!
//! All rates are in nats. Unequal antenna counts are reduced to
//! `n = min(n_t, n_r)` on both sides before anything is computed.

use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::chain::{par_trials, DataSample, LinkChain};
use crate::error::{param, Error, Result};
use crate::estimator::alias_free_error_variance;
use crate::fading_sim::ChannelParams;
use crate::framing::FrameSchedule;
use crate::linalg::{hermitian_log_det, CMatrix, Cholesky};
use crate::prelog::{theorem1_bound, PrelogReference};
use crate::rng::{complex_normal, stream, Purpose};
use crate::scalar::Real;
use crate::spectra::SpectralDensity;
use crate::stats::{mean_se, pairwise_sum, MeanEstimate};

/// Matrices per batch in the infinite-window bound.
pub const ASYMPTOTIC_BATCH: u64 = 1000;
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Everything the Monte Carlo GMI estimates need besides the SNR.
#[derive(Clone, Debug)]
pub struct GmiConfig<F: Real> {
    pub n_t: usize,
    pub n_r: usize,
    pub period: usize,
    pub window: usize,
    pub psd: SpectralDensity<F>,
    /// Data periods per simulated frame; each frame is one batch.
    pub data_periods: usize,
    pub frames: u64,
    /// Matrices drawn for the infinite-window bound.
    pub asymptotic_samples: u64,
    pub seed: u64,
}

impl<F: Real> GmiConfig<F> {
    pub fn new(n_t: usize, n_r: usize, period: usize, window: usize, psd: SpectralDensity<F>) -> Self {
        Self {
            n_t,
            n_r,
            period,
            window,
            psd,
            data_periods: 250,
            frames: 100,
            asymptotic_samples: 100_000,
            seed: 0,
        }
    }

    /// `min(n_t, n_r)`, the antenna count every GMI routine works with.
    pub fn antennas(&self) -> usize {
        self.n_t.min(self.n_r)
    }

    pub fn schedule(&self) -> Result<FrameSchedule> {
        let n = self.antennas();
        if n == 0 || self.period <= n {
            return param(format!("need 1 <= min(n_t, n_r) < L, got {n} and L = {}", self.period));
        }
        if self.data_periods == 0 || self.frames == 0 {
            return param("data periods and frames must be at least 1");
        }
        FrameSchedule::build(self.period, n, self.window, self.data_periods * (self.period - n))
    }

    pub fn channel(&self, snr: F) -> Result<ChannelParams<F>> {
        let n = self.antennas();
        ChannelParams::new(n, n, snr, self.psd.clone())
    }
}

/// `B = (1/L) sum_l (n_r + (snr/n_t) E|E_l|_F^2)` with
/// `E|E_l|_F^2 = n_r sum_t sigma^2_{e,T}(l, t)`.
///
/// `column_error_sums[i]` is `sum_t sigma^2_{e,T}(n_t + i, t)`.
pub fn compute_b<F: Real>(snr: F, schedule: &FrameSchedule, n_r: usize, column_error_sums: &[F]) -> Result<F> {
    let n_t = schedule.n_t();
    let period = schedule.period();
    if column_error_sums.len() != period - n_t {
        return param(format!(
            "expected {} per-offset error sums, got {}",
            period - n_t,
            column_error_sums.len()
        ));
    }
    let psi = snr / F::from_count(n_t);
    let nr = F::from_count(n_r);
    let total: F = column_error_sums.iter().map(|&s| nr + psi * nr * s).sum();
    Ok(total / F::from_count(period))
}

/// `theta = -1 / (n_r + snr n_r sigma^2_{e*,T})`.
pub fn high_snr_theta<F: Real>(snr: F, n_r: usize, sigma_e_star: F) -> F {
    let nr = F::from_count(n_r);
    -F::one() / (nr + snr * nr * sigma_e_star)
}

/// `|theta|` log-spaced over `decades` on each side of `center`, plus `center` and `0`.
pub fn theta_grid(center: f64, points: usize, decades: f64) -> Vec<f64> {
    let mag = center.abs();
    let mut grid = vec![0.0, center];
    if points > 1 && mag > 0.0 {
        for i in 0..points {
            let e = -decades + 2.0 * decades * i as f64 / (points - 1) as f64;
            grid.push(-mag * 10f64.powf(e));
        }
    }
    grid.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
    grid.dedup();
    grid
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct KappaEstimate {
    pub theta: f64,
    /// Mean of `theta Y^H A^{-1} Y` (scaled by `(L - n_t)/L`).
    pub quadratic: MeanEstimate,
    /// Mean of `log det A` (same scaling).
    pub log_det: MeanEstimate,
    pub kappa: MeanEstimate,
    pub samples: usize,
    /// Samples whose quadratic term was positive.
    pub sign_violations: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FiniteWindowBound {
    pub snr: f64,
    pub sigma_e_star: f64,
    /// Unclamped; negative at low SNR.
    pub raw: MeanEstimate,
    pub clamped: f64,
    pub negative: bool,
    pub samples: usize,
    /// Samples where `log det(I + A) >= log det A` was checked / failed.
    pub logdet_checks: usize,
    pub logdet_violations: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepPoint {
    pub theta: f64,
    pub gmi: MeanEstimate,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ThetaSweep {
    pub points: Vec<SweepPoint>,
    pub best_theta: f64,
    pub best: MeanEstimate,
}

/// Jointly simulated `(Y, Ĥ, H, x)` at every data instant of many frames,
/// at one SNR.
#[derive(Debug)]
pub struct GmiSampler<F: Real> {
    chain: LinkChain<F>,
    frames: Vec<Vec<DataSample<F>>>,
    seed: u64,
}

impl<F: Real> GmiSampler<F> {
    pub fn new(config: &GmiConfig<F>, snr: F) -> Result<Self> {
        let chain = LinkChain::new(config.channel(snr)?, config.schedule()?)?;
        let frames = par_trials(config.frames, |trial| chain.frame_samples(config.seed, trial))?;
        Ok(Self {
            chain,
            frames,
            seed: config.seed,
        })
    }

    pub fn chain(&self) -> &LinkChain<F> {
        &self.chain
    }

    pub fn frames(&self) -> &[Vec<DataSample<F>>] {
        &self.frames
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn sample_count(&self) -> usize {
        self.frames.iter().map(Vec::len).sum()
    }

    pub fn snr(&self) -> F {
        self.chain.params.snr
    }

    fn psi(&self) -> F {
        self.snr() / F::from_count(self.chain.params.n_t)
    }

    fn data_fraction(&self) -> f64 {
        let s = &self.chain.schedule;
        (s.period() - s.n_t()) as f64 / s.period() as f64
    }

    /// `sigma^2_{e*,T}`.
    pub fn sigma_e_star(&self) -> F {
        self.chain.bank.max_error_variance()
    }

    pub fn b(&self) -> Result<F> {
        compute_b(
            self.snr(),
            &self.chain.schedule,
            self.chain.params.n_r,
            &self.chain.bank.column_error_sums(),
        )
    }

    /// `B` as the scaled mean of `|Y - sqrt(snr/n_t) Ĥ x|^2`.
    pub fn b_monte_carlo(&self) -> MeanEstimate {
        let amp = self.psi().sqrt();
        let frac = self.data_fraction();
        self.per_frame(|s| {
            let fit = s.h_hat.mul_vec(&s.x);
            s.y.iter()
                .zip(&fit)
                .map(|(&y, &f)| (y - f * amp).norm_sqr().as_f64())
                .sum::<f64>()
        })
        .scaled(frac)
    }

    /// `E |E_l|_F^2` for each data offset `l`, in offset order.
    pub fn error_energy(&self) -> Vec<(usize, MeanEstimate)> {
        let schedule = &self.chain.schedule;
        (schedule.n_t()..schedule.period())
            .map(|offset| {
                let means: Vec<f64> = self
                    .frames
                    .iter()
                    .map(|frame| {
                        let v: Vec<f64> = frame
                            .iter()
                            .filter(|s| s.offset == offset)
                            .map(|s| s.error().frobenius_sq().as_f64())
                            .collect();
                        pairwise_sum(&v) / v.len().max(1) as f64
                    })
                    .collect();
                (offset, mean_se(&means))
            })
            .collect()
    }

    pub fn high_snr_theta(&self) -> F {
        high_snr_theta(self.snr(), self.chain.params.n_r, self.sigma_e_star())
    }

    /// `kappa(theta) = (1/L) sum_l E[theta Y^H A^{-1} Y - log det A]`,
    /// `A = I - theta (snr/n_t) Ĥ Ĥ^H`.
    pub fn kappa(&self, theta: F) -> Result<KappaEstimate> {
        if !(theta <= F::zero()) {
            return param(format!("theta must be <= 0, got {theta}"));
        }
        let c = -theta * self.psi();
        let frac = self.data_fraction();
        let per_frame: Vec<(Vec<f64>, Vec<f64>, usize)> = self
            .frames
            .par_iter()
            .map(|frame| {
                let mut quad = Vec::with_capacity(frame.len());
                let mut logdet = Vec::with_capacity(frame.len());
                let mut bad = 0;
                for s in frame {
                    let a = CMatrix::identity(s.y.len()).add_scaled(&s.h_hat.gram(), c);
                    let chol = Cholesky::new(&a)?;
                    let q = theta * chol.inv_quad_form(&s.y);
                    if q > F::zero() {
                        bad += 1;
                    }
                    quad.push(q.as_f64());
                    logdet.push(chol.log_det().as_f64());
                }
                Ok((quad, logdet, bad))
            })
            .collect::<Result<_>>()?;

        let frame_mean = |v: &[f64]| pairwise_sum(v) / v.len().max(1) as f64;
        let q_means: Vec<f64> = per_frame.iter().map(|f| frame_mean(&f.0)).collect();
        let l_means: Vec<f64> = per_frame.iter().map(|f| frame_mean(&f.1)).collect();
        let k_means: Vec<f64> = q_means.iter().zip(&l_means).map(|(q, l)| q - l).collect();
        Ok(KappaEstimate {
            theta: theta.as_f64(),
            quadratic: mean_se(&q_means).scaled(frac),
            log_det: mean_se(&l_means).scaled(frac),
            kappa: mean_se(&k_means).scaled(frac),
            samples: self.sample_count(),
            sign_violations: per_frame.iter().map(|f| f.2).sum(),
        })
    }

    /// `theta B - kappa(theta)`.
    pub fn gmi_at_theta(&self, theta: F) -> Result<MeanEstimate> {
        let k = self.kappa(theta)?;
        let tb = (theta * self.b()?).as_f64();
        Ok(MeanEstimate {
            mean: tb - k.kappa.mean,
            ..k.kappa
        })
    }

    /// `(1/L) sum_l E log det(I + snr Ĥ Ĥ^H / (n_t n_r (1 + snr sigma^2_{e*,T}))) - (L - n_t)/L`.
    pub fn finite_window_bound(&self) -> Result<FiniteWindowBound> {
        let snr = self.snr();
        let sigma = self.sigma_e_star();
        let (nt, nr) = (self.chain.params.n_t, self.chain.params.n_r);
        let c = snr / (F::from_count(nt * nr) * (F::one() + snr * sigma));
        let frac = self.data_fraction();
        let per_frame: Vec<(f64, usize, usize)> = self
            .frames
            .par_iter()
            .map(|frame| {
                let mut vals = Vec::with_capacity(frame.len());
                let (mut checks, mut bad) = (0, 0);
                for s in frame {
                    let a = s.h_hat.gram().scale(c);
                    let with_identity = hermitian_log_det(&CMatrix::identity(a.rows()).add_scaled(&a, F::one()))?;
                    if let Ok(bare) = hermitian_log_det(&a) {
                        checks += 1;
                        if with_identity < bare {
                            bad += 1;
                        }
                    }
                    vals.push(with_identity.as_f64());
                }
                Ok((pairwise_sum(&vals) / vals.len().max(1) as f64, checks, bad))
            })
            .collect::<Result<_>>()?;
        let means: Vec<f64> = per_frame.iter().map(|f| f.0).collect();
        let raw = mean_se(&means).scaled(frac).offset(-frac);
        Ok(FiniteWindowBound {
            snr: snr.as_f64(),
            sigma_e_star: sigma.as_f64(),
            raw,
            clamped: raw.mean.max(0.0),
            negative: raw.mean < 0.0,
            samples: self.sample_count(),
            logdet_checks: per_frame.iter().map(|f| f.1).sum(),
            logdet_violations: per_frame.iter().map(|f| f.2).sum(),
        })
    }

    /// `theta B - kappa(theta)` over `grid`; every entry must be `<= 0`.
    pub fn theta_sweep(&self, grid: &[F]) -> Result<ThetaSweep> {
        if grid.is_empty() {
            return param("theta grid is empty");
        }
        let points = grid
            .iter()
            .map(|&theta| {
                Ok(SweepPoint {
                    theta: theta.as_f64(),
                    gmi: self.gmi_at_theta(theta)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let best = points
            .iter()
            .fold(&points[0], |b, p| if p.gmi.mean > b.gmi.mean { p } else { b });
        Ok(ThetaSweep {
            best_theta: best.theta,
            best: best.gmi,
            points,
        })
    }

    fn per_frame(&self, f: impl Fn(&DataSample<F>) -> f64 + Sync) -> MeanEstimate {
        let means: Vec<f64> = self
            .frames
            .par_iter()
            .map(|frame| {
                let v: Vec<f64> = frame.iter().map(&f).collect();
                pairwise_sum(&v) / v.len().max(1) as f64
            })
            .collect();
        mean_se(&means)
    }
}

/// `kappa(theta, snr)` from a fresh joint simulation.
pub fn kappa_mc<F: Real>(config: &GmiConfig<F>, snr: F, theta: F) -> Result<KappaEstimate> {
    if !(theta <= F::zero()) {
        return param(format!("theta must be <= 0, got {theta}"));
    }
    GmiSampler::new(config, snr)?.kappa(theta)
}

pub fn gmi_lower_bound_finite_t<F: Real>(config: &GmiConfig<F>, snr: F) -> Result<FiniteWindowBound> {
    GmiSampler::new(config, snr)?.finite_window_bound()
}

/// Sweep over `grid`, or over [`theta_grid`] around the fixed high-SNR `theta` when `grid` is `None`.
pub fn gmi_theta_sweep<F: Real>(config: &GmiConfig<F>, snr: F, grid: Option<&[F]>) -> Result<ThetaSweep> {
    let sampler = GmiSampler::new(config, snr)?;
    match grid {
        Some(g) => sampler.theta_sweep(g),
        None => {
            let g: Vec<F> = theta_grid(sampler.high_snr_theta().as_f64(), 25, 2.0)
                .into_iter()
                .map(F::of)
                .collect();
            sampler.theta_sweep(&g)
        }
    }
}

/// `E log det(W)` for `W = G G^H`, `G` an `n x n` matrix of i.i.d. `CN(0, 1)` entries.
pub fn expected_wishart_log_det(n: usize) -> f64 {
    (1..=n).map(digamma_int).sum()
}

/// Digamma at a positive integer.
pub fn digamma_int(j: usize) -> f64 {
    -EULER_GAMMA + (1..j).map(|i| 1.0 / i as f64).sum::<f64>()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AsymptoticBound {
    pub snr: f64,
    pub antennas: usize,
    pub period: usize,
    /// `sigma^2_{e*}` at pilot SNR `snr/n`.
    pub sigma_e_star: f64,
    /// `(L-n)/L (E log det(I + c H̄H̄^H) - 1)`, `c = snr/(n^2 (1 + snr sigma^2_{e*}))`.
    pub logdet_form: MeanEstimate,
    /// `(L-n)/L (n log c + E log det H̄H̄^H - 1)` with the exact expectation.
    pub closed_form: f64,
    /// The same expression with the expectation replaced by the sample mean.
    pub closed_form_sampled: MeanEstimate,
    /// `n log(1 - sigma^2_{e*}) + sum_j digamma(j)`.
    pub expected_logdet: f64,
    pub samples: u64,
    pub logdet_violations: usize,
}

/// Infinite-window bound with `H̄` entries i.i.d. `CN(0, 1 - sigma^2_{e*})`.
pub fn gmi_lower_bound_asymptotic<F: Real>(
    snr: F,
    period: usize,
    n_t: usize,
    n_r: usize,
    psd: &SpectralDensity<F>,
    samples: u64,
    seed: u64,
) -> Result<AsymptoticBound> {
    let n = n_t.min(n_r);
    if n == 0 || period <= n {
        return param(format!("need 1 <= min(n_t, n_r) < L, got {n} and L = {period}"));
    }
    if !(snr > F::zero()) {
        return param(format!("snr must be positive, got {snr}"));
    }
    if samples == 0 {
        return param("need at least one sample");
    }
    let nf = F::from_count(n);
    let sigma = alias_free_error_variance(psd, period, snr / nf)?;
    let amp = (F::one() - sigma).sqrt();
    let c = snr / (nf * nf * (F::one() + snr * sigma));
    let n_ln_c = nf.as_f64() * c.as_f64().ln();

    let batches = samples.div_ceil(ASYMPTOTIC_BATCH);
    let per_batch = par_trials(batches, |b| {
        let count = ASYMPTOTIC_BATCH.min(samples - b * ASYMPTOTIC_BATCH) as usize;
        let mut rng = stream(seed, Purpose::Matrix, b, n as u64, 0);
        let (mut a_vals, mut b_vals, mut bad) = (Vec::with_capacity(count), Vec::with_capacity(count), 0usize);
        for _ in 0..count {
            let h = CMatrix::from_fn(n, n, |_, _| complex_normal::<F, _>(&mut rng).scale(amp));
            let g = h.gram();
            let with_identity = hermitian_log_det(&CMatrix::identity(n).add_scaled(&g, c))?;
            let bare = hermitian_log_det(&g).map_err(|e| Error::Numerical(format!("singular sample: {e}")))?;
            let scaled_bare = bare.as_f64() + n_ln_c;
            if with_identity.as_f64() < scaled_bare {
                bad += 1;
            }
            a_vals.push(with_identity.as_f64());
            b_vals.push(scaled_bare);
        }
        Ok((
            pairwise_sum(&a_vals) / count as f64,
            pairwise_sum(&b_vals) / count as f64,
            bad,
        ))
    })?;

    let frac = (period - n) as f64 / period as f64;
    let a_means: Vec<f64> = per_batch.iter().map(|b| b.0).collect();
    let b_means: Vec<f64> = per_batch.iter().map(|b| b.1).collect();
    let expected_logdet = n as f64 * (1.0 - sigma.as_f64()).ln() + expected_wishart_log_det(n);
    Ok(AsymptoticBound {
        snr: snr.as_f64(),
        antennas: n,
        period,
        sigma_e_star: sigma.as_f64(),
        logdet_form: mean_se(&a_means).offset(-1.0).scaled(frac),
        closed_form: frac * (n_ln_c + expected_logdet - 1.0),
        closed_form_sampled: mean_se(&b_means).offset(-1.0).scaled(frac),
        expected_logdet,
        samples,
        logdet_violations: per_batch.iter().map(|b| b.2).sum(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SlopeFit {
    /// Pre-log estimate: nats per nat of SNR.
    pub slope: f64,
    pub intercept: f64,
    pub points: usize,
}

/// Least-squares fit of `bound = slope ln(snr) + intercept`.
///
/// Needs at least three points spanning at least two decades of SNR.
pub fn fit_prelog(points: &[(f64, f64)]) -> Result<SlopeFit> {
    if points.len() < 3 {
        return param(format!("need at least 3 points to fit a slope, got {}", points.len()));
    }
    if points.iter().any(|p| !(p.0 > 0.0) || !p.1.is_finite()) {
        return param("snr values must be positive and bounds finite");
    }
    let lo = points.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let hi = points.iter().map(|p| p.0).fold(0.0, f64::max);
    if hi / lo < 100.0 * (1.0 - 1e-12) {
        return param(format!("snr grid spans {:.3} decades; need at least 2", (hi / lo).log10()));
    }
    let n = points.len() as f64;
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let mx = pairwise_sum(&xs) / n;
    let my = pairwise_sum(&points.iter().map(|p| p.1).collect::<Vec<_>>()) / n;
    let sxy: Vec<f64> = xs.iter().zip(points).map(|(x, p)| (x - mx) * (p.1 - my)).collect();
    let sxx: Vec<f64> = xs.iter().map(|x| (x - mx) * (x - mx)).collect();
    let slope = pairwise_sum(&sxy) / pairwise_sum(&sxx);
    Ok(SlopeFit {
        slope,
        intercept: my - slope * mx,
        points: points.len(),
    })
}

/// Slopes between consecutive points (sorted by SNR) against `ln snr`.
pub fn local_slopes(points: &[(f64, f64)]) -> Vec<f64> {
    let mut sorted = points.to_vec();
    sorted.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(std::cmp::Ordering::Equal));
    sorted
        .windows(2)
        .map(|w| (w[1].1 - w[0].1) / (w[1].0.ln() - w[0].0.ln()))
        .collect()
}

/// One CSV row of a [`GmiReport`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GmiRow {
    pub snr_db: f64,
    pub snr: f64,
    pub theta: f64,
    pub sigma_e_star_t: f64,
    pub b: f64,
    pub kappa: f64,
    pub kappa_se: f64,
    pub gmi_theta: f64,
    pub gmi_theta_se: f64,
    pub finite_t_bound: f64,
    pub finite_t_se: f64,
    pub finite_t_clamped: f64,
    pub finite_t_negative: bool,
    pub sigma_e_star: Option<f64>,
    pub asymptotic_bound: Option<f64>,
    pub asymptotic_se: Option<f64>,
    pub asymptotic_closed_form: Option<f64>,
    pub asymptotic_clamped: Option<f64>,
    pub sweep_theta: Option<f64>,
    pub sweep_gmi: Option<f64>,
    pub sweep_se: Option<f64>,
    pub sign_violations: usize,
    pub logdet_violations: usize,
}

/// One `theta` of one sweep.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub snr_db: f64,
    pub theta: f64,
    pub gmi: f64,
    pub se: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GmiReport {
    pub units: String,
    pub n_t: usize,
    pub n_r: usize,
    pub antennas: usize,
    pub period: usize,
    pub window: usize,
    pub bandwidth: f64,
    pub seed: u64,
    pub frames: u64,
    pub data_periods: usize,
    pub samples_per_point: usize,
    pub asymptotic_samples: u64,
    pub rows: Vec<GmiRow>,
    pub sweep: Vec<SweepRow>,
    pub slope_finite_t: Option<SlopeFit>,
    pub slope_asymptotic: Option<SlopeFit>,
    pub reference: PrelogReference<f64>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ReportOptions {
    pub sweep: bool,
}

/// Evaluates every bound at each SNR (linear) of `snrs`.
pub fn gmi_report<F: Real>(config: &GmiConfig<F>, snrs: &[f64], options: ReportOptions) -> Result<GmiReport> {
    if snrs.is_empty() {
        return param("snr grid is empty");
    }
    let n = config.antennas();
    let alias_free = config.period <= config.psd.nyquist_spacing();
    let mut rows = Vec::with_capacity(snrs.len());
    let mut sweep = Vec::new();
    let mut samples_per_point = 0;
    for &snr_lin in snrs {
        let snr = F::of(snr_lin);
        let sampler = GmiSampler::new(config, snr)?;
        samples_per_point = sampler.sample_count();
        let theta = sampler.high_snr_theta();
        let kappa = sampler.kappa(theta)?;
        let b = sampler.b()?;
        let finite = sampler.finite_window_bound()?;
        let asym = if alias_free {
            Some(gmi_lower_bound_asymptotic(
                snr,
                config.period,
                n,
                n,
                &config.psd,
                config.asymptotic_samples,
                config.seed,
            )?)
        } else {
            None
        };
        let snr_db = 10.0 * snr_lin.log10();
        let best = if options.sweep {
            let grid: Vec<F> = theta_grid(theta.as_f64(), 25, 2.0).into_iter().map(F::of).collect();
            let s = sampler.theta_sweep(&grid)?;
            sweep.extend(s.points.iter().map(|p| SweepRow {
                snr_db,
                theta: p.theta,
                gmi: p.gmi.mean,
                se: p.gmi.se,
            }));
            Some(s)
        } else {
            None
        };
        let gmi_theta = (theta * b).as_f64() - kappa.kappa.mean;
        rows.push(GmiRow {
            snr_db,
            snr: snr_lin,
            theta: theta.as_f64(),
            sigma_e_star_t: sampler.sigma_e_star().as_f64(),
            b: b.as_f64(),
            kappa: kappa.kappa.mean,
            kappa_se: kappa.kappa.se,
            gmi_theta,
            gmi_theta_se: kappa.kappa.se,
            finite_t_bound: finite.raw.mean,
            finite_t_se: finite.raw.se,
            finite_t_clamped: finite.clamped,
            finite_t_negative: finite.negative,
            sigma_e_star: asym.as_ref().map(|a| a.sigma_e_star),
            asymptotic_bound: asym.as_ref().map(|a| a.logdet_form.mean),
            asymptotic_se: asym.as_ref().map(|a| a.logdet_form.se),
            asymptotic_closed_form: asym.as_ref().map(|a| a.closed_form),
            asymptotic_clamped: asym.as_ref().map(|a| a.logdet_form.mean.max(0.0)),
            sweep_theta: best.as_ref().map(|s| s.best_theta),
            sweep_gmi: best.as_ref().map(|s| s.best.mean),
            sweep_se: best.as_ref().map(|s| s.best.se),
            sign_violations: kappa.sign_violations,
            logdet_violations: finite.logdet_violations + asym.as_ref().map_or(0, |a| a.logdet_violations),
        });
    }

    let finite_pts: Vec<(f64, f64)> = rows.iter().map(|r| (r.snr, r.finite_t_bound)).collect();
    let asym_pts: Option<Vec<(f64, f64)>> = rows.iter().map(|r| r.asymptotic_bound.map(|b| (r.snr, b))).collect();
    Ok(GmiReport {
        units: "nats".into(),
        n_t: config.n_t,
        n_r: config.n_r,
        antennas: n,
        period: config.period,
        window: config.window,
        bandwidth: config.psd.bandwidth().as_f64(),
        seed: config.seed,
        frames: config.frames,
        data_periods: config.data_periods,
        samples_per_point,
        asymptotic_samples: config.asymptotic_samples,
        rows,
        sweep,
        slope_finite_t: fit_prelog(&finite_pts).ok(),
        slope_asymptotic: asym_pts.and_then(|p| fit_prelog(&p).ok()),
        reference: theorem1_bound(config.n_t, config.n_r, config.psd.bandwidth().as_f64())?,
    })
}

impl GmiReport {
    /// The same report with every rate divided by `ln 2`.
    pub fn in_bits(&self) -> Self {
        let s = std::f64::consts::LN_2.recip();
        let opt = |v: Option<f64>| v.map(|x| x * s);
        let fit = |f: Option<SlopeFit>| {
            f.map(|f| SlopeFit {
                intercept: f.intercept * s,
                ..f
            })
        };
        let mut out = self.clone();
        out.units = "bits".into();
        for r in &mut out.rows {
            r.kappa *= s;
            r.kappa_se *= s;
            r.gmi_theta *= s;
            r.gmi_theta_se *= s;
            r.finite_t_bound *= s;
            r.finite_t_se *= s;
            r.finite_t_clamped *= s;
            r.asymptotic_bound = opt(r.asymptotic_bound);
            r.asymptotic_se = opt(r.asymptotic_se);
            r.asymptotic_closed_form = opt(r.asymptotic_closed_form);
            r.asymptotic_clamped = opt(r.asymptotic_clamped);
            r.sweep_gmi = opt(r.sweep_gmi);
            r.sweep_se = opt(r.sweep_se);
        }
        for p in &mut out.sweep {
            p.gmi *= s;
            p.se *= s;
        }
        out.slope_finite_t = fit(out.slope_finite_t);
        out.slope_asymptotic = fit(out.slope_asymptotic);
        out
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        for r in &self.rows {
            wr.serialize(r)?;
        }
        wr.flush()?;
        Ok(())
    }

    pub fn write_sweep_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        for r in &self.sweep {
            wr.serialize(r)?;
        }
        wr.flush()?;
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}
