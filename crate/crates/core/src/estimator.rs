//! Finite-window LMMSE interpolation of the fading from pilot observations,
//! and the interpolation-error variances it achieves.
//!
//! For a data instant `k` at period offset `l` and transmit antenna `t`, the
//! estimate of `H_k(r, t)` is a linear combination of `Y_{k'}(r)` over the
//! pilot instants `k'` of antenna `t` with `|k' - k| <= T L`. Pilot slots of
//! other antennas carry no information about column `t` and are left out.
//! The lags `k' - k` only depend on `(l, t)`, so one filter per `(l, t)` serves
//! the whole block.

use std::io::Write;

use num_complex::Complex;
use num_traits::Zero;
use serde::Serialize;

use crate::error::{param, Error, Result};
use crate::framing::FrameSchedule;
use crate::linalg::{CMatrix, Cholesky};
use crate::scalar::Real;
use crate::spectra::SpectralDensity;

/// LMMSE filter for one `(offset, antenna)` pair.
#[derive(Clone, Debug, PartialEq)]
pub struct OffsetFilter<F> {
    pub offset: usize,
    pub antenna: usize,
    /// Pilot lags `k' - k`, increasing.
    pub lags: Vec<i64>,
    /// `a_{k'}`: the estimate is `sum_i coeffs[i] * Y_{k + lags[i]}(r)`.
    pub coeffs: Vec<Complex<F>>,
    /// `sigma^2_{e,T}`, the mean-squared interpolation error.
    pub error_variance: F,
    /// Backward residual of the normal equations, relative to `|R| |w| + |g|`.
    pub residual: F,
}

#[derive(Clone, Debug, PartialEq)]
pub struct InterpolatorBank<F> {
    period: usize,
    n_t: usize,
    window: usize,
    snr: F,
    filters: Vec<OffsetFilter<F>>,
}

fn lookup<F: Real>(table: &[Complex<F>], m: i64) -> Complex<F> {
    if m >= 0 {
        table[m as usize]
    } else {
        table[(-m) as usize].conj()
    }
}

/// Solves the LMMSE normal equations for every data offset and transmit antenna.
///
/// `snr` is the channel SNR; each pilot observation has SNR `snr / n_t`.
pub fn build_interpolator<F: Real>(
    psd: &SpectralDensity<F>,
    schedule: &FrameSchedule,
    snr: F,
) -> Result<InterpolatorBank<F>> {
    if !(snr > F::zero()) || !snr.is_finite() {
        return param(format!("SNR must be positive and finite, got {snr}"));
    }
    let (period, n_t) = (schedule.period(), schedule.n_t());
    let psi = snr / F::from_count(n_t);
    let amp = psi.sqrt();
    let table = psd.autocovariance_table((2 * schedule.window() + 1) * period);
    let data = schedule.data_indices();

    let mut filters = Vec::with_capacity((period - n_t) * n_t);
    for (i, &offset) in schedule.data_offsets().iter().enumerate() {
        let k = data[i];
        debug_assert_eq!(k % period, offset);
        for antenna in 0..n_t {
            let lags: Vec<i64> = schedule
                .pilot_window(k, antenna)
                .into_iter()
                .map(|kp| kp as i64 - k as i64)
                .collect();
            filters.push(solve_filter(&table, &lags, psi, amp, offset, antenna)?);
        }
    }
    Ok(InterpolatorBank {
        period,
        n_t,
        window: schedule.window(),
        snr,
        filters,
    })
}

fn solve_filter<F: Real>(
    table: &[Complex<F>],
    lags: &[i64],
    psi: F,
    amp: F,
    offset: usize,
    antenna: usize,
) -> Result<OffsetFilter<F>> {
    let n = lags.len();
    let r = CMatrix::from_fn(n, n, |i, j| {
        let mut v = lookup(table, lags[i] - lags[j]) * psi;
        if i == j {
            v = v + F::one();
        }
        v
    });
    // E[Y_{k'} conj(H_k)] = sqrt(psi) R(k' - k)
    let g: Vec<Complex<F>> = lags.iter().map(|&d| lookup(table, d) * amp).collect();
    let chol = Cholesky::new(&r).map_err(|e| {
        Error::Numerical(format!("normal equations for offset {offset}, antenna {antenna}: {e}"))
    })?;
    let w = chol.solve(&g);
    let rw = r.mul_vec(&w);
    let norm = |v: &[Complex<F>]| v.iter().map(|z| z.norm_sqr()).sum::<F>().sqrt();
    let r_norm = r.frobenius_sq().sqrt();
    let diff: Vec<Complex<F>> = rw.iter().zip(&g).map(|(a, b)| a - b).collect();
    let scale = r_norm * norm(&w) + norm(&g);
    let residual = if scale > F::zero() { norm(&diff) / scale } else { F::zero() };
    if residual > F::epsilon().sqrt() {
        return Err(Error::Numerical(format!(
            "normal-equation residual {residual} too large at offset {offset}, antenna {antenna}"
        )));
    }
    let explained = g.iter().zip(&w).fold(F::zero(), |acc, (gi, wi)| acc + (gi.conj() * wi).re);
    let error_variance = (F::one() - explained).max(F::zero()).min(F::one());
    Ok(OffsetFilter {
        offset,
        antenna,
        lags: lags.to_vec(),
        coeffs: w.iter().map(|z| z.conj()).collect(),
        error_variance,
        residual,
    })
}

impl<F: Real> InterpolatorBank<F> {
    pub fn period(&self) -> usize {
        self.period
    }

    pub fn n_t(&self) -> usize {
        self.n_t
    }

    pub fn window(&self) -> usize {
        self.window
    }

    pub fn snr(&self) -> F {
        self.snr
    }

    pub fn filters(&self) -> &[OffsetFilter<F>] {
        &self.filters
    }

    pub fn filter(&self, offset: usize, antenna: usize) -> Option<&OffsetFilter<F>> {
        if offset < self.n_t || offset >= self.period || antenna >= self.n_t {
            return None;
        }
        self.filters.get((offset - self.n_t) * self.n_t + antenna)
    }

    pub fn error_variance(&self, offset: usize, antenna: usize) -> Option<F> {
        self.filter(offset, antenna).map(|f| f.error_variance)
    }

    /// `sigma^2_{e*,T}`: the worst error variance over offsets and antennas.
    pub fn max_error_variance(&self) -> F {
        self.filters
            .iter()
            .map(|f| f.error_variance)
            .fold(F::zero(), F::max)
    }

    /// `E |E_l|_F^2 / n_r = sum_t sigma^2_{e,T}(l, t)` for each data offset.
    pub fn column_error_sums(&self) -> Vec<F> {
        self.filters
            .chunks(self.n_t)
            .map(|c| c.iter().map(|f| f.error_variance).sum())
            .collect()
    }
}

/// `Ĥ_k(r, t)` from the outputs `y` (one sequence per receive antenna).
pub fn interpolate<F: Real>(
    bank: &InterpolatorBank<F>,
    schedule: &FrameSchedule,
    y: &[Vec<Complex<F>>],
    k: usize,
    r: usize,
    t: usize,
) -> Result<Complex<F>> {
    if !schedule.is_data(k) {
        return param(format!("time {k} is not a data instant"));
    }
    let yr = y
        .get(r)
        .ok_or_else(|| Error::Parameter(format!("receive antenna {r} out of range")))?;
    let filter = bank
        .filter(k % bank.period, t)
        .ok_or_else(|| Error::Parameter(format!("no filter for offset {} antenna {t}", k % bank.period)))?;
    let mut acc = Complex::zero();
    for (&d, &a) in filter.lags.iter().zip(&filter.coeffs) {
        let kp = k as i64 + d;
        if kp < 0 || kp as usize >= yr.len() {
            return param(format!("pilot {kp} needed for time {k} lies outside the block"));
        }
        acc = acc + a * yr[kp as usize];
    }
    Ok(acc)
}

/// `Ĥ_k` as an `n_r x n_t` matrix.
pub fn estimate_matrix<F: Real>(
    bank: &InterpolatorBank<F>,
    schedule: &FrameSchedule,
    y: &[Vec<Complex<F>>],
    k: usize,
) -> Result<CMatrix<F>> {
    let mut m = CMatrix::zeros(y.len(), bank.n_t);
    for r in 0..y.len() {
        for t in 0..bank.n_t {
            m[(r, t)] = interpolate(bank, schedule, y, k, r, t)?;
        }
    }
    Ok(m)
}

/// Estimates at every data instant, in codeword order.
pub fn estimate_block<F: Real>(
    bank: &InterpolatorBank<F>,
    schedule: &FrameSchedule,
    y: &[Vec<Complex<F>>],
) -> Result<Vec<CMatrix<F>>> {
    schedule
        .data_indices()
        .iter()
        .map(|&k| estimate_matrix(bank, schedule, y, k))
        .collect()
}

/// `T -> infinity` interpolation-error variance at `offset` samples after a
/// pilot comb of spacing `period`, observed at SNR `snr`:
///
/// `1 - integral of snr |f_{H_L,l}|^2 / (snr f_{H_L,0} + 1)` over `[-1/2, 1/2]`.
///
/// Valid with and without aliasing. `offset` is taken modulo `period`.
pub fn asymptotic_error_variance<F: Real>(psd: &SpectralDensity<F>, period: usize, snr: F, offset: usize) -> F {
    let period = period.max(1);
    let offset = offset % period;
    let breaks = psd.folded_breakpoints(period);
    let points = psd.quadrature_points().max(64 * period);
    let captured: F = crate::quadrature::integrate(&breaks, points, |x| {
        let f0 = psd.folded_unchecked(period, 0, x).re;
        if f0 <= F::zero() {
            return F::zero();
        }
        let fl = if offset == 0 {
            f0 * f0
        } else {
            psd.folded_unchecked(period, offset, x).norm_sqr()
        };
        snr * fl / (snr * f0 + F::one())
    });
    (F::one() - captured).max(F::zero()).min(F::one())
}

/// Alias-free form for `period <= 1/(2 lambda_D)`:
/// `1 - integral of snr f_H^2 / (snr f_H + L)`, the same for every offset.
pub fn alias_free_error_variance<F: Real>(psd: &SpectralDensity<F>, period: usize, snr: F) -> Result<F> {
    if period == 0 || period > psd.nyquist_spacing() {
        return param(format!(
            "pilot spacing {period} exceeds floor(1/(2 lambda_D)) = {}; the estimate aliases",
            psd.nyquist_spacing()
        ));
    }
    let l = F::from_count(period);
    let captured: F = crate::quadrature::integrate(&psd.breakpoints(), psd.quadrature_points(), |x| {
        let f = psd.value(x);
        snr * f * f / (snr * f + l)
    });
    Ok((F::one() - captured).max(F::zero()).min(F::one()))
}

/// Limits of the per-offset error variances as the window grows.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AsymptoticErrorProfile<F> {
    pub period: usize,
    pub n_t: usize,
    /// Pilot-observation SNR the variances were computed at.
    pub pilot_snr: F,
    /// `(offset, antenna, sigma^2_e)` for every data offset and antenna.
    pub variances: Vec<(usize, usize, F)>,
    /// `sigma^2_{e*}`.
    pub max_variance: F,
    /// `sigma^2_{hhat} = 1 - sigma^2_{e*}`.
    pub estimate_variance: F,
    /// Whether `period <= floor(1/(2 lambda_D))`.
    pub alias_free: bool,
}

impl<F: Real> AsymptoticErrorProfile<F> {
    pub fn new(psd: &SpectralDensity<F>, period: usize, n_t: usize, pilot_snr: F) -> Result<Self> {
        if n_t == 0 || n_t >= period {
            return param(format!("need 1 <= n_t < L, got n_t = {n_t}, L = {period}"));
        }
        let mut variances = Vec::new();
        for offset in n_t..period {
            for antenna in 0..n_t {
                let rel = (offset + period - antenna) % period;
                variances.push((offset, antenna, asymptotic_error_variance(psd, period, pilot_snr, rel)));
            }
        }
        let max_variance = variances.iter().map(|v| v.2).fold(F::zero(), F::max);
        Ok(Self {
            period,
            n_t,
            pilot_snr,
            variances,
            max_variance,
            estimate_variance: F::one() - max_variance,
            alias_free: period <= psd.nyquist_spacing(),
        })
    }
}

/// One line of the variance-convergence table.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VarianceRow {
    pub offset: usize,
    pub antenna: usize,
    pub window: usize,
    pub finite_variance: f64,
    pub asymptotic_variance: f64,
    pub mc_variance: Option<f64>,
    pub mc_se: Option<f64>,
}

/// Writes rows as CSV with a header line.
pub fn write_variance_csv<W: Write>(rows: &[VarianceRow], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for row in rows {
        out.serialize(row)?;
    }
    out.flush()?;
    Ok(())
}
