//! Random Gaussian codebooks and the mismatched nearest-neighbour decoder,
//! which treats the pilot-aided fading estimates as if they were exact.

use num_complex::Complex;
use rand::Rng;
use serde::Serialize;

use crate::chain::{par_trials, LinkChain};
use crate::error::{param, Error, Result};
use crate::estimator::estimate_block;
use crate::linalg::CMatrix;
use crate::rng::{complex_normal, stream, Purpose};
use crate::scalar::Real;
use crate::stats::pairwise_sum;

/// Default cap on codebook storage.
pub const DEFAULT_CODEBOOK_BYTES: usize = 1 << 30;
/// Desk-scale cap on the number of messages.
pub const MAX_MESSAGES: usize = 1 << 16;

/// `M` codewords of `N` vectors in `C^{n_t}`, entries i.i.d. `CN(0, 1)`.
///
/// Codeword `m` is drawn from its own stream, so it does not depend on `M`.
#[derive(Clone, Debug, PartialEq)]
pub struct Codebook<F> {
    messages: usize,
    length: usize,
    n_t: usize,
    seed: u64,
    entries: Vec<Complex<F>>,
}

pub fn generate_codebook<F: Real>(
    messages: usize,
    length: usize,
    n_t: usize,
    seed: u64,
    max_bytes: usize,
) -> Result<Codebook<F>> {
    if messages == 0 {
        return param("a codebook needs at least one message");
    }
    if length == 0 || n_t == 0 {
        return param("codeword length and antenna count must be at least 1");
    }
    let symbols = messages
        .checked_mul(length)
        .and_then(|s| s.checked_mul(n_t))
        .ok_or_else(|| Error::Resource("codebook size overflows".into()))?;
    let bytes = symbols.saturating_mul(std::mem::size_of::<Complex<F>>());
    if bytes > max_bytes {
        return Err(Error::Resource(format!(
            "codebook of {messages} x {length} x {n_t} symbols needs {bytes} bytes, cap is {max_bytes}"
        )));
    }
    let mut entries = Vec::with_capacity(symbols);
    for m in 0..messages {
        let mut rng = stream(seed, Purpose::Codebook, m as u64, 0, 0);
        entries.extend((0..length * n_t).map(|_| complex_normal::<F, _>(&mut rng)));
    }
    Ok(Codebook {
        messages,
        length,
        n_t,
        seed,
        entries,
    })
}

impl<F: Real> Codebook<F> {
    pub fn messages(&self) -> usize {
        self.messages
    }

    /// `N`, in data vectors.
    pub fn length(&self) -> usize {
        self.length
    }

    pub fn n_t(&self) -> usize {
        self.n_t
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Codeword `m`, row-major `N x n_t`.
    pub fn codeword(&self, m: usize) -> &[Complex<F>] {
        let w = self.length * self.n_t;
        &self.entries[m * w..(m + 1) * w]
    }

    /// `(1/N) sum_n |x_n(m)|^2`.
    pub fn codeword_power(&self, m: usize) -> F {
        self.codeword(m).iter().map(|z| z.norm_sqr()).sum::<F>() / F::from_count(self.length)
    }
}

/// `M = round(e^{N R})`, at least one and at most `cap`.
pub fn messages_for_rate(length: usize, rate_nats: f64, cap: usize) -> usize {
    let log_m = length as f64 * rate_nats.max(0.0);
    if log_m >= (cap as f64).ln() {
        cap
    } else {
        (log_m.exp().round() as usize).clamp(1, cap)
    }
}

fn check_alignment<F: Real>(y: &[Vec<Complex<F>>], h_hat: &[CMatrix<F>], n_t: usize, len: usize) -> Result<()> {
    if y.len() != len || h_hat.len() != len {
        return param(format!(
            "metric inputs misaligned: {} outputs, {} estimates, codeword length {len}",
            y.len(),
            h_hat.len()
        ));
    }
    for (yk, hk) in y.iter().zip(h_hat) {
        if hk.rows() != yk.len() || hk.cols() != n_t {
            return param("estimate dimensions do not match outputs and codeword");
        }
    }
    Ok(())
}

/// `D(m) = sum_k |y_k - sqrt(SNR / n_t) Ĥ_k x_k(m)|^2` over the data instants.
///
/// `codeword` is row-major `N x n_t`.
pub fn nn_metric<F: Real>(
    y: &[Vec<Complex<F>>],
    h_hat: &[CMatrix<F>],
    codeword: &[Complex<F>],
    snr: F,
    n_t: usize,
) -> Result<F> {
    if n_t == 0 || !codeword.len().is_multiple_of(n_t) {
        return param("codeword length is not a multiple of n_t");
    }
    let len = codeword.len() / n_t;
    check_alignment(y, h_hat, n_t, len)?;
    let amp = (snr / F::from_count(n_t)).sqrt();
    let gains: Vec<CMatrix<F>> = h_hat.iter().map(|h| h.scale(amp)).collect();
    Ok(metric_with_gains(y, &gains, codeword, n_t))
}

fn metric_with_gains<F: Real>(y: &[Vec<Complex<F>>], gains: &[CMatrix<F>], codeword: &[Complex<F>], n_t: usize) -> F {
    let mut total = F::zero();
    for (k, (yk, g)) in y.iter().zip(gains).enumerate() {
        let x = &codeword[k * n_t..(k + 1) * n_t];
        let rows = g.as_slice().chunks_exact(n_t);
        for (yr, row) in yk.iter().zip(rows) {
            let mut pred = Complex::new(F::zero(), F::zero());
            for (a, b) in row.iter().zip(x) {
                pred = pred + a * b;
            }
            total = total + (yr - pred).norm_sqr();
        }
    }
    total
}

#[derive(Clone, Debug, PartialEq)]
pub struct DecodeResult<F> {
    /// `m̂`, the lowest-index minimizer of `D(m)`.
    pub message: usize,
    pub metrics: Option<Vec<F>>,
}

/// Nearest-neighbour decision over the whole codebook.
pub fn decode<F: Real>(
    y: &[Vec<Complex<F>>],
    h_hat: &[CMatrix<F>],
    codebook: &Codebook<F>,
    snr: F,
    keep_metrics: bool,
) -> Result<DecodeResult<F>> {
    if codebook.messages() == 0 {
        return param("cannot decode with an empty codebook");
    }
    let n_t = codebook.n_t();
    check_alignment(y, h_hat, n_t, codebook.length())?;
    let amp = (snr / F::from_count(n_t)).sqrt();
    let gains: Vec<CMatrix<F>> = h_hat.iter().map(|h| h.scale(amp)).collect();
    let mut best = (0usize, F::infinity());
    let mut metrics = keep_metrics.then(|| Vec::with_capacity(codebook.messages()));
    for m in 0..codebook.messages() {
        let d = metric_with_gains(y, &gains, codebook.codeword(m), n_t);
        if d < best.1 {
            best = (m, d);
        }
        if let Some(v) = metrics.as_mut() {
            v.push(d);
        }
    }
    Ok(DecodeResult {
        message: best.0,
        metrics,
    })
}

/// Frame-error statistics of an end-to-end link simulation.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LinkStats {
    pub trials: u64,
    pub frame_errors: u64,
    pub fer: f64,
    pub mean_metric_correct: f64,
    /// Mean of `D(m)` over the messages that were not sent; absent when `M = 1`.
    pub mean_metric_incorrect: Option<f64>,
}

struct TrialOutcome {
    error: bool,
    correct: f64,
    incorrect: Option<f64>,
}

/// Sends a uniformly chosen message per trial through `chain` and decodes it.
pub fn simulate_link<F: Real>(chain: &LinkChain<F>, codebook: &Codebook<F>, trials: u64, seed: u64) -> Result<LinkStats> {
    if codebook.length() != chain.schedule.data_len() || codebook.n_t() != chain.params.n_t {
        return param("codebook dimensions do not match the frame layout");
    }
    if trials == 0 {
        return param("need at least one trial");
    }
    let snr = chain.params.snr;
    let outcomes = par_trials(trials, |trial| {
        let sent = stream(seed, Purpose::Message, trial, 0, 0).random_range(0..codebook.messages());
        let trace = chain.transmit(codebook.codeword(sent), seed, trial)?;
        let h_hat = estimate_block(&chain.bank, &chain.schedule, &trace.y)?;
        let y: Vec<Vec<Complex<F>>> = chain.schedule.data_indices().iter().map(|&k| trace.output(k)).collect();
        let res = decode(&y, &h_hat, codebook, snr, true)?;
        let metrics: Vec<f64> = res.metrics.unwrap_or_default().into_iter().map(Real::as_f64).collect();
        let others: Vec<f64> = metrics.iter().enumerate().filter(|(m, _)| *m != sent).map(|(_, d)| *d).collect();
        Ok(TrialOutcome {
            error: res.message != sent,
            correct: metrics[sent],
            incorrect: (!others.is_empty()).then(|| pairwise_sum(&others) / others.len() as f64),
        })
    })?;
    let frame_errors = outcomes.iter().filter(|o| o.error).count() as u64;
    let correct: Vec<f64> = outcomes.iter().map(|o| o.correct).collect();
    let incorrect: Vec<f64> = outcomes.iter().filter_map(|o| o.incorrect).collect();
    Ok(LinkStats {
        trials,
        frame_errors,
        fer: frame_errors as f64 / trials as f64,
        mean_metric_correct: pairwise_sum(&correct) / trials as f64,
        mean_metric_incorrect: (!incorrect.is_empty()).then(|| pairwise_sum(&incorrect) / incorrect.len() as f64),
    })
}
