//! The physical simulation chain shared by the Monte Carlo routines:
//! fading and noise synthesis, pilot and codeword embedding, the channel,
//! and pilot-aided estimation at every data instant.

use num_complex::Complex;
use rayon::prelude::*;

use crate::error::Result;
use crate::estimator::{build_interpolator, estimate_matrix, InterpolatorBank};
use crate::fading_sim::{simulate_trace, ChannelParams, FadingSynthesizer, FadingTrace, SynthesisOptions};
use crate::framing::FrameSchedule;
use crate::linalg::CMatrix;
use crate::rng::{complex_normal, stream, Purpose};
use crate::scalar::Real;

/// What the receiver sees (and the simulator knows) at one data instant.
#[derive(Clone, Debug, PartialEq)]
pub struct DataSample<F> {
    /// `k mod L`.
    pub offset: usize,
    pub x: Vec<Complex<F>>,
    pub y: Vec<Complex<F>>,
    pub h: CMatrix<F>,
    pub h_hat: CMatrix<F>,
}

impl<F: Real> DataSample<F> {
    /// `E_k = H_k - Ĥ_k`.
    pub fn error(&self) -> CMatrix<F> {
        self.h.add_scaled(&self.h_hat, -F::one())
    }
}

#[derive(Debug)]
pub struct LinkChain<F: Real> {
    pub params: ChannelParams<F>,
    pub schedule: FrameSchedule,
    pub bank: InterpolatorBank<F>,
    synth: FadingSynthesizer<F>,
}

impl<F: Real> LinkChain<F> {
    pub fn new(params: ChannelParams<F>, schedule: FrameSchedule) -> Result<Self> {
        let opts = SynthesisOptions::for_schedule(&schedule);
        Self::with_options(params, schedule, opts)
    }

    pub fn with_options(params: ChannelParams<F>, schedule: FrameSchedule, opts: SynthesisOptions) -> Result<Self> {
        let synth = FadingSynthesizer::new(&params.psd, schedule.total_len(), opts)?;
        let bank = build_interpolator(&params.psd, &schedule, params.snr)?;
        Ok(Self {
            params,
            schedule,
            bank,
            synth,
        })
    }

    pub fn synthesizer(&self) -> &FadingSynthesizer<F> {
        &self.synth
    }

    /// i.i.d. `CN(0, 1)` codeword symbols for `trial`, row-major `N x n_t`.
    pub fn gaussian_codeword(&self, seed: u64, trial: u64) -> Vec<Complex<F>> {
        let mut rng = stream(seed, Purpose::Input, trial, 0, 0);
        (0..self.schedule.data_len() * self.params.n_t)
            .map(|_| complex_normal(&mut rng))
            .collect()
    }

    pub fn transmit(&self, codeword: &[Complex<F>], seed: u64, trial: u64) -> Result<FadingTrace<F>> {
        simulate_trace(&self.params, &self.schedule, &self.synth, codeword, seed, trial)
    }

    /// Estimates and ground truth at every data instant of `trace`.
    pub fn observe(&self, trace: &FadingTrace<F>) -> Result<Vec<DataSample<F>>> {
        let period = self.schedule.period();
        self.schedule
            .data_indices()
            .iter()
            .map(|&k| {
                Ok(DataSample {
                    offset: k % period,
                    x: trace.input(k),
                    y: trace.output(k),
                    h: trace.h.matrix(k),
                    h_hat: estimate_matrix(&self.bank, &self.schedule, &trace.y, k)?,
                })
            })
            .collect()
    }

    /// One frame with a Gaussian codeword, observed at every data instant.
    pub fn frame_samples(&self, seed: u64, trial: u64) -> Result<Vec<DataSample<F>>> {
        let cw = self.gaussian_codeword(seed, trial);
        let trace = self.transmit(&cw, seed, trial)?;
        self.observe(&trace)
    }
}

/// Runs `f` for trials `0..count` in parallel; results keep trial order.
pub fn par_trials<T, G>(count: u64, f: G) -> Result<Vec<T>>
where
    T: Send,
    G: Fn(u64) -> Result<T> + Sync + Send,
{
    (0..count).into_par_iter().map(f).collect()
}
