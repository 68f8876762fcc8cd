//! Realizations of the fading process, noise, inputs and channel outputs.
//!
//! Each scalar fading process is synthesized spectrally: independent complex
//! Gaussians on a fine frequency grid, weighted by the square root of the
//! density mass in each bin, then inverse-transformed. The result is exactly
//! bandlimited and stationary (circulant) with the grid-sampled covariance.

use std::io::{Read, Write};
use std::sync::Arc;

use num_complex::Complex;
use num_traits::Zero;
use rand::Rng;
use rustfft::{Fft, FftPlanner};

use crate::error::{param, Error, Result};
use crate::framing::{FrameSchedule, Slot};
use crate::linalg::CMatrix;
use crate::rng::{complex_normal, stream, Purpose};
use crate::scalar::Real;
use crate::spectra::SpectralDensity;

#[derive(Clone, Debug, PartialEq)]
pub struct ChannelParams<F> {
    pub n_t: usize,
    pub n_r: usize,
    /// Linear average SNR per receive antenna.
    pub snr: F,
    pub psd: SpectralDensity<F>,
}

impl<F: Real> ChannelParams<F> {
    pub fn new(n_t: usize, n_r: usize, snr: F, psd: SpectralDensity<F>) -> Result<Self> {
        if n_t == 0 || n_r == 0 {
            return param("antenna counts must be at least 1");
        }
        if !(snr > F::zero()) || !snr.is_finite() {
            return param(format!("SNR must be positive and finite, got {snr}"));
        }
        Ok(Self { n_t, n_r, snr, psd })
    }

    /// `sqrt(SNR / n_t)`, the amplitude applied to every transmitted vector.
    pub fn amplitude(&self) -> F {
        (self.snr / F::from_count(self.n_t)).sqrt()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SynthesisOptions {
    /// Frequency grid is the smallest power of two at least this many times the
    /// generated length.
    pub oversampling: usize,
    /// Samples discarded on each side of the returned window.
    pub margin: usize,
}

impl Default for SynthesisOptions {
    fn default() -> Self {
        Self { oversampling: 64, margin: 0 }
    }
}

impl SynthesisOptions {
    /// Margin of `4 L T` samples for the given layout.
    pub fn for_schedule(schedule: &FrameSchedule) -> Self {
        Self {
            oversampling: 64,
            margin: 4 * schedule.period() * schedule.window(),
        }
    }
}

/// Reusable spectral generator for one process length.
/// Fewest in-band grid bins accepted by [`FadingSynthesizer::new`].
pub const MIN_ACTIVE_BINS: usize = 8;

pub struct FadingSynthesizer<F: Real> {
    length: usize,
    margin: usize,
    grid: usize,
    bins: Vec<(usize, F)>,
    fft: Arc<dyn Fft<F>>,
}

impl<F: Real> std::fmt::Debug for FadingSynthesizer<F> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FadingSynthesizer")
            .field("length", &self.length)
            .field("margin", &self.margin)
            .field("grid", &self.grid)
            .field("active_bins", &self.bins.len())
            .finish()
    }
}

impl<F: Real> FadingSynthesizer<F> {
    pub fn new(psd: &SpectralDensity<F>, length: usize, opts: SynthesisOptions) -> Result<Self> {
        if length == 0 {
            return param("fading length must be at least 1");
        }
        let span = length + 2 * opts.margin;
        let grid = (opts.oversampling.max(1) * span).next_power_of_two();
        let gf = F::from_count(grid);
        let mut bins = Vec::new();
        let mut total = F::zero();
        for n in 0..grid {
            let signed = if n < grid / 2 { n as f64 } else { n as f64 - grid as f64 };
            let p = psd.value(F::of(signed) / gf) / gf;
            if p < F::zero() || !p.is_finite() {
                return Err(Error::Numerical(format!("spectral weight {p} at bin {n} is invalid")));
            }
            if p > F::zero() {
                bins.push((n, p));
                total = total + p;
            }
        }
        if bins.len() < MIN_ACTIVE_BINS {
            return Err(Error::Numerical(format!(
                "only {} bins of the {grid}-point grid fall inside the band (bandwidth {}); raise the oversampling",
                bins.len(),
                psd.bandwidth()
            )));
        }
        for b in &mut bins {
            b.1 = (b.1 / total).sqrt();
        }
        let fft = FftPlanner::new().plan_fft_inverse(grid);
        Ok(Self {
            length,
            margin: opts.margin,
            grid,
            bins,
            fft,
        })
    }

    pub fn length(&self) -> usize {
        self.length
    }

    pub fn grid_len(&self) -> usize {
        self.grid
    }

    /// Autocovariance realized by the discretized spectrum at lag `m`.
    pub fn realized_autocovariance(&self, m: i64) -> Complex<F> {
        let gf = F::from_count(self.grid);
        self.bins.iter().fold(Complex::zero(), |acc, &(n, a)| {
            let signed = if n < self.grid / 2 { n as f64 } else { n as f64 - self.grid as f64 };
            acc + Complex::from_polar(a * a, F::TAU() * F::of(signed * m as f64) / gf)
        })
    }

    /// One realization of length `length()` with unit variance.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<Complex<F>> {
        let mut buf = vec![Complex::<F>::zero(); self.grid];
        for &(n, a) in &self.bins {
            buf[n] = complex_normal::<F, _>(rng) * a;
        }
        self.fft.process(&mut buf);
        buf.drain(..self.margin);
        buf.truncate(self.length);
        buf
    }
}

/// `n_r x n_t` fading matrices over time, stored as one sequence per entry.
#[derive(Clone, Debug, PartialEq)]
pub struct FadingSequence<F> {
    n_r: usize,
    n_t: usize,
    len: usize,
    streams: Vec<Vec<Complex<F>>>,
}

impl<F: Real> FadingSequence<F> {
    /// `streams[r * n_t + t][k] = H_k(r, t)`.
    pub fn from_streams(n_r: usize, n_t: usize, streams: Vec<Vec<Complex<F>>>) -> Result<Self> {
        if streams.len() != n_r * n_t {
            return param(format!("expected {} entry streams, got {}", n_r * n_t, streams.len()));
        }
        let len = streams.first().map_or(0, Vec::len);
        if streams.iter().any(|s| s.len() != len) {
            return param("fading entry streams differ in length");
        }
        Ok(Self { n_r, n_t, len, streams })
    }

    /// Constant fading `H_k = h` for all `k`.
    pub fn constant(h: &CMatrix<F>, len: usize) -> Self {
        let streams = (0..h.rows())
            .flat_map(|r| (0..h.cols()).map(move |t| (r, t)))
            .map(|(r, t)| vec![h[(r, t)]; len])
            .collect();
        Self {
            n_r: h.rows(),
            n_t: h.cols(),
            len,
            streams,
        }
    }

    pub fn n_r(&self) -> usize {
        self.n_r
    }

    pub fn n_t(&self) -> usize {
        self.n_t
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn entry(&self, k: usize, r: usize, t: usize) -> Complex<F> {
        self.streams[r * self.n_t + t][k]
    }

    pub fn stream(&self, r: usize, t: usize) -> &[Complex<F>] {
        &self.streams[r * self.n_t + t]
    }

    pub fn matrix(&self, k: usize) -> CMatrix<F> {
        CMatrix::from_fn(self.n_r, self.n_t, |r, t| self.entry(k, r, t))
    }
}

/// Fading for trial `trial`: every `(r, t)` entry from its own stream.
pub fn sample_fading_trial<F: Real>(
    synth: &FadingSynthesizer<F>,
    n_r: usize,
    n_t: usize,
    seed: u64,
    trial: u64,
) -> FadingSequence<F> {
    let streams = (0..n_r)
        .flat_map(|r| (0..n_t).map(move |t| (r, t)))
        .map(|(r, t)| synth.sample(&mut stream(seed, Purpose::Fading, trial, r as u64, t as u64)))
        .collect();
    FadingSequence {
        n_r,
        n_t,
        len: synth.length(),
        streams,
    }
}

pub fn sample_fading<F: Real>(
    psd: &SpectralDensity<F>,
    n_r: usize,
    n_t: usize,
    length: usize,
    seed: u64,
    opts: SynthesisOptions,
) -> Result<FadingSequence<F>> {
    if n_r == 0 || n_t == 0 {
        return param("antenna counts must be at least 1");
    }
    let synth = FadingSynthesizer::new(psd, length, opts)?;
    Ok(sample_fading_trial(&synth, n_r, n_t, seed, 0))
}

/// i.i.d. `CN(0, I_{n_r})` noise, one sequence per receive antenna.
pub fn sample_noise<F: Real>(n_r: usize, len: usize, seed: u64, trial: u64) -> Vec<Vec<Complex<F>>> {
    (0..n_r)
        .map(|r| {
            let mut rng = stream(seed, Purpose::Noise, trial, r as u64, 0);
            (0..len).map(|_| complex_normal(&mut rng)).collect()
        })
        .collect()
}

/// Transmit sequences (one per antenna) carrying pilots and the codeword.
///
/// `codeword` holds `N` vectors of length `n_t`, row-major.
pub fn build_inputs<F: Real>(schedule: &FrameSchedule, codeword: &[Complex<F>]) -> Result<Vec<Vec<Complex<F>>>> {
    let n_t = schedule.n_t();
    if codeword.len() != schedule.data_len() * n_t {
        return param(format!(
            "codeword has {} symbols, layout needs {} x {}",
            codeword.len(),
            schedule.data_len(),
            n_t
        ));
    }
    let mut x = vec![vec![Complex::zero(); schedule.total_len()]; n_t];
    for (k, slot) in schedule.slots().iter().enumerate() {
        match *slot {
            Slot::Pilot { antenna } => x[antenna][k] = Complex::new(F::one(), F::zero()),
            Slot::Data { index } => {
                for (t, xt) in x.iter_mut().enumerate() {
                    xt[k] = codeword[index * n_t + t];
                }
            }
            Slot::Silent => {}
        }
    }
    Ok(x)
}

/// Checks that pilot slots carry unit vectors and silent slots carry zero.
pub fn check_inputs<F: Real>(schedule: &FrameSchedule, x: &[Vec<Complex<F>>]) -> Result<()> {
    if x.len() != schedule.n_t() || x.iter().any(|s| s.len() != schedule.total_len()) {
        return param("input sequences do not match the layout dimensions");
    }
    for (k, slot) in schedule.slots().iter().enumerate() {
        let ok = match *slot {
            Slot::Pilot { antenna } => {
                (0..x.len()).all(|t| x[t][k] == if t == antenna { Complex::new(F::one(), F::zero()) } else { Complex::zero() })
            }
            Slot::Silent => x.iter().all(|s| s[k].is_zero()),
            Slot::Data { .. } => true,
        };
        if !ok {
            return param(format!("input at time {k} violates the {slot:?} slot"));
        }
    }
    Ok(())
}

/// `Y_k = sqrt(SNR / n_t) H_k x_k + Z_k`, one output sequence per receive antenna.
pub fn apply_channel<F: Real>(
    params: &ChannelParams<F>,
    h: &FadingSequence<F>,
    x: &[Vec<Complex<F>>],
    z: &[Vec<Complex<F>>],
) -> Result<Vec<Vec<Complex<F>>>> {
    let len = h.len();
    if h.n_r() != params.n_r || h.n_t() != params.n_t {
        return param("fading dimensions do not match the channel parameters");
    }
    if x.len() != params.n_t || x.iter().any(|s| s.len() != len) {
        return param("input dimensions do not match the fading sequence");
    }
    if z.len() != params.n_r || z.iter().any(|s| s.len() != len) {
        return param("noise dimensions do not match the fading sequence");
    }
    let amp = params.amplitude();
    Ok((0..params.n_r)
        .map(|r| {
            (0..len)
                .map(|k| {
                    let mut s = Complex::zero();
                    for (t, xt) in x.iter().enumerate() {
                        s = s + h.entry(k, r, t) * xt[k];
                    }
                    s * amp + z[r][k]
                })
                .collect()
        })
        .collect())
}

/// Everything drawn for one transmitted block.
#[derive(Clone, Debug, PartialEq)]
pub struct FadingTrace<F> {
    pub seed: u64,
    pub trial: u64,
    pub snr: F,
    pub h: FadingSequence<F>,
    /// Per transmit antenna.
    pub x: Vec<Vec<Complex<F>>>,
    /// Per receive antenna.
    pub z: Vec<Vec<Complex<F>>>,
    /// Per receive antenna.
    pub y: Vec<Vec<Complex<F>>>,
}

impl<F: Real> FadingTrace<F> {
    pub fn len(&self) -> usize {
        self.h.len()
    }

    pub fn is_empty(&self) -> bool {
        self.h.is_empty()
    }

    pub fn output(&self, k: usize) -> Vec<Complex<F>> {
        self.y.iter().map(|s| s[k]).collect()
    }

    pub fn input(&self, k: usize) -> Vec<Complex<F>> {
        self.x.iter().map(|s| s[k]).collect()
    }
}

/// Draws fading and noise for `trial` and transmits `codeword` through the channel.
pub fn simulate_trace<F: Real>(
    params: &ChannelParams<F>,
    schedule: &FrameSchedule,
    synth: &FadingSynthesizer<F>,
    codeword: &[Complex<F>],
    seed: u64,
    trial: u64,
) -> Result<FadingTrace<F>> {
    if synth.length() != schedule.total_len() {
        return param("synthesizer length differs from the block length");
    }
    if schedule.n_t() != params.n_t {
        return param("layout and channel disagree on n_t");
    }
    let h = sample_fading_trial(synth, params.n_r, params.n_t, seed, trial);
    let z = sample_noise(params.n_r, schedule.total_len(), seed, trial);
    let x = build_inputs(schedule, codeword)?;
    let y = apply_channel(params, &h, &x, &z)?;
    Ok(FadingTrace {
        seed,
        trial,
        snr: params.snr,
        h,
        x,
        z,
        y,
    })
}

const TRACE_MAGIC: &[u8; 4] = b"PGTR";
const TRACE_VERSION: u32 = 1;

/// Writes a trace as little-endian binary: a fixed header (magic, version,
/// `n_r`, `n_t`, length, seed, trial, SNR) followed by interleaved complex64
/// payloads for `H` (time, r, t), `X` (time, t), `Z` (time, r), `Y` (time, r).
pub fn write_trace<F: Real, W: Write>(trace: &FadingTrace<F>, mut w: W) -> Result<()> {
    let (n_r, n_t, len) = (trace.h.n_r(), trace.h.n_t(), trace.len());
    w.write_all(TRACE_MAGIC)?;
    w.write_all(&TRACE_VERSION.to_le_bytes())?;
    w.write_all(&(n_r as u32).to_le_bytes())?;
    w.write_all(&(n_t as u32).to_le_bytes())?;
    w.write_all(&(len as u64).to_le_bytes())?;
    w.write_all(&trace.seed.to_le_bytes())?;
    w.write_all(&trace.trial.to_le_bytes())?;
    w.write_all(&trace.snr.as_f64().to_le_bytes())?;
    let mut put = |z: Complex<F>| -> std::io::Result<()> {
        w.write_all(&(z.re.as_f64() as f32).to_le_bytes())?;
        w.write_all(&(z.im.as_f64() as f32).to_le_bytes())
    };
    for k in 0..len {
        for r in 0..n_r {
            for t in 0..n_t {
                put(trace.h.entry(k, r, t))?;
            }
        }
    }
    for seqs in [&trace.x, &trace.z, &trace.y] {
        for k in 0..len {
            for s in seqs.iter() {
                put(s[k])?;
            }
        }
    }
    Ok(())
}

pub fn read_trace<F: Real, R: Read>(mut rd: R) -> Result<FadingTrace<F>> {
    let mut magic = [0u8; 4];
    rd.read_exact(&mut magic)?;
    if &magic != TRACE_MAGIC {
        return Err(Error::Format("not a fading trace (bad magic)".into()));
    }
    let mut b4 = [0u8; 4];
    let mut b8 = [0u8; 8];
    let mut u32_ = |rd: &mut R| -> std::io::Result<u32> {
        rd.read_exact(&mut b4)?;
        Ok(u32::from_le_bytes(b4))
    };
    let version = u32_(&mut rd)?;
    if version != TRACE_VERSION {
        return Err(Error::Format(format!("unsupported trace version {version}")));
    }
    let n_r = u32_(&mut rd)? as usize;
    let n_t = u32_(&mut rd)? as usize;
    let mut u64_ = |rd: &mut R| -> std::io::Result<u64> {
        rd.read_exact(&mut b8)?;
        Ok(u64::from_le_bytes(b8))
    };
    let len = u64_(&mut rd)? as usize;
    let seed = u64_(&mut rd)?;
    let trial = u64_(&mut rd)?;
    let snr = f64::from_bits(u64_(&mut rd)?);
    let get = |rd: &mut R| -> std::io::Result<Complex<F>> {
        let mut b = [0u8; 8];
        rd.read_exact(&mut b)?;
        let re = f32::from_le_bytes([b[0], b[1], b[2], b[3]]);
        let im = f32::from_le_bytes([b[4], b[5], b[6], b[7]]);
        Ok(Complex::new(F::of(re as f64), F::of(im as f64)))
    };
    let mut streams = vec![Vec::with_capacity(len); n_r * n_t];
    for _ in 0..len {
        for s in streams.iter_mut() {
            s.push(get(&mut rd)?);
        }
    }
    let read_seqs = |count: usize, rd: &mut R| -> std::io::Result<Vec<Vec<Complex<F>>>> {
        let mut seqs = vec![Vec::with_capacity(len); count];
        for _ in 0..len {
            for s in seqs.iter_mut() {
                s.push(get(rd)?);
            }
        }
        Ok(seqs)
    };
    let x = read_seqs(n_t, &mut rd)?;
    let z = read_seqs(n_r, &mut rd)?;
    let y = read_seqs(n_r, &mut rd)?;
    Ok(FadingTrace {
        seed,
        trial,
        snr: F::of(snr),
        h: FadingSequence::from_streams(n_r, n_t, streams)?,
        x,
        z,
        y,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex<f64> {
        Complex::new(re, 0.0)
    }

    #[test]
    fn zero_input_and_noise_gives_zero_output() {
        let psd = SpectralDensity::rectangular(0.1).unwrap();
        let params = ChannelParams::new(2, 2, 37.0, psd.clone()).unwrap();
        let h = sample_fading(&psd, 2, 2, 16, 1, SynthesisOptions::default()).unwrap();
        let x = vec![vec![Complex::zero(); 16]; 2];
        let z = vec![vec![Complex::zero(); 16]; 2];
        let y = apply_channel(&params, &h, &x, &z).unwrap();
        assert!(y.iter().flatten().all(|v| v.is_zero()));
    }

    #[test]
    fn scalar_law() {
        let psd = SpectralDensity::rectangular(0.1).unwrap();
        let params = ChannelParams::new(1, 1, 4.0, psd).unwrap();
        let h = FadingSequence::constant(&CMatrix::identity(1), 1);
        let y = apply_channel(&params, &h, &[vec![c(1.0)]], &[vec![c(0.0)]]).unwrap();
        assert_eq!(y[0][0], c(2.0));
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let psd = SpectralDensity::rectangular(0.1).unwrap();
        let params = ChannelParams::new(1, 1, 4.0, psd).unwrap();
        let h = FadingSequence::constant(&CMatrix::identity(1), 3);
        assert!(apply_channel(&params, &h, &[vec![c(1.0); 2]], &[vec![c(0.0); 3]]).is_err());
        assert!(ChannelParams::new(1, 0, 4.0, SpectralDensity::rectangular(0.1).unwrap()).is_err());
        assert!(ChannelParams::new(1, 1, 0.0, SpectralDensity::rectangular(0.1).unwrap()).is_err());
    }

    #[test]
    fn inputs_follow_the_layout() {
        let s = FrameSchedule::build(4, 2, 2, 4).unwrap();
        let cw: Vec<Complex<f64>> = (0..8).map(|i| c(i as f64 + 10.0)).collect();
        let x = build_inputs(&s, &cw).unwrap();
        check_inputs(&s, &x).unwrap();
        let k = s.data_indices()[1];
        assert_eq!((x[0][k], x[1][k]), (c(12.0), c(13.0)));
        let mut bad = x.clone();
        bad[1][0] = c(1.0);
        assert!(check_inputs(&s, &bad).is_err());
    }

    #[test]
    fn narrow_band_on_coarse_grid_is_diagnosed() {
        let psd = SpectralDensity::rectangular(1e-4).unwrap();
        let opts = SynthesisOptions { oversampling: 1, margin: 0 };
        assert!(matches!(FadingSynthesizer::new(&psd, 8, opts), Err(Error::Numerical(_))));
    }

    #[test]
    fn discretized_covariance_tracks_the_spectrum() {
        let psd = SpectralDensity::rectangular(0.1).unwrap();
        let synth = FadingSynthesizer::new(&psd, 100, SynthesisOptions::default()).unwrap();
        let tol = 4.0 / synth.grid_len() as f64;
        for m in [0i64, 1, 3, 10, 37] {
            let d = synth.realized_autocovariance(m) - psd.autocovariance(m);
            assert!(d.norm() < tol, "lag {m}: {d}");
        }
    }
}
