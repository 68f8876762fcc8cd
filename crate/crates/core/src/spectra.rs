//! Bandlimited power spectral densities, their autocovariances, and the
//! folded (undersampled) spectra that govern pilot interpolation error.
//!
//! Frequencies are normalized to cycles per sample, so every density lives
//! on `[-1/2, 1/2]` and is normalized to unit total power: the fading
//! process has unit variance.

use std::io::Read;
use std::path::Path;

use num_complex::Complex;
use num_traits::Zero;

use crate::error::{param, Error, Result};
use crate::quadrature::{self, normalize_breaks};
use crate::scalar::Real;

pub const DEFAULT_QUADRATURE_POINTS: usize = 8192;

/// Piecewise-linear density sampled on a strictly increasing grid.
#[derive(Clone, Debug, PartialEq)]
pub struct Tabulated<F> {
    lambda: Vec<F>,
    value: Vec<F>,
}

impl<F: Real> Tabulated<F> {
    pub fn nodes(&self) -> impl Iterator<Item = (F, F)> + '_ {
        self.lambda.iter().copied().zip(self.value.iter().copied())
    }

    fn eval(&self, x: F) -> F {
        let n = self.lambda.len();
        if x < self.lambda[0] || x > self.lambda[n - 1] {
            return F::zero();
        }
        let i = match self.lambda.partition_point(|&l| l <= x) {
            0 => 0,
            p => (p - 1).min(n - 2),
        };
        let (x0, x1) = (self.lambda[i], self.lambda[i + 1]);
        let t = (x - x0) / (x1 - x0);
        self.value[i] + (self.value[i + 1] - self.value[i]) * t
    }

    /// Exact integral of the interpolant (trapezoid on the nodes).
    fn integral(&self) -> F {
        self.lambda
            .windows(2)
            .zip(self.value.windows(2))
            .map(|(l, v)| (l[1] - l[0]) * (v[0] + v[1]) * F::of(0.5))
            .sum()
    }

    /// Smallest symmetric interval containing the support of the interpolant.
    fn support_halfwidth(&self) -> F {
        let n = self.lambda.len();
        let mut w = F::zero();
        for i in 0..n {
            if self.value[i] > F::zero() {
                let lo = if i > 0 { self.lambda[i - 1] } else { self.lambda[i] };
                let hi = if i + 1 < n { self.lambda[i + 1] } else { self.lambda[i] };
                w = w.max(lo.abs()).max(hi.abs());
            }
        }
        w
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum SpectrumShape<F> {
    /// Flat on the band.
    Rectangular,
    /// Raised-cosine roll-off with the given factor in `[0, 1]`; the band edge
    /// is where the roll-off reaches zero.
    RaisedCosine { rolloff: F },
    Tabulated(Tabulated<F>),
}

/// Power spectral density `f_H` with bandwidth `lambda_d < 1/2`, unit total power.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralDensity<F> {
    shape: SpectrumShape<F>,
    bandwidth: F,
    /// Divides the raw shape so that the quadrature of the density is one.
    scale: F,
    quadrature_points: usize,
}

impl<F: Real> SpectralDensity<F> {
    pub fn rectangular(bandwidth: F) -> Result<Self> {
        Self::with_shape(SpectrumShape::Rectangular, bandwidth)
    }

    pub fn raised_cosine(bandwidth: F, rolloff: F) -> Result<Self> {
        if !(rolloff >= F::zero() && rolloff <= F::one()) {
            return param(format!("raised-cosine roll-off {rolloff} outside [0, 1]"));
        }
        Self::with_shape(SpectrumShape::RaisedCosine { rolloff }, bandwidth)
    }

    /// Builds a density from `(lambda, value)` samples, linearly interpolated
    /// and renormalized to unit power. The bandwidth is the half-width of the
    /// interpolant's support.
    pub fn tabulated(points: &[(F, F)]) -> Result<Self> {
        if points.len() < 2 {
            return param("a tabulated spectrum needs at least two points");
        }
        let half = F::of(0.5);
        for w in points.windows(2) {
            if !(w[1].0 > w[0].0) {
                return param("tabulated frequencies must be strictly increasing");
            }
        }
        for &(l, v) in points {
            if !(l >= -half && l <= half) {
                return param(format!("tabulated frequency {l} outside [-1/2, 1/2]"));
            }
            if !(v >= F::zero()) || !v.is_finite() {
                return param(format!("tabulated density value {v} at {l} is negative or not finite"));
            }
        }
        let mut table = Tabulated {
            lambda: points.iter().map(|p| p.0).collect(),
            value: points.iter().map(|p| p.1).collect(),
        };
        let mass = table.integral();
        if !(mass > F::zero()) {
            return param("tabulated spectrum has zero total power");
        }
        for v in &mut table.value {
            *v = *v / mass;
        }
        let bandwidth = table.support_halfwidth();
        Self::with_shape(SpectrumShape::Tabulated(table), bandwidth)
    }

    /// Reads a two-column `lambda,value` CSV; a non-numeric first row is
    /// treated as a header.
    pub fn from_csv_reader<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .comment(Some(b'#'))
            .from_reader(reader);
        let mut points = Vec::new();
        for (row, rec) in rdr.records().enumerate() {
            let rec = rec?;
            if rec.len() != 2 {
                return Err(Error::Format(format!(
                    "spectrum CSV row {} has {} columns, expected 2",
                    row + 1,
                    rec.len()
                )));
            }
            let parsed = (rec[0].parse::<f64>(), rec[1].parse::<f64>());
            match parsed {
                (Ok(l), Ok(v)) => points.push((F::of(l), F::of(v))),
                _ if row == 0 => continue,
                _ => {
                    return Err(Error::Format(format!(
                        "spectrum CSV row {} is not numeric",
                        row + 1
                    )))
                }
            }
        }
        Self::tabulated(&points)
    }

    pub fn from_csv_path(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_csv_reader(std::fs::File::open(path)?)
    }

    fn with_shape(shape: SpectrumShape<F>, bandwidth: F) -> Result<Self> {
        let half = F::of(0.5);
        if !(bandwidth > F::zero() && bandwidth < half) {
            return param(format!("bandwidth {bandwidth} must lie in (0, 1/2)"));
        }
        let mut psd = Self {
            shape,
            bandwidth,
            scale: F::one(),
            quadrature_points: DEFAULT_QUADRATURE_POINTS,
        };
        psd.renormalize();
        Ok(psd)
    }

    /// Changes the Simpson grid size used by every integral of this density.
    pub fn with_quadrature_points(mut self, points: usize) -> Self {
        self.quadrature_points = points.max(16);
        self.renormalize();
        self
    }

    fn renormalize(&mut self) {
        self.scale = F::one();
        let mass: F = quadrature::integrate(&self.breakpoints(), self.quadrature_points, |x| self.value(x));
        self.scale = mass;
    }

    pub fn shape(&self) -> &SpectrumShape<F> {
        &self.shape
    }

    /// `lambda_D`.
    pub fn bandwidth(&self) -> F {
        self.bandwidth
    }

    pub fn quadrature_points(&self) -> usize {
        self.quadrature_points
    }

    /// Largest pilot spacing without aliasing, `floor(1 / (2 lambda_D))`.
    pub fn nyquist_spacing(&self) -> usize {
        let x = F::one() / (self.bandwidth + self.bandwidth);
        let snapped = x.round();
        let n = if (x - snapped).abs() <= F::epsilon() * F::of(64.0) * x {
            snapped
        } else {
            x.floor()
        };
        n.to_usize().unwrap_or(usize::MAX)
    }

    /// `f_H(lambda)`. Zero outside the band; a rectangular density takes half
    /// its in-band value exactly at the band edge.
    pub fn value(&self, lambda: F) -> F {
        let a = lambda.abs();
        let bw = self.bandwidth;
        if a > bw {
            return F::zero();
        }
        let raw = match &self.shape {
            SpectrumShape::Rectangular => rect_value(a, bw),
            SpectrumShape::RaisedCosine { rolloff } => {
                if rolloff.is_zero() {
                    rect_value(a, bw)
                } else {
                    let corner = bw / (F::one() + *rolloff);
                    let knee = corner * (F::one() - *rolloff);
                    let height = F::one() / (corner + corner);
                    if a <= knee {
                        height
                    } else {
                        let phase = F::PI() * (a - knee) / (F::of(2.0) * *rolloff * corner);
                        height * F::of(0.5) * (F::one() + phase.cos())
                    }
                }
            }
            SpectrumShape::Tabulated(t) => t.eval(lambda),
        };
        raw / self.scale
    }

    /// `f_H` extended periodically with period one.
    pub fn periodized_value(&self, u: F) -> F {
        let wrapped = u - (u + F::of(0.5)).floor();
        self.value(wrapped)
    }

    /// Points in `[-lambda_D, lambda_D]` where the density may fail to be smooth.
    pub fn breakpoints(&self) -> Vec<F> {
        let bw = self.bandwidth;
        let mut b = vec![-bw, bw];
        match &self.shape {
            SpectrumShape::Rectangular => {}
            SpectrumShape::RaisedCosine { rolloff } => {
                let knee = bw / (F::one() + *rolloff) * (F::one() - *rolloff);
                b.extend([-knee, knee]);
            }
            SpectrumShape::Tabulated(t) => b.extend(t.lambda.iter().copied()),
        }
        normalize_breaks(&b, -bw, bw)
    }

    /// Simpson nodes over the band paired with `weight * f_H(node)`.
    fn weighted_nodes(&self) -> Vec<(F, F)> {
        quadrature::simpson_rule(&self.breakpoints(), self.quadrature_points)
            .into_iter()
            .map(|(x, w)| (x, w * self.value(x)))
            .collect()
    }

    /// `E[H_{k+m} H_k^*] = integral of exp(i 2 pi m lambda) f_H(lambda)`.
    pub fn autocovariance(&self, m: i64) -> Complex<F> {
        autocov_from_nodes(&self.weighted_nodes(), m)
    }

    /// Autocovariances for lags `0..=max_lag`; negative lags follow by conjugation.
    pub fn autocovariance_table(&self, max_lag: usize) -> Vec<Complex<F>> {
        let nodes = self.weighted_nodes();
        (0..=max_lag as i64).map(|m| autocov_from_nodes(&nodes, m)).collect()
    }

    /// `f_{H_L,l}(lambda)`: the cross spectrum between the `L`-fold undersampled
    /// process and its copy delayed by `offset` samples.
    pub fn folded_spectrum(&self, period: usize, offset: usize, lambda: F) -> Result<Complex<F>> {
        if period == 0 {
            return param("folding period must be at least 1");
        }
        if offset >= period {
            return param(format!("offset {offset} must be below the period {period}"));
        }
        let half = F::of(0.5);
        if !(lambda >= -half && lambda <= half) {
            return param(format!("frequency {lambda} outside [-1/2, 1/2]"));
        }
        Ok(self.folded_unchecked(period, offset, lambda))
    }

    pub(crate) fn folded_unchecked(&self, period: usize, offset: usize, lambda: F) -> Complex<F> {
        let l = F::from_count(period);
        let two_pi_off = F::TAU() * F::from_count(offset);
        let mut acc = Complex::zero();
        for j in 0..period {
            let u = (lambda - F::from_count(j)) / l;
            let f = self.periodized_value(u);
            if f > F::zero() {
                acc = acc + Complex::from_polar(f, two_pi_off * u);
            }
        }
        acc / l
    }

    /// Frequencies in `[-1/2, 1/2]` where the `period`-folded spectrum may jump.
    pub fn folded_breakpoints(&self, period: usize) -> Vec<F> {
        let half = F::of(0.5);
        let l = F::from_count(period);
        let mut out = vec![-half, half];
        for b in self.breakpoints() {
            for j in 0..period {
                // lambda = L (b + n) + j must land in [-1/2, 1/2]
                let jf = F::from_count(j);
                let lo = ((-half - jf) / l - b).floor().to_i64().unwrap_or(0) - 1;
                let hi = ((half - jf) / l - b).ceil().to_i64().unwrap_or(0) + 1;
                for n in lo..=hi {
                    let x = l * (b + F::of(n as f64)) + jf;
                    if x >= -half && x <= half {
                        out.push(x);
                    }
                }
            }
        }
        normalize_breaks(&out, -half, half)
    }
}

fn rect_value<F: Real>(a: F, bw: F) -> F {
    let h = F::one() / (bw + bw);
    if a < bw {
        h
    } else {
        h * F::of(0.5)
    }
}

fn autocov_from_nodes<F: Real>(nodes: &[(F, F)], m: i64) -> Complex<F> {
    let mf = F::of(m as f64);
    nodes.iter().fold(Complex::zero(), |acc, &(x, wf)| {
        acc + Complex::from_polar(wf, F::TAU() * mf * x)
    })
}
