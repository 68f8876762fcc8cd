//! High-SNR pre-log reference values: the nearest-neighbour / pilot-aided
//! achievable pre-log and the capacity pre-log results it is compared with.
//!
//! The calculator is generic over [`PrelogScalar`], so it can run in exact
//! rational arithmetic (`Rational64`) as well as in floating point.

use std::fmt::Debug;

use num_rational::Ratio;
use num_traits::{Num, ToPrimitive};
use serde::Serialize;

use crate::error::{param, Result};

/// Scalar usable by the pre-log calculator.
pub trait PrelogScalar: Clone + PartialOrd + Num + Debug {
    /// `floor(self)`; floating-point values within a few ulps of an integer
    /// snap to it.
    fn floor_to_i64(&self) -> i64;
    fn from_i64(v: i64) -> Self;
    fn to_f64_value(&self) -> f64;
}

macro_rules! float_prelog_scalar {
    ($t:ty) => {
        impl PrelogScalar for $t {
            fn floor_to_i64(&self) -> i64 {
                let snapped = self.round();
                if (self - snapped).abs() <= <$t>::EPSILON * 64.0 * self.abs().max(1.0) {
                    snapped as i64
                } else {
                    self.floor() as i64
                }
            }
            fn from_i64(v: i64) -> Self {
                v as $t
            }
            fn to_f64_value(&self) -> f64 {
                *self as f64
            }
        }
    };
}

float_prelog_scalar!(f32);
float_prelog_scalar!(f64);

impl PrelogScalar for Ratio<i64> {
    fn floor_to_i64(&self) -> i64 {
        self.floor().to_integer()
    }
    fn from_i64(v: i64) -> Self {
        Ratio::from_integer(v)
    }
    fn to_f64_value(&self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PrelogReference<S> {
    pub n_t: usize,
    pub n_r: usize,
    /// `min(n_t, n_r)`.
    pub n_min: usize,
    /// `lambda_D`.
    pub bandwidth: S,
    /// Largest integer with `L* <= 1/(2 lambda_D)`.
    pub l_star: i64,
    /// Capacity pre-log of the SISO/MISO channel, `1 - 2 lambda_D`.
    pub miso_capacity: S,
    /// Best known MIMO capacity pre-log lower bound, `n (1 - 2 n lambda_D)`.
    pub mimo_lower_bound: S,
    /// Achievable pre-log `n (1 - n / L*)`.
    pub achievable: S,
    /// Antenna count maximizing the achievable pre-log over the reals, `L*/2`.
    pub optimal_antennas: S,
    /// The maximum itself, `L*/4`.
    pub optimal_prelog: S,
    /// `1/(8 lambda_D)`, which `L*/4` never exceeds.
    pub prelog_cap: S,
    /// Best integer antenna count and its pre-log.
    pub best_integer_antennas: i64,
    pub best_integer_prelog: S,
}

impl<S: PrelogScalar> PrelogReference<S> {
    pub fn to_f64(&self) -> PrelogReference<f64> {
        PrelogReference {
            n_t: self.n_t,
            n_r: self.n_r,
            n_min: self.n_min,
            bandwidth: self.bandwidth.to_f64_value(),
            l_star: self.l_star,
            miso_capacity: self.miso_capacity.to_f64_value(),
            mimo_lower_bound: self.mimo_lower_bound.to_f64_value(),
            achievable: self.achievable.to_f64_value(),
            optimal_antennas: self.optimal_antennas.to_f64_value(),
            optimal_prelog: self.optimal_prelog.to_f64_value(),
            prelog_cap: self.prelog_cap.to_f64_value(),
            best_integer_antennas: self.best_integer_antennas,
            best_integer_prelog: self.best_integer_prelog.to_f64_value(),
        }
    }
}

/// `n (1 - n / L)`: the achievable pre-log with `n = min(n_t, n_r)` antennas
/// and pilot spacing `L`.
pub fn prelog_for_spacing<S: PrelogScalar>(n: i64, spacing: i64) -> S {
    let n_s = S::from_i64(n);
    n_s.clone() * (S::one() - n_s / S::from_i64(spacing))
}

/// Achievable pre-log with `L = L*` and the reference constants for bandwidth `lambda_d`.
pub fn theorem1_bound<S: PrelogScalar>(n_t: usize, n_r: usize, lambda_d: S) -> Result<PrelogReference<S>> {
    let two = S::from_i64(2);
    if !(lambda_d > S::zero() && lambda_d.clone() * two.clone() < S::one()) {
        return param(format!("bandwidth {lambda_d:?} must lie in (0, 1/2)"));
    }
    if n_t == 0 || n_r == 0 {
        return param("antenna counts must be at least 1");
    }
    let n_min = n_t.min(n_r);
    let n = S::from_i64(n_min as i64);
    let two_lambda = lambda_d.clone() * two.clone();
    let l_star = (S::one() / two_lambda.clone()).floor_to_i64();
    let l_star_s = S::from_i64(l_star);

    let (best_integer_antennas, best_integer_prelog) = (1..=l_star.max(1))
        .map(|m| (m, prelog_for_spacing::<S>(m, l_star)))
        .fold((0, S::zero() - S::one()), |best, cand| if cand.1 > best.1 { cand } else { best });

    Ok(PrelogReference {
        n_t,
        n_r,
        n_min,
        bandwidth: lambda_d.clone(),
        l_star,
        miso_capacity: S::one() - two_lambda.clone(),
        mimo_lower_bound: n.clone() * (S::one() - n.clone() * two_lambda),
        achievable: prelog_for_spacing(n_min as i64, l_star),
        optimal_antennas: l_star_s.clone() / two.clone(),
        optimal_prelog: l_star_s / (two.clone() * two.clone()),
        prelog_cap: S::one() / (S::from_i64(8) * lambda_d),
        best_integer_antennas,
        best_integer_prelog,
    })
}
