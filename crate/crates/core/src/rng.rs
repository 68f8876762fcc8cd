//! Counter-based random streams.
//!
//! Every random quantity in a simulation is drawn from its own ChaCha stream
//! addressed by `(master seed, purpose, trial, a, b)`, so results do not depend
//! on the order in which trials or antenna streams are evaluated.

use num_complex::Complex;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
#[repr(u64)]
pub enum Purpose {
    Fading = 1,
    Noise = 2,
    Input = 3,
    Codebook = 4,
    Message = 5,
    Matrix = 6,
}

fn splitmix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// RNG for one addressed stream.
pub fn stream(seed: u64, purpose: Purpose, trial: u64, a: u64, b: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(splitmix(seed ^ splitmix(purpose as u64)));
    let id = splitmix(splitmix(splitmix(trial) ^ a.rotate_left(21)) ^ b.rotate_left(42));
    rng.set_stream(id);
    rng
}

/// Circularly-symmetric complex Gaussian with unit variance, `CN(0, 1)`.
#[inline]
pub fn complex_normal<F: Real, R: Rng + ?Sized>(rng: &mut R) -> Complex<F> {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex::new(F::of(re * std::f64::consts::FRAC_1_SQRT_2), F::of(im * std::f64::consts::FRAC_1_SQRT_2))
}
