//! Piecewise composite Simpson integration.
//!
//! Integrands here are smooth between a known set of breakpoints (band edges,
//! roll-off knees, aliasing edges) and may jump across them. Each piece is
//! integrated separately and its end nodes are nudged inward so that the
//! one-sided limit is used at a jump.

use std::ops::{Add, Mul};

use num_traits::Zero;

use crate::scalar::Real;

/// Sorted, deduplicated breakpoints clipped to `[lo, hi]`, always containing both ends.
pub(crate) fn normalize_breaks<F: Real>(raw: &[F], lo: F, hi: F) -> Vec<F> {
    let tol = (hi - lo) * F::epsilon() * F::of(64.0);
    let mut pts: Vec<F> = raw
        .iter()
        .copied()
        .filter(|b| b.is_finite() && *b > lo && *b < hi)
        .collect();
    pts.push(lo);
    pts.push(hi);
    pts.sort_by(|a, b| a.partial_cmp(b).expect("finite breakpoints"));
    pts.dedup_by(|b, a| (*b - *a).abs() <= tol);
    if let Some(last) = pts.last_mut() {
        *last = hi;
    }
    pts
}

/// Nodes and weights of a piecewise Simpson rule over `breaks` using roughly
/// `points` nodes in total. Every piece gets at least two panels.
pub(crate) fn simpson_rule<F: Real>(breaks: &[F], points: usize) -> Vec<(F, F)> {
    assert!(breaks.len() >= 2, "need at least one interval");
    let total = *breaks.last().unwrap() - breaks[0];
    let nudge_rel = F::epsilon().sqrt() * F::of(0.01);
    let three = F::of(3.0);
    let mut rule = Vec::with_capacity(points + 3 * breaks.len());
    for w in breaks.windows(2) {
        let (a, b) = (w[0], w[1]);
        let width = b - a;
        if width <= F::zero() {
            continue;
        }
        let share = (F::from_count(points) * width / total).to_usize().unwrap_or(0);
        let mut panels = share.max(2);
        if panels % 2 == 1 {
            panels += 1;
        }
        let h = width / F::from_count(panels);
        let nudge = width * nudge_rel;
        for i in 0..=panels {
            let x = if i == 0 {
                a + nudge
            } else if i == panels {
                b - nudge
            } else {
                a + h * F::from_count(i)
            };
            let c = if i == 0 || i == panels {
                F::one()
            } else if i % 2 == 1 {
                F::of(4.0)
            } else {
                F::of(2.0)
            };
            rule.push((x, c * h / three));
        }
    }
    rule
}

pub(crate) fn integrate<F, T, G>(breaks: &[F], points: usize, f: G) -> T
where
    F: Real,
    T: Copy + Zero + Add<Output = T> + Mul<F, Output = T>,
    G: Fn(F) -> T,
{
    simpson_rule(breaks, points)
        .into_iter()
        .fold(T::zero(), |acc, (x, w)| acc + f(x) * w)
}
