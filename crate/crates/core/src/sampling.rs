//! Seeded low-discrepancy sample plans.
//!
//! Points are Halton points (prime bases, one per coordinate) shifted by a
//! seeded random offset modulo 1, then mapped into the margin-shrunk chart
//! domain.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::geometry::ChartPatch;

const PRIMES: [u64; 8] = [2, 3, 5, 7, 11, 13, 17, 19];

/// Radical inverse of `index` in the given base.
pub fn radical_inverse(mut index: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let mut scale = inv;
    let mut out = 0.0;
    while index > 0 {
        out += (index % base) as f64 * scale;
        index /= base;
        scale *= inv;
    }
    out
}

/// The `index`-th Halton point in `dim` dimensions (`dim ≤ 8`).
pub fn halton(index: u64, dim: usize) -> Vec<f64> {
    PRIMES[..dim].iter().map(|&b| radical_inverse(index, b)).collect()
}

/// Ordered list of interior sample points for a chart.
#[derive(Debug, Clone, PartialEq)]
pub struct Plan {
    pub seed: u64,
    pub points: Vec<Vec<f64>>,
}

impl Plan {
    /// `count` interior points of `patch`, reproducible from `seed`.
    pub fn halton(patch: &ChartPatch, count: usize, seed: u64) -> Plan {
        let dim = patch.dim();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let shift: Vec<f64> = (0..dim).map(|_| rng.random::<f64>()).collect();
        let margin = patch.margin();
        let points = (1..=count as u64)
            .map(|i| {
                let unit: Vec<f64> = halton(i, dim)
                    .iter()
                    .zip(&shift)
                    .map(|(h, s)| (h + s).fract())
                    .collect();
                patch.domain().map_unit(&unit, margin)
            })
            .collect();
        Plan { seed, points }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}
