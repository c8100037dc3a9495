//! Fixtures shared by the benchmarks.

use comb_core::sampling::{rng_for, CombSampler};
use comb_core::{CombSpec, LocatedPoint};

/// `count` deterministic pairs of comb points within `cap` of the basepoint.
pub fn sample_pairs(spec: &CombSpec, cap: f64, count: usize, seed: u64) -> Vec<(LocatedPoint, LocatedPoint)> {
    let sampler = CombSampler::new(spec, cap);
    (0..count as u64)
        .map(|i| {
            let mut rng = rng_for(seed, i);
            (sampler.sample(&mut rng), sampler.sample(&mut rng))
        })
        .collect()
}

/// `count` deterministic quadruples of comb points within `cap`.
pub fn sample_quadruples(spec: &CombSpec, cap: f64, count: usize, seed: u64) -> Vec<[LocatedPoint; 4]> {
    let sampler = CombSampler::new(spec, cap);
    (0..count as u64)
        .map(|i| {
            let mut rng = rng_for(seed, i);
            [0; 4].map(|_| sampler.sample(&mut rng))
        })
        .collect()
}
