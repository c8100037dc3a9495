//! Sampling estimate of the four-point hyperbolicity constant.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hyperbolic::{polar_dist, PolarPoint};
use crate::path_metric::PathMetric;
use crate::sampling::{rng_for, CombSampler};

/// Width of a histogram bucket.
pub const HISTOGRAM_BUCKET: f64 = 0.05;

/// Smallest `δ` for which `(x|z)_w ≥ min((x|y)_w, (y|z)_w) - δ` holds for every
/// relabeling of `x, y, z` with basepoint `w`.
pub fn four_point_defect<P, F>(x: &P, y: &P, z: &P, w: &P, metric: F) -> Result<f64>
where
    F: Fn(&P, &P) -> Result<f64>,
{
    let (xw, yw, zw) = (metric(x, w)?, metric(y, w)?, metric(z, w)?);
    let (xy, yz, xz) = (metric(x, y)?, metric(y, z)?, metric(x, z)?);
    let pxy = 0.5 * (xw + yw - xy);
    let pyz = 0.5 * (yw + zw - yz);
    let pxz = 0.5 * (xw + zw - xz);
    let defect = (pxy.min(pyz) - pxz).max(pxy.min(pxz) - pyz).max(pyz.min(pxz) - pxy);
    if defect.is_nan() {
        return Err(Error::BrokenMetric { value: defect });
    }
    Ok(defect.max(0.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramBin {
    pub lo: f64,
    pub hi: f64,
    pub count: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaEstimate {
    pub delta_max: f64,
    pub sample_count: usize,
    pub radius_cap: f64,
    pub seed: u64,
    /// Portal spacing of the path metric; absent for plane-only runs.
    pub epsilon: Option<f64>,
    pub histogram: Vec<HistogramBin>,
    /// Index of the first quadruple attaining `delta_max`.
    pub worst_index: usize,
    /// Positions of that quadruple in the plane.
    pub worst_positions: Vec<PolarPoint>,
}

impl DeltaEstimate {
    pub fn histogram_csv(&self) -> String {
        let mut out = String::from("bucket_lo,bucket_hi,count\n");
        for b in &self.histogram {
            out.push_str(&format!("{},{},{}\n", b.lo, b.hi, b.count));
        }
        out
    }
}

fn summarize(defects: &[f64]) -> (f64, usize, Vec<HistogramBin>) {
    let mut worst = 0;
    for (i, &d) in defects.iter().enumerate() {
        if d > defects[worst] {
            worst = i;
        }
    }
    let mut buckets: BTreeMap<u64, u64> = BTreeMap::new();
    for &d in defects {
        *buckets.entry((d / HISTOGRAM_BUCKET).floor() as u64).or_default() += 1;
    }
    let histogram = buckets
        .into_iter()
        .map(|(k, count)| HistogramBin {
            lo: k as f64 * HISTOGRAM_BUCKET,
            hi: (k + 1) as f64 * HISTOGRAM_BUCKET,
            count,
        })
        .collect();
    (defects.get(worst).copied().unwrap_or(0.0), worst, histogram)
}

/// Samples `sample_count` quadruples from the comb within `radius_cap` of the
/// basepoint and reports the largest four-point defect under the path metric.
pub fn estimate_delta(metric: &PathMetric<'_>, sample_count: usize, radius_cap: f64, seed: u64) -> Result<DeltaEstimate> {
    if sample_count == 0 {
        return Err(Error::InvalidParameter("sample_count must be at least 1".into()));
    }
    let sampler = CombSampler::new(metric.spec(), radius_cap);
    let draw = |i: usize| {
        let mut rng = rng_for(seed, i as u64);
        [0; 4].map(|_| sampler.sample(&mut rng))
    };
    let defects: Vec<f64> = (0..sample_count)
        .into_par_iter()
        .map(|i| {
            let [x, y, z, w] = draw(i);
            four_point_defect(&x, &y, &z, &w, |a, b| metric.dist(a, b))
        })
        .collect::<Result<_>>()?;
    let (delta_max, worst_index, histogram) = summarize(&defects);
    Ok(DeltaEstimate {
        delta_max,
        sample_count,
        radius_cap,
        seed,
        epsilon: Some(metric.epsilon()),
        histogram,
        worst_index,
        worst_positions: draw(worst_index).iter().map(|p| metric.spec().position(p)).collect::<Result<_>>()?,
    })
}

/// Control run in the hyperbolic plane: quadruples uniform in area in the
/// ball of radius `radius` about the origin.
pub fn estimate_plane_delta(sample_count: usize, radius: f64, seed: u64) -> Result<DeltaEstimate> {
    use rand::Rng;
    use std::f64::consts::TAU;
    if sample_count == 0 {
        return Err(Error::InvalidParameter("sample_count must be at least 1".into()));
    }
    let draw = |i: usize| {
        let mut rng = rng_for(seed, i as u64);
        [0; 4].map(|_| {
            let rho = 2.0 * (rng.gen::<f64>().sqrt() * (0.5 * radius).sinh()).asinh();
            PolarPoint::new_unchecked(rho, rng.gen::<f64>() * TAU)
        })
    };
    let defects: Vec<f64> = (0..sample_count)
        .into_par_iter()
        .map(|i| {
            let [x, y, z, w] = draw(i);
            four_point_defect(&x, &y, &z, &w, |a, b| Ok(polar_dist(a, b)))
        })
        .collect::<Result<_>>()?;
    let (delta_max, worst_index, histogram) = summarize(&defects);
    Ok(DeltaEstimate {
        delta_max,
        sample_count,
        radius_cap: radius,
        seed,
        epsilon: None,
        histogram,
        worst_index,
        worst_positions: draw(worst_index).to_vec(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::comb::CombSpec;

    fn plane(a: &PolarPoint, b: &PolarPoint) -> Result<f64> {
        Ok(polar_dist(a, b))
    }

    fn p(rho: f64, phi: f64) -> PolarPoint {
        PolarPoint::new(rho, phi).unwrap()
    }

    /// Independent route: half the gap between the two largest pair sums.
    fn sums_oracle(d: [[f64; 4]; 4]) -> f64 {
        let mut s = [d[0][1] + d[2][3], d[0][2] + d[1][3], d[0][3] + d[1][2]];
        s.sort_by(f64::total_cmp);
        0.5 * (s[2] - s[1])
    }

    #[test]
    fn degenerate_quadruples() {
        let a = p(1.0, 0.3);
        let b = p(2.0, 1.3);
        assert_eq!(four_point_defect(&a, &a, &a, &b, plane).unwrap(), 0.0);
        let line: Vec<_> = [0.0, 1.0, 2.5, 4.0].iter().map(|&r| p(r, 0.7)).collect();
        let d = four_point_defect(&line[1], &line[2], &line[3], &line[0], plane).unwrap();
        assert!(d < 1e-12);
    }

    #[test]
    fn matches_pair_sum_oracle() {
        use rand::Rng;
        let mut rng = rng_for(3, 0);
        for _ in 0..2000 {
            let pts: Vec<_> = (0..4).map(|_| p(rng.gen::<f64>() * 10.0, rng.gen::<f64>() * 6.28)).collect();
            let mut d = [[0.0; 4]; 4];
            for i in 0..4 {
                for j in 0..4 {
                    d[i][j] = polar_dist(&pts[i], &pts[j]);
                }
            }
            let defect = four_point_defect(&pts[0], &pts[1], &pts[2], &pts[3], plane).unwrap();
            assert!((defect - sums_oracle(d)).abs() < 1e-9);
            assert!(defect <= 1.0);
        }
    }

    #[test]
    fn single_degenerate_sample() {
        // One sector, no hairs, radius cap 0: every sample is the basepoint.
        let spec = CombSpec::build(1, 0.0).unwrap();
        let metric = PathMetric::new(&spec, 0.5).unwrap();
        let est = estimate_delta(&metric, 1, 0.0, 9).unwrap();
        assert_eq!(est.delta_max, 0.0);
        assert_eq!(est.histogram, vec![HistogramBin { lo: 0.0, hi: HISTOGRAM_BUCKET, count: 1 }]);
    }

    #[test]
    fn estimates_are_deterministic() {
        let spec = CombSpec::build(3, 4.0).unwrap();
        let metric = PathMetric::new(&spec, 0.2).unwrap();
        let a = estimate_delta(&metric, 500, 10.0, 42).unwrap();
        let b = estimate_delta(&metric, 500, 10.0, 42).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.histogram.iter().map(|b| b.count).sum::<u64>(), 500);
        assert!(a.histogram_csv().starts_with("bucket_lo,bucket_hi,count\n"));
        assert!(estimate_delta(&metric, 0, 10.0, 42).is_err());
    }
}
