use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::asymptotics::{big_radius_ln, covering_count_bound, small_radius_ln, FormulaParams};
use crate::error::{Error, Result};
use crate::nng::KdTree;
use crate::process::uniform;
use crate::rng::{Role, SeedRecord};

const MAX_CENTERS: f64 = 5e7;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoveringResult {
    pub m: u32,
    /// `R_{ν(m+1)}(c)`.
    pub domain_radius: f64,
    /// `r_{ν(m)}(ε)`.
    pub ball_radius: f64,
    /// Row-major centers.
    pub centers: Vec<f64>,
    pub count: usize,
    pub bound: f64,
    pub probes: usize,
    pub uncovered: usize,
}

impl CoveringResult {
    pub fn ratio(&self) -> f64 {
        self.count as f64 / self.bound
    }
}

/// Lattice covering of `B(0, R_{ν(m+1)}(c))` by balls of radius
/// `r_{ν(m)}(ε)`, with `ν(m) = a^m`, checked against `probes` uniform points
/// of the domain.
///
/// Centers are the points of the cubic lattice of spacing `2r/√d` within
/// distance `R + r` of the origin; every point of the domain is then within
/// `r` of a center. A single center at the origin is used when `r ≥ R`.
pub fn covering_construction(m: u32, params: &FormulaParams, probes: usize, seed: SeedRecord) -> Result<CoveringResult> {
    if m < 2 {
        return Err(Error::domain("m", format!("need m >= 2, got {m}")));
    }
    if !(params.a > 1.0) {
        return Err(Error::domain("a", format!("subsequence base must exceed 1, got {}", params.a)));
    }
    let d = params.d;
    let k = d.as_usize();
    let ln_a = params.a.ln();
    let big = big_radius_ln((m as f64 + 1.0) * ln_a, params.c, d, params.constant)?;
    let r = small_radius_ln(m as f64 * ln_a, params.eps)?;
    if !(r > 0.0) {
        return Err(Error::domain("eps", "ball radius must be positive"));
    }

    let mut centers = Vec::new();
    if r >= big {
        centers.extend(std::iter::repeat_n(0.0, k));
    } else {
        let h = 2.0 * r / d.as_f64().sqrt();
        let reach = big + r;
        let half = (reach / h).ceil() as i64;
        let estimate = (2.0 * half as f64 + 1.0).powi(k as i32);
        if estimate > MAX_CENTERS * 4.0 {
            return Err(Error::domain("covering", format!("{estimate} lattice points exceed the limit")));
        }
        let mut idx = vec![-half; k];
        'outer: loop {
            let norm2: f64 = idx.iter().map(|&i| (i as f64 * h).powi(2)).sum();
            if norm2 <= reach * reach {
                centers.extend(idx.iter().map(|&i| i as f64 * h));
            }
            let mut j = k;
            loop {
                if j == 0 {
                    break 'outer;
                }
                j -= 1;
                idx[j] += 1;
                if idx[j] <= half {
                    break;
                }
                idx[j] = -half;
            }
        }
    }

    let tree = KdTree::build(&centers, k);
    let mut rng = seed.stream(Role::Probes, m as u64);
    let mut uncovered = 0;
    let mut p = vec![0.0; k];
    for _ in 0..probes {
        // Uniform in the ball: Gaussian direction, radius U^{1/d}.
        let norm = loop {
            for v in p.iter_mut() {
                *v = StandardNormal.sample(&mut rng);
            }
            let s = p.iter().map(|v| v * v).sum::<f64>().sqrt();
            if s > 0.0 {
                break s;
            }
        };
        let scale = big * uniform(&mut rng).powf(1.0 / k as f64) / norm;
        p.iter_mut().for_each(|v| *v *= scale);
        match tree.nearest_excluding(&p, usize::MAX) {
            Some((_, d2)) if d2 <= r * r => {}
            _ => uncovered += 1,
        }
    }
    let count = centers.len() / k;
    Ok(CoveringResult {
        m,
        domain_radius: big,
        ball_radius: r,
        centers,
        count,
        bound: covering_count_bound(m as f64, d)?,
        probes,
        uncovered,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Dimension;

    fn params() -> FormulaParams {
        let mut p = FormulaParams::new(Dimension::new(2).unwrap());
        p.c = 2.5;
        p.eps = 0.1;
        p
    }

    #[test]
    fn covers_with_probes() {
        let res = covering_construction(20, &params(), 100_000, SeedRecord::new(1, 0)).unwrap();
        assert_eq!(res.uncovered, 0);
        assert!(res.count > 1);
    }

    #[test]
    fn ratio_stays_bounded() {
        let ratios: Vec<f64> = (10..=25)
            .map(|m| covering_construction(m, &params(), 0, SeedRecord::new(1, 0)).unwrap().ratio())
            .collect();
        let (lo, hi) = ratios.iter().fold((f64::MAX, 0.0f64), |(a, b), &r| (a.min(r), b.max(r)));
        assert!(hi / lo < 3.0, "{ratios:?}");
    }

    #[test]
    fn large_ball_single_center() {
        let mut p = params();
        p.eps = 100.0;
        let res = covering_construction(4, &p, 1000, SeedRecord::new(1, 0)).unwrap();
        assert_eq!(res.count, 1);
        assert_eq!(res.uncovered, 0);
    }
}
