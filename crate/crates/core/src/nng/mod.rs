//! Exact nearest-neighbor graphs and the largest nearest-neighbor distance.
//!
//! The graph is directed: each point links to its closest other point, with
//! ties going to the smallest index. Distances are compared squared and the
//! square root is taken once per point at the end; the brute-force and k-d
//! tree engines share [`dist2`], so their outputs agree bit for bit.

mod kdtree;

pub use kdtree::KdTree;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::process::PointCloud;

/// Squared Euclidean distance, accumulated in coordinate order.
#[inline]
pub fn dist2(a: &[f64], b: &[f64]) -> f64 {
    let mut s = 0.0;
    for (x, y) in a.iter().zip(b) {
        let t = x - y;
        s += t * t;
    }
    s
}

/// Per-point nearest neighbor and the largest nearest-neighbor distance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NngResult {
    pub nn_index: Vec<usize>,
    pub nn_dist: Vec<f64>,
    pub d_n: f64,
}

impl NngResult {
    fn from_parts(nn_index: Vec<usize>, nn_dist: Vec<f64>) -> Self {
        let d_n = nn_dist.iter().copied().fold(0.0, f64::max);
        NngResult {
            nn_index,
            nn_dist,
            d_n,
        }
    }

    /// Index of a point attaining `d_n` (the smallest such index).
    pub fn argmax(&self) -> usize {
        self.nn_dist
            .iter()
            .position(|&x| x == self.d_n)
            .unwrap_or(0)
    }
}

fn check_len(cloud: &PointCloud) -> Result<()> {
    if cloud.len() < 2 {
        return Err(Error::TooFewPoints(cloud.len()));
    }
    Ok(())
}

/// All-pairs reference construction, O(n²).
pub fn build_nng_brute(cloud: &PointCloud) -> Result<NngResult> {
    check_len(cloud)?;
    let n = cloud.len();
    let mut index = Vec::with_capacity(n);
    let mut dist = Vec::with_capacity(n);
    for i in 0..n {
        let p = cloud.point(i);
        let mut best = (usize::MAX, f64::INFINITY);
        for j in 0..n {
            if j == i {
                continue;
            }
            let d2 = dist2(p, cloud.point(j));
            if d2 < best.1 {
                best = (j, d2);
            }
        }
        index.push(best.0);
        dist.push(best.1.sqrt());
    }
    Ok(NngResult::from_parts(index, dist))
}

/// k-d tree construction; output identical to [`build_nng_brute`].
/// Queries run in parallel on the rayon pool.
pub fn build_nng_fast(cloud: &PointCloud) -> Result<NngResult> {
    check_len(cloud)?;
    let tree = KdTree::build(cloud.coords(), cloud.dim().as_usize());
    let (index, dist) = tree.all_nearest();
    Ok(NngResult::from_parts(index, dist))
}

/// The largest nearest-neighbor distance `d_n`.
pub fn lnnd(cloud: &PointCloud) -> Result<f64> {
    Ok(build_nng_fast(cloud)?.d_n)
}

/// Annulus `inner ≤ ‖x‖ < outer` about the origin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnnulusSpec {
    inner: f64,
    outer: f64,
}

impl AnnulusSpec {
    pub fn new(inner: f64, outer: f64) -> Result<Self> {
        if !(inner >= 0.0 && inner < outer) {
            return Err(Error::domain(
                "annulus",
                format!("need 0 <= inner < outer, got inner={inner}, outer={outer}"),
            ));
        }
        Ok(AnnulusSpec { inner, outer })
    }

    pub fn inner(&self) -> f64 {
        self.inner
    }

    pub fn outer(&self) -> f64 {
        self.outer
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        let r2 = p.iter().map(|x| x * x).sum::<f64>();
        r2 >= self.inner * self.inner && r2 < self.outer * self.outer
    }
}

/// Largest distance from a point in the annulus to its nearest neighbor in
/// the whole cloud; `None` when the annulus holds no point.
pub fn lnnd_restricted(cloud: &PointCloud, annulus: &AnnulusSpec) -> Result<Option<f64>> {
    check_len(cloud)?;
    let members: Vec<usize> = (0..cloud.len())
        .filter(|&i| annulus.contains(cloud.point(i)))
        .collect();
    if members.is_empty() {
        return Ok(None);
    }
    let tree = KdTree::build(cloud.coords(), cloud.dim().as_usize());
    let worst = members
        .iter()
        .map(|&i| tree.nearest_excluding(cloud.point(i), i).expect("two points").1)
        .fold(0.0, f64::max);
    Ok(Some(worst.sqrt()))
}

/// True iff no point lies in `B(center, r_outer) \ B(center, r_inner)`.
pub fn vacancy_event(cloud: &PointCloud, center: &[f64], r_inner: f64, r_outer: f64) -> Result<bool> {
    if center.len() != cloud.dim().as_usize() {
        return Err(Error::domain("center", "dimension differs from the cloud's"));
    }
    let (i2, o2) = (r_inner * r_inner, r_outer * r_outer);
    Ok(!cloud.points().any(|p| {
        let d2 = dist2(center, p);
        d2 >= i2 && d2 < o2
    }))
}
