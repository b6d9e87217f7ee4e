use rayon::prelude::*;

use super::dist2;

const LEAF_SIZE: usize = 8;

#[derive(Debug, Clone, Copy)]
enum Node {
    Leaf { start: u32, end: u32 },
    Split { axis: u32, value: f64, right: u32 },
}

/// Static k-d tree over a row-major point set.
///
/// Points are copied in tree order; leaves hold up to `LEAF_SIZE` points.
/// Splits are at the median point of the widest axis, so every point of
/// the left child has coordinate `≤ value` and every point of the right
/// child `≥ value`, even with duplicates.
pub struct KdTree {
    dim: usize,
    points: Vec<f64>,
    ids: Vec<u32>,
    nodes: Vec<Node>,
}

impl KdTree {
    pub fn build(coords: &[f64], dim: usize) -> KdTree {
        let n = coords.len() / dim;
        assert!(n <= u32::MAX as usize, "too many points for the k-d tree");
        let mut ids: Vec<u32> = (0..n as u32).collect();
        let mut nodes = Vec::with_capacity(2 * n / LEAF_SIZE + 1);
        build_node(coords, dim, &mut ids, 0, &mut nodes);
        let mut points = Vec::with_capacity(coords.len());
        for &id in &ids {
            let i = id as usize;
            points.extend_from_slice(&coords[i * dim..(i + 1) * dim]);
        }
        KdTree {
            dim,
            points,
            ids,
            nodes,
        }
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    /// Nearest other point to `query`, skipping index `exclude`; ties go to
    /// the smallest index. Returns `(index, squared distance)`.
    pub fn nearest_excluding(&self, query: &[f64], exclude: usize) -> Option<(usize, f64)> {
        let mut best = (usize::MAX, f64::INFINITY);
        // (node, lower bound on squared distance)
        let mut pending: Vec<(u32, f64)> = Vec::with_capacity(64);
        pending.push((0, 0.0));
        while let Some((node, bound)) = pending.pop() {
            if bound > best.1 {
                continue;
            }
            match self.nodes[node as usize] {
                Node::Leaf { start, end } => {
                    for pos in start as usize..end as usize {
                        let id = self.ids[pos] as usize;
                        if id == exclude {
                            continue;
                        }
                        let p = &self.points[pos * self.dim..(pos + 1) * self.dim];
                        let d2 = dist2(query, p);
                        if d2 < best.1 || (d2 == best.1 && id < best.0) {
                            best = (id, d2);
                        }
                    }
                }
                Node::Split { axis, value, right } => {
                    let diff = query[axis as usize] - value;
                    let plane = diff * diff;
                    let left = node + 1;
                    let (near, far) = if diff < 0.0 { (left, right) } else { (right, left) };
                    // far side first on the stack so the near side is explored first
                    pending.push((far, plane.max(bound)));
                    pending.push((near, bound));
                }
            }
        }
        (best.0 != usize::MAX).then_some(best)
    }

    /// Nearest neighbor of every indexed point, by original index.
    pub fn all_nearest(&self) -> (Vec<usize>, Vec<f64>) {
        let n = self.len();
        let found: Vec<(usize, f64)> = (0..n)
            .into_par_iter()
            .with_min_len(1024)
            .map(|pos| {
                let id = self.ids[pos] as usize;
                let q = &self.points[pos * self.dim..(pos + 1) * self.dim];
                self.nearest_excluding(q, id).expect("at least two points")
            })
            .collect();
        let mut index = vec![0usize; n];
        let mut dist = vec![0f64; n];
        for (pos, (j, d2)) in found.into_iter().enumerate() {
            let id = self.ids[pos] as usize;
            index[id] = j;
            dist[id] = d2.sqrt();
        }
        (index, dist)
    }
}

fn build_node(coords: &[f64], dim: usize, ids: &mut [u32], offset: usize, nodes: &mut Vec<Node>) {
    let me = nodes.len();
    if ids.len() <= LEAF_SIZE {
        nodes.push(Node::Leaf {
            start: offset as u32,
            end: (offset + ids.len()) as u32,
        });
        return;
    }
    let coord = |id: u32, k: usize| coords[id as usize * dim + k];
    let mut axis = 0;
    let mut widest = -1.0;
    for k in 0..dim {
        let (lo, hi) = ids.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &id| {
            let x = coord(id, k);
            (lo.min(x), hi.max(x))
        });
        if hi - lo > widest {
            widest = hi - lo;
            axis = k;
        }
    }
    let mid = ids.len() / 2;
    ids.select_nth_unstable_by(mid, |&a, &b| coord(a, axis).total_cmp(&coord(b, axis)).then(a.cmp(&b)));
    let value = coord(ids[mid], axis);
    nodes.push(Node::Split {
        axis: axis as u32,
        value,
        right: 0,
    });
    let (left_ids, right_ids) = ids.split_at_mut(mid);
    build_node(coords, dim, left_ids, offset, nodes);
    let right = nodes.len() as u32;
    build_node(coords, dim, right_ids, offset + mid, nodes);
    if let Node::Split { right: r, .. } = &mut nodes[me] {
        *r = right;
    }
}
