//! Read-only nearest-neighbor index over 3D points, backed by a k-d tree.
//!
//! Query results are sorted by distance and then by point index, so callers
//! see a deterministic order regardless of how the tree breaks ties.

use std::num::NonZero;

use kiddo::{ImmutableKdTree, SquaredEuclidean};

use crate::Vec3;

pub struct PointIndex {
    tree: Option<ImmutableKdTree<f64, 3>>,
    len: usize,
}

/// A neighbor: index into the indexed slice plus Euclidean distance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Neighbor {
    pub index: usize,
    pub distance: f64,
}

fn sort_neighbors(v: &mut [Neighbor]) {
    v.sort_by(|a, b| {
        a.distance
            .total_cmp(&b.distance)
            .then(a.index.cmp(&b.index))
    });
}

impl PointIndex {
    pub fn new(points: &[Vec3]) -> Self {
        let coords: Vec<[f64; 3]> = points.iter().map(|p| [p.x, p.y, p.z]).collect();
        let tree = if coords.is_empty() {
            None
        } else {
            Some(ImmutableKdTree::new_from_slice(&coords).expect("finite point coordinates"))
        };
        PointIndex {
            tree,
            len: points.len(),
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn nearest(&self, q: &Vec3) -> Option<Neighbor> {
        self.nearest_n(q, 1).into_iter().next()
    }

    /// Up to `k` nearest points, closest first.
    pub fn nearest_n(&self, q: &Vec3, k: usize) -> Vec<Neighbor> {
        let (Some(tree), Some(k)) = (&self.tree, NonZero::new(k.min(self.len))) else {
            return Vec::new();
        };
        let mut out: Vec<Neighbor> = tree
            .query(&[q.x, q.y, q.z])
            .nearest_n::<SquaredEuclidean<f64>>(k)
            .execute()
            .into_iter()
            .map(|r| Neighbor {
                index: r.item as usize,
                distance: r.distance.sqrt(),
            })
            .collect();
        sort_neighbors(&mut out);
        out
    }

    /// All points within `radius` (inclusive), closest first.
    pub fn within(&self, q: &Vec3, radius: f64) -> Vec<Neighbor> {
        let Some(tree) = &self.tree else {
            return Vec::new();
        };
        let mut out: Vec<Neighbor> = tree
            .query(&[q.x, q.y, q.z])
            .within::<SquaredEuclidean<f64>>(radius * radius)
            .execute()
            .into_iter()
            .map(|r| Neighbor {
                index: r.item as usize,
                distance: r.distance.sqrt(),
            })
            .collect();
        sort_neighbors(&mut out);
        out
    }
}
