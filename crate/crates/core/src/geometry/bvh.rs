//! Bounding-volume hierarchy over mesh triangles.

use super::{Aabb, TriMesh};
use crate::math::Vec3;

const LEAF_SIZE: usize = 4;

#[derive(Debug, Clone)]
pub struct Node {
    pub bounds: Aabb,
    /// Leaf: range into `order`. Inner: child node indices.
    pub kind: NodeKind,
}

#[derive(Debug, Clone, Copy)]
pub enum NodeKind {
    Leaf { start: usize, end: usize },
    Inner { left: usize, right: usize },
}

#[derive(Debug, Clone)]
pub struct Bvh<'m> {
    pub mesh: &'m TriMesh,
    pub nodes: Vec<Node>,
    /// Triangle indices, leaf ranges point into this.
    pub order: Vec<usize>,
    pub tri_bounds: Vec<Aabb>,
}

impl<'m> Bvh<'m> {
    pub fn build(mesh: &'m TriMesh) -> Self {
        let tri_bounds: Vec<Aabb> = (0..mesh.triangles.len())
            .map(|i| {
                let t = mesh.triangle(i);
                Aabb::from_points(t.iter()).expect("three points")
            })
            .collect();
        let centroids: Vec<Vec3> = tri_bounds.iter().map(|b| b.center()).collect();
        let mut order: Vec<usize> = (0..mesh.triangles.len()).collect();
        let mut nodes = Vec::new();
        if !order.is_empty() {
            let n = order.len();
            build_node(&mut nodes, &mut order, 0, n, &tri_bounds, &centroids);
        }
        Self {
            mesh,
            nodes,
            order,
            tri_bounds,
        }
    }

    pub fn root(&self) -> Option<&Node> {
        self.nodes.first()
    }

    pub fn leaf_triangles(&self, start: usize, end: usize) -> &[usize] {
        &self.order[start..end]
    }
}

fn build_node(
    nodes: &mut Vec<Node>,
    order: &mut [usize],
    start: usize,
    end: usize,
    tri_bounds: &[Aabb],
    centroids: &[Vec3],
) -> usize {
    let slice = &mut order[start..end];
    let bounds = slice
        .iter()
        .skip(1)
        .fold(tri_bounds[slice[0]], |acc, &i| acc.union(&tri_bounds[i]));
    let idx = nodes.len();
    nodes.push(Node {
        bounds,
        kind: NodeKind::Leaf { start, end },
    });
    if end - start <= LEAF_SIZE {
        return idx;
    }
    let extent = bounds.max - bounds.min;
    let axis = if extent.x >= extent.y && extent.x >= extent.z {
        0
    } else if extent.y >= extent.z {
        1
    } else {
        2
    };
    // stable ordering keeps the tree deterministic for equal centroids
    slice.sort_by(|&a, &b| {
        centroids[a][axis]
            .total_cmp(&centroids[b][axis])
            .then(a.cmp(&b))
    });
    let mid = start + (end - start) / 2;
    let left = build_node(nodes, order, start, mid, tri_bounds, centroids);
    let right = build_node(nodes, order, mid, end, tri_bounds, centroids);
    nodes[idx].kind = NodeKind::Inner { left, right };
    idx
}
