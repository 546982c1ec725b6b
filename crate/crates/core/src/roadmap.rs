//! Roadmap graphs: node positions and undirected straight-line edges.
//!
//! Undirected edge `e` is traversed as directed edge `2e` (from its first
//! endpoint) or `2e + 1` (from its second).

use alloc::collections::VecDeque;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::Vector2;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{invalid, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Roadmap {
    nodes: Vec<Vector2<f64>>,
    edges: Vec<(usize, usize)>,
    /// Per node: `(neighbor, directed edge id)`, ascending by neighbor.
    adjacency: Vec<Vec<(usize, usize)>>,
}

impl Roadmap {
    pub fn new(nodes: Vec<Vector2<f64>>, edges: Vec<(usize, usize)>) -> Result<Self> {
        let mut adjacency = vec![Vec::new(); nodes.len()];
        for (e, &(a, b)) in edges.iter().enumerate() {
            if a >= nodes.len() || b >= nodes.len() {
                return Err(invalid(format!("edge {e} references a missing node")));
            }
            if a == b || (nodes[a] - nodes[b]).norm() == 0.0 {
                return Err(invalid(format!("edge {e} has zero length")));
            }
            if adjacency[a].iter().any(|&(n, _)| n == b) {
                return Err(invalid(format!("edge {e} duplicates an earlier edge")));
            }
            adjacency[a].push((b, 2 * e));
            adjacency[b].push((a, 2 * e + 1));
        }
        for list in &mut adjacency {
            list.sort_unstable();
        }
        Ok(Self { nodes, edges, adjacency })
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn nodes(&self) -> &[Vector2<f64>] {
        &self.nodes
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn position(&self, node: usize) -> Vector2<f64> {
        self.nodes[node]
    }

    pub fn neighbors(&self, node: usize) -> &[(usize, usize)] {
        &self.adjacency[node]
    }

    pub fn degree(&self, node: usize) -> usize {
        self.adjacency[node].len()
    }

    /// `(from, to)` of a directed edge id.
    pub fn endpoints(&self, directed: usize) -> (usize, usize) {
        let (a, b) = self.edges[directed / 2];
        if directed.is_multiple_of(2) {
            (a, b)
        } else {
            (b, a)
        }
    }

    /// Directed edge from `from` to `to`, if adjacent.
    pub fn directed_edge(&self, from: usize, to: usize) -> Option<usize> {
        self.adjacency
            .get(from)?
            .binary_search_by_key(&to, |&(n, _)| n)
            .ok()
            .map(|i| self.adjacency[from][i].1)
    }

    /// Hop distances from `source`; `usize::MAX` for unreachable nodes.
    pub fn hops_from(&self, source: usize) -> Vec<usize> {
        let mut dist = vec![usize::MAX; self.nodes.len()];
        let mut queue = VecDeque::new();
        dist[source] = 0;
        queue.push_back(source);
        while let Some(n) = queue.pop_front() {
            for &(m, _) in &self.adjacency[n] {
                if dist[m] == usize::MAX {
                    dist[m] = dist[n] + 1;
                    queue.push_back(m);
                }
            }
        }
        dist
    }

    pub fn is_reachable(&self, from: usize, to: usize) -> bool {
        self.hops_from(from)[to] != usize::MAX
    }

    /// Largest finite hop distance between any two nodes.
    pub fn diameter(&self) -> usize {
        (0..self.nodes.len())
            .flat_map(|s| self.hops_from(s).into_iter().filter(|&d| d != usize::MAX))
            .max()
            .unwrap_or(0)
    }
}

/// Regular 8-connected lattice over `[0, extent]²`. Node `row * k + col` sits
/// at `(col * spacing, row * spacing)` with `k = extent / spacing + 1`.
pub fn gen_grid_roadmap(extent: f64, spacing: f64) -> Result<Roadmap> {
    if !(extent > 0.0 && spacing > 0.0 && extent.is_finite()) {
        return Err(invalid("grid extent and spacing must be positive"));
    }
    let cells = extent / spacing;
    let k = cells.round();
    if (cells - k).abs() > 1e-9 * cells.max(1.0) {
        return Err(invalid(format!("spacing {spacing} does not divide extent {extent}")));
    }
    let side = k as usize + 1;
    let id = |row: usize, col: usize| row * side + col;
    let mut nodes = Vec::with_capacity(side * side);
    for row in 0..side {
        for col in 0..side {
            nodes.push(Vector2::new(col as f64 * spacing, row as f64 * spacing));
        }
    }
    let mut edges = Vec::new();
    for row in 0..side {
        for col in 0..side {
            if col + 1 < side {
                edges.push((id(row, col), id(row, col + 1)));
            }
            if row + 1 < side {
                edges.push((id(row, col), id(row + 1, col)));
                if col + 1 < side {
                    edges.push((id(row, col), id(row + 1, col + 1)));
                }
                if col > 0 {
                    edges.push((id(row, col), id(row + 1, col - 1)));
                }
            }
        }
    }
    Roadmap::new(nodes, edges)
}
