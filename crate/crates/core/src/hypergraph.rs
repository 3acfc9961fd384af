//! Peeling of a chunk hypergraph to its 2-core, and orientation of the core.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, VecDeque};

use thiserror::Error;

use crate::signatures::Edge;

/// An edge removed by peeling, with the degree-1 vertex that released it.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Peeled {
    pub edge: usize,
    pub hinge: usize,
    /// Position of the hinge inside the edge.
    pub index: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct PeelResult {
    /// Edges in peeling order; solve them back to front.
    pub peel_order: Vec<Peeled>,
    /// Ids of the edges left in the 2-core, increasing.
    pub core_edges: Vec<usize>,
}

impl PeelResult {
    pub fn is_peelable(&self) -> bool {
        self.core_edges.is_empty()
    }
}

/// A vertex chosen for an edge, and its position inside the edge.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Assignment {
    pub vertex: usize,
    pub index: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Error)]
#[error("the 2-core has no orientation")]
pub struct NoMatching;

/// Peels `edges` over `num_vertices` vertices, always releasing the lowest
/// numbered degree-1 vertex first.
pub fn peel(edges: &[Edge], num_vertices: usize) -> PeelResult {
    let mut degree = vec![0u32; num_vertices];
    // XOR of the ids of the edges still incident to each vertex: when the
    // degree drops to 1 it is the id of the last one.
    let mut incident = vec![0usize; num_vertices];
    for (id, e) in edges.iter().enumerate() {
        for &v in e.vertices() {
            degree[v] += 1;
            incident[v] ^= id;
        }
    }
    let mut ready: BinaryHeap<Reverse<usize>> = (0..num_vertices)
        .filter(|&v| degree[v] == 1)
        .map(Reverse)
        .collect();
    let mut removed = vec![false; edges.len()];
    let mut peel_order = Vec::new();

    while let Some(Reverse(v)) = ready.pop() {
        if degree[v] != 1 {
            continue;
        }
        let id = incident[v];
        let e = &edges[id];
        let index = e.vertices().iter().position(|&u| u == v).expect("vertex not in its edge");
        removed[id] = true;
        peel_order.push(Peeled { edge: id, hinge: v, index });
        for &u in e.vertices() {
            degree[u] -= 1;
            incident[u] ^= id;
            if degree[u] == 1 {
                ready.push(Reverse(u));
            }
        }
    }

    let core_edges = (0..edges.len()).filter(|&id| !removed[id]).collect();
    PeelResult { peel_order, core_edges }
}

/// Assigns a distinct vertex of its own to every edge in `core`, by
/// augmenting-path bipartite matching. The result is parallel to `core`.
pub fn orient_core(edges: &[Edge], core: &[usize], num_vertices: usize) -> Result<Vec<Assignment>, NoMatching> {
    const FREE: usize = usize::MAX;
    // owner[v]: position in `core` of the edge matched to v.
    let mut owner = vec![FREE; num_vertices];
    let mut chosen = vec![FREE; core.len()];
    let mut seen = vec![0u32; num_vertices];
    let mut parent = vec![FREE; num_vertices];
    let mut stamp = 0u32;
    let mut queue = VecDeque::new();

    for root in 0..core.len() {
        if let Some(&v) = edges[core[root]].vertices().iter().find(|&&v| owner[v] == FREE) {
            owner[v] = root;
            chosen[root] = v;
            continue;
        }
        stamp += 1;
        queue.clear();
        queue.push_back(root);
        let mut end = None;
        'search: while let Some(pos) = queue.pop_front() {
            for &v in edges[core[pos]].vertices() {
                if seen[v] == stamp {
                    continue;
                }
                seen[v] = stamp;
                parent[v] = pos;
                if owner[v] == FREE {
                    end = Some(v);
                    break 'search;
                }
                queue.push_back(owner[v]);
            }
        }
        let mut v = end.ok_or(NoMatching)?;
        loop {
            let pos = parent[v];
            let previous = chosen[pos];
            owner[v] = pos;
            chosen[pos] = v;
            if pos == root {
                break;
            }
            v = previous;
        }
    }

    Ok(core
        .iter()
        .zip(&chosen)
        .map(|(&id, &vertex)| Assignment {
            vertex,
            index: edges[id].vertices().iter().position(|&u| u == vertex).unwrap(),
        })
        .collect())
}

/// Combines peeling hinges and a core orientation into one assignment per
/// edge.
pub fn full_orientation(num_edges: usize, peel: &PeelResult, core: &[Assignment]) -> Vec<Option<Assignment>> {
    let mut out = vec![None; num_edges];
    for p in &peel.peel_order {
        out[p.edge] = Some(Assignment {
            vertex: p.hinge,
            index: p.index,
        });
    }
    for (&id, &a) in peel.core_edges.iter().zip(core) {
        out[id] = Some(a);
    }
    out
}
