//! Height functions integrated from the tile flow.
//!
//! Every Kagome edge carries flow `+1` when it lies on a tile boundary and
//! `-2` when it is interior to a tile (triangle assigned to its hexagon).
//! Following the lattice orientation, `h(head) - h(tail)` equals the flow.

use std::collections::VecDeque;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::region::{Edge, Region, OUTSIDE};
use crate::tiling::{Direction, Tiling};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HeightField {
    region: Arc<Region>,
    h: Vec<i32>,
}

/// Flow carried by an edge under a tiling.
#[inline]
pub fn edge_flow(tiling: &Tiling, e: &Edge) -> i32 {
    if e.tri != OUTSIDE && e.hex != OUTSIDE && tiling.hex_of(e.tri) == e.hex {
        -2
    } else {
        1
    }
}

impl HeightField {
    pub fn region(&self) -> &Arc<Region> {
        &self.region
    }

    pub fn values(&self) -> &[i32] {
        &self.h
    }

    pub fn get(&self, v: u32) -> i32 {
        self.h[v as usize]
    }

    pub fn total(&self) -> i64 {
        self.h.iter().map(|&x| x as i64).sum()
    }
}

/// Integrate the flow breadth-first from the base vertex (`h(base) = 0`),
/// checking every edge for consistency.
pub fn height_field(tiling: &Tiling) -> Result<HeightField> {
    let region = tiling.region();
    let n = region.num_vertices();
    let mut h = vec![i32::MIN; n];
    let Some(base) = region.base_vertex() else {
        return Ok(HeightField { region: Arc::clone(region), h });
    };
    h[base as usize] = 0;
    let mut queue = VecDeque::from([base]);
    while let Some(v) = queue.pop_front() {
        for &ei in region.vertex_edges(v) {
            let e = &region.edges()[ei as usize];
            let f = edge_flow(tiling, e);
            let (w, hw) = if e.tail == v { (e.head, h[v as usize] + f) } else { (e.tail, h[v as usize] - f) };
            if h[w as usize] == i32::MIN {
                h[w as usize] = hw;
                queue.push_back(w);
            } else if h[w as usize] != hw {
                return Err(Error::HeightInconsistency(region.vertex(w).to_string()));
            }
        }
    }
    debug_assert!(h.iter().all(|&x| x != i32::MIN));
    Ok(HeightField { region: Arc::clone(region), h })
}

/// Sum of heights over all region vertices.
pub fn total_height(tiling: &Tiling) -> Result<i64> {
    Ok(height_field(tiling)?.total())
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Extrema {
    pub minima: Vec<u32>,
    pub maxima: Vec<u32>,
    /// Inner vertices where a restrained flip raises the height.
    pub flippable_minima: Vec<u32>,
    /// Inner vertices where a restrained flip lowers the height.
    pub flippable_maxima: Vec<u32>,
}

/// Strict local extrema under the Kagome-graph neighbor comparison, plus
/// the flippable ones.
pub fn local_extrema(tiling: &Tiling) -> Result<Extrema> {
    let field = height_field(tiling)?;
    let region = tiling.region();
    let mut out = Extrema::default();
    for v in 0..region.num_vertices() as u32 {
        let hv = field.get(v);
        let mut nb = region.vertex_neighbors(v).map(|w| field.get(w)).peekable();
        if nb.peek().is_none() {
            continue;
        }
        let (lo, hi) = nb.fold((i32::MAX, i32::MIN), |(lo, hi), x| (lo.min(x), hi.max(x)));
        if hv < lo {
            out.minima.push(v);
        }
        if hv > hi {
            out.maxima.push(v);
        }
        if let Some(info) = tiling.flip_info(v) {
            if info.restrained {
                match info.direction {
                    Direction::Raise => out.flippable_minima.push(v),
                    Direction::Lower => out.flippable_maxima.push(v),
                }
            }
        }
    }
    Ok(out)
}

/// `a ≤ b` at every vertex.
pub fn pointwise_leq(a: &HeightField, b: &HeightField) -> Result<bool> {
    if *a.region != *b.region {
        return Err(Error::RegionMismatch);
    }
    Ok(a.h.iter().zip(&b.h).all(|(x, y)| x <= y))
}
