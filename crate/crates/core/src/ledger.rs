//! Exact path-coupling ledgers.
//!
//! For every pair of states one flip apart, the expected change of the
//! distance `φ(A, B) = |h(A) - h(B)| / 3` (total heights) after one coupled
//! step, split into the contribution of each selectable vertex.

use num_rational::Rational64;
use num_traits::{One, Zero};
use serde::Serialize;

use crate::chain::ChainVariant;
use crate::error::Result;
use crate::graph::TilingGraph;
use crate::scalar::Scalar;
use crate::tiling::{Direction, Tiling};

#[derive(Clone, Debug, PartialEq)]
pub struct CouplingLedgerEntry<S> {
    /// Graph node ids `(a, b)`, `a < b`.
    pub pair: (u32, u32),
    /// Vertex at which the two states differ.
    pub vertex: u32,
    pub expected_delta: S,
    /// `(vertex, contribution)` for every vertex with a nonzero term.
    pub contributions: Vec<(u32, S)>,
}

impl<S: Scalar> CouplingLedgerEntry<S> {
    /// Vertices whose selection moves the pair apart.
    pub fn bad_vertices(&self) -> impl Iterator<Item = u32> + '_ {
        self.contributions.iter().filter(|(_, c)| *c > S::zero()).map(|&(v, _)| v)
    }
}

#[derive(Clone, Debug)]
pub struct CouplingLedger<S> {
    pub entries: Vec<CouplingLedgerEntry<S>>,
    pub num_inner: usize,
}

impl<S: Scalar> CouplingLedger<S> {
    /// Index of the largest expected change (first on ties).
    pub fn worst(&self) -> Option<usize> {
        let mut best: Option<usize> = None;
        for (i, e) in self.entries.iter().enumerate() {
            if best.is_none_or(|b| e.expected_delta > self.entries[b].expected_delta) {
                best = Some(i);
            }
        }
        best
    }

    pub fn worst_entry(&self) -> Option<&CouplingLedgerEntry<S>> {
        self.worst().map(|i| &self.entries[i])
    }
}

/// The coin intervals on which `t`'s flip at `v` fires, with its height
/// change in units of 3.
fn firing(t: &Tiling, v: u32, variant: &ChainVariant) -> Option<(Rational64, Rational64, i32)> {
    let info = t.flip_info(v)?;
    let (lo, hi) = variant.firing_interval(&info);
    (lo < hi).then_some((lo, hi, info.direction.sign()))
}

/// Exact coupling ledger of `variant` over all edges of `graph`.
pub fn path_coupling_ledger<S: Scalar>(graph: &TilingGraph, variant: &ChainVariant) -> Result<CouplingLedger<S>> {
    variant.validate()?;
    let region = graph.region();
    let n_in = region.num_inner();
    let pick = S::from_ratio(1, n_in.max(1) as i64);
    let mut entries = Vec::with_capacity(graph.edges().len());
    for e in graph.edges() {
        let (a, b) = (graph.node(e.a), graph.node(e.b));
        // gap = (h(a) - h(b)) / 3
        let gap = match e.info.direction {
            Direction::Lower => 1,
            Direction::Raise => -1,
        };
        let mut contributions = Vec::new();
        let mut total = S::zero();
        for &u in region.inner_vertices() {
            let fa = firing(a, u, variant);
            let fb = firing(b, u, variant);
            if fa.is_none() && fb.is_none() {
                continue;
            }
            let mut cuts = vec![Rational64::zero(), Rational64::one()];
            for (lo, hi, _) in fa.iter().chain(fb.iter()) {
                cuts.push(*lo);
                cuts.push(*hi);
            }
            cuts.sort();
            cuts.dedup();
            let mut term = Rational64::zero();
            for w in cuts.windows(2) {
                let (x, y) = (w[0], w[1]);
                let moved = |f: &Option<(Rational64, Rational64, i32)>| match f {
                    Some((lo, hi, s)) if *lo <= x && y <= *hi => *s,
                    _ => 0,
                };
                let phi = (gap + moved(&fa) - moved(&fb)).abs();
                term += (y - x) * Rational64::from_integer(phi as i64 - 1);
            }
            if !term.is_zero() {
                let c = pick.clone() * S::from_rational(term);
                total += c.clone();
                contributions.push((u, c));
            }
        }
        entries.push(CouplingLedgerEntry { pair: (e.a, e.b), vertex: e.info.vertex, expected_delta: total, contributions });
    }
    Ok(CouplingLedger { entries, num_inner: n_in })
}

/// Ledger summary for reports.
#[derive(Clone, Debug, Serialize)]
pub struct LedgerSummary {
    pub pairs: usize,
    pub num_inner: usize,
    pub worst: String,
    pub worst_pair: Option<(u32, u32)>,
    pub worst_vertex: Option<crate::lattice::KagomeVertex>,
    pub bad_vertices: Vec<crate::lattice::KagomeVertex>,
}

impl CouplingLedger<crate::scalar::Exact> {
    pub fn summary(&self, graph: &TilingGraph) -> LedgerSummary {
        let w = self.worst_entry();
        LedgerSummary {
            pairs: self.entries.len(),
            num_inner: self.num_inner,
            worst: w.map(|e| e.expected_delta.to_string()).unwrap_or_else(|| "0".into()),
            worst_pair: w.map(|e| e.pair),
            worst_vertex: w.map(|e| graph.region().vertex(e.vertex)),
            bad_vertices: w.map(|e| e.bad_vertices().map(|v| graph.region().vertex(v)).collect()).unwrap_or_default(),
        }
    }
}
