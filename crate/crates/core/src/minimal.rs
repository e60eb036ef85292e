//! Extremal tilings: greedy flip descent and ascent, and the contour-peeling
//! construction of the minimal restrained tiling of a lozenge.

use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::lattice::{slot_separation, HexCoord};
use crate::region::{make_lozenge_region, Region, RegionFamily, OUTSIDE};
use crate::tiling::{site_flip, Direction, FlipVariant, Tiling};

/// Apply height-decreasing flips admitted by `variant` until none remain.
pub fn greedy_descent(tiling: &Tiling, variant: FlipVariant) -> Tiling {
    greedy(tiling, variant, Direction::Lower)
}

/// Apply height-increasing flips admitted by `variant` until none remain.
pub fn greedy_ascent(tiling: &Tiling, variant: FlipVariant) -> Tiling {
    greedy(tiling, variant, Direction::Raise)
}

fn greedy(tiling: &Tiling, variant: FlipVariant, dir: Direction) -> Tiling {
    let mut t = tiling.clone();
    let region = Arc::clone(t.region());
    let mut queued = vec![false; region.num_vertices()];
    let mut stack: Vec<u32> = region.inner_vertices().iter().rev().copied().collect();
    for &v in &stack {
        queued[v as usize] = true;
    }
    while let Some(v) = stack.pop() {
        queued[v as usize] = false;
        let Some(info) = t.flip_info(v) else { continue };
        if info.direction != dir || !variant.admits(&info) {
            continue;
        }
        t.swap_at(v);
        for w in region.flip_neighborhood(v) {
            if !queued[w as usize] {
                queued[w as usize] = true;
                stack.push(w);
            }
        }
    }
    t
}

/// Whether a tiling has no inner flippable local maximum.
pub fn is_minimal_restrained(tiling: &Tiling) -> bool {
    tiling.is_restrained()
        && !tiling.available_flips().any(|i| i.restrained && i.direction == Direction::Lower)
}

/// Minimal restrained tilings of the lozenges of size 1, 2 and 3 as slot
/// masks, hexagons in `(a, b)` lexicographic order.
pub const BASE_MINIMAL_MASKS: [&[u8]; 3] = [
    &[0x09],
    &[0x28, 0x28, 0x05, 0x05],
    &[0x28, 0x28, 0x28, 0x24, 0x24, 0x24, 0x05, 0x05, 0x05],
];

/// Progress at the start of one peeling round.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct PeelState {
    /// Size of the lozenge still to be tiled.
    pub size: u32,
    /// Tiles placed so far.
    pub placed: usize,
    /// Index of the contour being peeled.
    pub contour: u32,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PeelTrace {
    pub rounds: Vec<PeelState>,
    /// Size of the innermost lozenge, tiled from [`BASE_MINIMAL_MASKS`]
    /// (0 when the contours exhaust the region).
    pub base_size: u32,
    /// Hexagons where more than one tile passed the local checks.
    pub branch_points: usize,
}

/// Hexagons around a candidate tile that must remain fillable.
const LOOKAHEAD_RADIUS: usize = 2;

/// The minimal restrained tiling of a lozenge, built contour by contour.
pub fn contour_peel_minimal(region: &Arc<Region>) -> Result<Tiling> {
    contour_peel_trace(region).map(|(t, _)| t)
}

/// [`contour_peel_minimal`] together with its trace.
///
/// Each contour consists of the two top rows (left to right), the two bottom
/// rows (right to left), the two left columns (top to bottom) and the two
/// right columns (bottom to top) of the remaining lozenge, which shrinks by 4.
/// Each hexagon takes the lowest restrained tile that creates no flippable
/// local maximum and leaves the hexagons around it fillable. The result is
/// checked to be minimal; a hexagon with no admissible tile is an error.
pub fn contour_peel_trace(region: &Arc<Region>) -> Result<(Tiling, PeelTrace)> {
    let n = region.size_param();
    if region.family() != RegionFamily::Lozenge || n == 0 || **region != make_lozenge_region(n)? {
        return Err(Error::InvalidParameter("contour peeling needs a lozenge region".into()));
    }
    let mut steps: Vec<(u32, Option<u8>)> = Vec::with_capacity(region.num_hexes());
    let mut rounds = Vec::new();
    let hex = |a: i32, b: i32| region.hex_id(HexCoord::new(a, b)).expect("inside the lozenge");
    let (mut o, mut m, mut k) = (0i32, n as i32, 0u32);
    while m >= 4 {
        rounds.push(PeelState { size: m as u32, placed: steps.len(), contour: k });
        for b in [o + m - 1, o + m - 2] {
            steps.extend((o..o + m).map(|a| (hex(a, b), None)));
        }
        for b in [o, o + 1] {
            steps.extend((o..o + m).rev().map(|a| (hex(a, b), None)));
        }
        for a in [o, o + 1] {
            steps.extend((o + 2..o + m - 2).rev().map(|b| (hex(a, b), None)));
        }
        for a in [o + m - 1, o + m - 2] {
            steps.extend((o + 2..o + m - 2).map(|b| (hex(a, b), None)));
        }
        o += 2;
        m -= 4;
        k += 1;
    }
    if m > 0 {
        rounds.push(PeelState { size: m as u32, placed: steps.len(), contour: k });
        let masks = BASE_MINIMAL_MASKS[m as usize - 1];
        for a in 0..m {
            for b in 0..m {
                steps.push((hex(o + a, o + b), Some(masks[(a * m + b) as usize])));
            }
        }
    }

    let boundary = crate::height::height_field(&crate::tiling::parallel_lozenge_tiling(region)?)?;
    let mut p = Partial::new(region, &boundary);
    let mut branch_points = 0;
    for &(h, forced) in &steps {
        let mut cands = p.candidates(h, forced);
        cands.sort_by_cached_key(|&m| p.score(h, m));
        let passing: Vec<u8> = cands
            .into_iter()
            .filter(|&m| {
                p.place(h, m);
                let ok = p.consistent_around(h);
                p.unplace(h);
                ok
            })
            .collect();
        if passing.len() > 1 {
            branch_points += 1;
        }
        // Lowest admissible tile whose surroundings can still be filled.
        let choice = passing.iter().copied().find(|&m| {
            p.place(h, m);
            if passing.len() == 1 || p.fills_around(h, LOOKAHEAD_RADIUS) {
                return true;
            }
            p.unplace(h);
            false
        });
        if choice.is_none() {
            return Err(Error::PeelFailure(format!("no placement survives at hexagon {}", region.hex(h))));
        }
    }
    let tiling = Tiling::from_assignment(Arc::clone(region), p.assign)?;
    if !is_minimal_restrained(&tiling) {
        return Err(Error::PeelFailure("result has a flippable local maximum".into()));
    }
    Ok((tiling, PeelTrace { rounds, base_size: m as u32, branch_points }))
}

/// A partial restrained tiling: some hexagons carry their tile.
struct Partial<'r> {
    region: &'r Region,
    assign: Vec<u32>,
    masks: Vec<u8>,
    /// Edges bounding each hexagon.
    hex_edges: Vec<Vec<u32>>,
    /// Heights known so far: the boundary, then the corners of placed tiles.
    height: Vec<Option<i32>>,
    /// Vertices whose height was set by placing each hexagon.
    set_by: Vec<Vec<u32>>,
}

impl<'r> Partial<'r> {
    fn new(region: &'r Region, boundary: &crate::height::HeightField) -> Self {
        let mut hex_edges = vec![Vec::new(); region.num_hexes()];
        for (i, e) in region.edges().iter().enumerate() {
            if e.hex != OUTSIDE {
                hex_edges[e.hex as usize].push(i as u32);
            }
        }
        let mut height = vec![None; region.num_vertices()];
        for v in region.boundary_vertices() {
            height[v as usize] = Some(boundary.get(v));
        }
        Partial {
            region,
            assign: vec![OUTSIDE; region.num_tris()],
            masks: vec![0; region.num_hexes()],
            hex_edges,
            height,
            set_by: vec![Vec::new(); region.num_hexes()],
        }
    }

    /// Heights of the corners of `h` if it carried `mask`, integrated from a
    /// corner of known height.
    fn corner_heights(&self, h: u32, mask: u8) -> Vec<(u32, i32)> {
        let tris = self.region.hex_tris(h);
        let edges = &self.hex_edges[h as usize];
        let flow = |ei: u32| {
            let e = &self.region.edges()[ei as usize];
            let k = tris.iter().position(|&t| t == e.tri && t != OUTSIDE);
            if k.is_some_and(|k| mask & (1 << k) != 0) {
                -2
            } else {
                1
            }
        };
        let mut out: Vec<(u32, i32)> = Vec::with_capacity(6);
        let start = edges.iter().find_map(|&ei| {
            let e = &self.region.edges()[ei as usize];
            [e.tail, e.head].into_iter().find_map(|v| self.height[v as usize].map(|x| (v, x)))
        });
        let Some(start) = start else { return out };
        out.push(start);
        // A hexagon has six edges; sweep until every corner is reached.
        for _ in 0..6 {
            for &ei in edges {
                let e = &self.region.edges()[ei as usize];
                let at = |v: u32| out.iter().find(|(w, _)| *w == v).map(|&(_, x)| x);
                match (at(e.tail), at(e.head)) {
                    (Some(x), None) => out.push((e.head, x + flow(ei))),
                    (None, Some(x)) => out.push((e.tail, x - flow(ei))),
                    _ => {}
                }
            }
        }
        out
    }

    /// Whether the unplaced hexagons within `radius` steps of `h` can all
    /// take tiles passing the local checks.
    fn fills_around(&mut self, h: u32, radius: usize) -> bool {
        let c = self.region.hex(h);
        let mut ring: Vec<(usize, HexCoord)> = vec![(0, c)];
        let mut i = 0;
        while i < ring.len() {
            let (d, x) = ring[i];
            i += 1;
            if d == radius {
                continue;
            }
            for y in x.neighbors() {
                if self.region.hex_id(y).is_some() && !ring.iter().any(|&(_, z)| z == y) {
                    ring.push((d + 1, y));
                }
            }
        }
        let todo: Vec<u32> =
            ring.iter().filter_map(|&(_, x)| self.region.hex_id(x)).filter(|&g| !self.placed(g)).collect();
        self.fill(&todo)
    }

    fn fill(&mut self, todo: &[u32]) -> bool {
        let Some((&g, rest)) = todo.split_first() else { return true };
        for m in self.candidates(g, None) {
            self.place(g, m);
            let ok = self.consistent_around(g) && self.fill(rest);
            self.unplace(g);
            if ok {
                return true;
            }
        }
        false
    }

    fn score(&self, h: u32, mask: u8) -> i64 {
        self.corner_heights(h, mask).iter().map(|&(_, x)| x as i64).sum()
    }

    fn placed(&self, h: u32) -> bool {
        self.masks[h as usize] != 0
    }

    /// Restrained tiles hexagon `h` can still take.
    fn candidates(&self, h: u32, forced: Option<u8>) -> Vec<u8> {
        let tris = self.region.hex_tris(h);
        let free = |i: usize| tris[i] != OUTSIDE && self.assign[tris[i] as usize] == OUTSIDE;
        let mut out = Vec::new();
        for i in 0..6 {
            for j in i + 1..6 {
                let mask = (1u8 << i) | (1u8 << j);
                if slot_separation(i, j) >= 2 && free(i) && free(j) && forced.is_none_or(|f| f == mask) {
                    out.push(mask);
                }
            }
        }
        out
    }

    fn place(&mut self, h: u32, mask: u8) {
        let tris = self.region.hex_tris(h);
        for (i, &t) in tris.iter().enumerate() {
            if mask & (1 << i) != 0 {
                self.assign[t as usize] = h;
            }
        }
        self.masks[h as usize] = mask;
        for (v, x) in self.corner_heights(h, mask) {
            if self.height[v as usize].is_none() {
                self.height[v as usize] = Some(x);
                self.set_by[h as usize].push(v);
            }
        }
    }

    fn unplace(&mut self, h: u32) {
        let tris = self.region.hex_tris(h);
        for (i, &t) in tris.iter().enumerate() {
            if self.masks[h as usize] & (1 << i) != 0 {
                self.assign[t as usize] = OUTSIDE;
            }
        }
        self.masks[h as usize] = 0;
        for v in std::mem::take(&mut self.set_by[h as usize]) {
            self.height[v as usize] = None;
        }
    }

    /// Whether the vertex is already a flippable local maximum.
    fn flippable_max(&self, v: u32) -> bool {
        let Some(site) = self.region.flip_site(v) else { return false };
        if !self.placed(site.h[0]) || !self.placed(site.h[1]) {
            return false;
        }
        let (a0, a1) = (self.assign[site.t[0] as usize], self.assign[site.t[1] as usize]);
        let straight = a0 == site.h[0] && a1 == site.h[1];
        if !straight && !(a0 == site.h[1] && a1 == site.h[0]) {
            return false;
        }
        let m = (self.masks[site.h[0] as usize], self.masks[site.h[1] as usize]);
        let info = site_flip(site, v, straight, m.0, m.1);
        info.direction == Direction::Lower && info.restrained
    }

    /// Whether triangle `t` is covered or some unplaced hexagon can still
    /// take it.
    fn coverable(&self, t: u32) -> bool {
        if self.assign[t as usize] != OUTSIDE {
            return true;
        }
        self.region.tri_hexes(t).iter().zip(self.region.tri_slots(t)).any(|(&g, slot)| {
            g != OUTSIDE
                && !self.placed(g)
                && self.candidates(g, None).iter().any(|m| m & (1 << slot) != 0)
        })
    }

    /// Local checks after placing the tile at `h`.
    fn consistent_around(&self, h: u32) -> bool {
        let c = self.region.hex(h);
        let near: Vec<u32> =
            std::iter::once(c).chain(c.neighbors()).filter_map(|g| self.region.hex_id(g)).collect();
        (0..6).all(|k| self.region.vertex_id(c.vertex(k)).is_none_or(|v| !self.flippable_max(v)))
            && near.iter().all(|&g| self.placed(g) || !self.candidates(g, None).is_empty())
            && near.iter().all(|&g| self.region.hex_tris(g).iter().all(|&t| t == OUTSIDE || self.coverable(t)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::height::total_height;
    use crate::region::make_lozenge_region;
    use crate::tiling::{find_restrained_tiling, find_tiling};
    use rand::seq::SliceRandom;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Descent picking a uniformly random eligible flip each time.
    fn random_order_descent(t: &Tiling, variant: FlipVariant, seed: u64) -> Tiling {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut t = t.clone();
        loop {
            let eligible: Vec<u32> = t
                .available_flips()
                .filter(|i| i.direction == Direction::Lower && variant.admits(i))
                .map(|i| i.vertex)
                .collect();
            let Some(&v) = eligible.choose(&mut rng) else { return t };
            t.flip_in_place(v).unwrap();
        }
    }

    #[test]
    fn descent_is_a_fixpoint_on_its_output() {
        let t = find_tiling(&Arc::new(make_lozenge_region(4).unwrap())).unwrap();
        for v in [FlipVariant::AllFlips, FlipVariant::RestrainedFlips] {
            let d = greedy_descent(&t, v);
            assert_eq!(greedy_descent(&d, v), d);
            let a = greedy_ascent(&t, v);
            assert_eq!(greedy_ascent(&a, v), a);
        }
    }

    #[test]
    fn descent_result_is_order_independent() {
        let r = Arc::new(make_lozenge_region(5).unwrap());
        let start = crate::chain::run(
            &find_restrained_tiling(&r).unwrap(),
            &crate::chain::ChainVariant::Restrained,
            50_000,
            5,
        )
        .unwrap();
        for v in [FlipVariant::AllFlips, FlipVariant::RestrainedFlips] {
            let d = greedy_descent(&start, v);
            for seed in 0..4 {
                assert_eq!(random_order_descent(&start, v, seed), d);
            }
        }
        let m = greedy_descent(&start, FlipVariant::RestrainedFlips);
        assert!(is_minimal_restrained(&m));
        assert!(total_height(&m).unwrap() <= total_height(&start).unwrap());
    }

    #[test]
    fn peeling_matches_descent() {
        for n in 1..=14 {
            let r = Arc::new(make_lozenge_region(n).unwrap());
            let (t, trace) = contour_peel_trace(&r).unwrap();
            let d = greedy_descent(&crate::tiling::parallel_lozenge_tiling(&r).unwrap(), FlipVariant::RestrainedFlips);
            assert_eq!(t, d, "n = {n}");
            assert!(is_minimal_restrained(&t));
            assert_eq!(trace.base_size, n % 4);
            let sizes: Vec<u32> = trace.rounds.iter().map(|s| s.size).collect();
            assert!(sizes.windows(2).all(|w| w[0] == w[1] + 4), "{sizes:?}");
            assert_eq!(trace.rounds.iter().map(|s| s.contour).collect::<Vec<_>>(), (0..sizes.len() as u32).collect::<Vec<_>>());
        }
    }

    #[test]
    fn base_tables_are_the_minimal_tilings() {
        for n in 1..=3u32 {
            let r = Arc::new(make_lozenge_region(n).unwrap());
            let g = crate::graph::enumerate(&r, FlipVariant::RestrainedFlips, crate::graph::DEFAULT_NODE_CAP).unwrap();
            let minimal: Vec<&Tiling> = g.nodes().iter().filter(|t| is_minimal_restrained(t)).collect();
            assert_eq!(minimal.len(), 1);
            let masks: Vec<u8> = (0..r.num_hexes() as u32).map(|h| minimal[0].slot_mask(h)).collect();
            assert_eq!(masks, BASE_MINIMAL_MASKS[n as usize - 1]);
            assert_eq!(contour_peel_minimal(&r).unwrap(), *minimal[0]);
        }
    }

    #[test]
    fn peeling_rejects_other_regions() {
        let r = Arc::new(crate::region::make_square_region(4).unwrap());
        assert!(matches!(contour_peel_minimal(&r), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn ascent_reaches_the_highest_node() {
        let r = Arc::new(make_lozenge_region(3).unwrap());
        let g = crate::graph::enumerate(&r, FlipVariant::AllFlips, crate::graph::DEFAULT_NODE_CAP).unwrap();
        let heights = g.total_heights().unwrap();
        let top = heights.iter().enumerate().max_by_key(|&(_, h)| *h).unwrap().0;
        let bottom = heights.iter().enumerate().min_by_key(|&(_, h)| *h).unwrap().0;
        for t in g.nodes().iter().step_by(37) {
            assert_eq!(greedy_ascent(t, FlipVariant::AllFlips), *g.node(top as u32));
            let d = greedy_descent(t, FlipVariant::AllFlips);
            assert_eq!(d, *g.node(bottom as u32));
            let again = greedy_descent(&greedy_ascent(&d, FlipVariant::AllFlips), FlipVariant::AllFlips);
            assert_eq!(again, d);
        }
    }

    #[test]
    fn descent_reaches_the_lowest_state_below_its_start() {
        let r = Arc::new(make_lozenge_region(3).unwrap());
        let g = crate::graph::enumerate(&r, FlipVariant::RestrainedFlips, crate::graph::DEFAULT_NODE_CAP).unwrap();
        let heights = g.total_heights().unwrap();
        for s in (0..g.num_nodes() as u32).step_by(11) {
            // States reachable from `s` by height-decreasing flips.
            let mut seen = vec![false; g.num_nodes()];
            let mut stack = vec![s];
            seen[s as usize] = true;
            while let Some(x) = stack.pop() {
                for &(y, _) in g.neighbors(x) {
                    if heights[y as usize] < heights[x as usize] && !seen[y as usize] {
                        seen[y as usize] = true;
                        stack.push(y);
                    }
                }
            }
            let low = (0..g.num_nodes()).filter(|&i| seen[i]).map(|i| heights[i]).min().unwrap();
            let d = greedy_descent(g.node(s), FlipVariant::RestrainedFlips);
            assert_eq!(total_height(&d).unwrap(), low);
        }
    }
}
