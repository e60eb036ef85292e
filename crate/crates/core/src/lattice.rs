//! Integer coordinates for the Kagome lattice.
//!
//! Hexagon centers form a triangular Bravais lattice addressed by axial
//! coordinates `(a, b)` (embedded at `a·(2,0) + b·(1,√3)`). Triangles are the
//! faces of that lattice and Kagome vertices are its edges, so every incidence
//! relation below is plain integer arithmetic.

use std::fmt;

use serde::{Deserialize, Serialize};

/// The six unit steps of the triangular lattice, counter-clockwise from 0°.
pub const HEX_STEPS: [(i32, i32); 6] = [(1, 0), (0, 1), (-1, 1), (-1, 0), (0, -1), (1, -1)];

/// A hexagon cell, identified by the lattice point at its center.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct HexCoord {
    pub a: i32,
    pub b: i32,
}

impl HexCoord {
    pub const fn new(a: i32, b: i32) -> Self {
        HexCoord { a, b }
    }

    pub fn offset(self, step: (i32, i32)) -> Self {
        HexCoord::new(self.a + step.0, self.b + step.1)
    }

    pub fn neighbors(self) -> [HexCoord; 6] {
        HEX_STEPS.map(|s| self.offset(s))
    }

    pub fn is_adjacent(self, other: HexCoord) -> bool {
        let d = (other.a - self.a, other.b - self.b);
        HEX_STEPS.contains(&d)
    }

    /// The six triangles around this hexagon. Slot `k` sits at angle
    /// `30° + 60°·k`, between the Kagome vertices shared with neighbors `k`
    /// and `k + 1`.
    pub fn triangles(self) -> [TriCoord; 6] {
        let HexCoord { a, b } = self;
        [
            TriCoord::up(a, b),
            TriCoord::down(a - 1, b),
            TriCoord::up(a - 1, b),
            TriCoord::down(a - 1, b - 1),
            TriCoord::up(a, b - 1),
            TriCoord::down(a, b - 1),
        ]
    }

    pub fn slot_of(self, t: TriCoord) -> Option<usize> {
        self.triangles().iter().position(|&x| x == t)
    }

    /// The Kagome vertex shared with neighbor `k` (direction `HEX_STEPS[k]`).
    pub fn vertex(self, k: usize) -> KagomeVertex {
        KagomeVertex::from_pair(self, self.offset(HEX_STEPS[k]))
    }
}

impl fmt::Display for HexCoord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.a, self.b)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Orient {
    #[serde(rename = "U")]
    Up,
    #[serde(rename = "D")]
    Down,
}

impl Orient {
    pub fn letter(self) -> &'static str {
        match self {
            Orient::Up => "U",
            Orient::Down => "D",
        }
    }
}

/// A triangle cell: a face of the hexagon-center lattice.
///
/// `Up(a,b)` has corners `(a,b), (a+1,b), (a,b+1)`; `Down(a,b)` has corners
/// `(a+1,b), (a+1,b+1), (a,b+1)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TriCoord {
    pub a: i32,
    pub b: i32,
    pub orient: Orient,
}

impl TriCoord {
    pub const fn up(a: i32, b: i32) -> Self {
        TriCoord { a, b, orient: Orient::Up }
    }

    pub const fn down(a: i32, b: i32) -> Self {
        TriCoord { a, b, orient: Orient::Down }
    }

    /// Corner hexagons in counter-clockwise order.
    pub fn corners(self) -> [HexCoord; 3] {
        let TriCoord { a, b, orient } = self;
        match orient {
            Orient::Up => [HexCoord::new(a, b), HexCoord::new(a + 1, b), HexCoord::new(a, b + 1)],
            Orient::Down => [
                HexCoord::new(a + 1, b),
                HexCoord::new(a + 1, b + 1),
                HexCoord::new(a, b + 1),
            ],
        }
    }

    /// The three Kagome vertices of this triangle.
    pub fn vertices(self) -> [KagomeVertex; 3] {
        let c = self.corners();
        [
            KagomeVertex::from_pair(c[0], c[1]),
            KagomeVertex::from_pair(c[1], c[2]),
            KagomeVertex::from_pair(c[2], c[0]),
        ]
    }

    /// The Kagome edge this triangle shares with corner hexagon `h`, as
    /// `(tail, head)` under the lattice orientation (clockwise on triangles,
    /// hence anti-clockwise on hexagons).
    pub fn edge_toward(self, h: HexCoord) -> Option<(KagomeVertex, KagomeVertex)> {
        let c = self.corners();
        let i = c.iter().position(|&x| x == h)?;
        let prev = c[(i + 2) % 3];
        let next = c[(i + 1) % 3];
        Some((KagomeVertex::from_pair(h, next), KagomeVertex::from_pair(prev, h)))
    }
}

impl fmt::Display for TriCoord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({},{})", self.orient.letter(), self.a, self.b)
    }
}

/// A Kagome vertex: the midpoint between two adjacent hexagon centers.
///
/// Stored as the ordered pair `lo < hi`, so the derived ordering is
/// lexicographic on the two endpoints.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct KagomeVertex {
    lo: HexCoord,
    hi: HexCoord,
}

impl KagomeVertex {
    pub fn new(p: HexCoord, q: HexCoord) -> Option<Self> {
        p.is_adjacent(q).then(|| Self::from_pair(p, q))
    }

    pub(crate) fn from_pair(p: HexCoord, q: HexCoord) -> Self {
        debug_assert!(p.is_adjacent(q), "{p} and {q} are not adjacent");
        if p < q {
            KagomeVertex { lo: p, hi: q }
        } else {
            KagomeVertex { lo: q, hi: p }
        }
    }

    pub fn hexes(self) -> (HexCoord, HexCoord) {
        (self.lo, self.hi)
    }

    /// The four cells around this vertex in cyclic order
    /// `(t1, h1, t2, h2)`: triangles alternate with hexagons.
    pub fn incident_cells(self) -> (TriCoord, HexCoord, TriCoord, HexCoord) {
        let (p, q) = (self.lo, self.hi);
        let k = HEX_STEPS
            .iter()
            .position(|&s| p.offset(s) == q)
            .expect("vertex endpoints are adjacent");
        // Around p, the faces on either side of direction k sit in slots k-1 and k.
        let tris = p.triangles();
        (tris[(k + 5) % 6], p, tris[k], q)
    }

    /// Doubled Cartesian position (x2 = 2x, y in units of √3/2), exact in integers.
    pub fn doubled_position(self) -> (i32, i32) {
        let (p, q) = (self.lo, self.hi);
        (2 * (p.a + q.a) + p.b + q.b, p.b + q.b)
    }
}

impl fmt::Display for KagomeVertex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}-{}]", self.lo, self.hi)
    }
}

impl Serialize for KagomeVertex {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        [[self.lo.a, self.lo.b], [self.hi.a, self.hi.b]].serialize(s)
    }
}

impl<'de> Deserialize<'de> for KagomeVertex {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let [[a1, b1], [a2, b2]] = <[[i32; 2]; 2]>::deserialize(d)?;
        KagomeVertex::new(HexCoord::new(a1, b1), HexCoord::new(a2, b2))
            .ok_or_else(|| serde::de::Error::custom("vertex endpoints are not adjacent hexagons"))
    }
}

/// Circular separation of two hexagon slots, in `0..=3`.
pub fn slot_separation(i: usize, j: usize) -> usize {
    let d = i.abs_diff(j) % 6;
    d.min(6 - d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    fn all_cells_near(range: i32) -> (Vec<HexCoord>, Vec<TriCoord>) {
        let mut hexes = Vec::new();
        let mut tris = Vec::new();
        for a in -range..=range {
            for b in -range..=range {
                hexes.push(HexCoord::new(a, b));
                tris.push(TriCoord::up(a, b));
                tris.push(TriCoord::down(a, b));
            }
        }
        (hexes, tris)
    }

    #[test]
    fn each_hexagon_touches_six_distinct_triangles() {
        let h = HexCoord::new(2, -3);
        let tris = h.triangles();
        let set: HashSet<_> = tris.iter().collect();
        assert_eq!(set.len(), 6);
        for t in tris {
            assert!(t.corners().contains(&h), "{t} does not contain {h}");
        }
    }

    #[test]
    fn slots_between_their_neighbor_directions() {
        let h = HexCoord::new(0, 0);
        for (k, t) in h.triangles().iter().enumerate() {
            let c = t.corners();
            assert!(c.contains(&h.offset(HEX_STEPS[k])));
            assert!(c.contains(&h.offset(HEX_STEPS[(k + 1) % 6])));
        }
    }

    #[test]
    fn incident_cells_match_brute_force_scan() {
        let (hexes, tris) = all_cells_near(4);
        for p in &hexes {
            for q in p.neighbors() {
                let v = KagomeVertex::from_pair(*p, q);
                let (t1, h1, t2, h2) = v.incident_cells();
                // Brute force: triangles whose vertex list contains v.
                let touching: HashSet<TriCoord> =
                    tris.iter().copied().filter(|t| t.vertices().contains(&v)).collect();
                if p.a.abs() < 4 && p.b.abs() < 4 {
                    assert_eq!(touching, HashSet::from([t1, t2]));
                }
                assert_eq!(HashSet::from([h1, h2]), HashSet::from([*p, q]));
                for t in [t1, t2] {
                    assert!(t.corners().contains(&h1) && t.corners().contains(&h2));
                }
                assert_ne!(t1, t2);
            }
        }
    }

    #[test]
    fn triangle_edges_form_an_oriented_cycle() {
        for t in [TriCoord::up(0, 0), TriCoord::down(-2, 5)] {
            let edges: Vec<_> = t.corners().iter().map(|&h| t.edge_toward(h).unwrap()).collect();
            // heads of one edge are tails of another: a directed 3-cycle.
            for (_, head) in &edges {
                assert_eq!(edges.iter().filter(|(tail, _)| tail == head).count(), 1);
            }
        }
    }

    #[test]
    fn hexagon_edges_form_an_oriented_cycle() {
        let h = HexCoord::new(1, 1);
        let edges: Vec<_> = h.triangles().iter().map(|t| t.edge_toward(h).unwrap()).collect();
        for (_, head) in &edges {
            assert_eq!(edges.iter().filter(|(tail, _)| tail == head).count(), 1);
        }
        // Every edge of the hexagon touches two of its six vertices.
        let verts: HashSet<_> = (0..6).map(|k| h.vertex(k)).collect();
        for (tail, head) in edges {
            assert!(verts.contains(&tail) && verts.contains(&head));
        }
    }

    #[test]
    fn separation_is_circular() {
        assert_eq!(slot_separation(0, 5), 1);
        assert_eq!(slot_separation(1, 4), 3);
        assert_eq!(slot_separation(4, 0), 2);
        assert_eq!(slot_separation(3, 3), 0);
    }
}
