//! Finite regions of the Kagome lattice and the index tables the rest of the
//! crate works on.
//!
//! A [`Region`] is immutable once built. Cells and vertices get dense `u32`
//! indices in lexicographic order, and every incidence needed by tilings,
//! heights and flips is precomputed here.

use std::collections::{BTreeSet, HashMap, VecDeque};
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{HexCoord, KagomeVertex, Orient, TriCoord};

/// Marker for "this cell is not part of the region".
pub const OUTSIDE: u32 = u32::MAX;

pub const REGION_SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RegionFamily {
    Lozenge,
    Square,
    Nonflat,
    Custom,
}

impl fmt::Display for RegionFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            RegionFamily::Lozenge => "lozenge",
            RegionFamily::Square => "square",
            RegionFamily::Nonflat => "nonflat",
            RegionFamily::Custom => "custom",
        };
        f.write_str(s)
    }
}

/// A Kagome edge: the side shared by triangle `tri` and hexagon `hex`,
/// oriented from `tail` to `head`. At least one of the two cells is in the
/// region.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Edge {
    pub tail: u32,
    pub head: u32,
    pub tri: u32,
    pub hex: u32,
}

/// Local geometry of a flip at an inner vertex. `slot[i][j]` is the slot of
/// triangle `t[i]` inside hexagon `h[j]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FlipSite {
    pub t: [u32; 2],
    pub h: [u32; 2],
    pub slot: [[u8; 2]; 2],
    /// Whether the pairing `t[0]→h[0], t[1]→h[1]` is the lower of the two
    /// flip states (flipping out of it raises the vertex).
    pub straight_is_low: bool,
}

/// Cells around a vertex in cyclic order `t[0], h[0], t[1], h[1]`, with
/// [`OUTSIDE`] for cells not in the region.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct VertexCells {
    pub t: [u32; 2],
    pub h: [u32; 2],
}

impl VertexCells {
    fn cyclic(&self) -> [u32; 4] {
        [self.t[0], self.h[0], self.t[1], self.h[1]]
    }
}

pub struct Region {
    family: RegionFamily,
    n: u32,
    hexes: Vec<HexCoord>,
    tris: Vec<TriCoord>,
    vertices: Vec<KagomeVertex>,
    hex_index: HashMap<HexCoord, u32>,
    tri_index: HashMap<TriCoord, u32>,
    vertex_index: HashMap<KagomeVertex, u32>,
    tri_hexes: Vec<[u32; 3]>,
    tri_slots: Vec<[u8; 3]>,
    hex_tris: Vec<[u32; 6]>,
    vertex_cells: Vec<VertexCells>,
    edges: Vec<Edge>,
    edge_offsets: Vec<u32>,
    edge_list: Vec<u32>,
    inner: Vec<u32>,
    inner_pos: Vec<u32>,
    flip_sites: Vec<Option<FlipSite>>,
    base: Option<u32>,
}

impl fmt::Debug for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Region")
            .field("family", &self.family)
            .field("n", &self.n)
            .field("hexes", &self.hexes.len())
            .field("tris", &self.tris.len())
            .field("vertices", &self.vertices.len())
            .field("inner", &self.inner.len())
            .finish()
    }
}

impl PartialEq for Region {
    fn eq(&self, other: &Self) -> bool {
        std::ptr::eq(self, other) || (self.hexes == other.hexes && self.tris == other.tris)
    }
}

impl Eq for Region {}

impl Region {
    /// Build a region from a cell set. Checks edge-connectivity and simple
    /// connectivity; cell-count balance is *not* required here (untileable
    /// regions are representable, [`crate::tiling::find_tiling`] rejects them).
    pub fn from_cells(
        family: RegionFamily,
        n: u32,
        hexes: impl IntoIterator<Item = HexCoord>,
        tris: impl IntoIterator<Item = TriCoord>,
    ) -> Result<Region> {
        let hexes: Vec<HexCoord> = hexes.into_iter().collect::<BTreeSet<_>>().into_iter().collect();
        let tris: Vec<TriCoord> = tris.into_iter().collect::<BTreeSet<_>>().into_iter().collect();
        let hex_index: HashMap<HexCoord, u32> =
            hexes.iter().enumerate().map(|(i, &h)| (h, i as u32)).collect();
        let tri_index: HashMap<TriCoord, u32> =
            tris.iter().enumerate().map(|(i, &t)| (t, i as u32)).collect();
        let hex_id = |h: HexCoord| hex_index.get(&h).copied().unwrap_or(OUTSIDE);
        let tri_id = |t: TriCoord| tri_index.get(&t).copied().unwrap_or(OUTSIDE);

        let mut vset = BTreeSet::new();
        for &h in &hexes {
            for k in 0..6 {
                vset.insert(h.vertex(k));
            }
        }
        for &t in &tris {
            vset.extend(t.vertices());
        }
        let vertices: Vec<KagomeVertex> = vset.into_iter().collect();
        let vertex_index: HashMap<KagomeVertex, u32> =
            vertices.iter().enumerate().map(|(i, &v)| (v, i as u32)).collect();

        let mut tri_hexes = Vec::with_capacity(tris.len());
        let mut tri_slots = Vec::with_capacity(tris.len());
        for &t in &tris {
            let c = t.corners();
            tri_hexes.push(c.map(hex_id));
            tri_slots.push(c.map(|h| h.slot_of(t).expect("corner contains triangle") as u8));
        }
        let hex_tris: Vec<[u32; 6]> = hexes.iter().map(|h| h.triangles().map(tri_id)).collect();

        let vertex_cells: Vec<VertexCells> = vertices
            .iter()
            .map(|v| {
                let (t1, h1, t2, h2) = v.incident_cells();
                VertexCells { t: [tri_id(t1), tri_id(t2)], h: [hex_id(h1), hex_id(h2)] }
            })
            .collect();

        // Edges: every (triangle, corner hexagon) pair with at least one side in the region.
        let mut edge_keys = BTreeSet::new();
        for &t in &tris {
            for h in t.corners() {
                edge_keys.insert((t, h));
            }
        }
        for &h in &hexes {
            for t in h.triangles() {
                edge_keys.insert((t, h));
            }
        }
        let edges: Vec<Edge> = edge_keys
            .iter()
            .map(|&(t, h)| {
                let (tail, head) = t.edge_toward(h).expect("corner");
                Edge { tail: vertex_index[&tail], head: vertex_index[&head], tri: tri_id(t), hex: hex_id(h) }
            })
            .collect();
        let mut per_vertex: Vec<Vec<u32>> = vec![Vec::new(); vertices.len()];
        for (i, e) in edges.iter().enumerate() {
            per_vertex[e.tail as usize].push(i as u32);
            per_vertex[e.head as usize].push(i as u32);
        }
        let mut edge_offsets = Vec::with_capacity(vertices.len() + 1);
        let mut edge_list = Vec::with_capacity(edges.len() * 2);
        edge_offsets.push(0);
        for list in per_vertex {
            edge_list.extend(list);
            edge_offsets.push(edge_list.len() as u32);
        }

        let mut inner = Vec::new();
        let mut inner_pos = vec![OUTSIDE; vertices.len()];
        let mut flip_sites = vec![None; vertices.len()];
        for (vi, (v, cells)) in vertices.iter().zip(&vertex_cells).enumerate() {
            if cells.cyclic().iter().all(|&c| c != OUTSIDE) {
                inner_pos[vi] = inner.len() as u32;
                inner.push(vi as u32);
                let (t1, h1, t2, h2) = v.incident_cells();
                let slot = |t: TriCoord, h: HexCoord| h.slot_of(t).expect("incident") as u8;
                // Flipping out of t1→h1 makes that edge a tile boundary (-2 → +1):
                // the vertex goes up iff it is the head of that edge.
                let (_, head) = t1.edge_toward(h1).expect("incident");
                flip_sites[vi] = Some(FlipSite {
                    t: cells.t,
                    h: cells.h,
                    slot: [[slot(t1, h1), slot(t1, h2)], [slot(t2, h1), slot(t2, h2)]],
                    straight_is_low: head == *v,
                });
            }
        }

        let region = Region {
            family,
            n,
            base: None,
            hexes,
            tris,
            vertices,
            hex_index,
            tri_index,
            vertex_index,
            tri_hexes,
            tri_slots,
            hex_tris,
            vertex_cells,
            edges,
            edge_offsets,
            edge_list,
            inner,
            inner_pos,
            flip_sites,
        };
        region.check_topology()?;
        let base = (0..region.vertices.len() as u32).find(|&v| region.inner_pos[v as usize] == OUTSIDE);
        Ok(Region { base, ..region })
    }

    fn check_topology(&self) -> Result<()> {
        let cells = self.hexes.len() + self.tris.len();
        if cells == 0 {
            return Ok(());
        }
        // Flood fill over cells sharing an edge.
        let nt = self.tris.len();
        let mut seen = vec![false; cells];
        let mut queue = VecDeque::new();
        seen[0] = true;
        queue.push_back(0usize);
        let mut count = 1;
        while let Some(c) = queue.pop_front() {
            let neighbors: Vec<usize> = if c < nt {
                self.tri_hexes[c].iter().filter(|&&h| h != OUTSIDE).map(|&h| nt + h as usize).collect()
            } else {
                self.hex_tris[c - nt].iter().filter(|&&t| t != OUTSIDE).map(|&t| t as usize).collect()
            };
            for m in neighbors {
                if !seen[m] {
                    seen[m] = true;
                    count += 1;
                    queue.push_back(m);
                }
            }
        }
        if count != cells {
            return Err(Error::InvalidRegion(format!(
                "region is not edge-connected ({count} of {cells} cells reachable)"
            )));
        }
        // A pinch vertex has its region cells split into two arcs.
        for (v, vc) in self.vertices.iter().zip(&self.vertex_cells) {
            let c = vc.cyclic();
            let changes = (0..4).filter(|&i| (c[i] == OUTSIDE) != (c[(i + 1) % 4] == OUTSIDE)).count();
            if changes > 2 {
                return Err(Error::InvalidRegion(format!("region is pinched at vertex {v}")));
            }
        }
        let euler = self.vertices.len() as i64 - self.edges.len() as i64 + cells as i64;
        if euler != 1 {
            return Err(Error::InvalidRegion(format!(
                "region is not simply connected (Euler characteristic {euler})"
            )));
        }
        Ok(())
    }

    pub fn family(&self) -> RegionFamily {
        self.family
    }

    /// The size parameter the region was built with.
    pub fn size_param(&self) -> u32 {
        self.n
    }

    pub fn hexes(&self) -> &[HexCoord] {
        &self.hexes
    }

    pub fn tris(&self) -> &[TriCoord] {
        &self.tris
    }

    pub fn vertices(&self) -> &[KagomeVertex] {
        &self.vertices
    }

    pub fn num_hexes(&self) -> usize {
        self.hexes.len()
    }

    pub fn num_tris(&self) -> usize {
        self.tris.len()
    }

    /// Number of tiles in any tiling (one per hexagon).
    pub fn num_tiles(&self) -> usize {
        self.hexes.len()
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_inner(&self) -> usize {
        self.inner.len()
    }

    pub fn is_balanced(&self) -> bool {
        self.tris.len() == 2 * self.hexes.len()
    }

    pub fn hex_id(&self, h: HexCoord) -> Option<u32> {
        self.hex_index.get(&h).copied()
    }

    pub fn tri_id(&self, t: TriCoord) -> Option<u32> {
        self.tri_index.get(&t).copied()
    }

    pub fn vertex_id(&self, v: KagomeVertex) -> Option<u32> {
        self.vertex_index.get(&v).copied()
    }

    pub fn hex(&self, id: u32) -> HexCoord {
        self.hexes[id as usize]
    }

    pub fn tri(&self, id: u32) -> TriCoord {
        self.tris[id as usize]
    }

    pub fn vertex(&self, id: u32) -> KagomeVertex {
        self.vertices[id as usize]
    }

    /// Corner hexagon ids of a triangle ([`OUTSIDE`] where not in the region).
    pub fn tri_hexes(&self, t: u32) -> [u32; 3] {
        self.tri_hexes[t as usize]
    }

    /// Slot of triangle `t` inside each of its corner hexagons.
    pub fn tri_slots(&self, t: u32) -> [u8; 3] {
        self.tri_slots[t as usize]
    }

    /// Triangle ids around a hexagon, by slot.
    pub fn hex_tris(&self, h: u32) -> [u32; 6] {
        self.hex_tris[h as usize]
    }

    pub fn vertex_cells(&self, v: u32) -> VertexCells {
        self.vertex_cells[v as usize]
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// Ids of the edges incident to vertex `v`.
    pub fn vertex_edges(&self, v: u32) -> &[u32] {
        let lo = self.edge_offsets[v as usize] as usize;
        let hi = self.edge_offsets[v as usize + 1] as usize;
        &self.edge_list[lo..hi]
    }

    /// Vertex ids of the inner vertices, in lexicographic order.
    pub fn inner_vertices(&self) -> &[u32] {
        &self.inner
    }

    pub fn is_inner(&self, v: u32) -> bool {
        self.inner_pos[v as usize] != OUTSIDE
    }

    pub fn is_boundary(&self, v: u32) -> bool {
        !self.is_inner(v)
    }

    pub fn boundary_vertices(&self) -> impl Iterator<Item = u32> + '_ {
        (0..self.vertices.len() as u32).filter(move |&v| self.is_boundary(v))
    }

    pub fn flip_site(&self, v: u32) -> Option<&FlipSite> {
        self.flip_sites[v as usize].as_ref()
    }

    /// The lexicographically least boundary vertex; `None` only for the empty region.
    pub fn base_vertex(&self) -> Option<u32> {
        self.base
    }

    /// Neighbors of `v` in the Kagome graph restricted to region edges.
    pub fn vertex_neighbors(&self, v: u32) -> impl Iterator<Item = u32> + '_ {
        self.vertex_edges(v).iter().map(move |&e| {
            let e = &self.edges[e as usize];
            if e.tail == v {
                e.head
            } else {
                e.tail
            }
        })
    }

    /// Inner vertices whose available flip can change when the flip at `v`
    /// is performed: the vertices of every hexagon cornering the two
    /// triangles at `v`.
    pub fn flip_neighborhood(&self, v: u32) -> Vec<u32> {
        let (t1, _, t2, _) = self.vertices[v as usize].incident_cells();
        let mut out: Vec<u32> = t1
            .corners()
            .into_iter()
            .chain(t2.corners())
            .flat_map(|h| (0..6).map(move |k| h.vertex(k)))
            .filter_map(|w| self.vertex_id(w))
            .filter(|&w| self.is_inner(w))
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    pub fn to_json_value(&self) -> RegionJson {
        RegionJson {
            schema_version: Some(REGION_SCHEMA_VERSION),
            family: self.family,
            n: self.n,
            hexes: self.hexes.iter().map(|h| [h.a, h.b]).collect(),
            tris: self.tris.iter().map(|t| (t.a, t.b, t.orient)).collect(),
            base: self.base.map(|b| self.vertices[b as usize]),
        }
    }

    pub fn from_json_value(json: RegionJson) -> Result<Region> {
        let region = Region::from_cells(
            json.family,
            json.n,
            json.hexes.iter().map(|&[a, b]| HexCoord::new(a, b)),
            json.tris.iter().map(|&(a, b, orient)| TriCoord { a, b, orient }),
        )?;
        if let Some(base) = json.base {
            if region.base.map(|b| region.vertex(b)) != Some(base) {
                return Err(Error::InvalidRegion(format!(
                    "base vertex {base} is not the least boundary vertex"
                )));
            }
        }
        Ok(region)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.to_json_value()).expect("region serializes")
    }

    pub fn from_json(s: &str) -> Result<Region> {
        Region::from_json_value(serde_json::from_str(s)?)
    }
}

/// On-disk region schema. Cells are listed in lexicographic order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegionJson {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schema_version: Option<u32>,
    pub family: RegionFamily,
    pub n: u32,
    pub hexes: Vec<[i32; 2]>,
    pub tris: Vec<(i32, i32, Orient)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base: Option<KagomeVertex>,
}

/// The lozenge of size `n`: an `n × n` rhombus of hexagons, each carrying the
/// two triangles of a lozenge tile in the same orientation. Its sides have
/// length `2n` lattice units and the all-parallel lozenge tiling covers it.
pub fn make_lozenge_region(n: u32) -> Result<Region> {
    if n == 0 {
        return Err(Error::InvalidParameter("lozenge size must be at least 1".into()));
    }
    let (hexes, tris) = lozenge_cells(0, 0, n as i32);
    let region = Region::from_cells(RegionFamily::Lozenge, n, hexes, tris)?;
    assert!(region.is_balanced());
    Ok(region)
}

/// Cells of the lozenge with lower-left hexagon `(a0, b0)` and side `m`.
pub(crate) fn lozenge_cells(a0: i32, b0: i32, m: i32) -> (Vec<HexCoord>, Vec<TriCoord>) {
    let mut hexes = Vec::new();
    let mut tris = Vec::new();
    for a in a0..a0 + m {
        for b in b0..b0 + m {
            hexes.push(HexCoord::new(a, b));
            tris.push(TriCoord::up(a, b));
            tris.push(TriCoord::down(a - 1, b - 1));
        }
    }
    (hexes, tris)
}

/// Near-square region with about `n²` tiles, for coupling-time benchmarks.
///
/// Rows `b = 0..h` of `w` hexagons each, shifted left by `⌊b/2⌋` so the rows
/// stack vertically; `h ≈ 1.075 n` and `w ≈ n² / h` make the bounding box as
/// square as the lattice allows. Every hexagon carries a parallel lozenge
/// tile, so the region is tileable and its boundary is flat.
pub fn make_square_region(n: u32) -> Result<Region> {
    if n < 2 {
        return Err(Error::InvalidParameter("square region size must be at least 2".into()));
    }
    let n = n as i32;
    // Width 2w, height √3 h: square when w / h = √3 / 2.
    let rows = ((n as f64) * (2.0 / 3f64.sqrt()).sqrt()).round().max(1.0) as i32;
    let width = ((n * n) as f64 / rows as f64).round().max(1.0) as i32;
    let mut hexes = Vec::new();
    let mut tris = Vec::new();
    for b in 0..rows {
        let a0 = -(b / 2);
        for a in a0..a0 + width {
            hexes.push(HexCoord::new(a, b));
            tris.push(TriCoord::up(a, b));
            tris.push(TriCoord::down(a - 1, b - 1));
        }
    }
    let region = Region::from_cells(RegionFamily::Square, n as u32, hexes, tris)?;
    assert!(region.is_balanced());
    Ok(region)
}

/// Lozenge of `n × n` hexagons whose boundary heights span `3n`.
///
/// The cells are the lower corner quadrant of the lozenge of size `2n`
/// together with the triangles its hexagons hold in that lozenge's
/// height-maximal tiling, so the boundary follows the maximal-slope faces.
pub fn make_nonflat_lozenge(n: u32) -> Result<Region> {
    if n < 2 {
        return Err(Error::InvalidParameter("nonflat lozenge size must be at least 2".into()));
    }
    let (big, top) = nonflat_source(n)?;
    let mut hexes = Vec::new();
    let mut tris = Vec::new();
    for a in 0..n as i32 {
        for b in 0..n as i32 {
            let h = HexCoord::new(a, b);
            hexes.push(h);
            let id = big.hex_id(h).expect("quadrant lies in the lozenge");
            tris.extend(top.tile_triangles(id).map(|t| big.tri(t)));
        }
    }
    let region = Region::from_cells(RegionFamily::Nonflat, n, hexes, tris)?;
    assert!(region.is_balanced());
    Ok(region)
}

/// The lozenge of size `2n` and its height-maximal tiling.
fn nonflat_source(n: u32) -> Result<(Arc<Region>, crate::tiling::Tiling)> {
    let big = Arc::new(make_lozenge_region(2 * n)?);
    let top = crate::minimal::greedy_ascent(
        &crate::tiling::parallel_lozenge_tiling(&big)?,
        crate::tiling::FlipVariant::AllFlips,
    );
    Ok((big, top))
}

/// The tiling a nonflat lozenge inherits from its construction, when
/// `region` has exactly the cells of `make_nonflat_lozenge(n)`.
pub(crate) fn nonflat_seed_tiling(region: &Arc<Region>) -> Option<crate::tiling::Tiling> {
    let n = region.size_param();
    if n < 2 || **region != make_nonflat_lozenge(n).ok()? {
        return None;
    }
    let (big, top) = nonflat_source(n).ok()?;
    let assign = region
        .tris()
        .iter()
        .map(|&t| region.hex_id(big.hex(top.hex_of(big.tri_id(t)?))))
        .collect::<Option<Vec<u32>>>()?;
    crate::tiling::Tiling::from_assignment(Arc::clone(region), assign).ok()
}

/// The region of a named family and size.
pub fn make_region(family: RegionFamily, n: u32) -> Result<Region> {
    match family {
        RegionFamily::Lozenge => make_lozenge_region(n),
        RegionFamily::Square => make_square_region(n),
        RegionFamily::Nonflat => make_nonflat_lozenge(n),
        RegionFamily::Custom => Err(Error::InvalidParameter("custom regions have no constructor".into())),
    }
}
