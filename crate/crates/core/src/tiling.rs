//! Tilings as triangle → hexagon assignments, prototile classification and
//! flips.

use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{slot_separation, HexCoord, Orient, TriCoord};
use crate::region::{FlipSite, Region, RegionFamily, RegionJson, OUTSIDE};

/// Prototile shape, determined by the circular separation of the two
/// triangle-bearing edges of the hexagon.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TileType {
    /// Separation 2: the 1-2-3-2 trapezoid.
    Trapeze,
    /// Separation 1: the non-convex tile.
    Fish,
    /// Separation 3: the side-2 rhombus.
    Lozenge,
}

impl TileType {
    pub fn from_separation(d: usize) -> Option<TileType> {
        match d {
            1 => Some(TileType::Fish),
            2 => Some(TileType::Trapeze),
            3 => Some(TileType::Lozenge),
            _ => None,
        }
    }

    /// Type of a tile given the 6-bit slot mask of its hexagon.
    pub fn from_mask(mask: u8) -> Option<TileType> {
        if mask.count_ones() != 2 {
            return None;
        }
        let i = mask.trailing_zeros() as usize;
        let j = 7 - mask.leading_zeros() as usize;
        TileType::from_separation(slot_separation(i, j))
    }

    pub fn is_restrained(self) -> bool {
        self != TileType::Fish
    }
}

/// Orientation class of a tile: which slot pair (up to the symmetry of the
/// tile type) its triangles occupy. Lozenges have 3 classes, trapezes and
/// fish 6.
pub fn orientation_class(mask: u8) -> usize {
    let i = mask.trailing_zeros() as usize;
    let j = 7 - mask.leading_zeros() as usize;
    // Anchor on the slot from which the pair is reached counter-clockwise.
    if j - i <= 3 {
        i
    } else {
        j
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    /// Decreases the height at the vertex by 3.
    Lower,
    /// Increases the height at the vertex by 3.
    Raise,
}

impl Direction {
    pub fn sign(self) -> i32 {
        match self {
            Direction::Lower => -1,
            Direction::Raise => 1,
        }
    }

    pub fn reverse(self) -> Direction {
        match self {
            Direction::Lower => Direction::Raise,
            Direction::Raise => Direction::Lower,
        }
    }
}

/// Which flips a procedure may use.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FlipVariant {
    AllFlips,
    RestrainedFlips,
}

impl FlipVariant {
    pub fn admits(self, info: &FlipInfo) -> bool {
        match self {
            FlipVariant::AllFlips => true,
            FlipVariant::RestrainedFlips => info.restrained,
        }
    }
}

/// The flip available at a vertex.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct FlipInfo {
    /// Region vertex id.
    pub vertex: u32,
    pub direction: Direction,
    /// Change in the number of fish tiles.
    pub fish_delta: i8,
    /// No fish tile before or after the flip.
    pub restrained: bool,
}

/// The flip at a site whose triangles sit in its hexagons (`straight` or
/// crossed), given the current slot masks of the two hexagons.
pub(crate) fn site_flip(site: &FlipSite, v: u32, straight: bool, m0: u8, m1: u8) -> FlipInfo {
    let direction = if straight == site.straight_is_low { Direction::Raise } else { Direction::Lower };
    let bit = |s: u8| 1u8 << s;
    let (n0, n1) = if straight {
        (m0 & !bit(site.slot[0][0]) | bit(site.slot[1][0]), m1 & !bit(site.slot[1][1]) | bit(site.slot[0][1]))
    } else {
        (m0 & !bit(site.slot[1][0]) | bit(site.slot[0][0]), m1 & !bit(site.slot[0][1]) | bit(site.slot[1][1]))
    };
    let fish = |m: u8| (TileType::from_mask(m) == Some(TileType::Fish)) as i8;
    let before = fish(m0) + fish(m1);
    let after = fish(n0) + fish(n1);
    FlipInfo { vertex: v, direction, fish_delta: after - before, restrained: before == 0 && after == 0 }
}

#[derive(Clone)]
pub struct Tiling {
    region: Arc<Region>,
    assign: Vec<u32>,
    masks: Vec<u8>,
}

impl fmt::Debug for Tiling {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Tiling").field("region", &self.region).field("assign", &self.assign).finish()
    }
}

impl PartialEq for Tiling {
    fn eq(&self, other: &Self) -> bool {
        self.assign == other.assign && *self.region == *other.region
    }
}

impl Eq for Tiling {}

impl Hash for Tiling {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.assign.hash(state);
    }
}

impl Tiling {
    /// Build a tiling from a triangle-id → hexagon-id assignment, validating it.
    pub fn from_assignment(region: Arc<Region>, assign: Vec<u32>) -> Result<Tiling> {
        if assign.len() != region.num_tris() {
            return Err(Error::InvalidTiling(format!(
                "{} assignments for {} triangles",
                assign.len(),
                region.num_tris()
            )));
        }
        let mut masks = vec![0u8; region.num_hexes()];
        for (t, &h) in assign.iter().enumerate() {
            let hexes = region.tri_hexes(t as u32);
            let Some(k) = hexes.iter().position(|&x| x == h && x != OUTSIDE) else {
                return Err(Error::InvalidTiling(format!(
                    "triangle {} is not assigned to an adjacent hexagon of the region",
                    region.tri(t as u32)
                )));
            };
            masks[h as usize] |= 1 << region.tri_slots(t as u32)[k];
        }
        if let Some(h) = masks.iter().position(|m| m.count_ones() != 2) {
            return Err(Error::InvalidTiling(format!(
                "hexagon {} carries {} triangles",
                region.hex(h as u32),
                masks[h].count_ones()
            )));
        }
        Ok(Tiling { region, assign, masks })
    }

    pub fn region(&self) -> &Arc<Region> {
        &self.region
    }

    /// Hexagon id assigned to each triangle id.
    pub fn assignment(&self) -> &[u32] {
        &self.assign
    }

    pub fn hex_of(&self, t: u32) -> u32 {
        self.assign[t as usize]
    }

    /// 6-bit mask of the slots of hexagon `h` whose triangles belong to its tile.
    pub fn slot_mask(&self, h: u32) -> u8 {
        self.masks[h as usize]
    }

    /// The two triangles of the tile at hexagon `h`.
    pub fn tile_triangles(&self, h: u32) -> [u32; 2] {
        let tris = self.region.hex_tris(h);
        let m = self.masks[h as usize];
        let i = m.trailing_zeros() as usize;
        let j = 7 - m.leading_zeros() as usize;
        [tris[i], tris[j]]
    }

    pub fn tile_type(&self, h: u32) -> TileType {
        TileType::from_mask(self.masks[h as usize]).expect("valid tiling has two triangles per hexagon")
    }

    pub fn fish_count(&self) -> usize {
        self.masks.iter().filter(|&&m| TileType::from_mask(m) == Some(TileType::Fish)).count()
    }

    pub fn is_restrained(&self) -> bool {
        self.fish_count() == 0
    }

    /// Tile counts as `(trapeze, fish, lozenge)`.
    pub fn type_counts(&self) -> (usize, usize, usize) {
        let mut c = (0, 0, 0);
        for &m in &self.masks {
            match TileType::from_mask(m) {
                Some(TileType::Trapeze) => c.0 += 1,
                Some(TileType::Fish) => c.1 += 1,
                Some(TileType::Lozenge) => c.2 += 1,
                None => unreachable!(),
            }
        }
        c
    }

    /// The flip available at vertex `v`, if any.
    pub fn flip_info(&self, v: u32) -> Option<FlipInfo> {
        let site = self.region.flip_site(v)?;
        let a0 = self.assign[site.t[0] as usize];
        let a1 = self.assign[site.t[1] as usize];
        let straight = a0 == site.h[0] && a1 == site.h[1];
        let crossed = a0 == site.h[1] && a1 == site.h[0];
        if !straight && !crossed {
            return None;
        }
        let (m0, m1) = (self.masks[site.h[0] as usize], self.masks[site.h[1] as usize]);
        Some(site_flip(site, v, straight, m0, m1))
    }

    /// The flip at `v`, or an error naming why there is none.
    pub fn flip_at(&self, v: u32) -> Result<FlipInfo> {
        if (v as usize) >= self.region.num_vertices() || !self.region.is_inner(v) {
            return Err(Error::NotInner(self.vertex_name(v)));
        }
        self.flip_info(v).ok_or_else(|| Error::NotFlippable(self.vertex_name(v)))
    }

    fn vertex_name(&self, v: u32) -> String {
        if (v as usize) < self.region.num_vertices() {
            self.region.vertex(v).to_string()
        } else {
            format!("#{v}")
        }
    }

    /// Perform the flip at `v` in place.
    pub fn flip_in_place(&mut self, v: u32) -> Result<FlipInfo> {
        let info = self.flip_at(v)?;
        self.swap_at(v);
        Ok(info)
    }

    /// Swap the two triangles at a vertex already known to be flippable.
    pub(crate) fn swap_at(&mut self, v: u32) {
        let site = *self.region.flip_site(v).expect("inner vertex");
        let (t0, t1) = (site.t[0] as usize, site.t[1] as usize);
        let straight = self.assign[t0] == site.h[0];
        let bit = |s: u8| 1u8 << s;
        let (h0, h1) = (site.h[0] as usize, site.h[1] as usize);
        if straight {
            self.masks[h0] = self.masks[h0] & !bit(site.slot[0][0]) | bit(site.slot[1][0]);
            self.masks[h1] = self.masks[h1] & !bit(site.slot[1][1]) | bit(site.slot[0][1]);
        } else {
            self.masks[h0] = self.masks[h0] & !bit(site.slot[1][0]) | bit(site.slot[0][0]);
            self.masks[h1] = self.masks[h1] & !bit(site.slot[0][1]) | bit(site.slot[1][1]);
        }
        self.assign.swap(t0, t1);
    }

    /// A new tiling with the flip at `v` applied.
    pub fn apply_flip(&self, v: u32) -> Result<Tiling> {
        let mut next = self.clone();
        next.flip_in_place(v)?;
        Ok(next)
    }

    /// All flips available in this tiling, by vertex id.
    pub fn available_flips(&self) -> impl Iterator<Item = FlipInfo> + '_ {
        self.region.inner_vertices().iter().filter_map(|&v| self.flip_info(v))
    }

    pub fn classify_tile(&self, h: HexCoord) -> Result<TileType> {
        let id = self
            .region
            .hex_id(h)
            .ok_or_else(|| Error::InvalidParameter(format!("hexagon {h} is not in the region")))?;
        TileType::from_mask(self.masks[id as usize])
            .ok_or_else(|| Error::InvalidTiling(format!("hexagon {h} does not carry two triangles")))
    }

    pub fn to_json_value(&self) -> TilingJson {
        let r = &self.region;
        TilingJson {
            schema_version: Some(TILING_SCHEMA_VERSION),
            region: r.to_json_value(),
            assign: self
                .assign
                .iter()
                .enumerate()
                .map(|(t, &h)| {
                    let t = r.tri(t as u32);
                    let h = r.hex(h);
                    ((t.a, t.b, t.orient), [h.a, h.b])
                })
                .collect(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.to_json_value()).expect("tiling serializes")
    }

    /// Parse a tiling. When `region` is given, the embedded region must match it.
    pub fn from_json_value(json: TilingJson, region: Option<Arc<Region>>) -> Result<Tiling> {
        let parsed = Region::from_json_value(json.region)?;
        let region = match region {
            Some(r) if *r == parsed => r,
            Some(_) => return Err(Error::RegionMismatch),
            None => Arc::new(parsed),
        };
        let mut assign = vec![OUTSIDE; region.num_tris()];
        for ((a, b, orient), [ha, hb]) in json.assign {
            let t = region
                .tri_id(TriCoord { a, b, orient })
                .ok_or_else(|| Error::InvalidTiling(format!("triangle {}({a},{b}) not in region", orient.letter())))?;
            let h = region
                .hex_id(HexCoord::new(ha, hb))
                .ok_or_else(|| Error::InvalidTiling(format!("hexagon ({ha},{hb}) not in region")))?;
            assign[t as usize] = h;
        }
        Tiling::from_assignment(region, assign)
    }

    pub fn from_json(s: &str) -> Result<Tiling> {
        Tiling::from_json_value(serde_json::from_str(s)?, None)
    }
}

pub const TILING_SCHEMA_VERSION: u32 = 1;

/// On-disk tiling schema: the region plus `[triangle, hexagon]` pairs in
/// lexicographic triangle order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TilingJson {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schema_version: Option<u32>,
    pub region: RegionJson,
    pub assign: Vec<((i32, i32, Orient), [i32; 2])>,
}

/// The tiling where every hexagon `(a, b)` takes `Up(a, b)` and
/// `Down(a - 1, b - 1)`, i.e. all tiles are parallel lozenges. Fails unless
/// the region is built from such tiles.
pub fn parallel_lozenge_tiling(region: &Arc<Region>) -> Result<Tiling> {
    let mut assign = vec![OUTSIDE; region.num_tris()];
    for (h, hex) in region.hexes().iter().enumerate() {
        for t in [TriCoord::up(hex.a, hex.b), TriCoord::down(hex.a - 1, hex.b - 1)] {
            let Some(t) = region.tri_id(t) else {
                return Err(Error::InvalidTiling(format!("hexagon {hex} lacks its lozenge triangles")));
            };
            assign[t as usize] = h as u32;
        }
    }
    Tiling::from_assignment(Arc::clone(region), assign)
}

/// A tiling known from the construction of the region's family, if any.
fn construction_tiling(region: &Arc<Region>) -> Option<Tiling> {
    match region.family() {
        RegionFamily::Lozenge | RegionFamily::Square => parallel_lozenge_tiling(region).ok(),
        RegionFamily::Nonflat => crate::region::nonflat_seed_tiling(region),
        RegionFamily::Custom => None,
    }
}

/// Find some tiling of the region: the family's construction tiling when
/// it applies, exact-cover backtracking otherwise.
pub fn find_tiling(region: &Arc<Region>) -> Result<Tiling> {
    match construction_tiling(region) {
        Some(t) => Ok(t),
        None => ExactCover::new(region, true).solve(),
    }
}

/// Find some tiling using only trapeze and lozenge tiles.
pub fn find_restrained_tiling(region: &Arc<Region>) -> Result<Tiling> {
    match construction_tiling(region).filter(Tiling::is_restrained) {
        Some(t) => Ok(t),
        None => ExactCover::new(region, false).solve(),
    }
}

/// Algorithm X over cells (hexagons then triangles) and tile placements.
/// Always branches on the uncovered cell with the fewest live placements,
/// lowest index first, so the result is deterministic.
struct ExactCover<'a> {
    region: &'a Arc<Region>,
    /// Placement → (hexagon, slot i, slot j).
    rows: Vec<(u32, u8, u8)>,
    row_cells: Vec<[u32; 3]>,
    cell_rows: Vec<Vec<u32>>,
    live: Vec<bool>,
    count: Vec<u32>,
    covered: Vec<bool>,
}

impl<'a> ExactCover<'a> {
    fn new(region: &'a Arc<Region>, allow_fish: bool) -> Self {
        let nh = region.num_hexes();
        let ncells = nh + region.num_tris();
        let mut rows = Vec::new();
        let mut row_cells = Vec::new();
        let mut cell_rows = vec![Vec::new(); ncells];
        for h in 0..nh as u32 {
            let tris = region.hex_tris(h);
            // Lozenges first, then trapezes, then fish: any order is correct.
            for d in [3, 2, 1] {
                if d == 1 && !allow_fish {
                    continue;
                }
                for i in 0..6usize {
                    let j = (i + d) % 6;
                    if d == 3 && i >= 3 {
                        continue;
                    }
                    let (ti, tj) = (tris[i], tris[j]);
                    if ti == OUTSIDE || tj == OUTSIDE {
                        continue;
                    }
                    let r = rows.len() as u32;
                    let cells = [h, nh as u32 + ti, nh as u32 + tj];
                    for c in cells {
                        cell_rows[c as usize].push(r);
                    }
                    rows.push((h, i as u8, j as u8));
                    row_cells.push(cells);
                }
            }
        }
        let count = cell_rows.iter().map(|r| r.len() as u32).collect();
        ExactCover {
            region,
            live: vec![true; rows.len()],
            rows,
            row_cells,
            cell_rows,
            count,
            covered: vec![false; ncells],
        }
    }

    fn solve(mut self) -> Result<Tiling> {
        let region = self.region;
        if !region.is_balanced() {
            return Err(Error::NotTileable);
        }
        let mut chosen = Vec::new();
        if !self.search(&mut chosen) {
            return Err(Error::NotTileable);
        }
        let mut assign = vec![OUTSIDE; region.num_tris()];
        for r in chosen {
            let (h, i, j) = self.rows[r as usize];
            let tris = region.hex_tris(h);
            assign[tris[i as usize] as usize] = h;
            assign[tris[j as usize] as usize] = h;
        }
        Tiling::from_assignment(Arc::clone(region), assign)
    }

    fn search(&mut self, chosen: &mut Vec<u32>) -> bool {
        let mut best: Option<(u32, usize)> = None;
        for (c, &cov) in self.covered.iter().enumerate() {
            if !cov && best.is_none_or(|(n, _)| self.count[c] < n) {
                best = Some((self.count[c], c));
                if self.count[c] == 0 {
                    return false;
                }
            }
        }
        let Some((_, col)) = best else {
            return true;
        };
        let candidates: Vec<u32> =
            self.cell_rows[col].iter().copied().filter(|&r| self.live[r as usize]).collect();
        for r in candidates {
            let undo = self.cover(r);
            chosen.push(r);
            if self.search(chosen) {
                return true;
            }
            chosen.pop();
            self.uncover(r, undo);
        }
        false
    }

    fn cover(&mut self, r: u32) -> Vec<u32> {
        let mut killed = Vec::new();
        for c in self.row_cells[r as usize] {
            self.covered[c as usize] = true;
            for i in 0..self.cell_rows[c as usize].len() {
                let other = self.cell_rows[c as usize][i];
                if self.live[other as usize] {
                    self.live[other as usize] = false;
                    killed.push(other);
                    for oc in self.row_cells[other as usize] {
                        self.count[oc as usize] -= 1;
                    }
                }
            }
        }
        killed
    }

    fn uncover(&mut self, r: u32, killed: Vec<u32>) {
        for other in killed.into_iter().rev() {
            self.live[other as usize] = true;
            for oc in self.row_cells[other as usize] {
                self.count[oc as usize] += 1;
            }
        }
        for c in self.row_cells[r as usize] {
            self.covered[c as usize] = false;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::region::{make_lozenge_region, RegionFamily};

    fn lozenge(n: u32) -> Arc<Region> {
        Arc::new(make_lozenge_region(n).unwrap())
    }

    /// Independent validity check: count triangles per hexagon from scratch.
    fn is_valid(t: &Tiling) -> bool {
        let r = t.region();
        let mut count = vec![0; r.num_hexes()];
        for (ti, &h) in t.assignment().iter().enumerate() {
            let tri = r.tri(ti as u32);
            if !tri.corners().contains(&r.hex(h)) {
                return false;
            }
            count[h as usize] += 1;
        }
        count.iter().all(|&c| c == 2)
    }

    #[test]
    fn lozenge_one_has_the_single_lozenge_tile() {
        let t = find_tiling(&lozenge(1)).unwrap();
        assert_eq!(t.type_counts(), (0, 0, 1));
    }

    #[test]
    fn find_tiling_is_valid_on_lozenges() {
        for n in 1..=6 {
            let t = find_tiling(&lozenge(n)).unwrap();
            assert!(is_valid(&t));
            let r = find_restrained_tiling(&lozenge(n)).unwrap();
            assert!(is_valid(&r) && r.is_restrained());
        }
    }

    #[test]
    fn unbalanced_region_is_not_tileable() {
        let hexes = [HexCoord::new(0, 0)];
        let tris = [TriCoord::up(0, 0)];
        let region = Arc::new(Region::from_cells(RegionFamily::Custom, 0, hexes, tris).unwrap());
        assert!(matches!(find_tiling(&region), Err(Error::NotTileable)));
    }

    #[test]
    fn classification_by_separation() {
        assert_eq!(TileType::from_mask(0b001001), Some(TileType::Lozenge));
        assert_eq!(TileType::from_mask(0b000101), Some(TileType::Trapeze));
        assert_eq!(TileType::from_mask(0b100001), Some(TileType::Fish));
        assert_eq!(TileType::from_mask(0b000011), Some(TileType::Fish));
        assert_eq!(TileType::from_mask(0b010001), Some(TileType::Trapeze));
        assert_eq!(TileType::from_mask(0b000111), None);
        // every 2-subset of six slots falls in exactly one class
        let mut counts = [0; 3];
        for m in 0u8..64 {
            if m.count_ones() == 2 {
                counts[TileType::from_mask(m).unwrap() as usize] += 1;
            }
        }
        assert_eq!(counts, [6, 6, 3]);
    }

    #[test]
    fn orientation_classes() {
        let mut lozenge = std::collections::BTreeSet::new();
        let mut fish = std::collections::BTreeSet::new();
        for m in 0u8..64 {
            match TileType::from_mask(m) {
                Some(TileType::Lozenge) => {
                    lozenge.insert(orientation_class(m));
                }
                Some(TileType::Fish) => {
                    fish.insert(orientation_class(m));
                }
                _ => {}
            }
        }
        assert_eq!(lozenge.len(), 3);
        assert_eq!(fish.len(), 6);
    }

    #[test]
    fn flip_is_an_involution() {
        let region = lozenge(3);
        let t = find_tiling(&region).unwrap();
        let mut flipped_any = false;
        for &v in region.inner_vertices() {
            if let Some(info) = t.flip_info(v) {
                let u = t.apply_flip(v).unwrap();
                assert!(is_valid(&u));
                let back = u.flip_at(v).unwrap();
                assert_eq!(back.direction, info.direction.reverse());
                assert_eq!(back.fish_delta, -info.fish_delta);
                assert_eq!(u.apply_flip(v).unwrap(), t);
                // exactly two assignment entries change
                let diff = t.assignment().iter().zip(u.assignment()).filter(|(a, b)| a != b).count();
                assert_eq!(diff, 2);
                assert_eq!(u.fish_count() as i64 - t.fish_count() as i64, info.fish_delta as i64);
                flipped_any = true;
            }
        }
        assert!(flipped_any);
    }

    #[test]
    fn flip_errors() {
        let region = lozenge(2);
        let t = find_tiling(&region).unwrap();
        let boundary = region.base_vertex().unwrap();
        assert!(matches!(t.flip_at(boundary), Err(Error::NotInner(_))));
        let stuck = region.inner_vertices().iter().find(|&&v| t.flip_info(v).is_none());
        if let Some(&v) = stuck {
            assert!(matches!(t.apply_flip(v), Err(Error::NotFlippable(_))));
        }
    }

    #[test]
    fn json_round_trip() {
        let region = lozenge(3);
        let t = find_tiling(&region).unwrap();
        let back = Tiling::from_json(&t.to_json()).unwrap();
        assert_eq!(back, t);
        let shared = Tiling::from_json_value(t.to_json_value(), Some(Arc::clone(&region))).unwrap();
        assert!(Arc::ptr_eq(shared.region(), &region));
    }

    #[test]
    fn invalid_assignment_is_rejected() {
        let region = lozenge(2);
        let t = find_tiling(&region).unwrap();
        let mut assign = t.assignment().to_vec();
        assign.swap(0, 1);
        assign[0] = assign[2];
        assert!(Tiling::from_assignment(Arc::clone(&region), assign).is_err());
    }
}
