//! Exhaustive flip graphs of small regions.

use std::collections::{HashMap, VecDeque};
use std::fmt::Write as _;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::height::{height_field, HeightField};
use crate::region::{Region, RegionJson};
use crate::tiling::{find_restrained_tiling, find_tiling, Direction, FlipInfo, FlipVariant, Tiling};

pub const DEFAULT_NODE_CAP: usize = 200_000;
pub const NODE_CAP_ENV: &str = "KAGOME_NODE_CAP";
pub const GRAPH_SCHEMA_VERSION: u32 = 1;

/// The enumeration cap: `KAGOME_NODE_CAP` when set to a valid integer,
/// otherwise [`DEFAULT_NODE_CAP`].
pub fn node_cap_from_env() -> usize {
    std::env::var(NODE_CAP_ENV).ok().and_then(|s| s.trim().parse().ok()).unwrap_or(DEFAULT_NODE_CAP)
}

/// An edge `a < b`; `info` describes the flip as performed from `a`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GraphEdge {
    pub a: u32,
    pub b: u32,
    pub info: FlipInfo,
}

pub struct TilingGraph {
    region: Arc<Region>,
    variant: FlipVariant,
    nodes: Vec<Tiling>,
    edges: Vec<GraphEdge>,
    /// Per node: `(neighbor, edge id)`.
    adj: Vec<Vec<(u32, u32)>>,
    index: HashMap<Vec<u32>, u32>,
}

/// BFS closure of a seed tiling under the flips `variant` admits.
///
/// Nodes are sorted by assignment vector, so node ids do not depend on the
/// seed. Fails with [`Error::CapExceeded`] instead of truncating.
pub fn enumerate(region: &Arc<Region>, variant: FlipVariant, cap: usize) -> Result<TilingGraph> {
    let seed = match variant {
        FlipVariant::AllFlips => find_tiling(region)?,
        FlipVariant::RestrainedFlips => find_restrained_tiling(region)?,
    };
    enumerate_from(seed, variant, cap)
}

pub fn enumerate_from(seed: Tiling, variant: FlipVariant, cap: usize) -> Result<TilingGraph> {
    let region = Arc::clone(seed.region());
    let mut found: HashMap<Vec<u32>, u32> = HashMap::new();
    let mut states = vec![seed.clone()];
    found.insert(seed.assignment().to_vec(), 0);
    let mut raw_edges = Vec::new();
    let mut queue = VecDeque::from([0u32]);
    while let Some(i) = queue.pop_front() {
        let cur = states[i as usize].clone();
        for info in cur.available_flips().filter(|f| variant.admits(f)) {
            let mut next = cur.clone();
            next.swap_at(info.vertex);
            let j = match found.get(next.assignment()) {
                Some(&j) => j,
                None => {
                    if states.len() >= cap {
                        return Err(Error::CapExceeded { cap });
                    }
                    let j = states.len() as u32;
                    found.insert(next.assignment().to_vec(), j);
                    states.push(next);
                    queue.push_back(j);
                    j
                }
            };
            if i < j {
                raw_edges.push((i, j, info));
            }
        }
    }

    // Canonical relabeling.
    let mut order: Vec<u32> = (0..states.len() as u32).collect();
    order.sort_by(|&x, &y| states[x as usize].assignment().cmp(states[y as usize].assignment()));
    let mut relabel = vec![0u32; states.len()];
    for (new, &old) in order.iter().enumerate() {
        relabel[old as usize] = new as u32;
    }
    let mut slots: Vec<Option<Tiling>> = states.into_iter().map(Some).collect();
    let nodes: Vec<Tiling> = order.iter().map(|&old| slots[old as usize].take().unwrap()).collect();
    let mut edges: Vec<GraphEdge> = raw_edges
        .into_iter()
        .map(|(i, j, info)| {
            let (a, b) = (relabel[i as usize], relabel[j as usize]);
            if a < b {
                GraphEdge { a, b, info }
            } else {
                GraphEdge { a: b, b: a, info: FlipInfo { direction: info.direction.reverse(), fish_delta: -info.fish_delta, ..info } }
            }
        })
        .collect();
    edges.sort_by_key(|e| (e.a, e.b));
    let mut adj = vec![Vec::new(); nodes.len()];
    for (k, e) in edges.iter().enumerate() {
        adj[e.a as usize].push((e.b, k as u32));
        adj[e.b as usize].push((e.a, k as u32));
    }
    let index = nodes.iter().enumerate().map(|(i, t)| (t.assignment().to_vec(), i as u32)).collect();
    Ok(TilingGraph { region, variant, nodes, edges, adj, index })
}

impl TilingGraph {
    pub fn region(&self) -> &Arc<Region> {
        &self.region
    }

    pub fn variant(&self) -> FlipVariant {
        self.variant
    }

    pub fn nodes(&self) -> &[Tiling] {
        &self.nodes
    }

    pub fn node(&self, i: u32) -> &Tiling {
        &self.nodes[i as usize]
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn edges(&self) -> &[GraphEdge] {
        &self.edges
    }

    pub fn neighbors(&self, i: u32) -> &[(u32, u32)] {
        &self.adj[i as usize]
    }

    pub fn node_id(&self, t: &Tiling) -> Option<u32> {
        self.index.get(t.assignment()).copied()
    }

    /// Id of the node reached from `i` by the flip at vertex `v`.
    pub fn flip_target(&self, i: u32, v: u32) -> Option<u32> {
        self.adj[i as usize].iter().find(|&&(_, e)| self.edges[e as usize].info.vertex == v).map(|&(j, _)| j)
    }

    pub fn height_fields(&self) -> Result<Vec<HeightField>> {
        self.nodes.par_iter().map(height_field).collect()
    }

    pub fn total_heights(&self) -> Result<Vec<i64>> {
        Ok(self.height_fields()?.iter().map(HeightField::total).collect())
    }

    /// Nodes with no height-decreasing flip in the graph, and nodes with no
    /// height-increasing one.
    pub fn local_extremes(&self) -> (Vec<u32>, Vec<u32>) {
        let mut has_down = vec![false; self.nodes.len()];
        let mut has_up = vec![false; self.nodes.len()];
        for e in &self.edges {
            let (down, up) = match e.info.direction {
                Direction::Lower => (e.a, e.b),
                Direction::Raise => (e.b, e.a),
            };
            has_down[down as usize] = true;
            has_up[up as usize] = true;
        }
        let pick = |flags: &[bool]| (0..self.nodes.len() as u32).filter(|&i| !flags[i as usize]).collect();
        (pick(&has_down), pick(&has_up))
    }

    /// Node ids by connected component.
    pub fn components(&self) -> Vec<Vec<u32>> {
        let mut comp = vec![u32::MAX; self.nodes.len()];
        let mut out = Vec::new();
        for s in 0..self.nodes.len() as u32 {
            if comp[s as usize] != u32::MAX {
                continue;
            }
            let id = out.len() as u32;
            let mut members = vec![s];
            comp[s as usize] = id;
            let mut k = 0;
            while k < members.len() {
                for &(w, _) in &self.adj[members[k] as usize] {
                    if comp[w as usize] == u32::MAX {
                        comp[w as usize] = id;
                        members.push(w);
                    }
                }
                k += 1;
            }
            members.sort_unstable();
            out.push(members);
        }
        out
    }

    pub fn is_connected(&self) -> bool {
        self.components().len() <= 1
    }

    pub fn bfs_distances(&self, s: u32) -> Vec<u32> {
        let mut dist = vec![u32::MAX; self.nodes.len()];
        dist[s as usize] = 0;
        let mut queue = VecDeque::from([s]);
        while let Some(v) = queue.pop_front() {
            for &(w, _) in &self.adj[v as usize] {
                if dist[w as usize] == u32::MAX {
                    dist[w as usize] = dist[v as usize] + 1;
                    queue.push_back(w);
                }
            }
        }
        dist
    }

    pub fn to_json_value(&self) -> Result<GraphJson> {
        let heights = self.total_heights()?;
        Ok(GraphJson {
            schema_version: GRAPH_SCHEMA_VERSION,
            region: self.region.to_json_value(),
            variant: self.variant,
            nodes: self
                .nodes
                .iter()
                .zip(heights)
                .enumerate()
                .map(|(i, (t, h))| GraphNodeJson {
                    id: i as u32,
                    total_height: h,
                    fish: t.fish_count(),
                    assign: t.to_json_value().assign,
                    neighbors: self.adj[i].iter().map(|&(w, _)| w).collect(),
                })
                .collect(),
            edges: self
                .edges
                .iter()
                .map(|e| GraphEdgeJson {
                    a: e.a,
                    b: e.b,
                    vertex: self.region.vertex(e.info.vertex),
                    direction: e.info.direction,
                    fish_delta: e.info.fish_delta,
                    restrained: e.info.restrained,
                })
                .collect(),
        })
    }

    /// Graphviz rendering; restrained flips are solid, fish-involving flips dashed.
    pub fn to_dot(&self) -> String {
        let mut s = String::from("graph tilings {\n  node [shape=circle, fontsize=9];\n");
        for (i, t) in self.nodes.iter().enumerate() {
            let (tr, fi, lo) = t.type_counts();
            let _ = writeln!(s, "  n{i} [label=\"{i}\", tooltip=\"trapeze {tr} fish {fi} lozenge {lo}\"];");
        }
        for e in &self.edges {
            let (kind, style) = if e.info.restrained { ("restrained", "solid") } else { ("fish", "dashed") };
            let _ = writeln!(s, "  n{} -- n{} [kind={kind}, style={style}];", e.a, e.b);
        }
        s.push_str("}\n");
        s
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GraphJson {
    pub schema_version: u32,
    pub region: RegionJson,
    pub variant: FlipVariant,
    pub nodes: Vec<GraphNodeJson>,
    pub edges: Vec<GraphEdgeJson>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GraphNodeJson {
    pub id: u32,
    pub total_height: i64,
    pub fish: usize,
    pub assign: Vec<((i32, i32, crate::lattice::Orient), [i32; 2])>,
    pub neighbors: Vec<u32>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GraphEdgeJson {
    pub a: u32,
    pub b: u32,
    pub vertex: crate::lattice::KagomeVertex,
    pub direction: Direction,
    pub fish_delta: i8,
    pub restrained: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diameter {
    /// Largest eccentricity over all components.
    pub diameter: u32,
    pub connected: bool,
    pub component_diameters: Vec<u32>,
}

/// Exact diameter by breadth-first search from every node.
pub fn diameter(graph: &TilingGraph) -> Diameter {
    let comps = graph.components();
    let component_diameters: Vec<u32> = comps
        .iter()
        .map(|members| {
            members
                .par_iter()
                .map(|&s| graph.bfs_distances(s).into_iter().filter(|&d| d != u32::MAX).max().unwrap_or(0))
                .max()
                .unwrap_or(0)
        })
        .collect();
    Diameter {
        diameter: component_diameters.iter().copied().max().unwrap_or(0),
        connected: comps.len() <= 1,
        component_diameters,
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DistinctHeights {
    /// Per region vertex, the number of distinct heights across all nodes.
    pub per_vertex: Vec<usize>,
    pub max: usize,
}

pub fn check_distinct_heights(graph: &TilingGraph) -> Result<DistinctHeights> {
    let fields = graph.height_fields()?;
    let nv = graph.region.num_vertices();
    let per_vertex: Vec<usize> = (0..nv)
        .map(|v| {
            let mut hs: Vec<i32> = fields.iter().map(|f| f.values()[v]).collect();
            hs.sort_unstable();
            hs.dedup();
            hs.len()
        })
        .collect();
    let max = per_vertex.iter().copied().max().unwrap_or(0);
    Ok(DistinctHeights { per_vertex, max })
}
