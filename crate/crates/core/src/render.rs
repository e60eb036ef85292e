//! SVG output.
//!
//! Hexagons have unit edges and centers at `a·(2,0) + b·(1,√3)`; a tile is
//! its hexagon plus the two attached triangles, so every tile has area
//! `8·√3/4`.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::height::height_field;
use crate::lattice::{HexCoord, KagomeVertex};
use crate::tiling::{orientation_class, Direction, TileType, Tiling};

const SQRT3: f64 = 1.732_050_807_568_877_2;

/// Area of the unit equilateral triangle.
pub const UNIT_TRIANGLE_AREA: f64 = SQRT3 / 4.0;

/// Fill colors per tile type, indexed by orientation class.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Palette {
    pub trapeze: [String; 6],
    pub fish: [String; 6],
    pub lozenge: [String; 3],
}

impl Palette {
    pub fn color(&self, ty: TileType, class: usize) -> &str {
        match ty {
            TileType::Trapeze => &self.trapeze[class % 6],
            TileType::Fish => &self.fish[class % 6],
            TileType::Lozenge => &self.lozenge[class % 3],
        }
    }
}

impl Default for Palette {
    fn default() -> Self {
        let s = |xs: &[&str]| xs.iter().map(|x| x.to_string()).collect::<Vec<_>>();
        Palette {
            trapeze: s(&["#2b6cb0", "#3182ce", "#4299e1", "#63b3ed", "#90cdf4", "#bee3f8"]).try_into().unwrap(),
            fish: s(&["#c53030", "#e53e3e", "#f56565", "#fc8181", "#feb2b2", "#9b2c2c"]).try_into().unwrap(),
            lozenge: s(&["#d69e2e", "#38a169", "#805ad5"]).try_into().unwrap(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RenderStyle {
    pub palette: Palette,
    /// Label every Kagome vertex with its height.
    pub show_heights: bool,
    /// Mark inner vertices where a flip is available (filled: lowers,
    /// hollow: raises).
    pub show_flips: bool,
    /// Pixels per lattice unit.
    pub scale: f64,
    pub stroke: String,
    pub stroke_width: f64,
}

impl Default for RenderStyle {
    fn default() -> Self {
        RenderStyle {
            palette: Palette::default(),
            show_heights: false,
            show_flips: false,
            scale: 20.0,
            stroke: "#1a202c".into(),
            stroke_width: 0.05,
        }
    }
}

impl RenderStyle {
    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("style serializes")
    }
}

pub fn vertex_position(v: KagomeVertex) -> (f64, f64) {
    let (x2, y2) = v.doubled_position();
    (x2 as f64 / 2.0, y2 as f64 * SQRT3 / 2.0)
}

/// Outline of the tile on hexagon `h` with triangle slot mask `mask`,
/// counter-clockwise.
pub fn tile_polygon(h: HexCoord, mask: u8) -> Vec<(f64, f64)> {
    let tris = h.triangles();
    let mut out = Vec::with_capacity(8);
    for k in 0..6 {
        let (p, q) = (h.vertex(k), h.vertex((k + 1) % 6));
        out.push(vertex_position(p));
        if mask & (1 << k) != 0 {
            let apex = tris[k].vertices().into_iter().find(|&w| w != p && w != q).expect("triangle has three vertices");
            out.push(vertex_position(apex));
        }
    }
    out
}

/// Shoelace area of a simple polygon.
pub fn polygon_area(poly: &[(f64, f64)]) -> f64 {
    let n = poly.len();
    (0..n).map(|i| {
        let (a, b) = (poly[i], poly[(i + 1) % n]);
        a.0 * b.1 - b.0 * a.1
    })
    .sum::<f64>()
    .abs()
        / 2.0
}

/// Polygons of all tiles, with their type and orientation class.
pub fn tile_polygons(tiling: &Tiling) -> Vec<(TileType, usize, Vec<(f64, f64)>)> {
    let region = tiling.region();
    (0..region.num_hexes() as u32)
        .map(|h| {
            let mask = tiling.slot_mask(h);
            (tiling.tile_type(h), orientation_class(mask), tile_polygon(region.hex(h), mask))
        })
        .collect()
}

/// Sum of the rendered tile areas.
pub fn rendered_area(tiling: &Tiling) -> f64 {
    tile_polygons(tiling).iter().map(|(_, _, p)| polygon_area(p)).sum()
}

struct Canvas {
    scale: f64,
    min_x: f64,
    max_y: f64,
    width: f64,
    height: f64,
}

impl Canvas {
    fn new<'a>(points: impl Iterator<Item = &'a (f64, f64)>, scale: f64) -> Canvas {
        let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
        for &(x, y) in points {
            x0 = x0.min(x);
            x1 = x1.max(x);
            y0 = y0.min(y);
            y1 = y1.max(y);
        }
        if !x0.is_finite() {
            (x0, x1, y0, y1) = (0.0, 0.0, 0.0, 0.0);
        }
        let pad = 0.5;
        Canvas {
            scale,
            min_x: x0 - pad,
            max_y: y1 + pad,
            width: (x1 - x0 + 2.0 * pad) * scale,
            height: (y1 - y0 + 2.0 * pad) * scale,
        }
    }

    // SVG's y axis points down.
    fn map(&self, (x, y): (f64, f64)) -> (f64, f64) {
        ((x - self.min_x) * self.scale, (self.max_y - y) * self.scale)
    }

    fn header(&self, out: &mut String) {
        let _ = writeln!(out, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
        let _ = writeln!(
            out,
            r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{w:.3}" height="{h:.3}" viewBox="0 0 {w:.3} {h:.3}">"#,
            w = self.width,
            h = self.height
        );
    }

    fn path(&self, out: &mut String, poly: &[(f64, f64)], fill: &str, style: &RenderStyle, class: &str) {
        let mut d = String::new();
        for (i, &p) in poly.iter().enumerate() {
            let (x, y) = self.map(p);
            let _ = write!(d, "{}{x:.3},{y:.3}", if i == 0 { "M" } else { " L" });
        }
        let _ = writeln!(
            out,
            r#"<path class="{class}" d="{d} Z" fill="{fill}" stroke="{}" stroke-width="{:.3}"/>"#,
            style.stroke,
            style.stroke_width * self.scale
        );
    }
}

fn type_name(ty: TileType) -> &'static str {
    match ty {
        TileType::Trapeze => "trapeze",
        TileType::Fish => "fish",
        TileType::Lozenge => "lozenge",
    }
}

/// The tiling as an SVG document: one `<path>` per tile, then optional
/// height labels and flip markers. Output depends only on the inputs.
pub fn render(tiling: &Tiling, style: &RenderStyle) -> String {
    let region = tiling.region();
    let polys = tile_polygons(tiling);
    let canvas = Canvas::new(polys.iter().flat_map(|(_, _, p)| p.iter()), style.scale);
    let mut out = String::new();
    canvas.header(&mut out);
    let _ = writeln!(out, r#"<g class="tiles">"#);
    for (ty, class, poly) in &polys {
        canvas.path(&mut out, poly, style.palette.color(*ty, *class), style, &format!("tile {} o{class}", type_name(*ty)));
    }
    let _ = writeln!(out, "</g>");

    if style.show_heights {
        if let Ok(h) = height_field(tiling) {
            let font = 0.35 * style.scale;
            let _ = writeln!(out, r#"<g class="heights" font-family="sans-serif" font-size="{font:.3}" text-anchor="middle">"#);
            for v in 0..region.num_vertices() as u32 {
                let (x, y) = canvas.map(vertex_position(region.vertex(v)));
                let _ = writeln!(out, r#"<text x="{x:.3}" y="{:.3}">{}</text>"#, y + font / 3.0, h.get(v));
            }
            let _ = writeln!(out, "</g>");
        }
    }

    if style.show_flips {
        let r = 0.15 * style.scale;
        let _ = writeln!(out, r#"<g class="flips">"#);
        for info in tiling.available_flips() {
            let (x, y) = canvas.map(vertex_position(region.vertex(info.vertex)));
            let fill = match info.direction {
                Direction::Lower => "#000000",
                Direction::Raise => "none",
            };
            let _ = writeln!(out, r##"<circle cx="{x:.3}" cy="{y:.3}" r="{r:.3}" fill="{fill}" stroke="#000000" stroke-width="{:.3}"/>"##, r / 3.0);
        }
        let _ = writeln!(out, "</g>");
    }
    out.push_str("</svg>\n");
    out
}

/// The three prototiles side by side: fish, trapeze, lozenge.
pub fn render_prototiles(style: &RenderStyle) -> String {
    let tiles = [(HexCoord::new(0, 0), 0b000011u8), (HexCoord::new(3, 0), 0b000101), (HexCoord::new(6, 0), 0b001001)];
    let polys: Vec<(TileType, usize, Vec<(f64, f64)>)> = tiles
        .iter()
        .map(|&(h, m)| (TileType::from_mask(m).expect("two slots"), orientation_class(m), tile_polygon(h, m)))
        .collect();
    let canvas = Canvas::new(polys.iter().flat_map(|(_, _, p)| p.iter()), style.scale);
    let mut out = String::new();
    canvas.header(&mut out);
    for (ty, class, poly) in &polys {
        canvas.path(&mut out, poly, style.palette.color(*ty, *class), style, &format!("tile {} o{class}", type_name(*ty)));
    }
    out.push_str("</svg>\n");
    out
}
