//! Derived model configurations used across tests, the CLI fixture
//! generator and the acceptance suite.
//!
//! The heptagon and double-cut instances are not copied from anywhere:
//! they are re-solved here from their defining constraints (parallel edge
//! pairs, length inequalities, cut placement rules), so the geometry can
//! be regenerated and re-verified at any time.

use crate::error::Result;
use crate::geometry::{polygon_polytope, Halfspace};
use crate::math::{dot, scale, sub};
use crate::model::{
    build_polygon_model, build_server_model, PseudoBilliardModel, SwitchPolicy,
    SwitchedServerModel,
};

/// Equilateral triangle with inward perpendicular edge fields; the polygon
/// chart of the equal-rate three-buffer arrival system.
pub fn equilateral_vertices() -> Vec<Vec<f64>> {
    let h = 3f64.sqrt() / 2.0;
    vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.5, h]]
}

pub fn equilateral_perpendicular_fields() -> Vec<Vec<f64>> {
    let h = 3f64.sqrt() / 2.0;
    vec![vec![0.0, 1.0], vec![-h, -0.5], vec![h, -0.5]]
}

pub fn equilateral_perpendicular_model() -> Result<PseudoBilliardModel> {
    build_polygon_model(&equilateral_vertices(), &equilateral_perpendicular_fields())
}

/// Fields making vertex A globally attracting: each lateral edge is mapped
/// a fifth of the way up the other one, the far edge aims back at A.
pub fn contraction_triangle_fields() -> Vec<Vec<f64>> {
    let h = 3f64.sqrt() / 2.0;
    let (a, b, c) = (vec![0.0, 0.0], vec![1.0, 0.0], vec![0.5, h]);
    let p_on_ac = scale(&c, 0.2); // A + 0.2 (C - A)
    let p_on_ab = scale(&b, 0.2);
    let mid_bc = vec![0.75, h / 2.0];
    vec![
        sub(&p_on_ac, &b),       // AB: aimed from B at A + 0.2 (C - A)
        sub(&a, &mid_bc),        // BC: aimed at A
        sub(&p_on_ab, &c),       // CA: aimed from C at A + 0.2 (B - A)
    ]
}

pub fn contraction_triangle_model() -> Result<PseudoBilliardModel> {
    build_polygon_model(&equilateral_vertices(), &contraction_triangle_fields())
}

/// Axis-aligned square of side `side` with inward perpendicular fields.
pub fn perpendicular_square_model(side: f64) -> Result<PseudoBilliardModel> {
    let v = vec![
        vec![0.0, 0.0],
        vec![side, 0.0],
        vec![side, side],
        vec![0.0, side],
    ];
    let f = vec![vec![0.0, 1.0], vec![-1.0, 0.0], vec![0.0, -1.0], vec![1.0, 0.0]];
    build_polygon_model(&v, &f)
}

/// Unit square with asymmetric oblique fields. The return map has a
/// positive exponent, so packet walks sweep the whole square instead of
/// bouncing on a chord.
pub fn tilted_square_fields() -> Vec<Vec<f64>> {
    vec![vec![1.0, 2.0], vec![-1.0, 0.5], vec![-0.3, -1.0], vec![1.0, -0.2]]
}

pub fn tilted_square_model() -> Result<PseudoBilliardModel> {
    let v = vec![
        vec![0.0, 0.0],
        vec![1.0, 0.0],
        vec![1.0, 1.0],
        vec![0.0, 1.0],
    ];
    build_polygon_model(&v, &tilted_square_fields())
}

/// Equilateral perpendicular model with a small corner cut parallel to AB
/// just under vertex C; the cut crosses exactly one vertex line (the
/// altitude through C).
pub fn valid_cut_triangle_model() -> Result<PseudoBilliardModel> {
    let m = equilateral_perpendicular_model()?;
    let y = 0.8 * 3f64.sqrt() / 2.0;
    m.cut(&Halfspace::new(vec![0.0, 1.0], y)?)
}

/// Switched server triangle: each side carries the inward-signed
/// perpendiculars of the other two sides (the inverse branches of the
/// equal-rate arrival dynamics).
pub fn triangle_server_fields() -> Vec<Vec<Vec<f64>>> {
    let p = polygon_polytope(&equilateral_vertices()).unwrap();
    let mut out = Vec::new();
    for f in &p.facets {
        let mut list = Vec::new();
        for g in &p.facets {
            if g.id == f.id {
                continue;
            }
            let mut d = g.inward_normal.clone();
            if dot(&d, &f.inward_normal) < 0.0 {
                d = scale(&d, -1.0);
            }
            list.push(d);
        }
        out.push(list);
    }
    out
}

pub fn triangle_server_model(policy: SwitchPolicy) -> Result<SwitchedServerModel> {
    let p = polygon_polytope(&equilateral_vertices())?;
    build_server_model(p, triangle_server_fields(), policy)
}

/// Heptagon with coexisting chaotic and neutral transitivity components.
///
/// Construction (scaled by 1/160): AB horizontal, AG vertical, and
///   GD parallel to AB,   BG parallel to CE,
///   AE parallel to BD parallel to GF (common direction (1,4)),
/// with |GF| < |FE|, |CD| < |BC| < |GF|+|EF|, |AG| < |BC|+|CD|.
/// Edge fields: AB and the chain CD, DE, EF ride the (1,4) line, BC rides
/// BG, FG rides GE, GA rides AB. Under these choices AB and ED exchange
/// onto each other (a neutral two-cycle) while the other five edges map
/// onto unions of one another with every piece expanding.
pub fn heptagon_vertices() -> Vec<Vec<f64>> {
    let s = 1.0 / 160.0;
    [
        [0.0, 0.0],     // A
        [117.0, 0.0],   // B
        [148.0, 54.0],  // C
        [134.5, 70.0],  // D
        [31.0, 124.0],  // E
        [7.0, 98.0],    // F
        [0.0, 70.0],    // G
    ]
    .iter()
    .map(|p| vec![p[0] * s, p[1] * s])
    .collect()
}

pub fn heptagon_fields() -> Vec<Vec<f64>> {
    vec![
        vec![1.0, 4.0],     // AB -> ED
        vec![-117.0, 70.0], // BC -> GF u FE (parallel to BG and CE)
        vec![-1.0, -4.0],   // CD -> BC
        vec![-1.0, -4.0],   // DE -> AB
        vec![-1.0, -4.0],   // EF -> GA
        vec![31.0, 54.0],   // FG -> FE (parallel to GE)
        vec![1.0, 0.0],     // GA -> BC u CD (parallel to AB and GD)
    ]
}

pub fn heptagon_model() -> Result<PseudoBilliardModel> {
    build_polygon_model(&heptagon_vertices(), &heptagon_fields())
}

/// Expected transition graph of the heptagon edge partition.
pub fn heptagon_expected_edges() -> Vec<(usize, Vec<usize>)> {
    vec![
        (0, vec![3]),    // AB -> ED
        (1, vec![4, 5]), // BC -> EF u FG
        (2, vec![1]),    // CD -> BC
        (3, vec![0]),    // DE -> AB
        (4, vec![6]),    // EF -> GA
        (5, vec![4]),    // FG -> EF
        (6, vec![1, 2]), // GA -> BC u CD
    ]
}

/// Double-cut triangle with a stable cycle.
///
/// The base triangle A=(0,0), C=(1,0), B=(1/2,1) carries oblique fields
///   on AC: (1,4),   on CB: (-5,-1),   on BA: (5,-1)
/// (all divided by their norms at build time), which pass the vertex-line
/// chaoticity test, so the uncut map is piecewise expanding. Two cuts are
/// then applied:
///   - near B: the chord through (3/26, 6/26) with slope 3/20 (tilted
///     toward the field of CB, which is what produces the contraction),
///   - near C: the chord through (112/130, 0) parallel to BA.
///
/// Each cut meets exactly one vertex line. The perturbed system has a
/// globally attracting four-collision cycle alternating between the two
/// cut facets through one AB and one AC bounce; its multiplier is 20/77.
pub fn double_cut_base_vertices_fields() -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let vertices = vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.5, 1.0]];
    let s26 = 26f64.sqrt();
    let s17 = 17f64.sqrt();
    let fields = vec![
        vec![1.0 / s17, 4.0 / s17],   // AC
        vec![-5.0 / s26, -1.0 / s26], // CB
        vec![5.0 / s26, -1.0 / s26],  // BA
    ];
    (vertices, fields)
}

pub fn double_cut_base_model() -> Result<PseudoBilliardModel> {
    let (vertices, fields) = double_cut_base_vertices_fields();
    build_polygon_model(&vertices, &fields)
}

/// Cut half-spaces of the double-cut instance (normalized coordinates).
pub fn double_cut_halfspaces() -> Vec<Halfspace> {
    // corner B: y <= 0.15 x + 27.75/130 ; corner C: 2x - y <= 224/130
    vec![
        Halfspace::new(vec![-0.15, 1.0], 27.75 / 130.0).unwrap(),
        Halfspace::new(vec![2.0, -1.0], 224.0 / 130.0).unwrap(),
    ]
}

pub fn double_cut_triangle_model() -> Result<PseudoBilliardModel> {
    let mut m = double_cut_base_model()?;
    for h in double_cut_halfspaces() {
        m = m.cut(&h)?;
    }
    Ok(m)
}

/// Exact contraction factor of the double-cut instance's attracting cycle.
pub fn double_cut_cycle_multiplier() -> f64 {
    20.0 / 77.0
}
