//! Vertex-line chaoticity certificate: for each vertex of a simplex-shaped
//! model, the full line through the vertex parallel to the opposite facet's
//! field must meet that facet in its relative interior.

use crate::error::{Error, Result};
use crate::geometry::{Facet, TAU_GEOM};
use crate::math::{dot, sub};
use crate::model::PseudoBilliardModel;

#[derive(Debug, Clone)]
pub struct VertexCertificate {
    pub vertex: usize,
    pub vertex_point: Vec<f64>,
    pub opposite_facet: usize,
    pub passes: bool,
    pub intersection: Vec<f64>,
    /// Distance from the intersection to the relative boundary of the
    /// opposite facet (negative when the intersection falls outside).
    pub margin: f64,
}

#[derive(Debug, Clone)]
pub struct ChaosCertificate {
    pub passes: bool,
    pub vertices: Vec<VertexCertificate>,
}

/// Signed interior margin of `x` within the facet (chart metric).
fn facet_margin(facet: &Facet, x: &[f64]) -> f64 {
    let u = facet.to_local(x);
    match facet.tangent.len() {
        1 => {
            let (lo, hi) = facet.local_interval();
            (u[0] - lo).min(hi - u[0])
        }
        2 => {
            let locals: Vec<Vec<f64>> = facet.vertices.iter().map(|v| facet.to_local(v)).collect();
            let m = locals.len();
            let mut margin = f64::INFINITY;
            for i in 0..m {
                let a = &locals[i];
                let b = &locals[(i + 1) % m];
                let e = sub(b, a);
                let len = (e[0] * e[0] + e[1] * e[1]).sqrt();
                // ccw-ordered polygon: positive side is the interior
                let cross = (e[0] * (u[1] - a[1]) - e[1] * (u[0] - a[0])) / len;
                margin = margin.min(cross);
            }
            margin
        }
        _ => f64::NEG_INFINITY,
    }
}

/// Run the certificate on a simplex-shaped model (one facet opposite each
/// vertex, one constant field per facet).
pub fn chaos_certificate(model: &PseudoBilliardModel) -> Result<ChaosCertificate> {
    let lines = model.vertex_lines()?;
    let nv = model.root().polytope.vertices.len();
    let mut per_vertex: Vec<Vec<_>> = vec![Vec::new(); nv];
    for l in lines {
        per_vertex[l.vertex].push(l);
    }
    let mut vertices = Vec::with_capacity(nv);
    let mut passes = true;
    for (vi, lines) in per_vertex.into_iter().enumerate() {
        if lines.len() != 1 {
            return Err(Error::Unsupported(
                "chaos certificate requires a simplex-shaped model".into(),
            ));
        }
        let line = &lines[0];
        let facet = model
            .root()
            .facet(line.opposite_facet)
            .expect("vertex line references a root facet");
        let hs = &model.root().polytope.halfspaces[facet.halfspace];
        let denom = dot(&hs.normal, &line.dir);
        if denom.abs() <= TAU_GEOM {
            return Err(Error::LineParallelToFace);
        }
        let t = hs.slack(&line.point) / denom;
        let x: Vec<f64> = (0..line.point.len())
            .map(|k| line.point[k] + t * line.dir[k])
            .collect();
        let margin = facet_margin(facet, &x);
        let ok = margin > TAU_GEOM;
        passes &= ok;
        vertices.push(VertexCertificate {
            vertex: vi,
            vertex_point: line.point.clone(),
            opposite_facet: line.opposite_facet,
            passes: ok,
            intersection: x,
            margin,
        });
    }
    Ok(ChaosCertificate { passes, vertices })
}
