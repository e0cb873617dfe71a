//! Convex polytope representation in half-space form, ray-facet casting,
//! and half-space cutting.
//!
//! Polytopes may live inside an affine hull of codimension one (the balance
//! hyperplane of the flow models), so all facet data is expressed relative
//! to the hull tangent space. Dimensions stay tiny (<= 4 ambient), which is
//! why vertices are enumerated by brute-force plane intersection.

use crate::error::{Error, Result};
use crate::math::{
    add, axpy, dist, dot, norm, normalized, orthonormal_basis, scale, solve, sub, Mat, SplitMix,
};

/// Absolute geometric tolerance on unit-scale polytopes. Facet incidence,
/// hit simultaneity and inwardness checks all use this single value.
pub const TAU_GEOM: f64 = 1e-9;

/// Closed half-space `normal . x <= offset`, with unit normal.
#[derive(Debug, Clone, PartialEq)]
pub struct Halfspace {
    pub normal: Vec<f64>,
    pub offset: f64,
}

impl Halfspace {
    pub fn new(normal: Vec<f64>, offset: f64) -> Result<Self> {
        let n = norm(&normal);
        if n < TAU_GEOM {
            return Err(Error::BadPolytope("half-space normal is zero".into()));
        }
        Ok(Halfspace { normal: scale(&normal, 1.0 / n), offset: offset / n })
    }

    #[inline]
    pub fn slack(&self, x: &[f64]) -> f64 {
        self.offset - dot(&self.normal, x)
    }

    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        self.slack(x) >= -tol
    }
}

/// Equality constraint `normal . x = offset` restricting the state region.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineHull {
    pub normal: Vec<f64>,
    pub offset: f64,
}

impl AffineHull {
    pub fn new(normal: Vec<f64>, offset: f64) -> Result<Self> {
        let n = norm(&normal);
        if n < TAU_GEOM {
            return Err(Error::BadPolytope("hull normal is zero".into()));
        }
        Ok(AffineHull { normal: scale(&normal, 1.0 / n), offset: offset / n })
    }
}

/// One (relative-codimension-one) face of the polytope.
#[derive(Debug, Clone)]
pub struct Facet {
    pub id: usize,
    /// Index into the parent polytope's half-space list.
    pub halfspace: usize,
    /// Unit normal pointing into the polytope, projected into the hull.
    pub inward_normal: Vec<f64>,
    /// Orthonormal basis of the facet's tangent space.
    pub tangent: Vec<Vec<f64>>,
    /// Chart origin (vertex centroid of the facet).
    pub anchor: Vec<f64>,
    /// Facet vertices; ordered along the tangent for 1-D facets, by angle
    /// around the centroid for 2-D facets.
    pub vertices: Vec<Vec<f64>>,
    pub is_cut: bool,
}

impl Facet {
    /// Tangent-space coordinates of an ambient point.
    pub fn to_local(&self, x: &[f64]) -> Vec<f64> {
        let d = sub(x, &self.anchor);
        self.tangent.iter().map(|b| dot(b, &d)).collect()
    }

    pub fn from_local(&self, u: &[f64]) -> Vec<f64> {
        let mut x = self.anchor.clone();
        for (c, b) in u.iter().zip(&self.tangent) {
            x = axpy(&x, *c, b);
        }
        x
    }

    /// Length for 1-D facets, polygon area for 2-D facets.
    pub fn measure(&self) -> f64 {
        match self.tangent.len() {
            0 => 0.0,
            1 => {
                let mut lo = f64::INFINITY;
                let mut hi = f64::NEG_INFINITY;
                for v in &self.vertices {
                    let u = self.to_local(v)[0];
                    lo = lo.min(u);
                    hi = hi.max(u);
                }
                hi - lo
            }
            _ => {
                let locals: Vec<Vec<f64>> = self.vertices.iter().map(|v| self.to_local(v)).collect();
                let mut area = 0.0;
                for i in 1..locals.len().saturating_sub(1) {
                    let a = sub(&locals[i], &locals[0]);
                    let b = sub(&locals[i + 1], &locals[0]);
                    area += 0.5 * (a[0] * b[1] - a[1] * b[0]).abs();
                }
                area
            }
        }
    }

    /// Arclength-style interval of the facet in its own chart (1-D only).
    pub fn local_interval(&self) -> (f64, f64) {
        debug_assert_eq!(self.tangent.len(), 1);
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for v in &self.vertices {
            let u = self.to_local(v)[0];
            lo = lo.min(u);
            hi = hi.max(u);
        }
        (lo, hi)
    }

    pub fn on_plane(&self, hs: &Halfspace, x: &[f64], tol: f64) -> bool {
        hs.slack(x).abs() <= tol
    }

    /// Uniform point on the facet.
    pub fn sample(&self, rng: &mut SplitMix) -> Vec<f64> {
        match self.tangent.len() {
            1 => {
                let (lo, hi) = self.local_interval();
                self.from_local(&[rng.uniform(lo, hi)])
            }
            2 => {
                // Fan triangulation weighted by area.
                let locals: Vec<Vec<f64>> = self.vertices.iter().map(|v| self.to_local(v)).collect();
                let mut areas = Vec::new();
                let mut total = 0.0;
                for i in 1..locals.len() - 1 {
                    let a = sub(&locals[i], &locals[0]);
                    let b = sub(&locals[i + 1], &locals[0]);
                    let ar = 0.5 * (a[0] * b[1] - a[1] * b[0]).abs();
                    areas.push(ar);
                    total += ar;
                }
                let mut pick = rng.next_f64() * total;
                let mut tri = 0;
                for (i, a) in areas.iter().enumerate() {
                    if pick <= *a || i == areas.len() - 1 {
                        tri = i;
                        break;
                    }
                    pick -= a;
                }
                let (mut r1, mut r2) = (rng.next_f64(), rng.next_f64());
                if r1 + r2 > 1.0 {
                    r1 = 1.0 - r1;
                    r2 = 1.0 - r2;
                }
                let p = &locals[0];
                let a = sub(&locals[tri + 1], p);
                let b = sub(&locals[tri + 2], p);
                let u = vec![p[0] + r1 * a[0] + r2 * b[0], p[1] + r1 * a[1] + r2 * b[1]];
                self.from_local(&u)
            }
            _ => self.anchor.clone(),
        }
    }
}

/// Result of casting a ray from the boundary (or interior) to the next facet.
#[derive(Debug, Clone)]
pub enum Hit {
    Facet { facet: usize, time: f64, point: Vec<f64> },
    /// Two or more facets reached within `TAU_GEOM` of the same time: the
    /// landing point lies on the lower-dimensional skeleton.
    Sigma(SigmaHit),
}

#[derive(Debug, Clone)]
pub struct SigmaHit {
    pub point: Vec<f64>,
    pub time: f64,
    /// Ids of all facets met simultaneously, ascending.
    pub facets: Vec<usize>,
}

/// Bounded convex polytope in half-space form with cached vertices.
#[derive(Debug, Clone)]
pub struct ConvexPolytope {
    pub dim: usize,
    pub halfspaces: Vec<Halfspace>,
    pub affine_hull: Option<AffineHull>,
    pub facets: Vec<Facet>,
    pub vertices: Vec<Vec<f64>>,
}

impl ConvexPolytope {
    /// Build from half-spaces (+ optional hull equality). Redundant
    /// half-spaces are dropped; facet ids follow the surviving input order.
    pub fn from_halfspaces(
        dim: usize,
        halfspaces: Vec<Halfspace>,
        affine_hull: Option<AffineHull>,
    ) -> Result<Self> {
        Self::assemble(dim, halfspaces, affine_hull, None)
    }

    fn effective_dim(dim: usize, hull: &Option<AffineHull>) -> usize {
        dim - usize::from(hull.is_some())
    }

    fn assemble(
        dim: usize,
        halfspaces: Vec<Halfspace>,
        affine_hull: Option<AffineHull>,
        // When rebuilding after a cut: (old facet ids by halfspace index, id for the new facet)
        id_map: Option<(Vec<Option<usize>>, usize)>,
    ) -> Result<Self> {
        let m = Self::effective_dim(dim, &affine_hull);
        if m == 0 || halfspaces.len() < m + 1 {
            return Err(Error::BadPolytope("too few half-spaces to bound the region".into()));
        }
        let vertices = enumerate_vertices(dim, &halfspaces, &affine_hull, m)?;
        if vertices.len() < m + 1 {
            return Err(Error::EmptyPolytope);
        }
        let center = centroid(&vertices);
        let min_slack = halfspaces.iter().map(|h| h.slack(&center)).fold(f64::INFINITY, f64::min);
        if min_slack <= TAU_GEOM {
            return Err(Error::EmptyPolytope);
        }

        // Hull tangent basis for projecting facet normals.
        let hull_project = |v: &[f64]| -> Vec<f64> {
            match &affine_hull {
                Some(h) => axpy(v, -dot(v, &h.normal), &h.normal),
                None => v.to_vec(),
            }
        };

        let mut kept_halfspaces: Vec<Halfspace> = Vec::new();
        let mut facets: Vec<Facet> = Vec::new();
        let mut next_id = 0usize;
        for (hi, hs) in halfspaces.iter().enumerate() {
            let on: Vec<Vec<f64>> = vertices
                .iter()
                .filter(|v| hs.slack(v).abs() <= 1e-7)
                .cloned()
                .collect();
            // A true facet spans m-1 affine dimensions.
            let spans = facet_rank(&on) >= m - 1 && on.len() >= m;
            if !spans {
                continue; // redundant half-space
            }
            let id = match &id_map {
                Some((olds, new_id)) => match olds[hi] {
                    Some(old) => old,
                    None => *new_id,
                },
                None => {
                    let id = next_id;
                    next_id += 1;
                    id
                }
            };
            let is_cut = matches!(&id_map, Some((olds, _)) if olds[hi].is_none());
            let anchor = centroid(&on);
            let inward = normalized(&hull_project(&scale(&hs.normal, -1.0)))
                .ok_or_else(|| Error::BadPolytope("facet normal collapses in hull".into()))?;
            let dirs: Vec<Vec<f64>> = on.iter().map(|v| sub(v, &anchor)).collect();
            let tangent = orthonormal_basis(&dirs, 1e-9);
            if tangent.len() != m - 1 {
                return Err(Error::BadPolytope(format!(
                    "facet {} tangent rank {} != {}",
                    id,
                    tangent.len(),
                    m - 1
                )));
            }
            let mut facet = Facet {
                id,
                halfspace: kept_halfspaces.len(),
                inward_normal: inward,
                tangent,
                anchor,
                vertices: on,
                is_cut,
            };
            order_facet_vertices(&mut facet);
            kept_halfspaces.push(hs.clone());
            facets.push(facet);
        }
        if facets.len() < m + 1 {
            return Err(Error::EmptyPolytope);
        }
        Ok(ConvexPolytope { dim, halfspaces: kept_halfspaces, affine_hull, facets, vertices })
    }

    pub fn facet_by_id(&self, id: usize) -> Option<&Facet> {
        self.facets.iter().find(|f| f.id == id)
    }

    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        if let Some(h) = &self.affine_hull {
            if (dot(&h.normal, x) - h.offset).abs() > tol {
                return false;
            }
        }
        self.halfspaces.iter().all(|hs| hs.contains(x, tol))
    }

    /// True when `v` can be followed from `x` with positive dwell time
    /// inside the region (strictly enters relative to every constraint
    /// active at `x`).
    pub fn enters_interior(&self, x: &[f64], v: &[f64]) -> bool {
        let vn = norm(v).max(1e-300);
        for hs in &self.halfspaces {
            if hs.slack(x).abs() <= TAU_GEOM && dot(&hs.normal, v) / vn >= -1e-12 {
                return false;
            }
        }
        true
    }

    /// Lies `v` in the hull tangent space?
    pub fn in_hull_tangent(&self, v: &[f64]) -> bool {
        match &self.affine_hull {
            Some(h) => dot(&h.normal, v).abs() <= 1e-9 * norm(v).max(1.0),
            None => true,
        }
    }

    /// Cast the ray `x + t v` to the first facet plane ahead, ignoring
    /// touches within `TAU_GEOM` of `x` (geometric distance, so the cast
    /// is invariant under rescaling `v`). Returned times parametrize `v`.
    ///
    /// `from_boundary` engages the outward-field check (the caller states
    /// that `x` sits on the boundary and the flight must enter the region).
    pub fn first_facet_hit(&self, x: &[f64], v: &[f64], from_boundary: bool) -> Result<Hit> {
        if !self.in_hull_tangent(v) {
            return Err(Error::OffHull);
        }
        if from_boundary && !self.enters_interior(x, v) {
            return Err(Error::OutwardField);
        }
        let vn = norm(v);
        if vn < 1e-300 {
            return Err(Error::UnboundedFlight);
        }
        let mut best_t = f64::INFINITY;
        let mut times: Vec<(usize, f64)> = Vec::new();
        for facet in &self.facets {
            let hs = &self.halfspaces[facet.halfspace];
            let denom = dot(&hs.normal, v) / vn;
            if denom <= 1e-14 {
                continue; // moving away from or parallel to this plane
            }
            let t = hs.slack(x) / denom; // geometric distance along the ray
            if t > TAU_GEOM {
                times.push((facet.id, t));
                if t < best_t {
                    best_t = t;
                }
            }
        }
        if !best_t.is_finite() {
            return Err(Error::UnboundedFlight);
        }
        let mut hits: Vec<usize> = times
            .iter()
            .filter(|(_, t)| *t - best_t < TAU_GEOM)
            .map(|(id, _)| *id)
            .collect();
        hits.sort_unstable();
        let time = best_t / vn;
        let point = axpy(x, time, v);
        debug_assert!(self.contains(&point, 1e-6), "landing point left the polytope");
        if hits.len() >= 2 {
            Ok(Hit::Sigma(SigmaHit { point, time, facets: hits }))
        } else {
            Ok(Hit::Facet { facet: hits[0], time, point })
        }
    }

    /// Intersect with an extra half-space.
    ///
    /// Surviving facets keep their ids; a genuinely new facet (the cut
    /// plane touching the interior) is flagged `is_cut` and receives the
    /// next free id. A half-space containing the whole polytope leaves it
    /// unchanged.
    pub fn cut(&self, h: &Halfspace) -> Result<ConvexPolytope> {
        // Vacuous or duplicate cut?
        let redundant = self.vertices.iter().all(|v| h.contains(v, TAU_GEOM));
        if redundant {
            let duplicate = self.halfspaces.iter().any(|hs| {
                dist(&hs.normal, &h.normal) < 1e-9 && (hs.offset - h.offset).abs() < 1e-9
            });
            let touches = self.vertices.iter().any(|v| h.slack(v).abs() <= TAU_GEOM);
            if duplicate || !touches {
                return Ok(self.clone());
            }
        }
        let mut halfspaces = self.halfspaces.clone();
        let mut olds: Vec<Option<usize>> = self.facets.iter().map(|f| Some(f.id)).collect();
        halfspaces.push(h.clone());
        olds.push(None);
        let new_id = self.facets.iter().map(|f| f.id + 1).max().unwrap_or(0);
        let prior_cuts: Vec<usize> =
            self.facets.iter().filter(|f| f.is_cut).map(|f| f.id).collect();
        let mut out =
            Self::assemble(self.dim, halfspaces, self.affine_hull.clone(), Some((olds, new_id)))?;
        // cut flags survive later cuts
        for f in &mut out.facets {
            if prior_cuts.contains(&f.id) {
                f.is_cut = true;
            }
        }
        Ok(out)
    }

    /// Conservative inradius proxy: minimal facet slack at the vertex centroid.
    pub fn inradius(&self) -> f64 {
        let c = centroid(&self.vertices);
        self.halfspaces.iter().map(|h| h.slack(&c)).fold(f64::INFINITY, f64::min)
    }

    pub fn centroid(&self) -> Vec<f64> {
        centroid(&self.vertices)
    }

    /// Axis-aligned bounding box of the vertices.
    pub fn bounding_box(&self) -> (Vec<f64>, Vec<f64>) {
        let mut lo = vec![f64::INFINITY; self.dim];
        let mut hi = vec![f64::NEG_INFINITY; self.dim];
        for v in &self.vertices {
            for k in 0..self.dim {
                lo[k] = lo[k].min(v[k]);
                hi[k] = hi[k].max(v[k]);
            }
        }
        (lo, hi)
    }

    /// Total boundary measure (sum of facet measures).
    pub fn boundary_measure(&self) -> f64 {
        self.facets.iter().map(|f| f.measure()).sum()
    }

    /// Uniform point on the boundary; returns (facet id, point).
    pub fn sample_boundary(&self, rng: &mut SplitMix) -> (usize, Vec<f64>) {
        let total = self.boundary_measure();
        let mut pick = rng.next_f64() * total;
        for f in &self.facets {
            let m = f.measure();
            if pick <= m || f.id == self.facets.last().unwrap().id {
                return (f.id, f.sample(rng));
            }
            pick -= m;
        }
        unreachable!()
    }

    /// Monte Carlo volume estimate relative to the hull tangent space.
    pub fn volume_mc(&self, samples: usize, seed: u64) -> f64 {
        let origin = self.centroid();
        let basis = match &self.affine_hull {
            Some(h) => {
                let mut dirs = Vec::new();
                for k in 0..self.dim {
                    let mut e = vec![0.0; self.dim];
                    e[k] = 1.0;
                    dirs.push(axpy(&e, -dot(&e, &h.normal), &h.normal));
                }
                orthonormal_basis(&dirs, 1e-9)
            }
            None => (0..self.dim)
                .map(|k| {
                    let mut e = vec![0.0; self.dim];
                    e[k] = 1.0;
                    e
                })
                .collect(),
        };
        let locals: Vec<Vec<f64>> = self
            .vertices
            .iter()
            .map(|v| basis.iter().map(|b| dot(b, &sub(v, &origin))).collect())
            .collect();
        let m = basis.len();
        let mut lo = vec![f64::INFINITY; m];
        let mut hi = vec![f64::NEG_INFINITY; m];
        for l in &locals {
            for k in 0..m {
                lo[k] = lo[k].min(l[k]);
                hi[k] = hi[k].max(l[k]);
            }
        }
        let box_vol: f64 = (0..m).map(|k| hi[k] - lo[k]).product();
        let mut rng = SplitMix::new(seed);
        let mut inside = 0usize;
        for _ in 0..samples {
            let mut x = origin.clone();
            for k in 0..m {
                x = axpy(&x, rng.uniform(lo[k], hi[k]), &basis[k]);
            }
            if self.halfspaces.iter().all(|hs| hs.contains(&x, 0.0)) {
                inside += 1;
            }
        }
        box_vol * inside as f64 / samples as f64
    }
}

fn centroid(points: &[Vec<f64>]) -> Vec<f64> {
    let dim = points[0].len();
    let mut c = vec![0.0; dim];
    for p in points {
        c = add(&c, p);
    }
    scale(&c, 1.0 / points.len() as f64)
}

fn facet_rank(points: &[Vec<f64>]) -> usize {
    if points.len() < 2 {
        return 0;
    }
    let dirs: Vec<Vec<f64>> = points[1..].iter().map(|p| sub(p, &points[0])).collect();
    orthonormal_basis(&dirs, 1e-7).len()
}

fn order_facet_vertices(facet: &mut Facet) {
    match facet.tangent.len() {
        1 => {
            let f = &*facet;
            let mut keyed: Vec<(f64, Vec<f64>)> =
                f.vertices.iter().map(|v| (f.to_local(v)[0], v.clone())).collect();
            keyed.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
            facet.vertices = keyed.into_iter().map(|(_, v)| v).collect();
        }
        2 => {
            let f = &*facet;
            let mut keyed: Vec<(f64, Vec<f64>)> = f
                .vertices
                .iter()
                .map(|v| {
                    let u = f.to_local(v);
                    (u[1].atan2(u[0]), v.clone())
                })
                .collect();
            keyed.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
            facet.vertices = keyed.into_iter().map(|(_, v)| v).collect();
        }
        _ => {}
    }
}

fn enumerate_vertices(
    dim: usize,
    halfspaces: &[Halfspace],
    hull: &Option<AffineHull>,
    m: usize,
) -> Result<Vec<Vec<f64>>> {
    let h = halfspaces.len();
    let mut verts: Vec<Vec<f64>> = Vec::new();
    let mut combo: Vec<usize> = (0..m).collect();
    loop {
        // Solve the equality system for this combination.
        let mut rows: Vec<Vec<f64>> = Vec::with_capacity(dim);
        let mut rhs: Vec<f64> = Vec::with_capacity(dim);
        if let Some(hl) = hull {
            rows.push(hl.normal.clone());
            rhs.push(hl.offset);
        }
        for &i in &combo {
            rows.push(halfspaces[i].normal.clone());
            rhs.push(halfspaces[i].offset);
        }
        if rows.len() == dim {
            let a = Mat::from_rows(&rows);
            if let Some(x) = solve(&a, &rhs) {
                if halfspaces.iter().all(|hs| hs.contains(&x, 1e-7))
                    && !verts.iter().any(|v| dist(v, &x) < 1e-7)
                {
                    verts.push(x);
                }
            }
        }
        // next combination
        let mut i = m;
        loop {
            if i == 0 {
                return Ok(verts);
            }
            i -= 1;
            if combo[i] + (m - i) < h {
                combo[i] += 1;
                for j in i + 1..m {
                    combo[j] = combo[j - 1] + 1;
                }
                break;
            }
        }
    }
}

/// The unit (N-1)-simplex slice `{sum x = s, x_i >= lo_i}` used by the
/// switched-arrival models.
pub fn simplex_polytope(n: usize, total: f64, lower: &[f64]) -> Result<ConvexPolytope> {
    let mut halfspaces = Vec::with_capacity(n);
    for i in 0..n {
        let mut normal = vec![0.0; n];
        normal[i] = -1.0;
        halfspaces.push(Halfspace::new(normal, -lower[i])?);
    }
    let hull = AffineHull::new(vec![1.0; n], total)?;
    ConvexPolytope::from_halfspaces(n, halfspaces, Some(hull))
}

/// Convex polygon from counterclockwise vertices; facet i is edge
/// (v_i, v_{i+1}).
pub fn polygon_polytope(vertices: &[Vec<f64>]) -> Result<ConvexPolytope> {
    let n = vertices.len();
    if n < 3 {
        return Err(Error::NonConvex);
    }
    let mut halfspaces = Vec::with_capacity(n);
    for i in 0..n {
        let a = &vertices[i];
        let b = &vertices[(i + 1) % n];
        let e = sub(b, a);
        // ccw polygon: outward normal is the clockwise rotation of the edge
        let outward = vec![e[1], -e[0]];
        let c = &vertices[(i + 2) % n];
        if dot(&outward, &sub(c, a)) >= -1e-12 {
            return Err(Error::NonConvex);
        }
        halfspaces.push(Halfspace::new(outward.clone(), dot(&outward, a))?);
    }
    ConvexPolytope::from_halfspaces(2, halfspaces, None)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn n3_simplex() -> ConvexPolytope {
        simplex_polytope(3, 1.0, &[0.0, 0.0, 0.0]).unwrap()
    }

    #[test]
    fn simplex_vertices_and_facets() {
        let p = n3_simplex();
        assert_eq!(p.vertices.len(), 3);
        assert_eq!(p.facets.len(), 3);
        for f in &p.facets {
            assert_eq!(f.tangent.len(), 1);
            assert!((f.measure() - 2f64.sqrt()).abs() < 1e-9);
            assert!((norm(&f.inward_normal) - 1.0).abs() < 1e-12);
            // inward normal lies in the hull
            assert!(dot(&f.inward_normal, &[1.0, 1.0, 1.0]).abs() < 1e-9);
        }
    }

    #[test]
    fn flight_time_closed_form() {
        // t_j = x_j / rho_j, minimum over j
        let p = n3_simplex();
        let v = vec![2.0 / 3.0, -1.0 / 3.0, -1.0 / 3.0];
        match p.first_facet_hit(&[0.0, 0.4, 0.6], &v, true).unwrap() {
            Hit::Facet { facet, time, point } => {
                assert_eq!(facet, 1);
                assert!((time - 1.2).abs() < 1e-12);
                assert!(dist(&point, &[0.8, 0.0, 0.2]) < 1e-12);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn symmetric_tie_is_sigma_hit() {
        let p = n3_simplex();
        let v = vec![2.0 / 3.0, -1.0 / 3.0, -1.0 / 3.0];
        match p.first_facet_hit(&[0.0, 0.5, 0.5], &v, true).unwrap() {
            Hit::Sigma(s) => {
                assert_eq!(s.facets, vec![1, 2]);
                assert!((s.time - 1.5).abs() < 1e-12);
                assert!(dist(&s.point, &[1.0, 0.0, 0.0]) < 1e-12);
            }
            other => panic!("expected sigma hit, got {other:?}"),
        }
    }

    #[test]
    fn outward_field_detected() {
        let p = n3_simplex();
        // in-hull vector with v1 < 0: exits immediately through {x1 = 0}
        let v = vec![-1.0 / 3.0, 0.4, 1.0 / 3.0 - 0.4];
        let err = p.first_facet_hit(&[0.0, 0.4, 0.6], &v, true).unwrap_err();
        assert!(matches!(err, Error::OutwardField));
    }

    #[test]
    fn off_hull_rejected() {
        let p = n3_simplex();
        let err = p.first_facet_hit(&[0.0, 0.4, 0.6], &[1.0, 0.0, 0.0], true).unwrap_err();
        assert!(matches!(err, Error::OffHull));
    }

    #[test]
    fn flight_reverses() {
        let p = n3_simplex();
        let v = vec![2.0 / 3.0, -1.0 / 3.0, -1.0 / 3.0];
        let (t0, y) = match p.first_facet_hit(&[0.0, 0.4, 0.6], &v, true).unwrap() {
            Hit::Facet { time, point, .. } => (time, point),
            _ => unreachable!(),
        };
        match p.first_facet_hit(&y, &scale(&v, -1.0), true).unwrap() {
            Hit::Facet { facet, time, point } => {
                assert_eq!(facet, 0);
                assert!((time - t0).abs() < 1e-9);
                assert!(dist(&point, &[0.0, 0.4, 0.6]) < 1e-9);
            }
            _ => panic!("reverse flight failed"),
        }
    }

    #[test]
    fn cut_removes_parallel_facet() {
        // {x1 >= 0.1} replaces facet 0 with a cut facet; ids survive.
        let p = n3_simplex();
        let h = Halfspace::new(vec![-1.0, 0.0, 0.0], -0.1).unwrap();
        let q = p.cut(&h).unwrap();
        assert_eq!(q.facets.len(), 3);
        assert!(q.facet_by_id(0).is_none());
        assert!(q.facet_by_id(1).is_some());
        assert!(q.facet_by_id(2).is_some());
        let cut = q.facets.iter().find(|f| f.is_cut).unwrap();
        assert_eq!(cut.id, 3);
        for v in &cut.vertices {
            assert!((v[0] - 0.1).abs() < 1e-9);
        }
        // derived by hand: vertex set {(1,0,0),(0.1,0.9,0),(0.1,0,0.9)}
        assert_eq!(q.vertices.len(), 3);
        assert!(q.vertices.iter().any(|v| dist(v, &[1.0, 0.0, 0.0]) < 1e-9));
        assert!(q.vertices.iter().any(|v| dist(v, &[0.1, 0.9, 0.0]) < 1e-9));
        assert!(q.vertices.iter().any(|v| dist(v, &[0.1, 0.0, 0.9]) < 1e-9));
    }

    #[test]
    fn vacuous_cut_is_identity() {
        let p = n3_simplex();
        let h = Halfspace::new(vec![-1.0, 0.0, 0.0], 5.0).unwrap();
        let q = p.cut(&h).unwrap();
        assert_eq!(q.facets.len(), p.facets.len());
        assert_eq!(q.vertices.len(), p.vertices.len());
        assert!(!q.facets.iter().any(|f| f.is_cut));
    }

    #[test]
    fn empty_cut_errors() {
        let p = n3_simplex();
        let h = Halfspace::new(vec![-1.0, 0.0, 0.0], -2.0).unwrap();
        assert!(matches!(p.cut(&h).unwrap_err(), Error::EmptyPolytope));
    }

    #[test]
    fn cut_is_idempotent() {
        let p = n3_simplex();
        let h = Halfspace::new(vec![-1.0, 0.0, 0.0], -0.1).unwrap();
        let q1 = p.cut(&h).unwrap();
        let q2 = q1.cut(&h).unwrap();
        assert_eq!(q1.facets.len(), q2.facets.len());
        assert_eq!(q1.vertices.len(), q2.vertices.len());
    }

    #[test]
    fn cut_volume_never_grows() {
        let p = n3_simplex();
        let h = Halfspace::new(vec![-1.0, 0.0, 0.0], -0.1).unwrap();
        let q = p.cut(&h).unwrap();
        let (vp, vq) = (p.volume_mc(100_000, 11), q.volume_mc(100_000, 12));
        // 3-sigma MC headroom
        let sigma = vp * (3.0 / (100_000f64).sqrt());
        assert!(vq <= vp + 3.0 * sigma, "{vq} > {vp}");
    }

    #[test]
    fn polygon_builder_rejects_nonconvex() {
        let bad = vec![
            vec![0.0, 0.0],
            vec![1.0, 0.0],
            vec![0.2, 0.2], // reflex
            vec![0.0, 1.0],
        ];
        assert!(matches!(polygon_polytope(&bad).unwrap_err(), Error::NonConvex));
    }

    #[test]
    fn polygon_square() {
        let sq = polygon_polytope(&[
            vec![0.0, 0.0],
            vec![1.0, 0.0],
            vec![1.0, 1.0],
            vec![0.0, 1.0],
        ])
        .unwrap();
        assert_eq!(sq.vertices.len(), 4);
        assert_eq!(sq.facets.len(), 4);
        assert!((sq.inradius() - 0.5).abs() < 1e-12);
        let hit = sq.first_facet_hit(&[0.3, 0.0], &[0.0, 1.0], true).unwrap();
        match hit {
            Hit::Facet { facet, time, point } => {
                assert_eq!(facet, 2); // top edge
                assert!((time - 1.0).abs() < 1e-12);
                assert!(dist(&point, &[0.3, 1.0]) < 1e-12);
            }
            _ => panic!(),
        }
    }

    #[test]
    fn landing_satisfies_all_halfspaces() {
        let p = n3_simplex();
        let mut rng = SplitMix::new(3);
        for _ in 0..200 {
            let (fid, x) = p.sample_boundary(&mut rng);
            let i = fid; // field of the standard model
            let mut v = vec![-1.0 / 3.0; 3];
            v[i] += 1.0;
            match p.first_facet_hit(&x, &v, true) {
                Ok(Hit::Facet { facet, point, .. }) => {
                    assert!(p.contains(&point, TAU_GEOM * 10.0));
                    let f = p.facet_by_id(facet).unwrap();
                    let hs = &p.halfspaces[f.halfspace];
                    assert!(hs.slack(&point).abs() <= TAU_GEOM * 10.0);
                }
                Ok(Hit::Sigma(_)) => {}
                Err(e) => panic!("cast failed: {e}"),
            }
        }
    }
}
