//! Strong Markov partition verification and transitivity components.
//!
//! Facet partitions are exact objects here: intervals in facet charts for
//! two-dimensional models, convex chart polygons for three-dimensional
//! ones. Images under the return map are computed branch by branch (the
//! branch domains of a constant-field flight are convex), so coverage
//! comparisons are interval unions in 1-D and convex polygon clipping in
//! 2-D.

use crate::analysis::lyapunov::lyapunov_spectrum;
use crate::dynamics::{initial_state, orbit, piece_jacobian, AffineMapPiece, OrbitStatus};
use crate::error::{Error, Result};
use crate::geometry::TAU_GEOM;
use crate::math::{dot, SplitMix};
use crate::model::{FieldRule, PseudoBilliardModel};

const COVER_TOL: f64 = 1e-9;
/// Relative volume tolerance for 2-D facet comparisons.
const VOL_TOL: f64 = 1e-3;

#[derive(Debug, Clone)]
pub enum Region {
    /// Interval in the facet chart.
    Interval(f64, f64),
    /// Convex polygon in the facet chart, counterclockwise.
    Polygon(Vec<Vec<f64>>),
}

impl Region {
    pub fn measure(&self) -> f64 {
        match self {
            Region::Interval(a, b) => b - a,
            Region::Polygon(p) => polygon_area(p),
        }
    }
}

#[derive(Debug, Clone)]
pub struct PartitionElement {
    pub id: usize,
    pub facet: usize,
    pub region: Region,
    pub label: String,
}

/// The coarsest natural partition: one element per facet.
pub fn facet_partition(model: &PseudoBilliardModel) -> Vec<PartitionElement> {
    let mut out = Vec::new();
    for (i, f) in model.polytope.facets.iter().enumerate() {
        let region = match f.tangent.len() {
            1 => {
                let (lo, hi) = f.local_interval();
                Region::Interval(lo, hi)
            }
            _ => Region::Polygon(f.vertices.iter().map(|v| f.to_local(v)).collect()),
        };
        out.push(PartitionElement { id: i, facet: f.id, region, label: format!("F{}", f.id) });
    }
    out
}

/// Refine each facet into the continuity pieces of the return map (the
/// preimages of the target facets).
pub fn refine_by_flight_targets(model: &PseudoBilliardModel) -> Result<Vec<PartitionElement>> {
    let mut out = Vec::new();
    let mut id = 0;
    for f in &model.polytope.facets {
        let field = constant_field(model, f.id)?;
        match f.tangent.len() {
            1 => {
                let (lo, hi) = f.local_interval();
                for br in branch_intervals(model, f.id, &field, lo, hi)? {
                    out.push(PartitionElement {
                        id,
                        facet: f.id,
                        region: Region::Interval(br.lo, br.hi),
                        label: format!("F{}>{}", f.id, br.target),
                    });
                    id += 1;
                }
            }
            2 => {
                let poly: Vec<Vec<f64>> = f.vertices.iter().map(|v| f.to_local(v)).collect();
                for br in branch_polygons(model, f.id, &field, &poly)? {
                    out.push(PartitionElement {
                        id,
                        facet: f.id,
                        region: Region::Polygon(br.domain.clone()),
                        label: format!("F{}>{}", f.id, br.target),
                    });
                    id += 1;
                }
            }
            _ => return Err(Error::Unsupported("facet dimension > 2".into())),
        }
    }
    Ok(out)
}

fn constant_field(model: &PseudoBilliardModel, facet_id: usize) -> Result<Vec<f64>> {
    match model.field_rule(facet_id) {
        Some(FieldRule::Constant(v)) => Ok(v.clone()),
        _ => Err(Error::Unsupported(
            "partition analysis requires constant facet fields".into(),
        )),
    }
}

// ---------------------------------------------------------------- 1-D ----

#[derive(Debug, Clone)]
pub struct BranchInterval {
    pub lo: f64,
    pub hi: f64,
    pub target: usize,
    pub piece: AffineMapPiece,
}

impl BranchInterval {
    /// Image interval on the target facet chart.
    pub fn image(&self) -> (f64, f64) {
        let a = self.piece.apply(&[self.lo])[0];
        let b = self.piece.apply(&[self.hi])[0];
        (a.min(b), a.max(b))
    }
}

/// Target facet hit from chart coordinate `u` (usize::MAX on a corner hit).
fn branch_signature(model: &PseudoBilliardModel, facet_id: usize, field: &[f64], u: f64) -> usize {
    let f = model.facet(facet_id).unwrap();
    let x = f.from_local(&[u]);
    match model.polytope.first_facet_hit(&x, field, false) {
        Ok(crate::geometry::Hit::Facet { facet, .. }) => facet,
        _ => usize::MAX,
    }
}

/// Maximal sub-intervals of `[lo, hi]` on which the flight lands on a
/// single facet. Branch domains of a constant field are convex, so plain
/// bisection on differing endpoint signatures is complete.
pub fn branch_intervals(
    model: &PseudoBilliardModel,
    facet_id: usize,
    field: &[f64],
    lo: f64,
    hi: f64,
) -> Result<Vec<BranchInterval>> {
    // probes must sit far enough inside that flight times clear TAU_GEOM
    let eps = 1e-8 * (hi - lo).max(1.0);
    let mut cuts = vec![lo, hi];
    let mut stack = vec![(lo + eps, hi - eps)];
    while let Some((a, b)) = stack.pop() {
        let (sa, sb) = (
            branch_signature(model, facet_id, field, a),
            branch_signature(model, facet_id, field, b),
        );
        if sa == sb || b - a < 1e-12 {
            continue;
        }
        let (mut a, mut b) = (a, b);
        // bisect to the breakpoint between sa and the next signature
        while b - a > 1e-13 {
            let mid = 0.5 * (a + b);
            if branch_signature(model, facet_id, field, mid) == sa {
                a = mid;
            } else {
                b = mid;
            }
        }
        let cut = 0.5 * (a + b);
        cuts.push(cut);
        stack.push((lo + eps, cut - eps));
        stack.push((cut + eps, hi - eps));
    }
    cuts.sort_by(|x, y| x.partial_cmp(y).unwrap());
    cuts.dedup_by(|x, y| (*x - *y).abs() < 1e-11);
    let mut out = Vec::new();
    for w in cuts.windows(2) {
        let (a, b) = (w[0], w[1]);
        if b - a < 1e-11 {
            continue;
        }
        let mid = 0.5 * (a + b);
        let target = branch_signature(model, facet_id, field, mid);
        if target == usize::MAX {
            continue;
        }
        let piece = piece_jacobian(model, facet_id, field, target)?;
        out.push(BranchInterval { lo: a, hi: b, target, piece });
    }
    Ok(out)
}

// ---------------------------------------------------------------- 2-D ----

#[derive(Debug, Clone)]
pub struct BranchPolygon {
    pub domain: Vec<Vec<f64>>,
    pub target: usize,
    pub piece: AffineMapPiece,
}

impl BranchPolygon {
    pub fn image(&self) -> Vec<Vec<f64>> {
        self.domain.iter().map(|u| self.piece.apply(u)).collect()
    }
}

pub fn polygon_area(p: &[Vec<f64>]) -> f64 {
    let n = p.len();
    if n < 3 {
        return 0.0;
    }
    let mut s = 0.0;
    for i in 0..n {
        let a = &p[i];
        let b = &p[(i + 1) % n];
        s += a[0] * b[1] - a[1] * b[0];
    }
    0.5 * s.abs()
}

/// Clip a convex polygon by the half-plane `n.u <= c`.
fn clip_halfplane(poly: &[Vec<f64>], n: &[f64], c: f64) -> Vec<Vec<f64>> {
    let mut out = Vec::new();
    let m = poly.len();
    for i in 0..m {
        let a = &poly[i];
        let b = &poly[(i + 1) % m];
        let (da, db) = (c - dot(n, a), c - dot(n, b));
        if da >= -1e-12 {
            out.push(a.clone());
        }
        if (da > 1e-12 && db < -1e-12) || (da < -1e-12 && db > 1e-12) {
            let t = da / (da - db);
            out.push(vec![a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]);
        }
    }
    out
}

/// Intersection of two convex polygons (ccw), clipped edge by edge.
pub fn polygon_intersection(p: &[Vec<f64>], q: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut cur = p.to_vec();
    let m = q.len();
    for i in 0..m {
        if cur.len() < 3 {
            return Vec::new();
        }
        let a = &q[i];
        let b = &q[(i + 1) % m];
        // interior of a ccw polygon is left of each edge: n.u <= c form
        let n = vec![b[1] - a[1], -(b[0] - a[0])];
        let c = dot(&n, a);
        cur = clip_halfplane(&cur, &n, c);
    }
    ensure_ccw(&mut cur);
    cur
}

fn ensure_ccw(p: &mut [Vec<f64>]) {
    if p.len() >= 3 {
        let mut s = 0.0;
        for i in 0..p.len() {
            let a = &p[i];
            let b = &p[(i + 1) % p.len()];
            s += a[0] * b[1] - a[1] * b[0];
        }
        if s < 0.0 {
            p.reverse();
        }
    }
}

/// Split a chart polygon on facet `facet_id` into flight-target branches:
/// the domain of target j is cut out by the linear inequalities
/// `t_j(u) <= t_k(u)` over competing facets k.
pub fn branch_polygons(
    model: &PseudoBilliardModel,
    facet_id: usize,
    field: &[f64],
    domain: &[Vec<f64>],
) -> Result<Vec<BranchPolygon>> {
    let f = model.facet(facet_id).unwrap();
    // t_j(u) = alpha_j + beta_j . u  for admissible targets
    let mut coeffs: Vec<(usize, f64, Vec<f64>)> = Vec::new();
    for g in &model.polytope.facets {
        if g.id == facet_id {
            continue;
        }
        let hs = &model.polytope.halfspaces[g.halfspace];
        let denom = dot(&hs.normal, field);
        if denom <= 1e-12 {
            continue;
        }
        let alpha = hs.slack(&f.anchor) / denom;
        let beta: Vec<f64> = f
            .tangent
            .iter()
            .map(|b| -dot(&hs.normal, b) / denom)
            .collect();
        coeffs.push((g.id, alpha, beta));
    }
    let mut out = Vec::new();
    for (j, (gj, aj, bj)) in coeffs.iter().enumerate() {
        let mut dom = domain.to_vec();
        for (k, (_, ak, bk)) in coeffs.iter().enumerate() {
            if j == k {
                continue;
            }
            // t_j <= t_k : (bj - bk) . u <= ak - aj
            let n: Vec<f64> = bj.iter().zip(bk).map(|(x, y)| x - y).collect();
            dom = clip_halfplane(&dom, &n, ak - aj);
            if dom.len() < 3 {
                break;
            }
        }
        if dom.len() >= 3 && polygon_area(&dom) > 1e-12 {
            let piece = piece_jacobian(model, facet_id, field, *gj)?;
            ensure_ccw(&mut dom);
            out.push(BranchPolygon { domain: dom, target: *gj, piece });
        }
    }
    Ok(out)
}

// ------------------------------------------------------------- reports ----

#[derive(Debug, Clone)]
pub struct ElementReport {
    pub element: usize,
    pub holds: bool,
    pub injective: bool,
    /// Elements whose union the image was compared against.
    pub covered_elements: Vec<usize>,
    /// Uncovered image measure plus covered-element deficit, relative.
    pub defect: f64,
}

#[derive(Debug, Clone)]
pub struct MarkovReport {
    pub holds: bool,
    pub elements: Vec<ElementReport>,
}

fn validate_partition(
    model: &PseudoBilliardModel,
    partition: &[PartitionElement],
) -> Result<()> {
    for f in &model.polytope.facets {
        let elems: Vec<&PartitionElement> =
            partition.iter().filter(|e| e.facet == f.id).collect();
        if elems.is_empty() {
            return Err(Error::InvalidPartition(format!("facet {} uncovered", f.id)));
        }
        let total: f64 = elems.iter().map(|e| e.region.measure()).sum();
        let facet_measure = match f.tangent.len() {
            1 => {
                let (lo, hi) = f.local_interval();
                // overlap check for intervals
                let mut ivs: Vec<(f64, f64)> = elems
                    .iter()
                    .map(|e| match &e.region {
                        Region::Interval(a, b) => (*a, *b),
                        _ => (0.0, -1.0),
                    })
                    .collect();
                ivs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
                for w in ivs.windows(2) {
                    if w[0].1 > w[1].0 + 1e-7 {
                        return Err(Error::InvalidPartition(format!(
                            "overlapping elements on facet {}",
                            f.id
                        )));
                    }
                }
                hi - lo
            }
            _ => f.measure(),
        };
        if (total - facet_measure).abs() > 1e-6 * facet_measure.max(1.0) {
            return Err(Error::InvalidPartition(format!(
                "facet {} covered measure {total} != {facet_measure}",
                f.id
            )));
        }
    }
    Ok(())
}

/// Check that the image of every element is exactly a union of elements
/// and that the restriction is injective.
pub fn verify_strong_markov(
    model: &PseudoBilliardModel,
    partition: &[PartitionElement],
) -> Result<MarkovReport> {
    validate_partition(model, partition)?;
    let mut reports = Vec::new();
    let mut holds = true;
    for e in partition {
        let field = constant_field(model, e.facet)?;
        let rep = match &e.region {
            Region::Interval(lo, hi) => {
                verify_element_1d(model, partition, e, &field, *lo, *hi)?
            }
            Region::Polygon(poly) => verify_element_2d(model, partition, e, &field, poly)?,
        };
        holds &= rep.holds;
        reports.push(rep);
    }
    Ok(MarkovReport { holds, elements: reports })
}

fn verify_element_1d(
    model: &PseudoBilliardModel,
    partition: &[PartitionElement],
    e: &PartitionElement,
    field: &[f64],
    lo: f64,
    hi: f64,
) -> Result<ElementReport> {
    let branches = branch_intervals(model, e.facet, field, lo, hi)?;
    let mut injective = branches.iter().all(|b| b.piece.linear.at(0, 0).abs() > TAU_GEOM);
    // branch images must not overlap for T|e to stay one-to-one
    for i in 0..branches.len() {
        for j in i + 1..branches.len() {
            if branches[i].target != branches[j].target {
                continue;
            }
            let (a1, b1) = branches[i].image();
            let (a2, b2) = branches[j].image();
            if a1.max(a2) < b1.min(b2) - COVER_TOL {
                injective = false;
            }
        }
    }
    // collect image intervals per target facet
    let mut covered: Vec<usize> = Vec::new();
    let mut defect: f64 = 0.0;
    let mut holds = true;
    for other in partition {
        let mut overlap = 0.0;
        if let Region::Interval(a, b) = other.region {
            for br in &branches {
                if br.target != other.facet {
                    continue;
                }
                let (ia, ib) = br.image();
                overlap += (ib.min(b) - ia.max(a)).max(0.0);
            }
            if overlap > COVER_TOL {
                covered.push(other.id);
                // a touched element must be fully covered
                let miss = (b - a) - overlap;
                if miss > COVER_TOL {
                    holds = false;
                    defect += miss;
                }
            }
        }
    }
    // image must not exceed the union of covered elements
    let image_len: f64 = branches.iter().map(|b| { let (a, bb) = b.image(); bb - a }).sum();
    let covered_len: f64 = covered
        .iter()
        .map(|id| partition.iter().find(|p| p.id == *id).unwrap().region.measure())
        .sum();
    if image_len > covered_len + COVER_TOL * (1.0 + branches.len() as f64) {
        holds = false;
        defect += image_len - covered_len;
    }
    holds &= injective;
    Ok(ElementReport { element: e.id, holds, injective, covered_elements: covered, defect })
}

fn verify_element_2d(
    model: &PseudoBilliardModel,
    partition: &[PartitionElement],
    e: &PartitionElement,
    field: &[f64],
    poly: &[Vec<f64>],
) -> Result<ElementReport> {
    let branches = branch_polygons(model, e.facet, field, poly)?;
    let injective = branches.iter().all(|b| b.piece.linear.det().abs() > TAU_GEOM);
    let mut covered: Vec<usize> = Vec::new();
    let mut defect: f64 = 0.0;
    let mut holds = true;
    let image_area: f64 = branches.iter().map(|b| polygon_area(&b.image())).sum();
    let mut matched_area = 0.0;
    for other in partition {
        if let Region::Polygon(q) = &other.region {
            let mut overlap = 0.0;
            for br in &branches {
                if br.target != other.facet {
                    continue;
                }
                overlap += polygon_area(&polygon_intersection(&br.image(), q));
            }
            let q_area = polygon_area(q);
            if overlap > VOL_TOL * q_area {
                covered.push(other.id);
                matched_area += overlap;
                let miss = q_area - overlap;
                if miss > VOL_TOL * q_area {
                    holds = false;
                    defect += miss / q_area;
                }
            }
        }
    }
    if image_area > matched_area + VOL_TOL * image_area.max(1e-300) {
        holds = false;
        defect += (image_area - matched_area) / image_area.max(1e-300);
    }
    holds &= injective;
    Ok(ElementReport { element: e.id, holds, injective, covered_elements: covered, defect })
}

// -------------------------------------------------------- components ----

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ComponentClass {
    Expanding,
    Neutral,
    Contracting,
    /// Not classified (component is not closed, or no usable orbit).
    Open,
}

#[derive(Debug, Clone)]
pub struct Component {
    pub elements: Vec<usize>,
    pub closed: bool,
    pub class: ComponentClass,
    /// Mean top/bottom Lyapunov exponents of the sampled witness orbits.
    pub lyapunov_max: f64,
    pub lyapunov_min: f64,
    /// Facet itinerary snippet of one witness orbit.
    pub witness: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct ComponentReport {
    pub components: Vec<Component>,
    /// Element adjacency: edge i -> j when Int(T E_i ∩ E_j) is nonempty.
    pub edges: Vec<(usize, usize)>,
}

const LYAP_CLASS_TOL: f64 = 1e-3;

/// Build the element transition graph, find its strongly connected
/// components and classify every closed component by the Lyapunov sign of
/// sampled interior orbits.
pub fn transitivity_components(
    model: &PseudoBilliardModel,
    partition: &[PartitionElement],
) -> Result<ComponentReport> {
    validate_partition(model, partition)?;
    let n = partition.len();
    let mut adj = vec![Vec::<usize>::new(); n];
    let mut edges = Vec::new();
    for (i, e) in partition.iter().enumerate() {
        let field = constant_field(model, e.facet)?;
        match &e.region {
            Region::Interval(lo, hi) => {
                let branches = branch_intervals(model, e.facet, &field, *lo, *hi)?;
                for (j, other) in partition.iter().enumerate() {
                    if let Region::Interval(a, b) = other.region {
                        let touch = branches.iter().any(|br| {
                            if br.target != other.facet {
                                return false;
                            }
                            let (ia, ib) = br.image();
                            ib.min(b) - ia.max(a) > COVER_TOL
                        });
                        if touch {
                            adj[i].push(j);
                            edges.push((i, j));
                        }
                    }
                }
            }
            Region::Polygon(poly) => {
                let branches = branch_polygons(model, e.facet, &field, poly)?;
                for (j, other) in partition.iter().enumerate() {
                    if let Region::Polygon(q) = &other.region {
                        let touch = branches.iter().any(|br| {
                            br.target == other.facet
                                && polygon_area(&polygon_intersection(&br.image(), q)) > 1e-9
                        });
                        if touch {
                            adj[i].push(j);
                            edges.push((i, j));
                        }
                    }
                }
            }
        }
    }
    let sccs = strongly_connected_components(&adj);
    let mut components = Vec::new();
    for scc in sccs {
        let closed = scc
            .iter()
            .all(|&i| adj[i].iter().all(|j| scc.contains(j)));
        let (class, lmax, lmin, witness) = if closed {
            classify_component(model, partition, &scc)?
        } else {
            (ComponentClass::Open, f64::NAN, f64::NAN, Vec::new())
        };
        components.push(Component {
            elements: scc,
            closed,
            class,
            lyapunov_max: lmax,
            lyapunov_min: lmin,
            witness,
        });
    }
    Ok(ComponentReport { components, edges })
}

fn classify_component(
    model: &PseudoBilliardModel,
    partition: &[PartitionElement],
    scc: &[usize],
) -> Result<(ComponentClass, f64, f64, Vec<usize>)> {
    let mut rng = SplitMix::new(0x5eed);
    let mut tops: Vec<f64> = Vec::new();
    let mut bottoms: Vec<f64> = Vec::new();
    let mut witness = Vec::new();
    let steps = 20_000;
    for attempt in 0..24 {
        let &ei = &scc[attempt % scc.len()];
        let e = &partition[ei];
        let f = model.facet(e.facet).unwrap();
        let x = match &e.region {
            Region::Interval(lo, hi) => {
                let u = rng.uniform(lo + 0.05 * (hi - lo), hi - 0.05 * (hi - lo));
                f.from_local(&[u])
            }
            Region::Polygon(poly) => {
                // rejection sample inside the polygon's bounding box
                let (mut lo, mut hi) = (vec![f64::INFINITY; 2], vec![f64::NEG_INFINITY; 2]);
                for p in poly {
                    for k in 0..2 {
                        lo[k] = lo[k].min(p[k]);
                        hi[k] = hi[k].max(p[k]);
                    }
                }
                let mut u = vec![0.0; 2];
                let mut ok = false;
                for _ in 0..200 {
                    u = vec![rng.uniform(lo[0], hi[0]), rng.uniform(lo[1], hi[1])];
                    if point_in_polygon(&u, poly, -1e-9) {
                        ok = true;
                        break;
                    }
                }
                if !ok {
                    continue;
                }
                f.from_local(&u)
            }
        };
        let s0 = match initial_state(model, e.facet, &x) {
            Ok(s) => s,
            Err(_) => continue,
        };
        match lyapunov_spectrum(model, &s0, steps) {
            Ok(rep) => {
                tops.push(rep.exponents[0]);
                bottoms.push(*rep.exponents.last().unwrap());
                if witness.is_empty() {
                    let rec = orbit(model, &s0, 16);
                    if rec.status == OrbitStatus::Ok {
                        witness = rec.facets();
                    }
                }
                if tops.len() >= 3 {
                    break;
                }
            }
            Err(_) => continue,
        }
    }
    if tops.is_empty() {
        return Ok((ComponentClass::Open, f64::NAN, f64::NAN, witness));
    }
    let lmax = tops.iter().sum::<f64>() / tops.len() as f64;
    let lmin = bottoms.iter().sum::<f64>() / bottoms.len() as f64;
    let class = if lmin > LYAP_CLASS_TOL {
        ComponentClass::Expanding
    } else if lmax.abs() <= LYAP_CLASS_TOL && lmin.abs() <= LYAP_CLASS_TOL {
        ComponentClass::Neutral
    } else {
        ComponentClass::Contracting
    };
    Ok((class, lmax, lmin, witness))
}

pub fn point_in_polygon(u: &[f64], poly: &[Vec<f64>], tol: f64) -> bool {
    let m = poly.len();
    for i in 0..m {
        let a = &poly[i];
        let b = &poly[(i + 1) % m];
        let cross = (b[0] - a[0]) * (u[1] - a[1]) - (b[1] - a[1]) * (u[0] - a[0]);
        if cross < tol {
            return false;
        }
    }
    true
}

/// Kosaraju over the tiny element graphs.
fn strongly_connected_components(adj: &[Vec<usize>]) -> Vec<Vec<usize>> {
    let n = adj.len();
    let mut order = Vec::with_capacity(n);
    let mut seen = vec![false; n];
    for start in 0..n {
        if seen[start] {
            continue;
        }
        // iterative post-order
        let mut stack = vec![(start, 0usize)];
        seen[start] = true;
        while let Some(&mut (v, ref mut i)) = stack.last_mut() {
            if *i < adj[v].len() {
                let w = adj[v][*i];
                *i += 1;
                if !seen[w] {
                    seen[w] = true;
                    stack.push((w, 0));
                }
            } else {
                order.push(v);
                stack.pop();
            }
        }
    }
    let mut radj = vec![Vec::<usize>::new(); n];
    for (v, outs) in adj.iter().enumerate() {
        for &w in outs {
            radj[w].push(v);
        }
    }
    let mut comp = vec![usize::MAX; n];
    let mut ncomp = 0;
    for &v in order.iter().rev() {
        if comp[v] != usize::MAX {
            continue;
        }
        let mut stack = vec![v];
        comp[v] = ncomp;
        while let Some(u) = stack.pop() {
            for &w in &radj[u] {
                if comp[w] == usize::MAX {
                    comp[w] = ncomp;
                    stack.push(w);
                }
            }
        }
        ncomp += 1;
    }
    let mut out = vec![Vec::new(); ncomp];
    for (v, &c) in comp.iter().enumerate() {
        out[c].push(v);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::model::{build_standard_model, SwitchedArrivalSpec};

    #[test]
    fn n3_facet_images_are_exact_unions() {
        let m = build_standard_model(&SwitchedArrivalSpec::equal_rates(3)).unwrap();
        let part = facet_partition(&m);
        let rep = verify_strong_markov(&m, &part).unwrap();
        assert!(rep.holds, "{:?}", rep.elements);
        for e in &rep.elements {
            assert_eq!(e.covered_elements.len(), 2); // the two other facets
            assert!(e.injective);
        }
    }

    #[test]
    fn contraction_triangle_breaks_markov() {
        let m = fixtures::contraction_triangle_model().unwrap();
        let part = facet_partition(&m);
        let rep = verify_strong_markov(&m, &part).unwrap();
        assert!(!rep.holds);
        // the AB element maps into a proper subset of CA
        let ab = &rep.elements[0];
        assert!(!ab.holds);
    }

    #[test]
    fn overlapping_partition_rejected() {
        let m = build_standard_model(&SwitchedArrivalSpec::equal_rates(3)).unwrap();
        let mut part = facet_partition(&m);
        // duplicate an element to force an overlap
        let dup = part[0].clone();
        part.push(PartitionElement { id: 99, ..dup });
        assert!(matches!(
            verify_strong_markov(&m, &part).unwrap_err(),
            Error::InvalidPartition(_)
        ));
    }

    #[test]
    fn n3_is_one_expanding_component() {
        let m = build_standard_model(&SwitchedArrivalSpec::equal_rates(3)).unwrap();
        let part = facet_partition(&m);
        let rep = transitivity_components(&m, &part).unwrap();
        assert_eq!(rep.components.len(), 1);
        assert!(rep.components[0].closed);
        assert_eq!(rep.components[0].class, ComponentClass::Expanding);
    }

    #[test]
    fn square_splits_into_two_neutral_pairs() {
        // bottom<->top and left<->right exchange; both closed and neutral
        let m = fixtures::perpendicular_square_model(1.0).unwrap();
        let part = facet_partition(&m);
        let rep = transitivity_components(&m, &part).unwrap();
        assert_eq!(rep.components.len(), 2);
        for c in &rep.components {
            assert!(c.closed);
            assert_eq!(c.class, ComponentClass::Neutral);
            assert_eq!(c.elements.len(), 2);
        }
    }

    #[test]
    fn heptagon_has_expanding_and_neutral_closed_components() {
        let m = fixtures::heptagon_model().unwrap();
        let part = facet_partition(&m);
        let rep = transitivity_components(&m, &part).unwrap();
        let closed: Vec<&Component> = rep.components.iter().filter(|c| c.closed).collect();
        assert_eq!(closed.len(), 2, "{:?}", rep.components);
        let classes: Vec<ComponentClass> = closed.iter().map(|c| c.class).collect();
        assert!(classes.contains(&ComponentClass::Expanding));
        assert!(classes.contains(&ComponentClass::Neutral));
        // the chaotic component holds the five edges AG, GF, FE, BC, CD
        let expanding = closed.iter().find(|c| c.class == ComponentClass::Expanding).unwrap();
        let mut facets: Vec<usize> =
            expanding.elements.iter().map(|&i| part[i].facet).collect();
        facets.sort_unstable();
        assert_eq!(facets, vec![1, 2, 4, 5, 6]);
    }

    #[test]
    fn heptagon_edges_match_derivation() {
        let m = fixtures::heptagon_model().unwrap();
        let part = facet_partition(&m);
        let rep = transitivity_components(&m, &part).unwrap();
        let mut got: Vec<(usize, Vec<usize>)> = Vec::new();
        for i in 0..part.len() {
            let mut outs: Vec<usize> = rep
                .edges
                .iter()
                .filter(|(a, _)| *a == i)
                .map(|(_, b)| part[*b].facet)
                .collect();
            outs.sort_unstable();
            got.push((part[i].facet, outs));
        }
        got.sort();
        let mut expect = fixtures::heptagon_expected_edges();
        expect.sort();
        assert_eq!(got, expect);
    }

    #[test]
    fn n4_refined_partition_satisfies_strong_markov() {
        let m = build_standard_model(&SwitchedArrivalSpec::equal_rates(4)).unwrap();
        let part = refine_by_flight_targets(&m).unwrap();
        assert_eq!(part.len(), 12); // 4 facets x 3 targets
        let rep = verify_strong_markov(&m, &part).unwrap();
        assert!(rep.holds, "{:?}", rep.elements.iter().filter(|e| !e.holds).collect::<Vec<_>>());
    }
}
