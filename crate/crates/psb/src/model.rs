//! Builders and validators for the concrete pseudo billiard families:
//! switched-arrival standard models, general 2-D polygon billiards,
//! cut/threshold perturbations with inherited boundary fields, and
//! switched-server multi-field models.

use crate::error::{Error, Result};
use crate::geometry::{
    polygon_polytope, simplex_polytope, ConvexPolytope, Facet, Halfspace, Hit, TAU_GEOM,
};
use crate::math::{dot, norm, normalized, sub};

/// Switched arrival system parameters: `N` buffers drained at rates
/// `rates[i] > 0` with unit total, refilled one at a time; a buffer's
/// facet sits at its threshold level.
#[derive(Debug, Clone)]
pub struct SwitchedArrivalSpec {
    pub rates: Vec<f64>,
    pub thresholds: Vec<f64>,
}

impl SwitchedArrivalSpec {
    pub fn equal_rates(n: usize) -> Self {
        SwitchedArrivalSpec { rates: vec![1.0 / n as f64; n], thresholds: vec![0.0; n] }
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.rates.len();
        if n < 2 || self.thresholds.len() != n {
            return Err(Error::BadModel("need >= 2 buffers and matching thresholds".into()));
        }
        if self.rates.iter().any(|&r| r <= 0.0) {
            return Err(Error::BadModel("rates must be positive".into()));
        }
        let sum: f64 = self.rates.iter().sum();
        if (sum - 1.0).abs() > 1e-12 {
            return Err(Error::RateImbalance(sum));
        }
        if self.thresholds.iter().any(|&v| v < 0.0) {
            return Err(Error::BadModel("thresholds must be nonnegative".into()));
        }
        Ok(())
    }
}

/// Field carried by a facet: a fixed vector, or the pointwise inheritance
/// rule of a cut facet (resolved by prolonging the incoming trajectory to
/// the pre-cut boundary).
#[derive(Debug, Clone)]
pub enum FieldRule {
    Constant(Vec<f64>),
    Inherited,
}

/// A convex polytope with one field rule per facet and a cyclic tie-break
/// order; the full single-field dynamical system.
#[derive(Debug, Clone)]
pub struct PseudoBilliardModel {
    pub polytope: ConvexPolytope,
    /// Aligned with `polytope.facets`.
    fields: Vec<FieldRule>,
    /// Facet ids in cyclic tie-break order (ascending id by construction).
    pub tiebreak: Vec<usize>,
    /// The model before the most recent cut; used to resolve inherited fields.
    pub parent: Option<Box<PseudoBilliardModel>>,
}

const INHERIT_DEPTH_CAP: usize = 16;

impl PseudoBilliardModel {
    pub fn new(polytope: ConvexPolytope, fields_by_id: &[(usize, Vec<f64>)]) -> Result<Self> {
        let mut fields = Vec::with_capacity(polytope.facets.len());
        for f in &polytope.facets {
            let v = fields_by_id
                .iter()
                .find(|(id, _)| *id == f.id)
                .map(|(_, v)| v.clone())
                .ok_or_else(|| Error::BadModel(format!("missing field for facet {}", f.id)))?;
            fields.push(FieldRule::Constant(v));
        }
        let tiebreak = polytope.facets.iter().map(|f| f.id).collect();
        let model = PseudoBilliardModel { polytope, fields, tiebreak, parent: None };
        model.validate_inward()?;
        Ok(model)
    }

    fn validate_inward(&self) -> Result<()> {
        for (facet, rule) in self.polytope.facets.iter().zip(&self.fields) {
            if let FieldRule::Constant(v) = rule {
                if !self.polytope.in_hull_tangent(v) {
                    return Err(Error::OffHull);
                }
                if dot(&facet.inward_normal, v) <= TAU_GEOM * norm(v) {
                    return Err(Error::OutwardField);
                }
            }
        }
        Ok(())
    }

    pub fn field_rule(&self, facet_id: usize) -> Option<&FieldRule> {
        self.polytope
            .facets
            .iter()
            .position(|f| f.id == facet_id)
            .map(|i| &self.fields[i])
    }

    pub fn facet(&self, facet_id: usize) -> Option<&Facet> {
        self.polytope.facet_by_id(facet_id)
    }

    /// Root of the cut ancestry chain (the unperturbed model).
    pub fn root(&self) -> &PseudoBilliardModel {
        let mut m = self;
        while let Some(p) = &m.parent {
            m = p;
        }
        m
    }

    /// Resolve the outgoing field at `point` on `facet_id`. Cut facets
    /// require the incoming velocity `v_in`.
    pub fn resolve_field(
        &self,
        facet_id: usize,
        point: &[f64],
        v_in: Option<&[f64]>,
    ) -> Result<Vec<f64>> {
        match self.field_rule(facet_id) {
            Some(FieldRule::Constant(v)) => Ok(v.clone()),
            Some(FieldRule::Inherited) => {
                let v_in = v_in.ok_or_else(|| {
                    Error::BadModel("incoming velocity required on a cut facet".into())
                })?;
                self.inherited_field(facet_id, point, v_in)
            }
            None => Err(Error::BadModel(format!("unknown facet {facet_id}"))),
        }
    }

    /// Field assigned at the virtual point where the uncut trajectory
    /// would have landed: prolong `v_in` from `point` to the boundary of
    /// the pre-cut polytope, chaining through earlier cuts if needed.
    pub fn inherited_field(
        &self,
        cut_facet_id: usize,
        point: &[f64],
        v_in: &[f64],
    ) -> Result<Vec<f64>> {
        let owner = self
            .cut_owner(cut_facet_id)
            .ok_or_else(|| Error::BadModel(format!("facet {cut_facet_id} is not a cut facet")))?;
        // Grazing arrivals cannot be prolonged.
        let facet = owner.facet(cut_facet_id).unwrap();
        let hs = &owner.polytope.halfspaces[facet.halfspace];
        if dot(&hs.normal, v_in).abs() <= TAU_GEOM {
            return Err(Error::NoVirtualHit);
        }
        let parent = owner.parent.as_deref().expect("cut owner has a parent");
        parent.resolve_virtual(point, v_in, INHERIT_DEPTH_CAP)
    }

    /// The ancestor model in which `facet_id` is the freshly created cut.
    fn cut_owner(&self, facet_id: usize) -> Option<&PseudoBilliardModel> {
        let mut m = self;
        loop {
            match (m.field_rule(facet_id), &m.parent) {
                (Some(FieldRule::Inherited), Some(p)) => {
                    if p.facet(facet_id).is_none() {
                        return Some(m);
                    }
                    m = p;
                }
                _ => return None,
            }
        }
    }

    /// Cast `v_in` from `point` (interior or boundary of this polytope)
    /// and return the constant field at the landing facet, recursing
    /// through this model's own cut facets.
    fn resolve_virtual(&self, point: &[f64], v_in: &[f64], depth: usize) -> Result<Vec<f64>> {
        if depth == 0 {
            return Err(Error::NoVirtualHit);
        }
        let hit = self
            .polytope
            .first_facet_hit(point, v_in, false)
            .map_err(|_| Error::NoVirtualHit)?;
        let (facet_id, landing) = match hit {
            Hit::Facet { facet, point, .. } => (facet, point),
            // A virtual corner hit is resolved on the lowest facet id.
            Hit::Sigma(s) => (s.facets[0], s.point),
        };
        match self.field_rule(facet_id) {
            Some(FieldRule::Constant(v)) => Ok(v.clone()),
            Some(FieldRule::Inherited) => {
                let owner = self.cut_owner(facet_id).ok_or(Error::NoVirtualHit)?;
                let parent = owner.parent.as_deref().ok_or(Error::NoVirtualHit)?;
                parent.resolve_virtual(&landing, v_in, depth - 1)
            }
            None => Err(Error::NoVirtualHit),
        }
    }

    /// Intersect the state region with `h`. The new facet (if the plane
    /// meets the interior) carries the inherited rule.
    pub fn cut(&self, h: &Halfspace) -> Result<PseudoBilliardModel> {
        let polytope = self.polytope.cut(h)?;
        let mut fields = Vec::with_capacity(polytope.facets.len());
        for f in &polytope.facets {
            match self.field_rule(f.id) {
                Some(rule) => fields.push(rule.clone()),
                None => fields.push(FieldRule::Inherited),
            }
        }
        let tiebreak = polytope.facets.iter().map(|f| f.id).collect();
        Ok(PseudoBilliardModel {
            polytope,
            fields,
            tiebreak,
            parent: Some(Box::new(self.clone())),
        })
    }

    /// Ids of cut facets in this model.
    pub fn cut_facets(&self) -> Vec<usize> {
        self.polytope.facets.iter().filter(|f| f.is_cut).map(|f| f.id).collect()
    }

    /// Vertex lines of the root model: for each root vertex and each root
    /// facet not containing it, the full straight line through the vertex
    /// parallel to that facet's field.
    pub fn vertex_lines(&self) -> Result<Vec<VertexLine>> {
        let root = self.root();
        let mut lines = Vec::new();
        for (vi, v) in root.polytope.vertices.iter().enumerate() {
            for (facet, rule) in root.polytope.facets.iter().zip(&root.fields) {
                let hs = &root.polytope.halfspaces[facet.halfspace];
                if hs.slack(v).abs() <= 1e-7 {
                    continue; // vertex lies on this facet
                }
                let dir = match rule {
                    FieldRule::Constant(d) => normalized(d).ok_or(Error::LineParallelToFace)?,
                    FieldRule::Inherited => {
                        return Err(Error::Unsupported(
                            "vertex lines require constant root fields".into(),
                        ))
                    }
                };
                lines.push(VertexLine { vertex: vi, point: v.clone(), opposite_facet: facet.id, dir });
            }
        }
        Ok(lines)
    }
}

/// Full line through a polytope vertex parallel to the field of a facet
/// not containing it.
#[derive(Debug, Clone)]
pub struct VertexLine {
    pub vertex: usize,
    pub point: Vec<f64>,
    pub opposite_facet: usize,
    pub dir: Vec<f64>,
}

/// Outcome of the one-vertex-line cut test.
#[derive(Debug, Clone)]
pub struct CutValidity {
    pub valid: bool,
    /// Advisory: the cut met no vertex line at all.
    pub advisory_no_lines: bool,
    /// Root vertex indices whose lines cross the cut facet's relative interior.
    pub crossed: Vec<usize>,
}

/// A cut is compatible with the unperturbed Markov structure exactly when
/// its facet meets one vertex line; zero crossings are reported valid with
/// an advisory flag.
pub fn check_cut_validity(model: &PseudoBilliardModel, cut_facet_id: usize) -> Result<CutValidity> {
    let facet = model
        .facet(cut_facet_id)
        .ok_or_else(|| Error::BadModel(format!("unknown facet {cut_facet_id}")))?;
    if !facet.is_cut {
        return Err(Error::BadModel(format!("facet {cut_facet_id} is not a cut facet")));
    }
    let lines = model.vertex_lines()?;
    let mut crossed = Vec::new();
    for line in &lines {
        if line_meets_facet_interior(&line.point, &line.dir, facet) && !crossed.contains(&line.vertex)
        {
            crossed.push(line.vertex);
        }
    }
    crossed.sort_unstable();
    Ok(CutValidity {
        valid: crossed.len() <= 1,
        advisory_no_lines: crossed.is_empty(),
        crossed,
    })
}

/// Does the full line `p + t d` meet the relative interior of `facet`?
pub fn line_meets_facet_interior(p: &[f64], d: &[f64], facet: &Facet) -> bool {
    match facet.tangent.len() {
        1 => {
            let a = &facet.vertices[0];
            let b = facet.vertices.last().unwrap();
            let e = sub(b, a);
            // Solve p + t d = a + s e in the plane spanned by (d, e).
            let rhs = sub(a, p);
            // Least-squares via normal equations on the 2-column system [d, -e].
            let dd = dot(d, d);
            let de = dot(d, &e);
            let ee = dot(&e, &e);
            let det = dd * ee - de * de;
            if det.abs() < 1e-14 {
                return false; // line parallel to the facet
            }
            let rd = dot(&rhs, d);
            let re = dot(&rhs, &e);
            let t = (rd * ee - re * de) / det;
            let s = (de * rd - dd * re) / det;
            // Check the solution is consistent (the lines actually meet).
            let meet_gap: f64 = (0..p.len())
                .map(|k| (p[k] + t * d[k]) - (a[k] + s * e[k]))
                .map(|x| x * x)
                .sum::<f64>()
                .sqrt();
            if meet_gap > 1e-7 {
                return false;
            }
            let margin = TAU_GEOM / ee.sqrt();
            s > margin && s < 1.0 - margin
        }
        2 => {
            // Intersect the line with the facet plane, then test strict
            // containment in the facet polygon.
            let n = &facet.inward_normal;
            let denom = dot(n, d);
            if denom.abs() < 1e-12 {
                return false;
            }
            let t = dot(n, &sub(&facet.anchor, p)) / denom;
            let x: Vec<f64> = (0..p.len()).map(|k| p[k] + t * d[k]).collect();
            let u = facet.to_local(&x);
            let locals: Vec<Vec<f64>> = facet.vertices.iter().map(|v| facet.to_local(v)).collect();
            let m = locals.len();
            for i in 0..m {
                let a = &locals[i];
                let b = &locals[(i + 1) % m];
                let cross = (b[0] - a[0]) * (u[1] - a[1]) - (b[1] - a[1]) * (u[0] - a[0]);
                if cross <= TAU_GEOM {
                    return false;
                }
            }
            true
        }
        _ => false,
    }
}

/// Standard model: state region `{sum x = sum rates} ∩ {x_i >= nu_i}` with
/// field `e_i - rho` on the facet where buffer `i` sits at its threshold.
/// Positive thresholds are realized as half-space cuts with inherited fields.
pub fn build_standard_model(spec: &SwitchedArrivalSpec) -> Result<PseudoBilliardModel> {
    spec.validate()?;
    let n = spec.rates.len();
    let base = simplex_polytope(n, 1.0, &vec![0.0; n])?;
    let fields: Vec<(usize, Vec<f64>)> = (0..n)
        .map(|i| {
            let mut v: Vec<f64> = spec.rates.iter().map(|r| -r).collect();
            v[i] += 1.0;
            (i, v)
        })
        .collect();
    let mut model = PseudoBilliardModel::new(base, &fields)?;
    for (i, &nu) in spec.thresholds.iter().enumerate() {
        if nu > 0.0 {
            let mut normal = vec![0.0; n];
            normal[i] = -1.0;
            model = model.cut(&Halfspace::new(normal, -nu)?)?;
        }
    }
    Ok(model)
}

/// General 2-D polygon billiard: counterclockwise vertices, one constant
/// field per edge (edge i joins vertex i to vertex i+1).
pub fn build_polygon_model(
    vertices: &[Vec<f64>],
    edge_fields: &[Vec<f64>],
) -> Result<PseudoBilliardModel> {
    if vertices.len() != edge_fields.len() {
        return Err(Error::BadModel("one field per edge required".into()));
    }
    let polytope = polygon_polytope(vertices)?;
    let fields: Vec<(usize, Vec<f64>)> =
        edge_fields.iter().enumerate().map(|(i, v)| (i, v.clone())).collect();
    PseudoBilliardModel::new(polytope, &fields)
}

/// Field-selection rule of the switched server system.
#[derive(Debug, Clone)]
pub enum SwitchPolicy {
    /// Counter mod N incremented at every collision (skew-product driver).
    Cyclic,
    /// Categorical draw per collision from the landing facet's distribution.
    Stochastic { probabilities: Vec<Vec<f64>>, floor: f64, seed: u64 },
}

/// One region, several selectable fields per facet.
#[derive(Debug, Clone)]
pub struct SwitchedServerModel {
    pub polytope: ConvexPolytope,
    /// `fields[k][j]`: field j on the k-th facet (facet order of the polytope).
    pub fields: Vec<Vec<Vec<f64>>>,
    pub policy: SwitchPolicy,
}

impl SwitchedServerModel {
    pub fn field(&self, facet_id: usize, index: usize) -> Option<&Vec<f64>> {
        let pos = self.polytope.facets.iter().position(|f| f.id == facet_id)?;
        self.fields[pos].get(index)
    }

    pub fn num_fields(&self) -> usize {
        self.fields.first().map(|f| f.len()).unwrap_or(0)
    }

    pub fn probabilities_at(&self, facet_id: usize) -> Option<&Vec<f64>> {
        match &self.policy {
            SwitchPolicy::Stochastic { probabilities, .. } => {
                let pos = self.polytope.facets.iter().position(|f| f.id == facet_id)?;
                probabilities.get(pos.min(probabilities.len() - 1))
            }
            SwitchPolicy::Cyclic => None,
        }
    }
}

/// Validate and assemble a switched server model. Probabilities are
/// piecewise constant on the facet partition; a single vector broadcasts
/// to every facet.
pub fn build_server_model(
    polytope: ConvexPolytope,
    fields: Vec<Vec<Vec<f64>>>,
    policy: SwitchPolicy,
) -> Result<SwitchedServerModel> {
    if fields.len() != polytope.facets.len() {
        return Err(Error::BadModel("one field list per facet required".into()));
    }
    let n = fields.first().map(|f| f.len()).unwrap_or(0);
    if n < 2 {
        return Err(Error::BadModel("switched server needs >= 2 fields per facet".into()));
    }
    for (facet, flist) in polytope.facets.iter().zip(&fields) {
        if flist.len() != n {
            return Err(Error::BadModel("field count differs across facets".into()));
        }
        for v in flist {
            if !polytope.in_hull_tangent(v) {
                return Err(Error::OffHull);
            }
            if dot(&facet.inward_normal, v) <= TAU_GEOM * norm(v) {
                return Err(Error::OutwardField);
            }
        }
    }
    let policy = match policy {
        SwitchPolicy::Cyclic => SwitchPolicy::Cyclic,
        SwitchPolicy::Stochastic { probabilities, floor, seed } => {
            if probabilities.is_empty() {
                return Err(Error::BadProbabilities("no distributions supplied".into()));
            }
            let probabilities = if probabilities.len() == 1 {
                vec![probabilities[0].clone(); polytope.facets.len()]
            } else if probabilities.len() == polytope.facets.len() {
                probabilities
            } else {
                return Err(Error::BadProbabilities(
                    "need one distribution, or one per facet".into(),
                ));
            };
            if floor.is_nan() || floor <= 0.0 {
                return Err(Error::BadProbabilities("floor q must be positive".into()));
            }
            for p in &probabilities {
                if p.len() != n {
                    return Err(Error::BadProbabilities("distribution arity != field count".into()));
                }
                let sum: f64 = p.iter().sum();
                if (sum - 1.0).abs() > 1e-9 {
                    return Err(Error::BadProbabilities(format!("probabilities sum to {sum}")));
                }
                if p.iter().any(|&pi| pi <= floor) {
                    return Err(Error::BadProbabilities(format!(
                        "every probability must exceed the floor q={floor}"
                    )));
                }
            }
            SwitchPolicy::Stochastic { probabilities, floor, seed }
        }
    };
    Ok(SwitchedServerModel { polytope, fields, policy })
}

/// Uniform space discretization: every step advances exactly `step` along
/// the current field (folding through collisions).
#[derive(Debug, Clone, Copy)]
pub struct PacketScheme {
    pub step: f64,
}

impl PacketScheme {
    pub fn new(step: f64) -> Result<Self> {
        if step.is_nan() || step <= 0.0 {
            return Err(Error::StepTooLarge);
        }
        Ok(PacketScheme { step })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::{dist, scale};

    #[test]
    fn standard_model_equal_rates() {
        let m = build_standard_model(&SwitchedArrivalSpec::equal_rates(3)).unwrap();
        assert_eq!(m.polytope.facets.len(), 3);
        match m.field_rule(0).unwrap() {
            FieldRule::Constant(v) => {
                assert!(dist(v, &[2.0 / 3.0, -1.0 / 3.0, -1.0 / 3.0]) < 1e-12);
            }
            _ => panic!(),
        }
        // every standard field sums to zero
        for id in 0..3 {
            if let FieldRule::Constant(v) = m.field_rule(id).unwrap() {
                assert!(v.iter().sum::<f64>().abs() < 1e-12);
            }
        }
    }

    #[test]
    fn rate_imbalance_rejected() {
        let spec =
            SwitchedArrivalSpec { rates: vec![0.5, 0.3, 0.1], thresholds: vec![0.0, 0.0, 0.0] };
        assert!(matches!(build_standard_model(&spec).unwrap_err(), Error::RateImbalance(_)));
    }

    #[test]
    fn threshold_becomes_cut_facet() {
        let spec = SwitchedArrivalSpec {
            rates: vec![1.0 / 3.0; 3],
            thresholds: vec![0.1, 0.0, 0.0],
        };
        let m = build_standard_model(&spec).unwrap();
        assert_eq!(m.cut_facets(), vec![3]);
        assert!(m.facet(0).is_none());
        // the region is a smaller triangle: three facets survive
        assert_eq!(m.polytope.facets.len(), 3);
        assert!(m.parent.is_some());
    }

    #[test]
    fn oversized_threshold_empties_region() {
        let spec = SwitchedArrivalSpec {
            rates: vec![1.0 / 3.0; 3],
            thresholds: vec![2.0, 0.0, 0.0],
        };
        assert!(matches!(build_standard_model(&spec).unwrap_err(), Error::EmptyPolytope));
    }

    #[test]
    fn inherited_field_hand_raycast() {
        // nu_1 = 0.1; incoming e^2 - rho from (0.1, 0.55, 0.35) prolongs to
        // (0, 0.75, 0.25) on the original facet {x1 = 0} after t = 0.3.
        let spec = SwitchedArrivalSpec {
            rates: vec![1.0 / 3.0; 3],
            thresholds: vec![0.1, 0.0, 0.0],
        };
        let m = build_standard_model(&spec).unwrap();
        let v_in = vec![-1.0 / 3.0, 2.0 / 3.0, -1.0 / 3.0];
        let f = m.inherited_field(3, &[0.1, 0.55, 0.35], &v_in).unwrap();
        assert!(dist(&f, &[2.0 / 3.0, -1.0 / 3.0, -1.0 / 3.0]) < 1e-12);
    }

    #[test]
    fn inherited_field_piecewise_constant_with_expected_value_set() {
        let spec = SwitchedArrivalSpec {
            rates: vec![1.0 / 3.0; 3],
            thresholds: vec![0.1, 0.0, 0.0],
        };
        let m = build_standard_model(&spec).unwrap();
        let e1 = vec![2.0 / 3.0, -1.0 / 3.0, -1.0 / 3.0];
        let e2 = vec![-1.0 / 3.0, 2.0 / 3.0, -1.0 / 3.0];
        let e3 = vec![-1.0 / 3.0, -1.0 / 3.0, 2.0 / 3.0];
        // away from the facet ends the virtual ray's first zero coordinate
        // is x1, so the inherited field is e^1 - rho
        for k in 1..8 {
            let a = 0.15 + 0.7 * k as f64 / 8.0;
            let xi = vec![0.1, a, 0.9 - a];
            let f = m.inherited_field(3, &xi, &e2).unwrap();
            assert!(dist(&f, &e1) < 1e-12);
            let f = m.inherited_field(3, &xi, &e3).unwrap();
            assert!(dist(&f, &e1) < 1e-12);
        }
        // near an end the other buffer empties first in the virtual flight
        let f = m.inherited_field(3, &[0.1, 0.05, 0.85], &e3).unwrap();
        assert!(dist(&f, &e2) < 1e-12);
    }

    #[test]
    fn tangent_incoming_velocity_has_no_virtual_hit() {
        let spec = SwitchedArrivalSpec {
            rates: vec![1.0 / 3.0; 3],
            thresholds: vec![0.1, 0.0, 0.0],
        };
        let m = build_standard_model(&spec).unwrap();
        // v parallel to the cut plane (v1 = 0)
        let v = vec![0.0, 1.0, -1.0];
        assert!(matches!(
            m.inherited_field(3, &[0.1, 0.55, 0.35], &v).unwrap_err(),
            Error::NoVirtualHit
        ));
    }

    fn equilateral() -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
        let h = 3f64.sqrt() / 2.0;
        let verts = vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.5, h]];
        // inward perpendicular fields per edge AB, BC, CA
        let fields = vec![
            vec![0.0, 1.0],
            vec![-h, -0.5],
            vec![h, -0.5],
        ];
        (verts, fields)
    }

    #[test]
    fn polygon_model_builds_and_rejects_tangent_field() {
        let (verts, fields) = equilateral();
        assert!(build_polygon_model(&verts, &fields).is_ok());
        let mut bad = fields.clone();
        bad[0] = vec![1.0, 0.0]; // parallel to edge AB
        assert!(matches!(
            build_polygon_model(&verts, &bad).unwrap_err(),
            Error::OutwardField
        ));
    }

    #[test]
    fn corner_cut_crosses_exactly_one_vertex_line() {
        let (verts, fields) = equilateral();
        let m = build_polygon_model(&verts, &fields).unwrap();
        // horizontal cut just under vertex C = (0.5, sqrt(3)/2)
        let y = 0.8 * 3f64.sqrt() / 2.0;
        let cut = m.cut(&Halfspace::new(vec![0.0, 1.0], y).unwrap()).unwrap();
        let id = cut.cut_facets()[0];
        let report = check_cut_validity(&cut, id).unwrap();
        assert!(report.valid);
        assert_eq!(report.crossed.len(), 1);
        // the crossed line belongs to vertex C
        let vc = cut.root().polytope.vertices[report.crossed[0]].clone();
        assert!(dist(&vc, &[0.5, 3f64.sqrt() / 2.0]) < 1e-9);
    }

    #[test]
    fn centroid_cut_crosses_all_three_altitudes() {
        let (verts, fields) = equilateral();
        let m = build_polygon_model(&verts, &fields).unwrap();
        // cut through the centroid, normal pointing up-right
        let n = vec![1.0, 1.0];
        let c = vec![0.5, 3f64.sqrt() / 6.0];
        let cut = m.cut(&Halfspace::new(n.clone(), dot(&n, &c)).unwrap()).unwrap();
        let id = cut.cut_facets()[0];
        let report = check_cut_validity(&cut, id).unwrap();
        assert!(!report.valid);
        assert_eq!(report.crossed.len(), 3);
    }

    #[test]
    fn square_corner_cut_meets_no_lines() {
        // Perpendicular unit square: the vertex lines through each corner
        // run along the edges, so a small corner cut meets none of them
        // in its relative interior.
        let verts = vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![1.0, 1.0], vec![0.0, 1.0]];
        let fields = vec![vec![0.0, 1.0], vec![-1.0, 0.0], vec![0.0, -1.0], vec![1.0, 0.0]];
        let m = build_polygon_model(&verts, &fields).unwrap();
        let n = vec![1.0, 1.0];
        let cut = m.cut(&Halfspace::new(n, 1.9).unwrap()).unwrap();
        let id = cut.cut_facets()[0];
        let report = check_cut_validity(&cut, id).unwrap();
        assert!(report.valid);
        assert!(report.advisory_no_lines);
        assert!(report.crossed.is_empty());
    }

    fn triangle_server_fields(polytope: &ConvexPolytope) -> Vec<Vec<Vec<f64>>> {
        // each facet carries the inward-signed perpendiculars of the other two
        let mut out = Vec::new();
        for f in &polytope.facets {
            let mut list = Vec::new();
            for g in &polytope.facets {
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

    #[test]
    fn server_model_builds_cyclic_and_stochastic() {
        let (verts, _) = equilateral();
        let p = polygon_polytope(&verts).unwrap();
        let fields = triangle_server_fields(&p);
        assert!(build_server_model(p.clone(), fields.clone(), SwitchPolicy::Cyclic).is_ok());
        let pol = SwitchPolicy::Stochastic {
            probabilities: vec![vec![0.5, 0.5]],
            floor: 0.1,
            seed: 7,
        };
        assert!(build_server_model(p.clone(), fields.clone(), pol).is_ok());
        let bad = SwitchPolicy::Stochastic {
            probabilities: vec![vec![0.7, 0.4]],
            floor: 0.1,
            seed: 7,
        };
        assert!(matches!(
            build_server_model(p, fields, bad).unwrap_err(),
            Error::BadProbabilities(_)
        ));
    }
}
