//! The exact first-return map, its piecewise-affine derivatives, orbit
//! generation, space-discretized (packet) dynamics and the switched-server
//! driver.

use crate::error::{Error, Result};
use crate::geometry::{Hit, SigmaHit, TAU_GEOM};
use crate::math::{axpy, dist, dot, normalized, Mat, SplitMix};
use crate::model::{PacketScheme, PseudoBilliardModel, SwitchPolicy, SwitchedServerModel};

/// Phase point of the return map: a boundary point together with its facet
/// and the resolved outgoing field.
#[derive(Debug, Clone)]
pub struct BoundaryState {
    pub facet: usize,
    pub position: Vec<f64>,
    /// Outgoing velocity (resolved through the inheritance rule on cut facets).
    pub field: Vec<f64>,
    /// Set when this state was produced by a simultaneous-hit tie-break.
    pub sigma: bool,
}

/// Build a start state on a facet. Cut facets need an incoming velocity to
/// resolve their field, so plain starts are restricted to constant facets.
pub fn initial_state(
    model: &PseudoBilliardModel,
    facet_id: usize,
    position: &[f64],
) -> Result<BoundaryState> {
    let facet = model
        .facet(facet_id)
        .ok_or_else(|| Error::BadModel(format!("unknown facet {facet_id}")))?;
    let hs = &model.polytope.halfspaces[facet.halfspace];
    if hs.slack(position).abs() > 1e-7 || !model.polytope.contains(position, 1e-7) {
        return Err(Error::BadModel("initial point is not on the facet".into()));
    }
    let field = model.resolve_field(facet_id, position, None)?;
    Ok(BoundaryState { facet: facet_id, position: position.to_vec(), field, sigma: false })
}

/// Resolve a landing into the next state, applying the cyclic tie-break on
/// simultaneous hits: candidates are tried in cyclic order starting after
/// the current facet and the first whose field re-enters the interior wins.
fn resolve_landing(
    model: &PseudoBilliardModel,
    current_facet: usize,
    hit: Hit,
    v_in: &[f64],
) -> Result<BoundaryState> {
    match hit {
        Hit::Facet { facet, point, .. } => {
            let field = model.resolve_field(facet, &point, Some(v_in))?;
            if !model.polytope.enters_interior(&point, &field) {
                return Err(Error::DegenerateVertex);
            }
            Ok(BoundaryState { facet, position: point, field, sigma: false })
        }
        Hit::Sigma(s) => tie_break(model, current_facet, &s, v_in),
    }
}

fn tie_break(
    model: &PseudoBilliardModel,
    current_facet: usize,
    s: &SigmaHit,
    v_in: &[f64],
) -> Result<BoundaryState> {
    let order = &model.tiebreak;
    let pos = order.iter().position(|&id| id == current_facet).unwrap_or(0);
    for off in 1..=order.len() {
        let id = order[(pos + off) % order.len()];
        if !s.facets.contains(&id) {
            continue;
        }
        if let Ok(field) = model.resolve_field(id, &s.point, Some(v_in)) {
            if model.polytope.enters_interior(&s.point, &field) {
                return Ok(BoundaryState {
                    facet: id,
                    position: s.point.clone(),
                    field,
                    sigma: true,
                });
            }
        }
    }
    Err(Error::DegenerateVertex)
}

/// One application of the first-return map `T`.
pub fn return_step(model: &PseudoBilliardModel, s: &BoundaryState) -> Result<BoundaryState> {
    let hit = model.polytope.first_facet_hit(&s.position, &s.field, true)?;
    resolve_landing(model, s.facet, hit, &s.field)
}

/// Flight time of the next collision (used by orbit records).
fn flight_time(model: &PseudoBilliardModel, s: &BoundaryState) -> Result<f64> {
    match model.polytope.first_facet_hit(&s.position, &s.field, true)? {
        Hit::Facet { time, .. } => Ok(time),
        Hit::Sigma(sig) => Ok(sig.time),
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OrbitStatus {
    Ok,
    DegenerateVertex,
    Error(String),
}

#[derive(Debug, Clone)]
pub struct OrbitStep {
    pub facet: usize,
    pub point: Vec<f64>,
    pub flight_time: f64,
    /// Outgoing field resolved at this point (the next piece's direction).
    pub field: Vec<f64>,
    pub sigma: bool,
}

/// Itinerary of facets, boundary points and flight times.
#[derive(Debug, Clone)]
pub struct OrbitRecord {
    pub initial: BoundaryState,
    pub steps: Vec<OrbitStep>,
    pub status: OrbitStatus,
}

impl OrbitRecord {
    pub fn itinerary(&self) -> String {
        self.steps
            .iter()
            .map(|s| s.facet.to_string())
            .collect::<Vec<_>>()
            .join("-")
    }

    pub fn facets(&self) -> Vec<usize> {
        self.steps.iter().map(|s| s.facet).collect()
    }

    /// State before step k (k = 0 is the initial state).
    pub fn state_before(&self, k: usize) -> BoundaryState {
        if k == 0 {
            self.initial.clone()
        } else {
            let s = &self.steps[k - 1];
            BoundaryState {
                facet: s.facet,
                position: s.point.clone(),
                field: s.field.clone(),
                sigma: s.sigma,
            }
        }
    }
}

/// Apply the return map up to `n` times, recording the trajectory.
/// A degenerate vertex terminates the orbit with the matching status.
pub fn orbit(model: &PseudoBilliardModel, s0: &BoundaryState, n: usize) -> OrbitRecord {
    let mut steps = Vec::with_capacity(n.min(1 << 20));
    let mut state = s0.clone();
    let mut status = OrbitStatus::Ok;
    for _ in 0..n {
        let t = match flight_time(model, &state) {
            Ok(t) => t,
            Err(Error::DegenerateVertex) => {
                status = OrbitStatus::DegenerateVertex;
                break;
            }
            Err(e) => {
                status = OrbitStatus::Error(e.to_string());
                break;
            }
        };
        match return_step(model, &state) {
            Ok(next) => {
                steps.push(OrbitStep {
                    facet: next.facet,
                    point: next.position.clone(),
                    flight_time: t,
                    field: next.field.clone(),
                    sigma: next.sigma,
                });
                state = next;
            }
            Err(Error::DegenerateVertex) => {
                status = OrbitStatus::DegenerateVertex;
                break;
            }
            Err(e) => {
                status = OrbitStatus::Error(e.to_string());
                break;
            }
        }
    }
    OrbitRecord { initial: s0.clone(), steps, status }
}

/// One continuity piece of `T` as an affine map between facet charts.
#[derive(Debug, Clone)]
pub struct AffineMapPiece {
    /// Acts on source-facet tangent coordinates, lands in target coordinates.
    pub linear: Mat,
    pub offset: Vec<f64>,
    pub source: usize,
    pub target: usize,
}

impl AffineMapPiece {
    pub fn apply(&self, u: &[f64]) -> Vec<f64> {
        let lu = self.linear.matvec(u);
        lu.iter().zip(&self.offset).map(|(a, b)| a + b).collect()
    }

    pub fn compose_after(&self, first: &AffineMapPiece) -> AffineMapPiece {
        // self o first
        let linear = self.linear.matmul(&first.linear);
        let off = self.linear.matvec(&first.offset);
        let offset = off.iter().zip(&self.offset).map(|(a, b)| a + b).collect();
        AffineMapPiece { linear, offset, source: first.source, target: self.target }
    }
}

/// Derivative of the flight map `x -> x + t(x) v` onto the target facet:
/// `u -> u - v (n.u)/(n.v)`, restricted to the facet tangent bases.
pub fn piece_jacobian(
    model: &PseudoBilliardModel,
    source_facet: usize,
    field: &[f64],
    target_facet: usize,
) -> Result<AffineMapPiece> {
    let src = model
        .facet(source_facet)
        .ok_or_else(|| Error::BadModel(format!("unknown facet {source_facet}")))?;
    let tgt = model
        .facet(target_facet)
        .ok_or_else(|| Error::BadModel(format!("unknown facet {target_facet}")))?;
    let hs = &model.polytope.halfspaces[tgt.halfspace];
    let denom = dot(&hs.normal, field);
    if denom.abs() <= TAU_GEOM * crate::math::norm(field) {
        return Err(Error::GrazingFlight);
    }
    let dim = model.polytope.dim;
    // ambient derivative M = I - v n^T / (n.v)
    let mut linear = Mat::zeros(tgt.tangent.len(), src.tangent.len());
    for (j, b) in src.tangent.iter().enumerate() {
        let mb = axpy(b, -dot(&hs.normal, b) / denom, field);
        for (i, c) in tgt.tangent.iter().enumerate() {
            linear.set(i, j, dot(c, &mb));
        }
    }
    // affine image of the source anchor
    let t_anchor = (hs.offset - dot(&hs.normal, &src.anchor)) / denom;
    let image: Vec<f64> = (0..dim).map(|k| src.anchor[k] + t_anchor * field[k]).collect();
    let offset: Vec<f64> = tgt.tangent.iter().map(|c| dot(c, &crate::math::sub(&image, &tgt.anchor))).collect();
    Ok(AffineMapPiece { linear, offset, source: source_facet, target: target_facet })
}

/// Pieces traversed by an orbit segment, in order.
pub fn orbit_pieces(model: &PseudoBilliardModel, record: &OrbitRecord) -> Result<Vec<AffineMapPiece>> {
    let mut out = Vec::with_capacity(record.steps.len());
    for k in 0..record.steps.len() {
        let from = record.state_before(k);
        let to = &record.steps[k];
        out.push(piece_jacobian(model, from.facet, &from.field, to.facet)?);
    }
    Ok(out)
}

/// Poincare sequence of the time-discretized flow: advance in uniform time
/// steps `dt`, clamping onto the boundary whenever a step would cross it.
/// The clamp solves the crossing from the last collision anchor, so the
/// recorded section coincides with the exact return map. Returns the first
/// `n_collisions` boundary hits.
pub fn time_sampled_collisions(
    model: &PseudoBilliardModel,
    s0: &BoundaryState,
    dt: f64,
    n_collisions: usize,
) -> Result<(Vec<usize>, Vec<Vec<f64>>)> {
    if dt.is_nan() || dt <= 0.0 {
        return Err(Error::BadModel("dt must be positive".into()));
    }
    let mut facets = Vec::with_capacity(n_collisions);
    let mut points = Vec::with_capacity(n_collisions);
    let mut state = s0.clone();
    while facets.len() < n_collisions {
        let hit = model.polytope.first_facet_hit(&state.position, &state.field, true)?;
        let t_hit = match &hit {
            Hit::Facet { time, .. } => *time,
            Hit::Sigma(s) => s.time,
        };
        // uniform sampling of the flight; positions stay strictly inside
        // until the step that would cross the boundary
        let mut elapsed = 0.0;
        loop {
            let proposal = axpy(&state.position, elapsed + dt, &state.field);
            if elapsed + dt >= t_hit || !model.polytope.contains(&proposal, 0.0) {
                break;
            }
            elapsed += dt;
        }
        let next = resolve_landing(model, state.facet, hit, &state.field)?;
        facets.push(next.facet);
        points.push(next.position.clone());
        state = next;
    }
    Ok((facets, points))
}

#[derive(Debug, Clone)]
pub struct DiscreteOrbit {
    /// Post-step particle states: (position, unit direction).
    pub states: Vec<(Vec<f64>, Vec<f64>)>,
    /// Facets hit during the walk, in collision order.
    pub collisions: Vec<usize>,
    /// Minimal verified period of the state sequence, if one exists.
    pub period: Option<usize>,
    pub status: OrbitStatus,
}

/// Space-discretized dynamics: every step advances exactly `scheme.step`
/// along the active field; a boundary crossing folds the remainder onto the
/// switched field, and an exact landing counts as a collision.
pub fn discrete_orbit(
    model: &PseudoBilliardModel,
    scheme: PacketScheme,
    facet0: usize,
    x0: &[f64],
    n: usize,
) -> Result<DiscreteOrbit> {
    let step = scheme.step;
    // a packet must fit inside the region: anything up to the inscribed
    // disk diameter can move (the opposite-wall bounce of a square of side
    // 2 * inradius uses exactly that size)
    if step.is_nan() || step <= 0.0 || step > 2.0 * model.polytope.inradius() {
        return Err(Error::StepTooLarge);
    }
    let s0 = initial_state(model, facet0, x0)?;
    let mut dir = normalized(&s0.field).ok_or(Error::OutwardField)?;
    let mut pos = s0.position.clone();
    let mut facet = s0.facet;
    let mut on_boundary = true;
    let mut states: Vec<(Vec<f64>, Vec<f64>)> = Vec::with_capacity(n + 1);
    let mut collisions = Vec::new();
    states.push((pos.clone(), dir.clone()));
    let mut status = OrbitStatus::Ok;
    'outer: for _ in 0..n {
        let mut remaining = step;
        while remaining > TAU_GEOM {
            let hit = match model.polytope.first_facet_hit(&pos, &dir, on_boundary) {
                Ok(h) => h,
                Err(Error::DegenerateVertex) | Err(Error::OutwardField) => {
                    status = OrbitStatus::DegenerateVertex;
                    break 'outer;
                }
                Err(e) => {
                    status = OrbitStatus::Error(e.to_string());
                    break 'outer;
                }
            };
            let t_exit = match &hit {
                Hit::Facet { time, .. } => *time,
                Hit::Sigma(s) => s.time,
            };
            // landings within tolerance of a full step count as collisions
            if t_exit > remaining + TAU_GEOM {
                pos = axpy(&pos, remaining, &dir);
                on_boundary = false;
                remaining = 0.0;
            } else {
                let next = match resolve_landing(model, facet, hit, &dir) {
                    Ok(s) => s,
                    Err(Error::DegenerateVertex) => {
                        status = OrbitStatus::DegenerateVertex;
                        break 'outer;
                    }
                    Err(e) => {
                        status = OrbitStatus::Error(e.to_string());
                        break 'outer;
                    }
                };
                remaining = (remaining - t_exit).max(0.0);
                pos = next.position.clone();
                facet = next.facet;
                dir = normalized(&next.field).ok_or(Error::OutwardField)?;
                collisions.push(next.facet);
                on_boundary = true;
            }
        }
        states.push((pos.clone(), dir.clone()));
    }
    let period = detect_state_period(&states, 1e-9);
    Ok(DiscreteOrbit { states, collisions, period, status })
}

/// Minimal p such that state_{k+p} == state_k (within tol) for the whole
/// recorded sequence.
fn detect_state_period(states: &[(Vec<f64>, Vec<f64>)], tol: f64) -> Option<usize> {
    let n = states.len();
    'cand: for p in 1..n {
        if dist(&states[p].0, &states[0].0) > tol || dist(&states[p].1, &states[0].1) > tol {
            continue;
        }
        for k in 0..n - p {
            if dist(&states[k + p].0, &states[k].0) > tol
                || dist(&states[k + p].1, &states[k].1) > tol
            {
                continue 'cand;
            }
        }
        return Some(p);
    }
    None
}

/// Fraction of cells of a `grid x grid` partition of the bounding box
/// visited by the given positions.
pub fn cell_coverage(
    model: &PseudoBilliardModel,
    positions: &[Vec<f64>],
    grid: usize,
) -> f64 {
    let (lo, hi) = model.polytope.bounding_box();
    let mut seen = vec![false; grid * grid];
    for p in positions {
        let mut idx = [0usize; 2];
        for k in 0..2 {
            let span = (hi[k] - lo[k]).max(1e-300);
            let c = (((p[k] - lo[k]) / span) * grid as f64).floor();
            idx[k] = (c.max(0.0) as usize).min(grid - 1);
        }
        seen[idx[1] * grid + idx[0]] = true;
    }
    seen.iter().filter(|&&b| b).count() as f64 / (grid * grid) as f64
}

#[derive(Debug, Clone)]
pub struct ServerStep {
    pub facet: usize,
    pub point: Vec<f64>,
    pub flight_time: f64,
    pub field_index: usize,
}

#[derive(Debug, Clone)]
pub struct ServerOrbit {
    pub initial_facet: usize,
    pub initial_point: Vec<f64>,
    pub steps: Vec<ServerStep>,
    pub status: OrbitStatus,
}

struct ServerDriver<'a> {
    model: &'a SwitchedServerModel,
    seed: u64,
}

impl<'a> ServerDriver<'a> {
    /// Field index for collision number `k` at facet `facet_id`.
    fn pick(&self, k: u64, facet_id: usize) -> usize {
        match &self.model.policy {
            SwitchPolicy::Cyclic => (k as usize) % self.model.num_fields(),
            SwitchPolicy::Stochastic { .. } => {
                let p = self
                    .model
                    .probabilities_at(facet_id)
                    .expect("stochastic policy carries distributions");
                let u = SplitMix::keyed(self.seed, k);
                let mut acc = 0.0;
                for (i, &pi) in p.iter().enumerate() {
                    acc += pi;
                    if u < acc {
                        return i;
                    }
                }
                p.len() - 1
            }
        }
    }
}

/// Run the switched server chain: at each collision the policy selects the
/// next field (cyclic counter or seeded categorical draw); step k consumes
/// exactly one draw, so coupled runs with a shared seed stay synchronous.
pub fn server_orbit(
    model: &SwitchedServerModel,
    facet0: usize,
    x0: &[f64],
    n: usize,
    seed: u64,
) -> Result<ServerOrbit> {
    server_orbit_with_offset(model, facet0, x0, n, seed, 0)
}

/// `server_orbit` with the draw counter starting at `offset`, so a long
/// run can be split into chunks without changing the decision sequence.
pub fn server_orbit_with_offset(
    model: &SwitchedServerModel,
    facet0: usize,
    x0: &[f64],
    n: usize,
    seed: u64,
    offset: u64,
) -> Result<ServerOrbit> {
    let driver = ServerDriver { model, seed };
    let mut facet = facet0;
    let mut pos = x0.to_vec();
    if model.polytope.facet_by_id(facet0).is_none() || !model.polytope.contains(x0, 1e-7) {
        return Err(Error::BadModel("initial server state invalid".into()));
    }
    let mut steps = Vec::with_capacity(n);
    let mut status = OrbitStatus::Ok;
    for k in 0..n {
        let idx = driver.pick(offset + k as u64, facet);
        let field = model
            .field(facet, idx)
            .ok_or_else(|| Error::BadModel("field index out of range".into()))?
            .clone();
        if !model.polytope.enters_interior(&pos, &field) {
            status = OrbitStatus::DegenerateVertex;
            break;
        }
        match model.polytope.first_facet_hit(&pos, &field, true) {
            Ok(Hit::Facet { facet: f, time, point }) => {
                steps.push(ServerStep { facet: f, point: point.clone(), flight_time: time, field_index: idx });
                facet = f;
                pos = point;
            }
            Ok(Hit::Sigma(s)) => {
                // land on the lowest-id facet of the corner
                let f = s.facets[0];
                steps.push(ServerStep {
                    facet: f,
                    point: s.point.clone(),
                    flight_time: s.time,
                    field_index: idx,
                });
                facet = f;
                pos = s.point;
            }
            Err(Error::DegenerateVertex) | Err(Error::OutwardField) => {
                status = OrbitStatus::DegenerateVertex;
                break;
            }
            Err(e) => {
                status = OrbitStatus::Error(e.to_string());
                break;
            }
        }
    }
    Ok(ServerOrbit { initial_facet: facet0, initial_point: x0.to_vec(), steps, status })
}

/// Euclidean distances of two coupled server chains after each step
/// (identical seed: shared randomness).
pub fn coupling_distance(
    model: &SwitchedServerModel,
    a0: (usize, &[f64]),
    b0: (usize, &[f64]),
    n: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    let oa = server_orbit(model, a0.0, a0.1, n, seed)?;
    let ob = server_orbit(model, b0.0, b0.1, n, seed)?;
    let m = oa.steps.len().min(ob.steps.len());
    Ok((0..m).map(|k| dist(&oa.steps[k].point, &ob.steps[k].point)).collect())
}
