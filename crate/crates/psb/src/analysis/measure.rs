//! Occupation histograms over the boundary and coupling experiments.

use crate::dynamics::{return_step, BoundaryState, OrbitRecord};
use crate::error::{Error, Result};
use crate::geometry::ConvexPolytope;
use crate::model::{PseudoBilliardModel, SwitchedServerModel};

/// Per-facet binned occupation counts in facet-chart coordinates (first
/// tangent coordinate for two-dimensional facets).
#[derive(Debug, Clone)]
pub struct Histogram {
    pub facets: Vec<FacetBins>,
    pub total: f64,
}

#[derive(Debug, Clone)]
pub struct FacetBins {
    pub facet: usize,
    pub lo: f64,
    pub hi: f64,
    pub counts: Vec<f64>,
}

impl Histogram {
    pub fn new(poly: &ConvexPolytope, bins: usize) -> Self {
        let facets = poly
            .facets
            .iter()
            .map(|f| {
                let coords: Vec<f64> = f.vertices.iter().map(|v| f.to_local(v)[0]).collect();
                let lo = coords.iter().cloned().fold(f64::INFINITY, f64::min);
                let hi = coords.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                FacetBins { facet: f.id, lo, hi, counts: vec![0.0; bins] }
            })
            .collect();
        Histogram { facets, total: 0.0 }
    }

    pub fn add(&mut self, poly: &ConvexPolytope, facet_id: usize, point: &[f64]) {
        let Some(f) = poly.facet_by_id(facet_id) else { return };
        let u = f.to_local(point)[0];
        if let Some(fb) = self.facets.iter_mut().find(|fb| fb.facet == facet_id) {
            let bins = fb.counts.len();
            let span = (fb.hi - fb.lo).max(1e-300);
            let idx = (((u - fb.lo) / span) * bins as f64).floor();
            let idx = (idx.max(0.0) as usize).min(bins - 1);
            fb.counts[idx] += 1.0;
            self.total += 1.0;
        }
    }

    /// Index of the bin containing `point`, as (facet position, bin).
    pub fn locate(&self, poly: &ConvexPolytope, facet_id: usize, point: &[f64]) -> Option<(usize, usize)> {
        let f = poly.facet_by_id(facet_id)?;
        let u = f.to_local(point)[0];
        let pos = self.facets.iter().position(|fb| fb.facet == facet_id)?;
        let fb = &self.facets[pos];
        let bins = fb.counts.len();
        let span = (fb.hi - fb.lo).max(1e-300);
        let idx = (((u - fb.lo) / span) * bins as f64).floor();
        Some((pos, (idx.max(0.0) as usize).min(bins - 1)))
    }

    /// Fraction of total mass carried by the given (facet position, bin) set.
    pub fn mass_of(&self, cells: &[(usize, usize)]) -> f64 {
        if self.total == 0.0 {
            return 0.0;
        }
        let mut seen: Vec<(usize, usize)> = Vec::new();
        let mut mass = 0.0;
        for &(p, b) in cells {
            if !seen.contains(&(p, b)) {
                seen.push((p, b));
                mass += self.facets[p].counts[b];
            }
        }
        mass / self.total
    }
}

/// Normalized occupation histogram of recorded orbits.
pub fn empirical_measure(
    model: &PseudoBilliardModel,
    records: &[&OrbitRecord],
    bins: usize,
) -> Result<Histogram> {
    let mut h = Histogram::new(&model.polytope, bins);
    for rec in records {
        for step in &rec.steps {
            h.add(&model.polytope, step.facet, &step.point);
        }
    }
    if h.total == 0.0 {
        return Err(Error::EmptyOrbit);
    }
    Ok(h)
}

/// Streaming variant: run `n` return steps from `s0`, binning as it goes.
pub fn empirical_measure_run(
    model: &PseudoBilliardModel,
    s0: &BoundaryState,
    n: usize,
    bins: usize,
) -> Result<Histogram> {
    let mut h = Histogram::new(&model.polytope, bins);
    let mut state = s0.clone();
    for _ in 0..n {
        match return_step(model, &state) {
            Ok(next) => {
                h.add(&model.polytope, next.facet, &next.position);
                state = next;
            }
            Err(_) => break,
        }
    }
    if h.total == 0.0 {
        return Err(Error::EmptyOrbit);
    }
    Ok(h)
}

/// Streaming histogram of a switched server chain.
pub fn empirical_measure_server(
    model: &SwitchedServerModel,
    facet0: usize,
    x0: &[f64],
    n: usize,
    seed: u64,
    bins: usize,
) -> Result<Histogram> {
    let chunk = 65_536;
    let mut h = Histogram::new(&model.polytope, bins);
    let mut facet = facet0;
    let mut pos = x0.to_vec();
    let mut done = 0usize;
    let mut step_base = 0u64;
    while done < n {
        let take = chunk.min(n - done);
        // the offset keeps the draw counter global across chunks
        let o = crate::dynamics::server_orbit_with_offset(model, facet, &pos, take, seed, step_base)?;
        for s in &o.steps {
            h.add(&model.polytope, s.facet, &s.point);
        }
        if let Some(last) = o.steps.last() {
            facet = last.facet;
            pos = last.point.clone();
        }
        if o.steps.len() < take {
            break;
        }
        done += take;
        step_base += take as u64;
    }
    if h.total == 0.0 {
        return Err(Error::EmptyOrbit);
    }
    Ok(h)
}

/// L1 distance of the normalized histograms.
pub fn histogram_l1(a: &Histogram, b: &Histogram) -> Result<f64> {
    if a.facets.len() != b.facets.len() || a.total == 0.0 || b.total == 0.0 {
        return Err(Error::EmptyOrbit);
    }
    let mut l1 = 0.0;
    for (fa, fb) in a.facets.iter().zip(&b.facets) {
        if fa.counts.len() != fb.counts.len() {
            return Err(Error::EmptyOrbit);
        }
        for (ca, cb) in fa.counts.iter().zip(&fb.counts) {
            l1 += (ca / a.total - cb / b.total).abs();
        }
    }
    Ok(l1)
}
