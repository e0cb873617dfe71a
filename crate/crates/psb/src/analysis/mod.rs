//! Numerical verification suite: Lyapunov spectra, the vertex-line
//! chaoticity certificate, strong Markov checks, transitivity components,
//! periodic attractor detection, occupation histograms and coupling.

pub mod attractor;
pub mod certificate;
pub mod lyapunov;
pub mod markov;
pub mod measure;

pub use attractor::{compose_pieces, detect_periodic_attractor, AttractorReport};
pub use certificate::{chaos_certificate, ChaosCertificate, VertexCertificate};
pub use lyapunov::{lyapunov_spectrum, LyapunovReport};
pub use markov::{
    branch_intervals, branch_polygons, facet_partition, refine_by_flight_targets,
    transitivity_components, verify_strong_markov, Component, ComponentClass, ComponentReport,
    ElementReport, MarkovReport, PartitionElement, Region,
};
pub use measure::{
    empirical_measure, empirical_measure_run, empirical_measure_server, histogram_l1, FacetBins,
    Histogram,
};

// coupling experiments live with the orbit drivers
pub use crate::dynamics::coupling_distance;

use crate::dynamics::{orbit, orbit_pieces, BoundaryState};
use crate::error::Result;
use crate::model::PseudoBilliardModel;

/// Compare the composed piece Jacobian of `T^k` at `s0` against central
/// finite differences in the facet charts. Returns the largest entry
/// deviation, or `None` when the perturbed orbits change branch (the
/// segment straddles a discontinuity and should be resampled).
pub fn composed_vs_fd_error(
    model: &PseudoBilliardModel,
    s0: &BoundaryState,
    k: usize,
    h: f64,
) -> Result<Option<f64>> {
    let base = orbit(model, s0, k);
    if base.steps.len() < k {
        return Ok(None);
    }
    let pieces = orbit_pieces(model, &base)?;
    let composed = compose_pieces(&pieces);
    let src = model.facet(s0.facet).unwrap();
    let tgt = model.facet(base.steps[k - 1].facet).unwrap();
    let u0 = src.to_local(&s0.position);
    let base_itinerary = base.facets();

    let dim_in = src.tangent.len();
    let dim_out = tgt.tangent.len();
    let mut max_err: f64 = 0.0;
    for j in 0..dim_in {
        let eval = |sgn: f64| -> Option<Vec<f64>> {
            let mut u = u0.clone();
            u[j] += sgn * h;
            let x = src.from_local(&u);
            let s = crate::dynamics::initial_state(model, s0.facet, &x).ok()?;
            let rec = orbit(model, &s, k);
            if rec.steps.len() < k || rec.facets() != base_itinerary {
                return None;
            }
            Some(tgt.to_local(&rec.steps[k - 1].point))
        };
        let (Some(fp), Some(fm)) = (eval(1.0), eval(-1.0)) else {
            return Ok(None);
        };
        for i in 0..dim_out {
            let fd = (fp[i] - fm[i]) / (2.0 * h);
            max_err = max_err.max((fd - composed.linear.at(i, j)).abs());
        }
    }
    Ok(Some(max_err))
}
