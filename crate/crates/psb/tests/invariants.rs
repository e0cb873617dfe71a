//! Cross-module invariants: conservation laws, reversibility, chart
//! conjugacy, sigma-set rarity, and the certificate/Markov implication.

use proptest::prelude::*;

use psb::analysis::{
    chaos_certificate, refine_by_flight_targets, verify_strong_markov,
};
use psb::dynamics::{initial_state, orbit, piece_jacobian, return_step, OrbitStatus};
use psb::fixtures;
use psb::geometry::{Hit, TAU_GEOM};
use psb::math::{dist, scale, SplitMix};
use psb::model::{build_standard_model, SwitchedArrivalSpec};

fn n3() -> psb::model::PseudoBilliardModel {
    build_standard_model(&SwitchedArrivalSpec::equal_rates(3)).unwrap()
}

#[test]
fn sigma_hits_are_rare_over_random_starts() {
    // the (d-2)-skeleton has measure zero: almost no orbit touches it
    let m = n3();
    let mut rng = SplitMix::new(42);
    let starts = 10_000;
    let mut sigma_orbits = 0;
    for _ in 0..starts {
        let (facet, point) = m.polytope.sample_boundary(&mut rng);
        let Ok(s0) = initial_state(&m, facet, &point) else { continue };
        let rec = orbit(&m, &s0, 100);
        if rec.steps.iter().any(|s| s.sigma) || rec.status == OrbitStatus::DegenerateVertex {
            sigma_orbits += 1;
        }
    }
    let fraction = sigma_orbits as f64 / starts as f64;
    assert!(fraction < 0.01, "sigma fraction {fraction}");
}

#[test]
fn standard_model_conserves_sum() {
    let m = n3();
    let mut state = initial_state(&m, 1, &[0.513, 0.0, 0.487]).unwrap();
    for _ in 0..10_000 {
        state = return_step(&m, &state).unwrap();
        let sum: f64 = state.position.iter().sum();
        assert!((sum - 1.0).abs() < 1e-9, "sum drifted to {sum}");
        assert!(state.position.iter().all(|&c| c >= -TAU_GEOM));
    }
}

#[test]
fn threshold_model_conserves_sum_and_respects_thresholds() {
    // The threshold cut is parallel to a facet and crosses several vertex
    // lines, so near the ends of the cut facet the inherited field can
    // point back out of the region and the orbit terminates. Conservation
    // must hold on every point that is recorded.
    let spec = SwitchedArrivalSpec {
        rates: vec![1.0 / 3.0; 3],
        thresholds: vec![0.1, 0.0, 0.0],
    };
    let m = build_standard_model(&spec).unwrap();
    let s0 = initial_state(&m, 1, &[0.35, 0.0, 0.65]).unwrap();
    let rec = orbit(&m, &s0, 10_000);
    assert!(rec.steps.len() >= 3, "no dynamics recorded");
    for step in &rec.steps {
        let sum: f64 = step.point.iter().sum();
        assert!((sum - 1.0).abs() < 1e-9, "sum drifted to {sum}");
        assert!(step.point[0] >= 0.1 - TAU_GEOM);
        assert!(step.point[1] >= -TAU_GEOM);
        assert!(step.point[2] >= -TAU_GEOM);
    }
}

#[test]
fn n3_arclength_slope_is_two_everywhere() {
    let m = n3();
    let mut rng = SplitMix::new(5);
    for _ in 0..200 {
        let (facet, point) = m.polytope.sample_boundary(&mut rng);
        let Ok(s) = initial_state(&m, facet, &point) else { continue };
        let Ok(next) = return_step(&m, &s) else { continue };
        let piece = piece_jacobian(&m, s.facet, &s.field, next.facet).unwrap();
        assert!(
            (piece.linear.at(0, 0).abs() - 2.0).abs() < 1e-9,
            "slope {}",
            piece.linear.at(0, 0)
        );
    }
}

#[test]
fn polygon_chart_commutes_with_standard_model() {
    // barycentric chart onto the equilateral triangle: x -> x1 A + x2 B + x3 C
    let std_model = n3();
    let poly_model = fixtures::equilateral_perpendicular_model().unwrap();
    let verts = fixtures::equilateral_vertices();
    let chart = |x: &[f64]| -> Vec<f64> {
        vec![
            x[0] * verts[0][0] + x[1] * verts[1][0] + x[2] * verts[2][0],
            x[0] * verts[0][1] + x[1] * verts[1][1] + x[2] * verts[2][1],
        ]
    };
    // standard facet {x_i = 0} maps onto the polygon edge missing vertex i
    let edge_of_facet = [1usize, 2, 0];
    let mut rng = SplitMix::new(17);
    for _ in 0..40 {
        let u = rng.uniform(0.05, 0.95);
        let mut s_std = initial_state(&std_model, 0, &[0.0, u, 1.0 - u]).unwrap();
        // one-step commutation, re-synchronized each step (the dynamics is
        // expanding, so independent arithmetic drifts apart exponentially)
        for _ in 0..50 {
            let s_poly =
                initial_state(&poly_model, edge_of_facet[s_std.facet], &chart(&s_std.position))
                    .unwrap();
            let n_std = match return_step(&std_model, &s_std) {
                Ok(s) => s,
                Err(_) => break,
            };
            let n_poly = return_step(&poly_model, &s_poly).unwrap();
            assert_eq!(edge_of_facet[n_std.facet], n_poly.facet);
            assert!(
                dist(&chart(&n_std.position), &n_poly.position) < 1e-9,
                "charts diverged"
            );
            s_std = n_std;
        }
    }
}

#[test]
fn certificate_implies_refined_strong_markov() {
    // passing the vertex-line test forces the preimage-refined facet
    // partition to be strongly Markov, on both simplex families
    for n in [3usize, 4] {
        let m = build_standard_model(&SwitchedArrivalSpec::equal_rates(n)).unwrap();
        let cert = chaos_certificate(&m).unwrap();
        assert!(cert.passes, "N={n} certificate");
        let refined = refine_by_flight_targets(&m).unwrap();
        let rep = verify_strong_markov(&m, &refined).unwrap();
        assert!(rep.holds, "N={n} refined partition fails");
    }
}

#[test]
fn heptagon_neutral_pair_is_exactly_periodic() {
    // the AB <-> ED exchange composes to the identity: trajectories on the
    // neutral component are eventually periodic pointwise
    let m = fixtures::heptagon_model().unwrap();
    let f0 = m.facet(0).unwrap();
    let (lo, hi) = f0.local_interval();
    for frac in [0.2, 0.5, 0.8] {
        let x = f0.from_local(&[lo + frac * (hi - lo)]);
        let s0 = initial_state(&m, 0, &x).unwrap();
        let two = orbit(&m, &s0, 2);
        assert_eq!(two.facets(), vec![3, 0]);
        assert!(dist(&two.steps[1].point, &s0.position) < 1e-9);
    }
}

#[test]
fn server_deterministic_components_contract_per_step() {
    // inverse branches halve arclength: coupled cyclic chains contract
    let m = fixtures::triangle_server_model(psb::model::SwitchPolicy::Cyclic).unwrap();
    let d = psb::dynamics::coupling_distance(
        &m,
        (0, &[0.25, 0.0]),
        (0, &[0.8, 0.0]),
        40,
        0,
    )
    .unwrap();
    for w in d.windows(2) {
        if w[0] > 1e-12 {
            assert!(w[1] <= 0.51 * w[0], "ratio {}", w[1] / w[0]);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn flight_reverses_everywhere(u in 0.02f64..0.98, facet in 0usize..3) {
        let m = n3();
        let f = m.facet(facet).unwrap();
        let (lo, hi) = f.local_interval();
        let x = f.from_local(&[lo + u * (hi - lo)]);
        let s = initial_state(&m, facet, &x).unwrap();
        if let Ok(Hit::Facet { facet: g, time, point }) =
            m.polytope.first_facet_hit(&s.position, &s.field, true)
        {
            let back = m.polytope.first_facet_hit(&point, &scale(&s.field, -1.0), true).unwrap();
            match back {
                Hit::Facet { facet: h, time: t2, point: q } => {
                    prop_assert_eq!(h, facet);
                    prop_assert!((t2 - time).abs() < 1e-9);
                    prop_assert!(dist(&q, &s.position) < 1e-9);
                    let _ = g;
                }
                Hit::Sigma(_) => {}
            }
        }
    }

    #[test]
    fn landing_is_always_inside(u in 0.01f64..0.99, facet in 0usize..7) {
        let m = fixtures::heptagon_model().unwrap();
        let f = m.facet(facet).unwrap();
        let (lo, hi) = f.local_interval();
        let x = f.from_local(&[lo + u * (hi - lo)]);
        let s = initial_state(&m, facet, &x).unwrap();
        if let Ok(next) = return_step(&m, &s) {
            prop_assert!(m.polytope.contains(&next.position, 10.0 * TAU_GEOM));
            let g = m.facet(next.facet).unwrap();
            let hs = &m.polytope.halfspaces[g.halfspace];
            prop_assert!(hs.slack(&next.position).abs() <= 10.0 * TAU_GEOM);
        }
    }

    #[test]
    fn histogram_mass_is_conserved(nsteps in 100usize..400) {
        let m = n3();
        let s = initial_state(&m, 0, &[0.0, 0.433, 0.567]).unwrap();
        let h = psb::analysis::empirical_measure_run(&m, &s, nsteps, 8).unwrap();
        let total: f64 = h.facets.iter().flat_map(|f| f.counts.iter()).sum();
        prop_assert!((total - h.total).abs() < 1e-9);
        prop_assert_eq!(h.total as usize, nsteps);
    }

    #[test]
    fn inherited_field_values_come_from_the_original_model(a in 0.12f64..0.78) {
        let spec = SwitchedArrivalSpec {
            rates: vec![1.0 / 3.0; 3],
            thresholds: vec![0.1, 0.0, 0.0],
        };
        let m = build_standard_model(&spec).unwrap();
        let xi = vec![0.1, a, 0.9 - a];
        for j in 1..3 {
            let mut v_in = vec![-1.0 / 3.0; 3];
            v_in[j] += 1.0;
            let f = m.inherited_field(3, &xi, &v_in).unwrap();
            // value set of the threshold cut is the original field family
            let mut matched = false;
            for i in 0..3 {
                let mut e = vec![-1.0 / 3.0; 3];
                e[i] += 1.0;
                matched |= dist(&f, &e) < 1e-12;
            }
            prop_assert!(matched, "inherited field {f:?} not in the family");
        }
    }
}

#[test]
fn vertex_lines_match_known_directions_for_n3() {
    let m = n3();
    let lines = m.vertex_lines().unwrap();
    assert_eq!(lines.len(), 3); // one opposite facet per vertex
    for l in &lines {
        // line through e_i parallel to e_i - rho, crossing the facet {x_i=0}
        let v = &m.root().polytope.vertices[l.vertex];
        let i = v.iter().position(|&c| (c - 1.0).abs() < 1e-9).unwrap();
        assert_eq!(l.opposite_facet, i);
        let mut expect = vec![-1.0 / 3.0; 3];
        expect[i] += 1.0;
        let e = psb::math::normalized(&expect).unwrap();
        assert!(dist(&l.dir, &e) < 1e-9 || dist(&scale(&l.dir, -1.0), &e) < 1e-9);
    }
}

#[test]
fn double_cut_orbits_from_many_starts_reach_the_cycle() {
    let m = fixtures::double_cut_triangle_model().unwrap();
    let mut rng = SplitMix::new(99);
    let mut captured = 0;
    let mut tried = 0;
    for _ in 0..40 {
        let (facet, point) = m.polytope.sample_boundary(&mut rng);
        let Ok(s0) = initial_state(&m, facet, &point) else { continue };
        tried += 1;
        let rec = orbit(&m, &s0, 400);
        if rec.status != OrbitStatus::Ok {
            continue;
        }
        let rep = psb::analysis::detect_periodic_attractor(&m, &rec, 1e-9);
        if rep.found && rep.period == 4 && rep.attracting {
            captured += 1;
        }
    }
    assert!(tried >= 20);
    assert!(
        captured as f64 >= 0.8 * tried as f64,
        "{captured}/{tried} orbits captured"
    );
}
