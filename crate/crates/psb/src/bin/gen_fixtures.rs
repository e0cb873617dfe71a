//! Regenerate the JSON fixture configs under `fixtures/` from the
//! constraint-solving constructions in `psb::fixtures`.
//!
//! Usage: `cargo run -p psb --bin gen_fixtures [-- <output-dir>]`

use std::path::PathBuf;

use psb::config::{
    CutConfig, InitialConfig, ModelConfig, PerturbationConfig, PolicyConfig, RunBlock, RunConfig,
};
use psb::fixtures;

fn run_block(iterations: usize, seed: u64, initial: Option<InitialConfig>) -> Option<RunBlock> {
    Some(RunBlock {
        iterations: Some(iterations),
        seed: Some(seed),
        initial,
        initial_b: None,
        output: None,
        ensemble: None,
        bins: Some(20),
    })
}

#[allow(clippy::vec_init_then_push)]
fn all_fixtures() -> Vec<(&'static str, RunConfig)> {
    let third = 1.0 / 3.0;
    let mut out = Vec::new();

    out.push((
        "n3.json",
        RunConfig {
            schema_version: 1,
            model: ModelConfig::SwitchedArrival {
                rates: vec![third, third, third],
                thresholds: vec![0.0, 0.0, 0.0],
                upper_thresholds: None,
            },
            perturbation: None,
            run: run_block(
                1000,
                1,
                Some(InitialConfig { facet: 0, point: vec![0.0, 0.317, 0.683] }),
            ),
        },
    ));

    out.push((
        "n4.json",
        RunConfig {
            schema_version: 1,
            model: ModelConfig::SwitchedArrival {
                rates: vec![0.25, 0.25, 0.25, 0.25],
                thresholds: vec![0.0; 4],
                upper_thresholds: None,
            },
            perturbation: None,
            run: run_block(1000, 1, None),
        },
    ));

    out.push((
        "n3_threshold.json",
        RunConfig {
            schema_version: 1,
            model: ModelConfig::SwitchedArrival {
                rates: vec![third, third, third],
                thresholds: vec![0.1, 0.0, 0.0],
                upper_thresholds: None,
            },
            perturbation: None,
            run: run_block(1000, 1, None),
        },
    ));

    out.push((
        "equilateral.json",
        RunConfig {
            schema_version: 1,
            model: ModelConfig::Polygon2d {
                vertices: fixtures::equilateral_vertices(),
                edge_fields: fixtures::equilateral_perpendicular_fields(),
            },
            perturbation: None,
            run: run_block(1000, 1, Some(InitialConfig { facet: 0, point: vec![0.317, 0.0] })),
        },
    ));

    out.push((
        "contraction_triangle.json",
        RunConfig {
            schema_version: 1,
            model: ModelConfig::Polygon2d {
                vertices: fixtures::equilateral_vertices(),
                edge_fields: fixtures::contraction_triangle_fields(),
            },
            perturbation: None,
            run: run_block(60, 1, Some(InitialConfig { facet: 0, point: vec![0.8, 0.0] })),
        },
    ));

    out.push((
        "valid_cut_triangle.json",
        RunConfig {
            schema_version: 1,
            model: ModelConfig::Polygon2d {
                vertices: fixtures::equilateral_vertices(),
                edge_fields: fixtures::equilateral_perpendicular_fields(),
            },
            perturbation: Some(PerturbationConfig {
                cuts: vec![CutConfig {
                    normal: vec![0.0, 1.0],
                    offset: 0.8 * 3f64.sqrt() / 2.0,
                }],
                packet_step: None,
            }),
            run: run_block(1000, 1, Some(InitialConfig { facet: 0, point: vec![0.317, 0.0] })),
        },
    ));

    out.push((
        "heptagon.json",
        RunConfig {
            schema_version: 1,
            model: ModelConfig::Polygon2d {
                vertices: fixtures::heptagon_vertices(),
                edge_fields: fixtures::heptagon_fields(),
            },
            perturbation: None,
            run: run_block(1000, 1, None),
        },
    ));

    let double_cut_halfspaces: Vec<CutConfig> = fixtures::double_cut_halfspaces()
        .iter()
        .map(|h| CutConfig { normal: h.normal.clone(), offset: h.offset })
        .collect();
    let double_cut_model_cfg = match (
        fixtures::double_cut_base_model().map(|_| ()),
        fixtures::double_cut_base_vertices_fields(),
    ) {
        (Ok(()), (v, f)) => ModelConfig::Polygon2d { vertices: v, edge_fields: f },
        _ => unreachable!("double_cut base always builds"),
    };
    out.push((
        "double_cut_triangle.json",
        RunConfig {
            schema_version: 1,
            model: double_cut_model_cfg,
            perturbation: Some(PerturbationConfig { cuts: double_cut_halfspaces, packet_step: None }),
            run: run_block(400, 1, Some(InitialConfig { facet: 0, point: vec![0.72, 0.0] })),
        },
    ));

    out.push((
        "square_packet.json",
        RunConfig {
            schema_version: 1,
            model: ModelConfig::Polygon2d {
                vertices: vec![
                    vec![0.0, 0.0],
                    vec![1.0, 0.0],
                    vec![1.0, 1.0],
                    vec![0.0, 1.0],
                ],
                edge_fields: vec![
                    vec![0.0, 1.0],
                    vec![-1.0, 0.0],
                    vec![0.0, -1.0],
                    vec![1.0, 0.0],
                ],
            },
            perturbation: Some(PerturbationConfig { cuts: vec![], packet_step: Some(0.25) }),
            run: run_block(100, 1, Some(InitialConfig { facet: 0, point: vec![0.3, 0.0] })),
        },
    ));

    out.push((
        "tilted_square_packet.json",
        RunConfig {
            schema_version: 1,
            model: ModelConfig::Polygon2d {
                vertices: vec![
                    vec![0.0, 0.0],
                    vec![1.0, 0.0],
                    vec![1.0, 1.0],
                    vec![0.0, 1.0],
                ],
                edge_fields: fixtures::tilted_square_fields(),
            },
            perturbation: Some(PerturbationConfig {
                cuts: vec![],
                packet_step: Some(std::f64::consts::FRAC_1_SQRT_2),
            }),
            run: run_block(100_000, 1, Some(InitialConfig { facet: 0, point: vec![0.3, 0.0] })),
        },
    ));

    out.push((
        "server_triangle_cyclic.json",
        RunConfig {
            schema_version: 1,
            model: ModelConfig::SwitchedServer {
                base_vertices: fixtures::equilateral_vertices(),
                fields: fixtures::triangle_server_fields(),
                policy: PolicyConfig::Cyclic,
            },
            perturbation: None,
            run: run_block(200, 1, Some(InitialConfig { facet: 0, point: vec![0.3, 0.0] })),
        },
    ));

    out.push((
        "server_triangle_stochastic.json",
        RunConfig {
            schema_version: 1,
            model: ModelConfig::SwitchedServer {
                base_vertices: fixtures::equilateral_vertices(),
                fields: fixtures::triangle_server_fields(),
                policy: PolicyConfig::Stochastic {
                    probabilities: vec![vec![0.5, 0.5]],
                    floor_q: 0.1,
                    seed: 7,
                },
            },
            perturbation: None,
            run: run_block(1000, 7, Some(InitialConfig { facet: 0, point: vec![0.3, 0.0] })),
        },
    ));

    out
}

fn main() {
    let dir = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| {
        // default to <workspace>/fixtures next to the crate
        let mut p = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
        p.pop();
        p.pop();
        p.push("fixtures");
        p
    });
    std::fs::create_dir_all(&dir).expect("create fixture dir");
    for (name, cfg) in all_fixtures() {
        let path = dir.join(name);
        let text = serde_json::to_string_pretty(&cfg).expect("serialize fixture");
        std::fs::write(&path, text + "\n").expect("write fixture");
        println!("wrote {}", path.display());
    }
}
