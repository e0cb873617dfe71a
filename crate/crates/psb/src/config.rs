//! JSON run configuration: one model block, an optional perturbation block
//! (cuts, packet step) and an optional run block. `schema_version` is
//! pinned at 1.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Halfspace;
use crate::model::{
    build_polygon_model, build_server_model, build_standard_model, PseudoBilliardModel,
    SwitchPolicy, SwitchedArrivalSpec, SwitchedServerModel,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    pub model: ModelConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub perturbation: Option<PerturbationConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub run: Option<RunBlock>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelConfig {
    SwitchedArrival {
        rates: Vec<f64>,
        #[serde(default)]
        thresholds: Vec<f64>,
        /// Accepted for completeness; never binding under the balance
        /// condition, so only validated for shape.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        upper_thresholds: Option<Vec<f64>>,
    },
    Polygon2d {
        vertices: Vec<Vec<f64>>,
        edge_fields: Vec<Vec<f64>>,
    },
    SwitchedServer {
        base_vertices: Vec<Vec<f64>>,
        /// `fields[facet][index]` -> velocity vector
        fields: Vec<Vec<Vec<f64>>>,
        policy: PolicyConfig,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PolicyConfig {
    Cyclic,
    Stochastic {
        /// One distribution (broadcast) or one per facet.
        probabilities: Vec<Vec<f64>>,
        floor_q: f64,
        seed: u64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerturbationConfig {
    #[serde(default)]
    pub cuts: Vec<CutConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub packet_step: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CutConfig {
    pub normal: Vec<f64>,
    pub offset: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunBlock {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub iterations: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial: Option<InitialConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_b: Option<InitialConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ensemble: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bins: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialConfig {
    pub facet: usize,
    pub point: Vec<f64>,
}

/// A config builds either a single-field billiard or a server model.
pub enum BuiltModel {
    Billiard(PseudoBilliardModel),
    Server(SwitchedServerModel),
}

pub fn parse_config(text: &str) -> Result<RunConfig> {
    let cfg: RunConfig =
        serde_json::from_str(text).map_err(|e| Error::ConfigParse(e.to_string()))?;
    if cfg.schema_version != 1 {
        return Err(Error::SchemaViolation(format!(
            "unsupported schema_version {}",
            cfg.schema_version
        )));
    }
    Ok(cfg)
}

pub fn load_config(path: &std::path::Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path)?;
    parse_config(&text)
}

/// Build the model described by the config, applying perturbation cuts.
pub fn build_model(cfg: &RunConfig) -> Result<BuiltModel> {
    let built = match &cfg.model {
        ModelConfig::SwitchedArrival { rates, thresholds, upper_thresholds } => {
            let thresholds = if thresholds.is_empty() {
                vec![0.0; rates.len()]
            } else {
                thresholds.clone()
            };
            if let Some(up) = upper_thresholds {
                if up.len() != rates.len() {
                    return Err(Error::SchemaViolation(
                        "upper_thresholds arity mismatch".into(),
                    ));
                }
            }
            let spec = SwitchedArrivalSpec { rates: rates.clone(), thresholds };
            BuiltModel::Billiard(build_standard_model(&spec)?)
        }
        ModelConfig::Polygon2d { vertices, edge_fields } => {
            BuiltModel::Billiard(build_polygon_model(vertices, edge_fields)?)
        }
        ModelConfig::SwitchedServer { base_vertices, fields, policy } => {
            let poly = crate::geometry::polygon_polytope(base_vertices)?;
            let policy = match policy {
                PolicyConfig::Cyclic => SwitchPolicy::Cyclic,
                PolicyConfig::Stochastic { probabilities, floor_q, seed } => {
                    SwitchPolicy::Stochastic {
                        probabilities: probabilities.clone(),
                        floor: *floor_q,
                        seed: *seed,
                    }
                }
            };
            BuiltModel::Server(build_server_model(poly, fields.clone(), policy)?)
        }
    };
    // apply cuts
    if let Some(pert) = &cfg.perturbation {
        if !pert.cuts.is_empty() {
            let BuiltModel::Billiard(mut m) = built else {
                return Err(Error::SchemaViolation(
                    "cut perturbations only apply to single-field models".into(),
                ));
            };
            for c in &pert.cuts {
                m = m.cut(&Halfspace::new(c.normal.clone(), c.offset)?)?;
            }
            return Ok(BuiltModel::Billiard(m));
        }
    }
    Ok(built)
}
