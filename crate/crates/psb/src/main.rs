//! Command-line driver: config ingestion, subcommand dispatch, CSV and
//! JSON emission.
//!
//! Every subcommand prints a machine-readable JSON summary to stdout;
//! trajectory-like results are additionally written as CSV to `--out`
//! (default `<subcommand>.csv`). Identical config and seed produce
//! byte-identical outputs.

use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use psb::analysis::{
    chaos_certificate, empirical_measure_run, facet_partition, lyapunov_spectrum,
    transitivity_components, verify_strong_markov, ComponentClass,
};
use psb::config::{build_model, load_config, BuiltModel, RunConfig};
use psb::dynamics::{
    cell_coverage, coupling_distance, discrete_orbit, initial_state, return_step, server_orbit,
    BoundaryState, OrbitStatus,
};
use psb::error::{Error, Result};
use psb::math::SplitMix;
use psb::model::{PseudoBilliardModel, SwitchedServerModel};

#[derive(Parser)]
#[command(name = "psb", about = "Pseudo billiard simulator and analysis toolkit", version)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct Common {
    /// Path to the JSON run configuration.
    #[arg(short = 'c', long = "config")]
    config: PathBuf,
    /// Iteration/step count (overrides the config run block).
    #[arg(short = 'n', long = "steps")]
    steps: Option<usize>,
    /// Seed (overrides the config run block).
    #[arg(long)]
    seed: Option<u64>,
    /// CSV output path for trajectory-like results.
    #[arg(short = 'o', long = "out")]
    out: Option<PathBuf>,
    /// Histogram bins per facet.
    #[arg(long)]
    bins: Option<usize>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run the exact return map and emit the orbit as CSV.
    Simulate(Common),
    /// Sample boundary points and their one-step images.
    ReturnMap(Common),
    /// QR-accumulated Lyapunov spectrum along one orbit.
    Lyapunov(Common),
    /// Vertex-line chaoticity certificate.
    ChaosCert(Common),
    /// Verify the strong Markov property on the facet partition.
    MarkovVerify(Common),
    /// Transition graph, strongly connected components, classification.
    Components(Common),
    /// Ensemble of orbits from seeded random starts.
    Orbits(Common),
    /// Occupation histogram of a long orbit.
    Measure(Common),
    /// Space-discretized (packet) walk with period detection.
    Discretize(Common),
    /// Switched server chain with cyclic or stochastic policy.
    Server(Common),
    /// Distance sequence of two server chains under shared randomness.
    Coupling(Common),
}

fn main() {
    let cli = Cli::parse();
    let code = match run(cli) {
        Ok(summary) => {
            println!("{}", serde_json::to_string_pretty(&summary).expect("serializable summary"));
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    };
    std::process::exit(code);
}

fn run(cli: Cli) -> Result<Value> {
    match cli.cmd {
        Cmd::Simulate(a) => simulate(a),
        Cmd::ReturnMap(a) => return_map(a),
        Cmd::Lyapunov(a) => lyapunov(a),
        Cmd::ChaosCert(a) => chaos_cert(a),
        Cmd::MarkovVerify(a) => markov_verify(a),
        Cmd::Components(a) => components(a),
        Cmd::Orbits(a) => orbits_cmd(a),
        Cmd::Measure(a) => measure(a),
        Cmd::Discretize(a) => discretize(a),
        Cmd::Server(a) => server_cmd(a),
        Cmd::Coupling(a) => coupling(a),
    }
}

struct Ctx {
    cfg: RunConfig,
    steps: Option<usize>,
    seed: u64,
    bins: usize,
    out: Option<PathBuf>,
}

impl Ctx {
    fn new(a: &Common) -> Result<Self> {
        let cfg = load_config(&a.config)?;
        let run = cfg.run.clone();
        Ok(Ctx {
            steps: a.steps.or(run.as_ref().and_then(|r| r.iterations)),
            seed: a.seed.or(run.as_ref().and_then(|r| r.seed)).unwrap_or(0),
            bins: a.bins.or(run.as_ref().and_then(|r| r.bins)).unwrap_or(20),
            out: a.out.clone().or(run.as_ref().and_then(|r| r.output.clone().map(PathBuf::from))),
            cfg,
        })
    }

    fn steps_or(&self, d: usize) -> usize {
        self.steps.unwrap_or(d)
    }

    fn billiard(&self) -> Result<PseudoBilliardModel> {
        match build_model(&self.cfg)? {
            BuiltModel::Billiard(m) => Ok(m),
            BuiltModel::Server(_) => Err(Error::SchemaViolation(
                "this subcommand needs a single-field model; use `server`/`coupling` for switched servers".into(),
            )),
        }
    }

    fn server(&self) -> Result<SwitchedServerModel> {
        match build_model(&self.cfg)? {
            BuiltModel::Server(m) => Ok(m),
            BuiltModel::Billiard(_) => Err(Error::SchemaViolation(
                "this subcommand needs a switched_server model".into(),
            )),
        }
    }

    fn initial(&self, model: &PseudoBilliardModel) -> Result<BoundaryState> {
        if let Some(init) = self.cfg.run.as_ref().and_then(|r| r.initial.as_ref()) {
            return initial_state(model, init.facet, &init.point);
        }
        sample_start(model, self.seed, 0)
    }

    fn csv(&self, default_name: &str) -> PathBuf {
        self.out.clone().unwrap_or_else(|| PathBuf::from(default_name))
    }
}

/// Deterministic random start on a non-cut facet.
fn sample_start(model: &PseudoBilliardModel, seed: u64, stream: u64) -> Result<BoundaryState> {
    let mut rng = SplitMix::split(seed, stream);
    for _ in 0..256 {
        let (facet, point) = model.polytope.sample_boundary(&mut rng);
        if let Ok(s) = initial_state(model, facet, &point) {
            return Ok(s);
        }
    }
    Err(Error::BadModel("failed to sample a valid start".into()))
}

fn fmt(x: f64) -> String {
    format!("{x:.16e}")
}

fn write_csv(path: &PathBuf, header: &str, rows: &[String]) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(f, "{header}")?;
    for r in rows {
        writeln!(f, "{r}")?;
    }
    Ok(())
}

fn coord_header(dim: usize) -> String {
    (1..=dim).map(|k| format!("x{k}")).collect::<Vec<_>>().join(",")
}

fn simulate(a: Common) -> Result<Value> {
    let ctx = Ctx::new(&a)?;
    let model = ctx.billiard()?;
    let n = ctx.steps_or(1000);
    let dim = model.polytope.dim;
    let mut state = ctx.initial(&model)?;
    let mut rows = Vec::with_capacity(n.min(1 << 22));
    let mut status = OrbitStatus::Ok;
    for step in 0..n {
        let t = match model.polytope.first_facet_hit(&state.position, &state.field, true) {
            Ok(psb::geometry::Hit::Facet { time, .. }) => time,
            Ok(psb::geometry::Hit::Sigma(s)) => s.time,
            Err(Error::DegenerateVertex) | Err(Error::OutwardField) => {
                status = OrbitStatus::DegenerateVertex;
                break;
            }
            Err(e) => return Err(e),
        };
        state = match return_step(&model, &state) {
            Ok(s) => s,
            Err(Error::DegenerateVertex) => {
                status = OrbitStatus::DegenerateVertex;
                break;
            }
            Err(e) => return Err(e),
        };
        let coords = state.position.iter().map(|&c| fmt(c)).collect::<Vec<_>>().join(",");
        rows.push(format!("{step},{f},{coords},{t}", f = state.facet, t = fmt(t)));
    }
    let path = ctx.csv("simulate.csv");
    write_csv(&path, &format!("step,facet,{},flight_time", coord_header(dim)), &rows)?;
    if status != OrbitStatus::Ok && rows.is_empty() {
        return Err(Error::DegenerateVertex);
    }
    Ok(json!({
        "subcommand": "simulate",
        "steps_completed": rows.len(),
        "status": format!("{status:?}"),
        "csv": path.display().to_string(),
    }))
}

fn return_map(a: Common) -> Result<Value> {
    let ctx = Ctx::new(&a)?;
    let model = ctx.billiard()?;
    let n = ctx.steps_or(256);
    let dim = model.polytope.dim;
    let mut rows = Vec::with_capacity(n);
    let mut tries = 0;
    while rows.len() < n && tries < 16 * n {
        tries += 1;
        let s = match sample_start(&model, ctx.seed, tries as u64) {
            Ok(s) => s,
            Err(_) => continue,
        };
        let Ok(next) = return_step(&model, &s) else { continue };
        let xs = s.position.iter().map(|&c| fmt(c)).collect::<Vec<_>>().join(",");
        let ys = next.position.iter().map(|&c| fmt(c)).collect::<Vec<_>>().join(",");
        rows.push(format!("{},{xs},{},{ys}", s.facet, next.facet));
    }
    let path = ctx.csv("return_map.csv");
    let yh = (1..=dim).map(|k| format!("y{k}")).collect::<Vec<_>>().join(",");
    write_csv(&path, &format!("facet,{},image_facet,{yh}", coord_header(dim)), &rows)?;
    Ok(json!({
        "subcommand": "return-map",
        "samples": rows.len(),
        "csv": path.display().to_string(),
    }))
}

fn lyapunov(a: Common) -> Result<Value> {
    let ctx = Ctx::new(&a)?;
    let model = ctx.billiard()?;
    let n = ctx.steps_or(1_000_000);
    let s0 = ctx.initial(&model)?;
    let rep = lyapunov_spectrum(&model, &s0, n)?;
    Ok(json!({
        "subcommand": "lyapunov",
        "exponents": rep.exponents,
        "steps": rep.steps,
        "tail_variance": rep.tail_variance,
        "tail_stderr": rep.tail_stderr,
        "half_estimates": [rep.half_estimates.0, rep.half_estimates.1],
        "piece_singular_min": rep.piece_sv_min,
        "piece_singular_max": rep.piece_sv_max,
        "k_step_singular": rep.k_step_sv.iter()
            .map(|(k, lo, hi)| json!({"k": k, "min": lo, "max": hi}))
            .collect::<Vec<_>>(),
    }))
}

fn chaos_cert(a: Common) -> Result<Value> {
    let ctx = Ctx::new(&a)?;
    let model = ctx.billiard()?;
    let cert = chaos_certificate(&model)?;
    Ok(json!({
        "subcommand": "chaos-cert",
        "passes": cert.passes,
        "vertices": cert.vertices.iter().map(|v| json!({
            "vertex": v.vertex,
            "point": v.vertex_point,
            "opposite_facet": v.opposite_facet,
            "passes": v.passes,
            "intersection": v.intersection,
            "margin": v.margin,
        })).collect::<Vec<_>>(),
    }))
}

fn markov_verify(a: Common) -> Result<Value> {
    let ctx = Ctx::new(&a)?;
    let model = ctx.billiard()?;
    let part = facet_partition(&model);
    let rep = verify_strong_markov(&model, &part)?;
    Ok(json!({
        "subcommand": "markov-verify",
        "holds": rep.holds,
        "elements": rep.elements.iter().map(|e| json!({
            "element": e.element,
            "facet": part[e.element].facet,
            "holds": e.holds,
            "injective": e.injective,
            "covered_elements": e.covered_elements,
            "defect": e.defect,
        })).collect::<Vec<_>>(),
    }))
}

fn class_name(c: ComponentClass) -> &'static str {
    match c {
        ComponentClass::Expanding => "expanding",
        ComponentClass::Neutral => "neutral",
        ComponentClass::Contracting => "contracting",
        ComponentClass::Open => "open",
    }
}

fn components(a: Common) -> Result<Value> {
    let ctx = Ctx::new(&a)?;
    let model = ctx.billiard()?;
    let part = facet_partition(&model);
    let rep = transitivity_components(&model, &part)?;
    Ok(json!({
        "subcommand": "components",
        "components": rep.components.iter().map(|c| json!({
            "facets": c.elements.iter().map(|&i| part[i].facet).collect::<Vec<_>>(),
            "closed": c.closed,
            "class": class_name(c.class),
            "lyapunov_max": c.lyapunov_max,
            "lyapunov_min": c.lyapunov_min,
            "witness": c.witness,
        })).collect::<Vec<_>>(),
        "edges": rep.edges.iter()
            .map(|(i, j)| json!([part[*i].facet, part[*j].facet]))
            .collect::<Vec<_>>(),
    }))
}

fn orbits_cmd(a: Common) -> Result<Value> {
    let ctx = Ctx::new(&a)?;
    let model = ctx.billiard()?;
    let n = ctx.steps_or(1000);
    let ensemble = ctx.cfg.run.as_ref().and_then(|r| r.ensemble).unwrap_or(10);
    let dim = model.polytope.dim;
    let mut rows = Vec::new();
    for member in 0..ensemble {
        let mut state = sample_start(&model, ctx.seed, member as u64)?;
        for step in 0..n {
            let t = match model.polytope.first_facet_hit(&state.position, &state.field, true) {
                Ok(psb::geometry::Hit::Facet { time, .. }) => time,
                Ok(psb::geometry::Hit::Sigma(s)) => s.time,
                Err(_) => break,
            };
            match return_step(&model, &state) {
                Ok(next) => {
                    let coords =
                        next.position.iter().map(|&c| fmt(c)).collect::<Vec<_>>().join(",");
                    rows.push(format!(
                        "{member},{step},{f},{coords},{t}",
                        f = next.facet,
                        t = fmt(t)
                    ));
                    state = next;
                }
                Err(_) => break,
            }
        }
    }
    let path = ctx.csv("orbits.csv");
    write_csv(&path, &format!("orbit,step,facet,{},flight_time", coord_header(dim)), &rows)?;
    Ok(json!({
        "subcommand": "orbits",
        "orbits": ensemble,
        "rows": rows.len(),
        "csv": path.display().to_string(),
    }))
}

fn measure(a: Common) -> Result<Value> {
    let ctx = Ctx::new(&a)?;
    let model = ctx.billiard()?;
    let n = ctx.steps_or(100_000);
    let s0 = ctx.initial(&model)?;
    let h = empirical_measure_run(&model, &s0, n, ctx.bins)?;
    let mut rows = Vec::new();
    for fb in &h.facets {
        let bins = fb.counts.len();
        let w = (fb.hi - fb.lo) / bins as f64;
        for (b, c) in fb.counts.iter().enumerate() {
            rows.push(format!(
                "{},{b},{},{},{}",
                fb.facet,
                fmt(fb.lo + b as f64 * w),
                fmt(fb.lo + (b + 1) as f64 * w),
                c
            ));
        }
    }
    let path = ctx.csv("measure.csv");
    write_csv(&path, "facet,bin,lo,hi,count", &rows)?;
    Ok(json!({
        "subcommand": "measure",
        "total": h.total,
        "facet_mass": h.facets.iter().map(|fb| json!({
            "facet": fb.facet,
            "mass": fb.counts.iter().sum::<f64>() / h.total,
        })).collect::<Vec<_>>(),
        "csv": path.display().to_string(),
    }))
}

fn discretize(a: Common) -> Result<Value> {
    let ctx = Ctx::new(&a)?;
    let model = ctx.billiard()?;
    let step = ctx
        .cfg
        .perturbation
        .as_ref()
        .and_then(|p| p.packet_step)
        .ok_or_else(|| Error::SchemaViolation("discretize needs perturbation.packet_step".into()))?;
    let n = ctx.steps_or(10_000);
    let s0 = ctx.initial(&model)?;
    let d = discrete_orbit(&model, psb::model::PacketScheme::new(step)?, s0.facet, &s0.position, n)?;
    let rows: Vec<String> = d
        .states
        .iter()
        .enumerate()
        .map(|(i, (p, _))| {
            format!("{i},{}", p.iter().map(|&c| fmt(c)).collect::<Vec<_>>().join(","))
        })
        .collect();
    let path = ctx.csv("discretize.csv");
    write_csv(&path, &format!("step,{}", coord_header(model.polytope.dim)), &rows)?;
    let positions: Vec<Vec<f64>> = d.states.iter().map(|(p, _)| p.clone()).collect();
    let coverage = if model.polytope.dim == 2 {
        Some(cell_coverage(&model, &positions, 20))
    } else {
        None
    };
    Ok(json!({
        "subcommand": "discretize",
        "packet_step": step,
        "steps": d.states.len() - 1,
        "collisions": d.collisions.len(),
        "period": d.period,
        "coverage_20x20": coverage,
        "status": format!("{:?}", d.status),
        "csv": path.display().to_string(),
    }))
}

fn server_cmd(a: Common) -> Result<Value> {
    let ctx = Ctx::new(&a)?;
    let model = ctx.server()?;
    let n = ctx.steps_or(1000);
    let (facet0, x0) = server_start(&ctx, &model, 0)?;
    let o = server_orbit(&model, facet0, &x0, n, ctx.seed)?;
    let dim = model.polytope.dim;
    let rows: Vec<String> = o
        .steps
        .iter()
        .enumerate()
        .map(|(i, s)| {
            format!(
                "{i},{},{},{},{}",
                s.facet,
                s.field_index,
                s.point.iter().map(|&c| fmt(c)).collect::<Vec<_>>().join(","),
                fmt(s.flight_time)
            )
        })
        .collect();
    let path = ctx.csv("server.csv");
    write_csv(&path, &format!("step,facet,field_index,{},flight_time", coord_header(dim)), &rows)?;
    let sym: Vec<(usize, usize)> = o.steps.iter().map(|s| (s.facet, s.field_index)).collect();
    let period = symbolic_tail_period(&sym, 16);
    Ok(json!({
        "subcommand": "server",
        "steps_completed": o.steps.len(),
        "status": format!("{:?}", o.status),
        "observed_tail_period": period,
        "csv": path.display().to_string(),
    }))
}

fn symbolic_tail_period(sym: &[(usize, usize)], tail: usize) -> Option<usize> {
    let n = sym.len();
    if n < tail {
        return None;
    }
    'cand: for p in 1..=tail / 2 {
        for k in n - tail..n - p {
            if sym[k] != sym[k + p] {
                continue 'cand;
            }
        }
        return Some(p);
    }
    None
}

fn server_start(
    ctx: &Ctx,
    model: &SwitchedServerModel,
    stream: u64,
) -> Result<(usize, Vec<f64>)> {
    let init = match stream {
        0 => ctx.cfg.run.as_ref().and_then(|r| r.initial.as_ref()),
        _ => ctx.cfg.run.as_ref().and_then(|r| r.initial_b.as_ref()),
    };
    if let Some(i) = init {
        return Ok((i.facet, i.point.clone()));
    }
    let mut rng = SplitMix::split(ctx.seed, stream);
    Ok(model.polytope.sample_boundary(&mut rng))
}

fn coupling(a: Common) -> Result<Value> {
    let ctx = Ctx::new(&a)?;
    let model = ctx.server()?;
    let n = ctx.steps_or(100);
    let (fa, xa) = server_start(&ctx, &model, 0)?;
    let (fb, xb) = server_start(&ctx, &model, 1)?;
    let d = coupling_distance(&model, (fa, &xa), (fb, &xb), n, ctx.seed)?;
    let rows: Vec<String> =
        d.iter().enumerate().map(|(i, x)| format!("{i},{}", fmt(*x))).collect();
    let path = ctx.csv("coupling.csv");
    write_csv(&path, "step,distance", &rows)?;
    // geometric fit of the decay rate over the strictly positive tail
    let mut ratios = Vec::new();
    for w in d.windows(2) {
        if w[0] > 1e-14 && w[1] > 0.0 {
            ratios.push((w[1] / w[0]).ln());
        }
    }
    let fitted = if ratios.is_empty() {
        None
    } else {
        Some((ratios.iter().sum::<f64>() / ratios.len() as f64).exp())
    };
    Ok(json!({
        "subcommand": "coupling",
        "steps": d.len(),
        "final_distance": d.last().copied(),
        "fitted_ratio": fitted,
        "csv": path.display().to_string(),
    }))
}
