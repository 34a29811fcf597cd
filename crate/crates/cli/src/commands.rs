//! One function per subcommand.

use psa_chroma::diagnostics::{
    bv_report, check_interaction_ledger, entropy_residual_sweep, experiment_solution, interaction_constant,
    oscillation_experiment, triangular_inequality_probe, wave_curve_constant, ExperimentSolver, LedgerLimits,
    OscillatingVelocity, OscillationSetup,
};
use psa_chroma::{
    godunov_march, reconstruct_velocity, solve_characteristics, solve_riemann, track, validate_model, EntropyPair,
    Error, Fault, FtaData, LambdaWave, Model, Region, Sampler, SmoothGrid, SmoothProblem, State, TrackerConfig,
    WaveKind,
};
use serde_json::json;

use crate::config::{FaultSpec, RunConfig, SolverKind};
use crate::output::{self, Csv, Sink};

/// Why a command stopped early.
#[derive(Debug)]
pub enum Failure {
    /// Bad input: exit status 1.
    Input(String),
    /// An invariant broke during the run: exit status 2, with the evidence.
    Violation { message: String, report: serde_json::Value },
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Consistency(msg) => Failure::Violation {
                message: format!("consistency error: {msg}"),
                report: json!({ "kind": "consistency", "message": msg }),
            },
            other => Failure::Input(other.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Input(format!("i/o error: {e}"))
    }
}

type Outcome = Result<(), Failure>;

fn model(cfg: &RunConfig) -> Result<Model, Failure> {
    Ok(Model::new(cfg.model.isotherms())?)
}

fn data(cfg: &RunConfig, command: &str) -> Result<FtaData, Failure> {
    let d = cfg.data.as_ref().ok_or_else(|| Failure::Input(format!("`{command}` needs a `data` block")))?;
    let ub = d.ub.as_ref().ok_or_else(|| Failure::Input(format!("data.ub: required by `{command}`")))?;
    Ok(FtaData::from_profiles(&d.c0, &d.cb, ub, d.t_end, d.x_end, d.cells)?)
}

fn axis(end: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![0.5 * end];
    }
    (0..n).map(|k| end * k as f64 / (n - 1) as f64).collect()
}

/// Columns `x = const` and rows `t = const` of any sampled field.
fn slices(sink: &Sink, cfg: &RunConfig, s: &impl Sampler, t_end: f64, x_end: f64, prefix: &str) -> Outcome {
    let n = cfg.output.samples;
    let header = ["x", "t", "c", "u", "v"];
    if !cfg.output.slices.x.is_empty() {
        let mut csv = Csv::new(&header);
        for &x in &cfg.output.slices.x {
            for t in axis(t_end, n) {
                let p = s.sample(t, x)?;
                csv.row(&[x, t, p.c, p.u, p.v]);
            }
        }
        sink.file(&format!("{prefix}slices_x.csv"), &csv.into_string())?;
    }
    if !cfg.output.slices.t.is_empty() {
        let mut csv = Csv::new(&header);
        for &t in &cfg.output.slices.t {
            for x in axis(x_end, n) {
                let p = s.sample(t, x)?;
                csv.row(&[x, t, p.c, p.u, p.v]);
            }
        }
        sink.file(&format!("{prefix}slices_t.csv"), &csv.into_string())?;
    }
    Ok(())
}

fn kind(k: WaveKind) -> &'static str {
    match k {
        WaveKind::Contact => "contact",
        WaveKind::Shock => "shock",
        WaveKind::RareStep => "rarefaction_step",
    }
}

pub fn riemann(cfg: &RunConfig, sink: &Sink) -> Outcome {
    let m = model(cfg)?;
    let r = cfg.riemann.as_ref().ok_or_else(|| Failure::Input("`riemann` needs a `riemann` block".into()))?;
    let below = State::from_velocity(r.below.c, r.below.u)?;
    let above = State::from_velocity(r.above.c, r.above.u)?;
    let fan = solve_riemann(&m, below, above)?;
    let fastest = match fan.lambda {
        LambdaWave::None => m.speed_factor(fan.middle.c) / fan.middle.u(),
        LambdaWave::Shock { speed } => speed,
        LambdaWave::Rarefaction { z_plus, .. } => z_plus,
    };
    let z_max = r.z_max.unwrap_or(2.0 * fastest);
    let mut csv = Csv::new(&["z", "c", "u"]);
    for k in 1..=r.samples {
        let z = z_max * k as f64 / r.samples as f64;
        let s = fan.sample(&m, z)?;
        csv.row(&[z, s.c, s.u()]);
    }
    sink.file("fan.csv", &csv.into_string())?;
    let fronts: Vec<_> = fan
        .fronts(&m, cfg.solver.delta)?
        .iter()
        .map(|w| json!({ "kind": kind(w.kind), "speed": w.speed, "below": w.below, "above": w.above }))
        .collect();
    let report = json!({
        "fan": fan,
        "u": { "below": fan.below.u(), "middle": fan.middle.u(), "above": fan.above.u() },
        "fronts": fronts,
    });
    sink.report("fan.json", &output::json(&report))?;
    Ok(())
}

pub fn simulate(cfg: &RunConfig, sink: &Sink) -> Outcome {
    let m = model(cfg)?;
    let data = data(cfg, "simulate")?;
    let s = &cfg.solver;
    let mut tracker = TrackerConfig::new(s.delta);
    tracker.max_events = s.max_events;
    tracker.fault = s.fault_injection.map(|f| match f {
        FaultSpec::FaultySpeed => Fault::FaultySpeed,
    });
    let traj = track(&m, &data, tracker)?;

    let mut fronts = Csv::new(&[
        "id", "anchor_x", "anchor_t", "speed", "x_start", "x_end", "c_below", "log_u_below", "c_above", "log_u_above",
        "kind",
    ]);
    for r in &traj.fronts {
        let (f, w) = (&r.front, &r.front.wave);
        fronts.labelled_row(
            &[
                f.id as f64, f.anchor_x, f.anchor_t, w.speed, r.x_start, r.x_end, w.below.c, w.below.log_u, w.above.c,
                w.above.log_u,
            ],
            kind(w.kind),
        );
    }
    sink.file("fronts.csv", &fronts.into_string())?;
    sink.file("interactions.jsonl", &output::jsonl(&traj.interactions))?;
    slices(sink, cfg, &traj, data.t_end(), data.x_end(), "")?;

    let [n_gamma, n_big] = s.constant_samples;
    let tvci = data.datum_variation();
    let limits = LedgerLimits::for_model(&m, n_big, s.delta, tvci)?;
    let ledger = check_interaction_ledger(&traj.interactions, &limits);
    sink.file("ledger.json", &output::json(&ledger))?;

    let [nt, nx] = s.grid;
    let (ts, xs) = (axis(data.t_end(), nt), axis(data.x_end(), nx));
    let constants = (wave_curve_constant(&m, n_gamma)?, limits.interaction_constant);
    let bv = bv_report(&m, &data, &traj, tracker, &xs, &ts, constants)?;
    let pairs = [EntropyPair::new(|c| c * c, 64), EntropyPair::new(|c: f64| (c - 0.5).max(0.0), 64)];
    let residuals = entropy_residual_sweep(&m, &traj, &xs, &pairs)?;
    let report = json!({
        "fronts": traj.fronts.len(),
        "interactions": traj.interactions.len(),
        "perturbations": traj.perturbations,
        "ledger_passed": ledger.passed(),
        "ledger_violations": ledger.violations.len(),
        "bv": bv,
        "entropy_residual": { "c_squared": residuals[0], "c_minus_half_plus": residuals[1] },
    });
    sink.report("report.json", &output::json(&report))?;
    if !ledger.passed() {
        let report = json!({ "kind": "interaction_ledger", "limits": limits, "violations": ledger.violations });
        return Err(Failure::Violation {
            message: format!("{} interaction-ledger violations", ledger.violations.len()),
            report,
        });
    }
    Ok(())
}

pub fn smooth(cfg: &RunConfig, sink: &Sink) -> Outcome {
    let m = model(cfg)?;
    let d = cfg.data.as_ref().ok_or_else(|| Failure::Input("`smooth` needs a `data` block".into()))?;
    let ub = d.ub.as_ref().ok_or_else(|| Failure::Input("data.ub: required by `smooth`".into()))?;
    let problem =
        SmoothProblem { c0: d.c0.signal(), cb: d.cb.signal(), ub: ub.signal(), t_end: d.t_end, x_end: d.x_end };
    let [nt, nx] = cfg.solver.grid;
    let mut grid = SmoothGrid::uniform(d.t_end, d.x_end, nt, nx);
    grid.clock_steps = cfg.solver.clock_steps;
    let sol = solve_characteristics(&m, problem, grid)?;
    let vel = reconstruct_velocity(&sol);
    let mut csv = Csv::new(&["t", "x", "c", "u", "v", "region"]);
    for i in 0..sol.valid_rows {
        let t = sol.grid.ts[i];
        for (j, &x) in sol.grid.xs.iter().enumerate() {
            let region = match sol.region[i][j] {
                Region::Initial => "initial",
                Region::Boundary => "boundary",
            };
            csv.labelled_row(&[t, x, sol.c[i][j], vel.u[i][j], vel.v[i][j]], region);
        }
    }
    sink.file("field.csv", &csv.into_string())?;
    let report = json!({
        "breakdown": sol.breakdown(),
        "valid_rows": sol.valid_rows,
        "rows": sol.grid.ts.len(),
        "columns": sol.grid.xs.len(),
        "clock_steps": sol.grid.clock_steps,
    });
    sink.report("report.json", &output::json(&report))?;
    Ok(())
}

pub fn godunov(cfg: &RunConfig, sink: &Sink) -> Outcome {
    let m = model(cfg)?;
    let data = data(cfg, "godunov")?;
    let s = &cfg.solver;
    let mut record = cfg.output.slices.x.clone();
    record.push(data.x_end());
    record.sort_by(f64::total_cmp);
    record.dedup();
    let g = godunov_march(&m, &data, s.dt, data.x_end(), s.cfl, &record)?;
    let mut csv = Csv::new(&["x", "t", "c", "u"]);
    for slice in &g.slices {
        for (j, t) in g.t_cells().enumerate() {
            csv.row(&[slice.x, t, slice.c[j], slice.u[j]]);
        }
    }
    sink.file("slices_x.csv", &csv.into_string())?;
    let report = json!({
        "dt": g.dt,
        "t_end": g.t_end,
        "cfl": g.cfl,
        "steps": g.steps,
        "slices": g.slices.iter().map(|s| s.x).collect::<Vec<_>>(),
        "conservation_defect": g.conservation_defect,
        "bound_violation": g.bound_violation,
    });
    sink.report("report.json", &output::json(&report))?;
    // Conservation holds to round-off and the scheme keeps c in [0, 1].
    if g.conservation_defect > 1e-9 || g.bound_violation > 0.0 {
        return Err(Failure::Violation {
            message: "the Godunov run lost conservation or left [0, 1]".into(),
            report: json!({
                "kind": "godunov",
                "conservation_defect": g.conservation_defect,
                "bound_violation": g.bound_violation,
            }),
        });
    }
    Ok(())
}

pub fn oscillation(cfg: &RunConfig, sink: &Sink) -> Outcome {
    let m = model(cfg)?;
    let d = cfg.data.as_ref().ok_or_else(|| Failure::Input("`experiment` needs a `data` block".into()))?;
    let e = cfg.experiment.as_ref().ok_or_else(|| Failure::Input("`experiment` needs an `experiment` block".into()))?;
    let solver = match e.solver {
        SolverKind::Characteristics => ExperimentSolver::Characteristics { clock_steps: cfg.solver.clock_steps },
        SolverKind::FrontTracking => ExperimentSolver::FrontTracking {
            delta: cfg.solver.delta,
            data_cells: e.data_cells,
            cells_per_period: e.cells_per_period,
        },
    };
    let setup = OscillationSetup {
        c0: d.c0.clone(),
        cb: d.cb.clone(),
        ub: OscillatingVelocity { mean: e.velocity.mean, amplitude: e.velocity.amplitude },
        t_end: d.t_end,
        x_end: d.x_end,
        eps: e.eps.clone(),
        solver,
        grid: (e.grid[0], e.grid[1]),
    };
    let report = oscillation_experiment(&m, &setup)?;
    let reference = experiment_solution(&m, &setup, &setup.ub.average())?;
    slices(sink, cfg, &reference, d.t_end, d.x_end, "mean_")?;
    for (k, &eps) in e.eps.iter().enumerate() {
        if report.runs[k].error.is_some() {
            continue;
        }
        let sol = experiment_solution(&m, &setup, &setup.ub.at_scale(eps))?;
        slices(sink, cfg, &sol, d.t_end, d.x_end, &format!("eps{k}_"))?;
    }
    sink.report("report.json", &output::json(&report))?;
    if !report.passed() {
        return Err(Failure::Violation {
            message: "the oscillation distances do not decrease with ε".into(),
            report: json!({ "kind": "oscillation", "report": report }),
        });
    }
    Ok(())
}

pub fn validate(cfg: &RunConfig, sink: &Sink) -> Outcome {
    let iso = cfg.model.isotherms();
    let report = validate_model(&iso, 2_001);
    let mut doc = json!({ "report": report });
    if report.passed {
        let m = Model::new(iso)?;
        let [n_gamma, n_big] = cfg.solver.constant_samples;
        doc["wave_curve_constant"] = json!(wave_curve_constant(&m, n_gamma)?);
        doc["interaction_constant"] = json!(interaction_constant(&m, n_big)?);
        doc["triangle_slack_min"] = json!(triangular_inequality_probe(&m, 10_000, cfg.seed)?);
    }
    sink.report("model.json", &output::json(&doc))?;
    if !report.passed {
        return Err(Failure::Input(format!("isotherm model rejected: {}", report.summary())));
    }
    Ok(())
}
