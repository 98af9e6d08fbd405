use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use ingrape::landscape::{robustness_scan, run_landscape};
use ingrape::objectives::{finite_difference_gradient, gradient, max_relative_error};
use ingrape::optimizer::{init_random_controls, optimize, InitSpec, RunResult};
use ingrape::propagator::propagate;
use ingrape::PWCControls;
use serde_json::json;

use crate::config::{ConfigError, Validated};

#[derive(Debug, thiserror::Error)]
pub enum CommandError {
    #[error("{0}")]
    Config(#[from] ConfigError),
    #[error("verification failed: {0}")]
    Verification(String),
    #[error("{0}")]
    Runtime(String),
}

impl CommandError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CommandError::Verification(_) => 1,
            CommandError::Config(_) => 2,
            CommandError::Runtime(_) => 3,
        }
    }
}

impl From<ingrape::Error> for CommandError {
    fn from(e: ingrape::Error) -> Self {
        CommandError::Runtime(e.to_string())
    }
}

impl From<std::io::Error> for CommandError {
    fn from(e: std::io::Error) -> Self {
        CommandError::Runtime(format!("I/O error: {e}"))
    }
}

impl From<csv::Error> for CommandError {
    fn from(e: csv::Error) -> Self {
        CommandError::Runtime(format!("CSV error: {e}"))
    }
}

pub type CommandResult = Result<(), CommandError>;

/// Output directory, created on demand.
pub struct OutDir(PathBuf);

impl OutDir {
    pub fn create(path: &Path) -> Result<Self, CommandError> {
        fs::create_dir_all(path)?;
        Ok(Self(path.to_path_buf()))
    }

    fn file(&self, name: &str) -> Result<BufWriter<File>, CommandError> {
        Ok(BufWriter::new(File::create(self.0.join(name))?))
    }

    fn json(&self, name: &str, value: &serde_json::Value) -> CommandResult {
        let text = serde_json::to_string_pretty(value).map_err(|e| CommandError::Runtime(e.to_string()))?;
        fs::write(self.0.join(name), text + "\n")?;
        Ok(())
    }
}

fn starting_controls(v: &Validated, seed: u64) -> Result<PWCControls, CommandError> {
    match &v.controls {
        Some(c) => Ok(c.clone()),
        None => Ok(init_random_controls(&v.system, v.grid, &InitSpec { seed, ..v.init })?),
    }
}

fn write_controls_csv(controls: &PWCControls, out: &OutDir, name: &str) -> CommandResult {
    let mut w = csv::Writer::from_writer(out.file(name)?);
    let mut header = vec!["interval".to_string(), "t_start".to_string()];
    header.extend((0..controls.n_coherent()).map(|k| format!("u_{k}")));
    header.extend((0..controls.n_incoherent()).map(|c| format!("w_{c}")));
    header.extend((0..controls.n_incoherent()).map(|c| format!("n_{c}")));
    w.write_record(&header)?;
    let dt = controls.grid().dt();
    let n = controls.n();
    for m in 0..controls.grid().intervals() {
        let mut row = vec![m.to_string(), (m as f64 * dt).to_string()];
        row.extend(controls.u().row(m).iter().map(|x| x.to_string()));
        row.extend(controls.w().row(m).iter().map(|x| x.to_string()));
        row.extend(n.row(m).iter().map(|x| x.to_string()));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

fn run_summary(run: &RunResult) -> serde_json::Value {
    json!({
        "final_value": run.final_value,
        "iterations": run.iterations_used,
        "stop": run.stop.as_str(),
        "seed": run.seed,
    })
}

/// Propagates the initial state and writes `trajectory.csv`.
pub fn command_simulate(v: &Validated, seed: u64, out: &OutDir) -> CommandResult {
    let controls = starting_controls(v, seed)?;
    let traj = propagate(&v.system, &controls, &v.initial_state)?;
    traj.write_csv(out.file("trajectory.csv")?)?;
    write_controls_csv(&controls, out, "controls.csv")?;
    println!("simulated {} intervals, final purity {:.6}", v.grid.intervals(), traj.final_state().purity());
    Ok(())
}

/// One optimization run: `history.csv`, `controls.csv`, `result.json`.
pub fn command_optimize(v: &Validated, seed: u64, out: &OutDir) -> CommandResult {
    let run = optimize_once(v, seed)?;
    run.write_history_csv(out.file("history.csv")?)?;
    write_controls_csv(&run.final_controls, out, "controls.csv")?;
    out.json("result.json", &run_summary(&run))?;
    println!("final value {:e} after {} iterations ({})", run.final_value, run.iterations_used, run.stop.as_str());
    if run.stop.is_aborted() {
        return Err(CommandError::Runtime("optimization aborted on a non-finite value".into()));
    }
    Ok(())
}

fn optimize_once(v: &Validated, seed: u64) -> Result<RunResult, CommandError> {
    let controls0 = starting_controls(v, seed)?;
    let mut run = optimize(&v.objective, &v.system, &controls0, &v.optimizer)?;
    if v.controls.is_none() {
        run.seed = Some(seed);
    }
    Ok(run)
}

/// Seeded multi-start scan: `values.csv`, `histogram.csv`, `clusters.json`.
pub fn command_landscape(v: &Validated, seed: u64, workers: Option<usize>, out: &OutDir) -> CommandResult {
    let Some(mut config) = v.landscape else {
        return Err(CommandError::Config(ConfigError(vec![crate::config::ConfigIssue {
            code: crate::config::ErrorCode::Schema,
            path: "landscape".into(),
            message: "the landscape command needs a `landscape` block".into(),
        }])));
    };
    config.master_seed = seed;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = workers {
        builder = builder.num_threads(n);
    }
    let pool = builder.build().map_err(|e| CommandError::Runtime(e.to_string()))?;
    let result = pool.install(|| run_landscape(&v.objective, &v.system, v.grid, &config))?;
    result.write_values_csv(out.file("values.csv")?)?;
    result.write_histogram_csv(out.file("histogram.csv")?)?;
    out.json("clusters.json", &result.clusters_json())?;
    println!("{} launches, {} aborted, {} cluster(s):", result.records.len(), result.aborted, result.clusters.len());
    for c in &result.clusters {
        println!("  mean {:e}  count {}  range [{:e}, {:e}]", c.mean, c.count, c.min, c.max);
    }
    Ok(())
}

/// Perturbation scan of the configured controls, or of the optimum reached
/// from them when none are given: `robustness.csv`.
pub fn command_robustness(v: &Validated, seed: u64, out: &OutDir) -> CommandResult {
    let Some(spec) = &v.robustness else {
        return Err(CommandError::Config(ConfigError(vec![crate::config::ConfigIssue {
            code: crate::config::ErrorCode::Schema,
            path: "robustness".into(),
            message: "the robustness command needs a `robustness` block".into(),
        }])));
    };
    let controls = match &v.controls {
        Some(c) => c.clone(),
        None => {
            let run = optimize_once(v, seed)?;
            write_controls_csv(&run.final_controls, out, "controls.csv")?;
            run.final_controls
        }
    };
    let report = robustness_scan(&v.objective, &v.system, &controls, &spec.levels, spec.samples, seed)?;
    report.write_csv(out.file("robustness.csv")?)?;
    println!("nominal value {:e}", report.nominal);
    for l in &report.levels {
        println!("  epsilon {:e}  mean {:e}  std {:e}", l.epsilon, l.mean, l.std);
    }
    Ok(())
}

/// Analytic against central-difference gradient: `gradcheck.csv`, exit 1
/// above the tolerance.
pub fn command_gradcheck(v: &Validated, seed: u64, out: &OutDir) -> CommandResult {
    let controls = starting_controls(v, seed)?;
    let analytic = gradient(&v.objective, &v.system, &controls)?.to_params();
    let fd = finite_difference_gradient(&v.objective, &v.system, &controls, v.gradcheck.step)?;
    let err = max_relative_error(&analytic, &fd);
    let mut w = csv::Writer::from_writer(out.file("gradcheck.csv")?);
    w.write_record(["parameter", "analytic", "finite_difference"])?;
    for (i, (a, f)) in analytic.iter().zip(&fd).enumerate() {
        w.write_record([i.to_string(), format!("{a:e}"), format!("{f:e}")])?;
    }
    w.flush()?;
    println!("max relative error {err:e} over {} parameters", analytic.len());
    if err.is_nan() || err > v.gradcheck.tolerance {
        return Err(CommandError::Verification(format!(
            "gradient error {err:e} exceeds tolerance {:e}",
            v.gradcheck.tolerance
        )));
    }
    Ok(())
}
