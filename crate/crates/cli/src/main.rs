//! `dynsample`: run adaptive sampling campaigns and work with their datasets.

mod config;
mod plot;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Serialize;

use dynsample::dataset::{export_csv, export_jsonl, load_jsonl, Dataset};
use dynsample::models::builtin_model;
use dynsample::sampler::{run_campaign_detailed, SamplerError};
use dynsample::surrogate::{evaluate, generate_test_set, LagSpec, SurrogateError};

use config::ConfigFile;

const EXIT_FAILURE: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_EPOCH: u8 = 3;

#[derive(Parser)]
#[command(name = "dynsample", version, about = "Adaptive sampling of dynamic simulation models")]
struct Cli {
    /// Cap on parallel simulation workers.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a campaign and write its dataset.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Dataset path; overrides the config file.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        rng_seed: Option<u64>,
    },
    /// Scatter two outputs of a dataset into an SVG file.
    Plot {
        dataset: PathBuf,
        #[arg(long)]
        x: usize,
        #[arg(long)]
        y: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train a nearest-neighbor one-step predictor and score it on a test dataset.
    Eval {
        dataset: PathBuf,
        #[arg(long)]
        test: PathBuf,
        /// Number of lagged outputs.
        #[arg(long, default_value_t = 2)]
        output_lags: usize,
        /// Lagged values per control channel; one value applies to all channels.
        #[arg(long, value_delimiter = ',', default_value = "2")]
        control_lags: Vec<usize>,
        #[arg(long, default_value_t = 3)]
        k: usize,
        #[arg(long)]
        max_train_examples: Option<usize>,
        /// Report path.
        #[arg(long, default_value = "eval.json")]
        out: PathBuf,
    },
    /// Print dataset metadata and run counts per phase.
    Inspect { dataset: PathBuf },
    /// Simulate withheld test runs with random mean inputs.
    Testset {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 5)]
        runs: usize,
        #[arg(long, default_value_t = 10_000)]
        rng_seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

struct Failure {
    code: u8,
    message: String,
}

fn usage(message: impl ToString) -> Failure {
    Failure { code: EXIT_USAGE, message: message.to_string() }
}

fn failure(message: impl ToString) -> Failure {
    Failure { code: EXIT_FAILURE, message: message.to_string() }
}

impl From<SamplerError> for Failure {
    fn from(e: SamplerError) -> Self {
        let code = match e {
            SamplerError::Config(_) => EXIT_USAGE,
            SamplerError::EpochFailure { .. } => EXIT_EPOCH,
            _ => EXIT_FAILURE,
        };
        Failure { code, message: e.to_string() }
    }
}

impl From<SurrogateError> for Failure {
    fn from(e: SurrogateError) -> Self {
        match e {
            SurrogateError::Sampler(inner) => inner.into(),
            other => usage(other),
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("DYNSAMPLE_LOG", "warn")).init();
    let cli = Cli::parse();
    if let Some(jobs) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(jobs.max(1)).build_global() {
            log::warn!("could not size the worker pool: {e}");
        }
    }
    let result = match cli.command {
        Command::Run { config, out, rng_seed } => cmd_run(&config, out, rng_seed),
        Command::Plot { dataset, x, y, out } => cmd_plot(&dataset, x, y, &out),
        Command::Eval { dataset, test, output_lags, control_lags, k, max_train_examples, out } => {
            cmd_eval(&dataset, &test, output_lags, &control_lags, k, max_train_examples, &out)
        }
        Command::Inspect { dataset } => cmd_inspect(&dataset),
        Command::Testset { config, runs, rng_seed, out } => cmd_testset(&config, runs, rng_seed, &out),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn load(path: &Path) -> Result<Dataset, Failure> {
    load_jsonl(path).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn cmd_run(config_path: &Path, out: Option<PathBuf>, rng_seed: Option<u64>) -> Result<(), Failure> {
    let file = ConfigFile::load(config_path).map_err(usage)?;
    let mut config = file.campaign_config().map_err(usage)?;
    if let Some(seed) = rng_seed {
        config.rng_seed = seed;
    }
    let model = builtin_model(&file.model).map_err(usage)?;
    config.validate(model.as_ref())?;
    let out = out.or(file.output.dataset.clone()).unwrap_or_else(|| PathBuf::from("dataset.jsonl"));

    let outcome = run_campaign_detailed(&config, model.as_ref())?;
    let dataset = &outcome.dataset;
    export_jsonl(dataset, &out).map_err(|e| failure(format!("{}: {e}", out.display())))?;
    if let Some(csv) = &file.output.csv {
        export_csv(dataset, csv).map_err(|e| failure(format!("{}: {e}", csv.display())))?;
    }

    println!("model {} rng_seed {} -> {}", dataset.meta.model, dataset.meta.rng_seed, out.display());
    println!("epoch  phase1  phase2  phase3");
    for e in &dataset.meta.epochs {
        println!("{:>5}  {:>6}  {:>6}  {:>6}", e.epoch, e.phase_counts[0], e.phase_counts[1], e.phase_counts[2]);
    }
    let [p1, p2, p3] = dataset.phase_counts();
    println!("total  {p1:>6}  {p2:>6}  {p3:>6}  ({} runs)", dataset.runs.len());
    if let Some(t) = &dataset.meta.termination {
        println!("stopped: {t}");
    }
    let timing = &outcome.timing;
    let total = timing.total.as_secs_f64();
    let share = |d: std::time::Duration| if total > 0.0 { 100.0 * d.as_secs_f64() / total } else { 0.0 };
    println!("time {total:.3} s");
    println!("  simulation     {:8.3} s  {:5.1}%", timing.simulation.as_secs_f64(), share(timing.simulation));
    println!("  candidates     {:8.3} s  {:5.1}%", timing.candidates.as_secs_f64(), share(timing.candidates));
    println!("  ball counting  {:8.3} s  {:5.1}%", timing.ball_counting.as_secs_f64(), share(timing.ball_counting));
    println!("  other          {:8.3} s  {:5.1}%", timing.other().as_secs_f64(), share(timing.other()));
    Ok(())
}

fn cmd_plot(dataset: &Path, x: usize, y: usize, out: &Path) -> Result<(), Failure> {
    let dataset = load(dataset)?;
    let svg = plot::render_svg(&dataset, x, y).map_err(usage)?;
    std::fs::write(out, svg).map_err(|e| failure(format!("{}: {e}", out.display())))
}

#[derive(Serialize)]
struct EvalOutput<'a> {
    dataset: &'a Path,
    test: &'a Path,
    max_train_examples: Option<usize>,
    #[serde(flatten)]
    report: dynsample::surrogate::EvalReport,
}

fn cmd_eval(
    dataset_path: &Path,
    test_path: &Path,
    output_lags: usize,
    control_lags: &[usize],
    k: usize,
    max_train_examples: Option<usize>,
    out: &Path,
) -> Result<(), Failure> {
    let train = load(dataset_path)?;
    let test = load(test_path)?;
    let n_controls = train.meta.n_controls;
    let control_lags = match control_lags {
        [one] => vec![*one; n_controls],
        many => many.to_vec(),
    };
    let lag = LagSpec { output_lags, control_lags, k_neighbors: k };
    let report = evaluate(&train, &test, &lag, max_train_examples)?;
    for o in &report.outputs {
        println!(
            "y[{}] mse {:.6e} ({} train / {} test examples)",
            o.output_index, o.mse, o.train_examples, o.test_examples
        );
    }
    println!("mean mse {:.6e}", report.mean_mse);
    let doc = EvalOutput { dataset: dataset_path, test: test_path, max_train_examples, report };
    let json = serde_json::to_string_pretty(&doc).map_err(failure)?;
    std::fs::write(out, json + "\n").map_err(|e| failure(format!("{}: {e}", out.display())))
}

fn cmd_inspect(path: &Path) -> Result<(), Failure> {
    let d = load(path)?;
    let m = &d.meta;
    println!("model          {}", m.model);
    println!("schema         {}", m.schema_version);
    println!("rng_seed       {}", m.rng_seed);
    println!("dimensions     {} states, {} controls, {} outputs", m.n_states, m.n_controls, m.n_outputs);
    println!("output_subset  {:?}", m.output_subset);
    println!("state_subset   {:?}", m.state_subset);
    println!("horizon        {}", m.horizon);
    println!("ic distance    {:.6}", m.ic_min_distance);
    println!("samples        {}", d.n_samples());
    let diverged = d.runs.iter().filter(|r| !r.trajectory.is_completed()).count();
    println!("runs           {} ({diverged} diverged)", d.runs.len());
    println!("epoch  phase1  phase2  phase3  x0");
    for e in &m.epochs {
        println!(
            "{:>5}  {:>6}  {:>6}  {:>6}  {:?}",
            e.epoch, e.phase_counts[0], e.phase_counts[1], e.phase_counts[2], e.x0
        );
    }
    let [p1, p2, p3] = d.phase_counts();
    println!("total  {p1:>6}  {p2:>6}  {p3:>6}");
    if let Some(t) = &m.termination {
        println!("stopped: {t}");
    }
    Ok(())
}

fn cmd_testset(config_path: &Path, runs: usize, rng_seed: u64, out: &Path) -> Result<(), Failure> {
    let file = ConfigFile::load(config_path).map_err(usage)?;
    let config = file.campaign_config().map_err(usage)?;
    let model = builtin_model(&file.model).map_err(usage)?;
    let dataset = generate_test_set(&config, model.as_ref(), runs, rng_seed)?;
    export_jsonl(&dataset, out).map_err(|e| failure(format!("{}: {e}", out.display())))?;
    println!("{} test runs -> {}", dataset.runs.len(), out.display());
    Ok(())
}
