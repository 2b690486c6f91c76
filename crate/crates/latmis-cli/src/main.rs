mod artifact;
mod report;
mod stages;

use clap::{Args, Parser, Subcommand};
use latmis::annealer::{ensemble_experiment, gamma_grid};
use latmis::error::Error;
use latmis::oracle::Budget;
use latmis::reduction::random_planar_instance;
use stages::{parse_stages, Ctx, Pattern, PipelineConfig, Source, Stage, StageError};
use std::path::PathBuf;
use std::process::ExitCode;

const EXIT_CERTIFICATE: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_BUDGET: u8 = 3;

/// Maximum independent set on lattice Ising hardware: planarize, reduce,
/// embed, compile, route around defects, certify and anneal.
#[derive(Parser)]
#[command(name = "latmis", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Replace crossings of a drawn graph by gadgets.
    Planarize(Opts),
    /// Build the Ising instance whose ground states are the maximum independent sets.
    Reduce(Opts),
    /// Lay the planar graph out as clusters on a triangular lattice.
    Embed(Opts),
    /// Compile the layout onto a fixed-coupling lattice pattern.
    Compile(Opts),
    /// Reroute the compiled program around defective qubits.
    Route(Opts),
    /// Certify every available stage against exact MIS.
    Verify(Opts),
    /// Gap sweep and optional annealing run.
    Anneal(Opts),
    /// Monte Carlo rerouting success rate against defect density.
    SweepDefects {
        #[command(flatten)]
        opts: Opts,
        /// Comma-separated defect densities.
        #[arg(long, default_value = "0,0.01,0.02,0.05,0.1,0.2", value_delimiter = ',')]
        densities: Vec<f64>,
        #[arg(long, default_value_t = 100)]
        trials: usize,
    },
    /// Gap statistics over random reduced planar graphs.
    Ensemble {
        #[command(flatten)]
        opts: Opts,
        #[arg(long, default_value_t = 50)]
        count: usize,
        /// Largest graph size drawn.
        #[arg(long, default_value_t = 12)]
        max_vertices: usize,
        #[arg(long, default_value_t = 8)]
        bins: usize,
    },
    /// Summarize an artifact directory.
    Report {
        /// Artifact directory.
        #[arg(long, env = "LATMIS_OUT", default_value = "latmis-out")]
        out: PathBuf,
    },
    /// Run several stages in order.
    Run {
        #[command(flatten)]
        opts: Opts,
        /// `all` or a comma-separated list such as `reduce,verify`.
        #[arg(long, default_value = "all")]
        stages: String,
    },
}

#[derive(Args, Clone)]
struct Opts {
    /// Graph file: DIMACS edge list, or JSON with optional vertex coordinates.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Artifact directory.
    #[arg(long, env = "LATMIS_OUT", default_value = "latmis-out")]
    out: PathBuf,
    /// Coupling threshold J.
    #[arg(long, default_value_t = 1.0)]
    threshold: f64,
    #[arg(long, value_enum, default_value_t = Pattern::Direct)]
    pattern: Pattern,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Fraction of defective sites sampled by `route`.
    #[arg(long, default_value_t = 0.0)]
    density: f64,
    /// JSON defect map or list of defective site indices.
    #[arg(long)]
    defects: Option<PathBuf>,
    /// Initial transverse field; defaults to ten times the largest coupling or field.
    #[arg(long)]
    gamma0: Option<f64>,
    #[arg(long, default_value_t = 41)]
    points: usize,
    /// Annealing time; no evolution is run when zero.
    #[arg(long = "T", default_value_t = 0.0)]
    total_time: f64,
    /// Instance to anneal.
    #[arg(long, value_enum, default_value_t = Source::Ising)]
    source: Source,
    /// Brute-force spin budget of the oracle.
    #[arg(long, default_value_t = Budget::default().spins)]
    budget_spins: usize,
    /// Largest elimination width of the oracle.
    #[arg(long, default_value_t = Budget::default().width)]
    budget_width: usize,
    /// Branch-and-bound vertex budget of the oracle.
    #[arg(long, default_value_t = Budget::default().vertices)]
    budget_vertices: usize,
}

impl Opts {
    fn config(&self) -> PipelineConfig {
        PipelineConfig {
            input: self.input.clone(),
            out: self.out.clone(),
            threshold: self.threshold,
            pattern: self.pattern,
            seed: self.seed,
            budget: Budget { spins: self.budget_spins, width: self.budget_width, vertices: self.budget_vertices, ..Budget::default() },
            density: self.density,
            defects: self.defects.clone(),
            gamma0: self.gamma0,
            points: self.points,
            total_time: self.total_time,
            source: self.source,
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::BudgetExceeded { .. } | Error::PatchTooLarge { .. } => EXIT_BUDGET,
        _ => EXIT_CONFIG,
    }
}

fn fail(e: StageError) -> ExitCode {
    let json = serde_json::json!({ "stage": e.stage, "code": e.error.code(), "message": e.error.to_string() });
    eprintln!("error: {e}");
    eprintln!("{json}");
    ExitCode::from(exit_code(&e.error))
}

fn outcome(ctx: &Ctx) -> ExitCode {
    match &ctx.certificate {
        Some(c) if !c.passed => ExitCode::from(EXIT_CERTIFICATE),
        _ => ExitCode::SUCCESS,
    }
}

fn single(opts: &Opts, stage: Stage) -> ExitCode {
    let mut ctx = match Ctx::new(opts.config(), false) {
        Ok(c) => c,
        Err(error) => return fail(StageError { stage: stage.name(), error }),
    };
    match ctx.run_stage(stage) {
        Ok(()) => outcome(&ctx),
        Err(e) => fail(e),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Planarize(o) => single(&o, Stage::Planarize),
        Command::Reduce(o) => single(&o, Stage::Reduce),
        Command::Embed(o) => single(&o, Stage::Embed),
        Command::Compile(o) => single(&o, Stage::Compile),
        Command::Route(o) => single(&o, Stage::Route),
        Command::Verify(o) => single(&o, Stage::Verify),
        Command::Anneal(o) => single(&o, Stage::Anneal),
        Command::SweepDefects { opts, densities, trials } => {
            let r = Ctx::new(opts.config(), false).and_then(|mut ctx| ctx.sweep(&densities, trials));
            r.map_or_else(|error| fail(StageError { stage: "sweep-defects", error }), |()| ExitCode::SUCCESS)
        }
        Command::Ensemble { opts, count, max_vertices, bins } => {
            let r = ensemble(&opts, count, max_vertices, bins);
            r.map_or_else(|error| fail(StageError { stage: "ensemble", error }), |()| ExitCode::SUCCESS)
        }
        Command::Report { out } => match report::report(&out) {
            Ok(text) => {
                print!("{text}");
                ExitCode::SUCCESS
            }
            Err(error) => fail(StageError { stage: "report", error }),
        },
        Command::Run { opts, stages } => {
            let (stages, mut ctx) = match parse_stages(&stages).and_then(|s| Ctx::new(opts.config(), true).map(|c| (s, c))) {
                Ok(x) => x,
                Err(error) => return fail(StageError { stage: "run", error }),
            };
            ctx.tolerate_budget = true;
            for stage in stages {
                if let Err(e) = ctx.run_stage(stage) {
                    return fail(e);
                }
            }
            outcome(&ctx)
        }
    }
}

fn ensemble(opts: &Opts, count: usize, max_vertices: usize, bins: usize) -> latmis::Result<()> {
    let cfg = opts.config();
    cfg.validate()?;
    if max_vertices < 2 || max_vertices > latmis::annealer::MAX_SPECTRUM_SPINS {
        return Err(Error::Config(format!("max-vertices must lie in 2..={}", latmis::annealer::MAX_SPECTRUM_SPINS)));
    }
    let store = artifact::Store::new(&cfg.out)?;
    let gamma0 = cfg.gamma0.unwrap_or(8.0);
    let r = ensemble_experiment(|rng| random_planar_instance(max_vertices, rng), count, &gamma_grid(gamma0, cfg.points), cfg.seed, bins)?;
    println!("ensemble: {count} instances, <min g> = {}, min <g> = {} at gamma {}", r.mean_of_min, r.min_of_mean, r.min_of_mean_gamma);
    store.write_text("ensemble.csv", &r.csv())?;
    store.write(artifact::Kind::Ensemble, &report::Ensemble { seed: cfg.seed, count, max_vertices, report: r })?;
    Ok(())
}
