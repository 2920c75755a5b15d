//! CLI harness over the experiment runners. Exit codes: 0 success,
//! 1 config error, 2 I/O error.

use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

use clap::error::ErrorKind;
use clap::Parser;

use georeweight::experiments::{
    self, build_integrand, parse_mode, rows_to_csv, ExperimentConfig, ExperimentError,
    ExperimentKind,
};
use georeweight::geometry::{self, DomainBox};
use georeweight::sampling::{self, Seed};

#[derive(Parser, Debug)]
#[command(
    name = "georeweight",
    about = "Voronoi sample-reweighting Monte Carlo experiments",
    after_help = "Experiments: convergence, strata_sweep, batch_fixed_total, batch_growth, \
                  bias_check, orderstats, boundary_cardinality"
)]
struct Cli {
    /// Experiment to run
    experiment: String,

    /// JSON config file; CLI flags override its fields
    #[arg(long)]
    config: Option<PathBuf>,

    /// Integrand: test1d | product2d | image:PATH | constant:C
    #[arg(long)]
    function: Option<String>,

    /// Comma-separated estimators: mc,con,gr,strat,gr-strat
    #[arg(long, value_delimiter = ',')]
    estimators: Option<Vec<String>>,

    /// Comma-separated sample counts
    #[arg(long, value_delimiter = ',')]
    n: Option<Vec<usize>>,

    /// Comma-separated strata-per-axis values
    #[arg(long, value_delimiter = ',')]
    strata: Option<Vec<usize>>,

    /// Comma-separated batch sizes
    #[arg(long = "batch-size", value_delimiter = ',')]
    batch_size: Option<Vec<usize>>,

    /// Trials per row
    #[arg(long)]
    trials: Option<usize>,

    /// Base seed
    #[arg(long)]
    seed: Option<u64>,

    /// Correction-coefficient mode: grid | paper
    #[arg(long)]
    mode: Option<String>,

    /// Output CSV path (stdout when omitted)
    #[arg(long)]
    out: Option<PathBuf>,

    /// Also write the partition of the first configuration as debug CSV
    #[arg(long = "dump-partition")]
    dump_partition: Option<PathBuf>,
}

fn build_config(cli: &Cli) -> Result<ExperimentConfig, ExperimentError> {
    let experiment = ExperimentKind::from_str(&cli.experiment).map_err(ExperimentError::Config)?;
    let mut config = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)?;
            let mut cfg: ExperimentConfig = serde_json::from_str(&text)
                .map_err(|e| ExperimentError::Config(format!("bad config file: {e}")))?;
            cfg.experiment = experiment;
            cfg
        }
        None => ExperimentConfig::new(experiment),
    };
    if let Some(f) = &cli.function {
        config.integrand = f.clone();
    }
    if let Some(e) = &cli.estimators {
        config.estimators = e.clone();
    }
    if let Some(n) = &cli.n {
        config.n = n.clone();
    }
    if let Some(s) = &cli.strata {
        config.strata = s.clone();
    }
    if let Some(b) = &cli.batch_size {
        config.batch_size = b.clone();
    }
    if let Some(t) = cli.trials {
        config.trials = Some(t);
    }
    if let Some(s) = cli.seed {
        config.seed = s;
    }
    if let Some(m) = &cli.mode {
        config.mode = parse_mode(m).map_err(ExperimentError::Config)?;
    }
    if let Some(o) = &cli.out {
        config.out = Some(o.clone());
    }
    Ok(config)
}

fn dump_partition(config: &ExperimentConfig, path: &PathBuf) -> Result<(), ExperimentError> {
    let f = build_integrand(&config.integrand)?;
    let dim = f.dimension();
    let n = *config.n.first().unwrap_or(&16);
    let partition = match config.strata.first() {
        Some(&s) if s > 1 => {
            let set = sampling::sample_stratified(n, s, dim, Seed(config.seed))?;
            geometry::partition_stratified(&set)?
        }
        _ => {
            let set = sampling::sample_uniform_iid(n, dim, Seed(config.seed))?;
            geometry::partition_samples(&set.points, &DomainBox::unit(dim))?
        }
    };
    std::fs::write(path, geometry::partition_to_csv(&partition))?;
    Ok(())
}

fn run(cli: &Cli) -> Result<(), ExperimentError> {
    let config = build_config(cli)?;
    let rows = experiments::run_experiment(&config)?;
    let csv = rows_to_csv(&rows);
    match &config.out {
        Some(path) => std::fs::write(path, csv)?,
        None => print!("{csv}"),
    }
    if let Some(path) = &cli.dump_partition {
        dump_partition(&config, path)?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(1);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(ExperimentError::Io(e)) => {
            eprintln!("georeweight: i/o error: {e}");
            ExitCode::from(2)
        }
        Err(ExperimentError::Image(georeweight::testbed::PgmError::Io(e))) => {
            eprintln!("georeweight: i/o error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("georeweight: {e}");
            ExitCode::from(1)
        }
    }
}
