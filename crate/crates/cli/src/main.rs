use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rayon::prelude::*;

use bulksurf_cli::config::{ConfigError, Ini, Kind, Scenario};
use bulksurf_cli::report::{self, Header, Rung};
use bulksurf_cli::run::{self, Outcome};

#[derive(Parser)]
#[command(name = "bulksurf", version, about = "Verification campaigns and the bubble simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Output directory.
    #[arg(long, global = true, default_value = "bulksurf-out")]
    out: PathBuf,
    /// Seed for randomized suites; overrides `scenario.seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Scenarios run concurrently.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Multiplies every tolerance.
    #[arg(long = "tol-scale", global = true, default_value_t = 1.0)]
    tol_scale: f64,
    /// Omit the timestamp line from reports.
    #[arg(long = "no-timestamp", global = true)]
    no_timestamp: bool,
    /// `key=value`, `section.key=value` for other sections. Repeatable.
    #[arg(long = "override", global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Run verify-* scenarios.
    Verify {
        #[arg(required = true)]
        configs: Vec<PathBuf>,
    },
    /// Run bubble scenarios.
    Bubble {
        #[arg(required = true)]
        configs: Vec<PathBuf>,
    },
    /// Repeat one verify-* scenario over quadrature sizes.
    Ladder {
        config: PathBuf,
        #[arg(long = "N", value_delimiter = ',', default_value = "8,12,16,24")]
        nodes: Vec<usize>,
    },
}

enum Failure {
    Config(ConfigError),
    Io(std::io::Error),
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Io(e)
    }
}

fn load(cli: &Cli, path: &Path) -> Result<Scenario, ConfigError> {
    let mut ini = Ini::load(path)?;
    for spec in &cli.overrides {
        ini.apply_override(spec)?;
    }
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("scenario");
    Scenario::from_ini(&ini, stem, cli.seed, cli.tol_scale).map_err(|e| match e {
        ConfigError::Io { .. } | ConfigError::Usage(_) => e,
        other => ConfigError::Usage(format!("{}: {other}", path.display())),
    })
}

fn load_all(cli: &Cli, paths: &[PathBuf], bubble: bool) -> Result<Vec<Scenario>, ConfigError> {
    let mut out: Vec<Scenario> = Vec::new();
    for p in paths {
        let sc = load(cli, p)?;
        if (sc.kind == Kind::Bubble) != bubble {
            let want = if bubble { "`bubble`" } else { "verify-*" };
            return Err(ConfigError::Usage(format!(
                "{}: scenario kind {} is not a {want} scenario",
                p.display(),
                sc.kind.name()
            )));
        }
        if out.iter().any(|o| o.name == sc.name) {
            return Err(ConfigError::Usage(format!("duplicate scenario name `{}`", sc.name)));
        }
        out.push(sc);
    }
    Ok(out)
}

fn execute(sc: &Scenario) -> Outcome {
    run::run(sc).unwrap_or_else(|e| Outcome::from_error(sc, &e))
}

fn pool(cli: &Cli) -> Result<rayon::ThreadPool, ConfigError> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(k) = cli.jobs {
        if k == 0 {
            return Err(ConfigError::Usage("--jobs must be at least 1".into()));
        }
        b = b.num_threads(k);
    }
    b.build().map_err(|e| ConfigError::Usage(format!("thread pool: {e}")))
}

fn campaign(cli: &Cli, paths: &[PathBuf], bubble: bool) -> Result<bool, Failure> {
    let scenarios = load_all(cli, paths, bubble)?;
    let outcomes: Vec<Outcome> = pool(cli)?.install(|| scenarios.par_iter().map(execute).collect());
    for o in &outcomes {
        for line in report::describe(o) {
            println!("{line}");
        }
    }
    report::write_outcomes(&cli.out, &outcomes, header(cli))?;
    Ok(outcomes.iter().all(|o| o.failed() == 0))
}

fn ladder(cli: &Cli, path: &Path, nodes: &[usize]) -> Result<bool, Failure> {
    let sc = load(cli, path)?;
    if sc.kind == Kind::Bubble {
        return Err(ConfigError::Usage("ladder needs a verify-* scenario".into()).into());
    }
    if let Some(n) = nodes.iter().find(|&&n| n < 8) {
        return Err(ConfigError::Usage(format!("--N values must be at least 8, got {n}")).into());
    }
    let rungs: Vec<(usize, Outcome)> =
        pool(cli)?.install(|| nodes.par_iter().map(|&n| (n, execute(&sc.with_nodes(n)))).collect());
    let table: Vec<Rung> = rungs
        .iter()
        .map(|(n, o)| Rung {
            n: *n,
            checks: o.checks.clone(),
        })
        .collect();
    let body = report::ladder_csv(&table);
    print!("{}", String::from_utf8_lossy(&body));
    let (_, last) = rungs.into_iter().last().expect("clap requires at least one N");
    for line in report::describe(&last) {
        println!("{line}");
    }
    report::write_outcomes(&cli.out, std::slice::from_ref(&last), header(cli))?;
    report::write_ladder(&cli.out, &sc.name, &body, header(cli))?;
    Ok(last.failed() == 0)
}

fn header(cli: &Cli) -> Header {
    Header {
        timestamp: !cli.no_timestamp,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.tol_scale.is_nan() || cli.tol_scale <= 0.0 {
        eprintln!("error: --tol-scale must be positive");
        return ExitCode::from(2);
    }
    let result = match &cli.command {
        Command::Verify { configs } => campaign(&cli, configs, false),
        Command::Bubble { configs } => campaign(&cli, configs, true),
        Command::Ladder { config, nodes } => ladder(&cli, config, nodes),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Config(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(Failure::Io(e)) => {
            eprintln!("error: writing reports: {e}");
            ExitCode::from(1)
        }
    }
}
