mod config;
mod report;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use oppnet::graph::{generate, save_graph, GraphParams};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Io(String),
    #[error("{0}")]
    Graph(String),
    #[error("{0}")]
    Cell(String),
    #[error("{0}")]
    Report(String),
    #[error("{0}")]
    Usage(String),
}

impl CliError {
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config",
            CliError::Io(_) => "io",
            CliError::Graph(_) => "graph",
            CliError::Cell(_) => "cell",
            CliError::Report(_) => "report",
            CliError::Usage(_) => "usage",
        }
    }
}

#[derive(Parser)]
#[command(name = "oppnet", version, about = "Content dissemination experiments over opportunistic networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a community contact graph and print its statistics.
    Gen {
        #[arg(long, default_value_t = 200)]
        n: usize,
        /// Exact community count, or the power-law size draw when omitted.
        #[arg(long)]
        communities: Option<usize>,
        #[arg(long, default_value_t = 10.0)]
        avg_degree: f64,
        #[arg(long, default_value_t = 30)]
        max_degree: usize,
        #[arg(long, default_value_t = 6)]
        min_community: usize,
        #[arg(long, default_value_t = 40)]
        max_community: usize,
        #[arg(long, default_value_t = 0.1)]
        mu_t: f64,
        #[arg(long, default_value_t = 0.001)]
        mu_w: f64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run every strategy x seeding cell of a config file.
    Run {
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the median(std) finish-time table of a run directory.
    Report { dir: PathBuf },
}

fn execute(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Gen {
            n,
            communities,
            avg_degree,
            max_degree,
            min_community,
            max_community,
            mu_t,
            mu_w,
            seed,
            out,
        } => {
            let params = GraphParams {
                n,
                communities,
                avg_degree,
                max_degree,
                min_community,
                max_community,
                mu_t,
                mu_w,
                seed,
                ..GraphParams::default()
            };
            let (g, gen) = generate(&params).map_err(|e| CliError::Graph(format!("generation failed: {e}")))?;
            save_graph(&g, &out).map_err(|e| CliError::Io(format!("{}: {e}", out.display())))?;
            let s = g.stats();
            println!("nodes {} edges {} communities {}", s.nodes, s.edges, s.communities);
            println!("inter-community edge fraction {:.4} (target mu_t {mu_t})", s.inter_edge_fraction);
            println!("inter-community weight fraction {:.6} (target mu_w {mu_w})", s.inter_weight_fraction);
            println!("mean degree {:.3}", s.mean_degree);
            for w in &gen.weight_warnings {
                eprintln!("warning: {w}");
            }
            Ok(())
        }
        Command::Run { config, seed, trials, out } => {
            let mut cfg = config::ExperimentConfig::load(&config)?;
            if let Some(s) = seed {
                cfg.base_seed = s;
            }
            if let Some(t) = trials {
                if t == 0 {
                    return Err(CliError::Usage("--trials must be positive".into()));
                }
                cfg.n_trials = t;
            }
            if let Some(o) = out {
                cfg.out = o;
            }
            run::run(&cfg)
        }
        Command::Report { dir } => {
            print!("{}", report::report(&dir)?);
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => e.exit(),
        Err(e) => {
            let msg = e.to_string();
            let first = msg.lines().next().unwrap_or("invalid arguments").trim_start_matches("error: ");
            eprintln!("error[usage]: {first}");
            return ExitCode::from(2);
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error[{}]: {}", e.kind(), e.to_string().replace('\n', " "));
            ExitCode::FAILURE
        }
    }
}
