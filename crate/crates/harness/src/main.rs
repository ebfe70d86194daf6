use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use larche_core::schemes::Discretization;
use larche_harness::config::{Scheme, Strategy};
use larche_harness::output::{bound_json, constants_json, write_outputs};
use larche_harness::sweep::{build_sweep, run_sweep, SweepKind};
use larche_harness::{constants_for, run_simulation, RunConfig};

#[derive(Parser)]
#[command(name = "larche", about = "Cahn-Larché finite element experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a single configuration.
    Run(Common),
    /// Sweep gamma, xi or the Anderson depth over the preset values.
    Sweep {
        /// gamma | xi | depth
        kind: SweepKind,
        /// Comma separated values replacing the preset ones.
        #[arg(long, value_delimiter = ',')]
        values: Option<Vec<f64>>,
        /// Worker threads.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Print the norm constants and contraction bound as JSON.
    Constants(Common),
    /// Print the effective configuration as TOML.
    Config(Common),
}

#[derive(Args)]
struct Common {
    /// TOML configuration file; defaults reproduce the reference parameters.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (overrides output.dir).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed of the random initial field.
    #[arg(long)]
    seed: Option<u64>,
    /// mono | split
    #[arg(long)]
    strategy: Option<Strategy>,
    /// implicit | semi_implicit | homogeneous
    #[arg(long)]
    scheme: Option<Scheme>,
    /// Anderson depth of the split solver.
    #[arg(long)]
    depth: Option<usize>,
    /// Elements per side.
    #[arg(long)]
    n: Option<usize>,
    /// Final time.
    #[arg(long)]
    t_final: Option<f64>,
}

impl Common {
    fn load(&self) -> Result<RunConfig> {
        let mut c = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        if let Some(o) = &self.out {
            c.output.dir = o.to_string_lossy().into_owned();
        }
        if let Some(s) = self.seed {
            c.case.seed = s;
        }
        if let Some(s) = self.strategy {
            c.solver.strategy = s;
        }
        if let Some(s) = self.scheme {
            c.solver.scheme = s;
            if s == Scheme::Homogeneous {
                c.model.heterogeneous = false;
            }
        }
        if let Some(d) = self.depth {
            c.solver.anderson_depth = d;
        }
        if let Some(n) = self.n {
            c.mesh.n = n;
        }
        if let Some(t) = self.t_final {
            c.model.t_final = t;
        }
        c.validate()?;
        Ok(c)
    }
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match cli.command {
        Command::Run(common) => {
            let config = common.load()?;
            let summary = run_simulation(&config)?;
            let disc = Discretization::with_n(config.mesh.n)?;
            let (c, b) = constants_for(&config)?;
            let dir = PathBuf::from(&config.output.dir);
            write_outputs(&summary, disc.mesh(), &dir, Some((&c, &b))).with_context(|| format!("writing {}", dir.display()))?;
            match &summary.failure {
                Some(f) => println!(
                    "{}: failed at step {} ({}); {} steps completed",
                    config.strategy_tag().as_str(),
                    f.step,
                    f.error,
                    summary.completed_steps()
                ),
                None => println!(
                    "{}: {} steps, avg iterations {:.3}, final energy {:.6}, {:.1} s",
                    config.strategy_tag().as_str(),
                    summary.completed_steps(),
                    summary.average_iterations().unwrap_or(f64::NAN),
                    summary.energies.last().map_or(f64::NAN, |e| e.total),
                    summary.wall_time.as_secs_f64()
                ),
            }
        }
        Command::Sweep { kind, values, jobs, common } => {
            let base = common.load()?;
            let values = values.unwrap_or_else(|| kind.default_values());
            let strategies = match (common.scheme, common.strategy) {
                (Some(s), Some(t)) => vec![(s, t)],
                (Some(s), None) => kind.default_strategies().into_iter().filter(|p| p.0 == s).collect(),
                (None, Some(t)) => kind.default_strategies().into_iter().filter(|p| p.1 == t).collect(),
                (None, None) => kind.default_strategies(),
            };
            let entries = build_sweep(kind, &base, &values, &strategies);
            let dir = PathBuf::from(&base.output.dir);
            let rows = run_sweep(&entries, Some(&dir), jobs)?;
            println!("{:>8} {:>12} {:>10}", kind.name(), "strategy", "avg iters");
            for (r, _) in rows {
                let avg = r.avg_iterations.map_or(format!("failed@{}", r.failed_step.unwrap_or(0)), |v| format!("{v:.3}"));
                println!("{:>8} {:>12} {:>10}", r.x, r.strategy, avg);
            }
        }
        Command::Constants(common) => {
            let config = common.load()?;
            let (c, b) = constants_for(&config)?;
            let v = serde_json::json!({ "constants": constants_json(&c), "rate_bound": bound_json(&b) });
            println!("{}", serde_json::to_string_pretty(&v)?);
        }
        Command::Config(common) => {
            print!("{}", common.load()?.to_toml()?);
        }
    }
    Ok(())
}
