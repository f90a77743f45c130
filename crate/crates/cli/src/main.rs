//! Batch command-line front end: run one experiment, sweep an axis, or
//! validate a configuration. Exit codes are a stable scripting contract:
//! 0 success, 2 configuration error, 3 runtime error.

mod config;
mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::{load_config, parse_axis_values, ConfigError};
use netbandit::agents::AgentKind;
use netbandit::harness::{run_replications, sweep, ExperimentConfig, NetworkModel, SweepSpec};
use netbandit::optimize::Budget;

#[derive(Parser)]
#[command(
    name = "netbandit",
    about = "Budgeted treatment policies on dynamic networks with interference",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the configured experiment and write a results CSV.
    Run {
        /// Path to the TOML configuration.
        config: PathBuf,
        /// Master seed override.
        #[arg(long)]
        seed: Option<u64>,
        /// Output CSV path.
        #[arg(long, default_value = "results.csv")]
        out: PathBuf,
        /// Worker threads for replications.
        #[arg(long, env = "NETBANDIT_JOBS")]
        jobs: Option<usize>,
    },
    /// Run one experiment per axis value (paired seeds across values).
    Sweep {
        config: PathBuf,
        /// Axis: n, budget, prior_mean, or agent.
        #[arg(long)]
        axis: String,
        /// Comma-separated axis values (budget accepts integers,
        /// fractions like 0.2n, and "unlimited").
        #[arg(long)]
        values: String,
        #[arg(long)]
        seed: Option<u64>,
        /// Output prefix: writes <out>_<axis>_<value>.csv per value plus
        /// <out>_combined.csv in the same schema.
        #[arg(long, default_value = "sweep")]
        out: String,
        #[arg(long, env = "NETBANDIT_JOBS")]
        jobs: Option<usize>,
    },
    /// Parse and validate a configuration, printing derived quantities.
    Validate { config: PathBuf },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if e.downcast_ref::<ConfigError>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::from(3)
            }
        }
    }
}

fn dispatch(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Run {
            config,
            seed,
            out,
            jobs,
        } => cmd_run(&config, seed, &out, jobs),
        Command::Sweep {
            config,
            axis,
            values,
            seed,
            out,
            jobs,
        } => cmd_sweep(&config, &axis, &values, seed, &out, jobs),
        Command::Validate { config } => cmd_validate(&config),
    }
}

fn cmd_run(
    config_path: &Path,
    seed: Option<u64>,
    out: &Path,
    jobs: Option<usize>,
) -> anyhow::Result<()> {
    let mut cfg = load_config(config_path)?;
    if let Some(s) = seed {
        cfg.master_seed = s;
    }
    let result = run_replications(&cfg, jobs)?;
    std::fs::write(out, output::results_csv(&cfg, &result))?;
    if cfg.record_posterior {
        let posterior_path = out.with_extension("posterior.csv");
        std::fs::write(&posterior_path, output::posterior_csv(&cfg, &result))?;
        println!("posterior trace: {}", posterior_path.display());
    }
    print!("{}", output::summary(cfg.agent.kind.as_str(), &result));
    println!("results: {}", out.display());
    Ok(())
}

fn cmd_sweep(
    config_path: &Path,
    axis: &str,
    values: &str,
    seed: Option<u64>,
    out_prefix: &str,
    jobs: Option<usize>,
) -> anyhow::Result<()> {
    let mut cfg = load_config(config_path)?;
    if let Some(s) = seed {
        cfg.master_seed = s;
    }
    let spec = parse_axis_values(axis, values)?;
    if matches!(spec, SweepSpec::Agent(ref kinds) if kinds.contains(&AgentKind::NetworkUcl))
        && cfg.n > 40
    {
        // Not an error, just slow; leave a note.
        eprintln!("note: network_ucl beyond exhaustive scale uses the candidate-set policy");
    }
    let arms = sweep(&cfg, &spec, jobs)?;
    let mut combined = String::from(output::CSV_HEADER);
    combined.push('\n');
    for arm in &arms {
        let csv = output::results_csv(&arm.config, &arm.result);
        let fname = format!(
            "{out_prefix}_{}.csv",
            arm.label.replace('=', "-").replace('/', "-")
        );
        std::fs::write(&fname, &csv)?;
        for line in csv.lines().skip(1) {
            combined.push_str(line);
            combined.push('\n');
        }
        print!("{}", output::summary(&arm.label, &arm.result));
        println!("  -> {fname}");
    }
    let combined_path = format!("{out_prefix}_combined.csv");
    std::fs::write(&combined_path, combined)?;
    println!("combined: {combined_path}");
    Ok(())
}

fn cmd_validate(config_path: &Path) -> anyhow::Result<()> {
    let cfg = load_config(config_path)?;
    println!("configuration OK");
    println!("  n = {}", cfg.n);
    println!("  rounds = {}, replications = {}", cfg.rounds, cfg.replications);
    println!("  k = {}", cfg.k());
    println!(
        "  parameter dimension D = k + cutoff + 1 = {} + {} = {}",
        cfg.k(),
        cfg.cutoff + 1,
        cfg.dim()
    );
    println!("  expected degree = {:.4}", expected_degree(&cfg));
    let cap = match cfg.budget.resolve(cfg.n) {
        Budget::Limit(b) => b.min(cfg.n),
        Budget::Unlimited => cfg.n,
    };
    println!("  budget cap B = {cap}");
    let c = cfg.confidence_params();
    println!(
        "  confidence defaults: theta_norm_bound = {:.4}, noise_scale = {}, row_norm_bound = {}, delta = {}, lambda = {}",
        c.theta_norm_bound, c.noise_scale, c.row_norm_bound, c.delta, c.lambda
    );
    Ok(())
}

fn expected_degree(cfg: &ExperimentConfig<f64>) -> f64 {
    match &cfg.network {
        NetworkModel::SbmProtocol { within, across } => {
            let k = cfg.k() as f64;
            let p_same = 1.0 / k;
            (cfg.n as f64 - 1.0) * (p_same * within + (1.0 - p_same) * across.prob(cfg.n))
        }
        NetworkModel::SbmExplicit(params) => params.expected_degree(cfg.n),
        NetworkModel::Latent { params, .. } => {
            // Monte Carlo over fresh latent pairs; deterministic seed.
            use netbandit::Scalar;
            use rand::SeedableRng;
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0);
            let pairs = 20_000;
            let mut acc = 0.0;
            for _ in 0..pairs {
                let u_i: Vec<f64> = (0..params.latent_dim)
                    .map(|_| f64::standard_normal(&mut rng) * params.u_scale)
                    .collect();
                let u_j: Vec<f64> = (0..params.latent_dim)
                    .map(|_| f64::standard_normal(&mut rng) * params.u_scale)
                    .collect();
                let ab_i = f64::standard_normal(&mut rng) * params.a_scale
                    + f64::standard_normal(&mut rng) * params.b_scale;
                let ab_j = f64::standard_normal(&mut rng) * params.a_scale
                    + f64::standard_normal(&mut rng) * params.b_scale;
                acc += params.edge_probability(&u_i, &u_j, ab_i, ab_j);
            }
            (cfg.n as f64 - 1.0) * acc / pairs as f64
        }
    }
}
