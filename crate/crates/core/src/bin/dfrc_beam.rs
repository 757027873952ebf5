//! Command-line front end: solve scenarios, sweep parameters, emit
//! beampatterns, validate outage, and evaluate the single-user closed form.
//!
//! Exit codes: 0 success, 2 infeasible design, 3 solver failure, 4 config
//! or I/O error.

use clap::{Parser, Subcommand};
use dfrc_beam::closed_form::{su_solve, SuBranch};
use dfrc_beam::experiments::{
    emit_beampattern, load_config, outage_table, run_scenario, run_sweep, ScenarioConfig,
    SolveRecord, SweepParameter, SweepSpec, SCHEMA_VERSION,
};
use dfrc_beam::sdp::SolveStatus;
use dfrc_beam::{Error, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::path::PathBuf;

const EXIT_OK: i32 = 0;
const EXIT_INFEASIBLE: i32 = 2;
const EXIT_SOLVER: i32 = 3;
const EXIT_CONFIG: i32 = 4;

#[derive(Parser)]
#[command(
    name = "dfrc-beam",
    version,
    about = "Outage-aware transmit beamforming designer for radar-communication arrays"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one scenario and write the solution record as JSON.
    Solve {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Overrides the seed in the config file.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Sweep one parameter and write per-point statistics as CSV.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// One of: gamma_db, outage_p, n_antennas, n_users, theta0_deg.
        #[arg(long)]
        param: String,
        /// Comma-separated parameter values, e.g. "1,2,3.5" or "-2,0,2".
        #[arg(long, allow_hyphen_values = true)]
        values: String,
        /// Monte-Carlo trials per sweep point.
        #[arg(long, default_value_t = 200)]
        trials: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Solve one scenario and write its normalized beampattern as CSV.
    Beampattern {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 0.1)]
        grid_step_deg: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Solve one scenario and write per-user empirical outage as CSV.
    ValidateOutage {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 10_000)]
        mc_trials: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Evaluate the single-user closed form (K=1 configs only).
    ClosedForm {
        #[arg(long)]
        config: PathBuf,
        /// Bernstein exponent ε = -ln p; near-zero recovers the no-outage design.
        #[arg(long)]
        epsilon: f64,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() {
    let cli = Cli::parse();
    let code = match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Numerical(_) => EXIT_SOLVER,
                _ => EXIT_CONFIG,
            }
        }
    };
    std::process::exit(code);
}

fn status_code(status: SolveStatus) -> i32 {
    match status {
        SolveStatus::Optimal => EXIT_OK,
        SolveStatus::Infeasible => EXIT_INFEASIBLE,
        _ => EXIT_SOLVER,
    }
}

fn write_out(path: &PathBuf, content: &str) -> Result<()> {
    std::fs::write(path, content)?;
    Ok(())
}

fn dispatch(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Solve { config, out, seed } => {
            let mut cfg = load_config(&config)?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            let outcome = run_scenario(&cfg)?;
            let record = SolveRecord::from_outcome(&outcome);
            write_out(&out, &serde_json::to_string_pretty(&record)?)?;
            println!(
                "{}: status {:?}, objective {:.6}, {} iterations",
                out.display(),
                outcome.status,
                outcome.design.objective,
                outcome.design.iterations
            );
            Ok(status_code(outcome.status))
        }
        Command::Sweep { config, param, values, trials, out } => {
            let cfg = load_config(&config)?;
            let parameter: SweepParameter = param.parse()?;
            let values = values
                .split(',')
                .map(|v| {
                    v.trim()
                        .parse::<f64>()
                        .map_err(|_| Error::Config(format!("bad sweep value {v:?}")))
                })
                .collect::<Result<Vec<f64>>>()?;
            let spec = SweepSpec { parameter, values, trials_per_point: trials, outputs: vec![] };
            let table = run_sweep(&cfg, &spec)?;
            write_out(&out, &table.to_csv())?;
            println!("{}: {} sweep points, {} trials each", out.display(), table.rows.len(), trials);
            Ok(EXIT_OK)
        }
        Command::Beampattern { config, grid_step_deg, out } => {
            let cfg = load_config(&config)?;
            let outcome = run_scenario(&cfg)?;
            if outcome.status != SolveStatus::Optimal {
                eprintln!("scenario not solved: status {:?}", outcome.status);
                return Ok(status_code(outcome.status));
            }
            let csv = emit_beampattern(
                &cfg.array,
                &outcome.design.w_blocks,
                grid_step_deg,
                &outcome.config_hash,
            )?;
            write_out(&out, &csv)?;
            println!("{}: {} rows", out.display(), csv.lines().count().saturating_sub(2));
            Ok(EXIT_OK)
        }
        Command::ValidateOutage { config, mc_trials, out } => {
            let cfg = load_config(&config)?;
            let outcome = run_scenario(&cfg)?;
            if outcome.status != SolveStatus::Optimal {
                eprintln!("scenario not solved: status {:?}", outcome.status);
                return Ok(status_code(outcome.status));
            }
            let csv = outage_table(&cfg, &outcome, mc_trials)?;
            write_out(&out, &csv)?;
            println!("{}: {} users validated", out.display(), cfg.n_users());
            Ok(EXIT_OK)
        }
        Command::ClosedForm { config, epsilon, out } => {
            let cfg = load_config(&config)?;
            closed_form_record(&cfg, epsilon, &out)
        }
    }
}

fn closed_form_record(cfg: &ScenarioConfig, epsilon: f64, out: &PathBuf) -> Result<i32> {
    if cfg.n_users() != 1 {
        return Err(Error::Config(format!(
            "closed form is single-user only; config has {} users",
            cfg.n_users()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let channels =
        dfrc_beam::channel::sample_nominal(&mut rng, 1, cfg.array.n_antennas)?;
    let user = &cfg.users[0];
    let sol = su_solve(
        &cfg.array,
        cfg.theta0,
        &channels.nominal[0],
        user.gamma,
        user.sigma_delta,
        epsilon,
        cfg.noise_var,
    )?;
    #[derive(serde::Serialize)]
    struct ClosedFormRecord {
        schema_version: u32,
        config_hash: String,
        epsilon: f64,
        feasible: bool,
        branch: String,
        rho: Option<f64>,
        lambda_threshold: f64,
        beam_power: f64,
        w_re: Vec<f64>,
        w_im: Vec<f64>,
    }
    let record = ClosedFormRecord {
        schema_version: SCHEMA_VERSION,
        config_hash: cfg.config_hash(),
        epsilon,
        feasible: sol.feasible,
        branch: match sol.branch {
            SuBranch::Bartlett => "bartlett".into(),
            SuBranch::Mixture => "mixture".into(),
        },
        rho: sol.rho,
        lambda_threshold: sol.lambda_threshold,
        beam_power: sol.beam_power(&cfg.array, cfg.theta0)?,
        w_re: sol.w.iter().map(|z| z.re).collect(),
        w_im: sol.w.iter().map(|z| z.im).collect(),
    };
    write_out(out, &serde_json::to_string_pretty(&record)?)?;
    println!(
        "{}: {} branch, feasible {}",
        out.display(),
        record.branch,
        record.feasible
    );
    Ok(if sol.feasible { EXIT_OK } else { EXIT_INFEASIBLE })
}
