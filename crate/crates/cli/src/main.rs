//! Experiment harness for the marglik library.
//!
//! Five subcommands write plot-ready CSVs: `exp1` (conjugate Gaussian
//! evidence versus prior width), `exp2` (nested linear regression),
//! `exp3` (Poisson-versus-geometric error tables), `exp4` (radial-velocity
//! model comparison), and `criteria` (evidence next to information
//! criteria). Configuration layers, later wins: built-in defaults, the
//! `--config` TOML file, `MARGLIK_*` environment variables, flags.

mod commands;
mod config;
mod output;

use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use commands::{
    cmd_criteria, cmd_exp1, cmd_exp2, cmd_exp3, cmd_exp4, CriteriaParams, Exp1Params, Exp2Params,
    Exp3Params, Exp4Params,
};
use config::{layer, require_seed, FileConfig};
use marglik::exoplanet::RvGridConfig;

#[derive(Parser)]
#[command(
    name = "marglik",
    version,
    about = "Marginal-likelihood and Bayes-factor experiment harness",
    after_help = "Environment: MARGLIK_CONFIG, MARGLIK_SEED, MARGLIK_OUT, MARGLIK_THREADS \
                  override the config file; flags override both."
)]
struct Cli {
    /// TOML config file with top-level keys and one [section] per subcommand
    #[arg(long, global = true, env = "MARGLIK_CONFIG")]
    config: Option<PathBuf>,

    /// Seed for every stochastic experiment (required by exp2/exp3/exp4)
    #[arg(long, global = true, env = "MARGLIK_SEED")]
    seed: Option<u64>,

    /// Directory the CSVs are written to
    #[arg(long, global = true, env = "MARGLIK_OUT")]
    out: Option<PathBuf>,

    /// Worker threads for grid evaluation (absent or 0: all cores)
    #[arg(long, global = true, env = "MARGLIK_THREADS")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Conjugate Gaussian: evidence shrinks as the prior widens
    Exp1(Exp1Flags),
    /// Nested linear regression: prior sensitivity of the Bayes factor
    Exp2(Exp2Flags),
    /// Poisson vs geometric counts: error tables under widening priors
    Exp3(Exp3Flags),
    /// Radial-velocity planet search: period-box dilution and corrections
    Exp4(Exp4Flags),
    /// Evidence, Occam factor, and BIC/AIC/HQIC side by side
    Criteria(CriteriaFlags),
}

#[derive(Args)]
struct Exp1Flags {
    /// The single observation
    #[arg(long)]
    y: Option<f64>,
    /// Likelihood standard deviation
    #[arg(long)]
    sigma_like: Option<f64>,
    /// Prior mean
    #[arg(long)]
    mu0: Option<f64>,
    /// Prior standard deviations to sweep (comma separated)
    #[arg(long, value_delimiter = ',')]
    sigma0: Option<Vec<f64>>,
    /// Density grid resolution
    #[arg(long)]
    theta_points: Option<usize>,
    /// Density grid half width around the prior mean
    #[arg(long)]
    theta_halfwidth: Option<f64>,
}

#[derive(Args)]
struct Exp2Flags {
    /// Observations per dataset
    #[arg(long)]
    d_y: Option<usize>,
    /// True intercept
    #[arg(long)]
    beta0_true: Option<f64>,
    /// True slope
    #[arg(long)]
    beta1_true: Option<f64>,
    /// Noise standard deviation
    #[arg(long)]
    sigma_like: Option<f64>,
    /// Covariate standard deviation
    #[arg(long)]
    x_scale: Option<f64>,
    /// Intercept-prior widths, slope prior held at 1
    #[arg(long, value_delimiter = ',')]
    sigma0_sweep: Option<Vec<f64>>,
    /// Slope-prior widths, intercept prior held at 1
    #[arg(long, value_delimiter = ',')]
    sigma1_sweep: Option<Vec<f64>>,
    /// Common widths for the predictive-strength and averaged sweeps
    #[arg(long, value_delimiter = ',')]
    sigma_shared: Option<Vec<f64>>,
    /// Monte Carlo draws for the prior-expected fit strength
    #[arg(long)]
    r2_samples: Option<usize>,
    /// Datasets in the averaged sweep
    #[arg(long)]
    n_runs: Option<usize>,
}

#[derive(Args)]
struct Exp3Flags {
    /// True Poisson rate
    #[arg(long)]
    theta_true: Option<f64>,
    /// Rate-box widths for the error tables
    #[arg(long, value_delimiter = ',')]
    l_values: Option<Vec<f64>>,
    /// Sample sizes for the error tables
    #[arg(long, value_delimiter = ',')]
    d_y_table: Option<Vec<usize>>,
    /// Simulated datasets per cell
    #[arg(long)]
    n_runs: Option<usize>,
    /// Sample sizes for the fixed-width error curve
    #[arg(long, value_delimiter = ',')]
    dy_curve: Option<Vec<usize>>,
    /// Rate-box width the error curve holds fixed
    #[arg(long)]
    l_fixed: Option<f64>,
    /// Sample sizes for the corrected-factor tables
    #[arg(long, value_delimiter = ',')]
    ibf_dy: Option<Vec<usize>>,
    /// True Poisson rates for the corrected-factor tables
    #[arg(long, value_delimiter = ',')]
    ibf_theta: Option<Vec<f64>>,
    /// True geometric proportions for the corrected-factor tables
    #[arg(long, value_delimiter = ',')]
    ibf_phi: Option<Vec<f64>>,
}

#[derive(Args)]
struct Exp4Flags {
    /// Number of observation epochs
    #[arg(long)]
    d_y: Option<usize>,
    /// Observing span in days
    #[arg(long)]
    t_max: Option<f64>,
    /// Noise variance of the simulated velocities
    #[arg(long)]
    sigma_e2: Option<f64>,
    /// True systemic velocity
    #[arg(long)]
    v0_true: Option<f64>,
    /// True velocity semi-amplitude
    #[arg(long)]
    k: Option<f64>,
    /// True argument of periastron (radians)
    #[arg(long)]
    omega: Option<f64>,
    /// True eccentricity
    #[arg(long)]
    ecc: Option<f64>,
    /// True orbital period in days
    #[arg(long)]
    period: Option<f64>,
    /// True periastron passage time in days
    #[arg(long)]
    tau: Option<f64>,
    /// Lower systemic-velocity prior bound
    #[arg(long)]
    v0_lo: Option<f64>,
    /// Upper systemic-velocity prior bound
    #[arg(long)]
    v0_hi: Option<f64>,
    /// Period-box sizes for the dilution curve
    #[arg(long, value_delimiter = ',')]
    pmax_values: Option<Vec<f64>>,
    /// Period box used by the likelihood-based-prior curves
    #[arg(long)]
    curve_pmax: Option<f64>,
    /// Lower edge of the period-box hyperprior window
    #[arg(long)]
    hyper_lo: Option<f64>,
    /// Upper edge of the period-box hyperprior window
    #[arg(long)]
    hyper_hi: Option<f64>,
    /// Hyperprior quadrature nodes
    #[arg(long)]
    hyper_nodes: Option<usize>,
    /// Systemic-velocity grid nodes
    #[arg(long)]
    v0_points: Option<usize>,
    /// Period grid spacing in days
    #[arg(long)]
    p_spacing: Option<f64>,
    /// Minimum period grid nodes
    #[arg(long)]
    p_points_min: Option<usize>,
    /// Load this `t,y` CSV instead of simulating
    #[arg(long)]
    dataset: Option<PathBuf>,
}

#[derive(Args)]
struct CriteriaFlags {
    /// Prior widths, one summary row each
    #[arg(long, value_delimiter = ',')]
    sigma0: Option<Vec<f64>>,
    /// Observations in the built-in dataset
    #[arg(long)]
    d_y: Option<usize>,
    /// True mean of the built-in dataset
    #[arg(long)]
    theta_true: Option<f64>,
    /// Generator seed of the built-in dataset
    #[arg(long)]
    data_seed: Option<u64>,
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    let file = FileConfig::load(cli.config.as_ref())?;

    let threads = layer(cli.threads, file.threads, 0);
    if threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .context("cannot size the worker pool")?;
    }
    let out = layer(cli.out.clone(), file.out.clone(), PathBuf::from("runs"));

    let written = match &cli.command {
        Command::Exp1(fl) => {
            let d = Exp1Params::default();
            let p = Exp1Params {
                y: layer(fl.y, file.exp1.y, d.y),
                sigma_like: layer(fl.sigma_like, file.exp1.sigma_like, d.sigma_like),
                mu0: layer(fl.mu0, file.exp1.mu0, d.mu0),
                sigma0: layer(fl.sigma0.clone(), file.exp1.sigma0.clone(), d.sigma0),
                theta_points: layer(fl.theta_points, file.exp1.theta_points, d.theta_points),
                theta_halfwidth: layer(
                    fl.theta_halfwidth,
                    file.exp1.theta_halfwidth,
                    d.theta_halfwidth,
                ),
            };
            cmd_exp1(&p, &out)?
        }
        Command::Exp2(fl) => {
            let seed = require_seed(cli.seed, file.seed, "exp2")?;
            let d = Exp2Params::with_seed(seed);
            let p = Exp2Params {
                seed,
                d_y: layer(fl.d_y, file.exp2.d_y, d.d_y),
                beta0_true: layer(fl.beta0_true, file.exp2.beta0_true, d.beta0_true),
                beta1_true: layer(fl.beta1_true, file.exp2.beta1_true, d.beta1_true),
                sigma_like: layer(fl.sigma_like, file.exp2.sigma_like, d.sigma_like),
                x_scale: layer(fl.x_scale, file.exp2.x_scale, d.x_scale),
                sigma0_sweep: layer(
                    fl.sigma0_sweep.clone(),
                    file.exp2.sigma0_sweep.clone(),
                    d.sigma0_sweep,
                ),
                sigma1_sweep: layer(
                    fl.sigma1_sweep.clone(),
                    file.exp2.sigma1_sweep.clone(),
                    d.sigma1_sweep,
                ),
                sigma_shared: layer(
                    fl.sigma_shared.clone(),
                    file.exp2.sigma_shared.clone(),
                    d.sigma_shared,
                ),
                r2_samples: layer(fl.r2_samples, file.exp2.r2_samples, d.r2_samples),
                n_runs: layer(fl.n_runs, file.exp2.n_runs, d.n_runs),
            };
            cmd_exp2(&p, &out)?
        }
        Command::Exp3(fl) => {
            let seed = require_seed(cli.seed, file.seed, "exp3")?;
            let d = Exp3Params::with_seed(seed);
            let p = Exp3Params {
                seed,
                theta_true: layer(fl.theta_true, file.exp3.theta_true, d.theta_true),
                l_values: layer(fl.l_values.clone(), file.exp3.l_values.clone(), d.l_values),
                d_y_table: layer(
                    fl.d_y_table.clone(),
                    file.exp3.d_y_table.clone(),
                    d.d_y_table,
                ),
                n_runs: layer(fl.n_runs, file.exp3.n_runs, d.n_runs),
                dy_curve: layer(fl.dy_curve.clone(), file.exp3.dy_curve.clone(), d.dy_curve),
                l_fixed: layer(fl.l_fixed, file.exp3.l_fixed, d.l_fixed),
                ibf_dy: layer(fl.ibf_dy.clone(), file.exp3.ibf_dy.clone(), d.ibf_dy),
                ibf_theta: layer(
                    fl.ibf_theta.clone(),
                    file.exp3.ibf_theta.clone(),
                    d.ibf_theta,
                ),
                ibf_phi: layer(fl.ibf_phi.clone(), file.exp3.ibf_phi.clone(), d.ibf_phi),
            };
            cmd_exp3(&p, &out)?
        }
        Command::Exp4(fl) => {
            let seed = require_seed(cli.seed, file.seed, "exp4")?;
            let d = Exp4Params::with_seed(seed);
            let grid_default = RvGridConfig::default();
            let p = Exp4Params {
                seed,
                d_y: layer(fl.d_y, file.exp4.d_y, d.d_y),
                t_max: layer(fl.t_max, file.exp4.t_max, d.t_max),
                sigma_e2: layer(fl.sigma_e2, file.exp4.sigma_e2, d.sigma_e2),
                v0_true: layer(fl.v0_true, file.exp4.v0_true, d.v0_true),
                k: layer(fl.k, file.exp4.k, d.k),
                omega: layer(fl.omega, file.exp4.omega, d.omega),
                ecc: layer(fl.ecc, file.exp4.ecc, d.ecc),
                period: layer(fl.period, file.exp4.period, d.period),
                tau: layer(fl.tau, file.exp4.tau, d.tau),
                v0_bounds: (
                    layer(fl.v0_lo, file.exp4.v0_lo, d.v0_bounds.0),
                    layer(fl.v0_hi, file.exp4.v0_hi, d.v0_bounds.1),
                ),
                pmax_values: layer(
                    fl.pmax_values.clone(),
                    file.exp4.pmax_values.clone(),
                    d.pmax_values,
                ),
                curve_pmax: layer(fl.curve_pmax, file.exp4.curve_pmax, d.curve_pmax),
                hyper_window: (
                    layer(fl.hyper_lo, file.exp4.hyper_lo, d.hyper_window.0),
                    layer(fl.hyper_hi, file.exp4.hyper_hi, d.hyper_window.1),
                ),
                hyper_nodes: layer(fl.hyper_nodes, file.exp4.hyper_nodes, d.hyper_nodes),
                grid: RvGridConfig {
                    v0_points: layer(fl.v0_points, file.exp4.v0_points, grid_default.v0_points),
                    p_spacing: layer(fl.p_spacing, file.exp4.p_spacing, grid_default.p_spacing),
                    p_points_min: layer(
                        fl.p_points_min,
                        file.exp4.p_points_min,
                        grid_default.p_points_min,
                    ),
                    ..grid_default
                },
                dataset: fl.dataset.clone().or(file.exp4.dataset.clone()),
            };
            cmd_exp4(&p, &out)?
        }
        Command::Criteria(fl) => {
            let d = CriteriaParams::default();
            let p = CriteriaParams {
                sigma0: layer(fl.sigma0.clone(), file.criteria.sigma0.clone(), d.sigma0),
                d_y: layer(fl.d_y, file.criteria.d_y, d.d_y),
                theta_true: layer(fl.theta_true, file.criteria.theta_true, d.theta_true),
                data_seed: fl
                    .data_seed
                    .or(file.criteria.data_seed)
                    .or(cli.seed)
                    .or(file.seed)
                    .unwrap_or(d.data_seed),
            };
            cmd_criteria(&p, &out)?
        }
    };

    for path in &written {
        println!("wrote {}", path.display());
    }
    Ok(())
}
