//! Command-line front end for geolog: bundle ingestion, fitting, prediction,
//! geodesic readout, permutation tests and simulation runs.
//!
//! Exit codes: 0 ok, 2 input, 3 separation, 4 convergence.

pub mod bundle;
pub mod model;

use std::io::Write;

use clap::{Parser, Subcommand, ValueEnum};
use geolog::inference::{permutation_test_with, PermStatistic, PermTestOptions};
use geolog::simlab::{named_point, run_experiment, spd3, Case, SimConfig};
use geolog::{alexandrov_inner_product, fit, predict_prob, FitOptions, GeoError, GeodesicSpace, Point, TangentVector};
use thiserror::Error;

use bundle::{fmt_coord, join_coords, split_coords, Bundle, SpaceKind};
use model::ModelFile;

pub const THREADS_ENV: &str = "GEOLOG_THREADS";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("complete separation: {0}")]
    Separation(String),
    #[error("not converged: {0}")]
    Convergence(String),
    #[error(transparent)]
    Geo(#[from] GeoError),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) => 2,
            CliError::Separation(_) => 3,
            CliError::Convergence(_) => 4,
            CliError::Geo(GeoError::NumericalLimit { .. }) => 4,
            CliError::Geo(_) => 2,
        }
    }

    pub fn io(path: &str, e: std::io::Error) -> CliError {
        CliError::Input(format!("{path}: {e}"))
    }

    pub fn context(self, path: &str) -> CliError {
        match self {
            CliError::Input(m) => CliError::Input(format!("{path}: {m}")),
            CliError::Geo(e) => CliError::Input(format!("{path}: {e}")),
            other => other,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "geolog", version, about = "Logistic regression with covariates in geodesic metric spaces")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StatisticArg {
    /// d(mu_hat, beta_hat)
    Distance,
    /// 2 n (loglik + log 2)
    Lr,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit the model to a labelled bundle and write a model file.
    Fit {
        #[arg(long)]
        data: String,
        #[arg(long)]
        space: String,
        #[arg(long)]
        out: String,
        #[arg(long, default_value_t = 100)]
        max_iters: usize,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
    },
    /// Write `prob,class` for every record of a bundle.
    Predict {
        #[arg(long)]
        model: String,
        #[arg(long)]
        data: String,
        /// Defaults to standard output.
        #[arg(long)]
        out: Option<String>,
    },
    /// Points and odds along the unit-speed geodesic from mu_hat toward beta_hat.
    Geodesic {
        #[arg(long)]
        model: String,
        /// Comma-separated arclengths.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
        t_list: Vec<f64>,
    },
    /// Permutation test of beta = mu.
    Permtest {
        #[arg(long)]
        data: String,
        #[arg(long)]
        space: String,
        #[arg(long, default_value_t = 999)]
        perms: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = StatisticArg::Distance)]
        statistic: StatisticArg,
    },
    /// Monte Carlo experiment on SPD(3).
    Simulate {
        #[arg(long)]
        case: u32,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        r: f64,
        #[arg(long)]
        reps: usize,
        #[arg(long)]
        seed: u64,
        /// I3, 3I3, SigmaAR, 3SigmaAR or six lower-triangular entries.
        #[arg(long, default_value = "I3")]
        mu: String,
        #[arg(long, default_value = "3SigmaAR")]
        beta: String,
        #[arg(long, default_value_t = 0.8)]
        train_frac: f64,
    },
}

pub fn run(cli: Cli, out: &mut dyn Write) -> Result<(), CliError> {
    match cli.command {
        Command::Fit {
            data,
            space,
            out: model_path,
            max_iters,
            tol,
        } => cmd_fit(&data, &space, &model_path, max_iters, tol, out),
        Command::Predict { model, data, out: path } => cmd_predict(&model, &data, path.as_deref(), out),
        Command::Geodesic { model, t_list } => cmd_geodesic(&model, &t_list, out),
        Command::Permtest {
            data,
            space,
            perms,
            seed,
            statistic,
        } => cmd_permtest(&data, &space, perms, seed, statistic, out),
        Command::Simulate {
            case,
            n,
            r,
            reps,
            seed,
            mu,
            beta,
            train_frac,
        } => {
            let config = SimConfig {
                train_frac,
                mu_star: parse_spd3_point(&mu)?,
                beta_star: parse_spd3_point(&beta)?,
                ..SimConfig::standard(Case::from_id(case)?, n, r, reps, seed)
            };
            cmd_simulate(&config, out)
        }
    }
}

fn emit(out: &mut dyn Write, text: &str) -> Result<(), CliError> {
    out.write_all(text.as_bytes())
        .map_err(|e| CliError::Input(format!("writing output: {e}")))
}

fn write_file(path: &str, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))
}

/// Reads a bundle and checks that its header names the requested space.
fn read_bundle_as(path: &str, space: &str) -> Result<Bundle, CliError> {
    let kind: SpaceKind = space.parse()?;
    let bundle = Bundle::read(path)?;
    if bundle.spec.kind != kind {
        return Err(CliError::Input(format!(
            "{path}: bundle holds {} points but --space is {kind}",
            bundle.spec.kind
        )));
    }
    Ok(bundle)
}

/// Worker pool sized by `GEOLOG_THREADS` (unset or 0 means one per core).
pub fn worker_pool() -> Result<rayon::ThreadPool, CliError> {
    let threads = match std::env::var(THREADS_ENV) {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .map_err(|_| CliError::Input(format!("{THREADS_ENV}={v:?} is not a thread count")))?,
        Err(_) => 0,
    };
    sized_pool(threads)
}

fn sized_pool(threads: usize) -> Result<rayon::ThreadPool, CliError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::Input(format!("cannot start worker threads: {e}")))
}

pub fn cmd_fit(
    data: &str,
    space_name: &str,
    model_path: &str,
    max_iters: usize,
    tol: f64,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    let bundle = read_bundle_as(data, space_name)?;
    let space = bundle.spec.build()?;
    let dataset = bundle.dataset(space.as_ref())?;
    let opts = FitOptions {
        max_iters,
        grad_tol: tol,
        ..FitOptions::default()
    };
    let fitted = fit(space.as_ref(), &dataset, &opts)?;
    if fitted.separated {
        let ones = dataset.labels().iter().filter(|&&y| y).count();
        let zeros = dataset.len() - ones;
        let why = if ones == 0 || zeros == 0 {
            format!("all {} labels belong to one class", dataset.len())
        } else {
            format!(
                "a geodesic direction splits the {ones} ones from the {zeros} zeros; the maximum-likelihood estimate does not exist"
            )
        };
        return Err(CliError::Separation(why));
    }
    let mean_converged = fitted.frechet.as_ref().is_none_or(|f| f.converged);
    let summary = format!(
        "d(mu_hat,beta_hat)={}\nloglik={}\nconverged={} iterations={} grad_norm={:.3e} mean_converged={}\nmodel={}\n",
        fmt_coord(fitted.effect_size()),
        fmt_coord(fitted.loglik),
        fitted.converged,
        fitted.iters,
        fitted.grad_norm,
        mean_converged,
        model_path
    );
    let converged = fitted.converged && mean_converged;
    let model = ModelFile {
        spec: bundle.spec,
        fit: fitted,
    };
    write_file(model_path, &model.render())?;
    emit(out, &summary)?;
    if !converged {
        return Err(CliError::Convergence(format!(
            "gradient norm {:.3e} after {} iterations (tolerance {tol:e}); model written for inspection",
            model.fit.grad_norm, model.fit.iters
        )));
    }
    Ok(())
}

pub fn cmd_predict(model_path: &str, data: &str, path: Option<&str>, out: &mut dyn Write) -> Result<(), CliError> {
    let model = ModelFile::read(model_path)?;
    let bundle = Bundle::read(data)?;
    if bundle.spec != model.spec {
        return Err(CliError::Input(format!(
            "space mismatch: model is {}, {data} is {}",
            model.spec, bundle.spec
        )));
    }
    let space = model.space()?;
    let mut text = String::new();
    for p in bundle.points(space.as_ref())? {
        let prob = predict_prob(space.as_ref(), &model.fit, &p)?;
        let class = u8::from(prob >= 0.5);
        text.push_str(&format!("{prob},{class}\n"));
    }
    match path {
        Some(path) => write_file(path, &text),
        None => emit(out, &text),
    }
}

/// Unit-speed geodesic `t -> exp_mu(t b / |b|)`, so `t` is arclength.
pub fn geodesic_readout(
    space: &dyn GeodesicSpace,
    fit: &geolog::FitResult,
    t: f64,
) -> Result<(Point, f64), CliError> {
    let b = &fit.b_hat.coeffs;
    let len = fit.effect_size();
    if !t.is_finite() {
        return Err(CliError::Input(format!("t = {t} is not finite")));
    }
    if len == 0.0 {
        if t != 0.0 {
            return Err(CliError::Input(format!(
                "t = {t} lies outside the valid range [0, 0]: beta_hat equals mu_hat so there is no direction"
            )));
        }
        return Ok((fit.mu_hat.clone(), 0.0));
    }
    let unit: Vec<f64> = b.iter().map(|c| c / len).collect();
    let (lo, hi) = space.ray_range(fit.mu_hat.coords(), &unit);
    if t < lo || t > hi {
        let bound = if t > hi { format!("upper bound {hi}") } else { format!("lower bound {lo}") };
        return Err(CliError::Input(format!(
            "t = {t} is beyond the {bound}; the geodesic stays in {} only for t in [{lo}, {hi}]",
            space.id()
        )));
    }
    let step = TangentVector::new(fit.mu_hat.clone(), unit.iter().map(|u| t * u).collect());
    let point = space.exp_map(&step)?;
    let h = alexandrov_inner_product(space, &fit.mu_hat, &point, &fit.beta_hat)?;
    Ok((point, h))
}

pub fn cmd_geodesic(model_path: &str, ts: &[f64], out: &mut dyn Write) -> Result<(), CliError> {
    let model = ModelFile::read(model_path)?;
    let space = model.space()?;
    let mut text = String::from("t\tlog_odds\todds\tpoint\n");
    for &t in ts {
        let (point, h) = geodesic_readout(space.as_ref(), &model.fit, t)?;
        text.push_str(&format!(
            "{t}\t{}\t{}\t{}\n",
            fmt_coord(h),
            fmt_coord(h.exp()),
            join_coords(point.coords())
        ));
    }
    emit(out, &text)
}

pub fn cmd_permtest(
    data: &str,
    space_name: &str,
    perms: usize,
    seed: u64,
    statistic: StatisticArg,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    let bundle = read_bundle_as(data, space_name)?;
    let space = bundle.spec.build()?;
    let dataset = bundle.dataset(space.as_ref())?;
    let opts = PermTestOptions {
        statistic: match statistic {
            StatisticArg::Distance => PermStatistic::Distance,
            StatisticArg::Lr => PermStatistic::LikelihoodRatio,
        },
        ..PermTestOptions::new(perms, seed)
    };
    let res = sized_pool(1)?.install(|| permutation_test_with(space.as_ref(), &dataset, &opts))?;
    let text = format!(
        "statistic={}\nstat_obs={}\np_value={}\nn_perms={}\nseed={}\nobs_separated={}\nn_separated={}\n",
        match statistic {
            StatisticArg::Distance => "distance",
            StatisticArg::Lr => "lr",
        },
        fmt_coord(res.stat_obs),
        res.p_value,
        res.n_perms,
        res.seed,
        res.obs_separated,
        res.n_separated
    );
    emit(out, &text)
}

/// A named SPD(3) point or six comma-separated lower-triangular entries.
pub fn parse_spd3_point(s: &str) -> Result<Point, CliError> {
    if let Ok(p) = named_point(s) {
        return Ok(p);
    }
    let coords = split_coords(s).map_err(|e| {
        CliError::Input(format!(
            "{s:?} is neither I3, 3I3, SigmaAR, 3SigmaAR nor six numbers: {e}"
        ))
    })?;
    spd3()
        .point(coords)
        .map_err(|e| CliError::Input(format!("{s:?}: {e}")))
}

pub fn cmd_simulate(config: &SimConfig, out: &mut dyn Write) -> Result<(), CliError> {
    config.validate()?;
    let summary = worker_pool()?.install(|| run_experiment(config))?;
    emit(out, &format!("{}\n{}", summary.to_tsv(), summary.to_key_value()))
}
