//! Permutation test of no covariate effect, `H0: beta* = mu*`.

use std::f64::consts::LN_2;

use rand::seq::SliceRandom;
use rayon::prelude::*;

use crate::error::{GeoError, Result};
use crate::frechet::frechet_mean;
use crate::metric::{norm, GeodesicSpace};
use crate::regression::{Dataset, FitOptions, LogisticProblem, NewtonOutcome};
use crate::rng::substream;

/// Test statistic computed from each fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PermStatistic {
    /// Geodesic length `d(mu_hat, beta_hat)`.
    #[default]
    Distance,
    /// `2 n (l_hat + log 2)`, twice the log-likelihood gain over `beta = mu`.
    LikelihoodRatio,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PermTestOptions {
    pub n_perms: usize,
    pub seed: u64,
    pub statistic: PermStatistic,
    pub fit: FitOptions,
}

impl PermTestOptions {
    pub fn new(n_perms: usize, seed: u64) -> Self {
        PermTestOptions {
            n_perms,
            seed,
            statistic: PermStatistic::default(),
            fit: FitOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PermTestResult {
    pub stat_obs: f64,
    pub perm_stats: Vec<f64>,
    /// `(1 + #{perm_stats >= stat_obs}) / (n_perms + 1)`.
    pub p_value: f64,
    pub n_perms: usize,
    pub seed: u64,
    pub statistic: PermStatistic,
    /// Whether the fit on the observed labels was separated.
    pub obs_separated: bool,
    /// Permuted fits flagged as separated; their statistic is `+inf`.
    pub n_separated: usize,
}

fn statistic(out: &NewtonOutcome, kind: PermStatistic, n: usize) -> f64 {
    if out.separated {
        return f64::INFINITY;
    }
    match kind {
        PermStatistic::Distance => norm(&out.b),
        PermStatistic::LikelihoodRatio => (2.0 * n as f64 * (out.loglik + LN_2)).max(0.0),
    }
}

/// Add-one permutation p-value.
pub fn add_one_p_value(stat_obs: f64, perm_stats: &[f64]) -> f64 {
    let exceed = perm_stats.iter().filter(|&&s| s >= stat_obs).count();
    (1 + exceed) as f64 / (perm_stats.len() + 1) as f64
}

/// Permutation test with the distance statistic and default fit options.
pub fn permutation_test<S: GeodesicSpace + ?Sized>(
    space: &S,
    data: &Dataset,
    n_perms: usize,
    seed: u64,
) -> Result<PermTestResult> {
    permutation_test_with(space, data, &PermTestOptions::new(n_perms, seed))
}

/// Labels are shuffled uniformly with covariates held fixed, so the mean and
/// the tangent design are computed once and only the coefficients are refit.
/// Permutation `k` draws from stream `k + 1` of `seed`.
pub fn permutation_test_with<S: GeodesicSpace + ?Sized>(
    space: &S,
    data: &Dataset,
    opts: &PermTestOptions,
) -> Result<PermTestResult> {
    if opts.n_perms == 0 {
        return Err(GeoError::InvalidConfig("n_perms must be >= 1".into()));
    }
    if data.space_id() != space.id() {
        return Err(GeoError::SpaceMismatch {
            expected: space.id().to_string(),
            found: data.space_id().to_string(),
        });
    }
    let mu_hat = match &opts.fit.mu_override {
        Some(mu) => mu.clone(),
        None => frechet_mean(space, data.points(), &opts.fit.frechet)?.mean,
    };
    let problem = LogisticProblem::from_points(space, &mu_hat, data.points())?;
    let n = data.len();

    let observed = problem.maximize(data.labels(), &opts.fit)?;
    let stat_obs = statistic(&observed, opts.statistic, n);

    let perm_stats: Vec<f64> = (0..opts.n_perms)
        .into_par_iter()
        .map(|k| {
            let mut rng = substream(opts.seed, k as u64 + 1);
            let mut labels = data.labels().to_vec();
            labels.shuffle(&mut rng);
            problem
                .maximize(&labels, &opts.fit)
                .map(|out| statistic(&out, opts.statistic, n))
        })
        .collect::<Result<_>>()?;

    let n_separated = perm_stats.iter().filter(|s| s.is_infinite()).count();
    Ok(PermTestResult {
        stat_obs,
        p_value: add_one_p_value(stat_obs, &perm_stats),
        perm_stats,
        n_perms: opts.n_perms,
        seed: opts.seed,
        statistic: opts.statistic,
        obs_separated: observed.separated,
        n_separated,
    })
}
