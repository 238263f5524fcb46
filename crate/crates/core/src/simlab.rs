//! Synthetic SPD(3) experiments: data generators for three logit models,
//! test-set metrics and a replicated Monte Carlo harness.

use std::f64::consts::PI;
use std::fmt::Write as _;

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use crate::error::{GeoError, Result};
use crate::metric::{alexandrov_inner_product, GeodesicSpace, Point};
use crate::regression::{fit, logistic, log_odds, bayes_classify, Dataset, FitOptions};
use crate::rng::{substream, StreamRng};
use crate::spaces::SpdLogCholeskySpace;

/// The 3x3 autoregressive correlation matrix `(0.5^|i-j|)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SigmaAr;

impl SigmaAr {
    pub fn matrix() -> DMatrix<f64> {
        DMatrix::from_fn(3, 3, |i, j| 0.5f64.powi((i as i32 - j as i32).abs()))
    }

    /// `scale * SigmaAr` as a point of SPD(3).
    pub fn point(space: &SpdLogCholeskySpace, scale: f64) -> Result<Point> {
        space.point_from_matrix(&(Self::matrix() * scale))
    }
}

/// The SPD(3) space all experiments run in.
pub fn spd3() -> SpdLogCholeskySpace {
    SpdLogCholeskySpace::new(3).expect("order 3 is valid")
}

/// Named parameter points: `I3`, `3I3`, `SigmaAR`, `3SigmaAR`.
pub fn named_point(name: &str) -> Result<Point> {
    let s = spd3();
    let id = DMatrix::<f64>::identity(3, 3);
    match name {
        "I3" => s.point_from_matrix(&id),
        "3I3" => s.point_from_matrix(&(id * 3.0)),
        "SigmaAR" => SigmaAr::point(&s, 1.0),
        "3SigmaAR" => SigmaAr::point(&s, 3.0),
        _ => Err(GeoError::InvalidConfig(format!("unknown point name {name:?}"))),
    }
}

/// Logit model generating the labels.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Case {
    /// The binary regression model itself: `h(beta*; x, mu*)`.
    Model,
    /// `2 sin(pi h) + h` with `h = h(3 SigmaAr; x, I3)`.
    Sinusoidal,
    /// Additive nonlinear function of the stacked lower triangle of `x`.
    Additive,
}

impl Case {
    pub fn from_id(id: u32) -> Result<Case> {
        match id {
            1 => Ok(Case::Model),
            2 => Ok(Case::Sinusoidal),
            3 => Ok(Case::Additive),
            _ => Err(GeoError::InvalidConfig(format!("unknown case {id}; expected 1, 2 or 3"))),
        }
    }

    pub fn id(self) -> u32 {
        match self {
            Case::Model => 1,
            Case::Sinusoidal => 2,
            Case::Additive => 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub case: Case,
    pub n: usize,
    /// Variance of each tangent coordinate of the covariate.
    pub r: f64,
    pub mu_star: Point,
    pub beta_star: Point,
    pub replicates: usize,
    pub train_frac: f64,
    pub seed: u64,
    pub fit: FitOptions,
}

impl SimConfig {
    /// `mu* = I3`, `beta* = 3 SigmaAr`, 80/20 split.
    pub fn standard(case: Case, n: usize, r: f64, replicates: usize, seed: u64) -> SimConfig {
        SimConfig {
            case,
            n,
            r,
            mu_star: named_point("I3").expect("preset"),
            beta_star: named_point("3SigmaAR").expect("preset"),
            replicates,
            train_frac: 0.8,
            seed,
            fit: FitOptions::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let s = spd3();
        if self.n < 10 {
            return Err(GeoError::OutOfRange {
                name: "n",
                value: self.n as f64,
                bound: ">= 10".into(),
            });
        }
        if !(self.r > 0.0 && self.r.is_finite()) {
            return Err(GeoError::OutOfRange {
                name: "r",
                value: self.r,
                bound: "> 0".into(),
            });
        }
        if !(self.train_frac > 0.0 && self.train_frac < 1.0) {
            return Err(GeoError::OutOfRange {
                name: "train_frac",
                value: self.train_frac,
                bound: "in (0, 1)".into(),
            });
        }
        if self.replicates == 0 {
            return Err(GeoError::OutOfRange {
                name: "replicates",
                value: 0.0,
                bound: ">= 1".into(),
            });
        }
        s.ensure_member(&self.mu_star)?;
        s.ensure_member(&self.beta_star)?;
        if self.case != Case::Model
            && !(self.mu_star.approx_eq(&named_point("I3")?)
                && self.beta_star.approx_eq(&named_point("3SigmaAR")?))
        {
            return Err(GeoError::InvalidConfig(format!(
                "case {} requires mu* = I3 and beta* = 3SigmaAR",
                self.case.id()
            )));
        }
        let n_train = self.n_train();
        if n_train == 0 || n_train >= self.n {
            return Err(GeoError::InvalidConfig("split leaves an empty training or test set".into()));
        }
        Ok(())
    }

    pub fn n_train(&self) -> usize {
        (self.train_frac * self.n as f64).round() as usize
    }
}

/// `Exp_mu(S)` where the six stacked lower-triangular entries of the symmetric
/// matrix `S` are i.i.d. `N(0, r)` and `S` is read as a tangent at `mu`.
pub fn draw_covariate(space: &SpdLogCholeskySpace, mu: &Point, r: f64, rng: &mut StreamRng) -> Result<Point> {
    let normal = Normal::new(0.0, r.sqrt()).map_err(|e| GeoError::InvalidConfig(e.to_string()))?;
    let s: Vec<f64> = (0..space.ambient_size()).map(|_| normal.sample(rng)).collect();
    let v = space.from_ambient(mu, &s)?;
    space.exp_map(&v)
}

/// Monte Carlo estimate of `E d^2(mu, X)` for the covariate generator.
pub fn estimate_sigma2_x(mu: &Point, r: f64, draws: usize, seed: u64) -> Result<f64> {
    let s = spd3();
    let mut rng = substream(seed, 0);
    let mut total = 0.0;
    for _ in 0..draws {
        let x = draw_covariate(&s, mu, r, &mut rng)?;
        total += s.distance(mu, &x)?.powi(2);
    }
    Ok(total / draws as f64)
}

/// True logit of `P(Y = 1 | x)` under `case`.
pub fn logit_case(case: Case, x: &Point, mu_star: &Point, beta_star: &Point) -> Result<f64> {
    let s = spd3();
    match case {
        Case::Model => alexandrov_inner_product(&s, mu_star, x, beta_star),
        Case::Sinusoidal => {
            let h = alexandrov_inner_product(&s, &named_point("I3")?, x, &named_point("3SigmaAR")?)?;
            Ok(2.0 * (PI * h).sin() + h)
        }
        Case::Additive => {
            s.ensure_member(x)?;
            let v = x.coords();
            Ok(3f64.ln() * (PI * v[0]).sin()
                + 3f64.sqrt() / 2.0 * v[1] * v[1]
                + 3f64.sqrt() / 4.0 * v[2].exp()
                + 0.75 * v[4]
                + 2.0 * 1.5f64.ln() * (v[3] + v[5]))
        }
    }
}

/// Covariates, labels and the true logit of every row.
#[derive(Debug, Clone)]
pub struct Sample {
    pub data: Dataset,
    pub logits: Vec<f64>,
}

pub fn generate_dataset(config: &SimConfig, rng: &mut StreamRng) -> Result<Sample> {
    config.validate()?;
    let s = spd3();
    let mut points = Vec::with_capacity(config.n);
    let mut labels = Vec::with_capacity(config.n);
    let mut logits = Vec::with_capacity(config.n);
    for _ in 0..config.n {
        let x = draw_covariate(&s, &config.mu_star, config.r, rng)?;
        let eta = logit_case(config.case, &x, &config.mu_star, &config.beta_star)?;
        labels.push(rng.random::<f64>() < logistic(eta));
        logits.push(eta);
        points.push(x);
    }
    Ok(Sample {
        data: Dataset::new(s.id().clone(), points, labels)?,
        logits,
    })
}

pub fn accuracy(pred: &[bool], labels: &[bool]) -> f64 {
    let hits = pred.iter().zip(labels).filter(|(a, b)| a == b).count();
    hits as f64 / labels.len() as f64
}

/// True-positive rate; absent without positives.
pub fn sensitivity(pred: &[bool], labels: &[bool]) -> Option<f64> {
    let pos = labels.iter().filter(|&&y| y).count();
    let tp = pred.iter().zip(labels).filter(|&(&p, &y)| p && y).count();
    (pos > 0).then(|| tp as f64 / pos as f64)
}

/// True-negative rate; absent without negatives.
pub fn specificity(pred: &[bool], labels: &[bool]) -> Option<f64> {
    let neg = labels.iter().filter(|&&y| !y).count();
    let tn = pred.iter().zip(labels).filter(|&(&p, &y)| !p && !y).count();
    (neg > 0).then(|| tn as f64 / neg as f64)
}

/// Probability that a random positive outscores a random negative, ties
/// counting one half. Absent unless both classes occur.
pub fn auc(scores: &[f64], labels: &[bool]) -> Option<f64> {
    let n_pos = labels.iter().filter(|&&y| y).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return None;
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    // Midranks (1-based) over tied groups.
    let mut rank_sum_pos = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        let mid = (i + j) as f64 / 2.0 + 1.0;
        rank_sum_pos += mid * order[i..=j].iter().filter(|&&k| labels[k]).count() as f64;
        i = j + 1;
    }
    let u = rank_sum_pos - (n_pos * (n_pos + 1)) as f64 / 2.0;
    Some(u / (n_pos * n_neg) as f64)
}

/// Mean of `1{pred != y} - 1{bayes != y}`.
pub fn excess_risk(pred: &[bool], bayes: &[bool], labels: &[bool]) -> f64 {
    let total: i64 = pred
        .iter()
        .zip(bayes)
        .zip(labels)
        .map(|((&p, &b), &y)| i64::from(p != y) - i64::from(b != y))
        .sum();
    total as f64 / labels.len() as f64
}

pub fn rmse(a: &[f64], b: &[f64]) -> f64 {
    let ss: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    (ss / a.len() as f64).sqrt()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplicateMetrics {
    pub d_mu: f64,
    /// Case 1 only.
    pub d_beta: Option<f64>,
    /// Logit-scale test RMSE, Case 1 only.
    pub rmse: Option<f64>,
    pub accuracy: f64,
    pub auc: Option<f64>,
    pub sensitivity: Option<f64>,
    pub specificity: Option<f64>,
    pub eer: f64,
    /// Accuracy of the Bayes classifier on the same test set.
    pub accuracy_bayes: f64,
    /// AUC of the true logit as a score.
    pub auc_bayes: Option<f64>,
    pub converged: bool,
    pub separated: bool,
}

/// One replicate: simulate, split, fit on the training part, score the test part.
pub fn eval_replicate(config: &SimConfig, rng: &mut StreamRng) -> Result<ReplicateMetrics> {
    let s = spd3();
    let sample = generate_dataset(config, rng)?;
    let mut idx: Vec<usize> = (0..config.n).collect();
    idx.shuffle(rng);
    let (train_idx, test_idx) = idx.split_at(config.n_train());
    let train = sample.data.subset(train_idx)?;
    let test = sample.data.subset(test_idx)?;
    let true_logit: Vec<f64> = test_idx.iter().map(|&i| sample.logits[i]).collect();

    let fitted = fit(&s, &train, &config.fit)?;
    let est_logit = test
        .points()
        .iter()
        .map(|x| log_odds(&s, &fitted, x))
        .collect::<Result<Vec<f64>>>()?;
    let pred: Vec<bool> = est_logit.iter().map(|&h| h >= 0.0).collect();
    let bayes: Vec<bool> = match config.case {
        Case::Model => test
            .points()
            .iter()
            .map(|x| bayes_classify(&s, &config.mu_star, &config.beta_star, x))
            .collect::<Result<_>>()?,
        _ => true_logit.iter().map(|&eta| eta >= 0.0).collect(),
    };
    let labels = test.labels();
    let model_case = config.case == Case::Model;

    Ok(ReplicateMetrics {
        d_mu: s.distance(&config.mu_star, &fitted.mu_hat)?,
        d_beta: if model_case {
            Some(s.distance(&config.beta_star, &fitted.beta_hat)?)
        } else {
            None
        },
        rmse: model_case.then(|| rmse(&est_logit, &true_logit)),
        accuracy: accuracy(&pred, labels),
        auc: auc(&est_logit, labels),
        sensitivity: sensitivity(&pred, labels),
        specificity: specificity(&pred, labels),
        eer: excess_risk(&pred, &bayes, labels),
        accuracy_bayes: accuracy(&bayes, labels),
        auc_bayes: auc(&true_logit, labels),
        converged: fitted.converged,
        separated: fitted.separated,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub metric: &'static str,
    pub mean: f64,
    /// Sample standard deviation across replicates.
    pub std: f64,
    /// Replicates in which the metric was defined.
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSummary {
    pub case: Case,
    pub n: usize,
    pub r: f64,
    pub replicates: usize,
    pub seed: u64,
    pub n_separated: usize,
    pub n_unconverged: usize,
    pub rows: Vec<SummaryRow>,
    pub per_replicate: Vec<ReplicateMetrics>,
}

impl ExperimentSummary {
    pub fn row(&self, metric: &str) -> Option<&SummaryRow> {
        self.rows.iter().find(|r| r.metric == metric)
    }

    pub fn mean(&self, metric: &str) -> Option<f64> {
        self.row(metric).map(|r| r.mean)
    }

    /// Tab-separated table with columns `metric mean std n r case`.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("metric\tmean\tstd\tn\tr\tcase\n");
        for row in &self.rows {
            let _ = writeln!(
                out,
                "{}\t{:.6}\t{:.6}\t{}\t{}\t{}",
                row.metric,
                row.mean,
                row.std,
                self.n,
                self.r,
                self.case.id()
            );
        }
        out
    }

    /// One `key=value` line per metric, same column order as the table.
    pub fn to_key_value(&self) -> String {
        let mut out = String::new();
        for row in &self.rows {
            let _ = writeln!(
                out,
                "metric={} mean={:.6} std={:.6} n={} r={} case={}",
                row.metric,
                row.mean,
                row.std,
                self.n,
                self.r,
                self.case.id()
            );
        }
        let _ = writeln!(
            out,
            "replicates={} seed={} separated={} unconverged={}",
            self.replicates, self.seed, self.n_separated, self.n_unconverged
        );
        out
    }
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = if values.len() > 1 {
        values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    (mean, var.sqrt())
}

/// Runs `config.replicates` independent replicates in parallel; replicate `k`
/// draws from stream `k` of `config.seed`.
pub fn run_experiment(config: &SimConfig) -> Result<ExperimentSummary> {
    config.validate()?;
    if config.replicates < 2 {
        return Err(GeoError::OutOfRange {
            name: "replicates",
            value: config.replicates as f64,
            bound: ">= 2".into(),
        });
    }
    let reps: Vec<ReplicateMetrics> = (0..config.replicates)
        .into_par_iter()
        .map(|k| eval_replicate(config, &mut substream(config.seed, k as u64)))
        .collect::<Result<_>>()?;

    type Getter = fn(&ReplicateMetrics) -> Option<f64>;
    let columns: [(&'static str, Getter); 10] = [
        ("d_mu", |m| Some(m.d_mu)),
        ("d_beta", |m| m.d_beta),
        ("rmse", |m| m.rmse),
        ("accuracy", |m| Some(m.accuracy)),
        ("auc", |m| m.auc),
        ("sensitivity", |m| m.sensitivity),
        ("specificity", |m| m.specificity),
        ("eer", |m| Some(m.eer)),
        ("accuracy_bayes", |m| Some(m.accuracy_bayes)),
        ("auc_bayes", |m| m.auc_bayes),
    ];
    let rows = columns
        .iter()
        .filter_map(|(name, get)| {
            let vals: Vec<f64> = reps.iter().filter_map(get).collect();
            (!vals.is_empty()).then(|| {
                let (mean, std) = mean_std(&vals);
                SummaryRow {
                    metric: name,
                    mean,
                    std,
                    count: vals.len(),
                }
            })
        })
        .collect();

    Ok(ExperimentSummary {
        case: config.case,
        n: config.n,
        r: config.r,
        replicates: config.replicates,
        seed: config.seed,
        n_separated: reps.iter().filter(|m| m.separated).count(),
        n_unconverged: reps.iter().filter(|m| !m.converged).count(),
        rows,
        per_replicate: reps,
    })
}
