//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on failure.
//!
//! Run with `cargo test --release -p geolog-validation --test acceptance`.

#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::process::ExitCode;
use std::time::Instant;

use common::*;
use geolog::inference::permutation_test;
use geolog::regression::{fit, FitOptions, LogisticProblem};
use geolog::rng::substream;
use geolog::simlab::{
    estimate_sigma2_x, generate_dataset, named_point, run_experiment, spd3, Case, ExperimentSummary, SimConfig,
};
use geolog::spaces::{EuclideanSpace, Wasserstein1DSpace};
use geolog::{Dataset, GeodesicSpace, Point};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

const SEED: u64 = 20_240_501;

struct Outcome {
    id: &'static str,
    title: &'static str,
    pass: bool,
    detail: String,
    secs: f64,
}

fn timed(id: &'static str, title: &'static str, f: impl FnOnce() -> (bool, String)) -> Outcome {
    let t = Instant::now();
    let (pass, detail) = f();
    Outcome {
        id,
        title,
        pass,
        detail,
        secs: t.elapsed().as_secs_f64(),
    }
}

fn normal_vec(rng: &mut impl Rng, d: usize) -> Vec<f64> {
    (0..d).map(|_| StandardNormal.sample(rng)).collect()
}

fn criterion_1() -> (bool, String) {
    let mut worst = 0.0f64;
    let mut failures = Vec::new();
    for k in 0..50u64 {
        let d = [2, 5][(k % 2) as usize];
        let n = [50, 200][((k / 2) % 2) as usize];
        let mut rng = substream(SEED + 1, k);
        let s = EuclideanSpace::new(d).unwrap();
        let shift = normal_vec(&mut rng, d);
        let beta: Vec<f64> = normal_vec(&mut rng, d).iter().map(|b| 0.7 * b).collect();
        let xs: Vec<Vec<f64>> = (0..n)
            .map(|_| normal_vec(&mut rng, d).iter().zip(&shift).map(|(a, b)| a + b).collect())
            .collect();
        let labels: Vec<bool> = xs
            .iter()
            .map(|x| {
                let eta: f64 = x.iter().zip(&shift).zip(&beta).map(|((a, m), b)| (a - m) * b).sum();
                rng.random::<f64>() < 1.0 / (1.0 + (-eta).exp())
            })
            .collect();
        let pts = xs.iter().map(|x| s.point(x.clone()).unwrap()).collect();
        let data = Dataset::new(s.id().clone(), pts, labels.clone()).unwrap();
        let fitted = fit(&s, &data, &FitOptions::default()).unwrap();
        let mean: Vec<f64> = (0..d).map(|j| xs.iter().map(|x| x[j]).sum::<f64>() / n as f64).collect();
        let centered: Vec<Vec<f64>> = xs.iter().map(|x| x.iter().zip(&mean).map(|(a, m)| a - m).collect()).collect();
        let oracle = irls(&centered, &labels);
        let diff = fitted
            .b_hat
            .coeffs
            .iter()
            .zip(&oracle)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        worst = worst.max(diff);
        if !fitted.converged || !(diff <= 1e-6) {
            failures.push(format!("dataset {k} (D={d}, n={n}): diff {diff:.2e}, converged {}", fitted.converged));
        }
    }
    (
        failures.is_empty(),
        format!("50 datasets, max |b_hat - b_irls| = {worst:.2e} (tol 1e-6){}", fmt_failures(&failures)),
    )
}

fn fmt_failures(f: &[String]) -> String {
    if f.is_empty() {
        String::new()
    } else {
        format!("; failures: {}", f.join("; "))
    }
}

fn criterion_2() -> (bool, String) {
    let s = spd3();
    let e6 = EuclideanSpace::new(6).unwrap();
    let mut worst = 0.0f64;
    for k in 0..10u64 {
        let cfg = SimConfig::standard(Case::Model, 300, 1.0 + (k % 3) as f64, 2, SEED + 2);
        let smp = generate_dataset(&cfg, &mut substream(SEED + 2, k)).unwrap();
        let manifold = fit(&s, &smp.data, &FitOptions::default()).unwrap();
        let chart_pts: Vec<Point> = smp.data.points().iter().map(|p| e6.point(s.chart(p).unwrap()).unwrap()).collect();
        let flat_data = Dataset::new(e6.id().clone(), chart_pts, smp.data.labels().to_vec()).unwrap();
        let flat = fit(&e6, &flat_data, &FitOptions::default()).unwrap();
        let gap = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        worst = worst
            .max(gap(&manifold.b_hat.coeffs, &flat.b_hat.coeffs))
            .max(gap(&s.chart(&manifold.mu_hat).unwrap(), flat.mu_hat.coords()))
            .max(gap(&s.chart(&manifold.beta_hat).unwrap(), flat.beta_hat.coords()));
    }
    (
        worst <= 1e-8,
        format!("10 SPD(3) datasets, max chart gap in (mu_hat, beta_hat, b_hat) = {worst:.2e} (tol 1e-8)"),
    )
}

struct TrendGrid {
    runs: Vec<((usize, f64), ExperimentSummary)>,
}

impl TrendGrid {
    fn get(&self, n: usize, r: f64) -> &ExperimentSummary {
        &self.runs.iter().find(|((a, b), _)| *a == n && *b == r).unwrap().1
    }

    fn mean(&self, n: usize, r: f64, m: &str) -> f64 {
        self.get(n, r).mean(m).unwrap()
    }
}

fn trend_grid() -> TrendGrid {
    let runs = [(100, 1.0), (500, 1.0), (100, 4.0), (500, 4.0)]
        .iter()
        .map(|&(n, r)| {
            let cfg = SimConfig::standard(Case::Model, n, r, 500, SEED + 3);
            ((n, r), run_experiment(&cfg).unwrap())
        })
        .collect();
    TrendGrid { runs }
}

fn criterion_3(t: &TrendGrid) -> (bool, String) {
    let mut checks = Vec::new();
    let mut ok = true;
    let mut note = |name: String, pass: bool| {
        ok &= pass;
        checks.push(format!("{name}:{}", if pass { "ok" } else { "FAIL" }));
    };
    for r in [1.0, 4.0] {
        note(format!("d_mu n100>n500 @r={r}"), t.mean(100, r, "d_mu") > t.mean(500, r, "d_mu"));
        note(format!("d_beta n100>n500 @r={r}"), t.mean(100, r, "d_beta") > t.mean(500, r, "d_beta"));
        let ratio = t.mean(100, r, "rmse") / t.mean(500, r, "rmse");
        note(format!("rmse ratio {ratio:.2}>=3 @r={r}"), ratio >= 3.0);
    }
    for n in [100, 500] {
        note(format!("d_beta r1>r4 @n={n}"), t.mean(n, 1.0, "d_beta") > t.mean(n, 4.0, "d_beta"));
        note(format!("d_mu r1<r4 @n={n}"), t.mean(n, 1.0, "d_mu") < t.mean(n, 4.0, "d_mu"));
    }
    let mut table = String::new();
    for ((n, r), s) in &t.runs {
        table += &format!(
            " [r={r} n={n}: d_mu {:.3}({:.3}) d_beta {:.3}({:.3}) rmse {:.3}({:.3}) sep {}]",
            s.mean("d_mu").unwrap(),
            s.row("d_mu").unwrap().std,
            s.mean("d_beta").unwrap(),
            s.row("d_beta").unwrap().std,
            s.mean("rmse").unwrap(),
            s.row("rmse").unwrap().std,
            s.n_separated
        );
    }
    (ok, format!("{}{table}", checks.join(", ")))
}

fn criterion_5() -> (bool, String, f64) {
    let ns = [100usize, 200, 400, 800];
    let means: Vec<f64> = ns
        .iter()
        .map(|&n| {
            let cfg = SimConfig::standard(Case::Model, n, 1.0, 200, SEED + 5);
            run_experiment(&cfg).unwrap().mean("d_beta").unwrap()
        })
        .collect();
    let lx: Vec<f64> = ns.iter().map(|&n| (n as f64).ln()).collect();
    let ly: Vec<f64> = means.iter().map(|m| m.ln()).collect();
    let slope = ols_slope(&lx, &ly);
    let pass = (slope + 0.5).abs() <= 0.15;
    let pairs: Vec<String> = ns.iter().zip(&means).map(|(n, m)| format!("n={n}: {m:.4}")).collect();
    (
        pass,
        format!("slope of log mean d(beta*, beta_hat) on log n = {slope:.3} (target -0.5 +- 0.15); {}", pairs.join(", ")),
        slope,
    )
}

fn criterion_7() -> (bool, String) {
    let mut failures: Vec<String> = Vec::new();
    let mut record = |label: String, r: Check| {
        if let Err(e) = r {
            if failures.len() < 20 {
                failures.push(format!("{label}: {e}"));
            } else if failures.len() == 20 {
                failures.push("...".into());
            }
        }
    };
    let mut counts = Vec::new();
    for kd in ALL_KINDS {
        let s = kd.space();
        let s = s.as_ref();
        let dim = s.capabilities().dim;
        let mut rng = substream(SEED + 7, kd as u64);
        let raw = |rng: &mut rand_chacha::ChaCha8Rng, len: usize| -> Vec<f64> {
            (0..len).map(|_| rng.random_range(-1.0..1.0)).collect()
        };
        let mut ladder_cases = 0;
        for i in 0..10_000 {
            let p = kd.point(s, &raw(&mut rng, kd.raw_len()));
            let q = kd.point(s, &raw(&mut rng, kd.raw_len()));
            let r = kd.point(s, &raw(&mut rng, kd.raw_len()));
            record(format!("{} distance #{i}", kd.name()), distance_axioms(s, &p, &q, &r));
            record(format!("{} geodesic #{i}", kd.name()), geodesic_parameterization(s, &p, &q));
            record(format!("{} inner product #{i}", kd.name()), inner_product_symmetry_and_bound(s, &p, &q, &r));
            record(format!("{} exp/log #{i}", kd.name()), exp_log_round_trip(s, &p, &q));
            record(format!("{} chart geodesic #{i}", kd.name()), geodesic_matches_chart(s, &p, &q));
            // Radius-1 ball around p for the ladder comparison.
            let r1 = rng.random_range(0.05..1.0);
            let r2 = rng.random_range(0.05..1.0);
            let x = s.exp_map(&tangent(&p, &raw(&mut rng, dim), r1));
            let b = s.exp_map(&tangent(&p, &raw(&mut rng, dim), r2));
            if let (Ok(x), Ok(b)) = (x, b) {
                ladder_cases += 1;
                record(format!("{} ladder #{i}", kd.name()), chart_matches_ladder(s, &p, &x, &b));
            }
        }
        for i in 0..1_000 {
            let k = rng.random_range(2..15);
            let pts: Vec<Point> = (0..k).map(|_| kd.point(s, &raw(&mut rng, kd.raw_len()))).collect();
            record(format!("{} frechet #{i}", kd.name()), frechet_properties(s, &pts));
        }
        counts.push(format!("{}: 10000 triples, {ladder_cases} ladder triples, 1000 mean samples", kd.name()));
    }

    let mut rng = substream(SEED + 7, 100);
    for i in 0..10_000 {
        let mu: Vec<f64> = (0..4).map(|_| rng.random_range(-2.0..2.0)).collect();
        let x: Vec<f64> = (0..4).map(|_| rng.random_range(-2.0..2.0)).collect();
        let b: Vec<f64> = (0..4).map(|_| rng.random_range(-2.0..2.0)).collect();
        record(format!("euclidean reduction #{i}"), euclidean_reduction(&mu, &x, &b));
        let c: Vec<f64> = (0..6).map(|_| rng.random_range(-1.5..1.5)).collect();
        record(format!("cholesky #{i}"), cholesky_round_trip(&c));
        let w = Wasserstein1DSpace::new(WASS_GRID).unwrap();
        let raw = |rng: &mut rand_chacha::ChaCha8Rng| -> Vec<f64> { (0..WASS_GRID).map(|_| rng.random_range(-1.0..1.0)).collect() };
        let p = Kind::Wasserstein.point(&w, &raw(&mut rng));
        let q = Kind::Wasserstein.point(&w, &raw(&mut rng));
        let v = raw(&mut rng);
        record(format!("wasserstein monotone #{i}"), wasserstein_monotone(&p, &q, &v, rng.random_range(0.0..3.0)));
    }

    // Likelihood properties on random tangent designs.
    for i in 0..100 {
        let d = rng.random_range(1..7);
        let n = rng.random_range(5..200);
        let rows: Vec<Vec<f64>> = (0..n).map(|_| normal_vec(&mut rng, d)).collect();
        let beta = normal_vec(&mut rng, d);
        let labels: Vec<bool> = rows
            .iter()
            .map(|z| {
                let eta: f64 = z.iter().zip(&beta).map(|(a, b)| a * b).sum();
                rng.random::<f64>() < 1.0 / (1.0 + (-eta).exp())
            })
            .collect();
        let problem = LogisticProblem::new(design(&rows)).unwrap();
        let b = normal_vec(&mut rng, d);
        record(format!("gradient fd #{i}"), gradient_matches_fd(&problem, &labels, &b));
        record(format!("newton ascent #{i}"), newton_ascent_and_concavity(&problem, &labels));
    }

    // Ray invariance of the plug-in classifier on SPD(3).
    let s = spd3();
    for i in 0..100u64 {
        let cfg = SimConfig::standard(Case::Model, 150, 1.0, 2, SEED);
        let smp = generate_dataset(&cfg, &mut substream(SEED + 70, i)).unwrap();
        let fitted = fit(&s, &smp.data, &FitOptions::default()).unwrap();
        let t = rng.random_range(0.05..0.95);
        let betas = [
            s.geodesic_point(&geolog::GeodesicQuery::new(fitted.mu_hat.clone(), fitted.beta_hat.clone(), t).unwrap())
                .unwrap(),
            s.exp_map(&fitted.b_hat.scaled(1.0 + 4.0 * t)).unwrap(),
        ];
        let mut bad = 0;
        for x in smp.data.points() {
            let base = geolog::classify(&s, &fitted, x).unwrap();
            for beta in &betas {
                let mut moved = fitted.clone();
                moved.beta_hat = beta.clone();
                bad += usize::from(geolog::classify(&s, &moved, x).unwrap() != base);
            }
        }
        record(format!("ray invariance #{i}"), if bad == 0 { Ok(()) } else { Err(format!("{bad} flips")) });
    }

    // Finite-sample analogue of the population maximizer property.
    let prop1 = |n: usize, seed: u64| -> usize {
        let mut rng = substream(seed, 0);
        let mu = named_point("I3").unwrap();
        let beta = named_point("3SigmaAR").unwrap();
        let cfg = SimConfig::standard(Case::Model, n, 1.0, 2, seed);
        let smp = generate_dataset(&cfg, &mut rng).unwrap();
        let at_truth = geolog::regression::empirical_loglik(&s, &smp.data, &mu, &beta).unwrap();
        let b_star = s.log_map(&mu, &beta).unwrap();
        let mut violations = 0;
        for delta in [0.1, 0.2, 0.4] {
            for j in 0..6 {
                for sign in [-1.0, 1.0] {
                    let mut c = b_star.coeffs.clone();
                    c[j] += sign * delta;
                    let cand = s.exp_map(&geolog::TangentVector::new(mu.clone(), c)).unwrap();
                    let l = geolog::regression::empirical_loglik(&s, &smp.data, &mu, &cand).unwrap();
                    violations += usize::from(l > at_truth);
                }
            }
        }
        violations
    };
    let v_small = prop1(100, SEED + 71);
    let v_large = prop1(100_000, SEED + 72);
    record(
        "population maximizer".into(),
        if v_large == 0 && v_small >= v_large {
            Ok(())
        } else {
            Err(format!("violations n=100: {v_small}, n=1e5: {v_large}"))
        },
    );

    (
        failures.is_empty(),
        format!(
            "{}; 10000 euclidean/cholesky/wasserstein cases; 100 gradient and Newton configs; 100 ray-invariance fits; \
             grid violations of the truth maximizer n=100: {v_small}, n=1e5: {v_large}{}",
            counts.join("; "),
            fmt_failures(&failures)
        ),
    )
}

fn euclid_sample(rng: &mut impl Rng, n: usize) -> Vec<Vec<f64>> {
    (0..n).map(|_| normal_vec(rng, 2)).collect()
}

fn criterion_8() -> (bool, String) {
    let s = EuclideanSpace::new(2).unwrap();
    let meta = 500u64;
    let null_p: Vec<f64> = (0..meta)
        .into_par_iter()
        .map(|m| {
            let mut rng = substream(SEED + 8, m);
            let xs = euclid_sample(&mut rng, 200);
            let labels: Vec<bool> = (0..200).map(|_| rng.random_bool(0.5)).collect();
            let pts = xs.into_iter().map(|x| s.point(x).unwrap()).collect();
            let data = Dataset::new(s.id().clone(), pts, labels).unwrap();
            permutation_test(&s, &data, 199, SEED + 1000 + m).unwrap().p_value
        })
        .collect();
    let alpha = 0.05;
    let rate = null_p.iter().filter(|&&p| p <= alpha).count() as f64 / meta as f64;
    let se = (alpha * (1.0 - alpha) / meta as f64).sqrt();
    let null_ok = rate <= alpha + 3.0 * se;

    let signal_hits = (0..meta)
        .into_par_iter()
        .filter(|&m| {
            let mut rng = substream(SEED + 9, m);
            let xs = euclid_sample(&mut rng, 200);
            let mean = [
                xs.iter().map(|x| x[0]).sum::<f64>() / 200.0,
                xs.iter().map(|x| x[1]).sum::<f64>() / 200.0,
            ];
            let v = [1.0, -0.6];
            let labels: Vec<bool> = xs.iter().map(|x| (x[0] - mean[0]) * v[0] + (x[1] - mean[1]) * v[1] > 0.0).collect();
            let pts = xs.into_iter().map(|x| s.point(x).unwrap()).collect();
            let data = Dataset::new(s.id().clone(), pts, labels).unwrap();
            permutation_test(&s, &data, 199, SEED + 2000 + m).unwrap().p_value == 1.0 / 200.0
        })
        .count();
    let signal_rate = signal_hits as f64 / meta as f64;
    let signal_ok = signal_rate >= 0.99;
    (
        null_ok && signal_ok,
        format!(
            "null P(p <= 0.05) = {rate:.3} (bound {:.4}); signal P(p = 1/200) = {signal_rate:.3} (need >= 0.99)",
            alpha + 3.0 * se
        ),
    )
}

fn main() -> ExitCode {
    let mut out = Vec::new();
    out.push(timed("1", "Euclidean oracle equivalence", criterion_1));
    out.push(timed("2", "Flat-chart equivalence on SPD(3)", criterion_2));

    let t0 = Instant::now();
    let grid = trend_grid();
    let table_secs = t0.elapsed().as_secs_f64();
    let mut c3 = timed("3", "Simulation trends over n and r", || criterion_3(&grid));
    c3.secs += table_secs;
    let c3_pass = c3.pass;

    let mut slope = f64::NAN;
    let c5 = timed("5", "Rate check", || {
        let (p, d, s) = criterion_5();
        slope = s;
        (p, d)
    });
    let c5_pass = c5.pass;

    let c4 = timed("4", "Simulation absolute targets", || {
        let mu = named_point("I3").unwrap();
        let s1 = estimate_sigma2_x(&mu, 1.0, 100_000, SEED + 4).unwrap();
        let s4 = estimate_sigma2_x(&mu, 4.0, 100_000, SEED + 4).unwrap();
        if (2.0..=2.5).contains(&s1) {
            let d = grid.mean(500, 1.0, "d_beta");
            let rmse = grid.mean(500, 1.0, "rmse");
            let ok = (d - 0.438).abs() <= 0.25 * 0.438 && (rmse - 0.027).abs() <= 0.5 * 0.027;
            (ok, format!("sigma2_X = {s1:.3} (r=1), {s4:.3} (r=4); d_beta@500 = {d:.3}, rmse@500 = {rmse:.4}"))
        } else {
            (
                c3_pass && c5_pass,
                format!(
                    "sigma2_X = {s1:.3} (r=1), {s4:.3} (r=4) lies outside [2.0, 2.5] (reference 2.248/4.496); \
                     absolute targets not applicable, criterion REPLACED by criterion 3 ({}) plus criterion 5 ({}, slope {slope:.3})",
                    if c3_pass { "pass" } else { "fail" },
                    if c5_pass { "pass" } else { "fail" }
                ),
            )
        }
    });

    let c6 = timed("6", "Classification trend", || {
        let e100 = grid.mean(100, 1.0, "eer");
        let e500 = grid.mean(500, 1.0, "eer");
        let acc = grid.mean(500, 1.0, "accuracy");
        let s1 = estimate_sigma2_x(&named_point("I3").unwrap(), 1.0, 100_000, SEED + 4).unwrap();
        let band = (2.0..=2.5).contains(&s1);
        let mut ok = e500 < e100 && e500 <= 0.05;
        let acc_note = if band {
            ok &= (acc - 0.651).abs() <= 0.05;
            format!("accuracy@500 = {acc:.3} (target 0.651 +- 0.05)")
        } else {
            format!("accuracy@500 = {acc:.3}; accuracy target not applicable (sigma2_X = {s1:.3} outside calibration band)")
        };
        (
            ok,
            format!(
                "EER@100 = {e100:.4} ({:.4}), EER@500 = {e500:.4} ({:.4}) (need decrease and <= 0.05); {acc_note}; \
                 AUC@500 = {:.3}, Bayes accuracy@500 = {:.3}",
                grid.get(100, 1.0).row("eer").unwrap().std,
                grid.get(500, 1.0).row("eer").unwrap().std,
                grid.mean(500, 1.0, "auc"),
                grid.mean(500, 1.0, "accuracy_bayes"),
            ),
        )
    });

    out.push(c3);
    out.push(c4);
    out.push(c5);
    out.push(c6);
    out.push(timed("7", "Invariant suites", criterion_7));
    out.push(timed("8", "Permutation-test calibration", criterion_8));
    out.sort_by_key(|o| o.id);

    let mut all = true;
    println!("acceptance suite");
    for o in &out {
        all &= o.pass;
        println!(
            "criterion {} [{}] {} ({:.1}s): {}",
            o.id,
            if o.pass { "PASS" } else { "FAIL" },
            o.title,
            o.secs,
            o.detail
        );
    }
    let failed = out.iter().filter(|o| !o.pass).count();
    println!("{} of {} criteria passed", out.len() - failed, out.len());
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

