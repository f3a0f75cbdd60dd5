//! Acceptance suite. Each criterion prints one `criterion N: PASS|FAIL`
//! line with the measured quantities and its runtime; the binary exits
//! with a failure status if any criterion fails.

use std::time::{Duration, Instant};

use grmkit::covariance::{sample_covariance, CovarianceEstimate, Divisor};
use grmkit::evaluation::{bic, count_parameters_for, r2_mean, rmse, rolling_backtest, Predictor};
use grmkit::factor::{fit_pca, implied_factors, predict_factor, Normalization};
use grmkit::graph::{
    ratio_matrix, render_graph, threshold_pca_graph, walktrap, Edge, GraphFormat, GraphSource, Grouping,
    PartialCorrelationGraph, DEFAULT_WALK_LENGTH,
};
use grmkit::grm::{build_grm, conditional_grm, decompose_variance, partial_pair, predict};
use grmkit::interaction::{fit_mixed, predict_mixed, InteractionWeights, DEFAULT_BOUNDS, DEFAULT_GRID_SIZE};
use grmkit::panel::{center, split_at, write_returns, FactorPanel, ReturnsPanel};
use grmkit::precision::{
    concord, cross_validate, default_grid, fit, glasso, PrecisionEstimate, Solver, SolverOptions,
};
use grmkit::synth::{brute_force_a, capm_residual_check, generate, market_beta, Structure, SyntheticSpec};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn run(number: usize, budget: Duration, f: fn() -> Outcome) -> bool {
    let start = Instant::now();
    let outcome = std::panic::catch_unwind(f).unwrap_or_else(|_| Outcome {
        pass: false,
        detail: "panicked".into(),
    });
    let elapsed = start.elapsed();
    let in_time = elapsed <= budget;
    let pass = outcome.pass && in_time;
    println!(
        "criterion {number}: {} {} [{:.2}s of {}s{}]",
        if pass { "PASS" } else { "FAIL" },
        outcome.detail,
        elapsed.as_secs_f64(),
        budget.as_secs(),
        if in_time { "" } else { ", over budget" }
    );
    pass
}

fn ids(p: usize) -> Vec<String> {
    (1..=p).map(|i| format!("A{i}")).collect()
}

fn random_spd(rng: &mut ChaCha20Rng, p: usize) -> DMatrix<f64> {
    let m = DMatrix::from_fn(p, p, |_, _| rng.random_range(-1.0..1.0));
    &m * m.transpose() + DMatrix::identity(p, p) * 0.1
}

fn cov(sigma: DMatrix<f64>) -> CovarianceEstimate {
    CovarianceEstimate::population(ids(sigma.nrows()), sigma).unwrap()
}

fn exact(sigma: &DMatrix<f64>) -> PrecisionEstimate {
    PrecisionEstimate::exact_inverse(&cov(sigma.clone())).unwrap()
}

fn glasso_cv(panel: &ReturnsPanel, folds: usize) -> PrecisionEstimate {
    let opts = SolverOptions::default();
    let s = sample_covariance(&center(panel), Divisor::N).unwrap();
    let grid = default_grid(&s, &Solver::Glasso);
    let cv = cross_validate(panel, &Solver::Glasso, &grid, folds, &opts).unwrap();
    fit(&s, &Solver::Glasso, cv.best_lambda, &opts).unwrap()
}

fn criterion_1() -> Outcome {
    let mut worst: f64 = 0.0;
    for rho in [-0.9, -0.5, 0.0, 0.5, 0.9] {
        let sigma = DMatrix::from_row_slice(2, 2, &[1.0, rho, rho, 1.0]);
        let grm = build_grm(&exact(&sigma)).unwrap();
        let dec = decompose_variance(&grm, &cov(sigma)).unwrap();
        let a = grm.a();
        for err in [
            a[(0, 1)] - rho,
            a[(1, 0)] - rho,
            dec.endogenous[0] - rho * rho,
            dec.endogenous[1] - rho * rho,
            dec.residual[0] - (1.0 - rho * rho),
            dec.residual[1] - (1.0 - rho * rho),
        ] {
            worst = worst.max(err.abs());
        }
    }
    Outcome {
        pass: worst <= 1e-12,
        detail: format!("max error {worst:.2e} (tol 1e-12)"),
    }
}

fn residual_trace(m: &DMatrix<f64>, sigma: &DMatrix<f64>) -> f64 {
    let p = sigma.nrows();
    let r = DMatrix::identity(p, p) - m;
    (&r * sigma * r.transpose()).trace()
}

fn criterion_2() -> Outcome {
    let mut rng = ChaCha20Rng::seed_from_u64(2);
    let mut worst: f64 = 0.0;
    let mut beaten = 0usize;
    for case in 0..50 {
        let p = 2 + case % 7;
        let sigma = random_spd(&mut rng, p);
        let oracle = brute_force_a(&sigma).unwrap();
        let grm = build_grm(&exact(&sigma)).unwrap();
        worst = worst.max((&oracle - grm.a()).amax());
        let best = residual_trace(grm.a(), &sigma);
        for c in 0..200 {
            // Half the competitors are small perturbations of A, half arbitrary.
            let scale = if c % 2 == 0 { 1e-3 } else { 1.0 };
            let mut m = DMatrix::from_fn(p, p, |_, _| rng.random_range(-1.0..1.0) * scale);
            if c % 2 == 0 {
                m += grm.a();
            }
            m.fill_diagonal(0.0);
            if residual_trace(&m, &sigma) < best {
                beaten += 1;
            }
        }
    }
    Outcome {
        pass: worst <= 1e-10 && beaten == 0,
        detail: format!("max |A_brute − A| {worst:.2e} (tol 1e-10), competitors beating A: {beaten}/10000"),
    }
}

fn criterion_3() -> Outcome {
    let mut rng = ChaCha20Rng::seed_from_u64(3);
    let (mut gap, mut spread, mut block): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for case in 0..50 {
        let p = 3 + case % 8;
        let sigma = random_spd(&mut rng, p);
        let est = exact(&sigma);
        let grm = build_grm(&est).unwrap();
        let c = cov(sigma);
        gap = gap.max(decompose_variance(&grm, &c).unwrap().identity_gap());
        let nus: Vec<f64> = (1..p).map(|j| partial_pair(&c, 0, j).unwrap().nu).collect();
        let lo = nus.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = nus.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        spread = spread.max(hi - lo);
        let subset: Vec<usize> = (0..p).filter(|i| i % 2 == 0).collect();
        let cond = conditional_grm(&est, &subset).unwrap();
        for (r, &i) in subset.iter().enumerate() {
            for (s, &j) in subset.iter().enumerate() {
                block = block.max((cond.a()[(r, s)] - grm.a()[(i, j)]).abs());
            }
        }
    }
    Outcome {
        pass: gap <= 1e-10 && spread <= 1e-10 && block <= 1e-12,
        detail: format!("variance gap {gap:.2e}, ν partner spread {spread:.2e}, conditional block {block:.2e}"),
    }
}

fn sample_cov(rng: &mut ChaCha20Rng, p: usize, n: usize) -> CovarianceEstimate {
    let y = DMatrix::from_fn(p, n, |_, _| rng.random_range(-1.0..1.0));
    let panel = ReturnsPanel::from_matrix(y).unwrap();
    sample_covariance(&center(&panel), Divisor::N).unwrap()
}

fn criterion_4() -> Outcome {
    let mut rng = ChaCha20Rng::seed_from_u64(4);
    let tol = 1e-6;
    let (mut inv_err, mut diag_err, mut kkt_max): (f64, f64, f64) = (0.0, 0.0, 0.0);
    let mut monotone = true;
    let mut converged = true;
    for case in 0..20 {
        let p = 3 + case % 18;
        let s = sample_cov(&mut rng, p, 3 * p + 10);
        let g0 = glasso(&s, 0.0, 1e-10, 2000).unwrap();
        inv_err = inv_err.max((&g0.omega - s.s.clone().try_inverse().unwrap()).amax());

        let max_off = (0..p)
            .flat_map(|i| (0..p).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| s.s[(i, j)].abs())
            .fold(0.0, f64::max);
        let lambda = max_off * 1.01;
        let gd = glasso(&s, lambda, tol, 500).unwrap();
        for i in 0..p {
            for j in 0..p {
                let expect = if i == j { 1.0 / (s.s[(i, i)] + lambda) } else { 0.0 };
                diag_err = diag_err.max((gd.omega[(i, j)] - expect).abs());
            }
        }
        let gl = glasso(&s, 0.3 * max_off, tol, 500).unwrap();
        let cc = concord(&s, 0.3 * max_off, 0.0, tol, 2000).unwrap();
        if cc.objective_trace.windows(2).any(|w| w[1] > w[0] + 1e-12 * w[0].abs()) {
            monotone = false;
        }
        for est in [&g0, &gd, &gl, &cc] {
            converged &= est.converged;
            kkt_max = kkt_max.max(est.residual);
        }
    }
    Outcome {
        pass: inv_err <= 1e-6 && diag_err <= 1e-8 && monotone && converged && kkt_max <= tol,
        detail: format!(
            "λ=0 inverse error {inv_err:.2e}, diagonal closed form {diag_err:.2e}, CONCORD trace monotone {monotone}, all converged {converged}, max KKT {kkt_max:.2e}"
        ),
    }
}

fn criterion_5() -> Outcome {
    let p = 30;
    let market = generate(&SyntheticSpec {
        p,
        n: 400,
        structure: Structure::Chain { off: -0.4, diag: None },
        seed: 5,
    })
    .unwrap();
    let est = glasso_cv(&market.panel, 5);
    let truth = market.truth.omega.unwrap();
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut true_edges = 0usize;
    for i in 0..p {
        for j in (i + 1)..p {
            let real = truth[(i, j)] != 0.0;
            let found = est.omega[(i, j)] != 0.0;
            true_edges += real as usize;
            match (real, found) {
                (true, true) => tp += 1,
                (false, true) => fp += 1,
                _ => {}
            }
        }
    }
    let non_edges = p * (p - 1) / 2 - true_edges;
    let recall = tp as f64 / true_edges as f64;
    let fpr = fp as f64 / non_edges as f64;
    let fdr = if tp + fp > 0 { fp as f64 / (tp + fp) as f64 } else { 0.0 };
    Outcome {
        pass: recall >= 0.90 && fpr <= 0.15,
        detail: format!(
            "recall {recall:.3} (≥ 0.90), false-positive rate {fpr:.3} (≤ 0.15), false-discovery share {fdr:.3}, λ {:.4}",
            est.lambda
        ),
    }
}

fn criterion_6() -> Outcome {
    let mut rng = ChaCha20Rng::seed_from_u64(6);
    let (mut unit, mut min_off, mut w_z): (f64, f64, f64) = (0.0, f64::INFINITY, 0.0);
    for case in 0..20 {
        let p = 2 + case % 9;
        let sigma = random_spd(&mut rng, p);
        let w = DVector::from_fn(p, |_, _| rng.random_range(0.05..1.0));
        let beta = market_beta(&w, &sigma).unwrap();
        let check = capm_residual_check(&beta, &w, &sigma).unwrap();
        unit = unit.max((check.w_beta - 1.0).abs());
        min_off = min_off.min(check.max_offdiag);
        w_z = w_z.max(check.w_var_z);
    }
    Outcome {
        pass: unit <= 1e-12 && min_off > 1e-10 && w_z <= 1e-10,
        detail: format!("max |wᵀβ − 1| {unit:.2e}, smallest max off-diagonal {min_off:.2e}, max |wᵀVar(Z)| {w_z:.2e}"),
    }
}

fn angle(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    (a.dot(b) / (a.norm() * b.norm())).clamp(-1.0, 1.0).acos().to_degrees()
}

fn criterion_7() -> Outcome {
    let p = 100;
    let beta: Vec<f64> = (0..p).map(|i| 0.5 + (i as f64 + 0.5) / p as f64).collect();
    let market = generate(&SyntheticSpec {
        p,
        n: 250,
        structure: Structure::OneFactor {
            beta: beta.clone(),
            idio_var: 1.0,
            factor_var: 1.0,
        },
        seed: 7,
    })
    .unwrap();
    let est = glasso_cv(&market.panel, 5);
    let implied = implied_factors(&est, 1, Normalization::MeanOne).unwrap();
    let b_imp = implied.b_imp.column(0).into_owned();
    let deg = angle(&b_imp, &DVector::from_vec(beta));
    let positive = b_imp.iter().filter(|v| **v > 0.0).count() as f64 / p as f64;
    Outcome {
        pass: deg <= 10.0 && positive >= 0.95,
        detail: format!("angle {deg:.3}° (≤ 10), positive share {positive:.3} (≥ 0.95)"),
    }
}

/// Factor scores `B̂ᵀY` of a PCA model, as a factor panel aligned with Y.
fn pca_scores(b: &DMatrix<f64>, panel: &ReturnsPanel) -> FactorPanel {
    let names = (1..=b.ncols()).map(|j| format!("PC{j}")).collect();
    FactorPanel::aligned_with(panel, names, b.transpose() * panel.values()).unwrap()
}

fn criterion_8() -> Outcome {
    let market = generate(&SyntheticSpec {
        p: 60,
        n: 122,
        structure: Structure::Banded {
            width: 2,
            off: -1.0,
            diag: None,
        },
        seed: 8,
    })
    .unwrap();
    let (yi, yo) = split_at(&market.panel, 61).unwrap();
    let (yi, yo) = (center(&yi), center(&yo));

    let est = glasso_cv(&yi, 5);
    let grm = build_grm(&est).unwrap();
    let (grm_rmse, _) = rmse(&predict(&grm, &yo).unwrap(), &yo).unwrap();

    let pca = fit_pca(&yi, 3).unwrap();
    let (pca_rmse, _) = rmse(&predict_factor(&pca, &yo, None).unwrap(), &yo).unwrap();

    let weights = InteractionWeights::from_grm(&grm);
    let mixed = fit_mixed(&yi, &pca_scores(&pca.b, &yi), &weights, DEFAULT_BOUNDS, DEFAULT_GRID_SIZE).unwrap();
    let (mixed_rmse, _) = rmse(&predict_mixed(&mixed, &yo, &pca_scores(&pca.b, &yo)).unwrap(), &yo).unwrap();

    Outcome {
        pass: grm_rmse <= pca_rmse * 1.02 && mixed_rmse >= grm_rmse - 1e-6,
        detail: format!(
            "RMSE GRM {grm_rmse:.5}, PCA-3 {pca_rmse:.5} (GRM ≤ PCA·1.02), mixed {mixed_rmse:.5} with ρ {:.3} (≥ GRM − 1e-6)",
            mixed.rho
        ),
    }
}

fn criterion_9() -> Outcome {
    let panel = |p: usize, v: &[f64]| ReturnsPanel::from_matrix(DMatrix::from_row_slice(p, v.len() / p, v)).unwrap();
    let ones = panel(2, &[1.0, 1.0, 1.0, 1.0]);
    let zeros = panel(2, &[0.0; 4]);
    let mut errors: Vec<String> = Vec::new();
    let mut check = |name: &str, got: f64, want: f64| {
        if (got - want).abs() > 1e-10 {
            errors.push(format!("{name}: {got} ≠ {want}"));
        }
    };
    let (r0, pct0) = rmse(&ones, &ones).unwrap();
    check("rmse(Y, Y)", r0, 0.0);
    check("rmse_pct(Y, Y)", pct0, 0.0);
    let (r1, pct1) = rmse(&zeros, &ones).unwrap();
    check("rmse(0, 1)", r1, 1.0);
    check("rmse_pct(0, 1)", pct1, 100.0);
    let actual = panel(1, &[1.0, 3.0]);
    let pred = panel(1, &[0.0, 2.0]);
    check("bic p=1", bic(&pred, &actual, 0).unwrap(), 0.0);
    check("bic κ+1", bic(&pred, &actual, 1).unwrap() - bic(&pred, &actual, 0).unwrap(), 2f64.ln());
    let actual = panel(1, &[0.0, 2.0]);
    check("r2 hand case", r2_mean(&panel(1, &[1.0, 1.0]), &actual).unwrap(), 0.0);
    check("r2 perfect", r2_mean(&actual, &actual).unwrap(), 1.0);
    for (kind, p, k, g, want) in [
        ("exogenous", 10, 3, 0, 30),
        ("pca", 10, 3, 0, 30),
        ("spatial_mixed", 10, 3, 0, 31),
        ("grm_mixed", 4, 3, 0, 23),
        ("grm_mixed", 4, 3, 12, 17),
        ("grm", 4, 0, 0, 10),
        ("grm", 4, 0, 12, 4),
    ] {
        check(&format!("κ {kind} p={p} k={k} g={g}"), count_parameters_for(kind, p, k, g).unwrap() as f64, want as f64);
    }
    Outcome {
        pass: errors.is_empty(),
        detail: if errors.is_empty() {
            "all metric and κ examples exact to 1e-10".into()
        } else {
            errors.join("; ")
        },
    }
}

fn planted_partition(seed: u64) -> (PartialCorrelationGraph, Vec<usize>) {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let blocks: Vec<usize> = (0..60).map(|v| v / 20).collect();
    let mut edges = Vec::new();
    for i in 0..60 {
        for j in (i + 1)..60 {
            let prob = if blocks[i] == blocks[j] { 0.3 } else { 0.02 };
            if rng.random::<f64>() < prob {
                edges.push(Edge { i, j, weight: 0.1 });
            }
        }
    }
    (PartialCorrelationGraph::new(ids(60), edges, GraphSource::Glasso).unwrap(), blocks)
}

fn criterion_10() -> Outcome {
    let (graph, blocks) = planted_partition(10);
    let part = walktrap(&graph, DEFAULT_WALK_LENGTH, 3).unwrap();
    // Optimal relabeling over the 3! assignments.
    let perms = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
    let best = perms
        .iter()
        .map(|perm| {
            part.labels
                .iter()
                .zip(&blocks)
                .filter(|(l, b)| **l >= 1 && **l <= 3 && perm[**l - 1] == **b)
                .count()
        })
        .max()
        .unwrap();
    let agreement = best as f64 / 60.0;
    Outcome {
        pass: part.k == 3 && agreement >= 0.95,
        detail: format!("k {} , agreement {agreement:.3} (≥ 0.95), {} edges", part.k, graph.n_edges()),
    }
}

fn criterion_11() -> Outcome {
    let market = generate(&SyntheticSpec {
        p: 60,
        n: 244 + 8 * 61,
        structure: Structure::Chain { off: -0.5, diag: None },
        seed: 11,
    })
    .unwrap();
    let grm_recipe = |train: &ReturnsPanel| -> grmkit::Result<Box<dyn Predictor>> {
        let grm = build_grm(&glasso_cv(train, 5))?;
        Ok(Box::new(move |out: &ReturnsPanel| predict(&grm, out)))
    };
    let pca_recipe = |train: &ReturnsPanel| -> grmkit::Result<Box<dyn Predictor>> {
        let model = fit_pca(train, 5)?;
        Ok(Box::new(move |out: &ReturnsPanel| predict_factor(&model, out, None)))
    };
    let grm = rolling_backtest(&market.panel, grm_recipe, 244, 61).unwrap();
    let pca = rolling_backtest(&market.panel, pca_recipe, 244, 61).unwrap();
    let mean = |v: &[grmkit::evaluation::BacktestPeriod]| v.iter().map(|b| b.r2_mean).sum::<f64>() / v.len() as f64;
    let finite = grm.iter().chain(&pca).all(|b| b.r2_mean.is_finite());
    let (g, c) = (mean(&grm), mean(&pca));
    Outcome {
        pass: grm.len() == 8 && pca.len() == 8 && finite && (g - c).abs() <= 0.05,
        detail: format!("{} periods, mean R² GRM {g:.4}, PCA-5 {c:.4}, difference {:.4} (≤ 0.05)", grm.len(), g - c),
    }
}

/// Serializes every pipeline stage on a small market.
fn pipeline_outputs() -> Vec<(String, String)> {
    let spec = SyntheticSpec {
        p: 12,
        n: 120,
        structure: Structure::RandomSparse { density: 0.2 },
        seed: 12,
    };
    let market = generate(&spec).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("synth.csv");
    write_returns(&market.panel, &csv).unwrap();
    let mut out = vec![("synth csv".to_string(), std::fs::read_to_string(&csv).unwrap())];
    let json = |v: &dyn erased::Json| v.render();

    let (yi, yo) = split_at(&market.panel, 80).unwrap();
    let (yi, yo) = (center(&yi), center(&yo));
    let s = sample_covariance(&yi, Divisor::N).unwrap();
    let opts = SolverOptions::default();
    let grid = default_grid(&s, &Solver::Glasso);
    let cv = cross_validate(&yi, &Solver::Glasso, &grid, 5, &opts).unwrap();
    let est = fit(&s, &Solver::Glasso, cv.best_lambda, &opts).unwrap();
    let conc = fit(&s, &Solver::Concord { frobenius_weight: 0.0 }, cv.best_lambda, &opts).unwrap();
    let grm = build_grm(&est).unwrap();
    let pca = fit_pca(&yi, 2).unwrap();
    let mixed = fit_mixed(&yi, &pca_scores(&pca.b, &yi), &InteractionWeights::from_grm(&grm), DEFAULT_BOUNDS, DEFAULT_GRID_SIZE).unwrap();
    let implied = implied_factors(&est, 2, Normalization::MeanOne).unwrap();
    let graph = PartialCorrelationGraph::from_precision(&est).unwrap();
    let part = walktrap(&graph, DEFAULT_WALK_LENGTH, 3).unwrap();
    let ratio = ratio_matrix(&graph, Grouping::Communities(&part)).unwrap();
    let thresholded = threshold_pca_graph(&s, 2, 10).unwrap();
    let report = grmkit::evaluation::evaluate("grm", &predict(&grm, &yo).unwrap(), &yo, 0).unwrap();
    let backtest = rolling_backtest(
        &market.panel,
        |train: &ReturnsPanel| -> grmkit::Result<Box<dyn Predictor>> {
            let model = fit_pca(train, 2)?;
            Ok(Box::new(move |o: &ReturnsPanel| predict_factor(&model, o, None)))
        },
        40,
        20,
    )
    .unwrap();

    out.push(("cv".into(), json(&cv)));
    out.push(("glasso".into(), json(&est)));
    out.push(("concord".into(), json(&conc)));
    out.push(("grm".into(), json(&grm)));
    out.push(("pca".into(), json(&pca)));
    out.push(("mixed".into(), json(&mixed)));
    out.push(("implied".into(), json(&implied)));
    out.push(("partition".into(), json(&part)));
    out.push(("ratio".into(), json(&ratio)));
    out.push(("threshold graph".into(), json(&thresholded)));
    out.push(("report".into(), json(&report)));
    out.push(("backtest".into(), json(&backtest)));
    out.push((
        "graphml".into(),
        render_graph(&graph, Some(&part), None, GraphFormat::Graphml).unwrap(),
    ));
    out
}

mod erased {
    pub trait Json {
        fn render(&self) -> String;
    }

    impl<T: serde::Serialize> Json for T {
        fn render(&self) -> String {
            serde_json::to_string(self).unwrap()
        }
    }
}

fn criterion_12() -> Outcome {
    let first = pipeline_outputs();
    let second = pipeline_outputs();
    let differing: Vec<&str> = first
        .iter()
        .zip(&second)
        .filter(|(a, b)| a.1 != b.1)
        .map(|(a, _)| a.0.as_str())
        .collect();
    Outcome {
        pass: differing.is_empty() && first.len() == second.len(),
        detail: if differing.is_empty() {
            format!("{} serialized stages byte-identical across reruns", first.len())
        } else {
            format!("stages differ: {}", differing.join(", "))
        },
    }
}

/// Criterion number, time budget in seconds, and check.
type Criterion = (usize, u64, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 12] = [
        (1, 1, criterion_1),
        (2, 10, criterion_2),
        (3, 10, criterion_3),
        (4, 30, criterion_4),
        (5, 120, criterion_5),
        (6, 1, criterion_6),
        (7, 60, criterion_7),
        (8, 120, criterion_8),
        (9, 1, criterion_9),
        (10, 5, criterion_10),
        (11, 180, criterion_11),
        (12, 60, criterion_12),
    ];
    let filter: Option<usize> = std::env::args().skip(1).find_map(|a| a.parse().ok());
    let mut failed = 0;
    for (number, budget, f) in criteria {
        if filter.is_some_and(|only| only != number) {
            continue;
        }
        if !run(number, Duration::from_secs(budget), f) {
            failed += 1;
        }
    }
    if failed > 0 {
        println!("acceptance: {failed} criterion(s) failed");
        std::process::exit(1);
    }
    println!("acceptance: all criteria passed");
}
