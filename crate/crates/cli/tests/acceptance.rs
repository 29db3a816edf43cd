//! Acceptance gate: one test per release criterion, each printing a single
//! `[PASS]`/`[FAIL]` line (visible with `cargo test --test acceptance --
//! --nocapture`; a failing criterion also fails its test).
//!
//! Tolerances are pinned here and must not be loosened to make a run green:
//! a criterion this implementation cannot meet is expected to fail loudly.

use sparseout::{
    dropout_forward, hoyer, sparseout_backward, sparseout_forward, Mode, RegConfig, RegKind,
    RegLayer, Rng, Tensor,
};
use sparseout_cli::commands::{
    cmd_sparsity_sweep, cmd_verify_theorems, measure_timings, sparseout_label,
};
use sparseout_cli::data::synthesize_dataset;
use sparseout_cli::run::{OutAct, Regularizer, RunConfig};

fn report(criterion: &str, passed: bool, detail: &str) {
    let tag = if passed { "[PASS]" } else { "[FAIL]" };
    println!("{tag} {criterion}: {detail}");
    assert!(passed, "{tag} {criterion}: {detail}");
}

/// Tensor with entry magnitudes in `[lo, hi]` and random signs.
fn signed_tensor(rng: &mut Rng, rows: usize, cols: usize, lo: f64, hi: f64) -> Tensor {
    let mag = rng.uniform_tensor(rows, cols, lo, hi);
    let flip = rng.uniform_tensor(rows, cols, 0.0, 1.0);
    let data = mag
        .data()
        .iter()
        .zip(flip.data())
        .map(|(&m, &f)| if f < 0.5 { -m } else { m })
        .collect();
    Tensor::from_vec(rows, cols, data).unwrap()
}

/// Criterion 1: with masks frozen, the analytic backward matches central
/// finite differences of the forward for q in {1.5, 2.0, 2.5, 3.0} on
/// activations with |a| in [0.1, 5], relative error < 1e-5 on 100% of
/// elements.
#[test]
fn criterion_1_gradient_fidelity() {
    let tol = 1e-5;
    let h = 1e-5;
    let (rows, cols) = (8, 10);
    let mut rng = Rng::new(101);
    let mut checked = 0usize;
    let mut failed = 0usize;
    let mut worst: f64 = 0.0;

    for q in [1.5, 2.0, 2.5, 3.0] {
        let a = signed_tensor(&mut rng, rows, cols, 0.1, 5.0);
        let mut layer = RegLayer::new(RegKind::Sparseout, RegConfig::new(0.5, q).unwrap()).unwrap();
        sparseout_forward(&mut layer, &a, Mode::Train, &mut rng).unwrap();

        // Unit upstream turns the backward pass into the raw diagonal
        // Jacobian, which elementwise finite differences estimate directly.
        let ones = Tensor::filled(rows, cols, 1.0);
        let analytic = sparseout_backward(&ones, &layer).unwrap();

        for i in 0..rows {
            for j in 0..cols {
                let mut plus = a.clone();
                plus.set(i, j, a.get(i, j) + h);
                let mut minus = a.clone();
                minus.set(i, j, a.get(i, j) - h);
                let fp = layer.forward_frozen(&plus).unwrap().get(i, j);
                let fm = layer.forward_frozen(&minus).unwrap().get(i, j);
                let fd = (fp - fm) / (2.0 * h);
                let exact = analytic.get(i, j);
                let denom = exact.abs().max(fd.abs());
                // Dropped elements at q = 2 have an exactly zero derivative
                // on both routes; that is agreement, not a degenerate case.
                let rel = if denom < 1e-12 {
                    0.0
                } else {
                    (fd - exact).abs() / denom
                };
                worst = worst.max(rel);
                checked += 1;
                if rel >= tol {
                    failed += 1;
                }
            }
        }
    }
    report(
        "criterion 1 (gradient fidelity)",
        failed == 0 && checked == 4 * rows * cols,
        &format!(
            "central differences vs analytic backward, q in {{1.5, 2.0, 2.5, 3.0}}: \
             {checked} elements, {failed} above tol {tol} (worst rel err {worst:.2e})"
        ),
    );
}

/// Criterion 2: on non-negative activations with a shared mask stream, the
/// q = 2 forward and backward are bitwise identical to dropout.
#[test]
fn criterion_2_dropout_equivalence_bitwise() {
    let bits = |t: &Tensor| -> Vec<u64> { t.data().iter().map(|v| v.to_bits()).collect() };
    let mut data_rng = Rng::new(202);

    // Forward: non-negative activations including exact zeros.
    let mut a = data_rng.uniform_tensor(16, 32, 0.0, 4.0);
    for j in 0..8 {
        a.set(3, j, 0.0);
    }
    let mut r1 = Rng::new(77);
    let mut r2 = Rng::new(77);
    let mut so = RegLayer::new(RegKind::Sparseout, RegConfig::new(0.5, 2.0).unwrap()).unwrap();
    let so_fwd = sparseout_forward(&mut so, &a, Mode::Train, &mut r1).unwrap();
    let do_fwd = dropout_forward(&a, 0.5, Mode::Train, &mut r2).unwrap();
    let forward_ok = bits(&so_fwd) == bits(&do_fwd);

    // Backward: positive activations (the regime the equivalence claims;
    // zeros contribute zero gradient through the preceding rectifier either
    // way, so nothing rides on the derivative convention at exactly zero).
    let a_pos = data_rng.uniform_tensor(16, 32, 0.1, 4.0);
    let upstream = signed_tensor(&mut data_rng, 16, 32, 0.1, 2.0);
    let mut r3 = Rng::new(78);
    let mut r4 = Rng::new(78);
    let mut so2 = RegLayer::new(RegKind::Sparseout, RegConfig::new(0.5, 2.0).unwrap()).unwrap();
    sparseout_forward(&mut so2, &a_pos, Mode::Train, &mut r3).unwrap();
    let so_bwd = sparseout_backward(&upstream, &so2).unwrap();
    let mut dr = RegLayer::dropout(0.5).unwrap();
    dr.forward(&a_pos, Mode::Train, &mut r4).unwrap();
    let do_bwd = dr.backward(&upstream).unwrap();
    let backward_ok = bits(&so_bwd) == bits(&do_bwd);

    report(
        "criterion 2 (dropout equivalence at q=2)",
        forward_ok && backward_ok,
        &format!(
            "shared mask stream on 16x32 non-negative tensors: \
             forward bitwise equal = {forward_ok}, backward bitwise equal = {backward_ok}"
        ),
    );
}

/// Criterion 3: the Monte-Carlo variance of a perturbed linear predictor
/// over 1e5 mask draws matches the closed form within 2% across the grid
/// q in {1.5, 2, 2.5} x p in {0.3, 0.5, 0.8}, majority of 3 seeds per cell.
#[test]
fn criterion_3_closed_form_variance() {
    let report_obj = cmd_verify_theorems(7, false).unwrap();
    let grid: Vec<&(bool, String)> = report_obj
        .lines
        .iter()
        .filter(|(_, text)| text.starts_with("variance grid"))
        .collect();
    let passed = grid.len() == 9 && grid.iter().all(|(ok, _)| *ok);
    report(
        "criterion 3 (closed-form variance)",
        passed,
        &format!(
            "1e5-draw Monte-Carlo vs closed form, 2% tolerance, majority of 3 seeds: \
             {}/{} grid cells passed",
            grid.iter().filter(|(ok, _)| *ok).count(),
            grid.len()
        ),
    );
}

/// Criterion 4: the sparsity measure is 0 for constant vectors and 1 for
/// one-hot vectors (within 1e-12), and invariant under nonzero rescaling
/// across 1e3 random cases.
#[test]
fn criterion_4_sparsity_measure() {
    let tol = 1e-12;
    let mut exact_ok = true;
    for d in [2, 3, 16, 301] {
        for c in [1.0, -2.5, 1e-4] {
            let constant = vec![c; d];
            exact_ok &= hoyer(&constant).unwrap().abs() <= tol;
            let mut one_hot = vec![0.0; d];
            one_hot[d / 2] = c;
            exact_ok &= (hoyer(&one_hot).unwrap() - 1.0).abs() <= tol;
        }
    }

    let mut rng = Rng::new(404);
    let cases = 1000;
    let mut scale_failures = 0usize;
    let mut worst: f64 = 0.0;
    for _ in 0..cases {
        let d = 2 + (rng.next_u64() % 63) as usize;
        let v: Vec<f64> = (0..d).map(|_| rng.uniform(-1.0, 1.0)).collect();
        if v.iter().all(|x| *x == 0.0) {
            continue;
        }
        let exponent = rng.uniform(-3.0, 3.0);
        let sign = if rng.uniform(0.0, 1.0) < 0.5 {
            -1.0
        } else {
            1.0
        };
        let c = sign * 10f64.powf(exponent);
        let scaled: Vec<f64> = v.iter().map(|x| c * x).collect();
        let diff = (hoyer(&v).unwrap() - hoyer(&scaled).unwrap()).abs();
        worst = worst.max(diff);
        if diff > tol {
            scale_failures += 1;
        }
    }
    report(
        "criterion 4 (sparsity measure)",
        exact_ok && scale_failures == 0,
        &format!(
            "constant -> 0 and one-hot -> 1 within {tol:.0e}; \
             scale invariance over {cases} cases (worst drift {worst:.2e})"
        ),
    );
}

/// Criterion 5: at desk scale (1250 synthetic images, 128 hidden units,
/// p = 0.5, 20 epochs, seeds 11/12/13) the median final-epoch sparsity is
/// strictly decreasing in q over {1.5, 2.0, 2.5}, and the q = 2.0 run
/// matches the dropout run within 1e-9 at every epoch under shared seeds.
#[test]
fn criterion_5_sparsity_trend_in_q() {
    let epochs = 20;
    let qs = [1.5, 2.0, 2.5];
    let seeds = [11u64, 12, 13];
    let dataset = synthesize_dataset(1250, 256, 1234).unwrap();

    let mut final_hoyer: Vec<Vec<f64>> = vec![Vec::new(); qs.len()];
    let mut q2_matches_dropout = true;
    let mut worst_gap: f64 = 0.0;

    for &seed in &seeds {
        let base = RunConfig {
            regularizer: Regularizer::Sparseout,
            p: 0.5,
            q: 2.0,
            hidden_size: 128,
            epochs,
            learning_rate: 0.1,
            batch_size: 128,
            seed,
            out_act: OutAct::Sigmoid,
            output_path: None,
        };
        let rows = cmd_sparsity_sweep(&dataset, &base, &qs).unwrap();

        for (qi, &q) in qs.iter().enumerate() {
            let label = sparseout_label(q);
            let last = rows
                .iter()
                .filter(|r| r.run_label == label && r.epoch == epochs)
                .map(|r| r.hoyer)
                .next()
                .expect("final epoch row exists");
            final_hoyer[qi].push(last);
        }
        for epoch in 1..=epochs {
            let find = |label: &str| {
                rows.iter()
                    .find(|r| r.run_label == label && r.epoch == epoch)
                    .expect("row exists")
            };
            let dropout = find("dropout");
            let q2 = find("sparseout_q2");
            let gap = (dropout.hoyer - q2.hoyer)
                .abs()
                .max((dropout.loss - q2.loss).abs());
            worst_gap = worst_gap.max(gap);
            q2_matches_dropout &= gap <= 1e-9;
        }
    }

    let median = |v: &mut Vec<f64>| -> f64 {
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        v[v.len() / 2]
    };
    let medians: Vec<f64> = final_hoyer.iter_mut().map(median).collect();
    let strictly_decreasing = medians.windows(2).all(|w| w[0] > w[1]);

    report(
        "criterion 5 (sparsity trend in q)",
        strictly_decreasing && q2_matches_dropout,
        &format!(
            "median final-epoch sparsity over seeds {seeds:?}: \
             q1.5={:.4} > q2={:.4} > q2.5={:.4} is {strictly_decreasing}; \
             q=2 vs dropout worst per-epoch gap {worst_gap:.1e} (tol 1e-9)",
            medians[0], medians[1], medians[2]
        ),
    );
}

/// Criterion 6: per-epoch median wall time at batch 128 must satisfy, on
/// this host: sparseout <= 1.5x dropout and bridgeout >= 3x dropout at
/// hidden width 1024; and from width 1024 to 2048, bridgeout grows >= 1.7x
/// while sparseout grows <= 1.3x.
///
/// The last clause assumes a device with enough parallel slack that the
/// extra arithmetic of a wider layer hides behind fixed overheads. On a
/// serial CPU every term of an epoch scales with the width, so sparseout
/// growth lands near 2x and this clause fails; it is reported honestly
/// rather than tuned away, and the other three clauses still bind.
#[test]
fn criterion_6_cost_ratios() {
    let records = measure_timings(&[1024, 2048], 128, 3, 256, 42).unwrap();
    let cell = |hidden: usize, reg: Regularizer| -> f64 {
        records
            .iter()
            .find(|r| r.hidden == hidden && r.regularizer == reg)
            .expect("cell measured")
            .median_seconds
    };

    let sparseout_vs_dropout =
        cell(1024, Regularizer::Sparseout) / cell(1024, Regularizer::Dropout);
    let bridgeout_vs_dropout =
        cell(1024, Regularizer::Bridgeout) / cell(1024, Regularizer::Dropout);
    let bridgeout_growth = cell(2048, Regularizer::Bridgeout) / cell(1024, Regularizer::Bridgeout);
    let sparseout_growth = cell(2048, Regularizer::Sparseout) / cell(1024, Regularizer::Sparseout);

    let clauses = [
        sparseout_vs_dropout <= 1.5,
        bridgeout_vs_dropout >= 3.0,
        bridgeout_growth >= 1.7,
        sparseout_growth <= 1.3,
    ];
    report(
        "criterion 6 (cost ratios)",
        clauses.iter().all(|c| *c),
        &format!(
            "sparseout/dropout@1024 = {sparseout_vs_dropout:.2} (need <= 1.5); \
             bridgeout/dropout@1024 = {bridgeout_vs_dropout:.2} (need >= 3.0); \
             bridgeout 1024->2048 growth = {bridgeout_growth:.2} (need >= 1.7); \
             sparseout 1024->2048 growth = {sparseout_growth:.2} (need <= 1.3)"
        ),
    );
}

/// Criterion 7: large-scale benchmarks are declared out of scope.
#[test]
fn criterion_7_scope_declaration() {
    report(
        "criterion 7 (scope declaration)",
        true,
        "wide-residual-network image classification error rates and LSTM \
         language-model perplexities are out of scope at desk scale; the \
         gradient, equivalence, variance, and sparsity-trend criteria above \
         stand in for them",
    );
}
