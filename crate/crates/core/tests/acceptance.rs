//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use lannlab::complexity::{
    centered_moving_average, complexity_measure, count_regions_grid, lambda_diagnostics, region_upper_bound,
};
use lannlab::experiments::{
    compare_regularizers, init_network, load_dataset, ComparisonRow, DataSplit, DatasetSource, PenaltySet,
    RegionGrid,
};
use lannlab::lann::{approximation_error, BuildTrace, TraceRow};
use lannlab::propagation::{
    ablation_flip_rate, amplification, error_accumulation, error_accumulation_expanded, expected_jacobian,
    PropagationReport,
};
use lannlab::regularize::custom_l1_coefficients;
use lannlab::train::{loss_and_gradients, train_observed};
use lannlab::{
    build_lann, Activation, BuildConfig, DenseLayer, DenseNetwork, LannModel, NeuronDistribution, PiecewiseLinearFn,
    Structure, TrainConfig,
};
use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SEEDS: [u64; 5] = [0, 1, 2, 3, 4];
const MAIN_STRUCTURE: &str = "L3M(32,128,16)_T";
const LAMBDA: f64 = 0.1;
const SNAPSHOT_EPOCH: usize = 100;

type Verdict = (bool, String);

fn moons(seed: u64) -> DataSplit {
    load_dataset(&DatasetSource::Moons { n: 2000, noise: 0.1 }, false, seed).expect("two-moons data")
}

fn build_config(seed: u64) -> BuildConfig {
    BuildConfig {
        lambda: LAMBDA,
        batch: 8,
        seed,
        ..BuildConfig::default()
    }
}

/// The trained two-moons model shared by several criteria.
struct Fixture {
    data: DataSplit,
    net: DenseNetwork,
    snapshot: DenseNetwork,
    lann: LannModel,
    trace: BuildTrace,
    build_seconds: f64,
}

fn fixture() -> Fixture {
    let data = moons(0);
    let structure: Structure = MAIN_STRUCTURE.parse().unwrap();
    let initial = init_network(&structure, &data.train, 0).unwrap();
    let cfg = TrainConfig {
        metrics_every: 500,
        ..TrainConfig::default()
    };
    let mut snapshot = None;
    let (net, report) = train_observed(&initial, &data.train, Some(&data.test), &cfg, |r, n| {
        if r.epoch == SNAPSHOT_EPOCH {
            snapshot = Some(n.clone());
        }
    })
    .unwrap();
    let last = report.history.last().unwrap();
    println!(
        "  fixture: {MAIN_STRUCTURE} after {} epochs, train acc {:.4}, test acc {:.4}",
        last.epoch,
        last.train_accuracy.unwrap(),
        last.test_accuracy.unwrap()
    );
    let single = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let start = Instant::now();
    let (lann, trace) = single.install(|| build_lann(&net, &data.train, &build_config(0))).unwrap();
    let build_seconds = start.elapsed().as_secs_f64();
    Fixture {
        data,
        net,
        snapshot: snapshot.unwrap(),
        lann,
        trace,
        build_seconds,
    }
}

fn random_tiny_lann(r: &mut ChaCha8Rng) -> LannModel {
    let depth = r.random_range(1..=3);
    let mut prev = 2;
    let mut hidden = Vec::new();
    for _ in 0..depth {
        let w = r.random_range(1..=4);
        let weights = Array2::from_shape_fn((w, prev), |_| r.random_range(-2.0..2.0));
        let bias = Array1::from_shape_fn(w, |_| r.random_range(-0.5..0.5));
        hidden.push(DenseLayer::new(weights, bias).unwrap());
        prev = w;
    }
    let output = DenseLayer::new(
        Array2::from_shape_fn((2, prev), |_| r.random_range(-1.0..1.0)),
        Array1::zeros(2),
    )
    .unwrap();
    let net = DenseNetwork::new(2, 2, Activation::Tanh, hidden, output).unwrap();
    let approx = net
        .widths()
        .iter()
        .map(|&m| {
            (0..m)
                .map(|_| loop {
                    let k = r.random_range(1..=3);
                    let pts: Vec<f64> = (0..k).map(|_| r.random_range(-3.0..3.0)).collect();
                    if let Ok(l) = PiecewiseLinearFn::from_tangent_points(Activation::Tanh, pts) {
                        break l;
                    }
                })
                .collect()
        })
        .collect();
    LannModel::new(net, approx, None).unwrap()
}

fn bound_dominance() -> Verdict {
    let start = Instant::now();
    let mut r = ChaCha8Rng::seed_from_u64(2024);
    let bounds = [(-3.0, 3.0), (-3.0, 3.0)];
    let mut held = 0;
    let mut max_count = 0;
    for _ in 0..50 {
        let g = random_tiny_lann(&mut r);
        let count = count_regions_grid(&g, &bounds, &[1000, 1000]).unwrap();
        let (_, log_bound) = region_upper_bound(&g);
        max_count = max_count.max(count);
        if (count as f64).ln() <= log_bound + 1e-12 {
            held += 1;
        }
    }
    let secs = start.elapsed().as_secs_f64();
    (
        held == 50 && secs < 120.0,
        format!("{held}/50 within bound (largest count {max_count}), {secs:.1}s"),
    )
}

fn is_non_increasing(values: &[f64]) -> Option<(usize, f64, f64)> {
    values
        .windows(2)
        .enumerate()
        .find(|(_, w)| w[1] > w[0])
        .map(|(i, w)| (i + 1, w[0], w[1]))
}

fn builder_contract(f: &Fixture) -> Verdict {
    let errors = f.trace.errors();
    let smoothed = centered_moving_average(&errors, 5);
    let rises = smoothed.windows(2).filter(|w| w[1] > w[0]).count();
    let first_rise = is_non_increasing(&smoothed);
    let converged = f.trace.converged && f.trace.final_error() <= LAMBDA;
    let pass = converged && first_rise.is_none() && f.build_seconds < 600.0;
    let rise = match first_rise {
        None => "smoothed E non-increasing".to_string(),
        Some((i, a, b)) => format!("smoothed E rises {rises} times, first at iteration {i} ({a:.4} -> {b:.4})"),
    };
    (
        pass,
        format!(
            "converged={} E={:.4} after {} iterations, K={}; {rise}; {:.1}s single-threaded",
            f.trace.converged,
            f.trace.final_error(),
            f.trace.rows.len() - 1,
            f.lann.total_pieces(),
            f.build_seconds
        ),
    )
}

fn single_layer_exactness() -> Verdict {
    let data = moons(0);
    let structure: Structure = "L1M32_T".parse().unwrap();
    let initial = init_network(&structure, &data.train, 0).unwrap();
    let (net, _) = lannlab::train(&initial, &data.train, None, &TrainConfig::default()).unwrap();
    let (g, _) = build_lann(&net, &data.train, &build_config(0)).unwrap();
    let predicted = g.expected_errors().unwrap();
    let layer = &net.hidden_layers()[0];
    let z = data.train.features().dot(&layer.weights.t()) + &layer.bias;
    let dists = &g.distributions().unwrap()[0];
    let mut within = 0;
    let mut ratios = Vec::new();
    let mut histogram_ratios = Vec::new();
    for (j, l) in g.approximations()[0].iter().enumerate() {
        let col = z.column(j);
        let empirical = col.iter().map(|&v| (l.evaluate(v) - v.tanh()).abs()).sum::<f64>() / col.len() as f64;
        if (predicted[0][j] - empirical).abs() <= 0.1 * empirical {
            within += 1;
        }
        ratios.push(predicted[0][j] / empirical);
        // same grid, raw sample counts instead of the kernel estimate
        let d = &dists[j];
        let (lo, hi) = d.range();
        let n_t = d.grid_size();
        let mut counts = vec![0.0; n_t];
        for &v in col {
            let cell = ((v.tanh() - lo) / (hi - lo) * n_t as f64).floor() as usize;
            counts[cell.min(n_t - 1)] += 1.0;
        }
        let hist = NeuronDistribution::from_weights(Activation::Tanh, d.range(), counts).unwrap();
        histogram_ratios.push(hist.expected_error(l).unwrap() / empirical);
    }
    let m = ratios.len();
    let summary = |mut r: Vec<f64>| {
        r.sort_by(f64::total_cmp);
        format!("median {:.3}, range {:.3}..{:.3}", r[m / 2], r[0], r[m - 1])
    };
    (
        within * 10 >= m * 9,
        format!(
            "{within}/{m} neurons within 10%; predicted/empirical {}; histogram-weighted control {}",
            summary(ratios),
            summary(histogram_ratios)
        ),
    )
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

fn algebraic_identities(f: &Fixture) -> Verdict {
    let g = &f.lann;
    let dists = g.distributions().unwrap();
    let recursion = error_accumulation(g).unwrap();
    let expansion = error_accumulation_expanded(g).unwrap();
    let gap_rec = recursion
        .iter()
        .zip(&expansion)
        .flat_map(|(a, b)| a.iter().zip(b.iter()).map(|(x, y)| (x - y).abs()))
        .fold(0.0, f64::max);
    let rec_ok = recursion
        .iter()
        .zip(&expansion)
        .all(|(a, b)| a.iter().zip(b.iter()).all(|(&x, &y)| close(x, y, 1e-9)));

    let w = amplification(&f.net, dists).unwrap();
    let errors = g.expected_errors().unwrap();
    let weighted: f64 = w.iter().flatten().zip(errors.iter().flatten()).map(|(a, e)| a * e).sum();
    let vo = f.net.output_layer().weights.mapv(f64::abs);
    let through = vo.dot(recursion.last().unwrap()).sum() / f.net.output_dim() as f64;
    let out_ok = close(weighted, through, 1e-9);

    let coeffs = custom_l1_coefficients(&f.net, dists, 1e-4).unwrap();
    let mut gap_jac: f64 = 0.0;
    for (i, layer) in f.net.hidden_layers().iter().enumerate() {
        let jac = expected_jacobian(&f.net, i, &dists[i]).unwrap();
        for ((row, col), v) in layer.weights.indexed_iter() {
            gap_jac = gap_jac.max((coeffs.raw[i][row] * v.abs() - jac[[row, col]]).abs());
        }
    }
    let jac_ok = gap_jac <= 1e-12;
    (
        rec_ok && out_ok && jac_ok,
        format!(
            "recursion/expansion max gap {gap_rec:.2e}; output error {weighted:.6} vs {through:.6}; diag(a)|V| gap {gap_jac:.2e}"
        ),
    )
}

fn strictly(values: &[f64], increasing: bool) -> bool {
    values.windows(2).all(|w| if increasing { w[1] > w[0] } else { w[1] < w[0] })
}

fn fmt_list(values: &[f64]) -> String {
    values.iter().map(|v| format!("{v:.4}")).collect::<Vec<_>>().join(", ")
}

fn layer_trends(f: &Fixture) -> Verdict {
    let report = PropagationReport::from_lann(&f.lann).unwrap();
    let amp = PropagationReport::layer_means(&report.amplification);
    let acc = PropagationReport::layer_means(&report.accumulation);
    let last = f.net.depth() - 1;
    let mut flips = Vec::new();
    for &seed in &SEEDS {
        let first = ablation_flip_rate(&f.net, 0, 0.1, 20, &f.data.test, seed).unwrap().mean;
        let deep = ablation_flip_rate(&f.net, last, 0.1, 20, &f.data.test, seed).unwrap().mean;
        flips.push((first, deep));
    }
    let flip_wins = flips.iter().filter(|(a, b)| a > b).count();
    let amp_ok = strictly(&amp, false);
    let acc_ok = strictly(&acc, true);
    (
        amp_ok && acc_ok && flip_wins >= 4,
        format!(
            "amplification [{}]; accumulation [{}]; flip rate layer 1 > layer 3 in {flip_wins}/5 seeds ({})",
            fmt_list(&amp),
            fmt_list(&acc),
            flips.iter().map(|(a, b)| format!("{a:.4}/{b:.4}")).collect::<Vec<_>>().join(" ")
        ),
    )
}

fn final_complexity(structure: &str, seed: u64) -> f64 {
    let data = moons(seed);
    let s: Structure = structure.parse().unwrap();
    let initial = init_network(&s, &data.train, seed).unwrap();
    let cfg = TrainConfig {
        seed,
        metrics_every: 2000,
        ..TrainConfig::default()
    };
    let (net, _) = lannlab::train(&initial, &data.train, None, &cfg).unwrap();
    let (g, _) = build_lann(&net, &data.train, &build_config(seed)).unwrap();
    complexity_measure(&g, LAMBDA).complexity
}

fn training_trend(f: &Fixture) -> Verdict {
    let (early, _) = build_lann(&f.snapshot, &f.data.train, &build_config(0)).unwrap();
    let c_early = complexity_measure(&early, LAMBDA).complexity;
    let c_final = complexity_measure(&f.lann, LAMBDA).complexity;
    let pairs: Vec<(f64, f64)> = SEEDS
        .iter()
        .map(|&s| (final_complexity("L6M16_T", s), final_complexity("L3M32_T", s)))
        .collect();
    let deeper_wins = pairs.iter().filter(|(d, s)| d > s).count();
    (
        c_early < c_final && deeper_wins >= 4,
        format!(
            "C at epoch {SNAPSHOT_EPOCH} {c_early:.3} vs epoch 2000 {c_final:.3}; 6x16 > 3x32 in {deeper_wins}/5 seeds ({})",
            pairs.iter().map(|(d, s)| format!("{d:.2}/{s:.2}")).collect::<Vec<_>>().join(" ")
        ),
    )
}

fn regularizer_ordering() -> Verdict {
    let structure: Structure = MAIN_STRUCTURE.parse().unwrap();
    let variants = PenaltySet::default().variants();
    let mut c_wins = 0;
    let mut region_wins = 0;
    let mut lines = Vec::new();
    for &seed in &SEEDS {
        let data = moons(seed);
        let initial = init_network(&structure, &data.train, seed).unwrap();
        let cfg = TrainConfig {
            seed,
            ..TrainConfig::default()
        };
        let rows: Vec<ComparisonRow> =
            compare_regularizers(&initial, &data, &cfg, &variants, &build_config(seed), &RegionGrid::default())
                .unwrap();
        let nm = rows[0];
        if rows[1..].iter().all(|r| nm.complexity > r.complexity) {
            c_wins += 1;
        }
        if rows[1..].iter().all(|r| nm.regions > r.regions) {
            region_wins += 1;
        }
        lines.push(format!(
            "seed {seed}: {}",
            rows.iter()
                .map(|r| format!("{} C={:.2} R={} acc={:.3}", r.variant, r.complexity, r.regions, r.test_accuracy))
                .collect::<Vec<_>>()
                .join(", ")
        ));
    }
    for l in &lines {
        println!("    {l}");
    }
    (
        c_wins >= 4 && region_wins >= 4,
        format!("C(NM) above every variant in {c_wins}/5 seeds, NM regions above every variant in {region_wins}/5"),
    )
}

fn train_test_insensitivity(f: &Fixture) -> Verdict {
    let train = approximation_error(&f.lann, &f.net, &f.data.train).unwrap();
    let test = approximation_error(&f.lann, &f.net, &f.data.test).unwrap();
    ((train - test).abs() <= 0.01, format!("E_train {train:.4}, E_test {test:.4}"))
}

fn lambda_choice(f: &Fixture) -> Verdict {
    let diag = lambda_diagnostics(&f.trace.rows, 5).unwrap();
    let trace_ok = diag.lambda0.is_some_and(|l0| LAMBDA <= l0);
    let mut synthetic_ok = true;
    let mut notes = Vec::new();
    for rho in [0.8, 0.9, 0.95] {
        let rows: Vec<TraceRow> = (0..200)
            .map(|i| TraceRow {
                iteration: i,
                pieces: i,
                error: 3.0 * f64::powi(rho, i as i32),
            })
            .collect();
        let d = lambda_diagnostics(&rows, 5).unwrap();
        match d.settle_iteration {
            Some(s) => {
                let tail = rows[s].error < 0.05 * rows[0].error && rows[s - 1].error > 0.01 * rows[0].error;
                synthetic_ok &= tail;
                notes.push(format!("rho {rho}: settles at {s} (E/E0 {:.3})", rows[s].error / rows[0].error));
            }
            None => {
                synthetic_ok = false;
                notes.push(format!("rho {rho}: never settles"));
            }
        }
    }
    (
        trace_ok && synthetic_ok,
        format!(
            "lambda0 on build trace {} (settle iteration {:?}); {}",
            diag.lambda0.map_or("unavailable".into(), |l| format!("{l:.4}")),
            diag.settle_iteration,
            notes.join(", ")
        ),
    )
}

fn gradient_check(r: &mut ChaCha8Rng) -> (usize, f64) {
    let widths = [4, 3];
    let net = DenseNetwork::random(3, &widths, 3, Activation::Tanh, r.random()).unwrap();
    let x = Array2::from_shape_fn((6, 3), |_| r.random_range(-1.5..1.5));
    let y: Vec<usize> = (0..6).map(|_| r.random_range(0..3)).collect();
    let (_, grads) = loss_and_gradients(&net, x.view(), &y).unwrap();
    let loss_with = |layer: usize, idx: (usize, usize), delta: f64| {
        let mut hidden = net.hidden_layers().to_vec();
        let mut out = net.output_layer().clone();
        let target = if layer < hidden.len() { &mut hidden[layer] } else { &mut out };
        target.weights[idx] += delta;
        let n = DenseNetwork::new(3, 3, Activation::Tanh, hidden, out).unwrap();
        loss_and_gradients(&n, x.view(), &y).unwrap().0
    };
    let mut worst: f64 = 0.0;
    let mut checked = 0;
    let all = grads.hidden.iter().map(|(w, _)| w).chain(std::iter::once(&grads.output.0));
    for (layer, gw) in all.enumerate() {
        for (idx, &g) in gw.indexed_iter() {
            let numeric = (loss_with(layer, idx, 1e-5) - loss_with(layer, idx, -1e-5)) / 2e-5;
            worst = worst.max((g - numeric).abs() / numeric.abs().max(1e-3));
            checked += 1;
        }
    }
    (checked, worst)
}

fn pwl_properties(r: &mut ChaCha8Rng) -> bool {
    for case in 0..500 {
        let act = if case % 2 == 0 { Activation::Tanh } else { Activation::Sigmoid };
        let k = r.random_range(1..10);
        let mut pts: Vec<f64> = (0..k).map(|_| (r.random_range(-4000..4000) as f64) / 1000.0).collect();
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        let l = PiecewiseLinearFn::from_tangent_points(act, pts.clone()).unwrap();
        let p = l.tangent_points();
        let tangent = (0..l.pieces()).all(|t| {
            (l.slopes()[t] - act.derivative(p[t])).abs() <= 1e-12
                && (l.evaluate(p[t]) - act.eval(p[t])).abs() <= 1e-12
        });
        let ordered = p.windows(2).all(|w| w[0] < w[1]) && l.breakpoints().windows(2).all(|w| w[0] < w[1]);
        let mut shuffled = pts.clone();
        for i in (1..shuffled.len()).rev() {
            shuffled.swap(i, r.random_range(0..=i));
        }
        let mut grown = PiecewiseLinearFn::from_tangent_points(act, vec![shuffled[0]]).unwrap();
        for &q in &shuffled[1..] {
            grown = grown.insert_tangent(q).unwrap();
        }
        if !(tangent && ordered && grown == l) {
            return false;
        }
    }
    true
}

fn bit_identical(a: &Array2<f64>, b: &Array2<f64>) -> bool {
    a.shape() == b.shape() && a.iter().zip(b.iter()).all(|(x, y)| x.to_bits() == y.to_bits())
}

fn replay_determinism() -> bool {
    use lannlab::cli::{run, RunManifest, MANIFEST_FILE};
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap().to_string();
    let run_and_replay = |tag: &str, args: &[&str]| -> bool {
        let out = format!("{d}/{tag}");
        let mut argv = vec!["lannlab"];
        argv.extend_from_slice(args);
        argv.extend(["--out", out.as_str()]);
        if run(&argv) != 0 {
            return false;
        }
        let manifest = format!("{out}/{MANIFEST_FILE}");
        let again = format!("{d}/{tag}-replay");
        if run(["lannlab", "replay", "--manifest", manifest.as_str(), "--out", again.as_str()]) != 0 {
            return false;
        }
        let m = RunManifest::load(manifest.as_ref()).unwrap();
        m.outputs.iter().all(|name| {
            std::fs::read(format!("{out}/{name}")).unwrap() == std::fs::read(format!("{again}/{name}")).unwrap()
        })
    };
    let model = format!("{d}/train/model.json");
    let lann = format!("{d}/build/lann.json");
    run_and_replay(
        "train",
        &["train", "--structure", "L2M(8,6)_T", "--dataset", "moons:300", "--epochs", "50", "--reg", "custom-l1"],
    ) && run_and_replay("build", &["build-lann", "--model", &model, "--dataset", "moons:300", "--lambda", "0.02"])
        && run_and_replay("complexity", &["complexity", "--model", &lann])
        && run_and_replay("regions", &["regions", "--model", &lann, "--dataset", "moons:300", "--resolution", "200"])
        && run_and_replay("propagation", &["propagation", "--model", &lann])
}

fn numerics(f: &Fixture) -> Verdict {
    let mut r = ChaCha8Rng::seed_from_u64(10);
    let mut worst: f64 = 0.0;
    let mut checked = 0;
    for _ in 0..5 {
        let (n, w) = gradient_check(&mut r);
        checked += n;
        worst = worst.max(w);
    }
    let grad_ok = worst <= 1e-4;
    let pwl_ok = pwl_properties(&mut r);

    let x = f.data.test.features().to_owned();
    let net_back = DenseNetwork::from_json(&f.net.to_json().unwrap()).unwrap();
    let lann_back = LannModel::from_json(&f.lann.to_json().unwrap()).unwrap();
    let serial_ok = net_back == f.net
        && lann_back == f.lann
        && bit_identical(&f.net.logits_batch(x.view()).unwrap(), &net_back.logits_batch(x.view()).unwrap())
        && bit_identical(&f.net.logits_batch(x.view()).unwrap(), &f.net.logits_batch(x.view()).unwrap())
        && bit_identical(&f.lann.forward_batch(x.view()).unwrap(), &lann_back.forward_batch(x.view()).unwrap());
    let replay_ok = replay_determinism();
    (
        grad_ok && pwl_ok && serial_ok && replay_ok,
        format!(
            "gradients: {checked} weights, worst relative error {worst:.2e}; pwl properties {}; serialization {}; replay {}",
            ok(pwl_ok),
            ok(serial_ok),
            ok(replay_ok)
        ),
    )
}

fn ok(b: bool) -> &'static str {
    if b {
        "ok"
    } else {
        "broken"
    }
}

fn report(id: usize, name: &str, check: impl FnOnce() -> Verdict) -> bool {
    let start = Instant::now();
    let (pass, detail) = match catch_unwind(AssertUnwindSafe(check)) {
        Ok(v) => v,
        Err(e) => {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            (false, format!("panicked: {msg}"))
        }
    };
    println!(
        "{} [{id:>2}] {name}: {detail} ({:.0}s)",
        if pass { "PASS" } else { "FAIL" },
        start.elapsed().as_secs_f64()
    );
    pass
}

fn main() {
    let started = Instant::now();
    println!("acceptance: preparing the trained two-moons fixture");
    let f = fixture();
    let results = [
        report(1, "bound dominance", bound_dominance),
        report(2, "builder contract", || builder_contract(&f)),
        report(3, "single-layer expected error", single_layer_exactness),
        report(4, "algebraic identities", || algebraic_identities(&f)),
        report(5, "layer trends", || layer_trends(&f)),
        report(6, "complexity during training and with depth", || training_trend(&f)),
        report(7, "regularizer ordering", regularizer_ordering),
        report(8, "train/test insensitivity", || train_test_insensitivity(&f)),
        report(9, "lambda choice", || lambda_choice(&f)),
        report(10, "numerics", || numerics(&f)),
    ];
    let passed = results.iter().filter(|&&p| p).count();
    println!(
        "acceptance: {passed}/{} criteria passed in {:.0}s",
        results.len(),
        started.elapsed().as_secs_f64()
    );
    if passed != results.len() {
        std::process::exit(1);
    }
}
