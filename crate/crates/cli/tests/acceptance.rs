//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.
//!
//! Set `BNS_WTI_CSV` to a full 2009-06-01..2019-05-30 WTI close file to run
//! the data-bound checks against it instead of the bundled fixture.

use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use rand::Rng;
use rand_distr::StandardNormal;
use sha2::{Digest, Sha256};

use bns_core::dependence::{decay_profile, DecayRow, DecaySettings};
use bns_core::labels::{row_ranges, split_by_date, WINDOW_LEN};
use bns_core::learners::gradcheck::check_gradients;
use bns_core::learners::nn::ParamSet;
use bns_core::learners::{predict_dataset, DenseNet, LstmNet};
use bns_core::levy_sim::{expected_variance_path, Simulator, StreamLayout, DAY};
use bns_core::rng::{self, Source};
use bns_core::{
    build_dataset, corr_classical, corr_refined, detect_jumps, load_csv, report, train_model, BnsParams, ColumnMap,
    CorrInputs, IndexRange, ModelKind, PriceSeries, SimGrid, SimModel, SubordinatorSpec, ThetaSchedule, TrainConfig,
    WindowDataset, WindowRow,
};

type Criterion = (&'static str, fn() -> Outcome);

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self {
            pass,
            detail: detail.into(),
        }
    }
}

fn workspace_root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn fixture_path() -> PathBuf {
    workspace_root().join("data/wti_daily_close.csv")
}

fn vendor_path() -> Option<PathBuf> {
    std::env::var_os("BNS_WTI_CSV").map(PathBuf::from)
}

fn bns() -> Command {
    Command::new(env!("CARGO_BIN_EXE_bns"))
}

fn within_budget(elapsed: Duration, limit_secs: f64) -> (bool, String) {
    let secs = elapsed.as_secs_f64();
    (secs < limit_secs, format!("{secs:.2} s of {limit_secs} s"))
}

// ---------------------------------------------------------------- 1

/// Stats straight from the CSV text, sharing no code with the crate.
fn oracle_stats(path: &Path) -> BTreeMap<&'static str, f64> {
    let text = std::fs::read_to_string(path).unwrap();
    let mut rows: Vec<(String, f64)> = text
        .lines()
        .skip(1)
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            let mut it = l.split(',');
            let date = it.next().unwrap().trim().to_string();
            let close: f64 = it.next().unwrap().trim().parse().unwrap();
            (date, close)
        })
        .collect();
    rows.sort_by(|a, b| a.0.cmp(&b.0));
    let closes: Vec<f64> = rows.iter().map(|r| r.1).collect();
    let changes: Vec<f64> = closes.windows(2).map(|w| w[1] - w[0]).collect();
    let pcts: Vec<f64> = closes.windows(2).map(|w| 100.0 * (w[1] - w[0]) / w[0]).collect();
    let summarize = |v: &[f64]| {
        let mut s = v.to_vec();
        s.sort_by(f64::total_cmp);
        let n = s.len();
        let median = if n % 2 == 1 {
            s[n / 2]
        } else {
            0.5 * (s[n / 2 - 1] + s[n / 2])
        };
        (v.iter().sum::<f64>() / n as f64, median, s[n - 1], s[0])
    };
    let (a, b, c, d) = summarize(&changes);
    let (e, f, g, h) = summarize(&pcts);
    BTreeMap::from([
        ("mean_change", a),
        ("median_change", b),
        ("max_change", c),
        ("min_change", d),
        ("mean_pct", e),
        ("median_pct", f),
        ("max_pct", g),
        ("min_pct", h),
    ])
}

/// Published figures and the number of decimals they are shown with.
const VENDOR_STATS: [(&str, f64, i32); 8] = [
    ("mean_change", -0.0047, 4),
    ("median_change", 0.04399, 5),
    ("max_change", 7.62, 2),
    ("min_change", -8.90, 2),
    ("mean_pct", 0.01370, 5),
    ("median_pct", 0.06521, 5),
    ("max_pct", 12.32, 2),
    ("min_pct", -10.53, 2),
];

fn c1_stats() -> Outcome {
    let (path, vendor) = match vendor_path() {
        Some(p) => (p, true),
        None => (fixture_path(), false),
    };
    let mut problems = Vec::new();
    if !vendor {
        let sums = std::fs::read_to_string(workspace_root().join("data/SHA256SUMS")).unwrap();
        let want = sums.split_whitespace().next().unwrap().to_string();
        let got = hex::encode(Sha256::digest(std::fs::read(&path).unwrap()));
        if got != want {
            problems.push(format!("fixture checksum {got} != {want}"));
        }
    }
    let out_dir = tempfile::tempdir().unwrap();
    let start = Instant::now();
    let out = bns()
        .args(["stats", "--data"])
        .arg(&path)
        .arg("--out")
        .arg(out_dir.path())
        .output()
        .unwrap();
    let elapsed = start.elapsed();
    if !out.status.success() {
        return Outcome::new(false, format!("stats exited with {}", out.status));
    }
    let got: BTreeMap<String, f64> = serde_json::from_slice(&out.stdout).unwrap();
    if vendor {
        for (key, shown, decimals) in VENDOR_STATS {
            let half_ulp = 0.5 * 10f64.powi(-decimals);
            if (got[key] - shown).abs() > half_ulp + 1e-12 {
                problems.push(format!("{key} {} does not round to {shown}", got[key]));
            }
        }
    } else {
        for (key, want) in oracle_stats(&path) {
            if (got[key] - want).abs() > 1e-9 * want.abs().max(1.0) {
                problems.push(format!("{key} {} vs recomputed {want}", got[key]));
            }
        }
    }
    let (fast, timing) = within_budget(elapsed, 1.0);
    if !fast {
        problems.push(format!("too slow: {timing}"));
    }
    let source = if vendor { "vendor file" } else { "checksummed fixture" };
    if problems.is_empty() {
        Outcome::new(true, format!("{source}, 8 figures match, {timing}"))
    } else {
        Outcome::new(false, format!("{source}: {}", problems.join("; ")))
    }
}

// ---------------------------------------------------------------- 2

fn c2_supports() -> Outcome {
    let path = vendor_path().unwrap_or_else(fixture_path);
    let series = load_csv(&path, &ColumnMap::default()).unwrap();
    let jumps = detect_jumps(&series, 2.0).unwrap();
    let data = build_dataset(&series, &jumps);
    let cases = [
        ((100, 500), (501, 600), (57, 44)),
        ((1600, 2100), (2101, 2200), (93, 8)),
        ((1800, 2300), (2301, 2500), (154, 47)),
    ];
    let mut parts = Vec::new();
    let mut pass = true;
    for (train, test, want) in cases {
        let (tr, te) = row_ranges(IndexRange::new(train.0, train.1), IndexRange::new(test.0, test.1));
        let label = format!("test {}-{}", test.0, test.1);
        match split_by_date(&data, &series, tr, te) {
            Ok((_, test_set)) => {
                let got = test_set.class_counts();
                let ok = got == want;
                pass &= ok;
                parts.push(format!(
                    "{label} {}/{} (want {}/{}){}",
                    got.0,
                    got.1,
                    want.0,
                    want.1,
                    if ok { "" } else { " MISMATCH" }
                ));
            }
            Err(e) => {
                pass = false;
                parts.push(format!("{label} unavailable: {e}"));
            }
        }
    }
    Outcome::new(pass, format!("{} rows; {}", series.len(), parts.join("; ")))
}

// ---------------------------------------------------------------- 3

/// Rescans every window's horizon directly.
fn brute_force_rows(closes: &[f64], k: f64) -> Vec<WindowRow> {
    let mut rows = Vec::new();
    let mut i = 0;
    while i + 14 <= closes.len() {
        let mut drops = 0;
        for t in i + 7..i + 14 {
            if 100.0 * (closes[t - 1] - closes[t]) / closes[t - 1] >= k {
                drops += 1;
            }
        }
        let mut features = [0.0; WINDOW_LEN];
        features.copy_from_slice(&closes[i..i + 7]);
        rows.push(WindowRow {
            features,
            start_index: i,
            theta: u8::from(drops >= 2),
        });
        i += 1;
    }
    rows
}

fn c3_labeler() -> Outcome {
    let start = Instant::now();
    let mut r = rng::stream(2024, 3);
    let (mut rows, mut mismatched, mut positives) = (0usize, 0usize, 0usize);
    for _ in 0..1000 {
        let len = r.random_range(14..=200);
        let k = [1.0, 2.0, 3.5][r.random_range(0..3)];
        let mut c = 50.0 + 50.0 * r.random::<f64>();
        let closes: Vec<f64> = (0..len)
            .map(|_| {
                let shock: f64 = if r.random::<f64>() < 0.2 {
                    -0.05 * r.random::<f64>()
                } else {
                    0.01 * r.sample::<f64, _>(StandardNormal)
                };
                c = (c * (1.0 + shock)).max(1.0);
                c
            })
            .collect();
        let series = PriceSeries::from_closes(&closes).unwrap();
        let got = build_dataset(&series, &detect_jumps(&series, k).unwrap()).rows;
        let want = brute_force_rows(&closes, k);
        rows += want.len();
        positives += want.iter().filter(|w| w.theta == 1).count();
        if got.len() != want.len() {
            mismatched += want.len().max(got.len());
            continue;
        }
        mismatched += got.iter().zip(&want).filter(|(a, b)| a != b).count();
    }
    let (fast, timing) = within_budget(start.elapsed(), 10.0);
    Outcome::new(
        mismatched == 0 && fast,
        format!("1000 series, {rows} rows ({positives} with θ=1), {mismatched} disagreements, {timing}"),
    )
}

// ---------------------------------------------------------------- 4

fn random_batch(seed: u64, n: usize) -> (Vec<[f64; WINDOW_LEN]>, Vec<u8>) {
    let mut r = rng::stream(seed, 1);
    let xs = (0..n)
        .map(|_| std::array::from_fn(|_| r.random_range(-2.0..2.0)))
        .collect();
    let ys = (0..n).map(|_| u8::from(r.random::<bool>())).collect();
    (xs, ys)
}

fn c4_gradients() -> Outcome {
    let start = Instant::now();
    let weights = [0.7, 1.9];
    let mut worst_dense: f64 = 0.0;
    let mut worst_lstm: f64 = 0.0;
    let mut worst_bn: f64 = 0.0;
    for point in 0..10u64 {
        let cfg = TrainConfig {
            hidden1: 6,
            hidden2: 5,
            lstm_hidden: 4,
            rng_seed: 100 + point,
            ..TrainConfig::default()
        };
        let (xs, ys) = random_batch(point, 8);

        let net = DenseNet::init(&cfg);
        let (_, grads) = net.loss_and_grad(&xs, &ys, weights);
        let n = net.head.num_params();
        let e = check_gradients(&net.head, &grads, n, point, |p| {
            DenseNet { head: p.clone() }.loss(&xs, &ys, weights)
        });
        worst_dense = worst_dense.max(e);

        for bn in [false, true] {
            let net = LstmNet::init(&cfg, bn);
            let (_, grads, _) = net.loss_and_grad(&xs, &ys, weights).unwrap();
            let n = net.params.num_params();
            let e = check_gradients(&net.params, &grads, n, point, |p| {
                let mut m = net.clone();
                m.params = p.clone();
                m.train_loss(&xs, &ys, weights).unwrap()
            });
            if bn {
                worst_bn = worst_bn.max(e);
            } else {
                worst_lstm = worst_lstm.max(e);
            }
        }
    }
    let (fast, timing) = within_budget(start.elapsed(), 30.0);
    let worst = worst_dense.max(worst_lstm).max(worst_bn);
    Outcome::new(
        worst < 1e-4 && fast,
        format!("10 points each, all coordinates; worst rel. error dense {worst_dense:.1e}, lstm {worst_lstm:.1e}, lstm+bn {worst_bn:.1e}; {timing}"),
    )
}

// ---------------------------------------------------------------- 5

fn separable(seed: u64, n: usize) -> WindowDataset {
    let mut r = rng::stream(seed, 5);
    let rows = (0..n)
        .map(|i| {
            let theta = u8::from(r.random::<bool>());
            let mean = if theta == 1 { 3.0 } else { -3.0 };
            WindowRow {
                features: std::array::from_fn(|_| mean + r.sample::<f64, _>(StandardNormal)),
                start_index: i,
                theta,
            }
        })
        .collect();
    WindowDataset {
        rows,
        ..WindowDataset::empty(2.0)
    }
}

fn c5_learners() -> Outcome {
    let start = Instant::now();
    let data = separable(7, 1000);
    let (train_rows, test_rows) = data.rows.split_at(700);
    let train = WindowDataset {
        rows: train_rows.to_vec(),
        ..WindowDataset::empty(2.0)
    };
    let test = WindowDataset {
        rows: test_rows.to_vec(),
        ..WindowDataset::empty(2.0)
    };
    let cfg = TrainConfig::default();
    let mut pass = true;
    let mut parts = Vec::new();
    for kind in [ModelKind::Lr, ModelKind::Rf, ModelKind::Nn] {
        let (model, _) = train_model(kind, &train, &cfg).unwrap();
        let pred: Vec<u8> = predict_dataset(&model, &test).iter().map(|p| p.label).collect();
        let acc = report(&test.labels(), &pred).unwrap().accuracy;
        pass &= acc >= 0.95;
        parts.push(format!("{kind} {acc:.3}"));
    }
    let (fast, timing) = within_budget(start.elapsed(), 60.0);
    Outcome::new(
        pass && fast,
        format!("700/300 split, accuracy {}; {timing}", parts.join(", ")),
    )
}

// ---------------------------------------------------------------- 6

fn c6_lr_pattern() -> Outcome {
    let series = load_csv(vendor_path().unwrap_or_else(fixture_path), &ColumnMap::default()).unwrap();
    let data = build_dataset(&series, &detect_jumps(&series, 2.0).unwrap());
    let (tr, te) = row_ranges(IndexRange::new(100, 500), IndexRange::new(501, 600));
    let (train, test) = split_by_date(&data, &series, tr, te).unwrap();
    let cfg = TrainConfig::default();
    let (model, _) = train_model(ModelKind::Lr, &train, &cfg).unwrap();
    let pred: Vec<u8> = predict_dataset(&model, &test).iter().map(|p| p.label).collect();
    let rep = report(&test.labels(), &pred).unwrap();
    let (r0, r1) = (rep.class0.recall, rep.class1.recall);
    Outcome::new(
        r1 <= 0.10 && r0 >= 0.85,
        format!("recall θ=0 {r0:.3} (>= 0.85), θ=1 {r1:.3} (<= 0.10), unweighted"),
    )
}

// ---------------------------------------------------------------- 7

fn c7_moments() -> Outcome {
    let start = Instant::now();
    let n = 100_000;
    let sampler = SubordinatorSpec::cpe(2.0, 4.0).increments(1.0).unwrap();
    let mut r = rng::stream(77, 0);
    let xs: Vec<f64> = (0..n).map(|_| sampler.sample(&mut r)).collect();
    let nf = n as f64;
    let mean = xs.iter().sum::<f64>() / nf;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (nf - 1.0);
    let m4 = xs.iter().map(|x| (x - mean).powi(4)).sum::<f64>() / nf;
    let se_mean = (var / nf).sqrt();
    let se_var = ((m4 - var * var) / nf).sqrt();
    let (z_mean, z_var) = ((mean - 0.5).abs() / se_mean, (var - 0.25).abs() / se_var);
    let (fast, timing) = within_budget(start.elapsed(), 10.0);
    Outcome::new(
        z_mean <= 3.0 && z_var <= 3.0 && fast,
        format!("mean {mean:.4} ({z_mean:.2} SE from 0.5), variance {var:.4} ({z_var:.2} SE from 0.25); {timing}"),
    )
}

// ---------------------------------------------------------------- 8, 9

fn mc_settings() -> DecaySettings {
    DecaySettings {
        dt: DAY,
        n_paths: 100_000,
        seed: 0,
        threads: 0,
    }
}

fn z_scores(rows: &[DecayRow]) -> Vec<(f64, f64, f64, f64)> {
    rows.iter()
        .map(|r| {
            let (mc, se) = (r.mc_corr.unwrap(), r.mc_se.unwrap());
            (r.t, r.formula_corr, mc, (mc - r.formula_corr).abs() / se)
        })
        .collect()
}

fn describe(z: &[(f64, f64, f64, f64)]) -> String {
    z.iter()
        .map(|(t, f, mc, z)| format!("t={t}: formula {f:.4}, mc {mc:.4}, {z:.2} SE"))
        .collect::<Vec<_>>()
        .join("; ")
}

fn c8_classical() -> Outcome {
    let start = Instant::now();
    let params = BnsParams::default();
    let rows = decay_profile(&params, SimModel::Classical, 1.0, &[2.0, 5.0], &mc_settings()).unwrap();
    let z = z_scores(&rows);
    let (fast, timing) = within_budget(start.elapsed(), 120.0);
    Outcome::new(
        z.iter().all(|r| r.3 <= 3.0) && fast,
        format!("s=1, 1e5 paths; {}; {timing}", describe(&z)),
    )
}

fn reductions_hold() -> Result<(), String> {
    let p = BnsParams::default();
    let zb = p.zb_spec.unwrap();
    let as_zb = BnsParams {
        z_spec: zb,
        zb_spec: None,
        ..p.clone()
    };
    let grid = SimGrid::with_step(5.0, DAY).unwrap();

    let refined0 = expected_variance_path(&p, SimModel::Refined, 0.0, grid).unwrap();
    let classical = expected_variance_path(&p, SimModel::Classical, 0.0, grid).unwrap();
    let refined1 = expected_variance_path(&p, SimModel::Refined, 1.0, grid).unwrap();
    let classical_b = expected_variance_path(&as_zb, SimModel::Classical, 0.0, grid).unwrap();
    for t in [1.5, 2.0, 3.0, 5.0] {
        let a = corr_refined(&CorrInputs::from_variance_path(&refined0, grid, 1.0, t, &p, 0.0).unwrap()).unwrap();
        let b = corr_classical(&CorrInputs::from_variance_path(&classical, grid, 1.0, t, &p, 0.0).unwrap()).unwrap();
        if a.to_bits() != b.to_bits() {
            return Err(format!("θ=0 formula at t={t}: {a} vs {b}"));
        }
        let a = corr_refined(&CorrInputs::from_variance_path(&refined1, grid, 1.0, t, &p, 1.0).unwrap()).unwrap();
        let b =
            corr_classical(&CorrInputs::from_variance_path(&classical_b, grid, 1.0, t, &as_zb, 0.0).unwrap()).unwrap();
        if a.to_bits() != b.to_bits() {
            return Err(format!("θ=1 formula at t={t}: {a} vs {b}"));
        }
    }

    let sim = |params: &BnsParams, theta: f64, model: SimModel| {
        Simulator::new(params, &ThetaSchedule::constant(theta).unwrap(), model, grid).unwrap()
    };
    let aligned = StreamLayout {
        z: Source::Zb,
        ..StreamLayout::default()
    };
    let pairs = [
        (
            sim(&p, 0.0, SimModel::Refined),
            sim(&p, 0.0, SimModel::Classical),
            StreamLayout::default(),
            "θ=0",
        ),
        (
            sim(&p, 1.0, SimModel::Refined),
            sim(&as_zb, 0.0, SimModel::Classical),
            aligned,
            "θ=1",
        ),
    ];
    for (refined, classical, layout, name) in pairs {
        for path_id in 0..20 {
            let a = refined.path(5, path_id, StreamLayout::default());
            let b = classical.path(5, path_id, layout);
            let same =
                |u: &[f64], v: &[f64]| u.len() == v.len() && u.iter().zip(v).all(|(x, y)| x.to_bits() == y.to_bits());
            if !(same(&a.x, &b.x) && same(&a.sigma_sq, &b.sigma_sq)) {
                return Err(format!("{name} path {path_id} differs"));
            }
        }
    }
    Ok(())
}

fn c9_refined() -> Outcome {
    let start = Instant::now();
    let mut parts = Vec::new();
    let mut pass = true;
    for theta in [0.3, 0.7] {
        let params = BnsParams {
            theta,
            ..BnsParams::default()
        };
        let rows = decay_profile(&params, SimModel::Refined, 1.0, &[2.0, 5.0], &mc_settings()).unwrap();
        let z = z_scores(&rows);
        pass &= z.iter().all(|r| r.3 <= 3.0);
        parts.push(format!("θ={theta}: {}", describe(&z)));
    }
    let reductions = reductions_hold();
    if let Err(e) = &reductions {
        parts.push(format!("reduction broken: {e}"));
    } else {
        parts.push("θ=0/θ=1 formulas and 20 paths bit-identical".into());
    }
    let (fast, timing) = within_budget(start.elapsed(), 180.0);
    Outcome::new(
        pass && reductions.is_ok() && fast,
        format!("{}; {timing}", parts.join("; ")),
    )
}

// ---------------------------------------------------------------- 10

fn c10_decay() -> Outcome {
    let ts: Vec<f64> = (1..=20).map(|i| 1.0 + 0.45 * i as f64).collect();
    let classical: Vec<f64> = ts
        .iter()
        .map(|&t| corr_classical(&CorrInputs::constant_variance(1.0, t, 0.04, -0.5, 1.0, 0.0, 0.5, 0.0)).unwrap())
        .collect();
    let decreasing = classical.windows(2).all(|w| w[1] < w[0]);
    let worst = ts
        .iter()
        .map(|&t| {
            let c = corr_classical(&CorrInputs::constant_variance(1.0, t, 0.04, 0.0, 1.0, 0.0, 0.5, 0.0)).unwrap();
            (c - (1.0 / t).sqrt()).abs()
        })
        .fold(0.0, f64::max);
    Outcome::new(
        decreasing && worst <= 1e-12,
        format!(
            "t in [{:.2}, {:.2}]: strictly decreasing {decreasing} ({:.4} -> {:.4}); ρ=0 max |corr - √(s/t)| {worst:.1e}",
            ts[0],
            ts[19],
            classical[0],
            classical[19]
        ),
    )
}

// ---------------------------------------------------------------- 11

fn dir_contents(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (
                e.file_name().to_string_lossy().into_owned(),
                std::fs::read(e.path()).unwrap(),
            )
        })
        .collect()
}

fn c11_reproducible() -> Outcome {
    let data = vendor_path().unwrap_or_else(fixture_path);
    let root = tempfile::tempdir().unwrap();
    let run = |name: &str, threads: &str| {
        let out = root.path().join(name);
        let status = bns()
            .args(["pipeline", "--seed", "11", "--threads", threads, "--data"])
            .arg(&data)
            .arg("--out")
            .arg(&out)
            .status()
            .unwrap();
        assert!(status.success(), "pipeline {name} failed");
        dir_contents(&out)
    };
    let a = run("a", "1");
    let b = run("b", "1");
    let c = run("c", "8");
    let diff = |x: &BTreeMap<String, Vec<u8>>, y: &BTreeMap<String, Vec<u8>>| {
        if x.keys().ne(y.keys()) {
            return vec!["file sets differ".to_string()];
        }
        x.iter()
            .filter(|(k, v)| y[*k] != **v)
            .map(|(k, _)| k.clone())
            .collect::<Vec<_>>()
    };
    let (rerun, threads) = (diff(&a, &b), diff(&a, &c));
    let bytes: usize = a.values().map(Vec::len).sum();
    Outcome::new(
        rerun.is_empty() && threads.is_empty() && a.len() > 5,
        format!(
            "{} files, {bytes} bytes; rerun differs in {:?}, 1 vs 8 threads differs in {:?}",
            a.len(),
            rerun,
            threads
        ),
    )
}

fn main() -> ExitCode {
    let criteria: [Criterion; 11] = [
        ("summary statistics", c1_stats),
        ("split supports", c2_supports),
        ("labeler oracle", c3_labeler),
        ("gradient checks", c4_gradients),
        ("learner sanity", c5_learners),
        ("LR recall pattern", c6_lr_pattern),
        ("subordinator moments", c7_moments),
        ("classical correlation vs Monte Carlo", c8_classical),
        ("refined correlation vs Monte Carlo, reductions", c9_refined),
        ("decay property", c10_decay),
        ("pipeline reproducibility", c11_reproducible),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.into_iter().enumerate() {
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Outcome::new(false, format!("panicked: {msg}"))
        });
        failed += usize::from(!outcome.pass);
        println!(
            "{} {:>2} {name}: {}",
            if outcome.pass { "PASS" } else { "FAIL" },
            i + 1,
            outcome.detail
        );
    }
    println!("{} of 11 criteria passed", 11 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
