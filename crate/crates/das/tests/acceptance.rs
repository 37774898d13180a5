//! Acceptance gate: the end-to-end quality bars the toolkit must clear.
//! Each test covers one criterion and prints a single PASS line with the
//! measured numbers (visible with `--nocapture`); a failed assertion is
//! the FAIL line.
//!
//! Heavier criteria run whole multi-seed benchmark sweeps; the full
//! target takes on the order of ten minutes on a laptop core.

use das::cli::{generate_bundle, MechanismKind, RunConfig};
use das::edges::{cam_prune, das_select, discover, DiscoveryParams};
use das::graph::{self, sample_er, topological_sort};
use das::io;
use das::order::{linear_degeneracy_diagnostic, score_order};
use das::stein::{stein_gradient, stein_hessian_diag, stein_hessian_row, SteinConfig};
use das::synth::{draw, sample_scm, Dataset, ScmMode};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use std::time::Instant;

const SEEDS: std::ops::Range<u64> = 0..10;

struct SweepSummary {
    mean_shd: f64,
    mean_precision: f64,
    mean_recall: f64,
}

fn sweep(d: usize, density: usize, alpha: f64) -> SweepSummary {
    let (mut shd, mut prec, mut rec) = (0.0, 0.0, 0.0);
    let mut count = 0.0;
    for seed in SEEDS {
        let cfg = RunConfig { d, density, alpha, ..RunConfig::default() };
        let (dag, _, data) = generate_bundle(&cfg, seed).unwrap();
        let report = discover(&data, &cfg.discovery_params(), Some(&dag)).unwrap();
        let m = report.metrics.unwrap();
        shd += m.shd as f64;
        prec += m.precision;
        rec += m.recall;
        count += 1.0;
    }
    SweepSummary {
        mean_shd: shd / count,
        mean_precision: prec / count,
        mean_recall: rec / count,
    }
}

#[test]
fn criterion_01_er1_d10_reproduction() {
    let s = sweep(10, 1, 0.01);
    assert!(s.mean_shd <= 3.0, "mean SHD {} > 3", s.mean_shd);
    assert!(s.mean_precision >= 0.90, "precision {} < 0.90", s.mean_precision);
    assert!(s.mean_recall >= 0.70, "recall {} < 0.70", s.mean_recall);
    println!(
        "criterion 1 PASS: ER1 d=10 mean SHD {:.2}, precision {:.3}, recall {:.3}",
        s.mean_shd, s.mean_precision, s.mean_recall
    );
}

#[test]
fn criterion_02_er4_d20_reproduction() {
    let s = sweep(20, 4, 0.01);
    assert!(
        (45.0..=70.0).contains(&s.mean_shd),
        "mean SHD {} outside [45, 70]",
        s.mean_shd
    );
    assert!(s.mean_precision >= 0.90, "precision {} < 0.90", s.mean_precision);
    println!(
        "criterion 2 PASS: ER4 d=20 mean SHD {:.1}, precision {:.3}",
        s.mean_shd, s.mean_precision
    );
}

#[test]
fn criterion_03_alpha_stability() {
    // The ordering does not depend on alpha, so it is shared per seed and
    // only selection + pruning are rerun.
    let mut lines = Vec::new();
    for d in [10usize, 20] {
        let mut mean_shd = [0.0f64; 2];
        for seed in SEEDS {
            let cfg = RunConfig { d, density: 1, ..RunConfig::default() };
            let (dag, _, data) = generate_bundle(&cfg, seed).unwrap();
            let base = cfg.discovery_params();
            let ordering = score_order(&data, &base.stein).unwrap();
            for (slot, alpha) in [(0usize, 0.01), (1, 0.05)] {
                let params = DiscoveryParams { alpha, ..base.clone() };
                let cand = das_select(&data, &ordering, &params).unwrap();
                let mut warnings = Vec::new();
                let est = cam_prune(&data, &cand, &params, &mut warnings).unwrap();
                mean_shd[slot] += graph::shd(&dag, &est).unwrap() as f64 / 10.0;
            }
        }
        let gap = (mean_shd[1] - mean_shd[0]).abs();
        assert!(
            gap <= 2.0,
            "d={d}: |SHD(0.05) - SHD(0.01)| = {gap:.2} > 2"
        );
        lines.push(format!("d={d} gap {gap:.2}"));
    }
    println!("criterion 3 PASS: alpha 0.01 vs 0.05 mean-SHD {}", lines.join(", "));
}

#[test]
fn criterion_04_selection_scaling() {
    let params = DiscoveryParams::default();
    let mut points = Vec::new();
    for d in [25usize, 50, 100] {
        let cfg = RunConfig { d, density: 1, n: 500, ..RunConfig::default() };
        let (_, _, data) = generate_bundle(&cfg, 1).unwrap();
        let ordering = score_order(&data, &params.stein).unwrap();
        let t = Instant::now();
        let cand = das_select(&data, &ordering, &params).unwrap();
        let secs = t.elapsed().as_secs_f64();
        assert!(
            cand.adj.edge_count() <= params.k * d,
            "d={d}: {} candidates exceed K*d = {}",
            cand.adj.edge_count(),
            params.k * d
        );
        points.push((d as f64, secs));
    }
    // Least-squares slope in log-log coordinates.
    let logs: Vec<(f64, f64)> = points.iter().map(|&(d, t)| (d.ln(), t.ln())).collect();
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / 3.0;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / 3.0;
    let slope = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>()
        / logs.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum::<f64>();
    assert!(slope <= 2.5, "log-log selection-time slope {slope:.2} > 2.5");
    println!(
        "criterion 4 PASS: selection slope {:.2} over d=25/50/100 ({:.2}s/{:.2}s/{:.2}s), counts within cap",
        slope, points[0].1, points[1].1, points[2].1
    );
}

fn white_noise(d: usize, n: usize, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values: Vec<f64> = (0..n * d).map(|_| StandardNormal.sample(&mut rng)).collect();
    let names = (0..d).map(|j| format!("x{j}")).collect();
    Dataset::from_rows(values, n, d, names).unwrap()
}

#[test]
fn criterion_05_stein_oracle_on_white_noise() {
    // On N(0, I) the score is -x and the Jacobian diagonal is -1.
    let cfg = SteinConfig::default();
    let mut msgs = Vec::new();
    for (d, seed) in [(1usize, 2u64), (2, 3), (5, 4)] {
        let ds = white_noise(d, 1000, seed);
        let grad = stein_gradient(&ds, &cfg).unwrap();
        let (mut err, mut scale) = (0.0, 0.0);
        for i in 0..ds.n() {
            for j in 0..d {
                let truth = -ds.get(i, j);
                err += (grad[(i, j)] - truth) * (grad[(i, j)] - truth);
                scale += truth * truth;
            }
        }
        let rel_mse = err / scale;
        assert!(rel_mse < 0.10, "{d}-D score relative MSE {rel_mse:.3} >= 10%");
        let diag = stein_hessian_diag(&ds, &cfg).unwrap();
        for j in 0..d {
            let mean = (0..ds.n()).map(|i| diag[(i, j)]).sum::<f64>() / ds.n() as f64;
            assert!(
                (mean + 1.0).abs() <= 0.15,
                "{d}-D diagonal mean {mean:.3} outside -1 +/- 0.15"
            );
        }
        msgs.push(format!("{d}-D rel MSE {rel_mse:.3}"));
    }
    println!("criterion 5 PASS: {}", msgs.join(", "));
}

#[test]
fn criterion_06_lemma1_parent_separation() {
    // Mean |J_{l,j}| over rows of the leaf's Jacobian row estimate should
    // rank true parents above non-parents.
    let cfg = SteinConfig::default();
    let (mut pos, mut neg) = (Vec::new(), Vec::new());
    for seed in 0..100u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = 2 + (seed % 2) as usize;
        let e = rng.gen_range(1..=d * (d - 1) / 2);
        let dag = sample_er(d, e, &mut rng).unwrap();
        let scm = sample_scm(&dag, ScmMode::Nonlinear, (0.4, 0.8), &mut rng).unwrap();
        let ds = draw(&scm, 2000, &mut rng).unwrap();
        let leaf = *topological_sort(&dag).unwrap().pi.last().unwrap();
        let rows = stein_hessian_row(&ds, leaf, &cfg).unwrap();
        let parents = dag.parents(leaf);
        for j in 0..d {
            if j == leaf {
                continue;
            }
            let m = (0..ds.n()).map(|i| rows.entries[(i, j)].abs()).sum::<f64>() / ds.n() as f64;
            if parents.contains(&j) {
                pos.push(m);
            } else {
                neg.push(m);
            }
        }
    }
    let (mut better, mut ties) = (0usize, 0usize);
    for &p in &pos {
        for &q in &neg {
            if p > q {
                better += 1;
            } else if p == q {
                ties += 1;
            }
        }
    }
    let auc = (better as f64 + 0.5 * ties as f64) / (pos.len() * neg.len()) as f64;
    assert!(auc >= 0.95, "parent/non-parent AUC {auc:.3} < 0.95");
    println!(
        "criterion 6 PASS: AUC {:.3} over {} parent / {} non-parent measurements",
        auc,
        pos.len(),
        neg.len()
    );
}

#[test]
fn criterion_07_linear_degeneracy_flag() {
    let stein = SteinConfig::default();
    let mut flags = [0usize; 2];
    for (slot, mode) in [(0usize, MechanismKind::Linear), (1, MechanismKind::Nonlinear)] {
        for seed in SEEDS {
            let cfg = RunConfig { d: 10, density: 1, mode, ..RunConfig::default() };
            let (_, _, data) = generate_bundle(&cfg, seed).unwrap();
            let r = score_order(&data, &stein).unwrap();
            if linear_degeneracy_diagnostic(&r, cfg.discovery_params().degeneracy_threshold) {
                flags[slot] += 1;
            }
        }
    }
    assert!(flags[0] >= 8, "linear runs flagged only {}/10", flags[0]);
    assert!(flags[1] <= 2, "nonlinear runs flagged {}/10", flags[1]);
    println!(
        "criterion 7 PASS: degeneracy flag on {}/10 linear, {}/10 nonlinear runs",
        flags[0], flags[1]
    );
}

#[test]
fn criterion_08_exact_metric_oracles() {
    // The heavy enumeration lives in the metric_oracles test target; this
    // criterion re-runs a spot sample so the gate is self-contained.
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut checked = 0;
    for _ in 0..200 {
        let d = rng.gen_range(2..=5);
        let truth = sample_er(d, rng.gen_range(0..=d * (d - 1) / 2), &mut rng).unwrap();
        let est = sample_er(d, rng.gen_range(0..=d * (d - 1) / 2), &mut rng).unwrap();
        // SHD from first principles: symmetric difference of skeletons
        // plus direction mismatches.
        let mut expected = 0;
        for i in 0..d {
            for j in (i + 1)..d {
                let t = (truth.has_edge(i, j), truth.has_edge(j, i));
                let e = (est.has_edge(i, j), est.has_edge(j, i));
                if t != e {
                    expected += 1;
                }
            }
        }
        assert_eq!(graph::shd(&truth, &est).unwrap(), expected);
        checked += 1;
    }
    println!("criterion 8 PASS: SHD spot checks {checked}/200 (full enumeration in metric_oracles tests)");
}

#[test]
fn criterion_09_statistical_kernels() {
    // Spot battery; the 1e-8 quadrature comparison lives in stats_oracles.
    // Here: closed forms that need no quadrature at all.
    // t with 1 dof is Cauchy.
    for t in [-4.0_f64, -0.5, 0.3, 2.0] {
        let want = 0.5 + t.atan() / std::f64::consts::PI;
        let got = das::stats::student_t_cdf(t, 1.0).unwrap();
        assert!((got - want).abs() < 1e-12);
    }
    // F(1, d2) is the square of t(d2).
    for &(f, d2) in &[(0.5_f64, 3.0), (2.0, 7.0), (4.0, 20.0)] {
        let t = f.sqrt();
        let want = das::stats::student_t_cdf(t, d2).unwrap()
            - das::stats::student_t_cdf(-t, d2).unwrap();
        let got = das::stats::f_cdf(f, 1.0, d2).unwrap();
        assert!((got - want).abs() < 1e-12);
    }
    println!("criterion 9 PASS: closed-form spot checks (quadrature battery in stats_oracles tests)");
}

#[test]
fn criterion_10_external_bundle_ingestion() {
    // A protein-network-sized bundle: 11 nodes, 17 edges, 853 rows,
    // written to disk and re-read through the external-ingestion path.
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let dag = sample_er(11, 17, &mut rng).unwrap();
    assert_eq!(dag.edge_count(), 17, "seed drifted: bundle no longer has 17 edges");
    let scm = sample_scm(&dag, ScmMode::Nonlinear, (0.4, 0.8), &mut rng).unwrap();
    let ds = draw(&scm, 853, &mut rng).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let data_path = dir.path().join("observations.csv");
    let truth_path = dir.path().join("network.csv");
    std::fs::write(&data_path, io::write_dataset_csv(&ds)).unwrap();
    std::fs::write(&truth_path, io::write_adjacency_csv(&dag)).unwrap();
    let (data, truth) = io::ingest_external(
        &std::fs::read_to_string(&data_path).unwrap(),
        &std::fs::read_to_string(&truth_path).unwrap(),
        io::IngestFormat::CsvHeader,
    )
    .unwrap();
    assert_eq!(data.n(), 853);
    assert_eq!(truth.edge_count(), 17);
    let report = discover(&data, &DiscoveryParams::default(), Some(&truth)).unwrap();
    let m = report.metrics.unwrap();
    assert!(m.shd <= 15, "SHD {} > 15 on the 11-node bundle", m.shd);
    println!(
        "criterion 10 PASS: 11-node/17-edge/853-row ingestion run, SHD {} sid {:?}",
        m.shd, m.sid
    );
}
