//! End-to-end acceptance checks, one test per criterion. Each prints a
//! single pass line once its assertions and time budget hold.

use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use streamlearn::audit::{
    audit_expert_bound, audit_hedge_step_inequality, audit_matrix_step_inequality,
    audit_pca_bound, audit_simplex_var_bound, audit_unit_var_bound,
    audit_variance_step_inequality,
};
use streamlearn::comparators::interval_oracle_pca;
use streamlearn::experts::{ExpertLearner, LossVector, StaticExpertLearner};
use streamlearn::harness::{generate_toy_switching, run_on_data, ExperimentConfig, Scenario};
use streamlearn::linalg::{
    matrix_exp_normalized, matrix_log, sym_eigen, top_k_projection, DensityMatrix,
    ProjectionMatrix, SymMatrix, EIG_FLOOR,
};
use streamlearn::pca::{DataPoint, PcaLearner, StaticPcaLearner};
use streamlearn::simplex::{cap, decompose, relative_entropy, CappedSimplexVector};
use streamlearn::variance::{CovarianceMatrix, UnitVarianceLearner};

fn random_simplex(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let draws: Vec<f64> = (0..n).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
    let total: f64 = draws.iter().sum();
    draws.iter().map(|&d| d / total.max(1e-300)).collect()
}

fn random_orthonormal(n: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let g = DMatrix::from_fn(n, n, |_, _| rng.sample::<f64, _>(StandardNormal));
    g.qr().q()
}

fn random_point(n: usize, rng: &mut ChaCha8Rng) -> DataPoint {
    let g = DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
    let scale = rng.random::<f64>() / g.norm().max(1e-12);
    DataPoint::from_vector(g * scale).unwrap()
}

fn random_cov(n: usize, rng: &mut ChaCha8Rng) -> CovarianceMatrix {
    let g = DMatrix::from_fn(n, n, |_, _| rng.sample::<f64, _>(StandardNormal));
    let sym = SymMatrix::new(&g * g.transpose()).unwrap();
    let top = sym_eigen(&sym).unwrap().value(0).max(1e-12);
    CovarianceMatrix::try_new(sym.scale(1.0 / top)).unwrap()
}

/// Exhaustive search over every cap-set structure: entries in `mask` sit at
/// the cap, the rest share the leftover mass in proportion to `w`. The true
/// entropy projection has this shape for some mask, so the feasible minimum
/// over all masks is the exact answer.
fn projection_oracle(w: &[f64], d: usize) -> (Vec<f64>, f64) {
    let n = w.len();
    let cap_val = 1.0 / d as f64;
    let mut best: Option<(Vec<f64>, f64)> = None;
    for mask in 0u32..(1u32 << n) {
        let size = mask.count_ones() as usize;
        if size > d {
            continue;
        }
        let rest_total: f64 = (0..n)
            .filter(|i| mask & (1 << i) == 0)
            .map(|i| w[i])
            .sum();
        let mut u = vec![0.0; n];
        let mut feasible = true;
        if size == d {
            for (i, slot) in u.iter_mut().enumerate() {
                *slot = if mask & (1 << i) != 0 { cap_val } else { 0.0 };
            }
        } else {
            if rest_total <= 0.0 {
                continue;
            }
            let rest_mass = 1.0 - size as f64 * cap_val;
            for i in 0..n {
                if mask & (1 << i) != 0 {
                    u[i] = cap_val;
                } else {
                    u[i] = rest_mass * w[i] / rest_total;
                    if u[i] > cap_val + 1e-12 {
                        feasible = false;
                        break;
                    }
                }
            }
        }
        if !feasible {
            continue;
        }
        let re = relative_entropy(&u, w).unwrap();
        if best.as_ref().is_none_or(|(_, b)| re < *b) {
            best = Some((u, re));
        }
    }
    best.expect("the all-capped mask is always feasible")
}

#[test]
fn criterion_1_capping_matches_the_exhaustive_projection_oracle() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1001);
    for case in 0..1000 {
        let n = 3 + (rng.random::<u32>() as usize) % 5;
        let d = 1 + (rng.random::<u32>() as usize) % (n - 1);
        let w = random_simplex(n, &mut rng);
        let capped = cap(&w, d).unwrap();
        let (oracle, oracle_re) = projection_oracle(&w, d);
        for (i, (&a, &b)) in capped.weights().iter().zip(oracle.iter()).enumerate() {
            assert!(
                (a - b).abs() <= 1e-9,
                "case {case}: coordinate {i} differs, cap {a} vs oracle {b}"
            );
        }
        let re = relative_entropy(capped.weights(), &w).unwrap();
        assert!(
            re <= oracle_re + 1e-12,
            "case {case}: cap entropy {re} above oracle {oracle_re}"
        );
    }
    assert!(start.elapsed() < Duration::from_secs(10));
    println!(
        "criterion 1 PASS: capping matches the exhaustive entropy-projection oracle on 1000 random cases"
    );
}

fn adversarial_capped(n: usize, d: usize, rng: &mut ChaCha8Rng) -> CappedSimplexVector {
    let cap_val = 1.0 / d as f64;
    let at_cap = 1 + (rng.random::<u32>() as usize) % d;
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(rng);
    let mut v = vec![0.0; n];
    for &i in &idx[..at_cap] {
        v[i] = cap_val;
    }
    let share = ((1.0 - at_cap as f64 * cap_val) / (n - at_cap) as f64).max(0.0);
    for &i in &idx[at_cap..] {
        v[i] = share;
    }
    CappedSimplexVector::try_new(v, d).unwrap()
}

#[test]
fn criterion_2_decomposition_reconstructs_capped_vectors() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1002);
    for case in 0..1000 {
        let n = 3 + (rng.random::<u32>() as usize) % 6;
        let d = 1 + (rng.random::<u32>() as usize) % (n - 1);
        let capped = if case % 5 == 0 {
            adversarial_capped(n, d, &mut rng)
        } else {
            cap(&random_simplex(n, &mut rng), d).unwrap()
        };
        let mix = decompose(&capped).unwrap();
        assert!(mix.len() <= n, "case {case}: {} corners for n = {n}", mix.len());
        let mut total = 0.0;
        for (p, corner) in mix.terms() {
            assert!(*p > 0.0, "case {case}: non-positive corner weight");
            assert_eq!(corner.degree(), d, "case {case}: corner of wrong degree");
            total += p;
        }
        assert!((total - 1.0).abs() <= 1e-9, "case {case}: weights sum to {total}");
        let rebuilt = mix.reconstruct();
        for (i, (&a, &b)) in rebuilt.iter().zip(capped.weights().iter()).enumerate() {
            assert!(
                (a - b).abs() <= 1e-9,
                "case {case}: coordinate {i} rebuilt as {a}, expected {b}"
            );
        }
    }
    assert!(start.elapsed() < Duration::from_secs(5));
    println!(
        "criterion 2 PASS: corner decompositions rebuild 1000 capped vectors within 1e-9"
    );
}

#[test]
fn criterion_3_sampled_losses_match_expectations() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1003);
    let draws = 100_000;

    for state in 0..10 {
        let (n, k) = (5, 2);
        let mut learner = PcaLearner::new(n, k, 0.8 + rng.random::<f64>(), 1e-3).unwrap();
        for _ in 0..(3 + state % 4) {
            learner.update(&random_point(n, &mut rng)).unwrap();
        }
        let x = random_point(n, &mut rng);
        let expected = learner.expected_loss(&x).unwrap();
        let (mut sum, mut sumsq) = (0.0, 0.0);
        for _ in 0..draws {
            let p = learner.choose(&mut rng).unwrap();
            let loss = p.compression_loss(x.vector());
            sum += loss;
            sumsq += loss * loss;
        }
        let mean = sum / draws as f64;
        let var = ((sumsq - sum * sum / draws as f64) / (draws as f64 - 1.0)).max(0.0);
        let tol = 3.0 * (var / draws as f64).sqrt() + 1e-12;
        assert!(
            (mean - expected).abs() <= tol,
            "projection state {state}: mean {mean}, expected {expected}, tol {tol}"
        );
    }

    for state in 0..10 {
        let n = 4;
        let mut learner = UnitVarianceLearner::new(n, 0.9, 1e-3).unwrap();
        for _ in 0..(2 + state % 4) {
            learner.update(&random_cov(n, &mut rng)).unwrap();
        }
        let c = random_cov(n, &mut rng);
        let expected = learner.expected_loss(&c).unwrap();
        let (mut sum, mut sumsq) = (0.0, 0.0);
        for _ in 0..draws {
            let v = learner.choose(&mut rng).unwrap();
            let loss = c.matrix().quadratic_form(&v);
            sum += loss;
            sumsq += loss * loss;
        }
        let mean = sum / draws as f64;
        let var = ((sumsq - sum * sum / draws as f64) / (draws as f64 - 1.0)).max(0.0);
        let tol = 3.0 * (var / draws as f64).sqrt() + 1e-12;
        assert!(
            (mean - expected).abs() <= tol,
            "direction state {state}: mean {mean}, expected {expected}, tol {tol}"
        );
    }

    assert!(start.elapsed() < Duration::from_secs(30));
    println!(
        "criterion 3 PASS: sampled losses match expected losses within 3 sigma on 20 states"
    );
}

#[test]
fn criterion_4_measured_regret_stays_under_the_bounds() {
    let start = Instant::now();

    let experts = audit_expert_bound(10, 3, 200, 20, 41).unwrap();
    for trial in &experts {
        assert!(
            trial.holds,
            "expert trial {}: measured {} vs bound {} on {:?}",
            trial.trial, trial.measured, trial.bound, trial.interval
        );
    }
    let pca = audit_pca_bound(8, 2, 150, 10, 43).unwrap();
    for trial in &pca {
        assert!(
            trial.holds,
            "projection trial {}: measured {} vs bound {} on {:?}",
            trial.trial, trial.measured, trial.bound, trial.interval
        );
    }
    let unit = audit_unit_var_bound(6, 200, 10, 47).unwrap();
    for trial in &unit {
        assert!(
            trial.holds,
            "unit-variance trial {}: measured {} vs bound {} on {:?}",
            trial.trial, trial.measured, trial.bound, trial.interval
        );
    }
    let simplex = audit_simplex_var_bound(6, 200, 10, 53).unwrap();
    for trial in &simplex {
        assert!(
            trial.holds,
            "simplex-variance trial {}: measured {} vs bound {} on {:?}",
            trial.trial, trial.measured, trial.bound, trial.interval
        );
    }

    let total = experts.len() + pca.len() + unit.len() + simplex.len();
    assert!(start.elapsed() < Duration::from_secs(120));
    println!(
        "criterion 4 PASS: measured interval regret stays under the bound in {total}/{total} trials across four audits"
    );
}

#[test]
fn criterion_5_per_step_inequalities_hold() {
    let start = Instant::now();

    let hedge = audit_hedge_step_inequality(10, 3, 300, 59, 1e-9).unwrap();
    assert!(
        hedge.holds,
        "weight-space inequality violated by {}",
        hedge.worst_gap
    );
    let matrix = audit_matrix_step_inequality(8, 2, 200, 61, 1e-8).unwrap();
    assert!(
        matrix.holds,
        "density-space inequality violated by {}",
        matrix.worst_gap
    );
    let variance = audit_variance_step_inequality(6, 200, 67, 1e-8).unwrap();
    assert!(
        variance.holds,
        "variance inequality violated by {}",
        variance.worst_gap
    );

    assert!(start.elapsed() < Duration::from_secs(30));
    println!(
        "criterion 5 PASS: per-step inequalities hold with worst gaps {:.2e}, {:.2e}, {:.2e}",
        hedge.worst_gap, matrix.worst_gap, variance.worst_gap
    );
}

#[test]
fn criterion_6_switching_stream_reproduction() {
    let start = Instant::now();
    let (n, k, intervals, samples) = (20usize, 2usize, 3usize, 200usize);
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    rng.set_stream(0);
    let data = generate_toy_switching(n, intervals, samples, 2, &mut rng).unwrap();
    let cfg = ExperimentConfig {
        n,
        k,
        eta: 1.0,
        alpha: 1e-5,
        seed: 42,
        scenario: Scenario::Dataset,
        compute_regret: false,
    };
    let report = run_on_data(&cfg, &data).unwrap();
    let adaptive = &report.algos[0];
    let fixed = &report.algos[1];
    assert_eq!(adaptive.name, "adaptive_pca");
    assert_eq!(fixed.name, "static_pca");

    let adaptive_total = *adaptive.cum_expected.last().unwrap();
    let fixed_total = *fixed.cum_expected.last().unwrap();
    assert!(
        adaptive_total < fixed_total,
        "adaptive total {adaptive_total} not below static total {fixed_total}"
    );

    let whole = interval_oracle_pca(&data, 1, data.len(), k).unwrap();
    let mut per_block = 0.0;
    for block in 0..intervals {
        per_block +=
            interval_oracle_pca(&data, block * samples + 1, (block + 1) * samples, k).unwrap();
    }
    assert!(
        per_block < whole,
        "per-block oracle {per_block} not below whole-stream oracle {whole}"
    );

    for &switch in &[samples, 2 * samples] {
        let recovered = adaptive.expected[switch..switch + 100]
            .iter()
            .zip(fixed.expected[switch..switch + 100].iter())
            .any(|(a, s)| a < s);
        assert!(recovered, "no recovery within 100 steps of step {}", switch + 1);
    }

    assert!(start.elapsed() < Duration::from_secs(60));
    println!(
        "criterion 6 PASS: on the switching stream the share-mixing learner beats the static one overall and recovers after both switches"
    );
}

#[test]
fn criterion_7_zero_share_reduces_to_the_static_learners() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1007);

    let (n, k, eta) = (6, 2, 0.9);
    let mut adaptive = ExpertLearner::new(n, k, eta, 0.0).unwrap();
    let mut fixed = StaticExpertLearner::new(n, k, eta).unwrap();
    for step in 0..100u64 {
        let losses: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
        let lv = LossVector::try_new(losses).unwrap();
        adaptive.update(&lv).unwrap();
        fixed.update(&lv).unwrap();
        for (a, b) in adaptive
            .weights()
            .weights()
            .iter()
            .zip(fixed.weights().weights().iter())
        {
            assert_eq!(a.to_bits(), b.to_bits(), "expert weights diverged at step {step}");
        }
        let mut ra = ChaCha8Rng::seed_from_u64(5000 + step);
        let mut rb = ChaCha8Rng::seed_from_u64(5000 + step);
        let ca = adaptive.select(&mut ra).unwrap();
        let cb = fixed.select(&mut rb).unwrap();
        assert_eq!(ca.subset, cb.subset, "sampled subsets diverged at step {step}");
    }

    let (n, k, eta) = (5, 2, 1.2);
    let mut adaptive = PcaLearner::new(n, k, eta, 0.0).unwrap();
    let mut fixed = StaticPcaLearner::new(n, k, eta).unwrap();
    for step in 0..50u64 {
        let x = random_point(n, &mut rng);
        adaptive.update(&x).unwrap();
        fixed.update(&x).unwrap();
        let a = adaptive.density().matrix().matrix();
        let b = fixed.density().matrix().matrix();
        assert!(
            a.iter().zip(b.iter()).all(|(x, y)| x.to_bits() == y.to_bits()),
            "densities diverged at step {step}"
        );
        let mut ra = ChaCha8Rng::seed_from_u64(9000 + step);
        let mut rb = ChaCha8Rng::seed_from_u64(9000 + step);
        let pa = adaptive.choose(&mut ra).unwrap();
        let pb = fixed.choose(&mut rb).unwrap();
        assert!(
            pa.matrix()
                .matrix()
                .iter()
                .zip(pb.matrix().matrix().iter())
                .all(|(x, y)| x.to_bits() == y.to_bits()),
            "sampled projections diverged at step {step}"
        );
    }

    assert!(start.elapsed() < Duration::from_secs(10));
    println!(
        "criterion 7 PASS: zero share rate reproduces the static learners bit for bit, samples included"
    );
}

#[test]
fn criterion_8_spectral_round_trips_and_top_k_optimality() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1008);
    let n = 6;

    for case in 0..50 {
        let basis = random_orthonormal(n, &mut rng);
        let raw: Vec<f64> = (0..n).map(|_| 0.02 + rng.random::<f64>()).collect();
        let total: f64 = raw.iter().sum();
        let spectrum: Vec<f64> = raw.iter().map(|&v| v / total).collect();
        let density = DensityMatrix::from_spectrum(&basis, &spectrum).unwrap();
        let log = matrix_log(&density, EIG_FLOOR).unwrap();
        let back = matrix_exp_normalized(&log).unwrap();
        let gap = (back.matrix().matrix() - density.matrix().matrix()).amax();
        assert!(gap <= 1e-8, "case {case}: round trip off by {gap}");
    }

    for case in 0..50 {
        let g = DMatrix::from_fn(n, n, |_, _| rng.sample::<f64, _>(StandardNormal));
        let scatter = SymMatrix::new(&g * g.transpose()).unwrap();
        let k = 1 + (rng.random::<u32>() as usize) % 3;
        let top = top_k_projection(&scatter, k).unwrap();
        let best = top.matrix().trace_product(&scatter);
        for probe in 0..200 {
            let q = random_orthonormal(n, &mut rng);
            let partial = q.columns(0, k).into_owned();
            let candidate = ProjectionMatrix::from_orthonormal_basis(&partial);
            let captured = candidate.matrix().trace_product(&scatter);
            assert!(
                captured <= best + 1e-9,
                "case {case}, probe {probe}: candidate captures {captured} above {best}"
            );
        }
    }

    assert!(start.elapsed() < Duration::from_secs(10));
    println!(
        "criterion 8 PASS: log/exp round trips stay within 1e-8 and no random projector beats the top-k choice"
    );
}
