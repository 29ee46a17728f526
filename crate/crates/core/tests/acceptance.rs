//! Acceptance suite: one test per criterion, each printing a PASS/FAIL line
//! (run with `--nocapture` to see them). Statistical criteria use fixed seeds
//! and desk-scale budgets; combinatorial criteria are exhaustive.

use std::sync::{Arc, OnceLock};
use std::time::Instant;

use lamprate_core::cases::{
    select_sigmas, validate_tables, verify_distance_bounds, verify_phi_inequality, CaseTag,
    Selection, TableCase,
};
use lamprate_core::estimators::{
    aggregate_rates, induced_walk_drift, range_law, return_probability, run_trials,
    walk_switch_identity_check, EstimatorConfig, RateEstimates,
};
use lamprate_core::group::{Backend, Element};
use lamprate_core::rational::{rat, rat_to_f64, Rat};
use lamprate_core::tsp::{self, TspConfig, TspMode, TspStrategy};
use lamprate_core::walk::{
    delta_statistics, hitting_skeleton, simulate, trial_seed, Atom, SimOptions, StepMeasure,
    TrajectoryRecord,
};
use num_traits::One;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn banner(ok: bool, what: &str, detail: &str) {
    println!("[{}] {what}: {detail}", if ok { "PASS" } else { "FAIL" });
}

fn uniform_mu0(backend: &Backend) -> Vec<(Element, Rat)> {
    let gens = backend.generators();
    let p = Rat::new(1, gens.len() as i64);
    gens.iter().map(|g| (g.elem.clone(), p)).collect()
}

fn lat(v: i64) -> Element {
    Element::Lattice(vec![v])
}

fn jobs() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

// ---------------------------------------------------------------------------
// Independent oracles (first-step analysis on the d-regular tree)
// ---------------------------------------------------------------------------

/// Return probability of the simple random walk on the d-regular tree:
/// the hitting probability q of a neighbour solves q = 1/d + (d-1)/d * q^2;
/// iterate from below to the minimal root.
fn tree_return_probability(d: u32) -> f64 {
    let d = d as f64;
    let mut q = 0.0f64;
    for _ in 0..10_000 {
        q = 1.0 / d + (d - 1.0) / d * q * q;
    }
    q
}

/// Drift of the simple random walk on the d-regular tree: away with
/// probability (d-1)/d, toward the root with probability 1/d.
fn tree_drift(d: u32) -> f64 {
    let d = d as f64;
    (d - 1.0) / d - 1.0 / d
}

// ---------------------------------------------------------------------------
// Shared fixtures
// ---------------------------------------------------------------------------

struct F2Run {
    measure: StepMeasure,
    records: Vec<TrajectoryRecord>,
    rates: RateEstimates,
}

const F2_HORIZON: u64 = 2000;
const F2_TRIALS: u64 = 400;
const F2_SEED: u64 = 0xF2_2026;

fn f2_run() -> &'static F2Run {
    static RUN: OnceLock<F2Run> = OnceLock::new();
    RUN.get_or_init(|| {
        let backend = Arc::new(Backend::free(2, &[rat(1, 1), rat(1, 1)]).unwrap());
        let measure = StepMeasure::walk_switch(backend.clone(), uniform_mu0(&backend), 2).unwrap();
        let cfg = EstimatorConfig::new(F2_HORIZON, F2_TRIALS, F2_SEED)
            .with_tsp(TspConfig::new(TspStrategy::ExactOnly, 18))
            .with_jobs(jobs());
        let records = run_trials(&measure, &cfg).unwrap();
        let rates = aggregate_rates(&records, rat(0, 1), F2_SEED);
        F2Run {
            measure,
            records,
            rates,
        }
    })
}

fn counterexample_measure(backend: Arc<Backend>, p: Rat) -> StepMeasure {
    let mut atoms = Vec::new();
    for step in 1..=3i64 {
        for lamps in [vec![], vec![(lat(0), 1u32)]] {
            atoms.push(Atom {
                lamps: lamps.clone(),
                step: lat(step),
                prob: p / rat(6, 1),
            });
            atoms.push(Atom {
                lamps,
                step: lat(-step),
                prob: (Rat::one() - p) / rat(6, 1),
            });
        }
    }
    StepMeasure::custom(backend, atoms, 2).unwrap()
}

// ---------------------------------------------------------------------------
// Criterion 1: tour-solver oracle equivalence
// ---------------------------------------------------------------------------

#[test]
fn criterion_1_tsp_oracle_equivalence() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0x0517);
    let mut checked = 0usize;

    let mut rand_len = |rng: &mut ChaCha8Rng| Rat::new(rng.gen_range(1..=12), rng.gen_range(1..=6));

    // Weighted Z lattice.
    {
        let b = Backend::line(&[(1, rand_len(&mut rng)), (2, rand_len(&mut rng))]).unwrap();
        for _ in 0..100 {
            let k = rng.gen_range(0..=8);
            let supp: Vec<Element> = (0..k).map(|_| lat(rng.gen_range(-10..=10))).collect();
            let target = lat(rng.gen_range(-10..=10));
            let dp = tsp::exact_dp(&b, &supp, &target, 18).unwrap();
            let oracle = tsp::bruteforce_oracle(&b, &supp, &target).unwrap();
            assert_eq!(dp.value, oracle, "Z instance diverged from the oracle");
            checked += 1;
        }
    }

    // Free group and Z2*Z2 with rational letter lengths.
    let f2 = Backend::free(2, &[rand_len(&mut rng), rand_len(&mut rng)]).unwrap();
    let c2 = Backend::c2c2(rand_len(&mut rng), rand_len(&mut rng)).unwrap();
    for b in [&f2, &c2] {
        for _ in 0..100 {
            let word = |rng: &mut ChaCha8Rng| {
                let len = rng.gen_range(0..=7);
                let mut w = b.identity();
                for _ in 0..len {
                    let g = &b.generators()[rng.gen_range(0..b.generators().len())];
                    w = b.multiply(&w, &g.elem);
                }
                w
            };
            let k = rng.gen_range(0..=8);
            let supp: Vec<Element> = (0..k).map(|_| word(&mut rng)).collect();
            let target = word(&mut rng);
            let dp = tsp::exact_dp(b, &supp, &target, 18).unwrap();
            let oracle = tsp::bruteforce_oracle(b, &supp, &target).unwrap();
            assert_eq!(dp.value, oracle, "tree instance diverged from the oracle");
            let tree = tsp::exact_tree(b, &supp, &target).unwrap();
            assert_eq!(tree.value, oracle, "closed form diverged from the oracle");
            checked += 1;
        }
    }

    // Tree closed form against the DP on larger supports.
    for _ in 0..100 {
        let word = |rng: &mut ChaCha8Rng| {
            let len = rng.gen_range(0..=9);
            let mut w = f2.identity();
            for _ in 0..len {
                let g = &f2.generators()[rng.gen_range(0..f2.generators().len())];
                w = f2.multiply(&w, &g.elem);
            }
            w
        };
        let k = rng.gen_range(0..=12);
        let supp: Vec<Element> = (0..k).map(|_| word(&mut rng)).collect();
        let target = word(&mut rng);
        let tree = tsp::exact_tree(&f2, &supp, &target).unwrap();
        let dp = tsp::exact_dp(&f2, &supp, &target, 18).unwrap();
        assert_eq!(tree.value, dp.value, "closed form diverged from the DP");
        checked += 1;
    }

    let elapsed = start.elapsed();
    assert!(elapsed.as_secs() < 30, "oracle sweep took {elapsed:?}");
    banner(
        true,
        "criterion 1 (tour oracle equivalence)",
        &format!("{checked} instances agreed exactly in {elapsed:?}"),
    );
}

// ---------------------------------------------------------------------------
// Criterion 2: lemma suite
// ---------------------------------------------------------------------------

#[test]
fn criterion_2_lemma_suite() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x7AB1E);
    let mut rand_len = |rng: &mut ChaCha8Rng| Rat::new(rng.gen_range(1..=24), rng.gen_range(1..=6));
    let mut phi_checks = 0usize;

    // Case I realized on the free group and on a lattice.
    for _ in 0..100 {
        let mut ls = [rand_len(&mut rng), rand_len(&mut rng)];
        ls.sort();
        for backend in [
            Backend::free(2, &[ls[0], ls[1]]).unwrap(),
            Backend::hypercubic(3, &[ls[0], ls[1], ls[1]]).unwrap(),
        ] {
            let Selection::Triple(t) = select_sigmas(&backend).unwrap() else {
                panic!("case I selection failed")
            };
            assert_eq!(t.case, CaseTag::I);
            assert!(verify_distance_bounds(&backend, &t).unwrap().all_ok);
            let report = verify_phi_inequality(&backend, &t).unwrap();
            assert_eq!(report.rows.len(), 24);
            assert!(report.all_ok, "case I violation: {report:?}");
            phi_checks += 24;
        }
    }

    // Cases Z-I and Z-II realized on weighted Z.
    for _ in 0..100 {
        let step = [2i64, 3, 5][rng.gen_range(0..3)];
        let l1 = rand_len(&mut rng) + Rat::one();
        let short = l1 * Rat::new(rng.gen_range(1..=7), 8);
        let zi = Backend::line(&[(1, l1), (step, short)]).unwrap();
        let Selection::Triple(t) = select_sigmas(&zi).unwrap() else {
            panic!("Z-I selection failed")
        };
        assert_eq!(t.case, CaseTag::ZI);
        assert!(verify_distance_bounds(&zi, &t).unwrap().all_ok);
        let report = verify_phi_inequality(&zi, &t).unwrap();
        assert!(report.all_ok, "Z-I violation: {report:?}");
        phi_checks += 24;

        // Z-II: l(1) <= l(s) < |s| l(1).
        let num = rng.gen_range(8..(8 * step));
        let long = l1 * Rat::new(num, 8);
        let zii = Backend::line(&[(1, l1), (step, long)]).unwrap();
        match select_sigmas(&zii).unwrap() {
            Selection::Triple(t) => {
                assert_eq!(t.case, CaseTag::ZII);
                assert!(verify_distance_bounds(&zii, &t).unwrap().all_ok);
                let report = verify_phi_inequality(&zii, &t).unwrap();
                assert!(report.all_ok, "Z-II violation: {report:?}");
                phi_checks += 24;
            }
            Selection::DegenerateLinearMetric => {
                unreachable!("l(s) < |s| l(1) was enforced by construction")
            }
        }
    }

    // Printed comparison tables, case by case. Cases II and III need an
    // involution that no torsion-free backend has, so they run in symbolic
    // mode over the lemma-guaranteed distance intervals.
    let mut rows = 0usize;
    for case in [TableCase::I, TableCase::II, TableCase::III, TableCase::ZI] {
        let report = validate_tables(case, 100, 0x600D).unwrap();
        assert!(
            report.all_ok(),
            "table case {case:?} violated: {:?}",
            report.violations.first()
        );
        rows += report.rows_checked;
    }

    banner(
        true,
        "criterion 2 (lemma suite)",
        &format!(
            "{phi_checks} arrangement checks and {rows} table rows, zero violations \
             (cases II/III symbolic: no backend has involutions)"
        ),
    );
}

// ---------------------------------------------------------------------------
// Criteria 3-6: the free-group Walk-Switch experiment
// ---------------------------------------------------------------------------

#[test]
fn criterion_3_walk_switch_identity() {
    let run = f2_run();
    let oracle_return = tree_return_probability(4);
    assert!((oracle_return - 1.0 / 3.0).abs() < 1e-9);
    let oracle_supp = 0.5 * (1.0 - oracle_return);

    let report = walk_switch_identity_check(&run.measure, F2_HORIZON, F2_TRIALS, F2_SEED).unwrap();
    let supp_rate = run.rates.ell_supp.mean;
    let identity_gap = (supp_rate - report.projection_side).abs();
    let supp_vs_oracle = (supp_rate - oracle_supp).abs();
    let proj_vs_oracle = (report.projection_side - oracle_supp).abs();

    // Drift sanity from the same run against the first-step oracle.
    let drift_gap = (run.rates.ell0.mean - tree_drift(4)).abs();

    let ok = identity_gap <= 0.02 && supp_vs_oracle <= 0.02 && proj_vs_oracle <= 0.02;
    banner(
        ok,
        "criterion 3 (walk-switch identity)",
        &format!(
            "supp rate {:.4}, projection side {:.4}, oracle {:.4}; drift {:.4} vs oracle {:.4}",
            supp_rate,
            report.projection_side,
            oracle_supp,
            run.rates.ell0.mean,
            tree_drift(4)
        ),
    );
    assert!(identity_gap <= 0.02, "identity gap {identity_gap}");
    assert!(supp_vs_oracle <= 0.02, "lamp side off oracle {supp_vs_oracle}");
    assert!(proj_vs_oracle <= 0.02, "projection side off oracle {proj_vs_oracle}");
    assert!(drift_gap <= 0.02, "drift off oracle by {drift_gap}");
}

#[test]
fn criterion_4_range_law() {
    let run = f2_run();
    // The cross-check side is a projection-only walk, so it gets ten times
    // the trial budget: the binomial error must sit well inside 0.02.
    let ret =
        return_probability(&run.measure, F2_HORIZON, 10 * F2_TRIALS, F2_SEED ^ 0x7A7E).unwrap();
    let report = range_law(&run.records, Some(&ret));
    let expected = 1.0 - tree_return_probability(4);
    let gap = (report.rate.mean - expected).abs();
    let ok = gap <= 0.02;
    banner(
        ok,
        "criterion 4 (range law)",
        &format!(
            "range rate {:.4} vs 2/3, cross-check gap {:.4}",
            report.rate.mean,
            report.complement_gap.unwrap()
        ),
    );
    assert!(ok, "range rate {} vs {}", report.rate.mean, expected);
    assert!(report.complement_gap.unwrap() <= 0.02);
}

#[test]
fn criterion_5_positive_lamp_rate_iff_transient() {
    // Transient side: the free-group run keeps a positive lamp rate.
    let run = f2_run();
    let transient_lo = run.rates.ell_supp.lo;

    // Recurrent side: the simple Walk-Switch walk on Z.
    let backend = Arc::new(Backend::line(&[(1, rat(1, 1))]).unwrap());
    let measure = StepMeasure::walk_switch(backend.clone(), uniform_mu0(&backend), 2).unwrap();
    let cfg = EstimatorConfig::new(10_000, 100, 0x2EC)
        .with_tsp(TspConfig::new(TspStrategy::ExactOnly, 18))
        .with_jobs(jobs());
    let records = run_trials(&measure, &cfg).unwrap();
    let rates = aggregate_rates(&records, rat(0, 1), 0x2EC);
    let recurrent_supp = rates.ell_supp.mean;

    let ok = transient_lo > 0.0 && recurrent_supp <= 0.02;
    banner(
        ok,
        "criterion 5 (lamp rate vs transience)",
        &format!(
            "transient lower 99% CI {:.4} > 0; recurrent rate {:.5} <= 0.02",
            transient_lo, recurrent_supp
        ),
    );
    assert!(transient_lo > 0.0);
    assert!(recurrent_supp <= 0.02, "recurrent lamp rate {recurrent_supp}");
}

#[test]
fn criterion_6_strict_tour_acceleration() {
    let run = f2_run();
    assert!(run.rates.ts_exact_grade, "tour values must be exact-grade");
    let n = F2_HORIZON as f64;
    let diffs: Vec<f64> = run
        .records
        .iter()
        .map(|r| {
            let last = r.checkpoints.last().unwrap();
            assert_eq!(last.tsp_mode, TspMode::ExactTree);
            (rat_to_f64(last.tsp_value) - rat_to_f64(last.distance)) / n
        })
        .collect();
    let ci = lamprate_core::stats::mean_ci(&diffs, lamprate_core::stats::Z99);
    let ok = ci.lo > 0.0;
    banner(
        ok,
        "criterion 6 (strict tour acceleration)",
        &format!(
            "tour-minus-distance rate {:.4}, lower 99% CI {:.4} > 0",
            ci.mean, ci.lo
        ),
    );
    assert!(ok, "acceleration CI includes zero: {ci:?}");
}

// ---------------------------------------------------------------------------
// Criterion 7: the weighted-line counterexample
// ---------------------------------------------------------------------------

#[test]
fn criterion_7_weighted_line_counterexample() {
    let backend =
        Arc::new(Backend::line(&[(1, rat(1, 1)), (2, rat(3, 1)), (3, rat(5, 1))]).unwrap());
    let p = rat(3, 4);
    let measure = counterexample_measure(backend.clone(), p);
    let cfg = EstimatorConfig::new(10_000, 200, 0xCE75)
        .with_tsp(TspConfig::new(TspStrategy::ExactOnly, 18))
        .with_jobs(jobs());
    let records = run_trials(&measure, &cfg).unwrap();
    for r in &records {
        assert_eq!(r.checkpoints.last().unwrap().tsp_mode, TspMode::ExactLine);
    }
    let rates = aggregate_rates(&records, rat(0, 1), 0xCE75);

    let ts_gap = (rates.ell_ts.mean - rates.ell0.mean).abs();
    let drift_ok = (rates.ell0.mean - 0.5).abs() <= 0.02;
    let gap_ok = ts_gap <= 0.02;
    banner(
        gap_ok,
        "criterion 7a (no tour acceleration)",
        &format!(
            "|tour rate - drift| = {:.5} <= 0.02 with exact-line tours",
            ts_gap
        ),
    );
    banner(
        drift_ok,
        "criterion 7b (stated drift value)",
        &format!(
            "measured drift {:.4} vs stated 0.5 +- 0.02; the measure's mean step \
             displacement is (1+2+3)/3 * (2p-1) = 1.0 at p = 3/4, so the stated \
             constant is unreachable for this step distribution",
            rates.ell0.mean
        ),
    );
    assert!(gap_ok, "tour/drift gap {ts_gap}");
    assert!(
        drift_ok,
        "measured drift {} is incompatible with the stated 0.5 +- 0.02; \
         the displayed step distribution has mean displacement 1.0",
        rates.ell0.mean
    );
}

/// Companion diagnostic: the same run agrees with the step distribution's
/// actual mean displacement, confirming the engine rather than the constant.
#[test]
fn counterexample_drift_matches_step_mean() {
    let backend =
        Arc::new(Backend::line(&[(1, rat(1, 1)), (2, rat(3, 1)), (3, rat(5, 1))]).unwrap());
    let measure = counterexample_measure(backend.clone(), rat(3, 4));
    // Mean displacement of the step distribution, computed from the atoms.
    let mean_step: f64 = measure
        .atoms()
        .iter()
        .map(|a| {
            let Element::Lattice(v) = &a.step else { panic!() };
            rat_to_f64(a.prob) * v[0] as f64
        })
        .sum();
    assert!((mean_step - 1.0).abs() < 1e-12);

    let cfg = EstimatorConfig::new(10_000, 100, 0xCE76)
        .with_tsp(TspConfig::new(TspStrategy::ExactOnly, 18))
        .with_jobs(jobs());
    let records = run_trials(&measure, &cfg).unwrap();
    let rates = aggregate_rates(&records, rat(0, 1), 0xCE76);
    let gap = (rates.ell0.mean - mean_step).abs();
    banner(
        gap <= 0.02,
        "diagnostic (counterexample drift)",
        &format!(
            "measured drift {:.4} matches the mean step displacement {:.1}",
            rates.ell0.mean, mean_step
        ),
    );
    assert!(gap <= 0.02, "drift {} vs step mean {mean_step}", rates.ell0.mean);
}

// ---------------------------------------------------------------------------
// Criterion 8: induced-walk drift on Z2 * Z2
// ---------------------------------------------------------------------------

#[test]
fn criterion_8_induced_walk_drift() {
    let backend = Arc::new(Backend::c2c2(rat(1, 1), rat(1, 1)).unwrap());
    let a = backend.parse_element("a").unwrap();
    let b = backend.parse_element("b").unwrap();
    let ab = backend.parse_element("ab").unwrap();
    let mu0s: Vec<Vec<(Element, Rat)>> = vec![
        vec![(a.clone(), rat(7, 10)), (b.clone(), rat(3, 10))],
        vec![(a.clone(), rat(3, 5)), (b.clone(), rat(2, 5))],
        vec![
            (a.clone(), rat(1, 2)),
            (b.clone(), rat(1, 4)),
            (ab.clone(), rat(1, 4)),
        ],
    ];
    for (i, mu0) in mu0s.into_iter().enumerate() {
        let est = induced_walk_drift(backend.clone(), mu0, 60_000, 4, 0xD21F7 + i as u64).unwrap();
        let mean = est.mean_increment.as_ref().unwrap();
        let ok = est.visits >= 100_000 && mean.mean.abs() <= 0.02;
        banner(
            ok,
            "criterion 8 (induced-walk drift)",
            &format!(
                "step set {}: drift {:+.5} over {} subgroup visits",
                i, mean.mean, est.visits
            ),
        );
        assert!(est.visits >= 100_000, "only {} visits", est.visits);
        assert!(mean.mean.abs() <= 0.02, "drift {}", mean.mean);
    }
}

// ---------------------------------------------------------------------------
// Criterion 9: structural invariants on retained-path trajectories
// ---------------------------------------------------------------------------

/// Lamp-count inequality: the lamps lit at the first-visit positions never
/// exceed the support size.
fn check_first_visit_inequality(rec: &TrajectoryRecord) {
    let config = &rec.final_state.config;
    let lit = rec
        .first_visits
        .iter()
        .filter(|fv| config.state(&fv.position) != 0)
        .count();
    assert!(
        lit <= config.support_size(),
        "first-visit lamp count {lit} exceeds support {}",
        config.support_size()
    );
}

/// Tour lower bound: at the horizon, the exact tour value dominates the
/// distance plus the increment earned by fully lit skeleton neighbourhoods.
fn check_tour_lower_bound(
    backend: &Backend,
    rec: &TrajectoryRecord,
    sigmas: &[Element; 3],
    sigma3_len: Rat,
    increment: Rat,
) {
    let stats = delta_statistics(backend, rec, sigmas, sigma3_len).unwrap();
    let earned =
        increment * Rat::from_integer(stats.indicators.iter().filter(|&&b| b).count() as i64);
    let last = rec.checkpoints.last().unwrap();
    assert!(last.tsp_mode.is_exact());
    assert!(
        last.tsp_value >= last.distance + earned,
        "tour {} below distance {} + earned {}",
        last.tsp_value,
        last.distance,
        earned
    );
}

#[test]
fn criterion_9_structural_invariants() {
    let mut trajectories = 0usize;

    // Free-group configuration: 20 trajectories.
    let f2 = Arc::new(Backend::free(2, &[rat(1, 1), rat(1, 1)]).unwrap());
    let f2_measure = StepMeasure::walk_switch(f2.clone(), uniform_mu0(&f2), 2).unwrap();
    let Selection::Triple(f2_triple) = select_sigmas(&f2).unwrap() else {
        panic!()
    };
    let opts = SimOptions {
        horizon: 400,
        checkpoints: vec![400],
        tsp: TspConfig::new(TspStrategy::ExactOnly, 18),
        retain_path: true,
    };
    for t in 0..20u64 {
        let rec = simulate(&f2_measure, &opts, trial_seed(0x51, t)).unwrap();
        check_first_visit_inequality(&rec);
        check_tour_lower_bound(
            &f2,
            &rec,
            f2_triple.sigmas(),
            f2_triple.sigma3_length(),
            f2_triple.increment,
        );
        sample_metric_and_wreath_axioms(&f2, &rec, 0xA1 + t);
        trajectories += 1;
    }

    // Weighted-Z configuration (case Z-II triple): 20 trajectories. The
    // horizon stays small so the subset DP keeps exact tour values.
    let z = Arc::new(Backend::line(&[(1, rat(1, 1)), (2, rat(3, 2))]).unwrap());
    let z_measure = StepMeasure::walk_switch(z.clone(), uniform_mu0(&z), 2).unwrap();
    let Selection::Triple(z_triple) = select_sigmas(&z).unwrap() else {
        panic!()
    };
    let z_opts = SimOptions {
        horizon: 50,
        checkpoints: vec![50],
        tsp: TspConfig::new(TspStrategy::ExactOnly, 20),
        retain_path: true,
    };
    for t in 0..20u64 {
        let rec = simulate(&z_measure, &z_opts, trial_seed(0x52, t)).unwrap();
        check_first_visit_inequality(&rec);
        check_tour_lower_bound(
            &z,
            &rec,
            z_triple.sigmas(),
            z_triple.sigma3_length(),
            z_triple.increment,
        );
        sample_metric_and_wreath_axioms(&z, &rec, 0xB1 + t);
        trajectories += 1;
    }

    // Z2*Z2 configuration: 10 trajectories (no sigma triple exists there, so
    // only the lamp-count inequality applies).
    let c2 = Arc::new(Backend::c2c2(rat(1, 1), rat(1, 1)).unwrap());
    let c2_measure = StepMeasure::walk_switch(c2.clone(), uniform_mu0(&c2), 2).unwrap();
    let c2_opts = SimOptions {
        horizon: 400,
        checkpoints: vec![400],
        tsp: TspConfig::new(TspStrategy::ExactOnly, 18),
        retain_path: true,
    };
    for t in 0..10u64 {
        let rec = simulate(&c2_measure, &c2_opts, trial_seed(0x53, t)).unwrap();
        check_first_visit_inequality(&rec);
        sample_metric_and_wreath_axioms(&c2, &rec, 0xC1 + t);
        trajectories += 1;
    }

    // Determinism: identical seeds give bit-identical records.
    let again = simulate(&f2_measure, &opts, trial_seed(0x51, 7)).unwrap();
    let reference = simulate(&f2_measure, &opts, trial_seed(0x51, 7)).unwrap();
    assert_eq!(again, reference, "identical seeds diverged");

    assert_eq!(trajectories, 50);
    banner(
        true,
        "criterion 9 (structural invariants)",
        "metric/wreath axioms, lamp-count and tour lower bounds, determinism on 50 trajectories",
    );
}

/// Samples metric axioms and wreath group axioms using elements actually
/// visited by the trajectory.
fn sample_metric_and_wreath_axioms(backend: &Arc<Backend>, rec: &TrajectoryRecord, seed: u64) {
    let path = rec.path.as_ref().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pick = |rng: &mut ChaCha8Rng| path[rng.gen_range(0..path.len())].clone();
    for _ in 0..8 {
        let (x, y, z, g) = (pick(&mut rng), pick(&mut rng), pick(&mut rng), pick(&mut rng));
        let dxy = backend.distance(&x, &y).unwrap();
        assert_eq!(dxy, backend.distance(&y, &x).unwrap());
        assert_eq!(dxy == rat(0, 1), x == y);
        if x != y {
            assert!(dxy >= backend.r1());
        }
        let dxz = backend.distance(&x, &z).unwrap();
        let dyz = backend.distance(&y, &z).unwrap();
        assert!(dxz <= dxy + dyz, "triangle inequality failed");
        let gx = backend.multiply(&g, &x);
        let gy = backend.multiply(&g, &y);
        assert_eq!(backend.distance(&gx, &gy).unwrap(), dxy, "left invariance");

        // Wreath axioms on elements assembled from visited positions.
        use lamprate_core::wreath::{Configuration, WreathElement};
        let wrap = |pos: Element, lamp: Element| WreathElement {
            config: Configuration::single(2, lamp),
            position: pos,
        };
        let u = wrap(x.clone(), y.clone());
        let v = wrap(y.clone(), z.clone());
        let w = wrap(z.clone(), x.clone());
        assert_eq!(
            u.multiply(backend, &v).multiply(backend, &w),
            u.multiply(backend, &v.multiply(backend, &w))
        );
        assert!(u.multiply(backend, &u.inverse(backend)).is_identity(backend));
    }
}
