//! Monte Carlo estimators: rates of escape, return probabilities, the range
//! law, the Walk-Switch identity, the Greenian distance and the induced
//! subgroup walk on `Z2 * Z2`.
//!
//! Point estimates are trial means of final-checkpoint values divided by the
//! horizon (the almost-sure limits are constants, so final-value averaging is
//! the lowest-variance choice at a fixed budget); slope-based alternates are
//! reported as secondary diagnostics. Rates get normal-approximation 99%
//! intervals, probabilities get Wilson intervals. Horizon truncation of
//! return and hitting probabilities is one-sided and is always reported,
//! never absorbed.

use std::sync::Arc;

use num_traits::Zero;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::group::{Backend, BackendKind, Element};
use crate::rational::{rat_to_f64, Rat};
use crate::stats::{mean_ci, ols_slope, wilson_ci, MeanCi, Z99};
use crate::tsp::TspConfig;
use crate::walk::{
    simulate, trial_seed, MeasureError, MeasureKind, SimError, SimOptions, StepMeasure,
    TrajectoryRecord,
};

#[derive(Debug, Error)]
pub enum EstimError {
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("trial {trial} (seed {seed}) failed: {source}")]
    TrialFailed {
        trial: u64,
        seed: u64,
        #[source]
        source: SimError,
    },
    #[error(transparent)]
    Measure(#[from] MeasureError),
    #[error("this check applies to Walk-Switch measures only")]
    WrongMeasureKind,
    #[error("walk is not irreducible: {0}")]
    NotIrreducible(String),
    #[error("operation requires the {0} backend")]
    WrongBackend(&'static str),
    #[error("thread pool construction failed: {0}")]
    Pool(String),
}

/// Inputs of a rate-estimation experiment.
#[derive(Clone, Debug)]
pub struct EstimatorConfig {
    pub horizon: u64,
    pub trials: u64,
    pub master_seed: u64,
    pub lamp_cost: Rat,
    pub tsp: TspConfig,
    /// `None` selects the geometric schedule.
    pub checkpoints: Option<Vec<u64>>,
    /// Worker threads for the trial fan-out; 0 uses all available cores.
    pub jobs: usize,
    pub retain_path: bool,
}

impl EstimatorConfig {
    pub fn new(horizon: u64, trials: u64, master_seed: u64) -> EstimatorConfig {
        EstimatorConfig {
            horizon,
            trials,
            master_seed,
            lamp_cost: Rat::zero(),
            tsp: TspConfig::default(),
            checkpoints: None,
            jobs: 1,
            retain_path: false,
        }
    }

    pub fn with_lamp_cost(mut self, c: Rat) -> Self {
        self.lamp_cost = c;
        self
    }

    pub fn with_tsp(mut self, tsp: TspConfig) -> Self {
        self.tsp = tsp;
        self
    }

    pub fn with_jobs(mut self, jobs: usize) -> Self {
        self.jobs = jobs;
        self
    }

    pub fn with_retained_path(mut self) -> Self {
        self.retain_path = true;
        self
    }

    fn sim_options(&self) -> SimOptions {
        let mut opts = match &self.checkpoints {
            Some(cs) => {
                let mut cs = cs.clone();
                cs.sort_unstable();
                cs.dedup();
                assert!(
                    cs.last() == Some(&self.horizon),
                    "the checkpoint schedule must include the horizon"
                );
                SimOptions {
                    horizon: self.horizon,
                    checkpoints: cs,
                    tsp: self.tsp,
                    retain_path: false,
                }
            }
            None => SimOptions::geometric(self.horizon, self.tsp),
        };
        opts.retain_path = self.retain_path;
        opts
    }
}

/// Runs the trial fan-out. Trials are independent pure computations seeded by
/// `(master_seed, trial_index)`, so the result is identical for any `jobs`.
pub fn run_trials(
    measure: &StepMeasure,
    cfg: &EstimatorConfig,
) -> Result<Vec<TrajectoryRecord>, EstimError> {
    let opts = cfg.sim_options();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.jobs)
        .build()
        .map_err(|e| EstimError::Pool(e.to_string()))?;
    let records: Result<Vec<TrajectoryRecord>, EstimError> = pool.install(|| {
        (0..cfg.trials)
            .into_par_iter()
            .map(|t| {
                let seed = trial_seed(cfg.master_seed, t);
                simulate(measure, &opts, seed).map_err(|source| EstimError::TrialFailed {
                    trial: t,
                    seed,
                    source,
                })
            })
            .collect()
    });
    records
}

/// Point estimates and intervals for the four rates.
#[derive(Clone, Debug, serde::Serialize)]
pub struct RateEstimates {
    /// `d(e, X_n) / n`.
    pub ell0: MeanCi,
    /// `|supp(eta_n)| / n`.
    pub ell_supp: MeanCi,
    /// `d_TS(Z_n) / n`.
    pub ell_ts: MeanCi,
    /// `ell_ts + lamp_cost * ell_supp`; the identity holds exactly by
    /// construction.
    pub ell: MeanCi,
    /// Secondary slope diagnostics from regressing late checkpoint values on n.
    pub slope_ell0: f64,
    pub slope_ell_supp: f64,
    pub slope_ell_ts: f64,
    /// Fraction of checkpoint tour evaluations that used the heuristic.
    pub heuristic_fraction: f64,
    /// True when every final-checkpoint tour value is exact; `ell_ts` is only
    /// exact-grade in that case.
    pub ts_exact_grade: bool,
    pub trials: u64,
    pub horizon: u64,
    pub master_seed: u64,
    pub lamp_cost: f64,
    /// Diagnostic: fraction of trials whose projection returned to e.
    pub return_frequency: f64,
}

/// Aggregates records that share a horizon into rate estimates.
pub fn aggregate_rates(
    records: &[TrajectoryRecord],
    lamp_cost: Rat,
    master_seed: u64,
) -> RateEstimates {
    assert!(records.len() >= 2, "need at least two trials");
    let horizon = records[0].horizon;
    assert!(horizon > 0, "rates need a positive horizon");
    let n = horizon as f64;
    let c = rat_to_f64(lamp_cost);

    let mut v0 = Vec::with_capacity(records.len());
    let mut vsupp = Vec::with_capacity(records.len());
    let mut vts = Vec::with_capacity(records.len());
    let mut vell = Vec::with_capacity(records.len());
    let mut heuristic = 0usize;
    let mut evaluations = 0usize;
    let mut exact_grade = true;
    let mut returned = 0usize;
    for rec in records {
        assert_eq!(rec.horizon, horizon, "records must share the horizon");
        let last = rec
            .checkpoints
            .last()
            .expect("estimation needs a final checkpoint");
        assert_eq!(last.n, horizon, "final checkpoint must sit at the horizon");
        let d0 = rat_to_f64(last.distance) / n;
        let supp = last.supp_size as f64 / n;
        let ts = rat_to_f64(last.tsp_value) / n;
        v0.push(d0);
        vsupp.push(supp);
        vts.push(ts);
        vell.push(ts + c * supp);
        if !last.tsp_mode.is_exact() {
            exact_grade = false;
        }
        for ck in &rec.checkpoints {
            evaluations += 1;
            if !ck.tsp_mode.is_exact() {
                heuristic += 1;
            }
        }
        if rec.first_return.is_some() {
            returned += 1;
        }
    }

    let ell0 = mean_ci(&v0, Z99);
    let ell_supp = mean_ci(&vsupp, Z99);
    let ell_ts = mean_ci(&vts, Z99);
    let mut ell = mean_ci(&vell, Z99);
    // Enforce the decomposition identity exactly.
    ell.mean = ell_ts.mean + c * ell_supp.mean;
    ell.lo = ell.mean - ell.half_width;
    ell.hi = ell.mean + ell.half_width;

    let late = |value: fn(&crate::walk::CheckpointStats) -> f64| -> f64 {
        let pts: Vec<(f64, f64)> = records
            .iter()
            .flat_map(|r| r.checkpoints.iter())
            .filter(|ck| 4 * ck.n >= horizon && ck.n > 0)
            .map(|ck| (ck.n as f64, value(ck)))
            .collect();
        if pts.len() >= 2 {
            ols_slope(&pts)
        } else {
            f64::NAN
        }
    };

    RateEstimates {
        ell0,
        ell_supp,
        ell_ts,
        ell,
        slope_ell0: late(|ck| rat_to_f64(ck.distance)),
        slope_ell_supp: late(|ck| ck.supp_size as f64),
        slope_ell_ts: late(|ck| rat_to_f64(ck.tsp_value)),
        heuristic_fraction: if evaluations == 0 {
            0.0
        } else {
            heuristic as f64 / evaluations as f64
        },
        ts_exact_grade: exact_grade,
        trials: records.len() as u64,
        horizon,
        master_seed,
        lamp_cost: c,
        return_frequency: returned as f64 / records.len() as f64,
    }
}

/// Runs the trials and aggregates them.
pub fn estimate_rates(
    measure: &StepMeasure,
    cfg: &EstimatorConfig,
) -> Result<RateEstimates, EstimError> {
    assert!(cfg.horizon >= 100, "rate estimation needs horizon >= 100");
    assert!(cfg.trials >= 2, "rate estimation needs at least 2 trials");
    let records = run_trials(measure, cfg)?;
    Ok(aggregate_rates(&records, cfg.lamp_cost, cfg.master_seed))
}

// ---------------------------------------------------------------------------
// Projection-only walks
// ---------------------------------------------------------------------------

/// Sampler over a bare step distribution on `G`.
struct ProjectionSampler {
    steps: Vec<Element>,
    cum: Vec<u64>,
    denom: u64,
}

impl ProjectionSampler {
    fn new(mu0: &[(Element, Rat)]) -> Result<Self, MeasureError> {
        if mu0.is_empty() {
            return Err(MeasureError::Empty);
        }
        let mut total = Rat::zero();
        let mut denom: u64 = 1;
        for (_, p) in mu0 {
            if *p <= Rat::zero() {
                return Err(MeasureError::NonPositiveProbability);
            }
            total += *p;
            let l = num_integer::lcm(denom as u128, *p.denom() as u128);
            if l > u64::MAX as u128 {
                return Err(MeasureError::DenominatorOverflow);
            }
            denom = l as u64;
        }
        if total != Rat::from_integer(1) {
            return Err(MeasureError::BadTotal(crate::rational::rat_to_string(
                total,
            )));
        }
        let mut cum = Vec::with_capacity(mu0.len());
        let mut acc = 0u64;
        for (_, p) in mu0 {
            acc += *p.numer() as u64 * (denom / *p.denom() as u64);
            cum.push(acc);
        }
        Ok(ProjectionSampler {
            steps: mu0.iter().map(|(x, _)| x.clone()).collect(),
            cum,
            denom,
        })
    }

    fn step(&self, rng: &mut ChaCha8Rng) -> &Element {
        let r = rand::Rng::gen::<u64>(rng) as u128;
        let idx = self
            .cum
            .partition_point(|&c| (c as u128) << 64 <= r * self.denom as u128);
        &self.steps[idx.min(self.steps.len() - 1)]
    }
}

/// Estimated probability of returning to the identity within the horizon.
///
/// The truncation makes this a lower bound on the true return probability;
/// the bound direction is part of the report.
#[derive(Clone, Debug, serde::Serialize)]
pub struct ReturnEstimate {
    pub p_return: f64,
    pub wilson99: (f64, f64),
    pub returned: u64,
    pub trials: u64,
    pub horizon: u64,
    pub truncation: &'static str,
}

pub fn return_probability(
    measure: &StepMeasure,
    horizon: u64,
    trials: u64,
    master_seed: u64,
) -> Result<ReturnEstimate, EstimError> {
    let sampler = ProjectionSampler::new(&measure.projection())?;
    let backend = measure.backend().as_ref();
    let mut returned = 0u64;
    for t in 0..trials {
        let mut rng = ChaCha8Rng::seed_from_u64(trial_seed(master_seed, t));
        let mut pos = backend.identity();
        for _ in 1..=horizon {
            pos = backend.multiply(&pos, sampler.step(&mut rng));
            if backend.is_identity(&pos) {
                returned += 1;
                break;
            }
        }
    }
    Ok(ReturnEstimate {
        p_return: returned as f64 / trials as f64,
        wilson99: wilson_ci(returned, trials, Z99),
        returned,
        trials,
        horizon,
        truncation: "finite-horizon estimate; lower bound on the true return probability",
    })
}

/// Range law: `|R_n| / n` at the horizon, with an optional cross-check
/// against the complement of an independently estimated return probability.
#[derive(Clone, Debug, serde::Serialize)]
pub struct RangeLawReport {
    pub rate: MeanCi,
    pub complement_expected: Option<f64>,
    pub complement_gap: Option<f64>,
}

pub fn range_law(
    records: &[TrajectoryRecord],
    return_estimate: Option<&ReturnEstimate>,
) -> RangeLawReport {
    assert!(!records.is_empty());
    let horizon = records[0].horizon as f64;
    let rates: Vec<f64> = records
        .iter()
        .map(|r| {
            assert_eq!(r.horizon as f64, horizon);
            r.range_size as f64 / horizon
        })
        .collect();
    let rate = mean_ci(&rates, Z99);
    let complement = return_estimate.map(|re| 1.0 - re.p_return);
    RangeLawReport {
        rate,
        complement_expected: complement,
        complement_gap: complement.map(|c| (rate.mean - c).abs()),
    }
}

/// Comparison of the two Walk-Switch identity sides.
#[derive(Clone, Debug, serde::Serialize)]
pub struct IdentityReport {
    /// Lamp side: `|supp(eta_n)| / n` across trials.
    pub ell_supp: MeanCi,
    /// Projection side: `(1 - p_return) / 2` from an independent run.
    pub projection_side: f64,
    pub return_estimate: ReturnEstimate,
    pub discrepancy: f64,
}

/// Checks `ell_supp = (1 - P[return]) / 2` for a Walk-Switch measure: the
/// lamp side is estimated from wreath trials, the projection side from an
/// independent walk-only run on a shifted seed stream.
pub fn walk_switch_identity_check(
    measure: &StepMeasure,
    horizon: u64,
    trials: u64,
    master_seed: u64,
) -> Result<IdentityReport, EstimError> {
    if !matches!(measure.kind(), MeasureKind::WalkSwitch) {
        return Err(EstimError::WrongMeasureKind);
    }
    // Lamp side: no checkpoints, so no metric or tour machinery is touched.
    let opts = SimOptions {
        horizon,
        checkpoints: vec![],
        tsp: TspConfig::default(),
        retain_path: false,
    };
    let mut rates = Vec::with_capacity(trials as usize);
    for t in 0..trials {
        let rec = simulate(measure, &opts, trial_seed(master_seed, t))?;
        rates.push(rec.final_state.config.support_size() as f64 / horizon as f64);
    }
    let ell_supp = mean_ci(&rates, Z99);
    let ret = return_probability(measure, horizon, trials, master_seed ^ 0x5157_4954_4348_u64)?;
    let projection_side = 0.5 * (1.0 - ret.p_return);
    Ok(IdentityReport {
        ell_supp,
        projection_side,
        return_estimate: ret,
        discrepancy: (ell_supp.mean - projection_side).abs(),
    })
}

/// Monte Carlo Greenian distance `-ln P_x[T_y < infinity]`, truncated at the
/// horizon (truncation can only underestimate the hitting probability, hence
/// overestimate the distance).
#[derive(Clone, Debug, serde::Serialize)]
pub struct GreenianEstimate {
    /// `-ln(hit fraction)`; `None` when no trial hit within the horizon.
    pub value: Option<f64>,
    /// Censoring bound `ln(trials)` reported when `value` is `None`.
    pub censored_at_least: Option<f64>,
    pub hits: u64,
    pub trials: u64,
    pub horizon: u64,
    pub note: &'static str,
}

pub fn greenian_distance(
    measure: &StepMeasure,
    x: &Element,
    y: &Element,
    horizon: u64,
    trials: u64,
    master_seed: u64,
) -> Result<GreenianEstimate, EstimError> {
    if x == y {
        return Ok(GreenianEstimate {
            value: Some(0.0),
            censored_at_least: None,
            hits: trials,
            trials,
            horizon,
            note: "hitting time zero",
        });
    }
    let sampler = ProjectionSampler::new(&measure.projection())?;
    let backend = measure.backend().as_ref();
    let mut hits = 0u64;
    for t in 0..trials {
        let mut rng = ChaCha8Rng::seed_from_u64(trial_seed(master_seed, t));
        let mut pos = x.clone();
        for _ in 1..=horizon {
            pos = backend.multiply(&pos, sampler.step(&mut rng));
            if pos == *y {
                hits += 1;
                break;
            }
        }
    }
    if hits == 0 {
        Ok(GreenianEstimate {
            value: None,
            censored_at_least: Some((trials as f64).ln()),
            hits,
            trials,
            horizon,
            note: "no hits within the horizon; the distance is censored from below",
        })
    } else {
        Ok(GreenianEstimate {
            value: Some(-(hits as f64 / trials as f64).ln()),
            censored_at_least: None,
            hits,
            trials,
            horizon,
            note: "finite-horizon estimate; upper-bounds the hit probability deficit",
        })
    }
}

/// Drift estimate of the induced walk on the index-2 subgroup of `Z2 * Z2`.
#[derive(Clone, Debug, serde::Serialize)]
pub struct DriftEstimate {
    /// Mean increment of the induced walk; `None` when no subgroup visits
    /// occurred (censored).
    pub mean_increment: Option<MeanCi>,
    pub visits: u64,
    pub trials: u64,
    pub horizon: u64,
}

/// Index of an element of the `{(ab)^z}` subgroup; `None` for odd words.
fn subgroup_index(e: &Element) -> Option<i64> {
    match e {
        Element::Alt(w) if w.len() % 2 == 0 => {
            if w.is_empty() {
                Some(0)
            } else if w[0] == 0 {
                Some((w.len() / 2) as i64)
            } else {
                Some(-((w.len() / 2) as i64))
            }
        }
        Element::Alt(_) => None,
        _ => unreachable!("induced walk runs on the Z2*Z2 backend"),
    }
}

/// Simulates the walk on `Z2 * Z2` driven by `mu0` and records the position
/// at successive visits to the index-2 subgroup `{(ab)^z}`, identified with
/// the integers. Returns the empirical mean increment of that induced walk.
pub fn induced_walk_drift(
    backend: Arc<Backend>,
    mu0: Vec<(Element, Rat)>,
    horizon: u64,
    trials: u64,
    master_seed: u64,
) -> Result<DriftEstimate, EstimError> {
    if !matches!(backend.kind(), BackendKind::FreeProductC2C2) {
        return Err(EstimError::WrongBackend("Z2*Z2"));
    }
    // Irreducibility: products of the step support must reach both involutions.
    let mut reached = std::collections::HashSet::new();
    let mut frontier = vec![backend.identity()];
    for _ in 0..6 {
        let mut next = Vec::new();
        for v in &frontier {
            for (s, _) in &mu0 {
                let w = backend.multiply(v, s);
                if reached.insert(w.clone()) {
                    next.push(w);
                }
            }
        }
        frontier = next;
    }
    for g in backend.generators() {
        if !reached.contains(&g.elem) {
            return Err(EstimError::NotIrreducible(format!(
                "products of the step support never reach generator {}",
                g.label
            )));
        }
    }

    let sampler = ProjectionSampler::new(&mu0)?;
    let mut increments = Vec::new();
    for t in 0..trials {
        let mut rng = ChaCha8Rng::seed_from_u64(trial_seed(master_seed, t));
        let mut pos = backend.identity();
        let mut last_index = 0i64; // the walk starts inside the subgroup at 0
        for _ in 1..=horizon {
            pos = backend.multiply(&pos, sampler.step(&mut rng));
            if let Some(z) = subgroup_index(&pos) {
                increments.push((z - last_index) as f64);
                last_index = z;
            }
        }
    }
    if increments.is_empty() {
        return Ok(DriftEstimate {
            mean_increment: None,
            visits: 0,
            trials,
            horizon,
        });
    }
    Ok(DriftEstimate {
        mean_increment: Some(mean_ci(&increments, Z99)),
        visits: increments.len() as u64,
        trials,
        horizon,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::rat;
    use crate::tsp::TspStrategy;
    use crate::walk::Atom;

    fn line_backend() -> Arc<Backend> {
        Arc::new(Backend::line(&[(1, rat(1, 1))]).unwrap())
    }

    fn uniform_mu0(backend: &Backend) -> Vec<(Element, Rat)> {
        let gens = backend.generators();
        let p = Rat::new(1, gens.len() as i64);
        gens.iter().map(|g| (g.elem.clone(), p)).collect()
    }

    fn lat(v: i64) -> Element {
        Element::Lattice(vec![v])
    }

    fn one_way_measure(backend: Arc<Backend>) -> StepMeasure {
        StepMeasure::custom(
            backend,
            vec![Atom {
                lamps: vec![],
                step: lat(1),
                prob: rat(1, 1),
            }],
            2,
        )
        .unwrap()
    }

    #[test]
    fn deterministic_walk_has_unit_rate_exactly() {
        let b = line_backend();
        let m = one_way_measure(b);
        let cfg = EstimatorConfig::new(100, 4, 7);
        let est = estimate_rates(&m, &cfg).unwrap();
        assert_eq!(est.ell0.mean, 1.0);
        assert_eq!(est.ell0.half_width, 0.0);
        assert!(est.ts_exact_grade);
        // ell = ell_ts exactly at lamp cost zero and zero lamps.
        assert_eq!(est.ell.mean, est.ell_ts.mean);
        assert_eq!(est.return_frequency, 0.0);
    }

    #[test]
    fn decomposition_identity_is_exact_by_construction() {
        let b = line_backend();
        let m = StepMeasure::walk_switch(b.clone(), uniform_mu0(&b), 2).unwrap();
        let cfg = EstimatorConfig::new(400, 30, 11).with_lamp_cost(rat(7, 3));
        let est = estimate_rates(&m, &cfg).unwrap();
        let c = rat_to_f64(rat(7, 3));
        assert_eq!(est.ell.mean, est.ell_ts.mean + c * est.ell_supp.mean);
    }

    #[test]
    fn return_probability_examples() {
        let b = line_backend();
        let one_way = one_way_measure(b.clone());
        let ret = return_probability(&one_way, 200, 50, 3).unwrap();
        assert_eq!(ret.p_return, 0.0);

        // Recurrent simple walk on Z: most trials return by n = 10^4.
        let srw = StepMeasure::walk_switch(b.clone(), uniform_mu0(&b), 2).unwrap();
        let ret = return_probability(&srw, 10_000, 200, 5).unwrap();
        assert!(ret.p_return >= 0.9, "p_return = {}", ret.p_return);
    }

    #[test]
    fn range_law_examples() {
        let b = line_backend();
        let one_way = one_way_measure(b.clone());
        let cfg = EstimatorConfig::new(200, 4, 9);
        let records = run_trials(&one_way, &cfg).unwrap();
        let report = range_law(&records, None);
        // |R_n| = n + 1 for the one-way walk.
        assert!(report.rate.mean > 1.0 && report.rate.mean < 1.01);

        let srw = StepMeasure::walk_switch(b.clone(), uniform_mu0(&b), 2).unwrap();
        let cfg = EstimatorConfig::new(10_000, 40, 13);
        let records = run_trials(&srw, &cfg).unwrap();
        let report = range_law(&records, None);
        assert!(report.rate.mean <= 0.05, "rate = {}", report.rate.mean);
    }

    #[test]
    fn identity_check_requires_walk_switch() {
        let b = line_backend();
        let m = StepMeasure::switch_walk(b.clone(), uniform_mu0(&b), rat(1, 2), 2).unwrap();
        assert!(matches!(
            walk_switch_identity_check(&m, 100, 4, 1),
            Err(EstimError::WrongMeasureKind)
        ));
    }

    #[test]
    fn identity_check_is_internally_consistent_on_z3() {
        // No oracle value needed: two independent estimates of the same
        // quantity must agree.
        let b = Arc::new(Backend::hypercubic(3, &[rat(1, 1), rat(1, 1), rat(1, 1)]).unwrap());
        let m = StepMeasure::walk_switch(b.clone(), uniform_mu0(&b), 2).unwrap();
        let report = walk_switch_identity_check(&m, 1500, 150, 21).unwrap();
        assert!(
            report.discrepancy <= 0.02,
            "discrepancy = {}",
            report.discrepancy
        );
    }

    #[test]
    fn identity_check_on_recurrent_z_gives_small_sides() {
        let b = line_backend();
        let m = StepMeasure::walk_switch(b.clone(), uniform_mu0(&b), 2).unwrap();
        let report = walk_switch_identity_check(&m, 10_000, 60, 23).unwrap();
        assert!(report.ell_supp.mean <= 0.03);
        assert!(report.projection_side <= 0.03);
    }

    #[test]
    fn greenian_distance_examples() {
        let b = line_backend();
        let one_way = one_way_measure(b.clone());
        let zero = lat(0);
        let three = lat(3);
        // x = y: exact zero.
        let same = greenian_distance(&one_way, &zero, &zero, 10, 5, 1).unwrap();
        assert_eq!(same.value, Some(0.0));
        // Deterministic +1 walk surely hits 3.
        let sure = greenian_distance(&one_way, &zero, &three, 10, 50, 1).unwrap();
        assert_eq!(sure.value, Some(0.0));
        // A walk that never reaches -1 censors.
        let never = greenian_distance(&one_way, &zero, &lat(-1), 50, 8, 1).unwrap();
        assert_eq!(never.value, None);
        assert!(never.censored_at_least.unwrap() > 2.0);
    }

    #[test]
    fn induced_drift_vanishes_for_symmetric_and_asymmetric_steps() {
        let b = Arc::new(Backend::c2c2(rat(1, 1), rat(1, 1)).unwrap());
        let a = b.parse_element("a").unwrap();
        let bb = b.parse_element("b").unwrap();
        for (pa, pb) in [(rat(1, 2), rat(1, 2)), (rat(7, 10), rat(3, 10))] {
            let est = induced_walk_drift(
                b.clone(),
                vec![(a.clone(), pa), (bb.clone(), pb)],
                20_000,
                5,
                17,
            )
            .unwrap();
            let mean = est.mean_increment.unwrap();
            assert!(est.visits > 10_000);
            assert!(mean.mean.abs() <= 0.02, "drift = {}", mean.mean);
        }
    }

    #[test]
    fn induced_drift_rejects_non_irreducible_steps() {
        let b = Arc::new(Backend::c2c2(rat(1, 1), rat(1, 1)).unwrap());
        let a = b.parse_element("a").unwrap();
        assert!(matches!(
            induced_walk_drift(b.clone(), vec![(a, rat(1, 1))], 100, 2, 1),
            Err(EstimError::NotIrreducible(_))
        ));
    }

    #[test]
    fn doubling_trials_shrinks_the_interval_like_root_two() {
        let b = line_backend();
        let m = StepMeasure::walk_switch(b.clone(), uniform_mu0(&b), 2).unwrap();
        let tsp = TspConfig::new(TspStrategy::Auto, 18);
        let small = EstimatorConfig::new(200, 100, 77).with_tsp(tsp);
        let large = EstimatorConfig::new(200, 200, 77).with_tsp(tsp);
        let a = estimate_rates(&m, &small).unwrap();
        let z = estimate_rates(&m, &large).unwrap();
        let ratio = z.ell_supp.half_width / a.ell_supp.half_width;
        assert!(
            (0.6..=0.85).contains(&ratio),
            "interval shrink ratio {ratio}"
        );
    }

    #[test]
    fn jobs_do_not_change_results() {
        let b = line_backend();
        let m = StepMeasure::walk_switch(b.clone(), uniform_mu0(&b), 2).unwrap();
        let base = EstimatorConfig::new(300, 12, 5);
        let parallel = EstimatorConfig::new(300, 12, 5).with_jobs(2);
        let a = run_trials(&m, &base).unwrap();
        let z = run_trials(&m, &parallel).unwrap();
        assert_eq!(a, z);
    }
}
