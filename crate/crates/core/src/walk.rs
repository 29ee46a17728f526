//! Step measures and seeded trajectories of the lamplighter random walk
//! `Z_n = Z_{n-1} * i_n`, together with the per-trajectory statistics the
//! acceleration arguments are built from: the range, first-visit times, the
//! hitting skeleton and the lamp indicators over it.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::sync::Arc;

use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::group::{Backend, Element, MetricError};
use crate::rational::Rat;
use crate::stats::{wilson_ci, Z99};
use crate::tsp::{self, TspConfig, TspError, TspMode};
use crate::wreath::{Configuration, WreathElement};

/// One increment of the wreath walk: a finite lamp patch (relative to the
/// walker), a move in `G`, and a positive probability.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Atom {
    /// Lamp sites and nonzero states, relative to the current position.
    pub lamps: Vec<(Element, u32)>,
    /// Projection of the increment onto `G`.
    pub step: Element,
    pub prob: Rat,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum MeasureKind {
    WalkSwitch,
    SwitchWalk { p_switch: Rat },
    Custom,
}

/// Outcome of the heuristic check of the generation condition
/// `<supp(mu)> = L`; failure is a warning, never an error.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum GenerationCheck {
    Confirmed,
    Unconfirmed(String),
}

#[derive(Debug, Error)]
pub enum MeasureError {
    #[error("measure has no atoms")]
    Empty,
    #[error("atom probabilities must be positive")]
    NonPositiveProbability,
    #[error("atom probabilities sum to {0}, expected exactly 1")]
    BadTotal(String),
    #[error("switch probability must lie strictly between 0 and 1")]
    BadSwitchProbability,
    #[error("lamp state must be nonzero mod r")]
    InvalidLampState,
    #[error("duplicate lamp site inside one atom")]
    DuplicateLampSite,
    #[error("common denominator of the atom probabilities overflows the sampler")]
    DenominatorOverflow,
    #[error(transparent)]
    Metric(#[from] MetricError),
}

/// Finite step distribution on the wreath product, with its lamp radius `R`
/// and an exact integer sampler.
#[derive(Clone, Debug)]
pub struct StepMeasure {
    backend: Arc<Backend>,
    modulus: u32,
    atoms: Vec<Atom>,
    kind: MeasureKind,
    lamp_radius: Rat,
    /// Cumulative probability numerators over `denom`.
    cum: Vec<u64>,
    denom: u64,
    generation: GenerationCheck,
}

impl StepMeasure {
    /// Walk-Switch: move by `mu0`, then toggle the lamp at the arrival point
    /// with probability 1/2.
    pub fn walk_switch(
        backend: Arc<Backend>,
        mu0: Vec<(Element, Rat)>,
        modulus: u32,
    ) -> Result<StepMeasure, MeasureError> {
        validate_mu0(&mu0)?;
        let half = Rat::new(1, 2);
        let mut atoms = Vec::with_capacity(2 * mu0.len());
        for (x, p) in &mu0 {
            atoms.push(Atom {
                lamps: Vec::new(),
                step: x.clone(),
                prob: *p * half,
            });
        }
        for (x, p) in &mu0 {
            atoms.push(Atom {
                lamps: vec![(x.clone(), 1)],
                step: x.clone(),
                prob: *p * half,
            });
        }
        StepMeasure::assemble(backend, modulus, atoms, MeasureKind::WalkSwitch)
    }

    /// Switch-Walk: toggle the lamp at the current position with probability
    /// `p_switch`, then move by `mu0`.
    pub fn switch_walk(
        backend: Arc<Backend>,
        mu0: Vec<(Element, Rat)>,
        p_switch: Rat,
        modulus: u32,
    ) -> Result<StepMeasure, MeasureError> {
        validate_mu0(&mu0)?;
        if p_switch <= Rat::zero() || p_switch >= Rat::one() {
            return Err(MeasureError::BadSwitchProbability);
        }
        let e = backend.identity();
        let mut atoms = Vec::with_capacity(2 * mu0.len());
        for (x, p) in &mu0 {
            atoms.push(Atom {
                lamps: vec![(e.clone(), 1)],
                step: x.clone(),
                prob: *p * p_switch,
            });
        }
        for (x, p) in &mu0 {
            atoms.push(Atom {
                lamps: Vec::new(),
                step: x.clone(),
                prob: *p * (Rat::one() - p_switch),
            });
        }
        StepMeasure::assemble(
            backend,
            modulus,
            atoms,
            MeasureKind::SwitchWalk { p_switch },
        )
    }

    /// Arbitrary validated atom list.
    pub fn custom(
        backend: Arc<Backend>,
        atoms: Vec<Atom>,
        modulus: u32,
    ) -> Result<StepMeasure, MeasureError> {
        StepMeasure::assemble(backend, modulus, atoms, MeasureKind::Custom)
    }

    fn assemble(
        backend: Arc<Backend>,
        modulus: u32,
        atoms: Vec<Atom>,
        kind: MeasureKind,
    ) -> Result<StepMeasure, MeasureError> {
        assert!(modulus >= 2, "lamp modulus must be at least 2");
        if atoms.is_empty() {
            return Err(MeasureError::Empty);
        }
        let mut total = Rat::zero();
        for atom in &atoms {
            if atom.prob <= Rat::zero() {
                return Err(MeasureError::NonPositiveProbability);
            }
            total += atom.prob;
            let mut seen = BTreeSet::new();
            for (site, state) in &atom.lamps {
                if *state == 0 || *state % modulus == 0 {
                    return Err(MeasureError::InvalidLampState);
                }
                if !seen.insert(site) {
                    return Err(MeasureError::DuplicateLampSite);
                }
            }
        }
        if total != Rat::one() {
            return Err(MeasureError::BadTotal(crate::rational::rat_to_string(total)));
        }

        // Exact sampler: one u64 draw compared against cumulative numerators
        // over the common denominator.
        let mut denom: u64 = 1;
        for atom in &atoms {
            let d = *atom.prob.denom() as u64;
            let l = num_integer::lcm(denom as u128, d as u128);
            if l > u64::MAX as u128 {
                return Err(MeasureError::DenominatorOverflow);
            }
            denom = l as u64;
        }
        let mut cum = Vec::with_capacity(atoms.len());
        let mut acc: u64 = 0;
        for atom in &atoms {
            let scaled = *atom.prob.numer() as u64 * (denom / *atom.prob.denom() as u64);
            acc += scaled;
            cum.push(acc);
        }
        debug_assert_eq!(acc, denom);

        // Lamp radius R: atoms only touch lamps within R of the walker.
        let e = backend.identity();
        let mut lamp_radius = Rat::zero();
        for atom in &atoms {
            for (site, _) in &atom.lamps {
                let d = backend.distance(&e, site)?;
                if d > lamp_radius {
                    lamp_radius = d;
                }
            }
        }

        let generation = generation_check(&backend, modulus, &atoms);
        Ok(StepMeasure {
            backend,
            modulus,
            atoms,
            kind,
            lamp_radius,
            cum,
            denom,
            generation,
        })
    }

    pub fn backend(&self) -> &Arc<Backend> {
        &self.backend
    }

    pub fn modulus(&self) -> u32 {
        self.modulus
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn kind(&self) -> &MeasureKind {
        &self.kind
    }

    /// Radius bound `R`: every atom's lamp support lies in `B(e, R)`.
    pub fn lamp_radius(&self) -> Rat {
        self.lamp_radius
    }

    pub fn generation(&self) -> &GenerationCheck {
        &self.generation
    }

    /// Projection onto `G`: step distribution with atom probabilities merged.
    pub fn projection(&self) -> Vec<(Element, Rat)> {
        let mut merged: std::collections::BTreeMap<Element, Rat> = Default::default();
        for atom in &self.atoms {
            *merged.entry(atom.step.clone()).or_insert_with(Rat::zero) += atom.prob;
        }
        merged.into_iter().collect()
    }

    /// Samples an atom index. Exact to within one part in 2^64 of the
    /// rational distribution (exact when the common denominator divides 2^64).
    pub fn sample_index<R: Rng>(&self, rng: &mut R) -> usize {
        let r = rng.gen::<u64>() as u128;
        let d = self.denom as u128;
        let idx = self.cum.partition_point(|&c| (c as u128) << 64 <= r * d);
        idx.min(self.atoms.len() - 1)
    }
}

fn validate_mu0(mu0: &[(Element, Rat)]) -> Result<(), MeasureError> {
    if mu0.is_empty() {
        return Err(MeasureError::Empty);
    }
    let mut total = Rat::zero();
    for (_, p) in mu0 {
        if *p <= Rat::zero() {
            return Err(MeasureError::NonPositiveProbability);
        }
        total += *p;
    }
    if total != Rat::one() {
        return Err(MeasureError::BadTotal(crate::rational::rat_to_string(total)));
    }
    Ok(())
}

/// Heuristic confirmation of `<supp(mu)> = L`: the projection atoms must
/// reach every generator within a few products, at least one atom must change
/// a lamp, and the lamp increments must generate `Z/rZ`.
fn generation_check(backend: &Backend, modulus: u32, atoms: &[Atom]) -> GenerationCheck {
    if atoms.iter().all(|a| a.lamps.is_empty()) {
        return GenerationCheck::Unconfirmed("no atom changes a lamp".to_string());
    }
    let mut g = modulus;
    for atom in atoms {
        for (_, state) in &atom.lamps {
            g = num_integer::gcd(g, *state % modulus);
        }
    }
    if g != 1 {
        return GenerationCheck::Unconfirmed(format!(
            "lamp increments generate only a subgroup of Z/{modulus}Z (gcd {g})"
        ));
    }
    let steps: BTreeSet<Element> = atoms.iter().map(|a| a.step.clone()).collect();
    let mut reached: HashSet<Element> = HashSet::new();
    let mut frontier: Vec<Element> = vec![backend.identity()];
    const ROUNDS: usize = 6;
    const CAP: usize = 20_000;
    for _ in 0..ROUNDS {
        let mut next = Vec::new();
        for v in &frontier {
            for s in &steps {
                let w = backend.multiply(v, s);
                if reached.insert(w.clone()) {
                    next.push(w);
                }
            }
        }
        if reached.len() > CAP {
            break;
        }
        frontier = next;
    }
    let missing: Vec<String> = backend
        .generators()
        .iter()
        .filter(|gen| !reached.contains(&gen.elem))
        .map(|gen| gen.label.clone())
        .collect();
    if missing.is_empty() {
        GenerationCheck::Confirmed
    } else {
        GenerationCheck::Unconfirmed(format!(
            "projection atoms did not reach generators [{}] within {ROUNDS} products",
            missing.join(",")
        ))
    }
}

/// Splitmix64 finalizer used for seed derivation.
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Stream splitting for parallel trials: the master seed and the trial index
/// are mixed through splitmix64 and the result keys a ChaCha8 stream.
/// Identical `(master, trial)` always yields an identical stream.
pub fn trial_seed(master: u64, trial: u64) -> u64 {
    splitmix64(master ^ trial.wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

pub fn trial_rng(master: u64, trial: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(trial_seed(master, trial))
}

/// Per-checkpoint trajectory statistics; this struct is the line format of
/// the checkpoint stream.
#[derive(Clone, Debug, PartialEq, Eq, serde::Serialize)]
pub struct CheckpointStats {
    pub n: u64,
    /// `d(e, X_n)`.
    #[serde(with = "crate::rational::rat_serde")]
    pub distance: Rat,
    pub supp_size: u64,
    pub range_size: u64,
    #[serde(with = "crate::rational::rat_serde")]
    pub tsp_value: Rat,
    pub tsp_mode: TspMode,
}

/// First-visit event: `s(j)` and the position that enlarged the range.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FirstVisit {
    pub time: u64,
    pub position: Element,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TrajectoryRecord {
    pub horizon: u64,
    pub seed: u64,
    pub checkpoints: Vec<CheckpointStats>,
    /// `s(j)` is `first_visits[j-1].time`; strictly increasing.
    pub first_visits: Vec<FirstVisit>,
    pub first_return: Option<u64>,
    pub range_size: u64,
    pub final_state: WreathElement,
    /// `X_0 ..= X_n`, kept only when requested.
    pub path: Option<Vec<Element>>,
}

#[derive(Clone, Debug)]
pub struct SimOptions {
    pub horizon: u64,
    /// Sorted, deduplicated, all within `0..=horizon`.
    pub checkpoints: Vec<u64>,
    pub tsp: TspConfig,
    pub retain_path: bool,
}

impl SimOptions {
    /// Geometric checkpoint schedule `{floor(horizon / 2^i)}` plus the horizon.
    pub fn geometric(horizon: u64, tsp: TspConfig) -> SimOptions {
        let mut checkpoints = vec![0];
        let mut v = horizon;
        while v > 0 {
            checkpoints.push(v);
            v /= 2;
        }
        checkpoints.sort_unstable();
        checkpoints.dedup();
        SimOptions {
            horizon,
            checkpoints,
            tsp,
            retain_path: false,
        }
    }

    pub fn final_only(horizon: u64, tsp: TspConfig) -> SimOptions {
        SimOptions {
            horizon,
            checkpoints: vec![horizon],
            tsp,
            retain_path: false,
        }
    }

    pub fn with_retained_path(mut self) -> SimOptions {
        self.retain_path = true;
        self
    }
}

#[derive(Debug, Error)]
pub enum SimError {
    #[error("tour evaluation failed at checkpoint n={checkpoint}: {source}")]
    TspAtCheckpoint {
        checkpoint: u64,
        #[source]
        source: TspError,
    },
    #[error("metric query failed at checkpoint n={checkpoint}: {source}")]
    MetricAtCheckpoint {
        checkpoint: u64,
        #[source]
        source: MetricError,
    },
}

/// Runs one seeded trajectory. A pure function of `(measure, options, seed)`:
/// identical inputs produce bit-identical records.
///
/// Range and first-visit bookkeeping are exact at every step; the tour value
/// is evaluated only at checkpoints.
pub fn simulate(
    measure: &StepMeasure,
    opts: &SimOptions,
    seed: u64,
) -> Result<TrajectoryRecord, SimError> {
    let backend = measure.backend().as_ref();
    assert!(
        opts.checkpoints.iter().all(|&c| c <= opts.horizon),
        "checkpoints must lie within the horizon"
    );
    let checkpoint_set: BTreeSet<u64> = opts.checkpoints.iter().copied().collect();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let e = backend.identity();
    let mut position = e.clone();
    let mut lamps: HashMap<Element, u32> = HashMap::new();
    let mut visited: HashSet<Element> = HashSet::new();
    visited.insert(e.clone());
    let mut first_visits = vec![FirstVisit {
        time: 0,
        position: e.clone(),
    }];
    let mut first_return = None;
    let mut path = opts.retain_path.then(|| vec![e.clone()]);
    let mut checkpoints = Vec::with_capacity(opts.checkpoints.len());

    let modulus = measure.modulus();
    let record_checkpoint = |n: u64,
                             position: &Element,
                             lamps: &HashMap<Element, u32>,
                             range: usize|
     -> Result<CheckpointStats, SimError> {
        let distance = backend
            .distance(&e, position)
            .map_err(|source| SimError::MetricAtCheckpoint {
                checkpoint: n,
                source,
            })?;
        let supp: Vec<Element> = {
            let sorted: BTreeSet<&Element> = lamps.keys().collect();
            sorted.into_iter().cloned().collect()
        };
        let tour = tsp::solve(backend, &supp, position, &opts.tsp).map_err(|source| {
            SimError::TspAtCheckpoint {
                checkpoint: n,
                source,
            }
        })?;
        Ok(CheckpointStats {
            n,
            distance,
            supp_size: supp.len() as u64,
            range_size: range as u64,
            tsp_value: tour.value,
            tsp_mode: tour.mode,
        })
    };

    if checkpoint_set.contains(&0) {
        checkpoints.push(record_checkpoint(0, &position, &lamps, visited.len())?);
    }

    for n in 1..=opts.horizon {
        let atom = &measure.atoms()[measure.sample_index(&mut rng)];
        for (site, state) in &atom.lamps {
            let at = backend.multiply(&position, site);
            match lamps.get_mut(&at) {
                Some(s) => {
                    *s = (*s + state) % modulus;
                    if *s == 0 {
                        lamps.remove(&at);
                    }
                }
                None => {
                    lamps.insert(at, state % modulus);
                }
            }
        }
        position = backend.multiply(&position, &atom.step);
        if visited.insert(position.clone()) {
            first_visits.push(FirstVisit {
                time: n,
                position: position.clone(),
            });
        }
        if first_return.is_none() && backend.is_identity(&position) {
            first_return = Some(n);
        }
        if let Some(p) = path.as_mut() {
            p.push(position.clone());
        }
        if checkpoint_set.contains(&n) {
            checkpoints.push(record_checkpoint(n, &position, &lamps, visited.len())?);
        }
    }

    Ok(TrajectoryRecord {
        horizon: opts.horizon,
        seed,
        checkpoints,
        first_visits,
        first_return,
        range_size: visited.len() as u64,
        final_state: WreathElement {
            config: Configuration::from_lamps(modulus, lamps),
            position,
        },
        path,
    })
}

#[derive(Debug, Error)]
pub enum SkeletonError {
    #[error("the trajectory did not retain its position path; rerun with retain_path")]
    PathNotRetained,
    #[error(transparent)]
    Metric(#[from] MetricError),
}

/// Skeleton point: hitting time `t(k)` and position `H(k)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SkeletonPoint {
    pub time: u64,
    pub position: Element,
}

/// Maximal hitting skeleton of a retained path: `t(1) = 0`, and `t(k)` is the
/// first time the walk leaves every ball `B(H(j), separation)`, `j < k`.
/// Pairwise skeleton distances therefore exceed `separation` by construction.
pub fn hitting_skeleton(
    backend: &Backend,
    record: &TrajectoryRecord,
    separation: Rat,
) -> Result<Vec<SkeletonPoint>, SkeletonError> {
    let path = record.path.as_ref().ok_or(SkeletonError::PathNotRetained)?;
    let mut skeleton = vec![SkeletonPoint {
        time: 0,
        position: path[0].clone(),
    }];
    for (m, x) in path.iter().enumerate().skip(1) {
        let mut outside_all = true;
        // Check the most recent balls first: they are the likely containers.
        for pt in skeleton.iter().rev() {
            if backend.distance(&pt.position, x)? <= separation {
                outside_all = false;
                break;
            }
        }
        if outside_all {
            skeleton.push(SkeletonPoint {
                time: m as u64,
                position: x.clone(),
            });
        }
    }
    Ok(skeleton)
}

/// Per-skeleton-point lamp indicators at the horizon configuration.
#[derive(Clone, Debug, PartialEq)]
pub struct DeltaStats {
    /// Indicator per skeleton index: all four of
    /// `{H(k), H(k)s1, H(k)s2, H(k)s3}` are lit at the horizon.
    pub indicators: Vec<bool>,
    pub mean: f64,
    /// Wilson 99% interval for the aggregate mean.
    pub ci99: (f64, f64),
}

/// Evaluates the four-lamp indicators over the hitting skeleton built with
/// separation `2 l(sigma_3)`.
pub fn delta_statistics(
    backend: &Backend,
    record: &TrajectoryRecord,
    sigmas: &[Element; 3],
    sigma3_length: Rat,
) -> Result<DeltaStats, SkeletonError> {
    let separation = Rat::from_integer(2) * sigma3_length;
    let skeleton = hitting_skeleton(backend, record, separation)?;
    let config = &record.final_state.config;
    let indicators: Vec<bool> = skeleton
        .iter()
        .map(|pt| {
            let mut sites = vec![pt.position.clone()];
            for s in sigmas {
                sites.push(backend.multiply(&pt.position, s));
            }
            sites.iter().all(|site| config.state(site) != 0)
        })
        .collect();
    let hits = indicators.iter().filter(|&&b| b).count() as u64;
    let n = indicators.len() as u64;
    let mean = if n == 0 { 0.0 } else { hits as f64 / n as f64 };
    let ci99 = if n == 0 {
        (0.0, 0.0)
    } else {
        wilson_ci(hits, n, Z99)
    };
    Ok(DeltaStats {
        indicators,
        mean,
        ci99,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::rat;
    use crate::tsp::TspStrategy;

    fn line_backend() -> Arc<Backend> {
        Arc::new(Backend::line(&[(1, rat(1, 1))]).unwrap())
    }

    fn f2_backend() -> Arc<Backend> {
        Arc::new(Backend::free(2, &[rat(1, 1), rat(1, 1)]).unwrap())
    }

    fn lat(v: i64) -> Element {
        Element::Lattice(vec![v])
    }

    fn uniform_mu0(backend: &Backend) -> Vec<(Element, Rat)> {
        let gens = backend.generators();
        let p = Rat::new(1, gens.len() as i64);
        gens.iter().map(|g| (g.elem.clone(), p)).collect()
    }

    fn tsp_auto() -> TspConfig {
        TspConfig::new(TspStrategy::Auto, 18)
    }

    #[test]
    fn walk_switch_atom_layout() {
        let b = f2_backend();
        let m = StepMeasure::walk_switch(b.clone(), uniform_mu0(&b), 2).unwrap();
        assert_eq!(m.atoms().len(), 8);
        assert!(m.atoms().iter().all(|a| a.prob == rat(1, 8)));
        let total: Rat = m.atoms().iter().map(|a| a.prob).sum();
        assert_eq!(total, rat(1, 1));
        assert_eq!(m.lamp_radius(), rat(1, 1));
        assert_eq!(*m.generation(), GenerationCheck::Confirmed);
    }

    #[test]
    fn switch_walk_atom_layout_and_premove_toggle() {
        let b = line_backend();
        let m = StepMeasure::switch_walk(b.clone(), uniform_mu0(&b), rat(1, 2), 2).unwrap();
        assert_eq!(m.atoms().len(), 4);
        assert!(m.atoms().iter().all(|a| a.prob == rat(1, 4)));
        // Toggles happen at the pre-move position: composing the identity with
        // a switching atom lights the lamp at e, not at the arrival.
        let id = WreathElement::identity(&b, 2);
        let atom = m.atoms().iter().find(|a| !a.lamps.is_empty()).unwrap();
        let inc = WreathElement {
            config: Configuration::from_lamps(2, atom.lamps.iter().cloned()),
            position: atom.step.clone(),
        };
        let after = id.multiply(&b, &inc);
        assert_eq!(after.config.state(&lat(0)), 1);
        assert_eq!(after.config.state(&after.position), 0);
        // Lamp radius 0: all switching happens under the walker.
        assert_eq!(m.lamp_radius(), rat(0, 1));
    }

    #[test]
    fn switch_walk_rejects_degenerate_probabilities() {
        let b = line_backend();
        for p in [rat(0, 1), rat(1, 1), rat(3, 2)] {
            assert!(matches!(
                StepMeasure::switch_walk(b.clone(), uniform_mu0(&b), p, 2),
                Err(MeasureError::BadSwitchProbability)
            ));
        }
        // The lamp-atom mass is exactly p_switch * mu0: as p_switch shrinks the
        // measure reduces to the pure walk.
        let m = StepMeasure::switch_walk(b.clone(), uniform_mu0(&b), rat(1, 100), 2).unwrap();
        let lamp_mass: Rat = m
            .atoms()
            .iter()
            .filter(|a| !a.lamps.is_empty())
            .map(|a| a.prob)
            .sum();
        assert_eq!(lamp_mass, rat(1, 100));
    }

    #[test]
    fn counterexample_measure_structure() {
        let b = Arc::new(Backend::line(&[(1, rat(1, 1)), (2, rat(3, 1)), (3, rat(5, 1))]).unwrap());
        let p = rat(3, 4);
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
        let m = StepMeasure::custom(b, atoms, 2).unwrap();
        assert_eq!(m.atoms().len(), 12);
        let eighth = m.atoms().iter().filter(|a| a.prob == rat(1, 8)).count();
        let twentyfourth = m.atoms().iter().filter(|a| a.prob == rat(1, 24)).count();
        assert_eq!((eighth, twentyfourth), (6, 6));
        // Lamps only ever switch under the walker, so R = 0.
        assert_eq!(m.lamp_radius(), rat(0, 1));
        assert_eq!(*m.generation(), GenerationCheck::Confirmed);
    }

    #[test]
    fn single_move_atom_gets_generation_warning() {
        let b = line_backend();
        let atoms = vec![Atom {
            lamps: Vec::new(),
            step: lat(1),
            prob: rat(1, 1),
        }];
        let m = StepMeasure::custom(b, atoms, 2).unwrap();
        assert!(matches!(m.generation(), GenerationCheck::Unconfirmed(_)));
    }

    #[test]
    fn invalid_probabilities_are_rejected() {
        let b = line_backend();
        let atoms = vec![Atom {
            lamps: Vec::new(),
            step: lat(1),
            prob: rat(1, 2),
        }];
        assert!(matches!(
            StepMeasure::custom(b, atoms, 2),
            Err(MeasureError::BadTotal(_))
        ));
    }

    #[test]
    fn sampler_tracks_rational_frequencies() {
        let b = line_backend();
        let atoms = vec![
            Atom {
                lamps: vec![],
                step: lat(1),
                prob: rat(1, 8),
            },
            Atom {
                lamps: vec![],
                step: lat(-1),
                prob: rat(1, 24),
            },
            Atom {
                lamps: vec![],
                step: lat(2),
                prob: rat(5, 6),
            },
        ];
        let m = StepMeasure::custom(b, atoms, 2).unwrap();
        let mut rng = trial_rng(99, 0);
        let mut counts = [0u64; 3];
        let draws = 200_000;
        for _ in 0..draws {
            counts[m.sample_index(&mut rng)] += 1;
        }
        let freqs: Vec<f64> = counts.iter().map(|&c| c as f64 / draws as f64).collect();
        for (freq, expect) in freqs.iter().zip([1.0 / 8.0, 1.0 / 24.0, 5.0 / 6.0]) {
            assert!((freq - expect).abs() < 0.005, "freq {freq} vs {expect}");
        }
    }

    #[test]
    fn horizon_zero_records_the_start_state() {
        let b = line_backend();
        let m = StepMeasure::walk_switch(b.clone(), uniform_mu0(&b), 2).unwrap();
        let opts = SimOptions::geometric(0, tsp_auto());
        let rec = simulate(&m, &opts, 1).unwrap();
        assert_eq!(rec.range_size, 1);
        assert_eq!(rec.checkpoints.len(), 1);
        assert_eq!(rec.checkpoints[0].n, 0);
        assert_eq!(rec.checkpoints[0].distance, rat(0, 1));
        assert!(rec.final_state.is_identity(&b));
    }

    #[test]
    fn identical_seed_gives_bit_identical_records() {
        let b = f2_backend();
        let m = StepMeasure::walk_switch(b.clone(), uniform_mu0(&b), 2).unwrap();
        let opts = SimOptions::geometric(300, tsp_auto()).with_retained_path();
        let a = simulate(&m, &opts, 1234).unwrap();
        let z = simulate(&m, &opts, 1234).unwrap();
        assert_eq!(a, z);
        let other = simulate(&m, &opts, 1235).unwrap();
        assert_ne!(a, other);
    }

    #[test]
    fn range_rate_is_consistent_across_seeds() {
        // Recurrent simple walk on Z: |R_n|/n is small and stable by n = 10^4.
        let b = line_backend();
        let m = StepMeasure::walk_switch(b.clone(), uniform_mu0(&b), 2).unwrap();
        let opts = SimOptions::final_only(10_000, tsp_auto());
        let rates: Vec<f64> = (0..12)
            .map(|t| {
                let rec = simulate(&m, &opts, trial_seed(7, t)).unwrap();
                rec.range_size as f64 / opts.horizon as f64
            })
            .collect();
        let mean = rates.iter().sum::<f64>() / rates.len() as f64;
        for r in rates {
            assert!((r - mean).abs() < 0.05);
        }
    }

    #[test]
    fn walk_switch_mean_support_is_half_mean_range() {
        // E[|supp(eta_n)|] = E[|R_n|] / 2 for Walk-Switch steps.
        let b = line_backend();
        let m = StepMeasure::walk_switch(b.clone(), uniform_mu0(&b), 2).unwrap();
        let n = 200u64;
        let trials = 10_000u64;
        let opts = SimOptions::final_only(n, tsp_auto());
        let mut supp_sum = 0.0;
        let mut range_sum = 0.0;
        for t in 0..trials {
            let rec = simulate(&m, &opts, trial_seed(2024, t)).unwrap();
            supp_sum += rec.final_state.config.support_size() as f64;
            range_sum += rec.range_size as f64;
        }
        let supp_mean = supp_sum / trials as f64;
        let range_mean = range_sum / trials as f64;
        assert!(
            (supp_mean - range_mean / 2.0).abs() <= 0.02 * n as f64,
            "supp {supp_mean} vs range/2 {}",
            range_mean / 2.0
        );
    }

    #[test]
    fn position_consistency_with_functional_group_law() {
        // The in-place stepping must agree with folding wreath multiplication.
        let b = f2_backend();
        let m = StepMeasure::walk_switch(b.clone(), uniform_mu0(&b), 2).unwrap();
        let opts = SimOptions {
            horizon: 60,
            checkpoints: vec![60],
            tsp: tsp_auto(),
            retain_path: true,
        };
        let seed = 5;
        let rec = simulate(&m, &opts, seed).unwrap();

        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut z = WreathElement::identity(&b, 2);
        for _ in 0..60 {
            let atom = &m.atoms()[m.sample_index(&mut rng)];
            let inc = WreathElement {
                config: Configuration::from_lamps(2, atom.lamps.iter().cloned()),
                position: atom.step.clone(),
            };
            z = z.multiply(&b, &inc);
        }
        assert_eq!(z, rec.final_state);
        assert_eq!(
            rec.path.as_ref().unwrap().last().unwrap(),
            &rec.final_state.position
        );
    }

    #[test]
    fn first_visits_are_strictly_increasing_and_match_range() {
        let b = f2_backend();
        let m = StepMeasure::walk_switch(b.clone(), uniform_mu0(&b), 2).unwrap();
        let opts = SimOptions::final_only(200, tsp_auto()).with_retained_path();
        let rec = simulate(&m, &opts, 77).unwrap();
        assert_eq!(rec.first_visits.len() as u64, rec.range_size);
        for w in rec.first_visits.windows(2) {
            assert!(w[0].time < w[1].time);
        }
        // Range counts distinct canonical positions of the retained path.
        let distinct: HashSet<&Element> = rec.path.as_ref().unwrap().iter().collect();
        assert_eq!(distinct.len() as u64, rec.range_size);
    }

    #[test]
    fn skeleton_of_a_confined_path_is_the_origin() {
        // A deterministic lazy loop never leaves B(e, 2).
        let b = line_backend();
        let atoms = vec![
            Atom {
                lamps: vec![(lat(0), 1)],
                step: lat(1),
                prob: rat(1, 2),
            },
            Atom {
                lamps: vec![],
                step: lat(-1),
                prob: rat(1, 2),
            },
        ];
        let m = StepMeasure::custom(b.clone(), atoms, 2).unwrap();
        let opts = SimOptions {
            horizon: 30,
            checkpoints: vec![],
            tsp: tsp_auto(),
            retain_path: true,
        };
        let rec = simulate(&m, &opts, 3).unwrap();
        if rec
            .path
            .as_ref()
            .unwrap()
            .iter()
            .all(|x| matches!(x, Element::Lattice(v) if v[0].abs() <= 2))
        {
            let sk = hitting_skeleton(&b, &rec, rat(2, 1)).unwrap();
            assert_eq!(sk.len(), 1);
            assert_eq!(
                sk[0],
                SkeletonPoint {
                    time: 0,
                    position: lat(0)
                }
            );
        }
    }

    #[test]
    fn skeleton_of_monotone_path_exits_at_three() {
        let b = line_backend();
        let atoms = vec![Atom {
            lamps: vec![(lat(0), 1)],
            step: lat(1),
            prob: rat(1, 1),
        }];
        let m = StepMeasure::custom(b.clone(), atoms, 2).unwrap();
        let opts = SimOptions {
            horizon: 10,
            checkpoints: vec![],
            tsp: tsp_auto(),
            retain_path: true,
        };
        let rec = simulate(&m, &opts, 1).unwrap();
        // sigma_3 of unit length: separation 2, so t(2) = 3 (first exit from B(0, 2)).
        let sk = hitting_skeleton(&b, &rec, rat(2, 1)).unwrap();
        assert_eq!(
            sk[1],
            SkeletonPoint {
                time: 3,
                position: lat(3)
            }
        );
        // Separation invariant.
        for i in 0..sk.len() {
            for j in 0..i {
                let d = b.distance(&sk[i].position, &sk[j].position).unwrap();
                assert!(d > rat(2, 1));
            }
        }
    }

    #[test]
    fn skeleton_requires_a_retained_path() {
        let b = line_backend();
        let m = StepMeasure::walk_switch(b.clone(), uniform_mu0(&b), 2).unwrap();
        let rec = simulate(&m, &SimOptions::final_only(5, tsp_auto()), 1).unwrap();
        assert!(matches!(
            hitting_skeleton(&b, &rec, rat(2, 1)),
            Err(SkeletonError::PathNotRetained)
        ));
    }

    #[test]
    fn delta_statistics_degenerate_cases() {
        let b = line_backend();
        let sigmas = [lat(1), lat(-1), lat(2)];

        // All lamps off at the horizon: mean 0.
        let rec = TrajectoryRecord {
            horizon: 0,
            seed: 0,
            checkpoints: vec![],
            first_visits: vec![FirstVisit {
                time: 0,
                position: lat(0),
            }],
            first_return: None,
            range_size: 1,
            final_state: WreathElement::identity(&b, 2),
            path: Some(vec![lat(0)]),
        };
        let stats = delta_statistics(&b, &rec, &sigmas, rat(2, 1)).unwrap();
        assert_eq!(stats.mean, 0.0);
        assert_eq!(stats.indicators, vec![false]);

        // Single-point skeleton with all four lamps set: mean 1.
        let lit =
            Configuration::from_lamps(2, [lat(0), lat(1), lat(-1), lat(2)].map(|x| (x, 1u32)));
        let rec = TrajectoryRecord {
            final_state: WreathElement {
                config: lit,
                position: lat(0),
            },
            ..rec
        };
        let stats = delta_statistics(&b, &rec, &sigmas, rat(2, 1)).unwrap();
        assert_eq!(stats.mean, 1.0);
    }

    #[test]
    fn checkpoint_line_serialises_rationals_exactly() {
        let stats = CheckpointStats {
            n: 7,
            distance: rat(5, 2),
            supp_size: 3,
            range_size: 6,
            tsp_value: rat(13, 3),
            tsp_mode: TspMode::ExactDp,
        };
        let line = serde_json::to_string(&stats).unwrap();
        assert!(line.contains("\"5/2\""));
        assert!(line.contains("\"13/3\""));
        assert!(line.contains("exact-dp"));
    }
}
