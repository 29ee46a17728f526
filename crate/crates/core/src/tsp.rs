//! The travelling-salesman pseudo-metric `d_TS(eta, x)`: the minimal length
//! of a tour on `G` from the identity to `x` that visits every lamp in
//! `supp(eta)`.
//!
//! Three exact routes and one heuristic are provided:
//!
//! * subset dynamic programming over (visited-set, last-point) states, exact
//!   up to a configurable support cap;
//! * a closed form on tree backends: `2 W - d(e, target)` where `W` is the
//!   weight of the minimal subtree spanning the required points (the subtree
//!   is a union of root paths because the identity is always required);
//! * a line sweep on `Z` when the metric is linear, `d(0, z) = r1 |z|`;
//! * nearest-neighbour construction plus 2-opt as an upper bound.
//!
//! Because tour legs are full metric distances, revisiting points is
//! implicitly allowed and revisit-free orders are optimal. Every result
//! carries its mode so downstream consumers can refuse heuristic values
//! where exactness is required. Ties between optimal orders are broken by
//! lexicographic order of the canonical element keys.

use std::collections::BTreeSet;

use itertools::Itertools;
use num_traits::Zero;
use thiserror::Error;

use crate::group::{Backend, BackendKind, Element, MetricError};
use crate::rational::Rat;

/// Default cap on the interior support size of the subset DP.
pub const DEFAULT_DP_CAP: usize = 18;
/// Hard guard for the factorial brute-force oracle.
pub const BRUTEFORCE_CAP: usize = 9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TspMode {
    ExactDp,
    ExactTree,
    ExactLine,
    HeuristicUpper,
}

impl TspMode {
    pub fn is_exact(self) -> bool {
        !matches!(self, TspMode::HeuristicUpper)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            TspMode::ExactDp => "exact-dp",
            TspMode::ExactTree => "exact-tree",
            TspMode::ExactLine => "exact-line",
            TspMode::HeuristicUpper => "heuristic-upper",
        }
    }
}

/// Tour value, the visit order of the interior support points (the identity
/// and the endpoint are implicit), and the mode that produced it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TspResult {
    pub value: Rat,
    pub order: Vec<Element>,
    pub mode: TspMode,
}

#[derive(Debug, Error)]
pub enum TspError {
    #[error("support size {size} exceeds the exact-dp cap {cap}; use heuristic mode")]
    SupportTooLarge { size: usize, cap: usize },
    #[error("tree closed form requires a free-group or Z2*Z2 backend")]
    NotTree,
    #[error("line closed form requires the 1-dimensional lattice backend")]
    NotLine,
    #[error("metric on Z is not linear at the support extremes; use exact-dp instead")]
    NotLinear,
    #[error(transparent)]
    Metric(#[from] MetricError),
}

/// Which solvers `solve` may pick.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TspStrategy {
    /// Closed forms where valid, subset DP within the cap, heuristic beyond.
    Auto,
    /// Closed forms and subset DP only; error beyond the cap.
    ExactOnly,
    /// Always the 2-opt upper bound.
    HeuristicOnly,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TspConfig {
    pub strategy: TspStrategy,
    pub dp_cap: usize,
}

impl TspConfig {
    pub fn new(strategy: TspStrategy, dp_cap: usize) -> TspConfig {
        TspConfig { strategy, dp_cap }
    }
}

impl Default for TspConfig {
    fn default() -> TspConfig {
        TspConfig::new(TspStrategy::Auto, DEFAULT_DP_CAP)
    }
}

/// Interior required points: the deduplicated support minus the identity and
/// the endpoint, which a tour visits regardless of order.
fn interior_points(backend: &Backend, supp: &[Element], target: &Element) -> Vec<Element> {
    let set: BTreeSet<&Element> = supp.iter().collect();
    set.into_iter()
        .filter(|p| !backend.is_identity(p) && *p != target)
        .cloned()
        .collect()
}

/// Dispatches to the cheapest applicable solver for the given strategy.
pub fn solve(
    backend: &Backend,
    supp: &[Element],
    target: &Element,
    cfg: &TspConfig,
) -> Result<TspResult, TspError> {
    match cfg.strategy {
        TspStrategy::HeuristicOnly => heuristic(backend, supp, target),
        TspStrategy::Auto | TspStrategy::ExactOnly => {
            if backend.is_tree() {
                return exact_tree(backend, supp, target);
            }
            if matches!(backend.kind(), BackendKind::Lattice { dim: 1 }) {
                match exact_line(backend, supp, target) {
                    Ok(res) => return Ok(res),
                    Err(TspError::NotLinear) => {}
                    Err(e) => return Err(e),
                }
            }
            match exact_dp(backend, supp, target, cfg.dp_cap) {
                Ok(res) => Ok(res),
                Err(TspError::SupportTooLarge { size, cap })
                    if cfg.strategy == TspStrategy::Auto =>
                {
                    let _ = (size, cap);
                    heuristic(backend, supp, target)
                }
                Err(e) => Err(e),
            }
        }
    }
}

/// Exact open-path minimum by subset DP over (visited-set, last-point)
/// states, start `e`, forced endpoint `target`.
///
/// Memory is `O(2^n * n)` rationals for `n` interior points; the default cap
/// of 18 keeps this under about 80 MB.
pub fn exact_dp(
    backend: &Backend,
    supp: &[Element],
    target: &Element,
    cap: usize,
) -> Result<TspResult, TspError> {
    let pts = interior_points(backend, supp, target);
    let n = pts.len();
    if n > cap {
        return Err(TspError::SupportTooLarge { size: n, cap });
    }
    let e = backend.identity();
    let d_target = backend.distance(&e, target)?;
    if n == 0 {
        return Ok(TspResult {
            value: d_target,
            order: Vec::new(),
            mode: TspMode::ExactDp,
        });
    }
    let from_e: Vec<Rat> = pts
        .iter()
        .map(|p| backend.distance(&e, p))
        .collect::<Result<_, _>>()?;
    let to_target: Vec<Rat> = pts
        .iter()
        .map(|p| backend.distance(p, target))
        .collect::<Result<_, _>>()?;
    let between = backend.pairwise_distances(&pts)?;

    // g[mask][j]: minimal cost starting at pts[j], visiting exactly `mask`
    // (j not in mask), then ending at target.
    let full: usize = (1 << n) - 1;
    let mut g = vec![vec![Rat::zero(); n]; 1 << n];
    for j in 0..n {
        g[0][j] = to_target[j];
    }
    for mask in 1usize..=full {
        for j in 0..n {
            if mask & (1 << j) != 0 {
                continue;
            }
            let mut best: Option<Rat> = None;
            let mut rest = mask;
            while rest != 0 {
                let k = rest.trailing_zeros() as usize;
                rest &= rest - 1;
                let cand = between[j][k] + g[mask & !(1 << k)][k];
                if best.is_none_or(|b| cand < b) {
                    best = Some(cand);
                }
            }
            g[mask][j] = best.expect("mask nonempty");
        }
    }
    let mut total: Option<Rat> = None;
    for k in 0..n {
        let cand = from_e[k] + g[full & !(1 << k)][k];
        if total.is_none_or(|t| cand < t) {
            total = Some(cand);
        }
    }
    let total = total.expect("n > 0");

    // Forward reconstruction; `pts` is sorted, so taking the first index that
    // stays optimal yields the lexicographically smallest optimal order.
    let mut order = Vec::with_capacity(n);
    let mut remaining = full;
    let mut needed = total;
    let mut current: Option<usize> = None;
    while remaining != 0 {
        let mut chosen = None;
        let mut rest = remaining;
        while rest != 0 {
            let k = rest.trailing_zeros() as usize;
            rest &= rest - 1;
            let leg = match current {
                None => from_e[k],
                Some(c) => between[c][k],
            };
            if leg + g[remaining & !(1 << k)][k] == needed {
                chosen = Some(k);
                break;
            }
        }
        let k = chosen.expect("an optimal continuation always exists");
        let leg = match current {
            None => from_e[k],
            Some(c) => between[c][k],
        };
        needed -= leg;
        order.push(pts[k].clone());
        current = Some(k);
        remaining &= !(1 << k);
    }

    Ok(TspResult {
        value: total,
        order,
        mode: TspMode::ExactDp,
    })
}

fn word_codes(e: &Element) -> Vec<i16> {
    match e {
        Element::Free(w) => w.clone(),
        Element::Alt(w) => w.iter().map(|&l| l as i16).collect(),
        Element::Lattice(_) => unreachable!("tree solver only sees words"),
    }
}

fn element_from_codes(backend: &Backend, codes: &[i16]) -> Element {
    match backend.kind() {
        BackendKind::Free { .. } => Element::Free(codes.to_vec()),
        BackendKind::FreeProductC2C2 => Element::Alt(codes.iter().map(|&c| c as u8).collect()),
        BackendKind::Lattice { .. } => unreachable!(),
    }
}

#[derive(Default)]
struct TrieNode {
    children: Vec<(i16, usize)>,
    required: bool,
    on_target_path: bool,
}

/// Closed form on trees: `2 W - d(e, target)` with `W` the weight of the
/// union of root paths to the required points. The order comes from a
/// depth-first sweep that defers the branch containing the target at every
/// node, so the emitted order realises the optimal value.
pub fn exact_tree(
    backend: &Backend,
    supp: &[Element],
    target: &Element,
) -> Result<TspResult, TspError> {
    if !backend.is_tree() {
        return Err(TspError::NotTree);
    }
    let pts = interior_points(backend, supp, target);
    let e = backend.identity();
    let d_target = backend.distance(&e, target)?;

    let mut nodes: Vec<TrieNode> = vec![TrieNode::default()];
    let mut weight = Rat::zero();
    {
        let mut insert = |word: &[i16], required: bool, target_path: bool| {
            let mut cur = 0usize;
            if target_path {
                nodes[0].on_target_path = true;
            }
            for &letter in word {
                let next = match nodes[cur].children.iter().find(|(l, _)| *l == letter) {
                    Some(&(_, idx)) => idx,
                    None => {
                        let idx = nodes.len();
                        nodes.push(TrieNode::default());
                        nodes[cur].children.push((letter, idx));
                        weight += backend.letter_length(letter);
                        idx
                    }
                };
                cur = next;
                if target_path {
                    nodes[cur].on_target_path = true;
                }
            }
            if required {
                nodes[cur].required = true;
            }
        };
        insert(&word_codes(target), false, true);
        for p in &pts {
            insert(&word_codes(p), true, false);
        }
    }
    let value = Rat::from_integer(2) * weight - d_target;

    // Iterative DFS with children sorted by letter, target branch last.
    let mut order = Vec::with_capacity(pts.len());
    let mut stack: Vec<(usize, Vec<i16>)> = vec![(0, Vec::new())];
    while let Some((idx, word)) = stack.pop() {
        if nodes[idx].required {
            order.push(element_from_codes(backend, &word));
        }
        let mut kids = nodes[idx].children.clone();
        kids.sort_by_key(|&(l, c)| (nodes[c].on_target_path, l));
        // Stack is LIFO: push in reverse so non-target branches run first.
        for (letter, child) in kids.into_iter().rev() {
            let mut w = word.clone();
            w.push(letter);
            stack.push((child, w));
        }
    }

    Ok(TspResult {
        value,
        order,
        mode: TspMode::ExactTree,
    })
}

fn lattice_scalar(e: &Element) -> i64 {
    match e {
        Element::Lattice(v) if v.len() == 1 => v[0],
        _ => unreachable!("line solver only sees 1-dimensional lattice points"),
    }
}

/// Line sweep on `Z` with a linear metric: the better of going left first or
/// right first, scaled by `r1`. The linearity precondition `d(0, z) = r1 |z|`
/// is verified at the extremes of `supp` together with the target; failure is
/// reported so callers can fall back to the subset DP.
pub fn exact_line(
    backend: &Backend,
    supp: &[Element],
    target: &Element,
) -> Result<TspResult, TspError> {
    if !matches!(backend.kind(), BackendKind::Lattice { dim: 1 }) {
        return Err(TspError::NotLine);
    }
    let e = backend.identity();
    let r1 = backend.r1();
    let t = lattice_scalar(target);
    let mut ext: Vec<i64> = supp.iter().map(lattice_scalar).collect();
    ext.push(t);
    let zmin = *ext.iter().min().expect("nonempty");
    let zmax = *ext.iter().max().expect("nonempty");
    for z in [zmin, zmax] {
        let d = backend.distance(&e, &Element::Lattice(vec![z]))?;
        if d != r1 * Rat::from_integer(z.abs()) {
            return Err(TspError::NotLinear);
        }
    }

    let pts: Vec<i64> = interior_points(backend, supp, target)
        .iter()
        .map(lattice_scalar)
        .collect();
    let m = pts.iter().copied().chain([0, t]).min().expect("nonempty");
    let big = pts.iter().copied().chain([0, t]).max().expect("nonempty");

    // Going left first: 0 -> m -> M -> t; right first: 0 -> M -> m -> t.
    let left_units = (0 - m) + (big - m) + (big - t);
    let right_units = (big - 0) + (big - m) + (t - m);
    let mut down: Vec<i64> = pts.iter().copied().filter(|&p| p < 0).collect();
    down.sort_unstable_by(|a, b| b.cmp(a));
    let mut up: Vec<i64> = pts.iter().copied().filter(|&p| p > 0).collect();
    up.sort_unstable();
    let left_order: Vec<i64> = down.iter().chain(up.iter()).copied().collect();
    let right_order: Vec<i64> = up.iter().chain(down.iter()).copied().collect();

    let (units, order_scalars) = if left_units < right_units
        || (left_units == right_units && left_order <= right_order)
    {
        (left_units, left_order)
    } else {
        (right_units, right_order)
    };
    Ok(TspResult {
        value: r1 * Rat::from_integer(units),
        order: order_scalars
            .into_iter()
            .map(|p| Element::Lattice(vec![p]))
            .collect(),
        mode: TspMode::ExactLine,
    })
}

/// Nearest-neighbour construction from `e` with forced endpoint `target`,
/// improved to a 2-opt local optimum. Always an upper bound on the exact
/// value; exact when there is at most one interior point.
pub fn heuristic(
    backend: &Backend,
    supp: &[Element],
    target: &Element,
) -> Result<TspResult, TspError> {
    let pts = interior_points(backend, supp, target);
    let e = backend.identity();
    let n = pts.len();
    // Index 0 is e, 1..=n the interior points, n+1 the target.
    let mut all: Vec<Element> = Vec::with_capacity(n + 2);
    all.push(e);
    all.extend(pts.iter().cloned());
    all.push(target.clone());
    let dist = backend.pairwise_distances(&all)?;

    let mut seq: Vec<usize> = vec![0];
    let mut unvisited: BTreeSet<usize> = (1..=n).collect();
    while !unvisited.is_empty() {
        let cur = *seq.last().expect("nonempty");
        // BTreeSet iterates in canonical order, so ties pick the smaller key.
        let next = *unvisited
            .iter()
            .min_by_key(|&&p| dist[cur][p])
            .expect("nonempty");
        unvisited.remove(&next);
        seq.push(next);
    }
    seq.push(n + 1);

    let cost = |s: &[usize]| -> Rat {
        s.windows(2).map(|w| dist[w[0]][w[1]]).sum()
    };
    // 2-opt with fixed endpoints: best improvement, deterministic scan order.
    loop {
        let mut best_delta = Rat::zero();
        let mut best_pair = None;
        for i in 1..seq.len() - 1 {
            for j in i + 1..seq.len() - 1 {
                let delta = dist[seq[i - 1]][seq[j]] + dist[seq[i]][seq[j + 1]]
                    - dist[seq[i - 1]][seq[i]]
                    - dist[seq[j]][seq[j + 1]];
                if delta < best_delta {
                    best_delta = delta;
                    best_pair = Some((i, j));
                }
            }
        }
        match best_pair {
            Some((i, j)) => seq[i..=j].reverse(),
            None => break,
        }
    }

    Ok(TspResult {
        value: cost(&seq),
        order: seq[1..seq.len() - 1].iter().map(|&i| all[i].clone()).collect(),
        mode: TspMode::HeuristicUpper,
    })
}

/// Test oracle: the minimum over all visit orders of the full support.
///
/// Permuting the identity or the target inside the order can only lengthen a
/// tour, so this agrees with the interior-point solvers.
pub fn bruteforce_oracle(
    backend: &Backend,
    supp: &[Element],
    target: &Element,
) -> Result<Rat, TspError> {
    let set: BTreeSet<&Element> = supp.iter().collect();
    let pts: Vec<&Element> = set.into_iter().collect();
    if pts.len() > BRUTEFORCE_CAP {
        return Err(TspError::SupportTooLarge {
            size: pts.len(),
            cap: BRUTEFORCE_CAP,
        });
    }
    let e = backend.identity();
    let mut best: Option<Rat> = None;
    let k = pts.len();
    for perm in pts.iter().permutations(k) {
        let mut cost = Rat::zero();
        let mut cur = &e;
        for p in perm {
            cost += backend.distance(cur, p)?;
            cur = p;
        }
        cost += backend.distance(cur, target)?;
        if best.is_none_or(|b| cost < b) {
            best = Some(cost);
        }
    }
    match best {
        Some(b) => Ok(b),
        // Empty support: the tour is a geodesic.
        None => Ok(backend.distance(&e, target)?),
    }
}
