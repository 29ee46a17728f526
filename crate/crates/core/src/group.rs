//! Finitely generated groups with weighted symmetric generating sets.
//!
//! Three backends are supported, each with a canonical element form and an
//! exact metric:
//!
//! * integer lattices `Z^k` — elements are integer vectors, distances come
//!   from a uniform-cost search with memoisation of `d(0, z)` (the metric is
//!   translation invariant);
//! * free groups `F_k` — elements are freely reduced words, the reduced
//!   spelling is a geodesic because free cancellation only shortens paths;
//! * the free product `Z2 * Z2 = <a, b | a^2 = b^2 = e>` — elements are
//!   alternating words in `a`, `b`, again with geodesic reduced spellings.
//!
//! Metric queries that would exceed the configured search caps fail with an
//! explicit error; they are never silently truncated.

use std::cmp::Reverse;
use std::collections::hash_map::Entry;
use std::collections::{BinaryHeap, HashMap};
use std::fmt;
use std::sync::RwLock;

use num_traits::Zero;
use thiserror::Error;

use crate::rational::{rat_to_string, Rat};

/// Default cap on settled states in a lattice metric search.
pub const DEFAULT_SEARCH_CAP: usize = 1_000_000;
/// Default cap on the number of elements a ball may contain.
pub const DEFAULT_BALL_CAP: usize = 1_000_000;

/// Canonical, hashable group element. The variant must match the backend kind.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Element {
    /// Integer vector of the backend's dimension.
    Lattice(Vec<i64>),
    /// Freely reduced word; letter `k > 0` is the k-th generator, `-k` its inverse.
    Free(Vec<i16>),
    /// Alternating word over the involutions `a` (0) and `b` (1).
    Alt(Vec<u8>),
}

impl fmt::Debug for Element {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Element::Lattice(v) => write!(f, "Lat{:?}", v),
            Element::Free(w) => {
                write!(f, "Free(")?;
                for &l in w {
                    write!(f, "{}", free_letter_char(l))?;
                }
                write!(f, ")")
            }
            Element::Alt(w) => {
                write!(f, "Alt(")?;
                for &l in w {
                    write!(f, "{}", if l == 0 { 'a' } else { 'b' })?;
                }
                write!(f, ")")
            }
        }
    }
}

fn free_letter_char(l: i16) -> char {
    debug_assert!(l != 0);
    if l > 0 {
        (b'a' + (l - 1) as u8) as char
    } else {
        (b'A' + (-l - 1) as u8) as char
    }
}

/// One generator: a label, its group action, and a positive length.
#[derive(Clone, Debug)]
pub struct Generator {
    pub label: String,
    pub elem: Element,
    pub length: Rat,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum BackendKind {
    /// `Z^dim` with an arbitrary finite symmetric set of nonzero vectors.
    Lattice { dim: usize },
    /// Free group of the given rank; generators are the single letters.
    Free { rank: usize },
    /// `Z2 * Z2` with generators `a`, `b`.
    FreeProductC2C2,
}

#[derive(Debug, Error)]
pub enum BackendError {
    #[error("generating set is empty")]
    EmptyGeneratorSet,
    #[error("generator `{0}` has non-positive length")]
    NonPositiveLength(String),
    #[error("generator `{0}` acts as the identity, which is excluded")]
    IdentityGenerator(String),
    #[error("generating set is not symmetric: the inverse of `{0}` is missing or has a different length")]
    NotSymmetric(String),
    #[error("generator `{0}` has dimension {1}, expected {2}")]
    DimensionMismatch(String, usize, usize),
    #[error("free rank {0} out of range 1..=26")]
    BadRank(usize),
    #[error("lattice dimension must be at least 1")]
    BadDimension,
    #[error("duplicate generator action for `{0}`")]
    DuplicateGenerator(String),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MetricError {
    #[error("metric query too large: {expanded} states expanded, cap {cap}")]
    SearchCapExceeded { expanded: usize, cap: usize },
    #[error("ball too large: more than {cap} elements")]
    BallCapExceeded { cap: usize },
    #[error("target is unreachable from the origin with this generating set")]
    Unreachable,
}

#[derive(Debug, Error)]
pub enum ParseElementError {
    #[error("cannot parse `{0}` as an element of this backend")]
    Invalid(String),
    #[error("letter `{0}` is outside the backend's rank")]
    LetterOutOfRange(char),
    #[error("expected {expected} lattice coordinates, got {got}")]
    WrongDimension { expected: usize, got: usize },
}

/// A group backend: kind, weighted symmetric generators and metric caps.
///
/// Construction is single-threaded; after that all queries take `&self` and
/// are safe to run concurrently (the lattice distance memo uses interior
/// locking only).
pub struct Backend {
    kind: BackendKind,
    gens: Vec<Generator>,
    r1: Rat,
    /// Per base letter for Free, `[l(a), l(b)]` for C2C2, unused for lattices.
    letter_lengths: Vec<Rat>,
    /// Axis lengths when the lattice generators are exactly the unit moves;
    /// the metric is then the weighted Manhattan distance and search is
    /// bypassed.
    hypercubic_axis_lengths: Option<Vec<Rat>>,
    search_cap: usize,
    ball_cap: usize,
    memo: RwLock<HashMap<Vec<i64>, Rat>>,
}

impl fmt::Debug for Backend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Backend")
            .field("kind", &self.kind)
            .field("generators", &self.gens.len())
            .field("r1", &rat_to_string(self.r1))
            .finish()
    }
}

impl Backend {
    /// Full-control lattice constructor. Actions are nonzero integer vectors;
    /// the set must be symmetric with matching lengths.
    pub fn lattice(
        dim: usize,
        gens: Vec<(String, Vec<i64>, Rat)>,
    ) -> Result<Backend, BackendError> {
        if dim == 0 {
            return Err(BackendError::BadDimension);
        }
        let gens: Vec<Generator> = gens
            .into_iter()
            .map(|(label, v, length)| Generator {
                label,
                elem: Element::Lattice(v),
                length,
            })
            .collect();
        for g in &gens {
            let Element::Lattice(v) = &g.elem else { unreachable!() };
            if v.len() != dim {
                return Err(BackendError::DimensionMismatch(g.label.clone(), v.len(), dim));
            }
            if v.iter().all(|&c| c == 0) {
                return Err(BackendError::IdentityGenerator(g.label.clone()));
            }
        }
        let backend = Backend::assemble(BackendKind::Lattice { dim }, gens, Vec::new())?;
        Ok(backend)
    }

    /// `Z` with generator pairs `{+step, -step}`; steps must be positive and distinct.
    pub fn line(pairs: &[(i64, Rat)]) -> Result<Backend, BackendError> {
        let mut gens = Vec::new();
        for &(step, len) in pairs {
            assert!(step > 0, "line steps are given as positive integers");
            gens.push((format!("+{step}"), vec![step], len));
            gens.push((format!("-{step}"), vec![-step], len));
        }
        Backend::lattice(1, gens)
    }

    /// `Z^dim` with the standard generators `±e_i`, one length per axis.
    pub fn hypercubic(dim: usize, lengths: &[Rat]) -> Result<Backend, BackendError> {
        assert_eq!(lengths.len(), dim, "one length per axis");
        let mut gens = Vec::new();
        for (i, &len) in lengths.iter().enumerate() {
            let mut v = vec![0i64; dim];
            v[i] = 1;
            gens.push((format!("+e{}", i + 1), v.clone(), len));
            v[i] = -1;
            gens.push((format!("-e{}", i + 1), v, len));
        }
        Backend::lattice(dim, gens)
    }

    /// Free group of the given rank; `pair_lengths[i]` is the common length of
    /// the i-th letter and its inverse.
    pub fn free(rank: usize, pair_lengths: &[Rat]) -> Result<Backend, BackendError> {
        if rank == 0 || rank > 26 {
            return Err(BackendError::BadRank(rank));
        }
        assert_eq!(pair_lengths.len(), rank, "one length per letter pair");
        let mut gens = Vec::new();
        let mut letter_lengths = Vec::new();
        for (i, &len) in pair_lengths.iter().enumerate() {
            let letter = (i + 1) as i16;
            gens.push(Generator {
                label: free_letter_char(letter).to_string(),
                elem: Element::Free(vec![letter]),
                length: len,
            });
            gens.push(Generator {
                label: free_letter_char(-letter).to_string(),
                elem: Element::Free(vec![-letter]),
                length: len,
            });
            letter_lengths.push(len);
        }
        Backend::assemble(BackendKind::Free { rank }, gens, letter_lengths)
    }

    /// `Z2 * Z2` with the two involutions `a`, `b`.
    pub fn c2c2(len_a: Rat, len_b: Rat) -> Result<Backend, BackendError> {
        let gens = vec![
            Generator {
                label: "a".to_string(),
                elem: Element::Alt(vec![0]),
                length: len_a,
            },
            Generator {
                label: "b".to_string(),
                elem: Element::Alt(vec![1]),
                length: len_b,
            },
        ];
        Backend::assemble(BackendKind::FreeProductC2C2, gens, vec![len_a, len_b])
    }

    fn assemble(
        kind: BackendKind,
        gens: Vec<Generator>,
        letter_lengths: Vec<Rat>,
    ) -> Result<Backend, BackendError> {
        if gens.is_empty() {
            return Err(BackendError::EmptyGeneratorSet);
        }
        for g in &gens {
            if g.length <= Rat::zero() {
                return Err(BackendError::NonPositiveLength(g.label.clone()));
            }
        }
        let mut seen: HashMap<&Element, &str> = HashMap::new();
        for g in &gens {
            if seen.insert(&g.elem, &g.label).is_some() {
                return Err(BackendError::DuplicateGenerator(g.label.clone()));
            }
        }
        let mut backend = Backend {
            kind,
            r1: gens.iter().map(|g| g.length).min().expect("nonempty"),
            gens,
            letter_lengths,
            hypercubic_axis_lengths: None,
            search_cap: DEFAULT_SEARCH_CAP,
            ball_cap: DEFAULT_BALL_CAP,
            memo: RwLock::new(HashMap::new()),
        };
        backend.hypercubic_axis_lengths = backend.detect_hypercubic();
        // Symmetry: every generator's inverse must be present with equal length.
        for g in &backend.gens {
            let inv = backend.inverse(&g.elem);
            match backend.gens.iter().find(|h| h.elem == inv) {
                Some(h) if h.length == g.length => {}
                _ => return Err(BackendError::NotSymmetric(g.label.clone())),
            }
        }
        Ok(backend)
    }

    /// When the lattice generating set is exactly `{+-e_i}`, each axis moves
    /// independently and the metric is the weighted Manhattan distance.
    fn detect_hypercubic(&self) -> Option<Vec<Rat>> {
        let BackendKind::Lattice { dim } = self.kind else {
            return None;
        };
        if self.gens.len() != 2 * dim {
            return None;
        }
        let mut axis = vec![None; dim];
        for g in &self.gens {
            let Element::Lattice(v) = &g.elem else {
                unreachable!()
            };
            let nonzero: Vec<usize> = (0..dim).filter(|&i| v[i] != 0).collect();
            let [i] = nonzero[..] else { return None };
            if v[i].abs() != 1 {
                return None;
            }
            match axis[i] {
                None => axis[i] = Some(g.length),
                Some(l) if l == g.length => {}
                Some(_) => return None,
            }
        }
        axis.into_iter().collect()
    }

    pub fn with_search_cap(mut self, cap: usize) -> Backend {
        self.search_cap = cap;
        self
    }

    pub fn with_ball_cap(mut self, cap: usize) -> Backend {
        self.ball_cap = cap;
        self
    }

    pub fn kind(&self) -> &BackendKind {
        &self.kind
    }

    pub fn generators(&self) -> &[Generator] {
        &self.gens
    }

    pub fn generator_by_label(&self, label: &str) -> Option<&Generator> {
        self.gens.iter().find(|g| g.label == label)
    }

    /// Minimal generator length `r1`.
    pub fn r1(&self) -> Rat {
        self.r1
    }

    /// Whether the Cayley graph is a tree (free group or `Z2 * Z2`).
    pub fn is_tree(&self) -> bool {
        matches!(
            self.kind,
            BackendKind::Free { .. } | BackendKind::FreeProductC2C2
        )
    }

    /// Length of a single letter on a tree backend (free letter code, or 0/1
    /// for the `Z2 * Z2` involutions).
    pub(crate) fn letter_length(&self, code: i16) -> Rat {
        match self.kind {
            BackendKind::Free { .. } => self.letter_lengths[(code.unsigned_abs() - 1) as usize],
            BackendKind::FreeProductC2C2 => self.letter_lengths[code as usize],
            BackendKind::Lattice { .. } => unreachable!("lattices have no letters"),
        }
    }

    pub fn identity(&self) -> Element {
        match self.kind {
            BackendKind::Lattice { dim } => Element::Lattice(vec![0; dim]),
            BackendKind::Free { .. } => Element::Free(Vec::new()),
            BackendKind::FreeProductC2C2 => Element::Alt(Vec::new()),
        }
    }

    pub fn is_identity(&self, x: &Element) -> bool {
        match x {
            Element::Lattice(v) => v.iter().all(|&c| c == 0),
            Element::Free(w) => w.is_empty(),
            Element::Alt(w) => w.is_empty(),
        }
    }

    fn check(&self, x: &Element) {
        match (&self.kind, x) {
            (BackendKind::Lattice { dim }, Element::Lattice(v)) => {
                assert_eq!(v.len(), *dim, "lattice element has wrong dimension")
            }
            (BackendKind::Free { .. }, Element::Free(_)) => {}
            (BackendKind::FreeProductC2C2, Element::Alt(_)) => {}
            _ => panic!("element does not belong to this backend"),
        }
    }

    /// Canonical product `xy`. Panics if an element belongs to another backend.
    pub fn multiply(&self, x: &Element, y: &Element) -> Element {
        self.check(x);
        self.check(y);
        match (x, y) {
            (Element::Lattice(a), Element::Lattice(b)) => {
                Element::Lattice(a.iter().zip(b).map(|(p, q)| p + q).collect())
            }
            (Element::Free(a), Element::Free(b)) => {
                let mut out = Vec::with_capacity(a.len() + b.len());
                out.extend_from_slice(a);
                for &l in b {
                    if out.last() == Some(&-l) {
                        out.pop();
                    } else {
                        out.push(l);
                    }
                }
                Element::Free(out)
            }
            (Element::Alt(a), Element::Alt(b)) => {
                let mut out = a.clone();
                for &l in b {
                    if out.last() == Some(&l) {
                        out.pop();
                    } else {
                        out.push(l);
                    }
                }
                Element::Alt(out)
            }
            _ => unreachable!("check() already validated the variants"),
        }
    }

    pub fn inverse(&self, x: &Element) -> Element {
        self.check(x);
        match x {
            Element::Lattice(v) => Element::Lattice(v.iter().map(|&c| -c).collect()),
            Element::Free(w) => Element::Free(w.iter().rev().map(|&l| -l).collect()),
            Element::Alt(w) => Element::Alt(w.iter().rev().copied().collect()),
        }
    }

    /// Exact weighted word metric `d(x, y)`.
    pub fn distance(&self, x: &Element, y: &Element) -> Result<Rat, MetricError> {
        self.check(x);
        self.check(y);
        match (x, y) {
            (Element::Lattice(a), Element::Lattice(b)) => {
                let rel: Vec<i64> = b.iter().zip(a).map(|(p, q)| p - q).collect();
                self.lattice_distance_from_origin(rel)
            }
            _ => {
                let w = self.multiply(&self.inverse(x), y);
                Ok(self.word_cost(&w))
            }
        }
    }

    /// Sum of letter lengths of a reduced word (geodesic on tree backends).
    fn word_cost(&self, w: &Element) -> Rat {
        match w {
            Element::Free(letters) => letters
                .iter()
                .map(|&l| self.letter_lengths[(l.unsigned_abs() - 1) as usize])
                .sum(),
            Element::Alt(letters) => letters
                .iter()
                .map(|&l| self.letter_lengths[l as usize])
                .sum(),
            Element::Lattice(_) => unreachable!("lattice distances go through search"),
        }
    }

    /// `d(0, z)` on a lattice by A* with the admissible bound
    /// `remaining >= linf(z - v) * r1 / max_s linf(s)`; settled states are
    /// memoised (translation invariance makes them reusable for any pair).
    fn lattice_distance_from_origin(&self, rel: Vec<i64>) -> Result<Rat, MetricError> {
        if rel.iter().all(|&c| c == 0) {
            return Ok(Rat::zero());
        }
        if let Some(axis) = &self.hypercubic_axis_lengths {
            return Ok(rel
                .iter()
                .zip(axis)
                .map(|(&c, &l)| Rat::from_integer(c.abs()) * l)
                .sum());
        }
        if let Some(d) = self.memo.read().expect("memo lock").get(&rel) {
            return Ok(*d);
        }
        let steps: Vec<(&Vec<i64>, Rat)> = self
            .gens
            .iter()
            .map(|g| match &g.elem {
                Element::Lattice(v) => (v, g.length),
                _ => unreachable!(),
            })
            .collect();
        let max_linf = steps
            .iter()
            .map(|(v, _)| v.iter().map(|c| c.unsigned_abs()).max().unwrap_or(0))
            .max()
            .unwrap_or(1)
            .max(1) as i64;
        let factor = self.r1 / Rat::from_integer(max_linf);
        let lower_bound = |v: &[i64]| -> Rat {
            let linf = v
                .iter()
                .zip(&rel)
                .map(|(c, t)| (t - c).unsigned_abs())
                .max()
                .unwrap_or(0) as i64;
            factor * Rat::from_integer(linf)
        };

        let origin = vec![0i64; rel.len()];
        let mut best: HashMap<Vec<i64>, Rat> = HashMap::new();
        best.insert(origin.clone(), Rat::zero());
        let mut settled: HashMap<Vec<i64>, Rat> = HashMap::new();
        let mut heap: BinaryHeap<(Reverse<Rat>, Vec<i64>)> = BinaryHeap::new();
        heap.push((Reverse(lower_bound(&origin)), origin));

        let mut found = None;
        while let Some((Reverse(_), node)) = heap.pop() {
            let g = match best.get(&node) {
                Some(&g) => g,
                None => continue,
            };
            match settled.entry(node.clone()) {
                Entry::Occupied(_) => continue,
                Entry::Vacant(e) => e.insert(g),
            };
            if node == rel {
                found = Some(g);
                break;
            }
            if settled.len() >= self.search_cap {
                // Settled distances are still exact; keep them for later queries.
                self.memo.write().expect("memo lock").extend(settled);
                return Err(MetricError::SearchCapExceeded {
                    expanded: self.search_cap,
                    cap: self.search_cap,
                });
            }
            for (v, len) in &steps {
                let next: Vec<i64> = node.iter().zip(v.iter()).map(|(a, b)| a + b).collect();
                if settled.contains_key(&next) {
                    continue;
                }
                let cand = g + *len;
                let better = match best.get(&next) {
                    Some(&old) => cand < old,
                    None => true,
                };
                if better {
                    best.insert(next.clone(), cand);
                    heap.push((Reverse(cand + lower_bound(&next)), next));
                }
            }
        }
        self.memo.write().expect("memo lock").extend(settled);
        found.ok_or(MetricError::Unreachable)
    }

    /// Generic uniform-cost search distance, usable on every backend.
    ///
    /// For lattices this is the same algorithm as [`Backend::distance`]
    /// without memoisation; on tree backends it serves as an independent
    /// oracle for the reduced-word geodesic formula.
    pub fn distance_ucs(&self, x: &Element, y: &Element) -> Result<Rat, MetricError> {
        self.check(x);
        self.check(y);
        if x == y {
            return Ok(Rat::zero());
        }
        let mut best: HashMap<Element, Rat> = HashMap::new();
        best.insert(x.clone(), Rat::zero());
        let mut settled: HashMap<Element, Rat> = HashMap::new();
        let mut heap: BinaryHeap<(Reverse<Rat>, Element)> = BinaryHeap::new();
        heap.push((Reverse(Rat::zero()), x.clone()));
        while let Some((Reverse(g), node)) = heap.pop() {
            if settled.contains_key(&node) {
                continue;
            }
            settled.insert(node.clone(), g);
            if node == *y {
                return Ok(g);
            }
            if settled.len() >= self.search_cap {
                return Err(MetricError::SearchCapExceeded {
                    expanded: self.search_cap,
                    cap: self.search_cap,
                });
            }
            for gen in &self.gens {
                let next = self.multiply(&node, &gen.elem);
                if settled.contains_key(&next) {
                    continue;
                }
                let cand = g + gen.length;
                let better = best.get(&next).is_none_or(|&old| cand < old);
                if better {
                    best.insert(next.clone(), cand);
                    heap.push((Reverse(cand), next));
                }
            }
        }
        Err(MetricError::Unreachable)
    }

    /// Exactly `{ y : d(center, y) <= radius }` by bounded uniform-cost expansion.
    pub fn ball(&self, center: &Element, radius: Rat) -> Result<Vec<Element>, MetricError> {
        self.check(center);
        assert!(radius >= Rat::zero(), "ball radius must be non-negative");
        let mut best: HashMap<Element, Rat> = HashMap::new();
        best.insert(center.clone(), Rat::zero());
        let mut settled: HashMap<Element, Rat> = HashMap::new();
        let mut heap: BinaryHeap<(Reverse<Rat>, Element)> = BinaryHeap::new();
        heap.push((Reverse(Rat::zero()), center.clone()));
        while let Some((Reverse(g), node)) = heap.pop() {
            if settled.contains_key(&node) {
                continue;
            }
            settled.insert(node.clone(), g);
            if settled.len() > self.ball_cap {
                return Err(MetricError::BallCapExceeded { cap: self.ball_cap });
            }
            for gen in &self.gens {
                let cand = g + gen.length;
                if cand > radius {
                    continue;
                }
                let next = self.multiply(&node, &gen.elem);
                if settled.contains_key(&next) {
                    continue;
                }
                let better = best.get(&next).is_none_or(|&old| cand < old);
                if better {
                    best.insert(next.clone(), cand);
                    heap.push((Reverse(cand), next));
                }
            }
        }
        let mut out: Vec<Element> = settled.into_keys().collect();
        out.sort();
        Ok(out)
    }

    /// Symmetric matrix of pairwise distances with a zero diagonal.
    pub fn pairwise_distances(&self, points: &[Element]) -> Result<Vec<Vec<Rat>>, MetricError> {
        assert!(!points.is_empty(), "pairwise_distances needs a nonempty list");
        let n = points.len();
        let mut m = vec![vec![Rat::zero(); n]; n];
        for i in 0..n {
            for j in (i + 1)..n {
                let d = self.distance(&points[i], &points[j])?;
                m[i][j] = d;
                m[j][i] = d;
            }
        }
        Ok(m)
    }

    /// Backend-canonical text form (`e` for the identity).
    pub fn format_element(&self, x: &Element) -> String {
        self.check(x);
        if self.is_identity(x) {
            return "e".to_string();
        }
        match x {
            Element::Lattice(v) => {
                if v.len() == 1 {
                    v[0].to_string()
                } else {
                    format!(
                        "({})",
                        v.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(",")
                    )
                }
            }
            Element::Free(w) => w.iter().map(|&l| free_letter_char(l)).collect(),
            Element::Alt(w) => w
                .iter()
                .map(|&l| if l == 0 { 'a' } else { 'b' })
                .collect(),
        }
    }

    /// Parses the canonical text form produced by [`Backend::format_element`].
    pub fn parse_element(&self, s: &str) -> Result<Element, ParseElementError> {
        let s = s.trim();
        if s == "e" {
            return Ok(self.identity());
        }
        match &self.kind {
            BackendKind::Lattice { dim } => {
                let inner = s.strip_prefix('(').and_then(|t| t.strip_suffix(')')).unwrap_or(s);
                let coords: Result<Vec<i64>, _> =
                    inner.split(',').map(|c| c.trim().parse::<i64>()).collect();
                let coords = coords.map_err(|_| ParseElementError::Invalid(s.to_string()))?;
                if coords.len() != *dim {
                    return Err(ParseElementError::WrongDimension {
                        expected: *dim,
                        got: coords.len(),
                    });
                }
                Ok(Element::Lattice(coords))
            }
            BackendKind::Free { rank } => {
                let mut word = Vec::with_capacity(s.len());
                for ch in s.chars() {
                    let letter = if ch.is_ascii_lowercase() {
                        (ch as u8 - b'a') as i16 + 1
                    } else if ch.is_ascii_uppercase() {
                        -((ch as u8 - b'A') as i16 + 1)
                    } else {
                        return Err(ParseElementError::Invalid(s.to_string()));
                    };
                    if letter.unsigned_abs() as usize > *rank {
                        return Err(ParseElementError::LetterOutOfRange(ch));
                    }
                    if word.last() == Some(&-letter) {
                        word.pop();
                    } else {
                        word.push(letter);
                    }
                }
                Ok(Element::Free(word))
            }
            BackendKind::FreeProductC2C2 => {
                let mut word: Vec<u8> = Vec::with_capacity(s.len());
                for ch in s.chars() {
                    let letter = match ch {
                        'a' => 0u8,
                        'b' => 1u8,
                        _ => return Err(ParseElementError::Invalid(s.to_string())),
                    };
                    if word.last() == Some(&letter) {
                        word.pop();
                    } else {
                        word.push(letter);
                    }
                }
                Ok(Element::Alt(word))
            }
        }
    }
}
