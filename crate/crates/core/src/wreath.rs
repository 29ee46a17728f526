//! The wreath product `Z_r wr G`: finitely supported lamp configurations,
//! the group law, and the length function built on the tour metric.

use std::collections::BTreeMap;

use num_traits::Zero;

use crate::group::{Backend, Element};
use crate::rational::Rat;
use crate::tsp::{self, TspConfig, TspError, TspMode};

/// Finite-support map from group elements to lamp states in `Z/rZ`.
///
/// State 0 is never stored, so the map keys are exactly the support and
/// `support_size` is a free read.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Configuration {
    modulus: u32,
    lamps: BTreeMap<Element, u32>,
}

impl Configuration {
    /// All-lamps-off configuration.
    pub fn zero(modulus: u32) -> Configuration {
        assert!(modulus >= 2, "lamp modulus must be at least 2");
        Configuration {
            modulus,
            lamps: BTreeMap::new(),
        }
    }

    /// Single lamp in state 1 at `at`.
    pub fn single(modulus: u32, at: Element) -> Configuration {
        Configuration::with_state(modulus, at, 1)
    }

    pub fn with_state(modulus: u32, at: Element, state: u32) -> Configuration {
        let mut c = Configuration::zero(modulus);
        c.add_at(&at, state);
        c
    }

    pub fn from_lamps<I: IntoIterator<Item = (Element, u32)>>(
        modulus: u32,
        lamps: I,
    ) -> Configuration {
        let mut c = Configuration::zero(modulus);
        for (at, state) in lamps {
            c.add_at(&at, state);
        }
        c
    }

    pub fn modulus(&self) -> u32 {
        self.modulus
    }

    pub fn support_size(&self) -> usize {
        self.lamps.len()
    }

    pub fn is_zero(&self) -> bool {
        self.lamps.is_empty()
    }

    /// Lamp state at `at`; 0 when the lamp is off.
    pub fn state(&self, at: &Element) -> u32 {
        self.lamps.get(at).copied().unwrap_or(0)
    }

    /// Support in canonical (sorted) order.
    pub fn support(&self) -> impl Iterator<Item = &Element> {
        self.lamps.keys()
    }

    pub fn support_vec(&self) -> Vec<Element> {
        self.lamps.keys().cloned().collect()
    }

    pub fn lamps(&self) -> impl Iterator<Item = (&Element, u32)> {
        self.lamps.iter().map(|(k, &v)| (k, v))
    }

    /// Adds `delta` (mod r) to the lamp at `at`, evicting a resulting 0.
    pub fn add_at(&mut self, at: &Element, delta: u32) {
        let delta = delta % self.modulus;
        if delta == 0 {
            return;
        }
        match self.lamps.get_mut(at) {
            Some(s) => {
                *s = (*s + delta) % self.modulus;
                if *s == 0 {
                    self.lamps.remove(at);
                }
            }
            None => {
                self.lamps.insert(at.clone(), delta);
            }
        }
    }

    /// Left translation `(x eta)(w) = eta(x^{-1} w)`: support moves to `x supp(eta)`.
    pub fn translate(&self, backend: &Backend, x: &Element) -> Configuration {
        let mut out = Configuration::zero(self.modulus);
        for (w, s) in &self.lamps {
            out.lamps.insert(backend.multiply(x, w), *s);
        }
        out
    }

    /// Componentwise sum mod r; lamps summing to 0 drop out of the support.
    pub fn add(&self, other: &Configuration) -> Configuration {
        assert_eq!(
            self.modulus, other.modulus,
            "lamp moduli must match in configuration sums"
        );
        let mut out = self.clone();
        for (at, s) in &other.lamps {
            out.add_at(at, *s);
        }
        out
    }

    /// Configuration with every lamp state negated mod r.
    pub fn negate(&self) -> Configuration {
        let mut out = Configuration::zero(self.modulus);
        for (at, s) in &self.lamps {
            out.lamps.insert(at.clone(), self.modulus - s);
        }
        out
    }
}

/// Element `(eta, x)` of the wreath product.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct WreathElement {
    pub config: Configuration,
    pub position: Element,
}

impl WreathElement {
    pub fn identity(backend: &Backend, modulus: u32) -> WreathElement {
        WreathElement {
            config: Configuration::zero(modulus),
            position: backend.identity(),
        }
    }

    pub fn is_identity(&self, backend: &Backend) -> bool {
        self.config.is_zero() && backend.is_identity(&self.position)
    }

    /// Group law `(eta1, x)(eta2, y) = (eta1 + x.eta2, xy)`.
    pub fn multiply(&self, backend: &Backend, other: &WreathElement) -> WreathElement {
        let translated = other.config.translate(backend, &self.position);
        WreathElement {
            config: self.config.add(&translated),
            position: backend.multiply(&self.position, &other.position),
        }
    }

    /// Inverse `(-(x^{-1} eta), x^{-1})`.
    pub fn inverse(&self, backend: &Backend) -> WreathElement {
        let xinv = backend.inverse(&self.position);
        WreathElement {
            config: self.config.translate(backend, &xinv).negate(),
            position: xinv,
        }
    }

    /// Log form: canonical position text plus the sorted `(element, state)` support.
    pub fn log_form(&self, backend: &Backend) -> String {
        let supp: Vec<String> = self
            .config
            .lamps()
            .map(|(at, s)| format!("({},{s})", backend.format_element(at)))
            .collect();
        format!(
            "pos={} supp=[{}]",
            backend.format_element(&self.position),
            supp.join(",")
        )
    }
}

/// Lamp-switch cost `c_L >= 0` of the lifted length function.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LengthParams {
    pub lamp_cost: Rat,
}

impl LengthParams {
    pub fn new(lamp_cost: Rat) -> LengthParams {
        assert!(lamp_cost >= Rat::zero(), "lamp cost must be non-negative");
        LengthParams { lamp_cost }
    }
}

/// Value of the length function together with the tour mode that produced it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WreathLength {
    pub value: Rat,
    pub tour_value: Rat,
    pub mode: TspMode,
}

/// `l(eta, x) = d_TS(eta, x) + c_L * |supp(eta)|`.
///
/// The result carries the tour mode, so callers can tell an exact value from
/// a heuristic upper bound.
pub fn length(
    backend: &Backend,
    u: &WreathElement,
    params: &LengthParams,
    tsp_cfg: &TspConfig,
) -> Result<WreathLength, TspError> {
    let supp = u.config.support_vec();
    let tour = tsp::solve(backend, &supp, &u.position, tsp_cfg)?;
    let value = tour.value + params.lamp_cost * Rat::from_integer(u.config.support_size() as i64);
    Ok(WreathLength {
        value,
        tour_value: tour.value,
        mode: tour.mode,
    })
}
