//! Run configuration: a single TOML document describing the backend, the
//! step measure and the experiment budget. Rationals are written as `"p/q"`
//! strings so the configuration stays exact.

use std::sync::Arc;

use anyhow::{anyhow, bail, Context, Result};
use serde::{Deserialize, Serialize};

use lamprate_core::group::Backend;
use lamprate_core::rational::{parse_rat, Rat};
use lamprate_core::tsp::{TspConfig, TspStrategy};
use lamprate_core::walk::{Atom, StepMeasure};

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct RunConfig {
    pub name: String,
    pub backend: BackendSpec,
    pub measure: MeasureSpec,
    #[serde(default = "default_modulus")]
    pub lamp_modulus: u32,
    /// Lamp-switch cost `c_L` as a rational string.
    #[serde(default = "default_zero")]
    pub lamp_cost: String,
    pub horizon: u64,
    pub trials: u64,
    pub seed: u64,
    #[serde(default)]
    pub checkpoints: CheckpointSpec,
    #[serde(default)]
    pub tsp_mode: TspModeSpec,
    #[serde(default = "default_tsp_cap")]
    pub tsp_cap: usize,
    /// Worker threads; 0 uses every core.
    #[serde(default)]
    pub jobs: usize,
}

fn default_modulus() -> u32 {
    2
}

fn default_zero() -> String {
    "0/1".to_string()
}

fn default_tsp_cap() -> usize {
    18
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum BackendSpec {
    /// `Z^dim` with explicit generators.
    Lattice {
        dim: usize,
        generators: Vec<GeneratorSpec>,
    },
    /// Free group; one length per letter pair `a/A`, `b/B`, ...
    Free { rank: usize, lengths: Vec<String> },
    /// `Z2 * Z2`; lengths of the involutions `a` and `b`.
    C2c2 { lengths: [String; 2] },
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct GeneratorSpec {
    pub label: String,
    pub action: Vec<i64>,
    pub length: String,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum MeasureSpec {
    WalkSwitch {
        mu0: Mu0Spec,
    },
    SwitchWalk {
        mu0: Mu0Spec,
        p_switch: String,
    },
    Custom {
        atoms: Vec<AtomSpec>,
    },
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum Mu0Spec {
    /// `"uniform"`: equal mass on every generator.
    Keyword(String),
    Atoms(Vec<Mu0Atom>),
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct Mu0Atom {
    /// Element in backend-canonical text (`e`, `-2`, `(1,0)`, `abA`, `ab`).
    pub element: String,
    pub prob: String,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct AtomSpec {
    /// Move in `G`, backend-canonical text.
    pub step: String,
    pub prob: String,
    /// Lamp patch: `(site, state)` pairs relative to the walker.
    #[serde(default)]
    pub lamps: Vec<(String, u32)>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum CheckpointSpec {
    /// `"geometric"` (default) or `"final"`.
    Keyword(String),
    Explicit(Vec<u64>),
}

impl Default for CheckpointSpec {
    fn default() -> Self {
        CheckpointSpec::Keyword("geometric".to_string())
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq, Eq, Default)]
#[serde(rename_all = "kebab-case")]
pub enum TspModeSpec {
    #[default]
    Auto,
    Exact,
    Heuristic,
}

impl TspModeSpec {
    pub fn strategy(self) -> TspStrategy {
        match self {
            TspModeSpec::Auto => TspStrategy::Auto,
            TspModeSpec::Exact => TspStrategy::ExactOnly,
            TspModeSpec::Heuristic => TspStrategy::HeuristicOnly,
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<RunConfig> {
        toml::from_str(text).context("failed to parse the run configuration")
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("run configuration serialises")
    }

    pub fn lamp_cost_rat(&self) -> Result<Rat> {
        Ok(parse_rat(&self.lamp_cost)?)
    }

    pub fn tsp_config(&self) -> TspConfig {
        TspConfig::new(self.tsp_mode.strategy(), self.tsp_cap)
    }

    /// Sorted explicit checkpoint schedule, or `None` for the geometric one.
    pub fn checkpoint_list(&self) -> Result<Option<Vec<u64>>> {
        match &self.checkpoints {
            CheckpointSpec::Keyword(k) if k == "geometric" => Ok(None),
            CheckpointSpec::Keyword(k) if k == "final" => Ok(Some(vec![self.horizon])),
            CheckpointSpec::Keyword(k) => bail!("unknown checkpoint keyword `{k}`"),
            CheckpointSpec::Explicit(list) => {
                let mut list = list.clone();
                list.push(self.horizon);
                list.sort_unstable();
                list.dedup();
                if list.iter().any(|&c| c > self.horizon) {
                    bail!("checkpoints must lie within the horizon");
                }
                Ok(Some(list))
            }
        }
    }

    pub fn build_backend(&self) -> Result<Arc<Backend>> {
        let backend = match &self.backend {
            BackendSpec::Lattice { dim, generators } => {
                let gens = generators
                    .iter()
                    .map(|g| {
                        Ok((
                            g.label.clone(),
                            g.action.clone(),
                            parse_rat(&g.length)
                                .with_context(|| format!("length of generator {}", g.label))?,
                        ))
                    })
                    .collect::<Result<Vec<_>>>()?;
                Backend::lattice(*dim, gens)?
            }
            BackendSpec::Free { rank, lengths } => {
                let ls = lengths
                    .iter()
                    .map(|l| Ok(parse_rat(l)?))
                    .collect::<Result<Vec<Rat>>>()?;
                if ls.len() != *rank {
                    bail!("free backend needs one length per letter pair");
                }
                Backend::free(*rank, &ls)?
            }
            BackendSpec::C2c2 { lengths } => {
                Backend::c2c2(parse_rat(&lengths[0])?, parse_rat(&lengths[1])?)?
            }
        };
        Ok(Arc::new(backend))
    }

    fn resolve_mu0(&self, backend: &Arc<Backend>, spec: &Mu0Spec) -> Result<Vec<(lamprate_core::Element, Rat)>> {
        match spec {
            Mu0Spec::Keyword(k) if k == "uniform" => {
                let gens = backend.generators();
                let p = Rat::new(1, gens.len() as i64);
                Ok(gens.iter().map(|g| (g.elem.clone(), p)).collect())
            }
            Mu0Spec::Keyword(k) => bail!("unknown mu0 keyword `{k}`"),
            Mu0Spec::Atoms(atoms) => atoms
                .iter()
                .map(|a| {
                    let elem = backend
                        .parse_element(&a.element)
                        .map_err(|e| anyhow!("mu0 element `{}`: {e}", a.element))?;
                    Ok((elem, parse_rat(&a.prob)?))
                })
                .collect(),
        }
    }

    pub fn build_measure(&self, backend: &Arc<Backend>) -> Result<StepMeasure> {
        let measure = match &self.measure {
            MeasureSpec::WalkSwitch { mu0 } => StepMeasure::walk_switch(
                backend.clone(),
                self.resolve_mu0(backend, mu0)?,
                self.lamp_modulus,
            )?,
            MeasureSpec::SwitchWalk { mu0, p_switch } => StepMeasure::switch_walk(
                backend.clone(),
                self.resolve_mu0(backend, mu0)?,
                parse_rat(p_switch)?,
                self.lamp_modulus,
            )?,
            MeasureSpec::Custom { atoms } => {
                let atoms = atoms
                    .iter()
                    .map(|a| {
                        let step = backend
                            .parse_element(&a.step)
                            .map_err(|e| anyhow!("atom step `{}`: {e}", a.step))?;
                        let lamps = a
                            .lamps
                            .iter()
                            .map(|(site, state)| {
                                Ok((
                                    backend
                                        .parse_element(site)
                                        .map_err(|e| anyhow!("lamp site `{site}`: {e}"))?,
                                    *state,
                                ))
                            })
                            .collect::<Result<Vec<_>>>()?;
                        Ok(Atom {
                            lamps,
                            step,
                            prob: parse_rat(&a.prob)?,
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                StepMeasure::custom(backend.clone(), atoms, self.lamp_modulus)?
            }
        };
        Ok(measure)
    }
}
