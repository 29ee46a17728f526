//! Named, immutable experiment configurations embedded in the binary.
//! `lamprate presets dump NAME` prints any of them as TOML.

use crate::config::{
    AtomSpec, BackendSpec, CheckpointSpec, MeasureSpec, Mu0Spec, RunConfig, TspModeSpec,
};

pub const PRESET_NAMES: [&str; 5] = [
    "f2-walk-switch",
    "z-counterexample-p075",
    "z-recurrent-walk-switch",
    "z3-walk-switch",
    "c2c2-walk-switch",
];

pub fn preset(name: &str) -> Option<RunConfig> {
    let uniform_walk_switch = MeasureSpec::WalkSwitch {
        mu0: Mu0Spec::Keyword("uniform".to_string()),
    };
    match name {
        // Simple Walk-Switch walk on the 4-regular tree; the transient
        // reference experiment.
        "f2-walk-switch" => Some(RunConfig {
            name: name.to_string(),
            backend: BackendSpec::Free {
                rank: 2,
                lengths: vec!["1/1".into(), "1/1".into()],
            },
            measure: uniform_walk_switch,
            lamp_modulus: 2,
            lamp_cost: "0/1".into(),
            horizon: 2000,
            trials: 400,
            seed: 0xF2_2026,
            checkpoints: CheckpointSpec::default(),
            tsp_mode: TspModeSpec::Exact,
            tsp_cap: 18,
            jobs: 0,
        }),
        // Weighted line with l = (1, 3, 5) and the twelve-atom drifted
        // measure at p = 3/4: the degenerate linear-metric regime where the
        // tour rate collapses onto the drift.
        "z-counterexample-p075" => {
            let mut atoms = Vec::new();
            for step in 1..=3i64 {
                for lamps in [vec![], vec![("e".to_string(), 1u32)]] {
                    atoms.push(AtomSpec {
                        step: step.to_string(),
                        prob: "1/8".into(),
                        lamps: lamps.clone(),
                    });
                    atoms.push(AtomSpec {
                        step: (-step).to_string(),
                        prob: "1/24".into(),
                        lamps,
                    });
                }
            }
            Some(RunConfig {
                name: name.to_string(),
                backend: BackendSpec::Lattice {
                    dim: 1,
                    generators: [(1i64, "1/1"), (2, "3/1"), (3, "5/1")]
                        .iter()
                        .flat_map(|&(s, l)| {
                            [
                                crate::config::GeneratorSpec {
                                    label: format!("+{s}"),
                                    action: vec![s],
                                    length: l.to_string(),
                                },
                                crate::config::GeneratorSpec {
                                    label: format!("-{s}"),
                                    action: vec![-s],
                                    length: l.to_string(),
                                },
                            ]
                        })
                        .collect(),
                },
                measure: MeasureSpec::Custom { atoms },
                lamp_modulus: 2,
                lamp_cost: "0/1".into(),
                horizon: 10_000,
                trials: 200,
                seed: 0xCE75,
                checkpoints: CheckpointSpec::default(),
                tsp_mode: TspModeSpec::Exact,
                tsp_cap: 18,
                jobs: 0,
            })
        }
        // Recurrent simple walk on Z: the lamp rate collapses to zero.
        "z-recurrent-walk-switch" => Some(RunConfig {
            name: name.to_string(),
            backend: BackendSpec::Lattice {
                dim: 1,
                generators: vec![
                    crate::config::GeneratorSpec {
                        label: "+1".into(),
                        action: vec![1],
                        length: "1/1".into(),
                    },
                    crate::config::GeneratorSpec {
                        label: "-1".into(),
                        action: vec![-1],
                        length: "1/1".into(),
                    },
                ],
            },
            measure: uniform_walk_switch,
            lamp_modulus: 2,
            lamp_cost: "0/1".into(),
            horizon: 10_000,
            trials: 100,
            seed: 0x2EC,
            checkpoints: CheckpointSpec::default(),
            tsp_mode: TspModeSpec::Exact,
            tsp_cap: 18,
            jobs: 0,
        }),
        // Transient lattice walk; tour values are heuristic-grade because the
        // support grows far beyond the exact-solver cap.
        "z3-walk-switch" => Some(RunConfig {
            name: name.to_string(),
            backend: BackendSpec::Lattice {
                dim: 3,
                generators: (1..=3)
                    .flat_map(|i| {
                        let mut plus = vec![0i64; 3];
                        plus[i - 1] = 1;
                        let mut minus = vec![0i64; 3];
                        minus[i - 1] = -1;
                        [
                            crate::config::GeneratorSpec {
                                label: format!("+e{i}"),
                                action: plus,
                                length: "1/1".into(),
                            },
                            crate::config::GeneratorSpec {
                                label: format!("-e{i}"),
                                action: minus,
                                length: "1/1".into(),
                            },
                        ]
                    })
                    .collect(),
            },
            measure: MeasureSpec::WalkSwitch {
                mu0: Mu0Spec::Keyword("uniform".to_string()),
            },
            lamp_modulus: 2,
            lamp_cost: "1/1".into(),
            horizon: 1500,
            trials: 100,
            seed: 0x333,
            checkpoints: CheckpointSpec::default(),
            tsp_mode: TspModeSpec::Heuristic,
            tsp_cap: 18,
            jobs: 0,
        }),
        // Recurrent walk on Z2 * Z2 (tree tours stay exact).
        "c2c2-walk-switch" => Some(RunConfig {
            name: name.to_string(),
            backend: BackendSpec::C2c2 {
                lengths: ["1/1".into(), "1/1".into()],
            },
            measure: MeasureSpec::WalkSwitch {
                mu0: Mu0Spec::Keyword("uniform".to_string()),
            },
            lamp_modulus: 2,
            lamp_cost: "0/1".into(),
            horizon: 4000,
            trials: 100,
            seed: 0xC2C2,
            checkpoints: CheckpointSpec::default(),
            tsp_mode: TspModeSpec::Exact,
            tsp_cap: 18,
            jobs: 0,
        }),
        _ => None,
    }
}
