//! Result documents: one JSON object per experiment, a line-delimited
//! checkpoint stream, and a flat CSV row for tabulation.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use anyhow::{Context, Result};
use serde::Serialize;

use lamprate_core::estimators::{IdentityReport, RangeLawReport, RateEstimates, ReturnEstimate};
use lamprate_core::walk::{CheckpointStats, TrajectoryRecord};

use crate::config::RunConfig;

/// The experiment document written as `<name>.estimates.json`.
#[derive(Debug, Serialize)]
pub struct ExperimentDoc {
    pub config: RunConfig,
    pub rates: RateEstimates,
    pub return_probability: ReturnEstimate,
    pub range_law: RangeLawReport,
    /// Present only for Walk-Switch measures.
    pub identity_check: Option<IdentityReport>,
    /// Warning text when the generation condition could not be confirmed.
    pub generation_warning: Option<String>,
}

#[derive(Serialize)]
struct CheckpointLine<'a> {
    trial: u64,
    #[serde(flatten)]
    stats: &'a CheckpointStats,
}

pub fn write_checkpoint_stream(path: &Path, records: &[TrajectoryRecord]) -> Result<()> {
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    let mut out = BufWriter::new(file);
    for (trial, rec) in records.iter().enumerate() {
        for stats in &rec.checkpoints {
            let line = CheckpointLine {
                trial: trial as u64,
                stats,
            };
            serde_json::to_writer(&mut out, &line)?;
            out.write_all(b"\n")?;
        }
    }
    Ok(())
}

pub fn write_document(path: &Path, doc: &ExperimentDoc) -> Result<()> {
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    serde_json::to_writer_pretty(BufWriter::new(file), doc)?;
    Ok(())
}

const CSV_HEADER: &str = "name,backend,horizon,trials,seed,ell0,ell0_half,ell_supp,ell_supp_half,\
ell_ts,ell_ts_half,ell,ell_half,ts_exact_grade,heuristic_fraction,range_rate,p_return,\
return_frequency";

pub fn write_csv_row(path: &Path, doc: &ExperimentDoc) -> Result<()> {
    let fresh = !path.exists();
    let mut out = std::fs::OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .with_context(|| format!("opening {}", path.display()))?;
    if fresh {
        writeln!(out, "{CSV_HEADER}")?;
    }
    let backend = match &doc.config.backend {
        crate::config::BackendSpec::Lattice { dim, .. } => format!("lattice{dim}"),
        crate::config::BackendSpec::Free { rank, .. } => format!("free{rank}"),
        crate::config::BackendSpec::C2c2 { .. } => "c2c2".to_string(),
    };
    let r = &doc.rates;
    writeln!(
        out,
        "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
        doc.config.name,
        backend,
        r.horizon,
        r.trials,
        r.master_seed,
        r.ell0.mean,
        r.ell0.half_width,
        r.ell_supp.mean,
        r.ell_supp.half_width,
        r.ell_ts.mean,
        r.ell_ts.half_width,
        r.ell.mean,
        r.ell.half_width,
        r.ts_exact_grade,
        r.heuristic_fraction,
        doc.range_law.rate.mean,
        doc.return_probability.p_return,
        r.return_frequency,
    )?;
    Ok(())
}

pub fn human_summary(doc: &ExperimentDoc) -> String {
    let r = &doc.rates;
    let mut s = String::new();
    s.push_str(&format!(
        "experiment {} (horizon {}, trials {}, seed {})\n",
        doc.config.name, r.horizon, r.trials, r.master_seed
    ));
    s.push_str(&format!(
        "  drift rate        {:>9.5} +- {:.5}\n",
        r.ell0.mean, r.ell0.half_width
    ));
    s.push_str(&format!(
        "  lamp rate         {:>9.5} +- {:.5}\n",
        r.ell_supp.mean, r.ell_supp.half_width
    ));
    s.push_str(&format!(
        "  tour rate         {:>9.5} +- {:.5} ({})\n",
        r.ell_ts.mean,
        r.ell_ts.half_width,
        if r.ts_exact_grade {
            "exact-grade"
        } else {
            "heuristic-grade"
        }
    ));
    s.push_str(&format!(
        "  total rate        {:>9.5} +- {:.5}\n",
        r.ell.mean, r.ell.half_width
    ));
    s.push_str(&format!(
        "  range rate        {:>9.5} +- {:.5}\n",
        doc.range_law.rate.mean, doc.range_law.rate.half_width
    ));
    s.push_str(&format!(
        "  return probability {:>8.5} (within horizon; lower bound)\n",
        doc.return_probability.p_return
    ));
    if let Some(id) = &doc.identity_check {
        s.push_str(&format!(
            "  walk-switch identity: lamp side {:.5} vs projection side {:.5} (gap {:.5})\n",
            id.ell_supp.mean, id.projection_side, id.discrepancy
        ));
    }
    if let Some(w) = &doc.generation_warning {
        s.push_str(&format!("  warning: {w}\n"));
    }
    s
}
