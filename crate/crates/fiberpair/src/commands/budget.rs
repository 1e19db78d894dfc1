use std::path::Path;

use fiberpair_core::config::ExperimentConfig;
use fiberpair_core::source::{chain_product, spectral_efficiency};

use crate::output::{csv_writer, num};

pub const BUDGET_FILE: &str = "budget.csv";

#[derive(Debug, Clone, PartialEq)]
pub struct BudgetRow {
    pub quantity: String,
    pub signal: Option<f64>,
    pub idler: Option<f64>,
    /// Joint probability for the pair.
    pub combined: Option<f64>,
}

fn row(quantity: impl Into<String>, signal: Option<f64>, idler: Option<f64>) -> BudgetRow {
    let combined = match (signal, idler) {
        (Some(s), Some(i)) => Some(s * i),
        _ => None,
    };
    BudgetRow {
        quantity: quantity.into(),
        signal,
        idler,
        combined,
    }
}

/// Per-stage efficiencies, then the extraction, spectral-model, detector and
/// overall detection rows.
pub fn budget_table(cfg: &ExperimentConfig) -> anyhow::Result<Vec<BudgetRow>> {
    cfg.validate()?;
    let (sig, idl) = (cfg.chain.signal.stages(), cfg.chain.idler.stages());
    let mut rows = Vec::new();
    for k in 0..sig.len().max(idl.len()) {
        let (s, i) = (sig.get(k), idl.get(k));
        let label = match (s, i) {
            (Some(a), Some(b)) if a.label == b.label => a.label.clone(),
            (Some(a), Some(b)) => format!("{}/{}", a.label, b.label),
            (Some(a), None) => a.label.clone(),
            (None, Some(b)) => b.label.clone(),
            (None, None) => unreachable!(),
        };
        rows.push(row(label, s.map(|x| x.efficiency), i.map(|x| x.efficiency)));
    }
    let ext_s = chain_product(&cfg.chain.signal);
    let ext_i = chain_product(&cfg.chain.idler);
    rows.push(row("extraction", Some(ext_s), Some(ext_i)));
    rows.push(row(
        "spectral_selection_model",
        Some(spectral_efficiency(&cfg.spectral.signal)?),
        Some(spectral_efficiency(&cfg.spectral.idler)?),
    ));
    let (ds, di) = (cfg.detectors.signal.efficiency, cfg.detectors.idler.efficiency);
    rows.push(row("detector", Some(ds), Some(di)));
    rows.push(row("detection", Some(ext_s * ds), Some(ext_i * di)));
    Ok(rows)
}

pub fn cmd_budget(cfg: &ExperimentConfig, out: &Path) -> anyhow::Result<Vec<String>> {
    let rows = budget_table(cfg)?;
    let mut w = csv_writer(&out.join(BUDGET_FILE))?;
    w.write_record(["quantity", "signal", "idler", "combined"])?;
    let cell = |x: Option<f64>| x.map(num).unwrap_or_default();
    for r in &rows {
        w.write_record([r.quantity.clone(), cell(r.signal), cell(r.idler), cell(r.combined)])?;
    }
    w.flush()?;
    Ok(vec![BUDGET_FILE.into()])
}
