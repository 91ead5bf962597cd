//! CSV tables. Floats carry 17 significant digits.

use anyhow::{bail, Context, Result};
use epflow_core::dynamics::DiagnosticsRecord;
use epflow_core::experiments::{AnalyticityReport, ExperimentRecord};
use std::path::Path;

pub fn float(v: f64) -> String {
    format!("{v:.16e}")
}

fn opt(v: Option<f64>) -> String {
    v.map(float).unwrap_or_default()
}

/// A record type with a fixed header.
pub trait Record {
    const FIELDS: &'static [&'static str];
    fn row(&self) -> Vec<String>;
}

impl Record for ExperimentRecord {
    const FIELDS: &'static [&'static str] = &[
        "n",
        "r_n",
        "radius_used",
        "resolution_limited",
        "initial_distance",
        "final_vorticity_distance",
        "final_solution_distance",
        "flow_separation",
        "predicted_separation",
        "in_ball",
        "witness_distance",
    ];

    fn row(&self) -> Vec<String> {
        vec![
            self.n.to_string(),
            float(self.r_n),
            float(self.radius_used),
            self.resolution_limited.to_string(),
            float(self.initial_distance),
            float(self.final_vorticity_distance),
            float(self.final_solution_distance),
            float(self.flow_separation),
            float(self.predicted_separation),
            self.in_ball.to_string(),
            opt(self.witness_distance),
        ]
    }
}

impl Record for DiagnosticsRecord {
    const FIELDS: &'static [&'static str] = &DiagnosticsRecord::FIELDS;

    fn row(&self) -> Vec<String> {
        vec![
            float(self.t),
            float(self.mass),
            float(self.energy),
            opt(self.density_transport_residual),
            opt(self.vorticity_transport_residual),
            opt(self.min_jacobian_det),
            float(self.rho_bar_norm),
            float(self.u_norm),
            float(self.omega_norm),
        ]
    }
}

/// One row per label.
pub struct AnalyticitySummary<'a>(pub &'a AnalyticityReport);

impl Record for AnalyticitySummary<'_> {
    const FIELDS: &'static [&'static str] = &[
        "label_x",
        "label_y",
        "label_z",
        "decay_rate",
        "fit_last",
        "r_squared",
        "trivially_analytic",
    ];

    fn row(&self) -> Vec<String> {
        let r = self.0;
        vec![
            float(r.label[0]),
            float(r.label[1]),
            float(r.label[2]),
            float(r.decay_rate),
            r.fit_last.to_string(),
            float(r.r_squared),
            r.trivially_analytic.to_string(),
        ]
    }
}

/// One row per label and degree.
pub struct ChebyshevRow<'a> {
    pub label_index: usize,
    pub k: usize,
    pub report: &'a AnalyticityReport,
}

impl Record for ChebyshevRow<'_> {
    const FIELDS: &'static [&'static str] = &["label_index", "k", "t_k", "x", "y", "z", "coefficient"];

    fn row(&self) -> Vec<String> {
        let r = self.report;
        let p = r.samples[self.k];
        vec![
            self.label_index.to_string(),
            self.k.to_string(),
            float(r.times[self.k]),
            float(p[0]),
            float(p[1]),
            float(p[2]),
            float(r.coefficients[self.k]),
        ]
    }
}

pub fn chebyshev_rows(reports: &[AnalyticityReport]) -> Vec<ChebyshevRow<'_>> {
    reports
        .iter()
        .enumerate()
        .flat_map(|(label_index, report)| (0..report.times.len()).map(move |k| ChebyshevRow { label_index, k, report }))
        .collect()
}

/// Writes header plus rows in the given order.
pub fn write_records<R: Record>(path: &Path, records: &[R]) -> Result<()> {
    if records.is_empty() {
        bail!("no records to write to {}", path.display());
    }
    let mut w = csv::Writer::from_path(path).with_context(|| format!("cannot write {}", path.display()))?;
    w.write_record(R::FIELDS)?;
    for r in records {
        let row = r.row();
        debug_assert_eq!(row.len(), R::FIELDS.len());
        w.write_record(&row)?;
    }
    w.flush().with_context(|| format!("cannot write {}", path.display()))?;
    Ok(())
}

/// Free-form table for harness output.
pub fn write_table(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("cannot write {}", path.display()))?;
    w.write_record(header)?;
    for r in rows {
        if r.len() != header.len() {
            bail!("row has {} columns, header has {}", r.len(), header.len());
        }
        w.write_record(r)?;
    }
    w.flush().with_context(|| format!("cannot write {}", path.display()))?;
    Ok(())
}
