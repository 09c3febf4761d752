//! CSV extracts of reports, sweeps and replicate streams.

use std::io::Write;

use serde::{Deserialize, Serialize};

use super::{AnalysisReport, ReportRow, COUNTRY};
use crate::inference::{RatioSample, ReplicateDiagnostic};
use crate::model::SweepRow;
use crate::Result;

/// Which probability colours the map.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ChoroplethLayer {
    /// Share of resamples meeting both all-geodemographics conditions.
    #[default]
    AllGeo,
    /// Share of bootstrapped `c/m` ratios inside the GIP window.
    GipWindow,
}

impl std::str::FromStr for ChoroplethLayer {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "all-geo" => Ok(ChoroplethLayer::AllGeo),
            "gip-window" => Ok(ChoroplethLayer::GipWindow),
            other => Err(crate::Error::Config(format!("unknown choropleth layer {other:?}"))),
        }
    }
}

fn opt(value: Option<f64>) -> String {
    value.map(|v| v.to_string()).unwrap_or_default()
}

fn layer_value(row: &ReportRow, layer: ChoroplethLayer) -> Option<f64> {
    match layer {
        ChoroplethLayer::AllGeo => Some(row.prong2.fraction),
        ChoroplethLayer::GipWindow => row.prong3.as_ref().map(|p| if p.applicable { p.fraction } else { 0.0 }),
    }
}

/// Region rows as `region_id,nvc,form,p_conjecture`, ordered by region id
/// then center count. Country-wide rows are not part of the map.
///
/// An empty field marks a cell where the probability is undefined.
pub fn emit_choropleth<W: Write>(report: &AnalysisReport, layer: ChoroplethLayer, sink: W) -> Result<()> {
    let mut rows: Vec<&ReportRow> = report.rows.iter().filter(|r| r.unit != COUNTRY).collect();
    // stable: forms stay in configuration order
    rows.sort_by(|a, b| a.unit.cmp(&b.unit).then(a.nvc.cmp(&b.nvc)));
    let mut writer = csv::Writer::from_writer(sink);
    writer.write_record(["region_id", "nvc", "form", "p_conjecture"])?;
    for row in rows {
        writer.write_record([row.unit.clone(), row.nvc.to_string(), row.form.clone(), opt(layer_value(row, layer))])?;
    }
    writer.flush()?;
    Ok(())
}

/// Sweep table as `form,param1,param2,E_h,E_gh,flag`.
pub fn emit_sweep<W: Write>(rows: &[SweepRow], sink: W) -> Result<()> {
    let mut writer = csv::Writer::from_writer(sink);
    writer.write_record(["form", "param1", "param2", "E_h", "E_gh", "flag"])?;
    for row in rows {
        writer.write_record([
            row.form.as_str().to_string(),
            row.param1.to_string(),
            opt(row.param2),
            row.e_h.to_string(),
            row.e_gh.to_string(),
            row.flag.to_string(),
        ])?;
    }
    writer.flush()?;
    Ok(())
}

/// Per-replicate moments as
/// `replicate,seed,fair_win,halftime_lead,conjecture`.
pub fn emit_replicates<W: Write>(rows: &[ReplicateDiagnostic], sink: W) -> Result<()> {
    let mut writer = csv::Writer::from_writer(sink);
    writer.write_record(["replicate", "seed", "fair_win", "halftime_lead", "conjecture"])?;
    for row in rows {
        writer.write_record([
            row.replicate.to_string(),
            row.seed.to_string(),
            opt(row.fair_win),
            opt(row.halftime_lead),
            row.conjecture.to_string(),
        ])?;
    }
    writer.flush()?;
    Ok(())
}

/// Bootstrapped ratios as `replicate,c_over_m`; empty where undefined.
pub fn emit_ratios<W: Write>(sample: &RatioSample, sink: W) -> Result<()> {
    let mut writer = csv::Writer::from_writer(sink);
    writer.write_record(["replicate", "c_over_m"])?;
    for (i, r) in sample.ratios.iter().enumerate() {
        writer.write_record([i.to_string(), opt(*r)])?;
    }
    writer.flush()?;
    Ok(())
}
