//! Machine-readable run reports: a JSON document that round-trips, an
//! RFC-4180 CSV table of per-cell results, and a TOML summary.

use std::io::Write;
use std::path::Path;

use anyhow::Context;
use growthdesign::{CovKind, CurveFamily, OptimalityCertificate64};
use serde::{Deserialize, Serialize};

use crate::config::{Cell, Mode};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellRecord {
    #[serde(flatten)]
    pub cell: Cell,
    /// Optimal (or checked) weights; empty when the cell failed.
    pub weights: Vec<f64>,
    pub criterion: Option<f64>,
    pub certificate: Option<OptimalityCertificate64>,
    /// D-efficiency of the uniform design against the solved optimum.
    pub uniform_efficiency: Option<f64>,
    /// Mode-dependent comparison: certify = checked design vs solved
    /// optimum; efficiency = candidate vs reference.
    pub efficiency: Option<f64>,
    pub converged: bool,
    pub wall_ms: f64,
    /// Error code for failed cells; successful cells carry none.
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSummary {
    pub family: CurveFamily,
    pub kind: CovKind,
    pub cells: usize,
    pub min_uniform_efficiency: Option<f64>,
    pub mean_uniform_efficiency: Option<f64>,
    /// Whether every cell in the group carries a passing certificate.
    pub all_certified: bool,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Summary {
    pub cells: usize,
    pub failed: usize,
    pub non_converged: usize,
    pub groups: Vec<GroupSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub version: u32,
    pub mode: Mode,
    pub occasions: usize,
    pub items: f64,
    pub seed: u64,
    pub cells: Vec<CellRecord>,
    pub summary: Summary,
}

impl RunReport {
    pub fn to_json(&self) -> anyhow::Result<String> {
        serde_json::to_string_pretty(self).context("report serialization failed")
    }

    pub fn from_json(text: &str) -> anyhow::Result<Self> {
        serde_json::from_str(text).context("report does not match the schema")
    }
}

pub fn summarize(cells: &[CellRecord]) -> Summary {
    struct Acc {
        family: CurveFamily,
        kind: CovKind,
        cells: usize,
        eff_count: usize,
        eff_sum: f64,
        eff_min: f64,
        all_certified: bool,
    }
    let mut accs: Vec<Acc> = Vec::new();
    for record in cells {
        let key = (record.cell.family, record.cell.kind);
        if !accs.iter().any(|a| (a.family, a.kind) == key) {
            accs.push(Acc {
                family: key.0,
                kind: key.1,
                cells: 0,
                eff_count: 0,
                eff_sum: 0.0,
                eff_min: f64::INFINITY,
                all_certified: true,
            });
        }
        let acc = accs
            .iter_mut()
            .find(|a| (a.family, a.kind) == key)
            .expect("group just ensured");
        acc.cells += 1;
        let certified = record
            .certificate
            .as_ref()
            .map(|c| c.optimal)
            .unwrap_or(false);
        acc.all_certified &= certified && record.error.is_none();
        if let Some(eff) = record.uniform_efficiency {
            acc.eff_count += 1;
            acc.eff_sum += eff;
            acc.eff_min = acc.eff_min.min(eff);
        }
    }
    let groups = accs
        .into_iter()
        .map(|a| GroupSummary {
            family: a.family,
            kind: a.kind,
            cells: a.cells,
            min_uniform_efficiency: (a.eff_count > 0).then_some(a.eff_min),
            mean_uniform_efficiency: (a.eff_count > 0).then_some(a.eff_sum / a.eff_count as f64),
            all_certified: a.all_certified,
        })
        .collect();
    Summary {
        cells: cells.len(),
        failed: cells.iter().filter(|c| c.error.is_some()).count(),
        non_converged: cells
            .iter()
            .filter(|c| c.error.is_none() && !c.converged)
            .count(),
        groups,
    }
}

/// Writes the per-cell CSV. Timing is deliberately excluded so that two runs
/// with the same config and seed produce byte-identical files.
pub fn write_csv(path: &Path, occasions: usize, cells: &[CellRecord]) -> anyhow::Result<()> {
    let mut writer = csv::Writer::from_path(path)
        .with_context(|| format!("cannot create {}", path.display()))?;
    let mut header: Vec<String> = [
        "index",
        "family",
        "kind",
        "beta0",
        "beta1",
        "beta2",
        "beta3",
        "sigma_gamma_sq",
        "rho",
        "sigma_eps_sq",
        "criterion",
        "gap",
        "eff_lower_bound",
        "optimal",
        "uniform_efficiency",
        "efficiency",
        "converged",
        "error",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    for j in 0..occasions {
        header.push(format!("w{j}"));
    }
    writer.write_record(&header)?;

    let fmt = |x: f64| x.to_string();
    let opt = |x: Option<f64>| x.map(fmt).unwrap_or_default();
    for record in cells {
        let mut row: Vec<String> = vec![
            record.cell.index.to_string(),
            format!("{:?}", record.cell.family).to_lowercase(),
            format!("{:?}", record.cell.kind).to_lowercase(),
        ];
        for k in 0..4 {
            row.push(record.cell.beta.get(k).copied().map(fmt).unwrap_or_default());
        }
        row.push(fmt(record.cell.sigma_gamma_sq));
        row.push(fmt(record.cell.rho));
        row.push(fmt(record.cell.sigma_eps_sq));
        row.push(opt(record.criterion));
        row.push(opt(record.certificate.as_ref().map(|c| c.gap)));
        row.push(opt(record.certificate.as_ref().map(|c| c.eff_lower_bound)));
        row.push(
            record
                .certificate
                .as_ref()
                .map(|c| c.optimal.to_string())
                .unwrap_or_default(),
        );
        row.push(opt(record.uniform_efficiency));
        row.push(opt(record.efficiency));
        row.push(record.converged.to_string());
        row.push(record.error.clone().unwrap_or_default());
        for j in 0..occasions {
            row.push(record.weights.get(j).copied().map(fmt).unwrap_or_default());
        }
        writer.write_record(&row)?;
    }
    writer.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct SummaryDocument<'a> {
    version: u32,
    mode: Mode,
    occasions: usize,
    items: f64,
    seed: u64,
    summary: &'a Summary,
}

pub fn write_summary_toml(path: &Path, report: &RunReport) -> anyhow::Result<()> {
    let doc = SummaryDocument {
        version: report.version,
        mode: report.mode,
        occasions: report.occasions,
        items: report.items,
        seed: report.seed,
        summary: &report.summary,
    };
    let text = toml::to_string_pretty(&doc).context("summary serialization failed")?;
    let mut file = std::fs::File::create(path)
        .with_context(|| format!("cannot create {}", path.display()))?;
    file.write_all(text.as_bytes())?;
    Ok(())
}
