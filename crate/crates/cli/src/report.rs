use std::fmt::Write;

use serde::{Deserialize, Serialize};
use vlab_core::catalog::CatalogEntry;
use vlab_core::designs::{DesignVerdict, McVerdict, Strength};
use vlab_core::enumerate::LayersJson;
use vlab_core::extremality::ExtremalityReport;
use vlab_core::form::QFormJson;
use vlab_core::invariants::{GroupGenSet, InvarianceVerdict};
use vlab_core::rat::{self, JsonRat};
use vlab_core::spaces::{Point, RankinResult, SpaceDescriptor, SpaceKind};
use vlab_core::zeta::{ProbeReport, ZetaResult, ZetaVerdict};
use vlab_core::{IntVector, QForm, Result, SymEndo};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Report {
    pub tool: String,
    pub version: String,
    pub command: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input: Option<InputDescriptor>,
    pub analyses: Vec<Analysis>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verified: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timing_ms: Option<u64>,
}

impl Report {
    pub fn new(command: &str, input: Option<InputDescriptor>) -> Self {
        Report {
            tool: "vlab".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            input,
            analyses: Vec::new(),
            verified: None,
            timing_ms: None,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct InputDescriptor {
    pub source: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub form: QFormJson,
}

/// Everything needed to rebuild a space for certificate replay.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SpaceJson {
    pub label: String,
    pub kind: SpaceKind,
    pub m: usize,
    pub form: QFormJson,
    pub gp_basis: Vec<SymEndo>,
    pub points: Vec<IntVector>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub balance_ratio: Option<JsonRat>,
}

impl SpaceJson {
    pub fn from_space(s: &SpaceDescriptor) -> Self {
        SpaceJson {
            label: s.label.clone(),
            kind: s.kind.clone(),
            m: s.m,
            form: s.form.to_json(),
            gp_basis: s.gp_basis.clone(),
            points: s.points.iter().map(|p| p.coords.clone()).collect(),
            balance_ratio: s.balance_ratio.clone().map(JsonRat),
        }
    }

    pub fn to_space(&self) -> Result<SpaceDescriptor> {
        let form = QForm::from_json(&self.form)?;
        let points = self.points.iter().map(|c| Point::new(&form, c.clone())).collect::<Result<Vec<_>>>()?;
        let mut s = SpaceDescriptor::new(self.label.clone(), self.kind.clone(), form, self.gp_basis.clone(), points)?;
        s.m = self.m;
        s.balance_ratio = self.balance_ratio.clone().map(|r| r.0);
        Ok(s)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DesignLayer {
    pub radius: JsonRat,
    pub vectors: Vec<IntVector>,
    pub verdict: DesignVerdict,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CatalogSummary {
    pub name: String,
    pub dim: usize,
    pub determinant: JsonRat,
    pub kissing_number: usize,
    pub has_generators: bool,
    pub notes: String,
    pub form: QFormJson,
}

impl CatalogSummary {
    pub fn new(e: &CatalogEntry) -> Self {
        CatalogSummary {
            name: e.name.clone(),
            dim: e.form.dim(),
            determinant: JsonRat(e.expected_determinant.clone()),
            kissing_number: e.expected_kissing,
            has_generators: e.generators.is_some(),
            notes: e.notes.clone(),
            form: e.form.to_json(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "analysis", rename_all = "snake_case")]
pub enum Analysis {
    Layers { layers: LayersJson },
    Extremality { space: SpaceJson, result: ExtremalityReport },
    Design { strength: Strength, layers: Vec<DesignLayer>, all_hold: bool },
    MonteCarloDesign { space: SpaceJson, result: McVerdict },
    Zeta { result: ZetaResult },
    ZetaCheck { result: ZetaVerdict },
    Probe { result: ProbeReport },
    Invariance { generators: GroupGenSet, result: InvarianceVerdict },
    Rankin { result: RankinResult },
    Catalog { entries: Vec<CatalogSummary> },
}

/// Human-readable summary; drops certificates.
pub fn render_text(r: &Report) -> String {
    let mut out = String::new();
    let _ = write!(out, "{} {}", r.tool, r.command);
    if let Some(i) = &r.input {
        let _ = write!(out, " [{}{}]", i.source, i.name.as_ref().map(|n| format!(" {n}")).unwrap_or_default());
    }
    out.push('\n');
    for a in &r.analyses {
        match a {
            Analysis::Layers { layers } => {
                for (radius, count) in layers.radii.iter().zip(&layers.counts) {
                    let _ = writeln!(out, "layer {radius}: {count} vectors");
                }
            }
            Analysis::Extremality { space, result } => {
                let _ = writeln!(
                    out,
                    "{}: {}; eutactic {}, strongly eutactic {}, perfect {} (rank {} of {})",
                    space.label,
                    result.verdict.as_str(),
                    result.eutaxy.eutactic,
                    result.eutaxy.strongly_eutactic,
                    result.perfection.perfect,
                    result.perfection.rank,
                    result.perfection.gp_dim + 1
                );
            }
            Analysis::Design { strength, layers, all_hold } => {
                for l in layers {
                    let bad = l.verdict.nonzero_residuals().count();
                    let _ = writeln!(out, "layer {}: {:?} {} ({} nonzero residuals)", l.radius, strength, pass(l.verdict.holds), bad);
                }
                let _ = writeln!(out, "all layers: {}", pass(*all_hold));
            }
            Analysis::MonteCarloDesign { space, result } => {
                let _ = writeln!(
                    out,
                    "{}: {:?} {} at 3 sigma ({} samples, seed {})",
                    space.label,
                    result.strength,
                    if result.consistent { "consistent with a design" } else { "rejected" },
                    result.samples,
                    result.seed
                );
            }
            Analysis::Zeta { result } => {
                let _ = writeln!(
                    out,
                    "zeta(s={}) = {:.15} (Q <= {}, tail ~ {:.3e}, {} layers)",
                    result.s,
                    result.value,
                    rat::format(&result.bound),
                    result.tail_estimate,
                    result.layers_used
                );
            }
            Analysis::ZetaCheck { result } => {
                let _ = writeln!(out, "{:?}: {} ({})", result.kind, pass(result.holds_to_bound), result.statement);
            }
            Analysis::Probe { result } => {
                let _ = writeln!(
                    out,
                    "probe s={} step={}: {} directions, second differences positive: {}, max relative error {:.2e}",
                    result.s,
                    result.step,
                    result.directions.len(),
                    result.all_second_differences_positive,
                    result.max_relative_error
                );
            }
            Analysis::Invariance { result, .. } => {
                let _ = writeln!(
                    out,
                    "fixed dimensions (degree 2, degree 4) = ({}, {}); 4-design criterion {}",
                    result.fixed_dim_2,
                    result.fixed_dim_4,
                    pass(result.passes_fc4)
                );
            }
            Analysis::Rankin { result } => {
                let exact = result.exact_value.as_ref().map(|v| format!(" = {}", rat::format(v))).unwrap_or_default();
                let _ = writeln!(
                    out,
                    "rankin m={}: minimum {} , invariant {:.12}{} ({} sublattices)",
                    result.m,
                    rat::format(&result.minimum),
                    result.value,
                    exact,
                    result.sublattices
                );
            }
            Analysis::Catalog { entries } => {
                for e in entries {
                    let _ = writeln!(out, "{:<5} dim {:>2}  det {:>4}  kissing {:>5}  {}", e.name, e.dim, e.determinant, e.kissing_number, e.notes);
                }
            }
        }
    }
    if let Some(v) = r.verified {
        let _ = writeln!(out, "verified: {}", pass(v));
    }
    if let Some(t) = r.timing_ms {
        let _ = writeln!(out, "time: {t} ms");
    }
    out
}

fn pass(b: bool) -> &'static str {
    if b {
        "holds"
    } else {
        "fails"
    }
}
