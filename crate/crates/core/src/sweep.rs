//! Parameter sweeps as plot-ready data: JSON (one object per sweep) and CSV
//! with a versioned `#` header and `#`-prefixed exceptional-point records.

use std::collections::BTreeMap;
use std::io::Write;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SpectralError};
use crate::numerics::branches::{SegmentLabel, SpectralBranch, TrackOptions, TrackResult};
use crate::numerics::roots::{double_root_residuals, ExceptionalPoint, SpectralFunction};

pub const CSV_SCHEMA_VERSION: u32 = 1;

/// How the tracked eigenvalue relates to the energy `E` and the rescaled
/// `μ = b²E` columns.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EigenvalueKind {
    /// Tracked value is `μ` at fixed `b`.
    RescaledMu { b: f64 },
    /// Tracked value is `μ = b²E`; the sweep parameter is `b`. The energy
    /// columns carry the selected view.
    BoxMu { view: EnergyView },
    /// Tracked value is used for both columns (dynamo growth rates).
    Direct,
}

impl EigenvalueKind {
    /// `(E, μ)` for a tracked value `z` at sweep parameter `parameter`.
    pub fn energy_and_mu(&self, parameter: f64, z: Complex64) -> (Complex64, Complex64) {
        match *self {
            EigenvalueKind::RescaledMu { b } => (z / (b * b), z),
            EigenvalueKind::BoxMu { view } => {
                let e = z / (parameter * parameter);
                let shown = match view {
                    EnergyView::Energy => e,
                    EnergyView::Rescaled => e / parameter,
                    EnergyView::Mu => z,
                };
                (shown, z)
            }
            EigenvalueKind::Direct => (z, z),
        }
    }
}

/// What the energy columns of a `b`-sweep show: `E`, `E/b` or `b²E`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnergyView {
    #[default]
    Energy,
    Rescaled,
    Mu,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub model: String,
    pub parameter_name: String,
    pub eigenvalue_kind: EigenvalueKind,
    pub fixed_params: BTreeMap<String, f64>,
    pub grid: Vec<f64>,
    pub branches: Vec<SpectralBranch>,
    pub exceptional_points: Vec<ExceptionalPoint>,
    pub diagnostics: Vec<String>,
    pub metadata: BTreeMap<String, String>,
}

/// One CSV data row.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub parameter: f64,
    pub level: usize,
    pub re_e: f64,
    pub im_e: f64,
    pub re_mu: f64,
    pub im_mu: f64,
    pub segment_label: SegmentLabel,
    pub branch_id: usize,
}

impl SweepResult {
    pub fn new(
        model: &str,
        parameter_name: &str,
        kind: EigenvalueKind,
        grid: Vec<f64>,
        tracked: TrackResult,
    ) -> Self {
        let mut metadata = BTreeMap::new();
        metadata.insert("version".into(), env!("CARGO_PKG_VERSION").into());
        metadata.insert("csv_schema".into(), CSV_SCHEMA_VERSION.to_string());
        Self {
            model: model.into(),
            parameter_name: parameter_name.into(),
            eigenvalue_kind: kind,
            fixed_params: BTreeMap::new(),
            grid,
            branches: tracked.branches,
            exceptional_points: tracked.exceptional_points,
            diagnostics: tracked.diagnostics.iter().map(|e| e.to_string()).collect(),
            metadata,
        }
    }

    pub fn record_tolerances(&mut self, rel: f64, abs: f64, opts: &TrackOptions) {
        let m = &mut self.metadata;
        m.insert(
            "integrator".into(),
            "dormand-prince 5(4), PI step control".into(),
        );
        m.insert("integrator_rel_tol".into(), format!("{rel:e}"));
        m.insert("integrator_abs_tol".into(), format!("{abs:e}"));
        m.insert("newton_rel_tol".into(), format!("{:e}", opts.root_rel_tol));
        m.insert("newton_max_iter".into(), opts.max_iter.to_string());
        m.insert(
            "coalescence_factor".into(),
            format!("{:e}", opts.coalescence_factor),
        );
        m.insert("max_halvings".into(), opts.max_halvings.to_string());
        m.insert("ep_tol".into(), format!("{:e}", opts.ep_tol));
        m.insert("reality_tol".into(), "1e-8*max(1,|z|)".into());
    }

    /// Data rows in branch order, then parameter order.
    pub fn rows(&self, upper_half_only: bool) -> Vec<SweepRow> {
        let mut rows = Vec::new();
        for b in &self.branches {
            for (&(p, z), &label) in b.points.iter().zip(&b.segment_labels) {
                if upper_half_only && z.im < 0.0 && label == SegmentLabel::ComplexPair {
                    continue;
                }
                let (e, mu) = self.eigenvalue_kind.energy_and_mu(p, z);
                // `+ 0.0` turns a negative zero into a positive one.
                let (e, mu) = (
                    Complex64::new(e.re, e.im + 0.0),
                    Complex64::new(mu.re, mu.im + 0.0),
                );
                rows.push(SweepRow {
                    parameter: p,
                    level: b.branch_id + 1,
                    re_e: e.re,
                    im_e: e.im,
                    re_mu: mu.re,
                    im_mu: mu.im,
                    segment_label: label,
                    branch_id: b.branch_id,
                });
            }
        }
        rows
    }

    /// Re-evaluates each single-parameter exceptional point against `family`
    /// and returns whether both double-root residuals are within
    /// `tol · max(1, |z|)`.
    pub fn verify_exceptional_points<S: SpectralFunction + ?Sized>(
        &self,
        family: &S,
        tol: f64,
    ) -> Result<Vec<bool>> {
        self.exceptional_points
            .iter()
            .map(|ep| {
                let jet = family.jet(ep.eigenvalue, ep.parameter, 2)?;
                let (rf, rdf) = double_root_residuals(&jet);
                let bound = tol * ep.eigenvalue.norm().max(1.0);
                Ok(ep.secondary_parameter.is_none() && rf <= bound && rdf <= bound)
            })
            .collect()
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| SpectralError::Serialization(e.to_string()))
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| SpectralError::Serialization(e.to_string()))
    }

    /// CSV with `#` header lines (schema, model, fixed parameters, metadata),
    /// `# ep,...` records for exceptional points, then the data rows.
    pub fn write_csv<W: Write>(&self, mut out: W, upper_half_only: bool) -> Result<()> {
        let io = |e: std::io::Error| SpectralError::Serialization(e.to_string());
        writeln!(out, "# krein-spectra sweep csv schema {CSV_SCHEMA_VERSION}").map_err(io)?;
        writeln!(
            out,
            "# model={} parameter={}",
            self.model, self.parameter_name
        )
        .map_err(io)?;
        for (k, v) in &self.fixed_params {
            writeln!(out, "# fixed {k}={v:?}").map_err(io)?;
        }
        for (k, v) in &self.metadata {
            writeln!(out, "# meta {k}={v}").map_err(io)?;
        }
        for d in &self.diagnostics {
            writeln!(out, "# diagnostic {d}").map_err(io)?;
        }
        writeln!(
            out,
            "# ep,{},secondary,re_E,im_E,re_mu,im_mu,residual_f,residual_df",
            self.parameter_name
        )
        .map_err(io)?;
        for ep in &self.exceptional_points {
            let (e, mu) = self
                .eigenvalue_kind
                .energy_and_mu(ep.parameter, ep.eigenvalue);
            let secondary = ep
                .secondary_parameter
                .map(|s| format!("{s:?}"))
                .unwrap_or_default();
            writeln!(
                out,
                "# ep,{:?},{},{:?},{:?},{:?},{:?},{:e},{:e}",
                ep.parameter, secondary, e.re, e.im, mu.re, mu.im, ep.residual_f, ep.residual_df
            )
            .map_err(io)?;
        }
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            self.parameter_name.as_str(),
            "level",
            "re_E",
            "im_E",
            "re_mu",
            "im_mu",
            "segment_label",
            "branch_id",
        ])
        .map_err(|e| SpectralError::Serialization(e.to_string()))?;
        for r in self.rows(upper_half_only) {
            w.write_record([
                format!("{:?}", r.parameter),
                r.level.to_string(),
                format!("{:?}", r.re_e),
                format!("{:?}", r.im_e),
                format!("{:?}", r.re_mu),
                format!("{:?}", r.im_mu),
                format!("{:?}", r.segment_label),
                r.branch_id.to_string(),
            ])
            .map_err(|e| SpectralError::Serialization(e.to_string()))?;
        }
        w.flush().map_err(io)?;
        Ok(())
    }

    pub fn to_csv_string(&self, upper_half_only: bool) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf, upper_half_only)?;
        String::from_utf8(buf).map_err(|e| SpectralError::Serialization(e.to_string()))
    }
}
