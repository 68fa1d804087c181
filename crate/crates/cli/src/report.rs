use std::fmt::Write as _;

use curvlab_core::audit::{AuditEntry, Verdict};
use curvlab_core::{Case, Classification, PointSummary};
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::CliError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Params {
    pub command: String,
    pub m: usize,
    pub h: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub case: Option<String>,
    pub order: usize,
    pub tol: f64,
}

impl Params {
    pub fn of(cfg: &RunConfig) -> Self {
        Params {
            command: cfg.command.name().to_string(),
            m: cfg.m,
            h: cfg.h.to_string(),
            case: cfg.case.map(|c| {
                match c {
                    Case::I => "i",
                    Case::II => "ii",
                    Case::III => "iii",
                }
                .to_string()
            }),
            order: cfg.order,
            tol: cfg.tol,
        }
    }
}

/// One sample point. Entry residuals are relative to `scale`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointReport {
    pub params: Params,
    pub point: f64,
    pub entries: Vec<AuditEntry>,
    pub f_hat: f64,
    pub r: f64,
    pub classification: Classification,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub summary: Option<PointSummary>,
}

impl PointReport {
    /// No entry failed; skipped entries carry a note and do not count.
    pub fn passed(&self) -> bool {
        self.entries.iter().all(|e| e.verdict != Verdict::Fail)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum Shape {
    One(Box<PointReport>),
    Many(Vec<PointReport>),
}

/// A single point serializes as an object, several as an array ordered by `t`.
pub fn to_json(reports: &[PointReport]) -> Result<String, CliError> {
    let mut s = match reports {
        [one] => serde_json::to_string_pretty(one)?,
        many => serde_json::to_string_pretty(many)?,
    };
    s.push('\n');
    Ok(s)
}

pub fn from_json(s: &str) -> Result<Vec<PointReport>, CliError> {
    Ok(match serde_json::from_str(s)? {
        Shape::One(r) => vec![*r],
        Shape::Many(v) => v,
    })
}

pub fn to_text(reports: &[PointReport]) -> String {
    let mut out = String::new();
    if let Some(first) = reports.first() {
        let p = &first.params;
        let _ = writeln!(
            out,
            "{} m={} h={}{} order={} tol={:e}",
            p.command,
            p.m,
            p.h,
            p.case.as_ref().map(|c| format!(" case={c}")).unwrap_or_default(),
            p.order,
            p.tol
        );
    }
    for r in reports {
        let _ = writeln!(
            out,
            "t={}  f_hat={:.12e}  r={:.12e}  {}",
            r.point, r.f_hat, r.r, r.classification
        );
        for e in &r.entries {
            let verdict = match e.verdict {
                Verdict::Pass => "pass",
                Verdict::Fail => "FAIL",
                Verdict::Skipped => "skip",
            };
            let _ = write!(out, "  {verdict:<4} {:<44} residual={:.3e} scale={:.3e}", e.id, e.residual, e.scale);
            if let Some(a) = e.alt_residual {
                let _ = write!(out, " alt={a:.3e}");
            }
            if let Some(n) = &e.note {
                let _ = write!(out, "  ({n})");
            }
            out.push('\n');
        }
        if let Some(s) = &r.summary {
            let _ = writeln!(
                out,
                "  f>0={} r_constant={} (drift {:.1e}) einstein={} (gap {:.3e}) locally_symmetric={} |∇R|={:.3e}",
                s.f_hat > 0.0,
                s.r_constant,
                s.r_drift,
                s.einstein,
                s.einstein_gap,
                s.locally_symmetric,
                s.nabla_r_norm
            );
        }
    }
    let failed = reports.iter().filter(|r| !r.passed()).count();
    let _ = writeln!(out, "{} point(s), {} failing", reports.len(), failed);
    out
}
