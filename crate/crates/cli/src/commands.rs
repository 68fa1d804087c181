use curvlab_core::audit::{run_audit, AuditEntry, AuditTolerances, Verdict};
use curvlab_core::pseudosym::pseudosymmetry_of;
use curvlab_core::{
    build_family, build_q, build_rh, derivation_action, summarize, Classification, CurvatureLike, FamilyOracle,
    FamilyParams, KaehlerPackage,
};
use rayon::prelude::*;

use crate::config::{Command, RunConfig};
use crate::error::CliError;
use crate::report::{Params, PointReport};

/// Runs every grid point, in parallel; the result keeps grid order.
pub fn run(cfg: &RunConfig) -> Result<Vec<PointReport>, CliError> {
    let params = Params::of(cfg);
    cfg.points.par_iter().map(|p| run_point(cfg, &params, p)).collect()
}

fn run_point(cfg: &RunConfig, params: &Params, p: &FamilyParams) -> Result<PointReport, CliError> {
    let (frame, j) = build_family(p)?;
    let pkg = KaehlerPackage::new(frame, j)?;
    let summary = summarize(&pkg, cfg.tol)?;
    let oracle = FamilyOracle::new(p);
    let entries = match cfg.command {
        Command::Verify => verify_entries(&pkg, &oracle, p.m, cfg.tol)?,
        Command::Audit => {
            let f = oracle.structure_function()?;
            run_audit(&pkg, Some(&f), AuditTolerances::from_base(cfg.tol))?.entries
        }
        Command::Scan => vec![entry("pseudosymmetry.riemann", summary.residual_pseudo, summary.pseudo_scale, cfg.tol)],
        Command::Certify => certify_entries(&pkg, cfg.tol)?,
    };
    Ok(PointReport {
        params: params.clone(),
        point: p.t0,
        entries,
        f_hat: summary.f_hat,
        r: summary.r,
        classification: summary.classification,
        summary: (cfg.command == Command::Scan).then_some(summary),
    })
}

fn entry(id: &str, residual: f64, scale: f64, tol: f64) -> AuditEntry {
    AuditEntry {
        id: id.to_string(),
        residual,
        scale,
        verdict: if residual <= tol { Verdict::Pass } else { Verdict::Fail },
        alt_residual: None,
        note: None,
    }
}

fn relative(lhs: f64, rhs: f64) -> (f64, f64) {
    let scale = 1f64.max(lhs.abs()).max(rhs.abs());
    ((lhs - rhs).abs() / scale, scale)
}

fn verify_entries(pkg: &KaehlerPackage, oracle: &FamilyOracle, m: usize, tol: f64) -> Result<Vec<AuditEntry>, CliError> {
    let f = oracle.structure_function()?;
    let mut out = Vec::new();

    let vr = pseudosymmetry_of(pkg, pkg.riemann(), tol)?;
    let (res, scale) = relative(vr.f_hat.value(), f.value());
    out.push(entry("structure_function.riemann", res, scale, tol));
    out.push(entry("pseudosymmetry.riemann", vr.residual_pseudo, vr.scale, tol));

    let vs = pseudosymmetry_of(pkg, pkg.ricci(), tol)?;
    if vs.classification == Classification::Semisymmetric {
        out.push(AuditEntry {
            note: Some("R·S vanishes, so S does not determine f".into()),
            verdict: Verdict::Skipped,
            ..entry("structure_function.ricci", 0.0, vs.scale, tol)
        });
    } else {
        let (res, scale) = relative(vs.f_hat.value(), f.value());
        out.push(entry("structure_function.ricci", res, scale, tol));
    }

    let r = pkg.riemann();
    let order = r.order();
    let r_cl = CurvatureLike::new(r.clone())?;
    let rr = derivation_action(&r_cl, r)?;
    let rhr = derivation_action(&build_rh(pkg.complex(), pkg.base_point(), order)?, r)?;
    let qr = derivation_action(&build_q(pkg, &f.truncate(order)?)?, r)?;
    let scale = 1f64
        .max(rr.max_abs_value())
        .max(f.value().abs() * rhr.max_abs_value());
    out.push(entry("q_annihilates_riemann", qr.max_abs_value() / scale, scale, tol));

    let idx = oracle.witness_index();
    let expected = oracle.rr_witness_component()?.value();
    let (res, wscale) = relative(rr.value(&idx), expected);
    let mut w = entry("witness.non_semisymmetric", res, wscale, tol);
    if expected.abs() <= tol * scale {
        w.verdict = Verdict::Fail;
        w.note = Some(format!("witness component vanishes ({expected:e})"));
    } else if m == 1 {
        w.note = Some("at m = 1 the component equals four times t h² h' (h + t h')".into());
    }
    out.push(w);
    Ok(out)
}

fn certify_entries(pkg: &KaehlerPackage, tol: f64) -> Result<Vec<AuditEntry>, CliError> {
    let c = pkg.certificates()?;
    Ok(vec![
        entry("kaehler.nijenhuis", c.nijenhuis, 1.0, tol),
        entry("kaehler.parallel_j", c.parallel_j, 1.0, tol),
        entry("kaehler.closed_fundamental_form", c.closed_fundamental_form, 1.0, tol),
    ])
}
