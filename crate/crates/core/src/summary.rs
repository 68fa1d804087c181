//! Per-point flags: pseudosymmetry verdict, constancy of the scalar
//! curvature, the Einstein condition and local symmetry.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::model::KaehlerPackage;
use crate::pseudosym::{pseudosymmetry_of, Classification};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointSummary {
    pub t: f64,
    pub f_hat: f64,
    pub classification: Classification,
    pub residual_pseudo: f64,
    /// Normalizer of `residual_pseudo`.
    pub pseudo_scale: f64,
    pub r: f64,
    /// Largest derivative coefficient of the scalar-curvature jet.
    pub r_drift_abs: f64,
    /// The same, each coefficient divided by the largest matching
    /// coefficient among the curvature components it is traced from.
    pub r_drift: f64,
    pub r_constant: bool,
    /// Frobenius norm of `S - (r/2n) g`.
    pub einstein_gap: f64,
    pub einstein: bool,
    /// Frobenius norm of `∇R`.
    pub nabla_r_norm: f64,
    pub locally_symmetric: bool,
}

pub fn summarize(pkg: &KaehlerPackage, tol: f64) -> Result<PointSummary> {
    let riemann = pkg.riemann();
    let verdict = pseudosymmetry_of(pkg, riemann, tol)?;
    let r = pkg.scalar();

    let mut r_drift_abs: f64 = 0.0;
    let mut r_drift: f64 = 0.0;
    for j in 1..=r.order() {
        let c = r.derivative(j).abs();
        let terms = riemann.comps().iter().fold(1.0f64, |m, x| m.max(x.derivative(j).abs()));
        r_drift_abs = r_drift_abs.max(c);
        r_drift = r_drift.max(c / terms);
    }

    let two_n = pkg.dim() as f64;
    let s = pkg.ricci();
    let mut gap_sq = 0.0;
    for i in 0..pkg.dim() {
        for j in 0..pkg.dim() {
            let e = s.value(&[i, j]) - if i == j { r.value() / two_n } else { 0.0 };
            gap_sq += e * e;
        }
    }
    let einstein_gap = gap_sq.sqrt();
    let r_scale = riemann.max_abs_value().max(1.0);

    let dr = pkg.covariant_derivative(riemann)?;
    let nabla_r_norm = dr.comps().iter().map(|x| x.value() * x.value()).sum::<f64>().sqrt();
    let dr_terms = (pkg.gamma().max_abs_value() * riemann.max_abs_value()).max(1.0);

    Ok(PointSummary {
        t: pkg.base_point(),
        f_hat: verdict.f_hat.value(),
        classification: verdict.classification,
        residual_pseudo: verdict.residual_pseudo,
        pseudo_scale: verdict.scale,
        r: r.value(),
        r_drift_abs,
        r_drift,
        r_constant: r_drift <= tol,
        einstein_gap,
        einstein: einstein_gap <= tol * r_scale,
        nabla_r_norm,
        locally_symmetric: nabla_r_norm <= tol * dr_terms,
    })
}
