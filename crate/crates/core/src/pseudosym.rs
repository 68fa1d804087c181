//! Curvature-like operators acting as derivations, the model operator
//! `R^H` of constant holomorphic sectional curvature, and estimation of the
//! structure function `f` in `R·T = f R^H·T`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jet::Jet;
use crate::model::{ComplexStructure, KaehlerPackage};
use crate::tensor::{for_each_index, Tensor};

/// Default relative tolerance for pseudosymmetry verdicts.
pub const DEFAULT_TOL: f64 = 1e-8;

/// A rank-4 tensor read as the operator `A(e_h,e_i)e_j = Σ_k A_hijk e_k`.
#[derive(Clone, Debug)]
pub struct CurvatureLike {
    comps: Tensor,
}

impl CurvatureLike {
    pub fn new(comps: Tensor) -> Result<Self> {
        if comps.rank() != 4 {
            return Err(Error::ShapeMismatch(format!(
                "curvature-like tensor needs rank 4, got {}",
                comps.rank()
            )));
        }
        let skew = comps.permute(&[1, 0, 2, 3])?.scaled(-1.0).max_abs_value_diff(&comps)?;
        if skew > 1e-9 * comps.max_abs_value().max(1.0) {
            return Err(Error::ShapeMismatch(format!("not skew in the first pair (residual {skew:e})")));
        }
        Ok(CurvatureLike { comps })
    }

    pub fn comps(&self) -> &Tensor {
        &self.comps
    }

    pub fn into_tensor(self) -> Tensor {
        self.comps
    }

    pub fn truncate(&self, order: usize) -> Result<CurvatureLike> {
        Ok(CurvatureLike {
            comps: self.comps.truncate(order)?,
        })
    }
}

/// `R^H_hijk = δ_hk δ_ij - δ_hj δ_ik + J_hk J_ij - J_hj J_ik - 2 J_hi J_jk`.
pub fn build_rh(j: &ComplexStructure, t0: f64, order: usize) -> Result<CurvatureLike> {
    let d = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
    let comps = Tensor::constant_from_fn(j.dim(), 4, t0, order, |x| {
        let (h, i, jj, k) = (x[0], x[1], x[2], x[3]);
        d(h, k) * d(i, jj) - d(h, jj) * d(i, k) + j.get(h, k) * j.get(i, jj)
            - j.get(h, jj) * j.get(i, k)
            - 2.0 * j.get(h, i) * j.get(jj, k)
    })?;
    Ok(CurvatureLike { comps })
}

/// `(A·T)_{p q j1..jk} = -Σ_s Σ_a A_{p q js a} T_{..a..}`; operator and
/// tensor must share jet order.
pub fn derivation_action(a: &CurvatureLike, t: &Tensor) -> Result<Tensor> {
    let op = &a.comps;
    if t.rank() == 0 {
        return Err(Error::ShapeMismatch("derivation action needs rank >= 1".into()));
    }
    if t.rank() + 2 > crate::tensor::MAX_RANK {
        return Err(Error::RankTooLarge(t.rank() + 2));
    }
    if op.dim() != t.dim() {
        return Err(Error::ShapeMismatch(format!("dims {} vs {}", op.dim(), t.dim())));
    }
    if op.order() != t.order() || op.base_point().to_bits() != t.base_point().to_bits() {
        return Err(Error::MismatchedJets {
            left: (op.base_point(), op.order()),
            right: (t.base_point(), t.order()),
        });
    }
    let dim = t.dim();
    let rank = t.rank();
    let strides: Vec<usize> = (0..rank).map(|s| t.stride(s)).collect();
    let block = dim.pow(rank as u32);
    let mut out = Tensor::zeros(dim, rank + 2, t.base_point(), t.order())?;
    let mut rows: Vec<Vec<(usize, Jet)>> = vec![Vec::new(); dim];
    for p in 0..dim {
        for q in 0..dim {
            for (j, row) in rows.iter_mut().enumerate() {
                row.clear();
                for x in 0..dim {
                    let v = op.get(&[p, q, j, x]);
                    if !v.is_zero() {
                        row.push((x, -*v));
                    }
                }
            }
            if rows.iter().all(|r| r.is_empty()) {
                continue;
            }
            let start = (p * dim + q) * block;
            let dst = &mut out.comps_mut()[start..start + block];
            let mut pos = 0;
            for_each_index(dim, rank, |idx| {
                let acc = &mut dst[pos];
                for (s, &js) in idx.iter().enumerate() {
                    let base = pos - js * strides[s];
                    for (x, v) in &rows[js] {
                        acc.add_product(v, &t.comps()[base + x * strides[s]]);
                    }
                }
                pos += 1;
            });
        }
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Classification {
    Semisymmetric,
    PseudosymmetricWithF,
    NotPseudosymmetric,
}

impl std::fmt::Display for Classification {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Classification::Semisymmetric => "semisymmetric",
            Classification::PseudosymmetricWithF => "pseudosymmetric_with_f",
            Classification::NotPseudosymmetric => "not_pseudosymmetric",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Debug)]
pub struct PseudosymVerdict {
    /// Least-squares structure function; only the value is meaningful for
    /// verdicts, derivative coefficients are informational.
    pub f_hat: Jet,
    pub residual_pseudo: f64,
    pub residual_semi: f64,
    pub scale: f64,
    pub classification: Classification,
}

/// Fits `RT ≈ f RHT` by least squares over all component values and
/// classifies the result.
pub fn solve_structure_function(rt: &Tensor, rht: &Tensor, tol: f64) -> Result<PseudosymVerdict> {
    rt.same_shape(rht)?;
    let scale = 1f64.max(rt.max_abs_value()).max(rht.max_abs_value());
    let num = rt.inner(rht)?;
    let den = rht.inner(rht)?;
    let residual_semi = rt.max_abs_value() / scale;
    let quotient = if den.value() >= tol * scale * scale {
        num.checked_div(&den).ok()
    } else {
        None
    };
    let solvable = quotient.is_some();
    let f_hat = match quotient {
        Some(q) => q,
        None => Jet::zero(rt.base_point(), rt.order())?,
    };
    let fv = f_hat.value();
    let residual_pseudo = rt
        .comps()
        .iter()
        .zip(rht.comps())
        .fold(0.0f64, |m, (a, b)| m.max((a.value() - fv * b.value()).abs()))
        / scale;
    let classification = if residual_semi < tol {
        Classification::Semisymmetric
    } else if solvable && residual_pseudo < tol {
        Classification::PseudosymmetricWithF
    } else {
        Classification::NotPseudosymmetric
    };
    Ok(PseudosymVerdict {
        f_hat,
        residual_pseudo,
        residual_semi,
        scale,
        classification,
    })
}

/// Pseudosymmetry verdict for a tensor `T` of the package: compares
/// `R·T` with `R^H·T`.
pub fn pseudosymmetry_of(pkg: &KaehlerPackage, t: &Tensor, tol: f64) -> Result<PseudosymVerdict> {
    let r = CurvatureLike::new(pkg.riemann().clone())?.truncate(t.order())?;
    let rh = build_rh(pkg.complex(), pkg.base_point(), t.order())?;
    solve_structure_function(&derivation_action(&r, t)?, &derivation_action(&rh, t)?, tol)
}

/// Holomorphic projective curvature tensor
/// `P_hijk = R_hijk - (S_ij g_hk - S_hj g_ik + J_ia S_aj J_hk - J_hb S_bj J_ik - 2 J_ha S_ai J_jk) / (2(n+1))`.
pub fn projective_tensor(pkg: &KaehlerPackage) -> Result<Tensor> {
    let r = pkg.riemann();
    let s = pkg.ricci();
    let j = pkg.complex();
    let dim = pkg.dim();
    let c = 1.0 / (2.0 * (pkg.n() as f64 + 1.0));
    let d = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
    // (J S)_xy = Σ_a J_xa S_ay
    let js = Tensor::from_fn(dim, 2, r.base_point(), r.order(), |x| {
        let mut acc = Jet::zero(r.base_point(), r.order()).unwrap();
        for (a, v) in j.row(x[0]) {
            acc.add_scaled(v, s.get(&[a, x[1]]));
        }
        acc
    })?;
    Tensor::from_fn(dim, 4, r.base_point(), r.order(), |x| {
        let (h, i, jj, k) = (x[0], x[1], x[2], x[3]);
        let mut corr = s.get(&[i, jj]).scale(d(h, k));
        corr.add_scaled(-d(i, k), s.get(&[h, jj]));
        corr.add_scaled(j.get(h, k), js.get(&[i, jj]));
        corr.add_scaled(-j.get(i, k), js.get(&[h, jj]));
        corr.add_scaled(-2.0 * j.get(jj, k), js.get(&[h, i]));
        *r.get(x) - corr.scale(c)
    })
}

/// `Q = R - f R^H`; `f` must carry the curvature jet order.
pub fn build_q(pkg: &KaehlerPackage, f: &Jet) -> Result<CurvatureLike> {
    let r = pkg.riemann();
    let rh = build_rh(pkg.complex(), pkg.base_point(), r.order())?;
    let one = Jet::constant(1.0, r.base_point(), r.order())?;
    let q = Tensor::linear_combine(&one, r, &-*f, rh.comps())?;
    CurvatureLike::new(q)
}
