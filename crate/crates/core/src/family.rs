//! The model family on `N × (A,B) ⊂ R^{2m+2}`: an orthonormal frame whose
//! only non-zero brackets are
//!
//! ```text
//! [e_α, e_β']  = 2h δ_αβ e_z        [e_α, e_w]  = h e_α
//! [e_α', e_w]  = h e_α'             [e_z, e_w]  = (2h + t h') e_z
//! ```
//!
//! with `e_w = t h ∂_t` the only vector that differentiates functions of `t`,
//! and `J e_α = e_α'`, `J e_z = e_w`. Frame indices are zero-based:
//! `α ∈ 0..m`, `α' = α + m`, `z = 2m`, `w = 2m + 1`.
//!
//! Besides the generator this module carries closed-form tables for the
//! connection, curvature, Ricci tensor, scalar curvature, structure
//! function, `Q = R - f R^H` and the non-semisymmetry witness, used as
//! independent oracles for the engine.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::jet::{Jet, MAX_ORDER};
use crate::model::{ComplexStructure, FrameSpec};
use crate::tensor::Tensor;

/// User-supplied `h`: returns the jet of `h` at `t0` with the requested order.
pub trait HProvider: Send + Sync {
    fn jet(&self, m: usize, t0: f64, order: usize) -> Result<Jet>;
    fn describe(&self) -> String {
        "custom".to_string()
    }
}

impl<F> HProvider for F
where
    F: Fn(usize, f64, usize) -> Result<Jet> + Send + Sync,
{
    fn jet(&self, m: usize, t0: f64, order: usize) -> Result<Jet> {
        self(m, t0, order)
    }
}

#[derive(Clone)]
pub enum HSpec {
    /// `h = t^p`
    Power(f64),
    /// `h = t^{-(2+m)} sqrt(a + b t² + c t^{4+2m})`
    Sqrt { a: f64, b: f64, c: f64 },
    Custom(Arc<dyn HProvider>),
}

impl fmt::Debug for HSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for HSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HSpec::Power(p) => write!(f, "power:p={p}"),
            HSpec::Sqrt { a, b, c } => write!(f, "sqrt:a={a},b={b},c={c}"),
            HSpec::Custom(p) => write!(f, "{}", p.describe()),
        }
    }
}

impl HSpec {
    pub fn jet(&self, m: usize, t0: f64, order: usize) -> Result<Jet> {
        let t = Jet::coordinate(t0, order.max(1))?.truncate(order)?;
        match *self {
            HSpec::Power(p) => t.powf(p),
            HSpec::Sqrt { a, b, c } => {
                let k = order;
                let radicand = Jet::constant(a, t0, k)? + t.powi(2).scale(b) + t.powi(4 + 2 * m as u32).scale(c);
                if !(radicand.value() > 0.0) {
                    return Err(Error::InvalidParams(format!(
                        "radicand a + b t^2 + c t^(4+2m) = {} is not positive at t = {t0}",
                        radicand.value()
                    )));
                }
                Ok(t.powf(-(2.0 + m as f64))? * radicand.sqrt()?)
            }
            HSpec::Custom(ref p) => p.jet(m, t0, order),
        }
    }
}

/// Parses `power:p=<real>` and `sqrt:a=<real>,b=<real>,c=<real>`.
impl FromStr for HSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidParams(format!("cannot parse h spec {s:?}"));
        let (kind, rest) = s.split_once(':').ok_or_else(bad)?;
        let mut kv = std::collections::BTreeMap::new();
        for part in rest.split(',').filter(|p| !p.trim().is_empty()) {
            let (k, v) = part.split_once('=').ok_or_else(bad)?;
            let v: f64 = v.trim().parse().map_err(|_| bad())?;
            if !v.is_finite() || kv.insert(k.trim().to_string(), v).is_some() {
                return Err(bad());
            }
        }
        let mut take = |k: &str| kv.remove(k).ok_or_else(bad);
        let spec = match kind.trim() {
            "power" => HSpec::Power(take("p")?),
            "sqrt" => HSpec::Sqrt {
                a: take("a")?,
                b: take("b")?,
                c: take("c")?,
            },
            _ => return Err(bad()),
        };
        if !kv.is_empty() {
            return Err(bad());
        }
        Ok(spec)
    }
}

/// The three constant-scalar-curvature cases of the `sqrt` family.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Case {
    /// `a = c = 0`, `b = 1`
    I,
    /// `a = 1`, `b = c = 0`
    II,
    /// `a > 0`, `b = 0`, `c = -a`, on `(0, 1)`
    III,
}

impl FromStr for Case {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "i" | "1" => Ok(Case::I),
            "ii" | "2" => Ok(Case::II),
            "iii" | "3" => Ok(Case::III),
            _ => Err(Error::InvalidParams(format!("unknown case {s:?}"))),
        }
    }
}

impl Case {
    /// Open interval of admissible `t`.
    pub fn interval(self) -> (f64, f64) {
        match self {
            Case::III => (0.0, 1.0),
            _ => (0.0, f64::INFINITY),
        }
    }

    pub fn default_grid(self) -> &'static [f64] {
        match self {
            Case::III => &[0.35, 0.6, 0.85],
            _ => &DEFAULT_GRID,
        }
    }

    /// Whether the structure is Einstein.
    pub fn einstein(self) -> bool {
        !matches!(self, Case::I)
    }
}

/// Default sample points away from the case-(iii) interval.
pub const DEFAULT_GRID: [f64; 4] = [0.8, 1.0, 1.6, 2.4];
/// Default `a` of case (iii).
pub const CASE_III_A: f64 = 1.0;

#[derive(Clone, Debug)]
pub struct FamilyParams {
    pub m: usize,
    pub h: HSpec,
    pub t0: f64,
    /// Jet order of `h`; the bracket table carries one order less.
    pub order: usize,
}

impl FamilyParams {
    pub fn new(m: usize, h: HSpec, t0: f64, order: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidParams("m must be at least 1".into()));
        }
        if !(t0 > 0.0 && t0.is_finite()) {
            return Err(Error::InvalidParams(format!("t0 = {t0} must be positive")));
        }
        if !(2..=MAX_ORDER).contains(&order) {
            return Err(Error::InvalidParams(format!("jet order {order} outside 2..={MAX_ORDER}")));
        }
        let p = FamilyParams { m, h, t0, order };
        let h0 = p.h_jet().map_err(|e| match e {
            Error::NonPositiveBase(v) => Error::InvalidParams(format!("h undefined at t0 = {t0} ({v})")),
            other => other,
        })?;
        if !(h0.value().abs() > f64::EPSILON) || !h0.value().is_finite() {
            return Err(Error::InvalidParams(format!("h(t0) = {} must be non-zero", h0.value())));
        }
        Ok(p)
    }

    pub fn case(case: Case, m: usize, t0: f64, order: usize) -> Result<Self> {
        let (lo, hi) = case.interval();
        if !(t0 > lo && t0 < hi) {
            return Err(Error::InvalidParams(format!(
                "t0 = {t0} outside the interval ({lo}, {hi}) of case {case:?}"
            )));
        }
        let h = match case {
            Case::I => HSpec::Sqrt { a: 0.0, b: 1.0, c: 0.0 },
            Case::II => HSpec::Sqrt { a: 1.0, b: 0.0, c: 0.0 },
            Case::III => HSpec::Sqrt {
                a: CASE_III_A,
                b: 0.0,
                c: -CASE_III_A,
            },
        };
        FamilyParams::new(m, h, t0, order)
    }

    pub fn dim(&self) -> usize {
        2 * self.m + 2
    }

    pub fn n(&self) -> usize {
        self.m + 1
    }

    pub fn h_jet(&self) -> Result<Jet> {
        self.h.jet(self.m, self.t0, self.order)
    }

    pub fn at(&self, t0: f64) -> Result<Self> {
        FamilyParams::new(self.m, self.h.clone(), t0, self.order)
    }
}

/// Frame index helpers.
#[derive(Clone, Copy, Debug)]
pub struct FamilyIndex {
    pub m: usize,
}

impl FamilyIndex {
    pub fn primed(&self, a: usize) -> usize {
        a + self.m
    }
    pub fn z(&self) -> usize {
        2 * self.m
    }
    pub fn w(&self) -> usize {
        2 * self.m + 1
    }
    pub fn dim(&self) -> usize {
        2 * self.m + 2
    }
}

/// `h`, `h'`, `h''` and `t` as jets truncated to a common order.
struct HData {
    t: Jet,
    h: Jet,
    h1: Jet,
    h2: Option<Jet>,
}

impl HData {
    fn at_order(p: &FamilyParams, order: usize) -> Result<Self> {
        let h = p.h_jet()?;
        let h1 = h.shift()?;
        let h2 = h1.shift().ok();
        let t = Jet::coordinate(p.t0, p.order)?;
        Ok(HData {
            t: t.truncate(order)?,
            h: h.truncate(order)?,
            h1: h1.truncate(order)?,
            h2: h2.filter(|x| x.order() >= order).map(|x| x.truncate(order)).transpose()?,
        })
    }

    fn h2(&self) -> Result<Jet> {
        self.h2.ok_or(Error::OrderExhausted)
    }

    fn c(&self, v: f64) -> Jet {
        Jet::constant(v, self.h.base_point(), self.h.order()).unwrap()
    }

    /// `h + t h'`
    fn h_plus(&self) -> Jet {
        self.h + self.t * self.h1
    }
}

/// Builds the bracket table and complex structure.
pub fn build_family(p: &FamilyParams) -> Result<(FrameSpec, ComplexStructure)> {
    let ix = FamilyIndex { m: p.m };
    let order = p.order - 1;
    let d = HData::at_order(p, order)?;
    let mut c = Tensor::zeros(ix.dim(), 3, p.t0, order)?;
    let mut put = |i: usize, j: usize, k: usize, v: Jet| -> Result<()> {
        c.set(&[i, j, k], v)?;
        c.set(&[j, i, k], -v)
    };
    let (z, w) = (ix.z(), ix.w());
    for a in 0..p.m {
        put(a, ix.primed(a), z, d.h.scale(2.0))?;
        put(a, w, a, d.h)?;
        put(ix.primed(a), w, ix.primed(a), d.h)?;
    }
    put(z, w, z, d.h.scale(2.0) + d.t * d.h1)?;
    let frame = FrameSpec::new(c, w, d.t * d.h)?;
    let mut pairs: Vec<_> = (0..p.m).map(|a| (a, ix.primed(a))).collect();
    pairs.push((z, w));
    let complex = ComplexStructure::from_pairs(ix.dim(), &pairs)?;
    Ok((frame, complex))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TableId {
    Connection,
    Riemann,
    Ricci,
    Scalar,
    StructureFunction,
    Q,
    RrWitness,
    SqrtScalar,
    SqrtStructureFunction,
}

impl FromStr for TableId {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "connection" => TableId::Connection,
            "riemann" => TableId::Riemann,
            "ricci" => TableId::Ricci,
            "scalar" => TableId::Scalar,
            "f" => TableId::StructureFunction,
            "q" => TableId::Q,
            "rr_witness" => TableId::RrWitness,
            "sqrt_scalar" => TableId::SqrtScalar,
            "sqrt_f" => TableId::SqrtStructureFunction,
            _ => return Err(Error::UnknownTable(s.to_string())),
        })
    }
}

#[derive(Clone, Debug)]
pub enum OracleValue {
    Tensor(Tensor),
    Scalar(Jet),
}

impl OracleValue {
    pub fn tensor(self) -> Option<Tensor> {
        match self {
            OracleValue::Tensor(t) => Some(t),
            OracleValue::Scalar(_) => None,
        }
    }
    pub fn scalar(self) -> Option<Jet> {
        match self {
            OracleValue::Scalar(j) => Some(j),
            OracleValue::Tensor(_) => None,
        }
    }
}

/// Closed-form tables of the family. The connection table carries the
/// bracket order (`order - 1`); all curvature-level tables carry `order - 2`.
pub struct FamilyOracle<'a> {
    params: &'a FamilyParams,
    ix: FamilyIndex,
}

/// Writes a rank-4 component together with its images under the
/// curvature symmetries, refusing contradictory assignments.
fn put_curvature(t: &mut Tensor, [h, i, j, k]: [usize; 4], v: Jet) -> Result<()> {
    if v.is_zero() {
        return Ok(());
    }
    let images = [
        ([h, i, j, k], 1.0),
        ([i, h, j, k], -1.0),
        ([h, i, k, j], -1.0),
        ([i, h, k, j], 1.0),
        ([j, k, h, i], 1.0),
        ([k, j, h, i], -1.0),
        ([j, k, i, h], -1.0),
        ([k, j, i, h], 1.0),
    ];
    for (idx, s) in images {
        let val = v.scale(s);
        let cur = t.get(&idx);
        if !cur.is_zero() && (*cur - val).max_abs() > 1e-12 * val.max_abs().max(1.0) {
            return Err(Error::Convention(format!("oracle table inconsistent at {idx:?}")));
        }
        t.set(&idx, val)?;
    }
    Ok(())
}

fn delta(a: usize, b: usize) -> f64 {
    if a == b {
        1.0
    } else {
        0.0
    }
}

impl<'a> FamilyOracle<'a> {
    pub fn new(params: &'a FamilyParams) -> Self {
        FamilyOracle {
            params,
            ix: FamilyIndex { m: params.m },
        }
    }

    pub fn eval(&self, which: TableId) -> Result<OracleValue> {
        Ok(match which {
            TableId::Connection => OracleValue::Tensor(self.connection()?),
            TableId::Riemann => OracleValue::Tensor(self.riemann()?),
            TableId::Ricci => OracleValue::Tensor(self.ricci()?),
            TableId::Scalar => OracleValue::Scalar(self.scalar()?),
            TableId::StructureFunction => OracleValue::Scalar(self.structure_function()?),
            TableId::Q => OracleValue::Tensor(self.q()?),
            TableId::RrWitness => OracleValue::Scalar(self.rr_witness()?),
            TableId::SqrtScalar => OracleValue::Scalar(self.sqrt_scalar()?),
            TableId::SqrtStructureFunction => OracleValue::Scalar(self.sqrt_structure_function()?),
        })
    }

    fn curvature_order(&self) -> Result<usize> {
        self.params.order.checked_sub(2).ok_or(Error::OrderExhausted)
    }

    pub fn connection(&self) -> Result<Tensor> {
        let p = self.params;
        let order = p.order - 1;
        let d = HData::at_order(p, order)?;
        let ix = self.ix;
        let (z, w) = (ix.z(), ix.w());
        let mut g = Tensor::zeros(ix.dim(), 3, p.t0, order)?;
        // Γ_ij^k = -Γ_ik^j completes each listed entry
        let mut put = |i: usize, j: usize, k: usize, v: Jet| -> Result<()> {
            g.set(&[i, j, k], v)?;
            g.set(&[i, k, j], -v)
        };
        let h = d.h;
        for a in 0..p.m {
            let ap = ix.primed(a);
            put(a, a, w, -h)?;
            put(ap, ap, w, -h)?;
            put(a, ap, z, h)?;
            put(ap, a, z, -h)?;
            put(a, z, ap, -h)?;
            put(z, a, ap, -h)?;
            put(ap, w, ap, h)?;
            put(a, w, a, h)?;
            put(ap, z, a, h)?;
            put(z, ap, a, h)?;
        }
        let k = h.scale(2.0) + d.t * d.h1;
        put(z, z, w, -k)?;
        put(z, w, z, k)?;
        Ok(g)
    }

    pub fn riemann(&self) -> Result<Tensor> {
        let p = self.params;
        let order = self.curvature_order()?;
        let d = HData::at_order(p, order)?;
        let ix = self.ix;
        let (z, w) = (ix.z(), ix.w());
        let mut r = Tensor::zeros(ix.dim(), 4, p.t0, order)?;
        let h2 = d.h * d.h;
        let mixed = d.h * d.h_plus();
        for a in 0..p.m {
            for b in 0..p.m {
                for c in 0..p.m {
                    for e in 0..p.m {
                        let anti = h2.scale(delta(a, c) * delta(b, e) - delta(a, e) * delta(b, c));
                        put_curvature(&mut r, [a, b, c, e], anti)?;
                        put_curvature(&mut r, [a, b, ix.primed(c), ix.primed(e)], anti)?;
                        put_curvature(&mut r, [ix.primed(a), ix.primed(b), ix.primed(c), ix.primed(e)], anti)?;
                        let sym = h2.scale(
                            delta(a, c) * delta(b, e) + delta(b, c) * delta(a, e) + 2.0 * delta(a, b) * delta(c, e),
                        );
                        put_curvature(&mut r, [a, ix.primed(b), c, ix.primed(e)], sym)?;
                    }
                }
                let db = delta(a, b);
                let (ap, bp) = (ix.primed(a), ix.primed(b));
                put_curvature(&mut r, [a, bp, z, w], mixed.scale(2.0 * db))?;
                let v = mixed.scale(db);
                put_curvature(&mut r, [a, z, b, z], v)?;
                put_curvature(&mut r, [a, z, bp, w], v)?;
                put_curvature(&mut r, [a, w, b, w], v)?;
                put_curvature(&mut r, [a, w, bp, z], -v)?;
                put_curvature(&mut r, [ap, z, bp, z], v)?;
                put_curvature(&mut r, [ap, w, bp, w], v)?;
            }
        }
        let (t, h, h1, hpp) = (d.t, d.h, d.h1, d.h2()?);
        let top = h2.scale(4.0) + (t * h * h1).scale(7.0) + t * t * (h1 * h1 + h * hpp);
        put_curvature(&mut r, [z, w, z, w], top)?;
        Ok(r)
    }

    pub fn ricci(&self) -> Result<Tensor> {
        let p = self.params;
        let order = self.curvature_order()?;
        let d = HData::at_order(p, order)?;
        let m = p.m as f64;
        let (t, h, h1, hpp) = (d.t, d.h, d.h1, d.h2()?);
        let s_plane = (h * h).scale(m + 2.0) + t * h * h1;
        let s_plane = s_plane.scale(-2.0);
        let s_line = (h * h).scale(-2.0 * (m + 2.0)) - (t * h * h1).scale(2.0 * m + 7.0) - t * t * (h1 * h1 + h * hpp);
        let zero = d.c(0.0);
        Tensor::from_fn(self.ix.dim(), 2, p.t0, order, |i| {
            if i[0] != i[1] {
                zero
            } else if i[0] < 2 * p.m {
                s_plane
            } else {
                s_line
            }
        })
    }

    pub fn scalar(&self) -> Result<Jet> {
        let p = self.params;
        let d = HData::at_order(p, self.curvature_order()?)?;
        let m = p.m as f64;
        let (t, h, h1, hpp) = (d.t, d.h, d.h1, d.h2()?);
        Ok((h * h).scale(-4.0 * (m + 1.0) * (m + 2.0))
            - (t * h * h1).scale(2.0 * (4.0 * m + 7.0))
            - (t * t * (h1 * h1 + h * hpp)).scale(2.0))
    }

    /// `f = -h(h + t h')`
    pub fn structure_function(&self) -> Result<Jet> {
        let d = HData::at_order(self.params, self.curvature_order()?)?;
        Ok(-(d.h * d.h_plus()))
    }

    pub fn q(&self) -> Result<Tensor> {
        let p = self.params;
        let order = self.curvature_order()?;
        let d = HData::at_order(p, order)?;
        let ix = self.ix;
        let mut q = Tensor::zeros(ix.dim(), 4, p.t0, order)?;
        let (t, h, h1, hpp) = (d.t, d.h, d.h1, d.h2()?);
        let thh = t * h * h1;
        for a in 0..p.m {
            for b in 0..p.m {
                for c in 0..p.m {
                    for e in 0..p.m {
                        let anti = thh.scale(-(delta(a, c) * delta(b, e) - delta(a, e) * delta(b, c)));
                        put_curvature(&mut q, [a, b, c, e], anti)?;
                        put_curvature(&mut q, [a, b, ix.primed(c), ix.primed(e)], anti)?;
                        put_curvature(&mut q, [ix.primed(a), ix.primed(b), ix.primed(c), ix.primed(e)], anti)?;
                        let sym = thh.scale(
                            -(delta(a, c) * delta(b, e) + delta(b, c) * delta(a, e) + 2.0 * delta(a, b) * delta(c, e)),
                        );
                        put_curvature(&mut q, [a, ix.primed(b), c, ix.primed(e)], sym)?;
                    }
                }
            }
        }
        let top = thh.scale(3.0) + t * t * (h1 * h1 + h * hpp);
        put_curvature(&mut q, [ix.z(), ix.w(), ix.z(), ix.w()], top)?;
        Ok(q)
    }

    /// Index tuple of the witness component `(R·R)_{1,(2m+1),1,2,2,(2m+1)}`
    /// (one-based labels) in zero-based frame indices.
    pub fn witness_index(&self) -> [usize; 6] {
        let z = self.ix.z();
        [0, z, 0, 1, 1, z]
    }

    /// `t h² h' (h + t h')`
    pub fn rr_witness(&self) -> Result<Jet> {
        let d = HData::at_order(self.params, self.curvature_order()?)?;
        Ok(d.t * d.h * d.h * d.h1 * d.h_plus())
    }

    /// Value of the component at [`Self::witness_index`]. For m >= 2 this is
    /// [`Self::rr_witness`]; at m = 1 the second label is `e_1' = J e_1` and
    /// the component is four times the closed form.
    pub fn rr_witness_component(&self) -> Result<Jet> {
        let w = self.rr_witness()?;
        Ok(if self.params.m == 1 { w.scale(4.0) } else { w })
    }

    fn sqrt_coeffs(&self) -> Result<(f64, f64, f64)> {
        match self.params.h {
            HSpec::Sqrt { a, b, c } => Ok((a, b, c)),
            _ => Err(Error::PreconditionNotMet("table only defined for the sqrt family".into())),
        }
    }

    /// `r = -4c(m+1)(m+2)`, a constant.
    pub fn sqrt_scalar(&self) -> Result<Jet> {
        let (_, _, c) = self.sqrt_coeffs()?;
        let m = self.params.m as f64;
        Jet::constant(-4.0 * c * (m + 1.0) * (m + 2.0), self.params.t0, self.curvature_order()?)
    }

    /// `f = (a(m+1) + b m t² - c t^{4+2m}) / t^{4+2m}`
    pub fn sqrt_structure_function(&self) -> Result<Jet> {
        let (a, b, c) = self.sqrt_coeffs()?;
        let order = self.curvature_order()?;
        let m = self.params.m;
        let t = Jet::coordinate(self.params.t0, self.params.order)?.truncate(order)?;
        let tp = t.powi(4 + 2 * m as u32);
        let num = Jet::constant(a * (m as f64 + 1.0), self.params.t0, order)? + t.powi(2).scale(b * m as f64) - tp.scale(c);
        num.checked_div(&tp)
    }
}

pub fn oracle_eval(p: &FamilyParams, which: TableId) -> Result<OracleValue> {
    FamilyOracle::new(p).eval(which)
}
