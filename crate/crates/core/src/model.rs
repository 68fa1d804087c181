//! Levi-Civita geometry of an orthonormal frame given by its Lie brackets.
//!
//! Index conventions, fixed for the whole crate:
//!
//! * `[e_i, e_j] = Σ_k c[i][j][k] e_k`
//! * `∇_{e_i} e_j = Σ_k Γ[i][j][k] e_k`
//! * `R(e_h, e_i) e_j = Σ_k R[h][i][j][k] e_k` with
//!   `R(U,V) = ∇_U ∇_V - ∇_V ∇_U - ∇_[U,V]`
//! * `J e_i = Σ_s J[i][s] e_s`, and the fundamental form is `Ω_ij = J_ij`
//! * covariant derivatives put the differentiation slot first:
//!   `(∇T)[i][j1..jk] = (∇_{e_i} T)(e_j1, .., e_jk)`
//!
//! Scalar fields depend on the single coordinate `t`, and exactly one frame
//! vector differentiates them: `e_d(φ) = μ · φ'`.

use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::jet::Jet;
use crate::tensor::{for_each_index, Tensor};

/// Tolerance for the Jacobi-identity validation of bracket tables.
pub const JACOBI_TOL: f64 = 1e-9;

#[derive(Clone, Debug)]
pub struct FrameSpec {
    brackets: Tensor,
    deriv_direction: usize,
    deriv_factor: Jet,
}

impl FrameSpec {
    /// Validates bracket antisymmetry and the Jacobi identity.
    pub fn new(brackets: Tensor, deriv_direction: usize, deriv_factor: Jet) -> Result<Self> {
        let f = Self::new_unchecked(brackets, deriv_direction, deriv_factor)?;
        f.check_jacobi(JACOBI_TOL)?;
        Ok(f)
    }

    /// Skips the Jacobi check. Meant for negative controls that perturb a
    /// valid bracket table.
    pub fn new_unchecked(brackets: Tensor, deriv_direction: usize, deriv_factor: Jet) -> Result<Self> {
        if brackets.rank() != 3 {
            return Err(Error::InvalidFrame(format!(
                "bracket table must have rank 3, got {}",
                brackets.rank()
            )));
        }
        let dim = brackets.dim();
        if deriv_direction >= dim {
            return Err(Error::InvalidFrame(format!(
                "derivative direction {deriv_direction} outside frame of dimension {dim}"
            )));
        }
        if deriv_factor.order() != brackets.order()
            || deriv_factor.base_point().to_bits() != brackets.base_point().to_bits()
        {
            return Err(Error::MismatchedJets {
                left: (brackets.base_point(), brackets.order()),
                right: (deriv_factor.base_point(), deriv_factor.order()),
            });
        }
        for i in 0..dim {
            for j in 0..dim {
                for k in 0..dim {
                    let a = brackets.get(&[i, j, k]);
                    let b = brackets.get(&[j, i, k]);
                    if (*a + *b).max_abs() > 0.0 {
                        return Err(Error::InvalidFrame(format!(
                            "bracket table not antisymmetric at ({i},{j},{k})"
                        )));
                    }
                }
            }
        }
        Ok(FrameSpec {
            brackets,
            deriv_direction,
            deriv_factor,
        })
    }

    pub fn dim(&self) -> usize {
        self.brackets.dim()
    }

    pub fn order(&self) -> usize {
        self.brackets.order()
    }

    pub fn base_point(&self) -> f64 {
        self.brackets.base_point()
    }

    pub fn brackets(&self) -> &Tensor {
        &self.brackets
    }

    pub fn deriv_direction(&self) -> usize {
        self.deriv_direction
    }

    pub fn deriv_factor(&self) -> &Jet {
        &self.deriv_factor
    }

    /// `e_i(φ)`; the result has one order less than `φ`.
    pub fn derivative(&self, phi: &Jet, i: usize) -> Result<Jet> {
        let d = phi.shift()?;
        if i != self.deriv_direction {
            return Jet::zero(d.base_point(), d.order());
        }
        Ok(self.deriv_factor.truncate(d.order())? * d)
    }

    /// Value-level Jacobi residual, relative to the largest term:
    /// `Σ_cyc (Σ_a c_ij^a c_ak^l - e_k(c_ij^l)) = 0`.
    pub fn jacobi_residual(&self) -> Result<(f64, [usize; 3])> {
        let dim = self.dim();
        let c = &self.brackets;
        let mut worst = (0.0, [0; 3]);
        for i in 0..dim {
            for j in 0..dim {
                for k in 0..dim {
                    for l in 0..dim {
                        let mut sum = 0.0;
                        let mut scale: f64 = 1.0;
                        for (x, y, z) in [(i, j, k), (j, k, i), (k, i, j)] {
                            for a in 0..dim {
                                let term = c.value(&[x, y, a]) * c.value(&[a, z, l]);
                                sum += term;
                                scale = scale.max(term.abs());
                            }
                            let d = self.derivative(c.get(&[x, y, l]), z)?.value();
                            sum -= d;
                            scale = scale.max(d.abs());
                        }
                        let r = sum.abs() / scale;
                        if r > worst.0 {
                            worst = (r, [i, j, k]);
                        }
                    }
                }
            }
        }
        Ok(worst)
    }

    pub fn check_jacobi(&self, tol: f64) -> Result<()> {
        let (residual, [i, j, k]) = self.jacobi_residual()?;
        if residual > tol {
            return Err(Error::JacobiViolation { residual, i, j, k });
        }
        Ok(())
    }

    /// The same frame with vectors renamed `e_i -> e_{σ(i)}`.
    pub fn relabel(&self, sigma: &[usize]) -> Result<FrameSpec> {
        check_relabel(sigma, self.dim())?;
        let c = &self.brackets;
        let mut out = Tensor::zeros(self.dim(), 3, c.base_point(), c.order())?;
        for_each_index(self.dim(), 3, |idx| {
            let _ = out.set(&[sigma[idx[0]], sigma[idx[1]], sigma[idx[2]]], *c.get(idx));
        });
        FrameSpec::new_unchecked(out, sigma[self.deriv_direction], self.deriv_factor)
    }
}

fn check_relabel(sigma: &[usize], dim: usize) -> Result<()> {
    let mut seen = vec![false; dim];
    if sigma.len() != dim || sigma.iter().any(|&s| s >= dim || std::mem::replace(&mut seen[s], true)) {
        return Err(Error::InvalidPermutation(sigma.to_vec()));
    }
    Ok(())
}

/// A frame-constant almost complex structure compatible with the metric.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexStructure {
    dim: usize,
    entries: Vec<f64>,
}

impl ComplexStructure {
    /// `entries[i * dim + s] = J_is`. Checks `J² = -I` and skewness.
    pub fn new(dim: usize, entries: Vec<f64>) -> Result<Self> {
        if dim == 0 || !dim.is_multiple_of(2) || entries.len() != dim * dim {
            return Err(Error::InvalidComplexStructure(format!(
                "need a {dim}x{dim} matrix with even dim"
            )));
        }
        let j = ComplexStructure { dim, entries };
        for a in 0..dim {
            for b in 0..dim {
                if (j.get(a, b) + j.get(b, a)).abs() > 1e-12 {
                    return Err(Error::InvalidComplexStructure(format!("not skew at ({a},{b})")));
                }
                let sq: f64 = (0..dim).map(|s| j.get(a, s) * j.get(s, b)).sum();
                let expect = if a == b { -1.0 } else { 0.0 };
                if (sq - expect).abs() > 1e-12 {
                    return Err(Error::InvalidComplexStructure(format!("J^2 != -I at ({a},{b})")));
                }
            }
        }
        Ok(j)
    }

    /// Block structure `J e_p = e_q`, `J e_q = -e_p` for each pair.
    pub fn from_pairs(dim: usize, pairs: &[(usize, usize)]) -> Result<Self> {
        let mut entries = vec![0.0; dim * dim];
        for &(p, q) in pairs {
            if p >= dim || q >= dim {
                return Err(Error::InvalidComplexStructure(format!("pair ({p},{q}) out of range")));
            }
            entries[p * dim + q] = 1.0;
            entries[q * dim + p] = -1.0;
        }
        ComplexStructure::new(dim, entries)
    }

    /// Pairs `(0,1), (2,3), ...`.
    pub fn standard(dim: usize) -> Result<Self> {
        let pairs: Vec<_> = (0..dim / 2).map(|p| (2 * p, 2 * p + 1)).collect();
        ComplexStructure::from_pairs(dim, &pairs)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, s: usize) -> f64 {
        self.entries[i * self.dim + s]
    }

    /// The matrix as a constant rank-2 tensor.
    pub fn tensor(&self, t0: f64, order: usize) -> Result<Tensor> {
        Tensor::constant_from_fn(self.dim, 2, t0, order, |i| self.get(i[0], i[1]))
    }

    /// Non-zero entries of row `i`.
    pub(crate) fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        (0..self.dim).map(move |s| (s, self.get(i, s))).filter(|&(_, v)| v != 0.0)
    }

    pub fn relabel(&self, sigma: &[usize]) -> Result<ComplexStructure> {
        check_relabel(sigma, self.dim)?;
        let mut entries = vec![0.0; self.dim * self.dim];
        for a in 0..self.dim {
            for b in 0..self.dim {
                entries[sigma[a] * self.dim + sigma[b]] = self.get(a, b);
            }
        }
        ComplexStructure::new(self.dim, entries)
    }

    /// Adds `eps` to `J_pq` without validation (negative controls only).
    pub fn perturbed(&self, p: usize, q: usize, eps: f64) -> ComplexStructure {
        let mut out = self.clone();
        out.entries[p * self.dim + q] += eps;
        out
    }
}

/// `2Γ_ij^k = c_ij^k - c_jk^i + c_ki^j` for an orthonormal frame.
pub fn koszul_connection(frame: &FrameSpec) -> Result<Tensor> {
    let c = frame.brackets();
    let half = Jet::constant(0.5, c.base_point(), c.order())?;
    Tensor::from_fn(frame.dim(), 3, c.base_point(), c.order(), |x| {
        let (i, j, k) = (x[0], x[1], x[2]);
        half * (*c.get(&[i, j, k]) - *c.get(&[j, k, i]) + *c.get(&[k, i, j]))
    })
}

/// Sparse view `(i, j) -> [(a, Γ_ij^a)]` truncated to `order`.
struct SparseConnection {
    dim: usize,
    entries: Vec<Vec<(usize, Jet)>>,
}

impl SparseConnection {
    fn new(gamma: &Tensor, order: usize) -> Result<Self> {
        let dim = gamma.dim();
        let mut entries = vec![Vec::new(); dim * dim];
        for i in 0..dim {
            for j in 0..dim {
                for a in 0..dim {
                    let g = gamma.get(&[i, j, a]);
                    if !g.is_zero() {
                        entries[i * dim + j].push((a, g.truncate(order)?));
                    }
                }
            }
        }
        Ok(SparseConnection { dim, entries })
    }

    #[inline]
    fn get(&self, i: usize, j: usize) -> &[(usize, Jet)] {
        &self.entries[i * self.dim + j]
    }
}

/// `R_hijk = e_h(Γ_ij^k) - e_i(Γ_hj^k) + Σ_a (Γ_ij^a Γ_ha^k - Γ_hj^a Γ_ia^k) - Σ_a c_hi^a Γ_aj^k`.
/// The result has one jet order less than the connection.
pub fn curvature(frame: &FrameSpec, gamma: &Tensor) -> Result<Tensor> {
    let order = gamma.order().checked_sub(1).ok_or(Error::OrderExhausted)?;
    let dim = frame.dim();
    let t0 = gamma.base_point();
    let g = gamma.truncate(order)?;
    let c = frame.brackets().truncate(order)?;
    let mut out = Tensor::zeros(dim, 4, t0, order)?;
    let mut err = None;
    let mut pos = 0;
    for_each_index(dim, 4, |x| {
        let (h, i, j, k) = (x[0], x[1], x[2], x[3]);
        let mut acc = Jet::zero(t0, order).unwrap();
        for (dir, sign, other) in [(h, 1.0, i), (i, -1.0, h)] {
            match frame.derivative(gamma.get(&[other, j, k]), dir) {
                Ok(d) => acc.add_scaled(sign, &d),
                Err(e) => {
                    err.get_or_insert(e);
                }
            }
        }
        for a in 0..dim {
            acc.add_product(g.get(&[i, j, a]), g.get(&[h, a, k]));
            acc.add_product(&-*g.get(&[h, j, a]), g.get(&[i, a, k]));
            acc.add_product(&-*c.get(&[h, i, a]), g.get(&[a, j, k]));
        }
        out.comps_mut()[pos] = acc;
        pos += 1;
    });
    match err {
        Some(e) => Err(e),
        None => Ok(out),
    }
}

/// Which trace of the curvature tensor yields the Ricci tensor. Selected
/// once by reproducing a reference table, see [`ricci_convention`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RicciConvention {
    /// `S_ij = Σ_a R_aija`
    TraceFirstLast,
    /// `S_ij = Σ_a R_aiaj`
    TraceFirstThird,
}

impl RicciConvention {
    pub fn apply(self, riemann: &Tensor) -> Result<Tensor> {
        match self {
            RicciConvention::TraceFirstLast => riemann.contract(0, 3),
            RicciConvention::TraceFirstThird => riemann.contract(0, 2),
        }
    }
}

static CONVENTION: OnceLock<std::result::Result<RicciConvention, String>> = OnceLock::new();

/// The frozen Ricci convention: the candidate that reproduces the
/// reference Ricci component `S_11 = -2((m+2)h² + t h h')` of the model
/// family at `m = 1`, `h = t^-2`, `t = 1` (value `-2`).
pub fn ricci_convention() -> Result<RicciConvention> {
    CONVENTION
        .get_or_init(|| select_convention().map_err(|e| e.to_string()))
        .clone()
        .map_err(Error::Convention)
}

fn select_convention() -> Result<RicciConvention> {
    let params = crate::family::FamilyParams::new(1, crate::family::HSpec::Power(-2.0), 1.0, 3)?;
    let (frame, _) = crate::family::build_family(&params)?;
    let riemann = curvature(&frame, &koszul_connection(&frame)?)?;
    let (h, th1) = (1.0, -2.0);
    let expected = -2.0 * (3.0 * h * h + th1);
    let mut found = Vec::new();
    for conv in [RicciConvention::TraceFirstLast, RicciConvention::TraceFirstThird] {
        let s = conv.apply(&riemann)?;
        if (s.value(&[0, 0]) - expected).abs() < 1e-12 {
            found.push(conv);
        }
    }
    match found.as_slice() {
        [one] => Ok(*one),
        other => Err(Error::Convention(format!("{} candidates matched", other.len()))),
    }
}

/// Ricci tensor under the frozen convention. Rejects tensors that are not
/// skew in both index pairs.
pub fn ricci(riemann: &Tensor) -> Result<Tensor> {
    if riemann.rank() != 4 {
        return Err(Error::ShapeMismatch(format!("ricci needs rank 4, got {}", riemann.rank())));
    }
    let scale = riemann.max_abs_value().max(1.0);
    let skew1 = riemann.permute(&[1, 0, 2, 3])?.scaled(-1.0).max_abs_value_diff(riemann)?;
    let skew2 = riemann.permute(&[0, 1, 3, 2])?.scaled(-1.0).max_abs_value_diff(riemann)?;
    if skew1.max(skew2) > 1e-9 * scale {
        return Err(Error::PreconditionNotMet(format!(
            "tensor is not curvature-like (skew residual {:e})",
            skew1.max(skew2) / scale
        )));
    }
    ricci_convention()?.apply(riemann)
}

pub fn scalar_curvature(ricci: &Tensor) -> Result<Jet> {
    Ok(ricci.contract(0, 1)?.as_scalar().expect("rank 0"))
}

/// The curvature apparatus of a frame with a complex structure at one point.
#[derive(Clone, Debug)]
pub struct KaehlerPackage {
    frame: FrameSpec,
    complex: ComplexStructure,
    gamma: Tensor,
    riemann: Tensor,
    ricci: Tensor,
    scalar: Jet,
}

impl KaehlerPackage {
    pub fn new(frame: FrameSpec, complex: ComplexStructure) -> Result<Self> {
        if frame.dim() != complex.dim() {
            return Err(Error::ShapeMismatch(format!(
                "frame dim {} vs complex structure dim {}",
                frame.dim(),
                complex.dim()
            )));
        }
        let gamma = koszul_connection(&frame)?;
        let riemann = curvature(&frame, &gamma)?;
        let ricci = ricci(&riemann)?;
        let scalar = scalar_curvature(&ricci)?;
        Ok(KaehlerPackage {
            frame,
            complex,
            gamma,
            riemann,
            ricci,
            scalar,
        })
    }

    pub fn frame(&self) -> &FrameSpec {
        &self.frame
    }

    pub fn complex(&self) -> &ComplexStructure {
        &self.complex
    }

    pub fn gamma(&self) -> &Tensor {
        &self.gamma
    }

    pub fn riemann(&self) -> &Tensor {
        &self.riemann
    }

    pub fn ricci(&self) -> &Tensor {
        &self.ricci
    }

    pub fn scalar(&self) -> &Jet {
        &self.scalar
    }

    pub fn dim(&self) -> usize {
        self.frame.dim()
    }

    /// Complex dimension `n`.
    pub fn n(&self) -> usize {
        self.frame.dim() / 2
    }

    pub fn base_point(&self) -> f64 {
        self.frame.base_point()
    }

    pub fn metric(&self, order: usize) -> Result<Tensor> {
        Tensor::identity(self.dim(), self.base_point(), order)
    }

    pub fn j_tensor(&self, order: usize) -> Result<Tensor> {
        self.complex.tensor(self.base_point(), order)
    }

    pub fn covariant_derivative(&self, t: &Tensor) -> Result<Tensor> {
        covariant_derivative(t, &self.frame, &self.gamma)
    }

    /// `Δφ = Σ_i (∇∇φ)_ii`.
    pub fn laplacian(&self, phi: &Jet) -> Result<Jet> {
        let s = Tensor::scalar(*phi, self.dim())?;
        let dd = self.covariant_derivative(&self.covariant_derivative(&s)?)?;
        Ok(dd.contract(0, 1)?.as_scalar().expect("rank 0"))
    }

    pub fn certificates(&self) -> Result<KaehlerCertificates> {
        kaehler_certificates_with(&self.frame, &self.complex, &self.gamma)
    }
}

/// `(∇T)_{i j1..jk} = e_i(T_{j1..jk}) - Σ_s Σ_a Γ_{i js}^a T_{..a..}`; the
/// result has one jet order less than `t`.
pub fn covariant_derivative(t: &Tensor, frame: &FrameSpec, gamma: &Tensor) -> Result<Tensor> {
    let order = t.order().checked_sub(1).ok_or(Error::OrderExhausted)?;
    if gamma.order() < order || frame.order() < order {
        return Err(Error::OrderExhausted);
    }
    let dim = t.dim();
    let rank = t.rank();
    if rank >= crate::tensor::MAX_RANK {
        return Err(Error::RankTooLarge(rank + 1));
    }
    let t0 = t.base_point();
    let conn = SparseConnection::new(gamma, order)?;
    let tt = t.truncate(order)?;
    let d = frame.deriv_direction();
    let mu = frame.deriv_factor().truncate(order)?;
    let strides: Vec<usize> = (0..rank).map(|s| t.stride(s)).collect();
    let block = dim.pow(rank as u32);

    let mut out = Tensor::zeros(dim, rank + 1, t0, order)?;
    for i in 0..dim {
        let dst = &mut out.comps_mut()[i * block..(i + 1) * block];
        if i == d {
            for (o, src) in dst.iter_mut().zip(t.comps()) {
                *o = mu * src.shift()?;
            }
        }
        let mut pos = 0;
        for_each_index(dim, rank, |idx| {
            let acc = &mut dst[pos];
            for (s, &js) in idx.iter().enumerate() {
                let base = pos - js * strides[s];
                for (a, g) in conn.get(i, js) {
                    acc.add_product(&-*g, &tt.comps()[base + a * strides[s]]);
                }
            }
            pos += 1;
        });
    }
    Ok(out)
}

/// Residuals of the three Kähler certificates, each relative to the
/// largest term entering it.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KaehlerCertificates {
    pub nijenhuis: f64,
    pub parallel_j: f64,
    pub closed_fundamental_form: f64,
}

impl KaehlerCertificates {
    pub fn passes(&self, tol: f64) -> bool {
        self.nijenhuis < tol && self.parallel_j < tol && self.closed_fundamental_form < tol
    }
}

/// Certificates straight from bracket data; the frame need not satisfy
/// the Jacobi identity.
pub fn kaehler_certificates(frame: &FrameSpec, complex: &ComplexStructure) -> Result<KaehlerCertificates> {
    kaehler_certificates_with(frame, complex, &koszul_connection(frame)?)
}

fn kaehler_certificates_with(
    frame: &FrameSpec,
    complex: &ComplexStructure,
    gamma: &Tensor,
) -> Result<KaehlerCertificates> {
    let dim = frame.dim();
    let c = |i: usize, j: usize, k: usize| frame.brackets().value(&[i, j, k]);
    let jm = |i: usize, s: usize| complex.get(i, s);
    let c_scale = frame.brackets().max_abs_value().max(1.0);

    // N_J(e_i,e_j) = [Je_i,Je_j] - J[e_i,Je_j] - J[Je_i,e_j] + J²[e_i,e_j]
    let mut nij: f64 = 0.0;
    for i in 0..dim {
        for j in 0..dim {
            let br_jj: Vec<f64> = (0..dim)
                .map(|l| {
                    let mut v = 0.0;
                    for (a, ja) in complex.row(i) {
                        for (b, jb) in complex.row(j) {
                            v += ja * jb * c(a, b, l);
                        }
                    }
                    v
                })
                .collect();
            let br_ij: Vec<f64> = (0..dim)
                .map(|s| complex.row(j).map(|(b, jb)| jb * c(i, b, s)).sum())
                .collect();
            let br_ji: Vec<f64> = (0..dim)
                .map(|s| complex.row(i).map(|(a, ja)| ja * c(a, j, s)).sum())
                .collect();
            let plain: Vec<f64> = (0..dim).map(|s| c(i, j, s)).collect();
            let apply_j = |v: &[f64], l: usize| (0..dim).map(|s| v[s] * jm(s, l)).sum::<f64>();
            for l in 0..dim {
                let j_plain: Vec<f64> = (0..dim).map(|u| apply_j(&plain, u)).collect();
                let n = br_jj[l] - apply_j(&br_ij, l) - apply_j(&br_ji, l) + apply_j(&j_plain, l);
                nij = nij.max(n.abs());
            }
        }
    }

    let jt = complex.tensor(frame.base_point(), gamma.order())?;
    let nabla_j = covariant_derivative(&jt, frame, gamma)?;
    let parallel = nabla_j.max_abs_value() / gamma.max_abs_value().max(1.0);

    // dΩ(e_i,e_j,e_k) = -Ω([e_i,e_j],e_k) + Ω([e_i,e_k],e_j) - Ω([e_j,e_k],e_i)
    let omega = |i: usize, j: usize, k: usize| (0..dim).map(|a| c(i, j, a) * jm(a, k)).sum::<f64>();
    let mut d_omega: f64 = 0.0;
    for i in 0..dim {
        for j in 0..dim {
            for k in 0..dim {
                let v = -omega(i, j, k) + omega(i, k, j) - omega(j, k, i);
                d_omega = d_omega.max(v.abs());
            }
        }
    }

    Ok(KaehlerCertificates {
        nijenhuis: nij / c_scale,
        parallel_j: parallel,
        closed_fundamental_form: d_omega / c_scale,
    })
}
