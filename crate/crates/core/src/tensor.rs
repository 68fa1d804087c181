//! Dense component tensors over an orthonormal frame.
//!
//! The metric is the identity in the frame, so raising and lowering indices
//! is trivial and every transvection with `g` is a plain index contraction.
//! Components are stored row-major by index tuple.

use crate::error::{Error, Result};
use crate::jet::Jet;

pub const MAX_RANK: usize = 6;

#[derive(Clone, Debug)]
pub struct Tensor {
    dim: usize,
    rank: usize,
    base_point: f64,
    order: usize,
    comps: Vec<Jet>,
}

/// Iterates all index tuples of a `dim^rank` array in row-major order.
pub(crate) struct MultiIndex {
    dim: usize,
    idx: Vec<usize>,
    done: bool,
}

impl MultiIndex {
    pub(crate) fn new(dim: usize, rank: usize) -> Self {
        MultiIndex {
            dim,
            idx: vec![0; rank],
            done: dim == 0,
        }
    }

    /// Advances to the next tuple; returns `None` when exhausted.
    pub(crate) fn next_index(&mut self) -> Option<&[usize]> {
        if self.done {
            None
        } else {
            Some(&self.idx)
        }
    }

    pub(crate) fn advance(&mut self) {
        for s in (0..self.idx.len()).rev() {
            self.idx[s] += 1;
            if self.idx[s] < self.dim {
                return;
            }
            self.idx[s] = 0;
        }
        self.done = true;
    }
}

/// Calls `f` with every index tuple of a `dim^rank` array, row-major.
pub(crate) fn for_each_index(dim: usize, rank: usize, mut f: impl FnMut(&[usize])) {
    let mut it = MultiIndex::new(dim, rank);
    while let Some(idx) = it.next_index() {
        f(idx);
        it.advance();
    }
}

impl Tensor {
    pub fn zeros(dim: usize, rank: usize, t0: f64, order: usize) -> Result<Self> {
        if rank > MAX_RANK {
            return Err(Error::RankTooLarge(rank));
        }
        if dim == 0 || !dim.is_multiple_of(2) {
            return Err(Error::ShapeMismatch(format!("frame dimension {dim} must be positive and even")));
        }
        let z = Jet::zero(t0, order)?;
        Ok(Tensor {
            dim,
            rank,
            base_point: t0,
            order,
            comps: vec![z; dim.pow(rank as u32)],
        })
    }

    /// Builds a tensor from a component function. Every returned jet must
    /// have the given base point and order.
    pub fn from_fn(
        dim: usize,
        rank: usize,
        t0: f64,
        order: usize,
        mut f: impl FnMut(&[usize]) -> Jet,
    ) -> Result<Self> {
        let mut out = Tensor::zeros(dim, rank, t0, order)?;
        let mut pos = 0;
        let mut bad = None;
        for_each_index(dim, rank, |idx| {
            let j = f(idx);
            if j.order() != order || j.base_point().to_bits() != t0.to_bits() {
                bad.get_or_insert((j.base_point(), j.order()));
            }
            out.comps[pos] = j;
            pos += 1;
        });
        if let Some(right) = bad {
            return Err(Error::MismatchedJets {
                left: (t0, order),
                right,
            });
        }
        Ok(out)
    }

    /// Tensor with constant (derivative-free) components.
    pub fn constant_from_fn(
        dim: usize,
        rank: usize,
        t0: f64,
        order: usize,
        mut f: impl FnMut(&[usize]) -> f64,
    ) -> Result<Self> {
        let unit = Jet::constant(1.0, t0, order)?;
        Tensor::from_fn(dim, rank, t0, order, |idx| unit.scale(f(idx)))
    }

    /// The frame metric `δ_ij`.
    pub fn identity(dim: usize, t0: f64, order: usize) -> Result<Self> {
        Tensor::constant_from_fn(dim, 2, t0, order, |i| if i[0] == i[1] { 1.0 } else { 0.0 })
    }

    pub fn scalar(j: Jet, dim: usize) -> Result<Self> {
        let mut out = Tensor::zeros(dim, 0, j.base_point(), j.order())?;
        out.comps[0] = j;
        Ok(out)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn base_point(&self) -> f64 {
        self.base_point
    }

    pub fn comps(&self) -> &[Jet] {
        &self.comps
    }

    pub(crate) fn comps_mut(&mut self) -> &mut [Jet] {
        &mut self.comps
    }

    /// Flat offset of an index tuple.
    #[inline]
    pub fn offset(&self, idx: &[usize]) -> usize {
        debug_assert_eq!(idx.len(), self.rank);
        idx.iter().fold(0, |acc, &i| acc * self.dim + i)
    }

    /// Stride of slot `s` in the flat array.
    #[inline]
    pub fn stride(&self, slot: usize) -> usize {
        self.dim.pow((self.rank - 1 - slot) as u32)
    }

    #[inline]
    pub fn get(&self, idx: &[usize]) -> &Jet {
        &self.comps[self.offset(idx)]
    }

    #[inline]
    pub fn value(&self, idx: &[usize]) -> f64 {
        self.get(idx).value()
    }

    pub fn set(&mut self, idx: &[usize], j: Jet) -> Result<()> {
        if j.order() != self.order || j.base_point().to_bits() != self.base_point.to_bits() {
            return Err(Error::MismatchedJets {
                left: (self.base_point, self.order),
                right: (j.base_point(), j.order()),
            });
        }
        let o = self.offset(idx);
        self.comps[o] = j;
        Ok(())
    }

    /// The single component of a rank-0 tensor.
    pub fn as_scalar(&self) -> Option<Jet> {
        (self.rank == 0).then(|| self.comps[0])
    }

    /// Sum over equal values of two slots; rank drops by two and the
    /// remaining slots keep their relative order.
    pub fn contract(&self, slot_a: usize, slot_b: usize) -> Result<Tensor> {
        for s in [slot_a, slot_b] {
            if s >= self.rank {
                return Err(Error::SlotOutOfRange { slot: s, rank: self.rank });
            }
        }
        if slot_a == slot_b {
            return Err(Error::ShapeMismatch("contraction needs two distinct slots".into()));
        }
        let (a, b) = (slot_a.min(slot_b), slot_a.max(slot_b));
        let mut out = Tensor::zeros(self.dim, self.rank - 2, self.base_point, self.order)?;
        let (sa, sb) = (self.stride(a), self.stride(b));
        let mut full = vec![0; self.rank];
        let mut pos = 0;
        for_each_index(self.dim, self.rank - 2, |rest| {
            let mut r = rest.iter();
            for (s, slot) in full.iter_mut().enumerate() {
                if s != a && s != b {
                    *slot = *r.next().unwrap();
                } else {
                    *slot = 0;
                }
            }
            let base = self.offset(&full);
            let mut acc = out.comps[pos];
            for x in 0..self.dim {
                acc.add_scaled(1.0, &self.comps[base + x * (sa + sb)]);
            }
            out.comps[pos] = acc;
            pos += 1;
        });
        Ok(out)
    }

    /// Relabels slots: slot `s` of `self` becomes slot `perm[s]` of the result.
    pub fn permute(&self, perm: &[usize]) -> Result<Tensor> {
        let mut seen = vec![false; self.rank];
        if perm.len() != self.rank {
            return Err(Error::InvalidPermutation(perm.to_vec()));
        }
        for &p in perm {
            if p >= self.rank || seen[p] {
                return Err(Error::InvalidPermutation(perm.to_vec()));
            }
            seen[p] = true;
        }
        let mut out = Tensor::zeros(self.dim, self.rank, self.base_point, self.order)?;
        let mut target = vec![0; self.rank];
        let mut pos = 0;
        for_each_index(self.dim, self.rank, |idx| {
            for (s, &i) in idx.iter().enumerate() {
                target[perm[s]] = i;
            }
            let o = out.offset(&target);
            out.comps[o] = self.comps[pos];
            pos += 1;
        });
        Ok(out)
    }

    /// Sum of squared components; the frame is orthonormal so no metric
    /// factors appear.
    pub fn frobenius_sq(&self) -> Jet {
        let mut acc = Jet::zero(self.base_point, self.order).unwrap();
        for c in &self.comps {
            if !c.is_zero() {
                acc.add_product(c, c);
            }
        }
        acc
    }

    /// Full pairing `Σ T_I U_I`.
    pub fn inner(&self, other: &Tensor) -> Result<Jet> {
        self.same_shape(other)?;
        let mut acc = Jet::zero(self.base_point, self.order)?;
        for (a, b) in self.comps.iter().zip(&other.comps) {
            acc.add_product(a, b);
        }
        Ok(acc)
    }

    /// `a·T + b·U` componentwise.
    pub fn linear_combine(a: &Jet, t: &Tensor, b: &Jet, u: &Tensor) -> Result<Tensor> {
        t.same_shape(u)?;
        for j in [a, b] {
            if j.order() != t.order || j.base_point().to_bits() != t.base_point.to_bits() {
                return Err(Error::MismatchedJets {
                    left: (t.base_point, t.order),
                    right: (j.base_point(), j.order()),
                });
            }
        }
        let mut out = t.clone();
        for (o, (x, y)) in out.comps.iter_mut().zip(t.comps.iter().zip(&u.comps)) {
            let mut acc = Jet::zero(t.base_point, t.order)?;
            acc.add_product(a, x);
            acc.add_product(b, y);
            *o = acc;
        }
        Ok(out)
    }

    pub fn scaled(&self, s: f64) -> Tensor {
        let mut out = self.clone();
        for c in out.comps.iter_mut() {
            *c = c.scale(s);
        }
        out
    }

    pub fn sub(&self, other: &Tensor) -> Result<Tensor> {
        self.same_shape(other)?;
        let mut out = self.clone();
        for (o, b) in out.comps.iter_mut().zip(&other.comps) {
            o.add_scaled(-1.0, b);
        }
        Ok(out)
    }

    pub fn truncate(&self, order: usize) -> Result<Tensor> {
        if order > self.order {
            return Err(Error::OrderExhausted);
        }
        if order == self.order {
            return Ok(self.clone());
        }
        Ok(Tensor {
            dim: self.dim,
            rank: self.rank,
            base_point: self.base_point,
            order,
            comps: self
                .comps
                .iter()
                .map(|c| c.truncate(order))
                .collect::<Result<_>>()?,
        })
    }

    /// Largest absolute component value (jet coefficient 0).
    pub fn max_abs_value(&self) -> f64 {
        self.comps.iter().fold(0.0, |m, c| m.max(c.value().abs()))
    }

    /// Largest absolute difference of component values.
    pub fn max_abs_value_diff(&self, other: &Tensor) -> Result<f64> {
        self.same_shape(other)?;
        Ok(self
            .comps
            .iter()
            .zip(&other.comps)
            .fold(0.0, |m, (a, b)| m.max((a.value() - b.value()).abs())))
    }

    pub fn same_shape(&self, other: &Tensor) -> Result<()> {
        if self.dim != other.dim || self.rank != other.rank {
            return Err(Error::ShapeMismatch(format!(
                "dim {} rank {} vs dim {} rank {}",
                self.dim, self.rank, other.dim, other.rank
            )));
        }
        if self.order != other.order || self.base_point.to_bits() != other.base_point.to_bits() {
            return Err(Error::MismatchedJets {
                left: (self.base_point, self.order),
                right: (other.base_point, other.order),
            });
        }
        Ok(())
    }
}
