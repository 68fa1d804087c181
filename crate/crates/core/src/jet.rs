//! Univariate jets: a scalar function of `t` known through its value and
//! first `K` derivatives at a base point.
//!
//! Coefficients are stored as derivative values (`coeffs[j] = f^{(j)}(t0)`),
//! and products follow the Leibniz rule truncated at the jet order. Two jets
//! can only be combined when they share base point and order; the binary
//! operators panic on a mismatch, the `checked_*` methods return an error.

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use crate::error::{Error, Result};

/// Largest supported jet order.
pub const MAX_ORDER: usize = 7;
const CAP: usize = MAX_ORDER + 1;

/// Default order for the structure function `h`: curvature consumes two
/// derivatives, each covariant derivative one more.
pub const DEFAULT_ORDER: usize = 5;

const BINOM: [[f64; CAP]; CAP] = binomials();

const fn binomials() -> [[f64; CAP]; CAP] {
    let mut table = [[0.0; CAP]; CAP];
    let mut n = 0;
    while n < CAP {
        table[n][0] = 1.0;
        let mut k = 1;
        while k <= n {
            table[n][k] = table[n - 1][k - 1] + if k < n { table[n - 1][k] } else { 0.0 };
            k += 1;
        }
        n += 1;
    }
    table
}

const FACT: [f64; CAP] = factorials();

const fn factorials() -> [f64; CAP] {
    let mut f = [1.0; CAP];
    let mut i = 1;
    while i < CAP {
        f[i] = f[i - 1] * i as f64;
        i += 1;
    }
    f
}

#[derive(Clone, Copy, PartialEq)]
pub struct Jet {
    base_point: f64,
    order: u8,
    coeffs: [f64; CAP],
}

impl Jet {
    fn raw(base_point: f64, order: usize) -> Self {
        debug_assert!(order <= MAX_ORDER);
        Jet {
            base_point,
            order: order as u8,
            coeffs: [0.0; CAP],
        }
    }

    fn check_order(order: usize) -> Result<()> {
        if order > MAX_ORDER {
            return Err(Error::OrderTooLarge {
                requested: order,
                max: MAX_ORDER,
            });
        }
        Ok(())
    }

    /// The constant function `c`.
    pub fn constant(c: f64, t0: f64, order: usize) -> Result<Self> {
        Self::check_order(order)?;
        let mut j = Self::raw(t0, order);
        j.coeffs[0] = c;
        Ok(j)
    }

    pub fn zero(t0: f64, order: usize) -> Result<Self> {
        Self::constant(0.0, t0, order)
    }

    /// The coordinate function `t` itself. Needs order at least one so the
    /// derivative is carried.
    pub fn coordinate(t0: f64, order: usize) -> Result<Self> {
        if order == 0 {
            return Err(Error::CoordinateNeedsDerivative);
        }
        Self::check_order(order)?;
        let mut j = Self::raw(t0, order);
        j.coeffs[0] = t0;
        j.coeffs[1] = 1.0;
        Ok(j)
    }

    /// Builds a jet from explicit derivative values; the order is
    /// `derivs.len() - 1`.
    pub fn from_derivatives(t0: f64, derivs: &[f64]) -> Result<Self> {
        if derivs.is_empty() {
            return Err(Error::EmptyJet);
        }
        Self::check_order(derivs.len() - 1)?;
        let mut j = Self::raw(t0, derivs.len() - 1);
        j.coeffs[..derivs.len()].copy_from_slice(derivs);
        Ok(j)
    }

    pub fn base_point(&self) -> f64 {
        self.base_point
    }

    pub fn order(&self) -> usize {
        self.order as usize
    }

    /// Value at the base point.
    pub fn value(&self) -> f64 {
        self.coeffs[0]
    }

    /// The `j`-th derivative at the base point.
    pub fn derivative(&self, j: usize) -> f64 {
        assert!(j <= self.order(), "derivative {j} beyond jet order {}", self.order);
        self.coeffs[j]
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs[..=self.order()]
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs().iter().all(|&c| c == 0.0)
    }

    /// Largest absolute coefficient.
    pub fn max_abs(&self) -> f64 {
        self.coeffs().iter().fold(0.0, |m, c| m.max(c.abs()))
    }

    fn compatible(&self, other: &Jet) -> Result<()> {
        if self.order != other.order || self.base_point.to_bits() != other.base_point.to_bits() {
            return Err(Error::MismatchedJets {
                left: (self.base_point, self.order()),
                right: (other.base_point, other.order()),
            });
        }
        Ok(())
    }

    pub fn checked_add(&self, other: &Jet) -> Result<Jet> {
        self.compatible(other)?;
        let mut out = *self;
        for (o, b) in out.coeffs.iter_mut().zip(other.coeffs.iter()) {
            *o += b;
        }
        Ok(out)
    }

    pub fn checked_sub(&self, other: &Jet) -> Result<Jet> {
        self.compatible(other)?;
        let mut out = *self;
        for (o, b) in out.coeffs.iter_mut().zip(other.coeffs.iter()) {
            *o -= b;
        }
        Ok(out)
    }

    pub fn checked_mul(&self, other: &Jet) -> Result<Jet> {
        self.compatible(other)?;
        let k = self.order();
        let mut out = Self::raw(self.base_point, k);
        for j in 0..=k {
            let mut acc = 0.0;
            for i in 0..=j {
                acc += BINOM[j][i] * self.coeffs[i] * other.coeffs[j - i];
            }
            out.coeffs[j] = acc;
        }
        Ok(out)
    }

    pub fn checked_div(&self, other: &Jet) -> Result<Jet> {
        self.compatible(other)?;
        let b0 = other.coeffs[0];
        if !(b0.abs() > f64::EPSILON) {
            return Err(Error::DivisionByZeroJet(b0));
        }
        // q * b = a, solved order by order in Taylor-normalised form
        let a = self.taylor();
        let b = other.taylor();
        let k = self.order();
        let mut q = [0.0; CAP];
        for j in 0..=k {
            let mut acc = a[j];
            for i in 0..j {
                acc -= q[i] * b[j - i];
            }
            q[j] = acc / b0;
        }
        Ok(Self::from_taylor(self.base_point, k, &q))
    }

    /// Real power `a^p` of a jet with positive value.
    pub fn powf(&self, p: f64) -> Result<Jet> {
        let a0 = self.coeffs[0];
        if !(a0 > 0.0) {
            return Err(Error::NonPositiveBase(a0));
        }
        // y = a^p satisfies a y' = p a' y
        let a = self.taylor();
        let k = self.order();
        let mut y = [0.0; CAP];
        y[0] = a0.powf(p);
        for n in 1..=k {
            let mut acc = 0.0;
            for j in 1..=n {
                acc += (p * j as f64 - (n - j) as f64) * a[j] * y[n - j];
            }
            y[n] = acc / (n as f64 * a0);
        }
        Ok(Self::from_taylor(self.base_point, k, &y))
    }

    pub fn sqrt(&self) -> Result<Jet> {
        let a0 = self.coeffs[0];
        if !(a0 > 0.0) {
            return Err(Error::NonPositiveBase(a0));
        }
        // y * y = a
        let a = self.taylor();
        let k = self.order();
        let mut y = [0.0; CAP];
        y[0] = a0.sqrt();
        for n in 1..=k {
            let mut acc = a[n];
            for j in 1..n {
                acc -= y[j] * y[n - j];
            }
            y[n] = acc / (2.0 * y[0]);
        }
        Ok(Self::from_taylor(self.base_point, k, &y))
    }

    /// Integer power by repeated multiplication; exact for polynomial inputs.
    pub fn powi(&self, n: u32) -> Jet {
        let mut out = Jet::raw(self.base_point, self.order());
        out.coeffs[0] = 1.0;
        for _ in 0..n {
            out = out * *self;
        }
        out
    }

    /// The derivative map `f -> f'`; order drops by one.
    pub fn shift(&self) -> Result<Jet> {
        if self.order == 0 {
            return Err(Error::OrderExhausted);
        }
        let k = self.order() - 1;
        let mut out = Self::raw(self.base_point, k);
        out.coeffs[..=k].copy_from_slice(&self.coeffs[1..=k + 1]);
        Ok(out)
    }

    /// Forget derivatives above `order`.
    pub fn truncate(&self, order: usize) -> Result<Jet> {
        if order > self.order() {
            return Err(Error::OrderExhausted);
        }
        let mut out = Self::raw(self.base_point, order);
        out.coeffs[..=order].copy_from_slice(&self.coeffs[..=order]);
        Ok(out)
    }

    pub fn scale(&self, s: f64) -> Jet {
        let mut out = *self;
        for c in out.coeffs.iter_mut() {
            *c *= s;
        }
        out
    }

    /// Fused `self += a * b`, all three jets of the same shape.
    #[inline]
    pub(crate) fn add_product(&mut self, a: &Jet, b: &Jet) {
        debug_assert!(self.order == a.order && a.order == b.order);
        let k = self.order();
        for j in 0..=k {
            let mut acc = 0.0;
            for i in 0..=j {
                acc += BINOM[j][i] * a.coeffs[i] * b.coeffs[j - i];
            }
            self.coeffs[j] += acc;
        }
    }

    #[inline]
    pub(crate) fn add_scaled(&mut self, s: f64, a: &Jet) {
        for (o, c) in self.coeffs.iter_mut().zip(a.coeffs.iter()) {
            *o += s * c;
        }
    }

    fn taylor(&self) -> [f64; CAP] {
        let mut t = [0.0; CAP];
        for j in 0..=self.order() {
            t[j] = self.coeffs[j] / FACT[j];
        }
        t
    }

    fn from_taylor(t0: f64, order: usize, taylor: &[f64; CAP]) -> Jet {
        let mut out = Self::raw(t0, order);
        for j in 0..=order {
            out.coeffs[j] = taylor[j] * FACT[j];
        }
        out
    }
}

impl fmt::Debug for Jet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Jet@{}{:?}", self.base_point, self.coeffs())
    }
}

macro_rules! binop {
    ($trait:ident, $method:ident, $checked:ident) => {
        impl $trait for Jet {
            type Output = Jet;
            fn $method(self, rhs: Jet) -> Jet {
                match self.$checked(&rhs) {
                    Ok(j) => j,
                    Err(e) => panic!("jet {}: {e}", stringify!($method)),
                }
            }
        }
        impl $trait<&Jet> for &Jet {
            type Output = Jet;
            fn $method(self, rhs: &Jet) -> Jet {
                match self.$checked(rhs) {
                    Ok(j) => j,
                    Err(e) => panic!("jet {}: {e}", stringify!($method)),
                }
            }
        }
    };
}

binop!(Add, add, checked_add);
binop!(Sub, sub, checked_sub);
binop!(Mul, mul, checked_mul);
binop!(Div, div, checked_div);

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

impl Mul<Jet> for f64 {
    type Output = Jet;
    fn mul(self, rhs: Jet) -> Jet {
        rhs.scale(self)
    }
}
