//! Property checks shared by the property suite and the acceptance runner.
//! Each check returns `Err(description)` on violation.

#![allow(dead_code)]

use curvlab_core::{Jet, Tensor, MAX_ORDER};
use proptest::prelude::*;

pub type Check = Result<(), String>;

/// Largest coefficient-wise difference, each derivative order scaled by the
/// largest magnitude that coefficient reaches in either tensor or in the
/// reference tensor the compared quantity is computed from.
pub fn rel_diff_ref(a: &Tensor, b: &Tensor, reference: &Tensor) -> f64 {
    assert_eq!(a.order(), b.order());
    let mut scale = vec![1.0f64; a.order() + 1];
    for j in a.comps().iter().chain(b.comps()).chain(reference.comps()) {
        for (s, c) in scale.iter_mut().zip(j.coeffs()) {
            *s = s.max(c.abs());
        }
    }
    a.comps().iter().zip(b.comps()).fold(0.0f64, |m, (x, y)| {
        x.coeffs()
            .iter()
            .zip(y.coeffs())
            .zip(&scale)
            .fold(m, |m, ((p, q), s)| m.max((p - q).abs() / s))
    })
}

pub fn rel_diff(a: &Tensor, b: &Tensor) -> f64 {
    rel_diff_ref(a, b, a)
}

pub fn jet(t0: f64, coeffs: &[f64]) -> Jet {
    Jet::from_derivatives(t0, coeffs).unwrap()
}

fn int_jet(t0: i32, coeffs: &[i32]) -> Jet {
    jet(t0 as f64, &coeffs.iter().map(|&c| c as f64).collect::<Vec<_>>())
}

/// Largest coefficient difference relative to `max(1, largest coefficient)`.
pub fn rel_gap(a: &Jet, b: &Jet) -> f64 {
    let scale = a.max_abs().max(b.max_abs()).max(1.0);
    a.coeffs().iter().zip(b.coeffs()).fold(0.0f64, |m, (x, y)| m.max((x - y).abs())) / scale
}

/// [`rel_gap`] on Taylor coefficients `c_j / j!`, so every derivative order
/// is measured on the scale it naturally carries.
pub fn rel_gap_taylor(a: &Jet, b: &Jet) -> f64 {
    let taylor = |j: &Jet| -> Vec<f64> {
        let mut fact = 1.0;
        j.coeffs()
            .iter()
            .enumerate()
            .map(|(i, c)| {
                fact *= i.max(1) as f64;
                c / fact
            })
            .collect()
    };
    let (x, y) = (taylor(a), taylor(b));
    let scale = x.iter().chain(&y).fold(1.0f64, |m, v| m.max(v.abs()));
    x.iter().zip(&y).fold(0.0f64, |m, (p, q)| m.max((p - q).abs())) / scale
}

fn falling(i: usize, j: usize) -> f64 {
    ((i - j + 1)..=i).map(|k| k as f64).product()
}

/// A polynomial built by Horner's rule from the coordinate jet carries its
/// analytic derivatives exactly.
pub fn polynomial_exact(poly: &[i32], t0: i32, order: usize) -> Check {
    let x = Jet::coordinate(t0 as f64, order).unwrap();
    let c = |v: i32| Jet::constant(v as f64, t0 as f64, order).unwrap();
    let mut acc = c(*poly.last().unwrap());
    for &p in poly.iter().rev().skip(1) {
        acc = acc * x + c(p);
    }
    for j in 0..=order {
        let expect: f64 = (j..poly.len())
            .map(|i| poly[i] as f64 * falling(i, j) * (t0 as f64).powi((i - j) as i32))
            .sum();
        if acc.derivative(j) != expect {
            return Err(format!("p = {poly:?} at t = {t0}: d^{j} = {} vs {expect}", acc.derivative(j)));
        }
    }
    Ok(())
}

/// `(ab)' = a'b + ab'` on the common lower order; exact on integer data.
pub fn leibniz_under_shift(a: &[i32], b: &[i32], t0: i32) -> Check {
    let (a, b) = (int_jet(t0, a), int_jet(t0, b));
    let k = a.order() - 1;
    let lhs = (a * b).shift().unwrap();
    let rhs = a.shift().unwrap() * b.truncate(k).unwrap() + a.truncate(k).unwrap() * b.shift().unwrap();
    if lhs.coeffs() != rhs.coeffs() {
        return Err(format!("{lhs:?} vs {rhs:?}"));
    }
    Ok(())
}

pub fn pow_half_is_sqrt(a: &Jet) -> Check {
    let (p, s) = (a.powf(0.5).unwrap(), a.sqrt().unwrap());
    let gap = rel_gap(&p, &s);
    if gap > 1e-12 {
        return Err(format!("{a:?}: relative gap {gap:e}"));
    }
    Ok(())
}

/// Rounding bound for a product of jets with these magnitudes.
fn product_scale(js: &[&Jet]) -> f64 {
    let k = js[0].order() as i32;
    js.iter().map(|j| j.max_abs()).product::<f64>().max(1.0) * 2f64.powi(k * (js.len() as i32 - 1))
}

pub fn mul_commutes(a: &Jet, b: &Jet) -> Check {
    let gap = (*a * *b - *b * *a).max_abs() / product_scale(&[a, b]);
    if gap > 1e-12 {
        return Err(format!("relative gap {gap:e}"));
    }
    Ok(())
}

pub fn mul_associates(a: &Jet, b: &Jet, c: &Jet) -> Check {
    let gap = ((*a * *b) * *c - *a * (*b * *c)).max_abs() / product_scale(&[a, b, c]);
    if gap > 1e-12 {
        return Err(format!("relative gap {gap:e}"));
    }
    Ok(())
}

pub fn div_undoes_mul(a: &Jet, b: &Jet) -> Check {
    let q = (*a * *b).checked_div(b).map_err(|e| e.to_string())?;
    let gap = rel_gap_taylor(&q, a);
    if gap > 1e-12 {
        return Err(format!("{a:?} / {b:?}: relative gap {gap:e}"));
    }
    Ok(())
}

/// Integer-valued tensor, so reorderings of sums are exact.
pub fn int_tensor(dim: usize, rank: usize, t0: f64, order: usize, vals: &[i32]) -> Tensor {
    let n = order + 1;
    let mut it = vals.chunks(n);
    Tensor::from_fn(dim, rank, t0, order, |_| {
        let c: Vec<f64> = it.next().unwrap().iter().map(|&v| v as f64).collect();
        jet(t0, &c)
    })
    .unwrap()
}

pub fn contract_is_symmetric(t: &Tensor, a: usize, b: usize) -> Check {
    let (x, y) = (t.contract(a, b).unwrap(), t.contract(b, a).unwrap());
    if x.comps().iter().zip(y.comps()).any(|(p, q)| p.coeffs() != q.coeffs()) {
        return Err(format!("contract({a},{b}) differs from contract({b},{a})"));
    }
    Ok(())
}

pub fn norm_is_permutation_invariant(t: &Tensor, perm: &[usize]) -> Check {
    let (n, m) = (t.frobenius_sq(), t.permute(perm).unwrap().frobenius_sq());
    if n.coeffs() != m.coeffs() {
        return Err(format!("{n:?} vs {m:?} under {perm:?}"));
    }
    if n.value() < 0.0 {
        return Err(format!("negative norm {}", n.value()));
    }
    Ok(())
}

pub mod strategies {
    use super::*;

    pub fn order() -> impl Strategy<Value = usize> {
        1usize..=MAX_ORDER
    }

    /// Polynomial of degree at most `MAX_ORDER` with small integer
    /// coefficients, a jet order and an integer base point.
    pub fn polynomial() -> impl Strategy<Value = (Vec<i32>, i32, usize)> {
        (prop::collection::vec(-6i32..=6, 1..=MAX_ORDER + 1), -3i32..=3, order())
    }

    pub fn int_pair() -> impl Strategy<Value = (Vec<i32>, Vec<i32>, i32)> {
        order().prop_flat_map(|k| {
            (
                prop::collection::vec(-8i32..=8, k + 1),
                prop::collection::vec(-8i32..=8, k + 1),
                -3i32..=3,
            )
        })
    }

    fn coeffs(k: usize, value: std::ops::Range<f64>) -> impl Strategy<Value = Vec<f64>> {
        (value, prop::collection::vec(-3.0f64..3.0, k)).prop_map(|(v, mut rest)| {
            rest.insert(0, v);
            rest
        })
    }

    /// Jets with positive value, for roots and real powers.
    pub fn positive_jet() -> impl Strategy<Value = Jet> {
        (order(), 0.2f64..4.0)
            .prop_flat_map(|(k, t0)| coeffs(k, 0.5..8.0).prop_map(move |c| jet(t0, &c)))
    }

    pub fn jets<const N: usize>() -> impl Strategy<Value = [Jet; N]> {
        (order(), 0.2f64..4.0).prop_flat_map(|(k, t0)| {
            prop::collection::vec(coeffs(k, -8.0..8.0), N)
                .prop_map(move |cs| std::array::from_fn(|i| jet(t0, &cs[i])))
        })
    }

    /// A numerator and a well-conditioned divisor: every Taylor
    /// coefficient `b_j / j!` is bounded by `|b_0|`.
    pub fn quotient_pair() -> impl Strategy<Value = (Jet, Jet)> {
        (order(), 0.2f64..4.0, 1.0f64..8.0, prop::bool::ANY).prop_flat_map(|(k, t0, b0, neg)| {
            (coeffs(k, -8.0..8.0), prop::collection::vec(-1.0f64..1.0, k)).prop_map(move |(a, u)| {
                let b0 = if neg { -b0 } else { b0 };
                let mut b = vec![b0];
                let mut fact = 1.0;
                for (j, uj) in u.iter().enumerate() {
                    fact *= (j + 1) as f64;
                    b.push(uj * b0.abs() * fact);
                }
                (jet(t0, &a), jet(t0, &b))
            })
        })
    }

    /// Integer tensor with `dim` in {2, 4}, `rank` in 2..=4 and two distinct slots.
    pub fn int_tensor_with_slots() -> impl Strategy<Value = (Tensor, usize, usize)> {
        (prop_oneof![Just(2usize), Just(4)], 2usize..=4, 0usize..=2).prop_flat_map(|(dim, rank, order)| {
            let len = dim.pow(rank as u32) * (order + 1);
            (prop::collection::vec(-5i32..=5, len), 0..rank, 0..rank).prop_filter_map(
                "distinct slots",
                move |(v, a, b)| (a != b).then(|| (int_tensor(dim, rank, 1.0, order, &v), a, b)),
            )
        })
    }

    pub fn int_tensor_with_perm() -> impl Strategy<Value = (Tensor, Vec<usize>)> {
        (prop_oneof![Just(2usize), Just(4)], 1usize..=4, 0usize..=2).prop_flat_map(|(dim, rank, order)| {
            let len = dim.pow(rank as u32) * (order + 1);
            (
                prop::collection::vec(-5i32..=5, len),
                Just((0..rank).collect::<Vec<_>>()).prop_shuffle(),
            )
                .prop_map(move |(v, perm)| (int_tensor(dim, rank, 1.0, order, &v), perm))
        })
    }
}
