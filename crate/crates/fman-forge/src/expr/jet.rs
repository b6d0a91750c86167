//! Order-2 forward-mode jets.
//!
//! A jet carries a value, a gradient over `slots` independent derivative
//! directions, and a packed symmetric Hessian. Real charts use one slot per
//! coordinate. Complex charts use 2n slots: slot `i` is the holomorphic
//! Wirtinger direction of coordinate `i`, slot `n + i` the antiholomorphic
//! one, so `conj` is the slot swap `i <-> n + i` composed with conjugation
//! of every stored scalar.

use num_complex::Complex64;
use std::ops::{Add, Div, Mul, Neg, Sub};

/// Scalar ground field of a chart: `f64` or `Complex64`.
pub trait Scalar:
    Copy
    + PartialEq
    + std::fmt::Debug
    + Send
    + Sync
    + 'static
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    const IS_COMPLEX: bool;

    fn zero() -> Self;
    fn one() -> Self;
    fn from_f64(x: f64) -> Self;
    fn from_re_im(re: f64, im: f64) -> Self;
    fn re(self) -> f64;
    fn im(self) -> f64;
    /// Modulus.
    fn abs(self) -> f64;
    fn conj(self) -> Self;
    fn sin(self) -> Self;
    fn cos(self) -> Self;
    fn exp(self) -> Self;
    fn ln(self) -> Self;
    fn sqrt(self) -> Self;
    fn powi(self, k: i32) -> Self;
    fn powf(self, p: f64) -> Self;
    fn is_finite(self) -> bool;
}

impl Scalar for f64 {
    const IS_COMPLEX: bool = false;

    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn from_f64(x: f64) -> Self {
        x
    }
    fn from_re_im(re: f64, _im: f64) -> Self {
        re
    }
    fn re(self) -> f64 {
        self
    }
    fn im(self) -> f64 {
        0.0
    }
    fn abs(self) -> f64 {
        f64::abs(self)
    }
    fn conj(self) -> Self {
        self
    }
    fn sin(self) -> Self {
        f64::sin(self)
    }
    fn cos(self) -> Self {
        f64::cos(self)
    }
    fn exp(self) -> Self {
        f64::exp(self)
    }
    fn ln(self) -> Self {
        f64::ln(self)
    }
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    fn powi(self, k: i32) -> Self {
        f64::powi(self, k)
    }
    fn powf(self, p: f64) -> Self {
        f64::powf(self, p)
    }
    fn is_finite(self) -> bool {
        f64::is_finite(self)
    }
}

impl Scalar for Complex64 {
    const IS_COMPLEX: bool = true;

    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn one() -> Self {
        Complex64::new(1.0, 0.0)
    }
    fn from_f64(x: f64) -> Self {
        Complex64::new(x, 0.0)
    }
    fn from_re_im(re: f64, im: f64) -> Self {
        Complex64::new(re, im)
    }
    fn re(self) -> f64 {
        self.re
    }
    fn im(self) -> f64 {
        self.im
    }
    fn abs(self) -> f64 {
        self.norm()
    }
    fn conj(self) -> Self {
        Complex64::conj(&self)
    }
    fn sin(self) -> Self {
        Complex64::sin(self)
    }
    fn cos(self) -> Self {
        Complex64::cos(self)
    }
    fn exp(self) -> Self {
        Complex64::exp(self)
    }
    fn ln(self) -> Self {
        Complex64::ln(self)
    }
    fn sqrt(self) -> Self {
        Complex64::sqrt(self)
    }
    fn powi(self, k: i32) -> Self {
        Complex64::powi(&self, k)
    }
    fn powf(self, p: f64) -> Self {
        Complex64::powf(self, p)
    }
    fn is_finite(self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }
}

/// Packed index into the upper triangle of a `slots x slots` symmetric
/// matrix; `(a, b)` and `(b, a)` map to the same entry.
#[inline]
pub fn sym_index(slots: usize, a: usize, b: usize) -> usize {
    let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
    lo * (2 * slots - lo - 1) / 2 + hi
}

#[inline]
pub fn sym_len(slots: usize) -> usize {
    slots * (slots + 1) / 2
}

#[derive(Clone, Debug)]
pub struct Jet<S: Scalar> {
    order: usize,
    slots: usize,
    value: S,
    grad: Vec<S>,
    hess: Vec<S>,
}

impl<S: Scalar> Jet<S> {
    pub fn constant(value: S, slots: usize, order: usize) -> Self {
        debug_assert!(order <= 2);
        Jet {
            order,
            slots,
            value,
            grad: if order >= 1 { vec![S::zero(); slots] } else { Vec::new() },
            hess: if order >= 2 { vec![S::zero(); sym_len(slots)] } else { Vec::new() },
        }
    }

    /// Jet of the coordinate projection seeded at `slot`.
    pub fn coordinate(value: S, slot: usize, slots: usize, order: usize) -> Self {
        let mut j = Jet::constant(value, slots, order);
        if order >= 1 {
            j.grad[slot] = S::one();
        }
        j
    }

    /// Assemble a jet from externally computed derivative tables. Tables
    /// beyond `order` are ignored; `hess` is read in packed (a <= b) order.
    pub fn from_parts(
        value: S,
        slots: usize,
        order: usize,
        grad: impl Fn(usize) -> S,
        hess: impl Fn(usize, usize) -> S,
    ) -> Self {
        let mut j = Jet::constant(value, slots, order);
        if order >= 1 {
            for s in 0..slots {
                j.grad[s] = grad(s);
            }
        }
        if order >= 2 {
            for a in 0..slots {
                for b in a..slots {
                    j.hess[sym_index(slots, a, b)] = hess(a, b);
                }
            }
        }
        j
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn slots(&self) -> usize {
        self.slots
    }

    pub fn value(&self) -> S {
        self.value
    }

    /// First derivative along `slot`. Requires order >= 1.
    pub fn partial(&self, slot: usize) -> S {
        debug_assert!(self.order >= 1);
        self.grad[slot]
    }

    /// Second derivative along the (unordered) slot pair. Requires order 2.
    pub fn second(&self, a: usize, b: usize) -> S {
        debug_assert!(self.order >= 2);
        self.hess[sym_index(self.slots, a, b)]
    }

    pub fn is_finite(&self) -> bool {
        self.value.is_finite()
            && self.grad.iter().all(|g| g.is_finite())
            && self.hess.iter().all(|h| h.is_finite())
    }

    fn zip_order(&self, rhs: &Jet<S>) -> usize {
        debug_assert_eq!(self.slots, rhs.slots, "jet slot mismatch");
        self.order.min(rhs.order)
    }

    pub fn add(&self, rhs: &Jet<S>) -> Jet<S> {
        let order = self.zip_order(rhs);
        let mut out = Jet::constant(self.value + rhs.value, self.slots, order);
        for s in 0..out.grad.len() {
            out.grad[s] = self.grad[s] + rhs.grad[s];
        }
        for s in 0..out.hess.len() {
            out.hess[s] = self.hess[s] + rhs.hess[s];
        }
        out
    }

    pub fn sub(&self, rhs: &Jet<S>) -> Jet<S> {
        let order = self.zip_order(rhs);
        let mut out = Jet::constant(self.value - rhs.value, self.slots, order);
        for s in 0..out.grad.len() {
            out.grad[s] = self.grad[s] - rhs.grad[s];
        }
        for s in 0..out.hess.len() {
            out.hess[s] = self.hess[s] - rhs.hess[s];
        }
        out
    }

    pub fn neg(&self) -> Jet<S> {
        let mut out = self.clone();
        out.value = -out.value;
        for g in &mut out.grad {
            *g = -*g;
        }
        for h in &mut out.hess {
            *h = -*h;
        }
        out
    }

    pub fn scale(&self, c: S) -> Jet<S> {
        let mut out = self.clone();
        out.value = out.value * c;
        for g in &mut out.grad {
            *g = *g * c;
        }
        for h in &mut out.hess {
            *h = *h * c;
        }
        out
    }

    pub fn mul(&self, rhs: &Jet<S>) -> Jet<S> {
        let order = self.zip_order(rhs);
        let mut out = Jet::constant(self.value * rhs.value, self.slots, order);
        if order >= 1 {
            for s in 0..self.slots {
                out.grad[s] = self.grad[s] * rhs.value + self.value * rhs.grad[s];
            }
        }
        if order >= 2 {
            for a in 0..self.slots {
                for b in a..self.slots {
                    let idx = sym_index(self.slots, a, b);
                    out.hess[idx] = self.hess[idx] * rhs.value
                        + self.grad[a] * rhs.grad[b]
                        + self.grad[b] * rhs.grad[a]
                        + self.value * rhs.hess[idx];
                }
            }
        }
        out
    }

    /// Quotient; the caller is responsible for guarding a zero denominator.
    pub fn div(&self, rhs: &Jet<S>) -> Jet<S> {
        let order = self.zip_order(rhs);
        let q = self.value / rhs.value;
        let mut out = Jet::constant(q, self.slots, order);
        if order >= 1 {
            for s in 0..self.slots {
                out.grad[s] = (self.grad[s] - q * rhs.grad[s]) / rhs.value;
            }
        }
        if order >= 2 {
            for a in 0..self.slots {
                for b in a..self.slots {
                    let idx = sym_index(self.slots, a, b);
                    out.hess[idx] = (self.hess[idx]
                        - out.grad[a] * rhs.grad[b]
                        - out.grad[b] * rhs.grad[a]
                        - q * rhs.hess[idx])
                        / rhs.value;
                }
            }
        }
        out
    }

    /// Composition with a scalar function given `(f(v), f'(v), f''(v))`.
    pub fn chain(&self, fv: S, f1: S, f2: S) -> Jet<S> {
        let mut out = Jet::constant(fv, self.slots, self.order);
        if self.order >= 1 {
            for s in 0..self.slots {
                out.grad[s] = f1 * self.grad[s];
            }
        }
        if self.order >= 2 {
            for a in 0..self.slots {
                for b in a..self.slots {
                    let idx = sym_index(self.slots, a, b);
                    out.hess[idx] = f2 * self.grad[a] * self.grad[b] + f1 * self.hess[idx];
                }
            }
        }
        out
    }

    pub fn sin(&self) -> Jet<S> {
        self.chain(self.value.sin(), self.value.cos(), -self.value.sin())
    }

    pub fn cos(&self) -> Jet<S> {
        self.chain(self.value.cos(), -self.value.sin(), -self.value.cos())
    }

    pub fn exp(&self) -> Jet<S> {
        let e = self.value.exp();
        self.chain(e, e, e)
    }

    /// Natural log; caller guards the domain.
    pub fn ln(&self) -> Jet<S> {
        let inv = S::one() / self.value;
        self.chain(self.value.ln(), inv, -(inv * inv))
    }

    /// Principal square root; caller guards the domain.
    pub fn sqrt(&self) -> Jet<S> {
        let r = self.value.sqrt();
        let f1 = S::from_f64(0.5) / r;
        let f2 = S::from_f64(-0.25) / (r * self.value);
        self.chain(r, f1, f2)
    }

    /// Integer power; caller guards `value != 0` for negative exponents.
    pub fn powi(&self, k: i32) -> Jet<S> {
        match k {
            0 => Jet::constant(S::one(), self.slots, self.order),
            1 => self.clone(),
            _ => {
                let v = self.value;
                let kf = S::from_f64(k as f64);
                let k1f = S::from_f64((k - 1) as f64);
                self.chain(v.powi(k), kf * v.powi(k - 1), kf * k1f * v.powi(k - 2))
            }
        }
    }

    /// Real power through the principal branch; caller guards the domain.
    pub fn powf(&self, p: f64) -> Jet<S> {
        let v = self.value;
        let pf = S::from_f64(p);
        let p1f = S::from_f64(p - 1.0);
        self.chain(v.powf(p), pf * v.powf(p - 1.0), pf * p1f * v.powf(p - 2.0))
    }

    /// Wirtinger conjugation: swap holomorphic/antiholomorphic slots and
    /// conjugate every stored scalar. `n` is the coordinate count, so
    /// `slots == 2 * n`.
    pub fn conj_swap(&self, n: usize) -> Jet<S> {
        debug_assert_eq!(self.slots, 2 * n, "conj needs Wirtinger slot layout");
        let swap = |s: usize| if s < n { s + n } else { s - n };
        let mut out = Jet::constant(self.value.conj(), self.slots, self.order);
        if self.order >= 1 {
            for s in 0..self.slots {
                out.grad[s] = self.grad[swap(s)].conj();
            }
        }
        if self.order >= 2 {
            for a in 0..self.slots {
                for b in a..self.slots {
                    out.hess[sym_index(self.slots, a, b)] =
                        self.hess[sym_index(self.slots, swap(a), swap(b))].conj();
                }
            }
        }
        out
    }

    /// Jet of the partial derivative along `slot`, one order lower.
    pub fn partial_jet(&self, slot: usize) -> Jet<S> {
        assert!(self.order >= 1, "partial_jet needs order >= 1");
        let mut out = Jet::constant(self.grad[slot], self.slots, self.order - 1);
        if self.order >= 2 {
            for s in 0..self.slots {
                out.grad[s] = self.hess[sym_index(self.slots, slot, s)];
            }
        }
        out
    }

    /// Pull the jet back to a sub-chart: keep only the slots listed in
    /// `map`, in the given order.
    pub fn restrict(&self, map: &[usize]) -> Jet<S> {
        let slots = map.len();
        let mut out = Jet::constant(self.value, slots, self.order);
        if self.order >= 1 {
            for (t, &s) in map.iter().enumerate() {
                out.grad[t] = self.grad[s];
            }
        }
        if self.order >= 2 {
            for a in 0..slots {
                for b in a..slots {
                    out.hess[sym_index(slots, a, b)] =
                        self.hess[sym_index(self.slots, map[a], map[b])];
                }
            }
        }
        out
    }

    /// Push the jet into a larger chart: slot `t` of `self` becomes slot
    /// `map[t]`; all other derivatives vanish.
    pub fn embed(&self, map: &[usize], slots: usize) -> Jet<S> {
        debug_assert_eq!(map.len(), self.slots);
        let mut out = Jet::constant(self.value, slots, self.order);
        if self.order >= 1 {
            for (t, &s) in map.iter().enumerate() {
                out.grad[s] = self.grad[t];
            }
        }
        if self.order >= 2 {
            for a in 0..self.slots {
                for b in a..self.slots {
                    out.hess[sym_index(slots, map[a], map[b])] =
                        self.hess[sym_index(self.slots, a, b)];
                }
            }
        }
        out
    }
}
