//! Truncated Taylor series ("jets") for forward-mode differentiation to
//! arbitrary fixed order.
//!
//! A `Jet<T, N>` stores the normalized Taylor coefficients
//! `c[k] = f^{(k)}(x₀) / k!` for `k < N`. Arithmetic propagates the
//! coefficients exactly (up to rounding), so evaluating a closed-form
//! expression on [`Jet::variable`] yields all derivatives through order
//! `N - 1` in one pass.

use std::ops::{Add, Div, Mul, Neg, Sub};

use crate::scalar::Real;

/// Number of coefficients carried by radial profiles (derivatives 0..=6).
pub const PROFILE_ORDER: usize = 7;

/// Jet carrying derivatives through order six.
pub type Jet7<T> = Jet<T, PROFILE_ORDER>;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Jet<T, const N: usize> {
    pub c: [T; N],
}

impl<T: Real, const N: usize> Jet<T, N> {
    pub fn constant(x: T) -> Self {
        let mut c = [T::zero(); N];
        c[0] = x;
        Self { c }
    }

    /// The independent variable expanded at `x`.
    pub fn variable(x: T) -> Self {
        let mut c = [T::zero(); N];
        c[0] = x;
        if N > 1 {
            c[1] = T::one();
        }
        Self { c }
    }

    pub fn from_coeffs(c: [T; N]) -> Self {
        Self { c }
    }

    /// Build a jet from plain derivatives `f, f', f'', …` (missing orders are zero).
    pub fn from_derivatives(d: &[T]) -> Self {
        let mut c = [T::zero(); N];
        let mut fact = T::one();
        for (k, slot) in c.iter_mut().enumerate() {
            if k > 0 {
                fact = fact * T::from_usize_lossy(k);
            }
            if k < d.len() {
                *slot = d[k] / fact;
            }
        }
        Self { c }
    }

    #[inline]
    pub fn value(&self) -> T {
        self.c[0]
    }

    /// `k`-th derivative at the expansion point.
    pub fn derivative(&self, k: usize) -> T {
        if k >= N {
            return T::zero();
        }
        let fact = (1..=k).fold(T::one(), |a, j| a * T::from_usize_lossy(j));
        self.c[k] * fact
    }

    pub fn derivatives(&self) -> [T; N] {
        let mut out = [T::zero(); N];
        for (k, o) in out.iter_mut().enumerate() {
            *o = self.derivative(k);
        }
        out
    }

    /// Jet of the derivative; the highest coefficient becomes zero.
    pub fn differentiate(&self) -> Self {
        let mut c = [T::zero(); N];
        for k in 0..N.saturating_sub(1) {
            c[k] = self.c[k + 1] * T::from_usize_lossy(k + 1);
        }
        Self { c }
    }

    /// Antiderivative with prescribed constant term; drops the top coefficient.
    pub fn integrate(&self, c0: T) -> Self {
        let mut c = [T::zero(); N];
        c[0] = c0;
        for k in 1..N {
            c[k] = self.c[k - 1] / T::from_usize_lossy(k);
        }
        Self { c }
    }

    /// Evaluate the truncated series at offset `h` from the expansion point.
    pub fn eval_offset(&self, h: T) -> T {
        self.c.iter().rev().fold(T::zero(), |acc, &ck| acc * h + ck)
    }

    /// Re-expand at offset `h`, i.e. the Taylor jet of the truncated
    /// polynomial around `x₀ + h`.
    pub fn shift(&self, h: T) -> Self {
        let mut c = self.c;
        // repeated synthetic division
        for i in 0..N {
            for k in (i..N - 1).rev() {
                c[k] = c[k] + h * c[k + 1];
            }
        }
        Self { c }
    }

    pub fn scale(&self, a: T) -> Self {
        let mut c = self.c;
        for x in c.iter_mut() {
            *x = *x * a;
        }
        Self { c }
    }

    pub fn recip(&self) -> Self {
        Self::constant(T::one()) / *self
    }

    pub fn exp(&self) -> Self {
        let mut e = [T::zero(); N];
        e[0] = self.c[0].exp();
        for k in 1..N {
            let mut acc = T::zero();
            for i in 1..=k {
                acc = acc + T::from_usize_lossy(i) * self.c[i] * e[k - i];
            }
            e[k] = acc / T::from_usize_lossy(k);
        }
        Self { c: e }
    }

    pub fn ln(&self) -> Self {
        let a0 = self.c[0];
        let mut l = [T::zero(); N];
        l[0] = a0.ln();
        for k in 1..N {
            let mut acc = T::zero();
            for i in 1..k {
                acc = acc + T::from_usize_lossy(i) * l[i] * self.c[k - i];
            }
            l[k] = (self.c[k] - acc / T::from_usize_lossy(k)) / a0;
        }
        Self { c: l }
    }

    /// Real power `self^p`; requires a positive constant term unless `p`
    /// is a nonnegative integer handled by [`Jet::powi`].
    pub fn powf(&self, p: T) -> Self {
        let a0 = self.c[0];
        let mut y = [T::zero(); N];
        y[0] = a0.powf(p);
        for k in 1..N {
            let kk = T::from_usize_lossy(k);
            let mut acc = T::zero();
            for i in 1..=k {
                let ii = T::from_usize_lossy(i);
                acc = acc + (p * ii - kk + ii) * self.c[i] * y[k - i];
            }
            y[k] = acc / (kk * a0);
        }
        Self { c: y }
    }

    pub fn powi(&self, n: i32) -> Self {
        if n < 0 {
            return self.powi(-n).recip();
        }
        let mut out = Self::constant(T::one());
        let mut base = *self;
        let mut e = n as u32;
        while e > 0 {
            if e & 1 == 1 {
                out = out * base;
            }
            base = base * base;
            e >>= 1;
        }
        out
    }

    pub fn sqrt(&self) -> Self {
        self.powf(T::lit(0.5))
    }

    /// Apply a scalar function given its Taylor coefficients at `self.value()`.
    pub fn compose(&self, outer: &Jet<T, N>) -> Self {
        let mut h = *self;
        h.c[0] = T::zero();
        // Horner in the nilpotent increment.
        let mut acc = Self::constant(outer.c[N - 1]);
        for k in (0..N - 1).rev() {
            acc = acc * h + Self::constant(outer.c[k]);
        }
        acc
    }
}

impl<T: Real, const N: usize> Add for Jet<T, N> {
    type Output = Self;
    fn add(mut self, rhs: Self) -> Self {
        for k in 0..N {
            self.c[k] = self.c[k] + rhs.c[k];
        }
        self
    }
}

impl<T: Real, const N: usize> Sub for Jet<T, N> {
    type Output = Self;
    fn sub(mut self, rhs: Self) -> Self {
        for k in 0..N {
            self.c[k] = self.c[k] - rhs.c[k];
        }
        self
    }
}

impl<T: Real, const N: usize> Neg for Jet<T, N> {
    type Output = Self;
    fn neg(mut self) -> Self {
        for k in 0..N {
            self.c[k] = -self.c[k];
        }
        self
    }
}

impl<T: Real, const N: usize> Mul for Jet<T, N> {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        let mut c = [T::zero(); N];
        for k in 0..N {
            let mut acc = T::zero();
            for i in 0..=k {
                acc = acc + self.c[i] * rhs.c[k - i];
            }
            c[k] = acc;
        }
        Self { c }
    }
}

impl<T: Real, const N: usize> Div for Jet<T, N> {
    type Output = Self;
    fn div(self, rhs: Self) -> Self {
        let b0 = rhs.c[0];
        let mut q = [T::zero(); N];
        for k in 0..N {
            let mut acc = self.c[k];
            for i in 1..=k {
                acc = acc - rhs.c[i] * q[k - i];
            }
            q[k] = acc / b0;
        }
        Self { c: q }
    }
}

impl<T: Real, const N: usize> Add<T> for Jet<T, N> {
    type Output = Self;
    fn add(mut self, rhs: T) -> Self {
        self.c[0] = self.c[0] + rhs;
        self
    }
}

impl<T: Real, const N: usize> Sub<T> for Jet<T, N> {
    type Output = Self;
    fn sub(mut self, rhs: T) -> Self {
        self.c[0] = self.c[0] - rhs;
        self
    }
}

impl<T: Real, const N: usize> Mul<T> for Jet<T, N> {
    type Output = Self;
    fn mul(self, rhs: T) -> Self {
        self.scale(rhs)
    }
}

impl<T: Real, const N: usize> Div<T> for Jet<T, N> {
    type Output = Self;
    fn div(self, rhs: T) -> Self {
        self.scale(T::one() / rhs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    type J = Jet<f64, 7>;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * (1.0 + b.abs())
    }

    #[test]
    fn exp_ln_roundtrip() {
        let x = J::variable(0.7);
        let y = x.exp().ln();
        for k in 0..7 {
            assert!(close(y.c[k], x.c[k], 1e-14), "k={k}");
        }
    }

    #[test]
    fn power_derivatives_match_closed_form() {
        let x = J::variable(2.0);
        let y = x.powf(-1.5);
        // d^k/dx^k x^p = p(p-1)...(p-k+1) x^{p-k}
        let mut coef = 1.0;
        for k in 0..7 {
            let expect = coef * 2f64.powf(-1.5 - k as f64);
            assert!(close(y.derivative(k), expect, 1e-12), "k={k}");
            coef *= -1.5 - k as f64;
        }
    }

    #[test]
    fn sqrt_and_division() {
        let x = J::variable(3.0);
        let y = (x * x + 1.0).sqrt() / x;
        // f = sqrt(1 + 1/x^2); f' = -1/(x^3 sqrt(1+1/x^2))
        let f1 = -1.0 / (27.0 * (1.0f64 + 1.0 / 9.0).sqrt());
        assert!(close(y.derivative(1), f1, 1e-13));
    }

    #[test]
    fn shift_reexpands_polynomial() {
        let p = J::from_coeffs([1.0, 2.0, 3.0, 0.0, 0.0, 0.0, 0.0]);
        let q = p.shift(0.5);
        assert!(close(q.value(), p.eval_offset(0.5), 1e-15));
        assert!(close(q.derivative(1), 2.0 + 6.0 * 0.5, 1e-15));
    }

    #[test]
    fn integrate_inverts_differentiate_below_top_order() {
        let x = J::variable(1.3);
        let f = x.exp() * x;
        let g = f.differentiate().integrate(f.value());
        for k in 0..6 {
            assert!(close(g.c[k], f.c[k], 1e-14));
        }
    }
}
