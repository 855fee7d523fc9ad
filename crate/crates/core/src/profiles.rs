//! Concrete radial profiles: first-integral ("momentum") profiles of
//! U(m)-invariant scalar-flat metrics, tabulated profiles, and smooth bumps.
//!
//! Every U(m)-invariant scalar-flat Kähler metric `i∂∂̄F(|z|²)` satisfies
//!
//! ```text
//! τ = sF'(s),     s dτ/ds = φ(τ) = τ + Aτ^{2−m} + Bτ^{1−m},
//! ```
//!
//! so `dt = τ^{m−1} dτ / P(τ)` with `P(τ) = τ^m + Aτ + B`. Partial fractions
//! over the roots `ρ_j` of `P` integrate this in closed form:
//!
//! ```text
//! s(τ) = 2 exp(Re Σ c_j log(τ − ρ_j)),   c_j = ρ_j^{m−1} / P'(ρ_j)
//! F(τ) = τ + Re Σ d_j log(τ − ρ_j),       d_j = ρ_j^m / P'(ρ_j)
//! ```
//!
//! normalized so that `F ~ s/2` at infinity.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::jet::{Jet7, PROFILE_ORDER};
use crate::radial_kahler::RadialProfile;
use crate::scalar::Real;

/// Roots of the monic polynomial `Σ a_k x^k + x^n` (`a` holds `a_0..a_{n−1}`),
/// by Aberth–Ehrlich iteration followed by Newton polishing.
pub fn monic_roots<T: Real>(a: &[T]) -> Vec<Complex<T>> {
    let n = a.len();
    if n == 0 {
        return Vec::new();
    }
    let eval = |z: Complex<T>| -> (Complex<T>, Complex<T>) {
        let mut p = Complex::new(T::one(), T::zero());
        let mut dp = Complex::new(T::zero(), T::zero());
        for &ak in a.iter().rev() {
            dp = dp * z + p;
            p = p * z + Complex::new(ak, T::zero());
        }
        (p, dp)
    };
    let bound = T::one() + a.iter().fold(T::zero(), |acc, &x| acc.max(x.abs()));
    let two_pi = T::PI() + T::PI();
    let mut z: Vec<Complex<T>> = (0..n)
        .map(|k| {
            let ang = two_pi * T::from_usize_lossy(k) / T::from_usize_lossy(n) + T::lit(0.4);
            Complex::from_polar(bound, ang)
        })
        .collect();
    let tol = T::epsilon() * T::lit(16.0);
    for _ in 0..500 {
        let mut worst = T::zero();
        for k in 0..n {
            let (p, dp) = eval(z[k]);
            if p.norm() == T::zero() {
                continue;
            }
            let ratio = p / dp;
            let mut sum = Complex::new(T::zero(), T::zero());
            for j in 0..n {
                if j != k {
                    sum = sum + (z[k] - z[j]).inv();
                }
            }
            let w = ratio / (Complex::new(T::one(), T::zero()) - ratio * sum);
            z[k] = z[k] - w;
            worst = worst.max(w.norm() / (T::one() + z[k].norm()));
        }
        if worst < tol {
            break;
        }
    }
    for zk in z.iter_mut() {
        for _ in 0..3 {
            let (p, dp) = eval(*zk);
            if dp.norm() > T::zero() {
                *zk = *zk - p / dp;
            }
        }
    }
    z
}

/// `log(1 + z)` accurate for small complex `z`.
fn clog1p<T: Real>(z: Complex<T>) -> Complex<T> {
    let w = Complex::new(T::one(), T::zero()) + z;
    if w == Complex::new(T::one(), T::zero()) {
        return z;
    }
    w.ln() * z / (w - Complex::new(T::one(), T::zero()))
}

const SERIES_TERMS: usize = 64;

/// Closed-form U(m)-invariant scalar-flat profile with first integral
/// `φ(τ) = τ + Aτ^{2−m} + Bτ^{1−m}`, defined for `τ` above the largest
/// real root `τ₀` of `P`.
#[derive(Clone, Debug)]
pub struct MomentumProfile<T: Real> {
    m: usize,
    a: T,
    b: T,
    tau0: T,
    c0: T,
    /// Roots other than `τ₀` with their `c_j`, `d_j`.
    others: Vec<(Complex<T>, Complex<T>, Complex<T>)>,
    d0: T,
    d_sum: T,
    /// Complete homogeneous symmetric sums `h_k` of the roots, `k ≥ 1`.
    h: Vec<T>,
    /// Coefficients (low to high) of `P(τ)/(τ − τ₀)`.
    deflated: Vec<T>,
    root_radius: T,
    domain: (T, T),
}

impl<T: Real> MomentumProfile<T> {
    pub fn new(m: usize, a: T, b: T) -> Result<Self> {
        if m < 2 {
            return Err(Error::DomainError(format!("complex dimension {m} < 2")));
        }
        // P(τ) = τ^m + Aτ + B
        let mut coeffs = vec![T::zero(); m];
        coeffs[0] = b;
        coeffs[1] = coeffs[1] + a;
        let roots = monic_roots(&coeffs);
        let mf = T::from_usize_lossy(m);
        let dp = |z: Complex<T>| z.powu(m as u32 - 1) * mf + Complex::new(a, T::zero());
        let imag_tol = T::lit(1e-6) * (T::one() + a.abs() + b.abs());
        let (i0, tau0) = roots
            .iter()
            .enumerate()
            .filter(|(_, z)| z.im.abs() <= imag_tol)
            .map(|(i, z)| (i, z.re))
            .fold(None, |best: Option<(usize, T)>, (i, r)| match best {
                Some((_, br)) if br >= r => best,
                _ => Some((i, r)),
            })
            .ok_or_else(|| Error::OdeSolveFailure("first integral has no real root".into()))?;
        if tau0 <= T::zero() {
            return Err(Error::OdeSolveFailure(format!("largest real root {tau0} is not positive")));
        }
        let dp0 = dp(Complex::new(tau0, T::zero())).re;
        if dp0 <= T::zero() {
            return Err(Error::OdeSolveFailure("largest real root is not simple".into()));
        }
        let c0 = tau0.powi(m as i32 - 1) / dp0;
        let d0 = tau0.powi(m as i32) / dp0;
        let mut others = Vec::with_capacity(m - 1);
        for (i, &z) in roots.iter().enumerate() {
            if i == i0 {
                continue;
            }
            let d = dp(z);
            let cj = z.powu(m as u32 - 1) / d;
            let dj = z.powu(m as u32) / d;
            others.push((z, cj, dj));
        }
        let mut pc = vec![T::zero(); m + 1];
        pc[0] = b;
        pc[1] = pc[1] + a;
        pc[m] = T::one();
        let mut deflated = vec![T::zero(); m];
        deflated[m - 1] = T::one();
        for k in (1..m).rev() {
            deflated[k - 1] = pc[k] + tau0 * deflated[k];
        }
        let root_radius = roots.iter().fold(T::zero(), |acc, z| acc.max(z.norm()));
        // 1/Π(1 − ρ_j x) = 1/(1 + A x^{m−1} + B x^m)  ⇒  h_k = −A h_{k−m+1} − B h_{k−m}
        let mut h = vec![T::one()];
        for k in 1..=SERIES_TERMS + 1 {
            let mut v = T::zero();
            if k + 1 >= m {
                v = v - a * h[k + 1 - m];
            }
            if k >= m {
                v = v - b * h[k - m];
            }
            h.push(v);
        }
        h.remove(0);
        // Σ d_j = h_1 exactly (the root-wise sum only approximates it)
        let d_sum = h[0];
        let lo = T::min_positive_value().sqrt();
        Ok(Self {
            m,
            a,
            b,
            tau0,
            c0,
            others,
            d0,
            d_sum,
            h,
            deflated,
            root_radius,
            domain: (lo, T::infinity()),
        })
    }

    pub fn dimension(&self) -> usize {
        self.m
    }

    /// Momentum value on the exceptional set (`s → 0`).
    pub fn tau0(&self) -> T {
        self.tau0
    }

    pub fn coefficients(&self) -> (T, T) {
        (self.a, self.b)
    }

    /// Exponent of `s ~ (τ − τ₀)^{c₀}` at the inner end (1 for a smooth divisor).
    pub fn inner_exponent(&self) -> T {
        self.c0
    }

    /// Leading coefficient `e` of `F − s/2` at infinity: `e·s^{2−m}` for
    /// `m > 2`, `(e/2)·log s` for `m = 2`.
    pub fn tail_coefficient(&self) -> T {
        if self.m == 2 {
            -(self.a + self.a)
        } else {
            let m = self.m as i32;
            let beta = self.a * T::lit(2.0).powi(m - 2) / T::from_i32(1 - m).unwrap();
            beta / T::from_i32(2 - m).unwrap()
        }
    }

    pub fn phi(&self, tau: T) -> T {
        let m = self.m as i32;
        tau + self.a * tau.powi(2 - m) + self.b * tau.powi(1 - m)
    }

    /// `log(1 − ρ/τ)` summed against `w_j` over the non-`τ₀` roots.
    fn log1p_sum(&self, tau: T, pick: impl Fn(&(Complex<T>, Complex<T>, Complex<T>)) -> Complex<T>) -> T {
        self.others.iter().fold(T::zero(), |acc, r| {
            acc + (pick(r) * clog1p(-r.0 / Complex::new(tau, T::zero()))).re
        })
    }

    /// `log(1 − τ₀/τ)` given `u = log(τ − τ₀)`.
    fn log_ratio0(&self, tau: T, u: T) -> T {
        if tau > self.tau0 + self.tau0 {
            (-self.tau0 / tau).ln_1p()
        } else {
            u - tau.ln()
        }
    }

    fn use_series(&self, tau: T) -> bool {
        tau > T::lit(4.0) * self.root_radius
    }

    /// `−Σ_k h_{k+shift} / (k τ^k)`; the `1/τ` terms of the root-wise
    /// logarithms cancel, so the sum is formed from the exact `h_k`.
    fn series(&self, tau: T, shift: usize) -> T {
        let x = tau.recip();
        let ratio = self.root_radius * x;
        let terms = if ratio > T::zero() {
            let k = (T::epsilon().ln() / ratio.ln()).ceil().to_usize().unwrap_or(SERIES_TERMS);
            (k + 2).min(SERIES_TERMS)
        } else {
            1
        };
        let mut xk = T::one();
        let mut acc = T::zero();
        for k in 1..=terms {
            xk = xk * x;
            acc = acc - self.h[k - 1 + shift] * xk / T::from_usize_lossy(k);
        }
        acc
    }

    /// `E(τ) = log(s / 2τ)`.
    fn log_s_over_2tau(&self, tau: T, u: T) -> T {
        if self.use_series(tau) {
            return self.series(tau, 0);
        }
        self.c0 * self.log_ratio0(tau, u) + self.log1p_sum(tau, |r| r.1)
    }

    /// Solve `s(τ) = s`; returns `(τ, δ = τ − s/2)`.
    pub fn solve_tau(&self, s: T) -> Result<(T, T)> {
        self.solve(s).map(|(tau, delta, _)| (tau, delta))
    }

    /// `(τ, δ, u = log(τ − τ₀))` at `s`.
    fn solve(&self, s: T) -> Result<(T, T, T)> {
        if !(s > T::zero()) || !s.is_finite() {
            return Err(Error::OutsideDomain {
                s: s.to_f64_lossy(),
                lo: self.domain.0.to_f64_lossy(),
                hi: f64::INFINITY,
            });
        }
        let target = (s / T::lit(2.0)).ln();
        let m = self.m as i32;
        // g(u) = log(s(τ)/2) − log(s/2), increasing in u = log(τ − τ₀)
        let g = |u: T| -> (T, T) {
            let tau = self.tau0 + u.exp();
            let val = tau.ln() + self.log_s_over_2tau(tau, u) - target;
            let p = tau.powi(m) + self.a * tau + self.b;
            (val, u.exp() * tau.powi(m - 1) / p)
        };
        let half = s / T::lit(2.0);
        let mut u = if half > self.tau0 + self.tau0 {
            (half - self.tau0).ln()
        } else {
            let base = self.tau0.ln() + self.others.iter().fold(T::zero(), |acc, r| {
                acc + (r.1 * clog1p(-r.0 / Complex::new(self.tau0, T::zero()))).re
            });
            (target - base) / self.c0 + self.tau0.ln()
        };
        let (mut lo, mut hi) = (u - T::one(), u + T::one());
        let mut steps = 0;
        while g(lo).0 > T::zero() {
            lo = lo - (u - lo) - T::one();
            steps += 1;
            if steps > 200 {
                return Err(Error::OdeSolveFailure(format!("cannot bracket momentum at s = {s}")));
            }
        }
        while g(hi).0 < T::zero() {
            hi = hi + (hi - u) + T::one();
            steps += 1;
            if steps > 400 {
                return Err(Error::OdeSolveFailure(format!("cannot bracket momentum at s = {s}")));
            }
        }
        u = u.max(lo).min(hi);
        let tol = T::epsilon() * T::lit(4.0);
        for _ in 0..200 {
            let (val, der) = g(u);
            if val == T::zero() {
                break;
            }
            if val < T::zero() {
                lo = u;
            } else {
                hi = u;
            }
            let mut next = u - val / der;
            if !(next > lo && next < hi) || !next.is_finite() {
                next = (lo + hi) / T::lit(2.0);
            }
            let done = (next - u).abs() <= tol * (T::one() + u.abs());
            u = next;
            if done || hi - lo <= tol * (T::one() + u.abs()) {
                break;
            }
        }
        let tau = self.tau0 + u.exp();
        let e = self.log_s_over_2tau(tau, u);
        // δ = τ − s/2 = −τ·expm1(E) (cancellation-free at large s)
        let delta = if half > self.tau0 + self.tau0 { -tau * e.exp_m1() } else { tau - half };
        Ok((tau, delta, u))
    }

    /// `F(s) − s/2` at the solved momentum.
    fn deviation_value(&self, tau: T, delta: T, u: T) -> T {
        let log_tau = tau.ln();
        if self.use_series(tau) {
            return delta + self.d_sum * log_tau + self.series(tau, 1);
        }
        // Σ d_j log(τ − ρ_j) = (Σ d_j) log τ + Σ d_j log(1 − ρ_j/τ)
        delta
            + self.d_sum * log_tau
            + self.d0 * self.log_ratio0(tau, u)
            + self.log1p_sum(tau, |r| r.2)
    }

    fn deviation_jet(&self, s: T) -> Result<Jet7<T>> {
        let (tau, delta, u) = self.solve(s)?;
        let m = self.m as i32;
        let sj = Jet7::variable(s);
        let half = T::lit(0.5);
        // Picard on s δ' = δ + Aτ^{2−m} + Bτ^{1−m}, τ = s/2 + δ; gains one order per sweep.
        let mut dj = Jet7::constant(delta);
        if self.use_series(tau) {
            for _ in 0..PROFILE_ORDER {
                let mut tj = sj.scale(half) + dj;
                tj.c[0] = tau;
                let rhs = dj + tj.powi(2 - m).scale(self.a) + tj.powi(1 - m).scale(self.b);
                dj = (rhs / sj).integrate(delta);
            }
        } else {
            // near τ₀ use φ(τ) = τ^{1−m}(τ − τ₀)Q(τ) to avoid cancellation
            let gap = tau - self.tau0;
            let mut tj = Jet7::constant(tau);
            for _ in 0..PROFILE_ORDER {
                let mut wj = tj - self.tau0;
                wj.c[0] = gap;
                let q = self
                    .deflated
                    .iter()
                    .rev()
                    .fold(Jet7::constant(T::zero()), |acc, &qk| acc * tj + qk);
                tj = (tj.powi(1 - m) * wj * q / sj).integrate(tau);
            }
            dj = tj - sj.scale(half);
            dj.c[0] = delta;
        }
        let psi0 = self.deviation_value(tau, delta, u);
        Ok((dj / sj).integrate(psi0))
    }
}

impl<T: Real> MomentumProfile<T> {
    fn phi_jet(&self, tj: Jet7<T>, gap: T) -> Jet7<T> {
        let m = self.m as i32;
        if self.use_series(tj.value()) {
            tj + tj.powi(2 - m).scale(self.a) + tj.powi(1 - m).scale(self.b)
        } else {
            let mut wj = tj - self.tau0;
            wj.c[0] = gap;
            let q = self
                .deflated
                .iter()
                .rev()
                .fold(Jet7::constant(T::zero()), |acc, &qk| acc * tj + qk);
            tj.powi(1 - m) * wj * q
        }
    }

    fn log_jet_impl(&self, s: T) -> Result<Jet7<T>> {
        let (tau, delta, u) = self.solve(s)?;
        let gap = u.exp();
        // dτ/dt = φ(τ), Picard in t gains one order per sweep
        let mut tj = Jet7::constant(tau);
        for _ in 0..PROFILE_ORDER {
            tj = self.phi_jet(tj, gap).integrate(tau);
        }
        let f0 = s / T::lit(2.0) + self.deviation_value(tau, delta, u);
        Ok(tj.integrate(f0))
    }
}

impl<T: Real> RadialProfile<T> for MomentumProfile<T> {
    fn log_jet(&self, s: T) -> Result<Jet7<T>> {
        self.log_jet_impl(s)
    }

    fn jet(&self, s: T) -> Result<Jet7<T>> {
        Ok(Jet7::variable(s).scale(T::lit(0.5)) + self.deviation_jet(s)?)
    }

    fn deviation(&self, s: T) -> Result<Jet7<T>> {
        self.deviation_jet(s)
    }

    fn domain(&self) -> (T, T) {
        self.domain
    }
}

/// Profile known through stored jets of `F − s/2` at grid nodes; evaluated
/// by Taylor re-expansion from the nearest node.
#[derive(Clone, Debug)]
pub struct TabulatedProfile<T: Real> {
    grid: Vec<T>,
    jets: Vec<Jet7<T>>,
}

impl<T: Real> TabulatedProfile<T> {
    /// `grid` strictly increasing and positive; `jets[i]` is the jet of `F − s/2` at `grid[i]`.
    pub fn new(grid: Vec<T>, jets: Vec<Jet7<T>>) -> Result<Self> {
        if grid.len() < 2 || grid.len() != jets.len() {
            return Err(Error::InsufficientSamples(format!(
                "{} nodes, {} jets",
                grid.len(),
                jets.len()
            )));
        }
        if grid.windows(2).any(|w| !(w[1] > w[0])) || !(grid[0] > T::zero()) {
            return Err(Error::InvalidInput("grid must be positive and strictly increasing".into()));
        }
        Ok(Self { grid, jets })
    }

    /// Sample another profile on `grid`.
    pub fn sample(profile: &dyn RadialProfile<T>, grid: Vec<T>) -> Result<Self> {
        let jets = grid.iter().map(|&s| profile.deviation(s)).collect::<Result<Vec<_>>>()?;
        Self::new(grid, jets)
    }

    pub fn grid(&self) -> &[T] {
        &self.grid
    }

    pub fn jets(&self) -> &[Jet7<T>] {
        &self.jets
    }

    fn nearest(&self, s: T) -> usize {
        let i = self.grid.partition_point(|&g| g < s);
        if i == 0 {
            0
        } else if i == self.grid.len() || (s - self.grid[i - 1]) <= (self.grid[i] - s) {
            i - 1
        } else {
            i
        }
    }
}

impl<T: Real> RadialProfile<T> for TabulatedProfile<T> {
    fn jet(&self, s: T) -> Result<Jet7<T>> {
        Ok(Jet7::variable(s).scale(T::lit(0.5)) + self.deviation(s)?)
    }

    fn deviation(&self, s: T) -> Result<Jet7<T>> {
        let (lo, hi) = self.domain();
        if !(s >= lo && s <= hi) {
            return Err(Error::OutsideDomain {
                s: s.to_f64_lossy(),
                lo: lo.to_f64_lossy(),
                hi: hi.to_f64_lossy(),
            });
        }
        let i = self.nearest(s);
        Ok(self.jets[i].shift(s - self.grid[i]))
    }

    fn domain(&self) -> (T, T) {
        (self.grid[0], self.grid[self.grid.len() - 1])
    }
}

/// Smooth compactly supported bump `a·exp(1 − 1/(1 − x²))`, `x = (s − c)/w`,
/// as an additive potential correction.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Bump<T> {
    pub amplitude: T,
    pub center: T,
    pub half_width: T,
}

impl<T: Real> Bump<T> {
    pub fn zero() -> Self {
        Self { amplitude: T::zero(), center: T::one(), half_width: T::one() }
    }

    pub fn scaled(self, k: T) -> Self {
        Self { amplitude: self.amplitude * k, ..self }
    }

    pub fn support(&self) -> (T, T) {
        (self.center - self.half_width, self.center + self.half_width)
    }
}

impl<T: Real> RadialProfile<T> for Bump<T> {
    fn jet(&self, s: T) -> Result<Jet7<T>> {
        let x = (s - self.center) / self.half_width;
        if self.amplitude == T::zero() || x.abs() >= T::one() {
            return Ok(Jet7::constant(T::zero()));
        }
        let xj = (Jet7::variable(s) - self.center) / self.half_width;
        let q = Jet7::constant(T::one()) - xj * xj;
        Ok((q.recip().scale(-T::one()) + T::one()).exp().scale(self.amplitude))
    }

    fn deviation(&self, s: T) -> Result<Jet7<T>> {
        self.jet(s)
    }

    fn domain(&self) -> (T, T) {
        (T::zero(), T::infinity())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::radial_kahler::{scalar_curvature_from_jet, ClosedForm};

    #[test]
    fn roots_of_known_polynomials() {
        // x^3 − 6x^2 + 11x − 6 = (x−1)(x−2)(x−3)
        let mut r: Vec<f64> = monic_roots(&[-6.0, 11.0, -6.0]).iter().map(|z| z.re).collect();
        r.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (a, b) in r.iter().zip([1.0, 2.0, 3.0]) {
            assert!((a - b).abs() < 1e-12);
        }
        // x^4 + 1
        for z in monic_roots(&[1.0f64, 0.0, 0.0, 0.0]) {
            assert!((z.powu(4) + 1.0).norm() < 1e-12);
        }
    }

    #[test]
    fn eguchi_hanson_first_integral_matches_closed_form() {
        let a = 1.3f64;
        let p = MomentumProfile::new(2, 0.0, -a.powi(4) / 4.0).unwrap();
        let eh = ClosedForm::new("eh", (0.0, f64::INFINITY), move |x| {
            let g = (x * x + a.powi(4)).sqrt();
            (g + (x / (g + a * a)).ln().scale(a * a)).scale(0.5)
        });
        for &s in &[1e-3, 0.2, 1.0, 7.0, 300.0] {
            let j1 = p.jet(s).unwrap();
            let j2 = eh.jet(s).unwrap();
            for k in 0..7 {
                let (x, y) = (j1.derivative(k), j2.derivative(k));
                assert!((x - y).abs() < 1e-9 * (1.0 + y.abs()), "s={s} k={k}: {x} vs {y}");
            }
        }
    }

    #[test]
    fn momentum_profiles_are_scalar_flat() {
        let t0 = 0.3f64;
        for m in 3..6 {
            let mi = m as i32;
            let p = MomentumProfile::new(m, (1 - mi) as f64 * t0.powi(mi - 1), (mi - 2) as f64 * t0.powi(mi))
                .unwrap();
            assert!((p.tau0() - t0).abs() < 1e-12);
            assert!((p.inner_exponent() - 1.0).abs() < 1e-12);
            for &s in &[1e-4, 0.05, 1.0, 40.0, 1e5] {
                let j = p.jet(s).unwrap();
                let sc = scalar_curvature_from_jet(&j, m, s).unwrap();
                let scale = 1.0 + 1.0 / s;
                assert!(sc.abs() < 1e-8 * scale, "m={m} s={s} S={sc}");
            }
        }
    }

    #[test]
    fn deviation_tail_is_cancellation_free() {
        let t0 = 0.25f64;
        let p = MomentumProfile::new(3, -2.0 * t0 * t0, t0.powi(3)).unwrap();
        let e = p.tail_coefficient();
        let s = 1e9;
        let d = p.deviation(s).unwrap().value();
        assert!((d * s / e - 1.0).abs() < 1e-8, "{d} vs {}", e / s);
    }

    #[test]
    fn tabulated_profile_reproduces_source() {
        let p = MomentumProfile::new(3, -2.0 * 0.09, 0.027f64).unwrap();
        let grid: Vec<f64> = (0..800).map(|i| 0.01 * 2f64.powf(i as f64 / 64.0)).collect();
        let tab = TabulatedProfile::sample(&p, grid).unwrap();
        let s = 1.2345;
        let a = tab.jet(s).unwrap();
        let b = p.jet(s).unwrap();
        for k in 0..5 {
            let tol = if k < 3 { 1e-9 } else { 1e-5 };
            assert!((a.derivative(k) - b.derivative(k)).abs() < tol * (1.0 + b.derivative(k).abs()), "k={k}");
        }
        assert!(tab.jet(1e-3).is_err());
    }

    #[test]
    fn bump_is_compactly_supported_and_smooth() {
        let b = Bump { amplitude: 2.0f64, center: 3.0, half_width: 1.0 };
        assert_eq!(b.jet(1.9).unwrap().value(), 0.0);
        assert_eq!(b.jet(4.0).unwrap().value(), 0.0);
        assert!((b.jet(3.0).unwrap().value() - 2.0).abs() < 1e-15);
        let near = b.jet(2.0 + 1e-3).unwrap();
        for k in 0..5 {
            assert!(near.derivative(k).abs() < 1e-100);
        }
    }
}
