//! Radial Kähler calculus for `ω = i∂∂̄F(|z|²)` on `C^m`-like charts.
//!
//! With `s = |z|²` the complex Hessian of `F(s)` has the tangential
//! eigenvalue `F'(s)` (multiplicity `m − 1`) and the radial eigenvalue
//! `F'(s) + sF''(s)`. Writing `t = log s` and `p_k = ∂_t^k F`, the same
//! quantities are `p₁/s` and `p₂/s`, and the scalar curvature reduces to
//!
//! ```text
//! u = (m−1) log p₁ + log p₂ − m t          (log det g)
//! S = −[(m−1) u_t / p₁ + u_tt / p₂]
//! ```
//!
//! which is the trace `g^{jk̄} R_{jk̄}` with `R_{jk̄} = −∂_j∂_k̄ log det g`.
//! The Euclidean potential `s/2` has `g = δ/2` and `S = 0`.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jet::{Jet, Jet7};
use crate::scalar::Real;

/// Source of Taylor jets of a radial potential profile `F(s)`.
pub trait RadialProfile<T: Real>: Send + Sync + fmt::Debug {
    /// Jet of `F` at `s` (derivatives through order six).
    fn jet(&self, s: T) -> Result<Jet7<T>>;

    /// Closed interval of admissible `s`.
    fn domain(&self) -> (T, T);

    /// Jet of `F(s) − s/2`. Profiles that know their deviation from the
    /// flat potential override this to avoid cancellation at large `s`.
    fn deviation(&self, s: T) -> Result<Jet7<T>> {
        Ok(self.jet(s)? - Jet7::variable(s).scale(T::lit(0.5)))
    }

    /// Jet in `t = log s` of `G(t) = F(e^t)`, i.e. coefficients `p_k / k!`.
    /// The default converts the `s`-jet; profiles with a natural
    /// logarithmic representation override it to avoid cancellation at
    /// small `s`.
    fn log_jet(&self, s: T) -> Result<Jet7<T>> {
        Ok(Jet7::from_derivatives(&log_derivatives(&self.jet(s)?, s)))
    }
}

/// Kind of leading asymptotic term of `F(s) − s/2`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TailKind {
    /// `e · |x|^{4−2m} = e · s^{2−m}` (m > 2).
    Power,
    /// `e · log|x| = (e/2) · log s` (m = 2).
    Log,
}

/// Declared asymptotic tail of a potential.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TailDescriptor<T> {
    pub lead_coefficient: T,
    pub kind: TailKind,
    /// Decay order of the metric coefficients towards `δ/2`.
    pub remainder_order: T,
    /// Complex dimension the tail basis refers to.
    pub dimension: usize,
}

impl<T: Real> TailDescriptor<T> {
    /// Standard tail for complex dimension `m`.
    pub fn for_dimension(m: usize, coefficient: T) -> Self {
        if m == 2 {
            Self {
                lead_coefficient: coefficient,
                kind: TailKind::Log,
                remainder_order: T::lit(2.0),
                dimension: 2,
            }
        } else {
            Self {
                lead_coefficient: coefficient,
                kind: TailKind::Power,
                remainder_order: T::from_usize_lossy(2 * m - 2),
                dimension: m,
            }
        }
    }

    /// Jet of the unit tail basis function at `s`.
    pub fn basis_jet(kind: TailKind, m: usize, s: T) -> Jet7<T> {
        let x = Jet7::variable(s);
        match kind {
            TailKind::Log => x.ln().scale(T::lit(0.5)),
            TailKind::Power => x.powf(T::lit(2.0) - T::from_usize_lossy(m)),
        }
    }
}

/// A Kähler potential profile together with its declared tail.
#[derive(Clone)]
pub struct RadialPotential<T: Real> {
    profile: Arc<dyn RadialProfile<T>>,
    pub tail: Option<TailDescriptor<T>>,
}

impl<T: Real> fmt::Debug for RadialPotential<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RadialPotential")
            .field("profile", &self.profile)
            .field("tail", &self.tail)
            .finish()
    }
}

impl<T: Real> RadialPotential<T> {
    pub fn new(profile: Arc<dyn RadialProfile<T>>, tail: Option<TailDescriptor<T>>) -> Self {
        Self { profile, tail }
    }

    pub fn from_profile<P: RadialProfile<T> + 'static>(p: P) -> Self {
        Self { profile: Arc::new(p), tail: None }
    }

    pub fn with_tail(mut self, tail: TailDescriptor<T>) -> Self {
        self.tail = Some(tail);
        self
    }

    pub fn profile(&self) -> &Arc<dyn RadialProfile<T>> {
        &self.profile
    }

    pub fn domain(&self) -> (T, T) {
        self.profile.domain()
    }

    pub fn jet(&self, s: T) -> Result<Jet7<T>> {
        let (lo, hi) = self.profile.domain();
        if !(s >= lo && s <= hi) {
            return Err(Error::OutsideDomain {
                s: s.to_f64_lossy(),
                lo: lo.to_f64_lossy(),
                hi: hi.to_f64_lossy(),
            });
        }
        self.profile.jet(s)
    }

    pub fn value(&self, s: T) -> Result<T> {
        Ok(self.jet(s)?.value())
    }

    fn check_domain(&self, s: T) -> Result<()> {
        let (lo, hi) = self.profile.domain();
        if !(s >= lo && s <= hi) {
            return Err(Error::OutsideDomain {
                s: s.to_f64_lossy(),
                lo: lo.to_f64_lossy(),
                hi: hi.to_f64_lossy(),
            });
        }
        Ok(())
    }

    /// Jet of `F(s) − s/2` at `s`.
    pub fn deviation(&self, s: T) -> Result<Jet7<T>> {
        self.check_domain(s)?;
        self.profile.deviation(s)
    }

    /// Jet of `F(e^t)` at `t = log s`.
    pub fn log_jet(&self, s: T) -> Result<Jet7<T>> {
        self.check_domain(s)?;
        self.profile.log_jet(s)
    }

    /// `p_k = ∂_t^k F` for `k = 0..=6`.
    pub fn log_derivatives(&self, s: T) -> Result<[T; 7]> {
        Ok(self.log_jet(s)?.derivatives())
    }

    /// Rescaled potential `λ² F(s/λ²)` (the `z = λw` pull-back).
    pub fn rescaled(&self, lambda: T) -> Self {
        let tail = self.tail;
        Self {
            profile: Arc::new(Rescaled { inner: self.profile.clone(), lambda }),
            tail: tail.map(|t| rescale_tail(t, lambda)),
        }
    }
}

fn rescale_tail<T: Real>(t: TailDescriptor<T>, lambda: T) -> TailDescriptor<T> {
    // λ² e (s/λ²)^{2−m} = e λ^{2m−2} s^{2−m};  λ² (e/2) log(s/λ²) = (λ² e/2) log s + const
    let l2 = lambda * lambda;
    let factor = match t.kind {
        TailKind::Log => l2,
        TailKind::Power => lambda.powi(2 * t.dimension as i32 - 2),
    };
    TailDescriptor { lead_coefficient: t.lead_coefficient * factor, ..t }
}

#[derive(Debug)]
struct Rescaled<T: Real> {
    inner: Arc<dyn RadialProfile<T>>,
    lambda: T,
}

impl<T: Real> Rescaled<T> {
    fn pull(&self, inner: Jet7<T>) -> Jet7<T> {
        // d^k/ds^k [λ² F(s/λ²)] = λ^{2−2k} F^{(k)}
        let l2 = self.lambda * self.lambda;
        let mut c = inner.c;
        let mut f = l2;
        for ck in c.iter_mut() {
            *ck = *ck * f;
            f = f / l2;
        }
        Jet::from_coeffs(c)
    }
}

impl<T: Real> RadialProfile<T> for Rescaled<T> {
    fn jet(&self, s: T) -> Result<Jet7<T>> {
        let l2 = self.lambda * self.lambda;
        Ok(self.pull(self.inner.jet(s / l2)?))
    }

    fn deviation(&self, s: T) -> Result<Jet7<T>> {
        // λ²·(s/λ²)/2 = s/2, so the deviation rescales the same way
        let l2 = self.lambda * self.lambda;
        Ok(self.pull(self.inner.deviation(s / l2)?))
    }

    fn log_jet(&self, s: T) -> Result<Jet7<T>> {
        // λ² G(t − log λ²)
        let l2 = self.lambda * self.lambda;
        Ok(self.inner.log_jet(s / l2)?.scale(l2))
    }

    fn domain(&self) -> (T, T) {
        let (lo, hi) = self.inner.domain();
        let l2 = self.lambda * self.lambda;
        (lo * l2, hi * l2)
    }
}

type JetFn<T> = Arc<dyn Fn(Jet7<T>, Jet7<T>) -> Jet7<T> + Send + Sync>;

/// Closed-form profile evaluated by forward-mode differentiation.
#[derive(Clone)]
pub struct ClosedForm<T: Real> {
    name: String,
    domain: (T, T),
    f: JetFn<T>,
    /// When set, `f` is the deviation `F − s/2` rather than `F`.
    flat_plus: bool,
}

impl<T: Real> ClosedForm<T> {
    pub fn new(
        name: impl Into<String>,
        domain: (T, T),
        f: impl Fn(Jet7<T>) -> Jet7<T> + Send + Sync + 'static,
    ) -> Self {
        Self { name: name.into(), domain, f: Arc::new(move |x, _| f(x)), flat_plus: false }
    }

    /// Profile `s/2 + ψ(s)` given the closed form of `ψ`.
    pub fn flat_plus(
        name: impl Into<String>,
        domain: (T, T),
        psi: impl Fn(Jet7<T>) -> Jet7<T> + Send + Sync + 'static,
    ) -> Self {
        Self { name: name.into(), domain, f: Arc::new(move |x, _| psi(x)), flat_plus: true }
    }

    /// Like [`ClosedForm::flat_plus`], with `ψ` written in terms of both
    /// `s` and `log s`; the logarithm is then exact in log coordinates.
    pub fn flat_plus_log(
        name: impl Into<String>,
        domain: (T, T),
        psi: impl Fn(Jet7<T>, Jet7<T>) -> Jet7<T> + Send + Sync + 'static,
    ) -> Self {
        Self { name: name.into(), domain, f: Arc::new(psi), flat_plus: true }
    }
}

impl<T: Real> fmt::Debug for ClosedForm<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ClosedForm({})", self.name)
    }
}

impl<T: Real> RadialProfile<T> for ClosedForm<T> {
    fn jet(&self, s: T) -> Result<Jet7<T>> {
        let x = Jet7::variable(s);
        let lx = x.ln();
        if self.flat_plus {
            Ok(x.scale(T::lit(0.5)) + (self.f)(x, lx))
        } else {
            Ok((self.f)(x, lx))
        }
    }

    fn deviation(&self, s: T) -> Result<Jet7<T>> {
        let x = Jet7::variable(s);
        let lx = x.ln();
        if self.flat_plus {
            Ok((self.f)(x, lx))
        } else {
            Ok((self.f)(x, lx) - x.scale(T::lit(0.5)))
        }
    }

    fn log_jet(&self, s: T) -> Result<Jet7<T>> {
        // x = e^t expanded at t = log s
        let lx = Jet7::variable(s.ln());
        let mut x = lx.exp();
        let mut c = s;
        for (k, ck) in x.c.iter_mut().enumerate() {
            if k > 0 {
                c = c / T::from_usize_lossy(k);
            }
            *ck = c;
        }
        if self.flat_plus {
            Ok(x.scale(T::lit(0.5)) + (self.f)(x, lx))
        } else {
            Ok((self.f)(x, lx))
        }
    }

    fn domain(&self) -> (T, T) {
        self.domain
    }
}

/// Sum of a background profile and a correction profile on the
/// intersection of their domains.
#[derive(Debug, Clone)]
pub struct SumProfile<T: Real> {
    pub a: Arc<dyn RadialProfile<T>>,
    pub b: Arc<dyn RadialProfile<T>>,
}

impl<T: Real> RadialProfile<T> for SumProfile<T> {
    fn jet(&self, s: T) -> Result<Jet7<T>> {
        Ok(self.a.jet(s)? + self.b.jet(s)?)
    }

    fn deviation(&self, s: T) -> Result<Jet7<T>> {
        Ok(self.a.deviation(s)? + self.b.jet(s)?)
    }

    fn log_jet(&self, s: T) -> Result<Jet7<T>> {
        Ok(self.a.log_jet(s)? + self.b.log_jet(s)?)
    }

    fn domain(&self) -> (T, T) {
        let (a0, a1) = self.a.domain();
        let (b0, b1) = self.b.domain();
        (a0.max(b0), a1.min(b1))
    }
}

/// Euclidean-frame eigenvalues of the complex Hessian of `F(|z|²)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MetricEigenvalues<T> {
    pub tangential: T,
    pub radial: T,
}

/// Stirling numbers of the second kind `S(n, k)` for `n, k ≤ 6`.
const STIRLING2: [[i64; 7]; 7] = [
    [1, 0, 0, 0, 0, 0, 0],
    [0, 1, 0, 0, 0, 0, 0],
    [0, 1, 1, 0, 0, 0, 0],
    [0, 1, 3, 1, 0, 0, 0],
    [0, 1, 7, 6, 1, 0, 0],
    [0, 1, 15, 25, 10, 1, 0],
    [0, 1, 31, 90, 65, 15, 1],
];

/// Signed Stirling numbers of the first kind `s(n, k)` for `n, k ≤ 6`.
const STIRLING1: [[i64; 7]; 7] = [
    [1, 0, 0, 0, 0, 0, 0],
    [0, 1, 0, 0, 0, 0, 0],
    [0, -1, 1, 0, 0, 0, 0],
    [0, 2, -3, 1, 0, 0, 0],
    [0, -6, 11, -6, 1, 0, 0],
    [0, 24, -50, 35, -10, 1, 0],
    [0, -120, 274, -225, 85, -15, 1],
];

/// `∂_t^n F` for `t = log s`, from the `s`-jet of `F` (`n = 0..=6`).
pub fn log_derivatives<T: Real>(jet: &Jet7<T>, s: T) -> [T; 7] {
    let d = jet.derivatives();
    let mut out = [T::zero(); 7];
    out[0] = d[0];
    for (n, o) in out.iter_mut().enumerate().skip(1) {
        let mut acc = T::zero();
        let mut sk = T::one();
        for (k, &dk) in d.iter().enumerate().take(n + 1).skip(1) {
            sk = sk * s;
            acc = acc + T::from_i64(STIRLING2[n][k]).unwrap() * sk * dk;
        }
        *o = acc;
    }
    out
}

/// Inverse of [`log_derivatives`]: `s`-derivatives from `t`-derivatives.
pub fn s_derivatives_from_log<T: Real>(p: &[T; 7], s: T) -> [T; 7] {
    let mut out = [T::zero(); 7];
    out[0] = p[0];
    let mut sk = T::one();
    for (k, o) in out.iter_mut().enumerate().skip(1) {
        sk = sk * s;
        // s^k ∂_s^k = Σ_j s(k, j) ∂_t^j
        let mut acc = T::zero();
        for (j, &pj) in p.iter().enumerate().take(k + 1).skip(1) {
            acc = acc + T::from_i64(STIRLING1[k][j]).unwrap() * pj;
        }
        *o = acc / sk;
    }
    out
}

/// Scalar curvature as a function of the log-derivatives `p₁..p₄` of the
/// potential. Generic over jets so the same expression yields the
/// linearization when `p_k` carry first-order seeds.
pub fn scalar_curvature_from_log<T: Real, const N: usize>(
    m: usize,
    p1: Jet<T, N>,
    p2: Jet<T, N>,
    p3: Jet<T, N>,
    p4: Jet<T, N>,
) -> Jet<T, N> {
    let mm1 = T::from_usize_lossy(m - 1);
    let mf = T::from_usize_lossy(m);
    let r1 = p2 / p1;
    let r2 = p3 / p2;
    let u_t = r1.scale(mm1) + r2 - mf;
    let u_tt = (p3 / p1 - r1 * r1).scale(mm1) + p4 / p2 - r2 * r2;
    -((u_t / p1).scale(mm1) + u_tt / p2)
}

/// Curvature flux `Q = p₁^{m−1} u_t`, with `p₁^{m−1} p₂ S = −∂_t Q`.
/// Constant along scalar-flat metrics. Takes the deviations
/// `d_k = p_k − s/2` from the flat potential so that `u_t` carries no
/// cancellation where the metric is nearly Euclidean.
pub fn curvature_flux<T: Real, const N: usize>(
    m: usize,
    s: T,
    d1: Jet<T, N>,
    d2: Jet<T, N>,
    d3: Jet<T, N>,
) -> Jet<T, N> {
    let flat = Jet::constant(s * T::lit(0.5));
    let (p1, p2) = (flat + d1, flat + d2);
    let u_t = ((d2 - d1) / p1).scale(T::from_usize_lossy(m - 1)) + (d3 - d2) / p2;
    p1.powi(m as i32 - 1) * u_t
}

fn check_eigen<T: Real>(s: T, tangential: T, radial: T) -> Result<MetricEigenvalues<T>> {
    if !(tangential > T::zero() && radial > T::zero()) {
        return Err(Error::NonPositiveMetric {
            s: s.to_f64_lossy(),
            tangential: tangential.to_f64_lossy(),
            radial: radial.to_f64_lossy(),
        });
    }
    Ok(MetricEigenvalues { tangential, radial })
}

pub fn eigenvalues_from_jet<T: Real>(jet: &Jet7<T>, s: T) -> Result<MetricEigenvalues<T>> {
    let f1 = jet.derivative(1);
    let f2 = jet.derivative(2);
    check_eigen(s, f1, f1 + s * f2)
}

/// Eigenvalues `p₁/s`, `p₂/s` from log-derivatives.
pub fn eigenvalues_from_log<T: Real>(p: &[T; 7], s: T) -> Result<MetricEigenvalues<T>> {
    check_eigen(s, p[1] / s, p[2] / s)
}

pub fn metric_eigenvalues<T: Real>(f: &RadialPotential<T>, s: T) -> Result<MetricEigenvalues<T>> {
    eigenvalues_from_log(&f.log_derivatives(s)?, s)
}

/// `log det g = log[(F')^{m−1}(F' + sF'')]`.
pub fn log_det_metric<T: Real>(f: &RadialPotential<T>, m: usize, s: T) -> Result<T> {
    if m < 2 {
        return Err(Error::DomainError(format!("complex dimension {m} < 2")));
    }
    let e = metric_eigenvalues(f, s)?;
    Ok(T::from_usize_lossy(m - 1) * e.tangential.ln() + e.radial.ln())
}

/// Scalar curvature from a potential jet at `s > 0`.
pub fn scalar_curvature_from_jet<T: Real>(jet: &Jet7<T>, m: usize, s: T) -> Result<T> {
    if s <= T::zero() {
        return Err(Error::DerivativeUnavailable {
            order: 4,
            reason: "radial reduction needs s > 0".into(),
        });
    }
    eigenvalues_from_jet(jet, s)?;
    let p = log_derivatives(jet, s);
    let c = |x: T| Jet::<T, 1>::constant(x);
    Ok(scalar_curvature_from_log(m, c(p[1]), c(p[2]), c(p[3]), c(p[4])).value())
}

/// Scalar curvature from log-derivatives `p₀..p₆` at `s`.
pub fn scalar_curvature_from_log_derivatives<T: Real>(p: &[T; 7], m: usize, s: T) -> Result<T> {
    eigenvalues_from_log(p, s)?;
    let c = |x: T| Jet::<T, 1>::constant(x);
    Ok(scalar_curvature_from_log(m, c(p[1]), c(p[2]), c(p[3]), c(p[4])).value())
}

pub fn scalar_curvature<T: Real>(f: &RadialPotential<T>, m: usize, s: T) -> Result<T> {
    if m < 2 {
        return Err(Error::DomainError(format!("complex dimension {m} < 2")));
    }
    if s <= T::zero() {
        return Err(Error::DerivativeUnavailable {
            order: 4,
            reason: "radial reduction needs s > 0".into(),
        });
    }
    scalar_curvature_from_log_derivatives(&f.log_derivatives(s)?, m, s)
}

/// Dimensionless local curvature proxy
/// `c(s) = max_{i=2,3,4} s^{i−1} |F^{(i)}(s)| / F'(s)`.
pub fn curvature_size_from_jet<T: Real>(jet: &Jet7<T>, s: T) -> Result<T> {
    let f1 = jet.derivative(1);
    if f1 <= T::zero() {
        return Err(Error::NonPositiveMetric {
            s: s.to_f64_lossy(),
            tangential: f1.to_f64_lossy(),
            radial: f64::NAN,
        });
    }
    let mut best = T::zero();
    let mut sp = T::one();
    for i in 2..=4 {
        sp = sp * s;
        best = best.max(sp * jet.derivative(i).abs() / f1);
    }
    Ok(best)
}

pub fn curvature_size<T: Real>(f: &RadialPotential<T>, _m: usize, s: T) -> Result<T> {
    curvature_size_from_jet(&f.jet(s)?, s)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flat() -> RadialPotential<f64> {
        RadialPotential::from_profile(ClosedForm::new("flat", (0.0, f64::INFINITY), |x| {
            x.scale(0.5)
        }))
    }

    fn bs2(k: f64) -> RadialPotential<f64> {
        RadialPotential::from_profile(ClosedForm::new("bs2", (1e-12, f64::INFINITY), move |x| {
            x.scale(0.5) + x.ln().scale(k)
        }))
    }

    #[test]
    fn euclidean_eigenvalues() {
        let e = metric_eigenvalues(&flat(), 3.0).unwrap();
        assert_eq!(e, MetricEigenvalues { tangential: 0.5, radial: 0.5 });
    }

    #[test]
    fn log_potential_eigenvalues_and_det() {
        let e = metric_eigenvalues(&bs2(1.0), 2.0).unwrap();
        assert!((e.tangential - 1.0).abs() < 1e-15);
        assert!((e.radial - 0.5).abs() < 1e-15);
        let ld = log_det_metric(&bs2(1.0), 2, 2.0).unwrap();
        assert!((ld - 0.5f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn euclidean_log_det() {
        assert!((log_det_metric(&flat(), 2, 1.7).unwrap() - 0.25f64.ln()).abs() < 1e-15);
        assert!((log_det_metric(&flat(), 3, 1.7).unwrap() - 0.125f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn flat_and_log_family_are_scalar_flat() {
        for &s in &[1e-3, 0.5, 3.0, 1e4] {
            for m in 2..6 {
                assert!(scalar_curvature(&flat(), m, s).unwrap().abs() < 1e-14);
            }
            for &k in &[0.1, 1.0, 7.5] {
                let v = scalar_curvature(&bs2(k), 2, s).unwrap();
                assert!(v.abs() < 1e-9 * (1.0 + 1.0 / s), "k={k} s={s} S={v}");
            }
        }
    }

    #[test]
    fn fubini_study_has_constant_curvature() {
        let fs = RadialPotential::from_profile(ClosedForm::new("fs", (0.0, f64::INFINITY), |x| {
            (x + 1.0).ln().scale(0.5)
        }));
        let a = scalar_curvature(&fs, 2, 1e-6).unwrap();
        let b = scalar_curvature(&fs, 2, 1.0).unwrap();
        assert!(a.abs() > 1.0);
        assert!((a - b).abs() < 1e-6 * a.abs());
    }

    #[test]
    fn stirling_conversions_roundtrip() {
        let f = bs2(0.3).jet(1.7).unwrap();
        let p = log_derivatives(&f, 1.7);
        let d = s_derivatives_from_log(&p, 1.7);
        for k in 0..7 {
            assert!((d[k] - f.derivative(k)).abs() < 1e-12 * (1.0 + d[k].abs()));
        }
    }

    #[test]
    fn negative_metric_rejected() {
        let bad = RadialPotential::from_profile(ClosedForm::new("bad", (0.0, 10.0), |x| {
            x.scale(-0.5)
        }));
        assert!(matches!(metric_eigenvalues(&bad, 1.0), Err(Error::NonPositiveMetric { .. })));
    }

    #[test]
    fn curvature_size_vanishes_for_flat_and_decays_for_tail() {
        assert_eq!(curvature_size(&flat(), 3, 2.0).unwrap(), 0.0);
        let tail = RadialPotential::from_profile(ClosedForm::new("t", (1.0, f64::INFINITY), |x| {
            x.scale(0.5) + x.powf(-1.0).scale(0.4)
        }));
        let a = curvature_size(&tail, 3, 10.0).unwrap();
        let b = curvature_size(&tail, 3, 1e3).unwrap();
        let c = curvature_size(&tail, 3, 1e5).unwrap();
        assert!(a > b && b > c && c < 1e-8);
    }
}
