//! Exact blow-up calculus: Chern and Kähler class transforms, the
//! intersection pairing against exceptional divisors, the topological ADM
//! mass and the blow-up planner.
//!
//! Masses are kept as `q·π^{−(m−1)} + r` with `q` rational, so every
//! algebraic identity can be checked without rounding.

use std::f64::consts::PI;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

fn int(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

fn to_f64(q: &BigRational) -> f64 {
    q.to_f64().unwrap_or(f64::NAN)
}

/// `⟨PD[E]^m⟩ = (−1)^{m−1}`.
pub fn sigma(m: usize) -> BigRational {
    if m % 2 == 1 {
        int(1)
    } else {
        int(-1)
    }
}

/// `π*(base symbol)·b + Σ a_i PD[E_i]`; the base symbol is either `c₁(X)`
/// or `[ω]`, whose mutual pairing is supplied as data.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CohomologyClass {
    pub base: BigRational,
    pub exceptional: Vec<BigRational>,
}

impl CohomologyClass {
    /// The pulled-back base class with no exceptional part.
    pub fn pullback() -> Self {
        Self { base: int(1), exceptional: Vec::new() }
    }

    fn exceptional_at(&self, i: usize) -> BigRational {
        self.exceptional.get(i).cloned().unwrap_or_else(BigRational::zero)
    }
}

impl fmt::Display for CohomologyClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}·π*", self.base)?;
        for (i, a) in self.exceptional.iter().enumerate() {
            write!(f, " + ({a})·E{}", i + 1)?;
        }
        Ok(())
    }
}

/// One point blow-up: `c₁ ↦ c₁ − (m−1)E`, `ω ↦ ω − ε²E`.
pub fn blowup_transform(
    c1: &CohomologyClass,
    omega: &CohomologyClass,
    m: usize,
    eps: &BigRational,
) -> Result<(CohomologyClass, CohomologyClass)> {
    if m < 2 {
        return Err(Error::InvalidInput(format!("complex dimension {m} < 2")));
    }
    if !eps.is_positive() {
        return Err(Error::InvalidInput(format!("blow-up weight {eps} must be positive")));
    }
    let k = c1.exceptional.len().max(omega.exceptional.len());
    let pad = |c: &CohomologyClass, last: BigRational| {
        let mut ex: Vec<_> = (0..k).map(|i| c.exceptional_at(i)).collect();
        ex.push(last);
        CohomologyClass { base: c.base.clone(), exceptional: ex }
    };
    Ok((pad(c1, -int(m as i64 - 1)), pad(omega, -(eps * eps))))
}

/// `⟨a · b^{m−1}⟩`, where `base_pairing = ⟨π*c₁ · (π*ω)^{m−1}⟩`. Mixed
/// base/exceptional terms and products of distinct divisors vanish.
pub fn pairing(a: &CohomologyClass, b: &CohomologyClass, m: usize, base_pairing: &BigRational) -> BigRational {
    let k = a.exceptional.len().max(b.exceptional.len());
    let power = |q: &BigRational| num_traits::pow(q.clone(), m - 1);
    let mut total = &a.base * power(&b.base) * base_pairing;
    let s = sigma(m);
    for i in 0..k {
        total += a.exceptional_at(i) * power(&b.exceptional_at(i)) * &s;
    }
    total
}

/// A mass `q·π^{−(m−1)} + r`.
#[derive(Clone, Debug, PartialEq)]
pub struct TopologicalMass {
    pub m: usize,
    pub pi_coefficient: BigRational,
    pub real_part: f64,
}

impl TopologicalMass {
    pub fn exact(m: usize, q: BigRational) -> Self {
        Self { m, pi_coefficient: q, real_part: 0.0 }
    }

    pub fn real(m: usize, r: f64) -> Self {
        Self { m, pi_coefficient: BigRational::zero(), real_part: r }
    }

    pub fn is_exact(&self) -> bool {
        self.real_part == 0.0
    }

    pub fn to_f64(&self) -> f64 {
        to_f64(&self.pi_coefficient) / PI.powi(self.m as i32 - 1) + self.real_part
    }
}

/// A blow-up weight; the mass depends only on `ε^{2(m−1)}`, which is
/// stored exactly even when `ε` itself is irrational.
#[derive(Clone, Debug, PartialEq)]
pub struct BlowupWeight {
    pub power: BigRational,
    pub epsilon: Option<BigRational>,
}

impl BlowupWeight {
    pub fn from_epsilon(m: usize, eps: BigRational) -> Result<Self> {
        if !eps.is_positive() {
            return Err(Error::InvalidInput(format!("blow-up weight {eps} must be positive")));
        }
        Ok(Self { power: num_traits::pow(eps.clone(), 2 * (m - 1)), epsilon: Some(eps) })
    }

    pub fn from_power(power: BigRational) -> Result<Self> {
        if !power.is_positive() {
            return Err(Error::InvalidInput(format!("weight power {power} must be positive")));
        }
        Ok(Self { power, epsilon: None })
    }

    pub fn epsilon_f64(&self, m: usize) -> f64 {
        match &self.epsilon {
            Some(e) => to_f64(e),
            None => to_f64(&self.power).powf(1.0 / (2.0 * (m as f64 - 1.0))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BlowupConfiguration {
    pub m: usize,
    pub base_mass: TopologicalMass,
    pub weights: Vec<BlowupWeight>,
    pub distances: Option<Vec<f64>>,
}

impl BlowupConfiguration {
    pub fn new(m: usize, base_mass: TopologicalMass, weights: Vec<BlowupWeight>) -> Result<Self> {
        if m < 2 || base_mass.m != m {
            return Err(Error::InvalidInput(format!("dimension mismatch: m = {m}, base m = {}", base_mass.m)));
        }
        Ok(Self { m, base_mass, weights, distances: None })
    }

    /// Rational `ε_i`.
    pub fn with_epsilons(m: usize, base_mass: TopologicalMass, eps: &[BigRational]) -> Result<Self> {
        let w = eps.iter().map(|e| BlowupWeight::from_epsilon(m, e.clone())).collect::<Result<_>>()?;
        Self::new(m, base_mass, w)
    }
}

/// `(m−1)/(2m−1)`: coefficient of `ε^{2(m−1)} π^{−(m−1)}` in one increment.
pub fn increment_factor(m: usize) -> BigRational {
    BigRational::new(BigInt::from(m - 1), BigInt::from(2 * m - 1))
}

/// Mass gained by one blow-up of weight `ε`.
pub fn mass_increment(m: usize, eps: f64) -> f64 {
    let mf = m as f64;
    (mf - 1.0) * eps.powi(2 * (m as i32 - 1)) / ((2.0 * mf - 1.0) * PI.powi(m as i32 - 1))
}

/// Summed increments of real weights, compensated so long plans stay
/// accurate to a few ulps.
pub fn total_increment(m: usize, weights: &[f64]) -> f64 {
    let (mut sum, mut carry) = (0.0f64, 0.0f64);
    for &e in weights {
        let x = mass_increment(m, e);
        let t = sum + x;
        carry += if sum.abs() >= x.abs() { (sum - t) + x } else { (x - t) + sum };
        sum = t;
    }
    sum + carry
}

/// Closed-form total: base plus one increment per weight.
pub fn topological_mass(config: &BlowupConfiguration) -> TopologicalMass {
    let f = increment_factor(config.m);
    let sum = config.weights.iter().fold(BigRational::zero(), |acc, w| acc + &w.power);
    TopologicalMass {
        m: config.m,
        pi_coefficient: &config.base_mass.pi_coefficient + f * sum,
        real_part: config.base_mass.real_part,
    }
}

/// The same mass evaluated as `−⟨♣c₁, ω^{m−1}⟩/(2m−1)` through the
/// pairing, with the base pairing chosen to reproduce the base mass.
pub fn pairing_mass(config: &BlowupConfiguration) -> TopologicalMass {
    let m = config.m;
    let scale = int(2 * m as i64 - 1);
    let base_pairing = -(&config.base_mass.pi_coefficient * &scale);
    let mut c1 = CohomologyClass::pullback();
    // (π*ω − Σ ε_i² E_i)^{m−1} restricted to each E_i is (−ε_i²)^{m−1} = σ_m ε_i^{2(m−1)}
    let mut omega_power = CohomologyClass::pullback();
    for w in &config.weights {
        c1.exceptional.push(-int(m as i64 - 1));
        omega_power.exceptional.push(sigma(m) * &w.power);
    }
    let p = pairing_power(&c1, &omega_power, m, &base_pairing);
    TopologicalMass { m, pi_coefficient: -p / scale, real_part: config.base_mass.real_part }
}

fn pairing_power(a: &CohomologyClass, b_power: &CohomologyClass, m: usize, base_pairing: &BigRational) -> BigRational {
    let mut total = &a.base * &b_power.base * base_pairing;
    let s = sigma(m);
    for i in 0..a.exceptional.len() {
        total += a.exceptional_at(i) * b_power.exceptional_at(i) * &s;
    }
    total
}

fn check_plan_inputs(eps0: f64, safety: f64) -> Result<f64> {
    if !(eps0 > 0.0) || !eps0.is_finite() {
        return Err(Error::DegenerateThreshold(eps0));
    }
    if !(safety > 0.0 && safety < 1.0) {
        return Err(Error::InvalidInput(format!("safety {safety} not in (0, 1)")));
    }
    Ok(safety * eps0)
}

/// Weights `ε_i ≤ safety·ε₀` raising `base` to `target`: all but the last
/// at the cap, the last solved in closed form.
pub fn plan_blowups(base: f64, target: f64, m: usize, eps0: f64, safety: f64) -> Result<Vec<f64>> {
    if m < 2 {
        return Err(Error::InvalidInput(format!("complex dimension {m} < 2")));
    }
    let cap = check_plan_inputs(eps0, safety)?;
    if !(target >= base) {
        return Err(Error::TargetBelowBase { base, target });
    }
    let need = target - base;
    if need == 0.0 {
        return Ok(Vec::new());
    }
    let step = mass_increment(m, cap);
    let ratio = need / step;
    let k = (ratio * (1.0 - 4.0 * f64::EPSILON)).ceil().max(1.0);
    if k > 1e7 {
        return Err(Error::InvalidInput(format!("plan needs {k} blow-ups")));
    }
    let k = k as usize;
    let rem = need - (k - 1) as f64 * step;
    let mf = m as f64;
    let last = (rem * (2.0 * mf - 1.0) * PI.powi(m as i32 - 1) / (mf - 1.0)).powf(1.0 / (2.0 * (mf - 1.0)));
    let mut w = vec![cap; k - 1];
    w.push(last.min(cap));
    Ok(w)
}

/// Exact planner: `base` and `target` are coefficients of `π^{−(m−1)}`.
pub fn plan_blowups_exact(
    base: &BigRational,
    target: &BigRational,
    m: usize,
    eps0: f64,
    safety: f64,
) -> Result<Vec<BlowupWeight>> {
    if m < 2 {
        return Err(Error::InvalidInput(format!("complex dimension {m} < 2")));
    }
    let cap = check_plan_inputs(eps0, safety)?;
    if target < base {
        return Err(Error::TargetBelowBase { base: to_f64(base), target: to_f64(target) });
    }
    let need = target - base;
    if need.is_zero() {
        return Ok(Vec::new());
    }
    let cap = BigRational::from_float(cap).ok_or(Error::DegenerateThreshold(eps0))?;
    let cap_weight = BlowupWeight::from_epsilon(m, cap)?;
    let step = increment_factor(m) * &cap_weight.power;
    let k = (&need / &step).ceil().to_integer();
    let k = k.to_usize().ok_or_else(|| Error::InvalidInput("plan too large".into()))?;
    let rem = &need - &step * int(k as i64 - 1);
    let last = BlowupWeight::from_power(rem / increment_factor(m))?;
    let mut w = vec![cap_weight; k - 1];
    w.push(last);
    Ok(w)
}

/// `{m, base_mass, target, epsilon0, safety, weights, achieved_mass, k}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlanReport {
    pub m: usize,
    pub base_mass: f64,
    pub target: f64,
    pub epsilon0: f64,
    pub safety: f64,
    pub weights: Vec<f64>,
    pub achieved_mass: f64,
    pub k: usize,
}

impl PlanReport {
    pub fn build(base: f64, target: f64, m: usize, eps0: f64, safety: f64) -> Result<Self> {
        let weights = plan_blowups(base, target, m, eps0, safety)?;
        let achieved_mass = base + total_increment(m, &weights);
        Ok(Self { m, base_mass: base, target, epsilon0: eps0, safety, k: weights.len(), weights, achieved_mass })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn transform_coefficients() {
        let (c, w) = blowup_transform(&CohomologyClass::pullback(), &CohomologyClass::pullback(), 2, &q(1, 3)).unwrap();
        assert_eq!(c.exceptional, vec![int(-1)]);
        assert_eq!(w.exceptional, vec![q(-1, 9)]);
        let (c, _) = blowup_transform(&c, &w, 3, &q(1, 2)).unwrap();
        assert_eq!(c.exceptional[1], int(-2));
        assert!(blowup_transform(&c, &w, 3, &int(0)).is_err());
    }

    #[test]
    fn pairing_rules() {
        let zero = BigRational::zero();
        let e = CohomologyClass { base: zero.clone(), exceptional: vec![int(1)] };
        let base = CohomologyClass::pullback();
        assert!(pairing(&e, &base, 3, &int(5)).is_zero());
        let eps = q(1, 10);
        let a = CohomologyClass { base: zero.clone(), exceptional: vec![int(-1)] };
        let b = CohomologyClass { base: zero.clone(), exceptional: vec![-(&eps * &eps)] };
        assert_eq!(pairing(&a, &b, 2, &zero), &eps * &eps * sigma(2));
        let p = CohomologyClass { base: zero.clone(), exceptional: vec![int(1), int(0)] };
        let r = CohomologyClass { base: zero, exceptional: vec![int(0), int(1)] };
        assert!(pairing(&p, &r, 2, &int(0)).is_zero());
    }

    #[test]
    fn single_blowup_values() {
        let c = BlowupConfiguration::with_epsilons(2, TopologicalMass::exact(2, int(0)), &[q(1, 10)]).unwrap();
        let t = topological_mass(&c);
        assert_eq!(t.pi_coefficient, q(1, 300));
        assert!((t.to_f64() - 1.061033e-3).abs() < 1e-9);
        let c = BlowupConfiguration::with_epsilons(3, TopologicalMass::exact(3, int(0)), &[q(1, 2)]).unwrap();
        let t = topological_mass(&c);
        assert_eq!(t.pi_coefficient, q(1, 40));
        assert!((t.to_f64() - 2.5330e-3).abs() < 1e-7);
        let base = TopologicalMass::exact(4, q(3, 7));
        let c = BlowupConfiguration::new(4, base.clone(), vec![]).unwrap();
        assert_eq!(topological_mass(&c), base);
    }

    #[test]
    fn pairing_route_matches_closed_form() {
        for m in 2..6 {
            let eps = [q(1, 3), q(2, 7), q(5, 11)];
            let c = BlowupConfiguration::with_epsilons(m, TopologicalMass::exact(m, q(-1, 5)), &eps).unwrap();
            assert_eq!(pairing_mass(&c), topological_mass(&c));
            let (mut c1, mut om) = (CohomologyClass::pullback(), CohomologyClass::pullback());
            for e in &eps {
                (c1, om) = blowup_transform(&c1, &om, m, e).unwrap();
            }
            let base_pairing = q(1, 5) * int(2 * m as i64 - 1);
            let direct = -pairing(&c1, &om, m, &base_pairing) / int(2 * m as i64 - 1);
            assert_eq!(direct, topological_mass(&c).pi_coefficient);
        }
    }

    #[test]
    fn planner_example() {
        let w = plan_blowups(0.0, 0.02, 2, 0.3, 0.9).unwrap();
        assert_eq!(w.len(), 3);
        assert!((w[0] - 0.27).abs() < 1e-15 && (w[1] - 0.27).abs() < 1e-15);
        let expect = (3.0 * PI * (0.02 - 2.0 * 0.27f64.powi(2) / (3.0 * PI))).sqrt();
        assert!((w[2] - expect).abs() < 1e-14);
        assert!((w[2] - 0.20663).abs() < 1e-5);
        let total: f64 = w.iter().map(|&e| mass_increment(2, e)).sum();
        assert!((total - 0.02).abs() < 1e-12);
    }

    #[test]
    fn planner_edge_cases() {
        assert!(plan_blowups(0.1, 0.1, 3, 0.2, 0.5).unwrap().is_empty());
        assert!(matches!(plan_blowups(0.1, 0.0, 3, 0.2, 0.5), Err(Error::TargetBelowBase { .. })));
        assert!(matches!(plan_blowups(0.0, 0.1, 3, 0.0, 0.5), Err(Error::DegenerateThreshold(_))));
        let w = plan_blowups(-0.01, 0.0, 2, 0.5, 0.9).unwrap();
        let total: f64 = w.iter().map(|&e| mass_increment(2, e)).sum();
        assert!((total - 0.01).abs() < 1e-12);
        assert!(w.iter().all(|&e| e <= 0.45));
    }

    #[test]
    fn exact_planner_round_trip() {
        for m in 2..6 {
            let base = q(-3, 100);
            let target = q(1, 7);
            let w = plan_blowups_exact(&base, &target, m, 0.6, 0.9).unwrap();
            let c = BlowupConfiguration::new(m, TopologicalMass::exact(m, base.clone()), w.clone()).unwrap();
            assert_eq!(topological_mass(&c).pi_coefficient, target);
            assert!(w.iter().all(|x| x.epsilon_f64(m) <= 0.54 + 1e-15));
        }
    }

    #[test]
    fn plan_report_json() {
        let r = PlanReport::build(0.0, 0.02, 2, 0.3, 0.9).unwrap();
        let j = serde_json::to_value(&r).unwrap();
        for key in ["m", "base_mass", "target", "epsilon0", "safety", "weights", "achieved_mass", "k"] {
            assert!(j.get(key).is_some(), "{key}");
        }
        assert_eq!(r.k, 3);
    }
}
