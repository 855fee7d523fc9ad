//! Invariant suite run by `ale-glue validate`: independent curvature
//! oracle, scale covariance, weighted-norm axioms and the operator-level
//! gradient check of the linearization.

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ale_models::{burns_simanca, eguchi_hanson, euclidean};
use crate::error::{Error, Result};
use crate::gluing::{point_chart, preglue, CutoffProfile};
use crate::jet::Jet;
use crate::radial_kahler::{log_det_metric, metric_eigenvalues, scalar_curvature, ClosedForm, RadialPotential};
use crate::scalar::Real;
use crate::scalarflat_solver::{check_linearization, linearized_operator, ScalarFlatProblem};
use crate::weighted_analysis::{weighted_norm, RadialFunction, Region, WeightedNormSpec};

pub const ORACLE_TOLERANCE: f64 = 1e-8;
pub const COVARIANCE_TOLERANCE: f64 = 1e-10;
pub const NORM_TOLERANCE: f64 = 1e-12;
pub const LINEARIZATION_TOLERANCE: f64 = 1e-6;

type J3<T> = Jet<T, 3>;

#[derive(Clone, Copy, Debug)]
struct CJet<T: Real> {
    re: J3<T>,
    im: J3<T>,
}

impl<T: Real> CJet<T> {
    fn real(re: J3<T>) -> Self {
        Self { re, im: J3::constant(T::zero()) }
    }
    fn conj(self) -> Self {
        Self { re: self.re, im: J3::constant(T::zero()) - self.im }
    }
    fn mul(self, o: Self) -> Self {
        Self { re: self.re * o.re - self.im * o.im, im: self.re * o.im + self.im * o.re }
    }
    fn sub(self, o: Self) -> Self {
        Self { re: self.re - o.re, im: self.im - o.im }
    }
    fn add(self, o: Self) -> Self {
        Self { re: self.re + o.re, im: self.im + o.im }
    }
    fn div(self, o: Self) -> Self {
        let d = o.re * o.re + o.im * o.im;
        Self { re: (self.re * o.re + self.im * o.im) / d, im: (self.im * o.re - self.re * o.im) / d }
    }
}

/// Second derivative in `τ` of `log det ∂∂̄F` at `z + τv`.
fn log_det_second_derivative<T: Real>(d: &[T; 7], z: &[Complex<T>], v: &[Complex<T>]) -> T {
    let m = z.len();
    let a = z.iter().zip(v).fold(T::zero(), |acc, (zi, vi)| acc + (zi.conj() * vi).re) * T::lit(2.0);
    let b = v.iter().fold(T::zero(), |acc, vi| acc + vi.norm_sqr());
    let delta = J3::from_coeffs([T::zero(), a, b]);
    let half = T::lit(0.5);
    let f1 = J3::constant(d[1]) + delta.scale(d[2]) + (delta * delta).scale(d[3] * half);
    let f2 = J3::constant(d[2]) + delta.scale(d[3]) + (delta * delta).scale(d[4] * half);
    let zt: Vec<CJet<T>> = z
        .iter()
        .zip(v)
        .map(|(zi, vi)| CJet {
            re: J3::from_coeffs([zi.re, vi.re, T::zero()]),
            im: J3::from_coeffs([zi.im, vi.im, T::zero()]),
        })
        .collect();
    let mut g: Vec<Vec<CJet<T>>> = (0..m)
        .map(|i| {
            (0..m)
                .map(|j| {
                    let mut e = CJet::real(f2).mul(zt[i].conj()).mul(zt[j]);
                    if i == j {
                        e = e.add(CJet::real(f1));
                    }
                    e
                })
                .collect()
        })
        .collect();
    // Gaussian elimination; the matrix is Hermitian positive definite
    let mut det = CJet::real(J3::constant(T::one()));
    for k in 0..m {
        let piv = g[k][k];
        det = det.mul(piv);
        for i in k + 1..m {
            let f = g[i][k].div(piv);
            for j in k..m {
                g[i][j] = g[i][j].sub(f.mul(g[k][j]));
            }
        }
    }
    det.re.ln().derivative(2)
}

fn invert<T: Real>(a: &[Vec<Complex<T>>]) -> Vec<Vec<Complex<T>>> {
    let m = a.len();
    let mut w: Vec<Vec<Complex<T>>> = a.to_vec();
    let mut inv: Vec<Vec<Complex<T>>> = (0..m)
        .map(|i| (0..m).map(|j| if i == j { Complex::new(T::one(), T::zero()) } else { Complex::new(T::zero(), T::zero()) }).collect())
        .collect();
    for k in 0..m {
        let p = (k..m).max_by(|&x, &y| w[x][k].norm().partial_cmp(&w[y][k].norm()).unwrap()).unwrap();
        w.swap(k, p);
        inv.swap(k, p);
        let piv = w[k][k];
        for j in 0..m {
            w[k][j] = w[k][j] / piv;
            inv[k][j] = inv[k][j] / piv;
        }
        for i in 0..m {
            if i != k {
                let f = w[i][k];
                for j in 0..m {
                    w[i][j] = w[i][j] - f * w[k][j];
                    inv[i][j] = inv[i][j] - f * inv[k][j];
                }
            }
        }
    }
    inv
}

/// Scalar curvature of `i∂∂̄F(|z|²)` at the point `z ∈ C^m` from the full
/// complex Hessian: `S = −g^{jk̄} ∂_j∂_k̄ log det g`, with the second
/// derivatives of `log det g` taken along real coordinate directions.
pub fn hessian_scalar_curvature<T: Real>(f: &RadialPotential<T>, z: &[Complex<T>]) -> Result<T> {
    let m = z.len();
    if m < 2 {
        return Err(Error::DomainError(format!("complex dimension {m} < 2")));
    }
    let s = z.iter().fold(T::zero(), |a, zi| a + zi.norm_sqr());
    let d = f.jet(s)?.derivatives();
    let zero = Complex::new(T::zero(), T::zero());
    let unit = |a: usize| -> Vec<Complex<T>> {
        (0..m)
            .map(|i| match (a < m, i == a % m) {
                (_, false) => zero,
                (true, true) => Complex::new(T::one(), T::zero()),
                (false, true) => Complex::new(T::zero(), T::one()),
            })
            .collect()
    };
    let n = 2 * m;
    let diag: Vec<T> = (0..n).map(|a| log_det_second_derivative(&d, z, &unit(a))).collect();
    let mut hess = vec![vec![T::zero(); n]; n];
    for a in 0..n {
        hess[a][a] = diag[a];
        for b in a + 1..n {
            let v: Vec<Complex<T>> = unit(a).iter().zip(unit(b)).map(|(x, y)| x + y).collect();
            let h = (log_det_second_derivative(&d, z, &v) - diag[a] - diag[b]) * T::lit(0.5);
            hess[a][b] = h;
            hess[b][a] = h;
        }
    }
    let quarter = T::lit(0.25);
    let g: Vec<Vec<Complex<T>>> = (0..m)
        .map(|i| {
            (0..m)
                .map(|j| {
                    let e = z[i].conj() * z[j] * d[2];
                    if i == j {
                        e + Complex::new(d[1], T::zero())
                    } else {
                        e
                    }
                })
                .collect()
        })
        .collect();
    let gi = invert(&g);
    let mut trace = zero;
    for i in 0..m {
        for j in 0..m {
            let u = Complex::new(
                (hess[i][j] + hess[m + i][m + j]) * quarter,
                (hess[i][m + j] - hess[m + i][j]) * quarter,
            );
            trace = trace + gi[j][i] * u;
        }
    }
    Ok(-trace.re)
}

/// One named invariant with its measured value and tolerance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InvariantCheck {
    pub name: String,
    pub measured: f64,
    pub tolerance: f64,
    pub samples: usize,
    pub passed: bool,
}

impl InvariantCheck {
    fn new(name: &str, measured: f64, tolerance: f64, samples: usize) -> Self {
        Self { name: name.into(), measured, tolerance, samples, passed: measured <= tolerance }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub seed: u64,
    pub checks: Vec<InvariantCheck>,
    pub passed: bool,
}

/// Random positive radial potential `s/2 + a s²/(1+bs) + c log(1+ds) + k log s`.
pub fn random_potential<R: Rng>(rng: &mut R) -> RadialPotential<f64> {
    let a = rng.gen_range(0.0..0.3);
    let b = rng.gen_range(0.5..2.0);
    let c = rng.gen_range(0.0..0.5);
    let d = rng.gen_range(0.5..3.0);
    let k = if rng.gen_bool(0.5) { rng.gen_range(0.0..0.4) } else { 0.0 };
    RadialPotential::from_profile(ClosedForm::flat_plus_log("random", (0.0, f64::INFINITY), move |x, lx| {
        let one = Jet::constant(1.0);
        (x * x).scale(a) / (one + x.scale(b)) + (one + x.scale(d)).ln().scale(c) + lx.scale(k)
    }))
}

fn random_point<R: Rng>(rng: &mut R, m: usize, s: f64) -> Vec<Complex<f64>> {
    let z: Vec<Complex<f64>> =
        (0..m).map(|_| Complex::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
    let n = z.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    z.into_iter().map(|c| c * (s.sqrt() / n)).collect()
}

/// Largest relative gap between the radial formula and the Hessian oracle.
pub fn oracle_equivalence(seed: u64, count: usize) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..count {
        let f = random_potential(&mut rng);
        let m = rng.gen_range(2..=5);
        let s = 10f64.powf(rng.gen_range(-1.5..1.5));
        let z = random_point(&mut rng, m, s);
        let radial = scalar_curvature(&f, m, s)?;
        let oracle = hessian_scalar_curvature(&f, &z)?;
        let scale = oracle.abs().max(1e-300);
        worst = worst.max((radial - oracle).abs() / scale);
    }
    Ok(worst)
}

/// Largest relative violation of `S(F_λ)(λ²s) = λ⁻² S(F)(s)`.
pub fn scale_covariance(seed: u64, count: usize) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..count {
        let f = random_potential(&mut rng);
        let lambda = rng.gen_range(0.3..3.0);
        let m = rng.gen_range(2..=5);
        let s = 10f64.powf(rng.gen_range(-1.5..1.5));
        let a = scalar_curvature(&f, m, s)?;
        let b = scalar_curvature(&f.rescaled(lambda), m, lambda * lambda * s)?;
        worst = worst.max((b - a / (lambda * lambda)).abs() / a.abs().max(1e-300));
    }
    Ok(worst)
}

/// `Σ a_k ρ^{p_k}`.
#[derive(Clone, Debug)]
pub struct PowerSum(pub Vec<(f64, f64)>);

impl RadialFunction<f64> for PowerSum {
    fn radial_derivatives(&self, rho: f64, order: usize) -> Result<Vec<f64>> {
        let mut out = vec![0.0; order + 1];
        for &(a, p) in &self.0 {
            let (mut c, mut q) = (a, p);
            for o in out.iter_mut() {
                *o += c * rho.powf(q);
                c *= q;
                q -= 1.0;
            }
        }
        Ok(out)
    }
}

fn random_power_sum<R: Rng>(rng: &mut R) -> PowerSum {
    PowerSum((0..3).map(|_| (rng.gen_range(-1.0..1.0), rng.gen_range(-0.45..2.0))).collect())
}

/// Worst relative homogeneity defect and triangle excess of the weighted
/// `C^{2,α}` norm over random pairs.
pub fn norm_axioms(seed: u64, count: usize) -> Result<(f64, f64)> {
    let spec = WeightedNormSpec::<f64>::default_for(2);
    let region = Region::Annulus { inner: 0.01, outer: 1.0 };
    let pairs: Vec<(PowerSum, PowerSum, f64)> = {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..count)
            .map(|_| (random_power_sum(&mut rng), random_power_sum(&mut rng), rng.gen_range(-5.0..5.0)))
            .collect()
    };
    let per: Vec<(f64, f64)> = pairs
        .par_iter()
        .map(|(f, g, c)| {
            let nf = weighted_norm(f, region, &spec)?.value;
            let ng = weighted_norm(g, region, &spec)?.value;
            let scaled = PowerSum(f.0.iter().map(|&(a, p)| (c * a, p)).collect());
            let ncf = weighted_norm(&scaled, region, &spec)?.value;
            let sum = PowerSum(f.0.iter().chain(&g.0).copied().collect());
            let nsum = weighted_norm(&sum, region, &spec)?.value;
            let hom = (ncf - c.abs() * nf).abs() / (c.abs() * nf).max(1e-300);
            let tri = ((nsum - nf - ng) / (nf + ng)).max(0.0);
            Ok((hom, tri))
        })
        .collect::<Result<_>>()?;
    Ok(per.iter().fold((0.0f64, 0.0f64), |(a, b), &(h, t)| (a.max(h), b.max(t))))
}

/// Worst linearization gap over the glued test problems.
pub fn linearization_gap(seed: u64) -> Result<f64> {
    let bs = burns_simanca::<f64>(2)?;
    let flat = euclidean::<f64>(2)?;
    let chart = point_chart(&eguchi_hanson::<f64>(1.0)?, 1e4)?;
    let mut worst = 0.0f64;
    for base in [flat, chart] {
        let pg = preglue(&base, &bs, 0.05, CutoffProfile::default())?;
        let p = ScalarFlatProblem::for_glued(&pg)?;
        worst = worst.max(check_linearization(&p, seed, 3)?);
    }
    Ok(worst)
}

/// Largest `‖ψ‖ / (K‖Lψ‖)` over random mesh functions; at most one when
/// `K` is the measured inverse bound.
pub fn inverse_bound_ratio(seed: u64, count: usize) -> Result<f64> {
    let bs = burns_simanca::<f64>(2)?;
    let chart = point_chart(&eguchi_hanson::<f64>(1.0)?, 1e4)?;
    let pg = preglue(&chart, &bs, 0.05, CutoffProfile::default())?;
    let p = ScalarFlatProblem::for_glued(&pg)?;
    let op = linearized_operator(&p)?;
    let k = p.inverse_norm(&op.lu, 17);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    let rows = p.interior();
    for _ in 0..count {
        // admissible ψ: zero boundary rows, random curvature rows
        let mut rhs = vec![0.0; p.len()];
        for i in rows.clone() {
            rhs[i] = rng.gen_range(-1.0..1.0) * p.mesh.s[i] * p.mesh.s[i];
        }
        let psi = op.lu.solve(&rhs);
        let mut lpsi = p.apply_linearized(&op.matrix, &psi);
        for (i, v) in lpsi.iter_mut().enumerate() {
            if !rows.contains(&i) {
                *v = 0.0;
            }
        }
        worst = worst.max(p.x_norm(&psi) / (k * p.y_norm(&lpsi)));
    }
    Ok(worst)
}

/// Exactness of `exp(log det) = tangential^{m−1}·radial` and flatness of `s/2`.
fn pointwise_identities(seed: u64) -> Result<(f64, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let flat = euclidean::<f64>(3)?.potential;
    let (mut det_gap, mut flat_gap) = (0.0f64, 0.0f64);
    for _ in 0..100 {
        let s = 10f64.powf(rng.gen_range(-3.0..3.0));
        let m = rng.gen_range(2..=5);
        let f = random_potential(&mut rng);
        let e = metric_eigenvalues(&f, s)?;
        let prod = e.tangential.powi(m as i32 - 1) * e.radial;
        det_gap = det_gap.max((log_det_metric(&f, m, s)?.exp() - prod).abs() / prod);
        flat_gap = flat_gap.max((s * scalar_curvature(&flat, m, s)?).abs());
    }
    Ok((det_gap, flat_gap))
}

/// Runs every invariant and collects the outcomes.
pub fn run_validation(seed: u64) -> Result<ValidationReport> {
    let mut checks = Vec::new();
    checks.push(InvariantCheck::new("radial curvature vs Hessian oracle", oracle_equivalence(seed, 50)?, ORACLE_TOLERANCE, 50));
    checks.push(InvariantCheck::new("scale covariance", scale_covariance(seed, 100)?, COVARIANCE_TOLERANCE, 100));
    let (hom, tri) = norm_axioms(seed, 100)?;
    checks.push(InvariantCheck::new("weighted norm homogeneity", hom, NORM_TOLERANCE, 100));
    checks.push(InvariantCheck::new("weighted norm triangle inequality", tri, NORM_TOLERANCE, 100));
    checks.push(InvariantCheck::new("linearization vs finite differences", linearization_gap(seed)?, LINEARIZATION_TOLERANCE, 6));
    let (det_gap, flat_gap) = pointwise_identities(seed)?;
    checks.push(InvariantCheck::new("log det vs eigenvalue product", det_gap, 1e-12, 100));
    checks.push(InvariantCheck::new("flat potential has zero curvature", flat_gap, 1e-13, 100));
    checks.push(InvariantCheck::new("inverse bound on random mesh functions", inverse_bound_ratio(seed, 100)?, 1.0, 100));
    let passed = checks.iter().all(|c| c.passed);
    Ok(ValidationReport { seed, checks, passed })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn oracle_matches_on_flat_and_log_potentials() {
        let flat = euclidean::<f64>(3).unwrap().potential;
        let z = [Complex::new(0.3, -0.2), Complex::new(1.1, 0.4), Complex::new(-0.5, 0.9)];
        assert!(hessian_scalar_curvature(&flat, &z).unwrap().abs() < 1e-13);
        let bs = burns_simanca::<f64>(2).unwrap().potential;
        assert!(hessian_scalar_curvature(&bs, &z[..2]).unwrap().abs() < 1e-10);
    }

    #[test]
    fn oracle_detects_fubini_study_curvature() {
        let fs = RadialPotential::from_profile(ClosedForm::new("fs", (0.0, f64::INFINITY), |x| {
            (Jet::constant(1.0) + x).ln().scale(0.5)
        }));
        let a = hessian_scalar_curvature(&fs, &[Complex::new(0.2, 0.1), Complex::new(-0.3, 0.0)]).unwrap();
        let b = hessian_scalar_curvature(&fs, &[Complex::new(1.0, 0.5), Complex::new(0.7, -1.2)]).unwrap();
        assert!(a.abs() > 1.0);
        assert!((a - b).abs() < 1e-10 * a.abs());
    }
}
