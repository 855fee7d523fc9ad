//! Weighted Hölder norms on the outer end, the neck annuli and the bubble
//! region, and estimation of the gluing constants `C`, `K` and `ε₀`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ale_models::AleModel;
use crate::error::{Error, Result};
use crate::gluing::{glued_scalar_curvature_norm, two_point_sweep, PregluedMetric, TwoPointCalibration};
use crate::jet::Jet7;
use crate::scalar::Real;
use crate::scalarflat_solver::{linearized_operator, RadialMesh, ScalarFlatProblem, DEFAULT_NODES};

/// Upper bound on the number of octaves sampled towards an unbounded end.
pub const MAX_OCTAVES: usize = 40;

/// Parameters of a weighted `C^{l,α}_{δ,δ∞}` norm.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightedNormSpec<T> {
    pub l: usize,
    pub alpha: T,
    pub delta: T,
    pub delta_inf: T,
    /// Inner reference radius: `δ` applies below it, `δ∞` above it.
    pub r0: T,
    /// Bubble reference radius in the rescaled coordinate `w = z/ε`.
    pub big_r0: T,
    pub samples_per_octave: usize,
    /// Include the sampled Hölder seminorm of the top derivative.
    pub holder: bool,
}

/// Default decay rate: `−1/2` for `m = 2`, `5 − 2m + 1/2` otherwise.
pub fn default_delta(m: usize) -> f64 {
    if m == 2 {
        -0.5
    } else {
        5.0 - 2.0 * m as f64 + 0.5
    }
}

/// Admissible open interval of weights for complex dimension `m`.
pub fn weight_range(m: usize) -> (f64, f64) {
    if m == 2 {
        (-1.0, 0.0)
    } else {
        (4.0 - 2.0 * m as f64, 0.0)
    }
}

impl<T: Real> WeightedNormSpec<T> {
    /// The `C^{4,α}_δ` space used for potentials, with default weights.
    pub fn default_for(m: usize) -> Self {
        let d = T::lit(default_delta(m));
        Self {
            l: 4,
            alpha: T::lit(0.5),
            delta: d,
            delta_inf: d,
            r0: T::one(),
            big_r0: T::one(),
            samples_per_octave: 16,
            holder: true,
        }
    }

    pub fn with_delta(mut self, delta: T) -> Self {
        self.delta = delta;
        self.delta_inf = delta;
        self
    }

    /// The target space `C^{0,α}_{δ−4}` of the scalar-curvature map.
    pub fn curvature_space(&self) -> Self {
        Self {
            l: 0,
            delta: self.delta - T::lit(4.0),
            delta_inf: self.delta_inf - T::lit(4.0),
            ..*self
        }
    }

    /// Checks the sampling parameters.
    pub fn check_sampling(&self) -> Result<()> {
        if self.samples_per_octave < 8 {
            return Err(Error::InsufficientSamples(format!(
                "{} samples per octave, need at least 8",
                self.samples_per_octave
            )));
        }
        if self.holder && !(self.alpha > T::zero() && self.alpha < T::one()) {
            return Err(Error::InvalidInput(format!("alpha = {} not in (0,1)", self.alpha)));
        }
        if !(self.r0 > T::zero() && self.big_r0 > T::zero()) {
            return Err(Error::InvalidInput("reference radii must be positive".into()));
        }
        Ok(())
    }

    /// Checks sampling and that both weights lie in the admissible range.
    pub fn validate(&self, m: usize) -> Result<()> {
        self.check_sampling()?;
        let (lo, hi) = weight_range(m);
        for (name, d) in [("delta", self.delta), ("delta_inf", self.delta_inf)] {
            let d = d.to_f64_lossy();
            if !(d > lo && d < hi) {
                return Err(Error::InvalidInput(format!(
                    "{name} = {d} outside ({lo}, {hi}) for m = {m}"
                )));
            }
        }
        Ok(())
    }
}

/// Radial function that can report derivatives in `ρ = |z|`.
pub trait RadialFunction<T: Real>: Sync {
    /// `[f, ∂_ρ f, …, ∂_ρ^order f]` at `ρ`.
    fn radial_derivatives(&self, rho: T, order: usize) -> Result<Vec<T>>;
}

/// Function given through its jet in `s = ρ²`.
pub struct SJetFunction<F>(pub F);

impl<T: Real, F: Fn(T) -> Result<Jet7<T>> + Sync> RadialFunction<T> for SJetFunction<F> {
    fn radial_derivatives(&self, rho: T, order: usize) -> Result<Vec<T>> {
        if order > 6 {
            return Err(Error::DerivativeUnavailable {
                order,
                reason: "jets carry six derivatives".into(),
            });
        }
        let r = Jet7::variable(rho);
        let s = r * r;
        let outer = (self.0)(s.value())?;
        let d = s.compose(&outer).derivatives();
        Ok(d[..=order].to_vec())
    }
}

/// Function known only by its values as a function of `s = ρ²`.
pub struct ValueFunction<F>(pub F);

impl<T: Real, F: Fn(T) -> Result<T> + Sync> RadialFunction<T> for ValueFunction<F> {
    fn radial_derivatives(&self, rho: T, order: usize) -> Result<Vec<T>> {
        if order > 0 {
            return Err(Error::DerivativeUnavailable {
                order,
                reason: "only values are available".into(),
            });
        }
        Ok(vec![(self.0)(rho * rho)?])
    }
}

/// `c·|z|^p`.
#[derive(Clone, Copy, Debug)]
pub struct PowerFunction<T> {
    pub coefficient: T,
    pub exponent: T,
}

impl<T: Real> RadialFunction<T> for PowerFunction<T> {
    fn radial_derivatives(&self, rho: T, order: usize) -> Result<Vec<T>> {
        let mut out = Vec::with_capacity(order + 1);
        let mut c = self.coefficient;
        let mut p = self.exponent;
        for _ in 0..=order {
            out.push(c * rho.powf(p));
            c = c * p;
            p = p - T::one();
        }
        Ok(out)
    }
}

/// Region over which a weighted norm is taken; radii are in `|z|`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Region<T> {
    /// `inner ≤ |z| ≤ outer` on the base, outer may be infinite.
    Outer { inner: T, outer: T },
    /// A neck annulus measured in the pre-glued metric.
    Annulus { inner: T, outer: T },
    /// `inner ≤ |z| ≤ outer` measured in `w = z/ε`.
    Bubble { epsilon: T, inner: T, outer: T },
}

/// Outcome of a sampled weighted norm.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NormEvaluation<T> {
    pub value: T,
    /// Scale (in the region's own coordinate) where the supremum sits.
    pub argmax_scale: T,
    /// The region was unbounded and sampling stopped at the octave cap.
    pub capped: bool,
    /// The supremum sits on the last sampled scale of a capped region,
    /// so the true norm is likely larger or infinite.
    pub saturated: bool,
}

/// Dyadic scales `lo·2^{k/n}` up to `hi`; returns (scales, capped).
fn dyadic_scales<T: Real>(lo: T, hi: T, per_octave: usize) -> Result<(Vec<T>, bool)> {
    if !(lo > T::zero()) || !(hi >= lo) {
        return Err(Error::InsufficientSamples(format!("empty scale range [{lo}, {hi}]")));
    }
    let cap = lo * T::lit(2.0).powi(MAX_OCTAVES as i32);
    let capped = hi > cap;
    let hi = hi.min(cap);
    let octaves = (hi / lo).log2().to_f64_lossy();
    let steps = (octaves * per_octave as f64 + 1e-9).floor() as usize;
    let step = T::lit(2.0).powf(T::one() / T::from_usize_lossy(per_octave));
    let mut out = Vec::with_capacity(steps + 1);
    let mut r = lo;
    for _ in 0..=steps {
        out.push(r);
        r = r * step;
    }
    Ok((out, capped))
}

/// `C^{l,α}` norm of `y ↦ f(r·y)` on `1 ≤ |y| ≤ 2`, with derivatives
/// scaled by `deriv_scale^j` (equal to `r` on dyadic shells).
fn shell_norm<T: Real>(
    f: &dyn RadialFunction<T>,
    r: T,
    deriv_scale: T,
    spec: &WeightedNormSpec<T>,
) -> Result<T> {
    let n = spec.samples_per_octave;
    let mut top = Vec::with_capacity(n + 1);
    let mut c_part = T::zero();
    for i in 0..=n {
        let y = T::one() + T::from_usize_lossy(i) / T::from_usize_lossy(n);
        let d = f.radial_derivatives(r * y, spec.l)?;
        let mut scale = T::one();
        let mut last = T::zero();
        for dj in d {
            let v = dj * scale;
            if !v.is_finite() {
                return Err(Error::DerivativeUnavailable {
                    order: spec.l,
                    reason: format!("non-finite value at |z| = {}", r * y),
                });
            }
            c_part = c_part.max(v.abs());
            last = v;
            scale = scale * deriv_scale;
        }
        top.push(last);
    }
    if !spec.holder {
        return Ok(c_part);
    }
    // difference quotients of the top derivative at separations 2^{−j}
    let mut semi = T::zero();
    let mut k = 1;
    while k <= n {
        let h = T::from_usize_lossy(k) / T::from_usize_lossy(n);
        let hp = h.powf(spec.alpha);
        for i in 0..=(n - k) {
            semi = semi.max((top[i + k] - top[i]).abs() / hp);
        }
        k *= 2;
    }
    Ok(c_part + semi)
}

/// Sampled weighted norm `sup_r w(r)·‖f(r·)‖_{C^{l,α}(B₂∖B₁)}`.
pub fn weighted_norm<T: Real>(
    f: &dyn RadialFunction<T>,
    region: Region<T>,
    spec: &WeightedNormSpec<T>,
) -> Result<NormEvaluation<T>> {
    spec.check_sampling()?;
    let two = T::lit(2.0);
    // (scale in region coordinate, physical radius, derivative scale, weight)
    let mut shells: Vec<(T, T, T, T)> = Vec::new();
    let capped;
    match region {
        Region::Outer { inner, outer } | Region::Annulus { inner, outer } => {
            let hi = if outer.is_finite() { outer / two } else { T::infinity() };
            let (scales, c) = dyadic_scales(inner, hi.max(inner), spec.samples_per_octave)?;
            capped = c;
            let annulus = matches!(region, Region::Annulus { .. });
            for r in scales {
                let d = if annulus || r < spec.r0 { spec.delta } else { spec.delta_inf };
                shells.push((r, r, r, r.powf(-d)));
            }
        }
        Region::Bubble { epsilon, inner, outer } => {
            if !(epsilon > T::zero()) {
                return Err(Error::DomainError(format!("epsilon = {epsilon} must be positive")));
            }
            let w_in = inner / epsilon;
            let w_out = if outer.is_finite() { outer / epsilon } else { T::infinity() };
            // compact core |w| ≤ 2R₀ in the unweighted norm at scale R₀
            if w_in < spec.big_r0 {
                let (core, _) = dyadic_scales(w_in, spec.big_r0, spec.samples_per_octave)?;
                for r in core {
                    shells.push((r, r * epsilon, spec.big_r0 * epsilon, T::one()));
                }
            }
            let lo = w_in.max(spec.big_r0);
            let hi = if w_out.is_finite() { w_out / two } else { T::infinity() };
            capped = !w_out.is_finite();
            if hi >= lo {
                let (scales, _) = dyadic_scales(lo, hi, spec.samples_per_octave)?;
                for r in scales {
                    shells.push((r, r * epsilon, r * epsilon, r.powf(-spec.delta)));
                }
            }
        }
    }
    if shells.is_empty() {
        return Err(Error::InsufficientSamples("no dyadic shell fits the region".into()));
    }
    let values: Vec<T> = shells
        .par_iter()
        .map(|&(_, r, ds, w)| Ok(w * shell_norm(f, r, ds, spec)?))
        .collect::<Result<_>>()?;
    let (imax, &value) = values
        .iter()
        .enumerate()
        .fold((0, &T::zero()), |best, (i, v)| if *v > *best.1 { (i, v) } else { best });
    let last = shells.len() - 1;
    Ok(NormEvaluation {
        value,
        argmax_scale: shells[imax].0,
        capped,
        saturated: capped && imax == last && value > T::zero(),
    })
}

/// `ε₀ = (1/(2K√C))^{m/(m−1)}`.
pub fn epsilon0(k: f64, c: f64, m: usize) -> Result<f64> {
    if !(k > 0.0 && c > 0.0 && k.is_finite() && c.is_finite()) {
        return Err(Error::DomainError(format!("K = {k}, C = {c} must be positive and finite")));
    }
    if m < 2 {
        return Err(Error::DomainError(format!("complex dimension {m} < 2")));
    }
    Ok((1.0 / (2.0 * k * c.sqrt())).powf(m as f64 / (m as f64 - 1.0)))
}

/// Which discretization measures `‖S(ω̃_ε)‖`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormKind {
    /// Sampled `C^{0,α}_{δ−4}` norm over the neck annulus.
    Sampled,
    /// Discrete target norm of the solver mesh over the whole chart.
    Mesh,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CEstimate {
    pub c: f64,
    pub epsilons: Vec<f64>,
    pub norms: Vec<f64>,
    /// `‖S‖ / r_ε^{4−δ}` per grid point.
    pub ratios: Vec<f64>,
    /// Least-squares slope of `log ‖S‖` against `log r_ε`.
    pub exponent: f64,
}

/// Least-squares slope of `y` against `x`.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

/// `C = max_ε ‖S(ω̃_ε)‖ / r_ε^{4−δ}` over a geometric grid of at least
/// four pre-glued metrics.
pub fn estimate_c<T: Real>(
    family: &[PregluedMetric<T>],
    spec: &WeightedNormSpec<T>,
    kind: NormKind,
) -> Result<CEstimate> {
    if family.len() < 4 {
        return Err(Error::InsufficientSamples(format!(
            "{} epsilon values, need at least 4",
            family.len()
        )));
    }
    let norms: Vec<f64> = family
        .par_iter()
        .map(|pg| {
            let v = match kind {
                NormKind::Sampled => glued_scalar_curvature_norm(pg, spec)?,
                NormKind::Mesh => {
                    let p = ScalarFlatProblem::new(pg, RadialMesh::for_glued(pg, DEFAULT_NODES)?, *spec)?;
                    p.curvature_norm(&vec![T::zero(); p.len()])?
                }
            };
            Ok(v.to_f64_lossy())
        })
        .collect::<Result<_>>()?;
    let delta = spec.delta.to_f64_lossy();
    let radii: Vec<f64> = family.iter().map(|pg| pg.r_epsilon.to_f64_lossy()).collect();
    let ratios: Vec<f64> = norms.iter().zip(&radii).map(|(n, r)| n / r.powf(4.0 - delta)).collect();
    let exponent = if norms.iter().all(|&n| n > 0.0) { loglog_slope(&radii, &norms) } else { f64::NAN };
    Ok(CEstimate {
        c: ratios.iter().fold(0.0f64, |a, &b| a.max(b)),
        epsilons: family.iter().map(|pg| pg.epsilon.to_f64_lossy()).collect(),
        norms,
        ratios,
        exponent,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KEstimate {
    pub k: f64,
    pub nodes: usize,
    /// `max(K_fine/K, K/K_fine)` when a refinement run was made.
    pub refinement_ratio: Option<f64>,
}

/// Largest refinement ratio accepted by [`estimate_k`].
pub const MAX_REFINEMENT_RATIO: f64 = 1.5;

/// `K = sup ‖ψ‖/‖Lψ‖` of the linearization at `ω̃_ε` on `mesh`,
/// optionally compared with the once-refined mesh.
pub fn estimate_k<T: Real>(
    pg: &PregluedMetric<T>,
    spec: &WeightedNormSpec<T>,
    mesh: RadialMesh<T>,
    refine: bool,
) -> Result<KEstimate> {
    let problem = ScalarFlatProblem::new(pg, mesh, *spec)?;
    let k = inverse_norm_of(&problem)?;
    if !refine {
        return Ok(KEstimate { k, nodes: problem.len(), refinement_ratio: None });
    }
    let fine = problem.refined(pg)?;
    let kf = inverse_norm_of(&fine)?;
    let ratio = (kf / k).max(k / kf);
    if ratio > MAX_REFINEMENT_RATIO {
        return Err(Error::MeshTooCoarse(format!("K moved by a factor {ratio:.3} under refinement")));
    }
    Ok(KEstimate { k: k.max(kf), nodes: fine.len(), refinement_ratio: Some(ratio) })
}

fn inverse_norm_of<T: Real>(problem: &ScalarFlatProblem<T>) -> Result<f64> {
    let op = linearized_operator(problem)?;
    Ok(problem.inverse_norm(&op.lu, 17).to_f64_lossy())
}

/// Measured gluing constants at one point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstantsReport {
    pub m: usize,
    pub c_p: f64,
    pub k_p: f64,
    pub epsilon0: f64,
    /// Mesh nodes used for the `K` estimate.
    pub grid_resolution: usize,
    pub refinement_ratio: Option<f64>,
    pub delta: f64,
    pub delta_inf: f64,
    pub epsilons: Vec<f64>,
    pub c_ratios: Vec<f64>,
    pub k_values: Vec<f64>,
    pub exponent_fit: f64,
    pub caveats: Vec<String>,
}

impl ConstantsReport {
    /// `ε₀` recomputed from the stored `K`, `C`.
    pub fn recomputed_epsilon0(&self) -> Result<f64> {
        epsilon0(self.k_p, self.c_p, self.m)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// `C_p` (mesh norm), `K_p` (max over the family) and `ε₀`.
pub fn estimate_constants<T: Real>(
    family: &[PregluedMetric<T>],
    spec: &WeightedNormSpec<T>,
    refine: bool,
) -> Result<ConstantsReport> {
    let m = family.first().map(|pg| pg.m()).ok_or_else(|| {
        Error::InsufficientSamples("empty epsilon grid".into())
    })?;
    spec.validate(m)?;
    let c = estimate_c(family, spec, NormKind::Mesh)?;
    let ks: Vec<KEstimate> = family
        .par_iter()
        .map(|pg| estimate_k(pg, spec, RadialMesh::for_glued(pg, DEFAULT_NODES)?, refine))
        .collect::<Result<_>>()?;
    let k_p = ks.iter().fold(0.0f64, |a, k| a.max(k.k));
    let refinement_ratio = ks.iter().filter_map(|k| k.refinement_ratio).reduce(f64::max);
    let mut caveats = family[0].caveats();
    caveats.push("Hoelder seminorm omitted from mesh norms".into());
    Ok(ConstantsReport {
        m,
        c_p: c.c,
        k_p,
        epsilon0: epsilon0(k_p, c.c, m)?,
        grid_resolution: ks.iter().map(|k| k.nodes).max().unwrap_or(0),
        refinement_ratio,
        delta: spec.delta.to_f64_lossy(),
        delta_inf: spec.delta_inf.to_f64_lossy(),
        epsilons: c.epsilons,
        c_ratios: c.ratios,
        k_values: ks.iter().map(|k| k.k).collect(),
        exponent_fit: c.exponent,
        caveats,
    })
}

/// Caveat carried by every two-point threshold table.
pub const K_PQ_CAVEAT: &str =
    "K_pq replaced by K_p; the two-point inverse bound needs non-radial function spaces";

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TwoPointRow {
    pub r_q: f64,
    pub c_pq: f64,
    pub k_used: f64,
    pub eps0: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TwoPointTable {
    pub rows: Vec<TwoPointRow>,
    pub epsilon0_p: f64,
    pub r_star: Option<f64>,
    /// `ε₀(p,q)` is nondecreasing in `r(q)` from `R*` on.
    pub nondecreasing_beyond_r_star: bool,
    /// `ε₀(p,q) ≥ ε₀(p)(1 − 10⁻³)` at the largest `r(q)`.
    pub limit_reached: bool,
    pub caveats: Vec<String>,
}

impl TwoPointTable {
    pub fn csv(&self) -> String {
        let mut out = String::from("r_q,C_pq,K_used,eps0,caveats\n");
        for r in &self.rows {
            out.push_str(&format!("{},{},{},{},\"{}\"\n", r.r_q, r.c_pq, r.k_used, r.eps0, self.caveats.join("; ")));
        }
        out
    }
}

/// `ε₀(p,q)` over an `r(q)` sweep from the calibrated two-point bounds.
pub fn two_point_epsilon0<T: Real>(
    base: &AleModel<T>,
    s_p: T,
    radii: &[T],
    cal: &TwoPointCalibration,
    k_p: f64,
) -> Result<TwoPointTable> {
    let sweep = two_point_sweep(base, s_p, radii, cal)?;
    let m = base.m;
    let rows: Vec<TwoPointRow> = sweep
        .rows
        .iter()
        .map(|r| Ok(TwoPointRow { r_q: r.r_q, c_pq: r.c_pq_bound, k_used: k_p, eps0: epsilon0(k_p, r.c_pq_bound, m)? }))
        .collect::<Result<_>>()?;
    let eps_p = match sweep.rows.first() {
        Some(r) => epsilon0(k_p, r.c_p_bound, m)?,
        None => return Err(Error::InsufficientSamples("empty r(q) sweep".into())),
    };
    let nondecreasing = match sweep.r_star {
        Some(rs) => rows.iter().filter(|r| r.r_q >= rs).collect::<Vec<_>>().windows(2).all(|w| w[1].eps0 >= w[0].eps0),
        None => false,
    };
    let limit_reached = rows.last().is_some_and(|r| r.eps0 >= eps_p * (1.0 - 1e-3));
    Ok(TwoPointTable {
        rows,
        epsilon0_p: eps_p,
        r_star: sweep.r_star,
        nondecreasing_beyond_r_star: nondecreasing,
        limit_reached,
        caveats: vec![K_PQ_CAVEAT.to_string()],
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c0(delta: f64) -> WeightedNormSpec<f64> {
        WeightedNormSpec { l: 0, holder: false, ..WeightedNormSpec::default_for(2) }.with_delta(delta)
    }

    #[test]
    fn power_on_annulus_family_has_unit_norm() {
        for d in [-0.5, -0.25, -0.9] {
            let f = PowerFunction { coefficient: 1.0, exponent: d };
            let n = weighted_norm(&f, Region::Annulus { inner: 0.01, outer: 1.0 }, &c0(d)).unwrap();
            assert!((n.value - 1.0).abs() < 1e-12, "{}", n.value);
        }
    }

    #[test]
    fn zero_function_has_zero_norm() {
        let f = PowerFunction { coefficient: 0.0, exponent: 1.0 };
        let spec = WeightedNormSpec::<f64>::default_for(3);
        let n = weighted_norm(&f, Region::Outer { inner: 0.1, outer: f64::INFINITY }, &spec).unwrap();
        assert_eq!(n.value, 0.0);
        assert!(!n.saturated);
    }

    #[test]
    fn bubble_growth_is_flagged() {
        let spec = c0(-0.5);
        let region = Region::Bubble { epsilon: 0.1, inner: 0.01, outer: f64::INFINITY };
        let slow = PowerFunction { coefficient: 1.0, exponent: -0.7 };
        let n = weighted_norm(&slow, region, &spec).unwrap();
        assert!(n.value.is_finite() && !n.saturated);
        let fast = PowerFunction { coefficient: 1.0, exponent: -0.3 };
        let n = weighted_norm(&fast, region, &spec).unwrap();
        assert!(n.saturated && n.value > 10.0);
    }

    #[test]
    fn jet_and_power_routes_agree() {
        let spec = WeightedNormSpec::<f64>::default_for(2);
        let p = PowerFunction { coefficient: 2.0, exponent: 3.0 };
        let j = SJetFunction(|s: f64| Ok(Jet7::variable(s).powf(1.5).scale(2.0)));
        let region = Region::Annulus { inner: 0.05, outer: 0.4 };
        let a = weighted_norm(&p, region, &spec).unwrap().value;
        let b = weighted_norm(&j, region, &spec).unwrap().value;
        assert!((a - b).abs() < 1e-10 * a);
    }

    #[test]
    fn values_only_reject_derivatives() {
        let f = ValueFunction(|s: f64| Ok(s));
        let spec = WeightedNormSpec::<f64>::default_for(2);
        assert!(matches!(
            weighted_norm(&f, Region::Annulus { inner: 0.1, outer: 0.2 }, &spec),
            Err(Error::DerivativeUnavailable { .. })
        ));
    }

    #[test]
    fn sampling_floor() {
        let mut spec = c0(-0.5);
        spec.samples_per_octave = 4;
        let f = PowerFunction { coefficient: 1.0, exponent: 0.0 };
        assert!(matches!(
            weighted_norm(&f, Region::Annulus { inner: 0.1, outer: 0.2 }, &spec),
            Err(Error::InsufficientSamples(_))
        ));
    }

    #[test]
    fn epsilon0_examples() {
        assert!((epsilon0(1.0, 1.0, 2).unwrap() - 0.25).abs() < 1e-15);
        assert!((epsilon0(2.0, 4.0, 3).unwrap() - 0.125f64.powf(1.5)).abs() < 1e-15);
        assert!((epsilon0(2.0, 4.0, 3).unwrap() - 0.04419).abs() < 1e-5);
        assert!(epsilon0(1.0, 2.0, 2).unwrap() < epsilon0(1.0, 1.0, 2).unwrap());
        assert!(epsilon0(0.0, 1.0, 2).is_err());
    }

    #[test]
    fn weight_validation() {
        let spec = WeightedNormSpec::<f64>::default_for(3);
        assert!(spec.validate(3).is_ok());
        assert!(spec.with_delta(0.1).validate(3).is_err());
        assert!(WeightedNormSpec::<f64>::default_for(2).validate(2).is_ok());
        assert!(spec.with_delta(-1.5).validate(2).is_err());
    }
}
