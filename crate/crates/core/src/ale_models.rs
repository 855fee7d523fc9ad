//! Model ALE Kähler metrics: flat space, the Burns–Simanca metric on the
//! blow-up of `C^m` at the origin, Eguchi–Hanson, and synthetic fixtures.

use std::sync::{Arc, OnceLock};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jet::Jet7;
use crate::profiles::{Bump, MomentumProfile, TabulatedProfile};
use crate::radial_kahler::{
    eigenvalues_from_jet, eigenvalues_from_log, scalar_curvature_from_log_derivatives, ClosedForm, RadialPotential, RadialProfile,
    SumProfile, TailDescriptor, TailKind,
};
use crate::scalar::Real;

/// An ALE Kähler manifold `(X, Γ, h, ω)` described by a radial potential.
#[derive(Clone, Debug)]
pub struct AleModel<T: Real> {
    pub label: String,
    pub m: usize,
    /// `|Γ|`.
    pub structure_group_order: u32,
    pub potential: RadialPotential<T>,
    /// Radius `R` of the compact region.
    pub compact_radius: T,
    pub scalar_flat: bool,
}

impl<T: Real> AleModel<T> {
    /// Potential tail coefficient `e_X` if declared.
    pub fn declared_coefficient(&self) -> Option<T> {
        self.potential.tail.map(|t| t.lead_coefficient)
    }

    /// Pull-back under `z = λw` with the metric rescaled by `λ²`.
    pub fn rescaled(&self, lambda: T) -> Self {
        Self {
            label: format!("{} (scaled by {})", self.label, lambda),
            potential: self.potential.rescaled(lambda),
            compact_radius: self.compact_radius * lambda,
            ..self.clone()
        }
    }
}

fn check_dimension(m: usize) -> Result<()> {
    if m < 2 {
        return Err(Error::DomainError(format!("complex dimension {m} < 2")));
    }
    Ok(())
}

fn tiny<T: Real>() -> T {
    T::min_positive_value().sqrt()
}

pub fn euclidean<T: Real>(m: usize) -> Result<AleModel<T>> {
    check_dimension(m)?;
    let profile = ClosedForm::flat_plus("euclidean", (T::zero(), T::infinity()), |x: Jet7<T>| {
        x.scale(T::zero())
    });
    Ok(AleModel {
        label: format!("euclidean C^{m}"),
        m,
        structure_group_order: 1,
        potential: RadialPotential::from_profile(profile)
            .with_tail(TailDescriptor::for_dimension(m, T::zero())),
        compact_radius: T::one(),
        scalar_flat: true,
    })
}

/// Volume `∫_E ω^{m−1}` of the exceptional divisor for `ω|_E = τ₀ ω_FS`
/// with `τ₀ = 1`, integrated numerically in an affine chart of `P^{m−1}`.
pub fn exceptional_divisor_volume(m: usize) -> f64 {
    // n!·2^n·|S^{2n−1}|·∫₀^∞ r^{2n−1}(1+r²)^{−n−1} dr, with r = tan θ
    // turning the radial integral into ∫₀^{π/2} sin^{2n−1}θ cos θ dθ.
    let n = m - 1;
    let panels = 4096;
    let h = std::f64::consts::FRAC_PI_2 / panels as f64;
    let f = |th: f64| th.sin().powi(2 * n as i32 - 1) * th.cos();
    let mut simpson = f(0.0) + f(std::f64::consts::FRAC_PI_2);
    for i in 1..panels {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        simpson += w * f(i as f64 * h);
    }
    let radial = simpson * h / 3.0;
    let nf = (1..=n).product::<usize>() as f64;
    nf * 2f64.powi(n as i32) * crate::scalar::unit_sphere_volume::<f64>(2 * n as u32) * radial
}

const CACHE_DIMS: usize = 33;
static TAU0: [OnceLock<std::result::Result<f64, String>>; CACHE_DIMS] =
    [const { OnceLock::new() }; CACHE_DIMS];

/// Momentum `τ₀` on the exceptional divisor giving it volume 1; computed
/// once per dimension.
pub fn unit_volume_tau0(m: usize) -> Result<f64> {
    check_dimension(m)?;
    let compute = || {
        let vol = exceptional_divisor_volume(m);
        let tau0 = vol.powf(-1.0 / (m as f64 - 1.0));
        let exact = 1.0 / (2.0 * std::f64::consts::PI);
        if (tau0 - exact).abs() > 1e-10 * exact {
            Err(format!("divisor volume quadrature gave tau0 = {tau0}, expected {exact}"))
        } else {
            Ok(tau0)
        }
    };
    let r = if m < CACHE_DIMS { TAU0[m].get_or_init(compute).clone() } else { compute() };
    r.map_err(Error::NormalizationFailure)
}

/// Burns–Simanca metric on `Bl₀C^m`, normalized so the exceptional divisor
/// has volume 1.
pub fn burns_simanca<T: Real>(m: usize) -> Result<AleModel<T>> {
    check_dimension(m)?;
    let tau0 = T::lit(unit_volume_tau0(m)?);
    let mi = m as i32;
    let (profile, coefficient): (Arc<dyn RadialProfile<T>>, T) = if m == 2 {
        let p = ClosedForm::flat_plus_log("burns-simanca m=2", (tiny(), T::infinity()), move |_, lx| {
            lx.scale(tau0)
        });
        (Arc::new(p), tau0 + tau0)
    } else {
        let a = T::from_i32(1 - mi).unwrap() * tau0.powi(mi - 1);
        let b = T::from_i32(mi - 2).unwrap() * tau0.powi(mi);
        let p = MomentumProfile::new(m, a, b)?;
        if (p.inner_exponent() - T::one()).abs() > T::lit(1e-8) {
            return Err(Error::OdeSolveFailure("profile does not close smoothly over E".into()));
        }
        let e = p.tail_coefficient();
        (Arc::new(p), e)
    };
    Ok(AleModel {
        label: format!("burns-simanca m={m}"),
        m,
        structure_group_order: 1,
        potential: RadialPotential::new(profile, Some(TailDescriptor::for_dimension(m, coefficient))),
        compact_radius: T::one(),
        scalar_flat: true,
    })
}

/// Eguchi–Hanson on `T*P¹`, `F = ½[g + a² log(s/(a² + g))]`, `g = √(s² + a⁴)`,
/// in the orbifold chart of `C²/Z₂`.
pub fn eguchi_hanson<T: Real>(a: T) -> Result<AleModel<T>> {
    if !(a > T::zero()) {
        return Err(Error::DomainError(format!("Eguchi-Hanson parameter a = {a} must be positive")));
    }
    // Same function in first-integral form (A = 0, B = −a⁴/4), which keeps
    // p₂ = s²/g accurate near the bolt where the explicit formula cancels.
    let a4 = (a * a) * (a * a);
    let profile = MomentumProfile::new(2, T::zero(), -a4 / T::lit(4.0))?;
    let tail = TailDescriptor {
        lead_coefficient: T::zero(),
        kind: TailKind::Log,
        remainder_order: T::lit(4.0),
        dimension: 2,
    };
    Ok(AleModel {
        label: format!("eguchi-hanson a={a}"),
        m: 2,
        structure_group_order: 2,
        potential: RadialPotential::from_profile(profile).with_tail(tail),
        compact_radius: a,
        scalar_flat: true,
    })
}

/// `F = s/2 + e·tail(s) + bump(s)` on `s ≥ 1`.
pub fn synthetic_tail<T: Real>(m: usize, e: T, bump: Bump<T>) -> Result<AleModel<T>> {
    check_dimension(m)?;
    let tail = TailDescriptor::for_dimension(m, e);
    let kind = tail.kind;
    // keep the tail term at most half of the flat eigenvalues
    let s0 = match kind {
        TailKind::Log => T::lit(2.0) * e.abs(),
        TailKind::Power => {
            let k = T::from_usize_lossy((m - 2) * (m - 2));
            (T::lit(4.0) * e.abs() * k).powf(T::from_usize_lossy(m - 1).recip())
        }
    }
    .max(T::one());
    let base = ClosedForm::flat_plus_log("synthetic tail", (s0, T::infinity()), move |x, lx| {
        let basis = match kind {
            TailKind::Log => lx.scale(T::lit(0.5)),
            TailKind::Power => x.powf(T::from_i32(2 - m as i32).unwrap()),
        };
        basis.scale(e)
    });
    let profile = SumProfile { a: Arc::new(base), b: Arc::new(bump) };
    let (_, hi) = bump.support();
    let reach = (T::lit(4.0) * s0).max(hi * T::lit(2.0));
    let model = AleModel {
        label: format!("synthetic m={m} e={e}"),
        m,
        structure_group_order: 1,
        potential: RadialPotential::new(Arc::new(profile), Some(tail)),
        compact_radius: s0.sqrt(),
        scalar_flat: e == T::zero() && bump.amplitude == T::zero(),
    };
    // positivity on the region where the bump and the tail are large
    let samples = 400;
    let start = s0;
    for i in 0..=samples {
        let s = start * (reach / start).powf(T::from_usize_lossy(i) / T::from_usize_lossy(samples));
        eigenvalues_from_jet(&model.potential.jet(s)?, s)?;
    }
    Ok(model)
}

/// Outcome of sampled model validation.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ModelValidation {
    pub label: String,
    pub samples: usize,
    pub max_scalar_curvature: f64,
    /// `sup |g − δ/2|·s^{τ/2}` over the outer window.
    pub decay_constant: f64,
    /// `sup |ψ' − tail'|·s^{(2m−1)/2}` over the outer window.
    pub tail_remainder_bound: Option<f64>,
    pub passed: bool,
}

/// Check positivity, decay to `δ/2`, tail consistency and scalar-flatness
/// on log-spaced samples.
pub fn validate_model<T: Real>(model: &AleModel<T>) -> Result<ModelValidation> {
    let (lo, hi) = model.potential.domain();
    let r2 = model.compact_radius * model.compact_radius;
    let inner = lo.max(r2 * T::lit(1e-3)).max(tiny());
    let outer = hi.min(r2 * T::lit(1e6));
    let samples = 100;
    let mut max_s = 0.0f64;
    let mut decay = 0.0f64;
    let mut tail_bound: Option<f64> = model.potential.tail.map(|_| 0.0);
    let tau = model
        .potential
        .tail
        .map(|t| t.remainder_order)
        .unwrap_or_else(|| T::from_usize_lossy(2 * model.m - 2));
    for i in 0..samples {
        let s = inner * (outer / inner).powf(T::from_usize_lossy(i) / T::from_usize_lossy(samples - 1));
        let p = model.potential.log_derivatives(s)?;
        let eig = eigenvalues_from_log(&p, s)?;
        let sc = scalar_curvature_from_log_derivatives(&p, model.m, s)?;
        max_s = max_s.max(sc.to_f64_lossy().abs());
        if s >= r2 {
            let half = T::lit(0.5);
            let dev = (eig.tangential - half).abs().max((eig.radial - half).abs());
            decay = decay.max((dev * s.powf(tau / T::lit(2.0))).to_f64_lossy());
        }
        if let (Some(t), Some(b)) = (model.potential.tail, tail_bound.as_mut()) {
            if s >= r2 * T::lit(1e4) {
                let psi = model.potential.deviation(s)?;
                let basis = TailDescriptor::basis_jet(t.kind, model.m, s);
                let rem = psi.derivative(1) - t.lead_coefficient * basis.derivative(1);
                let w = s.powf(T::from_usize_lossy(2 * model.m - 1) / T::lit(2.0));
                *b = b.max((rem.abs() * w).to_f64_lossy());
            }
        }
    }
    let flat_ok = !model.scalar_flat || max_s < 1e-8;
    let decay_ok = decay.is_finite();
    let tail_ok = tail_bound.is_none_or(|b| b.is_finite() && b < 1e3);
    Ok(ModelValidation {
        label: model.label.clone(),
        samples,
        max_scalar_curvature: max_s,
        decay_constant: decay,
        tail_remainder_bound: tail_bound,
        passed: flat_ok && decay_ok && tail_ok,
    })
}

/// Serialized model: `{label, m, gamma_order, tail, profile}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelDocument {
    pub label: String,
    pub m: usize,
    pub gamma_order: u32,
    pub compact_radius: f64,
    pub scalar_flat: bool,
    pub tail: Option<TailDocument>,
    pub profile: ProfileDocument,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailDocument {
    pub kind: TailKind,
    pub coefficient: f64,
    pub tau: f64,
}

/// Sampled profile. `values` holds `F`, `deviation` holds `F − s/2`, and
/// `derivs[i]` holds the derivatives of order 1..=6 of `F − s/2` at `grid[i]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProfileDocument {
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
    pub deviation: Vec<f64>,
    pub derivs: Vec<Vec<f64>>,
}

/// Sample a model on a log grid `[s_lo, s_hi]` with `per_octave` nodes per doubling.
pub fn to_document<T: Real>(
    model: &AleModel<T>,
    s_lo: T,
    s_hi: T,
    per_octave: usize,
) -> Result<ModelDocument> {
    if !(s_lo > T::zero() && s_hi > s_lo) || per_octave == 0 {
        return Err(Error::InvalidInput("sampling window must satisfy 0 < s_lo < s_hi".into()));
    }
    let octaves = (s_hi / s_lo).log2().to_f64_lossy();
    let n = (octaves * per_octave as f64).ceil() as usize + 1;
    let mut doc = ProfileDocument { grid: vec![], values: vec![], deviation: vec![], derivs: vec![] };
    for i in 0..n {
        let s = (s_lo * (s_hi / s_lo).powf(T::from_usize_lossy(i) / T::from_usize_lossy(n - 1)))
            .min(s_hi);
        let psi = model.potential.deviation(s)?;
        let d = psi.derivatives();
        doc.grid.push(s.to_f64_lossy());
        doc.values.push((psi.value() + s / T::lit(2.0)).to_f64_lossy());
        doc.deviation.push(d[0].to_f64_lossy());
        doc.derivs.push(d[1..].iter().map(|x| x.to_f64_lossy()).collect());
    }
    Ok(ModelDocument {
        label: model.label.clone(),
        m: model.m,
        gamma_order: model.structure_group_order,
        compact_radius: model.compact_radius.to_f64_lossy(),
        scalar_flat: model.scalar_flat,
        tail: model.potential.tail.map(|t| TailDocument {
            kind: t.kind,
            coefficient: t.lead_coefficient.to_f64_lossy(),
            tau: t.remainder_order.to_f64_lossy(),
        }),
        profile: doc,
    })
}

/// Rebuild a model from its document as a tabulated profile.
pub fn from_document<T: Real>(doc: &ModelDocument) -> Result<AleModel<T>> {
    check_dimension(doc.m)?;
    let p = &doc.profile;
    if p.derivs.len() != p.grid.len() || p.deviation.len() != p.grid.len() {
        return Err(Error::InvalidInput("profile arrays differ in length".into()));
    }
    let jets = p
        .deviation
        .iter()
        .zip(&p.derivs)
        .map(|(&v, d)| {
            let mut all = vec![T::lit(v)];
            all.extend(d.iter().map(|&x| T::lit(x)));
            Jet7::from_derivatives(&all)
        })
        .collect();
    let grid = p.grid.iter().map(|&s| T::lit(s)).collect();
    let tab = TabulatedProfile::new(grid, jets)?;
    let tail = doc.tail.as_ref().map(|t| TailDescriptor {
        lead_coefficient: T::lit(t.coefficient),
        kind: t.kind,
        remainder_order: T::lit(t.tau),
        dimension: doc.m,
    });
    Ok(AleModel {
        label: doc.label.clone(),
        m: doc.m,
        structure_group_order: doc.gamma_order,
        potential: RadialPotential::new(Arc::new(tab), tail),
        compact_radius: T::lit(doc.compact_radius),
        scalar_flat: doc.scalar_flat,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::radial_kahler::{curvature_size, metric_eigenvalues, scalar_curvature};

    #[test]
    fn euclidean_is_flat_with_zero_tail() {
        for m in 2..5 {
            let e = euclidean::<f64>(m).unwrap();
            let eig = metric_eigenvalues(&e.potential, 7.0).unwrap();
            assert_eq!((eig.tangential, eig.radial), (0.5, 0.5));
            assert_eq!(scalar_curvature(&e.potential, m, 3.0).unwrap(), 0.0);
            assert_eq!(e.declared_coefficient(), Some(0.0));
            assert!(validate_model(&e).unwrap().passed);
        }
    }

    #[test]
    fn divisor_normalization_is_one_over_two_pi() {
        for m in 2..7 {
            let t = unit_volume_tau0(m).unwrap();
            assert!((t - 1.0 / (2.0 * std::f64::consts::PI)).abs() < 1e-12);
        }
    }

    #[test]
    fn divisor_area_oracle_for_m2() {
        // independent check: ∫_{C} 2k·2/(1+|ζ|²)² dA over the chart, by polar midpoint sums
        let k = unit_volume_tau0(2).unwrap();
        let n = 200_000;
        let mut acc = 0.0;
        for i in 0..n {
            // ρ = tan θ on [0, π/2)
            let th = (i as f64 + 0.5) / n as f64 * std::f64::consts::FRAC_PI_2;
            let rho = th.tan();
            let drho = 1.0 / th.cos().powi(2);
            acc += 2.0 * std::f64::consts::PI * rho * k * 2.0 / (1.0 + rho * rho).powi(2) * drho;
        }
        acc *= std::f64::consts::FRAC_PI_2 / n as f64;
        assert!((acc - 1.0).abs() < 1e-6, "area {acc}");
    }

    #[test]
    fn burns_simanca_is_scalar_flat() {
        for m in 2..5 {
            let bs = burns_simanca::<f64>(m).unwrap();
            let v = validate_model(&bs).unwrap();
            assert!(v.passed, "{v:?}");
        }
        let bs3 = burns_simanca::<f64>(3).unwrap();
        assert!(bs3.declared_coefficient().unwrap() < 0.0);
    }

    #[test]
    fn eguchi_hanson_properties() {
        let eh = eguchi_hanson(1.0f64).unwrap();
        assert_eq!(eh.structure_group_order, 2);
        let v = validate_model(&eh).unwrap();
        assert!(v.passed && v.max_scalar_curvature < 1e-8, "{v:?}");
        let near = curvature_size(&eh.potential, 2, 10.0).unwrap();
        let far = curvature_size(&eh.potential, 2, 1000.0).unwrap();
        assert!(near > far);
        let c100 = curvature_size(&eh.potential, 2, 100.0).unwrap();
        assert!(c100 < near);
    }

    #[test]
    fn synthetic_tail_rejects_negative_metric() {
        let bump = Bump { amplitude: -5.0, center: 2.0, half_width: 0.5 };
        assert!(matches!(synthetic_tail(3, 0.0f64, bump), Err(Error::NonPositiveMetric { .. })));
        let ok = synthetic_tail(3, 0.0f64, Bump::zero()).unwrap();
        assert!(ok.scalar_flat);
    }

    #[test]
    fn document_roundtrip() {
        let bs = burns_simanca::<f64>(3).unwrap();
        let doc = to_document(&bs, 1e-2, 1e4, 64).unwrap();
        let json = serde_json::to_string(&doc).unwrap();
        let back: ModelDocument = serde_json::from_str(&json).unwrap();
        assert_eq!(back, doc);
        let model = from_document::<f64>(&back).unwrap();
        for &s in &[0.03, 1.0, 77.0] {
            let a = model.potential.jet(s).unwrap();
            let b = bs.potential.jet(s).unwrap();
            for k in 0..3 {
                assert!((a.derivative(k) - b.derivative(k)).abs() < 1e-9 * (1.0 + b.derivative(k).abs()));
            }
        }
    }
}
