//! Pre-glued potentials: a base chart around the blow-up point and an
//! `ε`-rescaled bubble, interpolated by a cutoff on the neck annulus
//! `r_ε ≤ |z| ≤ 2r_ε`.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ale_models::AleModel;
use crate::error::{Error, Result};
use crate::jet::{Jet, Jet7};
use crate::radial_kahler::{
    curvature_size, eigenvalues_from_log, scalar_curvature, ClosedForm, RadialPotential,
    RadialProfile, TailDescriptor, TailKind,
};
use crate::scalar::Real;
use crate::weighted_analysis::{weighted_norm, Region, ValueFunction, WeightedNormSpec};

/// Caveat attached to every complex-dimension-two gluing report.
pub const GAMMA_CAVEAT: &str =
    "m = 2: log-gluing without the Gamma(z) correction term; the correction is not modeled";

/// Shape of a cutoff `γ` with `γ = 0` on `[0,1]` and `γ = 1` on `[2,∞)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CutoffShape {
    /// Degree-9 smoothstep, `C⁴` at both ends.
    Smoothstep9,
    /// `e^{−1/y} / (e^{−1/y} + e^{−1/(1−y)})`, smooth at both ends.
    Exponential,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CutoffProfile {
    pub shape: CutoffShape,
    /// Upper bounds for `sup |γ^{(k)}|`, `k = 0..=4`.
    pub derivative_bounds: [f64; 5],
}

impl Default for CutoffProfile {
    fn default() -> Self {
        Self::new(CutoffShape::Smoothstep9)
    }
}

impl CutoffProfile {
    pub fn new(shape: CutoffShape) -> Self {
        let mut c = Self { shape, derivative_bounds: [0.0; 5] };
        let n = 4000;
        let mut b = [0.0f64; 5];
        for i in 0..=n {
            let x = 1.0 + i as f64 / n as f64;
            let d = c.jet(Jet7::<f64>::variable(x)).derivatives();
            for k in 0..5 {
                b[k] = b[k].max(d[k].abs());
            }
        }
        for v in b.iter_mut() {
            *v *= 1.01;
        }
        c.derivative_bounds = b;
        c
    }

    pub fn value<T: Real>(&self, x: T) -> T {
        self.jet(Jet7::constant(x)).value()
    }

    /// `γ` composed with a jet `x`.
    pub fn jet<T: Real, const N: usize>(&self, x: Jet<T, N>) -> Jet<T, N> {
        let x0 = x.value();
        if x0 <= T::one() {
            return Jet::constant(T::zero());
        }
        if x0 >= T::lit(2.0) {
            return Jet::constant(T::one());
        }
        let y = x - T::one();
        match self.shape {
            CutoffShape::Smoothstep9 => {
                // y⁵(126 − 420y + 540y² − 315y³ + 70y⁴)
                let coeffs = [126.0, -420.0, 540.0, -315.0, 70.0];
                let mut p = Jet::constant(T::lit(coeffs[4]));
                for &c in coeffs[..4].iter().rev() {
                    p = p * y + T::lit(c);
                }
                p * y.powi(5)
            }
            CutoffShape::Exponential => {
                let a = (-y.recip()).exp();
                let b = (-(Jet::constant(T::one()) - y).recip()).exp();
                a / (a + b)
            }
        }
    }
}

/// `r_ε = ε^{(m−1)/m}`.
pub fn r_epsilon<T: Real>(eps: T, m: usize) -> Result<T> {
    if !(eps > T::zero() && eps < T::one()) {
        return Err(Error::DomainError(format!("epsilon = {eps} not in (0,1)")));
    }
    if m < 2 {
        return Err(Error::DomainError(format!("complex dimension {m} < 2")));
    }
    Ok(eps.powf(T::from_usize_lossy(m - 1) / T::from_usize_lossy(m)))
}

/// Scale (in `s`) beyond which a point chart relaxes to the flat metric.
pub const CHART_SCALE: f64 = 4.0;

/// Radial chart centred at a point of `base` at `s = s_p`:
/// `F = s/2 + κ s² (1 + s/σ)^{−m}` with `κ = c(s_p)/s_p` from the local
/// curvature size of the base.
pub fn point_chart<T: Real>(base: &AleModel<T>, s_p: T) -> Result<AleModel<T>> {
    let c = curvature_size(&base.potential, base.m, s_p)?;
    chart_with_curvature(base.m, c / s_p, &format!("chart of {} at s={}", base.label, s_p))
}

/// Point chart with an explicit quartic coefficient `κ ≥ 0`.
pub fn chart_with_curvature<T: Real>(m: usize, kappa: T, label: &str) -> Result<AleModel<T>> {
    if m < 2 {
        return Err(Error::DomainError(format!("complex dimension {m} < 2")));
    }
    if !(kappa >= T::zero()) {
        return Err(Error::DomainError(format!("chart curvature {kappa} must be nonnegative")));
    }
    let sigma = T::lit(CHART_SCALE);
    let mi = m as i32;
    let profile = ClosedForm::flat_plus(label.to_string(), (T::zero(), T::infinity()), move |x| {
        let d = (x / sigma + T::one()).powi(-mi);
        x * x * d * kappa
    });
    let tail = if m == 2 {
        TailDescriptor { lead_coefficient: T::zero(), kind: TailKind::Log, remainder_order: T::lit(2.0), dimension: 2 }
    } else {
        TailDescriptor::for_dimension(m, kappa * sigma.powi(mi))
    };
    let model = AleModel {
        label: label.to_string(),
        m,
        structure_group_order: 1,
        potential: RadialPotential::from_profile(profile).with_tail(tail),
        compact_radius: sigma.sqrt(),
        scalar_flat: kappa == T::zero(),
    };
    for i in 0..=400 {
        let s = sigma * T::lit(10.0).powf(T::lit(-4.0 + 8.0 * i as f64 / 400.0));
        eigenvalues_from_log(&model.potential.log_derivatives(s)?, s)?;
    }
    Ok(model)
}

/// How the bubble enters the neck annulus.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GluingVariant {
    /// Blend against the full rescaled bubble potential.
    Standard,
    /// `m = 2`: blend against `s/2 + ε²(e/2) log(s/ε²)`, the bubble's
    /// logarithmic tail.
    LogCorrected,
}

#[derive(Debug)]
struct GluedProfile<T: Real> {
    base: RadialPotential<T>,
    bubble: RadialPotential<T>,
    /// Potential blended against the base on the annulus.
    neck: RadialPotential<T>,
    r_eps: T,
    cutoff: CutoffProfile,
    domain: (T, T),
}

enum Piece {
    Bubble,
    Neck,
    Base,
}

impl<T: Real> GluedProfile<T> {
    fn piece(&self, s: T) -> Piece {
        let r2 = self.r_eps * self.r_eps;
        if s <= r2 {
            Piece::Bubble
        } else if s >= T::lit(4.0) * r2 {
            Piece::Base
        } else {
            Piece::Neck
        }
    }

    fn gamma_s(&self, s: T) -> Jet7<T> {
        self.cutoff.jet(Jet7::variable(s).sqrt() / self.r_eps)
    }

    fn gamma_t(&self, s: T) -> Jet7<T> {
        // |z|/r_ε = e^{t/2}/r_ε
        let t = Jet7::variable(s.ln());
        self.cutoff.jet(t.scale(T::lit(0.5)).exp() / self.r_eps)
    }

    fn blend(g: Jet7<T>, outer: Jet7<T>, inner: Jet7<T>) -> Jet7<T> {
        g * outer + (Jet7::constant(T::one()) - g) * inner
    }

    fn neck_jet(&self, s: T) -> Result<Jet7<T>> {
        Ok(Self::blend(self.gamma_s(s), self.base.jet(s)?, self.neck.jet(s)?))
    }

    fn neck_deviation(&self, s: T) -> Result<Jet7<T>> {
        Ok(Self::blend(self.gamma_s(s), self.base.deviation(s)?, self.neck.deviation(s)?))
    }

    fn neck_log_jet(&self, s: T) -> Result<Jet7<T>> {
        Ok(Self::blend(self.gamma_t(s), self.base.log_jet(s)?, self.neck.log_jet(s)?))
    }
}

impl<T: Real> RadialProfile<T> for GluedProfile<T> {
    fn jet(&self, s: T) -> Result<Jet7<T>> {
        match self.piece(s) {
            Piece::Bubble => self.bubble.jet(s),
            Piece::Base => self.base.jet(s),
            Piece::Neck => self.neck_jet(s),
        }
    }

    fn deviation(&self, s: T) -> Result<Jet7<T>> {
        match self.piece(s) {
            Piece::Bubble => self.bubble.deviation(s),
            Piece::Base => self.base.deviation(s),
            Piece::Neck => self.neck_deviation(s),
        }
    }

    fn log_jet(&self, s: T) -> Result<Jet7<T>> {
        match self.piece(s) {
            Piece::Bubble => self.bubble.log_jet(s),
            Piece::Base => self.base.log_jet(s),
            Piece::Neck => self.neck_log_jet(s),
        }
    }

    fn domain(&self) -> (T, T) {
        self.domain
    }
}

/// Pre-glued metric `ω̃_ε` on the blow-up chart.
#[derive(Clone, Debug)]
pub struct PregluedMetric<T: Real> {
    pub base: AleModel<T>,
    pub bubble: AleModel<T>,
    pub epsilon: T,
    pub r_epsilon: T,
    pub cutoff: CutoffProfile,
    pub variant: GluingVariant,
    pub potential: RadialPotential<T>,
    glued: Arc<GluedProfile<T>>,
}

/// Builds `ω̃_ε` with the standard variant.
pub fn preglue<T: Real>(
    base: &AleModel<T>,
    bubble: &AleModel<T>,
    eps: T,
    cutoff: CutoffProfile,
) -> Result<PregluedMetric<T>> {
    preglue_with(base, bubble, eps, cutoff, GluingVariant::Standard)
}

pub fn preglue_with<T: Real>(
    base: &AleModel<T>,
    bubble: &AleModel<T>,
    eps: T,
    cutoff: CutoffProfile,
    variant: GluingVariant,
) -> Result<PregluedMetric<T>> {
    if base.m != bubble.m {
        return Err(Error::IncompatibleDimensions(format!(
            "base m = {}, bubble m = {}",
            base.m, bubble.m
        )));
    }
    let m = base.m;
    let r = r_epsilon(eps, m)?;
    let r2 = r * r;
    let four = T::lit(4.0);
    let (blo, bhi) = base.potential.domain();
    if blo > T::zero() {
        return Err(Error::DomainError(format!(
            "base potential starts at s = {blo}; glue into a point chart instead"
        )));
    }
    check_quartic_vanishing(&base.potential, r2)?;
    let scaled = bubble.potential.rescaled(eps);
    let (slo, shi) = scaled.domain();
    if shi < four * r2 || bhi < four * r2 {
        return Err(Error::DomainError("pieces do not cover the neck annulus".into()));
    }
    let neck = match variant {
        GluingVariant::Standard => scaled.clone(),
        GluingVariant::LogCorrected => {
            if m != 2 {
                return Err(Error::InvalidInput("log-corrected gluing needs m = 2".into()));
            }
            let e = bubble.declared_coefficient().unwrap_or_else(T::zero);
            let shift = (eps * eps).ln();
            let half = e * eps * eps / T::lit(2.0);
            let log_tail = ClosedForm::flat_plus_log("log tail", (T::zero(), T::infinity()), move |_, lx| {
                (lx - shift).scale(half)
            });
            let neck = RadialPotential::from_profile(log_tail);
            let a = scaled.deviation(r2)?.derivatives();
            let b = neck.deviation(r2)?.derivatives();
            for k in 0..5 {
                if (a[k] - b[k]).abs() > T::lit(1e-8) * (T::one() + a[k].abs()) {
                    return Err(Error::InvalidInput(
                        "log-corrected gluing needs a bubble equal to its logarithmic tail at the seam".into(),
                    ));
                }
            }
            neck
        }
    };
    let glued = Arc::new(GluedProfile {
        base: base.potential.clone(),
        bubble: scaled,
        neck,
        r_eps: r,
        cutoff,
        domain: (slo, bhi),
    });
    let potential = RadialPotential::new(glued.clone(), base.potential.tail);
    let pg = PregluedMetric {
        base: base.clone(),
        bubble: bubble.clone(),
        epsilon: eps,
        r_epsilon: r,
        cutoff,
        variant,
        potential,
        glued,
    };
    pg.check_positivity()?;
    Ok(pg)
}

fn check_quartic_vanishing<T: Real>(base: &RadialPotential<T>, r2: T) -> Result<()> {
    let q = |s: T| -> Result<T> { Ok(base.deviation(s)?.value().abs() / (s * s)) };
    let near = q(r2 * T::lit(1e-2))?;
    let nearer = q(r2 * T::lit(1e-4))?;
    if !(nearer <= T::lit(10.0) * near + T::min_positive_value()) {
        return Err(Error::DomainError(
            "base potential is not s/2 + O(s^2) at the gluing point".into(),
        ));
    }
    Ok(())
}

impl<T: Real> PregluedMetric<T> {
    pub fn m(&self) -> usize {
        self.base.m
    }

    /// The neck annulus `[r_ε², 4r_ε²]` in `s`.
    pub fn annulus(&self) -> (T, T) {
        let r2 = self.r_epsilon * self.r_epsilon;
        (r2, T::lit(4.0) * r2)
    }

    /// The glued metric as a model (not scalar-flat in general).
    pub fn model(&self) -> AleModel<T> {
        AleModel {
            label: format!("{} # {} (eps={})", self.base.label, self.bubble.label, self.epsilon),
            m: self.m(),
            structure_group_order: self.base.structure_group_order,
            potential: self.potential.clone(),
            compact_radius: self.base.compact_radius.max(self.r_epsilon + self.r_epsilon),
            scalar_flat: false,
        }
    }

    pub fn caveats(&self) -> Vec<String> {
        if self.m() == 2 {
            vec![GAMMA_CAVEAT.to_string()]
        } else {
            Vec::new()
        }
    }

    pub fn scalar_curvature(&self, s: T) -> Result<T> {
        scalar_curvature(&self.potential, self.m(), s)
    }

    /// Potential of the base chart alone.
    pub fn base_potential(&self) -> &RadialPotential<T> {
        &self.glued.base
    }

    /// Share of the base chart's own curvature kept at `s`: 1 outside the
    /// neck, the gluing cutoff across it, 0 on the bubble.
    pub fn base_weight(&self, s: T) -> T {
        let g = &self.glued;
        match g.piece(s) {
            Piece::Bubble => T::zero(),
            Piece::Base => T::one(),
            Piece::Neck => g.gamma_t(s).value(),
        }
    }

    fn check_positivity(&self) -> Result<()> {
        let (a, b) = self.annulus();
        let lo = a / T::lit(4.0);
        let hi = b * T::lit(4.0);
        let n = 400;
        for i in 0..=n {
            let s = lo * (hi / lo).powf(T::from_usize_lossy(i) / T::from_usize_lossy(n));
            eigenvalues_from_log(&self.potential.log_derivatives(s)?, s)?;
        }
        Ok(())
    }

    /// Largest relative mismatch of the derivatives through order four
    /// between the neck formula and the adjacent pieces at both seams.
    pub fn seam_mismatch(&self) -> Result<T> {
        let (a, b) = self.annulus();
        let g = &self.glued;
        let mut worst = T::zero();
        for (s, piece) in [(a, g.bubble.deviation(a)?), (b, g.base.deviation(b)?)] {
            let neck = g.neck_deviation(s)?.derivatives();
            let p = piece.derivatives();
            let scale = (0..5).fold(T::zero(), |acc, k| acc.max(p[k].abs() * s.powi(k as i32)));
            for k in 0..5 {
                let d = (neck[k] - p[k]).abs() * s.powi(k as i32);
                worst = worst.max(d / (scale + s));
            }
        }
        Ok(worst)
    }
}

/// Weighted `C^{0,α}_{δ−4}` norm of `S(ω̃_ε)` over the neck annulus.
pub fn glued_scalar_curvature_norm<T: Real>(
    pg: &PregluedMetric<T>,
    spec: &WeightedNormSpec<T>,
) -> Result<T> {
    spec.validate(pg.m())?;
    let f = ValueFunction(|s: T| pg.scalar_curvature(s));
    let r = pg.r_epsilon;
    Ok(weighted_norm(&f, Region::Annulus { inner: r, outer: r + r }, &spec.curvature_space())?.value)
}

/// Universal constants of the two-point bound `C_{p,q} ≤ C₁ (max(c_p, c_q) + c)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TwoPointCalibration {
    pub c1: f64,
    pub c: f64,
}

impl TwoPointCalibration {
    /// From the flat-base constant `C₁c` and one curved measurement
    /// `C_p = C₁(c_p + c)`.
    pub fn from_measurements(c_flat: f64, c_curved: f64, c_p: f64) -> Result<Self> {
        if !(c_p > 0.0) || !(c_curved > c_flat) || !(c_flat >= 0.0) {
            return Err(Error::FitIllConditioned(format!(
                "calibration needs C_p = {c_curved} > C_flat = {c_flat} >= 0 and c_p = {c_p} > 0"
            )));
        }
        let c1 = (c_curved - c_flat) / c_p;
        Ok(Self { c1, c: c_flat / c1 })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TwoPointConstants {
    pub r_q: f64,
    pub c_p: f64,
    pub c_q: f64,
    pub c_pq_bound: f64,
    pub c_p_bound: f64,
}

/// Curvature constants at `p` (chart centre `s_p`) and at `q` (radius
/// `r_q`), with the calibrated bounds.
pub fn two_point_constants<T: Real>(
    base: &AleModel<T>,
    s_p: T,
    r_q: T,
    cal: &TwoPointCalibration,
) -> Result<TwoPointConstants> {
    if !(r_q > base.compact_radius) {
        return Err(Error::RadiusTooSmall {
            radius: r_q.to_f64_lossy(),
            minimum: base.compact_radius.to_f64_lossy(),
        });
    }
    let c_p = curvature_size(&base.potential, base.m, s_p)?.to_f64_lossy();
    let c_q = curvature_size(&base.potential, base.m, r_q * r_q)?.to_f64_lossy();
    Ok(TwoPointConstants {
        r_q: r_q.to_f64_lossy(),
        c_p,
        c_q,
        c_pq_bound: cal.c1 * (c_p.max(c_q) + cal.c),
        c_p_bound: cal.c1 * (c_p + cal.c),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TwoPointSweep {
    pub rows: Vec<TwoPointConstants>,
    /// Smallest swept radius from which on `c_q ≤ c_p` and
    /// `C_pq ≤ C_p` hold for every larger swept radius.
    pub r_star: Option<f64>,
}

pub fn two_point_sweep<T: Real>(
    base: &AleModel<T>,
    s_p: T,
    radii: &[T],
    cal: &TwoPointCalibration,
) -> Result<TwoPointSweep> {
    if radii.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidInput("r(q) values must be strictly increasing".into()));
    }
    let rows: Vec<TwoPointConstants> = radii
        .par_iter()
        .map(|&r| two_point_constants(base, s_p, r, cal))
        .collect::<Result<_>>()?;
    let mut r_star = None;
    for row in rows.iter().rev() {
        if row.c_q <= row.c_p && row.c_pq_bound <= row.c_p_bound {
            r_star = Some(row.r_q);
        } else {
            break;
        }
    }
    Ok(TwoPointSweep { rows, r_star })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ale_models::{burns_simanca, euclidean, eguchi_hanson};

    #[test]
    fn r_epsilon_examples() {
        assert!((r_epsilon(0.01f64, 2).unwrap() - 0.1).abs() < 1e-15);
        assert!((r_epsilon(0.001f64, 3).unwrap() - 0.01).abs() < 1e-15);
        let r = r_epsilon(1.0 - 1e-12f64, 4).unwrap();
        assert!(r < 1.0 && r > 0.999);
        assert!(r_epsilon(1.0f64, 2).is_err());
        assert!(r_epsilon(0.0f64, 2).is_err());
    }

    #[test]
    fn cutoffs_are_admissible() {
        for shape in [CutoffShape::Smoothstep9, CutoffShape::Exponential] {
            let c = CutoffProfile::new(shape);
            assert_eq!(c.value(0.5f64), 0.0);
            assert_eq!(c.value(1.0f64), 0.0);
            assert_eq!(c.value(2.0f64), 1.0);
            let mut last = 0.0;
            for i in 0..=1000 {
                let x = 1.0 + i as f64 / 1000.0;
                let d = c.jet(Jet7::variable(x)).derivatives();
                assert!(d[0] >= last - 1e-15 && (0.0..=1.0).contains(&d[0]));
                last = d[0];
                for k in 0..5 {
                    assert!(d[k].abs() <= c.derivative_bounds[k]);
                }
            }
        }
        let s = CutoffProfile::default();
        // C⁴ matching: derivatives 1..4 vanish at both ends
        for x in [1.0 + 1e-12, 2.0 - 1e-12] {
            let d = s.jet(Jet7::<f64>::variable(x)).derivatives();
            for k in 1..5 {
                assert!(d[k].abs() < 1e-6, "{k} {}", d[k]);
            }
        }
    }

    fn eh_setup(eps: f64) -> PregluedMetric<f64> {
        let eh = eguchi_hanson(1.0).unwrap();
        let chart = point_chart(&eh, 2.0).unwrap();
        preglue(&chart, &burns_simanca(2).unwrap(), eps, CutoffProfile::default()).unwrap()
    }

    #[test]
    fn pieces_are_exact_outside_annulus() {
        let pg = eh_setup(0.05);
        let (a, b) = pg.annulus();
        let scaled = pg.bubble.potential.rescaled(0.05);
        for s in [a * 0.3, a] {
            assert_eq!(pg.potential.jet(s).unwrap(), scaled.jet(s).unwrap());
        }
        for s in [b, b * 3.0, 50.0] {
            assert_eq!(pg.potential.jet(s).unwrap(), pg.base.potential.jet(s).unwrap());
        }
        assert!(pg.seam_mismatch().unwrap() < 1e-8);
    }

    #[test]
    fn flat_gluing_curvature_lives_on_the_annulus() {
        let e = euclidean::<f64>(2).unwrap();
        let pg = preglue(&e, &burns_simanca(2).unwrap(), 0.01, CutoffProfile::default()).unwrap();
        let (a, b) = pg.annulus();
        assert!(pg.scalar_curvature(a * 0.5).unwrap().abs() < 1e-8);
        assert!(pg.scalar_curvature(b * 2.0).unwrap().abs() < 1e-12);
        assert!(pg.scalar_curvature((a * b).sqrt()).unwrap().abs() > 1e-6);
        let ff = preglue(&e, &euclidean(2).unwrap(), 0.01, CutoffProfile::default()).unwrap();
        let spec = WeightedNormSpec::default_for(2);
        assert!(glued_scalar_curvature_norm(&ff, &spec).unwrap() < 1e-12);
    }

    #[test]
    fn dimension_and_domain_checks() {
        let e3 = euclidean::<f64>(3).unwrap();
        let b2 = burns_simanca(2).unwrap();
        assert!(matches!(
            preglue(&e3, &b2, 0.1, CutoffProfile::default()),
            Err(Error::IncompatibleDimensions(_))
        ));
        // the Eguchi-Hanson potential itself is not a chart around a point
        let eh = eguchi_hanson(1.0).unwrap();
        assert!(preglue(&eh, &b2, 0.1, CutoffProfile::default()).is_err());
    }

    #[test]
    fn large_curvature_breaks_positivity() {
        let chart = chart_with_curvature::<f64>(2, 3.0, "steep").unwrap();
        let b2 = burns_simanca(2).unwrap();
        assert!(matches!(
            preglue(&chart, &b2, 0.9, CutoffProfile::default()),
            Err(Error::NonPositiveMetric { .. })
        ));
    }

    #[test]
    fn log_corrected_matches_standard_for_burns_simanca() {
        let eh = eguchi_hanson(1.0).unwrap();
        let chart = point_chart(&eh, 2.0).unwrap();
        let b2 = burns_simanca(2).unwrap();
        let c = CutoffProfile::default();
        let a = preglue(&chart, &b2, 0.05, c).unwrap();
        let l = preglue_with(&chart, &b2, 0.05, c, GluingVariant::LogCorrected).unwrap();
        let s = a.annulus().0 * 2.0;
        let (x, y): (f64, f64) = (a.scalar_curvature(s).unwrap(), l.scalar_curvature(s).unwrap());
        assert!((x - y).abs() < 1e-9 * (1.0 + x.abs()));
        assert!(!a.caveats().is_empty());
    }

    #[test]
    fn two_point_calibration_roundtrip() {
        let cal = TwoPointCalibration::from_measurements(2.0, 5.0, 0.5).unwrap();
        assert!((cal.c1 * cal.c - 2.0).abs() < 1e-12);
        assert!((cal.c1 * (0.5 + cal.c) - 5.0).abs() < 1e-12);
        let eh = eguchi_hanson(1.0).unwrap();
        let sweep = two_point_sweep(&eh, 2.0, &[10.0, 30.0, 100.0, 300.0], &cal).unwrap();
        assert_eq!(sweep.r_star, Some(10.0));
        assert!(two_point_constants(&eh, 2.0, 0.5, &cal).is_err());
        let flat = euclidean::<f64>(2).unwrap();
        let r = two_point_constants(&flat, 2.0, 10.0, &cal).unwrap();
        assert_eq!((r.c_p, r.c_q), (0.0, 0.0));
    }
}
