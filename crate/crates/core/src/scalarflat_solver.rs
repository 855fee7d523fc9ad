//! Radial scalar-flattening of a pre-glued metric: the discrete
//! scalar-curvature map on a log-radial mesh, its linearization, the
//! fixed-point map `N(φ) = φ − L⁻¹ S(ω̃_ε + i∂∂̄φ)`, Newton iteration and
//! contraction certification.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ale_models::AleModel;
use crate::error::{Error, Result};
use crate::gluing::PregluedMetric;
use crate::jet::{Jet, Jet7};
use crate::linalg::{fornberg_weights, Lu, Matrix};
use crate::profiles::TabulatedProfile;
use crate::radial_kahler::{curvature_flux, log_derivatives, s_derivatives_from_log, RadialPotential};
use crate::scalar::Real;
use crate::weighted_analysis::{ConstantsReport, WeightedNormSpec};

/// Nodes per finite-difference stencil.
const STENCIL: usize = 9;
/// Nodes per half-node stencil (symmetric about `t_{j+½}`).
const HALF_STENCIL: usize = 8;
/// Face flux `F = (1 − δ²/24 + 3δ⁴/640) Q` at half nodes `j−2..j+2`, and its
/// fourth-order truncation at `j−1..j+1`.
const FACE6: [f64; 5] = [3.0 / 640.0, -29.0 / 480.0, 1067.0 / 960.0, -29.0 / 480.0, 3.0 / 640.0];
const FACE4: [f64; 3] = [-1.0 / 24.0, 26.0 / 24.0, -1.0 / 24.0];
/// Highest mesh derivative (orders 5 and 6 only feed the exported jets).
const MAX_ORDER: usize = 6;

pub const DEFAULT_NODES: usize = 512;
/// Minimum resolution near the seams, in nodes per octave of `|z|`.
pub const MIN_NODES_PER_OCTAVE: f64 = 16.0;
pub const DEFAULT_TOLERANCE: f64 = 1e-8;
pub const MAX_NEWTON_STEPS: usize = 8;

/// Uniform mesh in `t = log s` with derivative stencils at the nodes and
/// at the half nodes `t_{j+½}`, `j = 0..n−2`.
#[derive(Clone, Debug)]
pub struct RadialMesh<T> {
    pub t: Vec<T>,
    pub s: Vec<T>,
    pub h: T,
    lo: Vec<usize>,
    /// `w[i][k][j]`: weight of node `lo[i] + j` in `∂_t^k` at node `i`.
    w: Vec<[[T; STENCIL]; MAX_ORDER + 1]>,
    half_lo: Vec<usize>,
    half_w: Vec<[[T; HALF_STENCIL]; 4]>,
}

impl<T: Real> RadialMesh<T> {
    pub fn new(s_min: T, s_max: T, n: usize) -> Result<Self> {
        if n < 2 * STENCIL {
            return Err(Error::MeshTooCoarse(format!("{n} nodes, need at least {}", 2 * STENCIL)));
        }
        if !(s_min > T::zero() && s_max > s_min) {
            return Err(Error::InvalidInput(format!("bad mesh range [{s_min}, {s_max}]")));
        }
        let (t0, t1) = (s_min.ln(), s_max.ln());
        let h = (t1 - t0) / T::from_usize_lossy(n - 1);
        let t: Vec<T> = (0..n).map(|i| t0 + h * T::from_usize_lossy(i)).collect();
        let s = t.iter().map(|&x| x.exp()).collect();
        let mut lo = Vec::with_capacity(n);
        let mut w = Vec::with_capacity(n);
        for i in 0..n {
            let l = i.saturating_sub(STENCIL / 2).min(n - STENCIL);
            let c = fornberg_weights(t[i], &t[l..l + STENCIL], MAX_ORDER);
            let mut row = [[T::zero(); STENCIL]; MAX_ORDER + 1];
            for k in 0..=MAX_ORDER {
                row[k].copy_from_slice(&c[k]);
            }
            lo.push(l);
            w.push(row);
        }
        let half = T::lit(0.5);
        let mut half_lo = Vec::with_capacity(n - 1);
        let mut half_w = Vec::with_capacity(n - 1);
        for j in 0..n - 1 {
            let l = (j + 1).saturating_sub(HALF_STENCIL / 2).min(n - HALF_STENCIL);
            let c = fornberg_weights(t[j] + half * h, &t[l..l + HALF_STENCIL], 3);
            let mut row = [[T::zero(); HALF_STENCIL]; 4];
            for k in 0..4 {
                row[k].copy_from_slice(&c[k]);
            }
            half_lo.push(l);
            half_w.push(row);
        }
        Ok(Self { t, s, h, lo, w, half_lo, half_w })
    }

    /// Default mesh for a pre-glued metric: `s ∈ [10⁻⁴ r_ε², 10⁴]` with
    /// at least `n` nodes and 16 nodes per octave.
    pub fn for_glued(pg: &PregluedMetric<T>, n: usize) -> Result<Self> {
        let r2 = pg.r_epsilon * pg.r_epsilon;
        let s_min = r2 * T::lit(1e-4);
        let s_max = T::lit(1e4).max(r2 * T::lit(1e2));
        let octaves = ((s_max / s_min).ln() / T::lit(4.0).ln()).to_f64_lossy();
        let needed = (octaves * MIN_NODES_PER_OCTAVE).ceil() as usize + 1;
        Self::new(s_min, s_max, n.max(needed))
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    /// Nodes per octave of `|z|` (an octave is `log 4` in `t`).
    pub fn nodes_per_octave(&self) -> T {
        T::lit(4.0).ln() / self.h
    }

    pub fn stencil(&self, i: usize, k: usize) -> (usize, &[T; STENCIL]) {
        (self.lo[i], &self.w[i][k])
    }

    pub fn half_stencil(&self, j: usize, k: usize) -> (usize, &[T; HALF_STENCIL]) {
        (self.half_lo[j], &self.half_w[j][k])
    }

    /// `s` at the half node `j + ½`.
    pub fn half_s(&self, j: usize) -> T {
        (self.t[j] + T::lit(0.5) * self.h).exp()
    }

    /// `(∂_t^k f)` at node `i`.
    pub fn apply(&self, f: &[T], i: usize, k: usize) -> T {
        let (l, w) = self.stencil(i, k);
        centred_sum(w, &f[l..l + STENCIL], f[i], k)
    }

    /// `(∂_t^k f)` at the half node `j + ½`.
    pub fn apply_half(&self, f: &[T], j: usize, k: usize) -> T {
        let (l, w) = self.half_stencil(j, k);
        centred_sum(w, &f[l..l + HALF_STENCIL], f[j], k)
    }

    pub fn derivative(&self, f: &[T], k: usize) -> Vec<T> {
        (0..self.len()).map(|i| self.apply(f, i, k)).collect()
    }

    /// Same mesh range with `2n − 1` nodes (every old node kept).
    pub fn refined(&self) -> Result<Self> {
        let n = self.len();
        Self::new(self.s[0], self.s[n - 1], 2 * n - 1)
    }
}

/// Stencil sum; derivative weights sum to zero, so centring on a nearby
/// value avoids cancellation when `f` carries a large constant.
fn centred_sum<T: Real>(w: &[T], f: &[T], centre: T, k: usize) -> T {
    let c = if k == 0 { T::zero() } else { centre };
    w.iter().zip(f).fold(T::zero(), |a, (&wj, &fj)| a + wj * (fj - c))
}

const STIRLING1: [[i64; 5]; 5] = [
    [1, 0, 0, 0, 0],
    [0, 1, 0, 0, 0],
    [0, -1, 1, 0, 0],
    [0, 2, -3, 1, 0],
    [0, -6, 11, -6, 1],
];

/// Discrete radial scalar-curvature problem around a pre-glued metric.
///
/// Unknown: the potential correction `φ` at the mesh nodes. Rows 0, 1
/// impose `φ_t = φ_tt = 0` at the inner end (the correction is constant
/// across the exceptional-divisor chart); rows `2..n−3` are `s²·S`; row
/// `n−2` is `(D − μ₁)(D − μ₂)Dφ = 0` at the outer end, annihilating the
/// decaying modes `s^{2−m}`, `s^{1−m}` and constants; row `n−1` pins `φ`.
#[derive(Clone, Debug)]
pub struct ScalarFlatProblem<T: Real> {
    pub mesh: Arc<RadialMesh<T>>,
    pub m: usize,
    pub epsilon: T,
    pub r_epsilon: T,
    pub spec: WeightedNormSpec<T>,
    background: Vec<[T; 7]>,
    /// Log-derivatives `p_k − s/2` (`k ≤ 3`) of `ω̃_ε` at the half nodes.
    background_half: Vec<[T; 4]>,
    background_dev: Vec<[T; 7]>,
    /// Base-chart curvature faded across the neck; the solver drives `S` to it.
    target: Vec<T>,
    potential: RadialPotential<T>,
    base_label: String,
    gamma_order: u32,
}

/// Log-derivatives of `F − s/2`.
fn deviation_log_derivatives<T: Real>(f: &RadialPotential<T>, s: T) -> Result<[T; 7]> {
    Ok(log_derivatives(&f.deviation(s)?, s))
}

/// Per-node weights of the discrete norms.
#[derive(Clone, Debug)]
struct Weights<T> {
    x: Vec<T>,
    y: Vec<T>,
}

impl<T: Real> ScalarFlatProblem<T> {
    pub fn new(pg: &PregluedMetric<T>, mesh: RadialMesh<T>, spec: WeightedNormSpec<T>) -> Result<Self> {
        let (a, b) = pg.annulus();
        let n = mesh.len();
        if !(mesh.s[0] < a && mesh.s[n - 1] > b) {
            return Err(Error::BoundaryConditionConflict(format!(
                "mesh [{}, {}] does not enclose the neck [{a}, {b}]",
                mesh.s[0],
                mesh.s[n - 1]
            )));
        }
        if mesh.nodes_per_octave() < T::lit(MIN_NODES_PER_OCTAVE) {
            return Err(Error::MeshTooCoarse(format!(
                "{} nodes per octave, need {MIN_NODES_PER_OCTAVE}",
                mesh.nodes_per_octave()
            )));
        }
        let rows: Vec<([T; 7], [T; 7])> = mesh
            .s
            .par_iter()
            .map(|&s| {
                let p = pg.potential.log_jet(s)?.derivatives();
                Ok((p, deviation_log_derivatives(&pg.potential, s)?))
            })
            .collect::<Result<_>>()?;
        let background_half = (0..n - 1)
            .into_par_iter()
            .map(|j| {
                let d = deviation_log_derivatives(&pg.potential, mesh.half_s(j))?;
                Ok([d[0], d[1], d[2], d[3]])
            })
            .collect::<Result<Vec<_>>>()?;
        let (background, background_dev) = rows.into_iter().unzip();
        let mut problem = Self {
            mesh: Arc::new(mesh),
            m: pg.m(),
            epsilon: pg.epsilon,
            r_epsilon: pg.r_epsilon,
            spec,
            background,
            background_half,
            background_dev,
            target: vec![T::zero(); n],
            potential: pg.potential.clone(),
            base_label: pg.model().label,
            gamma_order: pg.base.structure_group_order,
        };
        problem.target = problem.base_target(pg)?;
        Ok(problem)
    }

    /// Discrete curvature of the base chart alone, weighted by
    /// [`PregluedMetric::base_weight`]. Using the same discrete operator keeps
    /// its truncation error out of the glued residual.
    fn base_target(&self, pg: &PregluedMetric<T>) -> Result<Vec<T>> {
        let base = pg.base_potential();
        let n = self.len();
        let flux: Vec<T> = (0..n - 1)
            .into_par_iter()
            .map(|j| {
                let s = self.mesh.half_s(j);
                let d = deviation_log_derivatives(base, s)?;
                let c = Jet::<T, 1>::constant;
                Ok(curvature_flux(self.m, s, c(d[1]), c(d[2]), c(d[3])).value())
            })
            .collect::<Result<_>>()?;
        let mut out = vec![T::zero(); n];
        for i in self.interior() {
            let w = pg.base_weight(self.mesh.s[i]);
            if w == T::zero() {
                continue;
            }
            let p = base.log_jet(self.mesh.s[i])?.derivatives();
            let v = p[1].powi(self.m as i32 - 1) * p[2];
            let div = self.divergence(i).into_iter().fold(T::zero(), |a, (j, c)| a + c * flux[j]);
            out[i] = -w * div / (self.mesh.h * v);
        }
        Ok(out)
    }

    /// Problem on the default mesh with default weights.
    pub fn for_glued(pg: &PregluedMetric<T>) -> Result<Self> {
        Self::new(pg, RadialMesh::for_glued(pg, DEFAULT_NODES)?, WeightedNormSpec::default_for(pg.m()))
    }

    /// Same problem on the refined mesh.
    pub fn refined(&self, pg: &PregluedMetric<T>) -> Result<Self> {
        Self::new(pg, self.mesh.refined()?, self.spec)
    }

    pub fn len(&self) -> usize {
        self.mesh.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mesh.is_empty()
    }

    pub fn potential(&self) -> &RadialPotential<T> {
        &self.potential
    }

    /// Equation rows carrying `s²·S`.
    pub fn interior(&self) -> std::ops::Range<usize> {
        2..self.len() - 2
    }

    /// `S` is homogeneous of degree −1 in `p_k ~ s`, so `s²·S` has
    /// Jacobian entries of order one at every radius.
    fn row_scale(&self, i: usize) -> T {
        self.mesh.s[i] * self.mesh.s[i]
    }

    fn mu(&self) -> (T, T) {
        let m = T::from_usize_lossy(self.m);
        (T::lit(2.0) - m, T::one() - m)
    }

    fn log_derivs(&self, phi: &[T], i: usize) -> [T; 5] {
        let bg = &self.background[i];
        let mut p = [T::zero(); 5];
        for k in 0..5 {
            p[k] = bg[k] + self.mesh.apply(phi, i, k);
        }
        p
    }

    /// `p_k − s/2` at half node `j`.
    fn half_deviations(&self, phi: &[T], j: usize) -> [T; 4] {
        let bg = &self.background_half[j];
        let mut d = [T::zero(); 4];
        for k in 0..4 {
            d[k] = bg[k] + self.mesh.apply_half(phi, j, k);
        }
        d
    }

    fn check_positive(p1: T, p2: T, s: T) -> Result<()> {
        if !(p1 > T::zero() && p2 > T::zero()) {
            return Err(Error::NonPositiveMetric {
                s: s.to_f64_lossy(),
                tangential: (p1 / s).to_f64_lossy(),
                radial: (p2 / s).to_f64_lossy(),
            });
        }
        Ok(())
    }

    /// Flux `Q` at half node `j`, with its gradient in `p₁..p₃`.
    fn flux_with_gradient(&self, phi: &[T], j: usize) -> Result<(T, [T; 4])> {
        let d = self.half_deviations(phi, j);
        let s = self.mesh.half_s(j);
        let flat = s * T::lit(0.5);
        Self::check_positive(flat + d[1], flat + d[2], s)?;
        let mut g = [T::zero(); 4];
        let mut value = T::zero();
        for k in 1..4 {
            let mut q = [Jet::<T, 2>::constant(T::zero()); 4];
            for l in 1..4 {
                q[l] = if l == k { Jet::variable(d[l]) } else { Jet::constant(d[l]) };
            }
            let f = curvature_flux(self.m, s, q[1], q[2], q[3]);
            value = f.value();
            g[k] = f.derivative(1);
        }
        Ok((value, g))
    }

    /// `p₁^{m−1} p₂` at node `i`, with its gradient in `p₁, p₂`.
    fn volume_with_gradient(&self, phi: &[T], i: usize) -> Result<(T, [T; 3])> {
        let p = self.log_derivs(phi, i);
        Self::check_positive(p[1], p[2], self.mesh.s[i])?;
        let e = self.m as i32 - 1;
        let v = p[1].powi(e) * p[2];
        let d1 = T::from_i32(e).unwrap() * p[1].powi(e - 1) * p[2];
        Ok((v, [T::zero(), d1, p[1].powi(e)]))
    }

    fn fluxes(&self, phi: &[T]) -> Result<Vec<T>> {
        (0..self.len() - 1)
            .into_par_iter()
            .map(|j| Ok(self.flux_with_gradient(phi, j)?.0))
            .collect()
    }

    /// `S_i = −(F_{i+½} − F_{i−½}) / (h p₁^{m−1} p₂)` with the fourth-order
    /// face flux `F = Q − Δ²Q/24`, less the base chart's own curvature.
    fn face(&self, j: usize) -> (usize, &'static [f64]) {
        if j >= 2 && j + 4 <= self.len() {
            (j - 2, &FACE6)
        } else {
            (j - 1, &FACE4)
        }
    }

    /// `(half node, weight)` pairs of `F_{i+½} − F_{i−½}`.
    fn divergence(&self, i: usize) -> Vec<(usize, T)> {
        let mut out: Vec<(usize, T)> = Vec::with_capacity(10);
        for (j, sign) in [(i, T::one()), (i - 1, -T::one())] {
            let (lo, w) = self.face(j);
            for (o, &c) in w.iter().enumerate() {
                let c = sign * T::lit(c);
                match out.iter_mut().find(|(k, _)| *k == lo + o) {
                    Some(e) => e.1 = e.1 + c,
                    None => out.push((lo + o, c)),
                }
            }
        }
        out
    }

    fn curvature_from_fluxes(&self, q: &[T], phi: &[T], i: usize) -> Result<T> {
        let div = self.divergence(i).into_iter().fold(T::zero(), |a, (j, c)| a + c * q[j]);
        let (v, _) = self.volume_with_gradient(phi, i)?;
        Ok(-div / (self.mesh.h * v) - self.target[i])
    }

    /// Discrete `S(ω̃ + i∂∂̄φ)` at equation node `i`, less the base chart's
    /// own curvature.
    pub fn curvature_at(&self, phi: &[T], i: usize) -> Result<T> {
        if !self.interior().contains(&i) {
            return Err(Error::InvalidInput(format!("node {i} carries no curvature row")));
        }
        let mut q = vec![T::zero(); i + 3];
        for (j, _) in self.divergence(i) {
            q[j] = self.flux_with_gradient(phi, j)?.0;
        }
        self.curvature_from_fluxes(&q, phi, i)
    }

    /// Curvature defect on the equation rows (zero on the boundary rows).
    pub fn curvature(&self, phi: &[T]) -> Result<Vec<T>> {
        let q = self.fluxes(phi)?;
        let mut out = vec![T::zero(); self.len()];
        let rows: Vec<T> = self
            .interior()
            .into_par_iter()
            .map(|i| self.curvature_from_fluxes(&q, phi, i))
            .collect::<Result<_>>()?;
        out[self.interior()].copy_from_slice(&rows);
        Ok(out)
    }

    fn boundary_rows(&self, phi: &[T], out: &mut [T]) {
        let n = self.len();
        let (m1, m2) = self.mu();
        out[0] = self.mesh.apply(phi, 0, 1);
        out[1] = self.mesh.apply(phi, 0, 2);
        let d = |k| self.mesh.apply(phi, n - 1, k);
        out[n - 2] = d(3) - (m1 + m2) * d(2) + m1 * m2 * d(1);
        out[n - 1] = phi[n - 1];
    }

    /// Full residual vector (boundary rows and `s²·S` rows).
    pub fn residual(&self, phi: &[T]) -> Result<Vec<T>> {
        let mut out = self.curvature(phi)?;
        for i in self.interior() {
            out[i] = self.row_scale(i) * out[i];
        }
        self.boundary_rows(phi, &mut out);
        Ok(out)
    }

    /// Jacobian of [`ScalarFlatProblem::residual`] at `φ`, assembled from
    /// the exact derivatives of the flux and volume factor.
    pub fn jacobian(&self, phi: &[T]) -> Result<Matrix<T>> {
        let n = self.len();
        let h = self.mesh.h;
        let mut a = Matrix::zeros(n, n);
        let flux: Vec<(T, [T; 4])> =
            (0..n - 1).into_par_iter().map(|j| self.flux_with_gradient(phi, j)).collect::<Result<_>>()?;
        let vols: Vec<(T, [T; 3])> =
            self.interior().into_par_iter().map(|i| self.volume_with_gradient(phi, i)).collect::<Result<_>>()?;
        for (row, i) in self.interior().enumerate() {
            let s2 = self.row_scale(i);
            let (v, gv) = vols[row];
            let terms = self.divergence(i);
            let div = terms.iter().fold(T::zero(), |acc, &(j, c)| acc + c * flux[j].0);
            for &(j, c) in &terms {
                let scale = -s2 * c / (h * v);
                for k in 1..4 {
                    let (l, w) = self.mesh.half_stencil(j, k);
                    for (jj, &wj) in w.iter().enumerate() {
                        a.add_to(i, l + jj, scale * flux[j].1[k] * wj);
                    }
                }
            }
            let dv = s2 * div / (h * v * v);
            for k in 1..3 {
                let (l, w) = self.mesh.stencil(i, k);
                for (jj, &wj) in w.iter().enumerate() {
                    a.add_to(i, l + jj, dv * gv[k] * wj);
                }
            }
        }
        let (m1, m2) = self.mu();
        for (row, node, coeffs) in [
            (0, 0, [T::zero(), T::one(), T::zero(), T::zero()]),
            (1, 0, [T::zero(), T::zero(), T::one(), T::zero()]),
            (n - 2, n - 1, [T::zero(), m1 * m2, -(m1 + m2), T::one()]),
        ] {
            for (k, &c) in coeffs.iter().enumerate() {
                if c != T::zero() {
                    let (l, w) = self.mesh.stencil(node, k);
                    for j in 0..STENCIL {
                        a.add_to(row, l + j, c * w[j]);
                    }
                }
            }
        }
        a.set(n - 1, n - 1, T::one());
        Ok(a)
    }

    fn weights(&self) -> Weights<T> {
        let sh = self.mesh.h.sqrt();
        let floor = self.spec.big_r0 * self.epsilon;
        let four = T::lit(4.0);
        let mut x = Vec::with_capacity(self.len());
        let mut y = Vec::with_capacity(self.len());
        for &s in &self.mesh.s {
            let rho = s.sqrt();
            let rw = rho.max(floor);
            let d = if rho < self.spec.r0 { self.spec.delta } else { self.spec.delta_inf };
            x.push(sh * rw.powf(-d));
            y.push(sh * rw.powf(four - d));
        }
        Weights { x, y }
    }

    /// Weighted components `ρ_w^{−δ} (ρ∂_ρ)_{(j)} φ`, `j = 0..=4`, node-major.
    fn x_components(&self, phi: &[T], w: &Weights<T>) -> Vec<T> {
        let n = self.len();
        let mut out = Vec::with_capacity(5 * n);
        for i in 0..n {
            let mut d = [T::zero(); 5];
            let mut two_k = T::one();
            for (k, dk) in d.iter_mut().enumerate() {
                *dk = two_k * self.mesh.apply(phi, i, k);
                two_k = two_k + two_k;
            }
            for row in STIRLING1.iter() {
                let v = row.iter().zip(&d).fold(T::zero(), |a, (&c, &dk)| a + T::from_i64(c).unwrap() * dk);
                out.push(w.x[i] * v);
            }
        }
        out
    }

    fn x_components_transposed(&self, u: &[T], w: &Weights<T>) -> Vec<T> {
        let n = self.len();
        let mut out = vec![T::zero(); n];
        for i in 0..n {
            let mut coef = [T::zero(); 5];
            for (j, row) in STIRLING1.iter().enumerate() {
                let uj = w.x[i] * u[5 * i + j];
                for k in 0..5 {
                    coef[k] = coef[k] + T::from_i64(row[k]).unwrap() * uj;
                }
            }
            let mut two_k = T::one();
            for (k, &ck) in coef.iter().enumerate() {
                let (l, wk) = self.mesh.stencil(i, k);
                for j in 0..STENCIL {
                    out[l + j] = out[l + j] + two_k * ck * wk[j];
                }
                two_k = two_k + two_k;
            }
        }
        out
    }

    /// Discrete `C⁴_δ` norm (weighted ℓ² in `dt` over derivatives 0..=4).
    pub fn x_norm(&self, phi: &[T]) -> T {
        crate::linalg::norm2(&self.x_components(phi, &self.weights()))
    }

    /// Discrete `C⁰_{δ−4}` norm of a node function over the equation rows.
    pub fn y_norm(&self, f: &[T]) -> T {
        let w = self.weights();
        self.interior().fold(T::zero(), |a, i| a + (w.y[i] * f[i]).powi(2)).sqrt()
    }

    /// `‖S(ω̃ + i∂∂̄φ)‖` in the discrete target norm.
    pub fn curvature_norm(&self, phi: &[T]) -> Result<T> {
        let n = self.len();
        let mut s = vec![T::zero(); n];
        for i in self.interior() {
            s[i] = self.curvature_at(phi, i)?;
        }
        Ok(self.y_norm(&s))
    }

    /// Largest ratio `‖ψ‖_X / ‖Lψ‖_Y` over the equation rows, computed as
    /// the top singular value of the weighted inverse.
    pub fn inverse_norm(&self, lu: &Lu<T>, start_seed: u64) -> T {
        let w = self.weights();
        let n = self.len();
        let idx: Vec<usize> = self.interior().collect();
        let apply = |v: &[T]| {
            let mut rhs = vec![T::zero(); n];
            for (&i, &vi) in idx.iter().zip(v) {
                rhs[i] = self.row_scale(i) * vi / w.y[i];
            }
            self.x_components(&lu.solve(&rhs), &w)
        };
        let apply_t = |u: &[T]| {
            let g = lu.solve_transposed(&self.x_components_transposed(u, &w));
            idx.iter().map(|&i| self.row_scale(i) * g[i] / w.y[i]).collect()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(start_seed);
        let start: Vec<T> = idx.iter().map(|_| T::lit(rng.gen_range(-1.0..1.0))).collect();
        crate::linalg::largest_singular_value(idx.len(), apply, apply_t, &start, 2000, T::lit(1e-10))
    }

    /// `L ψ` in curvature units (equation rows divided by `s²`).
    pub fn apply_linearized(&self, a: &Matrix<T>, psi: &[T]) -> Vec<T> {
        let mut v = a.mul_vec(psi);
        for i in self.interior() {
            v[i] = v[i] / self.row_scale(i);
        }
        v
    }

    /// Exports `ω̃_ε + i∂∂̄φ` as a tabulated model.
    pub fn solution_model(&self, phi: &[T]) -> Result<AleModel<T>> {
        let n = self.len();
        let mut jets = Vec::with_capacity(n);
        for i in 0..n {
            let mut p = self.background_dev[i];
            for k in 0..=MAX_ORDER {
                p[k] = p[k] + self.mesh.apply(phi, i, k);
            }
            jets.push(Jet7::from_derivatives(&s_derivatives_from_log(&p, self.mesh.s[i])));
        }
        let profile = TabulatedProfile::new(self.mesh.s.clone(), jets)?;
        Ok(AleModel {
            label: format!("scalar-flattened {}", self.base_label),
            m: self.m,
            structure_group_order: self.gamma_order,
            potential: RadialPotential::from_profile(profile),
            compact_radius: T::one(),
            scalar_flat: true,
        })
    }
}

/// The linearized operator at `ω̃_ε` together with its factorization.
#[derive(Clone, Debug)]
pub struct LinearizedOperator<T> {
    pub matrix: Matrix<T>,
    pub lu: Lu<T>,
}

pub fn linearized_operator<T: Real>(problem: &ScalarFlatProblem<T>) -> Result<LinearizedOperator<T>> {
    let zero = vec![T::zero(); problem.len()];
    let matrix = problem.jacobian(&zero)?;
    let lu = Lu::factor(&matrix, T::lit(1e-12))?;
    Ok(LinearizedOperator { matrix, lu })
}

const FD_STEP: f64 = 5e-3;

/// Largest relative gap between `Lψ` and central differences of the
/// residual map along random smooth directions.
pub fn check_linearization<T: Real>(problem: &ScalarFlatProblem<T>, seed: u64, directions: usize) -> Result<T> {
    let n = problem.len();
    let zero = vec![T::zero(); n];
    let a = problem.jacobian(&zero)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = T::zero();
    for _ in 0..directions {
        let psi = smooth_direction(problem, &mut rng);
        let lin = a.mul_vec(&psi);
        // two Richardson levels on central differences remove the h² and h⁴ terms
        let fd = |h: T| -> Result<Vec<T>> {
            let plus: Vec<T> = psi.iter().map(|&x| x * h).collect();
            let minus: Vec<T> = psi.iter().map(|&x| -x * h).collect();
            let (rp, rm) = (problem.residual(&plus)?, problem.residual(&minus)?);
            Ok(rp.iter().zip(&rm).map(|(&p, &q)| (p - q) / (h + h)).collect())
        };
        let size = psi.iter().zip(&problem.mesh.s).fold(T::one(), |a, (&x, &s)| a.max((x / s).abs()));
        let h = T::lit(FD_STEP) / size;
        let two = T::lit(2.0);
        let (f1, f2, f4) = (fd(h)?, fd(h / two)?, fd(h / two / two)?);
        let mut err = vec![T::zero(); n];
        let mut lin_s = lin.clone();
        for i in 0..n {
            let a = (T::lit(4.0) * f2[i] - f1[i]) / T::lit(3.0);
            let b = (T::lit(4.0) * f4[i] - f2[i]) / T::lit(3.0);
            err[i] = (T::lit(16.0) * b - a) / T::lit(15.0) - lin[i];
        }
        for i in problem.interior() {
            let w = problem.row_scale(i);
            err[i] = err[i] / w;
            lin_s[i] = lin_s[i] / w;
        }
        let denom = problem.y_norm(&lin_s).max(T::min_positive_value());
        worst = worst.max(problem.y_norm(&err) / denom);
        let edge = lin.iter().fold(T::zero(), |a, &x| a.max(x.abs())).max(T::min_positive_value());
        for i in (0..n).filter(|i| !problem.interior().contains(i)) {
            worst = worst.max(err[i].abs() / edge);
        }
    }
    Ok(worst)
}

/// Random combination of smooth bumps in `t`, vanishing near both ends,
/// scaled to unit weighted norm.
pub fn smooth_direction<T: Real, R: Rng>(problem: &ScalarFlatProblem<T>, rng: &mut R) -> Vec<T> {
    let t = &problem.mesh.t;
    let (t0, t1) = (t[0].to_f64_lossy(), t[t.len() - 1].to_f64_lossy());
    let mut v = vec![0.0f64; t.len()];
    for _ in 0..6 {
        let c = rng.gen_range(t0 + 0.2 * (t1 - t0)..t1 - 0.2 * (t1 - t0));
        let w = rng.gen_range(0.5..3.0);
        let a = rng.gen_range(-1.0..1.0);
        for (vi, &ti) in v.iter_mut().zip(t) {
            let x = (ti.to_f64_lossy() - c) / w;
            *vi += a * (-x * x).exp();
        }
    }
    let v: Vec<T> = v.into_iter().map(T::lit).collect();
    let norm = problem.x_norm(&v);
    v.into_iter().map(|x| x / norm).collect()
}

/// Iteration record of the fixed-point scheme.
#[derive(Clone, Debug)]
pub struct SolverState<T> {
    pub phi: Vec<T>,
    pub residual_history: Vec<T>,
    pub contraction_ratios: Vec<T>,
    pub ball_radius: T,
    last_step: Option<T>,
}

impl<T: Real> SolverState<T> {
    /// Start at `φ = 0` with ball radius `c₁ r_ε^{2−δ}`.
    pub fn start(problem: &ScalarFlatProblem<T>, c1: T) -> Self {
        let r = problem.r_epsilon;
        Self {
            phi: vec![T::zero(); problem.len()],
            residual_history: Vec::new(),
            contraction_ratios: Vec::new(),
            ball_radius: c1 * r.powf(T::lit(2.0) - problem.spec.delta),
            last_step: None,
        }
    }

    pub fn in_ball(&self, problem: &ScalarFlatProblem<T>) -> bool {
        problem.x_norm(&self.phi) <= self.ball_radius
    }
}

/// `N(φ) = φ − L⁻¹ r(φ)` with `L` frozen at `φ = 0`.
pub fn fixed_point_map<T: Real>(
    problem: &ScalarFlatProblem<T>,
    op: &LinearizedOperator<T>,
    phi: &[T],
) -> Result<Vec<T>> {
    let r = problem.residual(phi)?;
    let d = op.lu.solve(&r);
    Ok(phi.iter().zip(&d).map(|(&a, &b)| a - b).collect())
}

pub fn picard_step<T: Real>(
    state: SolverState<T>,
    problem: &ScalarFlatProblem<T>,
    op: &LinearizedOperator<T>,
) -> Result<SolverState<T>> {
    let next = fixed_point_map(problem, op, &state.phi)?;
    let diff: Vec<T> = next.iter().zip(&state.phi).map(|(&a, &b)| a - b).collect();
    let step = problem.x_norm(&diff);
    let mut out = state;
    if let Some(prev) = out.last_step {
        let ratio = if prev > T::zero() { step / prev } else { T::zero() };
        out.contraction_ratios.push(ratio);
        let k = out.contraction_ratios.len();
        if k >= 3 && out.contraction_ratios[k - 3..].iter().all(|&r| r > T::one()) {
            return Err(Error::DivergenceDetected(format!(
                "contraction ratio above 1 for three consecutive steps (last {ratio})"
            )));
        }
    }
    out.last_step = Some(step);
    out.residual_history.push(problem.curvature_norm(&next)?);
    out.phi = next;
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveDiagnostics {
    pub epsilon: f64,
    pub steps: usize,
    pub residuals: Vec<f64>,
    pub ratios: Vec<f64>,
    pub certified: bool,
}

impl SolveDiagnostics {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("diagnostics serialize")
    }
}

const STALL: f64 = 0.5;
const MAX_DAMPING: usize = 6;

/// Newton iteration for `S(ω̃_ε + i∂∂̄φ) = 0` from `φ₀` (default 0).
pub fn newton_scalar_flat<T: Real>(
    problem: &ScalarFlatProblem<T>,
    phi0: Option<Vec<T>>,
    tol: T,
) -> Result<(Vec<T>, SolveDiagnostics)> {
    let n = problem.len();
    let mut phi = phi0.unwrap_or_else(|| vec![T::zero(); n]);
    if phi.len() != n {
        return Err(Error::InvalidInput(format!("initial guess has {} nodes, mesh {n}", phi.len())));
    }
    // Iterate in the gauge φ(inner) = 0, where the potential is smallest and
    // stencil cancellation is mildest; constants do not change the metric.
    let shift = |phi: &mut Vec<T>, node: usize| {
        let c = phi[node];
        phi.iter_mut().for_each(|x| *x = *x - c);
    };
    shift(&mut phi, 0);
    let mut residuals = Vec::new();
    let mut ratios = Vec::new();
    let mut last_step: Option<T> = None;
    for step in 0..=MAX_NEWTON_STEPS {
        let mut r = problem.residual(&phi).map_err(diverged)?;
        r[n - 1] = T::zero();
        let bc = [r[0], r[1], r[n - 2]].iter().fold(T::zero(), |a, &x| a.max(x.abs()));
        let res = problem.curvature_norm(&phi).map_err(diverged)?;
        residuals.push(res.to_f64_lossy());
        if !res.is_finite() {
            return Err(Error::DivergenceDetected("non-finite residual".into()));
        }
        // a Newton step that no longer halves the residual means it sits on
        // the floating-point floor for this mesh
        let stalled = residuals.len() >= 2 && res > T::lit(STALL) * T::lit(residuals[residuals.len() - 2]);
        let floor = tol.sqrt();
        if (res < tol && bc < tol) || (stalled && res < floor && bc < floor) {
            shift(&mut phi, n - 1);
            return Ok((
                phi,
                SolveDiagnostics {
                    epsilon: problem.epsilon.to_f64_lossy(),
                    steps: step,
                    residuals,
                    ratios,
                    certified: true,
                },
            ));
        }
        if step == MAX_NEWTON_STEPS {
            break;
        }
        let a = problem.jacobian(&phi).map_err(diverged)?;
        let lu = Lu::factor(&a, T::lit(1e-14))?;
        let d = lu.solve(&r);
        let size = problem.x_norm(&d);
        if let Some(prev) = last_step {
            ratios.push((size / prev).to_f64_lossy());
        }
        last_step = Some(size);
        // halve the step until the iterate stays in the positive cone
        let mut lambda = T::one();
        let mut trial = phi.clone();
        for _ in 0..=MAX_DAMPING {
            trial.iter_mut().zip(phi.iter().zip(&d)).for_each(|(t, (&p, &di))| *t = p - lambda * di);
            if problem.residual(&trial).is_ok() {
                break;
            }
            lambda = lambda * T::lit(0.5);
        }
        phi = trial;
        shift(&mut phi, 0);
    }
    Err(Error::DivergenceDetected(format!(
        "no convergence in {MAX_NEWTON_STEPS} Newton steps, residuals {residuals:?}"
    )))
}

fn diverged(e: Error) -> Error {
    match e {
        Error::NonPositiveMetric { s, .. } => {
            Error::DivergenceDetected(format!("iterate left the positive cone at s = {s}"))
        }
        other => other,
    }
}

/// Contraction check at one `ε`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContractionCheck {
    pub epsilon: f64,
    pub r_epsilon: f64,
    /// `‖N(0)‖` and the bound `0.6·c₁·r_ε^{2−δ}`.
    pub first_iterate: f64,
    pub first_iterate_bound: f64,
    /// Largest observed Picard ratio.
    pub max_ratio: f64,
    /// Largest `‖N(φ) − N(ψ)‖/‖φ − ψ‖` over sampled pairs in the ball.
    pub max_pair_ratio: f64,
    pub steps: usize,
    pub stayed_in_ball: bool,
    pub certified: bool,
}

pub const RATIO_LIMIT: f64 = 0.6;

/// Runs the Picard scheme at `pg` with `c₁ = 1/(2K)` and checks the
/// contraction criteria.
pub fn check_contraction<T: Real>(
    pg: &PregluedMetric<T>,
    k: f64,
    spec: WeightedNormSpec<T>,
    seed: u64,
) -> Result<ContractionCheck> {
    let mesh = RadialMesh::for_glued(pg, DEFAULT_NODES)?;
    let problem = ScalarFlatProblem::new(pg, mesh, spec)?;
    let op = linearized_operator(&problem)?;
    let c1 = T::lit(1.0 / (2.0 * k));
    let mut state = SolverState::start(&problem, c1);
    let bound = T::lit(RATIO_LIMIT) * state.ball_radius;
    let n0 = fixed_point_map(&problem, &op, &state.phi)?;
    let first = problem.x_norm(&n0);
    let mut stayed = true;
    let mut steps = 0;
    let mut failure = None;
    for _ in 0..12 {
        match picard_step(state.clone(), &problem, &op) {
            Ok(next) => {
                state = next;
                steps += 1;
                stayed &= state.in_ball(&problem);
                if state.residual_history.last().is_some_and(|&r| r < T::lit(1e-14)) {
                    break;
                }
            }
            Err(e) => {
                failure = Some(e);
                break;
            }
        }
    }
    let max_ratio = state.contraction_ratios.iter().fold(0.0f64, |a, r| a.max(r.to_f64_lossy()));
    let pair = pair_ratio(&problem, &op, state.ball_radius, seed).unwrap_or(f64::INFINITY);
    let certified = failure.is_none()
        && first <= bound
        && max_ratio <= RATIO_LIMIT
        && pair <= RATIO_LIMIT
        && stayed;
    Ok(ContractionCheck {
        epsilon: pg.epsilon.to_f64_lossy(),
        r_epsilon: pg.r_epsilon.to_f64_lossy(),
        first_iterate: first.to_f64_lossy(),
        first_iterate_bound: bound.to_f64_lossy(),
        max_ratio: if failure.is_some() { f64::INFINITY } else { max_ratio },
        max_pair_ratio: pair,
        steps,
        stayed_in_ball: stayed,
        certified,
    })
}

/// Contraction ratio of `N` over random pairs of smooth functions in the ball.
fn pair_ratio<T: Real>(
    problem: &ScalarFlatProblem<T>,
    op: &LinearizedOperator<T>,
    radius: T,
    seed: u64,
) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..4 {
        let a: Vec<T> = smooth_direction(problem, &mut rng).into_iter().map(|x| x * radius).collect();
        let b: Vec<T> = smooth_direction(problem, &mut rng)
            .into_iter()
            .map(|x| x * radius * T::lit(rng.gen_range(0.0..1.0)))
            .collect();
        let (na, nb) = (fixed_point_map(problem, op, &a)?, fixed_point_map(problem, op, &b)?);
        let dn: Vec<T> = na.iter().zip(&nb).map(|(&x, &y)| x - y).collect();
        let dp: Vec<T> = a.iter().zip(&b).map(|(&x, &y)| x - y).collect();
        worst = worst.max((problem.x_norm(&dn) / problem.x_norm(&dp)).to_f64_lossy());
    }
    Ok(worst)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThresholdReport {
    pub formula_epsilon0: f64,
    pub k: f64,
    pub c: f64,
    pub checks: Vec<ContractionCheck>,
    /// Largest swept `ε` up to which every check certified.
    pub empirical_threshold: f64,
    /// The sweep stopped at its upper cap while still certifying.
    pub threshold_is_lower_bound: bool,
    pub consistent: bool,
    pub flags: Vec<String>,
}

/// Sweeps `ε = ε₀/4, ε₀/2, ε₀, 2ε₀, …` (up to `cap`) and compares the
/// empirical contraction threshold with the formula value.
pub fn certify_threshold<T: Real>(
    build: impl Fn(T) -> Result<PregluedMetric<T>> + Sync,
    constants: &ConstantsReport,
    spec: WeightedNormSpec<T>,
    cap: f64,
    seed: u64,
) -> Result<ThresholdReport> {
    let eps0 = constants.epsilon0;
    let mut grid = vec![eps0 / 4.0, eps0 / 2.0];
    let mut e = eps0;
    while e <= cap {
        grid.push(e);
        e *= 2.0;
    }
    let mut checks = Vec::new();
    let mut threshold = 0.0;
    let mut all_ok = true;
    let mut flags = Vec::new();
    for &eps in &grid {
        let check = build(T::lit(eps)).and_then(|pg| check_contraction(&pg, constants.k_p, spec, seed));
        let check = match check {
            Ok(c) => c,
            Err(err) => {
                flags.push(format!("eps = {eps:.6e}: {err}"));
                all_ok = false;
                break;
            }
        };
        let ok = check.certified;
        checks.push(check);
        if ok && all_ok {
            threshold = eps;
        } else {
            all_ok = false;
        }
        if !ok && eps > eps0 {
            break;
        }
    }
    let below_ok = checks.iter().filter(|c| c.epsilon < eps0).all(|c| c.certified);
    if !below_ok {
        flags.push("contraction not certified below the formula threshold".into());
    }
    let consistent = threshold >= eps0 * (1.0 - 1e-12);
    if !consistent {
        flags.push(format!("empirical threshold {threshold:.6e} below formula {eps0:.6e}"));
    }
    Ok(ThresholdReport {
        formula_epsilon0: eps0,
        k: constants.k_p,
        c: constants.c_p,
        threshold_is_lower_bound: all_ok,
        empirical_threshold: threshold,
        consistent,
        checks,
        flags,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ale_models::{burns_simanca, euclidean};
    use crate::gluing::{preglue, CutoffProfile};

    fn flat_problem() -> ScalarFlatProblem<f64> {
        let e = euclidean::<f64>(2).unwrap();
        let pg = preglue(&e, &e, 0.05, CutoffProfile::default()).unwrap();
        ScalarFlatProblem::for_glued(&pg).unwrap()
    }

    #[test]
    fn mesh_derivatives_are_accurate() {
        let mesh = RadialMesh::<f64>::new(1e-3, 1e3, 200).unwrap();
        let f: Vec<f64> = mesh.t.iter().map(|&t| (0.3 * t).sin()).collect();
        for k in 0..=4 {
            let d = mesh.derivative(&f, k);
            for (i, &t) in mesh.t.iter().enumerate() {
                let exact = 0.3f64.powi(k as i32) * (0.3 * t + k as f64 * std::f64::consts::FRAC_PI_2).sin();
                assert!((d[i] - exact).abs() < 1e-6, "k={k} i={i} {} vs {exact}", d[i]);
            }
        }
    }

    #[test]
    fn flat_linearization_kills_gauge() {
        let p = flat_problem();
        let a = p.jacobian(&vec![0.0; p.len()]).unwrap();
        for phi in [vec![1.0; p.len()], p.mesh.s.iter().map(|&s| 0.7 * s).collect::<Vec<_>>()] {
            // rows are s²·L, of the size of φ; the last row leans on one-sided
            // half-node stencils and carries the largest truncation
            let v = a.mul_vec(&phi);
            let last = p.interior().end - 1;
            for i in p.interior() {
                let tol = if i == last { 1e-5 } else { 1e-6 };
                assert!(v[i].abs() < tol * (1.0 + phi[i].abs()), "{i} {}", v[i]);
            }
        }
    }

    #[test]
    fn linearization_matches_finite_differences() {
        let b = burns_simanca::<f64>(2).unwrap();
        let e = euclidean::<f64>(2).unwrap();
        let pg = preglue(&e, &b, 0.05, CutoffProfile::default()).unwrap();
        let p = ScalarFlatProblem::for_glued(&pg).unwrap();
        let c = check_linearization(&p, 3, 3).unwrap();
        assert!(c < 1e-6, "{c}");
        let a = p.jacobian(&vec![0.0; p.len()]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let (u, v) = (smooth_direction(&p, &mut rng), smooth_direction(&p, &mut rng));
        let w: Vec<f64> = u.iter().zip(&v).map(|(x, y)| 2.0 * x - 3.0 * y).collect();
        let (lu, lv, lw) = (a.mul_vec(&u), a.mul_vec(&v), a.mul_vec(&w));
        let abs_u: Vec<f64> = u.iter().zip(&v).map(|(x, y)| 2.0 * x.abs() + 3.0 * y.abs()).collect();
        let bound: Vec<f64> = (0..p.len())
            .map(|i| a.row(i).iter().zip(&abs_u).map(|(x, y)| x.abs() * y).sum())
            .collect();
        for i in 0..p.len() {
            assert!((lw[i] - 2.0 * lu[i] + 3.0 * lv[i]).abs() <= 1e-13 * bound[i] + 1e-300);
        }
    }

    #[test]
    fn flat_input_is_a_fixed_point() {
        let p = flat_problem();
        let op = linearized_operator(&p).unwrap();
        let n0 = fixed_point_map(&p, &op, &vec![0.0; p.len()]).unwrap();
        assert!(n0.iter().all(|x| x.abs() < 1e-12));
        let (phi, d) = newton_scalar_flat(&p, None, 1e-8).unwrap();
        assert_eq!(d.steps, 0);
        assert!(phi.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn coarse_mesh_rejected() {
        let e = euclidean::<f64>(2).unwrap();
        let pg = preglue(&e, &e, 0.05, CutoffProfile::default()).unwrap();
        let mesh = RadialMesh::new(1e-7, 1e4, 60).unwrap();
        assert!(matches!(
            ScalarFlatProblem::new(&pg, mesh, WeightedNormSpec::default_for(2)),
            Err(Error::MeshTooCoarse(_))
        ));
        let short = RadialMesh::new(1e-1, 1e4, 400).unwrap();
        assert!(matches!(
            ScalarFlatProblem::new(&pg, short, WeightedNormSpec::default_for(2)),
            Err(Error::BoundaryConditionConflict(_))
        ));
    }
}
