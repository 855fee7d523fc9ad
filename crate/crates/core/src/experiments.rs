//! End-to-end runs shared by the command line and the acceptance suite.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ale_models::{burns_simanca, euclidean};
use crate::cohomology::mass_increment;
use crate::error::{Error, Result};
use crate::gluing::{point_chart, preglue, CutoffProfile, TwoPointCalibration};
use crate::mass::mass_consistency_with;
use crate::radial_kahler::curvature_size;
use crate::scalarflat_solver::{
    check_linearization, newton_scalar_flat, RadialMesh, ScalarFlatProblem, SolveDiagnostics,
};
use crate::weighted_analysis::{epsilon0, estimate_c, estimate_k, NormKind};
use crate::{Model, NormSpec, Preglued};

/// Radii (in `|z|`) at which solved blow-ups are read off.
pub const SOLUTION_RADII: [f64; 4] = [10.0, 20.0, 40.0, 80.0];

/// Pre-glues the unit Burns–Simanca bubble into the chart of `base` at
/// `s_p` (or into `base` itself when it is already a point chart).
pub fn blowup(base: &Model, s_p: Option<f64>, eps: f64, cutoff: CutoffProfile) -> Result<Preglued> {
    let bubble = burns_simanca::<f64>(base.m)?;
    let chart = match s_p {
        Some(s) => point_chart(base, s)?,
        None => base.clone(),
    };
    preglue(&chart, &bubble, eps, cutoff)
}

/// Newton-solved blow-up with its mass increment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlowupSolve {
    pub epsilon: f64,
    pub nodes: usize,
    pub diagnostics: SolveDiagnostics,
    /// Operator-level gradient check of the linearization at `ω̃_ε`.
    pub linearization_gap: f64,
    pub base_mass: f64,
    pub solved_mass: f64,
    pub mass_increment: f64,
    pub prediction: f64,
    pub rel_err: f64,
    pub caveats: Vec<String>,
}

/// Solves `S = 0` from the bubble guess; returns the report and the solved model.
pub fn solve_blowup(pg: &Preglued, nodes: usize, tol: f64, seed: u64) -> Result<(BlowupSolve, Model)> {
    let m = pg.m();
    let problem = ScalarFlatProblem::new(pg, RadialMesh::for_glued(pg, nodes)?, NormSpec::default_for(m))?;
    let linearization_gap = check_linearization(&problem, seed, 2)?;
    let (phi, diagnostics) = newton_scalar_flat(&problem, Some(bubble_guess(pg, &problem)?), tol)?;
    let solved = problem.solution_model(&phi)?;
    let solved_mass = mass_consistency_with(&solved, None, &SOLUTION_RADII)?;
    let base = mass_consistency_with(&pg.base, None, &SOLUTION_RADII)?;
    let prediction = mass_increment(m, pg.epsilon);
    let increment = solved_mass.boundary_integral - base.boundary_integral;
    let mut caveats = pg.caveats();
    caveats.extend(solved_mass.caveats);
    caveats.dedup();
    let report = BlowupSolve {
        epsilon: pg.epsilon,
        nodes: problem.len(),
        diagnostics,
        linearization_gap,
        base_mass: base.boundary_integral,
        solved_mass: solved_mass.boundary_integral,
        mass_increment: increment,
        prediction,
        rel_err: (increment - prediction) / prediction,
        caveats,
    };
    Ok((report, solved))
}

/// Initial guess that turns `ω̃_ε` into the scaled bubble everywhere.
pub fn bubble_guess(pg: &Preglued, problem: &ScalarFlatProblem<f64>) -> Result<Vec<f64>> {
    let bubble = pg.bubble.rescaled(pg.epsilon);
    let mut phi = problem
        .mesh
        .s
        .iter()
        .map(|&s| Ok(bubble.potential.deviation(s)?.value() - pg.potential.deviation(s)?.value()))
        .collect::<Result<Vec<_>>>()?;
    let tail = phi[phi.len() - 1];
    phi.iter_mut().for_each(|x| *x -= tail);
    Ok(phi)
}

/// One row of an `ε` sweep.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub epsilon: f64,
    pub r_eps: f64,
    pub s_norm: f64,
    pub c_est: f64,
    pub k_est: f64,
    pub eps0: f64,
    pub mass_increment: f64,
    pub prop51_prediction: f64,
    pub rel_err: f64,
}

pub const SWEEP_COLUMNS: &str = "epsilon,r_eps,S_norm,C_est,K_est,eps0,mass_increment,prop51_prediction,rel_err";

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = format!("{SWEEP_COLUMNS}\n");
    for r in rows {
        out.push_str(&format!(
            "{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e}\n",
            r.epsilon, r.r_eps, r.s_norm, r.c_est, r.k_est, r.eps0, r.mass_increment, r.prop51_prediction, r.rel_err
        ));
    }
    out
}

/// Per-`ε` constants and solved mass increments, in grid order.
pub fn epsilon_sweep(
    build: impl Fn(f64) -> Result<Preglued> + Sync,
    grid: &[f64],
    nodes: usize,
    tol: f64,
    seed: u64,
) -> Result<Vec<SweepRow>> {
    grid.par_iter()
        .map(|&eps| {
            let pg = build(eps)?;
            let spec = NormSpec::default_for(pg.m());
            let problem = ScalarFlatProblem::new(&pg, RadialMesh::for_glued(&pg, nodes)?, spec)?;
            let s_norm = problem.curvature_norm(&vec![0.0; problem.len()])?;
            let c_est = s_norm / pg.r_epsilon.powf(4.0 - spec.delta);
            let k_est = estimate_k(&pg, &spec, RadialMesh::for_glued(&pg, nodes)?, false)?.k;
            let (solve, _) = solve_blowup(&pg, nodes, tol, seed)?;
            Ok(SweepRow {
                epsilon: eps,
                r_eps: pg.r_epsilon,
                s_norm,
                c_est,
                k_est,
                eps0: epsilon0(k_est, c_est, pg.m())?,
                mass_increment: solve.mass_increment,
                prop51_prediction: solve.prediction,
                rel_err: solve.rel_err,
            })
        })
        .collect()
}

/// Fits the two-point constants `C₁`, `c` from the sampled `C` of the flat
/// gluing (`C₁c`) and of the chart of `base` at `s_p` (`C₁(c_p + c)`).
pub fn calibrate_two_point(base: &Model, s_p: f64, grid: &[f64], spec: &NormSpec) -> Result<TwoPointCalibration> {
    let bubble = burns_simanca::<f64>(base.m)?;
    let flat = euclidean::<f64>(base.m)?;
    let chart = point_chart(base, s_p)?;
    let family = |b: &Model| -> Result<Vec<Preglued>> {
        grid.iter().map(|&e| preglue(b, &bubble, e, CutoffProfile::default())).collect()
    };
    let c_flat = estimate_c(&family(&flat)?, spec, NormKind::Sampled)?.c;
    let c_curved = estimate_c(&family(&chart)?, spec, NormKind::Sampled)?.c;
    let c_p = curvature_size(&base.potential, base.m, s_p)?;
    if !(c_p > 0.0) {
        return Err(Error::FitIllConditioned(format!("base is flat at s_p = {s_p}")));
    }
    TwoPointCalibration::from_measurements(c_flat, c_curved, c_p)
}
