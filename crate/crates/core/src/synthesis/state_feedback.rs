use serde::Serialize;

use super::{solve_program, SolverSummary};
use crate::error::{Error, Result};
use crate::lft::plant::{check_plant, LftPlant};
use crate::lft::structure::ScalingValue;
use crate::linalg::{inverse, inverse_condition, rows, zeros, Mat};
use crate::lmi::state_feedback::build_sf_synthesis_with_margin;
use crate::lmi::program::MarginReport;
use crate::sdp::SolverOptions;

/// Smallest admissible `sigma_min(V) / sigma_max(V)`.
pub const V_CONDITION_LIMIT: f64 = 1e-9;


#[derive(Clone, Debug, Serialize)]
pub struct SfSynthesisResult {
    /// Gain on all plant states; zero on states that cannot reach `q` or `e`.
    #[serde(rename = "F", with = "rows")]
    pub f: Mat,
    pub gamma: f64,
    /// States the LMI variables below refer to.
    pub states: Vec<usize>,
    #[serde(with = "rows")]
    pub v: Mat,
    #[serde(with = "rows")]
    pub m: Mat,
    #[serde(with = "rows")]
    pub p_minus: Mat,
    #[serde(with = "rows")]
    pub p_plus: Mat,
    pub x: ScalingValue,
    #[serde(with = "rows")]
    pub q: Mat,
    pub margins: MarginReport,
    pub solver: SolverSummary,
}

/// Robust H2 state feedback `u = F x`, `F = M V^-1`.
///
/// States that cannot reach `q` or `e` are left out of the LMIs: feeding
/// them back only injects their noise, and keeping them drives the
/// optimal `P` to infinity.
///
/// The LMIs are solved in coordinates where the nominal Riccati solution
/// is close to the identity; the returned `V`, `M`, `P` are mapped back
/// to the plant's own coordinates.
pub fn synthesize_sf(full: &LftPlant, opts: &SolverOptions) -> Result<SfSynthesisResult> {
    check_plant(full)?;
    full.require_discrete()?;
    let states = full.influential_states(false);
    let kept = full.restrict_states(&states);
    let (t, t_inv) = kept.riccati_coordinates();
    let plant = &kept.change_coordinates(&t, &t_inv);
    let sp = build_sf_synthesis_with_margin(plant, opts.feas_margin)?;
    let (asg, margins, solver) = solve_program(&sp.program, opts)?;
    let get = |id| asg.get(id).cloned().unwrap();
    let v = get(sp.v);
    let m = get(sp.m);
    let ratio = inverse_condition(&v);
    if ratio < V_CONDITION_LIMIT {
        return Err(Error::IllConditionedV(ratio));
    }
    let vi = inverse(&v).ok_or(Error::IllConditionedV(0.0))?;
    let back = |p: &Mat| &t * p * t.transpose();
    let q = get(sp.q);
    let x = match sp.x {
        Some(id) => ScalingValue::from_matrix(&plant.structure, &get(id)),
        None => ScalingValue::identity(&plant.structure),
    };
    let f_kept = &m * vi * &t_inv;
    let mut f = zeros(full.dims.nu, full.dims.n);
    for (c, &s) in states.iter().enumerate() {
        f.set_column(s, &f_kept.column(c));
    }
    Ok(SfSynthesisResult {
        f,
        states,
        gamma: q.trace().max(0.0).sqrt(),
        v: back(&v),
        m: &m * t.transpose(),
        p_minus: back(&get(sp.p_minus)),
        p_plus: back(&get(sp.p_plus)),
        x,
        q,
        margins,
        solver,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lft::plant::PlantDims;
    use crate::lft::structure::UncertaintyStructure;

    #[test]
    fn integrator_like_scalar_needs_no_feedback() {
        // x+ = d + u, e = x: best F is 0 with gamma 1.
        let dims = PlantDims { n: 1, np: 0, nd: 1, ne: 1, nu: 1, ny: 1 };
        let mut p = LftPlant::zeros(dims, UncertaintyStructure::nominal(), 1.0);
        p.b1[(0, 0)] = 1.0;
        p.b2[(0, 0)] = 1.0;
        p.c1[(0, 0)] = 1.0;
        p.c2[(0, 0)] = 1.0;
        let r = synthesize_sf(&p, &SolverOptions::default()).unwrap();
        assert!((r.gamma - 1.0).abs() < 1e-4, "{}", r.gamma);
        assert!(r.f[(0, 0)].abs() < 1e-3, "{}", r.f);
    }
}
