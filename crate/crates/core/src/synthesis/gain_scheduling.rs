use serde::Serialize;

use super::{solve_program, SolverSummary};
use crate::error::{Error, Result};
use crate::lft::closed_loop::{close_output_feedback, LftController};
use crate::lft::plant::{check_plant, LftPlant};
use crate::linalg::{eye, grid, inverse, inverse_condition, normalizing_coordinates, rows, sym, zeros, Mat};
use crate::lmi::analysis::build_analysis_with_margin;
use crate::lmi::expr::Assignment;
use crate::lmi::gain_scheduling::{build_gs_synthesis_with_margin, GsProgram};
use crate::lmi::program::{LmiProgram, MarginReport};
use crate::sdp::SolverOptions;

/// Smallest admissible `sigma_min / sigma_max` for the factors `M` and `L2`.
pub const FACTOR_CONDITION_LIMIT: f64 = 1e-9;
/// Shift added to `U` when a factor is singular.
pub const U_PERTURBATION: f64 = 1e-6;

/// Decision variables of the gain-scheduling LMIs at a solution.
#[derive(Clone, Debug, Serialize)]
pub struct GsVariables {
    #[serde(with = "rows")]
    pub t_plus: Mat,
    #[serde(with = "rows")]
    pub t_minus: Mat,
    #[serde(with = "rows")]
    pub q: Mat,
    #[serde(with = "rows")]
    pub l: Mat,
    #[serde(with = "rows")]
    pub j: Mat,
    #[serde(with = "rows")]
    pub r: Mat,
    #[serde(with = "rows")]
    pub s: Mat,
    #[serde(with = "rows")]
    pub u: Mat,
    /// Transformed controller matrices.
    pub hat: LftController,
}

/// Factorizations `M N^T = U - R S` and `L2 J2^T = I - L J` with `N = I`
/// and `J2 = I`.
#[derive(Clone, Debug, Serialize)]
pub struct RecoveryFactors {
    #[serde(with = "rows")]
    pub m: Mat,
    #[serde(with = "rows")]
    pub n: Mat,
    #[serde(with = "rows")]
    pub l2: Mat,
    #[serde(with = "rows")]
    pub j2: Mat,
}

/// Controller and closed-loop certificate obtained from the transformed
/// variables.
#[derive(Clone, Debug, Serialize)]
pub struct Recovery {
    pub controller: LftController,
    pub factors: RecoveryFactors,
    /// Closed-loop scaling, commuting with `diag(Delta, Delta)`.
    #[serde(with = "rows")]
    pub x_cl: Mat,
    #[serde(with = "rows")]
    pub p_cl_plus: Mat,
    #[serde(with = "rows")]
    pub p_cl_minus: Mat,
}

#[derive(Clone, Debug, Serialize)]
pub struct GsSynthesisResult {
    pub controller: LftController,
    pub gamma: f64,
    pub variables: GsVariables,
    pub factors: RecoveryFactors,
    #[serde(with = "rows")]
    pub x_cl: Mat,
    #[serde(with = "rows")]
    pub p_cl_plus: Mat,
    #[serde(with = "rows")]
    pub p_cl_minus: Mat,
    /// Whether `U` had to be perturbed to make the factors invertible.
    pub perturbed: bool,
    pub margins: MarginReport,
    pub solver: SolverSummary,
}

/// Robust H2 gain-scheduled output feedback of full order.
///
/// The LMIs are solved in Riccati coordinates of the plant (see
/// [`LftPlant::riccati_coordinates`]); the controller does not depend on
/// the state coordinates, and the variables and certificate are mapped
/// back to the original ones.
pub fn synthesize_gs(plant: &LftPlant, opts: &SolverOptions) -> Result<GsSynthesisResult> {
    check_plant(plant)?;
    let (t, t_inv) = plant.riccati_coordinates();
    let scaled = plant.change_coordinates(&t, &t_inv);
    let gp = build_gs_synthesis_with_margin(&scaled, opts.feas_margin)?;
    let (asg, margins, solver) = solve_program(&gp.program, opts)?;
    let vars = extract(&gp, &asg, &scaled);
    let (vars, perturbed, margins) = match recover_gs_controller(&vars, &scaled) {
        Ok(_) => (vars, false, margins),
        Err(Error::SingularFactor { .. }) => {
            let mut asg = asg;
            let u = asg.get(gp.u).unwrap() + eye(plant.dims.n) * U_PERTURBATION;
            asg.set(gp.u, u);
            let margins = recheck(&gp.program, &asg)?;
            let vars = extract(&gp, &asg, &scaled);
            recover_gs_controller(&vars, &scaled)?;
            (vars, true, margins)
        }
        Err(e) => return Err(e),
    };
    let vars = to_original_coordinates(vars, &t, &t_inv);
    let rec = recover_gs_controller(&vars, plant)?;
    Ok(GsSynthesisResult {
        controller: rec.controller,
        gamma: vars.q.trace().max(0.0).sqrt(),
        factors: rec.factors,
        x_cl: rec.x_cl,
        p_cl_plus: rec.p_cl_plus,
        p_cl_minus: rec.p_cl_minus,
        variables: vars,
        perturbed,
        margins,
        solver,
    })
}

/// Variables of the plant in coordinates `x = T x~` expressed for the
/// original plant. The LMIs transform by the congruence `diag(T^-1, T^T)`.
fn to_original_coordinates(v: GsVariables, t: &Mat, t_inv: &Mat) -> GsVariables {
    let n = t.nrows();
    let t_inv_tr = t_inv.transpose();
    let c_inv = grid(&[vec![t, &zeros(n, n)], vec![&zeros(n, n), &t_inv_tr]]);
    let back = |m: &Mat| sym(&(&c_inv * m * c_inv.transpose()));
    GsVariables {
        t_plus: back(&v.t_plus),
        t_minus: back(&v.t_minus),
        r: &t_inv_tr * &v.r * t_inv,
        s: t * &v.s * t.transpose(),
        u: &t_inv_tr * &v.u * t.transpose(),
        hat: LftController {
            a_k: &t_inv_tr * &v.hat.a_k * t.transpose(),
            b_k1: &t_inv_tr * &v.hat.b_k1,
            b_k0: &t_inv_tr * &v.hat.b_k0,
            c_k1: &v.hat.c_k1 * t.transpose(),
            c_k0: &v.hat.c_k0 * t.transpose(),
            ..v.hat
        },
        ..v
    }
}

fn recheck(program: &LmiProgram, asg: &Assignment) -> Result<MarginReport> {
    let report = program.check(asg)?;
    if report.all_positive() {
        Ok(report)
    } else {
        Err(Error::SolverFailure(format!(
            "perturbing U broke a constraint (min eigenvalue {:e})",
            report.min_margin()
        )))
    }
}

fn extract(gp: &GsProgram, asg: &Assignment, plant: &LftPlant) -> GsVariables {
    let get = |id| asg.get(id).cloned().unwrap();
    let np = plant.dims.np;
    let scaling = |id: Option<_>| id.map_or_else(|| zeros(np, np), get);
    GsVariables {
        t_plus: get(gp.t_plus),
        t_minus: get(gp.t_minus),
        q: get(gp.q),
        l: scaling(gp.l),
        j: scaling(gp.j),
        r: get(gp.r),
        s: get(gp.s),
        u: get(gp.u),
        hat: LftController {
            a_k: get(gp.a_k),
            b_k1: get(gp.b_k1),
            b_k0: get(gp.b_k0),
            c_k1: get(gp.c_k1),
            c_k0: get(gp.c_k0),
            d_k10: get(gp.d_k10),
            d_k00: get(gp.d_k00),
        },
    }
}

/// `(Lm, Rm, C)` with `Khat = C + Lm K Rm`.
fn transform(vars: &GsVariables, f: &RecoveryFactors, p: &LftPlant) -> (Mat, Mat, Mat) {
    let d = p.dims;
    let (n, np, nu, ny) = (d.n, d.np, d.nu, d.ny);
    let z = zeros;
    let (l, j, r, s) = (&vars.l, &vars.j, &vars.r, &vars.s);
    let lm = grid(&[
        vec![&f.m, &(r * &p.b2), &z(n, np)],
        vec![&z(nu, n), &eye(nu), &z(nu, np)],
        vec![&z(np, n), &(l * &p.d02), &f.l2],
    ]);
    let rm = grid(&[
        vec![&f.n.transpose(), &z(n, ny), &z(n, np)],
        vec![&(&p.c2 * s), &eye(ny), &(&p.d20 * j)],
        vec![&z(np, n), &z(np, ny), &f.j2.transpose()],
    ]);
    let c = grid(&[
        vec![&(r * &p.a * s), &z(n, ny), &(r * &p.b0 * j)],
        vec![&z(nu, n), &z(nu, ny), &z(nu, np)],
        vec![&(l * &p.c0 * s), &z(np, ny), &(l * &p.d00 * j)],
    ]);
    (lm, rm, c)
}

fn factors(vars: &GsVariables, np: usize) -> Result<RecoveryFactors> {
    let n = vars.r.nrows();
    let m = &vars.u - &vars.r * &vars.s;
    let l2 = eye(np) - &vars.l * &vars.j;
    for (name, f) in [("M", &m), ("L2", &l2)] {
        if f.nrows() == 0 {
            continue;
        }
        let ratio = inverse_condition(f);
        if ratio < FACTOR_CONDITION_LIMIT {
            return Err(Error::SingularFactor { factor: name, ratio });
        }
    }
    Ok(RecoveryFactors { m, n: eye(n), l2, j2: eye(np) })
}

fn invert(m: &Mat, name: &'static str) -> Result<Mat> {
    inverse(m).ok_or_else(|| Error::SingularFactor { factor: name, ratio: 0.0 })
}

/// Undo the linearizing change of variables and build the closed-loop
/// certificate `(P_cl+, P_cl-, X_cl)`.
pub fn recover_gs_controller(vars: &GsVariables, plant: &LftPlant) -> Result<Recovery> {
    let d = plant.dims;
    let (n, np, nu, ny) = (d.n, d.np, d.nu, d.ny);
    let f = factors(vars, np)?;
    let (lm, rm, c) = transform(vars, &f, plant);
    let k = invert(&lm, "Lm")? * (vars.hat.matrix() - c) * invert(&rm, "Rm")?;
    let controller = LftController::from_matrix(&k, n, nu, ny, np);

    let z_inv = invert(&grid(&[vec![&eye(n), &vars.r.transpose()], vec![&zeros(n, n), &f.m.transpose()]]), "M")?;
    let congruence = |t: &Mat| sym(&(z_inv.transpose() * t * &z_inv));

    let x_cl = if np == 0 {
        zeros(0, 0)
    } else {
        let l2_inv = invert(&f.l2, "L2")?;
        let j3 = -(&vars.l * l2_inv);
        sym(&grid(&[vec![&vars.j, &eye(np)], vec![&eye(np), &j3]]))
    };
    Ok(Recovery {
        controller,
        factors: f,
        x_cl,
        p_cl_plus: congruence(&vars.t_plus),
        p_cl_minus: congruence(&vars.t_minus),
    })
}

/// Map a controller to the transformed variables: `Khat = C + Lm K Rm`.
pub fn forward_transform(vars: &GsVariables, controller: &LftController, plant: &LftPlant) -> Result<LftController> {
    let d = plant.dims;
    let f = factors(vars, d.np)?;
    let (lm, rm, c) = transform(vars, &f, plant);
    let khat = c + lm * controller.matrix() * rm;
    Ok(LftController::from_matrix(&khat, d.n, d.nu, d.ny, d.np))
}

/// Evaluate the closed-loop analysis LMIs at the certificate recovered by
/// [`synthesize_gs`], without solving anything. The loop is first put in
/// coordinates where `P_cl+` is the identity: definiteness does not depend
/// on the coordinates, but round-off does.
pub fn check_gs_certificate(result: &GsSynthesisResult, plant: &LftPlant) -> Result<MarginReport> {
    let clp = close_output_feedback(plant, &result.controller)?;
    let (t, t_inv) = inverse(&result.p_cl_plus)
        .and_then(|p| normalizing_coordinates(&p, 0.0))
        .ok_or_else(|| Error::NonFiniteResult("closed-loop certificate P+".into()))?;
    let ap = build_analysis_with_margin(&clp.change_coordinates(&t, &t_inv), 0.0)?;
    let into = |p: &Mat| sym(&(&t_inv * p * t_inv.transpose()));
    let mut asg = Assignment::new();
    asg.set(ap.p_minus, into(&result.p_cl_minus));
    asg.set(ap.p_plus, into(&result.p_cl_plus));
    if let Some(x) = ap.x {
        asg.set(x, result.x_cl.clone());
    }
    asg.set(ap.q, result.variables.q.clone());
    ap.program.check(&asg)
}
