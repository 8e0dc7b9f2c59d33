//! LMI programs: variables, constraints `expr >= margin * I`, and a
//! linear objective.

use serde::Serialize;

use super::expr::{Assignment, DecisionVar, MatExpr, VarId, VarKind};
use crate::error::{Error, Result};
use crate::linalg::{asymmetry, eye, max_abs, min_eig, sym, Mat};

/// Default relative strictness margin.
pub const FEAS_MARGIN: f64 = 1e-7;

#[derive(Clone, Debug)]
pub struct Constraint {
    pub name: String,
    pub expr: MatExpr,
    /// The constraint is `expr - margin * I >= 0`.
    pub margin: f64,
}

impl Constraint {
    pub fn dim(&self) -> usize {
        self.expr.rows()
    }
}

#[derive(Clone, Debug, Default)]
pub struct LmiProgram {
    pub variables: Vec<DecisionVar>,
    pub constraints: Vec<Constraint>,
    /// Minimize `sum <W, V>`; empty for a feasibility problem.
    pub objective: Vec<(VarId, Mat)>,
    pub feas_margin: f64,
}

impl LmiProgram {
    pub fn new() -> Self {
        Self { feas_margin: FEAS_MARGIN, ..Default::default() }
    }

    pub fn add_var(&mut self, name: &str, kind: VarKind) -> VarId {
        let id = VarId(self.variables.len());
        let offset = self.num_coords();
        self.variables.push(DecisionVar { id, name: name.into(), kind, offset });
        id
    }

    pub fn var(&self, id: VarId) -> &DecisionVar {
        &self.variables[id.0]
    }

    pub fn find(&self, name: &str) -> Option<VarId> {
        self.variables.iter().find(|v| v.name == name).map(|v| v.id)
    }

    /// The variable as an expression.
    pub fn x(&self, id: VarId) -> MatExpr {
        MatExpr::var(self.var(id))
    }

    /// Require `expr > 0`, realized as `expr >= eps I` with
    /// `eps = feas_margin * (1 + max |constant|)`.
    pub fn require_pd(&mut self, name: &str, expr: MatExpr) {
        assert_eq!(expr.rows(), expr.cols(), "constraint must be square");
        let margin = self.feas_margin * (1.0 + max_abs(&expr.constant));
        self.constraints.push(Constraint { name: name.into(), expr, margin });
    }

    pub fn minimize_trace(&mut self, id: VarId) {
        let (n, _) = self.var(id).kind.shape();
        self.objective.push((id, eye(n)));
    }

    pub fn num_coords(&self) -> usize {
        self.variables.iter().map(|v| v.kind.coords()).sum()
    }

    /// Scalar coordinate vector to structured values.
    pub fn scatter(&self, x: &[f64]) -> Assignment {
        let mut a = Assignment::new();
        for v in &self.variables {
            let k = v.kind.coords();
            a.set(v.id, v.kind.from_coordinates(&x[v.offset..v.offset + k]));
        }
        a
    }

    /// Structured values to the scalar coordinate vector.
    pub fn gather(&self, a: &Assignment) -> Result<Vec<f64>> {
        let mut x = vec![0.0; self.num_coords()];
        for v in &self.variables {
            let m = a.get(v.id).ok_or_else(|| Error::MissingVariable(v.name.clone()))?;
            if m.shape() != v.kind.shape() {
                return Err(Error::dims(v.name.clone(), format!("{:?}", v.kind.shape()), format!("{:?}", m.shape())));
            }
            let c = v.kind.coordinates_of(m);
            x[v.offset..v.offset + c.len()].copy_from_slice(&c);
        }
        Ok(x)
    }

    pub fn eval_expr(&self, expr: &MatExpr, a: &Assignment) -> Result<Mat> {
        expr.eval_with(a, |id| self.var(id).name.clone())
    }

    /// Constraint matrices (without the margin shift) at an assignment.
    pub fn eval_constraints(&self, a: &Assignment) -> Result<Vec<Mat>> {
        self.constraints.iter().map(|c| self.eval_expr(&c.expr, a)).collect()
    }

    pub fn objective_value(&self, a: &Assignment) -> Result<f64> {
        let mut total = 0.0;
        for (id, w) in &self.objective {
            let v = a.get(*id).ok_or_else(|| Error::MissingVariable(self.var(*id).name.clone()))?;
            total += w.component_mul(v).sum();
        }
        Ok(total)
    }

    /// Minimum eigenvalue of every constraint and the objective value.
    pub fn check(&self, a: &Assignment) -> Result<MarginReport> {
        let mut margins = Vec::with_capacity(self.constraints.len());
        for (c, m) in self.constraints.iter().zip(self.eval_constraints(a)?) {
            margins.push(ConstraintMargin {
                name: c.name.clone(),
                min_eig: min_eig(&sym(&m)),
                required: c.margin,
                asymmetry: asymmetry(&m),
            });
        }
        let objective = if self.objective.is_empty() { None } else { Some(self.objective_value(a)?) };
        Ok(MarginReport { margins, objective })
    }

    /// Debug dump: variable table and constraints as sparse triplets
    /// `{i, j, var_coord, value}`; `var_coord = -1` marks the constant term.
    pub fn to_debug_json(&self) -> serde_json::Value {
        let sdp = crate::sdp::to_standard_form(self);
        let vars: Vec<_> = self
            .variables
            .iter()
            .map(|v| {
                serde_json::json!({
                    "name": v.name,
                    "kind": match &v.kind {
                        VarKind::Symmetric(_) => "symmetric",
                        VarKind::Rectangular(..) => "rectangular",
                        VarKind::Scaling(_) => "scaling",
                    },
                    "shape": v.kind.shape(),
                    "offset": v.offset,
                    "coords": v.kind.coords(),
                })
            })
            .collect();
        let constraints: Vec<_> = self
            .constraints
            .iter()
            .enumerate()
            .map(|(b, c)| {
                let mut triplets = Vec::new();
                for &(i, j, v) in &sdp.blocks[b].f0 {
                    triplets.push(serde_json::json!({"i": i, "j": j, "var_coord": -1, "value": v}));
                }
                for (k, entries) in &sdp.blocks[b].coeffs {
                    for &(i, j, v) in entries {
                        triplets.push(serde_json::json!({"i": i, "j": j, "var_coord": k, "value": v}));
                    }
                }
                serde_json::json!({"name": c.name, "dim": c.dim(), "margin": c.margin, "entries": triplets})
            })
            .collect();
        serde_json::json!({"variables": vars, "constraints": constraints, "objective": sdp.c})
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConstraintMargin {
    pub name: String,
    /// Smallest eigenvalue of the symmetric part.
    pub min_eig: f64,
    /// The strictness margin the solver was asked to enforce.
    pub required: f64,
    pub asymmetry: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct MarginReport {
    pub margins: Vec<ConstraintMargin>,
    pub objective: Option<f64>,
}

impl MarginReport {
    pub fn min_margin(&self) -> f64 {
        self.margins.iter().map(|m| m.min_eig).fold(f64::INFINITY, f64::min)
    }

    pub fn all_positive(&self) -> bool {
        self.margins.iter().all(|m| m.min_eig > 0.0)
    }
}

/// Free-standing form of [`LmiProgram::check`].
pub fn check_solution(program: &LmiProgram, a: &Assignment) -> Result<MarginReport> {
    program.check(a)
}
