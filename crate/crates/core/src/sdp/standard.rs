//! Standard-form SDPs `min c'x  s.t.  F0_b + sum_k x_k F_kb >= 0` for
//! every block `b`.

use std::fmt::Write as _;

use crate::lmi::program::LmiProgram;
use crate::linalg::{eye, sym, zeros, Mat};

/// Upper-triangle triplets `(i, j, value)` with `i <= j`.
pub type Triplets = Vec<(usize, usize, f64)>;

#[derive(Clone, Debug, PartialEq)]
pub struct SdpBlock {
    pub dim: usize,
    pub f0: Triplets,
    /// `(coordinate, F_k)` for every coordinate with a nonzero matrix.
    pub coeffs: Vec<(usize, Triplets)>,
    /// Strictness margin already subtracted from `F0`.
    pub shift: f64,
}

impl SdpBlock {
    pub fn f0_dense(&self) -> Mat {
        dense(self.dim, &self.f0)
    }

    /// `F0 + sum_k x_k F_k`.
    pub fn eval(&self, x: &[f64]) -> Mat {
        let mut m = self.f0_dense();
        for (k, t) in &self.coeffs {
            add_sym(&mut m, t, x[*k]);
        }
        m
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StandardSdp {
    pub c: Vec<f64>,
    pub blocks: Vec<SdpBlock>,
}

impl StandardSdp {
    pub fn num_vars(&self) -> usize {
        self.c.len()
    }

    pub fn block_sizes(&self) -> Vec<usize> {
        self.blocks.iter().map(|b| b.dim).collect()
    }

    /// Sparse SDPA text. SDPA reads `sum_k x_k F_k - F0 >= 0`, so the
    /// constant block is written negated.
    pub fn to_sdpa(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{}", self.num_vars());
        let _ = writeln!(out, "{}", self.blocks.len());
        let sizes: Vec<String> = self.blocks.iter().map(|b| b.dim.to_string()).collect();
        let _ = writeln!(out, "{}", sizes.join(" "));
        let c: Vec<String> = self.c.iter().map(|v| format!("{v:e}")).collect();
        let _ = writeln!(out, "{}", c.join(" "));
        for (b, blk) in self.blocks.iter().enumerate() {
            for &(i, j, v) in &blk.f0 {
                let _ = writeln!(out, "0 {} {} {} {:e}", b + 1, i + 1, j + 1, -v);
            }
        }
        for (b, blk) in self.blocks.iter().enumerate() {
            for (k, t) in &blk.coeffs {
                for &(i, j, v) in t {
                    let _ = writeln!(out, "{} {} {} {} {:e}", k + 1, b + 1, i + 1, j + 1, v);
                }
            }
        }
        out
    }
}

pub(crate) fn dense(dim: usize, t: &Triplets) -> Mat {
    let mut m = zeros(dim, dim);
    add_sym(&mut m, t, 1.0);
    m
}

pub(crate) fn add_sym(m: &mut Mat, t: &Triplets, s: f64) {
    for &(i, j, v) in t {
        m[(i, j)] += s * v;
        if i != j {
            m[(j, i)] += s * v;
        }
    }
}

fn upper(m: &Mat) -> Triplets {
    let mut t = Vec::new();
    for j in 0..m.ncols() {
        for i in 0..=j {
            if m[(i, j)] != 0.0 {
                t.push((i, j, m[(i, j)]));
            }
        }
    }
    t
}

/// Scatter the structured program into scalar coordinates. Each
/// constraint becomes one block with `F0 = sym(constant) - margin I`.
pub fn to_standard_form(program: &LmiProgram) -> StandardSdp {
    let n = program.num_coords();
    let bases: Vec<_> = program.variables.iter().map(|v| v.kind.basis()).collect();

    let mut c = vec![0.0; n];
    for (id, w) in &program.objective {
        let v = program.var(*id);
        for (k, e) in bases[id.0].iter().enumerate() {
            c[v.offset + k] += e.iter().map(|&(i, j, s)| s * w[(i, j)]).sum::<f64>();
        }
    }

    let mut blocks = Vec::with_capacity(program.constraints.len());
    for con in &program.constraints {
        let dim = con.dim();
        let f0 = sym(&con.expr.constant) - eye(dim) * con.margin;
        let mut used: Vec<usize> = con.expr.vars().map(|v| v.0).collect();
        used.sort_unstable();
        used.dedup();
        let mut coeffs = Vec::new();
        let mut scratch = zeros(dim, dim);
        for vi in used {
            let v = &program.variables[vi];
            let terms: Vec<_> = con.expr.terms.iter().filter(|t| t.var.0 == vi).collect();
            for (k, e) in bases[vi].iter().enumerate() {
                scratch.fill(0.0);
                for t in &terms {
                    t.add_basis(e, 1.0, &mut scratch);
                }
                let t = upper(&sym(&scratch));
                if !t.is_empty() {
                    coeffs.push((v.offset + k, t));
                }
            }
        }
        blocks.push(SdpBlock { dim, f0: upper(&f0), coeffs, shift: con.margin });
    }
    StandardSdp { c, blocks }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lft::structure::UncertaintyStructure;
    use crate::lmi::expr::{MatExpr, VarKind};
    use crate::linalg::max_abs;

    #[test]
    fn symmetric_two_by_two_has_three_coordinates() {
        let mut p = LmiProgram::new();
        let v = p.add_var("P", VarKind::Symmetric(2));
        p.require_pd("P", p.x(v));
        let s = to_standard_form(&p);
        assert_eq!(s.num_vars(), 3);
        assert_eq!(s.blocks[0].coeffs.len(), 3);
    }

    #[test]
    fn scaling_coordinates() {
        let mut p = LmiProgram::new();
        let st = UncertaintyStructure::new(vec![2], vec![3]).unwrap();
        let v = p.add_var("X", VarKind::Scaling(st));
        p.require_pd("X", p.x(v));
        assert_eq!(to_standard_form(&p).num_vars(), 4);
    }

    #[test]
    fn standard_form_matches_expression() {
        let mut p = LmiProgram::new();
        let pv = p.add_var("P", VarKind::Symmetric(2));
        let vv = p.add_var("V", VarKind::Rectangular(2, 2));
        let a = Mat::from_row_slice(2, 2, &[0.3, -0.2, 0.5, 0.1]);
        let b = Mat::from_row_slice(2, 2, &[1.0, 0.4, -0.7, 2.0]);
        let av = p.x(vv).lmul(&a);
        let e = MatExpr::sym_lower(
            &[2, 2],
            &[
                vec![Some(p.x(vv).add(&p.x(vv).t()).sub(&p.x(pv)))],
                vec![Some(av.rmul(&b)), Some(p.x(pv).add_const(&Mat::identity(2, 2)))],
            ],
        );
        p.require_pd("c", e);
        p.minimize_trace(pv);
        let s = to_standard_form(&p);
        let x: Vec<f64> = (0..p.num_coords()).map(|i| 0.3 * i as f64 - 0.7).collect();
        let asg = p.scatter(&x);
        let direct = p.eval_constraints(&asg).unwrap().remove(0) - Mat::identity(4, 4) * p.constraints[0].margin;
        assert!(max_abs(&(s.blocks[0].eval(&x) - direct)) < 1e-12);
        let obj: f64 = s.c.iter().zip(&x).map(|(c, x)| c * x).sum();
        assert!((obj - p.objective_value(&asg).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn sdpa_header() {
        let mut p = LmiProgram::new();
        let q = p.add_var("q", VarKind::Symmetric(1));
        p.require_pd("q", p.x(q));
        p.minimize_trace(q);
        let text = to_standard_form(&p).to_sdpa();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "1");
        assert_eq!(lines[1], "1");
        assert_eq!(lines[2], "1");
        assert!(lines.last().unwrap().starts_with("1 1 1 1 1e0"));
    }
}
