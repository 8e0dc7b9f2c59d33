//! Affine LPV systems `A(rho) = A0 + rho A1` and their LFT form.

use super::plant::{check_plant, LftPlant, PlantDims};
use super::structure::UncertaintyStructure;
use crate::error::{Error, Result};
use crate::linalg::{zeros, Mat};

/// Relative singular-value cutoff for the rank of `A1`.
pub const RANK_TOL: f64 = 1e-10;
/// Ratios within this factor of [`RANK_TOL`] are reported as ambiguous.
const AMBIGUITY_BAND: f64 = 100.0;

#[derive(Clone, Debug, PartialEq)]
pub struct AffineLpvSystem {
    pub a0: Mat,
    pub a1: Mat,
    pub b1: Mat,
    pub b2: Mat,
    pub c1: Mat,
    pub c2: Mat,
    pub d11: Mat,
    pub d12: Mat,
    pub d21: Mat,
    pub d22: Mat,
    pub rho_range: (f64, f64),
    /// Seconds; 0 for continuous time.
    pub sample_time: f64,
}

impl AffineLpvSystem {
    pub fn a_at(&self, rho: f64) -> Mat {
        &self.a0 + &self.a1 * rho
    }

    /// `(rho0, rho1)` with `rho = rho0 + rho1 delta`.
    pub fn normalization(&self) -> (f64, f64) {
        let (lo, hi) = self.rho_range;
        ((lo + hi) / 2.0, (hi - lo) / 2.0)
    }

    pub fn delta_of(&self, rho: f64) -> f64 {
        let (r0, r1) = self.normalization();
        (rho - r0) / r1
    }
}

/// Pull the parameter out of `A(rho)` as a repeated scalar block
/// `delta I_r`, `r = rank(A1)`.
pub fn lpv_to_lft(sys: &AffineLpvSystem) -> Result<LftPlant> {
    let n = sys.a0.nrows();
    let (lo, hi) = sys.rho_range;
    if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::InvalidArgument(format!("rho range [{lo}, {hi}] is empty")));
    }
    if sys.a1.shape() != (n, n) {
        return Err(Error::dims("A1", format!("{n}x{n}"), format!("{}x{}", sys.a1.nrows(), sys.a1.ncols())));
    }
    let (rho0, rho1) = sys.normalization();
    let (e, g) = factor(&(&sys.a1 * rho1))?;
    let r = e.ncols();

    let dims = PlantDims {
        n,
        np: r,
        nd: sys.b1.ncols(),
        ne: sys.c1.nrows(),
        nu: sys.b2.ncols(),
        ny: sys.c2.nrows(),
    };
    let structure = if r == 0 {
        UncertaintyStructure::nominal()
    } else {
        UncertaintyStructure::scalar(&[r])?
    };
    let mut p = LftPlant::zeros(dims, structure, sys.sample_time);
    p.a = &sys.a0 + &sys.a1 * rho0;
    p.b0 = e;
    p.c0 = g;
    p.b1 = sys.b1.clone();
    p.b2 = sys.b2.clone();
    p.c1 = sys.c1.clone();
    p.c2 = sys.c2.clone();
    p.d11 = sys.d11.clone();
    p.d12 = sys.d12.clone();
    p.d21 = sys.d21.clone();
    p.d22 = sys.d22.clone();
    check_plant(&p)?;
    Ok(p)
}

/// Balanced rank-revealing factorization `m = E G`.
fn factor(m: &Mat) -> Result<(Mat, Mat)> {
    let n = m.nrows();
    let svd = m.clone().svd(true, true);
    let (u, vt) = (svd.u.unwrap(), svd.v_t.unwrap());
    let mut idx: Vec<usize> = (0..svd.singular_values.len()).collect();
    idx.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));
    let top = idx.first().map_or(0.0, |&i| svd.singular_values[i]);
    if top == 0.0 {
        return Ok((zeros(n, 0), zeros(0, n)));
    }
    let mut keep = Vec::new();
    for &i in &idx {
        let ratio = svd.singular_values[i] / top;
        if ratio > RANK_TOL / AMBIGUITY_BAND && ratio < RANK_TOL * AMBIGUITY_BAND {
            return Err(Error::RankDeficiencyWarning {
                what: "A1".into(),
                ratio,
                threshold: RANK_TOL,
            });
        }
        if ratio > RANK_TOL {
            keep.push(i);
        }
    }
    let r = keep.len();
    let mut e = zeros(n, r);
    let mut g = zeros(r, n);
    for (k, &i) in keep.iter().enumerate() {
        let s = svd.singular_values[i].sqrt();
        e.set_column(k, &(u.column(i) * s));
        g.set_row(k, &(vt.row(i) * s));
    }
    Ok((e, g))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::max_abs;

    fn lpv(a0: Mat, a1: Mat, range: (f64, f64)) -> AffineLpvSystem {
        let n = a0.nrows();
        AffineLpvSystem {
            a0,
            a1,
            b1: zeros(n, 1),
            b2: zeros(n, 1),
            c1: zeros(1, n),
            c2: zeros(1, n),
            d11: zeros(1, 1),
            d12: zeros(1, 1),
            d21: zeros(1, 1),
            d22: zeros(1, 1),
            rho_range: range,
            sample_time: 0.0,
        }
    }

    #[test]
    fn constant_system_is_nominal() {
        let p = lpv_to_lft(&lpv(Mat::identity(2, 2), zeros(2, 2), (0.0, 1.0))).unwrap();
        assert_eq!(p.dims.np, 0);
        assert!(p.structure.is_nominal());
    }

    #[test]
    fn scalar_factorization() {
        let p = lpv_to_lft(&lpv(Mat::from_element(1, 1, -1.0), Mat::from_element(1, 1, 1.0), (-1.0, 1.0))).unwrap();
        assert!((p.a[(0, 0)] + 1.0).abs() < 1e-15);
        assert!(((&p.b0 * &p.c0)[(0, 0)] - 1.0).abs() < 1e-15);
        assert_eq!(p.structure.scalar_blocks, vec![1]);
    }

    #[test]
    fn round_trip_skew_block() {
        let a0 = Mat::from_row_slice(3, 3, &[0.0, 1.0, 0.0, -2.0, -0.1, 0.0, 0.0, 0.0, -1.0]);
        let mut a1 = zeros(3, 3);
        a1[(0, 1)] = 0.04;
        a1[(1, 0)] = -0.04;
        let sys = lpv(a0, a1, (315.0, 1100.0));
        let p = lpv_to_lft(&sys).unwrap();
        assert_eq!(p.dims.np, 2);
        for k in 0..20 {
            let rho = 315.0 + 785.0 * k as f64 / 19.0;
            let d = sys.delta_of(rho);
            let rebuilt = &p.a + &p.b0 * d * &p.c0;
            assert!(max_abs(&(rebuilt - sys.a_at(rho))) < 1e-10);
        }
    }

    #[test]
    fn ambiguous_rank_is_reported() {
        let a1 = Mat::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, 1e-10]));
        let r = lpv_to_lft(&lpv(zeros(2, 2), a1, (0.0, 1.0)));
        assert!(matches!(r, Err(Error::RankDeficiencyWarning { .. })));
    }
}
