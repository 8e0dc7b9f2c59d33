//! Zero-order-hold discretization.

use super::plant::{check_plant, LftPlant};
use crate::error::{Error, Result};
use crate::linalg::{all_finite, hcat, zeros, Mat};

/// Discretize `(A, [B0 B1 B2])` exactly under a zero-order hold on all
/// inputs, uncertainty channel included. The output equations are copied.
pub fn zoh_discretize(plant: &LftPlant, ts: f64) -> Result<LftPlant> {
    check_plant(plant)?;
    if plant.is_discrete() {
        return Err(Error::WrongTimeDomain { expected: "continuous-time" });
    }
    if !(ts > 0.0 && ts.is_finite()) {
        return Err(Error::InvalidArgument(format!("sample time must be positive, got {ts}")));
    }
    let (ad, bd) = zoh(&plant.a, &hcat(&[&plant.b0, &plant.b1, &plant.b2]), ts)?;
    let d = plant.dims;
    let mut out = plant.clone();
    out.a = ad;
    out.b0 = bd.columns(0, d.np).into_owned();
    out.b1 = bd.columns(d.np, d.nd).into_owned();
    out.b2 = bd.columns(d.np + d.nd, d.nu).into_owned();
    out.sample_time = ts;
    Ok(out)
}

/// `(e^{A Ts}, int_0^Ts e^{A s} ds B)` from one exponential of the
/// embedding `[[A, B], [0, 0]] Ts`.
pub fn zoh(a: &Mat, b: &Mat, ts: f64) -> Result<(Mat, Mat)> {
    let n = a.nrows();
    let m = b.ncols();
    let mut emb = zeros(n + m, n + m);
    emb.view_mut((0, 0), (n, n)).copy_from(&(a * ts));
    emb.view_mut((0, n), (n, m)).copy_from(&(b * ts));
    let e = emb.exp();
    if !all_finite(&e) {
        return Err(Error::NonFiniteResult("matrix exponential".into()));
    }
    Ok((e.view((0, 0), (n, n)).into_owned(), e.view((0, n), (n, m)).into_owned()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lft::plant::PlantDims;
    use crate::lft::structure::UncertaintyStructure;

    fn scalar_plant(a: f64, b1: f64) -> LftPlant {
        let dims = PlantDims { n: 1, np: 0, nd: 1, ne: 0, nu: 0, ny: 0 };
        let mut p = LftPlant::zeros(dims, UncertaintyStructure::nominal(), 0.0);
        p.a[(0, 0)] = a;
        p.b1[(0, 0)] = b1;
        p
    }

    #[test]
    fn integrator() {
        let d = zoh_discretize(&scalar_plant(0.0, 1.0), 0.01).unwrap();
        assert!((d.a[(0, 0)] - 1.0).abs() < 1e-15);
        assert!((d.b1[(0, 0)] - 0.01).abs() < 1e-15);
        assert_eq!(d.sample_time, 0.01);
    }

    #[test]
    fn first_order_closed_form() {
        let (a, b, ts) = (-3.0, 2.0, 0.05);
        let d = zoh_discretize(&scalar_plant(a, b), ts).unwrap();
        let ead = (a * ts).exp();
        assert!((d.a[(0, 0)] - ead).abs() < 1e-14);
        assert!((d.b1[(0, 0)] - (ead - 1.0) * b / a).abs() < 1e-14);
    }

    #[test]
    fn double_integrator() {
        let a = Mat::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]);
        let b = Mat::from_column_slice(2, 1, &[0.0, 1.0]);
        let (ad, bd) = zoh(&a, &b, 0.1).unwrap();
        assert!((ad - Mat::from_row_slice(2, 2, &[1.0, 0.1, 0.0, 1.0])).abs().max() < 1e-15);
        assert!((bd - Mat::from_column_slice(2, 1, &[0.005, 0.1])).abs().max() < 1e-15);
    }

    #[test]
    fn rejects_discrete_input() {
        let mut p = scalar_plant(0.0, 1.0);
        p.sample_time = 0.1;
        assert!(matches!(zoh_discretize(&p, 0.1), Err(Error::WrongTimeDomain { .. })));
    }
}
