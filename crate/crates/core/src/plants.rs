//! The two benchmark plants: a two-disk slider system with uncertain rod
//! speeds and a magnetic bearing scheduled on rotor speed.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::Result;
use crate::lft::discretize::zoh_discretize;
use crate::lft::lpv::{lpv_to_lft, AffineLpvSystem};
use crate::lft::plant::{check_plant, LftPlant, PlantDims};
use crate::lft::structure::UncertaintyStructure;
use crate::lft::weights::{augment_with_weights, StateSpace, Weight, WeightPlacement};
use crate::linalg::{eye, zeros, Mat};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TwoDiskParams {
    /// kg
    pub m1: f64,
    /// kg
    pub m2: f64,
    /// kg/s
    pub b: f64,
    /// N/m
    pub k: f64,
    /// rad/s
    pub omega1_range: (f64, f64),
    /// rad/s
    pub omega2_range: (f64, f64),
    /// s
    pub ts: f64,
}

impl Default for TwoDiskParams {
    fn default() -> Self {
        Self { m1: 1.0, m2: 0.5, b: 1.0, k: 200.0, omega1_range: (0.0, 3.0), omega2_range: (0.0, 5.0), ts: 0.01 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TwoDiskPlants {
    /// Continuous-time LFT plant with `e = y = r2`.
    pub raw: LftPlant,
    /// Weighted and discretized plant used for synthesis.
    pub weighted: LftPlant,
}

/// `(center, half width)` of `Omega^2` over a speed interval.
fn squared_span((lo, hi): (f64, f64)) -> (f64, f64) {
    let (a, b) = (lo * lo, hi * hi);
    ((a + b) / 2.0, (b - a) / 2.0)
}

/// Normalized uncertainty of a rod speed: `delta = (Omega^2 - c) / h`.
pub fn two_disk_delta(range: (f64, f64), omega: f64) -> f64 {
    let (c, h) = squared_span(range);
    (omega * omega - c) / h
}

/// Weights, in the order they are applied: `W_a` on an input disturbance,
/// `Act` in series with the force, `W_e` on `r2`, `W_u` on the force
/// command and `W_n` on sensor noise.
pub fn two_disk_weights() -> Result<Vec<Weight>> {
    Ok(vec![
        Weight::new("W_a", StateSpace::gain(1e-5, 1), WeightPlacement::InputDisturbance),
        Weight::new("Act", StateSpace::from_tf(&[1.0], &[0.01, 1.0])?, WeightPlacement::Actuator),
        Weight::new("W_e", StateSpace::from_tf(&[0.3, 1.2], &[1.0, 0.04])?, WeightPlacement::Performance { rows: 0..1 }),
        Weight::new("W_u", StateSpace::from_tf(&[1.0, 0.1], &[0.01, 125.0])?, WeightPlacement::ControlEffort),
        Weight::new("W_n", StateSpace::from_tf(&[1.0, 0.4], &[0.01, 400.0])?, WeightPlacement::SensorNoise),
    ])
}

/// States `[r1, r2, r1', r2']`, uncertainty `p = diag(delta1, delta2) q`
/// with `q = [r1; r2]`. A speed range of zero width drops its channel.
pub fn build_two_disk(params: &TwoDiskParams) -> Result<TwoDiskPlants> {
    let TwoDiskParams { m1, m2, b, k, .. } = *params;
    let (c1, h1) = squared_span(params.omega1_range);
    let (c2, h2) = squared_span(params.omega2_range);
    let channels: Vec<(usize, f64)> = [(0, h1), (1, h2)].into_iter().filter(|(_, h)| *h != 0.0).collect();
    let np = channels.len();
    let dims = PlantDims { n: 4, np, nd: 2, ne: 1, nu: 1, ny: 1 };
    let structure = if np == 0 { UncertaintyStructure::nominal() } else { UncertaintyStructure::scalar(&vec![1; np])? };
    let mut p = LftPlant::zeros(dims, structure, 0.0);
    p.a = Mat::from_row_slice(
        4,
        4,
        &[
            0.0, 0.0, 1.0, 0.0, //
            0.0, 0.0, 0.0, 1.0, //
            c1 - k / m1, -k / m1, -b / m1, 0.0, //
            -k / m2, c2 - k / m2, 0.0, -b / m2,
        ],
    );
    for (col, &(slider, h)) in channels.iter().enumerate() {
        p.b0[(2 + slider, col)] = h;
        p.c0[(col, slider)] = 1.0;
    }
    p.b1[(2, 0)] = 0.1 / m1;
    p.b1[(3, 1)] = 0.1 / m2;
    p.b2[(2, 0)] = 1.0 / m1;
    p.c1[(0, 1)] = 1.0;
    p.c2[(0, 1)] = 1.0;
    check_plant(&p)?;
    let weighted = zoh_discretize(&augment_with_weights(&p, &two_disk_weights()?)?, params.ts)?;
    Ok(TwoDiskPlants { raw: p, weighted })
}

/// Magnetic bearing data in SI units.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AmbParams {
    /// Pole area, m^2.
    pub pole_area: f64,
    /// Pole width, m.
    pub h: f64,
    /// Nominal gap, m.
    pub g0: f64,
    /// Radial moment of inertia, kg m^2.
    pub jr: f64,
    /// Axial moment of inertia, kg m^2.
    pub ja: f64,
    /// Half shaft length, m.
    pub ell: f64,
    pub k_const: f64,
    pub n_turns: f64,
    /// Coil resistance, Ohm.
    pub r_coil: f64,
    /// Nominal flux, Wb.
    pub phi0: f64,
    /// Permeability; vacuum value by default.
    pub nu0: f64,
    /// Rotor mass, kg. Not part of the published data; 10 kg by default.
    pub m_rotor: f64,
    /// rad/s
    pub rho_range: (f64, f64),
    /// s
    pub ts: f64,
}

impl Default for AmbParams {
    fn default() -> Self {
        Self {
            pole_area: 1531.79e-6,
            h: 40.00e-3,
            g0: 0.55e-3,
            jr: 0.333,
            ja: 0.0136,
            ell: 0.13,
            k_const: 4.6755576e8,
            n_turns: 400.0,
            r_coil: 14.6,
            phi0: 2.09e-4,
            nu0: 4.0 * PI * 1e-7,
            m_rotor: 10.0,
            rho_range: (315.0, 1100.0),
            ts: 0.01,
        }
    }
}

/// Electromagnetic constants of the bearing model.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct AmbConstants {
    pub c1: f64,
    pub c2: f64,
    pub d1: f64,
    pub d2: f64,
}

impl AmbParams {
    pub fn constants(&self) -> AmbConstants {
        let coil = self.nu0 * self.pole_area * self.n_turns;
        AmbConstants {
            c1: 2.0 * self.k_const * self.phi0 * (1.0 + 2.0 * self.g0 / (PI * self.h)),
            c2: 2.0 * self.k_const * self.phi0 * self.phi0 / (PI * self.h),
            d1: 2.0 * self.r_coil * self.g0 / coil,
            d2: 2.0 * self.r_coil * self.phi0 / coil,
        }
    }
}

/// Rotor displacement states of the weighted bearing plant (and of its
/// closed loops, whose plant states come first).
pub const AMB_DISPLACEMENT_STATES: std::ops::Range<usize> = 0..2;

#[derive(Clone, Debug, PartialEq)]
pub struct AmbPlants {
    pub lpv: AffineLpvSystem,
    /// LFT form with weights, discretized.
    pub weighted: LftPlant,
}

/// State `[l theta, l psi, l theta', l psi', phi_theta, phi_psi]`,
/// disturbances entering as sensor noise, `e = [displacement; u]`.
pub fn amb_lpv(params: &AmbParams) -> AffineLpvSystem {
    let AmbConstants { c1, c2, d1, d2 } = params.constants();
    let (m, nt) = (params.m_rotor, params.n_turns);
    let mut a0 = zeros(6, 6);
    a0[(0, 2)] = 1.0;
    a0[(1, 3)] = 1.0;
    a0[(2, 0)] = -4.0 * c2 / m;
    a0[(3, 1)] = -4.0 * c2 / m;
    a0[(2, 4)] = 2.0 * c1 / m;
    a0[(3, 5)] = 2.0 * c1 / m;
    a0[(4, 0)] = 2.0 * d2 / nt;
    a0[(5, 1)] = 2.0 * d2 / nt;
    a0[(4, 4)] = -d1 / nt;
    a0[(5, 5)] = -d1 / nt;
    let g = params.ja / params.jr;
    let mut a1 = zeros(6, 6);
    a1[(2, 3)] = -g;
    a1[(3, 2)] = g;
    let mut b2 = zeros(6, 2);
    b2[(4, 0)] = 1.0 / nt;
    b2[(5, 1)] = 1.0 / nt;
    let mut c1m = zeros(4, 6);
    c1m[(0, 0)] = 1.0;
    c1m[(1, 1)] = 1.0;
    let mut d12 = zeros(4, 2);
    d12[(2, 0)] = 1.0;
    d12[(3, 1)] = 1.0;
    let mut c2m = zeros(2, 6);
    c2m[(0, 0)] = 1.0;
    c2m[(1, 1)] = 1.0;
    AffineLpvSystem {
        a0,
        a1,
        b1: zeros(6, 2),
        b2,
        c1: c1m,
        c2: c2m,
        d11: zeros(4, 2),
        d12,
        d21: eye(2),
        d22: zeros(2, 2),
        rho_range: params.rho_range,
        sample_time: 0.0,
    }
}

/// `W_z` on the displacement rows of `e`, `W_u` on the control rows and
/// `W_n` on added measurement noise.
pub fn amb_weights() -> Result<Vec<Weight>> {
    let wz = StateSpace::from_tf(&[10.0, 80.0], &[1.0, 0.001])?.repeat(2);
    let wu = StateSpace::from_tf(&[0.01, 1.0], &[1.0, 1e5])?.repeat(2);
    Ok(vec![
        Weight::new("W_z", wz, WeightPlacement::Performance { rows: 0..2 }),
        Weight::new("W_u", wu, WeightPlacement::Performance { rows: 2..4 }),
        Weight::new("W_n", StateSpace::gain(0.001, 2), WeightPlacement::SensorNoise),
    ])
}

pub fn build_amb(params: &AmbParams) -> Result<AmbPlants> {
    let lpv = amb_lpv(params);
    let lft = lpv_to_lft(&lpv)?;
    let weighted = zoh_discretize(&augment_with_weights(&lft, &amb_weights()?)?, params.ts)?;
    Ok(AmbPlants { lpv, weighted })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_disk_entries() {
        let p = build_two_disk(&TwoDiskParams::default()).unwrap();
        assert_eq!(p.raw.a[(2, 0)], -195.5);
        assert_eq!(p.raw.a[(3, 1)], -387.5);
        assert_eq!(p.raw.b0[(2, 0)], 4.5);
        assert_eq!(p.raw.b0[(3, 1)], 12.5);
        assert_eq!(p.raw.structure.scalar_blocks, vec![1, 1]);
        assert!(p.weighted.is_discrete());
        assert_eq!(p.weighted.dims.n, 8);
        assert_eq!(two_disk_delta((0.0, 3.0), 3.0), 1.0);
        assert_eq!(two_disk_delta((0.0, 5.0), 0.0), -1.0);
    }

    #[test]
    fn two_disk_collapsed_ranges_are_nominal() {
        let params = TwoDiskParams { omega1_range: (1.5, 1.5), omega2_range: (2.5, 2.5), ..Default::default() };
        let p = build_two_disk(&params).unwrap();
        assert_eq!(p.raw.dims.np, 0);
        assert!(p.raw.structure.is_nominal());
        assert_eq!(p.raw.a[(2, 0)], 2.25 - 200.0);
    }

    #[test]
    fn amb_skew_coupling() {
        let p = build_amb(&AmbParams::default()).unwrap();
        let a = p.lpv.a_at(1000.0);
        assert!((a[(2, 3)] + 40.84).abs() < 5e-3);
        assert!((a[(3, 2)] - 40.84).abs() < 5e-3);
        assert_eq!(p.lpv.b1, zeros(6, 2));
        assert_eq!(p.weighted.structure.scalar_blocks, vec![2]);
        assert_eq!(p.lpv.normalization(), (707.5, 392.5));
    }
}
