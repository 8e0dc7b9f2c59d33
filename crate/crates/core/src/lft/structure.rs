//! Structured uncertainty sets and their commuting scalings.
//!
//! A structure lists repeated-scalar blocks `delta_i I_{m_i}` followed by
//! full blocks `Delta_j` (`r_j x r_j`). `copies > 1` describes the
//! block-diagonal repetition `diag(Delta, ..., Delta)` that appears when a
//! gain-scheduled controller shares the plant's parameter; the same
//! `delta_i`/`Delta_j` then occurs in every copy.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{sigma_max, zeros, Mat};

fn one() -> usize {
    1
}

fn is_one(v: &usize) -> bool {
    *v == 1
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct UncertaintyStructure {
    pub scalar_blocks: Vec<usize>,
    pub full_blocks: Vec<usize>,
    #[serde(default = "one", skip_serializing_if = "is_one")]
    pub copies: usize,
}

/// Sparse symmetric basis element: `(row, col, value)` entries, both
/// triangles listed.
pub type BasisEntries = Vec<(usize, usize, f64)>;

impl Default for UncertaintyStructure {
    fn default() -> Self {
        Self::nominal()
    }
}

impl UncertaintyStructure {
    pub fn new(scalar_blocks: Vec<usize>, full_blocks: Vec<usize>) -> Result<Self> {
        let s = Self {
            scalar_blocks,
            full_blocks,
            copies: 1,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn nominal() -> Self {
        Self {
            scalar_blocks: Vec::new(),
            full_blocks: Vec::new(),
            copies: 1,
        }
    }

    pub fn scalar(sizes: &[usize]) -> Result<Self> {
        Self::new(sizes.to_vec(), Vec::new())
    }

    pub fn validate(&self) -> Result<()> {
        if self.copies == 0 {
            return Err(Error::InvalidStructure("copies must be >= 1".into()));
        }
        if self.scalar_blocks.iter().chain(&self.full_blocks).any(|&m| m == 0) {
            return Err(Error::InvalidStructure("block sizes must be >= 1".into()));
        }
        Ok(())
    }

    /// Size of one copy of `Delta`.
    pub fn base_dim(&self) -> usize {
        self.scalar_blocks.iter().sum::<usize>() + self.full_blocks.iter().sum::<usize>()
    }

    /// Total channel dimension `n_p` (all copies).
    pub fn dim(&self) -> usize {
        self.base_dim() * self.copies
    }

    pub fn is_nominal(&self) -> bool {
        self.dim() == 0
    }

    /// Number of independent uncertain blocks in one copy.
    pub fn num_blocks(&self) -> usize {
        self.scalar_blocks.len() + self.full_blocks.len()
    }

    /// The structure of `diag(Delta, Delta)`.
    pub fn doubled(&self) -> Self {
        Self {
            copies: self.copies * 2,
            ..self.clone()
        }
    }

    fn scalar_offsets(&self) -> Vec<usize> {
        let mut off = 0;
        self.scalar_blocks
            .iter()
            .map(|&m| {
                let o = off;
                off += m;
                o
            })
            .collect()
    }

    fn full_offsets(&self) -> Vec<usize> {
        let mut off = self.scalar_blocks.iter().sum::<usize>();
        self.full_blocks
            .iter()
            .map(|&r| {
                let o = off;
                off += r;
                o
            })
            .collect()
    }

    /// Channel indices touched by scalar block `i`, across all copies.
    pub fn scalar_positions(&self, i: usize) -> Vec<usize> {
        let base = self.base_dim();
        let off = self.scalar_offsets()[i];
        (0..self.copies)
            .flat_map(|c| (0..self.scalar_blocks[i]).map(move |t| c * base + off + t))
            .collect()
    }

    /// Channel indices of full block `j`, one row per copy.
    pub fn full_positions(&self, j: usize) -> Vec<Vec<usize>> {
        let base = self.base_dim();
        let off = self.full_offsets()[j];
        (0..self.copies)
            .map(|c| (0..self.full_blocks[j]).map(|t| c * base + off + t).collect())
            .collect()
    }

    /// Number of free scalar coordinates of a scaling in the commutant.
    pub fn scaling_coords(&self) -> usize {
        let c = self.copies;
        self.scalar_blocks
            .iter()
            .map(|&m| sym_count(c * m))
            .sum::<usize>()
            + self.full_blocks.len() * sym_count(c)
    }

    /// Basis of the symmetric commutant: one sparse matrix per free
    /// coordinate, in a fixed order (scalar blocks first, upper triangle
    /// row by row).
    pub fn scaling_basis(&self) -> Vec<BasisEntries> {
        let mut basis = Vec::with_capacity(self.scaling_coords());
        for i in 0..self.scalar_blocks.len() {
            let pos = self.scalar_positions(i);
            for a in 0..pos.len() {
                for b in a..pos.len() {
                    basis.push(sym_unit(pos[a], pos[b]));
                }
            }
        }
        for j in 0..self.full_blocks.len() {
            let pos = self.full_positions(j);
            for a in 0..self.copies {
                for b in a..self.copies {
                    let mut e = Vec::new();
                    for t in 0..self.full_blocks[j] {
                        e.extend(sym_unit(pos[a][t], pos[b][t]));
                    }
                    basis.push(e);
                }
            }
        }
        basis
    }

    /// Read the free coordinates of a commutant element (inverse of
    /// assembling from `scaling_basis`).
    pub fn scaling_coordinates_of(&self, x: &Mat) -> Vec<f64> {
        self.scaling_basis()
            .iter()
            .map(|e| {
                let (i, j, _) = e[0];
                x[(i, j)]
            })
            .collect()
    }

    /// Assemble `Delta` for one copy from scalar values and full blocks,
    /// then repeat it `copies` times.
    pub fn assemble_delta(&self, scalars: &[f64], fulls: &[Mat]) -> Result<Mat> {
        if scalars.len() != self.scalar_blocks.len() || fulls.len() != self.full_blocks.len() {
            return Err(Error::dims(
                "Delta parameters",
                format!("{} scalars, {} full blocks", self.scalar_blocks.len(), self.full_blocks.len()),
                format!("{} scalars, {} full blocks", scalars.len(), fulls.len()),
            ));
        }
        let n = self.dim();
        let mut d = zeros(n, n);
        for (i, &v) in scalars.iter().enumerate() {
            for p in self.scalar_positions(i) {
                d[(p, p)] = v;
            }
        }
        for (j, blk) in fulls.iter().enumerate() {
            let r = self.full_blocks[j];
            if blk.shape() != (r, r) {
                return Err(Error::dims(format!("full block {j}"), format!("{r}x{r}"), format!("{:?}", blk.shape())));
            }
            for pos in self.full_positions(j) {
                for a in 0..r {
                    for b in 0..r {
                        d[(pos[a], pos[b])] = blk[(a, b)];
                    }
                }
            }
        }
        Ok(d)
    }

    /// Draw a structured `Delta` with every block norm at most `bound`.
    pub fn sample_with<R: Rng + ?Sized>(&self, rng: &mut R, bound: f64) -> Mat {
        let scalars: Vec<f64> = self
            .scalar_blocks
            .iter()
            .map(|_| bound * (2.0 * rng.random::<f64>() - 1.0))
            .collect();
        let fulls: Vec<Mat> = self
            .full_blocks
            .iter()
            .map(|&r| {
                let g = DMatrix::from_fn(r, r, |_, _| rng.sample::<f64, _>(StandardNormal));
                let s = sigma_max(&g);
                let radius = bound * rng.random::<f64>();
                if s > 0.0 {
                    g * (radius / s)
                } else {
                    zeros(r, r)
                }
            })
            .collect();
        self.assemble_delta(&scalars, &fulls)
            .expect("sampled parameters match the structure")
    }
}

/// Deterministic structured sample; see [`UncertaintyStructure::sample_with`].
pub fn sample_uncertainty(structure: &UncertaintyStructure, seed: u64, bound: f64) -> Result<Mat> {
    if !(0.0..=1.0).contains(&bound) {
        return Err(Error::InvalidArgument(format!("bound {bound} outside [0, 1]")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(structure.sample_with(&mut rng, bound))
}

pub(crate) fn sym_count(n: usize) -> usize {
    n * (n + 1) / 2
}

fn sym_unit(i: usize, j: usize) -> BasisEntries {
    if i == j {
        vec![(i, i, 1.0)]
    } else {
        vec![(i, j, 1.0), (j, i, 1.0)]
    }
}

/// A positive element of the scaling commutant, stored block by block.
///
/// `scalar[i]` is `(copies*m_i) x (copies*m_i)`; `full[j]` is
/// `copies x copies` and acts as `full[j] kron I_{r_j}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingValue {
    #[serde(with = "crate::linalg::rows_vec")]
    pub scalar: Vec<Mat>,
    #[serde(with = "crate::linalg::rows_vec")]
    pub full: Vec<Mat>,
}

impl ScalingValue {
    pub fn identity(structure: &UncertaintyStructure) -> Self {
        let c = structure.copies;
        Self {
            scalar: structure.scalar_blocks.iter().map(|&m| Mat::identity(c * m, c * m)).collect(),
            full: structure.full_blocks.iter().map(|_| Mat::identity(c, c)).collect(),
        }
    }

    pub fn assemble(&self, structure: &UncertaintyStructure) -> Mat {
        let n = structure.dim();
        let mut x = zeros(n, n);
        for (i, blk) in self.scalar.iter().enumerate() {
            let pos = structure.scalar_positions(i);
            for a in 0..pos.len() {
                for b in 0..pos.len() {
                    x[(pos[a], pos[b])] = blk[(a, b)];
                }
            }
        }
        for (j, blk) in self.full.iter().enumerate() {
            let pos = structure.full_positions(j);
            for a in 0..structure.copies {
                for b in 0..structure.copies {
                    for t in 0..structure.full_blocks[j] {
                        x[(pos[a][t], pos[b][t])] = blk[(a, b)];
                    }
                }
            }
        }
        x
    }

    /// Extract the blocks of a matrix assumed to lie in the commutant.
    pub fn from_matrix(structure: &UncertaintyStructure, x: &Mat) -> Self {
        let scalar = (0..structure.scalar_blocks.len())
            .map(|i| {
                let pos = structure.scalar_positions(i);
                Mat::from_fn(pos.len(), pos.len(), |a, b| x[(pos[a], pos[b])])
            })
            .collect();
        let full = (0..structure.full_blocks.len())
            .map(|j| {
                let pos = structure.full_positions(j);
                Mat::from_fn(structure.copies, structure.copies, |a, b| x[(pos[a][0], pos[b][0])])
            })
            .collect();
        Self { scalar, full }
    }

    /// Every block symmetric positive definite.
    pub fn is_positive(&self) -> bool {
        self.scalar
            .iter()
            .chain(&self.full)
            .all(|b| crate::linalg::asymmetry(b) <= 1e-12 * (1.0 + crate::linalg::max_abs(b)) && crate::linalg::min_eig(b) > 0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::max_abs;

    #[test]
    fn coordinate_counts() {
        let s = UncertaintyStructure::new(vec![2], vec![3]).unwrap();
        assert_eq!(s.scaling_coords(), 4);
        assert_eq!(s.dim(), 5);
        let d = s.doubled();
        assert_eq!(d.dim(), 10);
        // sym(4) for the scalar block, sym(2) for the full block
        assert_eq!(d.scaling_coords(), 10 + 3);
    }

    #[test]
    fn zero_bound_gives_zero() {
        let s = UncertaintyStructure::new(vec![1, 2], vec![2]).unwrap();
        let d = sample_uncertainty(&s, 3, 0.0).unwrap();
        assert_eq!(max_abs(&d), 0.0);
    }

    #[test]
    fn repeated_scalar_sample_is_scaled_identity() {
        let s = UncertaintyStructure::scalar(&[2]).unwrap();
        let d = sample_uncertainty(&s, 11, 1.0).unwrap();
        assert_eq!(d[(0, 1)], 0.0);
        assert_eq!(d[(1, 0)], 0.0);
        assert_eq!(d[(0, 0)], d[(1, 1)]);
        assert!(d[(0, 0)].abs() <= 1.0);
    }

    #[test]
    fn samples_are_deterministic() {
        let s = UncertaintyStructure::new(vec![1], vec![3]).unwrap();
        let a = sample_uncertainty(&s, 42, 0.7).unwrap();
        let b = sample_uncertainty(&s, 42, 0.7).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn rejects_bad_bound_and_sizes() {
        assert!(UncertaintyStructure::new(vec![0], vec![]).is_err());
        let s = UncertaintyStructure::nominal();
        assert!(sample_uncertainty(&s, 0, 1.5).is_err());
    }

    #[test]
    fn doubled_delta_repeats_parameters() {
        let s = UncertaintyStructure::new(vec![1], vec![2]).unwrap().doubled();
        let blk = Mat::from_row_slice(2, 2, &[0.1, 0.2, -0.3, 0.4]);
        let d = s.assemble_delta(&[0.5], &[blk]).unwrap();
        assert_eq!(d[(0, 0)], 0.5);
        assert_eq!(d[(3, 3)], 0.5);
        assert_eq!(d[(1, 2)], 0.2);
        assert_eq!(d[(4, 5)], 0.2);
    }

    #[test]
    fn basis_roundtrip() {
        let s = UncertaintyStructure::new(vec![2, 1], vec![2]).unwrap().doubled();
        let basis = s.scaling_basis();
        let coords: Vec<f64> = (0..basis.len()).map(|k| 0.1 * k as f64 + 1.0).collect();
        let mut x = zeros(s.dim(), s.dim());
        for (k, e) in basis.iter().enumerate() {
            for &(i, j, v) in e {
                x[(i, j)] += v * coords[k];
            }
        }
        assert_eq!(s.scaling_coordinates_of(&x), coords);
        let sv = ScalingValue::from_matrix(&s, &x);
        assert_eq!(sv.assemble(&s), x);
    }
}
