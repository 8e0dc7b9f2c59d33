//! Fixed problems shared by the benchmarks.

use robh2::linalg::{eye, zeros};
use robh2::{LftPlant, PlantDims, UncertaintyStructure};

/// A lightly damped chain of `n` states with one repeated-scalar
/// uncertainty on its first coupling; stable for every `|delta| <= 1`.
pub fn chain_plant(n: usize) -> LftPlant {
    let dims = PlantDims { n, np: 1, nd: 1, ne: n + 1, nu: 1, ny: 1 };
    let mut p = LftPlant::zeros(dims, UncertaintyStructure::scalar(&[1]).unwrap(), 0.1);
    for i in 0..n {
        p.a[(i, i)] = 0.6;
        if i + 1 < n {
            p.a[(i + 1, i)] = 0.3;
        }
    }
    p.b0[(0, 0)] = 0.1;
    p.c0[(0, n - 1)] = 1.0;
    p.b1[(0, 0)] = 1.0;
    p.b2[(n - 1, 0)] = 1.0;
    p.c1 = robh2::linalg::vcat(&[&eye(n), &zeros(1, n)]);
    p.d12[(n, 0)] = 1.0;
    p.c2[(0, 0)] = 1.0;
    p
}
