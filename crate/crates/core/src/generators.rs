//! Seeded random operators and paths for the agreement and property suites.
//!
//! Every generator draws from a `ChaCha8Rng` seeded with the caller's `u64`,
//! so a seed fully determines the output on every platform.

use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::apsindex::flattened;
use crate::error::{Error, Result};
use crate::linalg::{self, CMat, CVec, C64};
use crate::path::{flat_nodes, flatten, OperatorPath};
use crate::tracemodel::{self, BlockHermitian, BlockMatrix, WeightedBlockModel};

/// Block weights drawn by [`random_model`].
pub const WEIGHTS: [f64; 4] = [0.5, 1.0, 1.5, 2.0];

/// Smallest |eigenvalue| of the endpoints of [`random_invertible_path`].
pub const ENDPOINT_GAP: f64 = 0.2;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Between one and three blocks of dimension `1..=max_dim` with weights
/// from [`WEIGHTS`].
pub fn random_model(rng: &mut impl Rng, max_dim: usize) -> Result<Arc<WeightedBlockModel>> {
    if max_dim == 0 {
        return Err(Error::Validation("random models need max_dim ≥ 1".into()));
    }
    let count = rng.gen_range(1..=3);
    let blocks: Vec<(usize, f64)> = (0..count)
        .map(|_| (rng.gen_range(1..=max_dim), *WEIGHTS.choose(rng).unwrap()))
        .collect();
    WeightedBlockModel::new(&blocks)
}

fn random_complex(rng: &mut impl Rng, n: usize) -> CMat {
    CMat::from_fn(n, n, |_, _| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
}

/// Hermitian operator with entries of size about `scale`.
pub fn random_hermitian(rng: &mut impl Rng, model: &Arc<WeightedBlockModel>, scale: f64) -> BlockHermitian {
    let blocks = model
        .blocks()
        .iter()
        .map(|b| {
            let a = random_complex(rng, b.dim);
            (&a + a.adjoint()) * C64::new(0.5 * scale / (b.dim as f64).sqrt(), 0.0)
        })
        .collect();
    BlockHermitian::from_blocks(model.clone(), blocks).expect("symmetric by construction")
}

/// Block-diagonal unitary from the QR factor of a random matrix.
pub fn random_unitary(rng: &mut impl Rng, model: &Arc<WeightedBlockModel>) -> BlockMatrix {
    let blocks = model.blocks().iter().map(|b| linalg::thin_q(&random_complex(rng, b.dim))).collect();
    BlockMatrix::new(model.clone(), blocks).expect("block shapes match the model")
}

/// `U diag(values) U*` for a random unitary `U`.
pub fn hermitian_with_spectrum(rng: &mut impl Rng, model: &Arc<WeightedBlockModel>, values: &[f64]) -> Result<BlockHermitian> {
    let diag = BlockHermitian::diag(model.clone(), values)?;
    diag.conjugate_by(&random_unitary(rng, model))
}

/// Random Hermitian operator whose spectrum lies in `±[gap, scale]`.
pub fn random_gapped(rng: &mut impl Rng, model: &Arc<WeightedBlockModel>, gap: f64, scale: f64) -> Result<BlockHermitian> {
    let values: Vec<f64> = (0..model.dim())
        .map(|_| {
            let mag = rng.gen_range(gap..scale);
            if rng.gen_bool(0.5) {
                mag
            } else {
                -mag
            }
        })
        .collect();
    hermitian_with_spectrum(rng, model, &values)
}

/// Piecewise-linear path through two to four random interior samples with
/// endpoints gapped by [`ENDPOINT_GAP`].
pub fn random_invertible_path(seed: u64, max_dim: usize) -> Result<OperatorPath> {
    let mut rng = rng(seed);
    let model = random_model(&mut rng, max_dim)?;
    random_path_on(&mut rng, &model)
}

/// As [`random_invertible_path`] on a given model.
pub fn random_path_on(rng: &mut impl Rng, model: &Arc<WeightedBlockModel>) -> Result<OperatorPath> {
    let interior = rng.gen_range(2..=4);
    let mut samples = vec![random_gapped(rng, model, ENDPOINT_GAP, 2.0)?];
    for _ in 0..interior {
        samples.push(random_hermitian(rng, model, 2.0));
    }
    samples.push(random_gapped(rng, model, ENDPOINT_GAP, 2.0)?);
    let nodes = (0..samples.len()).map(|k| k as f64 / (samples.len() - 1) as f64).collect();
    OperatorPath::linear(nodes, samples)
}

/// Random invertible-endpoint path, reparametrized to be constant near both
/// ends.
pub fn random_flat_path(seed: u64, max_dim: usize) -> Result<OperatorPath> {
    let path = random_invertible_path(seed, max_dim)?;
    flattened(&path, 4 * path.nodes().len())
}

/// `B_0 + 2φ(u)P⁻` with `B_0 = 1 − 2P⁻` a random involution whose negative
/// projection `P⁻` has rank `ranks[b]` in block `b`, and `φ` the flattening
/// profile from 0 to 1. The flow is `tr P⁻`.
pub fn involution_path(model: &Arc<WeightedBlockModel>, ranks: &[usize], seed: u64) -> Result<OperatorPath> {
    if ranks.len() != model.num_blocks() || ranks.iter().zip(model.blocks()).any(|(&r, b)| r > b.dim) {
        return Err(Error::Structure("one rank per block, at most the block dimension".into()));
    }
    let mut rng = rng(seed);
    let mut values = Vec::with_capacity(model.dim());
    for (&r, b) in ranks.iter().zip(model.blocks()) {
        values.extend((0..b.dim).map(|i| if i < r { 1.0 } else { 0.0 }));
    }
    let pminus = hermitian_with_spectrum(&mut rng, model, &values)?;
    let b0 = BlockHermitian::identity(model).lincomb(1.0, &pminus, -2.0)?;
    let delta = 0.1;
    OperatorPath::sample(flat_nodes(8, delta), |u| b0.lincomb(1.0, &pminus, 2.0 * flatten(u, delta)))
}

/// An invertible `D` with spectrum spread over `±[0.5, 8]` and a perturbation
/// path `K_u = uK_1 + u(1−u)K_2` with `D + K_1` invertible.
pub fn truncation_pair(seed: u64, dim: usize) -> Result<(BlockHermitian, OperatorPath)> {
    let mut rng = rng(seed);
    let model = WeightedBlockModel::matrix(dim)?;
    let d = random_gapped(&mut rng, &model, 0.5, 8.0)?;
    loop {
        let k1 = random_hermitian(&mut rng, &model, 3.0);
        let k2 = random_hermitian(&mut rng, &model, 1.0);
        if tracemodel::eigh(&d.lincomb(1.0, &k1, 1.0)?)?.min_abs() < 0.1 {
            continue;
        }
        let nodes: Vec<f64> = (0..=8).map(|k| k as f64 / 8.0).collect();
        let path = OperatorPath::sample(nodes, |u| k1.lincomb(u, &k2, u * (1.0 - u)))?;
        return Ok((d, path));
    }
}

/// An invertible `D_0` and a smooth source `f(x) = Σ_k c_k cos(kx)` on
/// `[0, length]`.
#[derive(Debug, Clone)]
pub struct HalflineCase {
    pub d0: BlockHermitian,
    pub length: f64,
    coefficients: Vec<CVec>,
}

impl HalflineCase {
    /// `f` at the midpoints of `cells` equal cells.
    pub fn cells(&self, cells: usize) -> Vec<CVec> {
        let h = self.length / cells as f64;
        (0..cells)
            .map(|j| {
                let x = (j as f64 + 0.5) * h;
                self.coefficients
                    .iter()
                    .enumerate()
                    .fold(CVec::zeros(self.d0.model().dim()), |acc, (k, c)| acc + c * C64::new((k as f64 * x).cos(), 0.0))
            })
            .collect()
    }
}

pub fn halfline_case(seed: u64, dim: usize) -> Result<HalflineCase> {
    let mut rng = rng(seed);
    let model = WeightedBlockModel::matrix(dim)?;
    let d0 = random_gapped(&mut rng, &model, 0.3, 3.0)?;
    let coefficients = (0..3)
        .map(|_| CVec::from_fn(dim, |_, _| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))))
        .collect();
    Ok(HalflineCase {
        d0,
        length: 4.0,
        coefficients,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeds_are_reproducible() {
        let a = random_invertible_path(11, 6).unwrap();
        let b = random_invertible_path(11, 6).unwrap();
        assert_eq!(a.samples(), b.samples());
        assert_ne!(random_invertible_path(12, 6).unwrap().samples(), a.samples());
    }

    #[test]
    fn endpoints_are_gapped() {
        for seed in 0..10 {
            let p = random_invertible_path(seed, 8).unwrap();
            for op in [p.start(), p.end()] {
                assert!(tracemodel::eigh(op).unwrap().min_abs() >= ENDPOINT_GAP * (1.0 - 1e-9));
            }
        }
    }

    #[test]
    fn flat_paths_are_flat() {
        assert!(random_flat_path(3, 4).unwrap().endpoint_flat());
    }

    #[test]
    fn involution_endpoints() {
        let model = WeightedBlockModel::new(&[(3, 1.0), (2, 0.5)]).unwrap();
        let p = involution_path(&model, &[1, 1], 5).unwrap();
        let start = tracemodel::eigh(p.start()).unwrap();
        assert!((start.projection_trace(tracemodel::Interval::negative()) - 1.5).abs() < 1e-12);
        assert!(p.end().as_matrix().try_sub(&BlockMatrix::identity(&model)).unwrap().frobenius() < 1e-12);
    }
}
