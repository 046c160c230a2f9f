//! Operator models carrying a semifinite trace.
//!
//! Two models are provided:
//!
//! * [`WeightedBlockModel`]: a finite direct sum of matrix algebras
//!   `M_{n_b}(C)`, with trace `Σ_b w_b·Tr(x_b)`. Non-integer weights give
//!   real-valued dimensions the way a type II trace does.
//! * [`FrequencyModel`]: a commutative model of multiplication operators by
//!   real symbols `d(ξ)` with trace `∫ d(ξ) ρ(ξ) dξ`.
//!
//! Operators on the block model are stored block by block, so off-block
//! entries are zero by construction.

use std::fmt;
use std::ops::{Add, Deref, Mul, Sub};
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::linalg::{self, CMat, C64, ZERO};
use crate::quadrature::{self, QuadOptions};

/// Relative width of an eigenvalue cluster: eigenvalues within
/// `CLUSTER_RTOL·(1+‖op‖)` of an interval endpoint are assigned to it.
pub const CLUSTER_RTOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Block {
    pub dim: usize,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeightedBlockModel {
    blocks: Vec<Block>,
    offsets: Vec<usize>,
}

impl WeightedBlockModel {
    pub fn new(blocks: &[(usize, f64)]) -> Result<Arc<Self>> {
        if blocks.is_empty() {
            return Err(Error::Structure("model needs at least one block".into()));
        }
        let mut offsets = Vec::with_capacity(blocks.len());
        let mut total = 0;
        for &(dim, weight) in blocks {
            if dim == 0 {
                return Err(Error::Validation("block dimension must be positive".into()));
            }
            if !(weight > 0.0 && weight.is_finite()) {
                return Err(Error::Validation(format!(
                    "block weight must be positive and finite, got {weight}"
                )));
            }
            offsets.push(total);
            total += dim;
        }
        Ok(Arc::new(WeightedBlockModel {
            blocks: blocks.iter().map(|&(dim, weight)| Block { dim, weight }).collect(),
            offsets,
        }))
    }

    /// A single block of dimension `n` with weight 1.
    pub fn matrix(n: usize) -> Result<Arc<Self>> {
        Self::new(&[(n, 1.0)])
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn num_blocks(&self) -> usize {
        self.blocks.len()
    }

    pub fn block_offset(&self, b: usize) -> usize {
        self.offsets[b]
    }

    /// Ambient dimension N = Σ n_b.
    pub fn dim(&self) -> usize {
        self.blocks.iter().map(|b| b.dim).sum()
    }

    pub fn identity_trace(&self) -> f64 {
        self.blocks.iter().map(|b| b.weight * b.dim as f64).sum()
    }

    /// Block index and local index of an ambient coordinate.
    pub fn locate(&self, i: usize) -> Option<(usize, usize)> {
        self.offsets
            .iter()
            .enumerate()
            .rev()
            .find(|(_, &off)| off <= i)
            .filter(|(b, &off)| i - off < self.blocks[*b].dim)
            .map(|(b, &off)| (b, i - off))
    }

    /// Largest q such that every weight is an integer multiple of q, found
    /// among `min_weight / k` for k ≤ 64. `None` when the weights are not
    /// commensurate at that resolution.
    pub fn weight_step(&self) -> Option<f64> {
        let wmin = self.blocks.iter().map(|b| b.weight).fold(f64::INFINITY, f64::min);
        for k in 1..=64 {
            let q = wmin / k as f64;
            let ok = self.blocks.iter().all(|b| {
                let r = b.weight / q;
                (r - r.round()).abs() < 1e-9 * r.max(1.0)
            });
            if ok {
                return Some(q);
            }
        }
        None
    }

    /// Direct sum of two models (blocks of `self` first).
    pub fn direct_sum(&self, other: &WeightedBlockModel) -> Arc<Self> {
        let blocks: Vec<(usize, f64)> = self
            .blocks
            .iter()
            .chain(other.blocks.iter())
            .map(|b| (b.dim, b.weight))
            .collect();
        Self::new(&blocks).expect("direct sum of valid models is valid")
    }
}

/// A (not necessarily Hermitian) block-diagonal operator.
#[derive(Clone, PartialEq)]
pub struct BlockMatrix {
    model: Arc<WeightedBlockModel>,
    blocks: Vec<CMat>,
}

impl fmt::Debug for BlockMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BlockMatrix")
            .field("blocks", &self.model.blocks)
            .field("dense", &self.to_dense())
            .finish()
    }
}

impl BlockMatrix {
    pub fn new(model: Arc<WeightedBlockModel>, blocks: Vec<CMat>) -> Result<Self> {
        if blocks.len() != model.num_blocks() {
            return Err(Error::Structure(format!(
                "expected {} blocks, got {}",
                model.num_blocks(),
                blocks.len()
            )));
        }
        for (b, (m, spec)) in blocks.iter().zip(model.blocks()).enumerate() {
            if m.nrows() != spec.dim || m.ncols() != spec.dim {
                return Err(Error::Structure(format!(
                    "block {b} is {}x{}, model expects {}x{}",
                    m.nrows(),
                    m.ncols(),
                    spec.dim,
                    spec.dim
                )));
            }
        }
        Ok(BlockMatrix { model, blocks })
    }

    /// Splits a dense N×N matrix along the model's blocks; off-block entries
    /// must vanish exactly.
    pub fn from_dense(model: Arc<WeightedBlockModel>, dense: &CMat) -> Result<Self> {
        let n = model.dim();
        if dense.nrows() != n || dense.ncols() != n {
            return Err(Error::Structure(format!(
                "dense matrix is {}x{}, model dimension is {n}",
                dense.nrows(),
                dense.ncols()
            )));
        }
        for i in 0..n {
            for j in 0..n {
                let bi = model.locate(i).map(|x| x.0);
                let bj = model.locate(j).map(|x| x.0);
                if bi != bj && dense[(i, j)] != ZERO {
                    return Err(Error::Structure(format!("off-block entry ({i},{j}) is nonzero")));
                }
            }
        }
        let blocks = (0..model.num_blocks())
            .map(|b| {
                let off = model.block_offset(b);
                let d = model.blocks()[b].dim;
                dense.view((off, off), (d, d)).into_owned()
            })
            .collect();
        Ok(BlockMatrix { model, blocks })
    }

    pub fn zeros(model: &Arc<WeightedBlockModel>) -> Self {
        let blocks = model.blocks().iter().map(|b| CMat::zeros(b.dim, b.dim)).collect();
        BlockMatrix {
            model: model.clone(),
            blocks,
        }
    }

    pub fn identity(model: &Arc<WeightedBlockModel>) -> Self {
        let blocks = model.blocks().iter().map(|b| CMat::identity(b.dim, b.dim)).collect();
        BlockMatrix {
            model: model.clone(),
            blocks,
        }
    }

    pub fn model(&self) -> &Arc<WeightedBlockModel> {
        &self.model
    }

    pub fn blocks(&self) -> &[CMat] {
        &self.blocks
    }

    pub fn block(&self, b: usize) -> &CMat {
        &self.blocks[b]
    }

    pub fn to_dense(&self) -> CMat {
        let n = self.model.dim();
        let mut out = CMat::zeros(n, n);
        for (b, m) in self.blocks.iter().enumerate() {
            let off = self.model.block_offset(b);
            out.view_mut((off, off), (m.nrows(), m.ncols())).copy_from(m);
        }
        out
    }

    pub fn adjoint(&self) -> Self {
        BlockMatrix {
            model: self.model.clone(),
            blocks: self.blocks.iter().map(|m| m.adjoint()).collect(),
        }
    }

    pub fn scale(&self, s: f64) -> Self {
        self.map_blocks(|m| m * C64::new(s, 0.0))
    }

    pub fn map_blocks(&self, f: impl Fn(&CMat) -> CMat) -> Self {
        BlockMatrix {
            model: self.model.clone(),
            blocks: self.blocks.iter().map(f).collect(),
        }
    }

    fn check_model(&self, other: &BlockMatrix) -> Result<()> {
        if Arc::ptr_eq(&self.model, &other.model) || *self.model == *other.model {
            Ok(())
        } else {
            Err(Error::Structure("operands live on different models".into()))
        }
    }

    pub fn try_add(&self, other: &BlockMatrix) -> Result<Self> {
        self.check_model(other)?;
        Ok(self.zip_blocks(other, |a, b| a + b))
    }

    pub fn try_sub(&self, other: &BlockMatrix) -> Result<Self> {
        self.check_model(other)?;
        Ok(self.zip_blocks(other, |a, b| a - b))
    }

    pub fn try_mul(&self, other: &BlockMatrix) -> Result<Self> {
        self.check_model(other)?;
        Ok(self.zip_blocks(other, |a, b| a * b))
    }

    fn zip_blocks(&self, other: &BlockMatrix, f: impl Fn(&CMat, &CMat) -> CMat) -> Self {
        BlockMatrix {
            model: self.model.clone(),
            blocks: self.blocks.iter().zip(&other.blocks).map(|(a, b)| f(a, b)).collect(),
        }
    }

    /// Frobenius norm of the ambient matrix.
    pub fn frobenius(&self) -> f64 {
        self.blocks
            .iter()
            .map(|m| linalg::frobenius(m).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    /// Weighted trace `Σ_b w_b·Tr(x_b)` as a complex number.
    pub fn trace_complex(&self) -> C64 {
        self.blocks
            .iter()
            .zip(self.model.blocks())
            .map(|(m, spec)| m.trace() * spec.weight)
            .fold(ZERO, |a, b| a + b)
    }
}

impl Add for &BlockMatrix {
    type Output = BlockMatrix;
    fn add(self, rhs: &BlockMatrix) -> BlockMatrix {
        self.try_add(rhs).expect("model mismatch in addition")
    }
}

impl Sub for &BlockMatrix {
    type Output = BlockMatrix;
    fn sub(self, rhs: &BlockMatrix) -> BlockMatrix {
        self.try_sub(rhs).expect("model mismatch in subtraction")
    }
}

impl Mul for &BlockMatrix {
    type Output = BlockMatrix;
    fn mul(self, rhs: &BlockMatrix) -> BlockMatrix {
        self.try_mul(rhs).expect("model mismatch in product")
    }
}

/// A Hermitian block-diagonal operator.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockHermitian(BlockMatrix);

impl Deref for BlockHermitian {
    type Target = BlockMatrix;
    fn deref(&self) -> &BlockMatrix {
        &self.0
    }
}

impl BlockHermitian {
    /// Validates Hermiticity (relative Frobenius defect ≤ 1e-12 per block)
    /// and symmetrizes exactly.
    pub fn new(m: BlockMatrix) -> Result<Self> {
        for (b, blk) in m.blocks.iter().enumerate() {
            let d = linalg::hermitian_defect(blk);
            if linalg::frobenius(blk) > 0.0 && d > linalg::HERMITIAN_TOL {
                return Err(Error::Validation(format!(
                    "block {b} is not Hermitian (relative defect {d:.3e})"
                )));
            }
        }
        Ok(Self::symmetrized(m))
    }

    pub fn from_blocks(model: Arc<WeightedBlockModel>, blocks: Vec<CMat>) -> Result<Self> {
        Self::new(BlockMatrix::new(model, blocks)?)
    }

    pub fn from_dense(model: Arc<WeightedBlockModel>, dense: &CMat) -> Result<Self> {
        Self::new(BlockMatrix::from_dense(model, dense)?)
    }

    /// Real diagonal operator with the given ambient diagonal.
    pub fn diag(model: Arc<WeightedBlockModel>, values: &[f64]) -> Result<Self> {
        if values.len() != model.dim() {
            return Err(Error::Structure(format!(
                "{} diagonal entries for a model of dimension {}",
                values.len(),
                model.dim()
            )));
        }
        Self::from_dense(model, &linalg::real_diag(values))
    }

    pub fn identity(model: &Arc<WeightedBlockModel>) -> Self {
        BlockHermitian(BlockMatrix::identity(model))
    }

    pub fn zeros(model: &Arc<WeightedBlockModel>) -> Self {
        BlockHermitian(BlockMatrix::zeros(model))
    }

    /// (m + m*)/2 without validation.
    pub fn symmetrized(m: BlockMatrix) -> Self {
        BlockHermitian(m.map_blocks(|b| (b + b.adjoint()) * C64::new(0.5, 0.0)))
    }

    pub fn as_matrix(&self) -> &BlockMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> BlockMatrix {
        self.0
    }

    /// Real linear combination `a·self + b·other`.
    pub fn lincomb(&self, a: f64, other: &BlockHermitian, b: f64) -> Result<BlockHermitian> {
        self.0.check_model(&other.0)?;
        Ok(BlockHermitian(self.0.zip_blocks(&other.0, |x, y| {
            x * C64::new(a, 0.0) + y * C64::new(b, 0.0)
        })))
    }

    pub fn scale(&self, s: f64) -> BlockHermitian {
        BlockHermitian(self.0.scale(s))
    }

    /// u·self·u* for a block-diagonal unitary u.
    pub fn conjugate_by(&self, u: &BlockMatrix) -> Result<BlockHermitian> {
        let prod = u.try_mul(&self.0)?.try_mul(&u.adjoint())?;
        Ok(Self::symmetrized(prod))
    }

    /// Largest |eigenvalue|.
    pub fn opnorm(&self) -> Result<f64> {
        let mut m = 0.0f64;
        for b in &self.0.blocks {
            m = m.max(linalg::hermitian_opnorm(b)?);
        }
        Ok(m)
    }
}

/// Weighted trace `Σ_b w_b·Tr(op_b)`.
pub fn trace(op: &BlockMatrix) -> f64 {
    op.trace_complex().re
}

/// Weighted trace of a product, checking that both live on one model.
pub fn trace_product(a: &BlockMatrix, b: &BlockMatrix) -> Result<f64> {
    a.check_model(b)?;
    let mut acc = 0.0;
    for ((x, y), spec) in a.blocks.iter().zip(&b.blocks).zip(a.model.blocks()) {
        let mut t = ZERO;
        for i in 0..x.nrows() {
            for k in 0..x.ncols() {
                t += x[(i, k)] * y[(k, i)];
            }
        }
        acc += spec.weight * t.re;
    }
    Ok(acc)
}

/// Eigenvalue/eigenvector data of one block.
#[derive(Debug, Clone)]
pub struct BlockSpectrum {
    pub values: Vec<f64>,
    pub vectors: CMat,
}

/// Spectral decomposition of a [`BlockHermitian`], block by block.
#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    model: Arc<WeightedBlockModel>,
    blocks: Vec<BlockSpectrum>,
    norm: f64,
}

/// One eigenpair location in a decomposition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Eigenvalue {
    pub value: f64,
    pub weight: f64,
    pub block: usize,
    pub index: usize,
}

/// A real interval with open/closed endpoint flags; infinite endpoints are
/// always open.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
    pub lo_closed: bool,
    pub hi_closed: bool,
}

impl Interval {
    pub fn new(lo: f64, hi: f64, lo_closed: bool, hi_closed: bool) -> Self {
        Interval {
            lo,
            hi,
            lo_closed: lo_closed && lo.is_finite(),
            hi_closed: hi_closed && hi.is_finite(),
        }
    }
    pub fn closed(lo: f64, hi: f64) -> Self {
        Self::new(lo, hi, true, true)
    }
    pub fn open(lo: f64, hi: f64) -> Self {
        Self::new(lo, hi, false, false)
    }
    /// `[0, ∞)`, the support of the positive spectral projection.
    pub fn nonnegative() -> Self {
        Self::new(0.0, f64::INFINITY, true, false)
    }
    /// `(−∞, 0)`.
    pub fn negative() -> Self {
        Self::new(f64::NEG_INFINITY, 0.0, false, false)
    }
    /// `(0, ∞)`.
    pub fn positive() -> Self {
        Self::new(0.0, f64::INFINITY, false, false)
    }

    /// Membership with endpoint clusters of half-width `tol`.
    pub fn contains_with_tol(&self, x: f64, tol: f64) -> bool {
        let lo_ok = if self.lo == f64::NEG_INFINITY {
            true
        } else if self.lo_closed {
            x >= self.lo - tol
        } else {
            x > self.lo + tol
        };
        let hi_ok = if self.hi == f64::INFINITY {
            true
        } else if self.hi_closed {
            x <= self.hi + tol
        } else {
            x < self.hi - tol
        };
        lo_ok && hi_ok
    }

    pub fn contains(&self, x: f64) -> bool {
        self.contains_with_tol(x, 0.0)
    }
}

/// Eigendecomposition of each block with the in-tree Jacobi solver.
pub fn eigh(op: &BlockHermitian) -> Result<SpectralDecomposition> {
    let mut blocks = Vec::with_capacity(op.model().num_blocks());
    let mut norm = 0.0f64;
    for m in op.blocks() {
        let e = linalg::jacobi_eigh(m)?;
        norm = e.values.iter().fold(norm, |a, x| a.max(x.abs()));
        blocks.push(BlockSpectrum {
            values: e.values,
            vectors: e.vectors,
        });
    }
    Ok(SpectralDecomposition {
        model: op.model().clone(),
        blocks,
        norm,
    })
}

impl SpectralDecomposition {
    pub fn model(&self) -> &Arc<WeightedBlockModel> {
        &self.model
    }

    pub fn blocks(&self) -> &[BlockSpectrum] {
        &self.blocks
    }

    /// Largest |eigenvalue|.
    pub fn norm(&self) -> f64 {
        self.norm
    }

    /// Half-width of the eigenvalue cluster used at interval endpoints.
    pub fn cluster_tol(&self) -> f64 {
        CLUSTER_RTOL * (1.0 + self.norm)
    }

    /// All eigenvalues in ascending order with their weights.
    pub fn eigenvalues(&self) -> Vec<Eigenvalue> {
        let mut out = Vec::with_capacity(self.model.dim());
        for (b, blk) in self.blocks.iter().enumerate() {
            let w = self.model.blocks()[b].weight;
            for (i, &v) in blk.values.iter().enumerate() {
                out.push(Eigenvalue {
                    value: v,
                    weight: w,
                    block: b,
                    index: i,
                });
            }
        }
        out.sort_by(|a, b| {
            a.value
                .total_cmp(&b.value)
                .then(a.block.cmp(&b.block))
                .then(a.index.cmp(&b.index))
        });
        out
    }

    /// Smallest |eigenvalue|.
    pub fn min_abs(&self) -> f64 {
        self.blocks
            .iter()
            .flat_map(|b| b.values.iter())
            .fold(f64::INFINITY, |a, x| a.min(x.abs()))
    }

    fn selected(&self, interval: Interval) -> Vec<Vec<bool>> {
        let tol = self.cluster_tol();
        let mut warned = false;
        self.blocks
            .iter()
            .map(|blk| {
                blk.values
                    .iter()
                    .map(|&x| {
                        for e in [interval.lo, interval.hi] {
                            let d = (x - e).abs();
                            if e.is_finite() && d > tol && d <= 1e3 * tol && !warned {
                                log::warn!(
                                    "eigenvalue {x:e} lies just outside the cluster at endpoint {e}"
                                );
                                warned = true;
                            }
                        }
                        interval.contains_with_tol(x, tol)
                    })
                    .collect()
            })
            .collect()
    }

    /// Trace of the spectral projection onto `interval`, without forming it.
    pub fn projection_trace(&self, interval: Interval) -> f64 {
        let sel = self.selected(interval);
        sel.iter()
            .zip(self.model.blocks())
            .map(|(s, spec)| spec.weight * s.iter().filter(|&&x| x).count() as f64)
            .sum()
    }

    /// `Σ_k w_k f(λ_k)`.
    pub fn function_trace(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.blocks
            .iter()
            .zip(self.model.blocks())
            .map(|(blk, spec)| spec.weight * blk.values.iter().map(|&x| f(x)).sum::<f64>())
            .sum()
    }

    /// `trace(x·f(op)) = Σ_k w_k f(λ_k) ⟨v_k, x v_k⟩`.
    pub fn weighted_trace(&self, x: &BlockMatrix, f: impl Fn(f64) -> f64) -> Result<f64> {
        if **x.model() != *self.model {
            return Err(Error::Structure("operand lives on a different model".into()));
        }
        let mut acc = 0.0;
        for ((blk, m), spec) in self.blocks.iter().zip(x.blocks()).zip(self.model.blocks()) {
            let xv = m * &blk.vectors;
            for (k, &lam) in blk.values.iter().enumerate() {
                let fk = f(lam);
                if fk == 0.0 {
                    continue;
                }
                let diag = blk.vectors.column(k).dotc(&xv.column(k));
                acc += spec.weight * fk * diag.re;
            }
        }
        Ok(acc)
    }
}

/// Orthogonal projection onto the eigenvectors whose eigenvalue lies in
/// `interval`. Eigenvalues within the cluster tolerance of a closed endpoint
/// count as inside, of an open endpoint as outside.
pub fn spectral_projection(dec: &SpectralDecomposition, interval: Interval) -> Result<BlockHermitian> {
    if dec.model.dim() == 0 {
        return Err(Error::Structure("empty model".into()));
    }
    let sel = dec.selected(interval);
    let blocks = dec
        .blocks
        .iter()
        .zip(&sel)
        .map(|(blk, s)| {
            let n = blk.vectors.nrows();
            let mut p = CMat::zeros(n, n);
            for (k, &take) in s.iter().enumerate() {
                if take {
                    let v = blk.vectors.column(k);
                    p += v * v.adjoint();
                }
            }
            p
        })
        .collect();
    Ok(BlockHermitian::symmetrized(BlockMatrix {
        model: dec.model.clone(),
        blocks,
    }))
}

/// `V·diag(f(λ))·V*`.
pub fn apply_function(dec: &SpectralDecomposition, f: impl Fn(f64) -> f64) -> Result<BlockHermitian> {
    let mut blocks = Vec::with_capacity(dec.blocks.len());
    for blk in &dec.blocks {
        let fv: Vec<f64> = blk.values.iter().map(|&x| f(x)).collect();
        if let Some((i, v)) = fv.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::numeric(
                "apply_function",
                format!("f({}) = {v} is not finite", blk.values[i]),
            ));
        }
        let n = blk.vectors.nrows();
        let mut scaled = blk.vectors.clone();
        for (k, &fk) in fv.iter().enumerate() {
            let mut col = scaled.column_mut(k);
            col *= C64::new(fk, 0.0);
        }
        let m = if n == 0 {
            CMat::zeros(0, 0)
        } else {
            scaled * blk.vectors.adjoint()
        };
        blocks.push(m);
    }
    Ok(BlockHermitian::symmetrized(BlockMatrix {
        model: dec.model.clone(),
        blocks,
    }))
}

/// Density of a [`FrequencyModel`].
pub type Density = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Commutative model of multiplication operators on `L²(R, ρ(ξ)dξ)`.
#[derive(Clone)]
pub struct FrequencyModel {
    density: Density,
    /// Integrability cutoff Ξ_max: integrals run over `[−Ξ_max, Ξ_max]`.
    pub xi_max: f64,
    pub abs_tol: f64,
    label: String,
}

impl fmt::Debug for FrequencyModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FrequencyModel")
            .field("density", &self.label)
            .field("xi_max", &self.xi_max)
            .finish()
    }
}

pub const DEFAULT_XI_MAX: f64 = 50.0;

impl FrequencyModel {
    pub fn new(density: Density, label: impl Into<String>) -> Self {
        FrequencyModel {
            density,
            xi_max: DEFAULT_XI_MAX,
            abs_tol: 1e-10,
            label: label.into(),
        }
    }

    /// Constant density ρ.
    pub fn uniform(rho: f64) -> Result<Self> {
        if !(rho >= 0.0 && rho.is_finite()) {
            return Err(Error::Validation(format!("density must be nonnegative, got {rho}")));
        }
        Ok(Self::new(Arc::new(move |_| rho), format!("uniform({rho})")))
    }

    /// The ℤ-trace normalization ρ = 1/(2π).
    pub fn integer_translations() -> Self {
        Self::uniform(1.0 / (2.0 * std::f64::consts::PI)).expect("positive density")
    }

    pub fn with_cutoff(mut self, xi_max: f64) -> Self {
        self.xi_max = xi_max;
        self
    }

    pub fn density(&self, xi: f64) -> f64 {
        (self.density)(xi)
    }

    pub fn label(&self) -> &str {
        &self.label
    }
}

/// `∫ symbol(ξ)ρ(ξ)dξ` over the support hint clipped to `[−Ξ_max, Ξ_max]`.
/// Symbol discontinuities must sit at the hint's endpoints.
pub fn freq_trace(model: &FrequencyModel, symbol: impl Fn(f64) -> f64 + Sync + Send, support_hint: (f64, f64)) -> Result<f64> {
    freq_trace_with_breaks(model, symbol, &[support_hint.0, support_hint.1])
}

/// As [`freq_trace`], with an arbitrary sorted list of breakpoints.
pub fn freq_trace_with_breaks(
    model: &FrequencyModel,
    symbol: impl Fn(f64) -> f64 + Sync + Send,
    breaks: &[f64],
) -> Result<f64> {
    let cut = model.xi_max;
    let mut pts: Vec<f64> = breaks.iter().map(|&x| x.clamp(-cut, cut)).collect();
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    if pts.len() < 2 {
        return Ok(0.0);
    }
    let opts = QuadOptions {
        abs_tol: model.abs_tol,
        ..QuadOptions::default()
    };
    let r = quadrature::integrate(|x| Ok(symbol(x) * model.density(x)), &pts, opts)
        .map_err(|e| match e {
            Error::Numeric { msg, partial, .. } => Error::Numeric {
                op: "freq_trace",
                msg,
                partial,
            },
            other => other,
        })?;
    Ok(r.value)
}

/// Indicator function of an interval, as a symbol.
pub fn indicator(interval: Interval) -> impl Fn(f64) -> f64 + Sync + Send + Copy {
    move |x| if interval.contains(x) { 1.0 } else { 0.0 }
}
