//! Discretized suspension operator `∂_u + D_u` with Atiyah–Patodi–Singer
//! boundary conditions and its trace-weighted index.
//!
//! # Grid bookkeeping
//!
//! Nodes `u_j = u_start + j·h`, `j = 0..=M`, carry the unknowns `f_j`; the
//! `M` intervals carry the equations
//!
//! ```text
//! B⁺_j f_{j+1} − B⁻_j f_j = 0,   B⁺_j = 1/h + ½E_j,   B⁻_j = 1/h − ½E'_j
//! ```
//!
//! with `E_j = E'_j = D(u_{j+½})` for the forward-upwind scheme and
//! `E_j = D(u_{j+1})`, `E'_j = D(u_j)` for the implicit-midpoint scheme.
//! The APS conditions `P_0 f_0 = 0` and `(1−P_1) f_M = 0` are imposed by
//! restricting `f_0` to an orthonormal basis of `range(1−P_0)` and `f_M` to
//! one of `range(P_1)`. Columns are ordered node by node, rows interval by
//! interval.
//!
//! `A_adj` is the exact adjoint of `A`. Read as a difference operator it is
//! a staggered discretization of `−∂_u + D_u` acting on interval values,
//! with node rows `1..M−1` in the interior and boundary rows enforcing
//! `(1−P_0)g(0) = 0` and `P_1 g(1) = 0`.
//!
//! Everything is block diagonal over the model blocks, so each block is
//! handled separately and kernel dimensions are weighted by the block trace.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::exec::{self, Execution};
use crate::linalg::{self, CMat, CVec, C64};
use crate::path::{flat_nodes, flatten, OperatorPath};
use crate::tracemodel::{self, BlockHermitian, Interval, SpectralDecomposition, WeightedBlockModel};
use crate::engines::{sf_crossing, CrossingOptions};

/// Default relative kernel threshold.
pub const DEFAULT_THETA: f64 = 1e-7;

/// Required separation factor around the threshold on either side.
pub const GAP_FACTOR: f64 = 10.0;

/// Smallest admissible |eigenvalue| at the ends of a cylinder problem.
pub const CYLINDER_GAP: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Scheme {
    #[default]
    ForwardUpwind,
    ImplicitMidpoint,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Geometry {
    #[default]
    IntervalAps,
    Cylinder,
}

#[derive(Debug, Clone)]
pub struct SuspensionProblem {
    pub path: OperatorPath,
    /// Number of intervals M on `[0, 1]`.
    pub grid: usize,
    pub scheme: Scheme,
    pub geometry: Geometry,
    /// Cylinder extension length; `4/γ` clamped to `[0.25, 4]` when unset,
    /// γ the smallest endpoint spectral gap.
    pub extension: Option<f64>,
    pub theta: f64,
    /// Replace the path by its endpoint-regularized version first.
    pub endpoint_regularize: bool,
    pub exec: Execution,
}

impl SuspensionProblem {
    pub fn new(path: OperatorPath, grid: usize) -> Self {
        SuspensionProblem {
            path,
            grid,
            scheme: Scheme::default(),
            geometry: Geometry::default(),
            extension: None,
            theta: DEFAULT_THETA,
            endpoint_regularize: false,
            exec: Execution::available_parallel(),
        }
    }

    pub fn with_scheme(mut self, scheme: Scheme) -> Self {
        self.scheme = scheme;
        self
    }

    pub fn with_geometry(mut self, geometry: Geometry) -> Self {
        self.geometry = geometry;
        self
    }

    pub fn with_theta(mut self, theta: f64) -> Self {
        self.theta = theta;
        self
    }

    pub fn with_exec(mut self, exec: Execution) -> Self {
        self.exec = exec;
        self
    }

    fn effective_path(&self) -> Result<OperatorPath> {
        if self.endpoint_regularize {
            self.path.endpoint_regularized()
        } else {
            Ok(self.path.clone())
        }
    }

    fn prepare(&self) -> Result<Grid> {
        if self.grid < 16 {
            return Err(Error::Validation(format!("grid size M must be at least 16, got {}", self.grid)));
        }
        if !(self.theta > 0.0 && self.theta < 1e-2) {
            return Err(Error::Validation(format!("kernel threshold must lie in (0, 1e-2), got {}", self.theta)));
        }
        let path = self.effective_path()?;
        let h = 1.0 / self.grid as f64;
        let start = tracemodel::eigh(path.start())?;
        let end = tracemodel::eigh(path.end())?;
        let pad = match self.geometry {
            Geometry::IntervalAps => {
                if !path.endpoint_flat() {
                    return Err(Error::Validation(
                        "interval APS problems need a path that is constant near both endpoints".into(),
                    ));
                }
                0
            }
            Geometry::Cylinder => {
                let gamma = start.min_abs().min(end.min_abs());
                if gamma <= CYLINDER_GAP {
                    return Err(Error::Validation(format!(
                        "cylinder problems need invertible endpoints (smallest |eigenvalue| {gamma:.3e})"
                    )));
                }
                let l = match self.extension {
                    Some(l) if l > 0.0 && l.is_finite() => l,
                    Some(l) => return Err(Error::Validation(format!("extension length must be positive, got {l}"))),
                    None => (4.0 / gamma).clamp(0.25, 4.0),
                };
                (l / h).ceil() as usize
            }
        };
        let intervals = self.grid + 2 * pad;
        let u_of = |x: f64| (x * h - pad as f64 * h).clamp(0.0, 1.0);
        let coeffs = exec::try_map_indexed(self.exec, intervals, |j| -> Result<(BlockHermitian, BlockHermitian)> {
            match self.scheme {
                Scheme::ForwardUpwind => {
                    let mid = path.eval(u_of(j as f64 + 0.5))?;
                    Ok((mid.clone(), mid))
                }
                Scheme::ImplicitMidpoint => Ok((path.eval(u_of(j as f64 + 1.0))?, path.eval(u_of(j as f64))?)),
            }
        })?;
        let mut max_norm = 0.0f64;
        for (e, e2) in &coeffs {
            max_norm = max_norm.max(e.opnorm()?).max(e2.opnorm()?);
        }
        if 0.5 * h * max_norm >= 0.5 {
            return Err(Error::Validation(format!(
                "grid too coarse: ‖D‖·h/2 = {:.3} must stay below 1/2",
                0.5 * h * max_norm
            )));
        }
        Ok(Grid {
            model: path.model().clone(),
            h,
            coeffs,
            start,
            end,
        })
    }
}

struct Grid {
    model: Arc<WeightedBlockModel>,
    h: f64,
    // (E_j, E'_j) per interval
    coeffs: Vec<(BlockHermitian, BlockHermitian)>,
    start: SpectralDecomposition,
    end: SpectralDecomposition,
}

impl Grid {
    fn b_plus(&self, j: usize, b: usize) -> CMat {
        let e = self.coeffs[j].0.block(b);
        let n = e.nrows();
        CMat::identity(n, n) * C64::new(1.0 / self.h, 0.0) + e * C64::new(0.5, 0.0)
    }

    fn b_minus(&self, j: usize, b: usize) -> CMat {
        let e = self.coeffs[j].1.block(b);
        let n = e.nrows();
        CMat::identity(n, n) * C64::new(1.0 / self.h, 0.0) - e * C64::new(0.5, 0.0)
    }
}

/// Columns of the eigenvectors of block `b` on the nonnegative
/// (`positive = true`) or negative side, with the cluster convention at 0.
fn side_basis(dec: &SpectralDecomposition, b: usize, positive: bool) -> CMat {
    let tol = dec.cluster_tol();
    let blk = &dec.blocks()[b];
    let cols: Vec<usize> = blk
        .values
        .iter()
        .enumerate()
        .filter(|(_, &x)| Interval::nonnegative().contains_with_tol(x, tol) == positive)
        .map(|(i, _)| i)
        .collect();
    CMat::from_fn(blk.vectors.nrows(), cols.len(), |i, j| blk.vectors[(i, cols[j])])
}

/// Dense matrices of one model block.
#[derive(Debug, Clone)]
pub struct BlockSystem {
    pub weight: f64,
    pub a: CMat,
    pub a_adj: CMat,
}

#[derive(Debug, Clone)]
pub struct Assembled {
    pub blocks: Vec<BlockSystem>,
}

/// Explicit `A` and `A_adj` for every model block (dense; for small grids).
pub fn assemble(prob: &SuspensionProblem) -> Result<Assembled> {
    let grid = prob.prepare()?;
    let m = grid.coeffs.len();
    let mut blocks = Vec::new();
    for (b, spec) in grid.model.blocks().iter().enumerate() {
        let n = spec.dim;
        let first = side_basis(&grid.start, b, false);
        let last = side_basis(&grid.end, b, true);
        let (k0, k1) = (first.ncols(), last.ncols());
        let cols = k0 + (m - 1) * n + k1;
        let col_of = |node: usize| if node == 0 { 0 } else { k0 + (node - 1) * n };
        let mut a = CMat::zeros(m * n, cols);
        for j in 0..m {
            let bm = -grid.b_minus(j, b);
            let bp = grid.b_plus(j, b);
            let left = if j == 0 { bm * &first } else { bm };
            let right = if j + 1 == m { bp * &last } else { bp };
            a.view_mut((j * n, col_of(j)), (n, left.ncols())).copy_from(&left);
            a.view_mut((j * n, col_of(j + 1)), (n, right.ncols())).copy_from(&right);
        }
        // node rows of the staggered adjoint: (B⁺_{k−1})* g_{k−1} − (B⁻_k)* g_k
        let mut a_adj = CMat::zeros(cols, m * n);
        for k in 0..=m {
            let row = col_of(k);
            if k >= 1 {
                let bp = grid.b_plus(k - 1, b).adjoint();
                let blk = if k == m { last.adjoint() * bp } else { bp };
                a_adj.view_mut((row, (k - 1) * n), (blk.nrows(), n)).copy_from(&blk);
            }
            if k < m {
                let bm = -grid.b_minus(k, b).adjoint();
                let blk = if k == 0 { first.adjoint() * bm } else { bm };
                a_adj.view_mut((row, k * n), (blk.nrows(), n)).copy_from(&blk);
            }
        }
        blocks.push(BlockSystem {
            weight: spec.weight,
            a,
            a_adj,
        });
    }
    Ok(Assembled { blocks })
}

/// Kernel count `#{σ ≤ θ·scale}` with the gap check around the threshold.
fn kernel_count(sv: &[f64], dim: usize, theta: f64, scale: f64) -> Result<(usize, f64, f64)> {
    let cut = theta * scale;
    if let Some(bad) = sv.iter().find(|&&s| s > cut / GAP_FACTOR && s < cut * GAP_FACTOR) {
        return Err(Error::numeric(
            "aps_index",
            format!("singular value {bad:.3e} too close to the kernel threshold {cut:.3e}; refine the grid"),
        ));
    }
    let retained = sv.iter().filter(|&&s| s > cut).count();
    let smallest_kept = sv.iter().copied().filter(|&s| s > cut).fold(f64::INFINITY, f64::min);
    let largest_dropped = sv.iter().copied().filter(|&s| s <= cut).fold(0.0, f64::max);
    Ok((dim - retained, smallest_kept, largest_dropped))
}

/// Index of the dense system by SVD, for cross-checking [`aps_index`].
pub fn dense_index(sys: &Assembled, theta: f64) -> Result<ApsIndex> {
    let mut report = ApsIndex::default();
    for blk in &sys.blocks {
        let sa = linalg::singular_values(&blk.a);
        let sb = linalg::singular_values(&blk.a_adj);
        let smax = sa.first().copied().unwrap_or(0.0).max(sb.first().copied().unwrap_or(0.0)).max(1e-300);
        // an m×n matrix has min(m, n) singular values; the rest are kernel
        let (ka, kept_a, drop_a) = kernel_count(&sa, blk.a.ncols(), theta, smax)?;
        let (kb, kept_b, drop_b) = kernel_count(&sb, blk.a_adj.ncols(), theta, smax)?;
        report.add_block(blk.weight, ka, kb, kept_a.min(kept_b) / smax, drop_a.max(drop_b) / smax);
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ApsIndex {
    /// `tr ker A − tr ker A_adj`.
    pub index: f64,
    pub kernel: f64,
    pub cokernel: f64,
    /// Per-block (kernel, cokernel) dimensions.
    pub block_dims: Vec<(usize, usize)>,
    /// Smallest singular value counted as nonzero, relative.
    pub smallest_retained: f64,
    /// Largest singular value counted as zero, relative.
    pub largest_discarded: f64,
}

impl ApsIndex {
    fn add_block(&mut self, w: f64, ka: usize, kb: usize, kept: f64, dropped: f64) {
        if self.block_dims.is_empty() {
            self.smallest_retained = f64::INFINITY;
        }
        self.kernel += w * ka as f64;
        self.cokernel += w * kb as f64;
        self.index = self.kernel - self.cokernel;
        self.block_dims.push((ka, kb));
        self.smallest_retained = self.smallest_retained.min(kept);
        self.largest_discarded = self.largest_discarded.max(dropped);
    }
}

/// Propagates an orthonormal basis through `X ↦ orth(step(j, X))`.
fn propagate(mut q: CMat, steps: usize, step: impl Fn(usize, &CMat) -> Result<CMat>) -> Result<CMat> {
    for j in 0..steps {
        if q.ncols() == 0 {
            return Ok(q);
        }
        q = linalg::thin_q(&step(j, &q)?);
    }
    Ok(q)
}

fn solve(m: CMat, rhs: &CMat, what: &str) -> Result<CMat> {
    m.lu()
        .solve(rhs)
        .ok_or_else(|| Error::numeric("aps_index", format!("singular {what} step matrix")))
}

/// Kernel dimensions of `A` and `A_adj` on block `b` by subspace
/// propagation.
///
/// The kernel of `A` is `{f_0 ∈ range(1−P_0) : (1−P_1) T f_0 = 0}` with
/// `T` the product of the one-step maps `(B⁺_j)⁻¹B⁻_j`. Propagating an
/// orthonormal basis of `range(1−P_0)` and re-orthonormalizing after every
/// step keeps the computation well conditioned; the final test is the SVD
/// of the small matrix `V_−(D_1)* Q`, whose singular values lie in [0, 1].
/// The cokernel is handled the same way with the adjoint recurrence.
fn block_kernels(grid: &Grid, b: usize, theta: f64) -> Result<(usize, usize, f64, f64)> {
    let m = grid.coeffs.len();
    let neg0 = side_basis(&grid.start, b, false);
    let pos0 = side_basis(&grid.start, b, true);
    let neg1 = side_basis(&grid.end, b, false);
    let pos1 = side_basis(&grid.end, b, true);

    let q = propagate(linalg::thin_q(&neg0), m, |j, x| solve(grid.b_plus(j, b), &(grid.b_minus(j, b) * x), "forward"))?;
    let sv = linalg::singular_values(&(neg1.adjoint() * &q));
    let (ka, kept_a, drop_a) = kernel_count(&sv, q.ncols(), theta, 1.0)?;

    let g0 = if pos0.ncols() == 0 {
        pos0.clone()
    } else {
        linalg::thin_q(&solve(grid.b_minus(0, b).adjoint(), &pos0, "adjoint")?)
    };
    let g = propagate(g0, m - 1, |k, x| {
        let k = k + 1;
        solve(grid.b_minus(k, b).adjoint(), &(grid.b_plus(k - 1, b).adjoint() * x), "adjoint")
    })?;
    let y = if g.ncols() == 0 { g } else { linalg::thin_q(&(grid.b_plus(m - 1, b).adjoint() * &g)) };
    let sv = linalg::singular_values(&(pos1.adjoint() * &y));
    let (kb, kept_b, drop_b) = kernel_count(&sv, y.ncols(), theta, 1.0)?;
    Ok((ka, kb, kept_a.min(kept_b), drop_a.max(drop_b)))
}

/// Trace-weighted index of the APS-restricted suspension operator.
pub fn aps_index(prob: &SuspensionProblem) -> Result<ApsIndex> {
    let grid = prob.prepare()?;
    let dims = exec::try_map_indexed(prob.exec, grid.model.num_blocks(), |b| block_kernels(&grid, b, prob.theta))?;
    let mut report = ApsIndex::default();
    for (spec, (ka, kb, kept, dropped)) in grid.model.blocks().iter().zip(dims) {
        report.add_block(spec.weight, ka, kb, kept, dropped);
    }
    Ok(report)
}

/// Reparametrizes a path by the C² flattening profile so that it is
/// constant near both endpoints.
pub fn flattened(path: &OperatorPath, interior: usize) -> Result<OperatorPath> {
    let delta = 0.1;
    path.reparametrize(|u| flatten(u, delta), flat_nodes(interior, delta))
}

/// Solution of `(∂_x + D_0) g = f` on `[0, T]` with `P_0 g(0) = 0` and
/// decay of the negative spectral part.
#[derive(Debug, Clone)]
pub struct HalflineSolution {
    /// Node values `g(x_j)`, `x_j = j·T/M`, as ambient vectors.
    pub g: Vec<CVec>,
    pub step: f64,
    /// `‖P_0 g(0)‖`.
    pub boundary_defect: f64,
    /// Discrete residual `‖(g_{j+1}−g_j)/h + D_0 g_j − f_j‖ / ‖f‖`.
    pub residual: f64,
}

/// Applies the half-line APS inverse
/// `K(x,y) = 1_{x≥y} e^{−(x−y)D_0} P_0 − 1_{y>x} e^{−(x−y)D_0}(1−P_0)`
/// to a source `f` that is constant on each of the `M` cells of `[0, T]`.
///
/// The integral is evaluated exactly per eigenvalue by the recurrences
/// `g_{j+1} = e^{−λh} g_j + f_j (1−e^{−λh})/λ` (λ > 0, from `g_0 = 0`) and
/// `g_j = e^{λh} g_{j+1} − f_j (e^{λh}−1)/λ` (λ < 0, from `g_M = 0`).
pub fn halfline_aps_apply_inverse(d0: &BlockHermitian, f: &[CVec], length: f64) -> Result<HalflineSolution> {
    let dec = tracemodel::eigh(d0)?;
    let gap = dec.min_abs();
    if gap <= dec.cluster_tol().max(1e-8) {
        return Err(Error::Precondition(format!("D_0 is not invertible (smallest |eigenvalue| {gap:.3e})")));
    }
    if !(length > 0.0 && length.is_finite()) || f.is_empty() {
        return Err(Error::Validation("half-line inverse needs T > 0 and at least one cell".into()));
    }
    let model = d0.model();
    let n = model.dim();
    if f.iter().any(|v| v.len() != n) {
        return Err(Error::Structure(format!("source vectors must have dimension {n}")));
    }
    let m = f.len();
    let h = length / m as f64;
    let mut g = vec![CVec::zeros(n); m + 1];
    for (b, blk) in dec.blocks().iter().enumerate() {
        let off = model.block_offset(b);
        let nb = blk.values.len();
        for (k, &lam) in blk.values.iter().enumerate() {
            let v = blk.vectors.column(k);
            let coef: Vec<C64> = f.iter().map(|fj| v.dotc(&fj.rows(off, nb))).collect();
            let mut c = vec![C64::new(0.0, 0.0); m + 1];
            if lam > 0.0 {
                let decay = (-lam * h).exp();
                let gain = -(-lam * h).exp_m1() / lam;
                for j in 0..m {
                    c[j + 1] = c[j] * decay + coef[j] * gain;
                }
            } else {
                let decay = (lam * h).exp();
                let gain = (lam * h).exp_m1() / lam;
                for j in (0..m).rev() {
                    c[j] = c[j + 1] * decay - coef[j] * gain;
                }
            }
            for j in 0..=m {
                let mut seg = g[j].rows_mut(off, nb);
                seg.axpy(c[j], &v, C64::new(1.0, 0.0));
            }
        }
    }
    let p0 = tracemodel::spectral_projection(&dec, Interval::nonnegative())?;
    let p0d = p0.as_matrix().to_dense();
    let boundary_defect = (&p0d * &g[0]).norm();
    let dd = d0.as_matrix().to_dense();
    let mut res = 0.0;
    let mut fnorm = 0.0;
    for j in 0..m {
        let r = (&g[j + 1] - &g[j]) / C64::new(h, 0.0) + &dd * &g[j] - &f[j];
        res += h * r.norm_squared();
        fnorm += h * f[j].norm_squared();
    }
    let residual = if fnorm > 0.0 { (res / fnorm).sqrt() } else { res.sqrt() };
    Ok(HalflineSolution {
        g,
        step: h,
        boundary_defect,
        residual,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TruncationEntry {
    pub radius: f64,
    /// Smallest singular value of `D + (1−u)K_1 + uP_RK_1P_R` over the u grid.
    pub min_singular: f64,
    pub invertible: bool,
    /// Index and crossing flow of the truncated path `D + P_R K_u P_R`
    /// (only for invertible radii).
    pub index: Option<f64>,
    pub crossing: Option<f64>,
}

impl TruncationEntry {
    pub fn agrees(&self) -> bool {
        match (self.index, self.crossing) {
            (Some(i), Some(c)) => i == c,
            _ => true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TruncationReport {
    pub entries: Vec<TruncationEntry>,
    /// Smallest radius of the sweep with uniform invertibility.
    pub minimal_radius: Option<f64>,
}

/// Sweeps the truncation radius `R` and checks invertibility of the
/// homotopy between `D + K_1` and `D + P_R K_1 P_R`, then compares index
/// and crossing flow of the truncated path.
pub fn perturbation_truncation_check(
    d: &BlockHermitian,
    k: &OperatorPath,
    radii: &[f64],
    grid: usize,
) -> Result<TruncationReport> {
    if **k.model() != **d.model() {
        return Err(Error::Structure("perturbation path lives on a different model".into()));
    }
    let dec = tracemodel::eigh(d)?;
    let k1 = k.end();
    let mut entries = Vec::new();
    let mut minimal = None;
    for &r in radii {
        let pr = tracemodel::spectral_projection(&dec, Interval::closed(-r, r))?;
        let compress = |x: &BlockHermitian| BlockHermitian::symmetrized(&(pr.as_matrix() * x.as_matrix()) * pr.as_matrix());
        let k1r = compress(k1);
        let mut min_sv = f64::INFINITY;
        for i in 0..=32 {
            let u = i as f64 / 32.0;
            let op = d.lincomb(1.0, k1, 1.0 - u)?.lincomb(1.0, &k1r, u)?;
            min_sv = min_sv.min(tracemodel::eigh(&op)?.min_abs());
        }
        let invertible = min_sv > 1e-8;
        let (index, crossing) = if invertible {
            minimal.get_or_insert(r);
            let truncated = k.map_samples(|_, ku| d.lincomb(1.0, &compress(ku), 1.0))?;
            let flat = flattened(&truncated, 2 * truncated.nodes().len())?;
            let idx = aps_index(&SuspensionProblem::new(flat.clone(), grid))?;
            let sf = sf_crossing(&flat, CrossingOptions::default())?;
            (Some(idx.index), Some(sf.value))
        } else {
            (None, None)
        };
        entries.push(TruncationEntry {
            radius: r,
            min_singular: min_sv,
            invertible,
            index,
            crossing,
        });
    }
    Ok(TruncationReport {
        entries,
        minimal_radius: minimal,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar(x: f64) -> BlockHermitian {
        BlockHermitian::diag(WeightedBlockModel::matrix(1).unwrap(), &[x]).unwrap()
    }

    fn scalar_flat(a: f64, b: f64) -> OperatorPath {
        flattened(&OperatorPath::segment(scalar(a), scalar(b)).unwrap(), 16).unwrap()
    }

    #[test]
    fn zero_path_has_no_kernels() {
        let prob = SuspensionProblem::new(OperatorPath::constant(scalar(0.0)).unwrap(), 16);
        let prob = SuspensionProblem {
            path: flattened(&prob.path, 4).unwrap(),
            ..prob
        };
        let sys = assemble(&prob).unwrap();
        assert_eq!(sys.blocks[0].a.shape(), (16, 16));
        let r = dense_index(&sys, DEFAULT_THETA).unwrap();
        assert_eq!(r.block_dims, vec![(0, 0)]);
        assert_eq!(aps_index(&prob).unwrap().block_dims, vec![(0, 0)]);
    }

    #[test]
    fn positive_constant_has_no_kernel() {
        let prob = SuspensionProblem::new(scalar_flat(2.0, 2.0), 32);
        assert_eq!(aps_index(&prob).unwrap().block_dims, vec![(0, 0)]);
    }

    #[test]
    fn single_crossing_kernel_matches_ode() {
        let prob = SuspensionProblem::new(scalar_flat(-1.0, 1.0), 64);
        let sys = assemble(&prob).unwrap();
        let r = dense_index(&sys, DEFAULT_THETA).unwrap();
        assert_eq!(r.block_dims, vec![(1, 0)]);
        assert_eq!(aps_index(&prob).unwrap().index, 1.0);
        // the kernel vector solves f' + D f = 0 up to discretization error:
        // fix f_0 = 1 and solve the square system for the remaining nodes
        let a = &sys.blocks[0].a;
        let rest = a.columns(1, 64).into_owned();
        let rhs = -a.column(0).into_owned();
        let f = rest.lu().solve(&rhs).unwrap();
        let h = 1.0 / 64.0;
        let mut integral = 0.0;
        for j in 0..64 {
            integral += h * prob.path.eval((j as f64 + 0.5) * h).unwrap().block(0)[(0, 0)].re;
            assert!((f[j].re - (-integral).exp()).abs() < 1e-3, "node {}", j + 1);
        }
    }

    #[test]
    fn adjoint_is_exact() {
        let m = WeightedBlockModel::new(&[(2, 1.0), (1, 0.5)]).unwrap();
        let a = BlockHermitian::diag(m.clone(), &[-1.0, 2.0, -0.5]).unwrap();
        let b = BlockHermitian::diag(m, &[1.0, -2.0, 0.5]).unwrap();
        let path = flattened(&OperatorPath::segment(a, b).unwrap(), 8).unwrap();
        for scheme in [Scheme::ForwardUpwind, Scheme::ImplicitMidpoint] {
            let prob = SuspensionProblem::new(path.clone(), 20).with_scheme(scheme);
            let sys = assemble(&prob).unwrap();
            for blk in &sys.blocks {
                assert!(linalg::frobenius(&(blk.a.adjoint() - &blk.a_adj)) < 1e-12);
            }
            let dense = dense_index(&sys, DEFAULT_THETA).unwrap();
            let prop = aps_index(&prob).unwrap();
            assert_eq!(dense.block_dims, prop.block_dims);
            assert_eq!(prop.index, 0.5);
        }
    }

    #[test]
    fn validation_errors() {
        let p = OperatorPath::segment(scalar(-1.0), scalar(1.0)).unwrap();
        assert!(matches!(aps_index(&SuspensionProblem::new(p.clone(), 200)), Err(Error::Validation(_))));
        assert!(matches!(aps_index(&SuspensionProblem::new(scalar_flat(-1.0, 1.0), 8)), Err(Error::Validation(_))));
        let cyl = SuspensionProblem::new(OperatorPath::segment(scalar(0.0), scalar(1.0)).unwrap(), 64).with_geometry(Geometry::Cylinder);
        assert!(matches!(aps_index(&cyl), Err(Error::Validation(_))));
        let coarse = SuspensionProblem::new(scalar_flat(-100.0, 100.0), 16);
        assert!(matches!(aps_index(&coarse), Err(Error::Validation(_))));
    }

    #[test]
    fn cylinder_without_flatness() {
        let p = OperatorPath::segment(scalar(-1.0), scalar(1.0)).unwrap();
        let prob = SuspensionProblem::new(p, 200).with_geometry(Geometry::Cylinder);
        assert_eq!(aps_index(&prob).unwrap().index, 1.0);
    }

    #[test]
    fn halfline_scalar_oracles() {
        let m = 400;
        let t = 2.0;
        let f: Vec<CVec> = (0..m)
            .map(|j| CVec::from_element(1, C64::new(if (j as f64 + 0.5) * t / (m as f64) < 1.0 { 1.0 } else { 0.0 }, 0.0)))
            .collect();
        let sol = halfline_aps_apply_inverse(&scalar(1.0), &f, t).unwrap();
        for j in 0..=m / 2 {
            let x = j as f64 * t / m as f64;
            assert!((sol.g[j][0].re - (1.0 - (-x).exp())).abs() < 1e-12);
        }
        assert_eq!(sol.boundary_defect, 0.0);
        // g' − g = f with decay: g(x) = e^{x−1} − 1 on [0, 1], 0 beyond
        let sol = halfline_aps_apply_inverse(&scalar(-1.0), &f, t).unwrap();
        for j in 0..=m / 2 {
            let x = j as f64 * t / m as f64;
            assert!((sol.g[j][0].re - ((x - 1.0).exp() - 1.0)).abs() < 1e-12);
        }
        assert_eq!(sol.g[m][0].re, 0.0);
        let zero: Vec<CVec> = (0..m).map(|_| CVec::zeros(1)).collect();
        let sol = halfline_aps_apply_inverse(&scalar(1.0), &zero, t).unwrap();
        assert!(sol.g.iter().all(|v| v[0] == C64::new(0.0, 0.0)));
        assert!(matches!(halfline_aps_apply_inverse(&scalar(0.0), &f, t), Err(Error::Precondition(_))));
    }

    #[test]
    fn zero_perturbation_is_invertible_everywhere() {
        let m = WeightedBlockModel::matrix(4).unwrap();
        let d = BlockHermitian::diag(m.clone(), &[-2.0, -1.0, 1.0, 2.0]).unwrap();
        let k = OperatorPath::constant(BlockHermitian::zeros(&m)).unwrap();
        let rep = perturbation_truncation_check(&d, &k, &[0.5, 1.0, 2.0], 64).unwrap();
        assert!(rep.entries.iter().all(|e| e.invertible && e.agrees()));
        assert_eq!(rep.minimal_radius, Some(0.5));
    }
}
