//! Sampled one-parameter families `u ↦ F_u`, `u ∈ [0, 1]`.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::linalg::{CMat, C64};
use crate::tracemodel::{self, BlockHermitian, BlockMatrix, Interval, WeightedBlockModel};

/// Tolerance for endpoint matching in [`OperatorPath::concatenate`].
pub const SPLICE_TOL: f64 = 1e-10;

/// Unitarity tolerance for [`OperatorPath::conjugate`].
pub const UNITARY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Interpolation {
    #[default]
    PiecewiseLinear,
    CubicHermite,
}

/// A path of Hermitian operators on a [`WeightedBlockModel`], known at
/// strictly increasing nodes `0 = u_0 < … < u_last = 1`.
#[derive(Debug, Clone)]
pub struct OperatorPath {
    model: Arc<WeightedBlockModel>,
    nodes: Vec<f64>,
    samples: Vec<BlockHermitian>,
    interpolation: Interpolation,
    endpoint_flat: bool,
    // node derivatives for cubic Hermite interpolation
    slopes: Option<Vec<BlockMatrix>>,
}

impl OperatorPath {
    pub fn new(nodes: Vec<f64>, samples: Vec<BlockHermitian>, interpolation: Interpolation) -> Result<Self> {
        if nodes.len() < 2 || nodes.len() != samples.len() {
            return Err(Error::Validation(format!(
                "path needs matching nodes and samples (≥2), got {} and {}",
                nodes.len(),
                samples.len()
            )));
        }
        if nodes[0] != 0.0 || *nodes.last().unwrap() != 1.0 {
            return Err(Error::Validation("path nodes must start at 0 and end at 1".into()));
        }
        if nodes.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Validation("path nodes must be strictly increasing".into()));
        }
        let model = samples[0].model().clone();
        if samples.iter().any(|s| **s.model() != *model) {
            return Err(Error::Validation("path samples live on different models".into()));
        }
        let n = samples.len();
        let endpoint_flat = n >= 4 && samples[0] == samples[1] && samples[n - 2] == samples[n - 1];
        let mut path = OperatorPath {
            model,
            nodes,
            samples,
            interpolation,
            endpoint_flat,
            slopes: None,
        };
        if interpolation == Interpolation::CubicHermite {
            path.slopes = Some(path.node_slopes());
        }
        Ok(path)
    }

    pub fn linear(nodes: Vec<f64>, samples: Vec<BlockHermitian>) -> Result<Self> {
        Self::new(nodes, samples, Interpolation::PiecewiseLinear)
    }

    /// Samples `f` at the given nodes.
    pub fn sample(nodes: Vec<f64>, f: impl Fn(f64) -> Result<BlockHermitian>) -> Result<Self> {
        let samples = nodes.iter().map(|&u| f(u)).collect::<Result<Vec<_>>>()?;
        Self::linear(nodes, samples)
    }

    /// Straight segment from `a` to `b`.
    pub fn segment(a: BlockHermitian, b: BlockHermitian) -> Result<Self> {
        Self::linear(vec![0.0, 1.0], vec![a, b])
    }

    pub fn constant(op: BlockHermitian) -> Result<Self> {
        Self::segment(op.clone(), op)
    }

    pub fn model(&self) -> &Arc<WeightedBlockModel> {
        &self.model
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn samples(&self) -> &[BlockHermitian] {
        &self.samples
    }

    pub fn interpolation(&self) -> Interpolation {
        self.interpolation
    }

    /// True when the first two and the last two samples coincide, i.e. the
    /// path is constant near both endpoints.
    pub fn endpoint_flat(&self) -> bool {
        self.endpoint_flat
    }

    pub fn start(&self) -> &BlockHermitian {
        &self.samples[0]
    }

    pub fn end(&self) -> &BlockHermitian {
        self.samples.last().unwrap()
    }

    fn check_domain(u: f64) -> Result<()> {
        if (0.0..=1.0).contains(&u) {
            Ok(())
        } else {
            Err(Error::Domain(format!("path parameter {u} outside [0, 1]")))
        }
    }

    /// Index j with `u_j ≤ u < u_{j+1}` (last segment for u = 1).
    fn segment_of(&self, u: f64) -> usize {
        let j = self.nodes.partition_point(|&x| x <= u);
        j.saturating_sub(1).min(self.nodes.len() - 2)
    }

    fn node_slopes(&self) -> Vec<BlockMatrix> {
        // three-point finite differences, exact for quadratics
        let n = self.nodes.len();
        let x = &self.nodes;
        let f = |i: usize| self.samples[i].as_matrix();
        (0..n)
            .map(|i| {
                if n == 2 {
                    return (f(1) - f(0)).scale(1.0 / (x[1] - x[0]));
                }
                let (i0, i1, i2) = if i == 0 {
                    (0, 1, 2)
                } else if i == n - 1 {
                    (n - 3, n - 2, n - 1)
                } else {
                    (i - 1, i, i + 1)
                };
                let t = x[i];
                // derivative of the Lagrange interpolant through i0, i1, i2 at t
                let l0 = ((t - x[i1]) + (t - x[i2])) / ((x[i0] - x[i1]) * (x[i0] - x[i2]));
                let l1 = ((t - x[i0]) + (t - x[i2])) / ((x[i1] - x[i0]) * (x[i1] - x[i2]));
                let l2 = ((t - x[i0]) + (t - x[i1])) / ((x[i2] - x[i0]) * (x[i2] - x[i1]));
                &(&f(i0).scale(l0) + &f(i1).scale(l1)) + &f(i2).scale(l2)
            })
            .collect()
    }

    /// The interpolated operator at `u`; exact at nodes.
    pub fn eval(&self, u: f64) -> Result<BlockHermitian> {
        Self::check_domain(u)?;
        let j = self.segment_of(u);
        if u == self.nodes[j] {
            return Ok(self.samples[j].clone());
        }
        if u == self.nodes[j + 1] {
            return Ok(self.samples[j + 1].clone());
        }
        let h = self.nodes[j + 1] - self.nodes[j];
        let t = (u - self.nodes[j]) / h;
        let a = &self.samples[j];
        let b = &self.samples[j + 1];
        match (&self.slopes, self.interpolation) {
            _ if self.interpolation == Interpolation::PiecewiseLinear && a == b => Ok(a.clone()),
            (Some(m), Interpolation::CubicHermite) => {
                let h00 = 2.0 * t.powi(3) - 3.0 * t * t + 1.0;
                let h10 = t.powi(3) - 2.0 * t * t + t;
                let h01 = -2.0 * t.powi(3) + 3.0 * t * t;
                let h11 = t.powi(3) - t * t;
                let m = &(&(&a.as_matrix().scale(h00) + &m[j].scale(h * h10))
                    + &b.as_matrix().scale(h01))
                    + &m[j + 1].scale(h * h11);
                Ok(BlockHermitian::symmetrized(m))
            }
            _ => a.lincomb(1.0 - t, b, t),
        }
    }

    /// Derivative of the interpolant; the right derivative at interior nodes
    /// and the left derivative at u = 1.
    pub fn derivative(&self, u: f64) -> Result<BlockHermitian> {
        Self::check_domain(u)?;
        let j = self.segment_of(u);
        let h = self.nodes[j + 1] - self.nodes[j];
        let a = &self.samples[j];
        let b = &self.samples[j + 1];
        match (&self.slopes, self.interpolation) {
            (Some(m), Interpolation::CubicHermite) => {
                let t = (u - self.nodes[j]) / h;
                let d00 = (6.0 * t * t - 6.0 * t) / h;
                let d10 = 3.0 * t * t - 4.0 * t + 1.0;
                let d01 = (-6.0 * t * t + 6.0 * t) / h;
                let d11 = 3.0 * t * t - 2.0 * t;
                let m = &(&(&a.as_matrix().scale(d00) + &m[j].scale(d10))
                    + &b.as_matrix().scale(d01))
                    + &m[j + 1].scale(d11);
                Ok(BlockHermitian::symmetrized(m))
            }
            _ => b.lincomb(1.0 / h, a, -1.0 / h),
        }
    }

    /// Glues `self` on `[0, ½]` and `other` on `[½, 1]`.
    pub fn concatenate(&self, other: &OperatorPath) -> Result<OperatorPath> {
        if *self.model != *other.model {
            return Err(Error::Validation("cannot concatenate paths on different models".into()));
        }
        let gap = (self.end().as_matrix() - other.start().as_matrix()).frobenius();
        if gap > SPLICE_TOL {
            return Err(Error::Validation(format!(
                "endpoint mismatch at splice: ‖a(1) − b(0)‖ = {gap:.3e}"
            )));
        }
        let mut nodes: Vec<f64> = self.nodes.iter().map(|u| 0.5 * u).collect();
        let mut samples = self.samples.clone();
        for (u, s) in other.nodes.iter().zip(&other.samples).skip(1) {
            nodes.push(0.5 + 0.5 * u);
            samples.push(s.clone());
        }
        *nodes.last_mut().unwrap() = 1.0;
        OperatorPath::new(nodes, samples, self.interpolation)
    }

    /// The path `u ↦ U_u F_u U_u*`, with `U` evaluated at the nodes.
    pub fn conjugate(&self, unitary: impl Fn(f64) -> Result<BlockMatrix>) -> Result<OperatorPath> {
        let mut samples = Vec::with_capacity(self.samples.len());
        for (&u, f) in self.nodes.iter().zip(&self.samples) {
            let uu = unitary(u)?;
            if **uu.model() != *self.model {
                return Err(Error::Validation("unitary lives on a different model".into()));
            }
            let defect = (&(&uu * &uu.adjoint()) - &BlockMatrix::identity(&self.model)).frobenius();
            if defect > UNITARY_TOL * (self.model.dim() as f64).sqrt().max(1.0) {
                return Err(Error::Validation(format!(
                    "sample at u = {u} is not unitary (defect {defect:.3e})"
                )));
            }
            samples.push(f.conjugate_by(&uu)?);
        }
        OperatorPath::new(self.nodes.clone(), samples, self.interpolation)
    }

    /// The path `u ↦ F_{1−u}`.
    pub fn reversed(&self) -> OperatorPath {
        let nodes: Vec<f64> = self.nodes.iter().rev().map(|u| 1.0 - u).collect();
        let samples: Vec<BlockHermitian> = self.samples.iter().rev().cloned().collect();
        OperatorPath::new(nodes, samples, self.interpolation).expect("reversal preserves validity")
    }

    /// Resamples `u ↦ F_{φ(u)}` at `nodes`; φ must map [0,1] onto [0,1].
    pub fn reparametrize(&self, phi: impl Fn(f64) -> f64, nodes: Vec<f64>) -> Result<OperatorPath> {
        let samples = nodes
            .iter()
            .map(|&u| self.eval(phi(u).clamp(0.0, 1.0)))
            .collect::<Result<Vec<_>>>()?;
        OperatorPath::new(nodes, samples, self.interpolation)
    }

    /// Block direct sum `F_u ⊕ G_u` over the union of both node sets.
    pub fn direct_sum(&self, other: &OperatorPath) -> Result<OperatorPath> {
        let model = self.model.direct_sum(&other.model);
        let mut nodes: Vec<f64> = self.nodes.iter().chain(&other.nodes).copied().collect();
        nodes.sort_by(f64::total_cmp);
        nodes.dedup();
        let samples = nodes
            .iter()
            .map(|&u| {
                let a = self.eval(u)?;
                let b = other.eval(u)?;
                let blocks: Vec<CMat> = a.blocks().iter().chain(b.blocks()).cloned().collect();
                BlockHermitian::from_blocks(model.clone(), blocks)
            })
            .collect::<Result<Vec<_>>>()?;
        OperatorPath::new(nodes, samples, self.interpolation)
    }

    /// Adds the same operator-valued perturbation to every sample.
    pub fn map_samples(&self, f: impl Fn(f64, &BlockHermitian) -> Result<BlockHermitian>) -> Result<OperatorPath> {
        let samples = self
            .nodes
            .iter()
            .zip(&self.samples)
            .map(|(&u, s)| f(u, s))
            .collect::<Result<Vec<_>>>()?;
        OperatorPath::new(self.nodes.clone(), samples, self.interpolation)
    }

    /// Uniform rescaling `F_u ↦ F_u / c`.
    pub fn scaled(&self, factor: f64) -> OperatorPath {
        self.map_samples(|_, s| Ok(s.scale(factor))).expect("scaling preserves validity")
    }

    /// `max_j ‖F_{u_j}‖` over the samples, an upper bound for the
    /// piecewise-linear interpolant.
    pub fn max_sample_norm(&self) -> Result<f64> {
        let mut m = 0.0f64;
        for s in &self.samples {
            m = m.max(s.opnorm()?);
        }
        Ok(m)
    }

    /// Replaces the endpoints by invertible ones with the same positive
    /// spectral projection:
    /// `D_u + φ(u)(1_{[0,1]}(D_0) − 1_{[−1,0)}(D_0)) + (1−φ(u))(1_{[0,1]}(D_1) − 1_{[−1,0)}(D_1))`
    /// with φ = 1 on [0, ¼], φ = 0 on [¾, 1].
    pub fn endpoint_regularized(&self) -> Result<OperatorPath> {
        let shift = |op: &BlockHermitian| -> Result<BlockHermitian> {
            let dec = tracemodel::eigh(op)?;
            let up = tracemodel::spectral_projection(&dec, Interval::closed(0.0, 1.0))?;
            let down = tracemodel::spectral_projection(&dec, Interval::new(-1.0, 0.0, true, false))?;
            up.lincomb(1.0, &down, -1.0)
        };
        let s0 = shift(self.start())?;
        let s1 = shift(self.end())?;
        let mut nodes: Vec<f64> = self
            .nodes
            .iter()
            .copied()
            .chain((0..=16).map(|k| k as f64 / 16.0))
            .collect();
        nodes.sort_by(f64::total_cmp);
        nodes.dedup();
        let samples = nodes
            .iter()
            .map(|&u| {
                let phi = 1.0 - smoothstep((u - 0.25) / 0.5);
                let base = self.eval(u)?;
                base.lincomb(1.0, &s0, phi)?.lincomb(1.0, &s1, 1.0 - phi)
            })
            .collect::<Result<Vec<_>>>()?;
        OperatorPath::new(nodes, samples, self.interpolation)
    }
}

/// C² step: 0 for t ≤ 0, 1 for t ≥ 1, quintic in between.
pub fn smoothstep(t: f64) -> f64 {
    let t = t.clamp(0.0, 1.0);
    t * t * t * (t * (6.0 * t - 15.0) + 10.0)
}

/// Derivative of [`smoothstep`].
pub fn smoothstep_derivative(t: f64) -> f64 {
    if !(0.0..=1.0).contains(&t) {
        return 0.0;
    }
    30.0 * t * t * (t - 1.0) * (t - 1.0)
}

/// Nodes `0, δ, δ + (1−2δ)k/m …, 1−δ, 1`, suitable for endpoint-flat paths
/// driven through a flattened parameter.
pub fn flat_nodes(interior: usize, delta: f64) -> Vec<f64> {
    let m = interior.max(1);
    let mut nodes = vec![0.0];
    for k in 0..m {
        nodes.push(delta + (1.0 - 2.0 * delta) * k as f64 / m as f64);
    }
    nodes.push(1.0 - delta);
    nodes.push(1.0);
    nodes
}

/// Flattening profile: 0 on [0, δ], 1 on [1−δ, 1], C² in between.
pub fn flatten(u: f64, delta: f64) -> f64 {
    if u <= delta {
        0.0
    } else if u >= 1.0 - delta {
        1.0
    } else {
        smoothstep((u - delta) / (1.0 - 2.0 * delta))
    }
}

/// Derivative of [`flatten`] in u.
pub fn flatten_derivative(u: f64, delta: f64) -> f64 {
    smoothstep_derivative((u - delta) / (1.0 - 2.0 * delta)) / (1.0 - 2.0 * delta)
}

/// A path of real symbols `ξ ↦ d_u(ξ)` over a frequency model, with the
/// zero loci of each symbol declared so that indicator integrals can be
/// split at their discontinuities.
#[derive(Clone)]
pub struct SymbolPath {
    symbol: Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>,
    zeros: Arc<dyn Fn(f64) -> Vec<f64> + Send + Sync>,
    label: String,
}

impl fmt::Debug for SymbolPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SymbolPath").field("label", &self.label).finish()
    }
}

impl SymbolPath {
    pub fn new(
        symbol: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
        zeros: impl Fn(f64) -> Vec<f64> + Send + Sync + 'static,
        label: impl Into<String>,
    ) -> Self {
        SymbolPath {
            symbol: Arc::new(symbol),
            zeros: Arc::new(zeros),
            label: label.into(),
        }
    }

    /// `d_u(ξ) = ξ + a + (b − a)u`: the Fourier picture of `i∂_x + t`,
    /// t running from a to b.
    pub fn translation(a: f64, b: f64) -> Self {
        SymbolPath::new(
            move |u, xi| xi + a + (b - a) * u,
            move |u| vec![-(a + (b - a) * u)],
            format!("xi + t, t: {a} -> {b}"),
        )
    }

    pub fn eval(&self, u: f64, xi: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&u) {
            return Err(Error::Domain(format!("path parameter {u} outside [0, 1]")));
        }
        Ok((self.symbol)(u, xi))
    }

    pub fn zeros(&self, u: f64) -> Vec<f64> {
        (self.zeros)(u)
    }

    pub fn symbol_at(&self, u: f64) -> impl Fn(f64) -> f64 + Send + Sync + '_ {
        move |xi| (self.symbol)(u, xi)
    }

    pub fn label(&self) -> &str {
        &self.label
    }
}

/// `exp(i·θ·H)` for a Hermitian `H`, computed spectrally.
pub fn unitary_exp(h: &BlockHermitian, theta: f64) -> Result<BlockMatrix> {
    let dec = tracemodel::eigh(h)?;
    let blocks = dec
        .blocks()
        .iter()
        .map(|blk| {
            let mut scaled = blk.vectors.clone();
            for (k, &lam) in blk.values.iter().enumerate() {
                let mut col = scaled.column_mut(k);
                col *= C64::from_polar(1.0, theta * lam);
            }
            scaled * blk.vectors.adjoint()
        })
        .collect();
    BlockMatrix::new(h.model().clone(), blocks)
}
