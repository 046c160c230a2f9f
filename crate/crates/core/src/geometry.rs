//! The odd signature operator of the circle under a path of metrics, the
//! metric trivialization, and the frequency-model Dirac family.
//!
//! Forms are discretized by collocation on `N = n + 1` equispaced points
//! (N odd), with the periodic spectral differentiation matrix `∂`. For the
//! metric `g = h² dx²`:
//!
//! * Gram matrices: `h·Δx` on functions, `Δx/h` on 1-form coefficients;
//! * chirality `τ = i^{1+k(k+1)} ⋆` on k-forms (k the degree of the source):
//!   `τ f = i h f dx`, `τ(g dx) = −i g/h`;
//! * `D = τd + dτ = diag(−i h⁻¹∂, −i ∂h⁻¹)`, self-adjoint for the Gram
//!   inner product, with kernel spanned by the constants and `h dx`.
//!
//! Conjugating by `G_u^{1/2}` yields `diag(K, K)` with the Hermitian
//! `K = −i h^{−1/2} ∂ h^{−1/2}`. This is the standard-inner-product form of
//! the trivialized operator `U_u D_u U_u⁻¹` handed to the engines.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::apsindex::{aps_index, SuspensionProblem};
use crate::engines::{
    cg_bound, integrated_cg_lhs, sf_appendix, sf_crossing, sf_integral, sf_phillips, sf_phillips_symbol,
    symbol_kernel_trace, AppendixOptions, CgBound, ChiProfile, CrossingOptions, IntegralOptions, Method,
    PhillipsOptions, SpectralFlowResult, SymbolPhillipsOptions,
};
use crate::error::{Error, Result};
use crate::exec::{self, Execution};
use crate::linalg::{self, CMat, C64};
use crate::path::{flat_nodes, flatten, flatten_derivative, OperatorPath, SymbolPath};
use crate::tracemodel::{self, BlockHermitian, BlockMatrix, FrequencyModel, Interval, WeightedBlockModel};

/// Width of the constant stretches at both ends of a metric path.
pub const FLAT_DELTA: f64 = 0.1;

/// Smallest admissible conformal factor.
pub const MIN_FACTOR: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TimeProfile {
    /// `t`
    Linear,
    /// `4t(1−t)`
    Bump,
    /// `sin(πt)`
    Sine,
}

impl TimeProfile {
    fn value(self, t: f64) -> f64 {
        match self {
            TimeProfile::Linear => t,
            TimeProfile::Bump => 4.0 * t * (1.0 - t),
            TimeProfile::Sine => (PI * t).sin(),
        }
    }

    fn derivative(self, t: f64) -> f64 {
        match self {
            TimeProfile::Linear => 1.0,
            TimeProfile::Bump => 4.0 - 8.0 * t,
            TimeProfile::Sine => PI * (PI * t).cos(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Trig {
    Cos,
    Sin,
}

/// One Fourier term `amplitude · profile(t) · trig(k x)` of the conformal
/// factor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricMode {
    pub k: u32,
    pub trig: Trig,
    pub amplitude: f64,
    pub profile: TimeProfile,
}

/// The path of metrics `g_u = h(u, x)² dx²` on the circle `ℝ/2πℤ`, with
/// `h(u, x) = base + Σ modes` evaluated at the flattened time
/// `t = flatten(u)`, so the metric is constant near both ends.
#[derive(Debug, Clone, PartialEq)]
pub struct CircleMetricPath {
    /// Spatial resolution (even); the grid has `n + 1` points.
    pub n: usize,
    pub base: f64,
    pub modes: Vec<MetricMode>,
}

impl CircleMetricPath {
    pub fn new(n: usize, base: f64, modes: Vec<MetricMode>) -> Result<Self> {
        let m = CircleMetricPath { n, base, modes };
        m.validate()?;
        Ok(m)
    }

    pub fn flat(n: usize) -> Result<Self> {
        Self::new(n, 1.0, vec![])
    }

    fn validate(&self) -> Result<()> {
        if self.n < 2 || !self.n.is_multiple_of(2) {
            return Err(Error::Validation(format!("resolution n must be even and at least 2, got {}", self.n)));
        }
        if let Some(m) = self.modes.iter().find(|m| 2 * m.k as usize > self.n) {
            return Err(Error::Validation(format!(
                "mode k = {} is not resolved by n = {}",
                m.k, self.n
            )));
        }
        let mut hmin = f64::INFINITY;
        for iu in 0..=64 {
            let u = iu as f64 / 64.0;
            for ix in 0..(8 * (self.n + 1)) {
                let x = 2.0 * PI * ix as f64 / (8 * (self.n + 1)) as f64;
                hmin = hmin.min(self.factor(u, x));
            }
        }
        if !(hmin > MIN_FACTOR) {
            return Err(Error::Validation(format!("conformal factor not positive (minimum {hmin:.3e})")));
        }
        Ok(())
    }

    pub fn points(&self) -> usize {
        self.n + 1
    }

    pub fn grid(&self) -> Vec<f64> {
        let np = self.points();
        (0..np).map(|k| 2.0 * PI * k as f64 / np as f64).collect()
    }

    /// `h(u, x)`.
    pub fn factor(&self, u: f64, x: f64) -> f64 {
        let t = flatten(u, FLAT_DELTA);
        self.base
            + self
                .modes
                .iter()
                .map(|m| m.amplitude * m.profile.value(t) * trig(m, x))
                .sum::<f64>()
    }

    /// `∂_u h(u, x)`.
    pub fn factor_rate(&self, u: f64, x: f64) -> f64 {
        let t = flatten(u, FLAT_DELTA);
        let dt = flatten_derivative(u, FLAT_DELTA);
        self.modes
            .iter()
            .map(|m| m.amplitude * m.profile.derivative(t) * dt * trig(m, x))
            .sum()
    }

    fn factors(&self, u: f64) -> Vec<f64> {
        self.grid().iter().map(|&x| self.factor(u, x)).collect()
    }

    fn rates(&self, u: f64) -> Vec<f64> {
        self.grid().iter().map(|&x| self.factor_rate(u, x)).collect()
    }

    /// The model of the trivialized operator: Λ⁰ and Λ¹ blocks of weight 1.
    pub fn model(&self) -> Arc<WeightedBlockModel> {
        WeightedBlockModel::new(&[(self.points(), 1.0), (self.points(), 1.0)]).expect("positive block sizes")
    }
}

fn trig(m: &MetricMode, x: f64) -> f64 {
    match m.trig {
        Trig::Cos => (m.k as f64 * x).cos(),
        Trig::Sin => (m.k as f64 * x).sin(),
    }
}

/// Periodic spectral differentiation matrix on an odd number of points.
pub fn spectral_differentiation(points: usize) -> Vec<f64> {
    assert!(points % 2 == 1, "odd point count required");
    let mut d = vec![0.0; points * points];
    for i in 0..points {
        for j in 0..points {
            if i != j {
                let k = i as i64 - j as i64;
                let sign = if k.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
                d[i * points + j] = 0.5 * sign / (k as f64 * PI / points as f64).sin();
            }
        }
    }
    d
}

/// `D^{sign}` at one metric, in grid coordinates of Λ⁰ ⊕ Λ¹.
#[derive(Debug, Clone)]
pub struct SignatureOperator {
    pub factors: Vec<f64>,
    /// `D` (not Hermitian; self-adjoint for `gram`).
    pub matrix: CMat,
    pub tau: CMat,
    /// Diagonal of the Gram matrix.
    pub gram: Vec<f64>,
}

impl SignatureOperator {
    /// `τ² = 1` defect (Frobenius).
    pub fn tau_defect(&self) -> f64 {
        let n = self.tau.nrows();
        linalg::frobenius(&(&self.tau * &self.tau - CMat::identity(n, n)))
    }

    /// Relative defect of `G·D` from being Hermitian.
    pub fn gram_adjoint_defect(&self) -> f64 {
        let gd = CMat::from_fn(self.matrix.nrows(), self.matrix.ncols(), |i, j| self.matrix[(i, j)] * self.gram[i]);
        linalg::hermitian_defect(&gd)
    }

    /// `G^{1/2} D G^{−1/2}` as a Hermitian operator on the two-block model.
    pub fn hermitian(&self) -> Result<BlockHermitian> {
        let np = self.factors.len();
        let model = WeightedBlockModel::new(&[(np, 1.0), (np, 1.0)])?;
        let full = CMat::from_fn(2 * np, 2 * np, |i, j| {
            self.matrix[(i, j)] * (self.gram[i] / self.gram[j]).sqrt()
        });
        Ok(BlockHermitian::symmetrized(BlockMatrix::from_dense(model, &full)?))
    }
}

/// Assembles `D^{sign} = τd + dτ` for the metric at `u`.
pub fn build_signature(metric: &CircleMetricPath, u: f64) -> Result<SignatureOperator> {
    if !(0.0..=1.0).contains(&u) {
        return Err(Error::Domain(format!("metric parameter {u} outside [0, 1]")));
    }
    let h = metric.factors(u);
    if let Some(bad) = h.iter().find(|&&x| !(x > MIN_FACTOR)) {
        return Err(Error::Validation(format!("conformal factor not positive ({bad})")));
    }
    let np = h.len();
    let dx = spectral_differentiation(np);
    let step = 2.0 * PI / np as f64;
    let mi = C64::new(0.0, -1.0);
    let mut matrix = CMat::zeros(2 * np, 2 * np);
    let mut tau = CMat::zeros(2 * np, 2 * np);
    for i in 0..np {
        for j in 0..np {
            let d = dx[i * np + j];
            // τ d on functions: −i h⁻¹ ∂f
            matrix[(i, j)] = mi * (d / h[i]);
            // d τ on 1-forms: −i ∂(g/h)
            matrix[(np + i, np + j)] = mi * (d / h[j]);
        }
        tau[(np + i, i)] = C64::new(0.0, h[i]);
        tau[(i, np + i)] = C64::new(0.0, -1.0 / h[i]);
    }
    let gram = h.iter().map(|&x| x * step).chain(h.iter().map(|&x| step / x)).collect();
    Ok(SignatureOperator {
        factors: h,
        matrix,
        tau,
        gram,
    })
}

/// `∂_u D^{sign}_u` in grid coordinates.
pub fn signature_rate(metric: &CircleMetricPath, u: f64) -> Result<CMat> {
    let h = metric.factors(u);
    let hd = metric.rates(u);
    let np = h.len();
    let dx = spectral_differentiation(np);
    let i = C64::new(0.0, 1.0);
    let mut m = CMat::zeros(2 * np, 2 * np);
    for r in 0..np {
        for c in 0..np {
            let d = dx[r * np + c];
            m[(r, c)] = i * (d * hd[r] / (h[r] * h[r]));
            m[(np + r, np + c)] = i * (d * hd[c] / (h[c] * h[c]));
        }
    }
    Ok(m)
}

/// The isometry `U_u` from the metric-u space to the metric-0 space:
/// `(h_u/h_0)^{1/2}` on functions and `(h_0/h_u)^{1/2}` on 1-forms.
pub fn trivialization(metric: &CircleMetricPath, u: f64) -> Result<CMat> {
    if !(0.0..=1.0).contains(&u) {
        return Err(Error::Domain(format!("metric parameter {u} outside [0, 1]")));
    }
    let h0 = metric.factors(0.0);
    let hu = metric.factors(u);
    let np = h0.len();
    let diag: Vec<f64> = (0..np)
        .map(|k| (hu[k] / h0[k]).sqrt())
        .chain((0..np).map(|k| (h0[k] / hu[k]).sqrt()))
        .collect();
    Ok(linalg::real_diag(&diag))
}

/// Hermitian form of the trivialized operator `U_u D_u U_u⁻¹`, i.e.
/// `G_0^{1/2} U_u D_u U_u⁻¹ G_0^{−1/2}`.
pub fn trivialized(metric: &CircleMetricPath, u: f64) -> Result<BlockHermitian> {
    let op = build_signature(metric, u)?;
    let g0 = build_signature(metric, 0.0)?.gram;
    let uu = trivialization(metric, u)?;
    let np = op.factors.len();
    let full = CMat::from_fn(2 * np, 2 * np, |i, j| {
        g0[i].sqrt() * uu[(i, i)] * op.matrix[(i, j)] / uu[(j, j)] / g0[j].sqrt()
    });
    Ok(BlockHermitian::symmetrized(BlockMatrix::from_dense(metric.model(), &full)?))
}

/// The trivialized signature path sampled at `interior + 3` nodes.
pub fn signature_path(metric: &CircleMetricPath, interior: usize, exec: Execution) -> Result<OperatorPath> {
    let nodes = flat_nodes(interior, FLAT_DELTA);
    let samples = exec::try_map_indexed(exec, nodes.len(), |j| trivialized(metric, nodes[j]))?;
    OperatorPath::linear(nodes, samples)
}

/// `|tr(Ḃ e^{−sB²}) − tr(Ḋ e^{−sD²})|` at one u, with analytic rates.
pub fn conjugation_residual(metric: &CircleMetricPath, u: f64, s: f64) -> Result<f64> {
    let op = build_signature(metric, u)?;
    let b = op.hermitian()?;
    let dec = tracemodel::eigh(&b)?;
    let heat = tracemodel::apply_function(&dec, |x| (-s * x * x).exp())?.as_matrix().to_dense();
    let np = op.factors.len();
    let g: Vec<f64> = op.gram.iter().map(|x| x.sqrt()).collect();
    // tr(Ḋ e^{−sD²}) = tr(G^{1/2} Ḋ G^{−1/2} e^{−sB²})
    let dd = signature_rate(metric, u)?;
    let dd_sim = CMat::from_fn(2 * np, 2 * np, |i, j| dd[(i, j)] * g[i] / g[j]);
    let lhs = (dd_sim * &heat).trace().re;
    // Ḃ for B = diag(K, K), K = −i h^{−1/2} ∂ h^{−1/2}
    let h = &op.factors;
    let hd = metric.rates(u);
    let dx = spectral_differentiation(np);
    let half = C64::new(0.0, 0.5);
    let kdot = CMat::from_fn(np, np, |i, j| {
        half * dx[i * np + j] * (hd[i] / h[i].powf(1.5) / h[j].sqrt() + hd[j] / h[j].powf(1.5) / h[i].sqrt())
    });
    let mut bdot = CMat::zeros(2 * np, 2 * np);
    bdot.view_mut((0, 0), (np, np)).copy_from(&kdot);
    bdot.view_mut((np, np), (np, np)).copy_from(&kdot);
    let rhs = (bdot * &heat).trace().re;
    Ok((lhs - rhs).abs())
}

/// Kernel trace-dimension of `D^{sign}_u`.
pub fn kernel_dimension(metric: &CircleMetricPath, u: f64) -> Result<f64> {
    let dec = tracemodel::eigh(&trivialized(metric, u)?)?;
    Ok(dec.projection_trace(Interval::closed(0.0, 0.0)))
}

#[derive(Debug, Clone)]
pub struct SignatureOptions {
    pub engines: Vec<Method>,
    pub s_grid: Vec<f64>,
    /// s values for the cutoff estimate (each > 1).
    pub cg_grid: Vec<f64>,
    pub chi: ChiProfile,
    pub interior_nodes: usize,
    pub aps_grid: usize,
    pub exec: Execution,
}

impl Default for SignatureOptions {
    fn default() -> Self {
        SignatureOptions {
            engines: Method::ALL.to_vec(),
            s_grid: vec![0.5, 2.0, 8.0],
            cg_grid: vec![2.0, 4.0, 16.0, 64.0, 256.0],
            chi: ChiProfile::sine(),
            interior_nodes: 16,
            aps_grid: 200,
            exec: Execution::available_parallel(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SignatureReport {
    /// (method, s for the integral engine, result).
    pub results: Vec<(Method, Option<f64>, SpectralFlowResult)>,
    pub aps_index: f64,
    /// Kernel trace-dimension at every path node.
    pub kernel_dims: Vec<f64>,
    pub max_conjugation_residual: f64,
    /// `(s, ∫ √s tr(|D|e^{−sD²}) du)`.
    pub cg_profile: Vec<(f64, f64)>,
    /// `(u, s, bound)` at five values of u.
    pub cg_bounds: Vec<(f64, f64, CgBound)>,
}

/// Runs every requested engine, the APS index, the cutoff estimate and the
/// conjugation identity on the trivialized signature path.
pub fn signature_flow_scenario(metric: &CircleMetricPath, opts: &SignatureOptions) -> Result<SignatureReport> {
    let path = signature_path(metric, opts.interior_nodes, opts.exec)?;
    let mut results = Vec::new();
    for &m in &opts.engines {
        match m {
            Method::Crossing => results.push((m, None, sf_crossing(&path, CrossingOptions { exec: opts.exec, ..Default::default() })?)),
            Method::Phillips => results.push((m, None, sf_phillips(&path, PhillipsOptions { exec: opts.exec, ..Default::default() })?)),
            Method::Integral => {
                for &s in &opts.s_grid {
                    let mut io = IntegralOptions::default();
                    io.quad.exec = opts.exec;
                    results.push((m, Some(s), sf_integral(&path, s, io)?));
                }
            }
            Method::Appendix => {
                // the harmonic forms make both endpoints singular
                let reg = path.endpoint_regularized()?;
                let mut ao = AppendixOptions {
                    rescale: true,
                    ..Default::default()
                };
                ao.quad.exec = opts.exec;
                results.push((m, None, sf_appendix(&reg, &opts.chi, ao)?));
            }
        }
    }
    let index = aps_index(&SuspensionProblem::new(path.clone(), opts.aps_grid).with_exec(opts.exec))?.index;
    let kernel_dims = exec::try_map_indexed(opts.exec, path.nodes().len(), |j| {
        Ok::<_, Error>(tracemodel::eigh(&path.samples()[j])?.projection_trace(Interval::closed(0.0, 0.0)))
    })?;
    let mut residual = 0.0f64;
    for &u in &[0.2, 0.35, 0.5, 0.65, 0.8] {
        for &s in &opts.s_grid {
            residual = residual.max(conjugation_residual(metric, u, s)?);
        }
    }
    let cg_profile = opts
        .cg_grid
        .iter()
        .map(|&s| Ok((s, integrated_cg_lhs(&path, s)?)))
        .collect::<Result<Vec<_>>>()?;
    let mut cg_bounds = Vec::new();
    for &u in &[0.0, 0.25, 0.5, 0.75, 1.0] {
        let op = path.eval(u)?;
        for &s in &opts.cg_grid {
            cg_bounds.push((u, s, cg_bound(&op, s)?));
        }
    }
    Ok(SignatureReport {
        results,
        aps_index: index,
        kernel_dims,
        max_conjugation_residual: residual,
        cg_profile,
        cg_bounds,
    })
}

#[derive(Debug, Clone)]
pub struct DiracReport {
    pub phillips: SpectralFlowResult,
    /// `∫_{−b}^{−a} ρ(ξ) dξ`, the trace of the swept spectral window.
    pub window_trace: f64,
    /// Largest kernel trace of any `D_u` on a sample grid.
    pub max_kernel_trace: f64,
}

/// The family `D_t = i∂_x + t`, t from `a` to `b`, in the frequency model
/// with density ρ.
pub fn dirac_family_scenario(a: f64, b: f64, model: &FrequencyModel) -> Result<DiracReport> {
    if !(a.is_finite() && b.is_finite()) || a.abs().max(b.abs()) >= model.xi_max {
        return Err(Error::Validation(format!("parameter range [{a}, {b}] must lie inside the frequency cutoff")));
    }
    let path = SymbolPath::translation(a, b);
    let phillips = sf_phillips_symbol(model, &path, SymbolPhillipsOptions::default())?;
    let (lo, hi) = if a <= b { (-b, -a) } else { (-a, -b) };
    let sign = if a <= b { 1.0 } else { -1.0 };
    let window_trace = sign * tracemodel::freq_trace(model, |_| 1.0, (lo, hi))?;
    let mut max_kernel = 0.0f64;
    for k in 0..=16 {
        max_kernel = max_kernel.max(symbol_kernel_trace(model, &path, k as f64 / 16.0)?);
    }
    Ok(DiracReport {
        phillips,
        window_trace,
        max_kernel_trace: max_kernel,
    })
}
