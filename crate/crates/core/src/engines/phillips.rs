//! Phillips engine: spectral flow as a sum of relative indices
//! `ec(P, Q) = tr(Q(1−P)) − tr(P(1−Q))` of positive spectral projections
//! over a partition fine enough that consecutive projections are close.
//!
//! Closeness is measured modulo the finite-trace part near zero: the
//! difference `P_j − P_{j+1}` is compressed by `1_{|λ|≥a}(F_j)` before
//! taking its norm. Without the compression the norm is 1 across every
//! crossing and no partition would qualify.

use crate::error::{Error, Result};
use crate::exec::{self, Execution};
use crate::path::{OperatorPath, SymbolPath};
use crate::tracemodel::{self, BlockHermitian, BlockMatrix, FrequencyModel, Interval};

use super::{Method, SpectralFlowResult};

/// Closeness threshold for consecutive projections.
pub const PHILLIPS_CLOSENESS: f64 = 0.5;

#[derive(Debug, Clone, Copy)]
pub struct PhillipsOptions {
    /// Half-width `a` of the spectral window removed before measuring
    /// `‖P_j − P_{j+1}‖`.
    pub window: f64,
    pub max_depth: usize,
    pub exec: Execution,
}

impl Default for PhillipsOptions {
    fn default() -> Self {
        PhillipsOptions {
            window: 0.5,
            max_depth: 20,
            exec: Execution::available_parallel(),
        }
    }
}

/// `tr(Q(1−P)) − tr(P(1−Q))`.
pub fn ec(p: &BlockHermitian, q: &BlockHermitian) -> Result<f64> {
    let id = BlockMatrix::identity(p.model());
    let one_minus_p = id.try_sub(p.as_matrix())?;
    let one_minus_q = id.try_sub(q.as_matrix())?;
    Ok(tracemodel::trace_product(q.as_matrix(), &one_minus_p)? - tracemodel::trace_product(p.as_matrix(), &one_minus_q)?)
}

struct Node {
    u: f64,
    proj: BlockHermitian,
    outer: BlockHermitian,
}

impl Node {
    fn at(path: &OperatorPath, u: f64, window: f64) -> Result<Node> {
        let dec = tracemodel::eigh(&path.eval(u)?)?;
        let proj = tracemodel::spectral_projection(&dec, Interval::nonnegative())?;
        let inner = tracemodel::spectral_projection(&dec, Interval::open(-window, window))?;
        let outer = BlockHermitian::identity(path.model()).lincomb(1.0, &inner, -1.0)?;
        Ok(Node { u, proj, outer })
    }
}

fn compressed_distance(a: &Node, b: &Node) -> Result<f64> {
    let diff = b.proj.lincomb(1.0, &a.proj, -1.0)?;
    BlockHermitian::symmetrized(&(a.outer.as_matrix() * diff.as_matrix()) * a.outer.as_matrix()).opnorm()
}

fn segment_sum(path: &OperatorPath, a: &Node, b: &Node, depth: usize, opts: &PhillipsOptions) -> Result<(f64, usize, usize)> {
    if compressed_distance(a, b)? <= PHILLIPS_CLOSENESS {
        return Ok((ec(&a.proj, &b.proj)?, depth, 1));
    }
    if depth >= opts.max_depth {
        return Err(Error::numeric(
            "sf_phillips",
            format!("partition refinement on [{}, {}] did not converge", a.u, b.u),
        ));
    }
    let mid = Node::at(path, 0.5 * (a.u + b.u), opts.window)?;
    let (l, dl, nl) = segment_sum(path, a, &mid, depth + 1, opts)?;
    let (r, dr, nr) = segment_sum(path, &mid, b, depth + 1, opts)?;
    Ok((l + r, dl.max(dr), nl + nr))
}

/// Phillips spectral flow on a [`crate::tracemodel::WeightedBlockModel`] path.
pub fn sf_phillips(path: &OperatorPath, opts: PhillipsOptions) -> Result<SpectralFlowResult> {
    if !(opts.window > 0.0 && opts.window.is_finite()) {
        return Err(Error::Domain(format!("Phillips window must be positive, got {}", opts.window)));
    }
    let nodes = path.nodes();
    let built = exec::try_map_indexed(opts.exec, nodes.len(), |j| Node::at(path, nodes[j], opts.window))?;
    let parts = exec::try_map_indexed(opts.exec, nodes.len() - 1, |j| {
        segment_sum(path, &built[j], &built[j + 1], 0, &opts)
    })?;
    let terms: Vec<f64> = parts.iter().map(|p| p.0).collect();
    let raw = exec::pairwise_sum(&terms);
    Ok(SpectralFlowResult::for_model(raw, Method::Phillips, path.model())
        .with("refinement_depth", parts.iter().map(|p| p.1).max().unwrap_or(0) as f64)
        .with("partition_size", parts.iter().map(|p| p.2).sum::<usize>() as f64))
}

#[derive(Debug, Clone, Copy)]
pub struct SymbolPhillipsOptions {
    /// Number of uniform partition steps in u.
    pub steps: usize,
    pub exec: Execution,
}

impl Default for SymbolPhillipsOptions {
    fn default() -> Self {
        SymbolPhillipsOptions {
            steps: 8,
            exec: Execution::available_parallel(),
        }
    }
}

fn breaks_for(model: &FrequencyModel, zeros: impl IntoIterator<Item = f64>) -> Vec<f64> {
    let cut = model.xi_max;
    let mut pts: Vec<f64> = zeros.into_iter().filter(|z| z.abs() < cut).collect();
    pts.push(-cut);
    pts.push(cut);
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    pts
}

/// Phillips spectral flow of a symbol path on a [`FrequencyModel`]; both
/// traces in `ec` are density integrals of indicator differences.
pub fn sf_phillips_symbol(model: &FrequencyModel, path: &SymbolPath, opts: SymbolPhillipsOptions) -> Result<SpectralFlowResult> {
    if opts.steps == 0 {
        return Err(Error::Validation("Phillips partition needs at least one step".into()));
    }
    let us: Vec<f64> = (0..=opts.steps).map(|k| k as f64 / opts.steps as f64).collect();
    let terms = exec::try_map_indexed(opts.exec, opts.steps, |j| {
        let (ua, ub) = (us[j], us[j + 1]);
        let p = path.symbol_at(ua);
        let q = path.symbol_at(ub);
        let excess = |xi: f64| {
            let pin = p(xi) >= 0.0;
            let qin = q(xi) >= 0.0;
            (qin && !pin) as i32 as f64 - (pin && !qin) as i32 as f64
        };
        for edge in [-model.xi_max, model.xi_max] {
            if excess(edge) != 0.0 {
                return Err(Error::Model(format!(
                    "projections at u = {ua} and u = {ub} differ at the frequency cutoff {edge}; the difference is not trace class"
                )));
            }
        }
        let breaks = breaks_for(model, path.zeros(ua).into_iter().chain(path.zeros(ub)));
        tracemodel::freq_trace_with_breaks(model, excess, &breaks)
    })?;
    let raw = exec::pairwise_sum(&terms);
    Ok(SpectralFlowResult::new(raw, Method::Phillips, None).with("partition_size", opts.steps as f64))
}

/// Trace of the kernel projection `1_{d_u = 0}` in the frequency model.
pub fn symbol_kernel_trace(model: &FrequencyModel, path: &SymbolPath, u: f64) -> Result<f64> {
    path.eval(u, 0.0)?;
    let d = path.symbol_at(u);
    let breaks = breaks_for(model, path.zeros(u));
    tracemodel::freq_trace_with_breaks(model, |xi| if d(xi) == 0.0 { 1.0 } else { 0.0 }, &breaks)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tracemodel::WeightedBlockModel;
    use std::f64::consts::PI;

    #[test]
    fn ec_of_equal_projections_vanishes() {
        let m = WeightedBlockModel::matrix(2).unwrap();
        let p = BlockHermitian::diag(m, &[1.0, 0.0]).unwrap();
        assert_eq!(ec(&p, &p).unwrap(), 0.0);
    }

    #[test]
    fn ec_counts_gained_rank() {
        let m = WeightedBlockModel::new(&[(2, 0.5)]).unwrap();
        let p = BlockHermitian::diag(m.clone(), &[1.0, 0.0]).unwrap();
        let q = BlockHermitian::identity(&m);
        assert_eq!(ec(&p, &q).unwrap(), 0.5);
        assert_eq!(ec(&q, &p).unwrap(), -0.5);
    }

    #[test]
    fn scalar_crossing() {
        let m = WeightedBlockModel::matrix(1).unwrap();
        let p = OperatorPath::segment(
            BlockHermitian::diag(m.clone(), &[-1.0]).unwrap(),
            BlockHermitian::diag(m, &[1.0]).unwrap(),
        )
        .unwrap();
        assert_eq!(sf_phillips(&p, PhillipsOptions::default()).unwrap().value, 1.0);
    }

    #[test]
    fn translation_symbol_gives_one_over_pi() {
        let model = FrequencyModel::integer_translations();
        let path = SymbolPath::translation(-1.0, 1.0);
        let r = sf_phillips_symbol(&model, &path, SymbolPhillipsOptions::default()).unwrap();
        assert!((r.value - 1.0 / PI).abs() < 1e-7, "{}", r.value);
        for u in [0.0, 0.5, 1.0] {
            assert_eq!(symbol_kernel_trace(&model, &path, u).unwrap(), 0.0);
        }
    }

    #[test]
    fn constant_symbol_path() {
        let model = FrequencyModel::integer_translations();
        let path = SymbolPath::translation(0.3, 0.3);
        let r = sf_phillips_symbol(&model, &path, SymbolPhillipsOptions::default()).unwrap();
        assert_eq!(r.value, 0.0);
    }

    #[test]
    fn sign_flip_is_not_trace_class() {
        let model = FrequencyModel::integer_translations();
        let path = SymbolPath::new(|u, xi| (1.0 - 2.0 * u) * xi, |_| vec![0.0], "flip");
        let err = sf_phillips_symbol(&model, &path, SymbolPhillipsOptions::default()).unwrap_err();
        assert!(matches!(err, Error::Model(_)));
    }
}
