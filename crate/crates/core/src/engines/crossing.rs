//! Eigenvalue-crossing engine with window bookkeeping.
//!
//! On a segment `[a, b]` every eigenvalue moves by at most
//! `δ = sup ‖F_u − F_a‖` (Weyl). If a level `w'` in `[w/2, w]` keeps a
//! distance larger than δ from the spectrum of `F_a`, no eigenvalue crosses
//! `w'` on the segment and the net flow through 0 is the change of the
//! weighted count of eigenvalues in `[0, w')`. Segments without such a level
//! are bisected.

use crate::error::{Error, Result};
use crate::exec::{self, Execution};
use crate::path::{Interpolation, OperatorPath};
use crate::tracemodel::{self, BlockHermitian, Interval, SpectralDecomposition};

use super::{Method, SpectralFlowResult};

#[derive(Debug, Clone, Copy)]
pub struct CrossingOptions {
    /// Half-open counting window `[0, window)`.
    pub window: f64,
    pub max_depth: usize,
    pub exec: Execution,
}

impl Default for CrossingOptions {
    fn default() -> Self {
        CrossingOptions {
            window: 0.5,
            max_depth: 20,
            exec: Execution::available_parallel(),
        }
    }
}

struct Node {
    u: f64,
    op: BlockHermitian,
    dec: SpectralDecomposition,
}

impl Node {
    fn at(path: &OperatorPath, u: f64) -> Result<Node> {
        let op = path.eval(u)?;
        let dec = tracemodel::eigh(&op)?;
        Ok(Node { u, op, dec })
    }
}

#[derive(Default)]
struct SegmentStats {
    flow: f64,
    depth: usize,
    evaluations: usize,
}

/// Level in `[lo, hi]` farthest from every eigenvalue, with its distance.
fn best_level(dec: &SpectralDecomposition, lo: f64, hi: f64) -> (f64, f64) {
    let eigs: Vec<f64> = dec.eigenvalues().iter().map(|e| e.value).collect();
    let mut cands = vec![lo, hi];
    let mut inside: Vec<f64> = eigs.iter().copied().filter(|&x| x > lo && x < hi).collect();
    inside.insert(0, lo);
    inside.push(hi);
    cands.extend(inside.windows(2).map(|w| 0.5 * (w[0] + w[1])));
    let dist = |c: f64| eigs.iter().fold(f64::INFINITY, |m, &x| m.min((x - c).abs()));
    cands
        .into_iter()
        .map(|c| (c, dist(c)))
        .fold((lo, f64::NEG_INFINITY), |best, c| if c.1 > best.1 { c } else { best })
}

fn motion_bound(path: &OperatorPath, a: &Node, b: &Node) -> Result<f64> {
    let diff = b.op.lincomb(1.0, &a.op, -1.0)?;
    let mut delta = diff.opnorm()?;
    if path.interpolation() == Interpolation::CubicHermite {
        // the cubic interpolant can overshoot the chord; probe interior points
        for t in [0.25, 0.5, 0.75] {
            let mid = path.eval(a.u + t * (b.u - a.u))?;
            delta = delta.max(mid.lincomb(1.0, &a.op, -1.0)?.opnorm()?);
        }
        delta *= 1.5;
    }
    Ok(delta)
}

fn segment_flow(path: &OperatorPath, a: &Node, b: &Node, depth: usize, opts: &CrossingOptions) -> Result<SegmentStats> {
    let delta = motion_bound(path, a, b)?;
    let (level, dist) = best_level(&a.dec, 0.5 * opts.window, opts.window);
    if dist > delta {
        let win = Interval::new(0.0, level, true, false);
        return Ok(SegmentStats {
            flow: b.dec.projection_trace(win) - a.dec.projection_trace(win),
            depth,
            evaluations: 0,
        });
    }
    if depth >= opts.max_depth {
        return Err(Error::numeric(
            "sf_crossing",
            format!(
                "no admissible window level on [{}, {}] after {} bisections (step motion {delta:.3e})",
                a.u, b.u, opts.max_depth
            ),
        ));
    }
    let mid = Node::at(path, 0.5 * (a.u + b.u))?;
    let left = segment_flow(path, a, &mid, depth + 1, opts)?;
    let right = segment_flow(path, &mid, b, depth + 1, opts)?;
    Ok(SegmentStats {
        flow: left.flow + right.flow,
        depth: left.depth.max(right.depth),
        evaluations: 1 + left.evaluations + right.evaluations,
    })
}

/// Net weighted number of eigenvalues crossing 0 upwards along the path.
pub fn sf_crossing(path: &OperatorPath, opts: CrossingOptions) -> Result<SpectralFlowResult> {
    if !(opts.window > 0.0 && opts.window.is_finite()) {
        return Err(Error::Domain(format!("crossing window must be positive, got {}", opts.window)));
    }
    let nodes = path.nodes();
    let built = exec::try_map_indexed(opts.exec, nodes.len(), |j| Node::at(path, nodes[j]))?;
    let stats = exec::try_map_indexed(opts.exec, nodes.len() - 1, |j| {
        segment_flow(path, &built[j], &built[j + 1], 0, &opts)
    })?;
    let flows: Vec<f64> = stats.iter().map(|s| s.flow).collect();
    let raw = exec::pairwise_sum(&flows);
    let depth = stats.iter().map(|s| s.depth).max().unwrap_or(0);
    let evals: usize = stats.iter().map(|s| s.evaluations).sum::<usize>() + nodes.len();
    let gap = built[0].dec.min_abs().min(built[nodes.len() - 1].dec.min_abs());
    Ok(SpectralFlowResult::for_model(raw, Method::Crossing, path.model())
        .with("refinement_depth", depth as f64)
        .with("evaluations", evals as f64)
        .with("min_endpoint_gap", gap))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tracemodel::WeightedBlockModel;

    fn scalar_path(a: f64, b: f64) -> OperatorPath {
        let m = WeightedBlockModel::matrix(1).unwrap();
        OperatorPath::segment(
            BlockHermitian::diag(m.clone(), &[a]).unwrap(),
            BlockHermitian::diag(m, &[b]).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn single_upward_crossing() {
        let r = sf_crossing(&scalar_path(-1.0, 1.0), CrossingOptions::default()).unwrap();
        assert_eq!(r.value, 1.0);
        assert!(r.diagnostic("refinement_depth").unwrap() >= 1.0);
    }

    #[test]
    fn downward_and_constant() {
        let r = sf_crossing(&scalar_path(1.0, -1.0), CrossingOptions::default()).unwrap();
        assert_eq!(r.value, -1.0);
        let r = sf_crossing(&scalar_path(2.0, 2.0), CrossingOptions::default()).unwrap();
        assert_eq!(r.value, 0.0);
    }

    #[test]
    fn zero_counts_as_nonnegative() {
        let r = sf_crossing(&scalar_path(-1.0, 0.0), CrossingOptions::default()).unwrap();
        assert_eq!(r.value, 1.0);
        let r = sf_crossing(&scalar_path(0.0, 1.0), CrossingOptions::default()).unwrap();
        assert_eq!(r.value, 0.0);
    }

    #[test]
    fn weighted_blocks() {
        let m = WeightedBlockModel::new(&[(1, 1.0), (1, 0.5)]).unwrap();
        let p = OperatorPath::segment(
            BlockHermitian::diag(m.clone(), &[-1.0, -2.0]).unwrap(),
            BlockHermitian::diag(m, &[1.0, 3.0]).unwrap(),
        )
        .unwrap();
        assert_eq!(sf_crossing(&p, CrossingOptions::default()).unwrap().value, 1.5);
    }

    #[test]
    fn depth_limit_is_numeric_error() {
        let opts = CrossingOptions {
            max_depth: 0,
            ..Default::default()
        };
        let err = sf_crossing(&scalar_path(-10.0, 10.0), opts).unwrap_err();
        assert!(matches!(err, Error::Numeric { .. }));
    }
}
