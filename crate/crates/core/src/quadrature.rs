//! Adaptive composite Gauss–Legendre quadrature.
//!
//! Each panel is integrated with a 15-point rule and compared against the
//! sum over its two halves; panels failing their share of the tolerance are
//! bisected. Refinement proceeds level by level so that panel evaluations
//! can run concurrently while the final sum keeps a fixed order.

use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::exec::{self, Execution};

pub const PANEL_POINTS: usize = 15;

/// Nodes and weights of the n-point Gauss–Legendre rule on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n {
        // Chebyshev-type initial guess, then Newton on P_n
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_and_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_and_derivative(n, x);
        dp = if d != 0.0 { d } else { dp };
        nodes[i] = x;
        weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    // ascending
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| nodes[a].total_cmp(&nodes[b]));
    (
        idx.iter().map(|&i| nodes[i]).collect(),
        idx.iter().map(|&i| weights[i]).collect(),
    )
}

fn legendre_and_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

fn rule15() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(PANEL_POINTS))
}

#[derive(Debug, Clone, Copy)]
pub struct QuadOptions {
    pub abs_tol: f64,
    pub max_panels: usize,
    pub exec: Execution,
}

impl Default for QuadOptions {
    fn default() -> Self {
        QuadOptions {
            abs_tol: 1e-8,
            max_panels: 1 << 14,
            exec: Execution::available_parallel(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    pub error_estimate: f64,
    pub panels: usize,
    pub max_depth: usize,
}

#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    depth: usize,
    // rule value on [a, b], known when the panel came from a bisection
    whole: Option<f64>,
}

fn panel_rule<F>(f: &F, a: f64, b: f64) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    let (x, w) = rule15();
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut acc = 0.0;
    for (xi, wi) in x.iter().zip(w) {
        acc += wi * f(mid + half * xi)?;
    }
    Ok(acc * half)
}

/// Integrates `f` over the union of consecutive intervals delimited by
/// `breakpoints` (sorted, at least two entries). Integrand discontinuities
/// must sit on breakpoints.
pub fn integrate<F>(f: F, breakpoints: &[f64], opts: QuadOptions) -> Result<QuadResult>
where
    F: Fn(f64) -> Result<f64> + Sync + Send,
{
    if breakpoints.len() < 2 {
        return Err(Error::Domain("quadrature needs at least two breakpoints".into()));
    }
    if breakpoints.windows(2).any(|w| !(w[1] >= w[0])) {
        return Err(Error::Domain("quadrature breakpoints must be sorted".into()));
    }
    let total = breakpoints[breakpoints.len() - 1] - breakpoints[0];
    if total == 0.0 {
        return Ok(QuadResult {
            value: 0.0,
            error_estimate: 0.0,
            panels: 0,
            max_depth: 0,
        });
    }
    let mut pending: Vec<Panel> = breakpoints
        .windows(2)
        .filter(|w| w[1] > w[0])
        .map(|w| Panel {
            a: w[0],
            b: w[1],
            depth: 0,
            whole: None,
        })
        .collect();
    let mut accepted: Vec<(f64, f64, f64)> = Vec::new(); // (a, value, err)
    let mut max_depth = 0;

    while !pending.is_empty() {
        if accepted.len() + pending.len() > opts.max_panels {
            let partial: f64 = accepted.iter().map(|p| p.1).sum();
            return Err(Error::numeric_partial(
                "quadrature",
                format!("exceeded {} panels", opts.max_panels),
                partial,
            ));
        }
        let evals = exec::try_map_indexed(opts.exec, pending.len(), |i| {
            let p = pending[i];
            let mid = 0.5 * (p.a + p.b);
            let whole = match p.whole {
                Some(w) => w,
                None => panel_rule(&f, p.a, p.b)?,
            };
            let left = panel_rule(&f, p.a, mid)?;
            let right = panel_rule(&f, mid, p.b)?;
            Ok::<_, Error>((whole, left, right))
        })?;
        let mut next = Vec::new();
        for (p, (whole, left, right)) in pending.iter().zip(evals) {
            let split = left + right;
            let err = (whole - split).abs();
            let share = opts.abs_tol * (p.b - p.a) / total;
            max_depth = max_depth.max(p.depth);
            if !split.is_finite() {
                return Err(Error::numeric("quadrature", "non-finite integrand value"));
            }
            if err <= share || p.b - p.a <= 1e-14 * total.abs().max(1.0) {
                accepted.push((p.a, split, err));
            } else {
                let mid = 0.5 * (p.a + p.b);
                next.push(Panel {
                    a: p.a,
                    b: mid,
                    depth: p.depth + 1,
                    whole: Some(left),
                });
                next.push(Panel {
                    a: mid,
                    b: p.b,
                    depth: p.depth + 1,
                    whole: Some(right),
                });
            }
        }
        pending = next;
    }
    accepted.sort_by(|x, y| x.0.total_cmp(&y.0));
    let values: Vec<f64> = accepted.iter().map(|p| p.1).collect();
    let errs: Vec<f64> = accepted.iter().map(|p| p.2).collect();
    Ok(QuadResult {
        value: exec::pairwise_sum(&values),
        error_estimate: exec::pairwise_sum(&errs),
        panels: accepted.len(),
        max_depth,
    })
}
