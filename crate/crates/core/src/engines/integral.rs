//! Heat-regularized integral formula for spectral flow,
//!
//! `sf = √(s/π) ∫_0^1 tr(Ḋ_u e^{−sD_u²}) du + ½η_s(D_1) − ½η_s(D_0)
//!       + ½ tr P_{ker D_1} − ½ tr P_{ker D_0}`,
//!
//! with the truncated eta invariant `η_s(D) = Σ w·sign(λ)·erfc(√s|λ|)`.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::path::{OperatorPath, SymbolPath};
use crate::quadrature::{self, QuadOptions};
use crate::tracemodel::{self, BlockHermitian, FrequencyModel, Interval, SpectralDecomposition};

use super::{Method, SpectralFlowResult};

#[derive(Debug, Clone, Copy, Default)]
pub struct IntegralOptions {
    pub quad: QuadOptions,
}

/// The five terms of the integral formula.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegralTerms {
    pub integral: f64,
    pub eta_start: f64,
    pub eta_end: f64,
    pub kernel_start: f64,
    pub kernel_end: f64,
    pub quadrature_error: f64,
    pub panels: usize,
}

impl IntegralTerms {
    pub fn total(&self) -> f64 {
        self.integral + 0.5 * (self.eta_end - self.eta_start) + 0.5 * (self.kernel_end - self.kernel_start)
    }
}

fn check_s(s: f64) -> Result<()> {
    if s > 0.0 && s.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("heat parameter s must be positive, got {s}")))
    }
}

fn eta_of(dec: &SpectralDecomposition, s: f64) -> f64 {
    let tol = dec.cluster_tol();
    let rs = s.sqrt();
    dec.function_trace(|x| {
        if x.abs() <= tol {
            0.0
        } else {
            x.signum() * libm::erfc(rs * x.abs())
        }
    })
}

fn kernel_trace(dec: &SpectralDecomposition) -> f64 {
    dec.projection_trace(Interval::closed(0.0, 0.0))
}

/// Truncated eta invariant `Σ w·sign(λ)·erfc(√s|λ|)`; the kernel cluster
/// contributes nothing.
pub fn eta_truncated(op: &BlockHermitian, s: f64) -> Result<f64> {
    check_s(s)?;
    Ok(eta_of(&tracemodel::eigh(op)?, s))
}

/// Truncated eta invariant of the multiplication operator by `d_u` on a
/// frequency model, integrated over `|ξ| ≤ xi_max`.
pub fn eta_truncated_symbol(model: &FrequencyModel, path: &SymbolPath, u: f64, s: f64) -> Result<f64> {
    check_s(s)?;
    path.eval(u, 0.0)?;
    let d = path.symbol_at(u);
    let rs = s.sqrt();
    let mut breaks: Vec<f64> = path.zeros(u);
    breaks.extend([-model.xi_max, model.xi_max]);
    tracemodel::freq_trace_with_breaks(
        model,
        |xi| {
            let v = d(xi);
            if v == 0.0 {
                0.0
            } else {
                v.signum() * libm::erfc(rs * v.abs())
            }
        },
        &breaks,
    )
}

/// Heat trace `tr e^{−t·op²}`.
pub fn heat_trace(op: &BlockHermitian, t: f64) -> Result<f64> {
    check_s(t)?;
    Ok(tracemodel::eigh(op)?.function_trace(|x| (-t * x * x).exp()))
}

/// Evaluates each term of the integral formula separately.
pub fn integral_terms(path: &OperatorPath, s: f64, opts: IntegralOptions) -> Result<IntegralTerms> {
    check_s(s)?;
    let pref = (s / PI).sqrt();
    let integrand = |u: f64| -> Result<f64> {
        let dec = tracemodel::eigh(&path.eval(u)?)?;
        let dot = path.derivative(u)?;
        Ok(pref * dec.weighted_trace(dot.as_matrix(), |x| (-s * x * x).exp())?)
    };
    let quad = quadrature::integrate(integrand, path.nodes(), opts.quad).map_err(|e| match e {
        Error::Numeric { msg, partial, .. } => Error::Numeric {
            op: "sf_integral",
            msg,
            partial,
        },
        other => other,
    })?;
    let d0 = tracemodel::eigh(path.start())?;
    let d1 = tracemodel::eigh(path.end())?;
    Ok(IntegralTerms {
        integral: quad.value,
        eta_start: eta_of(&d0, s),
        eta_end: eta_of(&d1, s),
        kernel_start: kernel_trace(&d0),
        kernel_end: kernel_trace(&d1),
        quadrature_error: quad.error_estimate,
        panels: quad.panels,
    })
}

/// Spectral flow from the integral formula at heat parameter `s`.
pub fn sf_integral(path: &OperatorPath, s: f64, opts: IntegralOptions) -> Result<SpectralFlowResult> {
    let t = integral_terms(path, s, opts)?;
    Ok(SpectralFlowResult::for_model(t.total(), Method::Integral, path.model())
        .with("integral_term", t.integral)
        .with("eta_term", 0.5 * (t.eta_end - t.eta_start))
        .with("kernel_term", 0.5 * (t.kernel_end - t.kernel_start))
        .with("quadrature_error", t.quadrature_error)
        .with("panels", t.panels as f64))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tracemodel::WeightedBlockModel;

    fn scalar(x: f64) -> BlockHermitian {
        BlockHermitian::diag(WeightedBlockModel::matrix(1).unwrap(), &[x]).unwrap()
    }

    #[test]
    fn eta_single_eigenvalue_matches_defining_integral() {
        let eta = eta_truncated(&scalar(1.0), 1.0).unwrap();
        assert!((eta - 0.157_299_207_050_285_1).abs() < 1e-14);
        // (1/√π) ∫_1^∞ λ e^{−tλ²} dt/√t with λ = 1, substituting t = 1 + x/(1−x)
        let f = |x: f64| {
            let t = 1.0 + x / (1.0 - x);
            let jac = 1.0 / ((1.0 - x) * (1.0 - x));
            Ok((-t).exp() / t.sqrt() * jac / PI.sqrt())
        };
        let q = quadrature::integrate(f, &[0.0, 1.0 - 1e-12], QuadOptions { abs_tol: 1e-12, ..Default::default() }).unwrap();
        assert!((q.value - eta).abs() < 1e-9);
    }

    #[test]
    fn eta_of_symmetric_spectrum_and_kernel() {
        let m = WeightedBlockModel::matrix(3).unwrap();
        let op = BlockHermitian::diag(m, &[-2.0, 0.0, 2.0]).unwrap();
        assert_eq!(eta_truncated(&op, 0.7).unwrap(), 0.0);
        assert_eq!(eta_truncated(&scalar(0.0), 3.0).unwrap(), 0.0);
        assert!(eta_truncated(&scalar(1.0), 0.0).is_err());
    }

    #[test]
    fn scalar_crossing_terms() {
        let p = OperatorPath::segment(scalar(-1.0), scalar(1.0)).unwrap();
        for s in [0.5, 1.0, 4.0] {
            let t = integral_terms(&p, s, IntegralOptions::default()).unwrap();
            assert!((t.integral - libm::erf(s.sqrt())).abs() < 1e-12);
            assert!((0.5 * (t.eta_end - t.eta_start) - libm::erfc(s.sqrt())).abs() < 1e-15);
            assert!((t.total() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn constant_path_is_zero() {
        let p = OperatorPath::constant(scalar(0.7)).unwrap();
        let r = sf_integral(&p, 2.0, IntegralOptions::default()).unwrap();
        assert_eq!(r.value, 0.0);
        assert_eq!(r.raw, 0.0);
    }

    #[test]
    fn kernel_endpoint() {
        let p = OperatorPath::segment(scalar(-1.0), scalar(0.0)).unwrap();
        let r = sf_integral(&p, 2.0, IntegralOptions::default()).unwrap();
        assert!((r.raw - 1.0).abs() < 1e-9);
    }
}
