//! Spectral flow of a path of norm-bounded operators with invertible ends,
//!
//! `sf = ½∫_0^1 tr(Ḟ_u χ'(F_u)) du + ½tr(2P_1 − 1 − χ(F_1)) − ½tr(2P_0 − 1 − χ(F_0))`.

use crate::error::{Error, Result};
use crate::path::OperatorPath;
use crate::quadrature::{self, QuadOptions};
use crate::tracemodel::{self, SpectralDecomposition};

use super::{ChiProfile, Method, SpectralFlowResult};

/// Smallest admissible |eigenvalue| at the endpoints.
pub const ENDPOINT_GAP: f64 = 1e-8;

#[derive(Debug, Clone, Copy, Default)]
pub struct AppendixOptions {
    /// Divide the whole path by `max_u ‖F_u‖` instead of rejecting paths
    /// leaving the unit ball.
    pub rescale: bool,
    pub quad: QuadOptions,
}

fn endpoint_term(dec: &SpectralDecomposition, chi: &ChiProfile) -> f64 {
    0.5 * dec.function_trace(|x| {
        let p = if x >= 0.0 { 1.0 } else { 0.0 };
        2.0 * p - 1.0 - chi.chi(x)
    })
}

pub fn sf_appendix(path: &OperatorPath, chi: &ChiProfile, opts: AppendixOptions) -> Result<SpectralFlowResult> {
    let norm = path.max_sample_norm()?;
    let scaled;
    let (path, scale) = if norm > 1.0 + 1e-12 {
        if !opts.rescale {
            return Err(Error::Precondition(format!(
                "path leaves the unit ball (max norm {norm:.6}); enable rescaling"
            )));
        }
        scaled = path.scaled(1.0 / norm);
        (&scaled, norm)
    } else if opts.rescale && norm > 0.0 {
        scaled = path.scaled(1.0 / norm);
        (&scaled, norm)
    } else {
        (path, 1.0)
    };
    let d0 = tracemodel::eigh(path.start())?;
    let d1 = tracemodel::eigh(path.end())?;
    let gap = d0.min_abs().min(d1.min_abs());
    if gap <= ENDPOINT_GAP {
        return Err(Error::Precondition(format!(
            "endpoint not invertible (smallest |eigenvalue| {gap:.3e})"
        )));
    }
    let integrand = |u: f64| -> Result<f64> {
        let dec = tracemodel::eigh(&path.eval(u)?)?;
        let dot = path.derivative(u)?;
        Ok(0.5 * dec.weighted_trace(dot.as_matrix(), |x| chi.dchi(x))?)
    };
    let quad = quadrature::integrate(integrand, path.nodes(), opts.quad).map_err(|e| match e {
        Error::Numeric { msg, partial, .. } => Error::Numeric {
            op: "sf_appendix",
            msg,
            partial,
        },
        other => other,
    })?;
    let raw = quad.value + endpoint_term(&d1, chi) - endpoint_term(&d0, chi);
    Ok(SpectralFlowResult::for_model(raw, Method::Appendix, path.model())
        .with("integral_term", quad.value)
        .with("quadrature_error", quad.error_estimate)
        .with("panels", quad.panels as f64)
        .with("scale", scale)
        .with("min_endpoint_gap", gap))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tracemodel::{BlockHermitian, WeightedBlockModel};

    fn scalar_path(a: f64, b: f64) -> OperatorPath {
        let m = WeightedBlockModel::matrix(1).unwrap();
        OperatorPath::segment(
            BlockHermitian::diag(m.clone(), &[a]).unwrap(),
            BlockHermitian::diag(m, &[b]).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn scalar_crossing_any_profile() {
        for chi in ChiProfile::builtin() {
            let r = sf_appendix(&scalar_path(-1.0, 1.0), &chi, AppendixOptions::default()).unwrap();
            assert!((r.raw - 1.0).abs() < 1e-12);
            assert_eq!(r.value, 1.0);
        }
    }

    #[test]
    fn constant_path() {
        let r = sf_appendix(&scalar_path(0.4, 0.4), &ChiProfile::sine(), AppendixOptions::default()).unwrap();
        assert_eq!(r.raw, 0.0);
    }

    #[test]
    fn preconditions() {
        let chi = ChiProfile::sine();
        let err = sf_appendix(&scalar_path(-2.0, 2.0), &chi, AppendixOptions::default()).unwrap_err();
        assert!(matches!(err, Error::Precondition(_)));
        let opts = AppendixOptions {
            rescale: true,
            ..Default::default()
        };
        assert_eq!(sf_appendix(&scalar_path(-2.0, 2.0), &chi, opts).unwrap().value, 1.0);
        let err = sf_appendix(&scalar_path(-1.0, 0.0), &chi, AppendixOptions::default()).unwrap_err();
        assert!(matches!(err, Error::Precondition(_)));
    }
}
