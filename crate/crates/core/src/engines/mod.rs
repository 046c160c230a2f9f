//! Spectral flow engines and the auxiliary spectral invariants.
//!
//! Four independent methods compute the same number:
//!
//! * [`sf_crossing`] tracks eigenvalues through a small window around 0;
//! * [`sf_phillips`] sums relative indices of close spectral projections;
//! * [`sf_integral`] integrates the heat-regularized derivative and corrects
//!   with truncated eta invariants and kernel terms;
//! * [`sf_appendix`] integrates `tr(Ḟ χ'(F))` for an admissible cutoff χ.
//!
//! Throughout, the positive spectral projection is `1_{[0,∞)}`, so a zero
//! eigenvalue counts as nonnegative.

use std::collections::BTreeMap;
use std::fmt;

use crate::tracemodel::WeightedBlockModel;

mod appendix;
mod cg;
mod chi;
mod crossing;
mod integral;
mod phillips;

pub use appendix::{sf_appendix, AppendixOptions};
pub use cg::{cg_bound, integrated_cg_lhs, CgBound};
pub use chi::ChiProfile;
pub use crossing::{sf_crossing, CrossingOptions};
pub use integral::{eta_truncated, eta_truncated_symbol, heat_trace, integral_terms, sf_integral, IntegralOptions, IntegralTerms};
pub use phillips::{ec, sf_phillips, sf_phillips_symbol, symbol_kernel_trace, PhillipsOptions, SymbolPhillipsOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    Crossing,
    Phillips,
    Integral,
    Appendix,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Crossing, Method::Phillips, Method::Integral, Method::Appendix];

    pub fn name(self) -> &'static str {
        match self {
            Method::Crossing => "crossing",
            Method::Phillips => "phillips",
            Method::Integral => "integral",
            Method::Appendix => "appendix",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Method {
    type Err = crate::Error;

    fn from_str(s: &str) -> crate::Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| crate::Error::Validation(format!("unknown engine '{s}'")))
    }
}

/// Outcome of one engine run.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralFlowResult {
    /// `raw` snapped to the nearest multiple of the model's weight step when
    /// it lies within a quarter step of one.
    pub value: f64,
    /// The unrounded sum produced by the engine.
    pub raw: f64,
    pub method: Method,
    pub diagnostics: BTreeMap<String, f64>,
}

impl SpectralFlowResult {
    pub(crate) fn new(raw: f64, method: Method, step: Option<f64>) -> Self {
        let mut diagnostics = BTreeMap::new();
        let value = match step {
            Some(q) => {
                let k = (raw / q).round();
                let off = (raw / q - k).abs();
                diagnostics.insert("rounding_offset".to_string(), off * q);
                if off < 0.25 {
                    k * q
                } else {
                    raw
                }
            }
            None => raw,
        };
        SpectralFlowResult {
            value,
            raw,
            method,
            diagnostics,
        }
    }

    pub(crate) fn for_model(raw: f64, method: Method, model: &WeightedBlockModel) -> Self {
        Self::new(raw, method, model.weight_step())
    }

    pub(crate) fn with(mut self, key: &str, value: f64) -> Self {
        self.diagnostics.insert(key.to_string(), value);
        self
    }

    pub fn diagnostic(&self, key: &str) -> Option<f64> {
        self.diagnostics.get(key).copied()
    }

    /// Error estimate reported by the engine, 0 for the exact engines.
    pub fn error_estimate(&self) -> f64 {
        self.diagnostic("quadrature_error").unwrap_or(0.0)
    }
}
