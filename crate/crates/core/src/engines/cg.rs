//! Heat-kernel estimate `√s·tr(|D|e^{−sD²}) ≤ I + II` with the split point
//! `μ = 1/√(2(s−1))` in the spectrum of `D²`.

use crate::error::{Error, Result};
use crate::path::OperatorPath;
use crate::quadrature;
use crate::tracemodel::{self, BlockHermitian, SpectralDecomposition};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CgBound {
    pub lhs: f64,
    pub term_i: f64,
    pub term_ii: f64,
    /// `lhs ≤ term_i + term_ii + 1e-12`; guaranteed for s ≥ 3/2.
    pub holds: bool,
}

fn lhs_of(dec: &SpectralDecomposition, s: f64) -> f64 {
    let tol = dec.cluster_tol();
    s.sqrt()
        * dec.function_trace(|x| {
            if x.abs() <= tol {
                0.0
            } else {
                x.abs() * (-s * x * x).exp()
            }
        })
}

fn check_s(s: f64) -> Result<()> {
    if s > 1.0 && s.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("the estimate needs s > 1, got {s}")))
    }
}

pub fn cg_bound(op: &BlockHermitian, s: f64) -> Result<CgBound> {
    check_s(s)?;
    let dec = tracemodel::eigh(op)?;
    let mu = 1.0 / (2.0 * (s - 1.0)).sqrt();
    let tol = dec.cluster_tol();
    let lhs = lhs_of(&dec, s);
    let small = dec.function_trace(|x| if x.abs() > tol && x * x <= mu { 1.0 } else { 0.0 });
    let term_i = (-0.5f64).exp() / 2f64.sqrt() * small;
    let term_ii = s.sqrt() * mu.sqrt() * (-(s - 1.0) * mu).exp() * dec.function_trace(|x| (-x * x).exp());
    Ok(CgBound {
        lhs,
        term_i,
        term_ii,
        holds: lhs <= term_i + term_ii + 1e-12,
    })
}

/// `∫_0^1 √s·tr(|D_u|e^{−sD_u²}) du` by a 15-point Gauss rule on every
/// path segment.
pub fn integrated_cg_lhs(path: &OperatorPath, s: f64) -> Result<f64> {
    check_s(s)?;
    let (x, w) = quadrature::gauss_legendre(quadrature::PANEL_POINTS);
    let mut total = 0.0;
    for seg in path.nodes().windows(2) {
        let (a, b) = (seg[0], seg[1]);
        let half = 0.5 * (b - a);
        for (xi, wi) in x.iter().zip(&w) {
            let dec = tracemodel::eigh(&path.eval(a + half * (1.0 + xi))?)?;
            total += half * wi * lhs_of(&dec, s);
        }
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tracemodel::WeightedBlockModel;

    #[test]
    fn zero_operator() {
        let m = WeightedBlockModel::matrix(1).unwrap();
        let b = cg_bound(&BlockHermitian::zeros(&m), 4.0).unwrap();
        assert_eq!(b.lhs, 0.0);
        assert_eq!(b.term_i, 0.0);
        assert!(b.term_ii > 0.0);
        assert!(b.holds);
    }

    #[test]
    fn unit_eigenvalue() {
        let m = WeightedBlockModel::matrix(1).unwrap();
        let b = cg_bound(&BlockHermitian::diag(m, &[1.0]).unwrap(), 4.0).unwrap();
        assert!((b.lhs - 2.0 * (-4.0f64).exp()).abs() < 1e-15);
        assert!(b.holds);
    }

    #[test]
    fn s_at_most_one_is_rejected() {
        let m = WeightedBlockModel::matrix(1).unwrap();
        assert!(matches!(cg_bound(&BlockHermitian::zeros(&m), 1.0), Err(Error::Domain(_))));
    }
}
