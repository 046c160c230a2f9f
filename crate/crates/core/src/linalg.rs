//! Dense complex linear algebra used throughout the crate.
//!
//! The Hermitian eigensolver is a cyclic Jacobi method with a fixed sweep
//! order, so identical inputs produce bit-identical outputs.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

/// Relative Hermiticity tolerance (Frobenius).
pub const HERMITIAN_TOL: f64 = 1e-12;

const MAX_SWEEPS: usize = 80;

pub fn frobenius(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// ‖m − m*‖_F / max(‖m‖_F, 1e-300).
pub fn hermitian_defect(m: &CMat) -> f64 {
    if m.nrows() != m.ncols() {
        return f64::INFINITY;
    }
    let n = m.nrows();
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            acc += (m[(i, j)] - m[(j, i)].conj()).norm_sqr();
        }
    }
    acc.sqrt() / frobenius(m).max(1e-300)
}

pub fn real_diag(values: &[f64]) -> CMat {
    let n = values.len();
    CMat::from_fn(n, n, |i, j| if i == j { C64::new(values[i], 0.0) } else { ZERO })
}

pub fn from_real(rows: usize, cols: usize, data: &[f64]) -> CMat {
    CMat::from_fn(rows, cols, |i, j| C64::new(data[i * cols + j], 0.0))
}

/// Eigenpairs of a Hermitian matrix, eigenvalues ascending.
#[derive(Debug, Clone)]
pub struct Eigh {
    pub values: Vec<f64>,
    pub vectors: CMat,
}

/// Cyclic Jacobi diagonalization of a Hermitian matrix.
///
/// Rotations visit (p, q) pairs in row-major order of the strict upper
/// triangle. After sorting, exactly degenerate clusters (spread below
/// `1e-13·(1+‖m‖)`) are given a canonical basis by pivoted Gram–Schmidt on
/// the cluster projector, and every eigenvector is phase-normalized so that
/// its first largest-modulus entry is real positive.
pub fn jacobi_eigh(m: &CMat) -> Result<Eigh> {
    let n = m.nrows();
    if n != m.ncols() {
        return Err(Error::Structure(format!("eigh of a {}x{} matrix", n, m.ncols())));
    }
    let defect = hermitian_defect(m);
    if n > 0 && defect > HERMITIAN_TOL {
        return Err(Error::Validation(format!(
            "matrix is not Hermitian (relative defect {defect:.3e})"
        )));
    }
    if n == 0 {
        return Ok(Eigh {
            values: vec![],
            vectors: CMat::zeros(0, 0),
        });
    }
    // symmetrize exactly before rotating
    let mut a = CMat::from_fn(n, n, |i, j| (m[(i, j)] + m[(j, i)].conj()) * 0.5);
    let mut v = CMat::identity(n, n);
    let scale = frobenius(&a);
    if scale == 0.0 {
        return Ok(Eigh {
            values: vec![0.0; n],
            vectors: v,
        });
    }

    let mut converged = false;
    for _ in 0..MAX_SWEEPS {
        let mut off = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off += a[(p, q)].norm_sqr();
            }
        }
        if off.sqrt() <= 1e-15 * scale {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let b = a[(p, q)];
                let babs = b.norm();
                if babs <= 1e-18 * scale {
                    continue;
                }
                let app = a[(p, p)].re;
                let aqq = a[(q, q)].re;
                let phase = b / babs;
                let theta = (aqq - app) / (2.0 * babs);
                let t = if theta >= 0.0 {
                    1.0 / (theta + (theta * theta + 1.0).sqrt())
                } else {
                    -1.0 / (-theta + (theta * theta + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                let g_pq = phase * s;
                let g_qp = -phase.conj() * s;
                // A <- A G
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = akp * c + akq * g_qp;
                    a[(k, q)] = akp * g_pq + akq * c;
                }
                // A <- G* A
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = apk * c + aqk * g_qp.conj();
                    a[(q, k)] = apk * g_pq.conj() + aqk * c;
                }
                a[(p, q)] = ZERO;
                a[(q, p)] = ZERO;
                a[(p, p)] = C64::new(app - t * babs, 0.0);
                a[(q, q)] = C64::new(aqq + t * babs, 0.0);
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = vkp * c + vkq * g_qp;
                    v[(k, q)] = vkp * g_pq + vkq * c;
                }
            }
        }
    }
    if !converged {
        return Err(Error::numeric(
            "eigh",
            format!("Jacobi iteration did not converge in {MAX_SWEEPS} sweeps"),
        ));
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].re.total_cmp(&a[(j, j)].re).then(i.cmp(&j)));
    let values: Vec<f64> = order.iter().map(|&i| a[(i, i)].re).collect();
    let mut vectors = CMat::zeros(n, n);
    for (col, &i) in order.iter().enumerate() {
        vectors.set_column(col, &v.column(i));
    }

    let norm = values.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let tol = 1e-13 * (1.0 + norm);
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && values[end] - values[end - 1] <= tol {
            end += 1;
        }
        if end - start > 1 {
            canonicalize_cluster(&mut vectors, start, end);
        }
        start = end;
    }
    for col in 0..n {
        normalize_phase(&mut vectors, col);
    }
    Ok(Eigh { values, vectors })
}

fn canonicalize_cluster(vectors: &mut CMat, start: usize, end: usize) {
    let n = vectors.nrows();
    let k = end - start;
    let basis = vectors.columns(start, k).into_owned();
    let proj = &basis * basis.adjoint();
    let mut chosen: Vec<CVec> = Vec::with_capacity(k);
    let mut used = vec![false; n];
    for _ in 0..k {
        // pick the projector column with the largest residual norm
        let mut best: Option<(usize, f64, CVec)> = None;
        for j in 0..n {
            if used[j] {
                continue;
            }
            let mut col: CVec = proj.column(j).into_owned();
            for q in &chosen {
                let coef = q.dotc(&col);
                col -= q * coef;
            }
            let nrm = col.norm();
            if best.as_ref().is_none_or(|b| nrm > b.1 + 1e-14) {
                best = Some((j, nrm, col));
            }
        }
        let (j, nrm, col) = best.expect("cluster smaller than dimension");
        used[j] = true;
        chosen.push(col / C64::new(nrm, 0.0));
    }
    for (i, q) in chosen.into_iter().enumerate() {
        vectors.set_column(start + i, &q);
    }
}

fn normalize_phase(vectors: &mut CMat, col: usize) {
    let n = vectors.nrows();
    let mut best = 0;
    let mut best_abs = -1.0;
    for i in 0..n {
        let a = vectors[(i, col)].norm();
        if a > best_abs + 1e-12 {
            best = i;
            best_abs = a;
        }
    }
    if best_abs <= 0.0 {
        return;
    }
    let phase = vectors[(best, col)].conj() / best_abs;
    for i in 0..n {
        vectors[(i, col)] *= phase;
    }
}

/// Largest |eigenvalue| of a Hermitian matrix.
pub fn hermitian_opnorm(m: &CMat) -> Result<f64> {
    let e = jacobi_eigh(m)?;
    Ok(e.values.iter().fold(0.0f64, |acc, x| acc.max(x.abs())))
}

/// Singular values in descending order.
pub fn singular_values(m: &CMat) -> Vec<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return vec![];
    }
    let mut s: Vec<f64> = m.clone().singular_values().iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Orthonormal basis of the column span, via SVD with relative cutoff `rtol`.
pub fn orthonormal_columns(m: &CMat, rtol: f64) -> CMat {
    if m.ncols() == 0 || m.nrows() == 0 {
        return CMat::zeros(m.nrows(), 0);
    }
    let svd = m.clone().svd(true, false);
    let u = svd.u.expect("requested U");
    let smax = svd.singular_values.iter().fold(0.0f64, |a, &b| a.max(b));
    let keep: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&i| svd.singular_values[i] > rtol * smax.max(1e-300))
        .collect();
    CMat::from_fn(m.nrows(), keep.len(), |i, j| u[(i, keep[j])])
}

/// Householder QR, thin Q.
pub fn thin_q(m: &CMat) -> CMat {
    if m.ncols() == 0 {
        return CMat::zeros(m.nrows(), 0);
    }
    m.clone().qr().q()
}
