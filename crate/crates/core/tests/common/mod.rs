#![allow(dead_code)]

use rand::Rng;
use spectral_flow::engines::{sf_crossing, sf_integral, sf_phillips, CrossingOptions, IntegralOptions, PhillipsOptions};
use spectral_flow::generators::{self, random_hermitian, random_model, random_path_on};
use spectral_flow::path::{unitary_exp, OperatorPath};

pub type Check = Result<(), String>;

/// Crossing, Phillips and integral (s = 2) values of a path.
pub fn engine_values(path: &OperatorPath) -> Result<[f64; 3], String> {
    let c = sf_crossing(path, CrossingOptions::default()).map_err(|e| e.to_string())?;
    let p = sf_phillips(path, PhillipsOptions::default()).map_err(|e| e.to_string())?;
    let i = sf_integral(path, 2.0, IntegralOptions::default()).map_err(|e| e.to_string())?;
    Ok([c.value, p.value, i.value])
}

/// Exact equality for the two counting engines, `tol` for the integral
/// engine.
pub fn compare(label: &str, got: [f64; 3], want: [f64; 3], tol: f64) -> Check {
    if got[0] != want[0] || got[1] != want[1] || (got[2] - want[2]).abs() > tol {
        return Err(format!("{label}: got {got:?}, expected {want:?}"));
    }
    Ok(())
}

fn add(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

pub fn concatenation(seed: u64) -> Check {
    let mut rng = generators::rng(seed);
    let model = random_model(&mut rng, 6).map_err(|e| e.to_string())?;
    let a = random_path_on(&mut rng, &model).map_err(|e| e.to_string())?;
    let b = random_path_on(&mut rng, &model).map_err(|e| e.to_string())?;
    let mut samples = b.samples().to_vec();
    samples[0] = a.end().clone();
    let b = OperatorPath::linear(b.nodes().to_vec(), samples).map_err(|e| e.to_string())?;
    let ab = a.concatenate(&b).map_err(|e| e.to_string())?;
    compare("concatenation", engine_values(&ab)?, add(engine_values(&a)?, engine_values(&b)?), 1e-9)
}

pub fn reparametrization(seed: u64) -> Check {
    let path = generators::random_invertible_path(seed, 6).map_err(|e| e.to_string())?;
    let exponent = 1.0 + generators::rng(seed ^ 0x5eed).gen_range(0.5..2.0);
    let nodes: Vec<f64> = (0..=40).map(|k| k as f64 / 40.0).collect();
    let re = path.reparametrize(|u| u.powf(exponent), nodes).map_err(|e| e.to_string())?;
    compare("reparametrization", engine_values(&re)?, engine_values(&path)?, 1e-9)
}

pub fn conjugation(seed: u64) -> Check {
    let mut rng = generators::rng(seed);
    let model = random_model(&mut rng, 6).map_err(|e| e.to_string())?;
    let path = random_path_on(&mut rng, &model).map_err(|e| e.to_string())?;
    let h = random_hermitian(&mut rng, &model, 1.0);
    let amp = rng.gen_range(1.0..4.0);
    let conj = path
        .conjugate(|u| {
            // exact identity at both ends
            let theta = if u == 0.0 || u == 1.0 { 0.0 } else { amp * (std::f64::consts::PI * u).sin() };
            unitary_exp(&h, theta)
        })
        .map_err(|e| e.to_string())?;
    compare("conjugation", engine_values(&conj)?, engine_values(&path)?, 1e-9)
}

pub fn direct_sum(seed: u64) -> Check {
    let a = generators::random_invertible_path(seed, 5).map_err(|e| e.to_string())?;
    let b = generators::random_invertible_path(seed + 10_000, 5).map_err(|e| e.to_string())?;
    let ab = a.direct_sum(&b).map_err(|e| e.to_string())?;
    compare("direct sum", engine_values(&ab)?, add(engine_values(&a)?, engine_values(&b)?), 1e-9)
}

pub fn reversal(seed: u64) -> Check {
    let path = generators::random_invertible_path(seed, 6).map_err(|e| e.to_string())?;
    let v = engine_values(&path)?;
    compare("reversal", engine_values(&path.reversed())?, [-v[0], -v[1], -v[2]], 1e-9)
}
