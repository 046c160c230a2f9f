//! Fixed-seed agreement suites behind `sfcalc verify`.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use spectral_flow::apsindex::{aps_index, Scheme, SuspensionProblem};
use spectral_flow::engines::{
    sf_appendix, sf_crossing, sf_integral, sf_phillips, AppendixOptions, ChiProfile, CrossingOptions, IntegralOptions,
    Method, PhillipsOptions,
};
use spectral_flow::generators;
use spectral_flow::geometry::{
    dirac_family_scenario, signature_flow_scenario, CircleMetricPath, MetricMode, SignatureOptions, TimeProfile, Trig,
};
use spectral_flow::tracemodel::FrequencyModel;
use spectral_flow::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Engines,
    Aps,
    Geometry,
    All,
}

impl FromStr for Suite {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "engines" => Ok(Suite::Engines),
            "aps" => Ok(Suite::Aps),
            "geometry" => Ok(Suite::Geometry),
            "all" => Ok(Suite::All),
            _ => Err(format!("unknown suite '{s}' (expected engines, aps, geometry or all)")),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Case {
    pub suite: &'static str,
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl fmt::Display for Case {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "{tag}  {:<9} {:<28} {}", self.suite, self.name, self.detail)
    }
}

fn case(suite: &'static str, name: String, outcome: Result<(bool, String)>) -> Case {
    match outcome {
        Ok((passed, detail)) => Case { suite, name, passed, detail },
        Err(e) => Case {
            suite,
            name,
            passed: false,
            detail: e.to_string(),
        },
    }
}

fn engine_case(seed: u64, tol: f64) -> Result<(bool, String)> {
    let path = generators::random_invertible_path(seed, 16)?;
    let c = sf_crossing(&path, CrossingOptions::default())?.value;
    let p = sf_phillips(&path, PhillipsOptions::default())?.value;
    let mut worst = 0.0f64;
    for s in [0.5, 2.0, 8.0] {
        worst = worst.max((sf_integral(&path, s, IntegralOptions::default())?.raw - c).abs());
    }
    for chi in ChiProfile::builtin() {
        let opts = AppendixOptions {
            rescale: true,
            ..Default::default()
        };
        worst = worst.max((sf_appendix(&path, &chi, opts)?.raw - c).abs());
    }
    Ok((p == c && worst < tol, format!("sf {c}, phillips {p}, max deviation {worst:.1e}")))
}

fn aps_case(seed: u64) -> Result<(bool, String)> {
    let path = generators::random_flat_path(1000 + seed, 8)?;
    let c = sf_crossing(&path, CrossingOptions::default())?.value;
    let mut detail = format!("sf {c}");
    let mut ok = true;
    for scheme in [Scheme::ForwardUpwind, Scheme::ImplicitMidpoint] {
        let idx = aps_index(&SuspensionProblem::new(path.clone(), 200).with_scheme(scheme))?.index;
        ok &= idx == c;
        detail.push_str(&format!(", {scheme:?} {idx}"));
    }
    Ok((ok, detail))
}

fn metrics() -> Result<Vec<CircleMetricPath>> {
    let mode = |k, trig, amplitude, profile| MetricMode { k, trig, amplitude, profile };
    Ok(vec![
        CircleMetricPath::new(16, 1.0, vec![mode(1, Trig::Sin, 0.075, TimeProfile::Bump)])?,
        CircleMetricPath::new(
            16,
            1.0,
            vec![mode(1, Trig::Sin, 0.3, TimeProfile::Linear), mode(2, Trig::Cos, 0.2, TimeProfile::Linear)],
        )?,
        CircleMetricPath::new(16, 1.0, vec![mode(3, Trig::Cos, 0.4, TimeProfile::Sine)])?,
    ])
}

fn signature_case(metric: &CircleMetricPath, tol: f64) -> Result<(bool, String)> {
    let r = signature_flow_scenario(metric, &SignatureOptions::default())?;
    let worst = r
        .results
        .iter()
        .map(|(m, _, res)| if matches!(m, Method::Crossing | Method::Phillips) { res.value } else { res.raw })
        .fold(0.0f64, |a, v| a.max(v.abs()));
    let kernel_ok = r.kernel_dims.iter().all(|&d| d == 2.0);
    let cg = &r.cg_profile;
    let decays = cg.windows(2).all(|w| w[1].1 < w[0].1) && cg.last().unwrap().1 < 1e-3 * cg[0].1;
    let holds = r.cg_bounds.iter().all(|b| b.2.holds);
    Ok((
        worst < tol && r.aps_index == 0.0 && kernel_ok && decays && holds,
        format!("max |sf| {worst:.1e}, aps {}, kernel 2: {kernel_ok}, estimate: {}", r.aps_index, decays && holds),
    ))
}

/// Runs a suite; tolerances are the default tolerances times `scale`.
pub fn run_suite(suite: Suite, scale: f64) -> Vec<Case> {
    let mut cases = Vec::new();
    if matches!(suite, Suite::Engines | Suite::All) {
        let tol = 1e-6 * scale;
        let batch: Vec<Case> = (0..50u64)
            .into_par_iter()
            .map(|seed| case("engines", format!("random path seed {seed}"), engine_case(seed, tol)))
            .collect();
        cases.extend(batch);
    }
    if matches!(suite, Suite::Aps | Suite::All) {
        let batch: Vec<Case> = (0..30u64)
            .into_par_iter()
            .map(|seed| case("aps", format!("flat path seed {}", 1000 + seed), aps_case(seed)))
            .collect();
        cases.extend(batch);
    }
    if matches!(suite, Suite::Geometry | Suite::All) {
        match metrics() {
            Ok(ms) => {
                for (k, m) in ms.iter().enumerate() {
                    cases.push(case("geometry", format!("circle signature metric {k}"), signature_case(m, 1e-6 * scale)));
                }
            }
            Err(e) => cases.push(case("geometry", "circle metrics".into(), Err(e))),
        }
        let dirac = dirac_family_scenario(-1.0, 1.0, &FrequencyModel::integer_translations()).map(|r| {
            let dev = (r.phillips.value - 1.0 / std::f64::consts::PI).abs();
            (dev < 1e-7 * scale && r.max_kernel_trace == 0.0, format!("phillips {:.10}", r.phillips.value))
        });
        cases.push(case("geometry", "frequency translation".into(), dirac));
    }
    cases
}
