//! Acceptance suite: one PASS/FAIL line per criterion, runtime included.
//! Exits with status 1 if any criterion fails or exceeds its time budget.

mod common;

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use spectral_flow::apsindex::{
    aps_index, flattened, halfline_aps_apply_inverse, perturbation_truncation_check, Geometry, Scheme,
    SuspensionProblem,
};
use spectral_flow::engines::{
    cg_bound, integral_terms, integrated_cg_lhs, sf_appendix, sf_crossing, sf_integral, sf_phillips,
    AppendixOptions, ChiProfile, CrossingOptions, IntegralOptions, Method, PhillipsOptions,
};
use spectral_flow::generators;
use spectral_flow::geometry::{
    dirac_family_scenario, signature_flow_scenario, signature_path, CircleMetricPath, MetricMode,
    SignatureOptions, TimeProfile, Trig,
};
use spectral_flow::path::OperatorPath;
use spectral_flow::quadrature::QuadOptions;
use spectral_flow::tracemodel::{BlockHermitian, FrequencyModel, WeightedBlockModel};
use spectral_flow::Error;

type Outcome = Result<String, String>;

fn err(e: Error) -> String {
    e.to_string()
}

const S_GRID: [f64; 3] = [0.5, 2.0, 8.0];

/// Runs every engine on `path` and checks it against `expected`: exact for
/// crossing and Phillips, `tol` for the quadrature engines.
fn all_engines(path: &OperatorPath, expected: f64, tol: f64, label: &str) -> Result<(), String> {
    let c = sf_crossing(path, CrossingOptions::default()).map_err(err)?.value;
    let p = sf_phillips(path, PhillipsOptions::default()).map_err(err)?.value;
    if c != expected || p != expected {
        return Err(format!("{label}: crossing {c}, phillips {p}, expected {expected}"));
    }
    for s in S_GRID {
        let v = sf_integral(path, s, IntegralOptions::default()).map_err(err)?.raw;
        if (v - expected).abs() >= tol {
            return Err(format!("{label}: integral(s = {s}) = {v}"));
        }
    }
    for chi in ChiProfile::builtin() {
        let opts = AppendixOptions { rescale: true, ..Default::default() };
        let v = sf_appendix(path, &chi, opts).map_err(err)?.raw;
        if (v - expected).abs() >= tol {
            return Err(format!("{label}: appendix({}) = {v}", chi.name()));
        }
    }
    Ok(())
}

fn engine_agreement() -> Outcome {
    let mut crossings = 0.0f64;
    for seed in 0..50 {
        let path = generators::random_invertible_path(seed, 16).map_err(err)?;
        let c = sf_crossing(&path, CrossingOptions::default()).map_err(err)?.value;
        all_engines(&path, c, 1e-6, &format!("seed {seed}"))?;
        crossings += c.abs();
    }
    Ok(format!("50 paths, Σ|sf| = {crossings}"))
}

fn index_equals_flow() -> Outcome {
    let mut checked = 0;
    for seed in 0..30 {
        let path = generators::random_flat_path(1000 + seed, 8).map_err(err)?;
        let c = sf_crossing(&path, CrossingOptions::default()).map_err(err)?.value;
        for scheme in [Scheme::ForwardUpwind, Scheme::ImplicitMidpoint] {
            let idx = aps_index(&SuspensionProblem::new(path.clone(), 200).with_scheme(scheme)).map_err(err)?;
            if idx.index != c {
                return Err(format!("seed {seed} {scheme:?}: index {} vs crossing {c}", idx.index));
            }
            checked += 1;
        }
    }
    Ok(format!("{checked} (path, scheme) pairs"))
}

fn scalar(x: f64) -> BlockHermitian {
    BlockHermitian::diag(WeightedBlockModel::matrix(1).unwrap(), &[x]).unwrap()
}

fn single_crossing() -> Outcome {
    let path = OperatorPath::segment(scalar(-1.0), scalar(1.0)).map_err(err)?;
    all_engines(&path, 1.0, 1e-12, "2u−1")?;
    let flat = flattened(&path, 16).map_err(err)?;
    let interval = aps_index(&SuspensionProblem::new(flat, 200)).map_err(err)?.index;
    let cylinder = aps_index(&SuspensionProblem::new(path.clone(), 200).with_geometry(Geometry::Cylinder))
        .map_err(err)?
        .index;
    if interval != 1.0 || cylinder != 1.0 {
        return Err(format!("aps index {interval} (interval), {cylinder} (cylinder)"));
    }
    let opts = IntegralOptions {
        quad: QuadOptions { abs_tol: 1e-14, ..Default::default() },
    };
    for s in [0.5f64, 1.0, 4.0] {
        let t = integral_terms(&path, s, opts).map_err(err)?;
        let erf = libm::erf(s.sqrt());
        let erfc = libm::erfc(s.sqrt());
        let eta = 0.5 * (t.eta_end - t.eta_start);
        if (t.integral - erf).abs() > 1e-12 || (eta - erfc).abs() > 1e-12 || (t.total() - 1.0).abs() > 1e-12 {
            return Err(format!("s = {s}: integral {} vs erf {erf}, eta {eta} vs erfc {erfc}", t.integral));
        }
    }
    Ok("all engines 1, aps index 1, erf + erfc terms to 1e-12".into())
}

fn involution_paths() -> Outcome {
    let cases: [(&[(usize, f64)], &[usize], f64); 4] = [
        (&[(4, 1.0)], &[1], 1.0),
        (&[(5, 1.0)], &[2], 2.0),
        (&[(3, 1.0), (4, 1.0)], &[1, 2], 3.0),
        (&[(3, 1.0), (2, 0.5)], &[1, 1], 1.5),
    ];
    for (k, (blocks, ranks, expected)) in cases.iter().enumerate() {
        let model = WeightedBlockModel::new(blocks).map_err(err)?;
        let path = generators::involution_path(&model, ranks, 40 + k as u64).map_err(err)?;
        all_engines(&path, *expected, 1e-6, &format!("tr P⁻ = {expected}"))?;
        let idx = aps_index(&SuspensionProblem::new(path, 200)).map_err(err)?.index;
        if idx != *expected {
            return Err(format!("tr P⁻ = {expected}: aps index {idx}"));
        }
    }
    Ok("sf = tr P⁻ for 1, 2, 3, 1.5".into())
}

fn frequency_path() -> Outcome {
    let model = FrequencyModel::integer_translations();
    let r = dirac_family_scenario(-1.0, 1.0, &model).map_err(err)?;
    if (r.phillips.value - 1.0 / PI).abs() >= 1e-7 {
        return Err(format!("phillips {} vs 1/π", r.phillips.value));
    }
    if r.max_kernel_trace != 0.0 {
        return Err(format!("kernel trace {}", r.max_kernel_trace));
    }
    Ok(format!("phillips = {:.10}, kernel trace 0", r.phillips.value))
}

fn mode(k: u32, trig: Trig, amplitude: f64, profile: TimeProfile) -> MetricMode {
    MetricMode { k, trig, amplitude, profile }
}

fn circle_metrics() -> Vec<CircleMetricPath> {
    vec![
        CircleMetricPath::new(16, 1.0, vec![mode(1, Trig::Sin, 0.075, TimeProfile::Bump)]).unwrap(),
        CircleMetricPath::new(
            16,
            1.0,
            vec![mode(1, Trig::Sin, 0.3, TimeProfile::Linear), mode(2, Trig::Cos, 0.2, TimeProfile::Linear)],
        )
        .unwrap(),
        CircleMetricPath::new(16, 1.0, vec![mode(3, Trig::Cos, 0.4, TimeProfile::Sine)]).unwrap(),
    ]
}

fn circle_signature() -> Outcome {
    let mut worst = 0.0f64;
    for (k, metric) in circle_metrics().iter().enumerate() {
        let opts = SignatureOptions { cg_grid: vec![], ..Default::default() };
        let r = signature_flow_scenario(metric, &opts).map_err(err)?;
        for (m, s, res) in &r.results {
            let v = if *m == Method::Crossing || *m == Method::Phillips { res.value } else { res.raw };
            worst = worst.max(v.abs());
            if v.abs() > 1e-6 {
                return Err(format!("metric {k}: {m} (s = {s:?}) = {v}"));
            }
        }
        if r.aps_index != 0.0 {
            return Err(format!("metric {k}: aps index {}", r.aps_index));
        }
        if let Some(d) = r.kernel_dims.iter().find(|&&d| d != 2.0) {
            return Err(format!("metric {k}: kernel dimension {d}"));
        }
    }
    Ok(format!("3 metrics, max |sf| = {worst:.2e}, aps index 0, kernel 2"))
}

fn cg_estimate() -> Outcome {
    let grid = [2.0, 4.0, 16.0, 64.0, 256.0];
    let mut ratios = Vec::new();
    for (k, metric) in circle_metrics().iter().enumerate() {
        let path = signature_path(metric, 16, Default::default()).map_err(err)?;
        for u in [0.0, 0.25, 0.5, 0.75, 1.0] {
            let op = path.eval(u).map_err(err)?;
            for s in grid {
                let b = cg_bound(&op, s).map_err(err)?;
                if !b.holds {
                    return Err(format!("metric {k}, u = {u}, s = {s}: {b:?}"));
                }
            }
        }
        let profile: Vec<f64> = grid.iter().map(|&s| integrated_cg_lhs(&path, s)).collect::<Result<_, _>>().map_err(err)?;
        if profile.windows(2).any(|w| w[1] >= w[0]) || profile[4] >= 1e-3 * profile[0] {
            return Err(format!("metric {k}: integrated lhs {profile:?}"));
        }
        ratios.push(format!("{:.1e}", profile[4] / profile[0]));
    }
    Ok(format!("bound holds; final/initial ratios {}", ratios.join(", ")))
}

fn structural() -> Outcome {
    let suites: [(&str, fn(u64) -> common::Check); 5] = [
        ("concatenation", common::concatenation),
        ("reparametrization", common::reparametrization),
        ("conjugation", common::conjugation),
        ("direct sum", common::direct_sum),
        ("reversal", common::reversal),
    ];
    for (name, check) in suites {
        for seed in 0..20 {
            check(2000 + seed).map_err(|e| format!("{name}, seed {}: {e}", 2000 + seed))?;
        }
    }
    Ok("5 properties × 20 seeds".into())
}

fn halfline_inverse() -> Outcome {
    let mut orders = Vec::new();
    for seed in 0..5 {
        let case = generators::halfline_case(3000 + seed, 4).map_err(err)?;
        let mut residuals = Vec::new();
        for cells in [200, 400, 800] {
            let sol = halfline_aps_apply_inverse(&case.d0, &case.cells(cells), case.length).map_err(err)?;
            if sol.boundary_defect > 1e-8 {
                return Err(format!("seed {seed}: ‖P_0 g(0)‖ = {:.3e}", sol.boundary_defect));
            }
            residuals.push(sol.residual);
        }
        for w in residuals.windows(2) {
            let order = (w[0] / w[1]).log2();
            if !(0.8..=1.2).contains(&order) {
                return Err(format!("seed {seed}: residuals {residuals:?}"));
            }
            orders.push(order);
        }
    }
    let lo = orders.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = orders.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    Ok(format!("observed order in [{lo:.3}, {hi:.3}]"))
}

fn truncation() -> Outcome {
    let radii = [0.25, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0];
    let mut minimal = Vec::new();
    for seed in 0..10 {
        let (d, k) = generators::truncation_pair(4000 + seed, 6).map_err(err)?;
        let report = perturbation_truncation_check(&d, &k, &radii, 200).map_err(err)?;
        let r = report.minimal_radius.ok_or(format!("seed {seed}: no radius passes"))?;
        if let Some(e) = report.entries.iter().find(|e| !e.agrees()) {
            return Err(format!("seed {seed}: R = {} index {:?} crossing {:?}", e.radius, e.index, e.crossing));
        }
        minimal.push(r);
    }
    Ok(format!("minimal radii {minimal:?}"))
}

struct Criterion {
    id: u32,
    name: &'static str,
    budget: Option<Duration>,
    run: fn() -> Outcome,
}

fn main() -> ExitCode {
    let secs = |s| Some(Duration::from_secs(s));
    let criteria = [
        Criterion { id: 1, name: "engine agreement", budget: secs(60), run: engine_agreement },
        Criterion { id: 2, name: "index = flow", budget: secs(120), run: index_equals_flow },
        Criterion { id: 3, name: "single crossing", budget: None, run: single_crossing },
        Criterion { id: 4, name: "involution-block paths", budget: None, run: involution_paths },
        Criterion { id: 5, name: "frequency path", budget: secs(5), run: frequency_path },
        Criterion { id: 6, name: "circle signature", budget: secs(90), run: circle_signature },
        Criterion { id: 7, name: "heat-kernel estimate", budget: None, run: cg_estimate },
        Criterion { id: 8, name: "structural properties", budget: None, run: structural },
        Criterion { id: 9, name: "half-line inverse", budget: None, run: halfline_inverse },
        Criterion { id: 10, name: "truncation check", budget: None, run: truncation },
    ];
    let mut failed = 0;
    for c in &criteria {
        let start = Instant::now();
        let outcome = (c.run)();
        let elapsed = start.elapsed();
        let outcome = match (outcome, c.budget) {
            (Ok(_), Some(b)) if elapsed > b => Err(format!("over budget ({:.1} s > {} s)", elapsed.as_secs_f64(), b.as_secs())),
            (o, _) => o,
        };
        let (tag, detail) = match &outcome {
            Ok(d) => ("PASS", d.as_str()),
            Err(d) => ("FAIL", d.as_str()),
        };
        if outcome.is_err() {
            failed += 1;
        }
        println!("{tag} {:>2} {:<24} {:>8.2} s  {detail}", c.id, c.name, elapsed.as_secs_f64());
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
