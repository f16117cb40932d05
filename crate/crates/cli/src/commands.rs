use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::path::Path;

use pucci_core::capacity::{
    capacity_from_value, equilibrium_measure, potential_supersolution_residual, rho_and_k, DiscreteMeasure,
    KernelParams, SetSpec,
};
use pucci_core::fd::{
    counterexample_grid, emp_experiment, removability_experiment, solve, Domain, EmpConfig, Grid2D,
    RemovabilityConfig, SolveOptions, Stencil, FIELD_HEADER,
};
use pucci_core::io::Cell;
use pucci_core::properties::{check_matrix, run_sweep, SweepConfig};
use pucci_core::radial::{
    alpha_star, barrier_c_value, barrier_value_and_residual, counterexample_check, fundamental_residual,
    mp_constant, ModelParams,
};
use pucci_core::{Error, Result, SymMat};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::Resolved;

pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

pub struct Outcome {
    pub report: Value,
    pub passed: bool,
    pub table: Option<Table>,
}

impl Outcome {
    fn new(report: impl Serialize, passed: bool) -> Result<Self> {
        let report = serde_json::to_value(report).map_err(|e| Error::Io(e.to_string()))?;
        Ok(Self {
            report,
            passed,
            table: None,
        })
    }
}

pub const OPS_KEYS: &[&str] = &["samples", "n_min", "n_max", "frames_per_matrix", "tol"];
pub const RADIAL_KEYS: &[&str] = &["eps_list", "radii", "f_minus", "limsup", "tol"];
pub const CAPACITY_KEYS: &[&str] = &["set", "alpha", "n", "d", "n_list", "iterations", "level", "tol"];
pub const POTENTIAL_KEYS: &[&str] = &["n", "lambda", "Lambda", "p", "alpha", "b", "d", "atoms", "points", "tol"];
pub const SOLVE_KEYS: &[&str] = &[
    "lambda",
    "Lambda",
    "p",
    "b",
    "c",
    "delta",
    "h",
    "stencil_width",
    "tol",
    "max_iter",
    "domain",
    "f_const",
    "boundary",
    "eps",
    "allow_unstable",
];
pub const EMP_KEYS: &[&str] = &[
    "lambda",
    "Lambda",
    "p",
    "b",
    "c",
    "delta",
    "h",
    "stencil_width",
    "tol",
    "max_iter",
    "f_const",
    "spike",
    "puncture",
    "alpha",
    "eps_seq",
    "probe_radius",
];
pub const REMOVABILITY_KEYS: &[&str] = &[
    "lambda",
    "Lambda",
    "p",
    "b",
    "c",
    "delta",
    "h",
    "stencil_width",
    "tol",
    "max_iter",
    "f_const",
    "inner_radii",
    "perturbation",
    "coarse_factor",
    "probe_radius",
];

/// Reads a whitespace- or comma-separated dense matrix, one row per line.
pub fn read_matrix(path: &Path) -> Result<SymMat> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let row = line
            .split(|c: char| c.is_whitespace() || c == ',')
            .filter(|t| !t.is_empty())
            .map(|t| {
                t.parse::<f64>()
                    .map_err(|_| Error::Input(format!("line {}: `{t}` is not a number", i + 1)))
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    SymMat::from_rows(&rows)
}

pub fn ops_properties(res: &mut Resolved, seed: u64, matrix: Option<&Path>) -> Result<Outcome> {
    let tol = res.positive("tol", 1e-9)?;
    let report = match matrix {
        Some(path) => {
            res.record("matrix", path.display().to_string());
            check_matrix(&read_matrix(path)?, seed)?
        }
        None => run_sweep(&SweepConfig {
            samples: res.usize("samples", 1000)?,
            n_min: res.usize("n_min", 2)?,
            n_max: res.usize("n_max", 5)?,
            seed,
            frames_per_matrix: res.usize("frames_per_matrix", 8)?,
        })?,
    };
    let passed = report.passed && report.max_violation <= tol;
    Outcome::new(report, passed)
}

#[derive(Serialize)]
struct CaseOutcome<T: Serialize> {
    status: &'static str,
    #[serde(flatten)]
    detail: T,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

fn case<T: Serialize>(ok: bool, detail: T) -> CaseOutcome<T> {
    CaseOutcome {
        status: if ok { "ok" } else { "failed" },
        detail,
        error: None,
    }
}

fn expected_error<T: Serialize>(detail: T, e: Error) -> CaseOutcome<T> {
    CaseOutcome {
        status: "parameter_error",
        detail,
        error: Some(e.to_string()),
    }
}

const FUNDAMENTAL_GRID: [(usize, f64, f64, usize); 8] = [
    (2, 1.0, 1.0, 2),
    (3, 1.0, 1.0, 2),
    (3, 1.0, 1.0, 3),
    (4, 1.0, 2.0, 3),
    (4, 1.0, 1.0, 4),
    (5, 0.5, 1.0, 5),
    (5, 1.0, 1.5, 4),
    (6, 1.0, 2.0, 6),
];

const COUNTEREXAMPLE_GRID: [(f64, f64, usize, usize); 3] = [(1.0, 1.0, 1, 2), (0.5, 2.0, 2, 4), (1.0, 3.0, 1, 3)];

fn barrier_grid(f_minus: f64) -> Vec<ModelParams> {
    let base = |n, l, bl, p, b, c, delta| ModelParams {
        b,
        c,
        delta,
        f_minus_norm: f_minus,
        ..ModelParams::pure(n, l, bl, p)
    };
    vec![
        base(2, 1.0, 1.0, 2, 0.0, 0.0, 1.0),
        base(2, 1.0, 1.0, 2, 1.0, 0.0, 1.0),
        base(3, 0.5, 2.0, 2, 0.4, 0.0, 1.5),
        base(3, 1.0, 1.0, 1, 3.0, 2.0, 1.0),
        base(4, 1.0, 2.0, 3, 0.5, 1.0, 2.0),
    ]
}

pub fn radial_suite(res: &mut Resolved) -> Result<Outcome> {
    let tol = res.positive("tol", 1e-10)?;
    let eps_list = res.f64_list("eps_list", &[0.1, 0.2, PI / 8.0, 0.5, PI / 4.0])?;
    let radii = res.usize("radii", 200)?.max(2);
    let f_minus = res.f64("f_minus", 1.0)?;
    let limsup = res.f64("limsup", 0.25)?;
    let mut passed = true;

    let mut fundamental = Vec::new();
    for &(n, l, bl, p) in &FUNDAMENTAL_GRID {
        let params = ModelParams::pure(n, l, bl, p);
        let a = alpha_star(l, bl, p);
        let mut worst = 0.0f64;
        for k in 0..radii {
            let r = 10f64.powf(-2.0 + 2.0 * k as f64 / (radii - 1) as f64);
            worst = worst.max(fundamental_residual(&params, r)?.abs() * r.powf(a + 2.0));
        }
        let ok = worst <= tol;
        passed &= ok;
        fundamental.push(case(ok, json!({"n": n, "lambda": l, "Lambda": bl, "p": p, "alpha_star": a, "max_scaled_residual": worst})));
    }

    let mut counterexample = Vec::new();
    for &eps in &eps_list {
        for &(l, bl, p, n) in &COUNTEREXAMPLE_GRID {
            let detail = json!({"eps": eps, "lambda": l, "Lambda": bl, "p": p, "n": n});
            let lo = PI / 2.0 - eps / 2.0;
            let hi = PI / 2.0 + eps / 2.0;
            let mut min_slack = f64::INFINITY;
            let mut summary = None;
            let mut error = None;
            for k in 0..radii {
                let t = k as f64 / (radii - 1) as f64;
                match counterexample_check(eps, l, bl, p, n, (lo * (1.0 - t) + hi * t).clamp(lo, hi)) {
                    Ok(rep) => {
                        min_slack = min_slack
                            .min(rep.subsolution_quantity)
                            .min(rep.subsolution_quantity - rep.lower_bound);
                        summary.get_or_insert(rep);
                    }
                    Err(e) => {
                        error = Some(e);
                        break;
                    }
                }
            }
            match (error, summary) {
                (Some(e), _) => counterexample.push(expected_error(detail, e)),
                (None, Some(rep)) => {
                    let ok = min_slack >= -tol && rep.violation_margin > 0.0 && rep.b_delta_over_lambda_p > 1.0;
                    passed &= ok;
                    counterexample.push(case(
                        ok,
                        json!({
                            "eps": eps, "lambda": l, "Lambda": bl, "p": p, "n": n,
                            "b": rep.b,
                            "delta": rep.delta,
                            "b_delta_over_lambda_p": rep.b_delta_over_lambda_p,
                            "interior_max": rep.interior_max,
                            "boundary_max": rep.boundary_max,
                            "violation_margin": rep.violation_margin,
                            "min_subsolution_slack": min_slack,
                        }),
                    ));
                }
                (None, None) => unreachable!("at least two radii are checked"),
            }
        }
    }

    let mut barriers = Vec::new();
    for params in barrier_grid(f_minus) {
        let c_val = mp_constant(&params)?;
        let l_plus = limsup.max(0.0);
        let mut worst = f64::NEG_INFINITY;
        let (mut top, mut edge) = (0.0, 0.0);
        for k in 0..radii {
            let r = params.delta * k as f64 / (radii - 1) as f64;
            let ev = match c_val.eps_hat {
                None => barrier_value_and_residual(&params, r, limsup)?,
                Some(e) => barrier_c_value(&params, e, r, l_plus)?,
            };
            worst = worst.max(ev.residual);
            if k == 0 {
                top = ev.value;
            }
            edge = ev.value;
        }
        let base = if params.c > 0.0 { l_plus } else { limsup };
        let scale = 1.0 + f_minus + base.abs() + c_val.value * f_minus;
        let ok = worst <= tol * scale
            && (top - (base + c_val.value * f_minus)).abs() <= tol * scale
            && edge >= base - tol * scale;
        passed &= ok;
        barriers.push(case(
            ok,
            json!({"params": params, "mp_constant": c_val, "max_residual": worst, "value_at_center": top, "value_at_delta": edge}),
        ));
    }
    let unstable = ModelParams {
        b: 2.0,
        ..ModelParams::pure(2, 1.0, 1.0, 2)
    };
    let branch = match mp_constant(&unstable) {
        Err(e) => expected_error(json!({"params": unstable}), e),
        Ok(_) => {
            passed = false;
            case(false, json!({"params": unstable}))
        }
    };
    Outcome::new(
        json!({
            "fundamental": fundamental,
            "counterexample": counterexample,
            "barriers": barriers,
            "critical_gradient_branch": branch,
            "passed": passed,
        }),
        passed,
    )
}

#[derive(Serialize)]
struct CapacityRow {
    n_atoms: usize,
    v_est: f64,
    capacity: f64,
    gap: f64,
    iterations: usize,
    converged: bool,
    energy_monotone: bool,
}

pub fn capacity_suite(res: &mut Resolved) -> Result<Outcome> {
    let tol = res.positive("tol", 1e-9)?;
    let kind = res.string("set", "segment");
    let alpha = res.f64("alpha", 0.0)?;
    let n = res.usize("n", 2)?;
    let d = res.positive("d", 1.0)?;
    let n_list = res.usize_list("n_list", &[16, 32, 64, 128, 256, 512, 1024])?;
    let iterations = res.usize("iterations", 20_000)?;
    let k = KernelParams::new(alpha, d, n)?;
    let axis = |t: f64| {
        let mut v = vec![0.0; n];
        v[0] = t;
        v
    };
    let set = match kind.as_str() {
        "point" => SetSpec::Point { at: vec![0.0; n] },
        "segment" => SetSpec::Segment {
            a: axis(-0.5 * d),
            b: axis(0.5 * d),
        },
        "circle" => SetSpec::Circle {
            center: vec![0.0; n],
            radius: 0.5 * d,
        },
        "cantor" => SetSpec::Cantor {
            level: res.usize("level", 12)? as u32,
            a: axis(-0.5 * d),
            b: axis(0.5 * d),
        },
        other => {
            return Err(Error::Input(format!(
                "unknown set `{other}` (expected point, segment, circle or cantor)"
            )))
        }
    };
    let mut rows = Vec::new();
    let mut finest = None;
    for &m in &n_list {
        let eq = equilibrium_measure(&set, m, &k, iterations, tol)?;
        rows.push(CapacityRow {
            n_atoms: m,
            v_est: eq.v_est,
            capacity: capacity_from_value(eq.v_est, alpha)?,
            gap: eq.gap,
            iterations: eq.iterations,
            converged: eq.converged,
            energy_monotone: eq.energy_monotone(),
        });
        finest = Some(eq.measure);
    }
    let values: Vec<f64> = rows.iter().map(|r| r.v_est).collect();
    let strictly_increasing = values.windows(2).all(|w| w[1] > w[0]);
    let last_relative_change = match values.as_slice() {
        [.., a, b] => ((b - a) / b).abs(),
        _ => f64::NAN,
    };
    let monotone = rows.iter().all(|r| r.energy_monotone);
    let (signature, passed) = if set.is_finite_set() {
        ("divergent", strictly_increasing && monotone)
    } else {
        ("convergent", last_relative_change < 0.05 && monotone)
    };
    let mut out = Outcome::new(
        json!({
            "set": set,
            "rows": rows,
            "strictly_increasing": strictly_increasing,
            "last_relative_change": last_relative_change,
            "expected_signature": signature,
            "capacity_estimate": rows.last().map(|r| r.capacity),
            "passed": passed,
        }),
        passed,
    )?;
    if let Some(mu) = finest {
        out.table = Some(measure_table(&mu));
    }
    Ok(out)
}

fn measure_table(mu: &DiscreteMeasure) -> Table {
    let dim = mu.dim();
    let mut header: Vec<String> = (0..dim).map(|i| format!("x{i}")).collect();
    header.push("weight".into());
    let rows = mu
        .atoms()
        .iter()
        .zip(mu.weights())
        .map(|(a, &w)| a.iter().map(|&v| Cell::from(v)).chain([Cell::from(w)]).collect())
        .collect();
    Table { header, rows }
}

fn ball_point(rng: &mut ChaCha8Rng, n: usize, radius: f64) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let r2: f64 = v.iter().map(|x| x * x).sum();
        if r2 <= 1.0 {
            return v.into_iter().map(|x| x * radius).collect();
        }
    }
}

pub fn potential_check(res: &mut Resolved, seed: u64) -> Result<Outcome> {
    let tol = res.positive("tol", 1e-8)?;
    let n = res.usize("n", 3)?;
    let params = ModelParams {
        b: res.f64("b", 0.5)?,
        ..ModelParams::pure(n, res.f64("lambda", 1.0)?, res.f64("Lambda", 1.0)?, res.usize("p", 3)?)
    };
    params.validate()?;
    let alpha = res.f64("alpha", 0.5)?;
    let d = res.positive("d", 1.0)?;
    let n_atoms = res.usize("atoms", 100)?;
    let n_points = res.usize("points", 1000)?;
    if n_atoms == 0 || n_points == 0 {
        return Err(Error::Input("atoms and points must be at least 1".into()));
    }
    let k = KernelParams::new(alpha, d, n)?;
    let rk = rho_and_k(params.lambda, params.big_lambda, params.p, alpha, params.b)?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let atoms: Vec<Vec<f64>> = (0..n_atoms).map(|_| ball_point(&mut rng, n, 0.5 * d)).collect();
    let raw: Vec<f64> = (0..n_atoms).map(|_| rng.gen_range(0.1..1.0)).collect();
    let total: f64 = raw.iter().sum();
    let mu = DiscreteMeasure::new(atoms, raw.iter().map(|w| w / total).collect())?;

    let min_sep = 1e-3 * d;
    let mut worst = f64::NEG_INFINITY;
    let mut worst_at = Vec::new();
    let mut max_operator = f64::NEG_INFINITY;
    let mut evaluated = 0;
    while evaluated < n_points {
        let x = ball_point(&mut rng, n, d);
        let near = mu
            .atoms()
            .iter()
            .any(|a| a.iter().zip(&x).map(|(p, q)| (p - q).powi(2)).sum::<f64>().sqrt() < min_sep);
        if near {
            continue;
        }
        let ev = potential_supersolution_residual(&mu, &k, &params, &x)?;
        max_operator = max_operator.max(ev.operator + params.b * ev.gradient_norm);
        if ev.residual > worst {
            worst = ev.residual;
            worst_at = x;
        }
        evaluated += 1;
    }
    let allowance = tol * (1.0 + rk.k);
    let passed = worst <= allowance;
    Outcome::new(
        json!({
            "alpha_star": alpha_star(params.lambda, params.big_lambda, params.p),
            "rho": rk.rho,
            "k": rk.k,
            "points": evaluated,
            "max_operator_plus_gradient": max_operator,
            "max_residual": worst,
            "worst_point": worst_at,
            "allowance": allowance,
            "passed": passed,
        }),
        passed,
    )
}

fn model_from(res: &mut Resolved, p_default: usize) -> Result<ModelParams> {
    let params = ModelParams {
        b: res.f64("b", 0.0)?,
        c: res.f64("c", 0.0)?,
        delta: res.positive("delta", 1.0)?,
        ..ModelParams::pure(2, res.f64("lambda", 1.0)?, res.f64("Lambda", 1.0)?, res.usize("p", p_default)?)
    };
    params.validate()?;
    Ok(params)
}

fn parse_domain(spec: &str, delta: f64) -> Result<Domain> {
    let bad = || Error::Input(format!("domain `{spec}`: expected disk, square or annulus:<r_in>"));
    match spec.split_once(':') {
        None if spec == "disk" => Ok(Domain::Disk { radius: delta }),
        None if spec == "square" => {
            let s = delta * FRAC_1_SQRT_2;
            Ok(Domain::Rectangle {
                x0: -s,
                x1: s,
                y0: -s,
                y1: s,
            })
        }
        Some(("annulus", r)) => {
            let r_in: f64 = r.trim().parse().map_err(|_| bad())?;
            if !(r_in > 0.0 && r_in < delta) {
                return Err(Error::Input(format!("annulus inner radius {r_in} outside (0, δ)")));
            }
            Ok(Domain::Annulus { r_in, r_out: delta })
        }
        _ => Err(bad()),
    }
}

fn boundary_fn(name: &str) -> Result<fn(f64, f64) -> f64> {
    match name {
        "zero" => Ok(|_, _| 0.0),
        "harmonic" => Ok(|x, y| x * x - y * y),
        "linear" => Ok(|x, _| x),
        other => Err(Error::Input(format!(
            "boundary `{other}`: expected zero, harmonic, linear or sine_cap"
        ))),
    }
}

pub fn solve_cmd(res: &mut Resolved) -> Result<Outcome> {
    let boundary = res.string("boundary", "zero");
    if boundary == "sine_cap" {
        return sine_cap_check(res);
    }
    let params = model_from(res, 2)?;
    let h = res.positive("h", 1.0 / 32.0)?;
    let width = res.usize("stencil_width", 1)?;
    let tol = res.positive("tol", 1e-8)?;
    let max_iter = res.usize("max_iter", 1_000_000)?;
    let domain = parse_domain(&res.string("domain", "disk"), params.delta)?;
    let f_const = res.f64("f_const", 0.0)?;
    let allow_unstable = res.bool("allow_unstable", false)?;
    let stencil = Stencil::new(width)?;
    let mut grid = Grid2D::new(domain, h, &stencil)?;
    grid.set_boundary_fn(boundary_fn(&boundary)?)?;
    let f = vec![f_const; grid.len()];
    let rep = solve(
        &grid,
        &stencil,
        &params,
        &f,
        &SolveOptions {
            tol,
            max_iter,
            allow_unstable,
            initial: None,
        },
    )?;
    let slack = rep.mp_constant.map_or(0.0, |c| c * tol) + 1e-12 * (1.0 + rep.boundary_max.abs());
    let bound_holds = rep.mp_bound_holds(slack);
    let passed = rep.converged && bound_holds != Some(false);
    let table = Table {
        header: FIELD_HEADER.iter().map(|s| s.to_string()).collect(),
        rows: grid.field_rows(&rep.values),
    };
    let mut out = Outcome::new(
        json!({
            "mode": "solve",
            "solve": rep,
            "nodes": grid.interior().len(),
            "mp_bound_slack": slack,
            "mp_bound_holds": bound_holds,
            "passed": passed,
        }),
        passed,
    )?;
    out.table = Some(table);
    Ok(out)
}

/// Samples the counterexample profile and checks the discrete subsolution
/// property instead of iterating, since the regime has no maximum principle.
fn sine_cap_check(res: &mut Resolved) -> Result<Outcome> {
    for key in ["b", "delta", "c", "f_const", "domain", "allow_unstable", "max_iter"] {
        if res.is_set(key) {
            return Err(Error::Input(format!("key `{key}` is fixed by boundary = sine_cap")));
        }
    }
    let p = res.usize("p", 1)?;
    if p != 1 {
        return Err(Error::Input(format!("boundary = sine_cap needs p = 1 in the plane, got p = {p}")));
    }
    let lambda = res.f64("lambda", 1.0)?;
    let big_lambda = res.f64("Lambda", 1.0)?;
    let eps = res.f64("eps", PI / 8.0)?;
    let h = res.positive("h", 1.0 / 32.0)?;
    let width = res.usize("stencil_width", 3)?;
    res.f64("tol", 1e-8)?;
    let rep = counterexample_grid(eps, lambda, big_lambda, h, width)?;
    res.record("b", rep.b);
    res.record("delta", rep.delta);
    res.record("domain", "disk");
    let stencil = Stencil::new(width)?;
    let grid = Grid2D::new(Domain::Disk { radius: rep.delta }, h, &stencil)?;
    let profile = pucci_core::radial::RadialProfile::new(pucci_core::radial::ProfileKind::SineCap { eps }, 2)?;
    let values = grid.sample(|x, y| profile.value((x * x + y * y).sqrt()).unwrap_or(0.0));
    let passed = rep.passed;
    let mut out = Outcome::new(
        json!({
            "mode": "subsolution_check",
            "counterexample": rep,
            "passed": passed,
        }),
        passed,
    )?;
    out.table = Some(Table {
        header: FIELD_HEADER.iter().map(|s| s.to_string()).collect(),
        rows: grid.field_rows(&values),
    });
    Ok(out)
}

pub fn emp(res: &mut Resolved) -> Result<Outcome> {
    let d = EmpConfig::default();
    let mut params = model_from(res, 2)?;
    let f_const = res.f64("f_const", d.f_const)?;
    params.f_minus_norm = (-f_const).max(0.0);
    let cfg = EmpConfig {
        params,
        h: res.positive("h", d.h)?,
        width: res.usize("stencil_width", d.width)?,
        f_const,
        spike: res.f64("spike", d.spike)?,
        puncture: res.bool("puncture", d.puncture)?,
        alpha: res.f64("alpha", d.alpha)?,
        eps_seq: res.f64_list("eps_seq", &d.eps_seq)?,
        probe_radius: res.positive("probe_radius", d.probe_radius)?,
        tol: res.positive("tol", d.tol)?,
        max_iter: res.usize("max_iter", d.max_iter)?,
    };
    let rep = emp_experiment(&cfg)?;
    let passed = rep.passed;
    Outcome::new(rep, passed)
}

pub fn removability(res: &mut Resolved) -> Result<Outcome> {
    let d = RemovabilityConfig::default();
    let mut params = model_from(res, 2)?;
    let f_const = res.f64("f_const", d.f_const)?;
    params.f_minus_norm = (-f_const).max(0.0);
    let cfg = RemovabilityConfig {
        params,
        h: res.positive("h", d.h)?,
        width: res.usize("stencil_width", d.width)?,
        f_const,
        inner_radii: res.f64_list("inner_radii", &d.inner_radii)?,
        perturbation: res.f64("perturbation", d.perturbation)?,
        coarse_factor: res.usize("coarse_factor", d.coarse_factor)?,
        probe_radius: res.positive("probe_radius", d.probe_radius)?,
        tol: res.positive("tol", d.tol)?,
        max_iter: res.usize("max_iter", d.max_iter)?,
    };
    let rep = removability_experiment(&cfg)?;
    let passed = rep.passed;
    Outcome::new(rep, passed)
}
