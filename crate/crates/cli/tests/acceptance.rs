//! Acceptance checks, one line per criterion. Run with
//! `cargo test -p pucci-cli --test acceptance`.

use std::f64::consts::{FRAC_PI_2, PI};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use pucci_core::capacity::{equilibrium_measure, potential_supersolution_residual, DiscreteMeasure, KernelParams, SetSpec};
use pucci_core::fd::{
    counterexample_grid, emp_experiment, removability_experiment, solve, Domain, EmpConfig, Grid2D,
    RemovabilityConfig, SolveOptions, Stencil,
};
use pucci_core::linalg::random_symmetric;
use pucci_core::properties::{run_sweep, SweepConfig};
use pucci_core::pucci::{
    check_inclusions, maximizing_frame, minimizing_frame, pucci_plus_p, pucci_plus_w, random_frames, sampled_inf,
    Ellipticity,
};
use pucci_core::radial::{counterexample_check, fundamental_residual, ModelParams};
use pucci_core::SymMat;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn operator_properties() -> Check {
    let start = Instant::now();
    let rep = run_sweep(&SweepConfig {
        samples: 10_000,
        n_min: 2,
        n_max: 6,
        seed: 7,
        frames_per_matrix: 4,
    })
    .map_err(|e| e.to_string())?;
    let secs = start.elapsed().as_secs_f64();
    for name in [
        "duality",
        "positive_homogeneity",
        "subadditivity_chain",
        "superadditivity_chain",
        "ellipticity_interval_monotonicity",
        "degenerate_ellipticity",
    ] {
        let p = rep
            .properties
            .iter()
            .find(|p| p.name == name)
            .ok_or_else(|| format!("property {name} missing"))?;
        ensure(p.checks == 10_000, || format!("{name} checked {} times", p.checks))?;
    }
    ensure(rep.passed && rep.max_violation <= 1e-9, || {
        format!("max violation {:e}, offender {:?}", rep.max_violation, rep.offender)
    })?;
    ensure(secs < 30.0, || format!("took {secs:.1} s"))?;
    Ok(format!("10^4 matrices, max violation {:.2e}, {secs:.1} s", rep.max_violation))
}

fn representation() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut attain = 0.0f64;
    let mut excess = f64::NEG_INFINITY;
    for i in 0..1000 {
        let n = rng.gen_range(2..=5);
        let p = rng.gen_range(1..=n);
        let ell = Ellipticity::new(rng.gen_range(0.2..1.5), rng.gen_range(1.5..4.0), p).unwrap();
        let x = random_symmetric(n, &mut rng);
        let top = pucci_plus_p(&x, &ell).unwrap();
        let w = maximizing_frame(&x, p).unwrap();
        attain = attain.max((pucci_plus_w(&x, &w, &ell).unwrap() - top).abs());
        for f in random_frames(n, p, 1000 + i).take(1000) {
            excess = excess.max(pucci_plus_w(&x, &f, &ell).unwrap() - top);
        }
    }
    ensure(attain <= 1e-10, || format!("attainment error {attain:e}"))?;
    ensure(excess <= 1e-10, || format!("a random frame exceeded the maximum by {excess:e}"))?;

    // diag(1, 2, −1, −3), λ = 1, Λ = 2, p = 2: bottom eigenvalues −3, −1.
    let x = SymMat::diag(&[1.0, 2.0, -1.0, -3.0]);
    let (l, bl) = (1.0, 2.0);
    let ell = Ellipticity::new(l, bl, 2).unwrap();
    let dual = l * 0.0 - bl * (3.0 + 1.0);
    let displayed = bl * 0.0 - l * (3.0 + 1.0);
    let random_only = sampled_inf(&x, &ell, random_frames(4, 2, 5).take(1000)).unwrap();
    let with_min = sampled_inf(
        &x,
        &ell,
        random_frames(4, 2, 5).take(1000).chain([minimizing_frame(&x, 2).unwrap()]),
    )
    .unwrap();
    ensure((with_min - dual).abs() <= 1e-10, || format!("inf {with_min} vs dual formula {dual}"))?;
    ensure(random_only >= dual - 1e-10, || format!("sampled inf {random_only} below {dual}"))?;
    let margin = displayed - random_only;
    ensure(margin >= 1e-6, || format!("displayed variant not refuted, margin {margin:e}"))?;
    Ok(format!(
        "attainment {attain:.1e}, max excess {excess:.1e}; inf {with_min} = dual {dual}, displayed {displayed} refuted by {margin:.3}"
    ))
}

fn inclusions() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(26);
    let mut violations = 0;
    let mut worst = 0.0f64;
    for _ in 0..10_000 {
        let x = random_symmetric(4, &mut rng);
        let p = rng.gen_range(1..=3);
        let l = rng.gen_range(0.1..2.0);
        let bl = l + rng.gen_range(0.0..3.0);
        let rep = check_inclusions(&x, l, bl, p).unwrap();
        worst = worst.max(rep.max_violation());
        if !rep.holds(1e-10) {
            violations += 1;
        }
    }
    ensure(violations == 0, || format!("{violations} violations, worst {worst:e}"))?;
    Ok(format!("10^4 matrices, 0 violations, worst {worst:.1e}"))
}

fn fundamental_solutions() -> Check {
    let mut triples = Vec::new();
    'outer: for n in 2..=8usize {
        for p in 2..=n {
            for ratio in [1.0, 0.75, 0.5] {
                let (l, bl) = (ratio, 1.0);
                let a = l / bl * (p as f64 - 1.0) - 1.0;
                if a >= -1e-15 {
                    triples.push((n, l, bl, p, a));
                }
                if triples.len() == 20 {
                    break 'outer;
                }
            }
        }
    }
    ensure(triples.iter().filter(|t| t.4.abs() < 1e-15).count() >= 2, || "no log case".into())?;
    let mut worst = 0.0f64;
    for &(n, l, bl, p, a) in &triples {
        let params = ModelParams::pure(n, l, bl, p);
        for k in 0..100 {
            let r = 10f64.powf(-2.0 + 3.0 * k as f64 / 99.0);
            let res = fundamental_residual(&params, r).map_err(|e| e.to_string())?;
            let scaled = res.abs() / r.powf(-a - 2.0);
            worst = worst.max(scaled);
        }
    }
    ensure(worst <= 1e-10, || format!("scaled residual {worst:e}"))?;
    Ok(format!("{} triples x 100 radii, max scaled residual {worst:.1e}", triples.len()))
}

fn counterexample() -> Check {
    let eps = PI / 8.0;
    let delta = FRAC_PI_2 + eps / 2.0;
    let closed_margin = 1.0 - (PI / 16.0).cos();
    ensure(closed_margin >= 0.019, || format!("closed-form margin {closed_margin}"))?;
    let mut min_slack = f64::INFINITY;
    for (l, bl, p, n) in [(1.0, 1.0, 1, 2), (0.5, 2.0, 2, 3)] {
        for k in 0..1000 {
            let t = k as f64 / 999.0;
            let r = ((FRAC_PI_2 - eps / 2.0) * (1.0 - t) + delta * t).clamp(FRAC_PI_2 - eps / 2.0, delta);
            let rep = counterexample_check(eps, l, bl, p, n, r).map_err(|e| e.to_string())?;
            ensure((rep.violation_margin - closed_margin).abs() <= 1e-15, || {
                format!("margin {} vs {closed_margin}", rep.violation_margin)
            })?;
            ensure(
                (rep.b_delta_over_lambda_p - delta / (delta - eps)).abs() <= 1e-14,
                || format!("bδ/(λp) = {}", rep.b_delta_over_lambda_p),
            )?;
            ensure(rep.subsolution_holds(1e-12), || format!("subsolution fails at r = {r}"))?;
            min_slack = min_slack.min(rep.subsolution_quantity);
        }
    }
    ensure(delta / (delta - eps) > 1.0, || "ratio not above 1".into())?;
    let h = 1.0 / 64.0;
    let grid = counterexample_grid(eps, 1.0, 1.0, h, 3).map_err(|e| e.to_string())?;
    ensure(grid.min_residual >= -5.0 * h, || format!("grid residual {}", grid.min_residual))?;
    ensure(grid.interior_max > grid.boundary_max, || "grid shows no violation".into())?;
    Ok(format!(
        "margin {closed_margin:.5}, bδ/(λp) = {:.4}, grid min S_h = {:.4} >= {:.4}",
        delta / (delta - eps),
        grid.min_residual,
        -5.0 * h
    ))
}

fn mp_constant() -> Check {
    let start = Instant::now();
    let h = 1.0 / 64.0;
    let stencil = Stencil::new(1).unwrap();
    let grid = Grid2D::new(Domain::Disk { radius: 1.0 }, h, &stencil).unwrap();
    let f = vec![-1.0; grid.len()];
    let mut lines = Vec::new();
    for b in [0.0, 1.0] {
        let (delta, l, p) = (1.0, 1.0, 2.0);
        let c_closed = delta * delta / (2.0 * (l * p - b * delta));
        let params = ModelParams {
            b,
            ..ModelParams::pure(2, 1.0, 1.0, 2)
        };
        let rep = solve(&grid, &stencil, &params, &f, &SolveOptions::default()).map_err(|e| e.to_string())?;
        ensure(rep.converged, || format!("b = {b}: not converged"))?;
        ensure(rep.mp_constant == Some(c_closed), || format!("C = {:?} vs {c_closed}", rep.mp_constant))?;
        ensure(rep.interior_max <= c_closed + 10.0 * h, || {
            format!("b = {b}: sup u = {} > {}", rep.interior_max, c_closed + 10.0 * h)
        })?;
        lines.push(format!("b={b}: sup u {:.4} <= C {c_closed}", rep.interior_max));
    }
    let secs = start.elapsed().as_secs_f64();
    ensure(secs < 120.0, || format!("took {secs:.1} s"))?;
    Ok(format!("{}, {secs:.1} s", lines.join("; ")))
}

fn kernel_derivatives(atoms: &[Vec<f64>], weights: &[f64], alpha: f64, x: &[f64]) -> (Vec<f64>, SymMat) {
    let n = x.len();
    let mut grad = vec![0.0; n];
    let mut hess = vec![vec![0.0; n]; n];
    for (a, &w) in atoms.iter().zip(weights) {
        let z: Vec<f64> = x.iter().zip(a).map(|(p, q)| p - q).collect();
        let r = z.iter().map(|v| v * v).sum::<f64>().sqrt();
        // g(r) = r^{−α} or −log r; ∇ = g'(r) ẑ, ∇² = g'' ẑẑᵀ + (g'/r)(I − ẑẑᵀ).
        let (g1, g2) = if alpha == 0.0 {
            (-1.0 / r, 1.0 / (r * r))
        } else {
            (-alpha * r.powf(-alpha - 1.0), alpha * (alpha + 1.0) * r.powf(-alpha - 2.0))
        };
        for i in 0..n {
            grad[i] += w * g1 * z[i] / r;
            for j in 0..n {
                let zz = z[i] * z[j] / (r * r);
                let id = if i == j { 1.0 } else { 0.0 };
                hess[i][j] += w * (g2 * zz + g1 / r * (id - zz));
            }
        }
    }
    (grad, SymMat::from_rows(&hess).unwrap())
}

fn supersolution_bound() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(51);
    let cases = [
        (3usize, 1.0, 1.0, 3usize, 0.5, 0.5),
        (3, 1.0, 1.0, 3, 0.0, 0.3),
        (4, 0.8, 1.0, 4, 1.0, 0.2),
        (3, 1.0, 1.0, 3, 1.0, 0.0),
        (2, 1.0, 1.0, 2, 0.0, 0.0),
    ];
    let mut worst = f64::NEG_INFINITY;
    for (n, l, bl, p, alpha, b) in cases {
        let k_closed = if b == 0.0 {
            0.0
        } else {
            let rho: f64 = (l * (p as f64 - 1.0) - bl * (alpha + 1.0)) / b;
            let kron = if alpha == 0.0 { 1.0 } else { 0.0 };
            (alpha + kron) * b / rho.powf(alpha + 1.0)
        };
        let atoms: Vec<Vec<f64>> = (0..100)
            .map(|_| (0..n).map(|_| rng.gen_range(-0.3..0.3)).collect())
            .collect();
        let raw: Vec<f64> = (0..100).map(|_| rng.gen_range(0.1..1.0)).collect();
        let s: f64 = raw.iter().sum();
        let weights: Vec<f64> = raw.iter().map(|w| w / s).collect();
        let mu = DiscreteMeasure::new(atoms.clone(), weights.clone()).unwrap();
        let kernel = KernelParams::new(alpha, 1.0, n).unwrap();
        let params = ModelParams {
            b,
            ..ModelParams::pure(n, l, bl, p)
        };
        let ell = Ellipticity::new(l, bl, p).unwrap();
        let mut count = 0;
        while count < 1000 {
            let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            if atoms.iter().any(|a| a.iter().zip(&x).map(|(p, q)| (p - q).powi(2)).sum::<f64>() < 1e-6) {
                continue;
            }
            let (grad, hess) = kernel_derivatives(&atoms, &weights, alpha, &x);
            let gn = grad.iter().map(|v| v * v).sum::<f64>().sqrt();
            let oracle = pucci_plus_p(&hess, &ell).unwrap() + b * gn;
            let lib = potential_supersolution_residual(&mu, &kernel, &params, &x).map_err(|e| e.to_string())?;
            ensure((lib.k - k_closed).abs() <= 1e-12 * (1.0 + k_closed), || format!("K {} vs {k_closed}", lib.k))?;
            let scale = 1.0 + oracle.abs();
            ensure((lib.residual + lib.k - oracle).abs() <= 1e-9 * scale, || {
                format!("operator {} vs oracle {oracle}", lib.residual + lib.k)
            })?;
            let excess = oracle - k_closed;
            ensure(excess <= 1e-8 * (1.0 + k_closed), || format!("bound exceeded by {excess:e} at {x:?}"))?;
            worst = worst.max(excess);
            count += 1;
        }
    }
    Ok(format!("5 parameter sets x 10^3 points, max P+(D²V)+b|DV| − K = {worst:.3e}"))
}

fn capacity_signatures() -> Check {
    let k = KernelParams::new(0.0, 1.0, 2).unwrap();
    let point = SetSpec::Point { at: vec![0.0, 0.0] };
    let values: Vec<f64> = (4..=10)
        .map(|e| equilibrium_measure(&point, 1 << e, &k, 1000, 1e-12).unwrap().v_est)
        .collect();
    ensure(values.windows(2).all(|w| w[1] > w[0]), || format!("not strictly increasing: {values:?}"))?;
    // Unbounded growth: each halving of the cell adds a fixed increment.
    let incr: Vec<f64> = values.windows(2).map(|w| w[1] - w[0]).collect();
    let spread = incr.iter().cloned().fold(f64::INFINITY, f64::min);
    ensure(spread > 0.1, || format!("increments shrink: {incr:?}"))?;

    let segment = SetSpec::Segment {
        a: vec![-0.5, 0.0],
        b: vec![0.5, 0.0],
    };
    let seg: Vec<f64> = [512usize, 1024]
        .iter()
        .map(|&m| equilibrium_measure(&segment, m, &k, 20_000, 1e-9).unwrap().v_est)
        .collect();
    let change = ((seg[1] - seg[0]) / seg[1]).abs();
    ensure(change < 0.05, || format!("segment relative change {change}"))?;
    // A segment of length L has logarithmic capacity L/4.
    let cap = (-seg[1]).exp() * 2.0;
    Ok(format!(
        "point V_est {:.3} -> {:.3} (min increment {spread:.3}); segment change {change:.2e}, capacity {cap:.4} vs 0.25",
        values[0],
        values[values.len() - 1]
    ))
}

fn emp() -> Check {
    let cfg = EmpConfig::default();
    ensure(cfg.eps_seq == vec![1.0, 0.1, 0.01], || "unexpected eps sequence".into())?;
    let rep = emp_experiment(&cfg).map_err(|e| e.to_string())?;
    let c_closed = 1.0 / (2.0 * 2.0);
    ensure(rep.mp_constant == c_closed, || format!("C = {}", rep.mp_constant))?;
    ensure(rep.rows.iter().all(|r| r.holds && r.probe_holds), || "discrete bound violated".into())?;
    ensure(rep.slack_monotone, || "slack not monotone in ε".into())?;
    ensure(rep.limit_bound_holds, || "limit bound violated".into())?;
    let slacks: Vec<f64> = rep.rows.iter().map(|r| r.slack).collect();
    ensure(slacks.iter().all(|s| *s >= 0.0), || format!("negative slack {slacks:?}"))?;
    let last = slacks[slacks.len() - 1];
    ensure(last <= 0.05 * slacks[0], || format!("slack does not vanish: {slacks:?}"))?;
    ensure(rep.plain_bound > rep.u_interior_max, || "plain bound inconsistent".into())?;
    Ok(format!("slack {:?} at eps {:?}", slacks.iter().map(|s| format!("{s:.4}")).collect::<Vec<_>>(), cfg.eps_seq))
}

fn removability() -> Check {
    let cfg = RemovabilityConfig::default();
    ensure(cfg.inner_radii == vec![0.2, 0.1, 0.05, 0.025], || "unexpected radii".into())?;
    let rep = removability_experiment(&cfg).map_err(|e| e.to_string())?;
    let errs: Vec<f64> = rep.rows.iter().map(|r| r.probe_error).collect();
    ensure(rep.rows.iter().all(|r| r.converged), || "annulus solve did not converge".into())?;
    ensure(errs.windows(2).all(|w| w[1] < w[0]), || format!("not decreasing: {errs:?}"))?;
    let last = errs[errs.len() - 1];
    ensure(last <= 5.0 * cfg.h, || format!("final error {last} > 5h"))?;
    Ok(format!(
        "errors {:?} (h = 1/{})",
        errs.iter().map(|e| format!("{e:.4}")).collect::<Vec<_>>(),
        (1.0 / cfg.h).round()
    ))
}

fn run_cli(args: &[&str], threads: &str, out: &Path) -> Result<(i32, Vec<u8>, Vec<u8>), String> {
    let status = Command::new(env!("CARGO_BIN_EXE_pucci"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env("PUCCI_THREADS", threads)
        .status()
        .map_err(|e| e.to_string())?;
    let json = std::fs::read(out).map_err(|e| e.to_string())?;
    let csv = std::fs::read(out.with_extension("csv")).unwrap_or_default();
    std::fs::remove_file(out).ok();
    std::fs::remove_file(out.with_extension("csv")).ok();
    Ok((status.code().unwrap_or(-1), json, csv))
}

fn determinism() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let out = dir.path().join("report.json");
    let cfg = |name: &str| format!("{}/configs/{name}", env!("CARGO_MANIFEST_DIR"));
    let (mp, ce) = (cfg("mp_disk.cfg"), cfg("counterexample.cfg"));
    let runs: Vec<Vec<&str>> = vec![
        vec!["ops-properties"],
        vec!["radial-suite"],
        vec!["capacity-suite"],
        vec!["potential-check"],
        vec!["solve", "--config", &mp],
        vec!["solve", "--config", &ce],
        vec!["emp"],
        vec!["removability"],
    ];
    for args in &runs {
        let a = run_cli(args, "1", &out)?;
        let b = run_cli(args, "1", &out)?;
        let c = run_cli(args, "4", &out)?;
        ensure(a.0 == 0, || format!("{args:?} exited with {}", a.0))?;
        ensure(a == b, || format!("{args:?} differs between runs"))?;
        ensure(a == c, || format!("{args:?} differs between 1 and 4 threads"))?;
    }
    Ok(format!("{} invocations identical across runs and thread counts", runs.len()))
}

fn main() {
    let criteria: [(&str, fn() -> Check); 11] = [
        ("operator property suite", operator_properties),
        ("representation and attainment", representation),
        ("uniformly elliptic inclusions", inclusions),
        ("fundamental solutions", fundamental_solutions),
        ("maximum principle counterexample", counterexample),
        ("maximum principle constant", mp_constant),
        ("potential supersolution bound", supersolution_bound),
        ("capacity signatures", capacity_signatures),
        ("punctured maximum principle", emp),
        ("removable singularity", removability),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let result = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        match result {
            Ok(detail) => println!("[PASS] {:>2}. {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("[FAIL] {:>2}. {name}: {why}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
