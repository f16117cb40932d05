use std::f64::consts::{FRAC_PI_2, PI};

use rayon::prelude::*;
use serde::Serialize;

use super::grid::{Domain, Grid2D, NodeKind};
use super::scheme::Scheme;
use super::solver::{maxima, solve, SolveOptions};
use super::stencil::Stencil;
use crate::capacity::{rho_and_k, KernelParams};
use crate::radial::{alpha_star, counterexample_b, mp_constant, ModelParams, ProfileKind, RadialProfile};
use crate::{Error, Result};

#[derive(Clone, Debug, Serialize)]
pub struct CounterexampleGridReport {
    pub eps: f64,
    pub lambda: f64,
    pub big_lambda: f64,
    pub h: f64,
    pub width: usize,
    pub delta: f64,
    pub b: f64,
    /// `min S_h[u]` over interior nodes for the sampled sine cap.
    pub min_residual: f64,
    pub residual_floor: f64,
    pub interior_max: f64,
    pub boundary_max: f64,
    pub violation_margin: f64,
    pub passed: bool,
}

/// Samples the sine cap on a disk of radius `π/2 + ε/2` and evaluates the
/// scheme with `p = 1` and the critical gradient coefficient.
pub fn counterexample_grid(
    eps: f64,
    lambda: f64,
    big_lambda: f64,
    h: f64,
    width: usize,
) -> Result<CounterexampleGridReport> {
    let profile = RadialProfile::new(ProfileKind::SineCap { eps }, 2)?;
    let delta = FRAC_PI_2 + eps / 2.0;
    let b = counterexample_b(eps, lambda, 1);
    let params = ModelParams {
        b,
        delta,
        ..ModelParams::pure(2, lambda, big_lambda, 1)
    };
    let stencil = Stencil::new(width)?;
    let grid = Grid2D::new(Domain::Disk { radius: delta }, h, &stencil)?;
    let scheme = Scheme::from_params(&grid, &stencil, &params)?;
    let u = grid
        .sample(|x, y| profile.value((x * x + y * y).sqrt()).unwrap_or(f64::NAN))
        .into_iter()
        .enumerate()
        .map(|(k, v)| if grid.kind(k) == NodeKind::Outside { 0.0 } else { v })
        .collect::<Vec<_>>();
    let min_residual = grid
        .interior()
        .par_iter()
        .map(|&k| scheme.eval(&u, k))
        .reduce(|| f64::INFINITY, f64::min);
    let (interior_max, boundary_max) = maxima(&grid, &u);
    let residual_floor = -5.0 * h;
    Ok(CounterexampleGridReport {
        eps,
        lambda,
        big_lambda,
        h,
        width,
        delta,
        b,
        min_residual,
        residual_floor,
        interior_max,
        boundary_max,
        violation_margin: interior_max - boundary_max,
        passed: min_residual >= residual_floor && interior_max > boundary_max,
    })
}

fn probe_nodes(grid: &Grid2D, radius: f64, count: usize) -> Result<Vec<usize>> {
    let mut nodes = Vec::new();
    for i in 0..count {
        let t = 2.0 * PI * i as f64 / count as f64;
        let k = grid
            .nearest(radius * t.cos(), radius * t.sin())
            .filter(|&k| grid.kind(k) == NodeKind::Interior)
            .ok_or_else(|| Error::Parameter(format!("probe radius {radius} is not in the grid interior")))?;
        if !nodes.contains(&k) {
            nodes.push(k);
        }
    }
    Ok(nodes)
}

/// Smooth Dirichlet data used by the experiments.
fn boundary_data(x: f64, y: f64) -> f64 {
    x * x - y * y + 0.5 * x
}

#[derive(Clone, Debug, Serialize)]
pub struct EmpConfig {
    pub params: ModelParams,
    pub h: f64,
    pub width: usize,
    pub f_const: f64,
    /// Value written on the puncture after solving.
    pub spike: f64,
    pub puncture: bool,
    /// Kernel exponent of the blow-up potential.
    pub alpha: f64,
    pub eps_seq: Vec<f64>,
    /// Probe circle radius as a fraction of `δ`.
    pub probe_radius: f64,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for EmpConfig {
    fn default() -> Self {
        Self {
            params: ModelParams::pure(2, 1.0, 1.0, 2),
            h: 1.0 / 32.0,
            width: 1,
            f_const: 0.0,
            spike: 10.0,
            puncture: true,
            alpha: 0.0,
            eps_seq: vec![1.0, 0.1, 0.01],
            probe_radius: 0.5,
            tol: 1e-8,
            max_iter: 1_000_000,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct EmpRow {
    pub eps: f64,
    /// Smallest `F >= 0` with `S_h[w_ε] >= f − F` at every interior node.
    pub forcing: f64,
    pub interior_max_w: f64,
    /// `max_{E'} w_ε` (`w_ε⁺` when `c > 0`).
    pub boundary_max_w: f64,
    pub rhs: f64,
    pub holds: bool,
    /// `max_P (rhs + ε v)`: the bound on `u` implied at the probes.
    pub probe_bound: f64,
    pub probe_holds: bool,
    /// `probe_bound` minus the limiting bound.
    pub slack: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct EmpReport {
    pub config: EmpConfig,
    pub puncture_node: Option<[f64; 2]>,
    pub solve_iterations: usize,
    pub solve_residual: f64,
    pub mp_constant: f64,
    pub k_const: f64,
    pub u_interior_max: f64,
    pub u_probe_max: f64,
    /// `max_{E'} u + C‖f⁻‖` (`u⁺` when `c > 0`).
    pub limit_bound: f64,
    /// The same bound with the puncture counted as boundary.
    pub plain_bound: f64,
    pub limit_bound_holds: bool,
    pub rows: Vec<EmpRow>,
    pub slack_monotone: bool,
    pub passed: bool,
}

/// Perturbation argument on a punctured disk: solve with smooth data, write
/// a spike on one boundary node `E`, then check the discrete bound for
/// `w_ε = u − εV` (with `w_ε = −∞` on `E`) for each `ε`.
pub fn emp_experiment(cfg: &EmpConfig) -> Result<EmpReport> {
    let params = cfg.params;
    params.validate()?;
    if cfg.eps_seq.is_empty() || cfg.eps_seq.iter().any(|e| !(e.is_finite() && *e > 0.0)) {
        return Err(Error::Parameter("eps_seq must hold positive values".into()));
    }
    let delta = params.delta;
    let k_const = if cfg.puncture {
        rho_and_k(params.lambda, params.big_lambda, params.p, cfg.alpha, params.b)?.k
    } else {
        0.0
    };
    let kernel = KernelParams::new(cfg.alpha, delta, 2)?;
    let stencil = Stencil::new(cfg.width)?;
    let mut grid = Grid2D::new(Domain::Disk { radius: delta }, cfg.h, &stencil)?;
    grid.set_boundary_fn(boundary_data)?;
    let f = vec![cfg.f_const; grid.len()];
    let rep = solve(
        &grid,
        &stencil,
        &params,
        &f,
        &SolveOptions {
            tol: cfg.tol,
            max_iter: cfg.max_iter,
            ..Default::default()
        },
    )?;
    if !rep.converged {
        return Err(Error::NotConverged(format!(
            "base solve stopped at residual {} after {} iterations",
            rep.residual_inf_norm, rep.iterations
        )));
    }
    let mut u = rep.values;
    let puncture = if cfg.puncture {
        let e = grid
            .nearest_of_kind(0.0, delta, NodeKind::Boundary)
            .ok_or_else(|| Error::Input("no boundary node for the puncture".into()))?;
        u[e] = cfg.spike;
        Some(e)
    } else {
        None
    };
    let (xe, ye) = puncture.map_or((f64::NAN, f64::NAN), |e| grid.coords(e));
    let v: Vec<f64> = (0..grid.len())
        .map(|k| match puncture {
            None => 0.0,
            Some(e) if k == e => f64::INFINITY,
            Some(_) => {
                let (x, y) = grid.coords(k);
                let r = ((x - xe).powi(2) + (y - ye).powi(2)).sqrt();
                kernel.profile(r)
            }
        })
        .collect();

    let c_const = mp_constant(&params)?.value;
    let positive = params.c > 0.0;
    let clip = |m: f64| if positive { m.max(0.0) } else { m };
    let f_minus = grid.interior().iter().fold(0.0f64, |m, &k| m.max(-f[k]));
    let e_prime_max = |w: &[f64]| {
        grid.boundary_nodes()
            .filter(|&k| Some(k) != puncture)
            .fold(f64::NEG_INFINITY, |m, k| m.max(w[k]))
    };
    let probes = probe_nodes(&grid, cfg.probe_radius * delta, 16)?;
    let limit_bound = clip(e_prime_max(&u)) + c_const * f_minus;
    let (u_interior_max, u_boundary_max) = maxima(&grid, &u);
    let u_probe_max = probes.iter().fold(f64::NEG_INFINITY, |m, &k| m.max(u[k]));
    let scheme = Scheme::from_params(&grid, &stencil, &params)?;

    let mut rows = Vec::new();
    for &eps in &cfg.eps_seq {
        let w: Vec<f64> = u
            .iter()
            .zip(&v)
            .map(|(a, b)| if b.is_infinite() { f64::NEG_INFINITY } else { a - eps * b })
            .collect();
        let forcing = grid
            .interior()
            .par_iter()
            .map(|&k| f[k] - scheme.eval(&w, k))
            .reduce(|| 0.0, f64::max);
        let forced_minus = grid.interior().iter().fold(0.0f64, |m, &k| m.max(forcing - f[k]));
        let boundary_max_w = clip(e_prime_max(&w));
        let rhs = boundary_max_w + c_const * forced_minus;
        let (interior_max_w, _) = maxima(&grid, &w);
        let scale = 1e-12 * (1.0 + rhs.abs() + interior_max_w.abs());
        let probe_bound = probes.iter().fold(f64::NEG_INFINITY, |m, &k| m.max(rhs + eps * v[k]));
        rows.push(EmpRow {
            eps,
            forcing,
            interior_max_w,
            boundary_max_w,
            rhs,
            holds: interior_max_w <= rhs + scale,
            probe_bound,
            probe_holds: probes.iter().all(|&k| u[k] <= rhs + eps * v[k] + scale),
            slack: probe_bound - limit_bound,
        });
    }
    let mut by_eps: Vec<&EmpRow> = rows.iter().collect();
    by_eps.sort_by(|a, b| b.eps.total_cmp(&a.eps));
    let slack_monotone = by_eps.windows(2).all(|p| p[1].slack <= p[0].slack + 1e-12);
    let limit_bound_holds = u_interior_max <= limit_bound + cfg.tol;
    let passed = slack_monotone && limit_bound_holds && rows.iter().all(|r| r.holds && r.probe_holds);
    Ok(EmpReport {
        config: cfg.clone(),
        puncture_node: puncture.map(|_| [xe, ye]),
        solve_iterations: rep.iterations,
        solve_residual: rep.residual_inf_norm,
        mp_constant: c_const,
        k_const,
        u_interior_max,
        u_probe_max,
        limit_bound,
        plain_bound: clip(u_boundary_max) + c_const * f_minus,
        limit_bound_holds,
        rows,
        slack_monotone,
        passed,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct RemovabilityConfig {
    pub params: ModelParams,
    pub h: f64,
    pub width: usize,
    pub f_const: f64,
    pub inner_radii: Vec<f64>,
    /// Constant added to the frozen inner data.
    pub perturbation: f64,
    /// Coarse grid spacing is `coarse_factor · h`.
    pub coarse_factor: usize,
    pub probe_radius: f64,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for RemovabilityConfig {
    fn default() -> Self {
        Self {
            params: ModelParams::pure(2, 1.0, 1.0, 2),
            h: 1.0 / 32.0,
            width: 1,
            f_const: 0.0,
            inner_radii: vec![0.2, 0.1, 0.05, 0.025],
            perturbation: 0.1,
            coarse_factor: 4,
            probe_radius: 0.5,
            tol: 1e-7,
            max_iter: 1_000_000,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct RemovabilityRow {
    pub r_in: f64,
    pub inner_nodes: usize,
    pub probe_error: f64,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct RemovabilityReport {
    pub config: RemovabilityConfig,
    pub alpha_star: f64,
    pub disk_iterations: usize,
    pub rows: Vec<RemovabilityRow>,
    pub decreasing: bool,
    /// `5h`, the allowance for the error at the smallest hole.
    pub final_error_bound: f64,
    pub final_within_bound: bool,
    pub passed: bool,
}

/// Solves on annuli `r_in < |x| < δ` whose inner data is a perturbed coarse
/// disk solution and compares with the disk solution at fixed probes.
pub fn removability_experiment(cfg: &RemovabilityConfig) -> Result<RemovabilityReport> {
    let params = cfg.params;
    params.validate()?;
    let a_star = alpha_star(params.lambda, params.big_lambda, params.p);
    if a_star < -1e-12 {
        return Err(Error::Parameter(format!(
            "α* = {a_star} < 0: a point is not of zero capacity, removability is not asserted"
        )));
    }
    if cfg.coarse_factor == 0 {
        return Err(Error::Parameter("coarse_factor must be at least 1".into()));
    }
    let delta = params.delta;
    if cfg.inner_radii.is_empty() || cfg.inner_radii.iter().any(|&r| !(r > 0.0 && r < cfg.probe_radius * delta)) {
        return Err(Error::Parameter(format!(
            "inner radii must lie in (0, {})",
            cfg.probe_radius * delta
        )));
    }
    let stencil = Stencil::new(cfg.width)?;
    let opts = SolveOptions {
        tol: cfg.tol,
        max_iter: cfg.max_iter,
        ..Default::default()
    };
    let disk_solve = |h: f64| -> Result<(Grid2D, Vec<f64>, usize)> {
        let mut grid = Grid2D::new(Domain::Disk { radius: delta }, h, &stencil)?;
        grid.set_boundary_fn(boundary_data)?;
        let f = vec![cfg.f_const; grid.len()];
        let rep = solve(&grid, &stencil, &params, &f, &opts)?;
        if !rep.converged {
            return Err(Error::NotConverged(format!("disk solve at h = {h} did not converge")));
        }
        Ok((grid, rep.values, rep.iterations))
    };
    let (fine, u_disk, disk_iterations) = disk_solve(cfg.h)?;
    let (coarse, u_coarse, _) = disk_solve(cfg.h * cfg.coarse_factor as f64)?;
    let probes = probe_nodes(&fine, cfg.probe_radius * delta, 16)?;

    let mut rows = Vec::new();
    for &r_in in &cfg.inner_radii {
        let mut grid = Grid2D::new(Domain::Annulus { r_in, r_out: delta }, cfg.h, &stencil)?;
        if grid.len() != fine.len() || grid.nx() != fine.nx() {
            return Err(Error::Dimension("annulus and disk lattices differ".into()));
        }
        let split = 0.5 * (r_in + delta);
        let mut inner_nodes = 0;
        let nodes: Vec<usize> = grid.boundary_nodes().collect();
        for k in nodes {
            let (x, y) = grid.coords(k);
            let value = if (x * x + y * y).sqrt() < split {
                inner_nodes += 1;
                coarse.interpolate(&u_coarse, x, y)? + cfg.perturbation
            } else {
                boundary_data(x, y)
            };
            grid.set_boundary_value(k, value)?;
        }
        if probes.iter().any(|&k| grid.kind(k) != NodeKind::Interior) {
            return Err(Error::Parameter(format!("probes are not interior for r_in = {r_in}")));
        }
        let f = vec![cfg.f_const; grid.len()];
        let rep = solve(
            &grid,
            &stencil,
            &params,
            &f,
            &SolveOptions {
                initial: Some(u_disk.clone()),
                ..opts.clone()
            },
        )?;
        let probe_error = probes
            .iter()
            .fold(0.0f64, |m, &k| m.max((rep.values[k] - u_disk[k]).abs()));
        rows.push(RemovabilityRow {
            r_in,
            inner_nodes,
            probe_error,
            iterations: rep.iterations,
            converged: rep.converged,
        });
    }
    let mut by_radius: Vec<&RemovabilityRow> = rows.iter().collect();
    by_radius.sort_by(|a, b| b.r_in.total_cmp(&a.r_in));
    let decreasing = by_radius.windows(2).all(|p| p[1].probe_error < p[0].probe_error);
    let final_error_bound = 5.0 * cfg.h;
    let final_within_bound = by_radius.last().is_some_and(|r| r.probe_error <= final_error_bound);
    let passed = decreasing && final_within_bound && rows.iter().all(|r| r.converged);
    Ok(RemovabilityReport {
        config: cfg.clone(),
        alpha_star: a_star,
        disk_iterations,
        rows,
        decreasing,
        final_error_bound,
        final_within_bound,
        passed,
    })
}
