use rayon::prelude::*;
use serde::Serialize;

use super::grid::{Grid2D, NodeKind};
use super::scheme::Scheme;
use super::stencil::Stencil;
use crate::radial::{mp_constant, ModelParams};
use crate::{Error, Result};

#[derive(Clone, Debug)]
pub struct SolveOptions {
    /// Target for `max |S_h[u] − f|` over interior nodes.
    pub tol: f64,
    pub max_iter: usize,
    /// Permit `c = 0` with `bδ >= λp`.
    pub allow_unstable: bool,
    /// Starting interior values; boundary nodes always take the grid data.
    pub initial: Option<Vec<f64>>,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iter: 200_000,
            allow_unstable: false,
            initial: None,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SolveReport {
    #[serde(skip)]
    pub values: Vec<f64>,
    pub residual_inf_norm: f64,
    pub iterations: usize,
    pub converged: bool,
    pub tau: f64,
    pub interior_max: f64,
    pub boundary_max: f64,
    /// `‖f⁻‖_∞` over interior nodes.
    pub f_minus_norm: f64,
    /// The constant `C` of the a priori bound, when the regime admits one.
    pub mp_constant: Option<f64>,
    /// `max_∂ u + C‖f⁻‖` for `c = 0`, `max_∂ u⁺ + C‖f⁻‖` for `c > 0`.
    pub mp_bound_rhs: Option<f64>,
}

impl SolveReport {
    pub fn mp_bound_holds(&self, slack: f64) -> Option<bool> {
        self.mp_bound_rhs.map(|rhs| self.interior_max <= rhs + slack)
    }
}

/// Interior and boundary maxima of a field.
pub(crate) fn maxima(grid: &Grid2D, u: &[f64]) -> (f64, f64) {
    let mut interior = f64::NEG_INFINITY;
    let mut boundary = f64::NEG_INFINITY;
    for (k, &v) in u.iter().enumerate() {
        match grid.kind(k) {
            NodeKind::Interior => interior = interior.max(v),
            NodeKind::Boundary => boundary = boundary.max(v),
            NodeKind::Outside => {}
        }
    }
    (interior, boundary)
}

/// Damped Jacobi iteration `u ← u + τ(S_h[u] − f)` with
/// `τ = h²/(2Λp + bh + ch²)`, which keeps the update monotone.
pub fn solve(grid: &Grid2D, stencil: &Stencil, params: &ModelParams, f: &[f64], opts: &SolveOptions) -> Result<SolveReport> {
    let scheme = Scheme::from_params(grid, stencil, params)?;
    if grid.domain().outer_radius() > params.delta * (1.0 + 1e-12) {
        return Err(Error::Parameter(format!(
            "domain of radius {} does not fit in B_δ with δ = {}",
            grid.domain().outer_radius(),
            params.delta
        )));
    }
    if f.len() != grid.len() {
        return Err(Error::Dimension(format!("f has {} values, grid {} nodes", f.len(), grid.len())));
    }
    if grid.interior().iter().any(|&k| !f[k].is_finite()) {
        return Err(Error::Input("right-hand side must be finite".into()));
    }
    if !(opts.tol.is_finite() && opts.tol > 0.0) {
        return Err(Error::Parameter(format!("tolerance {} must be positive", opts.tol)));
    }
    if params.c == 0.0 && params.margin() <= 0.0 && !opts.allow_unstable {
        return Err(Error::Parameter(format!(
            "c = 0 with bδ >= λp (λp − bδ = {}); opt in to the unstable regime explicitly",
            params.margin()
        )));
    }
    let h = grid.h();
    let tau = h * h / (2.0 * params.big_lambda * params.p as f64 + params.b * h + params.c * h * h);

    let mut u = match &opts.initial {
        Some(init) => {
            if init.len() != grid.len() {
                return Err(Error::Dimension("initial guess does not match the grid".into()));
            }
            init.clone()
        }
        None => vec![0.0; grid.len()],
    };
    for k in 0..grid.len() {
        match grid.kind(k) {
            NodeKind::Boundary => u[k] = grid.boundary_values()[k],
            NodeKind::Outside => u[k] = 0.0,
            NodeKind::Interior => {
                if !u[k].is_finite() {
                    return Err(Error::Input("initial guess must be finite".into()));
                }
            }
        }
    }

    let interior = grid.interior();
    let mut residual;
    let mut iterations = 0;
    loop {
        let updates: Vec<f64> = interior
            .par_iter()
            .with_min_len(512)
            .map(|&k| scheme.eval(&u, k) - f[k])
            .collect();
        residual = updates.iter().fold(0.0f64, |m, r| m.max(r.abs()));
        if !residual.is_finite() {
            return Err(Error::NotConverged(format!("iteration diverged at step {iterations}")));
        }
        if residual <= opts.tol || iterations >= opts.max_iter {
            break;
        }
        for (&k, r) in interior.iter().zip(&updates) {
            u[k] += tau * r;
        }
        iterations += 1;
    }

    let (interior_max, boundary_max) = maxima(grid, &u);
    let f_minus_norm = interior.iter().fold(0.0f64, |m, &k| m.max(-f[k]));
    let constant = mp_constant(&ModelParams {
        f_minus_norm,
        ..*params
    })
    .ok()
    .map(|c| c.value);
    let base = if params.c > 0.0 { boundary_max.max(0.0) } else { boundary_max };
    Ok(SolveReport {
        values: u,
        residual_inf_norm: residual,
        iterations,
        converged: residual <= opts.tol,
        tau,
        interior_max,
        boundary_max,
        f_minus_norm,
        mp_constant: constant,
        mp_bound_rhs: constant.map(|c| base + c * f_minus_norm),
    })
}
