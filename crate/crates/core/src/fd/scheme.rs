use super::grid::{Grid2D, NodeKind};
use super::stencil::Stencil;
use crate::pucci::Ellipticity;
use crate::radial::ModelParams;
use crate::{Error, Result};

/// Precomputed stencil geometry and coefficients of
/// `S_h[u] = P⁺_h[u] + b G_h[u] − c u`.
#[derive(Clone, Debug)]
pub(crate) struct Scheme {
    /// `(offset, 1/(|v|h)²)` per direction.
    dirs: Vec<(isize, f64)>,
    perp: Vec<usize>,
    /// `(offset, 1/(|v|h))` per arm.
    arms: Vec<(isize, f64)>,
    ell: Ellipticity,
    b: f64,
    c: f64,
}

impl Scheme {
    pub(crate) fn new(grid: &Grid2D, stencil: &Stencil, ell: Ellipticity, b: f64, c: f64) -> Result<Self> {
        if stencil.width() > grid.reach() {
            return Err(Error::Parameter(format!(
                "stencil width {} exceeds the grid's boundary layer {}",
                stencil.width(),
                grid.reach()
            )));
        }
        if !(1..=2).contains(&ell.p()) {
            return Err(Error::Parameter(format!("planar scheme needs p in {{1, 2}}, got {}", ell.p())));
        }
        let h = grid.h();
        let len = |(a, b): (i32, i32)| ((a * a + b * b) as f64).sqrt() * h;
        Ok(Self {
            dirs: stencil
                .directions()
                .iter()
                .map(|&v| (grid.offset(v), 1.0 / (len(v) * len(v))))
                .collect(),
            perp: stencil.perp().to_vec(),
            arms: stencil.arms().iter().map(|&v| (grid.offset(v), 1.0 / len(v))).collect(),
            ell,
            b,
            c,
        })
    }

    pub(crate) fn from_params(grid: &Grid2D, stencil: &Stencil, params: &ModelParams) -> Result<Self> {
        params.validate()?;
        if params.n != 2 {
            return Err(Error::Dimension(format!("the grid solver is planar, got n = {}", params.n)));
        }
        Self::new(grid, stencil, params.ellipticity()?, params.b, params.c)
    }

    #[inline]
    fn second_diff(&self, u: &[f64], k: usize, d: usize) -> f64 {
        let (off, w) = self.dirs[d];
        let (kp, km) = ((k as isize + off) as usize, (k as isize - off) as usize);
        (u[kp] - 2.0 * u[k] + u[km]) * w
    }

    #[inline]
    pub(crate) fn pucci(&self, u: &[f64], k: usize) -> f64 {
        let mut best = f64::NEG_INFINITY;
        if self.ell.p() == 1 {
            for d in 0..self.dirs.len() {
                best = best.max(self.ell.weight_plus(self.second_diff(u, k, d)));
            }
        } else {
            for d in 0..self.dirs.len() {
                let v = self.ell.weight_plus(self.second_diff(u, k, d))
                    + self.ell.weight_plus(self.second_diff(u, k, self.perp[d]));
                best = best.max(v);
            }
        }
        best
    }

    #[inline]
    pub(crate) fn gradient(&self, u: &[f64], k: usize) -> f64 {
        let mut best = 0.0f64;
        for &(off, w) in &self.arms {
            best = best.max((u[(k as isize + off) as usize] - u[k]) * w);
        }
        best
    }

    #[inline]
    pub(crate) fn eval(&self, u: &[f64], k: usize) -> f64 {
        let mut s = self.pucci(u, k);
        if self.b != 0.0 {
            s += self.b * self.gradient(u, k);
        }
        if self.c != 0.0 {
            s -= self.c * u[k];
        }
        s
    }
}

fn check_node(grid: &Grid2D, u: &[f64], node: usize) -> Result<()> {
    if u.len() != grid.len() {
        return Err(Error::Dimension(format!("field has {} values, grid {} nodes", u.len(), grid.len())));
    }
    if grid.kind(node) != NodeKind::Interior {
        return Err(Error::Input(format!("node {node} is not interior")));
    }
    Ok(())
}

/// `(u(x + vh) − 2u(x) + u(x − vh)) / (|v|h)²`.
pub fn directional_second_diff(grid: &Grid2D, u: &[f64], node: usize, arm: (i32, i32)) -> Result<f64> {
    if u.len() != grid.len() || node >= grid.len() {
        return Err(Error::Dimension("node or field outside the grid".into()));
    }
    let off = grid.offset(arm);
    let (kp, km) = (node as isize + off, node as isize - off);
    let valid = |k: isize| k >= 0 && (k as usize) < grid.len() && grid.kind(k as usize) != NodeKind::Outside;
    if arm == (0, 0) || !valid(kp) || !valid(km) || grid.kind(node) == NodeKind::Outside {
        return Err(Error::Input(format!("arm {arm:?} leaves the domain at node {node}")));
    }
    let l2 = ((arm.0 * arm.0 + arm.1 * arm.1) as f64) * grid.h() * grid.h();
    Ok((u[kp as usize] - 2.0 * u[node] + u[km as usize]) / l2)
}

/// Discrete maximal operator: the best frame of lattice directions
/// (one arm for `p = 1`, an orthogonal pair for `p = 2`).
pub fn discrete_pucci_plus(grid: &Grid2D, u: &[f64], node: usize, ell: &Ellipticity, stencil: &Stencil) -> Result<f64> {
    check_node(grid, u, node)?;
    Ok(Scheme::new(grid, stencil, *ell, 0.0, 0.0)?.pucci(u, node))
}

/// Upwind `|Du|`: `max(0, max_v (u(x + vh) − u(x)) / (|v|h))`.
pub fn discrete_gradient_norm(grid: &Grid2D, u: &[f64], node: usize, stencil: &Stencil) -> Result<f64> {
    check_node(grid, u, node)?;
    let ell = Ellipticity::new(1.0, 1.0, 1)?;
    Ok(Scheme::new(grid, stencil, ell, 1.0, 0.0)?.gradient(u, node))
}

/// `S_h[u](x) = P⁺_h[u] + b G_h[u] − c u(x)`.
pub fn scheme_value(grid: &Grid2D, stencil: &Stencil, params: &ModelParams, u: &[f64], node: usize) -> Result<f64> {
    check_node(grid, u, node)?;
    Ok(Scheme::from_params(grid, stencil, params)?.eval(u, node))
}
