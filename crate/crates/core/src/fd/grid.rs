use serde::Serialize;

use super::stencil::Stencil;
use crate::io::Cell;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Domain {
    Disk { radius: f64 },
    Annulus { r_in: f64, r_out: f64 },
    Rectangle { x0: f64, x1: f64, y0: f64, y1: f64 },
}

impl Domain {
    fn validate(&self) -> Result<()> {
        let ok = match *self {
            Domain::Disk { radius } => radius.is_finite() && radius > 0.0,
            Domain::Annulus { r_in, r_out } => r_in.is_finite() && r_out.is_finite() && 0.0 < r_in && r_in < r_out,
            Domain::Rectangle { x0, x1, y0, y1 } => {
                [x0, x1, y0, y1].iter().all(|v| v.is_finite()) && x0 < x1 && y0 < y1
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Parameter(format!("invalid domain {self:?}")))
        }
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        const SLACK: f64 = 1e-12;
        match *self {
            Domain::Disk { radius } => x * x + y * y <= radius * radius * (1.0 + SLACK),
            Domain::Annulus { r_in, r_out } => {
                let r2 = x * x + y * y;
                r2 >= r_in * r_in * (1.0 - SLACK) && r2 <= r_out * r_out * (1.0 + SLACK)
            }
            Domain::Rectangle { x0, x1, y0, y1 } => {
                let (ex, ey) = (SLACK * (x1 - x0), SLACK * (y1 - y0));
                x >= x0 - ex && x <= x1 + ex && y >= y0 - ey && y <= y1 + ey
            }
        }
    }

    /// Radius of the smallest origin-centred ball containing the domain.
    pub fn outer_radius(&self) -> f64 {
        match *self {
            Domain::Disk { radius } => radius,
            Domain::Annulus { r_out, .. } => r_out,
            Domain::Rectangle { x0, x1, y0, y1 } => {
                let cx = x0.abs().max(x1.abs());
                let cy = y0.abs().max(y1.abs());
                (cx * cx + cy * cy).sqrt()
            }
        }
    }

    fn bounding_box(&self) -> (f64, f64, f64, f64) {
        match *self {
            Domain::Disk { radius: r } | Domain::Annulus { r_out: r, .. } => (-r, r, -r, r),
            Domain::Rectangle { x0, x1, y0, y1 } => (x0, x1, y0, y1),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeKind {
    Interior,
    Boundary,
    Outside,
}

impl NodeKind {
    pub fn label(self) -> &'static str {
        match self {
            NodeKind::Interior => "interior",
            NodeKind::Boundary => "boundary",
            NodeKind::Outside => "outside",
        }
    }
}

/// Uniform lattice over a domain. A node is interior when it and every arm
/// endpoint of the stencil lie in the domain, boundary when it lies in the
/// domain but some arm leaves it.
#[derive(Clone, Debug)]
pub struct Grid2D {
    domain: Domain,
    h: f64,
    nx: usize,
    ny: usize,
    ox: f64,
    oy: f64,
    reach: usize,
    mask: Vec<NodeKind>,
    boundary_values: Vec<f64>,
    interior: Vec<usize>,
}

impl Grid2D {
    pub fn new(domain: Domain, h: f64, stencil: &Stencil) -> Result<Self> {
        domain.validate()?;
        if !(h.is_finite() && h > 0.0) {
            return Err(Error::Parameter(format!("grid spacing {h} must be positive")));
        }
        let reach = stencil.width();
        let (x0, x1, y0, y1) = domain.bounding_box();
        // Lattice aligned with the origin for centred domains, with the
        // lower-left corner otherwise.
        let (ox, oy, nx, ny) = match domain {
            Domain::Rectangle { .. } => {
                let nx = ((x1 - x0) / h + 1e-9).floor() as usize + 1 + 2 * reach;
                let ny = ((y1 - y0) / h + 1e-9).floor() as usize + 1 + 2 * reach;
                (x0 - reach as f64 * h, y0 - reach as f64 * h, nx, ny)
            }
            _ => {
                let half = (x1 / h - 1e-9).ceil() as usize + reach + 1;
                let o = -(half as f64) * h;
                (o, o, 2 * half + 1, 2 * half + 1)
            }
        };
        if nx.saturating_mul(ny) > 50_000_000 {
            return Err(Error::Parameter(format!("grid of {nx}×{ny} nodes is too large")));
        }
        let inside: Vec<bool> = (0..nx * ny)
            .map(|k| domain.contains(ox + (k % nx) as f64 * h, oy + (k / nx) as f64 * h))
            .collect();
        let mut mask = vec![NodeKind::Outside; nx * ny];
        let mut interior = Vec::new();
        for k in 0..nx * ny {
            if !inside[k] {
                continue;
            }
            let (i, j) = ((k % nx) as i64, (k / nx) as i64);
            let all_in = stencil.arms().iter().all(|&(a, b)| {
                let (p, q) = (i + a as i64, j + b as i64);
                p >= 0 && q >= 0 && (p as usize) < nx && (q as usize) < ny && inside[q as usize * nx + p as usize]
            });
            if all_in {
                mask[k] = NodeKind::Interior;
                interior.push(k);
            } else {
                mask[k] = NodeKind::Boundary;
            }
        }
        if interior.is_empty() {
            return Err(Error::Parameter(format!(
                "no interior nodes at h = {h} with stencil width {reach}"
            )));
        }
        Ok(Self {
            domain,
            h,
            nx,
            ny,
            ox,
            oy,
            reach,
            mask,
            boundary_values: vec![0.0; nx * ny],
            interior,
        })
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn len(&self) -> usize {
        self.mask.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mask.is_empty()
    }

    pub fn reach(&self) -> usize {
        self.reach
    }

    pub fn kind(&self, k: usize) -> NodeKind {
        self.mask[k]
    }

    pub fn mask(&self) -> &[NodeKind] {
        &self.mask
    }

    pub fn interior(&self) -> &[usize] {
        &self.interior
    }

    pub fn boundary_nodes(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.mask.len()).filter(|&k| self.mask[k] == NodeKind::Boundary)
    }

    pub fn coords(&self, k: usize) -> (f64, f64) {
        (self.ox + (k % self.nx) as f64 * self.h, self.oy + (k / self.nx) as f64 * self.h)
    }

    /// Index offset of lattice arm `(a, b)`.
    pub fn offset(&self, (a, b): (i32, i32)) -> isize {
        a as isize + b as isize * self.nx as isize
    }

    /// Node whose coordinates are closest to `(x, y)`, if on the lattice.
    pub fn nearest(&self, x: f64, y: f64) -> Option<usize> {
        let i = ((x - self.ox) / self.h).round();
        let j = ((y - self.oy) / self.h).round();
        if i < 0.0 || j < 0.0 || i >= self.nx as f64 || j >= self.ny as f64 {
            return None;
        }
        Some(j as usize * self.nx + i as usize)
    }

    /// Nearest node of the given kind, by exhaustive search.
    pub fn nearest_of_kind(&self, x: f64, y: f64, kind: NodeKind) -> Option<usize> {
        (0..self.mask.len())
            .filter(|&k| self.mask[k] == kind)
            .min_by(|&a, &b| {
                let (ax, ay) = self.coords(a);
                let (bx, by) = self.coords(b);
                let da = (ax - x).powi(2) + (ay - y).powi(2);
                let db = (bx - x).powi(2) + (by - y).powi(2);
                da.total_cmp(&db).then(a.cmp(&b))
            })
    }

    pub fn boundary_values(&self) -> &[f64] {
        &self.boundary_values
    }

    pub fn set_boundary_fn(&mut self, g: impl Fn(f64, f64) -> f64) -> Result<()> {
        for k in 0..self.mask.len() {
            if self.mask[k] == NodeKind::Boundary {
                let (x, y) = self.coords(k);
                let v = g(x, y);
                if !v.is_finite() {
                    return Err(Error::Input(format!("non-finite boundary value at ({x}, {y})")));
                }
                self.boundary_values[k] = v;
            }
        }
        Ok(())
    }

    pub fn set_boundary_value(&mut self, k: usize, v: f64) -> Result<()> {
        if self.mask.get(k) != Some(&NodeKind::Boundary) {
            return Err(Error::Input(format!("node {k} is not a boundary node")));
        }
        if !v.is_finite() {
            return Err(Error::Input("boundary values must be finite".into()));
        }
        self.boundary_values[k] = v;
        Ok(())
    }

    /// Samples `f` at every node.
    pub fn sample(&self, f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
        (0..self.mask.len())
            .map(|k| {
                let (x, y) = self.coords(k);
                f(x, y)
            })
            .collect()
    }

    /// Bilinear interpolation of a nodal field; every corner of the
    /// enclosing cell must lie in the domain.
    pub fn interpolate(&self, values: &[f64], x: f64, y: f64) -> Result<f64> {
        let fx = (x - self.ox) / self.h;
        let fy = (y - self.oy) / self.h;
        let (i, j) = (fx.floor(), fy.floor());
        if i < 0.0 || j < 0.0 || i + 1.0 >= self.nx as f64 || j + 1.0 >= self.ny as f64 {
            return Err(Error::Input(format!("({x}, {y}) outside the lattice")));
        }
        let (tx, ty) = (fx - i, fy - j);
        let k = j as usize * self.nx + i as usize;
        let corners = [k, k + 1, k + self.nx, k + self.nx + 1];
        if corners.iter().any(|&c| self.mask[c] == NodeKind::Outside) {
            return Err(Error::Input(format!("({x}, {y}) is not surrounded by domain nodes")));
        }
        let v = |c: usize| values[corners[c]];
        Ok((1.0 - ty) * ((1.0 - tx) * v(0) + tx * v(1)) + ty * ((1.0 - tx) * v(2) + tx * v(3)))
    }

    /// CSV rows `x, y, value, mask` for all in-domain nodes.
    pub fn field_rows(&self, values: &[f64]) -> Vec<Vec<Cell>> {
        (0..self.mask.len())
            .filter(|&k| self.mask[k] != NodeKind::Outside)
            .map(|k| {
                let (x, y) = self.coords(k);
                vec![
                    Cell::Num(x),
                    Cell::Num(y),
                    Cell::Num(values[k]),
                    Cell::from(self.mask[k].label()),
                ]
            })
            .collect()
    }
}

pub const FIELD_HEADER: [&str; 4] = ["x", "y", "value", "mask"];

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn disk_mask_invariants() {
        let s = Stencil::new(2).unwrap();
        let g = Grid2D::new(Domain::Disk { radius: 1.0 }, 0.1, &s).unwrap();
        for &k in g.interior() {
            for &arm in s.arms() {
                let j = (k as isize + g.offset(arm)) as usize;
                assert_ne!(g.kind(j), NodeKind::Outside);
            }
        }
        let c = g.nearest(0.0, 0.0).unwrap();
        assert_eq!(g.coords(c), (0.0, 0.0));
        assert_eq!(g.kind(c), NodeKind::Interior);
        assert!(g.boundary_nodes().count() > 0);
        // Every in-domain node lies in the closed disk.
        for k in 0..g.len() {
            if g.kind(k) != NodeKind::Outside {
                let (x, y) = g.coords(k);
                assert!(x * x + y * y <= 1.0 + 1e-9);
            }
        }
    }

    #[test]
    fn annulus_and_rectangle() {
        let s = Stencil::new(1).unwrap();
        let g = Grid2D::new(Domain::Annulus { r_in: 0.3, r_out: 1.0 }, 0.05, &s).unwrap();
        assert_eq!(g.kind(g.nearest(0.0, 0.0).unwrap()), NodeKind::Outside);
        let r = Grid2D::new(Domain::Rectangle { x0: 0.0, x1: 1.0, y0: 0.0, y1: 0.5 }, 0.1, &s).unwrap();
        assert_eq!(r.interior().len(), 9 * 4);
        assert!(Grid2D::new(Domain::Disk { radius: 0.01 }, 0.1, &s).is_err());
        assert!(Grid2D::new(Domain::Annulus { r_in: 1.0, r_out: 0.5 }, 0.1, &s).is_err());
    }

    #[test]
    fn bilinear_is_exact_for_bilinear_fields() {
        let s = Stencil::new(1).unwrap();
        let g = Grid2D::new(Domain::Disk { radius: 1.0 }, 0.1, &s).unwrap();
        let f = |x: f64, y: f64| 1.0 + 2.0 * x - y + 0.5 * x * y;
        let vals = g.sample(f);
        for (x, y) in [(0.03, 0.07), (-0.42, 0.31), (0.5, -0.5)] {
            assert!((g.interpolate(&vals, x, y).unwrap() - f(x, y)).abs() < 1e-13);
        }
    }
}
