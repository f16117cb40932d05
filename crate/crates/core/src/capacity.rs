//! Riesz kernels, discrete potentials, equilibrium measures on finite
//! discretizations and the supersolution bound for blow-up potentials.

use serde::Serialize;

use crate::linalg::SymMat;
use crate::pucci::pucci_plus_p;
use crate::radial::{alpha_star, ModelParams};
use crate::{Error, Result};

/// `Φ_α(x) = |x|^{−α}` for `0 < α < n`, `Φ_0(x) = log(2d/|x|)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct KernelParams {
    pub alpha: f64,
    pub d: f64,
    pub n: usize,
}

impl KernelParams {
    pub fn new(alpha: f64, d: f64, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::Parameter("dimension must be at least 1".into()));
        }
        if !(alpha.is_finite() && alpha >= 0.0 && alpha < n as f64) {
            return Err(Error::Parameter(format!("kernel exponent α = {alpha} outside [0, {n})")));
        }
        if !(d.is_finite() && d > 0.0) {
            return Err(Error::Parameter(format!("scale d = {d} must be positive")));
        }
        Ok(Self { alpha, d, n })
    }

    pub fn is_log(&self) -> bool {
        self.alpha == 0.0
    }

    /// `Φ_α` as a function of the distance `r > 0`.
    pub fn profile(&self, r: f64) -> f64 {
        if self.is_log() {
            (2.0 * self.d / r).ln()
        } else {
            r.powf(-self.alpha)
        }
    }

    /// `(g'(r), g''(r))` of the radial profile.
    pub fn profile_derivatives(&self, r: f64) -> (f64, f64) {
        if self.is_log() {
            (-1.0 / r, 1.0 / (r * r))
        } else {
            let a = self.alpha;
            (-a * r.powf(-a - 1.0), a * (a + 1.0) * r.powf(-a - 2.0))
        }
    }

    fn check_point(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.n {
            return Err(Error::Dimension(format!("point of length {} in R^{}", x.len(), self.n)));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Input("non-finite point coordinate".into()));
        }
        Ok(())
    }
}

fn dist(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

pub fn kernel_value(k: &KernelParams, x: &[f64], y: &[f64]) -> Result<f64> {
    k.check_point(x)?;
    k.check_point(y)?;
    let r = dist(x, y);
    if r == 0.0 {
        return Err(Error::Singular("kernel evaluated on the diagonal".into()));
    }
    Ok(k.profile(r))
}

/// A potential value; `Infinite` marks evaluation on a charged atom.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum PotentialValue {
    Finite(f64),
    Infinite,
}

impl PotentialValue {
    pub fn finite(self) -> Option<f64> {
        match self {
            PotentialValue::Finite(v) => Some(v),
            PotentialValue::Infinite => None,
        }
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, PotentialValue::Infinite)
    }
}

/// Weighted atoms approximating a probability measure.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DiscreteMeasure {
    atoms: Vec<Vec<f64>>,
    weights: Vec<f64>,
}

impl DiscreteMeasure {
    pub fn new(atoms: Vec<Vec<f64>>, weights: Vec<f64>) -> Result<Self> {
        if atoms.is_empty() || atoms.len() != weights.len() {
            return Err(Error::Input(format!(
                "{} atoms but {} weights",
                atoms.len(),
                weights.len()
            )));
        }
        let n = atoms[0].len();
        if n == 0 || atoms.iter().any(|a| a.len() != n || a.iter().any(|v| !v.is_finite())) {
            return Err(Error::Input("atoms must be finite points of one dimension".into()));
        }
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::Input("weights must be finite and non-negative".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::Input(format!("weights sum to {total}, not 1")));
        }
        check_distinct(&atoms)?;
        Ok(Self { atoms, weights })
    }

    pub fn uniform(atoms: Vec<Vec<f64>>) -> Result<Self> {
        let w = 1.0 / atoms.len().max(1) as f64;
        let mut weights = vec![w; atoms.len()];
        // Put the rounding remainder on the last weight.
        if let Some(last) = weights.last_mut() {
            *last = 1.0 - w * (atoms.len() - 1) as f64;
        }
        Self::new(atoms, weights)
    }

    pub fn dirac(at: Vec<f64>) -> Result<Self> {
        Self::new(vec![at], vec![1.0])
    }

    pub fn atoms(&self) -> &[Vec<f64>] {
        &self.atoms
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.atoms[0].len()
    }
}

fn check_distinct(atoms: &[Vec<f64>]) -> Result<()> {
    let mut sorted: Vec<&Vec<f64>> = atoms.iter().collect();
    sorted.sort_by(|a, b| {
        a.iter()
            .zip(b.iter())
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::Input("atoms must be pairwise distinct".into()));
    }
    Ok(())
}

fn weighted_potential(atoms: &[Vec<f64>], weights: &[f64], k: &KernelParams, x: &[f64]) -> Result<PotentialValue> {
    k.check_point(x)?;
    let mut sum = 0.0;
    for (y, &w) in atoms.iter().zip(weights) {
        if w == 0.0 {
            continue;
        }
        if y.len() != k.n {
            return Err(Error::Dimension(format!("atom in R^{}, kernel in R^{}", y.len(), k.n)));
        }
        let r = dist(x, y);
        if r == 0.0 {
            return Ok(PotentialValue::Infinite);
        }
        sum += w * k.profile(r);
    }
    Ok(PotentialValue::Finite(sum))
}

/// `V^μ_α(x) = Σ_j w_j Φ_α(x − y_j)`.
pub fn potential(mu: &DiscreteMeasure, k: &KernelParams, x: &[f64]) -> Result<PotentialValue> {
    weighted_potential(&mu.atoms, &mu.weights, k, x)
}

/// Gradient and Hessian of a weighted atom sum, assembled per atom from the
/// radial eigenstructure `g'' ẑẑᵀ + (g'/r)(I − ẑẑᵀ)`.
fn weighted_derivatives(
    atoms: &[Vec<f64>],
    weights: &[f64],
    k: &KernelParams,
    x: &[f64],
) -> Result<(Vec<f64>, SymMat)> {
    k.check_point(x)?;
    let n = k.n;
    let mut grad = vec![0.0; n];
    let mut hess = vec![0.0; n * n];
    for (y, &w) in atoms.iter().zip(weights) {
        if w == 0.0 {
            continue;
        }
        let z: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
        let r = norm(&z);
        if r == 0.0 {
            return Err(Error::Singular("derivative of the potential at a charged atom".into()));
        }
        let (g1, g2) = k.profile_derivatives(r);
        let tang = g1 / r;
        let rad = g2 - tang;
        for i in 0..n {
            let zi = z[i] / r;
            grad[i] += w * g1 * zi;
            for j in i..n {
                let zj = z[j] / r;
                let mut v = rad * zi * zj;
                if i == j {
                    v += tang;
                }
                hess[i * n + j] += w * v;
            }
        }
    }
    Ok((grad, SymMat::from_fn(n, |i, j| hess[i * n + j])))
}

pub fn potential_gradient(mu: &DiscreteMeasure, k: &KernelParams, x: &[f64]) -> Result<Vec<f64>> {
    Ok(weighted_derivatives(&mu.atoms, &mu.weights, k, x)?.0)
}

pub fn potential_hessian(mu: &DiscreteMeasure, k: &KernelParams, x: &[f64]) -> Result<SymMat> {
    Ok(weighted_derivatives(&mu.atoms, &mu.weights, k, x)?.1)
}

/// Compact sets with a finite discretization at resolution `N`.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SetSpec {
    Point { at: Vec<f64> },
    PointCloud { points: Vec<Vec<f64>> },
    Segment { a: Vec<f64>, b: Vec<f64> },
    /// Circle in the plane of the first two coordinates.
    Circle { center: Vec<f64>, radius: f64 },
    /// Middle-thirds Cantor set on the segment `[a, b]`, atoms at the left
    /// endpoints of level-`level` intervals.
    Cantor { level: u32, a: Vec<f64>, b: Vec<f64> },
}

impl SetSpec {
    /// Finite sets keep their atoms at every resolution; only the
    /// self-energy cell shrinks.
    pub fn is_finite_set(&self) -> bool {
        matches!(self, SetSpec::Point { .. } | SetSpec::PointCloud { .. })
    }

    pub fn dim(&self) -> usize {
        match self {
            SetSpec::Point { at } => at.len(),
            SetSpec::PointCloud { points } => points.first().map_or(0, Vec::len),
            SetSpec::Segment { a, .. } | SetSpec::Cantor { a, .. } => a.len(),
            SetSpec::Circle { center, .. } => center.len(),
        }
    }

    /// Atoms of the discretization at resolution `n_atoms`, all inside `B_d`.
    pub fn atoms(&self, n_atoms: usize, d: f64) -> Result<Vec<Vec<f64>>> {
        if n_atoms == 0 {
            return Err(Error::Parameter("resolution must be at least 1".into()));
        }
        let lerp = |a: &[f64], b: &[f64], t: f64| -> Vec<f64> {
            a.iter().zip(b).map(|(x, y)| x + t * (y - x)).collect()
        };
        let atoms = match self {
            SetSpec::Point { at } => vec![at.clone()],
            SetSpec::PointCloud { points } => {
                if points.is_empty() {
                    return Err(Error::Input("empty point cloud".into()));
                }
                points.clone()
            }
            SetSpec::Segment { a, b } => {
                if a.len() != b.len() || a == b {
                    return Err(Error::Input("segment needs distinct endpoints of equal dimension".into()));
                }
                if n_atoms == 1 {
                    vec![lerp(a, b, 0.5)]
                } else {
                    (0..n_atoms)
                        .map(|i| lerp(a, b, i as f64 / (n_atoms - 1) as f64))
                        .collect()
                }
            }
            SetSpec::Circle { center, radius } => {
                if center.len() < 2 || !(radius.is_finite() && *radius > 0.0) {
                    return Err(Error::Input("circle needs dimension >= 2 and a positive radius".into()));
                }
                (0..n_atoms)
                    .map(|i| {
                        let t = 2.0 * std::f64::consts::PI * i as f64 / n_atoms as f64;
                        let mut p = center.clone();
                        p[0] += radius * t.cos();
                        p[1] += radius * t.sin();
                        p
                    })
                    .collect()
            }
            SetSpec::Cantor { level, a, b } => {
                if a.len() != b.len() || a == b {
                    return Err(Error::Input("cantor set needs distinct endpoints of equal dimension".into()));
                }
                if *level > 30 || (n_atoms as u64) > (1u64 << level) {
                    return Err(Error::Parameter(format!(
                        "level {level} has {} intervals, cannot place {n_atoms} atoms",
                        1u64.checked_shl(*level).unwrap_or(u64::MAX)
                    )));
                }
                (0..n_atoms)
                    .map(|i| {
                        let idx = ((i as u64) << level) / n_atoms as u64;
                        let mut t = 0.0;
                        let mut scale = 1.0;
                        for bit in (0..*level).rev() {
                            scale /= 3.0;
                            if (idx >> bit) & 1 == 1 {
                                t += 2.0 * scale;
                            }
                        }
                        lerp(a, b, t)
                    })
                    .collect()
            }
        };
        let dim = atoms[0].len();
        if dim == 0 || atoms.iter().any(|p| p.len() != dim || p.iter().any(|v| !v.is_finite())) {
            return Err(Error::Input("set points must be finite and of one dimension".into()));
        }
        if let Some(p) = atoms.iter().find(|p| norm(p) > d) {
            return Err(Error::Parameter(format!("point {p:?} lies outside B_d with d = {d}")));
        }
        check_distinct(&atoms)?;
        Ok(atoms)
    }

    /// Self-energy cell radii: half the nearest-neighbour distance, capped at
    /// `d/N` for finite sets.
    pub fn cell_radii(&self, atoms: &[Vec<f64>], n_atoms: usize, d: f64) -> Vec<f64> {
        let cap = if self.is_finite_set() {
            d / n_atoms as f64
        } else {
            f64::INFINITY
        };
        (0..atoms.len())
            .map(|i| {
                let nn = (0..atoms.len())
                    .filter(|&j| j != i)
                    .map(|j| dist(&atoms[i], &atoms[j]))
                    .fold(f64::INFINITY, f64::min);
                let h = (0.5 * nn).min(cap);
                if h.is_finite() {
                    h
                } else {
                    d / n_atoms as f64
                }
            })
            .collect()
    }
}

/// Outcome of the Frank–Wolfe energy minimization.
#[derive(Clone, Debug, Serialize)]
pub struct Equilibrium {
    pub measure: DiscreteMeasure,
    /// Discrete equilibrium value `E(w*)`.
    pub v_est: f64,
    pub gap: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Energy after each iteration (initial energy first).
    #[serde(skip)]
    pub energy_trace: Vec<f64>,
}

impl Equilibrium {
    pub fn energy_monotone(&self) -> bool {
        self.energy_trace
            .windows(2)
            .all(|w| w[1] <= w[0] + 1e-13 * w[0].abs().max(1.0))
    }
}

/// Energy matrix: `G_ij = Φ_α(y_i − y_j)`, `G_ii = Φ_α(h_i)`.
pub fn energy_matrix(atoms: &[Vec<f64>], radii: &[f64], k: &KernelParams) -> Result<Vec<Vec<f64>>> {
    let n = atoms.len();
    if radii.len() != n {
        return Err(Error::Dimension("one cell radius per atom required".into()));
    }
    let mut g = vec![vec![0.0; n]; n];
    for i in 0..n {
        if !(radii[i] > 0.0) {
            return Err(Error::Parameter(format!("cell radius {} must be positive", radii[i])));
        }
        g[i][i] = k.profile(radii[i]);
        for j in i + 1..n {
            let v = kernel_value(k, &atoms[i], &atoms[j])?;
            g[i][j] = v;
            g[j][i] = v;
        }
    }
    Ok(g)
}

/// Minimizer of a quadratic form on the probability simplex.
#[derive(Clone, Debug, Serialize)]
pub struct SimplexMinimum {
    pub weights: Vec<f64>,
    pub energy: f64,
    /// Frank–Wolfe duality gap at `weights`.
    pub gap: f64,
    pub iterations: usize,
    pub energy_trace: Vec<f64>,
}

/// Minimizes `wᵀGw` over the probability simplex by Frank–Wolfe with away
/// steps and exact line search. Stops once the Frank–Wolfe gap is `<= tol`.
pub fn minimize_on_simplex(g: &[Vec<f64>], iterations: usize, tol: f64) -> Result<SimplexMinimum> {
    let n = g.len();
    if n == 0 || g.iter().any(|r| r.len() != n) {
        return Err(Error::Dimension("energy matrix must be square and non-empty".into()));
    }
    let mut w = vec![1.0 / n as f64; n];
    let full = |w: &[f64]| -> Vec<f64> { g.iter().map(|row| row.iter().zip(w).map(|(a, b)| a * b).sum()).collect() };
    let mut gw = full(&w);
    let energy = |w: &[f64], gw: &[f64]| w.iter().zip(gw).map(|(a, b)| a * b).sum::<f64>();
    let mut e = energy(&w, &gw);
    let mut trace = vec![e];
    let mut it = 0;
    while it < iterations {
        // Toward-vertex and away-vertex selection.
        let (mut s, mut a) = (0, usize::MAX);
        for i in 0..n {
            if gw[i] < gw[s] {
                s = i;
            }
            if w[i] > 0.0 && (a == usize::MAX || gw[i] > gw[a]) {
                a = i;
            }
        }
        let gap = 2.0 * (e - gw[s]);
        if gap <= tol {
            break;
        }
        it += 1;
        let away_gap = 2.0 * (gw[a] - e);
        // Direction d = e_s − w (toward) or d = w − e_a (away).
        let (toward, max_step) = if gap >= away_gap || w[a] >= 1.0 {
            (true, 1.0)
        } else {
            (false, w[a] / (1.0 - w[a]))
        };
        let (slope, curv) = if toward {
            (gw[s] - e, g[s][s] - 2.0 * gw[s] + e)
        } else {
            (e - gw[a], e - 2.0 * gw[a] + g[a][a])
        };
        let step = if curv > 0.0 {
            (-slope / curv).clamp(0.0, max_step)
        } else {
            max_step
        };
        if step <= 0.0 {
            break;
        }
        let vertex = if toward { s } else { a };
        let (keep, add) = if toward { (1.0 - step, step) } else { (1.0 + step, -step) };
        for i in 0..n {
            w[i] *= keep;
            gw[i] = keep * gw[i] + add * g[i][vertex];
        }
        w[vertex] += add;
        if !toward && step == max_step {
            w[vertex] = 0.0;
        }
        for v in w.iter_mut() {
            if *v < 0.0 {
                *v = 0.0;
            }
        }
        if it % 512 == 0 {
            let total: f64 = w.iter().sum();
            w.iter_mut().for_each(|v| *v /= total);
            gw = full(&w);
        }
        e = energy(&w, &gw);
        trace.push(e);
    }
    let total: f64 = w.iter().sum();
    w.iter_mut().for_each(|v| *v /= total);
    gw = full(&w);
    e = energy(&w, &gw);
    let min = gw.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(SimplexMinimum {
        weights: w,
        energy: e,
        gap: 2.0 * (e - min),
        iterations: it,
        energy_trace: trace,
    })
}

/// Equilibrium measure of `set` discretized with `n_atoms` atoms.
pub fn equilibrium_measure(
    set: &SetSpec,
    n_atoms: usize,
    k: &KernelParams,
    iterations: usize,
    tol: f64,
) -> Result<Equilibrium> {
    if set.dim() != k.n {
        return Err(Error::Dimension(format!("set in R^{}, kernel in R^{}", set.dim(), k.n)));
    }
    let atoms = set.atoms(n_atoms, k.d)?;
    let radii = set.cell_radii(&atoms, n_atoms, k.d);
    equilibrium_on_atoms(atoms, &radii, k, iterations, tol)
}

pub fn equilibrium_on_atoms(
    atoms: Vec<Vec<f64>>,
    radii: &[f64],
    k: &KernelParams,
    iterations: usize,
    tol: f64,
) -> Result<Equilibrium> {
    if !(tol.is_finite() && tol >= 0.0) {
        return Err(Error::Parameter(format!("tolerance {tol} must be non-negative")));
    }
    let g = energy_matrix(&atoms, radii, k)?;
    let SimplexMinimum {
        weights: w,
        energy: v_est,
        gap,
        iterations: iters,
        energy_trace: trace,
    } = minimize_on_simplex(&g, iterations, tol)?;
    Ok(Equilibrium {
        measure: DiscreteMeasure::new(atoms, w)?,
        v_est,
        gap,
        iterations: iters,
        converged: gap <= tol,
        energy_trace: trace,
    })
}

/// `1/V` for `α > 0`, `e^{−V}` for `α = 0`.
pub fn capacity_from_value(v: f64, alpha: f64) -> Result<f64> {
    if v.is_nan() || alpha.is_nan() || alpha < 0.0 {
        return Err(Error::Parameter(format!("invalid equilibrium value {v} or exponent {alpha}")));
    }
    if alpha == 0.0 {
        return Ok((-v).exp());
    }
    if v <= 0.0 {
        return Err(Error::Parameter(format!("equilibrium value {v} must be positive for α > 0")));
    }
    Ok(1.0 / v)
}

/// Inner and outer capacity over a finite family of discretizations.
#[derive(Clone, Debug, Serialize)]
pub struct FamilyCapacity {
    pub capacities: Vec<f64>,
    /// Supremum over the family.
    pub inner: f64,
    /// Infimum over the family.
    pub outer: f64,
}

pub fn capacity_over_family(
    set: &SetSpec,
    resolutions: &[usize],
    k: &KernelParams,
    iterations: usize,
    tol: f64,
) -> Result<FamilyCapacity> {
    if resolutions.is_empty() {
        return Err(Error::Parameter("empty discretization family".into()));
    }
    let capacities = resolutions
        .iter()
        .map(|&n| capacity_from_value(equilibrium_measure(set, n, k, iterations, tol)?.v_est, k.alpha))
        .collect::<Result<Vec<_>>>()?;
    Ok(FamilyCapacity {
        inner: capacities.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        outer: capacities.iter().copied().fold(f64::INFINITY, f64::min),
        capacities,
    })
}

/// Constants of the supersolution bound. `rho` is `None` when `b = 0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RhoK {
    pub rho: Option<f64>,
    pub k: f64,
}

/// `ρ = (λ(p−1) − Λ(α+1))/b`, `K = (α + δ_{0,α}) b / ρ^{α+1}`; `K = 0` for `b = 0`.
pub fn rho_and_k(lambda: f64, big_lambda: f64, p: usize, alpha: f64, b: f64) -> Result<RhoK> {
    crate::pucci::Ellipticity::new(lambda, big_lambda, p)?;
    if !(alpha.is_finite() && alpha >= 0.0) {
        return Err(Error::Parameter(format!("α = {alpha} must be non-negative")));
    }
    if !(b.is_finite() && b >= 0.0) {
        return Err(Error::Parameter(format!("b = {b} must be non-negative")));
    }
    let a_star = alpha_star(lambda, big_lambda, p);
    if b == 0.0 {
        if alpha > a_star + 1e-12 {
            return Err(Error::Parameter(format!("α = {alpha} exceeds α* = {a_star}")));
        }
        return Ok(RhoK { rho: None, k: 0.0 });
    }
    let rho = (lambda * (p as f64 - 1.0) - big_lambda * (alpha + 1.0)) / b;
    if rho <= 0.0 {
        return Err(Error::Parameter(format!(
            "ρ = {rho} <= 0: b > 0 needs α < α* = {a_star}, got α = {alpha}"
        )));
    }
    let kron = if alpha == 0.0 { 1.0 } else { 0.0 };
    Ok(RhoK {
        rho: Some(rho),
        k: (alpha + kron) * b / rho.powf(alpha + 1.0),
    })
}

/// Per-atom bound `(α+δ_{0,α})(Λ(α+1) − λ(p−1) + b r)/r^{α+2}` at distance `r`.
pub fn per_atom_bound(params: &ModelParams, alpha: f64, r: f64) -> f64 {
    let kron = if alpha == 0.0 { 1.0 } else { 0.0 };
    (alpha + kron)
        * (params.big_lambda * (alpha + 1.0) - params.lambda * (params.p as f64 - 1.0) + params.b * r)
        / r.powf(alpha + 2.0)
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct SupersolutionEval {
    pub operator: f64,
    pub gradient_norm: f64,
    pub k: f64,
    /// `P⁺(D²V) + b|DV| − K`.
    pub residual: f64,
}

fn supersolution_eval(
    atoms: &[Vec<f64>],
    weights: &[f64],
    k: &KernelParams,
    params: &ModelParams,
    x: &[f64],
) -> Result<SupersolutionEval> {
    params.validate()?;
    if params.n != k.n {
        return Err(Error::Dimension(format!("model in R^{}, kernel in R^{}", params.n, k.n)));
    }
    let rk = rho_and_k(params.lambda, params.big_lambda, params.p, k.alpha, params.b)?;
    let (grad, hess) = weighted_derivatives(atoms, weights, k, x)?;
    let op = pucci_plus_p(&hess, &params.ellipticity()?)?;
    let gn = norm(&grad);
    Ok(SupersolutionEval {
        operator: op,
        gradient_norm: gn,
        k: rk.k,
        residual: op + params.b * gn - rk.k,
    })
}

/// `P⁺_{λ,Λ|p}(D²V^μ) + b|DV^μ| − K` at `x`; non-positive up to rounding.
pub fn potential_supersolution_residual(
    mu: &DiscreteMeasure,
    k: &KernelParams,
    params: &ModelParams,
    x: &[f64],
) -> Result<SupersolutionEval> {
    supersolution_eval(&mu.atoms, &mu.weights, k, params, x)
}

/// Truncated series `Σ_{m=1}^{M} c_m 2^{−m} V^{μ_m}` over a finite union of
/// compacts, `c_m = 1/max(V^{μ_m}(x₀), 1)`.
#[derive(Clone, Debug, Serialize)]
pub struct UnionPotential {
    pub coefficients: Vec<f64>,
    atoms: Vec<Vec<f64>>,
    weights: Vec<f64>,
}

impl UnionPotential {
    pub fn new(components: &[DiscreteMeasure], k: &KernelParams, x0: &[f64], terms: usize) -> Result<Self> {
        if terms == 0 || terms > components.len() {
            return Err(Error::Parameter(format!(
                "truncation {terms} must be in 1..={}",
                components.len()
            )));
        }
        let mut coefficients = Vec::with_capacity(terms);
        let mut atoms = Vec::new();
        let mut weights = Vec::new();
        for (m, mu) in components.iter().take(terms).enumerate() {
            let at_x0 = potential(mu, k, x0)?
                .finite()
                .ok_or_else(|| Error::Singular("reference point lies on a component".into()))?;
            let c = 1.0 / at_x0.max(1.0);
            let scale = c * 0.5f64.powi(m as i32 + 1);
            coefficients.push(c);
            for (y, w) in mu.atoms.iter().zip(&mu.weights) {
                atoms.push(y.clone());
                weights.push(scale * w);
            }
        }
        Ok(Self {
            coefficients,
            atoms,
            weights,
        })
    }

    pub fn total_mass(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn value(&self, k: &KernelParams, x: &[f64]) -> Result<PotentialValue> {
        weighted_potential(&self.atoms, &self.weights, k, x)
    }

    pub fn supersolution_residual(
        &self,
        k: &KernelParams,
        params: &ModelParams,
        x: &[f64],
    ) -> Result<SupersolutionEval> {
        supersolution_eval(&self.atoms, &self.weights, k, params, x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn k2(alpha: f64) -> KernelParams {
        KernelParams::new(alpha, 1.0, 2).unwrap()
    }

    #[test]
    fn kernel_values() {
        assert_eq!(kernel_value(&k2(1.0), &[0.0, 0.0], &[2.0, 0.0]).unwrap(), 0.5);
        assert_eq!(kernel_value(&k2(0.0), &[0.0, 0.0], &[0.0, 2.0]).unwrap(), 0.0);
        assert!(kernel_value(&k2(1.0), &[1.0, 0.0], &[1.0, 0.0]).is_err());
        assert!(KernelParams::new(2.0, 1.0, 2).is_err());
        assert!(KernelParams::new(0.5, 0.0, 2).is_err());
    }

    #[test]
    fn kernel_near_dimension_matches_independent_power() {
        // 0.5^{−(n−0.1)} = 2^n / 2^{0.1}; 2^{0.1} by Newton on y^10 = 2.
        let mut y = 1.07f64;
        for _ in 0..50 {
            y -= (y.powi(10) - 2.0) / (10.0 * y.powi(9));
        }
        for n in 1..=5usize {
            let k = KernelParams::new(n as f64 - 0.1, 1.0, n).unwrap();
            let mut x = vec![0.0; n];
            x[0] = 0.5;
            let v = kernel_value(&k, &x, &vec![0.0; n]).unwrap();
            let oracle = 2f64.powi(n as i32) / y;
            assert!((v - oracle).abs() <= 4.0 * f64::EPSILON * oracle, "n={n}: {v} vs {oracle}");
        }
    }

    #[test]
    fn potential_examples() {
        let k = k2(1.0);
        let mu = DiscreteMeasure::dirac(vec![0.0, 0.0]).unwrap();
        assert_eq!(potential(&mu, &k, &[2.0, 0.0]).unwrap(), PotentialValue::Finite(0.5));
        assert!(potential(&mu, &k, &[0.0, 0.0]).unwrap().is_infinite());
        let mu = DiscreteMeasure::uniform(vec![vec![1.0, 0.0], vec![-1.0, 0.0]]).unwrap();
        assert_eq!(potential(&mu, &k, &[0.0, 0.0]).unwrap(), PotentialValue::Finite(1.0));

        let circle = SetSpec::Circle {
            center: vec![0.0, 0.0],
            radius: 0.5,
        };
        let mu = DiscreteMeasure::uniform(circle.atoms(64, 1.0).unwrap()).unwrap();
        for alpha in [0.3, 1.0, 1.7] {
            let v = potential(&mu, &k2(alpha), &[0.0, 0.0]).unwrap().finite().unwrap();
            assert!((v - 0.5f64.powf(-alpha)).abs() <= 1e-13 * v);
        }

        let mu = DiscreteMeasure::dirac(vec![0.0, 0.0]).unwrap();
        let mut prev = 0.0;
        for j in 1..12 {
            let v = potential(&mu, &k, &[0.5f64.powi(j), 0.0]).unwrap().finite().unwrap();
            assert!(v > prev);
            prev = v;
        }
    }

    #[test]
    fn measure_validation_and_json() {
        assert!(DiscreteMeasure::new(vec![vec![0.0]], vec![0.5]).is_err());
        assert!(DiscreteMeasure::new(vec![vec![0.0], vec![0.0]], vec![0.5, 0.5]).is_err());
        assert!(DiscreteMeasure::new(vec![vec![0.0], vec![1.0]], vec![1.5, -0.5]).is_err());
        let mu = DiscreteMeasure::uniform(vec![vec![0.0, 1.0], vec![0.5, 0.0]]).unwrap();
        let json = crate::io::to_json_string(&mu).unwrap();
        let v: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert_eq!(v["atoms"][0][1].as_f64(), Some(1.0));
        assert_eq!(v["weights"][1].as_f64(), Some(0.5));
    }

    #[test]
    fn generators_stay_in_ball() {
        let seg = SetSpec::Segment {
            a: vec![-0.5, 0.0],
            b: vec![0.5, 0.0],
        };
        let a = seg.atoms(5, 1.0).unwrap();
        assert_eq!(a[0], vec![-0.5, 0.0]);
        assert_eq!(a[4], vec![0.5, 0.0]);
        let cantor = SetSpec::Cantor {
            level: 7,
            a: vec![0.0, 0.0],
            b: vec![0.9, 0.0],
        };
        let c = cantor.atoms(100, 1.0).unwrap();
        assert_eq!(c.len(), 100);
        // No atom lands in the removed middle third.
        assert!(c.iter().all(|p| !(p[0] > 0.3 + 1e-12 && p[0] < 0.6 - 1e-12)));
        assert!(cantor.atoms(200, 1.0).is_err());
        let far = SetSpec::Point { at: vec![2.0, 0.0] };
        assert!(far.atoms(1, 1.0).is_err());
    }

    #[test]
    fn two_point_equilibrium_is_symmetric() {
        let k = k2(1.0);
        let atoms = vec![vec![-0.5, 0.0], vec![0.5, 0.0]];
        let eq = equilibrium_on_atoms(atoms, &[0.1, 0.1], &k, 1000, 1e-14).unwrap();
        assert!((eq.measure.weights()[0] - 0.5).abs() < 1e-12);
        // ½·Φ(1) + ½·Φ(0.1) = 0.5 + 5.
        assert!((eq.v_est - 5.5).abs() < 1e-12);
    }

    /// `w ∝ G⁻¹1` by Gaussian elimination; valid when the optimum is interior.
    fn qp_oracle(g: &[Vec<f64>]) -> (Vec<f64>, f64) {
        let n = g.len();
        let mut a: Vec<Vec<f64>> = g.iter().map(|r| {
            let mut r = r.clone();
            r.push(1.0);
            r
        }).collect();
        for c in 0..n {
            let piv = (c..n).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs())).unwrap();
            a.swap(c, piv);
            for r in 0..n {
                if r != c {
                    let f = a[r][c] / a[c][c];
                    for j in c..=n {
                        a[r][j] -= f * a[c][j];
                    }
                }
            }
        }
        let x: Vec<f64> = (0..n).map(|i| a[i][n] / a[i][i]).collect();
        let s: f64 = x.iter().sum();
        let w: Vec<f64> = x.iter().map(|v| v / s).collect();
        let e = (0..n).map(|i| (0..n).map(|j| w[i] * g[i][j] * w[j]).sum::<f64>()).sum();
        (w, e)
    }

    #[test]
    fn segment_matches_dense_qp() {
        let k = k2(0.0);
        let seg = SetSpec::Segment {
            a: vec![-0.5, 0.0],
            b: vec![0.5, 0.0],
        };
        let atoms = seg.atoms(50, 1.0).unwrap();
        let radii = seg.cell_radii(&atoms, 50, 1.0);
        let g = energy_matrix(&atoms, &radii, &k).unwrap();
        let (w_ref, e_ref) = qp_oracle(&g);
        assert!(w_ref.iter().all(|&v| v > 0.0));
        let eq = equilibrium_measure(&seg, 50, &k, 200_000, 1e-12).unwrap();
        assert!(eq.converged, "gap {}", eq.gap);
        assert!(eq.energy_monotone());
        assert!((eq.v_est - e_ref).abs() <= 1e-10 * e_ref.abs());
        let w = eq.measure.weights();
        for i in 0..50 {
            assert!((w[i] - w_ref[i]).abs() <= 1e-5, "weight {i}: {} vs {}", w[i], w_ref[i]);
        }

        let eq = equilibrium_measure(&seg, 200, &k, 200_000, 1e-10).unwrap();
        let w = eq.measure.weights();
        for i in 0..100 {
            assert!((w[i] - w[199 - i]).abs() < 1e-6);
        }
        assert!(w[0] > 2.0 * w[100]);
    }

    #[test]
    fn point_value_diverges_segment_converges() {
        let k = k2(1.0);
        let pt = SetSpec::Point { at: vec![0.0, 0.0] };
        let vs: Vec<f64> = (4..=10)
            .map(|j| equilibrium_measure(&pt, 1 << j, &k, 10, 0.0).unwrap().v_est)
            .collect();
        assert!(vs.windows(2).all(|w| w[1] > w[0]));

        let k0 = k2(0.0);
        let seg = SetSpec::Segment {
            a: vec![-0.5, 0.0],
            b: vec![0.5, 0.0],
        };
        let v: Vec<f64> = [100, 400]
            .iter()
            .map(|&n| equilibrium_measure(&seg, n, &k0, 200_000, 1e-9).unwrap().v_est)
            .collect();
        assert!(((v[1] - v[0]) / v[1]).abs() < 0.05);
        // Logarithmic capacity of a segment of length L is L/4.
        let cap = capacity_from_value(v[1], 0.0).unwrap() * 2.0;
        assert!((cap - 0.25).abs() < 0.02, "{cap}");
    }

    #[test]
    fn capacity_formula_and_monotonicity() {
        assert_eq!(capacity_from_value(2.0, 1.0).unwrap(), 0.5);
        assert!(capacity_from_value(1e300, 1.0).unwrap() < 1e-299);
        assert_eq!(capacity_from_value(1e4, 0.0).unwrap(), 0.0);
        assert!(capacity_from_value(0.0, 1.0).is_err());

        // Same atoms and cells: the feasible family only grows.
        let k = k2(0.5);
        let seg = SetSpec::Segment {
            a: vec![-0.5, 0.0],
            b: vec![0.5, 0.0],
        };
        let atoms = seg.atoms(40, 1.0).unwrap();
        let radii = seg.cell_radii(&atoms, 40, 1.0);
        let big = equilibrium_on_atoms(atoms.clone(), &radii, &k, 100_000, 1e-12).unwrap();
        let small = equilibrium_on_atoms(atoms[..20].to_vec(), &radii[..20], &k, 100_000, 1e-12).unwrap();
        let (cb, cs) = (
            capacity_from_value(big.v_est, 0.5).unwrap(),
            capacity_from_value(small.v_est, 0.5).unwrap(),
        );
        assert!(cs <= cb + 1e-12);

        let fam = capacity_over_family(&seg, &[20, 40, 80], &k, 100_000, 1e-10).unwrap();
        assert!(fam.inner >= fam.outer);
    }

    #[test]
    fn rho_k_examples() {
        assert_eq!(rho_and_k(1.0, 1.0, 3, 1.0, 0.0).unwrap(), RhoK { rho: None, k: 0.0 });
        let r = rho_and_k(1.0, 1.0, 4, 1.0, 1.0).unwrap();
        assert_eq!((r.rho, r.k), (Some(1.0), 1.0));
        assert!(rho_and_k(1.0, 1.0, 2, 0.0, 0.5).is_err());
        assert!(rho_and_k(1.0, 1.0, 2, 0.5, 0.0).is_err());
        let r = rho_and_k(1.0, 1.0, 3, 0.0, 0.5).unwrap();
        assert_eq!((r.rho, r.k), (Some(2.0), 0.25));
    }

    #[test]
    fn hessian_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for &(alpha, n) in &[(0.0, 2usize), (0.7, 3), (1.5, 3), (2.5, 4)] {
            let k = KernelParams::new(alpha, 2.0, n).unwrap();
            let atoms: Vec<Vec<f64>> = (0..5).map(|_| (0..n).map(|_| rng.gen_range(-0.5..0.5)).collect()).collect();
            let mu = DiscreteMeasure::uniform(atoms).unwrap();
            for _ in 0..25 {
                let x: Vec<f64> = (0..n).map(|_| rng.gen_range(0.7..1.2) * if rng.gen::<bool>() { 1.0 } else { -1.0 }).collect();
                let h = potential_hessian(&mu, &k, &x).unwrap();
                let g = potential_gradient(&mu, &k, &x).unwrap();
                let f = |y: &[f64]| potential(&mu, &k, y).unwrap().finite().unwrap();
                let step = 1e-3;
                let scale = h.max_abs().max(1.0);
                for i in 0..n {
                    let mut xp = x.clone();
                    let mut xm = x.clone();
                    xp[i] += step;
                    xm[i] -= step;
                    assert!(((f(&xp) - f(&xm)) / (2.0 * step) - g[i]).abs() <= 1e-5 * scale);
                    for j in 0..n {
                        let shift = |a: f64, b: f64| {
                            let mut y = x.clone();
                            y[i] += a;
                            y[j] += b;
                            f(&y)
                        };
                        let fd = (shift(step, step) - shift(step, -step) - shift(-step, step)
                            + shift(-step, -step))
                            / (4.0 * step * step);
                        assert!((fd - h.get(i, j)).abs() <= 1e-5 * scale, "α={alpha} ({i},{j})");
                    }
                }
            }
        }
    }

    #[test]
    fn supersolution_cases() {
        // Fundamental case: α = α*, b = 0.
        let params = ModelParams::pure(3, 1.0, 1.0, 3);
        let k = KernelParams::new(1.0, 1.0, 3).unwrap();
        let mu = DiscreteMeasure::dirac(vec![0.0; 3]).unwrap();
        for x in [[0.3, 0.1, -0.2], [1.0, 2.0, 0.5]] {
            let e = potential_supersolution_residual(&mu, &k, &params, &x).unwrap();
            assert_eq!(e.k, 0.0);
            assert!(e.residual.abs() <= 1e-10 * e.operator.abs().max(1.0) * 100.0);
        }
        assert!(potential_supersolution_residual(&mu, &k, &params, &[0.0; 3]).is_err());

        // Single atom at distance ρ: the per-atom integrand vanishes.
        let params = ModelParams {
            b: 1.0,
            ..ModelParams::pure(4, 1.0, 1.0, 4)
        };
        assert_eq!(per_atom_bound(&params, 1.0, 1.0), 0.0);
        assert!(per_atom_bound(&params, 1.0, 0.5) < 0.0);
        let k = KernelParams::new(1.0, 2.0, 4).unwrap();
        let mu = DiscreteMeasure::dirac(vec![0.0; 4]).unwrap();
        for r in [0.2, 1.0, 1.5] {
            let e = potential_supersolution_residual(&mu, &k, &params, &[r, 0.0, 0.0, 0.0]).unwrap();
            assert!((e.operator + params.b * e.gradient_norm - per_atom_bound(&params, 1.0, r)).abs() <= 1e-12 / r.powi(3));
            assert!(e.residual <= 1e-8 * 2.0);
        }
    }

    #[test]
    fn subadditivity_transfer() {
        let params = ModelParams::pure(3, 0.5, 2.0, 2);
        let ell = params.ellipticity().unwrap();
        let k = KernelParams::new(0.5, 1.0, 3).unwrap();
        let atoms = vec![vec![0.0, 0.0, 0.0], vec![0.3, 0.0, 0.0], vec![0.0, -0.4, 0.2]];
        let mu = DiscreteMeasure::new(atoms.clone(), vec![0.2, 0.3, 0.5]).unwrap();
        let x = [0.9, 0.4, -0.3];
        let total = pucci_plus_p(&potential_hessian(&mu, &k, &x).unwrap(), &ell).unwrap();
        let split: f64 = atoms
            .iter()
            .zip(mu.weights())
            .map(|(a, w)| {
                let d = DiscreteMeasure::dirac(a.clone()).unwrap();
                w * pucci_plus_p(&potential_hessian(&d, &k, &x).unwrap(), &ell).unwrap()
            })
            .sum();
        assert!(total <= split + 1e-12);
    }

    #[test]
    fn union_potential_series() {
        let k = KernelParams::new(1.0, 2.0, 4).unwrap();
        let params = ModelParams {
            b: 1.0,
            ..ModelParams::pure(4, 1.0, 1.0, 4)
        };
        let comps: Vec<DiscreteMeasure> = (0..3)
            .map(|m| DiscreteMeasure::dirac(vec![0.2 * m as f64, 0.0, 0.0, 0.0]).unwrap())
            .collect();
        let x0 = [0.0, 1.0, 0.0, 0.0];
        let u = UnionPotential::new(&comps, &k, &x0, 3).unwrap();
        assert!(u.total_mass() <= 1.0);
        assert!(u.value(&k, &[0.2, 0.0, 0.0, 0.0]).unwrap().is_infinite());
        let e = u.supersolution_residual(&k, &params, &[0.5, 0.5, 0.1, 0.0]).unwrap();
        assert!(e.residual <= 1e-8 * 2.0);
        assert!(UnionPotential::new(&comps, &k, &x0, 4).is_err());
        assert!(UnionPotential::new(&comps, &k, &[0.0; 4], 1).is_err());
    }
}
