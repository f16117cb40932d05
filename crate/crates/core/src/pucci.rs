//! Degenerate Pucci operators.
//!
//! For ellipticity constants `0 < λ <= Λ` and an order `1 <= p <= n`:
//!
//! ```text
//! P⁺_{λ,Λ|p}(X) = Σ_{i>n-p} (Λ e_i⁺ − λ e_i⁻)      top p eigenvalues
//! P⁻_{λ,Λ|p}(X) = Σ_{i<=p}  (λ e_i⁺ − Λ e_i⁻)      bottom p eigenvalues
//! ```
//!
//! and, for a p-dimensional subspace `W` with projector `P_W`,
//!
//! ```text
//! P⁺_{λ,Λ|W}(X) = Λ Tr((X_W)⁺) − λ Tr((X_W)⁻),    X_W = P_W X P_W
//! P⁻_{λ,Λ|W}(X) = λ Tr((X_W)⁺) − Λ Tr((X_W)⁻)
//! ```
//!
//! The minimal restricted operator uses the sign convention that makes
//! `P⁻_W(X) = −P⁺_W(−X)` hold. The order-p operators are the supremum
//! (infimum) of the restricted ones over the Grassmannian, attained on the
//! span of the top (bottom) p eigenvectors.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::linalg::{eigen_sorted, spectral_norm, Frame, Mat, SymMat};
use crate::{Error, Result};

/// Absolute tolerance unit, scaled by `max(1, ‖X‖)` where it is applied.
pub const TOL: f64 = 1e-10;

/// `TOL * max(1, ‖X‖)` with the spectral norm.
pub fn scaled_tol(x: &SymMat) -> f64 {
    TOL * spectral_norm(x).unwrap_or(f64::INFINITY).max(1.0)
}

/// Ellipticity constants and order of a degenerate Pucci operator.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Ellipticity {
    lambda: f64,
    big_lambda: f64,
    p: usize,
}

impl Ellipticity {
    pub fn new(lambda: f64, big_lambda: f64, p: usize) -> Result<Self> {
        if !(lambda.is_finite() && big_lambda.is_finite()) || lambda <= 0.0 || big_lambda < lambda {
            return Err(Error::Parameter(format!(
                "ellipticity constants must satisfy 0 < λ <= Λ, got λ = {lambda}, Λ = {big_lambda}"
            )));
        }
        if p == 0 {
            return Err(Error::Parameter("order p must be at least 1".into()));
        }
        Ok(Self {
            lambda,
            big_lambda,
            p,
        })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn big_lambda(&self) -> f64 {
        self.big_lambda
    }

    pub fn p(&self) -> usize {
        self.p
    }

    /// Same order, both constants multiplied by `c > 0`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        Self::new(c * self.lambda, c * self.big_lambda, self.p)
    }

    pub fn with_order(&self, p: usize) -> Result<Self> {
        Self::new(self.lambda, self.big_lambda, p)
    }

    /// `Λ t⁺ − λ t⁻`: the per-eigenvalue weight of the maximal operator.
    #[inline]
    pub fn weight_plus(&self, t: f64) -> f64 {
        if t >= 0.0 {
            self.big_lambda * t
        } else {
            self.lambda * t
        }
    }

    /// `λ t⁺ − Λ t⁻`: the per-eigenvalue weight of the minimal operator.
    #[inline]
    pub fn weight_minus(&self, t: f64) -> f64 {
        if t >= 0.0 {
            self.lambda * t
        } else {
            self.big_lambda * t
        }
    }

    fn check_order(&self, n: usize) -> Result<()> {
        if self.p > n {
            return Err(Error::Parameter(format!(
                "order p = {} exceeds dimension n = {n}",
                self.p
            )));
        }
        Ok(())
    }
}

/// `(X⁺, X⁻)`: the unique positive semidefinite pair with `X = X⁺ − X⁻` and
/// `X⁺ X⁻ = 0`.
pub fn pos_neg_parts(x: &SymMat) -> Result<(SymMat, SymMat)> {
    let s = eigen_sorted(x)?;
    Ok((s.map(|e| e.max(0.0)), s.map(|e| (-e).max(0.0))))
}

/// `X_W = P_W X P_W`.
pub fn project_subspace(x: &SymMat, w: &Frame) -> Result<SymMat> {
    Ok(w.lift(&w.restrict(x)?))
}

/// Maximal operator of order `p`.
pub fn pucci_plus_p(x: &SymMat, ell: &Ellipticity) -> Result<f64> {
    ell.check_order(x.dim())?;
    let s = eigen_sorted(x)?;
    let n = x.dim();
    Ok(s.values[n - ell.p..].iter().map(|&e| ell.weight_plus(e)).sum())
}

/// Minimal operator of order `p`.
pub fn pucci_minus_p(x: &SymMat, ell: &Ellipticity) -> Result<f64> {
    ell.check_order(x.dim())?;
    let s = eigen_sorted(x)?;
    Ok(s.values[..ell.p].iter().map(|&e| ell.weight_minus(e)).sum())
}

/// Standard Pucci maximal operator `M⁺_{λ,Λ} = P⁺_{λ,Λ|n}`.
pub fn pucci_m_plus(x: &SymMat, lambda: f64, big_lambda: f64) -> Result<f64> {
    pucci_plus_p(x, &Ellipticity::new(lambda, big_lambda, x.dim())?)
}

/// Standard Pucci minimal operator `M⁻_{λ,Λ} = P⁻_{λ,Λ|n}`.
pub fn pucci_m_minus(x: &SymMat, lambda: f64, big_lambda: f64) -> Result<f64> {
    pucci_minus_p(x, &Ellipticity::new(lambda, big_lambda, x.dim())?)
}

fn check_frame(x: &SymMat, w: &Frame, ell: &Ellipticity) -> Result<()> {
    if w.ambient_dim() != x.dim() {
        return Err(Error::Dimension(format!(
            "frame lives in R^{} but X is {}x{}",
            w.ambient_dim(),
            x.dim(),
            x.dim()
        )));
    }
    if w.dim() != ell.p {
        return Err(Error::Dimension(format!(
            "frame has dimension {} but the operator has order {}",
            w.dim(),
            ell.p
        )));
    }
    Ok(())
}

// The nonzero spectrum of X_W coincides with that of the p x p matrix BᵀXB.
fn restricted_spectrum(x: &SymMat, w: &Frame) -> Result<Vec<f64>> {
    Ok(eigen_sorted(&w.restrict(x)?)?.values)
}

/// Maximal operator restricted to `W`.
pub fn pucci_plus_w(x: &SymMat, w: &Frame, ell: &Ellipticity) -> Result<f64> {
    check_frame(x, w, ell)?;
    Ok(restricted_spectrum(x, w)?
        .into_iter()
        .map(|e| ell.weight_plus(e))
        .sum())
}

/// Minimal operator restricted to `W`, `λ Tr(X⁺_W) − Λ Tr(X⁻_W)`.
pub fn pucci_minus_w(x: &SymMat, w: &Frame, ell: &Ellipticity) -> Result<f64> {
    check_frame(x, w, ell)?;
    Ok(restricted_spectrum(x, w)?
        .into_iter()
        .map(|e| ell.weight_minus(e))
        .sum())
}

/// `L_{A|W} X = Tr(A_W X_W)`.
pub fn linear_functional(a: &SymMat, w: &Frame, x: &SymMat) -> Result<f64> {
    if a.dim() != x.dim() {
        return Err(Error::Dimension(format!(
            "coefficient is {}x{} but X is {}x{}",
            a.dim(),
            a.dim(),
            x.dim(),
            x.dim()
        )));
    }
    let aw = w.restrict(a)?;
    let xw = w.restrict(x)?;
    Ok(aw.trace_product(&xw))
}

/// The three equivalent trace expressions `(Tr(A_W X_W), Tr(A_W X), Tr(A X_W))`.
pub fn linear_functional_forms(a: &SymMat, w: &Frame, x: &SymMat) -> Result<[f64; 3]> {
    let first = linear_functional(a, w, x)?;
    let aw = project_subspace(a, w)?;
    let xw = project_subspace(x, w)?;
    Ok([first, aw.trace_product(x), a.trace_product(&xw)])
}

fn eigen_frame(x: &SymMat, cols: std::ops::Range<usize>) -> Result<Frame> {
    let s = eigen_sorted(x)?;
    let n = x.dim();
    let idx: Vec<usize> = cols.collect();
    let basis = Mat::from_fn(n, idx.len(), |i, j| s.vectors[(i, idx[j])]);
    Frame::from_orthonormal(basis)
}

/// Span of the eigenvectors of the top `p` eigenvalues; attains the supremum
/// defining `P⁺_{λ,Λ|p}`. Ties follow the eigensolver's column order.
pub fn maximizing_frame(x: &SymMat, p: usize) -> Result<Frame> {
    let n = x.dim();
    if p == 0 || p > n {
        return Err(Error::Parameter(format!("need 1 <= p <= n, got p = {p}, n = {n}")));
    }
    eigen_frame(x, n - p..n)
}

/// Span of the eigenvectors of the bottom `p` eigenvalues; attains the
/// infimum defining `P⁻_{λ,Λ|p}`.
pub fn minimizing_frame(x: &SymMat, p: usize) -> Result<Frame> {
    let n = x.dim();
    if p == 0 || p > n {
        return Err(Error::Parameter(format!("need 1 <= p <= n, got p = {p}, n = {n}")));
    }
    eigen_frame(x, 0..p)
}

/// Running maximum of `P⁺_W(X)` over the given frames.
pub fn sampled_sup<I>(x: &SymMat, ell: &Ellipticity, frames: I) -> Result<f64>
where
    I: IntoIterator<Item = Frame>,
{
    let mut best = f64::NEG_INFINITY;
    for w in frames {
        best = best.max(pucci_plus_w(x, &w, ell)?);
    }
    Ok(best)
}

/// Running minimum of `P⁻_W(X)` over the given frames.
pub fn sampled_inf<I>(x: &SymMat, ell: &Ellipticity, frames: I) -> Result<f64>
where
    I: IntoIterator<Item = Frame>,
{
    let mut best = f64::INFINITY;
    for w in frames {
        best = best.min(pucci_minus_w(x, &w, ell)?);
    }
    Ok(best)
}

/// Deterministic stream of Haar-distributed `p`-frames in `R^n`.
pub fn random_frames(n: usize, p: usize, seed: u64) -> impl Iterator<Item = Frame> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    std::iter::repeat_with(move || Frame::random(n, p, &mut rng).expect("1 <= p <= n"))
}

/// Monte Carlo estimate of `sup_W P⁺_W(X)` from `samples` random frames.
/// Never exceeds `P⁺_{λ,Λ|p}(X)` and is non-decreasing in `samples` for a
/// fixed seed.
pub fn grassmannian_sup_estimate(
    x: &SymMat,
    ell: &Ellipticity,
    samples: usize,
    seed: u64,
) -> Result<f64> {
    if samples == 0 {
        return Err(Error::Parameter("samples must be at least 1".into()));
    }
    ell.check_order(x.dim())?;
    sampled_sup(x, ell, random_frames(x.dim(), ell.p, seed).take(samples))
}

/// Monte Carlo estimate of `inf_W P⁻_W(X)`.
pub fn grassmannian_inf_estimate(
    x: &SymMat,
    ell: &Ellipticity,
    samples: usize,
    seed: u64,
) -> Result<f64> {
    if samples == 0 {
        return Err(Error::Parameter("samples must be at least 1".into()));
    }
    ell.check_order(x.dim())?;
    sampled_inf(x, ell, random_frames(x.dim(), ell.p, seed).take(samples))
}

/// The four members of the chain
/// `P⁻_{(n/p)λ,(n/p)Λ|p} <= M⁻_{λ,Λ} <= M⁺_{λ,Λ} <= P⁺_{(n/p)λ,(n/p)Λ|p}`.
#[derive(Clone, Debug, Serialize)]
pub struct InclusionReport {
    pub p_minus_scaled: f64,
    pub m_minus: f64,
    pub m_plus: f64,
    pub p_plus_scaled: f64,
}

impl InclusionReport {
    /// Largest amount by which any link of the chain is violated (0 if none).
    pub fn max_violation(&self) -> f64 {
        [
            self.p_minus_scaled - self.m_minus,
            self.m_minus - self.m_plus,
            self.m_plus - self.p_plus_scaled,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }

    pub fn holds(&self, tol: f64) -> bool {
        self.max_violation() <= tol
    }
}

pub fn check_inclusions(x: &SymMat, lambda: f64, big_lambda: f64, p: usize) -> Result<InclusionReport> {
    let n = x.dim();
    let ell = Ellipticity::new(lambda, big_lambda, p)?;
    ell.check_order(n)?;
    let scaled = ell.scaled(n as f64 / p as f64)?;
    Ok(InclusionReport {
        p_minus_scaled: pucci_minus_p(x, &scaled)?,
        m_minus: pucci_m_minus(x, lambda, big_lambda)?,
        m_plus: pucci_m_plus(x, lambda, big_lambda)?,
        p_plus_scaled: pucci_plus_p(x, &scaled)?,
    })
}

/// A PSD increment that leaves the top eigenvalue unchanged: `X = diag(1, 0)`,
/// `P = diag(0, 1)`, so `e₂(X + P) − e₂(X) = 0` although `Tr P = 1`.
#[derive(Clone, Debug)]
pub struct EllipticityWitness {
    pub x: SymMat,
    pub increment: SymMat,
    pub gap: f64,
    pub increment_trace: f64,
}

pub fn nonuniform_ellipticity_witness() -> EllipticityWitness {
    witness_scaled(1.0)
}

/// The witness with the increment scaled by `t > 0`.
pub fn witness_scaled(t: f64) -> EllipticityWitness {
    let x = SymMat::diag(&[1.0, 0.0]);
    let increment = SymMat::diag(&[0.0, t]);
    let top = |m: &SymMat| eigen_sorted(m).map(|s| s.values[1]).expect("finite 2x2");
    let gap = top(&(&x + &increment)) - top(&x);
    EllipticityWitness {
        increment_trace: increment.trace(),
        x,
        increment,
        gap,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{random_psd, random_symmetric};
    use rand::Rng;

    fn ell(l: f64, bl: f64, p: usize) -> Ellipticity {
        Ellipticity::new(l, bl, p).unwrap()
    }

    #[test]
    fn ellipticity_validation() {
        assert!(Ellipticity::new(0.0, 1.0, 1).is_err());
        assert!(Ellipticity::new(2.0, 1.0, 1).is_err());
        assert!(Ellipticity::new(1.0, 1.0, 0).is_err());
        assert!(pucci_plus_p(&SymMat::identity(2), &ell(1.0, 1.0, 3)).is_err());
    }

    #[test]
    fn pos_neg_parts_diagonal_and_zero() {
        let (p, m) = pos_neg_parts(&SymMat::diag(&[2.0, -3.0])).unwrap();
        assert_eq!(p, SymMat::diag(&[2.0, 0.0]));
        assert_eq!(m, SymMat::diag(&[0.0, 3.0]));
        let (p, m) = pos_neg_parts(&SymMat::zeros(3)).unwrap();
        assert_eq!(p.max_abs(), 0.0);
        assert_eq!(m.max_abs(), 0.0);
    }

    #[test]
    fn pos_neg_parts_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for n in 1..7 {
            let x = random_symmetric(n, &mut rng);
            let (p, m) = pos_neg_parts(&x).unwrap();
            let tol = scaled_tol(&x);
            assert!((&(&p - &m) - &x).max_abs() <= tol);
            let pm = p.product(&m);
            assert!((0..n).all(|i| (0..n).all(|j| pm[(i, j)].abs() <= tol)));
            for part in [&p, &m] {
                assert!(eigen_sorted(part).unwrap().values[0] >= -1e-10);
            }
        }
    }

    #[test]
    fn projection_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let x = random_symmetric(4, &mut rng);
        let full = Frame::axes(4, &[0, 1, 2, 3]).unwrap();
        assert!((&project_subspace(&x, &full).unwrap() - &x).max_abs() <= 1e-14);

        let e1 = Frame::axes(2, &[0]).unwrap();
        let got = project_subspace(&SymMat::diag(&[1.0, 2.0]), &e1).unwrap();
        assert_eq!(got, SymMat::diag(&[1.0, 0.0]));

        let w = Frame::random(4, 2, &mut rng).unwrap();
        let xw = project_subspace(&x, &w).unwrap();
        let oracle: f64 = (0..2).map(|j| x.quad_form(&w.basis().column(j))).sum();
        assert!((xw.trace() - oracle).abs() <= 1e-10);

        assert!(project_subspace(&SymMat::identity(3), &w).is_err());
    }

    #[test]
    fn order_p_closed_cases() {
        assert_eq!(pucci_plus_p(&SymMat::identity(3), &ell(1.0, 2.0, 2)).unwrap(), 4.0);
        let x = SymMat::diag(&[-1.0, 2.0]);
        assert_eq!(pucci_plus_p(&x, &ell(1.0, 2.0, 1)).unwrap(), 4.0);
        assert_eq!(pucci_minus_p(&-&SymMat::identity(3), &ell(1.0, 2.0, 2)).unwrap(), -4.0);
        assert_eq!(pucci_minus_p(&x, &ell(1.0, 2.0, 1)).unwrap(), -2.0);
    }

    #[test]
    fn restricted_closed_cases() {
        let x = SymMat::diag(&[5.0, -1.0]);
        let e2 = Frame::axes(2, &[1]).unwrap();
        assert_eq!(pucci_plus_w(&x, &e2, &ell(1.0, 1.0, 1)).unwrap(), -1.0);
        assert_eq!(pucci_minus_w(&x, &e2, &ell(1.0, 1.0, 1)).unwrap(), -1.0);
        let e1 = Frame::axes(2, &[0]).unwrap();
        assert_eq!(pucci_minus_w(&x, &e1, &ell(1.0, 2.0, 1)).unwrap(), 5.0);
        assert_eq!(pucci_minus_w(&-&x, &e1, &ell(1.0, 2.0, 1)).unwrap(), -10.0);
        assert!(pucci_plus_w(&x, &e2, &ell(1.0, 1.0, 2)).is_err());
    }

    #[test]
    fn maximizing_frame_attains() {
        let x = SymMat::diag(&[1.0, 2.0, 3.0]);
        let w = maximizing_frame(&x, 2).unwrap();
        let proj = w.projector();
        assert!((&proj - &SymMat::diag(&[0.0, 1.0, 1.0])).max_abs() <= 1e-15);

        let e = ell(1.0, 1.0, 1);
        let w = maximizing_frame(&SymMat::identity(3), 1).unwrap();
        assert!((pucci_plus_w(&SymMat::identity(3), &w, &e).unwrap() - 1.0).abs() <= 1e-12);

        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..50 {
            let n = rng.gen_range(2..7);
            let p = rng.gen_range(1..=n);
            let x = random_symmetric(n, &mut rng);
            let e = ell(0.5, 1.7, p);
            let exact = pucci_plus_p(&x, &e).unwrap();
            let w = maximizing_frame(&x, p).unwrap();
            assert!((pucci_plus_w(&x, &w, &e).unwrap() - exact).abs() <= scaled_tol(&x));
            let w = minimizing_frame(&x, p).unwrap();
            let exact = pucci_minus_p(&x, &e).unwrap();
            assert!((pucci_minus_w(&x, &w, &e).unwrap() - exact).abs() <= scaled_tol(&x));
        }
    }

    #[test]
    fn grassmannian_estimates() {
        let e = ell(1.0, 1.0, 1);
        assert_eq!(grassmannian_sup_estimate(&SymMat::zeros(3), &e, 10, 0).unwrap(), 0.0);
        assert!(grassmannian_sup_estimate(&SymMat::zeros(3), &e, 0, 0).is_err());

        let x = SymMat::diag(&[0.0, 0.0, 1.0]);
        let w = maximizing_frame(&x, 1).unwrap();
        assert_eq!(sampled_sup(&x, &e, [w]).unwrap(), 1.0);

        let est = grassmannian_sup_estimate(&x, &e, 100_000, 4).unwrap();
        assert!(est <= 1.0 + 1e-10);
        assert!(est >= 1.0 - 1e-3, "estimate {est}");

        let mut last = f64::NEG_INFINITY;
        for s in [1, 2, 5, 10, 50, 200] {
            let v = grassmannian_sup_estimate(&x, &e, s, 17).unwrap();
            assert!(v >= last);
            last = v;
        }
    }

    #[test]
    fn inclusion_examples() {
        let r = check_inclusions(&SymMat::identity(2), 1.0, 1.0, 1).unwrap();
        assert_eq!(
            [r.p_minus_scaled, r.m_minus, r.m_plus, r.p_plus_scaled],
            [2.0, 2.0, 2.0, 2.0]
        );
        let r = check_inclusions(&SymMat::diag(&[1.0, -1.0]), 1.0, 1.0, 1).unwrap();
        assert_eq!(
            [r.p_minus_scaled, r.m_minus, r.m_plus, r.p_plus_scaled],
            [-2.0, 0.0, 0.0, 2.0]
        );
        assert!(r.holds(0.0));
    }

    #[test]
    fn witness() {
        let w = nonuniform_ellipticity_witness();
        assert_eq!(w.gap, 0.0);
        assert_eq!(w.increment_trace, 1.0);
        let e = ell(1.0, 1.0, 1);
        let before = pucci_plus_p(&w.x, &e).unwrap();
        let after = pucci_plus_p(&(&w.x + &w.increment), &e).unwrap();
        assert!(after >= before);
        for t in [0.1, 0.5, 0.999] {
            assert_eq!(witness_scaled(t).gap, 0.0);
        }
    }

    #[test]
    fn degenerate_ellipticity_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..100 {
            let n = rng.gen_range(2..6);
            let p = rng.gen_range(1..=n);
            let x = random_symmetric(n, &mut rng);
            let pp = random_psd(n, rng.gen_range(1..=n), &mut rng);
            let e = ell(0.3, 2.0, p);
            let xp = &x + &pp;
            assert!(pucci_plus_p(&xp, &e).unwrap() >= pucci_plus_p(&x, &e).unwrap() - 1e-10);
            assert!(pucci_minus_p(&xp, &e).unwrap() >= pucci_minus_p(&x, &e).unwrap() - 1e-10);
        }
    }
}
