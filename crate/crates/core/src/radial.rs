//! Closed-form radial profiles `u(x) = g(|x|)` and their residuals against
//! the maximal operator.
//!
//! For a radial function the Hessian at `|x| = r > 0` has eigenvalue `g''(r)`
//! in the radial direction and `g'(r)/r` with multiplicity `n − 1` on the
//! tangent sphere, and `|Du| = |g'(r)|`.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::Serialize;

use crate::linalg::SymMat;
use crate::pucci::{pucci_plus_p, Ellipticity};
use crate::{Error, Result};

/// Coefficients of the model equation `P⁺_{λ,Λ|p}(D²u) + b|Du| − cu = f`
/// on a domain inside the ball of radius `delta` in `R^n`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ModelParams {
    pub n: usize,
    pub lambda: f64,
    pub big_lambda: f64,
    pub p: usize,
    pub b: f64,
    pub c: f64,
    pub delta: f64,
    /// `‖f⁻‖_∞`.
    pub f_minus_norm: f64,
}

impl ModelParams {
    /// Pure second-order model (`b = c = 0`, `f = 0`) on the unit ball.
    pub fn pure(n: usize, lambda: f64, big_lambda: f64, p: usize) -> Self {
        Self {
            n,
            lambda,
            big_lambda,
            p,
            b: 0.0,
            c: 0.0,
            delta: 1.0,
            f_minus_norm: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ell = self.ellipticity()?;
        if ell.p() > self.n {
            return Err(Error::Parameter(format!(
                "order p = {} exceeds dimension n = {}",
                self.p, self.n
            )));
        }
        let nonneg = |v: f64| v.is_finite() && v >= 0.0;
        if !nonneg(self.b) || !nonneg(self.c) || !nonneg(self.f_minus_norm) {
            return Err(Error::Parameter(
                "b, c and ‖f⁻‖ must be finite and non-negative".into(),
            ));
        }
        if !(self.delta.is_finite() && self.delta > 0.0) {
            return Err(Error::Parameter(format!("domain radius must be positive, got {}", self.delta)));
        }
        Ok(())
    }

    pub fn ellipticity(&self) -> Result<Ellipticity> {
        Ellipticity::new(self.lambda, self.big_lambda, self.p)
    }

    /// `λp − bδ`; positive exactly when the gradient term is dominated.
    pub fn margin(&self) -> f64 {
        self.lambda * self.p as f64 - self.b * self.delta
    }
}

/// `α* = (λ/Λ)(p − 1) − 1`. May be negative.
pub fn alpha_star(lambda: f64, big_lambda: f64, p: usize) -> f64 {
    lambda / big_lambda * (p as f64 - 1.0) - 1.0
}

/// Values of `|α*|` below this are treated as the logarithmic case.
const ALPHA_ZERO: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum ProfileKind {
    /// `r^{−α}`, `α > 0`.
    Power { alpha: f64 },
    /// `log(R / r)`.
    Log { radius: f64 },
    /// `cos(ε/2)` for `r <= π/2 − ε/2`, `sin r` beyond.
    SineCap { eps: f64 },
    /// `offset − γ r²`.
    QuadraticBarrier { gamma: f64, offset: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RadialProfile {
    pub kind: ProfileKind,
    pub dim: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RadialSpectrum {
    pub radial: f64,
    pub tangential: f64,
    pub tangential_multiplicity: usize,
}

/// One-sided limits at the gluing sphere of the sine cap.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct KinkLimits {
    pub radius: f64,
    pub value_inner: f64,
    pub value_outer: f64,
    pub slope_inner: f64,
    pub slope_outer: f64,
    pub curvature_inner: f64,
    pub curvature_outer: f64,
}

impl RadialProfile {
    pub fn new(kind: ProfileKind, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Parameter("dimension must be at least 1".into()));
        }
        let ok = match kind {
            ProfileKind::Power { alpha } => alpha.is_finite() && alpha > 0.0,
            ProfileKind::Log { radius } => radius.is_finite() && radius > 0.0,
            ProfileKind::SineCap { eps } => eps > 0.0 && eps < PI / 6.0,
            ProfileKind::QuadraticBarrier { gamma, offset } => {
                gamma.is_finite() && gamma >= 0.0 && offset.is_finite()
            }
        };
        if !ok {
            return Err(Error::Parameter(format!("invalid radial profile {kind:?}")));
        }
        Ok(Self { kind, dim })
    }

    fn check_radius(&self, r: f64) -> Result<()> {
        let allows_origin = matches!(
            self.kind,
            ProfileKind::QuadraticBarrier { .. } | ProfileKind::SineCap { .. }
        );
        if !r.is_finite() || r < 0.0 || (r == 0.0 && !allows_origin) {
            return Err(Error::Singular(format!("radius {r} outside the smooth domain")));
        }
        Ok(())
    }

    /// Radius of the gluing sphere, for the sine cap only.
    pub fn kink_radius(&self) -> Option<f64> {
        match self.kind {
            ProfileKind::SineCap { eps } => Some(FRAC_PI_2 - eps / 2.0),
            _ => None,
        }
    }

    fn check_smooth(&self, r: f64) -> Result<()> {
        self.check_radius(r)?;
        if self.kink_radius() == Some(r) {
            return Err(Error::Singular(format!("radius {r} is on the gluing sphere")));
        }
        Ok(())
    }

    pub fn value(&self, r: f64) -> Result<f64> {
        self.check_radius(r)?;
        Ok(match self.kind {
            ProfileKind::Power { alpha } => r.powf(-alpha),
            ProfileKind::Log { radius } => (radius / r).ln(),
            ProfileKind::SineCap { eps } => {
                if r <= FRAC_PI_2 - eps / 2.0 {
                    (eps / 2.0).cos()
                } else {
                    r.sin()
                }
            }
            ProfileKind::QuadraticBarrier { gamma, offset } => offset - gamma * r * r,
        })
    }

    /// `g'(r)`.
    pub fn slope(&self, r: f64) -> Result<f64> {
        self.check_smooth(r)?;
        Ok(match self.kind {
            ProfileKind::Power { alpha } => -alpha * r.powf(-alpha - 1.0),
            ProfileKind::Log { .. } => -1.0 / r,
            ProfileKind::SineCap { eps } => {
                if r < FRAC_PI_2 - eps / 2.0 {
                    0.0
                } else {
                    r.cos()
                }
            }
            ProfileKind::QuadraticBarrier { gamma, .. } => -2.0 * gamma * r,
        })
    }

    /// `g''(r)`.
    pub fn curvature(&self, r: f64) -> Result<f64> {
        self.check_smooth(r)?;
        Ok(match self.kind {
            ProfileKind::Power { alpha } => alpha * (alpha + 1.0) * r.powf(-alpha - 2.0),
            ProfileKind::Log { .. } => 1.0 / (r * r),
            ProfileKind::SineCap { eps } => {
                if r < FRAC_PI_2 - eps / 2.0 {
                    0.0
                } else {
                    -r.sin()
                }
            }
            ProfileKind::QuadraticBarrier { gamma, .. } => -2.0 * gamma,
        })
    }

    /// Hessian eigenstructure at radius `r`.
    pub fn hessian_spectrum(&self, r: f64) -> Result<RadialSpectrum> {
        let radial = self.curvature(r)?;
        let tangential = match self.kind {
            // g'(r)/r is constant for the barrier, also at the origin.
            ProfileKind::QuadraticBarrier { gamma, .. } => -2.0 * gamma,
            ProfileKind::SineCap { eps } if r < FRAC_PI_2 - eps / 2.0 => 0.0,
            _ => self.slope(r)? / r,
        };
        Ok(RadialSpectrum {
            radial,
            tangential,
            tangential_multiplicity: self.dim - 1,
        })
    }

    /// Diagonal Hessian in a frame whose first axis is radial.
    pub fn hessian(&self, r: f64) -> Result<SymMat> {
        let s = self.hessian_spectrum(r)?;
        let mut d = vec![s.tangential; self.dim];
        d[0] = s.radial;
        Ok(SymMat::diag(&d))
    }

    pub fn gradient_norm(&self, r: f64) -> Result<f64> {
        if r == 0.0 {
            self.check_radius(r)?;
            return Ok(0.0);
        }
        Ok(self.slope(r)?.abs())
    }

    /// Value and slope limits from both sides of the sine-cap gluing sphere.
    pub fn kink_limits(&self) -> Result<KinkLimits> {
        let ProfileKind::SineCap { eps } = self.kind else {
            return Err(Error::Parameter("only the sine cap has a gluing sphere".into()));
        };
        let r0 = FRAC_PI_2 - eps / 2.0;
        Ok(KinkLimits {
            radius: r0,
            value_inner: (eps / 2.0).cos(),
            value_outer: r0.sin(),
            slope_inner: 0.0,
            slope_outer: r0.cos(),
            curvature_inner: 0.0,
            curvature_outer: -r0.sin(),
        })
    }
}

/// `P⁺_{λ,Λ|p}(D²g) + b|Dg| − c g` for a radial profile at radius `r`,
/// evaluated through the operator on the assembled diagonal Hessian.
pub fn radial_operator(profile: &RadialProfile, params: &ModelParams, r: f64) -> Result<f64> {
    params.validate()?;
    if profile.dim != params.n {
        return Err(Error::Dimension(format!(
            "profile lives in R^{} but the model in R^{}",
            profile.dim, params.n
        )));
    }
    let h = profile.hessian(r)?;
    let second = pucci_plus_p(&h, &params.ellipticity()?)?;
    let first = params.b * profile.gradient_norm(r)?;
    let zeroth = if params.c != 0.0 {
        params.c * profile.value(r)?
    } else {
        0.0
    };
    Ok(second + first - zeroth)
}

/// The fundamental solution `Φ_{α*}`: `r^{−α*}` for `α* > 0`, `log(δ/r)`
/// for `α* = 0`, with the model radius `δ` as the logarithm's scale.
pub fn fundamental_profile(params: &ModelParams) -> Result<RadialProfile> {
    params.validate()?;
    let a = alpha_star(params.lambda, params.big_lambda, params.p);
    if a < -ALPHA_ZERO {
        return Err(Error::Parameter(format!("α* = {a} is negative; no fundamental solution")));
    }
    let kind = if a.abs() <= ALPHA_ZERO {
        ProfileKind::Log {
            radius: params.delta,
        }
    } else {
        ProfileKind::Power { alpha: a }
    };
    RadialProfile::new(kind, params.n)
}

/// `P⁺_{λ,Λ|p}(D²Φ_{α*})` at radius `r`; vanishes for every admissible
/// parameter set.
pub fn fundamental_residual(params: &ModelParams, r: f64) -> Result<f64> {
    if params.b != 0.0 || params.c != 0.0 {
        return Err(Error::Parameter("fundamental solutions are for b = c = 0".into()));
    }
    radial_operator(&fundamental_profile(params)?, params, r)
}

/// `P⁺_{λ,Λ|p}(D² r^{−α})`; negative for `0 < α < α*`.
pub fn power_residual(params: &ModelParams, alpha: f64, r: f64) -> Result<f64> {
    let profile = RadialProfile::new(ProfileKind::Power { alpha }, params.n)?;
    let pure = ModelParams {
        b: 0.0,
        c: 0.0,
        ..*params
    };
    radial_operator(&profile, &pure, r)
}

/// Evaluation of the maximum-principle counterexample at one radius.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct CounterexampleReport {
    pub eps: f64,
    pub radius: f64,
    pub delta: f64,
    /// Gradient coefficient `λp/(δ − ε)`.
    pub b: f64,
    /// `P⁺(D²u) + b|Du|` at `radius`.
    pub subsolution_quantity: f64,
    /// `(p/r)(Λ(cos r)⁺ − λ(cos r)⁻ + λ|cos r|)`.
    pub lower_bound: f64,
    pub interior_max: f64,
    pub boundary_max: f64,
    pub violation_margin: f64,
    /// `bδ/(λp) = δ/(δ − ε)`.
    pub b_delta_over_lambda_p: f64,
}

impl CounterexampleReport {
    pub fn subsolution_holds(&self, tol: f64) -> bool {
        self.subsolution_quantity >= -tol && self.subsolution_quantity >= self.lower_bound - tol
    }
}

/// Gradient coefficient that makes the sine cap a subsolution.
pub fn counterexample_b(eps: f64, lambda: f64, p: usize) -> f64 {
    let delta = FRAC_PI_2 + eps / 2.0;
    lambda * p as f64 / (delta - eps)
}

/// Checks the sine-cap subsolution on the closed annulus
/// `π/2 − ε/2 <= r <= π/2 + ε/2` (one-sided derivatives at the inner edge).
pub fn counterexample_check(
    eps: f64,
    lambda: f64,
    big_lambda: f64,
    p: usize,
    n: usize,
    r: f64,
) -> Result<CounterexampleReport> {
    if !(eps > 0.0 && eps < PI / 6.0) {
        return Err(Error::Parameter(format!("ε = {eps} outside (0, π/6)")));
    }
    if p == 0 || p >= n {
        return Err(Error::Parameter(format!("counterexample needs 1 <= p < n, got p = {p}, n = {n}")));
    }
    let ell = Ellipticity::new(lambda, big_lambda, p)?;
    let inner = FRAC_PI_2 - eps / 2.0;
    let delta = FRAC_PI_2 + eps / 2.0;
    if !(inner..=delta).contains(&r) {
        return Err(Error::Parameter(format!("radius {r} outside [{inner}, {delta}]")));
    }
    let b = counterexample_b(eps, lambda, p);
    let cos = r.cos();
    let mut d = vec![cos / r; n];
    d[0] = -r.sin();
    let quantity = pucci_plus_p(&SymMat::diag(&d), &ell)? + b * cos.abs();
    let pf = p as f64;
    let lower_bound = pf / r * (big_lambda * cos.max(0.0) - lambda * (-cos).max(0.0) + lambda * cos.abs());
    let boundary_max = (eps / 2.0).cos();
    Ok(CounterexampleReport {
        eps,
        radius: r,
        delta,
        b,
        subsolution_quantity: quantity,
        lower_bound,
        interior_max: 1.0,
        boundary_max,
        violation_margin: 1.0 - boundary_max,
        b_delta_over_lambda_p: b * delta / (lambda * pf),
    })
}

/// The sine cap restricted to the thin shell around `|x| = π/2`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct ShellReport {
    pub eps: f64,
    pub volume: f64,
    pub interior_max: f64,
    pub boundary_max: f64,
}

/// Volume of the unit ball in `R^n`.
pub fn unit_ball_volume(n: usize) -> f64 {
    // V_0 = 1, V_1 = 2, V_n = 2π/n V_{n−2}.
    let mut v = if n % 2 == 0 { 1.0 } else { 2.0 };
    let mut k = if n % 2 == 0 { 2 } else { 3 };
    while k <= n {
        v *= 2.0 * PI / k as f64;
        k += 2;
    }
    v
}

pub fn narrow_shell(eps: f64, n: usize) -> Result<ShellReport> {
    let profile = RadialProfile::new(ProfileKind::SineCap { eps }, n)?;
    let inner = FRAC_PI_2 - eps / 2.0;
    let outer = FRAC_PI_2 + eps / 2.0;
    let ni = n as i32;
    Ok(ShellReport {
        eps,
        volume: unit_ball_volume(n) * (outer.powi(ni) - inner.powi(ni)),
        interior_max: profile.value(FRAC_PI_2)?,
        boundary_max: profile.value(inner)?.max(profile.value(outer)?),
    })
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct BarrierEval {
    pub gamma: f64,
    pub value: f64,
    pub residual: f64,
}

/// The quadratic barrier `v = γ(δ² − r²) + L` with `γ = ‖f⁻‖/(2(λp − bδ))`;
/// `residual = P⁺(D²v) + b|Dv| + ‖f⁻‖`, non-positive on `[0, δ]`.
pub fn barrier_value_and_residual(params: &ModelParams, r: f64, boundary_limsup: f64) -> Result<BarrierEval> {
    params.validate()?;
    let margin = params.margin();
    if margin <= 0.0 {
        return Err(Error::Parameter(format!(
            "barrier needs bδ < λp, got λp − bδ = {margin}"
        )));
    }
    if !(0.0..=params.delta).contains(&r) {
        return Err(Error::Parameter(format!("radius {r} outside [0, δ]")));
    }
    let gamma = params.f_minus_norm / (2.0 * margin);
    let profile = RadialProfile::new(
        ProfileKind::QuadraticBarrier {
            gamma,
            offset: gamma * params.delta * params.delta + boundary_limsup,
        },
        params.n,
    )?;
    let pure = ModelParams { c: 0.0, ..*params };
    Ok(BarrierEval {
        gamma,
        value: profile.value(r)?,
        residual: radial_operator(&profile, &pure, r)? + params.f_minus_norm,
    })
}

/// The constant `C` of the a priori bound `sup u <= limsup u + C‖f⁻‖`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct MpConstant {
    pub value: f64,
    /// Auxiliary `ε̂` of the zero-order case; `None` when `c = 0`.
    pub eps_hat: Option<f64>,
}

/// `C` for `c > 0` at a given auxiliary `ε̂ > 0`.
pub fn mp_constant_with(params: &ModelParams, eps_hat: f64) -> Result<f64> {
    params.validate()?;
    if params.c <= 0.0 {
        return Err(Error::Parameter("the ε̂ form of C needs c > 0".into()));
    }
    if !(eps_hat.is_finite() && eps_hat > 0.0) {
        return Err(Error::Parameter(format!("ε̂ must be positive, got {eps_hat}")));
    }
    let m = params.margin();
    let (pos, neg) = (m.max(0.0), (-m).max(0.0));
    let d2 = params.delta * params.delta;
    Ok((d2 + 2.0 / params.c * neg + eps_hat) / (2.0 * pos + params.c * eps_hat))
}

/// `C = δ²/(2(λp − bδ))` for `c = 0`; for `c > 0` the ε̂-dependent constant
/// minimized over a log grid of `ε̂ ∈ [1e−6, 1e6]`.
pub fn mp_constant(params: &ModelParams) -> Result<MpConstant> {
    params.validate()?;
    if params.c == 0.0 {
        let m = params.margin();
        if m <= 0.0 {
            return Err(Error::Parameter(format!(
                "bδ >= λp (λp − bδ = {m}); no maximum principle constant"
            )));
        }
        return Ok(MpConstant {
            value: params.delta * params.delta / (2.0 * m),
            eps_hat: None,
        });
    }
    const STEPS: usize = 241;
    let mut best = (f64::INFINITY, 0.0);
    for k in 0..STEPS {
        let e = 10f64.powf(-6.0 + 12.0 * k as f64 / (STEPS - 1) as f64);
        let v = mp_constant_with(params, e)?;
        if v < best.0 {
            best = (v, e);
        }
    }
    Ok(MpConstant {
        value: best.0,
        eps_hat: Some(best.1),
    })
}

/// Barrier for `c > 0`:
/// `v = γ(δ² + (2/c)(λp − bδ)⁻ + ε̂ − r²) + L⁺`, `γ = ‖f⁻‖/(2(λp − bδ)⁺ + cε̂)`;
/// `residual = P⁺(D²v) + b|Dv| − cv + ‖f⁻‖`.
pub fn barrier_c_value(
    params: &ModelParams,
    eps_hat: f64,
    r: f64,
    boundary_limsup_plus: f64,
) -> Result<BarrierEval> {
    params.validate()?;
    if params.c <= 0.0 {
        return Err(Error::Parameter(
            "c = 0: use barrier_value_and_residual instead".into(),
        ));
    }
    if !(eps_hat.is_finite() && eps_hat > 0.0) {
        return Err(Error::Parameter(format!("ε̂ must be positive, got {eps_hat}")));
    }
    if boundary_limsup_plus < 0.0 {
        return Err(Error::Parameter("boundary limsup of u⁺ cannot be negative".into()));
    }
    if !(0.0..=params.delta).contains(&r) {
        return Err(Error::Parameter(format!("radius {r} outside [0, δ]")));
    }
    let m = params.margin();
    let (pos, neg) = (m.max(0.0), (-m).max(0.0));
    let gamma = params.f_minus_norm / (2.0 * pos + params.c * eps_hat);
    let offset = gamma * (params.delta * params.delta + 2.0 / params.c * neg + eps_hat)
        + boundary_limsup_plus;
    let profile = RadialProfile::new(ProfileKind::QuadraticBarrier { gamma, offset }, params.n)?;
    Ok(BarrierEval {
        gamma,
        value: profile.value(r)?,
        residual: radial_operator(&profile, params, r)? + params.f_minus_norm,
    })
}
