//! Randomized sweeps over the algebraic properties of the degenerate Pucci
//! operators: duality, positive homogeneity, the sub/superadditivity chains,
//! monotonicity in the ellipticity interval, degenerate ellipticity, the
//! sup/inf representation and the inclusions between uniformly elliptic and
//! order-p operators. Each property records the worst violation seen.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::linalg::{random_psd, random_symmetric, spectral_norm, Frame, SymMat};
use crate::pucci::{
    check_inclusions, maximizing_frame, minimizing_frame, pucci_minus_p, pucci_minus_w,
    pucci_plus_p, pucci_plus_w, Ellipticity,
};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, Serialize)]
pub struct SweepConfig {
    pub samples: usize,
    pub n_min: usize,
    pub n_max: usize,
    pub seed: u64,
    /// Random frames tried per matrix for the representation check.
    pub frames_per_matrix: usize,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            samples: 1000,
            n_min: 2,
            n_max: 6,
            seed: 7,
            frames_per_matrix: 8,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct PropertyResult {
    pub name: &'static str,
    pub checks: usize,
    pub max_violation: f64,
    pub tolerance: f64,
    pub passed: bool,
}

/// The matrix behind the worst normalized violation of a failing property.
#[derive(Clone, Debug, Serialize)]
pub struct Offender {
    pub property: &'static str,
    pub violation: f64,
    pub matrix: Vec<Vec<f64>>,
    pub p: usize,
    pub lambda: f64,
    pub big_lambda: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct PropertyReport {
    pub config: SweepConfig,
    pub properties: Vec<PropertyResult>,
    pub max_violation: f64,
    pub passed: bool,
    pub offender: Option<Offender>,
}

struct Tracker {
    results: Vec<PropertyResult>,
    offender: Option<Offender>,
}

impl Tracker {
    fn new(spec: &[(&'static str, f64)]) -> Self {
        Self {
            results: spec
                .iter()
                .map(|&(name, tolerance)| PropertyResult {
                    name,
                    checks: 0,
                    max_violation: 0.0,
                    tolerance,
                    passed: true,
                })
                .collect(),
            offender: None,
        }
    }

    fn record(&mut self, idx: usize, violation: f64, ctx: &Sample) {
        let r = &mut self.results[idx];
        r.checks += 1;
        // NaN counts as a failure.
        let v = if violation.is_nan() { f64::INFINITY } else { violation.max(0.0) };
        if v > r.max_violation {
            r.max_violation = v;
        }
        if v > r.tolerance {
            r.passed = false;
            let worse = self
                .offender
                .as_ref()
                .is_none_or(|o| v > o.violation);
            if worse {
                self.offender = Some(Offender {
                    property: r.name,
                    violation: v,
                    matrix: ctx.x.to_rows(),
                    p: ctx.ell.p(),
                    lambda: ctx.ell.lambda(),
                    big_lambda: ctx.ell.big_lambda(),
                });
            }
        }
    }
}

struct Sample {
    x: SymMat,
    ell: Ellipticity,
}

const DUALITY: usize = 0;
const HOMOGENEITY: usize = 1;
const SUBADDITIVITY: usize = 2;
const SUPERADDITIVITY: usize = 3;
const INTERVAL: usize = 4;
const DEGENERATE: usize = 5;
const W_DUALITY: usize = 6;
const W_HOMOGENEITY: usize = 7;
const W_SUBADDITIVITY: usize = 8;
const W_SUPERADDITIVITY: usize = 9;
const W_INTERVAL: usize = 10;
const W_DEGENERATE: usize = 11;
const ATTAINMENT: usize = 12;
const SAMPLED_BOUND: usize = 13;
const INCLUSIONS: usize = 14;

const PROPERTY_TABLE: [(&str, f64); 15] = [
    ("duality", 1e-12),
    ("positive_homogeneity", 1e-10),
    ("subadditivity_chain", 1e-9),
    ("superadditivity_chain", 1e-9),
    ("ellipticity_interval_monotonicity", 1e-10),
    ("degenerate_ellipticity", 1e-10),
    ("restricted_duality", 1e-12),
    ("restricted_positive_homogeneity", 1e-10),
    ("restricted_subadditivity_chain", 1e-9),
    ("restricted_superadditivity_chain", 1e-9),
    ("restricted_ellipticity_interval_monotonicity", 1e-10),
    ("restricted_degenerate_ellipticity", 1e-10),
    ("maximizing_frame_attainment", 1e-10),
    ("sampled_frames_below_order_p", 1e-10),
    ("uniformly_elliptic_inclusions", 1e-10),
];

/// Runs every property on `samples` random draws. Violations are measured in
/// units of `max(1, ‖X‖ + ‖Y‖ + ‖P‖)` so the tolerances are scale-free.
pub fn run_sweep(cfg: &SweepConfig) -> Result<PropertyReport> {
    if cfg.samples == 0 {
        return Err(Error::Parameter("samples must be at least 1".into()));
    }
    if cfg.n_min == 0 || cfg.n_min > cfg.n_max {
        return Err(Error::Parameter(format!(
            "need 1 <= n_min <= n_max, got {}..{}",
            cfg.n_min, cfg.n_max
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut t = Tracker::new(&PROPERTY_TABLE);
    for _ in 0..cfg.samples {
        let n = rng.gen_range(cfg.n_min..=cfg.n_max);
        let p = rng.gen_range(1..=n);
        let lambda = rng.gen_range(0.1..2.0);
        let big_lambda = lambda + rng.gen_range(0.0..3.0);
        let ell = Ellipticity::new(lambda, big_lambda, p)?;
        let wide = Ellipticity::new(
            lambda * rng.gen_range(0.2..1.0),
            big_lambda * rng.gen_range(1.0..3.0),
            p,
        )?;
        let x = scaled_draw(n, &mut rng);
        let y = scaled_draw(n, &mut rng);
        let psd = random_psd(n, rng.gen_range(1..=n), &mut rng);
        let c = rng.gen_range(0.0..5.0);
        let w = Frame::random(n, p, &mut rng)?;
        check_sample(&mut t, &Sample { x, ell }, &y, &psd, c, &wide, &w, cfg, &mut rng)?;
    }
    let max_violation = t.results.iter().fold(0.0f64, |a, r| a.max(r.max_violation));
    let passed = t.results.iter().all(|r| r.passed);
    Ok(PropertyReport {
        config: *cfg,
        properties: t.results,
        max_violation,
        passed,
        offender: t.offender,
    })
}

/// Checks every property on one caller-supplied matrix (with fixed companion
/// draws from `seed`); used to vet matrices read from files.
pub fn check_matrix(x: &SymMat, seed: u64) -> Result<PropertyReport> {
    let n = x.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cfg = SweepConfig {
        samples: 1,
        n_min: n,
        n_max: n,
        seed,
        frames_per_matrix: 32,
    };
    let mut t = Tracker::new(&PROPERTY_TABLE);
    for p in 1..=n {
        let ell = Ellipticity::new(0.5, 2.0, p)?;
        let wide = Ellipticity::new(0.25, 3.0, p)?;
        let y = random_symmetric(n, &mut rng);
        let psd = random_psd(n, n, &mut rng);
        let w = Frame::random(n, p, &mut rng)?;
        check_sample(&mut t, &Sample { x: x.clone(), ell }, &y, &psd, 1.5, &wide, &w, &cfg, &mut rng)?;
    }
    let max_violation = t.results.iter().fold(0.0f64, |a, r| a.max(r.max_violation));
    let passed = t.results.iter().all(|r| r.passed);
    Ok(PropertyReport {
        config: cfg,
        properties: t.results,
        max_violation,
        passed,
        offender: t.offender,
    })
}

// Mix of well-spread, low-rank and rescaled matrices.
fn scaled_draw(n: usize, rng: &mut ChaCha8Rng) -> SymMat {
    match rng.gen_range(0..4) {
        0 => random_symmetric(n, rng),
        1 => random_symmetric(n, rng).scale(10f64.powf(rng.gen_range(-3.0..3.0))),
        2 => {
            let r = rng.gen_range(1..=n);
            &random_psd(n, r, rng) - &random_psd(n, rng.gen_range(1..=n), rng)
        }
        _ => {
            // Repeated eigenvalues.
            let q = Frame::random(n, n, rng).expect("square frame");
            let vals: Vec<f64> = (0..n).map(|i| ((i / 2) as f64) - 1.0).collect();
            SymMat::congruence_diag(q.basis(), &vals)
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn check_sample(
    t: &mut Tracker,
    s: &Sample,
    y: &SymMat,
    psd: &SymMat,
    c: f64,
    wide: &Ellipticity,
    w: &Frame,
    cfg: &SweepConfig,
    rng: &mut ChaCha8Rng,
) -> Result<()> {
    let x = &s.x;
    let ell = &s.ell;
    let nx = spectral_norm(x)?;
    let scale = (nx + spectral_norm(y)? + spectral_norm(psd)?).max(1.0);
    let sx = nx.max(1.0);

    // Order-p operators.
    let plus = |m: &SymMat| pucci_plus_p(m, ell);
    let minus = |m: &SymMat| pucci_minus_p(m, ell);
    let px = plus(x)?;
    let mx = minus(x)?;
    let py = plus(y)?;
    let my = minus(y)?;
    let xy = x + y;
    let pxy = plus(&xy)?;
    let mxy = minus(&xy)?;

    t.record(DUALITY, (mx + plus(&-x)?).abs() / sx, s);
    let cx = x.scale(c);
    let hom = (plus(&cx)? - c * px).abs().max((minus(&cx)? - c * mx).abs());
    t.record(HOMOGENEITY, hom / (c.max(1.0) * sx), s);
    let sub = (px + my - pxy).max(pxy - px - py);
    t.record(SUBADDITIVITY, sub / scale, s);
    let sup = (mx + my - mxy).max(mxy - px - my);
    t.record(SUPERADDITIVITY, sup / scale, s);
    let interval = [
        pucci_minus_p(x, wide)? - mx,
        mx - px,
        px - pucci_plus_p(x, wide)?,
    ]
    .into_iter()
    .fold(f64::NEG_INFINITY, f64::max);
    t.record(INTERVAL, interval / sx, s);
    let xp = x + psd;
    let degenerate = (px - plus(&xp)?).max(mx - minus(&xp)?);
    t.record(DEGENERATE, degenerate / scale, s);

    // The same properties with W fixed.
    let wplus = |m: &SymMat| pucci_plus_w(m, w, ell);
    let wminus = |m: &SymMat| pucci_minus_w(m, w, ell);
    let px_w = wplus(x)?;
    let mx_w = wminus(x)?;
    let py_w = wplus(y)?;
    let my_w = wminus(y)?;
    let pxy_w = wplus(&xy)?;
    let mxy_w = wminus(&xy)?;
    t.record(W_DUALITY, (mx_w + wplus(&-x)?).abs() / sx, s);
    let hom = (wplus(&cx)? - c * px_w).abs().max((wminus(&cx)? - c * mx_w).abs());
    t.record(W_HOMOGENEITY, hom / (c.max(1.0) * sx), s);
    t.record(
        W_SUBADDITIVITY,
        (px_w + my_w - pxy_w).max(pxy_w - px_w - py_w) / scale,
        s,
    );
    t.record(
        W_SUPERADDITIVITY,
        (mx_w + my_w - mxy_w).max(mxy_w - px_w - my_w) / scale,
        s,
    );
    let interval = [
        pucci_minus_w(x, w, wide)? - mx_w,
        mx_w - px_w,
        px_w - pucci_plus_w(x, w, wide)?,
    ]
    .into_iter()
    .fold(f64::NEG_INFINITY, f64::max);
    t.record(W_INTERVAL, interval / sx, s);
    t.record(
        W_DEGENERATE,
        (px_w - wplus(&xp)?).max(mx_w - wminus(&xp)?) / scale,
        s,
    );

    // Representation: the extremal frames attain, random frames stay inside.
    let wmax = maximizing_frame(x, ell.p())?;
    let wmin = minimizing_frame(x, ell.p())?;
    let attain = (pucci_plus_w(x, &wmax, ell)? - px)
        .abs()
        .max((pucci_minus_w(x, &wmin, ell)? - mx).abs());
    t.record(ATTAINMENT, attain / sx, s);
    let mut excess = px_w - px;
    excess = excess.max(mx - mx_w);
    for _ in 0..cfg.frames_per_matrix {
        let v = Frame::random(x.dim(), ell.p(), rng)?;
        excess = excess.max(pucci_plus_w(x, &v, ell)? - px);
        excess = excess.max(mx - pucci_minus_w(x, &v, ell)?);
    }
    t.record(SAMPLED_BOUND, excess / sx, s);

    if ell.p() < x.dim() {
        let inc = check_inclusions(x, ell.lambda(), ell.big_lambda(), ell.p())?;
        t.record(INCLUSIONS, inc.max_violation() / sx, s);
    }
    Ok(())
}
