use serde::Serialize;

use crate::{Error, Result};

/// Lattice directions `v = (a, b)` with `gcd(|a|, |b|) = 1` and
/// `max(|a|, |b|) <= m`.
#[derive(Clone, Debug, Serialize)]
pub struct Stencil {
    width: usize,
    /// All arms, closed under negation.
    arms: Vec<(i32, i32)>,
    /// One representative per `±v` pair.
    directions: Vec<(i32, i32)>,
    /// `perp[k]`: index in `directions` of the direction orthogonal to `k`.
    perp: Vec<usize>,
}

fn gcd(mut a: i32, mut b: i32) -> i32 {
    a = a.abs();
    b = b.abs();
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

impl Stencil {
    pub fn new(width: usize) -> Result<Self> {
        if width == 0 || width > 16 {
            return Err(Error::Parameter(format!("stencil width {width} outside 1..=16")));
        }
        let m = width as i32;
        let mut directions = Vec::new();
        for a in -m..=m {
            for b in -m..=m {
                if (a, b) != (0, 0) && gcd(a, b) == 1 && (a > 0 || (a == 0 && b > 0)) {
                    directions.push((a, b));
                }
            }
        }
        directions.sort_by(|p, q| {
            let ap = (p.1 as f64).atan2(p.0 as f64);
            let aq = (q.1 as f64).atan2(q.0 as f64);
            ap.total_cmp(&aq)
        });
        let canon = |(a, b): (i32, i32)| if a > 0 || (a == 0 && b > 0) { (a, b) } else { (-a, -b) };
        let perp = directions
            .iter()
            .map(|&(a, b)| {
                let q = canon((-b, a));
                directions.iter().position(|&d| d == q).expect("lattice closed under rotation")
            })
            .collect();
        let arms = directions
            .iter()
            .flat_map(|&(a, b)| [(a, b), (-a, -b)])
            .collect();
        Ok(Self {
            width,
            arms,
            directions,
            perp,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn arms(&self) -> &[(i32, i32)] {
        &self.arms
    }

    pub fn directions(&self) -> &[(i32, i32)] {
        &self.directions
    }

    pub fn perp(&self) -> &[usize] {
        &self.perp
    }

    /// Largest angle between consecutive directions, modulo `π`.
    pub fn angular_gap(&self) -> f64 {
        let mut angles: Vec<f64> = self
            .directions
            .iter()
            .map(|&(a, b)| (b as f64).atan2(a as f64).rem_euclid(std::f64::consts::PI))
            .collect();
        angles.sort_by(f64::total_cmp);
        let mut gap = angles[0] + std::f64::consts::PI - angles[angles.len() - 1];
        for w in angles.windows(2) {
            gap = gap.max(w[1] - w[0]);
        }
        gap
    }
}
