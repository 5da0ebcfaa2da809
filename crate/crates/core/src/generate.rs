//! Test coefficients for experiments: compactly supported bumps, random smooth
//! fields and checkerboards, optionally projected onto the antisymmetric
//! subspace `mu(conj z) = -conj(mu(z))` and rescaled to an exact sup norm.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::BeltramiField;
use crate::grid::GridSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GeneratorKind {
    Bump,
    Checkerboard,
    RandomSmooth,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub kind: GeneratorKind,
    /// Target sup norm.
    pub k: f64,
    /// The field vanishes outside the disc of this radius around the origin.
    pub support_radius: f64,
    pub antisymmetrize: bool,
    /// Number of Gaussian components of a random smooth field.
    pub components: usize,
}

impl Default for GeneratorSpec {
    fn default() -> Self {
        Self {
            kind: GeneratorKind::RandomSmooth,
            k: 0.3,
            support_radius: 4.0,
            antisymmetrize: true,
            components: 6,
        }
    }
}

/// `exp(1 - 1/(1 - t^2))` on `|t| < 1`, zero outside; equals 1 at `t = 0`.
pub fn smooth_cutoff(t: f64) -> f64 {
    if t.abs() >= 1.0 {
        0.0
    } else {
        (1.0 - 1.0 / (1.0 - t * t)).exp()
    }
}

/// Orthogonal projection `(mu(z) - conj(mu(conj z))) / 2` onto antisymmetric fields.
pub fn antisymmetrize(f: &BeltramiField) -> Result<BeltramiField> {
    let g = *f.grid();
    g.require_conjugation_symmetric()?;
    let n = g.n();
    let mut values = vec![Complex64::new(0.0, 0.0); g.len()];
    for j in 0..n {
        let jm = g.mirror_row(j);
        for i in 0..n {
            values[g.index(i, j)] = (f.get(i, j) - f.get(i, jm).conj()) * 0.5;
        }
    }
    BeltramiField::new(g, values)
}

pub fn generate_mu(grid: &GridSpec, spec: &GeneratorSpec, seed: u64) -> Result<BeltramiField> {
    if !(0.0..1.0).contains(&spec.k) {
        return Err(Error::DegenerateSpec(format!("k = {} outside [0, 1)", spec.k)));
    }
    let radius = spec.support_radius;
    if !(radius > 0.0 && radius <= 0.5 * grid.half_width()) {
        return Err(Error::DegenerateSpec(format!(
            "support radius {radius} must lie in the central quarter (half width {})",
            grid.half_width()
        )));
    }
    if spec.k == 0.0 {
        return Ok(BeltramiField::zeros(*grid));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let raw: Vec<Complex64> = match spec.kind {
        GeneratorKind::Bump => {
            let c = Complex64::from_polar(1.0, rng.gen_range(-PI..PI));
            grid.points()
                .into_iter()
                .map(|z| c * smooth_cutoff(z.norm() / radius))
                .collect()
        }
        GeneratorKind::RandomSmooth => {
            if spec.components == 0 {
                return Err(Error::DegenerateSpec("no components".into()));
            }
            let parts: Vec<(Complex64, f64, Complex64)> = (0..spec.components)
                .map(|_| {
                    let center = Complex64::from_polar(
                        0.5 * radius * rng.gen::<f64>().sqrt(),
                        rng.gen_range(-PI..PI),
                    );
                    let width = radius * rng.gen_range(0.125..0.25);
                    let amp = Complex64::from_polar(rng.gen_range(0.2..1.0), rng.gen_range(-PI..PI));
                    (center, width, amp)
                })
                .collect();
            grid.points()
                .into_iter()
                .map(|z| {
                    let cut = smooth_cutoff(z.norm() / radius);
                    if cut == 0.0 {
                        return Complex64::new(0.0, 0.0);
                    }
                    let sum: Complex64 = parts
                        .iter()
                        .map(|(c, w, a)| a * (-(z - c).norm_sqr() / (2.0 * w * w)).exp())
                        .sum();
                    sum * cut
                })
                .collect()
        }
        GeneratorKind::Checkerboard => {
            let side = radius / 4.0;
            let cells = 8usize;
            let phases: Vec<Complex64> = (0..cells * cells)
                .map(|_| Complex64::from_polar(1.0, rng.gen_range(-PI..PI)))
                .collect();
            grid.points()
                .into_iter()
                .map(|z| {
                    let cut = smooth_cutoff(z.norm() / radius);
                    if cut == 0.0 {
                        return Complex64::new(0.0, 0.0);
                    }
                    let a = (((z.re + radius) / side).floor() as usize).min(cells - 1);
                    let b = (((z.im + radius) / side).floor() as usize).min(cells - 1);
                    let sign = if (a + b).is_multiple_of(2) { 1.0 } else { -1.0 };
                    phases[b * cells + a] * sign * cut
                })
                .collect()
        }
    };

    let peak = raw.iter().map(|v| v.norm()).fold(0.0, f64::max);
    if !(peak > 0.0) {
        return Err(Error::DegenerateSpec("generated field vanishes".into()));
    }
    // scale below 1 before validating; the projection may shrink the field further
    let mut field = BeltramiField::new(*grid, raw.iter().map(|v| v * (0.5 / peak)).collect())?;
    if spec.antisymmetrize {
        field = antisymmetrize(&field)?;
    }
    let norm = field.norm();
    if !(norm > 0.0) {
        return Err(Error::DegenerateSpec(
            "field vanishes after antisymmetrization".into(),
        ));
    }
    field.scaled(Complex64::new(spec.k / norm, 0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::symmetry_residuals;

    fn grid() -> GridSpec {
        GridSpec::centered(8.0, 64).unwrap()
    }

    #[test]
    fn zero_norm_bump_is_zero() {
        let spec = GeneratorSpec {
            kind: GeneratorKind::Bump,
            k: 0.0,
            ..Default::default()
        };
        assert_eq!(generate_mu(&grid(), &spec, 3).unwrap().norm(), 0.0);
    }

    #[test]
    fn antisymmetric_outputs_have_exact_norm() {
        for kind in [GeneratorKind::Bump, GeneratorKind::RandomSmooth, GeneratorKind::Checkerboard] {
            let spec = GeneratorSpec {
                kind,
                k: 0.4,
                ..Default::default()
            };
            let f = generate_mu(&grid(), &spec, 11).unwrap();
            assert!(symmetry_residuals(&f).unwrap().anti <= 1e-15, "{kind:?}");
            assert!((f.norm() - 0.4).abs() <= 1e-15, "{kind:?}");
            // vanishes outside the support disc
            for (z, v) in grid().points().iter().zip(f.values()) {
                if z.norm() >= 4.0 {
                    assert_eq!(*v, Complex64::new(0.0, 0.0));
                }
            }
        }
    }

    #[test]
    fn same_seed_same_field() {
        let spec = GeneratorSpec::default();
        let a = generate_mu(&grid(), &spec, 99).unwrap();
        let b = generate_mu(&grid(), &spec, 99).unwrap();
        let c = generate_mu(&grid(), &spec, 100).unwrap();
        assert!(a.values().iter().zip(b.values()).all(|(x, y)| x.re.to_bits() == y.re.to_bits() && x.im.to_bits() == y.im.to_bits()));
        assert_ne!(a, c);
    }

    #[test]
    fn rejects_support_outside_central_quarter() {
        let spec = GeneratorSpec {
            support_radius: 5.0,
            ..Default::default()
        };
        assert!(matches!(generate_mu(&grid(), &spec, 1), Err(Error::DegenerateSpec(_))));
    }

    #[test]
    fn real_bump_cannot_be_antisymmetrized() {
        // a real constant phase bump has no antisymmetric part
        let g = grid();
        let f = BeltramiField::from_fn(g, |z| Complex64::new(0.3 * smooth_cutoff(z.norm() / 4.0), 0.0)).unwrap();
        assert_eq!(antisymmetrize(&f).unwrap().norm(), 0.0);
    }
}
