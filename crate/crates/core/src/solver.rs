//! Spectral solver for the Beltrami equation `d-bar phi = mu d phi`.
//!
//! Writing `phi = z + m conj(z) + C[h - m]` with `h = d-bar phi` and `m` the
//! mean of `h`, the equation becomes the fixed point `h = mu (1 + S h)` for the
//! Beurling transform `S`. The Neumann iteration `h <- mu (1 + S h)` contracts
//! with ratio `||mu||_inf` because `S` is an isometry on mean-zero data. The
//! `m conj(z)` term carries the mean of `h`, which the periodic Cauchy
//! transform cannot represent; with it the sampled map has exactly the
//! coefficient `mu`, so a constant coefficient is solved by the affine map
//! `z + mu conj(z)`.
//!
//! The solution is the torus solution of the periodized problem. It differs
//! from the whole-plane solution by a conformal change of coordinates that is
//! close to affine when `mu` is supported well inside the grid (the central
//! quarter is the intended regime).

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::field::BeltramiField;
use crate::qcmap::{Normalization, QcMap};
use crate::spectral::Spectral;

/// Default fixed-point increment at which the iteration stops.
pub const DEFAULT_TOL: f64 = 1e-10;
pub const DEFAULT_MAX_ITER: usize = 1000;

#[derive(Debug, Clone, Copy)]
pub struct SolverOptions {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol: DEFAULT_TOL,
            max_iter: DEFAULT_MAX_ITER,
        }
    }
}

/// Convergence history of one solve.
#[derive(Debug, Clone)]
pub struct SolveReport {
    pub iterations: usize,
    /// Grid L2 norm of `h_{m+1} - h_m`, one entry per iteration.
    pub l2_increments: Vec<f64>,
    /// Sup of `|h - mu (1 + S h)|` at the returned iterate.
    pub residual: f64,
    /// The residual the solve was required to meet.
    pub acceptance: f64,
}

impl SolveReport {
    /// Largest ratio between successive L2 increments (ignoring increments at
    /// round-off level).
    pub fn worst_contraction(&self) -> f64 {
        self.l2_increments
            .windows(2)
            .filter(|w| w[0] > 1e-12)
            .map(|w| w[1] / w[0])
            .fold(0.0, f64::max)
    }
}

/// Residual acceptance `1e-6 / (1 - ||mu||)`.
pub fn residual_acceptance(norm: f64) -> f64 {
    1e-6 / (1.0 - norm)
}

/// Solves with the given iteration tolerance; see [`solve_with_report`].
pub fn solve(mu: &BeltramiField, tol: f64, max_iter: usize) -> Result<QcMap> {
    solve_with_report(mu, SolverOptions { tol, max_iter }).map(|(m, _)| m)
}

pub fn solve_with_report(
    mu: &BeltramiField,
    opts: SolverOptions,
) -> Result<(QcMap, SolveReport)> {
    let grid = *mu.grid();
    let spectral = Spectral::new(&grid);
    let coeff = mu.values();
    let count = coeff.len() as f64;

    let one = Complex64::new(1.0, 0.0);
    let mut h = coeff.to_vec();
    let mut s_h = vec![Complex64::new(0.0, 0.0); h.len()];
    let mut l2_increments = Vec::new();
    let mut iterations = 0;
    if mu.norm() > 0.0 {
        loop {
            s_h = spectral.beurling(&h);
            let next: Vec<Complex64> = coeff
                .par_iter()
                .zip(&s_h)
                .map(|(m, s)| m * (one + s))
                .collect();
            let (sup, sq) = next
                .iter()
                .zip(&h)
                .map(|(a, b)| (a - b).norm())
                .fold((0.0f64, 0.0f64), |(s, q), d| (s.max(d), q + d * d));
            h = next;
            iterations += 1;
            l2_increments.push((sq / count).sqrt());
            if sup <= opts.tol {
                break;
            }
            if iterations >= opts.max_iter {
                return Err(Error::NoConvergence {
                    iterations,
                    increment: sup,
                });
            }
        }
        s_h = spectral.beurling(&h);
    }

    let residual = coeff
        .iter()
        .zip(&h)
        .zip(&s_h)
        .map(|((m, h), s)| (h - m * (one + s)).norm())
        .fold(0.0, f64::max);
    let acceptance = residual_acceptance(mu.norm());
    if residual > acceptance {
        return Err(Error::ResidualTooLarge {
            residual,
            limit: acceptance,
        });
    }

    // Jacobian |d phi|^2 (1 - |mu|^2) must stay positive
    let n = grid.n();
    if let Some(k) = s_h.iter().position(|s| (one + s).norm() < 1e-12) {
        return Err(Error::OrientationLost { i: k % n, j: k / n });
    }

    let mean = h.iter().sum::<Complex64>() / count;
    let periodic = spectral.cauchy(&h);
    let values = grid
        .points()
        .into_par_iter()
        .zip(periodic)
        .map(|(z, u)| z + mean * z.conj() + u)
        .collect();
    let jet = h
        .iter()
        .zip(&s_h)
        .map(|(h, s)| [one + s, *h])
        .collect();
    let map = QcMap::new(grid, values, Normalization::Hydrodynamic, Some(residual))?.with_jet(jet)?;
    Ok((
        map,
        SolveReport {
            iterations,
            l2_increments,
            residual,
            acceptance,
        },
    ))
}

/// Solves and post-composes the affine map fixing 0 and 1.
pub fn solve_normalized(mu: &BeltramiField, opts: SolverOptions) -> Result<QcMap> {
    solve_with_report(mu, opts)?.0.renormalize_01()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridSpec;
    use crate::qcmap::{beltrami_of_map, PlaneMap};

    #[test]
    fn zero_coefficient_gives_identity() {
        let g = GridSpec::centered(4.0, 32).unwrap();
        let (m, report) = solve_with_report(&BeltramiField::zeros(g), SolverOptions::default()).unwrap();
        assert_eq!(report.residual, 0.0);
        for (a, b) in m.values().iter().zip(g.points()) {
            assert!((a - b).norm() < 1e-14);
        }
    }

    #[test]
    fn constant_coefficient_gives_affine_oracle() {
        let g = GridSpec::centered(4.0, 64).unwrap();
        let mu = BeltramiField::new(g, vec![Complex64::new(0.2, 0.0); g.len()]).unwrap();
        let m = solve_normalized(&mu, SolverOptions::default()).unwrap();
        let i = Complex64::i();
        assert!((m.eval(i).unwrap() - Complex64::new(0.0, 2.0 / 3.0)).norm() < 1e-12);
        for (a, z) in m.values().iter().zip(g.points()) {
            assert!((a - (z + 0.2 * z.conj()) / 1.2).norm() < 1e-12);
        }
    }

    #[test]
    fn iteration_contracts_at_the_coefficient_norm() {
        let g = GridSpec::centered(4.0, 64).unwrap();
        let mu = BeltramiField::from_fn(g, |z| {
            Complex64::new(0.3, 0.4) * (-z.norm_sqr()).exp()
        })
        .unwrap();
        let (m, report) = solve_with_report(&mu, SolverOptions::default()).unwrap();
        assert!(report.worst_contraction() <= mu.norm() + 0.05);
        assert!(report.residual <= report.acceptance);
        let rec = beltrami_of_map(&m).unwrap();
        let worst = rec
            .values()
            .iter()
            .zip(mu.values())
            .enumerate()
            .filter(|(k, _)| {
                let (i, j) = (k % 64, k / 64);
                (1..63).contains(&i) && (1..63).contains(&j)
            })
            .map(|(_, (a, b))| (a - b).norm())
            .fold(0.0, f64::max);
        assert!(worst < 5.0 * g.step(), "recovery error {worst}");
    }

    #[test]
    fn iteration_limit_is_reported() {
        let g = GridSpec::centered(4.0, 32).unwrap();
        let mu = BeltramiField::from_fn(g, |z| Complex64::new(0.9, 0.0) * (-z.norm_sqr()).exp()).unwrap();
        assert!(matches!(
            solve(&mu, 1e-14, 3),
            Err(Error::NoConvergence { iterations: 3, .. })
        ));
    }
}
