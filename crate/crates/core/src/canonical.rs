//! Canonical antisymmetric representation of a quasiline.
//!
//! Starting from any map `eta` with `||mu_eta|| <= k`, two corrections that
//! preserve the real line produce
//!
//! * `psi = eta o alpha^-1`, conformal in the upper half-plane with
//!   `||mu_psi|| <= 2k / (1 + k^2)`, where `alpha` solves the field
//!   [`build_a`] of `eta`'s ellipses;
//! * `phi = psi o beta^-1`, whose coefficient is antisymmetric,
//!   `mu_phi(conj z) = -conj(mu_phi(z))`, with `||mu_phi|| <= k`, where `beta`
//!   solves [`build_b`] of `psi`'s ellipses.
//!
//! All three maps send `[0, 1]` onto the same curve.
//!
//! The coefficients of `psi` and `phi` come from the chain rule applied to
//! the solver's spectral derivatives ([`pullback_coefficient`]). The
//! corrections have coefficients that jump across the real axis, and the
//! spectral solutions ring next to the jump, so finite differences of the
//! sampled maps are off by a fixed fraction of the jump in the two rows next
//! to the axis at every resolution. Finite differences are still computed
//! and compared away from the axis ([`BoundsReport::fd_discrepancy`]).

use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::{
    build_a, build_b, ellipse_to_mu, k_to_big_k, mu_to_ellipse, symmetry_residuals,
    BeltramiField,
};
use crate::qcmap::{
    beltrami_of_map, map_line, pullback_coefficient, sample_on_grid, PlaneMap, PullBack, QcMap,
};
use crate::solver::{solve_normalized, SolverOptions};

/// `2k / (1 + k^2)`: the norm bound of the coefficient conformal above the axis.
pub fn upper_conformal_bound(k: f64) -> f64 {
    2.0 * k / (1.0 + k * k)
}

/// Inverse of [`upper_conformal_bound`] on `[0, 1)`.
pub fn halve_hyperbolic(r: f64) -> f64 {
    r / (1.0 + (1.0 - r * r).sqrt())
}

#[derive(Debug, Clone, Copy)]
pub struct CanonicalOptions {
    pub solver: SolverOptions,
    /// Slack on every norm and symmetry bound.
    pub tol: f64,
    /// Half side of the centered box in which finite-difference coefficients
    /// are compared; defaults to half the grid's half width.
    pub window: Option<f64>,
    /// Rows next to the real axis left out of the finite-difference comparison.
    pub axis_rows: usize,
    /// Samples per curve in [`verify_same_quasiline`].
    pub curve_points: usize,
}

impl Default for CanonicalOptions {
    fn default() -> Self {
        Self {
            solver: SolverOptions::default(),
            tol: 1e-2,
            window: None,
            axis_rows: 4,
            curve_points: 2049,
        }
    }
}

impl CanonicalOptions {
    fn window_for(&self, f: &BeltramiField) -> f64 {
        self.window.unwrap_or(0.5 * f.grid().half_width())
    }
}

#[derive(Debug, Clone)]
pub struct StepOne {
    pub eta: QcMap,
    pub alpha: QcMap,
    pub psi: QcMap,
    pub mu_eta: BeltramiField,
    pub mu_alpha: BeltramiField,
    pub mu_psi: BeltramiField,
}

#[derive(Debug, Clone)]
pub struct StepTwo {
    pub beta: QcMap,
    pub phi: QcMap,
    pub mu_beta: BeltramiField,
    pub mu_phi: BeltramiField,
}

/// Makes `eta` conformal above the real axis without changing the image of `R`.
pub fn step1(eta_mu: &BeltramiField, opts: &CanonicalOptions) -> Result<StepOne> {
    let grid = *eta_mu.grid();
    grid.require_conjugation_symmetric()?;
    let k = eta_mu.norm();

    let eta = solve_normalized(eta_mu, opts.solver)?;
    let mu_alpha = ellipse_to_mu(&build_a(&mu_to_ellipse(eta_mu))?);
    let alpha = solve_normalized(&mu_alpha, opts.solver)?;
    let psi = sample_on_grid(
        &PullBack {
            outer: &eta,
            inverted: vec![&alpha],
        },
        &grid,
    )?;
    let mu_eta = eta
        .jet_coefficient()
        .ok_or_else(|| Error::Precondition("solver map without derivatives".into()))??;
    let mu_psi = pullback_coefficient(&mu_eta, &alpha)?;

    let bound = upper_conformal_bound(k);
    if mu_psi.norm() > bound + opts.tol {
        return Err(Error::BoundViolated(format!(
            "||mu_psi|| = {} > 2k/(1+k^2) = {bound}",
            mu_psi.norm()
        )));
    }
    let above = mu_psi.half_plane_norm(true)?;
    if above > opts.tol {
        return Err(Error::BoundViolated(format!(
            "psi is not conformal above the axis: sup |mu_psi| = {above}"
        )));
    }
    Ok(StepOne {
        eta,
        alpha,
        psi,
        mu_eta,
        mu_alpha,
        mu_psi,
    })
}

/// Turns the upper-conformal representation into the antisymmetric one.
pub fn step2(first: &StepOne, opts: &CanonicalOptions) -> Result<StepTwo> {
    let grid = *first.mu_psi.grid();
    let above = first.mu_psi.half_plane_norm(true)?;
    if above > opts.tol {
        return Err(Error::Precondition(format!(
            "psi coefficient is not circular above the axis (sup {above})"
        )));
    }
    let mu_psi = &first.mu_psi;
    let mu_beta = ellipse_to_mu(&build_b(&mu_to_ellipse(mu_psi))?);
    let beta = solve_normalized(&mu_beta, opts.solver)?;
    let phi = sample_on_grid(
        &PullBack {
            outer: &first.eta,
            inverted: vec![&beta, &first.alpha],
        },
        &grid,
    )?;
    let mu_phi = pullback_coefficient(mu_psi, &beta)?;

    let k = halve_hyperbolic(mu_psi.norm());
    if mu_phi.norm() > k + opts.tol {
        return Err(Error::BoundViolated(format!(
            "||mu_phi|| = {} > {k}",
            mu_phi.norm()
        )));
    }
    let anti = symmetry_residuals(&mu_phi)?.anti;
    if anti > opts.tol {
        return Err(Error::BoundViolated(format!(
            "mu_phi antisymmetry residual {anti}"
        )));
    }
    Ok(StepTwo {
        beta,
        phi,
        mu_beta,
        mu_phi,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundsReport {
    pub k: f64,
    pub big_k: f64,
    /// `K' = K^2`, the distortion of `psi`.
    pub big_k_prime: f64,
    pub norm_psi_bound: f64,
    pub norm_psi_achieved: f64,
    pub norm_psi_upper: f64,
    pub norm_phi_achieved: f64,
    pub anti_residual: f64,
    pub symm_residual: f64,
    pub curve_distance: f64,
    /// Largest gap between finite-difference and chain-rule coefficients of
    /// `psi` and `phi` inside the window, away from the axis rows.
    pub fd_discrepancy: f64,
    pub grid_step: f64,
}

#[derive(Debug, Clone)]
pub struct DecompositionResult {
    pub eta: QcMap,
    pub alpha: QcMap,
    pub psi: QcMap,
    pub beta: QcMap,
    pub phi: QcMap,
    pub mu_psi: BeltramiField,
    pub mu_phi: BeltramiField,
    pub bounds_report: BoundsReport,
}

pub fn decompose(eta_mu: &BeltramiField, opts: &CanonicalOptions) -> Result<DecompositionResult> {
    let first = step1(eta_mu, opts)?;
    let second = step2(&first, opts)?;
    let k = eta_mu.norm();
    let residuals = symmetry_residuals(&second.mu_phi)?;
    let mut result = DecompositionResult {
        bounds_report: BoundsReport {
            k,
            big_k: k_to_big_k(k),
            big_k_prime: k_to_big_k(k).powi(2),
            norm_psi_bound: upper_conformal_bound(k),
            norm_psi_achieved: first.mu_psi.norm(),
            norm_psi_upper: first.mu_psi.half_plane_norm(true)?,
            norm_phi_achieved: second.mu_phi.norm(),
            anti_residual: residuals.anti,
            symm_residual: residuals.symm,
            curve_distance: 0.0,
            fd_discrepancy: 0.0,
            grid_step: eta_mu.grid().step(),
        },
        eta: first.eta,
        alpha: first.alpha,
        psi: first.psi,
        beta: second.beta,
        phi: second.phi,
        mu_psi: first.mu_psi,
        mu_phi: second.mu_phi,
    };
    result.bounds_report.curve_distance = verify_same_quasiline(&result, opts.curve_points)?;
    result.bounds_report.fd_discrepancy = fd_discrepancy(&result.psi, &result.mu_psi, opts)?
        .max(fd_discrepancy(&result.phi, &result.mu_phi, opts)?);
    if result.bounds_report.norm_phi_achieved > k + opts.tol {
        return Err(Error::BoundViolated(format!(
            "||mu_phi|| = {} exceeds k = {k}",
            result.bounds_report.norm_phi_achieved
        )));
    }
    Ok(result)
}

/// Sup of `|FD coefficient of m - mu|` over the window, skipping
/// `opts.axis_rows` rows on each side of the real axis.
pub fn fd_discrepancy(m: &QcMap, mu: &BeltramiField, opts: &CanonicalOptions) -> Result<f64> {
    let g = *m.grid();
    let fd = beltrami_of_map(m)?;
    let window = opts.window_for(mu);
    let n = g.n();
    let mut worst: f64 = 0.0;
    for j in 1..n - 1 {
        if j + opts.axis_rows >= n / 2 && j < n / 2 + opts.axis_rows {
            continue;
        }
        for i in 1..n - 1 {
            let z = g.point(i, j) - g.center();
            if z.re.abs() <= window && z.im.abs() <= window {
                worst = worst.max((fd.get(i, j) - mu.get(i, j)).norm());
            }
        }
    }
    Ok(worst)
}

/// Largest pairwise Hausdorff distance between the images of `[0, 1]` under
/// `eta`, `psi` and `phi`.
pub fn verify_same_quasiline(d: &DecompositionResult, n_points: usize) -> Result<f64> {
    let curves = [&d.eta, &d.psi, &d.phi]
        .into_iter()
        .map(|m| map_line(m as &dyn PlaneMap, n_points))
        .collect::<Result<Vec<_>>>()?;
    let mut worst: f64 = 0.0;
    for a in 0..curves.len() {
        for b in a + 1..curves.len() {
            worst = worst.max(curves[a].hausdorff_distance(&curves[b]));
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate::smooth_cutoff;
    use num_complex::Complex64;
    use crate::grid::GridSpec;

    #[test]
    fn bound_algebra() {
        assert!((upper_conformal_bound(1.0 / 3.0) - 0.6).abs() < 1e-15);
        assert!((upper_conformal_bound(0.5) - 0.8).abs() < 1e-15);
        for k in [0.0, 0.1, 0.3, 0.5, 0.9] {
            assert!((halve_hyperbolic(upper_conformal_bound(k)) - k).abs() < 1e-14);
            // K' = K^2
            let kp = k_to_big_k(upper_conformal_bound(k));
            assert!((kp - k_to_big_k(k).powi(2)).abs() < 1e-10 * kp);
        }
    }

    #[test]
    fn zero_coefficient_is_a_fixed_point() {
        let g = GridSpec::centered(4.0, 64).unwrap();
        let d = decompose(&BeltramiField::zeros(g), &CanonicalOptions::default()).unwrap();
        for m in [&d.alpha, &d.psi, &d.beta, &d.phi] {
            for (a, z) in m.values().iter().zip(g.points()) {
                assert!((a - z).norm() < 1e-12);
            }
        }
        assert!(d.bounds_report.curve_distance < 1e-12);
    }

    #[test]
    fn lower_only_coefficient_keeps_psi() {
        let g = GridSpec::centered(8.0, 256).unwrap();
        let mu = BeltramiField::from_fn(g, |z| {
            let c = z - Complex64::new(0.5, -1.5);
            Complex64::new(0.5, 0.0) * smooth_cutoff(c.norm() / 1.2)
        })
        .unwrap();
        let first = step1(&mu, &CanonicalOptions::default()).unwrap();
        assert!(first.mu_psi.norm() <= 0.8 + 0.02);
        assert!(first.mu_psi.half_plane_norm(true).unwrap() <= 1e-8);
        // alpha is conformal below the axis, so psi keeps eta's coefficient there
        let worst = first
            .mu_psi
            .values()
            .iter()
            .zip(mu.values())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        assert!(worst < 0.02, "{worst}");
    }
}
