//! The holomorphic motion `lambda -> phi_lambda` through an antisymmetric map.
//!
//! Given an antisymmetric coefficient `mu` of norm `k`, the member at `lambda`
//! solves the equation with coefficient `mu * lambda / k` and fixes 0, 1 and
//! infinity. So `phi_0` is the identity and `phi_k` the base map. For real
//! `lambda` the coefficient stays antisymmetric and
//! `phi_lambda(z) = conj(phi_{-lambda}(conj z))`; for imaginary `lambda` it
//! is symmetric and the real line is mapped to itself.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::{symmetry_residuals, BeltramiField};
use crate::qcmap::{map_line, PlaneMap, QcMap};
use crate::solver::{solve_normalized, SolverOptions};

/// Two motion parameters are treated as the same sample within this distance.
pub const LAMBDA_MATCH: f64 = 1e-12;

/// Coefficient `base * lambda / k` of the member at `lambda`.
pub fn member_mu(base: &BeltramiField, k: f64, lambda: Complex64) -> Result<BeltramiField> {
    if lambda.norm() >= 1.0 {
        return Err(Error::Precondition(format!("|lambda| = {} >= 1", lambda.norm())));
    }
    if k == 0.0 {
        if lambda.norm() != 0.0 {
            return Err(Error::Precondition("k = 0 only admits lambda = 0".into()));
        }
        return Ok(BeltramiField::zeros(*base.grid()));
    }
    if !(k > 0.0 && k < 1.0) {
        return Err(Error::Precondition(format!("k = {k} outside (0, 1)")));
    }
    base.scaled(lambda / k)
}

/// Default motion parameters: `0`, `+-k`, `+-ik`, then `count` points on each
/// circle `(center, radius)`.
pub fn lambda_schedule(k: f64, circles: &[(Complex64, f64)], count: usize) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0)];
    if k > 0.0 {
        out.extend([
            Complex64::new(k, 0.0),
            Complex64::new(-k, 0.0),
            Complex64::new(0.0, k),
            Complex64::new(0.0, -k),
        ]);
    }
    for &(center, radius) in circles {
        push_unique(&mut out, center);
        for p in circle(center, radius, count) {
            push_unique(&mut out, p);
        }
    }
    out
}

fn push_unique(out: &mut Vec<Complex64>, z: Complex64) {
    if !out.iter().any(|w| (w - z).norm() <= LAMBDA_MATCH) {
        out.push(z);
    }
}

/// `count` equispaced points on the circle, starting on the real direction.
pub fn circle(center: Complex64, radius: f64, count: usize) -> Vec<Complex64> {
    (0..count)
        .map(|m| center + Complex64::from_polar(radius, 2.0 * PI * m as f64 / count as f64))
        .collect()
}

#[derive(Debug, Clone)]
pub struct MotionFamily {
    base_mu: BeltramiField,
    k: f64,
    rho: f64,
    lambdas: Vec<Complex64>,
    maps: Vec<QcMap>,
    residuals: Vec<f64>,
}

/// Solves every member. `base` must be antisymmetric within `anti_tol`.
pub fn build_family(
    base: &BeltramiField,
    k: f64,
    rho: f64,
    lambdas: &[Complex64],
    opts: SolverOptions,
    anti_tol: f64,
) -> Result<MotionFamily> {
    if !(rho > 0.0 && rho < 1.0) {
        return Err(Error::Precondition(format!("rho = {rho} outside (0, 1)")));
    }
    if let Some(l) = lambdas.iter().find(|l| l.norm() > rho) {
        return Err(Error::Precondition(format!("|lambda| = {} exceeds rho = {rho}", l.norm())));
    }
    if lambdas.is_empty() {
        return Err(Error::Precondition("no motion parameters".into()));
    }
    let anti = symmetry_residuals(base)?.anti;
    if anti > anti_tol {
        return Err(Error::Precondition(format!(
            "base coefficient is not antisymmetric (residual {anti:e})"
        )));
    }
    let solved = lambdas
        .par_iter()
        .map(|&lambda| {
            let tag = |e: Error| Error::AtLambda {
                lambda,
                source: Box::new(e),
            };
            let mu = member_mu(base, k, lambda).map_err(tag)?;
            let map = solve_normalized(&mu, opts).map_err(tag)?;
            let residual = map.residual().unwrap_or(0.0);
            Ok((map, residual))
        })
        .collect::<Result<Vec<_>>>()?;
    let (maps, residuals) = solved.into_iter().unzip();
    Ok(MotionFamily {
        base_mu: base.clone(),
        k,
        rho,
        lambdas: lambdas.to_vec(),
        maps,
        residuals,
    })
}

impl MotionFamily {
    pub fn base_mu(&self) -> &BeltramiField {
        &self.base_mu
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn lambdas(&self) -> &[Complex64] {
        &self.lambdas
    }

    pub fn maps(&self) -> &[QcMap] {
        &self.maps
    }

    /// Solver residual per member.
    pub fn residuals(&self) -> &[f64] {
        &self.residuals
    }

    pub fn position(&self, lambda: Complex64) -> Result<usize> {
        self.lambdas
            .iter()
            .position(|l| (l - lambda).norm() <= LAMBDA_MATCH)
            .ok_or(Error::UnknownLambda(lambda))
    }

    pub fn member(&self, lambda: Complex64) -> Result<&QcMap> {
        Ok(&self.maps[self.position(lambda)?])
    }

    /// Largest relative deviation from the mean-value property of
    /// `lambda -> phi_lambda(z)` over the circle `(center, radius)` sampled
    /// at `count` points, for each `z` in `points`. All circle points and
    /// the center must be family members.
    pub fn mean_value_defect(
        &self,
        center: Complex64,
        radius: f64,
        count: usize,
        points: &[Complex64],
    ) -> Result<f64> {
        let mid = self.member(center)?;
        let ring = circle(center, radius, count)
            .into_iter()
            .map(|l| self.member(l))
            .collect::<Result<Vec<_>>>()?;
        let mut worst: f64 = 0.0;
        for &z in points {
            let at_center = mid.eval(z)?;
            let mut mean = Complex64::new(0.0, 0.0);
            for m in &ring {
                mean += m.eval(z)?;
            }
            mean /= count as f64;
            worst = worst.max((mean - at_center).norm() / at_center.norm().max(1.0));
        }
        Ok(worst)
    }

    pub fn manifest(&self, files: Vec<String>) -> MotionManifest {
        MotionManifest {
            k: self.k,
            rho: self.rho,
            lambdas: self.lambdas.iter().map(|l| [l.re, l.im]).collect(),
            residuals: self.residuals.clone(),
            files,
        }
    }
}

/// JSON description of a family; `files` names the per-member map files.
#[derive(Debug, Clone, Serialize)]
pub struct MotionManifest {
    pub k: f64,
    pub rho: f64,
    pub lambdas: Vec<[f64; 2]>,
    pub residuals: Vec<f64>,
    pub files: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LambdaKind {
    Zero,
    Real,
    Imaginary,
    Other,
}

impl LambdaKind {
    pub fn of(lambda: Complex64) -> Self {
        match (lambda.re == 0.0, lambda.im == 0.0) {
            (true, true) => LambdaKind::Zero,
            (false, true) => LambdaKind::Real,
            (true, false) => LambdaKind::Imaginary,
            (false, false) => LambdaKind::Other,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct MemberSymmetry {
    pub lambda: [f64; 2],
    pub kind: LambdaKind,
    /// Antisymmetry residual for real members, symmetry residual for
    /// imaginary ones, 0 otherwise.
    pub coefficient_residual: f64,
    /// Real members: sup of `|phi_l(z) - conj(phi_-l(conj z))|` over the grid
    /// (needs `-l` in the family). Imaginary members: largest `|Im|` of the
    /// image of the sampled real segment `[-R, R]`.
    pub map_residual: Option<f64>,
    pub map_limit: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct SymmetryReport {
    pub grid_step: f64,
    pub members: Vec<MemberSymmetry>,
    pub passed: bool,
}

/// Coefficient residual limit for the symmetry laws of members.
pub const COEFFICIENT_SYMMETRY_TOL: f64 = 1e-12;

/// Checks the symmetry laws of every real and imaginary member. The real
/// segment for imaginary members spans the central half of the grid.
pub fn check_symmetries(f: &MotionFamily) -> Result<SymmetryReport> {
    let grid = *f.base_mu.grid();
    grid.require_conjugation_symmetric()?;
    let h = grid.step();
    let n = grid.n();
    let reach = 0.5 * grid.half_width();
    let mut members = Vec::with_capacity(f.lambdas.len());
    for (idx, &lambda) in f.lambdas.iter().enumerate() {
        let kind = LambdaKind::of(lambda);
        let mu = member_mu(&f.base_mu, f.k, lambda)?;
        let res = symmetry_residuals(&mu)?;
        let map = &f.maps[idx];
        let (coefficient_residual, map_residual, map_limit) = match kind {
            LambdaKind::Zero => {
                let worst = map
                    .values()
                    .iter()
                    .zip(grid.points())
                    .map(|(v, z)| (v - z).norm())
                    .fold(0.0, f64::max);
                (res.anti.max(res.symm), Some(worst), 10.0 * h)
            }
            LambdaKind::Real => {
                let partner = f.position(-lambda).ok().map(|p| &f.maps[p]);
                let law = partner.map(|other| {
                    let mut worst: f64 = 0.0;
                    for j in 0..n {
                        let jm = grid.mirror_row(j);
                        for i in 0..n {
                            let a = map.values()[grid.index(i, j)];
                            let b = other.values()[grid.index(i, jm)].conj();
                            worst = worst.max((a - b).norm());
                        }
                    }
                    worst
                });
                (res.anti, law, 10.0 * h)
            }
            LambdaKind::Imaginary => {
                let line = map_line(&Segment { map, reach }, 4 * n + 1)?;
                let worst = line.points.iter().map(|p| p.im.abs()).fold(0.0, f64::max);
                (res.symm, Some(worst), 5.0 * h)
            }
            LambdaKind::Other => (0.0, None, 0.0),
        };
        let passed = coefficient_residual <= COEFFICIENT_SYMMETRY_TOL
            && map_residual.is_none_or(|r| r <= map_limit);
        members.push(MemberSymmetry {
            lambda: [lambda.re, lambda.im],
            kind,
            coefficient_residual,
            map_residual,
            map_limit,
            passed,
        });
    }
    let passed = members.iter().all(|m| m.passed);
    Ok(SymmetryReport {
        grid_step: h,
        members,
        passed,
    })
}

/// `t -> map(-R + 2 R t)`, so that [`map_line`] samples `[-R, R]`.
struct Segment<'a> {
    map: &'a QcMap,
    reach: f64,
}

impl PlaneMap for Segment<'_> {
    fn eval(&self, t: Complex64) -> Result<Complex64> {
        self.map.eval(Complex64::new(-self.reach + 2.0 * self.reach * t.re, 0.0))
    }
}
