//! Discrete quasiconformal maps: grid samples of `phi`, bilinear evaluation,
//! inversion, normalization and finite-difference recovery of the Beltrami
//! coefficient.
//!
//! On a conjugation-symmetric grid every stencil stays inside one closed
//! half-plane. Maps built from symmetric or antisymmetric coefficients are
//! only Lipschitz across the real axis, and a stencil straddling the axis
//! would smear the kink into `O(1)` derivative errors. Points above the axis
//! are interpolated from rows `n/2..n` (extrapolating linearly into the half
//! cell next to the axis), points below from rows `0..n/2`, and points on the
//! axis take the mean of both.

use std::io::{Read, Write};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::BeltramiField;
use crate::grid::{read_grid, write_grid, GridSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    /// Fixes 0, 1 and infinity.
    Fix01,
    /// Identity plus a decaying (periodized) correction, as produced by the solver.
    Hydrodynamic,
}

impl Normalization {
    fn tag(self) -> u8 {
        match self {
            Normalization::Fix01 => 0,
            Normalization::Hydrodynamic => 1,
        }
    }

    fn from_tag(tag: u8) -> Result<Self> {
        match tag {
            0 => Ok(Normalization::Fix01),
            1 => Ok(Normalization::Hydrodynamic),
            t => Err(Error::Format(format!("unknown normalization tag {t}"))),
        }
    }
}

/// Anything that can be evaluated at points of the plane.
pub trait PlaneMap: Sync {
    fn eval(&self, z: Complex64) -> Result<Complex64>;
}

#[derive(Debug, Clone, PartialEq)]
pub struct QcMap {
    grid: GridSpec,
    values: Vec<Complex64>,
    normalization: Normalization,
    /// Achieved sup of `|d-bar phi - mu d phi|`, when the map came from the solver.
    residual: Option<f64>,
    /// `(d phi, d-bar phi)` at the grid points, when known exactly (spectral
    /// derivatives of a solver map).
    jet: Option<Vec<[Complex64; 2]>>,
}

#[derive(Clone, Copy)]
enum Side {
    Upper,
    Lower,
    Any,
}

impl QcMap {
    pub fn new(
        grid: GridSpec,
        values: Vec<Complex64>,
        normalization: Normalization,
        residual: Option<f64>,
    ) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "{} samples for {} grid points",
                values.len(),
                grid.len()
            )));
        }
        if values.iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(Error::Precondition("map samples must be finite".into()));
        }
        Ok(Self {
            grid,
            values,
            normalization,
            residual,
            jet: None,
        })
    }

    /// Attaches grid derivatives `(d phi, d-bar phi)`.
    pub fn with_jet(mut self, jet: Vec<[Complex64; 2]>) -> Result<Self> {
        if jet.len() != self.grid.len() {
            return Err(Error::GridMismatch(format!(
                "{} derivative samples for {} grid points",
                jet.len(),
                self.grid.len()
            )));
        }
        self.jet = Some(jet);
        Ok(self)
    }

    pub fn jet(&self) -> Option<&[[Complex64; 2]]> {
        self.jet.as_deref()
    }

    /// Beltrami coefficient `d-bar phi / d phi` from the attached derivatives.
    pub fn jet_coefficient(&self) -> Option<Result<BeltramiField>> {
        let jet = self.jet.as_ref()?;
        let values = jet
            .iter()
            .enumerate()
            .map(|(k, [d, d_bar])| {
                if d.norm() < 1e-12 {
                    let n = self.grid.n();
                    Err(Error::VanishingDerivative { i: k % n, j: k / n })
                } else {
                    Ok(d_bar / d)
                }
            })
            .collect::<Result<Vec<_>>>();
        Some(values.and_then(|v| BeltramiField::new(self.grid, v)))
    }

    pub fn identity(grid: GridSpec) -> Self {
        Self {
            values: grid.points(),
            grid,
            normalization: Normalization::Fix01,
            residual: Some(0.0),
            jet: None,
        }
    }

    /// Samples `f` at the grid points.
    pub fn from_fn(
        grid: GridSpec,
        normalization: Normalization,
        f: impl Fn(Complex64) -> Complex64 + Sync + Send,
    ) -> Result<Self> {
        let values = grid.points().into_par_iter().map(f).collect();
        Self::new(grid, values, normalization, None)
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn normalization(&self) -> Normalization {
        self.normalization
    }

    pub fn residual(&self) -> Option<f64> {
        self.residual
    }

    fn side_of(&self, z: Complex64) -> Side {
        side_of(&self.grid, z)
    }

    fn stencil(&self, z: Complex64, side: Side) -> (Complex64, Complex64, Complex64) {
        stencil_of(&self.grid, &self.values, z, side)
    }

    fn interpolate_with_jacobian(&self, z: Complex64) -> (Complex64, Complex64, Complex64) {
        interpolate_samples(&self.grid, &self.values, z)
    }

    /// Bilinear interpolation, extrapolating linearly beyond the outermost samples.
    pub fn interpolate(&self, z: Complex64) -> Complex64 {
        self.interpolate_with_jacobian(z).0
    }

    fn inside_square(&self, z: Complex64) -> bool {
        let c = self.grid.center();
        let w = self.grid.half_width() * (1.0 + 1e-12);
        (z.re - c.re).abs() <= w && (z.im - c.im).abs() <= w
    }

    /// Post-composes the affine map fixing 0 and 1.
    pub fn renormalize_01(&self) -> Result<Self> {
        let zero = self.interpolate(Complex64::new(0.0, 0.0));
        let one = self.interpolate(Complex64::new(1.0, 0.0));
        let scale = one - zero;
        if !(scale.norm() > 1e-300) {
            return Err(Error::DegenerateNormalization);
        }
        let values = self.values.iter().map(|v| (v - zero) / scale).collect();
        let jet = self
            .jet
            .as_ref()
            .map(|j| j.iter().map(|[d, d_bar]| [d / scale, d_bar / scale]).collect());
        Ok(Self {
            grid: self.grid,
            values,
            normalization: Normalization::Fix01,
            residual: self.residual,
            jet,
        })
    }

    /// Solves `self(z) = w` by damped Newton iteration on the interpolant.
    /// On a symmetric grid `z` is sought in the half-plane of `w`, so this is
    /// meant for maps preserving the real line (and hence each half-plane).
    pub fn invert(&self, w: Complex64) -> Result<Complex64> {
        if self.grid.is_conjugation_symmetric() && w.im == 0.0 {
            if let Some(x) = self.invert_on_axis(w.re) {
                return Ok(Complex64::new(x, 0.0));
            }
        }
        let side = self.side_of(w);
        let first = 2.0 * w - self.stencil(w, side).0;
        self.newton(w, first, side)
            .or_else(|| self.newton(w, w, side))
            .ok_or(Error::InversionFailed(w))
    }

    fn newton(&self, w: Complex64, start: Complex64, side: Side) -> Option<Complex64> {
        let scale = 1.0 + w.norm();
        let mut z = start;
        let (mut f, mut fx, mut fy) = self.stencil(z, side);
        for _ in 0..60 {
            let r = f - w;
            if r.norm() <= 1e-13 * scale {
                return Some(z);
            }
            // real 2x2 system [fx fy] (dx, dy)^T = -r
            let det = fx.re * fy.im - fy.re * fx.im;
            if det.abs() < 1e-300 {
                return None;
            }
            let dx = (-r.re * fy.im + r.im * fy.re) / det;
            let dy = (-r.im * fx.re + r.re * fx.im) / det;
            let step = Complex64::new(dx, dy);
            let mut t = 1.0;
            loop {
                let cand = z + step * t;
                let next = self.stencil(cand, side);
                if (next.0 - w).norm() < r.norm() || t < 1e-6 {
                    z = cand;
                    (f, fx, fy) = next;
                    break;
                }
                t *= 0.5;
            }
        }
        ((f - w).norm() <= 1e-10 * scale).then_some(z)
    }

    fn invert_on_axis(&self, target: f64) -> Option<f64> {
        let mut x = target;
        for _ in 0..60 {
            let (f, fx, _) = self.interpolate_with_jacobian(Complex64::new(x, 0.0));
            let r = f.re - target;
            if r.abs() <= 1e-13 * (1.0 + target.abs()) {
                // only meaningful if the axis is mapped into itself
                return (f.im.abs() <= 1e-9 * (1.0 + f.re.abs())).then_some(x);
            }
            if fx.re.abs() < 1e-300 {
                return None;
            }
            x -= r / fx.re;
        }
        None
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        write_grid(&mut w, &self.grid, &self.values)?;
        w.write_all(&[self.normalization.tag()])?;
        Ok(())
    }

    /// Reads a map written by [`QcMap::write_to`]; the residual is not stored.
    pub fn read_from<R: Read>(mut r: R) -> Result<Self> {
        let (grid, values) = read_grid(&mut r)?;
        let mut tag = [0u8; 1];
        r.read_exact(&mut tag)
            .map_err(|_| Error::Format("missing normalization tag".into()))?;
        Self::new(grid, values, Normalization::from_tag(tag[0])?, None)
    }
}

fn side_of(grid: &GridSpec, z: Complex64) -> Side {
    if !grid.is_conjugation_symmetric() {
        Side::Any
    } else if z.im > 0.0 {
        Side::Upper
    } else if z.im < 0.0 {
        Side::Lower
    } else {
        Side::Any
    }
}

/// Bilinear value and partial derivatives of grid samples on the stencil of `side`.
fn stencil_of(
    grid: &GridSpec,
    data: &[Complex64],
    z: Complex64,
    side: Side,
) -> (Complex64, Complex64, Complex64) {
    let n = grid.n();
    let h = grid.step();
    let (u, v) = grid.fractional(z);
    let i0 = (u.floor().max(0.0) as usize).min(n - 2);
    let (lo, hi) = match side {
        Side::Upper if grid.is_conjugation_symmetric() => (n / 2, n - 2),
        Side::Lower if grid.is_conjugation_symmetric() => (0, n / 2 - 2),
        _ => (0, n - 2),
    };
    let j0 = (v.floor().max(lo as f64) as usize).clamp(lo, hi);
    let fu = u - i0 as f64;
    let fv = v - j0 as f64;
    let f00 = data[grid.index(i0, j0)];
    let f10 = data[grid.index(i0 + 1, j0)];
    let f01 = data[grid.index(i0, j0 + 1)];
    let f11 = data[grid.index(i0 + 1, j0 + 1)];
    let value = f00 * (1.0 - fu) * (1.0 - fv)
        + f10 * fu * (1.0 - fv)
        + f01 * (1.0 - fu) * fv
        + f11 * fu * fv;
    let dx = ((f10 - f00) * (1.0 - fv) + (f11 - f01) * fv) / h;
    let dy = ((f01 - f00) * (1.0 - fu) + (f11 - f10) * fu) / h;
    (value, dx, dy)
}

/// Half-plane-aware bilinear interpolation of grid samples, with partial
/// derivatives of the interpolant. Extrapolates beyond the outermost samples.
pub(crate) fn interpolate_samples(
    grid: &GridSpec,
    data: &[Complex64],
    z: Complex64,
) -> (Complex64, Complex64, Complex64) {
    match side_of(grid, z) {
        Side::Any if grid.is_conjugation_symmetric() => {
            let a = stencil_of(grid, data, z, Side::Upper);
            let b = stencil_of(grid, data, z, Side::Lower);
            ((a.0 + b.0) * 0.5, (a.1 + b.1) * 0.5, (a.2 + b.2) * 0.5)
        }
        side => stencil_of(grid, data, z, side),
    }
}

/// Coefficient of `outer o inv(inner)` on the grid of `inner`, from the
/// coefficient `mu_outer` of `outer` and the exact derivatives of `inner`:
///
/// `mu(g(z)) = (mu_f - mu_g) / (1 - conj(mu_g) mu_f) * g_z / conj(g_z)`
///
/// at `z = inner^-1(w)`. Coefficients and `g_z` are interpolated separately,
/// so wherever `mu_f` and `mu_g` agree on the grid the result is zero.
pub fn pullback_coefficient(mu_outer: &BeltramiField, inner: &QcMap) -> Result<BeltramiField> {
    let grid = *inner.grid();
    mu_outer.grid().same_as(&grid)?;
    let mu_inner = inner
        .jet_coefficient()
        .ok_or_else(|| Error::Precondition("inner map carries no derivatives".into()))??;
    let d_inner: Vec<Complex64> = inner.jet().unwrap_or_default().iter().map(|j| j[0]).collect();
    let one = Complex64::new(1.0, 0.0);
    let values = grid
        .points()
        .into_par_iter()
        .map(|w| {
            let z = inner.invert(w)?;
            let f = interpolate_samples(&grid, mu_outer.values(), z).0;
            let g = interpolate_samples(&grid, mu_inner.values(), z).0;
            let a = interpolate_samples(&grid, &d_inner, z).0;
            if a.norm() < 1e-12 {
                return Err(Error::InversionFailed(w));
            }
            let r = (f - g) / (one - g.conj() * f);
            Ok(r * (a / a.conj()))
        })
        .collect::<Result<Vec<_>>>()?;
    BeltramiField::new(grid, values)
}

impl PlaneMap for QcMap {
    fn eval(&self, z: Complex64) -> Result<Complex64> {
        if !self.inside_square(z) {
            return Err(Error::OutsideGrid(z));
        }
        Ok(self.interpolate(z))
    }
}

/// `outer o inv(inner_k) o ... o inv(inner_1)`: the maps in `inverted` are
/// inverted in order, then `outer` is applied. Points pulled back slightly
/// outside the outer grid are evaluated by linear extrapolation.
pub struct PullBack<'a> {
    pub outer: &'a QcMap,
    pub inverted: Vec<&'a QcMap>,
}

impl PlaneMap for PullBack<'_> {
    fn eval(&self, w: Complex64) -> Result<Complex64> {
        let mut z = w;
        for m in &self.inverted {
            z = m.invert(z)?;
        }
        Ok(self.outer.interpolate(z))
    }
}

/// Samples `map` at every point of `grid`.
pub fn sample_on_grid(map: &dyn PlaneMap, grid: &GridSpec) -> Result<QcMap> {
    let values = grid
        .points()
        .into_par_iter()
        .map(|z| map.eval(z))
        .collect::<Result<Vec<_>>>()?;
    QcMap::new(*grid, values, Normalization::Fix01, None)
}

/// Finite-difference Beltrami coefficient `d-bar phi / d phi` of a sampled map.
/// The outermost ring of samples is set to 0. Vertical derivatives next to
/// the real axis of a symmetric grid use one-sided second-order stencils.
pub fn beltrami_of_map(m: &QcMap) -> Result<BeltramiField> {
    let g = *m.grid();
    let n = g.n();
    let h = g.step();
    let v = m.values();
    let symmetric = g.is_conjugation_symmetric();
    let rows: Vec<Result<Vec<Complex64>>> = (0..n)
        .into_par_iter()
        .map(|j| {
            let mut row = vec![Complex64::new(0.0, 0.0); n];
            if j == 0 || j == n - 1 {
                return Ok(row);
            }
            #[allow(clippy::needless_range_loop)]
            for i in 1..n - 1 {
                let at = |i: usize, j: usize| v[g.index(i, j)];
                let fx = (at(i + 1, j) - at(i - 1, j)) / (2.0 * h);
                let fy = if symmetric && j == n / 2 {
                    (-3.0 * at(i, j) + 4.0 * at(i, j + 1) - at(i, j + 2)) / (2.0 * h)
                } else if symmetric && j == n / 2 - 1 {
                    (3.0 * at(i, j) - 4.0 * at(i, j - 1) + at(i, j - 2)) / (2.0 * h)
                } else {
                    (at(i, j + 1) - at(i, j - 1)) / (2.0 * h)
                };
                let d = (fx - Complex64::i() * fy) * 0.5;
                let d_bar = (fx + Complex64::i() * fy) * 0.5;
                if d.norm() < 1e-12 {
                    return Err(Error::VanishingDerivative { i, j });
                }
                row[i] = d_bar / d;
            }
            Ok(row)
        })
        .collect();
    let mut values = Vec::with_capacity(g.len());
    for row in rows {
        values.extend(row?);
    }
    BeltramiField::new(g, values)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Curve {
    pub points: Vec<Complex64>,
    pub source: String,
}

impl Curve {
    pub fn new(points: Vec<Complex64>, source: impl Into<String>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::Precondition("a curve needs at least two points".into()));
        }
        if points.iter().any(|p| !(p.re.is_finite() && p.im.is_finite())) {
            return Err(Error::Precondition("curve points must be finite".into()));
        }
        Ok(Self {
            points,
            source: source.into(),
        })
    }

    /// Largest distance between consecutive samples.
    pub fn max_gap(&self) -> f64 {
        self.points
            .windows(2)
            .map(|w| (w[1] - w[0]).norm())
            .fold(0.0, f64::max)
    }

    /// Largest distance from a sample of `self` to the polyline `other`.
    pub fn directed_distance(&self, other: &Curve) -> f64 {
        self.points
            .par_iter()
            .map(|p| {
                other
                    .points
                    .windows(2)
                    .map(|s| point_segment_distance(*p, s[0], s[1]))
                    .fold(f64::INFINITY, f64::min)
            })
            .reduce(|| 0.0, f64::max)
    }

    /// Symmetric Hausdorff distance between the two polylines' samples.
    pub fn hausdorff_distance(&self, other: &Curve) -> f64 {
        self.directed_distance(other).max(other.directed_distance(self))
    }
}

fn point_segment_distance(p: Complex64, a: Complex64, b: Complex64) -> f64 {
    let ab = b - a;
    let len2 = ab.norm_sqr();
    if len2 == 0.0 {
        return (p - a).norm();
    }
    let t = ((p - a) * ab.conj()).re / len2;
    (p - (a + ab * t.clamp(0.0, 1.0))).norm()
}

/// Images of `n_points` equispaced samples of `[0, 1]`.
pub fn map_line(m: &dyn PlaneMap, n_points: usize) -> Result<Curve> {
    if n_points < 2 {
        return Err(Error::Precondition("n_points must be at least 2".into()));
    }
    let points = (0..n_points)
        .into_par_iter()
        .map(|s| m.eval(Complex64::new(s as f64 / (n_points - 1) as f64, 0.0)))
        .collect::<Result<Vec<_>>>()?;
    Curve::new(points, format!("image of [0,1], {n_points} samples"))
}
