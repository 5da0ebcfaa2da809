//! Beltrami coefficients and their infinitesimal ellipse fields.
//!
//! A coefficient `mu` at a point describes the ellipse `{v : |v + conj(v) mu| = 1}`
//! in the tangent plane: the ellipse sent to a circle by the differential of the
//! map. Its eccentricity is `(1 + |mu|) / (1 - |mu|)` and, writing
//! `mu = |mu| e^{i a}`, its major axis points at angle `a/2 + pi/2 (mod pi)`.
//!
//! The surgeries [`build_a`], [`build_b`] and [`sqrt_ellipse`] are the ellipse
//! field constructions used to straighten a quasiline representation into the
//! canonical antisymmetric one (see [`crate::canonical`]).

use std::f64::consts::PI;
use std::io::{Read, Write};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{read_grid, write_grid, GridSpec};

/// `K = (1 + k) / (1 - k)`.
pub fn k_to_big_k(k: f64) -> f64 {
    (1.0 + k) / (1.0 - k)
}

/// `k = (K - 1) / (K + 1)`.
pub fn big_k_to_k(big_k: f64) -> f64 {
    (big_k - 1.0) / (big_k + 1.0)
}

/// Eccentricity of the infinitesimal ellipse of a coefficient with modulus `r`.
pub fn eccentricity_of(r: f64) -> f64 {
    (1.0 + r) / (1.0 - r)
}

/// Major-axis angle in `[0, pi)` of the ellipse `|v + conj(v) mu| = const`.
/// Zero for a circle.
pub fn orientation_of(mu: Complex64) -> f64 {
    if mu.norm() == 0.0 {
        return 0.0;
    }
    wrap_pi(0.5 * mu.arg() + 0.5 * PI)
}

/// Inverse of ([`eccentricity_of`], [`orientation_of`]).
pub fn mu_from_ellipse(eccentricity: f64, orientation: f64) -> Complex64 {
    let r = (eccentricity - 1.0) / (eccentricity + 1.0);
    if r == 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    Complex64::from_polar(r, 2.0 * orientation - PI)
}

fn wrap_pi(theta: f64) -> f64 {
    let t = theta.rem_euclid(PI);
    // rem_euclid can round up to exactly PI
    if t >= PI {
        0.0
    } else {
        t
    }
}

/// Sampled Beltrami coefficient on a square grid.
#[derive(Debug, Clone, PartialEq)]
pub struct BeltramiField {
    grid: GridSpec,
    values: Vec<Complex64>,
    norm_bound: f64,
}

impl BeltramiField {
    /// Validates `|mu| < 1` everywhere; the norm bound is recomputed.
    pub fn new(grid: GridSpec, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "{} samples for {} grid points",
                values.len(),
                grid.len()
            )));
        }
        let mut norm_bound: f64 = 0.0;
        for (idx, v) in values.iter().enumerate() {
            let m = v.norm();
            if !(m < 1.0) {
                return Err(Error::NotContracting {
                    i: idx % grid.n(),
                    j: idx / grid.n(),
                    modulus: m,
                });
            }
            norm_bound = norm_bound.max(m);
        }
        Ok(Self {
            grid,
            values,
            norm_bound,
        })
    }

    pub fn zeros(grid: GridSpec) -> Self {
        Self {
            values: vec![Complex64::new(0.0, 0.0); grid.len()],
            grid,
            norm_bound: 0.0,
        }
    }

    /// Samples `f` at every grid point.
    pub fn from_fn(grid: GridSpec, f: impl Fn(Complex64) -> Complex64) -> Result<Self> {
        let values = grid.points().into_iter().map(f).collect();
        Self::new(grid, values)
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.values[self.grid.index(i, j)]
    }

    /// Sup norm `k`.
    pub fn norm(&self) -> f64 {
        self.norm_bound
    }

    /// Distortion constant `K = (1 + k) / (1 - k)`.
    pub fn big_k(&self) -> f64 {
        k_to_big_k(self.norm_bound)
    }

    /// Pointwise product with a complex constant.
    pub fn scaled(&self, c: Complex64) -> Result<Self> {
        Self::new(self.grid, self.values.iter().map(|v| v * c).collect())
    }

    /// Sup of `|mu|` over samples in the upper (`upper = true`) or lower half-plane.
    pub fn half_plane_norm(&self, upper: bool) -> Result<f64> {
        self.grid.require_conjugation_symmetric()?;
        let n = self.grid.n();
        let rows = if upper { n / 2..n } else { 0..n / 2 };
        Ok(rows
            .flat_map(|j| (0..n).map(move |i| (i, j)))
            .map(|(i, j)| self.get(i, j).norm())
            .fold(0.0, f64::max))
    }

    /// Returns a copy with every sample outside `|Re z - c|, |Im z - c| <= radius` set to 0.
    pub fn restricted_to_box(&self, radius: f64) -> Self {
        let g = self.grid;
        let c = g.center();
        let values = g
            .points()
            .into_iter()
            .zip(&self.values)
            .map(|(z, v)| {
                if (z.re - c.re).abs() <= radius && (z.im - c.im).abs() <= radius {
                    *v
                } else {
                    Complex64::new(0.0, 0.0)
                }
            })
            .collect();
        // restriction cannot increase |mu|
        Self::new(g, values).expect("restriction keeps |mu| < 1")
    }

    pub fn write_to<W: Write>(&self, w: W) -> Result<()> {
        write_grid(w, &self.grid, &self.values)
    }

    pub fn read_from<R: Read>(r: R) -> Result<Self> {
        let (grid, values) = read_grid(r)?;
        Self::new(grid, values)
    }
}

/// Eccentricity and major-axis orientation of the infinitesimal ellipses.
#[derive(Debug, Clone, PartialEq)]
pub struct EllipseField {
    grid: GridSpec,
    eccentricity: Vec<f64>,
    orientation: Vec<f64>,
}

impl EllipseField {
    pub fn new(grid: GridSpec, eccentricity: Vec<f64>, orientation: Vec<f64>) -> Result<Self> {
        if eccentricity.len() != grid.len() || orientation.len() != grid.len() {
            return Err(Error::GridMismatch("ellipse field size".into()));
        }
        if let Some(e) = eccentricity.iter().find(|e| !(e.is_finite() && **e >= 1.0)) {
            return Err(Error::InvalidEllipse(format!("eccentricity {e} < 1")));
        }
        if let Some(t) = orientation.iter().find(|t| !(0.0..PI).contains(*t)) {
            return Err(Error::InvalidEllipse(format!(
                "orientation {t} outside [0, pi)"
            )));
        }
        Ok(Self {
            grid,
            eccentricity,
            orientation,
        })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn eccentricity(&self) -> &[f64] {
        &self.eccentricity
    }

    pub fn orientation(&self) -> &[f64] {
        &self.orientation
    }

    /// `||M||`: the supremum of the eccentricities.
    pub fn norm(&self) -> f64 {
        self.eccentricity.iter().copied().fold(1.0, f64::max)
    }

    /// Every ellipse turned by `pi/2`; negates the coefficient.
    pub fn rotate90(&self) -> Self {
        Self {
            grid: self.grid,
            eccentricity: self.eccentricity.clone(),
            orientation: self
                .orientation
                .iter()
                .map(|t| wrap_pi(t + 0.5 * PI))
                .collect(),
        }
    }

    /// The field `z -> conj(M(conj z))`; maps `mu(z)` to `conj(mu(conj z))`.
    pub fn reflect_conjugate(&self) -> Result<Self> {
        self.grid.require_conjugation_symmetric()?;
        let n = self.grid.n();
        let mut ecc = vec![1.0; self.grid.len()];
        let mut ori = vec![0.0; self.grid.len()];
        for j in 0..n {
            let jm = self.grid.mirror_row(j);
            for i in 0..n {
                let src = self.grid.index(i, jm);
                let dst = self.grid.index(i, j);
                ecc[dst] = self.eccentricity[src];
                ori[dst] = conjugate_orientation(self.orientation[src]);
            }
        }
        Ok(Self {
            grid: self.grid,
            eccentricity: ecc,
            orientation: ori,
        })
    }
}

/// Orientation of the complex-conjugated ellipse.
fn conjugate_orientation(theta: f64) -> f64 {
    wrap_pi(-theta)
}

pub fn mu_to_ellipse(f: &BeltramiField) -> EllipseField {
    let (eccentricity, orientation) = f
        .values()
        .iter()
        .map(|mu| (eccentricity_of(mu.norm()), orientation_of(*mu)))
        .unzip();
    EllipseField {
        grid: *f.grid(),
        eccentricity,
        orientation,
    }
}

pub fn ellipse_to_mu(e: &EllipseField) -> BeltramiField {
    let values = e
        .eccentricity
        .iter()
        .zip(&e.orientation)
        .map(|(ecc, th)| mu_from_ellipse(*ecc, *th))
        .collect();
    BeltramiField::new(e.grid, values).expect("finite eccentricities give |mu| < 1")
}

/// Square root of every eccentricity; orientations are kept.
pub fn sqrt_ellipse(e: &EllipseField) -> EllipseField {
    EllipseField {
        grid: e.grid,
        eccentricity: e.eccentricity.iter().map(|x| x.sqrt()).collect(),
        orientation: e.orientation.clone(),
    }
}

/// `A(z) = N(z)` above the real axis and `conj(N(conj z))` below. The result
/// has a symmetric coefficient, so its map preserves the real line.
pub fn build_a(field: &EllipseField) -> Result<EllipseField> {
    let g = field.grid;
    g.require_conjugation_symmetric()?;
    let n = g.n();
    let mut ecc = field.eccentricity.clone();
    let mut ori = field.orientation.clone();
    for j in 0..n / 2 {
        let jm = g.mirror_row(j);
        for i in 0..n {
            let (dst, src) = (g.index(i, j), g.index(i, jm));
            ecc[dst] = field.eccentricity[src];
            ori[dst] = conjugate_orientation(field.orientation[src]);
        }
    }
    Ok(EllipseField {
        grid: g,
        eccentricity: ecc,
        orientation: ori,
    })
}

/// Largest eccentricity deviation from a circle tolerated by [`build_b`] above the axis.
pub const CIRCLE_TOLERANCE: f64 = 1e-9;

/// `B(z) = sqrt(M(z))` below the real axis and `sqrt(conj(M(conj z)))` above.
/// `M` must be a circle field on the upper half-plane.
pub fn build_b(field: &EllipseField) -> Result<EllipseField> {
    let g = field.grid;
    g.require_conjugation_symmetric()?;
    let n = g.n();
    let worst = (n / 2..n)
        .flat_map(|j| (0..n).map(move |i| (i, j)))
        .map(|(i, j)| field.eccentricity[g.index(i, j)] - 1.0)
        .fold(0.0, f64::max);
    if worst > CIRCLE_TOLERANCE {
        return Err(Error::NotCircularAbove(1.0 + worst));
    }
    let root = sqrt_ellipse(field);
    let mut ecc = root.eccentricity.clone();
    let mut ori = root.orientation.clone();
    for j in n / 2..n {
        let jm = g.mirror_row(j);
        for i in 0..n {
            let (dst, src) = (g.index(i, j), g.index(i, jm));
            ecc[dst] = root.eccentricity[src];
            ori[dst] = conjugate_orientation(root.orientation[src]);
        }
    }
    Ok(EllipseField {
        grid: g,
        eccentricity: ecc,
        orientation: ori,
    })
}

/// Sup-norm distances from the antisymmetric and symmetric conditions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymmetryResiduals {
    /// `sup |mu(conj z) + conj(mu(z))|`
    pub anti: f64,
    /// `sup |mu(conj z) - conj(mu(z))|`
    pub symm: f64,
}

pub fn symmetry_residuals(f: &BeltramiField) -> Result<SymmetryResiduals> {
    let g = f.grid();
    g.require_conjugation_symmetric()?;
    let n = g.n();
    let mut anti: f64 = 0.0;
    let mut symm: f64 = 0.0;
    for j in 0..n {
        let jm = g.mirror_row(j);
        for i in 0..n {
            let at = f.get(i, j).conj();
            let mirrored = f.get(i, jm);
            anti = anti.max((mirrored + at).norm());
            symm = symm.max((mirrored - at).norm());
        }
    }
    Ok(SymmetryResiduals { anti, symm })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn grid() -> GridSpec {
        GridSpec::centered(2.0, 16).unwrap()
    }

    fn constant(c: Complex64) -> BeltramiField {
        BeltramiField::new(grid(), vec![c; 256]).unwrap()
    }

    /// Major axis of `{v : |v + conj(v) mu| = 1}` located by sampling the radius
    /// `1 / |1 + mu e^{-2 i t}|` over directions `t`.
    fn sampled_major_axis(mu: Complex64) -> f64 {
        let samples = 200_000;
        let mut best = (0.0, f64::MIN);
        for s in 0..samples {
            let t = PI * s as f64 / samples as f64;
            let v = Complex64::from_polar(1.0, t);
            let radius = 1.0 / (v + v.conj() * mu).norm();
            if radius > best.1 {
                best = (t, radius);
            }
        }
        best.0
    }

    #[test]
    fn k_and_big_k_round_trip() {
        for s in 0..=990 {
            let k = s as f64 / 1000.0;
            assert!((big_k_to_k(k_to_big_k(k)) - k).abs() <= 1e-15, "k = {k}");
        }
    }

    #[test]
    fn one_third_gives_eccentricity_two() {
        let e = mu_to_ellipse(&constant(Complex64::new(1.0 / 3.0, 0.0)));
        assert!(e.eccentricity().iter().all(|x| (x - 2.0).abs() < 1e-15));
    }

    #[test]
    fn zero_field_is_a_circle_field() {
        let e = mu_to_ellipse(&constant(Complex64::new(0.0, 0.0)));
        assert!(e.eccentricity().iter().all(|x| *x == 1.0));
        assert!(e.orientation().iter().all(|x| *x == 0.0));
        assert!(ellipse_to_mu(&e).values().iter().all(|m| m.norm() == 0.0));
    }

    #[test]
    fn orientation_matches_sampled_locus() {
        for &(r, a) in &[(0.2, PI / 3.0), (0.5, -2.0), (0.7, 3.0), (0.1, 0.0)] {
            let mu = Complex64::from_polar(r, a);
            let theta = orientation_of(mu);
            let sampled = sampled_major_axis(mu);
            let diff = (theta - sampled).rem_euclid(PI);
            assert!(diff.min(PI - diff) < 1e-4, "mu = {mu}: {theta} vs {sampled}");
        }
        let mu = Complex64::from_polar(0.2, PI / 3.0);
        let back = mu_from_ellipse(eccentricity_of(mu.norm()), orientation_of(mu));
        assert!((back - mu).norm() < 1e-12);
    }

    #[test]
    fn eccentricity_three_gives_half() {
        let e = EllipseField::new(grid(), vec![3.0; 256], vec![0.4; 256]).unwrap();
        assert!(ellipse_to_mu(&e).values().iter().all(|m| (m.norm() - 0.5).abs() < 1e-15));
    }

    #[test]
    fn sqrt_keeps_alignment() {
        let e = EllipseField::new(grid(), vec![4.0; 256], vec![1.1; 256]).unwrap();
        let r = sqrt_ellipse(&e);
        assert!(r.eccentricity().iter().all(|x| *x == 2.0));
        assert_eq!(r.orientation(), e.orientation());
        let e16 = EllipseField::new(grid(), vec![16.0; 256], vec![0.0; 256]).unwrap();
        assert!(sqrt_ellipse(&sqrt_ellipse(&e16)).eccentricity().iter().all(|x| *x == 2.0));
        let circle = EllipseField::new(grid(), vec![1.0; 256], vec![0.0; 256]).unwrap();
        assert_eq!(sqrt_ellipse(&circle).norm(), 1.0);
    }

    #[test]
    fn rejects_non_contracting_samples() {
        let mut v = vec![Complex64::new(0.0, 0.0); 256];
        v[37] = Complex64::new(0.0, 1.0);
        assert!(matches!(
            BeltramiField::new(grid(), v),
            Err(Error::NotContracting { i: 5, j: 2, .. })
        ));
        assert!(EllipseField::new(grid(), vec![0.5; 256], vec![0.0; 256]).is_err());
    }

    #[test]
    fn build_a_keeps_real_constants() {
        let f = constant(Complex64::new(0.4, 0.0));
        let a = ellipse_to_mu(&build_a(&mu_to_ellipse(&f)).unwrap());
        for (x, y) in a.values().iter().zip(f.values()) {
            assert!((x - y).norm() < 1e-15);
        }
    }

    #[test]
    fn build_a_mirrors_imaginary_constants() {
        let f = constant(Complex64::new(0.0, 0.3));
        let a = ellipse_to_mu(&build_a(&mu_to_ellipse(&f)).unwrap());
        let g = grid();
        for j in 0..16 {
            let expected = if g.is_upper_row(j) { 0.3 } else { -0.3 };
            for i in 0..16 {
                assert!((a.get(i, j) - Complex64::new(0.0, expected)).norm() < 1e-15);
            }
        }
        assert!(symmetry_residuals(&a).unwrap().symm < 1e-12);
    }

    #[test]
    fn build_a_requires_symmetric_grid() {
        let g = GridSpec::new(Complex64::new(0.0, 0.5), 2.0, 16).unwrap();
        let e = EllipseField::new(g, vec![1.0; 256], vec![0.0; 256]).unwrap();
        assert!(matches!(build_a(&e), Err(Error::NotConjugationSymmetric(_))));
    }

    #[test]
    fn build_b_reflects_square_roots() {
        let g = grid();
        let ecc: Vec<f64> = (0..256).map(|k| if k < 128 { 4.0 } else { 1.0 }).collect();
        let ori: Vec<f64> = (0..256).map(|k| if k < 128 { 0.3 } else { 0.0 }).collect();
        let b = build_b(&EllipseField::new(g, ecc, ori).unwrap()).unwrap();
        assert!(b.eccentricity().iter().all(|x| *x == 2.0));
        assert!((b.orientation()[0] - 0.3).abs() < 1e-15);
        assert!((b.orientation()[255] - (PI - 0.3)).abs() < 1e-15);
        assert!(symmetry_residuals(&ellipse_to_mu(&b)).unwrap().symm < 1e-12);

        let circles = EllipseField::new(g, vec![1.0; 256], vec![0.0; 256]).unwrap();
        assert_eq!(build_b(&circles).unwrap().norm(), 1.0);
    }

    #[test]
    fn build_b_rejects_non_circles_above() {
        let e = EllipseField::new(grid(), vec![1.5; 256], vec![0.0; 256]).unwrap();
        assert!(matches!(build_b(&e), Err(Error::NotCircularAbove(_))));
    }

    #[test]
    fn residuals_of_constants() {
        let r = symmetry_residuals(&constant(Complex64::new(0.0, 0.3))).unwrap();
        assert!(r.anti < 1e-15 && (r.symm - 0.6).abs() < 1e-15);
        let r = symmetry_residuals(&constant(Complex64::new(0.3, 0.0))).unwrap();
        assert!(r.symm < 1e-15 && (r.anti - 0.6).abs() < 1e-15);
        let r = symmetry_residuals(&constant(Complex64::new(0.0, 0.0))).unwrap();
        assert_eq!((r.anti, r.symm), (0.0, 0.0));
    }

    fn field_strategy() -> impl Strategy<Value = BeltramiField> {
        prop::collection::vec((0.0..0.95f64, -PI..PI), 256).prop_map(|v| {
            let values = v.into_iter().map(|(r, a)| Complex64::from_polar(r, a)).collect();
            BeltramiField::new(grid(), values).unwrap()
        })
    }

    proptest! {
        #[test]
        fn ellipse_round_trip(f in field_strategy()) {
            let back = ellipse_to_mu(&mu_to_ellipse(&f));
            for (x, y) in back.values().iter().zip(f.values()) {
                prop_assert!((x - y).norm() < 1e-12);
            }
            let e = mu_to_ellipse(&f);
            let again = mu_to_ellipse(&ellipse_to_mu(&e));
            for (x, y) in again.eccentricity().iter().zip(e.eccentricity()) {
                prop_assert!((x - y).abs() <= 1e-12 * x);
            }
        }

        #[test]
        fn rotation_negates_mu(f in field_strategy()) {
            let rotated = ellipse_to_mu(&mu_to_ellipse(&f).rotate90());
            for (x, y) in rotated.values().iter().zip(f.values()) {
                prop_assert!((x + y).norm() < 1e-12);
            }
        }

        #[test]
        fn conjugation_then_rotation_is_antisymmetry(f in field_strategy()) {
            let e = mu_to_ellipse(&f);
            let conj = ellipse_to_mu(&e.reflect_conjugate().unwrap());
            let anti = ellipse_to_mu(&e.reflect_conjugate().unwrap().rotate90());
            let g = *f.grid();
            for j in 0..16 {
                for i in 0..16 {
                    let mirrored = f.get(i, g.mirror_row(j)).conj();
                    prop_assert!((conj.get(i, j) - mirrored).norm() < 1e-12);
                    prop_assert!((anti.get(i, j) + mirrored).norm() < 1e-12);
                }
            }
            // a field fixed by rotate90 . reflect_conjugate is antisymmetric
            let mut values = f.values().to_vec();
            for j in 0..8 {
                for i in 0..16 {
                    values[g.index(i, j)] = -f.get(i, g.mirror_row(j)).conj();
                }
            }
            let sym = BeltramiField::new(g, values).unwrap();
            prop_assert!(symmetry_residuals(&sym).unwrap().anti < 1e-15);
            let fixed = ellipse_to_mu(&mu_to_ellipse(&sym).reflect_conjugate().unwrap().rotate90());
            for (x, y) in fixed.values().iter().zip(sym.values()) {
                prop_assert!((x - y).norm() < 1e-12);
            }
        }

        #[test]
        fn sqrt_commutes_with_norm(f in field_strategy()) {
            let e = mu_to_ellipse(&f);
            prop_assert!((sqrt_ellipse(&e).norm() - e.norm().sqrt()).abs() < 1e-12 * e.norm());
        }

        #[test]
        fn built_fields_are_symmetric(f in field_strategy()) {
            let a = ellipse_to_mu(&build_a(&mu_to_ellipse(&f)).unwrap());
            prop_assert!(symmetry_residuals(&a).unwrap().symm < 1e-12);
            let lower_only = BeltramiField::new(
                *f.grid(),
                f.values().iter().enumerate().map(|(k, v)| if k < 128 { *v } else { Complex64::new(0.0, 0.0) }).collect(),
            ).unwrap();
            let b = build_b(&mu_to_ellipse(&lower_only)).unwrap();
            prop_assert!(symmetry_residuals(&ellipse_to_mu(&b)).unwrap().symm < 1e-12);
            prop_assert!(b.norm() <= mu_to_ellipse(&lower_only).norm().sqrt() * (1.0 + 1e-12));
        }
    }
}
