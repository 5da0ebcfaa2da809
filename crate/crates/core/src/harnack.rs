//! Positive harmonic functions on the unit disc and the symmetric Harnack
//! inequality.
//!
//! A function is given by nonnegative boundary samples at `m` equispaced
//! angles. With `c_n` the discrete Fourier coefficients of the samples, the
//! holomorphic function `F(z) = c_0 + 2 sum_{0<n<m/2} c_n z^n + c_{m/2} z^{m/2}`
//! has `Re F` equal to the Poisson integral of the trigonometric interpolant
//! and `Im F` its harmonic conjugate vanishing at 0. Both are exact for
//! densities of degree below `m/2`.
//!
//! If `h > 0` and the derivative of `h` at 0 vanishes in the direction of
//! `lambda`, then
//! `(1 - |l|^2)/(1 + |l|^2) h(l) <= h(0) <= (1 + |l|^2)/(1 - |l|^2) h(l)`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::Serialize;

use crate::error::{Error, Result};

/// Evaluation is refused closer to the circle than this.
pub const MAX_RADIUS: f64 = 0.999;

#[derive(Debug, Clone, PartialEq)]
pub struct HarmonicFn {
    density: Vec<f64>,
    /// `c_0 ..= c_{m/2}`, where `c_n = (1/m) sum_k f_k e^{-i n theta_k}`.
    coeffs: Vec<Complex64>,
}

fn fft(data: &mut [Complex64], inverse: bool) {
    let mut planner = FftPlanner::new();
    let plan = if inverse {
        planner.plan_fft_inverse(data.len())
    } else {
        planner.plan_fft_forward(data.len())
    };
    plan.process(data);
}

impl HarmonicFn {
    pub fn new(density: Vec<f64>) -> Result<Self> {
        let m = density.len();
        if m < 8 || !m.is_power_of_two() {
            return Err(Error::Precondition(format!(
                "{m} boundary samples; need a power of two >= 8"
            )));
        }
        if density.iter().any(|v| !(*v >= 0.0 && v.is_finite())) {
            return Err(Error::Precondition("density must be nonnegative".into()));
        }
        if !(density.iter().sum::<f64>() > 0.0) {
            return Err(Error::Precondition("density vanishes identically".into()));
        }
        let mut buf: Vec<Complex64> = density.iter().map(|v| Complex64::new(*v, 0.0)).collect();
        fft(&mut buf, false);
        let coeffs = buf[..=m / 2].iter().map(|c| c / m as f64).collect();
        Ok(Self { density, coeffs })
    }

    /// Samples `f` at `m` equispaced angles starting at 0.
    pub fn from_fn(m: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new((0..m).map(|k| f(2.0 * PI * k as f64 / m as f64)).collect())
    }

    /// Rebuilds the density from modified coefficients; fails if the
    /// resulting samples are negative.
    fn from_coeffs(m: usize, coeffs: Vec<Complex64>) -> Result<Self> {
        let mut buf = vec![Complex64::new(0.0, 0.0); m];
        buf[0] = coeffs[0];
        for n in 1..m / 2 {
            buf[n] = coeffs[n];
            buf[m - n] = coeffs[n].conj();
        }
        buf[m / 2] = Complex64::new(coeffs[m / 2].re, 0.0);
        fft(&mut buf, true);
        let density = buf.iter().map(|c| c.re).collect::<Vec<_>>();
        // clear round-off below zero
        let floor = -1e-12 * density.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        if density.iter().any(|v| *v < floor) {
            return Err(Error::Precondition("transformed density is negative".into()));
        }
        Self::new(density.into_iter().map(|v| v.max(0.0)).collect())
    }

    pub fn density(&self) -> &[f64] {
        &self.density
    }

    pub fn m(&self) -> usize {
        self.density.len()
    }

    /// `F(z) = h(z) + i h~(z)`.
    pub fn analytic(&self, z: Complex64) -> Result<Complex64> {
        if !(z.norm() <= MAX_RADIUS) {
            return Err(Error::Precondition(format!("|z| = {} > {MAX_RADIUS}", z.norm())));
        }
        let half = self.m() / 2;
        let mut acc = self.coeffs[half];
        for n in (1..half).rev() {
            acc = acc * z + 2.0 * self.coeffs[n];
        }
        Ok(acc * z + self.coeffs[0])
    }

    pub fn eval(&self, z: Complex64) -> Result<f64> {
        Ok(self.analytic(z)?.re)
    }

    /// `(d_x h + i d_y h)(0) = 2 conj(c_1)`.
    pub fn gradient_at_zero(&self) -> Complex64 {
        2.0 * self.coeffs[1].conj()
    }

    /// Derivative of `h` at 0 in the direction of `lambda`.
    pub fn directional_derivative(&self, lambda: Complex64) -> f64 {
        let u = lambda / lambda.norm();
        (self.gradient_at_zero() * u.conj()).re
    }

    pub fn conjugate(&self) -> HarmonicConjugate<'_> {
        HarmonicConjugate { h: self }
    }

    /// `z -> h(e^{i angle} z)`.
    pub fn rotated(&self, angle: f64) -> Result<Self> {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(n, c)| c * Complex64::from_polar(1.0, n as f64 * angle))
            .collect();
        Self::from_coeffs(self.m(), coeffs)
    }

    /// Rotation after which the gradient at 0 points along the imaginary
    /// axis, so real directions have vanishing derivative.
    pub fn gradient_to_imaginary_axis(&self) -> Result<Self> {
        let c1 = self.coeffs[1];
        if c1.norm() == 0.0 {
            return Ok(self.clone());
        }
        self.rotated(PI / 2.0 - c1.arg())
    }

    /// `(h(z) + h(z*)) / 2` for the reflection `z*` across the line through 0
    /// at `angle`.
    pub fn symmetrized(&self, angle: f64) -> Result<Self> {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(n, c)| (c + c.conj() * Complex64::from_polar(1.0, -2.0 * n as f64 * angle)) * 0.5)
            .collect();
        Self::from_coeffs(self.m(), coeffs)
    }

    /// Scaled so that `h(0) = 1`.
    pub fn normalized(&self) -> Result<Self> {
        let h0 = self.coeffs[0].re;
        Self::new(self.density.iter().map(|v| v / h0).collect())
    }
}

/// `h~`, the harmonic conjugate with `h~(0) = 0`.
pub struct HarmonicConjugate<'a> {
    h: &'a HarmonicFn,
}

impl HarmonicConjugate<'_> {
    pub fn eval(&self, z: Complex64) -> Result<f64> {
        Ok(self.h.analytic(z)?.im)
    }
}

/// Largest Cauchy-Riemann residual of `h + i h~` by central differences
/// with step `step` at the given points.
pub fn cauchy_riemann_residual(h: &HarmonicFn, points: &[Complex64], step: f64) -> Result<f64> {
    let c = h.conjugate();
    let mut worst: f64 = 0.0;
    for &z in points {
        let dx = Complex64::new(step, 0.0);
        let dy = Complex64::new(0.0, step);
        let ux = (h.eval(z + dx)? - h.eval(z - dx)?) / (2.0 * step);
        let uy = (h.eval(z + dy)? - h.eval(z - dy)?) / (2.0 * step);
        let vx = (c.eval(z + dx)? - c.eval(z - dx)?) / (2.0 * step);
        let vy = (c.eval(z + dy)? - c.eval(z - dy)?) / (2.0 * step);
        worst = worst.max((ux - vy).abs()).max((uy + vx).abs());
    }
    Ok(worst)
}

/// `f(lambda) = (g - 1) / (g + 1)` with `g = h(lambda) + i h~(lambda)`, for
/// `h(0) = 1` and vanishing gradient at 0.
pub fn schwarz_witness(h: &HarmonicFn, lambda: Complex64) -> Result<Complex64> {
    if (h.eval(Complex64::new(0.0, 0.0))? - 1.0).abs() > 1e-10 {
        return Err(Error::Precondition("h(0) must be 1".into()));
    }
    if h.gradient_at_zero().norm() > 1e-10 {
        return Err(Error::Precondition(format!(
            "gradient at 0 is {}",
            h.gradient_at_zero()
        )));
    }
    let g = h.analytic(lambda)?;
    if (g + 1.0).norm() < 1e-300 {
        return Err(Error::Precondition("h + i h~ = -1".into()));
    }
    Ok((g - 1.0) / (g + 1.0))
}

/// Tolerance on the vanishing directional derivative.
pub const GRADIENT_TOL: f64 = 1e-10;
/// Slack allowed on both Harnack inequalities.
pub const HARNACK_SLACK: f64 = 1e-8;

#[derive(Debug, Clone, Copy, Serialize)]
pub struct HarnackReport {
    pub lambda: [f64; 2],
    pub h0: f64,
    pub h_lambda: f64,
    /// `h(0) / h(lambda)`.
    pub ratio: f64,
    /// `(1 - |l|^2) / (1 + |l|^2)`.
    pub lower_factor: f64,
    /// `h(0) - lower_factor h(lambda)`.
    pub lower_slack: f64,
    /// `h(lambda) / lower_factor - h(0)`.
    pub upper_slack: f64,
    pub holds: bool,
}

pub fn verify_symmetric_harnack(h: &HarmonicFn, lambda: Complex64) -> Result<HarnackReport> {
    if lambda.norm() > 0.0 && h.directional_derivative(lambda).abs() > GRADIENT_TOL {
        return Err(Error::Precondition(format!(
            "derivative {} in the direction of lambda",
            h.directional_derivative(lambda)
        )));
    }
    let h0 = h.eval(Complex64::new(0.0, 0.0))?;
    let hl = h.eval(lambda)?;
    Ok(symmetric_bounds(lambda, h0, hl))
}

fn symmetric_bounds(lambda: Complex64, h0: f64, hl: f64) -> HarnackReport {
    let r2 = lambda.norm_sqr();
    let factor = (1.0 - r2) / (1.0 + r2);
    let lower_slack = h0 - factor * hl;
    let upper_slack = hl / factor - h0;
    HarnackReport {
        lambda: [lambda.re, lambda.im],
        h0,
        h_lambda: hl,
        ratio: h0 / hl,
        lower_factor: factor,
        lower_slack,
        upper_slack,
        holds: lower_slack >= -HARNACK_SLACK && upper_slack >= -HARNACK_SLACK,
    }
}

/// Whether `h(0) / h(lambda)` lies in the classical range
/// `[(1 - |l|)/(1 + |l|), (1 + |l|)/(1 - |l|)]`.
pub fn classical_harnack_holds(h: &HarmonicFn, lambda: Complex64) -> Result<bool> {
    let r = lambda.norm();
    let ratio = h.eval(Complex64::new(0.0, 0.0))? / h.eval(lambda)?;
    Ok(ratio >= (1.0 - r) / (1.0 + r) - HARNACK_SLACK && ratio <= (1.0 + r) / (1.0 - r) + HARNACK_SLACK)
}

/// The subharmonic function `1 + 10 |z|^2` has vanishing gradient at 0 but
/// breaks the symmetric bound at `|lambda| = 1/2`.
pub fn subharmonic_probe() -> HarnackReport {
    let lambda = Complex64::new(0.5, 0.0);
    let u = |z: Complex64| 1.0 + 10.0 * z.norm_sqr();
    symmetric_bounds(lambda, u(Complex64::new(0.0, 0.0)), u(lambda))
}

/// Positive density of degree `degree` on `m` samples: random Fourier
/// coefficients, shifted so that the minimum is a fixed fraction of the mean.
pub fn random_density(m: usize, degree: usize, rng: &mut impl Rng) -> Result<HarmonicFn> {
    if degree == 0 || degree >= m / 2 {
        return Err(Error::Precondition(format!("degree {degree} outside 1..{}", m / 2)));
    }
    let terms: Vec<(f64, f64)> = (1..=degree)
        .map(|n| {
            let decay = 1.0 / n as f64;
            (rng.gen_range(-1.0..1.0) * decay, rng.gen_range(-1.0..1.0) * decay)
        })
        .collect();
    let raw: Vec<f64> = (0..m)
        .map(|k| {
            let t = 2.0 * PI * k as f64 / m as f64;
            terms
                .iter()
                .enumerate()
                .map(|(i, (a, b))| {
                    let n = (i + 1) as f64;
                    a * (n * t).cos() + b * (n * t).sin()
                })
                .sum()
        })
        .collect();
    let lo = raw.iter().copied().fold(f64::INFINITY, f64::min);
    let spread = raw.iter().copied().fold(f64::NEG_INFINITY, f64::max) - lo;
    let shift = rng.gen_range(0.02..0.5) * spread.max(1e-3);
    HarmonicFn::new(raw.into_iter().map(|v| v - lo + shift).collect())
}

#[derive(Debug, Clone, Serialize)]
pub struct CampaignConfig {
    pub densities: usize,
    pub base_seed: u64,
    pub radii: Vec<f64>,
    pub m: usize,
    pub max_degree: usize,
    /// Extra random directions per radius for the Schwarz witness.
    pub witness_directions: usize,
}

impl Default for CampaignConfig {
    fn default() -> Self {
        Self {
            densities: 200,
            base_seed: 0,
            radii: vec![0.3, 0.6, 0.9],
            m: 4096,
            max_degree: 12,
            witness_directions: 8,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CampaignSummary {
    pub densities: usize,
    pub harnack_samples: usize,
    pub violations: usize,
    pub worst_lower_slack: f64,
    pub worst_upper_slack: f64,
    pub witness_samples: usize,
    pub witness_violations: usize,
    /// Smallest `|lambda|^2 + 1e-6 - |f(lambda)|`.
    pub worst_witness_slack: f64,
    pub classical_violations: usize,
    /// Expected to fail the symmetric bound.
    pub subharmonic_probe: HarnackReport,
    pub seeds: Vec<u64>,
}

impl CampaignSummary {
    pub fn passed(&self) -> bool {
        self.violations == 0
            && self.witness_violations == 0
            && self.classical_violations == 0
            && !self.subharmonic_probe.holds
    }
}

struct DensityOutcome {
    reports: Vec<HarnackReport>,
    witness_slacks: Vec<f64>,
    classical_failures: usize,
}

fn one_density(cfg: &CampaignConfig, seed: u64) -> Result<DensityOutcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let degree = rng.gen_range(1..=cfg.max_degree);
    let h = random_density(cfg.m, degree, &mut rng)?.gradient_to_imaginary_axis()?;
    let witness = h.symmetrized(0.0)?.normalized()?;
    let mut reports = Vec::new();
    let mut witness_slacks = Vec::new();
    let mut classical_failures = 0;
    for &r in &cfg.radii {
        for lambda in [Complex64::new(r, 0.0), Complex64::new(-r, 0.0)] {
            reports.push(verify_symmetric_harnack(&h, lambda)?);
            if !classical_harnack_holds(&h, lambda)? {
                classical_failures += 1;
            }
        }
        let mut directions = vec![0.0, PI];
        directions.extend((0..cfg.witness_directions).map(|_| rng.gen_range(-PI..PI)));
        for angle in directions {
            let lambda = Complex64::from_polar(r, angle);
            let f = schwarz_witness(&witness, lambda)?;
            witness_slacks.push(lambda.norm_sqr() + 1e-6 - f.norm());
        }
    }
    Ok(DensityOutcome {
        reports,
        witness_slacks,
        classical_failures,
    })
}

pub fn run_campaign(cfg: &CampaignConfig) -> Result<CampaignSummary> {
    let seeds: Vec<u64> = (0..cfg.densities as u64).map(|i| cfg.base_seed + i).collect();
    let outcomes = seeds
        .par_iter()
        .map(|&s| one_density(cfg, s))
        .collect::<Result<Vec<_>>>()?;
    let reports: Vec<&HarnackReport> = outcomes.iter().flat_map(|o| &o.reports).collect();
    let slacks: Vec<f64> = outcomes.iter().flat_map(|o| o.witness_slacks.iter().copied()).collect();
    Ok(CampaignSummary {
        densities: cfg.densities,
        harnack_samples: reports.len(),
        violations: reports.iter().filter(|r| !r.holds).count(),
        worst_lower_slack: reports.iter().map(|r| r.lower_slack).fold(f64::INFINITY, f64::min),
        worst_upper_slack: reports.iter().map(|r| r.upper_slack).fold(f64::INFINITY, f64::min),
        witness_samples: slacks.len(),
        witness_violations: slacks.iter().filter(|s| **s < 0.0).count(),
        worst_witness_slack: slacks.iter().copied().fold(f64::INFINITY, f64::min),
        classical_violations: outcomes.iter().map(|o| o.classical_failures).sum(),
        subharmonic_probe: subharmonic_probe(),
        seeds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const M: usize = 256;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn closed_form_poisson_integrals() {
        let one = HarmonicFn::from_fn(M, |_| 1.0).unwrap();
        assert!((one.eval(c(0.3, -0.7)).unwrap() - 1.0).abs() < 1e-14);
        assert_eq!(one.gradient_at_zero(), c(0.0, 0.0));
        let cos = HarmonicFn::from_fn(M, |t| 1.0 + t.cos()).unwrap();
        assert!((cos.eval(c(0.5, 0.0)).unwrap() - 1.5).abs() < 1e-14);
        assert!((cos.gradient_at_zero() - c(1.0, 0.0)).norm() < 1e-14);
        // conjugate of Re z is Im z
        assert!((cos.conjugate().eval(c(0.2, 0.35)).unwrap() - 0.35).abs() < 1e-14);
        assert!(one.conjugate().eval(c(0.6, 0.1)).unwrap().abs() < 1e-14);
        let sin = HarmonicFn::from_fn(M, |t| 1.0 + t.sin()).unwrap();
        assert!((sin.eval(c(0.0, 0.3)).unwrap() - 1.3).abs() < 1e-14);
    }

    #[test]
    fn rejects_bad_densities() {
        assert!(HarmonicFn::new(vec![1.0; 12]).is_err());
        assert!(HarmonicFn::new(vec![-1.0; 16]).is_err());
        assert!(HarmonicFn::new(vec![0.0; 16]).is_err());
        let one = HarmonicFn::from_fn(M, |_| 1.0).unwrap();
        assert!(one.eval(c(0.9995, 0.0)).is_err());
    }

    #[test]
    fn orthogonal_gradient_example() {
        let h = HarmonicFn::from_fn(M, |t| 1.0 + t.cos()).unwrap();
        let r = verify_symmetric_harnack(&h, c(0.0, 0.5)).unwrap();
        assert!((r.h_lambda - 1.0).abs() < 1e-14);
        assert!((r.lower_factor - 0.6).abs() < 1e-15);
        assert!(r.holds);
        assert!(matches!(
            verify_symmetric_harnack(&h, c(0.5, 0.0)),
            Err(Error::Precondition(_))
        ));
        let zero = verify_symmetric_harnack(&h, c(0.0, 0.0)).unwrap();
        assert_eq!(zero.h0, zero.h_lambda);
    }

    #[test]
    fn subharmonic_counterexample_breaks_the_bound() {
        let probe = subharmonic_probe();
        assert!(!probe.holds);
        assert!(probe.lower_slack < 0.0);
    }

    #[test]
    fn witness_vanishes_to_second_order() {
        let one = HarmonicFn::from_fn(M, |_| 1.0).unwrap();
        assert_eq!(schwarz_witness(&one, c(0.4, 0.2)).unwrap(), c(0.0, 0.0));
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let h = random_density(M, 6, &mut rng).unwrap().gradient_to_imaginary_axis().unwrap();
        let w = h.symmetrized(0.0).unwrap().normalized().unwrap();
        assert_eq!(schwarz_witness(&w, c(0.0, 0.0)).unwrap().norm(), 0.0);
        let tiny = schwarz_witness(&w, c(1e-4, 1e-4)).unwrap().norm() / 1.5e-4;
        assert!(tiny < 1e-3);
        assert!(schwarz_witness(&h, c(0.2, 0.0)).is_err());
    }

    #[test]
    fn small_campaign_passes() {
        let cfg = CampaignConfig {
            densities: 20,
            m: 512,
            ..Default::default()
        };
        let s = run_campaign(&cfg).unwrap();
        assert!(s.passed(), "{s:?}");
        assert_eq!(s.harnack_samples, 20 * 6);
    }

    proptest! {
        #[test]
        fn symmetrization_kills_the_normal_gradient(seed in 0u64..1000, angle in -3.0f64..3.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let h = random_density(M, 5, &mut rng).unwrap();
            let s = h.symmetrized(angle).unwrap();
            let normal = Complex64::from_polar(1.0, angle + PI / 2.0);
            prop_assert!(s.directional_derivative(normal).abs() < 1e-12);
        }

        #[test]
        fn conjugate_satisfies_cauchy_riemann(seed in 0u64..1000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let h = random_density(M, 8, &mut rng).unwrap();
            let pts: Vec<Complex64> = (0..16).map(|k| Complex64::from_polar(0.9 * (k as f64 / 16.0), k as f64)).collect();
            prop_assert!(cauchy_riemann_residual(&h, &pts, 1e-5).unwrap() <= 1e-8);
        }

        #[test]
        fn mean_value_over_circles(seed in 0u64..1000, r in 0.05f64..0.95) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let h = random_density(M, 10, &mut rng).unwrap();
            let count = 64;
            let mean = (0..count)
                .map(|k| h.eval(Complex64::from_polar(r, 2.0 * PI * k as f64 / count as f64)).unwrap())
                .sum::<f64>() / count as f64;
            prop_assert!((mean - h.eval(Complex64::new(0.0, 0.0)).unwrap()).abs() < 1e-10);
        }

        #[test]
        fn witness_obeys_schwarz(seed in 0u64..1000, r in 0.0f64..0.8, t in -3.2f64..3.2) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let h = random_density(M, 10, &mut rng).unwrap().gradient_to_imaginary_axis().unwrap();
            let w = h.symmetrized(0.0).unwrap().normalized().unwrap();
            let lambda = Complex64::from_polar(r, t);
            prop_assert!(schwarz_witness(&w, lambda).unwrap().norm() <= r * r + 1e-6);
        }
    }
}
