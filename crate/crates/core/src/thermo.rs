//! Covering sums along a holomorphic motion.
//!
//! Cover `[0, 1]` by `n` intervals `[j/n, (j+1)/n]`. Along the motion the
//! complex radius `r_j(lambda) = phi_lambda(b_j) - phi_lambda(a_j)` is
//! holomorphic in `lambda`. For a probability vector `nu` over the intervals
//! the entropy is `I = -sum nu_j log nu_j` and the Lyapunov exponent
//! `Lambda(lambda) = -sum nu_j log |r_j(lambda)|`. Jensen's inequality gives
//! `log sum |r_j|^p >= I - p Lambda`, with equality at the Gibbs weights
//! `nu_j ~ |r_j|^p`.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::motion::{MotionFamily, LAMBDA_MATCH};
use crate::qcmap::PlaneMap;

/// Radii below this are treated as a collapse of the map.
pub const MIN_RADIUS: f64 = 1e-14;

#[derive(Debug, Clone)]
pub struct CoveringData {
    n: usize,
    lambdas: Vec<Complex64>,
    /// `radii[l][j] = r_j(lambdas[l])`.
    radii: Vec<Vec<Complex64>>,
}

impl CoveringData {
    pub fn new(lambdas: Vec<Complex64>, radii: Vec<Vec<Complex64>>) -> Result<Self> {
        if lambdas.len() != radii.len() || lambdas.is_empty() {
            return Err(Error::Precondition(
                "one radius vector per motion parameter is required".into(),
            ));
        }
        let n = radii[0].len();
        if n == 0 || radii.iter().any(|r| r.len() != n) {
            return Err(Error::Precondition("radius vectors must share a positive length".into()));
        }
        for r in &radii {
            if let Some((index, v)) = r.iter().enumerate().find(|(_, v)| !(v.norm() >= MIN_RADIUS)) {
                return Err(Error::ZeroRadius {
                    index,
                    radius: v.norm(),
                });
            }
        }
        Ok(Self { n, lambdas, radii })
    }

    /// Radii of `n` equal intervals of `[0, 1]` for every member of `family`.
    pub fn from_family(family: &MotionFamily, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::Precondition("n must be positive".into()));
        }
        let radii = family
            .maps()
            .par_iter()
            .map(|m| {
                let ends = (0..=n)
                    .map(|j| m.eval(Complex64::new(j as f64 / n as f64, 0.0)))
                    .collect::<Result<Vec<_>>>()?;
                Ok(ends.windows(2).map(|w| w[1] - w[0]).collect())
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(family.lambdas().to_vec(), radii)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn lambdas(&self) -> &[Complex64] {
        &self.lambdas
    }

    pub fn radii_at(&self, lambda: Complex64) -> Result<&[Complex64]> {
        let idx = self
            .lambdas
            .iter()
            .position(|l| (l - lambda).norm() <= LAMBDA_MATCH)
            .ok_or(Error::UnknownLambda(lambda))?;
        Ok(&self.radii[idx])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Distribution {
    nu: Vec<f64>,
}

impl Distribution {
    pub fn new(nu: Vec<f64>) -> Result<Self> {
        if nu.is_empty() {
            return Err(Error::InvalidDistribution("empty".into()));
        }
        if nu.iter().any(|v| !(*v >= 0.0 && v.is_finite())) {
            return Err(Error::InvalidDistribution("negative or non-finite weight".into()));
        }
        let total: f64 = nu.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidDistribution(format!("weights sum to {total}")));
        }
        Ok(Self { nu })
    }

    pub fn uniform(n: usize) -> Result<Self> {
        Self::new(vec![1.0 / n as f64; n])
    }

    pub fn weights(&self) -> &[f64] {
        &self.nu
    }
}

fn check_len(c: &CoveringData, nu: &Distribution) -> Result<()> {
    if nu.nu.len() != c.n {
        return Err(Error::InvalidDistribution(format!(
            "{} weights for {} intervals",
            nu.nu.len(),
            c.n
        )));
    }
    Ok(())
}

/// `sum_j |r_j(lambda)|^p`.
pub fn covering_sum(c: &CoveringData, lambda: Complex64, p: f64) -> Result<f64> {
    Ok(log_covering_sum(c, lambda, p)?.exp())
}

/// `log sum_j |r_j(lambda)|^p`, evaluated without overflow.
pub fn log_covering_sum(c: &CoveringData, lambda: Complex64, p: f64) -> Result<f64> {
    if !(p > 0.0) {
        return Err(Error::Precondition(format!("p = {p} must be positive")));
    }
    let logs: Vec<f64> = c.radii_at(lambda)?.iter().map(|r| p * r.norm().ln()).collect();
    Ok(log_sum_exp(&logs))
}

fn log_sum_exp(x: &[f64]) -> f64 {
    let top = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    top + x.iter().map(|v| (v - top).exp()).sum::<f64>().ln()
}

/// `-sum nu_j log nu_j`, with `0 log 0 = 0`.
pub fn entropy(nu: &Distribution) -> f64 {
    -nu.nu
        .iter()
        .filter(|v| **v > 0.0)
        .map(|v| v * v.ln())
        .sum::<f64>()
}

/// `-sum nu_j log |r_j(lambda)|`.
pub fn lyapunov(c: &CoveringData, nu: &Distribution, lambda: Complex64) -> Result<f64> {
    check_len(c, nu)?;
    Ok(-c
        .radii_at(lambda)?
        .iter()
        .zip(&nu.nu)
        .map(|(r, v)| v * r.norm().ln())
        .sum::<f64>())
}

/// `log sum |r_j|^p - (I - p Lambda)`; nonnegative by Jensen.
pub fn jensen_gap(c: &CoveringData, nu: &Distribution, lambda: Complex64, p: f64) -> Result<f64> {
    Ok(log_covering_sum(c, lambda, p)? - (entropy(nu) - p * lyapunov(c, nu, lambda)?))
}

/// The maximizer `nu_j = |r_j|^p / sum |r_i|^p`.
pub fn gibbs(c: &CoveringData, lambda: Complex64, p: f64) -> Result<Distribution> {
    let log_z = log_covering_sum(c, lambda, p)?;
    let nu: Vec<f64> = c
        .radii_at(lambda)?
        .iter()
        .map(|r| (p * r.norm().ln() - log_z).exp())
        .collect();
    let total: f64 = nu.iter().sum();
    Distribution::new(nu.into_iter().map(|v| v / total).collect())
}

/// `H(lambda) = 2 Lambda(lambda) - I + 3 log C`.
pub fn harnack_functional(
    c: &CoveringData,
    nu: &Distribution,
    big_c: f64,
    lambda: Complex64,
) -> Result<f64> {
    if !(big_c >= 1.0) {
        return Err(Error::Precondition(format!("C = {big_c} must be at least 1")));
    }
    Ok(2.0 * lyapunov(c, nu, lambda)? - entropy(nu) + 3.0 * big_c.ln())
}

/// Smallest number of triples accepted by [`quasisymmetry_constant`].
pub const MIN_TRIPLES: usize = 100;

#[derive(Debug, Clone, Copy, Serialize)]
pub struct QuasisymmetryEstimate {
    /// `max |f(z) - f(x)| / |f(y) - f(x)|` over triples with `|z - x| <= |y - x|`.
    pub c_ratio: f64,
    /// Smallest `C` such that `C |z - x| <= |y - x|` forces
    /// `2 |f(z) - f(x)| <= |f(y) - f(x)|` on the sampled triples.
    pub c_separation: f64,
    /// `max(c_ratio, c_separation / 2, 1)`.
    pub constant: f64,
    pub triples: usize,
}

/// Empirical quasisymmetry constant of the family on `[0, 1]`, maximized
/// over members. Triples are drawn at scales from four grid steps to `1/2`.
pub fn quasisymmetry_constant(
    f: &MotionFamily,
    samples: usize,
    seed: u64,
) -> Result<QuasisymmetryEstimate> {
    if samples < MIN_TRIPLES {
        return Err(Error::InsufficientSamples(format!(
            "{samples} triples, need at least {MIN_TRIPLES}"
        )));
    }
    let grid = f.base_mu().grid();
    let smallest = (4.0 * grid.step()).min(0.25);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // (x, y, z) with y at distance s from x, z closer or much closer
    let triples: Vec<(f64, f64, f64)> = (0..samples)
        .map(|t| {
            let s = smallest * (0.5 / smallest).powf(rng.gen::<f64>());
            let x = rng.gen_range(0.0..=1.0 - s);
            let ratio = if t % 2 == 0 {
                rng.gen_range(0.0..=1.0)
            } else {
                1.0 / rng.gen_range(1.0..16.0)
            };
            let dz = s * ratio;
            let z = if rng.gen::<bool>() && x - dz >= 0.0 { x - dz } else { x + dz };
            (x, x + s, z)
        })
        .filter(|(x, _, z)| z != x)
        .collect();
    if triples.len() < MIN_TRIPLES {
        return Err(Error::InsufficientSamples(format!(
            "{} usable triples",
            triples.len()
        )));
    }
    let per_member = f
        .maps()
        .par_iter()
        .map(|m| {
            let mut c_ratio: f64 = 1.0;
            let mut c_separation: f64 = 1.0;
            for &(x, y, z) in &triples {
                let at = |t: f64| m.eval(Complex64::new(t, 0.0));
                let (fx, fy, fz) = (at(x)?, at(y)?, at(z)?);
                let image = (fz - fx).norm() / (fy - fx).norm();
                let source = (y - x).abs() / (z - x).abs();
                if source >= 1.0 {
                    c_ratio = c_ratio.max(image);
                }
                if 2.0 * image > 1.0 {
                    c_separation = c_separation.max(source);
                }
            }
            Ok((c_ratio, c_separation))
        })
        .collect::<Result<Vec<_>>>()?;
    let c_ratio = per_member.iter().map(|p| p.0).fold(1.0, f64::max);
    let c_separation = per_member.iter().map(|p| p.1).fold(1.0, f64::max);
    Ok(QuasisymmetryEstimate {
        c_ratio,
        c_separation,
        constant: c_ratio.max(0.5 * c_separation).max(1.0),
        triples: triples.len(),
    })
}

/// One row of the thermodynamic table; `nu` is the Gibbs distribution at
/// `(lambda, p)`.
#[derive(Debug, Clone, Serialize)]
pub struct ThermoRow {
    pub lambda_re: f64,
    pub lambda_im: f64,
    pub p: f64,
    pub n: usize,
    pub log_covering_sum: f64,
    pub gibbs_entropy: f64,
    pub gibbs_lyapunov: f64,
    pub harnack_h: f64,
}

/// Rows for every motion parameter and every `p`.
pub fn thermo_table(c: &CoveringData, ps: &[f64], big_c: f64) -> Result<Vec<ThermoRow>> {
    let mut rows = Vec::with_capacity(c.lambdas.len() * ps.len());
    for &lambda in &c.lambdas {
        for &p in ps {
            let nu = gibbs(c, lambda, p)?;
            rows.push(ThermoRow {
                lambda_re: lambda.re,
                lambda_im: lambda.im,
                p,
                n: c.n,
                log_covering_sum: log_covering_sum(c, lambda, p)?,
                gibbs_entropy: entropy(&nu),
                gibbs_lyapunov: lyapunov(c, &nu, lambda)?,
                harnack_h: harnack_functional(c, &nu, big_c, lambda)?,
            });
        }
    }
    Ok(rows)
}
