//! Experiment configuration, read from a TOML file with one table per
//! subcommand. Every table and key has a default, so an empty file is a
//! valid configuration.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use quasidim::generate::{GeneratorKind, GeneratorSpec};
use quasidim::{GridSpec, SolverOptions};
use serde::Deserialize;

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub output: PathBuf,
    pub grid: GridConfig,
    pub solver: SolverConfig,
    pub generator: GeneratorConfig,
    pub solve: SolveConfig,
    pub decompose: DecomposeConfig,
    pub motion: MotionConfig,
    pub thermo: ThermoConfig,
    pub harnack: HarnackConfig,
    pub sweep: SweepConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            output: PathBuf::from("out"),
            grid: GridConfig::default(),
            solver: SolverConfig::default(),
            generator: GeneratorConfig::default(),
            solve: SolveConfig::default(),
            decompose: DecomposeConfig::default(),
            motion: MotionConfig::default(),
            thermo: ThermoConfig::default(),
            harnack: HarnackConfig::default(),
            sweep: SweepConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub n: usize,
    pub half_width: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            n: 512,
            half_width: 16.0,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        let d = SolverOptions::default();
        Self {
            tol: d.tol,
            max_iter: d.max_iter,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeneratorConfig {
    pub kind: GeneratorKind,
    pub support_radius: f64,
    pub components: usize,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        let d = GeneratorSpec::default();
        Self {
            kind: d.kind,
            support_radius: d.support_radius,
            components: d.components,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolveConfig {
    pub k: f64,
    pub antisymmetrize: bool,
}

impl Default for SolveConfig {
    fn default() -> Self {
        Self {
            k: 0.3,
            antisymmetrize: true,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DecomposeConfig {
    pub k: Vec<f64>,
    /// Random fields per `k`; field `i` uses seed `seed + i`.
    pub fields: usize,
    pub tol: f64,
    /// Curve distance limit in grid steps.
    pub curve_steps: f64,
}

impl Default for DecomposeConfig {
    fn default() -> Self {
        Self {
            k: vec![1.0 / 3.0],
            fields: 1,
            tol: 1e-2,
            curve_steps: 10.0,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MotionConfig {
    pub k: f64,
    pub rho: f64,
    /// `[center_re, center_im, radius]` of each circle of extra parameters.
    pub circles: Vec<[f64; 3]>,
    pub circle_points: usize,
    /// Largest allowed relative mean-value defect on each circle.
    pub mean_value_tol: f64,
    pub write_maps: bool,
}

impl Default for MotionConfig {
    fn default() -> Self {
        Self {
            k: 0.3,
            rho: 0.9,
            circles: vec![[0.0, 0.0, 0.1]],
            circle_points: 8,
            mean_value_tol: 1e-3,
            write_maps: true,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ThermoConfig {
    /// Number of covering intervals of `[0, 1]`.
    pub intervals: usize,
    /// Exponents tabulated besides `1 + k^2 / rho^2`.
    pub p: Vec<f64>,
    pub triples: usize,
    pub distributions: usize,
    pub jensen_tol: f64,
    pub harmonic_tol: f64,
    pub h_floor: f64,
    pub h_even_tol: f64,
    pub estimate_slack: f64,
}

impl Default for ThermoConfig {
    fn default() -> Self {
        Self {
            intervals: 64,
            p: vec![1.0, 2.0],
            triples: 2000,
            distributions: 100,
            jensen_tol: 1e-12,
            harmonic_tol: 1e-3,
            h_floor: -0.1,
            h_even_tol: 1e-2,
            estimate_slack: 0.5,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HarnackConfig {
    pub densities: usize,
    pub radii: Vec<f64>,
    pub m: usize,
    pub max_degree: usize,
    pub witness_directions: usize,
}

impl Default for HarnackConfig {
    fn default() -> Self {
        let d = quasidim::harnack::CampaignConfig::default();
        Self {
            densities: d.densities,
            radii: d.radii,
            m: d.m,
            max_degree: d.max_degree,
            witness_directions: d.witness_directions,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub k: Vec<f64>,
    pub seeds: usize,
    /// `rho` of the covering estimate checked against `12 log C`.
    pub rho: f64,
    /// Further `rho` values reported in the table.
    pub rho_report: Vec<f64>,
    /// Box sides `2^-lo ..= 2^-hi`.
    pub box_scales: [i32; 2],
    /// Interval counts `2^lo ..= 2^hi`.
    pub ladder: [u32; 2],
    pub triples: usize,
    pub dimension_slack: f64,
    pub estimate_slack: f64,
    pub chart: bool,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            k: vec![0.1, 0.2, 0.3, 0.4, 0.5],
            seeds: 5,
            rho: 0.9,
            rho_report: vec![0.7, 0.9, 0.99],
            box_scales: [2, 10],
            ladder: [5, 12],
            triples: 1000,
            dimension_slack: 0.05,
            estimate_slack: 0.5,
            chart: true,
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        Self::from_toml(&text).with_context(|| format!("parsing config {}", path.display()))
    }

    pub fn validate(&self) -> Result<()> {
        let mut ks = vec![self.solve.k, self.motion.k];
        ks.extend(&self.decompose.k);
        ks.extend(&self.sweep.k);
        if let Some(k) = ks.iter().find(|k| !(0.0..1.0).contains(*k)) {
            bail!("k = {k} outside [0, 1)");
        }
        let mut rhos = vec![self.motion.rho, self.sweep.rho];
        rhos.extend(&self.sweep.rho_report);
        if let Some(r) = rhos.iter().find(|r| !(**r > 0.0 && **r < 1.0)) {
            bail!("rho = {r} outside (0, 1)");
        }
        if self.motion.k > self.motion.rho {
            bail!("motion k = {} exceeds rho = {}", self.motion.k, self.motion.rho);
        }
        if let Some(k) = self.sweep.k.iter().find(|k| **k > self.sweep.rho) {
            bail!("sweep k = {k} exceeds rho = {}", self.sweep.rho);
        }
        if self.sweep.ladder[0] > self.sweep.ladder[1] || self.sweep.box_scales[0] > self.sweep.box_scales[1] {
            bail!("scale ranges must be increasing");
        }
        self.grid_spec()?;
        Ok(())
    }

    pub fn grid_spec(&self) -> Result<GridSpec> {
        Ok(GridSpec::centered(self.grid.half_width, self.grid.n)?)
    }

    pub fn solver_options(&self) -> SolverOptions {
        SolverOptions {
            tol: self.solver.tol,
            max_iter: self.solver.max_iter,
        }
    }

    pub fn generator(&self, k: f64, antisymmetrize: bool) -> GeneratorSpec {
        GeneratorSpec {
            kind: self.generator.kind,
            k,
            support_radius: self.generator.support_radius,
            antisymmetrize,
            components: self.generator.components,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        let cfg = ExperimentConfig::from_toml("").unwrap();
        assert_eq!(cfg.grid.n, 512);
        assert_eq!(cfg.sweep.k.len(), 5);
    }

    #[test]
    fn sections_override_defaults() {
        let cfg = ExperimentConfig::from_toml(
            "seed = 9\n[grid]\nn = 256\n[generator]\nkind = \"bump\"\n[sweep]\nk = [0.0]\n",
        )
        .unwrap();
        assert_eq!(cfg.seed, 9);
        assert_eq!(cfg.grid.n, 256);
        assert_eq!(cfg.generator.kind, GeneratorKind::Bump);
        assert_eq!(cfg.sweep.k, vec![0.0]);
    }

    #[test]
    fn errors_name_the_location() {
        let err = ExperimentConfig::from_toml("[grid]\nn = \"big\"\n").unwrap_err();
        let msg = format!("{err:#}");
        assert!(msg.contains("line 2"), "{msg}");
        assert!(ExperimentConfig::from_toml("[sweep]\nk = [1.2]\n").is_err());
        assert!(ExperimentConfig::from_toml("[grid]\nn = 100\n").is_err());
        assert!(ExperimentConfig::from_toml("typo = 1\n").is_err());
    }
}
