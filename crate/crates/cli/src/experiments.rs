//! The pipelines behind each subcommand. Each returns a serializable summary
//! with a `passed` flag; nothing here writes files.

use anyhow::{Context, Result};
use quasidim::canonical::{decompose, upper_conformal_bound, BoundsReport, CanonicalOptions};
use quasidim::dimension::{
    bounds_table, box_dimension, covering_exponent, dyadic_scales, DimensionEstimate,
};
use quasidim::generate::generate_mu;
use quasidim::harnack::{run_campaign, CampaignConfig, CampaignSummary};
use quasidim::motion::{
    build_family, check_symmetries, lambda_schedule, MotionFamily, SymmetryReport,
};
use quasidim::qcmap::map_line;
use quasidim::solver::solve_with_report;
use quasidim::thermo::{
    entropy, gibbs, harnack_functional, jensen_gap, log_covering_sum, lyapunov,
    quasisymmetry_constant, thermo_table, CoveringData, Distribution, QuasisymmetryEstimate,
    ThermoRow,
};
use quasidim::{BeltramiField, Complex64, Curve, QcMap};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::ExperimentConfig;

/// Antisymmetry tolerance on generated base coefficients.
const BASE_ANTI_TOL: f64 = 1e-12;

fn real(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

#[derive(Debug, Serialize)]
pub struct SolveSummary {
    pub k: f64,
    pub n: usize,
    pub iterations: usize,
    pub residual: f64,
    pub acceptance: f64,
    pub worst_contraction: f64,
    pub passed: bool,
}

pub struct SolveOutcome {
    pub mu: BeltramiField,
    pub map: QcMap,
    pub summary: SolveSummary,
}

pub fn run_solve(cfg: &ExperimentConfig) -> Result<SolveOutcome> {
    let grid = cfg.grid_spec()?;
    let k = cfg.solve.k;
    let mu = generate_mu(&grid, &cfg.generator(k, cfg.solve.antisymmetrize), cfg.seed)?;
    let (map, report) = solve_with_report(&mu, cfg.solver_options())?;
    let map = map.renormalize_01()?;
    let summary = SolveSummary {
        k,
        n: grid.n(),
        iterations: report.iterations,
        residual: report.residual,
        acceptance: report.acceptance,
        worst_contraction: report.worst_contraction(),
        passed: report.residual <= report.acceptance,
    };
    Ok(SolveOutcome { mu, map, summary })
}

#[derive(Debug, Serialize)]
pub struct DecomposeRun {
    pub seed: u64,
    pub report: BoundsReport,
    pub curve_limit: f64,
    pub passed: bool,
}

#[derive(Debug, Serialize)]
pub struct DecomposeSummary {
    pub n: usize,
    pub tol: f64,
    pub runs: Vec<DecomposeRun>,
    pub passed: bool,
}

/// Norm bounds may exceed their targets by this much.
pub const NORM_SLACK: f64 = 0.02;

/// Whether one decomposition meets the norm, conformality, antisymmetry
/// and curve-distance limits.
pub fn decomposition_passes(r: &BoundsReport, tol: f64, curve_limit: f64) -> bool {
    r.norm_psi_achieved <= upper_conformal_bound(r.k) + NORM_SLACK
        && r.norm_psi_upper <= tol
        && r.anti_residual <= tol
        && r.norm_phi_achieved <= r.k + NORM_SLACK
        && r.curve_distance <= curve_limit
}

pub fn run_decompose(cfg: &ExperimentConfig) -> Result<DecomposeSummary> {
    let grid = cfg.grid_spec()?;
    let dc = &cfg.decompose;
    let opts = CanonicalOptions {
        solver: cfg.solver_options(),
        tol: dc.tol,
        ..Default::default()
    };
    let curve_limit = dc.curve_steps * grid.step();
    let mut runs = Vec::new();
    for &k in &dc.k {
        for i in 0..dc.fields {
            let seed = cfg.seed + i as u64;
            let mu = generate_mu(&grid, &cfg.generator(k, false), seed)?;
            let d = decompose(&mu, &opts).with_context(|| format!("decomposition at k = {k}, seed {seed}"))?;
            let passed = decomposition_passes(&d.bounds_report, dc.tol, curve_limit);
            runs.push(DecomposeRun {
                seed,
                report: d.bounds_report,
                curve_limit,
                passed,
            });
        }
    }
    let passed = runs.iter().all(|r| r.passed);
    Ok(DecomposeSummary {
        n: grid.n(),
        tol: dc.tol,
        runs,
        passed,
    })
}

/// The motion through the generated antisymmetric coefficient of norm `k`.
pub fn motion_family(
    cfg: &ExperimentConfig,
    k: f64,
    rho: f64,
    lambdas: &[Complex64],
    seed: u64,
) -> Result<MotionFamily> {
    let grid = cfg.grid_spec()?;
    let base = generate_mu(&grid, &cfg.generator(k, true), seed)?;
    Ok(build_family(&base, k, rho, lambdas, cfg.solver_options(), BASE_ANTI_TOL)?)
}

fn circles(cfg: &ExperimentConfig) -> Vec<(Complex64, f64)> {
    cfg.motion
        .circles
        .iter()
        .map(|c| (Complex64::new(c[0], c[1]), c[2]))
        .collect()
}

/// Family of the `motion` table: `0, +-k, +-ik` and the configured circles.
pub fn configured_family(cfg: &ExperimentConfig) -> Result<MotionFamily> {
    let mc = &cfg.motion;
    let lambdas = lambda_schedule(mc.k, &circles(cfg), mc.circle_points);
    motion_family(cfg, mc.k, mc.rho, &lambdas, cfg.seed)
}

#[derive(Debug, Serialize)]
pub struct MeanValueCheck {
    pub center: [f64; 2],
    pub radius: f64,
    pub defect: f64,
}

#[derive(Debug, Serialize)]
pub struct MotionSummary {
    pub k: f64,
    pub rho: f64,
    pub symmetry: SymmetryReport,
    pub mean_value: Vec<MeanValueCheck>,
    pub mean_value_tol: f64,
    pub passed: bool,
}

/// Points at which holomorphy in the motion parameter is checked.
fn probe_points() -> Vec<Complex64> {
    vec![
        real(0.5),
        Complex64::new(-1.0, 2.0),
        Complex64::new(2.5, -0.75),
        Complex64::new(0.25, 0.125),
    ]
}

pub fn summarize_motion(cfg: &ExperimentConfig, family: &MotionFamily) -> Result<MotionSummary> {
    let symmetry = check_symmetries(family)?;
    let mut mean_value = Vec::new();
    for (center, radius) in circles(cfg) {
        let defect =
            family.mean_value_defect(center, radius, cfg.motion.circle_points, &probe_points())?;
        mean_value.push(MeanValueCheck {
            center: [center.re, center.im],
            radius,
            defect,
        });
    }
    let tol = cfg.motion.mean_value_tol;
    let passed = symmetry.passed && mean_value.iter().all(|m| m.defect <= tol);
    Ok(MotionSummary {
        k: family.k(),
        rho: family.rho(),
        symmetry,
        mean_value,
        mean_value_tol: tol,
        passed,
    })
}

#[derive(Debug, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub value: f64,
    pub limit: f64,
    pub passed: bool,
}

impl CheckResult {
    fn at_most(name: &str, value: f64, limit: f64) -> Self {
        Self {
            name: name.into(),
            value,
            limit,
            passed: value <= limit,
        }
    }

    fn at_least(name: &str, value: f64, limit: f64) -> Self {
        Self {
            name: name.into(),
            value,
            limit,
            passed: value >= limit,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct ThermoSummary {
    pub k: f64,
    pub rho: f64,
    pub p: f64,
    pub intervals: usize,
    pub quasisymmetry: QuasisymmetryEstimate,
    pub checks: Vec<CheckResult>,
    pub passed: bool,
}

pub struct ThermoOutcome {
    pub rows: Vec<ThermoRow>,
    pub summary: ThermoSummary,
}

/// Random probability vector with a few near-zero weights mixed in.
pub fn random_distribution(n: usize, rng: &mut impl Rng) -> Result<Distribution> {
    let mut w: Vec<f64> = (0..n)
        .map(|_| {
            let u: f64 = rng.gen();
            if u < 0.1 {
                0.0
            } else {
                -u.ln()
            }
        })
        .collect();
    if w.iter().all(|v| *v == 0.0) {
        w[0] = 1.0;
    }
    let total: f64 = w.iter().sum();
    Ok(Distribution::new(w.into_iter().map(|v| v / total).collect())?)
}

pub fn run_thermo(cfg: &ExperimentConfig, family: &MotionFamily) -> Result<ThermoOutcome> {
    let tc = &cfg.thermo;
    let k = family.k();
    let rho = family.rho();
    let p = 1.0 + k * k / (rho * rho);
    let c = CoveringData::from_family(family, tc.intervals)?;
    let qs = quasisymmetry_constant(family, tc.triples, cfg.seed)?;
    let big_c = qs.constant;
    let lk = real(k);
    let mut checks = Vec::new();

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5eed);
    let mut worst_gap = f64::INFINITY;
    for _ in 0..tc.distributions {
        let nu = random_distribution(c.n(), &mut rng)?;
        for &lambda in family.lambdas() {
            worst_gap = worst_gap.min(jensen_gap(&c, &nu, lambda, p)?);
        }
    }
    checks.push(CheckResult::at_least("jensen_gap_min", worst_gap, -tc.jensen_tol));

    let mut gibbs_gap: f64 = 0.0;
    for &lambda in family.lambdas() {
        let nu = gibbs(&c, lambda, p)?;
        gibbs_gap = gibbs_gap.max(jensen_gap(&c, &nu, lambda, p)?.abs());
    }
    checks.push(CheckResult::at_most("gibbs_equality_gap", gibbs_gap, tc.jensen_tol));

    let nus = [Distribution::uniform(c.n())?, gibbs(&c, lk, p)?];
    let mut harmonic: f64 = 0.0;
    for (center, radius) in circles(cfg) {
        if family.position(center).is_err() {
            continue;
        }
        let ring = quasidim::motion::circle(center, radius, cfg.motion.circle_points);
        for nu in &nus {
            let mid = lyapunov(&c, nu, center)?;
            let mut mean = 0.0;
            for &l in &ring {
                mean += lyapunov(&c, nu, l)?;
            }
            mean /= ring.len() as f64;
            harmonic = harmonic.max((mean - mid).abs());
        }
    }
    checks.push(CheckResult::at_most("lyapunov_mean_value", harmonic, tc.harmonic_tol));

    let mut h_min = f64::INFINITY;
    let mut h_odd: f64 = 0.0;
    let mut h0_gap = f64::INFINITY;
    for nu in &nus {
        for &lambda in family.lambdas() {
            h_min = h_min.min(harnack_functional(&c, nu, big_c, lambda)?);
        }
        if k > 0.0 {
            let odd = harnack_functional(&c, nu, big_c, lk)? - harnack_functional(&c, nu, big_c, -lk)?;
            h_odd = h_odd.max(odd.abs());
        }
        let h0 = harnack_functional(&c, nu, big_c, real(0.0))?;
        h0_gap = h0_gap.min(h0 - (entropy(nu) + 3.0 * big_c.ln()));
    }
    checks.push(CheckResult::at_least("harnack_h_min", h_min, tc.h_floor));
    checks.push(CheckResult::at_most("harnack_h_odd_part", h_odd, tc.h_even_tol));
    checks.push(CheckResult::at_least("harnack_h0_margin", h0_gap, -1e-9));

    let mut square_sum = f64::NEG_INFINITY;
    for &lambda in family.lambdas() {
        square_sum = square_sum.max(log_covering_sum(&c, lambda, 2.0)?);
    }
    checks.push(CheckResult::at_most("log_square_sum_minus_3_log_c", square_sum - 3.0 * big_c.ln(), 0.0));

    let estimate = log_covering_sum(&c, lk, p)?;
    checks.push(CheckResult::at_most(
        "final_estimate_minus_12_log_c",
        estimate - 12.0 * big_c.ln(),
        tc.estimate_slack,
    ));

    let mut ps = tc.p.clone();
    if !ps.iter().any(|q| (q - p).abs() < 1e-15) {
        ps.push(p);
    }
    let rows = thermo_table(&c, &ps, big_c)?;
    let passed = checks.iter().all(|c| c.passed);
    Ok(ThermoOutcome {
        rows,
        summary: ThermoSummary {
            k,
            rho,
            p,
            intervals: c.n(),
            quasisymmetry: qs,
            checks,
            passed,
        },
    })
}

pub fn run_harnack(cfg: &ExperimentConfig) -> Result<CampaignSummary> {
    let hc = &cfg.harnack;
    Ok(run_campaign(&CampaignConfig {
        densities: hc.densities,
        base_seed: cfg.seed,
        radii: hc.radii.clone(),
        m: hc.m,
        max_degree: hc.max_degree,
        witness_directions: hc.witness_directions,
    })?)
}

/// One line of the sweep table.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct SweepRow {
    pub k: f64,
    pub rho: f64,
    pub dim_box: f64,
    pub dim_cover: f64,
    pub bound_1k: f64,
    pub bound_37k2: f64,
    pub bound_k2: f64,
    pub n_grid: usize,
    pub seed: u64,
    /// `1 + k^2 / rho^2`.
    pub p_rho: f64,
    /// `log sum_j |r_j(k)|^{p_rho}` on the finest covering.
    pub log_cover_sum: f64,
    pub log_c: f64,
}

#[derive(Debug, Serialize)]
pub struct SweepSummary {
    pub rows: Vec<SweepRow>,
    pub failures: Vec<String>,
    pub passed: bool,
}

/// Image of `[0, 1]` sampled finely enough for boxes of side `eps`.
pub fn sampled_line(map: &QcMap, eps: f64) -> Result<Curve> {
    let mut points = ((2.0 / eps).ceil() as usize).next_power_of_two() + 1;
    loop {
        let curve = map_line(map, points)?;
        if curve.max_gap() <= 0.5 * eps || points > 1 << 24 {
            return Ok(curve);
        }
        points = 2 * (points - 1) + 1;
    }
}

struct RunResult {
    k: f64,
    seed: u64,
    dim_box: DimensionEstimate,
    dim_cover: DimensionEstimate,
    log_c: f64,
    finest: CoveringData,
}

fn sweep_one(cfg: &ExperimentConfig, k: f64, seed: u64) -> Result<RunResult> {
    let sc = &cfg.sweep;
    let lambdas = if k == 0.0 {
        vec![real(0.0)]
    } else {
        lambda_schedule(k, &[], 0)
    };
    let family = motion_family(cfg, k, sc.rho, &lambdas, seed)?;
    let member = family.member(real(k))?;
    let scales = dyadic_scales(sc.box_scales[0], sc.box_scales[1]);
    let finest = scales.iter().copied().fold(f64::INFINITY, f64::min);
    let dim_box = box_dimension(&sampled_line(member, finest)?, &scales)?;
    let ladder = (sc.ladder[0]..=sc.ladder[1])
        .map(|e| CoveringData::from_family(&family, 1 << e))
        .collect::<quasidim::Result<Vec<_>>>()?;
    let dim_cover = covering_exponent(&ladder, real(k))?;
    let qs = quasisymmetry_constant(&family, sc.triples, seed)?;
    let finest = ladder.into_iter().last().context("empty ladder")?;
    Ok(RunResult {
        k,
        seed,
        dim_box,
        dim_cover,
        log_c: qs.constant.ln(),
        finest,
    })
}

pub fn run_sweep(cfg: &ExperimentConfig) -> Result<SweepSummary> {
    let sc = &cfg.sweep;
    let jobs: Vec<(f64, u64)> = sc
        .k
        .iter()
        .flat_map(|&k| (0..sc.seeds as u64).map(move |s| (k, s)))
        .collect();
    let results = jobs
        .par_iter()
        .map(|&(k, s)| {
            let seed = cfg.seed + s;
            sweep_one(cfg, k, seed).with_context(|| format!("sweep at k = {k}, seed {seed}"))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut rhos = sc.rho_report.clone();
    if !rhos.contains(&sc.rho) {
        rhos.push(sc.rho);
    }
    rhos.sort_by(f64::total_cmp);
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for r in &results {
        let (b1, b37, bk2) = bounds_table(r.k)?;
        let limit = bk2 + sc.dimension_slack;
        if r.dim_box.value > limit {
            failures.push(format!("k = {}, seed {}: box dimension {} > {limit}", r.k, r.seed, r.dim_box.value));
        }
        if r.dim_cover.value > limit {
            failures.push(format!(
                "k = {}, seed {}: covering exponent {} > {limit}",
                r.k, r.seed, r.dim_cover.value
            ));
        }
        for &rho in &rhos {
            let p = 1.0 + r.k * r.k / (rho * rho);
            let log_sum = log_covering_sum(&r.finest, real(r.k), p)?;
            if rho == sc.rho && log_sum > 12.0 * r.log_c + sc.estimate_slack {
                failures.push(format!(
                    "k = {}, seed {}: log covering sum {log_sum} > 12 log C + {}",
                    r.k, r.seed, sc.estimate_slack
                ));
            }
            rows.push(SweepRow {
                k: r.k,
                rho,
                dim_box: r.dim_box.value,
                dim_cover: r.dim_cover.value,
                bound_1k: b1,
                bound_37k2: b37,
                bound_k2: bk2,
                n_grid: cfg.grid.n,
                seed: r.seed,
                p_rho: p,
                log_cover_sum: log_sum,
                log_c: r.log_c,
            });
        }
    }
    Ok(SweepSummary {
        passed: failures.is_empty(),
        rows,
        failures,
    })
}
