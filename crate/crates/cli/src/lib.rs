//! Experiment harness: configuration, pipelines and artifact writers behind
//! the `quasidim` command.

pub mod config;
pub mod experiments;
pub mod output;

use std::path::Path;

use anyhow::Result;
use clap::ValueEnum;

use crate::config::ExperimentConfig;
use crate::experiments::{
    configured_family, run_decompose, run_harnack, run_solve, run_sweep, run_thermo,
    summarize_motion,
};
use crate::output::{sweep_chart, write_csv, write_field, write_json, write_map};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Subcommand {
    Solve,
    Decompose,
    Motion,
    Thermo,
    Harnack,
    Sweep,
}

/// Runs one subcommand, writing its artifacts to `out`. Returns whether
/// every contract checked by the subcommand held.
pub fn run(cmd: Subcommand, cfg: &ExperimentConfig, out: &Path, quiet: bool) -> Result<bool> {
    std::fs::create_dir_all(out)?;
    let say = |msg: String| {
        if !quiet {
            eprintln!("{msg}");
        }
    };
    let passed = match cmd {
        Subcommand::Solve => {
            let o = run_solve(cfg)?;
            write_field(&out.join("mu.qdim"), &o.mu)?;
            write_map(&out.join("map.qdim"), &o.map)?;
            write_json(&out.join("solve.json"), &o.summary)?;
            say(format!(
                "solved n = {} in {} iterations, residual {:e}",
                o.summary.n, o.summary.iterations, o.summary.residual
            ));
            o.summary.passed
        }
        Subcommand::Decompose => {
            let s = run_decompose(cfg)?;
            write_json(&out.join("decompose.json"), &s)?;
            for r in &s.runs {
                say(format!(
                    "k = {:.4} seed {}: |mu_psi| {:.4} (bound {:.4}), upper {:.1e}, |mu_phi| {:.4}, anti {:.1e}, curves {:.1e}",
                    r.report.k,
                    r.seed,
                    r.report.norm_psi_achieved,
                    r.report.norm_psi_bound,
                    r.report.norm_psi_upper,
                    r.report.norm_phi_achieved,
                    r.report.anti_residual,
                    r.report.curve_distance
                ));
            }
            s.passed
        }
        Subcommand::Motion => {
            let family = configured_family(cfg)?;
            let mut files = Vec::new();
            if cfg.motion.write_maps {
                for (i, m) in family.maps().iter().enumerate() {
                    let name = format!("member_{i:03}.qdim");
                    write_map(&out.join(&name), m)?;
                    files.push(name);
                }
            }
            write_json(&out.join("manifest.json"), &family.manifest(files))?;
            let s = summarize_motion(cfg, &family)?;
            write_json(&out.join("motion.json"), &s)?;
            say(format!(
                "{} members, symmetry laws {}",
                family.lambdas().len(),
                if s.symmetry.passed { "hold" } else { "FAIL" }
            ));
            s.passed
        }
        Subcommand::Thermo => {
            let family = configured_family(cfg)?;
            let o = run_thermo(cfg, &family)?;
            write_csv(&out.join("thermo.csv"), &o.rows)?;
            write_json(&out.join("thermo.json"), &o.summary)?;
            for c in &o.summary.checks {
                say(format!(
                    "{:<32} {:>12.4e}  limit {:>10.3e}  {}",
                    c.name,
                    c.value,
                    c.limit,
                    if c.passed { "ok" } else { "FAIL" }
                ));
            }
            o.summary.passed
        }
        Subcommand::Harnack => {
            let s = run_harnack(cfg)?;
            write_json(&out.join("harnack.json"), &s)?;
            say(format!(
                "{} densities, {} violations, {} witness violations",
                s.densities, s.violations, s.witness_violations
            ));
            s.passed()
        }
        Subcommand::Sweep => {
            let s = run_sweep(cfg)?;
            write_csv(&out.join("sweep.csv"), &s.rows)?;
            write_json(&out.join("sweep.json"), &s)?;
            if cfg.sweep.chart {
                std::fs::write(out.join("sweep.svg"), sweep_chart(&s.rows))?;
            }
            for f in &s.failures {
                say(f.clone());
            }
            say(format!("{} rows", s.rows.len()));
            s.passed
        }
    };
    Ok(passed)
}
