use quasidim::qcmap::{beltrami_of_map, map_line};
use quasidim::solver::solve_normalized;
use quasidim::spectral::Spectral;
use quasidim::{BeltramiField, Complex64, GridSpec, PlaneMap, SolverOptions};

fn bump(z: Complex64) -> Complex64 {
    let c = Complex64::new(0.4, -0.3);
    Complex64::new(0.25, 0.2) * (-(z - c).norm_sqr() / 2.0).exp() * (1.0 + 0.3 * z.re)
}

fn interior_recovery_error(n: usize) -> f64 {
    let g = GridSpec::centered(8.0, n).unwrap();
    let mu = BeltramiField::from_fn(g, bump).unwrap();
    let back = beltrami_of_map(&solve_normalized(&mu, SolverOptions::default()).unwrap()).unwrap();
    let mut worst: f64 = 0.0;
    for j in 1..n - 1 {
        for i in 1..n - 1 {
            worst = worst.max((back.get(i, j) - mu.get(i, j)).norm());
        }
    }
    worst
}

#[test]
fn recovery_error_shrinks_under_refinement() {
    let e: Vec<f64> = [64, 128, 256].iter().map(|n| interior_recovery_error(*n)).collect();
    // central differences: second order
    assert!(e[1] < 0.4 * e[0] && e[2] < 0.4 * e[1], "{e:?}");
}

#[test]
fn solutions_converge_under_refinement() {
    let probe = [Complex64::new(0.5, 0.5), Complex64::new(-1.25, 2.0), Complex64::new(2.0, -0.75)];
    let values: Vec<Vec<Complex64>> = [128, 256, 512]
        .iter()
        .map(|&n| {
            let g = GridSpec::centered(8.0, n).unwrap();
            let m = solve_normalized(&BeltramiField::from_fn(g, bump).unwrap(), SolverOptions::default()).unwrap();
            probe.iter().map(|z| m.eval(*z).unwrap()).collect()
        })
        .collect();
    let diff = |a: &[Complex64], b: &[Complex64]| a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
    let d1 = diff(&values[0], &values[1]);
    let d2 = diff(&values[1], &values[2]);
    assert!(d2 < 0.5 * d1 && d2 < 1e-3, "{d1} {d2}");
}

#[test]
fn beurling_takes_d_bar_to_d() {
    let g = GridSpec::centered(16.0, 512).unwrap();
    let a = Complex64::new(-0.75, 0.5);
    let e = |z: Complex64| (-(z - a).norm_sqr() / 1.5).exp();
    let pts = g.points();
    // g = z^2 e: d-bar g = -z^2 (z - a) e / 1.5, d g = (2 z - z^2 conj(z - a) / 1.5) e
    let db: Vec<_> = pts.iter().map(|&z| -z * z * (z - a) * e(z) / 1.5).collect();
    let d: Vec<_> = pts.iter().map(|&z| (2.0 * z - z * z * (z - a).conj() / 1.5) * e(z)).collect();
    let s = Spectral::new(&g).beurling(&db);
    let worst = s.iter().zip(&d).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
    assert!(worst < 1e-8, "{worst}");
}

#[test]
fn symmetric_coefficient_fixes_the_real_line() {
    let g = GridSpec::centered(8.0, 256).unwrap();
    let raw = BeltramiField::from_fn(g, |z| bump(z) * 2.0).unwrap();
    let n = g.n();
    let mut values = vec![Complex64::new(0.0, 0.0); g.len()];
    for j in 0..n {
        for i in 0..n {
            values[g.index(i, j)] = (raw.get(i, j) + raw.get(i, g.mirror_row(j)).conj()) * 0.5;
        }
    }
    let mu = BeltramiField::new(g, values).unwrap();
    let m = solve_normalized(&mu, SolverOptions::default()).unwrap();
    for j in 0..n {
        for i in 0..n {
            let (a, b) = (m.values()[g.index(i, j)], m.values()[g.index(i, g.mirror_row(j))]);
            assert!((a - b.conj()).norm() < 1e-10);
        }
    }
    let line = map_line(&m, 257).unwrap();
    let drift = line.points.iter().map(|p| p.im.abs()).fold(0.0, f64::max);
    assert!(drift < 1e-10, "{drift}");
    assert!((line.points[256] - Complex64::new(1.0, 0.0)).norm() < 1e-12);
}
