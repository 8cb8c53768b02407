use gdnls::evolve::{run, SimConfig};
use gdnls::norms::lp_norm;
use gdnls::vector_field::{apply_l, ks_gap, lu_energy_rhs, lu_equation_residual};
use gdnls::{Complex, Field, Grid1D};

/// Snapshots at `t0 − h`, `t0`, `t0 + h` of a σ-run from real even data.
fn triple(sigma: f64, amp: f64, t0: f64, h: f64) -> [Field; 3] {
    let g = Grid1D::new(2048, 100.0).unwrap();
    let u0 = Field::from_fn(g, 0.0, |x| Complex::new(amp * (-x * x).exp(), 0.0)).unwrap();
    let cfg = SimConfig::new(sigma, g, 1e-4, t0 + h).with_snapshots(vec![t0 - h, t0, t0 + h]);
    let traj = run(&u0, &cfg).unwrap();
    assert!(traj.is_accepted());
    let f = traj.snapshots.fields();
    [f[1].clone(), f[2].clone(), f[3].clone()]
}

#[test]
fn lu_energy_identity_matches_finite_difference() {
    for sigma in [1.0, 1.5] {
        let h = 1e-4;
        let [a, m, b] = triple(sigma, 0.8, 0.5, h);
        let norm2 = |f: &Field| lp_norm(&apply_l(f).unwrap(), 2.0).unwrap().powi(2);
        let fd = (norm2(&b) - norm2(&a)) / (2.0 * h);
        let rhs = lu_energy_rhs(&m, sigma).unwrap();
        eprintln!("σ = {sigma}: d/dt |Lu|² = {fd:.6e}, identity {rhs:.6e}");
        assert!(rhs.is_finite());
        assert!((fd - rhs).abs() <= 1e-3 * rhs.abs(), "{fd} vs {rhs}");
    }
}

#[test]
fn lu_equation_residual_is_small() {
    for sigma in [1.0, 1.5] {
        let [a, m, b] = triple(sigma, 0.8, 0.5, 1e-3);
        let res = lu_equation_residual(&a, &m, &b, sigma).unwrap();
        let scale = lp_norm(&apply_l(&m).unwrap(), 2.0).unwrap();
        eprintln!("σ = {sigma}: residual {res:.3e}, |Lu| {scale:.3e}");
        assert!(res < 1e-3 * scale);
    }
}

#[test]
fn ks_gap_stays_below_one_along_a_dispersive_run() {
    let g = Grid1D::new(8192, 1600.0).unwrap();
    let u0 = Field::from_fn(g, 0.0, |x| Complex::new(0.1 * (-x * x / 4.0).exp(), 0.0)).unwrap();
    let times: Vec<f64> = (0..=5).map(|k| 2f64.powi(k)).collect();
    let traj = run(&u0, &SimConfig::new(1.0, g, 1e-2, 32.0).with_snapshots(times)).unwrap();
    assert!(traj.is_accepted());
    for f in &traj.snapshots.fields()[1..] {
        let k = ks_gap(f).unwrap();
        assert!(k <= 1.0 + 1e-6, "t = {}: {k}", f.time());
    }
}
