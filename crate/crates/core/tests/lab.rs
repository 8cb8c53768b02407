use std::path::Path;

use gdnls::exact::{soliton_field, soliton_grid, SolitonParams};
use gdnls::invariants::mass;
use gdnls::lab::output::Table;
use gdnls::lab::{parse_config, parse_config_str, run_experiment, snapshot, ExperimentName};
use gdnls::Error;

#[test]
fn minimal_file_on_disk() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("e1.toml");
    std::fs::write(&path, "sigma = 2.0\nepsilon = 0.05\n").unwrap();
    let cfg = parse_config(&path).unwrap();
    assert_eq!(cfg.name, ExperimentName::E1);
    assert_eq!(cfg.analysis.fit_window, (8.0, 128.0));
    let echoed = cfg.to_toml().unwrap();
    for key in ["[sim]", "[packet]", "[analysis]", "d_constant", "tail_guard"] {
        assert!(echoed.contains(key), "{key} missing from\n{echoed}");
    }
}

#[test]
fn small_data_limit_is_enforced() {
    let err = parse_config_str("name = \"E2\"\nsigma = 1.0\nepsilon = 0.5\n").unwrap_err();
    assert!(matches!(err, Error::Config { ref key, .. } if key == "epsilon"));
}

#[test]
fn soliton_snapshot_keeps_its_mass_to_the_bit() {
    let p = SolitonParams::new(1.5, 1.0, 1.0).unwrap();
    let f = soliton_field(&p, soliton_grid(&p).unwrap()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("soliton.gdnl");
    snapshot::write(&path, &f, 1.5).unwrap();
    let bytes = std::fs::read(&path).unwrap();
    assert_eq!(bytes.len(), 40 + 16 * f.grid().n());
    let (back, sigma) = snapshot::read(&path).unwrap();
    assert_eq!(sigma, 1.5);
    assert_eq!(mass(&back).to_bits(), mass(&f).to_bits());
    std::fs::write(&path, &bytes[..bytes.len() - 1]).unwrap();
    assert!(matches!(snapshot::read(&path), Err(Error::Format(_))));
}

#[test]
fn zero_data_is_a_trivial_pass() {
    let dir = tempfile::tempdir().unwrap();
    let text = format!(
        "name = \"E1\"\nsigma = 2.0\nepsilon = 0.05\ndata = \"zero\"\noutput_dir = {:?}\n[sim]\nn = 2048\nt_end = 16.0\n",
        dir.path().display().to_string()
    );
    let report = run_experiment(&parse_config_str(&text).unwrap()).unwrap();
    for c in &report.criteria {
        assert!(c.passed(), "{}", c.line());
    }
    assert_eq!(report.exit_code(), 0);
    let ts = Table::read_csv(&dir.path().join("timeseries_sigma2.csv")).unwrap();
    assert!(ts.column("sup").unwrap().iter().all(|&v| v == 0.0));
    assert!(ts.column("mass").unwrap().iter().all(|&v| v == 0.0));
}

#[test]
fn soliton_report_has_the_identity_tables() {
    let dir = tempfile::tempdir().unwrap();
    let text = format!(
        "name = \"E4\"\noutput_dir = {:?}\n[sim]\nt_end = 0.2\n[soliton]\norder_dt0 = 0.0025\n",
        dir.path().display().to_string()
    );
    let report = run_experiment(&parse_config_str(&text).unwrap()).unwrap();
    let ids: Vec<u8> = report.criteria.iter().map(|c| c.id).collect();
    assert_eq!(ids, vec![1, 9]);
    let virial = Table::read_csv(&dir.path().join("virial.csv")).unwrap();
    assert_eq!(virial.rows.len(), 36);
    assert!(virial.column("relative_error").unwrap().iter().all(|&e| e < 1e-6));
    let curve = Table::read_csv(&dir.path().join("degenerate_mass.csv")).unwrap();
    assert_eq!(curve.rows.len(), 16);
    for name in ["criteria.csv", "summary.json", "metadata.json", "config.toml", "degenerate_mass.svg"] {
        assert!(dir.path().join(name).exists(), "{name}");
    }
}

fn small_e5(dir: &Path) -> String {
    format!(
        "name = \"E5\"\nsigma = 1.0\nepsilon = 0.05\noutput_dir = {:?}\n\
         [sim]\nn = 2048\nt_end = 8.0\n[analysis]\nvelocities = 65\nper_octave = 4\nfit_window = [1.0, 8.0]\n",
        dir.display().to_string()
    )
}

#[test]
fn identical_configs_give_identical_outputs() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let ra = run_experiment(&parse_config_str(&small_e5(a.path())).unwrap()).unwrap();
    run_experiment(&parse_config_str(&small_e5(b.path())).unwrap()).unwrap();
    assert_eq!(ra.criteria.len(), 1);
    let mut compared = 0;
    for entry in std::fs::read_dir(a.path()).unwrap() {
        let name = entry.unwrap().file_name();
        let name = name.to_string_lossy();
        if name.ends_with(".csv") || name.ends_with(".svg") || name == "summary.json" {
            let x = std::fs::read(a.path().join(&*name)).unwrap();
            let y = std::fs::read(b.path().join(&*name)).unwrap();
            assert!(x == y, "{name} differs");
            compared += 1;
        }
    }
    assert!(compared >= 4);
    let snaps = a.path().join("snapshots_sigma1");
    assert_eq!(std::fs::read_dir(snaps).unwrap().count(), 4);
}
