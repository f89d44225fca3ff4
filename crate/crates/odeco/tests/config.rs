use std::path::{Path, PathBuf};

use odeco::config::{parse_config_file, Overrides};
use odeco::core::energy::EnergyWeights;
use odeco::ModePreset;

#[test]
fn presets_match_weight_table() {
    assert_eq!(ModePreset::Area.weights(), EnergyWeights::new(10.0, 0.1, 0.0));
    assert_eq!(ModePreset::AreaSmooth.weights(), EnergyWeights::new(10.0, 0.1, 1e-4));
    assert_eq!(ModePreset::Angle.weights(), EnergyWeights::new(1.0, 0.0, 0.01));
    assert_eq!(ModePreset::SizingOnly.weights(), EnergyWeights::new(1.0, 0.0, 0.0));
    for m in ["area", "area-smooth", "angle", "sizing-only", "custom"] {
        assert_eq!(m.parse::<ModePreset>().unwrap().name(), m);
    }
    assert!("fast".parse::<ModePreset>().is_err());
}

#[test]
fn flags_override_file_override_preset() {
    let file = parse_config_file(
        "# experiment\nmesh = meshes/part.obj\nmode = area\nkappa_area = 0.5\nseed = 7\nthreads = 1\n",
        Path::new("/work/run.cfg"),
    )
    .unwrap();
    assert_eq!(file.mesh, Some(PathBuf::from("/work/meshes/part.obj")));
    let flags = Overrides { kappa_area: Some(0.25), seed: None, ..Default::default() };
    let cfg = flags.over(&file).resolve().unwrap();
    assert_eq!(cfg.mode, ModePreset::Area);
    assert_eq!(cfg.weights.kappa_odeco, 10.0);
    assert_eq!(cfg.weights.kappa_area, 0.25);
    assert_eq!(cfg.seed, 7);
    assert_eq!(cfg.threads, 1);

    let only_file = Overrides::default().over(&file).resolve().unwrap();
    assert_eq!(only_file.weights.kappa_area, 0.5);
}

#[test]
fn config_errors_carry_line_numbers() {
    let e = parse_config_file("mesh = a.obj\nspeed = 3\n", Path::new("c.cfg")).unwrap_err();
    assert!(matches!(e, odeco::OdecoError::Parse { line: 2, .. }), "{e}");
    assert!(parse_config_file("seed = x\n", Path::new("c.cfg")).is_err());
    assert!(parse_config_file("just text\n", Path::new("c.cfg")).is_err());
    assert!(Overrides::default().resolve().is_err());
    let neg = Overrides { mesh: Some("a.obj".into()), kappa_odeco: Some(-1.0), ..Default::default() };
    assert!(neg.resolve().is_err());
    let dihedral = Overrides { mesh: Some("a.obj".into()), dihedral_deg: Some(200.0), ..Default::default() };
    assert!(dihedral.resolve().is_err());
}
