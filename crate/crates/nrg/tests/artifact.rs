use std::fs;

use kondo_nrg::{
    load_run, metrology_from_flows, run, run_flow, run_reference, save_run, ModelParams, NrgConfig,
    NrgError,
};

fn cfg() -> NrgConfig {
    NrgConfig {
        chain_length: 12,
        kept_states: 400,
        ..NrgConfig::default()
    }
}

fn saved(dir: &std::path::Path, coupling: f64, field: f64) {
    let cfg = cfg();
    let params = ModelParams::new(coupling, 1.0, field).unwrap();
    let shells = run(&cfg, coupling, 1.0, field).unwrap();
    let reference = run_reference(&cfg, field).unwrap();
    save_run(dir, &cfg, &params, &shells, &reference).unwrap();
}

#[test]
fn runs_reload_bit_identically() {
    let dir = tempfile::tempdir().unwrap();
    saved(dir.path(), 0.4, 0.02);
    let art = load_run(dir.path()).unwrap();
    assert_eq!(art.config, cfg());
    assert_eq!(art.params, ModelParams::new(0.4, 1.0, 0.02).unwrap());
    assert_eq!(art.shells, run(&cfg(), 0.4, 1.0, 0.02).unwrap());
    assert_eq!(
        art.flow().unwrap(),
        run_flow(&cfg(), 0.4, 1.0, 0.02).unwrap()
    );
}

#[test]
fn metrology_can_be_rebuilt_from_artifacts() {
    let root = tempfile::tempdir().unwrap();
    let couplings = [0.3, 0.4, 0.5];
    for (i, &k) in couplings.iter().enumerate() {
        saved(&root.path().join(format!("k{i}")), k, 0.0);
    }
    let flows = (0..3)
        .map(|i| {
            load_run(&root.path().join(format!("k{i}")))
                .unwrap()
                .flow()
                .unwrap()
        })
        .collect();
    let grid = metrology_from_flows(&couplings, flows).unwrap();
    let direct = kondo_nrg::nrg_metrology(1.0, &cfg(), &couplings).unwrap();
    assert_eq!(grid, direct);
}

#[test]
fn missing_artifacts_are_not_found() {
    let dir = tempfile::tempdir().unwrap();
    assert!(matches!(
        load_run(&dir.path().join("nothing")),
        Err(NrgError::NotFound(_))
    ));

    saved(dir.path(), 0.4, 0.0);
    fs::remove_file(dir.path().join("reference").join("shell_007.tsv")).unwrap();
    match load_run(dir.path()) {
        Err(NrgError::NotFound(p)) => assert!(p.ends_with("reference/shell_007.tsv")),
        other => panic!("expected not-found, got {other:?}"),
    }
}

#[test]
fn unknown_versions_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    saved(dir.path(), 0.4, 0.0);
    let manifest = dir.path().join("manifest.toml");
    let text = fs::read_to_string(&manifest).unwrap();
    assert!(text.contains("version = 1"));
    fs::write(&manifest, text.replace("version = 1", "version = 2")).unwrap();
    assert!(matches!(load_run(dir.path()), Err(NrgError::Artifact(_))));
}
