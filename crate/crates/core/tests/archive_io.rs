use std::path::Path;

use ve_fracture::benchmarks::{GRIFFITH_STRIP, TWO_WELL};
use ve_fracture::cli_io::{emit_plot_data, execute, load_archive, parse_config, save_archive, Archive, PlotKind, Setup};
use ve_fracture::Error;

#[test]
fn empty_evolution_gives_a_valid_archive() {
    let cfg = parse_config(TWO_WELL).unwrap();
    let setup = Setup::from_config(&cfg, Path::new(".")).unwrap();
    let a = Archive::empty(&setup);
    let back = Archive::from_json(&a.to_json().unwrap()).unwrap();
    assert_eq!(back, a);
    assert!(back.steps.is_empty());
    assert!(back.evolution(&setup).is_err());
}

#[test]
fn full_run_round_trips() {
    let cfg = parse_config(TWO_WELL).unwrap();
    let out = execute(&cfg, Path::new(".")).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("archive.json");
    save_archive(&out.archive, &path).unwrap();
    let back = load_archive(&path).unwrap();
    assert_eq!(back, out.archive);
    assert_eq!(back.to_json().unwrap(), out.archive.to_json().unwrap());

    let setup = back.setup().unwrap();
    let evo = back.evolution(&setup).unwrap();
    assert_eq!(evo.ledger, out.evolution.ledger);
    let edges = |e: &ve_fracture::evolution::DiscreteEvolution| e.states.iter().map(|k| k.edge_vec()).collect::<Vec<_>>();
    assert_eq!(edges(&evo), edges(&out.evolution));
    assert_eq!(back.jump_records(&setup).unwrap().len(), out.jumps.len());
}

#[test]
fn schema_bump_is_rejected() {
    let cfg = parse_config(TWO_WELL).unwrap();
    let setup = Setup::from_config(&cfg, Path::new(".")).unwrap();
    let text = Archive::empty(&setup).to_json().unwrap().replace("\"ve-fracture/1\"", "\"ve-fracture/2\"");
    match Archive::from_json(&text) {
        Err(Error::Archive(m)) => assert!(m.contains("schema version mismatch"), "{m}"),
        other => panic!("expected a schema error, got {other:?}"),
    }
}

#[test]
fn plot_tables() {
    let cfg = parse_config(TWO_WELL).unwrap();
    let out = execute(&cfg, Path::new(".")).unwrap();
    let n = out.evolution.partition.times().len();
    let energy = emit_plot_data(&out.archive, PlotKind::Energy).unwrap();
    let mut lines = energy.lines();
    assert_eq!(lines.next(), Some("t,E,work,balance_residual"));
    assert_eq!(lines.count(), n);
    for kind in [PlotKind::Dissipation, PlotKind::Balance] {
        assert_eq!(emit_plot_data(&out.archive, kind).unwrap().lines().count(), n + 1);
    }
    assert!(matches!(emit_plot_data(&out.archive, PlotKind::Tips), Err(Error::Archive(_))));
    assert!("histogram".parse::<PlotKind>().is_err());
    assert_eq!("tips".parse::<PlotKind>().unwrap(), PlotKind::Tips);
}

#[test]
fn griffith_tips_table() {
    let cfg = parse_config(GRIFFITH_STRIP).unwrap();
    let out = execute(&cfg, Path::new(".")).unwrap();
    let tips = emit_plot_data(&out.archive, PlotKind::Tips).unwrap();
    let mut lines = tips.lines();
    assert_eq!(lines.next(), Some("t,tip,sigma,sigmadot,kappa2,slack,compl"));
    assert_eq!(lines.count(), out.evolution.partition.times().len());
}
