use super::*;
use crate::Error;

fn run_text(text: &str) -> ScenarioReport {
    let cfg = ScenarioConfig::parse(text).expect("config parses");
    run_scenario(&cfg).expect("scenario runs")
}

fn run_template(name: &str) -> ScenarioReport {
    run_text(template(name).unwrap().text)
}

fn column_max(csv: &str, column: &str) -> f64 {
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let idx = header.iter().position(|h| *h == column).unwrap();
    lines
        .map(|l| l.split(',').nth(idx).unwrap().parse::<f64>().unwrap())
        .fold(0.0, f64::max)
}

#[test]
fn flat_to_flat_stays_identity() {
    let rep = run_template("flat-to-flat");
    assert!(rep.passed());
    let m = &rep.summary.max;
    assert!(m.ode_residual <= 1e-10, "{}", m.ode_residual);
    assert!(m.mapping_residual <= 1e-10, "{}", m.mapping_residual);
    assert!(m.symplectic_defect <= 1e-10);
    let k = 2 * rep.n;
    for r in &rep.rows {
        for i in 0..k {
            for j in 0..k {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((r.t[i * k + j] - want).abs() <= 1e-10);
            }
        }
    }
}

#[test]
fn k2_to_k1_factorized_matches_direct() {
    let rep = run_template("k2-to-k1");
    assert_eq!(rep.n, 3);
    assert!(
        rep.summary.max.factorization <= 1e-6,
        "{}",
        rep.summary.max.factorization
    );
    assert!(rep.summary.max.mapping_residual <= 1e-4);
    assert!(rep.passed());
}

#[test]
fn schwarzschild_radial_maps_solutions() {
    let rep = run_template("schwarzschild-radial");
    assert!(
        rep.summary.max.mapping_residual <= 1e-4,
        "{}",
        rep.summary.max.mapping_residual
    );
    assert!(rep.summary.max.norm_drift <= 1e-8);
    assert_eq!(rep.summary.verification.len(), 2 * rep.n);
    assert_eq!(rep.exit_code(), 0);
}

#[test]
fn every_template_parses_and_passes() {
    for t in TEMPLATES {
        let cfg = ScenarioConfig::parse(t.text).unwrap_or_else(|e| panic!("{}: {e}", t.name));
        let rep = run_scenario(&cfg).unwrap_or_else(|e| panic!("{}: {e}", t.name));
        assert!(rep.passed(), "{}: {:?}", t.name, rep.summary.max);
    }
}

#[test]
fn csv_shape_and_header() {
    let rep = run_template("flat-to-sphere");
    let csv = rep.to_csv();
    let header = csv.lines().next().unwrap();
    assert!(header.starts_with("tau,T_0_0,T_0_1,"));
    assert!(header.ends_with(",T_5_5,ode_residual,mapping_residual,symplectic_defect,norm_drift,frame_drift"));
    let cols = header.split(',').count();
    assert_eq!(cols, 1 + 36 + 5);
    assert_eq!(csv.lines().count(), 1 + rep.summary.grid.samples);
    assert_eq!(rep.summary.grid.samples, 3001);
    assert!(csv.lines().all(|l| l.split(',').count() == cols));
    assert!(!csv.contains('\r'));
}

#[test]
fn summary_maxima_match_csv_columns() {
    let rep = run_template("schwarzschild-radial");
    let csv = rep.to_csv();
    let m = &rep.summary.max;
    assert_eq!(column_max(&csv, "ode_residual"), m.ode_residual);
    assert_eq!(column_max(&csv, "mapping_residual"), m.mapping_residual);
    assert_eq!(column_max(&csv, "symplectic_defect"), m.symplectic_defect);
    assert_eq!(column_max(&csv, "norm_drift"), m.norm_drift);
    assert_eq!(column_max(&csv, "frame_drift"), m.frame_drift);
}

#[test]
fn reruns_are_byte_identical() {
    let a = run_template("rindler");
    let b = run_template("rindler");
    assert_eq!(a.to_csv(), b.to_csv());
    assert_eq!(a.summary_json(), b.summary_json());
}

#[test]
fn one_sample_grid() {
    let rep = run_text(
        "source.kind = constant-curvature\nsource.K = 1\nscenario.n = 2\ntarget.K = 1\nintegration.h = 0.5\nintegration.tau_max = 0.5\n",
    );
    assert_eq!(rep.rows.len(), 2);
    assert_eq!(rep.rows[0].tau, 0.0);
    assert_eq!(rep.rows[1].tau, 0.5);
    assert!(rep.summary.max.ode_residual.is_finite());
}

#[test]
fn echoed_config_reparses_identically() {
    for t in TEMPLATES {
        let cfg = ScenarioConfig::parse(t.text).unwrap();
        let rep = run_scenario(&cfg).unwrap();
        let again = ScenarioConfig::parse(&rep.summary.config).unwrap();
        assert_eq!(cfg, again, "{}", t.name);
    }
}

#[test]
fn tolerance_failure_sets_exit_code_two() {
    let text = format!(
        "{}tolerance.mapping = 1e-30\ntolerance.ode = 1e-30\n",
        template("flat-to-sphere").unwrap().text
    );
    let rep = run_text(&text);
    assert!(!rep.passed());
    assert!(!rep.summary.pass.ode);
    assert_eq!(rep.exit_code(), 2);
}

#[test]
fn failures_carry_the_stage() {
    let text = "\
source.kind = jacobi-geodesic
source.metric = schwarzschild
source.mass = 1
source.x0 = (0, 1.5, 1.5707963267948966, 0)
source.v0 = (1, 0, 0, 0)
target.K = 1
integration.tau_max = 1
";
    let cfg = ScenarioConfig::parse(text).unwrap();
    match run_scenario(&cfg) {
        Err(Error::Stage { stage, .. }) => assert_eq!(stage, "source"),
        other => panic!("expected a source-stage error, got {other:?}"),
    }
}

#[test]
fn emit_writes_requested_formats() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = ScenarioConfig::parse(template("flat-to-flat").unwrap().text).unwrap();
    let rep = run_scenario(&cfg).unwrap();
    let out = dir.path().join("nested/run");
    let written = emit_report(&rep, &cfg, &out).unwrap();
    assert_eq!(written.len(), 2);
    assert_eq!(std::fs::read_to_string(out.join(SAMPLES_FILE)).unwrap(), rep.to_csv());
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join(SUMMARY_FILE)).unwrap()).unwrap();
    assert_eq!(json["scenario"], "flat-to-flat");
    assert_eq!(json["pass"]["all"], true);

    let cfg = ScenarioConfig::parse(&format!(
        "{}output.formats = (csv)\n",
        template("flat-to-flat").unwrap().text
    ))
    .unwrap();
    let other = dir.path().join("csv-only");
    let written = emit_report(&rep, &cfg, &other).unwrap();
    assert_eq!(written, vec![other.join(SAMPLES_FILE)]);
}

#[test]
fn catalog_lists_everything() {
    let text = render_catalog();
    for e in METRIC_CATALOG.iter().chain(CONGRUENCE_CATALOG).chain(KIND_CATALOG) {
        assert!(text.contains(e.name));
    }
    for t in TEMPLATES {
        assert!(text.contains(t.name));
    }
}
