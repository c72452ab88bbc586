use mmt_core::scenario::{run_scenario, ScenarioConfig, ScenarioReport};
use mmt_core::Error;

fn run(text: &str) -> ScenarioReport {
    let cfg = ScenarioConfig::parse(text).unwrap_or_else(|e| panic!("{e}"));
    run_scenario(&cfg).unwrap_or_else(|e| panic!("{e:?}"))
}

#[test]
fn static_observer_onto_flat_target() {
    // The acceleration gradient cancels the tidal matrix, so source and
    // target are the same free system and T stays the identity.
    let rep = run("\
scenario.name = \"static\"
source.kind = jacobi-nongeodesic
source.metric = schwarzschild
source.mass = 1
source.congruence = schwarzschild-static
source.x0 = (0, 10, 1.5707963267948966, 0)
target.K = 0
integration.tau_max = 2
");
    assert!(rep.passed(), "{:?}", rep.summary.max);
    let k = 2 * rep.n;
    let last = &rep.rows.last().unwrap().t;
    for i in 0..k {
        for j in 0..k {
            let want = if i == j { 1.0 } else { 0.0 };
            assert!(
                (last[i * k + j] - want).abs() <= 1e-6,
                "T[{i}][{j}] = {}",
                last[i * k + j]
            );
        }
    }
}

#[test]
fn diagonal_metric_source_matches_named_metric() {
    // Spatially flat FRW-like chart with constant scale factor: flat space.
    let diag = run("\
source.kind = jacobi-geodesic
source.metric = diagonal
source.entries = (\"-1\", \"4\", \"4\")
source.x0 = (0, 0, 0)
source.v0 = (1, 0, 0)
target.K = 1
integration.tau_max = 1
");
    let named = run("\
source.kind = jacobi-geodesic
source.metric = minkowski
source.x0 = (0, 0, 0)
source.v0 = (1, 0, 0)
target.K = 1
integration.tau_max = 1
");
    assert_eq!(diag.n, 2);
    for (a, b) in diag.rows.iter().zip(&named.rows) {
        for (x, y) in a.t.iter().zip(&b.t) {
            assert!((x - y).abs() <= 1e-9);
        }
    }
}

#[test]
fn first_order_source_with_custom_initial_map() {
    let rep = run("\
source.kind = jacobi-first-order
source.M = (0.2, 0.5, -0.5, 0.1)
target.kind = metric-quadratic-form
target.b = 0.5
integration.tau_max = 2
transfer.T0 = (1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1, 0, 0, 0, 0.5, 1)
verify.state.0 = (1, 1, 0, 0)
");
    assert!(rep.passed(), "{:?}", rep.summary.max);
    assert_eq!(rep.summary.verification.len(), 1);
    assert_eq!(rep.rows[0].t[14], 0.5);
}

#[test]
fn rindler_outside_the_wedge_fails_in_source_stage() {
    let cfg = ScenarioConfig::parse(
        "\
source.kind = jacobi-nongeodesic
source.metric = minkowski
source.congruence = rindler
source.x0 = (2, 1, 0, 0)
target.K = 0
integration.tau_max = 1
",
    )
    .unwrap();
    assert!(matches!(run_scenario(&cfg), Err(Error::Stage { stage: "source", .. })));
}
