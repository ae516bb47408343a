//! Shared helpers for the integration suites.
// each test target compiles this module and uses a different subset of it
#![allow(dead_code)]

pub mod oracle;

use updatesim::simulator::ScenarioConfig;

pub fn rel_err(actual: f64, expected: f64) -> f64 {
    if expected == 0.0 {
        actual.abs()
    } else {
        (actual - expected).abs() / expected.abs()
    }
}

pub fn assert_rel(actual: f64, expected: f64, tol: f64, what: &str) {
    let err = rel_err(actual, expected);
    assert!(
        err <= tol,
        "{what}: actual {actual} vs expected {expected} (rel err {err:e} > {tol:e})"
    );
}

/// Per-node poll counts, by node id, for a pull run of `config`.
pub fn poll_counts(config: &ScenarioConfig) -> Vec<(usize, usize)> {
    let topo = config.topology.build().unwrap();
    topo.nodes()
        .filter(|n| n.kind != updatesim::NodeKind::Origin)
        .map(|n| {
            let hops = topo.hops_to_origin(n.id).unwrap();
            (n.id.0, config.poll.fire_times(hops, config.horizon_s).len())
        })
        .collect()
}
