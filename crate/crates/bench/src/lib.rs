//! Shared fixtures for the benchmarks.

use robinlab::{make_domain, triangulate, BoundaryCurve, DomainSpec, Mesh};

pub fn disk(h: f64) -> (BoundaryCurve, Mesh) {
    fixture(&DomainSpec::disk(1.0), h)
}

pub fn corrugated(h: f64) -> (BoundaryCurve, Mesh) {
    fixture(&DomainSpec::corrugated_default(), h)
}

fn fixture(spec: &DomainSpec, h: f64) -> (BoundaryCurve, Mesh) {
    let curve = make_domain(spec).expect("bench domain is valid");
    let mesh = triangulate(&curve, h).expect("bench mesh builds");
    (curve, mesh)
}
