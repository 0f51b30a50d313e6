//! Suites and frozen constants shared by the integration tests and the
//! acceptance run.

#![allow(dead_code)]

use std::path::PathBuf;

use charwave::bounds::{
    bound_report, fit_bound_constants, fit_gronwall, gronwall_case, random_pair_suite, random_path_suite,
    BoundConstants, BoundReport, GronwallCase, GronwallParams, LengthParams,
};
use charwave::chart::{Bump, ChartDomain, DatumSpec};
use charwave::metric::{PathOfData, PathSpec};
use charwave::wavespeed::WaveSpeed;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundSuite {
    pub seed: u64,
    pub n: usize,
    pub amplitude: f64,
    pub params: LengthParams,
    pub constants: BoundConstants,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GronwallSuite {
    pub seed: u64,
    pub holdout_seed: u64,
    pub n: usize,
    pub holdout_n: usize,
    pub amplitude: f64,
    pub energy_cap: f64,
    pub params: GronwallParams,
    pub c: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Fixtures {
    pub bounds: BoundSuite,
    pub gronwall: GronwallSuite,
}

pub fn fixture_path() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/fitted_constants.json")
}

pub fn load_fixtures() -> Fixtures {
    let text = std::fs::read_to_string(fixture_path()).expect("fixture file present");
    serde_json::from_str(&text).expect("fixture file parses")
}

pub fn bound_reports(s: &BoundSuite, ws: &WaveSpeed) -> Vec<BoundReport> {
    random_pair_suite(s.seed, s.n, s.amplitude)
        .iter()
        .map(|(a, b)| bound_report(a, b, ws, &s.params).expect("bound report"))
        .collect()
}

pub fn gronwall_cases(seed: u64, n: usize, s: &GronwallSuite, ws: &WaveSpeed) -> Vec<GronwallCase> {
    random_path_suite(seed, n, s.amplitude)
        .into_iter()
        .map(|spec| {
            let path = PathOfData { spec, thetas: vec![0.0, 1.0], energy_cap: s.energy_cap };
            gronwall_case(&path, ws, &s.params).expect("smooth gronwall case")
        })
        .collect()
}

/// Largest energy over the endpoints of a path suite.
pub fn suite_energy(seed: u64, n: usize, amplitude: f64, ws: &WaveSpeed) -> f64 {
    let dom = ChartDomain { xa: -4.0, h: 1.0 / 256.0, n: 2048 };
    random_path_suite(seed, n, amplitude)
        .iter()
        .flat_map(|spec| match spec {
            PathSpec::Blend { start, end } | PathSpec::Interpolated { start, end } => [start.clone(), end.clone()],
        })
        .map(|d| dom.sample(&d, ws).energy(ws))
        .fold(0.0, f64::max)
}

/// Fit every frozen constant from scratch.
pub fn fit_fixtures(ws: &WaveSpeed) -> Fixtures {
    let mut bounds = BoundSuite {
        seed: 7,
        n: 10,
        amplitude: 0.5,
        params: LengthParams::default(),
        constants: BoundConstants { c_prime: 0.0, delta0: 0.0 },
    };
    bounds.constants = fit_bound_constants(&bound_reports(&bounds, ws));
    let mut gronwall = GronwallSuite {
        seed: 11,
        holdout_seed: 12,
        n: 10,
        holdout_n: 5,
        amplitude: 0.4,
        energy_cap: 4.0,
        params: GronwallParams::default(),
        c: 0.0,
    };
    assert!(suite_energy(gronwall.seed, gronwall.n, gronwall.amplitude, ws) <= gronwall.energy_cap);
    gronwall.c = fit_gronwall(&gronwall_cases(gronwall.seed, gronwall.n, &gronwall, ws));
    Fixtures { bounds, gronwall }
}

/// The steep `2 + cos u` datum used for the singular experiments: a bump in
/// `u0` with `u1 = c(u0) u0_x`, so `S0 = 0` and the wave starts out moving
/// left; it breaks at `t ~ 0.706`.
pub fn singular_datum() -> DatumSpec {
    let mut d = DatumSpec::at_rest(Bump::new(0.0, 1.0, 1.5));
    d.transport = 1.0;
    d
}
