//! Tangent vectors along level curves, their norm, and path lengths.

use charwave::chart::{Bump, ChartDomain, DatumSpec, SolveOptions};
use charwave::metric::{
    interaction_rate, length_of, main_form_from_oracle, main_form_on_curve, optimize_relabeling, path_length,
    path_tangents, shifts_and_vertical, tangent_by_theta, AffineFamily, CurveTangent, Gauge, NormWeights, PathOfData,
    PathSpec,
};
use charwave::oracle::{direct_interaction_rate, direct_solve, physical_tangent_solve, DirectOptions, TangentDatum};
use charwave::slice::extract_level_curve;
use charwave::wavespeed::WaveSpeed;
use proptest::prelude::*;

fn domain(path: &PathOfData, ws: &WaveSpeed, t: f64, h: f64) -> ChartDomain {
    ChartDomain::covering(path.spec.support(), t, path.energy_cap, ws, h, 1.2).unwrap()
}

fn base() -> DatumSpec {
    DatumSpec { u0: vec![Bump::new(0.0, 1.0, 0.5)], u1: vec![Bump::new(0.1, 0.8, 0.3)], transport: 0.0 }
}

#[test]
fn constant_path_has_zero_length() {
    let ws = WaveSpeed::two_plus_cos();
    let path = PathOfData::uniform(PathSpec::Blend { start: base(), end: base() }, 4, 20.0);
    let dom = domain(&path, &ws, 0.5, 1.0 / 64.0);
    let nw = NormWeights::default();
    for tau in [0.0, 0.5] {
        let l = path_length(&path, tau, &nw, &ws, &dom, &SolveOptions::default(), 1e-4).unwrap();
        // only the roundoff of blending equal amplitudes remains
        assert!(l.length < 1e-9, "tau {tau}: {}", l.length);
    }
}

#[test]
fn velocity_change_moves_both_angles_at_time_zero() {
    // u1 -> u1 + theta g changes R0 and S0 by g: alpha' = 2g/(1 + R0^2),
    // beta' = 2g/(1 + S0^2), and nothing else moves.
    let ws = WaveSpeed::constant(1.0);
    let g = Bump::new(0.2, 0.6, 0.7);
    let mut end = base();
    end.u1.push(Bump::new(0.1, 0.8, 0.0));
    let mut start = end.clone();
    start.u1[1] = Bump::new(g.center, g.half_width, 0.0);
    end.u1[1] = g;
    let path = PathOfData::uniform(PathSpec::Blend { start, end }, 2, 20.0);
    let dom = domain(&path, &ws, 0.0, 1.0 / 128.0);
    let tangents = path_tangents(&path, 0.0, 1e-4, &ws, &dom, &SolveOptions::default()).unwrap();
    for ct in &tangents {
        for k in 0..ct.len() {
            let x = ct.base[k].x;
            let (r0, s0) = ((0.5 * ct.base[k].a).tan(), (0.5 * ct.base[k].b).tan());
            let gx = g.eval(x).0;
            let t = &ct.tangent[k];
            assert!((t.a - 2.0 * gx / (1.0 + r0 * r0)).abs() < 1e-6, "theta {} x {x}", ct.theta);
            assert!((t.b - 2.0 * gx / (1.0 + s0 * s0)).abs() < 1e-6);
            assert!((t.p - 2.0 * r0 * gx).abs() < 1e-6 && (t.q - 2.0 * s0 * gx).abs() < 1e-6);
            assert!(t.u.abs() < 1e-12 && t.x.abs() < 1e-12 && t.t.abs() < 1e-12);
        }
    }
}

#[test]
fn translation_is_a_pure_relabeling() {
    // For c = 1, shifting a right-moving wave is absorbed by the canonical
    // labels (w = z = 0); the translation gauge instead moves the labels
    // with the wave (w = z = 1).
    let ws = WaveSpeed::constant(1.0);
    let shifted = |s: f64| DatumSpec::right_moving(Bump::new(s, 0.8, 0.6));
    let path = PathOfData::uniform(PathSpec::Blend { start: shifted(0.0), end: shifted(0.5) }, 2, 4.0);
    let dom = domain(&path, &ws, 0.5, 1.0 / 128.0);
    let opts = SolveOptions::default();
    let (chart, tf) = tangent_by_theta(&path, 0.5, 1e-4, &ws, &dom, &opts).unwrap();
    let ct = CurveTangent::on_curve(&chart, &tf, &extract_level_curve(&chart, 0.5).unwrap()).unwrap();
    // the gauge moves X by +1/2 per unit theta and Y by -1/2 (x = (X - Y)/2)
    let gauge = Gauge { offset_x: 0.5, offset_y: -0.5, ..Gauge::none() };
    let moved = ct.gauged(&gauge);
    for (k, mv) in moved.iter().enumerate() {
        let s = shifts_and_vertical(&ws, &ct.base[k], &ct.tangent[k], ct.cap);
        assert!(s.w.abs() < 1e-8 && s.z.abs() < 1e-8, "{s:?}");
        let m = shifts_and_vertical(&ws, &ct.base[k], mv, ct.cap);
        assert!((m.w - 0.5).abs() < 1e-6 && (m.z - 0.5).abs() < 1e-6, "{m:?}");
    }
    assert!((Gauge::translation(1.0).offset_x - 1.0).abs() < 1e-15);
}

#[test]
fn constant_speed_has_no_interaction() {
    let ws = WaveSpeed::constant(1.5);
    let path = PathOfData::uniform(PathSpec::Blend { start: base(), end: base() }, 1, 20.0);
    let dom = domain(&path, &ws, 0.6, 1.0 / 64.0);
    let (chart, tf) = tangent_by_theta(&path, 0.0, 1e-4, &ws, &dom, &SolveOptions::default()).unwrap();
    let ct = CurveTangent::on_curve(&chart, &tf, &extract_level_curve(&chart, 0.6).unwrap()).unwrap();
    assert_eq!(interaction_rate(&ws, &ct.nodes()), 0.0);
}

#[test]
fn interaction_rate_agrees_with_the_direct_solver() {
    let ws = WaveSpeed::two_plus_cos();
    let spec = DatumSpec { u0: vec![Bump::new(0.0, 1.0, 0.6)], u1: vec![Bump::new(0.2, 0.8, 0.5)], transport: 0.0 };
    let tau = 0.5;
    let h = 1.0 / 256.0;
    let dom = ChartDomain::covering(spec.support().unwrap(), tau, 20.0, &ws, h, 1.2).unwrap();
    let path = PathOfData::uniform(PathSpec::Blend { start: spec.clone(), end: spec.clone() }, 1, 20.0);
    let opts = SolveOptions { t_stop: Some(tau + 0.05), ..Default::default() };
    let (chart, tf) = tangent_by_theta(&path, 0.0, 1e-4, &ws, &dom, &opts).unwrap();
    let ct = CurveTangent::on_curve(&chart, &tf, &extract_level_curve(&chart, tau).unwrap()).unwrap();
    let on_chart = interaction_rate(&ws, &ct.nodes());
    let mut o = DirectOptions::new(tau, 4);
    o.snapshots = vec![tau];
    let run = direct_solve(&dom.sample(&spec, &ws), &ws, &o).unwrap();
    let direct = direct_interaction_rate(&ws, run.at(tau));
    assert!(direct > 0.0);
    assert!((on_chart - direct).abs() < 1e-2 * direct, "chart {on_chart}, direct {direct}");
}

fn smooth_path() -> PathOfData {
    let mut end = base();
    end.u0[0].amplitude = 0.7;
    end.u1[0].center = 0.2;
    PathOfData::uniform(PathSpec::Blend { start: base(), end }, 2, 20.0)
}

#[test]
fn line_integral_form_matches_the_physical_norm() {
    let ws = WaveSpeed::two_plus_cos();
    let path = smooth_path();
    let (theta, tau, eps) = (0.5, 0.4, 1e-4);
    let nw = NormWeights::default();
    let dom = domain(&path, &ws, 1.0, 1.0 / 128.0);
    let opts = SolveOptions { t_stop: Some(tau + 0.05), ..Default::default() };
    let (chart, tf) = tangent_by_theta(&path, theta, eps, &ws, &dom, &opts).unwrap();
    let curve = extract_level_curve(&chart, tau).unwrap();
    let line = CurveTangent::on_curve(&chart, &tf, &curve).unwrap().norm(&ws, &Gauge::none(), &nw);
    let physical = main_form_on_curve(&chart, &tf, &curve, &Gauge::none(), &nw).unwrap();
    assert!((line.norm - physical.norm).abs() < 1e-3 * physical.norm, "{line:?} {physical:?}");

    // and the direct solver's perturbation gives the same value
    let fine = dom.refined(2);
    let at = |th: f64| path.datum(th, &ws, &fine).unwrap();
    let td = TangentDatum::from_data(&at(theta - eps), &at(theta + eps), eps, &ws).unwrap();
    let states = physical_tangent_solve(&at(theta), &td, &ws, &DirectOptions::new(tau, 1)).unwrap();
    let direct = main_form_from_oracle(&ws, states.last().unwrap(), &nw);
    assert!((line.norm - direct.norm).abs() < 1e-2 * direct.norm, "{line:?} {direct:?}");
}

#[test]
fn difference_step_converges() {
    let ws = WaveSpeed::two_plus_cos();
    let path = smooth_path();
    let dom = domain(&path, &ws, 0.5, 1.0 / 64.0);
    let nw = NormWeights::default();
    let norm = |eps: f64| {
        let (chart, tf) = tangent_by_theta(&path, 0.5, eps, &ws, &dom, &SolveOptions::default()).unwrap();
        let ct = CurveTangent::on_curve(&chart, &tf, &extract_level_curve(&chart, 0.5).unwrap()).unwrap();
        ct.norm(&ws, &Gauge::none(), &nw).norm
    };
    let (a, b) = (norm(1e-3), norm(1e-4));
    assert!((a - b).abs() < 1e-5 * b, "{a} vs {b}");
}

#[test]
fn relabelings_never_beat_themselves() {
    let ws = WaveSpeed::two_plus_cos();
    let path = smooth_path();
    let dom = domain(&path, &ws, 0.3, 1.0 / 64.0);
    let family = [
        AffineFamily::identity(),
        AffineFamily { sigma_x: 1.1, b_x: 0.0, sigma_y: 1.0, b_y: 0.0 },
        AffineFamily { sigma_x: 1.0, b_x: 0.1, sigma_y: 1.0, b_y: -0.1 },
    ];
    let nw = NormWeights::default();
    let opts = SolveOptions::default();
    let res = optimize_relabeling(&path, &family, 0.3, &nw, &ws, &dom, &opts, 1e-4).unwrap();
    assert_eq!(res.table[0].1, res.canonical);
    assert!(res.best_length <= res.canonical);
    assert!(res.table.iter().all(|(_, l)| *l >= res.best_length));
    let tangents = path_tangents(&path, 0.3, 1e-4, &ws, &dom, &opts).unwrap();
    assert_eq!(length_of(&tangents, &ws, &nw, &|th| family[0].gauge(th)).length, res.canonical);
    let bad = [AffineFamily { sigma_x: -1.0, ..AffineFamily::identity() }];
    assert!(optimize_relabeling(&path, &bad, 0.3, &nw, &ws, &dom, &opts, 1e-4).is_err());
}

#[test]
fn energy_cap_is_enforced() {
    let ws = WaveSpeed::two_plus_cos();
    let mut path = smooth_path();
    path.energy_cap = 1e-3;
    let dom = domain(&path, &ws, 0.0, 1.0 / 64.0);
    assert!(path_tangents(&path, 0.0, 1e-4, &ws, &dom, &SolveOptions::default()).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    /// At time zero the tangent of `u1 -> u1 + theta lambda g` is linear in
    /// `lambda`, and so is its norm.
    #[test]
    fn norm_is_homogeneous(lambda in 0.1f64..2.0) {
        let ws = WaveSpeed::two_plus_cos();
        let norm = |l: f64| {
            let mut end = base();
            end.u1[0].amplitude += l * 0.2;
            let path = PathOfData::uniform(PathSpec::Blend { start: base(), end }, 2, 20.0);
            let dom = domain(&path, &ws, 0.0, 1.0 / 64.0);
            let t = path_tangents(&path, 0.0, 1e-4, &ws, &dom, &SolveOptions::default()).unwrap();
            t[0].norm(&ws, &Gauge::none(), &NormWeights::default()).norm
        };
        let (a, b) = (norm(lambda), norm(1.0));
        prop_assert!((a - lambda * b).abs() < 1e-6 * b, "{} vs {}", a, lambda * b);
    }
}
