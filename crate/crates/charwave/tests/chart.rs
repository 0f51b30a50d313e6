//! The characteristic chart: exactness for constant speed, sign structure,
//! relabeling invariance and the dump format.

use charwave::chart::io::{read_chart, write_chart};
use charwave::chart::{
    boundary_data, monotonicity, relabel, residuals_until, solve_chart, solve_spec, Affine, Bump, ChartDomain,
    DatumSpec, SolveOptions,
};
use charwave::quad::adaptive_simpson;
use charwave::slice::{extract_level_curve, reconstruct_slice};
use charwave::wavespeed::WaveSpeed;
use proptest::prelude::*;

fn domain(spec: &DatumSpec, ws: &WaveSpeed, t: f64, h: f64) -> ChartDomain {
    let support = spec.support().unwrap();
    let e = ChartDomain::covering(support, 0.0, 0.0, ws, h, 1.2).unwrap().sample(spec, ws).energy(ws);
    ChartDomain::covering(support, t, e, ws, h, 1.2).unwrap()
}

/// Largest deviation of `u` on `t = tau` from d'Alembert's formula.
fn dalembert_error(h: f64, tau: f64) -> f64 {
    let ws = WaveSpeed::constant(1.0);
    let b0 = Bump::new(0.0, 0.8, 0.6);
    let b1 = Bump::new(0.2, 0.6, -0.9);
    let spec = DatumSpec { u0: vec![b0], u1: vec![b1], transport: 0.0 };
    let dom = domain(&spec, &ws, tau, h);
    let chart = solve_spec(&spec, &ws, &dom, &SolveOptions::default()).unwrap();
    let slice = reconstruct_slice(&chart, &extract_level_curve(&chart, tau).unwrap()).unwrap();
    let exact = |x: f64| {
        0.5 * (b0.eval(x - tau).0 + b0.eval(x + tau).0)
            + 0.5 * adaptive_simpson(&|s| b1.eval(s).0, x - tau, x + tau, 1e-13)
    };
    slice.x.iter().zip(&slice.u).map(|(&x, &u)| (u - exact(x)).abs()).fold(0.0, f64::max)
}

#[test]
fn constant_speed_reproduces_dalembert_at_second_order() {
    let e1 = dalembert_error(1.0 / 64.0, 0.8);
    let e2 = dalembert_error(1.0 / 128.0, 0.8);
    assert!(e2 < 2e-4, "error {e2}");
    let ratio = e1 / e2;
    assert!((3.0..5.5).contains(&ratio), "refinement ratio {ratio} ({e1}, {e2})");
}

#[test]
fn smooth_chart_satisfies_the_system_and_sign_structure() {
    let ws = WaveSpeed::two_plus_cos();
    let spec = DatumSpec { u0: vec![Bump::new(0.0, 1.0, 0.8)], u1: vec![Bump::new(0.3, 0.7, 0.5)], transport: 0.0 };
    let h = 1.0 / 128.0;
    let dom = domain(&spec, &ws, 1.0, h);
    let chart = solve_spec(&spec, &ws, &dom, &SolveOptions { t_stop: Some(1.0), ..Default::default() }).unwrap();
    assert!(chart.t_max() >= 1.0);
    let res = residuals_until(&chart, 1.0);
    assert!(res.max() < 80.0 * h * h, "{res:?}");
    assert!(monotonicity(&chart).healthy());
}

#[test]
fn parallel_and_serial_marching_agree_bit_for_bit() {
    let ws = WaveSpeed::two_plus_cos();
    let spec = DatumSpec::at_rest(Bump::new(0.0, 1.0, 1.2));
    let dom = domain(&spec, &ws, 0.5, 1.0 / 64.0);
    let a = solve_spec(&spec, &ws, &dom, &SolveOptions { parallel: true, ..Default::default() }).unwrap();
    let b = solve_spec(&spec, &ws, &dom, &SolveOptions { parallel: false, ..Default::default() }).unwrap();
    assert!(a.t.iter().zip(&b.t).all(|(x, y)| x.to_bits() == y.to_bits()));
    assert!(a.u.iter().zip(&b.u).all(|(x, y)| x.to_bits() == y.to_bits()));
}

#[test]
fn backward_half_reaches_negative_times() {
    let ws = WaveSpeed::two_plus_cos();
    let spec = DatumSpec::at_rest(Bump::new(0.0, 1.0, 0.5));
    let dom = domain(&spec, &ws, 0.3, 1.0 / 64.0);
    let chart = solve_spec(&spec, &ws, &dom, &SolveOptions { backward: true, ..Default::default() }).unwrap();
    let tmin = chart.t.iter().filter(|v| !v.is_nan()).fold(f64::INFINITY, |m, &v| m.min(v));
    assert!(tmin < -0.3);
    // time reversal: u(-t, x) = u(t, x) for data at rest
    let fwd = reconstruct_slice(&chart, &extract_level_curve(&chart, 0.25).unwrap()).unwrap();
    let xs: Vec<f64> = (-20..=20).map(|k| k as f64 * 0.05).collect();
    let back_curve = negative_level(&chart, -0.25);
    let (uf, ub) = (fwd.u_at(&xs), back_curve);
    for (x, u) in xs.iter().zip(&uf) {
        let v = charwave::quad::interp(&ub.0, &ub.1, *x);
        assert!((u - v).abs() < 1e-3, "x {x}: {u} vs {v}");
    }
}

/// `(x, u)` on the level `t = tau < 0`, found by linear interpolation of
/// `t` along each row `j` of the grid.
fn negative_level(chart: &charwave::chart::CharChart, tau: f64) -> (Vec<f64>, Vec<f64>) {
    let g = chart.grid;
    let mut pts = Vec::new();
    for i in 0..g.nx {
        for j in 0..g.ny - 1 {
            let (k0, k1) = (g.idx(i, j), g.idx(i, j + 1));
            let (t0, t1) = (chart.t[k0], chart.t[k1]);
            if t0.is_nan() || t1.is_nan() || (t0 - tau) * (t1 - tau) > 0.0 || t0 == t1 {
                continue;
            }
            let s = (tau - t0) / (t1 - t0);
            pts.push(((1.0 - s) * chart.x[k0] + s * chart.x[k1], (1.0 - s) * chart.u[k0] + s * chart.u[k1]));
        }
    }
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    pts.into_iter().unzip()
}

#[test]
fn relabeling_leaves_slices_unchanged_up_to_second_order() {
    let ws = WaveSpeed::two_plus_cos();
    let spec = DatumSpec { u0: vec![Bump::new(0.0, 1.0, 0.7)], u1: vec![Bump::new(0.2, 0.8, 0.4)], transport: 0.0 };
    let phi = |s: f64| (s + 0.1 * s.sin(), 1.0 + 0.1 * s.cos());
    let psi = Affine { slope: 1.3, offset: 0.05 };
    let tau = 0.5;
    let diff = |h: f64| {
        let dom = domain(&spec, &ws, tau, h);
        let chart = solve_spec(&spec, &ws, &dom, &SolveOptions::default()).unwrap();
        let moved = relabel(&chart, &phi, &psi).unwrap();
        let a = reconstruct_slice(&chart, &extract_level_curve(&chart, tau).unwrap()).unwrap();
        let b = reconstruct_slice(&moved, &extract_level_curve(&moved, tau).unwrap()).unwrap();
        let xs: Vec<f64> = (-40..=40).map(|k| k as f64 * 0.04).collect();
        a.u_at(&xs).iter().zip(b.u_at(&xs)).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max)
    };
    for h in [1.0 / 32.0, 1.0 / 64.0, 1.0 / 128.0] {
        let d = diff(h);
        assert!(d <= 2.0 * h * h, "h {h}: {d}");
    }
}

#[test]
fn affine_relabeling_on_the_lattice_is_exact() {
    let ws = WaveSpeed::two_plus_cos();
    let spec = DatumSpec::at_rest(Bump::new(0.0, 1.0, 0.7));
    let dom = domain(&spec, &ws, 0.3, 1.0 / 64.0);
    let chart = solve_spec(&spec, &ws, &dom, &SolveOptions::default()).unwrap();
    let moved = relabel(&chart, &Affine { slope: 2.0, offset: 0.5 }, &Affine::identity()).unwrap();
    for k in 0..chart.grid.len() {
        if chart.t[k].is_nan() {
            continue;
        }
        assert_eq!(moved.t[k], chart.t[k]);
        assert!((moved.p[k] - 2.0 * chart.p[k]).abs() <= 1e-15 * chart.p[k]);
        assert_eq!(moved.q[k], chart.q[k]);
    }
}

#[test]
fn dump_and_load_round_trip_exactly() {
    let ws = WaveSpeed::two_plus_cos();
    let spec = DatumSpec::at_rest(Bump::new(0.1, 0.9, 1.1));
    let dom = domain(&spec, &ws, 0.4, 1.0 / 32.0);
    let chart = solve_spec(&spec, &ws, &dom, &SolveOptions::default()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("chart.csv");
    write_chart(&chart, std::fs::File::create(&path).unwrap()).unwrap();
    let back = read_chart(std::fs::File::open(&path).unwrap()).unwrap();
    assert_eq!(back.grid, chart.grid);
    assert_eq!(back.speed, chart.speed);
    for (a, b) in [(&chart.u, &back.u), (&chart.alpha, &back.alpha), (&chart.x, &back.x), (&chart.t, &back.t)] {
        assert!(a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits()));
    }
    assert!(read_chart("not a chart\n".as_bytes()).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    /// The chart starts from the datum: on `t = 0`, `u`, `u_t`, `u_x`
    /// are the samples, up to the clipping of `R, S` at `1/h`.
    #[test]
    fn initial_slice_is_the_datum(
        c in -0.4f64..0.4, w in 0.6f64..1.2, a in -2.0f64..2.0, b in -2.0f64..2.0, tr in -1.0f64..1.0,
    ) {
        let ws = WaveSpeed::two_plus_cos();
        let spec = DatumSpec { u0: vec![Bump::new(c, w, a)], u1: vec![Bump::new(-c, w, b)], transport: tr };
        let dom = ChartDomain::covering(spec.support().unwrap_or((-1.0, 1.0)), 0.0, 0.0, &ws, 1.0 / 64.0, 1.2).unwrap();
        let datum = dom.sample(&spec, &ws);
        let chart = solve_chart(&boundary_data(&datum, &ws), &ws, &SolveOptions { t_stop: Some(0.05), ..Default::default() }).unwrap();
        let slice = reconstruct_slice(&chart, &extract_level_curve(&chart, 0.0).unwrap()).unwrap();
        for (k, &x) in slice.x.iter().enumerate() {
            let (u0, u0x, u1) = spec.eval(&ws, x);
            prop_assert!((slice.u[k] - u0).abs() < 1e-12);
            if slice.r[k].abs() < slice.cap && slice.s[k].abs() < slice.cap {
                prop_assert!((slice.ut[k] - u1).abs() < 1e-9 * (1.0 + u1.abs()));
                prop_assert!((slice.ux[k] - u0x).abs() < 1e-9 * (1.0 + u0x.abs()));
            }
        }
        // the closed-form energy quadrature walks through the first interior
        // nodes, so it agrees with the lattice trapezoid to O(h^2) only
        prop_assert!((slice.energy - datum.energy(&ws)).abs() < 1e-6 * (1.0 + slice.energy));
    }
}
