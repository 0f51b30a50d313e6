//! Acceptance run: one PASS/FAIL line per criterion, with the measured
//! numbers and the wall time.  Exits nonzero if any criterion fails.
//!
//! `cargo test -p charwave --test acceptance`

mod common;

use std::process::ExitCode;
use std::time::Instant;

use charwave::bounds::{count_bound_violations, gronwall_violations, lipschitz_experiment, random_path_suite};
use charwave::bounds::{LipschitzParams, StraddleFamily};
use charwave::chart::{relabel, solve_spec, Affine, Bump, CharChart, ChartDomain, DatumSpec, SolveOptions};
use charwave::metric::{
    main_form_from_oracle, main_form_on_curve, tangent_by_theta, weights_along_curve, CurveNodes, CurveTangent, Gauge,
    NormWeights, PathOfData,
};
use charwave::oracle::{direct_solve, physical_tangent_solve, weight_inequality, DirectOptions, TangentDatum};
use charwave::slice::{energy_at, extract_level_curve, jacobian, reconstruct_slice};
use charwave::wavespeed::WaveSpeed;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn covering(spec: &DatumSpec, ws: &WaveSpeed, t: f64, h: f64) -> ChartDomain {
    let support = spec.support().unwrap();
    let e0 = ChartDomain::covering(support, 0.0, 0.0, ws, h, 1.2).unwrap().sample(spec, ws).energy(ws);
    ChartDomain::covering(support, t, e0, ws, h, 1.2).unwrap()
}

fn chart_until(spec: &DatumSpec, ws: &WaveSpeed, dom: &ChartDomain, t: f64) -> CharChart {
    solve_spec(spec, ws, dom, &SolveOptions { t_stop: Some(t), ..Default::default() }).unwrap()
}

/// Largest `|u - u0(x - t)|` over every chart node with `t <= 2`.
fn travelling_wave() -> Outcome {
    let ws = WaveSpeed::constant(1.0);
    let b = Bump::new(0.0, 0.5, 0.3);
    let spec = DatumSpec::right_moving(b);
    let error = |h: f64| {
        let chart = chart_until(&spec, &ws, &covering(&spec, &ws, 2.0, h), 2.0);
        let g = chart.grid;
        let mut worst = 0.0f64;
        for i in 0..g.nx {
            for j in 0..g.ny {
                if chart.is_valid(i, j) {
                    let n = chart.node(i, j);
                    if n.t <= 2.0 {
                        worst = worst.max((n.u - b.eval(n.x - n.t).0).abs());
                    }
                }
            }
        }
        worst
    };
    let coarse = error(1.0 / 128.0);
    let started = Instant::now();
    let fine = error(1.0 / 256.0);
    let secs = started.elapsed().as_secs_f64();
    let ratio = coarse / fine;
    outcome(
        fine <= 1e-3 && (3.0..=5.0).contains(&ratio) && secs <= 10.0,
        format!("max error {fine:.2e} at h = 1/256, ratio {ratio:.2}, {secs:.1} s at h = 1/256"),
    )
}

/// Energy on 20 slices across the first singular time, 512 cells.
fn energy_through_singularity(chart: &CharChart, e0: f64, secs: f64) -> Outcome {
    let mut worst = 0.0f64;
    for k in 0..20 {
        let tau = 1.4 * k as f64 / 19.0;
        worst = worst.max(((energy_at(chart, tau).unwrap() - e0) / e0).abs());
    }
    let t_s = charwave::slice::detect_singularities(chart, Some(1.4), None).first_time;
    let spans = t_s.is_some_and(|t| t < 1.4);
    outcome(
        worst <= 1e-3 && spans && secs <= 60.0,
        format!("max relative error {worst:.2e} on [0, 1.4], singular time {t_s:.4?}, {secs:.1} s"),
    )
}

/// Chart against the direct solver on `[0, 0.5]`, before the singular time.
fn oracle_equivalence() -> Outcome {
    let ws = WaveSpeed::two_plus_cos();
    let spec = common::singular_datum();
    let tw = 0.5;
    let ts = [0.125, 0.25, 0.375, 0.5];
    let mut opts = DirectOptions::new(tw, 4);
    opts.snapshots = ts.to_vec();
    let run = direct_solve(&covering(&spec, &ws, tw, 1.0 / 1024.0).sample(&spec, &ws), &ws, &opts).unwrap();
    let error = |h: f64| {
        let chart = chart_until(&spec, &ws, &covering(&spec, &ws, tw, h), tw);
        let mut worst = 0.0f64;
        for &tau in &ts {
            let st = run.at(tau);
            for p in &extract_level_curve(&chart, tau).unwrap().points {
                worst = worst.max((p.node.u - st.u_at(p.node.x)).abs());
            }
        }
        worst
    };
    let e: Vec<f64> = [1.0 / 64.0, 1.0 / 128.0, 1.0 / 256.0].iter().map(|&h| error(h)).collect();
    let ratios = [e[0] / e[1], e[1] / e[2]];
    outcome(
        ratios.iter().all(|r| (3.0..=5.0).contains(r)),
        format!("errors {:.2e} {:.2e} {:.2e}, ratios {:.2} {:.2}", e[0], e[1], e[2], ratios[0], ratios[1]),
    )
}

/// Line-integral norm against the physical main form on five smooth paths.
fn norm_identity() -> Outcome {
    let ws = WaveSpeed::two_plus_cos();
    let (theta, tau, eps, h) = (0.5, 0.4, 1e-4, 1.0 / 256.0);
    let nw = NormWeights::default();
    let mut worst = 0.0f64;
    for spec in random_path_suite(21, 5, 0.4) {
        let path = PathOfData::uniform(spec, 2, f64::INFINITY);
        let support = path.spec.support();
        let dom = ChartDomain::covering(support, 0.0, 0.0, &ws, h, 1.2).unwrap();
        let at = |th: f64| path.datum(th, &ws, &dom).unwrap();
        let e = [0.0, 0.5, 1.0].map(|th| at(th).energy(&ws)).into_iter().fold(0.0, f64::max);
        let dom = ChartDomain::covering(support, tau, 1.05 * e, &ws, h, 1.2).unwrap();
        let opts = SolveOptions { t_stop: Some(tau + 0.05), ..Default::default() };
        let (chart, tf) = tangent_by_theta(&path, theta, eps, &ws, &dom, &opts).unwrap();
        let curve = extract_level_curve(&chart, tau).unwrap();
        let line = CurveTangent::on_curve(&chart, &tf, &curve).unwrap().norm(&ws, &Gauge::none(), &nw).norm;
        let on_curve = main_form_on_curve(&chart, &tf, &curve, &Gauge::none(), &nw).unwrap().norm;
        let at = |th: f64| path.datum(th, &ws, &dom).unwrap();
        let td = TangentDatum::from_data(&at(theta - eps), &at(theta + eps), eps, &ws).unwrap();
        let states = physical_tangent_solve(&at(theta), &td, &ws, &DirectOptions::new(tau, 1)).unwrap();
        let direct = main_form_from_oracle(&ws, states.last().unwrap(), &nw).norm;
        worst = worst.max((line - on_curve).abs() / on_curve).max((line - direct).abs() / direct);
    }
    outcome(worst <= 1e-2, format!("largest relative difference {worst:.2e} over 5 paths"))
}

/// Frozen Grönwall constant on its suite; the held-out suite is reported.
fn gronwall(fx: &common::Fixtures) -> Outcome {
    let ws = WaveSpeed::two_plus_cos();
    let g = &fx.gronwall;
    let fit = common::gronwall_cases(g.seed, g.n, g, &ws);
    let held = common::gronwall_cases(g.holdout_seed, g.holdout_n, g, &ws);
    let (v, vh) = (gronwall_violations(&fit, g.c), gronwall_violations(&held, g.c));
    let rows = fit.iter().map(|c| c.rows.len()).sum::<usize>();
    outcome(
        v == 0,
        format!("C = {}, {v} violations in {rows} intervals ({} cases); held-out: {vh} violations", g.c, fit.len()),
    )
}

/// Straddling family around the steep datum.
fn lipschitz() -> Outcome {
    let ws = WaveSpeed::two_plus_cos();
    let family = StraddleFamily { center: common::singular_datum(), deltas: vec![0.1, 0.05, 0.025, 0.0125] };
    let lp = LipschitzParams {
        taus: (1..=8).map(|k| k as f64 * 0.1).collect(),
        m: 4,
        h: 1.0 / 128.0,
        eps: 1e-4,
        delta: 0.1,
        margin: 1.2,
        slack: 1e-2,
        fit_until: Some(0.4),
    };
    let table = lipschitz_experiment(&family, &ws, 0.0, &lp).unwrap();
    let late: Vec<_> = table.rows.iter().filter(|r| (r.tau - 0.7).abs() < 1e-9).collect();
    let h1: Vec<f64> = late.iter().map(|r| r.h1_ratio).collect();
    let growing = h1.windows(2).all(|w| w[1] > w[0]);
    let capped = late.last().is_some_and(|r| r.exceeds_cap);
    println!("    {:>7} {:>5} {:>9} {:>9} {:>10}  cap", "delta", "tau", "ratio", "envelope", "H1 ratio");
    for r in &table.rows {
        if r.tau > 0.0 {
            let ratio = r.ratio.unwrap_or(f64::NAN);
            println!(
                "    {:>7} {:>5.2} {:>9.4} {:>9.3e} {:>10.3}  {}",
                r.delta, r.tau, ratio, r.envelope, r.h1_ratio, r.exceeds_cap
            );
        }
    }
    // Uniformity in delta: at every tau the ratios of successive deltas
    // approach each other (they converge as the endpoints close in on the
    // center datum).
    let mut spread = 0.0f64;
    let mut converging = true;
    for &tau in &lp.taus {
        let r: Vec<f64> =
            table.rows.iter().filter(|r| (r.tau - tau).abs() < 1e-9).map(|r| r.ratio.unwrap_or(f64::NAN)).collect();
        let gaps: Vec<f64> = r.windows(2).map(|w| (w[0] - w[1]).abs()).collect();
        converging &= gaps.windows(2).all(|g| g[1] < g[0]);
        spread = spread.max(r.iter().cloned().fold(0.0, f64::max) / r.iter().cloned().fold(f64::INFINITY, f64::min) - 1.0);
    }
    let v = table.violations();
    outcome(
        v == 0 && converging && growing && capped,
        format!(
            "C = {:.3} (fitted on tau <= 0.4), singular time {:.4?}, {v} envelope violations; \
             length ratios within {:.1}% across deltas and converging: {converging}; \
             H1 ratios at tau = 0.7: {:.3?}",
            table.c_fit,
            table.singular_time,
            100.0 * spread,
            h1
        ),
    )
}

/// Frozen upper and lower chain constants on their suite.
fn chains(fx: &common::Fixtures) -> Outcome {
    let ws = WaveSpeed::two_plus_cos();
    let b = &fx.bounds;
    let reports = common::bound_reports(b, &ws);
    let (up, lo) = count_bound_violations(&reports, &b.constants);
    outcome(
        up == 0 && lo == 0,
        format!(
            "C' = {}, delta0 = {}: {up} upper and {lo} lower violations on {} pairs",
            b.constants.c_prime,
            b.constants.delta0,
            reports.len()
        ),
    )
}

/// Relabeling, weight bounds, Jacobian sign and the discrete weight
/// inequalities.
fn invariance(steep: &CharChart, e0: f64) -> Outcome {
    let ws = WaveSpeed::two_plus_cos();
    // relabeling
    let spec = DatumSpec { u0: vec![Bump::new(0.0, 1.0, 0.7)], u1: vec![Bump::new(0.2, 0.8, 0.4)], transport: 0.0 };
    let phi = |s: f64| (s + 0.1 * s.sin(), 1.0 + 0.1 * s.cos());
    let psi = Affine { slope: 1.3, offset: 0.05 };
    let tau = 0.5;
    let mut relabel_ok = true;
    let mut relabel_worst = 0.0f64;
    for h in [1.0 / 32.0, 1.0 / 64.0, 1.0 / 128.0] {
        let chart = chart_until(&spec, &ws, &covering(&spec, &ws, tau, h), tau + 0.1);
        let moved = relabel(&chart, &phi, &psi).unwrap();
        let a = reconstruct_slice(&chart, &extract_level_curve(&chart, tau).unwrap()).unwrap();
        let b = reconstruct_slice(&moved, &extract_level_curve(&moved, tau).unwrap()).unwrap();
        let xs: Vec<f64> = (-40..=40).map(|k| k as f64 * 0.04).collect();
        let d = a.u_at(&xs).iter().zip(b.u_at(&xs)).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
        relabel_ok &= d <= 2.0 * h * h;
        relabel_worst = relabel_worst.max(d / (h * h));
    }
    // weights and Jacobian on the steep chart
    let (mut wmin, mut wmax) = (f64::INFINITY, 0.0f64);
    for k in 0..=14 {
        let curve = extract_level_curve(steep, 0.1 * k as f64).unwrap();
        let nodes: Vec<_> = curve.points.iter().map(|p| p.node).collect();
        let (bx, by): (Vec<f64>, Vec<f64>) = curve.points.iter().map(|p| (p.big_x, p.big_y)).unzip();
        let (wm, wp) = weights_along_curve(&CurveNodes { big_x: &bx, big_y: &by, nodes: &nodes });
        for w in wm.iter().chain(&wp) {
            wmin = wmin.min(*w);
            wmax = wmax.max(*w);
        }
    }
    let weights_ok = wmin >= 1.0 && wmax <= (1.0 + 2.0 * e0) * (1.0 + 1e-3);
    let g = steep.grid;
    let mut det_min = f64::INFINITY;
    for i in 0..g.nx {
        for j in 0..g.ny {
            if steep.is_valid(i, j) {
                det_min = det_min.min(jacobian(steep, i, j).det);
            }
        }
    }
    // discrete weight inequalities on direct-solver runs
    let mut excess = f64::NEG_INFINITY;
    let mut excess_ok = true;
    for h in [1.0 / 64.0, 1.0 / 128.0, 1.0 / 256.0] {
        let spec = DatumSpec { u0: vec![Bump::new(0.0, 1.0, 0.6)], u1: vec![Bump::new(0.2, 0.8, 0.5)], transport: 0.0 };
        let mut opts = DirectOptions::new(1.0, 10);
        opts.snapshots = (1..=100).map(|k| k as f64 * 0.01).collect();
        let run = direct_solve(&covering(&spec, &ws, 1.0, h).sample(&spec, &ws), &ws, &opts).unwrap();
        for k in 1..run.states.len() - 1 {
            let w = weight_inequality(&ws, &run.states[k - 1], &run.states[k], &run.states[k + 1]);
            let e = w.excess_minus.max(w.excess_plus);
            excess = excess.max(e);
            excess_ok &= e <= h;
        }
    }
    outcome(
        relabel_ok && weights_ok && det_min >= 0.0 && excess_ok,
        format!(
            "relabel <= {relabel_worst:.2} h^2; weights in [{wmin:.4}, {wmax:.4}], 1 + 2E0 = {:.4}; \
             min det {det_min:.2e}; weight excess <= {excess:.2e}",
            1.0 + 2.0 * e0
        ),
    )
}

fn main() -> ExitCode {
    let fx = common::load_fixtures();
    let ws = WaveSpeed::two_plus_cos();
    let steep_spec = common::singular_datum();
    let started = Instant::now();
    let (steep, e0) = {
        let support = steep_spec.support().unwrap();
        let e0 = ChartDomain::with_cells(support, 0.0, 0.0, &ws, 512, 1.2).unwrap().sample(&steep_spec, &ws).energy(&ws);
        let dom = ChartDomain::with_cells(support, 1.4, e0, &ws, 512, 1.2).unwrap();
        (chart_until(&steep_spec, &ws, &dom, 1.45), e0)
    };
    let steep_secs = started.elapsed().as_secs_f64();

    type Criterion<'a> = (&'a str, Box<dyn Fn() -> Outcome + 'a>);
    let criteria: Vec<Criterion> = vec![
        ("travelling wave at constant speed", Box::new(travelling_wave)),
        ("energy conservation through a singularity", Box::new(|| energy_through_singularity(&steep, e0, steep_secs))),
        ("chart against the direct solver", Box::new(oracle_equivalence)),
        ("line-integral norm equals the main form", Box::new(norm_identity)),
        ("Grönwall growth bound", Box::new(|| gronwall(&fx))),
        ("Lipschitz bound across singularity formation", Box::new(lipschitz)),
        ("upper and lower distance chains", Box::new(|| chains(&fx))),
        ("invariances", Box::new(|| invariance(&steep, e0))),
    ];
    let mut failed = 0;
    for (k, (name, check)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let o = check();
        let secs = t.elapsed().as_secs_f64();
        failed += usize::from(!o.pass);
        println!("[{}] {}. {name}: {} ({secs:.1} s)", if o.pass { "PASS" } else { "FAIL" }, k + 1, o.detail);
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
