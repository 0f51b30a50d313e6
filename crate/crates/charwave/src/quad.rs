//! Small quadrature and interpolation helpers shared by the modules.
//!
//! Sums go through [`pairwise_sum`] so that reductions are independent of
//! how the caller chunks work.

/// Pairwise (cascade) summation; deterministic and accurate to O(log n) ulps.
pub fn pairwise_sum(v: &[f64]) -> f64 {
    const LEAF: usize = 32;
    if v.len() <= LEAF {
        return v.iter().sum();
    }
    let mid = v.len() / 2;
    pairwise_sum(&v[..mid]) + pairwise_sum(&v[mid..])
}

/// Trapezoid rule for samples `f` at (possibly non-uniform) abscissae `x`.
pub fn trapz(x: &[f64], f: &[f64]) -> f64 {
    debug_assert_eq!(x.len(), f.len());
    let terms: Vec<f64> = x
        .windows(2)
        .zip(f.windows(2))
        .map(|(xs, fs)| 0.5 * (fs[0] + fs[1]) * (xs[1] - xs[0]))
        .collect();
    pairwise_sum(&terms)
}

/// Trapezoid rule on a uniform grid of spacing `h`.
pub fn trapz_uniform(h: f64, f: &[f64]) -> f64 {
    if f.len() < 2 {
        return 0.0;
    }
    let interior = pairwise_sum(&f[1..f.len() - 1]);
    h * (interior + 0.5 * (f[0] + f[f.len() - 1]))
}

/// Running trapezoid integral, starting from zero at the first sample.
pub fn cumtrapz(x: &[f64], f: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(f.len());
    let mut acc = 0.0;
    out.push(0.0);
    for k in 1..f.len() {
        acc += 0.5 * (f[k - 1] + f[k]) * (x[k] - x[k - 1]);
        out.push(acc);
    }
    out
}

/// Linear interpolation on a nondecreasing abscissa; constant extrapolation.
pub fn interp(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    let n = xs.len();
    if n == 0 {
        return f64::NAN;
    }
    if x <= xs[0] {
        return ys[0];
    }
    if x >= xs[n - 1] {
        return ys[n - 1];
    }
    // first index with xs[k] > x
    let k = xs.partition_point(|&v| v <= x);
    let (x0, x1) = (xs[k - 1], xs[k]);
    if x1 == x0 {
        return ys[k];
    }
    let s = (x - x0) / (x1 - x0);
    ys[k - 1] + s * (ys[k] - ys[k - 1])
}

/// Second-order derivative estimate on a non-uniform grid.
pub fn gradient(x: &[f64], f: &[f64]) -> Vec<f64> {
    let n = x.len();
    let mut d = vec![0.0; n];
    if n < 2 {
        return d;
    }
    if n == 2 {
        let g = (f[1] - f[0]) / (x[1] - x[0]);
        return vec![g, g];
    }
    for i in 1..n - 1 {
        let h0 = x[i] - x[i - 1];
        let h1 = x[i + 1] - x[i];
        d[i] = (h0 * h0 * f[i + 1] - h1 * h1 * f[i - 1] + (h1 * h1 - h0 * h0) * f[i])
            / (h0 * h1 * (h0 + h1));
    }
    let (h0, h1) = (x[1] - x[0], x[2] - x[1]);
    d[0] = -(2.0 * h0 + h1) / (h0 * (h0 + h1)) * f[0] + (h0 + h1) / (h0 * h1) * f[1]
        - h0 / (h1 * (h0 + h1)) * f[2];
    let m = n - 1;
    let (h0, h1) = (x[m - 1] - x[m - 2], x[m] - x[m - 1]);
    d[m] = h1 / (h0 * (h0 + h1)) * f[m - 2] - (h0 + h1) / (h0 * h1) * f[m - 1]
        + (2.0 * h1 + h0) / (h1 * (h0 + h1)) * f[m];
    d
}

/// Adaptive Simpson quadrature of `f` over `[a, b]`.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    #[allow(clippy::too_many_arguments)]
    fn rec<F: Fn(f64) -> f64>(
        f: &F,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let diff = left + right - whole;
        if depth == 0 || diff.abs() <= 15.0 * tol {
            return left + right + diff / 15.0;
        }
        rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
            + rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
    if a == b {
        return 0.0;
    }
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    rec(f, a, b, fa, fm, fb, whole, tol, 48)
}
