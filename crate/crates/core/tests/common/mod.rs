//! Independent reference values: Bessel functions, radial shooting for the
//! exponential problem on the unit disk, and the AGM ellipse perimeter.
#![allow(dead_code)]

use std::f64::consts::PI;

/// `J_n(x)` for `n = 0, 1` from the power series (accurate for `x < 12`).
pub fn bessel_j(n: u32, x: f64) -> f64 {
    let q = -0.25 * x * x;
    let mut term = (0.5 * x).powi(n as i32);
    let mut sum = term;
    for k in 1..80 {
        term *= q / (k as f64 * (k + n as usize) as f64);
        sum += term;
        if term.abs() < 1e-18 * sum.abs() {
            break;
        }
    }
    sum
}

fn bisect(mut lo: f64, mut hi: f64, f: impl Fn(f64) -> f64) -> f64 {
    let flo = f(lo);
    assert!(flo * f(hi) < 0.0, "bracket does not change sign");
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if (f(mid) < 0.0) == (flo < 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// First positive zero of `J_0`.
pub fn j0_first_zero() -> f64 {
    bisect(2.0, 3.0, |x| bessel_j(0, x))
}

/// First Robin eigenvalue of the unit disk: the smallest root of
/// `sqrt(l) J_1(sqrt(l)) = beta J_0(sqrt(l))`.
pub fn robin_disk_eigenvalue(beta: f64) -> f64 {
    let x = bisect(1e-12, j0_first_zero(), |x| x * bessel_j(1, x) - beta * bessel_j(0, x));
    x * x
}

/// Solution of `w'' + w'/r = -e^w`, `w(0) = w'(0) = 0` by RK4, returning
/// `(w(s), w'(s))`. Starts from the series `w ~ -r^2/4` to avoid `r = 0`.
pub fn gelfand_profile(s: f64) -> (f64, f64) {
    let r0 = 1e-4_f64.min(0.5 * s);
    let mut r = r0;
    let mut y = [-r0 * r0 / 4.0, -r0 / 2.0];
    let rhs = |r: f64, y: [f64; 2]| [y[1], -y[0].exp() - y[1] / r];
    let steps = 4000;
    let dr = (s - r0) / steps as f64;
    for _ in 0..steps {
        let k1 = rhs(r, y);
        let k2 = rhs(r + 0.5 * dr, [y[0] + 0.5 * dr * k1[0], y[1] + 0.5 * dr * k1[1]]);
        let k3 = rhs(r + 0.5 * dr, [y[0] + 0.5 * dr * k2[0], y[1] + 0.5 * dr * k2[1]]);
        let k4 = rhs(r + dr, [y[0] + dr * k3[0], y[1] + dr * k3[1]]);
        for i in 0..2 {
            y[i] += dr / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        r += dr;
    }
    (y[0], y[1])
}

/// Radial solutions of `-Lap u = lambda e^u` on the unit disk are
/// `u(r) = w(s r) + c`, `lambda = s^2 e^{-c}`. Robin data fixes
/// `c = -w(s) - s w'(s) / beta`; `beta = inf` gives Dirichlet.
pub fn gelfand_lambda_of_s(s: f64, beta: f64) -> (f64, f64) {
    let (w, dw) = gelfand_profile(s);
    let c = -w - if beta.is_finite() { s * dw / beta } else { 0.0 };
    (s * s * (-c).exp(), c)
}

/// Extremal parameter: the maximum of `lambda(s)` (golden-section search).
pub fn gelfand_lambda_star(beta: f64) -> f64 {
    let f = |s: f64| gelfand_lambda_of_s(s, beta).0;
    // lambda(s) is unimodal; bracket the peak on a coarse grid first.
    let grid: Vec<f64> = (1..=200).map(|i| 0.05 * i as f64).collect();
    let k = (0..grid.len()).max_by(|&a, &b| f(grid[a]).total_cmp(&f(grid[b]))).unwrap();
    let (mut a, mut b) = (grid[k.saturating_sub(1)], grid[(k + 1).min(grid.len() - 1)]);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..80 {
        let (x1, x2) = (b - g * (b - a), a + g * (b - a));
        if f(x1) < f(x2) {
            a = x1;
        } else {
            b = x2;
        }
    }
    f(0.5 * (a + b))
}

/// Central value `u(0) = c` of the minimal radial solution at `lambda`.
pub fn gelfand_minimal_center(lambda: f64, beta: f64) -> f64 {
    // On the lower branch lambda(s) increases from 0 up to the fold.
    let grid: Vec<f64> = (1..=200).map(|i| 0.05 * i as f64).collect();
    let k = (0..grid.len())
        .max_by(|&a, &b| gelfand_lambda_of_s(grid[a], beta).0.total_cmp(&gelfand_lambda_of_s(grid[b], beta).0))
        .unwrap();
    let s = bisect(1e-6, grid[k], |s| gelfand_lambda_of_s(s, beta).0 - lambda);
    gelfand_lambda_of_s(s, beta).1
}

/// Ellipse perimeter by the arithmetic-geometric mean.
pub fn ellipse_perimeter(a: f64, b: f64) -> f64 {
    let (mut x, mut y) = (a, b);
    let mut c2 = a * a - b * b;
    let mut sum = 0.5 * c2;
    let mut pow = 0.5;
    for _ in 0..40 {
        let (nx, ny) = (0.5 * (x + y), (x * y).sqrt());
        c2 = (0.5 * (x - y)).powi(2);
        pow *= 2.0;
        sum += pow * c2;
        x = nx;
        y = ny;
        if c2 < 1e-300 {
            break;
        }
    }
    // x + y is twice the AGM.
    4.0 * PI / (x + y) * (a * a - sum)
}
