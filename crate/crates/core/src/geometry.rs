//! Smooth closed boundary curves represented as trigonometric polynomials.
//!
//! Every curve is `gamma(t) = (x(t), y(t))` for `t` in `[0, 2pi)` with
//! `x(t) = sum_n a_n cos(nt) + b_n sin(nt)` (and likewise for `y`), so all
//! derivatives are exact and the curve is `C^inf` by construction.

use std::f64::consts::{PI, TAU};
use std::fmt::Write as _;

use nalgebra::{Point2, Vector2};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("invalid domain parameters: {0}")]
    InvalidSpec(String),
    #[error("curve is not simple after projection to degree {degree}; raise the degree or lower the corrugation amplitude")]
    NotSimple { degree: usize },
    #[error("curve is negatively oriented")]
    WrongOrientation,
    #[error("degenerate parameterization at t = {t}: |gamma'(t)| = {speed:e}")]
    DegenerateParameterization { t: f64, speed: f64 },
    #[error("malformed coefficient file: {0}")]
    Parse(String),
}

/// Fourier coefficients of one harmonic: `(cos, sin)`.
pub type Harmonic = (f64, f64);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryCurve {
    cx: Vec<Harmonic>,
    cy: Vec<Harmonic>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurveSample {
    pub t: f64,
    pub point: Point2<f64>,
    pub tangent: Vector2<f64>,
    /// Outer unit normal: the tangent rotated by -90 degrees.
    pub normal: Vector2<f64>,
    pub kappa: f64,
    pub speed: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum DomainFamily {
    Disk {
        radius: f64,
    },
    Ellipse {
        a: f64,
        b: f64,
    },
    /// Stadium `[-L, L] x [0, w(x)]` with top edge
    /// `w(x) = 1 + amplitude * cos(waves * pi * x / L)` and semicircular caps,
    /// projected onto trigonometric polynomials of the given degree.
    CorrugatedStrip {
        half_length: f64,
        amplitude: f64,
        waves: usize,
        degree: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DomainSpec {
    #[serde(flatten)]
    pub family: DomainFamily,
    #[serde(default)]
    pub center: [f64; 2],
}

impl DomainSpec {
    pub fn disk(radius: f64) -> Self {
        Self::new(DomainFamily::Disk { radius })
    }

    pub fn ellipse(a: f64, b: f64) -> Self {
        Self::new(DomainFamily::Ellipse { a, b })
    }

    pub fn corrugated_strip(half_length: f64, amplitude: f64, waves: usize, degree: usize) -> Self {
        Self::new(DomainFamily::CorrugatedStrip {
            half_length,
            amplitude,
            waves,
            degree,
        })
    }

    /// The corrugated family with the defaults used by the bundled configs.
    pub fn corrugated_default() -> Self {
        Self::corrugated_strip(
            CORRUGATED_DEFAULT_HALF_LENGTH,
            CORRUGATED_DEFAULT_AMPLITUDE,
            CORRUGATED_DEFAULT_WAVES,
            CORRUGATED_DEFAULT_DEGREE,
        )
    }

    fn new(family: DomainFamily) -> Self {
        Self {
            family,
            center: [0.0, 0.0],
        }
    }

    pub fn with_center(mut self, center: [f64; 2]) -> Self {
        self.center = center;
        self
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        let bad = |msg: String| Err(GeometryError::InvalidSpec(msg));
        if !(self.center[0].is_finite() && self.center[1].is_finite()) {
            return bad("center must be finite".into());
        }
        match self.family {
            DomainFamily::Disk { radius } if !(radius > 0.0 && radius.is_finite()) => {
                bad(format!("disk radius must be positive, got {radius}"))
            }
            DomainFamily::Ellipse { a, b } if !(a >= b && b > 0.0 && a.is_finite()) => {
                bad(format!("ellipse needs a >= b > 0, got a = {a}, b = {b}"))
            }
            DomainFamily::CorrugatedStrip {
                half_length,
                amplitude,
                waves,
                degree,
            } => {
                if !(half_length > 0.0 && half_length.is_finite()) {
                    bad(format!("half_length must be positive, got {half_length}"))
                } else if !(amplitude > 0.0 && amplitude < 1.0) {
                    bad(format!("amplitude must lie in (0, 1), got {amplitude}"))
                } else if waves < 1 {
                    bad("waves must be at least 1".into())
                } else if degree < 8 {
                    bad(format!("degree must be at least 8, got {degree}"))
                } else {
                    Ok(())
                }
            }
            _ => Ok(()),
        }
    }

    /// Reference point the corrugated family is star-shaped about.
    pub fn star_center(&self) -> Point2<f64> {
        let offset = match self.family {
            DomainFamily::CorrugatedStrip { .. } => Vector2::new(0.0, 0.5),
            _ => Vector2::zeros(),
        };
        Point2::new(self.center[0], self.center[1]) + offset
    }
}

pub const CORRUGATED_DEFAULT_HALF_LENGTH: f64 = 6.0;
pub const CORRUGATED_DEFAULT_AMPLITUDE: f64 = 0.08;
pub const CORRUGATED_DEFAULT_WAVES: usize = 3;
pub const CORRUGATED_DEFAULT_DEGREE: usize = 40;

/// Samples of the target stadium used for the Fourier projection.
const PROJECTION_SAMPLES: usize = 8192;

pub fn make_domain(spec: &DomainSpec) -> Result<BoundaryCurve, GeometryError> {
    spec.validate()?;
    let [ox, oy] = spec.center;
    let curve = match spec.family {
        DomainFamily::Disk { radius } => {
            BoundaryCurve::from_coefficients(vec![(ox, 0.0), (radius, 0.0)], vec![(oy, 0.0), (0.0, radius)])
        }
        DomainFamily::Ellipse { a, b } => {
            BoundaryCurve::from_coefficients(vec![(ox, 0.0), (a, 0.0)], vec![(oy, 0.0), (0.0, b)])
        }
        DomainFamily::CorrugatedStrip {
            half_length,
            amplitude,
            waves,
            degree,
        } => {
            let target = CorrugatedStadium {
                half_length,
                amplitude,
                waves,
            };
            let samples = target.resample(PROJECTION_SAMPLES);
            let mut cx = fourier_project(samples.iter().map(|p| p.x), degree);
            let mut cy = fourier_project(samples.iter().map(|p| p.y), degree);
            cx[0].0 += ox;
            cy[0].0 += oy;
            BoundaryCurve::from_coefficients(cx, cy)
        }
    };
    let degree = curve.degree();
    if curve.signed_area() <= 0.0 {
        return Err(GeometryError::WrongOrientation);
    }
    if !curve.is_simple(4096.max(16 * degree)) {
        return Err(GeometryError::NotSimple { degree });
    }
    Ok(curve)
}

impl BoundaryCurve {
    /// Builds a curve from raw coefficients, padding the shorter list with zeros.
    pub fn from_coefficients(mut cx: Vec<Harmonic>, mut cy: Vec<Harmonic>) -> Self {
        let len = cx.len().max(cy.len()).max(1);
        cx.resize(len, (0.0, 0.0));
        cy.resize(len, (0.0, 0.0));
        cx[0].1 = 0.0;
        cy[0].1 = 0.0;
        Self { cx, cy }
    }

    pub fn degree(&self) -> usize {
        self.cx.len() - 1
    }

    pub fn x_coefficients(&self) -> &[Harmonic] {
        &self.cx
    }

    pub fn y_coefficients(&self) -> &[Harmonic] {
        &self.cy
    }

    /// Position and the first two derivatives.
    fn jet(&self, t: f64) -> [Vector2<f64>; 3] {
        let mut out = [Vector2::zeros(); 3];
        for (n, (&(ax, bx), &(ay, by))) in self.cx.iter().zip(&self.cy).enumerate() {
            let nf = n as f64;
            let (s, c) = (nf * t).sin_cos();
            out[0] += Vector2::new(ax * c + bx * s, ay * c + by * s);
            out[1] += nf * Vector2::new(-ax * s + bx * c, -ay * s + by * c);
            out[2] -= nf * nf * Vector2::new(ax * c + bx * s, ay * c + by * s);
        }
        out
    }

    pub fn point(&self, t: f64) -> Point2<f64> {
        Point2::from(self.jet(t)[0])
    }

    pub fn sample(&self, t: f64) -> Result<CurveSample, GeometryError> {
        if !t.is_finite() {
            return Err(GeometryError::InvalidSpec(format!("parameter must be finite, got {t}")));
        }
        let [p, d1, d2] = self.jet(t);
        let speed = d1.norm();
        if speed < 1e-12 {
            return Err(GeometryError::DegenerateParameterization { t, speed });
        }
        let tangent = d1 / speed;
        Ok(CurveSample {
            t,
            point: Point2::from(p),
            tangent,
            normal: Vector2::new(tangent.y, -tangent.x),
            kappa: (d1.x * d2.y - d1.y * d2.x) / speed.powi(3),
            speed,
        })
    }

    /// Curvature at `t`; `NaN` when the parameterization degenerates.
    pub fn curvature(&self, t: f64) -> f64 {
        self.sample(t).map_or(f64::NAN, |s| s.kappa)
    }

    pub fn speed(&self, t: f64) -> f64 {
        self.jet(t)[1].norm()
    }

    fn signed_area_with(&self, n: usize) -> f64 {
        // x y' - y x' is a trigonometric polynomial of degree 2N, so the
        // trapezoid rule with more than 2N nodes is exact.
        let n = n.max(2 * self.degree() + 2);
        (0..n)
            .map(|i| {
                let [p, d1, _] = self.jet(TAU * i as f64 / n as f64);
                p.x * d1.y - p.y * d1.x
            })
            .sum::<f64>()
            * PI
            / n as f64
    }

    pub fn signed_area(&self) -> f64 {
        self.signed_area_with(64)
    }

    /// Checks simplicity on a dense polyline through `n` samples.
    pub fn is_simple(&self, n: usize) -> bool {
        let pts: Vec<Point2<f64>> = (0..n).map(|i| self.point(TAU * i as f64 / n as f64)).collect();
        polyline_is_simple(&pts)
    }

    /// `true` when `(gamma(t) - c) . nu(t) > 0` at every sample.
    pub fn is_star_shaped_about(&self, c: &Point2<f64>, n: usize) -> bool {
        (0..n).all(|i| {
            self.sample(TAU * i as f64 / n as f64)
                .map(|s| (s.point - c).dot(&s.normal) > 0.0)
                .unwrap_or(false)
        })
    }

    /// `oint kappa ds`, which is `2 pi` for a simple positively oriented curve.
    pub fn total_turning(&self) -> f64 {
        adaptive_periodic_mean(
            |t| {
                let [_, d1, d2] = self.jet(t);
                (d1.x * d2.y - d1.y * d2.x) / d1.norm_squared()
            },
            1e-13,
        ) * TAU
    }

    pub fn to_coefficient_text(&self) -> String {
        let mut out = String::from("# harmonic cx_cos cx_sin cy_cos cy_sin\n");
        for (n, (x, y)) in self.cx.iter().zip(&self.cy).enumerate() {
            let _ = writeln!(out, "{n} {} {} {} {}", x.0, x.1, y.0, y.1);
        }
        out
    }

    pub fn from_coefficient_text(text: &str) -> Result<Self, GeometryError> {
        let mut rows: Vec<(usize, Harmonic, Harmonic)> = Vec::new();
        for line in text.lines().map(str::trim) {
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 5 {
                return Err(GeometryError::Parse(format!("expected 5 columns in {line:?}")));
            }
            let n = fields[0]
                .parse::<usize>()
                .map_err(|e| GeometryError::Parse(format!("{line:?}: {e}")))?;
            let mut v = [0.0; 4];
            for (slot, f) in v.iter_mut().zip(&fields[1..]) {
                *slot = f
                    .parse::<f64>()
                    .map_err(|e| GeometryError::Parse(format!("{line:?}: {e}")))?;
            }
            rows.push((n, (v[0], v[1]), (v[2], v[3])));
        }
        let len = rows.iter().map(|r| r.0 + 1).max().ok_or_else(|| GeometryError::Parse("no coefficients".into()))?;
        let mut cx = vec![(0.0, 0.0); len];
        let mut cy = vec![(0.0, 0.0); len];
        for (n, x, y) in rows {
            cx[n] = x;
            cy[n] = y;
        }
        Ok(Self::from_coefficients(cx, cy))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConvexityReport {
    pub min_kappa: f64,
    pub argmin_t: f64,
    pub sign_changes: usize,
}

pub fn convexity_report(curve: &BoundaryCurve, nsamples: usize) -> ConvexityReport {
    let n = nsamples.max(256);
    let kappas: Vec<f64> = (0..n).map(|i| curve.curvature(TAU * i as f64 / n as f64)).collect();
    let (imin, &min_kappa) = kappas
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .expect("at least 256 samples");
    let signs: Vec<bool> = kappas.iter().filter(|k| **k != 0.0).map(|k| *k > 0.0).collect();
    let sign_changes = (0..signs.len())
        .filter(|&i| signs[i] != signs[(i + 1) % signs.len()])
        .count();
    ConvexityReport {
        min_kappa,
        argmin_t: TAU * imin as f64 / n as f64,
        sign_changes,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GeometricMeasures {
    pub area: f64,
    pub perimeter: f64,
}

impl GeometricMeasures {
    pub fn perimeter_to_area(&self) -> f64 {
        self.perimeter / self.area
    }
}

pub fn geometric_measures(curve: &BoundaryCurve) -> GeometricMeasures {
    GeometricMeasures {
        area: curve.signed_area_with(64),
        perimeter: adaptive_periodic_mean(|t| curve.speed(t), 1e-12) * TAU,
    }
}

/// Mean of a smooth `2pi`-periodic function by the trapezoid rule, doubling
/// the node count until successive estimates agree to `rel_tol`.
fn adaptive_periodic_mean(f: impl Fn(f64) -> f64, rel_tol: f64) -> f64 {
    let mut n = 64usize;
    let mut sum: f64 = (0..n).map(|i| f(TAU * i as f64 / n as f64)).sum();
    let mut mean = sum / n as f64;
    while n < (1 << 22) {
        // Only the new midpoints need evaluating.
        let mid: f64 = (0..n).map(|i| f(TAU * (i as f64 + 0.5) / n as f64)).sum();
        sum += mid;
        n *= 2;
        let next = sum / n as f64;
        let done = (next - mean).abs() <= rel_tol * next.abs().max(1e-300);
        mean = next;
        if done {
            break;
        }
    }
    mean
}

/// Arclength-proportional reparameterization table for a curve.
#[derive(Debug, Clone)]
pub struct ArclengthTable {
    ts: Vec<f64>,
    cumulative: Vec<f64>,
}

impl ArclengthTable {
    /// Tabulates `int_0^t w(gamma(s)) |gamma'(s)| ds` on `n` intervals.
    pub fn weighted(curve: &BoundaryCurve, n: usize, weight: impl Fn(&Point2<f64>) -> f64) -> Self {
        let ts: Vec<f64> = (0..=n).map(|i| TAU * i as f64 / n as f64).collect();
        let integrand: Vec<f64> = ts.iter().map(|&t| weight(&curve.point(t)) * curve.speed(t)).collect();
        let mut cumulative = Vec::with_capacity(n + 1);
        cumulative.push(0.0);
        for i in 0..n {
            let last = cumulative[i];
            cumulative.push(last + 0.5 * (integrand[i] + integrand[i + 1]) * (ts[i + 1] - ts[i]));
        }
        Self { ts, cumulative }
    }

    pub fn total(&self) -> f64 {
        *self.cumulative.last().expect("non-empty table")
    }

    /// Parameter at which the tabulated integral reaches `s` (linear inverse).
    pub fn parameter_at(&self, s: f64) -> f64 {
        let s = s.clamp(0.0, self.total());
        let i = match self.cumulative.binary_search_by(|v| v.total_cmp(&s)) {
            Ok(i) => return self.ts[i],
            Err(i) => i.clamp(1, self.ts.len() - 1),
        };
        let (s0, s1) = (self.cumulative[i - 1], self.cumulative[i]);
        let frac = if s1 > s0 { (s - s0) / (s1 - s0) } else { 0.0 };
        self.ts[i - 1] + frac * (self.ts[i] - self.ts[i - 1])
    }
}

struct CorrugatedStadium {
    half_length: f64,
    amplitude: f64,
    waves: usize,
}

impl CorrugatedStadium {
    fn width(&self, x: f64) -> f64 {
        1.0 + self.amplitude * (self.waves as f64 * PI * x / self.half_length).cos()
    }

    /// Dense counterclockwise polyline: bottom edge, right cap, top edge, left cap.
    fn polyline(&self, per_unit: usize) -> Vec<Point2<f64>> {
        let l = self.half_length;
        let mut pts = Vec::new();
        let nb = (2.0 * l * per_unit as f64).ceil() as usize;
        for i in 0..nb {
            pts.push(Point2::new(-l + 2.0 * l * i as f64 / nb as f64, 0.0));
        }
        let cap = |pts: &mut Vec<Point2<f64>>, x: f64, w: f64, start: f64| {
            let r = 0.5 * w;
            let nc = (PI * r * per_unit as f64).ceil().max(16.0) as usize;
            for i in 0..nc {
                let a = start + PI * i as f64 / nc as f64;
                pts.push(Point2::new(x + r * a.cos(), r + r * a.sin()));
            }
        };
        cap(&mut pts, l, self.width(l), -0.5 * PI);
        for i in 0..nb {
            let x = l - 2.0 * l * i as f64 / nb as f64;
            pts.push(Point2::new(x, self.width(x)));
        }
        cap(&mut pts, -l, self.width(-l), 0.5 * PI);
        pts
    }

    /// `n` points equally spaced in arclength around the closed curve.
    fn resample(&self, n: usize) -> Vec<Point2<f64>> {
        let dense = self.polyline(4000);
        let m = dense.len();
        let mut cumulative = Vec::with_capacity(m + 1);
        cumulative.push(0.0);
        for i in 0..m {
            let d = (dense[(i + 1) % m] - dense[i]).norm();
            cumulative.push(cumulative[i] + d);
        }
        let total = cumulative[m];
        let mut out = Vec::with_capacity(n);
        let mut seg = 0;
        for k in 0..n {
            let s = total * k as f64 / n as f64;
            while cumulative[seg + 1] < s {
                seg += 1;
            }
            let frac = (s - cumulative[seg]) / (cumulative[seg + 1] - cumulative[seg]);
            let a = dense[seg];
            let b = dense[(seg + 1) % m];
            out.push(a + (b - a) * frac);
        }
        out
    }
}

/// Sigma-smoothed trigonometric projection of equally spaced periodic samples.
fn fourier_project(values: impl Iterator<Item = f64>, degree: usize) -> Vec<Harmonic> {
    let v: Vec<f64> = values.collect();
    let m = v.len() as f64;
    (0..=degree)
        .map(|n| {
            let (mut c, mut s) = (0.0, 0.0);
            for (j, &x) in v.iter().enumerate() {
                let (sn, cs) = (TAU * (n * j) as f64 / m).sin_cos();
                c += x * cs;
                s += x * sn;
            }
            if n == 0 {
                (c / m, 0.0)
            } else {
                // Lanczos sigma factor damps the truncation ripple.
                let x = PI * n as f64 / (degree + 1) as f64;
                let sigma = x.sin() / x;
                (2.0 * sigma * c / m, 2.0 * sigma * s / m)
            }
        })
        .collect()
}

fn orient(a: &Point2<f64>, b: &Point2<f64>, c: &Point2<f64>) -> f64 {
    (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x)
}

fn segments_cross(p1: &Point2<f64>, p2: &Point2<f64>, q1: &Point2<f64>, q2: &Point2<f64>) -> bool {
    let d1 = orient(q1, q2, p1);
    let d2 = orient(q1, q2, p2);
    let d3 = orient(p1, p2, q1);
    let d4 = orient(p1, p2, q2);
    (d1 > 0.0) != (d2 > 0.0) && (d3 > 0.0) != (d4 > 0.0) && d1 != 0.0 && d3 != 0.0
}

/// Closed polyline simplicity test; non-adjacent segments must not cross.
pub(crate) fn polyline_is_simple(pts: &[Point2<f64>]) -> bool {
    let n = pts.len();
    if n < 3 {
        return false;
    }
    // Bucket segments on a uniform grid so the test stays near-linear.
    let (mut lo, mut hi) = (pts[0], pts[0]);
    for p in pts {
        lo = lo.inf(p);
        hi = hi.sup(p);
    }
    let cells = (n as f64).sqrt().ceil() as usize;
    let cw = ((hi.x - lo.x) / cells as f64).max(1e-300);
    let ch = ((hi.y - lo.y) / cells as f64).max(1e-300);
    let cell_of = |p: &Point2<f64>| {
        (
            (((p.x - lo.x) / cw) as usize).min(cells - 1),
            (((p.y - lo.y) / ch) as usize).min(cells - 1),
        )
    };
    let mut grid: Vec<Vec<usize>> = vec![Vec::new(); cells * cells];
    for i in 0..n {
        let (a, b) = (cell_of(&pts[i]), cell_of(&pts[(i + 1) % n]));
        for cx in a.0.min(b.0)..=a.0.max(b.0) {
            for cy in a.1.min(b.1)..=a.1.max(b.1) {
                grid[cy * cells + cx].push(i);
            }
        }
    }
    for bucket in &grid {
        for (k, &i) in bucket.iter().enumerate() {
            for &j in &bucket[k + 1..] {
                let gap = i.abs_diff(j);
                if gap <= 1 || gap == n - 1 {
                    continue;
                }
                if segments_cross(&pts[i], &pts[(i + 1) % n], &pts[j], &pts[(j + 1) % n]) {
                    return false;
                }
            }
        }
    }
    true
}
