//! Critical points of discrete solutions: gradient recovery, location by
//! local quadratic fits, classification, index sums and boundary winding.

use std::collections::BTreeMap;
use std::f64::consts::{PI, TAU};

use nalgebra::{DMatrix, DVector, Point2, Vector2};
use serde::Serialize;
use thiserror::Error;

use crate::assembly::{shape_gradients, Field, FieldError};
use crate::geometry::BoundaryCurve;
use crate::mesh::{refine_near, Mesh, MeshError};
use crate::solvers::SolveError;

/// Relative degeneracy threshold on `|det H|` against `((|l1| + |l2|) / 2)^2`.
pub const TOL_DEG: f64 = 1e-3;
/// Largest tolerated rounding residue of the winding number.
pub const WINDING_RESIDUE_MAX: f64 = 0.2;
/// A single step of the boundary loop turning the gradient by more than this
/// means the loop under-resolves the field.
pub const WINDING_STEP_MAX: f64 = 0.8 * PI;
pub const MAX_ADAPTIVE_PASSES: usize = 3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CritError {
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error("winding number is ill-conditioned (residue {residue:.3}, largest step {max_step:.3} rad); refine the mesh")]
    IllConditionedWinding { residue: f64, max_step: f64 },
    #[error("recovered gradient vanishes at boundary-layer node {node}")]
    VanishingBoundaryGradient { node: usize },
    #[error("critical-point census did not stabilize after {passes} adaptive passes")]
    UnresolvedCensus { passes: usize },
}

/// Area-weighted average of the elementwise constant P1 gradients.
pub fn recover_gradient(mesh: &Mesh, u: &Field) -> Result<Vec<Vector2<f64>>, FieldError> {
    if !u.belongs_to(mesh) {
        return Err(FieldError::MeshMismatch);
    }
    let vals = u.values();
    let mut grad = vec![Vector2::zeros(); mesh.n_nodes()];
    let mut weight = vec![0.0; mesh.n_nodes()];
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let area = mesh.triangle_area(t);
        // Shape gradients sum to zero; offsetting by one vertex value makes
        // constants map to an exactly zero gradient.
        let v0 = vals[tri[0]];
        let g = shape_gradients(mesh, t)
            .iter()
            .zip(tri)
            .fold(Vector2::zeros(), |acc, (d, &i)| acc + d * (vals[i] - v0));
        for &i in tri {
            grad[i] += g * area;
            weight[i] += area;
        }
    }
    for (g, w) in grad.iter_mut().zip(&weight) {
        *g /= *w;
    }
    Ok(grad)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    Max,
    Min,
    Saddle,
    Degenerate,
}

/// Kind and Poincare index from a symmetric Hessian.
pub fn classify(hessian: &[[f64; 2]; 2]) -> (Kind, i32) {
    let [[a, b], [_, d]] = *hessian;
    let mean = 0.5 * (a + d);
    let rad = (0.25 * (a - d) * (a - d) + b * b).sqrt();
    let (l1, l2) = (mean - rad, mean + rad);
    let det = l1 * l2;
    let scale = 0.5 * (l1.abs() + l2.abs());
    if !(det.abs() >= TOL_DEG * scale * scale) || scale == 0.0 {
        (Kind::Degenerate, 0)
    } else if det < 0.0 {
        (Kind::Saddle, -1)
    } else if mean < 0.0 {
        (Kind::Max, 1)
    } else {
        (Kind::Min, 1)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriticalPoint {
    pub position: [f64; 2],
    pub value: f64,
    /// Recovered-gradient magnitude interpolated at the polished position.
    pub grad_residual: f64,
    pub hessian: [[f64; 2]; 2],
    pub kind: Kind,
    pub index: i32,
}

struct QuadFit {
    origin: Point2<f64>,
    scale: f64,
    c: [f64; 6],
}

impl QuadFit {
    fn value(&self, p: &Point2<f64>) -> f64 {
        let (x, y) = ((p.x - self.origin.x) / self.scale, (p.y - self.origin.y) / self.scale);
        let c = &self.c;
        c[0] + c[1] * x + c[2] * y + c[3] * x * x + c[4] * x * y + c[5] * y * y
    }

    fn hessian(&self) -> [[f64; 2]; 2] {
        let s2 = self.scale * self.scale;
        [
            [2.0 * self.c[3] / s2, self.c[4] / s2],
            [self.c[4] / s2, 2.0 * self.c[5] / s2],
        ]
    }

    /// Newton step from the fit origin to the stationary point.
    fn stationary(&self) -> Option<Point2<f64>> {
        let c = &self.c;
        let det = 4.0 * c[3] * c[5] - c[4] * c[4];
        let scale = 2.0 * (c[3].abs() + c[5].abs()) + c[4].abs();
        if det.abs() <= 1e-14 * scale * scale || scale == 0.0 {
            return None;
        }
        let x = (-c[1] * 2.0 * c[5] + c[2] * c[4]) / det;
        let y = (-2.0 * c[3] * c[2] + c[4] * c[1]) / det;
        Some(self.origin + Vector2::new(x, y) * self.scale)
    }
}

fn patch(mesh: &Mesh, seed: usize, rings: usize) -> Vec<usize> {
    let mut seen = vec![seed];
    let mut frontier = vec![seed];
    for _ in 0..rings {
        let mut next = Vec::new();
        for &i in &frontier {
            for &j in mesh.neighbors(i) {
                if !seen.contains(&j) {
                    seen.push(j);
                    next.push(j);
                }
            }
        }
        frontier = next;
    }
    seen
}

fn fit_quadratic(mesh: &Mesh, vals: &[f64], nodes: &[usize], origin: Point2<f64>) -> Option<QuadFit> {
    if nodes.len() < 6 {
        return None;
    }
    let scale = nodes
        .iter()
        .map(|&i| (mesh.node(i) - origin).norm())
        .fold(0.0, f64::max);
    if scale == 0.0 {
        return None;
    }
    let a = DMatrix::from_fn(nodes.len(), 6, |r, k| {
        let d = (mesh.node(nodes[r]) - origin) / scale;
        match k {
            0 => 1.0,
            1 => d.x,
            2 => d.y,
            3 => d.x * d.x,
            4 => d.x * d.y,
            _ => d.y * d.y,
        }
    });
    let b = DVector::from_iterator(nodes.len(), nodes.iter().map(|&i| vals[i]));
    let sol = a.svd(true, true).solve(&b, 1e-12).ok()?;
    Some(QuadFit {
        origin,
        scale,
        c: [sol[0], sol[1], sol[2], sol[3], sol[4], sol[5]],
    })
}

/// Greedy walk over the node graph towards `p`.
fn nearest_node(mesh: &Mesh, start: usize, p: &Point2<f64>) -> usize {
    let mut cur = start;
    loop {
        let best = mesh
            .neighbors(cur)
            .iter()
            .copied()
            .min_by(|&a, &b| (mesh.node(a) - p).norm().total_cmp(&(mesh.node(b) - p).norm()))
            .unwrap_or(cur);
        if (mesh.node(best) - p).norm() < (mesh.node(cur) - p).norm() {
            cur = best;
        } else {
            return cur;
        }
    }
}

fn interpolate_gradient(mesh: &Mesh, grad: &[Vector2<f64>], near: usize, p: &Point2<f64>) -> Vector2<f64> {
    for &t in mesh.node_triangles(near) {
        let bary = mesh.barycentric(t, p);
        if bary.iter().all(|&l| l >= -1e-12) {
            let tri = mesh.triangles()[t];
            return (0..3).fold(Vector2::zeros(), |acc, k| acc + grad[tri[k]] * bary[k]);
        }
    }
    grad[near]
}

const POLISH_STEPS: usize = 5;

/// Finds and classifies the critical points of `u`.
pub fn locate_critical_points(mesh: &Mesh, u: &Field) -> Result<Vec<CriticalPoint>, FieldError> {
    let grad = recover_gradient(mesh, u)?;
    let vals = u.values();
    let h = mesh.h();
    let mut found: Vec<CriticalPoint> = Vec::new();
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let straddles = |k: usize| {
            let (lo, hi) = tri
                .iter()
                .map(|&i| grad[i][k])
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), g| (lo.min(g), hi.max(g)));
            lo <= 0.0 && hi >= 0.0
        };
        if !(straddles(0) && straddles(1)) {
            continue;
        }
        let pts = mesh.triangle_points(t);
        let centroid = Point2::from((pts[0].coords + pts[1].coords + pts[2].coords) / 3.0);
        let mut p = centroid;
        let mut near = tri[0];
        let mut fit = None;
        for _ in 0..POLISH_STEPS {
            near = nearest_node(mesh, near, &p);
            let f = match fit_quadratic(mesh, vals, &patch(mesh, near, 2), p) {
                Some(f) => f,
                None => break,
            };
            let next = f.stationary();
            fit = Some(f);
            match next {
                Some(q) => {
                    let step = (q - p).norm();
                    p = q;
                    if step <= 1e-9 * h || (p - centroid).norm() > 2.0 * h {
                        break;
                    }
                }
                None => break,
            }
        }
        let Some(fit) = fit else { continue };
        if (p - centroid).norm() > 2.0 * h || !mesh.contains(&p) {
            continue;
        }
        let hessian = fit.hessian();
        let (kind, index) = classify(&hessian);
        near = nearest_node(mesh, near, &p);
        found.push(CriticalPoint {
            position: [p.x, p.y],
            value: fit.value(&p),
            grad_residual: interpolate_gradient(mesh, &grad, near, &p).norm(),
            hessian,
            kind,
            index,
        });
    }
    found.sort_by(|a, b| a.grad_residual.total_cmp(&b.grad_residual));
    let mut kept: Vec<CriticalPoint> = Vec::new();
    for cp in found {
        let close = kept.iter().any(|k| {
            let d = Vector2::new(k.position[0] - cp.position[0], k.position[1] - cp.position[1]);
            d.norm() < 2.0 * h
        });
        if !close {
            kept.push(cp);
        }
    }
    kept.sort_by(|a, b| a.position[0].total_cmp(&b.position[0]).then(a.position[1].total_cmp(&b.position[1])));
    Ok(kept)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Winding {
    pub winding: i32,
    pub residue: f64,
    pub max_step: f64,
}

/// Winding number of the recovered gradient along the loop of nodes one
/// layer inside the boundary.
pub fn boundary_winding(mesh: &Mesh, u: &Field) -> Result<Winding, CritError> {
    let grad = recover_gradient(mesh, u)?;
    let walk = mesh.inner_layer_loop();
    let peak = grad.iter().map(|g| g.norm()).fold(0.0, f64::max);
    if let Some(&node) = walk.iter().find(|&&i| !(grad[i].norm() > 1e-12 * peak)) {
        return Err(CritError::VanishingBoundaryGradient { node });
    }
    let angles: Vec<f64> = walk.iter().map(|&i| grad[i].y.atan2(grad[i].x)).collect();
    let mut total = 0.0;
    let mut max_step: f64 = 0.0;
    for k in 0..angles.len() {
        let d = (angles[(k + 1) % angles.len()] - angles[k] + PI).rem_euclid(TAU) - PI;
        max_step = max_step.max(d.abs());
        total += d;
    }
    let turns = total / TAU;
    let winding = turns.round();
    let residue = turns - winding;
    if residue.abs() > WINDING_RESIDUE_MAX || max_step > WINDING_STEP_MAX {
        return Err(CritError::IllConditionedWinding { residue, max_step });
    }
    Ok(Winding {
        winding: winding as i32,
        residue,
        max_step,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HopfReport {
    pub min_u: f64,
    /// Largest outward normal derivative over boundary nodes.
    pub max_normal_derivative: f64,
    pub ok: bool,
}

/// Checks `u > 0` and `d_nu u < 0` on the boundary. With Robin data the
/// normal derivative is `-beta u`; with `beta = None` (Dirichlet) it is taken
/// from the recovered gradient and only interior nodes enter `min_u`.
pub fn hopf_sign_check(mesh: &Mesh, u: &Field, beta: Option<f64>) -> Result<HopfReport, FieldError> {
    if !u.belongs_to(mesh) {
        return Err(FieldError::MeshMismatch);
    }
    let vals = u.values();
    let nb = mesh.n_boundary();
    let (min_u, max_dn) = match beta {
        Some(beta) => {
            let min_u = vals.iter().copied().fold(f64::INFINITY, f64::min);
            let max_dn = vals[..nb].iter().map(|v| -beta * v).fold(f64::NEG_INFINITY, f64::max);
            (min_u, max_dn)
        }
        None => {
            let min_u = vals[nb..].iter().copied().fold(f64::INFINITY, f64::min);
            let grad = recover_gradient(mesh, u)?;
            let mut normal = vec![Vector2::zeros(); nb];
            for e in mesh.boundary_edges() {
                for &i in &e.nodes {
                    normal[i] += e.normal * e.length;
                }
            }
            let max_dn = (0..nb)
                .map(|i| grad[i].dot(&normal[i].normalize()))
                .fold(f64::NEG_INFINITY, f64::max);
            (min_u, max_dn)
        }
    };
    Ok(HopfReport {
        min_u,
        max_normal_derivative: max_dn,
        ok: min_u > 0.0 && max_dn < 0.0,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CritCensus {
    pub points: Vec<CriticalPoint>,
    pub index_sum: i32,
    pub boundary_winding: i32,
    pub winding_residue: f64,
    pub hopf_ok: bool,
    pub degenerate: bool,
    pub counts: BTreeMap<Kind, usize>,
}

impl CritCensus {
    pub fn count(&self, kind: Kind) -> usize {
        self.counts.get(&kind).copied().unwrap_or(0)
    }

    /// The (kind, count) multiset, used to compare censuses across meshes.
    pub fn signature(&self) -> Vec<(Kind, usize)> {
        self.counts.iter().map(|(k, c)| (*k, *c)).collect()
    }

    /// A single nondegenerate maximum with unit index sum and winding.
    pub fn is_unique_max(&self) -> bool {
        self.points.len() == 1
            && self.points[0].kind == Kind::Max
            && !self.degenerate
            && self.index_sum == 1
            && self.boundary_winding == 1
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("census serializes")
    }
}

pub fn census(mesh: &Mesh, u: &Field, beta: Option<f64>) -> Result<CritCensus, CritError> {
    let points = locate_critical_points(mesh, u)?;
    let winding = boundary_winding(mesh, u)?;
    let hopf = hopf_sign_check(mesh, u, beta)?;
    let mut counts = BTreeMap::new();
    for p in &points {
        *counts.entry(p.kind).or_insert(0) += 1;
    }
    Ok(CritCensus {
        index_sum: points.iter().map(|p| p.index).sum(),
        degenerate: points.iter().any(|p| p.kind == Kind::Degenerate),
        boundary_winding: winding.winding,
        winding_residue: winding.residue,
        hopf_ok: hopf.ok,
        counts,
        points,
    })
}

/// Census with adaptive refinement: the mesh is refined to `h/2` around the
/// current points and the problem re-solved until two consecutive passes
/// agree on the (kind, count) multiset.
pub fn adaptive_census<F>(
    mesh: &Mesh,
    curve: &BoundaryCurve,
    u: &Field,
    beta: Option<f64>,
    mut solve: F,
) -> Result<(CritCensus, Mesh, Field), CritError>
where
    F: FnMut(&Mesh) -> Result<Field, SolveError>,
{
    let mut current = census(mesh, u, beta)?;
    for _ in 0..MAX_ADAPTIVE_PASSES {
        let centers: Vec<Point2<f64>> = current.points.iter().map(|p| Point2::new(p.position[0], p.position[1])).collect();
        let fine = refine_near(mesh, &centers, 4.0 * mesh.h(), curve)?;
        let v = solve(&fine)?;
        let next = census(&fine, &v, beta)?;
        if next.signature() == current.signature() {
            return Ok((next, fine, v));
        }
        current = next;
    }
    Err(CritError::UnresolvedCensus {
        passes: MAX_ADAPTIVE_PASSES,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{make_domain, DomainSpec};
    use crate::mesh::triangulate;
    use crate::solvers::{solve_torsion, SolverOptions};

    fn disk(h: f64) -> (BoundaryCurve, Mesh) {
        let c = make_domain(&DomainSpec::disk(1.0)).unwrap();
        let m = triangulate(&c, h).unwrap();
        (c, m)
    }

    #[test]
    fn gradient_of_linear_and_constant() {
        let (_, mesh) = disk(0.1);
        let g = recover_gradient(&mesh, &Field::interpolate(&mesh, |p| p.x)).unwrap();
        assert!(g.iter().all(|v| (v - Vector2::new(1.0, 0.0)).norm() < 1e-12));
        let g0 = recover_gradient(&mesh, &Field::constant(&mesh, 3.0)).unwrap();
        assert!(g0.iter().all(|v| *v == Vector2::zeros()));
    }

    #[test]
    fn classify_model_hessians() {
        assert_eq!(classify(&[[-2.0, 0.0], [0.0, -2.0]]), (Kind::Max, 1));
        assert_eq!(classify(&[[2.0, 0.0], [0.0, -2.0]]), (Kind::Saddle, -1));
        assert_eq!(classify(&[[2.0, 0.0], [0.0, 2.0]]), (Kind::Min, 1));
        assert_eq!(classify(&[[2.0, 0.0], [0.0, 0.0]]), (Kind::Degenerate, 0));
        assert_eq!(classify(&[[0.0, 0.0], [0.0, 0.0]]), (Kind::Degenerate, 0));
    }

    #[test]
    fn disk_torsion_has_one_max_at_origin() {
        let (_, mesh) = disk(0.05);
        let u = solve_torsion(&mesh, 1.0, &SolverOptions::default()).unwrap();
        let c = census(&mesh, &u, Some(1.0)).unwrap();
        assert!(c.is_unique_max(), "{c:?}");
        let p = &c.points[0];
        assert!(Vector2::new(p.position[0], p.position[1]).norm() < 2.0 * mesh.h());
        assert!((p.hessian[0][0] + 0.5).abs() < 0.05 && (p.hessian[1][1] + 0.5).abs() < 0.05);
        assert!(c.hopf_ok);
    }

    #[test]
    fn saddle_of_synthetic_field() {
        let (_, mesh) = disk(0.08);
        let u = Field::interpolate(&mesh, |p| (p.x - 0.1).powi(2) - (p.y + 0.2).powi(2));
        let pts = locate_critical_points(&mesh, &u).unwrap();
        assert_eq!(pts.len(), 1);
        assert_eq!(pts[0].kind, Kind::Saddle);
        assert!((pts[0].position[0] - 0.1).abs() < 1e-9 && (pts[0].position[1] + 0.2).abs() < 1e-9);
    }

    #[test]
    fn hopf_flags_negative_node() {
        let (_, mesh) = disk(0.1);
        let u = solve_torsion(&mesh, 1.0, &SolverOptions::default()).unwrap();
        let r = hopf_sign_check(&mesh, &u, Some(1.0)).unwrap();
        assert!(r.ok && (r.max_normal_derivative + 0.5).abs() < 5e-3);
        let mut v = u.values().to_vec();
        v[mesh.n_nodes() - 1] = -1.0;
        let bad = Field::new(&mesh, v).unwrap();
        assert!(!hopf_sign_check(&mesh, &bad, Some(1.0)).unwrap().ok);
    }

    #[test]
    fn winding_of_radial_field() {
        let (_, mesh) = disk(0.1);
        let inward = Field::interpolate(&mesh, |p| 1.0 - p.coords.norm_squared());
        assert_eq!(boundary_winding(&mesh, &inward).unwrap().winding, 1);
        let tilted = Field::interpolate(&mesh, |p| p.x);
        assert_eq!(boundary_winding(&mesh, &tilted).unwrap().winding, 0);
    }
}
