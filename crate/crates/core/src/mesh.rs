//! Conforming P1 triangulations of the region bounded by a [`BoundaryCurve`].
//!
//! Boundary nodes come first (indices `0..n_boundary`) in counterclockwise loop
//! order, so boundary edge `k` joins node `k` to node `(k + 1) % n_boundary`.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::fmt::Write as _;

use nalgebra::{Point2, Vector2};
use spade::{ConstrainedDelaunayTriangulation, Triangulation};
use thiserror::Error;

use crate::geometry::{geometric_measures, ArclengthTable, BoundaryCurve};

pub const MIN_ANGLE_DEGREES: f64 = 15.0;

const SMOOTHING_PASSES: usize = 3;
/// Lattice points closer than this fraction of their pitch to the boundary are dropped.
const BOUNDARY_CLEARANCE: f64 = 0.55;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MeshError {
    #[error("element size h = {h} must satisfy 0 < h < perimeter/16 = {limit}")]
    InvalidSize { h: f64, limit: f64 },
    #[error("minimum angle {min_angle:.2} deg is below {MIN_ANGLE_DEGREES} deg; try a smaller h")]
    Quality { min_angle: f64 },
    #[error("refinement center ({x}, {y}) lies outside the domain")]
    CenterOutside { x: f64, y: f64 },
    #[error("triangulation failed: {0}")]
    Triangulation(String),
    #[error("mesh invariant violated: {0}")]
    Invariant(String),
    #[error("malformed mesh dump: {0}")]
    Parse(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryEdge {
    pub nodes: [usize; 2],
    /// Curve parameters of the two end nodes; the second may exceed `2pi`
    /// on the edge that closes the loop.
    pub params: [f64; 2],
    pub length: f64,
    pub normal: Vector2<f64>,
}

impl BoundaryEdge {
    pub fn midpoint_param(&self) -> f64 {
        0.5 * (self.params[0] + self.params[1])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    nodes: Vec<Point2<f64>>,
    triangles: Vec<[usize; 3]>,
    boundary_edges: Vec<BoundaryEdge>,
    n_boundary: usize,
    h: f64,
    neighbors: Vec<Vec<usize>>,
    node_triangles: Vec<Vec<usize>>,
    id: u64,
}

/// Disks in which the target element size is halved.
#[derive(Debug, Clone, Default)]
struct Sizing {
    h: f64,
    centers: Vec<Point2<f64>>,
    radius: f64,
}

impl Sizing {
    fn distance_to_centers(&self, p: &Point2<f64>) -> f64 {
        self.centers
            .iter()
            .map(|c| (p - c).norm())
            .fold(f64::INFINITY, f64::min)
    }

    fn boundary_size(&self, p: &Point2<f64>) -> f64 {
        if self.distance_to_centers(p) <= self.radius + self.h {
            0.5 * self.h
        } else {
            self.h
        }
    }
}

pub fn triangulate(curve: &BoundaryCurve, h: f64) -> Result<Mesh, MeshError> {
    build(
        curve,
        Sizing {
            h,
            ..Default::default()
        },
    )
}

/// Re-triangulates with element size `h/2` inside the disks of `radius` about
/// `centers` and the mesh's own `h` elsewhere.
pub fn refine_near(
    mesh: &Mesh,
    centers: &[Point2<f64>],
    radius: f64,
    curve: &BoundaryCurve,
) -> Result<Mesh, MeshError> {
    if let Some(c) = centers.iter().find(|c| !mesh.contains(c)) {
        return Err(MeshError::CenterOutside { x: c.x, y: c.y });
    }
    build(
        curve,
        Sizing {
            h: mesh.h,
            centers: centers.to_vec(),
            radius,
        },
    )
}

fn build(curve: &BoundaryCurve, sizing: Sizing) -> Result<Mesh, MeshError> {
    let h = sizing.h;
    let perimeter = geometric_measures(curve).perimeter;
    if !(h > 0.0 && h < perimeter / 16.0) {
        return Err(MeshError::InvalidSize {
            h,
            limit: perimeter / 16.0,
        });
    }

    // Boundary nodes equidistributed in the size-weighted arclength.
    let table_len = (64.0 * perimeter / h).ceil().max(8192.0) as usize;
    let table = ArclengthTable::weighted(curve, table_len, |p| 1.0 / sizing.boundary_size(p));
    let n_boundary = (table.total().ceil() as usize).max(16);
    let params: Vec<f64> = (0..n_boundary)
        .map(|k| table.parameter_at(table.total() * k as f64 / n_boundary as f64))
        .collect();
    let polygon: Vec<Point2<f64>> = params.iter().map(|&t| curve.point(t)).collect();
    let locator = PolygonLocator::new(&polygon);

    let mut points = polygon.clone();
    let fine = 0.5 * h;
    let refined = !sizing.centers.is_empty();
    for (pitch, keep) in [(h, false), (fine, true)] {
        if keep && !refined {
            continue;
        }
        for p in hex_lattice(&locator.lo, &locator.hi, pitch) {
            let d = sizing.distance_to_centers(&p);
            let wanted = if keep {
                d <= sizing.radius
            } else {
                !refined || d > sizing.radius + 0.5 * h
            };
            if wanted && locator.contains(&p) && locator.distance(&p) >= BOUNDARY_CLEARANCE * pitch {
                points.push(p);
            }
        }
    }

    let mut triangles = delaunay_inside(&points, n_boundary, &locator)?;
    smooth(&mut points, &triangles, n_boundary);
    triangles = delaunay_inside(&points, n_boundary, &locator)?;

    let mesh = Mesh::from_parts(points, triangles, &params, h)?;
    let min_angle = mesh.min_angle_degrees();
    if min_angle < MIN_ANGLE_DEGREES {
        return Err(MeshError::Quality { min_angle });
    }
    Ok(mesh)
}

fn hex_lattice(lo: &Point2<f64>, hi: &Point2<f64>, pitch: f64) -> Vec<Point2<f64>> {
    let dy = pitch * 3f64.sqrt() / 2.0;
    let rows = ((hi.y - lo.y) / dy).ceil() as usize + 1;
    let cols = ((hi.x - lo.x) / pitch).ceil() as usize + 2;
    let mut out = Vec::with_capacity(rows * cols);
    for r in 0..rows {
        let shift = if r % 2 == 1 { 0.5 * pitch } else { 0.0 };
        for c in 0..cols {
            out.push(Point2::new(lo.x + shift + c as f64 * pitch, lo.y + r as f64 * dy));
        }
    }
    out
}

/// Constrained Delaunay triangulation keeping only faces inside the polygon.
fn delaunay_inside(
    points: &[Point2<f64>],
    n_boundary: usize,
    locator: &PolygonLocator,
) -> Result<Vec<[usize; 3]>, MeshError> {
    let vertices: Vec<spade::Point2<f64>> = points.iter().map(|p| spade::Point2::new(p.x, p.y)).collect();
    let edges: Vec<[usize; 2]> = (0..n_boundary).map(|i| [i, (i + 1) % n_boundary]).collect();
    let cdt = ConstrainedDelaunayTriangulation::<spade::Point2<f64>>::bulk_load_cdt(vertices, edges)
        .map_err(|e| MeshError::Triangulation(format!("{e:?}")))?;
    if cdt.num_vertices() != points.len() {
        return Err(MeshError::Triangulation("duplicate points in the node set".into()));
    }
    let mut triangles = Vec::new();
    for face in cdt.inner_faces() {
        let tri = face.vertices().map(|v| v.fix().index());
        let centroid = Point2::from((points[tri[0]].coords + points[tri[1]].coords + points[tri[2]].coords) / 3.0);
        if locator.contains(&centroid) {
            triangles.push(tri);
        }
    }
    Ok(triangles)
}

fn signed_area(a: &Point2<f64>, b: &Point2<f64>, c: &Point2<f64>) -> f64 {
    0.5 * ((b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x))
}

/// Gauss-Seidel Laplacian smoothing of interior nodes; a move is rejected if
/// it would invert or flatten an incident triangle.
fn smooth(points: &mut [Point2<f64>], triangles: &[[usize; 3]], n_boundary: usize) {
    let (neighbors, node_triangles) = adjacency(points.len(), triangles);
    for _ in 0..SMOOTHING_PASSES {
        for i in n_boundary..points.len() {
            if neighbors[i].is_empty() {
                continue;
            }
            let mean = neighbors[i].iter().map(|&j| points[j].coords).sum::<Vector2<f64>>() / neighbors[i].len() as f64;
            let old = points[i];
            let old_min = node_triangles[i]
                .iter()
                .map(|&t| {
                    let [a, b, c] = triangles[t];
                    signed_area(&points[a], &points[b], &points[c])
                })
                .fold(f64::INFINITY, f64::min);
            points[i] = Point2::from(mean);
            let ok = node_triangles[i].iter().all(|&t| {
                let [a, b, c] = triangles[t];
                signed_area(&points[a], &points[b], &points[c]) > 0.2 * old_min
            });
            if !ok {
                points[i] = old;
            }
        }
    }
}

fn adjacency(n: usize, triangles: &[[usize; 3]]) -> (Vec<Vec<usize>>, Vec<Vec<usize>>) {
    let mut neighbors = vec![Vec::new(); n];
    let mut node_triangles = vec![Vec::new(); n];
    for (t, tri) in triangles.iter().enumerate() {
        for k in 0..3 {
            let (a, b) = (tri[k], tri[(k + 1) % 3]);
            neighbors[a].push(b);
            neighbors[b].push(a);
            node_triangles[a].push(t);
        }
    }
    for list in &mut neighbors {
        list.sort_unstable();
        list.dedup();
    }
    (neighbors, node_triangles)
}

/// Point-in-polygon and distance queries accelerated by a uniform bucket grid.
struct PolygonLocator {
    polygon: Vec<Point2<f64>>,
    lo: Point2<f64>,
    hi: Point2<f64>,
    cell: f64,
    nx: usize,
    ny: usize,
    buckets: Vec<Vec<usize>>,
}

impl PolygonLocator {
    fn new(polygon: &[Point2<f64>]) -> Self {
        let (mut lo, mut hi) = (polygon[0], polygon[0]);
        for p in polygon {
            lo = lo.inf(p);
            hi = hi.sup(p);
        }
        let n = polygon.len();
        let mean_edge = (0..n).map(|i| (polygon[(i + 1) % n] - polygon[i]).norm()).sum::<f64>() / n as f64;
        let cell = 2.0 * mean_edge;
        let nx = ((hi.x - lo.x) / cell).ceil() as usize + 1;
        let ny = ((hi.y - lo.y) / cell).ceil() as usize + 1;
        let mut buckets = vec![Vec::new(); nx * ny];
        for i in 0..n {
            let (a, b) = (polygon[i], polygon[(i + 1) % n]);
            let (ax, ay) = ((a.x.min(b.x) - lo.x) / cell, (a.y.min(b.y) - lo.y) / cell);
            let (bx, by) = ((a.x.max(b.x) - lo.x) / cell, (a.y.max(b.y) - lo.y) / cell);
            for cy in ay as usize..=(by as usize).min(ny - 1) {
                for cx in ax as usize..=(bx as usize).min(nx - 1) {
                    buckets[cy * nx + cx].push(i);
                }
            }
        }
        Self {
            polygon: polygon.to_vec(),
            lo,
            hi,
            cell,
            nx,
            ny,
            buckets,
        }
    }

    /// Even-odd crossing test.
    fn contains(&self, p: &Point2<f64>) -> bool {
        if p.x < self.lo.x || p.x > self.hi.x || p.y < self.lo.y || p.y > self.hi.y {
            return false;
        }
        point_in_polygon(&self.polygon, p)
    }

    fn distance(&self, p: &Point2<f64>) -> f64 {
        let cx = ((p.x - self.lo.x) / self.cell).floor() as isize;
        let cy = ((p.y - self.lo.y) / self.cell).floor() as isize;
        let n = self.polygon.len();
        let mut best = f64::INFINITY;
        let mut ring = 0isize;
        loop {
            for y in cy - ring..=cy + ring {
                for x in cx - ring..=cx + ring {
                    let on_ring = (y - cy).abs() == ring || (x - cx).abs() == ring;
                    if !on_ring || x < 0 || y < 0 || x as usize >= self.nx || y as usize >= self.ny {
                        continue;
                    }
                    for &i in &self.buckets[y as usize * self.nx + x as usize] {
                        best = best.min(point_segment_distance(p, &self.polygon[i], &self.polygon[(i + 1) % n]));
                    }
                }
            }
            // Any segment in ring r+1 or beyond is at least r * cell away.
            if best <= ring as f64 * self.cell || ring as usize > self.nx.max(self.ny) {
                return best;
            }
            ring += 1;
        }
    }
}

pub(crate) fn point_in_polygon(polygon: &[Point2<f64>], p: &Point2<f64>) -> bool {
    let n = polygon.len();
    let mut inside = false;
    let mut j = n - 1;
    for i in 0..n {
        let (a, b) = (&polygon[i], &polygon[j]);
        if (a.y > p.y) != (b.y > p.y) && p.x < (b.x - a.x) * (p.y - a.y) / (b.y - a.y) + a.x {
            inside = !inside;
        }
        j = i;
    }
    inside
}

fn point_segment_distance(p: &Point2<f64>, a: &Point2<f64>, b: &Point2<f64>) -> f64 {
    let ab = b - a;
    let len2 = ab.norm_squared();
    let s = if len2 > 0.0 { ((p - a).dot(&ab) / len2).clamp(0.0, 1.0) } else { 0.0 };
    (p - (a + ab * s)).norm()
}

impl Mesh {
    pub fn from_parts(
        nodes: Vec<Point2<f64>>,
        triangles: Vec<[usize; 3]>,
        boundary_params: &[f64],
        h: f64,
    ) -> Result<Self, MeshError> {
        let n_boundary = boundary_params.len();
        let boundary_edges = (0..n_boundary)
            .map(|i| {
                let j = (i + 1) % n_boundary;
                let (a, b) = (nodes[i], nodes[j]);
                let d = b - a;
                let length = d.norm();
                let mut tj = boundary_params[j];
                if tj <= boundary_params[i] {
                    tj += 2.0 * PI;
                }
                BoundaryEdge {
                    nodes: [i, j],
                    params: [boundary_params[i], tj],
                    length,
                    normal: Vector2::new(d.y, -d.x) / length,
                }
            })
            .collect();
        let (neighbors, node_triangles) = adjacency(nodes.len(), &triangles);
        let mut mesh = Self {
            nodes,
            triangles,
            boundary_edges,
            n_boundary,
            h,
            neighbors,
            node_triangles,
            id: 0,
        };
        mesh.id = mesh.fingerprint();
        mesh.validate()?;
        Ok(mesh)
    }

    fn fingerprint(&self) -> u64 {
        // FNV-1a over the raw coordinates and connectivity.
        let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
        let mut eat = |bytes: &[u8]| {
            for b in bytes {
                hash ^= u64::from(*b);
                hash = hash.wrapping_mul(0x0100_0000_01b3);
            }
        };
        for p in &self.nodes {
            eat(&p.x.to_bits().to_le_bytes());
            eat(&p.y.to_bits().to_le_bytes());
        }
        for t in &self.triangles {
            for &i in t {
                eat(&(i as u64).to_le_bytes());
            }
        }
        hash
    }

    /// Checks orientation, edge manifoldness, the single boundary loop and
    /// that no node is orphaned.
    pub fn validate(&self) -> Result<(), MeshError> {
        let bad = |m: String| Err(MeshError::Invariant(m));
        for (t, tri) in self.triangles.iter().enumerate() {
            if tri.iter().any(|&i| i >= self.nodes.len()) {
                return bad(format!("triangle {t} references a missing node"));
            }
            if self.triangle_area(t) <= 0.0 {
                return bad(format!("triangle {t} has non-positive area"));
            }
        }
        let mut edge_count: HashMap<(usize, usize), u32> = HashMap::new();
        for tri in &self.triangles {
            for k in 0..3 {
                let (a, b) = (tri[k], tri[(k + 1) % 3]);
                *edge_count.entry((a.min(b), a.max(b))).or_default() += 1;
            }
        }
        let nb = self.n_boundary;
        let mut boundary_seen = 0;
        for (&(a, b), &count) in &edge_count {
            let is_loop_edge = a < nb && b < nb && (b == a + 1 || (a == 0 && b == nb - 1));
            match (count, is_loop_edge) {
                (1, true) => boundary_seen += 1,
                (2, false) => {}
                _ => return bad(format!("edge ({a}, {b}) is shared by {count} triangles")),
            }
        }
        if boundary_seen != nb {
            return bad(format!("boundary loop has {boundary_seen} of {nb} edges"));
        }
        if let Some(i) = self.node_triangles.iter().position(Vec::is_empty) {
            return bad(format!("node {i} belongs to no triangle"));
        }
        Ok(())
    }

    pub fn nodes(&self) -> &[Point2<f64>] {
        &self.nodes
    }

    pub fn node(&self, i: usize) -> Point2<f64> {
        self.nodes[i]
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn boundary_edges(&self) -> &[BoundaryEdge] {
        &self.boundary_edges
    }

    pub fn n_boundary(&self) -> usize {
        self.n_boundary
    }

    pub fn is_boundary(&self, i: usize) -> bool {
        i < self.n_boundary
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    /// Content hash; two meshes with the same id carry the same discretization.
    pub fn id(&self) -> u64 {
        self.id
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbors[i]
    }

    pub fn node_triangles(&self, i: usize) -> &[usize] {
        &self.node_triangles[i]
    }

    pub fn boundary_polygon(&self) -> &[Point2<f64>] {
        &self.nodes[..self.n_boundary]
    }

    pub fn triangle_points(&self, t: usize) -> [Point2<f64>; 3] {
        self.triangles[t].map(|i| self.nodes[i])
    }

    pub fn triangle_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangle_points(t);
        signed_area(&a, &b, &c)
    }

    pub fn area(&self) -> f64 {
        (0..self.triangles.len()).map(|t| self.triangle_area(t)).sum()
    }

    pub fn boundary_length(&self) -> f64 {
        self.boundary_edges.iter().map(|e| e.length).sum()
    }

    pub fn n_edges(&self) -> usize {
        self.neighbors.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn min_angle_degrees(&self) -> f64 {
        let mut min = f64::INFINITY;
        for t in 0..self.triangles.len() {
            let p = self.triangle_points(t);
            for k in 0..3 {
                let u = p[(k + 1) % 3] - p[k];
                let v = p[(k + 2) % 3] - p[k];
                min = min.min(u.angle(&v));
            }
        }
        min.to_degrees()
    }

    /// Whether `p` lies inside the boundary polygon.
    pub fn contains(&self, p: &Point2<f64>) -> bool {
        point_in_polygon(self.boundary_polygon(), p)
    }

    /// Triangle containing `p` with its barycentric coordinates.
    pub fn locate(&self, p: &Point2<f64>) -> Option<(usize, [f64; 3])> {
        let eps = -1e-12;
        (0..self.triangles.len()).find_map(|t| {
            let b = self.barycentric(t, p);
            (b.iter().all(|&x| x >= eps)).then_some((t, b))
        })
    }

    pub fn barycentric(&self, t: usize, p: &Point2<f64>) -> [f64; 3] {
        let [a, b, c] = self.triangle_points(t);
        let area = signed_area(&a, &b, &c);
        [
            signed_area(p, &b, &c) / area,
            signed_area(&a, p, &c) / area,
            signed_area(&a, &b, p) / area,
        ]
    }

    /// Closed walk through the nodes one layer inside the boundary: for each
    /// boundary node in loop order, its interior neighbours swept from the
    /// previous boundary node to the next.
    pub fn inner_layer_loop(&self) -> Vec<usize> {
        let nb = self.n_boundary;
        let mut walk: Vec<usize> = Vec::new();
        for b in 0..nb {
            let prev = self.nodes[(b + nb - 1) % nb];
            let base = self.nodes[b];
            let start = (prev - base).y.atan2((prev - base).x);
            let mut ring: Vec<(f64, usize)> = self.neighbors[b]
                .iter()
                .filter(|&&j| !self.is_boundary(j))
                .map(|&j| {
                    let d = self.nodes[j] - base;
                    // Clockwise sweep from the previous boundary node.
                    let a = (start - d.y.atan2(d.x)).rem_euclid(2.0 * PI);
                    (a, j)
                })
                .collect();
            ring.sort_by(|x, y| x.0.total_cmp(&y.0));
            for (_, j) in ring {
                if walk.last() != Some(&j) {
                    walk.push(j);
                }
            }
        }
        while walk.len() > 1 && walk.first() == walk.last() {
            walk.pop();
        }
        walk
    }

    /// Text dump with `NODES`, `TRIANGLES` and `BEDGES` sections.
    pub fn to_dump(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "NODES {}", self.nodes.len());
        for (i, p) in self.nodes.iter().enumerate() {
            let _ = writeln!(out, "{i} {} {}", p.x, p.y);
        }
        let _ = writeln!(out, "TRIANGLES {}", self.triangles.len());
        for t in &self.triangles {
            let _ = writeln!(out, "{} {} {}", t[0], t[1], t[2]);
        }
        let _ = writeln!(out, "BEDGES {}", self.boundary_edges.len());
        for e in &self.boundary_edges {
            let _ = writeln!(out, "{} {} {} {}", e.nodes[0], e.nodes[1], e.params[0], e.params[1]);
        }
        let _ = writeln!(out, "H {}", self.h);
        out
    }

    pub fn from_dump(text: &str) -> Result<Self, MeshError> {
        let err = |m: String| MeshError::Parse(m);
        let mut nodes = Vec::new();
        let mut triangles = Vec::new();
        let mut params = Vec::new();
        let mut h = f64::NAN;
        let mut section = "";
        for line in text.lines().map(str::trim).filter(|l| !l.is_empty()) {
            let f: Vec<&str> = line.split_whitespace().collect();
            if matches!(f[0], "NODES" | "TRIANGLES" | "BEDGES") {
                section = f[0];
                continue;
            }
            let num = |s: &str| s.parse::<f64>().map_err(|e| err(format!("{line:?}: {e}")));
            let idx = |s: &str| s.parse::<usize>().map_err(|e| err(format!("{line:?}: {e}")));
            match (f[0], section, f.len()) {
                ("H", _, 2) => h = num(f[1])?,
                (_, "NODES", 3) => nodes.push(Point2::new(num(f[1])?, num(f[2])?)),
                (_, "TRIANGLES", 3) => triangles.push([idx(f[0])?, idx(f[1])?, idx(f[2])?]),
                (_, "BEDGES", 4) => params.push(num(f[2])?),
                _ => return Err(err(format!("unexpected line {line:?}"))),
            }
        }
        if params.is_empty() || !h.is_finite() {
            return Err(err("missing BEDGES or H section".into()));
        }
        Self::from_parts(nodes, triangles, &params, h)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{make_domain, DomainSpec};

    fn disk(r: f64) -> BoundaryCurve {
        make_domain(&DomainSpec::disk(r)).unwrap()
    }

    #[test]
    fn coarse_disk_node_count() {
        let mesh = triangulate(&disk(1.0), 0.2).unwrap();
        assert!((70..=130).contains(&mesh.n_nodes()), "{} nodes", mesh.n_nodes());
        assert!(mesh.min_angle_degrees() >= MIN_ANGLE_DEGREES);
        mesh.validate().unwrap();
    }

    #[test]
    fn fine_disk_area() {
        let mesh = triangulate(&disk(1.0), 0.05).unwrap();
        assert!((mesh.area() - PI).abs() / PI < 5e-3);
    }

    #[test]
    fn ellipse_euler_characteristic() {
        let curve = make_domain(&DomainSpec::ellipse(2.0, 1.0)).unwrap();
        let mesh = triangulate(&curve, 0.1).unwrap();
        let chi = mesh.n_nodes() as i64 - mesh.n_edges() as i64 + mesh.triangles().len() as i64;
        assert_eq!(chi, 1);
    }

    #[test]
    fn boundary_spacing_respects_h() {
        let h = 0.07;
        let mesh = triangulate(&disk(1.0), h).unwrap();
        assert!(mesh.boundary_edges().iter().all(|e| e.length <= h));
        for e in mesh.boundary_edges() {
            let mid = Point2::from((mesh.node(e.nodes[0]).coords + mesh.node(e.nodes[1]).coords) * 0.5);
            // Outward normal of a CCW edge points away from the center.
            assert!(e.normal.dot(&mid.coords) > 0.0);
        }
    }

    #[test]
    fn rejects_bad_h() {
        assert!(matches!(triangulate(&disk(1.0), 0.0), Err(MeshError::InvalidSize { .. })));
        assert!(matches!(triangulate(&disk(1.0), 0.5), Err(MeshError::InvalidSize { .. })));
    }

    #[test]
    fn deterministic() {
        let a = triangulate(&disk(1.0), 0.1).unwrap();
        let b = triangulate(&disk(1.0), 0.1).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.id(), b.id());
    }

    #[test]
    fn refine_with_no_centers_matches_fresh() {
        let curve = disk(1.0);
        let mesh = triangulate(&curve, 0.1).unwrap();
        let same = refine_near(&mesh, &[], 0.3, &curve).unwrap();
        assert_eq!(mesh, same);
    }

    #[test]
    fn refine_increases_local_density() {
        let curve = disk(1.0);
        let mesh = triangulate(&curve, 0.1).unwrap();
        let center = Point2::origin();
        let fine = refine_near(&mesh, &[center], 0.4, &curve).unwrap();
        fine.validate().unwrap();
        let count = |m: &Mesh| m.nodes().iter().filter(|p| (*p - center).norm() < 0.3).count() as f64;
        let ratio = count(&fine) / count(&mesh);
        assert!((3.0..5.0).contains(&ratio), "density ratio {ratio}");
    }

    #[test]
    fn refine_everywhere_is_uniform_half() {
        let curve = disk(1.0);
        let mesh = triangulate(&curve, 0.1).unwrap();
        let fine = refine_near(&mesh, &[Point2::origin()], 5.0, &curve).unwrap();
        let half = triangulate(&curve, 0.05).unwrap();
        let ratio = fine.n_nodes() as f64 / half.n_nodes() as f64;
        assert!((ratio - 1.0).abs() < 0.02, "{ratio}");
    }

    #[test]
    fn refine_rejects_outside_center() {
        let curve = disk(1.0);
        let mesh = triangulate(&curve, 0.1).unwrap();
        assert!(matches!(
            refine_near(&mesh, &[Point2::new(2.0, 0.0)], 0.2, &curve),
            Err(MeshError::CenterOutside { .. })
        ));
    }

    #[test]
    fn inner_layer_is_interior_and_closed() {
        let mesh = triangulate(&disk(1.0), 0.1).unwrap();
        let walk = mesh.inner_layer_loop();
        assert!(walk.len() > 20);
        assert!(walk.iter().all(|&i| !mesh.is_boundary(i)));
        for w in walk.windows(2) {
            assert!(mesh.neighbors(w[0]).contains(&w[1]));
        }
    }

    #[test]
    fn dump_round_trip() {
        let mesh = triangulate(&disk(1.0), 0.15).unwrap();
        let back = Mesh::from_dump(&mesh.to_dump()).unwrap();
        assert_eq!(mesh.nodes(), back.nodes());
        assert_eq!(mesh.triangles(), back.triangles());
        assert_eq!(mesh.id(), back.id());
    }
}
