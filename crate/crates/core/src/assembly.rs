//! P1 finite-element assembly: stiffness, interior and boundary mass,
//! weighted mass and load vectors, plus the nodal [`Field`] type.

use nalgebra::{Point2, Vector2};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{CsrMatrix, TripletBuilder};
use crate::mesh::Mesh;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FieldError {
    #[error("field has {got} values but the mesh has {expected} nodes")]
    Length { expected: usize, got: usize },
    #[error("non-finite value at node {0}")]
    NonFinite(usize),
    #[error("fields live on different meshes")]
    MeshMismatch,
}

/// Nodal coefficients of a piecewise-linear function on a particular mesh.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    mesh_id: u64,
    values: Vec<f64>,
}

impl Field {
    pub fn new(mesh: &Mesh, values: Vec<f64>) -> Result<Self, FieldError> {
        if values.len() != mesh.n_nodes() {
            return Err(FieldError::Length {
                expected: mesh.n_nodes(),
                got: values.len(),
            });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(FieldError::NonFinite(i));
        }
        Ok(Self {
            mesh_id: mesh.id(),
            values,
        })
    }

    pub fn constant(mesh: &Mesh, c: f64) -> Self {
        Self {
            mesh_id: mesh.id(),
            values: vec![c; mesh.n_nodes()],
        }
    }

    /// Nodal interpolant of `f`.
    pub fn interpolate(mesh: &Mesh, f: impl Fn(&Point2<f64>) -> f64) -> Self {
        Self {
            mesh_id: mesh.id(),
            values: mesh.nodes().iter().map(f).collect(),
        }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            mesh_id: self.mesh_id,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn mesh_id(&self) -> u64 {
        self.mesh_id
    }

    pub fn belongs_to(&self, mesh: &Mesh) -> bool {
        self.mesh_id == mesh.id() && self.values.len() == mesh.n_nodes()
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Index of the largest nodal value (first one on ties).
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, v) in self.values.iter().enumerate() {
            if *v > self.values[best] {
                best = i;
            }
        }
        best
    }

    pub fn check_same_mesh(&self, other: &Field) -> Result<(), FieldError> {
        if self.mesh_id == other.mesh_id && self.values.len() == other.values.len() {
            Ok(())
        } else {
            Err(FieldError::MeshMismatch)
        }
    }
}

/// The shape `g` in `f(u) = lambda * g(u)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Nonlinearity {
    /// `g = 1`.
    Torsion,
    /// `g(t) = e^t`.
    GelfandExp,
    /// `g(t) = (1 + t)^p` with `p > 0`.
    Power { p: f64 },
}

impl Nonlinearity {
    pub fn is_admissible(&self) -> bool {
        match *self {
            Nonlinearity::Power { p } => p > 0.0 && p.is_finite(),
            _ => true,
        }
    }

    pub fn g(&self, t: f64) -> f64 {
        match *self {
            Nonlinearity::Torsion => 1.0,
            Nonlinearity::GelfandExp => t.exp(),
            Nonlinearity::Power { p } => (1.0 + t).powf(p),
        }
    }

    pub fn dg(&self, t: f64) -> f64 {
        match *self {
            Nonlinearity::Torsion => 0.0,
            Nonlinearity::GelfandExp => t.exp(),
            Nonlinearity::Power { p } => p * (1.0 + t).powf(p - 1.0),
        }
    }

    pub fn name(&self) -> String {
        match *self {
            Nonlinearity::Torsion => "torsion".into(),
            Nonlinearity::GelfandExp => "exp".into(),
            Nonlinearity::Power { p } => format!("power({p})"),
        }
    }
}

/// Constant gradients of the three hat functions on triangle `t`.
pub fn shape_gradients(mesh: &Mesh, t: usize) -> [Vector2<f64>; 3] {
    let p = mesh.triangle_points(t);
    let twice_area = 2.0 * mesh.triangle_area(t);
    std::array::from_fn(|i| {
        let (a, b) = (p[(i + 1) % 3], p[(i + 2) % 3]);
        Vector2::new(a.y - b.y, b.x - a.x) / twice_area
    })
}

pub fn stiffness(mesh: &Mesh) -> CsrMatrix {
    let mut b = TripletBuilder::new(mesh.n_nodes());
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let grads = shape_gradients(mesh, t);
        let area = mesh.triangle_area(t);
        for i in 0..3 {
            for j in 0..3 {
                b.add(tri[i], tri[j], area * grads[i].dot(&grads[j]));
            }
        }
    }
    b.build()
}

pub fn interior_mass(mesh: &Mesh) -> CsrMatrix {
    let mut b = TripletBuilder::new(mesh.n_nodes());
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let area = mesh.triangle_area(t);
        for i in 0..3 {
            for j in 0..3 {
                b.add(tri[i], tri[j], area * if i == j { 2.0 } else { 1.0 } / 12.0);
            }
        }
    }
    b.build()
}

/// `int_{dOmega} phi_i phi_j` over the polygonal boundary.
pub fn boundary_mass(mesh: &Mesh) -> CsrMatrix {
    let mut b = TripletBuilder::new(mesh.n_nodes());
    for e in mesh.boundary_edges() {
        let [i, j] = e.nodes;
        let l = e.length;
        b.add(i, i, l / 3.0);
        b.add(j, j, l / 3.0);
        b.add(i, j, l / 6.0);
        b.add(j, i, l / 6.0);
    }
    b.build()
}

/// `int w phi_i phi_j` with `w` piecewise linear, integrated exactly.
pub fn weighted_mass(mesh: &Mesh, w: &Field) -> CsrMatrix {
    let w = w.values();
    let mut b = TripletBuilder::new(mesh.n_nodes());
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let area = mesh.triangle_area(t);
        let wt = tri.map(|i| w[i]);
        let sum: f64 = wt.iter().sum();
        for i in 0..3 {
            for j in 0..3 {
                // int phi_i phi_j phi_k = |T| * {1/10, 1/30, 1/60} by multiplicity.
                let v = if i == j {
                    area * (wt[i] / 10.0 + (sum - wt[i]) / 30.0)
                } else {
                    let k = 3 - i - j;
                    area * ((wt[i] + wt[j]) / 30.0 + wt[k] / 60.0)
                };
                b.add(tri[i], tri[j], v);
            }
        }
    }
    b.build()
}

/// `int s phi_i` with `s` piecewise linear (same quadrature as the mass matrix).
pub fn load(mesh: &Mesh, s: &Field) -> Vec<f64> {
    load_values(mesh, s.values())
}

pub(crate) fn load_values(mesh: &Mesh, s: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; mesh.n_nodes()];
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let area = mesh.triangle_area(t);
        let st = tri.map(|i| s[i]);
        let sum: f64 = st.iter().sum();
        for i in 0..3 {
            out[tri[i]] += area * (st[i] + sum) / 12.0;
        }
    }
    out
}

/// `K + beta B`.
pub fn robin_operator(mesh: &Mesh, beta: f64) -> CsrMatrix {
    stiffness(mesh).combine(1.0, &boundary_mass(mesh), beta)
}
