//! Built-in test problems: level set, exact solution and data.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::mesh::{BoundingBox, Mesh, Point};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Geometry {
    /// Annulus `1/4 < r < 3/4` with a radial solution vanishing on both circles.
    Ring,
    /// Ellipse `3x^2 + y^2 < 1` with `u = cos y`.
    Ellipse,
    /// Disc of radius 0.7 with `u = sin(pi x) cos(pi y)`.
    Circle,
}

impl Geometry {
    pub const ALL: [Geometry; 3] = [Geometry::Ring, Geometry::Ellipse, Geometry::Circle];

    pub fn name(self) -> &'static str {
        match self {
            Geometry::Ring => "ring",
            Geometry::Ellipse => "ellipse",
            Geometry::Circle => "circle",
        }
    }
}

impl fmt::Display for Geometry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Geometry {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        let s = s.strip_prefix("custom:").unwrap_or(&s);
        Geometry::ALL
            .into_iter()
            .find(|g| g.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown geometry '{s}' (expected ring|ellipse|circle)")))
    }
}

/// A geometry together with a rigid translation of all its data.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Problem {
    pub geometry: Geometry,
    pub shift: Point,
}

const CIRCLE_RADIUS: f64 = 0.7;

impl Problem {
    pub fn new(geometry: Geometry) -> Self {
        Self { geometry, shift: [0.0, 0.0] }
    }

    pub fn shifted(geometry: Geometry, shift: Point) -> Self {
        Self { geometry, shift }
    }

    fn local(&self, x: Point) -> Point {
        [x[0] - self.shift[0], x[1] - self.shift[1]]
    }

    pub fn phi(&self, x: Point) -> f64 {
        let [x, y] = self.local(x);
        match self.geometry {
            Geometry::Ring => {
                let r = x.hypot(y);
                (r - 0.75) * (r - 0.25)
            }
            Geometry::Ellipse => (3.0 * x * x + y * y).sqrt() - 1.0,
            Geometry::Circle => x * x + y * y - CIRCLE_RADIUS * CIRCLE_RADIUS,
        }
    }

    pub fn grad_phi(&self, x: Point) -> [f64; 2] {
        let [x, y] = self.local(x);
        match self.geometry {
            Geometry::Ring => {
                let r = x.hypot(y);
                let s = (2.0 * r - 1.0) / r;
                [s * x, s * y]
            }
            Geometry::Ellipse => {
                let n = (3.0 * x * x + y * y).sqrt();
                [3.0 * x / n, y / n]
            }
            Geometry::Circle => [2.0 * x, 2.0 * y],
        }
    }

    /// Exact solution, also used as its own extension outside the domain.
    pub fn u(&self, x: Point) -> f64 {
        let [x, y] = self.local(x);
        match self.geometry {
            Geometry::Ring => {
                let r = x.hypot(y);
                20.0 * (0.75 - r) * (r - 0.25)
            }
            Geometry::Ellipse => y.cos(),
            Geometry::Circle => (PI * x).sin() * (PI * y).cos(),
        }
    }

    pub fn grad_u(&self, x: Point) -> [f64; 2] {
        let [x, y] = self.local(x);
        match self.geometry {
            Geometry::Ring => {
                let r = x.hypot(y);
                let s = 20.0 * (1.0 - 2.0 * r) / r;
                [s * x, s * y]
            }
            Geometry::Ellipse => [0.0, -y.sin()],
            Geometry::Circle => [PI * (PI * x).cos() * (PI * y).cos(), -PI * (PI * x).sin() * (PI * y).sin()],
        }
    }

    /// `f = -Laplace u`.
    pub fn f(&self, x: Point) -> f64 {
        let [x, y] = self.local(x);
        match self.geometry {
            Geometry::Ring => 80.0 - 20.0 / x.hypot(y),
            Geometry::Ellipse => y.cos(),
            Geometry::Circle => 2.0 * PI * PI * (PI * x).sin() * (PI * y).cos(),
        }
    }

    /// Dirichlet data on `Gamma_h`: zero for the ring, the extension of the
    /// exact solution otherwise.
    pub fn u_d(&self, x: Point) -> f64 {
        match self.geometry {
            Geometry::Ring => 0.0,
            _ => self.u(x),
        }
    }

    pub fn bbox(&self) -> BoundingBox {
        match self.geometry {
            Geometry::Ring | Geometry::Circle => BoundingBox::new([-1.0, -1.0], [1.0, 1.0]),
            Geometry::Ellipse => BoundingBox::new([-1.0, -1.1], [1.0, 1.1]),
        }
    }

    /// Coarsest mesh of the refinement chain.
    pub fn base_mesh(&self) -> Result<Mesh> {
        match self.geometry {
            Geometry::Ring | Geometry::Circle => Mesh::criss_cross(8, 8, self.bbox()),
            Geometry::Ellipse => {
                let mut mesh = Mesh::criss_cross(10, 11, self.bbox())?;
                for _ in 0..3 {
                    let marked: Vec<usize> = (0..mesh.num_elements())
                        .filter(|&e| {
                            let p = mesh.element_coords(e);
                            let c = [(p[0][0] + p[1][0] + p[2][0]) / 3.0, (p[0][1] + p[1][1] + p[2][1]) / 3.0];
                            p.iter().chain(std::iter::once(&c)).any(|&v| self.phi(v) < 0.0 && v[1].abs() > 0.8)
                        })
                        .collect();
                    mesh = mesh.refine_marked(&marked)?;
                }
                Ok(mesh)
            }
        }
    }

    /// Meshes for levels `0..levels`, each a uniform refinement of the
    /// previous one.
    pub fn mesh_chain(&self, levels: usize) -> Result<Vec<Arc<Mesh>>> {
        let mut chain = Vec::with_capacity(levels);
        let mut mesh = self.base_mesh()?;
        for l in 0..levels {
            if l > 0 {
                mesh = mesh.refine_uniform();
            }
            chain.push(Arc::new(mesh.clone()));
        }
        Ok(chain)
    }
}
