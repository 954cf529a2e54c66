//! Global continuous `P^k` spaces over a mesh and functions living in them.

use std::sync::Arc;

use crate::basis::{num_local_dofs, HierarchicalBasis, ModeKind};
use crate::error::{Error, Result};
use crate::mesh::{local_edge, Mesh, Point};
use crate::poly::Poly2;

/// Affine map `x = origin + B xi` of an element onto the reference triangle.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AffineMap {
    pub origin: Point,
    pub b: [[f64; 2]; 2],
    pub b_inv: [[f64; 2]; 2],
    pub det: f64,
}

impl AffineMap {
    pub fn new(p: [Point; 3]) -> Self {
        let b = [[p[1][0] - p[0][0], p[2][0] - p[0][0]], [p[1][1] - p[0][1], p[2][1] - p[0][1]]];
        let det = b[0][0] * b[1][1] - b[0][1] * b[1][0];
        let b_inv = [[b[1][1] / det, -b[0][1] / det], [-b[1][0] / det, b[0][0] / det]];
        Self { origin: p[0], b, b_inv, det }
    }

    pub fn to_physical(&self, xi: [f64; 2]) -> Point {
        [
            self.origin[0] + self.b[0][0] * xi[0] + self.b[0][1] * xi[1],
            self.origin[1] + self.b[1][0] * xi[0] + self.b[1][1] * xi[1],
        ]
    }

    pub fn to_reference(&self, x: Point) -> [f64; 2] {
        let d = [x[0] - self.origin[0], x[1] - self.origin[1]];
        [self.b_inv[0][0] * d[0] + self.b_inv[0][1] * d[1], self.b_inv[1][0] * d[0] + self.b_inv[1][1] * d[1]]
    }

    /// Physical gradient from a reference gradient: `B^{-T} g`.
    pub fn grad_to_physical(&self, g: [f64; 2]) -> [f64; 2] {
        [self.b_inv[0][0] * g[0] + self.b_inv[1][0] * g[1], self.b_inv[0][1] * g[0] + self.b_inv[1][1] * g[1]]
    }

    /// Reference direction corresponding to a physical direction: `B^{-1} v`.
    pub fn direction_to_reference(&self, v: [f64; 2]) -> [f64; 2] {
        [self.b_inv[0][0] * v[0] + self.b_inv[0][1] * v[1], self.b_inv[1][0] * v[0] + self.b_inv[1][1] * v[1]]
    }
}

/// `P^k` space on a mesh: dof numbering and per-element orientation signs.
///
/// Dofs are numbered vertices first, then edge modes facet by facet, then
/// interior modes element by element.
#[derive(Debug)]
pub struct FeSpace {
    mesh: Arc<Mesh>,
    basis: HierarchicalBasis,
    ndof: usize,
    local: usize,
    elem_dofs: Vec<usize>,
    elem_signs: Vec<f64>,
    maps: Vec<AffineMap>,
}

impl FeSpace {
    pub fn new(mesh: Arc<Mesh>, order: usize) -> Result<Arc<Self>> {
        let basis = HierarchicalBasis::new(order)?;
        let nv = mesh.num_vertices();
        let nf = mesh.num_facets();
        let per_edge = order - 1;
        let per_interior = (order - 1) * order.saturating_sub(2) / 2;
        let ndof = nv + nf * per_edge + mesh.num_elements() * per_interior;
        let local = num_local_dofs(order);
        let mut elem_dofs = Vec::with_capacity(local * mesh.num_elements());
        let mut elem_signs = Vec::with_capacity(local * mesh.num_elements());
        for (e, tri) in mesh.elements().iter().enumerate() {
            let facets = mesh.element_facets(e);
            for mode in basis.modes() {
                let (dof, sign) = match *mode {
                    ModeKind::Vertex(v) => (tri[v], 1.0),
                    ModeKind::Edge { edge, degree } => {
                        let (a, b) = local_edge(edge);
                        let (a, b) = (a.min(b), a.max(b));
                        let flipped = tri[a] > tri[b];
                        let sign = if flipped && degree % 2 == 1 { -1.0 } else { 1.0 };
                        (nv + facets[edge] * per_edge + (degree - 2), sign)
                    }
                    ModeKind::Interior { degree, index } => {
                        let offset = (3..degree).map(|d| d - 2).sum::<usize>() + index;
                        (nv + nf * per_edge + e * per_interior + offset, 1.0)
                    }
                };
                elem_dofs.push(dof);
                elem_signs.push(sign);
            }
        }
        let maps = (0..mesh.num_elements()).map(|e| AffineMap::new(mesh.element_coords(e))).collect();
        Ok(Arc::new(Self { mesh, basis, ndof, local, elem_dofs, elem_signs, maps }))
    }

    pub fn mesh(&self) -> &Arc<Mesh> {
        &self.mesh
    }

    pub fn basis(&self) -> &HierarchicalBasis {
        &self.basis
    }

    pub fn order(&self) -> usize {
        self.basis.order()
    }

    pub fn ndof(&self) -> usize {
        self.ndof
    }

    pub fn local_dofs(&self) -> usize {
        self.local
    }

    pub fn element_dofs(&self, e: usize) -> &[usize] {
        &self.elem_dofs[e * self.local..(e + 1) * self.local]
    }

    pub fn element_signs(&self, e: usize) -> &[f64] {
        &self.elem_signs[e * self.local..(e + 1) * self.local]
    }

    pub fn map(&self, e: usize) -> &AffineMap {
        &self.maps[e]
    }

    /// Polynomial degree of the mode behind global dof `dof`.
    pub fn dof_degree(&self, dof: usize) -> usize {
        let nv = self.mesh.num_vertices();
        let k = self.order();
        let per_edge = k - 1;
        let edge_end = nv + self.mesh.num_facets() * per_edge;
        if dof < nv {
            1
        } else if dof < edge_end {
            2 + (dof - nv) % per_edge
        } else {
            let per_interior = (k - 1) * (k - 2) / 2;
            let mut r = (dof - edge_end) % per_interior;
            let mut d = 3;
            while r >= d - 2 {
                r -= d - 2;
                d += 1;
            }
            d
        }
    }

    /// Element-local polynomial `sum_i c_i s_i phi_i` for global coefficients.
    pub fn element_poly(&self, coeffs: &[f64], e: usize) -> Poly2 {
        let mut p = Poly2::zero();
        for (i, (&dof, &s)) in self.element_dofs(e).iter().zip(self.element_signs(e)).enumerate() {
            let c = coeffs[dof] * s;
            if c != 0.0 {
                p.axpy(c, self.basis.poly(i));
            }
        }
        p
    }

    /// Local hierarchical coefficients (global orientation) from values at the
    /// degree-k principal lattice nodes of element `e`.
    pub fn local_interpolate(&self, e: usize, samples: &[f64]) -> Result<Vec<f64>> {
        let mut c = self.basis.interpolate_reference(samples)?;
        for (ci, s) in c.iter_mut().zip(self.element_signs(e)) {
            *ci *= s;
        }
        Ok(c)
    }

    /// Physical lattice nodes of element `e`.
    pub fn lattice_nodes(&self, e: usize) -> Vec<Point> {
        let m = self.map(e);
        self.basis.lattice().iter().map(|&xi| m.to_physical(xi)).collect()
    }
}

/// Scalar function in a `P^k` space.
#[derive(Clone, Debug)]
pub struct ScalarFEFunction {
    space: Arc<FeSpace>,
    coeffs: Vec<f64>,
}

impl ScalarFEFunction {
    pub fn zero(space: Arc<FeSpace>) -> Self {
        let n = space.ndof();
        Self { space, coeffs: vec![0.0; n] }
    }

    pub fn from_coefficients(space: Arc<FeSpace>, coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.len() != space.ndof() {
            return Err(Error::InvalidArgument(format!(
                "coefficient vector has length {}, space has {} dofs",
                coeffs.len(),
                space.ndof()
            )));
        }
        Ok(Self { space, coeffs })
    }

    /// Elementwise lattice interpolation of `f`.
    pub fn interpolate<F: Fn(Point) -> f64>(space: Arc<FeSpace>, f: F) -> Result<Self> {
        let mut coeffs = vec![0.0; space.ndof()];
        for e in 0..space.mesh().num_elements() {
            let samples: Vec<f64> = space.lattice_nodes(e).into_iter().map(&f).collect();
            let local = space.local_interpolate(e, &samples)?;
            for (&dof, c) in space.element_dofs(e).iter().zip(local) {
                coeffs[dof] = c;
            }
        }
        Ok(Self { space, coeffs })
    }

    pub fn space(&self) -> &Arc<FeSpace> {
        &self.space
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coefficients_mut(&mut self) -> &mut [f64] {
        &mut self.coeffs
    }

    pub fn element_poly(&self, e: usize) -> Poly2 {
        self.space.element_poly(&self.coeffs, e)
    }

    pub fn eval(&self, e: usize, xi: [f64; 2]) -> f64 {
        self.element_poly(e).eval(xi)
    }

    /// Physical gradient.
    pub fn eval_gradient(&self, e: usize, xi: [f64; 2]) -> [f64; 2] {
        let (_, g) = self.element_poly(e).eval_with_grad(xi);
        self.space.map(e).grad_to_physical(g)
    }

    /// All `m`-th order physical partial derivatives,
    /// `[d^m/dx^m, d^m/dx^(m-1)dy, ..., d^m/dy^m]`.
    pub fn eval_derivatives(&self, e: usize, xi: [f64; 2], m: usize) -> Result<Vec<f64>> {
        if m > self.space.order() {
            return Err(Error::InvalidArgument(format!(
                "derivative order {m} exceeds polynomial order {}",
                self.space.order()
            )));
        }
        let p = self.element_poly(e);
        let map = self.space.map(e);
        let dx = |q: &Poly2| q.directional([map.b_inv[0][0], map.b_inv[1][0]]);
        let dy = |q: &Poly2| q.directional([map.b_inv[0][1], map.b_inv[1][1]]);
        Ok((0..=m)
            .map(|j| {
                let mut q = p;
                for _ in 0..(m - j) {
                    q = dx(&q);
                }
                for _ in 0..j {
                    q = dy(&q);
                }
                q.eval(xi)
            })
            .collect())
    }
}

/// Two-component vector function; both components share one space.
#[derive(Clone, Debug)]
pub struct VectorFEFunction {
    pub x: ScalarFEFunction,
    pub y: ScalarFEFunction,
}

impl VectorFEFunction {
    pub fn zero(space: Arc<FeSpace>) -> Self {
        Self { x: ScalarFEFunction::zero(space.clone()), y: ScalarFEFunction::zero(space) }
    }

    pub fn space(&self) -> &Arc<FeSpace> {
        self.x.space()
    }

    pub fn eval(&self, e: usize, xi: [f64; 2]) -> [f64; 2] {
        [self.x.eval(e, xi), self.y.eval(e, xi)]
    }

    /// Physical Jacobian `[[dvx/dx, dvx/dy], [dvy/dx, dvy/dy]]`.
    pub fn eval_jacobian(&self, e: usize, xi: [f64; 2]) -> [[f64; 2]; 2] {
        [self.x.eval_gradient(e, xi), self.y.eval_gradient(e, xi)]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::BoundingBox;

    fn space(nx: usize, k: usize) -> Arc<FeSpace> {
        let mesh = Mesh::criss_cross(nx, nx, BoundingBox::new([-1.0, -1.0], [1.0, 1.0])).unwrap();
        FeSpace::new(Arc::new(mesh), k).unwrap()
    }

    #[test]
    fn dof_count() {
        let m = Mesh::criss_cross(2, 2, BoundingBox::new([0.0, 0.0], [1.0, 1.0])).unwrap();
        let (nv, nf, ne) = (m.num_vertices(), m.num_facets(), m.num_elements());
        let m = Arc::new(m);
        assert_eq!(FeSpace::new(m.clone(), 1).unwrap().ndof(), nv);
        assert_eq!(FeSpace::new(m.clone(), 3).unwrap().ndof(), nv + 2 * nf + ne);
        assert_eq!(FeSpace::new(m, 4).unwrap().ndof(), nv + 3 * nf + 3 * ne);
    }

    #[test]
    fn dof_degrees() {
        let s = space(2, 4);
        for e in 0..s.mesh().num_elements() {
            for (i, &d) in s.element_dofs(e).iter().enumerate() {
                assert_eq!(s.dof_degree(d), s.basis().mode_degree(i));
            }
        }
    }

    #[test]
    fn linear_function_reproduced_with_exact_gradient() {
        for k in 1..=4 {
            let s = space(3, k);
            let f = ScalarFEFunction::interpolate(s.clone(), |p| 2.0 * p[0] - p[1]).unwrap();
            for e in [0, 5, 17] {
                let g = f.eval_gradient(e, [0.2, 0.3]);
                assert!((g[0] - 2.0).abs() < 1e-12 && (g[1] + 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn quadratic_reproduced_and_continuous() {
        let s = space(3, 2);
        let f = ScalarFEFunction::interpolate(s.clone(), |p| p[0] * p[1]).unwrap();
        let mesh = s.mesh();
        for e in 0..mesh.num_elements() {
            for xi in [[0.1, 0.1], [0.5, 0.25], [0.3, 0.6]] {
                let x = s.map(e).to_physical(xi);
                assert!((f.eval(e, xi) - x[0] * x[1]).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn derivative_order_above_k_is_rejected() {
        let s = space(1, 2);
        let f = ScalarFEFunction::zero(s);
        assert!(matches!(f.eval_derivatives(0, [0.2, 0.2], 3), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn second_derivatives_of_quadratic() {
        let s = space(2, 3);
        let f = ScalarFEFunction::interpolate(s, |p| 3.0 * p[0] * p[0] - 2.0 * p[0] * p[1] + p[1] * p[1]).unwrap();
        let d = f.eval_derivatives(3, [0.25, 0.25], 2).unwrap();
        assert!((d[0] - 6.0).abs() < 1e-11);
        assert!((d[1] + 2.0).abs() < 1e-11);
        assert!((d[2] - 2.0).abs() < 1e-11);
    }

    #[test]
    fn nested_interpolation_has_no_high_modes() {
        // a quadratic interpolated in P^4 has zero coefficients on modes of degree > 2
        let s = space(2, 4);
        let f = ScalarFEFunction::interpolate(s.clone(), |p| p[0] * p[0] - 0.5 * p[1] + 0.25 * p[0] * p[1]).unwrap();
        for (dof, c) in f.coefficients().iter().enumerate() {
            if s.dof_degree(dof) > 2 {
                assert!(c.abs() < 1e-12, "dof {dof} degree {} coeff {c}", s.dof_degree(dof));
            }
        }
    }
}
