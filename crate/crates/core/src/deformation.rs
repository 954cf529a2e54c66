//! Isoparametric mesh deformation `Theta_h = id + D_h`.
//!
//! On every cut element the pre-image map `x -> x + d(x) G(x)` is sampled at
//! the principal lattice, where `G` is the normalized gradient of the
//! element-local level-set polynomial and `d` the smallest-magnitude root of
//! `E_T phi_h(x + d G) = phi_lin(x)`. The samples are interpolated
//! elementwise, shared coefficients are averaged, and all coefficients not
//! touched by a cut element stay zero.

use rayon::prelude::*;

use crate::cut::CutInfo;
use crate::error::{Error, Result};
use crate::fe::{AffineMap, ScalarFEFunction, VectorFEFunction};
use crate::mesh::Point;
use crate::poly::Poly2;
use crate::roots::smallest_root;

/// Root search bracket as a multiple of the element diameter.
pub const BRACKET: f64 = 0.5;
/// Bracket used on a second attempt.
pub const EXPANDED_BRACKET: f64 = 1.0;
pub const MAX_ITERATIONS: usize = 50;
const SCAN_STEPS: usize = 32;
const MIN_GRADIENT: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PsiSample {
    pub y: Point,
    pub d: f64,
    pub direction: [f64; 2],
    pub residual: f64,
    pub iterations: usize,
}

/// Residual tolerance of the pre-image equation at target value `target`.
pub fn root_tolerance(target: f64) -> f64 {
    1e-12 * (1.0 + target.abs())
}

/// Pre-image search on one element with its level-set polynomial `poly`
/// (reference coordinates) and target value `target`.
fn psi_local(poly: &Poly2, map: &AffineMap, h: f64, x: Point, target: f64) -> Result<PsiSample> {
    let xi = map.to_reference(x);
    let (v0, g_ref) = poly.eval_with_grad(xi);
    let tol = root_tolerance(target);
    if (v0 - target).abs() <= tol {
        // already on the level line, e.g. at mesh vertices
        return Ok(PsiSample { y: x, d: 0.0, direction: [0.0, 0.0], residual: (v0 - target).abs(), iterations: 0 });
    }
    let g = map.grad_to_physical(g_ref);
    let norm = g[0].hypot(g[1]);
    if norm < MIN_GRADIENT {
        return Err(Error::SingularDirection(format!("|grad phi_h| = {norm:e} at {x:?}")));
    }
    let dir = [g[0] / norm, g[1] / norm];
    let m = map.direction_to_reference(dir);
    let line = |d: f64| {
        let p = [xi[0] + d * m[0], xi[1] + d * m[1]];
        let (v, gr) = poly.eval_with_grad(p);
        (v - target, gr[0] * m[0] + gr[1] * m[1])
    };
    let root = smallest_root(line, BRACKET * h, tol, MAX_ITERATIONS, SCAN_STEPS)
        .or_else(|| smallest_root(line, EXPANDED_BRACKET * h, tol, MAX_ITERATIONS, SCAN_STEPS))
        .ok_or_else(|| {
            Error::GeometryUnresolved(format!(
                "no level-set pre-image within {EXPANDED_BRACKET} h of {x:?}; the mesh is too coarse"
            ))
        })?;
    Ok(PsiSample {
        y: [x[0] + root.x * dir[0], x[1] + root.x * dir[1]],
        d: root.x,
        direction: dir,
        residual: root.residual,
        iterations: root.iterations,
    })
}

/// Pre-image of the physical point `x` in element `e`, searching along the
/// normalized gradient of the element polynomial of `phi_h` for the value
/// of `phi_lin` at `x`.
pub fn psi_point(phi_h: &ScalarFEFunction, phi_lin: &ScalarFEFunction, e: usize, x: Point) -> Result<PsiSample> {
    let map = phi_h.space().map(e);
    let xi = map.to_reference(x);
    let target = phi_lin.eval(e, xi);
    psi_local(&phi_h.element_poly(e), map, phi_h.space().mesh().diameter(e), x, target)
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct DeformationStats {
    pub samples: usize,
    pub total_iterations: usize,
    pub max_iterations: usize,
    pub max_residual: f64,
    /// Largest sampled `|d_h|`.
    pub max_shift: f64,
}

/// Element-local deformation polynomials for repeated evaluation.
#[derive(Clone, Copy, Debug)]
pub struct ElementDeformation {
    map: AffineMap,
    dx: Poly2,
    dy: Poly2,
}

impl ElementDeformation {
    /// Deformed position and physical Jacobian `D Theta_h`.
    pub fn eval(&self, xi: [f64; 2]) -> (Point, [[f64; 2]; 2]) {
        let x = self.map.to_physical(xi);
        let (vx, gx) = self.dx.eval_with_grad(xi);
        let (vy, gy) = self.dy.eval_with_grad(xi);
        let gx = self.map.grad_to_physical(gx);
        let gy = self.map.grad_to_physical(gy);
        ([x[0] + vx, x[1] + vy], [[1.0 + gx[0], gx[1]], [gy[0], 1.0 + gy[1]]])
    }

    /// Components of `Theta_h` on this element as polynomials in the
    /// reference coordinates.
    pub fn position_polys(&self) -> [Poly2; 2] {
        let m = &self.map;
        let comp = |r: usize, d: &Poly2| {
            Poly2::constant(m.origin[r]) + Poly2::xi().scale(m.b[r][0]) + Poly2::eta().scale(m.b[r][1]) + *d
        };
        [comp(0, &self.dx), comp(1, &self.dy)]
    }

    pub fn affine(&self) -> &AffineMap {
        &self.map
    }
}

#[derive(Clone, Debug)]
pub struct Deformation {
    displacement: VectorFEFunction,
    support: Vec<usize>,
    stats: DeformationStats,
}

impl Deformation {
    /// `Theta_h = id`.
    pub fn identity(space: std::sync::Arc<crate::fe::FeSpace>) -> Self {
        Self { displacement: VectorFEFunction::zero(space), support: Vec::new(), stats: DeformationStats::default() }
    }

    /// Build `Theta_h` from the order-k level set `phi_h` and the cut
    /// classification of its linear interpolant.
    pub fn build(phi_h: &ScalarFEFunction, cut: &CutInfo) -> Result<Self> {
        let space = phi_h.space().clone();
        if !std::sync::Arc::ptr_eq(space.mesh(), cut.mesh()) && space.mesh().num_elements() != cut.mesh().num_elements() {
            return Err(Error::InvalidArgument("level set and cut info live on different meshes".into()));
        }
        let basis = space.basis();
        let lattice = basis.lattice();
        type Local = (Vec<f64>, Vec<f64>, DeformationStats);
        let locals: Vec<Local> = cut
            .cut_elements()
            .par_iter()
            .map(|&e| -> Result<Local> {
                let map = space.map(e);
                let poly = phi_h.element_poly(e);
                let h = space.mesh().diameter(e);
                let v = cut.element_values(e);
                let mut sx = Vec::with_capacity(lattice.len());
                let mut sy = Vec::with_capacity(lattice.len());
                let mut stats = DeformationStats::default();
                for (j, &xi) in lattice.iter().enumerate() {
                    let target = v[0] + (v[1] - v[0]) * xi[0] + (v[2] - v[0]) * xi[1];
                    let x = map.to_physical(xi);
                    let s = psi_local(&poly, map, h, x, target)
                        .map_err(|err| err.context(format!("element {e}, lattice node {j}")))?;
                    sx.push(s.y[0] - x[0]);
                    sy.push(s.y[1] - x[1]);
                    stats.samples += 1;
                    stats.total_iterations += s.iterations;
                    stats.max_iterations = stats.max_iterations.max(s.iterations);
                    stats.max_residual = stats.max_residual.max(s.residual);
                    stats.max_shift = stats.max_shift.max(s.d.abs());
                }
                Ok((space.local_interpolate(e, &sx)?, space.local_interpolate(e, &sy)?, stats))
            })
            .collect::<Result<_>>()?;

        let n = space.ndof();
        let mut sum_x = vec![0.0; n];
        let mut sum_y = vec![0.0; n];
        let mut count = vec![0u32; n];
        let mut stats = DeformationStats::default();
        for (&e, (cx, cy, s)) in cut.cut_elements().iter().zip(&locals) {
            for (i, &dof) in space.element_dofs(e).iter().enumerate() {
                sum_x[dof] += cx[i];
                sum_y[dof] += cy[i];
                count[dof] += 1;
            }
            stats.samples += s.samples;
            stats.total_iterations += s.total_iterations;
            stats.max_iterations = stats.max_iterations.max(s.max_iterations);
            stats.max_residual = stats.max_residual.max(s.max_residual);
            stats.max_shift = stats.max_shift.max(s.max_shift);
        }
        for i in 0..n {
            if count[i] > 0 {
                sum_x[i] /= count[i] as f64;
                sum_y[i] /= count[i] as f64;
            }
        }
        let displacement = VectorFEFunction {
            x: ScalarFEFunction::from_coefficients(space.clone(), sum_x)?,
            y: ScalarFEFunction::from_coefficients(space, sum_y)?,
        };
        Ok(Self { displacement, support: cut.cut_elements().to_vec(), stats })
    }

    pub fn displacement(&self) -> &VectorFEFunction {
        &self.displacement
    }

    /// Cut elements on which the pre-image map was sampled.
    pub fn sampled_elements(&self) -> &[usize] {
        &self.support
    }

    pub fn stats(&self) -> &DeformationStats {
        &self.stats
    }

    pub fn is_identity(&self) -> bool {
        self.displacement.x.coefficients().iter().chain(self.displacement.y.coefficients()).all(|&c| c == 0.0)
    }

    /// Dofs whose basis functions are supported on a sampled element.
    pub fn supported_dofs(&self) -> Vec<bool> {
        let space = self.displacement.space();
        let mut flags = vec![false; space.ndof()];
        for &e in &self.support {
            for &d in space.element_dofs(e) {
                flags[d] = true;
            }
        }
        flags
    }

    pub fn element(&self, e: usize) -> ElementDeformation {
        let space = self.displacement.space();
        ElementDeformation {
            map: *space.map(e),
            dx: self.displacement.x.element_poly(e),
            dy: self.displacement.y.element_poly(e),
        }
    }

    /// `Theta_h` at reference point `xi` of element `e`.
    pub fn map(&self, e: usize, xi: [f64; 2]) -> Point {
        self.element(e).eval(xi).0
    }

    /// `D Theta_h` at reference point `xi` of element `e`.
    pub fn jacobian(&self, e: usize, xi: [f64; 2]) -> [[f64; 2]; 2] {
        self.element(e).eval(xi).1
    }

    /// `max |D_h|` sampled on a fine lattice of every element carrying a
    /// nonzero coefficient.
    pub fn max_displacement(&self) -> f64 {
        let space = self.displacement.space();
        let (cx, cy) = (self.displacement.x.coefficients(), self.displacement.y.coefficients());
        let samples = crate::basis::principal_lattice(8);
        let mut max = 0.0f64;
        for e in 0..space.mesh().num_elements() {
            if space.element_dofs(e).iter().all(|&d| cx[d] == 0.0 && cy[d] == 0.0) {
                continue;
            }
            let el = self.element(e);
            for &xi in &samples {
                let (dx, dy) = (el.dx.eval(xi), el.dy.eval(xi));
                max = max.max(dx.hypot(dy));
            }
        }
        max
    }
}

/// Largest `|phi(Theta_h(x))| / |grad phi(Theta_h(x))|` over interface
/// quadrature points `x`: a first-order proxy for `dist(Gamma, Gamma_h)`.
pub fn interface_distance_probe<F, G>(deformation: &Deformation, cut: &CutInfo, phi: F, grad_phi: G, q: usize) -> f64
where
    F: Fn(Point) -> f64 + Sync,
    G: Fn(Point) -> [f64; 2] + Sync,
{
    cut.cut_elements()
        .par_iter()
        .map(|&e| {
            let el = deformation.element(e);
            cut.interface_rule(e, q)
                .iter()
                .map(|p| {
                    let y = el.eval(p.xi).0;
                    let g = grad_phi(y);
                    phi(y).abs() / g[0].hypot(g[1])
                })
                .fold(0.0, f64::max)
        })
        .reduce(|| 0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cut::linearize;
    use crate::fe::FeSpace;
    use crate::mesh::{BoundingBox, Mesh};
    use std::sync::Arc;

    /// Single triangle `(0,0), (1,0), (0,1)` as a one-element mesh.
    fn reference_space(k: usize) -> Arc<FeSpace> {
        // criss-cross element 0 of a 2x2 cell box is (a, b, m); build a
        // bounding box so that element 0 is a right triangle and map
        // reference directly through `psi_local` instead.
        let mesh = Mesh::criss_cross(1, 1, BoundingBox::new([0.0, 0.0], [1.0, 1.0])).unwrap();
        FeSpace::new(Arc::new(mesh), k).unwrap()
    }

    #[test]
    fn parabola_example_has_golden_ratio_root() {
        // phi = y - x^2 on the reference triangle; phi_lin = y - x
        let poly = Poly2::eta() - Poly2::xi() * Poly2::xi();
        let map = AffineMap::new([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]);
        let x = [0.5, 0.5];
        let target = 0.0; // y - x at (1/2, 1/2)
        let h = 2f64.sqrt();
        let s = psi_local(&poly, &map, h, x, target).unwrap();
        let s5 = 5f64.sqrt();
        let expect = [(s5 - 1.0) / 2.0, (3.0 - s5) / 2.0];
        assert!((s.y[0] - expect[0]).abs() < 1e-12 && (s.y[1] - expect[1]).abs() < 1e-12, "{:?}", s.y);
        assert!((s.direction[0] + 1.0 / 2f64.sqrt()).abs() < 1e-15);
        assert!((s.y[1] - s.y[0] * s.y[0]).abs() < 1e-12);

        // independent dense scan of d in [-h, h] for the smallest sign change
        let g = |d: f64| {
            let y = [x[0] - d / 2f64.sqrt(), x[1] + d / 2f64.sqrt()];
            y[1] - y[0] * y[0] - target
        };
        let n = 200_000;
        let mut best = f64::INFINITY;
        for i in 0..n {
            let (a, b) = (-h + 2.0 * h * i as f64 / n as f64, -h + 2.0 * h * (i + 1) as f64 / n as f64);
            if g(a) * g(b) <= 0.0 && a.abs().min(b.abs()) < best.abs() {
                best = if a.abs() < b.abs() { a } else { b };
            }
        }
        assert!((best - s.d).abs() < 2.0 * h / n as f64 * 2.0);
    }

    #[test]
    fn linear_level_set_gives_no_shift() {
        let space = reference_space(3);
        let phi = ScalarFEFunction::interpolate(space.clone(), |p| p[0] + 0.5 * p[1] - 0.6).unwrap();
        let lin = linearize(&phi).unwrap();
        for e in 0..4 {
            for xi in [[0.2, 0.2], [0.6, 0.1], [0.0, 0.0]] {
                let x = space.map(e).to_physical(xi);
                let s = psi_point(&phi, &lin, e, x).unwrap();
                assert_eq!(s.d, 0.0);
                assert_eq!(s.y, x);
            }
        }
        let cut = CutInfo::classify(&lin).unwrap();
        let def = Deformation::build(&phi, &cut).unwrap();
        assert!(def.is_identity());
    }

    #[test]
    fn vertices_are_fixed_points() {
        let space = reference_space(2);
        let phi = ScalarFEFunction::interpolate(space.clone(), |p| p[0] * p[0] + p[1] * p[1] - 0.4).unwrap();
        let lin = linearize(&phi).unwrap();
        for e in 0..4 {
            for xi in [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]] {
                let x = space.map(e).to_physical(xi);
                assert_eq!(psi_point(&phi, &lin, e, x).unwrap().d, 0.0);
            }
        }
    }

    #[test]
    fn vanishing_gradient_is_reported() {
        let poly = Poly2::xi() * Poly2::xi() + Poly2::eta() * Poly2::eta();
        let map = AffineMap::new([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]);
        assert!(matches!(psi_local(&poly, &map, 1.0, [0.0, 0.0], -0.1), Err(Error::SingularDirection(_))));
    }

    #[test]
    fn unreachable_value_is_unresolved() {
        let poly = Poly2::xi();
        let map = AffineMap::new([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]);
        assert!(matches!(psi_local(&poly, &map, 1.0, [0.2, 0.2], 5.0), Err(Error::GeometryUnresolved(_))));
    }

    #[test]
    fn first_order_deformation_is_identity() {
        let mesh = Arc::new(Mesh::criss_cross(4, 4, BoundingBox::new([-1.0, -1.0], [1.0, 1.0])).unwrap());
        let space = FeSpace::new(mesh, 1).unwrap();
        let phi = ScalarFEFunction::interpolate(space, |p| p[0] * p[0] + p[1] * p[1] - 0.4).unwrap();
        let cut = CutInfo::classify(&linearize(&phi).unwrap()).unwrap();
        let def = Deformation::build(&phi, &cut).unwrap();
        assert!(def.is_identity());
        assert!(!cut.cut_elements().is_empty());
    }
}
