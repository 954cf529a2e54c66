//! Piecewise linear level-set geometry: element classification, the
//! element and facet sets near the interface, and quadrature on cut
//! elements.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::fe::{AffineMap, FeSpace, ScalarFEFunction};
use crate::mesh::{Mesh, Point};
use crate::quadrature::{segment_rule, triangle_rule};

/// Relative size of the shift applied to exact zero vertex values.
pub const ZERO_PERTURBATION: f64 = 1e-14;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ElementKind {
    Inside,
    Outside,
    Cut,
}

/// Straight triangles and interface segment of a cut triangle, in whatever
/// coordinates the triangle vertices were given.
#[derive(Clone, Debug, PartialEq)]
pub struct CutDecomposition {
    /// Triangles covering `{phi <= 0}`.
    pub negative: Vec<[Point; 3]>,
    /// Triangles covering `{phi >= 0}`.
    pub positive: Vec<[Point; 3]>,
    pub segment: [Point; 2],
}

fn lerp(a: Point, b: Point, t: f64) -> Point {
    [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]
}

fn tri_area(t: &[Point; 3]) -> f64 {
    0.5 * ((t[1][0] - t[0][0]) * (t[2][1] - t[0][1]) - (t[1][1] - t[0][1]) * (t[2][0] - t[0][0]))
}

/// Split a triangle along the zero line of the linear function with the
/// given vertex values. Vertex values must be nonzero with mixed signs.
pub fn decompose_triangle(verts: [Point; 3], values: [f64; 3]) -> Result<CutDecomposition> {
    if values.iter().all(|&v| v == 0.0) {
        return Err(Error::DegenerateCut("all vertex values are zero".into()));
    }
    if values.iter().any(|&v| v == 0.0 || !v.is_finite()) {
        return Err(Error::DegenerateCut(format!("vertex values {values:?} must be nonzero and finite")));
    }
    let neg: Vec<usize> = (0..3).filter(|&i| values[i] < 0.0).collect();
    if neg.is_empty() || neg.len() == 3 {
        return Err(Error::DegenerateCut(format!("vertex values {values:?} do not change sign")));
    }
    // `lone` is the vertex whose sign differs from the other two
    let lone = if neg.len() == 1 { neg[0] } else { (0..3).find(|&i| values[i] > 0.0).unwrap() };
    let (a, b) = ((lone + 1) % 3, (lone + 2) % 3);
    let root = |i: usize, j: usize| lerp(verts[i], verts[j], values[i] / (values[i] - values[j]));
    let pa = root(lone, a);
    let pb = root(lone, b);
    // keep counterclockwise orientation of every piece
    let tip = [verts[lone], pa, pb];
    let quad = vec![[pa, verts[a], verts[b]], [pa, verts[b], pb]];
    let (negative, positive) = if neg.len() == 1 { (vec![tip], quad) } else { (quad, vec![tip]) };
    Ok(CutDecomposition { negative, positive, segment: [pa, pb] })
}

/// Weighted point on a cut-element domain: reference coordinates, straight
/// physical position, physical weight.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadPoint {
    pub xi: [f64; 2],
    pub x: Point,
    pub weight: f64,
}

/// Interface point with unit normal pointing out of `{phi_lin <= 0}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SurfacePoint {
    pub xi: [f64; 2],
    pub x: Point,
    pub weight: f64,
    pub normal: [f64; 2],
}

/// Classification of a mesh against a piecewise linear level set.
#[derive(Clone, Debug)]
pub struct CutInfo {
    mesh: Arc<Mesh>,
    vertex_values: Vec<f64>,
    kinds: Vec<ElementKind>,
    active: Vec<usize>,
    cut: Vec<usize>,
    band: Vec<usize>,
    in_band: Vec<bool>,
    gp_facets: Vec<usize>,
    decompositions: Vec<Option<CutDecomposition>>,
}

/// Piecewise linear interpolant through the vertex values of `phi_h`.
pub fn linearize(phi_h: &ScalarFEFunction) -> Result<ScalarFEFunction> {
    let space = phi_h.space();
    let linear = if space.order() == 1 { space.clone() } else { FeSpace::new(space.mesh().clone(), 1)? };
    let nv = space.mesh().num_vertices();
    // vertex dofs come first and hierarchical vertex coefficients are nodal values
    ScalarFEFunction::from_coefficients(linear, phi_h.coefficients()[..nv].to_vec())
}

impl CutInfo {
    /// Classify every element against the piecewise linear `phi_lin`.
    ///
    /// Exact zero vertex values are moved to `-1e-14 * h` (h the largest
    /// adjacent element diameter), so zero counts as inside and no element
    /// has a degenerate cut.
    pub fn classify(phi_lin: &ScalarFEFunction) -> Result<Self> {
        let space = phi_lin.space();
        if space.order() != 1 {
            return Err(Error::InvalidArgument("classification needs a piecewise linear level set".into()));
        }
        let mesh = space.mesh().clone();
        let mut h_vertex = vec![0.0f64; mesh.num_vertices()];
        for (e, t) in mesh.elements().iter().enumerate() {
            for &v in t {
                h_vertex[v] = h_vertex[v].max(mesh.diameter(e));
            }
        }
        let vertex_values: Vec<f64> = phi_lin
            .coefficients()
            .iter()
            .zip(&h_vertex)
            .map(|(&v, &h)| if v == 0.0 { -ZERO_PERTURBATION * h } else { v })
            .collect();
        if let Some(bad) = vertex_values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!("level set value at vertex {bad} is not finite")));
        }
        let ne = mesh.num_elements();
        let mut kinds = Vec::with_capacity(ne);
        let mut decompositions = vec![None; ne];
        for (e, t) in mesh.elements().iter().enumerate() {
            let vals = t.map(|v| vertex_values[v]);
            let kind = if vals.iter().all(|&v| v < 0.0) {
                ElementKind::Inside
            } else if vals.iter().all(|&v| v > 0.0) {
                ElementKind::Outside
            } else {
                ElementKind::Cut
            };
            if kind == ElementKind::Cut {
                let reference = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];
                decompositions[e] = Some(decompose_triangle(reference, vals).map_err(|err| err.context(format!("element {e}")))?);
            }
            kinds.push(kind);
        }
        let active: Vec<usize> = (0..ne).filter(|&e| kinds[e] != ElementKind::Outside).collect();
        let cut: Vec<usize> = (0..ne).filter(|&e| kinds[e] == ElementKind::Cut).collect();
        let mut in_band = vec![false; ne];
        for &e in &cut {
            in_band[e] = true;
            for n in mesh.neighbors(e) {
                if kinds[n] != ElementKind::Outside {
                    in_band[n] = true;
                }
            }
        }
        let band: Vec<usize> = (0..ne).filter(|&e| in_band[e]).collect();
        let gp_facets: Vec<usize> = mesh
            .facets()
            .iter()
            .enumerate()
            .filter(|(_, f)| matches!(f.elements, (a, Some(b)) if in_band[a] && in_band[b]))
            .map(|(i, _)| i)
            .collect();
        Ok(Self { mesh, vertex_values, kinds, active, cut, band, in_band, gp_facets, decompositions })
    }

    pub fn mesh(&self) -> &Arc<Mesh> {
        &self.mesh
    }

    /// Vertex values of the (perturbed) linear level set used for all
    /// geometric decisions.
    pub fn vertex_values(&self) -> &[f64] {
        &self.vertex_values
    }

    pub fn element_values(&self, e: usize) -> [f64; 3] {
        self.mesh.elements()[e].map(|v| self.vertex_values[v])
    }

    pub fn kind(&self, e: usize) -> ElementKind {
        self.kinds[e]
    }

    /// Elements touching `Omega_lin`.
    pub fn active_elements(&self) -> &[usize] {
        &self.active
    }

    pub fn cut_elements(&self) -> &[usize] {
        &self.cut
    }

    /// Cut elements and their active edge-neighbours.
    pub fn extended_band(&self) -> &[usize] {
        &self.band
    }

    pub fn in_band(&self, e: usize) -> bool {
        self.in_band[e]
    }

    /// Interior facets with both neighbours in the extended band.
    pub fn ghost_penalty_facets(&self) -> &[usize] {
        &self.gp_facets
    }

    /// Decomposition of a cut element in its reference coordinates.
    pub fn decomposition(&self, e: usize) -> Option<&CutDecomposition> {
        self.decompositions[e].as_ref()
    }

    /// Physical unit normal of the linear interface in element `e`.
    pub fn interface_normal(&self, e: usize) -> [f64; 2] {
        let v = self.element_values(e);
        let map = AffineMap::new(self.mesh.element_coords(e));
        let g = map.grad_to_physical([v[1] - v[0], v[2] - v[0]]);
        let n = g[0].hypot(g[1]);
        [g[0] / n, g[1] / n]
    }

    fn sub_triangle_rule(&self, e: usize, pieces: &[[Point; 3]], q: usize) -> Vec<QuadPoint> {
        let map = AffineMap::new(self.mesh.element_coords(e));
        let rule = triangle_rule(q);
        let mut out = Vec::with_capacity(rule.len() * pieces.len());
        for piece in pieces {
            let sub = AffineMap::new(*piece);
            let scale = sub.det * map.det;
            for &(r, w) in &rule {
                let xi = sub.to_physical(r);
                out.push(QuadPoint { xi, x: map.to_physical(xi), weight: w * scale });
            }
        }
        out
    }

    /// Rule on `T ∩ Omega_lin`, exact for degree `q`.
    pub fn volume_rule(&self, e: usize, q: usize) -> Vec<QuadPoint> {
        match self.kinds[e] {
            ElementKind::Outside => Vec::new(),
            ElementKind::Inside => self.sub_triangle_rule(e, &[[[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]], q),
            ElementKind::Cut => self.sub_triangle_rule(e, &self.decompositions[e].as_ref().unwrap().negative, q),
        }
    }

    /// Rule on the complement `T ∩ {phi_lin >= 0}`.
    pub fn complement_rule(&self, e: usize, q: usize) -> Vec<QuadPoint> {
        match self.kinds[e] {
            ElementKind::Inside => Vec::new(),
            ElementKind::Outside => self.sub_triangle_rule(e, &[[[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]], q),
            ElementKind::Cut => self.sub_triangle_rule(e, &self.decompositions[e].as_ref().unwrap().positive, q),
        }
    }

    /// Rule on `Gamma_lin ∩ T` with arclength weights; empty unless cut.
    pub fn interface_rule(&self, e: usize, q: usize) -> Vec<SurfacePoint> {
        let Some(dec) = self.decompositions[e].as_ref() else {
            return Vec::new();
        };
        let map = AffineMap::new(self.mesh.element_coords(e));
        let normal = self.interface_normal(e);
        let a = map.to_physical(dec.segment[0]);
        let b = map.to_physical(dec.segment[1]);
        let len = (b[0] - a[0]).hypot(b[1] - a[1]);
        let (s, w) = segment_rule(q);
        s.iter()
            .zip(&w)
            .map(|(&t, &wt)| {
                let xi = lerp(dec.segment[0], dec.segment[1], t);
                SurfacePoint { xi, x: map.to_physical(xi), weight: wt * len, normal }
            })
            .collect()
    }
}

/// Rule on a straight facet plus its unit normal, oriented from the lower
/// to the higher element index.
pub fn facet_rule(mesh: &Mesh, f: usize, q: usize) -> (Vec<(Point, f64)>, [f64; 2]) {
    let facet = &mesh.facets()[f];
    let a = mesh.vertices()[facet.vertices[0]];
    let b = mesh.vertices()[facet.vertices[1]];
    let len = mesh.facet_length(f);
    let t = [(b[0] - a[0]) / len, (b[1] - a[1]) / len];
    let mut n = [t[1], -t[0]];
    let c = mesh.element_coords(facet.elements.0);
    let centroid = [(c[0][0] + c[1][0] + c[2][0]) / 3.0, (c[0][1] + c[1][1] + c[2][1]) / 3.0];
    let mid = [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])];
    if n[0] * (mid[0] - centroid[0]) + n[1] * (mid[1] - centroid[1]) < 0.0 {
        n = [-n[0], -n[1]];
    }
    let (s, w) = segment_rule(q);
    let pts = s.iter().zip(&w).map(|(&s, &w)| (lerp(a, b, s), w * len)).collect();
    (pts, n)
}

/// Area of a triangle piece list; used by tests and diagnostics.
pub fn pieces_area(pieces: &[[Point; 3]]) -> f64 {
    pieces.iter().map(tri_area).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::BoundingBox;

    const REF: [Point; 3] = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];

    #[test]
    fn one_negative_vertex() {
        let d = decompose_triangle(REF, [-1.0, 1.0, 1.0]).unwrap();
        assert_eq!(d.negative.len(), 1);
        assert!((pieces_area(&d.negative) - 0.125).abs() < 1e-16);
        assert_eq!(d.segment, [[0.5, 0.0], [0.0, 0.5]]);
        let len = (d.segment[1][0] - d.segment[0][0]).hypot(d.segment[1][1] - d.segment[0][1]);
        assert!((len - 2f64.sqrt() / 2.0).abs() < 1e-15);
    }

    #[test]
    fn two_negative_vertices() {
        let d = decompose_triangle(REF, [-1.0, -1.0, 1.0]).unwrap();
        assert_eq!(d.negative.len(), 2);
        assert!((pieces_area(&d.negative) - 0.375).abs() < 1e-16);
        let mut seg = d.segment;
        seg.sort_by(|a, b| b[0].partial_cmp(&a[0]).unwrap());
        assert_eq!(seg, [[0.5, 0.5], [0.0, 0.5]]);
        for t in d.negative.iter().chain(&d.positive) {
            assert!(tri_area(t) > 0.0);
        }
    }

    #[test]
    fn complementary_signs_cover_triangle() {
        let a = decompose_triangle(REF, [-1.0, 1.0, 1.0]).unwrap();
        let b = decompose_triangle(REF, [1.0, -1.0, -1.0]).unwrap();
        assert!((pieces_area(&a.negative) + pieces_area(&b.negative) - 0.5).abs() < 1e-16);
    }

    #[test]
    fn degenerate_values_rejected() {
        assert!(matches!(decompose_triangle(REF, [0.0, 0.0, 0.0]), Err(Error::DegenerateCut(_))));
        assert!(decompose_triangle(REF, [-1.0, -2.0, -3.0]).is_err());
    }

    fn single_element_cut(values: [f64; 3]) -> CutInfo {
        // one criss-cross element is not the reference triangle, so build a
        // 1x1 mesh and overwrite values through a linear interpolant
        let mesh = Arc::new(Mesh::criss_cross(1, 1, BoundingBox::new([0.0, 0.0], [1.0, 1.0])).unwrap());
        let space = FeSpace::new(mesh.clone(), 1).unwrap();
        let mut c = vec![1.0; mesh.num_vertices()];
        for (i, &v) in mesh.elements()[0].iter().enumerate() {
            c[v] = values[i];
        }
        let f = ScalarFEFunction::from_coefficients(space, c).unwrap();
        CutInfo::classify(&f).unwrap()
    }

    #[test]
    fn classification_kinds() {
        let c = single_element_cut([-1.0, -2.0, -0.5]);
        assert_eq!(c.kind(0), ElementKind::Inside);
        let c = single_element_cut([-1.0, 1.0, 1.0]);
        assert_eq!(c.kind(0), ElementKind::Cut);
        // zero counts as inside
        let c = single_element_cut([0.0, -1.0, -1.0]);
        assert_eq!(c.kind(0), ElementKind::Inside);
        let c = single_element_cut([0.0, 1.0, 1.0]);
        assert_eq!(c.kind(0), ElementKind::Cut);
    }

    #[test]
    fn rules_on_cut_element() {
        let c = single_element_cut([-1.0, 1.0, 1.0]);
        let area = c.mesh().area(0);
        let vol: f64 = c.volume_rule(0, 2).iter().map(|p| p.weight).sum();
        let comp: f64 = c.complement_rule(0, 2).iter().map(|p| p.weight).sum();
        assert!((vol + comp - area).abs() < 1e-15);
        assert!((vol - area / 4.0).abs() < 1e-15);
        let n = c.interface_normal(0);
        let pts = c.interface_rule(0, 4);
        assert!(!pts.is_empty());
        // phi increases along +n
        let map = AffineMap::new(c.mesh().element_coords(0));
        let v = c.element_values(0);
        let g = map.grad_to_physical([v[1] - v[0], v[2] - v[0]]);
        assert!(g[0] * n[0] + g[1] * n[1] > 0.0);
    }

    #[test]
    fn facet_normals_point_to_higher_element() {
        let mesh = Mesh::criss_cross(2, 2, BoundingBox::new([0.0, 0.0], [1.0, 1.0])).unwrap();
        for (f, facet) in mesh.facets().iter().enumerate() {
            let (pts, n) = facet_rule(&mesh, f, 3);
            assert!((pts.iter().map(|p| p.1).sum::<f64>() - mesh.facet_length(f)).abs() < 1e-15);
            if let (_, Some(hi)) = facet.elements {
                let c = mesh.element_coords(hi);
                let centroid = [(c[0][0] + c[1][0] + c[2][0]) / 3.0, (c[0][1] + c[1][1] + c[2][1]) / 3.0];
                let d = [centroid[0] - pts[0].0[0], centroid[1] - pts[0].0[1]];
                assert!(d[0] * n[0] + d[1] * n[1] > 0.0);
            }
        }
    }

    #[test]
    fn linearize_keeps_vertex_values() {
        let mesh = Arc::new(Mesh::criss_cross(2, 2, BoundingBox::new([-1.0, -1.0], [1.0, 1.0])).unwrap());
        let space = FeSpace::new(mesh.clone(), 2).unwrap();
        let phi = ScalarFEFunction::interpolate(space, |p| p[0] * p[0] + p[1] * p[1] - 0.5).unwrap();
        let lin = linearize(&phi).unwrap();
        assert_eq!(lin.space().order(), 1);
        for (v, p) in mesh.vertices().iter().enumerate() {
            assert_eq!(lin.coefficients()[v], p[0] * p[0] + p[1] * p[1] - 0.5);
        }
        let lin2 = linearize(&lin).unwrap();
        assert_eq!(lin2.coefficients(), lin.coefficients());
    }
}
