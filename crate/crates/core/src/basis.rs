//! Hierarchical `P^k` shape functions on the reference triangle.
//!
//! Vertex modes are the barycentric hat functions. Edge modes of degree `p`
//! are scaled integrated Legendre polynomials `t^p L_p(s/t)` with
//! `s = lambda_b - lambda_a`, `t = lambda_a + lambda_b`; interior modes of
//! degree `n` are the cubic bubble times `lambda_1^i lambda_2^(n-3-i)`.
//! Modes of degree `<= n` span `P^n` for every `n <= k`.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::mesh::local_edge;
use crate::poly::{univariate, Poly2};

pub const MAX_ORDER: usize = 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ModeKind {
    Vertex(usize),
    /// Local edge (opposite vertex) and polynomial degree.
    Edge { edge: usize, degree: usize },
    /// Degree and index within that degree.
    Interior { degree: usize, index: usize },
}

#[derive(Clone, Debug)]
pub struct HierarchicalBasis {
    order: usize,
    modes: Vec<ModeKind>,
    polys: Vec<Poly2>,
    grads: Vec<[Poly2; 2]>,
    lattice: Vec<[f64; 2]>,
    /// Inverse of the lattice Vandermonde matrix `V[node][mode]`.
    lattice_inverse: DMatrix<f64>,
}

pub fn num_local_dofs(k: usize) -> usize {
    (k + 1) * (k + 2) / 2
}

/// Degree-`k` principal lattice `(i/k, j/k)`, `i + j <= k`, vertices first.
pub fn principal_lattice(k: usize) -> Vec<[f64; 2]> {
    let mut nodes = vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];
    let kf = k as f64;
    for j in 0..=k {
        for i in 0..=(k - j) {
            let is_vertex = (i == 0 && j == 0) || (i == k && j == 0) || (i == 0 && j == k);
            if !is_vertex {
                nodes.push([i as f64 / kf, j as f64 / kf]);
            }
        }
    }
    nodes
}

/// Edge mode of degree `p` on the edge from local vertex `a` to `b`.
fn edge_mode(a: usize, b: usize, p: usize) -> Poly2 {
    let la = Poly2::barycentric(a);
    let lb = Poly2::barycentric(b);
    let s = lb - la;
    let t = la + lb;
    let coeffs = univariate::integrated_legendre(p);
    let mut out = Poly2::zero();
    for (m, &c) in coeffs.iter().enumerate() {
        if c == 0.0 {
            continue;
        }
        let mut term = Poly2::constant(c);
        for _ in 0..m {
            term = term * s;
        }
        for _ in 0..(p - m) {
            term = term * t;
        }
        out = out + term;
    }
    out
}

impl HierarchicalBasis {
    pub fn new(order: usize) -> Result<Self> {
        if !(1..=MAX_ORDER).contains(&order) {
            return Err(Error::InvalidArgument(format!("order must be in 1..={MAX_ORDER}, got {order}")));
        }
        let mut modes = Vec::new();
        let mut polys = Vec::new();
        for v in 0..3 {
            modes.push(ModeKind::Vertex(v));
            polys.push(Poly2::barycentric(v));
        }
        for edge in 0..3 {
            let (a, b) = local_edge(edge);
            // reference orientation runs from the lower to the higher local index
            let (a, b) = (a.min(b), a.max(b));
            for degree in 2..=order {
                modes.push(ModeKind::Edge { edge, degree });
                polys.push(edge_mode(a, b, degree));
            }
        }
        let bubble = Poly2::barycentric(0) * Poly2::barycentric(1) * Poly2::barycentric(2);
        for degree in 3..=order {
            for index in 0..=(degree - 3) {
                let mut p = bubble;
                for _ in 0..index {
                    p = p * Poly2::barycentric(1);
                }
                for _ in 0..(degree - 3 - index) {
                    p = p * Poly2::barycentric(2);
                }
                modes.push(ModeKind::Interior { degree, index });
                polys.push(p);
            }
        }
        let grads = polys.iter().map(|p| [p.d_xi(), p.d_eta()]).collect();
        let lattice = principal_lattice(order);
        let n = polys.len();
        debug_assert_eq!(n, num_local_dofs(order));
        let vander = DMatrix::from_fn(n, n, |i, j| polys[j].eval(lattice[i]));
        let lattice_inverse = vander
            .try_inverse()
            .ok_or_else(|| Error::Internal("singular lattice Vandermonde matrix".into()))?;
        Ok(Self { order, modes, polys, grads, lattice, lattice_inverse })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn len(&self) -> usize {
        self.polys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.polys.is_empty()
    }

    pub fn modes(&self) -> &[ModeKind] {
        &self.modes
    }

    pub fn mode_degree(&self, i: usize) -> usize {
        match self.modes[i] {
            ModeKind::Vertex(_) => 1,
            ModeKind::Edge { degree, .. } | ModeKind::Interior { degree, .. } => degree,
        }
    }

    /// Reference-orientation polynomial of mode `i`.
    pub fn poly(&self, i: usize) -> &Poly2 {
        &self.polys[i]
    }

    pub fn lattice(&self) -> &[[f64; 2]] {
        &self.lattice
    }

    pub fn eval_into(&self, p: [f64; 2], out: &mut [f64]) {
        for (o, poly) in out.iter_mut().zip(&self.polys) {
            *o = poly.eval(p);
        }
    }

    /// Values and reference gradients of all modes.
    pub fn eval_with_grads_into(&self, p: [f64; 2], vals: &mut [f64], grads: &mut [[f64; 2]]) {
        for (i, poly) in self.polys.iter().enumerate() {
            let (v, g) = poly.eval_with_grad(p);
            vals[i] = v;
            grads[i] = g;
        }
    }

    pub fn grad_polys(&self, i: usize) -> &[Poly2; 2] {
        &self.grads[i]
    }

    /// Reference-orientation coefficients from values at the principal
    /// lattice nodes.
    pub fn interpolate_reference(&self, samples: &[f64]) -> Result<Vec<f64>> {
        if samples.len() != self.len() {
            return Err(Error::InvalidArgument(format!(
                "expected {} lattice samples, got {}",
                self.len(),
                samples.len()
            )));
        }
        let n = self.len();
        let mut out = vec![0.0; n];
        for (i, o) in out.iter_mut().enumerate() {
            let mut acc = 0.0;
            for (j, s) in samples.iter().enumerate() {
                acc += self.lattice_inverse[(i, j)] * s;
            }
            *o = acc;
        }
        // vertex coefficients are exactly the vertex samples
        out[..3].copy_from_slice(&samples[..3]);
        Ok(out)
    }
}
