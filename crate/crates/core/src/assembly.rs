//! Assembly of the stabilized symmetric Nitsche system on the deformed
//! domain.
//!
//! Every integral is evaluated on the straight reference configuration
//! (`Omega_lin`, `Gamma_lin`, straight facets) and pushed forward through
//! `Theta_h`. The ghost penalty acts on jumps of derivatives normal to the
//! curved facets `Theta_h(F)`; these need derivatives of `Theta_h^{-1}`,
//! which come from a truncated series inversion of the element map.

use std::sync::Arc;

use rayon::prelude::*;

use crate::cut::{facet_rule, CutInfo};
use crate::deformation::Deformation;
use crate::error::{Error, Result};
use crate::fe::FeSpace;
use crate::mesh::Point;
use crate::poly::Poly2;
use crate::solver::{self, SolveReport, SolverMethod};
use crate::sparse::CsrMatrix;

/// Nitsche penalty, ghost-penalty weights and quadrature order.
#[derive(Clone, Debug, PartialEq)]
pub struct NitscheParams {
    pub lambda: f64,
    /// `gamma[l - 1]` weights the `l`-th normal derivative jumps.
    pub gamma: Vec<f64>,
    pub quad_order: usize,
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|i| i as f64).product()
}

impl NitscheParams {
    /// `lambda = lambda_scale k^2`, `gamma_l = gamma_scale k / ((l-1)!)^2`,
    /// quadrature order `2k + 2`.
    pub fn standard(k: usize, lambda_scale: f64, gamma_scale: f64) -> Self {
        let kf = k as f64;
        Self {
            lambda: lambda_scale * kf * kf,
            gamma: (1..=k).map(|l| gamma_scale * kf / factorial(l - 1).powi(2)).collect(),
            quad_order: 2 * k + 2,
        }
    }
}

const INACTIVE: usize = usize::MAX;

/// Numbering of the active dofs (those supported on active elements).
#[derive(Clone, Debug)]
pub struct DofMap {
    active_of: Vec<usize>,
    global_of: Vec<usize>,
}

impl DofMap {
    pub fn new(space: &FeSpace, cut: &CutInfo) -> Self {
        let mut flags = vec![false; space.ndof()];
        for &e in cut.active_elements() {
            for &d in space.element_dofs(e) {
                flags[d] = true;
            }
        }
        let mut active_of = vec![INACTIVE; space.ndof()];
        let mut global_of = Vec::new();
        for (d, &f) in flags.iter().enumerate() {
            if f {
                active_of[d] = global_of.len();
                global_of.push(d);
            }
        }
        Self { active_of, global_of }
    }

    pub fn len(&self) -> usize {
        self.global_of.len()
    }

    pub fn is_empty(&self) -> bool {
        self.global_of.is_empty()
    }

    pub fn active(&self, global: usize) -> Option<usize> {
        let a = self.active_of[global];
        (a != INACTIVE).then_some(a)
    }

    pub fn global(&self, active: usize) -> usize {
        self.global_of[active]
    }

    /// Expand an active-dof vector to a global coefficient vector (zeros on
    /// inactive dofs).
    pub fn expand(&self, active: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.active_of.len()];
        for (a, &g) in self.global_of.iter().enumerate() {
            out[g] = active[a];
        }
        out
    }

    /// Restrict a global coefficient vector to the active dofs.
    pub fn restrict(&self, global: &[f64]) -> Vec<f64> {
        self.global_of.iter().map(|&g| global[g]).collect()
    }
}

#[derive(Clone, Debug)]
pub struct AssembledSystem {
    pub matrix: CsrMatrix,
    pub rhs: Vec<f64>,
    pub dofs: DofMap,
    pub params: NitscheParams,
    pub order: usize,
}

impl AssembledSystem {
    pub fn solve(&self, tol: f64, method: SolverMethod) -> Result<SolveReport> {
        solver::solve(&self.matrix, &self.rhs, tol, method)
    }
}

pub(crate) fn inverse_transpose(j: [[f64; 2]; 2]) -> ([[f64; 2]; 2], f64) {
    let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
    // (J^{-1})^T
    ([[j[1][1] / det, -j[1][0] / det], [-j[0][1] / det, j[0][0] / det]], det)
}

pub(crate) fn apply(m: [[f64; 2]; 2], v: [f64; 2]) -> [f64; 2] {
    [m[0][0] * v[0] + m[0][1] * v[1], m[1][0] * v[0] + m[1][1] * v[1]]
}

struct Local {
    dofs: Vec<usize>,
    matrix: Vec<f64>,
    rhs: Vec<f64>,
}

impl Local {
    /// Push the upper triangle mirrored, so `(i, j)` and `(j, i)` receive
    /// bit-identical values.
    fn push_into(&self, dofs: &DofMap, triplets: &mut Vec<(usize, usize, f64)>, rhs: &mut [f64]) {
        let n = self.dofs.len();
        let act: Vec<usize> = self.dofs.iter().map(|&d| dofs.active(d).expect("dof of an active element")).collect();
        for i in 0..n {
            for j in i..n {
                let v = self.matrix[i * n + j];
                triplets.push((act[i], act[j], v));
                if i != j {
                    triplets.push((act[j], act[i], v));
                }
            }
            rhs[act[i]] += self.rhs.get(i).copied().unwrap_or(0.0);
        }
    }
}

type Field<'a> = &'a (dyn Fn(Point) -> f64 + Sync);

fn element_contribution(
    space: &FeSpace,
    cut: &CutInfo,
    deformation: &Deformation,
    params: &NitscheParams,
    e: usize,
    f: Field,
    u_d: Field,
) -> Result<Local> {
    let basis = space.basis();
    let n = space.local_dofs();
    let signs = space.element_signs(e);
    let map = space.map(e);
    let el = deformation.element(e);
    let mut mat = vec![0.0; n * n];
    let mut rhs = vec![0.0; n];
    let mut vals = vec![0.0; n];
    let mut grads_ref = vec![[0.0; 2]; n];
    let mut grads = vec![[0.0; 2]; n];

    let mut eval_point = |xi: [f64; 2], vals: &mut [f64], grads: &mut [[f64; 2]]| -> Result<(Point, [[f64; 2]; 2], f64)> {
        let (y, jac) = el.eval(xi);
        let (jit, det) = inverse_transpose(jac);
        if !(det > 0.0) || !det.is_finite() {
            return Err(Error::DeformationDegenerate(format!("det D Theta_h = {det:e} in element {e} at {xi:?}")));
        }
        basis.eval_with_grads_into(xi, vals, &mut grads_ref);
        for i in 0..n {
            vals[i] *= signs[i];
            let g = map.grad_to_physical(grads_ref[i]);
            let g = apply(jit, g);
            grads[i] = [g[0] * signs[i], g[1] * signs[i]];
        }
        Ok((y, jit, det))
    };

    for p in cut.volume_rule(e, params.quad_order) {
        let (y, _, det) = eval_point(p.xi, &mut vals, &mut grads)?;
        let w = p.weight * det;
        let fy = f(y);
        for i in 0..n {
            for j in i..n {
                mat[i * n + j] += w * (grads[i][0] * grads[j][0] + grads[i][1] * grads[j][1]);
            }
            rhs[i] += w * fy * vals[i];
        }
    }

    let surface = cut.interface_rule(e, params.quad_order);
    if !surface.is_empty() {
        let penalty = params.lambda / space.mesh().diameter(e);
        for p in surface {
            let (y, jit, det) = eval_point(p.xi, &mut vals, &mut grads)?;
            let m = apply(jit, p.normal);
            let mn = m[0].hypot(m[1]);
            let ds = det * mn * p.weight;
            let normal = [m[0] / mn, m[1] / mn];
            let ud = u_d(y);
            let dn: Vec<f64> = grads.iter().map(|g| g[0] * normal[0] + g[1] * normal[1]).collect();
            for i in 0..n {
                for j in i..n {
                    mat[i * n + j] += ds * (-dn[j] * vals[i] - dn[i] * vals[j] + penalty * vals[i] * vals[j]);
                }
                rhs[i] += ds * (-dn[i] * ud + penalty * ud * vals[i]);
            }
        }
    }
    Ok(Local { dofs: space.element_dofs(e).to_vec(), matrix: mat, rhs })
}

/// `sum c_ab s_0^a s_1^b` truncated to total degree `deg`.
fn compose(p: &Poly2, powers: &[Vec<Poly2>; 2], deg: usize) -> Poly2 {
    let mut out = Poly2::zero();
    for a in 0..=deg {
        for b in 0..=deg - a {
            let c = p.coeff(a, b);
            if c != 0.0 {
                out.axpy(c, &powers[0][a].mul_truncated(&powers[1][b], deg));
            }
        }
    }
    out
}

fn truncated_powers(s: &[Poly2; 2], deg: usize) -> [Vec<Poly2>; 2] {
    s.map(|si| {
        let mut v = vec![Poly2::constant(1.0)];
        for i in 1..=deg {
            let next = v[i - 1].mul_truncated(&si, deg);
            v.push(next);
        }
        v
    })
}

/// Degree-`deg` Taylor polynomial of `w -> Theta^{-1}(y + w) - xi0` for the
/// element map with components `position` (reference coordinates), where
/// `y = Theta(xi0)`. Also returns the reference Jacobian at `xi0`.
fn inverse_series(position: &[Poly2; 2], xi0: [f64; 2], deg: usize) -> ([Poly2; 2], [[f64; 2]; 2]) {
    let mut taylor = position.map(|p| p.shifted(xi0));
    let a = [[taylor[0].coeff(1, 0), taylor[0].coeff(0, 1)], [taylor[1].coeff(1, 0), taylor[1].coeff(0, 1)]];
    let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
    let ainv = [[a[1][1] / det, -a[0][1] / det], [-a[1][0] / det, a[0][0] / det]];
    // nonlinear remainder Q(s) = Theta(xi0 + s) - y - A s
    for t in taylor.iter_mut() {
        *t = *t - Poly2::constant(t.coeff(0, 0)) - Poly2::xi().scale(t.coeff(1, 0)) - Poly2::eta().scale(t.coeff(0, 1));
    }
    let w = [Poly2::xi(), Poly2::eta()];
    let solve = |r: [Poly2; 2]| {
        [r[0].scale(ainv[0][0]) + r[1].scale(ainv[0][1]), r[0].scale(ainv[1][0]) + r[1].scale(ainv[1][1])]
    };
    let mut s = solve(w);
    // each fixed-point sweep s = A^{-1}(w - Q(s)) fixes one more order
    for _ in 1..deg {
        let powers = truncated_powers(&s, deg);
        let q = [compose(&taylor[0], &powers, deg), compose(&taylor[1], &powers, deg)];
        s = solve([w[0] - q[0], w[1] - q[1]]);
    }
    (s, a)
}

/// `d^l/dn^l` at `w = 0` of `sum c_ab w_0^a w_1^b`.
fn directional_derivative_at_origin(p: &Poly2, n: [f64; 2], l: usize) -> f64 {
    let mut fact = 1.0;
    for i in 2..=l {
        fact *= i as f64;
    }
    (0..=l).map(|a| p.coeff(a, l - a) * n[0].powi(a as i32) * n[1].powi((l - a) as i32)).sum::<f64>() * fact
}

/// Local inverse of `Theta_h` around a point, as truncated power series.
struct LocalInverse {
    xi0: [f64; 2],
    powers: [Vec<Poly2>; 2],
    order: usize,
}

impl LocalInverse {
    fn new(deformation: &Deformation, e: usize, x: Point, order: usize) -> Self {
        let el = deformation.element(e);
        let xi0 = el.affine().to_reference(x);
        let (s, _) = inverse_series(&el.position_polys(), xi0, order);
        Self { xi0, powers: truncated_powers(&s, order), order }
    }

    /// `d^l/dn^l (p o Theta^{-1})` at `Theta(x)` for `l = 1..=order`, with `p`
    /// given in reference coordinates and `n` in physical coordinates.
    fn normal_derivatives(&self, p: &Poly2, n: [f64; 2]) -> Vec<f64> {
        let local = compose(&p.shifted(self.xi0), &self.powers, self.order);
        (1..=self.order).map(|l| directional_derivative_at_origin(&local, n, l)).collect()
    }
}

/// Physical normal derivatives of the local basis functions (global
/// orientation) of element `e` at the straight point `x`: `out[l - 1][i]`.
fn physical_normal_derivatives(
    space: &FeSpace,
    deformation: &Deformation,
    e: usize,
    x: Point,
    n: [f64; 2],
) -> Vec<Vec<f64>> {
    let k = space.order();
    let inverse = LocalInverse::new(deformation, e, x, k);
    let signs = space.element_signs(e);
    let mut out = vec![vec![0.0; space.local_dofs()]; k];
    for i in 0..space.local_dofs() {
        for (l, d) in inverse.normal_derivatives(space.basis().poly(i), n).into_iter().enumerate() {
            out[l][i] = signs[i] * d;
        }
    }
    out
}

/// Ghost penalty on the curved facet `Theta_h(F)`: jumps of physical
/// normal derivatives of `v o Theta_h^{-1}`, integrated by pullback to the
/// straight facet.
fn facet_contribution(space: &FeSpace, deformation: &Deformation, params: &NitscheParams, f: usize) -> Local {
    let mesh = space.mesh();
    let facet = &mesh.facets()[f];
    let (lo, hi) = (facet.elements.0, facet.elements.1.expect("ghost-penalty facet is interior"));
    let k = space.order();
    let (points, normal) = facet_rule(mesh, f, params.quad_order);
    let h = mesh.facet_length(f);
    let tangent = [-normal[1], normal[0]];

    let lo_dofs = space.element_dofs(lo);
    let hi_dofs = space.element_dofs(hi);
    let mut dofs: Vec<usize> = lo_dofs.to_vec();
    let hi_pos: Vec<usize> = hi_dofs
        .iter()
        .map(|d| {
            dofs.iter().position(|x| x == d).unwrap_or_else(|| {
                dofs.push(*d);
                dofs.len() - 1
            })
        })
        .collect();
    let n = dofs.len();
    let el_lo = deformation.element(lo);
    let mut mat = vec![0.0; n * n];
    let mut jump = vec![0.0; n];
    for &(x, w) in &points {
        // Theta_h is continuous, so the curved tangent agrees on both sides
        let (_, jac) = el_lo.eval(space.map(lo).to_reference(x));
        let tau = apply(jac, tangent);
        let len = tau[0].hypot(tau[1]);
        let mut nc = [tau[1] / len, -tau[0] / len];
        if nc[0] * normal[0] + nc[1] * normal[1] < 0.0 {
            nc = [-nc[0], -nc[1]];
        }
        let d_lo = physical_normal_derivatives(space, deformation, lo, x, nc);
        let d_hi = physical_normal_derivatives(space, deformation, hi, x, nc);
        for l in 1..=k {
            jump.iter_mut().for_each(|v| *v = 0.0);
            for (i, v) in d_lo[l - 1].iter().enumerate() {
                jump[i] += v;
            }
            for (i, &pos) in hi_pos.iter().enumerate() {
                jump[pos] -= d_hi[l - 1][i];
            }
            let ws = w * len * params.gamma[l - 1] * h.powi(2 * l as i32 - 1);
            for i in 0..n {
                if jump[i] == 0.0 {
                    continue;
                }
                for j in i..n {
                    mat[i * n + j] += ws * jump[i] * jump[j];
                }
            }
        }
    }
    Local { dofs, matrix: mat, rhs: Vec::new() }
}

/// Ghost-penalty matrix `J_h` on the active dofs.
pub fn ghost_penalty_matrix(
    cut: &CutInfo,
    deformation: &Deformation,
    params: &NitscheParams,
    dofs: &DofMap,
) -> CsrMatrix {
    let space = deformation.displacement().space();
    let locals: Vec<Local> =
        cut.ghost_penalty_facets().par_iter().map(|&f| facet_contribution(space, deformation, params, f)).collect();
    let mut triplets = Vec::new();
    let mut rhs = vec![0.0; dofs.len()];
    for l in &locals {
        l.push_into(dofs, &mut triplets, &mut rhs);
    }
    CsrMatrix::from_triplets(dofs.len(), triplets)
}

/// Assemble `a_h + N_h + J_h` and `f_h` over the active dofs of the space
/// carried by `deformation`.
pub fn assemble(
    cut: &CutInfo,
    deformation: &Deformation,
    params: &NitscheParams,
    f: Field,
    u_d: Field,
) -> Result<AssembledSystem> {
    let space: &Arc<FeSpace> = deformation.displacement().space();
    if space.mesh().num_elements() != cut.mesh().num_elements() {
        return Err(Error::InvalidArgument("deformation and cut info live on different meshes".into()));
    }
    let k = space.order();
    if params.gamma.len() < k {
        return Err(Error::InvalidArgument(format!("need {k} ghost-penalty weights, got {}", params.gamma.len())));
    }
    let dofs = DofMap::new(space, cut);
    if dofs.is_empty() {
        return Err(Error::InvalidGeometry("no active elements: the level set has no interior on this mesh".into()));
    }
    let elements: Vec<Local> = cut
        .active_elements()
        .par_iter()
        .map(|&e| element_contribution(space, cut, deformation, params, e, f, u_d))
        .collect::<Result<_>>()?;
    let facets: Vec<Local> = cut.ghost_penalty_facets().par_iter().map(|&fc| facet_contribution(space, deformation, params, fc)).collect();

    let local = space.local_dofs();
    let mut triplets = Vec::with_capacity(elements.len() * local * local + facets.len() * 4 * local * local);
    let mut rhs = vec![0.0; dofs.len()];
    for l in elements.iter().chain(&facets) {
        l.push_into(&dofs, &mut triplets, &mut rhs);
    }
    let matrix = CsrMatrix::from_triplets(dofs.len(), triplets);
    Ok(AssembledSystem { matrix, rhs, dofs, params: params.clone(), order: k })
}
