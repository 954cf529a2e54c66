//! Error norms on the deformed domain and convergence rates.

use rayon::prelude::*;

use crate::assembly::{apply, inverse_transpose};
use crate::cut::CutInfo;
use crate::deformation::Deformation;
use crate::error::{Error, Result};
use crate::fe::ScalarFEFunction;
use crate::mesh::Point;

/// Errors measured on `Omega_h = Theta_h(Omega_lin)` and `Gamma_h`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ErrorNorms {
    pub l2: f64,
    pub h1_semi: f64,
    pub l2_boundary: f64,
}

/// `L2(Omega_h)`, `H1`-seminorm and `L2(Gamma_h)` errors of `u_h` against
/// `u`, all integrals pulled back to the straight configuration.
pub fn errors<U, G>(
    u_h: &ScalarFEFunction,
    u: U,
    grad_u: G,
    deformation: &Deformation,
    cut: &CutInfo,
    q: usize,
) -> Result<ErrorNorms>
where
    U: Fn(Point) -> f64 + Sync,
    G: Fn(Point) -> [f64; 2] + Sync,
{
    let space = u_h.space();
    let dspace = deformation.displacement().space();
    if space.mesh().num_elements() != cut.mesh().num_elements()
        || dspace.mesh().num_elements() != space.mesh().num_elements()
        || dspace.order() != space.order()
    {
        return Err(Error::InvalidArgument("solution, deformation and cut info do not share a configuration".into()));
    }
    let parts: Vec<[f64; 3]> = cut
        .active_elements()
        .par_iter()
        .map(|&e| -> Result<[f64; 3]> {
            let el = deformation.element(e);
            let poly = u_h.element_poly(e);
            let map = space.map(e);
            let mut acc = [0.0; 3];
            for p in cut.volume_rule(e, q) {
                let (y, jac) = el.eval(p.xi);
                let (jit, det) = inverse_transpose(jac);
                if !(det > 0.0) {
                    return Err(Error::DeformationDegenerate(format!("det D Theta_h = {det:e} in element {e}")));
                }
                let (v, g) = poly.eval_with_grad(p.xi);
                let g = apply(jit, map.grad_to_physical(g));
                let ge = grad_u(y);
                let w = p.weight * det;
                acc[0] += w * (u(y) - v).powi(2);
                acc[1] += w * ((ge[0] - g[0]).powi(2) + (ge[1] - g[1]).powi(2));
            }
            for p in cut.interface_rule(e, q) {
                let (y, jac) = el.eval(p.xi);
                let (jit, det) = inverse_transpose(jac);
                let m = apply(jit, p.normal);
                let ds = p.weight * det * m[0].hypot(m[1]);
                acc[2] += ds * (u(y) - poly.eval(p.xi)).powi(2);
            }
            Ok(acc)
        })
        .collect::<Result<_>>()?;
    // summed in element order for reproducibility
    let mut total = [0.0; 3];
    for p in &parts {
        for i in 0..3 {
            total[i] += p[i];
        }
    }
    Ok(ErrorNorms { l2: total[0].sqrt(), h1_semi: total[1].sqrt(), l2_boundary: total[2].sqrt() })
}

/// `|Omega_h|` by pullback.
pub fn deformed_area(deformation: &Deformation, cut: &CutInfo, q: usize) -> f64 {
    let parts: Vec<f64> = cut
        .active_elements()
        .par_iter()
        .map(|&e| {
            let el = deformation.element(e);
            cut.volume_rule(e, q).iter().map(|p| p.weight * inverse_transpose(el.eval(p.xi).1).1).sum()
        })
        .collect();
    parts.iter().sum()
}

/// Convergence rate between two consecutive levels; `None` when either
/// error is zero (saturated).
pub fn rate(coarse: f64, fine: f64) -> Option<f64> {
    (coarse > 0.0 && fine > 0.0).then(|| (coarse / fine).log2())
}

/// `log2(e_i / e_{i+1})` for consecutive entries.
pub fn eoc(errors: &[f64]) -> Vec<Option<f64>> {
    errors.windows(2).map(|w| rate(w[0], w[1])).collect()
}
