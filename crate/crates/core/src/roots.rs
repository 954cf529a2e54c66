//! Scalar root finding: bracket scan from zero outwards plus Newton
//! iteration safeguarded by bisection.

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Root {
    pub x: f64,
    pub residual: f64,
    pub iterations: usize,
}

fn opposite(a: f64, b: f64) -> bool {
    (a < 0.0 && b > 0.0) || (a > 0.0 && b < 0.0)
}

/// Newton iteration kept inside the sign-change bracket `[a, b]`; falls
/// back to bisection whenever the Newton step leaves the bracket.
///
/// `f` returns value and derivative. Stops once `|f| <= tol` or the bracket
/// has collapsed to rounding level.
pub fn newton_bisection<F>(f: F, mut a: f64, mut b: f64, tol: f64, max_iter: usize) -> Option<Root>
where
    F: Fn(f64) -> (f64, f64),
{
    let (mut fa, _) = f(a);
    let (fb, _) = f(b);
    if fa.abs() <= tol {
        return Some(Root { x: a, residual: fa.abs(), iterations: 0 });
    }
    if fb.abs() <= tol {
        return Some(Root { x: b, residual: fb.abs(), iterations: 0 });
    }
    if !opposite(fa, fb) {
        return None;
    }
    let mut x = a - fa * (b - a) / (fb - fa);
    let mut best = Root { x, residual: f64::INFINITY, iterations: 0 };
    for it in 1..=max_iter {
        let (fx, dfx) = f(x);
        if fx.abs() < best.residual {
            best = Root { x, residual: fx.abs(), iterations: it };
        }
        if fx.abs() <= tol {
            return Some(Root { x, residual: fx.abs(), iterations: it });
        }
        if opposite(fx, fa) {
            b = x;
        } else {
            a = x;
            fa = fx;
        }
        let width = (b - a).abs();
        if width <= 4.0 * f64::EPSILON * a.abs().max(b.abs()).max(f64::MIN_POSITIVE) {
            best.iterations = it;
            return Some(best);
        }
        let newton = x - fx / dfx;
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        x = if dfx != 0.0 && newton > lo && newton < hi { newton } else { 0.5 * (a + b) };
    }
    (best.residual <= tol).then_some(best)
}

/// Root of `f` with the smallest magnitude in `[-bound, bound]`.
///
/// The interval is scanned symmetrically outwards from zero in `steps`
/// increments; the first sign change found is refined with
/// [`newton_bisection`]. Returns `None` if no sign change exists.
pub fn smallest_root<F>(f: F, bound: f64, tol: f64, max_iter: usize, steps: usize) -> Option<Root>
where
    F: Fn(f64) -> (f64, f64),
{
    let (f0, _) = f(0.0);
    if f0.abs() <= tol {
        return Some(Root { x: 0.0, residual: f0.abs(), iterations: 0 });
    }
    let (mut prev_pos, mut prev_neg) = (f0, f0);
    let dt = bound / steps as f64;
    for i in 1..=steps {
        let t = dt * i as f64;
        let (fp, _) = f(t);
        let (fn_, _) = f(-t);
        let pos = (opposite(prev_pos, fp) || fp.abs() <= tol)
            .then(|| newton_bisection(&f, t - dt, t, tol, max_iter))
            .flatten();
        let neg = (opposite(prev_neg, fn_) || fn_.abs() <= tol)
            .then(|| newton_bisection(&f, -t + dt, -t, tol, max_iter))
            .flatten();
        match (pos, neg) {
            (Some(p), Some(n)) => return Some(if p.x.abs() <= n.x.abs() { p } else { n }),
            (Some(r), None) | (None, Some(r)) => return Some(r),
            (None, None) => {}
        }
        prev_pos = fp;
        prev_neg = fn_;
    }
    None
}
