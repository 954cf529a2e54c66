//! Dense bivariate polynomials in reference coordinates `(xi, eta)`.
//!
//! All shape functions live in this representation, which makes
//! derivatives of any order exact and cheap.

use std::ops::{Add, Mul, Neg, Sub};

/// Highest power stored per variable.
pub const MAX_POWER: usize = 4;
const N: usize = MAX_POWER + 1;

/// `sum c[i][j] xi^i eta^j` with `i, j <= MAX_POWER`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Poly2 {
    c: [[f64; N]; N],
}

impl Default for Poly2 {
    fn default() -> Self {
        Self::zero()
    }
}

impl Poly2 {
    pub const fn zero() -> Self {
        Self { c: [[0.0; N]; N] }
    }

    pub fn constant(a: f64) -> Self {
        let mut p = Self::zero();
        p.c[0][0] = a;
        p
    }

    pub fn xi() -> Self {
        let mut p = Self::zero();
        p.c[1][0] = 1.0;
        p
    }

    pub fn eta() -> Self {
        let mut p = Self::zero();
        p.c[0][1] = 1.0;
        p
    }

    /// Barycentric coordinate `i` of the reference triangle
    /// `(0,0), (1,0), (0,1)`.
    pub fn barycentric(i: usize) -> Self {
        match i {
            0 => Self::constant(1.0) - Self::xi() - Self::eta(),
            1 => Self::xi(),
            2 => Self::eta(),
            _ => panic!("barycentric index {i} out of range"),
        }
    }

    pub fn coeff(&self, i: usize, j: usize) -> f64 {
        self.c[i][j]
    }

    /// Total degree (0 for the zero polynomial).
    pub fn degree(&self) -> usize {
        let mut d = 0;
        for i in 0..N {
            for j in 0..N {
                if self.c[i][j] != 0.0 {
                    d = d.max(i + j);
                }
            }
        }
        d
    }

    pub fn scale(mut self, a: f64) -> Self {
        for row in self.c.iter_mut() {
            for v in row.iter_mut() {
                *v *= a;
            }
        }
        self
    }

    /// `self += a * other`
    pub fn axpy(&mut self, a: f64, other: &Poly2) {
        for i in 0..N {
            for j in 0..N {
                self.c[i][j] += a * other.c[i][j];
            }
        }
    }

    pub fn d_xi(&self) -> Self {
        let mut p = Self::zero();
        for i in 1..N {
            for j in 0..N {
                p.c[i - 1][j] = i as f64 * self.c[i][j];
            }
        }
        p
    }

    pub fn d_eta(&self) -> Self {
        let mut p = Self::zero();
        for i in 0..N {
            for j in 1..N {
                p.c[i][j - 1] = j as f64 * self.c[i][j];
            }
        }
        p
    }

    /// Directional derivative `m . grad` in reference coordinates.
    pub fn directional(&self, m: [f64; 2]) -> Self {
        let mut p = self.d_xi().scale(m[0]);
        p.axpy(m[1], &self.d_eta());
        p
    }

    /// Product with all terms of total degree above `deg` dropped.
    pub fn mul_truncated(&self, rhs: &Poly2, deg: usize) -> Poly2 {
        let mut p = Poly2::zero();
        for i in 0..N {
            for j in 0..N - i {
                let a = self.c[i][j];
                if a == 0.0 || i + j > deg {
                    continue;
                }
                for k in 0..N {
                    for l in 0..N - k {
                        let b = rhs.c[k][l];
                        if b != 0.0 && i + j + k + l <= deg {
                            p.c[i + k][j + l] += a * b;
                        }
                    }
                }
            }
        }
        p
    }

    /// Coefficients of `s -> p(at + s)`.
    pub fn shifted(&self, at: [f64; 2]) -> Poly2 {
        let mut out = Poly2::zero();
        let mut dx = *self;
        let mut fa = 1.0;
        for a in 0..N {
            let mut d = dx;
            let mut fb = 1.0;
            for b in 0..N - a {
                out.c[a][b] = d.eval(at) / (fa * fb);
                d = d.d_eta();
                fb *= (b + 1) as f64;
            }
            dx = dx.d_xi();
            fa *= (a + 1) as f64;
        }
        out
    }

    pub fn eval(&self, p: [f64; 2]) -> f64 {
        let mut eta_pow = [1.0; N];
        for j in 1..N {
            eta_pow[j] = eta_pow[j - 1] * p[1];
        }
        // Horner in xi over rows
        let mut acc = 0.0;
        for i in (0..N).rev() {
            let row: f64 = self.c[i].iter().zip(&eta_pow).map(|(c, e)| c * e).sum();
            acc = acc * p[0] + row;
        }
        acc
    }

    /// Value and reference gradient in one pass.
    pub fn eval_with_grad(&self, p: [f64; 2]) -> (f64, [f64; 2]) {
        let mut xp = [1.0; N];
        let mut ep = [1.0; N];
        for k in 1..N {
            xp[k] = xp[k - 1] * p[0];
            ep[k] = ep[k - 1] * p[1];
        }
        let (mut v, mut gx, mut ge) = (0.0, 0.0, 0.0);
        for i in 0..N {
            for j in 0..N {
                let c = self.c[i][j];
                if c == 0.0 {
                    continue;
                }
                v += c * xp[i] * ep[j];
                if i > 0 {
                    gx += c * i as f64 * xp[i - 1] * ep[j];
                }
                if j > 0 {
                    ge += c * j as f64 * xp[i] * ep[j - 1];
                }
            }
        }
        (v, [gx, ge])
    }
}

impl Add for Poly2 {
    type Output = Poly2;
    fn add(mut self, rhs: Poly2) -> Poly2 {
        self.axpy(1.0, &rhs);
        self
    }
}

impl Sub for Poly2 {
    type Output = Poly2;
    fn sub(mut self, rhs: Poly2) -> Poly2 {
        self.axpy(-1.0, &rhs);
        self
    }
}

impl Neg for Poly2 {
    type Output = Poly2;
    fn neg(self) -> Poly2 {
        self.scale(-1.0)
    }
}

impl Mul for Poly2 {
    type Output = Poly2;
    fn mul(self, rhs: Poly2) -> Poly2 {
        let mut p = Poly2::zero();
        for i in 0..N {
            for j in 0..N {
                let a = self.c[i][j];
                if a == 0.0 {
                    continue;
                }
                for k in 0..N {
                    for l in 0..N {
                        let b = rhs.c[k][l];
                        if b == 0.0 {
                            continue;
                        }
                        assert!(
                            i + k < N && j + l < N,
                            "polynomial product exceeds storable power {MAX_POWER}"
                        );
                        p.c[i + k][j + l] += a * b;
                    }
                }
            }
        }
        p
    }
}

/// Univariate polynomial helpers used to build the edge modes.
pub(crate) mod univariate {
    /// Legendre polynomial coefficients (ascending powers) for degrees `0..=n`.
    pub fn legendre(n: usize) -> Vec<Vec<f64>> {
        let mut out: Vec<Vec<f64>> = vec![vec![1.0]];
        if n >= 1 {
            out.push(vec![0.0, 1.0]);
        }
        for m in 1..n {
            // (m+1) P_{m+1} = (2m+1) x P_m - m P_{m-1}
            let mut next = vec![0.0; m + 2];
            for (i, &c) in out[m].iter().enumerate() {
                next[i + 1] += (2 * m + 1) as f64 * c;
            }
            for (i, &c) in out[m - 1].iter().enumerate() {
                next[i] -= m as f64 * c;
            }
            for c in next.iter_mut() {
                *c /= (m + 1) as f64;
            }
            out.push(next);
        }
        out
    }

    /// Integrated Legendre polynomial `L_p = (P_p - P_{p-2}) / (2p - 1)`, `p >= 2`.
    /// Vanishes at `x = +-1`.
    pub fn integrated_legendre(p: usize) -> Vec<f64> {
        assert!(p >= 2);
        let leg = legendre(p);
        let mut out = vec![0.0; p + 1];
        for (i, &c) in leg[p].iter().enumerate() {
            out[i] += c;
        }
        for (i, &c) in leg[p - 2].iter().enumerate() {
            out[i] -= c;
        }
        let s = (2 * p - 1) as f64;
        out.iter_mut().for_each(|c| *c /= s);
        out
    }
}
