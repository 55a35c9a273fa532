//! Truncated multivariate Taylor series in (t, x, y) up to total degree
//! four, and the scalar trait the closed-form fields are written against.

use std::ops::{Add, Div, Mul, Neg, Sub};
use std::sync::OnceLock;

use num_complex::Complex64;

/// Arithmetic needed by the closed-form reference fields.
pub trait Scalar:
    Copy
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Add<f64, Output = Self>
    + Sub<f64, Output = Self>
    + Mul<f64, Output = Self>
{
    fn cst(v: f64) -> Self;
    fn sin(self) -> Self;
    fn cos(self) -> Self;
}

impl Scalar for f64 {
    fn cst(v: f64) -> Self {
        v
    }
    fn sin(self) -> Self {
        f64::sin(self)
    }
    fn cos(self) -> Self {
        f64::cos(self)
    }
}

impl Scalar for Complex64 {
    fn cst(v: f64) -> Self {
        Complex64::new(v, 0.0)
    }
    fn sin(self) -> Self {
        Complex64::sin(self)
    }
    fn cos(self) -> Self {
        Complex64::cos(self)
    }
}

pub const ORDER: usize = 4;
pub const N_COEF: usize = 35;

struct Tables {
    exps: [[usize; 3]; N_COEF],
    index: [[[usize; ORDER + 1]; ORDER + 1]; ORDER + 1],
    products: Vec<(usize, usize, usize)>,
}

fn tables() -> &'static Tables {
    static T: OnceLock<Tables> = OnceLock::new();
    T.get_or_init(|| {
        let mut exps = [[0; 3]; N_COEF];
        let mut index = [[[usize::MAX; ORDER + 1]; ORDER + 1]; ORDER + 1];
        let mut n = 0;
        for deg in 0..=ORDER {
            for i in (0..=deg).rev() {
                for j in (0..=deg - i).rev() {
                    let k = deg - i - j;
                    exps[n] = [i, j, k];
                    index[i][j][k] = n;
                    n += 1;
                }
            }
        }
        let mut products = Vec::new();
        for a in 0..N_COEF {
            for b in 0..N_COEF {
                let (ea, eb) = (exps[a], exps[b]);
                let e = [ea[0] + eb[0], ea[1] + eb[1], ea[2] + eb[2]];
                if e[0] + e[1] + e[2] <= ORDER {
                    products.push((a, b, index[e[0]][e[1]][e[2]]));
                }
            }
        }
        Tables { exps, index, products }
    })
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// Taylor coefficients of a function of (t, x, y) about a point; `valid`
/// is the highest total degree that is still exact after differentiation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet {
    pub c: [f64; N_COEF],
    pub valid: usize,
}

impl Jet {
    pub fn constant(v: f64) -> Self {
        let mut c = [0.0; N_COEF];
        c[0] = v;
        Jet { c, valid: ORDER }
    }

    /// Independent variable number `var` (0 = t, 1 = x, 2 = y) at value `v`.
    pub fn var(v: f64, var: usize) -> Self {
        let mut j = Jet::constant(v);
        let mut e = [0; 3];
        e[var] = 1;
        j.c[tables().index[e[0]][e[1]][e[2]]] = 1.0;
        j
    }

    /// Seeds for (t, x, y).
    pub fn seeds(t: f64, x: f64, y: f64) -> (Jet, Jet, Jet) {
        (Jet::var(t, 0), Jet::var(x, 1), Jet::var(y, 2))
    }

    pub fn value(&self) -> f64 {
        self.c[0]
    }

    /// Partial derivative with multi-index `[dt, dx, dy]` at the expansion point.
    pub fn partial(&self, e: [usize; 3]) -> f64 {
        let deg = e[0] + e[1] + e[2];
        assert!(deg <= self.valid, "derivative of degree {deg} beyond the exact range {}", self.valid);
        self.c[tables().index[e[0]][e[1]][e[2]]] * factorial(e[0]) * factorial(e[1]) * factorial(e[2])
    }

    /// Derivative with respect to variable `var`, as a jet.
    pub fn d(&self, var: usize) -> Jet {
        assert!(self.valid > 0);
        let t = tables();
        let mut c = [0.0; N_COEF];
        for (n, e) in t.exps.iter().enumerate() {
            let mut up = *e;
            up[var] += 1;
            if up[0] + up[1] + up[2] <= ORDER {
                c[n] = self.c[t.index[up[0]][up[1]][up[2]]] * up[var] as f64;
            }
        }
        Jet { c, valid: self.valid - 1 }
    }

    pub fn dt(&self) -> Jet {
        self.d(0)
    }
    pub fn dx(&self) -> Jet {
        self.d(1)
    }
    pub fn dy(&self) -> Jet {
        self.d(2)
    }

    /// `f(self)` given `f` and its first four derivatives at the constant term.
    fn compose(&self, d: [f64; ORDER + 1]) -> Jet {
        let mut h = *self;
        h.c[0] = 0.0;
        let mut out = Jet::constant(d[0]);
        out.valid = self.valid;
        let mut pow = Jet::constant(1.0);
        for (k, dk) in d.iter().enumerate().skip(1) {
            pow = pow * h;
            let s = dk / factorial(k);
            for n in 0..N_COEF {
                out.c[n] += s * pow.c[n];
            }
        }
        out
    }

    pub fn recip(&self) -> Jet {
        let a = self.c[0];
        let r = 1.0 / a;
        self.compose([r, -r * r, 2.0 * r.powi(3), -6.0 * r.powi(4), 24.0 * r.powi(5)])
    }
}

impl Add for Jet {
    type Output = Jet;
    fn add(mut self, o: Jet) -> Jet {
        for n in 0..N_COEF {
            self.c[n] += o.c[n];
        }
        self.valid = self.valid.min(o.valid);
        self
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(mut self, o: Jet) -> Jet {
        for n in 0..N_COEF {
            self.c[n] -= o.c[n];
        }
        self.valid = self.valid.min(o.valid);
        self
    }
}

impl Mul for Jet {
    type Output = Jet;
    fn mul(self, o: Jet) -> Jet {
        let mut c = [0.0; N_COEF];
        for &(a, b, k) in &tables().products {
            c[k] += self.c[a] * o.c[b];
        }
        Jet {
            c,
            valid: self.valid.min(o.valid),
        }
    }
}

impl Div for Jet {
    type Output = Jet;
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn div(self, o: Jet) -> Jet {
        self * o.recip()
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(mut self) -> Jet {
        for v in self.c.iter_mut() {
            *v = -*v;
        }
        self
    }
}

impl Add<f64> for Jet {
    type Output = Jet;
    fn add(mut self, o: f64) -> Jet {
        self.c[0] += o;
        self
    }
}

impl Sub<f64> for Jet {
    type Output = Jet;
    fn sub(mut self, o: f64) -> Jet {
        self.c[0] -= o;
        self
    }
}

impl Mul<f64> for Jet {
    type Output = Jet;
    fn mul(mut self, o: f64) -> Jet {
        for v in self.c.iter_mut() {
            *v *= o;
        }
        self
    }
}

impl Scalar for Jet {
    fn cst(v: f64) -> Self {
        Jet::constant(v)
    }
    fn sin(self) -> Self {
        let (s, c) = self.c[0].sin_cos();
        self.compose([s, c, -s, -c, s])
    }
    fn cos(self) -> Self {
        let (s, c) = self.c[0].sin_cos();
        self.compose([c, -s, -c, s, c])
    }
}
