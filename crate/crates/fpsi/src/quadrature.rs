//! Gauss rules on the unit interval and collapsed (conical product) rules
//! on triangles. Weights are normalized to sum to one.

/// Gauss-Legendre nodes and weights on [0, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // p1 = P_n(z), p0 = P_{n-1}(z)
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = 0.5 * (1.0 - z);
        w[i] = 1.0 / ((1.0 - z * z) * dp * dp);
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|a, b| x[*a].partial_cmp(&x[*b]).unwrap());
    (idx.iter().map(|&i| x[i]).collect(), idx.iter().map(|&i| w[i]).collect())
}

/// Rule on [0, 1] exact for polynomials of degree <= `order`.
#[derive(Debug, Clone)]
pub struct LineRule {
    pub order: usize,
    pub points: Vec<f64>,
    pub weights: Vec<f64>,
}

impl LineRule {
    pub fn new(order: usize) -> Self {
        let n = order / 2 + 1;
        let (points, weights) = gauss_legendre(n);
        LineRule { order, points, weights }
    }
}

/// Rule on the reference triangle in barycentric coordinates, exact for
/// polynomials of total degree <= `order`.
#[derive(Debug, Clone)]
pub struct QuadratureRule {
    pub order: usize,
    pub points: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn triangle(order: usize) -> Self {
        let n = (order + 2).div_ceil(2).max(1);
        let (xs, ws) = gauss_legendre(n);
        let mut points = Vec::with_capacity(n * n);
        let mut weights = Vec::with_capacity(n * n);
        for (u, wu) in xs.iter().zip(&ws) {
            for (v, wv) in xs.iter().zip(&ws) {
                let s = *u;
                let t = v * (1.0 - u);
                points.push([1.0 - s - t, s, t]);
                weights.push(2.0 * wu * wv * (1.0 - u));
            }
        }
        QuadratureRule { order, points, weights }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn binom_integral(a: i32, b: i32) -> f64 {
        // int_T x^a y^b over the unit right triangle = a! b! / (a+b+2)!
        let f = |k: i32| (1..=k).map(|i| i as f64).product::<f64>();
        f(a) * f(b) / f(a + b + 2)
    }

    #[test]
    fn line_rule_exactness() {
        for order in 0..14 {
            let r = LineRule::new(order);
            for d in 0..=order {
                let q: f64 = r.points.iter().zip(&r.weights).map(|(x, w)| w * x.powi(d as i32)).sum();
                assert!((q - 1.0 / (d as f64 + 1.0)).abs() < 1e-14, "order {order} degree {d}");
            }
        }
    }

    #[test]
    fn triangle_rule_exactness() {
        for order in 0..12 {
            let r = QuadratureRule::triangle(order);
            assert!(r.weights.iter().all(|w| *w > 0.0));
            for a in 0..=order as i32 {
                for b in 0..=(order as i32 - a) {
                    let q: f64 = r
                        .points
                        .iter()
                        .zip(&r.weights)
                        .map(|(l, w)| 0.5 * w * l[1].powi(a) * l[2].powi(b))
                        .sum();
                    assert!((q - binom_integral(a, b)).abs() < 1e-14, "order {order} x^{a} y^{b}");
                }
            }
        }
    }
}
