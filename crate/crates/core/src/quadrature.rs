//! Quadrature on reference simplices.
//!
//! Rules are conical products of Gauss-Legendre rules with the collapse
//! Jacobian folded into the weights.

/// Points and weights on the reference simplex `{x_i >= 0, sum x_i <= 1}`.
#[derive(Clone, Debug)]
pub struct QuadratureRule {
    pub dim: usize,
    pub points: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
}

/// Gauss-Legendre nodes and weights on `[0, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, z);
        dp = if d != 0.0 { d } else { dp };
        x[i] = 0.5 * (1.0 - z);
        w[i] = 1.0 / ((1.0 - z * z) * dp * dp);
    }
    (x, w)
}

fn legendre(n: usize, z: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, z);
    if n == 0 {
        return (1.0, 0.0);
    }
    for j in 2..=n {
        let p2 = ((2 * j - 1) as f64 * z * p1 - (j - 1) as f64 * p0) / j as f64;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}

impl QuadratureRule {
    /// A rule on the reference simplex of dimension `dim` (0 to 3) exact for
    /// polynomials of total degree `degree`.
    pub fn simplex(dim: usize, degree: usize) -> Self {
        let npts = |extra: usize| (degree + extra + 2) / 2;
        match dim {
            0 => Self {
                dim,
                points: vec![[0.0; 3]],
                weights: vec![1.0],
            },
            1 => {
                let (x, w) = gauss_legendre(npts(0).max(1));
                Self {
                    dim,
                    points: x.iter().map(|&t| [t, 0.0, 0.0]).collect(),
                    weights: w,
                }
            }
            2 => {
                let (xu, wu) = gauss_legendre(npts(1));
                let (xv, wv) = gauss_legendre(npts(0).max(1));
                let mut points = Vec::new();
                let mut weights = Vec::new();
                for (u, a) in xu.iter().zip(&wu) {
                    for (v, b) in xv.iter().zip(&wv) {
                        points.push([*u, v * (1.0 - u), 0.0]);
                        weights.push(a * b * (1.0 - u));
                    }
                }
                Self {
                    dim,
                    points,
                    weights,
                }
            }
            3 => {
                let (xu, wu) = gauss_legendre(npts(2));
                let (xv, wv) = gauss_legendre(npts(1));
                let (xw, ww) = gauss_legendre(npts(0).max(1));
                let mut points = Vec::new();
                let mut weights = Vec::new();
                for (u, a) in xu.iter().zip(&wu) {
                    for (v, b) in xv.iter().zip(&wv) {
                        for (w, c) in xw.iter().zip(&ww) {
                            let s = (1.0 - u) * (1.0 - v);
                            points.push([*u, v * (1.0 - u), w * s]);
                            weights.push(a * b * c * (1.0 - u) * s);
                        }
                    }
                }
                Self {
                    dim,
                    points,
                    weights,
                }
            }
            _ => panic!("no quadrature for dimension {dim}"),
        }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::{exponents_up_to, Poly};

    #[test]
    fn gauss_legendre_weights_sum_to_one() {
        for n in 1..12 {
            let (x, w) = gauss_legendre(n);
            assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-14);
            assert!(x.iter().all(|&t| t > 0.0 && t < 1.0));
        }
    }

    #[test]
    fn exact_for_all_monomials() {
        for dim in 1..=3 {
            for degree in 0..=12 {
                let rule = QuadratureRule::simplex(dim, degree);
                for e in exponents_up_to(dim, degree) {
                    let p = Poly::monomial(e, 1.0);
                    let q: f64 = rule
                        .points
                        .iter()
                        .zip(&rule.weights)
                        .map(|(x, w)| w * p.eval(x))
                        .sum();
                    let exact = p.integrate_reference(dim);
                    assert!(
                        (q - exact).abs() < 1e-14,
                        "dim {dim} degree {degree} exponent {e:?}: {q} vs {exact}"
                    );
                }
            }
        }
    }
}
