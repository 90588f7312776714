//! Multivariate polynomials in up to three variables.
//!
//! Used to build reference-cell bases symbolically so that derivatives and
//! reference-cell moments are exact.

use std::collections::BTreeMap;

/// Exponent triple; unused variables carry exponent zero.
pub type Exponent = [u8; 3];

/// A polynomial stored as a sparse map from exponents to coefficients.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct Poly {
    terms: BTreeMap<Exponent, f64>,
}

impl Poly {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: f64) -> Self {
        Self::monomial([0, 0, 0], c)
    }

    /// The coordinate function `x_i`.
    pub fn var(i: usize) -> Self {
        let mut e = [0u8; 3];
        e[i] = 1;
        Self::monomial(e, 1.0)
    }

    pub fn monomial(e: Exponent, c: f64) -> Self {
        let mut terms = BTreeMap::new();
        if c != 0.0 {
            terms.insert(e, c);
        }
        Self { terms }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Exponent, &f64)> {
        self.terms.iter()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn degree(&self) -> usize {
        self.terms
            .keys()
            .map(|e| e.iter().map(|&a| a as usize).sum())
            .max()
            .unwrap_or(0)
    }

    pub fn add(&self, other: &Poly) -> Poly {
        self.axpy(1.0, other)
    }

    pub fn sub(&self, other: &Poly) -> Poly {
        self.axpy(-1.0, other)
    }

    /// `self + a * other`
    pub fn axpy(&self, a: f64, other: &Poly) -> Poly {
        let mut terms = self.terms.clone();
        for (e, c) in &other.terms {
            *terms.entry(*e).or_insert(0.0) += a * c;
        }
        terms.retain(|_, c| *c != 0.0);
        Poly { terms }
    }

    pub fn scale(&self, a: f64) -> Poly {
        if a == 0.0 {
            return Poly::zero();
        }
        Poly {
            terms: self.terms.iter().map(|(e, c)| (*e, a * c)).collect(),
        }
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        let mut terms = BTreeMap::new();
        for (e1, c1) in &self.terms {
            for (e2, c2) in &other.terms {
                let e = [e1[0] + e2[0], e1[1] + e2[1], e1[2] + e2[2]];
                *terms.entry(e).or_insert(0.0) += c1 * c2;
            }
        }
        terms.retain(|_, c: &mut f64| *c != 0.0);
        Poly { terms }
    }

    /// Partial derivative with respect to `x_i`.
    pub fn deriv(&self, i: usize) -> Poly {
        let mut terms = BTreeMap::new();
        for (e, c) in &self.terms {
            if e[i] > 0 {
                let mut f = *e;
                f[i] -= 1;
                *terms.entry(f).or_insert(0.0) += c * e[i] as f64;
            }
        }
        Poly { terms }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        let mut s = 0.0;
        for (e, c) in &self.terms {
            let mut t = *c;
            for (i, &a) in e.iter().enumerate() {
                if a > 0 {
                    t *= x[i].powi(a as i32);
                }
            }
            s += t;
        }
        s
    }

    /// Exact integral over the reference simplex of dimension `dim`,
    /// using `int x^a = a! / (|a| + dim)!`.
    pub fn integrate_reference(&self, dim: usize) -> f64 {
        self.terms
            .iter()
            .map(|(e, c)| {
                let num: f64 = e.iter().map(|&a| factorial(a as usize)).product();
                let total: usize = e.iter().map(|&a| a as usize).sum();
                c * num / factorial(total + dim)
            })
            .sum()
    }
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|i| i as f64).product()
}

/// All exponents in `dim` variables with total degree exactly `deg`, in a
/// fixed graded order.
pub fn homogeneous_exponents(dim: usize, deg: usize) -> Vec<Exponent> {
    let mut out = Vec::new();
    match dim {
        1 => out.push([deg as u8, 0, 0]),
        2 => {
            for a in (0..=deg).rev() {
                out.push([a as u8, (deg - a) as u8, 0]);
            }
        }
        3 => {
            for a in (0..=deg).rev() {
                for b in (0..=deg - a).rev() {
                    out.push([a as u8, b as u8, (deg - a - b) as u8]);
                }
            }
        }
        _ => panic!("dimension {dim} not supported"),
    }
    out
}

/// All exponents in `dim` variables with total degree at most `deg`.
pub fn exponents_up_to(dim: usize, deg: usize) -> Vec<Exponent> {
    (0..=deg)
        .flat_map(|p| homogeneous_exponents(dim, p))
        .collect()
}

/// Dimension of `P_k` in `d` variables, `C(k + d, d)`.
pub fn dim_pk(d: usize, k: usize) -> usize {
    let mut n = 1usize;
    for i in 1..=d {
        n = n * (k + i) / i;
    }
    n
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_integrals() {
        // area and centroid moments of the unit triangle and tetrahedron
        assert!((Poly::constant(1.0).integrate_reference(2) - 0.5).abs() < 1e-15);
        assert!((Poly::var(0).integrate_reference(2) - 1.0 / 6.0).abs() < 1e-15);
        assert!((Poly::constant(1.0).integrate_reference(3) - 1.0 / 6.0).abs() < 1e-15);
        let xy = Poly::var(0).mul(&Poly::var(1));
        assert!((xy.integrate_reference(2) - 1.0 / 24.0).abs() < 1e-15);
    }

    #[test]
    fn product_and_derivative() {
        let p = Poly::var(0).add(&Poly::constant(2.0)); // x + 2
        let q = p.mul(&p); // x^2 + 4x + 4
        assert_eq!(q.degree(), 2);
        assert!((q.eval(&[1.0, 0.0, 0.0]) - 9.0).abs() < 1e-15);
        let dq = q.deriv(0);
        assert!((dq.eval(&[1.0, 5.0, 0.0]) - 6.0).abs() < 1e-15);
        assert!(q.deriv(1).is_zero());
    }

    #[test]
    fn exponent_counts() {
        assert_eq!(exponents_up_to(2, 3).len(), dim_pk(2, 3));
        assert_eq!(exponents_up_to(3, 2).len(), dim_pk(3, 2));
        assert_eq!(homogeneous_exponents(3, 2).len(), 6);
    }
}
