//! Exact polynomial calculus in `(x_1..x_n, y_1..y_n, tau)`.
//!
//! Used as an oracle for the discrete operators: a polynomial of low degree
//! is differentiated monomial by monomial, with no rounding beyond the
//! dyadic coefficients themselves.

use std::collections::BTreeMap;
use std::ops::{Add, Mul, Sub};

use super::{GroupPoint, HeisenbergParams};
use crate::error::{Error, Result};

/// Highest total degree accepted by [`sublaplacian_symbolic`].
pub const MAX_ORACLE_DEGREE: u32 = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Var {
    X(usize),
    Y(usize),
    Tau,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial {
    n: usize,
    terms: BTreeMap<Vec<u32>, f64>,
}

impl Polynomial {
    pub fn zero(n: usize) -> Self {
        Polynomial {
            n,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(n: usize, c: f64) -> Self {
        Polynomial::monomial(n, c, &[])
    }

    /// `coeff * prod var^power`; repeated variables multiply.
    pub fn monomial(n: usize, coeff: f64, powers: &[(Var, u32)]) -> Self {
        let mut exps = vec![0u32; 2 * n + 1];
        for &(v, k) in powers {
            exps[var_index(n, v)] += k;
        }
        let mut p = Polynomial::zero(n);
        p.insert(exps, coeff);
        p
    }

    pub fn var(n: usize, v: Var) -> Self {
        Polynomial::monomial(n, 1.0, &[(v, 1)])
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn degree(&self) -> u32 {
        self.terms
            .keys()
            .map(|e| e.iter().sum::<u32>())
            .max()
            .unwrap_or(0)
    }

    pub fn terms(&self) -> impl Iterator<Item = (&[u32], f64)> {
        self.terms.iter().map(|(e, c)| (e.as_slice(), *c))
    }

    fn insert(&mut self, exps: Vec<u32>, coeff: f64) {
        if coeff == 0.0 {
            return;
        }
        let entry = self.terms.entry(exps).or_insert(0.0);
        *entry += coeff;
        if *entry == 0.0 {
            self.terms.retain(|_, c| *c != 0.0);
        }
    }

    pub fn scale(&self, c: f64) -> Self {
        let mut out = Polynomial::zero(self.n);
        for (e, v) in &self.terms {
            out.insert(e.clone(), v * c);
        }
        out
    }

    pub fn derivative(&self, v: Var) -> Self {
        let idx = var_index(self.n, v);
        let mut out = Polynomial::zero(self.n);
        for (e, c) in &self.terms {
            if e[idx] == 0 {
                continue;
            }
            let mut d = e.clone();
            d[idx] -= 1;
            out.insert(d, c * e[idx] as f64);
        }
        out
    }

    pub fn mul_var(&self, v: Var) -> Self {
        let idx = var_index(self.n, v);
        let mut out = Polynomial::zero(self.n);
        for (e, c) in &self.terms {
            let mut m = e.clone();
            m[idx] += 1;
            out.insert(m, *c);
        }
        out
    }

    pub fn eval(&self, eta: &GroupPoint) -> f64 {
        assert_eq!(eta.dim(), self.n, "point dimension must match polynomial");
        self.terms
            .iter()
            .map(|(e, c)| {
                let mut v = *c;
                for j in 0..self.n {
                    v *= eta.x[j].powi(e[j] as i32) * eta.y[j].powi(e[self.n + j] as i32);
                }
                v * eta.tau.powi(e[2 * self.n] as i32)
            })
            .sum()
    }

    /// Left-invariant field `X_j = d/dx_j - (y_j / 2) d/dtau`.
    pub fn apply_x(&self, j: usize) -> Self {
        self.derivative(Var::X(j)) - self.derivative(Var::Tau).mul_var(Var::Y(j)).scale(0.5)
    }

    /// Left-invariant field `Y_j = d/dy_j + (x_j / 2) d/dtau`.
    pub fn apply_y(&self, j: usize) -> Self {
        self.derivative(Var::Y(j)) + self.derivative(Var::Tau).mul_var(Var::X(j)).scale(0.5)
    }

    /// Largest coefficient difference against another polynomial.
    pub fn max_coeff_diff(&self, other: &Polynomial) -> f64 {
        let diff = self.clone() - other.clone();
        diff.terms.values().fold(0.0, |m, c| m.max(c.abs()))
    }
}

fn var_index(n: usize, v: Var) -> usize {
    match v {
        Var::X(j) => {
            assert!(j < n, "x index out of range");
            j
        }
        Var::Y(j) => {
            assert!(j < n, "y index out of range");
            n + j
        }
        Var::Tau => 2 * n,
    }
}

impl Add for Polynomial {
    type Output = Polynomial;
    fn add(mut self, rhs: Polynomial) -> Polynomial {
        assert_eq!(self.n, rhs.n);
        for (e, c) in rhs.terms {
            self.insert(e, c);
        }
        self
    }
}

impl Sub for Polynomial {
    type Output = Polynomial;
    fn sub(self, rhs: Polynomial) -> Polynomial {
        self + rhs.scale(-1.0)
    }
}

impl Mul for &Polynomial {
    type Output = Polynomial;
    fn mul(self, rhs: &Polynomial) -> Polynomial {
        assert_eq!(self.n, rhs.n);
        let mut out = Polynomial::zero(self.n);
        for (ea, ca) in &self.terms {
            for (eb, cb) in &rhs.terms {
                let e = ea.iter().zip(eb).map(|(a, b)| a + b).collect();
                out.insert(e, ca * cb);
            }
        }
        out
    }
}

/// Sub-Laplacian in expanded form,
/// `Δ_x + Δ_y + (|x|^2 + |y|^2)/4 ∂²_τ + Σ_j (x_j ∂²_{y_j τ} - y_j ∂²_{x_j τ})`.
pub fn sublaplacian_symbolic(poly: &Polynomial, params: &HeisenbergParams) -> Result<Polynomial> {
    check_oracle_input(poly, params)?;
    let n = poly.n;
    let p_tt = poly.derivative(Var::Tau).derivative(Var::Tau);
    let mut out = Polynomial::zero(n);
    for j in 0..n {
        out = out
            + poly.derivative(Var::X(j)).derivative(Var::X(j))
            + poly.derivative(Var::Y(j)).derivative(Var::Y(j))
            + p_tt.mul_var(Var::X(j)).mul_var(Var::X(j)).scale(0.25)
            + p_tt.mul_var(Var::Y(j)).mul_var(Var::Y(j)).scale(0.25)
            + poly
                .derivative(Var::Y(j))
                .derivative(Var::Tau)
                .mul_var(Var::X(j))
            - poly
                .derivative(Var::X(j))
                .derivative(Var::Tau)
                .mul_var(Var::Y(j));
    }
    Ok(out)
}

/// Sub-Laplacian as the sum of squares `Σ_j X_j X_j + Y_j Y_j`.
pub fn sublaplacian_composed(poly: &Polynomial, params: &HeisenbergParams) -> Result<Polynomial> {
    check_oracle_input(poly, params)?;
    let mut out = Polynomial::zero(poly.n);
    for j in 0..poly.n {
        out = out + poly.apply_x(j).apply_x(j) + poly.apply_y(j).apply_y(j);
    }
    Ok(out)
}

fn check_oracle_input(poly: &Polynomial, params: &HeisenbergParams) -> Result<()> {
    if poly.n != params.n() {
        return Err(Error::invalid(format!(
            "polynomial lives on H_{} but params describe H_{}",
            poly.n,
            params.n()
        )));
    }
    if poly.degree() > MAX_ORACLE_DEGREE {
        return Err(Error::invalid(format!(
            "polynomial degree {} exceeds the oracle limit {MAX_ORACLE_DEGREE}",
            poly.degree()
        )));
    }
    if poly.terms.values().any(|c| !c.is_finite()) {
        return Err(Error::invalid("polynomial has non-finite coefficients"));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::derived_exponents;
    use proptest::prelude::*;

    fn h1() -> HeisenbergParams {
        derived_exponents(1).unwrap()
    }

    #[test]
    fn hand_differentiated_examples() {
        let p = h1();
        let x2 = Polynomial::monomial(1, 1.0, &[(Var::X(0), 2)]);
        assert_eq!(sublaplacian_symbolic(&x2, &p).unwrap(), Polynomial::constant(1, 2.0));

        let tau = Polynomial::var(1, Var::Tau);
        assert!(sublaplacian_symbolic(&tau, &p).unwrap().is_zero());

        let xtau = Polynomial::monomial(1, 1.0, &[(Var::X(0), 1), (Var::Tau, 1)]);
        assert_eq!(
            sublaplacian_symbolic(&xtau, &p).unwrap(),
            Polynomial::var(1, Var::Y(0)).scale(-1.0)
        );
        // X(x tau) = tau - x y / 2, X^2(x tau) = -y
        let x_once = xtau.apply_x(0);
        let expected = Polynomial::var(1, Var::Tau)
            - Polynomial::monomial(1, 0.5, &[(Var::X(0), 1), (Var::Y(0), 1)]);
        assert_eq!(x_once, expected);
        assert_eq!(x_once.apply_x(0), Polynomial::var(1, Var::Y(0)).scale(-1.0));
        assert!(xtau.apply_y(0).apply_y(0).is_zero());
    }

    #[test]
    fn commutator_is_d_tau() {
        // [X, Y] = d/dtau on a generic cubic
        let p = Polynomial::monomial(1, 1.0, &[(Var::X(0), 1), (Var::Y(0), 1), (Var::Tau, 1)])
            + Polynomial::monomial(1, 3.0, &[(Var::Tau, 2)]);
        let xy = p.apply_y(0).apply_x(0);
        let yx = p.apply_x(0).apply_y(0);
        assert_eq!(xy - yx, p.derivative(Var::Tau));
    }

    #[test]
    fn rejects_high_degree() {
        let p = Polynomial::monomial(1, 1.0, &[(Var::X(0), 7)]);
        assert!(sublaplacian_symbolic(&p, &h1()).is_err());
        let q = Polynomial::monomial(2, 1.0, &[(Var::X(1), 2)]);
        assert!(sublaplacian_symbolic(&q, &h1()).is_err());
    }

    #[test]
    fn eval_matches_manual() {
        let p = Polynomial::monomial(1, 2.0, &[(Var::X(0), 2), (Var::Tau, 1)])
            + Polynomial::constant(1, -1.0);
        let eta = GroupPoint::h1(1.5, 2.0, -0.5);
        assert!((p.eval(&eta) - (2.0 * 2.25 * -0.5 - 1.0)).abs() < 1e-15);
    }

    fn random_poly(n: usize) -> impl Strategy<Value = Polynomial> {
        prop::collection::vec(
            (prop::collection::vec(0u32..3, 2 * n + 1), -4i32..=4),
            1..8,
        )
        .prop_map(move |terms| {
            let mut p = Polynomial::zero(n);
            for (mut e, c) in terms {
                // cap total degree at 4
                while e.iter().sum::<u32>() > 4 {
                    let i = e.iter().position(|&k| k > 0).unwrap();
                    e[i] -= 1;
                }
                p.insert(e, c as f64 * 0.5);
            }
            p
        })
    }

    proptest! {
        #[test]
        fn expanded_matches_sum_of_squares(seed_poly in (1usize..3).prop_flat_map(random_poly)) {
            let params = derived_exponents(seed_poly.n()).unwrap();
            let a = sublaplacian_symbolic(&seed_poly, &params).unwrap();
            let b = sublaplacian_composed(&seed_poly, &params).unwrap();
            prop_assert!(a.max_coeff_diff(&b) < 1e-12, "{a:?} vs {b:?}");
        }
    }
}
