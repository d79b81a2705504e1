//! Exact, grid-free algebra of the Heisenberg group `H_n`.
//!
//! Points are `(x, y, tau)` with `x, y in R^n`. The group law, the critical
//! exponents attached to the homogeneous dimension `Q = 2n + 2`, and the
//! exponential weight `psi(t, eta) = (|x|^2 + |y|^2 + 4|tau|) / (8(1 + t))`
//! live here. Everything is a pure function of its inputs; the grid code
//! uses these as pointwise oracles.

pub mod symbolic;

use num_rational::Ratio;

use crate::error::{Error, Result};

pub use symbolic::Polynomial;

/// Group dimension together with its derived exponents.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HeisenbergParams {
    n: usize,
    q: usize,
    p_fujita: Ratio<i64>,
    p_gn: Ratio<i64>,
}

impl HeisenbergParams {
    pub fn new(n: usize) -> Result<Self> {
        derived_exponents(n)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Homogeneous dimension `Q = 2n + 2`.
    pub fn homogeneous_dim(&self) -> usize {
        self.q
    }

    /// Fujita exponent `1 + 2/Q` as an exact rational.
    pub fn p_fujita(&self) -> Ratio<i64> {
        self.p_fujita
    }

    /// Gagliardo-Nirenberg upper exponent `Q/(Q-2)` as an exact rational.
    pub fn p_gn(&self) -> Ratio<i64> {
        self.p_gn
    }

    pub fn p_fujita_f64(&self) -> f64 {
        ratio_to_f64(self.p_fujita)
    }

    pub fn p_gn_f64(&self) -> f64 {
        ratio_to_f64(self.p_gn)
    }

    /// Sobolev endpoint `2Q/(Q-2)` of the Gagliardo-Nirenberg range.
    pub fn q_max(&self) -> Ratio<i64> {
        let q = self.q as i64;
        Ratio::new(2 * q, q - 2)
    }

    /// Exponent of `R` in the test-function estimate, `Q - (Q+2)/p`.
    pub fn certificate_exponent(&self, p: f64) -> f64 {
        let q = self.q as f64;
        q - (q + 2.0) / p
    }

    /// Decay exponents of `||u||`, `||grad_H u||`, `||u_t||` for the linear flow.
    pub fn decay_targets(&self) -> [f64; 3] {
        let q4 = self.q as f64 / 4.0;
        [-q4, -q4 - 0.5, -q4 - 1.0]
    }
}

pub fn ratio_to_f64(r: Ratio<i64>) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

pub fn derived_exponents(n: usize) -> Result<HeisenbergParams> {
    if n < 1 {
        return Err(Error::invalid("group parameter n must be at least 1"));
    }
    let q = 2 * n + 2;
    let qi = q as i64;
    Ok(HeisenbergParams {
        n,
        q,
        p_fujita: Ratio::from_integer(1) + Ratio::new(2, qi),
        p_gn: Ratio::new(qi, qi - 2),
    })
}

/// Interpolation exponent `theta(q) = Q (1/2 - 1/q)` for `2 <= q <= 2Q/(Q-2)`.
pub fn theta(q: f64, params: &HeisenbergParams) -> Result<f64> {
    let q_max = ratio_to_f64(params.q_max());
    if !(q.is_finite() && (2.0..=q_max).contains(&q)) {
        return Err(Error::invalid(format!(
            "q = {q} outside [2, {q_max}] for Q = {}",
            params.q
        )));
    }
    if q == q_max {
        return Ok(1.0);
    }
    Ok(params.q as f64 * (0.5 - 1.0 / q))
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroupPoint {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub tau: f64,
}

impl GroupPoint {
    pub fn new(x: Vec<f64>, y: Vec<f64>, tau: f64) -> Result<Self> {
        if x.len() != y.len() || x.is_empty() {
            return Err(Error::invalid(format!(
                "horizontal components must share a positive length (got {} and {})",
                x.len(),
                y.len()
            )));
        }
        let p = GroupPoint { x, y, tau };
        if !p.is_finite() {
            return Err(Error::invalid("group point has non-finite components"));
        }
        Ok(p)
    }

    pub fn origin(n: usize) -> Self {
        GroupPoint {
            x: vec![0.0; n],
            y: vec![0.0; n],
            tau: 0.0,
        }
    }

    /// Convenience constructor for `H_1`.
    pub fn h1(x: f64, y: f64, tau: f64) -> Self {
        GroupPoint {
            x: vec![x],
            y: vec![y],
            tau,
        }
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }

    pub fn is_finite(&self) -> bool {
        self.tau.is_finite() && self.x.iter().chain(&self.y).all(|v| v.is_finite())
    }

    pub fn inverse(&self) -> Self {
        GroupPoint {
            x: self.x.iter().map(|v| -v).collect(),
            y: self.y.iter().map(|v| -v).collect(),
            tau: -self.tau,
        }
    }

    /// Squared horizontal radius `|x|^2 + |y|^2`.
    pub fn horizontal_sq(&self) -> f64 {
        self.x.iter().chain(&self.y).map(|v| v * v).sum()
    }

    /// Anisotropic dilation `(x, y, tau) -> (lx, ly, l^2 tau)`.
    pub fn dilate(&self, lambda: f64) -> Self {
        GroupPoint {
            x: self.x.iter().map(|v| lambda * v).collect(),
            y: self.y.iter().map(|v| lambda * v).collect(),
            tau: lambda * lambda * self.tau,
        }
    }
}

/// `(x, y, tau) o (x', y', tau') = (x + x', y + y', tau + tau' + (x.y' - x'.y)/2)`.
pub fn group_multiply(a: &GroupPoint, b: &GroupPoint) -> Result<GroupPoint> {
    if a.dim() != b.dim() {
        return Err(Error::invalid(format!(
            "dimension mismatch: {} vs {}",
            a.dim(),
            b.dim()
        )));
    }
    let twist: f64 = a
        .x
        .iter()
        .zip(&b.y)
        .zip(b.x.iter().zip(&a.y))
        .map(|((xa, yb), (xb, ya))| xa * yb - xb * ya)
        .sum();
    Ok(GroupPoint {
        x: a.x.iter().zip(&b.x).map(|(p, q)| p + q).collect(),
        y: a.y.iter().zip(&b.y).map(|(p, q)| p + q).collect(),
        tau: a.tau + b.tau + 0.5 * twist,
    })
}

/// Sign of `tau` in the weak derivatives of `|tau|`, with `sign(0) = +1`.
///
/// The value on `tau = 0` is a measure-zero choice; taking `|sign| = 1`
/// everywhere keeps `|grad_H psi|^2 + psi_t = -|tau| / (2(1+t)^2)` exact on
/// the hyperplane as well.
#[inline]
pub fn weak_sign(v: f64) -> f64 {
    if v < 0.0 {
        -1.0
    } else {
        1.0
    }
}

fn check_time(t: f64) -> Result<()> {
    if !(t.is_finite() && t >= 0.0) {
        return Err(Error::invalid(format!("time must be finite and >= 0, got {t}")));
    }
    Ok(())
}

/// Weight exponent `psi` on raw `H_1`-style coordinates; `r_sq = |x|^2 + |y|^2`.
#[inline]
pub fn psi_raw(t: f64, r_sq: f64, tau: f64) -> f64 {
    (r_sq + 4.0 * tau.abs()) / (8.0 * (1.0 + t))
}

pub fn psi_value(t: f64, eta: &GroupPoint) -> Result<f64> {
    check_time(t)?;
    Ok(psi_raw(t, eta.horizontal_sq(), eta.tau))
}

/// Time derivative and horizontal gradient of `psi` at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct PsiDerivatives {
    pub psi_t: f64,
    /// `(X_1 psi, ..., X_n psi, Y_1 psi, ..., Y_n psi)`.
    pub grad_h: Vec<f64>,
    pub grad_h_sq: f64,
}

impl PsiDerivatives {
    /// `|grad_H psi|^2 + psi_t`, equal to `-|tau| / (2(1+t)^2)`.
    pub fn eikonal_defect(&self) -> f64 {
        self.grad_h_sq + self.psi_t
    }
}

pub fn psi_derivatives(t: f64, eta: &GroupPoint) -> Result<PsiDerivatives> {
    check_time(t)?;
    let s = weak_sign(eta.tau);
    let denom = 4.0 * (1.0 + t);
    let n = eta.dim();
    let mut grad_h = Vec::with_capacity(2 * n);
    grad_h.extend(eta.x.iter().zip(&eta.y).map(|(x, y)| (x - s * y) / denom));
    grad_h.extend(eta.x.iter().zip(&eta.y).map(|(x, y)| (y + s * x) / denom));
    let grad_h_sq = grad_h.iter().map(|g| g * g).sum();
    let psi_t = -(eta.horizontal_sq() + 4.0 * eta.tau.abs()) / (8.0 * (1.0 + t).powi(2));
    Ok(PsiDerivatives {
        psi_t,
        grad_h,
        grad_h_sq,
    })
}

/// Closed form of `int_{H_n} exp(-2 sigma psi(t, eta)) d eta`,
/// `2^{Q-1} pi^{Q/2 - 1} sigma^{-Q/2} (1+t)^{Q/2}`.
///
/// The integral factorizes into two Gaussians `(4 pi (1+t) / sigma)^{n/2}`
/// and `int exp(-sigma |tau| / (1+t)) = 2 (1+t) / sigma`.
pub fn gaussian_weight_integral(params: &HeisenbergParams, sigma: f64, t: f64) -> f64 {
    let q = params.homogeneous_dim() as f64;
    2f64.powf(q - 1.0)
        * std::f64::consts::PI.powf(q / 2.0 - 1.0)
        * sigma.powf(-q / 2.0)
        * (1.0 + t).powf(q / 2.0)
}
