use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::GroupPoint;

/// Smooth plateau profiles built from the transition
/// `g(s) = f(1 - s) / (f(s) + f(1 - s))`, `f(s) = e^{-1/s}` for `s > 0`.
///
/// `alpha(r) = g(2r - 1)` (plateau `r <= 1/2`, support `r < 1`) and
/// `beta(s) = g((|s| - 1/4) / (3/4))` (plateau `|s| <= 1/4`, support `|s| < 1`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BumpProfile {
    p: f64,
}

/// Value, first and second derivative.
pub type Jet = [f64; 3];

impl BumpProfile {
    pub fn new(p: f64) -> Result<Self> {
        if !(p.is_finite() && p > 1.0) {
            return Err(Error::invalid(format!("bump exponent p must exceed 1, got {p}")));
        }
        Ok(BumpProfile { p })
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn transition(s: f64) -> f64 {
        Self::transition_jet(s)[0]
    }

    /// `g = 1 / (1 + e^k)` with `k = 1/(1-s) - 1/s`, differentiated through the
    /// logistic form to stay finite near both ends.
    pub fn transition_jet(s: f64) -> Jet {
        if s <= 0.0 {
            return [1.0, 0.0, 0.0];
        }
        if s >= 1.0 {
            return [0.0, 0.0, 0.0];
        }
        let u = 1.0 - s;
        let k = 1.0 / u - 1.0 / s;
        let k1 = 1.0 / (u * u) + 1.0 / (s * s);
        let k2 = 2.0 / (u * u * u) - 2.0 / (s * s * s);
        let g = if k > 0.0 {
            let e = (-k).exp();
            e / (1.0 + e)
        } else {
            1.0 / (1.0 + k.exp())
        };
        let c = (0.5 * k).cosh();
        let w = 1.0 / (4.0 * c * c);
        [g, -k1 * w, -k2 * w + k1 * k1 * w * (1.0 - 2.0 * g)]
    }

    /// Radial profile and its derivatives in `r >= 0`.
    pub fn alpha_jet(r: f64) -> Jet {
        let [g, g1, g2] = Self::transition_jet(2.0 * r.abs() - 1.0);
        [g, 2.0 * g1, 4.0 * g2]
    }

    pub fn alpha(r: f64) -> f64 {
        Self::alpha_jet(r)[0]
    }

    /// Even profile in `s`, derivatives with respect to `s`.
    pub fn beta_jet(s: f64) -> Jet {
        let sign = if s < 0.0 { -1.0 } else { 1.0 };
        let [g, g1, g2] = Self::transition_jet((s.abs() - 0.25) / 0.75);
        [g, sign * g1 / 0.75, g2 / (0.75 * 0.75)]
    }

    pub fn beta(s: f64) -> f64 {
        Self::beta_jet(s)[0]
    }

    /// `sup |alpha'| / alpha^{1/p}`, `sup |alpha''| / alpha^{1/p}` and the same
    /// for `beta`, sampled on a uniform 1-D mesh of the supports.
    pub fn domination_constants(&self, samples: usize) -> Result<[f64; 4]> {
        let inv_p = 1.0 / self.p;
        let sup = |jet: fn(f64) -> Jet, order: usize| -> Result<f64> {
            let mut m: f64 = 0.0;
            for i in 0..=samples {
                let s = i as f64 / samples as f64;
                let j = jet(s);
                if j[0] <= 0.0 {
                    continue;
                }
                let r = j[order].abs() / j[0].powf(inv_p);
                if !r.is_finite() {
                    return Err(Error::ProfileViolation(format!(
                        "derivative ratio not finite at s = {s}"
                    )));
                }
                m = m.max(r);
            }
            Ok(m)
        };
        Ok([
            sup(Self::alpha_jet, 1)?,
            sup(Self::alpha_jet, 2)?,
            sup(Self::beta_jet, 1)?,
            sup(Self::beta_jet, 2)?,
        ])
    }
}

/// `phi_R(t, eta) = beta(t / R^2) alpha(|x| / R) alpha(|y| / R) beta(tau / R^2)`.
pub fn phi_r(t: f64, eta: &GroupPoint, r: f64) -> Result<f64> {
    if !(r.is_finite() && r > 1.0) {
        return Err(Error::invalid(format!("R must exceed 1, got {r}")));
    }
    if !(t.is_finite() && t >= 0.0) {
        return Err(Error::invalid(format!("t must be >= 0, got {t}")));
    }
    Ok(phi_r_unchecked(t, eta, r))
}

pub(crate) fn phi_r_unchecked(t: f64, eta: &GroupPoint, r: f64) -> f64 {
    let r2 = r * r;
    let xn = eta.x.iter().map(|v| v * v).sum::<f64>().sqrt();
    let yn = eta.y.iter().map(|v| v * v).sum::<f64>().sqrt();
    BumpProfile::beta(t / r2)
        * BumpProfile::alpha(xn / r)
        * BumpProfile::alpha(yn / r)
        * BumpProfile::beta(eta.tau / r2)
}

/// Spatial part `phi_R(0, .)` scaled to half-widths `(w, w, w^2)`.
pub fn plateau_bump(eta: &GroupPoint, width: f64) -> f64 {
    let xn = eta.x.iter().map(|v| v * v).sum::<f64>().sqrt();
    let yn = eta.y.iter().map(|v| v * v).sum::<f64>().sqrt();
    BumpProfile::alpha(xn / width)
        * BumpProfile::alpha(yn / width)
        * BumpProfile::beta(eta.tau / (width * width))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DerivativeBounds {
    pub c_t: f64,
    pub c_tt: f64,
    pub c_lap: f64,
}

/// Sampled `sup |d_t phi_R| / (R^-2 phi_R^{1/p})`, the same for `d_t^2` with
/// `R^-4`, and for `Δ_H phi_R` with `R^-2`, for `n = 1`.
///
/// The product structure reduces the time factor to a 1-D sup over `beta`
/// and the sub-Laplacian to a 3-D sup over `(x, y, tau)` on the support
/// `(-R, R)^2 x (-R^2, R^2)`, sampled with `mesh` points per axis.
pub fn phi_r_derivative_bounds(r: f64, profile: &BumpProfile, mesh: usize) -> Result<DerivativeBounds> {
    use rayon::prelude::*;
    if !(r.is_finite() && r > 1.0) {
        return Err(Error::invalid(format!("R must exceed 1, got {r}")));
    }
    if mesh < 8 {
        return Err(Error::invalid("derivative mesh needs at least 8 points"));
    }
    let inv_p = 1.0 / profile.p();
    let (r2, r4) = (r * r, r * r * r * r);
    let violation = |what: &str| Error::ProfileViolation(format!("{what} ratio is not finite"));

    // time factor T(t) = beta(t / R^2) on [0, R^2)
    let fine = 16 * mesh;
    let mut c_t: f64 = 0.0;
    let mut c_tt: f64 = 0.0;
    for i in 0..fine {
        let t = r2 * i as f64 / fine as f64;
        let [b, b1, b2] = BumpProfile::beta_jet(t / r2);
        if b <= 0.0 {
            continue;
        }
        let (d1, d2) = (b1 / r2, b2 / r4);
        let den = b.powf(inv_p);
        c_t = c_t.max(d1.abs() / (den / r2));
        c_tt = c_tt.max(d2.abs() / (den / r4));
    }
    if !(c_t.is_finite() && c_tt.is_finite()) {
        return Err(violation("time-derivative"));
    }

    // physical-coordinate jets of A(x) = alpha(|x| / R) and B(tau) = beta(tau / R^2)
    let node = |i: usize| -1.0 + 2.0 * (i as f64 + 0.5) / mesh as f64;
    let a_tab: Vec<(f64, Jet)> = (0..mesh)
        .map(|i| {
            let x = r * node(i);
            let [a, a1, a2] = BumpProfile::alpha_jet(x / r);
            let sgn = if x < 0.0 { -1.0 } else { 1.0 };
            (x, [a, sgn * a1 / r, a2 / r2])
        })
        .collect();
    let b_tab: Vec<Jet> = (0..mesh)
        .map(|i| {
            let tau = r2 * node(i);
            let [b, b1, b2] = BumpProfile::beta_jet(tau / r2);
            [b, b1 / r2, b2 / r4]
        })
        .collect();
    let c_lap = (0..mesh)
        .into_par_iter()
        .map(|i| {
            let (x, ax) = a_tab[i];
            let mut m: f64 = 0.0;
            for &(y, ay) in &a_tab {
                for bt in &b_tab {
                    let s = ax[0] * ay[0] * bt[0];
                    if s <= 0.0 {
                        continue;
                    }
                    let lap = ax[2] * ay[0] * bt[0]
                        + ax[0] * ay[2] * bt[0]
                        + 0.25 * (x * x + y * y) * ax[0] * ay[0] * bt[2]
                        + x * ax[0] * ay[1] * bt[1]
                        - y * ax[1] * ay[0] * bt[1];
                    m = m.max(lap.abs() / (s.powf(inv_p) / r2));
                }
            }
            m
        })
        .reduce(|| 0.0, f64::max);
    if !c_lap.is_finite() {
        return Err(violation("sub-Laplacian"));
    }
    Ok(DerivativeBounds { c_t, c_tt, c_lap })
}
