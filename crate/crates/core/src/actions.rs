//! The numeric action map of the reduced radial system: turning points of
//! the effective potential, the radial action by quadrature,
//!
//!   I1(E, I2) = (1/pi) * integral of sqrt(2 (E - V*(r))) dr
//!
//! between the turning radii, its monotone inversion E = h0(I1, I2), central
//! finite differences for the frequency vector and Hessian, and the bordered
//! Arnold determinant with the two-dimensional quasi-convexity test.

use crate::circular::circular_radius;
use crate::error::{Error, Result};
use crate::numerics::{
    deriv1_richardson, deriv2_richardson, deriv_mixed_richardson, det3, integrate_adaptive,
    solve_bracketed,
};
use crate::potentials::{AdmissibleWindow, CentralPotential};

/// Successive-order agreement target of the action quadrature.
pub const QUAD_REL_TOL: f64 = 1e-11;
/// Relative tolerance of turning-point roots.
pub const TURNING_REL_TOL: f64 = 1e-12;
/// Tolerance on I1 when inverting the action integral.
pub const INVERSION_REL_TOL: f64 = 1e-11;
/// Fraction of the energy band kept away from the escape limit.
const ESCAPE_MARGIN: f64 = 1e-6;

/// V*(r) = I2^2/(2 r^2) + V(r), validated at r.
pub fn effective_potential(potential: &dyn CentralPotential, i2: f64, r: f64) -> Result<f64> {
    let (lo, hi) = potential.domain();
    if !(r > lo && r < hi) || !r.is_finite() {
        return Err(Error::DomainViolation { r, lo, hi });
    }
    Ok(v_eff(potential, i2, r))
}

#[inline]
fn v_eff(potential: &dyn CentralPotential, i2: f64, r: f64) -> f64 {
    0.5 * i2 * i2 / (r * r) + potential.value(r)
}

/// Energy band of bounded radial motion at fixed I2.
#[derive(Debug, Clone, Copy)]
pub struct RadialBand {
    pub r0: f64,
    /// V*(r0), the bottom of the well.
    pub e_min: f64,
    /// Operational escape energy: the first local maximum of V* beyond r0
    /// if one appears inside the window, otherwise V* at the window edge.
    pub e_max: f64,
    /// Radius of that local maximum, when found.
    pub barrier: Option<f64>,
}

/// Locates the well bottom and the escape energy for angular momentum I2.
pub fn radial_band(
    potential: &dyn CentralPotential,
    window: &AdmissibleWindow,
    i2: f64,
) -> Result<RadialBand> {
    let r0 = circular_radius(potential, i2, window)?;
    let e_min = v_eff(potential, i2, r0);

    // V*' has the sign of s(r) = r^3 V'(r) - I2^2, which nd.2 keeps positive
    // beyond r0 inside a validated window; the scan is defensive.
    let s = |r: f64| r.powi(3) * potential.slope(r) - i2 * i2;
    let mut barrier = None;
    let n = 64;
    let mut prev = r0;
    for k in 1..=n {
        let r = r0 + (window.r_hi - r0) * k as f64 / n as f64;
        if s(r) < 0.0 {
            let top = crate::numerics::bisect(s, prev, r, 1e-12, 200)?;
            barrier = Some(top);
            break;
        }
        prev = r;
    }
    let edge = v_eff(potential, i2, window.r_hi);
    let e_max = match barrier {
        Some(top) => v_eff(potential, i2, top).min(edge),
        None => edge,
    };
    Ok(RadialBand {
        r0,
        e_min,
        e_max,
        barrier,
    })
}

/// Turning radii r_minus <= r0 <= r_plus with V*(r_-+) = E.
#[derive(Debug, Clone, Copy)]
pub struct TurningPair {
    pub r_minus: f64,
    pub r_plus: f64,
}

impl TurningPair {
    pub fn is_degenerate(&self) -> bool {
        self.r_minus == self.r_plus
    }
}

fn energy_tol(e_min: f64) -> f64 {
    1e-13 * e_min.abs().max(1.0)
}

fn turning_points_in_band(
    potential: &dyn CentralPotential,
    window: &AdmissibleWindow,
    i2: f64,
    e: f64,
    band: &RadialBand,
) -> Result<TurningPair> {
    let tol = energy_tol(band.e_min);
    if e < band.e_min - tol {
        return Err(Error::BelowMinimum {
            e,
            e_min: band.e_min,
        });
    }
    if e <= band.e_min + tol {
        return Ok(TurningPair {
            r_minus: band.r0,
            r_plus: band.r0,
        });
    }
    if e >= band.e_max {
        return Err(Error::UnboundedOrbit {
            e,
            e_max: band.e_max,
        });
    }

    // inner bracket: V* is strictly decreasing on (r_lo, r0) inside the
    // window; below r_lo march inward until V* climbs back above E
    let f = |r: f64| v_eff(potential, i2, r) - e;
    let (dom_lo, _) = potential.domain();
    let mut r_in = window.r_lo;
    let mut guard = 0;
    while f(r_in) < 0.0 {
        let next = (r_in / 1.5).max(dom_lo + 0.25 * (r_in - dom_lo));
        if next >= r_in || guard > 200 {
            return Err(Error::NoBracket {
                lo: dom_lo,
                hi: window.r_lo,
            });
        }
        r_in = next;
        guard += 1;
    }
    let r_minus = solve_bracketed(f, r_in, band.r0, TURNING_REL_TOL, 0.0, 200)?;

    // outer bracket stops at the barrier when one was detected
    let r_cap = band.barrier.unwrap_or(window.r_hi);
    let r_plus = solve_bracketed(f, band.r0, r_cap, TURNING_REL_TOL, 0.0, 200)?;

    // the pair must enclose a strictly sub-critical stretch
    for k in 1..8 {
        let r = r_minus + (r_plus - r_minus) * k as f64 / 8.0;
        if v_eff(potential, i2, r) > e + 1e-10 * e.abs().max(1.0) {
            return Err(Error::NotConverged {
                what: "turning-interval interior check",
                iterations: k,
            });
        }
    }
    Ok(TurningPair { r_minus, r_plus })
}

/// Bracketing roots of V*(r) = E around the circular radius.
pub fn turning_points(
    potential: &dyn CentralPotential,
    i2: f64,
    e: f64,
    window: &AdmissibleWindow,
) -> Result<TurningPair> {
    let band = radial_band(potential, window, i2)?;
    turning_points_in_band(potential, window, i2, e, &band)
}

fn action_integral_in_band(
    potential: &dyn CentralPotential,
    window: &AdmissibleWindow,
    i2: f64,
    e: f64,
    band: &RadialBand,
) -> Result<f64> {
    let pair = turning_points_in_band(potential, window, i2, e, band)?;
    if pair.is_degenerate() {
        return Ok(0.0);
    }
    let mid = 0.5 * (pair.r_plus + pair.r_minus);
    let half = 0.5 * (pair.r_plus - pair.r_minus);
    // r = mid + half sin(theta) turns the square-root endpoint zeros into a
    // factor analytic in theta, so Gauss-Legendre converges geometrically
    let integrand = |theta: f64| {
        let (sin_t, cos_t) = theta.sin_cos();
        let r = mid + half * sin_t;
        let kinetic = 2.0 * (e - v_eff(potential, i2, r));
        kinetic.max(0.0).sqrt() * half * cos_t
    };
    let integral = integrate_adaptive(
        integrand,
        -std::f64::consts::FRAC_PI_2,
        std::f64::consts::FRAC_PI_2,
        QUAD_REL_TOL,
    )?;
    Ok(integral / std::f64::consts::PI)
}

/// Radial action I1(E, I2) by turning-point quadrature.
pub fn action_integral(
    potential: &dyn CentralPotential,
    window: &AdmissibleWindow,
    i2: f64,
    e: f64,
) -> Result<f64> {
    let band = radial_band(potential, window, i2)?;
    action_integral_in_band(potential, window, i2, e, &band)
}

/// Largest radial action reachable inside the bounded-motion band.
pub fn escape_action(
    potential: &dyn CentralPotential,
    window: &AdmissibleWindow,
    i2: f64,
) -> Result<f64> {
    let band = radial_band(potential, window, i2)?;
    let e_top = band.e_min + (band.e_max - band.e_min) * (1.0 - ESCAPE_MARGIN);
    action_integral_in_band(potential, window, i2, e_top, &band)
}

/// Inverts the action integral: the energy with radial action I1 at fixed
/// I2. Monotone since dI1/dE = T/(2 pi) > 0.
pub fn energy_from_actions(
    potential: &dyn CentralPotential,
    window: &AdmissibleWindow,
    i1: f64,
    i2: f64,
) -> Result<f64> {
    let band = radial_band(potential, window, i2)?;
    if i1 < 0.0 {
        return Err(Error::ActionOutOfRange {
            i1,
            f_max: f64::INFINITY,
        });
    }
    if i1 == 0.0 {
        return Ok(band.e_min);
    }
    let e_top = band.e_min + (band.e_max - band.e_min) * (1.0 - ESCAPE_MARGIN);

    // grow the energy bracket geometrically from the well bottom
    let mut err: Option<Error> = None;
    let action_at = |e: f64, err: &mut Option<Error>| -> f64 {
        match action_integral_in_band(potential, window, i2, e, &band) {
            Ok(v) => v,
            Err(e) => {
                if err.is_none() {
                    *err = Some(e);
                }
                f64::NAN
            }
        }
    };
    let mut e_lo = band.e_min;
    let mut e_hi = band.e_min + (band.e_max - band.e_min) * 1e-3;
    let mut hit_top = false;
    loop {
        let a = action_at(e_hi, &mut err);
        if let Some(e) = err {
            return Err(e);
        }
        if a >= i1 {
            break;
        }
        if hit_top {
            return Err(Error::ActionOutOfRange { i1, f_max: a });
        }
        e_lo = e_hi;
        e_hi = band.e_min + (e_hi - band.e_min) * 4.0;
        if e_hi >= e_top {
            e_hi = e_top;
            hit_top = true;
        }
    }

    let y_tol = INVERSION_REL_TOL * i1.max(1e-18);
    let root = solve_bracketed(
        |e| action_at(e, &mut err) - i1,
        e_lo,
        e_hi,
        1e-15,
        y_tol,
        200,
    )?;
    if let Some(e) = err {
        return Err(e);
    }
    Ok(root)
}

/// Finite-difference configuration for the action-space derivatives.
#[derive(Debug, Clone, Copy)]
pub struct StepPolicy {
    /// Step for first derivatives, relative to max(|I1|, I2).
    pub grad_rel_step: f64,
    /// Step for second derivatives, relative to max(|I1|, I2).
    pub hess_rel_step: f64,
    /// Rejection floor: steps shrunk below this fraction of the scale fail.
    pub min_rel_step: f64,
}

impl Default for StepPolicy {
    fn default() -> StepPolicy {
        StepPolicy {
            grad_rel_step: 1e-4,
            hess_rel_step: 1e-3,
            min_rel_step: 1e-9,
        }
    }
}

/// Frequencies and Hessian of h0 at (I1, I2) by Richardson-extrapolated
/// central differences of [`energy_from_actions`]. Steps auto-shrink to
/// respect the I1 >= 0 and gamma-window margins; mixed partials come from
/// the symmetric cross stencil.
pub fn gradient_hessian(
    potential: &dyn CentralPotential,
    window: &AdmissibleWindow,
    i1: f64,
    i2: f64,
    policy: &StepPolicy,
) -> Result<([f64; 2], [[f64; 2]; 2])> {
    let scale = i1.abs().max(i2);
    let floor = policy.min_rel_step * scale;
    let cap_i1 = 0.5 * i1; // keep I1 - h >= I1/2 >= 0
    let cap_i2 = 0.5 * (i2 - window.gamma_lo).min(window.gamma_hi - i2);

    let clamp = |h: f64, cap: f64| -> Result<f64> {
        let h = h.min(cap);
        if h < floor {
            return Err(Error::InsufficientMargin { i1, i2 });
        }
        Ok(h)
    };

    let mut g1 = clamp(policy.grad_rel_step * scale, cap_i1)?;
    let mut g2 = clamp(policy.grad_rel_step * scale, cap_i2)?;
    let mut hh1 = clamp(policy.hess_rel_step * scale, cap_i1)?;
    let mut hh2 = clamp(policy.hess_rel_step * scale, cap_i2)?;

    // if a stencil point still falls outside the action domain, shrink and
    // retry before giving up
    for attempt in 0..8 {
        let e = |x: f64, y: f64| energy_from_actions(potential, window, x, y);
        let result = (|| -> Result<([f64; 2], [[f64; 2]; 2])> {
            let e0 = e(i1, i2)?;
            let omega1 = deriv1_richardson(|x| e(x, i2), i1, g1)?;
            let omega2 = deriv1_richardson(|y| e(i1, y), i2, g2)?;
            let h11 = deriv2_richardson(|x| e(x, i2), i1, hh1, e0)?;
            let h22 = deriv2_richardson(|y| e(i1, y), i2, hh2, e0)?;
            let h12 = deriv_mixed_richardson(|x, y| e(x, y), i1, i2, hh1, hh2)?;
            Ok(([omega1, omega2], [[h11, h12], [h12, h22]]))
        })();
        match result {
            Ok(out) => return Ok(out),
            Err(Error::ActionOutOfRange { .. }) | Err(Error::BelowMinimum { .. })
            | Err(Error::UnboundedOrbit { .. })
                if attempt < 7 =>
            {
                g1 *= 0.5;
                g2 *= 0.5;
                hh1 *= 0.5;
                hh2 *= 0.5;
                if g1 < floor || g2 < floor || hh1 < floor || hh2 < floor {
                    return Err(Error::InsufficientMargin { i1, i2 });
                }
            }
            Err(e) => return Err(e),
        }
    }
    Err(Error::InsufficientMargin { i1, i2 })
}

/// A point of the action map with its derivatives and Arnold determinant.
#[derive(Debug, Clone, Copy)]
pub struct ActionPoint {
    pub i1: f64,
    pub i2: f64,
    pub e: f64,
    pub omega: [f64; 2],
    pub hessian: [[f64; 2]; 2],
    pub arnold_det: f64,
}

pub fn action_point(
    potential: &dyn CentralPotential,
    window: &AdmissibleWindow,
    i1: f64,
    i2: f64,
    policy: &StepPolicy,
) -> Result<ActionPoint> {
    let e = energy_from_actions(potential, window, i1, i2)?;
    let (omega, hessian) = gradient_hessian(potential, window, i1, i2, policy)?;
    let mut point = ActionPoint {
        i1,
        i2,
        e,
        omega,
        hessian,
        arnold_det: 0.0,
    };
    point.arnold_det = arnold_determinant(&point);
    Ok(point)
}

/// Determinant of the bordered matrix [[H, w], [w^T, 0]].
pub fn arnold_determinant(point: &ActionPoint) -> f64 {
    let h = point.hessian;
    let w = point.omega;
    det3([
        [h[0][0], h[0][1], w[0]],
        [h[1][0], h[1][1], w[1]],
        [w[0], w[1], 0.0],
    ])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Convexity {
    Quasiconvex,
    Degenerate,
}

impl Convexity {
    pub fn as_str(&self) -> &'static str {
        match self {
            Convexity::Quasiconvex => "quasiconvex",
            Convexity::Degenerate => "degenerate",
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ConvexityTest {
    pub verdict: Convexity,
    /// d2h0(eta, eta) with eta = (omega2, -omega1); its magnitude equals
    /// |arnold_det| by the 2x2 bordered-determinant identity.
    pub witness: f64,
    pub arnold_det: f64,
    pub threshold: f64,
}

/// Two-dimensional quasi-convexity test: h0 is quasi-convex at the point iff
/// the Hessian is nonzero on the direction orthogonal to the frequency.
pub fn quasiconvexity_test(point: &ActionPoint) -> Result<ConvexityTest> {
    let w = point.omega;
    if w[0] == 0.0 && w[1] == 0.0 {
        return Err(Error::CriticalPoint);
    }
    let eta = [w[1], -w[0]];
    let h = point.hessian;
    let h_eta = [
        h[0][0] * eta[0] + h[0][1] * eta[1],
        h[1][0] * eta[0] + h[1][1] * eta[1],
    ];
    let witness = eta[0] * h_eta[0] + eta[1] * h_eta[1];
    let h_norm = (h[0][0] * h[0][0] + 2.0 * h[0][1] * h[0][1] + h[1][1] * h[1][1]).sqrt();
    let w_sq = w[0] * w[0] + w[1] * w[1];
    let threshold = 1e-7 * (h_norm * w_sq).max(1.0);
    let verdict = if witness.abs() > threshold {
        Convexity::Quasiconvex
    } else {
        Convexity::Degenerate
    };
    Ok(ConvexityTest {
        verdict,
        witness,
        arnold_det: point.arnold_det,
        threshold,
    })
}
