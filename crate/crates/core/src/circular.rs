//! Everything evaluated at circular orbits: the critical radius r0(I2) of the
//! effective potential, the normal-form expansion coefficients of the reduced
//! radial Hamiltonian, the fourth-order degeneracy condition on V and its
//! second-order form in g = r V''/V', and the Arnold determinant on the
//! I1 = 0 slice.
//!
//! The expansion around a circular orbit reads
//!
//!   h(I1, I2) = V*(I2) + sqrt(A) I1 + (twist/2) I1^2 + o(I1^2),
//!
//! where A, B, C are the 2nd..4th radial derivatives of the effective
//! potential at r0 and twist = (-5 B^2 + 3 C A) / (24 A^2).

use crate::error::{Error, Result};
use crate::numerics::{bisect, det3};
use crate::potentials::{AdmissibleWindow, CentralPotential};

/// Relative tolerance of the circular-radius bisection.
pub const R0_REL_TOL: f64 = 1e-12;

/// |residual| <= RESIDUAL_REL_TOL * max(1, |RHS|, |V''''|) counts as
/// membership in the exceptional set.
pub const RESIDUAL_REL_TOL: f64 = 1e-9;

/// Fraction of scan nodes below tolerance that flags a potential as
/// degenerate on the whole window.
pub const DEGENERATE_NODE_FRACTION: f64 = 0.95;

/// Data of a circular orbit at angular momentum I2.
#[derive(Debug, Clone, Copy)]
pub struct CircularOrbit {
    pub i2: f64,
    pub r0: f64,
    /// V*(I2) = I2^2/(2 r0^2) + V(r0), the energy of the circular orbit.
    pub v_star: f64,
    /// A = 3 I2^2/r0^4 + V''(r0), the curvature of V* at r0. Positive on an
    /// admissible window.
    pub veff_d2: f64,
    /// B = -12 I2^2/r0^5 + V'''(r0).
    pub veff_d3: f64,
    /// C = 60 I2^2/r0^6 + V''''(r0).
    pub veff_d4: f64,
    /// Radial frequency sqrt(A) of small oscillations.
    pub omega: f64,
    /// Twist coefficient (-5 B^2 + 3 C A) / (24 A^2); the I1^2 coefficient
    /// of the expansion is twist/2.
    pub twist: f64,
    /// Sensitivity dr0/dI2 = 2 I2 / (r0^2 (3 V'(r0) + r0 V''(r0))).
    pub dr0_di2: f64,
}

impl CircularOrbit {
    /// Coefficient of I1^2 in the expansion of h(I1, I2).
    pub fn quadratic_coefficient(&self) -> f64 {
        0.5 * self.twist
    }
}

/// Radius of the circular orbit with angular momentum I2: the unique root of
/// r^3 V'(r) = I2^2 inside the window (r^3 V' is strictly increasing there).
pub fn circular_radius(
    potential: &dyn CentralPotential,
    i2: f64,
    window: &AdmissibleWindow,
) -> Result<f64> {
    if !window.contains_i2(i2) {
        return Err(Error::OutOfWindow {
            i2,
            gamma_lo: window.gamma_lo,
            gamma_hi: window.gamma_hi,
        });
    }
    let target = i2 * i2;
    bisect(
        |r| r.powi(3) * potential.slope(r) - target,
        window.r_lo,
        window.r_hi,
        R0_REL_TOL,
        200,
    )
}

/// Normal-form coefficients at the circular orbit of angular momentum I2.
pub fn birkhoff_coefficients(
    potential: &dyn CentralPotential,
    i2: f64,
    window: &AdmissibleWindow,
) -> Result<CircularOrbit> {
    let r0 = circular_radius(potential, i2, window)?;
    orbit_with_radius(potential, i2, r0)
}

/// Coefficients of the circular orbit through a given radius, taking
/// I2(r0) = sqrt(r0^3 V'(r0)); used by the window scan where r0 is the
/// natural parameter.
pub fn circular_orbit_at_radius(
    potential: &dyn CentralPotential,
    r0: f64,
) -> Result<CircularOrbit> {
    let d = crate::potentials::eval_derivs(potential, r0)?;
    let i2sq = r0.powi(3) * d.d1;
    if !(i2sq > 0.0) {
        return Err(Error::SingularConfiguration {
            r0,
            what: "V'(r0)",
        });
    }
    orbit_with_radius(potential, i2sq.sqrt(), r0)
}

fn orbit_with_radius(
    potential: &dyn CentralPotential,
    i2: f64,
    r0: f64,
) -> Result<CircularOrbit> {
    let d = potential.derivs(r0);
    let i2sq = i2 * i2;
    let a = 3.0 * i2sq / r0.powi(4) + d.d2;
    if !(a > 0.0) {
        return Err(Error::DegenerateMinimum { r0, curvature: a });
    }
    let b = -12.0 * i2sq / r0.powi(5) + d.d3;
    let c = 60.0 * i2sq / r0.powi(6) + d.d4;
    let twist = (-5.0 * b * b + 3.0 * c * a) / (24.0 * a * a);
    let dr0_di2 = 2.0 * i2 / (r0 * r0 * (3.0 * d.d1 + r0 * d.d2));
    Ok(CircularOrbit {
        i2,
        r0,
        v_star: 0.5 * i2sq / (r0 * r0) + d.v,
        veff_d2: a,
        veff_d3: b,
        veff_d4: c,
        omega: a.sqrt(),
        twist,
        dr0_di2,
    })
}

/// Right-hand side of the fourth-order degeneracy condition: the value that
/// V''''(r0) would have to take for the Arnold determinant to vanish at the
/// circular orbit through r0.
pub fn potcondition_rhs(potential: &dyn CentralPotential, r0: f64) -> Result<f64> {
    let d = crate::potentials::eval_derivs(potential, r0)?;
    let (v1, v2, v3) = (d.d1, d.d2, d.d3);
    if v1 == 0.0 {
        return Err(Error::SingularConfiguration {
            r0,
            what: "V'(r0)",
        });
    }
    let denom = 3.0 * v1 + r0 * v2;
    if denom == 0.0 {
        return Err(Error::SingularConfiguration {
            r0,
            what: "3 V'(r0) + r0 V''(r0)",
        });
    }
    Ok(-84.0 * v1 / r0.powi(3) + 32.0 * v2 / (r0 * r0) + 16.0 * v3 / r0
        - 8.0 * v2 * v2 / (r0 * v1)
        + 240.0 * v1 * v1 / (r0.powi(3) * denom)
        - 40.0 * v1 * v3 / (r0 * denom)
        + 5.0 * r0 * v3 * v3 / (3.0 * denom))
}

/// RHS(r0) - V''''(r0). Zero exactly where the circular-orbit Arnold
/// determinant vanishes.
pub fn potcondition_residual(potential: &dyn CentralPotential, r0: f64) -> Result<f64> {
    let rhs = potcondition_rhs(potential, r0)?;
    Ok(rhs - potential.derivs(r0).d4)
}

/// Scale for deciding whether a residual counts as zero.
pub fn residual_scale(potential: &dyn CentralPotential, r0: f64) -> Result<f64> {
    let rhs = potcondition_rhs(potential, r0)?;
    let v4 = potential.derivs(r0).d4;
    Ok(rhs.abs().max(v4.abs()).max(1.0))
}

/// g = r V''/V' and its first two derivatives, from the exact quotient-rule
/// expansion in V'..V'''' (no differencing of g).
fn g_derivatives(d: crate::potentials::Derivs, r: f64) -> (f64, f64, f64) {
    let (v1, v2, v3, v4) = (d.d1, d.d2, d.d3, d.d4);
    let g = r * v2 / v1;
    let gp = (v2 + r * v3) / v1 - r * v2 * v2 / (v1 * v1);
    let gpp = ((2.0 * v3 + r * v4) * v1 * v1 - (2.0 * v2 * v2 + 3.0 * r * v2 * v3) * v1
        + 2.0 * r * v2 * v2 * v2)
        / (v1 * v1 * v1);
    (g, gp, gpp)
}

/// Residual of the second-order form of the degeneracy condition in the
/// variable g(r) = r V''(r)/V'(r):
///
///   g'' = (14 + g) g' / (3 r) + 2 (g-1)(g+2)(g+3) / (3 r^2)
///         + 5 g'^2 / (3 (3 + g)).
///
/// Returns RHS - g''(r0). Satisfies residual_pot = (V'(r0)/r0) * residual_g
/// identically, so both residuals vanish together.
pub fn secondord_residual(potential: &dyn CentralPotential, r0: f64) -> Result<f64> {
    let d = crate::potentials::eval_derivs(potential, r0)?;
    if d.d1 == 0.0 {
        return Err(Error::SingularConfiguration {
            r0,
            what: "V'(r0)",
        });
    }
    let (g, gp, gpp) = g_derivatives(d, r0);
    // the g'^2 term vanishes with g' even at the 3 + g = 0 pole
    let curvature_term = if gp == 0.0 {
        0.0
    } else {
        if 3.0 + g == 0.0 {
            return Err(Error::SingularConfiguration {
                r0,
                what: "3 + g(r0)",
            });
        }
        5.0 * gp * gp / (3.0 * (3.0 + g))
    };
    let rhs = (14.0 + g) * gp / (3.0 * r0)
        + 2.0 * (g - 1.0) * (g + 2.0) * (g + 3.0) / (3.0 * r0 * r0)
        + curvature_term;
    Ok(rhs - gpp)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Classification {
    QuasiconvexAtR0,
    DegenerateAtR0,
}

impl Classification {
    pub fn as_str(&self) -> &'static str {
        match self {
            Classification::QuasiconvexAtR0 => "quasiconvex-at-r0",
            Classification::DegenerateAtR0 => "degenerate-at-r0",
        }
    }
}

/// Both residuals at r0 and the resulting classification.
#[derive(Debug, Clone, Copy)]
pub struct ResidualReport {
    pub r0: f64,
    pub residual_pot: f64,
    pub residual_g: f64,
    pub classification: Classification,
}

pub fn residual_report(potential: &dyn CentralPotential, r0: f64) -> Result<ResidualReport> {
    let residual_pot = potcondition_residual(potential, r0)?;
    let residual_g = secondord_residual(potential, r0)?;
    let scale = residual_scale(potential, r0)?;
    let classification = if residual_pot.abs() <= RESIDUAL_REL_TOL * scale {
        Classification::DegenerateAtR0
    } else {
        Classification::QuasiconvexAtR0
    };
    Ok(ResidualReport {
        r0,
        residual_pot,
        residual_g,
        classification,
    })
}

/// Arnold determinant at the point (I1 = 0, I2): the bordered Hessian of the
/// expansion, with entries
///
///   d2h/dI1^2       = twist
///   d2h/dI1 dI2     = (6 I2/r0^4 + B dr0/dI2) / (2 sqrt(A))
///   d2h/dI2^2       = 1/r0^2 - (2 I2/r0^3) dr0/dI2
///   dh/dI1, dh/dI2  = sqrt(A), I2/r0^2
///
/// Its zero set coincides with that of [`potcondition_residual`]; in fact
/// D = I2^2 / (8 A r0^4) * residual_pot.
pub fn arnold_determinant_circular(
    potential: &dyn CentralPotential,
    i2: f64,
    window: &AdmissibleWindow,
) -> Result<f64> {
    let orbit = birkhoff_coefficients(potential, i2, window)?;
    Ok(arnold_determinant_of_orbit(&orbit))
}

/// Same determinant from an already computed orbit.
pub fn arnold_determinant_of_orbit(orbit: &CircularOrbit) -> f64 {
    let (r0, i2) = (orbit.r0, orbit.i2);
    let a = orbit.veff_d2;
    let w1 = orbit.omega;
    let w2 = i2 / (r0 * r0);
    let h11 = orbit.twist;
    let h12 = (6.0 * i2 / r0.powi(4) + orbit.veff_d3 * orbit.dr0_di2) / (2.0 * a.sqrt());
    let h22 = 1.0 / (r0 * r0) - (2.0 * i2 / r0.powi(3)) * orbit.dr0_di2;
    det3([[h11, h12, w1], [h12, h22, w2], [w1, w2, 0.0]])
}

/// A root of the degeneracy condition located by the window scan.
#[derive(Debug, Clone, Copy)]
pub struct ExceptionalPoint {
    pub r0: f64,
    pub i2: f64,
}

#[derive(Debug, Clone)]
pub enum ScanOutcome {
    /// The residual is below tolerance at (almost) every node: the whole
    /// window is degenerate, as for the Kepler and harmonic potentials.
    IdenticallyDegenerate,
    /// Isolated roots of the residual; empty means quasi-convex on the
    /// whole window.
    Roots(Vec<ExceptionalPoint>),
}

/// Scans the window for zeros of the degeneracy residual. Sign changes
/// between adjacent grid nodes are refined by bisection; each root is
/// reported with its angular momentum I2(r0) = sqrt(r0^3 V'(r0)).
pub fn scan_exceptional_set(
    potential: &dyn CentralPotential,
    window: &AdmissibleWindow,
    n_grid: usize,
) -> Result<ScanOutcome> {
    if n_grid < 2 {
        return Err(Error::InvalidConfig(format!(
            "scan grid must have at least 2 nodes, got {n_grid}"
        )));
    }
    let step = (window.r_hi - window.r_lo) / (n_grid - 1) as f64;
    let mut nodes = Vec::with_capacity(n_grid);
    let mut below_tol = 0usize;
    for i in 0..n_grid {
        let r = if i == n_grid - 1 {
            window.r_hi
        } else {
            window.r_lo + i as f64 * step
        };
        let res = potcondition_residual(potential, r)?;
        let scale = residual_scale(potential, r)?;
        if res.abs() <= RESIDUAL_REL_TOL * scale {
            below_tol += 1;
        }
        nodes.push((r, res));
    }
    if below_tol as f64 >= DEGENERATE_NODE_FRACTION * n_grid as f64 {
        return Ok(ScanOutcome::IdenticallyDegenerate);
    }
    let mut roots = Vec::new();
    for pair in nodes.windows(2) {
        let (r_a, f_a) = pair[0];
        let (r_b, f_b) = pair[1];
        if f_a == 0.0 {
            roots.push(r_a);
            continue;
        }
        if f_b != 0.0 && f_a.signum() != f_b.signum() {
            let root = bisect(
                |r| potcondition_residual(potential, r).unwrap_or(f64::NAN),
                r_a,
                r_b,
                1e-12,
                200,
            )?;
            roots.push(root);
        }
    }
    if nodes.last().map(|&(_, f)| f == 0.0).unwrap_or(false) {
        roots.push(window.r_hi);
    }
    let points = roots
        .into_iter()
        .map(|r0| ExceptionalPoint {
            r0,
            i2: (r0.powi(3) * potential.derivs(r0).d1).sqrt(),
        })
        .collect();
    Ok(ScanOutcome::Roots(points))
}
