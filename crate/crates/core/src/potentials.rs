//! Analytic central potentials V(r) with exact radial derivatives through
//! fourth order, plus the admissibility checks that carve out the radial
//! window on which circular orbits are nondegenerate:
//!
//!   nd.1:  V'(r) > 0
//!   nd.2:  V''(r) + 3 V'(r)/r > 0
//!
//! nd.2 makes r^3 V'(r) strictly increasing, so the angular-momentum bounds
//! gamma = sqrt(r^3 V'(r)) taken at the window ends are always ordered.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// V and its first four radial derivatives at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Derivs {
    pub v: f64,
    pub d1: f64,
    pub d2: f64,
    pub d3: f64,
    pub d4: f64,
}

impl Derivs {
    pub const ZERO: Derivs = Derivs {
        v: 0.0,
        d1: 0.0,
        d2: 0.0,
        d3: 0.0,
        d4: 0.0,
    };

    fn add(self, o: Derivs) -> Derivs {
        Derivs {
            v: self.v + o.v,
            d1: self.d1 + o.d1,
            d2: self.d2 + o.d2,
            d3: self.d3 + o.d3,
            d4: self.d4 + o.d4,
        }
    }
}

/// Exact derivatives of the monomial k * r^alpha.
fn monomial_derivs(k: f64, alpha: f64, r: f64) -> Derivs {
    let v = k * r.powf(alpha);
    let d1 = v * alpha / r;
    let d2 = d1 * (alpha - 1.0) / r;
    let d3 = d2 * (alpha - 2.0) / r;
    let d4 = d3 * (alpha - 3.0) / r;
    Derivs { v, d1, d2, d3, d4 }
}

/// An analytic central potential. `derivs` must be exact on the declared
/// open domain; callers reach it through [`eval_derivs`] which validates r.
pub trait CentralPotential: Send + Sync {
    fn name(&self) -> String;
    fn parameters(&self) -> Vec<(String, f64)>;
    /// Open interval on which V is defined.
    fn domain(&self) -> (f64, f64) {
        (0.0, f64::INFINITY)
    }
    fn derivs(&self, r: f64) -> Derivs;
    /// V(r) alone; hot loops (quadrature) use this.
    fn value(&self, r: f64) -> f64 {
        self.derivs(r).v
    }
    /// V'(r) alone; the integrator's force evaluation uses this.
    fn slope(&self, r: f64) -> f64 {
        self.derivs(r).d1
    }
}

/// Checked evaluation: rejects r outside the declared open domain.
pub fn eval_derivs(potential: &dyn CentralPotential, r: f64) -> Result<Derivs> {
    let (lo, hi) = potential.domain();
    if !(r > lo && r < hi) || !r.is_finite() {
        return Err(Error::DomainViolation { r, lo, hi });
    }
    Ok(potential.derivs(r))
}

// ---------------------------------------------------------------------------
// Built-in families
// ---------------------------------------------------------------------------

/// V(r) = k * r^alpha.
#[derive(Debug, Clone, Copy)]
pub struct Homogeneous {
    pub k: f64,
    pub alpha: f64,
}

impl Homogeneous {
    pub fn new(k: f64, alpha: f64) -> Homogeneous {
        Homogeneous { k, alpha }
    }

    /// The Kepler potential -1/r.
    pub fn kepler() -> Homogeneous {
        Homogeneous::new(-1.0, -1.0)
    }

    /// The isotropic harmonic potential r^2 / 2.
    pub fn harmonic() -> Homogeneous {
        Homogeneous::new(0.5, 2.0)
    }
}

impl CentralPotential for Homogeneous {
    fn name(&self) -> String {
        format!("homogeneous(k={}, alpha={})", self.k, self.alpha)
    }

    fn parameters(&self) -> Vec<(String, f64)> {
        vec![("k".into(), self.k), ("alpha".into(), self.alpha)]
    }

    fn derivs(&self, r: f64) -> Derivs {
        monomial_derivs(self.k, self.alpha, r)
    }

    fn value(&self, r: f64) -> f64 {
        self.k * r.powf(self.alpha)
    }

    fn slope(&self, r: f64) -> f64 {
        self.k * self.alpha * r.powf(self.alpha - 1.0)
    }
}

/// V(r) = a r^-12 - b r^-6.
#[derive(Debug, Clone, Copy)]
pub struct LennardJones {
    pub a: f64,
    pub b: f64,
}

impl CentralPotential for LennardJones {
    fn name(&self) -> String {
        format!("lennard-jones(a={}, b={})", self.a, self.b)
    }

    fn parameters(&self) -> Vec<(String, f64)> {
        vec![("a".into(), self.a), ("b".into(), self.b)]
    }

    fn derivs(&self, r: f64) -> Derivs {
        monomial_derivs(self.a, -12.0, r).add(monomial_derivs(-self.b, -6.0, r))
    }

    fn value(&self, r: f64) -> f64 {
        let r6 = r.powi(6);
        (self.a / r6 - self.b) / r6
    }

    fn slope(&self, r: f64) -> f64 {
        let r6 = r.powi(6);
        (-12.0 * self.a / r6 + 6.0 * self.b) / (r6 * r)
    }
}

/// V(r) = -amplitude * exp(-mu r) / r.
#[derive(Debug, Clone, Copy)]
pub struct ScreenedCoulomb {
    pub amplitude: f64,
    pub mu: f64,
}

impl CentralPotential for ScreenedCoulomb {
    fn name(&self) -> String {
        format!("screened-coulomb(amplitude={}, mu={})", self.amplitude, self.mu)
    }

    fn parameters(&self) -> Vec<(String, f64)> {
        vec![("amplitude".into(), self.amplitude), ("mu".into(), self.mu)]
    }

    fn derivs(&self, r: f64) -> Derivs {
        // Leibniz on u(r) * s(r) with u = exp(-mu r), s = 1/r:
        // u^(k) = (-mu)^k u, s^(k) = (-1)^k k! / r^(k+1).
        let g = self.amplitude;
        let mu = self.mu;
        let u = (-mu * r).exp();
        let u1 = -mu * u;
        let u2 = mu * mu * u;
        let u3 = -mu * mu * mu * u;
        let u4 = mu * mu * mu * mu * u;
        let s0 = 1.0 / r;
        let s1 = -s0 / r;
        let s2 = -2.0 * s1 / r;
        let s3 = -3.0 * s2 / r;
        let s4 = -4.0 * s3 / r;
        Derivs {
            v: -g * u * s0,
            d1: -g * (u1 * s0 + u * s1),
            d2: -g * (u2 * s0 + 2.0 * u1 * s1 + u * s2),
            d3: -g * (u3 * s0 + 3.0 * u2 * s1 + 3.0 * u1 * s2 + u * s3),
            d4: -g * (u4 * s0 + 4.0 * u3 * s1 + 6.0 * u2 * s2 + 4.0 * u1 * s3 + u * s4),
        }
    }

    fn value(&self, r: f64) -> f64 {
        -self.amplitude * (-self.mu * r).exp() / r
    }

    fn slope(&self, r: f64) -> f64 {
        self.amplitude * (-self.mu * r).exp() * (1.0 + self.mu * r) / (r * r)
    }
}

/// Finite sum of powers: V(r) = sum_i k_i r^alpha_i.
#[derive(Debug, Clone)]
pub struct PowerSum {
    pub terms: Vec<(f64, f64)>, // (k, alpha)
}

impl PowerSum {
    pub fn new(terms: Vec<(f64, f64)>) -> PowerSum {
        PowerSum { terms }
    }
}

impl CentralPotential for PowerSum {
    fn name(&self) -> String {
        let body: Vec<String> = self
            .terms
            .iter()
            .map(|(k, a)| format!("{k}*r^{a}"))
            .collect();
        format!("power-sum({})", body.join(" + "))
    }

    fn parameters(&self) -> Vec<(String, f64)> {
        let mut out = Vec::new();
        for (i, (k, a)) in self.terms.iter().enumerate() {
            out.push((format!("k{i}"), *k));
            out.push((format!("alpha{i}"), *a));
        }
        out
    }

    fn derivs(&self, r: f64) -> Derivs {
        self.terms
            .iter()
            .fold(Derivs::ZERO, |acc, &(k, a)| acc.add(monomial_derivs(k, a, r)))
    }

    fn value(&self, r: f64) -> f64 {
        self.terms.iter().map(|&(k, a)| k * r.powf(a)).sum()
    }

    fn slope(&self, r: f64) -> f64 {
        self.terms
            .iter()
            .map(|&(k, a)| k * a * r.powf(a - 1.0))
            .sum()
    }
}

// ---------------------------------------------------------------------------
// JSON-facing potential records (single source for the CLI and bindings)
// ---------------------------------------------------------------------------

/// Serializable description of a built-in potential.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum PotentialSpec {
    Homogeneous {
        k: f64,
        alpha: f64,
    },
    LennardJones {
        a: f64,
        b: f64,
    },
    ScreenedCoulomb {
        #[serde(default = "default_amplitude")]
        amplitude: f64,
        mu: f64,
    },
    PowerSum {
        terms: Vec<PowerTerm>,
    },
}

fn default_amplitude() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerTerm {
    pub k: f64,
    pub alpha: f64,
}

impl PotentialSpec {
    pub fn build(&self) -> Result<Box<dyn CentralPotential>> {
        match self {
            PotentialSpec::Homogeneous { k, alpha } => {
                if *k == 0.0 || *alpha == 0.0 {
                    return Err(Error::DegeneratePotential(format!(
                        "homogeneous with k = {k}, alpha = {alpha} is constant"
                    )));
                }
                Ok(Box::new(Homogeneous::new(*k, *alpha)))
            }
            PotentialSpec::LennardJones { a, b } => Ok(Box::new(LennardJones { a: *a, b: *b })),
            PotentialSpec::ScreenedCoulomb { amplitude, mu } => {
                if *amplitude == 0.0 {
                    return Err(Error::DegeneratePotential(
                        "screened Coulomb with zero amplitude".into(),
                    ));
                }
                Ok(Box::new(ScreenedCoulomb {
                    amplitude: *amplitude,
                    mu: *mu,
                }))
            }
            PotentialSpec::PowerSum { terms } => {
                if terms.is_empty() {
                    return Err(Error::DegeneratePotential("power sum with no terms".into()));
                }
                Ok(Box::new(PowerSum::new(
                    terms.iter().map(|t| (t.k, t.alpha)).collect(),
                )))
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Derivative validation against finite differences of V
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct DerivCheck {
    pub order: usize,
    pub analytic: f64,
    pub estimated: f64,
    pub rel_error: f64,
    pub pass: bool,
}

#[derive(Debug, Clone)]
pub struct ValidationReport {
    pub r: f64,
    pub tolerance: f64,
    pub checks: Vec<DerivCheck>,
    pub pass: bool,
}

/// 4th-order central stencils for d^k V / dr^k, k = 1..4, from values of V.
fn stencil_estimate(vals: &[f64; 7], h: f64, order: usize) -> f64 {
    // offsets -3h .. 3h
    let f = vals;
    match order {
        1 => (f[1] - 8.0 * f[2] + 8.0 * f[4] - f[5]) / (12.0 * h),
        2 => (-f[1] + 16.0 * f[2] - 30.0 * f[3] + 16.0 * f[4] - f[5]) / (12.0 * h * h),
        3 => (f[0] - 8.0 * f[1] + 13.0 * f[2] - 13.0 * f[4] + 8.0 * f[5] - f[6]) / (8.0 * h * h * h),
        4 => {
            (-f[0] + 12.0 * f[1] - 39.0 * f[2] + 56.0 * f[3] - 39.0 * f[4] + 12.0 * f[5] - f[6])
                / (6.0 * h * h * h * h)
        }
        _ => unreachable!(),
    }
}

/// Compares the analytic V'..V'''' against high-order central differences of
/// V alone. Each order is estimated on a halving step ladder; the pair of
/// adjacent steps with the smallest raw disagreement locates the
/// truncation/roundoff crossover and gets one Richardson extrapolation. This
/// handles both steep potentials (small optimal h) and exact-polynomial
/// cases, where large h keeps the division by h^k benign.
pub fn validate_derivs(
    potential: &dyn CentralPotential,
    r: f64,
    tolerance: f64,
) -> Result<ValidationReport> {
    let exact = eval_derivs(potential, r)?;
    let (lo, hi) = potential.domain();
    // largest step keeping the 7-point stencil strictly inside the domain
    let room = ((r - lo) / 3.5).min(if hi.is_finite() { (hi - r) / 3.5 } else { f64::INFINITY });
    let h_max = (0.2 * r).min(room);
    if !(h_max > 0.0) {
        return Err(Error::DomainViolation { r, lo, hi });
    }
    let steps: Vec<f64> = (0..6).map(|k| h_max / (1u32 << k) as f64).collect();

    let tables: Vec<([f64; 7], f64)> = steps
        .iter()
        .map(|&h| {
            let mut vals = [0.0; 7];
            for (j, off) in (-3..=3).enumerate() {
                vals[j] = potential.value(r + off as f64 * h);
            }
            (vals, h)
        })
        .collect();

    let analytic = [exact.d1, exact.d2, exact.d3, exact.d4];
    let mut checks = Vec::with_capacity(4);
    for order in 1..=4 {
        let ests: Vec<f64> = tables
            .iter()
            .map(|(vals, h)| stencil_estimate(vals, *h, order))
            .collect();
        let mut best = ests[0];
        let mut best_gap = f64::INFINITY;
        for w in ests.windows(2) {
            let gap = (w[1] - w[0]).abs();
            if gap < best_gap {
                best_gap = gap;
                // stencils are O(h^4): one Richardson step on the best pair
                best = (16.0 * w[1] - w[0]) / 15.0;
            }
        }
        let a = analytic[order - 1];
        let rel_error = (best - a).abs() / a.abs().max(1.0);
        checks.push(DerivCheck {
            order,
            analytic: a,
            estimated: best,
            rel_error,
            pass: rel_error <= tolerance,
        });
    }
    let pass = checks.iter().all(|c| c.pass);
    Ok(ValidationReport {
        r,
        tolerance,
        checks,
        pass,
    })
}

// ---------------------------------------------------------------------------
// Admissible window
// ---------------------------------------------------------------------------

/// Radial interval on which nd.1 and nd.2 were verified on a grid, together
/// with the induced angular-momentum range.
#[derive(Debug, Clone, Copy)]
pub struct AdmissibleWindow {
    pub r_lo: f64,
    pub r_hi: f64,
    pub gamma_lo: f64,
    pub gamma_hi: f64,
}

impl AdmissibleWindow {
    pub fn contains_i2(&self, i2: f64) -> bool {
        i2 > self.gamma_lo && i2 < self.gamma_hi
    }
}

/// Validates nd.1 and nd.2 at `grid_size` equispaced nodes of [r_lo, r_hi]
/// and returns the window with its gamma bounds, stored sorted ascending.
pub fn admissible_window(
    potential: &dyn CentralPotential,
    r_lo: f64,
    r_hi: f64,
    grid_size: usize,
) -> Result<AdmissibleWindow> {
    if !(r_lo > 0.0 && r_lo < r_hi) {
        return Err(Error::InvalidConfig(format!(
            "window requires 0 < r_lo < r_hi, got ({r_lo}, {r_hi})"
        )));
    }
    if grid_size < 2 {
        return Err(Error::InvalidConfig(format!(
            "window grid_size must be >= 2, got {grid_size}"
        )));
    }
    let step = (r_hi - r_lo) / (grid_size - 1) as f64;
    for i in 0..grid_size {
        let r = if i == grid_size - 1 { r_hi } else { r_lo + i as f64 * step };
        let d = eval_derivs(potential, r)?;
        if !(d.d1 > 0.0) {
            return Err(Error::WindowRejected {
                r,
                condition: "V'(r) > 0",
                value: d.d1,
            });
        }
        let nd2 = d.d2 + 3.0 * d.d1 / r;
        if !(nd2 > 0.0) {
            return Err(Error::WindowRejected {
                r,
                condition: "V''(r) + 3 V'(r)/r > 0",
                value: nd2,
            });
        }
    }
    let gamma_lo = (r_lo.powi(3) * potential.derivs(r_lo).d1).sqrt();
    let gamma_hi = (r_hi.powi(3) * potential.derivs(r_hi).d1).sqrt();
    if !(gamma_lo < gamma_hi) {
        return Err(Error::WindowNotMonotone {
            r_lo,
            r_hi,
            gamma_lo,
            gamma_hi,
        });
    }
    Ok(AdmissibleWindow {
        r_lo,
        r_hi,
        gamma_lo,
        gamma_hi,
    })
}

// ---------------------------------------------------------------------------
// Homogeneous-family classification
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HomogeneousClass {
    Admissible,
    Excluded(ExclusionReason),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExclusionReason {
    /// k * alpha <= 0: V' is not positive, nd.1 fails everywhere.
    NonPositiveSlope,
    /// alpha + 2 <= 0: nd.2 fails everywhere.
    CentrifugalCollapse,
    /// alpha = -1: the Kepler potential.
    Kepler,
    /// alpha = 2: the harmonic potential.
    Harmonic,
}

impl std::fmt::Display for ExclusionReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ExclusionReason::NonPositiveSlope => write!(f, "k*alpha <= 0 (V' not positive)"),
            ExclusionReason::CentrifugalCollapse => write!(f, "alpha + 2 <= 0"),
            ExclusionReason::Kepler => write!(f, "alpha = -1 (Kepler potential)"),
            ExclusionReason::Harmonic => write!(f, "alpha = 2 (harmonic potential)"),
        }
    }
}

/// Classifies k r^alpha: admissible iff k*alpha > 0, alpha + 2 > 0 and
/// alpha is neither -1 nor 2.
pub fn homogeneous_admissibility(k: f64, alpha: f64) -> Result<HomogeneousClass> {
    if k == 0.0 || alpha == 0.0 {
        return Err(Error::DegeneratePotential(format!(
            "homogeneous with k = {k}, alpha = {alpha} is constant"
        )));
    }
    let class = if alpha + 2.0 <= 0.0 {
        HomogeneousClass::Excluded(ExclusionReason::CentrifugalCollapse)
    } else if k * alpha <= 0.0 {
        HomogeneousClass::Excluded(ExclusionReason::NonPositiveSlope)
    } else if alpha == -1.0 {
        HomogeneousClass::Excluded(ExclusionReason::Kepler)
    } else if alpha == 2.0 {
        HomogeneousClass::Excluded(ExclusionReason::Harmonic)
    } else {
        HomogeneousClass::Admissible
    };
    Ok(class)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kepler_derivs_at_one() {
        let d = eval_derivs(&Homogeneous::kepler(), 1.0).unwrap();
        assert_eq!((d.v, d.d1, d.d2, d.d3, d.d4), (-1.0, 1.0, -2.0, 6.0, -24.0));
    }

    #[test]
    fn harmonic_derivs_at_two() {
        let d = eval_derivs(&Homogeneous::harmonic(), 2.0).unwrap();
        assert_eq!((d.v, d.d1, d.d2, d.d3, d.d4), (2.0, 2.0, 1.0, 0.0, 0.0));
    }

    #[test]
    fn cubic_derivs_at_one() {
        let d = eval_derivs(&Homogeneous::new(1.0, 3.0), 1.0).unwrap();
        assert_eq!((d.v, d.d1, d.d2, d.d3, d.d4), (1.0, 3.0, 6.0, 6.0, 0.0));
    }

    #[test]
    fn screened_coulomb_reduces_to_kepler() {
        let sc = ScreenedCoulomb {
            amplitude: 1.0,
            mu: 0.0,
        };
        for r in [0.3, 1.0, 2.7] {
            let a = sc.derivs(r);
            let b = Homogeneous::kepler().derivs(r);
            for (x, y) in [(a.v, b.v), (a.d1, b.d1), (a.d2, b.d2), (a.d3, b.d3), (a.d4, b.d4)] {
                assert!((x - y).abs() <= 1e-14 * y.abs().max(1.0));
            }
        }
    }

    #[test]
    fn domain_violation_rejected() {
        assert!(matches!(
            eval_derivs(&Homogeneous::kepler(), -1.0),
            Err(Error::DomainViolation { .. })
        ));
        assert!(matches!(
            eval_derivs(&Homogeneous::kepler(), 0.0),
            Err(Error::DomainViolation { .. })
        ));
    }

    #[test]
    fn validate_kepler_at_one() {
        let rep = validate_derivs(&Homogeneous::kepler(), 1.0, 1e-6).unwrap();
        assert!(rep.pass, "{:?}", rep.checks);
    }

    #[test]
    fn validate_harmonic_tight() {
        // stencils cancel exactly on quadratics up to roundoff
        let rep = validate_derivs(&Homogeneous::harmonic(), 1.0, 1e-10).unwrap();
        assert!(rep.pass, "{:?}", rep.checks);
    }

    #[test]
    fn validate_detects_corrupted_third_derivative() {
        struct Corrupted(Homogeneous);
        impl CentralPotential for Corrupted {
            fn name(&self) -> String {
                "corrupted".into()
            }
            fn parameters(&self) -> Vec<(String, f64)> {
                vec![]
            }
            fn derivs(&self, r: f64) -> Derivs {
                let mut d = self.0.derivs(r);
                d.d3 += 0.5 * d.d3.abs().max(1.0);
                d
            }
            fn value(&self, r: f64) -> f64 {
                self.0.value(r)
            }
        }
        let rep = validate_derivs(&Corrupted(Homogeneous::kepler()), 1.0, 1e-6).unwrap();
        assert!(!rep.pass);
        assert!(!rep.checks[2].pass);
        assert!(rep.checks[0].pass && rep.checks[1].pass && rep.checks[3].pass);
    }

    #[test]
    fn validate_all_families_random_radii() {
        // deterministic LCG; radii in a range where every family is defined
        let mut state: u64 = 0x9e3779b97f4a7c15;
        let mut next = move || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        let pots: Vec<Box<dyn CentralPotential>> = vec![
            Box::new(Homogeneous::kepler()),
            Box::new(Homogeneous::harmonic()),
            Box::new(Homogeneous::new(2.0, 3.0)),
            Box::new(LennardJones { a: 1.0, b: 1.0 }),
            Box::new(ScreenedCoulomb {
                amplitude: 1.0,
                mu: 1.3,
            }),
            Box::new(PowerSum::new(vec![(1.0, 1.0), (1.0, 4.0)])),
        ];
        for pot in &pots {
            for _ in 0..10 {
                let r = 0.8 + 0.8 * next();
                let rep = validate_derivs(pot.as_ref(), r, 1e-6).unwrap();
                assert!(rep.pass, "{} at r = {r}: {:?}", pot.name(), rep.checks);
            }
        }
    }

    #[test]
    fn kepler_window_gammas() {
        // r^3 V' = r, so gamma = sqrt(r)
        let w = admissible_window(&Homogeneous::kepler(), 0.5, 2.0, 256).unwrap();
        assert!((w.gamma_lo - 0.5f64.sqrt()).abs() < 1e-14);
        assert!((w.gamma_hi - 2f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn harmonic_window_gammas() {
        // r^3 V' = r^4, so gamma = r^2
        let w = admissible_window(&Homogeneous::harmonic(), 0.5, 2.0, 256).unwrap();
        assert!((w.gamma_lo - 0.25).abs() < 1e-14);
        assert!((w.gamma_hi - 4.0).abs() < 1e-14);
    }

    #[test]
    fn decreasing_potential_rejected() {
        let err = admissible_window(&Homogeneous::new(-1.0, 1.0), 0.5, 2.0, 64).unwrap_err();
        match err {
            Error::WindowRejected { condition, .. } => assert_eq!(condition, "V'(r) > 0"),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn lennard_jones_window_bounds() {
        // nd holds on (2^(1/6), 5^(1/6)) for a = b = 1
        let lj = LennardJones { a: 1.0, b: 1.0 };
        assert!(admissible_window(&lj, 1.15, 1.30, 128).is_ok());
        assert!(admissible_window(&lj, 1.05, 1.30, 128).is_err());
        assert!(admissible_window(&lj, 1.15, 1.35, 128).is_err());
    }

    #[test]
    fn gamma_monotone_on_random_subwindows() {
        let mut state: u64 = 42;
        let mut next = move || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        let pot = PowerSum::new(vec![(1.0, 1.0), (0.5, 4.0)]);
        for _ in 0..50 {
            let a = 0.2 + 2.0 * next();
            let b = a + 0.1 + 2.0 * next();
            let w = admissible_window(&pot, a, b, 64).unwrap();
            assert!(w.gamma_lo < w.gamma_hi);
            // r^3 V' strictly increasing across the grid
            let mut prev = f64::NEG_INFINITY;
            for i in 0..64 {
                let r = a + (b - a) * i as f64 / 63.0;
                let s = r.powi(3) * pot.derivs(r).d1;
                assert!(s > prev);
                prev = s;
            }
        }
    }

    #[test]
    fn homogeneous_classification() {
        use ExclusionReason::*;
        assert_eq!(
            homogeneous_admissibility(1.0, 3.0).unwrap(),
            HomogeneousClass::Admissible
        );
        assert_eq!(
            homogeneous_admissibility(1.0, 2.0).unwrap(),
            HomogeneousClass::Excluded(Harmonic)
        );
        assert_eq!(
            homogeneous_admissibility(-1.0, -1.0).unwrap(),
            HomogeneousClass::Excluded(Kepler)
        );
        assert_eq!(
            homogeneous_admissibility(1.0, -2.0).unwrap(),
            HomogeneousClass::Excluded(CentrifugalCollapse)
        );
        assert_eq!(
            homogeneous_admissibility(1.0, -0.5).unwrap(),
            HomogeneousClass::Excluded(NonPositiveSlope)
        );
        assert_eq!(
            homogeneous_admissibility(-1.0, -3.0).unwrap(),
            HomogeneousClass::Excluded(CentrifugalCollapse)
        );
        assert!(homogeneous_admissibility(0.0, 2.0).is_err());
        assert!(homogeneous_admissibility(1.0, 0.0).is_err());
    }

    #[test]
    fn potential_spec_builds_and_roundtrips() {
        let specs = [
            r#"{"type": "homogeneous", "k": 1.0, "alpha": 3.0}"#,
            r#"{"type": "lennard_jones", "a": 1.0, "b": 1.0}"#,
            r#"{"type": "screened_coulomb", "mu": 0.5}"#,
            r#"{"type": "power_sum", "terms": [{"k": 1.0, "alpha": 1.0}, {"k": 1.0, "alpha": 4.0}]}"#,
        ];
        for s in specs {
            let spec: PotentialSpec = serde_json::from_str(s).unwrap();
            let again: PotentialSpec =
                serde_json::from_str(&serde_json::to_string(&spec).unwrap()).unwrap();
            assert_eq!(spec, again);
            spec.build().unwrap();
        }
    }
}
