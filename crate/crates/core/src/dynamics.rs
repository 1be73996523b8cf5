//! Long-time integration of the perturbed Cartesian Hamiltonian
//!
//!   h = |p|^2/2 + V(|q|) + eps * f(q, p)
//!
//! with a 4th-order composition of velocity-Verlet substeps (position-only
//! perturbations keep the splitting explicit; momentum-dependent ones fall
//! back to implicit midpoint), action reconstruction along trajectories, and
//! the drift experiments probing long-time stability of (I1, I2).

use crate::actions::action_integral;
use crate::circular::{birkhoff_coefficients, circular_radius};
use crate::error::{Error, Result};
use crate::potentials::{AdmissibleWindow, CentralPotential};
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CartesianState {
    pub q: [f64; 3],
    pub p: [f64; 3],
    pub t: f64,
}

impl CartesianState {
    pub fn radius(&self) -> f64 {
        norm(&self.q)
    }
}

fn norm(v: &[f64; 3]) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

fn cross(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

// ---------------------------------------------------------------------------
// Perturbations
// ---------------------------------------------------------------------------

/// Analytic perturbation f(q, p) with its gradients.
pub trait Perturbation: Send + Sync {
    fn name(&self) -> String;
    fn value(&self, q: &[f64; 3], p: &[f64; 3]) -> f64;
    fn grad_q(&self, q: &[f64; 3], p: &[f64; 3]) -> [f64; 3];
    fn grad_p(&self, q: &[f64; 3], p: &[f64; 3]) -> [f64; 3];
    /// Momentum-dependent perturbations force the implicit scheme.
    fn momentum_dependent(&self) -> bool {
        false
    }
}

/// f(q) = q_axis: breaks rotational symmetry with a uniform pull.
#[derive(Debug, Clone, Copy)]
pub struct CoordinatePull {
    pub axis: usize,
}

impl CoordinatePull {
    pub fn new(axis: usize) -> CoordinatePull {
        assert!(axis < 3);
        CoordinatePull { axis }
    }
}

impl Perturbation for CoordinatePull {
    fn name(&self) -> String {
        format!("q{}", self.axis + 1)
    }

    fn value(&self, q: &[f64; 3], _p: &[f64; 3]) -> f64 {
        q[self.axis]
    }

    fn grad_q(&self, _q: &[f64; 3], _p: &[f64; 3]) -> [f64; 3] {
        let mut g = [0.0; 3];
        g[self.axis] = 1.0;
        g
    }

    fn grad_p(&self, _q: &[f64; 3], _p: &[f64; 3]) -> [f64; 3] {
        [0.0; 3]
    }
}

/// f(q) = q1 q2 / (1 + |q|^2): bounded, analytic, symmetry-breaking.
#[derive(Debug, Clone, Copy)]
pub struct BoundedProduct;

impl Perturbation for BoundedProduct {
    fn name(&self) -> String {
        "q1*q2/(1+|q|^2)".into()
    }

    fn value(&self, q: &[f64; 3], _p: &[f64; 3]) -> f64 {
        q[0] * q[1] / (1.0 + q[0] * q[0] + q[1] * q[1] + q[2] * q[2])
    }

    fn grad_q(&self, q: &[f64; 3], _p: &[f64; 3]) -> [f64; 3] {
        let u = 1.0 / (1.0 + q[0] * q[0] + q[1] * q[1] + q[2] * q[2]);
        let f = q[0] * q[1] * u;
        [
            q[1] * u - 2.0 * q[0] * f * u,
            q[0] * u - 2.0 * q[1] * f * u,
            -2.0 * q[2] * f * u,
        ]
    }

    fn grad_p(&self, _q: &[f64; 3], _p: &[f64; 3]) -> [f64; 3] {
        [0.0; 3]
    }
}

/// Finite-difference consistency check of a perturbation's gradients.
pub fn check_perturbation_gradients(
    pert: &dyn Perturbation,
    q: &[f64; 3],
    p: &[f64; 3],
    tol: f64,
) -> bool {
    let h = 1e-6;
    for i in 0..3 {
        let mut qa = *q;
        let mut qb = *q;
        qa[i] -= h;
        qb[i] += h;
        let fd = (pert.value(&qb, p) - pert.value(&qa, p)) / (2.0 * h);
        if (fd - pert.grad_q(q, p)[i]).abs() > tol * fd.abs().max(1.0) {
            return false;
        }
        let mut pa = *p;
        let mut pb = *p;
        pa[i] -= h;
        pb[i] += h;
        let fd = (pert.value(q, &pb) - pert.value(q, &pa)) / (2.0 * h);
        if (fd - pert.grad_p(q, p)[i]).abs() > tol * fd.abs().max(1.0) {
            return false;
        }
    }
    true
}

// ---------------------------------------------------------------------------
// Integrators
// ---------------------------------------------------------------------------

/// Total energy of the (possibly perturbed) Hamiltonian.
pub fn total_energy(
    potential: &dyn CentralPotential,
    pert: Option<(&dyn Perturbation, f64)>,
    state: &CartesianState,
) -> f64 {
    let kinetic = 0.5 * (state.p[0] * state.p[0] + state.p[1] * state.p[1] + state.p[2] * state.p[2]);
    let mut e = kinetic + potential.value(state.radius());
    if let Some((f, eps)) = pert {
        e += eps * f.value(&state.q, &state.p);
    }
    e
}

struct Stepper<'a> {
    potential: &'a dyn CentralPotential,
    pert: Option<(&'a dyn Perturbation, f64)>,
    dt: f64,
    r_guard: f64,
    implicit: bool,
    // triple-jump composition coefficients
    w_outer: f64,
    w_inner: f64,
    state: CartesianState,
    step_index: u64,
    t0: f64,
}

impl<'a> Stepper<'a> {
    fn new(
        potential: &'a dyn CentralPotential,
        pert: Option<(&'a dyn Perturbation, f64)>,
        state0: CartesianState,
        dt: f64,
        r_guard: f64,
    ) -> Stepper<'a> {
        let cbrt2 = 2f64.powf(1.0 / 3.0);
        let w_outer = 1.0 / (2.0 - cbrt2);
        let w_inner = -cbrt2 / (2.0 - cbrt2);
        let implicit = pert.map(|(f, _)| f.momentum_dependent()).unwrap_or(false);
        Stepper {
            potential,
            pert,
            dt,
            r_guard,
            implicit,
            w_outer,
            w_inner,
            state: state0,
            step_index: 0,
            t0: state0.t,
        }
    }

    fn grad_w(&self, q: &[f64; 3]) -> Result<[f64; 3]> {
        let r = norm(q);
        if r < self.r_guard {
            return Err(Error::CloseApproach {
                t: self.state.t,
                r,
                r_guard: self.r_guard,
            });
        }
        let slope_over_r = self.potential.slope(r) / r;
        let mut g = [q[0] * slope_over_r, q[1] * slope_over_r, q[2] * slope_over_r];
        if let Some((f, eps)) = self.pert {
            let gf = f.grad_q(q, &self.state.p);
            for i in 0..3 {
                g[i] += eps * gf[i];
            }
        }
        Ok(g)
    }

    fn verlet_substep(&mut self, h: f64) -> Result<()> {
        let g = self.grad_w(&self.state.q)?;
        for i in 0..3 {
            self.state.p[i] -= 0.5 * h * g[i];
        }
        for i in 0..3 {
            self.state.q[i] += h * self.state.p[i];
        }
        let g = self.grad_w(&self.state.q)?;
        for i in 0..3 {
            self.state.p[i] -= 0.5 * h * g[i];
        }
        Ok(())
    }

    fn midpoint_step(&mut self) -> Result<()> {
        let z0 = self.state;
        let field = |q: &[f64; 3], p: &[f64; 3]| -> Result<([f64; 3], [f64; 3])> {
            let r = norm(q);
            if r < self.r_guard {
                return Err(Error::CloseApproach {
                    t: z0.t,
                    r,
                    r_guard: self.r_guard,
                });
            }
            let slope_over_r = self.potential.slope(r) / r;
            let mut dq = *p;
            let mut dp = [-q[0] * slope_over_r, -q[1] * slope_over_r, -q[2] * slope_over_r];
            if let Some((f, eps)) = self.pert {
                let gq = f.grad_q(q, p);
                let gp = f.grad_p(q, p);
                for i in 0..3 {
                    dq[i] += eps * gp[i];
                    dp[i] -= eps * gq[i];
                }
            }
            Ok((dq, dp))
        };

        let (dq, dp) = field(&z0.q, &z0.p)?;
        let mut q = [0.0; 3];
        let mut p = [0.0; 3];
        for i in 0..3 {
            q[i] = z0.q[i] + self.dt * dq[i];
            p[i] = z0.p[i] + self.dt * dp[i];
        }
        let mut converged = false;
        for _ in 0..100 {
            let mid_q = [
                0.5 * (z0.q[0] + q[0]),
                0.5 * (z0.q[1] + q[1]),
                0.5 * (z0.q[2] + q[2]),
            ];
            let mid_p = [
                0.5 * (z0.p[0] + p[0]),
                0.5 * (z0.p[1] + p[1]),
                0.5 * (z0.p[2] + p[2]),
            ];
            let (dq, dp) = field(&mid_q, &mid_p)?;
            let mut delta: f64 = 0.0;
            let mut scale: f64 = 1.0;
            let mut q_new = [0.0; 3];
            let mut p_new = [0.0; 3];
            for i in 0..3 {
                q_new[i] = z0.q[i] + self.dt * dq[i];
                p_new[i] = z0.p[i] + self.dt * dp[i];
                delta = delta.max((q_new[i] - q[i]).abs()).max((p_new[i] - p[i]).abs());
                scale = scale.max(q_new[i].abs()).max(p_new[i].abs());
            }
            q = q_new;
            p = p_new;
            if delta <= 1e-12 * scale {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::NotConverged {
                what: "implicit midpoint fixed point",
                iterations: 100,
            });
        }
        self.state.q = q;
        self.state.p = p;
        Ok(())
    }

    fn step(&mut self) -> Result<()> {
        if self.implicit {
            self.midpoint_step()?;
        } else {
            self.verlet_substep(self.w_outer * self.dt)?;
            self.verlet_substep(self.w_inner * self.dt)?;
            self.verlet_substep(self.w_outer * self.dt)?;
        }
        self.step_index += 1;
        self.state.t = self.t0 + self.step_index as f64 * self.dt;
        Ok(())
    }
}

/// Integrates n_steps of the perturbed system, returning every
/// sample_stride-th state (the initial state included, the final state
/// always appended).
pub fn integrate(
    potential: &dyn CentralPotential,
    pert: Option<(&dyn Perturbation, f64)>,
    state0: CartesianState,
    dt: f64,
    n_steps: usize,
    sample_stride: usize,
    r_guard: f64,
) -> Result<Vec<CartesianState>> {
    if !(dt > 0.0) {
        return Err(Error::InvalidConfig(format!("dt must be positive, got {dt}")));
    }
    let stride = sample_stride.max(1);
    let mut stepper = Stepper::new(potential, pert, state0, dt, r_guard);
    let mut samples = Vec::with_capacity(n_steps / stride + 2);
    samples.push(stepper.state);
    for k in 1..=n_steps {
        stepper.step()?;
        if k % stride == 0 || k == n_steps {
            samples.push(stepper.state);
        }
    }
    Ok(samples)
}

// ---------------------------------------------------------------------------
// Action reconstruction and initial data
// ---------------------------------------------------------------------------

/// (I1, I2, E) of a Cartesian state: I2 = |q x p|, E = |p|^2/2 + V(|q|),
/// I1 from the action quadrature at that (I2, E).
pub fn actions_of_state(
    potential: &dyn CentralPotential,
    window: &AdmissibleWindow,
    state: &CartesianState,
) -> Result<(f64, f64, f64)> {
    let i2 = norm(&cross(&state.q, &state.p));
    if !window.contains_i2(i2) {
        return Err(Error::OutOfWindow {
            i2,
            gamma_lo: window.gamma_lo,
            gamma_hi: window.gamma_hi,
        });
    }
    let r = state.radius();
    let e = 0.5 * (state.p[0] * state.p[0] + state.p[1] * state.p[1] + state.p[2] * state.p[2])
        + potential.value(r);
    let i1 = action_integral(potential, window, i2, e)?;
    Ok((i1, i2, e))
}

/// Euler Z-X-Z rotation applied to a vector.
fn rotate(v: &[f64; 3], angles: &[f64; 3]) -> [f64; 3] {
    let rz = |v: [f64; 3], a: f64| -> [f64; 3] {
        let (s, c) = a.sin_cos();
        [c * v[0] - s * v[1], s * v[0] + c * v[1], v[2]]
    };
    let rx = |v: [f64; 3], a: f64| -> [f64; 3] {
        let (s, c) = a.sin_cos();
        [v[0], c * v[1] - s * v[2], s * v[1] + c * v[2]]
    };
    rz(rx(rz(*v, angles[2]), angles[1]), angles[0])
}

/// Builds a state with prescribed actions: the particle starts at the
/// circular radius r0(I2) with outward radial momentum sqrt(2 (E - V*(r0)))
/// in the xy-plane, optionally rotated by Euler angles. Checkable by the
/// actions_of_state round trip.
pub fn state_from_actions(
    potential: &dyn CentralPotential,
    window: &AdmissibleWindow,
    i1: f64,
    i2: f64,
    orientation: Option<[f64; 3]>,
) -> Result<CartesianState> {
    let r0 = circular_radius(potential, i2, window)?;
    let e = crate::actions::energy_from_actions(potential, window, i1, i2)?;
    let v_star = 0.5 * i2 * i2 / (r0 * r0) + potential.value(r0);
    let p_r = (2.0 * (e - v_star)).max(0.0).sqrt();
    let mut q = [r0, 0.0, 0.0];
    let mut p = [p_r, i2 / r0, 0.0];
    if let Some(angles) = orientation {
        q = rotate(&q, &angles);
        p = rotate(&p, &angles);
    }
    Ok(CartesianState { q, p, t: 0.0 })
}

/// Min/max radius attained over the samples of a trajectory.
pub fn radius_envelope(trajectory: &[CartesianState]) -> Result<(f64, f64)> {
    if trajectory.is_empty() {
        return Err(Error::InvalidConfig("empty trajectory".into()));
    }
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for s in trajectory {
        let r = s.radius();
        lo = lo.min(r);
        hi = hi.max(r);
    }
    Ok((lo, hi))
}

// ---------------------------------------------------------------------------
// Drift experiments
// ---------------------------------------------------------------------------

/// Summary of action drift along one perturbed trajectory.
#[derive(Debug, Clone)]
pub struct DriftReport {
    pub epsilon: f64,
    pub t_final: f64,
    pub dt: f64,
    pub max_drift_i1: f64,
    pub max_drift_i2: f64,
    pub max_drift_norm: f64,
    /// max |h(t) - h(0)| / max(1, |h(0)|) over samples of the full
    /// (perturbed) energy.
    pub energy_error: f64,
    pub r_min: f64,
    pub r_max: f64,
    /// Samples whose actions could not be reconstructed (excluded from the
    /// drift statistics).
    pub flagged_samples: usize,
    /// None when the run finished; the abort diagnostic otherwise.
    pub abort: Option<String>,
}

/// Configuration of one drift sweep.
#[derive(Debug, Clone)]
pub struct DriftSetup {
    pub epsilons: Vec<f64>,
    pub n_periods: f64,
    /// Steps per radial period at the initial circular frequency.
    pub steps_per_period: usize,
    /// Samples are taken every this many steps.
    pub sample_stride: usize,
    pub initial_i1: f64,
    pub initial_i2: f64,
    pub orientation: Option<[f64; 3]>,
}

impl DriftSetup {
    pub fn new(epsilons: Vec<f64>, n_periods: f64, initial: (f64, f64)) -> DriftSetup {
        DriftSetup {
            epsilons,
            n_periods,
            steps_per_period: 400,
            sample_stride: 400,
            initial_i1: initial.0,
            initial_i2: initial.1,
            orientation: None,
        }
    }
}

fn drift_single(
    potential: &dyn CentralPotential,
    window: &AdmissibleWindow,
    pert: &dyn Perturbation,
    epsilon: f64,
    setup: &DriftSetup,
    state0: CartesianState,
    dt: f64,
    n_steps: usize,
    r_guard: f64,
) -> Result<DriftReport> {
    let pert_opt = if epsilon == 0.0 {
        None
    } else {
        Some((pert, epsilon))
    };
    let (i1_ref, i2_ref, _) = actions_of_state(potential, window, &state0)?;
    let e_ref = total_energy(potential, pert_opt, &state0);
    let e_scale = e_ref.abs().max(1.0);

    let mut stepper = Stepper::new(potential, pert_opt, state0, dt, r_guard);
    let mut report = DriftReport {
        epsilon,
        t_final: 0.0,
        dt,
        max_drift_i1: 0.0,
        max_drift_i2: 0.0,
        max_drift_norm: 0.0,
        energy_error: 0.0,
        r_min: state0.radius(),
        r_max: state0.radius(),
        flagged_samples: 0,
        abort: None,
    };
    let stride = setup.sample_stride.max(1);

    let observe = |report: &mut DriftReport, state: &CartesianState| {
        let r = state.radius();
        report.r_min = report.r_min.min(r);
        report.r_max = report.r_max.max(r);
        let e = total_energy(potential, pert_opt, state);
        report.energy_error = report.energy_error.max((e - e_ref).abs() / e_scale);
        match actions_of_state(potential, window, state) {
            Ok((i1, i2, _)) => {
                let d1 = (i1 - i1_ref).abs();
                let d2 = (i2 - i2_ref).abs();
                report.max_drift_i1 = report.max_drift_i1.max(d1);
                report.max_drift_i2 = report.max_drift_i2.max(d2);
                report.max_drift_norm = report.max_drift_norm.max((d1 * d1 + d2 * d2).sqrt());
            }
            Err(_) => report.flagged_samples += 1,
        }
    };

    for k in 1..=n_steps {
        if let Err(e) = stepper.step() {
            report.abort = Some(e.to_string());
            break;
        }
        if k % stride == 0 || k == n_steps {
            observe(&mut report, &stepper.state);
        }
        report.t_final = stepper.state.t;
    }
    Ok(report)
}

/// Runs the drift experiment over the epsilon sweep; distinct epsilon values
/// run concurrently, reports come back in sweep order.
pub fn drift_experiment(
    potential: &dyn CentralPotential,
    window: &AdmissibleWindow,
    pert: &dyn Perturbation,
    setup: &DriftSetup,
) -> Result<Vec<DriftReport>> {
    for &eps in &setup.epsilons {
        if !(eps >= 0.0) || !eps.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "epsilon values must be finite and nonnegative, got {eps}"
            )));
        }
    }
    let state0 = state_from_actions(
        potential,
        window,
        setup.initial_i1,
        setup.initial_i2,
        setup.orientation,
    )?;
    let orbit = birkhoff_coefficients(potential, setup.initial_i2, window)?;
    let period = 2.0 * std::f64::consts::PI / orbit.omega;
    let dt = period / setup.steps_per_period as f64;
    let n_steps = (setup.n_periods * setup.steps_per_period as f64).ceil() as usize;
    let r_guard = 1e-3 * orbit.r0;

    setup
        .epsilons
        .par_iter()
        .map(|&eps| {
            drift_single(
                potential, window, pert, eps, setup, state0, dt, n_steps, r_guard,
            )
        })
        .collect()
}

/// Least-squares fit of log(drift) = log(C) + (1/4) log(eps); ratios are
/// drift_i / (C eps_i^(1/4)).
#[derive(Debug, Clone)]
pub struct DriftFit {
    pub c: f64,
    pub ratios: Vec<f64>,
}

pub fn fit_quarter_power(reports: &[DriftReport]) -> Option<DriftFit> {
    let pts: Vec<(f64, f64)> = reports
        .iter()
        .filter(|r| r.epsilon > 0.0 && r.max_drift_norm > 0.0)
        .map(|r| (r.epsilon, r.max_drift_norm))
        .collect();
    if pts.is_empty() {
        return None;
    }
    let log_c = pts
        .iter()
        .map(|(eps, d)| d.ln() - 0.25 * eps.ln())
        .sum::<f64>()
        / pts.len() as f64;
    let c = log_c.exp();
    let ratios = pts.iter().map(|(eps, d)| d / (c * eps.powf(0.25))).collect();
    Some(DriftFit { c, ratios })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potentials::{admissible_window, Homogeneous};

    fn quartic() -> (Homogeneous, AdmissibleWindow) {
        let p = Homogeneous::new(1.0, 4.0);
        let w = admissible_window(&p, 0.2, 5.0, 64).unwrap();
        (p, w)
    }

    fn circular_kepler() -> CartesianState {
        CartesianState {
            q: [1.0, 0.0, 0.0],
            p: [0.0, 1.0, 0.0],
            t: 0.0,
        }
    }

    #[test]
    fn circular_orbit_stays_circular() {
        let kepler = Homogeneous::kepler();
        let period = 2.0 * std::f64::consts::PI;
        // the discrete circular orbit wobbles by ~0.1 (omega dt)^4
        let dt = period / 1600.0;
        let steps = (50.0 * period / dt) as usize;
        let traj = integrate(&kepler, None, circular_kepler(), dt, steps, 40, 1e-3).unwrap();
        for s in &traj {
            assert!((s.radius() - 1.0).abs() < 1e-9, "r = {} at t = {}", s.radius(), s.t);
        }
    }

    #[test]
    fn harmonic_energy_conservation() {
        let harmonic = Homogeneous::harmonic();
        let state = CartesianState {
            q: [1.3, 0.2, -0.4],
            p: [0.1, 0.9, 0.3],
            t: 0.0,
        };
        let period = 2.0 * std::f64::consts::PI; // radial period is pi
        let dt = period / 1600.0;
        let steps = (200.0 * period / dt) as usize;
        let e0 = total_energy(&harmonic, None, &state);
        let traj = integrate(&harmonic, None, state, dt, steps, 100, 1e-6).unwrap();
        for s in &traj {
            let e = total_energy(&harmonic, None, s);
            assert!((e - e0).abs() < 1e-10 * e0.abs(), "energy error {}", (e - e0).abs());
        }
    }

    #[test]
    fn angular_momentum_exact_for_central_force() {
        let (q4, w) = quartic();
        let state = state_from_actions(&q4, &w, 0.3, 2.0, None).unwrap();
        let l0 = norm(&cross(&state.q, &state.p));
        let orbit = birkhoff_coefficients(&q4, 2.0, &w).unwrap();
        let dt = 2.0 * std::f64::consts::PI / orbit.omega / 400.0;
        let traj = integrate(&q4, None, state, dt, 40_000, 200, 1e-3).unwrap();
        for s in &traj {
            let l = norm(&cross(&s.q, &s.p));
            assert!((l - l0).abs() < 1e-12 * l0, "dL = {}", (l - l0).abs());
        }
    }

    #[test]
    fn time_reversibility() {
        let (q4, w) = quartic();
        let state = state_from_actions(&q4, &w, 0.3, 2.0, None).unwrap();
        let orbit = birkhoff_coefficients(&q4, 2.0, &w).unwrap();
        let dt = 2.0 * std::f64::consts::PI / orbit.omega / 400.0;
        let steps = 20_000;
        let fwd = integrate(&q4, None, state, dt, steps, steps, 1e-3).unwrap();
        let mut back_state = *fwd.last().unwrap();
        back_state.p = [-back_state.p[0], -back_state.p[1], -back_state.p[2]];
        let back = integrate(&q4, None, back_state, dt, steps, steps, 1e-3).unwrap();
        let fin = back.last().unwrap();
        for i in 0..3 {
            assert!((fin.q[i] - state.q[i]).abs() < 1e-8 * state.q[0].abs().max(1.0));
            assert!((-fin.p[i] - state.p[i]).abs() < 1e-8 * norm(&state.p).max(1.0));
        }
    }

    #[test]
    fn fourth_order_energy_scaling() {
        // halving dt cuts the energy error by about 2^4
        let (q4, w) = quartic();
        let state = state_from_actions(&q4, &w, 0.3, 2.0, None).unwrap();
        let orbit = birkhoff_coefficients(&q4, 2.0, &w).unwrap();
        let period = 2.0 * std::f64::consts::PI / orbit.omega;
        let e0 = total_energy(&q4, None, &state);
        let mut errs = Vec::new();
        for steps_per_period in [25usize, 50, 100] {
            let dt = period / steps_per_period as f64;
            let steps = 50 * steps_per_period;
            let traj = integrate(&q4, None, state, dt, steps, 5, 1e-3).unwrap();
            let err = traj
                .iter()
                .map(|s| (total_energy(&q4, None, s) - e0).abs())
                .fold(0.0f64, f64::max);
            errs.push(err);
        }
        for pair in errs.windows(2) {
            let ratio = pair[0] / pair[1];
            assert!(
                (8.0..40.0).contains(&ratio),
                "expected ~16x per halving, got {ratio} ({errs:?})"
            );
        }
    }

    #[test]
    fn actions_of_state_examples() {
        let kepler = Homogeneous::kepler();
        let kw = admissible_window(&kepler, 0.05, 100.0, 64).unwrap();
        let (i1, i2, e) = actions_of_state(&kepler, &kw, &circular_kepler()).unwrap();
        assert!(i1.abs() < 1e-10);
        assert!((i2 - 1.0).abs() < 1e-14);
        assert!((e + 0.5).abs() < 1e-14);

        let harmonic = Homogeneous::harmonic();
        let hw = admissible_window(&harmonic, 0.1, 10.0, 64).unwrap();
        let state = CartesianState {
            q: [1.0, 0.0, 0.0],
            p: [0.0, 2.0, 0.0],
            t: 0.0,
        };
        let (i1, i2, e) = actions_of_state(&harmonic, &hw, &state).unwrap();
        assert!((i2 - 2.0).abs() < 1e-14);
        assert!((e - 2.5).abs() < 1e-14);
        assert!((i1 - 0.25).abs() < 1e-10);
    }

    #[test]
    fn state_from_actions_roundtrip() {
        let (q4, w) = quartic();
        for orientation in [None, Some([0.3, 1.1, -0.7])] {
            let state = state_from_actions(&q4, &w, 0.3, 2.0, orientation).unwrap();
            let (i1, i2, _) = actions_of_state(&q4, &w, &state).unwrap();
            assert!((i1 - 0.3).abs() < 1e-9, "i1 = {i1}");
            assert!((i2 - 2.0).abs() < 1e-12, "i2 = {i2}");
        }
    }

    #[test]
    fn envelope_matches_turning_points() {
        let kepler = Homogeneous::kepler();
        let kw = admissible_window(&kepler, 0.05, 100.0, 64).unwrap();
        let state = state_from_actions(&kepler, &kw, 1.0, 1.0, None).unwrap();
        // E = -1/8 ellipse: turning radii 4 -+ 2 sqrt(3), period 16 pi
        let dt = 0.01;
        let steps = 400_000;
        let traj = integrate(&kepler, None, state, dt, steps, 37, 1e-4).unwrap();
        let (r_min, r_max) = radius_envelope(&traj).unwrap();
        let lo = 4.0 - 2.0 * 3f64.sqrt();
        let hi = 4.0 + 2.0 * 3f64.sqrt();
        assert!((r_min - lo).abs() < 2e-3 * lo, "r_min {r_min} vs {lo}");
        assert!((r_max - hi).abs() < 2e-3 * hi, "r_max {r_max} vs {hi}");
        assert!(radius_envelope(&[]).is_err());
    }

    #[test]
    fn perturbation_gradients_consistent() {
        let points = [
            ([1.0, 0.5, -0.3], [0.2, -0.1, 0.4]),
            ([0.3, 1.2, 0.8], [-0.5, 0.0, 0.1]),
        ];
        for (q, p) in points {
            assert!(check_perturbation_gradients(&CoordinatePull::new(0), &q, &p, 1e-6));
            assert!(check_perturbation_gradients(&BoundedProduct, &q, &p, 1e-6));
        }
    }

    #[test]
    fn implicit_midpoint_handles_momentum_dependence() {
        // f = q1 p2 keeps the Hamiltonian quadratic for the harmonic
        // potential, and implicit midpoint conserves quadratic invariants to
        // the fixed-point tolerance.
        struct Coupling;
        impl Perturbation for Coupling {
            fn name(&self) -> String {
                "q1*p2".into()
            }
            fn value(&self, q: &[f64; 3], p: &[f64; 3]) -> f64 {
                q[0] * p[1]
            }
            fn grad_q(&self, _q: &[f64; 3], p: &[f64; 3]) -> [f64; 3] {
                [p[1], 0.0, 0.0]
            }
            fn grad_p(&self, q: &[f64; 3], _p: &[f64; 3]) -> [f64; 3] {
                [0.0, q[0], 0.0]
            }
            fn momentum_dependent(&self) -> bool {
                true
            }
        }
        let harmonic = Homogeneous::harmonic();
        let pert = Coupling;
        assert!(check_perturbation_gradients(&pert, &[1.0, 0.4, 0.1], &[0.3, -0.2, 0.5], 1e-6));
        let state = CartesianState {
            q: [1.0, 0.0, 0.2],
            p: [0.1, 1.0, 0.0],
            t: 0.0,
        };
        let e0 = total_energy(&harmonic, Some((&pert, 0.05)), &state);
        let traj = integrate(&harmonic, Some((&pert, 0.05)), state, 0.01, 50_000, 500, 1e-6).unwrap();
        for s in &traj {
            let e = total_energy(&harmonic, Some((&pert, 0.05)), s);
            assert!((e - e0).abs() < 1e-9 * e0.abs().max(1.0), "err {}", (e - e0).abs());
        }
    }

    #[test]
    fn zero_epsilon_drift_at_noise_floor() {
        let (q4, w) = quartic();
        let setup = DriftSetup {
            epsilons: vec![0.0],
            n_periods: 100.0,
            steps_per_period: 400,
            sample_stride: 400,
            initial_i1: 0.3,
            initial_i2: 2.0,
            orientation: None,
        };
        let reports = drift_experiment(&q4, &w, &CoordinatePull::new(0), &setup).unwrap();
        let r = &reports[0];
        assert!(r.abort.is_none());
        assert_eq!(r.flagged_samples, 0);
        assert!(r.max_drift_norm < 5e-8, "drift {}", r.max_drift_norm);
        assert!(r.energy_error < 1e-8, "energy {}", r.energy_error);
    }

    #[test]
    fn close_approach_aborts() {
        // radial plunge toward the center in an attractive potential
        let kepler = Homogeneous::kepler();
        let state = CartesianState {
            q: [1.0, 0.0, 0.0],
            p: [-0.5, 0.0, 0.0],
            t: 0.0,
        };
        let err = integrate(&kepler, None, state, 0.01, 100_000, 100, 0.05).unwrap_err();
        assert!(matches!(err, Error::CloseApproach { .. }));
    }
}
