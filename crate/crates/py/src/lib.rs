//! Python bindings: the potential families, window validation, circular-orbit
//! analysis, the numeric action map and the drift experiment, exposed as the
//! `centralmotion_py` extension module.

use centralmotion::error::ErrorCategory;
use centralmotion::{actions, circular, dynamics, potentials};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn to_py(err: centralmotion::Error) -> PyErr {
    match err.category() {
        ErrorCategory::InvalidInput | ErrorCategory::Validation => {
            PyValueError::new_err(err.to_string())
        }
        ErrorCategory::Numeric => PyRuntimeError::new_err(err.to_string()),
    }
}

/// An analytic central potential V(r).
#[pyclass(name = "Potential")]
struct Potential {
    inner: Box<dyn potentials::CentralPotential>,
}

#[pymethods]
impl Potential {
    #[staticmethod]
    fn homogeneous(k: f64, alpha: f64) -> PyResult<Potential> {
        potentials::PotentialSpec::Homogeneous { k, alpha }
            .build()
            .map(|inner| Potential { inner })
            .map_err(to_py)
    }

    #[staticmethod]
    fn kepler() -> Potential {
        Potential {
            inner: Box::new(potentials::Homogeneous::kepler()),
        }
    }

    #[staticmethod]
    fn harmonic() -> Potential {
        Potential {
            inner: Box::new(potentials::Homogeneous::harmonic()),
        }
    }

    #[staticmethod]
    fn lennard_jones(a: f64, b: f64) -> Potential {
        Potential {
            inner: Box::new(potentials::LennardJones { a, b }),
        }
    }

    #[staticmethod]
    #[pyo3(signature = (mu, amplitude = 1.0))]
    fn screened_coulomb(mu: f64, amplitude: f64) -> PyResult<Potential> {
        potentials::PotentialSpec::ScreenedCoulomb { amplitude, mu }
            .build()
            .map(|inner| Potential { inner })
            .map_err(to_py)
    }

    #[staticmethod]
    fn power_sum(terms: Vec<(f64, f64)>) -> PyResult<Potential> {
        let terms = terms
            .into_iter()
            .map(|(k, alpha)| potentials::PowerTerm { k, alpha })
            .collect();
        potentials::PotentialSpec::PowerSum { terms }
            .build()
            .map(|inner| Potential { inner })
            .map_err(to_py)
    }

    /// Build from the JSON record used by the CLI config.
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Potential> {
        let spec: potentials::PotentialSpec =
            serde_json::from_str(text).map_err(|e| PyValueError::new_err(e.to_string()))?;
        spec.build().map(|inner| Potential { inner }).map_err(to_py)
    }

    fn name(&self) -> String {
        self.inner.name()
    }

    /// (V, V', V'', V''', V'''') at r.
    fn derivs(&self, r: f64) -> PyResult<(f64, f64, f64, f64, f64)> {
        let d = potentials::eval_derivs(self.inner.as_ref(), r).map_err(to_py)?;
        Ok((d.v, d.d1, d.d2, d.d3, d.d4))
    }

    fn value(&self, r: f64) -> PyResult<f64> {
        potentials::eval_derivs(self.inner.as_ref(), r)
            .map(|d| d.v)
            .map_err(to_py)
    }

    /// Check the analytic derivatives against finite differences of V.
    #[pyo3(signature = (r, tolerance = 1e-6))]
    fn validate_derivs(&self, r: f64, tolerance: f64) -> PyResult<bool> {
        potentials::validate_derivs(self.inner.as_ref(), r, tolerance)
            .map(|rep| rep.pass)
            .map_err(to_py)
    }

    /// V*(r) = I2^2/(2 r^2) + V(r).
    fn effective_potential(&self, i2: f64, r: f64) -> PyResult<f64> {
        actions::effective_potential(self.inner.as_ref(), i2, r).map_err(to_py)
    }

    fn __repr__(&self) -> String {
        format!("Potential({})", self.inner.name())
    }
}

/// Validated radial window with its angular-momentum range.
#[pyclass(name = "Window")]
struct Window {
    inner: potentials::AdmissibleWindow,
}

#[pymethods]
impl Window {
    #[getter]
    fn r_lo(&self) -> f64 {
        self.inner.r_lo
    }

    #[getter]
    fn r_hi(&self) -> f64 {
        self.inner.r_hi
    }

    #[getter]
    fn gamma_lo(&self) -> f64 {
        self.inner.gamma_lo
    }

    #[getter]
    fn gamma_hi(&self) -> f64 {
        self.inner.gamma_hi
    }

    fn __repr__(&self) -> String {
        format!(
            "Window(r=({}, {}), gamma=({}, {}))",
            self.inner.r_lo, self.inner.r_hi, self.inner.gamma_lo, self.inner.gamma_hi
        )
    }
}

/// Validate nd.1/nd.2 on a grid and return the window.
#[pyfunction]
#[pyo3(signature = (potential, r_lo, r_hi, grid_size = 256))]
fn admissible_window(
    potential: &Potential,
    r_lo: f64,
    r_hi: f64,
    grid_size: usize,
) -> PyResult<Window> {
    potentials::admissible_window(potential.inner.as_ref(), r_lo, r_hi, grid_size)
        .map(|inner| Window { inner })
        .map_err(to_py)
}

/// "admissible" or the failed clause for V = k r^alpha.
#[pyfunction]
fn homogeneous_admissibility(k: f64, alpha: f64) -> PyResult<String> {
    match potentials::homogeneous_admissibility(k, alpha).map_err(to_py)? {
        potentials::HomogeneousClass::Admissible => Ok("admissible".into()),
        potentials::HomogeneousClass::Excluded(reason) => Ok(format!("excluded: {reason}")),
    }
}

/// Circular-orbit expansion data at angular momentum I2.
#[pyclass(name = "CircularOrbit")]
struct CircularOrbitPy {
    inner: circular::CircularOrbit,
}

#[pymethods]
impl CircularOrbitPy {
    #[getter]
    fn i2(&self) -> f64 {
        self.inner.i2
    }

    #[getter]
    fn r0(&self) -> f64 {
        self.inner.r0
    }

    #[getter]
    fn v_star(&self) -> f64 {
        self.inner.v_star
    }

    /// A = 3 I2^2/r0^4 + V''(r0).
    #[getter]
    fn a(&self) -> f64 {
        self.inner.veff_d2
    }

    #[getter]
    fn b(&self) -> f64 {
        self.inner.veff_d3
    }

    #[getter]
    fn c(&self) -> f64 {
        self.inner.veff_d4
    }

    #[getter]
    fn omega(&self) -> f64 {
        self.inner.omega
    }

    #[getter]
    fn twist(&self) -> f64 {
        self.inner.twist
    }

    #[getter]
    fn dr0_di2(&self) -> f64 {
        self.inner.dr0_di2
    }

    /// Coefficient of I1^2 in the energy expansion (twist/2).
    #[getter]
    fn i1sq_coeff(&self) -> f64 {
        self.inner.quadratic_coefficient()
    }

    fn __repr__(&self) -> String {
        format!(
            "CircularOrbit(i2={}, r0={}, omega={}, twist={})",
            self.inner.i2, self.inner.r0, self.inner.omega, self.inner.twist
        )
    }
}

#[pyfunction]
fn circular_radius(potential: &Potential, window: &Window, i2: f64) -> PyResult<f64> {
    circular::circular_radius(potential.inner.as_ref(), i2, &window.inner).map_err(to_py)
}

#[pyfunction]
fn birkhoff_coefficients(
    potential: &Potential,
    window: &Window,
    i2: f64,
) -> PyResult<CircularOrbitPy> {
    circular::birkhoff_coefficients(potential.inner.as_ref(), i2, &window.inner)
        .map(|inner| CircularOrbitPy { inner })
        .map_err(to_py)
}

#[pyfunction]
fn potcondition_residual(potential: &Potential, r0: f64) -> PyResult<f64> {
    circular::potcondition_residual(potential.inner.as_ref(), r0).map_err(to_py)
}

#[pyfunction]
fn secondord_residual(potential: &Potential, r0: f64) -> PyResult<f64> {
    circular::secondord_residual(potential.inner.as_ref(), r0).map_err(to_py)
}

#[pyfunction]
fn arnold_determinant_circular(potential: &Potential, window: &Window, i2: f64) -> PyResult<f64> {
    circular::arnold_determinant_circular(potential.inner.as_ref(), i2, &window.inner)
        .map_err(to_py)
}

/// Scan the window for degeneracy roots. Returns a dict with keys
/// "identically_degenerate" and "roots" (list of (r0, i2) pairs).
#[pyfunction]
#[pyo3(signature = (potential, window, n_grid = 200))]
fn scan_exceptional_set<'py>(
    py: Python<'py>,
    potential: &Potential,
    window: &Window,
    n_grid: usize,
) -> PyResult<Bound<'py, PyDict>> {
    let outcome = circular::scan_exceptional_set(potential.inner.as_ref(), &window.inner, n_grid)
        .map_err(to_py)?;
    let dict = PyDict::new(py);
    match outcome {
        circular::ScanOutcome::IdenticallyDegenerate => {
            dict.set_item("identically_degenerate", true)?;
            dict.set_item("roots", Vec::<(f64, f64)>::new())?;
        }
        circular::ScanOutcome::Roots(roots) => {
            dict.set_item("identically_degenerate", false)?;
            dict.set_item(
                "roots",
                roots.iter().map(|r| (r.r0, r.i2)).collect::<Vec<_>>(),
            )?;
        }
    }
    Ok(dict)
}

#[pyfunction]
fn turning_points(
    potential: &Potential,
    window: &Window,
    i2: f64,
    e: f64,
) -> PyResult<(f64, f64)> {
    actions::turning_points(potential.inner.as_ref(), i2, e, &window.inner)
        .map(|pair| (pair.r_minus, pair.r_plus))
        .map_err(to_py)
}

#[pyfunction]
fn action_integral(potential: &Potential, window: &Window, i2: f64, e: f64) -> PyResult<f64> {
    actions::action_integral(potential.inner.as_ref(), &window.inner, i2, e).map_err(to_py)
}

#[pyfunction]
fn energy_from_actions(potential: &Potential, window: &Window, i1: f64, i2: f64) -> PyResult<f64> {
    actions::energy_from_actions(potential.inner.as_ref(), &window.inner, i1, i2).map_err(to_py)
}

/// A point of the action map with frequencies, Hessian and determinant.
#[pyclass(name = "ActionPoint")]
struct ActionPointPy {
    inner: actions::ActionPoint,
    verdict: actions::Convexity,
}

#[pymethods]
impl ActionPointPy {
    #[getter]
    fn i1(&self) -> f64 {
        self.inner.i1
    }

    #[getter]
    fn i2(&self) -> f64 {
        self.inner.i2
    }

    #[getter]
    fn e(&self) -> f64 {
        self.inner.e
    }

    #[getter]
    fn omega(&self) -> (f64, f64) {
        (self.inner.omega[0], self.inner.omega[1])
    }

    #[getter]
    fn hessian(&self) -> ((f64, f64), (f64, f64)) {
        let h = self.inner.hessian;
        ((h[0][0], h[0][1]), (h[1][0], h[1][1]))
    }

    #[getter]
    fn arnold_det(&self) -> f64 {
        self.inner.arnold_det
    }

    #[getter]
    fn qc_flag(&self) -> &'static str {
        self.verdict.as_str()
    }

    fn __repr__(&self) -> String {
        format!(
            "ActionPoint(i1={}, i2={}, e={}, arnold_det={}, {})",
            self.inner.i1,
            self.inner.i2,
            self.inner.e,
            self.inner.arnold_det,
            self.verdict.as_str()
        )
    }
}

#[pyfunction]
fn action_point(
    potential: &Potential,
    window: &Window,
    i1: f64,
    i2: f64,
) -> PyResult<ActionPointPy> {
    let policy = actions::StepPolicy::default();
    let point = actions::action_point(potential.inner.as_ref(), &window.inner, i1, i2, &policy)
        .map_err(to_py)?;
    let verdict = actions::quasiconvexity_test(&point).map_err(to_py)?.verdict;
    Ok(ActionPointPy {
        inner: point,
        verdict,
    })
}

#[pyfunction]
fn actions_of_state(
    potential: &Potential,
    window: &Window,
    q: (f64, f64, f64),
    p: (f64, f64, f64),
) -> PyResult<(f64, f64, f64)> {
    let state = dynamics::CartesianState {
        q: [q.0, q.1, q.2],
        p: [p.0, p.1, p.2],
        t: 0.0,
    };
    dynamics::actions_of_state(potential.inner.as_ref(), &window.inner, &state).map_err(to_py)
}

#[pyfunction]
#[pyo3(signature = (potential, window, i1, i2, orientation = None))]
fn state_from_actions(
    potential: &Potential,
    window: &Window,
    i1: f64,
    i2: f64,
    orientation: Option<(f64, f64, f64)>,
) -> PyResult<((f64, f64, f64), (f64, f64, f64))> {
    let state = dynamics::state_from_actions(
        potential.inner.as_ref(),
        &window.inner,
        i1,
        i2,
        orientation.map(|(a, b, c)| [a, b, c]),
    )
    .map_err(to_py)?;
    Ok((
        (state.q[0], state.q[1], state.q[2]),
        (state.p[0], state.p[1], state.p[2]),
    ))
}

fn build_perturbation(name: &str) -> PyResult<Box<dyn dynamics::Perturbation>> {
    match name {
        "q1" => Ok(Box::new(dynamics::CoordinatePull::new(0))),
        "q2" => Ok(Box::new(dynamics::CoordinatePull::new(1))),
        "q3" => Ok(Box::new(dynamics::CoordinatePull::new(2))),
        "bounded_product" => Ok(Box::new(dynamics::BoundedProduct)),
        other => Err(PyValueError::new_err(format!(
            "unknown perturbation {other:?}; use \"q1\", \"q2\", \"q3\" or \"bounded_product\""
        ))),
    }
}

/// Run the drift sweep; one dict per epsilon with the DriftReport fields.
#[pyfunction]
#[pyo3(signature = (potential, window, perturbation, epsilons, n_periods, i1, i2,
                    steps_per_period = 400, sample_stride = 400))]
#[allow(clippy::too_many_arguments)]
fn drift_experiment<'py>(
    py: Python<'py>,
    potential: &Potential,
    window: &Window,
    perturbation: &str,
    epsilons: Vec<f64>,
    n_periods: f64,
    i1: f64,
    i2: f64,
    steps_per_period: usize,
    sample_stride: usize,
) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let pert = build_perturbation(perturbation)?;
    let mut setup = dynamics::DriftSetup::new(epsilons, n_periods, (i1, i2));
    setup.steps_per_period = steps_per_period;
    setup.sample_stride = sample_stride;
    let reports =
        dynamics::drift_experiment(potential.inner.as_ref(), &window.inner, pert.as_ref(), &setup)
            .map_err(to_py)?;
    reports
        .iter()
        .map(|r| {
            let dict = PyDict::new(py);
            dict.set_item("epsilon", r.epsilon)?;
            dict.set_item("t_final", r.t_final)?;
            dict.set_item("dt", r.dt)?;
            dict.set_item("max_drift_i1", r.max_drift_i1)?;
            dict.set_item("max_drift_i2", r.max_drift_i2)?;
            dict.set_item("max_drift_norm", r.max_drift_norm)?;
            dict.set_item("energy_error", r.energy_error)?;
            dict.set_item("r_min", r.r_min)?;
            dict.set_item("r_max", r.r_max)?;
            dict.set_item("flagged_samples", r.flagged_samples)?;
            dict.set_item("abort", r.abort.clone())?;
            Ok(dict)
        })
        .collect()
}

#[pymodule]
fn centralmotion_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Potential>()?;
    m.add_class::<Window>()?;
    m.add_class::<CircularOrbitPy>()?;
    m.add_class::<ActionPointPy>()?;
    m.add_function(wrap_pyfunction!(admissible_window, m)?)?;
    m.add_function(wrap_pyfunction!(homogeneous_admissibility, m)?)?;
    m.add_function(wrap_pyfunction!(circular_radius, m)?)?;
    m.add_function(wrap_pyfunction!(birkhoff_coefficients, m)?)?;
    m.add_function(wrap_pyfunction!(potcondition_residual, m)?)?;
    m.add_function(wrap_pyfunction!(secondord_residual, m)?)?;
    m.add_function(wrap_pyfunction!(arnold_determinant_circular, m)?)?;
    m.add_function(wrap_pyfunction!(scan_exceptional_set, m)?)?;
    m.add_function(wrap_pyfunction!(turning_points, m)?)?;
    m.add_function(wrap_pyfunction!(action_integral, m)?)?;
    m.add_function(wrap_pyfunction!(energy_from_actions, m)?)?;
    m.add_function(wrap_pyfunction!(action_point, m)?)?;
    m.add_function(wrap_pyfunction!(actions_of_state, m)?)?;
    m.add_function(wrap_pyfunction!(state_from_actions, m)?)?;
    m.add_function(wrap_pyfunction!(drift_experiment, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
