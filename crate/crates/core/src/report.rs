//! The four analysis stages behind the CLI subcommands, writing CSV and text
//! reports with a fixed 17-significant-digit format so identical configs
//! produce byte-identical outputs.

use crate::actions::{action_point, quasiconvexity_test, StepPolicy};
use crate::circular::{
    circular_orbit_at_radius, residual_report, scan_exceptional_set, ScanOutcome,
};
use crate::config::RunConfig;
use crate::dynamics::{
    actions_of_state, drift_experiment, fit_quarter_power, integrate, state_from_actions,
    DriftReport, DriftSetup,
};
use crate::error::{Error, Result};
use rayon::prelude::*;
use std::fmt::Write as _;
use std::path::Path;

/// 17 significant digits: round-trip exact for f64.
pub fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

fn write_file(out_dir: &Path, name: &str, contents: &str) -> Result<()> {
    std::fs::create_dir_all(out_dir)?;
    std::fs::write(out_dir.join(name), contents)?;
    Ok(())
}

/// Verdict plus the residual table of the `analyze` stage.
#[derive(Debug, Clone)]
pub struct AnalyzeOutcome {
    pub verdict: String,
    pub exceptional_i2: Vec<f64>,
}

/// Scans the window, writes `analyze.csv` (one row per grid radius) and
/// `verdict.txt`, and returns the verdict line.
pub fn cmd_analyze(config: &RunConfig, out_dir: &Path) -> Result<AnalyzeOutcome> {
    let potential = config.build_potential()?;
    let window = config.build_window(potential.as_ref())?;
    let n = config.scan.n_grid;

    let mut csv = String::from(
        "r0,I2,Vstar,A,B,C,omega,t_coeff,residual_pot,residual_g,classification\n",
    );
    for i in 0..n {
        let r0 = window.r_lo + (window.r_hi - window.r_lo) * i as f64 / (n - 1) as f64;
        let orbit = circular_orbit_at_radius(potential.as_ref(), r0)?;
        let res = residual_report(potential.as_ref(), r0)?;
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{},{},{},{},{},{}",
            fmt17(r0),
            fmt17(orbit.i2),
            fmt17(orbit.v_star),
            fmt17(orbit.veff_d2),
            fmt17(orbit.veff_d3),
            fmt17(orbit.veff_d4),
            fmt17(orbit.omega),
            fmt17(orbit.twist),
            fmt17(res.residual_pot),
            fmt17(res.residual_g),
            res.classification.as_str()
        );
    }

    let scan = scan_exceptional_set(potential.as_ref(), &window, n)?;
    let (verdict, exceptional) = match scan {
        ScanOutcome::IdenticallyDegenerate => ("degenerate potential".to_string(), Vec::new()),
        ScanOutcome::Roots(roots) if roots.is_empty() => (
            "quasiconvex a.e. on window; exceptional set empty".to_string(),
            Vec::new(),
        ),
        ScanOutcome::Roots(roots) => {
            let i2s: Vec<f64> = roots.iter().map(|r| r.i2).collect();
            let list: Vec<String> = i2s.iter().map(|v| fmt17(*v)).collect();
            (
                format!("exceptional I2 values: {}", list.join(", ")),
                i2s,
            )
        }
    };

    write_file(out_dir, "analyze.csv", &csv)?;
    write_file(out_dir, "verdict.txt", &format!("{verdict}\n"))?;
    Ok(AnalyzeOutcome {
        verdict,
        exceptional_i2: exceptional,
    })
}

/// Writes the circular-orbit expansion data at the configured I2 to
/// `expand.csv`.
pub fn cmd_expand(config: &RunConfig, out_dir: &Path) -> Result<()> {
    let spec = config
        .expand
        .as_ref()
        .ok_or_else(|| Error::InvalidConfig("config has no `expand` section".into()))?;
    let potential = config.build_potential()?;
    let window = config.build_window(potential.as_ref())?;
    let orbit = crate::circular::birkhoff_coefficients(potential.as_ref(), spec.i2, &window)?;

    let mut csv = String::from("r0,I2,Vstar,A,B,C,omega,t_coeff,dr0_dI2,i1sq_coeff\n");
    let _ = writeln!(
        csv,
        "{},{},{},{},{},{},{},{},{},{}",
        fmt17(orbit.r0),
        fmt17(orbit.i2),
        fmt17(orbit.v_star),
        fmt17(orbit.veff_d2),
        fmt17(orbit.veff_d3),
        fmt17(orbit.veff_d4),
        fmt17(orbit.omega),
        fmt17(orbit.twist),
        fmt17(orbit.dr0_di2),
        fmt17(orbit.quadratic_coefficient()),
    );
    write_file(out_dir, "expand.csv", &csv)
}

#[derive(Debug, Clone)]
pub struct ActionMapSummary {
    pub rows: usize,
    pub failures: usize,
}

/// Evaluates the action map over the configured grid; failed points go to
/// `actionmap_errors.txt` and the run continues.
pub fn cmd_actionmap(config: &RunConfig, out_dir: &Path) -> Result<ActionMapSummary> {
    let spec = config
        .actionmap
        .as_ref()
        .ok_or_else(|| Error::InvalidConfig("config has no `actionmap` section".into()))?;
    let potential = config.build_potential()?;
    let window = config.build_window(potential.as_ref())?;
    let policy = StepPolicy::default();

    let grid = spec.grid();
    let results: Vec<(f64, f64, std::result::Result<String, String>)> = grid
        .par_iter()
        .map(|&(i1, i2)| {
            let row = action_point(potential.as_ref(), &window, i1, i2, &policy).and_then(|p| {
                let test = quasiconvexity_test(&p)?;
                Ok(format!(
                    "{},{},{},{},{},{},{},{},{},{}",
                    fmt17(p.i1),
                    fmt17(p.i2),
                    fmt17(p.e),
                    fmt17(p.omega[0]),
                    fmt17(p.omega[1]),
                    fmt17(p.hessian[0][0]),
                    fmt17(p.hessian[0][1]),
                    fmt17(p.hessian[1][1]),
                    fmt17(p.arnold_det),
                    test.verdict.as_str()
                ))
            });
            (i1, i2, row.map_err(|e| e.to_string()))
        })
        .collect();

    let mut csv = String::from("I1,I2,E,omega1,omega2,h11,h12,h22,arnold_det,qc_flag\n");
    let mut errors = String::new();
    let mut failures = 0usize;
    for (i1, i2, row) in &results {
        match row {
            Ok(line) => {
                csv.push_str(line);
                csv.push('\n');
            }
            Err(msg) => {
                failures += 1;
                let _ = writeln!(errors, "I1={} I2={}: {msg}", fmt17(*i1), fmt17(*i2));
            }
        }
    }
    write_file(out_dir, "actionmap.csv", &csv)?;
    write_file(out_dir, "actionmap_errors.txt", &errors)?;
    Ok(ActionMapSummary {
        rows: grid.len() - failures,
        failures,
    })
}

/// Runs the drift sweep. Refuses initial data whose I2 falls within rho of
/// an exceptional value (or inside an identically degenerate window) unless
/// the config disables the check. Writes `drift.csv`, `drift_fit.txt` and
/// optionally per-epsilon trajectory files.
pub fn cmd_drift(config: &RunConfig, out_dir: &Path) -> Result<Vec<DriftReport>> {
    let spec = config
        .dynamics
        .as_ref()
        .ok_or_else(|| Error::InvalidConfig("config has no `dynamics` section".into()))?;
    let potential = config.build_potential()?;
    let window = config.build_window(potential.as_ref())?;
    let pert = spec.perturbation.build()?;

    if spec.check_exceptional {
        match scan_exceptional_set(potential.as_ref(), &window, config.scan.n_grid)? {
            ScanOutcome::IdenticallyDegenerate => {
                return Err(Error::InsideExceptionalSet {
                    distance: 0.0,
                    rho: spec.rho,
                });
            }
            ScanOutcome::Roots(roots) => {
                for root in roots {
                    let distance = (spec.initial_i2 - root.i2).abs();
                    if distance <= spec.rho {
                        return Err(Error::InsideExceptionalSet {
                            distance,
                            rho: spec.rho,
                        });
                    }
                }
            }
        }
    }

    let mut setup = DriftSetup::new(
        spec.epsilons.clone(),
        spec.n_periods,
        (spec.initial_i1, spec.initial_i2),
    );
    setup.steps_per_period = spec.steps_per_period;
    setup.sample_stride = spec.sample_stride;
    setup.orientation = spec.orientation;

    let reports = drift_experiment(potential.as_ref(), &window, pert.as_ref(), &setup)?;

    let mut csv = String::from(
        "epsilon,T,dt,max_drift_I1,max_drift_I2,max_drift_norm,energy_error,r_min,r_max\n",
    );
    for r in &reports {
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{},{},{},{}",
            fmt17(r.epsilon),
            fmt17(r.t_final),
            fmt17(r.dt),
            fmt17(r.max_drift_i1),
            fmt17(r.max_drift_i2),
            fmt17(r.max_drift_norm),
            fmt17(r.energy_error),
            fmt17(r.r_min),
            fmt17(r.r_max),
        );
    }
    write_file(out_dir, "drift.csv", &csv)?;

    let mut fit_text = String::new();
    match fit_quarter_power(&reports) {
        Some(fit) => {
            let _ = writeln!(fit_text, "model: drift = C * epsilon^(1/4)");
            let _ = writeln!(fit_text, "C = {}", fmt17(fit.c));
            for (r, ratio) in reports.iter().filter(|r| r.epsilon > 0.0).zip(&fit.ratios) {
                let _ = writeln!(
                    fit_text,
                    "epsilon = {}: drift = {}, drift/fit = {}",
                    fmt17(r.epsilon),
                    fmt17(r.max_drift_norm),
                    fmt17(*ratio)
                );
            }
        }
        None => {
            let _ = writeln!(fit_text, "no positive-drift points to fit");
        }
    }
    let mut notes = String::new();
    for r in &reports {
        if let Some(msg) = &r.abort {
            let _ = writeln!(notes, "epsilon = {}: aborted: {msg}", fmt17(r.epsilon));
        }
        if r.flagged_samples > 0 {
            let _ = writeln!(
                notes,
                "epsilon = {}: {} flagged samples excluded",
                fmt17(r.epsilon),
                r.flagged_samples
            );
        }
    }
    if !notes.is_empty() {
        fit_text.push_str(&notes);
    }
    write_file(out_dir, "drift_fit.txt", &fit_text)?;

    if spec.write_trajectories {
        let orbit =
            crate::circular::birkhoff_coefficients(potential.as_ref(), spec.initial_i2, &window)?;
        let period = 2.0 * std::f64::consts::PI / orbit.omega;
        let dt = period / spec.steps_per_period as f64;
        let n_steps = (spec.n_periods * spec.steps_per_period as f64).ceil() as usize;
        let state0 = state_from_actions(
            potential.as_ref(),
            &window,
            spec.initial_i1,
            spec.initial_i2,
            spec.orientation,
        )?;
        for (idx, &eps) in spec.epsilons.iter().enumerate() {
            let samples = integrate(
                potential.as_ref(),
                Some((pert.as_ref(), eps)),
                state0,
                dt,
                n_steps,
                spec.sample_stride,
                1e-3 * orbit.r0,
            )?;
            let mut csv = String::from("t,q1,q2,q3,p1,p2,p3,I1,I2,E,r\n");
            for s in &samples {
                let (i1, i2, e) = match actions_of_state(potential.as_ref(), &window, s) {
                    Ok(v) => v,
                    Err(_) => (f64::NAN, f64::NAN, f64::NAN),
                };
                let _ = writeln!(
                    csv,
                    "{},{},{},{},{},{},{},{},{},{},{}",
                    fmt17(s.t),
                    fmt17(s.q[0]),
                    fmt17(s.q[1]),
                    fmt17(s.q[2]),
                    fmt17(s.p[0]),
                    fmt17(s.p[1]),
                    fmt17(s.p[2]),
                    fmt17(i1),
                    fmt17(i2),
                    fmt17(e),
                    fmt17(s.radius()),
                );
            }
            write_file(out_dir, &format!("trajectory_{idx:03}.csv"), &csv)?;
        }
    }
    Ok(reports)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fmt17_roundtrips_f64() {
        for x in [1.0 / 3.0, -0.125, 1e-300, 6.02e23, 184.0, 2.0_f64.sqrt()] {
            let s = fmt17(x);
            let back: f64 = s.parse().unwrap();
            assert_eq!(back, x, "{s}");
        }
    }

    fn quartic_config() -> RunConfig {
        RunConfig::from_json(
            r#"{
            "potential": {"type": "homogeneous", "k": 1.0, "alpha": 4.0},
            "window": {"r_lo": 0.2, "r_hi": 5.0},
            "scan": {"n_grid": 51},
            "expand": {"i2": 2.0},
            "actionmap": {"i1_min": 0.05, "i1_max": 0.2, "i1_count": 2,
                          "i2_min": 1.8, "i2_max": 2.2, "i2_count": 2}
        }"#,
        )
        .unwrap()
    }

    #[test]
    fn analyze_verdicts() {
        let dir = tempfile::tempdir().unwrap();
        let out = cmd_analyze(&quartic_config(), dir.path()).unwrap();
        assert_eq!(out.verdict, "quasiconvex a.e. on window; exceptional set empty");

        let kepler = RunConfig::from_json(
            r#"{
            "potential": {"type": "homogeneous", "k": -1.0, "alpha": -1.0},
            "window": {"r_lo": 0.5, "r_hi": 2.0},
            "scan": {"n_grid": 51}
        }"#,
        )
        .unwrap();
        let out = cmd_analyze(&kepler, dir.path()).unwrap();
        assert_eq!(out.verdict, "degenerate potential");

        let mixture = RunConfig::from_json(
            r#"{
            "potential": {"type": "power_sum",
                          "terms": [{"k": 1.0, "alpha": 1.0}, {"k": 1.0, "alpha": 4.0}]},
            "window": {"r_lo": 0.2, "r_hi": 2.0},
            "scan": {"n_grid": 101}
        }"#,
        )
        .unwrap();
        let out = cmd_analyze(&mixture, dir.path()).unwrap();
        assert!(out.verdict.starts_with("exceptional I2 values:"), "{}", out.verdict);
        assert!(!out.exceptional_i2.is_empty());
    }

    #[test]
    fn expand_writes_quartic_row() {
        let dir = tempfile::tempdir().unwrap();
        cmd_expand(&quartic_config(), dir.path()).unwrap();
        let text = std::fs::read_to_string(dir.path().join("expand.csv")).unwrap();
        let mut lines = text.lines();
        lines.next().unwrap();
        let fields: Vec<&str> = lines.next().unwrap().split(',').collect();
        let i1sq: f64 = fields[9].parse().unwrap();
        // twist/2 = 7/12 for V = r^4 at I2 = 2
        assert!((i1sq - 7.0 / 12.0).abs() < 1e-9);
    }

    #[test]
    fn actionmap_deterministic_bytes() {
        let dir_a = tempfile::tempdir().unwrap();
        let dir_b = tempfile::tempdir().unwrap();
        let config = quartic_config();
        cmd_actionmap(&config, dir_a.path()).unwrap();
        cmd_actionmap(&config, dir_b.path()).unwrap();
        let a = std::fs::read(dir_a.path().join("actionmap.csv")).unwrap();
        let b = std::fs::read(dir_b.path().join("actionmap.csv")).unwrap();
        assert_eq!(a, b);
        assert!(!a.is_empty());
    }
}
