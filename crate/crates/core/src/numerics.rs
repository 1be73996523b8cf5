//! Scalar numeric kernels: bracketed root finding, Gauss-Legendre quadrature
//! with adaptive order refinement, and small dense helpers.

use crate::error::{Error, Result};
use std::sync::OnceLock;

/// Pure bisection on a bracketing interval. Converges unconditionally on a
/// sign change; used where the target map is strictly monotone.
pub fn bisect<F: FnMut(f64) -> f64>(
    mut f: F,
    mut lo: f64,
    mut hi: f64,
    rel_tol: f64,
    max_iter: usize,
) -> Result<f64> {
    let mut f_lo = f(lo);
    if f_lo == 0.0 {
        return Ok(lo);
    }
    let f_hi = f(hi);
    if f_hi == 0.0 {
        return Ok(hi);
    }
    if f_lo.signum() == f_hi.signum() {
        return Err(Error::NoBracket { lo, hi });
    }
    for _ in 0..max_iter {
        let mid = 0.5 * (lo + hi);
        if (hi - lo) <= rel_tol * mid.abs().max(f64::MIN_POSITIVE) {
            return Ok(mid);
        }
        let f_mid = f(mid);
        if f_mid == 0.0 {
            return Ok(mid);
        }
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    Err(Error::NotConverged {
        what: "bisection",
        iterations: max_iter,
    })
}

/// Illinois-damped false position: superlinear on smooth functions, keeps a
/// guaranteed bracket throughout. Stops on |f| <= y_tol or on the interval
/// shrinking below rel_tol_x.
pub fn solve_bracketed<F: FnMut(f64) -> f64>(
    mut f: F,
    mut a: f64,
    mut b: f64,
    rel_tol_x: f64,
    y_tol: f64,
    max_iter: usize,
) -> Result<f64> {
    let mut fa = f(a);
    if fa.abs() <= y_tol {
        return Ok(a);
    }
    let mut fb = f(b);
    if fb.abs() <= y_tol {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(Error::NoBracket { lo: a, hi: b });
    }
    let mut side = 0i8;
    for _ in 0..max_iter {
        let x = (a * fb - b * fa) / (fb - fa);
        // fall back to the midpoint when the secant step degenerates
        let x = if x.is_finite() && x > a.min(b) && x < a.max(b) {
            x
        } else {
            0.5 * (a + b)
        };
        let fx = f(x);
        if fx.abs() <= y_tol || (b - a).abs() <= rel_tol_x * x.abs().max(f64::MIN_POSITIVE) {
            return Ok(x);
        }
        if fx.signum() == fa.signum() {
            a = x;
            fa = fx;
            if side == -1 {
                fb *= 0.5;
            }
            side = -1;
        } else {
            b = x;
            fb = fx;
            if side == 1 {
                fa *= 0.5;
            }
            side = 1;
        }
    }
    Err(Error::NotConverged {
        what: "bracketed solve",
        iterations: max_iter,
    })
}

/// Gauss-Legendre rule on [-1, 1].
#[derive(Debug, Clone)]
pub struct QuadRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl QuadRule {
    /// Nodes by Newton iteration on P_n; standard asymptotic initial guess.
    fn gauss_legendre(n: usize) -> QuadRule {
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                // evaluate P_n(x) and P_{n-1}(x) by recurrence
                let mut p0 = 1.0;
                let mut p1 = x;
                for k in 2..=n {
                    let kf = k as f64;
                    let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() < 1e-15 {
                    break;
                }
            }
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        QuadRule { nodes, weights }
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        let mid = 0.5 * (a + b);
        let half = 0.5 * (b - a);
        let mut acc = 0.0;
        for (&x, &w) in self.nodes.iter().zip(&self.weights) {
            acc += w * f(mid + half * x);
        }
        acc * half
    }
}

const ORDER_LADDER: [usize; 9] = [16, 24, 32, 48, 64, 96, 128, 192, 256];

fn rules() -> &'static Vec<QuadRule> {
    static RULES: OnceLock<Vec<QuadRule>> = OnceLock::new();
    RULES.get_or_init(|| ORDER_LADDER.iter().map(|&n| QuadRule::gauss_legendre(n)).collect())
}

/// Integrate f over [a, b], doubling the Gauss-Legendre order until two
/// successive estimates agree to rel_tol.
pub fn integrate_adaptive<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, rel_tol: f64) -> Result<f64> {
    let ladder = rules();
    let mut prev = ladder[0].integrate(a, b, &mut f);
    for rule in &ladder[1..] {
        let cur = rule.integrate(a, b, &mut f);
        if (cur - prev).abs() <= rel_tol * cur.abs().max(f64::MIN_POSITIVE) {
            return Ok(cur);
        }
        prev = cur;
    }
    Err(Error::NotConverged {
        what: "adaptive quadrature",
        iterations: ORDER_LADDER.len(),
    })
}

/// Determinant of a 3x3 matrix, first-row cofactor expansion.
pub fn det3(m: [[f64; 3]; 3]) -> f64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

/// Central difference with one Richardson step: O(h^4) first derivative.
pub fn deriv1_richardson<F: FnMut(f64) -> Result<f64>>(mut f: F, x: f64, h: f64) -> Result<f64> {
    let d = |fm: f64, fp: f64, hh: f64| (fp - fm) / (2.0 * hh);
    let coarse = d(f(x - h)?, f(x + h)?, h);
    let fine = d(f(x - 0.5 * h)?, f(x + 0.5 * h)?, 0.5 * h);
    Ok((4.0 * fine - coarse) / 3.0)
}

/// Second central difference with one Richardson step: O(h^4).
pub fn deriv2_richardson<F: FnMut(f64) -> Result<f64>>(
    mut f: F,
    x: f64,
    h: f64,
    f_center: f64,
) -> Result<f64> {
    let s = |fm: f64, fp: f64, hh: f64| (fp - 2.0 * f_center + fm) / (hh * hh);
    let coarse = s(f(x - h)?, f(x + h)?, h);
    let fine = s(f(x - 0.5 * h)?, f(x + 0.5 * h)?, 0.5 * h);
    Ok((4.0 * fine - coarse) / 3.0)
}

/// Mixed partial by the 4-point cross stencil with one Richardson step.
pub fn deriv_mixed_richardson<F: FnMut(f64, f64) -> Result<f64>>(
    mut f: F,
    x: f64,
    y: f64,
    hx: f64,
    hy: f64,
) -> Result<f64> {
    let mut cross = |hx: f64, hy: f64| -> Result<f64> {
        Ok(
            (f(x + hx, y + hy)? - f(x + hx, y - hy)? - f(x - hx, y + hy)? + f(x - hx, y - hy)?)
                / (4.0 * hx * hy),
        )
    };
    let coarse = cross(hx, hy)?;
    let fine = cross(0.5 * hx, 0.5 * hy)?;
    Ok((4.0 * fine - coarse) / 3.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bisect_finds_monotone_root() {
        let r = bisect(|x| x * x * x - 2.0, 0.0, 2.0, 1e-14, 200).unwrap();
        assert!((r - 2f64.powf(1.0 / 3.0)).abs() < 1e-12);
    }

    #[test]
    fn bisect_rejects_no_sign_change() {
        assert!(matches!(
            bisect(|x| x * x + 1.0, -1.0, 1.0, 1e-12, 100),
            Err(Error::NoBracket { .. })
        ));
    }

    #[test]
    fn illinois_converges_fast() {
        let r = solve_bracketed(|x| x.exp() - 3.0, 0.0, 2.0, 1e-14, 0.0, 60).unwrap();
        assert!((r - 3f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn gauss_legendre_exact_on_polynomials() {
        // an n-point rule integrates degree 2n-1 exactly
        let rule = QuadRule::gauss_legendre(8);
        let exact = 2.0 / 15.0; // integral of x^14 over [-1,1]
        let got = rule.integrate(-1.0, 1.0, |x| x.powi(14));
        assert!((got - exact).abs() < 1e-15, "got {got}");
    }

    #[test]
    fn adaptive_quadrature_smooth() {
        let got = integrate_adaptive(|x: f64| x.sin(), 0.0, std::f64::consts::PI, 1e-12).unwrap();
        assert!((got - 2.0).abs() < 1e-12);
    }

    #[test]
    fn richardson_derivatives() {
        let f = |x: f64| -> Result<f64> { Ok(x.sin()) };
        let d1 = deriv1_richardson(f, 0.7, 1e-3).unwrap();
        assert!((d1 - 0.7f64.cos()).abs() < 1e-12);
        let d2 = deriv2_richardson(f, 0.7, 1e-2, 0.7f64.sin()).unwrap();
        assert!((d2 + 0.7f64.sin()).abs() < 1e-9);
        let g = |x: f64, y: f64| -> Result<f64> { Ok(x * x * y + x * y * y) };
        let m = deriv_mixed_richardson(g, 1.3, 0.4, 1e-3, 1e-3).unwrap();
        assert!((m - (2.0 * 1.3 + 2.0 * 0.4)).abs() < 1e-9);
    }

    #[test]
    fn det3_matches_rule_of_sarrus() {
        let m = [[2.0, -1.0, 0.5], [1.0, 3.0, -2.0], [0.0, 4.0, 1.0]];
        let expect = 2.0 * (3.0 + 8.0) + 1.0 * (1.0 - 0.0) + 0.5 * (4.0 - 0.0);
        assert!((det3(m) - expect).abs() < 1e-14);
    }
}
