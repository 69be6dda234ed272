//! PDE oracle for the first-order predictor: u_hat1 must satisfy
//! `lap(u_hat1) + (phi''''(0)/6) div((grad u_hat0)^3) = 0` away from the
//! crack line. The residual is evaluated with second-order finite
//! differences, so halving the mesh width must shrink it by a factor of
//! four. This check was written against the closed forms before u_hat1 was
//! used anywhere else; the sample points are fixed.

use antiplane::predictors::{omega, u_hat1};

const K: f64 = 0.4;
const PHI4: f64 = -18.0;

fn u1(x: [f64; 2]) -> f64 {
    u_hat1(x, K, PHI4)
}

/// Analytic gradient of u_hat0 = K omega2: the complex derivative of
/// sqrt(z) is 1/(2 sqrt(z)), so grad(Im sqrt) = (-omega2, omega1)/(2 r).
fn grad_u0_exact(x: [f64; 2]) -> [f64; 2] {
    let w = omega(x);
    let r = (x[0] * x[0] + x[1] * x[1]).sqrt();
    [-K * w[1] / (2.0 * r), K * w[0] / (2.0 * r)]
}

fn cubed_flux(x: [f64; 2]) -> [f64; 2] {
    let g = grad_u0_exact(x);
    [g[0] * g[0] * g[0], g[1] * g[1] * g[1]]
}

fn residual(x: [f64; 2], h: f64) -> f64 {
    let lap = (u1([x[0] + h, x[1]]) + u1([x[0] - h, x[1]]) + u1([x[0], x[1] + h])
        + u1([x[0], x[1] - h])
        - 4.0 * u1(x))
        / (h * h);
    let div = (cubed_flux([x[0] + h, x[1]])[0] - cubed_flux([x[0] - h, x[1]])[0]) / (2.0 * h)
        + (cubed_flux([x[0], x[1] + h])[1] - cubed_flux([x[0], x[1] - h])[1]) / (2.0 * h);
    lap + PHI4 / 6.0 * div
}

#[test]
fn residual_converges_at_second_order() {
    let points = [
        [2.0, 0.7],
        [3.5, -1.2],
        [1.3, 2.1],
        [-2.0, 1.5],
        [5.0, 3.0],
        [-1.5, -2.5],
    ];
    for x in points {
        let r0 = residual(x, 2e-2).abs();
        let r1 = residual(x, 1e-2).abs();
        let r2 = residual(x, 5e-3).abs();
        assert!(r0 > 1e-12, "residual vanished prematurely at {x:?}");
        let q1 = r0 / r1;
        let q2 = r1 / r2;
        assert!(
            (3.5..=4.5).contains(&q1) && (3.5..=4.5).contains(&q2),
            "at {x:?}: ratios {q1:.3}, {q2:.3} (want ~4)"
        );
    }
}

#[test]
fn analytic_gradient_of_u_hat0_matches_finite_differences() {
    let h = 1e-6;
    for x in [[1.0, 0.8], [2.5, -1.5], [0.7, 2.0], [4.0, 0.3]] {
        let u0 = |y: [f64; 2]| K * omega(y)[1];
        let g = grad_u0_exact(x);
        let fd = [
            (u0([x[0] + h, x[1]]) - u0([x[0] - h, x[1]])) / (2.0 * h),
            (u0([x[0], x[1] + h]) - u0([x[0], x[1] - h])) / (2.0 * h),
        ];
        assert!((g[0] - fd[0]).abs() <= 1e-6 && (g[1] - fd[1]).abs() <= 1e-6);
        // The magnitude identity |grad u_hat0| = K / (2 sqrt(r)).
        let r = (x[0] * x[0] + x[1] * x[1]).sqrt();
        let mag = (g[0] * g[0] + g[1] * g[1]).sqrt();
        assert!((mag * 2.0 * r.sqrt() - K).abs() <= 1e-12);
    }
}
