//! Fifth-order weighted essentially non-oscillatory finite differences with
//! global Lax-Friedrichs flux splitting, in the classic smoothness-indicator
//! form with `eps = 1e-6` and ideal weights `(1/10, 6/10, 3/10)`.

/// Regularization of the smoothness indicators.
pub const WENO_EPS: f64 = 1e-6;

/// Boundary handling for the five-point stencils.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WenoBoundary {
    Periodic,
    /// Three ghost values on each side, nearest the domain first.
    Ghost { left: [f64; 3], right: [f64; 3] },
}

fn sample(v: &[f64], i: isize, bc: &WenoBoundary) -> f64 {
    let n = v.len() as isize;
    match bc {
        WenoBoundary::Periodic => v[(i.rem_euclid(n)) as usize],
        WenoBoundary::Ghost { left, right } => {
            if i < 0 {
                left[(-i - 1).min(2) as usize]
            } else if i >= n {
                right[((i - n).min(2)) as usize]
            } else {
                v[i as usize]
            }
        }
    }
}

/// Left-biased reconstruction of the value at the face right of the third
/// point of the stencil `(v0, v1, v2, v3, v4)`.
pub fn weno5_face(v: [f64; 5]) -> f64 {
    let q0 = (2.0 * v[0] - 7.0 * v[1] + 11.0 * v[2]) / 6.0;
    let q1 = (-v[1] + 5.0 * v[2] + 2.0 * v[3]) / 6.0;
    let q2 = (2.0 * v[2] + 5.0 * v[3] - v[4]) / 6.0;
    let b0 = 13.0 / 12.0 * (v[0] - 2.0 * v[1] + v[2]).powi(2)
        + 0.25 * (v[0] - 4.0 * v[1] + 3.0 * v[2]).powi(2);
    let b1 = 13.0 / 12.0 * (v[1] - 2.0 * v[2] + v[3]).powi(2) + 0.25 * (v[1] - v[3]).powi(2);
    let b2 = 13.0 / 12.0 * (v[2] - 2.0 * v[3] + v[4]).powi(2)
        + 0.25 * (3.0 * v[2] - 4.0 * v[3] + v[4]).powi(2);
    let a0 = 0.1 / (WENO_EPS + b0).powi(2);
    let a1 = 0.6 / (WENO_EPS + b1).powi(2);
    let a2 = 0.3 / (WENO_EPS + b2).powi(2);
    let asum = a0 + a1 + a2;
    (a0 * q0 + a1 * q1 + a2 * q2) / asum
}

/// Ideal-weight (purely linear) variant of [`weno5_face`], used by tests as
/// the smooth-data reference.
pub fn linear5_face(v: [f64; 5]) -> f64 {
    let q0 = (2.0 * v[0] - 7.0 * v[1] + 11.0 * v[2]) / 6.0;
    let q1 = (-v[1] + 5.0 * v[2] + 2.0 * v[3]) / 6.0;
    let q2 = (2.0 * v[2] + 5.0 * v[3] - v[4]) / 6.0;
    0.1 * q0 + 0.6 * q1 + 0.3 * q2
}

/// Upwind first derivative of point values: fifth-order where the data is
/// smooth, non-oscillatory at discontinuities. `from_left` selects the wind
/// direction (true for positive advection speed).
pub fn upwind_derivative(v: &[f64], from_left: bool, bc: &WenoBoundary, dx: f64, out: &mut [f64]) {
    let n = v.len();
    assert!(n >= 6, "stencils need at least 6 points");
    assert_eq!(out.len(), n);
    // face value right of point i
    let face = |i: isize| -> f64 {
        if from_left {
            weno5_face([
                sample(v, i - 2, bc),
                sample(v, i - 1, bc),
                sample(v, i, bc),
                sample(v, i + 1, bc),
                sample(v, i + 2, bc),
            ])
        } else {
            // mirror the stencil about the face
            weno5_face([
                sample(v, i + 3, bc),
                sample(v, i + 2, bc),
                sample(v, i + 1, bc),
                sample(v, i, bc),
                sample(v, i - 1, bc),
            ])
        }
    };
    let mut prev = face(-1);
    for i in 0..n {
        let next = face(i as isize);
        out[i] = (next - prev) / dx;
        prev = next;
    }
}

/// Conservative flux divergence `d/dx f(u)` with global Lax-Friedrichs
/// splitting `f± = (f ± alpha u) / 2`; `alpha` bounds the characteristic
/// speed over the current state. The sum of the output telescopes to the
/// boundary fluxes, so periodic totals are conserved to rounding.
pub fn lf_flux_divergence(
    f_vals: &[f64],
    u_vals: &[f64],
    alpha: f64,
    bc_f: &WenoBoundary,
    bc_u: &WenoBoundary,
    dx: f64,
    out: &mut [f64],
) {
    let n = f_vals.len();
    assert_eq!(u_vals.len(), n);
    assert_eq!(out.len(), n);
    let plus = |i: isize| 0.5 * (sample(f_vals, i, bc_f) + alpha * sample(u_vals, i, bc_u));
    let minus = |i: isize| 0.5 * (sample(f_vals, i, bc_f) - alpha * sample(u_vals, i, bc_u));
    let face = |i: isize| -> f64 {
        let fp = weno5_face([plus(i - 2), plus(i - 1), plus(i), plus(i + 1), plus(i + 2)]);
        let fm = weno5_face([
            minus(i + 3),
            minus(i + 2),
            minus(i + 1),
            minus(i),
            minus(i - 1),
        ]);
        fp + fm
    };
    let mut prev = face(-1);
    for i in 0..n {
        let next = face(i as isize);
        out[i] = (next - prev) / dx;
        prev = next;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn constant_data_has_zero_derivative() {
        let v = vec![3.25; 32];
        let mut out = vec![0.0; 32];
        upwind_derivative(&v, true, &WenoBoundary::Periodic, 1.0 / 32.0, &mut out);
        for &d in &out {
            assert_eq!(d, 0.0);
        }
    }

    #[test]
    fn smooth_weights_match_ideal_stencil() {
        // on smooth monotone data the nonlinear weights collapse to the
        // ideal ones
        let v: Vec<f64> = (0..5).map(|i| 1.0 + 0.01 * i as f64).collect();
        let arr = [v[0], v[1], v[2], v[3], v[4]];
        let nonlinear = weno5_face(arr);
        let ideal = linear5_face(arr);
        assert!(
            (nonlinear - ideal).abs() < 1e-10,
            "{nonlinear} vs {ideal}"
        );
    }

    #[test]
    fn fifth_order_refinement_on_sine() {
        let err = |n: usize| -> f64 {
            let dx = 1.0 / n as f64;
            let v: Vec<f64> = (0..n).map(|i| (2.0 * PI * i as f64 * dx).sin()).collect();
            let mut out = vec![0.0; n];
            upwind_derivative(&v, true, &WenoBoundary::Periodic, dx, &mut out);
            (0..n)
                .map(|i| {
                    let exact = 2.0 * PI * (2.0 * PI * i as f64 * dx).cos();
                    (out[i] - exact).abs()
                })
                .fold(0.0_f64, f64::max)
        };
        let ratio = err(64) / err(128);
        assert!(
            (ratio - 32.0).abs() <= 0.2 * 32.0,
            "refinement ratio {ratio}, want 32 within 20%"
        );
    }

    #[test]
    fn step_data_does_not_overshoot() {
        // one small conservative update of a step stays inside the data
        // range: interface values and the resulting update are essentially
        // non-oscillatory
        let n = 64;
        let v: Vec<f64> = (0..n).map(|i| if i < n / 2 { 1.0 } else { 0.0 }).collect();
        let mut div = vec![0.0; n];
        lf_flux_divergence(
            &v,
            &v,
            1.0,
            &WenoBoundary::Periodic,
            &WenoBoundary::Periodic,
            1.0 / n as f64,
            &mut div,
        );
        let sigma = 0.2 / n as f64; // small CFL Euler update of u_t + u_x = 0
        let updated: Vec<f64> = (0..n).map(|i| v[i] - sigma * div[i]).collect();
        let max = updated.iter().cloned().fold(f64::MIN, f64::max);
        let min = updated.iter().cloned().fold(f64::MAX, f64::min);
        assert!(max <= 1.0 + 1e-10, "overshoot to {max}");
        assert!(min >= 0.0 - 1e-10, "undershoot to {min}");
    }

    #[test]
    fn periodic_flux_divergence_telescopes() {
        let n = 48;
        let dx = 1.0 / n as f64;
        let v: Vec<f64> = (0..n)
            .map(|i| 1.0 + 0.3 * (2.0 * PI * i as f64 * dx).sin())
            .collect();
        let f: Vec<f64> = v.iter().map(|&u| u + 0.5 * u * u).collect();
        let mut div = vec![0.0; n];
        lf_flux_divergence(
            &f,
            &v,
            1.5,
            &WenoBoundary::Periodic,
            &WenoBoundary::Periodic,
            dx,
            &mut div,
        );
        let total: f64 = div.iter().sum();
        assert!(total.abs() < 1e-11, "telescoping failed: {total:e}");
    }

    #[test]
    fn upwind_direction_switch_is_consistent() {
        // reversing both the wind and the data mirrors the derivative
        let n = 32;
        let dx = 1.0 / n as f64;
        let v: Vec<f64> = (0..n).map(|i| ((i as f64) * dx * 2.0 * PI).sin()).collect();
        let mut d_left = vec![0.0; n];
        upwind_derivative(&v, true, &WenoBoundary::Periodic, dx, &mut d_left);
        let reversed: Vec<f64> = (0..n).map(|i| v[(n - 1 - i) % n]).collect();
        let mut d_right = vec![0.0; n];
        upwind_derivative(&reversed, false, &WenoBoundary::Periodic, dx, &mut d_right);
        for i in 0..n {
            assert!(
                (d_left[i] + d_right[n - 1 - i]).abs() < 1e-10,
                "mirror symmetry violated at {i}"
            );
        }
    }
}
