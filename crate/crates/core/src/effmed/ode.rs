//! Embedded Runge-Kutta (Dormand-Prince 5(4)) with step-size control.

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepControl {
    pub rtol: f64,
    pub atol: f64,
    /// Upper bound on |h|.
    pub max_step: f64,
    pub max_steps: usize,
}

impl Default for StepControl {
    fn default() -> Self {
        Self { rtol: 1e-8, atol: 1e-12, max_step: 0.05, max_steps: 100_000 }
    }
}

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// Integrates `dy/dt = f(t, y)` from `t0` to `t1` (`t1 >= t0`) and returns
/// `y(t1)`. On step-size underflow the error carries the last accepted state.
pub fn integrate<const N: usize, F>(f: F, t0: f64, y0: [f64; N], t1: f64, ctl: &StepControl) -> Result<[f64; N]>
where
    F: Fn(f64, &[f64; N]) -> [f64; N],
{
    if t1 < t0 {
        return Err(Error::InvalidArgument(format!("integration end {t1} precedes start {t0}")));
    }
    let mut t = t0;
    let mut y = y0;
    if t1 == t0 {
        return Ok(y);
    }
    let mut h = (t1 - t0).min(ctl.max_step).min(1e-3);
    let mut k = [[0.0; N]; 7];
    k[0] = f(t, &y);
    for _ in 0..ctl.max_steps {
        if t >= t1 {
            return Ok(y);
        }
        let last = t + h >= t1;
        if last {
            h = t1 - t;
        }
        for s in 1..7 {
            let mut ys = y;
            for (i, v) in ys.iter_mut().enumerate() {
                *v += h * (0..s).map(|j| A[s][j] * k[j][i]).sum::<f64>();
            }
            k[s] = f(t + C[s] * h, &ys);
        }
        let mut y5 = y;
        let mut err = 0.0;
        for i in 0..N {
            let inc5: f64 = (0..7).map(|s| B5[s] * k[s][i]).sum();
            let inc4: f64 = (0..7).map(|s| B4[s] * k[s][i]).sum();
            y5[i] += h * inc5;
            let scale = ctl.atol + ctl.rtol * y[i].abs().max(y5[i].abs());
            err += (h * (inc5 - inc4) / scale).powi(2);
        }
        let err = (err / N as f64).sqrt();
        if !err.is_finite() {
            return Err(Error::Numeric {
                message: format!("non-finite error estimate at t = {t}"),
                state: y.to_vec(),
            });
        }
        if err <= 1.0 {
            t = if last { t1 } else { t + h };
            y = y5;
            // FSAL: the 7th stage is f at the new point.
            k[0] = k[6];
        }
        let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
        h = (h * factor).min(ctl.max_step);
        if h < 1e-14 * t.abs().max(1.0) {
            return Err(Error::Numeric {
                message: format!("step size underflow at t = {t}"),
                state: y.to_vec(),
            });
        }
    }
    if t >= t1 {
        return Ok(y);
    }
    Err(Error::Numeric { message: format!("step budget exhausted at t = {t}"), state: y.to_vec() })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_decay() {
        let y = integrate(|_, y: &[f64; 1]| [-y[0]], 0.0, [1.0], 2.0, &StepControl::default()).unwrap();
        assert!((y[0] - (-2.0f64).exp()).abs() < 1e-9);
    }

    #[test]
    fn harmonic_oscillator_conserves_phase() {
        let y = integrate(
            |_, y: &[f64; 2]| [y[1], -y[0]],
            0.0,
            [1.0, 0.0],
            std::f64::consts::PI,
            &StepControl::default(),
        )
        .unwrap();
        assert!((y[0] + 1.0).abs() < 1e-7);
        assert!(y[1].abs() < 1e-7);
    }

    #[test]
    fn empty_interval_returns_initial_state() {
        let y = integrate(|_, _: &[f64; 2]| [1.0, 1.0], 0.3, [2.0, 3.0], 0.3, &StepControl::default()).unwrap();
        assert_eq!(y, [2.0, 3.0]);
    }

    #[test]
    fn blow_up_reports_last_state() {
        // y' = y^2 explodes at t = 1.
        let r = integrate(|_, y: &[f64; 1]| [y[0] * y[0]], 0.0, [1.0], 2.0, &StepControl::default());
        match r {
            Err(Error::Numeric { state, .. }) => assert!(state[0] > 1.0),
            other => panic!("expected numeric failure, got {other:?}"),
        }
    }
}
