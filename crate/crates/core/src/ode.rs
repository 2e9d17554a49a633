//! Embedded Dormand-Prince 5(4) stepper with step clamping.
//!
//! The radial integrations approach singular endpoints geometrically, so the
//! step size is capped by a caller-supplied clamp (0.1 times the distance to
//! the endpoint) in addition to the embedded error control.

/// Dormand-Prince coefficients.
const A: [[f64; 6]; 6] = [
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const C: [f64; 6] = [1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
/// 5th-order weights (same as the last row of A: FSAL).
const B5: [f64; 7] =
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
/// Embedded 4th-order weights.
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

#[derive(Debug, Clone, Copy)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
    pub initial_step: f64,
}

impl Default for OdeOptions {
    fn default() -> Self {
        OdeOptions { rtol: 1e-10, atol: 1e-12, max_steps: 2_000_000, initial_step: 1e-4 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    ReachedTarget,
    StepUnderflow,
    MaxSteps,
}

/// Integrates `y' = f(x, y)` from `x0` toward `target` (either direction).
///
/// `clamp(x)` bounds the step magnitude from `x`; `on_step` sees every
/// accepted step. Returns the final `(x, y)` and why integration stopped.
pub fn integrate<const N: usize>(
    f: &dyn Fn(f64, &[f64; N]) -> [f64; N],
    x0: f64,
    y0: [f64; N],
    target: f64,
    opts: &OdeOptions,
    clamp: &dyn Fn(f64) -> f64,
    on_step: &mut dyn FnMut(f64, &mut [f64; N]),
) -> (f64, [f64; N], StopReason) {
    let dir = (target - x0).signum();
    let mut x = x0;
    let mut y = y0;
    let mut h = opts.initial_step.min(clamp(x)).min((target - x0).abs()) * dir;
    let mut k: [[f64; N]; 7] = [[0.0; N]; 7];
    k[0] = f(x, &y);

    for _step in 0..opts.max_steps {
        if (target - x) * dir <= 0.0 {
            return (x, y, StopReason::ReachedTarget);
        }
        let remaining = (target - x).abs();
        let hmax = clamp(x).min(remaining);
        if h.abs() > hmax {
            h = hmax * dir;
        }
        if h.abs() < 1e-300 || x + h == x {
            return (x, y, StopReason::StepUnderflow);
        }

        // Stage evaluations.
        for s in 0..6 {
            let mut ys = y;
            for (j, kj) in k.iter().enumerate().take(s + 1) {
                let a = A[s][j];
                if a != 0.0 {
                    for i in 0..N {
                        ys[i] += h * a * kj[i];
                    }
                }
            }
            k[s + 1] = f(x + C[s] * h, &ys);
        }

        let mut y5 = y;
        let mut err = 0.0f64;
        for i in 0..N {
            let mut d5 = 0.0;
            let mut d4 = 0.0;
            for s in 0..7 {
                d5 += B5[s] * k[s][i];
                d4 += B4[s] * k[s][i];
            }
            y5[i] += h * d5;
            let sc = opts.atol + opts.rtol * y[i].abs().max(y5[i].abs());
            let e = h * (d5 - d4) / sc;
            err += e * e;
        }
        err = (err / N as f64).sqrt();

        if err <= 1.0 {
            x += h;
            y = y5;
            on_step(x, &mut y);
            k[0] = f(x, &y); // FSAL would reuse k[6]; renormalization may have changed y
            let grow = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            h *= grow;
        } else {
            h *= (0.9 * err.powf(-0.2)).clamp(0.1, 1.0);
            if h.abs() < 1e-300 {
                return (x, y, StopReason::StepUnderflow);
            }
        }
    }
    (x, y, StopReason::MaxSteps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn exponential_decay() {
        let f = |_x: f64, y: &[f64; 1]| [-y[0]];
        let (x, y, reason) = integrate(
            &f,
            0.0,
            [1.0],
            5.0,
            &OdeOptions::default(),
            &|_| f64::INFINITY,
            &mut |_, _| {},
        );
        assert_eq!(reason, StopReason::ReachedTarget);
        assert_relative_eq!(x, 5.0);
        assert_relative_eq!(y[0], (-5.0f64).exp(), max_relative = 1e-8);
    }

    #[test]
    fn harmonic_oscillator_energy() {
        let f = |_x: f64, y: &[f64; 2]| [y[1], -y[0]];
        let (_, y, _) = integrate(
            &f,
            0.0,
            [1.0, 0.0],
            20.0 * std::f64::consts::PI,
            &OdeOptions::default(),
            &|_| f64::INFINITY,
            &mut |_, _| {},
        );
        assert_relative_eq!(y[0], 1.0, epsilon = 1e-6);
        assert_relative_eq!(y[1], 0.0, epsilon = 1e-6);
    }

    #[test]
    fn clamp_is_respected_near_singular_point() {
        // Integrate toward x = 1 with clamp 0.1 * (1 - x); steps stay inside.
        let f = |x: f64, _y: &[f64; 1]| [1.0 / (1.0 - x)];
        let mut last = 0.0f64;
        let mut max_ratio = 0.0f64;
        let (_, _, reason) = integrate(
            &f,
            0.0,
            [0.0],
            1.0 - 1e-8,
            &OdeOptions::default(),
            &|x| 0.1 * (1.0 - x),
            &mut |x, _| {
                let step = x - last;
                max_ratio = max_ratio.max(step / (1.0 - last));
                last = x;
            },
        );
        assert_eq!(reason, StopReason::ReachedTarget);
        assert!(max_ratio <= 0.1 + 1e-12);
    }
}
