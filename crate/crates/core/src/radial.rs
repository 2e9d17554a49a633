//! Radial 2x2 Dirac systems and their integration toward singular endpoints.
//!
//! The system solved is
//! `(sigma_2 D_r + sigma_1 (a(r) - m/r + v1) + sigma_3 v3 + v0 - zeta) Psi = 0`,
//! written as the first-order system
//!
//! ```text
//!   psi1' = -w1 psi1 + (zeta - v0 + v3) psi2
//!   psi2' = (v0 + v3 - zeta) psi1 + w1 psi2,     w1 = a(r) - m/r + v1.
//! ```
//!
//! Solutions grow like powers of the boundary distance (often steep ones), so
//! a single solution is integrated in log-amplitude/unit-direction form
//! `Psi = e^rho u`, `|u| = 1`, and a 2-frame is integrated with QR
//! re-orthonormalization so the subdominant solution stays resolved. Raw
//! amplitudes are never exponentiated.
//!
//! Half-lines are mapped to a bounded chart by `x = a + tan(theta)` and
//! integrated in `theta`; square-integrability at infinity is judged in the
//! original measure.

use std::sync::Arc;

use num_complex::Complex64;
use serde::Serialize;

use crate::domain::{EndpointSide, Interval1D};
use crate::error::{Error, Result};
use crate::ode::{self, OdeOptions, StopReason};
use crate::potential::{Asymptotic, PotentialSpec1D};

/// A real radial coefficient (magnetic gauge term, closed-form family) with a
/// known boundary signature.
pub trait RadialCoefficient: Send + Sync {
    fn eval(&self, r: f64) -> f64;
    fn asymptotic(&self, side: EndpointSide, iv: &Interval1D) -> Asymptotic;
}

/// Wraps a catalog [`crate::potential::Coefficient`] as a radial coefficient.
pub struct CoefficientOn {
    pub coeff: crate::potential::Coefficient,
    pub iv: Interval1D,
}

impl RadialCoefficient for CoefficientOn {
    fn eval(&self, r: f64) -> f64 {
        self.coeff.eval(r, &self.iv)
    }

    fn asymptotic(&self, side: EndpointSide, iv: &Interval1D) -> Asymptotic {
        self.coeff.asymptotic(side, iv)
    }
}

#[derive(Clone)]
pub struct RadialDiracProblem {
    pub interval: Interval1D,
    pub potential: PotentialSpec1D,
    /// Angular momentum term `-m/r` in the sigma_1 slot; m is a half-integer.
    pub angular_m: Option<f64>,
    /// Transversal-gauge magnetic term `a(r)` in the sigma_1 slot.
    pub magnetic: Option<Arc<dyn RadialCoefficient>>,
    /// Spectral shift zeta.
    pub shift: Complex64,
}

impl RadialDiracProblem {
    /// Problem with the default spectral shift: 0 when the electric
    /// component vanishes (the decoupled closed forms then apply), i
    /// otherwise (classifying deficiency solutions directly).
    pub fn new(interval: Interval1D, potential: PotentialSpec1D) -> Self {
        let shift = if potential.v[0].is_zero() {
            Complex64::new(0.0, 0.0)
        } else {
            Complex64::new(0.0, 1.0)
        };
        RadialDiracProblem { interval, potential, angular_m: None, magnetic: None, shift }
    }

    pub fn with_angular(mut self, m: f64) -> Self {
        self.angular_m = Some(m);
        self
    }

    pub fn with_magnetic(mut self, a: Arc<dyn RadialCoefficient>) -> Self {
        self.magnetic = Some(a);
        self
    }

    pub fn with_shift(mut self, zeta: Complex64) -> Self {
        self.shift = zeta;
        self
    }

    /// Total sigma_1 coefficient `w1 = a(r) - m/r + v1`.
    pub fn w1(&self, x: f64) -> f64 {
        let mut w = self.potential.eval(1, x, &self.interval);
        if let Some(m) = self.angular_m {
            w -= m / x;
        }
        if let Some(a) = &self.magnetic {
            w += a.eval(x);
        }
        w
    }

    pub fn v0(&self, x: f64) -> f64 {
        self.potential.eval(0, x, &self.interval)
    }

    pub fn v3(&self, x: f64) -> f64 {
        self.potential.eval(3, x, &self.interval)
    }

    /// An endpoint is singular when a coefficient blows up there or the
    /// endpoint sits at infinity; otherwise the problem extends continuously
    /// and the endpoint is regular.
    pub fn endpoint_singular(&self, side: EndpointSide) -> bool {
        if self.interval.endpoint_is_infinite(side) {
            return true;
        }
        if self.angular_m.is_some() && side == EndpointSide::Lower && self.interval.lower() == 0.0 {
            return true;
        }
        let unbounded = |a: Asymptotic| !matches!(a, Asymptotic::PowerOne { lambda } if lambda == 0.0);
        unbounded(self.sigma1_asymptotic(side))
            || unbounded(self.potential.v[0].asymptotic(side, &self.interval))
            || unbounded(self.potential.v[3].asymptotic(side, &self.interval))
    }

    /// Boundary signature of the sigma_1 slot at one endpoint.
    pub fn sigma1_asymptotic(&self, side: EndpointSide) -> Asymptotic {
        let iv = &self.interval;
        let mut sig = self.potential.v[1].asymptotic(side, iv);
        if let Some(m) = self.angular_m {
            let ang = match (side, iv) {
                (EndpointSide::Lower, _) if iv.lower() == 0.0 => Asymptotic::PowerOne { lambda: -m },
                (EndpointSide::Upper, Interval1D::HalfLine { .. }) => Asymptotic::BOUNDED,
                _ => Asymptotic::BOUNDED,
            };
            sig = sig.combine(ang);
        }
        if let Some(a) = &self.magnetic {
            sig = sig.combine(a.asymptotic(side, iv));
        }
        sig
    }

    /// First-order system matrix `C(x)` with `Psi' = C Psi`.
    fn system(&self, x: f64) -> [Complex64; 4] {
        let w1 = self.w1(x);
        let v0 = self.v0(x);
        let v3 = self.v3(x);
        let z = self.shift;
        [
            Complex64::new(-w1, 0.0),
            z - Complex64::new(v0 - v3, 0.0),
            Complex64::new(v0 + v3, 0.0) - z,
            Complex64::new(w1, 0.0),
        ]
    }
}

/// Chart used for the integration variable.
#[derive(Debug, Clone, Copy)]
enum Chart {
    /// t = x on a finite interval.
    Direct { a: f64, b: f64 },
    /// x = a + tan(t), t in (0, pi/2), for half-lines.
    Tan { a: f64 },
}

impl Chart {
    fn for_interval(iv: &Interval1D) -> Chart {
        match iv {
            Interval1D::Finite { a, b } => Chart::Direct { a: *a, b: *b },
            Interval1D::HalfLine { a } => Chart::Tan { a: *a },
        }
    }

    fn x_of(&self, t: f64) -> f64 {
        match self {
            Chart::Direct { .. } => t,
            Chart::Tan { a } => a + t.tan(),
        }
    }

    fn t_of(&self, x: f64) -> f64 {
        match self {
            Chart::Direct { .. } => x,
            Chart::Tan { a } => (x - a).atan(),
        }
    }

    fn jacobian(&self, t: f64) -> f64 {
        match self {
            Chart::Direct { .. } => 1.0,
            Chart::Tan { .. } => {
                let c = t.cos();
                1.0 / (c * c)
            }
        }
    }

    fn endpoint_t(&self, side: EndpointSide) -> f64 {
        match (self, side) {
            (Chart::Direct { a, .. }, EndpointSide::Lower) => *a,
            (Chart::Direct { b, .. }, EndpointSide::Upper) => *b,
            (Chart::Tan { .. }, EndpointSide::Lower) => 0.0,
            (Chart::Tan { .. }, EndpointSide::Upper) => std::f64::consts::FRAC_PI_2,
        }
    }

    /// Distance-like measure used for the tail fit: the boundary distance at
    /// finite endpoints, 1/x toward infinity.
    fn tail_scale(&self, t: f64, side: EndpointSide, infinite: bool) -> f64 {
        if infinite {
            1.0 / (self.x_of(t) - match self {
                Chart::Tan { a } => *a,
                _ => 0.0,
            })
        } else {
            (self.endpoint_t(side) - t).abs()
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SolverOptions {
    /// Local relative tolerance of the embedded RK5(4) pair.
    pub rtol: f64,
    /// Final boundary distance, relative to the interval scale.
    pub delta_min_rel: f64,
    /// Margin around the critical exponent -1 in the L2 decision.
    pub margin: f64,
    pub max_steps: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions { rtol: 1e-10, delta_min_rel: 1e-8, margin: 0.05, max_steps: 400_000 }
    }
}

#[derive(Debug, Clone)]
pub struct TrajectorySample {
    pub x: f64,
    /// Boundary distance at finite endpoints; 1/x toward infinity.
    pub scale: f64,
    pub log_amplitude: f64,
    pub direction: [Complex64; 2],
}

#[derive(Debug, Clone)]
pub struct LogAmplitudeTrajectory {
    pub samples: Vec<TrajectorySample>,
    pub endpoint: EndpointSide,
    pub endpoint_infinite: bool,
    pub complete: bool,
    pub target_scale: f64,
}

fn interval_scale(iv: &Interval1D) -> f64 {
    match iv {
        Interval1D::Finite { a, b } => b - a,
        Interval1D::HalfLine { .. } => std::f64::consts::FRAC_PI_2,
    }
}

/// Integrates one solution from `(x0, psi0)` toward an endpoint in
/// log-amplitude form.
pub fn integrate_to_endpoint(
    p: &RadialDiracProblem,
    x0: f64,
    psi0: [Complex64; 2],
    side: EndpointSide,
    opts: &SolverOptions,
) -> Result<LogAmplitudeTrajectory> {
    if !p.interval.contains(x0) {
        return Err(Error::NotInterior { x0 });
    }
    let norm0 = (psi0[0].norm_sqr() + psi0[1].norm_sqr()).sqrt();
    if norm0 == 0.0 {
        return Err(Error::ZeroInitialState);
    }
    let probe = p.system(x0);
    if probe.iter().any(|z| !z.is_finite()) {
        return Err(Error::BadCoefficient { x: x0, value: f64::NAN });
    }

    let chart = Chart::for_interval(&p.interval);
    let infinite = p.interval.endpoint_is_infinite(side);
    let t0 = chart.t_of(x0);
    let t_end = chart.endpoint_t(side);
    let scale = interval_scale(&p.interval);
    let delta_min = opts.delta_min_rel * scale;
    let t_target = match side {
        EndpointSide::Lower => t_end + delta_min,
        EndpointSide::Upper => t_end - delta_min,
    };

    // State: (rho, Re u1, Im u1, Re u2, Im u2).
    let rhs = |t: f64, y: &[f64; 5]| -> [f64; 5] {
        let x = chart.x_of(t);
        let jac = chart.jacobian(t);
        let c = p.system(x);
        let u = [Complex64::new(y[1], y[2]), Complex64::new(y[3], y[4])];
        let w = [c[0] * u[0] + c[1] * u[1], c[2] * u[0] + c[3] * u[1]];
        let rho_dot = (u[0].conj() * w[0] + u[1].conj() * w[1]).re;
        let up = [w[0] - rho_dot * u[0], w[1] - rho_dot * u[1]];
        [jac * rho_dot, jac * up[0].re, jac * up[0].im, jac * up[1].re, jac * up[1].im]
    };

    let mut y0 = [0.0f64; 5];
    y0[0] = norm0.ln();
    y0[1] = (psi0[0] / norm0).re;
    y0[2] = (psi0[0] / norm0).im;
    y0[3] = (psi0[1] / norm0).re;
    y0[4] = (psi0[1] / norm0).im;

    let ode_opts = OdeOptions {
        rtol: opts.rtol,
        atol: 1e-12,
        max_steps: opts.max_steps,
        initial_step: 1e-3 * (t_end - t0).abs(),
    };
    let clamp = |t: f64| 0.1 * (t_end - t).abs();

    let mut samples = Vec::new();
    samples.push(TrajectorySample {
        x: x0,
        scale: chart.tail_scale(t0, side, infinite),
        log_amplitude: y0[0],
        direction: [Complex64::new(y0[1], y0[2]), Complex64::new(y0[3], y0[4])],
    });

    let mut on_step = |t: f64, y: &mut [f64; 5]| {
        // Fold |u| drift back into the log amplitude.
        let n = (y[1] * y[1] + y[2] * y[2] + y[3] * y[3] + y[4] * y[4]).sqrt();
        y[0] += n.ln();
        for v in y[1..].iter_mut() {
            *v /= n;
        }
        samples.push(TrajectorySample {
            x: chart.x_of(t),
            scale: chart.tail_scale(t, side, infinite),
            log_amplitude: y[0],
            direction: [Complex64::new(y[1], y[2]), Complex64::new(y[3], y[4])],
        });
    };

    let (_tf, _yf, reason) = ode::integrate(&rhs, t0, y0, t_target, &ode_opts, &clamp, &mut on_step);

    Ok(LogAmplitudeTrajectory {
        samples,
        endpoint: side,
        endpoint_infinite: infinite,
        complete: reason == StopReason::ReachedTarget,
        target_scale: if infinite {
            // 1/x at the stopping point
            delta_min / (1.0 + delta_min)
        } else {
            delta_min
        },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum L2Verdict {
    SquareIntegrable,
    NotSquareIntegrable,
    Inconclusive,
}

/// Square-integrability evidence for one solution near one endpoint.
#[derive(Debug, Clone, Serialize)]
pub struct TailClass {
    pub verdict: L2Verdict,
    /// Fitted local exponent p in `|Psi|^2 ~ delta^p` (measure-corrected at
    /// infinite endpoints).
    pub exponent: f64,
    /// Two-sigma confidence interval of the fit.
    pub confidence: (f64, f64),
    pub samples_used: usize,
    pub refinement_depth: usize,
}

fn fit_slope(points: &[(f64, f64)]) -> (f64, f64) {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let resid: f64 = points
        .iter()
        .map(|p| {
            let e = p.1 - my - slope * (p.0 - mx);
            e * e
        })
        .sum();
    let se = if points.len() > 2 { (resid / (n - 2.0) / sxx).sqrt() } else { f64::INFINITY };
    (slope, se)
}

const FIT_WINDOW_DECADES: f64 = 2.0;
const MIN_FIT_SAMPLES: usize = 16;

/// Classifies the L2 behavior of a trajectory from the fitted exponent of
/// `|Psi|^2` over the last two decades of boundary distance.
pub fn tail_l2_class(t: &LogAmplitudeTrajectory, opts: &SolverOptions) -> TailClass {
    let series: Vec<(f64, f64)> =
        t.samples.iter().map(|s| (s.scale.ln(), 2.0 * s.log_amplitude)).collect();
    tail_class_from_series(&series, t.complete, t.endpoint_infinite, opts)
}

pub(crate) fn tail_class_from_series(
    series: &[(f64, f64)],
    complete: bool,
    infinite: bool,
    opts: &SolverOptions,
) -> TailClass {
    let inconclusive = |exp: f64, n: usize| TailClass {
        verdict: L2Verdict::Inconclusive,
        exponent: exp,
        confidence: (f64::NEG_INFINITY, f64::INFINITY),
        samples_used: n,
        refinement_depth: 0,
    };
    if !complete || series.is_empty() {
        return inconclusive(f64::NAN, series.len());
    }
    let s_min = series.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let cut = s_min + FIT_WINDOW_DECADES * std::f64::consts::LN_10;
    let window: Vec<(f64, f64)> = series.iter().copied().filter(|p| p.0 <= cut).collect();
    if window.len() < MIN_FIT_SAMPLES {
        return inconclusive(f64::NAN, window.len());
    }
    let (slope, se) = fit_slope(&window);
    // In the boundary-distance variable s, the measure is ds at a finite
    // endpoint and s^-2 ds toward infinity.
    let p_eff = if infinite { slope - 2.0 } else { slope };
    let ci = (p_eff - 2.0 * se, p_eff + 2.0 * se);
    let verdict = if p_eff > -1.0 + opts.margin {
        L2Verdict::SquareIntegrable
    } else if p_eff <= -1.0 - opts.margin {
        L2Verdict::NotSquareIntegrable
    } else {
        // Inside the margin band the point estimate alone cannot be trusted:
        // slow corrections (log factors) shift local slopes by about
        // 1/|ln s|, which is the size of the margin at the default depth.
        // Such corrections drift across the fit window, so a stable slope
        // across the two half-windows certifies a clean power tail, whose
        // integral is then decided by the sign of p + 1 outside a noise band.
        let mid = 0.5 * (window[0].0 + window[window.len() - 1].0);
        let lo: Vec<(f64, f64)> = window.iter().copied().filter(|p| p.0 < mid).collect();
        let hi: Vec<(f64, f64)> = window.iter().copied().filter(|p| p.0 >= mid).collect();
        if lo.len() >= MIN_FIT_SAMPLES / 2 && hi.len() >= MIN_FIT_SAMPLES / 2 {
            let (s_lo, _) = fit_slope(&lo);
            let (s_hi, _) = fit_slope(&hi);
            let drift = (s_lo - s_hi).abs();
            let noise = (3.0 * se).max(2.0 * drift).max(1e-3);
            if drift <= 5e-3 && (p_eff + 1.0).abs() > noise {
                let verdict = if p_eff > -1.0 {
                    L2Verdict::SquareIntegrable
                } else {
                    L2Verdict::NotSquareIntegrable
                };
                return TailClass {
                    verdict,
                    exponent: p_eff,
                    confidence: ci,
                    samples_used: window.len(),
                    refinement_depth: 1,
                };
            }
        }
        L2Verdict::Inconclusive
    };
    TailClass { verdict, exponent: p_eff, confidence: ci, samples_used: window.len(), refinement_depth: 0 }
}

#[derive(Debug, Clone, Serialize)]
pub struct SolutionCount {
    /// Number of square-integrable solutions; `None` when a tail was
    /// inconclusive. With a real spectral shift both solutions can fail to
    /// be square-integrable (count 0); any count below 2 means limit point.
    pub count: Option<u8>,
    pub tails: [TailClass; 2],
    /// Worst orthonormality defect observed right after re-orthonormalization.
    pub frame_defect: f64,
}

/// Counts the square-integrable solutions near an endpoint by integrating an
/// orthonormalized 2-frame and classifying both growth exponents.
pub fn count_l2_solutions(
    p: &RadialDiracProblem,
    side: EndpointSide,
    opts: &SolverOptions,
) -> Result<SolutionCount> {
    let chart = Chart::for_interval(&p.interval);
    let infinite = p.interval.endpoint_is_infinite(side);
    let x0 = p.interval.midpoint();
    let t0 = chart.t_of(x0);
    let t_end = chart.endpoint_t(side);
    let scale = interval_scale(&p.interval);
    let delta_min = opts.delta_min_rel * scale;
    let t_target = match side {
        EndpointSide::Lower => t_end + delta_min,
        EndpointSide::Upper => t_end - delta_min,
    };
    let probe = p.system(x0);
    if probe.iter().any(|z| !z.is_finite()) {
        return Err(Error::BadCoefficient { x: x0, value: f64::NAN });
    }

    // State: frame M (column-major, interleaved re/im), solutions as columns.
    let rhs = |t: f64, y: &[f64; 8]| -> [f64; 8] {
        let x = chart.x_of(t);
        let jac = chart.jacobian(t);
        let c = p.system(x);
        let m = [
            Complex64::new(y[0], y[1]),
            Complex64::new(y[2], y[3]),
            Complex64::new(y[4], y[5]),
            Complex64::new(y[6], y[7]),
        ];
        // M' = C * M, columns (m[0], m[1]) and (m[2], m[3]).
        let d = [
            c[0] * m[0] + c[1] * m[1],
            c[2] * m[0] + c[3] * m[1],
            c[0] * m[2] + c[1] * m[3],
            c[2] * m[2] + c[3] * m[3],
        ];
        [
            jac * d[0].re,
            jac * d[0].im,
            jac * d[1].re,
            jac * d[1].im,
            jac * d[2].re,
            jac * d[2].im,
            jac * d[3].re,
            jac * d[3].im,
        ]
    };

    let mut y0 = [0.0f64; 8];
    y0[0] = 1.0; // identity frame
    y0[6] = 1.0;

    let ode_opts = OdeOptions {
        rtol: opts.rtol,
        atol: 1e-12,
        max_steps: opts.max_steps,
        initial_step: 1e-3 * (t_end - t0).abs(),
    };
    let clamp = |t: f64| 0.1 * (t_end - t).abs();

    let mut rho = [0.0f64; 2];
    let mut frame_defect = 0.0f64;
    let mut series: [Vec<(f64, f64)>; 2] = [Vec::new(), Vec::new()];
    let log_interval = 0.1;
    let s0 = chart.tail_scale(t0, side, infinite);
    let mut next_log_s = s0.ln() - log_interval;

    let mut on_step = |t: f64, y: &mut [f64; 8]| {
        // QR re-orthonormalization; R's diagonal accumulates the per-column
        // log growth.
        let mut c0 = [Complex64::new(y[0], y[1]), Complex64::new(y[2], y[3])];
        let mut c1 = [Complex64::new(y[4], y[5]), Complex64::new(y[6], y[7])];
        let r00 = (c0[0].norm_sqr() + c0[1].norm_sqr()).sqrt();
        c0[0] /= r00;
        c0[1] /= r00;
        let r01 = c0[0].conj() * c1[0] + c0[1].conj() * c1[1];
        c1[0] -= r01 * c0[0];
        c1[1] -= r01 * c0[1];
        let r11 = (c1[0].norm_sqr() + c1[1].norm_sqr()).sqrt();
        c1[0] /= r11;
        c1[1] /= r11;
        rho[0] += r00.ln();
        rho[1] += r11.ln();
        let dot = (c0[0].conj() * c1[0] + c0[1].conj() * c1[1]).norm();
        let n0 = ((c0[0].norm_sqr() + c0[1].norm_sqr()).sqrt() - 1.0).abs();
        let n1 = ((c1[0].norm_sqr() + c1[1].norm_sqr()).sqrt() - 1.0).abs();
        frame_defect = frame_defect.max(dot).max(n0).max(n1);
        y[0] = c0[0].re;
        y[1] = c0[0].im;
        y[2] = c0[1].re;
        y[3] = c0[1].im;
        y[4] = c1[0].re;
        y[5] = c1[0].im;
        y[6] = c1[1].re;
        y[7] = c1[1].im;

        let ls = chart.tail_scale(t, side, infinite).ln();
        if ls <= next_log_s {
            series[0].push((ls, 2.0 * rho[0]));
            series[1].push((ls, 2.0 * rho[1]));
            while next_log_s >= ls {
                next_log_s -= log_interval;
            }
        }
    };

    let (_tf, _yf, reason) = ode::integrate(&rhs, t0, y0, t_target, &ode_opts, &clamp, &mut on_step);
    let complete = reason == StopReason::ReachedTarget;

    let tails = [
        tail_class_from_series(&series[0], complete, infinite, opts),
        tail_class_from_series(&series[1], complete, infinite, opts),
    ];
    let count = if tails.iter().any(|t| t.verdict == L2Verdict::Inconclusive) {
        None
    } else {
        let not_l2 =
            tails.iter().filter(|t| t.verdict == L2Verdict::NotSquareIntegrable).count() as u8;
        Some(2 - not_l2)
    };
    Ok(SolutionCount { count, tails, frame_defect })
}
