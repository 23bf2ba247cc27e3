//! Dormand-Prince 5(4) integrator with adaptive step control.

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub rtol: f64,
    pub atol: f64,
    /// Smallest step, relative to `1 + |t|`, accepted before giving up.
    pub h_min: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { rtol: 1e-8, atol: 1e-10, h_min: 1e-12 }
    }
}

/// Stage coefficients a[i][j], j < i, for stages 2..=7.
const A: [[f64; 6]; 6] = [
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];

/// Fifth-order minus embedded fourth-order weights.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// Counters collected over one integration.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct OdeStats {
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
}

/// Integrates the autonomous system `y' = f(y)` through the sample times
/// `grid`, landing exactly on each and calling `observe(index, t, y)` there.
/// `grid[0]` is the initial time.
pub fn integrate<F, O>(
    mut f: F,
    y0: &[C64],
    grid: &[f64],
    tol: Tolerances,
    mut observe: O,
) -> Result<(Vec<C64>, OdeStats)>
where
    F: FnMut(&[C64], &mut [C64]),
    O: FnMut(usize, f64, &[C64]) -> Result<()>,
{
    let n = y0.len();
    let zero = C64::new(0.0, 0.0);
    let mut y = y0.to_vec();
    let mut stats = OdeStats::default();
    let Some(&t0) = grid.first() else {
        return Ok((y, stats));
    };
    observe(0, t0, &y)?;
    if grid.len() == 1 {
        return Ok((y, stats));
    }

    let mut k: Vec<Vec<C64>> = vec![vec![zero; n]; 7];
    let mut tmp = vec![zero; n];
    let mut err_vec = vec![zero; n];
    f(&y, &mut k[0]);
    stats.evaluations += 1;

    let mut t = t0;
    let mut h = initial_step(&y, &k[0], tol, grid[grid.len() - 1] - t0);
    let mut err_prev: f64 = 1e-4;

    for (idx, &target) in grid.iter().enumerate().skip(1) {
        while t < target {
            let remaining = target - t;
            let last = h >= remaining;
            let step = if last { remaining } else { h };

            for s in 1..7 {
                tmp.copy_from_slice(&y);
                for (j, &a) in A[s - 1].iter().enumerate().take(s) {
                    if a != 0.0 {
                        axpy(a * step, &k[j], &mut tmp);
                    }
                }
                f(&tmp, &mut k[s]);
            }
            stats.evaluations += 6;
            // Stage 7 was evaluated at the fifth-order solution, now in `tmp`.

            err_vec.fill(zero);
            for (j, &w) in E.iter().enumerate() {
                if w != 0.0 {
                    axpy(w * step, &k[j], &mut err_vec);
                }
            }
            // Max-norm of the scaled local error.
            let mut acc: f64 = 0.0;
            for i in 0..n {
                let mag = y[i].norm_sqr().max(tmp[i].norm_sqr()).sqrt();
                let sc = tol.atol + tol.rtol * mag;
                let scaled = err_vec[i].norm_sqr().sqrt() / sc;
                // NaN or overflow anywhere rejects the step.
                acc = if scaled.is_finite() && mag.is_finite() {
                    acc.max(scaled)
                } else {
                    f64::INFINITY
                };
            }
            let err = acc;

            if err <= 1.0 {
                t = if last { target } else { t + step };
                std::mem::swap(&mut y, &mut tmp);
                k.swap(0, 6);
                stats.accepted += 1;
                let fac = 0.9 * err.max(1e-10).powf(-0.7 / 5.0) * err_prev.powf(0.4 / 5.0);
                err_prev = err.max(1e-4);
                let proposed = step * fac.clamp(0.2, 10.0);
                // A step shortened to hit the grid does not shrink the next one.
                h = if last { proposed.max(h) } else { proposed };
            } else {
                stats.rejected += 1;
                h = step * (0.9 * err.powf(-0.2)).max(0.2);
                if h < tol.h_min * (1.0 + t.abs()) {
                    return Err(Error::ToleranceFailure { t, h });
                }
            }
        }
        observe(idx, t, &y)?;
    }
    Ok((y, stats))
}

/// y += a·x.
fn axpy(a: f64, x: &[C64], y: &mut [C64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        yi.re += a * xi.re;
        yi.im += a * xi.im;
    }
}

fn initial_step(y: &[C64], dy: &[C64], tol: Tolerances, span: f64) -> f64 {
    let mut d0 = 0.0;
    let mut d1 = 0.0;
    for (a, b) in y.iter().zip(dy) {
        let sc = tol.atol + tol.rtol * a.norm();
        d0 += (a.norm() / sc).powi(2);
        d1 += (b.norm() / sc).powi(2);
    }
    let n = y.len().max(1) as f64;
    let (d0, d1) = ((d0 / n).sqrt(), (d1 / n).sqrt());
    let h = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    h.min(span).max(1e-10)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn exponential_decay_and_rotation() {
        let grid: Vec<f64> = (0..=10).map(|k| k as f64 * 0.5).collect();
        let lambda = C64::new(-0.3, 2.0);
        let mut worst: f64 = 0.0;
        let (y, stats) = integrate(
            |y, dy| dy[0] = lambda * y[0],
            &[c(1.0)],
            &grid,
            Tolerances::default(),
            |_, t, y| {
                worst = worst.max((y[0] - (lambda * t).exp()).norm());
                Ok(())
            },
        )
        .unwrap();
        assert!(worst < 1e-7, "{worst}");
        assert!((y[0] - (lambda * 5.0).exp()).norm() < 1e-7);
        assert!(stats.accepted > 0);
    }

    #[test]
    fn harmonic_oscillator_energy() {
        let grid = [0.0, 20.0];
        let (y, _) = integrate(
            |y, dy| {
                dy[0] = y[1];
                dy[1] = -y[0];
            },
            &[c(1.0), c(0.0)],
            &grid,
            Tolerances::default(),
            |_, _, _| Ok(()),
        )
        .unwrap();
        assert!((y[0].re - 20f64.cos()).abs() < 1e-6);
        assert!((y[1].re + 20f64.sin()).abs() < 1e-6);
    }

    #[test]
    fn single_point_grid_is_identity() {
        let mut calls = 0;
        let (y, stats) = integrate(
            |_, _| calls += 1,
            &[c(2.0)],
            &[0.0],
            Tolerances::default(),
            |_, _, _| Ok(()),
        )
        .unwrap();
        assert_eq!(y, vec![c(2.0)]);
        assert_eq!(stats.evaluations, 0);
        assert_eq!(calls, 0);
    }

    #[test]
    fn blow_up_reports_tolerance_failure() {
        // y' = y², y(0) = 1 diverges at t = 1.
        let r = integrate(
            |y, dy| dy[0] = y[0] * y[0],
            &[c(1.0)],
            &[0.0, 2.0],
            Tolerances::default(),
            |_, _, _| Ok(()),
        );
        assert!(matches!(r, Err(Error::ToleranceFailure { .. })), "{r:?}");
    }
}
