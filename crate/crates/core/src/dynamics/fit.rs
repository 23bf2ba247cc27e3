//! Least-squares fit of n(t) = (n₀ − n_ss)e^{−Wt} + n_ss.

use serde::Serialize;

use super::CoolingTrajectory;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FitResult {
    pub n0: f64,
    pub nss: f64,
    pub w: f64,
    /// RMS deviation over the fitted samples.
    pub residual: f64,
    /// The fitted window covers fewer than two decay times, or w ≤ 0.
    pub insufficient_decay: bool,
    pub samples_used: usize,
}

pub const MIN_SAMPLES: usize = 10;
/// Leading fraction of samples dropped before fitting.
pub const DISCARD_FRACTION: f64 = 0.05;
/// Allowed rise of n(t) above n(0), relative to n(0).
pub const MAX_RISE: f64 = 0.05;

pub fn fit_exponential(traj: &CoolingTrajectory) -> Result<FitResult> {
    fit_exponential_series(&traj.times, &traj.nbar)
}

fn model(t: f64, th: &[f64; 3]) -> f64 {
    (th[0] - th[1]) * (-th[2] * t).exp() + th[1]
}

fn sse(t: &[f64], y: &[f64], th: &[f64; 3]) -> f64 {
    t.iter().zip(y).map(|(&t, &y)| (model(t, th) - y).powi(2)).sum()
}

/// Relative weights 1/|y|, floored so exact zeros stay finite.
fn weights(y: &[f64]) -> Vec<f64> {
    let floor = 1e-12 * y.iter().map(|v| v.abs()).fold(0.0, f64::max);
    y.iter().map(|v| 1.0 / v.abs().max(floor).max(1e-300)).collect()
}

fn weighted_sse(t: &[f64], y: &[f64], wt: &[f64], th: &[f64; 3]) -> f64 {
    t.iter()
        .zip(y)
        .zip(wt)
        .map(|((&t, &y), &w)| ((model(t, th) - y) * w).powi(2))
        .sum()
}

/// Fits the decay law with Levenberg-Marquardt after discarding the first 5%
/// of samples. Residuals are weighted by 1/|n|, so every sample counts with
/// its relative deviation and the tail determines n_ss.
///
/// Starting values: n₀ from the first sample, n_ss from the last, and W from
/// a straight-line fit of ln(n − n_ss).
pub fn fit_exponential_series(times: &[f64], nbar: &[f64]) -> Result<FitResult> {
    if times.len() != nbar.len() {
        return Err(Error::DimensionMismatch { expected: times.len(), found: nbar.len() });
    }
    if times.len() < MIN_SAMPLES {
        return Err(Error::InvalidArgument(format!(
            "fit needs at least {MIN_SAMPLES} samples, got {}",
            times.len()
        )));
    }
    let initial = nbar[0];
    let peak = nbar.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let rise = peak - initial;
    if rise > MAX_RISE * initial.abs() && rise > 0.0 {
        return Err(Error::NonMonotone { rise, initial });
    }

    let skip = (DISCARD_FRACTION * times.len() as f64).floor() as usize;
    let (t, y) = (&times[skip..], &nbar[skip..]);
    let span = t[t.len() - 1] - t[0];

    let nss0 = y[y.len() - 1];
    let w0 = log_linear_rate(t, y, nss0);
    let n00 = if w0 > 0.0 { nss0 + (y[0] - nss0) * (w0 * t[0]).exp() } else { initial };
    let mut th = [n00, nss0, w0.max(0.0)];

    if w0 > 0.0 {
        levenberg_marquardt(t, y, &mut th);
    } else {
        let m = mean(y);
        th = [m, m, 0.0];
    }

    let residual = (sse(t, y, &th) / t.len() as f64).sqrt();
    let insufficient_decay = !(th[2] > 0.0) || th[2] * span < 2.0;
    Ok(FitResult {
        n0: th[0],
        nss: th[1],
        w: th[2],
        residual,
        insufficient_decay,
        samples_used: t.len(),
    })
}

fn mean(y: &[f64]) -> f64 {
    y.iter().sum::<f64>() / y.len() as f64
}

/// Slope of ln(y − floor) against t over the samples above the floor.
fn log_linear_rate(t: &[f64], y: &[f64], floor: f64) -> f64 {
    let scale = y.iter().map(|v| (v - floor).abs()).fold(0.0, f64::max);
    let pts: Vec<(f64, f64)> = t
        .iter()
        .zip(y)
        .filter(|(_, &v)| v - floor > 1e-3 * scale && scale > 0.0)
        .map(|(&t, &v)| (t, (v - floor).ln()))
        .collect();
    if pts.len() < 2 {
        return 0.0;
    }
    let n = pts.len() as f64;
    let mt = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let ml = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let cov: f64 = pts.iter().map(|p| (p.0 - mt) * (p.1 - ml)).sum();
    let var: f64 = pts.iter().map(|p| (p.0 - mt).powi(2)).sum();
    if var == 0.0 {
        0.0
    } else {
        -cov / var
    }
}

fn levenberg_marquardt(t: &[f64], y: &[f64], th: &mut [f64; 3]) {
    let wt = weights(y);
    let mut lambda = 1e-3;
    let mut cost = weighted_sse(t, y, &wt, th);
    for _ in 0..500 {
        let mut jtj = [[0.0; 3]; 3];
        let mut jtr = [0.0; 3];
        for ((&ti, &yi), &wi) in t.iter().zip(y).zip(&wt) {
            let e = (-th[2] * ti).exp();
            let jac = [wi * e, wi * (1.0 - e), -wi * (th[0] - th[1]) * ti * e];
            let r = wi * (yi - model(ti, th));
            for a in 0..3 {
                jtr[a] += jac[a] * r;
                for b in 0..3 {
                    jtj[a][b] += jac[a] * jac[b];
                }
            }
        }
        let mut improved = false;
        while lambda < 1e16 {
            let mut m = jtj;
            for (a, row) in m.iter_mut().enumerate() {
                row[a] += lambda * jtj[a][a].max(1e-300);
            }
            let Some(step) = solve3(m, jtr) else {
                lambda *= 10.0;
                continue;
            };
            let trial = [th[0] + step[0], th[1] + step[1], th[2] + step[2]];
            let trial_cost = weighted_sse(t, y, &wt, &trial);
            if trial_cost.is_finite() && trial_cost <= cost {
                let rel = (0..3)
                    .map(|k| step[k].abs() / (th[k].abs() + 1e-300))
                    .fold(0.0, f64::max);
                *th = trial;
                let done = cost - trial_cost <= 1e-15 * cost || rel < 1e-12;
                cost = trial_cost;
                lambda = (lambda / 10.0).max(1e-12);
                improved = !done;
                break;
            }
            lambda *= 10.0;
        }
        if !improved {
            break;
        }
    }
}

/// Gaussian elimination with partial pivoting on a 3×3 system.
fn solve3(mut m: [[f64; 3]; 3], mut b: [f64; 3]) -> Option<[f64; 3]> {
    for col in 0..3 {
        let piv = (col..3).max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))?;
        if m[piv][col].abs() < 1e-300 {
            return None;
        }
        m.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..3 {
            let f = m[row][col] / m[col][col];
            for k in col..3 {
                m[row][k] -= f * m[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = [0.0; 3];
    for row in (0..3).rev() {
        let s: f64 = (row + 1..3).map(|k| m[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / m[row][row];
    }
    Some(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::test_util::rng;
    use rand::Rng;

    fn synthetic(n0: f64, nss: f64, w: f64, t_end: f64, n: usize) -> (Vec<f64>, Vec<f64>) {
        let t: Vec<f64> = (0..n).map(|k| t_end * k as f64 / (n - 1) as f64).collect();
        let y = t.iter().map(|&t| (n0 - nss) * (-w * t).exp() + nss).collect();
        (t, y)
    }

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    #[test]
    fn exact_curve_round_trip() {
        let (t, y) = synthetic(1.0, 1.9e-4, 0.002, 3000.0, 50);
        let f = fit_exponential_series(&t, &y).unwrap();
        assert!(rel(f.n0, 1.0) < 1e-3);
        assert!(rel(f.nss, 1.9e-4) < 1e-3, "{}", f.nss);
        assert!(rel(f.w, 0.002) < 1e-3);
        assert!(!f.insufficient_decay);
        assert!(f.residual < 1e-10);
    }

    #[test]
    fn constant_trajectory_flags_insufficient_decay() {
        let t: Vec<f64> = (0..20).map(|k| k as f64).collect();
        let y = vec![0.3; 20];
        let f = fit_exponential_series(&t, &y).unwrap();
        assert_eq!(f.w, 0.0);
        assert_eq!(f.nss, f.n0);
        assert!(f.insufficient_decay);
    }

    #[test]
    fn noisy_curves_stay_within_five_percent() {
        let mut r = rng(2718);
        // Twelve decay times, so the tail resolves n_ss.
        let (t, clean) = synthetic(1.0, 1.9e-4, 0.002, 6000.0, 50);
        for _ in 0..100 {
            let y: Vec<f64> = clean
                .iter()
                .map(|v| v * (1.0 + 0.01 * r.random_range(-1.0..1.0)))
                .collect();
            let f = fit_exponential_series(&t, &y).unwrap();
            assert!(rel(f.n0, 1.0) < 0.05);
            assert!(rel(f.nss, 1.9e-4) < 0.05, "nss {}", f.nss);
            assert!(rel(f.w, 0.002) < 0.05);
        }
    }

    #[test]
    fn heating_curve_is_rejected() {
        let (t, y) = synthetic(0.1, 1.0, 0.01, 500.0, 30);
        assert!(matches!(fit_exponential_series(&t, &y), Err(Error::NonMonotone { .. })));
    }

    #[test]
    fn short_window_flags_insufficient_decay() {
        let (t, y) = synthetic(1.0, 0.1, 0.002, 300.0, 30);
        let f = fit_exponential_series(&t, &y).unwrap();
        assert!(f.insufficient_decay);
        assert!(rel(f.w, 0.002) < 1e-3);
    }

    #[test]
    fn too_few_samples() {
        let (t, y) = synthetic(1.0, 0.1, 0.1, 10.0, 5);
        assert!(fit_exponential_series(&t, &y).is_err());
    }
}
