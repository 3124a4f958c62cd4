//! Least-squares fit of `F(G) = F_inf + beta * gamma^G` to a fidelity series.

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{QgaError, Result};

const MAX_ITERATIONS: usize = 200;
const STEP_TOL: f64 = 1e-10;
const FLAT_TOL: f64 = 1e-12;
const GAMMA_MAX: f64 = 1.0 - 1e-12;
/// Share of the transient that must decay inside the window for `F_inf` to be an
/// interpolation rather than an extrapolation.
const RESOLVED_DECAY: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub f_inf: f64,
    pub beta: f64,
    pub gamma: f64,
    /// Root-mean-square residual over the fitted window.
    pub rms: f64,
    /// Less than half of the fitted transient decays inside the window, so `F_inf` is
    /// not identified; it is then the mean of the window and `beta` is zero.
    #[serde(default)]
    pub degenerate: bool,
}

fn model(p: &Vector3<f64>, g: f64) -> f64 {
    p[0] + p[1] * p[2].powf(g)
}

fn sse(p: &Vector3<f64>, points: &[(f64, f64)]) -> f64 {
    points.iter().map(|&(g, f)| (model(p, g) - f).powi(2)).sum()
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Fits the generations `burn_in..=G_max` of `series` (entry `g` is generation `g`).
pub fn fit_convergence(series: &[f64], burn_in: usize) -> Result<FitResult> {
    if series.len() <= burn_in + 2 {
        return Err(QgaError::Range(format!(
            "series of length {} is too short for burn-in {burn_in}",
            series.len()
        )));
    }
    let points: Vec<(f64, f64)> = series.iter().enumerate().skip(burn_in).map(|(g, &f)| (g as f64, f)).collect();
    let last = points[points.len() - 1].1;
    let diffs: Vec<f64> = points.windows(2).map(|w| w[1].1 - w[0].1).collect();
    if diffs.iter().all(|d| d.abs() < FLAT_TOL) {
        let p = Vector3::new(last, 0.0, 0.0);
        return Ok(finish(&p, &points));
    }

    let ratios: Vec<f64> = diffs
        .windows(2)
        .filter(|w| w[0].abs() >= FLAT_TOL)
        .map(|w| (w[1] / w[0]).abs())
        .collect();
    let gamma0 = if ratios.is_empty() { 0.5 } else { median(ratios) }.clamp(1e-3, 1.0 - 1e-3);
    // beta from least squares of F - F_inf against gamma^G with F_inf fixed.
    let (num, den) = points.iter().fold((0.0, 0.0), |(n, d), &(g, f)| {
        let x = gamma0.powf(g);
        (n + x * (f - last), d + x * x)
    });
    let mut p = project(Vector3::new(last, num / den, gamma0));
    let mut cost = sse(&p, &points);

    for _ in 0..MAX_ITERATIONS {
        let mut jtj = Matrix3::zeros();
        let mut jtr = Vector3::zeros();
        for &(g, f) in &points {
            let gp = p[2].powf(g);
            let dg = if g == 0.0 { 0.0 } else { p[1] * g * p[2].powf(g - 1.0) };
            let j = Vector3::new(1.0, gp, dg);
            jtj += j * j.transpose();
            jtr += j * (model(&p, g) - f);
        }
        let Ok(step) = jtj.svd(true, true).solve(&(-jtr), 1e-14) else { break };
        let mut scale = 1.0;
        let mut accepted = None;
        while scale > 1e-10 {
            let trial = project(p + step * scale);
            let c = sse(&trial, &points);
            if c <= cost {
                accepted = Some((trial, c));
                break;
            }
            scale *= 0.5;
        }
        let Some((next, c)) = accepted else { break };
        let moved = (next - p).amax();
        p = next;
        cost = c;
        if moved < STEP_TOL {
            break;
        }
    }
    Ok(finish(&p, &points))
}

/// Keeps `F_inf` a probability and `gamma` a contraction rate.
fn project(p: Vector3<f64>) -> Vector3<f64> {
    Vector3::new(p[0].clamp(0.0, 1.0), p[1], p[2].clamp(0.0, GAMMA_MAX))
}

fn finish(p: &Vector3<f64>, points: &[(f64, f64)]) -> FitResult {
    let mut p = project(*p);
    let span = points[points.len() - 1].0 - points[0].0;
    let degenerate = p[2].powf(span) >= RESOLVED_DECAY;
    if degenerate {
        // Noise then trades F_inf against beta freely; report the level the data supports.
        p[0] = points.iter().map(|&(_, f)| f).sum::<f64>() / points.len() as f64;
        p[1] = 0.0;
    }
    FitResult { f_inf: p[0], beta: p[1], gamma: p[2], rms: (sse(&p, points) / points.len() as f64).sqrt(), degenerate }
}
