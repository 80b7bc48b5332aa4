//! Least-squares approximation in the formal-power basis and empirical
//! convergence orders of Taylor partial sums.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{circle_points, golden_spiral, ScalarField, C64};
use crate::integrate::Quadrature;
use crate::lsq;
use crate::powers::{BasisElement, TaylorExpansion};

/// Relative singular-value cutoff of the least-squares solve.
pub const RANK_THRESHOLD: f64 = 1e-10;
/// Rotation of the held-out spiral against the fitting samples.
const HELD_OUT_ROTATION: f64 = 0.5;
const BOUNDARY_POINTS: usize = 64;

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct FitReport {
    /// Highest exponent present in the basis.
    pub order: usize,
    pub basis_size: usize,
    pub coefficients: Vec<f64>,
    /// RMS residual on the fitting samples.
    pub sample_rms: f64,
    /// Sup residual on held-out interior points.
    pub interior_sup: f64,
    /// RMS residual on the circle bounding the samples.
    pub boundary_l2: f64,
    pub condition: f64,
    pub rank: usize,
    pub rank_deficient: bool,
    pub center: [f64; 2],
    pub radius: f64,
}

/// Fits a real target by the real basis fields on `samples`. The held-out set is a
/// rotated golden-angle spiral in the disc spanned by the samples.
pub fn fit(target: &ScalarField, basis: &[BasisElement], samples: &[C64]) -> Result<FitReport> {
    if basis.is_empty() {
        return Err(Error::invalid("empty basis"));
    }
    if samples.len() < basis.len() {
        return Err(Error::InsufficientSamples { got: samples.len(), needed: basis.len() });
    }
    for &z in samples {
        if !target.domain().contains(z) {
            return Err(Error::OutOfDomain { z });
        }
    }
    let center = samples.iter().sum::<C64>() / samples.len() as f64;
    let radius = samples.iter().map(|z| (z - center).norm()).fold(0.0, f64::max);

    let cols = basis.len();
    let row = |z: C64| -> Vec<f64> { basis.iter().map(|b| b.field.value(z).re).collect() };
    let matrix: Vec<f64> = samples.par_iter().flat_map_iter(|&z| row(z)).collect();
    let rhs: Vec<f64> = samples.iter().map(|&z| target.value(z).re).collect();
    if let Some(k) = matrix.iter().chain(&rhs).position(|v| !v.is_finite()) {
        let z = samples[(k % (samples.len() * cols)) / cols.max(1)];
        return Err(Error::invalid(format!("non-finite basis or target value near {z}")));
    }
    let solution = lsq::solve(&matrix, samples.len(), cols, &rhs, RANK_THRESHOLD);
    let c = &solution.coefficients;
    let residual = |z: C64| -> f64 { row(z).iter().zip(c).map(|(b, k)| b * k).sum::<f64>() - target.value(z).re };

    let sample_rms = (samples.iter().map(|&z| residual(z).powi(2)).sum::<f64>() / samples.len() as f64).sqrt();
    let turn = C64::from_polar(1.0, HELD_OUT_ROTATION);
    let held_out: Vec<C64> =
        golden_spiral(C64::new(0.0, 0.0), radius, 2 * samples.len()).into_iter().map(|p| center + p * turn).collect();
    let interior_sup = held_out.par_iter().map(|&z| residual(z).abs()).reduce(|| 0.0, f64::max);
    let boundary: Vec<C64> =
        circle_points(center, radius, BOUNDARY_POINTS).into_iter().filter(|&z| target.domain().contains(z)).collect();
    let boundary_l2 = if boundary.is_empty() {
        0.0
    } else {
        (boundary.iter().map(|&z| residual(z).powi(2)).sum::<f64>() / boundary.len() as f64).sqrt()
    };

    Ok(FitReport {
        order: basis.iter().map(|b| b.n).max().unwrap_or(0),
        basis_size: cols,
        coefficients: c.clone(),
        sample_rms,
        interior_sup,
        boundary_l2,
        condition: solution.condition,
        rank: solution.rank,
        rank_deficient: solution.rank_deficient,
        center: [center.re, center.im],
        radius,
    })
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq)]
pub struct ConvergenceRow {
    #[serde(rename = "N")]
    pub order: usize,
    pub radius: f64,
    pub remainder: f64,
    /// Least-squares slope for this `N` (repeated on each of its rows).
    pub slope: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct OrderEstimate {
    pub order: usize,
    pub slope: f64,
    pub rows: Vec<ConvergenceRow>,
}

/// Points per circle when measuring the remainder.
pub const CIRCLE_POINTS: usize = 16;

/// Slope of `log sup_{|z - z0| = r} |target - S_N|` against `log r`, where
/// `S_N` is the partial sum up to `order`. A real target is compared with the
/// real part of the partial sum.
pub fn order_estimate(
    target: &ScalarField,
    expansion: &TaylorExpansion,
    order: usize,
    radii: &[f64],
    quad: &Quadrature,
) -> Result<OrderEstimate> {
    if radii.len() < 2 {
        return Err(Error::InsufficientSamples { got: radii.len(), needed: 2 });
    }
    if order > expansion.order() {
        return Err(Error::invalid(format!("expansion has order {} < {order}", expansion.order())));
    }
    if radii.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::invalid("radii must be strictly decreasing"));
    }
    let spacing = expansion.sequence().stencil().h;
    let smallest = radii[radii.len() - 1];
    if smallest < 10.0 * spacing {
        return Err(Error::invalid(format!("radius {smallest} is below ten grid spacings ({spacing})")));
    }
    let real = target.is_real();
    let z0 = expansion.z0;
    let floor = 100.0 * quad.tolerance;
    let mut remainders = Vec::with_capacity(radii.len());
    for &r in radii {
        let mut worst: f64 = 0.0;
        for z in circle_points(z0, r, CIRCLE_POINTS) {
            let value = target.eval(z)?;
            let sum = expansion.partial_sum_to(order, z)?;
            let d = if real { (value.re - sum.re).abs() } else { (value - sum).norm() };
            worst = worst.max(d);
        }
        if !(worst >= floor) {
            return Err(Error::NoiseFloorReached { radius: r, remainder: worst, floor });
        }
        remainders.push(worst);
    }
    let xs: Vec<f64> = radii.iter().map(|r| r.ln()).collect();
    let ys: Vec<f64> = remainders.iter().map(|r| r.ln()).collect();
    let slope = regression_slope(&xs, &ys);
    let rows = radii
        .iter()
        .zip(&remainders)
        .map(|(&radius, &remainder)| ConvergenceRow { order, radius, remainder, slope })
        .collect();
    Ok(OrderEstimate { order, slope, rows })
}

fn regression_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

/// Writes `N,radius,remainder,slope` rows with full precision.
pub fn write_convergence_csv<W: Write>(rows: &[ConvergenceRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["N", "radius", "remainder", "slope"])?;
    for r in rows {
        w.write_record([
            r.order.to_string(),
            format!("{:.16e}", r.radius),
            format!("{:.16e}", r.remainder),
            format!("{:.16e}", r.slope),
        ])?;
    }
    w.flush()?;
    Ok(())
}
