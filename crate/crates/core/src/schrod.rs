//! Stationary Schrodinger problems `(-Laplacian + nu) u = 0` with a known
//! nonvanishing particular solution `f0`: residuals, the problem registry,
//! Condition S and the Darboux-type transforms between `u` and `v`.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::field::{disc_samples, Codomain, Domain, ScalarField, Stencil, C64, I};
use crate::integrate::{antigradient_field, Antigradient, Quadrature};
use crate::lsq;

/// Relative tolerance for "is a solution" checks.
pub const SOLUTION_TOLERANCE: f64 = 1e-5;
pub const VERIFICATION_SAMPLES: usize = 200;

/// Closed-form sources of a problem, kept for provenance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProblemSources {
    pub nu: String,
    pub f0: String,
    pub rho: String,
}

#[derive(Clone, Debug)]
pub struct SchrodingerProblem {
    pub name: String,
    pub nu: ScalarField,
    pub f0: ScalarField,
    pub rho: Option<ScalarField>,
    pub z0: C64,
    pub sources: Option<ProblemSources>,
    stencil: Stencil,
}

impl SchrodingerProblem {
    /// Validates that `f0` does not vanish and solves the equation.
    pub fn new(name: impl Into<String>, nu: ScalarField, f0: ScalarField, rho: Option<ScalarField>, z0: C64) -> Result<Self> {
        let domain = *f0.domain();
        if !domain.contains(z0) {
            return Err(Error::OutOfDomain { z: z0 });
        }
        let samples = domain.interior_samples(400);
        let scale = samples.iter().map(|&z| f0.value(z).norm()).fold(0.0, f64::max);
        for &z in samples.iter().chain(std::iter::once(&z0)) {
            let value = f0.value(z).norm();
            if !(value >= 1e-9 * scale) {
                return Err(Error::VanishingSolution { z, value });
            }
        }
        let problem = SchrodingerProblem { name: name.into(), nu, f0, rho, z0, sources: None, stencil: Stencil::for_domain(&domain) };
        let residual = problem.relative_residual(&problem.f0, &problem.verification_samples(VERIFICATION_SAMPLES), false)?;
        if residual > SOLUTION_TOLERANCE {
            return Err(Error::NotASolution { residual, tolerance: SOLUTION_TOLERANCE });
        }
        Ok(problem)
    }

    /// Builds a problem from closed-form expressions in `x`, `y` and `params`.
    pub fn from_expressions(
        name: impl Into<String>,
        sources: ProblemSources,
        params: &HashMap<String, f64>,
        domain: Domain,
        z0: C64,
    ) -> Result<Self> {
        let nu = Expr::parse_with(&sources.nu, params)?.field(domain, Codomain::Real);
        let f0 = Expr::parse_with(&sources.f0, params)?.field(domain, Codomain::Real);
        let rho = Expr::parse_with(&sources.rho, params)?.field(domain, Codomain::Real);
        let mut p = Self::new(name, nu, f0, Some(rho), z0)?;
        p.sources = Some(sources);
        Ok(p)
    }

    /// `nu = 6/(y+1)^2`, `f0 = (y+1)^3`, `rho = y` on the unit disc.
    pub fn example1() -> Self {
        let sources = ProblemSources { nu: "6/(y+1)^2".into(), f0: "(y+1)^3".into(), rho: "y".into() };
        Self::from_expressions("example1", sources, &HashMap::new(), Domain::unit_disc(), C64::new(0.0, 0.0))
            .expect("registry problem is valid")
    }

    /// `f0 = sqrt((x+alpha)(y+beta))`, `rho = (x+alpha)(y+beta)` on the unit disc;
    /// requires `alpha, beta > 1` so that `f0` stays away from zero.
    pub fn example2(alpha: f64, beta: f64) -> Result<Self> {
        if !(alpha > 1.0 && beta > 1.0) {
            return Err(Error::invalid(format!("example2 needs alpha, beta > 1 on the unit disc, got ({alpha}, {beta})")));
        }
        let sources = ProblemSources {
            nu: "-(1/(x+alpha)^2 + 1/(y+beta)^2)/4".into(),
            f0: "sqrt((x+alpha)*(y+beta))".into(),
            rho: "(x+alpha)*(y+beta)".into(),
        };
        let params = HashMap::from([("alpha".to_string(), alpha), ("beta".to_string(), beta)]);
        Self::from_expressions("example2", sources, &params, Domain::unit_disc(), C64::new(0.0, 0.0))
    }

    /// `nu = 0`, `f0 = 1`, `rho = x` on the unit disc.
    pub fn harmonic() -> Self {
        let sources = ProblemSources { nu: "0".into(), f0: "1".into(), rho: "x".into() };
        Self::from_expressions("harmonic", sources, &HashMap::new(), Domain::unit_disc(), C64::new(0.0, 0.0))
            .expect("registry problem is valid")
    }

    /// Registry lookup; `example2` reads `alpha` and `beta` from `params` (default 2, 2).
    pub fn registry(name: &str, params: &HashMap<String, f64>) -> Result<Self> {
        match name {
            "example1" => Ok(Self::example1()),
            "example2" => Self::example2(
                params.get("alpha").copied().unwrap_or(2.0),
                params.get("beta").copied().unwrap_or(2.0),
            ),
            "harmonic" => Ok(Self::harmonic()),
            other => Err(Error::invalid(format!("unknown problem '{other}' (expected example1, example2 or harmonic)"))),
        }
    }

    pub fn domain(&self) -> &Domain {
        self.f0.domain()
    }

    pub fn stencil(&self) -> &Stencil {
        &self.stencil
    }

    /// Area-uniform points in the disc of radius `0.6 dist(z0, boundary)` around `z0`.
    pub fn verification_samples(&self, count: usize) -> Vec<C64> {
        disc_samples(self.z0, 0.6 * self.domain().distance_to_boundary(self.z0), count)
    }

    /// `nu_darboux = 2 (|grad f0| / f0)^2 - nu`, the potential of the transformed equation
    /// `(Laplacian - nu_darboux) v = 0`.
    pub fn darboux_potential(&self) -> ScalarField {
        let f0z = self.f0.dz_field(&self.stencil);
        let g = f0z.mul(&f0z.conj()).div(&self.f0.mul(&self.f0));
        g.scale_real(2.0).sub(&self.nu).re()
    }

    fn residual_values(&self, u: &ScalarField, samples: &[C64], darboux: bool) -> Result<Vec<(f64, f64, f64)>> {
        let potential = if darboux { self.darboux_potential() } else { self.nu.clone() };
        samples
            .iter()
            .map(|&z| {
                let lap = self.stencil.laplacian(u, z)?.re;
                let uz = u.value(z).re;
                Ok((lap, potential.value(z).re * uz, uz))
            })
            .collect()
    }

    fn relative_residual(&self, u: &ScalarField, samples: &[C64], darboux: bool) -> Result<f64> {
        let length = self.domain().length_scale();
        let values = self.residual_values(u, samples, darboux)?;
        let worst = values.iter().map(|(l, p, _)| (l - p).abs()).fold(0.0, f64::max);
        let scale = values.iter().map(|(l, p, u)| l.abs().max(p.abs()).max(u.abs() / (length * length))).fold(0.0, f64::max);
        Ok(if scale > 0.0 { worst / scale } else { worst })
    }

    /// `sup |Laplacian u - nu u|` over `samples`.
    pub fn residual_schrodinger(&self, u: &ScalarField, samples: &[C64]) -> Result<f64> {
        let values = self.residual_values(u, samples, false)?;
        Ok(values.iter().map(|(l, p, _)| (l - p).abs()).fold(0.0, f64::max))
    }

    /// `sup |Laplacian v + nu v - 2 (|grad f0| / f0)^2 v|` over `samples`.
    pub fn residual_darboux(&self, v: &ScalarField, samples: &[C64]) -> Result<f64> {
        let values = self.residual_values(v, samples, true)?;
        Ok(values.iter().map(|(l, p, _)| (l - p).abs()).fold(0.0, f64::max))
    }

    /// Residuals of `b conj(b) + b_z = nu` and `b conj(b) - b_z = 2(|grad f0|/f0)^2 - nu`,
    /// `b = f0_zbar / f0`.
    pub fn bauer_residuals(&self, samples: &[C64]) -> (f64, f64) {
        let b = self.f0.dzbar_field(&self.stencil).div(&self.f0);
        let bz = b.dz_field(&self.stencil);
        let nd = self.darboux_potential();
        let mut worst = (0.0f64, 0.0f64);
        for &z in samples {
            let bb = b.value(z).norm_sqr();
            let d = bz.value(z);
            worst.0 = worst.0.max((bb + d - self.nu.value(z)).norm());
            worst.1 = worst.1.max((bb - d - nd.value(z)).norm());
        }
        worst
    }

    /// `v = f0^-1 Abar(i f0^2 dzbar(u / f0))`, normalized so that `v(z0) = 0`.
    /// `u + i v` then solves the main Vekua equation.
    pub fn darboux_v(&self, u: &ScalarField, quad: &Quadrature) -> Result<ScalarField> {
        let residual = self.relative_residual(u, &self.verification_samples(VERIFICATION_SAMPLES), false)?;
        if residual > SOLUTION_TOLERANCE || residual.is_nan() {
            return Err(Error::NotASolution { residual, tolerance: SOLUTION_TOLERANCE });
        }
        self.darboux_v_unchecked(u, quad)
    }

    pub(crate) fn darboux_v_unchecked(&self, u: &ScalarField, quad: &Quadrature) -> Result<ScalarField> {
        let f0 = &self.f0;
        let phi = f0.mul(f0).mul(&u.div(f0).dzbar_field(&self.stencil)).scale(I);
        let a = antigradient_field(&phi, Antigradient::Abar, self.z0, quad)?;
        Ok(a.div(f0).as_real())
    }

    /// `u = -f0 Abar(i f0^-2 dzbar(f0 v))`, normalized so that `u(z0) = 0`.
    pub fn darboux_u(&self, v: &ScalarField, quad: &Quadrature) -> Result<ScalarField> {
        let residual = self.relative_residual(v, &self.verification_samples(VERIFICATION_SAMPLES), true)?;
        if residual > SOLUTION_TOLERANCE || residual.is_nan() {
            return Err(Error::NotASolution { residual, tolerance: SOLUTION_TOLERANCE });
        }
        let f0 = &self.f0;
        let phi = f0.mul(v).dzbar_field(&self.stencil).div(&f0.mul(f0)).scale(I);
        let a = antigradient_field(&phi, Antigradient::Abar, self.z0, quad)?;
        Ok(f0.mul(&a).scale_real(-1.0).as_real())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionSOptions {
    pub samples: usize,
    pub bins: usize,
    /// Overrides the default threshold (1e-6 for closed-form `rho`, 1e-3 for sampled).
    pub tolerance: Option<f64>,
    /// Base point where `S` vanishes; the domain centre when absent.
    pub z0: Option<C64>,
}

impl Default for ConditionSOptions {
    fn default() -> Self {
        ConditionSOptions { samples: 2400, bins: 24, tolerance: None, z0: None }
    }
}

/// Outcome of the Condition S test for `rho`.
#[derive(Clone, Debug)]
pub struct ConditionSReport {
    pub verdict: bool,
    pub harmonic: bool,
    /// Largest within-bin deviation of `q = Laplacian(rho)/|grad rho|^2` from a
    /// smooth function of `rho`, relative to `max(max |q|, 1/L)`.
    pub residual: f64,
    pub tolerance: f64,
    pub samples: usize,
    pub rho_range: (f64, f64),
    pub rho0: f64,
    /// Sorted `(rho, s)` knots.
    pub s_table: Vec<(f64, f64)>,
    /// `(rho, S)` with `S(rho0) = 0`.
    pub big_s_table: Vec<(f64, f64)>,
    rho: ScalarField,
    multiplier: Option<ScalarField>,
}

/// Serializable view of a report (tables thinned to at most 200 rows).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConditionSSummary {
    pub verdict: bool,
    pub harmonic: bool,
    pub residual: f64,
    pub tolerance: f64,
    pub samples: usize,
    pub rho_range: (f64, f64),
    pub rho0: f64,
    pub table: Vec<[f64; 3]>,
}

impl ConditionSReport {
    pub fn rho(&self) -> &ScalarField {
        &self.rho
    }

    /// `phi = i exp(-S(rho)) rho_z`, present when the verdict is true.
    pub fn multiplier(&self) -> Option<&ScalarField> {
        self.multiplier.as_ref()
    }

    /// Piecewise-linear `s(rho)`, constant beyond the sampled range.
    pub fn s(&self, r: f64) -> f64 {
        if self.harmonic {
            return 0.0;
        }
        interp_linear(&self.s_table, r)
    }

    /// `S(rho)`, cubic Hermite between knots using `s` as slopes.
    pub fn big_s(&self, r: f64) -> f64 {
        if self.harmonic {
            return 0.0;
        }
        hermite(&self.big_s_table, &self.s_table, r)
    }

    pub fn summary(&self) -> ConditionSSummary {
        let n = self.s_table.len();
        let step = n.div_ceil(200).max(1);
        let table = (0..n).step_by(step).map(|k| [self.s_table[k].0, self.s_table[k].1, self.big_s_table[k].1]).collect();
        ConditionSSummary {
            verdict: self.verdict,
            harmonic: self.harmonic,
            residual: self.residual,
            tolerance: self.tolerance,
            samples: self.samples,
            rho_range: self.rho_range,
            rho0: self.rho0,
            table,
        }
    }
}

fn bracket(table: &[(f64, f64)], r: f64) -> Option<usize> {
    if table.len() < 2 {
        return None;
    }
    let k = table.partition_point(|p| p.0 <= r);
    Some(k.clamp(1, table.len() - 1) - 1)
}

fn interp_linear(table: &[(f64, f64)], r: f64) -> f64 {
    match bracket(table, r) {
        None => table.first().map_or(0.0, |p| p.1),
        Some(_) if r <= table[0].0 => table[0].1,
        Some(_) if r >= table[table.len() - 1].0 => table[table.len() - 1].1,
        Some(k) => {
            let (r0, v0) = table[k];
            let (r1, v1) = table[k + 1];
            v0 + (v1 - v0) * (r - r0) / (r1 - r0)
        }
    }
}

fn hermite(values: &[(f64, f64)], slopes: &[(f64, f64)], r: f64) -> f64 {
    let n = values.len();
    match bracket(values, r) {
        None => values.first().map_or(0.0, |p| p.1),
        Some(_) if r <= values[0].0 => values[0].1 + slopes[0].1 * (r - values[0].0),
        Some(_) if r >= values[n - 1].0 => values[n - 1].1 + slopes[n - 1].1 * (r - values[n - 1].0),
        Some(k) => {
            let (r0, v0) = values[k];
            let (r1, v1) = values[k + 1];
            let (m0, m1) = (slopes[k].1, slopes[k + 1].1);
            let h = r1 - r0;
            let t = (r - r0) / h;
            let (t2, t3) = (t * t, t * t * t);
            (2.0 * t3 - 3.0 * t2 + 1.0) * v0 + (t3 - 2.0 * t2 + t) * h * m0 + (-2.0 * t3 + 3.0 * t2) * v1 + (t3 - t2) * h * m1
        }
    }
}

/// Tests whether `Laplacian(rho) / |grad rho|^2` is a function of `rho` alone.
///
/// `q` is sampled at quasi-random interior points, the samples are binned by
/// `rho`, and within each bin `q` is fitted by a polynomial in `rho`; the
/// verdict compares the worst fit deviation with the tolerance. On success
/// `s` is tabulated at the samples and `S = int s drho` is accumulated by the
/// trapezoid rule.
pub fn check_condition_s(rho: &ScalarField, options: &ConditionSOptions) -> Result<ConditionSReport> {
    let domain = *rho.domain();
    let needed = 4 * options.bins.max(1);
    if options.samples < needed {
        return Err(Error::InsufficientSamples { got: options.samples, needed });
    }
    let stencil = Stencil::for_domain(&domain);
    let length = domain.length_scale();
    let points = domain.interior_samples(options.samples);

    let mut data: Vec<(f64, f64, C64)> = Vec::with_capacity(points.len());
    let mut grads = Vec::with_capacity(points.len());
    for &z in &points {
        let rz = stencil.dz(rho, z)?;
        grads.push(rz.norm());
        data.push((rho.value(z).re, stencil.laplacian(rho, z)?.re / rz.norm_sqr(), z));
    }
    let mut sorted_grads = grads.clone();
    sorted_grads.sort_by(|a, b| a.total_cmp(b));
    let median = sorted_grads[sorted_grads.len() / 2];
    for (k, &g) in grads.iter().enumerate() {
        if !(g > 1e-8 * median) {
            return Err(Error::GradientVanishes { z: data[k].2, norm: g });
        }
    }

    let tolerance = options.tolerance.unwrap_or(if rho.is_sampled() { 1e-3 } else { 1e-6 });
    let qmax = data.iter().map(|d| d.1.abs()).fold(0.0, f64::max);
    let scale = qmax.max(1.0 / length);
    let harmonic = qmax * length <= tolerance;

    data.sort_by(|a, b| a.0.total_cmp(&b.0));
    let (rmin, rmax) = (data[0].0, data[data.len() - 1].0);
    let z0 = options.z0.unwrap_or(domain.center());
    let rho0 = rho.value(z0).re;

    let residual = if harmonic { qmax / scale } else { binned_fit_residual(&data, rmin, rmax, options.bins, scale)? };
    let verdict = residual <= tolerance;

    let mut report = ConditionSReport {
        verdict,
        harmonic: harmonic && verdict,
        residual,
        tolerance,
        samples: points.len(),
        rho_range: (rmin, rmax),
        rho0,
        s_table: Vec::new(),
        big_s_table: Vec::new(),
        rho: rho.clone(),
        multiplier: None,
    };
    if !verdict {
        return Ok(report);
    }

    let mut table: Vec<(f64, f64)> = Vec::with_capacity(data.len());
    for &(r, q, _) in &data {
        match table.last_mut() {
            Some(last) if r - last.0 <= 1e-14 * (rmax - rmin) => last.1 = 0.5 * (last.1 + q),
            _ => table.push((r, if report.harmonic { 0.0 } else { q })),
        }
    }
    let mut big = Vec::with_capacity(table.len());
    let mut acc = 0.0;
    big.push((table[0].0, 0.0));
    for w in table.windows(2) {
        acc += 0.5 * (w[0].1 + w[1].1) * (w[1].0 - w[0].0);
        big.push((w[1].0, acc));
    }
    report.s_table = table;
    report.big_s_table = big;
    let shift = report.big_s(rho0);
    for p in &mut report.big_s_table {
        p.1 -= shift;
    }

    let rho_z = rho.dz_field(&stencil);
    report.multiplier = Some(if report.harmonic {
        rho_z.scale(I)
    } else {
        let r2 = report.clone();
        let rho = rho.clone();
        ScalarField::from_fn(domain, Codomain::Complex, move |z| I * (-r2.big_s(rho.value(z).re)).exp() * rho_z.value(z))
    });
    Ok(report)
}

fn binned_fit_residual(data: &[(f64, f64, C64)], rmin: f64, rmax: f64, bins: usize, scale: f64) -> Result<f64> {
    let width = (rmax - rmin) / bins as f64;
    let mut worst: f64 = 0.0;
    let mut fitted = 0;
    let mut start = 0;
    for k in 0..bins {
        let hi = if k + 1 == bins { f64::INFINITY } else { rmin + width * (k + 1) as f64 };
        let end = start + data[start..].partition_point(|d| d.0 < hi);
        let bin = &data[start..end];
        start = end;
        if bin.len() < 4 {
            continue;
        }
        let degree = 6.min(bin.len() / 2 - 1);
        let (lo, up) = (bin[0].0, bin[bin.len() - 1].0);
        let mid = 0.5 * (lo + up);
        let half = (0.5 * (up - lo)).max(f64::MIN_POSITIVE);
        let cols = degree + 1;
        let mut a = Vec::with_capacity(bin.len() * cols);
        for d in bin {
            let t = (d.0 - mid) / half;
            let mut p = 1.0;
            for _ in 0..cols {
                a.push(p);
                p *= t;
            }
        }
        let b: Vec<f64> = bin.iter().map(|d| d.1).collect();
        let fit = lsq::solve(&a, bin.len(), cols, &b, 1e-12);
        for (i, d) in bin.iter().enumerate() {
            let model: f64 = (0..cols).map(|j| a[i * cols + j] * fit.coefficients[j]).sum();
            worst = worst.max((d.1 - model).abs() / scale);
        }
        fitted += 1;
    }
    if fitted == 0 {
        return Err(Error::InsufficientSamples { got: data.len(), needed: 4 * bins });
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn real(src: &str, d: Domain) -> ScalarField {
        Expr::parse(src).unwrap().field(d, Codomain::Real)
    }

    #[test]
    fn registry_problems_validate() {
        for name in ["example1", "example2", "harmonic"] {
            let p = SchrodingerProblem::registry(name, &HashMap::new()).unwrap();
            assert_eq!(p.name, name);
        }
        assert!(SchrodingerProblem::registry("nope", &HashMap::new()).is_err());
        assert!(SchrodingerProblem::example2(0.5, 2.0).is_err());
    }

    #[test]
    fn wrong_particular_solution_is_rejected() {
        let d = Domain::unit_disc();
        let r = SchrodingerProblem::new("bad", real("1", d), real("(y+1)^3", d), None, c(0.0, 0.0));
        assert!(matches!(r, Err(Error::NotASolution { .. })));
        let r = SchrodingerProblem::new("zero", real("0", d), real("x", d), None, c(0.0, 0.0));
        assert!(matches!(r, Err(Error::VanishingSolution { .. })));
    }

    #[test]
    fn schrodinger_residuals_example_one() {
        let p = SchrodingerProblem::example1();
        let s = p.verification_samples(200);
        assert!(p.residual_schrodinger(&p.f0, &s).unwrap() < 1e-12);
        assert!(p.residual_schrodinger(&real("(y+1)^(-2)", *p.domain()), &s).unwrap() < 1e-12);
        let perturbed = real("(y+1)^(-2) + 0.01*x", *p.domain());
        let r = p.residual_schrodinger(&perturbed, &s).unwrap();
        let oracle = s.iter().map(|z| (0.06 * z.re / (z.im + 1.0).powi(2)).abs()).fold(0.0, f64::max);
        assert!((r - oracle).abs() < 1e-12 * oracle.max(1.0));
    }

    #[test]
    fn darboux_residuals_example_one() {
        let p = SchrodingerProblem::example1();
        let s = p.verification_samples(200);
        assert!(p.residual_darboux(&p.f0.recip(), &s).unwrap() < 1e-11);
        assert!(p.residual_darboux(&real("5*x*(y+1)^(-3)", *p.domain()), &s).unwrap() < 1e-11);
    }

    #[test]
    fn bauer_identities_hold() {
        for p in [SchrodingerProblem::example1(), SchrodingerProblem::example2(2.0, 3.0).unwrap()] {
            let (r1, r2) = p.bauer_residuals(&p.verification_samples(200));
            assert!(r1 < 1e-12 && r2 < 1e-12, "{}: {r1} {r2}", p.name);
        }
    }

    #[test]
    fn darboux_v_example_one() {
        let p = SchrodingerProblem::example1();
        let q = Quadrature::default();
        let v = p.darboux_v(&real("(y+1)^(-2)", *p.domain()), &q).unwrap();
        for z in [c(0.3, 0.4), c(-0.5, -0.2)] {
            assert!((v.value(z).re - 5.0 * z.re * (z.im + 1.0).powi(-3)).abs() < 1e-12);
        }
        let v0 = p.darboux_v(&p.f0, &q).unwrap();
        assert!(v0.value(c(0.2, 0.3)).re.abs() < 1e-13);
    }

    #[test]
    fn conjugate_harmonic_pair() {
        let p = SchrodingerProblem::harmonic();
        let q = Quadrature::default();
        let d = *p.domain();
        let v = p.darboux_v(&real("x^2 - y^2", d), &q).unwrap();
        let u = p.darboux_u(&real("2*x*y", d), &q).unwrap();
        for z in [c(0.3, 0.4), c(-0.5, 0.6)] {
            assert!((v.value(z).re - 2.0 * z.re * z.im).abs() < 1e-13);
            assert!((u.value(z).re - (z.re * z.re - z.im * z.im)).abs() < 1e-13);
        }
    }

    #[test]
    fn darboux_u_rejects_non_solutions() {
        let p = SchrodingerProblem::example1();
        let r = p.darboux_u(&real("x*y", *p.domain()), &Quadrature::default());
        assert!(matches!(r, Err(Error::NotASolution { .. })));
    }

    #[test]
    fn harmonic_rho_gives_constant_multiplier() {
        let d = Domain::unit_disc();
        let report = check_condition_s(&real("x", d), &ConditionSOptions::default()).unwrap();
        assert!(report.verdict && report.harmonic);
        let phi = report.multiplier().unwrap();
        assert_eq!(phi.value(c(0.3, 0.1)), I);
        assert_eq!(report.s(0.3), 0.0);
    }

    #[test]
    fn polar_rho_fits_reciprocal() {
        let d = Domain::disc(c(2.0, 0.0), 1.0).unwrap();
        let report = check_condition_s(&real("sqrt(x^2 + y^2)", d), &ConditionSOptions::default()).unwrap();
        assert!(report.verdict, "residual {}", report.residual);
        for r in [1.5, 2.0, 2.5] {
            assert!((report.s(r) * r - 1.0).abs() < 1e-4);
        }
        // S = log(rho / rho0)
        assert!((report.big_s(2.5) - (2.5f64 / 2.0).ln()).abs() < 1e-6);
    }

    #[test]
    fn counterexample_is_rejected() {
        let d = Domain::unit_disc();
        let report = check_condition_s(&real("x^2 + y", d), &ConditionSOptions::default()).unwrap();
        assert!(!report.verdict);
        assert!(report.multiplier().is_none());
    }

    #[test]
    fn vanishing_gradient_is_reported() {
        let d = Domain::unit_disc();
        let r = check_condition_s(&real("x^2 + y^2", d), &ConditionSOptions::default());
        // |grad| -> 0 only at the origin, which the Halton set avoids; the
        // constant field has no gradient anywhere
        assert!(r.is_ok());
        let r = check_condition_s(&real("1 + 0*x", d), &ConditionSOptions::default());
        assert!(matches!(r, Err(Error::GradientVanishes { .. })));
        let r = check_condition_s(&real("x", d), &ConditionSOptions { samples: 10, ..Default::default() });
        assert!(matches!(r, Err(Error::InsufficientSamples { .. })));
    }
}
