//! Polyline paths, adaptive Gauss-Legendre line integrals and the
//! antigradients `A` and `Abar`.
//!
//! `A[Phi](z) = Re int_{z0}^{z} Phi dzeta` recovers a real `phi` with
//! `dz phi = Phi`; `Abar[Phi](z) = Re int conj(Phi) dzeta` recovers `phi`
//! with `dzbar phi = Phi`. Both vanish at `z0`.

use std::collections::HashMap;
use std::num::NonZeroUsize;
use std::sync::{Arc, Mutex, OnceLock};

use gauss_quad::GaussLegendre;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{disc_samples, Codomain, Domain, FieldFn, ScalarField, Stencil, C64};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Quadrature {
    pub nodes: usize,
    pub tolerance: f64,
    pub max_depth: usize,
}

impl Default for Quadrature {
    fn default() -> Self {
        Quadrature { nodes: 32, tolerance: 1e-10, max_depth: 12 }
    }
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`, nodes ascending.
#[derive(Debug)]
pub struct GaussRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    cumulative: OnceLock<Vec<f64>>,
}

impl GaussRule {
    fn build(n: usize) -> Self {
        let gl = GaussLegendre::new(NonZeroUsize::new(n).expect("positive node count"));
        let mut pairs: Vec<(f64, f64)> = gl.nodes().copied().zip(gl.weights().copied()).collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        GaussRule { nodes: pairs.iter().map(|p| p.0).collect(), weights: pairs.iter().map(|p| p.1).collect(), cumulative: OnceLock::new() }
    }

    /// Shared rule with `n` nodes.
    pub fn get(n: usize) -> Arc<GaussRule> {
        static CACHE: OnceLock<Mutex<HashMap<usize, Arc<GaussRule>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        let mut map = cache.lock().expect("quadrature cache poisoned");
        map.entry(n).or_insert_with(|| Arc::new(GaussRule::build(n))).clone()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Row-major `n x n` matrix `S` with `int_{-1}^{x_i} p = sum_j S_ij p(x_j)`,
    /// exact for polynomials of degree below `n`.
    pub fn cumulative(&self) -> &[f64] {
        self.cumulative.get_or_init(|| {
            let n = self.len();
            let p_at_nodes: Vec<Vec<f64>> = self.nodes.iter().map(|&x| legendre_table(x, n)).collect();
            let mut s = vec![0.0; n * n];
            for i in 0..n {
                let p = &p_at_nodes[i];
                let xi = self.nodes[i];
                // Q_k(x) = int_{-1}^x P_k
                let q: Vec<f64> = (0..n)
                    .map(|k| if k == 0 { xi + 1.0 } else { (p[k + 1] - p[k - 1]) / (2 * k + 1) as f64 })
                    .collect();
                for j in 0..n {
                    let pj = &p_at_nodes[j];
                    let sum: f64 = (0..n).map(|k| (k as f64 + 0.5) * pj[k] * q[k]).sum();
                    s[i * n + j] = self.weights[j] * sum;
                }
            }
            s
        })
    }
}

/// `P_0(x) .. P_n(x)`.
fn legendre_table(x: f64, n: usize) -> Vec<f64> {
    let mut p = vec![0.0; n + 1];
    p[0] = 1.0;
    if n >= 1 {
        p[1] = x;
    }
    for k in 1..n {
        p[k + 1] = ((2 * k + 1) as f64 * x * p[k] - k as f64 * p[k - 1]) / (k + 1) as f64;
    }
    p
}

#[derive(Clone, Debug, PartialEq)]
pub struct Polyline {
    vertices: Vec<C64>,
}

impl Polyline {
    /// Consecutive duplicate vertices are dropped.
    pub fn new(vertices: Vec<C64>) -> Result<Self> {
        if vertices.is_empty() {
            return Err(Error::invalid("a polyline needs at least one vertex"));
        }
        let mut v: Vec<C64> = Vec::with_capacity(vertices.len());
        for p in vertices {
            if !(p.re.is_finite() && p.im.is_finite()) {
                return Err(Error::invalid(format!("non-finite vertex {p}")));
            }
            if v.last() != Some(&p) {
                v.push(p);
            }
        }
        Ok(Polyline { vertices: v })
    }

    pub fn straight(from: C64, to: C64) -> Self {
        Polyline::new(vec![from, to]).expect("finite endpoints")
    }

    /// Axis-aligned path: vertical leg at `Re z0`, then horizontal leg at `Im z`.
    pub fn l_path(z0: C64, z: C64) -> Self {
        Polyline::new(vec![z0, C64::new(z0.re, z.im), z]).expect("finite endpoints")
    }

    /// The L-path when it stays inside `domain`, else a two-leg path through
    /// the centre. Both domain shapes are convex, so checking vertices suffices.
    pub fn in_domain(domain: &Domain, z0: C64, z: C64) -> Result<Self> {
        for p in [z0, z] {
            if !domain.contains(p) {
                return Err(Error::PathOutOfDomain { z: p });
            }
        }
        let corner = C64::new(z0.re, z.im);
        if domain.contains(corner) {
            Ok(Polyline::l_path(z0, z))
        } else {
            Polyline::new(vec![z0, domain.center(), z])
        }
    }

    pub fn vertices(&self) -> &[C64] {
        &self.vertices
    }

    pub fn start(&self) -> C64 {
        self.vertices[0]
    }

    pub fn end(&self) -> C64 {
        self.vertices[self.vertices.len() - 1]
    }

    pub fn length(&self) -> f64 {
        self.segments().map(|(a, b)| (b - a).norm()).sum()
    }

    pub fn segments(&self) -> impl Iterator<Item = (C64, C64)> + '_ {
        self.vertices.windows(2).map(|w| (w[0], w[1]))
    }

    pub fn check(&self, domain: &Domain) -> Result<()> {
        match self.vertices.iter().find(|p| !domain.contains(**p)) {
            Some(&z) => Err(Error::PathOutOfDomain { z }),
            None => Ok(()),
        }
    }
}

impl Quadrature {
    fn rule(&self) -> Arc<GaussRule> {
        GaussRule::get(self.nodes.max(1))
    }

    fn fixed(rule: &GaussRule, f: &dyn Fn(C64) -> C64, a: C64, b: C64) -> C64 {
        let half = (b - a) * 0.5;
        let mid = (a + b) * 0.5;
        let mut acc = C64::new(0.0, 0.0);
        for (x, w) in rule.nodes.iter().zip(&rule.weights) {
            acc += *w * f(mid + half * *x);
        }
        acc * half
    }

    fn adapt(&self, rule: &GaussRule, f: &dyn Fn(C64) -> C64, a: C64, b: C64, whole: C64, depth: usize) -> Result<C64> {
        let m = (a + b) * 0.5;
        let left = Self::fixed(rule, f, a, m);
        let right = Self::fixed(rule, f, m, b);
        let refined = left + right;
        let difference = (refined - whole).norm();
        if !difference.is_finite() {
            return Err(Error::NoConvergence { depth, difference });
        }
        if difference <= self.tolerance * (1.0 + refined.norm()) {
            return Ok(refined);
        }
        if depth >= self.max_depth {
            return Err(Error::NoConvergence { depth, difference });
        }
        Ok(self.adapt(rule, f, a, m, left, depth + 1)? + self.adapt(rule, f, m, b, right, depth + 1)?)
    }

    /// `int_a^b f(zeta) dzeta` along a straight segment.
    pub fn segment(&self, f: &dyn Fn(C64) -> C64, a: C64, b: C64) -> Result<C64> {
        if a == b {
            return Ok(C64::new(0.0, 0.0));
        }
        let rule = self.rule();
        let whole = Self::fixed(&rule, f, a, b);
        self.adapt(&rule, f, a, b, whole, 0)
    }

    /// Unchecked `int_path f(zeta) dzeta`.
    pub fn path(&self, f: &dyn Fn(C64) -> C64, path: &Polyline) -> Result<C64> {
        path.segments().try_fold(C64::new(0.0, 0.0), |acc, (a, b)| Ok(acc + self.segment(f, a, b)?))
    }
}

/// `int_path f(zeta) dzeta` with the path checked against the field's domain.
pub fn line_integral(f: &ScalarField, path: &Polyline, quad: &Quadrature) -> Result<C64> {
    path.check(f.domain())?;
    quad.path(&|z| f.value(z), path)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Antigradient {
    /// Inverts `dz` on real functions.
    A,
    /// Inverts `dzbar` on real functions.
    Abar,
}

fn integrand(kind: Antigradient, v: C64) -> C64 {
    match kind {
        Antigradient::A => v,
        Antigradient::Abar => v.conj(),
    }
}

/// Sampled compatibility residual, relative to the size of `Phi` and its
/// derivatives.
///
/// For `A` this is `d_y Phi1 + d_x Phi2 = Im(dzbar Phi)`, for `Abar`
/// `d_y Phi1 - d_x Phi2 = -Im(dz Phi)`.
pub fn compatibility_residual(phi: &ScalarField, kind: Antigradient, samples: &[C64], stencil: &Stencil) -> Result<f64> {
    let mut worst: f64 = 0.0;
    let mut scale: f64 = 0.0;
    let length = phi.domain().length_scale();
    for &z in samples {
        let d = match kind {
            Antigradient::A => stencil.dzbar(phi, z)?,
            Antigradient::Abar => stencil.dz(phi, z)?,
        };
        worst = worst.max(d.im.abs());
        scale = scale.max(d.norm()).max(phi.value(z).norm() / length);
    }
    // Fields that vanish to rounding level have no meaningful relative scale.
    let floor = f64::EPSILON.sqrt() / length;
    Ok(worst / scale.max(floor))
}

pub const COMPATIBILITY_SAMPLES: usize = 200;
pub const COMPATIBILITY_TOLERANCE: f64 = 1e-5;
/// Compatibility is sampled on the concentric disc of this fraction of the
/// inradius: integrands built from nested finite differences lose accuracy
/// where coefficients blow up at the boundary.
pub const COMPATIBILITY_CORE: f64 = 0.8;

fn checked(phi: &ScalarField, kind: Antigradient) -> Result<()> {
    let d = phi.domain();
    let samples = disc_samples(d.center(), COMPATIBILITY_CORE * d.inradius(), COMPATIBILITY_SAMPLES);
    let stencil = Stencil::for_domain(phi.domain());
    let residual = compatibility_residual(phi, kind, &samples, &stencil)?;
    if residual > COMPATIBILITY_TOLERANCE {
        return Err(Error::CompatibilityViolated { residual, tolerance: COMPATIBILITY_TOLERANCE });
    }
    Ok(())
}

fn antigradient_at(phi: &ScalarField, kind: Antigradient, z0: C64, z: C64, quad: &Quadrature) -> Result<f64> {
    let path = Polyline::in_domain(phi.domain(), z0, z)?;
    Ok(quad.path(&|p| integrand(kind, phi.value(p)), &path)?.re)
}

/// `A[Phi](z)` with `A[Phi](z0) = 0`; compatibility is sampled first.
pub fn antigrad_a(phi: &ScalarField, z0: C64, z: C64, quad: &Quadrature) -> Result<f64> {
    checked(phi, Antigradient::A)?;
    antigradient_at(phi, Antigradient::A, z0, z, quad)
}

/// `Abar[Phi](z)` with `Abar[Phi](z0) = 0`; compatibility is sampled first.
pub fn antigrad_abar(phi: &ScalarField, z0: C64, z: C64, quad: &Quadrature) -> Result<f64> {
    checked(phi, Antigradient::Abar)?;
    antigradient_at(phi, Antigradient::Abar, z0, z, quad)
}

/// Antigradient as a lazily evaluated real field (values by quadrature,
/// derivatives by finite differences). Points where quadrature fails
/// evaluate to NaN.
pub fn antigradient_field(phi: &ScalarField, kind: Antigradient, z0: C64, quad: &Quadrature) -> Result<ScalarField> {
    if !phi.domain().contains(z0) {
        return Err(Error::OutOfDomain { z: z0 });
    }
    checked(phi, kind)?;
    Ok(unchecked_antigradient_field(phi, kind, z0, quad))
}

pub(crate) fn unchecked_antigradient_field(phi: &ScalarField, kind: Antigradient, z0: C64, quad: &Quadrature) -> ScalarField {
    let inner = AntigradientField { phi: phi.clone(), kind, z0, quad: *quad };
    ScalarField::new(*phi.domain(), Codomain::Real, inner)
}

struct AntigradientField {
    phi: ScalarField,
    kind: Antigradient,
    z0: C64,
    quad: Quadrature,
}

impl FieldFn for AntigradientField {
    fn value(&self, z: C64) -> C64 {
        match antigradient_at(&self.phi, self.kind, self.z0, z, &self.quad) {
            Ok(v) => C64::new(v, 0.0),
            Err(_) => C64::new(f64::NAN, 0.0),
        }
    }

    fn fd_depth(&self) -> u32 {
        self.phi.fd_depth()
    }

    fn sampled(&self) -> bool {
        self.phi.is_sampled()
    }
}

/// Largest disagreement between the default path and the given alternatives.
pub fn path_discrepancy(f: &ScalarField, z0: C64, z: C64, alternatives: &[Polyline], quad: &Quadrature) -> Result<f64> {
    let reference = line_integral(f, &Polyline::in_domain(f.domain(), z0, z)?, quad)?;
    let mut worst: f64 = 0.0;
    for p in alternatives {
        if p.start() != z0 || p.end() != z {
            return Err(Error::invalid("alternative path has different endpoints"));
        }
        worst = worst.max((line_integral(f, p, quad)? - reference).norm());
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::Expr;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn disc2() -> Domain {
        Domain::disc(c(0.0, 0.0), 2.0).unwrap()
    }

    #[test]
    fn rule_integrates_high_degree_polynomials() {
        let q = Quadrature::default();
        let rule = GaussRule::get(q.nodes);
        let v: f64 = rule.nodes.iter().zip(&rule.weights).map(|(x, w)| w * x.powi(62)).sum();
        assert!((v - 2.0 / 63.0).abs() < 1e-14);
    }

    #[test]
    fn cumulative_matrix_is_exact_for_low_degree() {
        let rule = GaussRule::get(12);
        let s = rule.cumulative();
        let n = rule.len();
        for i in 0..n {
            let xi = rule.nodes[i];
            let approx: f64 = (0..n).map(|j| s[i * n + j] * (3.0 * rule.nodes[j].powi(2) + 1.0)).sum();
            let exact = xi.powi(3) + xi + 2.0;
            assert!((approx - exact).abs() < 1e-13, "{approx} vs {exact}");
        }
    }

    #[test]
    fn constant_integrand() {
        let d = disc2();
        let one = ScalarField::real_constant(d, 1.0);
        let p = Polyline::new(vec![c(0.0, 0.0), c(1.0, 1.0), c(1.0, 1.0)]).unwrap();
        assert_eq!(p.vertices().len(), 2);
        let v = line_integral(&one, &p, &Quadrature::default()).unwrap();
        assert!((v - c(1.0, 1.0)).norm() < 1e-15);
    }

    #[test]
    fn shifted_identity_real_part() {
        let (alpha, beta) = (2.0, 3.0);
        let d = disc2();
        let f = ScalarField::from_fn(d, Codomain::Complex, move |z| z + c(alpha, beta));
        let z = c(0.4, -0.7);
        let v = line_integral(&f, &Polyline::l_path(c(0.0, 0.0), z), &Quadrature::default()).unwrap();
        let expected = (z.re * z.re - z.im * z.im) / 2.0 + alpha * z.re - beta * z.im;
        assert!((v.re - expected).abs() < 1e-14);
    }

    #[test]
    fn analytic_integrand_is_path_independent() {
        let d = disc2();
        let f = ScalarField::from_fn(d, Codomain::Complex, |z| z * z);
        let q = Quadrature::default();
        let end = c(1.0, 1.0);
        let exact = end * end * end / 3.0;
        for p in [Polyline::l_path(c(0.0, 0.0), end), Polyline::straight(c(0.0, 0.0), end)] {
            assert!((line_integral(&f, &p, &q).unwrap() - exact).norm() < 1e-14);
        }
    }

    #[test]
    fn path_outside_domain_is_rejected() {
        let d = Domain::unit_disc();
        let f = ScalarField::real_constant(d, 1.0);
        let p = Polyline::straight(c(0.0, 0.0), c(2.0, 0.0));
        assert!(matches!(line_integral(&f, &p, &Quadrature::default()), Err(Error::PathOutOfDomain { .. })));
    }

    #[test]
    fn disc_falls_back_through_centre() {
        let d = Domain::unit_disc();
        let p = Polyline::in_domain(&d, c(0.9, 0.0), c(0.0, 0.9)).unwrap();
        assert_eq!(p.vertices(), &[c(0.9, 0.0), c(0.0, 0.0), c(0.0, 0.9)]);
        let p = Polyline::in_domain(&d, c(0.0, 0.0), c(0.5, 0.5)).unwrap();
        assert_eq!(p.vertices(), &[c(0.0, 0.0), c(0.0, 0.5), c(0.5, 0.5)]);
    }

    #[test]
    fn nonintegrable_singularity_fails_to_converge() {
        let q = Quadrature { max_depth: 4, ..Quadrature::default() };
        let r = q.segment(&|z: C64| 1.0 / z.sqrt(), c(0.0, 0.0), c(1.0, 0.0));
        assert!(matches!(r, Err(Error::NoConvergence { .. })));
    }

    #[test]
    fn antigradient_of_one_is_x() {
        let d = disc2();
        let one = ScalarField::real_constant(d, 1.0);
        let v = antigrad_a(&one, c(0.0, 0.0), c(0.3, -1.1), &Quadrature::default()).unwrap();
        assert!((v - 0.3).abs() < 1e-15);
    }

    #[test]
    fn antigradient_round_trip_xy() {
        let d = disc2();
        let f = Expr::parse("x*y").unwrap().field(d, Codomain::Real);
        let st = Stencil::for_domain(&d);
        let q = Quadrature::default();
        let z = c(0.7, 0.6);
        let a = antigrad_a(&f.dz_field(&st), c(0.0, 0.0), z, &q).unwrap();
        let abar = antigrad_abar(&f.dzbar_field(&st), c(0.0, 0.0), z, &q).unwrap();
        assert!((a - 0.42).abs() < 1e-14);
        assert!((abar - 0.42).abs() < 1e-14);
    }

    #[test]
    fn incompatible_field_is_rejected() {
        let d = disc2();
        // dz of a real function must have a real dzbar; i*x does not.
        let phi = Expr::parse("i*x").unwrap().field(d, Codomain::Complex);
        let r = antigrad_a(&phi, c(0.0, 0.0), c(0.5, 0.5), &Quadrature::default());
        assert!(matches!(r, Err(Error::CompatibilityViolated { .. })));
    }

    #[test]
    fn darboux_integrand_of_first_example() {
        // Abar(i f0^2 dzbar(u/f0)) = 5x for u = (y+1)^-2, f0 = (y+1)^3
        let d = Domain::unit_disc();
        let f0 = Expr::parse("(y+1)^3").unwrap().field(d, Codomain::Real);
        let u = Expr::parse("(y+1)^(-2)").unwrap().field(d, Codomain::Real);
        let st = Stencil::for_domain(&d);
        let phi = (&f0 * &f0).mul(&(&u / &f0).dzbar_field(&st)).scale(C64::new(0.0, 1.0));
        let z = c(0.3, -0.4);
        let v = antigrad_abar(&phi, c(0.0, 0.0), z, &Quadrature::default()).unwrap();
        assert!((v - 5.0 * z.re).abs() < 1e-13);
    }
}
