//! Generating sequences `(F_m, G_m) = (phi^m f0, i phi^m / f0)` and Bers
//! formal powers.
//!
//! `Z_m^(0)(a) = lambda F_m + mu G_m` with real `lambda, mu` fixed by the
//! value `a` at `z0`, and
//!
//! ```text
//! Z_m^(n+1)(a, z0; z) = (n+1) int_{z0}^{z} Z_{m+1}^(n)(a, z0; zeta) d_(F_m, G_m) zeta
//! ```
//!
//! A value `Z_m^(n)(z)` is computed pointwise: the path `z0 -> z` is cut into
//! Gauss-Legendre panels, the level-`(m+n)` zeroth power is sampled at the
//! nodes, and each antiderivative is applied with the spectral cumulative
//! integration matrix on the same nodes, so all `n` steps share one
//! discretisation. Panels are doubled until the endpoint value settles.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use crate::error::{Error, Result};
use crate::field::{Codomain, Domain, FieldFn, ScalarField, Stencil, C64, I};
use crate::integrate::{GaussRule, Polyline, Quadrature};
use crate::schrod::{check_condition_s, ConditionSOptions, SchrodingerProblem};
use crate::vekua::GeneratingPair;

/// Largest exponent accepted by the recursion.
pub const EXPONENT_BUDGET: usize = 16;
/// Largest number of panel doublings per evaluation.
const MAX_DOUBLINGS: usize = 10;
/// Relative finite-difference noise above which higher derivatives are refused.
pub const NOISE_THRESHOLD: f64 = 1e-3;

type CoefficientKey = (i32, [u64; 4]);

pub struct GeneratingSequence {
    f0: ScalarField,
    phi: ScalarField,
    constant_phi: Option<C64>,
    quad: Quadrature,
    stencil: Stencil,
    pairs: Mutex<HashMap<i32, GeneratingPair>>,
    zeroth: Mutex<HashMap<CoefficientKey, (f64, f64)>>,
}

impl std::fmt::Debug for GeneratingSequence {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("GeneratingSequence").field("constant_phi", &self.constant_phi).field("quad", &self.quad).finish()
    }
}

impl GeneratingSequence {
    /// Sequence for a real nonvanishing `f0` and an analytic multiplier `phi`.
    pub fn new(f0: &ScalarField, phi: &ScalarField, quad: Quadrature) -> Result<Arc<Self>> {
        let domain = *f0.domain();
        let samples = domain.interior_samples(400);
        let scale = samples.iter().map(|&z| phi.value(z).norm()).fold(0.0, f64::max);
        for &z in &samples {
            if !(phi.value(z).norm() > 1e-12 * scale) {
                return Err(Error::VanishingMultiplier { z });
            }
        }
        let constant_phi = phi.inner().as_constant();
        Ok(Arc::new(GeneratingSequence {
            f0: f0.clone(),
            phi: phi.clone(),
            constant_phi,
            quad,
            stencil: Stencil::for_domain(&domain),
            pairs: Mutex::new(HashMap::new()),
            zeroth: Mutex::new(HashMap::new()),
        }))
    }

    /// Runs the Condition S test on the problem's `rho` and builds the sequence
    /// from the resulting multiplier.
    pub fn from_problem(problem: &SchrodingerProblem, quad: Quadrature) -> Result<Arc<Self>> {
        let rho = problem.rho.as_ref().ok_or_else(|| Error::invalid(format!("problem '{}' has no rho", problem.name)))?;
        let options = ConditionSOptions { z0: Some(problem.z0), ..ConditionSOptions::default() };
        let report = check_condition_s(rho, &options)?;
        let phi = report.multiplier().ok_or_else(|| {
            Error::invalid(format!("rho of problem '{}' fails Condition S (residual {:.3e})", problem.name, report.residual))
        })?;
        Self::new(&problem.f0, phi, quad)
    }

    pub fn f0(&self) -> &ScalarField {
        &self.f0
    }

    pub fn multiplier(&self) -> &ScalarField {
        &self.phi
    }

    pub fn domain(&self) -> &Domain {
        self.f0.domain()
    }

    pub fn quadrature(&self) -> &Quadrature {
        &self.quad
    }

    pub fn stencil(&self) -> &Stencil {
        &self.stencil
    }

    /// `Some(1)` when the multiplier is constant.
    pub fn period(&self) -> Option<usize> {
        self.constant_phi.map(|_| 1)
    }

    /// `(F_m, G_m)` as a generating pair (cached).
    pub fn pair(&self, m: i32) -> Result<GeneratingPair> {
        if let Some(p) = self.pairs.lock().expect("pair cache poisoned").get(&m) {
            return Ok(p.clone());
        }
        let pm = self.phi.powi(m);
        let pair = GeneratingPair::with_stencil(pm.mul(&self.f0), pm.div(&self.f0).scale(I), self.stencil)?;
        self.pairs.lock().expect("pair cache poisoned").insert(m, pair.clone());
        Ok(pair)
    }

    #[inline]
    fn phi_at(&self, z: C64) -> C64 {
        self.constant_phi.unwrap_or_else(|| self.phi.value(z))
    }

    /// `(F_m(z), G_m(z))`.
    pub fn generators(&self, m: i32, z: C64) -> (C64, C64) {
        let f0 = self.f0.value(z).re;
        let pm = self.phi_at(z).powi(m);
        (pm * f0, I * pm / f0)
    }

    /// `(lambda, mu)` with `lambda F_m(z0) + mu G_m(z0) = a`.
    pub fn zeroth_coefficients(&self, m: i32, a: C64, z0: C64) -> Result<(f64, f64)> {
        let key = (m, [a.re.to_bits(), a.im.to_bits(), z0.re.to_bits(), z0.im.to_bits()]);
        if let Some(v) = self.zeroth.lock().expect("coefficient memo poisoned").get(&key) {
            return Ok(*v);
        }
        let (f, g) = self.generators(m, z0);
        let det = f.re * g.im - g.re * f.im;
        if !(det > 0.0) || !det.is_finite() {
            return Err(Error::DegeneratePair { z: z0, value: det });
        }
        let lambda = (a.re * g.im - g.re * a.im) / det;
        let mu = (f.re * a.im - a.re * f.im) / det;
        self.zeroth.lock().expect("coefficient memo poisoned").insert(key, (lambda, mu));
        Ok((lambda, mu))
    }

    /// Handle for `Z_m^(n)(a, z0; .)`.
    pub fn formal_power(self: &Arc<Self>, m: i32, n: usize, a: C64, z0: C64) -> Result<FormalPower> {
        if n > EXPONENT_BUDGET {
            return Err(Error::BudgetExceeded { requested: n, budget: EXPONENT_BUDGET });
        }
        if !self.domain().contains(z0) {
            return Err(Error::OutOfDomain { z: z0 });
        }
        self.zeroth_coefficients(m + n as i32, a, z0)?;
        Ok(FormalPower { seq: self.clone(), m, n, a, z0 })
    }

    /// `Z_m^(0)(a, z0; .)`.
    pub fn formal_power_zero(self: &Arc<Self>, m: i32, a: C64, z0: C64) -> Result<FormalPower> {
        self.formal_power(m, 0, a, z0)
    }

    fn evaluate(&self, m: i32, n: usize, a: C64, z0: C64, z: C64) -> Result<C64> {
        let top = m + n as i32;
        let (lambda, mu) = self.zeroth_coefficients(top, a, z0)?;
        if n == 0 {
            if !self.domain().contains(z) {
                return Err(Error::OutOfDomain { z });
            }
            let (f, g) = self.generators(m, z);
            return Ok(lambda * f + mu * g);
        }
        let path = Polyline::in_domain(self.domain(), z0, z)?;
        if path.vertices().len() < 2 {
            return Ok(C64::new(0.0, 0.0));
        }
        let rule = GaussRule::get(self.quad.nodes.max(2));
        let mut previous: Option<C64> = None;
        let mut panels = 1;
        for _ in 0..=MAX_DOUBLINGS {
            let value = self.recurse(&rule, &path, panels, m, n, lambda, mu);
            if let Some(p) = previous {
                let difference = (value - p).norm();
                if difference <= self.quad.tolerance * (1.0 + value.norm()) {
                    return Ok(value);
                }
                if !difference.is_finite() {
                    return Err(Error::NoConvergence { depth: panels, difference });
                }
            }
            previous = Some(value);
            panels *= 2;
        }
        let difference = previous.map_or(f64::NAN, |p| (self.recurse(&rule, &path, panels, m, n, lambda, mu) - p).norm());
        Err(Error::NoConvergence { depth: MAX_DOUBLINGS, difference })
    }

    #[allow(clippy::too_many_arguments)]
    fn recurse(&self, rule: &GaussRule, path: &Polyline, panels: usize, m: i32, n: usize, lambda: f64, mu: f64) -> C64 {
        let cumulative = rule.cumulative();
        // Panel geometry: (midpoint, half-length vector).
        let mut geometry = Vec::new();
        for (a, b) in path.segments() {
            let step = (b - a) / panels as f64;
            for p in 0..panels {
                let lo = a + step * p as f64;
                geometry.push((lo + step * 0.5, step * 0.5));
            }
        }
        let mut points = Vec::with_capacity(geometry.len() * rule.len());
        for &(mid, half) in &geometry {
            for x in &rule.nodes {
                points.push(mid + half * *x);
            }
        }
        let f0: Vec<f64> = points.iter().map(|&z| self.f0.value(z).re).collect();
        let phi: Vec<C64> = points.iter().map(|&z| self.phi_at(z)).collect();

        let top = m + n as i32;
        let mut level: Vec<C64> = (0..points.len())
            .map(|i| {
                let pk = phi[i].powi(top);
                lambda * pk * f0[i] + mu * I * pk / f0[i]
            })
            .collect();

        let mut g_star_w = vec![C64::new(0.0, 0.0); points.len()];
        let mut f_star_w = vec![C64::new(0.0, 0.0); points.len()];
        let mut c1 = vec![C64::new(0.0, 0.0); points.len()];
        let mut c2 = vec![C64::new(0.0, 0.0); points.len()];
        for j in 0..n {
            // level holds Z^(j)_{k+1}; produce Z^(j+1)_k
            let k = top - j as i32 - 1;
            for i in 0..points.len() {
                let pk = phi[i].powi(k);
                g_star_w[i] = level[i] / (f0[i] * pk);
                f_star_w[i] = -I * f0[i] / pk * level[i];
            }
            let (t1, t2) = cumulate(&geometry, rule, cumulative, &g_star_w, &f_star_w, &mut c1, &mut c2);
            let factor = (j + 1) as f64 * 0.5;
            if j + 1 == n {
                let end = path.end();
                let (f, g) = self.generators(m, end);
                return factor * (f * t1.re + g * t2.re);
            }
            for i in 0..points.len() {
                let pk = phi[i].powi(k);
                level[i] = factor * (pk * f0[i] * c1[i].re + I * pk / f0[i] * c2[i].re);
            }
        }
        unreachable!("n >= 1 returns inside the loop")
    }

    /// Higher `(F,G)`-derivatives `W^[k+1] = d_(F_k, G_k) W^[k] / dz`.
    pub fn higher_derivative(&self, w: &ScalarField, n: usize) -> Result<ScalarField> {
        let mut current = w.clone();
        for k in 0..n {
            current = self.pair(k as i32)?.fg_derivative(&current);
            let noise = fd_noise(&current, &self.stencil, self.domain());
            if noise > NOISE_THRESHOLD {
                return Err(Error::NoiseDominated { order: k + 1, noise });
            }
        }
        Ok(current)
    }

    /// `a_n = W^[n](z0) / n!` for `n = 0..=order`.
    pub fn taylor_coefficients(self: &Arc<Self>, w: &ScalarField, z0: C64, order: usize) -> Result<TaylorExpansion> {
        if !self.domain().contains(z0) {
            return Err(Error::OutOfDomain { z: z0 });
        }
        let mut coefficients = Vec::with_capacity(order + 1);
        let mut current = w.clone();
        let mut factorial = 1.0;
        for n in 0..=order {
            if n > 0 {
                factorial *= n as f64;
                current = self.pair(n as i32 - 1)?.fg_derivative(&current);
                let noise = fd_noise(&current, &self.stencil, self.domain());
                if noise > NOISE_THRESHOLD {
                    return Err(Error::NoiseDominated { order: n, noise });
                }
            }
            coefficients.push(current.value(z0) / factorial);
        }
        Ok(TaylorExpansion { z0, coefficients, seq: self.clone() })
    }

    /// `Re Z^(0)(1), Re Z^(0)(i), Re Z^(n)(1), Re Z^(n)(i)` for `1 <= n <= order`.
    pub fn basis(self: &Arc<Self>, z0: C64, order: usize) -> Result<Vec<BasisElement>> {
        let mut out = Vec::with_capacity(2 * order + 2);
        for n in 0..=order {
            for a in [C64::new(1.0, 0.0), I] {
                let power = self.formal_power(0, n, a, z0)?;
                out.push(BasisElement { n, a, field: power.field().re() });
            }
        }
        Ok(out)
    }
}

/// Estimated relative rounding noise of nested finite differences.
pub fn fd_noise(field: &ScalarField, stencil: &Stencil, domain: &Domain) -> f64 {
    let depth = field.fd_depth();
    if depth == 0 {
        return 0.0;
    }
    let base = if field.is_sampled() { 1e-6 } else { 1e-14 };
    base * (domain.length_scale() / stencil.h).powi(depth as i32)
}

/// Cumulative integrals of two integrands along the panels. Returns the totals.
fn cumulate(
    geometry: &[(C64, C64)],
    rule: &GaussRule,
    s: &[f64],
    u: &[C64],
    v: &[C64],
    cu: &mut [C64],
    cv: &mut [C64],
) -> (C64, C64) {
    let q = rule.len();
    let mut offset_u = C64::new(0.0, 0.0);
    let mut offset_v = C64::new(0.0, 0.0);
    for (p, &(_, half)) in geometry.iter().enumerate() {
        let base = p * q;
        let (pu, pv) = (&u[base..base + q], &v[base..base + q]);
        for i in 0..q {
            let row = &s[i * q..(i + 1) * q];
            let mut au = C64::new(0.0, 0.0);
            let mut av = C64::new(0.0, 0.0);
            for j in 0..q {
                au += row[j] * pu[j];
                av += row[j] * pv[j];
            }
            cu[base + i] = offset_u + half * au;
            cv[base + i] = offset_v + half * av;
        }
        let mut tu = C64::new(0.0, 0.0);
        let mut tv = C64::new(0.0, 0.0);
        for j in 0..q {
            tu += rule.weights[j] * pu[j];
            tv += rule.weights[j] * pv[j];
        }
        offset_u += half * tu;
        offset_v += half * tv;
    }
    (offset_u, offset_v)
}

/// `Z_m^(n)(a, z0; .)`.
#[derive(Clone, Debug)]
pub struct FormalPower {
    seq: Arc<GeneratingSequence>,
    pub m: i32,
    pub n: usize,
    pub a: C64,
    pub z0: C64,
}

impl FormalPower {
    pub fn value_at(&self, z: C64) -> Result<C64> {
        self.seq.evaluate(self.m, self.n, self.a, self.z0, z)
    }

    /// `(lambda, mu)` of the zeroth power at the top level `m + n`.
    pub fn zeroth_coefficients(&self) -> (f64, f64) {
        self.seq.zeroth_coefficients(self.m + self.n as i32, self.a, self.z0).expect("checked at construction")
    }

    /// The power as a field (NaN where evaluation fails; derivatives by finite differences).
    pub fn field(&self) -> ScalarField {
        ScalarField::new(*self.seq.domain(), Codomain::Complex, self.clone())
    }
}

impl FieldFn for FormalPower {
    fn value(&self, z: C64) -> C64 {
        self.value_at(z).unwrap_or(C64::new(f64::NAN, f64::NAN))
    }
}

#[derive(Clone, Debug)]
pub struct BasisElement {
    pub n: usize,
    pub a: C64,
    pub field: ScalarField,
}

/// Formal Taylor expansion `sum a_n Z^(n)(1, z0; .)`-style partial sums.
#[derive(Clone, Debug)]
pub struct TaylorExpansion {
    pub z0: C64,
    pub coefficients: Vec<C64>,
    seq: Arc<GeneratingSequence>,
}

impl TaylorExpansion {
    pub fn order(&self) -> usize {
        self.coefficients.len() - 1
    }

    pub fn sequence(&self) -> &Arc<GeneratingSequence> {
        &self.seq
    }

    /// `sum_{n <= N} Z^(n)(a_n, z0; z)` for `N <= order`.
    pub fn partial_sum_to(&self, order: usize, z: C64) -> Result<C64> {
        let mut acc = C64::new(0.0, 0.0);
        for (n, &a) in self.coefficients.iter().enumerate().take(order + 1) {
            if a == C64::new(0.0, 0.0) {
                continue;
            }
            acc += self.seq.evaluate(0, n, a, self.z0, z)?;
        }
        Ok(acc)
    }

    pub fn partial_sum(&self, z: C64) -> Result<C64> {
        self.partial_sum_to(self.order(), z)
    }
}
