//! Planar domains, scalar fields and Wirtinger calculus.
//!
//! Throughout the crate the Wirtinger operators are used *without* the
//! customary factor 1/2:
//!
//! ```text
//! dz    = d/dx - i d/dy
//! dzbar = d/dx + i d/dy
//! ```
//!
//! so that `dzbar(dz f) = f_xx + f_yy` and `dz z = 2`. Every module relies
//! on this; do not mix in the halved operators.
//!
//! A [`ScalarField`] is an immutable, thread-safe handle to a function on a
//! [`Domain`]. Fields built from closed-form expressions (and sums,
//! products, quotients, conjugates, powers and exponentials of such fields)
//! carry exact derivative fields; everything else is differentiated by
//! central differences through a [`Stencil`].

mod grid;
mod ops;
mod sampling;
mod stencil;

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use grid::{GridDescriptor, GridField};
pub use ops::{Annotated, ClosureField, Conjugate, Constant, Exponential, IntPower, Product, Quotient, Scaled, Sum};
pub use sampling::{circle_points, disc_samples, golden_spiral, halton, square_grid};
pub use stencil::{FdDerivative, FdOp, Scheme, Stencil};

pub type C64 = Complex64;

/// Shared reference to a field implementation.
pub type FieldRef = Arc<dyn FieldFn>;

pub const I: C64 = C64 { re: 0.0, im: 1.0 };

/// A function of the plane, with optional exact Wirtinger derivatives.
pub trait FieldFn: Send + Sync {
    fn value(&self, z: C64) -> C64;

    /// Exact `dz` field, when known in closed form.
    fn dz(&self) -> Option<FieldRef> {
        None
    }

    /// Exact `dzbar` field, when known in closed form.
    fn dzbar(&self) -> Option<FieldRef> {
        None
    }

    /// Nesting depth of finite differences hidden behind `value`.
    fn fd_depth(&self) -> u32 {
        0
    }

    /// True when the values come from interpolated samples.
    fn sampled(&self) -> bool {
        false
    }

    fn as_constant(&self) -> Option<C64> {
        None
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Codomain {
    Real,
    Complex,
}

impl Codomain {
    fn join(self, other: Codomain) -> Codomain {
        if self == Codomain::Real && other == Codomain::Real {
            Codomain::Real
        } else {
            Codomain::Complex
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Shape {
    Rectangle { center: C64, half_width: f64, half_height: f64 },
    Disc { center: C64, radius: f64 },
}

/// A simply connected planar region (rectangle or disc).
///
/// `margin` is the distance from the boundary inside which finite-difference
/// derivative queries are refused.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Domain {
    pub shape: Shape,
    pub margin: f64,
}

impl Domain {
    pub fn disc(center: C64, radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::invalid(format!("disc radius must be positive, got {radius}")));
        }
        let margin = 2.0 * Stencil::new(Scheme::Central4, radius).reach();
        Ok(Domain { shape: Shape::Disc { center, radius }, margin })
    }

    pub fn rectangle(center: C64, half_width: f64, half_height: f64) -> Result<Self> {
        if !(half_width > 0.0 && half_height > 0.0) {
            return Err(Error::invalid("rectangle half-widths must be positive"));
        }
        let scale = half_width.max(half_height);
        let margin = 2.0 * Stencil::new(Scheme::Central4, scale).reach();
        Ok(Domain { shape: Shape::Rectangle { center, half_width, half_height }, margin })
    }

    pub fn unit_disc() -> Self {
        Domain::disc(C64::new(0.0, 0.0), 1.0).expect("unit disc")
    }

    pub fn with_margin(mut self, margin: f64) -> Self {
        self.margin = margin.max(0.0);
        self
    }

    pub fn center(&self) -> C64 {
        match self.shape {
            Shape::Rectangle { center, .. } | Shape::Disc { center, .. } => center,
        }
    }

    pub fn length_scale(&self) -> f64 {
        match self.shape {
            Shape::Rectangle { half_width, half_height, .. } => half_width.max(half_height),
            Shape::Disc { radius, .. } => radius,
        }
    }

    /// Radius of the largest disc centred at `center()` that fits inside.
    pub fn inradius(&self) -> f64 {
        match self.shape {
            Shape::Rectangle { half_width, half_height, .. } => half_width.min(half_height),
            Shape::Disc { radius, .. } => radius,
        }
    }

    /// Signed distance to the boundary, positive inside.
    pub fn distance_to_boundary(&self, z: C64) -> f64 {
        match self.shape {
            Shape::Rectangle { center, half_width, half_height } => {
                let d = z - center;
                (half_width - d.re.abs()).min(half_height - d.im.abs())
            }
            Shape::Disc { center, radius } => radius - (z - center).norm(),
        }
    }

    pub fn contains(&self, z: C64) -> bool {
        z.re.is_finite() && z.im.is_finite() && self.distance_to_boundary(z) >= -1e-12 * self.length_scale()
    }

    /// `(xmin, xmax, ymin, ymax)`.
    pub fn bounding_box(&self) -> (f64, f64, f64, f64) {
        match self.shape {
            Shape::Rectangle { center, half_width, half_height } => (
                center.re - half_width,
                center.re + half_width,
                center.im - half_height,
                center.im + half_height,
            ),
            Shape::Disc { center, radius } => {
                (center.re - radius, center.re + radius, center.im - radius, center.im + radius)
            }
        }
    }

    /// Deterministic quasi-random points at least `margin` inside the boundary.
    pub fn interior_samples(&self, count: usize) -> Vec<C64> {
        match self.shape {
            Shape::Disc { center, radius } => disc_samples(center, (radius - self.margin).max(0.0), count),
            Shape::Rectangle { center, half_width, half_height } => {
                let hw = (half_width - self.margin).max(0.0);
                let hh = (half_height - self.margin).max(0.0);
                (1..=count)
                    .map(|k| {
                        let u = halton(k, 2);
                        let v = halton(k, 3);
                        center + C64::new((2.0 * u - 1.0) * hw, (2.0 * v - 1.0) * hh)
                    })
                    .collect()
            }
        }
    }
}

/// Immutable handle to a function on a domain.
#[derive(Clone)]
pub struct ScalarField {
    inner: FieldRef,
    codomain: Codomain,
    domain: Domain,
}

impl fmt::Debug for ScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ScalarField")
            .field("codomain", &self.codomain)
            .field("domain", &self.domain)
            .field("exact_dz", &self.inner.dz().is_some())
            .finish()
    }
}

impl ScalarField {
    pub fn new(domain: Domain, codomain: Codomain, inner: impl FieldFn + 'static) -> Self {
        ScalarField { inner: Arc::new(inner), codomain, domain }
    }

    pub fn from_ref(domain: Domain, codomain: Codomain, inner: FieldRef) -> Self {
        ScalarField { inner, codomain, domain }
    }

    pub fn from_fn<F>(domain: Domain, codomain: Codomain, f: F) -> Self
    where
        F: Fn(C64) -> C64 + Send + Sync + 'static,
    {
        Self::new(domain, codomain, ClosureField::new(f))
    }

    pub fn constant(domain: Domain, c: C64) -> Self {
        let codomain = if c.im == 0.0 { Codomain::Real } else { Codomain::Complex };
        Self::new(domain, codomain, Constant(c))
    }

    pub fn real_constant(domain: Domain, c: f64) -> Self {
        Self::constant(domain, C64::new(c, 0.0))
    }

    /// The identity field `z`, with exact derivatives `dz z = 2`, `dzbar z = 0`.
    pub fn z(domain: Domain) -> Self {
        let f = ClosureField::new(|z| z).with_derivatives(Arc::new(Constant(C64::new(2.0, 0.0))), Arc::new(Constant(C64::new(0.0, 0.0))));
        Self::new(domain, Codomain::Complex, f)
    }

    /// Attach exact derivative fields to an arbitrary field.
    pub fn with_derivatives(self, dz: &ScalarField, dzbar: &ScalarField) -> Self {
        let inner = Annotated { inner: self.inner, dz: dz.inner.clone(), dzbar: dzbar.inner.clone() };
        ScalarField { inner: Arc::new(inner), ..self }
    }

    pub fn inner(&self) -> &FieldRef {
        &self.inner
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn codomain(&self) -> Codomain {
        self.codomain
    }

    pub fn is_real(&self) -> bool {
        self.codomain == Codomain::Real
    }

    pub fn with_domain(&self, domain: Domain) -> Self {
        ScalarField { domain, ..self.clone() }
    }

    pub fn as_real(&self) -> Self {
        ScalarField { codomain: Codomain::Real, ..self.clone() }
    }

    pub fn fd_depth(&self) -> u32 {
        self.inner.fd_depth()
    }

    pub fn is_sampled(&self) -> bool {
        self.inner.sampled()
    }

    /// Unchecked evaluation; real fields have their imaginary part cleared.
    #[inline]
    pub fn value(&self, z: C64) -> C64 {
        let v = self.inner.value(z);
        match self.codomain {
            Codomain::Real => C64::new(v.re, 0.0),
            Codomain::Complex => v,
        }
    }

    /// Evaluation with a domain check.
    pub fn eval(&self, z: C64) -> Result<C64> {
        if !self.domain.contains(z) {
            return Err(Error::OutOfDomain { z });
        }
        Ok(self.value(z))
    }

    pub fn eval_real(&self, z: C64) -> Result<f64> {
        self.eval(z).map(|v| v.re)
    }

    pub fn exact_dz(&self) -> Option<ScalarField> {
        self.inner.dz().map(|d| ScalarField::from_ref(self.domain, Codomain::Complex, d))
    }

    pub fn exact_dzbar(&self) -> Option<ScalarField> {
        self.inner.dzbar().map(|d| ScalarField::from_ref(self.domain, Codomain::Complex, d))
    }

    pub fn has_exact_derivatives(&self) -> bool {
        self.inner.dz().is_some() && self.inner.dzbar().is_some()
    }

    /// `dz` as a field: exact when available, finite differences otherwise.
    pub fn dz_field(&self, stencil: &Stencil) -> ScalarField {
        self.exact_dz().unwrap_or_else(|| self.fd_field(FdOp::Dz, stencil))
    }

    pub fn dzbar_field(&self, stencil: &Stencil) -> ScalarField {
        self.exact_dzbar().unwrap_or_else(|| self.fd_field(FdOp::Dzbar, stencil))
    }

    fn fd_field(&self, op: FdOp, stencil: &Stencil) -> ScalarField {
        let inner = FdDerivative { inner: self.inner.clone(), op, stencil: *stencil };
        ScalarField::new(self.domain, Codomain::Complex, inner)
    }

    pub fn conj(&self) -> ScalarField {
        ScalarField { inner: ops::conj(self.inner.clone()), ..self.clone() }
    }

    pub fn scale(&self, c: C64) -> ScalarField {
        let codomain = if c.im == 0.0 { self.codomain } else { Codomain::Complex };
        ScalarField { inner: ops::scaled(c, self.inner.clone()), codomain, domain: self.domain }
    }

    pub fn scale_real(&self, c: f64) -> ScalarField {
        self.scale(C64::new(c, 0.0))
    }

    pub fn re(&self) -> ScalarField {
        let sum = ops::sum(self.inner.clone(), ops::conj(self.inner.clone()));
        ScalarField { inner: ops::scaled(C64::new(0.5, 0.0), sum), codomain: Codomain::Real, domain: self.domain }
    }

    pub fn im(&self) -> ScalarField {
        let diff = ops::sum(self.inner.clone(), ops::scaled(C64::new(-1.0, 0.0), ops::conj(self.inner.clone())));
        ScalarField { inner: ops::scaled(C64::new(0.0, -0.5), diff), codomain: Codomain::Real, domain: self.domain }
    }

    pub fn powi(&self, k: i32) -> ScalarField {
        ScalarField { inner: ops::powi(self.inner.clone(), k), ..self.clone() }
    }

    pub fn recip(&self) -> ScalarField {
        self.powi(-1)
    }

    pub fn exp(&self) -> ScalarField {
        ScalarField { inner: Arc::new(Exponential(self.inner.clone())), ..self.clone() }
    }

    pub fn add(&self, other: &ScalarField) -> ScalarField {
        ScalarField {
            inner: ops::sum(self.inner.clone(), other.inner.clone()),
            codomain: self.codomain.join(other.codomain),
            domain: self.domain,
        }
    }

    pub fn sub(&self, other: &ScalarField) -> ScalarField {
        self.add(&other.scale_real(-1.0))
    }

    pub fn mul(&self, other: &ScalarField) -> ScalarField {
        ScalarField {
            inner: ops::product(self.inner.clone(), other.inner.clone()),
            codomain: self.codomain.join(other.codomain),
            domain: self.domain,
        }
    }

    pub fn div(&self, other: &ScalarField) -> ScalarField {
        ScalarField {
            inner: ops::quotient(self.inner.clone(), other.inner.clone()),
            codomain: self.codomain.join(other.codomain),
            domain: self.domain,
        }
    }
}

impl std::ops::Add for &ScalarField {
    type Output = ScalarField;
    fn add(self, rhs: &ScalarField) -> ScalarField {
        ScalarField::add(self, rhs)
    }
}

impl std::ops::Sub for &ScalarField {
    type Output = ScalarField;
    fn sub(self, rhs: &ScalarField) -> ScalarField {
        ScalarField::sub(self, rhs)
    }
}

impl std::ops::Mul for &ScalarField {
    type Output = ScalarField;
    fn mul(self, rhs: &ScalarField) -> ScalarField {
        ScalarField::mul(self, rhs)
    }
}

impl std::ops::Div for &ScalarField {
    type Output = ScalarField;
    fn div(self, rhs: &ScalarField) -> ScalarField {
        ScalarField::div(self, rhs)
    }
}
