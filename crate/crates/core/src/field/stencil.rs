use serde::{Deserialize, Serialize};

use super::{FieldFn, FieldRef, ScalarField, C64, I};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Central2,
    Central4,
}

/// Central-difference stencil.
///
/// `h` is the step for first derivatives and `h2` for second derivatives.
/// The defaults balance truncation against rounding for the scheme's order:
/// `eps^(1/3) L, eps^(1/4) L` for `Central2` and `eps^(1/5) L, eps^(1/6) L`
/// for `Central4`, `L` the length scale of the domain.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Stencil {
    pub scheme: Scheme,
    pub h: f64,
    pub h2: f64,
}

impl Default for Stencil {
    fn default() -> Self {
        Stencil::new(Scheme::Central4, 1.0)
    }
}

impl Stencil {
    pub fn new(scheme: Scheme, length_scale: f64) -> Self {
        let eps = f64::EPSILON;
        let (p1, p2) = match scheme {
            Scheme::Central2 => (1.0 / 3.0, 1.0 / 4.0),
            Scheme::Central4 => (1.0 / 5.0, 1.0 / 6.0),
        };
        Stencil { scheme, h: eps.powf(p1) * length_scale, h2: eps.powf(p2) * length_scale }
    }

    pub fn for_domain(domain: &super::Domain) -> Self {
        Stencil::new(Scheme::Central4, domain.length_scale())
    }

    /// Farthest point the stencil touches, measured from the centre.
    pub fn reach(&self) -> f64 {
        let k = match self.scheme {
            Scheme::Central2 => 1.0,
            Scheme::Central4 => 2.0,
        };
        k * self.h.max(self.h2)
    }

    fn first(&self, f: &dyn FieldFn, z: C64, dir: C64) -> C64 {
        let h = self.h;
        let at = |t: f64| f.value(z + dir * t);
        match self.scheme {
            Scheme::Central2 => (at(h) - at(-h)) / (2.0 * h),
            Scheme::Central4 => (-at(2.0 * h) + 8.0 * at(h) - 8.0 * at(-h) + at(-2.0 * h)) / (12.0 * h),
        }
    }

    fn second(&self, f: &dyn FieldFn, z: C64, dir: C64, center: C64) -> C64 {
        let h = self.h2;
        let at = |t: f64| f.value(z + dir * t);
        match self.scheme {
            Scheme::Central2 => (at(h) - 2.0 * center + at(-h)) / (h * h),
            Scheme::Central4 => {
                (-at(2.0 * h) + 16.0 * at(h) - 30.0 * center + 16.0 * at(-h) - at(-2.0 * h)) / (12.0 * h * h)
            }
        }
    }

    /// Unchecked finite-difference partials.
    pub fn raw_dx(&self, f: &dyn FieldFn, z: C64) -> C64 {
        self.first(f, z, C64::new(1.0, 0.0))
    }

    pub fn raw_dy(&self, f: &dyn FieldFn, z: C64) -> C64 {
        self.first(f, z, I)
    }

    pub fn raw_dz(&self, f: &dyn FieldFn, z: C64) -> C64 {
        self.raw_dx(f, z) - I * self.raw_dy(f, z)
    }

    pub fn raw_dzbar(&self, f: &dyn FieldFn, z: C64) -> C64 {
        self.raw_dx(f, z) + I * self.raw_dy(f, z)
    }

    pub fn raw_laplacian(&self, f: &dyn FieldFn, z: C64) -> C64 {
        let c = f.value(z);
        self.second(f, z, C64::new(1.0, 0.0), c) + self.second(f, z, I, c)
    }

    fn check(&self, f: &ScalarField, z: C64, needs_stencil: bool) -> Result<()> {
        let domain = f.domain();
        if !domain.contains(z) {
            return Err(Error::OutOfDomain { z });
        }
        if needs_stencil {
            let distance = domain.distance_to_boundary(z);
            let margin = domain.margin.max(self.reach());
            if distance < margin {
                return Err(Error::StencilOutOfDomain { z, distance, margin });
            }
        }
        Ok(())
    }

    pub fn dz(&self, f: &ScalarField, z: C64) -> Result<C64> {
        match f.inner().dz() {
            Some(d) => {
                self.check(f, z, false)?;
                Ok(d.value(z))
            }
            None => {
                self.check(f, z, true)?;
                Ok(self.raw_dz(f.inner().as_ref(), z))
            }
        }
    }

    pub fn dzbar(&self, f: &ScalarField, z: C64) -> Result<C64> {
        match f.inner().dzbar() {
            Some(d) => {
                self.check(f, z, false)?;
                Ok(d.value(z))
            }
            None => {
                self.check(f, z, true)?;
                Ok(self.raw_dzbar(f.inner().as_ref(), z))
            }
        }
    }

    pub fn dx(&self, f: &ScalarField, z: C64) -> Result<C64> {
        Ok((self.dz(f, z)? + self.dzbar(f, z)?) * 0.5)
    }

    pub fn dy(&self, f: &ScalarField, z: C64) -> Result<C64> {
        Ok((self.dzbar(f, z)? - self.dz(f, z)?) * C64::new(0.0, -0.5))
    }

    /// `f_xx + f_yy = dzbar dz f`.
    pub fn laplacian(&self, f: &ScalarField, z: C64) -> Result<C64> {
        if let Some(g) = f.inner().dz() {
            if let Some(gg) = g.dzbar() {
                self.check(f, z, false)?;
                return Ok(gg.value(z));
            }
            self.check(f, z, true)?;
            return Ok(self.raw_dzbar(g.as_ref(), z));
        }
        self.check(f, z, true)?;
        Ok(self.raw_laplacian(f.inner().as_ref(), z))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FdOp {
    Dx,
    Dy,
    Dz,
    Dzbar,
    Laplacian,
}

/// A field whose values are finite differences of another field.
pub struct FdDerivative {
    pub inner: FieldRef,
    pub op: FdOp,
    pub stencil: Stencil,
}

impl FieldFn for FdDerivative {
    fn value(&self, z: C64) -> C64 {
        let f = self.inner.as_ref();
        match self.op {
            FdOp::Dx => self.stencil.raw_dx(f, z),
            FdOp::Dy => self.stencil.raw_dy(f, z),
            FdOp::Dz => self.stencil.raw_dz(f, z),
            FdOp::Dzbar => self.stencil.raw_dzbar(f, z),
            FdOp::Laplacian => self.stencil.raw_laplacian(f, z),
        }
    }

    fn fd_depth(&self) -> u32 {
        self.inner.fd_depth() + if self.op == FdOp::Laplacian { 2 } else { 1 }
    }

    fn sampled(&self) -> bool {
        self.inner.sampled()
    }
}
