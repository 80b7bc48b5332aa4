//! Generating pairs and the Bers calculus built on them.
//!
//! A pair `(F, G)` with `Im(conj(F) G) > 0` defines the Vekua equation
//! `W_zbar = a W + b conj(W)` and the `(F,G)`-derivative
//! `Wdot = W_z - A W - B conj(W)`, where, with `D = F conj(G) - conj(F) G`,
//!
//! ```text
//! a = -(conj(F) G_zbar - F_zbar conj(G)) / D     b = (F G_zbar - F_zbar G) / D
//! A = -(conj(F) G_z    - F_z    conj(G)) / D     B = (F G_z    - F_z    G) / D
//! ```
//!
//! For the main pair `(f0, i/f0)` this reduces to `a = A = 0`,
//! `b = f0_zbar / f0`, `B = f0_z / f0`.

use crate::error::{Error, Result};
use crate::field::{Codomain, Domain, ScalarField, Stencil, C64, I};
use crate::integrate::{Antigradient, Polyline, Quadrature};

pub const NONDEGENERACY_SAMPLES: usize = 400;

/// Characteristic coefficients of a pair.
#[derive(Clone, Debug)]
pub struct Coefficients {
    pub a: ScalarField,
    pub b: ScalarField,
    pub big_a: ScalarField,
    pub big_b: ScalarField,
}

#[derive(Clone, Debug)]
pub struct GeneratingPair {
    f: ScalarField,
    g: ScalarField,
    stencil: Stencil,
    coefficients: Coefficients,
}

fn denominator(f: &ScalarField, g: &ScalarField) -> ScalarField {
    f.mul(&g.conj()).sub(&f.conj().mul(g))
}

impl GeneratingPair {
    /// Builds the pair after sampling `Im(conj(F) G) > 0` on the domain of `F`.
    pub fn new(f: ScalarField, g: ScalarField) -> Result<Self> {
        let stencil = Stencil::for_domain(f.domain());
        Self::with_stencil(f, g, stencil)
    }

    pub fn with_stencil(f: ScalarField, g: ScalarField, stencil: Stencil) -> Result<Self> {
        let samples = f.domain().interior_samples(NONDEGENERACY_SAMPLES);
        check_nondegenerate(&f, &g, &samples)?;
        let coefficients = characteristic_coefficients(&f, &g, &stencil);
        Ok(GeneratingPair { f, g, stencil, coefficients })
    }

    /// `(f0, i/f0)` for a real nonvanishing `f0`.
    pub fn main(f0: &ScalarField) -> Result<Self> {
        Self::new(f0.clone(), f0.recip().scale(I))
    }

    pub fn f(&self) -> &ScalarField {
        &self.f
    }

    pub fn g(&self) -> &ScalarField {
        &self.g
    }

    pub fn domain(&self) -> &Domain {
        self.f.domain()
    }

    pub fn stencil(&self) -> &Stencil {
        &self.stencil
    }

    pub fn coefficients(&self) -> &Coefficients {
        &self.coefficients
    }

    /// `(phi F, phi G)`.
    pub fn multiplied(&self, phi: &ScalarField) -> Result<Self> {
        Self::with_stencil(phi.mul(&self.f), phi.mul(&self.g), self.stencil)
    }

    /// `W_zbar - a W - b conj(W)` at `z`.
    pub fn vekua_residual_at(&self, w: &ScalarField, z: C64) -> C64 {
        let c = &self.coefficients;
        let wz = w.value(z);
        w.dzbar_field(&self.stencil).value(z) - c.a.value(z) * wz - c.b.value(z) * wz.conj()
    }

    /// Largest residual over `samples`, relative to `max(|W_zbar|, |W| / L)`.
    pub fn vekua_residual(&self, w: &ScalarField, samples: &[C64]) -> f64 {
        let dzbar = w.dzbar_field(&self.stencil);
        let length = self.domain().length_scale();
        let c = &self.coefficients;
        let mut worst: f64 = 0.0;
        let mut scale: f64 = 0.0;
        for &z in samples {
            let wz = w.value(z);
            let d = dzbar.value(z);
            let r = d - c.a.value(z) * wz - c.b.value(z) * wz.conj();
            worst = worst.max(r.norm());
            scale = scale.max(d.norm()).max(wz.norm() / length);
        }
        if scale > 0.0 {
            worst / scale
        } else {
            worst
        }
    }

    pub fn check_pseudoanalytic(&self, w: &ScalarField, samples: &[C64], tolerance: f64) -> Result<()> {
        let residual = self.vekua_residual(w, samples);
        if residual > tolerance || residual.is_nan() {
            return Err(Error::NotPseudoanalytic { residual, tolerance });
        }
        Ok(())
    }

    /// Real `(phi, psi)` with `W = phi F + psi G`:
    /// `psi = Im(conj(F) W) / Im(conj(F) G)`, `phi = -Im(conj(G) W) / Im(conj(F) G)`.
    pub fn decompose(&self, w: &ScalarField) -> (ScalarField, ScalarField) {
        let det = self.f.conj().mul(&self.g).im();
        let psi = self.f.conj().mul(w).im().div(&det);
        let phi = self.g.conj().mul(w).im().div(&det).scale_real(-1.0);
        (phi.as_real(), psi.as_real())
    }

    pub fn decompose_at(&self, w: C64, z: C64) -> Result<(f64, f64)> {
        decompose_values(self.f.value(z), self.g.value(z), w, z)
    }

    /// `Wdot = W_z - A W - B conj(W)`; no pseudoanalyticity check.
    pub fn fg_derivative(&self, w: &ScalarField) -> ScalarField {
        let c = &self.coefficients;
        w.dz_field(&self.stencil).sub(&c.big_a.mul(w)).sub(&c.big_b.mul(&w.conj()))
    }

    /// As [`fg_derivative`](Self::fg_derivative), refusing inputs whose
    /// Vekua residual exceeds `tolerance` on `samples`.
    pub fn fg_derivative_checked(&self, w: &ScalarField, samples: &[C64], tolerance: f64) -> Result<ScalarField> {
        self.check_pseudoanalytic(w, samples, tolerance)?;
        Ok(self.fg_derivative(w))
    }

    /// `(F*, G*) = (-2 conj(F) / D, 2 conj(G) / D)`.
    pub fn adjoint(&self) -> Result<Self> {
        let (fs, gs) = self.adjoint_fields();
        Self::with_stencil(fs, gs, self.stencil)
    }

    fn adjoint_fields(&self) -> (ScalarField, ScalarField) {
        let d = denominator(&self.f, &self.g);
        (self.f.conj().div(&d).scale_real(-2.0), self.g.conj().div(&d).scale_real(2.0))
    }

    /// `(F,G)`-antiderivative of `w` from `z0` to `z`:
    /// `1/2 (F(z) Re int G* w dzeta + G(z) Re int F* w dzeta)`.
    pub fn fg_integral(&self, w: &ScalarField, z0: C64, z: C64, quad: &Quadrature) -> Result<C64> {
        let path = Polyline::in_domain(self.domain(), z0, z)?;
        self.fg_integral_along(w, &path, quad)
    }

    pub fn fg_integral_along(&self, w: &ScalarField, path: &Polyline, quad: &Quadrature) -> Result<C64> {
        path.check(self.domain())?;
        let (fs, gs) = self.adjoint_fields();
        let ig = quad.path(&|p| gs.value(p) * w.value(p), path)?;
        let if_ = quad.path(&|p| fs.value(p) * w.value(p), path)?;
        let z = path.end();
        Ok(0.5 * (self.f.value(z) * ig.re + self.g.value(z) * if_.re))
    }

    /// `(F,G)`-antiderivative as a lazily evaluated field (NaN where quadrature fails).
    pub fn fg_integral_field(&self, w: &ScalarField, z0: C64, quad: &Quadrature) -> ScalarField {
        let pair = self.clone();
        let w = w.clone();
        let quad = *quad;
        let domain = *self.domain();
        ScalarField::from_fn(domain, Codomain::Complex, move |z| {
            pair.fg_integral(&w, z0, z, &quad).unwrap_or(C64::new(f64::NAN, f64::NAN))
        })
    }
}

fn decompose_values(f: C64, g: C64, w: C64, z: C64) -> Result<(f64, f64)> {
    let det = (f.conj() * g).im;
    if !(det > 0.0) {
        return Err(Error::DegeneratePair { z, value: det });
    }
    Ok((-(g.conj() * w).im / det, (f.conj() * w).im / det))
}

fn check_nondegenerate(f: &ScalarField, g: &ScalarField, samples: &[C64]) -> Result<()> {
    for &z in samples {
        let (fz, gz) = (f.value(z), g.value(z));
        let value = (fz.conj() * gz).im;
        let d = (fz * gz.conj() - fz.conj() * gz).norm();
        if !(value > 0.0) || d < 1e-12 * fz.norm() * gz.norm() {
            return Err(Error::DegeneratePair { z, value });
        }
    }
    Ok(())
}

/// `(a, b, A, B)` as fields. Exact derivatives are used when the generators
/// carry them.
pub fn characteristic_coefficients(f: &ScalarField, g: &ScalarField, stencil: &Stencil) -> Coefficients {
    let d = denominator(f, g);
    let (fc, gc) = (f.conj(), g.conj());
    let (fz, fzb) = (f.dz_field(stencil), f.dzbar_field(stencil));
    let (gz, gzb) = (g.dz_field(stencil), g.dzbar_field(stencil));
    Coefficients {
        a: fc.mul(&gzb).sub(&fzb.mul(&gc)).div(&d).scale_real(-1.0),
        b: f.mul(&gzb).sub(&fzb.mul(g)).div(&d),
        big_a: fc.mul(&gz).sub(&fz.mul(&gc)).div(&d).scale_real(-1.0),
        big_b: f.mul(&gz).sub(&fz.mul(g)).div(&d),
    }
}

/// `P f = f0 dz(f / f0)`.
pub fn op_p(f: &ScalarField, f0: &ScalarField, stencil: &Stencil) -> ScalarField {
    f0.mul(&f.div(f0).dz_field(stencil))
}

/// `S w = f0 A[w / f0]`, vanishing at `z0`.
pub fn op_s(w: &ScalarField, f0: &ScalarField, z0: C64, quad: &Quadrature) -> Result<ScalarField> {
    check_base(f0, z0)?;
    let inner = crate::integrate::antigradient_field(&w.div(f0), Antigradient::A, z0, quad)?;
    Ok(f0.mul(&inner).as_real())
}

/// `H Phi = 1/2 (f0 Abar[Phi / f0] + i f0^-1 Abar[i f0 Phi])`.
///
/// Defined when `conj(Phi)` solves the successor equation; `H(conj Wdot)`
/// recovers `W` up to `c1 f0 + i c2 / f0`.
pub fn op_h(phi: &ScalarField, f0: &ScalarField, z0: C64, quad: &Quadrature) -> Result<ScalarField> {
    check_base(f0, z0)?;
    let first = crate::integrate::antigradient_field(&phi.div(f0), Antigradient::Abar, z0, quad)?;
    let second = crate::integrate::antigradient_field(&f0.mul(phi).scale(I), Antigradient::Abar, z0, quad)?;
    Ok(f0.mul(&first).add(&second.div(f0).scale(I)).scale_real(0.5))
}

fn check_base(f0: &ScalarField, z0: C64) -> Result<()> {
    if !f0.domain().contains(z0) {
        return Err(Error::OutOfDomain { z: z0 });
    }
    Ok(())
}

/// Left side of the factorization `(dzbar + (f0_z/f0) C)(dz - f0_z/f0) phi`,
/// `C` complex conjugation. Equals `(Laplacian - nu) phi` for real `phi`.
pub fn factorized_operator(phi: &ScalarField, f0: &ScalarField, stencil: &Stencil) -> ScalarField {
    let log_dz = f0.dz_field(stencil).div(f0);
    let inner = phi.dz_field(stencil).sub(&log_dz.mul(phi));
    inner.dzbar_field(stencil).add(&log_dz.mul(&inner.conj()))
}
