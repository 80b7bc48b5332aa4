//! Field combinators. Each one propagates exact derivatives when all of its
//! operands have them.

use std::sync::Arc;

use super::{FieldFn, FieldRef, C64};

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
const ONE: C64 = C64 { re: 1.0, im: 0.0 };

fn is_zero(f: &FieldRef) -> bool {
    f.as_constant() == Some(ZERO)
}

#[derive(Clone, Copy, Debug)]
pub struct Constant(pub C64);

impl FieldFn for Constant {
    fn value(&self, _z: C64) -> C64 {
        self.0
    }
    fn dz(&self) -> Option<FieldRef> {
        Some(Arc::new(Constant(ZERO)))
    }
    fn dzbar(&self) -> Option<FieldRef> {
        Some(Arc::new(Constant(ZERO)))
    }
    fn as_constant(&self) -> Option<C64> {
        Some(self.0)
    }
}

type Closure = Arc<dyn Fn(C64) -> C64 + Send + Sync>;

/// A plain closure, optionally annotated with exact derivatives.
#[derive(Clone)]
pub struct ClosureField {
    f: Closure,
    dz: Option<FieldRef>,
    dzbar: Option<FieldRef>,
}

impl ClosureField {
    pub fn new<F>(f: F) -> Self
    where
        F: Fn(C64) -> C64 + Send + Sync + 'static,
    {
        ClosureField { f: Arc::new(f), dz: None, dzbar: None }
    }

    pub fn with_derivatives(mut self, dz: FieldRef, dzbar: FieldRef) -> Self {
        self.dz = Some(dz);
        self.dzbar = Some(dzbar);
        self
    }
}

impl FieldFn for ClosureField {
    fn value(&self, z: C64) -> C64 {
        (self.f)(z)
    }
    fn dz(&self) -> Option<FieldRef> {
        self.dz.clone()
    }
    fn dzbar(&self) -> Option<FieldRef> {
        self.dzbar.clone()
    }
}

/// Wraps any field with externally supplied exact derivatives.
pub struct Annotated {
    pub inner: FieldRef,
    pub dz: FieldRef,
    pub dzbar: FieldRef,
}

impl FieldFn for Annotated {
    fn value(&self, z: C64) -> C64 {
        self.inner.value(z)
    }
    fn dz(&self) -> Option<FieldRef> {
        Some(self.dz.clone())
    }
    fn dzbar(&self) -> Option<FieldRef> {
        Some(self.dzbar.clone())
    }
    fn fd_depth(&self) -> u32 {
        self.inner.fd_depth()
    }
    fn sampled(&self) -> bool {
        self.inner.sampled()
    }
}

pub struct Sum(pub FieldRef, pub FieldRef);

impl FieldFn for Sum {
    fn value(&self, z: C64) -> C64 {
        self.0.value(z) + self.1.value(z)
    }
    fn dz(&self) -> Option<FieldRef> {
        Some(sum(self.0.dz()?, self.1.dz()?))
    }
    fn dzbar(&self) -> Option<FieldRef> {
        Some(sum(self.0.dzbar()?, self.1.dzbar()?))
    }
    fn fd_depth(&self) -> u32 {
        self.0.fd_depth().max(self.1.fd_depth())
    }
    fn sampled(&self) -> bool {
        self.0.sampled() || self.1.sampled()
    }
}

pub struct Product(pub FieldRef, pub FieldRef);

impl Product {
    fn rule(&self, da: FieldRef, db: FieldRef) -> FieldRef {
        sum(product(da, self.1.clone()), product(self.0.clone(), db))
    }
}

impl FieldFn for Product {
    fn value(&self, z: C64) -> C64 {
        self.0.value(z) * self.1.value(z)
    }
    fn dz(&self) -> Option<FieldRef> {
        Some(self.rule(self.0.dz()?, self.1.dz()?))
    }
    fn dzbar(&self) -> Option<FieldRef> {
        Some(self.rule(self.0.dzbar()?, self.1.dzbar()?))
    }
    fn fd_depth(&self) -> u32 {
        self.0.fd_depth().max(self.1.fd_depth())
    }
    fn sampled(&self) -> bool {
        self.0.sampled() || self.1.sampled()
    }
}

pub struct Quotient(pub FieldRef, pub FieldRef);

impl Quotient {
    fn rule(&self, da: FieldRef, db: FieldRef) -> FieldRef {
        // (a/b)' = a'/b - a b'/b^2
        let first = quotient(da, self.1.clone());
        let second = product(self.0.clone(), product(db, powi(self.1.clone(), -2)));
        sum(first, scaled(-ONE, second))
    }
}

impl FieldFn for Quotient {
    fn value(&self, z: C64) -> C64 {
        self.0.value(z) / self.1.value(z)
    }
    fn dz(&self) -> Option<FieldRef> {
        Some(self.rule(self.0.dz()?, self.1.dz()?))
    }
    fn dzbar(&self) -> Option<FieldRef> {
        Some(self.rule(self.0.dzbar()?, self.1.dzbar()?))
    }
    fn fd_depth(&self) -> u32 {
        self.0.fd_depth().max(self.1.fd_depth())
    }
    fn sampled(&self) -> bool {
        self.0.sampled() || self.1.sampled()
    }
}

pub struct Conjugate(pub FieldRef);

impl FieldFn for Conjugate {
    fn value(&self, z: C64) -> C64 {
        self.0.value(z).conj()
    }
    fn dz(&self) -> Option<FieldRef> {
        Some(conj(self.0.dzbar()?))
    }
    fn dzbar(&self) -> Option<FieldRef> {
        Some(conj(self.0.dz()?))
    }
    fn fd_depth(&self) -> u32 {
        self.0.fd_depth()
    }
    fn sampled(&self) -> bool {
        self.0.sampled()
    }
    fn as_constant(&self) -> Option<C64> {
        self.0.as_constant().map(|c| c.conj())
    }
}

pub struct Scaled(pub C64, pub FieldRef);

impl FieldFn for Scaled {
    fn value(&self, z: C64) -> C64 {
        self.0 * self.1.value(z)
    }
    fn dz(&self) -> Option<FieldRef> {
        Some(scaled(self.0, self.1.dz()?))
    }
    fn dzbar(&self) -> Option<FieldRef> {
        Some(scaled(self.0, self.1.dzbar()?))
    }
    fn fd_depth(&self) -> u32 {
        self.1.fd_depth()
    }
    fn sampled(&self) -> bool {
        self.1.sampled()
    }
    fn as_constant(&self) -> Option<C64> {
        self.1.as_constant().map(|c| c * self.0)
    }
}

pub struct IntPower(pub FieldRef, pub i32);

impl IntPower {
    fn rule(&self, da: FieldRef) -> FieldRef {
        let k = self.1;
        scaled(C64::new(k as f64, 0.0), product(powi(self.0.clone(), k - 1), da))
    }
}

impl FieldFn for IntPower {
    fn value(&self, z: C64) -> C64 {
        self.0.value(z).powi(self.1)
    }
    fn dz(&self) -> Option<FieldRef> {
        Some(self.rule(self.0.dz()?))
    }
    fn dzbar(&self) -> Option<FieldRef> {
        Some(self.rule(self.0.dzbar()?))
    }
    fn fd_depth(&self) -> u32 {
        self.0.fd_depth()
    }
    fn sampled(&self) -> bool {
        self.0.sampled()
    }
}

pub struct Exponential(pub FieldRef);

impl FieldFn for Exponential {
    fn value(&self, z: C64) -> C64 {
        self.0.value(z).exp()
    }
    fn dz(&self) -> Option<FieldRef> {
        Some(product(Arc::new(Exponential(self.0.clone())), self.0.dz()?))
    }
    fn dzbar(&self) -> Option<FieldRef> {
        Some(product(Arc::new(Exponential(self.0.clone())), self.0.dzbar()?))
    }
    fn fd_depth(&self) -> u32 {
        self.0.fd_depth()
    }
    fn sampled(&self) -> bool {
        self.0.sampled()
    }
}

// Smart constructors: fold constants so that repeated exact differentiation
// does not grow dead subtrees.

pub(crate) fn sum(a: FieldRef, b: FieldRef) -> FieldRef {
    match (a.as_constant(), b.as_constant()) {
        (Some(x), Some(y)) => Arc::new(Constant(x + y)),
        (Some(x), _) if x == ZERO => b,
        (_, Some(y)) if y == ZERO => a,
        _ => Arc::new(Sum(a, b)),
    }
}

pub(crate) fn product(a: FieldRef, b: FieldRef) -> FieldRef {
    if is_zero(&a) || is_zero(&b) {
        return Arc::new(Constant(ZERO));
    }
    match (a.as_constant(), b.as_constant()) {
        (Some(x), Some(y)) => Arc::new(Constant(x * y)),
        (Some(x), _) => scaled(x, b),
        (_, Some(y)) => scaled(y, a),
        _ => Arc::new(Product(a, b)),
    }
}

pub(crate) fn quotient(a: FieldRef, b: FieldRef) -> FieldRef {
    if is_zero(&a) {
        return Arc::new(Constant(ZERO));
    }
    match (a.as_constant(), b.as_constant()) {
        (Some(x), Some(y)) => Arc::new(Constant(x / y)),
        (_, Some(y)) => scaled(ONE / y, a),
        (Some(x), _) => scaled(x, powi(b, -1)),
        _ => Arc::new(Quotient(a, b)),
    }
}

pub(crate) fn scaled(c: C64, a: FieldRef) -> FieldRef {
    if c == ONE {
        return a;
    }
    if c == ZERO {
        return Arc::new(Constant(ZERO));
    }
    match a.as_constant() {
        Some(x) => Arc::new(Constant(c * x)),
        None => Arc::new(Scaled(c, a)),
    }
}

pub(crate) fn conj(a: FieldRef) -> FieldRef {
    match a.as_constant() {
        Some(x) => Arc::new(Constant(x.conj())),
        None => Arc::new(Conjugate(a)),
    }
}

pub(crate) fn powi(a: FieldRef, k: i32) -> FieldRef {
    match (k, a.as_constant()) {
        (0, _) => Arc::new(Constant(ONE)),
        (1, _) => a,
        (_, Some(x)) => Arc::new(Constant(x.powi(k))),
        _ => Arc::new(IntPower(a, k)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn z_field() -> FieldRef {
        Arc::new(ClosureField::new(|z| z).with_derivatives(Arc::new(Constant(C64::new(2.0, 0.0))), Arc::new(Constant(ZERO))))
    }

    #[test]
    fn product_rule_on_z_squared() {
        let z = z_field();
        let sq = product(z.clone(), z);
        let p = C64::new(0.3, -0.7);
        assert!((sq.dz().unwrap().value(p) - 4.0 * p).norm() < 1e-15);
        assert_eq!(sq.dzbar().unwrap().value(p), ZERO);
    }

    #[test]
    fn modulus_squared_has_laplacian_four() {
        let z = z_field();
        let m = product(z.clone(), conj(z));
        let p = C64::new(0.3, -0.7);
        // dz |z|^2 = 2 conj(z), dzbar dz |z|^2 = 4
        assert!((m.dz().unwrap().value(p) - 2.0 * p.conj()).norm() < 1e-15);
        let lap = m.dz().unwrap().dzbar().unwrap().value(p);
        assert!((lap - C64::new(4.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn quotient_and_negative_power_agree() {
        let z = z_field();
        let one: FieldRef = Arc::new(Constant(ONE));
        let a = quotient(one, z.clone());
        let b = powi(z, -1);
        let p = C64::new(0.5, 0.25);
        let da = a.dz().unwrap().value(p);
        let db = b.dz().unwrap().value(p);
        assert!((da - db).norm() < 1e-14);
        assert!((da + 2.0 / (p * p)).norm() < 1e-13);
    }

    #[test]
    fn constants_fold() {
        let c: FieldRef = Arc::new(Constant(C64::new(2.0, 1.0)));
        let s = sum(c.clone(), c.clone());
        assert_eq!(s.as_constant(), Some(C64::new(4.0, 2.0)));
        assert_eq!(product(c, Arc::new(Constant(ZERO))).as_constant(), Some(ZERO));
    }
}
