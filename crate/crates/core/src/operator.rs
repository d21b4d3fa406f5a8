//! Minimal linear-operator abstraction for the iteration drivers and the
//! power-method norm estimator.

use num_complex::Complex64;

use crate::field::Field;

/// A linear map on fields. `apply_adjoint` returns `None` when no adjoint
/// is implemented; the norm estimator then falls back to growth estimation.
pub trait LinearOp {
    fn apply(&self, field: &Field) -> Field;

    fn apply_adjoint(&self, _field: &Field) -> Option<Field> {
        None
    }
}

impl<T: LinearOp + ?Sized> LinearOp for &T {
    fn apply(&self, field: &Field) -> Field {
        (**self).apply(field)
    }

    fn apply_adjoint(&self, field: &Field) -> Option<Field> {
        (**self).apply_adjoint(field)
    }
}

/// Wrap a closure as an operator (no adjoint).
pub struct FnOp<F: Fn(&Field) -> Field> {
    f: F,
}

impl<F: Fn(&Field) -> Field> FnOp<F> {
    pub fn new(f: F) -> Self {
        Self { f }
    }
}

impl<F: Fn(&Field) -> Field> LinearOp for FnOp<F> {
    fn apply(&self, field: &Field) -> Field {
        (self.f)(field)
    }
}

/// Wrap a closure pair as an operator with adjoint.
pub struct FnOpWithAdjoint<F, G>
where
    F: Fn(&Field) -> Field,
    G: Fn(&Field) -> Field,
{
    f: F,
    adj: G,
}

impl<F, G> FnOpWithAdjoint<F, G>
where
    F: Fn(&Field) -> Field,
    G: Fn(&Field) -> Field,
{
    pub fn new(f: F, adj: G) -> Self {
        Self { f, adj }
    }
}

impl<F, G> LinearOp for FnOpWithAdjoint<F, G>
where
    F: Fn(&Field) -> Field,
    G: Fn(&Field) -> Field,
{
    fn apply(&self, field: &Field) -> Field {
        (self.f)(field)
    }

    fn apply_adjoint(&self, field: &Field) -> Option<Field> {
        Some((self.adj)(field))
    }
}

pub struct ZeroOp;

impl LinearOp for ZeroOp {
    fn apply(&self, field: &Field) -> Field {
        Field::zeros(field.geometry().clone(), field.components())
    }

    fn apply_adjoint(&self, field: &Field) -> Option<Field> {
        Some(self.apply(field))
    }
}

pub struct IdentityOp;

impl LinearOp for IdentityOp {
    fn apply(&self, field: &Field) -> Field {
        field.clone()
    }

    fn apply_adjoint(&self, field: &Field) -> Option<Field> {
        Some(field.clone())
    }
}

/// `a * I`.
pub struct ScalarOp(pub Complex64);

impl LinearOp for ScalarOp {
    fn apply(&self, field: &Field) -> Field {
        field.scaled(self.0)
    }

    fn apply_adjoint(&self, field: &Field) -> Option<Field> {
        Some(field.scaled(self.0.conj()))
    }
}
