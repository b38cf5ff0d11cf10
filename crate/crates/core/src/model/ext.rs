//! Extended reals with the conventions of the expected-total-reward setting:
//! `(+inf) - (+inf) = -inf` and `0 * inf = 0`.

use std::cmp::Ordering;
use std::fmt;

use serde::{Serialize, Serializer};

use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq)]
pub enum ExtReal<S> {
    NegInf,
    Finite(S),
    PosInf,
}

impl<S: Scalar> ExtReal<S> {
    pub fn zero() -> Self {
        ExtReal::Finite(S::zero())
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, ExtReal::Finite(_))
    }

    pub fn finite(&self) -> Option<&S> {
        match self {
            ExtReal::Finite(v) => Some(v),
            _ => None,
        }
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            ExtReal::NegInf => f64::NEG_INFINITY,
            ExtReal::Finite(v) => v.to_f64(),
            ExtReal::PosInf => f64::INFINITY,
        }
    }

    /// Sum of two nonnegative-or-finite values. Opposite infinities resolve
    /// to `-inf`, consistently with [`ext_combine`].
    pub fn add(&self, other: &Self) -> Self {
        use ExtReal::*;
        match (self, other) {
            (NegInf, _) | (_, NegInf) => NegInf,
            (PosInf, _) | (_, PosInf) => PosInf,
            (Finite(a), Finite(b)) => Finite(a.clone() + b.clone()),
        }
    }

    /// Product with a finite scalar, `0 * inf = 0`.
    pub fn scale(&self, k: &S) -> Self {
        use ExtReal::*;
        if k.is_zero() {
            return ExtReal::zero();
        }
        let positive = *k > S::zero();
        match self {
            Finite(v) => Finite(v.clone() * k.clone()),
            PosInf => {
                if positive {
                    PosInf
                } else {
                    NegInf
                }
            }
            NegInf => {
                if positive {
                    NegInf
                } else {
                    PosInf
                }
            }
        }
    }

    pub fn render(&self) -> String {
        match self {
            ExtReal::NegInf => "-inf".to_string(),
            ExtReal::Finite(v) => v.render(),
            ExtReal::PosInf => "+inf".to_string(),
        }
    }

    /// `self >= other - tol` (exact when `S` is exact).
    pub fn ge_tol(&self, other: &Self, tol: f64) -> bool {
        use ExtReal::*;
        match (self, other) {
            (PosInf, _) | (_, NegInf) => true,
            (NegInf, _) | (_, PosInf) => false,
            (Finite(a), Finite(b)) => !(b.clone() - a.clone()).is_pos_tol(tol),
        }
    }

    /// `self - other` for reporting margins; an infinite `self` or `-inf`
    /// `other` yields `+inf`.
    pub fn margin_over(&self, other: &Self) -> Self {
        use ExtReal::*;
        match (self, other) {
            (Finite(a), Finite(b)) => Finite(a.clone() - b.clone()),
            (PosInf, PosInf) | (NegInf, NegInf) => ExtReal::zero(),
            (PosInf, _) | (_, NegInf) => PosInf,
            (NegInf, _) | (_, PosInf) => NegInf,
        }
    }

    pub fn map<T: Scalar>(&self, f: impl Fn(&S) -> T) -> ExtReal<T> {
        match self {
            ExtReal::NegInf => ExtReal::NegInf,
            ExtReal::Finite(v) => ExtReal::Finite(f(v)),
            ExtReal::PosInf => ExtReal::PosInf,
        }
    }
}

/// `pos - neg` for nonnegative extended reals, with `(+inf) - (+inf) = -inf`.
pub fn ext_combine<S: Scalar>(pos: &ExtReal<S>, neg: &ExtReal<S>) -> ExtReal<S> {
    use ExtReal::*;
    match (pos, neg) {
        (_, PosInf) => NegInf,
        (PosInf, _) => PosInf,
        (Finite(p), Finite(n)) => Finite(p.clone() - n.clone()),
        // Negative arguments are outside the domain; treat -inf as absorbing.
        (NegInf, _) | (_, NegInf) => NegInf,
    }
}

impl<S: Scalar> PartialOrd for ExtReal<S> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        use ExtReal::*;
        match (self, other) {
            (NegInf, NegInf) | (PosInf, PosInf) => Some(Ordering::Equal),
            (NegInf, _) | (_, PosInf) => Some(Ordering::Less),
            (_, NegInf) | (PosInf, _) => Some(Ordering::Greater),
            (Finite(a), Finite(b)) => a.partial_cmp(b),
        }
    }
}

impl<S: Scalar> fmt::Display for ExtReal<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

impl<S: Scalar> Serialize for ExtReal<S> {
    fn serialize<Z: Serializer>(&self, s: Z) -> Result<Z::Ok, Z::Error> {
        s.serialize_str(&self.render())
    }
}
