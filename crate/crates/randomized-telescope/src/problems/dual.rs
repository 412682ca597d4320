use std::ops::{Add, Div, Mul, Neg, Sub};

/// Number type a solver or loss can be generic over: plain `f64` for value
/// evaluation, [`Dual`] for forward-mode derivatives. `scale` multiplies by a
/// constant without lifting it into the type, which keeps constants like step
/// sizes out of the tangent arithmetic.
pub trait Scalar:
    Copy + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self> + Neg<Output = Self>
{
    fn constant(x: f64) -> Self;
    fn scale(self, c: f64) -> Self;
    /// The plain value, dropping any derivative information.
    fn value(self) -> f64;
}

impl Scalar for f64 {
    fn constant(x: f64) -> Self {
        x
    }

    fn scale(self, c: f64) -> Self {
        self * c
    }

    fn value(self) -> f64 {
        self
    }
}

/// Forward-mode dual number carrying `K` tangents: a value together with its
/// derivatives with respect to `K` chosen inputs, propagated exactly through
/// arithmetic by the chain rule.
///
/// Seed inputs with [`Dual::variable`] (one per tangent slot), compute as
/// usual, and read derivatives off the result's `tan` array. With all
/// parameter counts here at most 6, forward mode over a handful of tangents
/// beats building any expression graph.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dual<const K: usize> {
    pub val: f64,
    pub tan: [f64; K],
}

impl<const K: usize> Dual<K> {
    pub fn constant(val: f64) -> Self {
        Self {
            val,
            tan: [0.0; K],
        }
    }

    /// A value that is the `slot`-th differentiation variable.
    pub fn variable(val: f64, slot: usize) -> Self {
        let mut tan = [0.0; K];
        tan[slot] = 1.0;
        Self { val, tan }
    }

    pub fn exp(self) -> Self {
        let e = self.val.exp();
        Self {
            val: e,
            tan: self.tan.map(|t| t * e),
        }
    }

    pub fn ln(self) -> Self {
        Self {
            val: self.val.ln(),
            tan: self.tan.map(|t| t / self.val),
        }
    }

    /// Absolute value with derivative `sign(x)`, taking `sign(0) = +1` so the
    /// reflection `|μ + σε|` stays deterministic on the measure-zero tie.
    pub fn abs(self) -> Self {
        let s = if self.val < 0.0 { -1.0 } else { 1.0 };
        Self {
            val: self.val * s,
            tan: self.tan.map(|t| t * s),
        }
    }

    pub fn powi(self, n: i32) -> Self {
        let dv = f64::from(n) * self.val.powi(n - 1);
        Self {
            val: self.val.powi(n),
            tan: self.tan.map(|t| t * dv),
        }
    }
}

impl<const K: usize> Add for Dual<K> {
    type Output = Self;

    fn add(self, rhs: Self) -> Self {
        let mut tan = self.tan;
        for (t, r) in tan.iter_mut().zip(rhs.tan) {
            *t += r;
        }
        Self {
            val: self.val + rhs.val,
            tan,
        }
    }
}

impl<const K: usize> Sub for Dual<K> {
    type Output = Self;

    fn sub(self, rhs: Self) -> Self {
        let mut tan = self.tan;
        for (t, r) in tan.iter_mut().zip(rhs.tan) {
            *t -= r;
        }
        Self {
            val: self.val - rhs.val,
            tan,
        }
    }
}

impl<const K: usize> Mul for Dual<K> {
    type Output = Self;

    fn mul(self, rhs: Self) -> Self {
        let mut tan = [0.0; K];
        for (t, (a, b)) in tan.iter_mut().zip(self.tan.iter().zip(rhs.tan)) {
            *t = a * rhs.val + b * self.val;
        }
        Self {
            val: self.val * rhs.val,
            tan,
        }
    }
}

impl<const K: usize> Div for Dual<K> {
    type Output = Self;

    fn div(self, rhs: Self) -> Self {
        let inv = 1.0 / rhs.val;
        let val = self.val * inv;
        let mut tan = [0.0; K];
        for (t, (a, b)) in tan.iter_mut().zip(self.tan.iter().zip(rhs.tan)) {
            *t = (a - val * b) * inv;
        }
        Self { val, tan }
    }
}

impl<const K: usize> Neg for Dual<K> {
    type Output = Self;

    fn neg(self) -> Self {
        Self {
            val: -self.val,
            tan: self.tan.map(|t| -t),
        }
    }
}

impl<const K: usize> Scalar for Dual<K> {
    fn constant(x: f64) -> Self {
        Dual::constant(x)
    }

    fn scale(self, c: f64) -> Self {
        Self {
            val: self.val * c,
            tan: self.tan.map(|t| t * c),
        }
    }

    fn value(self) -> f64 {
        self.val
    }
}
