use crate::error::{Error, Result};
use crate::problems::Scalar;

// States beyond this magnitude are treated as numerically diverged rather
// than integrated further; callers turn that into a likelihood penalty.
const BLOW_UP_LIMIT: f64 = 1e8;

/// Classical fourth-order Runge-Kutta on an autonomous system, returning the
/// full trajectory on a uniform grid of `points` states (the endpoints
/// included, so the step size is `(t1 − t0) / (points − 1)`).
///
/// Generic over the scalar type: run it on `f64` for a plain solve or on
/// [`Dual`](crate::problems::Dual) states to carry derivatives of the whole
/// trajectory with respect to initial conditions or parameters baked into
/// `rhs`.
///
/// Fails with [`Error::OdeBlowUp`] as soon as any state component leaves
/// `±1e8` or stops being finite.
pub fn rk4_solve<S: Scalar, const D: usize>(
    rhs: impl Fn(&[S; D]) -> [S; D],
    u0: [S; D],
    t0: f64,
    t1: f64,
    points: usize,
) -> Result<Vec<[S; D]>> {
    if points < 2 {
        return Err(Error::InvalidParameter(format!(
            "need at least two grid points, got {points}"
        )));
    }
    if !(t1 > t0) {
        return Err(Error::InvalidParameter(format!(
            "time span must be increasing, got [{t0}, {t1}]"
        )));
    }
    let h = (t1 - t0) / (points - 1) as f64;
    let mut trajectory = Vec::with_capacity(points);
    trajectory.push(u0);
    let mut u = u0;
    for step in 1..points {
        let k1 = rhs(&u);
        let k2 = rhs(&offset(&u, &k1, h / 2.0));
        let k3 = rhs(&offset(&u, &k2, h / 2.0));
        let k4 = rhs(&offset(&u, &k3, h));
        for i in 0..D {
            let slope = k1[i] + k2[i].scale(2.0) + k3[i].scale(2.0) + k4[i];
            u[i] = u[i] + slope.scale(h / 6.0);
        }
        for s in &u {
            let v = s.value();
            if !v.is_finite() || v.abs() > BLOW_UP_LIMIT {
                return Err(Error::OdeBlowUp { step });
            }
        }
        trajectory.push(u);
    }
    Ok(trajectory)
}

fn offset<S: Scalar, const D: usize>(u: &[S; D], k: &[S; D], h: f64) -> [S; D] {
    let mut out = *u;
    for i in 0..D {
        out[i] = u[i] + k[i].scale(h);
    }
    out
}
