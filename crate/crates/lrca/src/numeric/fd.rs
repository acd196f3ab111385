//! Central finite differences for gradients and Hessians, used to cross-check
//! analytic scores and as a fallback when a model supplies no Hessian.

use super::matrix::{SymMatrix, Vector};
use crate::error::{Error, Result};

/// Default relative step: cube root of machine epsilon.
pub fn default_step() -> f64 {
    f64::EPSILON.cbrt()
}

fn step_for(theta_i: f64, h: f64) -> f64 {
    h * theta_i.abs().max(1.0)
}

/// Central-difference gradient of `f` at `theta`.
pub fn fd_gradient<F>(f: F, theta: &Vector, h: f64) -> Result<Vector>
where
    F: Fn(&Vector) -> f64,
{
    assert!(h > 0.0, "step must be positive");
    let d = theta.dim();
    let mut g = Vector::zeros(d);
    for i in 0..d {
        let hi = step_for(theta[i], h);
        let mut up = theta.clone();
        let mut dn = theta.clone();
        up[i] += hi;
        dn[i] -= hi;
        let (fu, fd) = (f(&up), f(&dn));
        if !fu.is_finite() || !fd.is_finite() {
            return Err(Error::NonFiniteEvaluation("fd_gradient stencil".into()));
        }
        g[i] = (fu - fd) / (2.0 * hi);
    }
    Ok(g)
}

/// Central-difference Hessian of `f` at `theta`.
pub fn fd_hessian<F>(f: F, theta: &Vector, h: f64) -> Result<SymMatrix>
where
    F: Fn(&Vector) -> f64,
{
    assert!(h > 0.0, "step must be positive");
    let d = theta.dim();
    let f0 = f(theta);
    if !f0.is_finite() {
        return Err(Error::NonFiniteEvaluation("fd_hessian center".into()));
    }
    let mut m = vec![vec![0.0; d]; d];
    for i in 0..d {
        let hi = step_for(theta[i], h);
        for j in i..d {
            let hj = step_for(theta[j], h);
            let v = if i == j {
                let mut up = theta.clone();
                let mut dn = theta.clone();
                up[i] += hi;
                dn[i] -= hi;
                (f(&up) - 2.0 * f0 + f(&dn)) / (hi * hi)
            } else {
                let mut pp = theta.clone();
                let mut pm = theta.clone();
                let mut mp = theta.clone();
                let mut mm = theta.clone();
                pp[i] += hi;
                pp[j] += hj;
                pm[i] += hi;
                pm[j] -= hj;
                mp[i] -= hi;
                mp[j] += hj;
                mm[i] -= hi;
                mm[j] -= hj;
                (f(&pp) - f(&pm) - f(&mp) + f(&mm)) / (4.0 * hi * hj)
            };
            if !v.is_finite() {
                return Err(Error::NonFiniteEvaluation("fd_hessian stencil".into()));
            }
            m[i][j] = v;
            m[j][i] = v;
        }
    }
    SymMatrix::from_fn(d, |i, j| m[i][j])
}
