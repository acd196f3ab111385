//! Box-constrained maximization of criterion functions: projected quasi-Newton
//! ascent with backtracking line search, plus restricted fits with components
//! pinned or a single linear restriction handled by reparameterization.

use crate::error::{Error, Result};
use crate::numeric::{Matrix, Vector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Componentwise box constraints; infinite entries mean unbounded.
#[derive(Debug, Clone)]
pub struct Bounds {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

/// A coordinate counts as active when within this distance of its bound.
const ACTIVE_TOL: f64 = 1e-12;

impl Bounds {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::DimensionMismatch("bounds length mismatch".into()));
        }
        if lower.iter().zip(&upper).any(|(l, u)| l > u || l.is_nan() || u.is_nan()) {
            return Err(Error::ConfigInvalid("lower bound exceeds upper bound".into()));
        }
        Ok(Bounds { lower, upper })
    }

    pub fn unbounded(dim: usize) -> Self {
        Bounds { lower: vec![f64::NEG_INFINITY; dim], upper: vec![f64::INFINITY; dim] }
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn project(&self, theta: &Vector) -> Vector {
        Vector::from(
            theta
                .as_slice()
                .iter()
                .zip(self.lower.iter().zip(&self.upper))
                .map(|(&x, (&l, &u))| x.clamp(l, u))
                .collect::<Vec<_>>(),
        )
    }

    pub fn contains(&self, theta: &Vector) -> bool {
        theta
            .as_slice()
            .iter()
            .zip(self.lower.iter().zip(&self.upper))
            .all(|(&x, (&l, &u))| x >= l && x <= u)
    }

    fn active_set(&self, theta: &Vector) -> Vec<usize> {
        (0..self.dim())
            .filter(|&i| {
                (theta[i] - self.lower[i]).abs() <= ACTIVE_TOL
                    || (self.upper[i] - theta[i]).abs() <= ACTIVE_TOL
            })
            .collect()
    }
}

/// Outcome of a maximization run.
#[derive(Debug, Clone)]
pub struct FitResult {
    pub point: Vector,
    pub value: f64,
    pub converged: bool,
    pub iterations: usize,
    pub active_set: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct MaximizeOpts {
    pub max_iter: usize,
    /// Projected-gradient convergence tolerance (relative to max(1, |theta|)).
    pub tol: f64,
    /// Number of additional jittered starting points.
    pub multistart: usize,
    /// Relative jitter scale for multistart.
    pub jitter: f64,
    pub seed: u64,
}

impl Default for MaximizeOpts {
    fn default() -> Self {
        MaximizeOpts { max_iter: 500, tol: 1e-8, multistart: 0, jitter: 0.1, seed: 0 }
    }
}

const ARMIJO_C1: f64 = 1e-4;
const SHRINK: f64 = 0.5;

/// Finite-difference gradient that never leaves the box: one-sided at bounds.
fn bounded_fd_gradient<F: Fn(&Vector) -> f64>(
    f: &F,
    theta: &Vector,
    bounds: &Bounds,
) -> Result<Vector> {
    let h = crate::numeric::default_step();
    let d = theta.dim();
    let mut g = Vector::zeros(d);
    for i in 0..d {
        let hi = h * theta[i].abs().max(1.0);
        let up_x = (theta[i] + hi).min(bounds.upper[i]);
        let dn_x = (theta[i] - hi).max(bounds.lower[i]);
        if up_x == dn_x {
            continue; // coordinate fixed by the box
        }
        let mut up = theta.clone();
        let mut dn = theta.clone();
        up[i] = up_x;
        dn[i] = dn_x;
        let (fu, fd) = (f(&up), f(&dn));
        if !fu.is_finite() || !fd.is_finite() {
            return Err(Error::NonFiniteEvaluation("optimizer gradient stencil".into()));
        }
        g[i] = (fu - fd) / (up_x - dn_x);
    }
    Ok(g)
}

struct Bfgs {
    inv: Matrix,
}

impl Bfgs {
    fn reset(d: usize) -> Self {
        Bfgs { inv: Matrix::identity(d) }
    }

    /// Standard inverse-BFGS update for the minimization of -f.
    fn update(&mut self, s: &Vector, y: &Vector) {
        let sy = s.dot(y);
        if sy <= 1e-12 * s.norm2() * y.norm2() || sy == 0.0 {
            return;
        }
        let d = s.dim();
        let rho = 1.0 / sy;
        let hy = self.inv.mul_vec(y);
        let yhy = y.dot(&hy);
        let mut new = self.inv.clone();
        for i in 0..d {
            for j in 0..d {
                new[(i, j)] += (1.0 + rho * yhy) * rho * s[i] * s[j]
                    - rho * (s[i] * hy[j] + hy[i] * s[j]);
            }
        }
        self.inv = new;
    }

    fn direction(&self, g: &Vector, free: &[bool]) -> Vector {
        let d = g.dim();
        let mut masked = Vector::zeros(d);
        for i in 0..d {
            if free[i] {
                masked[i] = g[i];
            }
        }
        let mut dir = self.inv.mul_vec(&masked);
        for i in 0..d {
            if !free[i] {
                dir[i] = 0.0;
            }
        }
        dir
    }
}

fn maximize_single<F, G>(
    f: &F,
    grad: Option<&G>,
    theta0: &Vector,
    bounds: &Bounds,
    opts: &MaximizeOpts,
) -> Result<FitResult>
where
    F: Fn(&Vector) -> f64,
    G: Fn(&Vector) -> Result<Vector>,
{
    let d = theta0.dim();
    let mut theta = bounds.project(theta0);
    let mut fval = f(&theta);
    if !fval.is_finite() {
        return Err(Error::NonFiniteEvaluation("criterion at starting point".into()));
    }
    let eval_grad = |t: &Vector| -> Result<Vector> {
        match grad {
            Some(g) => g(t),
            None => bounded_fd_gradient(f, t, bounds),
        }
    };

    let mut g = eval_grad(&theta)?;
    let mut bfgs = Bfgs::reset(d);
    let mut prev_active: Vec<usize> = bounds.active_set(&theta);
    let mut converged = false;
    let mut iterations = 0;

    for iter in 0..opts.max_iter {
        iterations = iter;
        let pg = bounds.project(&theta.add(&g)).sub(&theta);
        if pg.norm_inf() <= opts.tol * theta.norm_inf().max(1.0) {
            converged = true;
            break;
        }

        // coordinates pinned by the box where the gradient pushes outward
        let free: Vec<bool> = (0..d)
            .map(|i| {
                !(((theta[i] - bounds.lower[i]).abs() <= ACTIVE_TOL && g[i] < 0.0)
                    || ((bounds.upper[i] - theta[i]).abs() <= ACTIVE_TOL && g[i] > 0.0))
            })
            .collect();
        let active: Vec<usize> = (0..d).filter(|&i| !free[i]).collect();
        if active != prev_active {
            bfgs = Bfgs::reset(d);
            prev_active = active;
        }

        let mut dir = bfgs.direction(&g, &free);
        if dir.dot(&g) <= 1e-12 * dir.norm2() * g.norm2() {
            // not an ascent direction; fall back to the projected gradient
            bfgs = Bfgs::reset(d);
            dir = bfgs.direction(&g, &free);
        }
        if dir.norm_inf() == 0.0 {
            // every coordinate pinned and pushing outward
            converged = true;
            break;
        }

        // backtracking along the projected arc
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let cand = bounds.project(&theta.add(&dir.scale(t)));
            let step = cand.sub(&theta);
            if step.norm_inf() == 0.0 {
                break;
            }
            let fc = f(&cand);
            let slope = g.dot(&step);
            let target = if slope > 0.0 { fval + ARMIJO_C1 * slope } else { fval };
            if fc.is_finite() && fc > target {
                accepted = Some((cand, fc));
                break;
            }
            t *= SHRINK;
        }
        let Some((next, fnext)) = accepted else {
            // no uphill step found along this direction
            let pg_now = bounds.project(&theta.add(&g)).sub(&theta);
            converged = pg_now.norm_inf() <= (opts.tol * 100.0) * theta.norm_inf().max(1.0);
            break;
        };

        let g_next = eval_grad(&next)?;
        let s = next.sub(&theta);
        // y for the minimization of -f, masked to the free coordinates: the
        // step carries no information about curvature along pinned directions,
        // and leaking their gradient change corrupts the inverse estimate
        let mut y = g.sub(&g_next);
        for i in 0..d {
            if !free[i] {
                y[i] = 0.0;
            }
        }
        bfgs.update(&s, &y);
        theta = next;
        fval = fnext;
        g = g_next;
    }

    Ok(FitResult {
        active_set: bounds.active_set(&theta),
        point: theta,
        value: fval,
        converged,
        iterations,
    })
}

/// Maximizes `f` over the box, starting at `theta0`. The optional analytic
/// gradient is used when given, otherwise a bound-respecting finite-difference
/// gradient. With `opts.multistart > 0`, additional jittered starts are tried
/// and the best converged result wins.
pub fn maximize_box<F, G>(
    f: &F,
    grad: Option<&G>,
    theta0: &Vector,
    bounds: &Bounds,
    opts: &MaximizeOpts,
) -> Result<FitResult>
where
    F: Fn(&Vector) -> f64,
    G: Fn(&Vector) -> Result<Vector>,
{
    if theta0.dim() != bounds.dim() {
        return Err(Error::DimensionMismatch("start vs bounds".into()));
    }
    if !bounds.contains(theta0) {
        return Err(Error::ConfigInvalid("starting point outside bounds".into()));
    }
    let mut best = maximize_single(f, grad, theta0, bounds, opts)?;
    if opts.multistart > 0 {
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        for _ in 0..opts.multistart {
            let jittered = Vector::from(
                theta0
                    .as_slice()
                    .iter()
                    .map(|&x| x + opts.jitter * x.abs().max(1.0) * rng.gen_range(-1.0..1.0))
                    .collect::<Vec<_>>(),
            );
            let start = bounds.project(&jittered);
            if let Ok(r) = maximize_single(f, grad, &start, bounds, opts) {
                if (r.converged && !best.converged) || (r.converged == best.converged && r.value > best.value) {
                    best = r;
                }
            }
        }
    }
    Ok(best)
}

/// Maximizes over the free coordinates with the listed coordinates pinned.
/// The returned point embeds the fixed values.
pub fn maximize_fixed<F, G>(
    f: &F,
    grad: Option<&G>,
    theta0: &Vector,
    bounds: &Bounds,
    fixed: &[(usize, f64)],
    opts: &MaximizeOpts,
) -> Result<FitResult>
where
    F: Fn(&Vector) -> f64,
    G: Fn(&Vector) -> Result<Vector>,
{
    let d = theta0.dim();
    for &(i, v) in fixed {
        if i >= d {
            return Err(Error::DimensionMismatch(format!("fixed index {i} out of range")));
        }
        if v < bounds.lower()[i] || v > bounds.upper()[i] {
            return Err(Error::ConfigInvalid(format!("fixed value {v} outside bounds")));
        }
    }
    let mut start = theta0.clone();
    for &(i, v) in fixed {
        start[i] = v;
    }
    if fixed.len() == d {
        let value = f(&start);
        if !value.is_finite() {
            return Err(Error::NonFiniteEvaluation("criterion at pinned point".into()));
        }
        return Ok(FitResult {
            active_set: bounds.active_set(&start),
            point: start,
            value,
            converged: true,
            iterations: 0,
        });
    }
    // pin by collapsing each fixed coordinate's box to a point
    let mut lower = bounds.lower().to_vec();
    let mut upper = bounds.upper().to_vec();
    for &(i, v) in fixed {
        lower[i] = v;
        upper[i] = v;
    }
    let pinned = Bounds::new(lower, upper)?;
    let mut result = maximize_box(f, grad, &start, &pinned, opts)?;
    // active set is reported against the caller's box, not the pinned one
    result.active_set = bounds.active_set(&result.point);
    Ok(result)
}

/// Maximizes subject to the single linear restriction c' theta = v by
/// optimizing in an orthonormal basis of the constraint's null space. Box
/// constraints do not transfer to the reparameterized space; infeasible points
/// must surface as non-finite criterion values.
pub fn maximize_linear_restricted<F>(
    f: &F,
    theta0: &Vector,
    coeffs: &Vector,
    v: f64,
    opts: &MaximizeOpts,
) -> Result<FitResult>
where
    F: Fn(&Vector) -> f64,
{
    let d = theta0.dim();
    if coeffs.dim() != d {
        return Err(Error::DimensionMismatch("restriction coefficients vs start".into()));
    }
    let cnorm2 = coeffs.dot(coeffs);
    if cnorm2 == 0.0 {
        return Err(Error::RankDeficientJacobian);
    }
    // particular solution: project the start onto the constraint plane
    let shift = (coeffs.dot(theta0) - v) / cnorm2;
    let base = theta0.sub(&coeffs.scale(shift));

    // orthonormal null-space basis by Gram-Schmidt against c
    let mut basis: Vec<Vector> = Vec::with_capacity(d - 1);
    let c_unit = coeffs.scale(1.0 / cnorm2.sqrt());
    for i in 0..d {
        let mut e = Vector::zeros(d);
        e[i] = 1.0;
        let mut w = e.sub(&c_unit.scale(c_unit.dot(&e)));
        for b in &basis {
            w = w.sub(&b.scale(b.dot(&w)));
        }
        let n = w.norm2();
        if n > 1e-10 {
            basis.push(w.scale(1.0 / n));
        }
        if basis.len() == d - 1 {
            break;
        }
    }
    let embed = |phi: &Vector| {
        let mut t = base.clone();
        for (k, b) in basis.iter().enumerate() {
            t = t.add(&b.scale(phi[k]));
        }
        t
    };
    let obj = |phi: &Vector| f(&embed(phi));
    let phi0 = Vector::zeros(d - 1);
    let free = Bounds::unbounded(d - 1);
    let res = maximize_box(&obj, None::<&fn(&Vector) -> Result<Vector>>, &phi0, &free, opts)?;
    Ok(FitResult {
        point: embed(&res.point),
        value: res.value,
        converged: res.converged,
        iterations: res.iterations,
        active_set: Vec::new(),
    })
}
