//! Riemannian conjugate-gradient kernel over the complex unit sphere and
//! the oblique (unit-modulus) manifold.
//!
//! The caller supplies cost and Euclidean-gradient callbacks; this module
//! owns projection, retraction, vector transport, the Polak-Ribiere search
//! direction and the Armijo backtracking line search. The Polak-Ribiere
//! parameter is clamped at zero and the direction restarts to steepest
//! descent whenever it stops being a descent direction, so the cost trace is
//! monotone nonincreasing.

use crate::{C64, CVec};

/// Which feasible set the optimizer walks on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ManifoldKind {
    /// Complex vectors with unit Euclidean norm.
    Sphere,
    /// Complex vectors with unit-modulus entries.
    Oblique,
}

/// Options for [`rcg_minimize`].
#[derive(Debug, Clone, Copy)]
pub struct RcgOptions {
    /// Armijo slope constant.
    pub c1: f64,
    /// First step size tried in each line search.
    pub initial_step: f64,
    /// Multiplicative backtracking factor.
    pub backtrack_factor: f64,
    /// Stop when the Riemannian gradient norm falls below this.
    pub grad_tol: f64,
    /// Iteration cap.
    pub max_iter: usize,
    /// Backtracking cap per iteration.
    pub max_backtracks: usize,
}

impl Default for RcgOptions {
    fn default() -> Self {
        Self {
            c1: 1e-4,
            initial_step: 1.0,
            backtrack_factor: 0.5,
            grad_tol: 1e-4,
            max_iter: 500,
            max_backtracks: 50,
        }
    }
}

/// Why the solve stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RcgStop {
    GradientTolerance,
    MaxIterations,
    LineSearchExhausted,
}

/// Per-run record: accepted costs (monotone) and the termination reason.
#[derive(Debug, Clone)]
pub struct RcgTrace {
    pub costs: Vec<f64>,
    pub grad_norms: Vec<f64>,
    pub iterations: usize,
    pub stop: RcgStop,
}

/// Real inner product `Re(a^H b)` that makes C^n a real inner-product space.
pub fn real_inner(a: &CVec, b: &CVec) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x.conj() * y).re).sum()
}

/// Sphere retraction `(w + s eta) / ||w + s eta||`; fails on a zero sum.
pub fn retract_sphere(w: &CVec, direction: &CVec, step: f64) -> Option<CVec> {
    let moved = w + direction * C64::new(step, 0.0);
    let norm = moved.norm();
    if norm < 1e-300 {
        return None;
    }
    Some(moved / C64::new(norm, 0.0))
}

/// Oblique retraction: entrywise `(q_i + s eta_i) / |q_i + s eta_i|`.
pub fn retract_oblique(q: &CVec, direction: &CVec, step: f64) -> Option<CVec> {
    let mut out = q + direction * C64::new(step, 0.0);
    for v in out.iter_mut() {
        let m = v.norm();
        if m < 1e-300 {
            return None;
        }
        *v /= C64::new(m, 0.0);
    }
    Some(out)
}

/// Project a Euclidean gradient onto the sphere tangent space at `w`:
/// `egrad - Re(w^H egrad) w`.
pub fn riemannian_grad_sphere(w: &CVec, egrad: &CVec) -> CVec {
    egrad - w * C64::new(real_inner(w, egrad), 0.0)
}

/// Entrywise tangent projection on the oblique manifold:
/// `egrad - Re(egrad o q*) o q`.
pub fn riemannian_grad_oblique(q: &CVec, egrad: &CVec) -> CVec {
    CVec::from_fn(q.len(), |i, _| {
        egrad[i] - q[i] * C64::new((egrad[i] * q[i].conj()).re, 0.0)
    })
}

/// Transport a tangent vector to the tangent space at `new_point`
/// (orthogonal projection; identical form to the gradient projections).
pub fn transport(kind: ManifoldKind, new_point: &CVec, vector: &CVec) -> CVec {
    match kind {
        ManifoldKind::Sphere => riemannian_grad_sphere(new_point, vector),
        ManifoldKind::Oblique => riemannian_grad_oblique(new_point, vector),
    }
}

fn retract(kind: ManifoldKind, x: &CVec, dir: &CVec, step: f64) -> Option<CVec> {
    match kind {
        ManifoldKind::Sphere => retract_sphere(x, dir, step),
        ManifoldKind::Oblique => retract_oblique(x, dir, step),
    }
}

fn project(kind: ManifoldKind, x: &CVec, v: &CVec) -> CVec {
    transport(kind, x, v)
}

/// Minimize `cost` over the manifold by Riemannian conjugate gradient with
/// Polak-Ribiere+ directions and Armijo backtracking.
///
/// Returns the best iterate found and the accepted-cost trace.
pub fn rcg_minimize<F, G>(
    kind: ManifoldKind,
    cost: F,
    egrad: G,
    x0: &CVec,
    opts: &RcgOptions,
) -> (CVec, RcgTrace)
where
    F: Fn(&CVec) -> f64,
    G: Fn(&CVec) -> CVec,
{
    let mut x = x0.clone();
    let mut f = cost(&x);
    let mut g = project(kind, &x, &egrad(&x));
    let mut dir = -&g;
    let mut trace = RcgTrace {
        costs: vec![f],
        grad_norms: vec![g.norm()],
        iterations: 0,
        stop: RcgStop::MaxIterations,
    };

    for iter in 0..opts.max_iter {
        let gnorm = g.norm();
        if gnorm <= opts.grad_tol {
            trace.stop = RcgStop::GradientTolerance;
            trace.iterations = iter;
            return (x, trace);
        }

        // restart to steepest descent when the direction fails to descend
        let mut slope = real_inner(&g, &dir);
        if slope >= 0.0 {
            dir = -&g;
            slope = -gnorm * gnorm;
        }

        // Armijo backtracking
        let mut step = opts.initial_step;
        let mut accepted = None;
        for _ in 0..opts.max_backtracks {
            if let Some(cand) = retract(kind, &x, &dir, step) {
                let fc = cost(&cand);
                if fc <= f + opts.c1 * step * slope {
                    accepted = Some((cand, fc));
                    break;
                }
            }
            step *= opts.backtrack_factor;
        }
        let Some((x_new, f_new)) = accepted else {
            trace.stop = RcgStop::LineSearchExhausted;
            trace.iterations = iter;
            return (x, trace);
        };

        let g_new = project(kind, &x_new, &egrad(&x_new));
        // Polak-Ribiere with nonnegativity clamp
        let g_old_t = transport(kind, &x_new, &g);
        let denom = real_inner(&g, &g);
        let mu = if denom > 0.0 {
            (real_inner(&g_new, &(&g_new - &g_old_t)) / denom).max(0.0)
        } else {
            0.0
        };
        let dir_t = transport(kind, &x_new, &dir);
        dir = -&g_new + dir_t * C64::new(mu, 0.0);

        x = x_new;
        f = f_new;
        g = g_new;
        trace.costs.push(f);
        trace.grad_norms.push(g.norm());
        trace.iterations = iter + 1;
    }
    (x, trace)
}
