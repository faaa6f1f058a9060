use crate::linalg::{flip_needed, normalize, DenseMatrix, SvdTriple, Vector};
use crate::penalty::{sparsify, PenaltySpec};
use crate::Result;

pub const DEFAULT_EPS: f64 = 1e-8;
pub const DEFAULT_INNER_MAX_ITER: usize = 500;

#[derive(Debug, Clone, Copy)]
pub struct InnerOptions {
    pub eps: f64,
    pub max_iter: usize,
    /// Record the penalized objective after every half-step.
    pub trace: bool,
}

impl Default for InnerOptions {
    fn default() -> Self {
        InnerOptions { eps: DEFAULT_EPS, max_iter: DEFAULT_INNER_MAX_ITER, trace: false }
    }
}

#[derive(Debug, Clone)]
pub struct InnerResult {
    pub u: Vector,
    pub v: Vector,
    pub iterations: usize,
    pub converged: bool,
    /// A sparsifier returned the zero vector; `u` and `v` are zero.
    pub degenerate: bool,
    pub objective: Vec<f64>,
}

/// `uᵀMv - pen_u(u) - pen_v(v)`, the quantity the alternating updates increase.
pub fn penalized_objective(
    m: &DenseMatrix,
    u: &Vector,
    v: &Vector,
    pen_u: &PenaltySpec,
    pen_v: &PenaltySpec,
) -> f64 {
    u.dot(&(m * v)) - pen_u.objective_penalty(u.as_slice()) - pen_v.objective_penalty(v.as_slice())
}

/// Penalized alternating rank-one updates started from `init`.
///
/// Stops when `‖u_old - u_new‖ / ‖u_new‖ < eps`. Hitting `max_iter` is not an
/// error: the last iterate is returned with `converged = false`.
pub fn inner_loop(
    m: &DenseMatrix,
    pen_u: &PenaltySpec,
    pen_v: &PenaltySpec,
    init: &SvdTriple,
    opts: &InnerOptions,
) -> Result<InnerResult> {
    let (p, q) = m.shape();
    let degenerate = |iterations, objective| InnerResult {
        u: Vector::zeros(p),
        v: Vector::zeros(q),
        iterations,
        converged: true,
        degenerate: true,
        objective,
    };
    if init.degenerate {
        return Ok(degenerate(0, Vec::new()));
    }
    let mut u = init.u.clone();
    let mut v = init.v.clone();
    let mut objective = Vec::new();
    if opts.trace {
        objective.push(penalized_objective(m, &u, &v, pen_u, pen_v));
    }

    let mut converged = false;
    let mut iterations = 0;
    while iterations < opts.max_iter {
        iterations += 1;
        let (u_new, ok) = normalize(sparsify(&(m * &v), pen_u)?);
        if !ok {
            return Ok(degenerate(iterations, objective));
        }
        if opts.trace {
            objective.push(penalized_objective(m, &u_new, &v, pen_u, pen_v));
        }
        let (v_new, ok) = normalize(sparsify(&m.tr_mul(&u_new), pen_v)?);
        if !ok {
            return Ok(degenerate(iterations, objective));
        }
        let change = (&u - &u_new).norm() / u_new.norm();
        u = u_new;
        v = v_new;
        if opts.trace {
            objective.push(penalized_objective(m, &u, &v, pen_u, pen_v));
        }
        if change < opts.eps {
            converged = true;
            break;
        }
    }
    if flip_needed(u.as_slice()) {
        u.neg_mut();
        v.neg_mut();
    }
    Ok(InnerResult { u, v, iterations, converged, degenerate: false, objective })
}
