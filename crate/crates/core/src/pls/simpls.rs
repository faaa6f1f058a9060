use crate::linalg::{residual_projection, DenseMatrix, Vector};
use crate::penalty::PenaltySpec;
use crate::{PlsError, Result};

use super::engine::{columns, Original, Parts, Step, Stepper};
use super::{EarlyStop, FitOptions};

/// SIMPLS: each weight is the (penalized) leading left singular vector of
/// `P_{C⊥} XᵀY`, where `C` collects the X-loadings found so far.
pub(crate) fn run_simpls(
    h: usize,
    pen_u: &PenaltySpec,
    pen_v: &PenaltySpec,
    opts: &FitOptions,
    orig: &dyn Original,
) -> Result<Parts> {
    let m0 = orig.m();
    let p = m0.nrows();
    let total = orig.x_total_ss();
    let mut parts = Parts::default();
    let mut stepper = Stepper { pen_u, pen_v, opts, first_delta: None };
    let mut grams: Vec<Vector> = Vec::new();

    for comp in 1..=h {
        let mh = match residual_projection(&columns(&parts.c, p), m0) {
            Ok(m) => m,
            Err(PlsError::DegenerateBasis) => {
                parts.stops.push(EarlyStop::RankExhausted { component: comp });
                break;
            }
            Err(e) => return Err(e),
        };
        let (w, v, delta) = match stepper.step(&mh, comp, &mut parts)? {
            Step::Accepted { u, v, delta } => (u, v, delta),
            Step::Stop(s) => {
                parts.stops.push(s);
                break;
            }
        };
        let nw = orig.x_gram(&w);
        let xi_sq = w.dot(&nw);
        if !(xi_sq > 1e-24 * total.max(f64::MIN_POSITIVE)) {
            parts.stops.push(EarlyStop::ScoreVanished { component: comp });
            break;
        }
        let kv = orig.y_gram(&v);
        let vkv = v.dot(&kv);
        parts.g.push(if vkv > 0.0 { kv / vkv } else { Vector::zeros(v.len()) });
        parts.c.push(&nw / xi_sq);
        parts.d.push(m0.tr_mul(&w) / xi_sq);
        parts.inner.push(w.dot(&(m0 * &v)) / xi_sq);
        parts.deltas.push(delta);
        parts.ry.push(v.clone());
        parts.z.push(v.clone());
        parts.w.push(w.clone());
        parts.u.push(w);
        parts.v.push(v);
        grams.push(nw);
    }

    if !parts.w.is_empty() {
        // B = W (ΞᵀΞ)⁻¹ ΞᵀY with ΞᵀΞ = WᵀNW and ΞᵀY = WᵀM
        let w = columns(&parts.w, p);
        let gram = w.tr_mul(&columns(&grams, p));
        let gram = (&gram + gram.transpose()) * 0.5;
        let rhs = w.tr_mul(m0);
        let sol = gram
            .lu()
            .solve(&rhs)
            .ok_or_else(|| PlsError::InvalidInput("score Gram matrix is singular".into()))?;
        parts.coefficients = Some(w * sol);
    } else {
        parts.coefficients = Some(DenseMatrix::zeros(p, m0.ncols()));
    }
    Ok(parts)
}
