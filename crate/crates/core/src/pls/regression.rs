use crate::linalg::{DenseMatrix, Vector};
use crate::{PlsError, Result};

use super::{PlsFit, PlsMode};

/// `B = W̃ P Dᵀ`: unscaled NIPALS uses `P = I` with Y-loadings `d_h`,
/// scaled NIPALS uses `P = diag(p_h)` with the Y-weights `v_h`.
pub(crate) fn nipals_coefficients(
    w: &DenseMatrix,
    y_loadings: &DenseMatrix,
    v: &DenseMatrix,
    inner: &Vector,
    scaled: bool,
) -> DenseMatrix {
    if scaled {
        let mut wp = w.clone();
        for (j, ph) in inner.iter().enumerate() {
            wp.column_mut(j).scale_mut(*ph);
        }
        wp * v.transpose()
    } else {
        w * y_loadings.transpose()
    }
}

/// Regression coefficients of a PLS-R fit, on the processed (centered/scaled) scale.
pub fn regression_coefficients(fit: &PlsFit) -> Result<DenseMatrix> {
    match fit.mode {
        PlsMode::PlsR { simpls: true, .. } => fit
            .coefficients
            .clone()
            .ok_or_else(|| PlsError::Mode("SIMPLS fit carries no coefficients".into())),
        PlsMode::PlsR { scaled, .. } => {
            Ok(nipals_coefficients(&fit.w_adj, &fit.y_loadings, &fit.v, &fit.inner_coefs, scaled))
        }
        other => Err(PlsError::Mode(format!("regression coefficients need pls-r, fit is {other}"))),
    }
}

/// Predict responses for new rows using the training centering and scaling.
pub fn predict(fit: &PlsFit, xnew: &DenseMatrix) -> Result<DenseMatrix> {
    if xnew.ncols() != fit.p {
        return Err(PlsError::DimensionMismatch(format!(
            "model expects {} columns, got {}",
            fit.p,
            xnew.ncols()
        )));
    }
    let b = match &fit.coefficients {
        Some(b) => b.clone(),
        None => regression_coefficients(fit)?,
    };
    let mut xp = xnew.clone();
    fit.centering.process_x(&mut xp);
    let mut yhat = xp * b;
    fit.centering.restore_y(&mut yhat);
    Ok(yhat)
}

/// Class index (column of the dummy matrix) with the largest prediction per row.
/// Ties go to the lowest index.
pub fn classify(fit: &PlsFit, xnew: &DenseMatrix) -> Result<Vec<usize>> {
    if fit.classes.is_none() {
        return Err(PlsError::Mode("model was not trained on class labels".into()));
    }
    let yhat = predict(fit, xnew)?;
    Ok(yhat
        .row_iter()
        .map(|row| {
            let mut best = 0;
            for (j, v) in row.iter().enumerate() {
                if *v > row[best] {
                    best = j;
                }
            }
            best
        })
        .collect())
}

/// As [`classify`], mapped to the class names stored on the fit.
pub fn classify_labels(fit: &PlsFit, xnew: &DenseMatrix) -> Result<Vec<String>> {
    let idx = classify(fit, xnew)?;
    let classes = fit.classes.as_ref().expect("checked by classify");
    Ok(idx.into_iter().map(|i| classes[i].clone()).collect())
}
