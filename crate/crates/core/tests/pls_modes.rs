mod common;

use common::{centered, lead, max_diff, project, randn, reference, rel_fro, RefMode};
use nalgebra::SymmetricEigen;
use plsforge::pls::EarlyStop;
use plsforge::{
    classify, fit, fit_plsda, fit_simpls, predict, regression_coefficients, DenseMatrix, Engine,
    FitOptions, GroupStructure, PenaltySpec, PlsFit, PlsMode, Vector,
};

fn none() -> PenaltySpec {
    PenaltySpec::none()
}

fn plain(x: &DenseMatrix, y: &DenseMatrix, mode: PlsMode, h: usize) -> PlsFit {
    fit(x, y, mode, h, &none(), &none(), &FitOptions::default()).unwrap()
}

fn col_close(a: &DenseMatrix, b: &[Vector], tol: f64) {
    assert_eq!(a.ncols(), b.len());
    for (h, bv) in b.iter().enumerate() {
        let d = (a.column(h) - bv).amax();
        assert!(d <= tol * bv.amax().max(1.0), "component {}: {d}", h + 1);
    }
}

#[test]
fn svd_mode_first_pair_is_leading_triple() {
    let x = randn(1, 10, 4);
    let y = randn(2, 10, 3);
    let m = plain(&x, &y, PlsMode::svd(), 1);
    let (d, u, v) = lead(&centered(&x).tr_mul(&centered(&y)));
    assert!((m.deltas[0] - d).abs() < 1e-10 * d);
    assert!((m.u.column(0) - u).amax() < 1e-10);
    assert!((m.v.column(0) - v).amax() < 1e-10);
}

#[test]
fn y_equal_x_gives_principal_axes() {
    let x = randn(3, 30, 5);
    let m = plain(&x, &x, PlsMode::svd(), 3);
    let xc = centered(&x);
    let eig = SymmetricEigen::new(xc.tr_mul(&xc));
    let mut order: Vec<usize> = (0..5).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    for h in 0..3 {
        let e = eig.eigenvectors.column(order[h]).into_owned();
        let s = if e.dot(&m.u.column(h)) < 0.0 { -1.0 } else { 1.0 };
        assert!((m.u.column(h) - e * s).amax() < 1e-8, "axis {h}");
    }
}

#[test]
fn modes_match_textbook_reference_on_both_engines() {
    let x = randn(4, 40, 7);
    let y = randn(5, 40, 5);
    let (xc, yc) = (centered(&x), centered(&y));
    for (mode, rm) in [
        (PlsMode::svd(), RefMode::Svd),
        (PlsMode::w2a(), RefMode::W2a),
        (PlsMode::regression(), RefMode::Regression),
    ] {
        let r = reference(&xc, &yc, 3, rm);
        for engine in [Engine::Explicit, Engine::Recursion] {
            let opts = FitOptions { engine, ..Default::default() };
            let m = fit(&x, &y, mode, 3, &none(), &none(), &opts).unwrap();
            col_close(&m.u, &r.u, 1e-8);
            col_close(&m.v, &r.v, 1e-8);
            col_close(m.x_scores.as_ref().unwrap(), &r.xi, 1e-8);
            col_close(&m.x_loadings, &r.c, 1e-8);
        }
    }
}

#[test]
fn svd_mode_orthogonality() {
    let x = randn(6, 25, 6);
    let y = randn(7, 25, 4);
    let m = plain(&x, &y, PlsMode::svd(), 4);
    let i = DenseMatrix::identity(4, 4);
    assert!(max_diff(&m.u.tr_mul(&m.u), &i) < 1e-8);
    assert!(max_diff(&m.v.tr_mul(&m.v), &i) < 1e-8);
    let xi = m.x_scores.as_ref().unwrap();
    let om = m.y_scores.as_ref().unwrap();
    let cross = xi.tr_mul(om);
    for h in 0..4 {
        for j in 0..4 {
            if h != j {
                assert!(cross[(h, j)].abs() < 1e-8 * cross[(h, h)].abs(), "({h},{j})");
            }
        }
    }
}

#[test]
fn w2a_scores_orthogonal_and_deltas_are_leading_values() {
    let x = randn(8, 30, 6);
    let y = randn(9, 30, 5);
    let m = plain(&x, &y, PlsMode::w2a(), 3);
    let xi = m.x_scores.as_ref().unwrap();
    let om = m.y_scores.as_ref().unwrap();
    for h in 1..3 {
        for j in 0..h {
            let a = xi.column(h).dot(&xi.column(j));
            assert!(a.abs() < 1e-9 * xi.column(h).norm() * xi.column(j).norm());
            let b = om.column(h).dot(&om.column(j));
            assert!(b.abs() < 1e-9 * om.column(h).norm() * om.column(j).norm());
        }
    }
    // δ_h is the leading singular value of the deflated cross-product
    let (mut xd, mut yd) = (centered(&x), centered(&y));
    for h in 0..3 {
        let (d, _, _) = lead(&xd.tr_mul(&yd));
        assert!((m.deltas[h] - d).abs() < 1e-8 * d);
        let a = xi.column(h).into_owned();
        let b = om.column(h).into_owned();
        xd -= &a * (a.transpose() * &xd) / a.norm_squared();
        yd -= &b * (b.transpose() * &yd) / b.norm_squared();
    }
}

#[test]
fn rcca_with_unit_ridge_is_pls_svd() {
    let x = randn(10, 20, 5);
    let y = randn(11, 20, 4);
    let a = plain(&x, &y, PlsMode::rcca_convex(1.0, 1.0), 3);
    let b = plain(&x, &y, PlsMode::svd(), 3);
    assert!(max_diff(&a.u, &b.u) < 1e-12);
    assert!(max_diff(&a.v, &b.v) < 1e-12);
    assert!(max_diff(&a.w_adj, &b.w_adj) < 1e-12);
}

#[test]
fn cca_scores_are_orthonormal() {
    let x = randn(12, 50, 4);
    let y = randn(13, 50, 3);
    let m = plain(&x, &y, PlsMode::rcca_convex(0.0, 0.0), 3);
    let xi = m.x_scores.as_ref().unwrap();
    let om = m.y_scores.as_ref().unwrap();
    let i = DenseMatrix::identity(3, 3);
    assert!(max_diff(&xi.tr_mul(xi), &i) < 1e-8);
    assert!(max_diff(&om.tr_mul(om), &i) < 1e-8);
    let cross = xi.tr_mul(om);
    for h in 0..3 {
        for j in 0..3 {
            if h != j {
                assert!(cross[(j, h)].abs() < 1e-8);
            }
        }
        // canonical correlations lie in (0, 1]
        assert!(cross[(h, h)] > 0.0 && cross[(h, h)] <= 1.0 + 1e-12);
    }
}

#[test]
fn regression_invariants() {
    let x = randn(14, 35, 6);
    let y = randn(15, 35, 3);
    let m = plain(&x, &y, PlsMode::regression(), 4);
    let xi = m.x_scores.clone().unwrap();
    let om = m.y_scores.clone().unwrap();
    let g = xi.tr_mul(&xi);
    for h in 0..4 {
        for j in 0..4 {
            if h != j {
                assert!(g[(h, j)].abs() < 1e-8 * g[(h, h)]);
            }
        }
        // inner relation: ω_h = p_h ξ_h + r_h with r_h ⟂ ξ_h
        let r = om.column(h) - xi.column(h) * m.inner_coefs[h];
        assert!(r.dot(&xi.column(h)).abs() < 1e-8 * om.column(h).norm() * xi.column(h).norm());
    }
    let yc = centered(&y);
    let want = project(&xi, &yc) + (&y - &yc);
    assert!(max_diff(m.fitted.as_ref().unwrap(), &want) < 1e-8);
}

#[test]
fn full_rank_regression_reconstructs_x() {
    for seed in 0..5 {
        let x = randn(100 + seed, 9, 5);
        let y = randn(200 + seed, 9, 2);
        let m = plain(&x, &y, PlsMode::regression(), 5);
        assert_eq!(m.n_components(), 5);
        let xc = centered(&x);
        let rec = m.x_scores.as_ref().unwrap() * m.x_loadings.transpose();
        assert!(rel_fro(&rec, &xc) < 1e-8, "seed {seed}");
    }
}

#[test]
fn adjusted_weights_reproduce_deflated_scores() {
    let x = randn(16, 30, 6);
    let y = randn(17, 30, 3);
    let m = plain(&x, &y, PlsMode::regression(), 3);
    let r = reference(&centered(&x), &centered(&y), 3, RefMode::Regression);
    let xc = centered(&x);
    let xi3 = &xc * m.w_adj.column(2);
    assert!((&xi3 - &r.xi[2]).norm() <= 1e-9 * r.xi[2].norm());
    assert!((m.w_adj.column(0) - m.u.column(0)).amax() == 0.0);
    // u_h is the part of w̃_h orthogonal to the earlier adjusted weights
    for h in 1..3 {
        let prev = m.w_adj.columns(0, h).into_owned();
        let w = DenseMatrix::from_column_slice(6, 1, m.w_adj.column(h).as_slice());
        let perp = &w - project(&prev, &w);
        let u = DenseMatrix::from_column_slice(6, 1, m.u.column(h).as_slice());
        assert!(max_diff(&perp, &u) < 1e-8, "h={h}");
    }
}

#[test]
fn coefficients_and_predictions() {
    let x = randn(18, 40, 5);
    let y = randn(19, 40, 2);
    let a = plain(&x, &y, PlsMode::regression(), 3);
    let b = plain(&x, &y, PlsMode::regression_scaled(), 3);
    let pa = predict(&a, &x).unwrap();
    let pb = predict(&b, &x).unwrap();
    assert!(max_diff(&pa, &pb) < 1e-8);
    assert!(max_diff(&pa, a.fitted.as_ref().unwrap()) < 1e-10);

    // X·B reproduces the score-space fit
    let xc = centered(&x);
    let ba = regression_coefficients(&a).unwrap();
    let xi = a.x_scores.as_ref().unwrap();
    let want = xi * a.y_loadings.transpose();
    assert!(max_diff(&(&xc * &ba), &want) < 1e-9);

    // single component, unscaled: B = w̃₁ d₁ᵀ
    let one = plain(&x, &y, PlsMode::regression(), 1);
    let b1 = regression_coefficients(&one).unwrap();
    let outer = one.w_adj.column(0) * one.y_loadings.column(0).transpose();
    assert!(max_diff(&b1, &outer) < 1e-14);

    // the mean row predicts the response means
    let mean_row = x.row_mean();
    let p0 = predict(&a, &DenseMatrix::from_row_slice(1, 5, mean_row.as_slice())).unwrap();
    let ymean = y.row_mean();
    assert!((p0.row(0) - ymean).amax() < 1e-12);

    assert!(predict(&a, &randn(1, 2, 4)).is_err());
    assert!(regression_coefficients(&plain(&x, &y, PlsMode::svd(), 1)).is_err());
}

#[test]
fn full_rank_regression_is_least_squares() {
    let x = randn(20, 25, 4);
    let beta = randn(21, 4, 1);
    let y = &x * &beta + randn(22, 25, 1) * 0.1;
    let m = plain(&x, &y, PlsMode::regression(), 4);
    let xc = centered(&x);
    let yc = centered(&y);
    let ols = project(&xc, &yc);
    let res_pls = &yc - (m.fitted.as_ref().unwrap() - (&y - &yc));
    let res_ols = &yc - ols;
    assert!(max_diff(&res_pls, &res_ols) < 1e-6);
}

#[test]
fn simpls_properties() {
    let x = randn(23, 40, 6);
    let y = randn(24, 40, 3);
    let s1 = fit_simpls(&x, &y, 1, &none(), &none(), &FitOptions::default()).unwrap();
    let n1 = plain(&x, &y, PlsMode::regression(), 1);
    assert!(max_diff(&s1.u, &n1.u) < 1e-10);
    assert!(max_diff(&s1.v, &n1.v) < 1e-10);

    let s = fit_simpls(&x, &y, 3, &none(), &none(), &FitOptions::default()).unwrap();
    let xi = s.x_scores.clone().unwrap();
    for h in 1..3 {
        for j in 0..h {
            let c = xi.column(h).dot(&xi.column(j));
            assert!(c.abs() < 1e-8 * xi.column(h).norm() * xi.column(j).norm());
        }
    }
    let yc = centered(&y);
    let want = project(&xi, &yc) + (&y - &yc);
    assert!(max_diff(&predict(&s, &x).unwrap(), &want) < 1e-8);
}

#[test]
fn engines_agree_with_penalties() {
    let x = randn(25, 30, 8);
    let y = randn(26, 30, 6);
    let gu = GroupStructure::new(vec![3, 3, 2]).unwrap();
    let gv = GroupStructure::uniform(3, 2).unwrap();
    let pens = [
        (PenaltySpec::lasso(2.0), PenaltySpec::lasso(1.0)),
        (PenaltySpec::group(3.0, gu.clone()), PenaltySpec::group(1.0, gv.clone())),
        (PenaltySpec::sparse_group(2.0, 0.5, gu), PenaltySpec::sparse_group(1.0, 0.3, gv)),
    ];
    for mode in [PlsMode::svd(), PlsMode::w2a(), PlsMode::regression(), PlsMode::rcca_convex(0.5, 0.5)] {
        for (pu, pv) in &pens {
            let run = |engine| {
                let opts = FitOptions { engine, ..Default::default() };
                fit(&x, &y, mode, 3, pu, pv, &opts).unwrap()
            };
            let a = run(Engine::Explicit);
            let b = run(Engine::Recursion);
            assert_eq!(a.n_components(), b.n_components(), "{mode}");
            assert!(max_diff(&a.u, &b.u) < 1e-9, "{mode}");
            assert!(max_diff(&a.v, &b.v) < 1e-9, "{mode}");
            for h in 0..a.n_components() {
                for w in [a.u.column(h).norm(), a.v.column(h).norm()] {
                    assert!((w - 1.0).abs() < 1e-10);
                }
            }
        }
    }
}

#[test]
fn zero_lambda_is_unpenalized() {
    let x = randn(27, 20, 6);
    let y = randn(28, 20, 4);
    let g = GroupStructure::uniform(3, 2).unwrap();
    let a = plain(&x, &y, PlsMode::w2a(), 2);
    for pen in [PenaltySpec::lasso(0.0), PenaltySpec::group(0.0, g.clone()), PenaltySpec::sparse_group(0.0, 0.5, g.clone())] {
        let b = fit(&x, &y, PlsMode::w2a(), 2, &pen, &none(), &FitOptions::default()).unwrap();
        assert!(max_diff(&a.u, &b.u) < 1e-12);
    }
    // small λ approaches the unpenalized fit
    let b = fit(&x, &y, PlsMode::w2a(), 2, &PenaltySpec::lasso(1e-9), &none(), &FitOptions::default()).unwrap();
    assert!(max_diff(&a.u, &b.u) < 1e-6);
}

#[test]
fn early_stops_are_reported() {
    let x = randn(29, 10, 3);
    let y = randn(30, 10, 2);
    let m = plain(&x, &y, PlsMode::svd(), 5);
    assert_eq!(m.n_components(), 2);
    assert!(matches!(m.stops[0], EarlyStop::Capped { requested: 5, cap: 2 }));

    let heavy = PenaltySpec::lasso(1e6);
    let m = fit(&x, &y, PlsMode::regression(), 2, &heavy, &none(), &FitOptions::default()).unwrap();
    assert_eq!(m.n_components(), 0);
    assert!(m.stops.iter().any(|s| matches!(s, EarlyStop::DegenerateWeight { component: 1 })));

    // rank-2 X: a third regression component has nothing left
    let x2 = randn(31, 12, 2) * randn(32, 2, 5);
    let m = plain(&x2, &randn(40, 12, 2), PlsMode::regression(), 4);
    assert_eq!(m.n_components(), 2);
    assert!(m.stops.iter().any(|s| matches!(
        s,
        EarlyStop::RankExhausted { component: 3 } | EarlyStop::ScoreVanished { component: 3 }
    )));
}

#[test]
fn input_errors() {
    let x = randn(33, 10, 3);
    assert!(fit(&x, &randn(34, 9, 2), PlsMode::svd(), 1, &none(), &none(), &FitOptions::default()).is_err());
    assert!(fit(&x, &randn(34, 10, 2), PlsMode::svd(), 0, &none(), &none(), &FitOptions::default()).is_err());
    let bad_groups = PenaltySpec::group(1.0, GroupStructure::uniform(2, 2).unwrap());
    assert!(fit(&x, &randn(34, 10, 2), PlsMode::svd(), 1, &bad_groups, &none(), &FitOptions::default()).is_err());
    let opts = FitOptions { center: false, scale: true, ..Default::default() };
    assert!(fit(&x, &randn(34, 10, 2), PlsMode::svd(), 1, &none(), &none(), &opts).is_err());
    let mut nan = x.clone();
    nan[(0, 0)] = f64::NAN;
    assert!(fit(&nan, &randn(34, 10, 2), PlsMode::svd(), 1, &none(), &none(), &FitOptions::default()).is_err());
}

#[test]
fn discriminant_fits_classify() {
    // two well separated clusters
    let mut x = randn(35, 40, 4) * 0.3;
    let labels: Vec<&str> = (0..40).map(|i| if i % 2 == 0 { "a" } else { "b" }).collect();
    for i in (0..40).step_by(2) {
        x[(i, 0)] += 3.0;
    }
    let m = fit_plsda(&x, &labels, 2, &none(), &FitOptions::default()).unwrap();
    assert_eq!(m.classes.as_deref(), Some(&["a".to_string(), "b".to_string()][..]));
    let pred = classify(&m, &x).unwrap();
    let want: Vec<usize> = (0..40).map(|i| i % 2).collect();
    assert_eq!(pred, want);
    let names = plsforge::classify_labels(&m, &x.rows(0, 2).into_owned()).unwrap();
    assert_eq!(names, vec!["a", "b"]);
    assert!(classify(&plain(&x, &randn(1, 40, 2), PlsMode::regression(), 1), &x).is_err());
}

#[test]
fn classify_ties_go_to_first_class() {
    // X carries no information about the labels, so every prediction is the column means
    let x = DenseMatrix::from_fn(4, 2, |i, j| ((i + j) % 2) as f64);
    let labels = ["p", "q", "q", "p"];
    let m = fit_plsda(&x, &labels, 1, &none(), &FitOptions::default()).unwrap();
    let pred = classify(&m, &x).unwrap();
    assert_eq!(pred, vec![0, 0, 0, 0]);
}

#[test]
fn scaling_centers_and_scales() {
    let mut x = randn(36, 30, 4);
    x.column_mut(2).scale_mut(1000.0);
    let y = randn(37, 30, 2);
    let opts = FitOptions { scale: true, ..Default::default() };
    let m = fit(&x, &y, PlsMode::regression(), 2, &none(), &none(), &opts).unwrap();
    let scales = m.centering.x_scales.as_ref().unwrap();
    assert!(scales[2] > 500.0);
    // predictions on the training rows equal the stored fit
    assert!(max_diff(&predict(&m, &x).unwrap(), m.fitted.as_ref().unwrap()) < 1e-9);
}

#[test]
fn fit_serializes_metadata() {
    let x = randn(38, 12, 3);
    let y = randn(39, 12, 2);
    let m = plain(&x, &y, PlsMode::regression(), 2);
    let s = serde_json::to_string(&m.mode).unwrap();
    let back: PlsMode = serde_json::from_str(&s).unwrap();
    assert_eq!(back, m.mode);
    let pen = PenaltySpec::sparse_group(0.5, 0.25, GroupStructure::new(vec![2, 1]).unwrap());
    let s = serde_json::to_string(&pen).unwrap();
    assert_eq!(serde_json::from_str::<PenaltySpec>(&s).unwrap(), pen);
}

#[test]
fn whole_fit_roundtrips_through_json_bit_exactly() {
    let x = randn(40, 30, 5);
    let y = randn(41, 30, 3);
    let opts = FitOptions { scale: true, ..Default::default() };
    let m = fit(&x, &y, PlsMode::regression_scaled(), 2, &PenaltySpec::lasso(0.5), &PenaltySpec::none(), &opts)
        .unwrap();
    let back: plsforge::PlsFit = serde_json::from_str(&serde_json::to_string(&m).unwrap()).unwrap();
    assert_eq!(back.u, m.u);
    assert_eq!(back.centering.x_scales, m.centering.x_scales);
    assert_eq!(back.mode, m.mode);
    assert_eq!(predict(&back, &x).unwrap(), predict(&m, &x).unwrap());
}
