mod common;

use common::{centered, max_diff, randn};
use plsforge::bigdata::{
    block_svd_leading, block_svd_leading_with, chunk_plan, chunked_cross_product, chunked_products,
    fit_bigdata, stream_scores, write_dataset, Assembly, ChunkSource, ChunkedDataset,
    InMemoryChunks, IncrementalState, Regrouped, RowBlockPartition,
};
use plsforge::linalg::svd_full;
use plsforge::{fit, DenseMatrix, FitOptions, GroupStructure, PenaltySpec, PlsError, PlsMode};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// `k` sets the penalty scale; whitened rCCA cross-products have entries below 1.
fn penalty_sets(k: f64) -> Vec<(&'static str, PenaltySpec, PenaltySpec)> {
    let gu = GroupStructure::new(vec![4, 4, 4]).unwrap();
    let gv = GroupStructure::new(vec![3, 3]).unwrap();
    vec![
        ("none", PenaltySpec::none(), PenaltySpec::none()),
        ("lasso", PenaltySpec::lasso(20.0 * k), PenaltySpec::lasso(10.0 * k)),
        ("group", PenaltySpec::group(40.0 * k, gu.clone()), PenaltySpec::group(20.0 * k, gv.clone())),
        (
            "sparse-group",
            PenaltySpec::sparse_group(30.0 * k, 0.5, gu),
            PenaltySpec::sparse_group(15.0 * k, 0.5, gv),
        ),
    ]
}

#[test]
fn chunked_fit_matches_in_memory_for_every_mode_and_penalty() {
    let n = 600;
    // shared latent structure so the penalized fits keep several components
    let t = randn(1, n, 2);
    let x = &t * randn(2, 2, 12) + randn(3, n, 12) + DenseMatrix::from_element(n, 12, 5.0);
    let y = &t * randn(4, 2, 6) + randn(5, n, 6);
    let dir = tempfile::tempdir().unwrap();
    write_dataset(dir.path(), &x, &y, chunk_plan(n, 7).unwrap()).unwrap();
    let disk = ChunkedDataset::open(dir.path()).unwrap();
    let opts = FitOptions::default();
    for mode in [
        PlsMode::svd(),
        PlsMode::w2a(),
        PlsMode::rcca_convex(0.3, 0.6),
        PlsMode::rcca_ridge(5.0, 2.0),
        PlsMode::regression(),
        PlsMode::regression_scaled(),
        PlsMode::simpls(),
    ] {
        let k = if matches!(mode, PlsMode::Rcca { .. }) { 0.002 } else { 1.0 };
        for (name, pu, pv) in penalty_sets(k) {
            let a = fit(&x, &y, mode, 3, &pu, &pv, &opts).unwrap();
            let b = fit_bigdata(&disk, mode, 3, &pu, &pv, &opts).unwrap();
            let tag = format!("{mode}/{name}");
            assert_eq!(a.n_components(), b.n_components(), "{tag}");
            assert!(a.n_components() >= 1, "{tag}");
            assert!(max_diff(&a.u, &b.u) < 1e-9, "{tag} u");
            assert!(max_diff(&a.v, &b.v) < 1e-9, "{tag} v");
            assert!(max_diff(&a.w_adj, &b.w_adj) < 1e-9, "{tag} w");
            assert!(max_diff(&a.x_loadings, &b.x_loadings) < 1e-9, "{tag} c");
            assert!(max_diff(&a.y_loadings, &b.y_loadings) < 1e-9, "{tag} d");
            let (sa, sb) = (a.x_scores.unwrap(), b.x_scores.unwrap());
            assert!(max_diff(&sa, &sb) < 1e-9 * sa.amax().max(1.0), "{tag} scores");
            if let (Some(fa), Some(fb)) = (&a.fitted, &b.fitted) {
                assert!(max_diff(fa, fb) < 1e-9, "{tag} fitted");
            }
        }
    }
}

#[test]
fn scaled_chunked_fit_matches() {
    let x = randn(6, 300, 8) * 4.0;
    let y = randn(7, 300, 3);
    let opts = FitOptions { scale: true, ..Default::default() };
    let src = InMemoryChunks::new(&x, &y, 5).unwrap();
    let a = fit(&x, &y, PlsMode::regression(), 2, &PenaltySpec::lasso(5.0), &PenaltySpec::none(), &opts).unwrap();
    let b = fit_bigdata(&src, PlsMode::regression(), 2, &PenaltySpec::lasso(5.0), &PenaltySpec::none(), &opts)
        .unwrap();
    assert!(max_diff(&a.u, &b.u) < 1e-9);
}

#[test]
fn cross_product_is_partition_invariant() {
    let x = randn(8, 97, 6);
    let y = randn(9, 97, 4);
    let reference = chunked_cross_product(&InMemoryChunks::new(&x, &y, 1).unwrap()).unwrap();
    let scale = reference.norm();
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    for _ in 0..20 {
        let g = rng.random_range(2..=20);
        let src = InMemoryChunks::new(&x, &y, g).unwrap();
        let m = chunked_cross_product(&src).unwrap();
        assert!((m - &reference).norm() <= 1e-11 * scale);
    }
}

#[test]
fn parallel_reduction_stays_within_tolerance() {
    let x = randn(11, 2000, 10);
    let y = randn(12, 2000, 5);
    let src = InMemoryChunks::new(&x, &y, 40).unwrap();
    let seq = chunked_products(&src, false).unwrap();
    let par = chunked_products(&src, true).unwrap();
    assert!(max_diff(&seq.m, &par.m) < 1e-9);
    assert!(max_diff(&seq.nxx, &par.nxx) < 1e-9);
    let opts = FitOptions { parallel_reduce: true, ..Default::default() };
    let a = fit(&x, &y, PlsMode::w2a(), 2, &PenaltySpec::none(), &PenaltySpec::none(), &FitOptions::default())
        .unwrap();
    let b = fit_bigdata(&src, PlsMode::w2a(), 2, &PenaltySpec::none(), &PenaltySpec::none(), &opts).unwrap();
    assert!(max_diff(&a.u, &b.u) < 1e-9);
}

#[test]
fn regrouping_changes_nothing() {
    let x = randn(13, 50, 5);
    let y = randn(14, 50, 3);
    let src = InMemoryChunks::new(&x, &y, 3).unwrap();
    let re = Regrouped::new(&src, 8).unwrap();
    let none = PenaltySpec::none();
    let a = fit_bigdata(&src, PlsMode::regression(), 2, &none, &none, &FitOptions::default()).unwrap();
    let b = fit_bigdata(&re, PlsMode::regression(), 2, &none, &none, &FitOptions::default()).unwrap();
    assert!(max_diff(&a.u, &b.u) < 1e-12);
}

#[test]
fn streamed_scores_match_collected_scores() {
    let x = randn(15, 90, 5);
    let y = randn(16, 90, 3);
    let src = InMemoryChunks::new(&x, &y, 4).unwrap();
    let none = PenaltySpec::none();
    let opts = FitOptions { keep_scores: false, ..Default::default() };
    let m = fit_bigdata(&src, PlsMode::w2a(), 2, &none, &none, &opts).unwrap();
    assert!(m.x_scores.is_none());
    let full = fit(&x, &y, PlsMode::w2a(), 2, &none, &none, &FitOptions::default()).unwrap();
    let mut at = 0;
    stream_scores(&src, &m, |_, xi, om| {
        let len = xi.nrows();
        assert!(max_diff(&xi, &full.x_scores.as_ref().unwrap().rows(at, len).into_owned()) < 1e-9);
        assert!(max_diff(&om, &full.y_scores.as_ref().unwrap().rows(at, len).into_owned()) < 1e-9);
        at += len;
        Ok(())
    })
    .unwrap();
    assert_eq!(at, 90);
}

struct Broken;

impl ChunkSource for Broken {
    fn n_chunks(&self) -> usize {
        3
    }
    fn dims(&self) -> (usize, usize) {
        (2, 1)
    }
    fn chunk_len(&self, _g: usize) -> usize {
        4
    }
    fn read_chunk(&self, g: usize) -> plsforge::Result<(DenseMatrix, DenseMatrix)> {
        let rows = if g == 2 { 3 } else { 4 };
        Ok((randn(g as u64, rows, 2), randn(9, rows, 1)))
    }
}

#[test]
fn chunk_errors_carry_the_index() {
    let none = PenaltySpec::none();
    match fit_bigdata(&Broken, PlsMode::svd(), 1, &none, &none, &FitOptions::default()) {
        Err(PlsError::Chunk { index, .. }) => assert_eq!(index, 2),
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn block_svd_is_partition_invariant() {
    let m = randn(17, 60, 5);
    let oracle = svd_full(&m).unwrap().leading();
    let mut rng = ChaCha8Rng::seed_from_u64(18);
    for _ in 0..30 {
        let s = rng.random_range(1..=6);
        // random heights, each at least q
        let mut sizes = vec![5; s];
        for _ in 0..(60 - 5 * s) {
            sizes[rng.random_range(0..s)] += 1;
        }
        let part = RowBlockPartition::from_matrix(&m, &sizes).unwrap();
        let t = block_svd_leading(&part).unwrap();
        assert!((t.delta - oracle.delta).abs() < 1e-8 * oracle.delta);
        assert!((&t.u - &oracle.u).amax() < 1e-8);
        assert!((&t.v - &oracle.v).amax() < 1e-8);
        let short = block_svd_leading_with(&part, Assembly::Shortcut).unwrap();
        assert!((&t.u - &short.u).amax() < 1e-9);
    }
}

#[test]
fn incremental_full_rank_matches_batch() {
    let (p, q) = (7, 5);
    let x = randn(19, 80, p) + DenseMatrix::from_element(80, p, 2.0);
    let y = randn(20, 80, q);
    let mut s = IncrementalState::new(p, q, q).unwrap();
    for i in 0..80 {
        let xr: Vec<f64> = x.row(i).iter().copied().collect();
        let yr: Vec<f64> = y.row(i).iter().copied().collect();
        s = plsforge::bigdata::incremental_update(s, &xr, &yr).unwrap();
    }
    let batch = centered(&x).tr_mul(&centered(&y));
    assert!((s.reconstruct() - &batch).norm() < 1e-6 * batch.norm());
    // leading triple agrees with a chunked fit's first PLS-SVD component
    let src = InMemoryChunks::new(&x, &y, 4).unwrap();
    let none = PenaltySpec::none();
    let m = fit_bigdata(&src, PlsMode::svd(), 1, &none, &none, &FitOptions::default()).unwrap();
    assert!((s.leading().u - m.u.column(0)).amax() < 1e-8);
}
