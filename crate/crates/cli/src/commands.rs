use std::fs;
use std::path::{Path, PathBuf};

use plsforge::bigdata::{
    chunk_plan, chunk_plan_rows, default_chunk_rows, read_all, stream_scores, ChunkedDataset,
    DatasetWriter, InMemoryChunks, Regrouped,
};
use plsforge::datagen::{GroupPlsGenerator, PlsDaGenerator, RowGenerator};
use plsforge::{
    classify, encode_dummy, fit, fit_bigdata, predict, ChunkSource, DenseMatrix, Engine,
    FitOptions, GroupStructure, PenaltySpec, PlsFit, PlsMode, Ridge,
};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::args::{
    ChunkArgs, Design, EngineArg, ExportArgs, FitArgs, Format, ImportArgs, InfoArgs, ModeArg,
    PathArg, PredictArgs, RidgeArg, SimulateArgs,
};
use crate::csvio::{numbered, read_labels, read_matrix, write_matrix, NumericCsv, RowWriter};
use crate::error::{CliError, CliResult};
use crate::staging::{write_file_atomic, Staging};

pub const MODEL_FILE: &str = "model.json";
const MODEL_FORMAT: &str = "plsforge-model";
const MODEL_VERSION: u32 = 1;
const PREDICT_BATCH: usize = 10_000;

fn plan_for(n: usize, p: usize, q: usize, c: &ChunkArgs) -> CliResult<Vec<usize>> {
    let rows = match (c.chunks, c.chunk_rows, c.chunk_bytes) {
        (Some(g), _, _) => return Ok(chunk_plan(n, g)?),
        (None, Some(r), _) => r,
        (None, None, Some(b)) => (b / (8 * (p + q).max(1) as u64)).max(1) as usize,
        (None, None, None) => default_chunk_rows(p, q),
    };
    Ok(chunk_plan_rows(n, rows)?)
}

/// Missing manifest counts as a broken artifact, like a missing model.
fn open_dataset(dir: &Path) -> CliResult<ChunkedDataset> {
    if !dir.join(plsforge::bigdata::MANIFEST_FILE).is_file() {
        return Err(CliError::artifact(format!("{}: not a dataset directory (no manifest)", dir.display())));
    }
    Ok(ChunkedDataset::open(dir)?)
}

// ---------------------------------------------------------------- import

pub fn import(a: &ImportArgs) -> CliResult<String> {
    // pass 1: shape and validation, so nothing is written for bad input
    let count = |path: &Path| -> CliResult<(usize, usize)> {
        let mut csv = NumericCsv::open(path)?;
        let mut n = 0;
        while csv.next_row()?.is_some() {
            n += 1;
        }
        Ok((n, csv.width().unwrap_or(0)))
    };
    let (n, p) = count(&a.x)?;
    if n == 0 {
        return Err(CliError::input(format!("{}: no data rows", a.x.display())));
    }
    let (dummy, q) = match (&a.y, &a.labels) {
        (Some(y), _) => {
            let (ny, q) = count(y)?;
            if ny != n {
                return Err(CliError::input(format!(
                    "row count mismatch: {} has {n} rows, {} has {ny}",
                    a.x.display(),
                    y.display()
                )));
            }
            (None, q)
        }
        (None, Some(l)) => {
            let labels = read_labels(l, a.labels_header)?;
            if labels.len() != n {
                return Err(CliError::input(format!(
                    "row count mismatch: {} has {n} rows, {} has {} labels",
                    a.x.display(),
                    l.display(),
                    labels.len()
                )));
            }
            let d = encode_dummy(&labels)?;
            let q = d.n_classes();
            (Some(d), q)
        }
        (None, None) => return Err(CliError::usage("one of --y or --labels is required")),
    };
    let plan = plan_for(n, p, q, &a.chunking)?;
    let stage = Staging::dir(&a.out, a.force)?;

    let mut w = DatasetWriter::create(stage.path(), p, q, plan)?;
    let mut xs = NumericCsv::open(&a.x)?;
    let mut ys = match &a.y {
        Some(y) => Some(NumericCsv::open(y)?),
        None => None,
    };
    let mut i = 0;
    while let Some((_, xr)) = xs.next_row()? {
        match (&mut ys, &dummy) {
            (Some(ys), _) => {
                let (_, yr) = ys.next_row()?.ok_or_else(|| CliError::input("response file changed while reading"))?;
                w.push_row(&xr, &yr)?;
            }
            (None, Some(d)) => {
                let yr: Vec<f64> = d.y.row(i).iter().copied().collect();
                w.push_row(&xr, &yr)?;
            }
            (None, None) => unreachable!(),
        }
        i += 1;
    }
    if let Some(d) = &dummy {
        w.set_classes(d.classes.clone());
    }
    let m = w.finish()?;
    stage.commit()?;
    Ok(format!("imported {} rows ({}x{}, {}x{}) into {} chunks at {}", m.n, m.n, m.p, m.n, m.q, m.chunks, a.out.display()))
}

// ---------------------------------------------------------------- export

pub fn export(a: &ExportArgs) -> CliResult<String> {
    let ds = open_dataset(&a.data)?;
    let (p, q) = ds.dims();
    let stage = Staging::dir(&a.out, a.force)?;
    let mut xw = RowWriter::create(&stage.file("x.csv"), &numbered("x", p))?;
    let mut yw = RowWriter::create(&stage.file("y.csv"), &numbered("y", q))?;
    for g in 0..ds.n_chunks() {
        let (x, y) = ds.read_chunk(g).map_err(|e| CliError::from(plsforge::PlsError::Chunk { index: g, source: Box::new(e) }))?;
        xw.rows(&x)?;
        yw.rows(&y)?;
    }
    xw.finish()?;
    yw.finish()?;
    if let Some(classes) = &ds.manifest().classes {
        let text = serde_json::to_string_pretty(classes).expect("strings serialize");
        let path = stage.file("classes.json");
        fs::write(&path, text + "\n").map_err(|e| CliError::io(&path, e))?;
    }
    stage.commit()?;
    Ok(format!("exported {} rows to {}", ds.n_rows(), a.out.display()))
}

// ---------------------------------------------------------------- fit

/// Group sizes from "5,5,10", "20x20" or a JSON array file.
pub fn parse_groups(s: &str) -> CliResult<GroupStructure> {
    let bad = |why: String| CliError::input(format!("--groups '{s}': {why}"));
    let path = Path::new(s);
    let sizes: Vec<usize> = if path.is_file() {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| bad(e.to_string()))?
    } else if let Some((count, size)) = s.split_once('x') {
        let count: usize = count.trim().parse().map_err(|_| bad("bad group count".into()))?;
        let size: usize = size.trim().parse().map_err(|_| bad("bad group size".into()))?;
        vec![size; count]
    } else {
        s.split(',')
            .map(|t| t.trim().parse::<usize>().map_err(|_| bad(format!("'{t}' is not a size"))))
            .collect::<CliResult<_>>()?
    };
    Ok(GroupStructure::new(sizes)?)
}

fn parse_f64(what: &str, s: &str) -> CliResult<f64> {
    s.parse().map_err(|_| CliError::usage(format!("{what}: '{s}' is not a number")))
}

/// Assemble one block's penalty from `KIND[:LAMBDA[:ALPHA]]` and the separate flags.
pub fn penalty(
    side: &str,
    spec: Option<&str>,
    lambda: Option<f64>,
    alpha: Option<f64>,
    groups: Option<&str>,
    dim: usize,
) -> CliResult<PenaltySpec> {
    let mut kind = None;
    let (mut lambda, mut alpha) = (lambda, alpha);
    if let Some(spec) = spec {
        let mut parts = spec.split(':');
        kind = parts.next().map(str::to_string);
        if let Some(l) = parts.next() {
            lambda = Some(parse_f64(&format!("--penalty-{side}"), l)?);
        }
        if let Some(a) = parts.next() {
            alpha = Some(parse_f64(&format!("--penalty-{side}"), a)?);
        }
        if parts.next().is_some() {
            return Err(CliError::usage(format!("--penalty-{side}: expected KIND[:LAMBDA[:ALPHA]]")));
        }
    }
    let kind = kind.unwrap_or_else(|| {
        match (lambda.is_some(), groups.is_some(), alpha.is_some()) {
            (false, _, _) => "none",
            (true, false, _) => "lasso",
            (true, true, false) => "group",
            (true, true, true) => "sparse-group",
        }
        .to_string()
    });
    let need_lambda = || {
        lambda.ok_or_else(|| CliError::usage(format!("{kind} penalty on {side} needs a lambda")))
    };
    let need_groups = || -> CliResult<GroupStructure> {
        parse_groups(groups.ok_or_else(|| CliError::usage(format!("{kind} penalty on {side} needs --groups-{side}")))?)
    };
    let pen = match kind.as_str() {
        "none" => PenaltySpec::none(),
        "lasso" => PenaltySpec::lasso(need_lambda()?),
        "group" => PenaltySpec::group(need_lambda()?, need_groups()?),
        "sparse-group" | "sgl" => {
            let a = alpha.ok_or_else(|| CliError::usage(format!("sparse-group penalty on {side} needs an alpha")))?;
            PenaltySpec::sparse_group(need_lambda()?, a, need_groups()?)
        }
        other => return Err(CliError::usage(format!("unknown penalty kind '{other}'"))),
    };
    pen.validate(Some(dim))?;
    Ok(pen)
}

pub fn mode_of(a: &FitArgs) -> PlsMode {
    match a.mode {
        ModeArg::PlsSvd => PlsMode::svd(),
        ModeArg::PlsW2a => PlsMode::w2a(),
        ModeArg::Rcca => PlsMode::Rcca {
            ridge: match a.ridge {
                RidgeArg::Convex => Ridge::Convex { x: a.ridge_x, y: a.ridge_y },
                RidgeArg::Additive => Ridge::Additive { x: a.ridge_x, y: a.ridge_y },
            },
        },
        ModeArg::PlsR => PlsMode::PlsR { scaled: a.scaled_nipals, simpls: a.simpls },
    }
}

/// On-disk model: the fit itself plus how it was produced.
#[derive(Serialize, Deserialize)]
pub struct ModelFile {
    pub format: String,
    pub version: u32,
    pub x_names: Vec<String>,
    pub y_names: Vec<String>,
    pub config: serde_json::Value,
    pub model: PlsFit,
}

pub fn load_model(dir: &Path) -> CliResult<ModelFile> {
    let path = dir.join(MODEL_FILE);
    let text = fs::read_to_string(&path).map_err(|e| {
        if e.kind() == std::io::ErrorKind::NotFound {
            CliError::artifact(format!("{}: model file missing", path.display()))
        } else {
            CliError::io(&path, e)
        }
    })?;
    let mf: ModelFile = serde_json::from_str(&text)
        .map_err(|e| CliError::artifact(format!("{}: corrupt model file: {e}", path.display())))?;
    if mf.format != MODEL_FORMAT || mf.version != MODEL_VERSION {
        return Err(CliError::artifact(format!("{}: not a version {MODEL_VERSION} model", path.display())));
    }
    let m = &mf.model;
    if m.u.nrows() != m.p || m.v.nrows() != m.q || mf.x_names.len() != m.p || mf.y_names.len() != m.q {
        return Err(CliError::artifact(format!("{}: inconsistent dimensions", path.display())));
    }
    Ok(mf)
}

enum Input {
    /// CSV paths, with the response already decoded when it came from labels.
    Csv { x: PathBuf, y: Option<DenseMatrix> },
    Memory { x: DenseMatrix, y: DenseMatrix },
    Dataset(ChunkedDataset),
}

fn write_components(stage: &Staging, name: &str, m: &DenseMatrix, rows: &[String]) -> CliResult<()> {
    write_matrix(&stage.file(name), &numbered("comp", m.ncols()), m, Some(("variable", rows)))
}

pub fn fit_cmd(a: &FitArgs) -> CliResult<String> {
    if a.h == 0 {
        return Err(CliError::usage("--H must be at least 1"));
    }
    let mode = mode_of(a);
    let opts = {
        let mut o = FitOptions {
            center: !a.no_center,
            scale: a.scale,
            engine: match a.engine {
                EngineArg::Explicit => Engine::Explicit,
                EngineArg::Recursion => Engine::Recursion,
            },
            parallel_reduce: a.parallel,
            ..Default::default()
        };
        if let Some(e) = a.eps {
            o.eps = e;
        }
        if let Some(m) = a.max_iter {
            o.max_iter = m;
        }
        o
    };

    // cheap inputs first: shapes, names, labels
    let mut classes: Option<Vec<String>> = None;
    let (input, x_names, mut y_names) = match (&a.data, &a.x) {
        (Some(dir), _) => {
            let ds = open_dataset(dir)?;
            let (p, q) = ds.dims();
            classes = ds.manifest().classes.clone();
            (Input::Dataset(ds), numbered("x", p), numbered("y", q))
        }
        (None, Some(xp)) => {
            let probe = NumericCsv::open(xp)?;
            let p = probe.width().unwrap_or(0);
            let x_names = probe.header.clone().unwrap_or_else(|| numbered("x", p));
            let (y, y_names) = if let Some(yp) = &a.y {
                let probe = NumericCsv::open(yp)?;
                let q = probe.width().unwrap_or(0);
                (None, probe.header.clone().unwrap_or_else(|| numbered("y", q)))
            } else {
                let lp = a.labels.as_ref().ok_or_else(|| CliError::usage("--x needs --y or --labels"))?;
                let labels = read_labels(lp, a.labels_header)?;
                let d = encode_dummy(&labels)?;
                classes = Some(d.classes.clone());
                (Some(d.y), d.classes)
            };
            (Input::Csv { x: xp.clone(), y }, x_names, y_names)
        }
        (None, None) => return Err(CliError::usage("give --data DIR or --x FILE with --y/--labels")),
    };
    if let Some(c) = &classes {
        if !mode.is_regression() {
            return Err(CliError::input("class labels need --mode pls-r"));
        }
        y_names = c.clone();
    }
    let (p, q) = (x_names.len(), y_names.len());
    let pen_u = penalty("u", a.penalty_u.as_deref(), a.lambda_u, a.alpha_u, a.groups_u.as_deref(), p)?;
    let pen_v = penalty("v", a.penalty_v.as_deref(), a.lambda_v, a.alpha_v, a.groups_v.as_deref(), q)?;

    // config is valid; now load CSV inputs
    let input = match input {
        Input::Csv { x: xp, y } => {
            let x = read_matrix(&xp)?;
            let y = match y {
                Some(y) => y,
                None => read_matrix(a.y.as_ref().expect("checked above"))?,
            };
            if y.nrows() != x.nrows() {
                return Err(CliError::input(format!("X has {} rows, Y has {} rows", x.nrows(), y.nrows())));
            }
            if y.ncols() != q {
                return Err(CliError::input("response width does not match its first row"));
            }
            Input::Memory { x, y }
        }
        other => other,
    };
    let n = match &input {
        Input::Memory { x, .. } => x.nrows(),
        Input::Dataset(ds) => ds.n_rows(),
        Input::Csv { .. } => unreachable!(),
    };

    let footprint = 16u64.saturating_mul(n as u64).saturating_mul((p + q) as u64);
    let chunked = match a.path {
        _ if a.chunks.is_some() => true,
        PathArg::Chunked => true,
        PathArg::Memory => false,
        PathArg::Auto => footprint > a.memory_limit,
    };
    let stage = Staging::dir(&a.out, a.force)?;

    let (mut model, path_used) = if chunked {
        let mut o = opts.clone();
        o.keep_scores = false;
        // scores need their own pass over the chunks
        let run = |src: &dyn ChunkSource| -> CliResult<PlsFit> {
            let m = fit_bigdata(src, mode, a.h, &pen_u, &pen_v, &o)?;
            if a.scores {
                write_streamed_scores(&stage, src, &m)?;
            }
            Ok(m)
        };
        let m = match &input {
            Input::Memory { x, y } => run(&InMemoryChunks::new(x, y, a.chunks.unwrap_or(1))?)?,
            Input::Dataset(ds) => match a.chunks {
                Some(g) => run(&Regrouped::new(ds, g)?)?,
                None => run(ds)?,
            },
            Input::Csv { .. } => unreachable!(),
        };
        (m, "chunked")
    } else {
        let (x, y) = match input {
            Input::Memory { x, y } => (x, y),
            Input::Dataset(ds) => read_all(&ds)?,
            Input::Csv { .. } => unreachable!(),
        };
        let m = fit(&x, &y, mode, a.h, &pen_u, &pen_v, &opts)?;
        if a.scores {
            let k = m.n_components();
            if let (Some(xi), Some(om)) = (&m.x_scores, &m.y_scores) {
                write_matrix(&stage.file("x_scores.csv"), &numbered("comp", k), xi, None)?;
                write_matrix(&stage.file("y_scores.csv"), &numbered("comp", k), om, None)?;
            }
        }
        (m, "memory")
    };
    model.classes = classes;

    write_components(&stage, "u.csv", &model.u, &x_names)?;
    write_components(&stage, "v.csv", &model.v, &y_names)?;
    write_components(&stage, "w_adj.csv", &model.w_adj, &x_names)?;
    write_components(&stage, "z_adj.csv", &model.z_adj, &y_names)?;
    write_components(&stage, "x_loadings.csv", &model.x_loadings, &x_names)?;
    write_components(&stage, "y_loadings.csv", &model.y_loadings, &y_names)?;
    if let Some(b) = &model.coefficients {
        write_matrix(&stage.file("coefficients.csv"), &y_names, b, Some(("variable", &x_names)))?;
    }
    write_matrix(
        &stage.file("singular_values.csv"),
        &["delta".to_string()],
        &DenseMatrix::from_column_slice(model.deltas.len(), 1, model.deltas.as_slice()),
        Some(("component", &numbered("comp", model.deltas.len()))),
    )?;
    write_convergence(&stage, &model)?;

    // scores and fitted values live in their own files, not the model
    model.x_scores = None;
    model.y_scores = None;
    model.fitted = None;
    let selected = |f: &dyn Fn(usize) -> Option<Vec<usize>>| -> Vec<Option<Vec<usize>>> {
        (0..model.n_components()).map(f).collect()
    };
    let config = json!({
        "path": path_used,
        "chunks": a.chunks,
        "engine": opts.engine,
        "center": opts.center,
        "scale": opts.scale,
        "eps": opts.eps,
        "max_iter": opts.max_iter,
        "parallel": opts.parallel_reduce,
        "selected_groups_u": selected(&|h| model.selected_groups_u(h)),
        "selected_groups_v": selected(&|h| model.selected_groups_v(h)),
    });
    let k = model.n_components();
    let stops = model.stops.clone();
    let converged = model.converged();
    let mf = ModelFile {
        format: MODEL_FORMAT.into(),
        version: MODEL_VERSION,
        x_names,
        y_names,
        config,
        model,
    };
    let path = stage.file(MODEL_FILE);
    let text = serde_json::to_string_pretty(&mf).map_err(|e| CliError::new(crate::error::Code::Internal, e.to_string()))?;
    fs::write(&path, text + "\n").map_err(|e| CliError::io(&path, e))?;
    stage.commit()?;

    let mut msg = format!("{mode}: {k} of {} components ({path_used} path) written to {}", a.h, a.out.display());
    for s in stops {
        msg.push_str(&format!("\nnote: stopped early: {}", serde_json::to_string(&s).unwrap_or_default()));
    }
    if !converged {
        msg.push_str("\nwarning: an inner loop hit its iteration limit; see convergence.csv");
    }
    Ok(msg)
}

fn write_streamed_scores<S: ChunkSource + ?Sized>(stage: &Staging, src: &S, m: &PlsFit) -> CliResult<()> {
    let header = numbered("comp", m.n_components());
    let mut xw = RowWriter::create(&stage.file("x_scores.csv"), &header)?;
    let mut yw = RowWriter::create(&stage.file("y_scores.csv"), &header)?;
    let mut failure = None;
    stream_scores(src, m, |_, xi, om| {
        if let Err(e) = xw.rows(&xi).and_then(|_| yw.rows(&om)) {
            failure = Some(e);
            return Err(plsforge::PlsError::InvalidInput("score output failed".into()));
        }
        Ok(())
    })
    .map_err(|e| failure.take().unwrap_or_else(|| e.into()))?;
    xw.finish()?;
    yw.finish()
}

fn write_convergence(stage: &Staging, m: &PlsFit) -> CliResult<()> {
    let mut w = RowWriter::create(
        &stage.file("convergence.csv"),
        &["component", "delta", "inner_coef", "iterations", "converged", "init_delta", "init_fallback"]
            .map(String::from),
    )?;
    // a component that stopped the fit has diagnostics but no delta
    let cell = |v: &plsforge::Vector, h: usize| v.get(h).map_or(String::new(), f64::to_string);
    for (h, d) in m.diagnostics.iter().enumerate() {
        w.line(&format!(
            "{},{},{},{},{},{},{}",
            h + 1,
            cell(&m.deltas, h),
            cell(&m.inner_coefs, h),
            d.iterations,
            d.converged,
            d.init_delta,
            d.init_fallback
        ))?;
    }
    w.finish()
}

// ---------------------------------------------------------------- predict

pub fn predict_cmd(a: &PredictArgs) -> CliResult<String> {
    let mf = load_model(&a.model)?;
    let model = &mf.model;
    if !model.mode.is_regression() {
        return Err(CliError::input(format!("prediction needs a pls-r model, this one is {}", model.mode)));
    }
    if a.classify && model.classes.is_none() {
        return Err(CliError::input("--classify needs a model fitted on class labels"));
    }
    let mut header = mf.y_names.clone();
    if a.classify {
        header.push("label".into());
    }
    let mut csv = NumericCsv::open(&a.x)?;
    if let Some(w) = csv.width() {
        if w != model.p {
            return Err(CliError::input(format!("{}: model expects {} columns, found {w}", a.x.display(), model.p)));
        }
    }
    let mut rows = 0usize;
    write_file_atomic(&a.out, |tmp| {
        let mut out = RowWriter::create(tmp, &header)?;
        let mut batch: Vec<f64> = Vec::new();
        let flush = |batch: &mut Vec<f64>, out: &mut RowWriter| -> CliResult<()> {
            if batch.is_empty() {
                return Ok(());
            }
            let x = DenseMatrix::from_row_slice(batch.len() / model.p, model.p, batch);
            let yhat = predict(model, &x)?;
            let labels = if a.classify { Some(classify(model, &x)?) } else { None };
            let classes = model.classes.as_deref().unwrap_or(&[]);
            for i in 0..yhat.nrows() {
                let mut cells: Vec<String> = yhat.row(i).iter().map(|v| v.to_string()).collect();
                if let Some(l) = &labels {
                    cells.push(classes[l[i]].clone());
                }
                out.line(&cells.join(","))?;
            }
            batch.clear();
            Ok(())
        };
        while let Some((_, row)) = csv.next_row()? {
            batch.extend(row);
            rows += 1;
            if batch.len() >= PREDICT_BATCH * model.p.max(1) {
                flush(&mut batch, &mut out)?;
            }
        }
        flush(&mut batch, &mut out)?;
        out.finish()
    })?;
    Ok(format!("predicted {rows} rows into {}", a.out.display()))
}

// ---------------------------------------------------------------- simulate

fn emit<G: RowGenerator>(gen: &mut G, a: &SimulateArgs, stage: &Staging) -> CliResult<()> {
    let (p, q) = gen.dims();
    match a.format {
        Format::Dataset => {
            let plan = plan_for(gen.n(), p, q, &a.chunking)?;
            plsforge::datagen::write_chunked(gen, stage.path(), plan)?;
        }
        Format::Csv => {
            let mut xw = RowWriter::create(&stage.file("x.csv"), &numbered("x", p))?;
            let mut yw = RowWriter::create(&stage.file("y.csv"), &numbered("y", q))?;
            let (mut x, mut y) = (vec![0.0; p], vec![0.0; q]);
            let join = |v: &[f64]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
            while gen.next_row(&mut x, &mut y) {
                xw.line(&join(&x))?;
                yw.line(&join(&y))?;
            }
            xw.finish()?;
            yw.finish()?;
        }
    }
    Ok(())
}

fn write_json(path: PathBuf, value: &serde_json::Value) -> CliResult<()> {
    let text = serde_json::to_string_pretty(value).expect("json value serializes");
    fs::write(&path, text + "\n").map_err(|e| CliError::io(&path, e))
}

pub fn simulate(a: &SimulateArgs) -> CliResult<String> {
    let stage = Staging::dir(&a.out, a.force)?;
    let msg = match a.design {
        Design::GroupPls => {
            let mut gen = GroupPlsGenerator::new(a.n, a.seed)?;
            let truth = gen.truth().clone();
            emit(&mut gen, a, &stage)?;
            write_json(
                stage.file("truth.json"),
                &json!({ "design": "group-pls", "n": a.n, "seed": a.seed, "group_index_base": 0, "truth": truth }),
            )?;
            format!("group-pls: {}x400 and {}x500 written to {}", a.n, a.n, a.out.display())
        }
        Design::Plsda => {
            let mut gen = PlsDaGenerator::new(a.n, a.seed);
            let truth = gen.truth().clone();
            let labels = gen.labels();
            emit(&mut gen, a, &stage)?;
            // no header, so the file feeds straight back into --labels
            let text: String = labels.iter().map(|l| format!("{l}\n")).collect();
            let path = stage.file("labels.csv");
            fs::write(&path, text).map_err(|e| CliError::io(&path, e))?;
            let class_map: Vec<_> = (0..truth.n_classes)
                .map(|k| json!({ "class": (k + 1).to_string(), "linked_groups": truth.linked_groups(k) }))
                .collect();
            write_json(
                stage.file("truth.json"),
                &json!({ "design": "plsda", "n": truth.n, "requested_n": a.n, "seed": a.seed,
                         "group_index_base": 0, "classes": class_map, "truth": truth }),
            )?;
            let mut m = format!("plsda: {}x{} with 3 classes written to {}", truth.n, truth.p(), a.out.display());
            if truth.n != a.n {
                m.push_str(&format!("\nnote: n rounded from {} to {} for balanced classes", a.n, truth.n));
            }
            m
        }
    };
    stage.commit()?;
    Ok(msg)
}

// ---------------------------------------------------------------- info

pub fn info(a: &InfoArgs) -> CliResult<String> {
    let value = if let Some(dir) = &a.data {
        let ds = open_dataset(dir)?;
        let m = ds.manifest();
        json!({ "kind": "dataset", "n": m.n, "p": m.p, "q": m.q, "chunks": m.chunks,
                "chunk_rows": m.chunk_rows, "classes": m.classes })
    } else {
        let dir = a.model.as_ref().ok_or_else(|| CliError::usage("give --data or --model"))?;
        let mf = load_model(dir)?;
        let m = &mf.model;
        json!({ "kind": "model", "mode": m.mode, "n": m.n, "p": m.p, "q": m.q,
                "requested_components": m.requested_components,
                "components": m.n_components(), "deltas": m.deltas.as_slice(),
                "pen_u": m.pen_u, "pen_v": m.pen_v, "stops": m.stops,
                "converged": m.converged(), "classes": m.classes, "config": mf.config })
    };
    Ok(serde_json::to_string_pretty(&value).expect("json value serializes"))
}
