//! Browser bindings for the interactive demo in `www/`.
//!
//! Every exported function takes plain strings and numbers and returns a
//! JSON string. The `*_json` functions hold the logic and run natively too.

use flatm::fcm::{self, FcmConfig};
use flatm::weighting::{self, GtwMethod, IdfVariant, DEFAULT_EPSILON};
use flatm::{corpus, CascadeSchedule, RawDocument, TokenizerConfig, TrainConfig};
use ndarray::Array2;
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

fn parse_points(points: &str) -> Result<Array2<f64>, String> {
    let rows: Vec<Vec<f64>> =
        serde_json::from_str(points).map_err(|e| format!("bad points: {e}"))?;
    let width = rows.first().map_or(0, Vec::len);
    if width == 0 || rows.iter().any(|r| r.len() != width) {
        return Err("points must be a non-empty list of equal-length coordinate lists".into());
    }
    let n = rows.len();
    Array2::from_shape_vec((n, width), rows.into_iter().flatten().collect())
        .map_err(|e| e.to_string())
}

fn documents(text: &str) -> Vec<RawDocument> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .enumerate()
        .map(|(i, l)| RawDocument::new((i + 1).to_string(), l))
        .collect()
}

fn method(name: &str) -> Result<GtwMethod, String> {
    name.parse().map_err(|e: flatm::Error| e.to_string())
}

/// Global weight of every term, one document per non-empty line, sorted by
/// decreasing weight.
pub fn term_weights_json(text: &str, gtw: &str) -> Result<String, String> {
    let gtw = method(gtw)?;
    let docs = documents(text);
    let (vocab, f) =
        corpus::build_matrix(&docs, &TokenizerConfig::default()).map_err(|e| e.to_string())?;
    let g = weighting::global_weights(&f, gtw, IdfVariant::default(), DEFAULT_EPSILON)
        .map_err(|e| e.to_string())?;
    let mut order: Vec<usize> = (0..vocab.len()).collect();
    order.sort_by(|&a, &b| g.clamped[b].total_cmp(&g.clamped[a]).then(a.cmp(&b)));
    let terms: Vec<Value> = order
        .into_iter()
        .map(|i| {
            let (_, counts) = f.row(i);
            json!({
                "term": vocab.term(i),
                "raw": g.raw[i],
                "clamped": g.clamped[i],
                "df": counts.len(),
                "count": counts.iter().map(|&c| u64::from(c)).sum::<u64>(),
            })
        })
        .collect();
    Ok(json!({
        "method": gtw.name(),
        "documents": docs.len(),
        "clamped": g.clamped_count(),
        "terms": terms,
    })
    .to_string())
}

/// Fuzzy c-means on points given as `[[x, y], ...]`.
pub fn cluster_points_json(
    points: &str,
    clusters: usize,
    fuzzifier: f64,
    seed: u64,
) -> Result<String, String> {
    let data = parse_points(points)?;
    let config = FcmConfig {
        clusters,
        fuzzifier,
        seed,
        ..FcmConfig::default()
    };
    let res = fcm::fcm_run(data.view(), &config).map_err(|e| e.to_string())?;
    let rows =
        |m: &Array2<f64>| -> Vec<Vec<f64>> { m.rows().into_iter().map(|r| r.to_vec()).collect() };
    Ok(json!({
        "membership": rows(&res.membership),
        "centers": rows(&res.centers),
        "objective": res.objective_trace,
        "iterations": res.iterations,
        "converged": res.converged,
    })
    .to_string())
}

/// Trains a model on one document per non-empty line and returns its top
/// words and document mixtures.
pub fn train_topics_json(
    text: &str,
    gtw: &str,
    topics: usize,
    seed: u64,
    cascade: bool,
    top: usize,
) -> Result<String, String> {
    let docs = documents(text);
    let (vocab, _) =
        corpus::build_matrix(&docs, &TokenizerConfig::default()).map_err(|e| e.to_string())?;
    let schedule = if cascade {
        // shorten the cascade for vocabularies too small for the full one
        let start = 10.min(vocab.len().saturating_sub(1));
        if start < 2 {
            return Err(format!("vocabulary of {} words is too small", vocab.len()));
        }
        Some(CascadeSchedule::new((2..=start).rev().collect()).map_err(|e| e.to_string())?)
    } else {
        None
    };
    let config = TrainConfig {
        gtw: method(gtw)?,
        topics,
        seed,
        cascade: schedule,
        ..TrainConfig::default()
    };
    let model = flatm::train(&docs, &config).map_err(|e| e.to_string())?;
    let mass = model.topic_mass();
    let topic_list: Vec<Value> = (0..model.topics())
        .map(|t| {
            let words: Vec<Value> = model
                .top_words(t, top)
                .expect("topic index in range")
                .into_iter()
                .map(|(term, p)| json!({ "term": term, "prob": p }))
                .collect();
            json!({ "mass": mass[t], "words": words })
        })
        .collect();
    let ptd = model.topic_given_doc();
    let doc_list: Vec<Value> = model
        .doc_ids()
        .iter()
        .enumerate()
        .map(|(j, id)| json!({ "id": id, "topics": ptd.column(j).to_vec() }))
        .collect();
    let stages: Vec<Value> = model
        .stages()
        .iter()
        .map(|s| json!({ "clusters": s.clusters, "iterations": s.iterations, "converged": s.converged }))
        .collect();
    Ok(json!({
        "vocabulary": model.vocabulary().len(),
        "topics": topic_list,
        "documents": doc_list,
        "stages": stages,
    })
    .to_string())
}

#[wasm_bindgen]
pub fn term_weights(text: &str, gtw: &str) -> Result<String, JsError> {
    term_weights_json(text, gtw).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn cluster_points(
    points: &str,
    clusters: usize,
    fuzzifier: f64,
    seed: u32,
) -> Result<String, JsError> {
    cluster_points_json(points, clusters, fuzzifier, u64::from(seed)).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn train_topics(
    text: &str,
    gtw: &str,
    topics: usize,
    seed: u32,
    cascade: bool,
    top: usize,
) -> Result<String, JsError> {
    train_topics_json(text, gtw, topics, u64::from(seed), cascade, top)
        .map_err(|e| JsError::new(&e))
}
