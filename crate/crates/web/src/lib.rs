//! wasm-bindgen bindings behind `www/index.html`.
//!
//! Every export returns a JSON string; the page parses it and draws on a canvas.
//! The plain-Rust functions underneath are what the native tests exercise.

use serde::Serialize;
use vqasc::ansatz::{catalog, AnsatzSpec};
use vqasc::datasets::GeneratorSpec;
use vqasc::evalmetrics::{accuracy, classical_fiedler, relabel};
use vqasc::vqasc::{cluster, GraphConfig, ObjectiveConfig, ReadoutConfig};
use vqasc::xpress::{report_from_fidelities, sample_fidelities, Mode};
use wasm_bindgen::prelude::*;

#[derive(Serialize)]
struct ClusterView {
    points: Vec<[f64; 2]>,
    truth: Vec<usize>,
    labels: Vec<usize>,
    oracle_labels: Vec<usize>,
    accuracy: f64,
    oracle_accuracy: f64,
    fiedler_value: f64,
    j_history: Vec<f64>,
    tau: f64,
    chosen_lambda: f64,
    cut_value: f64,
    /// `(re, im)` of the optimised amplitudes, for the phase plot.
    amplitudes: Vec<[f64; 2]>,
}

#[derive(Serialize)]
struct ExpressView {
    kl: String,
    empirical: Vec<f64>,
    haar: Vec<f64>,
}

#[derive(Serialize)]
struct CatalogItem {
    id: String,
    description: String,
}

fn to_json<T: Serialize>(v: &T) -> Result<String, String> {
    serde_json::to_string(v).map_err(|e| e.to_string())
}

/// Generates a two-class point cloud, clusters it and returns the picture data.
#[allow(clippy::too_many_arguments)]
pub fn run_cluster(
    kind: &str,
    n: usize,
    noise: f64,
    seed: u64,
    gamma: f64,
    k: usize,
    ansatz: &str,
    layers: usize,
    tau: f64,
) -> Result<String, String> {
    let kind = kind.parse().map_err(|e: vqasc::Error| e.to_string())?;
    let ds = GeneratorSpec::new(kind, n, noise, seed)
        .generate()
        .map_err(|e| e.to_string())?;
    let n_qubits = vqasc::vqasc::qubits_for(n).map_err(|e| e.to_string())?;
    let graph = GraphConfig { gamma, k: Some(k) };
    let objective = ObjectiveConfig {
        seed,
        ..ObjectiveConfig::with_tau(tau)
    };
    let readout = ReadoutConfig {
        dump_statevector: true,
        ..ReadoutConfig::default()
    };
    let spec = AnsatzSpec::new(ansatz, n_qubits, layers);
    let run = cluster(&ds, &graph, &spec, &objective, &readout).map_err(|e| e.to_string())?;
    let oracle = classical_fiedler(&run.laplacian).map_err(|e| e.to_string())?;
    let truth = relabel(ds.labels.as_deref().unwrap_or_default());
    let view = ClusterView {
        points: ds.points.row_iter().map(|r| [r[0], r[1]]).collect(),
        accuracy: accuracy(&run.result.labels, &truth).map_err(|e| e.to_string())?,
        oracle_accuracy: accuracy(&oracle.labels, &truth).map_err(|e| e.to_string())?,
        truth,
        labels: run.result.labels.clone(),
        oracle_labels: oracle.labels,
        fiedler_value: oracle.fiedler_value,
        j_history: run.trace.iterations.iter().map(|v| v.j).collect(),
        tau: run.trace.tau,
        chosen_lambda: run.result.chosen_lambda,
        cut_value: run.result.cut_value,
        amplitudes: run
            .result
            .statevector_dump
            .unwrap_or_default()
            .iter()
            .map(|a| [a.re, a.im])
            .collect(),
    };
    to_json(&view)
}

/// Fidelity histogram of a catalog circuit against the Haar reference.
pub fn run_expressibility(
    id: &str,
    n_qubits: usize,
    layers: usize,
    mode: &str,
    samples: usize,
    bins: usize,
    seed: u64,
) -> Result<String, String> {
    let mode: Mode = mode.parse().map_err(|e: vqasc::Error| e.to_string())?;
    let spec = AnsatzSpec::new(id, n_qubits, layers);
    let fids = sample_fidelities(&spec, samples, mode, seed).map_err(|e| e.to_string())?;
    let report = report_from_fidelities(&spec, mode, &fids, bins, seed).map_err(|e| e.to_string())?;
    to_json(&ExpressView {
        kl: report.kl_value.to_string(),
        empirical: report.histogram.empirical_probs,
        haar: report.haar_probs,
    })
}

pub fn list_catalog() -> Result<String, String> {
    let items: Vec<CatalogItem> = catalog()
        .into_iter()
        .map(|e| CatalogItem {
            id: e.id,
            description: e.description,
        })
        .collect();
    to_json(&items)
}

#[wasm_bindgen(js_name = clusterDataset)]
#[allow(clippy::too_many_arguments)]
pub fn cluster_dataset(
    kind: &str,
    n: usize,
    noise: f64,
    seed: u64,
    gamma: f64,
    k: usize,
    ansatz: &str,
    layers: usize,
    tau: f64,
) -> Result<String, JsError> {
    run_cluster(kind, n, noise, seed, gamma, k, ansatz, layers, tau).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = expressibilityHistogram)]
pub fn expressibility_histogram(
    id: &str,
    n_qubits: usize,
    layers: usize,
    mode: &str,
    samples: usize,
    bins: usize,
    seed: u64,
) -> Result<String, JsError> {
    run_expressibility(id, n_qubits, layers, mode, samples, bins, seed).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = catalogIds)]
pub fn catalog_ids() -> Result<String, JsError> {
    list_catalog().map_err(|e| JsError::new(&e))
}
