//! Browser bindings: simulate a parameter matrix, fit a pasted expression
//! matrix, and re-prune a fitted matrix. Every function takes and returns
//! plain strings (CSV in, JSON out) so the page needs no glue beyond
//! `wasm-bindgen`.

use qscgrn::grn::{prune, to_network, DEFAULT_PRUNE_THRESHOLD};
use qscgrn::ingest::{binarize, observed_distribution, parse_matrix, MatrixFormat};
use qscgrn::model::{forward, ThetaMatrix};
use qscgrn::statevec::ket;
use qscgrn::train::{init_theta, optimize, InitStrategy, TrainConfig};
use qscgrn::Objective;
use serde_json::json;
use wasm_bindgen::prelude::*;

/// Largest register the page will simulate or fit.
pub const MAX_BROWSER_QUBITS: usize = 10;

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn read_theta(csv: &str) -> Result<ThetaMatrix, String> {
    let theta = ThetaMatrix::parse_csv(csv, "theta").map_err(err)?;
    if theta.n() > MAX_BROWSER_QUBITS {
        return Err(format!(
            "{} genes is more than the page allows ({MAX_BROWSER_QUBITS})",
            theta.n()
        ));
    }
    Ok(theta)
}

/// `{"kets": [...], "raw": [...], "p_out": [...] | null}` for a θ given as CSV.
#[wasm_bindgen]
pub fn simulate(theta_csv: &str) -> Result<String, String> {
    let theta = read_theta(theta_csv)?;
    let n = theta.n();
    let raw = forward(&theta).map_err(err)?.probabilities();
    let p_out = raw.zero_and_rescale().ok().map(|d| d.into_vec());
    Ok(json!({
        "kets": (0..1usize << n).map(|x| ket(x, n)).collect::<Vec<_>>(),
        "raw": raw.as_slice(),
        "p_out": p_out,
    })
    .to_string())
}

/// Fits a tab- or comma-separated genes × cells matrix and returns the
/// network, the fitted θ as CSV, and the final loss and error.
#[wasm_bindgen]
pub fn infer(matrix_text: &str, iterations: usize, prune_threshold: f64) -> Result<String, String> {
    let format = if matrix_text.lines().next().is_some_and(|l| l.contains('\t')) {
        MatrixFormat::Tsv
    } else {
        MatrixFormat::Csv
    };
    let matrix = parse_matrix(matrix_text.as_bytes(), format, "matrix").map_err(err)?;
    if matrix.n() > MAX_BROWSER_QUBITS {
        return Err(format!(
            "{} genes is more than the page allows ({MAX_BROWSER_QUBITS})",
            matrix.n()
        ));
    }
    let xb = binarize(&matrix);
    let observed = observed_distribution(&xb).map_err(err)?;
    let config = TrainConfig {
        max_iterations: iterations,
        ..Default::default()
    };
    let theta0 = init_theta(xb.activation_ratios(), InitStrategy::AllZeros).map_err(err)?;
    let objective = Objective::new(observed.distribution, observed.m, config.alpha).map_err(err)?;
    let outcome = optimize(&objective, &config, &theta0).map_err(err)?;
    let network =
        to_network(&prune(&outcome.theta, prune_threshold), xb.gene_names()).map_err(err)?;
    Ok(json!({
        "genes": xb.gene_names(),
        "theta_csv": outcome.theta.to_csv_string(),
        "loss": outcome.final_loss,
        "error": outcome.final_error,
        "iterations": outcome.iterations,
        "edges": network.edges,
        "dot": network.to_dot(),
    })
    .to_string())
}

/// Network JSON for θ pruned at `threshold`; genes default to `g0 … g{n-1}`
/// when `genes` is empty.
#[wasm_bindgen]
pub fn network(theta_csv: &str, genes: &str, threshold: f64) -> Result<String, String> {
    let theta = read_theta(theta_csv)?;
    let mut names: Vec<String> = genes
        .split([',', '\n'])
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(String::from)
        .collect();
    if names.is_empty() {
        names = (0..theta.n()).map(|k| format!("g{k}")).collect();
    }
    let network = to_network(&prune(&theta, threshold), &names).map_err(err)?;
    Ok(json!({ "edges": network.edges, "dot": network.to_dot() }).to_string())
}

#[wasm_bindgen]
pub fn default_prune_threshold() -> f64 {
    DEFAULT_PRUNE_THRESHOLD
}
