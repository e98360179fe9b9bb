//! Three operations for the browser demo in `www/`. Every function takes and
//! returns strings so the JavaScript side needs no glue beyond
//! `wasm-bindgen`. Errors surface as thrown strings.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use lg_core::analysis::{genus_with_span, predicted_extremes, summarize, GenusReport, TermSummary};
use lg_core::extract::{extract as extract_coords, TraceTriple};
use lg_core::{Constants, LaurentPoly, Pipeline};

/// Largest `n` offered in the browser; the browser thread has no cache and
/// the polynomial text grows quadratically.
pub const MAX_N: u32 = 30;

fn check_n(n: u32) -> Result<(), String> {
    if n > MAX_N {
        return Err(format!("n = {n} is above the demo limit of {MAX_N}"));
    }
    Ok(())
}

fn compute(n: u32) -> LaurentPoly {
    Pipeline::new(Constants::builtin()).compute(n as u64).polynomial
}

/// `LG(AS(n))` in canonical text form.
pub fn lg_text(n: u32) -> Result<String, String> {
    check_n(n)?;
    Ok(compute(n).to_string())
}

#[derive(Serialize)]
struct Analysis {
    n: u32,
    terms: usize,
    summary: TermSummary,
    predicted: TermSummary,
    closed_form_holds: bool,
    alexander_check: bool,
    genus: GenusReport,
}

/// Extremal terms, span and genus of `AS(n)` as JSON.
pub fn analysis_json(n: u32) -> Result<String, String> {
    check_n(n)?;
    if n == 0 {
        return Err("analysis needs n >= 1".into());
    }
    let p = compute(n);
    let summary = summarize(&p).map_err(|e| e.to_string())?;
    let predicted = predicted_extremes(n as u64);
    let doc = Analysis {
        n,
        terms: p.len(),
        closed_form_holds: summary == predicted,
        alexander_check: lg_core::pipeline::q1_check(&p),
        genus: genus_with_span(n as u64, Some(summary.s_span)),
        summary,
        predicted,
    };
    serde_json::to_string_pretty(&doc).map_err(|e| e.to_string())
}

/// Basis coordinates `(ll, cc, xx)` from three traces in canonical text.
pub fn extract_text(tr_r: &str, tr_t: &str, tr_twisted_r: &str) -> Result<String, String> {
    let parse = |name: &str, s: &str| s.parse::<LaurentPoly>().map_err(|e| format!("{name}: {e}"));
    let t = TraceTriple::new(parse("tr_R", tr_r)?, parse("tr_T", tr_t)?, parse("twisted tr_R", tr_twisted_r)?);
    let v = extract_coords(&t).map_err(|e| e.to_string())?;
    let [ll, cc, xx] = v.coords();
    Ok(format!("ll: {ll}\ncc: {cc}\nxx: {xx}"))
}

#[wasm_bindgen(js_name = lgPolynomial)]
pub fn lg_polynomial(n: u32) -> Result<String, JsValue> {
    lg_text(n).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen(js_name = analyze)]
pub fn analyze(n: u32) -> Result<String, JsValue> {
    analysis_json(n).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen(js_name = extract)]
pub fn extract(tr_r: &str, tr_t: &str, tr_twisted_r: &str) -> Result<String, JsValue> {
    extract_text(tr_r, tr_t, tr_twisted_r).map_err(|e| JsValue::from_str(&e))
}
