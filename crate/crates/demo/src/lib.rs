//! Browser bindings for a small interactive tour of the pipeline.
//!
//! Every exported function returns a JSON string; the page in `www/` renders
//! it. The `*_impl` functions carry the logic so they can be tested natively.

use mrtrim_core::analyzer;
use mrtrim_core::checker::{Tolerance, VerdictStatus};
use mrtrim_core::miner::{self, MinerConfig};
use mrtrim_core::mr::{MrId, MrParams};
use mrtrim_core::pipeline;
use mrtrim_core::report::ExecutionArtifact;
use mrtrim_core::tdgen::{Budget, FuzzConfig};
use serde::Serialize;
use serde_json::json;
use wasm_bindgen::prelude::*;

/// The browser has no worker pool here, so keep runs small.
const MAX_COUNT: u32 = 5000;

fn fuzz_config(preset: &str, seed: u32, count: u32) -> Result<FuzzConfig, String> {
    if count == 0 || count > MAX_COUNT {
        return Err(format!("count must lie in 1..={MAX_COUNT}"));
    }
    let base = match preset {
        "rq1" => FuzzConfig::rq1(seed.into()),
        "rq2" => FuzzConfig::rq2(seed.into()),
        other => return Err(format!("unknown preset `{other}`")),
    };
    Ok(FuzzConfig {
        budget: Budget::Count(count.into()),
        ..base
    })
}

fn checked_runs(cfg: &FuzzConfig, methods: &[String]) -> Result<Vec<ExecutionArtifact>, String> {
    let td = pipeline::generate_stage(cfg).map_err(|e| e.to_string())?;
    let t = pipeline::transform_stage(&td, MrParams::default(), &MrId::ALL, cfg.seed, "td.json").map_err(|e| e.to_string())?;
    let mut execs = pipeline::run_stage(&t, methods, "transformed.json").map_err(|e| e.to_string())?;
    for e in &mut execs {
        pipeline::check_stage(e, Tolerance::default());
    }
    Ok(execs)
}

fn to_json<T: Serialize>(value: &T) -> Result<String, String> {
    serde_json::to_string(value).map_err(|e| e.to_string())
}

pub fn methods_impl() -> Result<String, String> {
    let list: Vec<_> = mrtrim_core::corpus::list_methods()
        .into_iter()
        .map(|m| json!({ "name": m.name, "min_arity": m.min_arity, "permutation_invariant": m.permutation_invariant }))
        .collect();
    to_json(&list)
}

/// The first `rows` data of a run with their six follow-up inputs.
pub fn preview_impl(preset: &str, seed: u32, rows: u32) -> Result<String, String> {
    let cfg = fuzz_config(preset, seed, rows)?;
    let td = pipeline::generate_stage(&cfg).map_err(|e| e.to_string())?;
    let t = pipeline::transform_stage(&td, MrParams::default(), &MrId::ALL, cfg.seed, "td.json").map_err(|e| e.to_string())?;
    let rows: Vec<_> = t
        .data
        .iter()
        .map(|r| {
            let followups: serde_json::Map<String, serde_json::Value> =
                r.followups.iter().map(|(mr, f)| (mr.to_string(), json!(f))).collect();
            json!({ "id": r.id, "td": r.td, "followups": followups })
        })
        .collect();
    to_json(&json!({ "config": cfg, "rows": rows }))
}

/// Every built-in method against every relation.
pub fn grid_impl(preset: &str, seed: u32, count: u32) -> Result<String, String> {
    let cfg = fuzz_config(preset, seed, count)?;
    let methods: Vec<String> = mrtrim_core::corpus::list_methods().iter().map(|m| m.name.to_string()).collect();
    let execs = checked_runs(&cfg, &methods)?;
    let analysis = pipeline::analyze_stage(&execs, None, 0).map_err(|e| e.to_string())?;
    let reports = analysis.report_list();
    to_json(&json!({
        "mrs": MrId::ALL,
        "reports": reports,
        "table": analyzer::render_table(&reports),
    }))
}

/// Constraints for one (method, relation) pair.
pub fn mine_impl(preset: &str, seed: u32, count: u32, method: &str, mr: &str, top_k: u32) -> Result<String, String> {
    let cfg = fuzz_config(preset, seed, count)?;
    let mr: MrId = mr.parse().map_err(|e: mrtrim_core::Error| e.to_string())?;
    let execs = checked_runs(&cfg, &[method.to_string()])?;
    let trials: Vec<(miner::DataFeatures, VerdictStatus)> = execs[0]
        .records
        .iter()
        .filter(|r| r.mr == mr)
        .filter_map(|r| Some((miner::featurize(&r.source_input), r.verdict.as_ref()?.status)))
        .collect();
    let rules = miner::mine(&trials, &MinerConfig::default()).map_err(|e| e.to_string())?;
    let top: Vec<_> = miner::distinct_top(&rules, &trials, top_k as usize)
        .into_iter()
        .map(|r| {
            json!({
                "text": r.text(),
                "description": r.describe(method, mr),
                "support": r.support,
                "precision": r.precision,
                "recall": r.recall,
            })
        })
        .collect();
    let mut counts = analyzer::Counts::default();
    for (_, s) in &trials {
        counts.add(*s);
    }
    to_json(&json!({
        "method": method,
        "mr": mr,
        "report": analyzer::MethodMrReport::from_counts(method, mr, counts),
        "rules": top,
    }))
}

fn js(r: Result<String, String>) -> Result<String, JsValue> {
    r.map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn methods() -> Result<String, JsValue> {
    js(methods_impl())
}

#[wasm_bindgen]
pub fn preview(preset: &str, seed: u32, rows: u32) -> Result<String, JsValue> {
    js(preview_impl(preset, seed, rows))
}

#[wasm_bindgen]
pub fn grid(preset: &str, seed: u32, count: u32) -> Result<String, JsValue> {
    js(grid_impl(preset, seed, count))
}

#[wasm_bindgen]
pub fn mine(preset: &str, seed: u32, count: u32, method: &str, mr: &str, top_k: u32) -> Result<String, JsValue> {
    js(mine_impl(preset, seed, count, method, mr, top_k))
}
