//! Browser bindings: trace a drawing, compare stroke orderings, watch the
//! toy fine-tuning loss fall. Every export returns JSON or CSV text.

use linesketch::emit::emit_svg;
use linesketch::fit::{CubicBezier, Stroke};
use linesketch::geom::Point;
use linesketch::lora::{fine_tune, loss_curve_csv, synthetic_dataset, AffineDenoiser, NoiseSchedule, TextEncoder, TrainConfig};
use linesketch::pipeline::{run_pipeline_on_raster, PipelineConfig, VectorFriendlinessReport};
use linesketch::plan::{greedy_plan, two_opt_improve, StrokePlan};
use linesketch::raster::GrayRaster;
use linesketch::synth::corpus;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use wasm_bindgen::prelude::*;

#[derive(Serialize)]
pub struct TraceResult {
    pub svg: String,
    pub report: VectorFriendlinessReport,
}

#[derive(Serialize)]
pub struct PlanDemo {
    pub greedy_travel: f64,
    pub improved_travel: f64,
    pub greedy_svg: String,
    pub improved_svg: String,
}

fn to_json<T: Serialize>(v: &T) -> String {
    serde_json::to_string(v).expect("demo types serialize")
}

pub fn shape_names() -> Vec<String> {
    corpus().into_iter().map(|s| s.name).collect()
}

fn trace_raster(image: &GrayRaster, max_turn_deg: f64) -> Result<TraceResult, String> {
    let cfg = PipelineConfig { max_turn_deg, ..PipelineConfig::default() };
    let out = run_pipeline_on_raster(image, &cfg).map_err(|e| e.to_string())?;
    Ok(TraceResult { svg: out.svg, report: out.report })
}

pub fn trace_named_shape(name: &str, max_turn_deg: f64) -> Result<TraceResult, String> {
    let shape = corpus().into_iter().find(|s| s.name == name).ok_or_else(|| format!("no shape named {name}"))?;
    trace_raster(&shape.image, max_turn_deg)
}

/// Traces canvas pixels (RGBA, row-major). Transparent pixels count as paper.
pub fn trace_rgba(rgba: &[u8], width: usize, height: usize, max_turn_deg: f64) -> Result<TraceResult, String> {
    if rgba.len() != width * height * 4 {
        return Err(format!("expected {} bytes for {width}x{height}, got {}", width * height * 4, rgba.len()));
    }
    let gray = rgba
        .chunks_exact(4)
        .map(|p| {
            let luma = (299 * p[0] as u32 + 587 * p[1] as u32 + 114 * p[2] as u32) / 1000;
            // composite over white
            ((luma * p[3] as u32 + 255 * (255 - p[3] as u32)) / 255) as u8
        })
        .collect();
    let image = GrayRaster::new(width, height, gray).map_err(|e| e.to_string())?;
    trace_raster(&image, max_turn_deg)
}

/// Short random strokes in a 100 mm square.
pub fn random_strokes(count: usize, seed: u64) -> Vec<Stroke> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let a = Point::new(rng.random_range(5.0..95.0), rng.random_range(5.0..95.0));
            let ang: f64 = rng.random_range(0.0..std::f64::consts::TAU);
            let len = rng.random_range(3.0..15.0);
            let b = Point::new((a.x + len * ang.cos()).clamp(0.0, 100.0), (a.y + len * ang.sin()).clamp(0.0, 100.0));
            Stroke::new(vec![CubicBezier::line(a, b)], false).expect("finite line")
        })
        .collect()
}

/// Strokes in black plus pen-up moves as dashed red lines.
fn plan_svg(plan: &StrokePlan, strokes: &[Stroke]) -> String {
    let mut svg = emit_svg(&plan.oriented_strokes(strokes), (100.0, 100.0));
    let mut travel = String::new();
    for m in &plan.travel {
        travel.push_str(&format!(
            "  <line x1=\"{:.3}\" y1=\"{:.3}\" x2=\"{:.3}\" y2=\"{:.3}\" stroke=\"#d33\" stroke-width=\"0.3\" stroke-dasharray=\"1 1\"/>\n",
            m.from.x, m.from.y, m.to.x, m.to.y
        ));
    }
    let at = svg.rfind("</svg>").expect("closing tag");
    svg.insert_str(at, &travel);
    svg
}

pub fn plan_comparison(count: usize, seed: u64) -> PlanDemo {
    let strokes = random_strokes(count, seed);
    let greedy = greedy_plan(&strokes, Point::new(0.0, 0.0));
    let improved = two_opt_improve(&greedy, &strokes, 50).expect("greedy plan is valid");
    PlanDemo {
        greedy_travel: greedy.total_travel,
        improved_travel: improved.total_travel,
        greedy_svg: plan_svg(&greedy, &strokes),
        improved_svg: plan_svg(&improved, &strokes),
    }
}

/// Loss curve CSV of a two-phase run on a small synthetic dataset.
pub fn training_curve(pairs: usize, step_size: f64, seed: u64) -> Result<String, String> {
    let encoder = TextEncoder::default();
    let data = synthetic_dataset(pairs.max(1), 8, &encoder, seed).map_err(|e| e.to_string())?;
    let init = AffineDenoiser::random(64, encoder.dim, 0.02, seed.wrapping_add(1));
    let run = fine_tune(&init, &data, &NoiseSchedule::default(), &TrainConfig::two_phase(step_size, seed))
        .map_err(|e| e.to_string())?;
    Ok(loss_curve_csv(&run.records))
}

#[wasm_bindgen(js_name = shapeNames)]
pub fn shape_names_js() -> String {
    to_json(&shape_names())
}

#[wasm_bindgen(js_name = traceShape)]
pub fn trace_shape_js(name: &str, max_turn_deg: f64) -> Result<String, JsValue> {
    trace_named_shape(name, max_turn_deg).map(|r| to_json(&r)).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen(js_name = traceCanvas)]
pub fn trace_canvas_js(rgba: &[u8], width: usize, height: usize, max_turn_deg: f64) -> Result<String, JsValue> {
    trace_rgba(rgba, width, height, max_turn_deg).map(|r| to_json(&r)).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen(js_name = planDemo)]
pub fn plan_demo_js(count: usize, seed: u32) -> String {
    to_json(&plan_comparison(count, seed as u64))
}

#[wasm_bindgen(js_name = trainCurve)]
pub fn train_curve_js(pairs: usize, step_size: f64, seed: u32) -> Result<String, JsValue> {
    training_curve(pairs, step_size, seed as u64).map_err(|e| JsValue::from_str(&e))
}
