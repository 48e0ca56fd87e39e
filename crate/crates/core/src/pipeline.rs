//! End-to-end tracing: grayscale raster → strokes → plan → SVG, motion
//! program and vector-friendliness report.

use std::fmt::{self, Write as _};
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::emit::{emit_program, emit_svg, estimate_draw_seconds, pen_lift_count, MotionProgram, ProgramHeader};
use crate::fit::{fit_stroke, simplify, to_workspace, FitOptions, PixelToMm, Stroke, WorkspacePath};
use crate::geom::Point;
use crate::plan::{greedy_plan, two_opt_improve, StrokePlan};
use crate::raster::{binarize, build_skeleton_graph, extract_paths, read_pgm, thin, GrayRaster, PathOptions, Threshold};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Config,
    Decode,
    Skeleton,
    Fit,
    Plan,
    Emit,
    Write,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Stage::Config => "config",
            Stage::Decode => "decode",
            Stage::Skeleton => "skeleton",
            Stage::Fit => "fit",
            Stage::Plan => "plan",
            Stage::Emit => "emit",
            Stage::Write => "write",
        };
        f.write_str(name)
    }
}

/// Whether a failure is the caller's fault or a broken internal guarantee.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Input,
    Invariant,
}

#[derive(Debug, Error)]
#[error("{stage} stage: {message}")]
pub struct PipelineError {
    pub stage: Stage,
    pub kind: ErrorKind,
    pub message: String,
}

impl PipelineError {
    pub fn input(stage: Stage, err: impl fmt::Display) -> Self {
        Self { stage, kind: ErrorKind::Input, message: err.to_string() }
    }

    pub fn invariant(stage: Stage, err: impl fmt::Display) -> Self {
        Self { stage, kind: ErrorKind::Invariant, message: err.to_string() }
    }
}

/// Every knob of a run. Missing TOML keys take the defaults below.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub input: Option<PathBuf>,
    pub output_dir: Option<PathBuf>,
    /// Fixed binarization threshold; Otsu when absent.
    pub threshold: Option<u8>,
    /// Treat light pixels as ink.
    pub invert: bool,
    pub thinning: bool,
    pub max_turn_deg: f64,
    pub min_path_px: usize,
    pub mm_per_pixel: f64,
    pub origin_x: f64,
    pub origin_y: f64,
    pub flip_y: bool,
    pub rdp_epsilon: f64,
    pub max_err: f64,
    pub corner_deg: f64,
    pub start_x: f64,
    pub start_y: f64,
    pub two_opt_passes: usize,
    pub flatten_tol: f64,
    /// Workspace size; derived from the drawing extent plus origin margins when absent.
    pub workspace_width: Option<f64>,
    pub workspace_height: Option<f64>,
    pub pen_up_z: f64,
    pub pen_down_z: f64,
    pub draw_feed: f64,
    pub travel_feed: f64,
    pub lift_seconds: f64,
    pub continuity_threshold_mm: f64,
    /// Recorded for reproducibility; the geometry stages are deterministic and draw no randomness.
    pub seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            input: None,
            output_dir: None,
            threshold: None,
            invert: false,
            thinning: true,
            max_turn_deg: 45.0,
            min_path_px: 4,
            mm_per_pixel: 0.25,
            origin_x: 10.0,
            origin_y: 10.0,
            flip_y: true,
            rdp_epsilon: 0.1,
            max_err: 0.35,
            corner_deg: 100.0,
            start_x: 0.0,
            start_y: 0.0,
            two_opt_passes: 50,
            flatten_tol: 0.2,
            workspace_width: None,
            workspace_height: None,
            pen_up_z: 5.0,
            pen_down_z: 0.0,
            draw_feed: 50.0,
            travel_feed: 150.0,
            lift_seconds: 0.3,
            continuity_threshold_mm: 10.0,
            seed: 0,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<(), PipelineError> {
        let positive = [
            ("mm_per_pixel", self.mm_per_pixel),
            ("rdp_epsilon", self.rdp_epsilon),
            ("max_err", self.max_err),
            ("corner_deg", self.corner_deg),
            ("flatten_tol", self.flatten_tol),
            ("draw_feed", self.draw_feed),
            ("travel_feed", self.travel_feed),
            ("continuity_threshold_mm", self.continuity_threshold_mm),
        ];
        let non_negative = [
            ("max_turn_deg", self.max_turn_deg),
            ("origin_x", self.origin_x),
            ("origin_y", self.origin_y),
            ("start_x", self.start_x),
            ("start_y", self.start_y),
            ("lift_seconds", self.lift_seconds),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(PipelineError::input(Stage::Config, format!("{name} must be > 0, got {v}")));
            }
        }
        for (name, v) in non_negative {
            if !(v.is_finite() && v >= 0.0) {
                return Err(PipelineError::input(Stage::Config, format!("{name} must be >= 0, got {v}")));
            }
        }
        for (name, v) in [("workspace_width", self.workspace_width), ("workspace_height", self.workspace_height)] {
            if let Some(v) = v {
                if !(v.is_finite() && v > 0.0) {
                    return Err(PipelineError::input(Stage::Config, format!("{name} must be > 0, got {v}")));
                }
            }
        }
        if !(self.pen_up_z.is_finite() && self.pen_down_z.is_finite()) {
            return Err(PipelineError::input(Stage::Config, "pen heights must be finite"));
        }
        Ok(())
    }

    pub fn threshold_policy(&self) -> Threshold {
        self.threshold.map_or(Threshold::Otsu, Threshold::Fixed)
    }

    pub fn path_options(&self) -> PathOptions {
        PathOptions { max_turn_deg: self.max_turn_deg, min_path_px: self.min_path_px }
    }

    pub fn fit_options(&self) -> FitOptions {
        FitOptions { max_err: self.max_err, corner_deg: self.corner_deg }
    }

    /// Workspace for an image of the given pixel size: extent × scale plus the
    /// origin margin on both sides, unless set explicitly.
    pub fn workspace_for_image(&self, width: usize, height: usize) -> (f64, f64) {
        (
            self.workspace_width.unwrap_or(width as f64 * self.mm_per_pixel + 2.0 * self.origin_x),
            self.workspace_height.unwrap_or(height as f64 * self.mm_per_pixel + 2.0 * self.origin_y),
        )
    }

    pub fn header(&self, workspace: (f64, f64)) -> ProgramHeader {
        use crate::emit::Fixed;
        ProgramHeader {
            pen_up_z: Fixed::from_f64(self.pen_up_z),
            pen_down_z: Fixed::from_f64(self.pen_down_z),
            draw_feed: Fixed::from_f64(self.draw_feed),
            travel_feed: Fixed::from_f64(self.travel_feed),
            lift_seconds: Fixed::from_f64(self.lift_seconds),
            ..ProgramHeader::with_workspace(workspace.0, workspace.1)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VectorFriendlinessReport {
    pub stroke_count: usize,
    pub total_ink_mm: f64,
    pub total_travel_mm: f64,
    pub mean_segments_per_stroke: f64,
    pub mean_stroke_length_mm: f64,
    /// Fraction of ink carried by strokes at least the continuity threshold long.
    pub continuity_score: f64,
    pub pen_lifts: u64,
    pub estimated_draw_seconds: f64,
}

/// Metrics of a plan. An empty plan scores continuity 1.0.
pub fn compute_metrics(
    plan: &StrokePlan,
    strokes: &[Stroke],
    header: &ProgramHeader,
    continuity_threshold_mm: f64,
) -> VectorFriendlinessReport {
    let n = plan.items.len();
    let lengths: Vec<f64> = plan.items.iter().map(|it| strokes[it.stroke].length()).collect();
    let long_ink = lengths.iter().filter(|l| **l >= continuity_threshold_mm).fold(0.0, |a, l| a + l);
    let ink_sum = lengths.iter().fold(0.0, |a, l| a + l);
    let segments: usize = plan.items.iter().map(|it| strokes[it.stroke].segments().len()).sum();
    let lifts = pen_lift_count(n);
    let mean = |total: f64| if n == 0 { 0.0 } else { total / n as f64 };
    VectorFriendlinessReport {
        stroke_count: n,
        total_ink_mm: plan.total_ink,
        total_travel_mm: plan.total_travel,
        mean_segments_per_stroke: mean(segments as f64),
        mean_stroke_length_mm: mean(plan.total_ink),
        continuity_score: if ink_sum > 0.0 { long_ink / ink_sum } else { 1.0 },
        pen_lifts: lifts,
        estimated_draw_seconds: estimate_draw_seconds(plan.total_ink, plan.total_travel, lifts, header),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldDelta {
    pub field: String,
    pub a: f64,
    pub b: f64,
    /// `b − a`.
    pub delta: f64,
    /// `b / a`; absent when `a` is zero.
    pub ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunComparison {
    pub fields: Vec<FieldDelta>,
}

pub fn compare_runs(a: &VectorFriendlinessReport, b: &VectorFriendlinessReport) -> RunComparison {
    let pairs = [
        ("stroke_count", a.stroke_count as f64, b.stroke_count as f64),
        ("total_ink_mm", a.total_ink_mm, b.total_ink_mm),
        ("total_travel_mm", a.total_travel_mm, b.total_travel_mm),
        ("mean_segments_per_stroke", a.mean_segments_per_stroke, b.mean_segments_per_stroke),
        ("mean_stroke_length_mm", a.mean_stroke_length_mm, b.mean_stroke_length_mm),
        ("continuity_score", a.continuity_score, b.continuity_score),
        ("pen_lifts", a.pen_lifts as f64, b.pen_lifts as f64),
        ("estimated_draw_seconds", a.estimated_draw_seconds, b.estimated_draw_seconds),
    ];
    RunComparison {
        fields: pairs
            .into_iter()
            .map(|(field, a, b)| FieldDelta {
                field: field.to_string(),
                a,
                b,
                delta: b - a,
                ratio: (a != 0.0).then(|| b / a),
            })
            .collect(),
    }
}

impl fmt::Display for RunComparison {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:<26} {:>14} {:>14} {:>14} {:>10}", "field", "a", "b", "delta", "ratio")?;
        for d in &self.fields {
            let ratio = d.ratio.map_or_else(|| "-".to_string(), |r| format!("{r:.4}"));
            writeln!(f, "{:<26} {:>14.4} {:>14.4} {:>14.4} {:>10}", d.field, d.a, d.b, d.delta, ratio)?;
        }
        Ok(())
    }
}

/// Everything one run produces.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutputs {
    pub strokes: Vec<Stroke>,
    pub plan: StrokePlan,
    pub svg: String,
    pub program: MotionProgram,
    pub report: VectorFriendlinessReport,
}

impl RunOutputs {
    pub fn report_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.report).expect("report serializes");
        s.push('\n');
        s
    }

    /// `(file name, contents)` of the three artifacts.
    pub fn files(&self) -> [(&'static str, String); 3] {
        [
            (SVG_FILE, self.svg.clone()),
            (PROGRAM_FILE, self.program.to_string()),
            (REPORT_FILE, self.report_json()),
        ]
    }
}

pub const SVG_FILE: &str = "strokes.svg";
pub const PROGRAM_FILE: &str = "program.txt";
pub const REPORT_FILE: &str = "report.json";

/// Trace a grayscale image into fitted strokes in workspace millimeters.
pub fn trace_strokes(image: &GrayRaster, cfg: &PipelineConfig) -> Result<Vec<Stroke>, PipelineError> {
    cfg.validate()?;
    let source = if cfg.invert { image.inverted() } else { image.clone() };
    let ink = binarize(&source, cfg.threshold_policy());
    let skeleton = if cfg.thinning { thin(&ink) } else { ink };
    let graph = build_skeleton_graph(&skeleton).map_err(|e| {
        let kind = if cfg.thinning { ErrorKind::Invariant } else { ErrorKind::Input };
        PipelineError { stage: Stage::Skeleton, kind, message: e.to_string() }
    })?;
    let map = PixelToMm {
        scale: cfg.mm_per_pixel,
        origin: Point::new(cfg.origin_x, cfg.origin_y),
        flip_y: cfg.flip_y,
        image_height: image.height(),
    };
    extract_paths(&graph, cfg.path_options())
        .iter()
        .map(|path| match to_workspace(path, &map).map_err(|e| PipelineError::invariant(Stage::Fit, e))? {
            WorkspacePath::Dot(p) => Ok(Stroke::dot(p)),
            WorkspacePath::Line(line) => fit_stroke(&simplify(&line, cfg.rdp_epsilon), cfg.fit_options())
                .map_err(|e| PipelineError::invariant(Stage::Fit, e)),
        })
        .collect()
}

/// Plan, emit and score already-fitted strokes.
pub fn plan_and_emit(
    strokes: Vec<Stroke>,
    workspace: (f64, f64),
    cfg: &PipelineConfig,
) -> Result<RunOutputs, PipelineError> {
    cfg.validate()?;
    let start = Point::new(cfg.start_x, cfg.start_y);
    let plan = two_opt_improve(&greedy_plan(&strokes, start), &strokes, cfg.two_opt_passes)
        .map_err(|e| PipelineError::invariant(Stage::Plan, e))?;
    let header = cfg.header(workspace);
    let program = emit_program(&plan, &strokes, &header, cfg.flatten_tol).map_err(|e| {
        use crate::emit::ProgramError;
        match e {
            ProgramError::StrokeOutOfWorkspace { .. } | ProgramError::OutOfBounds { .. } => {
                PipelineError::input(Stage::Emit, e)
            }
            _ => PipelineError::invariant(Stage::Emit, e),
        }
    })?;
    let svg = emit_svg(&plan.oriented_strokes(&strokes), workspace);
    let report = compute_metrics(&plan, &strokes, &header, cfg.continuity_threshold_mm);
    Ok(RunOutputs { strokes, plan, svg, program, report })
}

/// Pure in-memory run on a decoded raster.
pub fn run_pipeline_on_raster(image: &GrayRaster, cfg: &PipelineConfig) -> Result<RunOutputs, PipelineError> {
    let strokes = trace_strokes(image, cfg)?;
    plan_and_emit(strokes, cfg.workspace_for_image(image.width(), image.height()), cfg)
}

/// Workspace enclosing the strokes with the configured origin margin on the far sides.
pub fn workspace_for_strokes(strokes: &[Stroke], cfg: &PipelineConfig) -> (f64, f64) {
    let (mut w, mut h) = (0.0f64, 0.0f64);
    for c in strokes.iter().flat_map(|s| s.segments()) {
        for p in [c.p0, c.p1, c.p2, c.p3] {
            w = w.max(p.x);
            h = h.max(p.y);
        }
    }
    (
        cfg.workspace_width.unwrap_or(w + cfg.origin_x),
        cfg.workspace_height.unwrap_or(h + cfg.origin_y),
    )
}

/// Writes every file to a temporary sibling first, then renames them all.
/// On failure nothing new is left behind in `dir`.
pub fn write_outputs_atomically(dir: &Path, files: &[(&str, String)]) -> Result<Vec<PathBuf>, PipelineError> {
    let fail = |e: std::io::Error, p: &Path| PipelineError::input(Stage::Write, format!("{}: {e}", p.display()));
    fs::create_dir_all(dir).map_err(|e| fail(e, dir))?;
    let mut temps: Vec<(PathBuf, PathBuf)> = Vec::new();
    let cleanup = |temps: &[(PathBuf, PathBuf)], done: &[PathBuf]| {
        for (t, _) in temps {
            let _ = fs::remove_file(t);
        }
        for d in done {
            let _ = fs::remove_file(d);
        }
    };
    for (name, body) in files {
        let target = dir.join(name);
        let temp = dir.join(format!(".{name}.tmp"));
        if let Err(e) = fs::write(&temp, body) {
            cleanup(&temps, &[]);
            let _ = fs::remove_file(&temp);
            return Err(fail(e, &temp));
        }
        temps.push((temp, target));
    }
    let mut done = Vec::new();
    for (i, (temp, target)) in temps.iter().enumerate() {
        if let Err(e) = fs::rename(temp, target) {
            cleanup(&temps[i..], &done);
            return Err(fail(e, target));
        }
        done.push(target.clone());
    }
    Ok(done)
}

/// File-level run: reads the PGM named by `cfg.input` and writes the three
/// artifacts into `cfg.output_dir`.
pub fn run_pipeline(cfg: &PipelineConfig) -> Result<RunOutputs, PipelineError> {
    cfg.validate()?;
    let input = cfg.input.as_ref().ok_or_else(|| PipelineError::input(Stage::Config, "no input path"))?;
    let out_dir = cfg.output_dir.as_ref().ok_or_else(|| PipelineError::input(Stage::Config, "no output directory"))?;
    let bytes = fs::read(input).map_err(|e| PipelineError::input(Stage::Decode, format!("{}: {e}", input.display())))?;
    let image = read_pgm(&bytes).map_err(|e| PipelineError::input(Stage::Decode, e))?;
    let outputs = run_pipeline_on_raster(&image, cfg)?;
    write_outputs_atomically(out_dir, &outputs.files())?;
    Ok(outputs)
}

/// Plain-text summary of a report.
pub fn report_summary(r: &VectorFriendlinessReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "strokes: {}", r.stroke_count);
    let _ = writeln!(s, "ink: {:.2} mm, travel: {:.2} mm", r.total_ink_mm, r.total_travel_mm);
    let _ = writeln!(s, "continuity: {:.3}", r.continuity_score);
    let _ = writeln!(s, "estimated drawing time: {:.1} s", r.estimated_draw_seconds);
    s
}
