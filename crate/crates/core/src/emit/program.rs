//! Line-oriented pen-motion program.
//!
//! ```text
//! # comment
//! UNITS mm
//! WORKSPACE <width> <height>
//! PEN_UP_Z <z>
//! PEN_DOWN_Z <z>
//! DRAW_FEED <mm/s>
//! TRAVEL_FEED <mm/s>
//! LIFT_SECONDS <s>
//! BEGIN
//! PENUP | PENDOWN | MOVE <x> <y> | DOT <x> <y>     (one per line)
//! END
//! # ink_mm <v>
//! # travel_mm <v>
//! # pen_lifts <n>
//! # estimated_seconds <v>
//! ```
//!
//! Numbers carry exactly four decimals. Lines end with LF.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::flatten::flatten;
use super::svg::format_coord;
use crate::fit::Stroke;
use crate::geom::Point;
use crate::plan::StrokePlan;

#[derive(Debug, Error, PartialEq)]
pub enum ProgramError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: unknown opcode \"{opcode}\"")]
    UnknownOpcode { line: usize, opcode: String },
    #[error("line {line}: PENDOWN while the pen is already down")]
    DoublePenDown { line: usize },
    #[error("line {line}: {message}")]
    Invariant { line: usize, message: String },
    #[error("line {line}: coordinate ({x}, {y}) outside the workspace")]
    OutOfBounds { line: usize, x: String, y: String },
    #[error("stroke {stroke}: coordinate ({x}, {y}) outside the workspace")]
    StrokeOutOfWorkspace { stroke: usize, x: String, y: String },
}

/// A length quantized to 1e-4 mm (or seconds); what the text format can
/// represent exactly.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
pub struct Fixed(pub i64);

impl Fixed {
    pub fn from_f64(v: f64) -> Self {
        Fixed((v * 1e4).round() as i64)
    }

    pub fn to_f64(self) -> f64 {
        self.0 as f64 / 1e4
    }

    fn parse(s: &str) -> Option<Self> {
        let v: f64 = s.parse().ok()?;
        v.is_finite().then(|| Fixed::from_f64(v))
    }
}

impl fmt::Display for Fixed {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sign = if self.0 < 0 { "-" } else { "" };
        let a = self.0.unsigned_abs();
        write!(f, "{sign}{}.{:04}", a / 10_000, a % 10_000)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProgramHeader {
    pub workspace_width: Fixed,
    pub workspace_height: Fixed,
    pub pen_up_z: Fixed,
    pub pen_down_z: Fixed,
    pub draw_feed: Fixed,
    pub travel_feed: Fixed,
    /// Time charged per pen lift when estimating drawing duration.
    pub lift_seconds: Fixed,
}

impl ProgramHeader {
    /// Header with default pen heights, feeds (50 / 150 mm/s) and a 0.3 s
    /// lift cost for a workspace of the given size.
    pub fn with_workspace(width: f64, height: f64) -> Self {
        Self {
            workspace_width: Fixed::from_f64(width),
            workspace_height: Fixed::from_f64(height),
            pen_up_z: Fixed::from_f64(5.0),
            pen_down_z: Fixed::from_f64(0.0),
            draw_feed: Fixed::from_f64(50.0),
            travel_feed: Fixed::from_f64(150.0),
            lift_seconds: Fixed::from_f64(0.3),
        }
    }

    fn contains(&self, x: Fixed, y: Fixed) -> bool {
        x.0 >= 0 && y.0 >= 0 && x <= self.workspace_width && y <= self.workspace_height
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Instruction {
    PenUp,
    PenDown,
    Move { x: Fixed, y: Fixed },
    Dot { x: Fixed, y: Fixed },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Trailer {
    pub ink_mm: Fixed,
    pub travel_mm: Fixed,
    pub pen_lifts: u64,
    pub estimated_seconds: Fixed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MotionProgram {
    pub header: ProgramHeader,
    pub instructions: Vec<Instruction>,
    pub trailer: Option<Trailer>,
}

/// Pen lifts charged for a plan of `strokes` items: one before each
/// stroke plus the final one; nothing for an empty plan.
pub fn pen_lift_count(strokes: usize) -> u64 {
    if strokes == 0 {
        0
    } else {
        strokes as u64 + 1
    }
}

/// `ink / draw_feed + travel / travel_feed + lifts * lift_seconds`.
pub fn estimate_draw_seconds(ink_mm: f64, travel_mm: f64, lifts: u64, header: &ProgramHeader) -> f64 {
    ink_mm / header.draw_feed.to_f64() + travel_mm / header.travel_feed.to_f64() + lifts as f64 * header.lift_seconds.to_f64()
}

impl MotionProgram {
    /// Structural checks. `lines[i]` is the source line of instruction
    /// `i`; when absent, instruction indices (1-based) are reported.
    fn validate(&self, lines: Option<&[usize]>) -> Result<(), ProgramError> {
        let line_of = |i: usize| lines.map_or(i + 1, |l| l[i]);
        if self.instructions.first() != Some(&Instruction::PenUp) {
            return Err(ProgramError::Invariant {
                line: if self.instructions.is_empty() { 0 } else { line_of(0) },
                message: "program must begin with PENUP".into(),
            });
        }
        let mut down = false;
        let mut positioned = false;
        for (i, ins) in self.instructions.iter().enumerate() {
            let line = line_of(i);
            match *ins {
                Instruction::PenUp => down = false,
                Instruction::PenDown => {
                    if down {
                        return Err(ProgramError::DoublePenDown { line });
                    }
                    if !positioned {
                        return Err(ProgramError::Invariant {
                            line,
                            message: "PENDOWN before any MOVE established a position".into(),
                        });
                    }
                    down = true;
                }
                Instruction::Move { x, y } | Instruction::Dot { x, y } => {
                    if !self.header.contains(x, y) {
                        return Err(ProgramError::OutOfBounds { line, x: x.to_string(), y: y.to_string() });
                    }
                    if matches!(ins, Instruction::Dot { .. }) && down {
                        return Err(ProgramError::Invariant { line, message: "DOT while the pen is down".into() });
                    }
                    positioned = true;
                }
            }
        }
        if down {
            return Err(ProgramError::Invariant {
                line: line_of(self.instructions.len() - 1),
                message: "program ends with the pen down".into(),
            });
        }
        Ok(())
    }

    /// Total pen-down path length, replayed from the instructions.
    pub fn pen_down_length(&self) -> f64 {
        self.replay().0
    }

    /// Total pen-up path length, replayed from the instructions.
    pub fn pen_up_length(&self) -> f64 {
        self.replay().1
    }

    fn replay(&self) -> (f64, f64) {
        let (mut ink, mut travel) = (0.0, 0.0);
        let mut pos: Option<Point> = None;
        let mut down = false;
        for ins in &self.instructions {
            match *ins {
                Instruction::PenUp => down = false,
                Instruction::PenDown => down = true,
                Instruction::Move { x, y } | Instruction::Dot { x, y } => {
                    let p = Point::new(x.to_f64(), y.to_f64());
                    if let Some(q) = pos {
                        if down {
                            ink += q.distance(p);
                        } else {
                            travel += q.distance(p);
                        }
                    }
                    pos = Some(p);
                }
            }
        }
        (ink, travel)
    }
}

impl fmt::Display for MotionProgram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let h = &self.header;
        writeln!(f, "# linesketch motion program")?;
        writeln!(f, "UNITS mm")?;
        writeln!(f, "WORKSPACE {} {}", h.workspace_width, h.workspace_height)?;
        writeln!(f, "PEN_UP_Z {}", h.pen_up_z)?;
        writeln!(f, "PEN_DOWN_Z {}", h.pen_down_z)?;
        writeln!(f, "DRAW_FEED {}", h.draw_feed)?;
        writeln!(f, "TRAVEL_FEED {}", h.travel_feed)?;
        writeln!(f, "LIFT_SECONDS {}", h.lift_seconds)?;
        writeln!(f, "BEGIN")?;
        for ins in &self.instructions {
            match ins {
                Instruction::PenUp => writeln!(f, "PENUP")?,
                Instruction::PenDown => writeln!(f, "PENDOWN")?,
                Instruction::Move { x, y } => writeln!(f, "MOVE {x} {y}")?,
                Instruction::Dot { x, y } => writeln!(f, "DOT {x} {y}")?,
            }
        }
        writeln!(f, "END")?;
        if let Some(t) = &self.trailer {
            writeln!(f, "# ink_mm {}", t.ink_mm)?;
            writeln!(f, "# travel_mm {}", t.travel_mm)?;
            writeln!(f, "# pen_lifts {}", t.pen_lifts)?;
            writeln!(f, "# estimated_seconds {}", t.estimated_seconds)?;
        }
        Ok(())
    }
}

/// Turn a plan into pen motions. Each stroke is flattened to `tol`,
/// oriented as planned, and drawn as PENUP, MOVE to its entry, PENDOWN,
/// MOVEs through the rest; dots become DOT between pen-up states. A final
/// PENUP ends the program.
pub fn emit_program(
    plan: &StrokePlan,
    strokes: &[Stroke],
    header: &ProgramHeader,
    tol: f64,
) -> Result<MotionProgram, ProgramError> {
    let mut instructions = Vec::new();
    for item in &plan.items {
        let s = &strokes[item.stroke];
        let oriented = if item.reversed { s.reversed() } else { s.clone() };
        let quantize = |p: Point| -> Result<(Fixed, Fixed), ProgramError> {
            let (x, y) = (Fixed::from_f64(p.x), Fixed::from_f64(p.y));
            if header.contains(x, y) {
                Ok((x, y))
            } else {
                Err(ProgramError::StrokeOutOfWorkspace {
                    stroke: item.stroke,
                    x: format_coord(p.x),
                    y: format_coord(p.y),
                })
            }
        };
        instructions.push(Instruction::PenUp);
        if oriented.is_dot() {
            let (x, y) = quantize(oriented.start())?;
            instructions.push(Instruction::Dot { x, y });
            continue;
        }
        let pts = flatten(&oriented, tol).points;
        let (x, y) = quantize(pts[0])?;
        instructions.push(Instruction::Move { x, y });
        instructions.push(Instruction::PenDown);
        let mut last = (x, y);
        for &p in &pts[1..] {
            let q = quantize(p)?;
            if q != last {
                instructions.push(Instruction::Move { x: q.0, y: q.1 });
                last = q;
            }
        }
    }
    instructions.push(Instruction::PenUp);

    let lifts = pen_lift_count(plan.items.len());
    let trailer = Trailer {
        ink_mm: Fixed::from_f64(plan.total_ink),
        travel_mm: Fixed::from_f64(plan.total_travel),
        pen_lifts: lifts,
        estimated_seconds: Fixed::from_f64(estimate_draw_seconds(plan.total_ink, plan.total_travel, lifts, header)),
    };
    let program = MotionProgram { header: header.clone(), instructions, trailer: Some(trailer) };
    program.validate(None)?;
    Ok(program)
}

/// Parse and validate a program in the documented grammar.
pub fn parse_program(text: &str) -> Result<MotionProgram, ProgramError> {
    #[derive(PartialEq)]
    enum Section {
        Header,
        Body,
        Trailer,
    }
    let syntax = |line: usize, message: String| ProgramError::Syntax { line, message };

    let mut section = Section::Header;
    let mut fields: [Option<Fixed>; 7] = [None; 7];
    const KEYS: [&str; 7] = ["WORKSPACE", "PEN_UP_Z", "PEN_DOWN_Z", "DRAW_FEED", "TRAVEL_FEED", "LIFT_SECONDS", "WORKSPACE_H"];
    let mut instructions = Vec::new();
    let mut lines = Vec::new();
    let mut trailer_vals: [Option<String>; 4] = Default::default();
    const TRAILER_KEYS: [&str; 4] = ["ink_mm", "travel_mm", "pen_lifts", "estimated_seconds"];

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let t = raw.trim();
        if t.is_empty() {
            continue;
        }
        if let Some(comment) = t.strip_prefix('#') {
            if section == Section::Trailer {
                let mut parts = comment.split_whitespace();
                if let (Some(k), Some(v), None) = (parts.next(), parts.next(), parts.next()) {
                    if let Some(i) = TRAILER_KEYS.iter().position(|&key| key == k) {
                        trailer_vals[i] = Some(v.to_string());
                    }
                }
            }
            continue;
        }
        let mut parts = t.split_whitespace();
        let op = parts.next().unwrap_or_default();
        let args: Vec<&str> = parts.collect();
        let number = |s: &str| Fixed::parse(s).ok_or_else(|| syntax(line, format!("malformed number \"{s}\"")));
        match section {
            Section::Header => match op {
                "BEGIN" if args.is_empty() => section = Section::Body,
                "UNITS" => {
                    if args != ["mm"] {
                        return Err(syntax(line, "only UNITS mm is supported".into()));
                    }
                }
                "WORKSPACE" => {
                    if args.len() != 2 {
                        return Err(syntax(line, "WORKSPACE takes width and height".into()));
                    }
                    fields[0] = Some(number(args[0])?);
                    fields[6] = Some(number(args[1])?);
                }
                key => {
                    let Some(i) = KEYS[..6].iter().position(|&k| k == key) else {
                        return Err(syntax(line, format!("unknown header key \"{key}\"")));
                    };
                    if args.len() != 1 {
                        return Err(syntax(line, format!("{key} takes one value")));
                    }
                    fields[i] = Some(number(args[0])?);
                }
            },
            Section::Body => {
                let expect = |n: usize| {
                    if args.len() == n {
                        Ok(())
                    } else {
                        Err(syntax(line, format!("{op} takes {n} operands, got {}", args.len())))
                    }
                };
                let ins = match op {
                    "PENUP" => {
                        expect(0)?;
                        Instruction::PenUp
                    }
                    "PENDOWN" => {
                        expect(0)?;
                        Instruction::PenDown
                    }
                    "MOVE" => {
                        expect(2)?;
                        Instruction::Move { x: number(args[0])?, y: number(args[1])? }
                    }
                    "DOT" => {
                        expect(2)?;
                        Instruction::Dot { x: number(args[0])?, y: number(args[1])? }
                    }
                    "END" => {
                        expect(0)?;
                        section = Section::Trailer;
                        continue;
                    }
                    other => return Err(ProgramError::UnknownOpcode { line, opcode: other.to_string() }),
                };
                instructions.push(ins);
                lines.push(line);
            }
            Section::Trailer => return Err(syntax(line, "only comments may follow END".into())),
        }
    }
    let last_line = text.lines().count();
    if section == Section::Header {
        return Err(syntax(last_line, "missing BEGIN".into()));
    }
    if section == Section::Body {
        return Err(syntax(last_line, "missing END".into()));
    }
    for (i, f) in fields.iter().enumerate() {
        if f.is_none() {
            let key = if i == 6 { "WORKSPACE" } else { KEYS[i] };
            return Err(syntax(0, format!("missing header key {key}")));
        }
    }
    let header = ProgramHeader {
        workspace_width: fields[0].unwrap(),
        workspace_height: fields[6].unwrap(),
        pen_up_z: fields[1].unwrap(),
        pen_down_z: fields[2].unwrap(),
        draw_feed: fields[3].unwrap(),
        travel_feed: fields[4].unwrap(),
        lift_seconds: fields[5].unwrap(),
    };
    let trailer = match &trailer_vals {
        [Some(ink), Some(travel), Some(lifts), Some(est)] => {
            let bad = || syntax(last_line, "malformed trailer".into());
            Some(Trailer {
                ink_mm: Fixed::parse(ink).ok_or_else(bad)?,
                travel_mm: Fixed::parse(travel).ok_or_else(bad)?,
                pen_lifts: lifts.parse().map_err(|_| bad())?,
                estimated_seconds: Fixed::parse(est).ok_or_else(bad)?,
            })
        }
        _ => None,
    };
    let program = MotionProgram { header, instructions, trailer };
    if program.instructions.is_empty() {
        return Err(ProgramError::Invariant { line: last_line, message: "program must begin with PENUP".into() });
    }
    program.validate(Some(&lines))?;
    Ok(program)
}
