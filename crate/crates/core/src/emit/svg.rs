use std::fmt::Write;

use thiserror::Error;

use crate::fit::{CubicBezier, Stroke};
use crate::geom::Point;

#[derive(Debug, Error, PartialEq)]
pub enum SvgError {
    #[error("invalid XML: {0}")]
    Xml(String),
    #[error("unsupported path command '{command}' at byte {offset}")]
    UnsupportedCommand { command: char, offset: usize },
    #[error("unknown path command '{command}' at byte {offset}")]
    UnknownCommand { command: char, offset: usize },
    #[error("malformed number at byte {offset}")]
    MalformedNumber { offset: usize },
    #[error("path data must start with a moveto, found data at byte {offset}")]
    MissingMoveTo { offset: usize },
}

/// Fixed four-decimal coordinate formatting; negative zero prints as zero.
pub fn format_coord(v: f64) -> String {
    let s = format!("{v:.4}");
    if s == "-0.0000" {
        "0.0000".to_string()
    } else {
        s
    }
}

fn pt(out: &mut String, p: Point) {
    let _ = write!(out, " {} {}", format_coord(p.x), format_coord(p.y));
}

/// Path data for one stroke: `M` then one `C` per segment, `Z` if closed.
pub fn path_data(s: &Stroke) -> String {
    let mut d = String::from("M");
    pt(&mut d, s.start());
    for c in s.segments() {
        d.push_str(" C");
        pt(&mut d, c.p1);
        pt(&mut d, c.p2);
        pt(&mut d, c.p3);
    }
    if s.is_closed() {
        d.push_str(" Z");
    }
    d
}

/// SVG document in millimeter user units, one `<path>` per stroke.
pub fn emit_svg(strokes: &[Stroke], canvas: (f64, f64)) -> String {
    let (w, h) = (format_coord(canvas.0), format_coord(canvas.1));
    let mut out = String::new();
    out.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"{w}mm\" height=\"{h}mm\" viewBox=\"0 0 {w} {h}\">"
    );
    for s in strokes {
        let _ = writeln!(
            out,
            "  <path d=\"{}\" fill=\"none\" stroke=\"black\" stroke-width=\"0.5\" stroke-linecap=\"round\"/>",
            path_data(s)
        );
    }
    out.push_str("</svg>\n");
    out
}

struct PathLexer<'a> {
    bytes: &'a [u8],
    pos: usize,
    base: usize,
}

impl<'a> PathLexer<'a> {
    fn skip_separators(&mut self) {
        while self.pos < self.bytes.len() && (self.bytes[self.pos].is_ascii_whitespace() || self.bytes[self.pos] == b',') {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_separators();
        self.bytes.get(self.pos).copied()
    }

    fn number(&mut self) -> Result<f64, SvgError> {
        self.skip_separators();
        let start = self.pos;
        let b = self.bytes;
        let mut i = self.pos;
        if i < b.len() && (b[i] == b'+' || b[i] == b'-') {
            i += 1;
        }
        let int_start = i;
        while i < b.len() && b[i].is_ascii_digit() {
            i += 1;
        }
        let mut digits = i - int_start;
        if i < b.len() && b[i] == b'.' {
            i += 1;
            let frac_start = i;
            while i < b.len() && b[i].is_ascii_digit() {
                i += 1;
            }
            digits += i - frac_start;
        }
        if digits == 0 {
            return Err(SvgError::MalformedNumber { offset: self.base + start });
        }
        if i < b.len() && (b[i] == b'e' || b[i] == b'E') {
            let mut j = i + 1;
            if j < b.len() && (b[j] == b'+' || b[j] == b'-') {
                j += 1;
            }
            let exp_start = j;
            while j < b.len() && b[j].is_ascii_digit() {
                j += 1;
            }
            if j > exp_start {
                i = j;
            }
        }
        let text = std::str::from_utf8(&b[start..i]).map_err(|_| SvgError::MalformedNumber { offset: self.base + start })?;
        let v: f64 = text.parse().map_err(|_| SvgError::MalformedNumber { offset: self.base + start })?;
        if !v.is_finite() {
            return Err(SvgError::MalformedNumber { offset: self.base + start });
        }
        self.pos = i;
        Ok(v)
    }

    fn point(&mut self) -> Result<Point, SvgError> {
        let x = self.number()?;
        let y = self.number()?;
        Ok(Point::new(x, y))
    }
}

struct SubpathBuilder {
    strokes: Vec<Stroke>,
    segments: Vec<CubicBezier>,
    start: Point,
    current: Point,
}

impl SubpathBuilder {
    fn finish(&mut self, closed: bool) {
        if self.segments.is_empty() {
            return;
        }
        let segments = std::mem::take(&mut self.segments);
        // segments are chained from `current`, so continuity holds by construction
        if let Ok(s) = Stroke::new(segments, closed) {
            self.strokes.push(s);
        }
    }
}

/// Parse the `d` attribute of one path element. `base` is the attribute's
/// byte offset in the document, used in diagnostics.
pub fn parse_path_data(d: &str, base: usize) -> Result<Vec<Stroke>, SvgError> {
    let mut lex = PathLexer { bytes: d.as_bytes(), pos: 0, base };
    let mut sb = SubpathBuilder {
        strokes: Vec::new(),
        segments: Vec::new(),
        start: Point::default(),
        current: Point::default(),
    };
    let mut command: Option<u8> = None;
    while let Some(c) = lex.peek() {
        let offset = base + lex.pos;
        if c.is_ascii_alphabetic() {
            lex.pos += 1;
            match c {
                b'M' | b'm' | b'L' | b'l' | b'C' | b'c' | b'Z' | b'z' => {}
                b'A' | b'a' | b'Q' | b'q' | b'S' | b's' | b'T' | b't' | b'H' | b'h' | b'V' | b'v' => {
                    return Err(SvgError::UnsupportedCommand { command: c as char, offset });
                }
                // 'e'/'E' can only appear inside numbers
                _ => return Err(SvgError::UnknownCommand { command: c as char, offset }),
            }
            if command.is_none() && c != b'M' && c != b'm' {
                return Err(SvgError::MissingMoveTo { offset });
            }
            command = Some(c);
        } else {
            match command {
                None => return Err(SvgError::MissingMoveTo { offset }),
                Some(b'Z') | Some(b'z') => return Err(SvgError::MalformedNumber { offset }),
                // extra coordinate pairs after a moveto are linetos
                Some(b'M') => command = Some(b'L'),
                Some(b'm') => command = Some(b'l'),
                _ => {}
            }
        }
        let cmd = command.unwrap();
        let rel = cmd.is_ascii_lowercase();
        let origin = if rel { sb.current } else { Point::default() };
        match cmd.to_ascii_uppercase() {
            b'M' => {
                sb.finish(false);
                let p = origin + lex.point()?;
                sb.start = p;
                sb.current = p;
            }
            b'L' => {
                let p = origin + lex.point()?;
                sb.segments.push(CubicBezier::line(sb.current, p));
                sb.current = p;
            }
            b'C' => {
                let p1 = origin + lex.point()?;
                let p2 = origin + lex.point()?;
                let p3 = origin + lex.point()?;
                sb.segments.push(CubicBezier::new(sb.current, p1, p2, p3));
                sb.current = p3;
            }
            b'Z' => {
                if !sb.segments.is_empty() && sb.current != sb.start {
                    sb.segments.push(CubicBezier::line(sb.current, sb.start));
                }
                sb.finish(true);
                sb.current = sb.start;
            }
            _ => unreachable!(),
        }
    }
    sb.finish(false);
    Ok(sb.strokes)
}

/// Strokes from every `<path>` element, in document order. Each subpath
/// becomes its own stroke; `L` segments become exact cubics.
pub fn parse_svg(text: &str) -> Result<Vec<Stroke>, SvgError> {
    let doc = roxmltree::Document::parse(text).map_err(|e| SvgError::Xml(e.to_string()))?;
    let mut strokes = Vec::new();
    for node in doc.descendants().filter(|n| n.has_tag_name("path")) {
        if let Some(attr) = node.attributes().find(|a| a.name() == "d") {
            strokes.extend(parse_path_data(attr.value(), attr.range_value().start)?);
        }
    }
    Ok(strokes)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn doc(d: &str) -> String {
        format!("<svg xmlns=\"http://www.w3.org/2000/svg\"><path d=\"{d}\"/></svg>")
    }

    #[test]
    fn empty_document() {
        let svg = emit_svg(&[], (100.0, 50.0));
        assert!(svg.contains("width=\"100.0000mm\""));
        assert!(parse_svg(&svg).unwrap().is_empty());
    }

    #[test]
    fn straight_cubic_serialization() {
        let s = Stroke::new(vec![CubicBezier::line(Point::new(0.0, 0.0), Point::new(30.0, 0.0))], false).unwrap();
        assert_eq!(
            path_data(&s),
            "M 0.0000 0.0000 C 10.0000 0.0000 20.0000 0.0000 30.0000 0.0000"
        );
        assert_eq!(format_coord(-0.00001), "0.0000");
    }

    #[test]
    fn lineto_becomes_thirds() {
        let strokes = parse_svg(&doc("M 0 0 L 3 0")).unwrap();
        assert_eq!(strokes.len(), 1);
        let c = strokes[0].segments()[0];
        assert_eq!(c.p1, Point::new(1.0, 0.0));
        assert_eq!(c.p2, Point::new(2.0, 0.0));
    }

    #[test]
    fn arcs_are_rejected_by_name() {
        let text = doc("M 0 0 A 1 1 0 0 0 5 5");
        let err = parse_svg(&text).unwrap_err();
        let SvgError::UnsupportedCommand { command, offset } = err else { panic!("{err:?}") };
        assert_eq!(command, 'A');
        assert_eq!(&text[offset..offset + 1], "A");
        assert!(err.to_string().contains("'A'"));
    }

    #[test]
    fn relative_commands_subpaths_and_closing() {
        let strokes = parse_svg(&doc("m1,1 l2,0 c0,1 0,1 0,2z M10 10 20 10 20 20")).unwrap();
        assert_eq!(strokes.len(), 2);
        assert!(strokes[0].is_closed());
        assert_eq!(strokes[0].segments().len(), 3);
        assert_eq!(strokes[0].segments()[1].p3, Point::new(3.0, 3.0));
        assert_eq!(strokes[0].end(), Point::new(1.0, 1.0));
        assert_eq!(strokes[1].segments().len(), 2);
        assert!(!strokes[1].is_closed());
    }

    #[test]
    fn compact_numbers() {
        let strokes = parse_svg(&doc("M.5.5L-1-2e1")).unwrap();
        assert_eq!(strokes[0].start(), Point::new(0.5, 0.5));
        assert_eq!(strokes[0].end(), Point::new(-1.0, -20.0));
    }

    #[test]
    fn malformed_inputs() {
        assert!(matches!(parse_svg(&doc("M 0 0 L 1")), Err(SvgError::MalformedNumber { .. })));
        assert!(matches!(parse_svg(&doc("M 0 0 L x 1")), Err(SvgError::MalformedNumber { .. })));
        assert!(matches!(parse_svg(&doc("M 0 0 x 1")), Err(SvgError::UnknownCommand { command: 'x', .. })));
        assert!(matches!(parse_svg(&doc("L 0 0")), Err(SvgError::MissingMoveTo { .. })));
        assert!(matches!(parse_svg("<svg"), Err(SvgError::Xml(_))));
        for c in ["Q", "S", "T", "H", "V", "q", "h"] {
            let e = parse_svg(&doc(&format!("M 0 0 {c} 1 1"))).unwrap_err();
            assert!(matches!(e, SvgError::UnsupportedCommand { .. }), "{c}");
        }
    }
}
