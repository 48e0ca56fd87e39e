//! Output formats: curve flattening, SVG, and the pen-motion program.

mod flatten;
mod program;
mod svg;

pub use flatten::{flatten, FlattenedStroke};
pub use program::{
    emit_program, estimate_draw_seconds, parse_program, pen_lift_count, Fixed, Instruction, MotionProgram,
    ProgramError, ProgramHeader, Trailer,
};
pub use svg::{emit_svg, format_coord, parse_svg, SvgError};
