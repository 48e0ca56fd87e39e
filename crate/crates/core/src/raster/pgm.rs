use super::{GrayRaster, RasterError};

/// Decode a binary (P5) PGM with maxval ≤ 255.
pub fn read_pgm(bytes: &[u8]) -> Result<GrayRaster, RasterError> {
    let err = |m: &str| RasterError::Pgm(m.to_string());
    let mut pos = 0usize;

    let token = |pos: &mut usize| -> Result<String, RasterError> {
        loop {
            while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
                *pos += 1;
            }
            if *pos < bytes.len() && bytes[*pos] == b'#' {
                while *pos < bytes.len() && bytes[*pos] != b'\n' {
                    *pos += 1;
                }
                continue;
            }
            break;
        }
        let start = *pos;
        while *pos < bytes.len() && !bytes[*pos].is_ascii_whitespace() && bytes[*pos] != b'#' {
            *pos += 1;
        }
        if start == *pos {
            return Err(err("unexpected end of header"));
        }
        Ok(String::from_utf8_lossy(&bytes[start..*pos]).into_owned())
    };

    if token(&mut pos)? != "P5" {
        return Err(err("only binary P5 graymaps are supported"));
    }
    let mut number = |name: &str| -> Result<usize, RasterError> {
        token(&mut pos)?
            .parse::<usize>()
            .map_err(|_| RasterError::Pgm(format!("bad {name}")))
    };
    let width = number("width")?;
    let height = number("height")?;
    let maxval = number("maxval")?;
    if maxval == 0 || maxval > 255 {
        return Err(err("maxval must be in 1..=255"));
    }
    // exactly one whitespace byte separates the header from the raster
    if pos >= bytes.len() || !bytes[pos].is_ascii_whitespace() {
        return Err(err("missing raster data"));
    }
    pos += 1;
    let body = &bytes[pos..];
    let n = width * height;
    if body.len() < n {
        return Err(RasterError::Pgm(format!("expected {n} pixel bytes, found {}", body.len())));
    }
    let data = body[..n]
        .iter()
        .map(|&v| if maxval == 255 { v } else { ((v as usize * 255 + maxval / 2) / maxval).min(255) as u8 })
        .collect();
    GrayRaster::new(width, height, data)
}

pub fn write_pgm(image: &GrayRaster) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", image.width(), image.height()).into_bytes();
    out.extend_from_slice(image.data());
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_with_comments() {
        let img = GrayRaster::new(3, 2, vec![0, 10, 20, 30, 40, 255]).unwrap();
        let bytes = write_pgm(&img);
        assert_eq!(read_pgm(&bytes).unwrap(), img);

        let mut commented = b"P5 # made by hand\n3 2\n# max\n255\n".to_vec();
        commented.extend_from_slice(img.data());
        assert_eq!(read_pgm(&commented).unwrap(), img);
    }

    #[test]
    fn rejects_ascii_and_short_files() {
        assert!(read_pgm(b"P2\n1 1\n255\n0").is_err());
        assert!(read_pgm(b"P5\n4 4\n255\n\x00\x00").is_err());
        assert!(read_pgm(b"P5\n1 1\n65535\n\x00\x00").is_err());
    }
}
