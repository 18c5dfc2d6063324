//! PGM images as binary masks.
//!
//! Grids and templates are written as plain-text P2 with maxval 255:
//! occupied cells as 255, empty as 0. File row 0 is grid row 0 (the
//! smallest v), so images appear v-up flipped in viewers that draw row 0
//! at the top.
//!
//! Reading accepts P2 (ASCII) and P5 (binary, single-byte samples); a
//! sample is occupied when it exceeds half the declared maxval.

use std::fs;
use std::path::Path;

use super::FormatError;
use crate::gridmap::GridMap;

pub fn write_pgm_mask(
    path: &Path,
    width: usize,
    height: usize,
    mask: &[bool],
) -> Result<(), FormatError> {
    assert_eq!(
        mask.len(),
        width * height,
        "mask length must be width * height"
    );
    let mut out = String::with_capacity(32 + 4 * mask.len());
    out.push_str("P2\n");
    out.push_str(&format!("{width} {height}\n255\n"));
    for row in mask.chunks(width.max(1)) {
        let line: Vec<&str> = row.iter().map(|c| if *c { "255" } else { "0" }).collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    fs::write(path, out)?;
    Ok(())
}

pub fn write_pgm_grid(path: &Path, grid: &GridMap) -> Result<(), FormatError> {
    write_pgm_mask(path, grid.width(), grid.height(), grid.cells())
}

/// Reads a P2 or P5 PGM as a mask: `(width, height, row-major cells)`,
/// sample > maxval/2 meaning occupied.
pub fn read_pgm_mask(path: &Path) -> Result<(usize, usize, Vec<bool>), FormatError> {
    let bytes = fs::read(path)?;
    let mut scan = Scanner::new(&bytes);

    let magic = scan.token()?;
    let binary = match magic.as_str() {
        "P2" => false,
        "P5" => true,
        other => {
            return Err(FormatError::Unsupported(format!(
                "PGM magic {other:?}; only P2 and P5 are readable"
            )));
        }
    };
    let width = scan.number("width")?;
    let height = scan.number("height")?;
    let maxval = scan.number("maxval")?;
    if maxval == 0 || maxval > 255 {
        return Err(FormatError::Unsupported(format!(
            "PGM maxval {maxval}; only single-byte samples are readable"
        )));
    }
    let expected = width
        .checked_mul(height)
        .ok_or_else(|| FormatError::parse(scan.line, "image dimensions overflow"))?;

    let mut cells = Vec::with_capacity(expected);
    if binary {
        // Exactly one whitespace byte separates the header from the raster.
        let raster = scan.rest_after_single_whitespace()?;
        if raster.len() != expected {
            return Err(FormatError::parse(
                scan.line,
                format!(
                    "raster holds {} samples, expected {expected}",
                    raster.len()
                ),
            ));
        }
        cells.extend(raster.iter().map(|&s| usize::from(s) * 2 > maxval));
    } else {
        for _ in 0..expected {
            let sample = scan.number("sample")?;
            if sample > maxval {
                return Err(FormatError::parse(
                    scan.line,
                    format!("sample {sample} exceeds maxval {maxval}"),
                ));
            }
            cells.push(sample * 2 > maxval);
        }
        if !scan.at_end() {
            return Err(FormatError::parse(scan.line, "trailing data after raster"));
        }
    }
    Ok((width, height, cells))
}

/// Byte scanner over PGM text: skips whitespace and `#` comments, tracks
/// the current line for error reports.
struct Scanner<'a> {
    bytes: &'a [u8],
    pos: usize,
    line: usize,
}

impl<'a> Scanner<'a> {
    fn new(bytes: &'a [u8]) -> Self {
        Self {
            bytes,
            pos: 0,
            line: 1,
        }
    }

    fn bump(&mut self) -> Option<u8> {
        let b = *self.bytes.get(self.pos)?;
        self.pos += 1;
        if b == b'\n' {
            self.line += 1;
        }
        Some(b)
    }

    fn skip_separators(&mut self) {
        while let Some(&b) = self.bytes.get(self.pos) {
            if b.is_ascii_whitespace() {
                self.bump();
            } else if b == b'#' {
                while let Some(b) = self.bump() {
                    if b == b'\n' {
                        break;
                    }
                }
            } else {
                break;
            }
        }
    }

    fn token(&mut self) -> Result<String, FormatError> {
        self.skip_separators();
        let start = self.pos;
        while let Some(&b) = self.bytes.get(self.pos) {
            if b.is_ascii_whitespace() || b == b'#' {
                break;
            }
            self.pos += 1;
        }
        if self.pos == start {
            return Err(FormatError::parse(self.line, "unexpected end of file"));
        }
        Ok(String::from_utf8_lossy(&self.bytes[start..self.pos]).into_owned())
    }

    fn number(&mut self, what: &str) -> Result<usize, FormatError> {
        let line = {
            self.skip_separators();
            self.line
        };
        let tok = self.token()?;
        tok.parse::<usize>()
            .map_err(|_| FormatError::parse(line, format!("{what} must be an integer, got {tok:?}")))
    }

    fn rest_after_single_whitespace(&mut self) -> Result<&'a [u8], FormatError> {
        match self.bump() {
            Some(b) if b.is_ascii_whitespace() => Ok(&self.bytes[self.pos..]),
            _ => Err(FormatError::parse(
                self.line,
                "expected one whitespace byte before the binary raster",
            )),
        }
    }

    fn at_end(&mut self) -> bool {
        self.skip_separators();
        self.pos == self.bytes.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use tempfile::tempdir;

    #[test]
    fn mask_round_trips_through_p2() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("mask.pgm");
        let mask = vec![
            true, false, true, false, //
            false, true, false, true, //
            true, true, false, false,
        ];
        write_pgm_mask(&path, 4, 3, &mask).unwrap();
        let (w, h, cells) = read_pgm_mask(&path).unwrap();
        assert_eq!((w, h), (4, 3));
        assert_eq!(cells, mask);
    }

    #[test]
    fn p5_binary_rasters_parse() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("mask5.pgm");
        let mut bytes = b"P5\n# binary twin\n3 2\n255\n".to_vec();
        bytes.extend_from_slice(&[255, 0, 200, 10, 0, 255]);
        std::fs::write(&path, bytes).unwrap();
        let (w, h, cells) = read_pgm_mask(&path).unwrap();
        assert_eq!((w, h), (3, 2));
        assert_eq!(cells, vec![true, false, true, false, false, true]);
    }

    #[test]
    fn occupancy_threshold_is_half_maxval() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("gray.pgm");
        std::fs::write(&path, "P2\n4 1\n255\n127 128 0 255\n").unwrap();
        let (_, _, cells) = read_pgm_mask(&path).unwrap();
        assert_eq!(cells, vec![false, true, false, true]);

        // A 0/1 image keeps working: 1 > 1/2.
        let path = dir.path().join("bit.pgm");
        std::fs::write(&path, "P2\n2 1\n1\n0 1\n").unwrap();
        let (_, _, cells) = read_pgm_mask(&path).unwrap();
        assert_eq!(cells, vec![false, true]);
    }

    #[test]
    fn comments_are_skipped_anywhere_in_the_header() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("chatty.pgm");
        std::fs::write(
            &path,
            "P2 # magic\n# a comment line\n2 # width\n1\n255\n255 0\n",
        )
        .unwrap();
        let (w, h, cells) = read_pgm_mask(&path).unwrap();
        assert_eq!((w, h, cells), (2, 1, vec![true, false]));
    }

    #[test]
    fn malformed_images_are_errors() {
        let dir = tempdir().unwrap();
        let cases: [(&[u8], &str); 5] = [
            (b"P3\n1 1\n255\n1 1 1\n", "magic"),
            (b"P2\n2 2\n255\n255 0 0\n", "end of file"),
            (b"P2\n2 1\n255\n255 0 0\n", "trailing"),
            (b"P2\n1 1\n255\n300\n", "exceeds maxval"),
            (b"P5\n2 1\n255\n\xff", "raster holds 1 samples"),
        ];
        for (i, (bytes, needle)) in cases.iter().enumerate() {
            let path = dir.path().join(format!("bad{i}.pgm"));
            std::fs::write(&path, bytes).unwrap();
            let err = read_pgm_mask(&path).unwrap_err();
            assert!(
                err.to_string().contains(needle),
                "case {i}: unexpected error {err}"
            );
        }
    }

    #[test]
    fn sixteen_bit_samples_are_refused() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("deep.pgm");
        std::fs::write(&path, "P2\n1 1\n65535\n40000\n").unwrap();
        assert!(matches!(
            read_pgm_mask(&path),
            Err(FormatError::Unsupported(_))
        ));
    }
}
