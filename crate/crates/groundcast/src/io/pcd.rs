//! ASCII PCD point clouds.
//!
//! Writing emits the classic header (VERSION through DATA ascii) with
//! FIELDS x y z, one point per line, and floats printed in Rust's shortest
//! round-trip form, so write-then-read reproduces every coordinate bit for
//! bit. The cloud's frame label travels in a leading `# frame:` comment.
//!
//! Reading accepts any ASCII PCD that carries x, y, and z single-count
//! fields, in any field order and with extra fields ignored. Rows whose
//! x, y, or z is not finite are dropped and counted, not errors; binary
//! DATA is refused as unsupported.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::FormatError;
use crate::geometry::Point3;
use crate::ransac::PointCloud;

/// A parsed cloud plus how many rows were discarded for non-finite
/// coordinates.
#[derive(Debug)]
pub struct PcdLoad {
    pub cloud: PointCloud,
    pub dropped_rows: usize,
}

pub fn write_pcd(path: &Path, cloud: &PointCloud) -> Result<(), FormatError> {
    let n = cloud.len();
    let mut out = String::with_capacity(128 + 48 * n);
    let _ = writeln!(out, "# frame: {}", cloud.frame_label());
    let _ = writeln!(out, "VERSION 0.7");
    let _ = writeln!(out, "FIELDS x y z");
    let _ = writeln!(out, "SIZE 8 8 8");
    let _ = writeln!(out, "TYPE F F F");
    let _ = writeln!(out, "COUNT 1 1 1");
    let _ = writeln!(out, "WIDTH {n}");
    let _ = writeln!(out, "HEIGHT 1");
    let _ = writeln!(out, "VIEWPOINT 0 0 0 1 0 0 0");
    let _ = writeln!(out, "POINTS {n}");
    let _ = writeln!(out, "DATA ascii");
    for p in cloud.points() {
        let _ = writeln!(out, "{} {} {}", p.x, p.y, p.z);
    }
    fs::write(path, out)?;
    Ok(())
}

struct Header {
    /// Data-row column index of x, y, z.
    xyz_columns: [usize; 3],
    /// Total tokens each data row must carry.
    row_width: usize,
    points: usize,
}

pub fn read_pcd(path: &Path) -> Result<PcdLoad, FormatError> {
    let text = fs::read_to_string(path)?;
    let mut frame_label = String::from("unknown");
    let mut fields: Option<Vec<String>> = None;
    let mut counts: Option<Vec<usize>> = None;
    let mut width: Option<usize> = None;
    let mut height: Option<usize> = None;
    let mut points_decl: Option<usize> = None;
    let mut header: Option<Header> = None;

    let mut pts: Vec<Point3> = Vec::new();
    let mut dropped_rows = 0usize;
    let mut rows_seen = 0usize;
    let mut last_line = 0usize;

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        last_line = line_no;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            if let Some(label) = comment.trim().strip_prefix("frame:") {
                frame_label = label.trim().to_string();
            }
            continue;
        }

        if let Some(h) = &header {
            // Data section.
            let tokens: Vec<&str> = line.split_whitespace().collect();
            if rows_seen == h.points {
                return Err(FormatError::parse(
                    line_no,
                    format!("more data rows than the declared {} points", h.points),
                ));
            }
            if tokens.len() != h.row_width {
                return Err(FormatError::parse(
                    line_no,
                    format!("expected {} values, found {}", h.row_width, tokens.len()),
                ));
            }
            rows_seen += 1;
            let mut coords = [0.0f64; 3];
            for (slot, &column) in h.xyz_columns.iter().enumerate() {
                coords[slot] = tokens[column].parse::<f64>().map_err(|_| {
                    FormatError::parse(
                        line_no,
                        format!("cannot parse {:?} as a float", tokens[column]),
                    )
                })?;
            }
            if coords.iter().all(|c| c.is_finite()) {
                pts.push(Point3::new(coords[0], coords[1], coords[2]));
            } else {
                dropped_rows += 1;
            }
            continue;
        }

        // Header section.
        let mut parts = line.split_whitespace();
        let key = parts.next().expect("non-empty line has a first token");
        let rest: Vec<&str> = parts.collect();
        match key {
            "VERSION" | "SIZE" | "TYPE" | "VIEWPOINT" => {}
            "FIELDS" => fields = Some(rest.iter().map(|s| s.to_string()).collect()),
            "COUNT" => {
                let parsed: Result<Vec<usize>, _> =
                    rest.iter().map(|s| s.parse::<usize>()).collect();
                counts = Some(parsed.map_err(|_| {
                    FormatError::parse(line_no, "COUNT values must be positive integers")
                })?);
            }
            "WIDTH" => width = Some(parse_count(&rest, line_no, "WIDTH")?),
            "HEIGHT" => height = Some(parse_count(&rest, line_no, "HEIGHT")?),
            "POINTS" => points_decl = Some(parse_count(&rest, line_no, "POINTS")?),
            "DATA" => {
                let mode = rest.first().copied().unwrap_or("");
                if mode != "ascii" {
                    return Err(FormatError::Unsupported(format!(
                        "PCD DATA {mode:?}; only ascii is readable"
                    )));
                }
                header = Some(resolve_header(
                    fields.as_deref(),
                    counts.as_deref(),
                    width,
                    height,
                    points_decl,
                    line_no,
                )?);
            }
            other => {
                return Err(FormatError::parse(
                    line_no,
                    format!("unknown header key {other:?}"),
                ));
            }
        }
    }

    let Some(h) = header else {
        return Err(FormatError::parse(last_line, "missing DATA line"));
    };
    if rows_seen != h.points {
        return Err(FormatError::parse(
            last_line,
            format!("declared {} points but found {rows_seen} rows", h.points),
        ));
    }
    let cloud = PointCloud::new(pts, frame_label)
        .expect("rows with non-finite coordinates were dropped");
    Ok(PcdLoad {
        cloud,
        dropped_rows,
    })
}

fn parse_count(rest: &[&str], line_no: usize, key: &str) -> Result<usize, FormatError> {
    match rest {
        [one] => one
            .parse::<usize>()
            .map_err(|_| FormatError::parse(line_no, format!("{key} must be an integer"))),
        _ => Err(FormatError::parse(
            line_no,
            format!("{key} takes exactly one value"),
        )),
    }
}

fn resolve_header(
    fields: Option<&[String]>,
    counts: Option<&[usize]>,
    width: Option<usize>,
    height: Option<usize>,
    points_decl: Option<usize>,
    line_no: usize,
) -> Result<Header, FormatError> {
    let fields = fields.ok_or_else(|| FormatError::parse(line_no, "missing FIELDS line"))?;
    let counts: Vec<usize> = match counts {
        Some(c) if c.len() == fields.len() => c.to_vec(),
        Some(_) => {
            return Err(FormatError::parse(
                line_no,
                "COUNT length does not match FIELDS",
            ));
        }
        None => vec![1; fields.len()],
    };
    if counts.contains(&0) {
        return Err(FormatError::parse(line_no, "COUNT values must be nonzero"));
    }

    // Column offset of each field: fields before it contribute their COUNT.
    let mut offsets = Vec::with_capacity(fields.len());
    let mut offset = 0usize;
    for c in &counts {
        offsets.push(offset);
        offset += c;
    }
    let row_width = offset;

    let mut xyz_columns = [usize::MAX; 3];
    for (slot, name) in ["x", "y", "z"].iter().enumerate() {
        let idx = fields
            .iter()
            .position(|f| f == name)
            .ok_or_else(|| FormatError::parse(line_no, format!("missing field {name:?}")))?;
        if counts[idx] != 1 {
            return Err(FormatError::parse(
                line_no,
                format!("field {name:?} must have COUNT 1"),
            ));
        }
        xyz_columns[slot] = offsets[idx];
    }

    let points = match (points_decl, width, height) {
        (Some(p), Some(w), Some(h)) if w * h != p => {
            return Err(FormatError::parse(
                line_no,
                format!("WIDTH x HEIGHT = {} disagrees with POINTS {p}", w * h),
            ));
        }
        (Some(p), _, _) => p,
        (None, Some(w), Some(h)) => w * h,
        (None, _, _) => {
            return Err(FormatError::parse(
                line_no,
                "missing POINTS (or WIDTH and HEIGHT)",
            ));
        }
    };

    Ok(Header {
        xyz_columns,
        row_width,
        points,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use tempfile::tempdir;

    fn roundtrip(points: Vec<Point3>, label: &str) -> PcdLoad {
        let dir = tempdir().unwrap();
        let path = dir.path().join("cloud.pcd");
        let cloud = PointCloud::new(points, label).unwrap();
        write_pcd(&path, &cloud).unwrap();
        read_pcd(&path).unwrap()
    }

    #[test]
    fn write_read_round_trip_is_exact() {
        let pts = vec![
            Point3::new(0.1, -2.5, 3.25),
            Point3::new(1e-17, 4.0e8, -0.0),
            Point3::new(std::f64::consts::PI, -std::f64::consts::E, 0.3333333333333333),
        ];
        let loaded = roundtrip(pts.clone(), "camera");
        assert_eq!(loaded.cloud.points(), pts.as_slice());
        assert_eq!(loaded.cloud.frame_label(), "camera");
        assert_eq!(loaded.dropped_rows, 0);
    }

    #[test]
    fn empty_cloud_round_trips() {
        let loaded = roundtrip(Vec::new(), "map");
        assert!(loaded.cloud.is_empty());
        assert_eq!(loaded.cloud.frame_label(), "map");
    }

    #[test]
    fn nan_rows_are_dropped_and_counted() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("gap.pcd");
        let text = "VERSION 0.7\nFIELDS x y z\nSIZE 4 4 4\nTYPE F F F\nCOUNT 1 1 1\n\
                    WIDTH 4\nHEIGHT 1\nVIEWPOINT 0 0 0 1 0 0 0\nPOINTS 4\nDATA ascii\n\
                    1 2 3\nnan nan nan\n4 5 6\n7 8 inf\n";
        std::fs::write(&path, text).unwrap();
        let loaded = read_pcd(&path).unwrap();
        assert_eq!(loaded.dropped_rows, 2);
        assert_eq!(
            loaded.cloud.points(),
            &[Point3::new(1.0, 2.0, 3.0), Point3::new(4.0, 5.0, 6.0)]
        );
    }

    #[test]
    fn extra_fields_and_reordering_are_fine() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("rgb.pcd");
        // z first, an rgb field with COUNT 3 in the middle.
        let text = "FIELDS z rgb x y\nCOUNT 1 3 1 1\nPOINTS 2\nDATA ascii\n\
                    30 9 9 9 10 20\n31 9 9 9 11 21\n";
        std::fs::write(&path, text).unwrap();
        let loaded = read_pcd(&path).unwrap();
        assert_eq!(
            loaded.cloud.points(),
            &[
                Point3::new(10.0, 20.0, 30.0),
                Point3::new(11.0, 21.0, 31.0)
            ]
        );
    }

    #[test]
    fn structural_problems_are_line_numbered_errors() {
        let dir = tempdir().unwrap();
        let cases: [(&str, &str); 5] = [
            ("FIELDS x y\nPOINTS 1\nDATA ascii\n1 2\n", "missing field"),
            ("FIELDS x y z\nPOINTS 2\nDATA ascii\n1 2 3\n", "declared 2"),
            (
                "FIELDS x y z\nPOINTS 1\nDATA ascii\n1 2 3\n4 5 6\n",
                "more data rows",
            ),
            ("FIELDS x y z\nPOINTS 1\nDATA ascii\n1 2\n", "expected 3"),
            (
                "FIELDS x y z\nWIDTH 3\nHEIGHT 2\nPOINTS 5\nDATA ascii\n",
                "disagrees",
            ),
        ];
        for (i, (text, needle)) in cases.iter().enumerate() {
            let path = dir.path().join(format!("bad{i}.pcd"));
            std::fs::write(&path, text).unwrap();
            let err = read_pcd(&path).unwrap_err();
            let msg = err.to_string();
            assert!(
                matches!(err, FormatError::Parse { .. }) && msg.contains(needle),
                "case {i}: unexpected error {msg:?}"
            );
        }
    }

    #[test]
    fn binary_data_is_refused() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("bin.pcd");
        std::fs::write(&path, "FIELDS x y z\nPOINTS 0\nDATA binary\n").unwrap();
        assert!(matches!(
            read_pcd(&path),
            Err(FormatError::Unsupported(_))
        ));
    }

    #[test]
    fn unparseable_floats_are_errors_not_drops() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("junk.pcd");
        std::fs::write(
            &path,
            "FIELDS x y z\nPOINTS 1\nDATA ascii\n1 two 3\n",
        )
        .unwrap();
        let err = read_pcd(&path).unwrap_err();
        assert!(err.to_string().contains("line 4"), "{err}");
    }
}
