//! Plain-text state and channel files.
//!
//! ```text
//! # comments run to end of line
//! dim 2
//! kraus 1          # channels only
//! 1:0, 0:0         # one row per line, entries re:im
//! 0:0, 1:0
//! ```
//!
//! A channel lists its `kraus` operators back to back, `dim` rows each.
//! Numbers are written with Rust's shortest round-trip formatting, so a
//! save/load cycle reproduces every entry exactly.

use std::fmt::Write as _;
use std::path::Path;

use qchan::channels::KrausChannel;
use qchan::states::{density_from_matrix, DensityMatrix};
use qchan::{ComplexMatrix, QchanError, Result, C64};

struct Line<'a> {
    number: usize,
    text: &'a str,
    /// Byte offset of `text` within the raw line.
    offset: usize,
}

fn significant_lines(src: &str) -> Vec<Line<'_>> {
    src.lines()
        .enumerate()
        .filter_map(|(i, raw)| {
            let body = raw.split('#').next().unwrap_or("");
            let trimmed = body.trim_start();
            let offset = body.len() - trimmed.len();
            let text = trimmed.trim_end();
            (!text.is_empty()).then_some(Line {
                number: i + 1,
                text,
                offset,
            })
        })
        .collect()
}

fn parse_error(line: usize, column: usize, message: impl Into<String>) -> QchanError {
    QchanError::Parse {
        line,
        column,
        message: message.into(),
    }
}

fn header(line: Option<&Line<'_>>, key: &str, eof_line: usize) -> Result<usize> {
    let line = line.ok_or_else(|| parse_error(eof_line, 1, format!("missing `{key} <n>` header")))?;
    let mut parts = line.text.split_whitespace();
    if parts.next() != Some(key) {
        return Err(parse_error(line.number, line.offset + 1, format!("expected `{key} <n>`")));
    }
    let value = parts
        .next()
        .ok_or_else(|| parse_error(line.number, line.offset + line.text.len() + 1, format!("`{key}` needs a value")))?;
    let n: usize = value.parse().map_err(|_| {
        let col = line.offset + line.text.find(value).unwrap_or(0) + 1;
        parse_error(line.number, col, format!("`{value}` is not a positive integer"))
    })?;
    if n == 0 {
        return Err(parse_error(line.number, line.offset + 1, format!("`{key}` must be at least 1")));
    }
    if let Some(extra) = parts.next() {
        let col = line.offset + line.text.rfind(extra).unwrap_or(0) + 1;
        return Err(parse_error(line.number, col, format!("unexpected `{extra}`")));
    }
    Ok(n)
}

fn parse_row(line: &Line<'_>, dim: usize) -> Result<Vec<C64>> {
    let mut out = Vec::with_capacity(dim);
    let mut start = 0;
    for token in line.text.split(',') {
        let lead = token.len() - token.trim_start().len();
        let col = line.offset + start + lead + 1;
        let t = token.trim();
        let (re, im) = t
            .split_once(':')
            .ok_or_else(|| parse_error(line.number, col, format!("entry `{t}` is not of the form re:im")))?;
        let num = |s: &str| {
            s.trim()
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| parse_error(line.number, col, format!("`{}` is not a finite number", s.trim())))
        };
        out.push(C64::new(num(re)?, num(im)?));
        start += token.len() + 1;
    }
    if out.len() != dim {
        return Err(parse_error(
            line.number,
            line.offset + 1,
            format!("row has {} entries, expected {dim}", out.len()),
        ));
    }
    Ok(out)
}

fn parse_matrices(lines: &[Line<'_>], dim: usize, count: usize, eof_line: usize) -> Result<Vec<ComplexMatrix>> {
    let needed = dim * count;
    if lines.len() < needed {
        return Err(parse_error(
            eof_line,
            1,
            format!("expected {needed} matrix rows, found {}", lines.len()),
        ));
    }
    if let Some(extra) = lines.get(needed) {
        return Err(parse_error(extra.number, extra.offset + 1, format!("unexpected row after {needed} matrix rows")));
    }
    lines
        .chunks(dim)
        .map(|block| {
            let mut entries = Vec::with_capacity(dim * dim);
            for line in block {
                entries.extend(parse_row(line, dim)?);
            }
            ComplexMatrix::from_row_major(dim, entries)
        })
        .collect()
}

/// Parses and validates a state document.
pub fn parse_state(src: &str) -> Result<DensityMatrix> {
    let lines = significant_lines(src);
    let eof = src.lines().count() + 1;
    let dim = header(lines.first(), "dim", eof)?;
    let m = parse_matrices(&lines[1..], dim, 1, eof)?.remove(0);
    density_from_matrix(m)
}

/// Parses a channel document; trace preservation is validated.
pub fn parse_channel(src: &str) -> Result<KrausChannel> {
    let lines = significant_lines(src);
    let eof = src.lines().count() + 1;
    let dim = header(lines.first(), "dim", eof)?;
    let count = header(lines.get(1), "kraus", eof)?;
    let rest = lines.get(2..).unwrap_or(&[]);
    let kraus = parse_matrices(rest, dim, count, eof)?;
    KrausChannel::new(kraus).map_err(|e| match e {
        QchanError::Validation(msg) if msg.contains("trace preserving") => {
            QchanError::Validation(format!("trace preservation violated: {msg}"))
        }
        other => other,
    })
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| QchanError::Usage(format!("cannot read {}: {e}", path.display())))
}

pub fn load_state(path: &Path) -> Result<DensityMatrix> {
    parse_state(&read(path)?)
}

pub fn load_channel(path: &Path) -> Result<KrausChannel> {
    parse_channel(&read(path)?)
}

fn write_matrix(out: &mut String, m: &ComplexMatrix) {
    let dim = m.dim();
    for i in 0..dim {
        let row: Vec<String> = (0..dim)
            .map(|j| {
                let z = m.get(i, j);
                format!("{:?}:{:?}", z.re, z.im)
            })
            .collect();
        let _ = writeln!(out, "{}", row.join(", "));
    }
}

pub fn format_state(rho: &DensityMatrix) -> String {
    let mut out = format!("dim {}\n", rho.dim());
    write_matrix(&mut out, rho.matrix());
    out
}

pub fn format_channel(c: &KrausChannel) -> String {
    let mut out = format!("dim {}\nkraus {}\n", c.dim(), c.kraus().len());
    for (i, k) in c.kraus().iter().enumerate() {
        let _ = writeln!(out, "# operator {i}");
        write_matrix(&mut out, k);
    }
    out
}

fn write(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| QchanError::Usage(format!("cannot write {}: {e}", path.display())))
}

pub fn save_state(path: &Path, rho: &DensityMatrix) -> Result<()> {
    write(path, &format_state(rho))
}

pub fn save_channel(path: &Path, c: &KrausChannel) -> Result<()> {
    write(path, &format_channel(c))
}

#[cfg(test)]
mod tests {
    use super::*;
    use qchan::channels::{depolarizing, DepolarizingParams};

    #[test]
    fn identity_channel_file() {
        let src = "# identity\ndim 2\nkraus 1\n1:0, 0:0\n0:0, 1:0 # second row\n";
        let c = parse_channel(src).unwrap();
        assert!(c.choi_distance(&KrausChannel::identity(2)) == 0.0);
    }

    #[test]
    fn non_trace_preserving_file_names_the_invariant() {
        let src = "dim 2\nkraus 1\n1:0, 0:0\n0:0, 0.5:0\n";
        let err = parse_channel(src).unwrap_err();
        assert!(matches!(err, QchanError::Validation(_)));
        assert!(err.to_string().contains("trace preservation"));
    }

    #[test]
    fn parse_errors_carry_positions() {
        match parse_state("dim 2\n0.5:0, 0:0\n0:0,  x:0\n").unwrap_err() {
            QchanError::Parse { line, column, .. } => assert_eq!((line, column), (3, 7)),
            e => panic!("{e:?}"),
        }
        match parse_state("\n\ndimension 2\n").unwrap_err() {
            QchanError::Parse { line, .. } => assert_eq!(line, 3),
            e => panic!("{e:?}"),
        }
        match parse_state("dim 2\n1:0, 0:0\n").unwrap_err() {
            QchanError::Parse { line, .. } => assert_eq!(line, 3),
            e => panic!("{e:?}"),
        }
        assert!(matches!(parse_state("dim 2\n1:0\n0:0, 0:0\n"), Err(QchanError::Parse { line: 2, .. })));
        assert!(matches!(parse_state("dim 1\n1:0\n2:0\n"), Err(QchanError::Parse { line: 3, .. })));
        assert!(matches!(parse_state("dim 0\n"), Err(QchanError::Parse { .. })));
    }

    #[test]
    fn round_trips_are_exact() {
        let c = depolarizing(&DepolarizingParams::new(3, 0.37).unwrap());
        let back = parse_channel(&format_channel(&c)).unwrap();
        assert_eq!(back.choi_distance(&c), 0.0);
        let rho = qchan::states::random_density(3, 2, 5).unwrap();
        let back = parse_state(&format_state(&rho)).unwrap();
        assert_eq!(back.matrix(), rho.matrix());
    }
}
