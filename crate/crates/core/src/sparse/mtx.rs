//! Matrix Market coordinate format (`real`/`integer`, `general`/`symmetric`).

use std::fs::File;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use super::SparseMatrix;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Symmetry {
    General,
    Symmetric,
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

fn parse_header(line_no: usize, line: &str) -> Result<Symmetry> {
    let tokens: Vec<String> = line
        .split_whitespace()
        .map(str::to_ascii_lowercase)
        .collect();
    if tokens.len() != 5 || tokens[0] != "%%matrixmarket" {
        return Err(parse_err(line_no, format!("malformed header {line:?}")));
    }
    if tokens[1] != "matrix" {
        return Err(parse_err(
            line_no,
            format!("unsupported object {:?}", tokens[1]),
        ));
    }
    if tokens[2] != "coordinate" {
        return Err(parse_err(
            line_no,
            format!("unsupported format {:?}, expected coordinate", tokens[2]),
        ));
    }
    match tokens[3].as_str() {
        "real" | "integer" => {}
        other => return Err(parse_err(line_no, format!("unsupported field {other:?}"))),
    }
    match tokens[4].as_str() {
        "general" => Ok(Symmetry::General),
        "symmetric" => Ok(Symmetry::Symmetric),
        other => Err(parse_err(
            line_no,
            format!("unsupported symmetry {other:?}"),
        )),
    }
}

fn parse_usize(line_no: usize, tok: Option<&str>, what: &str) -> Result<usize> {
    let tok = tok.ok_or_else(|| parse_err(line_no, format!("missing {what}")))?;
    tok.parse()
        .map_err(|_| parse_err(line_no, format!("invalid {what} {tok:?}")))
}

/// Reads a Matrix Market coordinate stream into canonical CSR.
///
/// Symmetric storage is expanded, duplicate entries are summed and the
/// 1-based file indices become 0-based.
pub fn parse_matrix_market<R: Read>(reader: R) -> Result<SparseMatrix> {
    let reader = BufReader::new(reader);
    let mut lines = reader.lines().enumerate().map(|(i, l)| (i + 1, l));

    let (hdr_no, header) = match lines.next() {
        Some((no, l)) => (no, l?),
        None => return Err(parse_err(1, "empty input")),
    };
    let symmetry = parse_header(hdr_no, header.trim())?;

    let mut size: Option<(usize, usize, usize)> = None;
    let mut triplets: Vec<(usize, usize, f64)> = Vec::new();
    let mut seen = 0usize;

    for (no, line) in lines {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('%') {
            continue;
        }
        let mut toks = trimmed.split_whitespace();
        match size {
            None => {
                let m = parse_usize(no, toks.next(), "row count")?;
                let n = parse_usize(no, toks.next(), "column count")?;
                let nnz = parse_usize(no, toks.next(), "entry count")?;
                if toks.next().is_some() {
                    return Err(parse_err(no, "trailing tokens on size line"));
                }
                if symmetry == Symmetry::Symmetric && m != n {
                    return Err(parse_err(
                        no,
                        format!("symmetric matrix must be square, got {m}x{n}"),
                    ));
                }
                size = Some((m, n, nnz));
                triplets.reserve(nnz);
            }
            Some((m, n, nnz)) => {
                if seen == nnz {
                    return Err(parse_err(
                        no,
                        format!("more than the declared {nnz} entries"),
                    ));
                }
                let i = parse_usize(no, toks.next(), "row index")?;
                let j = parse_usize(no, toks.next(), "column index")?;
                let vtok = toks.next().ok_or_else(|| parse_err(no, "missing value"))?;
                let v: f64 = vtok
                    .parse()
                    .map_err(|_| parse_err(no, format!("invalid value {vtok:?}")))?;
                if toks.next().is_some() {
                    return Err(parse_err(no, "trailing tokens on entry line"));
                }
                if i == 0 || j == 0 || i > m || j > n {
                    return Err(parse_err(
                        no,
                        format!("index ({i}, {j}) outside declared {m}x{n}"),
                    ));
                }
                triplets.push((i - 1, j - 1, v));
                if symmetry == Symmetry::Symmetric && i != j {
                    triplets.push((j - 1, i - 1, v));
                }
                seen += 1;
            }
        }
    }

    let (m, n, nnz) = size.ok_or_else(|| parse_err(hdr_no + 1, "missing size line"))?;
    if seen != nnz {
        return Err(parse_err(
            hdr_no,
            format!("declared {nnz} entries, found {seen}"),
        ));
    }
    SparseMatrix::from_triplets(m, n, &triplets)
}

pub fn read_matrix_market_file(path: impl AsRef<Path>) -> Result<SparseMatrix> {
    parse_matrix_market(File::open(path)?)
}

/// Writes `general` coordinate format with full-precision values.
pub fn write_matrix_market<W: Write>(a: &SparseMatrix, mut out: W) -> Result<()> {
    writeln!(out, "%%MatrixMarket matrix coordinate real general")?;
    writeln!(out, "{} {} {}", a.rows(), a.cols(), a.nnz())?;
    for r in 0..a.rows() {
        for (c, v) in a.row(r) {
            writeln!(out, "{} {} {:e}", r + 1, c + 1, v)?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn parse(s: &str) -> Result<SparseMatrix> {
        parse_matrix_market(s.as_bytes())
    }

    #[test]
    fn reads_general_real() {
        let a = parse(
            "%%MatrixMarket matrix coordinate real general\n% comment\n2 2 2\n1 1 3.0\n2 2 4.0\n",
        )
        .unwrap();
        assert_eq!(a.rows(), 2);
        assert_eq!(a.row_offsets(), &[0, 1, 2]);
        assert_eq!(a.col_indices(), &[0, 1]);
        assert_eq!(a.values(), &[3.0, 4.0]);
    }

    #[test]
    fn expands_symmetric_storage() {
        let a = parse("%%MatrixMarket matrix coordinate real symmetric\n2 2 1\n2 1 5.0\n").unwrap();
        let d = a.to_dense();
        assert_eq!(d.get(1, 0), 5.0);
        assert_eq!(d.get(0, 1), 5.0);
        assert_eq!(a.nnz(), 2);
    }

    #[test]
    fn integer_field_and_duplicates() {
        let a = parse("%%MatrixMarket matrix coordinate integer general\n2 3 2\n1 2 1\n1 2 2\n")
            .unwrap();
        assert_eq!(a.nnz(), 1);
        assert_eq!(a.values(), &[3.0]);
        assert_eq!(a.cols(), 3);
    }

    #[test]
    fn rejects_complex_and_pattern() {
        for field in ["complex", "pattern"] {
            let text =
                format!("%%MatrixMarket matrix coordinate {field} general\n1 1 1\n1 1 1 0\n");
            match parse(&text) {
                Err(Error::Parse { line: 1, message }) => assert!(message.contains(field)),
                other => panic!("expected parse error, got {other:?}"),
            }
        }
    }

    #[test]
    fn rejects_out_of_bounds_index_with_line() {
        let err = parse("%%MatrixMarket matrix coordinate real general\n2 2 2\n1 1 1.0\n3 1 1.0\n")
            .unwrap_err();
        assert!(matches!(err, Error::Parse { line: 4, .. }), "{err}");
    }

    #[test]
    fn rejects_malformed_header_and_counts() {
        assert!(matches!(
            parse("hello\n"),
            Err(Error::Parse { line: 1, .. })
        ));
        assert!(matches!(
            parse("%%MatrixMarket matrix array real general\n2 2\n"),
            Err(Error::Parse { line: 1, .. })
        ));
        assert!(parse("%%MatrixMarket matrix coordinate real general\n2 2 3\n1 1 1.0\n").is_err());
        assert!(matches!(
            parse("%%MatrixMarket matrix coordinate real general\n2 2 1\n1 1 1.0\n2 2 2.0\n"),
            Err(Error::Parse { line: 4, .. })
        ));
        assert!(matches!(
            parse("%%MatrixMarket matrix coordinate real general\n2 2 1\n1 1 abc\n"),
            Err(Error::Parse { line: 3, .. })
        ));
    }

    proptest! {
        #[test]
        fn round_trip_is_identity(
            (m, n, t) in (1usize..6, 1usize..6).prop_flat_map(|(m, n)| {
                (Just(m), Just(n), proptest::collection::vec((0..m, 0..n, -1e3f64..1e3), 0..20))
            })
        ) {
            let a = SparseMatrix::from_triplets(m, n, &t).unwrap();
            let mut buf = Vec::new();
            write_matrix_market(&a, &mut buf).unwrap();
            let b = parse_matrix_market(buf.as_slice()).unwrap();
            prop_assert_eq!(a, b);
        }
    }
}
