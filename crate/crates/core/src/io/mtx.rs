//! Matrix Market bundles.
//!
//! A bundle is a directory holding
//!
//! * `A.mtx`: constraint matrix, Matrix Market coordinate format;
//! * `Q.mtx` (optional, absent means `Q = 0`): symmetric or general;
//! * `c.vec`: one coefficient per line;
//! * `rows.bnd`: one `l u` pair per row of `A`;
//! * `cols.bnd` (optional, absent means free): either one `L U` pair per
//!   variable or the single line `l1 <lambda>`;
//! * `offset.txt` (optional): objective constant.
//!
//! Blank lines and lines starting with `%` or `#` are ignored in the plain
//! files. Infinite bounds are written `inf` and `-inf`.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::linalg::CsrMatrix;
use crate::problem::{Bounds, CcqpProblem, CompositeTerm, PsdOperator};

fn number(tok: &str, line: usize) -> Result<f64> {
    let v: f64 = tok
        .parse()
        .map_err(|_| Error::parse(line, format!("expected a number, found `{tok}`")))?;
    if v.is_nan() {
        return Err(Error::parse(line, "NaN is not a valid value"));
    }
    Ok(v)
}

fn finite(tok: &str, line: usize) -> Result<f64> {
    let v = number(tok, line)?;
    if !v.is_finite() {
        return Err(Error::parse(line, format!("value `{tok}` is not finite")));
    }
    Ok(v)
}

fn index(tok: &str, limit: usize, line: usize) -> Result<usize> {
    let i: usize = tok
        .parse()
        .map_err(|_| Error::parse(line, format!("expected an index, found `{tok}`")))?;
    if i == 0 || i > limit {
        return Err(Error::parse(line, format!("index {i} outside 1..={limit}")));
    }
    Ok(i - 1)
}

fn data_lines(text: &str) -> impl Iterator<Item = (usize, Vec<&str>)> {
    text.lines().enumerate().filter_map(|(i, l)| {
        let t = l.trim();
        (!t.is_empty() && !t.starts_with('%') && !t.starts_with('#'))
            .then(|| (i + 1, t.split_whitespace().collect()))
    })
}

/// Reads a coordinate-format matrix. `expect` pins the dimensions so that a
/// corrupted size line cannot trigger huge allocations.
pub fn read_mtx(text: &str, expect: (usize, usize)) -> Result<CsrMatrix> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| Error::parse(1, "empty Matrix Market file"))?;
    let head: Vec<String> = header
        .split_whitespace()
        .map(|s| s.to_ascii_lowercase())
        .collect();
    if head.len() != 5 || head[0] != "%%matrixmarket" || head[1] != "matrix" {
        return Err(Error::parse(1, "malformed Matrix Market header"));
    }
    if head[2] != "coordinate" {
        return Err(Error::parse(
            1,
            format!("unsupported storage `{}`", head[2]),
        ));
    }
    let pattern = match head[3].as_str() {
        "real" | "integer" | "double" => false,
        "pattern" => true,
        other => return Err(Error::parse(1, format!("unsupported field `{other}`"))),
    };
    let symmetric = match head[4].as_str() {
        "general" => false,
        "symmetric" => true,
        other => return Err(Error::parse(1, format!("unsupported symmetry `{other}`"))),
    };

    let mut size: Option<(usize, usize, usize)> = None;
    let mut trip = Vec::new();
    let mut seen = 0usize;
    for (idx, raw) in lines {
        let line = idx + 1;
        let t = raw.trim();
        if t.is_empty() || t.starts_with('%') {
            continue;
        }
        let f: Vec<&str> = t.split_whitespace().collect();
        match size {
            None => {
                if f.len() != 3 {
                    return Err(Error::parse(
                        line,
                        "size line must hold rows, columns and entries",
                    ));
                }
                let dims: Vec<usize> = f
                    .iter()
                    .map(|s| {
                        s.parse()
                            .map_err(|_| Error::parse(line, format!("bad size `{s}`")))
                    })
                    .collect::<Result<_>>()?;
                if (dims[0], dims[1]) != expect {
                    return Err(Error::parse(
                        line,
                        format!(
                            "matrix is {}x{}, expected {}x{}",
                            dims[0], dims[1], expect.0, expect.1
                        ),
                    ));
                }
                if symmetric && dims[0] != dims[1] {
                    return Err(Error::parse(line, "symmetric matrix must be square"));
                }
                size = Some((dims[0], dims[1], dims[2]));
            }
            Some((nr, nc, nnz)) => {
                let want = if pattern { 2 } else { 3 };
                if f.len() != want {
                    return Err(Error::parse(
                        line,
                        format!("expected {want} fields, found {}", f.len()),
                    ));
                }
                if seen == nnz {
                    return Err(Error::parse(
                        line,
                        format!("more than the declared {nnz} entries"),
                    ));
                }
                seen += 1;
                let i = index(f[0], nr, line)?;
                let j = index(f[1], nc, line)?;
                let v = if pattern { 1.0 } else { finite(f[2], line)? };
                if symmetric {
                    if j > i {
                        return Err(Error::parse(
                            line,
                            "symmetric storage expects the lower triangle",
                        ));
                    }
                    if i != j {
                        trip.push((j, i, v));
                    }
                }
                trip.push((i, j, v));
            }
        }
    }
    let (nr, nc, nnz) =
        size.ok_or_else(|| Error::parse(text.lines().count().max(1), "missing size line"))?;
    if seen != nnz {
        return Err(Error::parse(
            text.lines().count().max(1),
            format!("declared {nnz} entries, found {seen}"),
        ));
    }
    let m = CsrMatrix::from_triplets(nr, nc, &trip)?;
    if !m.triplets().all(|(_, _, v)| v.is_finite()) {
        return Err(Error::InvalidProblem("duplicate entries overflow".into()));
    }
    Ok(m)
}

pub fn write_mtx(m: &CsrMatrix, symmetric: bool) -> String {
    let entries: Vec<_> = m
        .triplets()
        .filter(|&(i, j, _)| !symmetric || j <= i)
        .collect();
    let mut out = format!(
        "%%MatrixMarket matrix coordinate real {}\n{} {} {}\n",
        if symmetric { "symmetric" } else { "general" },
        m.nrows(),
        m.ncols(),
        entries.len()
    );
    for (i, j, v) in entries {
        let _ = writeln!(out, "{} {} {}", i + 1, j + 1, v);
    }
    out
}

pub fn read_vec(text: &str) -> Result<Vec<f64>> {
    data_lines(text)
        .map(|(line, f)| {
            if f.len() != 1 {
                return Err(Error::parse(
                    line,
                    format!("expected one value, found {}", f.len()),
                ));
            }
            finite(f[0], line)
        })
        .collect()
}

fn read_pairs(text: &str) -> Result<Bounds> {
    let mut lower = Vec::new();
    let mut upper = Vec::new();
    for (line, f) in data_lines(text) {
        if f.len() != 2 {
            return Err(Error::parse(
                line,
                format!("expected `lower upper`, found {} fields", f.len()),
            ));
        }
        let (l, u) = (number(f[0], line)?, number(f[1], line)?);
        if l > u || l == f64::INFINITY || u == f64::NEG_INFINITY {
            return Err(Error::parse(line, format!("empty interval [{l}, {u}]")));
        }
        lower.push(l);
        upper.push(u);
    }
    Bounds::new(lower, upper)
}

fn read_phi(text: &str, n: usize) -> Result<CompositeTerm> {
    let mut it = data_lines(text).peekable();
    if let Some((line, f)) = it.peek() {
        if f[0].eq_ignore_ascii_case("l1") {
            if f.len() != 2 {
                return Err(Error::parse(*line, "expected `l1 <lambda>`"));
            }
            let lambda = finite(f[1], *line)?;
            let line = *line;
            if it.nth(1).is_some() {
                return Err(Error::parse(line + 1, "nothing may follow the l1 line"));
            }
            return CompositeTerm::weighted_l1(lambda)
                .map_err(|e| Error::parse(line, e.to_string()));
        }
    }
    let b = read_pairs(text)?;
    if b.len() != n {
        return Err(Error::DimensionMismatch {
            context: "cols.bnd",
            expected: n,
            got: b.len(),
        });
    }
    Ok(CompositeTerm::BoxIndicator(b))
}

fn read_file(path: &Path) -> Result<Option<String>> {
    match fs::read_to_string(path) {
        Ok(s) => Ok(Some(s)),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
        Err(e) => Err(e.into()),
    }
}

/// Reads a bundle from its component texts.
pub fn parse_matrix_bundle(
    a: &str,
    q: Option<&str>,
    c: &str,
    rows: &str,
    cols: Option<&str>,
    offset: Option<&str>,
) -> Result<CcqpProblem> {
    let c = read_vec(c)?;
    let n = c.len();
    let rows = read_pairs(rows)?;
    let a = read_mtx(a, (rows.len(), n))?;
    let q = match q {
        Some(text) => PsdOperator::Sparse(read_mtx(text, (n, n))?),
        None => PsdOperator::zero(n),
    };
    let phi = match cols {
        Some(text) => read_phi(text, n)?,
        None => CompositeTerm::free(n),
    };
    let offset = match offset {
        Some(text) => match read_vec(text)?.as_slice() {
            [v] => *v,
            other => {
                return Err(Error::parse(
                    1,
                    format!("offset file holds {} values", other.len()),
                ));
            }
        },
        None => 0.0,
    };
    Ok(CcqpProblem::new(q, a, c, rows, phi)?.with_offset(offset))
}

pub fn read_matrix_bundle(dir: impl AsRef<Path>) -> Result<CcqpProblem> {
    let dir = dir.as_ref();
    let required = |name: &str| -> Result<String> {
        read_file(&dir.join(name))?
            .ok_or_else(|| Error::InvalidProblem(format!("bundle {} lacks {name}", dir.display())))
    };
    let a = required("A.mtx")?;
    let c = required("c.vec")?;
    let rows = required("rows.bnd")?;
    let q = read_file(&dir.join("Q.mtx"))?;
    let cols = read_file(&dir.join("cols.bnd"))?;
    let offset = read_file(&dir.join("offset.txt"))?;
    let name = dir
        .file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    Ok(parse_matrix_bundle(
        &a,
        q.as_deref(),
        &c,
        &rows,
        cols.as_deref(),
        offset.as_deref(),
    )?
    .with_name(name))
}

/// Explicit copy of `Q`; matrix-free operators are applied to unit vectors.
pub fn materialize_q(q: &PsdOperator) -> CsrMatrix {
    match q {
        PsdOperator::Sparse(m) => m.clone(),
        PsdOperator::MatrixFree(op) => {
            let n = op.dim();
            let mut dense = vec![0.0; n * n];
            let mut e = vec![0.0; n];
            for j in 0..n {
                e[j] = 1.0;
                op.apply(&e, &mut dense[j * n..(j + 1) * n]);
                e[j] = 0.0;
            }
            // average the two triangles so that symmetric storage is faithful
            let mut trip = Vec::new();
            for i in 0..n {
                for j in 0..n {
                    let v = 0.5 * (dense[j * n + i] + dense[i * n + j]);
                    if v != 0.0 {
                        trip.push((i, j, v));
                    }
                }
            }
            CsrMatrix::from_triplets(n, n, &trip).expect("indices in range")
        }
    }
}

fn exactly_symmetric(m: &CsrMatrix) -> bool {
    *m == m.transpose()
}

fn pair_lines(b: &Bounds) -> String {
    let mut out = String::new();
    for (l, u) in b.lower.iter().zip(&b.upper) {
        let _ = writeln!(out, "{l} {u}");
    }
    out
}

pub fn write_matrix_bundle(prob: &CcqpProblem, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir)?;
    fs::write(dir.join("A.mtx"), write_mtx(&prob.a, false))?;
    if !prob.q.is_zero() {
        let q = materialize_q(&prob.q);
        fs::write(dir.join("Q.mtx"), write_mtx(&q, exactly_symmetric(&q)))?;
    }
    let c: String = prob.c.iter().map(|v| format!("{v}\n")).collect();
    fs::write(dir.join("c.vec"), c)?;
    fs::write(dir.join("rows.bnd"), pair_lines(&prob.rows))?;
    match &prob.phi {
        CompositeTerm::BoxIndicator(b) => fs::write(dir.join("cols.bnd"), pair_lines(b))?,
        CompositeTerm::WeightedL1 { lambda } => {
            fs::write(dir.join("cols.bnd"), format!("l1 {lambda}\n"))?
        }
    }
    if prob.offset != 0.0 {
        fs::write(dir.join("offset.txt"), format!("{}\n", prob.offset))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_constraints() {
        let a = "%%MatrixMarket matrix coordinate real general\n% comment\n2 2 2\n1 1 1\n2 2 1\n";
        let m = read_mtx(a, (2, 2)).unwrap();
        assert_eq!(m, CsrMatrix::identity(2));
    }

    #[test]
    fn symmetric_storage_expands() {
        let q = "%%MatrixMarket matrix coordinate real symmetric\n2 2 3\n1 1 2\n2 1 -1\n2 2 3\n";
        let m = read_mtx(q, (2, 2)).unwrap();
        assert_eq!(m.to_dense(), vec![2.0, -1.0, -1.0, 3.0]);
    }

    #[test]
    fn malformed_header_is_a_parse_error() {
        for bad in [
            "%%MatrixMarket matrix array real general\n1 1\n1\n",
            "%MatrixMarket matrix coordinate real general\n1 1 0\n",
            "",
        ] {
            assert!(matches!(
                read_mtx(bad, (1, 1)),
                Err(Error::Parse { line: 1, .. })
            ));
        }
        let short = "%%MatrixMarket matrix coordinate real general\n1 1 2\n1 1 1\n";
        assert!(matches!(read_mtx(short, (1, 1)), Err(Error::Parse { .. })));
    }

    #[test]
    fn bundle_from_texts() {
        let p = parse_matrix_bundle(
            "%%MatrixMarket matrix coordinate real general\n1 2 2\n1 1 1\n1 2 1\n",
            None,
            "1\n-1\n",
            "-inf 1\n",
            Some("l1 0.5\n"),
            Some("2.5\n"),
        )
        .unwrap();
        assert!(p.q.is_zero());
        assert_eq!(p.rows.lower, vec![f64::NEG_INFINITY]);
        assert_eq!(p.phi, CompositeTerm::WeightedL1 { lambda: 0.5 });
        assert_eq!(p.offset, 2.5);
    }

    #[test]
    fn materialized_operator_matches_apply() {
        let q = PsdOperator::Sparse(CsrMatrix::from_dense(2, 2, &[2.0, 1.0, 1.0, 3.0]));
        assert_eq!(materialize_q(&q).to_dense(), vec![2.0, 1.0, 1.0, 3.0]);
    }
}
