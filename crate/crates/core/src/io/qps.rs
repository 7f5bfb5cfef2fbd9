//! Free-format QPS reader.
//!
//! Section headers start in column 1; data lines are indented and
//! whitespace-delimited. Lines that are empty or start with `*` are skipped.
//! `QUADOBJ` (alias `QSECTION`) lists the lower triangle of `Q` in the
//! `1/2 x^T Q x` convention and is mirrored; `QMATRIX` lists all of `Q` and
//! must be symmetric. A constant on the objective row in `RHS` contributes
//! `-value` to the objective. Variable bounds default to `[0, +inf)`.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::linalg::CsrMatrix;
use crate::problem::{Bounds, CcqpProblem, CompositeTerm, PsdOperator};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum RowKind {
    N,
    E,
    L,
    G,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Section {
    Name,
    ObjSense,
    Rows,
    Columns,
    Rhs,
    Ranges,
    Bounds,
    QuadObj,
    QMatrix,
    End,
}

impl Section {
    fn parse(tok: &str) -> Option<Self> {
        Some(match tok {
            "NAME" => Section::Name,
            "OBJSENSE" => Section::ObjSense,
            "ROWS" => Section::Rows,
            "COLUMNS" => Section::Columns,
            "RHS" => Section::Rhs,
            "RANGES" => Section::Ranges,
            "BOUNDS" => Section::Bounds,
            "QUADOBJ" | "QSECTION" => Section::QuadObj,
            "QMATRIX" => Section::QMatrix,
            "ENDATA" => Section::End,
            _ => return None,
        })
    }
}

/// Parsed contents before conversion to the solver's form.
#[derive(Debug, Clone, Default)]
pub struct QpsDocument {
    pub name: String,
    pub maximize: bool,
    pub objective_row: Option<String>,
    /// Constraint rows in declaration order with their type letter.
    pub rows: Vec<(String, char)>,
    pub columns: Vec<String>,
    /// `(row, column, value)` over constraint rows; duplicates summed later.
    pub entries: Vec<(usize, usize, f64)>,
    pub c: Vec<f64>,
    pub rhs: Vec<f64>,
    pub ranges: Vec<Option<f64>>,
    pub objective_constant: f64,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    /// Full symmetric `Q` triplets after mirroring.
    pub quad: Vec<(usize, usize, f64)>,
}

struct Parser {
    doc: QpsDocument,
    row_index: HashMap<String, usize>,
    row_kinds: Vec<RowKind>,
    col_index: HashMap<String, usize>,
    /// First line of each `QMATRIX` entry, for locating asymmetry.
    qmatrix_lines: HashMap<(usize, usize), usize>,
    lower_set: Vec<bool>,
    qmatrix: bool,
}

fn number(tok: &str, line: usize, allow_inf: bool) -> Result<f64> {
    let v: f64 = tok
        .parse()
        .map_err(|_| Error::parse(line, format!("expected a number, found `{tok}`")))?;
    if v.is_nan() || (!allow_inf && v.is_infinite()) {
        return Err(Error::parse(line, format!("value `{tok}` is not finite")));
    }
    Ok(v)
}

fn field_count_error(line: usize, section: &str, got: usize) -> Error {
    Error::parse(
        line,
        format!(
            "{got} fields in {section} line; only free-format (whitespace-delimited) MPS is supported, not fixed-column"
        ),
    )
}

impl Parser {
    fn new() -> Self {
        Parser {
            doc: QpsDocument::default(),
            row_index: HashMap::new(),
            row_kinds: Vec::new(),
            col_index: HashMap::new(),
            qmatrix_lines: HashMap::new(),
            lower_set: Vec::new(),
            qmatrix: false,
        }
    }

    fn row(&self, name: &str, line: usize) -> Result<usize> {
        self.row_index
            .get(name)
            .copied()
            .ok_or_else(|| Error::parse(line, format!("undeclared row `{name}`")))
    }

    fn col(&self, name: &str, line: usize) -> Result<usize> {
        self.col_index
            .get(name)
            .copied()
            .ok_or_else(|| Error::parse(line, format!("undeclared column `{name}`")))
    }

    fn is_objective(&self, name: &str) -> bool {
        self.doc.objective_row.as_deref() == Some(name)
    }

    fn rows_line(&mut self, f: &[&str], line: usize) -> Result<()> {
        if f.len() != 2 {
            return Err(field_count_error(line, "ROWS", f.len()));
        }
        let kind = match f[0].to_ascii_uppercase().as_str() {
            "N" => RowKind::N,
            "E" => RowKind::E,
            "L" => RowKind::L,
            "G" => RowKind::G,
            other => return Err(Error::parse(line, format!("unknown row type `{other}`"))),
        };
        let name = f[1].to_string();
        if self.is_objective(&name) || self.row_index.contains_key(&name) {
            return Err(Error::parse(line, format!("row `{name}` declared twice")));
        }
        if kind == RowKind::N {
            if self.doc.objective_row.is_some() {
                return Err(Error::parse(line, "more than one objective (N) row"));
            }
            self.doc.objective_row = Some(name);
            return Ok(());
        }
        let letter = match kind {
            RowKind::E => 'E',
            RowKind::L => 'L',
            _ => 'G',
        };
        self.row_index.insert(name.clone(), self.doc.rows.len());
        self.doc.rows.push((name, letter));
        self.row_kinds.push(kind);
        self.doc.rhs.push(0.0);
        self.doc.ranges.push(None);
        Ok(())
    }

    fn columns_line(&mut self, f: &[&str], line: usize) -> Result<()> {
        if f.len() >= 2 && f[1].trim_matches('\'').eq_ignore_ascii_case("MARKER") {
            return Ok(());
        }
        if f.len() != 3 && f.len() != 5 {
            return Err(field_count_error(line, "COLUMNS", f.len()));
        }
        let j = match self.col_index.get(f[0]) {
            Some(&j) => j,
            None => {
                let j = self.doc.columns.len();
                self.col_index.insert(f[0].to_string(), j);
                self.doc.columns.push(f[0].to_string());
                self.doc.c.push(0.0);
                j
            }
        };
        for pair in f[1..].chunks(2) {
            let v = number(pair[1], line, false)?;
            if self.is_objective(pair[0]) {
                self.doc.c[j] += v;
            } else {
                let i = self.row(pair[0], line)?;
                self.doc.entries.push((i, j, v));
            }
        }
        Ok(())
    }

    /// Shared by RHS and RANGES: an optional set name followed by pairs.
    fn pairs<'a>(&self, f: &'a [&'a str], line: usize, section: &str) -> Result<&'a [&'a str]> {
        match f.len() {
            2 | 4 => Ok(f),
            3 | 5 => Ok(&f[1..]),
            n => Err(field_count_error(line, section, n)),
        }
    }

    fn rhs_line(&mut self, f: &[&str], line: usize) -> Result<()> {
        for pair in self.pairs(f, line, "RHS")?.chunks(2) {
            let v = clamp_infinite(number(pair[1], line, true)?);
            if self.is_objective(pair[0]) {
                if v.is_infinite() {
                    return Err(Error::parse(line, "objective constant must be finite"));
                }
                self.doc.objective_constant = -v;
            } else {
                let i = self.row(pair[0], line)?;
                self.doc.rhs[i] = v;
            }
        }
        Ok(())
    }

    fn ranges_line(&mut self, f: &[&str], line: usize) -> Result<()> {
        for pair in self.pairs(f, line, "RANGES")?.chunks(2) {
            let v = number(pair[1], line, false)?;
            if self.is_objective(pair[0]) {
                return Err(Error::parse(line, "RANGES entry on the objective row"));
            }
            let i = self.row(pair[0], line)?;
            self.doc.ranges[i] = Some(v);
        }
        Ok(())
    }

    fn bounds_line(&mut self, f: &[&str], line: usize) -> Result<()> {
        if f.is_empty() {
            return Err(field_count_error(line, "BOUNDS", 0));
        }
        let kind = f[0].to_ascii_uppercase();
        let needs_value = matches!(kind.as_str(), "UP" | "LO" | "FX" | "LI" | "UI");
        let no_value = matches!(kind.as_str(), "FR" | "MI" | "PL" | "BV");
        if !needs_value && !no_value {
            return Err(Error::parse(line, format!("unknown bound type `{}`", f[0])));
        }
        let base = if needs_value { 3 } else { 2 };
        let rest = match f.len() {
            n if n == base => &f[1..],
            n if n == base + 1 => &f[2..],
            n => return Err(field_count_error(line, "BOUNDS", n)),
        };
        let j = self.col(rest[0], line)?;
        let value = if needs_value {
            clamp_infinite(number(rest[1], line, true)?)
        } else {
            0.0
        };
        let (lo, up) = (&mut self.doc.lower[j], &mut self.doc.upper[j]);
        match kind.as_str() {
            "UP" | "UI" => {
                *up = value;
                // MPS convention: a negative upper bound on a column without
                // an explicit lower bound makes the column unbounded below
                if value < 0.0 && !self.lower_set[j] {
                    *lo = f64::NEG_INFINITY;
                }
            }
            "LO" | "LI" => {
                *lo = value;
                self.lower_set[j] = true;
            }
            "FX" => {
                *lo = value;
                *up = value;
                self.lower_set[j] = true;
            }
            "FR" => {
                *lo = f64::NEG_INFINITY;
                *up = f64::INFINITY;
                self.lower_set[j] = true;
            }
            "MI" => {
                *lo = f64::NEG_INFINITY;
                self.lower_set[j] = true;
            }
            "PL" => *up = f64::INFINITY,
            _ => {
                *lo = 0.0;
                *up = 1.0;
                self.lower_set[j] = true;
            }
        }
        Ok(())
    }

    fn quad_line(&mut self, f: &[&str], line: usize) -> Result<()> {
        if f.len() != 3 {
            return Err(field_count_error(line, "quadratic", f.len()));
        }
        let i = self.col(f[0], line)?;
        let j = self.col(f[1], line)?;
        let v = number(f[2], line, false)?;
        self.doc.quad.push((i, j, v));
        if self.qmatrix {
            self.qmatrix_lines.entry((i, j)).or_insert(line);
        } else if i != j {
            self.doc.quad.push((j, i, v));
        }
        Ok(())
    }

    fn check_qmatrix_symmetry(&self) -> Result<()> {
        let mut sums: HashMap<(usize, usize), f64> = HashMap::new();
        for &(i, j, v) in &self.doc.quad {
            *sums.entry((i, j)).or_insert(0.0) += v;
        }
        let mut first_bad: Option<usize> = None;
        for (&(i, j), &v) in &sums {
            let w = sums.get(&(j, i)).copied().unwrap_or(0.0);
            if (v - w).abs() > 1e-12 * (1.0 + v.abs().max(w.abs())) {
                let line = self.qmatrix_lines[&(i, j)];
                first_bad = Some(first_bad.map_or(line, |b| b.min(line)));
            }
        }
        match first_bad {
            Some(line) => Err(Error::parse(line, "QMATRIX is not symmetric")),
            None => Ok(()),
        }
    }
}

/// Magnitudes at or above this are read as infinite bounds.
const MPS_INFINITY: f64 = 1e30;

fn clamp_infinite(v: f64) -> f64 {
    if v >= MPS_INFINITY {
        f64::INFINITY
    } else if v <= -MPS_INFINITY {
        f64::NEG_INFINITY
    } else {
        v
    }
}

pub fn parse_qps(text: &str) -> Result<QpsDocument> {
    let mut p = Parser::new();
    let mut section: Option<Section> = None;
    let mut last_line = 0;
    let mut ended = false;
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        last_line = line;
        if raw.trim().is_empty() || raw.starts_with('*') {
            continue;
        }
        let fields: Vec<&str> = raw.split_whitespace().collect();
        let indented = raw.starts_with(|c: char| c.is_whitespace());
        if !indented {
            let head = fields[0].to_ascii_uppercase();
            let sec = Section::parse(&head)
                .ok_or_else(|| Error::parse(line, format!("unknown section `{}`", fields[0])))?;
            if ended {
                return Err(Error::parse(line, "content after ENDATA"));
            }
            if let Some(prev) = section {
                if sec <= prev || (sec == Section::QMatrix && prev == Section::QuadObj) {
                    return Err(Error::parse(line, format!("section `{head}` out of order")));
                }
            }
            if section.is_some_and(|s| s <= Section::Columns) && sec > Section::Columns {
                let n = p.doc.columns.len();
                p.doc.lower = vec![0.0; n];
                p.doc.upper = vec![f64::INFINITY; n];
                p.lower_set = vec![false; n];
            }
            match sec {
                Section::Name => {
                    p.doc.name = fields.get(1).map(|s| s.to_string()).unwrap_or_default()
                }
                Section::ObjSense => {
                    if let Some(tok) = fields.get(1) {
                        p.doc.maximize = parse_sense(tok, line)?;
                    }
                }
                Section::QMatrix => p.qmatrix = true,
                Section::End => ended = true,
                _ => {
                    if fields.len() > 1 {
                        return Err(Error::parse(
                            line,
                            format!("unexpected text after `{head}`"),
                        ));
                    }
                }
            }
            section = Some(sec);
            continue;
        }
        if ended {
            return Err(Error::parse(line, "content after ENDATA"));
        }
        match section {
            None | Some(Section::Name) | Some(Section::End) => {
                return Err(Error::parse(line, "data line outside of a section"));
            }
            Some(Section::ObjSense) => {
                if fields.len() != 1 {
                    return Err(field_count_error(line, "OBJSENSE", fields.len()));
                }
                p.doc.maximize = parse_sense(fields[0], line)?;
            }
            Some(Section::Rows) => p.rows_line(&fields, line)?,
            Some(Section::Columns) => p.columns_line(&fields, line)?,
            Some(Section::Rhs) => p.rhs_line(&fields, line)?,
            Some(Section::Ranges) => p.ranges_line(&fields, line)?,
            Some(Section::Bounds) => p.bounds_line(&fields, line)?,
            Some(Section::QuadObj) | Some(Section::QMatrix) => p.quad_line(&fields, line)?,
        }
    }
    if !ended {
        return Err(Error::parse(last_line.max(1), "missing ENDATA"));
    }
    if p.doc.objective_row.is_none() {
        return Err(Error::parse(last_line, "no objective (N) row declared"));
    }
    if p.qmatrix {
        p.check_qmatrix_symmetry()?;
    }
    Ok(p.doc)
}

fn parse_sense(tok: &str, line: usize) -> Result<bool> {
    match tok.to_ascii_uppercase().as_str() {
        "MIN" | "MINIMIZE" => Ok(false),
        "MAX" | "MAXIMIZE" => Ok(true),
        other => Err(Error::parse(
            line,
            format!("unknown objective sense `{other}`"),
        )),
    }
}

impl QpsDocument {
    /// Maps rows to `K`: `E` gives `l = u = rhs`, `L` gives `(-inf, rhs]`,
    /// `G` gives `[rhs, inf)`, and `RANGES` widen rows per the MPS rules.
    pub fn into_problem(self) -> Result<CcqpProblem> {
        let n = self.columns.len();
        let m = self.rows.len();
        let mut lower = Vec::with_capacity(m);
        let mut upper = Vec::with_capacity(m);
        for (i, (name, kind)) in self.rows.iter().enumerate() {
            let b = self.rhs[i];
            let (l, u) = match (kind, self.ranges[i]) {
                ('E', None) => (b, b),
                ('E', Some(r)) if r >= 0.0 => (b, b + r),
                ('E', Some(r)) => (b + r, b),
                ('L', None) => (f64::NEG_INFINITY, b),
                ('L', Some(r)) => (b - r.abs(), b),
                (_, None) => (b, f64::INFINITY),
                (_, Some(r)) => (b, b + r.abs()),
            };
            if l.is_nan() || u.is_nan() || l > u || l == f64::INFINITY || u == f64::NEG_INFINITY {
                return Err(Error::InvalidProblem(format!(
                    "row `{name}` has empty range [{l}, {u}]"
                )));
            }
            lower.push(l);
            upper.push(u);
        }
        let sign = if self.maximize { -1.0 } else { 1.0 };
        let a = CsrMatrix::from_triplets(m, n, &self.entries)?;
        let quad: Vec<_> = self
            .quad
            .iter()
            .map(|&(i, j, v)| (i, j, sign * v))
            .collect();
        let q = CsrMatrix::from_triplets(n, n, &quad)?;
        if !q.triplets().all(|(_, _, v)| v.is_finite())
            || !a.triplets().all(|(_, _, v)| v.is_finite())
        {
            return Err(Error::InvalidProblem(
                "coefficients overflow after summing duplicates".into(),
            ));
        }
        let c: Vec<f64> = self.c.iter().map(|v| sign * v).collect();
        let phi = CompositeTerm::BoxIndicator(Bounds::new(self.lower, self.upper)?);
        Ok(CcqpProblem::new(
            PsdOperator::Sparse(q),
            a,
            c,
            Bounds::new(lower, upper)?,
            phi,
        )?
        .with_name(self.name)
        .with_offset(sign * self.objective_constant))
    }
}

pub fn read_qps(text: &str) -> Result<CcqpProblem> {
    parse_qps(text)?.into_problem()
}

pub fn read_qps_file(path: impl AsRef<std::path::Path>) -> Result<CcqpProblem> {
    read_qps(&std::fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "NAME tiny\nROWS\n N obj\nCOLUMNS\n x obj 1\nRHS\nENDATA\n";

    fn quad(c: f64) -> String {
        format!("NAME q\nROWS\n N obj\nCOLUMNS\n x obj {c}\nRHS\nBOUNDS\nQUADOBJ\n x x 2\nENDATA\n")
    }

    fn line_of(e: Error) -> usize {
        match e {
            Error::Parse { line, .. } => line,
            other => panic!("expected a parse error, got {other}"),
        }
    }

    #[test]
    fn minimal_file_defaults_to_nonnegative() {
        let p = read_qps(MINIMAL).unwrap();
        assert_eq!((p.n(), p.m()), (1, 0));
        assert_eq!(p.c, vec![1.0]);
        assert_eq!(p.phi, CompositeTerm::BoxIndicator(Bounds::nonnegative(1)));
        assert_eq!(p.name, "tiny");
    }

    #[test]
    fn quadobj_diagonal_is_not_doubled() {
        let p = read_qps(&quad(-1.0)).unwrap();
        let PsdOperator::Sparse(q) = &p.q else {
            panic!()
        };
        assert_eq!(q.to_dense(), vec![2.0]);
    }

    #[test]
    fn quadobj_off_diagonal_is_mirrored() {
        let text = "NAME q\nROWS\n N obj\nCOLUMNS\n x obj 1\n y obj 1\nRHS\nQUADOBJ\n x x 2\n y x 1\n y y 2\nENDATA\n";
        let PsdOperator::Sparse(q) = read_qps(text).unwrap().q else {
            panic!()
        };
        assert_eq!(q.to_dense(), vec![2.0, 1.0, 1.0, 2.0]);
    }

    #[test]
    fn qmatrix_must_be_symmetric() {
        let text = "NAME q\nROWS\n N obj\nCOLUMNS\n x obj 1\n y obj 1\nRHS\nQMATRIX\n x x 2\n y x 1\n y y 2\nENDATA\n";
        assert_eq!(line_of(read_qps(text).unwrap_err()), 10);
        let ok = "NAME q\nROWS\n N obj\nCOLUMNS\n x obj 1\n y obj 1\nRHS\nQMATRIX\n x x 2\n y x 1\n x y 1\n y y 2\nENDATA\n";
        assert!(read_qps(ok).is_ok());
    }

    #[test]
    fn ranges_follow_mps_rules() {
        let mk = |kind: &str, rhs: f64, range: f64| {
            let text = format!(
                "NAME r\nROWS\n N obj\n {kind} c1\nCOLUMNS\n x obj 1 c1 1\nRHS\n rhs c1 {rhs}\nRANGES\n rng c1 {range}\nENDATA\n"
            );
            let p = read_qps(&text).unwrap();
            (p.rows.lower[0], p.rows.upper[0])
        };
        assert_eq!(mk("L", 4.0, 1.0), (3.0, 4.0));
        assert_eq!(mk("G", 4.0, -1.0), (4.0, 5.0));
        assert_eq!(mk("E", 4.0, 1.0), (4.0, 5.0));
        assert_eq!(mk("E", 4.0, -1.0), (3.0, 4.0));
    }

    #[test]
    fn row_types_map_to_intervals() {
        let text = "NAME r\nROWS\n N obj\n E e\n L l\n G g\nCOLUMNS\n x e 1 l 1\n x g 1\nRHS\n e 1 l 2\n g 3\nENDATA\n";
        let p = read_qps(text).unwrap();
        assert_eq!(p.rows.lower, vec![1.0, f64::NEG_INFINITY, 3.0]);
        assert_eq!(p.rows.upper, vec![1.0, 2.0, f64::INFINITY]);
    }

    #[test]
    fn bounds_types() {
        let text = "NAME b\nROWS\n N obj\nCOLUMNS\n a obj 1\n b obj 1\n c obj 1\n d obj 1\n e obj 1\nRHS\nBOUNDS\n UP bnd a 4\n FR bnd b\n FX bnd c 2\n MI bnd d\n UP bnd d 1\n UP bnd e -1\nENDATA\n";
        let p = read_qps(text).unwrap();
        let CompositeTerm::BoxIndicator(b) = p.phi else {
            panic!()
        };
        assert_eq!(
            b.lower,
            vec![
                0.0,
                f64::NEG_INFINITY,
                2.0,
                f64::NEG_INFINITY,
                f64::NEG_INFINITY
            ]
        );
        assert_eq!(b.upper, vec![4.0, f64::INFINITY, 2.0, 1.0, -1.0]);
    }

    #[test]
    fn objective_constant_and_maximization() {
        let text =
            "NAME o\nOBJSENSE\n MAX\nROWS\n N obj\nCOLUMNS\n x obj 2\nRHS\n rhs obj 3\nENDATA\n";
        let p = read_qps(text).unwrap();
        assert_eq!(p.c, vec![-2.0]);
        assert_eq!(p.offset, 3.0);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let unknown = "NAME x\nROWZ\nENDATA\n";
        assert_eq!(line_of(read_qps(unknown).unwrap_err()), 2);
        let undeclared = "NAME x\nROWS\n N obj\nCOLUMNS\n x obj 1 c9 1\nENDATA\n";
        assert_eq!(line_of(read_qps(undeclared).unwrap_err()), 5);
        let bad_col = "NAME x\nROWS\n N obj\nCOLUMNS\n x obj 1\nQUADOBJ\n x y 1\nENDATA\n";
        assert_eq!(line_of(read_qps(bad_col).unwrap_err()), 7);
        let no_end = "NAME x\nROWS\n N obj\n";
        assert!(matches!(read_qps(no_end), Err(Error::Parse { .. })));
    }

    #[test]
    fn fixed_format_is_rejected() {
        // a fixed-column name with an embedded blank splits into extra fields
        let text = "NAME x\nROWS\n N  obj\n L  row one\nENDATA\n";
        let err = read_qps(text).unwrap_err();
        assert!(err.to_string().contains("free-format"));
    }
}
