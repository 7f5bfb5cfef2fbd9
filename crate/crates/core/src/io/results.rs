//! Result documents (JSON) and iteration traces (CSV).

use std::fs::File;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::engine::{SolveOutput, Status, TraceRecord};
use crate::error::{Error, Result};

pub const SCHEMA_VERSION: u32 = 1;

/// JSON has no infinities; non-finite floats are written as the strings
/// `"inf"`, `"-inf"` and `"nan"`.
mod float {
    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else if v.is_nan() {
            s.serialize_str("nan")
        } else if *v > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_str("-inf")
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Str(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(v),
            Repr::Str(s) => match s.as_str() {
                "inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                "nan" => Ok(f64::NAN),
                other => Err(de::Error::custom(format!("invalid float `{other}`"))),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultDocument {
    pub schema_version: u32,
    pub name: String,
    pub variant: String,
    pub status: Status,
    pub iterations: usize,
    pub restarts: usize,
    #[serde(with = "float")]
    pub primal_obj: f64,
    #[serde(with = "float")]
    pub dual_obj: f64,
    #[serde(with = "float")]
    pub eta_gap: f64,
    #[serde(with = "float")]
    pub eta_p: f64,
    #[serde(with = "float")]
    pub eta_d: f64,
    #[serde(with = "float")]
    pub sigma: f64,
    #[serde(with = "float")]
    pub lambda_a: f64,
    #[serde(with = "float")]
    pub lambda_q: f64,
    #[serde(with = "float")]
    pub setup_seconds: f64,
    #[serde(with = "float")]
    pub solve_seconds: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x: Option<Vec<f64>>,
}

impl ResultDocument {
    pub fn from_output(name: impl Into<String>, out: &SolveOutput, include_x: bool) -> Self {
        let r = &out.report;
        ResultDocument {
            schema_version: SCHEMA_VERSION,
            name: name.into(),
            variant: out.variant.as_str().to_string(),
            status: r.status,
            iterations: out.iterations,
            restarts: out.restarts,
            primal_obj: r.primal_obj,
            dual_obj: r.dual_obj,
            eta_gap: r.eta_gap,
            eta_p: r.eta_p,
            eta_d: r.eta_d,
            sigma: out.sigma,
            lambda_a: out.estimates.lambda_a,
            lambda_q: out.estimates.lambda_q,
            setup_seconds: out.setup_seconds,
            solve_seconds: out.solve_seconds,
            x: include_x.then(|| out.solution.x.clone()),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: ResultDocument = serde_json::from_str(text)?;
        if doc.schema_version != SCHEMA_VERSION {
            return Err(Error::InvalidProblem(format!(
                "unsupported result schema version {}",
                doc.schema_version
            )));
        }
        Ok(doc)
    }
}

pub const TRACE_COLUMNS: [&str; 9] = [
    "k", "r", "t", "sigma", "R_tilde", "eta_gap", "eta_p", "eta_d", "seconds",
];

pub fn write_trace<W: std::io::Write>(trace: &[TraceRecord], w: W) -> Result<()> {
    let mut wr = csv::WriterBuilder::new().has_headers(false).from_writer(w);
    wr.write_record(TRACE_COLUMNS)?;
    for rec in trace {
        wr.serialize(rec)?;
    }
    wr.flush()?;
    Ok(())
}

pub fn read_trace<R: std::io::Read>(r: R) -> Result<Vec<TraceRecord>> {
    let mut rd = csv::Reader::from_reader(r);
    let header: Vec<String> = rd.headers()?.iter().map(str::to_string).collect();
    if header != TRACE_COLUMNS {
        return Err(Error::parse(
            1,
            format!("unexpected trace header {header:?}"),
        ));
    }
    rd.deserialize().map(|r| r.map_err(Error::from)).collect()
}

/// Writes `result.json` and `trace.csv` into `dir`, creating it if needed.
pub fn write_results(
    doc: &ResultDocument,
    trace: &[TraceRecord],
    dir: impl AsRef<Path>,
) -> Result<()> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join("result.json"), doc.to_json()?)?;
    write_trace(trace, File::create(dir.join("trace.csv"))?)
}

pub fn read_result(path: impl AsRef<Path>) -> Result<ResultDocument> {
    ResultDocument::from_json(&std::fs::read_to_string(path)?)
}
