//! Problem ingestion and result serialization.

mod mtx;
mod qps;
mod results;

pub use mtx::{
    materialize_q, parse_matrix_bundle, read_matrix_bundle, read_mtx, read_vec,
    write_matrix_bundle, write_mtx,
};
pub use qps::{parse_qps, read_qps, read_qps_file, QpsDocument};
pub use results::{
    read_result, read_trace, write_results, write_trace, ResultDocument, SCHEMA_VERSION,
    TRACE_COLUMNS,
};
