//! Exact dense retrieval and the evaluation metrics built on it.

mod eval;
mod index;
mod metrics;

pub use eval::{evaluate_queries, read_queries, EvalReport, Query};
pub use index::{build_index, build_text_index, export_embeddings, import_embeddings, search, DenseIndex};
pub use metrics::{alignment, average_precision_at_r, map_at_r, mrr, uniformity};
