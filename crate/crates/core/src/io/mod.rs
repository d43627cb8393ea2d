//! Query text, CSV relations and result files.

pub mod dsl;
pub mod results;
pub mod table;

pub use dsl::{parse_query, print_query};
pub use results::{read_results, write_report, write_results};
pub use table::{load_relation, parse_value, read_relation, write_relation};
