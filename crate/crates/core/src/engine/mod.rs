//! Query compilation and execution: logical plans, the optimizer, the
//! page-parallel executor, and the naive reference evaluator.

mod eval;
pub mod exec;
pub mod explain;
pub mod logical;
pub mod naive;
pub mod optimize;
pub mod result;

pub use exec::{execute, ExecOptions};
pub use explain::explain;
pub use logical::{lower, LogicalPlan, TypedQuery};
pub use naive::execute_naive;
pub use optimize::{optimize, IndexSet, PhysicalPlan};
pub use result::ResultSet;

#[cfg(test)]
mod tests;
