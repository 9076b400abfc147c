pub mod batch;
pub mod crosscheck;
pub mod evolve;
pub mod gen;
pub mod solve;

pub use batch::{cmd_batch, run_batch, BatchArgs};
pub use crosscheck::{cmd_crosscheck, CrosscheckArgs};
pub use evolve::{cmd_evolve, run_evolution, EvolveArgs};
pub use gen::{cmd_gen, GenArgs};
pub use solve::{cmd_solve, SolveArgs};
