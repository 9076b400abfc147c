use std::io::Write;
use std::path::PathBuf;

use clap::Args;
use hardcnf_core::{generate_random_kcnf, write_dimacs, RandomFormulaSpec};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Args)]
pub struct GenArgs {
    #[arg(short = 'n', long)]
    pub num_variables: u32,
    #[arg(short = 'm', long)]
    pub num_clauses: usize,
    #[arg(short = 'k', long, default_value_t = 3)]
    pub clause_width: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output file; standard output if omitted.
    #[arg(short = 'o', long)]
    pub output: Option<PathBuf>,
}

pub fn cmd_gen(args: &GenArgs, out: &mut dyn Write) -> Result<u8> {
    let formula = generate_random_kcnf(&RandomFormulaSpec {
        num_variables: args.num_variables,
        num_clauses: args.num_clauses,
        clause_width: args.clause_width,
        seed: args.seed,
    })?;
    let text = write_dimacs(&formula);
    match &args.output {
        Some(path) => std::fs::write(path, text).map_err(CliError::io(path))?,
        None => out
            .write_all(text.as_bytes())
            .map_err(CliError::io("<stdout>".as_ref()))?,
    }
    Ok(0)
}
