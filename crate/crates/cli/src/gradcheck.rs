use std::path::PathBuf;

use clap::ValueEnum;
use edgepool::gradcheck::{self, CaseSet, GradcheckOptions};
use serde::Serialize;

use crate::error::{CliError, CliResult};
use crate::manifest::{write_json, RunManifest};

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Cases {
    All,
    Edgepool,
    Unpool,
    Layers,
    Models,
}

impl From<Cases> for CaseSet {
    fn from(c: Cases) -> Self {
        match c {
            Cases::All => CaseSet::All,
            Cases::Edgepool => CaseSet::Edgepool,
            Cases::Unpool => CaseSet::Unpool,
            Cases::Layers => CaseSet::Layers,
            Cases::Models => CaseSet::Models,
        }
    }
}

#[derive(clap::Args, Debug, Serialize)]
pub struct Args {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value = "all")]
    pub cases: Cases,
    /// Finite-difference step.
    #[arg(long, default_value_t = gradcheck::DEFAULT_EPS)]
    pub eps: f64,
    /// Debug: perturb the analytic gradients so every check must fail.
    #[arg(long, hide = true)]
    pub corrupt_gradients: bool,
    #[arg(long, default_value = "runs/gradcheck")]
    pub out: PathBuf,
}

pub fn run(args: &Args) -> CliResult<()> {
    let mut manifest = RunManifest::start("gradcheck", args.seed, serde_json::to_value(args)?);
    let opts = GradcheckOptions {
        seed: args.seed,
        cases: args.cases.into(),
        eps: args.eps,
        corrupt: args.corrupt_gradients,
    };
    let reports = gradcheck::run(&opts)?;
    for r in &reports {
        println!("{r}");
    }
    let path = args.out.join("gradcheck.json");
    write_json(&path, &reports)?;
    manifest.output(&path);
    manifest.finish(&args.out)?;
    let failed: Vec<&str> = reports.iter().filter(|r| !r.passed).map(|r| r.name.as_str()).collect();
    if gradcheck::all_passed(&reports) {
        println!("all {} cases passed", reports.len());
        Ok(())
    } else {
        Err(CliError::Validation(format!("gradient check failed: {}", failed.join(", "))))
    }
}
