use anyhow::{bail, Result};

use super::Tally;
use crate::args::{BatchArgs, GlobalArgs};
use crate::config::{JobCommand, JobFile};

/// Runs each job in file order. A job that cannot start counts as one
/// failed unit; later jobs still run.
pub fn run(args: &BatchArgs, global: &GlobalArgs) -> Result<Tally> {
    if global.config.is_some() {
        bail!("batch takes its settings from the jobs file; --config is not allowed");
    }
    let jobs = JobFile::load(&args.jobs)?;
    if jobs.job.is_empty() {
        bail!("{} lists no [[job]] tables", args.jobs.display());
    }
    let mut total = Tally::default();
    let n = jobs.job.len();
    for (i, job) in jobs.job.iter().enumerate() {
        let file = &job.config;
        let result = match job.command {
            JobCommand::Defend => super::defend(&Default::default(), global, file),
            JobCommand::Simulate => super::simulate(&Default::default(), global, file),
            JobCommand::Evaluate => super::evaluate(&Default::default(), global, file),
            JobCommand::Inspect => super::inspect(&Default::default(), global, file),
        };
        match result {
            Ok(t) => {
                println!(
                    "job {}/{n} ({:?}): {} ok, {} failed",
                    i + 1,
                    job.command,
                    t.ok,
                    t.failed
                );
                total.add(t);
            }
            Err(e) => {
                eprintln!("error: job {}/{n} ({:?}): {e:#}", i + 1, job.command);
                total.failed += 1;
            }
        }
    }
    Ok(total)
}
