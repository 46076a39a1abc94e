//! CSV output of stored draws and sampler diagnostics.

use std::fs::File;
use std::path::Path;

use super::ChainOutput;
use crate::error::Result;
use crate::params::ParamGroup;

/// Writes `draws_<group>.csv` for every parameter group: an `iteration`
/// column followed by one column per element.
pub fn write_draws(dir: &Path, chain: &ChainOutput) -> Result<()> {
    let Some(first) = chain.draws.first() else {
        return Ok(());
    };
    for group in ParamGroup::ALL {
        let entries = first.group_entries(group);
        if entries.is_empty() {
            continue;
        }
        let mut w = csv::Writer::from_writer(File::create(dir.join(format!("draws_{}.csv", group.name())))?);
        let mut header = vec!["iteration".to_string()];
        header.extend(entries.iter().map(|e| e.label()));
        w.write_record(&header)?;
        for (it, d) in chain.iterations.iter().zip(&chain.draws) {
            let mut row = vec![it.to_string()];
            row.extend(d.group_entries(group).iter().map(|e| e.value.to_string()));
            w.write_record(&row)?;
        }
        w.flush()?;
    }
    Ok(())
}

pub fn write_acceptance(path: &Path, chain: &ChainOutput) -> Result<()> {
    let mut w = csv::Writer::from_writer(File::create(path)?);
    w.write_record(["block", "proposed", "accepted", "rate", "adapted_rate"])?;
    for a in &chain.acceptance {
        w.write_record([
            a.block.clone(),
            a.proposed.to_string(),
            a.accepted.to_string(),
            a.rate().to_string(),
            a.adapted_rate().to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_log_likelihood(path: &Path, chain: &ChainOutput) -> Result<()> {
    let mut w = csv::Writer::from_writer(File::create(path)?);
    w.write_record(["iteration", "log_likelihood"])?;
    for (i, v) in chain.trace.iter().enumerate() {
        w.write_record([(i + 1).to_string(), v.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Writes draws, `acceptance.csv` and `loglik.csv` into `dir`.
pub fn write_chain(dir: &Path, chain: &ChainOutput) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    write_draws(dir, chain)?;
    write_acceptance(&dir.join("acceptance.csv"), chain)?;
    write_log_likelihood(&dir.join("loglik.csv"), chain)
}
