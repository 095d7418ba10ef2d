use std::io::Write;
use std::sync::Arc;

use rayon::prelude::*;
use serde_json::json;

use crate::config::{Format, KGrid, Method, RunConfig};
use crate::error::{CliError, CliResult};
use crate::report::{compute_row, convergence_table, Row, CSV_HEADER};

pub const THREADS_ENV: &str = "ADIA_THREADS";

fn thread_pool() -> CliResult<rayon::ThreadPool> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let n: usize = v
            .trim()
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| CliError::config(format!("{THREADS_ENV} must be a positive integer, got '{v}'")))?;
        b = b.num_threads(n);
    }
    b.build().map_err(|e| CliError::config(format!("cannot start worker pool: {e}")))
}

fn write_csv_row(out: &mut dyn Write, row: &Row, tol_det: f64) -> CliResult<()> {
    if let Some(flag) = row.det_flag(tol_det) {
        writeln!(out, "{flag}")?;
    }
    writeln!(out, "{}", row.csv())?;
    Ok(())
}

pub fn compute(cfg: &RunConfig, out: &mut dyn Write) -> CliResult<()> {
    let KGrid::Single(k) = cfg.k else {
        return Err(CliError::config("compute takes a single --k; use sweep for ranges"));
    };
    let row = compute_row(cfg, Arc::new(cfg.build_potential()?), k)?;
    match cfg.format {
        Format::Csv => {
            writeln!(out, "{CSV_HEADER}")?;
            write_csv_row(out, &row, cfg.tol_det)?;
            for (l, norm) in row.term_norms.iter().enumerate() {
                writeln!(out, "# term_norm order={} value={norm:.16e}", l + 1)?;
            }
        }
        Format::Json => {
            let mut v = row.json(cfg.tol_det);
            v["potential"] = json!(cfg.potential.name);
            writeln!(out, "{}", serde_json::to_string_pretty(&v).expect("serialisable"))?;
        }
    }
    Ok(())
}

/// Rows in ascending `k`; the first failure ends the list.
pub fn sweep_rows(cfg: &RunConfig) -> CliResult<(Vec<Row>, Option<CliError>)> {
    let potential = Arc::new(cfg.build_potential()?);
    let ks = cfg.k.values();
    let pool = thread_pool()?;
    let results: Vec<CliResult<Row>> =
        pool.install(|| ks.par_iter().map(|&k| compute_row(cfg, Arc::clone(&potential), k)).collect());
    let mut rows = Vec::with_capacity(results.len());
    for r in results {
        match r {
            Ok(row) => rows.push(row),
            Err(e) => return Ok((rows, Some(e))),
        }
    }
    Ok((rows, None))
}

pub fn sweep(cfg: &RunConfig, out: &mut dyn Write) -> CliResult<()> {
    let (rows, failure) = sweep_rows(cfg)?;
    match cfg.format {
        Format::Csv => {
            writeln!(out, "{CSV_HEADER}")?;
            for row in &rows {
                write_csv_row(out, row, cfg.tol_det)?;
            }
            if let Some(e) = &failure {
                writeln!(out, "# ABORTED: {e}")?;
            }
        }
        Format::Json => {
            let mut v = json!({
                "potential": cfg.potential.name,
                "rows": rows.iter().map(|r| r.json(cfg.tol_det)).collect::<Vec<_>>(),
            });
            if let Some(e) = &failure {
                v["aborted"] = json!(e.to_string());
            }
            writeln!(out, "{}", serde_json::to_string_pretty(&v).expect("serialisable"))?;
        }
    }
    out.flush()?;
    match failure {
        Some(e) => Err(e),
        None => Ok(()),
    }
}

pub fn converge(cfg: &RunConfig, out: &mut dyn Write) -> CliResult<()> {
    let KGrid::Single(k) = cfg.k else {
        return Err(CliError::config("converge takes a single --k"));
    };
    let max_order = match cfg.method {
        Method::OrderN(n) => n,
        Method::Exact => cfg.series.max_order().unwrap_or(4),
        Method::Semiclassical => 0,
    };
    let table = convergence_table(cfg, Arc::new(cfg.build_potential()?), k, max_order)?;
    match cfg.format {
        Format::Csv => write!(out, "{}", table.csv())?,
        Format::Json => writeln!(out, "{}", serde_json::to_string_pretty(&table.json()).expect("serialisable"))?,
    }
    Ok(())
}
