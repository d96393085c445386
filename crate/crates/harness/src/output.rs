//! CSV and JSON writers. Every file starts with a version tag; columns are
//! fixed per version.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::Format;
use crate::error::{HarnessError, Result};
use crate::experiment::{Comparison, ExperimentResult};

pub const TRACE_VERSION: &str = "# clbo-trace v1";
pub const TRACE_COLUMNS: [&str; 9] = [
    "run",
    "iteration",
    "n_total",
    "f_min",
    "regret",
    "provenance",
    "z",
    "regime",
    "pei_invoked",
];
pub const SUMMARY_VERSION: &str = "# clbo-summary v1";
pub const SUMMARY_COLUMNS: [&str; 7] = ["experiment", "problem", "optimizer", "n_total", "q1", "median", "q3"];
pub const COMPARE_VERSION: &str = "# clbo-compare v1";
pub const COMPARE_COLUMNS: [&str; 5] = ["problem", "optimizer", "median_final_regret", "rank", "runs"];
pub const AMBIGUITY_VERSION: &str = "# clbo-ambiguity v1";
pub const AMBIGUITY_COLUMNS: [&str; 5] = ["run", "iteration", "ensemble", "individual", "diversity"];
pub const JSON_SCHEMA: &str = "clbo-report/v1";

fn opt(v: Option<f64>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

fn csv_bytes(version: &str, columns: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    writeln!(buf, "{version}").expect("write to Vec");
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        let err = |e: csv::Error| HarnessError::Runtime(format!("csv: {e}"));
        w.write_record(columns).map_err(err)?;
        for r in rows {
            w.write_record(&r).map_err(err)?;
        }
        w.flush().map_err(|e| HarnessError::Runtime(format!("csv: {e}")))?;
    }
    Ok(buf)
}

/// One row per evaluation, initial design included (iteration 0). `n_total`
/// counts calls so far; `f_min` and `regret` are the incumbent after that call.
pub fn trace_csv(exp: &ExperimentResult) -> Result<Vec<u8>> {
    let mut rows = Vec::new();
    for run in &exp.runs {
        let r = &run.result;
        let opt_value = r.known_optimum;
        let mut best = f64::INFINITY;
        let mut n = 0usize;
        let iters = std::iter::once((0usize, &r.initial)).chain(r.history.iter().map(|h| (h.iteration, &h.queries)));
        for (iteration, queries) in iters {
            for q in queries {
                n += 1;
                best = best.min(q.value);
                rows.push(vec![
                    run.run.to_string(),
                    iteration.to_string(),
                    n.to_string(),
                    best.to_string(),
                    opt(opt_value.map(|o| best - o)),
                    q.provenance.to_string(),
                    opt(q.z),
                    q.regime.map(|g| g.label().to_string()).unwrap_or_default(),
                    q.pei_invoked.to_string(),
                ]);
            }
        }
    }
    csv_bytes(TRACE_VERSION, &TRACE_COLUMNS, rows)
}

pub fn summary_csv(experiments: &[ExperimentResult]) -> Result<Vec<u8>> {
    let rows = experiments.iter().flat_map(|e| {
        e.summary.by_call.iter().enumerate().map(move |(k, q)| {
            vec![
                e.name.clone(),
                e.problem.clone(),
                e.optimizer.clone(),
                (k + 1).to_string(),
                q.q1.to_string(),
                q.median.to_string(),
                q.q3.to_string(),
            ]
        })
    });
    csv_bytes(SUMMARY_VERSION, &SUMMARY_COLUMNS, rows)
}

pub fn ambiguity_csv(exp: &ExperimentResult) -> Result<Vec<u8>> {
    let rows = exp.runs.iter().flat_map(|r| {
        r.ambiguity.iter().map(move |a| {
            vec![
                r.run.to_string(),
                a.iteration.to_string(),
                a.ambiguity.ensemble.to_string(),
                a.ambiguity.individual.to_string(),
                a.ambiguity.diversity.to_string(),
            ]
        })
    });
    csv_bytes(AMBIGUITY_VERSION, &AMBIGUITY_COLUMNS, rows)
}

pub fn compare_csv(c: &Comparison) -> Result<Vec<u8>> {
    let mut rows = Vec::new();
    for (p, problem) in c.problems.iter().enumerate() {
        for (o, optimizer) in c.optimizers.iter().enumerate() {
            let runs = c.experiments[p * c.optimizers.len() + o].runs.len();
            rows.push(vec![
                problem.clone(),
                optimizer.clone(),
                c.median[p][o].to_string(),
                c.rank(p, o).to_string(),
                runs.to_string(),
            ]);
        }
    }
    csv_bytes(COMPARE_VERSION, &COMPARE_COLUMNS, rows)
}

/// Plain-text table for the terminal.
pub fn compare_table(c: &Comparison) -> String {
    let mut s = format!("{:<14}", "problem");
    for o in &c.optimizers {
        s += &format!(" {o:>18}");
    }
    s.push('\n');
    for (p, problem) in c.problems.iter().enumerate() {
        s += &format!("{problem:<14}");
        for o in 0..c.optimizers.len() {
            s += &format!(" {:>13.6} ({})", c.median[p][o], c.rank(p, o));
        }
        s.push('\n');
    }
    s
}

#[derive(Serialize)]
struct Report<'a, T: Serialize> {
    schema: &'static str,
    #[serde(flatten)]
    body: &'a T,
}

pub fn json_bytes<T: Serialize>(body: &T) -> Result<Vec<u8>> {
    let mut v = serde_json::to_vec_pretty(&Report {
        schema: JSON_SCHEMA,
        body,
    })
    .map_err(|e| HarnessError::Runtime(format!("json: {e}")))?;
    v.push(b'\n');
    Ok(v)
}

#[derive(Serialize)]
struct Experiments<'a> {
    experiments: &'a [ExperimentResult],
}

/// File-name-safe version of an experiment name.
pub fn file_stem(name: &str) -> String {
    name.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' || c == '.' { c } else { '_' })
        .collect()
}

fn write(path: PathBuf, bytes: &[u8]) -> Result<PathBuf> {
    fs::write(&path, bytes).map_err(|e| HarnessError::io(&path, e))?;
    Ok(path)
}

/// Writes experiment outputs under `dir` and returns the files written.
pub fn write_experiments(dir: &Path, experiments: &[ExperimentResult], format: Format) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    let mut files = Vec::new();
    match format {
        Format::Csv => {
            for e in experiments {
                let stem = file_stem(&e.name);
                files.push(write(dir.join(format!("{stem}.csv")), &trace_csv(e)?)?);
                if e.runs.iter().any(|r| !r.ambiguity.is_empty()) {
                    files.push(write(dir.join(format!("{stem}.ambiguity.csv")), &ambiguity_csv(e)?)?);
                }
            }
            files.push(write(dir.join("summary.csv"), &summary_csv(experiments)?)?);
        }
        Format::Json => {
            files.push(write(dir.join("report.json"), &json_bytes(&Experiments { experiments })?)?);
        }
    }
    Ok(files)
}

pub fn write_comparison(dir: &Path, c: &Comparison, format: Format) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    let path = match format {
        Format::Csv => write(dir.join("compare.csv"), &compare_csv(c)?)?,
        Format::Json => write(dir.join("compare.json"), &json_bytes(c)?)?,
    };
    Ok(vec![path])
}
