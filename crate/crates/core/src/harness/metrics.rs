//! Metrics CSV files and the long-format join used for plotting.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const METRICS_HEADER: &str = "episode,success_rate,avg_return,bias_start,bias_ci,wallclock_ms";
pub const COMPARE_HEADER: &str = "agent,env,seed,config_hash,episode,metric,value";
const METRIC_NAMES: [&str; 5] = ["success_rate", "avg_return", "bias_start", "bias_ci", "wallclock_ms"];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    /// Completed training episodes.
    pub episode: u64,
    pub success_rate: f64,
    pub avg_return: f64,
    /// Mean predicted start value minus mean discounted return.
    pub bias_start: f64,
    pub bias_ci: f64,
    pub wallclock_ms: f64,
}

impl MetricsRow {
    fn values(&self) -> [f64; 5] {
        [self.success_rate, self.avg_return, self.bias_start, self.bias_ci, self.wallclock_ms]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    pub agent: String,
    pub env: String,
    pub seed: u64,
    pub config_hash: String,
    pub rows: Vec<MetricsRow>,
}

impl RunMetrics {
    pub fn last(&self) -> Option<&MetricsRow> {
        self.rows.last()
    }

    pub fn to_csv(&self) -> String {
        let mut out = format!(
            "# agent={},env={},seed={},config_hash={}\n{METRICS_HEADER}\n",
            self.agent, self.env, self.seed, self.config_hash
        );
        for r in &self.rows {
            write!(out, "{}", r.episode).unwrap();
            for v in r.values() {
                write!(out, ",{}", format_sig6(v)).unwrap();
            }
            out.push('\n');
        }
        out
    }

    pub fn from_csv(text: &str, path: &Path) -> Result<Self> {
        let bad = |line: usize, message: String| Error::Metrics {
            path: path.to_path_buf(),
            message: format!("line {line}: {message}"),
        };
        let mut lines = text.lines();
        let meta = lines
            .next()
            .and_then(|l| l.strip_prefix("# "))
            .ok_or_else(|| bad(1, "missing metadata comment".into()))?;
        let mut fields = [None, None, None, None];
        for part in meta.split(',') {
            let (key, value) = part
                .split_once('=')
                .ok_or_else(|| bad(1, format!("malformed metadata entry {part:?}")))?;
            let slot = match key {
                "agent" => 0,
                "env" => 1,
                "seed" => 2,
                "config_hash" => 3,
                _ => return Err(bad(1, format!("unknown metadata key {key:?}"))),
            };
            fields[slot] = Some(value.to_string());
        }
        let [Some(agent), Some(env), Some(seed), Some(config_hash)] = fields else {
            return Err(bad(1, "incomplete metadata".into()));
        };
        let seed = seed.parse().map_err(|_| bad(1, format!("seed {seed:?}")))?;
        if lines.next() != Some(METRICS_HEADER) {
            return Err(bad(2, "unexpected header".into()));
        }
        let mut rows = Vec::new();
        for (i, line) in lines.enumerate() {
            let n = i + 3;
            let cols: Vec<&str> = line.split(',').collect();
            if cols.len() != 6 {
                return Err(bad(n, format!("expected 6 columns, found {}", cols.len())));
            }
            let num = |j: usize| -> Result<f64> {
                cols[j].parse().map_err(|_| bad(n, format!("not a number: {:?}", cols[j])))
            };
            let episode = cols[0].parse().map_err(|_| bad(n, format!("episode {:?}", cols[0])))?;
            if rows.last().is_some_and(|r: &MetricsRow| r.episode >= episode) {
                return Err(bad(n, "episodes must increase".into()));
            }
            rows.push(MetricsRow {
                episode,
                success_rate: num(1)?,
                avg_return: num(2)?,
                bias_start: num(3)?,
                bias_ci: num(4)?,
                wallclock_ms: num(5)?,
            });
        }
        Ok(Self {
            agent,
            env,
            seed,
            config_hash,
            rows,
        })
    }
}

/// Writes the CSV, creating parent directories.
pub fn write_metrics(metrics: &RunMetrics, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    std::fs::write(path, metrics.to_csv()).map_err(|e| Error::io(path, e))
}

pub fn read_metrics(path: impl AsRef<Path>) -> Result<RunMetrics> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    RunMetrics::from_csv(&text, path)
}

/// Joins metrics files into one long-format table, one line per
/// `(run, episode, metric)`.
pub fn compare(paths: &[PathBuf]) -> Result<String> {
    let mut out = format!("{COMPARE_HEADER}\n");
    for path in paths {
        let m = read_metrics(path)?;
        for r in &m.rows {
            for (name, v) in METRIC_NAMES.iter().zip(r.values()) {
                writeln!(
                    out,
                    "{},{},{},{},{},{name},{}",
                    m.agent,
                    m.env,
                    m.seed,
                    m.config_hash,
                    r.episode,
                    format_sig6(v)
                )
                .unwrap();
            }
        }
    }
    Ok(out)
}

/// Formats with six significant digits, like C's `%g`.
pub fn format_sig6(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let sci = format!("{x:.5e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..6).contains(&exp) {
        let decimals = (5 - exp) as usize;
        trim_zeros(format!("{x:.decimals$}"))
    } else {
        format!("{}e{exp}", trim_zeros(mantissa.to_string()))
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}
