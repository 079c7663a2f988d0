//! Experiment runner: flat `key = value` configs, per-row CSV, aggregate JSON.
//!
//! Every (n, replica) task draws its instance from
//! `derive_seed(base_seed, n, replica)`, so rows depend only on the config.
//! Tasks run on the rayon pool and are written back in (n, replica) order.
//! Wall-clock times never enter the rows file; they go to an optional
//! separate timings file.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;
use thiserror::Error;

use crate::bb::{self, BbConfig, BbError, BbOutcome, BbResult, NodeRule, VariableRule};
use crate::geometry::{self, GeometryError};
use crate::instance::{InstanceError, PackingInstance};
use crate::oracle::{self, CensusReport, OracleCaps, OracleError};
use crate::rng::derive_seed;

/// First line of every rows file; bump when columns change.
pub const ROWS_SCHEMA: &str = "# packing-bb rows v1";
pub const AGGREGATE_SCHEMA: &str = "packing-bb aggregate v1";
/// Tolerance of the best-bound check recorded in solve rows.
pub const LEMMA_TOL: f64 = 1e-7;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("config field `{field}`: {message}")]
    Field { field: String, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Instance(#[from] InstanceError),
    #[error(transparent)]
    Bb(#[from] BbError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

impl HarnessError {
    /// Config and cap errors map to the usage exit code.
    pub fn is_usage(&self) -> bool {
        matches!(
            self,
            HarnessError::Syntax { .. }
                | HarnessError::Field { .. }
                | HarnessError::Oracle(OracleError::TooLarge { .. })
        )
    }

    fn field(field: &str, message: impl Into<String>) -> Self {
        HarnessError::Field {
            field: field.to_string(),
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ExperimentKind {
    Solve,
    Census,
    Scaling,
    Slabs,
    Arrangement,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Solve => "solve",
            ExperimentKind::Census => "census",
            ExperimentKind::Scaling => "scaling",
            ExperimentKind::Slabs => "slabs",
            ExperimentKind::Arrangement => "arrangement",
        }
    }
}

impl FromStr for ExperimentKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "solve" => Ok(ExperimentKind::Solve),
            "census" => Ok(ExperimentKind::Census),
            "scaling" => Ok(ExperimentKind::Scaling),
            "slabs" => Ok(ExperimentKind::Slabs),
            "arrangement" => Ok(ExperimentKind::Arrangement),
            other => Err(format!(
                "unknown kind `{other}` (expected solve, census, scaling, slabs or arrangement)"
            )),
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Builds a variable rule from its CLI/config name.
pub fn parse_variable_rule(
    name: &str,
    seed: u64,
    script: &[usize],
) -> Result<VariableRule, String> {
    match name {
        "first" => Ok(VariableRule::First),
        "most-fractional" => Ok(VariableRule::MostFractional),
        "random" => Ok(VariableRule::Random { seed }),
        "adversarial-replay" => Ok(VariableRule::AdversarialReplay {
            script: script.to_vec(),
        }),
        other => Err(format!(
            "unknown variable rule `{other}` (expected first, most-fractional, random or adversarial-replay)"
        )),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub m: usize,
    /// One entry per row.
    pub beta: Vec<f64>,
    pub n_list: Vec<usize>,
    pub replicas: usize,
    pub base_seed: u64,
    pub var_rule: String,
    /// Branching script for `adversarial-replay`.
    pub script: Vec<usize>,
    pub node_rule: NodeRule,
    pub node_budget: usize,
    pub census_max_n: usize,
    pub ip_opt_max_n: usize,
    /// Sampled duals per instance (arrangement).
    pub trials: usize,
    /// Slabs per instance (slabs).
    pub directions: usize,
    pub rows: Option<PathBuf>,
    pub aggregate: Option<PathBuf>,
    pub timings: Option<PathBuf>,
}

impl ExperimentConfig {
    /// Config with defaults for everything but the kind and problem shape.
    pub fn new(kind: ExperimentKind, m: usize, beta: Vec<f64>, n_list: Vec<usize>) -> Self {
        let caps = OracleCaps::default();
        ExperimentConfig {
            kind,
            m,
            beta,
            n_list,
            replicas: 1,
            base_seed: 1,
            var_rule: "first".to_string(),
            script: Vec::new(),
            node_rule: NodeRule::BestBound,
            node_budget: bb::DEFAULT_NODE_BUDGET,
            census_max_n: caps.census_max_n,
            ip_opt_max_n: caps.ip_opt_max_n,
            trials: 10_000,
            directions: 50,
            rows: None,
            aggregate: None,
            timings: None,
        }
    }

    /// Parses the flat `key = value` format. Blank lines and `#` comments are
    /// skipped; list values are separated by commas or whitespace and may be
    /// wrapped in parentheses. `kind`, `m`, `beta` and `n_list` are required.
    pub fn parse(text: &str) -> Result<Self, HarnessError> {
        let mut fields: BTreeMap<String, String> = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(HarnessError::Syntax {
                    line: idx + 1,
                    message: format!("expected key = value, got `{line}`"),
                });
            };
            let key = key.trim().replace('-', "_");
            if fields
                .insert(key.clone(), value.trim().to_string())
                .is_some()
            {
                return Err(HarnessError::Syntax {
                    line: idx + 1,
                    message: format!("duplicate key `{key}`"),
                });
            }
        }

        let take = |fields: &mut BTreeMap<String, String>, key: &str| fields.remove(key);
        let required = |fields: &mut BTreeMap<String, String>, key: &str| {
            take(fields, key).ok_or_else(|| HarnessError::field(key, "missing"))
        };

        let kind = required(&mut fields, "kind")?
            .parse::<ExperimentKind>()
            .map_err(|e| HarnessError::field("kind", e))?;
        let m = parse_scalar::<usize>("m", &required(&mut fields, "m")?)?;
        let beta = parse_list::<f64>("beta", &required(&mut fields, "beta")?)?;
        let n_list = parse_list::<usize>("n_list", &required(&mut fields, "n_list")?)?;
        let mut config = ExperimentConfig::new(kind, m, beta, n_list);

        if let Some(v) = take(&mut fields, "replicas") {
            config.replicas = parse_scalar("replicas", &v)?;
        }
        if let Some(v) = take(&mut fields, "base_seed") {
            config.base_seed = parse_scalar("base_seed", &v)?;
        }
        if let Some(v) = take(&mut fields, "var_rule") {
            config.var_rule = v;
        }
        if let Some(v) = take(&mut fields, "script") {
            config.script = parse_list("script", &v)?;
        }
        if let Some(v) = take(&mut fields, "node_rule") {
            config.node_rule = v.parse().map_err(|e| HarnessError::field("node_rule", e))?;
        }
        if let Some(v) = take(&mut fields, "node_budget") {
            config.node_budget = parse_scalar("node_budget", &v)?;
        }
        if let Some(v) = take(&mut fields, "census_max_n") {
            config.census_max_n = parse_scalar("census_max_n", &v)?;
        }
        if let Some(v) = take(&mut fields, "ip_opt_max_n") {
            config.ip_opt_max_n = parse_scalar("ip_opt_max_n", &v)?;
        }
        if let Some(v) = take(&mut fields, "trials") {
            config.trials = parse_scalar("trials", &v)?;
        }
        if let Some(v) = take(&mut fields, "directions") {
            config.directions = parse_scalar("directions", &v)?;
        }
        config.rows = take(&mut fields, "rows").map(PathBuf::from);
        config.aggregate = take(&mut fields, "aggregate").map(PathBuf::from);
        config.timings = take(&mut fields, "timings").map(PathBuf::from);

        if let Some(key) = fields.keys().next() {
            return Err(HarnessError::field(key, "unknown key"));
        }
        config.validate()?;
        Ok(config)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self, HarnessError> {
        Self::parse(&fs::read_to_string(path)?)
    }

    /// Renders the config in the format accepted by [`parse`](Self::parse).
    pub fn to_text(&self) -> String {
        let join = |v: &[String]| v.join(",");
        let mut out = String::new();
        let mut line = |k: &str, v: String| out.push_str(&format!("{k} = {v}\n"));
        line("kind", self.kind.to_string());
        line("m", self.m.to_string());
        line(
            "beta",
            join(&self.beta.iter().map(|b| b.to_string()).collect::<Vec<_>>()),
        );
        line(
            "n_list",
            join(
                &self
                    .n_list
                    .iter()
                    .map(|n| n.to_string())
                    .collect::<Vec<_>>(),
            ),
        );
        line("replicas", self.replicas.to_string());
        line("base_seed", self.base_seed.to_string());
        line("var_rule", self.var_rule.clone());
        if !self.script.is_empty() {
            line(
                "script",
                join(
                    &self
                        .script
                        .iter()
                        .map(|s| s.to_string())
                        .collect::<Vec<_>>(),
                ),
            );
        }
        line("node_rule", self.node_rule.to_string());
        line("node_budget", self.node_budget.to_string());
        line("census_max_n", self.census_max_n.to_string());
        line("ip_opt_max_n", self.ip_opt_max_n.to_string());
        line("trials", self.trials.to_string());
        line("directions", self.directions.to_string());
        for (key, path) in [
            ("rows", &self.rows),
            ("aggregate", &self.aggregate),
            ("timings", &self.timings),
        ] {
            if let Some(p) = path {
                line(key, p.display().to_string());
            }
        }
        out
    }

    /// Checks field ranges and broadcasts a single `beta` to all rows.
    pub fn validate(&mut self) -> Result<(), HarnessError> {
        if self.m == 0 {
            return Err(HarnessError::field("m", "must be at least 1"));
        }
        if self.beta.len() == 1 && self.m > 1 {
            self.beta = vec![self.beta[0]; self.m];
        }
        if self.beta.len() != self.m {
            return Err(HarnessError::field(
                "beta",
                format!("expected 1 or {} values, got {}", self.m, self.beta.len()),
            ));
        }
        if let Some(b) = self.beta.iter().find(|b| !(**b > 0.0 && **b < 1.0)) {
            return Err(HarnessError::field(
                "beta",
                format!("{b} is outside (0, 1)"),
            ));
        }
        if self.n_list.is_empty() {
            return Err(HarnessError::field("n_list", "empty"));
        }
        if let Some(n) = self.n_list.iter().find(|&&n| n < self.m + 1) {
            return Err(HarnessError::field(
                "n_list",
                format!("n = {n} is below m + 1"),
            ));
        }
        if self.replicas == 0 {
            return Err(HarnessError::field("replicas", "must be at least 1"));
        }
        if self.node_budget == 0 {
            return Err(HarnessError::field("node_budget", "must be at least 1"));
        }
        parse_variable_rule(&self.var_rule, 0, &self.script)
            .map_err(|e| HarnessError::field("var_rule", e))?;
        if self.kind == ExperimentKind::Census {
            if let Some(&n) = self.n_list.iter().find(|&&n| n > self.census_max_n) {
                return Err(HarnessError::Oracle(OracleError::TooLarge {
                    what: "census",
                    n,
                    cap: self.census_max_n,
                }));
            }
        }
        Ok(())
    }

    /// `(n, replica, seed)` in output order.
    pub fn tasks(&self) -> Vec<(usize, usize, u64)> {
        self.n_list
            .iter()
            .flat_map(|&n| {
                (0..self.replicas).map(move |r| (n, r, derive_seed(self.base_seed, n, r)))
            })
            .collect()
    }

    fn variable_rule(&self, seed: u64) -> VariableRule {
        parse_variable_rule(&self.var_rule, seed, &self.script).expect("validated")
    }

    fn bb_config(&self) -> BbConfig {
        BbConfig {
            node_budget: self.node_budget,
            // Checked per row so that violating runs still produce a row.
            lemma_tol: f64::INFINITY,
            ..BbConfig::default()
        }
    }
}

fn parse_scalar<T: FromStr>(field: &str, value: &str) -> Result<T, HarnessError> {
    value
        .trim()
        .parse()
        .map_err(|_| HarnessError::field(field, format!("cannot parse `{value}`")))
}

fn parse_list<T: FromStr>(field: &str, value: &str) -> Result<Vec<T>, HarnessError> {
    value
        .trim()
        .trim_start_matches(['(', '['])
        .trim_end_matches([')', ']'])
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .map(|s| parse_scalar(field, s))
        .collect()
}

/// `IPGap * n / ln(n)^2`; undefined for `n < 2`.
pub fn gap_ratio(ip_gap: f64, n: usize) -> Option<f64> {
    let ln = (n as f64).ln();
    (n >= 2).then(|| ip_gap * n as f64 / (ln * ln))
}

/// Median; mean of the two middle values for even lengths.
pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let k = v.len();
    Some(if k % 2 == 1 {
        v[k / 2]
    } else {
        0.5 * (v[k / 2 - 1] + v[k / 2])
    })
}

/// Least-squares slope of `y` on `x`; `None` with fewer than two distinct `x`.
pub fn least_squares_slope(points: &[(f64, f64)]) -> Option<f64> {
    let k = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / k;
    let my = points.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

#[derive(Debug, Clone, Serialize)]
pub struct SolveRow {
    pub n: usize,
    pub replica: usize,
    pub seed: u64,
    pub outcome: &'static str,
    pub node_count: usize,
    pub branched_count: usize,
    pub opt_value: Option<f64>,
    pub lp_value: Option<f64>,
    pub ip_gap: Option<f64>,
    pub gap_ratio: Option<f64>,
    pub max_fractional: usize,
    pub best_bound_violations: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct CensusRow {
    pub n: usize,
    pub replica: usize,
    pub seed: u64,
    pub ip_opt: f64,
    pub lp_opt: f64,
    pub ip_gap: f64,
    pub good_count: u64,
    pub support_count: u64,
    pub theorem_bound: u64,
    pub node_count: usize,
    pub bound_satisfied: bool,
    pub association_holds: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct SlabRow {
    pub n: usize,
    pub replica: usize,
    pub seed: u64,
    pub slabs: usize,
    pub violations: usize,
    pub exceedances: usize,
    pub max_ratio: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ArrangementRow {
    pub n: usize,
    pub replica: usize,
    pub seed: u64,
    /// Exact count; only for `m = 1`.
    pub exact_cells: Option<usize>,
    pub cell_bound: usize,
    pub sampled_distinct: usize,
    /// Sampled patterns absent from the exact list (`m = 1`).
    pub sampled_missing: Option<usize>,
}

/// Output of [`run`].
#[derive(Debug, Clone)]
pub struct RunReport {
    pub config: ExperimentConfig,
    pub row_count: usize,
    /// Rows file contents, schema line included.
    pub rows_csv: String,
    pub aggregate: serde_json::Value,
    /// Hard assertion failures; non-empty means exit status 1.
    pub failures: Vec<String>,
    /// `(n, replica, seconds)`.
    pub timings: Vec<(usize, usize, f64)>,
}

impl RunReport {
    pub fn exit_code(&self) -> i32 {
        i32::from(!self.failures.is_empty())
    }
}

/// Serializes rows behind the versioned schema line.
pub fn rows_to_csv<T: Serialize>(kind: ExperimentKind, rows: &[T]) -> Result<String, HarnessError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.serialize(row)?;
    }
    let body = w.into_inner().map_err(|e| e.into_error())?;
    let body = String::from_utf8(body).expect("csv output is UTF-8");
    Ok(format!("{ROWS_SCHEMA} kind={kind}\n{body}"))
}

/// Runs the experiment and writes the configured output files.
pub fn run(config: &ExperimentConfig) -> Result<RunReport, HarnessError> {
    let mut config = config.clone();
    config.validate()?;
    let report = match config.kind {
        ExperimentKind::Solve | ExperimentKind::Scaling => run_solve(&config)?,
        ExperimentKind::Census => run_census(&config)?,
        ExperimentKind::Slabs => run_slabs(&config)?,
        ExperimentKind::Arrangement => run_arrangement(&config)?,
    };
    if let Some(path) = &config.rows {
        fs::write(path, &report.rows_csv)?;
    }
    if let Some(path) = &config.aggregate {
        fs::write(
            path,
            serde_json::to_string_pretty(&report.aggregate)? + "\n",
        )?;
    }
    if let Some(path) = &config.timings {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["n", "replica", "seconds"])?;
        for (n, r, s) in &report.timings {
            w.write_record([n.to_string(), r.to_string(), format!("{s:.6}")])?;
        }
        w.flush()?;
    }
    Ok(report)
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, f64) {
    let start = Instant::now();
    let out = f();
    (out, start.elapsed().as_secs_f64())
}

fn aggregate_base(
    config: &ExperimentConfig,
    rows: usize,
    failures: &[String],
) -> serde_json::Value {
    json!({
        "schema": AGGREGATE_SCHEMA,
        "config": config,
        "rows": rows,
        "failures": failures,
    })
}

fn merge(mut base: serde_json::Value, extra: serde_json::Value) -> serde_json::Value {
    if let (Some(b), serde_json::Value::Object(e)) = (base.as_object_mut(), extra) {
        b.extend(e);
    }
    base
}

pub fn solve_row(n: usize, replica: usize, seed: u64, result: &BbResult) -> SolveRow {
    let lp_value = result.root().lp_value();
    let ip_gap = match (lp_value, result.opt_value) {
        (Some(lp), Some(ip)) if result.outcome == BbOutcome::Completed => Some(lp - ip),
        _ => None,
    };
    let violations =
        if result.node_rule == NodeRule::BestBound && result.outcome == BbOutcome::Completed {
            result.best_bound_violations(LEMMA_TOL).len()
        } else {
            0
        };
    SolveRow {
        n,
        replica,
        seed,
        outcome: match result.outcome {
            BbOutcome::Completed => "completed",
            BbOutcome::BudgetExhausted => "budget_exhausted",
        },
        node_count: result.node_count,
        branched_count: result.branched_count,
        opt_value: result.opt_value,
        lp_value,
        ip_gap,
        gap_ratio: ip_gap.and_then(|g| gap_ratio(g, n)),
        max_fractional: result.max_fractional(),
        best_bound_violations: violations,
    }
}

/// Per-n aggregates of solve rows, recomputable from the rows file.
#[derive(Debug, Clone, Serialize)]
pub struct SolveAggregate {
    pub n: usize,
    pub runs: usize,
    pub budget_exhausted: usize,
    pub median_nodes: f64,
    pub max_nodes: usize,
    pub median_gap_ratio: Option<f64>,
}

pub fn solve_aggregates(rows: &[SolveRow]) -> (Vec<SolveAggregate>, Option<f64>, Option<f64>) {
    let mut by_n: BTreeMap<usize, Vec<&SolveRow>> = BTreeMap::new();
    for row in rows {
        by_n.entry(row.n).or_default().push(row);
    }
    let per_n: Vec<SolveAggregate> = by_n
        .iter()
        .map(|(&n, rows)| {
            let nodes: Vec<f64> = rows.iter().map(|r| r.node_count as f64).collect();
            let ratios: Vec<f64> = rows.iter().filter_map(|r| r.gap_ratio).collect();
            SolveAggregate {
                n,
                runs: rows.len(),
                budget_exhausted: rows.iter().filter(|r| r.outcome != "completed").count(),
                median_nodes: median(&nodes).unwrap_or(0.0),
                max_nodes: rows.iter().map(|r| r.node_count).max().unwrap_or(0),
                median_gap_ratio: median(&ratios),
            }
        })
        .collect();
    let points: Vec<(f64, f64)> = per_n
        .iter()
        .map(|a| ((a.n as f64).ln(), a.median_nodes.ln()))
        .collect();
    let slope = least_squares_slope(&points);
    let medians: Vec<f64> = per_n.iter().filter_map(|a| a.median_gap_ratio).collect();
    let spread = if medians.len() == per_n.len() && !medians.is_empty() {
        let max = medians.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let min = medians.iter().copied().fold(f64::INFINITY, f64::min);
        Some(max / min)
    } else {
        None
    };
    (per_n, slope, spread)
}

fn run_solve(config: &ExperimentConfig) -> Result<RunReport, HarnessError> {
    let bb_config = config.bb_config();
    let outputs: Vec<(SolveRow, f64)> = config
        .tasks()
        .into_par_iter()
        .map(|(n, replica, seed)| -> Result<_, HarnessError> {
            let inst = PackingInstance::generate(config.m, n, &config.beta, seed)?;
            let (result, secs) = timed(|| {
                bb::solve_with(
                    &inst,
                    &config.variable_rule(seed),
                    config.node_rule,
                    &bb_config,
                )
            });
            Ok((solve_row(n, replica, seed, &result?), secs))
        })
        .collect::<Result<_, _>>()?;
    let rows: Vec<SolveRow> = outputs.iter().map(|(r, _)| r.clone()).collect();

    let mut failures = Vec::new();
    for row in &rows {
        if row.best_bound_violations > 0 {
            failures.push(format!(
                "n={} replica={}: {} branched nodes below the optimum",
                row.n, row.replica, row.best_bound_violations
            ));
        }
        if row.max_fractional > config.m {
            failures.push(format!(
                "n={} replica={}: LP vertex with {} fractional coordinates",
                row.n, row.replica, row.max_fractional
            ));
        }
    }
    let (per_n, slope, spread) = solve_aggregates(&rows);
    let aggregate = merge(
        aggregate_base(config, rows.len(), &failures),
        json!({
            "per_n": per_n,
            "log_log_slope": slope,
            "gap_ratio_spread": spread,
        }),
    );
    Ok(RunReport {
        config: config.clone(),
        row_count: rows.len(),
        rows_csv: rows_to_csv(config.kind, &rows)?,
        aggregate,
        failures,
        timings: timings(
            &rows.iter().map(|r| (r.n, r.replica)).collect::<Vec<_>>(),
            &outputs,
        ),
    })
}

fn timings<R>(keys: &[(usize, usize)], outputs: &[(R, f64)]) -> Vec<(usize, usize, f64)> {
    keys.iter()
        .zip(outputs)
        .map(|(&(n, r), (_, s))| (n, r, *s))
        .collect()
}

fn run_census(config: &ExperimentConfig) -> Result<RunReport, HarnessError> {
    let bb_config = config.bb_config();
    let caps = OracleCaps {
        census_max_n: config.census_max_n,
        ip_opt_max_n: config.ip_opt_max_n,
    };
    let outputs: Vec<((CensusRow, CensusReport), f64)> = config
        .tasks()
        .into_iter()
        .map(|(n, replica, seed)| -> Result<_, HarnessError> {
            let inst = PackingInstance::generate(config.m, n, &config.beta, seed)?;
            // The census itself is parallel; tasks run one at a time.
            let (out, secs) = timed(|| -> Result<_, HarnessError> {
                let result = bb::solve_with(
                    &inst,
                    &config.variable_rule(seed),
                    config.node_rule,
                    &bb_config,
                )?;
                let report = oracle::good_set_capped(&inst, caps)?.with_observed(result.node_count);
                let association = oracle::branch_association(&report, &result);
                let row = CensusRow {
                    n,
                    replica,
                    seed,
                    ip_opt: report.ip_opt,
                    lp_opt: report.lp_opt,
                    ip_gap: report.ip_gap,
                    good_count: report.good_count,
                    support_count: report.support_count,
                    theorem_bound: report.theorem_bound,
                    node_count: result.node_count,
                    bound_satisfied: report.bound_satisfied == Some(true),
                    association_holds: association.holds(),
                };
                Ok((row, report))
            });
            Ok((out?, secs))
        })
        .collect::<Result<_, _>>()?;

    let mut failures = Vec::new();
    for ((row, _), _) in &outputs {
        if !row.bound_satisfied {
            failures.push(format!(
                "n={} replica={}: {} nodes exceed the good-set bound {}",
                row.n, row.replica, row.node_count, row.theorem_bound
            ));
        }
    }
    let rows: Vec<CensusRow> = outputs.iter().map(|((r, _), _)| r.clone()).collect();
    let reports: Vec<&CensusReport> = outputs.iter().map(|((_, c), _)| c).collect();
    let mut per_n: BTreeMap<usize, (usize, usize, f64)> = BTreeMap::new();
    for row in &rows {
        let e = per_n.entry(row.n).or_insert((0, 0, 0.0));
        e.0 += 1;
        e.1 += usize::from(!row.bound_satisfied);
        e.2 = e.2.max(row.node_count as f64 / row.theorem_bound as f64);
    }
    let per_n: Vec<_> = per_n
        .into_iter()
        .map(|(n, (runs, violations, frac))| {
            json!({"n": n, "runs": runs, "violations": violations, "max_node_fraction": frac})
        })
        .collect();
    let aggregate = merge(
        aggregate_base(config, rows.len(), &failures),
        json!({
            "per_n": per_n,
            "all_bound_satisfied": rows.iter().all(|r| r.bound_satisfied),
            "association_holds": rows.iter().filter(|r| r.association_holds).count(),
            "reports": reports,
        }),
    );
    Ok(RunReport {
        config: config.clone(),
        row_count: rows.len(),
        rows_csv: rows_to_csv(config.kind, &rows)?,
        aggregate,
        failures,
        timings: timings(
            &rows.iter().map(|r| (r.n, r.replica)).collect::<Vec<_>>(),
            &outputs,
        ),
    })
}

fn run_slabs(config: &ExperimentConfig) -> Result<RunReport, HarnessError> {
    let outputs: Vec<(SlabRow, f64)> = config
        .tasks()
        .into_par_iter()
        .map(|(n, replica, seed)| -> Result<_, HarnessError> {
            let inst = PackingInstance::generate(config.m, n, &config.beta, seed)?;
            let (trial, secs) =
                timed(|| geometry::uniform_slab_trial(&inst, config.directions, seed));
            let trial = trial?;
            Ok((
                SlabRow {
                    n,
                    replica,
                    seed,
                    slabs: trial.slabs,
                    violations: trial.violations,
                    exceedances: trial.single_slab_exceedances,
                    max_ratio: trial.max_ratio,
                },
                secs,
            ))
        })
        .collect::<Result<_, _>>()?;
    let rows: Vec<SlabRow> = outputs.iter().map(|(r, _)| r.clone()).collect();
    let with_violation = rows.iter().filter(|r| r.violations > 0).count();
    // The uniform bound holds with high probability only, so it is reported
    // rather than asserted.
    let failures = Vec::new();
    let aggregate = merge(
        aggregate_base(config, rows.len(), &failures),
        json!({
            "instances_with_violation": with_violation,
            "violation_fraction": with_violation as f64 / rows.len() as f64,
            "max_ratio": rows.iter().map(|r| r.max_ratio).fold(0.0, f64::max),
        }),
    );
    Ok(RunReport {
        config: config.clone(),
        row_count: rows.len(),
        rows_csv: rows_to_csv(config.kind, &rows)?,
        aggregate,
        failures,
        timings: timings(
            &rows.iter().map(|r| (r.n, r.replica)).collect::<Vec<_>>(),
            &outputs,
        ),
    })
}

fn run_arrangement(config: &ExperimentConfig) -> Result<RunReport, HarnessError> {
    let outputs: Vec<(ArrangementRow, f64)> = config
        .tasks()
        .into_par_iter()
        .map(|(n, replica, seed)| -> Result<_, HarnessError> {
            let inst = PackingInstance::generate(config.m, n, &config.beta, seed)?;
            let (row, secs) = timed(|| -> Result<_, HarnessError> {
                let sampled = geometry::sample_cells(&inst, config.trials, seed, &[]);
                let (exact_cells, sampled_missing) = if config.m == 1 {
                    let cells = geometry::enumerate_cells_1d(&inst)?;
                    let known: HashSet<_> = cells.iter().map(|c| c.assignment.clone()).collect();
                    let missing = sampled
                        .iter()
                        .filter(|p| !known.contains(&p.assignment))
                        .count();
                    (Some(cells.len()), Some(missing))
                } else {
                    (None, None)
                };
                Ok(ArrangementRow {
                    n,
                    replica,
                    seed,
                    exact_cells,
                    cell_bound: 2 * n + 1,
                    sampled_distinct: sampled.len(),
                    sampled_missing,
                })
            });
            Ok((row?, secs))
        })
        .collect::<Result<_, _>>()?;
    let rows: Vec<ArrangementRow> = outputs.iter().map(|(r, _)| r.clone()).collect();
    let mut failures = Vec::new();
    for row in &rows {
        if row.exact_cells.is_some_and(|c| c > row.cell_bound) {
            failures.push(format!(
                "n={} replica={}: {} cells exceed 2n+1",
                row.n,
                row.replica,
                row.exact_cells.unwrap_or(0)
            ));
        }
        if row.sampled_missing.is_some_and(|k| k > 0) {
            failures.push(format!(
                "n={} replica={}: sampled duals outside the enumerated cells",
                row.n, row.replica
            ));
        }
    }
    let aggregate = merge(
        aggregate_base(config, rows.len(), &failures),
        json!({
            "max_exact_cells": rows.iter().filter_map(|r| r.exact_cells).max(),
            "max_sampled_distinct": rows.iter().map(|r| r.sampled_distinct).max(),
        }),
    );
    Ok(RunReport {
        config: config.clone(),
        row_count: rows.len(),
        rows_csv: rows_to_csv(config.kind, &rows)?,
        aggregate,
        failures,
        timings: timings(
            &rows.iter().map(|r| (r.n, r.replica)).collect::<Vec<_>>(),
            &outputs,
        ),
    })
}
