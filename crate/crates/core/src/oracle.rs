//! Exhaustive ground truth on small instances: the IP optimum, pareto gaps of
//! 0/1 points, the good set `G = {x : pareto(x) <= IPGap(b)}`, and per-run
//! checks of the tree-size bound `2 |G| C(n, <= m) + 1` and of the
//! node-to-(good point, support) association behind it.
//!
//! Enumeration splits `{0,1}^n` into prefix blocks (the leading coordinates)
//! processed in parallel; within a block the IP search walks a Gray code with
//! O(m) occupation updates. Points are indexed so that integer order equals
//! lexicographic order of `x` (`x_1` is the most significant bit).

use std::collections::{HashMap, HashSet};

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::bb::{bitstring, BbResult, NodeStatus};
use crate::instance::PackingInstance;
use crate::lp::{self, LpError, LpSolution, TOL_FEASIBILITY};

/// Default largest `n` for [`ip_opt`].
pub const DEFAULT_IP_OPT_MAX_N: usize = 25;
/// Default largest `n` for the good-set census.
pub const DEFAULT_CENSUS_MAX_N: usize = 20;
/// Slack on `pareto(x) <= IPGap(b)` membership.
pub const GOOD_TOL: f64 = 1e-9;

const PREFIX_BITS: usize = 6;

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("n = {n} exceeds the {what} cap of {cap}")]
    TooLarge {
        what: &'static str,
        n: usize,
        cap: usize,
    },
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error("slice LP for a 0/1 point came back infeasible")]
    EmptySlice,
}

#[derive(Debug, Clone, Copy)]
pub struct OracleCaps {
    pub ip_opt_max_n: usize,
    pub census_max_n: usize,
}

impl Default for OracleCaps {
    fn default() -> Self {
        OracleCaps {
            ip_opt_max_n: DEFAULT_IP_OPT_MAX_N,
            census_max_n: DEFAULT_CENSUS_MAX_N,
        }
    }
}

/// 0/1 point with index `code` (`x_1` is the most significant bit).
pub fn point_from_code(code: u64, n: usize) -> Vec<u8> {
    (0..n).map(|j| ((code >> (n - 1 - j)) & 1) as u8).collect()
}

fn bit_of(j: usize, n: usize) -> u64 {
    1u64 << (n - 1 - j)
}

/// `sum_{i <= k} C(n, i)`, saturating.
pub fn binomial_sum(n: u64, k: u64) -> u64 {
    let mut total: u64 = 0;
    let mut term: u128 = 1;
    for i in 0..=k.min(n) {
        if i > 0 {
            term = term * (n - i + 1) as u128 / i as u128;
        }
        total = total.saturating_add(u64::try_from(term).unwrap_or(u64::MAX));
    }
    total
}

/// `OPT(IP(b))` and a maximizer, by enumeration with the default cap.
pub fn ip_opt(inst: &PackingInstance) -> Result<(f64, Vec<u8>), OracleError> {
    ip_opt_capped(inst, DEFAULT_IP_OPT_MAX_N)
}

pub fn ip_opt_capped(inst: &PackingInstance, cap: usize) -> Result<(f64, Vec<u8>), OracleError> {
    let n = inst.n();
    if n > cap || n > 62 {
        return Err(OracleError::TooLarge {
            what: "ip_opt",
            n,
            cap,
        });
    }
    let m = inst.m();
    let prefix = PREFIX_BITS.min(n);
    let suffix = n - prefix;
    let columns: Vec<Vec<f64>> = (0..n).map(|j| inst.column(j).collect()).collect();
    let b = inst.b();

    let best = (0u64..1 << prefix)
        .into_par_iter()
        .map(|block| {
            let start = block << suffix;
            let x = point_from_code(start, n);
            let mut occ = inst.occupation01(&x);
            let mut value = inst.objective01(&x);
            let mut code = start;
            let mut best: Option<(f64, u64)> = None;
            let mut consider = |value: f64, occ: &[f64], code: u64| {
                if occ.iter().zip(b).all(|(o, b)| *o <= b + TOL_FEASIBILITY)
                    && best.is_none_or(|(v, c)| value > v || (value == v && code < c))
                {
                    best = Some((value, code));
                }
            };
            consider(value, &occ, code);
            for step in 1u64..1 << suffix {
                // Flip coordinate with Gray-code bit `trailing_zeros(step)` of the suffix.
                let j = n - 1 - step.trailing_zeros() as usize;
                let bit = bit_of(j, n);
                let sign = if code & bit == 0 { 1.0 } else { -1.0 };
                code ^= bit;
                value += sign * inst.c()[j];
                for (i, o) in occ.iter_mut().enumerate().take(m) {
                    *o += sign * columns[j][i];
                }
                consider(value, &occ, code);
            }
            best
        })
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .fold(None::<(f64, u64)>, |acc, (v, c)| match acc {
            Some((bv, bc)) if bv > v || (bv == v && bc < c) => Some((bv, bc)),
            _ => Some((v, c)),
        })
        .expect("x = 0 is always feasible");
    let x = point_from_code(best.1, n);
    Ok((inst.objective01(&x), x))
}

/// `pareto(x) = LP_=(Ax) - <c, x>` for a 0/1 point.
pub fn pareto_gap(inst: &PackingInstance, x: &[u8]) -> Result<f64, OracleError> {
    let occ = inst.occupation01(x);
    match lp::solve_eq_lp(inst, &occ)? {
        LpSolution::Optimal(v) => Ok(v.value - inst.objective01(x)),
        LpSolution::Infeasible => Err(OracleError::EmptySlice),
    }
}

/// Pareto gap of every point of `{0,1}^n`, indexed by code.
pub fn all_pareto_gaps(inst: &PackingInstance, cap: usize) -> Result<Vec<f64>, OracleError> {
    let n = inst.n();
    if n > cap || n > 62 {
        return Err(OracleError::TooLarge {
            what: "census",
            n,
            cap,
        });
    }
    (0u64..1 << n)
        .into_par_iter()
        .map(|code| pareto_gap(inst, &point_from_code(code, n)))
        .collect()
}

/// Census of the good set together with the tree-size bound.
#[derive(Debug, Clone, Serialize)]
pub struct CensusReport {
    pub m: usize,
    pub n: usize,
    pub ip_opt: f64,
    pub lp_opt: f64,
    pub ip_gap: f64,
    /// Good points, lexicographic order, as `"0101..."` strings.
    #[serde(serialize_with = "serialize_points")]
    pub good_points: Vec<Vec<u8>>,
    pub good_count: u64,
    /// `C(n, <= m)`.
    pub support_count: u64,
    /// `2 |G| C(n, <= m) + 1`, saturating.
    pub theorem_bound: u64,
    pub min_pareto_gap: f64,
    pub observed_nodes: Option<u64>,
    pub bound_satisfied: Option<bool>,
}

fn serialize_points<S: serde::Serializer>(points: &[Vec<u8>], s: S) -> Result<S::Ok, S::Error> {
    s.collect_seq(points.iter().map(|x| bitstring(x)))
}

impl CensusReport {
    /// Records a run against the bound.
    pub fn with_observed(mut self, node_count: usize) -> Self {
        self.observed_nodes = Some(node_count as u64);
        self.bound_satisfied = Some(node_count as u64 <= self.theorem_bound);
        self
    }

    pub fn good_set(&self) -> HashSet<&[u8]> {
        self.good_points.iter().map(|x| x.as_slice()).collect()
    }
}

/// Good set with the default census cap.
pub fn good_set(inst: &PackingInstance) -> Result<CensusReport, OracleError> {
    good_set_capped(inst, OracleCaps::default())
}

pub fn good_set_capped(
    inst: &PackingInstance,
    caps: OracleCaps,
) -> Result<CensusReport, OracleError> {
    let n = inst.n();
    if n > caps.census_max_n {
        return Err(OracleError::TooLarge {
            what: "census",
            n,
            cap: caps.census_max_n,
        });
    }
    let (ip, _) = ip_opt_capped(inst, caps.ip_opt_max_n.max(caps.census_max_n))?;
    let lp = lp::lp_value(inst)?;
    let ip_gap = lp - ip;
    let gaps = all_pareto_gaps(inst, caps.census_max_n)?;
    let good_points: Vec<Vec<u8>> = gaps
        .iter()
        .enumerate()
        .filter(|(_, &g)| g <= ip_gap + GOOD_TOL)
        .map(|(code, _)| point_from_code(code as u64, n))
        .collect();
    let good_count = good_points.len() as u64;
    let support_count = binomial_sum(n as u64, inst.m() as u64);
    let theorem_bound = good_count
        .saturating_mul(2)
        .saturating_mul(support_count)
        .saturating_add(1);
    Ok(CensusReport {
        m: inst.m(),
        n,
        ip_opt: ip,
        lp_opt: lp,
        ip_gap,
        good_points,
        good_count,
        support_count,
        theorem_bound,
        min_pareto_gap: gaps.iter().copied().fold(f64::INFINITY, f64::min),
        observed_nodes: None,
        bound_satisfied: None,
    })
}

/// Census plus the observed tree size of `result`.
pub fn verify_tree_bound(
    inst: &PackingInstance,
    result: &BbResult,
) -> Result<CensusReport, OracleError> {
    Ok(good_set(inst)?.with_observed(result.node_count))
}

/// Assignment of branched nodes to pairs `(x, J)` with `x` good and the
/// node's LP solution in `C_J(x)`.
#[derive(Debug, Clone, Serialize)]
pub struct AssociationReport {
    pub branched_nodes: usize,
    /// Branched nodes with no good point agreeing with their LP solution off
    /// its fractional support.
    pub unassociated: Vec<usize>,
    /// Pairs of branched nodes whose LP solutions share the same fractional
    /// support and the same integral part.
    pub shared_neighborhoods: Vec<(usize, usize)>,
    /// Size of a maximum matching between branched nodes and `(x, J)` pairs.
    pub matching_size: usize,
    /// `(node, x, J)` triples of the matching.
    pub matching: Vec<(usize, String, Vec<usize>)>,
}

impl AssociationReport {
    /// Every branched node is associated and the association is injective.
    pub fn holds(&self) -> bool {
        self.unassociated.is_empty()
            && self.shared_neighborhoods.is_empty()
            && self.matching_size == self.branched_nodes
    }
}

pub fn branch_association(census: &CensusReport, result: &BbResult) -> AssociationReport {
    let good = census.good_set();
    let branched: Vec<usize> = result
        .tree
        .iter()
        .filter(|node| node.status == NodeStatus::Branched)
        .map(|node| node.id)
        .collect();

    // Candidate pairs per branched node: J = fractional support of x^N, x any
    // good point agreeing with round(x^N) off J.
    let mut pair_ids: HashMap<(Vec<u8>, Vec<usize>), usize> = HashMap::new();
    let mut pairs: Vec<(Vec<u8>, Vec<usize>)> = Vec::new();
    let mut candidates: Vec<Vec<usize>> = Vec::with_capacity(branched.len());
    let mut unassociated = Vec::new();
    let mut neighborhoods: HashMap<(Vec<u8>, Vec<usize>), usize> = HashMap::new();
    let mut shared_neighborhoods = Vec::new();

    for &id in &branched {
        let vertex = result.tree[id]
            .lp
            .vertex()
            .expect("branched nodes are feasible");
        let support = vertex.fractional.clone();
        let base: Vec<u8> = vertex.rounded();
        let mut key_point = base.clone();
        for &j in &support {
            key_point[j] = 0;
        }
        if let Some(&other) = neighborhoods.get(&(key_point.clone(), support.clone())) {
            shared_neighborhoods.push((other, id));
        } else {
            neighborhoods.insert((key_point.clone(), support.clone()), id);
        }

        let mut mine = Vec::new();
        for mask in 0u64..1 << support.len() {
            let mut x = key_point.clone();
            for (t, &j) in support.iter().enumerate() {
                x[j] = ((mask >> t) & 1) as u8;
            }
            if good.contains(x.as_slice()) {
                let key = (x, support.clone());
                let pid = *pair_ids.entry(key.clone()).or_insert_with(|| {
                    pairs.push(key);
                    pairs.len() - 1
                });
                mine.push(pid);
            }
        }
        if mine.is_empty() {
            unassociated.push(id);
        }
        candidates.push(mine);
    }

    let assignment = max_bipartite_matching(&candidates, pairs.len());
    let matching: Vec<(usize, String, Vec<usize>)> = assignment
        .iter()
        .enumerate()
        .filter_map(|(k, p)| {
            p.map(|pid| (branched[k], bitstring(&pairs[pid].0), pairs[pid].1.clone()))
        })
        .collect();
    AssociationReport {
        branched_nodes: branched.len(),
        unassociated,
        shared_neighborhoods,
        matching_size: matching.len(),
        matching,
    }
}

/// Checks the association with a fresh census.
pub fn verify_branch_association(
    inst: &PackingInstance,
    result: &BbResult,
) -> Result<bool, OracleError> {
    let census = good_set(inst)?;
    Ok(branch_association(&census, result).holds())
}

/// Kuhn's augmenting-path matching; returns the matched right vertex per left vertex.
fn max_bipartite_matching(adj: &[Vec<usize>], right: usize) -> Vec<Option<usize>> {
    fn augment(
        u: usize,
        adj: &[Vec<usize>],
        seen: &mut [bool],
        owner: &mut [Option<usize>],
    ) -> bool {
        for &v in &adj[u] {
            if seen[v] {
                continue;
            }
            seen[v] = true;
            if owner[v].is_none_or(|w| augment(w, adj, seen, owner)) {
                owner[v] = Some(u);
                return true;
            }
        }
        false
    }
    let mut owner: Vec<Option<usize>> = vec![None; right];
    for u in 0..adj.len() {
        let mut seen = vec![false; right];
        augment(u, adj, &mut seen, &mut owner);
    }
    let mut out = vec![None; adj.len()];
    for (v, u) in owner.iter().enumerate() {
        if let Some(u) = u {
            out[*u] = Some(v);
        }
    }
    out
}
