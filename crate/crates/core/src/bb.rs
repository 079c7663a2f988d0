//! Branch-and-bound with variable branching.
//!
//! Each iteration selects an open leaf, then
//!
//! 1. prunes it by integrality when its LP optimum is a 0/1 point, taking that
//!    point as the new incumbent if it is strictly better;
//! 2. otherwise prunes it by bound when its LP value does not exceed the
//!    incumbent (within [`BbConfig::bound_tol`]);
//! 3. otherwise branches on a fractional coordinate `j`, creating the children
//!    `x_j = 0` and `x_j = 1` and solving their LPs immediately.
//!
//! Children with infeasible LPs are marked pruned at creation; they can never
//! be branched on, so the final tree is the same as if they were pruned on
//! selection. The search starts without an incumbent and runs no primal
//! heuristics: incumbents only come from integral node LPs.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::Serialize;
use thiserror::Error;

use crate::instance::PackingInstance;
use crate::lp::{self, FixedSets, LpError, LpSolution, LpVertex, TOL_FEASIBILITY};
use crate::rng::{Stream, STREAM_BRANCHING};

/// Default cap on the number of tree nodes.
pub const DEFAULT_NODE_BUDGET: usize = 10_000_000;

#[derive(Debug, Error)]
pub enum BbError {
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error("branching script entry {position} selects x_{index}, which is not fractional at node {node} (fractional: {fractional:?})")]
    InvalidScript {
        position: usize,
        index: usize,
        node: usize,
        fractional: Vec<usize>,
    },
    #[error("best-bound lemma violated: node {node} was branched with LP value {lp_value} below the optimum {opt_value}")]
    BestBoundViolation {
        node: usize,
        lp_value: f64,
        opt_value: f64,
    },
    #[error("node {node}: integral LP solution rounds to an infeasible point")]
    InfeasibleRounding { node: usize },
}

/// Rule for choosing the fractional variable to branch on.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum VariableRule {
    /// Lowest fractional index.
    First,
    /// `x_j` closest to 1/2; ties go to the lowest index.
    MostFractional,
    /// Uniform among the fractional indices, from a seeded stream.
    Random { seed: u64 },
    /// The k-th branching uses `script[k]`. Once the script is exhausted the
    /// lowest fractional index is used.
    AdversarialReplay { script: Vec<usize> },
}

impl VariableRule {
    pub fn name(&self) -> &'static str {
        match self {
            VariableRule::First => "first",
            VariableRule::MostFractional => "most-fractional",
            VariableRule::Random { .. } => "random",
            VariableRule::AdversarialReplay { .. } => "adversarial-replay",
        }
    }
}

impl fmt::Display for VariableRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VariableRule::Random { seed } => write!(f, "random(seed={seed})"),
            VariableRule::AdversarialReplay { script } => {
                write!(f, "adversarial-replay(len={})", script.len())
            }
            other => f.write_str(other.name()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum NodeRule {
    /// Open leaf with the largest LP value; ties go to the lowest node id.
    #[default]
    BestBound,
    /// Most recently created open leaf.
    DepthFirst,
}

impl NodeRule {
    pub fn name(self) -> &'static str {
        match self {
            NodeRule::BestBound => "best-bound",
            NodeRule::DepthFirst => "depth-first",
        }
    }
}

impl FromStr for NodeRule {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "best-bound" => Ok(NodeRule::BestBound),
            "depth-first" => Ok(NodeRule::DepthFirst),
            other => Err(format!(
                "unknown node rule `{other}` (expected best-bound or depth-first)"
            )),
        }
    }
}

impl fmt::Display for NodeRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeStatus {
    Open,
    Branched,
    PrunedIntegrality,
    PrunedInfeasible,
    PrunedBound,
}

impl NodeStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            NodeStatus::Open => "open",
            NodeStatus::Branched => "branched",
            NodeStatus::PrunedIntegrality => "pruned_integrality",
            NodeStatus::PrunedInfeasible => "pruned_infeasible",
            NodeStatus::PrunedBound => "pruned_bound",
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BbNode {
    pub id: usize,
    pub parent: Option<usize>,
    pub fixed: FixedSets,
    pub lp: LpSolution,
    pub status: NodeStatus,
    pub branch_var: Option<usize>,
    /// `[x_j = 0 child, x_j = 1 child]` when branched.
    pub children: Option<[usize; 2]>,
    pub depth: usize,
}

impl BbNode {
    pub fn lp_value(&self) -> Option<f64> {
        self.lp.value()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BbOutcome {
    Completed,
    BudgetExhausted,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct PruneCounts {
    pub integrality: usize,
    pub infeasible: usize,
    pub bound: usize,
}

#[derive(Debug, Clone)]
pub struct BbConfig {
    pub node_budget: usize,
    /// Prune when `lp_value <= incumbent + bound_tol`.
    pub bound_tol: f64,
    /// Tolerance of the post-run best-bound check.
    pub lemma_tol: f64,
}

impl Default for BbConfig {
    fn default() -> Self {
        BbConfig {
            node_budget: DEFAULT_NODE_BUDGET,
            bound_tol: 1e-9,
            lemma_tol: 1e-7,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BbResult {
    pub outcome: BbOutcome,
    /// IP optimum; `None` only if the budget ran out before any incumbent.
    pub opt_value: Option<f64>,
    pub opt_solution: Option<Vec<u8>>,
    pub tree: Vec<BbNode>,
    pub node_count: usize,
    pub branched_count: usize,
    pub prune_counts: PruneCounts,
    /// `(node id, value)` for every incumbent update, in order.
    pub incumbent_trace: Vec<(usize, f64)>,
    /// Branched node ids in the order they were branched.
    pub branch_order: Vec<usize>,
    pub node_rule: NodeRule,
}

/// Best-bound selection over `(node id, lp value)` pairs: largest value, ties
/// to the lowest id.
pub fn select_node(open_leaves: &[(usize, f64)]) -> Option<usize> {
    open_leaves
        .iter()
        .copied()
        .max_by(|a, b| a.1.total_cmp(&b.1).then(b.0.cmp(&a.0)))
        .map(|(id, _)| id)
}

/// Stateful variable chooser for one solve.
#[derive(Debug, Clone)]
pub struct VariableSelector {
    rule: VariableRule,
    rng: Option<Stream>,
    position: usize,
}

impl VariableSelector {
    pub fn new(rule: VariableRule) -> Self {
        let rng = match rule {
            VariableRule::Random { seed } => Some(Stream::new(seed, STREAM_BRANCHING)),
            _ => None,
        };
        VariableSelector {
            rule,
            rng,
            position: 0,
        }
    }

    /// Picks a branching index for `node`. `vertex.fractional` must be non-empty.
    pub fn select(&mut self, node: usize, vertex: &LpVertex) -> Result<usize, BbError> {
        let frac = &vertex.fractional;
        assert!(!frac.is_empty(), "select called on an integral LP solution");
        let position = self.position;
        self.position += 1;
        let choice = match &self.rule {
            VariableRule::First => frac[0],
            VariableRule::MostFractional => *frac
                .iter()
                .min_by(|&&a, &&b| {
                    (vertex.x[a] - 0.5)
                        .abs()
                        .total_cmp(&(vertex.x[b] - 0.5).abs())
                        .then(a.cmp(&b))
                })
                .expect("non-empty"),
            VariableRule::Random { .. } => {
                let rng = self.rng.as_mut().expect("random rule has a stream");
                frac[rng.index(frac.len())]
            }
            VariableRule::AdversarialReplay { script } => match script.get(position) {
                None => frac[0],
                Some(&index) if frac.binary_search(&index).is_ok() => index,
                Some(&index) => {
                    return Err(BbError::InvalidScript {
                        position,
                        index,
                        node,
                        fractional: frac.clone(),
                    })
                }
            },
        };
        Ok(choice)
    }
}

/// Solves with the default configuration.
pub fn solve(
    inst: &PackingInstance,
    var_rule: &VariableRule,
    node_rule: NodeRule,
) -> Result<BbResult, BbError> {
    solve_with(inst, var_rule, node_rule, &BbConfig::default())
}

#[derive(Debug, Clone, Copy)]
struct OpenKey {
    primary: f64,
    secondary: i64,
    id: usize,
}

impl PartialEq for OpenKey {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for OpenKey {}
impl PartialOrd for OpenKey {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for OpenKey {
    fn cmp(&self, other: &Self) -> Ordering {
        self.primary
            .total_cmp(&other.primary)
            .then(self.secondary.cmp(&other.secondary))
    }
}

fn open_key(rule: NodeRule, node: &BbNode) -> OpenKey {
    match rule {
        NodeRule::BestBound => OpenKey {
            primary: node.lp_value().expect("open nodes are feasible"),
            secondary: -(node.id as i64),
            id: node.id,
        },
        NodeRule::DepthFirst => OpenKey {
            primary: node.depth as f64,
            secondary: node.id as i64,
            id: node.id,
        },
    }
}

pub fn solve_with(
    inst: &PackingInstance,
    var_rule: &VariableRule,
    node_rule: NodeRule,
    config: &BbConfig,
) -> Result<BbResult, BbError> {
    let mut selector = VariableSelector::new(var_rule.clone());
    let mut tree: Vec<BbNode> = Vec::new();
    let mut open: BinaryHeap<OpenKey> = BinaryHeap::new();
    let mut prune_counts = PruneCounts::default();
    let mut incumbent: Option<(f64, Vec<u8>)> = None;
    let mut incumbent_trace = Vec::new();
    let mut branch_order = Vec::new();

    let create = |tree: &mut Vec<BbNode>,
                  open: &mut BinaryHeap<OpenKey>,
                  prune_counts: &mut PruneCounts,
                  parent: Option<usize>,
                  fixed: FixedSets,
                  depth: usize,
                  start: Option<&[f64]>|
     -> Result<usize, BbError> {
        let lp = lp::solve_lp_from(inst, &fixed, start)?;
        let id = tree.len();
        let status = if lp.is_optimal() {
            NodeStatus::Open
        } else {
            prune_counts.infeasible += 1;
            NodeStatus::PrunedInfeasible
        };
        tree.push(BbNode {
            id,
            parent,
            fixed,
            lp,
            status,
            branch_var: None,
            children: None,
            depth,
        });
        if status == NodeStatus::Open {
            open.push(open_key(node_rule, &tree[id]));
        }
        Ok(id)
    };

    create(
        &mut tree,
        &mut open,
        &mut prune_counts,
        None,
        FixedSets::new(),
        0,
        None,
    )?;
    let mut outcome = BbOutcome::Completed;

    while let Some(key) = open.pop() {
        let id = key.id;
        let vertex = match &tree[id].lp {
            LpSolution::Optimal(v) => v.clone(),
            LpSolution::Infeasible => unreachable!("infeasible nodes are never queued"),
        };

        if vertex.is_integral() {
            let point = vertex.rounded();
            if !inst.is_feasible01(&point, TOL_FEASIBILITY) {
                return Err(BbError::InfeasibleRounding { node: id });
            }
            let value = inst.objective01(&point);
            if incumbent.as_ref().is_none_or(|(best, _)| value > *best) {
                incumbent_trace.push((id, value));
                incumbent = Some((value, point));
            }
            tree[id].status = NodeStatus::PrunedIntegrality;
            prune_counts.integrality += 1;
            continue;
        }

        if let Some((best, _)) = &incumbent {
            if vertex.value <= best + config.bound_tol {
                tree[id].status = NodeStatus::PrunedBound;
                prune_counts.bound += 1;
                continue;
            }
        }

        if tree.len() + 2 > config.node_budget {
            open.push(key);
            outcome = BbOutcome::BudgetExhausted;
            break;
        }

        let j = selector.select(id, &vertex)?;
        let (fixed, depth) = (tree[id].fixed.clone(), tree[id].depth + 1);
        let start = Some(vertex.x.as_slice());
        let left = create(
            &mut tree,
            &mut open,
            &mut prune_counts,
            Some(id),
            fixed.with(j, 0),
            depth,
            start,
        )?;
        let right = create(
            &mut tree,
            &mut open,
            &mut prune_counts,
            Some(id),
            fixed.with(j, 1),
            depth,
            start,
        )?;
        let node = &mut tree[id];
        node.status = NodeStatus::Branched;
        node.branch_var = Some(j);
        node.children = Some([left, right]);
        branch_order.push(id);
    }

    let node_count = tree.len();
    let (opt_value, opt_solution) = match incumbent {
        Some((v, x)) => (Some(v), Some(x)),
        None => (None, None),
    };
    let result = BbResult {
        outcome,
        opt_value,
        opt_solution,
        node_count,
        branched_count: branch_order.len(),
        tree,
        prune_counts,
        incumbent_trace,
        branch_order,
        node_rule,
    };

    if node_rule == NodeRule::BestBound && outcome == BbOutcome::Completed {
        if let Some(&node) = result.best_bound_violations(config.lemma_tol).first() {
            return Err(BbError::BestBoundViolation {
                node,
                lp_value: result.tree[node].lp_value().unwrap_or(f64::NAN),
                opt_value: result.opt_value.unwrap_or(f64::NAN),
            });
        }
    }
    Ok(result)
}

impl BbResult {
    pub fn root(&self) -> &BbNode {
        &self.tree[0]
    }

    /// Branched nodes whose LP value is below `opt_value - tol`.
    pub fn best_bound_violations(&self, tol: f64) -> Vec<usize> {
        let Some(opt) = self.opt_value else {
            return Vec::new();
        };
        self.tree
            .iter()
            .filter(|n| n.status == NodeStatus::Branched)
            .filter(|n| n.lp_value().is_some_and(|v| v < opt - tol))
            .map(|n| n.id)
            .collect()
    }

    /// Largest fractional support over all LP solutions in the tree.
    pub fn max_fractional(&self) -> usize {
        self.tree
            .iter()
            .filter_map(|n| n.lp.vertex())
            .map(|v| v.fractional.len())
            .max()
            .unwrap_or(0)
    }

    /// Structural checks on the recorded tree: child fixings extend the
    /// parent's by exactly the branching variable, no variable is fixed twice,
    /// branched nodes have exactly two children, child LP values never exceed
    /// the parent's, and `node_count = 2 * branched_count + 1`.
    pub fn verify_integrity(&self) -> Result<(), String> {
        if self.tree.is_empty() || !self.tree[0].fixed.is_empty() || self.tree[0].parent.is_some() {
            return Err("root must exist with empty fixings".into());
        }
        if self.node_count != self.tree.len() || self.node_count != 2 * self.branched_count + 1 {
            return Err(format!(
                "node_count {} vs tree {} vs branched {}",
                self.node_count,
                self.tree.len(),
                self.branched_count
            ));
        }
        for node in &self.tree {
            let branched = node.status == NodeStatus::Branched;
            if branched != node.branch_var.is_some() || branched != node.children.is_some() {
                return Err(format!(
                    "node {}: status/branch_var/children disagree",
                    node.id
                ));
            }
            let Some([left, right]) = node.children else {
                continue;
            };
            let j = node.branch_var.expect("checked above");
            let parent_value = node.lp_value().expect("branched nodes are feasible");
            if node.fixed.is_fixed(j) {
                return Err(format!("node {}: branched on fixed variable {j}", node.id));
            }
            for (child, value) in [(left, 0u8), (right, 1u8)] {
                let c = &self.tree[child];
                if c.parent != Some(node.id) || c.depth != node.depth + 1 {
                    return Err(format!("node {child}: bad parent link"));
                }
                if c.fixed != node.fixed.with(j, value) {
                    return Err(format!(
                        "node {child}: fixings are not parent + x_{j} = {value}"
                    ));
                }
                if let Some(v) = c.lp_value() {
                    if v > parent_value + 1e-9 {
                        return Err(format!(
                            "node {child}: LP value {v} exceeds parent value {parent_value}"
                        ));
                    }
                }
            }
        }
        Ok(())
    }

    /// One line per node: `id parent status branch_var lp_value depth`, with
    /// `-` for a missing parent, branching variable or (infeasible) LP value.
    pub fn write_tree_dump<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "# id parent status branch_var lp_value depth")?;
        for node in &self.tree {
            let parent = node.parent.map_or("-".to_string(), |p| p.to_string());
            let var = node.branch_var.map_or("-".to_string(), |j| j.to_string());
            let value = node.lp_value().map_or("-".to_string(), |v| v.to_string());
            writeln!(
                w,
                "{} {} {} {} {} {}",
                node.id,
                parent,
                node.status.as_str(),
                var,
                value,
                node.depth
            )?;
        }
        Ok(())
    }

    /// Compact JSON-friendly summary without the node list.
    pub fn summary(&self) -> BbSummary {
        BbSummary {
            outcome: self.outcome,
            node_rule: self.node_rule,
            opt_value: self.opt_value,
            opt_solution: self.opt_solution.as_ref().map(|x| bitstring(x)),
            root_lp_value: self.root().lp_value(),
            node_count: self.node_count,
            branched_count: self.branched_count,
            prune_counts: self.prune_counts,
            max_depth: self.tree.iter().map(|n| n.depth).max().unwrap_or(0),
            max_fractional: self.max_fractional(),
            incumbent_trace: self.incumbent_trace.clone(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BbSummary {
    pub outcome: BbOutcome,
    pub node_rule: NodeRule,
    pub opt_value: Option<f64>,
    pub opt_solution: Option<String>,
    pub root_lp_value: Option<f64>,
    pub node_count: usize,
    pub branched_count: usize,
    pub prune_counts: PruneCounts,
    pub max_depth: usize,
    pub max_fractional: usize,
    pub incumbent_trace: Vec<(usize, f64)>,
}

/// `"0110..."` rendering of a 0/1 vector.
pub fn bitstring(x: &[u8]) -> String {
    x.iter().map(|&v| if v == 1 { '1' } else { '0' }).collect()
}

/// Looks for a branching script that makes the tree large.
///
/// Every run with script prefix `P` fixes a full branching sequence; each
/// alternative fractional choice at a position past `P` yields a new prefix.
/// Prefixes are explored depth-first, earliest positions first, for at most
/// `max_runs` solves. Returns the full branching sequence of the largest tree
/// seen and its node count.
pub fn search_adversarial_script(
    inst: &PackingInstance,
    node_rule: NodeRule,
    max_runs: usize,
) -> Result<(Vec<usize>, usize), BbError> {
    let mut stack: Vec<Vec<usize>> = vec![Vec::new()];
    let mut best: (Vec<usize>, usize) = (Vec::new(), 0);
    let mut runs = 0;
    while runs < max_runs {
        let Some(prefix) = stack.pop() else { break };
        let result = solve(
            inst,
            &VariableRule::AdversarialReplay {
                script: prefix.clone(),
            },
            node_rule,
        )?;
        runs += 1;
        let choices: Vec<usize> = result
            .branch_order
            .iter()
            .map(|&id| result.tree[id].branch_var.expect("branched"))
            .collect();
        for k in (prefix.len()..choices.len()).rev() {
            let id = result.branch_order[k];
            let fractional = &result.tree[id].lp.vertex().expect("branched").fractional;
            for &f in fractional.iter().rev().filter(|&&f| f != choices[k]) {
                let mut next = choices[..k].to_vec();
                next.push(f);
                stack.push(next);
            }
        }
        if result.node_count > best.1 {
            best = (choices, result.node_count);
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn running_example() -> PackingInstance {
        PackingInstance::new(vec![vec![0.6, 0.5]], vec![0.9, 0.5], vec![0.8]).unwrap()
    }

    #[test]
    fn running_example_trace() {
        let inst = running_example();
        let res = solve(&inst, &VariableRule::First, NodeRule::BestBound).unwrap();
        assert_eq!(res.outcome, BbOutcome::Completed);
        assert_eq!(res.node_count, 5);
        assert_eq!(res.branched_count, 2);
        assert!((res.opt_value.unwrap() - 0.9).abs() < 1e-12);
        assert_eq!(res.opt_solution.as_deref(), Some(&[1u8, 0][..]));
        // Root branches on x_2 (index 1); the x_2 = 1 child branches on x_1.
        assert_eq!(res.tree[0].branch_var, Some(1));
        assert_eq!(res.tree[2].branch_var, Some(0));
        assert!((res.tree[2].lp_value().unwrap() - 0.95).abs() < 1e-12);
        assert_eq!(res.tree[4].status, NodeStatus::PrunedInfeasible);
        assert_eq!(
            res.prune_counts,
            PruneCounts {
                integrality: 2,
                infeasible: 1,
                bound: 0
            }
        );
        res.verify_integrity().unwrap();
        // Best-bound pops the 0.9 leaf before the 0.5 leaf, so one update.
        let trace: Vec<usize> = res.incumbent_trace.iter().map(|t| t.0).collect();
        assert_eq!(trace, vec![1]);
        assert_eq!(res.tree[3].status, NodeStatus::PrunedIntegrality);
    }

    #[test]
    fn integral_root_is_a_single_node() {
        let base = PackingInstance::generate(2, 10, &[0.3, 0.3], 5).unwrap();
        let rows: Vec<Vec<f64>> = (0..2).map(|i| base.row(i).to_vec()).collect();
        let inst = PackingInstance::new(rows, base.c().to_vec(), vec![10.0, 10.0]).unwrap();
        let res = solve(&inst, &VariableRule::First, NodeRule::BestBound).unwrap();
        assert_eq!(res.node_count, 1);
        assert_eq!(res.tree[0].status, NodeStatus::PrunedIntegrality);
    }

    #[test]
    fn select_node_prefers_value_then_lowest_id() {
        assert_eq!(select_node(&[(0, 0.9), (1, 0.95)]), Some(1));
        assert_eq!(select_node(&[(4, 0.9), (2, 0.9)]), Some(2));
        assert_eq!(select_node(&[(7, 0.1)]), Some(7));
        assert_eq!(select_node(&[]), None);
    }

    fn vertex_with(x: Vec<f64>, fractional: Vec<usize>) -> LpVertex {
        LpVertex {
            value: 0.0,
            lambda: vec![],
            mu: vec![0.0; x.len()],
            x,
            fractional,
            fixed_correction: 0.0,
            iterations: 0,
        }
    }

    #[test]
    fn variable_rules() {
        let v = vertex_with(vec![0.0, 0.0, 0.3, 0.0, 0.0, 0.6], vec![2, 5]);
        assert_eq!(
            VariableSelector::new(VariableRule::First)
                .select(0, &v)
                .unwrap(),
            2
        );
        let v = vertex_with(vec![1.0, 0.5, 0.9], vec![1, 2]);
        assert_eq!(
            VariableSelector::new(VariableRule::MostFractional)
                .select(0, &v)
                .unwrap(),
            1
        );

        let v = vertex_with(vec![0.5; 6], (0..6).collect());
        let picks = |seed| {
            let mut s = VariableSelector::new(VariableRule::Random { seed });
            (0..10)
                .map(|_| s.select(0, &v).unwrap())
                .collect::<Vec<_>>()
        };
        assert_eq!(picks(3), picks(3));

        let mut replay =
            VariableSelector::new(VariableRule::AdversarialReplay { script: vec![4, 9] });
        assert_eq!(replay.select(0, &v).unwrap(), 4);
        assert!(matches!(
            replay.select(1, &v),
            Err(BbError::InvalidScript {
                position: 1,
                index: 9,
                ..
            })
        ));
        // Exhausted script falls back to the lowest fractional index.
        assert_eq!(replay.select(2, &v).unwrap(), 0);
    }

    #[test]
    fn budget_exhaustion_returns_partial_tree() {
        let inst = PackingInstance::generate(2, 30, &[0.25, 0.3], 17).unwrap();
        let full = solve(&inst, &VariableRule::First, NodeRule::BestBound).unwrap();
        assert!(full.node_count > 3, "instance too easy for this test");
        let config = BbConfig {
            node_budget: 3,
            ..BbConfig::default()
        };
        let partial =
            solve_with(&inst, &VariableRule::First, NodeRule::BestBound, &config).unwrap();
        assert_eq!(partial.outcome, BbOutcome::BudgetExhausted);
        assert_eq!(partial.node_count, 3);
        assert!(partial.tree.iter().any(|n| n.status == NodeStatus::Open));
    }

    #[test]
    fn depth_first_agrees_on_optimum() {
        let inst = PackingInstance::generate(1, 25, &[0.3], 99).unwrap();
        let bb = solve(&inst, &VariableRule::First, NodeRule::BestBound).unwrap();
        let df = solve(&inst, &VariableRule::First, NodeRule::DepthFirst).unwrap();
        assert!((bb.opt_value.unwrap() - df.opt_value.unwrap()).abs() < 1e-9);
        assert!(bb.node_count <= df.node_count);
        df.verify_integrity().unwrap();
    }

    #[test]
    fn tree_dump_format() {
        let res = solve(
            &running_example(),
            &VariableRule::First,
            NodeRule::BestBound,
        )
        .unwrap();
        let mut buf = Vec::new();
        res.write_tree_dump(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 6);
        assert_eq!(lines[1], "0 - branched 1 1.1 0");
        assert_eq!(lines[5], "4 2 pruned_infeasible - - 2");
    }
}
