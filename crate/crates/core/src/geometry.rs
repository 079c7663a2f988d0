//! Dual-based partial solutions and the geometry used to count good points.
//!
//! A dual vector `lambda in R^m` induces `x(lambda) in {0, 1, *}^n` from the
//! signs of the reduced costs `r_j = c_j - <lambda, A^j>`. Columns are viewed
//! as points `(c_j, A^j)` in `R^{m+1}`; their distance to the hyperplane
//! `H(lambda)` with normal `(1, -lambda)` is `|r_j| / sqrt(1 + |lambda|^2)`.
//! Distances are bucketed by powers of two of `ln(n) / n` (natural log).

use std::collections::{BTreeMap, HashSet};

use serde::Serialize;
use thiserror::Error;

use crate::instance::PackingInstance;
use crate::lp::{self, reduced_cost, LpError, LpSolution};
use crate::oracle::{self, OracleError};
use crate::rng::{Stream, STREAM_GEOMETRY};

/// `|r_j| <= STAR_TOL` classifies `j` as undecided.
pub const STAR_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum GeometryError {
    #[error("exact arrangement enumeration needs m = 1, got m = {0}")]
    Unsupported(usize),
    #[error("direction has norm {0}, expected 1")]
    NonUnitDirection(f64),
    #[error("point {index} has dimension {got}, expected {expected}")]
    Dimension {
        index: usize,
        expected: usize,
        got: usize,
    },
    #[error("slab width {0} is negative")]
    NegativeWidth(f64),
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Assign {
    Zero,
    One,
    Star,
}

impl Assign {
    fn symbol(self) -> char {
        match self {
            Assign::Zero => '0',
            Assign::One => '1',
            Assign::Star => '*',
        }
    }

    fn agrees(self, x: u8) -> bool {
        match self {
            Assign::Zero => x == 0,
            Assign::One => x == 1,
            Assign::Star => true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PartialSolution {
    pub lambda: Vec<f64>,
    pub assignment: Vec<Assign>,
    pub reduced_costs: Vec<f64>,
}

impl PartialSolution {
    /// Distances of the column points to `H(lambda)`.
    pub fn distances(&self) -> Vec<f64> {
        let scale = (1.0 + self.lambda.iter().map(|l| l * l).sum::<f64>()).sqrt();
        self.reduced_costs.iter().map(|r| r.abs() / scale).collect()
    }

    /// `"01*..."` rendering.
    pub fn pattern(&self) -> String {
        self.assignment.iter().map(|a| a.symbol()).collect()
    }

    pub fn star_count(&self) -> usize {
        self.assignment
            .iter()
            .filter(|a| **a == Assign::Star)
            .count()
    }
}

/// `x(lambda)` with exact reduced costs.
pub fn dual_solution(inst: &PackingInstance, lambda: &[f64]) -> PartialSolution {
    assert_eq!(lambda.len(), inst.m(), "lambda must have m entries");
    let reduced_costs: Vec<f64> = (0..inst.n())
        .map(|j| reduced_cost(inst, lambda, j))
        .collect();
    let assignment = reduced_costs
        .iter()
        .map(|&r| {
            if r > STAR_TOL {
                Assign::One
            } else if r < -STAR_TOL {
                Assign::Zero
            } else {
                Assign::Star
            }
        })
        .collect();
    PartialSolution {
        lambda: lambda.to_vec(),
        assignment,
        reduced_costs,
    }
}

/// `x` agrees with `p` wherever `p` is decided.
pub fn compatible(x: &[u8], p: &PartialSolution) -> bool {
    x.len() == p.assignment.len() && p.assignment.iter().zip(x).all(|(a, &x)| a.agrees(x))
}

/// Partial solution induced by the optimal dual of the slice LP through `x`.
pub fn slice_partial_solution(
    inst: &PackingInstance,
    x: &[u8],
) -> Result<PartialSolution, GeometryError> {
    match lp::solve_eq_lp(inst, &inst.occupation01(x))? {
        LpSolution::Optimal(v) => Ok(dual_solution(inst, &v.lambda)),
        LpSolution::Infeasible => Err(OracleError::EmptySlice.into()),
    }
}

/// Every distinct `x(lambda)` for a single-row instance.
///
/// The breakpoints `c_j / a_j` split the line into open intervals (no stars)
/// and breakpoint cells (stars exactly on the columns sharing that
/// breakpoint). Assignments are derived from the breakpoint order rather than
/// from floating-point signs; each cell carries a representative `lambda`
/// (interval midpoint, breakpoint itself, or breakpoint -/+ 1 at the ends).
pub fn enumerate_cells_1d(inst: &PackingInstance) -> Result<Vec<PartialSolution>, GeometryError> {
    if inst.m() != 1 {
        return Err(GeometryError::Unsupported(inst.m()));
    }
    let n = inst.n();
    let a = inst.row(0);
    let c = inst.c();
    let breakpoint: Vec<Option<f64>> = (0..n).map(|j| (a[j] != 0.0).then(|| c[j] / a[j])).collect();
    let mut distinct: Vec<f64> = breakpoint.iter().flatten().copied().collect();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();

    // Cell `2t` is the open interval below distinct[t] (above the previous one),
    // cell `2t + 1` is the breakpoint distinct[t]; the last cell is above all.
    let k = distinct.len();
    let mut cells = Vec::with_capacity(2 * k + 1);
    for cell in 0..=2 * k {
        let representative = if k == 0 {
            0.0
        } else if cell % 2 == 1 {
            distinct[cell / 2]
        } else if cell == 0 {
            distinct[0] - 1.0
        } else if cell == 2 * k {
            distinct[k - 1] + 1.0
        } else {
            0.5 * (distinct[cell / 2 - 1] + distinct[cell / 2])
        };
        let assignment = (0..n)
            .map(|j| match breakpoint[j] {
                None if c[j] > 0.0 => Assign::One,
                None if c[j] < 0.0 => Assign::Zero,
                None => Assign::Star,
                Some(bp) => {
                    let pos = distinct
                        .binary_search_by(|v| v.total_cmp(&bp))
                        .expect("present");
                    // Cell index of this column's breakpoint.
                    let own = 2 * pos + 1;
                    match cell.cmp(&own) {
                        std::cmp::Ordering::Equal => Assign::Star,
                        // Left of the breakpoint r_j has the sign of a_j.
                        std::cmp::Ordering::Less if a[j] > 0.0 => Assign::One,
                        std::cmp::Ordering::Less => Assign::Zero,
                        std::cmp::Ordering::Greater if a[j] > 0.0 => Assign::Zero,
                        std::cmp::Ordering::Greater => Assign::One,
                    }
                }
            })
            .collect();
        let lambda = vec![representative];
        let reduced_costs = (0..n).map(|j| reduced_cost(inst, &lambda, j)).collect();
        cells.push(PartialSolution {
            lambda,
            assignment,
            reduced_costs,
        });
    }
    Ok(cells)
}

/// Default dual sampling radius `(m + 1) * max_j c_j / min_j |A^j|` over
/// columns with positive norm.
pub fn sampling_radius(inst: &PackingInstance) -> f64 {
    let max_c = inst.c().iter().copied().fold(0.0f64, f64::max);
    let min_norm = (0..inst.n())
        .map(|j| inst.column(j).map(|a| a * a).sum::<f64>().sqrt())
        .filter(|&v| v > 0.0)
        .fold(f64::INFINITY, f64::min);
    if min_norm.is_finite() && max_c > 0.0 {
        (inst.m() + 1) as f64 * max_c / min_norm
    } else {
        1.0
    }
}

/// Distinct partial solutions from `trials` duals drawn uniformly from the
/// ball of radius [`sampling_radius`], followed by `extra_duals`, in
/// first-seen order.
pub fn sample_cells(
    inst: &PackingInstance,
    trials: usize,
    seed: u64,
    extra_duals: &[Vec<f64>],
) -> Vec<PartialSolution> {
    let m = inst.m();
    let radius = sampling_radius(inst);
    let mut rng = Stream::new(seed, STREAM_GEOMETRY);
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    let draws = (0..trials).map(|_| {
        let dir = rng.unit_vector(m);
        let r = radius * rng.uniform().powf(1.0 / m as f64);
        dir.into_iter().map(|d| d * r).collect::<Vec<f64>>()
    });
    let duals: Vec<Vec<f64>> = draws.chain(extra_duals.iter().cloned()).collect();
    for lambda in duals {
        let p = dual_solution(inst, &lambda);
        if seen.insert(p.assignment.clone()) {
            out.push(p);
        }
    }
    out
}

#[derive(Debug, Clone, Serialize)]
pub struct DistanceBuckets {
    /// `ln(n) / n`.
    pub unit: f64,
    /// `l -> J_l`, for non-empty buckets only.
    pub buckets: BTreeMap<u32, Vec<usize>>,
    pub remainder: Vec<usize>,
    pub distances: Vec<f64>,
}

impl DistanceBuckets {
    pub fn bucket(&self, level: u32) -> &[usize] {
        self.buckets.get(&level).map_or(&[], |v| v.as_slice())
    }
}

/// `J_l = {j decided : d_j in (unit 2^l, unit 2^{l+1}]}` for `l >= 1`; all
/// other indices (stars and `d_j <= 2 unit`) form the remainder.
pub fn bucketize(p: &PartialSolution, inst: &PackingInstance) -> DistanceBuckets {
    let n = inst.n();
    let unit = (n as f64).ln() / n as f64;
    let distances = p.distances();
    let mut buckets: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
    let mut remainder = Vec::new();
    for (j, &d) in distances.iter().enumerate() {
        if p.assignment[j] == Assign::Star || unit <= 0.0 || d <= 2.0 * unit {
            remainder.push(j);
            continue;
        }
        let mut level = ((d / unit).log2().ceil() as i64 - 1).max(1) as u32;
        while d > unit * 2f64.powi(level as i32 + 1) {
            level += 1;
        }
        while level > 1 && d <= unit * 2f64.powi(level as i32) {
            level -= 1;
        }
        buckets.entry(level).or_default().push(j);
    }
    DistanceBuckets {
        unit,
        buckets,
        remainder,
        distances,
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ParetoDistanceCheck {
    /// `pareto(x)`.
    pub pareto: f64,
    /// Sum of distances to `H(lambda)` over decided coordinates where `x` disagrees.
    pub distance_sum: f64,
    /// Same sum with `|r_j|` in place of the distance.
    pub reduced_cost_sum: f64,
    /// `pareto >= distance_sum - 1e-7`.
    pub holds: bool,
    /// `|pareto - reduced_cost_sum|`; zero up to rounding when `p` comes from
    /// an optimal dual of the slice through `x`.
    pub equality_error: f64,
}

/// Compares `pareto(x)` with the disagreement-weighted distances to `H(lambda)`.
///
/// `p` must be induced by an optimal dual of the slice LP at `Ax` (see
/// [`slice_partial_solution`]); this cannot be checked from `p` alone.
pub fn pareto_distance_bound(
    inst: &PackingInstance,
    x: &[u8],
    p: &PartialSolution,
) -> Result<ParetoDistanceCheck, GeometryError> {
    let pareto = oracle::pareto_gap(inst, x)?;
    let distances = p.distances();
    let mut distance_sum = 0.0;
    let mut reduced_cost_sum = 0.0;
    for j in 0..inst.n() {
        let a = p.assignment[j];
        if a != Assign::Star && !a.agrees(x[j]) {
            distance_sum += distances[j];
            reduced_cost_sum += p.reduced_costs[j].abs();
        }
    }
    Ok(ParetoDistanceCheck {
        pareto,
        distance_sum,
        reduced_cost_sum,
        holds: pareto >= distance_sum - 1e-7,
        equality_error: (pareto - reduced_cost_sum).abs(),
    })
}

/// `C = (n / ln n) * IPGap(b)`.
pub fn gap_scale(n: usize, ip_gap: f64) -> f64 {
    let ln = (n as f64).ln();
    if ln > 0.0 {
        n as f64 / ln * ip_gap.max(0.0)
    } else {
        f64::INFINITY
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct DisagreementReport {
    pub scale: f64,
    /// `(l, disagreements in J_l, ceil(C / 2^l))`.
    pub levels: Vec<(u32, usize, u64)>,
    pub holds: bool,
}

pub fn disagreement_report(
    inst: &PackingInstance,
    x: &[u8],
    p: &PartialSolution,
    ip_gap: f64,
) -> DisagreementReport {
    let scale = gap_scale(inst.n(), ip_gap);
    let buckets = bucketize(p, inst);
    let levels: Vec<(u32, usize, u64)> = buckets
        .buckets
        .iter()
        .map(|(&level, members)| {
            let count = members
                .iter()
                .filter(|&&j| !p.assignment[j].agrees(x[j]))
                .count();
            let cap = (scale / 2f64.powi(level as i32)).ceil();
            let cap = if cap.is_finite() {
                cap as u64
            } else {
                u64::MAX
            };
            (level, count, cap)
        })
        .collect();
    let holds = levels.iter().all(|&(_, count, cap)| count as u64 <= cap);
    DisagreementReport {
        scale,
        levels,
        holds,
    }
}

/// For every `l >= 1`, disagreements of `x` with `p` inside `J_l` are at most
/// `ceil(C / 2^l)`.
pub fn disagreement_caps(
    inst: &PackingInstance,
    x: &[u8],
    p: &PartialSolution,
    ip_gap: f64,
) -> bool {
    disagreement_report(inst, x, p, ip_gap).holds
}

/// `sum_{i <= k} C(n, i)` in floating point.
pub fn binomial_sum_f64(n: usize, k: u64) -> f64 {
    let mut total = 0.0;
    let mut term = 1.0;
    for i in 0..=k.min(n as u64) {
        if i > 0 {
            term = term * (n as u64 - i + 1) as f64 / i as f64;
        }
        total += term;
    }
    total
}

#[derive(Debug, Clone, Serialize)]
pub struct CountingReport {
    pub scale: f64,
    /// Number of levels in the product, `ceil(log2 C)` (0 when `C <= 1`).
    pub levels: u32,
    pub cells: usize,
    pub max_cell_factor: f64,
    pub bound: f64,
    pub census_count: u64,
    pub holds: bool,
}

/// Per-cell factor `2^{|J_rem|} prod_{l=1}^{L} C(|J_l|, <= ceil(C / 2^l))`
/// summed over `cells`, compared with the census size.
pub fn counting_bound(
    inst: &PackingInstance,
    cells: &[PartialSolution],
    ip_gap: f64,
    census_count: u64,
) -> CountingReport {
    let scale = gap_scale(inst.n(), ip_gap);
    let levels = if scale > 1.0 {
        scale.log2().ceil() as u32
    } else {
        0
    };
    let mut bound = 0.0;
    let mut max_cell_factor: f64 = 0.0;
    for cell in cells {
        let b = bucketize(cell, inst);
        let mut factor = 2f64.powi(b.remainder.len() as i32);
        for level in 1..=levels {
            let cap = (scale / 2f64.powi(level as i32)).ceil() as u64;
            factor *= binomial_sum_f64(b.bucket(level).len(), cap);
        }
        max_cell_factor = max_cell_factor.max(factor);
        bound += factor;
    }
    CountingReport {
        scale,
        levels,
        cells: cells.len(),
        max_cell_factor,
        bound,
        census_count,
        holds: census_count as f64 <= bound,
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SlabReport {
    pub direction: Vec<f64>,
    pub width: f64,
    pub count: usize,
    /// `60 n w k`.
    pub bound: f64,
    pub within_bound: bool,
}

fn check_direction(u: &[f64], w: f64) -> Result<(), GeometryError> {
    let norm = u.iter().map(|v| v * v).sum::<f64>().sqrt();
    if (norm - 1.0).abs() > 1e-9 {
        return Err(GeometryError::NonUnitDirection(norm));
    }
    if w < 0.0 {
        return Err(GeometryError::NegativeWidth(w));
    }
    Ok(())
}

/// Number of points in `S_{u,w} = {y : <u, y> in [-w, w]}`.
pub fn slab_count(points: &[Vec<f64>], u: &[f64], w: f64) -> Result<SlabReport, GeometryError> {
    check_direction(u, w)?;
    let k = u.len();
    let mut count = 0;
    for (index, y) in points.iter().enumerate() {
        if y.len() != k {
            return Err(GeometryError::Dimension {
                index,
                expected: k,
                got: y.len(),
            });
        }
        let h: f64 = y.iter().zip(u).map(|(a, b)| a * b).sum();
        if h.abs() <= w {
            count += 1;
        }
    }
    let bound = 60.0 * points.len() as f64 * w * k as f64;
    Ok(SlabReport {
        direction: u.to_vec(),
        width: w,
        count,
        bound,
        within_bound: count as f64 <= bound,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct SlabVolumeReport {
    pub estimate: f64,
    pub stderr: f64,
    /// `2 sqrt(2) w`.
    pub bound: f64,
    pub pass: bool,
    pub samples: usize,
}

/// Monte-Carlo estimate of `vol(S_{u,w} ∩ [0,1]^k)`; passes when the
/// estimate is at most `2 sqrt(2) w + 3` standard errors.
pub fn slab_volume_check(
    k: usize,
    u: &[f64],
    w: f64,
    samples: usize,
    seed: u64,
) -> Result<SlabVolumeReport, GeometryError> {
    check_direction(u, w)?;
    if u.len() != k {
        return Err(GeometryError::Dimension {
            index: 0,
            expected: k,
            got: u.len(),
        });
    }
    let mut rng = Stream::new(seed, STREAM_GEOMETRY);
    let mut hits = 0usize;
    for _ in 0..samples {
        let h: f64 = u.iter().map(|ui| ui * rng.uniform()).sum();
        if h.abs() <= w {
            hits += 1;
        }
    }
    let estimate = hits as f64 / samples.max(1) as f64;
    let stderr = (estimate * (1.0 - estimate) / samples.max(1) as f64).sqrt();
    let bound = 2.0 * std::f64::consts::SQRT_2 * w;
    Ok(SlabVolumeReport {
        estimate,
        stderr,
        bound,
        pass: estimate <= bound + 3.0 * stderr,
        samples,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct UniformSlabTrial {
    pub slabs: usize,
    /// Slabs with more than `60 n w k` points.
    pub violations: usize,
    /// Slabs with at least `20 n w k` points.
    pub single_slab_exceedances: usize,
    /// Largest `count / (n w k)` over the grid.
    pub max_ratio: f64,
}

/// Counts the column points of one instance against `directions` random slabs
/// with widths `2^i ln(n)/n`, `i = d mod 6`. Even-numbered directions are
/// uniform on the sphere, odd ones are hyperplane normals `(1, -lambda)` for
/// duals drawn from the sampling ball.
pub fn uniform_slab_trial(
    inst: &PackingInstance,
    directions: usize,
    seed: u64,
) -> Result<UniformSlabTrial, GeometryError> {
    let n = inst.n();
    let k = inst.m() + 1;
    let points = inst.column_points();
    let unit = (n as f64).ln() / n as f64;
    let radius = sampling_radius(inst);
    let mut rng = Stream::new(seed, STREAM_GEOMETRY);
    let mut out = UniformSlabTrial {
        slabs: directions,
        violations: 0,
        single_slab_exceedances: 0,
        max_ratio: 0.0,
    };
    for d in 0..directions {
        let u = if d % 2 == 0 {
            rng.unit_vector(k)
        } else {
            let dir = rng.unit_vector(k - 1);
            let r = radius * rng.uniform().powf(1.0 / (k - 1) as f64);
            let normal: Vec<f64> = std::iter::once(1.0)
                .chain(dir.iter().map(|v| -v * r))
                .collect();
            let norm = normal.iter().map(|v| v * v).sum::<f64>().sqrt();
            normal.into_iter().map(|v| v / norm).collect()
        };
        let w = unit * 2f64.powi((d % 6) as i32);
        let report = slab_count(&points, &u, w)?;
        let scale = n as f64 * w * k as f64;
        if !report.within_bound {
            out.violations += 1;
        }
        if report.count as f64 >= 20.0 * scale {
            out.single_slab_exceedances += 1;
        }
        out.max_ratio = out.max_ratio.max(report.count as f64 / scale);
    }
    Ok(out)
}
