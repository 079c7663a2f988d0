//! Reference solvers shared by the integration tests. They share no code with
//! the library's LP and enumeration paths.
#![allow(dead_code)]

use packing_bb::instance::PackingInstance;
use proptest::prelude::*;

pub const FEAS_TOL: f64 = 1e-9;

/// Subsets of `items` of size `k`, in lexicographic order.
pub fn combinations(items: &[usize], k: usize) -> Vec<Vec<usize>> {
    fn rec(
        items: &[usize],
        k: usize,
        start: usize,
        cur: &mut Vec<usize>,
        out: &mut Vec<Vec<usize>>,
    ) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..items.len() {
            cur.push(items[i]);
            rec(items, k, i + 1, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(items, k, 0, &mut Vec::new(), &mut out);
    out
}

/// Gaussian elimination with partial pivoting; `None` if (near) singular.
pub fn solve_small(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let k = b.len();
    for col in 0..k {
        let piv = (col..k).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-11 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for r in col + 1..k {
            let f = a[r][col] / a[col][col];
            for c in col..k {
                a[r][c] -= f * a[col][c];
            }
            b[r] -= f * b[col];
        }
    }
    let mut x = vec![0.0; k];
    for r in (0..k).rev() {
        let s: f64 = (r + 1..k).map(|c| a[r][c] * x[c]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    Some(x)
}

/// Optimum of `max <c,x>` over `Ax <= rhs` (or `= rhs`), `lower <= x <= upper`
/// by enumerating basic solutions: at most `m` variables strictly between
/// their bounds, determined by as many tight rows. Exponential; small n only.
pub fn brute_lp(
    inst: &PackingInstance,
    lower: &[f64],
    upper: &[f64],
    rhs: &[f64],
    equality: bool,
) -> Option<(f64, Vec<f64>)> {
    let (m, n) = (inst.m(), inst.n());
    let all: Vec<usize> = (0..n).collect();
    let rows: Vec<usize> = (0..m).collect();
    let scale = 1.0 + rhs.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let mut best: Option<(f64, Vec<f64>)> = None;
    for k in 0..=m.min(n) {
        for basic in combinations(&all, k) {
            let nonbasic: Vec<usize> = all.iter().copied().filter(|j| !basic.contains(j)).collect();
            for tight in combinations(&rows, k) {
                for mask in 0u64..(1 << nonbasic.len()) {
                    let mut x = vec![0.0; n];
                    for (bit, &j) in nonbasic.iter().enumerate() {
                        x[j] = if mask >> bit & 1 == 1 {
                            upper[j]
                        } else {
                            lower[j]
                        };
                    }
                    if k > 0 {
                        let mat = tight
                            .iter()
                            .map(|&i| basic.iter().map(|&j| inst.a(i, j)).collect())
                            .collect();
                        let r = tight
                            .iter()
                            .map(|&i| {
                                rhs[i] - nonbasic.iter().map(|&j| inst.a(i, j) * x[j]).sum::<f64>()
                            })
                            .collect();
                        let Some(xs) = solve_small(mat, r) else {
                            continue;
                        };
                        for (&j, v) in basic.iter().zip(xs) {
                            x[j] = v;
                        }
                    }
                    if basic
                        .iter()
                        .any(|&j| x[j] < lower[j] - 1e-9 || x[j] > upper[j] + 1e-9)
                    {
                        continue;
                    }
                    let ok = (0..m).all(|i| {
                        let lhs: f64 = (0..n).map(|j| inst.a(i, j) * x[j]).sum();
                        if equality {
                            (lhs - rhs[i]).abs() <= FEAS_TOL * scale
                        } else {
                            lhs <= rhs[i] + FEAS_TOL * scale
                        }
                    });
                    if !ok {
                        continue;
                    }
                    let value: f64 = (0..n).map(|j| inst.c()[j] * x[j]).sum();
                    if best.as_ref().is_none_or(|(v, _)| value > *v) {
                        best = Some((value, x));
                    }
                }
            }
        }
    }
    best
}

/// Fractional knapsack by ratio greedy (`m = 1`) under fixings.
pub fn greedy_knapsack(inst: &PackingInstance, zero: &[usize], one: &[usize]) -> Option<f64> {
    assert_eq!(inst.m(), 1);
    let (a, c) = (inst.row(0), inst.c());
    let mut cap = inst.b()[0] - one.iter().map(|&j| a[j]).sum::<f64>();
    if cap < -FEAS_TOL * (1.0 + inst.b()[0]) {
        return None;
    }
    let mut value: f64 = one.iter().map(|&j| c[j]).sum();
    let mut free: Vec<usize> = (0..inst.n())
        .filter(|j| !zero.contains(j) && !one.contains(j))
        .collect();
    for &j in &free {
        if a[j] == 0.0 {
            value += c[j];
        }
    }
    free.retain(|&j| a[j] > 0.0);
    free.sort_by(|&i, &j| (c[j] / a[j]).total_cmp(&(c[i] / a[i])));
    cap = cap.max(0.0);
    for j in free {
        if cap <= 0.0 {
            break;
        }
        let take = (cap / a[j]).min(1.0);
        value += take * c[j];
        cap -= take * a[j];
    }
    Some(value)
}

/// Best feasible 0/1 point by plain enumeration.
pub fn brute_ip(inst: &PackingInstance) -> f64 {
    let n = inst.n();
    let mut best = 0.0f64;
    for mask in 0u64..(1 << n) {
        let x: Vec<u8> = (0..n).map(|j| (mask >> j & 1) as u8).collect();
        let feasible = (0..inst.m()).all(|i| {
            let lhs: f64 = (0..n).map(|j| inst.a(i, j) * f64::from(x[j])).sum();
            lhs <= inst.b()[i] + FEAS_TOL
        });
        if feasible {
            best = best.max((0..n).map(|j| inst.c()[j] * f64::from(x[j])).sum());
        }
    }
    best
}

/// All 0/1 points of length `n`.
pub fn cube(n: usize) -> Vec<Vec<u8>> {
    (0u64..(1 << n))
        .map(|mask| (0..n).map(|j| (mask >> j & 1) as u8).collect())
        .collect()
}

/// Random instance from the generator.
pub fn generated(
    max_m: usize,
    min_n: usize,
    max_n: usize,
) -> impl Strategy<Value = PackingInstance> {
    (1..=max_m, min_n..=max_n, 0.1f64..0.45, any::<u64>()).prop_map(|(m, n, beta, seed)| {
        PackingInstance::generate(m, n.max(m + 1), &vec![beta; m], seed).unwrap()
    })
}

/// Instance with entries on a coarse grid, so that ratios tie and bases
/// degenerate.
pub fn gridded(max_m: usize, max_n: usize) -> impl Strategy<Value = PackingInstance> {
    (1..=max_m, 1..=max_n).prop_flat_map(|(m, n)| {
        let entry = (0u8..=4).prop_map(|v| f64::from(v) * 0.25);
        (
            proptest::collection::vec(proptest::collection::vec(entry.clone(), n), m),
            proptest::collection::vec(entry, n),
            proptest::collection::vec((0u8..=8).prop_map(|v| f64::from(v) * 0.25), m),
        )
            .prop_map(|(a, c, b)| PackingInstance::new(a, c, b).unwrap())
    })
}

/// Random fixings: 0 = free, 1 = fixed to zero, 2 = fixed to one.
pub fn fixings(n: usize, choice: &[u8]) -> (Vec<usize>, Vec<usize>) {
    let mut zero = Vec::new();
    let mut one = Vec::new();
    for j in 0..n {
        match choice.get(j).copied().unwrap_or(0) % 4 {
            1 => zero.push(j),
            2 => one.push(j),
            _ => {}
        }
    }
    (zero, one)
}
