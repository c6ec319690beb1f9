//! Dense two-phase simplex with Bland's rule, plus its own standard-form
//! build of the dispatch LP. Shares no code with the library solver path.

#![allow(dead_code)]

use spectral_dispatch::DispatchProblem;

const EPS: f64 = 1e-9;

/// `min cᵀx` s.t. `A x = b`, `x ≥ 0`. Returns `(objective, x)` or `None`
/// when infeasible or unbounded.
pub fn simplex(a: &[Vec<f64>], b: &[f64], c: &[f64]) -> Option<(f64, Vec<f64>)> {
    let m = a.len();
    let n = c.len();
    // Tableau columns: n originals, m artificials, then rhs.
    let width = n + m + 1;
    let mut t = vec![vec![0.0; width]; m];
    for i in 0..m {
        let sign = if b[i] < 0.0 { -1.0 } else { 1.0 };
        for j in 0..n {
            t[i][j] = sign * a[i][j];
        }
        t[i][n + i] = 1.0;
        t[i][width - 1] = sign * b[i];
    }
    let mut basis: Vec<usize> = (n..n + m).collect();

    let phase1: Vec<f64> = (0..n + m).map(|j| if j >= n { 1.0 } else { 0.0 }).collect();
    run(&mut t, &mut basis, &phase1, n + m)?;
    let infeas: f64 = basis
        .iter()
        .enumerate()
        .filter(|(_, &j)| j >= n)
        .map(|(i, _)| t[i][width - 1])
        .sum();
    if infeas > 1e-7 {
        return None;
    }
    // Pivot remaining artificials out; rows that stay are redundant.
    let mut keep = vec![true; m];
    for i in 0..m {
        if basis[i] >= n {
            match (0..n).find(|&j| t[i][j].abs() > EPS) {
                Some(j) => pivot(&mut t, &mut basis, i, j),
                None => keep[i] = false,
            }
        }
    }
    let mut t2: Vec<Vec<f64>> = Vec::new();
    let mut basis2 = Vec::new();
    for i in 0..m {
        if keep[i] {
            let mut row: Vec<f64> = t[i][..n].to_vec();
            row.push(t[i][width - 1]);
            t2.push(row);
            basis2.push(basis[i]);
        }
    }
    run(&mut t2, &mut basis2, c, n)?;
    let mut x = vec![0.0; n];
    for (i, &j) in basis2.iter().enumerate() {
        x[j] = t2[i][n];
    }
    let obj = c.iter().zip(&x).map(|(a, b)| a * b).sum();
    Some((obj, x))
}

fn pivot(t: &mut [Vec<f64>], basis: &mut [usize], row: usize, col: usize) {
    let p = t[row][col];
    for v in t[row].iter_mut() {
        *v /= p;
    }
    let pivot_row = t[row].clone();
    for (i, r) in t.iter_mut().enumerate() {
        if i != row {
            let f = r[col];
            if f != 0.0 {
                for (v, pv) in r.iter_mut().zip(&pivot_row) {
                    *v -= f * pv;
                }
            }
        }
    }
    basis[row] = col;
}

/// Minimises `cost` over the first `cols` columns from the current basis.
fn run(t: &mut [Vec<f64>], basis: &mut [usize], cost: &[f64], cols: usize) -> Option<()> {
    let rhs = t.first().map_or(0, |r| r.len() - 1);
    loop {
        let entering = (0..cols).find(|&j| {
            if basis.contains(&j) {
                return false;
            }
            let reduced = cost[j] - basis.iter().enumerate().map(|(i, &b)| cost[b] * t[i][j]).sum::<f64>();
            reduced < -EPS
        });
        let Some(j) = entering else { return Some(()) };
        let mut best: Option<(usize, f64)> = None;
        for i in 0..t.len() {
            if t[i][j] > EPS {
                let ratio = t[i][rhs] / t[i][j];
                best = match best {
                    None => Some((i, ratio)),
                    Some((bi, br)) => {
                        if ratio < br - EPS || (ratio <= br + EPS && basis[i] < basis[bi]) {
                            Some((i, ratio))
                        } else {
                            Some((bi, br))
                        }
                    }
                };
            }
        }
        let (i, _) = best?;
        pivot(t, basis, i, j);
    }
}

/// Optimal cost of the dispatch LP over `hours`, with every finite upper
/// bound turned into `x + s = u` and net export eliminated.
pub fn dispatch_objective(problem: &DispatchProblem, hours: usize) -> Option<f64> {
    let mut cost: Vec<f64> = Vec::new();
    let mut upper: Vec<f64> = Vec::new();
    let mut add = |c: f64, u: f64| {
        cost.push(c);
        upper.push(u);
        cost.len() - 1
    };
    let zone = |id: &str| problem.zones.iter().position(|z| z.id == id).unwrap();
    let mut rows: Vec<(Vec<(usize, f64)>, f64)> = Vec::new();
    let mut prev_energy: Vec<Option<usize>> = vec![None; problem.storages.len()];
    for t in 0..hours {
        let gen: Vec<usize> = problem.plants.iter().map(|p| add(p.cost, p.capacity)).collect();
        let res: Vec<usize> = problem.zones.iter().map(|z| add(0.0, z.res_availability[t])).collect();
        let lost: Vec<usize> = problem.zones.iter().map(|z| add(problem.voll, z.demand[t])).collect();
        let flow: Vec<usize> = problem.interconnectors.iter().map(|l| add(0.0, l.ntc)).collect();
        let ch: Vec<usize> = problem.storages.iter().map(|s| add(0.0, s.max_charge)).collect();
        let dis: Vec<usize> = problem.storages.iter().map(|s| add(0.0, s.max_discharge)).collect();
        let en: Vec<usize> = problem.storages.iter().map(|s| add(0.0, s.energy_capacity)).collect();
        for (m, z) in problem.zones.iter().enumerate() {
            let mut row = vec![(res[m], 1.0), (lost[m], 1.0)];
            for (k, p) in problem.plants.iter().enumerate() {
                if zone(&p.zone) == m {
                    row.push((gen[k], 1.0));
                }
            }
            for (l, line) in problem.interconnectors.iter().enumerate() {
                if zone(&line.to) == m {
                    row.push((flow[l], 1.0));
                }
                if zone(&line.from) == m {
                    row.push((flow[l], -1.0));
                }
            }
            for (s, st) in problem.storages.iter().enumerate() {
                if zone(&st.zone) == m {
                    row.push((dis[s], 1.0));
                    row.push((ch[s], -1.0));
                }
            }
            rows.push((row, z.demand[t]));
        }
        for (s, st) in problem.storages.iter().enumerate() {
            let r = st.efficiency.sqrt();
            let mut row = vec![(en[s], 1.0), (ch[s], -r), (dis[s], 1.0 / r)];
            let rhs = match prev_energy[s] {
                Some(p) => {
                    row.push((p, -1.0));
                    0.0
                }
                None => st.initial_energy,
            };
            rows.push((row, rhs));
            prev_energy[s] = Some(en[s]);
        }
    }
    let n = cost.len();
    let total = 2 * n;
    let mut a = Vec::new();
    let mut b = Vec::new();
    for (terms, rhs) in rows {
        let mut r = vec![0.0; total];
        for (j, v) in terms {
            r[j] += v;
        }
        a.push(r);
        b.push(rhs);
    }
    for j in 0..n {
        let mut r = vec![0.0; total];
        r[j] = 1.0;
        r[n + j] = 1.0;
        a.push(r);
        b.push(upper[j]);
    }
    let mut c = cost;
    c.resize(total, 0.0);
    simplex(&a, &b, &c).map(|(obj, _)| obj)
}
