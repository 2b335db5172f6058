//! Brute-force reference computations used to validate the closed forms.
//!
//! These are deliberately slow and independent of the formulas they check:
//! the envelope is computed as a convex hull over a refined lattice, and the
//! minimizers by exhaustive grids followed by pattern search.

use std::collections::HashSet;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Largest dimension accepted by [`q2_bruteforce`].
pub const MAX_ORACLE_DIM: usize = 3;

/// Evaluates `Q₂(f)(x)` by brute force for `n ≤ 3`.
///
/// `Q₂(f) + ‖·‖²` is the convex envelope of `f + ‖·‖²`, so its value at `x`
/// is the cheapest convex combination of lattice points averaging to `x`.
/// The lattice covers `[−B, B]ⁿ` with `B = n‖x‖∞ + 3·scale` and contains the
/// origin and the coordinate subspaces; it is refined locally around the
/// optimal support until the spacing is below `1e-7`. Points where `f` is
/// infinite are dropped.
pub fn q2_bruteforce<F>(f: &F, x: &[f64], scale: f64) -> Result<f64>
where
    F: Fn(&[f64]) -> f64,
{
    let n = x.len();
    if n == 0 || n > MAX_ORACLE_DIM {
        return Err(Error::OracleDimension(n));
    }
    let inf_norm = x.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let bound = n as f64 * inf_norm + 3.0 * scale.abs().max(1e-3);
    let half = 20i64;
    let mut step = bound / half as f64;

    let cost = |p: &[f64]| f(p) + p.iter().map(|v| v * v).sum::<f64>();
    let mut points: Vec<Vec<f64>> = Vec::new();
    let mut costs: Vec<f64> = Vec::new();
    for_each_lattice(n, -half, half, |idx| {
        let p: Vec<f64> = idx.iter().map(|&i| i as f64 * step).collect();
        let c = cost(&p);
        if c.is_finite() {
            points.push(p);
            costs.push(c);
        }
    });

    let mut sol = match hull_lp(&points, &costs, x) {
        Some(s) => s,
        None => return Ok(f64::INFINITY),
    };
    while step > 1e-7 {
        step /= 4.0;
        // every point is an integer multiple of the new spacing
        let key = |p: &[f64]| -> Vec<i64> { p.iter().map(|v| (v / step).round() as i64).collect() };
        let mut seen = HashSet::new();
        let mut new_points: Vec<Vec<f64>> = Vec::new();
        let mut new_costs: Vec<f64> = Vec::new();
        for &(j, _) in &sol.support {
            seen.insert(key(&points[j]));
            new_points.push(points[j].clone());
            new_costs.push(costs[j]);
        }
        for &(j, _) in &sol.support {
            let centre = points[j].clone();
            for_each_lattice(n, -4, 4, |idx| {
                if idx.iter().all(|&i| i == 0) {
                    return;
                }
                let p: Vec<f64> = centre
                    .iter()
                    .zip(idx)
                    .map(|(c, &i)| c + i as f64 * step)
                    .collect();
                if !seen.insert(key(&p)) {
                    return;
                }
                let c = cost(&p);
                if c.is_finite() {
                    new_points.push(p);
                    new_costs.push(c);
                }
            });
        }
        points = new_points;
        costs = new_costs;
        sol = hull_lp(&points, &costs, x).expect("previous support stays feasible");
    }
    let sq: f64 = x.iter().map(|v| v * v).sum();
    Ok(sol.value - sq)
}

fn for_each_lattice<G: FnMut(&[i64])>(n: usize, lo: i64, hi: i64, mut g: G) {
    let mut idx = vec![lo; n];
    loop {
        g(&idx);
        let mut d = 0;
        loop {
            if d == n {
                return;
            }
            idx[d] += 1;
            if idx[d] <= hi {
                break;
            }
            idx[d] = lo;
            d += 1;
        }
    }
}

struct LpSolution {
    value: f64,
    support: Vec<(usize, f64)>,
}

/// `min Σ λⱼ cⱼ` subject to `Σ λⱼ pⱼ = x`, `Σ λⱼ = 1`, `λ ≥ 0`.
fn hull_lp(points: &[Vec<f64>], costs: &[f64], x: &[f64]) -> Option<LpSolution> {
    let n = x.len();
    let rows = n + 1;
    let mut rhs: Vec<f64> = x.to_vec();
    rhs.push(1.0);
    let column = |j: usize| -> Vec<f64> {
        let mut c = points[j].clone();
        c.push(1.0);
        c
    };
    let lp = Simplex {
        rows,
        ncols: points.len(),
        column: &column,
        costs,
        rhs: &rhs,
    };
    let (value, basis, levels) = lp.solve()?;
    let support = basis
        .iter()
        .zip(levels.iter())
        .filter(|(&j, &l)| j < points.len() && l > 1e-14)
        .map(|(&j, &l)| (j, l))
        .collect();
    Some(LpSolution { value, support })
}

/// Dense two-phase revised simplex for small row counts and many columns.
struct Simplex<'a> {
    rows: usize,
    ncols: usize,
    column: &'a dyn Fn(usize) -> Vec<f64>,
    costs: &'a [f64],
    rhs: &'a [f64],
}

impl Simplex<'_> {
    /// Returns the optimal value, the basis (artificial columns are
    /// numbered from `ncols`) and the basic levels.
    fn solve(&self) -> Option<(f64, Vec<usize>, Vec<f64>)> {
        let r = self.rows;
        let signs: Vec<f64> = self.rhs.iter().map(|&v| if v < 0.0 { -1.0 } else { 1.0 }).collect();
        let b = DVector::from_iterator(r, self.rhs.iter().zip(&signs).map(|(v, s)| v * s));
        let col = |j: usize| -> DVector<f64> {
            if j >= self.ncols {
                let mut e = DVector::zeros(r);
                e[j - self.ncols] = 1.0;
                e
            } else {
                let c = (self.column)(j);
                DVector::from_iterator(r, c.iter().zip(&signs).map(|(v, s)| v * s))
            }
        };
        let cols: Vec<DVector<f64>> = (0..self.ncols).map(col).collect();
        let get = |j: usize| -> DVector<f64> {
            if j < self.ncols {
                cols[j].clone()
            } else {
                col(j)
            }
        };

        let mut basis: Vec<usize> = (self.ncols..self.ncols + r).collect();
        let phase1_cost = |j: usize| if j >= self.ncols { 1.0 } else { 0.0 };
        let (v1, _) = self.iterate(&mut basis, &get, &cols, &b, &phase1_cost)?;
        if v1 > 1e-9 {
            return None;
        }
        // drive artificials out where a real column can replace them
        for pos in 0..r {
            if basis[pos] < self.ncols {
                continue;
            }
            let binv = basis_inverse(&basis, &get, r)?;
            let row = binv.row(pos);
            if let Some(j) = (0..self.ncols)
                .filter(|j| !basis.contains(j))
                .find(|&j| (row * &cols[j])[0].abs() > 1e-9)
            {
                basis[pos] = j;
            }
        }
        let phase2_cost = |j: usize| if j >= self.ncols { 0.0 } else { self.costs[j] };
        let (value, levels) = self.iterate(&mut basis, &get, &cols, &b, &phase2_cost)?;
        Some((value, basis, levels))
    }

    fn iterate(
        &self,
        basis: &mut [usize],
        get: &dyn Fn(usize) -> DVector<f64>,
        cols: &[DVector<f64>],
        b: &DVector<f64>,
        cost: &dyn Fn(usize) -> f64,
    ) -> Option<(f64, Vec<f64>)> {
        let r = self.rows;
        let cmax = (0..self.ncols).map(cost).fold(1.0f64, |a, c| a.max(c.abs()));
        let tol = 1e-11 * cmax;
        let mut best = f64::INFINITY;
        let mut stalled = 0usize;
        for _ in 0..50_000 {
            let binv = basis_inverse(basis, get, r)?;
            let xb = &binv * b;
            let cb = DVector::from_iterator(r, basis.iter().map(|&j| cost(j)));
            let value = cb.dot(&xb);
            let y = binv.tr_mul(&cb);
            if value < best - 1e-15 * cmax {
                best = value;
            } else {
                stalled += 1;
            }
            // Bland's rule once degenerate pivots pile up; it cannot cycle
            let bland = stalled > 50;
            let mut entering: Option<(usize, f64)> = None;
            for (j, a) in cols.iter().enumerate() {
                if basis.contains(&j) {
                    continue;
                }
                let d = cost(j) - y.dot(a);
                if d < -tol {
                    match entering {
                        None => entering = Some((j, d)),
                        Some((_, dbest)) if !bland && d < dbest => entering = Some((j, d)),
                        _ => {}
                    }
                    if bland {
                        break;
                    }
                }
            }
            let Some((j, _)) = entering else {
                return Some((value, xb.as_slice().to_vec()));
            };
            let u = &binv * &cols[j];
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..r {
                if u[i] > 1e-12 {
                    let ratio = xb[i].max(0.0) / u[i];
                    let better = match leave {
                        None => true,
                        Some((li, lr)) => {
                            ratio < lr - 1e-15 || (ratio <= lr + 1e-15 && basis[i] < basis[li])
                        }
                    };
                    if better {
                        leave = Some((i, ratio));
                    }
                }
            }
            let (i, _) = leave?;
            basis[i] = j;
        }
        None
    }
}

fn basis_inverse(basis: &[usize], get: &dyn Fn(usize) -> DVector<f64>, r: usize) -> Option<DMatrix<f64>> {
    let mut m = DMatrix::zeros(r, r);
    for (k, &j) in basis.iter().enumerate() {
        m.set_column(k, &get(j));
    }
    m.try_inverse()
}

/// Minimizes a unimodal scalar function on `[lo, hi]`: a 2001-point grid,
/// then golden-section search on the bracketing cell.
pub fn minimize_1d<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64) -> (f64, f64) {
    let cells = 2000;
    let h = (hi - lo) / cells as f64;
    let mut best = (lo, f(lo));
    for i in 1..=cells {
        let t = lo + i as f64 * h;
        let v = f(t);
        if v < best.1 {
            best = (t, v);
        }
    }
    let (mut a, mut b) = ((best.0 - h).max(lo), (best.0 + h).min(hi));
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > 1e-13 * (1.0 + best.0.abs()) {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    let t = 0.5 * (a + b);
    let v = f(t);
    if v <= best.1 {
        (t, v)
    } else {
        best
    }
}

/// Minimizes a convex function of `n ≤ 4` variables over the box
/// `centre ± radius`: a full grid with 21 points per axis, then repeated
/// `5ⁿ` pattern moves whose spacing halves down to `1e-10`.
pub fn grid_minimize<F: Fn(&[f64]) -> f64>(f: F, centre: &[f64], radius: f64) -> (Vec<f64>, f64) {
    let n = centre.len();
    let h = radius / 10.0;
    let mut best_x = centre.to_vec();
    let mut best_v = f(&best_x);
    let mut p = vec![0.0; n];
    for_each_lattice(n, -10, 10, |idx| {
        for k in 0..n {
            p[k] = centre[k] + idx[k] as f64 * h;
        }
        let v = f(&p);
        if v < best_v {
            best_v = v;
            best_x.copy_from_slice(&p);
        }
    });
    let mut step = h / 2.0;
    while step > 1e-10 {
        loop {
            let base = best_x.clone();
            let mut moved = false;
            for_each_lattice(n, -2, 2, |idx| {
                for k in 0..n {
                    p[k] = base[k] + idx[k] as f64 * step;
                }
                let v = f(&p);
                if v < best_v {
                    best_v = v;
                    best_x.copy_from_slice(&p);
                    moved = true;
                }
            });
            if !moved {
                break;
            }
        }
        step /= 2.0;
    }
    (best_x, best_v)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lattice_enumerates_all_points() {
        let mut count = 0;
        for_each_lattice(3, -1, 1, |_| count += 1);
        assert_eq!(count, 27);
    }

    #[test]
    fn hull_of_parabola_is_parabola() {
        // f = 0: Q₂(0) = 0
        let zero = |_: &[f64]| 0.0;
        for x in [[0.0], [0.7], [-1.3]] {
            assert!(q2_bruteforce(&zero, &x, 1.0).unwrap().abs() < 1e-9);
        }
    }

    #[test]
    fn refuses_large_dimension() {
        let zero = |_: &[f64]| 0.0;
        assert!(matches!(
            q2_bruteforce(&zero, &[0.0; 4], 1.0),
            Err(Error::OracleDimension(4))
        ));
    }

    #[test]
    fn minimizers_find_quadratic_minimum() {
        let (t, _) = minimize_1d(|t| (t - 0.3).powi(2) + 1.0, -2.0, 2.0);
        assert!((t - 0.3).abs() < 1e-7);
        let (x, v) = grid_minimize(
            |p| (p[0] - 0.2).powi(2) + 3.0 * (p[1] + 0.4).powi(2) + (p[0] - p[1]).abs(),
            &[0.0, 0.0],
            2.0,
        );
        // minimizer of a convex function; check against a brute evaluation
        let mut brute = f64::INFINITY;
        for i in -400..=400 {
            for j in -400..=400 {
                let (a, b) = (i as f64 * 0.005, j as f64 * 0.005);
                brute = brute.min((a - 0.2).powi(2) + 3.0 * (b + 0.4).powi(2) + (a - b).abs());
            }
        }
        assert!(v <= brute + 1e-12);
        // the minimizer sits on the kink a = b = −1/4
        assert!((x[0] + 0.25).abs() < 1e-8 && (x[1] + 0.25).abs() < 1e-8);
    }
}
