//! Sequential minimal optimization for
//!
//!   min ½αᵀQα − Σα   s.t.  yᵀα = 0,  0 ≤ αᵢ ≤ Cᵢ,   Qᵢⱼ = yᵢyⱼK(xᵢ, xⱼ)
//!
//! with second-order working-set selection (Fan, Chen & Lin 2005).

use super::KernelSpec;
use std::collections::HashMap;
use std::rc::Rc;

/// Curvature floor for non-positive-definite pairs.
const TAU: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct SmoOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub cache_bytes: usize,
}

impl Default for SmoOptions {
    fn default() -> Self {
        SmoOptions {
            tol: 1e-3,
            max_iter: 10_000_000,
            cache_bytes: 256 << 20,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DualSolution {
    pub alpha: Vec<f64>,
    /// Decision function is Σ αᵢyᵢK(xᵢ, x) − rho.
    pub rho: f64,
    pub objective: f64,
    pub iterations: usize,
    pub kkt_gap: f64,
    pub converged: bool,
}

/// Rows of Q, either precomputed in full or held in a least-recently-used
/// cache sized by `cache_bytes`.
struct QMatrix<'a> {
    data: &'a [f64],
    dim: usize,
    y: &'a [f64],
    kernel: &'a KernelSpec,
    diag: Vec<f64>,
    capacity: usize,
    rows: HashMap<usize, (u64, Rc<[f64]>)>,
    clock: u64,
}

impl<'a> QMatrix<'a> {
    fn new(data: &'a [f64], dim: usize, y: &'a [f64], kernel: &'a KernelSpec, cache_bytes: usize) -> Self {
        let n = y.len();
        let diag = (0..n).map(|i| kernel.eval(&data[i * dim..(i + 1) * dim], &data[i * dim..(i + 1) * dim])).collect();
        let row_bytes = std::mem::size_of_val(y);
        QMatrix {
            data,
            dim,
            y,
            kernel,
            diag,
            capacity: (cache_bytes / row_bytes.max(1)).max(2),
            rows: HashMap::new(),
            clock: 0,
        }
    }

    fn x(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    fn row(&mut self, i: usize) -> Rc<[f64]> {
        self.clock += 1;
        if let Some(entry) = self.rows.get_mut(&i) {
            entry.0 = self.clock;
            return entry.1.clone();
        }
        if self.rows.len() >= self.capacity {
            let oldest = *self.rows.iter().min_by_key(|(_, (stamp, _))| *stamp).expect("nonempty cache").0;
            self.rows.remove(&oldest);
        }
        let xi = self.x(i);
        let row: Rc<[f64]> = (0..self.y.len())
            .map(|k| self.y[i] * self.y[k] * self.kernel.eval(xi, self.x(k)))
            .collect();
        self.rows.insert(i, (self.clock, row.clone()));
        row
    }
}

/// Solve the dual for row-major `data` (width `dim`), labels `y` in {−1, +1}
/// and per-row upper bounds `upper`.
pub fn solve_dual(
    data: &[f64],
    dim: usize,
    y: &[f64],
    upper: &[f64],
    kernel: &KernelSpec,
    options: &SmoOptions,
) -> DualSolution {
    let n = y.len();
    let mut q = QMatrix::new(data, dim, y, kernel, options.cache_bytes);
    let mut alpha = vec![0.0; n];
    let mut grad = vec![-1.0; n];
    let is_upper = |a: f64, i: usize| a >= upper[i];
    let is_lower = |a: f64| a <= 0.0;

    let mut iterations = 0;
    let mut kkt_gap;
    loop {
        // Maximal violating index from I_up.
        let mut g_max = f64::NEG_INFINITY;
        let mut i_sel = None;
        for t in 0..n {
            let v = -y[t] * grad[t];
            let eligible = if y[t] > 0.0 { !is_upper(alpha[t], t) } else { !is_lower(alpha[t]) };
            if eligible && v >= g_max {
                g_max = v;
                i_sel = Some(t);
            }
        }
        // Partner from I_low maximizing the second-order decrease.
        let mut g_max2 = f64::NEG_INFINITY;
        let mut j_sel = None;
        let q_i = i_sel.map(|i| q.row(i));
        let mut best = f64::INFINITY;
        for t in 0..n {
            let eligible = if y[t] > 0.0 { !is_lower(alpha[t]) } else { !is_upper(alpha[t], t) };
            if !eligible {
                continue;
            }
            let v = y[t] * grad[t];
            g_max2 = g_max2.max(v);
            let (Some(i), Some(q_i)) = (i_sel, q_i.as_ref()) else { continue };
            let diff = g_max + v;
            if diff > 0.0 {
                let quad = q.diag[i] + q.diag[t] - 2.0 * y[i] * y[t] * q_i[t];
                let obj = -(diff * diff) / if quad > 0.0 { quad } else { TAU };
                if obj <= best {
                    best = obj;
                    j_sel = Some(t);
                }
            }
        }
        kkt_gap = g_max + g_max2;
        let (Some(i), Some(j)) = (i_sel, j_sel) else {
            kkt_gap = kkt_gap.max(0.0);
            break;
        };
        if kkt_gap < options.tol || iterations >= options.max_iter {
            break;
        }
        iterations += 1;

        let q_i = q_i.expect("row of i");
        let q_j = q.row(j);
        let (old_i, old_j) = (alpha[i], alpha[j]);
        let (c_i, c_j) = (upper[i], upper[j]);
        if y[i] != y[j] {
            let quad = (q.diag[i] + q.diag[j] + 2.0 * q_i[j]).max(TAU);
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > c_i - c_j {
                if alpha[i] > c_i {
                    alpha[i] = c_i;
                    alpha[j] = c_i - diff;
                }
            } else if alpha[j] > c_j {
                alpha[j] = c_j;
                alpha[i] = c_j + diff;
            }
        } else {
            let quad = (q.diag[i] + q.diag[j] - 2.0 * q_i[j]).max(TAU);
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c_i {
                if alpha[i] > c_i {
                    alpha[i] = c_i;
                    alpha[j] = sum - c_i;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > c_j {
                if alpha[j] > c_j {
                    alpha[j] = c_j;
                    alpha[i] = sum - c_j;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }
        let (d_i, d_j) = (alpha[i] - old_i, alpha[j] - old_j);
        for k in 0..n {
            grad[k] += q_i[k] * d_i + q_j[k] * d_j;
        }
    }

    let rho = compute_rho(&alpha, &grad, y, upper);
    let objective = alpha.iter().zip(&grad).map(|(a, g)| a * (g - 1.0)).sum::<f64>() / 2.0;
    DualSolution {
        alpha,
        rho,
        objective,
        iterations,
        converged: kkt_gap < options.tol,
        kkt_gap,
    }
}

/// Average of yᵢ∇ᵢ over free variables, or the midpoint of the feasible
/// interval when every variable sits at a bound.
fn compute_rho(alpha: &[f64], grad: &[f64], y: &[f64], upper: &[f64]) -> f64 {
    let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut free, mut sum_free) = (0usize, 0.0);
    for i in 0..alpha.len() {
        let yg = y[i] * grad[i];
        if alpha[i] >= upper[i] {
            if y[i] < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if alpha[i] <= 0.0 {
            if y[i] > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            free += 1;
            sum_free += yg;
        }
    }
    if free > 0 {
        sum_free / free as f64
    } else {
        (ub + lb) / 2.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_cache_gives_identical_solution() {
        let n = 30;
        let data: Vec<f64> = (0..2 * n).map(|i| (i as f64 * 0.61).sin() * 2.0).collect();
        let y: Vec<f64> = (0..n).map(|i| if data[2 * i] + data[2 * i + 1] > 0.0 { 1.0 } else { -1.0 }).collect();
        let upper = vec![1.0; n];
        let kernel = KernelSpec::polynomial(3, Some(0.5), 1.0);
        let full = solve_dual(&data, 2, &y, &upper, &kernel, &SmoOptions::default());
        let tiny = solve_dual(
            &data,
            2,
            &y,
            &upper,
            &kernel,
            &SmoOptions {
                cache_bytes: 0,
                ..Default::default()
            },
        );
        assert_eq!(full, tiny);
        assert!(full.converged);
    }

    #[test]
    fn iteration_budget_is_reported() {
        let n = 40;
        let data: Vec<f64> = (0..n).map(|i| (i as f64 * 1.7).sin()).collect();
        let y: Vec<f64> = (0..n).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
        let out = solve_dual(
            &data,
            1,
            &y,
            &vec![100.0; n],
            &KernelSpec::linear(),
            &SmoOptions {
                tol: 1e-12,
                max_iter: 3,
                ..Default::default()
            },
        );
        assert_eq!(out.iterations, 3);
        assert!(!out.converged);
        assert!(out.kkt_gap > 1e-12);
    }
}
