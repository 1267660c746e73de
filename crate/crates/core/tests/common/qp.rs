//! Exact solution of small SVM duals by enumerating active sets.
//!
//! Every variable is either at 0, at its upper bound, or free. For each of
//! the 3ⁿ patterns the stationarity conditions on the free variables plus the
//! equality constraint form a square linear system; the best feasible
//! solution over all patterns is the optimum. The winner's KKT conditions are
//! verified before it is returned.

use lmdiff::corpus::Label;
use lmdiff::svm::{KernelSpec, SvmModel, SvmParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub struct QpSolution {
    pub alpha: Vec<f64>,
    pub objective: f64,
}

pub fn dual_objective(q: &[Vec<f64>], alpha: &[f64]) -> f64 {
    let n = alpha.len();
    let mut quad = 0.0;
    for i in 0..n {
        for j in 0..n {
            quad += alpha[i] * q[i][j] * alpha[j];
        }
    }
    0.5 * quad - alpha.iter().sum::<f64>()
}

/// Gaussian elimination with partial pivoting; `None` when singular.
fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    let scale = a.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
    for col in 0..n {
        let pivot = (col..n).max_by(|&r, &s| a[r][col].abs().total_cmp(&a[s][col].abs()))?;
        if a[pivot][col].abs() < 1e-10 * scale {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for r in col + 1..n {
            let f = a[r][col] / a[col][col];
            for c in col..n {
                a[r][c] -= f * a[col][c];
            }
            b[r] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|c| a[r][c] * x[c]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    Some(x)
}

/// Minimize ½αᵀQα − Σα subject to yᵀα = 0 and 0 ≤ αᵢ ≤ upperᵢ.
pub fn exact_dual(q: &[Vec<f64>], y: &[f64], upper: &[f64]) -> QpSolution {
    let n = y.len();
    assert!(n <= 12, "enumeration oracle is for tiny problems");
    let feas = 1e-10;
    let mut best: Option<(f64, Vec<f64>, f64)> = None;
    let mut pattern = vec![0u8; n];
    loop {
        let free: Vec<usize> = (0..n).filter(|&i| pattern[i] == 2).collect();
        let mut alpha: Vec<f64> = (0..n).map(|i| if pattern[i] == 1 { upper[i] } else { 0.0 }).collect();
        let bound_sum: f64 = (0..n).filter(|&i| pattern[i] != 2).map(|i| y[i] * alpha[i]).sum();
        let m = free.len();
        // Unknowns: α_F then the multiplier ν of the equality constraint.
        let mut a = vec![vec![0.0; m + 1]; m + 1];
        let mut b = vec![0.0; m + 1];
        for (r, &i) in free.iter().enumerate() {
            for (c, &j) in free.iter().enumerate() {
                a[r][c] = q[i][j];
            }
            a[r][m] = y[i];
            b[r] = 1.0 - (0..n).filter(|&j| pattern[j] == 1).map(|j| q[i][j] * alpha[j]).sum::<f64>();
            a[m][r] = y[i];
        }
        b[m] = -bound_sum;
        let candidate = if m == 0 {
            (bound_sum.abs() < feas).then_some(f64::NAN)
        } else {
            solve(a, b).and_then(|x| {
                for (r, &i) in free.iter().enumerate() {
                    if x[r] < -feas || x[r] > upper[i] + feas {
                        return None;
                    }
                    alpha[i] = x[r].clamp(0.0, upper[i]);
                }
                Some(x[m])
            })
        };
        if let Some(nu) = candidate {
            let obj = dual_objective(q, &alpha);
            if best.as_ref().is_none_or(|(o, _, _)| obj < *o) {
                best = Some((obj, alpha, nu));
            }
        }
        // Next pattern in base 3.
        let mut k = 0;
        while k < n && pattern[k] == 2 {
            pattern[k] = 0;
            k += 1;
        }
        if k == n {
            break;
        }
        pattern[k] += 1;
    }
    let (objective, alpha, nu) = best.expect("some feasible active set");
    verify_kkt(q, y, upper, &alpha, nu);
    QpSolution { alpha, objective }
}

/// Stationarity with multiplier ν: gᵢ + νyᵢ is 0 for free, ≥ 0 at the lower
/// and ≤ 0 at the upper bound, where g = Qα − 1. With no free variable ν is
/// only constrained to an interval, which must be nonempty.
fn verify_kkt(q: &[Vec<f64>], y: &[f64], upper: &[f64], alpha: &[f64], nu: f64) {
    let n = y.len();
    let tol = 1e-7;
    let g: Vec<f64> = (0..n).map(|i| (0..n).map(|j| q[i][j] * alpha[j]).sum::<f64>() - 1.0).collect();
    let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
    for i in 0..n {
        // Each bound condition is a half-line for ν.
        let at_lower = alpha[i] <= 1e-12;
        let at_upper = alpha[i] >= upper[i] - 1e-12;
        if !at_lower && !at_upper {
            if !nu.is_nan() {
                assert!((g[i] + nu * y[i]).abs() < tol, "free variable {i} not stationary");
            }
            continue;
        }
        // at_lower: g + νy ≥ 0; at_upper: g + νy ≤ 0.
        let bound = -g[i] / y[i];
        let nu_at_least = (at_lower && y[i] > 0.0) || (at_upper && y[i] < 0.0);
        if nu_at_least {
            lo = lo.max(bound);
        } else {
            hi = hi.min(bound);
        }
    }
    if nu.is_nan() {
        assert!(lo <= hi + tol, "no multiplier satisfies the bound conditions");
    } else {
        assert!(nu >= lo - tol && nu <= hi + tol, "multiplier violates bound conditions");
    }
}

/// Cholesky of `k + shift·I`; succeeds iff its smallest eigenvalue exceeds
/// `-shift`.
pub fn is_psd_with_shift(k: &[Vec<f64>], shift: f64) -> bool {
    let n = k.len();
    let mut l = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..=i {
            let s: f64 = (0..j).map(|p| l[i][p] * l[j][p]).sum();
            if i == j {
                let d = k[i][i] + shift - s;
                if d <= 0.0 {
                    return false;
                }
                l[i][i] = d.sqrt();
            } else {
                l[i][j] = (k[i][j] - s) / l[j][j];
            }
        }
    }
    true
}

pub struct SvmFixture {
    pub name: &'static str,
    pub x: Vec<Vec<f64>>,
    pub y: Vec<Label>,
    pub params: SvmParams,
}

fn label(positive: bool) -> Label {
    if positive { Label::Satire } else { Label::True }
}

/// Small training sets covering separable, overlapping, nonlinear and
/// class-weighted cases, all with at most 10 points.
pub fn svm_fixtures() -> Vec<SvmFixture> {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut fixtures = vec![
        SvmFixture {
            name: "symmetric pair",
            x: vec![vec![-1.0], vec![1.0]],
            y: vec![Label::True, Label::Satire],
            params: SvmParams { kernel: KernelSpec::linear(), ..Default::default() },
        },
        SvmFixture {
            name: "xor quadratic",
            x: vec![vec![0.0, 0.0], vec![1.0, 1.0], vec![0.0, 1.0], vec![1.0, 0.0]],
            y: vec![Label::True, Label::True, Label::Satire, Label::Satire],
            params: SvmParams { kernel: KernelSpec::polynomial(2, None, 1.0), c: 10.0, ..Default::default() },
        },
    ];
    // 8 separable points in the plane.
    let sep: Vec<Vec<f64>> = (0..8)
        .map(|i| {
            let side = if i < 4 { -1.0 } else { 1.0 };
            vec![side * rng.gen_range(0.8..2.5) + rng.gen_range(-0.3..0.3), rng.gen_range(-2.0..2.0)]
        })
        .collect();
    fixtures.push(SvmFixture {
        name: "separable 8 linear",
        y: sep.iter().map(|r| label(r[0] > 0.0)).collect(),
        x: sep,
        params: SvmParams { kernel: KernelSpec::linear(), ..Default::default() },
    });
    // Overlapping classes leave some multipliers at C.
    let noisy: Vec<(Vec<f64>, Label)> = (0..10)
        .map(|i| {
            let positive = i % 2 == 0;
            let centre = if positive { 0.5 } else { -0.5 };
            (vec![centre + rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)], label(positive))
        })
        .collect();
    for (name, kernel) in [
        ("overlap 10 linear", KernelSpec::linear()),
        ("overlap 10 cubic", KernelSpec::default()),
        ("overlap 10 cubic coef0", KernelSpec::polynomial(3, Some(0.3), 1.0)),
    ] {
        fixtures.push(SvmFixture {
            name,
            x: noisy.iter().map(|p| p.0.clone()).collect(),
            y: noisy.iter().map(|p| p.1).collect(),
            params: SvmParams { kernel, ..Default::default() },
        });
    }
    let nine: Vec<Vec<f64>> = (0..9).map(|_| (0..9).map(|_| rng.gen_range(-3.0..3.0)).collect()).collect();
    fixtures.push(SvmFixture {
        name: "nine-dim weighted",
        y: nine.iter().map(|r| label(r[0] + r[1] - r[2] > 0.5)).collect(),
        x: nine,
        params: SvmParams { c: 0.7, satire_weight: 3.0, ..Default::default() },
    });
    fixtures
}

/// Q matrix and bounds of the problem `model` was trained on.
pub fn dual_problem(model: &SvmModel, fx: &SvmFixture) -> (Vec<Vec<f64>>, Vec<f64>, Vec<f64>) {
    let z: Vec<Vec<f64>> = fx.x.iter().map(|r| model.scaler().apply(r)).collect();
    let y: Vec<f64> = fx.y.iter().map(|l| l.sign()).collect();
    let q = (0..z.len())
        .map(|i| (0..z.len()).map(|j| y[i] * y[j] * model.kernel().eval(&z[i], &z[j])).collect())
        .collect();
    let upper = fx
        .y
        .iter()
        .map(|l| if *l == Label::Satire { fx.params.c * fx.params.satire_weight } else { fx.params.c })
        .collect();
    (q, y, upper)
}

/// Dual objective recomputed from the stored support vectors alone.
pub fn model_objective(model: &SvmModel) -> f64 {
    let svs: Vec<&[f64]> = model.support_vectors().collect();
    let coef = model.dual_coef();
    let mut quad = 0.0;
    for i in 0..svs.len() {
        for j in 0..svs.len() {
            quad += coef[i] * coef[j] * model.kernel().eval(svs[i], svs[j]);
        }
    }
    0.5 * quad - coef.iter().map(|c| c.abs()).sum::<f64>()
}
