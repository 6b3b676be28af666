//! One-class SVM trained with SMO on the nu-parameterized dual:
//!
//! minimize `0.5 a^T Q a` subject to `0 <= a_i <= 1` and `sum a_i = nu * l`,
//! with `Q_ij = K(x_i, x_j)`. Working pairs are chosen with second-order information.
//! The decision function is `sum a_i K(x_i, x) - rho`; the anomaly score is its negation.

use serde::{Deserialize, Serialize};

use super::neighbors::sq_euclidean;
use crate::error::{Error, Result};

const TAU: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Kernel {
    Rbf { gamma: f64 },
    Linear,
}

impl Kernel {
    pub fn eval(&self, a: &[f64], b: &[f64]) -> f64 {
        match self {
            Kernel::Rbf { gamma } => (-gamma * sq_euclidean(a, b)).exp(),
            Kernel::Linear => a.iter().zip(b).map(|(x, y)| x * y).sum(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OcsvmModel {
    pub(crate) kernel: Kernel,
    pub(crate) support: Vec<Vec<f64>>,
    pub(crate) coef: Vec<f64>,
    pub(crate) rho: f64,
}

/// Raw dual solution, exposed for verification.
#[derive(Debug, Clone)]
pub struct DualSolution {
    pub alpha: Vec<f64>,
    pub rho: f64,
    pub iterations: usize,
    pub gradient: Vec<f64>,
}

/// Solves the one-class dual for a precomputed kernel matrix (row-major `l x l`).
pub fn solve_dual(q: &[f64], l: usize, nu: f64, tol: f64, max_iter: usize) -> Result<DualSolution> {
    if !(nu > 0.0 && nu <= 1.0) {
        return Err(Error::InvalidConfig(format!("OCSVM nu must lie in (0, 1], got {nu}")));
    }
    let upper = 1.0;
    let total = nu * l as f64;
    let mut alpha = vec![0.0; l];
    let full = total.floor() as usize;
    for a in alpha.iter_mut().take(full.min(l)) {
        *a = 1.0;
    }
    if full < l {
        alpha[full] = total - full as f64;
    }
    let qd: Vec<f64> = (0..l).map(|i| q[i * l + i]).collect();
    let mut grad = vec![0.0; l];
    for (i, &a) in alpha.iter().enumerate() {
        if a != 0.0 {
            for (t, g) in grad.iter_mut().enumerate() {
                *g += a * q[i * l + t];
            }
        }
    }

    let mut iterations = 0;
    while iterations < max_iter {
        // i: steepest ascent candidate among variables that can grow
        let mut gmax = f64::NEG_INFINITY;
        let mut i_sel = usize::MAX;
        for t in 0..l {
            if alpha[t] < upper && -grad[t] >= gmax {
                gmax = -grad[t];
                i_sel = t;
            }
        }
        let mut gmin = f64::INFINITY;
        let mut j_sel = usize::MAX;
        let mut best_obj = f64::INFINITY;
        for t in 0..l {
            if alpha[t] > 0.0 {
                let g = -grad[t];
                if g < gmin {
                    gmin = g;
                }
                if i_sel != usize::MAX {
                    let b = gmax - g;
                    if b > 0.0 {
                        let a = qd[i_sel] + qd[t] - 2.0 * q[i_sel * l + t];
                        let obj = -(b * b) / a.max(TAU);
                        if obj <= best_obj {
                            best_obj = obj;
                            j_sel = t;
                        }
                    }
                }
            }
        }
        if i_sel == usize::MAX || j_sel == usize::MAX || gmax - gmin < tol {
            break;
        }
        iterations += 1;
        let (i, j) = (i_sel, j_sel);
        let quad = (qd[i] + qd[j] - 2.0 * q[i * l + j]).max(TAU);
        let delta = (grad[i] - grad[j]) / quad;
        let (old_i, old_j) = (alpha[i], alpha[j]);
        let sum = old_i + old_j;
        let mut ai = old_i - delta;
        let mut aj = old_j + delta;
        if sum > upper {
            if ai > upper {
                ai = upper;
                aj = sum - upper;
            }
        } else if aj < 0.0 {
            aj = 0.0;
            ai = sum;
        }
        if sum > upper {
            if aj > upper {
                aj = upper;
                ai = sum - upper;
            }
        } else if ai < 0.0 {
            ai = 0.0;
            aj = sum;
        }
        alpha[i] = ai;
        alpha[j] = aj;
        let (di, dj) = (ai - old_i, aj - old_j);
        for (t, g) in grad.iter_mut().enumerate() {
            *g += di * q[i * l + t] + dj * q[j * l + t];
        }
    }

    // rho: mean gradient over free variables, else midpoint of the feasible interval
    let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut n_free, mut sum_free) = (0usize, 0.0);
    for t in 0..l {
        if alpha[t] >= upper {
            lb = lb.max(grad[t]);
        } else if alpha[t] <= 0.0 {
            ub = ub.min(grad[t]);
        } else {
            n_free += 1;
            sum_free += grad[t];
        }
    }
    let rho = if n_free > 0 {
        sum_free / n_free as f64
    } else {
        0.5 * (ub + lb)
    };
    Ok(DualSolution {
        alpha,
        rho,
        iterations,
        gradient: grad,
    })
}

impl OcsvmModel {
    /// Returns the model and the scores of the training rows.
    pub fn fit(train: &[Vec<f64>], kernel: Kernel, nu: f64, tol: f64, max_iter: usize) -> Result<(Self, Vec<f64>)> {
        let l = train.len();
        if l == 0 {
            return Err(Error::InsufficientData("OCSVM needs at least one row".into()));
        }
        let mut q = vec![0.0; l * l];
        for i in 0..l {
            for j in i..l {
                let k = kernel.eval(&train[i], &train[j]);
                q[i * l + j] = k;
                q[j * l + i] = k;
            }
        }
        let sol = solve_dual(&q, l, nu, tol, max_iter)?;
        let train_scores = sol.gradient.iter().map(|g| sol.rho - g).collect();
        let (support, coef) = train
            .iter()
            .zip(&sol.alpha)
            .filter(|(_, a)| **a > 0.0)
            .map(|(r, a)| (r.clone(), *a))
            .unzip();
        Ok((
            Self {
                kernel,
                support,
                coef,
                rho: sol.rho,
            },
            train_scores,
        ))
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn decision_function(&self, x: &[f64]) -> f64 {
        self.support
            .iter()
            .zip(&self.coef)
            .map(|(s, a)| a * self.kernel.eval(s, x))
            .sum::<f64>()
            - self.rho
    }

    pub fn score(&self, x: &[f64]) -> f64 {
        -self.decision_function(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn cloud(n: usize, seed: u64) -> Vec<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| vec![StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng)])
            .collect()
    }

    /// Generic QP oracle: projected gradient descent on the same dual, projecting onto
    /// `{0 <= a <= 1, sum a = s}` by bisection on the shift.
    fn projected_gradient(q: &[f64], l: usize, nu: f64) -> Vec<f64> {
        let s = nu * l as f64;
        let project = |v: &[f64]| -> Vec<f64> {
            let mut lo = v.iter().cloned().fold(f64::INFINITY, f64::min) - 1.0;
            let mut hi = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max) + 1.0;
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                let tot: f64 = v.iter().map(|x| (x - mid).clamp(0.0, 1.0)).sum();
                if tot > s {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let mid = 0.5 * (lo + hi);
            v.iter().map(|x| (x - mid).clamp(0.0, 1.0)).collect()
        };
        let mut a = vec![s / l as f64; l];
        let lip: f64 = (0..l).map(|i| (0..l).map(|j| q[i * l + j].abs()).sum::<f64>()).fold(0.0, f64::max);
        let step = 1.0 / lip;
        for _ in 0..20_000 {
            let g: Vec<f64> = (0..l).map(|i| (0..l).map(|j| q[i * l + j] * a[j]).sum()).collect();
            let v: Vec<f64> = a.iter().zip(&g).map(|(x, gi)| x - step * gi).collect();
            a = project(&v);
        }
        a
    }

    fn objective(q: &[f64], l: usize, a: &[f64]) -> f64 {
        let mut o = 0.0;
        for i in 0..l {
            for j in 0..l {
                o += a[i] * a[j] * q[i * l + j];
            }
        }
        0.5 * o
    }

    #[test]
    fn matches_generic_qp_on_thirty_points() {
        let x = cloud(30, 5);
        let kernel = Kernel::Rbf { gamma: 0.2 };
        let l = x.len();
        let mut q = vec![0.0; l * l];
        for i in 0..l {
            for j in 0..l {
                q[i * l + j] = kernel.eval(&x[i], &x[j]);
            }
        }
        let smo = solve_dual(&q, l, 0.7, 1e-8, 100_000).unwrap();
        let reference = projected_gradient(&q, l, 0.7);
        let (o_smo, o_ref) = (objective(&q, l, &smo.alpha), objective(&q, l, &reference));
        assert!((o_smo - o_ref).abs() <= 1e-6 * o_ref.abs(), "{o_smo} vs {o_ref}");
        assert!((smo.alpha.iter().sum::<f64>() - 21.0).abs() < 1e-9);

        let (m, train_scores) = OcsvmModel::fit(&x, kernel, 0.7, 1e-8, 100_000).unwrap();
        let mut sorted = train_scores.clone();
        sorted.sort_by(f64::total_cmp);
        // the densest region (origin) scores below the nu-quantile of training scores
        let q_nu = sorted[((1.0 - 0.7) * (l - 1) as f64).round() as usize];
        assert!(m.score(&[0.0, 0.0]) < q_nu);
    }

    #[test]
    fn far_points_reach_rho_plateau() {
        let x = cloud(40, 1);
        let (m, _) = OcsvmModel::fit(&x, Kernel::Rbf { gamma: 0.2 }, 0.7, 1e-6, 10_000).unwrap();
        assert!((m.score(&[100.0, 100.0]) - m.rho()).abs() < 1e-12);
        assert!(m.score(&[100.0, 100.0]) >= m.score(&[0.0, 0.0]));
    }

    #[test]
    fn nu_controls_flagged_fraction() {
        let x = cloud(200, 9);
        for nu in [0.1, 0.3, 0.7] {
            let (_, s) = OcsvmModel::fit(&x, Kernel::Rbf { gamma: 0.2 }, nu, 1e-6, 10_000).unwrap();
            let frac = s.iter().filter(|v| **v > 1e-9).count() as f64 / x.len() as f64;
            assert!((frac - nu).abs() <= 0.1, "nu {nu}: flagged {frac}");
        }
    }

    #[test]
    fn rejects_bad_nu() {
        assert!(solve_dual(&[1.0], 1, 0.0, 1e-6, 10).is_err());
        assert!(solve_dual(&[1.0], 1, 1.5, 1e-6, 10).is_err());
    }
}
