use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::gbm::sigmoid;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Gaussian,
    Binomial,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GlmConfig {
    pub max_iter: usize,
    /// Relative deviance change that ends IRLS.
    pub tolerance: f64,
    /// Ridge added to the non-intercept diagonal, per training row.
    /// Defaults to 1e-10 (gaussian) or 1e-8 (binomial).
    pub ridge: Option<f64>,
}

impl Default for GlmConfig {
    fn default() -> Self {
        GlmConfig {
            max_iter: 50,
            tolerance: 1e-12,
            ridge: None,
        }
    }
}

impl GlmConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iter == 0 {
            return Err(Error::config("glm.max_iter", "must be at least 1"));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::config("glm.tolerance", "must be positive"));
        }
        if self.ridge.is_some_and(|r| !(r >= 0.0)) {
            return Err(Error::config("glm.ridge", "must be non-negative"));
        }
        Ok(())
    }

    fn ridge_for(&self, family: Family) -> f64 {
        self.ridge.unwrap_or(match family {
            Family::Gaussian => 1e-10,
            Family::Binomial => 1e-8,
        })
    }
}

/// Logit link g(mu) = log(mu / (1 - mu)).
pub fn logit(mu: f64) -> f64 {
    (mu / (1.0 - mu)).ln()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Glm {
    pub family: Family,
    /// Intercept followed by one coefficient per design column.
    pub beta: Vec<f64>,
    pub converged: bool,
    /// Some fitted probability within 1e-10 of 0 or 1, the signature of
    /// (quasi-)complete separation.
    pub separated: bool,
    pub iterations: usize,
    pub deviance: f64,
}

fn design(columns: &[Vec<f64>], n: usize) -> DMatrix<f64> {
    let p = columns.len();
    DMatrix::from_fn(n, p + 1, |i, j| if j == 0 { 1.0 } else { columns[j - 1][i] })
}

fn solve_spd(mut a: DMatrix<f64>, b: DVector<f64>) -> Result<DVector<f64>> {
    if let Some(ch) = a.clone().cholesky() {
        return Ok(ch.solve(&b));
    }
    // fall back on a tiny extra jitter before giving up
    let scale = a.diagonal().abs().max().max(1.0);
    for i in 0..a.nrows() {
        a[(i, i)] += 1e-9 * scale;
    }
    a.lu()
        .solve(&b)
        .ok_or_else(|| Error::Numerical("singular GLM normal equations".into()))
}

/// Binomial deviance, -2 log-likelihood.
pub fn binomial_deviance(y: &[f64], eta: &[f64]) -> f64 {
    2.0 * y
        .iter()
        .zip(eta)
        .map(|(&y, &e)| {
            let softplus = if e > 0.0 { e + (-e).exp().ln_1p() } else { e.exp().ln_1p() };
            softplus - y * e
        })
        .sum::<f64>()
}

impl Glm {
    pub fn fit(columns: &[Vec<f64>], y: &[f64], family: Family, cfg: &GlmConfig) -> Result<Glm> {
        cfg.validate()?;
        let n = y.len();
        if n == 0 {
            return Err(Error::InvalidInput("GLM needs at least one row".into()));
        }
        let x = design(columns, n);
        let p1 = x.ncols();
        let ridge = cfg.ridge_for(family) * n as f64;
        let penalize = |a: &mut DMatrix<f64>| {
            for j in 1..p1 {
                a[(j, j)] += ridge;
            }
        };
        let yv = DVector::from_column_slice(y);
        match family {
            Family::Gaussian => {
                let mut a = x.tr_mul(&x);
                penalize(&mut a);
                let beta = solve_spd(a, x.tr_mul(&yv))?;
                let resid = &yv - &x * &beta;
                Ok(Glm {
                    family,
                    beta: beta.iter().copied().collect(),
                    converged: true,
                    separated: false,
                    iterations: 1,
                    deviance: resid.norm_squared(),
                })
            }
            Family::Binomial => Self::irls(&x, y, ridge, cfg),
        }
    }

    fn irls(x: &DMatrix<f64>, y: &[f64], ridge: f64, cfg: &GlmConfig) -> Result<Glm> {
        let n = y.len();
        let p1 = x.ncols();
        let ybar = (y.iter().sum::<f64>() / n as f64).clamp(1e-6, 1.0 - 1e-6);
        let mut beta = DVector::zeros(p1);
        beta[0] = logit(ybar);
        let objective = |beta: &DVector<f64>, eta: &[f64]| {
            let pen: f64 = beta.iter().skip(1).map(|b| b * b).sum();
            binomial_deviance(y, eta) + ridge * pen
        };
        let mut eta: Vec<f64> = (x * &beta).iter().copied().collect();
        let mut obj = objective(&beta, &eta);
        let mut best = (obj, beta.clone());
        let mut converged = false;
        let mut iterations = 0;
        for it in 1..=cfg.max_iter {
            iterations = it;
            let mu: Vec<f64> = eta.iter().map(|&e| sigmoid(e)).collect();
            let w: Vec<f64> = mu.iter().map(|m| (m * (1.0 - m)).max(1e-10)).collect();
            let z: Vec<f64> = (0..n).map(|i| eta[i] + (y[i] - mu[i]) / w[i]).collect();
            let mut xw = x.clone();
            for (i, wi) in w.iter().enumerate() {
                xw.row_mut(i).scale_mut(*wi);
            }
            let mut a = x.tr_mul(&xw);
            for j in 1..p1 {
                a[(j, j)] += ridge;
            }
            let rhs = xw.tr_mul(&DVector::from_vec(z));
            let next = solve_spd(a, rhs)?;
            let next_eta: Vec<f64> = (x * &next).iter().copied().collect();
            let next_obj = objective(&next, &next_eta);
            if !next_obj.is_finite() {
                break;
            }
            let change = (obj - next_obj).abs();
            beta = next;
            eta = next_eta;
            obj = next_obj;
            if obj < best.0 {
                best = (obj, beta.clone());
            }
            if change <= cfg.tolerance * (obj.abs() + 0.1) {
                converged = true;
                break;
            }
        }
        let beta = best.1;
        let eta: Vec<f64> = (x * &beta).iter().copied().collect();
        let separated = eta.iter().any(|&e| {
            let m = 1.0 / (1.0 + (-e).exp());
            !(1e-10..=1.0 - 1e-10).contains(&m)
        });
        Ok(Glm {
            family: Family::Binomial,
            beta: beta.iter().copied().collect(),
            converged,
            separated,
            iterations,
            deviance: binomial_deviance(y, &eta),
        })
    }

    pub fn linear_predictor(&self, columns: &[Vec<f64>], row: usize) -> f64 {
        self.beta[0]
            + columns
                .iter()
                .zip(&self.beta[1..])
                .map(|(c, b)| c[row] * b)
                .sum::<f64>()
    }

    pub fn predict(&self, columns: &[Vec<f64>], n_rows: usize) -> Vec<f64> {
        (0..n_rows)
            .map(|r| {
                let eta = self.linear_predictor(columns, r);
                match self.family {
                    Family::Gaussian => eta,
                    Family::Binomial => sigmoid(eta),
                }
            })
            .collect()
    }
}
