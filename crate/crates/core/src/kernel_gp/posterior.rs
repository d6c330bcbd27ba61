use rayon::prelude::*;

use super::kernel::KernelSpec;
use super::linalg::IncrementalCholesky;
use crate::error::{Error, Result};

/// Posterior mean and standard deviation at one query point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Prediction {
    pub mean: f64,
    pub stddev: f64,
}

impl Prediction {
    pub fn ucb(&self, beta: f64) -> f64 {
        self.mean + beta * self.stddev
    }

    pub fn lcb(&self, beta: f64) -> f64 {
        self.mean - beta * self.stddev
    }
}

/// Batches at least this large are predicted in parallel.
const PARALLEL_BATCH: usize = 512;

/// Incremental GP posterior under a constant prior mean.
///
/// Keeps the Cholesky factor `L` of `K_t + σ²I`, the whitened residuals
/// `L⁻¹(y − m)` and the running information gain `½ log det(I + σ⁻²K_t)`.
/// Appends are `O(t²)`; predictions are read-only and one triangular solve.
#[derive(Clone, Debug)]
pub struct GpPosterior {
    kernel: KernelSpec,
    noise_variance: f64,
    prior_mean: f64,
    points: Vec<Vec<f64>>,
    observations: Vec<f64>,
    factor: IncrementalCholesky,
    whitened: Vec<f64>,
    info_gain: f64,
    max_jitter: f64,
}

impl GpPosterior {
    pub fn new(kernel: KernelSpec, noise_variance: f64) -> Result<Self> {
        kernel.validate()?;
        if !(noise_variance.is_finite() && noise_variance > 0.0) {
            return Err(Error::input(format!(
                "noise variance must be positive (got {noise_variance})"
            )));
        }
        Ok(Self {
            kernel,
            noise_variance,
            prior_mean: 0.0,
            points: Vec::new(),
            observations: Vec::new(),
            factor: IncrementalCholesky::new(),
            whitened: Vec::new(),
            info_gain: 0.0,
            max_jitter: 0.0,
        })
    }

    /// Sets a constant prior mean. Only allowed before the first append.
    pub fn with_prior_mean(mut self, mean: f64) -> Result<Self> {
        if !self.points.is_empty() {
            return Err(Error::input("prior mean must be set before observations"));
        }
        if !mean.is_finite() {
            return Err(Error::input("prior mean must be finite"));
        }
        self.prior_mean = mean;
        Ok(self)
    }

    pub fn kernel(&self) -> &KernelSpec {
        &self.kernel
    }

    pub fn noise_variance(&self) -> f64 {
        self.noise_variance
    }

    pub fn prior_mean(&self) -> f64 {
        self.prior_mean
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn observations(&self) -> &[f64] {
        &self.observations
    }

    pub fn factor(&self) -> &IncrementalCholesky {
        &self.factor
    }

    /// Realized `½ log det(I + σ⁻² K_t)` of the observed points.
    pub fn info_gain(&self) -> f64 {
        self.info_gain
    }

    /// Largest diagonal jitter any append needed (0 when none).
    pub fn max_jitter(&self) -> f64 {
        self.max_jitter
    }

    fn check_point(&self, a: &[f64]) -> Result<()> {
        if let Some(first) = self.points.first() {
            if first.len() != a.len() {
                return Err(Error::input(format!(
                    "query has dimension {}, observations have {}",
                    a.len(),
                    first.len()
                )));
            }
        }
        let need = self.kernel.min_input_dim();
        if a.len() < need {
            return Err(Error::input(format!(
                "kernel expects at least {need} coordinates, got {}",
                a.len()
            )));
        }
        if a.iter().any(|x| !x.is_finite()) {
            return Err(Error::input("non-finite coordinate in GP input"));
        }
        Ok(())
    }

    fn cross_covariance(&self, a: &[f64]) -> Vec<f64> {
        self.points
            .iter()
            .map(|p| self.kernel.eval_unchecked(p, a))
            .collect()
    }

    /// Posterior mean `μ_t(a)` and standard deviation `σ_t(a)`.
    pub fn predict(&self, a: &[f64]) -> Result<Prediction> {
        self.check_point(a)?;
        let prior_var = self.kernel.eval_unchecked(a, a);
        if self.points.is_empty() {
            return Ok(Prediction {
                mean: self.prior_mean,
                stddev: prior_var.max(0.0).sqrt(),
            });
        }
        let mut v = self.cross_covariance(a);
        self.factor.solve_lower(&mut v);
        let mean = self.prior_mean + v.iter().zip(&self.whitened).map(|(x, y)| x * y).sum::<f64>();
        let explained: f64 = v.iter().map(|x| x * x).sum();
        let var = (prior_var - explained).clamp(0.0, prior_var.max(0.0));
        if !mean.is_finite() || !var.is_finite() {
            return Err(Error::Numerical(format!(
                "non-finite posterior at query (mean {mean}, variance {var})"
            )));
        }
        Ok(Prediction {
            mean,
            stddev: var.sqrt(),
        })
    }

    pub fn predict_many(&self, queries: &[Vec<f64>]) -> Result<Vec<Prediction>> {
        if queries.len() >= PARALLEL_BATCH {
            queries.par_iter().map(|q| self.predict(q)).collect()
        } else {
            queries.iter().map(|q| self.predict(q)).collect()
        }
    }

    /// `μ(a) + β σ(a)`
    pub fn ucb(&self, beta: f64, a: &[f64]) -> Result<f64> {
        Ok(self.predict(a)?.ucb(beta))
    }

    /// `μ(a) − β σ(a)`
    pub fn lcb(&self, beta: f64, a: &[f64]) -> Result<f64> {
        Ok(self.predict(a)?.lcb(beta))
    }

    /// Appends `(a, y)` with a rank-one border update of the factor.
    pub fn append(&mut self, a: Vec<f64>, y: f64) -> Result<()> {
        self.check_point(&a)?;
        if !y.is_finite() {
            return Err(Error::input(format!("non-finite observation {y}")));
        }
        let cross = self.cross_covariance(&a);
        let diag = self.kernel.eval_unchecked(&a, &a) + self.noise_variance;
        let (pivot2, jitter) = self.factor.push(&cross, diag)?;
        let t = self.factor.dim() - 1;
        let projected: f64 = (0..t).map(|j| self.factor.get(t, j) * self.whitened[j]).sum();
        self.whitened
            .push((y - self.prior_mean - projected) / self.factor.diag(t));
        // det(K + σ²I) = Π L_ii², so each row adds ½ log(L_tt² / σ²).
        self.info_gain += 0.5 * (pivot2 / self.noise_variance).ln().max(0.0);
        self.max_jitter = self.max_jitter.max(jitter);
        self.points.push(a);
        self.observations.push(y);
        Ok(())
    }

    /// Log marginal likelihood of the observations under the prior.
    pub fn log_marginal_likelihood(&self) -> f64 {
        let n = self.points.len() as f64;
        let fit: f64 = self.whitened.iter().map(|x| x * x).sum();
        -0.5 * fit - self.factor.half_log_det() - 0.5 * n * (2.0 * std::f64::consts::PI).ln()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn se() -> KernelSpec {
        KernelSpec::squared_exponential(1.0)
    }

    #[test]
    fn empty_posterior_is_prior() {
        let gp = GpPosterior::new(se(), 1.0).unwrap();
        let p = gp.predict(&[0.3]).unwrap();
        assert_eq!((p.mean, p.stddev), (0.0, 1.0));
        assert_eq!(gp.ucb(3.0, &[0.3]).unwrap(), 3.0);
        assert_eq!(gp.lcb(3.0, &[0.3]).unwrap(), -3.0);
    }

    #[test]
    fn single_observation_closed_form() {
        let mut gp = GpPosterior::new(se(), 1.0).unwrap();
        gp.append(vec![0.0], 1.0).unwrap();
        let p = gp.predict(&[0.0]).unwrap();
        assert!((p.mean - 0.5).abs() < 1e-15);
        assert!((p.stddev * p.stddev - 0.5).abs() < 1e-15);
        assert!((gp.ucb(1.0, &[0.0]).unwrap() - (0.5 + 0.5f64.sqrt())).abs() < 1e-12);
        assert!((gp.lcb(1.0, &[0.0]).unwrap() - (0.5 - 0.5f64.sqrt())).abs() < 1e-12);
        assert!((gp.ucb(1.0, &[0.0]).unwrap() - 1.2071).abs() < 1e-4);
        assert!((gp.lcb(1.0, &[0.0]).unwrap() + 0.2071).abs() < 1e-4);
        assert_eq!(gp.ucb(0.0, &[0.0]).unwrap(), p.mean);
    }

    #[test]
    fn info_gain_first_and_duplicate_append() {
        let mut gp = GpPosterior::new(se(), 1.0).unwrap();
        gp.append(vec![2.0], 0.1).unwrap();
        assert!((gp.info_gain() - 0.5 * 2f64.ln()).abs() < 1e-15);
        gp.append(vec![2.0], -0.3).unwrap();
        // det [[2,1],[1,2]] = 3
        assert!((gp.info_gain() - 0.5 * 3f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn rejects_bad_inputs() {
        let mut gp = GpPosterior::new(se(), 1.0).unwrap();
        assert!(matches!(gp.append(vec![0.0], f64::NAN), Err(Error::Input(_))));
        gp.append(vec![0.0], 0.0).unwrap();
        assert!(gp.predict(&[0.0, 1.0]).is_err());
        assert!(GpPosterior::new(se(), 0.0).is_err());
    }

    #[test]
    fn prior_mean_shifts_prediction() {
        let gp = GpPosterior::new(se(), 1.0)
            .unwrap()
            .with_prior_mean(0.5)
            .unwrap();
        assert_eq!(gp.predict(&[1.0]).unwrap().mean, 0.5);
        let mut gp = gp;
        gp.append(vec![1.0], 1.5).unwrap();
        // residual 1.0, shrunk by half
        assert!((gp.predict(&[1.0]).unwrap().mean - 1.0).abs() < 1e-15);
    }

    #[test]
    fn log_marginal_likelihood_single_point() {
        let mut gp = GpPosterior::new(se(), 1.0).unwrap();
        gp.append(vec![0.0], 1.0).unwrap();
        // y ~ N(0, 2)
        let expected = -0.5 * 1.0 / 2.0 - 0.5 * (2.0 * std::f64::consts::PI * 2.0).ln();
        assert!((gp.log_marginal_likelihood() - expected).abs() < 1e-14);
    }
}
