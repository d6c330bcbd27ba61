use serde::{Deserialize, Serialize};

use super::{
    eta_schedule, Exp3P, Exp3PParams, GpMw, Hedge, Learner, RobustSelector, SelectionRule,
    SharedEncoder, UniformRandom, Variant,
};
use crate::error::{Error, Result};
use crate::kernel_gp::{ConfidenceSchedule, GpPosterior, KernelSpec};

/// Parameters shared by the GP-based variants.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GpParams {
    /// RKHS norm bound `B` in the confidence schedule.
    #[serde(default = "default_rkhs_bound")]
    pub rkhs_bound: f64,
    #[serde(default = "default_gp_delta")]
    pub delta: f64,
    /// Fixed confidence width; replaces the `B`/`δ` schedule when set.
    #[serde(default)]
    pub beta: Option<f64>,
    /// Model noise scale; defaults to the environment's noise standard deviation.
    #[serde(default)]
    pub noise_std: Option<f64>,
    /// Kernel override; defaults to the environment's suggested prior.
    #[serde(default)]
    pub kernel: Option<KernelSpec>,
    /// Prior mean override.
    #[serde(default)]
    pub prior_mean: Option<f64>,
}

fn default_rkhs_bound() -> f64 {
    1.0
}

fn default_gp_delta() -> f64 {
    0.1
}

fn default_exp3p_delta() -> f64 {
    0.05
}

impl Default for GpParams {
    fn default() -> Self {
        Self {
            rkhs_bound: default_rkhs_bound(),
            delta: default_gp_delta(),
            beta: None,
            noise_std: None,
            kernel: None,
            prior_mean: None,
        }
    }
}

impl GpParams {
    pub fn schedule(&self) -> Result<ConfidenceSchedule> {
        match self.beta {
            Some(b) => ConfidenceSchedule::constant(b),
            None => ConfidenceSchedule::new(self.rkhs_bound, self.delta),
        }
    }

    fn posterior(&self, setup: &LearnerSetup) -> Result<GpPosterior> {
        let kernel = match (&self.kernel, &setup.kernel) {
            (Some(k), _) | (None, Some(k)) => k.clone(),
            (None, None) => {
                return Err(Error::config(
                    "kernel",
                    "no kernel configured and the environment suggests none",
                ))
            }
        };
        let noise = self.noise_std.unwrap_or(setup.noise_std);
        if !(noise.is_finite() && noise > 0.0) {
            return Err(Error::config(
                "noise_std",
                format!("GP noise scale must be positive, got {noise}"),
            ));
        }
        GpPosterior::new(kernel, noise * noise)?
            .with_prior_mean(self.prior_mean.unwrap_or(setup.prior_mean))
    }
}

/// One learner assignment as written in an experiment config.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "kebab-case")]
pub enum LearnerConfig {
    GpMw {
        #[serde(default)]
        eta: Option<f64>,
        #[serde(default)]
        gp: GpParams,
    },
    Hedge {
        #[serde(default)]
        eta: Option<f64>,
    },
    Exp3p {
        #[serde(default = "default_exp3p_delta")]
        delta: f64,
        #[serde(default)]
        gamma: Option<f64>,
        #[serde(default)]
        eta: Option<f64>,
        #[serde(default)]
        alpha: Option<f64>,
    },
    GpUcb {
        #[serde(default)]
        gp: GpParams,
    },
    Stableopt {
        #[serde(default)]
        gp: GpParams,
    },
    UniformRandom,
}

/// Everything the environment tells a learner before play starts.
#[derive(Clone)]
pub struct LearnerSetup {
    pub num_actions: usize,
    pub horizon: usize,
    pub seed: u64,
    /// Joint-outcome encoding for GP-based variants.
    pub encoder: Option<SharedEncoder>,
    pub kernel: Option<KernelSpec>,
    pub prior_mean: f64,
    pub noise_std: f64,
    /// Learning rate to use instead of `sqrt(8 ln K / T)`, e.g. for a
    /// discretized box.
    pub eta: Option<f64>,
    /// Adversary profiles for the robust selection rules.
    pub contexts: Option<Vec<Vec<f64>>>,
}

impl LearnerSetup {
    pub fn new(num_actions: usize, horizon: usize, seed: u64) -> Self {
        Self {
            num_actions,
            horizon,
            seed,
            encoder: None,
            kernel: None,
            prior_mean: 0.0,
            noise_std: 1.0,
            eta: None,
            contexts: None,
        }
    }

    fn default_eta(&self) -> Result<f64> {
        match self.eta {
            Some(eta) => Ok(eta),
            // a single action never moves its weight
            None if self.num_actions < 2 => Ok(0.0),
            None => eta_schedule(self.num_actions, self.horizon),
        }
    }

    fn encoder(&self, variant: Variant) -> Result<SharedEncoder> {
        let enc = self.encoder.clone().ok_or_else(|| {
            Error::config("variant", format!("{variant} is not supported by this environment"))
        })?;
        if enc.num_actions() != self.num_actions {
            return Err(Error::input(format!(
                "encoder covers {} actions, expected {}",
                enc.num_actions(),
                self.num_actions
            )));
        }
        Ok(enc)
    }
}

impl LearnerConfig {
    pub fn variant(&self) -> Variant {
        match self {
            LearnerConfig::GpMw { .. } => Variant::GpMw,
            LearnerConfig::Hedge { .. } => Variant::Hedge,
            LearnerConfig::Exp3p { .. } => Variant::Exp3p,
            LearnerConfig::GpUcb { .. } => Variant::GpUcb,
            LearnerConfig::Stableopt { .. } => Variant::Stableopt,
            LearnerConfig::UniformRandom => Variant::UniformRandom,
        }
    }

    /// Static parameter checks that need no environment.
    pub fn validate(&self) -> Result<()> {
        let check_eta = |eta: &Option<f64>| match eta {
            Some(e) if !(e.is_finite() && *e >= 0.0) => {
                Err(Error::config("eta", format!("learning rate must be nonnegative, got {e}")))
            }
            _ => Ok(()),
        };
        match self {
            LearnerConfig::GpMw { eta, gp } => {
                check_eta(eta)?;
                gp.schedule().map(|_| ())?;
                if let Some(k) = &gp.kernel {
                    k.validate().map_err(|e| Error::config("gp.kernel", e.to_string()))?;
                }
                Ok(())
            }
            LearnerConfig::Hedge { eta } => check_eta(eta),
            LearnerConfig::Exp3p { delta, gamma, eta, alpha } => {
                if let Some(e) = eta {
                    if !(*e >= 0.0) {
                        return Err(Error::config("eta", format!("must be nonnegative, got {e}")));
                    }
                }
                if !(*delta > 0.0 && *delta < 1.0) {
                    return Err(Error::config("delta", format!("must lie in (0, 1), got {delta}")));
                }
                if let Some(g) = gamma {
                    if !(0.0..=1.0).contains(g) {
                        return Err(Error::config("gamma", format!("must lie in [0, 1], got {g}")));
                    }
                }
                if let Some(a) = alpha {
                    if !(*a >= 0.0) {
                        return Err(Error::config("alpha", format!("must be nonnegative, got {a}")));
                    }
                }
                Ok(())
            }
            LearnerConfig::GpUcb { gp } | LearnerConfig::Stableopt { gp } => {
                gp.schedule().map(|_| ())?;
                if let Some(k) = &gp.kernel {
                    k.validate().map_err(|e| Error::config("gp.kernel", e.to_string()))?;
                }
                Ok(())
            }
            LearnerConfig::UniformRandom => Ok(()),
        }
    }

    pub fn build(&self, setup: &LearnerSetup) -> Result<Box<dyn Learner>> {
        self.validate()?;
        let k = setup.num_actions;
        Ok(match self {
            LearnerConfig::GpMw { eta, gp } => {
                let eta = eta.map_or_else(|| setup.default_eta(), Ok)?;
                Box::new(GpMw::new(
                    setup.encoder(Variant::GpMw)?,
                    gp.posterior(setup)?,
                    gp.schedule()?,
                    eta,
                    setup.seed,
                )?)
            }
            LearnerConfig::Hedge { eta } => {
                let eta = eta.map_or_else(|| setup.default_eta(), Ok)?;
                Box::new(Hedge::new(k, eta, setup.seed)?)
            }
            LearnerConfig::Exp3p { delta, gamma, eta, alpha } => {
                let mut params = Exp3PParams::defaults(k, setup.horizon, *delta)?;
                if let Some(g) = gamma {
                    params.gamma = *g;
                }
                if let Some(e) = eta {
                    params.eta = *e;
                }
                if let Some(a) = alpha {
                    params.alpha = *a;
                }
                Box::new(Exp3P::new(k, setup.horizon, params, setup.seed)?)
            }
            LearnerConfig::GpUcb { gp } | LearnerConfig::Stableopt { gp } => {
                let rule = if matches!(self, LearnerConfig::GpUcb { .. }) {
                    SelectionRule::GpUcb
                } else {
                    SelectionRule::StableOpt
                };
                let contexts = setup.contexts.clone().ok_or_else(|| {
                    Error::config(
                        "variant",
                        format!("{} needs an environment with a finite adversary set", self.variant()),
                    )
                })?;
                Box::new(RobustSelector::new(
                    rule,
                    setup.encoder(self.variant())?,
                    contexts,
                    gp.posterior(setup)?,
                    gp.schedule()?,
                )?)
            }
            LearnerConfig::UniformRandom => Box::new(UniformRandom::new(k, setup.seed)?),
        })
    }
}
