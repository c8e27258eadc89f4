use serde::{Deserialize, Serialize};

use crate::approximator::GridFunction;

/// Per-stage tolerances as power laws in the stage number `N`:
///
/// * fit threshold `eta_N = eta0 / N^eta_power`
/// * fit measure budget `mu_N = mu0 / N^mu_power`
/// * correction measure `eps_N = eps0 / N^eps_power`
/// * correction coefficient bound `delta_N = delta0 / (N^delta_power ||F_N||_1)`
///
/// and fit degree cap `D_N = degree_per_stage * N`. The fitting interval is
/// `[-N pi, N pi]`, or `[-pi, pi]` at every stage when `grow_interval` is off.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub name: String,
    pub eta0: f64,
    pub eta_power: f64,
    pub mu0: f64,
    pub mu_power: f64,
    pub eps0: f64,
    pub eps_power: f64,
    pub delta0: f64,
    pub delta_power: f64,
    pub degree_per_stage: u64,
    pub grow_interval: bool,
}

/// Tolerances resolved for one stage, before `||F_N||_1` is known.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageTolerances {
    pub stage: u32,
    pub eta: f64,
    pub mu: f64,
    pub eps: f64,
    /// `delta_N ||F_N||_1`.
    pub delta_scale: f64,
    pub max_degree: u64,
    pub half_length_pi: f64,
    pub step_pi: f64,
}

impl Schedule {
    /// `eta = 1/N^4`, `mu = 1/N^2`, `eps = 1/N^3`, `delta = 1/(N^4 ||F||_1)`.
    pub fn paper() -> Self {
        Schedule {
            name: "paper".into(),
            eta0: 1.0,
            eta_power: 4.0,
            mu0: 1.0,
            mu_power: 2.0,
            eps0: 1.0,
            eps_power: 3.0,
            delta0: 1.0,
            delta_power: 4.0,
            degree_per_stage: 48,
            grow_interval: true,
        }
    }

    /// Tolerances a single workstation can carry through four stages.
    ///
    /// `mu` and `eps` stay constant: the spikes each correction leaves behind
    /// sit at frequencies far above any later fit, so every budget has to
    /// cover the ones already in the residual.
    pub fn desk() -> Self {
        Schedule {
            name: "desk".into(),
            eta0: 0.3,
            eta_power: 1.0,
            mu0: 1.2,
            mu_power: 0.0,
            eps0: 2.0,
            eps_power: 0.0,
            delta0: 0.5,
            delta_power: 1.0,
            degree_per_stage: 32,
            grow_interval: false,
        }
    }

    pub fn by_name(name: &str) -> Option<Self> {
        match name {
            "paper" => Some(Self::paper()),
            "desk" => Some(Self::desk()),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        let positive = [self.eta0, self.mu0, self.eps0, self.delta0];
        let powers = [self.eta_power, self.mu_power, self.eps_power, self.delta_power];
        if positive.iter().any(|v| !(v.is_finite() && *v > 0.0)) || powers.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
            return Err(format!("schedule {} has a non-positive scale or negative power", self.name));
        }
        if self.degree_per_stage == 0 {
            return Err("degree_per_stage must be positive".into());
        }
        Ok(())
    }

    pub fn stage(&self, n: u32) -> StageTolerances {
        let nf = n as f64;
        let max_degree = self.degree_per_stage * n as u64;
        StageTolerances {
            stage: n,
            eta: self.eta0 / nf.powf(self.eta_power),
            mu: self.mu0 / nf.powf(self.mu_power),
            eps: self.eps0 / nf.powf(self.eps_power),
            delta_scale: self.delta0 / nf.powf(self.delta_power),
            max_degree,
            half_length_pi: if self.grow_interval { nf } else { 1.0 },
            step_pi: GridFunction::dyadic_step_for(max_degree),
        }
    }
}
