//! Update rules and the per-run optimizer memory.

use serde::{Deserialize, Serialize};

use super::DescentConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Plain,
    Momentum,
    Nag,
    RmsProp,
    Adam,
    RAdam,
}

impl Method {
    pub const ALL: [Method; 6] = [
        Method::Plain,
        Method::Momentum,
        Method::Nag,
        Method::RmsProp,
        Method::Adam,
        Method::RAdam,
    ];

    pub fn supports_sign(self) -> bool {
        matches!(self, Method::Plain | Method::Momentum | Method::Nag)
    }

    pub fn name(self) -> &'static str {
        match self {
            Method::Plain => "plain",
            Method::Momentum => "momentum",
            Method::Nag => "nag",
            Method::RmsProp => "rmsprop",
            Method::Adam => "adam",
            Method::RAdam => "radam",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| {
                format!("unknown method `{s}` (plain, momentum, nag, rmsprop, adam, radam)")
            })
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Parameter indices updated at step `t`: a block of `k` consecutive
/// indices modulo `n`, advancing by `k` per step. `k` is capped at `n`.
pub fn batch_indices(t: u64, n: usize, k: usize) -> Vec<usize> {
    if n == 0 {
        return Vec::new();
    }
    let k = k.min(n);
    let start = ((t % n as u64) * (k as u64 % n as u64)) % n as u64;
    (0..k).map(|j| (start as usize + j) % n).collect()
}

/// Replaces each gradient by its sign, keeping zeros.
pub fn apply_sign(grads: &mut [f64]) {
    for g in grads {
        if *g != 0.0 {
            *g = g.signum();
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerState {
    /// Current point in search coordinates (logistic runs search over `q`).
    pub x: Vec<f64>,
    pub v: Vec<f64>,
    pub sq: Vec<f64>,
    pub m: Vec<f64>,
    /// Global step counter; drives the round-robin schedule.
    pub t: u64,
    /// Updates per parameter since its memory was last cleared, used for
    /// bias correction.
    pub updates: Vec<u32>,
    /// Magnitude of each parameter's most recent applied step.
    pub last_step: Vec<Option<f64>>,
    pub restarts: usize,
}

impl OptimizerState {
    pub fn new(x: Vec<f64>) -> Self {
        let n = x.len();
        OptimizerState {
            x,
            v: vec![0.0; n],
            sq: vec![0.0; n],
            m: vec![0.0; n],
            t: 0,
            updates: vec![0; n],
            last_step: vec![None; n],
            restarts: 0,
        }
    }

    /// Moves to `x` and clears all per-parameter memory; `t` and the
    /// restart count are kept.
    pub fn reset(&mut self, x: Vec<f64>) {
        let (t, restarts) = (self.t, self.restarts);
        *self = OptimizerState::new(x);
        self.t = t;
        self.restarts = restarts;
    }

    /// Clears the accumulated history of one parameter.
    pub fn forget(&mut self, i: usize) {
        self.v[i] = 0.0;
        self.sq[i] = 0.0;
        self.m[i] = 0.0;
        self.updates[i] = 0;
    }

    pub fn local_optimum(&self, delta_stop: f64) -> bool {
        self.last_step
            .iter()
            .all(|s| s.is_some_and(|d| d < delta_stop))
    }

    /// Step for parameter `i` given its (possibly sign-reduced) gradient;
    /// updates the method's memory for `i`.
    pub fn delta(&mut self, i: usize, g: f64, cfg: &DescentConfig) -> f64 {
        let (lr, gamma, beta, eps) = (cfg.lr, cfg.gamma, cfg.beta, cfg.eps);
        match cfg.method {
            Method::Plain => lr * g,
            Method::Momentum | Method::Nag => {
                self.v[i] = gamma * self.v[i] + lr * g;
                self.v[i]
            }
            Method::RmsProp => {
                self.sq[i] = beta * self.sq[i] + (1.0 - beta) * g * g;
                lr / (self.sq[i] + eps).sqrt() * g
            }
            Method::Adam | Method::RAdam => {
                self.updates[i] += 1;
                let t = self.updates[i] as i32;
                self.m[i] = gamma * self.m[i] + (1.0 - gamma) * g;
                self.sq[i] = beta * self.sq[i] + (1.0 - beta) * g * g;
                let m_hat = self.m[i] / (1.0 - gamma.powi(t));
                let v_hat = self.sq[i] / (1.0 - beta.powi(t));
                if cfg.method == Method::Adam {
                    return lr * m_hat / (v_hat.sqrt() + eps);
                }
                let rho_inf = 2.0 / (1.0 - beta) - 1.0;
                let bt = beta.powi(t);
                let rho_t = rho_inf - 2.0 * f64::from(t) * bt / (1.0 - bt);
                if rho_t > 4.0 {
                    let r = (((rho_t - 4.0) * (rho_t - 2.0) * rho_inf)
                        / ((rho_inf - 4.0) * (rho_inf - 2.0) * rho_t))
                        .sqrt();
                    lr * r * m_hat / (v_hat.sqrt() + eps)
                } else {
                    lr * m_hat
                }
            }
        }
    }
}
