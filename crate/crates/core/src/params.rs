//! Closed-form budgets and bounds.
//!
//! Everything here is a pure function of its arguments: the asymptotic
//! bounds on the covert capacity `L(ε, δ)` (in nats per square-root channel
//! use), the blocklength-dependent parameters of the zero-augmented BPSK
//! construction, and the Gaussian capacity step of the converse.

use crate::error::{domain, Error, Result};

/// Reliability and covertness targets of a code.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CovertBudget {
    epsilon: f64,
    delta: f64,
}

impl CovertBudget {
    /// `epsilon` is the target average error probability, `delta` the KL
    /// budget in nats. Requires `0 < epsilon < 1` and `0 < delta <= 1`.
    pub fn new(epsilon: f64, delta: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(domain("epsilon", epsilon, "0 < epsilon < 1"));
        }
        if !(delta > 0.0 && delta <= 1.0) {
            return Err(domain("delta", delta, "0 < delta <= 1"));
        }
        Ok(Self { epsilon, delta })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }
}

/// AWGN channel `Y = X + Z`, `Z ~ N(0, σ²)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelParams {
    sigma: f64,
}

impl ChannelParams {
    pub fn new(sigma: f64) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(domain("sigma", sigma, "0 < sigma < inf"));
        }
        Ok(Self { sigma })
    }

    /// Noise standard deviation.
    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// Noise variance.
    pub fn variance(&self) -> f64 {
        self.sigma * self.sigma
    }
}

/// Lower and upper bounds on `L(ε, δ)` with their small-(ε, δ) forms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AsymptoticBounds {
    /// `√δ / √(1-ε)`, achievable.
    pub lower: f64,
    /// `√δ / (1-ε)`, converse.
    pub upper: f64,
    /// `√δ (1 + ε/2)`.
    pub approx_lower: f64,
    /// `√δ (1 + ε)`.
    pub approx_upper: f64,
}

pub fn asymptotic_bounds(budget: CovertBudget) -> AsymptoticBounds {
    let root_delta = budget.delta.sqrt();
    let slack = 1.0 - budget.epsilon;
    AsymptoticBounds {
        lower: root_delta / slack.sqrt(),
        upper: root_delta / slack,
        approx_lower: root_delta * (1.0 + budget.epsilon / 2.0),
        approx_upper: root_delta * (1.0 + budget.epsilon),
    }
}

/// `n^(-1/6)`, the reliability of the base code at blocklength `n`.
///
/// Computed as `1/√(∛n)` so that perfect sixth powers give exact values.
pub fn epsilon_prime(n: u64) -> f64 {
    (n as f64).cbrt().sqrt().recip()
}

/// Parameters of the zero-augmented BPSK construction at one blocklength.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalingParams {
    pub n: u64,
    /// `ε′ = n^(-1/6)`.
    pub epsilon_prime: f64,
    /// `δ′ = δ (1-ε′)/(1-ε)`, the covertness budget of the base code.
    pub delta_prime: f64,
    /// Number of all-zero codewords per base message, `(ε-ε′)/(1-ε)`.
    pub alpha: f64,
    /// BPSK symbol power `2σ²√(δ′/n)`.
    pub power: f64,
    /// `ln(4 n^(1/6)) / n`.
    pub gamma: f64,
    /// `-nγ + nP/(2σ²) - nP²/(2σ⁴) - n^(1/3)`.
    pub log_m_target: f64,
    /// Leading term `2σ²√(δ/n)` of the average power any covert code may use.
    pub power_budget: f64,
}

impl ScalingParams {
    /// Evaluates every field without checking that the base code is non-empty.
    ///
    /// Fails only when ε ≤ n^(-1/6). Desk-scale simulations that pick their
    /// own message count go through here; [`scaling_parameters`] adds the
    /// size check.
    pub fn evaluate(n: u64, budget: CovertBudget, channel: ChannelParams) -> Result<Self> {
        if n < 2 {
            return Err(domain("n", n as f64, "n >= 2"));
        }
        let eps_p = epsilon_prime(n);
        if budget.epsilon <= eps_p {
            return Err(Error::NotInRegime {
                n,
                epsilon: budget.epsilon,
                epsilon_prime: eps_p,
            });
        }
        let nf = n as f64;
        let var = channel.variance();
        let delta_prime = budget.delta * (1.0 - eps_p) / (1.0 - budget.epsilon);
        let alpha = (budget.epsilon - eps_p) / (1.0 - budget.epsilon);
        let power = 2.0 * var * (delta_prime / nf).sqrt();
        let gamma = (4.0 * nf.cbrt().sqrt()).ln() / nf;
        let log_m_target = -nf * gamma + nf * power / (2.0 * var) - nf * power * power / (2.0 * var * var) - nf.cbrt();
        let power_budget = 2.0 * var * (budget.delta / nf).sqrt();
        Ok(Self {
            n,
            epsilon_prime: eps_p,
            delta_prime,
            alpha,
            power,
            gamma,
            log_m_target,
            power_budget,
        })
    }

    /// Threshold `ln M + nγ` on the information density for a code with
    /// `messages` non-zero messages.
    pub fn decoding_threshold(&self, messages: u64) -> f64 {
        (messages as f64).ln() + self.n as f64 * self.gamma
    }

    /// `⌊α M⌋`, the number of all-zero codewords added to `messages` base messages.
    pub fn zero_codewords(&self, messages: u64) -> u64 {
        floor_count(self.alpha * messages as f64)
    }
}

/// Scaling parameters with the base code required to be non-empty.
pub fn scaling_parameters(n: u64, budget: CovertBudget, channel: ChannelParams) -> Result<ScalingParams> {
    let params = ScalingParams::evaluate(n, budget, channel)?;
    if params.log_m_target <= 0.0 {
        return Err(Error::DegenerateSize {
            n,
            log_m_target: params.log_m_target,
        });
    }
    Ok(params)
}

// Products such as 0.8 * 1000 land a few ulps below the integer.
fn floor_count(x: f64) -> u64 {
    let nearest = x.round();
    if (x - nearest).abs() <= 1e-9 * nearest.max(1.0) {
        nearest as u64
    } else {
        x.floor() as u64
    }
}

/// `½ ln(1 + ρ/σ²)`: per-use capacity of the AWGN channel at power `rho`.
pub fn gaussian_capacity_bound(rho: f64, channel: ChannelParams) -> Result<f64> {
    if !(rho >= 0.0) {
        return Err(domain("rho", rho, "rho >= 0"));
    }
    Ok(0.5 * (rho / channel.variance()).ln_1p())
}

/// One ε sample of a [`BoundCurve`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundPoint {
    pub epsilon: f64,
    pub lower: f64,
    pub upper: f64,
}

/// Lower and upper bounds on `L(ε, δ)` over a grid of ε at fixed δ.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundCurve {
    pub delta: f64,
    pub points: Vec<BoundPoint>,
}

pub fn bound_curve(delta: f64, epsilon_grid: &[f64]) -> Result<BoundCurve> {
    if epsilon_grid.is_empty() {
        return Err(Error::NoSamples("epsilon grid"));
    }
    let mut points = Vec::with_capacity(epsilon_grid.len());
    for (i, &epsilon) in epsilon_grid.iter().enumerate() {
        if i > 0 && !(epsilon > epsilon_grid[i - 1]) {
            return Err(domain("epsilon", epsilon, "grid strictly increasing"));
        }
        let b = asymptotic_bounds(CovertBudget::new(epsilon, delta)?);
        points.push(BoundPoint {
            epsilon,
            lower: b.lower,
            upper: b.upper,
        });
    }
    Ok(BoundCurve { delta, points })
}

/// Evenly spaced ε values `min, min+step, ..., max`.
///
/// Each value is snapped to 12 significant digits so that decimal grids
/// (`0.01, 0.02, ...`) hit the nearest doubles of their decimal spellings.
pub fn epsilon_grid(min: f64, max: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0 && step.is_finite()) {
        return Err(domain("step", step, "step > 0"));
    }
    if !(max >= min) {
        return Err(domain("max", max, "max >= min"));
    }
    let count = ((max - min) / step + 1e-9).floor() as usize + 1;
    let grid: Vec<f64> = (0..count)
        .map(|i| {
            let raw = min + i as f64 * step;
            format!("{raw:.11e}").parse().expect("formatted float parses")
        })
        .collect();
    for &e in &grid {
        if !(e > 0.0 && e < 1.0) {
            return Err(domain("epsilon", e, "0 < epsilon < 1"));
        }
    }
    Ok(grid)
}
