//! Mortgage-backed security present value with rate-driven prepayment.
//!
//! Monthly rates follow `i_k = K_0 e^(ξ_k) i_(k-1)` with `ξ_k ~ N(0, σ)` and
//! `K_0 = e^(-σ²/2)`, so `E(i_k) = i_0`. The prepayment fraction is
//! `w_k = K_1 + K_2 arctan(K_3 i_k + K_4)`, and the security value is
//! `Σ u_k m_k` with
//!
//! ```text
//! u_k = ∏_(j<k) (1 + i_j)^-1        r_k = ∏_(1<=j<k) (1 - w_j)
//! c_k = Σ_(j=0)^(M-k) (1 + i_0)^-j  m_k = c r_k ((1 - w_k) + w_k c_k)
//! ```
//!
//! `m_k` is evaluated as `c r_k (1 + w_k (c_k - 1))`, which is exact when
//! `c_k = 1`.

use super::normal::inv_normal;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct MbsConfig {
    /// `i_0`, the monthly mortgage rate.
    pub initial_rate: f64,
    pub k1: f64,
    pub k2: f64,
    pub k3: f64,
    pub k4: f64,
    /// `σ²`, the variance of `ξ_k`.
    pub variance: f64,
    /// Mortgage length `M` in months.
    pub months: usize,
    /// Monthly payment `c`.
    pub payment: f64,
}

impl Default for MbsConfig {
    /// `(i_0, K_1, K_2, K_3, K_4, σ²) = (0.007, 0.01, -0.005, 10, 0.5, 0.0004)`
    /// on a 360-month mortgage with unit payment.
    fn default() -> Self {
        MbsConfig {
            initial_rate: 0.007,
            k1: 0.01,
            k2: -0.005,
            k3: 10.0,
            k4: 0.5,
            variance: 0.0004,
            months: 360,
            payment: 1.0,
        }
    }
}

impl MbsConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.initial_rate > 0.0) {
            return Err(Error::invalid(format!("i_0 must be positive, got {}", self.initial_rate)));
        }
        if !(self.variance >= 0.0) {
            return Err(Error::invalid(format!("σ² must be non-negative, got {}", self.variance)));
        }
        if self.months == 0 {
            return Err(Error::invalid("mortgage length must be at least one month"));
        }
        Ok(())
    }

    /// `K_0 = e^(-σ²/2)`.
    pub fn k0(&self) -> f64 {
        (-0.5 * self.variance).exp()
    }

    pub fn sigma(&self) -> f64 {
        self.variance.sqrt()
    }
}

/// Month-by-month quantities of one path (index `k - 1` holds month `k`).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CashflowTrace {
    pub discount: Vec<f64>,
    pub cashflow: Vec<f64>,
    pub remaining: Vec<f64>,
    pub prepayment: Vec<f64>,
    pub rate: Vec<f64>,
    pub annuity: Vec<f64>,
}

/// A validated configuration with the deterministic annuity ratios `c_k`
/// precomputed.
#[derive(Debug, Clone)]
pub struct MbsModel {
    config: MbsConfig,
    annuity: Vec<f64>,
    sigma: f64,
    /// `ln K_0 = -σ²/2`.
    log_k0: f64,
}

impl MbsModel {
    pub fn new(config: MbsConfig) -> Result<Self> {
        config.validate()?;
        let d = 1.0 / (1.0 + config.initial_rate);
        let m = config.months;
        // c_M = 1, c_k = 1 + d c_(k+1).
        let mut annuity = vec![1.0; m];
        for k in (0..m - 1).rev() {
            annuity[k] = 1.0 + d * annuity[k + 1];
        }
        Ok(MbsModel {
            sigma: config.sigma(),
            log_k0: -0.5 * config.variance,
            config,
            annuity,
        })
    }

    pub fn config(&self) -> &MbsConfig {
        &self.config
    }

    /// `c_1..c_M`.
    pub fn annuity(&self) -> &[f64] {
        &self.annuity
    }

    pub fn dimension(&self) -> usize {
        self.config.months
    }

    /// Present value from `ξ_1..ξ_M` (already scaled to standard deviation σ).
    pub fn present_value(&self, xi: &[f64]) -> f64 {
        self.accumulate(xi.iter().copied())
    }

    /// Present value from uniforms, `ξ_k = σ Φ^-1(u_k)`.
    pub fn present_value_from_uniforms(&self, uniforms: &[f64]) -> f64 {
        let s = self.sigma;
        self.accumulate(uniforms.iter().map(|&u| s * inv_normal(u)))
    }

    #[inline]
    fn accumulate(&self, xi: impl Iterator<Item = f64>) -> f64 {
        let c = &self.config;
        let mut rate_prev = c.initial_rate;
        let mut discount = 1.0;
        let mut remaining = 1.0;
        let mut pv = 0.0;
        for (x, &ck) in xi.zip(&self.annuity) {
            discount /= 1.0 + rate_prev;
            let rate = (self.log_k0 + x).exp() * rate_prev;
            let w = c.k1 + c.k2 * (c.k3 * rate + c.k4).atan();
            pv += discount * c.payment * remaining * (1.0 + w * (ck - 1.0));
            remaining *= 1.0 - w;
            rate_prev = rate;
        }
        pv
    }

    /// `i_1..i_k` for `k = xi.len()` shocks.
    pub fn rate_path(&self, xi: &[f64]) -> Vec<f64> {
        let mut rate = self.config.initial_rate;
        xi.iter()
            .map(|&x| {
                rate *= (self.log_k0 + x).exp();
                rate
            })
            .collect()
    }

    /// Every intermediate quantity of one path.
    pub fn trace(&self, xi: &[f64]) -> CashflowTrace {
        let c = &self.config;
        let mut t = CashflowTrace::default();
        let mut rate_prev = c.initial_rate;
        let mut discount = 1.0;
        let mut remaining = 1.0;
        for (&x, &ck) in xi.iter().zip(&self.annuity) {
            discount /= 1.0 + rate_prev;
            let rate = (self.log_k0 + x).exp() * rate_prev;
            let w = c.k1 + c.k2 * (c.k3 * rate + c.k4).atan();
            t.discount.push(discount);
            t.cashflow.push(c.payment * remaining * (1.0 + w * (ck - 1.0)));
            t.remaining.push(remaining);
            t.prepayment.push(w);
            t.rate.push(rate);
            t.annuity.push(ck);
            remaining *= 1.0 - w;
            rate_prev = rate;
        }
        t
    }
}

/// Present value `Σ u_k m_k` for one draw of `ξ_1..ξ_M`.
pub fn mbs_pv(xi: &[f64], config: &MbsConfig) -> Result<f64> {
    let model = MbsModel::new(config.clone())?;
    if xi.len() != config.months {
        return Err(Error::invalid(format!(
            "{} shocks given for a {}-month mortgage",
            xi.len(),
            config.months
        )));
    }
    Ok(model.present_value(xi))
}
