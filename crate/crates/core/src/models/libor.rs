//! LIBOR market model caplet pricing.
//!
//! Forward rates `L_n`, `n = 1..=n*` with `n* = T/δ`, are initialised from
//! bond prices on the grid `T_n = nδ` and evolved with an Euler scheme under
//! the spot measure, one step per accrual period, with a single Brownian
//! factor and constant volatility. At `t = T_i` the rates `L_1..L_i` have
//! fixed and only `L_(i+1)..L_n*` move.
//!
//! The caplet on `L(T, T) = L_n*(T_n*)` pays `δ (L - K)^+` at `T + δ`. Its
//! time-0 estimator deflates that payment by the rolling bank account
//! `∏_(j=0)^(n*) (1 + δ L_j(T_j))`, where the `j = 0` factor is `1 / B_1(0)`.

use super::curve::{spline_rate, YieldCurve};
use super::normal::{inv_normal, norm_cdf};
use crate::error::{Error, Result};

/// Paths whose drift denominator `1 + δL` falls below this are invalid.
const DENOMINATOR_GUARD: f64 = 1e-12;

/// Caplet contract and model parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct LiborConfig {
    /// Valuation time `t`; the simulation itself always starts at 0.
    pub valuation_time: f64,
    /// Caplet fixing time `T` (years).
    pub fixing_time: f64,
    /// Accrual period `δ` (years).
    pub accrual: f64,
    /// Strike rate `K`.
    pub strike: f64,
    /// Constant volatility `σ`.
    pub volatility: f64,
    pub curve: YieldCurve,
}

impl Default for LiborConfig {
    /// `(t, T, δ, K, σ) = (0, 5, 0.5, 0.01, 0.04)` on the 2012-02-24
    /// Treasury curve.
    fn default() -> Self {
        LiborConfig {
            valuation_time: 0.0,
            fixing_time: 5.0,
            accrual: 0.5,
            strike: 0.01,
            volatility: 0.04,
            curve: YieldCurve::treasury_2012_02_24(),
        }
    }
}

impl LiborConfig {
    pub fn validate(&self) -> Result<()> {
        let (t, big_t, d) = (self.valuation_time, self.fixing_time, self.accrual);
        if !(0.0 <= t && t < big_t) {
            return Err(Error::invalid(format!("need 0 <= t < T, got t={t}, T={big_t}")));
        }
        if !(d > 0.0) {
            return Err(Error::invalid(format!("accrual must be positive, got {d}")));
        }
        if !(self.strike > 0.0) {
            return Err(Error::invalid(format!("strike must be positive, got {}", self.strike)));
        }
        if !(self.volatility >= 0.0) {
            return Err(Error::invalid(format!("volatility must be non-negative, got {}", self.volatility)));
        }
        let ratio = big_t / d;
        if (ratio - ratio.round()).abs() > 1e-9 || ratio.round() < 1.0 {
            return Err(Error::invalid(format!("T/δ = {ratio} is not a positive integer")));
        }
        Ok(())
    }

    /// `n* = T/δ`: number of Euler steps and index of the caplet's rate.
    pub fn steps(&self) -> usize {
        (self.fixing_time / self.accrual).round() as usize
    }
}

/// Zero-coupon bond prices `B(0, nδ) = exp(-y(nδ) nδ)`, `n = 1..=horizon/δ`,
/// with `y` the spline yield converted from percent.
pub fn bond_prices(curve: &YieldCurve, accrual: f64, horizon: f64) -> Result<Vec<f64>> {
    if !(accrual > 0.0) {
        return Err(Error::invalid(format!("accrual must be positive, got {accrual}")));
    }
    let count = (horizon / accrual).round() as usize;
    (1..=count)
        .map(|n| {
            let t = n as f64 * accrual;
            spline_rate(curve, t).map(|y| (-y / 100.0 * t).exp())
        })
        .collect()
}

/// Initial forward rates `L_n(0) = (B_n - B_(n+1)) / (δ B_(n+1))`, for
/// `n = 1..M` given `B_1..B_(M+1)`.
pub fn init_libor(bonds: &[f64], accrual: f64) -> Result<Vec<f64>> {
    if bonds.len() < 2 {
        return Err(Error::invalid("need at least two bond prices"));
    }
    if let Some(b) = bonds.iter().find(|&&b| !(b > 0.0)) {
        return Err(Error::invalid(format!("bond price {b} is not positive")));
    }
    Ok(bonds.windows(2).map(|w| (w[0] - w[1]) / (accrual * w[1])).collect())
}

/// Discretised forward rates during an Euler simulation.
#[derive(Debug, Clone)]
pub struct LiborState {
    /// `L̂_1..L̂_n*`, zero-based.
    rates: Vec<f64>,
    /// Current grid index `i` (time `t_i = T_i`).
    step: usize,
    accrual: f64,
    volatility: f64,
    /// `∏_(j=1)^(i) (1 + δ L̂_j(T_j))`.
    growth: f64,
    valid: bool,
}

impl LiborState {
    pub fn new(initial: Vec<f64>, accrual: f64, volatility: f64) -> Self {
        LiborState {
            rates: initial,
            step: 0,
            accrual,
            volatility,
            growth: 1.0,
            valid: true,
        }
    }

    pub fn rates(&self) -> &[f64] {
        &self.rates
    }

    pub fn step_index(&self) -> usize {
        self.step
    }

    /// Accrued bank account growth over the fixings seen so far.
    pub fn growth(&self) -> f64 {
        self.growth
    }

    /// False if a drift denominator `1 + δL` came within 1e-12 of zero.
    pub fn is_valid(&self) -> bool {
        self.valid
    }

    /// One Euler step `T_i -> T_(i+1)` driven by the standard normal `z`.
    #[inline]
    pub fn advance(&mut self, z: f64) {
        let i = self.step;
        let d = self.accrual;
        let var = self.volatility * self.volatility;
        let dt = d;
        let diffusion = dt.sqrt() * self.volatility * z;
        let mut drift = 0.0;
        // η(T_i) = i + 1, i.e. zero-based index i.
        for l in self.rates[i..].iter_mut() {
            let old = *l;
            let denom = 1.0 + d * old;
            if denom.abs() < DENOMINATOR_GUARD {
                self.valid = false;
            }
            drift += d * old * var / denom;
            *l = old + drift * old * dt + old * diffusion;
        }
        self.step += 1;
        // L_(i+1) has now fixed at T_(i+1).
        if let Some(&fixed) = self.rates.get(i) {
            self.growth *= 1.0 + d * fixed;
        }
    }

    /// The last rate, `L̂_n*`.
    pub fn terminal_rate(&self) -> f64 {
        *self.rates.last().expect("at least one rate")
    }
}

/// Runs the Euler scheme over all `n*` steps, one standard normal per step.
pub fn libor_euler_path(initial: &[f64], config: &LiborConfig, normals: &[f64]) -> Result<LiborState> {
    let steps = config.steps();
    if initial.len() < steps {
        return Err(Error::invalid(format!(
            "{} initial rates given, {steps} needed",
            initial.len()
        )));
    }
    if normals.len() != steps {
        return Err(Error::invalid(format!("{} normals given, {steps} steps", normals.len())));
    }
    let mut state = LiborState::new(initial[..steps].to_vec(), config.accrual, config.volatility);
    for &z in normals {
        state.advance(z);
    }
    Ok(state)
}

/// Value at `T` of the caplet payment: `δ (L - K)^+ / (1 + δ L)`.
pub fn caplet_value_at_fixing(rate: f64, strike: f64, accrual: f64) -> f64 {
    accrual * (rate - strike).max(0.0) / (1.0 + accrual * rate)
}

/// Time-0 value of one simulated caplet payoff.
///
/// `first_bond` is `B(0, T_1) = 1 / (1 + δ L_0(0))`, the first factor of the
/// deflator.
pub fn caplet_discounted_payoff(path: &LiborState, config: &LiborConfig, first_bond: f64) -> f64 {
    let rate = path.terminal_rate();
    let payment = config.accrual * (rate - config.strike).max(0.0);
    // path.growth() includes the terminal fixing 1 + δL(T,T).
    first_bond * payment / path.growth()
}

/// Leading factor of the Black caplet formula.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BlackFactor {
    /// `δ`: consistent with the payoff `δ (L - K)^+`.
    #[default]
    Accrual,
    /// `σ`: the factor as sometimes printed; kept for comparison only.
    Volatility,
}

/// Black's caplet price `δ B(t, T+δ) (L Φ(d1) - K Φ(d2))`.
pub fn black_caplet(config: &LiborConfig, forward: f64, bond: f64) -> Result<f64> {
    black_caplet_with_factor(config, forward, bond, BlackFactor::Accrual)
}

pub fn black_caplet_with_factor(config: &LiborConfig, forward: f64, bond: f64, factor: BlackFactor) -> Result<f64> {
    if !(forward > 0.0) {
        return Err(Error::invalid(format!("forward rate must be positive, got {forward}")));
    }
    if !(config.strike > 0.0) {
        return Err(Error::invalid(format!("strike must be positive, got {}", config.strike)));
    }
    let lead = match factor {
        BlackFactor::Accrual => config.accrual,
        BlackFactor::Volatility => config.volatility,
    };
    let k = config.strike;
    let sd = config.volatility * (config.fixing_time - config.valuation_time).sqrt();
    if sd <= 0.0 {
        return Ok(lead * bond * (forward - k).max(0.0));
    }
    let d1 = ((forward / k).ln() + 0.5 * sd * sd) / sd;
    let d2 = d1 - sd;
    Ok(lead * bond * (forward * norm_cdf(d1) - k * norm_cdf(d2)))
}

/// Precomputed initial state for repeated caplet path evaluation.
#[derive(Debug, Clone)]
pub struct LiborPricer {
    config: LiborConfig,
    initial: Vec<f64>,
    /// `B(0, T_1)`.
    first_bond: f64,
    /// `B(0, T + δ)`.
    payment_bond: f64,
}

impl LiborPricer {
    pub fn new(config: LiborConfig) -> Result<Self> {
        config.validate()?;
        if config.valuation_time != 0.0 {
            return Err(Error::invalid("the simulation starts at valuation time 0"));
        }
        let steps = config.steps();
        let bonds = bond_prices(&config.curve, config.accrual, config.fixing_time + config.accrual)?;
        let initial = init_libor(&bonds, config.accrual)?;
        Ok(LiborPricer {
            first_bond: bonds[0],
            payment_bond: bonds[steps],
            initial,
            config,
        })
    }

    pub fn config(&self) -> &LiborConfig {
        &self.config
    }

    /// `L̂_1(0)..L̂_n*(0)`.
    pub fn initial_rates(&self) -> &[f64] {
        &self.initial
    }

    /// `L(0, T)`.
    pub fn initial_forward(&self) -> f64 {
        self.initial[self.config.steps() - 1]
    }

    pub fn first_bond(&self) -> f64 {
        self.first_bond
    }

    pub fn payment_bond(&self) -> f64 {
        self.payment_bond
    }

    /// Number of uniforms consumed per path.
    pub fn dimension(&self) -> usize {
        self.config.steps()
    }

    pub fn black_price(&self) -> Result<f64> {
        black_caplet(&self.config, self.initial_forward(), self.payment_bond)
    }

    /// Discounted payoff from one standard normal per step; NaN if the path
    /// hit the drift-denominator guard.
    pub fn payoff_from_normals(&self, normals: &[f64]) -> f64 {
        let mut state = LiborState::new(self.initial.clone(), self.config.accrual, self.config.volatility);
        for &z in normals {
            state.advance(z);
        }
        if !state.is_valid() {
            return f64::NAN;
        }
        caplet_discounted_payoff(&state, &self.config, self.first_bond)
    }

    /// Discounted payoff from uniforms mapped through the inverse normal.
    pub fn payoff_from_uniforms(&self, uniforms: &[f64]) -> f64 {
        let mut state = LiborState::new(self.initial.clone(), self.config.accrual, self.config.volatility);
        for &u in uniforms {
            state.advance(inv_normal(u));
        }
        if !state.is_valid() {
            return f64::NAN;
        }
        caplet_discounted_payoff(&state, &self.config, self.first_bond)
    }
}
