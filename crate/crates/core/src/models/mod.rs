//! Pricing models driven by uniform points.

pub mod curve;
pub mod libor;
pub mod mbs;
pub mod normal;

pub use curve::{spline_rate, YieldCurve};
pub use libor::{
    black_caplet, black_caplet_with_factor, bond_prices, caplet_discounted_payoff, caplet_value_at_fixing,
    init_libor, libor_euler_path, BlackFactor, LiborConfig, LiborPricer, LiborState,
};
pub use mbs::{mbs_pv, CashflowTrace, MbsConfig, MbsModel};
pub use normal::{inv_normal, norm_cdf};
