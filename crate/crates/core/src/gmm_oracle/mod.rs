//! Analytic ground truth when the data law is a Gaussian mixture.
//!
//! For ρ_X = Σ w_k N(m_k, C_k), I_t is again a mixture with components
//! N(β m_k, Σ_k(t)), Σ_k(t) = α² I + β² C_k. Conditioning on I_t = x gives,
//! with responsibilities r_k(x),
//!
//! ```text
//! s    = −Σ r_k Σ_k⁻¹ (x − β m_k)
//! η_X  =  Σ r_k [m_k + β C_k Σ_k⁻¹ (x − β m_k)]
//! η_Z  =  α Σ r_k Σ_k⁻¹ (x − β m_k) = −α s
//! ```

mod exact;
mod mixture;
mod oracle;

pub use exact::exact_gaussian_path;
pub use mixture::{Component, GaussianMixture};
pub use oracle::{drift_field, marginal_params, oracle_eval, GmmOracle, LogDensity, MarginalComponent, OracleEval};
