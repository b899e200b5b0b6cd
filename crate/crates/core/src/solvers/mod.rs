//! Fixed-step ODE/SDE integrators driven by a shared Wiener realization.
//!
//! Three schemes on the uniform grid t_n = n/N, with per-step noise
//! V_n = √(∫ 2ε / Δt)·ΔW_n so that Var V_n = ∫_{t_n}^{t_{n+1}} 2ε:
//!
//! * Euler–Maruyama: Y_{n+1} = Y_n + Δt b(t_n, Y_n) + V_n
//! * predictor–corrector: predict from the corrected state with the drift at
//!   the predicted state, Y_{n+1} = Ỹ_n + Δt b(t_n, Y_n) + V_n, then
//!   Ỹ_{n+1} = Ỹ_n + ½Δt (b(t_n, Y_n) + b(t_{n+1}, Y_{n+1})) + V_n
//! * Heun: as predictor–corrector but predicting with b(t_n, Ỹ_n).

mod algorithms;
mod integrate;
mod path;
mod wiener;

pub use algorithms::{ode_sample, ode_sample_path, sde_sample, sde_sample_noise_variances, sde_sample_path};
pub use integrate::{
    integrate, integrate_reverse, linear_optimal_first_step, FirstStepRule, Integrator, Scheme, SolverConfig,
};
pub use path::Path;
pub use wiener::{coarsen_wiener, WienerPath};
