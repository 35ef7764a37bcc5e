//! Emulation-based timing bounds.
//!
//! For a loop whose continuous-time feedback satisfies the hybrid Lyapunov
//! conditions with gain `gamma`, the Lyapunov function `V` evolves between
//! two receptions at most like `exp(max{-epsilon, 2(L - Lambda)} t)` as long
//! as the time between receptions stays below `t_max(gamma, Lambda)`.
//!
//! ```text
//! r = sqrt(|(gamma/Lambda)^2 - 1|)
//!
//!                    | arctan(r)  / (Lambda r)   gamma > Lambda
//! t_max(gamma, Lambda) = | 1 / Lambda               gamma = Lambda
//!                    | arctanh(r) / (Lambda r)   gamma < Lambda
//! ```
//!
//! The refinement `t_tilde_max(lambda, ..)` is the time the scalar ODE
//! `phi' = -2 Lambda phi - gamma (phi^2 + 1)`, `phi(0) = 1/lambda`, needs to
//! reach `lambda`. It is used by trace diagnostics through the function
//! `U = V(x) + gamma phi W(e)^2`.

use std::fmt;

use crate::error::{invalid, Result};

/// One parameter set `(gamma, L, Lambda, epsilon)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmulationParams {
    pub gamma: f64,
    /// Growth constant of the sampling-error bound.
    pub l: f64,
    /// Tuning constant `Lambda`.
    pub lambda: f64,
    /// Decay rate of `V`; may be negative.
    pub epsilon: f64,
}

impl EmulationParams {
    pub fn new(gamma: f64, l: f64, lambda: f64, epsilon: f64) -> Result<Self> {
        if !(gamma > 0.0 && l > 0.0 && lambda > 0.0) || !gamma.is_finite() || !l.is_finite() {
            return invalid(format!(
                "gamma, L and Lambda must be positive and finite (got {gamma}, {l}, {lambda})"
            ));
        }
        if !epsilon.is_finite() || !lambda.is_finite() {
            return invalid("epsilon and Lambda must be finite");
        }
        Ok(Self { gamma, l, lambda, epsilon })
    }

    /// Exponential rate `max{-epsilon, 2(L - Lambda)}` bounding `V` between receptions.
    pub fn decay_exponent(&self) -> f64 {
        (-self.epsilon).max(2.0 * (self.l - self.lambda))
    }

    pub fn t_max(&self) -> f64 {
        t_max(self.gamma, self.lambda).expect("validated at construction")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TmaxBranch {
    Arctan,
    Reciprocal,
    Arctanh,
}

impl fmt::Display for TmaxBranch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Arctan => "arctan (gamma > Lambda)",
            Self::Reciprocal => "1/Lambda (gamma = Lambda)",
            Self::Arctanh => "arctanh (gamma < Lambda)",
        })
    }
}

fn branch(gamma: f64, lambda_cap: f64) -> TmaxBranch {
    if (gamma - lambda_cap).abs() <= 1e-12 * gamma.max(lambda_cap) {
        TmaxBranch::Reciprocal
    } else if gamma > lambda_cap {
        TmaxBranch::Arctan
    } else {
        TmaxBranch::Arctanh
    }
}

pub fn ratio_r(gamma: f64, lambda_cap: f64) -> f64 {
    ((gamma / lambda_cap).powi(2) - 1.0).abs().sqrt()
}

fn check_positive(gamma: f64, lambda_cap: f64) -> Result<()> {
    if gamma > 0.0 && lambda_cap > 0.0 && gamma.is_finite() && lambda_cap.is_finite() {
        Ok(())
    } else {
        invalid(format!("gamma and Lambda must be positive (got {gamma}, {lambda_cap})"))
    }
}

/// `arctanh` in log form, restricted to `[0, 1)`.
fn atanh_guarded(x: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&x) {
        return invalid(format!("arctanh argument {x} outside [0, 1)"));
    }
    Ok(0.5 * (x.ln_1p() - (-x).ln_1p()))
}

/// Maximum time between receptions for which the emulation bound holds.
pub fn t_max(gamma: f64, lambda_cap: f64) -> Result<f64> {
    t_max_with_branch(gamma, lambda_cap).map(|(t, _)| t)
}

pub fn t_max_with_branch(gamma: f64, lambda_cap: f64) -> Result<(f64, TmaxBranch)> {
    check_positive(gamma, lambda_cap)?;
    let r = ratio_r(gamma, lambda_cap);
    let b = branch(gamma, lambda_cap);
    let t = match b {
        TmaxBranch::Reciprocal => 1.0 / lambda_cap,
        TmaxBranch::Arctan => r.atan() / (lambda_cap * r),
        TmaxBranch::Arctanh => atanh_guarded(r)? / (lambda_cap * r),
    };
    Ok((t, b))
}

/// Time for `phi` to decay from `1/lambda` to `lambda`.
pub fn t_tilde_max(lambda: f64, gamma: f64, lambda_cap: f64) -> Result<f64> {
    if !(lambda > 0.0 && lambda < 1.0) {
        return invalid(format!("lambda must lie in (0, 1), got {lambda}"));
    }
    check_positive(gamma, lambda_cap)?;
    let r = ratio_r(gamma, lambda_cap);
    let b = branch(gamma, lambda_cap);
    if b == TmaxBranch::Reciprocal {
        return Ok((1.0 - lambda) / (1.0 + lambda) / lambda_cap);
    }
    let arg = r * (1.0 - lambda)
        / (2.0 * lambda / (1.0 + lambda) * (gamma / lambda_cap - 1.0) + 1.0 + lambda);
    Ok(match b {
        TmaxBranch::Arctan => arg.atan(),
        _ => atanh_guarded(arg)?,
    } / (lambda_cap * r))
}

/// The `lambda` in (0, 1) whose `t_tilde_max` equals `span`, by bisection.
/// Requires `0 < span < t_max(gamma, lambda_cap)`.
pub fn lambda_for_span(span: f64, gamma: f64, lambda_cap: f64) -> Result<f64> {
    let limit = t_max(gamma, lambda_cap)?;
    if !(span > 0.0 && span < limit) {
        return invalid(format!("span {span} must lie in (0, t_max = {limit})"));
    }
    // t_tilde_max decreases in lambda.
    let (mut lo, mut hi) = (f64::MIN_POSITIVE, 1.0 - f64::EPSILON);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if t_tilde_max(mid, gamma, lambda_cap)? > span {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * hi {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhiState {
    pub lambda: f64,
    pub phi: f64,
    pub tau: f64,
}

fn phi_rate(phi: f64, gamma: f64, lambda_cap: f64) -> f64 {
    -2.0 * lambda_cap * phi - gamma * (phi * phi + 1.0)
}

/// Integrates the `phi` ODE with fixed-step RK4 on `[0, t_end]`. The last
/// step is shortened so the final sample sits exactly at `t_end`.
pub fn solve_phi(
    lambda: f64,
    gamma: f64,
    lambda_cap: f64,
    t_end: f64,
    dt: f64,
) -> Result<Vec<PhiState>> {
    let horizon = t_tilde_max(lambda, gamma, lambda_cap)?;
    if !(dt > 0.0) {
        return invalid("dt must be positive");
    }
    if !(t_end >= 0.0) || t_end > horizon * (1.0 + 1e-12) {
        return invalid(format!("t_end {t_end} outside [0, t_tilde_max = {horizon}]"));
    }
    let rate = |p: f64| phi_rate(p, gamma, lambda_cap);
    let mut out = vec![PhiState { lambda, phi: 1.0 / lambda, tau: 0.0 }];
    let steps = (t_end / dt * (1.0 - 1e-12)).ceil() as usize;
    let mut phi = 1.0 / lambda;
    for k in 0..steps {
        let t0 = k as f64 * dt;
        let t1 = ((k + 1) as f64 * dt).min(t_end);
        let step = t1 - t0;
        let k1 = rate(phi);
        let k2 = rate(phi + 0.5 * step * k1);
        let k3 = rate(phi + 0.5 * step * k2);
        let k4 = rate(phi + step * k3);
        phi += step / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        out.push(PhiState { lambda, phi, tau: t1 });
    }
    Ok(out)
}

/// `U = V + gamma * phi * W^2`.
pub fn u_value(v_of_x: f64, w_of_e: f64, gamma: f64, phi: f64) -> f64 {
    v_of_x + gamma * phi * w_of_e * w_of_e
}
