//! Scalar polynomial plants and grid-based checks of the hybrid Lyapunov
//! conditions.
//!
//! A [`ScalarPolySystem`] describes `x' = p(x) + u` under the feedback
//! `u = kappa(x + e)`, where `e` is the sampling error. Together with a
//! Lyapunov candidate `V`, an output `H(x) = |q(x)|` and `W(e) = |e|`, a
//! parameter set `(gamma, L, epsilon)` is admissible when for all `x, e`
//!
//! ```text
//! V'(x) f(x, e)      <= -epsilon V(x) - H(x)^2 + gamma^2 W(e)^2
//! 2 e g(x, e)        <= 2 W(e) (L W(e) + H(x))          with g = -f
//! ```
//!
//! [`check_assumption2`] evaluates both inequalities on a dense grid. This is
//! a numerical spot check and not a proof.

use rayon::prelude::*;

use crate::emulation::EmulationParams;
use crate::error::{invalid, Result};

/// Label attached to every grid-based feasibility result.
pub const GRID_CAVEAT: &str = "grid-verified, not a sum-of-squares certificate";

/// Margin below which an inequality counts as violated.
pub const MARGIN_TOLERANCE: f64 = -1e-9;

/// Polynomial with coefficients in ascending order of degree.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Poly(pub Vec<f64>);

impl Poly {
    pub fn new(coeffs: impl Into<Vec<f64>>) -> Self {
        Self(coeffs.into())
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.0.iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }

    pub fn derivative(&self) -> Poly {
        Poly(
            self.0
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, &c)| k as f64 * c)
                .collect(),
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalarPolySystem {
    /// Plant drift `p`.
    pub drift: Poly,
    /// Feedback law `kappa`.
    pub feedback: Poly,
    /// Lyapunov candidate `V`.
    pub lyapunov: Poly,
    /// `q` with `H(x) = |q(x)|`.
    pub output: Poly,
    pub l: f64,
    lyapunov_grad: Poly,
}

impl ScalarPolySystem {
    pub fn new(drift: Poly, feedback: Poly, lyapunov: Poly, output: Poly, l: f64) -> Result<Self> {
        if !(l > 0.0 && l.is_finite()) {
            return invalid(format!("L must be positive, got {l}"));
        }
        if (drift.eval(0.0) + feedback.eval(0.0)).abs() > 1e-12 {
            return invalid("origin is not an equilibrium: p(0) + kappa(0) != 0");
        }
        if lyapunov.eval(0.0).abs() > 1e-12 {
            return invalid("Lyapunov candidate must vanish at the origin");
        }
        for k in -1000..=1000 {
            if k == 0 {
                continue;
            }
            let x = k as f64 * 5e-3;
            if lyapunov.eval(x) <= 0.0 {
                return invalid(format!("Lyapunov candidate is not positive at x = {x}"));
            }
        }
        let lyapunov_grad = lyapunov.derivative();
        Ok(Self {
            drift,
            feedback,
            lyapunov,
            output,
            l,
            lyapunov_grad,
        })
    }

    /// `x' = d2 x^2 - x^3 + u` with `kappa(x) = -2x`,
    /// `V = x^4/2 - 2x^3/3 + 2x^2`, `H = |2x - x^2 + x^3|`, `L = 2`.
    ///
    /// For `d2 = 1` this is the textbook example whose output matches the
    /// negated closed-loop drift.
    pub fn example(d2: f64) -> Self {
        Self::new(
            Poly::new([0.0, 0.0, d2, -1.0]),
            Poly::new([0.0, -2.0]),
            Poly::new([0.0, 0.0, 2.0, -2.0 / 3.0, 0.5]),
            Poly::new([0.0, 2.0, -d2, 1.0]),
            2.0,
        )
        .expect("example system is well formed")
    }

    /// Closed-loop drift `f(x, e) = p(x) + kappa(x + e)`.
    pub fn flow(&self, x: f64, e: f64) -> f64 {
        self.drift.eval(x) + self.feedback.eval(x + e)
    }

    pub fn v(&self, x: f64) -> f64 {
        self.lyapunov.eval(x)
    }

    pub fn v_grad(&self, x: f64) -> f64 {
        self.lyapunov_grad.eval(x)
    }

    /// `H(x) = |q(x)|`.
    pub fn h_of(&self, x: f64) -> f64 {
        self.output.eval(x).abs()
    }
}

/// Rectangular sampling grid on `[-x_bound, x_bound] x [-e_bound, e_bound]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub x_bound: f64,
    pub e_bound: f64,
    pub nx: usize,
    pub ne: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            x_bound: 5.0,
            e_bound: 5.0,
            nx: 500,
            ne: 500,
        }
    }
}

impl GridSpec {
    pub const MIN_POINTS: usize = 10_000;

    pub fn validate(&self) -> Result<()> {
        if !(self.x_bound > 0.0 && self.e_bound > 0.0) {
            return invalid("grid bounds must be positive");
        }
        if self.nx < 2 || self.ne < 2 || self.nx * self.ne < Self::MIN_POINTS {
            return invalid(format!(
                "grid {}x{} is degenerate (need at least {} points)",
                self.nx,
                self.ne,
                Self::MIN_POINTS
            ));
        }
        Ok(())
    }

    fn coord(bound: f64, n: usize, k: usize) -> f64 {
        -bound + 2.0 * bound * k as f64 / (n - 1) as f64
    }

    pub fn x(&self, k: usize) -> f64 {
        Self::coord(self.x_bound, self.nx, k)
    }

    pub fn e(&self, k: usize) -> f64 {
        Self::coord(self.e_bound, self.ne, k)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeasibilityReport {
    /// Minimum of `-eps V - H^2 + gamma^2 W^2 - V' f` over the grid.
    pub v_margin: f64,
    pub v_witness: (f64, f64),
    /// Minimum of `2 W (L W + H) - 2 e g` over the grid.
    pub w_margin: f64,
    pub w_witness: (f64, f64),
    pub feasible: bool,
    pub points: usize,
}

impl FeasibilityReport {
    pub fn v_feasible(&self) -> bool {
        self.v_margin >= MARGIN_TOLERANCE
    }

    pub fn w_feasible(&self) -> bool {
        self.w_margin >= MARGIN_TOLERANCE
    }
}

impl std::fmt::Display for FeasibilityReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "feasibility: {}", if self.feasible { "feasible" } else { "infeasible" })?;
        writeln!(
            f,
            "  V-decrease margin  {:.9e} at (x, e) = ({:.6}, {:.6})",
            self.v_margin, self.v_witness.0, self.v_witness.1
        )?;
        writeln!(
            f,
            "  W-growth margin    {:.9e} at (x, e) = ({:.6}, {:.6})",
            self.w_margin, self.w_witness.0, self.w_witness.1
        )?;
        writeln!(f, "  grid points        {}", self.points)?;
        write!(f, "  note: numerical spot check, not a proof ({GRID_CAVEAT})")
    }
}

/// Minimum margins of both hybrid Lyapunov inequalities on `grid`.
pub fn check_assumption2(
    sys: &ScalarPolySystem,
    params: &EmulationParams,
    grid: &GridSpec,
) -> Result<FeasibilityReport> {
    grid.validate()?;
    let gamma2 = params.gamma * params.gamma;
    let (eps, l) = (params.epsilon, params.l);
    let init = || (f64::INFINITY, (0.0, 0.0), f64::INFINITY, (0.0, 0.0));
    let (v_margin, v_witness, w_margin, w_witness) = (0..grid.nx)
        .into_par_iter()
        .map(|i| {
            let x = grid.x(i);
            let v = sys.v(x);
            let dv = sys.v_grad(x);
            let hx = sys.h_of(x);
            let mut acc = init();
            for j in 0..grid.ne {
                let e = grid.e(j);
                let f = sys.flow(x, e);
                let w = e.abs();
                let vm = -eps * v - hx * hx + gamma2 * w * w - dv * f;
                let wm = 2.0 * w * (l * w + hx) - 2.0 * e * (-f);
                if vm < acc.0 {
                    acc.0 = vm;
                    acc.1 = (x, e);
                }
                if wm < acc.2 {
                    acc.2 = wm;
                    acc.3 = (x, e);
                }
            }
            acc
        })
        .collect::<Vec<_>>()
        .into_iter()
        .fold(init(), |a, b| {
            let (vm, vw) = if b.0 < a.0 { (b.0, b.1) } else { (a.0, a.1) };
            let (wm, ww) = if b.2 < a.2 { (b.2, b.3) } else { (a.2, a.3) };
            (vm, vw, wm, ww)
        });
    Ok(FeasibilityReport {
        v_margin,
        v_witness,
        w_margin,
        w_witness,
        feasible: v_margin >= MARGIN_TOLERANCE && w_margin >= MARGIN_TOLERANCE,
        points: grid.nx * grid.ne,
    })
}
