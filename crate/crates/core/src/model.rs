//! The hybrid system: two smooth vector fields, one switching surface,
//! the Filippov convexification on the surface, and the decision logic
//! for discrete transitions.

use crate::expr::{self, ExprAst, ExprError};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Discrete state of the automaton: the two smooth modes and the sliding
/// mode on the surface.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Mode {
    /// Invariant set `h(x) <= 0`, dynamics `f1`.
    F1,
    /// Invariant set `h(x) >= 0`, dynamics `f2`.
    F2,
    /// Sliding on `h(x) = 0`, index-2 DAE dynamics.
    Sliding,
}

impl Mode {
    pub fn as_q(self) -> u8 {
        match self {
            Mode::F1 => 1,
            Mode::F2 => 2,
            Mode::Sliding => 3,
        }
    }

    pub fn from_q(q: u8) -> Option<Mode> {
        match q {
            1 => Some(Mode::F1),
            2 => Some(Mode::F2),
            3 => Some(Mode::Sliding),
            _ => None,
        }
    }
}

/// A vector-valued expression: one AST per component.
#[derive(Debug, Clone)]
pub struct VectorExpr {
    pub components: Vec<ExprAst>,
}

impl VectorExpr {
    pub fn value(&self, x: &[f64], u: &[f64]) -> Result<DVector<f64>, ExprError> {
        let mut out = DVector::zeros(self.components.len());
        for (i, c) in self.components.iter().enumerate() {
            out[i] = expr::eval_value(c, x, u)?;
        }
        Ok(out)
    }

    /// Value plus Jacobians w.r.t. x (n x n) and u (n x m).
    pub fn value_and_jacobians(
        &self,
        x: &[f64],
        u: &[f64],
    ) -> Result<(DVector<f64>, DMatrix<f64>, DMatrix<f64>), ExprError> {
        let rows = self.components.len();
        let (n, m) = (x.len(), u.len());
        let mut value = DVector::zeros(rows);
        let mut jx = DMatrix::zeros(rows, n);
        let mut ju = DMatrix::zeros(rows, m);
        for (i, c) in self.components.iter().enumerate() {
            let jet = expr::eval_jet(c, x, u)?;
            value[i] = jet.value;
            for j in 0..n {
                jx[(i, j)] = jet.partials[j];
            }
            for j in 0..m {
                ju[(i, j)] = jet.partials[n + j];
            }
        }
        Ok((value, jx, ju))
    }
}

/// The full problem definition: dynamics, surface, cost, terminal
/// constraints, control box, horizon. Immutable after construction.
#[derive(Debug, Clone)]
pub struct HybridSystemSpec {
    pub n: usize,
    pub m: usize,
    pub f1: VectorExpr,
    pub f2: VectorExpr,
    /// Switching surface `h(x)`; its zero set is the sliding manifold.
    pub h: ExprAst,
    /// Optional guard for leaving the sliding mode; `None` means the
    /// Filippov coefficient itself acts as the exit guard.
    pub eta_exit: Option<ExprAst>,
    /// Terminal cost `phi(x(tf))`.
    pub phi: ExprAst,
    /// Equality terminal constraints `g1_i(x(tf)) = 0`.
    pub g1: Vec<ExprAst>,
    /// Inequality terminal constraints `g2_j(x(tf)) <= 0`.
    pub g2: Vec<ExprAst>,
    /// Per-coordinate control bounds `[lo, hi]`.
    pub u_box: Vec<(f64, f64)>,
    pub x0: DVector<f64>,
    pub t0: f64,
    pub tf: f64,
    /// Degeneracy threshold for the Filippov denominator.
    pub eps_deg: f64,
    /// Strictness threshold separating grazing from transversal sign data.
    pub eps_sign: f64,
}

#[derive(Debug, Clone, Error)]
pub enum ModelError {
    #[error("degenerate Filippov combination: |h_x (f1 - f2)| = {denominator:e} below {eps:e} at the queried point")]
    DegenerateFilippov { denominator: f64, eps: f64 },
    #[error(
        "degenerate transition from q={q}: deciding quantities within +-{eps:e} of zero \
         (h_x f1 = {a1:e}, h_x f2 = {a2:e})"
    )]
    DegenerateTransition { q: u8, a1: f64, a2: f64, eps: f64 },
    #[error(transparent)]
    Expr(#[from] ExprError),
}

/// Sign data supporting a transition decision.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransitionWitness {
    /// h_x . f1, evaluated with the control relevant to the decision.
    pub hf1: f64,
    /// h_x . f2, likewise.
    pub hf2: f64,
    /// Filippov coefficient when the denominator admits it.
    pub alpha: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DecisionKind {
    Stay,
    CrossTo1,
    CrossTo2,
    EnterSliding,
    ExitSlidingTo1,
    ExitSlidingTo2,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeDecision {
    pub kind: DecisionKind,
    pub witness: TransitionWitness,
}

impl ModeDecision {
    /// Mode after applying the decision; `None` for stay.
    pub fn target(&self) -> Option<Mode> {
        match self.kind {
            DecisionKind::Stay => None,
            DecisionKind::CrossTo1 | DecisionKind::ExitSlidingTo1 => Some(Mode::F1),
            DecisionKind::CrossTo2 | DecisionKind::ExitSlidingTo2 => Some(Mode::F2),
            DecisionKind::EnterSliding => Some(Mode::Sliding),
        }
    }
}

impl HybridSystemSpec {
    pub fn field(&self, mode: Mode) -> &VectorExpr {
        match mode {
            Mode::F1 => &self.f1,
            Mode::F2 => &self.f2,
            Mode::Sliding => unreachable!("sliding mode has no single smooth field"),
        }
    }

    pub fn h_value(&self, x: &[f64]) -> Result<f64, ExprError> {
        expr::eval_value(&self.h, x, &[])
    }

    /// Value and gradient row of the surface function.
    pub fn h_with_grad(&self, x: &[f64]) -> Result<(f64, DVector<f64>), ExprError> {
        let jet = expr::eval_jet(&self.h, x, &[])?;
        Ok((jet.value, DVector::from_column_slice(&jet.partials)))
    }

    pub fn h_hessian(&self, x: &[f64]) -> Result<DMatrix<f64>, ExprError> {
        expr::eval_hessian_h(&self.h, x)
    }

    fn surface_rates(
        &self,
        x: &[f64],
        u: &[f64],
    ) -> Result<(f64, f64), ModelError> {
        let (_, h_x) = self.h_with_grad(x)?;
        let f1 = self.f1.value(x, u)?;
        let f2 = self.f2.value(x, u)?;
        Ok((h_x.dot(&f1), h_x.dot(&f2)))
    }

    /// The Filippov coefficient `alpha = h_x f1 / (h_x (f1 - f2))`,
    /// returned unclamped: callers use its sign and range for exit
    /// detection.
    pub fn filippov_alpha(&self, x: &[f64], u: &[f64]) -> Result<f64, ModelError> {
        let (hf1, hf2) = self.surface_rates(x, u)?;
        let denominator = hf1 - hf2;
        if denominator.abs() < self.eps_deg {
            return Err(ModelError::DegenerateFilippov {
                denominator,
                eps: self.eps_deg,
            });
        }
        Ok(hf1 / denominator)
    }

    /// The Filippov field `f_F = (1 - alpha) f1 + alpha f2` and the
    /// coefficient used. By construction `h_x . f_F = 0`.
    pub fn filippov_field(&self, x: &[f64], u: &[f64]) -> Result<(DVector<f64>, f64), ModelError> {
        let (_, h_x) = self.h_with_grad(x)?;
        let f1 = self.f1.value(x, u)?;
        let f2 = self.f2.value(x, u)?;
        let hf1 = h_x.dot(&f1);
        let hf2 = h_x.dot(&f2);
        let denominator = hf1 - hf2;
        if denominator.abs() < self.eps_deg {
            return Err(ModelError::DegenerateFilippov {
                denominator,
                eps: self.eps_deg,
            });
        }
        let alpha = hf1 / denominator;
        let f_f = &f1 * (1.0 - alpha) + &f2 * alpha;
        Ok((f_f, alpha))
    }

    /// The sliding consistency function
    /// `e(x, z, u) = h_x f_F + ||h_x||^2 z`; its root in `z` recovers the
    /// algebraic variable, and its drift monitors surface tracking.
    pub fn sliding_residual_e(&self, x: &[f64], u: &[f64], z: f64) -> Result<f64, ModelError> {
        let (_, h_x) = self.h_with_grad(x)?;
        let (f_f, _) = self.filippov_field(x, u)?;
        Ok(h_x.dot(&f_f) + h_x.norm_squared() * z)
    }

    /// The consistent algebraic variable `z = -h_x f_F / ||h_x||^2`
    /// (the root of `e`). Zero on exact sliding; absorbs numerical drift.
    pub fn consistent_z(&self, x: &[f64], u: &[f64]) -> Result<f64, ModelError> {
        let (_, h_x) = self.h_with_grad(x)?;
        let (f_f, _) = self.filippov_field(x, u)?;
        Ok(-h_x.dot(&f_f) / h_x.norm_squared())
    }

    /// Decide the discrete transition at a point on the surface.
    ///
    /// For q in {1, 2} the point must lie on the surface with an event
    /// fired; `u_left`/`u_right` are the control limits from the two sides
    /// (they differ only at control-grid nodes). For q = 3 the decision
    /// re-evaluates sliding validity with the right-limit control.
    ///
    /// Grazing data (a deciding quantity inside the +-eps_sign band in a
    /// configuration no branch claims) raises `DegenerateTransition` with
    /// the witness values.
    pub fn classify_transition(
        &self,
        q: Mode,
        x: &[f64],
        u_left: &[f64],
        u_right: &[f64],
    ) -> Result<ModeDecision, ModelError> {
        let eps = self.eps_sign;
        let (hf1, hf2) = self.surface_rates(x, u_right)?;
        let denom = hf1 - hf2;
        let alpha = if denom.abs() >= self.eps_deg {
            Some(hf1 / denom)
        } else {
            None
        };
        let witness = TransitionWitness { hf1, hf2, alpha };
        let degenerate = |q: u8| ModelError::DegenerateTransition {
            q,
            a1: hf1,
            a2: hf2,
            eps,
        };
        match q {
            Mode::F1 | Mode::F2 => {
                // Leaving is decided by the pre-switch field with the left
                // control; the landing side by both fields with the right
                // control.
                let (_, h_x) = self.h_with_grad(x)?;
                let f_leave = self.field(q).value(x, u_left)?;
                let rate_leave = h_x.dot(&f_leave);
                let (outward, inward) = match q {
                    Mode::F1 => (rate_leave > eps, rate_leave < -eps),
                    _ => (rate_leave < -eps, rate_leave > eps),
                };
                if inward {
                    return Ok(ModeDecision {
                        kind: DecisionKind::Stay,
                        witness,
                    });
                }
                if !outward {
                    return Err(degenerate(q.as_q()));
                }
                let kind = match q {
                    // From q=1 the surface is reached with h increasing:
                    // f2 also increasing crosses, f2 decreasing slides.
                    Mode::F1 => {
                        if hf2 > eps {
                            DecisionKind::CrossTo2
                        } else if hf2 < -eps {
                            DecisionKind::EnterSliding
                        } else {
                            return Err(degenerate(1));
                        }
                    }
                    _ => {
                        if hf1 < -eps {
                            DecisionKind::CrossTo1
                        } else if hf1 > eps {
                            DecisionKind::EnterSliding
                        } else {
                            return Err(degenerate(2));
                        }
                    }
                };
                Ok(ModeDecision { kind, witness })
            }
            Mode::Sliding => {
                // Strict sliding needs f1 pushing up and f2 pushing down.
                // alpha = 0 is the hf1 = 0 boundary, alpha = 1 the hf2 = 0
                // boundary; at a located exit root the boundary quantity
                // sits at zero within eps, so the exit branches absorb it.
                let kind = if hf1 > eps && hf2 < -eps {
                    DecisionKind::Stay
                } else if hf1 <= eps && hf2 < -eps {
                    DecisionKind::ExitSlidingTo1
                } else if hf1 > eps && hf2 >= -eps {
                    DecisionKind::ExitSlidingTo2
                } else {
                    return Err(degenerate(3));
                };
                Ok(ModeDecision { kind, witness })
            }
        }
    }
}
