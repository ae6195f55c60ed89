//! Expression parsing and forward-mode differentiation.
//!
//! Every piece of problem data (vector fields, switching surface, cost,
//! terminal constraints) is a small expression tree over `x1..xn` and
//! `u1..um`. Evaluation is generic over a scalar type: plain `f64` for
//! simulation, [`jet::Jet`] for exact first derivatives over the
//! concatenated `(x, u)` seed basis, and nested jets for the Hessian of
//! the switching surface. The seed basis length is fixed at parse time,
//! so jet partials are flat vectors.

mod ast;
pub mod jet;
mod parse;

pub use ast::{BinaryOp, ExprAst, Node, UnaryOp};
pub use jet::{DomainViolation, Jet, JetOf, Scalar};
pub use parse::parse_expression;

use nalgebra::DMatrix;
use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum ExprError {
    #[error("syntax error at byte {position}: expected {expected}, found {found}")]
    Syntax {
        position: usize,
        expected: String,
        found: String,
    },
    #[error("unknown symbol `{name}` at byte {position}")]
    UnknownSymbol { name: String, position: usize },
    #[error("variable `{name}` out of range: index {index} exceeds declared dimension {dim}")]
    Dimension {
        name: String,
        index: usize,
        dim: usize,
    },
    #[error("domain error: {} in subexpression `{expr}`", kind.describe())]
    Domain { kind: DomainViolation, expr: String },
    #[error("dimension mismatch: expression declared (n={n}, m={m}), got x of length {got_n} and u of length {got_m}")]
    ArgumentShape {
        n: usize,
        m: usize,
        got_n: usize,
        got_m: usize,
    },
    #[error("expression `{0}` references control variables but must depend on the state only")]
    StateOnly(String),
}

/// Value and first partials of an expression at a point, over the
/// concatenated `(x, u)` basis (length `n + m`).
#[derive(Debug, Clone, PartialEq)]
pub struct JetValue {
    pub value: f64,
    pub partials: Vec<f64>,
}

impl JetValue {
    pub fn grad_x(&self, n: usize) -> &[f64] {
        &self.partials[..n]
    }

    pub fn grad_u(&self, n: usize) -> &[f64] {
        &self.partials[n..]
    }
}

fn print_node(node: &Node, n: usize, m: usize) -> String {
    ExprAst {
        root: node.clone(),
        n,
        m,
    }
    .to_string()
}

/// Recursive generic evaluation; `vars` holds the `n` state slots followed
/// by the `m` control slots.
fn eval_node<S: Scalar>(node: &Node, vars: &[S], n: usize, m: usize) -> Result<S, ExprError> {
    let domain = |kind: DomainViolation, at: &Node| ExprError::Domain {
        kind,
        expr: print_node(at, n, m),
    };
    match node {
        Node::Const(c) => Ok(S::from_const(*c)),
        Node::StateVar(i) => Ok(vars[*i].clone()),
        Node::ControlVar(i) => Ok(vars[n + *i].clone()),
        Node::Unary(op, a) => {
            let av = eval_node(a, vars, n, m)?;
            Ok(match op {
                UnaryOp::Neg => av.neg(),
                UnaryOp::Sin => av.sin(),
                UnaryOp::Cos => av.cos(),
                UnaryOp::Exp => av.exp(),
                UnaryOp::Tanh => av.tanh(),
                UnaryOp::Sqrt => av.sqrt().map_err(|k| domain(k, node))?,
            })
        }
        Node::Binary(op, l, r) => {
            let lv = eval_node(l, vars, n, m)?;
            let rv = eval_node(r, vars, n, m)?;
            match op {
                BinaryOp::Add => Ok(lv.add(&rv)),
                BinaryOp::Sub => Ok(lv.sub(&rv)),
                BinaryOp::Mul => Ok(lv.mul(&rv)),
                BinaryOp::Div => lv.div(&rv).map_err(|k| domain(k, node)),
                BinaryOp::Pow => {
                    // Constant integer exponents take the exact powi route,
                    // which is defined for non-positive bases as well.
                    if let Node::Const(c) = **r {
                        if c.fract() == 0.0 && c.abs() <= 1e9 {
                            return lv.powi(c as i64).map_err(|k| domain(k, node));
                        }
                    }
                    lv.powf(&rv).map_err(|k| domain(k, node))
                }
            }
        }
    }
}

fn check_shape(ast: &ExprAst, x: &[f64], u: &[f64]) -> Result<(), ExprError> {
    if x.len() != ast.n || u.len() != ast.m {
        return Err(ExprError::ArgumentShape {
            n: ast.n,
            m: ast.m,
            got_n: x.len(),
            got_m: u.len(),
        });
    }
    Ok(())
}

/// Plain evaluation, no derivatives.
pub fn eval_value(ast: &ExprAst, x: &[f64], u: &[f64]) -> Result<f64, ExprError> {
    check_shape(ast, x, u)?;
    let vars: Vec<f64> = x.iter().chain(u.iter()).copied().collect();
    eval_node(&ast.root, &vars, ast.n, ast.m)
}

/// Value plus analytic first partials w.r.t. `(x, u)`.
pub fn eval_jet(ast: &ExprAst, x: &[f64], u: &[f64]) -> Result<JetValue, ExprError> {
    check_shape(ast, x, u)?;
    let len = ast.n + ast.m;
    let vars: Vec<Jet> = x
        .iter()
        .chain(u.iter())
        .enumerate()
        .map(|(i, &v)| Jet::variable(v, i, len))
        .collect();
    let out = eval_node(&ast.root, &vars, ast.n, ast.m)?;
    let mut partials = vec![0.0; len];
    for (i, p) in partials.iter_mut().enumerate() {
        *p = out.partial(i);
    }
    Ok(JetValue {
        value: out.v,
        partials,
    })
}

/// Second-derivative matrix of a state-only expression via nested jets.
///
/// Used for the switching surface `h`, whose Hessian enters the sliding
/// dynamics through `(h_x^T z)_x` and the hidden-constraint eliminations.
pub fn eval_hessian_h(ast: &ExprAst, x: &[f64]) -> Result<DMatrix<f64>, ExprError> {
    if !ast.is_state_only() {
        return Err(ExprError::StateOnly(ast.to_string()));
    }
    if x.len() != ast.n {
        return Err(ExprError::ArgumentShape {
            n: ast.n,
            m: ast.m,
            got_n: x.len(),
            got_m: 0,
        });
    }
    let n = ast.n;
    let vars: Vec<JetOf<Jet>> = (0..n + ast.m)
        .map(|i| {
            if i < n {
                JetOf::variable(Jet::variable(x[i], i, n), i, n)
            } else {
                JetOf::constant(0.0)
            }
        })
        .collect();
    let out = eval_node(&ast.root, &vars, ast.n, ast.m)?;
    let mut hess = DMatrix::zeros(n, n);
    for i in 0..n {
        let row = out.partial(i);
        for j in 0..n {
            hess[(i, j)] = row.partial(j);
        }
    }
    Ok(hess)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn jet_product_example() {
        let ast = parse_expression("x1*u1", 1, 1).unwrap();
        let jv = eval_jet(&ast, &[3.0], &[2.0]).unwrap();
        assert_eq!(jv.value, 6.0);
        assert_eq!(jv.partials, vec![2.0, 3.0]);
    }

    #[test]
    fn jet_power_example() {
        let ast = parse_expression("x1^2", 1, 0).unwrap();
        let jv = eval_jet(&ast, &[0.5], &[]).unwrap();
        assert_eq!(jv.value, 0.25);
        assert_eq!(jv.partials[0], 1.0);
    }

    #[test]
    fn jet_sin_example() {
        let ast = parse_expression("sin(x1)", 1, 0).unwrap();
        let jv = eval_jet(&ast, &[0.0], &[]).unwrap();
        assert_eq!(jv.value, 0.0);
        assert_eq!(jv.partials[0], 1.0);
    }

    #[test]
    fn hessian_linear_is_zero() {
        let ast = parse_expression("x2", 2, 0).unwrap();
        let h = eval_hessian_h(&ast, &[0.3, -1.2]).unwrap();
        assert_eq!(h, DMatrix::zeros(2, 2));
    }

    #[test]
    fn hessian_quadratic_form() {
        let ast = parse_expression("x1^2 + x2^2", 2, 0).unwrap();
        let h = eval_hessian_h(&ast, &[0.7, 2.0]).unwrap();
        assert_eq!(h, DMatrix::identity(2, 2) * 2.0);
    }

    #[test]
    fn hessian_cross_term_matches_finite_differences() {
        // h = x1*x2: analytic Hessian has unit off-diagonals. The oracle
        // builds it from central differences of the gradient h_x.
        let ast = parse_expression("x1*x2", 2, 0).unwrap();
        let x = [1.3, -0.4];
        let h = eval_hessian_h(&ast, &x).unwrap();
        let step = 1e-6;
        for j in 0..2 {
            let mut xp = x;
            let mut xm = x;
            xp[j] += step;
            xm[j] -= step;
            let gp = eval_jet(&ast, &xp, &[]).unwrap();
            let gm = eval_jet(&ast, &xm, &[]).unwrap();
            for i in 0..2 {
                let fd = (gp.partials[i] - gm.partials[i]) / (2.0 * step);
                assert_relative_eq!(h[(i, j)], fd, epsilon = 1e-8, max_relative = 1e-6);
            }
        }
    }

    #[test]
    fn domain_error_names_subexpression() {
        let ast = parse_expression("1/(x1 - 2)", 1, 0).unwrap();
        let err = eval_value(&ast, &[2.0], &[]).unwrap_err();
        match err {
            ExprError::Domain { kind, expr } => {
                assert_eq!(kind, DomainViolation::DivisionByZero);
                assert_eq!(expr, "1/(x1 - 2)");
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn sqrt_negative_rejected() {
        let ast = parse_expression("sqrt(x1)", 1, 0).unwrap();
        assert!(matches!(
            eval_value(&ast, &[-1.0], &[]),
            Err(ExprError::Domain {
                kind: DomainViolation::SqrtNegative,
                ..
            })
        ));
    }

    #[test]
    fn integer_pow_allows_negative_base() {
        let ast = parse_expression("x1^3", 1, 0).unwrap();
        let jv = eval_jet(&ast, &[-2.0], &[]).unwrap();
        assert_eq!(jv.value, -8.0);
        assert_eq!(jv.partials[0], 12.0);
    }

    // Random expression trees for the property tests below.
    fn arb_node(n: usize, m: usize) -> impl Strategy<Value = Node> {
        let leaf = prop_oneof![
            (-3.0..3.0f64).prop_map(|c| Node::Const((c * 16.0).round() / 16.0)),
            (0..n).prop_map(Node::StateVar),
            (0..m).prop_map(Node::ControlVar),
        ];
        leaf.prop_recursive(4, 24, 2, |inner| {
            prop_oneof![
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Node::Binary(
                    BinaryOp::Add,
                    Box::new(a),
                    Box::new(b)
                )),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Node::Binary(
                    BinaryOp::Sub,
                    Box::new(a),
                    Box::new(b)
                )),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Node::Binary(
                    BinaryOp::Mul,
                    Box::new(a),
                    Box::new(b)
                )),
                (inner.clone(), 2..4i64).prop_map(|(a, k)| Node::Binary(
                    BinaryOp::Pow,
                    Box::new(a),
                    Box::new(Node::Const(k as f64))
                )),
                inner.clone().prop_map(|a| Node::Unary(UnaryOp::Sin, Box::new(a))),
                inner.clone().prop_map(|a| Node::Unary(UnaryOp::Cos, Box::new(a))),
                inner.clone().prop_map(|a| Node::Unary(UnaryOp::Tanh, Box::new(a))),
                inner.prop_map(|a| Node::Unary(UnaryOp::Neg, Box::new(a))),
            ]
        })
    }

    proptest! {
        // Jet partials match central finite differences on random trees.
        #[test]
        fn jet_matches_finite_differences(
            node in arb_node(2, 1),
            x1 in -1.5..1.5f64,
            x2 in -1.5..1.5f64,
            u1 in -1.5..1.5f64,
        ) {
            let ast = ExprAst { root: node, n: 2, m: 1 };
            let x = [x1, x2];
            let u = [u1];
            let jv = match eval_jet(&ast, &x, &u) {
                Ok(jv) => jv,
                Err(_) => return Ok(()), // domain errors are fine for random trees
            };
            prop_assume!(jv.value.is_finite() && jv.partials.iter().all(|p| p.is_finite()));
            prop_assume!(jv.value.abs() < 1e6 && jv.partials.iter().all(|p| p.abs() < 1e6));
            let step = 1e-6;
            let eval_at = |x: [f64; 2], u: [f64; 1]| eval_value(&ast, &x, &u);
            let mut points = Vec::new();
            for k in 0..3 {
                let (mut xp, mut xm, mut up, mut um) = (x, x, u, u);
                match k {
                    0 => { xp[0] += step; xm[0] -= step; }
                    1 => { xp[1] += step; xm[1] -= step; }
                    _ => { up[0] += step; um[0] -= step; }
                }
                points.push((eval_at(xp, up), eval_at(xm, um)));
            }
            for (k, (fp, fm)) in points.into_iter().enumerate() {
                let (fp, fm) = match (fp, fm) {
                    (Ok(a), Ok(b)) => (a, b),
                    _ => return Ok(()),
                };
                let fd = (fp - fm) / (2.0 * step);
                let scale = 1.0f64.max(jv.partials[k].abs());
                prop_assert!(
                    (jv.partials[k] - fd).abs() <= 1e-6 * scale + 1e-7,
                    "partial {k}: jet {} vs fd {}", jv.partials[k], fd
                );
            }
        }

        // Print -> parse round trip returns an equal tree.
        #[test]
        fn print_parse_round_trip(node in arb_node(2, 1)) {
            let ast = ExprAst { root: node, n: 2, m: 1 };
            let printed = ast.to_string();
            let reparsed = parse_expression(&printed, 2, 1).unwrap();
            prop_assert_eq!(&ast, &reparsed, "printed form `{}`", printed);
            prop_assert_eq!(printed, reparsed.to_string());
        }

        // Hessian is symmetric up to rounding.
        #[test]
        fn hessian_symmetry(node in arb_node(2, 0), x1 in -1.2..1.2f64, x2 in -1.2..1.2f64) {
            let ast = ExprAst { root: node, n: 2, m: 0 };
            let h = match eval_hessian_h(&ast, &[x1, x2]) {
                Ok(h) => h,
                Err(_) => return Ok(()),
            };
            prop_assume!(h.iter().all(|v| v.is_finite()));
            let scale = 1.0f64.max(h.amax());
            prop_assert!((h[(0, 1)] - h[(1, 0)]).abs() <= 1e-13 * scale);
        }
    }
}
