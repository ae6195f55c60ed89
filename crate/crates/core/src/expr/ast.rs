use std::fmt;

/// Unary operations of the expression grammar.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnaryOp {
    Neg,
    Sin,
    Cos,
    Exp,
    Tanh,
    Sqrt,
}

impl UnaryOp {
    pub fn name(self) -> &'static str {
        match self {
            UnaryOp::Neg => "-",
            UnaryOp::Sin => "sin",
            UnaryOp::Cos => "cos",
            UnaryOp::Exp => "exp",
            UnaryOp::Tanh => "tanh",
            UnaryOp::Sqrt => "sqrt",
        }
    }
}

/// Binary operations of the expression grammar.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

/// One node of an expression tree. Variable indices are zero-based
/// internally; the surface syntax (`x1`, `u1`) is one-based.
#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Const(f64),
    StateVar(usize),
    ControlVar(usize),
    Unary(UnaryOp, Box<Node>),
    Binary(BinaryOp, Box<Node>, Box<Node>),
}

/// A parsed expression together with the state/control dimensions it was
/// declared against. Immutable after parse; evaluation is pure.
#[derive(Debug, Clone, PartialEq)]
pub struct ExprAst {
    pub(crate) root: Node,
    pub(crate) n: usize,
    pub(crate) m: usize,
}

impl ExprAst {
    pub fn state_dim(&self) -> usize {
        self.n
    }

    pub fn control_dim(&self) -> usize {
        self.m
    }

    pub fn root(&self) -> &Node {
        &self.root
    }

    /// True when the tree contains no control-variable references.
    pub fn is_state_only(&self) -> bool {
        fn walk(node: &Node) -> bool {
            match node {
                Node::ControlVar(_) => false,
                Node::Const(_) | Node::StateVar(_) => true,
                Node::Unary(_, a) => walk(a),
                Node::Binary(_, a, b) => walk(a) && walk(b),
            }
        }
        walk(&self.root)
    }
}

// Printing precedence levels. `prec` of a node decides parenthesization;
// atoms are highest.
fn prec(node: &Node) -> u8 {
    match node {
        Node::Const(_) | Node::StateVar(_) | Node::ControlVar(_) => 5,
        Node::Unary(UnaryOp::Neg, _) => 3,
        Node::Unary(_, _) => 5,
        Node::Binary(BinaryOp::Pow, _, _) => 4,
        Node::Binary(BinaryOp::Mul, _, _) | Node::Binary(BinaryOp::Div, _, _) => 2,
        Node::Binary(BinaryOp::Add, _, _) | Node::Binary(BinaryOp::Sub, _, _) => 1,
    }
}

fn fmt_node(node: &Node, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    match node {
        Node::Const(c) => write!(f, "{}", c),
        Node::StateVar(i) => write!(f, "x{}", i + 1),
        Node::ControlVar(i) => write!(f, "u{}", i + 1),
        Node::Unary(UnaryOp::Neg, a) => {
            write!(f, "-")?;
            fmt_child(a, f, prec(a) < 3)
        }
        Node::Unary(op, a) => {
            write!(f, "{}(", op.name())?;
            fmt_node(a, f)?;
            write!(f, ")")
        }
        Node::Binary(op, l, r) => {
            let (sym, p) = match op {
                BinaryOp::Add => (" + ", 1),
                BinaryOp::Sub => (" - ", 1),
                BinaryOp::Mul => ("*", 2),
                BinaryOp::Div => ("/", 2),
                BinaryOp::Pow => ("^", 4),
            };
            // Pow is right-associative and only admits atoms on its left in
            // the grammar; the others are left-associative.
            let (lp, rp) = if *op == BinaryOp::Pow {
                (prec(l) < 5, prec(r) < 3)
            } else {
                (prec(l) < p, prec(r) <= p)
            };
            fmt_child(l, f, lp)?;
            write!(f, "{}", sym)?;
            fmt_child(r, f, rp)
        }
    }
}

fn fmt_child(node: &Node, f: &mut fmt::Formatter<'_>, parens: bool) -> fmt::Result {
    if parens {
        write!(f, "(")?;
        fmt_node(node, f)?;
        write!(f, ")")
    } else {
        fmt_node(node, f)
    }
}

impl fmt::Display for ExprAst {
    /// Canonical printing: reparsing the output yields an equal tree, and
    /// printing is byte-stable (shortest round-trip floats, fixed spacing).
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt_node(&self.root, f)
    }
}
