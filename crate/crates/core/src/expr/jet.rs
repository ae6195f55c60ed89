//! Forward-mode dual numbers over a flat seed basis.
//!
//! `JetOf<f64>` carries first partials; `JetOf<JetOf<f64>>` (nested jets)
//! carries second partials and backs the Hessian of the switching surface.
//! Constants keep an empty partials vector, which all operations treat as
//! zero — seeds are only materialized where a variable enters.

/// Domain violation raised by a scalar operation; the evaluator attaches
/// the offending subexpression.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DomainViolation {
    DivisionByZero,
    SqrtNegative,
    SqrtDerivativeSingular,
    PowNegativeBase,
    LogNonPositive,
}

impl DomainViolation {
    pub fn describe(self) -> &'static str {
        match self {
            DomainViolation::DivisionByZero => "division by zero",
            DomainViolation::SqrtNegative => "square root of a negative value",
            DomainViolation::SqrtDerivativeSingular => "square root derivative at zero",
            DomainViolation::PowNegativeBase => "power with non-positive base and non-integer exponent",
            DomainViolation::LogNonPositive => "logarithm of a non-positive value",
        }
    }
}

type DomResult<T> = Result<T, DomainViolation>;

/// The arithmetic evaluation of an expression tree is generic over this
/// trait: `f64` for plain values, jets for derivatives.
pub trait Scalar: Clone {
    fn from_const(c: f64) -> Self;
    /// Primal value, for diagnostics and branch decisions.
    fn primal(&self) -> f64;

    fn add(&self, o: &Self) -> Self;
    fn sub(&self, o: &Self) -> Self;
    fn mul(&self, o: &Self) -> Self;
    fn neg(&self) -> Self;
    fn div(&self, o: &Self) -> DomResult<Self>;
    fn sin(&self) -> Self;
    fn cos(&self) -> Self;
    fn exp(&self) -> Self;
    fn tanh(&self) -> Self;
    fn sqrt(&self) -> DomResult<Self>;
    fn ln(&self) -> DomResult<Self>;
    fn powi(&self, k: i64) -> DomResult<Self>;

    /// General power through `exp(o * ln(self))`; exact integer exponents
    /// take the `powi` route in the evaluator instead.
    fn powf(&self, o: &Self) -> DomResult<Self> {
        if self.primal() <= 0.0 {
            return Err(DomainViolation::PowNegativeBase);
        }
        Ok(o.mul(&self.ln()?).exp())
    }
}

impl Scalar for f64 {
    fn from_const(c: f64) -> Self {
        c
    }

    fn primal(&self) -> f64 {
        *self
    }

    fn add(&self, o: &Self) -> Self {
        self + o
    }

    fn sub(&self, o: &Self) -> Self {
        self - o
    }

    fn mul(&self, o: &Self) -> Self {
        self * o
    }

    fn neg(&self) -> Self {
        -self
    }

    fn div(&self, o: &Self) -> DomResult<Self> {
        if *o == 0.0 {
            return Err(DomainViolation::DivisionByZero);
        }
        Ok(self / o)
    }

    fn sin(&self) -> Self {
        f64::sin(*self)
    }

    fn cos(&self) -> Self {
        f64::cos(*self)
    }

    fn exp(&self) -> Self {
        f64::exp(*self)
    }

    fn tanh(&self) -> Self {
        f64::tanh(*self)
    }

    fn sqrt(&self) -> DomResult<Self> {
        if *self < 0.0 {
            return Err(DomainViolation::SqrtNegative);
        }
        Ok(f64::sqrt(*self))
    }

    fn ln(&self) -> DomResult<Self> {
        if *self <= 0.0 {
            return Err(DomainViolation::LogNonPositive);
        }
        Ok(f64::ln(*self))
    }

    fn powi(&self, k: i64) -> DomResult<Self> {
        if *self == 0.0 && k < 0 {
            return Err(DomainViolation::DivisionByZero);
        }
        Ok(f64::powi(*self, k as i32))
    }

    fn powf(&self, o: &Self) -> DomResult<Self> {
        if *self <= 0.0 {
            return Err(DomainViolation::PowNegativeBase);
        }
        Ok(f64::powf(*self, *o))
    }
}

/// A value together with its partials w.r.t. a fixed seed basis.
///
/// The partials vector is either empty (identically zero, used for
/// constants) or exactly the basis length.
#[derive(Debug, Clone, PartialEq)]
pub struct JetOf<S> {
    pub v: S,
    pub d: Vec<S>,
}

pub type Jet = JetOf<f64>;

impl<S: Scalar> JetOf<S> {
    pub fn constant(c: f64) -> Self {
        JetOf {
            v: S::from_const(c),
            d: Vec::new(),
        }
    }

    /// A seeded variable: unit partial in slot `slot` of a basis of
    /// length `len`.
    pub fn variable(value: S, slot: usize, len: usize) -> Self {
        let mut d = vec![S::from_const(0.0); len];
        d[slot] = S::from_const(1.0);
        JetOf { v: value, d }
    }

    /// Partial in slot `i` (zero when the jet is a constant).
    pub fn partial(&self, i: usize) -> S {
        self.d
            .get(i)
            .cloned()
            .unwrap_or_else(|| S::from_const(0.0))
    }

    fn zip_d(a: &[S], b: &[S], f: impl Fn(&S, &S) -> S) -> Vec<S> {
        let len = a.len().max(b.len());
        let zero = S::from_const(0.0);
        (0..len)
            .map(|i| f(a.get(i).unwrap_or(&zero), b.get(i).unwrap_or(&zero)))
            .collect()
    }
}

impl<S: Scalar> Scalar for JetOf<S> {
    fn from_const(c: f64) -> Self {
        JetOf::constant(c)
    }

    fn primal(&self) -> f64 {
        self.v.primal()
    }

    fn add(&self, o: &Self) -> Self {
        JetOf {
            v: self.v.add(&o.v),
            d: Self::zip_d(&self.d, &o.d, |a, b| a.add(b)),
        }
    }

    fn sub(&self, o: &Self) -> Self {
        JetOf {
            v: self.v.sub(&o.v),
            d: Self::zip_d(&self.d, &o.d, |a, b| a.sub(b)),
        }
    }

    fn mul(&self, o: &Self) -> Self {
        JetOf {
            v: self.v.mul(&o.v),
            d: Self::zip_d(&self.d, &o.d, |a, b| {
                a.mul(&o.v).add(&b.mul(&self.v))
            }),
        }
    }

    fn neg(&self) -> Self {
        JetOf {
            v: self.v.neg(),
            d: self.d.iter().map(|a| a.neg()).collect(),
        }
    }

    fn div(&self, o: &Self) -> DomResult<Self> {
        let v = self.v.div(&o.v)?;
        // (a/b)' = (a' - (a/b) b') / b
        let d = Self::zip_d(&self.d, &o.d, |a, b| a.sub(&b.mul(&v)))
            .into_iter()
            .map(|t| t.div(&o.v))
            .collect::<DomResult<Vec<_>>>()?;
        Ok(JetOf { v, d })
    }

    fn sin(&self) -> Self {
        let c = self.v.cos();
        JetOf {
            v: self.v.sin(),
            d: self.d.iter().map(|a| a.mul(&c)).collect(),
        }
    }

    fn cos(&self) -> Self {
        let s = self.v.sin().neg();
        JetOf {
            v: self.v.cos(),
            d: self.d.iter().map(|a| a.mul(&s)).collect(),
        }
    }

    fn exp(&self) -> Self {
        let e = self.v.exp();
        JetOf {
            v: e.clone(),
            d: self.d.iter().map(|a| a.mul(&e)).collect(),
        }
    }

    fn tanh(&self) -> Self {
        let t = self.v.tanh();
        // tanh' = 1 - tanh^2
        let g = S::from_const(1.0).sub(&t.mul(&t));
        JetOf {
            v: t,
            d: self.d.iter().map(|a| a.mul(&g)).collect(),
        }
    }

    fn sqrt(&self) -> DomResult<Self> {
        let r = self.v.sqrt()?;
        if !self.d.is_empty() && r.primal() == 0.0 {
            return Err(DomainViolation::SqrtDerivativeSingular);
        }
        let d = if self.d.is_empty() {
            Vec::new()
        } else {
            let two_r = r.add(&r);
            self.d
                .iter()
                .map(|a| a.div(&two_r))
                .collect::<DomResult<Vec<_>>>()?
        };
        Ok(JetOf { v: r, d })
    }

    fn ln(&self) -> DomResult<Self> {
        let v = self.v.ln()?;
        let d = self
            .d
            .iter()
            .map(|a| a.div(&self.v))
            .collect::<DomResult<Vec<_>>>()?;
        Ok(JetOf { v, d })
    }

    fn powi(&self, k: i64) -> DomResult<Self> {
        let v = self.v.powi(k)?;
        if k == 0 {
            return Ok(JetOf { v, d: Vec::new() });
        }
        let d = if self.d.is_empty() {
            Vec::new()
        } else {
            // (v^k)' = k v^(k-1) v'
            let factor = self.v.powi(k - 1)?.mul(&S::from_const(k as f64));
            self.d.iter().map(|a| a.mul(&factor)).collect()
        };
        Ok(JetOf { v, d })
    }
}
