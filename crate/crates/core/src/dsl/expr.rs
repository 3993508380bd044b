//! Expression trees for model definitions.
//!
//! Expressions are built over an ordered [`VarSet`]; variables are stored as
//! indices into that set so evaluation takes a flat slice of values.

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

/// Ordered list of variable names an expression may reference.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VarSet {
    names: Vec<String>,
}

impl VarSet {
    pub fn new<I, S>(names: I) -> Arc<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Arc::new(Self {
            names: names.into_iter().map(Into::into).collect(),
        })
    }

    /// Variables `prefix1..prefixN`.
    pub fn numbered(prefix: &str, count: usize) -> Vec<String> {
        (1..=count).map(|i| format!("{prefix}{i}")).collect()
    }

    /// The standard `u1..uk` set used by thresholds and branches.
    pub fn state(k: usize) -> Arc<Self> {
        Self::new(Self::numbered("u", k))
    }

    /// The `u1..uk, v1..vl, w1..wm` set used by the reaction terms.
    pub fn reaction(k: usize, l: usize, m: usize) -> Arc<Self> {
        let mut names = Self::numbered("u", k);
        names.extend(Self::numbered("v", l));
        names.extend(Self::numbered("w", m));
        Self::new(names)
    }

    /// The single-variable `x` set used by initial data.
    pub fn spatial() -> Arc<Self> {
        Self::new(["x"])
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn name(&self, index: usize) -> &str {
        &self.names[index]
    }
}

/// Built-in functions. `Sign` is produced by differentiation of `abs`,
/// `min` and `max`; it is also accepted by the parser so derivatives print
/// and re-parse.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Exp,
    Log,
    Sqrt,
    Abs,
    Tanh,
    Sin,
    Cos,
    Sign,
    Min,
    Max,
}

impl Func {
    pub fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "exp" => Func::Exp,
            "log" => Func::Log,
            "sqrt" => Func::Sqrt,
            "abs" => Func::Abs,
            "tanh" => Func::Tanh,
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "sign" => Func::Sign,
            "min" => Func::Min,
            "max" => Func::Max,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
            Func::Tanh => "tanh",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Sign => "sign",
            Func::Min => "min",
            Func::Max => "max",
        }
    }

    pub fn arity(self) -> usize {
        match self {
            Func::Min | Func::Max => 2,
            _ => 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Const(f64),
    Var(usize),
    Neg(Box<Node>),
    Add(Box<Node>, Box<Node>),
    Sub(Box<Node>, Box<Node>),
    Mul(Box<Node>, Box<Node>),
    Div(Box<Node>, Box<Node>),
    Pow(Box<Node>, Box<Node>),
    Call(Func, Vec<Node>),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("variable `{0}` is not bound")]
    Unbound(String),
    #[error("division by zero")]
    DivisionByZero,
    #[error("{func} is undefined at {arg}")]
    Domain { func: &'static str, arg: f64 },
    #[error("non-finite result")]
    NonFinite,
}

impl Node {
    fn eval(&self, vals: &[f64], vars: &VarSet) -> Result<f64, EvalError> {
        let out = match self {
            Node::Const(c) => *c,
            Node::Var(i) => match vals.get(*i) {
                Some(v) => *v,
                None => return Err(EvalError::Unbound(vars.name(*i).to_string())),
            },
            Node::Neg(a) => -a.eval(vals, vars)?,
            Node::Add(a, b) => a.eval(vals, vars)? + b.eval(vals, vars)?,
            Node::Sub(a, b) => a.eval(vals, vars)? - b.eval(vals, vars)?,
            Node::Mul(a, b) => a.eval(vals, vars)? * b.eval(vals, vars)?,
            Node::Div(a, b) => {
                let num = a.eval(vals, vars)?;
                let den = b.eval(vals, vars)?;
                if den == 0.0 {
                    return Err(EvalError::DivisionByZero);
                }
                num / den
            }
            Node::Pow(a, b) => {
                let base = a.eval(vals, vars)?;
                let exp = b.eval(vals, vars)?;
                if base == 0.0 && exp < 0.0 {
                    return Err(EvalError::DivisionByZero);
                }
                let r = base.powf(exp);
                if r.is_nan() {
                    return Err(EvalError::Domain { func: "^", arg: base });
                }
                r
            }
            Node::Call(f, args) => {
                let a = args[0].eval(vals, vars)?;
                match f {
                    Func::Exp => a.exp(),
                    Func::Log => {
                        if a <= 0.0 {
                            return Err(EvalError::Domain { func: "log", arg: a });
                        }
                        a.ln()
                    }
                    Func::Sqrt => {
                        if a < 0.0 {
                            return Err(EvalError::Domain { func: "sqrt", arg: a });
                        }
                        a.sqrt()
                    }
                    Func::Abs => a.abs(),
                    Func::Tanh => a.tanh(),
                    Func::Sin => a.sin(),
                    Func::Cos => a.cos(),
                    Func::Sign => {
                        if a > 0.0 {
                            1.0
                        } else if a < 0.0 {
                            -1.0
                        } else {
                            0.0
                        }
                    }
                    Func::Min => a.min(args[1].eval(vals, vars)?),
                    Func::Max => a.max(args[1].eval(vals, vars)?),
                }
            }
        };
        if out.is_finite() {
            Ok(out)
        } else {
            Err(EvalError::NonFinite)
        }
    }

    fn collect_vars(&self, out: &mut Vec<usize>) {
        match self {
            Node::Const(_) => {}
            Node::Var(i) => {
                if !out.contains(i) {
                    out.push(*i);
                }
            }
            Node::Neg(a) => a.collect_vars(out),
            Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) | Node::Pow(a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
            Node::Call(_, args) => args.iter().for_each(|a| a.collect_vars(out)),
        }
    }

    /// Printing precedence: 1 additive, 2 multiplicative, 3 unary, 4 power, 5 atom.
    fn precedence(&self) -> u8 {
        match self {
            Node::Add(..) | Node::Sub(..) => 1,
            Node::Mul(..) | Node::Div(..) => 2,
            Node::Neg(_) => 3,
            Node::Const(c) if *c < 0.0 || (*c == 0.0 && c.is_sign_negative()) => 3,
            Node::Pow(..) => 4,
            _ => 5,
        }
    }

    fn write(&self, f: &mut fmt::Formatter<'_>, vars: &VarSet) -> fmt::Result {
        let child = |f: &mut fmt::Formatter<'_>, n: &Node, min: u8| -> fmt::Result {
            if n.precedence() < min {
                write!(f, "(")?;
                n.write(f, vars)?;
                write!(f, ")")
            } else {
                n.write(f, vars)
            }
        };
        match self {
            Node::Const(c) => {
                if c.is_finite() {
                    write!(f, "{c}")
                } else {
                    write!(f, "({c})")
                }
            }
            Node::Var(i) => write!(f, "{}", vars.name(*i)),
            Node::Neg(a) => {
                write!(f, "-")?;
                child(f, a, 3)
            }
            Node::Add(a, b) => {
                child(f, a, 1)?;
                write!(f, " + ")?;
                child(f, b, 2)
            }
            Node::Sub(a, b) => {
                child(f, a, 1)?;
                write!(f, " - ")?;
                child(f, b, 2)
            }
            Node::Mul(a, b) => {
                child(f, a, 2)?;
                write!(f, "*")?;
                child(f, b, 3)
            }
            Node::Div(a, b) => {
                child(f, a, 2)?;
                write!(f, "/")?;
                child(f, b, 3)
            }
            Node::Pow(a, b) => {
                child(f, a, 5)?;
                write!(f, "^")?;
                child(f, b, 3)
            }
            Node::Call(func, args) => {
                write!(f, "{}(", func.name())?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    a.write(f, vars)?;
                }
                write!(f, ")")
            }
        }
    }
}

/// A parsed expression together with the variable set it is defined over.
#[derive(Debug, Clone, PartialEq)]
pub struct Expression {
    root: Node,
    vars: Arc<VarSet>,
}

impl Expression {
    pub fn new(root: Node, vars: Arc<VarSet>) -> Self {
        Self { root, vars }
    }

    pub fn constant(value: f64, vars: Arc<VarSet>) -> Self {
        Self::new(Node::Const(value), vars)
    }

    pub fn root(&self) -> &Node {
        &self.root
    }

    pub fn vars(&self) -> &Arc<VarSet> {
        &self.vars
    }

    /// Evaluate with `values[i]` bound to the i-th variable of the set.
    pub fn eval(&self, values: &[f64]) -> Result<f64, EvalError> {
        self.root.eval(values, &self.vars)
    }

    /// Indices of the variables that actually occur in the expression.
    pub fn free_vars(&self) -> Vec<usize> {
        let mut out = Vec::new();
        self.root.collect_vars(&mut out);
        out.sort_unstable();
        out
    }

    pub fn is_constant(&self) -> bool {
        self.free_vars().is_empty()
    }

    /// Re-express over a larger variable set, mapping each variable by name.
    /// Returns `None` if some variable is missing from `target`.
    pub fn rebind(&self, target: &Arc<VarSet>) -> Option<Expression> {
        fn go(n: &Node, from: &VarSet, to: &VarSet) -> Option<Node> {
            Some(match n {
                Node::Const(c) => Node::Const(*c),
                Node::Var(i) => Node::Var(to.index_of(from.name(*i))?),
                Node::Neg(a) => Node::Neg(Box::new(go(a, from, to)?)),
                Node::Add(a, b) => Node::Add(Box::new(go(a, from, to)?), Box::new(go(b, from, to)?)),
                Node::Sub(a, b) => Node::Sub(Box::new(go(a, from, to)?), Box::new(go(b, from, to)?)),
                Node::Mul(a, b) => Node::Mul(Box::new(go(a, from, to)?), Box::new(go(b, from, to)?)),
                Node::Div(a, b) => Node::Div(Box::new(go(a, from, to)?), Box::new(go(b, from, to)?)),
                Node::Pow(a, b) => Node::Pow(Box::new(go(a, from, to)?), Box::new(go(b, from, to)?)),
                Node::Call(f, args) => Node::Call(
                    *f,
                    args.iter().map(|a| go(a, from, to)).collect::<Option<Vec<_>>>()?,
                ),
            })
        }
        Some(Expression::new(go(&self.root, &self.vars, target)?, target.clone()))
    }
}

impl fmt::Display for Expression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.root.write(f, &self.vars)
    }
}
