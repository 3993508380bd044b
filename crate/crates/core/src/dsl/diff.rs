//! Symbolic forward differentiation of expression trees.
//!
//! `min`, `max` and `abs` are differentiated piecewise through `sign`, with
//! `sign(0) = 0`; at a kink of `min`/`max` the derivative is the average of
//! the two one-sided derivatives (0 for `abs`).

use super::expr::{Expression, Func, Node};

fn is_const(n: &Node, v: f64) -> bool {
    matches!(n, Node::Const(c) if *c == v)
}

fn fold(n: Node) -> Node {
    fn c(x: f64) -> Option<Node> {
        x.is_finite().then_some(Node::Const(x))
    }
    let folded = match &n {
        Node::Neg(a) => match **a {
            Node::Const(x) => c(-x),
            _ => None,
        },
        Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) | Node::Pow(a, b) => {
            match (&**a, &**b) {
                (Node::Const(x), Node::Const(y)) => match &n {
                    Node::Add(..) => c(x + y),
                    Node::Sub(..) => c(x - y),
                    Node::Mul(..) => c(x * y),
                    Node::Div(..) if *y != 0.0 => c(x / y),
                    Node::Pow(..) if *x > 0.0 => c(x.powf(*y)),
                    _ => None,
                },
                _ => None,
            }
        }
        _ => None,
    };
    folded.unwrap_or(n)
}

fn neg(a: Node) -> Node {
    if is_const(&a, 0.0) {
        return a;
    }
    if let Node::Neg(inner) = a {
        return *inner;
    }
    fold(Node::Neg(Box::new(a)))
}

fn add(a: Node, b: Node) -> Node {
    if is_const(&a, 0.0) {
        return b;
    }
    if is_const(&b, 0.0) {
        return a;
    }
    fold(Node::Add(Box::new(a), Box::new(b)))
}

fn sub(a: Node, b: Node) -> Node {
    if is_const(&b, 0.0) {
        return a;
    }
    if is_const(&a, 0.0) {
        return neg(b);
    }
    fold(Node::Sub(Box::new(a), Box::new(b)))
}

fn mul(a: Node, b: Node) -> Node {
    if is_const(&a, 0.0) || is_const(&b, 0.0) {
        return Node::Const(0.0);
    }
    if is_const(&a, 1.0) {
        return b;
    }
    if is_const(&b, 1.0) {
        return a;
    }
    fold(Node::Mul(Box::new(a), Box::new(b)))
}

fn div(a: Node, b: Node) -> Node {
    if is_const(&a, 0.0) {
        return Node::Const(0.0);
    }
    if is_const(&b, 1.0) {
        return a;
    }
    fold(Node::Div(Box::new(a), Box::new(b)))
}

fn pow(a: Node, b: Node) -> Node {
    if is_const(&b, 1.0) {
        return a;
    }
    if is_const(&b, 0.0) {
        return Node::Const(1.0);
    }
    fold(Node::Pow(Box::new(a), Box::new(b)))
}

fn call(f: Func, args: Vec<Node>) -> Node {
    Node::Call(f, args)
}

/// Partial derivative of `n` with respect to variable index `var`.
pub fn derivative_node(n: &Node, var: usize) -> Node {
    match n {
        Node::Const(_) => Node::Const(0.0),
        Node::Var(i) => Node::Const(if *i == var { 1.0 } else { 0.0 }),
        Node::Neg(a) => neg(derivative_node(a, var)),
        Node::Add(a, b) => add(derivative_node(a, var), derivative_node(b, var)),
        Node::Sub(a, b) => sub(derivative_node(a, var), derivative_node(b, var)),
        Node::Mul(a, b) => add(
            mul(derivative_node(a, var), (**b).clone()),
            mul((**a).clone(), derivative_node(b, var)),
        ),
        Node::Div(a, b) => {
            let da = derivative_node(a, var);
            let db = derivative_node(b, var);
            sub(
                div(da, (**b).clone()),
                div(mul((**a).clone(), db), pow((**b).clone(), Node::Const(2.0))),
            )
        }
        Node::Pow(a, b) => {
            let da = derivative_node(a, var);
            let db = derivative_node(b, var);
            if is_const(&db, 0.0) {
                // Exponent independent of `var`: d(a^b) = b a^(b-1) da.
                let reduced = sub((**b).clone(), Node::Const(1.0));
                mul(mul((**b).clone(), pow((**a).clone(), reduced)), da)
            } else {
                let ln_a = call(Func::Log, vec![(**a).clone()]);
                if is_const(&da, 0.0) {
                    mul(mul(n.clone(), ln_a), db)
                } else {
                    mul(
                        n.clone(),
                        add(mul(db, ln_a), div(mul((**b).clone(), da), (**a).clone())),
                    )
                }
            }
        }
        Node::Call(f, args) => {
            let a = &args[0];
            let da = derivative_node(a, var);
            match f {
                Func::Exp => mul(n.clone(), da),
                Func::Log => div(da, a.clone()),
                Func::Sqrt => div(da, mul(Node::Const(2.0), n.clone())),
                Func::Abs => mul(call(Func::Sign, vec![a.clone()]), da),
                Func::Tanh => mul(
                    sub(Node::Const(1.0), pow(n.clone(), Node::Const(2.0))),
                    da,
                ),
                Func::Sin => mul(call(Func::Cos, vec![a.clone()]), da),
                Func::Cos => neg(mul(call(Func::Sin, vec![a.clone()]), da)),
                Func::Sign => Node::Const(0.0),
                Func::Min | Func::Max => {
                    let b = &args[1];
                    let db = derivative_node(b, var);
                    if is_const(&da, 0.0) && is_const(&db, 0.0) {
                        return Node::Const(0.0);
                    }
                    // s = sign(a - b); weight on a is (1 - s)/2 for min, (1 + s)/2 for max.
                    let s = call(Func::Sign, vec![sub(a.clone(), b.clone())]);
                    let (wa, wb) = if *f == Func::Min {
                        (sub(Node::Const(1.0), s.clone()), add(Node::Const(1.0), s))
                    } else {
                        (add(Node::Const(1.0), s.clone()), sub(Node::Const(1.0), s))
                    };
                    div(add(mul(wa, da), mul(wb, db)), Node::Const(2.0))
                }
            }
        }
    }
}

/// Partial derivative of `e` with respect to the variable at `var`.
pub fn derivative(e: &Expression, var: usize) -> Expression {
    Expression::new(derivative_node(e.root(), var), e.vars().clone())
}

/// Gradient with respect to the listed variable indices, in order.
pub fn grad_expression(e: &Expression, vars: &[usize]) -> Vec<Expression> {
    vars.iter().map(|&v| derivative(e, v)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::expr::VarSet;
    use crate::dsl::parse::{parse_expression, Constants};

    fn parse2(text: &str) -> Expression {
        parse_expression(text, &VarSet::new(["u1", "u2"]), &Constants::new()).unwrap()
    }

    #[test]
    fn threshold_gradient() {
        let e = parse2("-u1 + 1/u2 + 1");
        let g = grad_expression(&e, &[0, 1]);
        assert_eq!(g[0].eval(&[0.3, 2.0]).unwrap(), -1.0);
        assert_eq!(g[1].eval(&[0.3, 2.0]).unwrap(), -0.25);
    }

    #[test]
    fn kink_conventions() {
        let abs = parse2("abs(u1)");
        let d = derivative(&abs, 0);
        assert_eq!(d.eval(&[0.0, 0.0]).unwrap(), 0.0);
        assert_eq!(d.eval(&[-2.0, 0.0]).unwrap(), -1.0);
        let mn = parse2("min(u1, 3*u2)");
        assert_eq!(derivative(&mn, 0).eval(&[1.0, 1.0]).unwrap(), 1.0);
        assert_eq!(derivative(&mn, 1).eval(&[1.0, 1.0]).unwrap(), 0.0);
        assert_eq!(derivative(&mn, 1).eval(&[5.0, 1.0]).unwrap(), 3.0);
        let mx = parse2("max(u1, u2)");
        assert_eq!(derivative(&mx, 0).eval(&[2.0, 2.0]).unwrap(), 0.5);
    }

    #[test]
    fn power_rules() {
        let e = parse2("u1^3");
        assert_eq!(derivative(&e, 0).eval(&[2.0, 0.0]).unwrap(), 12.0);
        let e = parse2("u1^u2");
        let d = derivative(&e, 1).eval(&[2.0, 3.0]).unwrap();
        assert!((d - 8.0 * 2f64.ln()).abs() < 1e-12);
        let e = parse2("2^u1");
        let d = derivative(&e, 0).eval(&[1.0, 0.0]).unwrap();
        assert!((d - 2.0 * 2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn derivative_of_unrelated_variable_is_zero() {
        let e = parse2("exp(u1) * sqrt(u1)");
        assert!(derivative(&e, 1).is_constant());
        assert_eq!(derivative(&e, 1).eval(&[1.0, 1.0]).unwrap(), 0.0);
    }
}
