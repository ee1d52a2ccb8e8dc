use super::{BinOp, Expression as E, Func};

pub(super) fn differentiate(e: &E, var: &str) -> E {
    match e {
        E::Literal(_) => E::Literal(0.0),
        E::Symbol(s) => E::Literal(if s.as_ref() == var { 1.0 } else { 0.0 }),
        E::Neg(a) => E::neg(differentiate(a, var)),
        E::Binary(op, a, b) => {
            let (a, b) = (a.as_ref(), b.as_ref());
            match op {
                BinOp::Add => E::add(differentiate(a, var), differentiate(b, var)),
                BinOp::Sub => E::sub(differentiate(a, var), differentiate(b, var)),
                BinOp::Mul => {
                    let da = differentiate(a, var);
                    let db = differentiate(b, var);
                    E::add(E::mul(da, b.clone()), E::mul(a.clone(), db))
                }
                BinOp::Div => {
                    let da = differentiate(a, var);
                    let db = differentiate(b, var);
                    // a'/b - a b'/b^2
                    let first = E::div(da, b.clone());
                    if db.is_zero() {
                        return first;
                    }
                    let second = E::div(
                        E::mul(a.clone(), db),
                        E::pow(b.clone(), E::Literal(2.0)),
                    );
                    E::sub(first, second)
                }
                BinOp::Pow => power_rule(a, b, var),
            }
        }
        E::Call(f, a) => {
            let da = differentiate(a, var);
            if da.is_zero() {
                return E::Literal(0.0);
            }
            let a = a.as_ref().clone();
            let outer = match f {
                Func::Exp => E::call(Func::Exp, a),
                Func::Log => E::div(E::Literal(1.0), a),
                Func::Sin => E::call(Func::Cos, a),
                Func::Cos => E::neg(E::call(Func::Sin, a)),
                Func::Sinh => E::call(Func::Cosh, a),
                Func::Cosh => E::call(Func::Sinh, a),
                // 1 - tanh^2
                Func::Tanh => E::sub(
                    E::Literal(1.0),
                    E::pow(E::call(Func::Tanh, a), E::Literal(2.0)),
                ),
                Func::Sqrt => E::div(E::Literal(0.5), E::call(Func::Sqrt, a)),
            };
            E::mul(outer, da)
        }
    }
}

fn power_rule(base: &E, exponent: &E, var: &str) -> E {
    let db = differentiate(base, var);
    let de = differentiate(exponent, var);
    match (db.is_zero(), de.is_zero()) {
        (true, true) => E::Literal(0.0),
        // b * a^(b-1) * a'
        (false, true) => {
            let lowered = match exponent.as_literal() {
                Some(v) => E::Literal(v - 1.0),
                None => E::sub(exponent.clone(), E::Literal(1.0)),
            };
            E::mul(
                E::mul(exponent.clone(), E::pow(base.clone(), lowered)),
                db,
            )
        }
        // a^b * log(a) * b'
        (true, false) => E::mul(
            E::mul(
                E::pow(base.clone(), exponent.clone()),
                E::call(Func::Log, base.clone()),
            ),
            de,
        ),
        // a^b * (b' log a + b a'/a)
        (false, false) => E::mul(
            E::pow(base.clone(), exponent.clone()),
            E::add(
                E::mul(de, E::call(Func::Log, base.clone())),
                E::div(E::mul(exponent.clone(), db), base.clone()),
            ),
        ),
    }
}

#[cfg(test)]
mod tests {
    use super::super::parse;
    use std::collections::HashMap;

    fn at(e: &super::E, var: &str, x: f64) -> f64 {
        let mut b = HashMap::new();
        b.insert(var.to_string(), x);
        e.evaluate(&b).unwrap()
    }

    #[test]
    fn exp_of_linear() {
        let d = parse("exp(2*xi)").unwrap().differentiate("xi");
        for x in [-1.0, 0.0, 0.7] {
            assert!((at(&d, "xi", x) - 2.0 * (2.0 * x).exp()).abs() < 1e-14);
        }
    }

    #[test]
    fn cosh_to_sinh() {
        let d = parse("cosh(t)").unwrap().differentiate("t");
        assert_eq!(d, parse("sinh(t)").unwrap());
    }

    #[test]
    fn constant_subtrees_fold_away() {
        let d = parse("y*sin(y) + 3*x").unwrap().differentiate("x");
        assert_eq!(d.as_literal(), Some(3.0));
    }

    #[test]
    fn power_rules() {
        let cases = [
            ("x^3", 2.0, 12.0),
            ("2^x", 1.0, 2.0 * 2f64.ln()),
            ("x^x", 2.0, 4.0 * (2f64.ln() + 1.0)),
            ("sqrt(x)", 4.0, 0.25),
            ("tanh(x)", 0.0, 1.0),
            ("log(x)", 2.0, 0.5),
            ("1/x", 2.0, -0.25),
        ];
        for (src, x, want) in cases {
            let d = parse(src).unwrap().differentiate("x");
            assert!((at(&d, "x", x) - want).abs() < 1e-14, "{src}");
        }
    }
}
