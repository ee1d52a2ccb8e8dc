use super::{apply_binary, power, BinOp, EvalError, Expression, Func};

#[derive(Debug, Clone, Copy)]
enum Op {
    Const(f64),
    Var(usize),
    Neg,
    Bin(BinOp),
    PowI(i32),
    Call(Func),
}

/// Postfix program for an expression with symbols resolved to coordinate
/// slots. Cheap to evaluate and safe to share across threads.
#[derive(Debug, Clone)]
pub struct CompiledExpr {
    code: Vec<Op>,
    depth: usize,
    constant: Option<f64>,
}

const INLINE_STACK: usize = 48;

impl CompiledExpr {
    pub(super) fn new(e: &Expression, vars: &[String]) -> Result<Self, EvalError> {
        let mut code = Vec::new();
        let mut depth = 0;
        emit(e, vars, &mut code, 0, &mut depth)?;
        let constant = e.as_literal();
        Ok(CompiledExpr { code, depth, constant })
    }

    /// `Some(v)` when the expression is a single literal.
    pub fn constant(&self) -> Option<f64> {
        self.constant
    }

    pub fn is_zero(&self) -> bool {
        self.constant == Some(0.0)
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64, EvalError> {
        if let Some(c) = self.constant {
            return Ok(c);
        }
        if self.depth <= INLINE_STACK {
            let mut stack = [0.0f64; INLINE_STACK];
            self.run(x, &mut stack)
        } else {
            let mut stack = vec![0.0; self.depth];
            self.run(x, &mut stack)
        }
    }

    fn run(&self, x: &[f64], stack: &mut [f64]) -> Result<f64, EvalError> {
        let mut sp = 0usize;
        for op in &self.code {
            match *op {
                Op::Const(v) => {
                    stack[sp] = v;
                    sp += 1;
                }
                Op::Var(i) => {
                    stack[sp] = x[i];
                    sp += 1;
                }
                Op::Neg => stack[sp - 1] = -stack[sp - 1],
                Op::Bin(b) => {
                    sp -= 1;
                    stack[sp - 1] = apply_binary(b, stack[sp - 1], stack[sp])?;
                }
                Op::PowI(k) => {
                    let a = stack[sp - 1];
                    stack[sp - 1] = match k {
                        2 => a * a,
                        3 => a * a * a,
                        _ => power(a, k as f64)?,
                    };
                }
                Op::Call(f) => stack[sp - 1] = f.apply(stack[sp - 1])?,
            }
        }
        Ok(stack[0])
    }
}

fn emit(
    e: &Expression,
    vars: &[String],
    code: &mut Vec<Op>,
    level: usize,
    depth: &mut usize,
) -> Result<(), EvalError> {
    *depth = (*depth).max(level + 1);
    match e {
        Expression::Literal(v) => code.push(Op::Const(*v)),
        Expression::Symbol(s) => {
            let i = vars
                .iter()
                .position(|v| v == s.as_ref())
                .ok_or_else(|| EvalError::Unbound(s.to_string()))?;
            code.push(Op::Var(i));
        }
        Expression::Neg(a) => {
            emit(a, vars, code, level, depth)?;
            code.push(Op::Neg);
        }
        Expression::Call(f, a) => {
            emit(a, vars, code, level, depth)?;
            code.push(Op::Call(*f));
        }
        Expression::Binary(BinOp::Pow, a, b)
            if b.as_literal().is_some_and(|k| k.fract() == 0.0 && k.abs() < 64.0) =>
        {
            emit(a, vars, code, level, depth)?;
            code.push(Op::PowI(b.as_literal().unwrap() as i32));
        }
        Expression::Binary(op, a, b) => {
            emit(a, vars, code, level, depth)?;
            emit(b, vars, code, level + 1, depth)?;
            code.push(Op::Bin(*op));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::super::parse;
    use std::collections::HashMap;

    #[test]
    fn compiled_matches_tree_evaluation() {
        let e = parse("x^2*sinh(y) - exp(-x)/(1+y^2) + 2^x").unwrap();
        let vars = vec!["x".to_string(), "y".to_string()];
        let c = e.compile(&vars).unwrap();
        for (x, y) in [(0.3, -1.2), (1.5, 0.0), (-2.0, 0.4)] {
            let b: HashMap<_, _> = [("x".to_string(), x), ("y".to_string(), y)].into();
            assert_eq!(c.eval(&[x, y]).unwrap(), e.evaluate(&b).unwrap());
        }
    }

    #[test]
    fn unknown_symbol_rejected_at_compile() {
        let e = parse("x+q").unwrap();
        assert!(e.compile(&["x".to_string()]).is_err());
    }

    #[test]
    fn integer_power_of_negative_base() {
        let e = parse("x^3").unwrap();
        let c = e.compile(&["x".to_string()]).unwrap();
        assert_eq!(c.eval(&[-2.0]).unwrap(), -8.0);
        let e = parse("x^-1").unwrap();
        // exponent is Neg(1), not a literal: general path
        let c = e.compile(&["x".to_string()]).unwrap();
        assert_eq!(c.eval(&[-2.0]).unwrap(), -0.5);
    }
}
