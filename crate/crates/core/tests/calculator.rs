use lit_core::calculator::{evaluate, parse_expr, render_approx, to_f64, BinOp, CalcError, Expr};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Shunting-yard evaluator used as an independent oracle.
mod oracle {
    use super::*;

    #[derive(Debug, Clone, PartialEq)]
    enum Tok {
        Num(BigRational),
        Op(char),
        Neg,
        Open,
        Close,
    }

    fn decimal(s: &str) -> BigRational {
        let (int, frac) = s.split_once('.').unwrap_or((s, ""));
        let digits: BigInt = format!("{int}{frac}").parse().unwrap();
        let scale = num_traits::pow(BigInt::from(10), frac.len());
        BigRational::new(digits, scale)
    }

    fn lex(s: &str) -> Vec<Tok> {
        let chars: Vec<char> = s.chars().collect();
        let mut out = Vec::new();
        let mut i = 0;
        while i < chars.len() {
            let c = chars[i];
            if c.is_whitespace() {
                i += 1;
            } else if c.is_ascii_digit() || c == '.' {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                    i += 1;
                }
                out.push(Tok::Num(decimal(&chars[start..i].iter().collect::<String>())));
            } else {
                let prev_is_value = matches!(out.last(), Some(Tok::Num(_)) | Some(Tok::Close));
                out.push(match c {
                    '(' => Tok::Open,
                    ')' => Tok::Close,
                    '-' if !prev_is_value => Tok::Neg,
                    '×' => Tok::Op('*'),
                    '÷' => Tok::Op('/'),
                    other => Tok::Op(other),
                });
                i += 1;
            }
        }
        out
    }

    fn prec(t: &Tok) -> u8 {
        match t {
            Tok::Op('+') | Tok::Op('-') => 1,
            Tok::Op('*') | Tok::Op('/') | Tok::Op('%') => 2,
            Tok::Neg => 3,
            Tok::Op('^') => 4,
            _ => 0,
        }
    }

    fn apply(t: &Tok, stack: &mut Vec<BigRational>) -> Option<BigRational> {
        if *t == Tok::Neg {
            let a = stack.pop()?;
            return Some(-a);
        }
        let b = stack.pop()?;
        let a = stack.pop()?;
        Some(match t {
            Tok::Op('+') => a + b,
            Tok::Op('-') => a - b,
            Tok::Op('*') => a * b,
            Tok::Op('/') => {
                if b.is_zero() {
                    return None;
                }
                a / b
            }
            Tok::Op('^') => {
                // Exponents in the generated expressions are small integers.
                let e: i64 = b.to_integer().try_into().ok()?;
                let mut r = BigRational::one();
                for _ in 0..e.unsigned_abs() {
                    r *= &a;
                }
                if e < 0 {
                    if r.is_zero() {
                        return None;
                    }
                    r = r.recip();
                }
                r
            }
            _ => return None,
        })
    }

    /// `None` for division by zero.
    pub fn eval(s: &str) -> Option<BigRational> {
        let mut out: Vec<BigRational> = Vec::new();
        let mut ops: Vec<Tok> = Vec::new();
        for t in lex(s) {
            match t {
                Tok::Num(n) => out.push(n),
                Tok::Open | Tok::Neg => ops.push(t),
                Tok::Close => {
                    while let Some(top) = ops.pop() {
                        if top == Tok::Open {
                            break;
                        }
                        let v = apply(&top, &mut out)?;
                        out.push(v);
                    }
                }
                Tok::Op(c) => {
                    let right = c == '^';
                    while let Some(top) = ops.last() {
                        if *top == Tok::Open {
                            break;
                        }
                        let (pt, pc) = (prec(top), prec(&t));
                        if pt > pc || (pt == pc && !right) {
                            let top = ops.pop().unwrap();
                            let v = apply(&top, &mut out)?;
                            out.push(v);
                        } else {
                            break;
                        }
                    }
                    ops.push(t);
                }
            }
        }
        while let Some(top) = ops.pop() {
            let v = apply(&top, &mut out)?;
            out.push(v);
        }
        out.pop()
    }
}

fn literal(rng: &mut ChaCha8Rng) -> String {
    if rng.gen_bool(0.25) {
        format!("{}.{}", rng.gen_range(0..100), rng.gen_range(1..100))
    } else {
        rng.gen_range(0..1000).to_string()
    }
}

fn gen_expr(rng: &mut ChaCha8Rng, depth: u32) -> String {
    if depth == 0 || rng.gen_bool(0.3) {
        return literal(rng);
    }
    match rng.gen_range(0..10) {
        0 => format!("({})", gen_expr(rng, depth - 1)),
        1 => format!("-{}", gen_expr(rng, depth - 1)),
        2 => format!("{}^{}", literal(rng), rng.gen_range(0..4)),
        _ => {
            let op = ["+", "-", "*", "/", "×", "÷"][rng.gen_range(0..6)];
            let sp = if rng.gen_bool(0.5) { " " } else { "" };
            format!("{}{sp}{op}{sp}{}", gen_expr(rng, depth - 1), gen_expr(rng, depth - 1))
        }
    }
}

#[test]
fn precedence_and_times_sign() {
    assert_eq!(to_f64(&evaluate("2+3*4").unwrap()), 14.0);
    assert_eq!(to_f64(&evaluate("2×3").unwrap()), 6.0);
    match parse_expr("2×3").unwrap() {
        Expr::Binary { op: BinOp::Times, lhs, rhs } => {
            assert_eq!(lhs.to_string(), "2");
            assert_eq!(rhs.to_string(), "3");
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn long_expression_against_exact_rational() {
    let want = BigRational::new(BigInt::from(502 * 2952 + 323), BigInt::from(63));
    let got = evaluate("(502*2952+323)/63").unwrap();
    assert_eq!(got, want);
    assert_eq!(render_approx(&got, 12), "23527.412698412698");
}

#[test]
fn failures() {
    assert!(matches!(parse_expr("((1+"), Err(CalcError::UnbalancedParens { .. })));
    assert_eq!(evaluate("1/0"), Err(CalcError::DivisionByZero));
}

#[test]
fn differential_against_shunting_yard() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut compared = 0;
    for _ in 0..10_000 {
        let s = gen_expr(&mut rng, 5);
        let ours = evaluate(&s);
        match oracle::eval(&s) {
            None => assert_eq!(ours, Err(CalcError::DivisionByZero), "{s}"),
            Some(want) => {
                let got = ours.unwrap_or_else(|e| panic!("{s}: {e}"));
                let (g, w) = (to_f64(&got), to_f64(&want));
                assert!((g - w).abs() <= 1e-12 * w.abs().max(1e-300), "{s}: {g} vs {w}");
                compared += 1;
            }
        }
    }
    assert!(compared > 9000, "only {compared} expressions compared");
}

proptest! {
    #[test]
    fn serialize_then_evaluate_round_trips(seed in any::<u64>()) {
        let s = gen_expr(&mut ChaCha8Rng::seed_from_u64(seed), 6);
        let tree = parse_expr(&s).unwrap();
        prop_assert_eq!(evaluate(&tree.to_string()), evaluate(&s));
    }
}
