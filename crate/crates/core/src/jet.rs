//! Truncated Taylor jets and flow-directional derivatives.
//!
//! [`Jet`] holds Taylor coefficients in a curve parameter `t` up to order 4;
//! arithmetic satisfies the truncated Leibniz and chain rules exactly, so
//! composing expression evaluation over jets yields exact derivatives of the
//! composition (no finite differencing).
//!
//! [`lie_jet`] evaluates a scalar expression along the integral curve of a
//! field `v` through a point: the returned values are
//! `(w, L_v w, L_v^2 w, ..., L_v^k w)` at the point, where `L_v` is the
//! derivative along the flow. The curve itself is expanded by Taylor
//! coefficient propagation of `x' = v(x)`.

use crate::expr::{Expr, Func};
use crate::geom::Vec2;

pub const MAX_ORDER: usize = 4;
const LEN: usize = MAX_ORDER + 1;

/// Taylor coefficients `c[k]` of a scalar function of `t` at `t = 0`,
/// truncated beyond order 4. The derivative of order `k` is `k! * c[k]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Jet {
    pub c: [f64; LEN],
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum JetError {
    #[error("square root of negative value {0}")]
    SqrtNegative(f64),
    #[error("square root at zero is not differentiable")]
    SqrtAtZero,
    #[error("logarithm of non-positive value {0}")]
    LogNonPositive(f64),
    #[error("division by zero")]
    DivisionByZero,
}

impl Jet {
    pub fn constant(v: f64) -> Jet {
        let mut c = [0.0; LEN];
        c[0] = v;
        Jet { c }
    }

    /// The jet of `t ↦ v + t`.
    pub fn variable(v: f64) -> Jet {
        let mut c = [0.0; LEN];
        c[0] = v;
        c[1] = 1.0;
        Jet { c }
    }

    pub fn value(&self) -> f64 {
        self.c[0]
    }

    /// k-th derivative: `k! * c[k]`.
    pub fn derivative(&self, k: usize) -> f64 {
        let mut factorial = 1.0;
        for i in 1..=k {
            factorial *= i as f64;
        }
        factorial * self.c[k]
    }

    pub fn try_div(self, o: Jet) -> Result<Jet, JetError> {
        if o.c[0] == 0.0 {
            return Err(JetError::DivisionByZero);
        }
        let mut c = [0.0; LEN];
        for k in 0..LEN {
            let mut acc = self.c[k];
            for j in 1..=k {
                acc -= o.c[j] * c[k - j];
            }
            c[k] = acc / o.c[0];
        }
        Ok(Jet { c })
    }

    pub fn powi(self, k: u32) -> Jet {
        let mut acc = Jet::constant(1.0);
        for _ in 0..k {
            acc = acc * self;
        }
        acc
    }

    pub fn exp(self) -> Jet {
        let mut c = [0.0; LEN];
        c[0] = self.c[0].exp();
        for k in 1..LEN {
            let mut acc = 0.0;
            for j in 1..=k {
                acc += j as f64 * self.c[j] * c[k - j];
            }
            c[k] = acc / k as f64;
        }
        Jet { c }
    }

    pub fn sin_cos(self) -> (Jet, Jet) {
        let mut s = [0.0; LEN];
        let mut co = [0.0; LEN];
        s[0] = self.c[0].sin();
        co[0] = self.c[0].cos();
        for k in 1..LEN {
            let mut ds = 0.0;
            let mut dc = 0.0;
            for j in 1..=k {
                ds += j as f64 * self.c[j] * co[k - j];
                dc += j as f64 * self.c[j] * s[k - j];
            }
            s[k] = ds / k as f64;
            co[k] = -dc / k as f64;
        }
        (Jet { c: s }, Jet { c: co })
    }

    pub fn sqrt(self) -> Result<Jet, JetError> {
        if self.c[0] < 0.0 {
            return Err(JetError::SqrtNegative(self.c[0]));
        }
        if self.c[0] == 0.0 {
            return Err(JetError::SqrtAtZero);
        }
        let mut c = [0.0; LEN];
        c[0] = self.c[0].sqrt();
        for k in 1..LEN {
            let mut acc = self.c[k];
            for j in 1..k {
                acc -= c[j] * c[k - j];
            }
            c[k] = acc / (2.0 * c[0]);
        }
        Ok(Jet { c })
    }

    pub fn ln(self) -> Result<Jet, JetError> {
        if self.c[0] <= 0.0 {
            return Err(JetError::LogNonPositive(self.c[0]));
        }
        let mut c = [0.0; LEN];
        c[0] = self.c[0].ln();
        for k in 1..LEN {
            let mut acc = k as f64 * self.c[k];
            for j in 1..k {
                acc -= j as f64 * c[j] * self.c[k - j];
            }
            c[k] = acc / (k as f64 * self.c[0]);
        }
        Ok(Jet { c })
    }
}

impl std::ops::Add for Jet {
    type Output = Jet;
    fn add(self, o: Jet) -> Jet {
        let mut c = self.c;
        for k in 0..LEN {
            c[k] += o.c[k];
        }
        Jet { c }
    }
}

impl std::ops::Sub for Jet {
    type Output = Jet;
    fn sub(self, o: Jet) -> Jet {
        let mut c = self.c;
        for k in 0..LEN {
            c[k] -= o.c[k];
        }
        Jet { c }
    }
}

impl std::ops::Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        let mut c = self.c;
        for v in &mut c {
            *v = -*v;
        }
        Jet { c }
    }
}

impl std::ops::Mul for Jet {
    type Output = Jet;
    fn mul(self, o: Jet) -> Jet {
        let mut c = [0.0; LEN];
        for (i, &a) in self.c.iter().enumerate() {
            for (j, &b) in o.c.iter().take(LEN - i).enumerate() {
                c[i + j] += a * b;
            }
        }
        Jet { c }
    }
}

fn eval_jet(e: &Expr, x: Jet, y: Jet) -> Result<Jet, JetError> {
    Ok(match e {
        Expr::Num(c) => Jet::constant(*c),
        Expr::X => x,
        Expr::Y => y,
        Expr::Add(a, b) => eval_jet(a, x, y)? + eval_jet(b, x, y)?,
        Expr::Sub(a, b) => eval_jet(a, x, y)? - eval_jet(b, x, y)?,
        Expr::Mul(a, b) => eval_jet(a, x, y)? * eval_jet(b, x, y)?,
        Expr::Div(a, b) => eval_jet(a, x, y)?.try_div(eval_jet(b, x, y)?)?,
        Expr::Pow(a, k) => eval_jet(a, x, y)?.powi(*k),
        Expr::Neg(a) => -eval_jet(a, x, y)?,
        Expr::Call(f, a) => {
            let v = eval_jet(a, x, y)?;
            match f {
                Func::Sin => v.sin_cos().0,
                Func::Cos => v.sin_cos().1,
                Func::Exp => v.exp(),
                Func::Sqrt => v.sqrt()?,
                Func::Log => v.ln()?,
            }
        }
    })
}

/// Taylor expansion of the integral curve of `v` through `p`, to order 4.
///
/// Coefficients are propagated one order at a time: if the curve is known to
/// order `k`, evaluating `v` over that truncation recovers coefficient `k`
/// of `x'`, which integrates to coefficient `k + 1` of the curve.
pub fn flow_curve_jets(v: (&Expr, &Expr), p: Vec2) -> Result<(Jet, Jet), JetError> {
    let mut x = Jet::constant(p.x);
    let mut y = Jet::constant(p.y);
    for order in 0..MAX_ORDER {
        let vx = eval_jet(v.0, x, y)?;
        let vy = eval_jet(v.1, x, y)?;
        x.c[order + 1] = vx.c[order] / (order + 1) as f64;
        y.c[order + 1] = vy.c[order] / (order + 1) as f64;
    }
    Ok((x, y))
}

/// Flow-directional derivatives `(w, L_v w, ..., L_v^k w)` at `p`, `k <= 4`.
pub fn lie_jet(w: &Expr, v: (&Expr, &Expr), p: Vec2, order: usize) -> Result<Vec<f64>, JetError> {
    assert!(order <= MAX_ORDER, "jet order is capped at {MAX_ORDER}");
    let (x, y) = flow_curve_jets(v, p)?;
    let j = eval_jet(w, x, y)?;
    Ok((0..=order).map(|k| j.derivative(k)).collect())
}

/// Directional derivative of `w` along the constant direction `d` at `p`,
/// computed exactly via a constant-field jet.
pub fn directional_derivative(w: &Expr, p: Vec2, d: Vec2) -> Result<f64, JetError> {
    let x = Jet {
        c: [p.x, d.x, 0.0, 0.0, 0.0],
    };
    let y = Jet {
        c: [p.y, d.y, 0.0, 0.0, 0.0],
    };
    Ok(eval_jet(w, x, y)?.derivative(1))
}

/// Exact gradient of `w` at `p` via two directional jets.
pub fn gradient(w: &Expr, p: Vec2) -> Result<Vec2, JetError> {
    Ok(Vec2::new(
        directional_derivative(w, p, Vec2::new(1.0, 0.0))?,
        directional_derivative(w, p, Vec2::new(0.0, 1.0))?,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn parse(s: &str) -> Expr {
        Expr::parse(s).unwrap()
    }

    #[test]
    fn disk_jets_along_horizontal_field() {
        let w = parse("1 - x^2 - y^2");
        let one = parse("1");
        let zero = parse("0");
        let j = lie_jet(&w, (&one, &zero), Vec2::new(0.0, 1.0), 2).unwrap();
        assert!((j[0] - 0.0).abs() < 1e-14);
        assert!((j[1] - 0.0).abs() < 1e-14);
        assert!((j[2] - (-2.0)).abs() < 1e-14);

        let j = lie_jet(&w, (&one, &zero), Vec2::new(-0.6, 0.8), 1).unwrap();
        assert!((j[0]).abs() < 1e-14);
        assert!((j[1] - 1.2).abs() < 1e-14);
    }

    #[test]
    fn linear_function_vertical_field() {
        let w = parse("y");
        let zero = parse("0");
        let one = parse("1");
        let j = lie_jet(&w, (&zero, &one), Vec2::new(3.0, -2.5), 3).unwrap();
        assert_eq!(j, vec![-2.5, 1.0, 0.0, 0.0]);
    }

    /// Naive symbolic derivative along a constant direction, for the
    /// polynomial-exactness oracle. Test-only; independent of jet arithmetic.
    fn symbolic_dir_derivative(e: &Expr, d: Vec2) -> Expr {
        match e {
            Expr::Num(_) => Expr::Num(0.0),
            Expr::X => Expr::Num(d.x),
            Expr::Y => Expr::Num(d.y),
            Expr::Add(a, b) => Expr::Add(
                Box::new(symbolic_dir_derivative(a, d)),
                Box::new(symbolic_dir_derivative(b, d)),
            ),
            Expr::Sub(a, b) => Expr::Sub(
                Box::new(symbolic_dir_derivative(a, d)),
                Box::new(symbolic_dir_derivative(b, d)),
            ),
            Expr::Mul(a, b) => Expr::Add(
                Box::new(Expr::Mul(Box::new(symbolic_dir_derivative(a, d)), b.clone())),
                Box::new(Expr::Mul(a.clone(), Box::new(symbolic_dir_derivative(b, d)))),
            ),
            Expr::Pow(a, k) => {
                if *k == 0 {
                    Expr::Num(0.0)
                } else {
                    Expr::Mul(
                        Box::new(Expr::Mul(
                            Box::new(Expr::Num(*k as f64)),
                            Box::new(Expr::Pow(a.clone(), k - 1)),
                        )),
                        Box::new(symbolic_dir_derivative(a, d)),
                    )
                }
            }
            Expr::Neg(a) => Expr::Neg(Box::new(symbolic_dir_derivative(a, d))),
            Expr::Div(..) | Expr::Call(..) => unreachable!("polynomial oracle only"),
        }
    }

    fn random_polynomial(rng: &mut ChaCha8Rng, depth: usize) -> Expr {
        if depth == 0 {
            match rng.gen_range(0..3) {
                0 => Expr::X,
                1 => Expr::Y,
                _ => Expr::Num(rng.gen_range(-2.0..2.0)),
            }
        } else {
            let a = random_polynomial(rng, depth - 1);
            let b = random_polynomial(rng, depth - 1);
            match rng.gen_range(0..4) {
                0 => Expr::Add(Box::new(a), Box::new(b)),
                1 => Expr::Sub(Box::new(a), Box::new(b)),
                2 => Expr::Mul(Box::new(a), Box::new(b)),
                _ => Expr::Pow(Box::new(a), rng.gen_range(0..4)),
            }
        }
    }

    #[test]
    fn polynomial_jets_match_symbolic_derivatives() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..60 {
            let w = random_polynomial(&mut rng, 3);
            let d = Vec2::new(rng.gen_range(-1.5..1.5), rng.gen_range(-1.5..1.5));
            let p = Vec2::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            let vx = Expr::Num(d.x);
            let vy = Expr::Num(d.y);
            let jets = lie_jet(&w, (&vx, &vy), p, 2).unwrap();

            let d1 = symbolic_dir_derivative(&w, d);
            let d2 = symbolic_dir_derivative(&d1, d);
            let exact = [w.eval(p).unwrap(), d1.eval(p).unwrap(), d2.eval(p).unwrap()];
            for (jet_v, exact_v) in jets.iter().zip(exact.iter()) {
                let scale = 1.0 + exact_v.abs();
                assert!(
                    (jet_v - exact_v).abs() <= 8.0 * f64::EPSILON * scale * 16.0,
                    "jet {jet_v} vs symbolic {exact_v} for {w}"
                );
            }
        }
    }

    #[test]
    fn gradient_of_disk_function() {
        let w = parse("1 - x^2 - y^2");
        let g = gradient(&w, Vec2::new(0.3, -0.4)).unwrap();
        assert!((g.x + 0.6).abs() < 1e-14);
        assert!((g.y - 0.8).abs() < 1e-14);
    }
}
