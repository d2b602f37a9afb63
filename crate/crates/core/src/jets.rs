//! Truncated multivariate Taylor arithmetic.
//!
//! A [`Jet`] carries the value of a scalar quantity together with all of its
//! partial derivatives up to a fixed total order, with respect to a fixed
//! number of variables. Coefficients are the raw partials `∂^α h` (not the
//! Taylor coefficients `∂^α h / α!`), stored densely in graded
//! lexicographic order of the multi-index `α`, so every coefficient of
//! total degree `d` precedes every coefficient of degree `d + 1`.
//!
//! Arithmetic follows the generalized Leibniz rule and elementary functions
//! are applied by composing their univariate Taylor series with the
//! non-constant part of the argument, so curvature quantities built from
//! jets are exact up to floating point rounding.

use std::collections::HashMap;
use std::fmt;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};
use std::sync::{Mutex, OnceLock};

use thiserror::Error;

/// Largest number of variables a jet may carry.
pub const MAX_VARS: usize = 6;
/// Largest supported truncation order.
pub const MAX_ORDER: usize = 4;

type Exponents = [u8; MAX_VARS];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum JetError {
    #[error("variable index {index} out of range for {num_vars} variables")]
    IndexOutOfRange { index: usize, num_vars: usize },
    #[error("a coordinate jet needs order >= 1, got {0}")]
    OrderTooLow(usize),
    #[error("unsupported jet shape: {num_vars} variables at order {order}")]
    UnsupportedShape { num_vars: usize, order: usize },
    #[error("jet shape mismatch: ({0}, {1}) vs ({2}, {3})")]
    ShapeMismatch(usize, usize, usize, usize),
    #[error("division by a jet with zero value")]
    DivisionByZero,
    #[error("{func} is undefined at {value}")]
    Domain { func: &'static str, value: f64 },
}

/// Elementary functions understood by [`Jet::elementary`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Elementary {
    Exp,
    Ln,
    Sin,
    Cos,
    Sinh,
    Cosh,
    Sqrt,
    Pow(f64),
}

/// Coefficient layout shared by every jet of a given shape.
#[derive(Debug)]
pub struct Layout {
    num_vars: usize,
    order: usize,
    exponents: Vec<Exponents>,
    lookup: HashMap<Exponents, usize>,
    /// For each multi-index `α`: every split `α = β + γ` with the binomial weight `C(α, β)`.
    products: Vec<Vec<(u16, u16, f64)>>,
    /// `raise[i][a]` is the index of `exponents_{order-1}[a] + e_i` in this layout.
    raise: Vec<Vec<usize>>,
}

impl Layout {
    fn build(num_vars: usize, order: usize) -> Self {
        let exponents = enumerate_exponents(num_vars, order);
        let lookup: HashMap<Exponents, usize> = exponents.iter().enumerate().map(|(i, e)| (*e, i)).collect();

        let mut products = Vec::with_capacity(exponents.len());
        for alpha in &exponents {
            let mut splits = Vec::new();
            for (bi, beta) in exponents.iter().enumerate() {
                if (0..num_vars).any(|v| beta[v] > alpha[v]) {
                    continue;
                }
                let mut gamma = [0u8; MAX_VARS];
                let mut weight = 1.0;
                for v in 0..num_vars {
                    gamma[v] = alpha[v] - beta[v];
                    weight *= binomial(alpha[v] as usize, beta[v] as usize);
                }
                splits.push((bi as u16, lookup[&gamma] as u16, weight));
            }
            products.push(splits);
        }

        let raise = if order == 0 {
            Vec::new()
        } else {
            let lower = enumerate_exponents(num_vars, order - 1);
            (0..num_vars)
                .map(|i| {
                    lower
                        .iter()
                        .map(|e| {
                            let mut up = *e;
                            up[i] += 1;
                            lookup[&up]
                        })
                        .collect()
                })
                .collect()
        };

        Layout {
            num_vars,
            order,
            exponents,
            lookup,
            products,
            raise,
        }
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Number of stored coefficients: `C(num_vars + order, order)`.
    pub fn len(&self) -> usize {
        self.exponents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.exponents.is_empty()
    }

    /// Exponent vector of the coefficient at `index` (first `num_vars` entries meaningful).
    pub fn exponents(&self, index: usize) -> &[u8] {
        &self.exponents[index][..self.num_vars]
    }

    /// Position of the multi-index given by its exponents, if within the order.
    pub fn index_of(&self, exps: &[u8]) -> Option<usize> {
        if exps.len() != self.num_vars {
            return None;
        }
        let mut key = [0u8; MAX_VARS];
        key[..exps.len()].copy_from_slice(exps);
        self.lookup.get(&key).copied()
    }
}

/// Graded lexicographic enumeration: by total degree, then lexicographically
/// descending in the exponent of the first variable.
fn enumerate_exponents(num_vars: usize, order: usize) -> Vec<Exponents> {
    fn fill(var: usize, num_vars: usize, remaining: usize, cur: &mut Exponents, out: &mut Vec<Exponents>) {
        if var + 1 == num_vars {
            cur[var] = remaining as u8;
            out.push(*cur);
            cur[var] = 0;
            return;
        }
        for e in (0..=remaining).rev() {
            cur[var] = e as u8;
            fill(var + 1, num_vars, remaining - e, cur, out);
        }
        cur[var] = 0;
    }
    let mut out = Vec::new();
    let mut cur = [0u8; MAX_VARS];
    for degree in 0..=order {
        fill(0, num_vars, degree, &mut cur, &mut out);
    }
    out
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Shared, leaked layout for a jet shape. There are at most
/// `MAX_VARS * (MAX_ORDER + 1)` of them.
pub fn layout(num_vars: usize, order: usize) -> Result<&'static Layout, JetError> {
    if num_vars == 0 || num_vars > MAX_VARS || order > MAX_ORDER {
        return Err(JetError::UnsupportedShape { num_vars, order });
    }
    static CACHE: OnceLock<Mutex<HashMap<(usize, usize), &'static Layout>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().unwrap_or_else(|poisoned| poisoned.into_inner());
    Ok(*guard
        .entry((num_vars, order))
        .or_insert_with(|| Box::leak(Box::new(Layout::build(num_vars, order)))))
}

/// A truncated multivariate Taylor expansion storing raw partial derivatives.
#[derive(Clone)]
pub struct Jet {
    layout: &'static Layout,
    coeffs: Vec<f64>,
}

impl fmt::Debug for Jet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Jet")
            .field("num_vars", &self.layout.num_vars)
            .field("order", &self.layout.order)
            .field("coeffs", &self.coeffs)
            .finish()
    }
}

impl PartialEq for Jet {
    fn eq(&self, other: &Self) -> bool {
        self.same_shape(other) && self.coeffs == other.coeffs
    }
}

impl Jet {
    /// The zero jet of the given shape.
    pub fn zeros(num_vars: usize, order: usize) -> Result<Self, JetError> {
        let layout = layout(num_vars, order)?;
        Ok(Jet {
            layout,
            coeffs: vec![0.0; layout.len()],
        })
    }

    /// A jet with the given value and all derivatives zero.
    pub fn constant(value: f64, num_vars: usize, order: usize) -> Result<Self, JetError> {
        let mut jet = Jet::zeros(num_vars, order)?;
        jet.coeffs[0] = value;
        Ok(jet)
    }

    /// The coordinate function `x_i` expanded at `x_i = value`.
    pub fn variable(index: usize, value: f64, num_vars: usize, order: usize) -> Result<Self, JetError> {
        if index >= num_vars {
            return Err(JetError::IndexOutOfRange { index, num_vars });
        }
        if order < 1 {
            return Err(JetError::OrderTooLow(order));
        }
        let mut jet = Jet::constant(value, num_vars, order)?;
        jet.coeffs[1 + index] = 1.0;
        Ok(jet)
    }

    /// Coordinate jets for every component of `point`.
    pub fn coordinates(point: &[f64], order: usize) -> Result<Vec<Jet>, JetError> {
        let n = point.len();
        point
            .iter()
            .enumerate()
            .map(|(i, &x)| Jet::variable(i, x, n, order))
            .collect()
    }

    /// Builds a jet from raw coefficients in layout order.
    pub fn from_coeffs(num_vars: usize, order: usize, coeffs: Vec<f64>) -> Result<Self, JetError> {
        let layout = layout(num_vars, order)?;
        if coeffs.len() != layout.len() {
            return Err(JetError::UnsupportedShape { num_vars, order });
        }
        Ok(Jet { layout, coeffs })
    }

    /// A constant with the same shape as `self`.
    pub fn lift(&self, value: f64) -> Jet {
        let mut coeffs = vec![0.0; self.coeffs.len()];
        coeffs[0] = value;
        Jet {
            layout: self.layout,
            coeffs,
        }
    }

    pub fn num_vars(&self) -> usize {
        self.layout.num_vars
    }

    pub fn order(&self) -> usize {
        self.layout.order
    }

    pub fn layout(&self) -> &'static Layout {
        self.layout
    }

    pub fn value(&self) -> f64 {
        self.coeffs[0]
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn same_shape(&self, other: &Jet) -> bool {
        std::ptr::eq(self.layout, other.layout)
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_finite())
    }

    /// First partial `∂_i`.
    pub fn d1(&self, i: usize) -> f64 {
        self.coeffs[1 + i]
    }

    /// The raw partial derivative with respect to the listed variables,
    /// e.g. `&[0, 0, 1]` for `∂₀∂₀∂₁`.
    ///
    /// Panics if a variable index is out of range or the total degree
    /// exceeds the jet order.
    pub fn partial(&self, vars: &[usize]) -> f64 {
        let mut exps = vec![0u8; self.num_vars()];
        for &v in vars {
            exps[v] += 1;
        }
        match self.layout.index_of(&exps) {
            Some(idx) => self.coeffs[idx],
            None => panic!("partial {vars:?} beyond jet order {}", self.order()),
        }
    }

    /// Coefficient for an explicit exponent vector, `None` beyond the order.
    pub fn get(&self, exps: &[u8]) -> Option<f64> {
        self.layout.index_of(exps).map(|i| self.coeffs[i])
    }

    /// The jet of `∂_i h`, one order lower. Panics on an order-0 jet.
    pub fn derivative(&self, i: usize) -> Jet {
        assert!(self.order() >= 1, "cannot differentiate an order-0 jet");
        let lower = layout(self.num_vars(), self.order() - 1).expect("valid lower shape");
        let coeffs = self.layout.raise[i].iter().map(|&k| self.coeffs[k]).collect();
        Jet { layout: lower, coeffs }
    }

    /// Drops every coefficient above `order`.
    pub fn truncate(&self, order: usize) -> Jet {
        if order >= self.order() {
            return self.clone();
        }
        let lower = layout(self.num_vars(), order).expect("valid lower shape");
        Jet {
            layout: lower,
            coeffs: self.coeffs[..lower.len()].to_vec(),
        }
    }

    pub fn scale(&self, factor: f64) -> Jet {
        Jet {
            layout: self.layout,
            coeffs: self.coeffs.iter().map(|c| c * factor).collect(),
        }
    }

    fn check_shape(&self, other: &Jet) -> Result<(), JetError> {
        if self.same_shape(other) {
            Ok(())
        } else {
            Err(JetError::ShapeMismatch(
                self.num_vars(),
                self.order(),
                other.num_vars(),
                other.order(),
            ))
        }
    }

    pub fn checked_add(&self, other: &Jet) -> Result<Jet, JetError> {
        self.check_shape(other)?;
        Ok(self.zip(other, |a, b| a + b))
    }

    pub fn checked_sub(&self, other: &Jet) -> Result<Jet, JetError> {
        self.check_shape(other)?;
        Ok(self.zip(other, |a, b| a - b))
    }

    pub fn checked_mul(&self, other: &Jet) -> Result<Jet, JetError> {
        self.check_shape(other)?;
        Ok(self.leibniz(other))
    }

    pub fn checked_div(&self, other: &Jet) -> Result<Jet, JetError> {
        self.check_shape(other)?;
        if other.value() == 0.0 {
            return Err(JetError::DivisionByZero);
        }
        Ok(self.leibniz(&other.recip()))
    }

    fn zip(&self, other: &Jet, op: impl Fn(f64, f64) -> f64) -> Jet {
        Jet {
            layout: self.layout,
            coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(&a, &b)| op(a, b)).collect(),
        }
    }

    fn leibniz(&self, other: &Jet) -> Jet {
        let coeffs = self
            .layout
            .products
            .iter()
            .map(|splits| {
                splits
                    .iter()
                    .map(|&(b, g, w)| w * self.coeffs[b as usize] * other.coeffs[g as usize])
                    .sum()
            })
            .collect();
        Jet {
            layout: self.layout,
            coeffs,
        }
    }

    /// Composes a univariate function with this jet, given the function's
    /// derivatives `h^(k)(value)` for `k = 0..=order`.
    pub fn compose(&self, derivs: &[f64]) -> Jet {
        let order = self.order();
        assert!(derivs.len() > order, "need {} derivatives", order + 1);
        let mut out = self.lift(derivs[0]);
        if order == 0 {
            return out;
        }
        let mut delta = self.clone();
        delta.coeffs[0] = 0.0;
        let mut power = delta.clone();
        let mut factorial = 1.0;
        for (k, &dk) in derivs.iter().enumerate().take(order + 1).skip(1) {
            factorial *= k as f64;
            let w = dk / factorial;
            for (o, p) in out.coeffs.iter_mut().zip(&power.coeffs) {
                *o += w * p;
            }
            if k < order {
                power = power.leibniz(&delta);
            }
        }
        out
    }

    /// Applies an elementary function, rejecting arguments outside its domain.
    pub fn elementary(&self, func: Elementary) -> Result<Jet, JetError> {
        let x = self.value();
        let domain = |name| JetError::Domain { func: name, value: x };
        match func {
            Elementary::Ln if !(x > 0.0) => return Err(domain("ln")),
            Elementary::Sqrt if !(x > 0.0) => return Err(domain("sqrt")),
            Elementary::Pow(r) if !pow_defined(x, r, self.order()) => return Err(domain("pow")),
            _ => {}
        }
        if !x.is_finite() {
            return Err(domain("elementary"));
        }
        Ok(self.compose(&univariate_derivatives(func, x, self.order())))
    }

    pub fn exp(&self) -> Jet {
        self.compose(&univariate_derivatives(Elementary::Exp, self.value(), self.order()))
    }

    pub fn sin(&self) -> Jet {
        self.compose(&univariate_derivatives(Elementary::Sin, self.value(), self.order()))
    }

    pub fn cos(&self) -> Jet {
        self.compose(&univariate_derivatives(Elementary::Cos, self.value(), self.order()))
    }

    pub fn sinh(&self) -> Jet {
        self.compose(&univariate_derivatives(Elementary::Sinh, self.value(), self.order()))
    }

    pub fn cosh(&self) -> Jet {
        self.compose(&univariate_derivatives(Elementary::Cosh, self.value(), self.order()))
    }

    /// Natural log; NaN coefficients for non-positive values (use
    /// [`Jet::elementary`] for a checked version).
    pub fn ln(&self) -> Jet {
        self.compose(&univariate_derivatives(Elementary::Ln, self.value(), self.order()))
    }

    /// Square root; NaN coefficients for non-positive values.
    pub fn sqrt(&self) -> Jet {
        self.compose(&univariate_derivatives(Elementary::Sqrt, self.value(), self.order()))
    }

    pub fn powf(&self, r: f64) -> Jet {
        self.compose(&univariate_derivatives(Elementary::Pow(r), self.value(), self.order()))
    }

    pub fn powi(&self, k: i32) -> Jet {
        if k >= 0 {
            let mut acc = self.lift(1.0);
            for _ in 0..k {
                acc = acc.leibniz(self);
            }
            acc
        } else {
            self.powf(k as f64)
        }
    }

    /// `1 / self`; infinite coefficients when the value is zero.
    pub fn recip(&self) -> Jet {
        self.powf(-1.0)
    }

    pub fn square(&self) -> Jet {
        self.leibniz(self)
    }
}

fn pow_defined(x: f64, r: f64, order: usize) -> bool {
    if x > 0.0 {
        return true;
    }
    let integral = r.fract() == 0.0;
    if integral && r >= 0.0 {
        // polynomial: fine everywhere, including derivatives at zero
        return true;
    }
    if integral {
        return x != 0.0;
    }
    // non-integer exponent at zero is fine only if every requested derivative exists
    x == 0.0 && r >= order as f64
}

fn univariate_derivatives(func: Elementary, x: f64, order: usize) -> Vec<f64> {
    let mut d = Vec::with_capacity(order + 1);
    match func {
        Elementary::Exp => d.resize(order + 1, x.exp()),
        Elementary::Ln => {
            d.push(x.ln());
            let mut fact = 1.0;
            for k in 1..=order {
                if k > 1 {
                    fact *= (k - 1) as f64;
                }
                let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
                d.push(sign * fact / x.powi(k as i32));
            }
        }
        Elementary::Sin | Elementary::Cos => {
            let (s, c) = x.sin_cos();
            let cycle = [s, c, -s, -c];
            let start = if func == Elementary::Sin { 0 } else { 1 };
            d.extend((0..=order).map(|k| cycle[(start + k) % 4]));
        }
        Elementary::Sinh | Elementary::Cosh => {
            let (s, c) = (x.sinh(), x.cosh());
            let start = if func == Elementary::Sinh { 0 } else { 1 };
            d.extend((0..=order).map(|k| if (start + k) % 2 == 0 { s } else { c }));
        }
        Elementary::Sqrt => return univariate_derivatives(Elementary::Pow(0.5), x, order),
        Elementary::Pow(r) => {
            let mut falling = 1.0;
            for k in 0..=order {
                let p = r - k as f64;
                let term = if falling == 0.0 { 0.0 } else { falling * x.powf(p) };
                d.push(term);
                falling *= p;
            }
        }
    }
    d
}

// ---- operators ----------------------------------------------------------
//
// Binary operators panic on shape mismatch, like slice indexing; the
// `checked_*` methods return errors instead. Division by a zero-valued jet
// follows IEEE semantics and yields non-finite coefficients.

impl Add<&Jet> for &Jet {
    type Output = Jet;
    fn add(self, rhs: &Jet) -> Jet {
        self.checked_add(rhs).expect("jet shape mismatch")
    }
}

impl Sub<&Jet> for &Jet {
    type Output = Jet;
    fn sub(self, rhs: &Jet) -> Jet {
        self.checked_sub(rhs).expect("jet shape mismatch")
    }
}

impl Mul<&Jet> for &Jet {
    type Output = Jet;
    fn mul(self, rhs: &Jet) -> Jet {
        self.checked_mul(rhs).expect("jet shape mismatch")
    }
}

impl Div<&Jet> for &Jet {
    type Output = Jet;
    fn div(self, rhs: &Jet) -> Jet {
        self.check_shape(rhs).expect("jet shape mismatch");
        self.leibniz(&rhs.recip())
    }
}

macro_rules! forward_owned {
    ($trait:ident, $method:ident) => {
        impl $trait<Jet> for Jet {
            type Output = Jet;
            fn $method(self, rhs: Jet) -> Jet {
                (&self).$method(&rhs)
            }
        }
        impl $trait<&Jet> for Jet {
            type Output = Jet;
            fn $method(self, rhs: &Jet) -> Jet {
                (&self).$method(rhs)
            }
        }
        impl $trait<Jet> for &Jet {
            type Output = Jet;
            fn $method(self, rhs: Jet) -> Jet {
                self.$method(&rhs)
            }
        }
    };
}

forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);
forward_owned!(Div, div);

impl Add<f64> for &Jet {
    type Output = Jet;
    fn add(self, rhs: f64) -> Jet {
        let mut out = self.clone();
        out.coeffs[0] += rhs;
        out
    }
}

impl Add<f64> for Jet {
    type Output = Jet;
    fn add(mut self, rhs: f64) -> Jet {
        self.coeffs[0] += rhs;
        self
    }
}

impl Sub<f64> for Jet {
    type Output = Jet;
    fn sub(mut self, rhs: f64) -> Jet {
        self.coeffs[0] -= rhs;
        self
    }
}

impl Sub<f64> for &Jet {
    type Output = Jet;
    fn sub(self, rhs: f64) -> Jet {
        self.clone() - rhs
    }
}

impl Sub<Jet> for f64 {
    type Output = Jet;
    fn sub(self, rhs: Jet) -> Jet {
        -rhs + self
    }
}

impl Sub<&Jet> for f64 {
    type Output = Jet;
    fn sub(self, rhs: &Jet) -> Jet {
        -rhs.clone() + self
    }
}

impl Add<Jet> for f64 {
    type Output = Jet;
    fn add(self, rhs: Jet) -> Jet {
        rhs + self
    }
}

impl Mul<f64> for &Jet {
    type Output = Jet;
    fn mul(self, rhs: f64) -> Jet {
        self.scale(rhs)
    }
}

impl Mul<f64> for Jet {
    type Output = Jet;
    fn mul(mut self, rhs: f64) -> Jet {
        self.coeffs.iter_mut().for_each(|c| *c *= rhs);
        self
    }
}

impl Mul<Jet> for f64 {
    type Output = Jet;
    fn mul(self, rhs: Jet) -> Jet {
        rhs * self
    }
}

impl Mul<&Jet> for f64 {
    type Output = Jet;
    fn mul(self, rhs: &Jet) -> Jet {
        rhs.scale(self)
    }
}

impl Div<f64> for Jet {
    type Output = Jet;
    fn div(self, rhs: f64) -> Jet {
        self * (1.0 / rhs)
    }
}

impl Div<Jet> for f64 {
    type Output = Jet;
    fn div(self, rhs: Jet) -> Jet {
        rhs.recip().scale(self)
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(mut self) -> Jet {
        self.coeffs.iter_mut().for_each(|c| *c = -*c);
        self
    }
}

impl Neg for &Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        -self.clone()
    }
}

impl AddAssign<&Jet> for Jet {
    fn add_assign(&mut self, rhs: &Jet) {
        self.check_shape(rhs).expect("jet shape mismatch");
        self.coeffs.iter_mut().zip(&rhs.coeffs).for_each(|(a, b)| *a += b);
    }
}

impl AddAssign<Jet> for Jet {
    fn add_assign(&mut self, rhs: Jet) {
        *self += &rhs;
    }
}

impl SubAssign<&Jet> for Jet {
    fn sub_assign(&mut self, rhs: &Jet) {
        self.check_shape(rhs).expect("jet shape mismatch");
        self.coeffs.iter_mut().zip(&rhs.coeffs).for_each(|(a, b)| *a -= b);
    }
}

impl MulAssign<f64> for Jet {
    fn mul_assign(&mut self, rhs: f64) {
        self.coeffs.iter_mut().for_each(|c| *c *= rhs);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn x(value: f64, order: usize) -> Jet {
        Jet::variable(0, value, 1, order).unwrap()
    }

    #[test]
    fn coefficient_count_matches_multi_index_count() {
        for n in 1..=4 {
            for k in 0..=4 {
                let expected = binomial(n + k, k) as usize;
                assert_eq!(layout(n, k).unwrap().len(), expected, "n={n} k={k}");
            }
        }
    }

    #[test]
    fn layout_is_graded() {
        let l = layout(3, 3).unwrap();
        let degrees: Vec<u32> = (0..l.len())
            .map(|i| l.exponents(i).iter().map(|&e| e as u32).sum())
            .collect();
        assert!(degrees.windows(2).all(|w| w[0] <= w[1]));
        assert_eq!(l.exponents(1), &[1, 0, 0]);
        assert_eq!(l.exponents(3), &[0, 0, 1]);
    }

    #[test]
    fn coordinate_jet() {
        let j = Jet::variable(0, 2.0, 2, 3).unwrap();
        assert_eq!(j.value(), 2.0);
        assert_eq!(j.d1(0), 1.0);
        assert!(j.coeffs().iter().skip(2).all(|&c| c == 0.0));

        let j = Jet::variable(1, 0.0, 2, 2).unwrap();
        assert_eq!(j.value(), 0.0);
        assert_eq!(j.d1(1), 1.0);
        assert_eq!(j.d1(0), 0.0);
        assert_eq!(j.coeffs().iter().filter(|&&c| c != 0.0).count(), 1);
    }

    #[test]
    fn coordinate_jet_errors() {
        assert_eq!(
            Jet::variable(3, 1.0, 2, 3).unwrap_err(),
            JetError::IndexOutOfRange { index: 3, num_vars: 2 }
        );
        assert_eq!(Jet::variable(0, 1.0, 2, 0).unwrap_err(), JetError::OrderTooLow(0));
    }

    #[test]
    fn square_of_coordinate() {
        let j = x(2.0, 3);
        let sq = &j * &j;
        assert_eq!(sq.coeffs(), &[4.0, 4.0, 2.0, 0.0]);
    }

    #[test]
    fn additive_identity() {
        let a = Jet::variable(1, 0.3, 2, 3).unwrap().sin();
        let zero = Jet::zeros(2, 3).unwrap();
        assert_eq!(&a + &zero, a);
    }

    #[test]
    fn product_of_two_coordinates() {
        // oracle: central differences of f(x, y) = x y at (1, 1), h = 1e-3
        let f = |x: f64, y: f64| x * y;
        let h = 1e-3;
        let fx = (f(1.0 + h, 1.0) - f(1.0 - h, 1.0)) / (2.0 * h);
        let fy = (f(1.0, 1.0 + h) - f(1.0, 1.0 - h)) / (2.0 * h);
        let fxy =
            (f(1.0 + h, 1.0 + h) - f(1.0 + h, 1.0 - h) - f(1.0 - h, 1.0 + h) + f(1.0 - h, 1.0 - h)) / (4.0 * h * h);
        let fxx = (f(1.0 + h, 1.0) - 2.0 * f(1.0, 1.0) + f(1.0 - h, 1.0)) / (h * h);
        let xs = Jet::coordinates(&[1.0, 1.0], 2).unwrap();
        let p = &xs[0] * &xs[1];
        assert_eq!(p.value(), 1.0);
        assert!((p.partial(&[0]) - fx).abs() < 1e-9);
        assert!((p.partial(&[1]) - fy).abs() < 1e-9);
        assert!((p.partial(&[0, 1]) - fxy).abs() < 1e-6);
        assert!((p.partial(&[0, 0]) - fxx).abs() < 1e-6);
        assert_eq!(p.partial(&[0, 1]), 1.0);
        assert_eq!(p.partial(&[0, 0]), 0.0);
        assert_eq!(p.partial(&[1, 1]), 0.0);
    }

    #[test]
    fn shape_mismatch_is_an_error() {
        let a = Jet::zeros(2, 3).unwrap();
        let b = Jet::zeros(2, 2).unwrap();
        assert!(matches!(a.checked_mul(&b), Err(JetError::ShapeMismatch(2, 3, 2, 2))));
        assert!(matches!(a.checked_add(&b), Err(JetError::ShapeMismatch(..))));
    }

    #[test]
    fn division_by_zero_value() {
        let a = x(1.0, 2);
        let b = x(0.0, 2);
        assert_eq!(a.checked_div(&b).unwrap_err(), JetError::DivisionByZero);
        let ok = a.checked_div(&x(2.0, 2)).unwrap();
        assert!((ok.value() - 0.5).abs() < 1e-15);
        // d/dx (x/x) at x = 2 vanishes
        let one = x(2.0, 3).checked_div(&x(2.0, 3)).unwrap();
        assert!((one.value() - 1.0).abs() < 1e-15);
        assert!(one.coeffs()[1..].iter().all(|c| c.abs() < 1e-15));
    }

    #[test]
    fn exp_and_sin_at_zero() {
        let e = x(0.0, 3).elementary(Elementary::Exp).unwrap();
        assert_eq!(e.coeffs(), &[1.0, 1.0, 1.0, 1.0]);
        let s = x(0.0, 3).elementary(Elementary::Sin).unwrap();
        assert_eq!(s.coeffs(), &[0.0, 1.0, 0.0, -1.0]);
    }

    #[test]
    fn domain_violations() {
        let neg = x(-1.0, 3);
        assert!(matches!(
            neg.elementary(Elementary::Ln),
            Err(JetError::Domain { func: "ln", .. })
        ));
        assert!(neg.elementary(Elementary::Sqrt).is_err());
        assert!(neg.elementary(Elementary::Pow(0.5)).is_err());
        assert!(neg.elementary(Elementary::Pow(2.0)).is_ok());
        assert!(x(0.0, 3).elementary(Elementary::Pow(-1.0)).is_err());
        assert!(!neg.ln().is_finite());
    }

    #[test]
    fn univariate_rules() {
        // d^k/dx^k of x^3 at x = 2: 8, 12, 12, 6, 0
        let c = x(2.0, 4).powi(3);
        for (got, want) in c.coeffs().iter().zip([8.0, 12.0, 12.0, 6.0, 0.0]) {
            assert!((got - want).abs() < 1e-12, "{got} vs {want}");
        }
        // ln x at x = 2: ln2, 1/2, -1/4, 2/8, -6/16
        let l = x(2.0, 4).ln();
        for (got, want) in l.coeffs().iter().zip([2f64.ln(), 0.5, -0.25, 0.25, -0.375]) {
            assert!((got - want).abs() < 1e-14);
        }
        // sqrt at 4: 2, 1/4, -1/32, 3/256
        let s = x(4.0, 3).sqrt();
        for (got, want) in s.coeffs().iter().zip([2.0, 0.25, -1.0 / 32.0, 3.0 / 256.0]) {
            assert!((got - want).abs() < 1e-15);
        }
        let ch = x(0.5, 2).cosh();
        assert!((ch.coeffs()[1] - 0.5f64.sinh()).abs() < 1e-15);
        assert!((ch.coeffs()[2] - 0.5f64.cosh()).abs() < 1e-15);
    }

    #[test]
    fn derivative_shifts_and_lowers_order() {
        let xs = Jet::coordinates(&[0.7, -0.4], 3).unwrap();
        let f = (&xs[0] * &xs[1]).exp() + xs[0].sin();
        let d0 = f.derivative(0);
        assert_eq!(d0.order(), 2);
        assert!((d0.value() - f.partial(&[0])).abs() < 1e-15);
        assert!((d0.partial(&[0, 1]) - f.partial(&[0, 0, 1])).abs() < 1e-15);
        assert!((d0.partial(&[1]) - f.partial(&[0, 1])).abs() < 1e-15);
        let t = f.truncate(1);
        assert_eq!(t.coeffs(), &f.coeffs()[..3]);
    }

    #[test]
    fn mixed_partials_depend_only_on_multi_index() {
        let xs = Jet::coordinates(&[0.3, 0.8], 3).unwrap();
        let f = (&xs[0] * &xs[1].square()).sin();
        assert_eq!(f.partial(&[0, 1, 1]), f.partial(&[1, 0, 1]));
        assert_eq!(f.partial(&[1, 1, 0]), f.partial(&[1, 0, 1]));
    }
}
