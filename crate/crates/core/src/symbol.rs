//! Real phase-space symbols `b(x, ξ)` on `T^n × R^n`.
//!
//! A symbol is a finite sum of separable terms `a_j(x) c_j(ξ)`, where `a_j` is
//! a trigonometric polynomial given by its Fourier coefficients and `c_j` is
//! an expression over the momentum grammar
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := factor ('*' factor)*
//! factor := unary ('^' integer)?
//! unary  := '-' unary | atom
//! atom   := number | xi1 | xi2 | xi3 | xi | '|xi|^2' | '<xi>' | '(' expr ')'
//! ```
//!
//! (`xi` is shorthand for `xi1`; `<xi>` is `(1 + |ξ|²)^{1/2}`). Symbols
//! without a separable form can be supplied as a closure together with their
//! trigonometric degree in `x`.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::MAX_DIM;

/// Momentum expression `c(ξ)`.
#[derive(Clone, Debug, PartialEq)]
pub enum XiExpr {
    Const(f64),
    /// Zero-based component `ξ_j`.
    Component(usize),
    NormSq,
    Bracket,
    Neg(Box<XiExpr>),
    Add(Box<XiExpr>, Box<XiExpr>),
    Sub(Box<XiExpr>, Box<XiExpr>),
    Mul(Box<XiExpr>, Box<XiExpr>),
    Pow(Box<XiExpr>, u32),
}

impl XiExpr {
    pub fn parse(text: &str) -> Result<Self> {
        let tokens = tokenize(text)?;
        let mut p = Parser { tokens, pos: 0 };
        let e = p.expr()?;
        if p.pos != p.tokens.len() {
            return Err(Error::Symbol(format!("trailing input in momentum expression {text:?}")));
        }
        Ok(e)
    }

    pub fn eval(&self, xi: &[f64]) -> f64 {
        match self {
            XiExpr::Const(c) => *c,
            XiExpr::Component(j) => xi.get(*j).copied().unwrap_or(0.0),
            XiExpr::NormSq => xi.iter().map(|v| v * v).sum(),
            XiExpr::Bracket => (1.0 + xi.iter().map(|v| v * v).sum::<f64>()).sqrt(),
            XiExpr::Neg(a) => -a.eval(xi),
            XiExpr::Add(a, b) => a.eval(xi) + b.eval(xi),
            XiExpr::Sub(a, b) => a.eval(xi) - b.eval(xi),
            XiExpr::Mul(a, b) => a.eval(xi) * b.eval(xi),
            XiExpr::Pow(a, k) => a.eval(xi).powi(*k as i32),
        }
    }

    /// Largest zero-based component index referenced, if any.
    pub fn max_component(&self) -> Option<usize> {
        match self {
            XiExpr::Component(j) => Some(*j),
            XiExpr::Const(_) | XiExpr::NormSq | XiExpr::Bracket => None,
            XiExpr::Neg(a) | XiExpr::Pow(a, _) => a.max_component(),
            XiExpr::Add(a, b) | XiExpr::Sub(a, b) | XiExpr::Mul(a, b) => {
                a.max_component().max(b.max_component())
            }
        }
    }
}

impl fmt::Display for XiExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            XiExpr::Const(c) => write!(f, "{c:?}"),
            XiExpr::Component(j) => write!(f, "xi{}", j + 1),
            XiExpr::NormSq => write!(f, "|xi|^2"),
            XiExpr::Bracket => write!(f, "<xi>"),
            XiExpr::Neg(a) => write!(f, "(-{a})"),
            XiExpr::Add(a, b) => write!(f, "({a}+{b})"),
            XiExpr::Sub(a, b) => write!(f, "({a}-{b})"),
            XiExpr::Mul(a, b) => write!(f, "({a}*{b})"),
            XiExpr::Pow(a, k) => write!(f, "({a}^{k})"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Token {
    Num(f64),
    Xi(usize),
    NormSq,
    Bracket,
    Plus,
    Minus,
    Star,
    Caret,
    LParen,
    RParen,
}

fn tokenize(text: &str) -> Result<Vec<Token>> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    let bad = |what: &str| Error::Symbol(format!("{what} in momentum expression {text:?}"));
    while i < bytes.len() {
        let c = bytes[i];
        match c {
            b' ' | b'\t' | b'\n' => i += 1,
            b'+' => {
                out.push(Token::Plus);
                i += 1;
            }
            b'-' => {
                out.push(Token::Minus);
                i += 1;
            }
            b'*' => {
                out.push(Token::Star);
                i += 1;
            }
            b'^' => {
                out.push(Token::Caret);
                i += 1;
            }
            b'(' => {
                out.push(Token::LParen);
                i += 1;
            }
            b')' => {
                out.push(Token::RParen);
                i += 1;
            }
            b'|' => {
                if text[i..].starts_with("|xi|^2") {
                    out.push(Token::NormSq);
                    i += 6;
                } else {
                    return Err(bad("'|' must open '|xi|^2'"));
                }
            }
            b'<' => {
                if text[i..].starts_with("<xi>") {
                    out.push(Token::Bracket);
                    i += 4;
                } else {
                    return Err(bad("'<' must open '<xi>'"));
                }
            }
            b'x' => {
                if !text[i..].starts_with("xi") {
                    return Err(bad("unknown identifier"));
                }
                i += 2;
                match bytes.get(i) {
                    Some(d @ b'1'..=b'3') => {
                        out.push(Token::Xi((d - b'1') as usize));
                        i += 1;
                    }
                    Some(b'0'..=b'9') => return Err(bad("momentum component out of range")),
                    _ => out.push(Token::Xi(0)),
                }
            }
            b'0'..=b'9' | b'.' => {
                let start = i;
                while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                    i += 1;
                }
                if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                    i += 1;
                    if i < bytes.len() && (bytes[i] == b'+' || bytes[i] == b'-') {
                        i += 1;
                    }
                    while i < bytes.len() && bytes[i].is_ascii_digit() {
                        i += 1;
                    }
                }
                let v: f64 = text[start..i].parse().map_err(|_| bad("malformed number"))?;
                out.push(Token::Num(v));
            }
            _ => return Err(bad(&format!("unexpected character {:?}", c as char))),
        }
    }
    Ok(out)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn next(&mut self) -> Option<Token> {
        let t = self.tokens.get(self.pos).cloned();
        self.pos += 1;
        t
    }

    fn expr(&mut self) -> Result<XiExpr> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Some(Token::Plus) => {
                    self.pos += 1;
                    lhs = XiExpr::Add(Box::new(lhs), Box::new(self.term()?));
                }
                Some(Token::Minus) => {
                    self.pos += 1;
                    lhs = XiExpr::Sub(Box::new(lhs), Box::new(self.term()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<XiExpr> {
        let mut lhs = self.factor()?;
        while let Some(Token::Star) = self.peek() {
            self.pos += 1;
            lhs = XiExpr::Mul(Box::new(lhs), Box::new(self.factor()?));
        }
        Ok(lhs)
    }

    fn factor(&mut self) -> Result<XiExpr> {
        let base = self.unary()?;
        if let Some(Token::Caret) = self.peek() {
            self.pos += 1;
            match self.next() {
                Some(Token::Num(v)) if v >= 0.0 && v.fract() == 0.0 && v <= 64.0 => {
                    Ok(XiExpr::Pow(Box::new(base), v as u32))
                }
                _ => Err(Error::Symbol("exponent must be an integer between 0 and 64".into())),
            }
        } else {
            Ok(base)
        }
    }

    fn unary(&mut self) -> Result<XiExpr> {
        if let Some(Token::Minus) = self.peek() {
            self.pos += 1;
            return Ok(XiExpr::Neg(Box::new(self.unary()?)));
        }
        self.atom()
    }

    fn atom(&mut self) -> Result<XiExpr> {
        match self.next() {
            Some(Token::Num(v)) => Ok(XiExpr::Const(v)),
            Some(Token::Xi(j)) => Ok(XiExpr::Component(j)),
            Some(Token::NormSq) => Ok(XiExpr::NormSq),
            Some(Token::Bracket) => Ok(XiExpr::Bracket),
            Some(Token::LParen) => {
                let e = self.expr()?;
                match self.next() {
                    Some(Token::RParen) => Ok(e),
                    _ => Err(Error::Symbol("missing ')'".into())),
                }
            }
            other => Err(Error::Symbol(format!("unexpected token {other:?}"))),
        }
    }
}

/// One separable term `a(x) c(ξ)` with `a(x) = Σ_m â(m) e^{im·x}`.
#[derive(Clone, Debug, PartialEq)]
pub struct SymbolTerm {
    x_coeffs: Vec<([i64; MAX_DIM], Complex64)>,
    xi: XiExpr,
}

impl SymbolTerm {
    pub fn new(x_coeffs: Vec<(Vec<i64>, Complex64)>, xi: XiExpr) -> Result<Self> {
        let mut out: Vec<([i64; MAX_DIM], Complex64)> = Vec::with_capacity(x_coeffs.len());
        for (mode, c) in x_coeffs {
            if mode.len() > MAX_DIM {
                return Err(Error::Symbol("x-mode has more than three components".into()));
            }
            if !c.re.is_finite() || !c.im.is_finite() {
                return Err(Error::NonFinite("symbol x-coefficient".into()));
            }
            let mut m = [0i64; MAX_DIM];
            m[..mode.len()].copy_from_slice(&mode);
            match out.iter_mut().find(|(k, _)| *k == m) {
                Some((_, v)) => *v += c,
                None => out.push((m, c)),
            }
        }
        Ok(Self { x_coeffs: out, xi })
    }

    /// A term with constant `a ≡ 1`.
    pub fn momentum_only(xi: XiExpr) -> Self {
        Self {
            x_coeffs: vec![([0; MAX_DIM], Complex64::new(1.0, 0.0))],
            xi,
        }
    }

    pub fn xi(&self) -> &XiExpr {
        &self.xi
    }

    pub fn x_coeff(&self, m: &[i64]) -> Complex64 {
        self.x_coeffs
            .iter()
            .find(|(k, _)| k[..m.len()] == *m && k[m.len()..].iter().all(|&v| v == 0))
            .map_or(Complex64::new(0.0, 0.0), |(_, c)| *c)
    }

    pub fn eval_x(&self, x: &[f64]) -> Complex64 {
        self.x_coeffs
            .iter()
            .map(|(m, c)| {
                let phase: f64 = m.iter().zip(x).map(|(&mj, &xj)| mj as f64 * xj).sum();
                c * Complex64::from_polar(1.0, phase)
            })
            .sum()
    }

    pub fn degree(&self) -> usize {
        self.x_coeffs
            .iter()
            .filter(|(_, c)| c.norm_sqr() > 0.0)
            .flat_map(|(m, _)| m.iter().map(|v| v.unsigned_abs() as usize))
            .max()
            .unwrap_or(0)
    }

    fn max_axis(&self) -> usize {
        self.x_coeffs
            .iter()
            .filter_map(|(m, _)| m.iter().rposition(|&v| v != 0))
            .max()
            .map_or(0, |j| j + 1)
    }
}

pub type RawSymbol = Arc<dyn Fn(&[f64], &[f64]) -> f64 + Send + Sync>;

/// Ellipticity constants: `|b(x, ξ)| ≥ C ⟨ξ⟩^m` for `|ξ| ≥ c`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Ellipticity {
    #[serde(rename = "C")]
    pub constant: f64,
    #[serde(rename = "c")]
    pub radius: f64,
}

#[derive(Clone)]
pub struct Symbol {
    n: usize,
    order: f64,
    terms: Vec<SymbolTerm>,
    raw: Option<RawSymbol>,
    raw_degree: usize,
    ellipticity: Option<Ellipticity>,
}

impl fmt::Debug for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Symbol")
            .field("n", &self.n)
            .field("order", &self.order)
            .field("terms", &self.terms)
            .field("raw", &self.raw.is_some())
            .field("ellipticity", &self.ellipticity)
            .finish()
    }
}

/// Probe points per axis used for reality and consistency checks.
const PROBE_X: usize = 7;
const PROBE_XI: [f64; 5] = [-3.7, -1.1, 0.0, 0.9, 2.3];

fn probe_points(n: usize) -> Vec<(Vec<f64>, Vec<f64>)> {
    let xs: Vec<f64> = (0..PROBE_X).map(|i| 2.0 * PI * (i as f64 + 0.31) / PROBE_X as f64).collect();
    let mut out = Vec::new();
    let count = (PROBE_X * PROBE_XI.len()).pow(n as u32);
    for flat in 0..count {
        let mut rem = flat;
        let mut x = vec![0.0; n];
        let mut xi = vec![0.0; n];
        for d in 0..n {
            x[d] = xs[rem % PROBE_X];
            rem /= PROBE_X;
            xi[d] = PROBE_XI[rem % PROBE_XI.len()];
            rem /= PROBE_XI.len();
        }
        out.push((x, xi));
    }
    out
}

impl Symbol {
    /// A separable symbol; every term must combine into a real function.
    pub fn from_terms(n: usize, order: f64, terms: Vec<SymbolTerm>) -> Result<Self> {
        if !(1..=MAX_DIM).contains(&n) {
            return Err(Error::Symbol(format!("dimension n = {n} must be 1, 2 or 3")));
        }
        if terms.is_empty() {
            return Err(Error::Symbol("a symbol needs at least one term".into()));
        }
        for t in &terms {
            if t.xi.max_component().is_some_and(|j| j >= n) || t.max_axis() > n {
                return Err(Error::Symbol(format!("term references an axis beyond n = {n}")));
            }
        }
        let s = Self {
            n,
            order,
            terms,
            raw: None,
            raw_degree: 0,
            ellipticity: None,
        };
        for (x, xi) in probe_points(n) {
            let v = s.eval_complex(&x, &xi);
            if !v.re.is_finite() || !v.im.is_finite() {
                return Err(Error::NonFinite(format!("symbol at x = {x:?}, xi = {xi:?}")));
            }
            if v.im.abs() > 1e-12 * (1.0 + v.re.abs()) {
                return Err(Error::Symbol(format!(
                    "symbol is not real: Im b = {:e} at x = {x:?}, xi = {xi:?}",
                    v.im
                )));
            }
        }
        Ok(s)
    }

    /// A symbol known only pointwise, with trigonometric degree `x_degree` in `x`.
    pub fn from_fn(
        n: usize,
        order: f64,
        x_degree: usize,
        f: impl Fn(&[f64], &[f64]) -> f64 + Send + Sync + 'static,
    ) -> Result<Self> {
        if !(1..=MAX_DIM).contains(&n) {
            return Err(Error::Symbol(format!("dimension n = {n} must be 1, 2 or 3")));
        }
        Ok(Self {
            n,
            order,
            terms: Vec::new(),
            raw: Some(Arc::new(f)),
            raw_degree: x_degree,
            ellipticity: None,
        })
    }

    /// Attaches a direct evaluator to a separable symbol; the two must agree
    /// to 1e-10 on the probe grid.
    pub fn with_raw(
        mut self,
        f: impl Fn(&[f64], &[f64]) -> f64 + Send + Sync + 'static,
    ) -> Result<Self> {
        for (x, xi) in probe_points(self.n) {
            let a = self.eval_terms(&x, &xi);
            let b = f(&x, &xi);
            if (a - b).abs() > 1e-10 * (1.0 + a.abs()) {
                return Err(Error::Symbol(format!(
                    "direct evaluator disagrees with terms at x = {x:?}, xi = {xi:?}: {b} vs {a}"
                )));
            }
        }
        self.raw_degree = self.x_degree();
        self.raw = Some(Arc::new(f));
        Ok(self)
    }

    pub fn with_ellipticity(mut self, constant: f64, radius: f64) -> Result<Self> {
        if !(constant > 0.0 && radius >= 0.0 && constant.is_finite() && radius.is_finite()) {
            return Err(Error::Symbol("ellipticity needs C > 0 and c >= 0".into()));
        }
        self.ellipticity = Some(Ellipticity { constant, radius });
        Ok(self)
    }

    /// `b = ½|ξ|²`.
    pub fn free(n: usize) -> Result<Self> {
        Self::from_terms(
            n,
            2.0,
            vec![SymbolTerm::momentum_only(XiExpr::Mul(
                Box::new(XiExpr::Const(0.5)),
                Box::new(XiExpr::NormSq),
            ))],
        )?
        .with_ellipticity(0.25, 1.0)
    }

    /// The pendulum `b = ½ξ² + 1 − cos x` on `T^1`.
    pub fn pendulum() -> Result<Self> {
        let potential = SymbolTerm::new(
            vec![
                (vec![0], Complex64::new(1.0, 0.0)),
                (vec![1], Complex64::new(-0.5, 0.0)),
                (vec![-1], Complex64::new(-0.5, 0.0)),
            ],
            XiExpr::Const(1.0),
        )?;
        let kinetic = SymbolTerm::momentum_only(XiExpr::Mul(
            Box::new(XiExpr::Const(0.5)),
            Box::new(XiExpr::NormSq),
        ));
        Self::from_terms(1, 2.0, vec![kinetic, potential])?.with_ellipticity(0.25, 3.0)
    }

    /// `b ≡ 1`.
    pub fn identity(n: usize) -> Result<Self> {
        Self::from_terms(n, 0.0, vec![SymbolTerm::momentum_only(XiExpr::Const(1.0))])
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn order(&self) -> f64 {
        self.order
    }

    pub fn terms(&self) -> &[SymbolTerm] {
        &self.terms
    }

    pub fn is_separable(&self) -> bool {
        !self.terms.is_empty()
    }

    pub fn ellipticity(&self) -> Option<Ellipticity> {
        self.ellipticity
    }

    /// Trigonometric degree in `x`.
    pub fn x_degree(&self) -> usize {
        if self.terms.is_empty() {
            self.raw_degree
        } else {
            self.terms.iter().map(SymbolTerm::degree).max().unwrap_or(0)
        }
    }

    fn eval_complex(&self, x: &[f64], xi: &[f64]) -> Complex64 {
        self.terms
            .iter()
            .map(|t| t.eval_x(x) * t.xi.eval(xi))
            .sum()
    }

    fn eval_terms(&self, x: &[f64], xi: &[f64]) -> f64 {
        self.eval_complex(x, xi).re
    }

    /// `b(x, ξ)`.
    pub fn eval(&self, x: &[f64], xi: &[f64]) -> f64 {
        if self.terms.is_empty() {
            self.raw.as_ref().map_or(0.0, |f| f(x, xi))
        } else {
            self.eval_terms(x, xi)
        }
    }

    /// Exact `x`-Fourier coefficient from the separable terms.
    pub(crate) fn term_coeff(&self, m: &[i64], xi: &[f64]) -> Complex64 {
        self.terms
            .iter()
            .map(|t| t.x_coeff(m) * t.xi.eval(xi))
            .sum()
    }

    /// `x`-Fourier coefficient at fixed `ξ`; exact for separable symbols and
    /// computed by [`symbol_coeff`] quadrature otherwise.
    pub fn x_coeff(&self, m: &[i64], xi: &[f64]) -> Result<Complex64> {
        if self.is_separable() {
            let v = self.term_coeff(m, xi);
            if !v.re.is_finite() || !v.im.is_finite() {
                return Err(Error::NonFinite(format!("symbol coefficient at xi = {xi:?}")));
            }
            Ok(v)
        } else {
            symbol_coeff(self, m, xi)
        }
    }
}

/// `b̂(m, ξ) = (2π)^{-n} ∫ e^{−im·y} b(y, ξ) dy` by uniform-grid quadrature.
/// The grid has more than `2D + 1` and `D + |m|_∞` points per axis, so the
/// result is exact when `b` has trigonometric degree `D` in `x`.
pub fn symbol_coeff(b: &Symbol, m: &[i64], xi: &[f64]) -> Result<Complex64> {
    let n = b.dim();
    if m.len() != n || xi.len() != n {
        return Err(Error::invalid("mode and momentum must have the symbol's dimension"));
    }
    let d = b.x_degree();
    let mmax = m.iter().map(|v| v.unsigned_abs() as usize).max().unwrap_or(0);
    let l = (2 * d + 2).max(d + mmax + 1);
    let count = l.pow(n as u32);
    let mut acc = Complex64::new(0.0, 0.0);
    let mut y = vec![0.0; n];
    for flat in 0..count {
        let mut rem = flat;
        let mut phase = 0.0;
        for j in (0..n).rev() {
            let idx = rem % l;
            rem /= l;
            y[j] = 2.0 * PI * idx as f64 / l as f64;
            phase += m[j] as f64 * y[j];
        }
        let v = b.eval(&y, xi);
        if !v.is_finite() {
            return Err(Error::NonFinite(format!("symbol at y = {y:?}, xi = {xi:?}")));
        }
        acc += Complex64::from_polar(v, -phase);
    }
    Ok(acc / count as f64)
}

/// Serialized symbol definition consumed by the command-line harness.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SymbolSpec {
    pub n: usize,
    pub order: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ellipticity: Option<Ellipticity>,
    pub terms: Vec<TermSpec>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermSpec {
    /// Fourier coefficients of `a(x)`; omitted means `a ≡ 1`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x: Option<Vec<XCoeffSpec>>,
    pub xi: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct XCoeffSpec {
    pub mode: Vec<i64>,
    pub re: f64,
    #[serde(default)]
    pub im: f64,
}

impl SymbolSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Symbol(format!("symbol definition: {e}")))
    }

    /// Built-in definitions: `free` (any `n`), `pendulum`, `identity`.
    pub fn builtin(name: &str, n: usize) -> Result<Self> {
        let term = |x: Option<Vec<XCoeffSpec>>, xi: &str| TermSpec { x, xi: xi.into() };
        let coeff = |mode: i64, re: f64| XCoeffSpec {
            mode: std::iter::once(mode).chain(std::iter::repeat_n(0, n - 1)).collect(),
            re,
            im: 0.0,
        };
        match name {
            "free" => Ok(Self {
                n,
                order: 2.0,
                ellipticity: Some(Ellipticity {
                    constant: 0.25,
                    radius: 1.0,
                }),
                terms: vec![term(None, "0.5*|xi|^2")],
            }),
            "pendulum" => Ok(Self {
                n,
                order: 2.0,
                ellipticity: Some(Ellipticity {
                    constant: 0.25,
                    radius: 3.0,
                }),
                terms: vec![
                    term(None, "0.5*|xi|^2"),
                    term(Some(vec![coeff(0, 1.0), coeff(1, -0.5), coeff(-1, -0.5)]), "1"),
                ],
            }),
            "identity" => Ok(Self {
                n,
                order: 0.0,
                ellipticity: Some(Ellipticity {
                    constant: 1.0,
                    radius: 0.0,
                }),
                terms: vec![term(None, "1")],
            }),
            other => Err(Error::Symbol(format!("unknown built-in symbol {other:?}"))),
        }
    }

    /// Compact JSON with normalized momentum expressions; the cache key hashes this text.
    pub fn canonical_text(&self) -> Result<String> {
        let mut c = self.clone();
        for t in &mut c.terms {
            t.xi = XiExpr::parse(&t.xi)?.to_string();
            if let Some(x) = &mut t.x {
                for coeff in x.iter_mut() {
                    coeff.mode.resize(self.n, 0);
                }
            }
        }
        Ok(serde_json::to_string(&c)?)
    }

    pub fn build(&self) -> Result<Symbol> {
        let mut terms = Vec::with_capacity(self.terms.len());
        for t in &self.terms {
            let xi = XiExpr::parse(&t.xi)?;
            let term = match &t.x {
                None => SymbolTerm::momentum_only(xi),
                Some(coeffs) => {
                    for c in coeffs {
                        if c.mode.len() != self.n {
                            return Err(Error::Symbol(format!(
                                "x-mode {:?} does not have {} components",
                                c.mode, self.n
                            )));
                        }
                    }
                    SymbolTerm::new(
                        coeffs
                            .iter()
                            .map(|c| (c.mode.clone(), Complex64::new(c.re, c.im)))
                            .collect(),
                        xi,
                    )?
                }
            };
            terms.push(term);
        }
        let s = Symbol::from_terms(self.n, self.order, terms)?;
        match self.ellipticity {
            Some(e) => s.with_ellipticity(e.constant, e.radius),
            None => Ok(s),
        }
    }
}
