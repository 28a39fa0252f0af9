//! Exact rational 3-vectors, 3x3 matrices and polynomials.

use std::fmt;
use std::ops::{Add, Mul, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

/// Arbitrary-precision rational, always reduced with a positive denominator.
pub type Rational = BigRational;

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

pub fn frac(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct RationalVec3(pub [Rational; 3]);

impl RationalVec3 {
    pub fn new(x: Rational, y: Rational, z: Rational) -> Self {
        RationalVec3([x, y, z])
    }

    pub fn from_ints(x: i64, y: i64, z: i64) -> Self {
        RationalVec3([int(x), int(y), int(z)])
    }

    pub fn zero() -> Self {
        Self::from_ints(0, 0, 0)
    }

    /// Canonical basis vector `e_{i+1}`.
    pub fn unit(i: usize) -> Self {
        let mut v = Self::zero();
        v.0[i] = Rational::one();
        v
    }

    pub fn scale(&self, c: &Rational) -> Self {
        RationalVec3(std::array::from_fn(|i| &self.0[i] * c))
    }

    pub fn dot(&self, other: &Self) -> Rational {
        (0..3).map(|i| &self.0[i] * &other.0[i]).sum()
    }
}

impl fmt::Debug for RationalVec3 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.0[0], self.0[1], self.0[2])
    }
}

impl Add for &RationalVec3 {
    type Output = RationalVec3;
    fn add(self, rhs: Self) -> RationalVec3 {
        RationalVec3(std::array::from_fn(|i| &self.0[i] + &rhs.0[i]))
    }
}

impl Sub for &RationalVec3 {
    type Output = RationalVec3;
    fn sub(self, rhs: Self) -> RationalVec3 {
        RationalVec3(std::array::from_fn(|i| &self.0[i] - &rhs.0[i]))
    }
}

/// Row-major 3x3 rational matrix.
#[derive(Clone, PartialEq, Eq)]
pub struct Matrix3(pub [[Rational; 3]; 3]);

impl Matrix3 {
    pub fn from_rows(rows: [[Rational; 3]; 3]) -> Self {
        Matrix3(rows)
    }

    pub fn identity() -> Self {
        Matrix3(std::array::from_fn(|i| {
            std::array::from_fn(|j| {
                if i == j {
                    Rational::one()
                } else {
                    Rational::zero()
                }
            })
        }))
    }

    pub fn from_columns(cols: [&RationalVec3; 3]) -> Self {
        Matrix3(std::array::from_fn(|i| {
            std::array::from_fn(|j| cols[j].0[i].clone())
        }))
    }

    pub fn column(&self, j: usize) -> RationalVec3 {
        RationalVec3(std::array::from_fn(|i| self.0[i][j].clone()))
    }

    pub fn trace(&self) -> Rational {
        (0..3).map(|i| self.0[i][i].clone()).sum()
    }

    pub fn det(&self) -> Rational {
        let m = &self.0;
        &m[0][0] * (&m[1][1] * &m[2][2] - &m[1][2] * &m[2][1])
            - &m[0][1] * (&m[1][0] * &m[2][2] - &m[1][2] * &m[2][0])
            + &m[0][2] * (&m[1][0] * &m[2][1] - &m[1][1] * &m[2][0])
    }

    /// Sum of the principal 2x2 minors.
    fn principal_minor_sum(&self) -> Rational {
        let m = &self.0;
        let minor = |a: usize, b: usize| &m[a][a] * &m[b][b] - &m[a][b] * &m[b][a];
        minor(0, 1) + minor(0, 2) + minor(1, 2)
    }

    /// `det(xI - A)` as a monic cubic.
    pub fn characteristic_polynomial(&self) -> Poly {
        Poly::new(vec![
            -self.det(),
            self.principal_minor_sum(),
            -self.trace(),
            Rational::one(),
        ])
    }

    pub fn sub_scalar_identity(&self, lambda: &Rational) -> Matrix3 {
        let mut out = self.clone();
        for i in 0..3 {
            out.0[i][i] = &out.0[i][i] - lambda;
        }
        out
    }

    /// Rank by exact Gaussian elimination.
    pub fn rank(&self) -> usize {
        let mut m = self.0.clone();
        let mut rank = 0;
        for col in 0..3 {
            let Some(pivot) = (rank..3).find(|&r| !m[r][col].is_zero()) else {
                continue;
            };
            m.swap(rank, pivot);
            for r in 0..3 {
                if r != rank && !m[r][col].is_zero() {
                    let factor = &m[r][col] / &m[rank][col];
                    let pivot_row = m[rank].clone();
                    for (x, p) in m[r].iter_mut().zip(&pivot_row) {
                        *x = &*x - &factor * p;
                    }
                }
            }
            rank += 1;
        }
        rank
    }

    /// Gauss-Jordan inverse, `None` when singular.
    pub fn inverse(&self) -> Option<Matrix3> {
        let mut m = self.0.clone();
        let mut inv = Matrix3::identity().0;
        for col in 0..3 {
            let pivot = (col..3).find(|&r| !m[r][col].is_zero())?;
            m.swap(col, pivot);
            inv.swap(col, pivot);
            let p = m[col][col].clone();
            for c in 0..3 {
                m[col][c] = &m[col][c] / &p;
                inv[col][c] = &inv[col][c] / &p;
            }
            for r in 0..3 {
                if r != col && !m[r][col].is_zero() {
                    let factor = m[r][col].clone();
                    for c in 0..3 {
                        let a = &factor * &m[col][c];
                        let b = &factor * &inv[col][c];
                        m[r][c] = &m[r][c] - a;
                        inv[r][c] = &inv[r][c] - b;
                    }
                }
            }
        }
        Some(Matrix3(inv))
    }
}

impl fmt::Debug for Matrix3 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list()
            .entries(
                self.0
                    .iter()
                    .map(|r| format!("[{}, {}, {}]", r[0], r[1], r[2])),
            )
            .finish()
    }
}

impl Mul<&RationalVec3> for &Matrix3 {
    type Output = RationalVec3;
    fn mul(self, v: &RationalVec3) -> RationalVec3 {
        RationalVec3(std::array::from_fn(|i| {
            (0..3).map(|j| &self.0[i][j] * &v.0[j]).sum()
        }))
    }
}

impl Mul for &Matrix3 {
    type Output = Matrix3;
    fn mul(self, rhs: &Matrix3) -> Matrix3 {
        Matrix3(std::array::from_fn(|i| {
            std::array::from_fn(|j| (0..3).map(|k| &self.0[i][k] * &rhs.0[k][j]).sum())
        }))
    }
}

/// Dense polynomial with rational coefficients, lowest degree first.
#[derive(Clone, PartialEq, Eq)]
pub struct Poly(Vec<Rational>);

impl Poly {
    pub fn new(mut coeffs: Vec<Rational>) -> Self {
        while coeffs.last().is_some_and(Zero::is_zero) {
            coeffs.pop();
        }
        Poly(coeffs)
    }

    /// `Σ c_i x^i` from small integer or fractional coefficients.
    pub fn from_coeffs(coeffs: &[Rational]) -> Self {
        Self::new(coeffs.to_vec())
    }

    pub fn coeffs(&self) -> &[Rational] {
        &self.0
    }

    /// `-1` for the zero polynomial.
    pub fn degree(&self) -> isize {
        self.0.len() as isize - 1
    }

    pub fn eval(&self, x: &Rational) -> Rational {
        self.0
            .iter()
            .rev()
            .fold(Rational::zero(), |acc, c| acc * x + c)
    }

    /// `(x - r)` divided out; `None` when `r` is not a root.
    pub fn deflate(&self, r: &Rational) -> Option<Poly> {
        if !self.eval(r).is_zero() || self.0.is_empty() {
            return None;
        }
        let n = self.0.len();
        let mut quotient = vec![Rational::zero(); n - 1];
        let mut carry = Rational::zero();
        for i in (1..n).rev() {
            carry = &self.0[i] + carry * r;
            quotient[i - 1] = carry.clone();
        }
        Some(Poly::new(quotient))
    }

    /// Rational roots with multiplicity, sorted ascending.
    ///
    /// Uses the rational root theorem on the integer-scaled polynomial, so
    /// irrational or complex roots are simply not reported.
    pub fn rational_roots(&self) -> Vec<(Rational, usize)> {
        let mut roots = Vec::new();
        let mut poly = self.clone();
        while poly.degree() >= 1 && poly.0[0].is_zero() {
            poly = poly.deflate(&Rational::zero()).unwrap();
            push_root(&mut roots, Rational::zero());
        }
        if poly.degree() < 1 {
            return roots;
        }
        let denom_lcm = poly
            .0
            .iter()
            .fold(BigInt::one(), |acc, c| num_integer_lcm(&acc, c.denom()));
        let ints: Vec<BigInt> = poly
            .0
            .iter()
            .map(|c| (c * Rational::from_integer(denom_lcm.clone())).to_integer())
            .collect();
        let mut candidates = Vec::new();
        for p in divisors(&ints[0].abs()) {
            for q in divisors(&ints[ints.len() - 1].abs()) {
                let r = Rational::new(p.clone(), q);
                candidates.push(r.clone());
                candidates.push(-r);
            }
        }
        candidates.sort();
        candidates.dedup();
        for c in candidates {
            while let Some(q) = poly.deflate(&c) {
                poly = q;
                push_root(&mut roots, c.clone());
            }
        }
        roots.sort_by(|a, b| a.0.cmp(&b.0));
        roots
    }
}

/// Highest degree first, e.g. `x^3 - 3/2 x^2 + 1/2`.
impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (n, c) in self.0.iter().enumerate().rev() {
            if c.is_zero() {
                continue;
            }
            let sign = if c.is_negative() { "-" } else { "+" };
            match (first, sign) {
                (true, "-") => write!(f, "-")?,
                (true, _) => {}
                _ => write!(f, " {sign} ")?,
            }
            first = false;
            let a = c.abs();
            let coeff = if a.is_one() && n > 0 {
                String::new()
            } else {
                a.to_string()
            };
            let sep = if coeff.is_empty() || n == 0 { "" } else { " " };
            match n {
                0 => write!(f, "{coeff}")?,
                1 => write!(f, "{coeff}{sep}x")?,
                _ => write!(f, "{coeff}{sep}x^{n}")?,
            }
        }
        if first {
            write!(f, "0")?;
        }
        Ok(())
    }
}

impl fmt::Debug for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let terms: Vec<String> = self
            .0
            .iter()
            .enumerate()
            .rev()
            .filter(|(_, c)| !c.is_zero())
            .map(|(i, c)| match i {
                0 => format!("{c}"),
                1 => format!("{c}x"),
                _ => format!("{c}x^{i}"),
            })
            .collect();
        if terms.is_empty() {
            write!(f, "0")
        } else {
            write!(f, "{}", terms.join(" + "))
        }
    }
}

impl Mul for &Poly {
    type Output = Poly;
    fn mul(self, rhs: &Poly) -> Poly {
        if self.0.is_empty() || rhs.0.is_empty() {
            return Poly(Vec::new());
        }
        let mut out = vec![Rational::zero(); self.0.len() + rhs.0.len() - 1];
        for (i, a) in self.0.iter().enumerate() {
            for (j, b) in rhs.0.iter().enumerate() {
                out[i + j] = &out[i + j] + a * b;
            }
        }
        Poly::new(out)
    }
}

fn push_root(roots: &mut Vec<(Rational, usize)>, r: Rational) {
    match roots.iter_mut().find(|(x, _)| *x == r) {
        Some((_, m)) => *m += 1,
        None => roots.push((r, 1)),
    }
}

fn num_integer_lcm(a: &BigInt, b: &BigInt) -> BigInt {
    let g = gcd(a, b);
    (a / g * b).abs()
}

fn gcd(a: &BigInt, b: &BigInt) -> BigInt {
    let (mut a, mut b) = (a.abs(), b.abs());
    while !b.is_zero() {
        let r = &a % &b;
        a = b;
        b = r;
    }
    a
}

/// Positive divisors by trial division; coefficients here are tiny.
fn divisors(n: &BigInt) -> Vec<BigInt> {
    if n.is_zero() {
        return vec![BigInt::one()];
    }
    let mut out = Vec::new();
    let mut i = BigInt::one();
    while &i * &i <= *n {
        if (n % &i).is_zero() {
            out.push(i.clone());
            let other = n / &i;
            if other != i {
                out.push(other);
            }
        }
        i += 1;
    }
    out
}
