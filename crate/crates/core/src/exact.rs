//! Exact rational and Gaussian-rational arithmetic for lattice, form and Gram computations.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use std::ops::{Add, Mul, Neg, Sub};

pub type Rat = BigRational;

pub fn rat(n: i64, d: i64) -> Rat {
    Rat::new(BigInt::from(n), BigInt::from(d))
}

pub fn int(n: i64) -> Rat {
    Rat::from_integer(BigInt::from(n))
}

pub fn to_f64(q: &Rat) -> f64 {
    q.to_f64().unwrap_or(f64::NAN)
}

/// Best rational approximation with denominator at most `max_den`, or `None`
/// if none lies within `tol`.
pub fn approx_rational(x: f64, max_den: i64, tol: f64) -> Option<Rat> {
    if !x.is_finite() {
        return None;
    }
    for d in 1..=max_den {
        let n = (x * d as f64).round();
        if (n / d as f64 - x).abs() < tol {
            return Some(rat(n as i64, d));
        }
    }
    None
}

/// Row-reduces a copy of `m`; returns the rank.
pub fn rank(m: &[Vec<Rat>]) -> usize {
    echelon(m).1.len()
}

/// Reduced row echelon form and the pivot columns.
pub fn echelon(m: &[Vec<Rat>]) -> (Vec<Vec<Rat>>, Vec<usize>) {
    let mut a: Vec<Vec<Rat>> = m.to_vec();
    let rows = a.len();
    let cols = if rows == 0 { 0 } else { a[0].len() };
    let mut pivots = Vec::new();
    let mut r = 0;
    for col in 0..cols {
        if r == rows {
            break;
        }
        let Some(p) = (r..rows).find(|&i| !a[i][col].is_zero()) else {
            continue;
        };
        a.swap(r, p);
        let inv = a[r][col].recip();
        for x in a[r].iter_mut() {
            *x = &*x * &inv;
        }
        for i in 0..rows {
            if i != r && !a[i][col].is_zero() {
                let f = a[i][col].clone();
                for j in col..cols {
                    let t = &f * &a[r][j];
                    a[i][j] = &a[i][j] - t;
                }
            }
        }
        pivots.push(col);
        r += 1;
    }
    (a, pivots)
}

/// Solves `a x = b` for square nonsingular `a`.
pub fn solve(a: &[Vec<Rat>], b: &[Rat]) -> Option<Vec<Rat>> {
    let n = a.len();
    let aug: Vec<Vec<Rat>> = a
        .iter()
        .zip(b)
        .map(|(row, bi)| {
            let mut r = row.clone();
            r.push(bi.clone());
            r
        })
        .collect();
    let (red, piv) = echelon(&aug);
    if piv.len() != n || piv.iter().any(|&p| p >= n) {
        return None;
    }
    Some((0..n).map(|i| red[i][n].clone()).collect())
}

/// Indices of a maximal linearly independent subset of the rows, chosen greedily in order.
pub fn independent_rows(m: &[Vec<Rat>]) -> Vec<usize> {
    let cols = m.first().map_or(0, |r| r.len());
    let mut basis: Vec<(usize, Vec<Rat>)> = Vec::new();
    let mut chosen = Vec::new();
    for (idx, row) in m.iter().enumerate() {
        let mut v = row.clone();
        for (p, b) in &basis {
            if !v[*p].is_zero() {
                let f = v[*p].clone();
                for j in 0..cols {
                    let t = &f * &b[j];
                    v[j] = &v[j] - t;
                }
            }
        }
        if let Some(p) = (0..cols).find(|&j| !v[j].is_zero()) {
            let inv = v[p].recip();
            for x in v.iter_mut() {
                *x = &*x * &inv;
            }
            for (_, b) in basis.iter_mut() {
                if !b[p].is_zero() {
                    let f = b[p].clone();
                    for j in 0..cols {
                        let t = &f * &v[j];
                        b[j] = &b[j] - t;
                    }
                }
            }
            basis.push((p, v));
            chosen.push(idx);
        }
    }
    chosen
}

pub fn is_integer(q: &Rat) -> bool {
    q.is_integer()
}

pub fn abs(q: &Rat) -> Rat {
    q.abs()
}

/// Gaussian rational `re + i·im`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QC {
    pub re: Rat,
    pub im: Rat,
}

impl QC {
    pub fn new(re: Rat, im: Rat) -> Self {
        QC { re, im }
    }
    pub fn real(re: Rat) -> Self {
        QC { re, im: Rat::zero() }
    }
    pub fn zero() -> Self {
        QC::real(Rat::zero())
    }
    pub fn one() -> Self {
        QC::real(Rat::one())
    }
    pub fn i() -> Self {
        QC::new(Rat::zero(), Rat::one())
    }
    pub fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }
    pub fn conj(&self) -> Self {
        QC::new(self.re.clone(), -self.im.clone())
    }
    pub fn scale(&self, q: &Rat) -> Self {
        QC::new(&self.re * q, &self.im * q)
    }
    pub fn div(&self, o: &QC) -> QC {
        let den = &o.re * &o.re + &o.im * &o.im;
        let num = self * &o.conj();
        QC::new(num.re / &den, num.im / den)
    }
    pub fn to_c64(&self) -> num_complex::Complex64 {
        num_complex::Complex64::new(to_f64(&self.re), to_f64(&self.im))
    }
}

impl Add for &QC {
    type Output = QC;
    fn add(self, o: &QC) -> QC {
        QC::new(&self.re + &o.re, &self.im + &o.im)
    }
}

impl Sub for &QC {
    type Output = QC;
    fn sub(self, o: &QC) -> QC {
        QC::new(&self.re - &o.re, &self.im - &o.im)
    }
}

impl Mul for &QC {
    type Output = QC;
    fn mul(self, o: &QC) -> QC {
        QC::new(
            &self.re * &o.re - &self.im * &o.im,
            &self.re * &o.im + &self.im * &o.re,
        )
    }
}

impl Neg for &QC {
    type Output = QC;
    fn neg(self) -> QC {
        QC::new(-self.re.clone(), -self.im.clone())
    }
}
