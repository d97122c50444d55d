//! Single-input single-output state-space systems and their transfer functions.

use std::f64::consts::PI;
use std::ops::{Add, Div, Mul, Sub};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Largest eigenvalue real part tolerated for a stable filter.
pub const HURWITZ_MARGIN: f64 = -1e-9;
/// Distance from an eigenvalue at which `sI - A` is treated as singular.
pub const SINGULARITY_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LtiError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("non-finite matrix entry")]
    NonFinite,
    #[error("sI - A is singular at s = {0}")]
    Singular(Complex),
    #[error("A is not Hurwitz (max eigenvalue real part {max_re})")]
    Unstable { max_re: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Complex {
    pub re: f64,
    pub im: f64,
}

impl Complex {
    pub const ZERO: Complex = Complex { re: 0.0, im: 0.0 };

    pub fn new(re: f64, im: f64) -> Self {
        Self { re, im }
    }

    /// Purely imaginary point `i·omega`.
    pub fn imag(omega: f64) -> Self {
        Self { re: 0.0, im: omega }
    }

    pub fn norm(self) -> f64 {
        self.re.hypot(self.im)
    }

    /// Argument in (-π, π].
    pub fn arg(self) -> f64 {
        let a = self.im.atan2(self.re);
        if a <= -PI {
            a + 2.0 * PI
        } else {
            a
        }
    }
}

impl Add for Complex {
    type Output = Complex;
    fn add(self, rhs: Complex) -> Complex {
        Complex::new(self.re + rhs.re, self.im + rhs.im)
    }
}

impl Sub for Complex {
    type Output = Complex;
    fn sub(self, rhs: Complex) -> Complex {
        Complex::new(self.re - rhs.re, self.im - rhs.im)
    }
}

impl Div for Complex {
    type Output = Complex;
    fn div(self, rhs: Complex) -> Complex {
        let d = rhs.re * rhs.re + rhs.im * rhs.im;
        Complex {
            re: (self.re * rhs.re + self.im * rhs.im) / d,
            im: (self.im * rhs.re - self.re * rhs.im) / d,
        }
    }
}

impl Mul for Complex {
    type Output = Complex;
    fn mul(self, rhs: Complex) -> Complex {
        Complex::new(
            self.re * rhs.re - self.im * rhs.im,
            self.re * rhs.im + self.im * rhs.re,
        )
    }
}

impl std::fmt::Display for Complex {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}{:+}i", self.re, self.im)
    }
}

/// `ẋ = Ax + Bu`, `y = Cx + Du` with scalar u and y.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LtiSystem {
    n: usize,
    /// Row-major n×n.
    a: Vec<f64>,
    b: Vec<f64>,
    c: Vec<f64>,
    d: f64,
}

impl LtiSystem {
    pub fn new(a: Vec<Vec<f64>>, b: Vec<f64>, c: Vec<f64>, d: f64) -> Result<Self, LtiError> {
        let n = a.len();
        if n == 0 {
            return Err(LtiError::Dimension("A must be at least 1×1".into()));
        }
        if let Some(row) = a.iter().find(|row| row.len() != n) {
            return Err(LtiError::Dimension(format!(
                "A is not square: row of length {} in {n}×{n}",
                row.len()
            )));
        }
        if b.len() != n || c.len() != n {
            return Err(LtiError::Dimension(format!(
                "B has {} rows and C has {} columns, expected {n}",
                b.len(),
                c.len()
            )));
        }
        let a: Vec<f64> = a.into_iter().flatten().collect();
        if a.iter()
            .chain(&b)
            .chain(&c)
            .chain([&d])
            .any(|v| !v.is_finite())
        {
            return Err(LtiError::NonFinite);
        }
        Ok(Self { n, a, b, c, d })
    }

    /// `ẋ = -x - u`, `y = x + u`: transfer function s/(s+1), zero at the origin.
    pub fn washout() -> Self {
        Self {
            n: 1,
            a: vec![-1.0],
            b: vec![-1.0],
            c: vec![1.0],
            d: 1.0,
        }
    }

    pub fn order(&self) -> usize {
        self.n
    }

    pub fn a(&self, i: usize, j: usize) -> f64 {
        self.a[i * self.n + j]
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    pub fn c(&self) -> &[f64] {
        &self.c
    }

    pub fn d(&self) -> f64 {
        self.d
    }

    pub fn eigenvalues(&self) -> Vec<Complex> {
        DMatrix::from_row_slice(self.n, self.n, &self.a)
            .complex_eigenvalues()
            .iter()
            .map(|z| Complex::new(z.re, z.im))
            .collect()
    }

    pub fn max_real_eigenvalue(&self) -> f64 {
        self.eigenvalues()
            .iter()
            .map(|z| z.re)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn is_hurwitz(&self) -> bool {
        self.max_real_eigenvalue() < HURWITZ_MARGIN
    }

    pub fn ensure_hurwitz(&self) -> Result<(), LtiError> {
        let max_re = self.max_real_eigenvalue();
        if max_re < HURWITZ_MARGIN {
            Ok(())
        } else {
            Err(LtiError::Unstable { max_re })
        }
    }

    /// W(s) = C(sI - A)⁻¹B + D.
    pub fn transfer_eval(&self, s: Complex) -> Result<Complex, LtiError> {
        if self
            .eigenvalues()
            .iter()
            .any(|&l| (l - s).norm() <= SINGULARITY_TOL)
        {
            return Err(LtiError::Singular(s));
        }
        let n = self.n;
        // (sI - A)(vr + i·vi) = B as a real system of size 2n:
        // [ σI-A   -ωI  ] [vr]   [B]
        // [  ωI   σI-A  ] [vi] = [0]
        let m = 2 * n;
        let mut sys = vec![0.0; m * (m + 1)];
        let at = |r: usize, col: usize| r * (m + 1) + col;
        for i in 0..n {
            for j in 0..n {
                let diag = if i == j { s.re } else { 0.0 };
                let v = diag - self.a(i, j);
                sys[at(i, j)] = v;
                sys[at(i + n, j + n)] = v;
            }
            sys[at(i, i + n)] = -s.im;
            sys[at(i + n, i)] = s.im;
            sys[at(i, m)] = self.b[i];
        }
        let v = solve_augmented(&mut sys, m).ok_or(LtiError::Singular(s))?;
        let mut w = Complex::new(self.d, 0.0);
        for (k, ck) in self.c.iter().enumerate() {
            w.re += ck * v[k];
            w.im += ck * v[k + n];
        }
        Ok(w)
    }

    pub fn has_zero_at_origin(&self, tol: f64) -> Result<bool, LtiError> {
        Ok(self.transfer_eval(Complex::ZERO)?.norm() <= tol)
    }

    /// Amplitude |W(iω)| and phase arg W(iω) of the asymptotic response to sin(ωt).
    pub fn sinusoid_steady_state(&self, omega: f64) -> Result<(f64, f64), LtiError> {
        self.ensure_hurwitz()?;
        let w = self.transfer_eval(Complex::imag(omega))?;
        Ok((w.norm(), w.arg()))
    }

    /// Returns `(Ax + Bu, Cx + Du)`.
    pub fn rhs(&self, x: &[f64], u: f64) -> Result<(Vec<f64>, f64), LtiError> {
        if x.len() != self.n {
            return Err(LtiError::Dimension(format!(
                "state has length {}, expected {}",
                x.len(),
                self.n
            )));
        }
        let mut dx = vec![0.0; self.n];
        let y = self.rhs_into(x, u, &mut dx);
        Ok((dx, y))
    }

    /// Unchecked form of [`rhs`](Self::rhs) for the integrator's inner loop.
    #[inline]
    pub(crate) fn rhs_into(&self, x: &[f64], u: f64, dx: &mut [f64]) -> f64 {
        let n = self.n;
        for i in 0..n {
            let row = &self.a[i * n..(i + 1) * n];
            let mut acc = 0.0;
            for j in 0..n {
                acc += row[j] * x[j];
            }
            dx[i] = acc + self.b[i] * u;
        }
        let mut y = 0.0;
        for j in 0..n {
            y += self.c[j] * x[j];
        }
        y + self.d * u
    }
}

/// Gaussian elimination with partial pivoting on an m×(m+1) augmented matrix.
fn solve_augmented(aug: &mut [f64], m: usize) -> Option<Vec<f64>> {
    let w = m + 1;
    let scale = aug.iter().fold(0.0f64, |acc, v| acc.max(v.abs())).max(1.0);
    for col in 0..m {
        let pivot = (col..m)
            .max_by(|&r1, &r2| aug[r1 * w + col].abs().total_cmp(&aug[r2 * w + col].abs()))?;
        if aug[pivot * w + col].abs() <= f64::EPSILON * scale {
            return None;
        }
        if pivot != col {
            for k in 0..w {
                aug.swap(col * w + k, pivot * w + k);
            }
        }
        let p = aug[col * w + col];
        for r in col + 1..m {
            let f = aug[r * w + col] / p;
            if f != 0.0 {
                for k in col..w {
                    aug[r * w + k] -= f * aug[col * w + k];
                }
            }
        }
    }
    let mut x = vec![0.0; m];
    for r in (0..m).rev() {
        let mut acc = aug[r * w + m];
        for k in r + 1..m {
            acc -= aug[r * w + k] * x[k];
        }
        x[r] = acc / aug[r * w + r];
    }
    Some(x)
}
