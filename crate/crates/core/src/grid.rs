//! Discrete 1D Dirichlet interval: grid functions, the (-1,2,-1)/h^2 Laplacian,
//! Poisson solves, and the inner products / norms everything else is built on.
//!
//! Interior nodes are x_i = (i+1)h for i = 0..n with h = L/(n+1); boundary
//! values are implicitly zero.

use crate::error::{Error, Result};

/// Relative threshold below which a nodal value counts as exactly zero
/// in weighted-norm zero-set bookkeeping.
pub const ZERO_SET_REL_TOL: f64 = 1e-13;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridSpec {
    length: f64,
    n: usize,
    h: f64,
}

impl GridSpec {
    pub fn new(length: f64, n: usize) -> Result<Self> {
        if !(length > 0.0) || !length.is_finite() {
            return Err(Error::InvalidGrid(format!("length must be positive, got {length}")));
        }
        if n < 3 {
            return Err(Error::InvalidGrid(format!("need at least 3 interior nodes, got {n}")));
        }
        let h = length / (n as f64 + 1.0);
        Ok(GridSpec { length, n, h })
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    /// Number of interior nodes.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    /// Coordinate of interior node `i` (0-based), i.e. (i+1)h.
    pub fn node(&self, i: usize) -> f64 {
        (i as f64 + 1.0) * self.h
    }

    /// Interior node coordinates in order.
    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n).map(|i| self.node(i))
    }
}

fn check_values(grid: &GridSpec, values: &[f64]) -> Result<()> {
    if values.len() != grid.n() {
        return Err(Error::ShapeMismatch(format!(
            "expected {} nodal values, got {}",
            grid.n(),
            values.len()
        )));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("non-finite nodal value".into()));
    }
    Ok(())
}

/// Interior nodal values of a grid function; boundary values are zero.
#[derive(Clone, Debug)]
pub struct Field {
    grid: GridSpec,
    values: Vec<f64>,
}

/// Nodal representative of a functional via the pairing <d, f> = h * sum d_i f_i.
#[derive(Clone, Debug)]
pub struct DualField {
    grid: GridSpec,
    values: Vec<f64>,
}

macro_rules! nodal_impl {
    ($ty:ident) => {
        impl $ty {
            pub fn new(grid: GridSpec, values: Vec<f64>) -> Result<Self> {
                check_values(&grid, &values)?;
                Ok(Self { grid, values })
            }

            pub fn zeros(grid: GridSpec) -> Self {
                Self { grid, values: vec![0.0; grid.n()] }
            }

            pub fn from_fn(grid: GridSpec, f: impl Fn(f64) -> f64) -> Self {
                let values = grid.nodes().map(f).collect();
                Self { grid, values }
            }

            pub fn grid(&self) -> &GridSpec {
                &self.grid
            }

            pub fn values(&self) -> &[f64] {
                &self.values
            }

            pub fn values_mut(&mut self) -> &mut [f64] {
                &mut self.values
            }

            pub fn into_values(self) -> Vec<f64> {
                self.values
            }

            pub fn scaled(&self, c: f64) -> Self {
                Self {
                    grid: self.grid,
                    values: self.values.iter().map(|v| c * v).collect(),
                }
            }

            /// self + c * other
            pub fn add_scaled(&self, c: f64, other: &Self) -> Self {
                assert_eq!(self.grid, other.grid, "grid mismatch");
                Self {
                    grid: self.grid,
                    values: self
                        .values
                        .iter()
                        .zip(&other.values)
                        .map(|(a, b)| a + c * b)
                        .collect(),
                }
            }

            pub fn minus(&self, other: &Self) -> Self {
                self.add_scaled(-1.0, other)
            }

            pub fn max_abs(&self) -> f64 {
                self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
            }
        }
    };
}

nodal_impl!(Field);
nodal_impl!(DualField);

impl Field {
    /// Discrete negative Laplacian: d_i = (-f_{i-1} + 2 f_i - f_{i+1}) / h^2
    /// with zero boundary values.
    pub fn neg_laplacian(&self) -> DualField {
        let n = self.grid.n();
        let h2 = self.grid.h() * self.grid.h();
        let f = &self.values;
        let mut d = vec![0.0; n];
        for i in 0..n {
            let left = if i > 0 { f[i - 1] } else { 0.0 };
            let right = if i + 1 < n { f[i + 1] } else { 0.0 };
            d[i] = (-left + 2.0 * f[i] - right) / h2;
        }
        DualField { grid: self.grid, values: d }
    }

    /// H^1_0 inner product via first differences including both boundary edges.
    pub fn h10_inner(&self, other: &Field) -> f64 {
        assert_eq!(self.grid, other.grid, "grid mismatch");
        let n = self.grid.n();
        let h = self.grid.h();
        let a = &self.values;
        let b = &other.values;
        let mut acc = 0.0;
        for i in 0..=n {
            let da = if i == 0 {
                a[0]
            } else if i == n {
                -a[n - 1]
            } else {
                a[i] - a[i - 1]
            };
            let db = if i == 0 {
                b[0]
            } else if i == n {
                -b[n - 1]
            } else {
                b[i] - b[i - 1]
            };
            acc += da * db;
        }
        acc / h
    }

    pub fn h10_norm(&self) -> f64 {
        self.h10_inner(self).sqrt()
    }

    /// Discrete L^p norm (h * sum |f_i|^p)^(1/p); requires p >= 1.
    pub fn lp_norm(&self, p: f64) -> Result<f64> {
        if !(p >= 1.0) {
            return Err(Error::InvalidArgument(format!("lp_norm requires p >= 1, got {p}")));
        }
        let h = self.grid.h();
        let s: f64 = self.values.iter().map(|v| v.abs().powf(p)).sum();
        Ok((h * s).powf(1.0 / p))
    }

    pub fn l2_norm(&self) -> f64 {
        let h = self.grid.h();
        (h * self.values.iter().map(|v| v * v).sum::<f64>()).sqrt()
    }
}

impl DualField {
    /// Duality pairing <d, f> = h * sum d_i f_i.
    pub fn pairing(&self, f: &Field) -> f64 {
        assert_eq!(self.grid, *f.grid(), "grid mismatch");
        let h = self.grid.h();
        h * self
            .values
            .iter()
            .zip(f.values())
            .map(|(d, v)| d * v)
            .sum::<f64>()
    }

    /// Solves -Delta f = d (tridiagonal, O(n)).
    pub fn solve_poisson(&self) -> Field {
        let n = self.grid.n();
        let h2 = self.grid.h() * self.grid.h();
        let diag = vec![2.0 / h2; n];
        let off = vec![-1.0 / h2; n - 1];
        let x = solve_symmetric_tridiag(&diag, &off, &self.values);
        Field { grid: self.grid, values: x }
    }

    /// H^{-1} inner product: (a, b)_{H^{-1}} = <a, (-Delta)^{-1} b>.
    pub fn hm1_inner(&self, other: &DualField) -> f64 {
        self.pairing(&other.solve_poisson())
    }

    pub fn hm1_norm(&self) -> f64 {
        self.hm1_inner(self).sqrt()
    }

    /// Reinterpret the nodal values as a grid function.
    pub fn as_field(&self) -> Field {
        Field { grid: self.grid, values: self.values.clone() }
    }
}

impl From<Field> for DualField {
    fn from(f: Field) -> DualField {
        DualField { grid: f.grid, values: f.values }
    }
}

/// Weighted L^2 inner product h * sum a_i b_i |w_i|^p over nodes where the
/// weight is nonzero. For negative exponents, a node with vanishing weight
/// contributes 0 when both integrand factors vanish there and is an error
/// otherwise (the associate-space membership fails).
pub fn l2w_inner(a: &[f64], b: &[f64], weight: &Field, exponent: f64) -> Result<f64> {
    let n = weight.grid().n();
    if a.len() != n || b.len() != n {
        return Err(Error::ShapeMismatch(format!(
            "l2w_inner: expected {} values, got {} and {}",
            n,
            a.len(),
            b.len()
        )));
    }
    let h = weight.grid().h();
    let w_tol = ZERO_SET_REL_TOL * weight.max_abs();
    let a_tol = ZERO_SET_REL_TOL * a.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let b_tol = ZERO_SET_REL_TOL * b.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let mut acc = 0.0;
    for i in 0..n {
        let w = weight.values()[i].abs();
        if w <= w_tol {
            if exponent < 0.0 && (a[i].abs() > a_tol || b[i].abs() > b_tol) {
                return Err(Error::DegenerateWeight(format!(
                    "node {i}: weight {w:.3e} vanishes but integrand does not"
                )));
            }
            continue;
        }
        acc += a[i] * b[i] * w.powf(exponent);
    }
    Ok(h * acc)
}

/// Thomas algorithm for a symmetric tridiagonal system.
pub(crate) fn solve_symmetric_tridiag(diag: &[f64], off: &[f64], rhs: &[f64]) -> Vec<f64> {
    solve_tridiag(off, diag, off, rhs)
}

/// Thomas algorithm; no pivoting, intended for diagonally dominant / SPD systems.
pub(crate) fn solve_tridiag(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &[f64]) -> Vec<f64> {
    let n = diag.len();
    assert!(n >= 1 && lower.len() == n - 1 && upper.len() == n - 1 && rhs.len() == n);
    let mut c = vec![0.0; n - 1];
    let mut d = vec![0.0; n];
    let mut x = vec![0.0; n];
    if n == 1 {
        return vec![rhs[0] / diag[0]];
    }
    c[0] = upper[0] / diag[0];
    d[0] = rhs[0] / diag[0];
    for i in 1..n {
        let m = diag[i] - lower[i - 1] * c[i - 1];
        if i < n - 1 {
            c[i] = upper[i] / m;
        }
        d[i] = (rhs[i] - lower[i - 1] * d[i - 1]) / m;
    }
    x[n - 1] = d[n - 1];
    for i in (0..n - 1).rev() {
        x[i] = d[i] - c[i] * x[i + 1];
    }
    x
}

/// Tridiagonal solve with partial pivoting; handles symmetric indefinite
/// systems (e.g. the linearized stationary operator) that plain Thomas cannot.
pub(crate) fn solve_tridiag_pivot(
    lower: &[f64],
    diag: &[f64],
    upper: &[f64],
    rhs: &[f64],
) -> Vec<f64> {
    let n = diag.len();
    assert!(n >= 2 && lower.len() == n - 1 && upper.len() == n - 1 && rhs.len() == n);
    // band storage: a = subdiag, b = diag, c = superdiag, d = second superdiag
    let mut a = lower.to_vec();
    let mut b = diag.to_vec();
    let mut c = upper.to_vec();
    let mut d = vec![0.0; n.saturating_sub(2)];
    let mut x = rhs.to_vec();
    for k in 0..n - 1 {
        if a[k].abs() > b[k].abs() {
            // swap rows k and k+1
            x.swap(k, k + 1);
            std::mem::swap(&mut b[k], &mut a[k]);
            let ck = c[k];
            c[k] = b[k + 1];
            b[k + 1] = ck;
            if k + 2 < n {
                d[k] = c[k + 1];
                c[k + 1] = 0.0;
            }
        }
        let m = a[k] / b[k];
        b[k + 1] -= m * c[k];
        if k + 2 < n {
            c[k + 1] -= m * d[k];
        }
        x[k + 1] -= m * x[k];
    }
    // back substitution
    x[n - 1] /= b[n - 1];
    if n >= 2 {
        x[n - 2] = (x[n - 2] - c[n - 2] * x[n - 1]) / b[n - 2];
    }
    for i in (0..n.saturating_sub(2)).rev() {
        x[i] = (x[i] - c[i] * x[i + 1] - d[i] * x[i + 2]) / b[i];
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn grid_pi(n: usize) -> GridSpec {
        GridSpec::new(PI, n).unwrap()
    }

    #[test]
    fn build_grid_examples() {
        let g = GridSpec::new(PI, 3).unwrap();
        assert!((g.h() - PI / 4.0).abs() < 1e-15);
        let g = GridSpec::new(1.0, 99).unwrap();
        assert!((g.h() - 0.01).abs() < 1e-15);
        assert!(GridSpec::new(PI, 2).is_err());
        assert!(GridSpec::new(-1.0, 10).is_err());
        assert!(GridSpec::new(0.0, 10).is_err());
    }

    #[test]
    fn neg_laplacian_eigenrelation() {
        // sin(j pi x / L) is an eigenvector of the (-1,2,-1)/h^2 matrix with
        // eigenvalue (4/h^2) sin^2(j pi h / (2L)).
        let g = grid_pi(50);
        for j in 1..=4 {
            let f = Field::from_fn(g, |x| (j as f64 * x).sin());
            let d = f.neg_laplacian();
            let lam = 4.0 / (g.h() * g.h()) * (j as f64 * g.h() / 2.0).sin().powi(2);
            for i in 0..g.n() {
                assert!(
                    (d.values()[i] - lam * f.values()[i]).abs() <= 1e-10 * lam,
                    "j={j} i={i}"
                );
            }
        }
    }

    #[test]
    fn neg_laplacian_zero_and_hat() {
        let g = grid_pi(10);
        let z = Field::zeros(g);
        assert_eq!(z.neg_laplacian().max_abs(), 0.0);

        let mut hat = Field::zeros(g);
        hat.values_mut()[4] = 1.0;
        let d = hat.neg_laplacian();
        let h2 = g.h() * g.h();
        assert_eq!(d.values()[3], -1.0 / h2);
        assert_eq!(d.values()[4], 2.0 / h2);
        assert_eq!(d.values()[5], -1.0 / h2);
        assert_eq!(d.values()[2], 0.0);
    }

    #[test]
    fn poisson_round_trip_and_eigenvector() {
        let g = grid_pi(80);
        let f = Field::from_fn(g, |x| x * (PI - x) * (1.0 + 0.3 * (3.0 * x).cos()));
        let d = f.neg_laplacian();
        let back = d.solve_poisson();
        let err = back.minus(&f).max_abs();
        assert!(err <= 1e-12 * f.max_abs(), "round trip error {err}");

        let e = Field::from_fn(g, |x| (2.0 * x).sin());
        let lam = 4.0 / (g.h() * g.h()) * (g.h()).sin().powi(2);
        let sol = DualField::from(e.clone()).solve_poisson();
        let err = sol.minus(&e.scaled(1.0 / lam)).max_abs();
        assert!(err <= 1e-12, "eigenvector solve error {err}");

        let z = DualField::zeros(g);
        assert_eq!(z.solve_poisson().max_abs(), 0.0);
    }

    #[test]
    fn h10_norm_of_sine() {
        // ||sin||^2_{H10} on (0,pi) -> integral of cos^2 = pi/2, O(h^2).
        let g = grid_pi(200);
        let f = Field::from_fn(g, |x| x.sin());
        let val = f.h10_inner(&f);
        assert!((val - PI / 2.0).abs() < 5e-4, "got {val}");
    }

    #[test]
    fn hm1_norm_of_sine() {
        // sin is a Laplacian eigenfunction with eigenvalue 1 on (0,pi).
        let g = grid_pi(200);
        let d = DualField::from_fn(g, |x| x.sin());
        let val = d.hm1_inner(&d);
        assert!((val - PI / 2.0).abs() < 5e-4, "got {val}");
    }

    #[test]
    fn l2w_constant_weight() {
        let g = GridSpec::new(1.0, 99).unwrap();
        let one = Field::from_fn(g, |_| 1.0);
        let val = l2w_inner(one.values(), one.values(), &one, 0.0).unwrap();
        assert!((val - (1.0 - g.h())).abs() < 1e-12);
    }

    #[test]
    fn l2w_negative_exponent_zero_set() {
        let g = grid_pi(10);
        let mut w = Field::from_fn(g, |_| 1.0);
        w.values_mut()[3] = 0.0;
        // both factors vanish on the zero set: fine, node contributes 0
        let mut f = Field::from_fn(g, |_| 2.0);
        f.values_mut()[3] = 0.0;
        assert!(l2w_inner(f.values(), f.values(), &w, -0.5).is_ok());
        // integrand alive on the zero set: error
        let bad = Field::from_fn(g, |_| 2.0);
        assert!(matches!(
            l2w_inner(bad.values(), bad.values(), &w, -0.5),
            Err(Error::DegenerateWeight(_))
        ));
    }

    #[test]
    fn lp_norm_examples() {
        let g = GridSpec::new(1.0, 199).unwrap();
        let one = Field::from_fn(g, |_| 1.0);
        assert!((one.lp_norm(2.0).unwrap() - 1.0).abs() < 2.0 * g.h());
        assert_eq!(Field::zeros(g).lp_norm(3.0).unwrap(), 0.0);
        assert!(one.lp_norm(0.5).is_err());

        let g = grid_pi(400);
        let f = Field::from_fn(g, |x| x.sin());
        assert!((f.lp_norm(2.0).unwrap() - (PI / 2.0_f64).sqrt()).abs() < 1e-4);
    }

    #[test]
    fn pivoting_tridiag_matches_thomas_on_spd() {
        let n = 30;
        let diag = vec![2.5; n];
        let off = vec![-1.0; n - 1];
        let rhs: Vec<f64> = (0..n).map(|i| (i as f64 * 0.7).sin()).collect();
        let x1 = solve_symmetric_tridiag(&diag, &off, &rhs);
        let x2 = solve_tridiag_pivot(&off, &diag, &off, &rhs);
        for i in 0..n {
            assert!((x1[i] - x2[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn pivoting_tridiag_indefinite() {
        // indefinite symmetric tridiagonal with a tiny leading pivot
        let n = 5;
        let diag = vec![1e-14, -1.0, 2.0, -3.0, 1.0];
        let off = vec![1.0, 0.5, -0.7, 0.3];
        let x = solve_tridiag_pivot(&off, &diag, &off, &[1.0, 0.0, 2.0, -1.0, 0.5]);
        // verify by multiplying back
        let mut r = vec![0.0; n];
        for i in 0..n {
            r[i] = diag[i] * x[i];
            if i > 0 {
                r[i] += off[i - 1] * x[i - 1];
            }
            if i + 1 < n {
                r[i] += off[i] * x[i + 1];
            }
        }
        let expect = [1.0, 0.0, 2.0, -1.0, 0.5];
        for i in 0..n {
            assert!((r[i] - expect[i]).abs() < 1e-9, "i={i} r={}", r[i]);
        }
    }

    proptest! {
        #[test]
        fn riesz_identity(vals in proptest::collection::vec(-10.0..10.0f64, 20)) {
            let g = grid_pi(20);
            let f = Field::new(g, vals).unwrap();
            let lhs = f.neg_laplacian().pairing(&f);
            let rhs = f.h10_inner(&f);
            prop_assert!((lhs - rhs).abs() <= 1e-10 * (1.0 + rhs.abs()));
        }

        #[test]
        fn duality_identity(vals in proptest::collection::vec(-10.0..10.0f64, 20)) {
            let g = grid_pi(20);
            let d = DualField::new(g, vals).unwrap();
            let f = d.solve_poisson();
            let lhs = d.hm1_inner(&d);
            let rhs = f.h10_inner(&f);
            prop_assert!((lhs - rhs).abs() <= 1e-9 * (1.0 + rhs.abs()));
        }

        #[test]
        fn discrete_poincare(vals in proptest::collection::vec(-10.0..10.0f64, 50)) {
            let g = grid_pi(50);
            let f = Field::new(g, vals).unwrap();
            let l2 = f.l2_norm();
            let h10 = f.h10_norm();
            prop_assert!(l2 <= (g.length() / PI) * h10 * 1.01);
        }
    }
}
