//! Energy J, entropy K, the coercivity functional G, the gradient J',
//! Taylor residual, and the weighted / eps-regularized dual norms.

use crate::error::{Error, Result};
use crate::grid::{l2w_inner, solve_symmetric_tridiag, DualField, Field, GridSpec};

/// Exponent bundle for the rescaled fast-diffusion problem: q > 2 and
/// lambda_q = (q-1)/(q-2).
#[derive(Clone, Copy, Debug)]
pub struct Functionals {
    grid: GridSpec,
    q: f64,
    lambda_q: f64,
}

/// Nodal signed power |v|^(p-1) v, the map between v and m = |v|^(q-2) v.
pub fn signed_power(v: f64, p: f64) -> f64 {
    v.abs().powf(p - 1.0) * v
}

impl Functionals {
    pub fn new(grid: GridSpec, q: f64) -> Result<Self> {
        if !(q > 2.0) || !q.is_finite() {
            return Err(Error::InvalidArgument(format!("q must exceed 2, got {q}")));
        }
        Ok(Functionals { grid, q, lambda_q: (q - 1.0) / (q - 2.0) })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn lambda_q(&self) -> f64 {
        self.lambda_q
    }

    /// Holder conjugate q' = q/(q-1).
    pub fn q_conj(&self) -> f64 {
        self.q / (self.q - 1.0)
    }

    /// rho = min{q-2, 1}, the Taylor-remainder exponent increment.
    pub fn rho(&self) -> f64 {
        (self.q - 2.0).min(1.0)
    }

    /// Nodal |w|^(q-2) w.
    pub fn m_of(&self, w: &Field) -> Field {
        let mut out = w.clone();
        for v in out.values_mut() {
            *v = signed_power(*v, self.q - 1.0);
        }
        out
    }

    /// J(w) = 1/2 ||w||^2_{H10} - (lambda_q / q) ||w||_q^q.
    pub fn energy_j(&self, w: &Field) -> f64 {
        let lq = w.lp_norm(self.q).expect("q > 2");
        0.5 * w.h10_inner(w) - self.lambda_q / self.q * lq.powf(self.q)
    }

    /// J'(w) = -Delta w - lambda_q |w|^(q-2) w.
    pub fn grad_j(&self, w: &Field) -> DualField {
        let lap = w.neg_laplacian();
        let m = self.m_of(w);
        DualField::from(lap.as_field().add_scaled(-self.lambda_q, &m))
    }

    /// K(w) = (1/q') ||w||_q^q - (lambda_q / 2) ||m||^2_{H^{-1}}, m = |w|^(q-2) w.
    pub fn entropy_k(&self, w: &Field) -> f64 {
        let lq = w.lp_norm(self.q).expect("q > 2");
        let m = DualField::from(self.m_of(w));
        lq.powf(self.q) / self.q_conj() - 0.5 * self.lambda_q * m.hm1_inner(&m)
    }

    /// G(w) = J(w) - lambda_q K(w); algebraically 1/2 ||J'(w)||^2_{H^{-1}}.
    pub fn coercive_g(&self, w: &Field) -> f64 {
        self.energy_j(w) - self.lambda_q * self.entropy_k(w)
    }

    /// Nodal Taylor residual |w|^(q-2)w - |phi|^(q-2)phi - (q-1)|phi|^(q-2)(w - phi).
    pub fn residual_r(&self, w: &Field, phi: &Field) -> Field {
        let mut out = w.clone();
        for (i, v) in out.values_mut().iter_mut().enumerate() {
            let wi = w.values()[i];
            let pi = phi.values()[i];
            *v = signed_power(wi, self.q - 1.0)
                - signed_power(pi, self.q - 1.0)
                - (self.q - 1.0) * pi.abs().powf(self.q - 2.0) * (wi - pi);
        }
        out
    }

    /// Action of the linearization around phi:
    /// L_phi xi = -Delta xi - lambda_q (q-1) |phi|^(q-2) xi.
    pub fn linearized_apply(&self, phi: &Field, xi: &Field) -> DualField {
        let lap = xi.neg_laplacian();
        let coeff = self.lambda_q * (self.q - 1.0);
        let mut out = lap.as_field();
        for (i, v) in out.values_mut().iter_mut().enumerate() {
            *v -= coeff * phi.values()[i].abs().powf(self.q - 2.0) * xi.values()[i];
        }
        DualField::from(out)
    }

    /// Associate-space norm: sqrt of h * sum f_i^2 |v_i|^(2-q) over nonzero-weight
    /// nodes; errors if f survives on the zero set of v.
    pub fn hs_prime_norm(&self, f: &DualField, v: &Field) -> Result<f64> {
        Ok(l2w_inner(f.values(), f.values(), v, 2.0 - self.q)?.sqrt())
    }

    /// Dynamic weighted L^2 inner product (a, b) with weight |v|^(q-2).
    pub fn hs_inner(&self, a: &Field, b: &Field, v: &Field) -> f64 {
        l2w_inner(a.values(), b.values(), v, self.q - 2.0).expect("positive exponent cannot fail")
    }

    /// Regularized dual norm sqrt <f, (-eps Delta + |v|^(q-2))^{-1} f>,
    /// one SPD tridiagonal solve.
    pub fn eps_reg_norm(&self, f: &DualField, v: &Field, eps: f64) -> Result<f64> {
        if !(eps > 0.0) {
            return Err(Error::InvalidArgument(format!("eps must be positive, got {eps}")));
        }
        let n = self.grid.n();
        let h = self.grid.h();
        let h2 = h * h;
        let mut diag = vec![0.0; n];
        for i in 0..n {
            diag[i] = eps * 2.0 / h2 + v.values()[i].abs().powf(self.q - 2.0);
        }
        let off = vec![-eps / h2; n - 1];
        let x = solve_symmetric_tridiag(&diag, &off, f.values());
        let val = h * f.values().iter().zip(&x).map(|(a, b)| a * b).sum::<f64>();
        Ok(val.max(0.0).sqrt())
    }

    /// Relative entropy h * sum (v_i - phi_i)^2 |phi_i|^(q-2).
    pub fn relative_entropy(&self, v: &Field, phi: &Field) -> f64 {
        let d = v.minus(phi);
        l2w_inner(d.values(), d.values(), phi, self.q - 2.0)
            .expect("positive exponent cannot fail")
    }
}
