//! Weighted generalized eigenproblem -Delta e = mu |omega|^(q-2) e on the
//! grid, shifted eigenvalues nu_j = mu_j - lambda_q (q-1) of the linearized
//! operator, spectral projections, the max-min variational oracle, and the
//! operator norm of the inverse linearization.

use crate::error::{Error, Result};
use crate::grid::{l2w_inner, DualField, Field, GridSpec, ZERO_SET_REL_TOL};
use crate::functionals::Functionals;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

#[derive(Clone, Debug)]
pub struct EigenPair {
    /// Eigenvalue of the weighted problem.
    pub mu: f64,
    /// Shifted eigenvalue mu - lambda_q (q-1) of the linearized operator.
    pub nu: f64,
    /// H^1_0-normalized eigenfunction, extended by zero off the active nodes.
    pub e: Field,
}

/// The lowest eigenpairs of -Delta e = mu |omega|^(q-2) e, mu ascending,
/// H^1_0-orthonormal.
#[derive(Clone, Debug)]
pub struct Spectrum {
    weight: Field,
    q: f64,
    pairs: Vec<EigenPair>,
}

/// Active-node reduction of a weight: indices with |omega_i| above the
/// zero-set threshold.
fn active_nodes(omega: &Field) -> Vec<usize> {
    let tol = ZERO_SET_REL_TOL * omega.max_abs();
    (0..omega.grid().n())
        .filter(|&i| omega.values()[i].abs() > tol)
        .collect()
}

/// Dense stiffness matrix restricted to the given nodes. Coupling across an
/// excluded node is dropped (a Dirichlet condition there), matching the
/// extension-by-zero convention for eigenvectors.
fn restricted_stiffness(g: &GridSpec, active: &[usize]) -> DMatrix<f64> {
    let m = active.len();
    let h2 = g.h() * g.h();
    let mut a = DMatrix::zeros(m, m);
    for (r, &i) in active.iter().enumerate() {
        a[(r, r)] = 2.0 / h2;
        if r + 1 < m && active[r + 1] == i + 1 {
            a[(r, r + 1)] = -1.0 / h2;
            a[(r + 1, r)] = -1.0 / h2;
        }
    }
    a
}

struct ReducedPencil {
    active: Vec<usize>,
    /// Cholesky factor L of the restricted stiffness.
    chol_l: DMatrix<f64>,
    /// C = L^{-1} B L^{-T}; its eigenvalues are 1/mu.
    c: DMatrix<f64>,
}

fn assemble_pencil(g: &GridSpec, q: f64, omega: &Field) -> Result<ReducedPencil> {
    let active = active_nodes(omega);
    if active.is_empty() {
        return Err(Error::InvalidArgument("weight is identically zero".into()));
    }
    let m = active.len();
    let a = restricted_stiffness(g, &active);
    let chol = nalgebra::Cholesky::new(a)
        .ok_or_else(|| Error::EigenFailure("stiffness Cholesky failed".into()))?;
    let chol_l: DMatrix<f64> = chol.l();
    // X = L^{-1} B^{1/2}, C = X X^T
    let mut b_sqrt = DMatrix::zeros(m, m);
    for (r, &i) in active.iter().enumerate() {
        b_sqrt[(r, r)] = omega.values()[i].abs().powf((q - 2.0) / 2.0);
    }
    let x = chol_l
        .clone()
        .solve_lower_triangular(&b_sqrt)
        .ok_or_else(|| Error::EigenFailure("triangular solve failed".into()))?;
    let c = &x * x.transpose();
    Ok(ReducedPencil { active, chol_l, c })
}

/// All eigenvalues mu (ascending) of the reduced weighted pencil, plus the
/// count of excluded (zero-weight) nodes.
pub fn weighted_eigenvalues(g: &GridSpec, q: f64, omega: &Field) -> Result<(Vec<f64>, usize)> {
    let pencil = assemble_pencil(g, q, omega)?;
    let excluded = g.n() - pencil.active.len();
    let thetas = pencil.c.symmetric_eigenvalues();
    let mut mus: Vec<f64> = thetas
        .iter()
        .map(|&t| if t > 0.0 { 1.0 / t } else { f64::INFINITY })
        .collect();
    mus.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok((mus, excluded))
}

/// Lowest `count` eigenpairs of -Delta e = mu |omega|^(q-2) e restricted to
/// positive-weight nodes, H^1_0-normalized and extended by zero.
pub fn weighted_spectrum(g: &GridSpec, q: f64, omega: &Field, count: usize) -> Result<Spectrum> {
    let funcs = Functionals::new(*g, q)?;
    let pencil = assemble_pencil(g, q, omega)?;
    let m = pencil.active.len();
    if count > m {
        return Err(Error::InvalidArgument(format!(
            "requested {count} eigenpairs but only {m} positive-weight nodes"
        )));
    }
    let eig = nalgebra::SymmetricEigen::new(pencil.c.clone());
    // theta = 1/mu, so the largest thetas give the lowest mus
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&i, &j| {
        eig.eigenvalues[j]
            .partial_cmp(&eig.eigenvalues[i])
            .unwrap()
    });
    let shift = funcs.lambda_q() * (q - 1.0);
    let lt = pencil.chol_l.transpose();
    let h = g.h();
    let mut pairs = Vec::with_capacity(count);
    for &idx in order.iter().take(count) {
        let theta = eig.eigenvalues[idx];
        if theta <= 0.0 {
            return Err(Error::EigenFailure(format!(
                "nonpositive pencil eigenvalue {theta:e}"
            )));
        }
        let mu = 1.0 / theta;
        let z: DVector<f64> = eig.eigenvectors.column(idx).into();
        let e_red = lt
            .clone()
            .solve_upper_triangular(&z)
            .ok_or_else(|| Error::EigenFailure("back-substitution failed".into()))?;
        let mut values = vec![0.0; g.n()];
        for (r, &i) in pencil.active.iter().enumerate() {
            values[i] = e_red[r] / h.sqrt();
        }
        // deterministic sign: largest-magnitude component positive
        let (mut best, mut best_abs) = (0.0, 0.0);
        for &v in &values {
            if v.abs() > best_abs {
                best_abs = v.abs();
                best = v;
            }
        }
        if best < 0.0 {
            for v in &mut values {
                *v = -*v;
            }
        }
        let e = Field::new(*g, values)?;
        pairs.push(EigenPair { mu, nu: mu - shift, e });
    }
    Ok(Spectrum { weight: omega.clone(), q, pairs })
}

impl Spectrum {
    pub fn pairs(&self) -> &[EigenPair] {
        &self.pairs
    }

    pub fn weight(&self) -> &Field {
        &self.weight
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// 1-based eigenvalue accessors matching the usual numbering.
    pub fn mu(&self, j: usize) -> f64 {
        self.pairs[j - 1].mu
    }

    pub fn nu(&self, j: usize) -> f64 {
        self.pairs[j - 1].nu
    }

    pub fn eigenfunction(&self, j: usize) -> &Field {
        &self.pairs[j - 1].e
    }

    /// Sharp decay rate 2 nu_2 / (q-1) for a least-energy weight.
    pub fn lambda0(&self) -> f64 {
        2.0 * self.nu(2) / (self.q - 1.0)
    }

    /// Projects f onto the eigenspace spanned by the 1-based index range
    /// `cluster` (inclusive); errors if the range straddles distinct
    /// eigenvalues beyond the cluster tolerance.
    pub fn project(&self, cluster: std::ops::RangeInclusive<usize>, f: &Field) -> Result<Field> {
        let lo = *cluster.start();
        let hi = *cluster.end();
        if lo == 0 || hi > self.pairs.len() || lo > hi {
            return Err(Error::InvalidArgument(format!(
                "cluster {lo}..={hi} out of range (have {} pairs)",
                self.pairs.len()
            )));
        }
        let mu_lo = self.mu(lo);
        let mu_hi = self.mu(hi);
        if mu_hi - mu_lo > 1e-6 * mu_hi {
            return Err(Error::InvalidArgument(format!(
                "cluster straddles distinct eigenvalues: mu in [{mu_lo}, {mu_hi}]"
            )));
        }
        let mut out = Field::zeros(*f.grid());
        for j in lo..=hi {
            let c = f.h10_inner(&self.pairs[j - 1].e);
            out = out.add_scaled(c, &self.pairs[j - 1].e);
        }
        Ok(out)
    }

    /// Scalar coefficient (f, e_j)_{H10}, 1-based.
    pub fn coefficient(&self, j: usize, f: &Field) -> f64 {
        f.h10_inner(&self.pairs[j - 1].e)
    }

    /// Dual coefficient beta_j = <f, e_j> for the dual Parseval identity.
    pub fn dual_coefficient(&self, j: usize, f: &DualField) -> f64 {
        f.pairing(&self.pairs[j - 1].e)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("j,mu,nu\n");
        for (j, p) in self.pairs.iter().enumerate() {
            out.push_str(&format!("{},{:.17e},{:.17e}\n", j + 1, p.mu, p.nu));
        }
        out
    }
}

#[derive(Serialize, Clone, Debug)]
pub struct MaxMinReport {
    pub j: usize,
    /// |inf over the leading eigenspace - 1/mu_j|
    pub equality_error: f64,
    /// worst (most positive) excess of a random subspace inf over 1/mu_j
    pub worst_margin: f64,
    pub trials: usize,
    pub pass: bool,
}

/// Smallest generalized eigenvalue of P z = theta Q z for SPD Q.
fn smallest_pencil_eig(p: &DMatrix<f64>, q_mat: &DMatrix<f64>) -> Result<f64> {
    let chol = nalgebra::Cholesky::new(q_mat.clone())
        .ok_or_else(|| Error::EigenFailure("subspace Gram matrix not SPD".into()))?;
    let l: DMatrix<f64> = chol.l();
    let y = l
        .clone()
        .solve_lower_triangular(p)
        .ok_or_else(|| Error::EigenFailure("triangular solve failed".into()))?;
    let yt = l
        .solve_lower_triangular(&y.transpose())
        .ok_or_else(|| Error::EigenFailure("triangular solve failed".into()))?;
    // symmetrize roundoff
    let s = (yt.clone() + yt.transpose()) * 0.5;
    Ok(s
        .symmetric_eigenvalues()
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min))
}

/// Verifies the max-min characterization: over the leading eigenspace the
/// restricted inf of the weighted quadratic form equals 1/mu_j, and no random
/// j-dimensional subspace beats it.
pub fn maxmin_eigen_oracle(
    g: &GridSpec,
    q: f64,
    omega: &Field,
    j: usize,
    trials: usize,
    seed: u64,
) -> Result<MaxMinReport> {
    if j == 0 {
        return Err(Error::InvalidArgument("j must be at least 1".into()));
    }
    let spec = weighted_spectrum(g, q, omega, j)?;
    let target = 1.0 / spec.mu(j);

    let form = |a: &Field, b: &Field| -> Result<f64> {
        l2w_inner(a.values(), b.values(), omega, q - 2.0)
    };

    // (a) equality on Y = span{e_1, ..., e_j}
    let mut p = DMatrix::zeros(j, j);
    let mut qm = DMatrix::zeros(j, j);
    for r in 0..j {
        for c in 0..j {
            p[(r, c)] = form(&spec.pairs[r].e, &spec.pairs[c].e)?;
            qm[(r, c)] = spec.pairs[r].e.h10_inner(&spec.pairs[c].e);
        }
    }
    let inf_lead = smallest_pencil_eig(&p, &qm)?;
    let equality_error = (inf_lead - target).abs();

    // (b) random subspaces never beat 1/mu_j
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst_margin = f64::NEG_INFINITY;
    for _ in 0..trials {
        let basis: Vec<Field> = (0..j)
            .map(|_| {
                Field::new(*g, (0..g.n()).map(|_| rng.gen_range(-1.0..1.0)).collect())
                    .expect("finite values")
            })
            .collect();
        let mut p = DMatrix::zeros(j, j);
        let mut qm = DMatrix::zeros(j, j);
        for r in 0..j {
            for c in 0..j {
                p[(r, c)] = form(&basis[r], &basis[c])?;
                qm[(r, c)] = basis[r].h10_inner(&basis[c]);
            }
        }
        let inf_rand = smallest_pencil_eig(&p, &qm)?;
        worst_margin = worst_margin.max(inf_rand - target);
    }
    let pass = equality_error <= 1e-10 && worst_margin <= 1e-10;
    Ok(MaxMinReport { j, equality_error, worst_margin, trials, pass })
}

/// Operator norm of L_omega^{-1} from H^{-1} to H^1_0, where
/// L_omega = -Delta - lambda_q (q-1) |omega|^(q-2). In the stiffness inner
/// product the pencil eigenvalues are nu_j / mu_j, so the norm is
/// max_j mu_j / |nu_j| (directions off the active set contribute 1).
pub fn operator_norm_l_inverse(g: &GridSpec, q: f64, omega: &Field) -> Result<f64> {
    if active_nodes(omega).is_empty() {
        // the operator degenerates to -Delta, an isometry H^{-1} -> H^1_0
        return Ok(1.0);
    }
    let funcs = Functionals::new(*g, q)?;
    let shift = funcs.lambda_q() * (q - 1.0);
    let (mus, excluded) = weighted_eigenvalues(g, q, omega)?;
    let mu1 = mus[0];
    let _ = excluded;
    // min over |nu_j| / mu_j; the accumulator starts at the Laplacian
    // limit point 1 (reached as mu -> infinity, and exactly by directions
    // supported off the active set)
    let mut inv_norm = 1.0_f64;
    for &mu in &mus {
        if !mu.is_finite() {
            continue;
        }
        let nu = mu - shift;
        if nu.abs() <= 1e-10 * mu1 {
            return Err(Error::DegenerateOperator(format!(
                "|nu| = {:.3e} at mu = {mu:.6e}",
                nu.abs()
            )));
        }
        inv_norm = inv_norm.min(nu.abs() / mu);
    }
    Ok(1.0 / inv_norm)
}
