//! Stationary profiles of the rescaled flow: shooting for the 1D bump,
//! gluing of sign-alternating bumps, Newton refinement to discrete
//! stationarity, and the Sobolev-Poincare constant.

use crate::error::{Error, Result};
use crate::functionals::{signed_power, Functionals};
use crate::grid::{solve_tridiag_pivot, Field, GridSpec};
use serde::Serialize;

pub const MAX_BUMPS: usize = 8;

/// Discrete stationary solution -phi'' = lambda_q |phi|^(q-2) phi with
/// its bump count, residual and energy.
#[derive(Clone, Debug)]
pub struct Profile {
    field: Field,
    q: f64,
    bump_count: usize,
    residual: f64,
    energy: f64,
}

#[derive(Serialize)]
pub struct ProfileSummary {
    pub q: f64,
    pub length: f64,
    pub n: usize,
    pub k: usize,
    pub residual: f64,
    pub energy: f64,
}

impl Profile {
    pub fn field(&self) -> &Field {
        &self.field
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn bump_count(&self) -> usize {
        self.bump_count
    }

    pub fn residual(&self) -> f64 {
        self.residual
    }

    pub fn energy(&self) -> f64 {
        self.energy
    }

    pub fn summary(&self) -> ProfileSummary {
        let g = self.field.grid();
        ProfileSummary {
            q: self.q,
            length: g.length(),
            n: g.n(),
            k: self.bump_count,
            residual: self.residual,
            energy: self.energy,
        }
    }

    /// CSV rows (x, phi(x)) including the zero boundary values.
    pub fn to_csv(&self) -> String {
        let g = self.field.grid();
        let mut out = String::from("x,phi\n");
        out.push_str(&format!("{:.17e},{:.17e}\n", 0.0, 0.0));
        for (i, x) in g.nodes().enumerate() {
            out.push_str(&format!("{:.17e},{:.17e}\n", x, self.field.values()[i]));
        }
        out.push_str(&format!("{:.17e},{:.17e}\n", g.length(), 0.0));
        out
    }
}

/// Sign changes across interior nodes, ignoring nodes numerically at zero.
pub fn count_sign_changes(f: &Field) -> usize {
    let tol = 1e-8 * f.max_abs();
    let signs: Vec<f64> = f
        .values()
        .iter()
        .filter(|v| v.abs() > tol)
        .cloned()
        .collect();
    signs.windows(2).filter(|w| w[0] * w[1] < 0.0).count()
}

/// One shooting run for phi'' = -lambda_q |phi|^(q-2) phi, phi(0) = 0,
/// phi'(0) = slope, integrated by classical RK4 until the first return to
/// zero. Returns (halfwidth, sampled path including the endpoints).
pub fn shoot_bump(q: f64, slope: f64, step: f64) -> Result<(f64, Vec<(f64, f64)>)> {
    if !(q > 2.0) {
        return Err(Error::InvalidArgument(format!("q must exceed 2, got {q}")));
    }
    if !(slope > 0.0) || !(step > 0.0) {
        return Err(Error::InvalidArgument(
            "shoot_bump requires positive slope and step".into(),
        ));
    }
    let lambda_q = (q - 1.0) / (q - 2.0);
    let rhs = |y: f64| -lambda_q * signed_power(y, q - 1.0);
    let energy0 = 0.5 * slope * slope;

    let mut x = 0.0;
    let mut y = 0.0;
    let mut yp = slope;
    let mut path = vec![(0.0, 0.0)];
    // generous horizon: the half-period scales like slope^(-(q-2)/q)
    let horizon_steps = ((50.0 / step).ceil() as usize)
        .max((50.0 * slope.powf(-(q - 2.0) / q) / step).ceil() as usize)
        .min(50_000_000);
    for _ in 0..horizon_steps {
        // RK4 on (y, y')
        let (k1y, k1p) = (yp, rhs(y));
        let (k2y, k2p) = (yp + 0.5 * step * k1p, rhs(y + 0.5 * step * k1y));
        let (k3y, k3p) = (yp + 0.5 * step * k2p, rhs(y + 0.5 * step * k2y));
        let (k4y, k4p) = (yp + step * k3p, rhs(y + step * k3y));
        let y_new = y + step / 6.0 * (k1y + 2.0 * k2y + 2.0 * k3y + k4y);
        let yp_new = yp + step / 6.0 * (k1p + 2.0 * k2p + 2.0 * k3p + k4p);
        x += step;
        if y_new <= 0.0 && y > 0.0 {
            // locate the zero by linear interpolation on the last step
            let frac = y / (y - y_new);
            let halfwidth = x - step + frac * step;
            path.push((halfwidth, 0.0));
            let energy = 0.5 * yp_new * yp_new
                + lambda_q / q * y_new.abs().powf(q);
            let drift = (energy - energy0).abs() / energy0;
            if drift > 1e-8 {
                return Err(Error::ShootingFailure(format!(
                    "first-integral drift {drift:.3e} exceeds 1e-8; reduce step"
                )));
            }
            return Ok((halfwidth, path));
        }
        y = y_new;
        yp = yp_new;
        path.push((x, y));
    }
    Err(Error::ShootingFailure(
        "no zero crossing within the safety horizon".into(),
    ))
}

/// Damped Newton iteration on F(phi) = -Delta phi - lambda_q |phi|^(q-2) phi.
pub fn newton_refine(g: GridSpec, q: f64, guess: &Field) -> Result<Profile> {
    let funcs = Functionals::new(g, q)?;
    let lambda_q = funcs.lambda_q();
    let n = g.n();
    let h2 = g.h() * g.h();
    let mut phi = guess.clone();

    let res_of = |w: &Field| funcs.grad_j(w).hm1_norm();
    let mut res = res_of(&phi);
    for _iter in 0..50 {
        let scale = phi.h10_norm();
        if scale < 1e-8 {
            return Err(Error::TrivialSolution);
        }
        if res <= 1e-12 * scale {
            break;
        }
        // Jacobian action is the linearized operator L_phi (tridiagonal)
        let mut diag = vec![0.0; n];
        for i in 0..n {
            diag[i] = 2.0 / h2
                - lambda_q * (q - 1.0) * phi.values()[i].abs().powf(q - 2.0);
        }
        let off = vec![-1.0 / h2; n - 1];
        let f = funcs.grad_j(&phi);
        let neg_delta = solve_tridiag_pivot(&off, &diag, &off, f.values());
        let delta = Field::new(g, neg_delta.iter().map(|v| -v).collect())?;

        // halve the step until the residual decreases
        let mut alpha = 1.0;
        let mut accepted = false;
        for _ in 0..30 {
            let cand = phi.add_scaled(alpha, &delta);
            let cand_res = res_of(&cand);
            if cand_res < res {
                phi = cand;
                res = cand_res;
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        if !accepted {
            return Err(Error::NewtonFailure(format!(
                "no descent after 30 halvings, residual {res:.3e}"
            )));
        }
    }

    let scale = phi.h10_norm();
    if scale < 1e-8 {
        return Err(Error::TrivialSolution);
    }
    if res > 1e-10 * scale {
        return Err(Error::NewtonFailure(format!(
            "residual {res:.3e} above 1e-10 * ||phi||_H10 = {:.3e} after 50 iterations",
            1e-10 * scale
        )));
    }
    let energy = funcs.energy_j(&phi);
    let bump_count = count_sign_changes(&phi) + 1;
    Ok(Profile { field: phi, q, bump_count, residual: res, energy })
}

/// Builds the k-bump profile: scale one shot bump so its first zero lands at
/// L/k, alternate signs across k adjacent sub-intervals, sample to the grid,
/// then refine by Newton.
pub fn build_profile(g: GridSpec, q: f64, k: usize) -> Result<Profile> {
    if k == 0 || k > MAX_BUMPS {
        return Err(Error::InvalidArgument(format!(
            "bump count must lie in 1..={MAX_BUMPS}, got {k}"
        )));
    }
    // pilot shot to learn the halfwidth scale, then a fine one; back off on
    // the step if the first-integral drift check trips
    let mut pilot = Err(Error::ShootingFailure("unattempted".into()));
    for &step in &[1e-4, 1e-5, 1e-6] {
        pilot = shoot_bump(q, 1.0, step);
        if pilot.is_ok() {
            break;
        }
    }
    let (w_pilot, _) = pilot?;
    let mut fine = Err(Error::ShootingFailure("unattempted".into()));
    for div in [50_000.0, 200_000.0] {
        fine = shoot_bump(q, 1.0, w_pilot / div);
        if fine.is_ok() {
            break;
        }
    }
    let (w1, path) = fine?;
    let a = g.length() / k as f64;
    // phi_theta(x) = theta * phi(theta^((q-2)/2) x) has halfwidth w1 * theta^(-(q-2)/2)
    let theta = (w1 / a).powf(2.0 / (q - 2.0));
    let stretch = theta.powf((q - 2.0) / 2.0);

    let sample = |t: f64| -> f64 {
        // linear interpolation in the shot path (equispaced except last point)
        if t <= 0.0 || t >= w1 {
            return 0.0;
        }
        let step = path[1].0 - path[0].0;
        let i = ((t / step) as usize).min(path.len() - 2);
        let (x0, y0) = path[i];
        let (x1, y1) = path[i + 1];
        if x1 == x0 {
            return y0;
        }
        y0 + (y1 - y0) * (t - x0) / (x1 - x0)
    };

    let guess = Field::from_fn(g, |x| {
        let j = ((x / a) as usize).min(k - 1);
        let local = x - j as f64 * a;
        let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
        sign * theta * sample(stretch * local)
    });
    let mut profile = newton_refine(g, q, &guess)?;
    profile.bump_count = count_sign_changes(&profile.field) + 1;
    if profile.bump_count != k {
        return Err(Error::NewtonFailure(format!(
            "refined profile has {} bumps, wanted {k}",
            profile.bump_count
        )));
    }
    Ok(profile)
}

/// Discrete Sobolev-Poincare constant ||phi||_q / ||phi||_H10 for the
/// positive least-energy profile (the extremal of the ratio).
pub fn sobolev_constant(g: GridSpec, q: f64) -> Result<f64> {
    let p = build_profile(g, q, 1)?;
    Ok(p.field().lp_norm(q)? / p.field().h10_norm())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridSpec;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    #[test]
    fn shoot_bump_conserves_first_integral_and_symmetry() {
        let (hw, path) = shoot_bump(3.0, 1.0, 1e-4).unwrap();
        assert!(hw > 0.0);
        // symmetry about the midpoint: max near hw/2
        let (x_max, _) = path
            .iter()
            .cloned()
            .fold((0.0, 0.0), |acc, p| if p.1 > acc.1 { p } else { acc });
        assert!((x_max - hw / 2.0).abs() < 1e-2 * hw, "max at {x_max}, hw {hw}");
    }

    #[test]
    fn shoot_bump_scaling_law() {
        // doubling the peak theta scales the halfwidth by theta^(-(q-2)/2)
        let q = 3.0;
        let (w1, path1) = shoot_bump(q, 1.0, 1e-4).unwrap();
        // phi_theta'(0) = theta^(1 + (q-2)/2) phi'(0)
        let theta: f64 = 2.0;
        let slope2 = theta.powf(1.0 + (q - 2.0) / 2.0);
        let (w2, _) = shoot_bump(q, slope2, 5e-5).unwrap();
        let expect = w1 * theta.powf(-(q - 2.0) / 2.0);
        assert!((w2 - expect).abs() < 1e-3 * w1, "w2={w2} expect={expect}");
        let peak1 = path1.iter().map(|p| p.1).fold(0.0_f64, f64::max);
        assert!(peak1 > 0.0);
    }

    #[test]
    fn shoot_bump_rejects_bad_arguments() {
        assert!(shoot_bump(3.0, -1.0, 1e-3).is_err());
        assert!(shoot_bump(3.0, 1.0, -1e-3).is_err());
        assert!(shoot_bump(1.5, 1.0, 1e-3).is_err());
    }

    #[test]
    fn positive_profile_q3() {
        let g = GridSpec::new(PI, 400).unwrap();
        let p = build_profile(g, 3.0, 1).unwrap();
        assert_eq!(p.bump_count(), 1);
        assert!(p.field().values().iter().all(|&v| v > 0.0), "positive");
        assert!(p.residual() <= 1e-10 * p.field().h10_norm());
        assert!(p.energy() > 0.0);
        // symmetry about L/2
        let v = p.field().values();
        let n = g.n();
        for i in 0..n / 2 {
            assert!((v[i] - v[n - 1 - i]).abs() < 1e-8 * p.field().max_abs());
        }
    }

    #[test]
    fn stationarity_identity() {
        // ||phi||^2_H10 = lambda_q ||phi||_q^q within 1e-10 relative
        let g = GridSpec::new(PI, 200).unwrap();
        for &q in &[2.5, 3.0, 4.0] {
            let p = build_profile(g, q, 1).unwrap();
            let lambda_q = (q - 1.0) / (q - 2.0);
            let lhs = p.field().h10_inner(p.field());
            let rhs = lambda_q * p.field().lp_norm(q).unwrap().powf(q);
            assert!((lhs - rhs).abs() <= 1e-10 * lhs, "q={q}: {lhs} vs {rhs}");
        }
    }

    #[test]
    fn two_bump_profile() {
        let g = GridSpec::new(PI, 400).unwrap();
        let p1 = build_profile(g, 3.0, 1).unwrap();
        let p2 = build_profile(g, 3.0, 2).unwrap();
        assert_eq!(p2.bump_count(), 2);
        assert!(p2.energy() > p1.energy(), "least-energy minimality");
        // odd symmetry about L/2
        let v = p2.field().values();
        let n = g.n();
        for i in 0..n / 2 {
            assert!((v[i] + v[n - 1 - i]).abs() < 1e-7 * p2.field().max_abs());
        }
    }

    #[test]
    fn scaled_profile_not_stationary() {
        let g = GridSpec::new(PI, 200).unwrap();
        let p = build_profile(g, 3.0, 1).unwrap();
        let funcs = Functionals::new(g, 3.0).unwrap();
        let res = funcs.grad_j(&p.field().scaled(1.1)).hm1_norm();
        assert!(res >= 1e-3, "residual of 1.1 phi is {res}");
    }

    #[test]
    fn newton_refine_edge_cases() {
        let g = GridSpec::new(PI, 100).unwrap();
        assert!(matches!(
            newton_refine(g, 3.0, &Field::zeros(g)),
            Err(Error::TrivialSolution)
        ));
        // exact discrete solution is a fixed point
        let p = build_profile(g, 3.0, 1).unwrap();
        let again = newton_refine(g, 3.0, p.field()).unwrap();
        assert!(again.field().minus(p.field()).max_abs() <= 1e-12 * p.field().max_abs());
    }

    #[test]
    fn sobolev_constant_properties() {
        let g = GridSpec::new(PI, 200).unwrap();
        let q = 3.0;
        let c = sobolev_constant(g, q).unwrap();
        // extremality against random fields
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..1000 {
            let w = Field::new(
                g,
                (0..g.n()).map(|_| rng.gen_range(-1.0..1.0)).collect(),
            )
            .unwrap();
            let ratio = w.lp_norm(q).unwrap() / w.h10_norm();
            assert!(ratio <= c * (1.0 + 1e-6), "ratio {ratio} > C_q {c}");
        }
    }

    #[test]
    fn sobolev_constant_poincare_trend() {
        // q -> 2+ trend towards the Poincare constant L/pi. The domain length
        // is tied to q so the profile amplitude stays O(1): with
        // L = pi / sqrt(lambda_q) the first Dirichlet eigenvalue matches
        // lambda_q and the stationary amplitude does not collapse.
        let mut errs = vec![];
        for &q in &[2.5f64, 2.2, 2.1] {
            let lambda_q = (q - 1.0) / (q - 2.0);
            let len = PI / lambda_q.sqrt();
            let g = GridSpec::new(len, 300).unwrap();
            let cq = sobolev_constant(g, q).unwrap() / len.powf(0.5 - 1.0 / q);
            let poincare = len / PI;
            errs.push((cq - poincare).abs() / poincare);
        }
        assert!(errs[2] < 0.1, "errors along the ladder: {errs:?}");
        assert!(errs[2] < errs[0], "trend towards Poincare: {errs:?}");
    }
}
