//! Model-reference adaptive control allocation: the moment filter, the
//! closed-loop reference model, the projection-based adaptive law, the static
//! mapping `u = theta_v' v`, the pseudo-inverse baseline, and the
//! convergence-set bound calculators.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::numerics::{self, solve_lyapunov, spectral_constants};
use crate::projection::{proj_matrix, ProjectionBounds};

/// Static configuration of the adaptive allocator.
#[derive(Debug, Clone)]
pub struct AllocatorConfig {
    /// Open-loop reference-model matrix (Hurwitz).
    pub a_m: DMatrix<f64>,
    /// Closed-loop reference-model gain; the feedback term is `ell (y - y_m)`.
    pub ell: f64,
    /// Scalar adaptation gain.
    pub gamma_theta: f64,
    /// Lyapunov matrix of `A_m - ell I` with unit right-hand side.
    pub p: DMatrix<f64>,
    pub bounds: ProjectionBounds,
    pub b: DMatrix<f64>,
}

impl AllocatorConfig {
    pub fn new(
        a_m: DMatrix<f64>,
        ell: f64,
        gamma_theta: f64,
        bounds: ProjectionBounds,
        b: DMatrix<f64>,
    ) -> Result<Self> {
        if ell < 0.0 {
            return Err(Error::Config("reference-model gain must be nonnegative".into()));
        }
        if gamma_theta <= 0.0 {
            return Err(Error::Config("adaptation gain must be positive".into()));
        }
        let r = a_m.nrows();
        if bounds.shape().0 != r || b.nrows() != r || bounds.shape().1 != b.ncols() {
            return Err(Error::Dimension("allocator config shapes disagree".into()));
        }
        let a_bar = &a_m - DMatrix::<f64>::identity(r, r) * ell;
        let p = solve_lyapunov(&a_bar, &DMatrix::identity(r, r))?;
        Ok(Self {
            a_m,
            ell,
            gamma_theta,
            p,
            bounds,
            b,
        })
    }

    pub fn a_bar(&self) -> DMatrix<f64> {
        let r = self.a_m.nrows();
        &self.a_m - DMatrix::<f64>::identity(r, r) * self.ell
    }
}

/// Mutable allocator state: adaptive matrix plus the filter and reference
/// model outputs.
#[derive(Debug, Clone)]
pub struct AllocatorState {
    pub theta_v: DMatrix<f64>,
    pub y: DVector<f64>,
    pub y_m: DVector<f64>,
}

impl AllocatorState {
    pub fn new(theta_v: DMatrix<f64>) -> Self {
        let r = theta_v.nrows();
        Self {
            theta_v,
            y: DVector::zeros(r),
            y_m: DVector::zeros(r),
        }
    }

    pub fn tracking_error(&self) -> DVector<f64> {
        &self.y - &self.y_m
    }
}

/// `u = theta_v' v`.
pub fn allocate(theta_v: &DMatrix<f64>, v: &DVector<f64>) -> DVector<f64> {
    theta_v.transpose() * v
}

/// Conventional baseline `u = B+ v` (minimum-norm distribution).
pub fn pseudo_inverse_allocate(b_pinv: &DMatrix<f64>, v: &DVector<f64>) -> DVector<f64> {
    b_pinv * v
}

/// `y' = A_m y + net - v`, where `net` is the realized moment `B Lambda u + d`.
pub fn filter_derivative(
    y: &DVector<f64>,
    net: &DVector<f64>,
    v: &DVector<f64>,
    a_m: &DMatrix<f64>,
) -> DVector<f64> {
    a_m * y + net - v
}

/// Closed-loop reference model `y_m' = A_m y_m + ell (y - y_m)`.
pub fn reference_model_derivative(
    y_m: &DVector<f64>,
    y: &DVector<f64>,
    a_m: &DMatrix<f64>,
    ell: f64,
) -> DVector<f64> {
    a_m * y_m + (y - y_m) * ell
}

/// Projection-gated adaptive law `theta' = gamma Proj(theta, -v e' P B)`.
pub fn adaptive_law(
    theta_v: &DMatrix<f64>,
    v: &DVector<f64>,
    e: &DVector<f64>,
    config: &AllocatorConfig,
) -> Result<DMatrix<f64>> {
    let drive = -v * e.transpose() * &config.p * &config.b;
    Ok(proj_matrix(theta_v, &drive, &config.bounds)? * config.gamma_theta)
}

/// Convergence-set radii of the error/parameter trajectories for the four
/// analyzed regimes: open- vs closed-loop reference model, ideal gains inside
/// vs outside the shrunk projection box.
#[derive(Debug, Clone, Copy)]
pub struct ConvergenceBounds {
    /// Worst parameter deviation with ideal gains inside the shrunk box.
    pub theta_tilde_max: f64,
    /// Worst parameter deviation with ideal gains outside it.
    pub theta_tilde_cap: f64,
    pub omega1: f64,
    pub omega2: f64,
    pub e_radius_e1: f64,
    pub e_radius_e1_hat: f64,
    pub e_radius_e2: f64,
    pub e_radius_e2_hat: f64,
}

/// Evaluate the convergence radii from the spectral constants of the open-
/// and closed-loop reference models.
///
/// `l_bar` bounds `||d(t)||`; `m_bounds` are the per-channel virtual-control
/// limits (their Euclidean norm bounds `||v||`); `theta_star_boxes` are the
/// element ranges of the ideal gains over the admissible effectiveness set.
pub fn convergence_bounds(
    config: &AllocatorConfig,
    l_bar: f64,
    m_bounds: &DVector<f64>,
    theta_star_boxes: &(DMatrix<f64>, DMatrix<f64>),
) -> Result<ConvergenceBounds> {
    let sc = spectral_constants(&config.a_m)?;
    let sc_bar = spectral_constants(&config.a_bar())?;
    let r = sc.r_dim as f64;
    let b_norm = numerics::spectral_norm(&config.b);
    let m_scalar = m_bounds.norm();
    let tt_max = config.bounds.theta_tilde_max();
    let tt_cap = config
        .bounds
        .theta_tilde_cap(&theta_star_boxes.0, &theta_star_boxes.1);
    let gt = config.gamma_theta;
    let ell = config.ell;

    let omega1 = sc.sigma / (2.0 * sc.m_const.powi(2));
    let omega2 =
        sc.s_min / gt * tt_max.powi(2) + 2.0 * sc.m_const.powi(4) * l_bar.powi(2) / sc.sigma.powi(2);

    let e1_sq = (sc.s_min / gt * tt_max.powi(2)
        + 2.0 * sc.m_const.powi(4) * l_bar.powi(2) / sc.sigma.powi(2))
        * 4.0
        * sc.s_min
        * sc.m_const.powi(2)
        / sc.sigma;
    let e1_hat_sq = (sc.s_min / gt * tt_cap.powi(2)
        + (4.0 * sc.m_const.powi(4) * l_bar.powi(2)
            + 4.0 * r * tt_cap.powi(2) * sc.m_const.powi(4) * b_norm.powi(2) * m_scalar.powi(2))
            / sc.sigma.powi(2))
        * 4.0
        * sc.s_min
        * sc.m_const.powi(2)
        / sc.sigma;

    let s_ell = sc_bar.s_min + ell;
    let sig_ell = sc_bar.sigma + 2.0 * ell;
    let mb = sc_bar.m_const;
    let e2_sq = (s_ell / gt * tt_max.powi(2) + 2.0 * mb.powi(4) * l_bar.powi(2) / sig_ell.powi(2))
        * 4.0
        * s_ell
        * mb.powi(2)
        / sig_ell;
    let e2_hat_sq = (s_ell / gt * tt_cap.powi(2)
        + (4.0 * mb.powi(4) * l_bar.powi(2)
            + 4.0 * r * tt_cap.powi(2) * mb.powi(4) * b_norm.powi(2) * m_scalar.powi(2))
            / sig_ell.powi(2))
        * 4.0
        * s_ell
        * mb.powi(2)
        / sig_ell;

    Ok(ConvergenceBounds {
        theta_tilde_max: tt_max,
        theta_tilde_cap: tt_cap,
        omega1,
        omega2,
        e_radius_e1: e1_sq.sqrt(),
        e_radius_e1_hat: e1_hat_sq.sqrt(),
        e_radius_e2: e2_sq.sqrt(),
        e_radius_e2_hat: e2_hat_sq.sqrt(),
    })
}

/// Lyapunov candidate `e' P e + tr(theta~' Gamma^-1 theta~ Lambda)`; test
/// instrumentation for the decrease checks.
pub fn lyapunov_value(
    e: &DVector<f64>,
    theta_tilde: &DMatrix<f64>,
    p: &DMatrix<f64>,
    gamma_theta: f64,
    lambda: &DVector<f64>,
) -> f64 {
    let quad = (e.transpose() * p * e)[(0, 0)];
    let scaled = theta_tilde.transpose()
        * theta_tilde
        * DMatrix::from_diagonal(lambda);
    quad + scaled.trace() / gamma_theta
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::admire::AdmirePreset;
    use crate::design;
    use approx::assert_relative_eq;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn admire_config() -> (AllocatorConfig, crate::plant::LinearPlant, AdmirePreset) {
        let p = AdmirePreset::new();
        let plant = p.plant().unwrap();
        let rep = design::run_pipeline(&plant, &p.u_max, &p.envelopes(), &p.design_options())
            .unwrap();
        let cfg = AllocatorConfig::new(
            p.a_m.clone(),
            p.ell,
            p.gamma_theta,
            rep.bounds.clone(),
            plant.b.clone(),
        )
        .unwrap();
        (cfg, plant, p)
    }

    #[test]
    fn allocate_identities() {
        let plant = AdmirePreset::new().plant().unwrap();
        let theta = numerics::right_pseudo_inverse(&plant.b).unwrap().transpose();
        let zero = DVector::zeros(3);
        assert_relative_eq!(allocate(&theta, &zero), DVector::zeros(4));
        // B theta' v = v for the nominal gains
        let v = DVector::from_vec(vec![0.7, -0.4, 0.2]);
        let u = allocate(&theta, &v);
        assert_relative_eq!(&plant.b * &u, v, epsilon = 1e-10);
    }

    #[test]
    fn allocate_is_linear() {
        let (_, plant, _) = admire_config();
        let theta = numerics::right_pseudo_inverse(&plant.b).unwrap().transpose();
        let v1 = DVector::from_vec(vec![0.1, 0.2, -0.3]);
        let v2 = DVector::from_vec(vec![-0.5, 0.4, 0.05]);
        let lhs = allocate(&theta, &(&v1 * 2.0 + &v2 * -3.0));
        let rhs = allocate(&theta, &v1) * 2.0 + allocate(&theta, &v2) * -3.0;
        assert_relative_eq!(lhs, rhs, epsilon = 1e-14);
    }

    #[test]
    fn allocation_within_limits_on_box_vertices() {
        // every (box vertex, M vertex) pair keeps all actuators inside limits
        let (cfg, _, p) = admire_config();
        let b = &cfg.bounds;
        let (r, m) = b.shape();
        for mask in 0..(1u32 << (r * m)) {
            let theta = DMatrix::from_fn(r, m, |i, j| {
                if mask >> (i * m + j) & 1 == 1 {
                    b.theta_max[(i, j)]
                } else {
                    b.theta_min[(i, j)]
                }
            });
            for vmask in 0..(1u32 << r) {
                let v = DVector::from_fn(r, |i, _| {
                    if vmask >> i & 1 == 1 {
                        p.m_bounds[i]
                    } else {
                        -p.m_bounds[i]
                    }
                });
                let u = allocate(&theta, &v);
                for j in 0..m {
                    assert!(u[j].abs() <= p.u_max[j] + 1e-9);
                }
            }
        }
    }

    #[test]
    fn pseudo_inverse_baseline() {
        let b = DMatrix::from_row_slice(1, 2, &[1.0, 1.0]);
        let bp = numerics::right_pseudo_inverse(&b).unwrap();
        let u = pseudo_inverse_allocate(&bp, &DVector::from_element(1, 2.0));
        assert_relative_eq!(u, DVector::from_vec(vec![1.0, 1.0]), epsilon = 1e-12);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let (_, plant, _) = admire_config();
        let bp = numerics::right_pseudo_inverse(&plant.b).unwrap();
        for _ in 0..20 {
            let v = DVector::from_fn(3, |_, _| rng.random_range(-1.0..1.0));
            assert!((&plant.b * pseudo_inverse_allocate(&bp, &v) - &v).amax() <= 1e-10);
        }
    }

    #[test]
    fn filter_equilibrium_and_steady_state() {
        let a_m = -DMatrix::<f64>::identity(2, 2);
        let v = DVector::from_vec(vec![0.3, -0.1]);
        let zero = filter_derivative(&DVector::zeros(2), &v, &v, &a_m);
        assert_relative_eq!(zero, DVector::zeros(2));

        // constant net - v = w: Euler-integrate to the steady state y = w
        let w = DVector::from_vec(vec![0.5, -0.2]);
        let mut y = DVector::zeros(2);
        for _ in 0..200_000 {
            let dy = filter_derivative(&y, &w, &DVector::zeros(2), &a_m);
            y += dy * 1e-3;
        }
        assert_relative_eq!(y, w, epsilon = 1e-6);
    }

    #[test]
    fn reference_model_cases() {
        let a_m = DMatrix::from_element(1, 1, -1.0);
        // ell = 0 reduces to the open-loop model
        let d0 = reference_model_derivative(
            &DVector::from_element(1, 2.0),
            &DVector::from_element(1, 5.0),
            &a_m,
            0.0,
        );
        assert_relative_eq!(d0[0], -2.0);
        // y = y_m leaves only A_m y_m
        let d1 = reference_model_derivative(
            &DVector::from_element(1, 2.0),
            &DVector::from_element(1, 2.0),
            &a_m,
            4.0,
        );
        assert_relative_eq!(d1[0], -2.0);
        // scalar hand value
        let d2 = reference_model_derivative(
            &DVector::zeros(1),
            &DVector::from_element(1, 1.0),
            &a_m,
            4.0,
        );
        assert_relative_eq!(d2[0], 4.0);
    }

    #[test]
    fn adaptive_law_cases() {
        let (cfg, plant, _) = admire_config();
        let theta = numerics::right_pseudo_inverse(&plant.b).unwrap().transpose();
        let v = DVector::from_vec(vec![0.5, -0.2, 0.1]);
        // e = 0 -> no update
        let zero = adaptive_law(&theta, &v, &DVector::zeros(3), &cfg).unwrap();
        assert_relative_eq!(zero, DMatrix::zeros(3, 4));
        // interior theta: unprojected gradient
        let e = DVector::from_vec(vec![0.01, -0.02, 0.005]);
        let got = adaptive_law(&theta, &v, &e, &cfg).unwrap();
        let expect = -(&v) * e.transpose() * &cfg.p * &cfg.b * cfg.gamma_theta;
        assert_relative_eq!(got, expect, epsilon = 1e-12);
        // an element pinned at its upper bound with outward drive gets scaled
        let mut theta_edge = theta.clone();
        theta_edge[(0, 0)] = cfg.bounds.theta_max[(0, 0)];
        let drive = -(&v) * e.transpose() * &cfg.p * &cfg.b;
        let got_edge = adaptive_law(&theta_edge, &v, &e, &cfg).unwrap();
        if drive[(0, 0)] > 0.0 {
            assert_relative_eq!(got_edge[(0, 0)], 0.0, epsilon = 1e-12);
        } else {
            assert_relative_eq!(got_edge[(0, 0)], cfg.gamma_theta * drive[(0, 0)], epsilon = 1e-12);
        }
    }

    #[test]
    fn lyapunov_value_cases() {
        let p = DMatrix::<f64>::identity(2, 2);
        let lam = DVector::from_element(3, 1.0);
        assert_relative_eq!(
            lyapunov_value(&DVector::zeros(2), &DMatrix::zeros(2, 3), &p, 1.0, &lam),
            0.0
        );
        // Lambda = I, gamma = 1: e'Pe + ||theta~||_F^2
        let e = DVector::from_vec(vec![1.0, -2.0]);
        let th = DMatrix::from_row_slice(2, 3, &[1.0, 0.0, 2.0, -1.0, 0.5, 0.0]);
        let v = lyapunov_value(&e, &th, &p, 1.0, &lam);
        assert_relative_eq!(v, e.norm_squared() + th.norm_squared(), epsilon = 1e-12);
        // nonnegative for random inputs
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..100 {
            let e = DVector::from_fn(2, |_, _| rng.random_range(-3.0..3.0));
            let th = DMatrix::from_fn(2, 3, |_, _| rng.random_range(-3.0..3.0));
            let lam = DVector::from_fn(3, |_, _| rng.random_range(0.01..1.0));
            assert!(lyapunov_value(&e, &th, &p, 2.0, &lam) >= 0.0);
        }
    }

    #[test]
    fn convergence_radii_shrink_with_ell() {
        let p = AdmirePreset::new();
        let plant = p.plant().unwrap();
        let rep = design::run_pipeline(&plant, &p.u_max, &p.envelopes(), &p.design_options())
            .unwrap();
        let l_bar = p.disturbance().l_bar_norm();
        let boxes = (rep.theta_star_lo.clone(), rep.theta_star_hi.clone());
        let mut last = f64::INFINITY;
        for ell in [0.0, 1.0, 2.0, 4.0, 8.0] {
            let cfg = AllocatorConfig::new(
                p.a_m.clone(),
                ell,
                p.gamma_theta,
                rep.bounds.clone(),
                plant.b.clone(),
            )
            .unwrap();
            let cb = convergence_bounds(&cfg, l_bar, &p.m_bounds, &boxes).unwrap();
            assert!(cb.e_radius_e2 < last, "radius not decreasing at ell = {ell}");
            last = cb.e_radius_e2;
            if ell == 0.0 {
                // closed-loop formulas reduce to the open-loop ones
                assert_relative_eq!(cb.e_radius_e2, cb.e_radius_e1, epsilon = 1e-9);
                assert_relative_eq!(cb.e_radius_e2_hat, cb.e_radius_e1_hat, epsilon = 1e-9);
            }
            assert!(cb.e_radius_e1 <= cb.e_radius_e1_hat);
        }
    }

    #[test]
    fn convergence_radius_zero_without_disturbance_or_mismatch() {
        let (cfg, plant, p) = admire_config();
        // collapse the parameter box to the nominal gains
        let theta = numerics::right_pseudo_inverse(&plant.b).unwrap().transpose();
        let tiny = DMatrix::from_element(3, 4, 1e-12);
        let bounds = ProjectionBounds::centered(&theta, &tiny, 0.05).unwrap();
        let cfg2 = AllocatorConfig::new(
            cfg.a_m.clone(),
            cfg.ell,
            cfg.gamma_theta,
            bounds,
            plant.b.clone(),
        )
        .unwrap();
        let boxes = (theta.clone(), theta.clone());
        let cb = convergence_bounds(&cfg2, 0.0, &p.m_bounds, &boxes).unwrap();
        assert!(cb.e_radius_e1 < 1e-9);
        assert!(cb.e_radius_e2 < 1e-9);
    }
}
