//! Offline design pipeline: attainable virtual-control bounds, the
//! non-saturating parameter set, the effectiveness threshold `gamma`, the
//! projection-box sizing around the nominal allocation gains, disturbance
//! budgets, and the sliding-surface rate feasibility check.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::numerics::{self, box_lp_max, right_pseudo_inverse, transition_decay_constants};
use crate::plant::LinearPlant;
use crate::projection::ProjectionBounds;

/// Upper cap applied to the computed sliding-surface rate when the
/// feasibility inequality leaves it unbounded.
pub const LAMBDA_BAR_CAP: f64 = 50.0;
/// Smallest usable neighborhood radius around the nominal gains.
pub const MIN_RADIUS: f64 = 1e-6;

/// Operating envelopes supplied by the user: bounds on the initial state
/// split, the per-channel references and their rates, and the per-channel
/// disturbance bound.
#[derive(Debug, Clone)]
pub struct Envelopes {
    pub x1_bar: f64,
    pub x2_bar: f64,
    pub r_bar_i: DVector<f64>,
    pub rdot_bar_i: DVector<f64>,
    pub l_bar_i: DVector<f64>,
}

impl Envelopes {
    /// `sup ||r(t)||` implied by the per-channel bounds.
    pub fn r_bar(&self) -> f64 {
        self.r_bar_i.norm()
    }
}

/// Which effectiveness samples feed the radius optimization. The uncertainty
/// budget and the non-emptiness certificate always use the full sample set;
/// the radius search defaults to the nominal effectiveness because samples at
/// the `gamma` corner collapse the neighborhood to numerical dust (the
/// nominal gains sit on the constraint boundary there by construction).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RadiusSampling {
    Nominal,
    Full,
}

#[derive(Debug, Clone)]
pub struct DesignOptions {
    pub epsilon: f64,
    pub zeta_frac: f64,
    /// Number of random interior effectiveness samples on top of the
    /// vertex set.
    pub lambda_grid_density: usize,
    /// Direction count for the boundary line search.
    pub n_directions: usize,
    pub seed: u64,
    pub radius_sampling: RadiusSampling,
    /// Working soft-saturation bounds; validated against the attainable set.
    /// When absent, the attainable per-axis maxima scaled uniformly to fit
    /// the non-saturating box construction (with 5% headroom) are used.
    pub m_override: Option<DVector<f64>>,
}

impl Default for DesignOptions {
    fn default() -> Self {
        Self {
            epsilon: 1e-3,
            zeta_frac: 0.05,
            lambda_grid_density: 16,
            n_directions: 1000,
            seed: 11,
            radius_sampling: RadiusSampling::Nominal,
            m_override: None,
        }
    }
}

/// Everything the pipeline decides, in evaluation order.
#[derive(Debug, Clone)]
pub struct DesignReport {
    /// Attainable per-axis maxima of the virtual control (Step 1 output).
    pub m_attainable: DVector<f64>,
    /// Working soft-saturation bounds used by all later steps.
    pub m: DVector<f64>,
    pub gamma: f64,
    pub gamma_b: DVector<f64>,
    pub gamma_m: DVector<f64>,
    pub epsilon: f64,
    pub theta_i_star: DMatrix<f64>,
    pub radius: f64,
    pub bounds: ProjectionBounds,
    /// Element-wise ranges of the ideal gains over the sampled
    /// effectiveness set.
    pub theta_star_lo: DMatrix<f64>,
    pub theta_star_hi: DMatrix<f64>,
    pub rho_bar: DVector<f64>,
    pub rho: DVector<f64>,
    pub rho_ok: bool,
    pub lambda_bar: f64,
    pub w1: DVector<f64>,
    pub w2: DVector<f64>,
    pub k: f64,
    pub xi: f64,
    pub k2: f64,
    pub feasible: bool,
    pub decisions: Vec<String>,
}

/// Step 1: per-axis maxima `M_i = max v_i` over `{v : -u_max <= B+ v <= u_max}`.
pub fn virtual_bounds(b: &DMatrix<f64>, u_max: &DVector<f64>) -> Result<DVector<f64>> {
    let r = b.nrows();
    let bp = right_pseudo_inverse(b)?;
    let lo = -u_max;
    let mut m_out = DVector::zeros(r);
    for i in 0..r {
        let c = DVector::from_fn(r, |k, _| if k == i { 1.0 } else { 0.0 });
        m_out[i] = box_lp_max(&c, &bp, &lo, u_max)?;
    }
    Ok(m_out)
}

/// Step 2 membership test: `|row_j(theta' v)| <= u_max_j` on every vertex of
/// the box `[-M, M]` (sufficient by linearity; the box over-approximates the
/// attainable set, so this is conservative).
pub fn omega_theta_contains(theta: &DMatrix<f64>, m_bounds: &DVector<f64>, u_max: &DVector<f64>) -> bool {
    let r = theta.nrows();
    let m = theta.ncols();
    if m_bounds.len() != r || u_max.len() != m {
        return false;
    }
    // worst vertex per actuator: sum_i |theta_ij| M_i
    (0..m).all(|j| {
        let worst: f64 = (0..r).map(|i| theta[(i, j)].abs() * m_bounds[i]).sum();
        worst <= u_max[j]
    })
}

/// Step 3 threshold: `gamma = max_i (1 - sqrt(gamma_Mi / gamma_Bi))` with
/// `gamma_Bi = ||row_i(B)|| ||B+||` and `gamma_Mi = M_i^2 / M_max^2 - eps`.
pub fn gamma_threshold(
    b: &DMatrix<f64>,
    m_bounds: &DVector<f64>,
    epsilon: f64,
) -> Result<(f64, DVector<f64>, DVector<f64>)> {
    let r = b.nrows();
    let bp = right_pseudo_inverse(b)?;
    let bp_norm = numerics::spectral_norm(&bp);
    let m_max = m_bounds.max();
    let gamma_b = DVector::from_fn(r, |i, _| b.row(i).norm() * bp_norm);
    let gamma_m = DVector::from_fn(r, |i, _| (m_bounds[i] / m_max).powi(2) - epsilon);
    if gamma_m.min() <= 0.0 {
        return Err(Error::Infeasible {
            step: 3,
            reason: format!("epsilon {epsilon} leaves a non-positive gamma_M"),
        });
    }
    let gamma = (0..r)
        .map(|i| 1.0 - (gamma_m[i] / gamma_b[i]).sqrt())
        .fold(f64::NEG_INFINITY, f64::max);
    Ok((gamma, gamma_b, gamma_m))
}

/// Step 4: finite sample of the admissible effectiveness set: all `2^m`
/// vertices with entries in `{gamma + 1e-6, 1}` plus seeded uniform interior
/// diagonals. The identity is always included (the all-ones vertex).
pub fn sample_lambda_set(gamma: f64, m: usize, grid_density: usize, seed: u64) -> Vec<DVector<f64>> {
    const DELTA: f64 = 1e-6;
    let low = (gamma + DELTA).min(1.0);
    let mut out = Vec::with_capacity((1 << m) + grid_density);
    for bits in 0..(1u32 << m) {
        out.push(DVector::from_fn(m, |j, _| {
            if bits >> j & 1 == 1 {
                1.0
            } else {
                low
            }
        }));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..grid_density {
        out.push(DVector::from_fn(m, |_, _| rng.random_range(low..=1.0)));
    }
    out
}

fn constraint_rows(b: &DMatrix<f64>, lam: &DVector<f64>, theta: &DMatrix<f64>) -> DMatrix<f64> {
    // B Lambda theta' - I
    let r = b.nrows();
    let scaled = DMatrix::from_fn(r, b.ncols(), |i, j| b[(i, j)] * lam[j]);
    scaled * theta.transpose() - DMatrix::identity(r, r)
}

/// Largest violation of `||row_i(B Lambda theta' - I)||^2 <= gamma_Mi` over
/// the given samples; non-positive means the certificate holds.
pub fn certificate_violation(
    b: &DMatrix<f64>,
    theta: &DMatrix<f64>,
    samples: &[DVector<f64>],
    gamma_m: &DVector<f64>,
) -> f64 {
    let mut worst = f64::NEG_INFINITY;
    for lam in samples {
        let g = constraint_rows(b, lam, theta);
        for i in 0..b.nrows() {
            worst = worst.max(g.row(i).norm_squared() - gamma_m[i]);
        }
    }
    worst
}

/// Step 5: distance `R` from the nominal gains to the constraint boundary by
/// per-(sample, row, direction) bisection line searches, then the inscribed
/// hypercube intersected with the non-saturating set (offending columns are
/// shrunk symmetrically about the nominal gains).
#[allow(clippy::too_many_arguments)]
pub fn projection_boundary_opt(
    b: &DMatrix<f64>,
    m_bounds: &DVector<f64>,
    epsilon: f64,
    lambda_samples: &[DVector<f64>],
    theta_i_star: &DMatrix<f64>,
    zeta_frac: f64,
    u_max: &DVector<f64>,
    n_directions: usize,
    seed: u64,
) -> Result<(f64, ProjectionBounds)> {
    let (r, m) = theta_i_star.shape();
    let m_max = m_bounds.max();
    let gamma_m = DVector::from_fn(r, |i, _| (m_bounds[i] / m_max).powi(2) - epsilon);

    // axis directions first, then seeded random unit vectors
    let mut dirs: Vec<DVector<f64>> = Vec::with_capacity(n_directions.max(2 * r * m));
    for k in 0..r * m {
        let mut e = DVector::zeros(r * m);
        e[k] = 1.0;
        dirs.push(e.clone());
        dirs.push(-e);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    while dirs.len() < n_directions {
        let d = DVector::from_fn(r * m, |_, _| rng.random_range(-1.0..1.0));
        let norm = d.norm();
        if norm > 1e-9 {
            dirs.push(d / norm);
        }
    }

    let mut radius = f64::INFINITY;
    for dir in &dirs {
        let dir_mat = DMatrix::from_fn(r, m, |i, j| dir[i * m + j]);
        for lam in lambda_samples {
            let g0 = constraint_rows(b, lam, theta_i_star);
            let scaled = DMatrix::from_fn(r, m, |i, j| b[(i, j)] * lam[j]);
            let gd = &scaled * dir_mat.transpose();
            for i in 0..r {
                let level = gamma_m[i];
                let val = |t: f64| {
                    let row = g0.row(i) + gd.row(i) * t;
                    row.norm_squared() - level
                };
                if val(0.0) >= 0.0 {
                    // nominal gains on or outside this constraint: no usable
                    // neighborhood in any direction
                    return Err(Error::Infeasible {
                        step: 5,
                        reason: format!(
                            "nominal gains violate the row-{i} constraint at a sampled \
                             effectiveness"
                        ),
                    });
                }
                // bracket the single positive crossing, then bisect
                let mut hi = 1.0;
                let mut found = true;
                while val(hi) < 0.0 {
                    hi *= 2.0;
                    if hi > 1e6 {
                        found = false;
                        break;
                    }
                }
                if !found {
                    continue;
                }
                let mut lo = 0.0;
                while hi - lo > 1e-8 {
                    let mid = 0.5 * (lo + hi);
                    if val(mid) < 0.0 {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                radius = radius.min(0.5 * (lo + hi));
            }
        }
    }

    if !radius.is_finite() || radius < MIN_RADIUS {
        return Err(Error::Infeasible {
            step: 5,
            reason: format!("usable neighborhood radius {radius:.3e} below {MIN_RADIUS:.0e}"),
        });
    }

    // inscribed hypercube, then shrink offending columns to stay inside the
    // non-saturating set (per-column: worst box vertex demand <= u_max_j)
    let h_uniform = radius / ((r * m) as f64).sqrt();
    let mut half = DMatrix::from_element(r, m, h_uniform);
    let sum_m: f64 = m_bounds.iter().map(|x| x.abs()).sum();
    for j in 0..m {
        let center_demand: f64 = (0..r).map(|i| theta_i_star[(i, j)].abs() * m_bounds[i]).sum();
        let slack = u_max[j] - center_demand;
        if slack <= 0.0 {
            return Err(Error::Infeasible {
                step: 5,
                reason: format!("nominal gains saturate actuator {j} on a box vertex"),
            });
        }
        let cap = slack / sum_m;
        if cap < h_uniform {
            for i in 0..r {
                half[(i, j)] = cap;
            }
        }
    }

    let bounds = ProjectionBounds::centered(theta_i_star, &half, zeta_frac)?;
    if !bounds.contains_shrunk(theta_i_star) {
        return Err(Error::Infeasible {
            step: 5,
            reason: "nominal gains not strictly inside the shrunk projection box".into(),
        });
    }
    Ok((radius, bounds))
}

/// Step 6: worst-case multiplicative-uncertainty rows over the sampled
/// effectiveness set and the projection-box vertices, and the resulting
/// disturbance budget `rho_i = rho_bar_i M_max + L_bar_i`.
pub fn rho_budget(
    b: &DMatrix<f64>,
    lambda_samples: &[DVector<f64>],
    bounds: &ProjectionBounds,
    m_bounds: &DVector<f64>,
    l_bar_i: &DVector<f64>,
    theta_i_star: &DMatrix<f64>,
) -> (DVector<f64>, DVector<f64>, bool) {
    let (r, m) = bounds.shape();
    let m_max = m_bounds.max();
    // per-element deviation reach from the center
    let dev = DMatrix::from_fn(r, m, |i, j| {
        (bounds.theta_max[(i, j)] - theta_i_star[(i, j)])
            .abs()
            .max((theta_i_star[(i, j)] - bounds.theta_min[(i, j)]).abs())
    });
    let mut rho_bar = DVector::<f64>::zeros(r);
    for lam in lambda_samples {
        for i in 0..r {
            // rows of theta are independent, so the worst vertex is separable:
            // |row_i(B Lam dtheta')_k| <= sum_j |B_ij lam_j| dev_kj
            let mut sq = 0.0;
            for k in 0..r {
                let s: f64 = (0..m).map(|j| (b[(i, j)] * lam[j]).abs() * dev[(k, j)]).sum();
                sq += s * s;
            }
            rho_bar[i] = rho_bar[i].max(sq.sqrt());
        }
    }
    let rho = DVector::from_fn(r, |i, _| rho_bar[i] * m_max + l_bar_i[i]);
    let ok = (0..r).all(|i| rho[i] < m_bounds[i]);
    (rho_bar, rho, ok)
}

/// Steps 11-13: evaluate the saturation-avoidance inequality
/// `W1_i + lambda_bar W2_i <= 0` and pick the admissible surface rate.
#[allow(clippy::too_many_arguments)]
pub fn smc_feasibility(
    plant: &LinearPlant,
    m_bounds: &DVector<f64>,
    rho: &DVector<f64>,
    env: &Envelopes,
    k: f64,
    xi: f64,
) -> (DVector<f64>, DVector<f64>, f64, bool, f64) {
    let (_, a12, a21, _) = plant.a_blocks();
    let k2 = k / xi * numerics::spectral_norm(&a12);
    let r = plant.r;
    let r_bar = env.r_bar();
    let w1 = DVector::from_fn(r, |i, _| {
        let row_abs: f64 = (0..plant.n - plant.r).map(|j| a21[(i, j)].abs()).sum();
        row_abs * (k * env.x1_bar + (1.0 + k2) * env.x2_bar + k2 * r_bar + env.r_bar_i[i])
            + env.rdot_bar_i[i]
            - m_bounds[i]
            + rho[i]
    });
    let w2 = DVector::from_fn(r, |i, _| env.x2_bar + 2.0 / std::f64::consts::PI * env.r_bar_i[i]);
    let feasible = w1.iter().all(|&x| x < 0.0);
    let lambda_bar = if feasible {
        let mut best = f64::INFINITY;
        for i in 0..r {
            if w2[i] > 0.0 {
                best = best.min(-w1[i] / w2[i]);
            }
        }
        (0.9 * best).min(LAMBDA_BAR_CAP)
    } else {
        f64::NAN
    };
    (w1, w2, lambda_bar, feasible, k2)
}

/// Ideal-gain element ranges over the sampled effectiveness set:
/// `theta*(Lambda) = ((B Lambda)+)'`.
pub fn theta_star_boxes(
    b: &DMatrix<f64>,
    lambda_samples: &[DVector<f64>],
) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let (r, m) = b.shape();
    let mut lo = DMatrix::from_element(r, m, f64::INFINITY);
    let mut hi = DMatrix::from_element(r, m, f64::NEG_INFINITY);
    for lam in lambda_samples {
        let bl = DMatrix::from_fn(r, m, |i, j| b[(i, j)] * lam[j]);
        let star = right_pseudo_inverse(&bl)?.transpose();
        for k in 0..r * m {
            lo[k] = lo[k].min(star[k]);
            hi[k] = hi[k].max(star[k]);
        }
    }
    Ok((lo, hi))
}

/// Run the full offline procedure; fails fast with the first infeasible step.
pub fn run_pipeline(
    plant: &LinearPlant,
    u_max: &DVector<f64>,
    env: &Envelopes,
    opts: &DesignOptions,
) -> Result<DesignReport> {
    let mut decisions = Vec::new();
    let rep = crate::plant::validate_assumptions(plant);
    if !rep.a11_hurwitz {
        return Err(Error::Infeasible {
            step: 0,
            reason: "upper-left state block is not Hurwitz".into(),
        });
    }

    // Step 1: attainable per-axis bounds, then the working bounds
    let m_attainable = virtual_bounds(&plant.b, u_max)?;
    let theta_i_star = right_pseudo_inverse(&plant.b)?.transpose();
    let mut m_work = match &opts.m_override {
        Some(m_o) => {
            if m_o.len() != plant.r || m_o.iter().any(|&x| x <= 0.0) {
                return Err(Error::Config("invalid virtual-control bound override".into()));
            }
            // scale the override uniformly so it stays attainable and the
            // non-saturating box check keeps a little slack
            let s_attain = (0..plant.r)
                .map(|i| m_attainable[i] / m_o[i])
                .fold(f64::INFINITY, f64::min);
            let mut s_box = f64::INFINITY;
            for j in 0..plant.m {
                let demand: f64 = (0..plant.r)
                    .map(|i| theta_i_star[(i, j)].abs() * m_o[i])
                    .sum();
                if demand > 0.0 {
                    s_box = s_box.min(u_max[j] / demand);
                }
            }
            let scale = s_attain.min(0.999 * s_box).min(1.0);
            if scale < 1.0 {
                decisions.push(format!(
                    "virtual-control bound override scaled by {scale:.6} to stay attainable \
                     and non-saturating"
                ));
            }
            m_o * scale
        }
        None => {
            // largest uniform scaling that keeps the nominal gains inside the
            // non-saturating box check, with 5% headroom for the parameter box
            let mut scale = f64::INFINITY;
            for j in 0..plant.m {
                let demand: f64 = (0..plant.r)
                    .map(|i| theta_i_star[(i, j)].abs() * m_attainable[i])
                    .sum();
                if demand > 0.0 {
                    scale = scale.min(u_max[j] / demand);
                }
            }
            let s = 0.95 * scale.min(1.0 / 0.95); // never above the attainable maxima
            decisions.push(format!(
                "no virtual-control bounds configured; attainable maxima scaled by {s:.4}"
            ));
            &m_attainable * s
        }
    };
    // guard against zero-width boxes later on
    for x in m_work.iter_mut() {
        if *x <= 0.0 {
            return Err(Error::Infeasible {
                step: 1,
                reason: "working virtual-control bounds collapsed".into(),
            });
        }
    }

    // Step 2: nominal gains must avoid saturation over the bound box
    if !omega_theta_contains(&theta_i_star, &m_work, u_max) {
        return Err(Error::Infeasible {
            step: 2,
            reason: "nominal allocation gains saturate an actuator on a bound-box vertex".into(),
        });
    }

    // Step 3: effectiveness threshold
    let (gamma, gamma_b, gamma_m) = gamma_threshold(&plant.b, &m_work, opts.epsilon)?;
    if gamma >= 1.0 {
        return Err(Error::Infeasible {
            step: 3,
            reason: format!("effectiveness threshold gamma = {gamma} not below one"),
        });
    }
    let gamma = gamma.max(0.0);

    // Step 4: effectiveness samples
    let samples = sample_lambda_set(gamma, plant.m, opts.lambda_grid_density, opts.seed);
    let worst_cert = certificate_violation(&plant.b, &theta_i_star, &samples, &gamma_m);
    if worst_cert > 1e-9 {
        return Err(Error::Infeasible {
            step: 4,
            reason: format!("non-emptiness certificate violated by {worst_cert:.3e}"),
        });
    }

    // Step 5: projection box around the nominal gains
    let nominal = vec![DVector::from_element(plant.m, 1.0)];
    let radius_samples: &[DVector<f64>] = match opts.radius_sampling {
        RadiusSampling::Nominal => {
            decisions.push(
                "projection-box radius searched at nominal effectiveness; fault range enters \
                 through the uncertainty budget"
                    .into(),
            );
            &nominal
        }
        RadiusSampling::Full => &samples,
    };
    let (radius, bounds) = projection_boundary_opt(
        &plant.b,
        &m_work,
        opts.epsilon,
        radius_samples,
        &theta_i_star,
        opts.zeta_frac,
        u_max,
        opts.n_directions,
        opts.seed,
    )?;

    // Step 6: uncertainty budget over the full sample set
    let (rho_bar, rho, rho_ok) = rho_budget(
        &plant.b,
        &samples,
        &bounds,
        &m_work,
        &env.l_bar_i,
        &theta_i_star,
    );
    if !rho_ok {
        decisions.push(format!(
            "disturbance budget exceeds a virtual-control bound: rho = {:?}",
            rho.as_slice()
        ));
    }

    // Step 9: decay constants of the uncontrolled block
    let (a11, _, _, _) = plant.a_blocks();
    let (k, xi) = transition_decay_constants(&a11)?;

    // Steps 10-13: envelopes in, surface-rate inequality out
    let (w1, w2, lambda_bar, w_feasible, k2) =
        smc_feasibility(plant, &m_work, &rho, env, k, xi);
    if !w_feasible {
        let bad = (0..plant.r).find(|&i| w1[i] >= 0.0).unwrap_or(0);
        return Err(Error::Infeasible {
            step: 11,
            reason: format!("W1[{bad}] = {:.4} is not negative; reduce the envelopes", w1[bad]),
        });
    }

    let (star_lo, star_hi) = theta_star_boxes(&plant.b, &samples)?;
    let feasible = rho_ok && w_feasible;
    Ok(DesignReport {
        m_attainable,
        m: m_work,
        gamma,
        gamma_b,
        gamma_m,
        epsilon: opts.epsilon,
        theta_i_star,
        radius,
        bounds,
        theta_star_lo: star_lo,
        theta_star_hi: star_hi,
        rho_bar,
        rho,
        rho_ok,
        lambda_bar,
        w1,
        w2,
        k,
        xi,
        k2,
        feasible,
        decisions,
    })
}

impl DesignReport {
    /// Human-readable structured summary with a stable key order.
    pub fn to_text(&self) -> String {
        use std::fmt::Write;
        let mut s = String::new();
        let vec_line = |v: &DVector<f64>| {
            v.iter().map(|x| format!("{x:.6}")).collect::<Vec<_>>().join(" ")
        };
        let mat_line = |m: &DMatrix<f64>| {
            (0..m.nrows())
                .map(|i| {
                    (0..m.ncols())
                        .map(|j| format!("{:.6}", m[(i, j)]))
                        .collect::<Vec<_>>()
                        .join(" ")
                })
                .collect::<Vec<_>>()
                .join("; ")
        };
        let _ = writeln!(s, "feasible = {}", self.feasible);
        let _ = writeln!(s, "m_attainable = {}", vec_line(&self.m_attainable));
        let _ = writeln!(s, "m = {}", vec_line(&self.m));
        let _ = writeln!(s, "gamma = {:.6}", self.gamma);
        let _ = writeln!(s, "gamma_b = {}", vec_line(&self.gamma_b));
        let _ = writeln!(s, "gamma_m = {}", vec_line(&self.gamma_m));
        let _ = writeln!(s, "epsilon = {:.6}", self.epsilon);
        let _ = writeln!(s, "radius = {:.6}", self.radius);
        let _ = writeln!(s, "theta_i_star = {}", mat_line(&self.theta_i_star));
        let _ = writeln!(s, "theta_min = {}", mat_line(&self.bounds.theta_min));
        let _ = writeln!(s, "theta_max = {}", mat_line(&self.bounds.theta_max));
        let _ = writeln!(s, "zeta = {}", mat_line(&self.bounds.zeta));
        let _ = writeln!(s, "rho_bar = {}", vec_line(&self.rho_bar));
        let _ = writeln!(s, "rho = {}", vec_line(&self.rho));
        let _ = writeln!(s, "rho_ok = {}", self.rho_ok);
        let _ = writeln!(s, "k = {:.6}", self.k);
        let _ = writeln!(s, "xi = {:.6}", self.xi);
        let _ = writeln!(s, "k2 = {:.6}", self.k2);
        let _ = writeln!(s, "w1 = {}", vec_line(&self.w1));
        let _ = writeln!(s, "w2 = {}", vec_line(&self.w2));
        let _ = writeln!(s, "lambda_bar = {:.6}", self.lambda_bar);
        for d in &self.decisions {
            let _ = writeln!(s, "decision = {d}");
        }
        s
    }
}
