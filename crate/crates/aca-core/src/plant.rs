//! Over-actuated LTI plant with actuator saturation, first-order actuator
//! dynamics, time-varying effectiveness faults, disturbance and measurement
//! noise, plus validation of the structural assumptions the controller
//! design relies on.

use nalgebra::{Complex, DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::numerics;

/// Tolerance for the zero upper block of the input matrix.
pub const UPPER_BLOCK_TOL: f64 = 1e-9;

/// `x' = A x + B_u (Lambda u + d_u)` with the redundancy decomposition
/// `B_u = B_v B`, `B_v = [0; I_r]`.
#[derive(Debug, Clone)]
pub struct LinearPlant {
    pub a: DMatrix<f64>,
    pub b_u: DMatrix<f64>,
    pub b_v: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub n: usize,
    pub m: usize,
    pub r: usize,
}

impl LinearPlant {
    pub fn new(a: DMatrix<f64>, b_u: DMatrix<f64>, r: usize) -> Result<Self> {
        let n = a.nrows();
        if !a.is_square() {
            return Err(Error::Dimension("A must be square".into()));
        }
        if b_u.nrows() != n {
            return Err(Error::Dimension("B_u row count must match A".into()));
        }
        let m = b_u.ncols();
        let (b_v, b) = decompose_input_matrix(&b_u, r)?;
        let plant = Self {
            a,
            b_u,
            b_v,
            b,
            n,
            m,
            r,
        };
        if (&plant.b_v * &plant.b - &plant.b_u).amax() > 1e-10 {
            return Err(Error::Dimension("B_u != B_v B after decomposition".into()));
        }
        Ok(plant)
    }

    /// `(A11, A12, A21, A22)` blocks with `A11` of size `(n-r) x (n-r)`.
    pub fn a_blocks(&self) -> (DMatrix<f64>, DMatrix<f64>, DMatrix<f64>, DMatrix<f64>) {
        let q = self.n - self.r;
        (
            self.a.view((0, 0), (q, q)).into(),
            self.a.view((0, q), (q, self.r)).into(),
            self.a.view((q, 0), (self.r, q)).into(),
            self.a.view((q, q), (self.r, self.r)).into(),
        )
    }

    /// Bottom block `[A21 A22]`, the rows driving the controlled states.
    pub fn a2(&self) -> DMatrix<f64> {
        self.a.view((self.n - self.r, 0), (self.r, self.n)).into()
    }
}

/// Split `B_u` into `B_v = [0; I_r]` and the bottom-block `B`. Rejects inputs
/// whose upper `(n-r) x m` block is not zero within [`UPPER_BLOCK_TOL`]
/// (a state transformation could repair that, but is out of scope here).
pub fn decompose_input_matrix(
    b_u: &DMatrix<f64>,
    r: usize,
) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let (n, m) = b_u.shape();
    if r == 0 || r > n || r > m {
        return Err(Error::Dimension(format!("invalid r = {r} for {n}x{m} B_u")));
    }
    let upper = b_u.view((0, 0), (n - r, m));
    let upper_max = if n > r { upper.amax() } else { 0.0 };
    if upper_max > UPPER_BLOCK_TOL {
        return Err(Error::Dimension(format!(
            "upper block of B_u is not zero (max |entry| = {upper_max:.3e}); \
             the canonical [0; I] input structure is required"
        )));
    }
    let b: DMatrix<f64> = b_u.view((n - r, 0), (r, m)).into();
    let sv = b.clone().svd(false, false).singular_values;
    if sv.min() <= numerics::RANK_TOL * sv.max() {
        return Err(Error::RankDeficient("bottom block of B_u".into()));
    }
    let mut b_v = DMatrix::<f64>::zeros(n, r);
    for i in 0..r {
        b_v[(n - r + i, i)] = 1.0;
    }
    Ok((b_v, b))
}

/// Structural-assumption report: `A11` Hurwitz and canonical `B_v`.
#[derive(Debug, Clone)]
pub struct AssumptionReport {
    pub a11_eigenvalues: Vec<Complex<f64>>,
    pub a11_hurwitz: bool,
    pub b_v_canonical: bool,
}

/// Report-only check of the block assumptions; never fails.
pub fn validate_assumptions(plant: &LinearPlant) -> AssumptionReport {
    let (a11, _, _, _) = plant.a_blocks();
    let eigs: Vec<Complex<f64>> = if a11.is_empty() {
        Vec::new()
    } else {
        a11.complex_eigenvalues().iter().copied().collect()
    };
    let a11_hurwitz = eigs.iter().all(|l| l.re < 0.0);
    let mut canonical = DMatrix::<f64>::zeros(plant.n, plant.r);
    for i in 0..plant.r {
        canonical[(plant.n - plant.r + i, i)] = 1.0;
    }
    AssumptionReport {
        a11_eigenvalues: eigs,
        a11_hurwitz,
        b_v_canonical: (&plant.b_v - canonical).amax() <= 1e-12,
    }
}

/// Actuator position limits and first-order lag. `u_max` is the symmetric
/// magnitude used by all box arithmetic; `phys_lo/phys_hi` keep the true,
/// possibly asymmetric range for the physical clamp.
#[derive(Debug, Clone)]
pub struct ActuatorBank {
    pub u_max: DVector<f64>,
    pub phys_lo: DVector<f64>,
    pub phys_hi: DVector<f64>,
    pub tau: f64,
    pub u_act: DVector<f64>,
}

impl ActuatorBank {
    /// Symmetric limits: physical range equals `[-u_max, u_max]`.
    pub fn symmetric(u_max: DVector<f64>, tau: f64) -> Result<Self> {
        let lo = -&u_max;
        let hi = u_max.clone();
        Self::new(u_max, lo, hi, tau)
    }

    pub fn new(
        u_max: DVector<f64>,
        phys_lo: DVector<f64>,
        phys_hi: DVector<f64>,
        tau: f64,
    ) -> Result<Self> {
        if tau <= 0.0 {
            return Err(Error::Config("actuator time constant must be positive".into()));
        }
        if u_max.iter().any(|&x| x <= 0.0) {
            return Err(Error::Config("actuator limits must be positive".into()));
        }
        let m = u_max.len();
        if phys_lo.len() != m || phys_hi.len() != m {
            return Err(Error::Dimension("actuator limit lengths disagree".into()));
        }
        for j in 0..m {
            // symmetric box must sit inside the physical range
            if phys_lo[j] > -u_max[j] || phys_hi[j] < u_max[j] {
                return Err(Error::Config(format!(
                    "symmetric limit {} exceeds physical range [{}, {}] on channel {j}",
                    u_max[j], phys_lo[j], phys_hi[j]
                )));
            }
        }
        let u_act = DVector::zeros(m);
        Ok(Self {
            u_max,
            phys_lo,
            phys_hi,
            tau,
            u_act,
        })
    }

    /// Hard physical clamp applied after integration.
    pub fn clamp_positions(&mut self) {
        for j in 0..self.u_act.len() {
            self.u_act[j] = self.u_act[j].clamp(self.phys_lo[j], self.phys_hi[j]);
        }
    }
}

/// Piecewise-constant, right-continuous effectiveness schedule. Entries are
/// the diagonals of `Lambda`.
#[derive(Debug, Clone)]
pub struct FaultSchedule {
    entries: Vec<(f64, DVector<f64>)>,
}

impl FaultSchedule {
    /// Switch times must strictly increase; diagonal values lie in (0, 1].
    pub fn new(entries: Vec<(f64, DVector<f64>)>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::Config("fault schedule is empty".into()));
        }
        for w in entries.windows(2) {
            if w[1].0 <= w[0].0 {
                return Err(Error::Config("fault switch times must strictly increase".into()));
            }
        }
        for (_, lam) in &entries {
            if lam.iter().any(|&l| l <= 0.0 || l > 1.0) {
                return Err(Error::Config("effectiveness entries must be in (0, 1]".into()));
            }
        }
        Ok(Self { entries })
    }

    /// Identity effectiveness for all time.
    pub fn healthy(m: usize) -> Self {
        Self {
            entries: vec![(0.0, DVector::from_element(m, 1.0))],
        }
    }

    /// Diagonal of `Lambda(t)`; right-continuous at switch times.
    pub fn lambda_at(&self, t: f64) -> &DVector<f64> {
        let mut current = &self.entries[0].1;
        for (time, lam) in &self.entries {
            if t >= *time {
                current = lam;
            } else {
                break;
            }
        }
        current
    }

    pub fn entries(&self) -> &[(f64, DVector<f64>)] {
        &self.entries
    }
}

/// Per-channel sinusoidal disturbance acting on the r moment channels.
#[derive(Debug, Clone)]
pub struct DisturbanceSpec {
    pub amplitude: DVector<f64>,
    pub frequency: DVector<f64>,
}

impl DisturbanceSpec {
    pub fn new(amplitude: DVector<f64>, frequency: DVector<f64>) -> Result<Self> {
        if amplitude.len() != frequency.len() {
            return Err(Error::Dimension("disturbance spec lengths disagree".into()));
        }
        Ok(Self {
            amplitude,
            frequency,
        })
    }

    pub fn zero(r: usize) -> Self {
        Self {
            amplitude: DVector::zeros(r),
            frequency: DVector::zeros(r),
        }
    }

    pub fn value(&self, t: f64) -> DVector<f64> {
        DVector::from_fn(self.amplitude.len(), |i, _| {
            self.amplitude[i] * (self.frequency[i] * t).sin()
        })
    }

    /// Certified per-channel bounds `|d_i(t)| <= L_bar_i`.
    pub fn l_bar(&self) -> DVector<f64> {
        self.amplitude.abs()
    }

    /// `||d(t)|| <= L_bar`.
    pub fn l_bar_norm(&self) -> f64 {
        self.amplitude.norm()
    }
}

/// Gaussian measurement noise on all states, deterministic per seed.
#[derive(Debug, Clone)]
pub struct NoiseSpec {
    pub sigma_x: f64,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn none() -> Self {
        Self {
            sigma_x: 0.0,
            seed: 0,
        }
    }

    pub fn stream(&self) -> NoiseStream {
        NoiseStream {
            sigma: self.sigma_x,
            rng: ChaCha8Rng::seed_from_u64(self.seed),
        }
    }
}

/// Seeded Gaussian sample stream (Box-Muller over ChaCha draws).
pub struct NoiseStream {
    sigma: f64,
    rng: ChaCha8Rng,
}

impl NoiseStream {
    pub fn sample(&mut self, n: usize) -> DVector<f64> {
        if self.sigma == 0.0 {
            return DVector::zeros(n);
        }
        DVector::from_fn(n, |_, _| {
            let u1: f64 = self.rng.random_range(f64::MIN_POSITIVE..1.0);
            let u2: f64 = self.rng.random_range(0.0..1.0);
            self.sigma * (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
        })
    }
}

/// `x' = A x + B_v (B Lambda(t) u + d(t))`.
pub fn plant_derivative(
    plant: &LinearPlant,
    x: &DVector<f64>,
    u_act: &DVector<f64>,
    t: f64,
    fault: &FaultSchedule,
    dist: &DisturbanceSpec,
) -> Result<DVector<f64>> {
    if x.len() != plant.n || u_act.len() != plant.m {
        return Err(Error::Dimension("plant_derivative operands disagree".into()));
    }
    let lam = fault.lambda_at(t);
    let scaled = u_act.component_mul(lam);
    let net = &plant.b * scaled + dist.value(t);
    Ok(&plant.a * x + &plant.b_v * net)
}

/// First-order actuator response `(u_cmd - u_act) / tau`.
pub fn actuator_derivative(u_act: &DVector<f64>, u_cmd: &DVector<f64>, tau: f64) -> DVector<f64> {
    (u_cmd - u_act) / tau
}

/// Bottom `r` rows of `x_dot - A x`: the realized net moment `B Lambda u + d`.
/// Feeding a noisy state measurement makes the noise enter through `A x`.
pub fn net_moment(x_dot: &DVector<f64>, x: &DVector<f64>, plant: &LinearPlant) -> DVector<f64> {
    let resid = x_dot - &plant.a * x;
    resid.rows(plant.n - plant.r, plant.r).into()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::admire;
    use approx::assert_relative_eq;

    fn toy_plant() -> LinearPlant {
        // B_u = [0; I2] * [1 1; 0 1]
        let a = -DMatrix::<f64>::identity(3, 3);
        let b_u = DMatrix::from_row_slice(3, 2, &[0.0, 0.0, 1.0, 1.0, 0.0, 1.0]);
        LinearPlant::new(a, b_u, 2).unwrap()
    }

    #[test]
    fn decompose_reads_off_blocks() {
        let p = toy_plant();
        assert_relative_eq!(p.b, DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 0.0, 1.0]));
        assert_relative_eq!(&p.b_v * &p.b, p.b_u);
    }

    #[test]
    fn decompose_rejects_nonzero_upper_block() {
        let mut b_u = DMatrix::from_row_slice(3, 2, &[0.0, 0.0, 1.0, 1.0, 0.0, 1.0]);
        b_u[(0, 0)] = 1e-3;
        assert!(decompose_input_matrix(&b_u, 2).is_err());
    }

    #[test]
    fn admire_bottom_rows() {
        let preset = admire::AdmirePreset::new();
        let plant = preset.plant().unwrap();
        // B equals rows 3-5 of the printed B_u
        for i in 0..3 {
            for j in 0..4 {
                assert_relative_eq!(plant.b[(i, j)], admire::B_U[2 + i][j]);
            }
        }
        let rep = validate_assumptions(&plant);
        assert!(rep.a11_hurwitz);
        assert!(rep.b_v_canonical);
        let mut eigs: Vec<f64> = rep.a11_eigenvalues.iter().map(|l| l.re).collect();
        eigs.sort_by(f64::total_cmp);
        assert_relative_eq!(eigs[0], -0.5432, epsilon = 1e-12);
        assert_relative_eq!(eigs[1], -0.1179, epsilon = 1e-12);
    }

    #[test]
    fn scalar_unstable_block_reported() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        let b_u = DMatrix::from_row_slice(2, 1, &[0.0, 1.0]);
        let plant = LinearPlant::new(a, b_u, 1).unwrap();
        let rep = validate_assumptions(&plant);
        assert!(!rep.a11_hurwitz);
        assert!(rep.b_v_canonical);
    }

    #[test]
    fn derivative_equilibrium_and_columns() {
        let preset = admire::AdmirePreset::new();
        let plant = preset.plant().unwrap();
        let fault = FaultSchedule::healthy(4);
        let dist = DisturbanceSpec::zero(3);
        let zero = plant_derivative(
            &plant,
            &DVector::zeros(5),
            &DVector::zeros(4),
            0.0,
            &fault,
            &dist,
        )
        .unwrap();
        assert_relative_eq!(zero, DVector::zeros(5));

        // x = e1 picks out column 1 of A
        let mut x = DVector::zeros(5);
        x[0] = 1.0;
        let dx = plant_derivative(&plant, &x, &DVector::zeros(4), 0.0, &fault, &dist).unwrap();
        assert_relative_eq!(dx, plant.a.column(0).into_owned(), epsilon = 1e-15);
    }

    #[test]
    fn derivative_with_pseudo_inverse_input() {
        let preset = admire::AdmirePreset::new();
        let plant = preset.plant().unwrap();
        let bp = crate::numerics::right_pseudo_inverse(&plant.b).unwrap();
        let v0 = DVector::from_vec(vec![0.3, -0.2, 0.1]);
        let u = &bp * &v0;
        let fault = FaultSchedule::healthy(4);
        let dist = DisturbanceSpec::zero(3);
        let x = DVector::from_fn(5, |i, _| 0.1 * i as f64);
        let dx = plant_derivative(&plant, &x, &u, 0.0, &fault, &dist).unwrap();
        assert_relative_eq!(dx, &plant.a * &x + &plant.b_v * &v0, epsilon = 1e-12);
    }

    #[test]
    fn actuator_first_order_step() {
        let u0 = DVector::zeros(1);
        let cmd = DVector::from_element(1, 1.0);
        assert_relative_eq!(actuator_derivative(&cmd, &cmd, 0.05), DVector::zeros(1));
        assert_relative_eq!(actuator_derivative(&u0, &cmd, 0.05)[0], 20.0, epsilon = 1e-12);
        // integrate the lag: 63.2% of the command at t = tau within 1%
        let tau = 0.05f64;
        let dt = 1e-5f64;
        let mut u = 0.0;
        let steps = (tau / dt).round() as usize;
        for _ in 0..steps {
            u += dt * (1.0 - u) / tau;
        }
        assert!((u - (1.0 - (-1.0f64).exp())).abs() < 0.01);
    }

    #[test]
    fn net_moment_recovers_forcing() {
        use rand::Rng;
        use rand::SeedableRng;
        let preset = admire::AdmirePreset::new();
        let plant = preset.plant().unwrap();
        let fault = FaultSchedule::new(vec![
            (0.0, DVector::from_element(4, 1.0)),
            (7.0, DVector::from_element(4, 0.85)),
        ])
        .unwrap();
        let dist =
            DisturbanceSpec::new(DVector::from_element(3, 0.1), DVector::from_element(3, 1.0))
                .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..10_000 {
            let x = DVector::from_fn(5, |_, _| rng.random_range(-1.0..1.0));
            let u = DVector::from_fn(4, |_, _| rng.random_range(-0.5..0.5));
            let t = rng.random_range(0.0..15.0);
            let dx = plant_derivative(&plant, &x, &u, t, &fault, &dist).unwrap();
            let net = net_moment(&dx, &x, &plant);
            let expect = &plant.b * u.component_mul(fault.lambda_at(t)) + dist.value(t);
            assert!((net - expect).amax() <= 1e-12);
        }
    }

    #[test]
    fn fault_lookup_is_right_continuous() {
        let sched = FaultSchedule::new(vec![
            (0.0, DVector::from_element(2, 1.0)),
            (7.0, DVector::from_element(2, 0.5)),
        ])
        .unwrap();
        assert_relative_eq!(sched.lambda_at(6.999)[0], 1.0);
        assert_relative_eq!(sched.lambda_at(7.0)[0], 0.5);
        assert_relative_eq!(sched.lambda_at(100.0)[0], 0.5);
    }

    #[test]
    fn fault_schedule_validation() {
        assert!(FaultSchedule::new(vec![]).is_err());
        assert!(FaultSchedule::new(vec![
            (0.0, DVector::from_element(2, 1.0)),
            (0.0, DVector::from_element(2, 0.5)),
        ])
        .is_err());
        assert!(FaultSchedule::new(vec![(0.0, DVector::from_element(2, 0.0))]).is_err());
        assert!(FaultSchedule::new(vec![(0.0, DVector::from_element(2, 1.1))]).is_err());
    }

    #[test]
    fn noise_stream_is_deterministic() {
        let spec = NoiseSpec {
            sigma_x: 0.0035,
            seed: 99,
        };
        let a: Vec<DVector<f64>> = {
            let mut s = spec.stream();
            (0..10).map(|_| s.sample(5)).collect()
        };
        let b: Vec<DVector<f64>> = {
            let mut s = spec.stream();
            (0..10).map(|_| s.sample(5)).collect()
        };
        assert_eq!(a, b);
    }
}
