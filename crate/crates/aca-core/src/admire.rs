//! ADMIRE benchmark preset: the linearized over-actuated aircraft model with
//! canard, elevons and rudder, together with the controller/allocator
//! constants and fault scenarios used throughout the examples and tests.

use nalgebra::{DMatrix, DVector};

use crate::design::{DesignOptions, Envelopes, RadiusSampling};
use crate::error::Result;
use crate::plant::{ActuatorBank, DisturbanceSpec, FaultSchedule, LinearPlant};

/// State matrix, states `[alpha, beta, p, q, r]`.
pub const A: [[f64; 5]; 5] = [
    [-0.5432, 0.0137, 0.0, 0.9778, 0.0],
    [0.0, -0.1179, 0.2215, 0.0, -0.9661],
    [0.0, -10.5123, -0.9967, 0.0, 0.6176],
    [2.6221, -0.0030, 0.0, -0.5057, 0.0],
    [0.0, 0.7075, -0.0939, 0.0, -0.2127],
];

/// Control matrix as printed, inputs `[u_c, u_re, u_le, u_r]`.
pub const B_U: [[f64; 4]; 5] = [
    [0.0069, -0.0866, -0.0866, 0.0004],
    [0.0, 0.0119, -0.0119, 0.0287],
    [0.0, -4.2423, 4.2423, 1.4871],
    [1.6532, -1.2735, -1.2735, 0.0024],
    [0.0, -0.2805, 0.2805, -0.8823],
];

const DEG: f64 = std::f64::consts::PI / 180.0;

/// Scenario fault cases.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FaultCase {
    /// No loss of effectiveness.
    Lambda1,
    /// 0.85 on all actuators from t = 7 s.
    Lambda2,
    /// 0.50 on all actuators from t = 7 s.
    Lambda3,
}

/// All printed model constants plus the preset design/controller parameters.
#[derive(Debug, Clone)]
pub struct AdmirePreset {
    pub a: DMatrix<f64>,
    /// Printed input matrix, including the small alpha/beta force rows.
    pub b_u_printed: DMatrix<f64>,
    /// Symmetric limit magnitudes used by the box arithmetic (canard
    /// tightened to 25 deg).
    pub u_max: DVector<f64>,
    /// True physical ranges (canard [-55, 25] deg).
    pub phys_lo: DVector<f64>,
    pub phys_hi: DVector<f64>,
    pub tau: f64,
    pub sigma_x: f64,
    pub disturbance_amplitude: f64,
    pub disturbance_frequency: f64,
    pub a_m: DMatrix<f64>,
    pub ell: f64,
    pub gamma_theta: f64,
    pub lambda_bar: f64,
    pub phi: f64,
    /// Soft-saturation bounds on the virtual control, validated against the
    /// attainable set by the design pipeline.
    pub m_bounds: DVector<f64>,
    pub dt: f64,
    pub duration: f64,
    pub fault_time: f64,
}

impl Default for AdmirePreset {
    fn default() -> Self {
        Self::new()
    }
}

impl AdmirePreset {
    pub fn new() -> Self {
        Self {
            a: DMatrix::from_fn(5, 5, |i, j| A[i][j]),
            b_u_printed: DMatrix::from_fn(5, 4, |i, j| B_U[i][j]),
            u_max: DVector::from_vec(vec![25.0, 30.0, 30.0, 30.0]) * DEG,
            phys_lo: DVector::from_vec(vec![-55.0, -30.0, -30.0, -30.0]) * DEG,
            phys_hi: DVector::from_vec(vec![25.0, 30.0, 30.0, 30.0]) * DEG,
            tau: 0.05,
            sigma_x: 0.0035,
            disturbance_amplitude: 0.1,
            disturbance_frequency: 1.0,
            a_m: DMatrix::from_diagonal(&DVector::from_vec(vec![-0.2, -0.1, -0.1])),
            ell: 4.0,
            gamma_theta: 100.0,
            lambda_bar: 3.0,
            phi: 0.05,
            m_bounds: DVector::from_vec(vec![1.4, 1.4, 0.3]),
            dt: 1e-3,
            duration: 15.0,
            fault_time: 7.0,
        }
    }

    /// Effective plant: the control-surface force rows (alpha/beta) are
    /// zeroed so the surfaces act as pure moment generators, which gives the
    /// canonical `[0; I]` input structure.
    pub fn plant(&self) -> Result<LinearPlant> {
        let mut b_u = self.b_u_printed.clone();
        for j in 0..4 {
            b_u[(0, j)] = 0.0;
            b_u[(1, j)] = 0.0;
        }
        LinearPlant::new(self.a.clone(), b_u, 3)
    }

    pub fn actuators(&self) -> Result<ActuatorBank> {
        ActuatorBank::new(
            self.u_max.clone(),
            self.phys_lo.clone(),
            self.phys_hi.clone(),
            self.tau,
        )
    }

    pub fn fault(&self, case: FaultCase) -> Result<FaultSchedule> {
        let ones = DVector::from_element(4, 1.0);
        match case {
            FaultCase::Lambda1 => FaultSchedule::new(vec![(0.0, ones)]),
            FaultCase::Lambda2 => FaultSchedule::new(vec![
                (0.0, ones),
                (self.fault_time, DVector::from_element(4, 0.85)),
            ]),
            FaultCase::Lambda3 => FaultSchedule::new(vec![
                (0.0, ones),
                (self.fault_time, DVector::from_element(4, 0.5)),
            ]),
        }
    }

    pub fn disturbance(&self) -> DisturbanceSpec {
        DisturbanceSpec {
            amplitude: DVector::from_element(3, self.disturbance_amplitude),
            frequency: DVector::from_element(3, self.disturbance_frequency),
        }
    }

    /// Initial-state / reference envelopes feeding the sliding-surface rate
    /// selection. Chosen so that the preset `lambda_bar = 3` is admissible.
    pub fn envelopes(&self) -> Envelopes {
        Envelopes {
            x1_bar: 0.01,
            x2_bar: 0.002,
            r_bar_i: DVector::from_element(3, 0.002),
            rdot_bar_i: DVector::from_element(3, 0.004),
            l_bar_i: DVector::from_element(3, self.disturbance_amplitude),
        }
    }

    pub fn design_options(&self) -> DesignOptions {
        DesignOptions {
            m_override: Some(self.m_bounds.clone()),
            radius_sampling: RadiusSampling::Nominal,
            ..DesignOptions::default()
        }
    }

    /// Reference doublet amplitudes (rad/s) and edge times for the three
    /// rate channels; C1 cosine ramps of one second.
    pub fn reference_doublets(&self) -> [(f64, [f64; 4]); 3] {
        [
            (0.002, [1.0, 3.0, 9.0, 11.0]),
            (0.002, [2.0, 4.0, 10.0, 12.0]),
            (0.001, [1.5, 3.5, 9.5, 11.5]),
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn printed_matrices_round_trip() {
        let p = AdmirePreset::new();
        for i in 0..5 {
            for j in 0..5 {
                assert_eq!(p.a[(i, j)], A[i][j]);
            }
            for j in 0..4 {
                assert_eq!(p.b_u_printed[(i, j)], B_U[i][j]);
            }
        }
    }

    #[test]
    fn effective_plant_decomposes() {
        let p = AdmirePreset::new();
        let plant = p.plant().unwrap();
        assert_eq!((plant.n, plant.m, plant.r), (5, 4, 3));
        assert_relative_eq!(&plant.b_v * &plant.b, plant.b_u, epsilon = 1e-12);
    }

    #[test]
    fn fault_schedules_match_cases() {
        let p = AdmirePreset::new();
        let l2 = p.fault(FaultCase::Lambda2).unwrap();
        assert_eq!(l2.lambda_at(6.9)[0], 1.0);
        assert_eq!(l2.lambda_at(7.0)[0], 0.85);
        let l3 = p.fault(FaultCase::Lambda3).unwrap();
        assert_eq!(l3.lambda_at(7.0)[0], 0.5);
        let l1 = p.fault(FaultCase::Lambda1).unwrap();
        assert_eq!(l1.lambda_at(14.0)[0], 1.0);
    }

    #[test]
    fn canard_symmetrization() {
        let p = AdmirePreset::new();
        assert_relative_eq!(p.u_max[0], 25.0 * DEG);
        assert_relative_eq!(p.phys_lo[0], -55.0 * DEG);
        let bank = p.actuators().unwrap();
        let mut b2 = bank;
        b2.u_act[0] = -1.0; // -57 deg
        b2.clamp_positions();
        assert_relative_eq!(b2.u_act[0], -55.0 * DEG);
    }
}
