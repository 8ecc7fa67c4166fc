//! Plain-text configuration document (TOML) for the design pipeline and the
//! scenario engine. Unknown keys are rejected; missing keys take the
//! documented defaults; the resolved document is echoed into every output.
//!
//! Units: actuator limits in degrees (`*_deg` keys), angular rates and
//! moment-channel quantities in rad and rad/s, times in seconds.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::admire::{AdmirePreset, FaultCase};
use crate::allocator::AllocatorConfig;
use crate::design::{self, DesignOptions, DesignReport, Envelopes, RadiusSampling};
use crate::error::{Error, Result};
use crate::plant::{ActuatorBank, DisturbanceSpec, FaultSchedule, LinearPlant, NoiseSpec};
use crate::sim::{AllocatorKind, Scenario};
use crate::smc::{ReferenceSignal, SmcConfig};

const DEG: f64 = std::f64::consts::PI / 180.0;

fn vec_to_dvector(v: &[f64]) -> DVector<f64> {
    DVector::from_vec(v.to_vec())
}

fn rows_to_matrix(rows: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    if rows.is_empty() {
        return Err(Error::Config("empty matrix".into()));
    }
    let cols = rows[0].len();
    if rows.iter().any(|r| r.len() != cols) {
        return Err(Error::Config("ragged matrix rows".into()));
    }
    Ok(DMatrix::from_fn(rows.len(), cols, |i, j| rows[i][j]))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlantSection {
    pub a: Vec<Vec<f64>>,
    pub b_u: Vec<Vec<f64>>,
    pub r: usize,
    /// Symmetric limit magnitudes, degrees.
    pub u_max_deg: Vec<f64>,
    /// Physical range, degrees; defaults to the symmetric range.
    #[serde(default)]
    pub phys_lo_deg: Option<Vec<f64>>,
    #[serde(default)]
    pub phys_hi_deg: Option<Vec<f64>>,
    #[serde(default = "default_tau")]
    pub tau: f64,
}

fn default_tau() -> f64 {
    0.05
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvelopesSection {
    pub x1_bar: f64,
    pub x2_bar: f64,
    pub r_bar_i: Vec<f64>,
    pub rdot_bar_i: Vec<f64>,
    pub l_bar_i: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DesignSection {
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default = "default_zeta_frac")]
    pub zeta_frac: f64,
    #[serde(default = "default_grid_density")]
    pub lambda_grid_density: usize,
    #[serde(default = "default_directions")]
    pub n_directions: usize,
    #[serde(default = "default_design_seed")]
    pub seed: u64,
    /// "nominal" or "full".
    #[serde(default = "default_radius_sampling")]
    pub radius_sampling: String,
    /// Working virtual-control bounds; omitted means auto-scaled.
    #[serde(default)]
    pub m_bounds: Option<Vec<f64>>,
    pub envelopes: EnvelopesSection,
}

fn default_epsilon() -> f64 {
    1e-3
}
fn default_zeta_frac() -> f64 {
    0.05
}
fn default_grid_density() -> usize {
    16
}
fn default_directions() -> usize {
    1000
}
fn default_design_seed() -> u64 {
    11
}
fn default_radius_sampling() -> String {
    "nominal".into()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AllocatorSection {
    /// "adaptive" or "pseudo_inverse".
    #[serde(default = "default_allocator_kind")]
    pub kind: String,
    #[serde(default = "default_ell")]
    pub ell: f64,
    #[serde(default = "default_gamma_theta")]
    pub gamma_theta: f64,
}

fn default_allocator_kind() -> String {
    "adaptive".into()
}
fn default_ell() -> f64 {
    4.0
}
fn default_gamma_theta() -> f64 {
    100.0
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SmcSection {
    /// Sliding-surface rate; must be admitted by the design report.
    pub lambda_bar: f64,
    #[serde(default = "default_phi")]
    pub phi: f64,
}

fn default_phi() -> f64 {
    0.05
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FaultSection {
    pub times: Vec<f64>,
    pub lambdas: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DisturbanceSection {
    pub amplitude: Vec<f64>,
    pub frequency: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReferenceSection {
    /// "zero", "sinusoid" or "smooth_doublet".
    pub kind: String,
    #[serde(default)]
    pub amplitude: Vec<f64>,
    #[serde(default)]
    pub frequency: Vec<f64>,
    #[serde(default)]
    pub edges: Vec<[f64; 4]>,
    #[serde(default = "default_ramp")]
    pub ramp: f64,
}

fn default_ramp() -> f64 {
    1.0
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSection {
    #[serde(default = "default_duration")]
    pub duration: f64,
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub noise_sigma: f64,
    #[serde(default)]
    pub x0: Option<Vec<f64>>,
    #[serde(default = "default_metrics_window")]
    pub metrics_window: [f64; 2],
    #[serde(default = "default_fault_window")]
    pub fault_window: [f64; 2],
    pub fault: FaultSection,
    pub disturbance: DisturbanceSection,
    pub reference: ReferenceSection,
}

fn default_duration() -> f64 {
    15.0
}
fn default_dt() -> f64 {
    1e-3
}
fn default_metrics_window() -> [f64; 2] {
    [12.0, 15.0]
}
fn default_fault_window() -> [f64; 2] {
    [7.0, 8.0]
}

#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default)]
    pub trace: Option<String>,
    #[serde(default)]
    pub metrics: Option<String>,
}

/// Top-level configuration document.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigDocument {
    pub plant: PlantSection,
    pub design: DesignSection,
    #[serde(default = "default_allocator_section")]
    pub allocator: AllocatorSection,
    pub smc: SmcSection,
    pub scenario: ScenarioSection,
    #[serde(default)]
    pub output: OutputSection,
}

fn default_allocator_section() -> AllocatorSection {
    AllocatorSection {
        kind: default_allocator_kind(),
        ell: default_ell(),
        gamma_theta: default_gamma_theta(),
    }
}

impl ConfigDocument {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    /// Resolved document, re-serialized with all defaults filled in.
    pub fn to_toml_string(&self) -> String {
        toml::to_string_pretty(self).unwrap_or_default()
    }

    /// Named preset: `admire`, `admire-l1`, `admire-l2`, `admire-l3`.
    pub fn preset(name: &str) -> Result<Self> {
        let case = match name {
            "admire" | "admire-l1" => FaultCase::Lambda1,
            "admire-l2" => FaultCase::Lambda2,
            "admire-l3" => FaultCase::Lambda3,
            other => {
                return Err(Error::Config(format!(
                    "unknown preset '{other}' (expected admire, admire-l1, admire-l2, admire-l3)"
                )))
            }
        };
        let p = AdmirePreset::new();
        let fault = match case {
            FaultCase::Lambda1 => FaultSection {
                times: vec![0.0],
                lambdas: vec![vec![1.0; 4]],
            },
            FaultCase::Lambda2 => FaultSection {
                times: vec![0.0, p.fault_time],
                lambdas: vec![vec![1.0; 4], vec![0.85; 4]],
            },
            FaultCase::Lambda3 => FaultSection {
                times: vec![0.0, p.fault_time],
                lambdas: vec![vec![1.0; 4], vec![0.5; 4]],
            },
        };
        let env = p.envelopes();
        let doublets = p.reference_doublets();
        Ok(Self {
            plant: PlantSection {
                a: (0..5).map(|i| (0..5).map(|j| p.a[(i, j)]).collect()).collect(),
                b_u: (0..5)
                    .map(|i| (0..4).map(|j| p.b_u_printed[(i, j)]).collect())
                    .collect(),
                r: 3,
                u_max_deg: p.u_max.iter().map(|x| x / DEG).collect(),
                phys_lo_deg: Some(p.phys_lo.iter().map(|x| x / DEG).collect()),
                phys_hi_deg: Some(p.phys_hi.iter().map(|x| x / DEG).collect()),
                tau: p.tau,
            },
            design: DesignSection {
                epsilon: 1e-3,
                zeta_frac: 0.05,
                lambda_grid_density: 16,
                n_directions: 1000,
                seed: 11,
                radius_sampling: "nominal".into(),
                m_bounds: Some(p.m_bounds.iter().copied().collect()),
                envelopes: EnvelopesSection {
                    x1_bar: env.x1_bar,
                    x2_bar: env.x2_bar,
                    r_bar_i: env.r_bar_i.iter().copied().collect(),
                    rdot_bar_i: env.rdot_bar_i.iter().copied().collect(),
                    l_bar_i: env.l_bar_i.iter().copied().collect(),
                },
            },
            allocator: AllocatorSection {
                kind: "adaptive".into(),
                ell: p.ell,
                gamma_theta: p.gamma_theta,
            },
            smc: SmcSection {
                lambda_bar: p.lambda_bar,
                phi: p.phi,
            },
            scenario: ScenarioSection {
                duration: p.duration,
                dt: p.dt,
                seed: 2024,
                noise_sigma: p.sigma_x,
                x0: None,
                metrics_window: [12.0, 15.0],
                fault_window: [p.fault_time, p.fault_time + 1.0],
                fault,
                disturbance: DisturbanceSection {
                    amplitude: vec![p.disturbance_amplitude; 3],
                    frequency: vec![p.disturbance_frequency; 3],
                },
                reference: ReferenceSection {
                    kind: "smooth_doublet".into(),
                    amplitude: doublets.iter().map(|d| d.0).collect(),
                    frequency: vec![],
                    edges: doublets.iter().map(|d| d.1).collect(),
                    ramp: 1.0,
                },
            },
            output: OutputSection::default(),
        })
    }

    pub fn plant(&self) -> Result<LinearPlant> {
        // the force rows above the moment block are zeroed; the effective
        // plant treats the surfaces as pure moment generators
        let a = rows_to_matrix(&self.plant.a)?;
        let mut b_u = rows_to_matrix(&self.plant.b_u)?;
        let n = b_u.nrows();
        let r = self.plant.r;
        for i in 0..n.saturating_sub(r) {
            for j in 0..b_u.ncols() {
                b_u[(i, j)] = 0.0;
            }
        }
        LinearPlant::new(a, b_u, r)
    }

    pub fn u_max(&self) -> DVector<f64> {
        vec_to_dvector(&self.plant.u_max_deg) * DEG
    }

    pub fn actuators(&self) -> Result<ActuatorBank> {
        let u_max = self.u_max();
        let lo = self
            .plant
            .phys_lo_deg
            .as_ref()
            .map(|v| vec_to_dvector(v) * DEG)
            .unwrap_or_else(|| -&u_max);
        let hi = self
            .plant
            .phys_hi_deg
            .as_ref()
            .map(|v| vec_to_dvector(v) * DEG)
            .unwrap_or_else(|| u_max.clone());
        ActuatorBank::new(u_max, lo, hi, self.plant.tau)
    }

    pub fn envelopes(&self) -> Envelopes {
        let e = &self.design.envelopes;
        Envelopes {
            x1_bar: e.x1_bar,
            x2_bar: e.x2_bar,
            r_bar_i: vec_to_dvector(&e.r_bar_i),
            rdot_bar_i: vec_to_dvector(&e.rdot_bar_i),
            l_bar_i: vec_to_dvector(&e.l_bar_i),
        }
    }

    pub fn design_options(&self) -> Result<DesignOptions> {
        let sampling = match self.design.radius_sampling.as_str() {
            "nominal" => RadiusSampling::Nominal,
            "full" => RadiusSampling::Full,
            other => {
                return Err(Error::Config(format!(
                    "radius_sampling must be 'nominal' or 'full', got '{other}'"
                )))
            }
        };
        Ok(DesignOptions {
            epsilon: self.design.epsilon,
            zeta_frac: self.design.zeta_frac,
            lambda_grid_density: self.design.lambda_grid_density,
            n_directions: self.design.n_directions,
            seed: self.design.seed,
            radius_sampling: sampling,
            m_override: self.design.m_bounds.as_ref().map(|v| vec_to_dvector(v)),
        })
    }

    pub fn run_design(&self) -> Result<DesignReport> {
        let plant = self.plant()?;
        design::run_pipeline(&plant, &self.u_max(), &self.envelopes(), &self.design_options()?)
    }

    pub fn allocator_kind(&self) -> Result<AllocatorKind> {
        match self.allocator.kind.as_str() {
            "adaptive" => Ok(AllocatorKind::Adaptive),
            "pseudo_inverse" | "pseudo" => Ok(AllocatorKind::PseudoInverse),
            other => Err(Error::Config(format!(
                "allocator kind must be 'adaptive' or 'pseudo_inverse', got '{other}'"
            ))),
        }
    }

    pub fn reference(&self) -> Result<ReferenceSignal> {
        let sec = &self.scenario.reference;
        let r = self.plant.r;
        let signal = match sec.kind.as_str() {
            "zero" => ReferenceSignal::Zero { r },
            "sinusoid" => ReferenceSignal::Sinusoid {
                amplitude: vec_to_dvector(&sec.amplitude),
                frequency: vec_to_dvector(&sec.frequency),
            },
            "smooth_doublet" => ReferenceSignal::SmoothDoublet {
                amplitude: vec_to_dvector(&sec.amplitude),
                edges: sec.edges.clone(),
                ramp: sec.ramp,
            },
            other => {
                return Err(Error::Config(format!(
                    "reference kind must be zero | sinusoid | smooth_doublet, got '{other}'"
                )))
            }
        };
        let env = self.envelopes();
        crate::sim::make_reference(signal, &env.r_bar_i, &env.rdot_bar_i)
    }

    /// Assemble the scenario, running the design pipeline for the projection
    /// box and the disturbance budget. The configured surface rate must be
    /// admitted by the report.
    pub fn scenario(&self, report: &DesignReport) -> Result<Scenario> {
        let plant = self.plant()?;
        let (n, _m, r) = (plant.n, plant.m, plant.r);
        for i in 0..r {
            if report.w1[i] + self.smc.lambda_bar * report.w2[i] > 0.0 {
                return Err(Error::Config(format!(
                    "configured lambda_bar {} rejected by the feasibility inequality on \
                     channel {i}",
                    self.smc.lambda_bar
                )));
            }
        }
        let alloc_cfg = AllocatorConfig::new(
            self.reference_model_matrix(r),
            self.allocator.ell,
            self.allocator.gamma_theta,
            report.bounds.clone(),
            plant.b.clone(),
        )?;
        let smc = SmcConfig::new(
            self.smc.lambda_bar,
            report.rho.clone(),
            plant.a2(),
            report.m.clone(),
            self.smc.phi,
            DVector::zeros(r),
        )?;
        let fault = FaultSchedule::new(
            self.scenario
                .fault
                .times
                .iter()
                .zip(self.scenario.fault.lambdas.iter())
                .map(|(&t, l)| (t, vec_to_dvector(l)))
                .collect(),
        )?;
        let disturbance = DisturbanceSpec::new(
            vec_to_dvector(&self.scenario.disturbance.amplitude),
            vec_to_dvector(&self.scenario.disturbance.frequency),
        )?;
        let x0 = self
            .scenario
            .x0
            .as_ref()
            .map(|v| vec_to_dvector(v))
            .unwrap_or_else(|| DVector::zeros(n));
        Ok(Scenario {
            actuators: self.actuators()?,
            allocator: self.allocator_kind()?,
            alloc_cfg,
            smc,
            reference: self.reference()?,
            fault,
            disturbance,
            noise: NoiseSpec {
                sigma_x: self.scenario.noise_sigma,
                seed: self.scenario.seed,
            },
            duration: self.scenario.duration,
            dt: self.scenario.dt,
            x0,
            theta0: report.theta_i_star.clone(),
            metrics_window: (self.scenario.metrics_window[0], self.scenario.metrics_window[1]),
            fault_window: (self.scenario.fault_window[0], self.scenario.fault_window[1]),
            plant,
        })
    }

    /// Diagonal reference-model matrix used by the presets; configurable
    /// plants reuse the preset rates.
    fn reference_model_matrix(&self, r: usize) -> DMatrix<f64> {
        let rates = if r == 3 {
            vec![-0.2, -0.1, -0.1]
        } else {
            vec![-0.2; r]
        };
        DMatrix::from_diagonal(&DVector::from_vec(rates))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn preset_round_trips_through_toml() {
        let doc = ConfigDocument::preset("admire-l2").unwrap();
        let text = doc.to_toml_string();
        let back = ConfigDocument::from_toml_str(&text).unwrap();
        // printed matrices survive digit-for-digit
        assert_eq!(doc.plant.a, back.plant.a);
        assert_eq!(doc.plant.b_u, back.plant.b_u);
        assert_eq!(doc.plant.u_max_deg, back.plant.u_max_deg);
        assert_eq!(
            back.plant.b_u[2],
            vec![0.0, -4.2423, 4.2423, 1.4871]
        );
    }

    #[test]
    fn unknown_keys_rejected() {
        let doc = ConfigDocument::preset("admire").unwrap();
        let mut text = doc.to_toml_string();
        text.push_str("\n[extra]\nfoo = 1\n");
        assert!(ConfigDocument::from_toml_str(&text).is_err());
        let bad = text.replace("[plant]", "[plant]\nunknown_key = 3");
        assert!(ConfigDocument::from_toml_str(&bad).is_err());
    }

    #[test]
    fn unknown_preset_rejected() {
        assert!(ConfigDocument::preset("nonesuch").is_err());
    }

    #[test]
    fn preset_builds_feasible_scenario() {
        let doc = ConfigDocument::preset("admire-l2").unwrap();
        let report = doc.run_design().unwrap();
        assert!(report.feasible);
        let sc = doc.scenario(&report).unwrap();
        assert_eq!(sc.plant.n, 5);
        assert_eq!(sc.dt, 1e-3);
    }

    #[test]
    fn lambda_bar_must_be_admitted() {
        let mut doc = ConfigDocument::preset("admire-l1").unwrap();
        doc.smc.lambda_bar = 1e6;
        let report = doc.run_design().unwrap();
        assert!(doc.scenario(&report).is_err());
    }
}
