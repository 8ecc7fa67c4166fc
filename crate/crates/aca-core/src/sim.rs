//! Deterministic closed-loop scenario engine: outer sliding-mode controller,
//! soft saturation, allocator (adaptive or pseudo-inverse), first-order
//! actuators, plant with fault/disturbance/noise schedules, trace recording
//! and metrics.

use nalgebra::{DMatrix, DVector};

use crate::allocator::{
    adaptive_law, allocate, filter_derivative, pseudo_inverse_allocate,
    reference_model_derivative, AllocatorConfig, AllocatorState,
};
use crate::error::{Error, Result};
use crate::numerics::right_pseudo_inverse;
use crate::plant::{
    actuator_derivative, net_moment, plant_derivative, ActuatorBank, DisturbanceSpec,
    FaultSchedule, LinearPlant, NoiseSpec,
};
use crate::smc::{control_law, sliding_surface, soft_saturate, ReferenceSignal, SmcConfig};

/// Norm threshold treated as divergence (early exit).
pub const DIVERGENCE_NORM: f64 = 50.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AllocatorKind {
    Adaptive,
    PseudoInverse,
}

/// Full closed-loop experiment description.
#[derive(Clone)]
pub struct Scenario {
    pub plant: LinearPlant,
    pub actuators: ActuatorBank,
    pub allocator: AllocatorKind,
    pub alloc_cfg: AllocatorConfig,
    pub smc: SmcConfig,
    pub reference: ReferenceSignal,
    pub fault: FaultSchedule,
    pub disturbance: DisturbanceSpec,
    pub noise: NoiseSpec,
    pub duration: f64,
    pub dt: f64,
    pub x0: DVector<f64>,
    /// Initial adaptive matrix (the nominal gains in the presets).
    pub theta0: DMatrix<f64>,
    /// Window for the steady-state metrics, in seconds.
    pub metrics_window: (f64, f64),
    /// Window right after the (last) fault for the re-convergence metric.
    pub fault_window: (f64, f64),
}

impl Scenario {
    fn validate(&self) -> Result<()> {
        if self.dt <= 0.0 || self.duration < self.dt {
            return Err(Error::Config("need dt > 0 and duration >= dt".into()));
        }
        let (n, m, r) = (self.plant.n, self.plant.m, self.plant.r);
        if self.x0.len() != n {
            return Err(Error::Config("initial state length".into()));
        }
        if self.theta0.shape() != (r, m) {
            return Err(Error::Config("theta0 shape".into()));
        }
        if self.actuators.u_max.len() != m
            || self.smc.r() != r
            || self.smc.n() != n
            || self.reference.r() != r
            || self.disturbance.amplitude.len() != r
        {
            return Err(Error::Config("scenario sub-config dimensions disagree".into()));
        }
        if !self.alloc_cfg.bounds.contains(&self.theta0, 1e-12) {
            return Err(Error::Config("theta0 outside the projection box".into()));
        }
        Ok(())
    }
}

/// Uniformly sampled closed-loop time series. One row per step, columns
/// `t, x[n], y[r], y_m[r], e[r], v[r], s[r], u_cmd[m], u_act[m],
/// theta[r*m] (row-major), sat_count, clamp_count`.
#[derive(Debug, Clone)]
pub struct Trace {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    pub diverged: bool,
}

impl Trace {
    fn columns_for(n: usize, m: usize, r: usize) -> Vec<String> {
        let mut cols = vec!["t".to_string()];
        let push_block = |cols: &mut Vec<String>, name: &str, k: usize| {
            for i in 0..k {
                cols.push(format!("{name}{i}"));
            }
        };
        push_block(&mut cols, "x", n);
        push_block(&mut cols, "y", r);
        push_block(&mut cols, "ym", r);
        push_block(&mut cols, "e", r);
        push_block(&mut cols, "v", r);
        push_block(&mut cols, "s", r);
        push_block(&mut cols, "ucmd", m);
        push_block(&mut cols, "uact", m);
        for i in 0..r {
            for j in 0..m {
                cols.push(format!("theta{i}{j}"));
            }
        }
        cols.push("sat_count".to_string());
        cols.push("clamp_count".to_string());
        cols
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let idx = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[idx]).collect())
    }

    pub fn to_csv(&self, header_comments: &[String]) -> String {
        let mut out = String::new();
        for c in header_comments {
            out.push_str("# ");
            out.push_str(c);
            out.push('\n');
        }
        out.push_str(&self.columns.join(","));
        out.push('\n');
        for row in &self.rows {
            let line: Vec<String> = row.iter().map(|v| format!("{v:.9e}")).collect();
            out.push_str(&line.join(","));
            out.push('\n');
        }
        out
    }
}

/// Scalar summaries of one run.
#[derive(Debug, Clone)]
pub struct Metrics {
    /// Per-axis RMS of `x2 - r` over the metrics window.
    pub tracking_rms: DVector<f64>,
    pub max_state_norm: f64,
    /// Worst `|u_i| / u_max_i` over the run.
    pub max_actuator_frac: f64,
    /// RMS of `||B Lambda u + d - v||` over the metrics window.
    pub alloc_err_rms_window: f64,
    /// Same, over the post-fault window.
    pub alloc_err_rms_fault_window: f64,
    /// RMS of `||B Lambda u - v||` (the realized-moment mismatch) over both
    /// windows.
    pub realized_err_rms_window: f64,
    pub realized_err_rms_fault_window: f64,
    pub final_e_norm: f64,
    pub diverged: bool,
    pub soft_sat_steps: usize,
    pub theta_clamp_events: usize,
    pub hard_clamp_steps: usize,
}

impl Metrics {
    pub fn to_text(&self) -> String {
        use std::fmt::Write;
        let mut s = String::new();
        let track: Vec<String> = self.tracking_rms.iter().map(|x| format!("{x:.6}")).collect();
        let _ = writeln!(s, "tracking_rms = {}", track.join(" "));
        let _ = writeln!(s, "max_state_norm = {:.6}", self.max_state_norm);
        let _ = writeln!(s, "max_actuator_frac = {:.6}", self.max_actuator_frac);
        let _ = writeln!(s, "alloc_err_rms_window = {:.6}", self.alloc_err_rms_window);
        let _ = writeln!(
            s,
            "alloc_err_rms_fault_window = {:.6}",
            self.alloc_err_rms_fault_window
        );
        let _ = writeln!(s, "realized_err_rms_window = {:.6}", self.realized_err_rms_window);
        let _ = writeln!(
            s,
            "realized_err_rms_fault_window = {:.6}",
            self.realized_err_rms_fault_window
        );
        let _ = writeln!(s, "final_e_norm = {:.6}", self.final_e_norm);
        let _ = writeln!(s, "diverged = {}", self.diverged);
        let _ = writeln!(s, "soft_sat_steps = {}", self.soft_sat_steps);
        let _ = writeln!(s, "theta_clamp_events = {}", self.theta_clamp_events);
        let _ = writeln!(s, "hard_clamp_steps = {}", self.hard_clamp_steps);
        s
    }
}

/// Build a reference signal and verify its certified bounds against the
/// design envelopes.
pub fn make_reference(
    signal: ReferenceSignal,
    r_bar_i: &DVector<f64>,
    rdot_bar_i: &DVector<f64>,
) -> Result<ReferenceSignal> {
    let rb = signal.r_bar_i();
    let rdb = signal.rdot_bar_i();
    for i in 0..rb.len() {
        if rb[i] > r_bar_i[i] + 1e-12 {
            return Err(Error::Envelope(format!(
                "reference bound {:.4} exceeds envelope {:.4} on channel {i}",
                rb[i], r_bar_i[i]
            )));
        }
        if rdb[i] > rdot_bar_i[i] + 1e-12 {
            return Err(Error::Envelope(format!(
                "reference rate bound {:.4} exceeds envelope {:.4} on channel {i}",
                rdb[i], rdot_bar_i[i]
            )));
        }
    }
    Ok(signal)
}

/// Run one scenario to completion (or divergence).
pub fn run_scenario(sc: &Scenario) -> Result<(Trace, Metrics)> {
    sc.validate()?;
    let plant = &sc.plant;
    let (n, m, r) = (plant.n, plant.m, plant.r);
    let steps = (sc.duration / sc.dt).round() as usize;
    let dt = sc.dt;

    let b_pinv = right_pseudo_inverse(&plant.b)?;
    let mut noise = sc.noise.stream();
    let mut x = sc.x0.clone();
    let mut bank = sc.actuators.clone();
    let mut state = AllocatorState::new(sc.theta0.clone());
    let mut smc = sc.smc.clone();
    smc.x2_0 = x.rows(n - r, r).into();
    smc.t0 = 0.0;

    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(steps + 1);
    let mut diverged = false;
    let mut soft_sat_steps = 0usize;
    let mut theta_clamp_events = 0usize;
    let mut hard_clamp_steps = 0usize;

    let mut max_state_norm: f64 = 0.0;
    let mut max_act_frac: f64 = 0.0;
    let mut track_sq = DVector::<f64>::zeros(r);
    let mut track_count = 0usize;
    let mut alloc_sq_window = 0.0;
    let mut alloc_count_window = 0usize;
    let mut alloc_sq_fault = 0.0;
    let mut alloc_count_fault = 0usize;
    let mut realized_sq_window = 0.0;
    let mut realized_sq_fault = 0.0;

    for k in 0..=steps {
        let t = k as f64 * dt;

        // (1) measure
        let x_meas = &x + noise.sample(n);
        // (2)-(3) outer loop with soft saturation
        let r_t = sc.reference.value(t);
        let rdot_t = sc.reference.derivative(t);
        let v_raw = control_law(&x_meas, &r_t, &rdot_t, t, &smc);
        let (v, engaged) = soft_saturate(&v_raw, &smc.m_bounds);
        if engaged > 0 {
            soft_sat_steps += 1;
        }
        // (4)-(5) allocation and the hard command clamp
        let mut u_cmd = match sc.allocator {
            AllocatorKind::Adaptive => allocate(&state.theta_v, &v),
            AllocatorKind::PseudoInverse => pseudo_inverse_allocate(&b_pinv, &v),
        };
        let mut clamped = false;
        for j in 0..m {
            let c = u_cmd[j].clamp(-bank.u_max[j], bank.u_max[j]);
            if c != u_cmd[j] {
                clamped = true;
                u_cmd[j] = c;
            }
        }
        if clamped {
            hard_clamp_steps += 1;
        }

        // signals at the recorded instant
        let x_dot = plant_derivative(plant, &x, &bank.u_act, t, &sc.fault, &sc.disturbance)?;
        let net = net_moment(&x_dot, &x_meas, plant);
        let x2: DVector<f64> = x.rows(n - r, r).into();
        let s = sliding_surface(&x2, &smc.x2_0, &r_t, t, smc.t0, smc.lambda_bar);
        let e = state.tracking_error();
        let lam = sc.fault.lambda_at(t);
        let realized = &plant.b * bank.u_act.component_mul(lam);
        let alloc_err = &realized + sc.disturbance.value(t) - &v;
        let realized_err = &realized - &v;

        max_state_norm = max_state_norm.max(x.norm());
        for j in 0..m {
            max_act_frac = max_act_frac.max(bank.u_act[j].abs() / bank.u_max[j]);
        }
        let in_window = t >= sc.metrics_window.0 && t <= sc.metrics_window.1;
        if in_window {
            for i in 0..r {
                track_sq[i] += (x2[i] - r_t[i]).powi(2);
            }
            track_count += 1;
            alloc_sq_window += alloc_err.norm_squared();
            realized_sq_window += realized_err.norm_squared();
            alloc_count_window += 1;
        }
        if t >= sc.fault_window.0 && t <= sc.fault_window.1 {
            alloc_sq_fault += alloc_err.norm_squared();
            realized_sq_fault += realized_err.norm_squared();
            alloc_count_fault += 1;
        }

        // (9) record
        let mut row = Vec::with_capacity(1 + n + 5 * r + 2 * m + r * m + 2);
        row.push(t);
        row.extend(x.iter());
        row.extend(state.y.iter());
        row.extend(state.y_m.iter());
        row.extend(e.iter());
        row.extend(v.iter());
        row.extend(s.iter());
        row.extend(u_cmd.iter());
        row.extend(bank.u_act.iter());
        for i in 0..r {
            for j in 0..m {
                row.push(state.theta_v[(i, j)]);
            }
        }
        row.push(soft_sat_steps as f64);
        row.push(theta_clamp_events as f64);
        rows.push(row);

        if k == steps {
            break;
        }

        // (6) plant + actuators, classical fixed-step RK4 with u_cmd held
        let deriv = |xx: &DVector<f64>, uu: &DVector<f64>, tt: f64| -> Result<(DVector<f64>, DVector<f64>)> {
            Ok((
                plant_derivative(plant, xx, uu, tt, &sc.fault, &sc.disturbance)?,
                actuator_derivative(uu, &u_cmd, bank.tau),
            ))
        };
        let (k1x, k1u) = deriv(&x, &bank.u_act, t)?;
        let (k2x, k2u) = deriv(&(&x + &k1x * (dt / 2.0)), &(&bank.u_act + &k1u * (dt / 2.0)), t + dt / 2.0)?;
        let (k3x, k3u) = deriv(&(&x + &k2x * (dt / 2.0)), &(&bank.u_act + &k2u * (dt / 2.0)), t + dt / 2.0)?;
        let (k4x, k4u) = deriv(&(&x + &k3x * dt), &(&bank.u_act + &k3u * dt), t + dt)?;
        x += (k1x + k2x * 2.0 + k3x * 2.0 + k4x) * (dt / 6.0);
        bank.u_act += (k1u + k2u * 2.0 + k3u * 2.0 + k4u) * (dt / 6.0);
        bank.clamp_positions();

        // (7)-(8) filter, reference model, adaptation: explicit Euler
        let y_dot = filter_derivative(&state.y, &net, &v, &sc.alloc_cfg.a_m);
        let ym_dot =
            reference_model_derivative(&state.y_m, &state.y, &sc.alloc_cfg.a_m, sc.alloc_cfg.ell);
        state.y += y_dot * dt;
        state.y_m += ym_dot * dt;
        if sc.allocator == AllocatorKind::Adaptive {
            let theta_dot = adaptive_law(&state.theta_v, &v, &e, &sc.alloc_cfg)?;
            state.theta_v += theta_dot * dt;
            if sc.alloc_cfg.bounds.clamp(&mut state.theta_v) > 0 {
                theta_clamp_events += 1;
            }
        }

        if !x.iter().all(|v| v.is_finite()) || x.norm() > DIVERGENCE_NORM {
            diverged = true;
            break;
        }
    }

    let tracking_rms = DVector::from_fn(r, |i, _| {
        if track_count > 0 {
            (track_sq[i] / track_count as f64).sqrt()
        } else {
            f64::NAN
        }
    });
    let final_e_norm = rows
        .last()
        .map(|row| {
            let e0 = 1 + n + 2 * r;
            (0..r).map(|i| row[e0 + i].powi(2)).sum::<f64>().sqrt()
        })
        .unwrap_or(f64::NAN);

    let metrics = Metrics {
        tracking_rms,
        max_state_norm,
        max_actuator_frac: max_act_frac,
        alloc_err_rms_window: if alloc_count_window > 0 {
            (alloc_sq_window / alloc_count_window as f64).sqrt()
        } else {
            f64::NAN
        },
        alloc_err_rms_fault_window: if alloc_count_fault > 0 {
            (alloc_sq_fault / alloc_count_fault as f64).sqrt()
        } else {
            f64::NAN
        },
        realized_err_rms_window: if alloc_count_window > 0 {
            (realized_sq_window / alloc_count_window as f64).sqrt()
        } else {
            f64::NAN
        },
        realized_err_rms_fault_window: if alloc_count_fault > 0 {
            (realized_sq_fault / alloc_count_fault as f64).sqrt()
        } else {
            f64::NAN
        },
        final_e_norm,
        diverged,
        soft_sat_steps,
        theta_clamp_events,
        hard_clamp_steps,
    };

    let trace = Trace {
        columns: Trace::columns_for(n, m, r),
        rows,
        diverged,
    };
    Ok((trace, metrics))
}

/// Paired metrics of two runs differing only in the allocator kind.
#[derive(Debug, Clone)]
pub struct ComparisonReport {
    pub first: Metrics,
    pub second: Metrics,
    /// Per-axis `second.tracking_rms / first.tracking_rms`.
    pub tracking_ratio: DVector<f64>,
    pub either_diverged: bool,
}

impl ComparisonReport {
    pub fn to_text(&self) -> String {
        let ratios: Vec<String> = self.tracking_ratio.iter().map(|x| format!("{x:.4}")).collect();
        format!(
            "== first ==\n{}== second ==\n{}tracking_ratio = {}\neither_diverged = {}\n",
            self.first.to_text(),
            self.second.to_text(),
            ratios.join(" "),
            self.either_diverged
        )
    }
}

/// Run both scenarios and pair their metrics; the scenarios must agree on
/// everything except the allocator kind.
pub fn compare(a: &Scenario, b: &Scenario) -> Result<ComparisonReport> {
    if a.dt != b.dt
        || a.duration != b.duration
        || a.x0 != b.x0
        || (a.plant.a.clone() - b.plant.a.clone()).amax() > 0.0
        || (a.plant.b_u.clone() - b.plant.b_u.clone()).amax() > 0.0
        || a.fault.entries().len() != b.fault.entries().len()
    {
        return Err(Error::Config("compared scenarios differ beyond the allocator".into()));
    }
    let (_, ma) = run_scenario(a)?;
    let (_, mb) = run_scenario(b)?;
    let ratio = DVector::from_fn(ma.tracking_rms.len(), |i, _| {
        mb.tracking_rms[i] / ma.tracking_rms[i]
    });
    let either = ma.diverged || mb.diverged;
    Ok(ComparisonReport {
        first: ma,
        second: mb,
        tracking_ratio: ratio,
        either_diverged: either,
    })
}
