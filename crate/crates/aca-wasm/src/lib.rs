//! Browser bindings: run the offline design pipeline and closed-loop
//! scenarios from a static page and hand the time series back as JSON.
//!
//! The `*_impl` functions carry the logic and are exercised by host tests;
//! the `#[wasm_bindgen]` exports wrap them on the wasm32 target.

use aca_core::config::ConfigDocument;
use aca_core::error::Result;
use aca_core::sim::{self, Metrics, Trace};

fn metrics_json(m: &Metrics) -> serde_json::Value {
    serde_json::json!({
        "tracking_rms": m.tracking_rms.iter().copied().collect::<Vec<f64>>(),
        "max_state_norm": m.max_state_norm,
        "max_actuator_frac": m.max_actuator_frac,
        "alloc_err_rms_window": m.alloc_err_rms_window,
        "alloc_err_rms_fault_window": m.alloc_err_rms_fault_window,
        "realized_err_rms_window": m.realized_err_rms_window,
        "realized_err_rms_fault_window": m.realized_err_rms_fault_window,
        "final_e_norm": m.final_e_norm,
        "diverged": m.diverged,
        "soft_sat_steps": m.soft_sat_steps,
        "theta_clamp_events": m.theta_clamp_events,
        "hard_clamp_steps": m.hard_clamp_steps,
    })
}

fn trace_json(trace: &Trace, stride: usize) -> serde_json::Value {
    let stride = stride.max(1);
    let mut series = serde_json::Map::new();
    for (ci, name) in trace.columns.iter().enumerate() {
        let vals: Vec<f64> = trace
            .rows
            .iter()
            .step_by(stride)
            .map(|row| row[ci])
            .collect();
        series.insert(name.clone(), serde_json::json!(vals));
    }
    serde_json::Value::Object(series)
}

fn configure(
    preset: &str,
    allocator: &str,
    ell: f64,
    gamma_theta: f64,
    noise_on: bool,
) -> Result<ConfigDocument> {
    let mut doc = ConfigDocument::preset(preset)?;
    doc.allocator.kind = allocator.to_string();
    doc.allocator.ell = ell;
    doc.allocator.gamma_theta = gamma_theta;
    if !noise_on {
        doc.scenario.noise_sigma = 0.0;
    }
    Ok(doc)
}

/// Offline design report for a preset, as a JSON object.
pub fn design_report_impl(preset: &str) -> Result<String> {
    let doc = ConfigDocument::preset(preset)?;
    let rep = doc.run_design()?;
    let mat = |m: &nalgebra::DMatrix<f64>| -> Vec<Vec<f64>> {
        (0..m.nrows())
            .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
            .collect()
    };
    let out = serde_json::json!({
        "feasible": rep.feasible,
        "m_attainable": rep.m_attainable.iter().copied().collect::<Vec<f64>>(),
        "m": rep.m.iter().copied().collect::<Vec<f64>>(),
        "gamma": rep.gamma,
        "radius": rep.radius,
        "theta_i_star": mat(&rep.theta_i_star),
        "theta_min": mat(&rep.bounds.theta_min),
        "theta_max": mat(&rep.bounds.theta_max),
        "rho_bar": rep.rho_bar.iter().copied().collect::<Vec<f64>>(),
        "rho": rep.rho.iter().copied().collect::<Vec<f64>>(),
        "k": rep.k,
        "xi": rep.xi,
        "k2": rep.k2,
        "w1": rep.w1.iter().copied().collect::<Vec<f64>>(),
        "w2": rep.w2.iter().copied().collect::<Vec<f64>>(),
        "lambda_bar": rep.lambda_bar,
        "decisions": rep.decisions,
    });
    Ok(out.to_string())
}

/// Run one closed-loop scenario; returns `{metrics, trace, theta bounds}`
/// with the trace downsampled by `stride` samples.
pub fn run_simulation_impl(
    preset: &str,
    allocator: &str,
    ell: f64,
    gamma_theta: f64,
    noise_on: bool,
    stride: usize,
) -> Result<String> {
    let doc = configure(preset, allocator, ell, gamma_theta, noise_on)?;
    let rep = doc.run_design()?;
    let scenario = doc.scenario(&rep)?;
    let (trace, metrics) = sim::run_scenario(&scenario)?;
    let (r, m) = rep.bounds.shape();
    let flat = |mat: &nalgebra::DMatrix<f64>| -> Vec<f64> {
        (0..r).flat_map(|i| (0..m).map(move |j| (i, j)))
            .map(|(i, j)| mat[(i, j)])
            .collect()
    };
    let out = serde_json::json!({
        "metrics": metrics_json(&metrics),
        "trace": trace_json(&trace, stride),
        "theta_min": flat(&rep.bounds.theta_min),
        "theta_max": flat(&rep.bounds.theta_max),
    });
    Ok(out.to_string())
}

/// Run the adaptive and pseudo-inverse allocators on the same scenario and
/// return the paired metrics.
pub fn compare_allocators_impl(
    preset: &str,
    ell: f64,
    gamma_theta: f64,
    noise_on: bool,
) -> Result<String> {
    let doc = configure(preset, "adaptive", ell, gamma_theta, noise_on)?;
    let rep = doc.run_design()?;
    let a = doc.scenario(&rep)?;
    let mut b = a.clone();
    b.allocator = sim::AllocatorKind::PseudoInverse;
    let cmp = sim::compare(&a, &b)?;
    let out = serde_json::json!({
        "adaptive": metrics_json(&cmp.first),
        "pseudo_inverse": metrics_json(&cmp.second),
        "tracking_ratio": cmp.tracking_ratio.iter().copied().collect::<Vec<f64>>(),
        "either_diverged": cmp.either_diverged,
    });
    Ok(out.to_string())
}

#[cfg(target_arch = "wasm32")]
mod bindings {
    use wasm_bindgen::prelude::*;

    fn err_to_js(e: impl std::fmt::Display) -> JsValue {
        JsValue::from_str(&e.to_string())
    }

    #[wasm_bindgen]
    pub fn design_report(preset: &str) -> Result<String, JsValue> {
        super::design_report_impl(preset).map_err(err_to_js)
    }

    #[wasm_bindgen]
    pub fn run_simulation(
        preset: &str,
        allocator: &str,
        ell: f64,
        gamma_theta: f64,
        noise_on: bool,
        stride: usize,
    ) -> Result<String, JsValue> {
        super::run_simulation_impl(preset, allocator, ell, gamma_theta, noise_on, stride)
            .map_err(err_to_js)
    }

    #[wasm_bindgen]
    pub fn compare_allocators(
        preset: &str,
        ell: f64,
        gamma_theta: f64,
        noise_on: bool,
    ) -> Result<String, JsValue> {
        super::compare_allocators_impl(preset, ell, gamma_theta, noise_on).map_err(err_to_js)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn design_report_is_valid_json() {
        let s = design_report_impl("admire").unwrap();
        let v: serde_json::Value = serde_json::from_str(&s).unwrap();
        assert_eq!(v["feasible"], serde_json::json!(true));
        assert_eq!(v["m"].as_array().unwrap().len(), 3);
    }

    #[test]
    fn simulation_json_has_downsampled_trace() {
        let s = run_simulation_impl("admire-l2", "adaptive", 4.0, 100.0, false, 50).unwrap();
        let v: serde_json::Value = serde_json::from_str(&s).unwrap();
        let t = v["trace"]["t"].as_array().unwrap();
        assert_eq!(t.len(), 15000 / 50 + 1);
        assert_eq!(v["metrics"]["diverged"], serde_json::json!(false));
    }

    #[test]
    fn compare_produces_both_sides() {
        let s = compare_allocators_impl("admire-l1", 4.0, 100.0, false).unwrap();
        let v: serde_json::Value = serde_json::from_str(&s).unwrap();
        assert!(v["adaptive"]["tracking_rms"].as_array().is_some());
        assert!(v["pseudo_inverse"]["tracking_rms"].as_array().is_some());
    }

    #[test]
    fn bad_preset_is_an_error() {
        assert!(design_report_impl("bogus").is_err());
    }
}
