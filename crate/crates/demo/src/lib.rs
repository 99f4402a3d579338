//! WebAssembly bindings for the browser demo. Every export returns a JSON
//! string; errors are thrown as JavaScript strings.

use csit_core::doppler::rate_vs_speed;
use csit_core::doppler::kmh_to_ms;
use csit_core::model::{db_to_linear, FeedbackScheme, SchemeKind, SystemConfig};
use csit_core::optimizer::optimize_all;
use csit_core::tradeoff::pareto_boundary;
use serde::Serialize;
use wasm_bindgen::prelude::*;

fn config(n_tx: usize, snr_db: f64, block_len: f64) -> Result<SystemConfig, String> {
    let c = SystemConfig { n_tx, n_users: n_tx, snr: db_to_linear(snr_db), ..SystemConfig::default() }.with_block_len(block_len);
    c.validate().map_err(|e| e.to_string())?;
    Ok(c)
}

fn scheme(label: &str, n_tx: usize) -> Result<FeedbackScheme, String> {
    Ok(match SchemeKind::parse(label).map_err(|e| e.to_string())? {
        SchemeKind::DigitalQam => FeedbackScheme::qam(n_tx, 4),
        k => FeedbackScheme::new(k, n_tx),
    })
}

fn json<T: Serialize>(v: &T) -> Result<String, String> {
    serde_json::to_string(v).map_err(|e| e.to_string())
}

#[derive(Serialize)]
struct TrainingRow {
    block_len: f64,
    scheme: &'static str,
    t_tr: f64,
    t_fb: f64,
    net_rate: f64,
}

/// Optimal allocation of every scheme for block lengths `start..=stop`.
pub fn training_sweep(n_tx: usize, snr_db: f64, start: f64, stop: f64, step: f64) -> Result<String, String> {
    if !(step > 0.0) || !(stop >= start) {
        return Err("need step > 0 and stop ≥ start".into());
    }
    let mut rows = Vec::new();
    let mut t = start;
    while t <= stop + 1e-9 {
        let cfg = config(n_tx, snr_db, t)?;
        for r in optimize_all(&cfg).map_err(|e| e.to_string())? {
            rows.push(TrainingRow {
                block_len: t,
                scheme: r.scheme.label(),
                t_tr: r.split.t_tr,
                t_fb: r.split.t_fb,
                net_rate: r.net_rate,
            });
        }
        t += step;
    }
    json(&rows)
}

/// Numeric uplink/downlink boundary (kbps) over a uniform λ grid.
pub fn boundary(n_tx: usize, snr_db: f64, block_len: f64, label: &str, points: usize) -> Result<String, String> {
    let cfg = config(n_tx, snr_db, block_len)?;
    let s = scheme(label, n_tx)?;
    let n = points.max(2);
    let grid: Vec<f64> = (1..=n).map(|i| i as f64 / (n + 1) as f64).collect();
    let samples = pareto_boundary(&cfg, &s, &grid).map_err(|e| e.to_string())?;
    json(&samples.iter().map(|p| p.numeric).collect::<Vec<_>>())
}

/// Downlink sum rate under one-step prediction for speeds `0..=max_kmh`.
pub fn speed_sweep(n_tx: usize, snr_db: f64, t_fb: f64, label: &str, max_kmh: f64) -> Result<String, String> {
    let cfg = config(n_tx, snr_db, SystemConfig::default().block_len)?;
    let s = scheme(label, n_tx)?;
    let speeds: Vec<f64> = (0..=(max_kmh / 5.0) as usize).map(|i| kmh_to_ms(5.0 * i as f64)).collect();
    json(&rate_vs_speed(&cfg, &s, t_fb, &speeds).map_err(|e| e.to_string())?)
}

#[wasm_bindgen(js_name = trainingSweep)]
pub fn training_sweep_js(n_tx: usize, snr_db: f64, start: f64, stop: f64, step: f64) -> Result<String, JsValue> {
    training_sweep(n_tx, snr_db, start, stop, step).map_err(JsValue::from)
}

#[wasm_bindgen(js_name = boundary)]
pub fn boundary_js(n_tx: usize, snr_db: f64, block_len: f64, scheme: &str, points: usize) -> Result<String, JsValue> {
    boundary(n_tx, snr_db, block_len, scheme, points).map_err(JsValue::from)
}

#[wasm_bindgen(js_name = speedSweep)]
pub fn speed_sweep_js(n_tx: usize, snr_db: f64, t_fb: f64, scheme: &str, max_kmh: f64) -> Result<String, JsValue> {
    speed_sweep(n_tx, snr_db, t_fb, scheme, max_kmh).map_err(JsValue::from)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn training_rows_cover_all_schemes() {
        let v: serde_json::Value = serde_json::from_str(&training_sweep(4, 10.0, 100.0, 300.0, 100.0).unwrap()).unwrap();
        assert_eq!(v.as_array().unwrap().len(), 12);
    }

    #[test]
    fn boundary_and_speed_parse() {
        let b: serde_json::Value = serde_json::from_str(&boundary(4, 10.0, 200.0, "digital", 9).unwrap()).unwrap();
        assert_eq!(b.as_array().unwrap().len(), 9);
        let s: serde_json::Value = serde_json::from_str(&speed_sweep(4, 10.0, 30.0, "qam", 100.0).unwrap()).unwrap();
        assert_eq!(s.as_array().unwrap().len(), 21);
    }

    #[test]
    fn bad_input_is_an_error() {
        assert!(training_sweep(1, 10.0, 100.0, 200.0, 50.0).is_err());
        assert!(boundary(4, 10.0, 200.0, "fdd", 5).is_err());
    }
}
