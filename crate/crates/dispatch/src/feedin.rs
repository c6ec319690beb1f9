//! Weather to power: wind and PV feed-in, temperature-driven demand.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WindCurve {
    pub cut_in: f64,
    pub rated_speed: f64,
    pub cut_out: f64,
}

impl Default for WindCurve {
    fn default() -> Self {
        WindCurve {
            cut_in: 3.0,
            rated_speed: 12.0,
            cut_out: 25.0,
        }
    }
}

/// Cubic ramp between cut-in and rated speed, zero at and above cut-out.
pub fn wind_to_power(speed: f64, capacity: f64, curve: &WindCurve) -> f64 {
    let v = speed.max(0.0);
    if v < curve.cut_in || v >= curve.cut_out {
        0.0
    } else if v >= curve.rated_speed {
        capacity
    } else {
        let ci3 = curve.cut_in.powi(3);
        capacity * (v.powi(3) - ci3) / (curve.rated_speed.powi(3) - ci3)
    }
}

/// `capacity · PR · min(G / 1000, 1)`.
pub fn solar_to_power(irradiance: f64, capacity: f64, performance_ratio: f64) -> f64 {
    capacity * performance_ratio * (irradiance.max(0.0) / 1000.0).min(1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeatingParams {
    pub t_ref: f64,
    /// MW per °C below `t_ref`.
    pub slope: f64,
}

pub fn temperature_to_load(temperature: f64, base_load: f64, heating: &HeatingParams) -> f64 {
    base_load + heating.slope * (heating.t_ref - temperature).max(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wind_curve_regions() {
        let c = WindCurve::default();
        assert_eq!(wind_to_power(2.0, 100.0, &c), 0.0);
        assert_eq!(wind_to_power(12.0, 100.0, &c), 100.0);
        assert_eq!(wind_to_power(20.0, 100.0, &c), 100.0);
        assert_eq!(wind_to_power(25.0, 100.0, &c), 0.0);
        assert_eq!(wind_to_power(3.0, 100.0, &c), 0.0);
        // 100 (7.5³ − 27) / (1728 − 27) by hand: 394.875 / 1701.
        let v = wind_to_power(7.5, 100.0, &c);
        assert!((v - 23.214_285_714_285_715).abs() < 1e-9, "{v}");
    }

    #[test]
    fn solar_linear_and_capped() {
        assert_eq!(solar_to_power(0.0, 50.0, 0.9), 0.0);
        assert!((solar_to_power(1000.0, 50.0, 0.9) - 45.0).abs() < 1e-12);
        assert!((solar_to_power(500.0, 200.0, 0.85) - 85.0).abs() < 1e-12);
        assert!((solar_to_power(1300.0, 200.0, 0.85) - 170.0).abs() < 1e-12);
    }

    #[test]
    fn heating_load() {
        let h = HeatingParams {
            t_ref: 15.0,
            slope: 2.0,
        };
        assert_eq!(temperature_to_load(5.0, 100.0, &h), 120.0);
        assert_eq!(temperature_to_load(20.0, 100.0, &h), 100.0);
        let flat = HeatingParams {
            t_ref: 15.0,
            slope: 0.0,
        };
        assert!((-30..40).all(|t| temperature_to_load(t as f64, 80.0, &flat) == 80.0));
    }
}
