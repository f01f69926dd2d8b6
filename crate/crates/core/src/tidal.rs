//! Tidal barrage output and tidal-peak delay scenarios.

use crate::error::{Error, Result};
use crate::model::{EconomicParams, ForecastSet, TidalUnit, TimeGrid};

/// Largest tidal-peak delay, in hours, in either direction.
pub const MAX_DELAY: i32 = 4;

/// Barrage output in MW before the rated-power cap: ½ρgh²Aη per hour.
pub fn tidal_power_uncapped(height: f64, unit: &TidalUnit, econ: &EconomicParams) -> Result<f64> {
    if !(height.is_finite() && height >= 0.0) {
        return Err(Error::invalid("tidal_height", format!("must be finite and >= 0 (got {height})")));
    }
    Ok(0.5 * econ.sea_density * econ.gravity * height * height * unit.area * unit.efficiency / 3600.0 / 1e6)
}

/// Barrage output in MW, capped at the unit's rated power.
pub fn tidal_power(height: f64, unit: &TidalUnit, econ: &EconomicParams) -> Result<f64> {
    Ok(tidal_power_uncapped(height, unit, econ)?.min(unit.rated_power))
}

/// Shift every day of `series` by `delta_t` hours with zero-fill.
///
/// A positive delay brings peaks earlier: `out[h] = series[h + delta_t]`.
/// Days are shifted independently; nothing wraps across midnight.
pub fn apply_delay(series: &[f64], hours_per_day: usize, delta_t: i32) -> Result<Vec<f64>> {
    if delta_t.abs() > MAX_DELAY {
        return Err(Error::invalid("delta_t", format!("must lie in [-{MAX_DELAY}, {MAX_DELAY}] (got {delta_t})")));
    }
    if hours_per_day == 0 || !series.len().is_multiple_of(hours_per_day) {
        return Err(Error::Shape(format!(
            "series of {} values is not a whole number of {hours_per_day}-hour days",
            series.len()
        )));
    }
    let h = hours_per_day as i64;
    let mut out = vec![0.0; series.len()];
    for (day, chunk) in series.chunks(hours_per_day).enumerate() {
        for hour in 0..h {
            let src = hour + delta_t as i64;
            if (0..h).contains(&src) {
                out[day * hours_per_day + hour as usize] = chunk[src as usize];
            }
        }
    }
    Ok(out)
}

/// Nominal TPG availability per (unit, slot): delay the tide, then convert.
pub fn nominal_tpg_profile(
    forecasts: &ForecastSet,
    units: &[TidalUnit],
    grid: &TimeGrid,
    delta_t: i32,
    econ: &EconomicParams,
    cap_at_rated: bool,
) -> Result<Vec<Vec<f64>>> {
    if forecasts.tidal_height.len() != grid.slots() {
        return Err(Error::Shape(format!(
            "tidal height has {} values, grid has {} slots",
            forecasts.tidal_height.len(),
            grid.slots()
        )));
    }
    let shifted = apply_delay(&forecasts.tidal_height, grid.hours_per_day, delta_t)?;
    units
        .iter()
        .map(|unit| {
            shifted
                .iter()
                .map(|&h| if cap_at_rated { tidal_power(h, unit, econ) } else { tidal_power_uncapped(h, unit, econ) })
                .collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn unit(area: f64, efficiency: f64, rated_power: f64) -> TidalUnit {
        TidalUnit { id: "t".into(), rated_power, inv_cost: 1.0, area, efficiency, op_cost: 0.0 }
    }

    #[test]
    fn zero_height_zero_power() {
        assert_eq!(tidal_power(0.0, &unit(1e5, 0.9, 5.0), &EconomicParams::default()).unwrap(), 0.0);
    }

    #[test]
    fn hand_evaluated_example() {
        let p = tidal_power(2.0, &unit(1000.0, 0.9, 5.0), &EconomicParams::default()).unwrap();
        let by_hand = 0.5 * 1025.0 * 9.81 * 4.0 * 1000.0 * 0.9 / 3600.0 / 1e6;
        assert!((p - by_hand).abs() <= 1e-15);
        assert!((p - 0.005_027_625).abs() < 1e-12);
    }

    #[test]
    fn capped_at_rated_power() {
        let big = unit(1e9, 1.0, 3.0);
        let econ = EconomicParams::default();
        assert_eq!(tidal_power(5.0, &big, &econ).unwrap(), 3.0);
        assert!(tidal_power_uncapped(5.0, &big, &econ).unwrap() > 3.0);
    }

    #[test]
    fn negative_height_rejected() {
        assert!(tidal_power(-0.1, &unit(1.0, 0.5, 1.0), &EconomicParams::default()).is_err());
    }

    #[test]
    fn delay_examples() {
        assert_eq!(apply_delay(&[0.0, 0.0, 3.0, 0.0], 4, 1).unwrap(), vec![0.0, 3.0, 0.0, 0.0]);
        assert_eq!(apply_delay(&[0.0, 0.0, 3.0, 0.0], 4, -1).unwrap(), vec![0.0, 0.0, 0.0, 3.0]);
        assert_eq!(apply_delay(&[1.0, 2.0, 3.0, 4.0, 5.0, 6.0], 3, 1).unwrap(), vec![2.0, 3.0, 0.0, 5.0, 6.0, 0.0]);
        assert!(apply_delay(&[1.0; 24], 24, 5).is_err());
        assert!(apply_delay(&[1.0; 5], 24, 0).is_err());
    }

    #[test]
    fn profile_follows_delay() {
        let grid = TimeGrid::new(6, 1, 1).unwrap();
        let mut heights = vec![0.0; 6];
        heights[3] = 2.0;
        let forecasts = ForecastSet { load: vec![0.0; 6], ndu_availability: vec![], tidal_height: heights };
        let units = [unit(1000.0, 0.9, 5.0)];
        let econ = EconomicParams::default();
        let base = nominal_tpg_profile(&forecasts, &units, &grid, 0, &econ, true).unwrap();
        let early = nominal_tpg_profile(&forecasts, &units, &grid, 2, &econ, true).unwrap();
        let value = tidal_power(2.0, &units[0], &econ).unwrap();
        assert_eq!(base[0][3], value);
        assert_eq!(early[0][1], value);
        assert_eq!(early[0].iter().filter(|p| **p != 0.0).count(), 1);
    }

    proptest! {
        #[test]
        fn quadratic_scaling_below_cap(h in 0.0f64..5.0, c in 0.0f64..3.0, area in 1.0f64..1e6, eta in 0.01f64..1.0) {
            let u = unit(area, eta, f64::INFINITY);
            let econ = EconomicParams::default();
            let base = tidal_power(h, &u, &econ).unwrap();
            let scaled = tidal_power(c * h, &u, &econ).unwrap();
            prop_assert!((scaled - c * c * base).abs() <= 1e-12 * scaled.abs().max(1e-300));
        }

        #[test]
        fn delay_zero_fills_exactly(days in 1usize..4, dt in -4i32..=4, seed in proptest::collection::vec(0.1f64..10.0, 24 * 3)) {
            let series = &seed[..24 * days];
            let out = apply_delay(series, 24, dt).unwrap();
            if dt == 0 {
                prop_assert_eq!(&out[..], series);
            }
            for day in 0..days {
                let chunk = &out[day * 24..(day + 1) * 24];
                prop_assert_eq!(chunk.iter().filter(|v| **v == 0.0).count(), dt.unsigned_abs() as usize);
                for h in 0..24i32 {
                    let src = h + dt;
                    if (0..24).contains(&src) {
                        prop_assert_eq!(chunk[h as usize], series[day * 24 + src as usize]);
                    }
                }
            }
        }
    }
}
