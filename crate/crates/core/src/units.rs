//! dB / linear helpers.

/// Thermal noise power spectral density at room temperature.
pub const THERMAL_NOISE_DBM_PER_HZ: f64 = -174.0;

#[inline]
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

#[inline]
pub fn linear_to_db(lin: f64) -> f64 {
    10.0 * lin.log10()
}

#[inline]
pub fn dbm_to_watts(dbm: f64) -> f64 {
    db_to_linear(dbm - 30.0)
}

#[inline]
pub fn watts_to_dbm(w: f64) -> f64 {
    linear_to_db(w) + 30.0
}

/// Receiver noise power in watts over `bandwidth_hz` for a given noise figure.
pub fn noise_power_w(bandwidth_hz: f64, noise_figure_db: f64) -> f64 {
    dbm_to_watts(THERMAL_NOISE_DBM_PER_HZ + linear_to_db(bandwidth_hz) + noise_figure_db)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn ue_noise_is_minus_95_dbm() {
        let n = noise_power_w(1e7, 9.0);
        assert_relative_eq!(watts_to_dbm(n), -95.0, epsilon = 1e-9);
    }

    #[test]
    fn dbm_roundtrip() {
        assert_relative_eq!(dbm_to_watts(46.0), 39.810717055, max_relative = 1e-9);
        assert_relative_eq!(watts_to_dbm(1.0), 30.0, epsilon = 1e-12);
    }
}
