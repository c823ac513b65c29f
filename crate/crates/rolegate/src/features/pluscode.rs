//! Open Location Code (pluscode) encoding at 8 or 10 significant digits.
//!
//! Implements the published base-20 pair algorithm over integer-quantized
//! coordinates. An 8-length code is the 8-digit prefix of the 10-length code
//! for the same point, followed by the separator.

use super::FeatureError;

const ALPHABET: &[u8; 20] = b"23456789CFGHJMPQRVWX";
const SEPARATOR_POSITION: usize = 8;
const PAIR_DIGITS: usize = 10;
// Integer precision of the full 15-digit encoding; pair digits are obtained
// by dividing the refinement grid back out (5 rows x 4 cols per extra digit).
const GRID_ROWS_POW5: i64 = 3125;
const GRID_COLS_POW5: i64 = 1024;
const FINAL_LAT_PRECISION: f64 = 8000.0 * GRID_ROWS_POW5 as f64;
const FINAL_LON_PRECISION: f64 = 8000.0 * GRID_COLS_POW5 as f64;

/// Latitude width of a code cell for the supported lengths.
fn lat_precision_deg(length: u8) -> f64 {
    match length {
        8 => 1.0 / 400.0,
        _ => 1.0 / 8000.0,
    }
}

/// Quantizes after rounding away sub-micro float error, as the published
/// reference implementations do.
fn quantize(value: f64, precision: f64) -> i64 {
    ((value * precision * 1e6).round() / 1e6).floor() as i64
}

/// Encodes a coordinate as an Open Location Code of 8 or 10 significant
/// digits. Longitude 180 is treated as -180; latitude 90 is nudged into the
/// final cell.
pub fn encode_pluscode(lat: f64, lon: f64, length: u8) -> Result<String, FeatureError> {
    if !(length == 8 || length == 10) {
        return Err(FeatureError::UnsupportedCodeLength(length));
    }
    if !lat.is_finite() || !lon.is_finite() || !(-90.0..=90.0).contains(&lat) || !(-180.0..=180.0).contains(&lon) {
        return Err(FeatureError::OutOfRange { lat, lon });
    }
    let mut lat = lat;
    let mut lon = lon;
    if lon == 180.0 {
        lon = -180.0;
    }
    if lat == 90.0 {
        lat -= lat_precision_deg(length);
    }

    let mut lat_val = quantize(lat + 90.0, FINAL_LAT_PRECISION) / GRID_ROWS_POW5;
    let mut lon_val = quantize(lon + 180.0, FINAL_LON_PRECISION) / GRID_COLS_POW5;

    let mut digits = [0u8; PAIR_DIGITS];
    for i in (0..PAIR_DIGITS / 2).rev() {
        digits[i * 2 + 1] = ALPHABET[(lon_val % 20) as usize];
        lon_val /= 20;
        digits[i * 2] = ALPHABET[(lat_val % 20) as usize];
        lat_val /= 20;
    }

    let mut code = String::with_capacity(length as usize + 1);
    for (i, &d) in digits.iter().take(length as usize).enumerate() {
        if i == SEPARATOR_POSITION {
            code.push('+');
        }
        code.push(d as char);
    }
    if length as usize <= SEPARATOR_POSITION {
        code.push('+');
    }
    Ok(code)
}

#[cfg(test)]
mod tests {
    use super::*;

    // Published pair-algorithm vectors for full 10-digit codes.
    const PUBLISHED: &[(f64, f64, &str)] = &[
        (20.3700625, 2.7821875, "7FG49QCJ+2V"),
        (47.0000625, 8.0000625, "8FVC2222+22"),
        (-41.2730625, 174.7859375, "4VCPPQGP+Q9"),
        (-89.9999375, -179.9999375, "22222222+22"),
        (47.365590, 8.524997, "8FVC9G8F+6X"),
    ];

    #[test]
    fn matches_published_test_vectors() {
        for &(lat, lon, expected) in PUBLISHED {
            assert_eq!(encode_pluscode(lat, lon, 10).unwrap(), expected, "({lat}, {lon})");
        }
    }

    #[test]
    fn eight_length_code_is_prefix_of_ten() {
        for &(lat, lon, expected) in PUBLISHED {
            let eight = encode_pluscode(lat, lon, 8).unwrap();
            assert_eq!(eight, format!("{}+", &expected[..8]));
        }
    }

    #[test]
    fn edge_coordinates_encode() {
        assert_eq!(encode_pluscode(90.0, 1.0, 10).unwrap(), "CFX3X2X2+X2");
        assert_eq!(encode_pluscode(-90.0, -180.0, 10).unwrap(), "22222222+22");
        assert_eq!(encode_pluscode(0.0, 0.0, 10).unwrap(), "6FG22222+22");
        assert_eq!(encode_pluscode(0.0, 180.0, 10).unwrap(), "62G22222+22");
        assert_eq!(encode_pluscode(90.0, 1.0, 8).unwrap(), "CFX3X2X2+");
    }

    #[test]
    fn out_of_range_rejected() {
        assert!(matches!(
            encode_pluscode(91.0, 0.0, 10),
            Err(FeatureError::OutOfRange { .. })
        ));
        assert!(matches!(
            encode_pluscode(0.0, 180.5, 10),
            Err(FeatureError::OutOfRange { .. })
        ));
        assert!(matches!(
            encode_pluscode(f64::NAN, 0.0, 10),
            Err(FeatureError::OutOfRange { .. })
        ));
    }

    #[test]
    fn unsupported_length_rejected() {
        assert!(matches!(
            encode_pluscode(0.0, 0.0, 6),
            Err(FeatureError::UnsupportedCodeLength(6))
        ));
    }

    #[test]
    fn prefix_property_on_many_points() {
        // Deterministic pseudo-random walk over the globe.
        let mut state = 0x9e3779b97f4a7c15u64;
        let mut next = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            state
        };
        for _ in 0..1000 {
            let lat = (next() % 180_000) as f64 / 1000.0 - 90.0;
            let lon = (next() % 360_000) as f64 / 1000.0 - 180.0;
            let ten = encode_pluscode(lat, lon, 10).unwrap();
            let eight = encode_pluscode(lat, lon, 8).unwrap();
            assert_eq!(&ten[..9], eight.as_str(), "({lat}, {lon})");
        }
    }
}
