//! Integer rounding for formulas evaluated on decimal parameters.
//!
//! Values like `24 / 0.1` land a few ulps off the integer they stand for;
//! both helpers treat anything within a relative `1e-9` of an integer as that
//! integer before rounding.

const SNAP: f64 = 1e-9;

fn snapped(x: f64) -> f64 {
    let r = x.round();
    if (x - r).abs() <= SNAP * r.abs().max(1.0) {
        r
    } else {
        x
    }
}

/// `⌈x⌉`.
pub fn snap_ceil(x: f64) -> f64 {
    snapped(x).ceil()
}

/// Smallest integer strictly greater than `x`.
pub fn strictly_above(x: f64) -> f64 {
    snapped(x).floor() + 1.0
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn snapping() {
        assert_eq!(snap_ceil(24.0 / 0.1), 240.0);
        assert_eq!(snap_ceil(240.5), 241.0);
        assert_eq!(snap_ceil(0.1 * 3.0 * 10.0), 3.0);
        assert_eq!(strictly_above(6000.0), 6001.0);
        assert_eq!(strictly_above(2.0 * 3.0 * 100.0 / 0.1), 6001.0);
        assert_eq!(strictly_above(2.95), 3.0);
        assert_eq!(strictly_above(-0.5), 0.0);
    }
}
