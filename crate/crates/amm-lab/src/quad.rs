//! Composite Simpson quadrature and small numerics helpers.

use statrs::function::erf::erfc;

/// Standard normal mass on `[lo_z, hi_z]`, evaluated through the survival
/// function on whichever side avoids cancellation against 1.
pub fn std_normal_mass(lo_z: f64, hi_z: f64) -> f64 {
    if hi_z <= lo_z {
        return 0.0;
    }
    let sqrt2 = std::f64::consts::SQRT_2;
    let mass = if lo_z >= 0.0 {
        // Upper tail: difference of survival functions.
        0.5 * (erfc(lo_z / sqrt2) - erfc(hi_z / sqrt2))
    } else if hi_z <= 0.0 {
        // Lower tail: difference of CDFs, both small and accurate.
        0.5 * (erfc(-hi_z / sqrt2) - erfc(-lo_z / sqrt2))
    } else {
        // Straddles the mean; no cancellation risk.
        0.5 * (erfc(lo_z / sqrt2) - erfc(hi_z / sqrt2))
    };
    mass.max(0.0)
}

/// Composite Simpson rule with `panels` uniform panels on `[a, b]`; each
/// panel applies the three-point rule on its edges and midpoint.
/// Returns 0 for an empty or inverted interval.
pub fn simpson<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, panels: usize) -> f64 {
    assert!(panels >= 1, "at least one panel required");
    if b <= a {
        return 0.0;
    }
    let h = (b - a) / panels as f64;
    let mut edges = 0.0;
    for i in 1..panels {
        edges += f(a + h * i as f64);
    }
    let mut mids = 0.0;
    for i in 0..panels {
        mids += f(a + h * (i as f64 + 0.5));
    }
    (h / 6.0) * (f(a) + f(b) + 2.0 * edges + 4.0 * mids)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn integrates_polynomials_exactly() {
        // Simpson is exact for cubics.
        let got = simpson(|x| x * x * x - 2.0 * x + 1.0, -1.0, 3.0, 4);
        let exact = |x: f64| x.powi(4) / 4.0 - x * x + x;
        assert_relative_eq!(got, exact(3.0) - exact(-1.0), max_relative = 1e-13);
    }

    #[test]
    fn converges_on_smooth_integrand() {
        let got = simpson(|x: f64| x.sin(), 0.0, std::f64::consts::PI, 256);
        assert_relative_eq!(got, 2.0, max_relative = 1e-10);
    }

    #[test]
    fn sqrt_substitution_handles_inverse_sqrt_singularity() {
        // int_a^1 x^(-1/2) dx in the variable s = sqrt(x) is exactly linear;
        // this is the change of variables the expected-load integral uses.
        let a: f64 = 1e-4;
        let got = simpson(|s| (1.0 / (s * s).sqrt()) * 2.0 * s, a.sqrt(), 1.0, 64);
        assert_relative_eq!(got, 2.0 - 2.0 * a.sqrt(), max_relative = 1e-12);
    }

    #[test]
    fn empty_interval_is_zero() {
        assert_eq!(simpson(|_| 1.0, 2.0, 2.0, 16), 0.0);
        assert_eq!(simpson(|_| 1.0, 3.0, 2.0, 16), 0.0);
    }

    #[test]
    fn normal_mass_survives_deep_tails() {
        // A band 14.8 to 14.82 sigma out: the CDF difference collapses to
        // zero against 1, the survival-function route does not.
        let mass = std_normal_mass(14.8, 14.82);
        assert!(mass > 0.0);
        assert!(mass < 1e-45);
        // Central mass matches the textbook value to the erfc's precision.
        assert_relative_eq!(
            std_normal_mass(-1.0, 1.0),
            0.6826894921370859,
            max_relative = 1e-9
        );
        // Symmetry between the two tail routes.
        assert_relative_eq!(
            std_normal_mass(2.0, 3.0),
            std_normal_mass(-3.0, -2.0),
            max_relative = 1e-13
        );
        assert_eq!(std_normal_mass(1.0, 1.0), 0.0);
    }
}
