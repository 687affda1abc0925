//! Divergence loss, slippage loss, their composite load, and expected load
//! against a density over future valuations.
//!
//! With `cap(x, v) = v*x + (1-v)*f(x)` and `PHI(v)` the equilibrium point:
//!
//! * divergence loss  `loss_div(v, v') = v'.PHI(v) - v'.PHI(v')` — what an
//!   arbitrageur extracts by moving the pool between equilibria;
//! * slippage loss    `loss_slip(v, v') = ((1-v')/(1-v)) (v.PHI(v') - v.PHI(v))`
//!   — the finite-trade gap against the linear exchange rate;
//! * load             `load(v, v') = loss_div * loss_slip` per direction;
//! * expected load    integrates the load against a density `p(v')`, the
//!   X-direction branch below `v` and the Y-direction branch above it.

use crate::amm::{AmmError, BondingCurve, Valuation};
use crate::quad;
use std::fmt;

/// Densities are clipped to `[SUPPORT_CLIP, 1 - SUPPORT_CLIP]` and
/// renormalized; the equilibrium map diverges at the interval endpoints.
pub const SUPPORT_CLIP: f64 = 1e-4;

/// Simpson panels per branch of the expected-load integral.
pub const EXPECTED_LOAD_PANELS: usize = 2048;

#[derive(Debug, Clone, PartialEq)]
pub enum LossError {
    Amm(AmmError),
    /// Closed forms require `x > 0` and `x + delta > 0`.
    ClosedFormDomain {
        x: f64,
        delta: f64,
    },
    /// Density parameters leave no probability mass on the clipped support.
    DegenerateDensity(String),
}

impl fmt::Display for LossError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LossError::Amm(e) => e.fmt(f),
            LossError::ClosedFormDomain { x, delta } => {
                write!(f, "closed form undefined for x = {x}, delta = {delta}")
            }
            LossError::DegenerateDensity(msg) => write!(f, "degenerate density: {msg}"),
        }
    }
}

impl std::error::Error for LossError {}

impl From<AmmError> for LossError {
    fn from(e: AmmError) -> Self {
        LossError::Amm(e)
    }
}

/// Value extracted by arbitrage when the valuation moves from `v` to `v_new`
/// and the pool is rebalanced between the corresponding equilibria.
/// Nonnegative; zero only at `v_new = v`.
pub fn divergence_loss(
    curve: &BondingCurve,
    v: Valuation,
    v_new: Valuation,
) -> Result<f64, AmmError> {
    let (hx, hy) = curve.equilibrium_state(v)?;
    let held = v_new.value() * hx + v_new.complement() * hy;
    let eq = curve.equilibrium_capitalization(v_new)?;
    Ok((held - eq).max(0.0))
}

/// Closed form of the divergence loss on the unit curve `f(x) = 1/x` for an
/// equilibrium move from `x` to `x + delta`.
pub fn divergence_loss_closed(x: f64, delta: f64) -> Result<f64, LossError> {
    if !x.is_finite() || !delta.is_finite() || x <= 0.0 || x + delta <= 0.0 {
        return Err(LossError::ClosedFormDomain { x, delta });
    }
    Ok(delta * delta / (2.0 * delta * x * x + x * x * x + delta * delta * x + x))
}

/// Slippage of the equilibrium-to-equilibrium trade for a move from `v` to
/// `v_new`, scaled by the relative Y-weight. Nonnegative; zero only at
/// `v_new = v`.
pub fn slippage_loss(
    curve: &BondingCurve,
    v: Valuation,
    v_new: Valuation,
) -> Result<f64, AmmError> {
    let (nx, ny) = curve.equilibrium_state(v_new)?;
    let moved = v.value() * nx + v.complement() * ny;
    let eq = curve.equilibrium_capitalization(v)?;
    let prefactor = v_new.complement() / v.complement();
    Ok((prefactor * (moved - eq)).max(0.0))
}

/// Magnitude of the closed-form slippage loss on the unit curve for a trade
/// moving the pool from `x` to `x + delta`.
pub fn slippage_loss_closed(x: f64, delta: f64) -> Result<f64, LossError> {
    if !x.is_finite() || !delta.is_finite() || x <= 0.0 || x + delta <= 0.0 {
        return Err(LossError::ClosedFormDomain { x, delta });
    }
    let s = x + delta;
    Ok(delta * delta * s / (x * x * (s * s + 1.0)))
}

/// Loss a trader takes on a size-`delta` buy of Y relative to the linear
/// exchange rate at `x`: `-delta g'(x) - (g(x) - g(x + delta))`.
/// Nonnegative by convexity of the curve.
pub fn linear_slippage(curve: &BondingCurve, x: f64, delta: f64) -> Result<f64, AmmError> {
    if !delta.is_finite() || delta <= 0.0 {
        return Err(AmmError::NonPositiveAmount(delta));
    }
    let rate = -curve.slope(x)?;
    let receipt = curve.eval(x)? - curve.eval(x + delta)?;
    Ok(delta * rate - receipt)
}

/// Which token the interval's trade flow exchanges away from the pool.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LoadDirection {
    X,
    Y,
}

/// Composite of divergence and slippage losses over the interval from `v` to
/// `v_new`. The Y direction is the same mechanism with token roles swapped,
/// evaluated on the mirrored curve.
pub fn load(
    curve: &BondingCurve,
    v: Valuation,
    v_new: Valuation,
    direction: LoadDirection,
) -> Result<f64, AmmError> {
    match direction {
        LoadDirection::X => Ok(divergence_loss(curve, v, v_new)? * slippage_loss(curve, v, v_new)?),
        LoadDirection::Y => {
            let mirror = curve.mirrored();
            let (mv, mv_new) = (v.mirrored(), v_new.mirrored());
            Ok(divergence_loss(&mirror, mv, mv_new)? * slippage_loss(&mirror, mv, mv_new)?)
        }
    }
}

fn std_normal_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

#[derive(Debug, Clone, PartialEq)]
enum DensityKind {
    Uniform,
    /// Gaussian in valuation space.
    TruncatedGaussian {
        mu: f64,
        sigma: f64,
    },
    /// Lognormal relative price pushed through `v = r / (1 + r)`;
    /// `m` and `s` are the mean and deviation of the terminal log price.
    DiscretizedGbm {
        m: f64,
        s: f64,
    },
}

/// Probability density over future valuations, clipped to
/// `[SUPPORT_CLIP, 1 - SUPPORT_CLIP]` and renormalized.
#[derive(Debug, Clone, PartialEq)]
pub struct ValuationDensity {
    kind: DensityKind,
    lo: f64,
    hi: f64,
    norm: f64,
}

impl ValuationDensity {
    fn build(kind: DensityKind) -> Result<Self, LossError> {
        let (lo, hi) = (SUPPORT_CLIP, 1.0 - SUPPORT_CLIP);
        let mut density = ValuationDensity {
            kind,
            lo,
            hi,
            norm: 1.0,
        };
        let norm = density.raw_mass(lo, hi);
        if !norm.is_finite() || norm <= 1e-300 {
            return Err(LossError::DegenerateDensity(format!(
                "probability mass {norm} on [{lo}, {hi}]"
            )));
        }
        density.norm = norm;
        Ok(density)
    }

    /// Uniform over the clipped support.
    pub fn uniform() -> Self {
        Self::build(DensityKind::Uniform).expect("uniform density always normalizes")
    }

    /// Gaussian with mean `mu` and width `sigma` in valuation space.
    pub fn truncated_gaussian(mu: f64, sigma: f64) -> Result<Self, LossError> {
        if !sigma.is_finite() || sigma <= 0.0 || !mu.is_finite() {
            return Err(LossError::DegenerateDensity(format!(
                "gaussian mu {mu}, sigma {sigma}"
            )));
        }
        Self::build(DensityKind::TruncatedGaussian { mu, sigma })
    }

    /// Valuation reached by a geometric Brownian price after `horizon`
    /// intervals of drift `mu` and volatility `sigma`, starting from
    /// `current`.
    pub fn discretized_gbm(
        current: Valuation,
        mu: f64,
        sigma: f64,
        horizon: u32,
    ) -> Result<Self, LossError> {
        if !sigma.is_finite() || sigma <= 0.0 || !mu.is_finite() || horizon == 0 {
            return Err(LossError::DegenerateDensity(format!(
                "gbm mu {mu}, sigma {sigma}, horizon {horizon}"
            )));
        }
        let h = horizon as f64;
        let m = current.relative_price().ln() + (mu - 0.5 * sigma * sigma) * h;
        let s = sigma * h.sqrt();
        Self::build(DensityKind::DiscretizedGbm { m, s })
    }

    pub fn support(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    /// Unnormalized probability mass on `[lo, hi]`, via the cancellation-safe
    /// tail routine for the gaussian kinds.
    fn raw_mass(&self, lo: f64, hi: f64) -> f64 {
        match &self.kind {
            DensityKind::Uniform => (hi - lo).max(0.0),
            DensityKind::TruncatedGaussian { mu, sigma } => {
                quad::std_normal_mass((lo - mu) / sigma, (hi - mu) / sigma)
            }
            DensityKind::DiscretizedGbm { m, s } => quad::std_normal_mass(
                ((lo / (1.0 - lo)).ln() - m) / s,
                ((hi / (1.0 - hi)).ln() - m) / s,
            ),
        }
    }

    fn raw_pdf(&self, v: f64) -> f64 {
        match &self.kind {
            DensityKind::Uniform => 1.0,
            DensityKind::TruncatedGaussian { mu, sigma } => {
                std_normal_pdf((v - mu) / sigma) / sigma
            }
            DensityKind::DiscretizedGbm { m, s } => {
                let z = ((v / (1.0 - v)).ln() - m) / s;
                std_normal_pdf(z) / (s * v * (1.0 - v))
            }
        }
    }

    /// Renormalized density; zero outside the clipped support.
    pub fn pdf(&self, v: f64) -> f64 {
        if v < self.lo || v > self.hi {
            return 0.0;
        }
        self.raw_pdf(v) / self.norm
    }

    /// Probability mass on `[lo, hi]`, clipped to the support; closed form.
    pub fn mass(&self, lo: f64, hi: f64) -> f64 {
        let lo = lo.max(self.lo);
        let hi = hi.min(self.hi);
        if hi <= lo {
            return 0.0;
        }
        (self.raw_mass(lo, hi) / self.norm).clamp(0.0, 1.0)
    }

    /// Quadrature residual `|integral of pdf - 1|`; diagnostic used in tests.
    pub fn normalization_residual(&self, panels: usize) -> f64 {
        (quad::simpson(|v| self.pdf(v), self.lo, self.hi, panels) - 1.0).abs()
    }
}

/// Density family selection, resolved against the current valuation when a
/// family (like the GBM forecast) is centered on it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DensitySpec {
    Uniform,
    /// Truncated gaussian of width `sigma` centered on the current valuation.
    Gaussian {
        sigma: f64,
    },
    /// Forward valuation of a GBM price from the current valuation.
    Gbm {
        mu: f64,
        sigma: f64,
        horizon: u32,
    },
}

impl DensitySpec {
    pub fn build(&self, current: Valuation) -> Result<ValuationDensity, LossError> {
        match *self {
            DensitySpec::Uniform => Ok(ValuationDensity::uniform()),
            DensitySpec::Gaussian { sigma } => {
                ValuationDensity::truncated_gaussian(current.value(), sigma)
            }
            DensitySpec::Gbm { mu, sigma, horizon } => {
                ValuationDensity::discretized_gbm(current, mu, sigma, horizon)
            }
        }
    }
}

/// Expected load when exchanging from the equilibrium state for valuation
/// `v`: the X-direction load integrated below `v` and the Y-direction load
/// above it, against `density`.
///
/// Composite Simpson with [`EXPECTED_LOAD_PANELS`] panels per branch; each
/// branch is integrated in the square-root variable of its singular
/// endpoint, where the integrand (which grows like an inverse square root
/// toward the clipped support edges) is analytic.
pub fn expected_load(
    curve: &BondingCurve,
    v: Valuation,
    density: &ValuationDensity,
) -> Result<f64, LossError> {
    let (lo, hi) = density.support();
    let vv = v.value();

    let load_at = |vp: f64, dir: LoadDirection| -> f64 {
        if vp == vv {
            return 0.0;
        }
        let vp = Valuation::new(vp).expect("support point inside (0, 1)");
        load(curve, v, vp, dir).expect("support point inside valuation window")
    };

    // X branch: substitute v' = s^2 (singular end at the lower clip).
    let x_branch = if vv > lo {
        quad::simpson(
            |s| {
                let vp = s * s;
                2.0 * s * density.pdf(vp) * load_at(vp, LoadDirection::X)
            },
            lo.sqrt(),
            vv.sqrt(),
            EXPECTED_LOAD_PANELS,
        )
    } else {
        0.0
    };

    // Y branch: substitute v' = 1 - s^2 (singular end at the upper clip).
    let y_branch = if vv < hi {
        quad::simpson(
            |s| {
                let vp = 1.0 - s * s;
                2.0 * s * density.pdf(vp) * load_at(vp, LoadDirection::Y)
            },
            (1.0 - hi).sqrt(),
            (1.0 - vv).sqrt(),
            EXPECTED_LOAD_PANELS,
        )
    } else {
        0.0
    };

    Ok(x_branch + y_branch)
}

/// Bundled loss metrics for one valuation move.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossReport {
    pub divergence: f64,
    pub slippage: f64,
    pub load: f64,
    pub expected_load: f64,
}

impl LossReport {
    pub fn compute(
        curve: &BondingCurve,
        v: Valuation,
        v_new: Valuation,
        density: &ValuationDensity,
    ) -> Result<Self, LossError> {
        let divergence = divergence_loss(curve, v, v_new)?;
        let slippage = slippage_loss(curve, v, v_new)?;
        Ok(LossReport {
            divergence,
            slippage,
            load: divergence * slippage,
            expected_load: expected_load(curve, v, density)?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn v(x: f64) -> Valuation {
        Valuation::new(x).unwrap()
    }

    fn unit_curve() -> BondingCurve {
        BondingCurve::new(1.0).unwrap()
    }

    #[test]
    fn divergence_loss_worked_example() {
        // v'.PHI(v) = 0.2*1 + 0.8*1 = 1.0, v'.PHI(v') = 0.2*2 + 0.8*0.5 = 0.8.
        let curve = unit_curve();
        let loss = divergence_loss(&curve, v(0.5), v(0.2)).unwrap();
        assert_relative_eq!(loss, 0.2, max_relative = 1e-12);
        assert_eq!(divergence_loss(&curve, v(0.37), v(0.37)).unwrap(), 0.0);
    }

    #[test]
    fn divergence_closed_form_values() {
        assert_relative_eq!(
            divergence_loss_closed(1.0, 1.0).unwrap(),
            0.2,
            max_relative = 1e-12
        );
        assert_eq!(divergence_loss_closed(1.0, 0.0).unwrap(), 0.0);
        assert_relative_eq!(
            divergence_loss_closed(2.0, 1.0).unwrap(),
            0.05,
            max_relative = 1e-12
        );
        assert!(divergence_loss_closed(1.0, -1.0).is_err());
        assert!(divergence_loss_closed(0.0, 1.0).is_err());
    }

    #[test]
    fn closed_forms_match_definitional_losses() {
        let curve = unit_curve();
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..1000 {
            let x: f64 = rng.gen_range(0.1..10.0);
            let delta = rng.gen_range(-0.9 * x..3.0 * x);
            if delta.abs() < 1e-9 {
                continue;
            }
            let from = curve.implied_valuation(x).unwrap();
            let to = curve.implied_valuation(x + delta).unwrap();

            let div_def = divergence_loss(&curve, from, to).unwrap();
            let div_closed = divergence_loss_closed(x, delta).unwrap();
            assert!(
                (div_def - div_closed).abs() < 1e-9,
                "divergence mismatch at x={x}, delta={delta}: {div_def} vs {div_closed}"
            );

            let slip_def = slippage_loss(&curve, from, to).unwrap();
            let slip_closed = slippage_loss_closed(x, delta).unwrap();
            assert!(
                (slip_def - slip_closed).abs() < 1e-9,
                "slippage mismatch at x={x}, delta={delta}: {slip_def} vs {slip_closed}"
            );
        }
    }

    #[test]
    fn slippage_loss_worked_example() {
        // (0.8/0.5) * (1.25 - 1.0) = 0.4.
        let curve = unit_curve();
        let loss = slippage_loss(&curve, v(0.5), v(0.2)).unwrap();
        assert_relative_eq!(loss, 0.4, max_relative = 1e-12);
        assert_eq!(slippage_loss(&curve, v(0.5), v(0.5)).unwrap(), 0.0);
        // Closed-form magnitude at x=1, delta=1.
        assert_relative_eq!(
            slippage_loss_closed(1.0, 1.0).unwrap(),
            0.4,
            max_relative = 1e-12
        );
    }

    #[test]
    fn linear_slippage_values() {
        let curve = unit_curve();
        assert_relative_eq!(
            linear_slippage(&curve, 1.0, 1.0).unwrap(),
            0.5,
            max_relative = 1e-12
        );
        assert_relative_eq!(
            linear_slippage(&curve, 2.0, 2.0).unwrap(),
            0.25,
            max_relative = 1e-12
        );
        // Tangent-line limit.
        assert!(linear_slippage(&curve, 1.0, 1e-9).unwrap() < 1e-15);
        assert!(linear_slippage(&curve, 1.0, 0.0).is_err());
    }

    #[test]
    fn load_is_product_of_losses() {
        let curve = unit_curve();
        let l = load(&curve, v(0.5), v(0.2), LoadDirection::X).unwrap();
        assert_relative_eq!(l, 0.08, max_relative = 1e-12);
        assert_eq!(load(&curve, v(0.4), v(0.4), LoadDirection::X).unwrap(), 0.0);
    }

    #[test]
    fn load_y_is_mirror_of_load_x() {
        let curve = unit_curve();
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        for _ in 0..200 {
            let a = v(rng.gen_range(0.05..0.95));
            let b = v(rng.gen_range(0.05..0.95));
            let ly = load(&curve, a, b, LoadDirection::Y).unwrap();
            let lx = load(&curve, a.mirrored(), b.mirrored(), LoadDirection::X).unwrap();
            assert_relative_eq!(ly, lx, max_relative = 1e-10, epsilon = 1e-14);
        }
    }

    #[test]
    fn losses_nonnegative_everywhere() {
        let curve = BondingCurve::new(2.5).unwrap();
        let density = ValuationDensity::uniform();
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..10_000 {
            let a = v(rng.gen_range(0.001..0.999));
            let b = v(rng.gen_range(0.001..0.999));
            assert!(divergence_loss(&curve, a, b).unwrap() >= 0.0);
            assert!(slippage_loss(&curve, a, b).unwrap() >= 0.0);
            assert!(load(&curve, a, b, LoadDirection::X).unwrap() >= 0.0);
            assert!(load(&curve, a, b, LoadDirection::Y).unwrap() >= 0.0);
        }
        assert!(expected_load(&curve, v(0.3), &density).unwrap() >= 0.0);
    }

    #[test]
    fn divergence_monotone_in_move_size() {
        let curve = unit_curve();
        for &start in &[0.2, 0.5, 0.8] {
            let origin = v(start);
            let mut prev = 0.0;
            for i in 1..200 {
                let target = start + (0.999 - start) * i as f64 / 200.0;
                let loss = divergence_loss(&curve, origin, v(target)).unwrap();
                assert!(loss >= prev - 1e-14, "not monotone above v at {target}");
                prev = loss;
            }
            prev = 0.0;
            for i in 1..200 {
                let target = start - (start - 0.001) * i as f64 / 200.0;
                let loss = divergence_loss(&curve, origin, v(target)).unwrap();
                assert!(loss >= prev - 1e-14, "not monotone below v at {target}");
                prev = loss;
            }
        }
    }

    #[test]
    fn density_normalization() {
        let uniform = ValuationDensity::uniform();
        assert!(uniform.normalization_residual(4096) < 1e-9);
        assert_relative_eq!(uniform.mass(0.0, 1.0), 1.0);

        let gauss = ValuationDensity::truncated_gaussian(0.4, 0.05).unwrap();
        assert!(gauss.normalization_residual(4096) < 1e-6);

        let gbm = ValuationDensity::discretized_gbm(v(0.5), 0.0, 0.02, 5).unwrap();
        assert!(gbm.normalization_residual(4096) < 1e-6);

        assert!(ValuationDensity::truncated_gaussian(0.4, 0.0).is_err());
        assert!(ValuationDensity::truncated_gaussian(50.0, 1e-3).is_err());
    }

    #[test]
    fn expected_load_of_point_mass_vanishes() {
        let curve = unit_curve();
        let spike = ValuationDensity::truncated_gaussian(0.5, 1e-6).unwrap();
        let value = expected_load(&curve, v(0.5), &spike).unwrap();
        assert!(value.abs() < 1e-8, "point-mass expected load {value}");
    }

    #[test]
    fn expected_load_matches_riemann_oracle() {
        // Midpoint Riemann in the raw valuation variable, 10^6 panels per
        // branch, entirely independent of the Simpson path.
        let curve = unit_curve();
        let origin = v(0.5);
        for density in [
            ValuationDensity::uniform(),
            ValuationDensity::truncated_gaussian(0.45, 0.1).unwrap(),
        ] {
            let got = expected_load(&curve, origin, &density).unwrap();
            let oracle = riemann_expected_load(&curve, origin, &density, 1_000_000);
            assert!(
                (got - oracle).abs() < 1e-6,
                "quadrature mismatch: {got} vs oracle {oracle}"
            );
        }
    }

    #[test]
    fn expected_load_stable_under_panel_doubling() {
        let curve = unit_curve();
        let origin = v(0.35);
        let density = ValuationDensity::truncated_gaussian(0.4, 0.08).unwrap();
        let coarse = expected_load(&curve, origin, &density).unwrap();
        let fine = expected_load_with_panels(&curve, origin, &density, 2 * EXPECTED_LOAD_PANELS);
        assert!(
            (coarse - fine).abs() < 1e-8,
            "doubling moved result by {}",
            (coarse - fine).abs()
        );
    }

    pub(super) fn riemann_expected_load(
        curve: &BondingCurve,
        origin: Valuation,
        density: &ValuationDensity,
        panels: usize,
    ) -> f64 {
        let (lo, hi) = density.support();
        let vv = origin.value();
        let mut acc = 0.0;
        let branch = |a: f64, b: f64, dir: LoadDirection, acc: &mut f64| {
            if b <= a {
                return;
            }
            let h = (b - a) / panels as f64;
            let mut sum = 0.0;
            for i in 0..panels {
                let vp = a + h * (i as f64 + 0.5);
                sum += density.pdf(vp) * load(curve, origin, v(vp), dir).unwrap();
            }
            *acc += sum * h;
        };
        branch(lo, vv, LoadDirection::X, &mut acc);
        branch(vv, hi, LoadDirection::Y, &mut acc);
        acc
    }

    fn expected_load_with_panels(
        curve: &BondingCurve,
        origin: Valuation,
        density: &ValuationDensity,
        panels: usize,
    ) -> f64 {
        let (lo, hi) = density.support();
        let vv = origin.value();
        let x_branch = quad::simpson(
            |s: f64| {
                let vp = s * s;
                2.0 * s * density.pdf(vp) * load(curve, origin, v(vp), LoadDirection::X).unwrap()
            },
            lo.sqrt(),
            vv.sqrt(),
            panels,
        );
        let y_branch = quad::simpson(
            |s: f64| {
                let vp = 1.0 - s * s;
                2.0 * s * density.pdf(vp) * load(curve, origin, v(vp), LoadDirection::Y).unwrap()
            },
            (1.0 - hi).sqrt(),
            (1.0 - vv).sqrt(),
            panels,
        );
        x_branch + y_branch
    }

    #[test]
    fn report_bundles_consistent_values() {
        let curve = unit_curve();
        let density = ValuationDensity::truncated_gaussian(0.5, 0.05).unwrap();
        let report = LossReport::compute(&curve, v(0.5), v(0.2), &density).unwrap();
        assert!((report.load - report.divergence * report.slippage).abs() < 1e-12);
        assert!(report.expected_load >= 0.0);
    }
}
