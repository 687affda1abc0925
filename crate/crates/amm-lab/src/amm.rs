//! Constant-product pool state, swaps, and the equilibrium maps between
//! pool coordinates and market valuations.
//!
//! The pool trades tokens X and Y under the invariant `x * y = c`. Its state
//! space is the curve `(x, f(x))` with `f(x) = c / x`; the negative slope
//! `-f'(x)` is the marginal exchange rate. A market valuation `v` in (0, 1)
//! weights the two tokens so that `v` worth of X equals `1 - v` worth of Y,
//! and the equilibrium point for `v` is the curve point minimizing
//! `v * x + (1 - v) * f(x)`.

use std::fmt;

/// Equilibrium and inverse maps reject valuations closer than this to the
/// open-interval endpoints, where the curve coordinates diverge.
pub const VALUATION_WINDOW: f64 = 1e-9;

/// Relative tolerance on the pool invariant `x * y = c`.
pub const INVARIANT_REL_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub enum AmmError {
    /// Trade amounts must be strictly positive.
    NonPositiveAmount(f64),
    /// A swap asked for at least the entire opposing reserve.
    ReserveExhausted {
        requested: f64,
        reserve: f64,
    },
    /// Curve evaluation left of the vertical asymptote `x <= shift_x`.
    OutOfDomain {
        x: f64,
        min_x: f64,
    },
    /// Valuation outside (0, 1), or outside the clamp window for the maps.
    InvalidValuation(f64),
    InvalidReserves {
        x: f64,
        y: f64,
    },
    InvalidInvariant(f64),
}

impl fmt::Display for AmmError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AmmError::NonPositiveAmount(a) => write!(f, "trade amount must be positive, got {a}"),
            AmmError::ReserveExhausted { requested, reserve } => {
                write!(f, "swap of {requested} would exhaust reserve of {reserve}")
            }
            AmmError::OutOfDomain { x, min_x } => {
                write!(
                    f,
                    "coordinate {x} outside curve domain (requires x > {min_x})"
                )
            }
            AmmError::InvalidValuation(v) => {
                write!(f, "valuation {v} outside the open interval (0, 1)")
            }
            AmmError::InvalidReserves { x, y } => {
                write!(f, "reserves must be positive, got ({x}, {y})")
            }
            AmmError::InvalidInvariant(c) => write!(f, "invariant must be positive, got {c}"),
        }
    }
}

impl std::error::Error for AmmError {}

/// Token identifier for the two pool assets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Token {
    X,
    Y,
}

/// Market consensus weight `v` in (0, 1): `v` worth of X equals `1 - v`
/// worth of Y, so the relative price of X is `v / (1 - v)`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Valuation(f64);

impl Valuation {
    pub fn new(v: f64) -> Result<Self, AmmError> {
        if !v.is_finite() || v <= 0.0 || v >= 1.0 {
            return Err(AmmError::InvalidValuation(v));
        }
        Ok(Valuation(v))
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// The implied weight of token Y, `1 - v`.
    pub fn complement(self) -> f64 {
        1.0 - self.0
    }

    /// Relative price of X in units of Y, `v / (1 - v)`.
    pub fn relative_price(self) -> f64 {
        self.0 / (1.0 - self.0)
    }

    /// Token-role swap: the valuation seen when X and Y change places.
    pub fn mirrored(self) -> Valuation {
        Valuation(1.0 - self.0)
    }

    fn check_window(self) -> Result<Self, AmmError> {
        if self.0 < VALUATION_WINDOW || self.0 > 1.0 - VALUATION_WINDOW {
            return Err(AmmError::InvalidValuation(self.0));
        }
        Ok(self)
    }
}

/// Custody amounts of a constant-product pool, `x * y = c`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoolState {
    x: f64,
    y: f64,
    c: f64,
}

impl PoolState {
    /// Build a pool from its reserves; the invariant is `x * y`.
    pub fn new(x: f64, y: f64) -> Result<Self, AmmError> {
        if !x.is_finite() || !y.is_finite() || x <= 0.0 || y <= 0.0 {
            return Err(AmmError::InvalidReserves { x, y });
        }
        Ok(PoolState { x, y, c: x * y })
    }

    /// Pool sitting at the equilibrium point for valuation `v`.
    pub fn at_equilibrium(c: f64, v: Valuation) -> Result<Self, AmmError> {
        let curve = BondingCurve::new(c)?;
        let (x, y) = curve.equilibrium_state(v)?;
        Ok(PoolState { x, y, c })
    }

    pub fn x(&self) -> f64 {
        self.x
    }

    pub fn y(&self) -> f64 {
        self.y
    }

    pub fn invariant(&self) -> f64 {
        self.c
    }

    pub fn reserve(&self, token: Token) -> f64 {
        match token {
            Token::X => self.x,
            Token::Y => self.y,
        }
    }

    /// Deposit `amount_in` of `input` and receive the other token, keeping
    /// `x * y = c`. Returns the amount paid out and the new pool.
    pub fn swap_exact_in(
        &self,
        input: Token,
        amount_in: f64,
    ) -> Result<(f64, PoolState), AmmError> {
        if !amount_in.is_finite() || amount_in <= 0.0 {
            return Err(AmmError::NonPositiveAmount(amount_in));
        }
        let next = match input {
            Token::X => {
                let x = self.x + amount_in;
                PoolState {
                    x,
                    y: self.c / x,
                    c: self.c,
                }
            }
            Token::Y => {
                let y = self.y + amount_in;
                PoolState {
                    x: self.c / y,
                    y,
                    c: self.c,
                }
            }
        };
        let out = match input {
            Token::X => self.y - next.y,
            Token::Y => self.x - next.x,
        };
        Ok((out, next))
    }

    /// Withdraw exactly `amount_out` of `output`; returns the required
    /// deposit of the other token and the new pool. Fails if the request
    /// would exhaust the reserve.
    pub fn swap_exact_out(
        &self,
        output: Token,
        amount_out: f64,
    ) -> Result<(f64, PoolState), AmmError> {
        if !amount_out.is_finite() || amount_out <= 0.0 {
            return Err(AmmError::NonPositiveAmount(amount_out));
        }
        let reserve = self.reserve(output);
        if amount_out >= reserve {
            return Err(AmmError::ReserveExhausted {
                requested: amount_out,
                reserve,
            });
        }
        let next = match output {
            Token::X => {
                let x = self.x - amount_out;
                PoolState {
                    x,
                    y: self.c / x,
                    c: self.c,
                }
            }
            Token::Y => {
                let y = self.y - amount_out;
                PoolState {
                    x: self.c / y,
                    y,
                    c: self.c,
                }
            }
        };
        let deposit = match output {
            Token::X => next.y - self.y,
            Token::Y => next.x - self.x,
        };
        Ok((deposit, next))
    }

    /// Relative deviation of `x * y` from the invariant.
    pub fn invariant_drift(&self) -> f64 {
        ((self.x * self.y - self.c) / self.c).abs()
    }
}

/// The curve `(x, f(x))` defining the pool's state space, with optional
/// rigid offsets from pseudo-arbitrage shifts: `g(x) = c/(x - shift_x) - shift_y`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BondingCurve {
    c: f64,
    shift_x: f64,
    shift_y: f64,
}

impl BondingCurve {
    pub fn new(c: f64) -> Result<Self, AmmError> {
        if !c.is_finite() || c <= 0.0 {
            return Err(AmmError::InvalidInvariant(c));
        }
        Ok(BondingCurve {
            c,
            shift_x: 0.0,
            shift_y: 0.0,
        })
    }

    pub fn with_shift(c: f64, shift_x: f64, shift_y: f64) -> Result<Self, AmmError> {
        let mut curve = BondingCurve::new(c)?;
        curve.shift_x = shift_x;
        curve.shift_y = shift_y;
        Ok(curve)
    }

    pub fn invariant(&self) -> f64 {
        self.c
    }

    pub fn shift_x(&self) -> f64 {
        self.shift_x
    }

    pub fn shift_y(&self) -> f64 {
        self.shift_y
    }

    pub fn is_shifted(&self) -> bool {
        self.shift_x != 0.0 || self.shift_y != 0.0
    }

    /// Same curve with offsets accumulated by `(dx, dy)`.
    pub fn shifted(&self, dx: f64, dy: f64) -> BondingCurve {
        BondingCurve {
            c: self.c,
            shift_x: self.shift_x + dx,
            shift_y: self.shift_y + dy,
        }
    }

    /// The primary curve, offsets cleared.
    pub fn unshifted(&self) -> BondingCurve {
        BondingCurve {
            c: self.c,
            shift_x: 0.0,
            shift_y: 0.0,
        }
    }

    /// The curve with token roles exchanged: `(x, y)` lies on the curve iff
    /// `(y, x)` lies on the mirror. For the unshifted curve it is itself.
    pub fn mirrored(&self) -> BondingCurve {
        BondingCurve {
            c: self.c,
            shift_x: -self.shift_y,
            shift_y: -self.shift_x,
        }
    }

    fn domain_check(&self, x: f64) -> Result<f64, AmmError> {
        let local = x - self.shift_x;
        if !x.is_finite() || local <= 0.0 {
            return Err(AmmError::OutOfDomain {
                x,
                min_x: self.shift_x,
            });
        }
        Ok(local)
    }

    /// Curve height `g(x)`.
    pub fn eval(&self, x: f64) -> Result<f64, AmmError> {
        let local = self.domain_check(x)?;
        Ok(self.c / local - self.shift_y)
    }

    /// Curve slope `g'(x) = -c / (x - shift_x)^2`, strictly negative.
    pub fn slope(&self, x: f64) -> Result<f64, AmmError> {
        let local = self.domain_check(x)?;
        Ok(-self.c / (local * local))
    }

    /// Marginal exchange rate of Y per X at the point, `-g'(x)`.
    pub fn exchange_rate(&self, x: f64) -> Result<f64, AmmError> {
        Ok(-self.slope(x)?)
    }

    /// Equilibrium x-coordinate for valuation `v`: the stationary point of
    /// `v * x + (1 - v) * g(x)`, at `shift_x + sqrt(c * (1 - v) / v)`.
    pub fn equilibrium_x(&self, v: Valuation) -> Result<f64, AmmError> {
        let v = v.check_window()?;
        Ok(self.shift_x + (self.c * v.complement() / v.value()).sqrt())
    }

    /// Equilibrium point `(x, g(x))` for valuation `v`.
    pub fn equilibrium_state(&self, v: Valuation) -> Result<(f64, f64), AmmError> {
        let x = self.equilibrium_x(v)?;
        // Evaluate through the base curve so the pair is consistent at the
        // edges of the valuation window.
        let local = x - self.shift_x;
        Ok((x, self.c / local - self.shift_y))
    }

    /// Inverse of the equilibrium map: the valuation for which `x` is the
    /// equilibrium point, `-g'(x) / (1 - g'(x))`.
    pub fn implied_valuation(&self, x: f64) -> Result<Valuation, AmmError> {
        let local = self.domain_check(x)?;
        // -f'/(1 - f') with f' = -c/local^2 reduces to c / (c + local^2).
        let v = self.c / (self.c + local * local);
        Valuation::new(v)?.check_window()
    }

    /// Total value of holdings `(x, g(x))` at valuation `v`:
    /// `v * x + (1 - v) * g(x)`.
    pub fn capitalization(&self, x: f64, v: Valuation) -> Result<f64, AmmError> {
        let y = self.eval(x)?;
        Ok(v.value() * x + v.complement() * y)
    }

    /// Capitalization at the equilibrium point for `v`; on the unshifted
    /// curve this is `2 * sqrt(c * v * (1 - v))`.
    pub fn equilibrium_capitalization(&self, v: Valuation) -> Result<f64, AmmError> {
        let (x, y) = self.equilibrium_state(v)?;
        Ok(v.value() * x + v.complement() * y)
    }
}

/// Equilibrium valuation of a pool that tracks the market: the valuation
/// whose equilibrium point the pool occupies once it has equilibrated to an
/// observed valuation. Round-trips through the equilibrium map.
pub fn equilibrium_valuation(
    curve: &BondingCurve,
    v_obs: Valuation,
) -> Result<Valuation, AmmError> {
    let x = curve.equilibrium_x(v_obs)?;
    curve.implied_valuation(x)
}
