//! Peakon-antipeakon collision events and the shock data they create.
//!
//! A collision of an adjacent pair is a blow-up of that pair's masses with
//! the total pair mass staying finite, so collisions are exactly the zeros
//! of the inverse-outer-mass cores of the closed form: the core of 1/m1
//! vanishes when the leading pair (1,2) merges, the core of 1/m3 when the
//! trailing pair (2,3) does. At the collision the pair leaves behind the
//! data of a single shockpeakon: the limiting pair mass (amplitude), the
//! half jump of the wave profile across the merge point (shock), and the
//! merge point itself. Those limits are extracted by Richardson
//! extrapolation of the closed form toward the collision time.

use std::fmt;

use crate::closedform::{ClosedForm3, Coords3};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Backward,
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Direction::Forward => "forward",
            Direction::Backward => "backward",
        })
    }
}

/// A first collision in one time direction, with the shockpeakon data.
#[derive(Clone, Debug)]
pub struct CollisionEvent {
    pub t_c: f64,
    /// 1-based indices of the colliding adjacent pair.
    pub pair: [usize; 2],
    /// Where the pair merges.
    pub x_c: f64,
    /// Limiting total mass of the pair, m_j + m_{j+1} at the collision.
    pub amplitude: f64,
    /// Half the jump of u across the merge point; positive when a peakon
    /// overtakes an antipeakon.
    pub shock: f64,
    pub direction: Direction,
    /// Both pairs collide at the same instant (within 1e-10).
    pub simultaneous: bool,
}

impl CollisionEvent {
    /// Fixed-order JSON record. The `simultaneous` flag is diagnostic and
    /// deliberately not part of the serialized format.
    pub fn to_json(&self) -> String {
        format!(
            "{{\"t_c\":{:.16e},\"pair\":[{},{}],\"x_c\":{:.16e},\"amplitude\":{:.16e},\"shock\":{:.16e},\"direction\":\"{}\"}}",
            self.t_c, self.pair[0], self.pair[1], self.x_c, self.amplitude, self.shock,
            self.direction
        )
    }
}

/// u(x_j) - u(x_{j+1}) for the adjacent pair with 0-based left index `j`,
/// written to avoid the huge-mass cancellation: the pair difference
/// multiplies the blowing masses by the vanishing gap factor directly.
fn u_jump(c: &Coords3, j: usize) -> f64 {
    let gap = c.x[j + 1] - c.x[j];
    let pair = (c.m[j] - c.m[j + 1]) * (-f64::exp_m1(-gap));
    let k = if j == 0 { 2 } else { 0 };
    let spec = c.m[k]
        * ((-(c.x[j] - c.x[k]).abs()).exp() - (-(c.x[j + 1] - c.x[k]).abs()).exp());
    pair + spec
}

/// Richardson extrapolation of f(h) to h = 0 assuming an expansion in
/// integer powers of h: up to 8 halvings of h0, accepting when successive
/// diagonal entries agree to 1e-8 relative, and failing when even the last
/// two disagree beyond 1e-5 relative.
fn richardson_limit<F: Fn(f64) -> Result<f64>>(f: F, h0: f64) -> Result<f64> {
    const LEVELS: usize = 8;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut last_diff = f64::INFINITY;
    for i in 0..=LEVELS {
        let h = h0 / (1u32 << i) as f64;
        let v = f(h)?;
        if !v.is_finite() {
            return Err(Error::ExtrapolationFailure(format!(
                "sample at h = {h} is not finite"
            )));
        }
        let mut row = vec![v];
        for j in 1..=i {
            let factor = (1u64 << j) as f64;
            let v = (factor * row[j - 1] - rows[i - 1][j - 1]) / (factor - 1.0);
            row.push(v);
        }
        if i > 0 {
            let diag = *row.last().unwrap();
            let prev = *rows[i - 1].last().unwrap();
            last_diff = (diag - prev).abs();
            if last_diff <= 1e-8 * diag.abs().max(1.0) {
                return Ok(diag);
            }
        }
        rows.push(row);
    }
    let last = *rows[LEVELS].last().unwrap();
    if last_diff <= 1e-5 * last.abs().max(1.0) {
        Ok(last)
    } else {
        Err(Error::ExtrapolationFailure(format!(
            "diagonal still moving by {last_diff} after {LEVELS} halvings"
        )))
    }
}

/// First collision of either adjacent pair in the given time direction,
/// scanning as far as `horizon` (and never past the validity window). None
/// when neither inverse-mass core vanishes in range.
pub fn first_collision(
    cf: &ClosedForm3,
    direction: Direction,
    horizon: f64,
) -> Result<Option<CollisionEvent>> {
    let (lo, hi) = cf.window();
    let limit = match direction {
        Direction::Forward => horizon.min(hi),
        Direction::Backward => horizon.min(-lo),
    };

    let root_of = |core: &crate::polycalc::ExpSum| -> Result<Option<f64>> {
        match direction {
            Direction::Forward => core.smallest_positive_root(limit),
            Direction::Backward => Ok(core
                .reflected()
                .smallest_positive_root(limit)?
                .map(|t| -t)),
        }
    };
    let leading = root_of(&cf.inv_m1.core)?;
    let trailing = root_of(&cf.inv_m3.core)?;

    let (t_c, pair) = match (leading, trailing) {
        (None, None) => return Ok(None),
        (Some(t), None) => (t, [1usize, 2usize]),
        (None, Some(t)) => (t, [2, 3]),
        (Some(ta), Some(tb)) => {
            if ta.abs() <= tb.abs() {
                (ta, [1, 2])
            } else {
                (tb, [2, 3])
            }
        }
    };
    let simultaneous = match (leading, trailing) {
        (Some(ta), Some(tb)) => (ta - tb).abs() <= 1e-10 * t_c.abs().max(1.0),
        _ => false,
    };

    // Approach the collision from inside the interval between 0 and t_c.
    // When the other pair collides nearby, the expansions in h are only
    // valid up to that distance, so the base step shrinks below it.
    let side = t_c.signum();
    let mut h0 = (1e-3 * t_c.abs().max(0.1)).min(0.5 * t_c.abs());
    if let (Some(ta), Some(tb)) = (leading, trailing) {
        let d = (ta - tb).abs();
        if d > 0.0 {
            h0 = h0.min(d / 8.0);
        }
    }
    let j = pair[0] - 1;
    let spectator = if j == 0 { 2 } else { 0 };

    let amplitude = richardson_limit(
        |h| Ok(cf.m_total - cf.coords_at(t_c - side * h)?.m[spectator]),
        h0,
    )?;
    let shock = richardson_limit(
        |h| Ok(0.5 * u_jump(&cf.coords_at(t_c - side * h)?, j)),
        h0,
    )?;
    let x_c = richardson_limit(
        |h| {
            let c = cf.coords_at(t_c - side * h)?;
            Ok(0.5 * (c.x[j] + c.x[j + 1]))
        },
        h0,
    )?;

    Ok(Some(CollisionEvent {
        t_c,
        pair,
        x_c,
        amplitude,
        shock,
        direction,
        simultaneous,
    }))
}
