//! Classification of three-peakon initial data by mass signs.
//!
//! The sign pattern of the three masses decides the qualitative fate of the
//! configuration: how many eigenvalues sit in the right half plane (exactly
//! the number of positive masses), whether the spectrum can leave the real
//! line, whether the solution is asymptotically free in each time
//! direction, and which adjacent pairs collide when. The table of the eight
//! patterns is hardcoded here; `verify_sign_count` checks the eigenvalue
//! count law for a concrete state, `portrait` sweeps a mass grid and
//! records every spectrum, and `asymptotic_velocities` measures the late
//! free velocities, which converge to the reciprocals of the eigenvalues.

use std::io;

use num_complex::Complex64;

use crate::dynamics::{integrate_at, IntegrateOptions, StopReason};
use crate::error::{Error, Result};
use crate::events::Direction;
use crate::spectral::{eigenvalues, PeakonState};

/// Sign pattern of three nonzero masses, entries +1 or -1.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Signature(pub [i8; 3]);

impl Signature {
    pub fn new(signs: [i8; 3]) -> Result<Self> {
        if signs.iter().any(|&s| s != 1 && s != -1) {
            return Err(Error::InvalidSignature);
        }
        Ok(Signature(signs))
    }

    pub fn of_state(state: &PeakonState) -> Result<Self> {
        if state.n() != 3 {
            return Err(Error::Unsupported(
                "signature classification covers three peakons".into(),
            ));
        }
        let mut signs = [0i8; 3];
        for (s, &m) in signs.iter_mut().zip(&state.m) {
            *s = if m > 0.0 {
                1
            } else if m < 0.0 {
                -1
            } else {
                return Err(Error::InvalidSignature);
            };
        }
        Ok(Signature(signs))
    }

    pub fn negated(self) -> Signature {
        Signature([-self.0[0], -self.0[1], -self.0[2]])
    }

    /// Number of positive masses; equals the number of eigenvalues in the
    /// open right half plane.
    pub fn n_plus(self) -> usize {
        self.0.iter().filter(|&&s| s == 1).count()
    }
}

impl std::fmt::Display for Signature {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for s in self.0 {
            f.write_str(if s == 1 { "+" } else { "-" })?;
        }
        Ok(())
    }
}

/// Which half plane may hold a complex-conjugate eigenvalue pair.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HalfPlane {
    Positive,
    Negative,
}

/// Late-time behavior in each direction.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Asymptotics {
    /// Peakons separate freely as t -> +inf and as t -> -inf.
    FreeBothWays,
    /// Free as t -> -inf only; a collision interrupts the future.
    FreeBackwardOnly,
    /// Free as t -> +inf only; a collision interrupts the past.
    FreeForwardOnly,
    /// Collisions interrupt both directions.
    Confined,
}

/// Which adjacent pairs collide first in each direction.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CollisionPattern {
    None,
    Forward([usize; 2]),
    Backward([usize; 2]),
    Both {
        forward: [usize; 2],
        backward: [usize; 2],
    },
}

/// One row of the classification table.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SignatureClass {
    pub signature: Signature,
    /// Eigenvalues in the open right half plane, counted with multiplicity.
    pub n_plus: usize,
    /// The spectrum is guaranteed real and simple.
    pub always_real_simple: bool,
    /// When not always real, the side that may hold a conjugate pair.
    pub complex_pair_side: Option<HalfPlane>,
    pub asymptotics: Asymptotics,
    pub collisions: CollisionPattern,
}

const TABLE: [SignatureClass; 8] = [
    SignatureClass {
        signature: Signature([1, 1, 1]),
        n_plus: 3,
        always_real_simple: true,
        complex_pair_side: None,
        asymptotics: Asymptotics::FreeBothWays,
        collisions: CollisionPattern::None,
    },
    SignatureClass {
        signature: Signature([1, 1, -1]),
        n_plus: 2,
        always_real_simple: true,
        complex_pair_side: None,
        asymptotics: Asymptotics::FreeBackwardOnly,
        collisions: CollisionPattern::Forward([2, 3]),
    },
    SignatureClass {
        signature: Signature([1, -1, 1]),
        n_plus: 2,
        always_real_simple: false,
        complex_pair_side: Some(HalfPlane::Positive),
        asymptotics: Asymptotics::Confined,
        collisions: CollisionPattern::Both {
            forward: [1, 2],
            backward: [2, 3],
        },
    },
    SignatureClass {
        signature: Signature([1, -1, -1]),
        n_plus: 1,
        always_real_simple: true,
        complex_pair_side: None,
        asymptotics: Asymptotics::FreeBackwardOnly,
        collisions: CollisionPattern::Forward([1, 2]),
    },
    SignatureClass {
        signature: Signature([-1, 1, 1]),
        n_plus: 2,
        always_real_simple: true,
        complex_pair_side: None,
        asymptotics: Asymptotics::FreeForwardOnly,
        collisions: CollisionPattern::Backward([1, 2]),
    },
    SignatureClass {
        signature: Signature([-1, 1, -1]),
        n_plus: 1,
        always_real_simple: false,
        complex_pair_side: Some(HalfPlane::Negative),
        asymptotics: Asymptotics::Confined,
        collisions: CollisionPattern::Both {
            forward: [2, 3],
            backward: [1, 2],
        },
    },
    SignatureClass {
        signature: Signature([-1, -1, 1]),
        n_plus: 1,
        always_real_simple: true,
        complex_pair_side: None,
        asymptotics: Asymptotics::FreeForwardOnly,
        collisions: CollisionPattern::Backward([2, 3]),
    },
    SignatureClass {
        signature: Signature([-1, -1, -1]),
        n_plus: 0,
        always_real_simple: true,
        complex_pair_side: None,
        asymptotics: Asymptotics::FreeBothWays,
        collisions: CollisionPattern::None,
    },
];

/// The table row for a sign pattern.
pub fn classify(signature: Signature) -> SignatureClass {
    *TABLE
        .iter()
        .find(|row| row.signature == signature)
        .expect("all eight sign patterns are tabulated")
}

/// Outcome of checking the right-half-plane eigenvalue count law on one
/// state.
#[derive(Clone, Debug)]
pub struct SignCountReport {
    pub signature: Signature,
    pub expected: usize,
    pub observed: usize,
    pub matches: bool,
    /// An eigenvalue sits numerically on the imaginary axis, making the
    /// count unreliable.
    pub numerically_imaginary: bool,
    pub eigenvalues: Vec<Complex64>,
}

pub fn verify_sign_count(state: &PeakonState, cluster_tol: f64) -> Result<SignCountReport> {
    let signature = Signature::of_state(state)?;
    let lams = eigenvalues(state, cluster_tol)?.expanded();
    let observed = lams.iter().filter(|l| l.re > 0.0).count();
    let numerically_imaginary = lams.iter().any(|l| l.re.abs() < 1e-12 * l.norm());
    let expected = signature.n_plus();
    Ok(SignCountReport {
        signature,
        expected,
        observed,
        matches: observed == expected,
        numerically_imaginary,
        eigenvalues: lams,
    })
}

/// One axis of a portrait grid: value(i) = base + step * i for i = 1..=count.
#[derive(Clone, Copy, Debug)]
pub struct GridAxis {
    pub base: f64,
    pub step: f64,
    pub count: usize,
}

impl GridAxis {
    pub fn value(&self, i: usize) -> f64 {
        self.base + self.step * i as f64
    }

    fn validate(&self, name: &str) -> Result<()> {
        if self.count == 0 {
            return Err(Error::InvalidGrid(format!("{name} axis has no points")));
        }
        if !self.base.is_finite() || !self.step.is_finite() {
            return Err(Error::InvalidGrid(format!("{name} axis is not finite")));
        }
        let (a, b) = (self.value(1), self.value(self.count));
        if a == 0.0 || b == 0.0 || (a > 0.0) != (b > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "{name} axis crosses zero: a vanishing mass degenerates the spectrum"
            )));
        }
        Ok(())
    }
}

/// A rectangular sweep over the first two masses at fixed positions and
/// fixed third mass. The default is the standard two-positive-one-negative
/// sweep whose spectra fill out the eigenvalue portrait.
#[derive(Clone, Debug)]
pub struct PortraitSpec {
    pub m1: GridAxis,
    pub m2: GridAxis,
    pub m3: f64,
    pub x: [f64; 3],
}

impl Default for PortraitSpec {
    fn default() -> Self {
        PortraitSpec {
            m1: GridAxis {
                base: 1.2,
                step: 0.02,
                count: 75,
            },
            m2: GridAxis {
                base: -5.0,
                step: -0.01,
                count: 75,
            },
            m3: 4.0,
            x: [-0.2, 0.0, 0.1],
        }
    }
}

impl PortraitSpec {
    fn validate(&self) -> Result<()> {
        self.m1.validate("m1")?;
        self.m2.validate("m2")?;
        if !self.m3.is_finite() || self.m3 == 0.0 {
            return Err(Error::InvalidGrid("m3 must be finite and nonzero".into()));
        }
        if self.x.iter().any(|v| !v.is_finite()) || self.x[0] >= self.x[1] || self.x[1] >= self.x[2]
        {
            return Err(Error::InvalidGrid(
                "positions must be finite and strictly increasing".into(),
            ));
        }
        Ok(())
    }
}

/// Spectrum at one grid point.
#[derive(Clone, Debug, PartialEq)]
pub struct PortraitRecord {
    pub j: usize,
    pub k: usize,
    pub m: [f64; 3],
    /// The three eigenvalues sorted by (re, im) ascending.
    pub eigenvalues: [Complex64; 3],
}

/// Sweeps the grid row-major (j outer, k inner).
pub fn portrait(spec: &PortraitSpec, cluster_tol: f64) -> Result<Vec<PortraitRecord>> {
    spec.validate()?;
    let mut out = Vec::with_capacity(spec.m1.count * spec.m2.count);
    for j in 1..=spec.m1.count {
        for k in 1..=spec.m2.count {
            let m = [spec.m1.value(j), spec.m2.value(k), spec.m3];
            let state = PeakonState {
                x: spec.x.to_vec(),
                m: m.to_vec(),
            };
            let lams = eigenvalues(&state, cluster_tol)?.expanded();
            if lams.len() != 3 {
                return Err(Error::Internal(format!(
                    "grid point ({j}, {k}) produced {} eigenvalues",
                    lams.len()
                )));
            }
            out.push(PortraitRecord {
                j,
                k,
                m,
                eigenvalues: [lams[0], lams[1], lams[2]],
            });
        }
    }
    Ok(out)
}

/// Writes `j,k,m1,m2,m3,re1,im1,re2,im2,re3,im3` rows.
pub fn write_portrait_csv<W: io::Write>(records: &[PortraitRecord], out: &mut W) -> io::Result<()> {
    writeln!(out, "j,k,m1,m2,m3,re1,im1,re2,im2,re3,im3")?;
    for r in records {
        write!(out, "{},{}", r.j, r.k)?;
        for v in r.m {
            write!(out, ",{v:.16e}")?;
        }
        for l in r.eigenvalues {
            write!(out, ",{:.16e},{:.16e}", l.re, l.im)?;
        }
        writeln!(out)?;
    }
    Ok(())
}

const ASYMPTOTIC_TIME: f64 = 30.0;
const ASYMPTOTIC_DELTA: f64 = 1e-3;

/// Peakon velocities deep in the free regime, measured by a central
/// difference of the integrated positions at |t| = 30. Fails with
/// `WrongDirection` when a collision interrupts the approach, which happens
/// exactly for the sign patterns that are not free in that direction.
pub fn asymptotic_velocities(state: &PeakonState, direction: Direction) -> Result<Vec<f64>> {
    let sign = match direction {
        Direction::Forward => 1.0,
        Direction::Backward => -1.0,
    };
    let times = [
        sign * (ASYMPTOTIC_TIME - ASYMPTOTIC_DELTA),
        sign * (ASYMPTOTIC_TIME + ASYMPTOTIC_DELTA),
    ];
    let traj = integrate_at(state, &times, &IntegrateOptions::default())?;
    if traj.stop != StopReason::Completed || traj.states.len() != 2 {
        return Err(Error::WrongDirection(format!(
            "integration stopped ({:?}) before reaching t = {}",
            traj.stop, times[1]
        )));
    }
    let dt = times[1] - times[0];
    Ok(traj.states[1]
        .x
        .iter()
        .zip(&traj.states[0].x)
        .map(|(b, a)| (b - a) / dt)
        .collect())
}
