//! Direct numerical integration of the peakon ordinary differential
//! equations of the b-family,
//!
//!   x_k' = sum_i m_i e^{-|x_k - x_i|}
//!   m_k' = (b - 1) m_k sum_i m_i sgn(x_k - x_i) e^{-|x_k - x_i|}
//!
//! with sgn(0) = 0. b = 3 is the Degasperis-Procesi case, b = 2 the
//! Camassa-Holm one. The integrator is an adaptive Dormand-Prince 5(4) pair;
//! ordering of the positions, finiteness, and a mass cap are enforced on
//! every accepted step, and a step-size underflow against one of those
//! constraints reports how the run stopped instead of failing.

use std::io;

use crate::error::{Error, Result};
use crate::spectral::{spectral_polynomials, PeakonState};

/// Tuning knobs for [`integrate`].
#[derive(Clone, Debug)]
pub struct IntegrateOptions {
    /// Family parameter; 3 selects the Degasperis-Procesi equation.
    pub b: f64,
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Two peakons closer than this stop the run as a near collision.
    pub gap_eps: f64,
    /// A mass beyond this magnitude stops the run as a blow-up.
    pub mass_cap: f64,
}

impl Default for IntegrateOptions {
    fn default() -> Self {
        IntegrateOptions {
            b: 3.0,
            rel_tol: 1e-10,
            abs_tol: 1e-12,
            gap_eps: 1e-8,
            mass_cap: 1e8,
        }
    }
}

/// How a run ended.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StopReason {
    /// Reached the requested end time.
    Completed,
    /// Two positions could not be kept further apart than `gap_eps`.
    NearCollision,
    /// A mass magnitude exceeded `mass_cap`.
    MassCap,
}

/// Time series of states produced by the integrator.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub t: Vec<f64>,
    pub states: Vec<PeakonState>,
    pub stop: StopReason,
}

impl Trajectory {
    pub fn final_time(&self) -> f64 {
        *self.t.last().expect("a trajectory holds at least its initial point")
    }

    pub fn final_state(&self) -> &PeakonState {
        self.states.last().expect("a trajectory holds at least its initial point")
    }
}

fn rhs(x: &[f64], m: &[f64], b: f64, dx: &mut [f64], dm: &mut [f64]) {
    let n = x.len();
    for k in 0..n {
        let mut u = 0.0;
        let mut flux = 0.0;
        for i in 0..n {
            let d = x[k] - x[i];
            let e = (-d.abs()).exp();
            u += m[i] * e;
            // sgn(0) = 0 keeps the self-interaction out of the mass flux.
            let sgn = if d > 0.0 {
                1.0
            } else if d < 0.0 {
                -1.0
            } else {
                0.0
            };
            flux += m[i] * sgn * e;
        }
        dx[k] = u;
        dm[k] = (b - 1.0) * m[k] * flux;
    }
}

// Dormand-Prince 5(4) coefficients.
const A: [[f64; 6]; 6] = [
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const B5: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

enum Violation {
    Gap,
    Mass,
    NonFinite,
}

fn check(y: &[f64], n: usize, opts: &IntegrateOptions) -> std::result::Result<(), Violation> {
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Violation::NonFinite);
    }
    if y[..n].windows(2).any(|w| w[1] - w[0] <= opts.gap_eps) {
        return Err(Violation::Gap);
    }
    if y[n..].iter().any(|v| v.abs() > opts.mass_cap) {
        return Err(Violation::Mass);
    }
    Ok(())
}

/// Integrates from t = 0 to `t_end` (either sign), recording every accepted
/// step. See [`integrate_at`] to record at chosen times instead.
pub fn integrate(state: &PeakonState, t_end: f64, opts: &IntegrateOptions) -> Result<Trajectory> {
    integrate_core(state, t_end, opts, None)
}

/// Integrates from t = 0, recording exactly at the requested times, which
/// must be finite, strictly monotone toward `t_end` = `times.last()`, and
/// start at 0 or beyond in that direction.
pub fn integrate_at(
    state: &PeakonState,
    times: &[f64],
    opts: &IntegrateOptions,
) -> Result<Trajectory> {
    let Some(&t_end) = times.last() else {
        return Err(Error::InvalidState("no sample times requested".into()));
    };
    let dir = if t_end < 0.0 { -1.0 } else { 1.0 };
    if times.iter().any(|t| !t.is_finite())
        || times.windows(2).any(|w| (w[1] - w[0]) * dir <= 0.0)
        || times[0] * dir < 0.0
    {
        return Err(Error::InvalidState(
            "sample times must move monotonically from 0 toward the end time".into(),
        ));
    }
    integrate_core(state, t_end, opts, Some(times))
}

fn integrate_core(
    state: &PeakonState,
    t_end: f64,
    opts: &IntegrateOptions,
    sample: Option<&[f64]>,
) -> Result<Trajectory> {
    state.validate()?;
    let n = state.n();
    let dim = 2 * n;
    let mut y: Vec<f64> = state.x.iter().chain(state.m.iter()).copied().collect();

    let mut traj = Trajectory {
        t: Vec::new(),
        states: Vec::new(),
        stop: StopReason::Completed,
    };
    let mut next_sample = 0usize;
    let mut record = |t: f64, y: &[f64], next_sample: &mut usize| {
        let state = PeakonState {
            x: y[..n].to_vec(),
            m: y[n..].to_vec(),
        };
        match sample {
            None => {
                traj.t.push(t);
                traj.states.push(state);
            }
            Some(times) => {
                while *next_sample < times.len() && times[*next_sample] == t {
                    traj.t.push(t);
                    traj.states.push(state.clone());
                    *next_sample += 1;
                }
            }
        }
    };

    match check(&y, n, opts) {
        Ok(()) => {}
        Err(Violation::NonFinite) => unreachable!("validated above"),
        Err(Violation::Gap) => {
            record(0.0, &y, &mut next_sample);
            traj.stop = StopReason::NearCollision;
            return Ok(traj);
        }
        Err(Violation::Mass) => {
            record(0.0, &y, &mut next_sample);
            traj.stop = StopReason::MassCap;
            return Ok(traj);
        }
    }
    record(0.0, &y, &mut next_sample);
    if t_end == 0.0 {
        return Ok(traj);
    }

    let dir = t_end.signum();
    let h_floor = 1e-14 * t_end.abs();
    let mut h = dir * (1e-3 * t_end.abs()).min(0.1);
    let mut t = 0.0_f64;

    let mut k: Vec<Vec<f64>> = vec![vec![0.0; dim]; 7];
    let mut y_stage = vec![0.0; dim];
    let mut y_new = vec![0.0; dim];
    let (dx, dm) = k[0].split_at_mut(n);
    rhs(&y[..n], &y[n..], opts.b, &mut dx[..], &mut dm[..]);

    loop {
        // Clamp onto the end time and onto the next sample time.
        let mut target = t_end;
        if let Some(times) = sample {
            if next_sample < times.len() {
                target = times[next_sample];
            }
        }
        if (target - t) * dir <= 0.0 {
            target = t_end;
        }
        let mut clamped = false;
        if ((t + h) - target) * dir >= 0.0 {
            h = target - t;
            clamped = true;
        }

        for s in 0..6 {
            for i in 0..dim {
                let mut acc = 0.0;
                for (j, kj) in k.iter().enumerate().take(s + 1) {
                    acc += A[s][j] * kj[i];
                }
                y_stage[i] = y[i] + h * acc;
            }
            let (xs, ms) = y_stage.split_at(n);
            let (dx, dm) = k[s + 1].split_at_mut(n);
            rhs(xs, ms, opts.b, &mut dx[..], &mut dm[..]);
        }
        let mut err_sq = 0.0;
        for i in 0..dim {
            let mut acc5 = 0.0;
            let mut acc4 = 0.0;
            for j in 0..7 {
                acc5 += B5[j] * k[j][i];
                acc4 += B4[j] * k[j][i];
            }
            y_new[i] = y[i] + h * acc5;
            let scale = opts.abs_tol + opts.rel_tol * y[i].abs().max(y_new[i].abs());
            let e = h * (acc5 - acc4) / scale;
            err_sq += e * e;
        }
        let err = (err_sq / dim as f64).sqrt();

        let step_ok = err <= 1.0 && y_new.iter().all(|v| v.is_finite());
        let violation = if step_ok { check(&y_new, n, opts).err() } else { None };

        if step_ok && violation.is_none() {
            t = if clamped { target } else { t + h };
            y.copy_from_slice(&y_new);
            let (xs, ms) = y.split_at(n);
            let (dx, dm) = k[6].split_at_mut(n);
            rhs(xs, ms, opts.b, &mut dx[..], &mut dm[..]);
            k.swap(0, 6);
            record(t, &y, &mut next_sample);
            if t == t_end {
                return Ok(traj);
            }
            let factor = if err == 0.0 {
                5.0
            } else {
                (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
            };
            h = dir * (h.abs() * factor);
            continue;
        }

        // Rejected, by error estimate or by a constraint violation.
        let factor = if !step_ok {
            if err.is_finite() && err > 1.0 {
                (0.9 * err.powf(-0.2)).clamp(0.1, 0.9)
            } else {
                0.1
            }
        } else {
            0.5
        };
        h = dir * (h.abs() * factor);
        if h.abs() >= h_floor {
            continue;
        }

        // Step size underflow: report how the run got stuck.
        return match violation {
            Some(Violation::Gap) => {
                traj.stop = StopReason::NearCollision;
                Ok(traj)
            }
            Some(Violation::Mass) => {
                traj.stop = StopReason::MassCap;
                Ok(traj)
            }
            _ => Err(Error::IntegrationFailure {
                t,
                reason: "step size underflow".into(),
                last_good: Box::new(PeakonState {
                    x: y[..n].to_vec(),
                    m: y[n..].to_vec(),
                }),
            }),
        };
    }
}

/// The first three conserved quantities of the flow. For three peakons they
/// are evaluated through difference-stable closed forms; otherwise they are
/// read off the spectral polynomial A(z) = 1 - M1 z + M2 z^2 - M3 z^3 + ...
pub fn invariants(state: &PeakonState) -> [f64; 3] {
    if state.n() == 3 {
        let (x, m) = (&state.x, &state.m);
        let g = |i: usize, j: usize| -f64::exp_m1(x[i] - x[j]);
        let g12 = g(0, 1);
        let g23 = g(1, 2);
        let g13 = g(0, 2);
        [
            m[0] + m[1] + m[2],
            m[0] * m[1] * g12 * g12 + m[1] * m[2] * g23 * g23 + m[0] * m[2] * g13 * g13,
            m[0] * m[1] * m[2] * g12 * g12 * g23 * g23,
        ]
    } else {
        let a = spectral_polynomials(state).a;
        [-a.coeff(1).re, a.coeff(2).re, -a.coeff(3).re]
    }
}

/// True when every mass keeps its initial sign along the whole trajectory
/// (zero masses must stay zero). The flow multiplies each mass by a positive
/// factor, so this holds for any faithful integration.
pub fn mass_signs_persist(traj: &Trajectory) -> bool {
    let Some(first) = traj.states.first() else {
        return true;
    };
    traj.states.iter().all(|s| {
        s.m.iter()
            .zip(&first.m)
            .all(|(&m, &m0)| (m > 0.0 && m0 > 0.0) || (m < 0.0 && m0 < 0.0) || (m == 0.0 && m0 == 0.0))
    })
}

/// Writes `t,x1..xn,m1..mn,M1,M2,M3` rows with full-precision numbers.
pub fn write_trajectory_csv<W: io::Write>(traj: &Trajectory, out: &mut W) -> io::Result<()> {
    let n = traj.states.first().map_or(0, PeakonState::n);
    write!(out, "t")?;
    for i in 1..=n {
        write!(out, ",x{i}")?;
    }
    for i in 1..=n {
        write!(out, ",m{i}")?;
    }
    writeln!(out, ",M1,M2,M3")?;
    for (t, state) in traj.t.iter().zip(&traj.states) {
        let inv = invariants(state);
        write!(out, "{t:.16e}")?;
        for v in state.x.iter().chain(&state.m).chain(&inv) {
            write!(out, ",{v:.16e}")?;
        }
        writeln!(out)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    /// The six right-hand sides for three ordered peakons, written out by
    /// hand. Assumes x1 < x2 < x3.
    fn rhs3_by_hand(x: &[f64], m: &[f64], b: f64) -> [f64; 6] {
        let e12 = (x[0] - x[1]).exp();
        let e13 = (x[0] - x[2]).exp();
        let e23 = (x[1] - x[2]).exp();
        [
            m[0] + m[1] * e12 + m[2] * e13,
            m[0] * e12 + m[1] + m[2] * e23,
            m[0] * e13 + m[1] * e23 + m[2],
            (b - 1.0) * m[0] * (-m[1] * e12 - m[2] * e13),
            (b - 1.0) * m[1] * (m[0] * e12 - m[2] * e23),
            (b - 1.0) * m[2] * (m[0] * e13 + m[1] * e23),
        ]
    }

    #[test]
    fn rhs_matches_hand_written_three_peakon_formulas() {
        let cases = [
            (vec![-1.3, 0.2, 0.9], vec![1.5, -0.7, 2.1]),
            (vec![-0.4, 0.1, 2.3], vec![-1.0, 3.0, -0.2]),
        ];
        for b in [2.0, 3.0] {
            for (x, m) in &cases {
                let mut dx = [0.0; 3];
                let mut dm = [0.0; 3];
                rhs(x, m, b, &mut dx, &mut dm);
                let want = rhs3_by_hand(x, m, b);
                for k in 0..3 {
                    assert!((dx[k] - want[k]).abs() <= 1e-14 * want[k].abs().max(1.0));
                    assert!((dm[k] - want[k + 3]).abs() <= 1e-14 * want[k + 3].abs().max(1.0));
                }
            }
        }
    }

    #[test]
    fn free_peakon_travels_at_its_own_speed() {
        let state = PeakonState::new(vec![0.0], vec![2.0]).unwrap();
        let traj = integrate(&state, 3.0, &IntegrateOptions::default()).unwrap();
        assert_eq!(traj.stop, StopReason::Completed);
        let end = traj.final_state();
        assert!((end.x[0] - 6.0).abs() <= 1e-9);
        assert!((end.m[0] - 2.0).abs() <= 1e-12);
    }

    #[test]
    fn invariants_agree_with_spectral_coefficients() {
        let state = PeakonState::new(vec![-0.9, 0.3, 1.1], vec![1.2, -2.0, 0.7]).unwrap();
        let closed = invariants(&state);
        let a = spectral_polynomials(&state).a;
        let from_poly = [-a.coeff(1).re, a.coeff(2).re, -a.coeff(3).re];
        for k in 0..3 {
            assert!(
                (closed[k] - from_poly[k]).abs() <= 1e-12 * from_poly[k].abs().max(1.0),
                "M{}: {} vs {}",
                k + 1,
                closed[k],
                from_poly[k]
            );
        }
    }

    #[test]
    fn invariants_stay_constant_along_trajectories() {
        let cases = [
            (vec![-1.0, 0.0, 1.0], vec![1.0, 2.0, 0.5], 2.0),
            // Mixed signs drift toward a collision; stay on a short window.
            (vec![-1.0, 0.0, 1.0], vec![1.2, -5.0, 4.0], 0.15),
        ];
        for (x, m, t_end) in cases {
            let state = PeakonState::new(x, m).unwrap();
            let before = invariants(&state);
            let traj = integrate(&state, t_end, &IntegrateOptions::default()).unwrap();
            assert_eq!(traj.stop, StopReason::Completed);
            for s in &traj.states {
                let now = invariants(s);
                for k in 0..3 {
                    assert!(
                        (now[k] - before[k]).abs() <= 1e-8 * before[k].abs().max(1.0),
                        "M{} drifted from {} to {}",
                        k + 1,
                        before[k],
                        now[k]
                    );
                }
            }
        }
    }

    #[test]
    fn negating_masses_reverses_time() {
        let x0 = vec![-1.1, 0.2, 0.8];
        let m0 = vec![0.9, -0.3, 1.4];
        let times: Vec<f64> = (0..=8).map(|k| k as f64 * 0.1).collect();
        let neg_times: Vec<f64> = times.iter().map(|t| -t).collect();
        let fwd = integrate_at(
            &PeakonState::new(x0.clone(), m0.clone()).unwrap(),
            &times,
            &IntegrateOptions::default(),
        )
        .unwrap();
        let bwd = integrate_at(
            &PeakonState::new(x0, m0.iter().map(|m| -m).collect()).unwrap(),
            &neg_times,
            &IntegrateOptions::default(),
        )
        .unwrap();
        assert_eq!(fwd.states.len(), bwd.states.len());
        for (f, b) in fwd.states.iter().zip(&bwd.states) {
            for k in 0..3 {
                assert!((f.x[k] - b.x[k]).abs() <= 1e-8);
                assert!((f.m[k] + b.m[k]).abs() <= 1e-8);
            }
        }
    }

    #[test]
    fn mass_signs_never_flip() {
        let state = PeakonState::new(vec![-1.0, 0.0, 1.0], vec![1.2, -5.0, 4.0]).unwrap();
        let traj = integrate(&state, 0.15, &IntegrateOptions::default()).unwrap();
        assert!(mass_signs_persist(&traj));
    }

    #[test]
    fn head_on_pair_stops_near_the_collision() {
        let state = PeakonState::new(vec![-1.0, 1.0], vec![1.0, -1.0]).unwrap();
        let opts = IntegrateOptions {
            gap_eps: 1e-6,
            mass_cap: 1e12,
            ..IntegrateOptions::default()
        };
        let traj = integrate(&state, 5.0, &opts).unwrap();
        assert_eq!(traj.stop, StopReason::NearCollision);
        let end = traj.final_state();
        assert!(end.x[1] - end.x[0] <= 1e-4, "gap {}", end.x[1] - end.x[0]);
        assert!(traj.final_time() > 0.0 && traj.final_time() < 5.0);
        // The near-collision masses have blown up in opposite directions.
        assert!(end.m[0] > 1.0 && end.m[1] < -1.0);
    }

    #[test]
    fn mass_cap_stop_is_reported() {
        let state = PeakonState::new(vec![-1.0, 1.0], vec![1.0, -1.0]).unwrap();
        let opts = IntegrateOptions {
            mass_cap: 10.0,
            ..IntegrateOptions::default()
        };
        let traj = integrate(&state, 5.0, &opts).unwrap();
        assert_eq!(traj.stop, StopReason::MassCap);
        assert!(traj.final_state().m[0] <= 10.0);
    }

    #[test]
    fn starting_inside_the_gap_floor_stops_immediately() {
        let state = PeakonState::new(vec![0.0, 1e-9], vec![1.0, -1.0]).unwrap();
        let traj = integrate(&state, 1.0, &IntegrateOptions::default()).unwrap();
        assert_eq!(traj.stop, StopReason::NearCollision);
        assert_eq!(traj.t, vec![0.0]);
    }

    #[test]
    fn sampled_output_lands_exactly_on_requested_times() {
        let state = PeakonState::new(vec![-0.5, 0.5], vec![1.0, 0.5]).unwrap();
        let times = vec![0.0, 0.37, 1.0, 1.75];
        let traj = integrate_at(&state, &times, &IntegrateOptions::default()).unwrap();
        assert_eq!(traj.t, times);

        let dense = integrate(&state, 1.75, &IntegrateOptions::default()).unwrap();
        let end_sampled = traj.final_state();
        let end_dense = dense.final_state();
        for k in 0..2 {
            assert!((end_sampled.x[k] - end_dense.x[k]).abs() <= 1e-9);
        }
    }

    #[test]
    fn unsorted_sample_times_are_rejected() {
        let state = PeakonState::new(vec![0.0], vec![1.0]).unwrap();
        assert!(integrate_at(&state, &[0.0, 0.5, 0.3], &IntegrateOptions::default()).is_err());
        assert!(integrate_at(&state, &[0.5, -0.5], &IntegrateOptions::default()).is_err());
        assert!(integrate_at(&state, &[], &IntegrateOptions::default()).is_err());
    }

    #[test]
    fn csv_rows_carry_full_precision_fields() {
        let state = PeakonState::new(vec![-0.5, 0.5], vec![1.0, 0.5]).unwrap();
        let traj = integrate_at(&state, &[0.0, 1.0], &IntegrateOptions::default()).unwrap();
        let mut buf = Vec::new();
        write_trajectory_csv(&traj, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("t,x1,x2,m1,m2,M1,M2,M3"));
        let row: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(row.len(), 8);
        for field in row {
            let v: f64 = field.parse().unwrap();
            assert!(v.is_finite());
            assert!(field.contains('e'), "field {field} is not in scientific form");
        }
        assert!(text.ends_with('\n'));
    }
}
