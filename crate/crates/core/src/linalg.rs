//! Fixed-point driver shared by both solvers: damped Picard, then Newton on
//! `F(z) = z - E(z)` with a central-difference Jacobian.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::periodic_solver::{Method, SolverOptions, Strategy};

/// Consecutive non-decreasing Picard updates that count as a stall.
const STALL_WINDOW: usize = 10;
/// Picard steps without a new best defect that also count as a stall.
const NO_PROGRESS_WINDOW: usize = 100;
/// Picard/Newton rounds, halving the damping after each failed round.
const DAMPING_ROUNDS: usize = 4;
const FD_STEP: f64 = 1e-6;
const MAX_BACKTRACKS: usize = 30;

#[derive(Debug, Clone)]
pub(crate) struct FixedPoint {
    pub z: Vec<f64>,
    pub iterations: usize,
    pub method: Method,
    /// `‖z - E(z)‖_∞` at the returned point.
    pub defect: f64,
    pub converged: bool,
}

pub(crate) fn sup_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn defect_of(z: &[f64], ez: &[f64]) -> f64 {
    z.iter().zip(ez).fold(0.0, |m, (a, b)| m.max((a - b).abs()))
}

/// Best point seen so far: `(defect, z)`.
struct Best {
    defect: f64,
    z: Vec<f64>,
}

impl Best {
    fn offer(&mut self, defect: f64, z: &[f64]) -> bool {
        if defect < self.defect {
            self.defect = defect;
            self.z = z.to_vec();
            true
        } else {
            false
        }
    }
}

enum Phase {
    Converged(Vec<f64>, f64),
    Stopped,
}

/// Damped Picard from `best.z` until convergence, a stall, or `budget` steps.
/// With `patient`, only a lack of progress counts as a stall, not an
/// oscillating update norm.
fn picard<E>(
    map: &E,
    best: &mut Best,
    theta: f64,
    patient: bool,
    budget: usize,
    tol: f64,
    iterations: &mut usize,
) -> Result<Phase>
where
    E: Fn(&[f64]) -> Result<Vec<f64>>,
{
    let mut z = best.z.clone();
    let mut ez = map(&z)?;
    let mut prev_update = f64::INFINITY;
    let mut stalled = 0;
    // progress is judged against this phase alone: from a point where Newton
    // stalled, Picard may have to climb before it descends
    let mut phase_best = f64::INFINITY;
    let mut since_best = 0;
    for _ in 0..budget {
        *iterations += 1;
        let next: Vec<f64> = z
            .iter()
            .zip(&ez)
            .map(|(a, b)| (1.0 - theta) * a + theta * b)
            .collect();
        if next.iter().any(|v| !v.is_finite()) {
            break;
        }
        let update = defect_of(&next, &z);
        z = next;
        ez = match map(&z) {
            Ok(v) if v.iter().all(|x| x.is_finite()) => v,
            _ => break,
        };
        let defect = defect_of(&z, &ez);
        best.offer(defect, &z);
        if defect < phase_best {
            phase_best = defect;
            since_best = 0;
        } else {
            since_best += 1;
        }
        if defect <= tol {
            return Ok(Phase::Converged(z, defect));
        }
        if update >= prev_update {
            stalled += 1;
        } else {
            stalled = 0;
        }
        if (!patient && stalled >= STALL_WINDOW) || since_best >= NO_PROGRESS_WINDOW {
            break;
        }
        prev_update = update;
    }
    Ok(Phase::Stopped)
}

/// Newton on `F(z) = z - E(z)` from `best.z` with a backtracking line search.
fn newton<E>(
    map: &E,
    best: &mut Best,
    budget: usize,
    tol: f64,
    iterations: &mut usize,
) -> Result<Phase>
where
    E: Fn(&[f64]) -> Result<Vec<f64>>,
{
    let mut z = best.z.clone();
    let mut defect = best.defect;
    let mut fz: Vec<f64> = z.iter().zip(map(&z)?).map(|(a, b)| a - b).collect();
    let dim = z.len();
    for _ in 0..budget {
        *iterations += 1;
        let mut jac = DMatrix::<f64>::zeros(dim, dim);
        for j in 0..dim {
            let step = FD_STEP * z[j].abs().max(1.0);
            let mut plus = z.clone();
            let mut minus = z.clone();
            plus[j] += step;
            minus[j] -= step;
            let ep = map(&plus)?;
            let em = map(&minus)?;
            for i in 0..dim {
                let fp = plus[i] - ep[i];
                let fm = minus[i] - em[i];
                jac[(i, j)] = (fp - fm) / (2.0 * step);
            }
        }
        let rhs = DVector::from_iterator(dim, fz.iter().map(|v| -v));
        let Some(delta) = jac.lu().solve(&rhs) else {
            return Err(Error::SingularJacobian);
        };

        let mut lambda = 1.0;
        let mut accepted = false;
        for _ in 0..MAX_BACKTRACKS {
            let trial: Vec<f64> = z
                .iter()
                .zip(delta.iter())
                .map(|(a, d)| a + lambda * d)
                .collect();
            if let Ok(et) = map(&trial) {
                let d = defect_of(&trial, &et);
                if d.is_finite() && (d < defect || d <= tol) {
                    fz = trial.iter().zip(&et).map(|(a, b)| a - b).collect();
                    z = trial;
                    defect = d;
                    accepted = true;
                    break;
                }
            }
            lambda *= 0.5;
        }
        best.offer(defect, &z);
        if defect <= tol {
            return Ok(Phase::Converged(z, defect));
        }
        if !accepted {
            break;
        }
    }
    Ok(Phase::Stopped)
}

/// Damped Picard then Newton, per `opts.strategy`. When Newton stalls away
/// from a root, Picard resumes from the best point with half the damping,
/// up to [`DAMPING_ROUNDS`] times.
pub(crate) fn solve_fixed_point<E>(map: E, z0: Vec<f64>, opts: &SolverOptions) -> Result<FixedPoint>
where
    E: Fn(&[f64]) -> Result<Vec<f64>>,
{
    let picard_method = |theta: f64| {
        if theta == 1.0 {
            Method::Picard
        } else {
            Method::DampedPicard
        }
    };
    let ez = map(&z0)?;
    let defect = defect_of(&z0, &ez);
    if defect <= opts.tol {
        return Ok(FixedPoint {
            z: ez,
            iterations: 1,
            method: picard_method(opts.damping),
            defect,
            converged: true,
        });
    }

    let mut best = Best { defect, z: z0 };
    let mut iterations = 0;
    let mut theta = opts.damping;
    let mut last_method = picard_method(theta);
    let rounds = if opts.strategy == Strategy::NewtonOnly {
        1
    } else {
        DAMPING_ROUNDS
    };
    for round in 0..rounds {
        if opts.strategy != Strategy::NewtonOnly {
            last_method = picard_method(theta);
            let phase = picard(
                &map,
                &mut best,
                theta,
                round > 0,
                opts.max_iter,
                opts.tol,
                &mut iterations,
            )?;
            if let Phase::Converged(z, defect) = phase {
                return Ok(FixedPoint {
                    z,
                    iterations,
                    method: last_method,
                    defect,
                    converged: true,
                });
            }
        }
        if opts.strategy != Strategy::PicardOnly {
            last_method = Method::Newton;
            if let Phase::Converged(z, defect) =
                newton(&map, &mut best, opts.max_iter, opts.tol, &mut iterations)?
            {
                return Ok(FixedPoint {
                    z,
                    iterations,
                    method: Method::Newton,
                    defect,
                    converged: true,
                });
            }
        }
        theta *= 0.5;
    }
    Ok(FixedPoint {
        z: best.z,
        iterations,
        method: last_method,
        defect: best.defect,
        converged: false,
    })
}
