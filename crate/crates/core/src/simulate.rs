//! Forward iteration of the initial-value problem and pointwise residuals.

use crate::error::{Error, Result};
use crate::kernels::TruncationPolicy;
use crate::sequences::{History, Trajectory};
use crate::system::SystemSpec;

/// Iterates `x_{n+1} = (1 + h_n) x_n + Σ_{m<=n} a_{n,m} f(y_m)` and the
/// `y`-analogue for `n = 0..steps`, starting from `hist`.
pub fn simulate(
    spec: &SystemSpec,
    hist: &History,
    steps: usize,
    policy: &TruncationPolicy,
) -> Result<Trajectory> {
    policy.validate()?;
    let (x0, y0) = hist.value(0);
    let mut x = Vec::with_capacity(steps + 1);
    let mut y = Vec::with_capacity(steps + 1);
    x.push(x0);
    y.push(y0);
    // f(y_m), g(x_m) for m >= 0
    let mut fy = vec![spec.f.eval(y0)];
    let mut gx = vec![spec.g.eval(x0)];
    let (wf, wg) = (spec.f.bound(), spec.g.bound());

    for n in 0..steps {
        let ni = n as i64;
        let sx = spec.a.inner_sum(
            ni,
            |m| {
                if m < 0 {
                    spec.f.eval(hist.value(m).1)
                } else {
                    fy[m as usize]
                }
            },
            wf,
            policy,
        )?;
        let sy = spec.b.inner_sum(
            ni,
            |m| {
                if m < 0 {
                    spec.g.eval(hist.value(m).0)
                } else {
                    gx[m as usize]
                }
            },
            wg,
            policy,
        )?;
        let xn = (1.0 + spec.h.get(ni)) * x[n] + sx.sum;
        let yn = (1.0 + spec.p.get(ni)) * y[n] + sy.sum;
        if !xn.is_finite() || !yn.is_finite() {
            return Err(Error::NonFinite("simulation step"));
        }
        x.push(xn);
        y.push(yn);
        fy.push(spec.f.eval(yn));
        gx.push(spec.g.eval(xn));
    }

    Ok(Trajectory {
        start: 0,
        x,
        y,
        history: hist.clone(),
        tail_tolerance_used: policy.tail_tol,
    })
}

/// Absolute defects of both equations at `n`, for full-line sequences given
/// as callbacks (queried at `m <= n + 1`).
pub fn residual(
    spec: &SystemSpec,
    xs: impl Fn(i64) -> f64,
    ys: impl Fn(i64) -> f64,
    n: i64,
    policy: &TruncationPolicy,
) -> Result<(f64, f64)> {
    let sx = spec
        .a
        .inner_sum(n, |m| spec.f.eval(ys(m)), spec.f.bound(), policy)?;
    let sy = spec
        .b
        .inner_sum(n, |m| spec.g.eval(xs(m)), spec.g.bound(), policy)?;
    let (x0, x1) = (xs(n), xs(n + 1));
    let (y0, y1) = (ys(n), ys(n + 1));
    let rx = (x1 - x0) - spec.h.get(n) * x0 - sx.sum;
    let ry = (y1 - y0) - spec.p.get(n) * y0 - sy.sum;
    Ok((rx.abs(), ry.abs()))
}

/// Residuals of a trajectory at every step it covers, `n = 0..len-1`.
pub fn trajectory_residuals(
    spec: &SystemSpec,
    traj: &Trajectory,
    policy: &TruncationPolicy,
) -> Result<Vec<(f64, f64)>> {
    let xs = |m: i64| traj.value(m).map(|v| v.0).unwrap_or(f64::NAN);
    let ys = |m: i64| traj.value(m).map(|v| v.1).unwrap_or(f64::NAN);
    (0..traj.len().saturating_sub(1) as i64)
        .map(|n| residual(spec, xs, ys, n, policy))
        .collect()
}
