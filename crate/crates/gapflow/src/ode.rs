// SPDX-License-Identifier: MIT OR Apache-2.0

//! Thin wrapper over the DOP853 integrator for autonomous vector fields.

use ode_solvers::{DVector, Dop853, System};

use crate::error::{Error, Result};

struct Field<'a, F: Fn(&[f64], &mut [f64])> {
    f: &'a F,
}

impl<F: Fn(&[f64], &mut [f64])> System<f64, DVector<f64>> for Field<'_, F> {
    fn system(&self, _x: f64, y: &DVector<f64>, dy: &mut DVector<f64>) {
        (self.f)(y.as_slice(), dy.as_mut_slice());
    }
}

/// Integrates `y' = f(y)` over a clock interval of length `span` (either
/// sign) with relative and absolute tolerance `tol`.
pub fn integrate<F>(f: &F, y0: &[f64], span: f64, tol: f64) -> Result<Vec<f64>>
where
    F: Fn(&[f64], &mut [f64]),
{
    if span == 0.0 || y0.is_empty() {
        return Ok(y0.to_vec());
    }
    let mut solver = Dop853::from_param(
        Field { f },
        0.0,
        span,
        span,
        DVector::from_column_slice(y0),
        tol,
        tol,
        0.9,
        0.0,
        0.333,
        6.0,
        span.abs(),
        0.0,
        1_000_000,
        1000,
        ode_solvers::OutputType::Sparse,
    );
    solver
        .integrate()
        .map_err(|e| Error::Integration(e.to_string()))?;
    let y = solver
        .y_out()
        .last()
        .ok_or_else(|| Error::Integration("solver produced no output".into()))?;
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("non-finite value in flow".into()));
    }
    Ok(y.as_slice().to_vec())
}

/// Samples the solution at `samples + 1` equally spaced clock values
/// `0, span/samples, ..., span`, restarting the integrator on every segment.
pub fn trajectory<F>(f: &F, y0: &[f64], span: f64, samples: usize, tol: f64) -> Result<Vec<Vec<f64>>>
where
    F: Fn(&[f64], &mut [f64]),
{
    let samples = samples.max(1);
    let step = span / samples as f64;
    let mut out = Vec::with_capacity(samples + 1);
    let mut y = y0.to_vec();
    out.push(y.clone());
    for _ in 0..samples {
        y = integrate(f, &y, step, tol)?;
        out.push(y.clone());
    }
    Ok(out)
}
