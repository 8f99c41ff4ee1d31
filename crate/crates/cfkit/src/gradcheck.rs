//! Central-difference gradient verification.
//!
//! Used by the test suites and by the CLI's `pcl --grad-check`. A coordinate
//! passes when the analytic and numeric derivatives agree to the relative
//! tolerance, or both are below the absolute floor.

/// Outcome of checking one gradient vector.
#[derive(Debug, Clone)]
pub struct GradCheckReport {
    pub checked: usize,
    pub within_tol: usize,
    pub max_rel_err: f64,
    pub worst_index: usize,
}

impl GradCheckReport {
    pub fn fraction_ok(&self) -> f64 {
        if self.checked == 0 {
            1.0
        } else {
            self.within_tol as f64 / self.checked as f64
        }
    }
}

/// Central difference of `f` along coordinate `i` at `point`.
pub fn central_difference<F>(mut f: F, point: &[f64], i: usize, step: f64) -> f64
where
    F: FnMut(&[f64]) -> f64,
{
    let mut x = point.to_vec();
    x[i] = point[i] + step;
    let plus = f(&x);
    x[i] = point[i] - step;
    let minus = f(&x);
    (plus - minus) / (2.0 * step)
}

/// Compares `analytic` against central differences of `f` at `point`.
///
/// `indices` restricts the check to a subset of coordinates; `None` checks
/// all of them.
pub fn check_gradient<F>(
    mut f: F,
    point: &[f64],
    analytic: &[f64],
    step: f64,
    rel_tol: f64,
    indices: Option<&[usize]>,
) -> GradCheckReport
where
    F: FnMut(&[f64]) -> f64,
{
    assert_eq!(point.len(), analytic.len(), "gradient length mismatch");
    const ABS_FLOOR: f64 = 1e-8;

    let all: Vec<usize>;
    let idx: &[usize] = match indices {
        Some(ix) => ix,
        None => {
            all = (0..point.len()).collect();
            &all
        }
    };

    let mut within = 0;
    let mut max_rel = 0.0;
    let mut worst = 0;
    for &i in idx {
        let numeric = central_difference(&mut f, point, i, step);
        let denom = analytic[i].abs().max(numeric.abs());
        let ok;
        let rel;
        if denom < ABS_FLOOR {
            rel = 0.0;
            ok = (analytic[i] - numeric).abs() < ABS_FLOOR;
        } else {
            rel = (analytic[i] - numeric).abs() / denom;
            ok = rel < rel_tol;
        }
        if ok {
            within += 1;
        }
        if rel > max_rel {
            max_rel = rel;
            worst = i;
        }
    }
    GradCheckReport {
        checked: idx.len(),
        within_tol: within,
        max_rel_err: max_rel,
        worst_index: worst,
    }
}
