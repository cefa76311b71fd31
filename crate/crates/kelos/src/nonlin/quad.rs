//! Adaptive quadrature used for primitives of power-log nonlinearities.

/// Outcome of an adaptive quadrature call that hit its subdivision limit.
#[derive(Debug, Clone, Copy)]
pub(crate) struct QuadFailure {
    pub achieved: f64,
    pub requested: f64,
}

const MAX_DEPTH: u32 = 48;

/// Adaptive Simpson on `[a, b]` with absolute tolerance `tol`.
///
/// Returns the integral and the accumulated error estimate. The estimate is
/// the usual `|S_fine - S_coarse| / 15` Richardson bound summed over panels.
pub(crate) fn adaptive_simpson<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    tol: f64,
) -> Result<(f64, f64), QuadFailure> {
    if a == b {
        return Ok((0.0, 0.0));
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = simpson(a, b, fa, fm, fb);
    let scale = whole.abs().max(tol);
    let mut err_acc = 0.0;
    let val = recurse(f, a, b, fa, fm, fb, whole, tol, scale, MAX_DEPTH, &mut err_acc)?;
    Ok((val, err_acc))
}

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn recurse<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    scale: f64,
    depth: u32,
    err_acc: &mut f64,
) -> Result<f64, QuadFailure> {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let delta = left + right - whole;
    // Interval collapsed to machine resolution: accept what we have.
    if delta.abs() <= 15.0 * tol || lm <= a || rm >= b {
        *err_acc += delta.abs() / 15.0;
        return Ok(left + right + delta / 15.0);
    }
    if depth == 0 {
        // Deep integrable singularities leave panels whose residual is
        // negligible against the whole integral; only a genuine stall is an
        // error.
        if delta.abs() <= 1e-13 * scale {
            *err_acc += delta.abs() / 15.0;
            return Ok(left + right + delta / 15.0);
        }
        return Err(QuadFailure {
            achieved: delta.abs() / 15.0,
            requested: tol,
        });
    }
    let half_tol = 0.5 * tol;
    let l = recurse(f, a, m, fa, flm, fm, left, half_tol, scale, depth - 1, err_acc)?;
    let r = recurse(f, m, b, fm, frm, fb, right, half_tol, scale, depth - 1, err_acc)?;
    Ok(l + r)
}

/// Composite Simpson with panel doubling until two successive refinements
/// agree to `rel_tol`. Used for smooth integrands in log coordinates where
/// recursion depth is wasteful.
pub(crate) fn refining_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, rel_tol: f64) -> f64 {
    let mut n = 8usize;
    let mut prev = composite(f, a, b, n);
    loop {
        n *= 2;
        let cur = composite(f, a, b, n);
        let scale = cur.abs().max(f64::MIN_POSITIVE);
        if (cur - prev).abs() <= rel_tol * scale || n >= 4096 {
            return cur;
        }
        prev = cur;
    }
}

fn composite<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut acc = f(a) + f(b);
    for i in 1..n {
        let x = a + h * i as f64;
        acc += f(x) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    acc * h / 3.0
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simpson_polynomial_is_near_exact() {
        let (v, _) = adaptive_simpson(&|x: f64| x * x * x, 0.0, 2.0, 1e-12).unwrap();
        assert!((v - 4.0).abs() < 1e-12);
    }

    #[test]
    fn simpson_handles_mild_endpoint_singularity() {
        // d/dx (2/3 x^{3/2}) = sqrt(x)
        let (v, _) = adaptive_simpson(&|x: f64| x.sqrt(), 0.0, 1.0, 1e-11).unwrap();
        assert!((v - 2.0 / 3.0).abs() < 1e-9, "got {v}");
    }

    #[test]
    fn refining_simpson_exp() {
        let v = refining_simpson(&|x: f64| x.exp(), 0.0, 1.0, 1e-12);
        assert!((v - (std::f64::consts::E - 1.0)).abs() < 1e-10);
    }
}
