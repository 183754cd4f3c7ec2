//! Least-squares fits of `a·exp(-b·x²)` to sampled curves.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianFit<T> {
    pub amplitude: T,
    pub curvature: T,
    pub sse: T,
}

fn check_samples<T>(x: &[T], y: &[T]) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::dim(format!("{} abscissae vs {} ordinates", x.len(), y.len())));
    }
    if x.len() < 2 {
        return Err(Error::InvalidInput("need at least two samples to fit".into()));
    }
    Ok(())
}

/// Best amplitude and residual for a fixed curvature (closed form).
fn profile<T: Scalar>(x: &[T], y: &[T], b: T) -> (T, T) {
    let (mut gy, mut gg) = (T::zero(), T::zero());
    for (&xi, &yi) in x.iter().zip(y) {
        let g = (-(b * xi * xi)).exp();
        gy = gy + g * yi;
        gg = gg + g * g;
    }
    let a = if gg > T::zero() { gy / gg } else { T::zero() };
    let sse = x.iter().zip(y).fold(T::zero(), |acc, (&xi, &yi)| {
        let r = yi - a * (-(b * xi * xi)).exp();
        acc + r * r
    });
    (a, sse)
}

/// Nonlinear least-squares Gaussian fit.
///
/// The amplitude is eliminated analytically; the curvature is located by a
/// coarse log-spaced scan followed by golden-section search, then polished
/// with Gauss-Newton steps on both parameters.
pub fn fit_gaussian<T: Scalar>(x: &[T], y: &[T]) -> Result<GaussianFit<T>> {
    check_samples(x, y)?;
    let y_scale = y.iter().fold(T::zero(), |m, v| m.max(v.abs()));
    if !(y_scale > T::zero()) {
        return Err(Error::InvalidInput("cannot fit an all-zero curve".into()));
    }
    let x_scale = x.iter().fold(T::zero(), |m, v| m.max(v.abs()));
    if !(x_scale > T::zero()) {
        return Err(Error::InvalidInput("cannot fit a curve sampled at a single point".into()));
    }
    // work on a unit-scaled copy; curvature scales back by 1/x_scale²
    let xs: Vec<T> = x.iter().map(|&v| v / x_scale).collect();
    let ys: Vec<T> = y.iter().map(|&v| v / y_scale).collect();
    let cost = |ln_b: T| profile(&xs, &ys, ln_b.exp()).1;

    let (lo, hi, steps) = (T::lit(-12.0), T::lit(12.0), 241usize);
    let step = (hi - lo) / T::count(steps - 1);
    let mut best = 0;
    let mut best_cost = T::infinity();
    for i in 0..steps {
        let c = cost(lo + step * T::count(i));
        if c < best_cost {
            best_cost = c;
            best = i;
        }
    }
    let mut a_ln = lo + step * T::count(best.saturating_sub(1));
    let mut b_ln = lo + step * T::count((best + 1).min(steps - 1));
    let inv_phi = T::lit(0.618_033_988_749_894_9);
    let mut c_ln = b_ln - (b_ln - a_ln) * inv_phi;
    let mut d_ln = a_ln + (b_ln - a_ln) * inv_phi;
    let (mut fc, mut fd) = (cost(c_ln), cost(d_ln));
    for _ in 0..200 {
        if (b_ln - a_ln).abs() < T::epsilon() * T::lit(4.0) {
            break;
        }
        if fc < fd {
            b_ln = d_ln;
            d_ln = c_ln;
            fd = fc;
            c_ln = b_ln - (b_ln - a_ln) * inv_phi;
            fc = cost(c_ln);
        } else {
            a_ln = c_ln;
            c_ln = d_ln;
            fc = fd;
            d_ln = a_ln + (b_ln - a_ln) * inv_phi;
            fd = cost(d_ln);
        }
    }
    let mut b = ((a_ln + b_ln) / T::lit(2.0)).exp();
    let (mut a, mut sse) = profile(&xs, &ys, b);

    for _ in 0..20 {
        // normal equations for (δa, δb) with J = [g, -a·x²·g]
        let (mut j11, mut j12, mut j22, mut r1, mut r2) = (T::zero(), T::zero(), T::zero(), T::zero(), T::zero());
        for (&xi, &yi) in xs.iter().zip(&ys) {
            let x2 = xi * xi;
            let g = (-(b * x2)).exp();
            let r = yi - a * g;
            let da = g;
            let db = -a * x2 * g;
            j11 = j11 + da * da;
            j12 = j12 + da * db;
            j22 = j22 + db * db;
            r1 = r1 + da * r;
            r2 = r2 + db * r;
        }
        let det = j11 * j22 - j12 * j12;
        if !(det.abs() > T::zero()) {
            break;
        }
        let na = a + (j22 * r1 - j12 * r2) / det;
        let nb = b + (j11 * r2 - j12 * r1) / det;
        if !(nb > T::zero()) {
            break;
        }
        let nsse = xs.iter().zip(&ys).fold(T::zero(), |acc, (&xi, &yi)| {
            let r = yi - na * (-(nb * xi * xi)).exp();
            acc + r * r
        });
        if !(nsse < sse) {
            break;
        }
        a = na;
        b = nb;
        sse = nsse;
    }

    Ok(GaussianFit {
        amplitude: a * y_scale,
        curvature: b / (x_scale * x_scale),
        sse: sse * y_scale * y_scale,
    })
}

/// Linear regression of `ln y` on `x²`. All `y` must be positive.
pub fn fit_log_gaussian<T: Scalar>(x: &[T], y: &[T]) -> Result<GaussianFit<T>> {
    check_samples(x, y)?;
    if y.iter().any(|v| !(*v > T::zero())) {
        return Err(Error::InvalidInput("log-domain fit needs positive samples".into()));
    }
    let n = T::count(x.len());
    let u: Vec<T> = x.iter().map(|&v| v * v).collect();
    let l: Vec<T> = y.iter().map(|v| v.ln()).collect();
    let mean_u = u.iter().fold(T::zero(), |a, &v| a + v) / n;
    let mean_l = l.iter().fold(T::zero(), |a, &v| a + v) / n;
    let (mut suu, mut sul) = (T::zero(), T::zero());
    for (&ui, &li) in u.iter().zip(&l) {
        suu = suu + (ui - mean_u) * (ui - mean_u);
        sul = sul + (ui - mean_u) * (li - mean_l);
    }
    if !(suu > T::zero()) {
        return Err(Error::InvalidInput("samples need at least two distinct |ΔV| values".into()));
    }
    let slope = sul / suu;
    let intercept = mean_l - slope * mean_u;
    let amplitude = intercept.exp();
    let curvature = -slope;
    let sse = x.iter().zip(y).fold(T::zero(), |acc, (&xi, &yi)| {
        let r = yi - amplitude * (-(curvature * xi * xi)).exp();
        acc + r * r
    });
    Ok(GaussianFit { amplitude, curvature, sse })
}
