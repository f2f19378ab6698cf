/// Central difference `(f(m + step) - f(m - step)) / (2 step)`.
pub fn finite_difference(f: impl Fn(f64) -> f64, m: f64, step: f64) -> f64 {
    (f(m + step) - f(m - step)) / (2.0 * step)
}

/// Central second difference.
pub fn second_difference(f: impl Fn(f64) -> f64, m: f64, step: f64) -> f64 {
    (f(m + step) - 2.0 * f(m) + f(m - step)) / (step * step)
}
