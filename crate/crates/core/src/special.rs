//! Integer-order Bessel functions of the first kind.

use std::f64::consts::TAU;

/// `J_n(x)` from `(1/2π) ∫₀^{2π} cos(nτ − x sin τ) dτ`.
///
/// The integrand is periodic and entire, so the trapezoidal rule converges
/// geometrically once the node count exceeds `|n| + |x|`; aliasing terms are
/// `J_{n±M}(x)`, negligible for the node count used here.
pub fn bessel_j(n: i64, x: f64) -> f64 {
    let nodes = 2 * (n.unsigned_abs() as usize + x.abs().ceil() as usize) + 128;
    let step = TAU / nodes as f64;
    let sum: f64 = (0..nodes)
        .map(|k| {
            let tau = k as f64 * step;
            (n as f64 * tau - x * tau.sin()).cos()
        })
        .sum();
    sum / nodes as f64
}
