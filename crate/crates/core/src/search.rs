//! Derivative-free one-dimensional minimization.

#[allow(unused_imports)]
use num_traits::Float;

/// Golden-section search for the minimizer of a unimodal `f` on `[lo, hi]`.
/// Stops once the bracket is narrower than `tol`.
pub fn golden_section<F: FnMut(f64) -> f64>(mut f: F, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while hi - lo > tol {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2);
        }
    }
    0.5 * (lo + hi)
}

/// Scans `[lo, hi]` with spacing at most `step`, then refines the best grid
/// cell by golden-section search. The endpoints are candidates too, so a
/// minimum on the boundary is returned exactly.
pub fn scan_then_golden<F: FnMut(f64) -> f64>(mut f: F, lo: f64, hi: f64, step: f64, tol: f64) -> f64 {
    if hi <= lo {
        return lo;
    }
    let cells = ((hi - lo) / step).ceil().max(1.0) as usize;
    let h = (hi - lo) / cells as f64;
    let mut best_i = 0;
    let mut best_f = f64::INFINITY;
    for i in 0..=cells {
        let x = if i == cells { hi } else { lo + h * i as f64 };
        let v = f(x);
        if v < best_f {
            best_f = v;
            best_i = i;
        }
    }
    let a = if best_i == 0 { lo } else { lo + h * (best_i - 1) as f64 };
    let b = if best_i >= cells - 1 { hi } else { lo + h * (best_i + 1) as f64 };
    let x = golden_section(&mut f, a, b, tol);
    // Keep the grid point if refinement did not improve on it (boundary minima).
    let grid_x = if best_i == cells { hi } else { lo + h * best_i as f64 };
    if f(x) <= best_f {
        x
    } else {
        grid_x
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn golden_finds_parabola_vertex() {
        let x = golden_section(|x| (x - 1.3) * (x - 1.3), -5.0, 5.0, 1e-9);
        assert!((x - 1.3).abs() < 1e-8);
    }

    #[test]
    fn scan_returns_boundary_minimum() {
        let x = scan_then_golden(|x| x, 2.0, 7.0, 0.5, 1e-9);
        assert_eq!(x, 2.0);
        let x = scan_then_golden(|x| -x, 2.0, 7.0, 0.5, 1e-9);
        assert_eq!(x, 7.0);
    }
}
