use std::f64::consts::PI;

use super::C64;

/// Radical inverse of `index` in `base` (the Halton sequence).
pub fn halton(mut index: usize, base: usize) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    let b = base as f64;
    while index > 0 {
        f /= b;
        r += f * (index % base) as f64;
        index /= base;
    }
    r
}

/// Area-uniform Halton points in a closed disc.
pub fn disc_samples(center: C64, radius: f64, count: usize) -> Vec<C64> {
    (1..=count)
        .map(|k| {
            let r = radius * halton(k, 2).sqrt();
            let t = 2.0 * PI * halton(k, 3);
            center + C64::from_polar(r, t)
        })
        .collect()
}

/// Sunflower spiral: area-uniform, with no two points on a common ray.
pub fn golden_spiral(center: C64, radius: f64, count: usize) -> Vec<C64> {
    let golden = PI * (3.0 - 5f64.sqrt());
    (0..count)
        .map(|k| {
            let r = radius * ((k as f64 + 0.5) / count as f64).sqrt();
            center + C64::from_polar(r, golden * k as f64)
        })
        .collect()
}

pub fn circle_points(center: C64, radius: f64, count: usize) -> Vec<C64> {
    (0..count).map(|k| center + C64::from_polar(radius, 2.0 * PI * k as f64 / count as f64)).collect()
}

/// `n x n` tensor grid on the square of half-width `half` (row by row in y).
pub fn square_grid(center: C64, half: f64, n: usize) -> Vec<C64> {
    let t = |k: usize| if n == 1 { 0.0 } else { -half + 2.0 * half * k as f64 / (n - 1) as f64 };
    let mut out = Vec::with_capacity(n * n);
    for j in 0..n {
        for i in 0..n {
            out.push(center + C64::new(t(i), t(j)));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn halton_base_two() {
        assert_eq!(halton(1, 2), 0.5);
        assert_eq!(halton(2, 2), 0.25);
        assert_eq!(halton(3, 2), 0.75);
        assert!((halton(1, 3) - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn samples_stay_in_disc() {
        let c = C64::new(0.5, -0.5);
        for p in disc_samples(c, 0.3, 200).into_iter().chain(golden_spiral(c, 0.3, 200)) {
            assert!((p - c).norm() <= 0.3 + 1e-15);
        }
    }

    #[test]
    fn grid_corners() {
        let g = square_grid(C64::new(0.0, 0.0), 1.0, 3);
        assert_eq!(g.len(), 9);
        assert_eq!(g[0], C64::new(-1.0, -1.0));
        assert_eq!(g[8], C64::new(1.0, 1.0));
    }
}
