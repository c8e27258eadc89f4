//! Diameter of a planar point set: monotone-chain hull plus rotating calipers.

use num_complex::Complex64;

#[inline]
fn cross(o: Complex64, a: Complex64, b: Complex64) -> f64 {
    (a.re - o.re) * (b.im - o.im) - (a.im - o.im) * (b.re - o.re)
}

/// Convex hull in counter-clockwise order without collinear points.
pub fn convex_hull(points: &[Complex64]) -> Vec<Complex64> {
    let mut pts: Vec<Complex64> = points.to_vec();
    pts.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    pts.dedup();
    if pts.len() <= 2 {
        return pts;
    }
    let mut hull: Vec<Complex64> = Vec::with_capacity(2 * pts.len());
    for &p in &pts {
        while hull.len() >= 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
            hull.pop();
        }
        hull.push(p);
    }
    let lower_len = hull.len() + 1;
    for &p in pts.iter().rev().skip(1) {
        while hull.len() >= lower_len && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0
        {
            hull.pop();
        }
        hull.push(p);
    }
    hull.pop();
    hull
}

fn brute_force_diameter(points: &[Complex64]) -> f64 {
    let mut best = 0.0f64;
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            best = best.max((points[i] - points[j]).norm());
        }
    }
    best
}

const SMALL_HULL: usize = 48;

/// Largest distance between two points of the set.
pub fn diameter(points: &[Complex64]) -> f64 {
    if points.len() <= SMALL_HULL {
        return brute_force_diameter(points);
    }
    let hull = convex_hull(points);
    let h = hull.len();
    if h <= SMALL_HULL {
        return brute_force_diameter(&hull);
    }
    let mut best = 0.0f64;
    let mut j = 1usize;
    for i in 0..h {
        let a = hull[i];
        let b = hull[(i + 1) % h];
        while cross(a, b, hull[(j + 1) % h]) > cross(a, b, hull[j]) {
            j = (j + 1) % h;
        }
        let c = hull[j];
        let d = hull[(j + 1) % h];
        // The next vertex matters when the antipodal edge is parallel.
        best = best
            .max((a - c).norm())
            .max((b - c).norm())
            .max((a - d).norm())
            .max((b - d).norm());
    }
    best
}

/// Largest distance between two points, by checking every pair.
pub fn diameter_brute_force(points: &[Complex64]) -> f64 {
    brute_force_diameter(points)
}
