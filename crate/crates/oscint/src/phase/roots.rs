//! Real-coefficient polynomial root isolation used by the Hessian
//! factorization. Root finding always runs in `f64`: the clustering
//! tolerance below is meaningless at lower precision, and callers polish
//! the isolated roots afterwards.

use num_complex::Complex64;

/// Base relative tolerance under which two approximate simple roots are
/// merged; an m-fold root computed in doubles spreads its approximations by
/// about `BACKWARD_NOISE^(1/m)`, so the merge tolerance grows with the
/// hypothesized multiplicity (see [`merge_tol`]).
pub const CLUSTER_TOL: f64 = 1e-7;

const BACKWARD_NOISE: f64 = 1e-13;

/// Merge tolerance for a cluster of hypothesized multiplicity `m`.
pub fn merge_tol(m: usize) -> f64 {
    CLUSTER_TOL.max(BACKWARD_NOISE.powf(1.0 / m as f64))
}

#[derive(Debug, Clone)]
pub struct RootCluster {
    pub center: Complex64,
    pub multiplicity: usize,
}

/// Aberth-Ehrlich simultaneous iteration for all complex roots of a real
/// polynomial given by `coeffs` (low degree first, leading entry nonzero).
pub fn all_roots(coeffs: &[f64]) -> Vec<Complex64> {
    let deg = coeffs.len() - 1;
    if deg == 0 {
        return Vec::new();
    }
    let lead = coeffs[deg];
    let monic: Vec<f64> = coeffs.iter().map(|c| c / lead).collect();

    // Cauchy bound on root magnitudes.
    let radius = 1.0
        + monic[..deg]
            .iter()
            .fold(0.0f64, |acc, c| acc.max(c.abs()));

    let mut z: Vec<Complex64> = (0..deg)
        .map(|k| {
            let angle = 2.0 * std::f64::consts::PI * (k as f64) / (deg as f64) + 0.4;
            Complex64::from_polar(0.5 * radius, angle)
        })
        .collect();

    for _ in 0..400 {
        let mut max_step = 0.0f64;
        for k in 0..deg {
            let (p, dp) = horner_with_derivative(&monic, z[k]);
            if p.norm() == 0.0 {
                continue;
            }
            let newton = if dp.norm() == 0.0 {
                // Flat spot; nudge off it.
                Complex64::new(1e-12, 1e-12)
            } else {
                p / dp
            };
            let mut repulsion = Complex64::new(0.0, 0.0);
            for j in 0..deg {
                if j != k {
                    let d = z[k] - z[j];
                    if d.norm() > 0.0 {
                        repulsion += d.inv();
                    }
                }
            }
            let denom = Complex64::new(1.0, 0.0) - newton * repulsion;
            let step = if denom.norm() < 1e-300 {
                newton
            } else {
                newton / denom
            };
            z[k] -= step;
            max_step = max_step.max(step.norm() / (1.0 + z[k].norm()));
        }
        if max_step < 1e-14 {
            break;
        }
    }
    z
}

/// Merge approximate roots into multiple roots using inclusion radii: an
/// approximation of an m-fold root at distance d carries a Newton step of
/// size about d/m, so overlapping Newton disks identify the members of one
/// multiple root while simple roots keep vanishingly small disks. The
/// cluster center is the mean of the raw approximations, which cancels the
/// leading spread of an m-fold root.
pub fn cluster(coeffs: &[f64], roots: &[Complex64]) -> Vec<RootCluster> {
    let deg = roots.len();
    let radii: Vec<f64> = roots.iter().map(|&z| inclusion_radius(coeffs, z)).collect();

    // Union-find over the overlap graph.
    let mut parent: Vec<usize> = (0..deg).collect();
    fn find(parent: &mut Vec<usize>, mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    for i in 0..deg {
        for j in (i + 1)..deg {
            let d = (roots[i] - roots[j]).norm();
            let scale = 1.0 + roots[i].norm().max(roots[j].norm());
            let tol = (CLUSTER_TOL * scale).max(3.0 * (radii[i] + radii[j]));
            if d <= tol {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                parent[ri] = rj;
            }
        }
    }

    let mut groups: std::collections::HashMap<usize, Vec<usize>> = Default::default();
    for i in 0..deg {
        let r = find(&mut parent, i);
        groups.entry(r).or_default().push(i);
    }
    let mut clusters: Vec<RootCluster> = groups
        .values()
        .map(|members| RootCluster {
            center: members.iter().map(|&i| roots[i]).sum::<Complex64>()
                / members.len() as f64,
            multiplicity: members.len(),
        })
        .collect();
    clusters.sort_by(|a, b| {
        (a.center.re, a.center.im)
            .partial_cmp(&(b.center.re, b.center.im))
            .unwrap()
    });
    clusters
}

/// Multiplicity-aware Newton refinement: `z <- z - m p(z)/p'(z)` restores
/// quadratic convergence at an m-fold root.
pub fn polish(coeffs: &[f64], cluster: &RootCluster) -> Complex64 {
    let m = cluster.multiplicity as f64;
    let mut z = cluster.center;
    for _ in 0..8 {
        let (p, dp) = horner_with_derivative(coeffs, z);
        if dp.norm() == 0.0 {
            break;
        }
        let step = p / dp * m;
        z -= step;
        if step.norm() <= 1e-16 * (1.0 + z.norm()) {
            break;
        }
    }
    z
}

/// Radius of the region around `z` in which the polynomial cannot be told
/// apart from zero in floating point: the computed value of `p` carries
/// absolute noise of order `eps sum |b_k||z|^k`, and the m-th Taylor term
/// escapes that noise only beyond `(m! noise / |p^(m)|)^(1/m)`. An m-fold
/// root inflates the radius to noise^(1/m) automatically.
fn inclusion_radius(coeffs: &[f64], z: Complex64) -> f64 {
    let deg = coeffs.len() - 1;
    let mut noise = 0.0f64;
    let mut zp = 1.0f64;
    for &c in coeffs {
        noise += c.abs() * zp;
        zp *= z.norm();
    }
    noise *= 16.0 * f64::EPSILON;

    let mut radius = f64::INFINITY;
    let mut deriv: Vec<f64> = coeffs.to_vec();
    let mut factorial = 1.0f64;
    for m in 1..=deg {
        // synthetic differentiation
        let mut next = Vec::with_capacity(deriv.len().saturating_sub(1));
        for (k, &c) in deriv.iter().enumerate().skip(1) {
            next.push(c * k as f64);
        }
        deriv = next;
        factorial *= m as f64;
        let (val, _) = horner_with_derivative(&deriv, z);
        if val.norm() > 0.0 {
            radius = radius.min((factorial * noise / val.norm()).powf(1.0 / m as f64));
        }
    }
    if radius.is_finite() {
        radius
    } else {
        0.0
    }
}

pub fn horner_with_derivative(coeffs: &[f64], z: Complex64) -> (Complex64, Complex64) {
    let mut p = Complex64::new(0.0, 0.0);
    let mut dp = Complex64::new(0.0, 0.0);
    for &c in coeffs.iter().rev() {
        dp = dp * z + p;
        p = p * z + c;
    }
    (p, dp)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sorted_real(coeffs: &[f64]) -> Vec<f64> {
        let mut rs: Vec<f64> = all_roots(coeffs)
            .into_iter()
            .filter(|z| z.im.abs() < 1e-8)
            .map(|z| z.re)
            .collect();
        rs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        rs
    }

    #[test]
    fn quadratic_roots() {
        // (t-1)(t-3) = t^2 - 4t + 3
        let rs = sorted_real(&[3.0, -4.0, 1.0]);
        assert!((rs[0] - 1.0).abs() < 1e-10);
        assert!((rs[1] - 3.0).abs() < 1e-10);
    }

    #[test]
    fn triple_root_clusters() {
        // (t-2)^3 = t^3 - 6t^2 + 12t - 8
        let coeffs = [-8.0, 12.0, -6.0, 1.0];
        let roots = all_roots(&coeffs);
        let cl = cluster(&coeffs, &roots);
        assert_eq!(cl.len(), 1);
        assert_eq!(cl[0].multiplicity, 3);
        let z = polish(&[-8.0, 12.0, -6.0, 1.0], &cl[0]);
        assert!((z.re - 2.0).abs() < 1e-6, "polished {z}");
    }

    #[test]
    fn conjugate_pair() {
        // t^2 + 1
        let roots = all_roots(&[1.0, 0.0, 1.0]);
        let mut ims: Vec<f64> = roots.iter().map(|z| z.im).collect();
        ims.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!((ims[0] + 1.0).abs() < 1e-10);
        assert!((ims[1] - 1.0).abs() < 1e-10);
    }
}

#[cfg(test)]
mod debug_tests {
    use super::*;
    #[test]
    fn show_triple_root_geometry() {
        let coeffs = [-8.0, 12.0, -6.0, 1.0];
        let roots = all_roots(&coeffs);
        for z in &roots {
            let (p, dp) = horner_with_derivative(&coeffs, *z);
            println!("root {z}  |p|={:.3e} |p'|={:.3e} rad={:.3e}", p.norm(), dp.norm(), 3.0*p.norm()/dp.norm());
        }
        for i in 0..roots.len() { for j in (i+1)..roots.len() {
            println!("d({i},{j}) = {:.3e}", (roots[i]-roots[j]).norm());
        }}
    }
}
