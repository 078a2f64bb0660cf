//! Homogeneous polynomial phases `S(x,y) = sum_k a_k x^{n-k} y^k`, their
//! derivatives, the factorization of the mixed Hessian `S''_xy` into linear
//! varieties and positive definite quadratic factors, and the dyadic-region
//! classification driven by that factorization.

mod roots;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::real::Real;

#[derive(Debug, Error)]
pub enum PhaseError {
    #[error("invalid phase: {0}")]
    InvalidPhase(String),
    #[error("mixed Hessian is identically zero")]
    DegenerateHessian,
    #[error("root isolation failed: {0}")]
    RootIsolationFailure(String),
}

/// Phase `S(x,y) = sum_{k=1}^{n-1} a_k x^{n-k} y^k`, homogeneous of degree
/// `n` with `a_1 a_{n-1} != 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HomogeneousPhase<T> {
    pub degree: u32,
    pub coeffs: Vec<T>,
}

impl<T: Real> HomogeneousPhase<T> {
    pub fn new(degree: u32, coeffs: Vec<T>) -> Result<Self, PhaseError> {
        if degree < 2 {
            return Err(PhaseError::InvalidPhase(format!(
                "degree must be >= 2, got {degree}"
            )));
        }
        if coeffs.len() != (degree - 1) as usize {
            return Err(PhaseError::InvalidPhase(format!(
                "degree {} needs {} coefficients a_1..a_{}, got {}",
                degree,
                degree - 1,
                degree - 1,
                coeffs.len()
            )));
        }
        let first = coeffs[0];
        let last = *coeffs.last().unwrap();
        if first == T::zero() || last == T::zero() {
            return Err(PhaseError::InvalidPhase(
                "a_1 and a_{n-1} must be nonzero".into(),
            ));
        }
        Ok(Self { degree, coeffs })
    }

    /// The counterexample family `x^{n-1} y + x y^{n-1}`.
    pub fn extreme_monomials(degree: u32) -> Result<Self, PhaseError> {
        if degree < 3 {
            return Err(PhaseError::InvalidPhase(
                "extreme-monomial phase needs degree >= 3".into(),
            ));
        }
        let m = (degree - 1) as usize;
        let mut coeffs = vec![T::zero(); m];
        coeffs[0] = T::one();
        coeffs[m - 1] = T::one();
        Self::new(degree, coeffs)
    }

    pub fn eval(&self, x: T, y: T) -> T {
        let n = self.degree as i32;
        let mut acc = T::zero();
        for (idx, &a) in self.coeffs.iter().enumerate() {
            let k = idx as i32 + 1;
            acc = acc + a * x.powi(n - k) * y.powi(k);
        }
        acc
    }

    /// Exact partial derivative `d^dx_x d^dy_y S` at `(x,y)`; coefficients
    /// are falling factorials computed symbolically.
    pub fn partial(&self, dx: u32, dy: u32, x: T, y: T) -> T {
        let n = self.degree;
        if dx + dy > n {
            return T::zero();
        }
        let mut acc = T::zero();
        for (idx, &a) in self.coeffs.iter().enumerate() {
            let k = idx as u32 + 1;
            let xp = n - k;
            if xp < dx || k < dy {
                continue;
            }
            let coeff = a * falling::<T>(xp, dx) * falling::<T>(k, dy);
            acc = acc + coeff * x.powi((xp - dx) as i32) * y.powi((k - dy) as i32);
        }
        acc
    }

    /// Mixed Hessian `S''_xy(x,y)`, the quantity whose zero varieties drive
    /// the whole decomposition.
    pub fn hessian_xy(&self, x: T, y: T) -> T {
        self.partial(1, 1, x, y)
    }

    /// Coefficients `b_m` of `p(t) = S''_xy(1,t) = sum b_m t^m`,
    /// `m = 0..n-2`.
    fn hessian_poly(&self) -> Vec<T> {
        let n = self.degree;
        let mut b = vec![T::zero(); (n - 1) as usize];
        for (idx, &a) in self.coeffs.iter().enumerate() {
            let k = idx as u32 + 1;
            // monomial a_k (n-k) k x^{n-k-1} y^{k-1}
            let m = (k - 1) as usize;
            b[m] = b[m] + a * T::of((n - k) as f64) * T::of(k as f64);
        }
        b
    }

    /// Factor `S''_xy` as `c prod (y - a_l x)^{m_l} prod Q_l(x,y)` with each
    /// `Q_l` positive definite.
    pub fn factor_hessian(&self) -> Result<HessianFactorization<T>, PhaseError> {
        let b: Vec<f64> = self.hessian_poly().iter().map(|v| v.as_f64()).collect();
        factor_from_coeffs(&b).and_then(|f| {
            verify_reconstruction(self, &f)?;
            Ok(f)
        })
    }
}

fn falling<T: Real>(m: u32, d: u32) -> T {
    let mut acc = T::one();
    for i in 0..d {
        acc = acc * T::of((m - i) as f64);
    }
    acc
}

/// One linear variety `y = alpha x` of the Hessian, with multiplicity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearFactor<T> {
    pub alpha: T,
    pub multiplicity: u32,
}

/// Positive definite quadratic factor `A x^2 + B x y + C y^2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadFactor<T> {
    pub a: T,
    pub b: T,
    pub c: T,
}

impl<T: Real> QuadFactor<T> {
    pub fn eval(&self, x: T, y: T) -> T {
        self.a * x * x + self.b * x * y + self.c * y * y
    }

    pub fn is_positive_definite(&self) -> bool {
        self.a > T::zero() && self.b * self.b < T::of(4.0) * self.a * self.c
    }
}

/// Factorization of the mixed Hessian. For a valid phase the extreme
/// coefficients force `x_power = y_power = 0`; the fields exist so that
/// degenerate coefficient choices fed in through configs fail loudly
/// instead of crashing.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HessianFactorization<T> {
    pub leading: T,
    /// Linear varieties in strictly increasing root order.
    pub linear_factors: Vec<LinearFactor<T>>,
    pub quad_factors: Vec<QuadFactor<T>>,
    /// Exponent of a pure `x` factor (degree deficit of `p(t)`).
    pub x_power: u32,
    /// Exponent of a pure `y` factor (root of `p(t)` at the origin).
    pub y_power: u32,
    /// Relative tolerance used when clustering nearby roots.
    pub cluster_tol: f64,
}

impl<T: Real> HessianFactorization<T> {
    /// Degree identity `sum m_l + 2 r (+ pure powers) = n - 2`.
    pub fn total_degree(&self) -> u32 {
        self.linear_factors
            .iter()
            .map(|f| f.multiplicity)
            .sum::<u32>()
            + 2 * self.quad_factors.len() as u32
            + self.x_power
            + self.y_power
    }

    /// Evaluate the factored form at `(x,y)`.
    pub fn eval(&self, x: T, y: T) -> T {
        let mut acc = self.leading;
        for f in &self.linear_factors {
            acc = acc * (y - f.alpha * x).powi(f.multiplicity as i32);
        }
        for q in &self.quad_factors {
            acc = acc * q.eval(x, y);
        }
        acc * x.powi(self.x_power as i32) * y.powi(self.y_power as i32)
    }

    /// Smallest integer threshold `K >= 2` with
    /// `2^K >= 4 max(1, max |a_l|, max 1/|a_l|)`: beyond `K` octaves of
    /// scale separation the dominant variable controls every linear factor.
    pub fn region_threshold(&self) -> i32 {
        let mut q = 1.0f64;
        for f in &self.linear_factors {
            let a = f.alpha.as_f64().abs();
            if a > 0.0 {
                q = q.max(a).max(1.0 / a);
            }
        }
        let target = 4.0 * q;
        let mut k = 2i32;
        while (k as u32) < 63 && ((1u64 << k as u32) as f64) < target {
            k += 1;
        }
        k
    }
}

impl<T: Real> std::fmt::Display for HessianFactorization<T> {
    fn fmt(&self, out: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let mut parts: Vec<String> = vec![format!("{}", self.leading)];
        if self.x_power > 0 {
            parts.push(pow_str("x", self.x_power));
        }
        if self.y_power > 0 {
            parts.push(pow_str("y", self.y_power));
        }
        for f in &self.linear_factors {
            let inner = if f.alpha == T::zero() {
                "y".to_string()
            } else if f.alpha == T::one() {
                "(y-x)".to_string()
            } else if f.alpha == -T::one() {
                "(y+x)".to_string()
            } else if f.alpha < T::zero() {
                format!("(y+{}x)", -f.alpha)
            } else {
                format!("(y-{}x)", f.alpha)
            };
            if f.multiplicity == 1 {
                parts.push(inner);
            } else {
                parts.push(format!("{}^{}", inner, f.multiplicity));
            }
        }
        for q in &self.quad_factors {
            parts.push(format!("({})", quad_str(q)));
        }
        write!(out, "{}", parts.join(" * "))
    }
}

fn pow_str(var: &str, p: u32) -> String {
    if p == 1 {
        var.to_string()
    } else {
        format!("{var}^{p}")
    }
}

fn quad_str<T: Real>(q: &QuadFactor<T>) -> String {
    let mut s = String::new();
    let push = |coef: T, mono: &str, s: &mut String| {
        if coef == T::zero() {
            return;
        }
        if !s.is_empty() {
            s.push_str(if coef < T::zero() { "-" } else { "+" });
        } else if coef < T::zero() {
            s.push('-');
        }
        let mag = coef.abs();
        if mag != T::one() {
            s.push_str(&format!("{mag}"));
        }
        s.push_str(mono);
    };
    push(q.a, "x^2", &mut s);
    push(q.b, "xy", &mut s);
    push(q.c, "y^2", &mut s);
    s
}

/// Factor a real polynomial `p(t) = sum b_m t^m` (the Hessian restricted to
/// `x = 1`) into the homogeneous factorization data.
fn factor_from_coeffs<T: Real>(b: &[f64]) -> Result<HessianFactorization<T>, PhaseError> {
    let full_deg = b.len() - 1;
    let scale = b.iter().fold(0.0f64, |m, c| m.max(c.abs()));
    if scale == 0.0 {
        return Err(PhaseError::DegenerateHessian);
    }

    // Degree deficit -> pure x factors; roots at t = 0 -> pure y factors.
    let hi = b.iter().rposition(|c| c.abs() > 0.0).unwrap();
    let lo = b.iter().position(|c| c.abs() > 0.0).unwrap();
    let x_power = (full_deg - hi) as u32;
    let y_power = lo as u32;
    let core: Vec<f64> = b[lo..=hi].to_vec();

    let leading = core[core.len() - 1];
    if core.len() == 1 {
        return Ok(HessianFactorization {
            leading: T::of(leading),
            linear_factors: Vec::new(),
            quad_factors: Vec::new(),
            x_power,
            y_power,
            cluster_tol: roots::CLUSTER_TOL,
        });
    }

    let raw = roots::all_roots(&core);
    let clusters = roots::cluster(&core, &raw);

    // Ambiguity guard: polished cluster centers that sit just outside the
    // merge tolerance cannot be told apart from a single multiple root.
    let polished: Vec<(Complex64, usize)> = clusters
        .iter()
        .map(|c| (roots::polish(&core, c), c.multiplicity))
        .collect();
    for i in 0..polished.len() {
        for j in (i + 1)..polished.len() {
            let d = (polished[i].0 - polished[j].0).norm();
            let s = 1.0 + polished[i].0.norm().max(polished[j].0.norm());
            let tol = roots::merge_tol(polished[i].1 + polished[j].1);
            if d <= 3.0 * tol * s {
                return Err(PhaseError::RootIsolationFailure(format!(
                    "clusters at {} and {} separated by {:.3e} (merge tol {:.1e})",
                    polished[i].0, polished[j].0, d, tol
                )));
            }
        }
    }

    let mut linear: Vec<LinearFactor<T>> = Vec::new();
    let mut complexes: Vec<(Complex64, usize)> = Vec::new();
    for (z, m) in polished {
        if z.im.abs() <= roots::CLUSTER_TOL * (1.0 + z.norm()) {
            linear.push(LinearFactor {
                alpha: T::of(z.re),
                multiplicity: m as u32,
            });
        } else {
            complexes.push((z, m));
        }
    }

    // Pair complex roots with their conjugates into quadratic factors.
    let mut quads: Vec<QuadFactor<T>> = Vec::new();
    let mut used = vec![false; complexes.len()];
    for i in 0..complexes.len() {
        if used[i] {
            continue;
        }
        let (z, m) = complexes[i];
        if z.im < 0.0 {
            continue; // handled from its upper-half partner
        }
        let partner = (0..complexes.len()).find(|&j| {
            !used[j]
                && j != i
                && complexes[j].1 == m
                && (complexes[j].0 - z.conj()).norm() <= 1e-6 * (1.0 + z.norm())
        });
        let Some(j) = partner else {
            return Err(PhaseError::RootIsolationFailure(format!(
                "no conjugate partner for complex root {z}"
            )));
        };
        used[i] = true;
        used[j] = true;
        let q = QuadFactor {
            a: T::of(z.norm_sqr()),
            b: T::of(-2.0 * z.re),
            c: T::one(),
        };
        if q.is_positive_definite() {
            for _ in 0..m {
                quads.push(q);
            }
        } else {
            // Indefinite pair: re-split into two real linear factors.
            let disc = (z.re * z.re - z.norm_sqr()).max(0.0).sqrt();
            for root in [z.re - disc, z.re + disc] {
                linear.push(LinearFactor {
                    alpha: T::of(root),
                    multiplicity: m as u32,
                });
            }
        }
    }

    linear.sort_by(|p, q| p.alpha.partial_cmp(&q.alpha).unwrap());
    // Strictly increasing roots: merged clusters guarantee distinctness.
    for w in linear.windows(2) {
        if w[0].alpha >= w[1].alpha {
            return Err(PhaseError::RootIsolationFailure(format!(
                "non-increasing linear roots {} and {}",
                w[0].alpha, w[1].alpha
            )));
        }
    }

    Ok(HessianFactorization {
        leading: T::of(leading),
        linear_factors: linear,
        quad_factors: quads,
        x_power,
        y_power,
        cluster_tol: roots::CLUSTER_TOL,
    })
}

/// Compare the factored form against the symbolic Hessian on a fixed point
/// set; mismatch beyond 1e-9 relative means the isolation guessed wrong.
fn verify_reconstruction<T: Real>(
    phase: &HomogeneousPhase<T>,
    fact: &HessianFactorization<T>,
) -> Result<(), PhaseError> {
    let n = phase.degree;
    if fact.total_degree() != n - 2 {
        return Err(PhaseError::RootIsolationFailure(format!(
            "factor degrees sum to {} instead of {}",
            fact.total_degree(),
            n - 2
        )));
    }
    let mut worst = 0.0f64;
    let mut t = 0.17f64;
    for _ in 0..64 {
        // Low-discrepancy-ish sweep of directions and radii in [1e-3, 1].
        t = (t + 0.618_033_988_749_894_9).fract();
        let angle = 2.0 * std::f64::consts::PI * t;
        let radius = 1e-3f64.powf(t) // covers [1e-3, 1] geometrically
            ;
        let x = T::of(radius * angle.cos());
        let y = T::of(radius * angle.sin());
        let direct = phase.hessian_xy(x, y).as_f64();
        let rebuilt = fact.eval(x, y).as_f64();
        let scale = direct.abs().max(radius.powi((n - 2) as i32));
        if scale > 0.0 {
            worst = worst.max((direct - rebuilt).abs() / scale);
        }
    }
    if worst > 1e-9 {
        return Err(PhaseError::RootIsolationFailure(format!(
            "reconstruction residual {worst:.3e} exceeds 1e-9"
        )));
    }
    Ok(())
}

/// Dyadic region relative to the phase-dependent threshold: `Y` when the
/// y-variable dominates (`j > k + K`), `X` when x dominates, `Delta` when
/// the scales are comparable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Region {
    X,
    Delta,
    Y,
}

impl std::fmt::Display for Region {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Region::X => write!(f, "X"),
            Region::Delta => write!(f, "Delta"),
            Region::Y => write!(f, "Y"),
        }
    }
}

/// Total classification of a scale pair: exactly one region per `(j,k)`.
pub fn classify(j: i32, k: i32, threshold: i32) -> Region {
    if j > k + threshold {
        Region::Y
    } else if j < k - threshold {
        Region::X
    } else {
        Region::Delta
    }
}

/// Sign of a half-axis, selecting one of the four quadrants together with a
/// second sign.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sign {
    #[serde(rename = "+")]
    Plus,
    #[serde(rename = "-")]
    Minus,
}

impl Sign {
    pub fn scalar<T: Real>(self) -> T {
        match self {
            Sign::Plus => T::one(),
            Sign::Minus => -T::one(),
        }
    }

    pub const ALL: [Sign; 2] = [Sign::Plus, Sign::Minus];
}

/// One dyadic piece index: x lives at scale `2^-j` on the `sigma_x`
/// half-axis, y at `2^-k` on `sigma_y`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct DyadicIndex {
    pub j: i32,
    pub k: i32,
    pub sigma_x: Sign,
    pub sigma_y: Sign,
    pub region: Region,
}

impl DyadicIndex {
    pub fn new(j: i32, k: i32, sigma_x: Sign, sigma_y: Sign, threshold: i32) -> Self {
        Self {
            j,
            k,
            sigma_x,
            sigma_y,
            region: classify(j, k, threshold),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn phase4() -> HomogeneousPhase<f64> {
        HomogeneousPhase::new(4, vec![1.0, 0.0, 1.0]).unwrap()
    }

    #[test]
    fn eval_examples() {
        let p = phase4();
        assert_eq!(p.eval(1.0, 1.0), 2.0);
        assert_eq!(p.eval(0.0, 0.7), 0.0);
        assert_eq!(p.eval(0.5, 0.25), 0.0390625);
    }

    #[test]
    fn partial_examples() {
        let p = phase4();
        assert_eq!(p.partial(1, 1, 1.0, 1.0), 6.0);
        assert_eq!(p.partial(4, 1, 0.3, 0.4), 0.0);
        let p3 = HomogeneousPhase::new(3, vec![1.0, 1.0]).unwrap();
        assert_eq!(p3.partial(1, 1, 2.0, 1.0), 6.0);
    }

    #[test]
    fn rejects_bad_phases() {
        assert!(HomogeneousPhase::new(4, vec![0.0, 1.0, 1.0]).is_err());
        assert!(HomogeneousPhase::new(4, vec![1.0, 1.0, 0.0]).is_err());
        assert!(HomogeneousPhase::new(4, vec![1.0, 1.0]).is_err());
        assert!(HomogeneousPhase::<f64>::new(1, vec![]).is_err());
    }

    #[test]
    fn factor_pure_quadratic() {
        let f = phase4().factor_hessian().unwrap();
        assert_eq!(f.leading, 3.0);
        assert!(f.linear_factors.is_empty());
        assert_eq!(f.quad_factors.len(), 1);
        let q = f.quad_factors[0];
        assert!((q.a - 1.0).abs() < 1e-10);
        assert!(q.b.abs() < 1e-10);
        assert!((q.c - 1.0).abs() < 1e-10);
        assert_eq!(f.total_degree(), 2);
        assert_eq!(format!("{f}"), "3 * (x^2+y^2)");
    }

    #[test]
    fn factor_all_ones() {
        let p = HomogeneousPhase::<f64>::new(4, vec![1.0, 1.0, 1.0]).unwrap();
        let f = p.factor_hessian().unwrap();
        assert_eq!(f.leading, 3.0);
        assert!(f.linear_factors.is_empty());
        assert_eq!(f.quad_factors.len(), 1);
        assert!(f.quad_factors[0].is_positive_definite());
    }

    #[test]
    fn factor_cubic() {
        let p = HomogeneousPhase::<f64>::new(3, vec![1.0, 1.0]).unwrap();
        let f = p.factor_hessian().unwrap();
        assert_eq!(f.leading, 2.0);
        assert_eq!(f.linear_factors.len(), 1);
        assert!((f.linear_factors[0].alpha + 1.0).abs() < 1e-10);
        assert_eq!(f.linear_factors[0].multiplicity, 1);
        assert!(f.quad_factors.is_empty());
        assert_eq!(f.total_degree(), 1);
        assert_eq!(format!("{f}"), "2 * (y+x)");
    }

    #[test]
    fn factor_with_multiplicity() {
        // n = 5, a = (1,2,2,1): p(t) = 4 + 12t + 12t^2 + 4t^3 = 4(1+t)^3,
        // a single linear variety of multiplicity three.
        let p = HomogeneousPhase::<f64>::new(5, vec![1.0, 2.0, 2.0, 1.0]).unwrap();
        let f = p.factor_hessian().unwrap();
        assert_eq!(f.leading, 4.0);
        assert_eq!(f.linear_factors.len(), 1);
        assert_eq!(f.linear_factors[0].multiplicity, 3);
        assert!((f.linear_factors[0].alpha + 1.0).abs() < 1e-6);
        assert_eq!(f.total_degree(), 3);
    }

    #[test]
    fn threshold_examples() {
        let empty = HessianFactorization::<f64> {
            leading: 1.0,
            linear_factors: vec![],
            quad_factors: vec![],
            x_power: 0,
            y_power: 0,
            cluster_tol: 1e-7,
        };
        assert_eq!(empty.region_threshold(), 2);

        let one = HessianFactorization::<f64> {
            linear_factors: vec![LinearFactor {
                alpha: 1.0,
                multiplicity: 1,
            }],
            ..empty.clone()
        };
        assert_eq!(one.region_threshold(), 2);

        let pair = HessianFactorization::<f64> {
            linear_factors: vec![
                LinearFactor {
                    alpha: 0.125,
                    multiplicity: 1,
                },
                LinearFactor {
                    alpha: 3.0,
                    multiplicity: 1,
                },
            ],
            ..empty
        };
        assert_eq!(pair.region_threshold(), 5);
    }

    #[test]
    fn classify_examples() {
        assert_eq!(classify(10, 2, 3), Region::Y);
        assert_eq!(classify(2, 10, 3), Region::X);
        assert_eq!(classify(5, 4, 3), Region::Delta);
    }

    #[test]
    fn euler_identity() {
        let p = HomogeneousPhase::<f64>::new(6, vec![2.0, -1.0, 0.5, 0.0, 3.0]).unwrap();
        let pts = [(0.3, -0.7), (0.9, 0.2), (-0.5, -0.45), (0.01, 0.99)];
        for (x, y) in pts {
            let lhs = x * p.partial(1, 0, x, y) + y * p.partial(0, 1, x, y);
            let rhs = 6.0 * p.eval(x, y);
            assert!(
                (lhs - rhs).abs() <= 1e-10 * rhs.abs().max(1.0),
                "euler failed at ({x},{y})"
            );
        }
    }

    #[test]
    fn hessian_comparable_on_y_region() {
        // On a Y-region box the Hessian is pinned to 2^{-k(n-2)} within
        // factorization-dependent constants.
        let p = HomogeneousPhase::<f64>::new(4, vec![1.0, 1.0, 1.0]).unwrap();
        let f = p.factor_hessian().unwrap();
        let kk = f.region_threshold();
        let (k, m) = (3, kk + 2);
        let j = k + m;
        let base = 2f64.powi(-k * 2); // 2^{-k(n-2)}
        let mut t = 0.0f64;
        for _ in 0..200 {
            t = (t + 0.618_033_988_749_894_9).fract();
            let x = 2f64.powi(-j) * (1.0 + t); // [2^-j, 2^-j+1]
            let y = 2f64.powi(-k) * (2.0 - t);
            let h = p.hessian_xy(x, y).abs() / base;
            // c = 3 and the quad factor is within [1/4, 4] of y^2 on the box
            assert!(h > 0.3 && h < 20.0, "ratio {h} out of range");
        }
    }
}
