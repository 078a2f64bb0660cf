//! The oscillatory singular operator
//! `Tf(x) = int e^{i lambda S(x,y)} K(x,y) psi(x,y) f(y) dy`
//! and its decompositions: the near/far diagonal split `T = T1 + T2`, the
//! dyadic pieces of `T2`, the X/Delta/Y scale groups, and the damped
//! families carrying `|S''_xy|^z`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::phase::{classify, DyadicIndex, HomogeneousPhase, PhaseError, Region, Sign};
use crate::quad::{integrate, IntegrandSpec, QuadError, SingularBound};
use crate::real::{Cplx, Real};
use crate::weights::{bump_phi, dyadic_psi, KernelError, SingularKernel};

#[derive(Debug, Error)]
pub enum OperatorError {
    #[error("quadrature failed to converge at output point {at}: estimate {estimate:e} after {panels} panels")]
    Quadrature {
        at: f64,
        estimate: f64,
        panels: usize,
    },
    #[error(transparent)]
    Phase(#[from] PhaseError),
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error("invalid operator configuration: {0}")]
    InvalidConfig(String),
}

/// Rectangular support of the amplitude `psi`, contained in
/// `[-1/2,1/2]^2`. `psi` is the tensor bump equal to one on the inner
/// half of the box.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AmplitudeBox<T> {
    pub x: (T, T),
    pub y: (T, T),
}

impl<T: Real> Default for AmplitudeBox<T> {
    fn default() -> Self {
        let h = T::of(0.5);
        Self {
            x: (-h, h),
            y: (-h, h),
        }
    }
}

impl<T: Real> AmplitudeBox<T> {
    fn validate(&self) -> Result<(), OperatorError> {
        let h = T::of(0.5);
        for (lo, hi) in [self.x, self.y] {
            if !(lo < hi) || lo < -h || hi > h {
                return Err(OperatorError::InvalidConfig(format!(
                    "amplitude box side ({lo}, {hi}) must be inside [-1/2, 1/2]"
                )));
            }
        }
        Ok(())
    }

    fn side_bump(side: (T, T), u: T) -> T {
        // Affine map of the side onto [-1, 1], then the fixed bump.
        let mid = (side.0 + side.1) * T::of(0.5);
        let rad = (side.1 - side.0) * T::of(0.5);
        bump_phi((u - mid) / rad)
    }
}

/// Test functions the operator is applied to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SampledFunction<T> {
    /// `chi_{[lo, hi]}`.
    Indicator { lo: T, hi: T },
    /// Smooth bump equal to one on the inner half of `[center-radius,
    /// center+radius]`.
    Bump { center: T, radius: T },
    /// `e^{i freq y}`.
    ComplexExp { freq: T },
    Constant { re: T, im: T },
    /// Piecewise-linear interpolation of complex samples, zero outside the
    /// grid.
    Sampled { grid: Vec<T>, values: Vec<Cplx<T>> },
    /// Finite linear combination (used by linearity checks).
    Combo { terms: Vec<ComboTerm<T>> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComboTerm<T> {
    pub weight: Cplx<T>,
    pub f: Box<SampledFunction<T>>,
}

impl<T: Real> SampledFunction<T> {
    pub fn zero() -> Self {
        SampledFunction::Constant {
            re: T::zero(),
            im: T::zero(),
        }
    }

    pub fn eval(&self, y: T) -> Cplx<T> {
        match self {
            SampledFunction::Indicator { lo, hi } => {
                if y >= *lo && y <= *hi {
                    Cplx::new(T::one(), T::zero())
                } else {
                    Cplx::new(T::zero(), T::zero())
                }
            }
            SampledFunction::Bump { center, radius } => {
                Cplx::new(bump_phi((y - *center) / *radius), T::zero())
            }
            SampledFunction::ComplexExp { freq } => crate::real::cis(*freq * y),
            SampledFunction::Constant { re, im } => Cplx::new(*re, *im),
            SampledFunction::Sampled { grid, values } => {
                if grid.is_empty() || y < grid[0] || y > grid[grid.len() - 1] {
                    return Cplx::new(T::zero(), T::zero());
                }
                let pos = grid.partition_point(|g| *g <= y);
                if pos == 0 {
                    return values[0];
                }
                if pos >= grid.len() {
                    return values[grid.len() - 1];
                }
                let (g0, g1) = (grid[pos - 1], grid[pos]);
                let t = (y - g0) / (g1 - g0);
                values[pos - 1] * (T::one() - t) + values[pos] * t
            }
            SampledFunction::Combo { terms } => terms
                .iter()
                .map(|t| t.f.eval(y) * t.weight)
                .fold(Cplx::new(T::zero(), T::zero()), |a, b| a + b),
        }
    }

    /// Interval outside which the function vanishes, when one exists.
    pub fn support(&self) -> Option<(T, T)> {
        match self {
            SampledFunction::Indicator { lo, hi } => Some((*lo, *hi)),
            SampledFunction::Bump { center, radius } => {
                Some((*center - *radius, *center + *radius))
            }
            SampledFunction::ComplexExp { .. } | SampledFunction::Constant { .. } => None,
            SampledFunction::Sampled { grid, .. } => {
                if grid.is_empty() {
                    None
                } else {
                    Some((grid[0], grid[grid.len() - 1]))
                }
            }
            SampledFunction::Combo { terms } => {
                let mut acc: Option<(T, T)> = None;
                for t in terms {
                    match (acc, t.f.support()) {
                        (_, None) => return None,
                        (None, s) => acc = s,
                        (Some((a, b)), Some((c, d))) => acc = Some((a.min(c), b.max(d))),
                    }
                }
                acc
            }
        }
    }

    /// Locations of jumps or kinks, used as quadrature panel boundaries.
    pub fn breakpoints(&self) -> Vec<T> {
        match self {
            SampledFunction::Indicator { lo, hi } => vec![*lo, *hi],
            SampledFunction::Bump { center, radius } => {
                let half = *radius * T::of(0.5);
                vec![
                    *center - *radius,
                    *center - half,
                    *center + half,
                    *center + *radius,
                ]
            }
            SampledFunction::ComplexExp { .. } | SampledFunction::Constant { .. } => Vec::new(),
            SampledFunction::Sampled { grid, .. } => grid.clone(),
            SampledFunction::Combo { terms } => {
                terms.iter().flat_map(|t| t.f.breakpoints()).collect()
            }
        }
    }

    /// Upper bound on `|f|`.
    pub fn sup_abs(&self) -> T {
        match self {
            SampledFunction::Indicator { .. } | SampledFunction::Bump { .. } => T::one(),
            SampledFunction::ComplexExp { .. } => T::one(),
            SampledFunction::Constant { re, im } => Cplx::new(*re, *im).norm(),
            SampledFunction::Sampled { values, .. } => values
                .iter()
                .map(|v| v.norm())
                .fold(T::zero(), |a, b| a.max(b)),
            SampledFunction::Combo { terms } => terms
                .iter()
                .map(|t| t.weight.norm() * t.f.sup_abs())
                .sum(),
        }
    }

    /// Bound on the intrinsic oscillation `max |d arg f / dy|`.
    fn osc_bound(&self) -> T {
        match self {
            SampledFunction::ComplexExp { freq } => freq.abs(),
            SampledFunction::Combo { terms } => terms
                .iter()
                .map(|t| t.f.osc_bound())
                .fold(T::zero(), |a, b| a.max(b)),
            _ => T::zero(),
        }
    }
}

/// One concrete instance of the operator.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Real", deserialize = "T: Real"))]
pub struct OperatorConfig<T> {
    pub phase: HomogeneousPhase<T>,
    pub kernel: SingularKernel<T>,
    pub lambda: T,
    #[serde(default)]
    pub amplitude_box: AmplitudeBox<T>,
    pub quad_tol: T,
    pub max_panels: usize,
    /// Dyadic pieces with `j > j_max` or `k > j_max` are dropped; the
    /// reported truncation budget bounds what they could contribute.
    pub j_max: i32,
    #[serde(default = "all_quadrants")]
    pub quadrants: Vec<(Sign, Sign)>,
}

fn all_quadrants() -> Vec<(Sign, Sign)> {
    vec![
        (Sign::Plus, Sign::Plus),
        (Sign::Plus, Sign::Minus),
        (Sign::Minus, Sign::Plus),
        (Sign::Minus, Sign::Minus),
    ]
}

/// Group application result: the franchise value plus a computed bound on
/// the dropped fine-scale pieces.
#[derive(Debug, Clone, Copy)]
pub struct GroupValue<T> {
    pub value: Cplx<T>,
    pub truncation_budget: T,
}

/// Damped variant `T_region^z` with the factor `|S''_xy|^z` in every piece.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Real", deserialize = "T: Real"))]
pub struct DampedConfig<T> {
    pub base: OperatorConfig<T>,
    pub z: Cplx<T>,
    pub region: Region,
}

impl<T: Real> DampedConfig<T> {
    pub fn new(base: OperatorConfig<T>, z: Cplx<T>, region: Region) -> Result<Self, OperatorError> {
        if region == Region::Delta {
            return Err(OperatorError::InvalidConfig(
                "damping applies to the X and Y groups only".into(),
            ));
        }
        Ok(Self { base, z, region })
    }

    pub fn apply(&self, f: &SampledFunction<T>, x: T) -> Result<GroupValue<T>, OperatorError> {
        self.base.apply_region(self.region, Some(self.z), f, x)
    }
}

impl<T: Real> OperatorConfig<T> {
    pub fn new(phase: HomogeneousPhase<T>, kernel: SingularKernel<T>, lambda: T) -> Self {
        Self {
            phase,
            kernel,
            lambda,
            amplitude_box: AmplitudeBox::default(),
            quad_tol: T::of(1e-8),
            max_panels: 400_000,
            j_max: 14,
            quadrants: all_quadrants(),
        }
    }

    pub fn validate(&self) -> Result<(), OperatorError> {
        if !(self.lambda > T::zero()) {
            return Err(OperatorError::InvalidConfig(format!(
                "lambda must be positive, got {}",
                self.lambda
            )));
        }
        if !(self.quad_tol > T::zero()) {
            return Err(OperatorError::InvalidConfig(
                "quad_tol must be positive".into(),
            ));
        }
        if self.j_max < 1 {
            return Err(OperatorError::InvalidConfig("j_max must be >= 1".into()));
        }
        if self.quadrants.is_empty() {
            return Err(OperatorError::InvalidConfig(
                "at least one quadrant must be enabled".into(),
            ));
        }
        self.amplitude_box.validate()
    }

    pub fn psi_x(&self, x: T) -> T {
        AmplitudeBox::side_bump(self.amplitude_box.x, x)
    }

    pub fn psi_y(&self, y: T) -> T {
        AmplitudeBox::side_bump(self.amplitude_box.y, y)
    }

    /// Amplitude `psi(x,y)`: a tensor product of smooth bumps, equal to one
    /// on the inner half of the box.
    pub fn psi(&self, x: T, y: T) -> T {
        self.psi_x(x) * self.psi_y(y)
    }

    /// Diagonal excision scale `lambda^{1/n}`.
    pub fn excision_scale(&self) -> T {
        self.lambda
            .abs()
            .powf(T::of(1.0 / self.phase.degree as f64))
    }

    /// Region threshold derived from the Hessian factorization.
    pub fn region_threshold(&self) -> Result<i32, OperatorError> {
        Ok(self.phase.factor_hessian()?.region_threshold())
    }

    fn y_osc_scale(&self, x: T, window: (T, T)) -> T {
        let n = self.phase.degree;
        let ymax = window.0.abs().max(window.1.abs());
        let mut acc = T::zero();
        for (idx, &a) in self.phase.coeffs.iter().enumerate() {
            let k = idx as u32 + 1;
            acc = acc + a.abs() * T::of(k as f64) * x.abs().powi((n - k) as i32)
                * ymax.powi((k - 1) as i32);
        }
        self.lambda.abs() * acc
    }

    fn x_osc_scale(&self, y: T, window: (T, T)) -> T {
        let n = self.phase.degree;
        let xmax = window.0.abs().max(window.1.abs());
        let mut acc = T::zero();
        for (idx, &a) in self.phase.coeffs.iter().enumerate() {
            let k = idx as u32 + 1;
            acc = acc + a.abs() * T::of((n - k) as f64) * xmax.powi((n - k - 1) as i32)
                * y.abs().powi(k as i32);
        }
        self.lambda.abs() * acc
    }

    /// Core y-integration shared by every variant. `extra` multiplies the
    /// integrand; returning zero there short-circuits the kernel evaluation
    /// so excised regions never touch the diagonal singularity.
    fn apply_core(
        &self,
        f: &SampledFunction<T>,
        x: T,
        extra: &dyn Fn(T) -> Cplx<T>,
        window: Option<(T, T)>,
        extra_breaks: &[T],
        diagonal_is_singular: bool,
    ) -> Result<Cplx<T>, OperatorError> {
        let psix = self.psi_x(x);
        if psix == T::zero() {
            return Ok(Cplx::new(T::zero(), T::zero()));
        }
        let (mut lo, mut hi) = self.amplitude_box.y;
        if let Some((slo, shi)) = f.support() {
            lo = lo.max(slo);
            hi = hi.min(shi);
        }
        if let Some((wlo, whi)) = window {
            lo = lo.max(wlo);
            hi = hi.min(whi);
        }
        if !(lo < hi) {
            return Ok(Cplx::new(T::zero(), T::zero()));
        }

        let lambda = self.lambda;
        let phase_fn = move |y: T| lambda * self.phase.eval(x, y);
        let amplitude = move |y: T| {
            let w = extra(y);
            if w.re == T::zero() && w.im == T::zero() {
                return Cplx::new(T::zero(), T::zero());
            }
            if y == x {
                // Measure-zero diagonal hit outside the excised variants.
                return Cplx::new(T::zero(), T::zero());
            }
            let k = self.kernel.eval_off_diagonal(x, y);
            let fv = f.eval(y);
            w * fv * (k * psix * self.psi_y(y))
        };

        let mut breaks: Vec<T> = f.breakpoints();
        breaks.extend_from_slice(extra_breaks);

        let mut spec = IntegrandSpec::new(&amplitude, &phase_fn, (lo, hi));
        spec.breakpoints = breaks;
        spec.osc_scale = self.y_osc_scale(x, (lo, hi)) + f.osc_bound();
        if diagonal_is_singular && x >= lo && x <= hi {
            spec.singular_points = vec![x];
            spec.singular_bound = Some(SingularBound {
                e: self.kernel.e * f.sup_abs(),
                mu: self.kernel.mu,
            });
        }
        match integrate(&spec, self.quad_tol, self.max_panels) {
            Ok(r) => Ok(r.value),
            Err(QuadError::BudgetExceeded {
                panels, estimate, ..
            }) => Err(OperatorError::Quadrature {
                at: x.as_f64(),
                estimate: estimate.as_f64(),
                panels,
            }),
        }
    }

    /// `Tf(x)`.
    pub fn apply(&self, f: &SampledFunction<T>, x: T) -> Result<Cplx<T>, OperatorError> {
        let one = |_: T| Cplx::new(T::one(), T::zero());
        self.apply_core(f, x, &one, None, &[], true)
    }

    /// Near-diagonal part: the excision bump `phi((x-y) lambda^{1/n})`
    /// keeps `|x-y| <= lambda^{-1/n}`.
    pub fn apply_t1(&self, f: &SampledFunction<T>, x: T) -> Result<Cplx<T>, OperatorError> {
        let scale = self.excision_scale();
        let cut = move |y: T| Cplx::new(bump_phi((x - y) * scale), T::zero());
        let w = scale.recip();
        let window = (x - w, x + w);
        let half = w * T::of(0.5);
        let breaks = [x - w, x - half, x + half, x + w];
        self.apply_core(f, x, &cut, Some(window), &breaks, true)
    }

    /// Far part `T2 = T - T1`; the integrand vanishes within
    /// `lambda^{-1/n}/2` of the diagonal, so it is not singular.
    pub fn apply_t2(&self, f: &SampledFunction<T>, x: T) -> Result<Cplx<T>, OperatorError> {
        let scale = self.excision_scale();
        let cut = move |y: T| Cplx::new(T::one() - bump_phi((x - y) * scale), T::zero());
        let w = scale.recip();
        let half = w * T::of(0.5);
        let breaks = [x - w, x - half, x + half, x + w];
        self.apply_core(f, x, &cut, None, &breaks, false)
    }

    /// One dyadic piece of `T2`. The annular cutoffs are one-sided: the
    /// piece lives on the `sigma_x`/`sigma_y` half-axes, so summing the
    /// four quadrants recovers the even partition of unity.
    pub fn apply_piece(
        &self,
        idx: DyadicIndex,
        f: &SampledFunction<T>,
        x: T,
    ) -> Result<Cplx<T>, OperatorError> {
        self.apply_piece_damped(idx, None, f, x)
    }

    fn apply_piece_damped(
        &self,
        idx: DyadicIndex,
        z: Option<Cplx<T>>,
        f: &SampledFunction<T>,
        x: T,
    ) -> Result<Cplx<T>, OperatorError> {
        let sx: T = idx.sigma_x.scalar();
        let sy: T = idx.sigma_y.scalar();
        let xfac = if sx * x > T::zero() {
            dyadic_psi(T::of(2f64.powi(idx.j)) * sx * x)
        } else {
            T::zero()
        };
        if xfac == T::zero() {
            return Ok(Cplx::new(T::zero(), T::zero()));
        }

        let scale = self.excision_scale();
        let kf = T::of(2f64.powi(idx.k));
        let extra = move |y: T| {
            if sy * y <= T::zero() {
                return Cplx::new(T::zero(), T::zero());
            }
            let yfac = dyadic_psi(kf * sy * y);
            if yfac == T::zero() {
                return Cplx::new(T::zero(), T::zero());
            }
            let cut = T::one() - bump_phi((x - y) * scale);
            if cut == T::zero() {
                return Cplx::new(T::zero(), T::zero());
            }
            let base = Cplx::new(yfac * cut, T::zero());
            match z {
                None => base,
                Some(z) => base * self.damping_factor(x, y, z),
            }
        };

        // y lives in the annulus sigma_y * y in [2^{-k-1}, 2^{-k+1}].
        let r_lo = T::of(2f64.powi(-idx.k - 1));
        let r_hi = T::of(2f64.powi(-idx.k + 1));
        let window = match idx.sigma_y {
            Sign::Plus => (r_lo, r_hi),
            Sign::Minus => (-r_hi, -r_lo),
        };
        let w = scale.recip();
        let half = w * T::of(0.5);
        let breaks = [x - w, x - half, x + half, x + w];
        let v = self.apply_core(f, x, &extra, Some(window), &breaks, false)?;
        Ok(v * xfac)
    }

    /// `|S''_xy(x,y)|^z` with the zero-variety convention: zero for
    /// `Re z > 0`, skipped (zero) for `Re z <= 0` after a one-ulp nudge
    /// fails to move off the variety; `z = 0` is identically one.
    fn damping_factor(&self, x: T, y: T, z: Cplx<T>) -> Cplx<T> {
        if z.re == T::zero() && z.im == T::zero() {
            return Cplx::new(T::one(), T::zero());
        }
        let mut h = self.phase.hessian_xy(x, y).abs();
        if h == T::zero() {
            if z.re > T::zero() {
                return Cplx::new(T::zero(), T::zero());
            }
            // Nudge one ulp off the variety and retry.
            let nudge = y.abs().max(T::min_positive_value()) * T::epsilon();
            h = self.phase.hessian_xy(x, y + nudge).abs();
            if h == T::zero() {
                log::warn!(
                    "damping factor hit S''=0 at ({}, {}) and the ulp nudge stayed on the variety; treating the node as zero",
                    x, y
                );
                return Cplx::new(T::zero(), T::zero());
            }
            log::debug!("damping node nudged off S''=0 at ({x}, {y})");
        }
        let ln = h.ln();
        Cplx::from_polar(h.powf(z.re), z.im * ln)
    }

    /// Sum of the pieces of one region over the enabled quadrants, with a
    /// computed bound on the dropped `j > j_max` / `k > j_max` tail.
    pub fn apply_group(
        &self,
        region: Region,
        f: &SampledFunction<T>,
        x: T,
    ) -> Result<GroupValue<T>, OperatorError> {
        self.apply_region(region, None, f, x)
    }

    fn apply_region(
        &self,
        region: Region,
        z: Option<Cplx<T>>,
        f: &SampledFunction<T>,
        x: T,
    ) -> Result<GroupValue<T>, OperatorError> {
        let threshold = self.region_threshold()?;
        let mut acc = Cplx::new(T::zero(), T::zero());
        for &(sx, sy) in &self.quadrants {
            for j in 0..=self.j_max {
                for k in 0..=self.j_max {
                    if classify(j, k, threshold) != region {
                        continue;
                    }
                    let idx = DyadicIndex::new(j, k, sx, sy, threshold);
                    acc = acc + self.apply_piece_damped(idx, z, f, x)?;
                }
            }
        }
        Ok(GroupValue {
            value: acc,
            truncation_budget: self.truncation_budget(f, x)?,
        })
    }

    /// Bound on everything the `j,k <= j_max` lattice misses at this output
    /// point: one non-oscillatory quadrature of `|kernel| psi |f|` against
    /// the exact partition-of-unity deficit.
    pub fn truncation_budget(
        &self,
        f: &SampledFunction<T>,
        x: T,
    ) -> Result<T, OperatorError> {
        let psix = self.psi_x(x);
        if psix == T::zero() {
            return Ok(T::zero());
        }
        let scale = self.excision_scale();
        let jm = self.j_max;
        let covered = |quads: &[(Sign, Sign)], u: T, v: T| -> T {
            // Weight the enabled quadrants carry at (u, v) after truncation.
            let tail = |s: Sign, t: T| -> T {
                let sc: T = s.scalar();
                if sc * t > T::zero() {
                    T::one() - bump_phi(T::of(2f64.powi(jm)) * sc * t)
                } else {
                    T::zero()
                }
            };
            quads
                .iter()
                .map(|&(sx, sy)| tail(sx, u) * tail(sy, v))
                .sum()
        };
        let quads = self.quadrants.clone();
        let amplitude = move |y: T| {
            let cut = T::one() - bump_phi((x - y) * scale);
            if cut == T::zero() || y == x {
                return Cplx::new(T::zero(), T::zero());
            }
            let deficit = (T::one() - covered(&quads, x, y)).max(T::zero());
            if deficit == T::zero() {
                return Cplx::new(T::zero(), T::zero());
            }
            let k = self.kernel.eval_off_diagonal(x, y).abs();
            Cplx::new(
                k * cut * deficit * psix * self.psi_y(y) * f.eval(y).norm(),
                T::zero(),
            )
        };
        let zero_phase = |_: T| T::zero();
        let (mut lo, mut hi) = self.amplitude_box.y;
        if let Some((slo, shi)) = f.support() {
            lo = lo.max(slo);
            hi = hi.min(shi);
        }
        if !(lo < hi) {
            return Ok(T::zero());
        }
        let w = scale.recip();
        let half = w * T::of(0.5);
        let mut spec = IntegrandSpec::new(&amplitude, &zero_phase, (lo, hi));
        spec.breakpoints = f.breakpoints();
        spec.breakpoints
            .extend_from_slice(&[x - w, x - half, x + half, x + w]);
        // Budget needs one digit, not full tolerance.
        let tol = self.quad_tol.max(T::of(1e-10));
        match integrate(&spec, tol, self.max_panels) {
            Ok(r) => Ok(r.value.re.abs() + r.abs_error_estimate),
            Err(QuadError::BudgetExceeded { partial, .. }) => {
                Ok(partial.value.re.abs() + partial.abs_error_estimate)
            }
        }
    }

    /// Adjoint `T*g(y) = int e^{-i lambda S(x,y)} conj(K) psi g(x) dx`.
    pub fn adjoint_apply(
        &self,
        g: &SampledFunction<T>,
        y: T,
    ) -> Result<Cplx<T>, OperatorError> {
        let psiy = self.psi_y(y);
        if psiy == T::zero() {
            return Ok(Cplx::new(T::zero(), T::zero()));
        }
        let (mut lo, mut hi) = self.amplitude_box.x;
        if let Some((slo, shi)) = g.support() {
            lo = lo.max(slo);
            hi = hi.min(shi);
        }
        if !(lo < hi) {
            return Ok(Cplx::new(T::zero(), T::zero()));
        }
        let lambda = self.lambda;
        // Kernels in this crate are real-valued, so conj(K) = K.
        let phase_fn = move |x: T| -lambda * self.phase.eval(x, y);
        let amplitude = move |x: T| {
            if x == y {
                return Cplx::new(T::zero(), T::zero());
            }
            let k = self.kernel.eval_off_diagonal(x, y);
            g.eval(x) * (k * self.psi_x(x) * psiy)
        };
        let mut spec = IntegrandSpec::new(&amplitude, &phase_fn, (lo, hi));
        spec.breakpoints = g.breakpoints();
        spec.osc_scale = self.x_osc_scale(y, (lo, hi)) + g.osc_bound();
        if y >= lo && y <= hi {
            spec.singular_points = vec![y];
            spec.singular_bound = Some(SingularBound {
                e: self.kernel.e * g.sup_abs(),
                mu: self.kernel.mu,
            });
        }
        match integrate(&spec, self.quad_tol, self.max_panels) {
            Ok(r) => Ok(r.value),
            Err(QuadError::BudgetExceeded {
                panels, estimate, ..
            }) => Err(OperatorError::Quadrature {
                at: y.as_f64(),
                estimate: estimate.as_f64(),
                panels,
            }),
        }
    }
}

