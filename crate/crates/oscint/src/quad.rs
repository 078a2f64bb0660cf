//! One-dimensional quadrature for oscillatory integrands with integrable
//! endpoint singularities: adaptive bisection on fixed-order Gauss-Legendre
//! panels, plus a deliberately simple Simpson oracle used as ground truth in
//! tests.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use thiserror::Error;

use crate::real::{cis, Cplx, Real};

mod tables {
    //! Gauss-Legendre nodes/weights on [-1, 1].
    pub const GL7_NODES: [f64; 7] = [
        -0.94910791234275852453,
        -0.74153118559939443986,
        -0.40584515137739716691,
        0.0,
        0.40584515137739716691,
        0.74153118559939443986,
        0.94910791234275852453,
    ];
    pub const GL7_WEIGHTS: [f64; 7] = [
        0.12948496616886969327,
        0.2797053914892766679,
        0.38183005050511894495,
        0.41795918367346938776,
        0.38183005050511894495,
        0.2797053914892766679,
        0.12948496616886969327,
    ];
    pub const GL15_NODES: [f64; 15] = [
        -0.98799251802048542849,
        -0.93727339240070590431,
        -0.8482065834104272162,
        -0.72441773136017004742,
        -0.57097217260853884754,
        -0.3941513470775633699,
        -0.2011940939974345223,
        0.0,
        0.2011940939974345223,
        0.3941513470775633699,
        0.57097217260853884754,
        0.72441773136017004742,
        0.8482065834104272162,
        0.93727339240070590431,
        0.98799251802048542849,
    ];
    pub const GL15_WEIGHTS: [f64; 15] = [
        0.030753241996117268355,
        0.070366047488108124709,
        0.10715922046717193501,
        0.13957067792615431445,
        0.16626920581699393355,
        0.18616100001556221103,
        0.19843148532711157646,
        0.20257824192556127288,
        0.19843148532711157646,
        0.18616100001556221103,
        0.16626920581699393355,
        0.13957067792615431445,
        0.10715922046717193501,
        0.070366047488108124709,
        0.030753241996117268355,
    ];
}

#[derive(Debug, Error)]
pub enum QuadError<T: Real> {
    #[error("panel budget exhausted: {panels} panels, error estimate {estimate:e}")]
    BudgetExceeded {
        panels: usize,
        estimate: T,
        partial: QuadResult<T>,
    },
}

/// Strength `(E, mu)` of the integrable endpoint singularities, used to cut
/// off geometric grading once the remaining tail is provably below
/// tolerance.
#[derive(Debug, Clone, Copy)]
pub struct SingularBound<T> {
    pub e: T,
    pub mu: T,
}

/// One concrete integrand `int_a^b amplitude(y) e^{i phase(y)} dy`.
pub struct IntegrandSpec<'a, T> {
    pub amplitude: &'a dyn Fn(T) -> Cplx<T>,
    pub phase: &'a dyn Fn(T) -> T,
    pub interval: (T, T),
    /// Points where the amplitude may blow up integrably; panels are graded
    /// geometrically toward each.
    pub singular_points: Vec<T>,
    /// Jump/kink locations that become panel boundaries (indicator
    /// endpoints, cutoff band edges).
    pub breakpoints: Vec<T>,
    /// Bound on `max |phase'|` over the interval, used to size the initial
    /// panels against the oscillation.
    pub osc_scale: T,
    pub singular_bound: Option<SingularBound<T>>,
}

impl<'a, T: Real> IntegrandSpec<'a, T> {
    pub fn new(
        amplitude: &'a dyn Fn(T) -> Cplx<T>,
        phase: &'a dyn Fn(T) -> T,
        interval: (T, T),
    ) -> Self {
        assert!(interval.0 < interval.1, "interval must satisfy a < b");
        Self {
            amplitude,
            phase,
            interval,
            singular_points: Vec::new(),
            breakpoints: Vec::new(),
            osc_scale: T::zero(),
            singular_bound: None,
        }
    }

    fn eval(&self, y: T) -> Cplx<T> {
        (self.amplitude)(y) * cis((self.phase)(y))
    }
}

#[derive(Debug, Clone, Copy)]
pub struct QuadResult<T> {
    pub value: Cplx<T>,
    pub abs_error_estimate: T,
    pub panels_used: usize,
    pub converged: bool,
}

struct Panel<T> {
    lo: T,
    hi: T,
    value: Cplx<T>,
    err: T,
}

impl<T: Real> PartialEq for Panel<T> {
    fn eq(&self, other: &Self) -> bool {
        self.err == other.err
    }
}
impl<T: Real> Eq for Panel<T> {}
impl<T: Real> PartialOrd for Panel<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<T: Real> Ord for Panel<T> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.err.partial_cmp(&other.err).unwrap_or(Ordering::Equal)
    }
}

fn eval_panel<T: Real>(spec: &IntegrandSpec<'_, T>, lo: T, hi: T) -> Panel<T> {
    let half = T::of(0.5);
    let mid = (lo + hi) * half;
    let rad = (hi - lo) * half;
    let mut v15 = Cplx::new(T::zero(), T::zero());
    for (node, weight) in tables::GL15_NODES.iter().zip(tables::GL15_WEIGHTS.iter()) {
        v15 = v15 + spec.eval(mid + rad * T::of(*node)) * T::of(*weight);
    }
    let mut v7 = Cplx::new(T::zero(), T::zero());
    for (node, weight) in tables::GL7_NODES.iter().zip(tables::GL7_WEIGHTS.iter()) {
        v7 = v7 + spec.eval(mid + rad * T::of(*node)) * T::of(*weight);
    }
    v15 = v15 * rad;
    v7 = v7 * rad;
    Panel {
        lo,
        hi,
        value: v15,
        err: (v15 - v7).norm(),
    }
}

/// Panel boundaries before any adaptivity: breakpoints and singular points,
/// each base segment split to the oscillation-resolving width, then
/// geometric grading toward every singular point.
fn initial_boundaries<T: Real>(spec: &IntegrandSpec<'_, T>, tol: T) -> Vec<T> {
    let (a, b) = spec.interval;
    let mut cuts: Vec<T> = vec![a, b];
    for &p in spec.breakpoints.iter().chain(spec.singular_points.iter()) {
        if p > a && p < b {
            cuts.push(p);
        }
    }
    cuts.sort_by(|p, q| p.partial_cmp(q).unwrap());
    cuts.dedup();

    let w0 = (b - a).min(T::of(2.0) * T::PI() / (T::one() + spec.osc_scale));
    let mut bounds: Vec<T> = Vec::new();
    for w in cuts.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        bounds.push(lo);
        let pieces = ((hi - lo) / w0).ceil().as_f64().max(1.0) as usize;
        for i in 1..pieces {
            bounds.push(lo + (hi - lo) * T::of(i as f64 / pieces as f64));
        }
    }
    bounds.push(b);

    // Grading floor: absolute width 1e-14, or earlier once the singular
    // tail E w^{1-mu}/(1-mu) drops below tol/10.
    let mut w_stop = T::of(1e-14);
    if let Some(sb) = spec.singular_bound {
        let one_minus = T::one() - sb.mu;
        let target = (one_minus * tol / (T::of(10.0) * sb.e)).powf(one_minus.recip());
        w_stop = w_stop.max(target);
    }

    let mut graded: Vec<T> = Vec::new();
    for w in bounds.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        graded.push(lo);
        let sing_lo = spec.singular_points.iter().any(|&s| s == lo);
        let sing_hi = spec.singular_points.iter().any(|&s| s == hi);
        let mut inner: Vec<T> = Vec::new();
        if sing_lo && !sing_hi {
            let mut width = hi - lo;
            while width * T::of(0.5) > w_stop {
                width = width * T::of(0.5);
                let cut = lo + width;
                if cut <= lo || cut >= hi {
                    break; // width underflow at this magnitude
                }
                inner.push(cut);
            }
            inner.reverse();
        } else if sing_hi && !sing_lo {
            let mut width = hi - lo;
            while width * T::of(0.5) > w_stop {
                width = width * T::of(0.5);
                let cut = hi - width;
                if cut <= lo || cut >= hi {
                    break;
                }
                inner.push(cut);
            }
        } else if sing_lo && sing_hi {
            // Graded from both ends toward the middle.
            let mid = (lo + hi) * T::of(0.5);
            let mut left: Vec<T> = Vec::new();
            let mut width = (hi - lo) * T::of(0.5);
            while width * T::of(0.5) > w_stop {
                width = width * T::of(0.5);
                let cl = lo + width;
                let cr = hi - width;
                if cl <= lo || cr >= hi || cl >= mid || cr <= mid {
                    break;
                }
                left.push(cl);
                inner.push(cr);
            }
            left.reverse();
            let mut assembled = left;
            assembled.push(mid);
            assembled.extend(inner.iter().rev().copied());
            inner = assembled;
        }
        graded.extend(inner);
    }
    graded.push(b);
    graded.sort_by(|p, q| p.partial_cmp(q).unwrap());
    graded.dedup();
    graded
}

/// Adaptive integration of `spec` to absolute tolerance `tol`.
pub fn integrate<T: Real>(
    spec: &IntegrandSpec<'_, T>,
    tol: T,
    max_panels: usize,
) -> Result<QuadResult<T>, QuadError<T>> {
    assert!(tol > T::zero(), "tolerance must be positive");
    let boundaries = initial_boundaries(spec, tol);

    let mut heap: BinaryHeap<Panel<T>> = BinaryHeap::new();
    let mut panels_used = 0usize;
    for w in boundaries.windows(2) {
        heap.push(eval_panel(spec, w[0], w[1]));
        panels_used += 1;
    }

    let total = |heap: &BinaryHeap<Panel<T>>| -> (Cplx<T>, T) {
        let mut v = Cplx::new(T::zero(), T::zero());
        let mut e = T::zero();
        for p in heap.iter() {
            v = v + p.value;
            e = e + p.err;
        }
        (v, e)
    };

    loop {
        let (value, err) = total(&heap);
        if err <= tol {
            return Ok(QuadResult {
                value,
                abs_error_estimate: err,
                panels_used,
                converged: true,
            });
        }
        if panels_used + 2 > max_panels {
            let partial = QuadResult {
                value,
                abs_error_estimate: err,
                panels_used,
                converged: false,
            };
            return Err(QuadError::BudgetExceeded {
                panels: panels_used,
                estimate: err,
                partial,
            });
        }
        let worst = heap.pop().expect("at least one panel");
        let mid = (worst.lo + worst.hi) * T::of(0.5);
        if mid <= worst.lo || mid >= worst.hi {
            // Width underflow: cannot split further; report as-is.
            heap.push(worst);
            let (value, err) = total(&heap);
            return Ok(QuadResult {
                value,
                abs_error_estimate: err,
                panels_used,
                converged: err <= tol,
            });
        }
        heap.push(eval_panel(spec, worst.lo, mid));
        heap.push(eval_panel(spec, mid, worst.hi));
        panels_used += 2;
    }
}

/// Slow reference integrator: composite Simpson on three nested uniform
/// meshes with singular points excised by shrinking symmetric windows,
/// extrapolated to the zero-window limit. Test oracle only.
pub fn oracle_integrate<T: Real>(spec: &IntegrandSpec<'_, T>, levels: u32) -> Cplx<T> {
    assert!(levels >= 3, "need levels >= 3");
    let sums: Vec<Cplx<T>> = (levels..levels + 3)
        .map(|m| simpson_with_windows(spec, m))
        .collect();
    let re = aitken(sums[0].re, sums[1].re, sums[2].re);
    let im = aitken(sums[0].im, sums[1].im, sums[2].im);
    Cplx::new(re, im)
}

fn aitken<T: Real>(s0: T, s1: T, s2: T) -> T {
    let d1 = s1 - s0;
    let d2 = s2 - s1;
    let denom = d2 - d1;
    let scale = d1.abs().max(d2.abs());
    if denom.abs() <= T::of(1e-3) * scale || scale == T::zero() || d2.abs() >= d1.abs() {
        return s2;
    }
    s2 - d2 * d2 / denom
}

fn simpson_with_windows<T: Real>(spec: &IntegrandSpec<'_, T>, m: u32) -> Cplx<T> {
    let (a, b) = spec.interval;
    let radius = T::of(2f64.powi(-(m as i32)));

    let mut cuts: Vec<T> = vec![a, b];
    for &p in &spec.breakpoints {
        if p > a && p < b {
            cuts.push(p);
        }
    }
    cuts.sort_by(|p, q| p.partial_cmp(q).unwrap());
    cuts.dedup();

    // Remove the excision windows, splitting segments as needed.
    let mut segments: Vec<(T, T)> = cuts.windows(2).map(|w| (w[0], w[1])).collect();
    for &s in &spec.singular_points {
        let (wl, wr) = (s - radius, s + radius);
        let mut next: Vec<(T, T)> = Vec::new();
        for (lo, hi) in segments {
            if hi <= wl || lo >= wr {
                next.push((lo, hi));
            } else {
                if lo < wl {
                    next.push((lo, wl));
                }
                if hi > wr {
                    next.push((wr, hi));
                }
            }
        }
        segments = next;
    }

    let h_target = (b - a) / T::of(2f64.powi(m as i32));
    let mut acc = Cplx::new(T::zero(), T::zero());
    for (lo, hi) in segments {
        let len = hi - lo;
        if len <= T::zero() {
            continue;
        }
        let half_count = (len / (T::of(2.0) * h_target)).ceil().as_f64().max(1.0) as usize;
        let n = 2 * half_count;
        let h = len / T::of(n as f64);
        // Nudge segment-edge samples inward so jumps sitting exactly on a
        // boundary are read from the correct side.
        let nudge = h * T::of(1e-3);
        let sample = |i: usize| -> Cplx<T> {
            let y = if i == 0 {
                lo + nudge
            } else if i == n {
                hi - nudge
            } else {
                lo + h * T::of(i as f64)
            };
            spec.eval(y)
        };
        let mut sum = sample(0) + sample(n);
        for i in 1..n {
            let c = if i % 2 == 1 { T::of(4.0) } else { T::of(2.0) };
            sum = sum + sample(i) * c;
        }
        acc = acc + sum * (h / T::of(3.0));
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    fn constant_one(_: f64) -> Cplx<f64> {
        Cplx::new(1.0, 0.0)
    }
    fn zero_phase(_: f64) -> f64 {
        0.0
    }

    #[test]
    fn constant_integrand() {
        let amp = constant_one;
        let ph = zero_phase;
        let spec = IntegrandSpec::new(&amp, &ph, (0.0, 1.0));
        let r = integrate(&spec, 1e-10, 10_000).unwrap();
        assert!(r.converged);
        assert!((r.value.re - 1.0).abs() < 1e-10);
        assert!(r.value.im.abs() < 1e-10);
    }

    #[test]
    fn full_periods_vanish() {
        let amp = constant_one;
        let ph = |y: f64| 40.0 * y;
        let spec = IntegrandSpec {
            osc_scale: 40.0,
            ..IntegrandSpec::new(&amp, &ph, (0.0, 2.0 * std::f64::consts::PI))
        };
        let r = integrate(&spec, 1e-9, 100_000).unwrap();
        assert!(r.converged);
        assert!(r.value.norm() < 1e-9, "got {}", r.value);
    }

    #[test]
    fn inverse_sqrt_singularity() {
        // int_0^1 |y - 1/2|^{-1/2} dy = 4 (1/2)^{1/2} = 2 sqrt(2)
        let amp = |y: f64| Cplx::new((y - 0.5).abs().powf(-0.5), 0.0);
        let ph = zero_phase;
        let spec = IntegrandSpec {
            singular_points: vec![0.5],
            singular_bound: Some(SingularBound { e: 1.0, mu: 0.5 }),
            ..IntegrandSpec::new(&amp, &ph, (0.0, 1.0))
        };
        let r = integrate(&spec, 1e-8, 100_000).unwrap();
        let exact = 2.0 * 2f64.sqrt();
        assert!(r.converged);
        assert!((r.value.re - exact).abs() < 1e-7, "got {}", r.value.re);
    }

    #[test]
    fn oracle_matches_trivial_cases() {
        let amp = constant_one;
        let ph = zero_phase;
        let spec = IntegrandSpec::new(&amp, &ph, (0.0, 1.0));
        let v = oracle_integrate(&spec, 12);
        assert!((v.re - 1.0).abs() < 1e-10);

        let amp_y = |y: f64| Cplx::new(y, 0.0);
        let spec = IntegrandSpec::new(&amp_y, &ph, (0.0, 1.0));
        let v = oracle_integrate(&spec, 12);
        assert!((v.re - 0.5).abs() < 1e-10);
    }

    #[test]
    fn oracle_handles_singularity() {
        let amp = |y: f64| Cplx::new((y - 0.5).abs().powf(-0.5), 0.0);
        let ph = zero_phase;
        let spec = IntegrandSpec {
            singular_points: vec![0.5],
            singular_bound: Some(SingularBound { e: 1.0, mu: 0.5 }),
            ..IntegrandSpec::new(&amp, &ph, (0.0, 1.0))
        };
        let v = oracle_integrate(&spec, 17);
        let exact = 2.0 * 2f64.sqrt();
        assert!((v.re - exact).abs() < 1e-7, "oracle {} vs {}", v.re, exact);
    }

    #[test]
    fn oracle_agrees_with_adaptive_on_examples() {
        let tol = 1e-8;
        let cases: Vec<IntegrandSpec<'_, f64>> = Vec::new();
        drop(cases);
        // constant
        let amp = constant_one;
        let ph = zero_phase;
        let spec = IntegrandSpec::new(&amp, &ph, (0.0, 1.0));
        let a = integrate(&spec, tol, 100_000).unwrap().value;
        let o = oracle_integrate(&spec, 14);
        assert!((a - o).norm() < 10.0 * tol);
        // oscillatory
        let ph40 = |y: f64| 40.0 * y;
        let spec = IntegrandSpec {
            osc_scale: 40.0,
            ..IntegrandSpec::new(&amp, &ph40, (0.0, 2.0 * std::f64::consts::PI))
        };
        let a = integrate(&spec, tol, 100_000).unwrap().value;
        let o = oracle_integrate(&spec, 14);
        assert!((a - o).norm() < 10.0 * tol);
        // singular
        let amps = |y: f64| Cplx::new((y - 0.5).abs().powf(-0.5), 0.0);
        let spec = IntegrandSpec {
            singular_points: vec![0.5],
            singular_bound: Some(SingularBound { e: 1.0, mu: 0.5 }),
            ..IntegrandSpec::new(&amps, &ph, (0.0, 1.0))
        };
        let a = integrate(&spec, tol, 100_000).unwrap().value;
        let o = oracle_integrate(&spec, 17);
        assert!((a - o).norm() < 10.0 * tol, "{a} vs {o}");
    }

    #[test]
    fn linearity_and_additivity() {
        let tol = 1e-9;
        let f = |y: f64| Cplx::new(y * y, 0.3 * y);
        let g = |y: f64| Cplx::new((3.0 * y).sin(), 1.0);
        let ph = |y: f64| 5.0 * y;
        let (alpha, beta) = (1.7, -0.4);
        let combo = move |y: f64| f(y) * alpha + g(y) * beta;

        let sf = IntegrandSpec {
            osc_scale: 5.0,
            ..IntegrandSpec::new(&f, &ph, (0.0, 1.0))
        };
        let sg = IntegrandSpec {
            osc_scale: 5.0,
            ..IntegrandSpec::new(&g, &ph, (0.0, 1.0))
        };
        let sc = IntegrandSpec {
            osc_scale: 5.0,
            ..IntegrandSpec::new(&combo, &ph, (0.0, 1.0))
        };
        let vf = integrate(&sf, tol, 100_000).unwrap().value;
        let vg = integrate(&sg, tol, 100_000).unwrap().value;
        let vc = integrate(&sc, tol, 100_000).unwrap().value;
        assert!((vc - (vf * alpha + vg * beta)).norm() < 2.0 * tol);

        // interval additivity at an interior cut
        let sl = IntegrandSpec {
            osc_scale: 5.0,
            ..IntegrandSpec::new(&f, &ph, (0.0, 0.37))
        };
        let sr = IntegrandSpec {
            osc_scale: 5.0,
            ..IntegrandSpec::new(&f, &ph, (0.37, 1.0))
        };
        let vl = integrate(&sl, tol, 100_000).unwrap().value;
        let vr = integrate(&sr, tol, 100_000).unwrap().value;
        assert!((vf - (vl + vr)).norm() < 2.0 * tol);
    }

    #[test]
    fn budget_exhaustion_reports_partial() {
        let amp = |y: f64| Cplx::new((y - 0.5).abs().powf(-0.5), 0.0);
        let ph = zero_phase;
        let spec = IntegrandSpec {
            singular_points: vec![0.5],
            ..IntegrandSpec::new(&amp, &ph, (0.0, 1.0))
        };
        match integrate(&spec, 1e-13, 8) {
            Err(QuadError::BudgetExceeded { partial, .. }) => {
                assert!(!partial.converged);
                assert!(partial.value.re > 0.0);
            }
            other => panic!("expected budget exhaustion, got {other:?}"),
        }
    }

    #[test]
    fn doubling_oscillation_stays_convergent() {
        for lam in [20.0, 40.0, 80.0, 160.0] {
            let amp = |y: f64| Cplx::new(1.0 / (1.0 + y * y), 0.0);
            let ph = move |y: f64| lam * (y * y * y - 0.2 * y);
            let spec = IntegrandSpec {
                osc_scale: lam * 3.0,
                ..IntegrandSpec::new(&amp, &ph, (-1.0, 1.0))
            };
            let r = integrate(&spec, 1e-8, 200_000).unwrap();
            assert!(r.converged, "lambda {lam}");
            assert!(r.abs_error_estimate <= 1e-8);
        }
    }
}
