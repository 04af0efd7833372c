//! Blow-up functions `𝒢` that replace the kinetic symbol `x²` near the cutoff.
//!
//! `𝒢(x) = x²` for `|x| ≤ ½` and `|x| ≥ 1`. On `(½, a)` it is a Hermite
//! bridge polynomial, and on `[a, 1)` it is the tail `C(1 − x)^{−p}`. The
//! bridge matches `msmooth` derivatives of `x²` at `½` and of the tail at
//! `a`, so `𝒢 ∈ C^{msmooth}[0, 1)`, while `(1 − x)^m 𝒢(x) → ∞` needs `p > m`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::num::{abs, powf};

/// Number of samples used to check `𝒢(x) ≥ x²` on `(½, 1)`.
pub const DOMINATION_SAMPLES: usize = 10_000;
const DOMINATION_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BlowupSpec {
    /// Target regularity class; requires `p > m`.
    pub m: u32,
    /// Singularity order of the tail.
    pub p: f64,
    /// Tail constant.
    pub c: f64,
    /// Junction between bridge and tail, in `(½, 1)`.
    pub a: f64,
    /// Number of derivatives matched by the bridge (`≥ m`).
    pub msmooth: u32,
}

impl BlowupSpec {
    pub fn new(m: u32, p: f64, c: f64, a: f64) -> Self {
        BlowupSpec {
            m,
            p,
            c,
            a,
            msmooth: m,
        }
    }

    pub fn with_msmooth(mut self, msmooth: u32) -> Self {
        self.msmooth = msmooth;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.p.is_finite() && self.p > 0.0) {
            return Err(Error::IllPosedSpec(format!("p = {} must be positive", self.p)));
        }
        if !(self.p > self.m as f64) {
            return Err(Error::IllPosedSpec(format!(
                "p = {} must exceed m = {}",
                self.p, self.m
            )));
        }
        if !(self.c.is_finite() && self.c > 0.0) {
            return Err(Error::IllPosedSpec(format!("C = {} must be positive", self.c)));
        }
        if !(self.a > 0.5 && self.a < 1.0) {
            return Err(Error::IllPosedSpec(format!("a = {} must lie in (1/2, 1)", self.a)));
        }
        if self.msmooth < self.m {
            return Err(Error::IllPosedSpec(format!(
                "msmooth = {} is below m = {}",
                self.msmooth, self.m
            )));
        }
        if self.msmooth > 12 {
            return Err(Error::IllPosedSpec("msmooth above 12 is not supported".into()));
        }
        Ok(())
    }

    /// Smallest `C ∈ {1, 2, 4, …}` for which the function dominates `x²`.
    pub fn with_default_c(m: u32, p: f64, a: f64, msmooth: u32) -> Result<BlowupSpec> {
        let mut spec = BlowupSpec::new(m, p, 1.0, a).with_msmooth(msmooth);
        spec.validate()?;
        let mut last = None;
        for _ in 0..12 {
            match BlowupFunction::build(spec) {
                Ok(_) => return Ok(spec),
                Err(e @ Error::DominationViolated { .. }) => last = Some(e),
                Err(e) => return Err(e),
            }
            spec.c *= 2.0;
        }
        Err(last.expect("loop ran"))
    }
}

/// Checks performed while building a [`BlowupFunction`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BlowupValidation {
    pub samples: usize,
    /// `min (𝒢(x) − x²)` over the samples.
    pub min_margin: f64,
    /// Largest mismatch of matched derivatives at `½` and `a`, relative to the
    /// largest matched derivative (in the bridge's local variable).
    pub junction_mismatch: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BlowupFunction {
    spec: BlowupSpec,
    /// Monomial coefficients of the bridge in `u = (x − ½)/(a − ½)`.
    bridge: Vec<f64>,
    /// Split Newton form `A(u) + u^{n+1} B(u − 1)`, used for evaluation:
    /// well conditioned at both ends, unlike the monomial form.
    near_half: Vec<f64>,
    near_a: Vec<f64>,
    validation: BlowupValidation,
}

impl BlowupFunction {
    pub fn build(spec: BlowupSpec) -> Result<Self> {
        spec.validate()?;
        let n = spec.msmooth as usize;
        let h = spec.a - 0.5;
        // Derivatives with respect to u at u = 0 (x = ½) and u = 1 (x = a).
        let left: Vec<f64> = (0..=n).map(|j| quadratic_derivative(0.5, j) * powi(h, j)).collect();
        let right: Vec<f64> = (0..=n)
            .map(|j| tail_derivative(&spec, spec.a, j) * powi(h, j))
            .collect();
        let q = hermite_divided_differences(&left, &right);
        let bridge = newton_to_monomial(&q, n + 1);
        let mut f = BlowupFunction {
            spec,
            bridge,
            near_half: q[..=n].to_vec(),
            near_a: q[n + 1..].to_vec(),
            validation: BlowupValidation {
                samples: 0,
                min_margin: 0.0,
                junction_mismatch: 0.0,
            },
        };

        // compared in the local variable, relative to the largest matched value
        let scale = left.iter().chain(&right).fold(1.0f64, |m, v| m.max(abs(*v)));
        let mut mismatch: f64 = 0.0;
        for j in 0..=n {
            let at_half = f.split_derivative(0.0, j);
            let at_a = f.split_derivative(1.0, j);
            mismatch = mismatch.max(abs(at_half - left[j]) / scale);
            mismatch = mismatch.max(abs(at_a - right[j]) / scale);
        }

        let mut min_margin = f64::INFINITY;
        for i in 0..DOMINATION_SAMPLES {
            let x = 0.5 + 0.5 * (i as f64 + 0.5) / DOMINATION_SAMPLES as f64;
            let g = f.eval_inner(x);
            let margin = g - x * x;
            if margin < -DOMINATION_TOL * x * x {
                return Err(Error::DominationViolated { x, deficit: -margin });
            }
            min_margin = min_margin.min(margin);
        }
        f.validation = BlowupValidation {
            samples: DOMINATION_SAMPLES,
            min_margin,
            junction_mismatch: mismatch,
        };
        Ok(f)
    }

    pub fn spec(&self) -> &BlowupSpec {
        &self.spec
    }

    pub fn validation(&self) -> &BlowupValidation {
        &self.validation
    }

    /// Bridge coefficients in the local variable `u = (x − ½)/(a − ½)`.
    pub fn bridge_coefficients(&self) -> &[f64] {
        &self.bridge
    }

    /// `𝒢(x)`; `|x| = 1` is the singular point.
    pub fn eval(&self, x: f64) -> Result<f64> {
        let ax = abs(x);
        if ax == 1.0 {
            return Err(Error::SingularArgument);
        }
        if ax > 1.0 {
            return Ok(x * x);
        }
        Ok(self.eval_inner(ax))
    }

    /// `𝒢^{(order)}(x)` from the active piece; pieces agree at the junctions.
    pub fn eval_derivative(&self, x: f64, order: usize) -> Result<f64> {
        if order > self.spec.msmooth as usize {
            return Err(Error::OrderTooHigh {
                order,
                max: self.spec.msmooth as usize,
            });
        }
        let ax = abs(x);
        if ax == 1.0 {
            return Err(Error::SingularArgument);
        }
        let sign = if x < 0.0 && order % 2 == 1 { -1.0 } else { 1.0 };
        let d = if ax <= 0.5 || ax > 1.0 {
            quadratic_derivative(ax, order)
        } else if ax < self.spec.a {
            self.bridge_derivative(ax, order)
        } else {
            tail_derivative(&self.spec, ax, order)
        };
        Ok(sign * d)
    }

    /// `𝒢` on `[0, 1)`.
    fn eval_inner(&self, x: f64) -> f64 {
        if x <= 0.5 {
            x * x
        } else if x < self.spec.a {
            self.bridge_derivative(x, 0)
        } else {
            self.spec.c * powf(1.0 - x, -self.spec.p)
        }
    }

    fn bridge_derivative(&self, x: f64, order: usize) -> f64 {
        let h = self.spec.a - 0.5;
        let u = (x - 0.5) / h;
        self.split_derivative(u, order) / powi(h, order)
    }

    /// `d^r/du^r [A(u) + u^{n+1} B(u − 1)]` by the Leibniz rule.
    fn split_derivative(&self, u: f64, order: usize) -> f64 {
        let e = self.near_half.len();
        let mut acc = poly_derivative(&self.near_half, u, order);
        let mut binom = 1.0;
        for s in 0..=order {
            if s > 0 {
                binom = binom * (order - s + 1) as f64 / s as f64;
            }
            if s > e {
                break;
            }
            let falling: f64 = ((e - s + 1)..=e).map(|k| k as f64).product();
            acc += binom * falling * powi(u, e - s) * poly_derivative(&self.near_a, u - 1.0, order - s);
        }
        acc
    }
}

fn powi(x: f64, n: usize) -> f64 {
    (0..n).fold(1.0, |acc, _| acc * x)
}

fn quadratic_derivative(x: f64, order: usize) -> f64 {
    match order {
        0 => x * x,
        1 => 2.0 * x,
        2 => 2.0,
        _ => 0.0,
    }
}

/// `d^j/dx^j C(1 − x)^{−p} = C p(p+1)…(p+j−1) (1 − x)^{−p−j}`.
fn tail_derivative(spec: &BlowupSpec, x: f64, order: usize) -> f64 {
    let rising: f64 = (0..order).map(|i| spec.p + i as f64).product();
    spec.c * rising * powf(1.0 - x, -spec.p - order as f64)
}

/// Confluent divided differences for the Hermite interpolant on the nodes
/// `u = 0` (multiplicity n) and `u = 1` (multiplicity n), matching
/// `left[j] = P^{(j)}(0)` and `right[j] = P^{(j)}(1)`.
fn hermite_divided_differences(left: &[f64], right: &[f64]) -> Vec<f64> {
    let n = left.len();
    let total = 2 * n;
    let nodes: Vec<f64> = (0..total).map(|i| if i < n { 0.0 } else { 1.0 }).collect();
    let data = |i: usize, j: usize| -> f64 {
        let v = if i < n { left[j] } else { right[j] };
        v / factorial(j)
    };
    let mut q: Vec<f64> = (0..total).map(|i| data(i, 0)).collect();
    for level in 1..total {
        for i in (level..total).rev() {
            if nodes[i] == nodes[i - level] {
                q[i] = data(i, level);
            } else {
                q[i] = (q[i] - q[i - 1]) / (nodes[i] - nodes[i - level]);
            }
        }
    }
    q
}

/// Newton form on `n` zeros followed by `n` ones, expanded into monomials.
fn newton_to_monomial(q: &[f64], n: usize) -> Vec<f64> {
    let total = q.len();
    let node = |j: usize| if j < n { 0.0 } else { 1.0 };
    let mut poly = vec![q[total - 1]];
    for j in (0..total - 1).rev() {
        let mut next = vec![0.0; poly.len() + 1];
        for (i, c) in poly.iter().enumerate() {
            next[i + 1] += c;
            next[i] -= c * node(j);
        }
        next[0] += q[j];
        poly = next;
    }
    poly
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|i| i as f64).product()
}

fn poly_derivative(coeffs: &[f64], u: f64, order: usize) -> f64 {
    let mut acc = 0.0;
    for (i, c) in coeffs.iter().enumerate().skip(order).rev() {
        let falling: f64 = ((i - order + 1)..=i).map(|k| k as f64).product();
        acc = acc * u + c * falling;
    }
    acc
}
