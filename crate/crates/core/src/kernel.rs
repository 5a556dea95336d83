//! Kernels of the three-argument form `K(xᵢ, xⱼ) = g(‖xᵢ‖²/p, ⟨xᵢ, xⱼ⟩/p, ‖xⱼ‖²/p)`.
//!
//! A [`KernelDescriptor`] wraps the scalar function `g` together with optional
//! analytic first and second partial derivatives in the middle argument. Those
//! derivatives are what the linearization needs; when they are absent the
//! descriptor falls back to central finite differences.
//!
//! Built-in kernels: [`make_linear_kernel`], [`make_polynomial_kernel`],
//! [`make_rbf_kernel`] and the ReLU neural tangent kernel [`make_ntk_kernel`].

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ntk::ntk_recursion;

/// Scalar function of `(z₁, z₂, z₃)`.
pub type ScalarFn = Arc<dyn Fn(f64, f64, f64) -> f64 + Send + Sync>;

/// Step for the central first difference in `z₂`, relative to `max(1, τ)`.
pub const FIRST_DIFF_STEP: f64 = 1e-5;
/// Step for the three-point second difference in `z₂`, relative to `max(1, τ)`.
pub const SECOND_DIFF_STEP: f64 = 1e-3;

#[derive(Clone)]
pub struct KernelDescriptor {
    name: String,
    g: ScalarFn,
    d_g_dz2: Option<ScalarFn>,
    d2_g_dz2: Option<ScalarFn>,
    requires_positive_norms: bool,
    spec: Option<KernelSpec>,
}

impl fmt::Debug for KernelDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("KernelDescriptor")
            .field("name", &self.name)
            .field("analytic_derivatives", &self.has_analytic_derivatives())
            .field("requires_positive_norms", &self.requires_positive_norms)
            .finish()
    }
}

impl KernelDescriptor {
    /// A user-defined kernel. `g` must be symmetric in its first and third argument.
    pub fn new(name: impl Into<String>, g: impl Fn(f64, f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            name: name.into(),
            g: Arc::new(g),
            d_g_dz2: None,
            d2_g_dz2: None,
            requires_positive_norms: false,
            spec: None,
        }
    }

    pub fn with_derivatives(
        mut self,
        d_g_dz2: impl Fn(f64, f64, f64) -> f64 + Send + Sync + 'static,
        d2_g_dz2: impl Fn(f64, f64, f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        self.d_g_dz2 = Some(Arc::new(d_g_dz2));
        self.d2_g_dz2 = Some(Arc::new(d2_g_dz2));
        self
    }

    /// Marks the kernel as undefined for zero-norm inputs (`z₁ ≤ 0` or `z₃ ≤ 0`).
    pub fn requiring_positive_norms(mut self) -> Self {
        self.requires_positive_norms = true;
        self
    }

    fn with_spec(mut self, spec: KernelSpec) -> Self {
        self.spec = Some(spec);
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// The serializable spec this kernel was built from, if it is a built-in.
    pub fn spec(&self) -> Option<&KernelSpec> {
        self.spec.as_ref()
    }

    pub fn requires_positive_norms(&self) -> bool {
        self.requires_positive_norms
    }

    pub fn has_analytic_derivatives(&self) -> bool {
        self.d_g_dz2.is_some() && self.d2_g_dz2.is_some()
    }

    /// Unchecked evaluation of `g`. Hot loops use this after validating inputs once.
    #[inline]
    pub fn eval(&self, z1: f64, z2: f64, z3: f64) -> f64 {
        (self.g)(z1, z2, z3)
    }

    pub fn try_eval(&self, z1: f64, z2: f64, z3: f64) -> Result<f64> {
        if self.requires_positive_norms && (z1 <= 0.0 || z3 <= 0.0) {
            return Err(Error::invalid(
                "z1/z3",
                format!("kernel `{}` needs positive norms, got z1={z1}, z3={z3}", self.name),
            ));
        }
        let v = self.eval(z1, z2, z3);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::NonFinite("kernel evaluation"))
        }
    }

    pub fn analytic_d_dz2(&self, z1: f64, z2: f64, z3: f64) -> Option<f64> {
        self.d_g_dz2.as_ref().map(|f| f(z1, z2, z3))
    }

    pub fn analytic_d2_dz2(&self, z1: f64, z2: f64, z3: f64) -> Option<f64> {
        self.d2_g_dz2.as_ref().map(|f| f(z1, z2, z3))
    }

    /// Central difference `∂g/∂z₂` with step `1e-5·max(1, z₁, z₃)`.
    pub fn fd_d_dz2(&self, z1: f64, z2: f64, z3: f64) -> f64 {
        let h = FIRST_DIFF_STEP * z1.max(z3).max(1.0);
        (self.eval(z1, z2 + h, z3) - self.eval(z1, z2 - h, z3)) / (2.0 * h)
    }

    /// Three-point `∂²g/∂z₂²` with step `1e-3·max(1, z₁, z₃)`.
    pub fn fd_d2_dz2(&self, z1: f64, z2: f64, z3: f64) -> f64 {
        let h = SECOND_DIFF_STEP * z1.max(z3).max(1.0);
        (self.eval(z1, z2 + h, z3) - 2.0 * self.eval(z1, z2, z3) + self.eval(z1, z2 - h, z3)) / (h * h)
    }

    /// Analytic first derivative when available, finite difference otherwise.
    pub fn d_dz2(&self, z1: f64, z2: f64, z3: f64) -> f64 {
        self.analytic_d_dz2(z1, z2, z3)
            .unwrap_or_else(|| self.fd_d_dz2(z1, z2, z3))
    }

    pub fn d2_dz2(&self, z1: f64, z2: f64, z3: f64) -> f64 {
        self.analytic_d2_dz2(z1, z2, z3)
            .unwrap_or_else(|| self.fd_d2_dz2(z1, z2, z3))
    }
}

/// `g(z₁, z₂, z₃) = z₂`.
pub fn make_linear_kernel() -> KernelDescriptor {
    KernelDescriptor::new("linear", |_, z2, _| z2)
        .with_derivatives(|_, _, _| 1.0, |_, _, _| 0.0)
        .with_spec(KernelSpec::Linear)
}

/// `g = (z₂ + c)^d`.
pub fn make_polynomial_kernel(c: f64, d: u32) -> Result<KernelDescriptor> {
    if !(c >= 0.0 && c.is_finite()) {
        return Err(Error::invalid("c", format!("must be finite and >= 0, got {c}")));
    }
    if d == 0 {
        return Err(Error::invalid("d", "degree must be at least 1"));
    }
    let di = d as i32;
    let df = d as f64;
    Ok(
        KernelDescriptor::new(format!("polynomial(c={c},d={d})"), move |_, z2, _| (z2 + c).powi(di))
            .with_derivatives(
                move |_, z2, _| df * (z2 + c).powi(di - 1),
                move |_, z2, _| {
                    if di < 2 {
                        0.0
                    } else {
                        df * (df - 1.0) * (z2 + c).powi(di - 2)
                    }
                },
            )
            .with_spec(KernelSpec::Polynomial { c, d }),
    )
}

/// Gaussian kernel on the normalized squared distance `z₁ − 2z₂ + z₃`.
pub fn make_rbf_kernel(bandwidth: f64) -> Result<KernelDescriptor> {
    if !(bandwidth > 0.0 && bandwidth.is_finite()) {
        return Err(Error::invalid("bandwidth", format!("must be > 0, got {bandwidth}")));
    }
    let s2 = bandwidth * bandwidth;
    // (z1 + z3) first so that swapping z1/z3 is bitwise symmetric.
    let g = move |z1: f64, z2: f64, z3: f64| (-((z1 + z3) - 2.0 * z2) / (2.0 * s2)).exp();
    Ok(KernelDescriptor::new(format!("rbf(bandwidth={bandwidth})"), g)
        .with_derivatives(move |a, b, c| g(a, b, c) / s2, move |a, b, c| g(a, b, c) / (s2 * s2))
        .with_spec(KernelSpec::Rbf { bandwidth }))
}

/// ReLU NTK after `depth` recursion steps, divided by `p`.
///
/// Since the recursion is positively homogeneous in the pair scale, evaluating it
/// directly on the normalized arguments `(z₁, z₂, z₃)` yields `K_L / p`.
pub fn make_ntk_kernel(depth: u32) -> Result<KernelDescriptor> {
    if depth == 0 {
        return Err(Error::invalid("depth", "NTK depth must be at least 1"));
    }
    Ok(
        KernelDescriptor::new(format!("ntk(depth={depth})"), move |z1, z2, z3| {
            if z1 <= 0.0 || z3 <= 0.0 {
                return f64::NAN;
            }
            ntk_recursion(z1, z2, z3, depth)
        })
        .requiring_positive_norms()
        .with_spec(KernelSpec::Ntk { depth }),
    )
}

/// Config form of a built-in kernel: `{type = "...", params = {...}}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", content = "params", rename_all = "lowercase")]
pub enum KernelSpec {
    Linear,
    Polynomial { c: f64, d: u32 },
    Rbf { bandwidth: f64 },
    Ntk { depth: u32 },
}

impl KernelSpec {
    pub fn build(&self) -> Result<KernelDescriptor> {
        match *self {
            KernelSpec::Linear => Ok(make_linear_kernel()),
            KernelSpec::Polynomial { c, d } => make_polynomial_kernel(c, d),
            KernelSpec::Rbf { bandwidth } => make_rbf_kernel(bandwidth),
            KernelSpec::Ntk { depth } => make_ntk_kernel(depth),
        }
    }

    /// Short label used in CSV output.
    pub fn label(&self) -> String {
        match *self {
            KernelSpec::Linear => "linear".into(),
            KernelSpec::Polynomial { c, d } => format!("poly_c{c}_d{d}"),
            KernelSpec::Rbf { bandwidth } => format!("rbf_h{bandwidth}"),
            KernelSpec::Ntk { depth } => format!("ntk_l{depth}"),
        }
    }
}
