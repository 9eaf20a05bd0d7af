//! Definitions of the two nonlinear diffusion–reaction problems.
//!
//! Both share the residual
//! `⟨v, R(m,u)⟩ = ∫ κ₀ κ(m) ∇u·∇v + α u³ v − f v dx − ∫_Γ g v dS`
//! and differ in the diffusivity map `κ`, the source, the flux and the
//! Dirichlet boundary.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::mesh::{BoundaryTag, Point};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProblemId {
    /// Unit square, `κ = e^m`, source `f`, Dirichlet on the bottom edge.
    P1,
    /// Voided square, `κ = m`, flux `g = 0.1` on the outer boundary,
    /// Dirichlet on the void boundaries.
    P2,
}

impl ProblemId {
    pub fn from_number(n: u32) -> Option<Self> {
        match n {
            1 => Some(ProblemId::P1),
            2 => Some(ProblemId::P2),
            _ => None,
        }
    }

    pub fn number(self) -> u32 {
        match self {
            ProblemId::P1 => 1,
            ProblemId::P2 => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Diffusivity {
    /// `κ(m) = e^m`
    Exp,
    /// `κ(m) = m`
    Identity,
}

impl Diffusivity {
    #[inline]
    pub fn eval(self, m: f64) -> f64 {
        match self {
            Diffusivity::Exp => m.exp(),
            Diffusivity::Identity => m,
        }
    }
}

pub type ScalarFn = Arc<dyn Fn(Point) -> f64 + Send + Sync>;
/// Flux density as a function of position and outward unit normal.
pub type FluxFn = Arc<dyn Fn(Point, Point) -> f64 + Send + Sync>;

#[derive(Clone)]
pub enum Source {
    Zero,
    /// `f(x) = e^{-4(1-x₁)²} sin(4πx₂)²`
    Gaussian,
    Custom(ScalarFn),
}

impl Source {
    pub fn eval(&self, x: Point) -> f64 {
        match self {
            Source::Zero => 0.0,
            Source::Gaussian => (-4.0 * (1.0 - x[0]).powi(2)).exp() * (4.0 * PI * x[1]).sin().powi(2),
            Source::Custom(f) => f(x),
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Source::Zero)
    }
}

impl fmt::Debug for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Source::Zero => f.write_str("Zero"),
            Source::Gaussian => f.write_str("Gaussian"),
            Source::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

#[derive(Clone)]
pub enum FluxDensity {
    Constant(f64),
    Custom(FluxFn),
}

impl FluxDensity {
    pub fn eval(&self, x: Point, normal: Point) -> f64 {
        match self {
            FluxDensity::Constant(g) => *g,
            FluxDensity::Custom(f) => f(x, normal),
        }
    }
}

impl fmt::Debug for FluxDensity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FluxDensity::Constant(g) => write!(f, "Constant({g})"),
            FluxDensity::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

/// Prescribed boundary flux `κ ∇u · n = g` on the facets carrying `tags`.
#[derive(Debug, Clone)]
pub struct Flux {
    pub tags: Vec<BoundaryTag>,
    pub density: FluxDensity,
}

#[derive(Debug, Clone)]
pub struct ProblemDef {
    pub id: ProblemId,
    pub diffusivity: Diffusivity,
    pub kappa0: f64,
    pub alpha: f64,
    pub source: Source,
    pub flux: Option<Flux>,
    pub dirichlet_tags: Vec<BoundaryTag>,
    /// Pointwise lower bound on `m` for problems with `κ = m`.
    pub m_lower: Option<f64>,
}

/// Flux value on the outer boundary of the voided square.
pub const P2_FLUX: f64 = 0.1;
/// Default lower bound on the diffusivity.
pub const M_LOWER: f64 = 0.001;

impl ProblemDef {
    pub fn p1() -> Self {
        ProblemDef {
            id: ProblemId::P1,
            diffusivity: Diffusivity::Exp,
            kappa0: 1.0,
            alpha: 1.0,
            source: Source::Gaussian,
            flux: None,
            dirichlet_tags: vec![BoundaryTag::GammaBottom],
            m_lower: None,
        }
    }

    pub fn p2() -> Self {
        ProblemDef {
            id: ProblemId::P2,
            diffusivity: Diffusivity::Identity,
            kappa0: 1.0,
            alpha: 1.0,
            source: Source::Zero,
            flux: Some(Flux {
                tags: vec![BoundaryTag::GammaOut],
                density: FluxDensity::Constant(P2_FLUX),
            }),
            dirichlet_tags: vec![BoundaryTag::GammaIn],
            m_lower: Some(M_LOWER),
        }
    }

    pub fn for_id(id: ProblemId) -> Self {
        match id {
            ProblemId::P1 => Self::p1(),
            ProblemId::P2 => Self::p2(),
        }
    }

    /// First problem with `m ≡ 0` in mind and data chosen so that
    /// [`manufactured_exact`] solves it: source `f = -Δu* + u*³` and flux
    /// `g = ∇u*·n` on the non-Dirichlet boundary.
    pub fn p1_manufactured() -> Self {
        let (a, b) = (0.5 * PI, PI);
        ProblemDef {
            source: Source::Custom(Arc::new(move |x| {
                let u = manufactured_exact(x);
                (a * a + b * b) * u + u * u * u
            })),
            flux: Some(Flux {
                tags: vec![BoundaryTag::GammaOther],
                density: FluxDensity::Custom(Arc::new(move |x, n| {
                    let gx = a * (a * x[0]).cos() * (b * x[1]).sin();
                    let gy = b * (a * x[0]).sin() * (b * x[1]).cos();
                    gx * n[0] + gy * n[1]
                })),
            }),
            ..Self::p1()
        }
    }

    /// Same problem with a different reaction coefficient (`α = 0` is linear).
    pub fn with_alpha(mut self, alpha: f64) -> Self {
        self.alpha = alpha;
        self
    }

    #[inline]
    pub fn kappa(&self, m: f64) -> f64 {
        self.kappa0 * self.diffusivity.eval(m)
    }
}

/// `u*(x) = sin(πx₁/2) sin(πx₂)`, exact solution of [`ProblemDef::p1_manufactured`] at `m ≡ 0`.
pub fn manufactured_exact(x: Point) -> f64 {
    (0.5 * PI * x[0]).sin() * (PI * x[1]).sin()
}
