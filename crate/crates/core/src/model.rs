//! Smagorinsky eddy-viscosity term and the dissipation functionals
//! `eps_0 = nu ||grad u||^2 / |Omega|` and
//! `eps_delta = (C_S delta)^2 ||grad u||_3^3 / |Omega|`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::spectral::{
    dealias_in_place, gradient, gradient_hat, inner_product, l2_norm_sq, l3_norm_cubed,
    tensor_divergence_hat, tensor_index, Grid, TensorField, VectorField,
};
use crate::{Error, Result};

/// Which tensor the eddy viscosity acts on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    /// `(C_S delta)^2 |grad u| grad u`
    Gradient,
    /// `2 (C_S delta)^2 |S| S` with `S = (grad u + grad u^T) / 2`
    Deformation,
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gradient" => Ok(Variant::Gradient),
            "deformation" => Ok(Variant::Deformation),
            other => Err(Error::config(
                "model.variant",
                format!("expected `gradient` or `deformation`, got `{other}`"),
            )),
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Variant::Gradient => "gradient",
            Variant::Deformation => "deformation",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModelParams {
    /// Kinematic viscosity.
    pub nu: f64,
    /// Smagorinsky constant.
    pub cs: f64,
    /// Model length scale.
    pub delta: f64,
    pub variant: Variant,
}

impl ModelParams {
    pub fn new(nu: f64, cs: f64, delta: f64, variant: Variant) -> Result<Self> {
        if !(nu > 0.0 && nu.is_finite()) {
            return Err(Error::config("fluid.nu", format!("must be > 0, got {nu}")));
        }
        if !(cs >= 0.0 && cs.is_finite()) {
            return Err(Error::config("model.cs", format!("must be >= 0, got {cs}")));
        }
        if !(delta >= 0.0 && delta.is_finite()) {
            return Err(Error::config(
                "model.delta",
                format!("must be >= 0, got {delta}"),
            ));
        }
        Ok(Self {
            nu,
            cs,
            delta,
            variant,
        })
    }

    /// `(C_S delta)^2`.
    pub fn coefficient(&self) -> f64 {
        (self.cs * self.delta).powi(2)
    }

    pub fn with_delta(self, delta: f64) -> Self {
        Self { delta, ..self }
    }
}

/// Instantaneous dissipation rates, volume-averaged.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Dissipation {
    pub eps0: f64,
    pub epsdelta: f64,
}

impl Dissipation {
    /// `eps_S = eps_0 + eps_delta`.
    pub fn eps_s(&self) -> f64 {
        self.eps0 + self.epsdelta
    }
}

fn symmetric_part(g: &[f64; 9]) -> [f64; 9] {
    std::array::from_fn(|n| {
        let (i, j) = (n / 3, n % 3);
        0.5 * (g[tensor_index(i, j)] + g[tensor_index(j, i)])
    })
}

fn frobenius(t: &[f64; 9]) -> f64 {
    t.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Tensor the model acts on at one node, with the prefactor folded in:
/// `(G, 1)` for the gradient variant, `(S, 2)` for the deformation variant.
fn model_tensor(g: [f64; 9], variant: Variant) -> ([f64; 9], f64) {
    match variant {
        Variant::Gradient => (g, 1.0),
        Variant::Deformation => (symmetric_part(&g), 2.0),
    }
}

/// Real-space eddy-viscosity flux assembled from the velocity gradient.
pub fn smagorinsky_flux(grad: &TensorField, p: &ModelParams) -> TensorField {
    let c = p.coefficient();
    let mut out = TensorField::zeros(grad.grid());
    if c == 0.0 {
        return out;
    }
    for idx in 0..grad.grid().len() {
        let (t, pre) = model_tensor(grad.at(idx), p.variant);
        let s = pre * c * frobenius(&t);
        for (n, v) in t.iter().enumerate() {
            out.component_mut(n)[idx] = s * v;
        }
    }
    out
}

/// `sum over nodes of pre * |T|^3 * dV`, the model's dissipation integral
/// before the `(C_S delta)^2` factor.
fn model_cubic_integral(grad: &TensorField, variant: Variant) -> f64 {
    match variant {
        Variant::Gradient => l3_norm_cubed(grad),
        Variant::Deformation => {
            let sum: f64 = (0..grad.grid().len())
                .map(|idx| frobenius(&symmetric_part(&grad.at(idx))).powi(3))
                .sum();
            2.0 * sum * grad.grid().cell_volume()
        }
    }
}

/// `div((C_S delta)^2 |G| G)` (or the deformation form), computed
/// pseudo-spectrally with the 2/3 rule on both the velocity and the flux.
pub fn smag_term(u: &VectorField, p: &ModelParams) -> VectorField {
    let grid = u.grid();
    if p.coefficient() == 0.0 {
        return VectorField::zeros(grid);
    }
    let mut u_hat = u.to_spectral();
    dealias_in_place(&mut u_hat);
    let grad = gradient_hat(&u_hat).to_real();
    let mut flux_hat = smagorinsky_flux(&grad, p).to_spectral();
    dealias_in_place(&mut flux_hat);
    let mut div = tensor_divergence_hat(&flux_hat);
    div.zero_mean();
    div.to_real()
}

/// `(eps_0, eps_delta)` from an already computed velocity gradient.
pub fn dissipation_from_gradient(grad: &TensorField, p: &ModelParams) -> Dissipation {
    let grid: &Grid = grad.grid();
    let vol = grid.volume();
    let c = p.coefficient();
    let epsdelta = if c == 0.0 {
        0.0
    } else {
        c * model_cubic_integral(grad, p.variant) / vol
    };
    Dissipation {
        eps0: p.nu * l2_norm_sq(grad) / vol,
        epsdelta,
    }
}

pub fn dissipation_pair(u: &VectorField, p: &ModelParams) -> Dissipation {
    dissipation_from_gradient(&gradient(u), p)
}

/// `(smag_term(u), u) / |Omega| + eps_delta`; vanishes when the discrete
/// operator reproduces the continuous energy identity.
pub fn dissipativity_check(u: &VectorField, p: &ModelParams) -> Result<f64> {
    let work = inner_product(&smag_term(u, p), u)? / u.grid().volume();
    Ok(work + dissipation_pair(u, p).epsdelta)
}
