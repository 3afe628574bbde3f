//! Fourth-order synchronous-generator model with PMU terminal measurements.
//!
//! The machine is written in the local d-q frame with state
//! `x = (δ, ω, e'_q, e'_d)`, input `u = (T_m, E_fd, i_R, i_I)` and PMU
//! output `y = (e_R, e_I)`. The dynamics are collected into the form
//! `ẋ = A x + f(x,u) + B_u u`, `y = h(x,u) + D_u u` where `A`, `B_u`,
//! `D_u` and the α/β constants are built from the physical parameters.

use nalgebra::{Matrix2x4, Matrix4, Vector2, Vector4};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("parameter `{0}` must be positive, got {1}")]
    NonPositiveParam(&'static str, f64),
}

/// Physical machine parameters.
///
/// All reactances are in per-unit on the machine base `s_n`; time constants
/// in seconds; `omega0` in rad/s; `s_b` and `s_n` in MVA.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeneratorParams {
    /// Rated angular frequency (rad/s).
    pub omega0: f64,
    /// Inertia constant (s).
    pub h: f64,
    /// Damping factor (unitless).
    pub k_d: f64,
    /// d-axis open-circuit transient time constant (s).
    pub td0p: f64,
    /// q-axis open-circuit transient time constant (s).
    pub tq0p: f64,
    /// d-axis synchronous reactance (p.u.).
    pub xd: f64,
    /// q-axis synchronous reactance (p.u.).
    pub xq: f64,
    /// d-axis transient reactance (p.u.).
    pub xdp: f64,
    /// q-axis transient reactance (p.u.).
    pub xqp: f64,
    /// System base power (MVA).
    pub s_b: f64,
    /// Generator base power (MVA).
    pub s_n: f64,
}

impl GeneratorParams {
    pub fn validate(&self) -> Result<(), ModelError> {
        let positives = [
            ("omega0", self.omega0),
            ("h", self.h),
            ("td0p", self.td0p),
            ("tq0p", self.tq0p),
            ("s_b", self.s_b),
            ("s_n", self.s_n),
        ];
        for (name, v) in positives {
            if !(v > 0.0) {
                return Err(ModelError::NonPositiveParam(name, v));
            }
        }
        Ok(())
    }

    /// System-to-machine base ratio `S_B / S_N`.
    pub fn base_ratio(&self) -> f64 {
        self.s_b / self.s_n
    }
}

/// Constants α₁..α₁₀ and β₁, β₂ derived from the machine parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedConstants {
    pub alpha1: f64,
    pub alpha2: f64,
    pub alpha3: f64,
    pub alpha4: f64,
    pub alpha5: f64,
    pub alpha6: f64,
    pub alpha7: f64,
    pub alpha8: f64,
    pub alpha9: f64,
    pub alpha10: f64,
    pub beta1: f64,
    pub beta2: f64,
}

/// Computes the α/β constants from the physical parameters.
pub fn derive_constants(p: &GeneratorParams) -> Result<DerivedConstants, ModelError> {
    p.validate()?;
    let k = p.base_ratio();
    let a2 = p.omega0 / (2.0 * p.h);
    Ok(DerivedConstants {
        alpha1: p.omega0,
        alpha2: a2,
        alpha3: a2 * k,
        alpha4: a2 * k * k * (p.xqp - p.xdp),
        alpha5: p.k_d / (2.0 * p.h),
        alpha6: p.k_d / (2.0 * p.h) * p.omega0,
        alpha7: 1.0 / p.td0p,
        alpha8: k * (p.xd - p.xdp) / p.td0p,
        alpha9: 1.0 / p.tq0p,
        alpha10: k * (p.xq - p.xqp) / p.tq0p,
        beta1: 0.5 * k * (p.xqp - p.xdp),
        beta2: 0.5 * k * (p.xqp + p.xdp),
    })
}

/// Dynamic state `x = (δ, ω, e'_q, e'_d)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct State {
    /// Rotor angle δ (rad).
    pub delta: f64,
    /// Rotor speed ω (rad/s).
    pub omega: f64,
    /// q-axis transient voltage e'_q (p.u.).
    pub eq_p: f64,
    /// d-axis transient voltage e'_d (p.u.).
    pub ed_p: f64,
}

impl State {
    pub fn new(delta: f64, omega: f64, eq_p: f64, ed_p: f64) -> Self {
        Self { delta, omega, eq_p, ed_p }
    }

    pub fn as_vector(&self) -> Vector4<f64> {
        Vector4::new(self.delta, self.omega, self.eq_p, self.ed_p)
    }

    pub fn from_vector(v: &Vector4<f64>) -> Self {
        Self::new(v[0], v[1], v[2], v[3])
    }
}

/// Input `u = (T_m, E_fd, i_R, i_I)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Input {
    /// Mechanical torque T_m (p.u.).
    pub tm: f64,
    /// Field voltage E_fd (p.u.).
    pub efd: f64,
    /// Real terminal current i_R (p.u.).
    pub i_r: f64,
    /// Imaginary terminal current i_I (p.u.).
    pub i_i: f64,
}

impl Input {
    pub fn new(tm: f64, efd: f64, i_r: f64, i_i: f64) -> Self {
        Self { tm, efd, i_r, i_i }
    }

    pub fn as_vector(&self) -> Vector4<f64> {
        Vector4::new(self.tm, self.efd, self.i_r, self.i_i)
    }

    pub fn from_vector(v: &Vector4<f64>) -> Self {
        Self::new(v[0], v[1], v[2], v[3])
    }
}

/// PMU output `y = (e_R, e_I)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Output {
    /// Real terminal voltage e_R (p.u.).
    pub e_r: f64,
    /// Imaginary terminal voltage e_I (p.u.).
    pub e_i: f64,
}

impl Output {
    pub fn as_vector(&self) -> Vector2<f64> {
        Vector2::new(self.e_r, self.e_i)
    }

    pub fn from_vector(v: &Vector2<f64>) -> Self {
        Self { e_r: v[0], e_i: v[1] }
    }
}

/// Linear part of the state-space model.
#[derive(Debug, Clone, PartialEq)]
pub struct StateMatrices {
    pub a: Matrix4<f64>,
    pub bu: Matrix4<f64>,
    pub du: Matrix2x4<f64>,
}

/// Places the α/β constants into the `A`, `B_u`, `D_u` sparsity patterns.
pub fn build_matrices(c: &DerivedConstants) -> StateMatrices {
    let mut a = Matrix4::zeros();
    a[(0, 1)] = 1.0;
    a[(1, 1)] = -c.alpha5;
    a[(2, 2)] = -c.alpha7;
    a[(3, 3)] = -c.alpha9;
    let mut bu = Matrix4::zeros();
    bu[(1, 0)] = c.alpha2;
    bu[(2, 1)] = c.alpha7;
    let mut du = Matrix2x4::zeros();
    du[(0, 3)] = c.beta2;
    du[(1, 2)] = -c.beta2;
    StateMatrices { a, bu, du }
}

/// Stator currents, terminal voltages and torques expressed as functions of
/// the state and input.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AirGapQuantities {
    /// q-axis stator current (p.u.).
    pub iq: f64,
    /// d-axis stator current (p.u.).
    pub id: f64,
    /// q-axis terminal voltage (p.u.).
    pub eq: f64,
    /// d-axis terminal voltage (p.u.).
    pub ed: f64,
    /// Electrical power (p.u.).
    pub pe: f64,
    /// Air-gap torque (p.u.).
    pub te: f64,
}

/// Evaluates the stator currents, terminal voltages, electrical power and
/// air-gap torque at `(x, u)`.
pub fn intermediate_quantities(p: &GeneratorParams, x: &State, u: &Input) -> AirGapQuantities {
    let k = p.base_ratio();
    let (s, c) = x.delta.sin_cos();
    let iq = u.i_i * s + u.i_r * c;
    let id = u.i_r * s - u.i_i * c;
    let eq = x.eq_p - k * p.xdp * id;
    let ed = x.ed_p + k * p.xqp * iq;
    let pe = eq * iq + ed * id;
    let te = k * pe;
    AirGapQuantities { iq, id, eq, ed, pe, te }
}

/// Nonlinear process term `f(x, u)` of `ẋ = A x + f(x,u) + B_u u`.
pub fn eval_f(c: &DerivedConstants, x: &State, u: &Input) -> Vector4<f64> {
    let (s1, c1) = x.delta.sin_cos();
    let (s2, c2) = (2.0 * x.delta).sin_cos();
    let f1 = -c.alpha1;
    let f2 = c.alpha3 * x.ed_p * u.i_i * c1 - c.alpha3 * x.eq_p * u.i_i * s1
        - c.alpha3 * x.ed_p * u.i_r * s1
        - c.alpha3 * x.eq_p * u.i_r * c1
        + c.alpha4 * u.i_r * u.i_i * c2
        + 0.5 * c.alpha4 * (u.i_i * u.i_i - u.i_r * u.i_r) * s2
        + c.alpha6;
    let f3 = c.alpha8 * u.i_i * c1 - c.alpha8 * u.i_r * s1;
    let f4 = c.alpha10 * u.i_r * c1 + c.alpha10 * u.i_i * s1;
    Vector4::new(f1, f2, f3, f4)
}

/// Nonlinear measurement term `h(x, u)` of `y = h(x,u) + D_u u`.
///
/// The sign of the `β₁ u₄ cos 2x₁` term in `h₁` (and the matching
/// `∂h₁/∂x₁` entry) is fixed so that `h + D_u u` reproduces the terminal
/// voltage phasor obtained by composing the stator algebra with the d-q
/// to R-I rotation; see the composition test below.
pub fn eval_h(c: &DerivedConstants, x: &State, u: &Input) -> Vector2<f64> {
    let (s1, c1) = x.delta.sin_cos();
    let (s2, c2) = (2.0 * x.delta).sin_cos();
    let h1 = x.eq_p * c1 + x.ed_p * s1 + c.beta1 * u.i_r * s2 - c.beta1 * u.i_i * c2;
    let h2 = x.eq_p * s1 - x.ed_p * c1 - c.beta1 * u.i_r * c2 - c.beta1 * u.i_i * s2;
    Vector2::new(h1, h2)
}

/// Full state derivative `A x + f(x,u) + B_u u`.
pub fn eval_dynamics(
    c: &DerivedConstants,
    m: &StateMatrices,
    x: &State,
    u: &Input,
) -> Vector4<f64> {
    m.a * x.as_vector() + eval_f(c, x, u) + m.bu * u.as_vector()
}

/// Full output `h(x,u) + D_u u`.
pub fn eval_output(c: &DerivedConstants, m: &StateMatrices, x: &State, u: &Input) -> Output {
    Output::from_vector(&(eval_h(c, x, u) + m.du * u.as_vector()))
}

/// Jacobian of `f` with respect to the state.
///
/// Row 1 is identically zero; rows 3 and 4 only depend on δ.
pub fn jac_f_x(c: &DerivedConstants, x: &State, u: &Input) -> Matrix4<f64> {
    let (s1, c1) = x.delta.sin_cos();
    let (s2, c2) = (2.0 * x.delta).sin_cos();
    let mut j = Matrix4::zeros();
    j[(1, 0)] = -c.alpha3 * x.ed_p * u.i_i * s1 - c.alpha3 * x.eq_p * u.i_i * c1
        - c.alpha3 * x.ed_p * u.i_r * c1
        + c.alpha3 * x.eq_p * u.i_r * s1
        - 2.0 * c.alpha4 * u.i_r * u.i_i * s2
        + c.alpha4 * (u.i_i * u.i_i - u.i_r * u.i_r) * c2;
    j[(1, 2)] = -c.alpha3 * u.i_i * s1 - c.alpha3 * u.i_r * c1;
    j[(1, 3)] = c.alpha3 * u.i_i * c1 - c.alpha3 * u.i_r * s1;
    j[(2, 0)] = -c.alpha8 * u.i_i * s1 - c.alpha8 * u.i_r * c1;
    j[(3, 0)] = -c.alpha10 * u.i_r * s1 + c.alpha10 * u.i_i * c1;
    j
}

/// Jacobian of `h` with respect to the state. Column 2 (ω) is always zero.
pub fn jac_h_x(c: &DerivedConstants, x: &State, u: &Input) -> Matrix2x4<f64> {
    let (s1, c1) = x.delta.sin_cos();
    let (s2, c2) = (2.0 * x.delta).sin_cos();
    let mut j = Matrix2x4::zeros();
    j[(0, 0)] = -x.eq_p * s1 + x.ed_p * c1 + 2.0 * c.beta1 * u.i_r * c2 + 2.0 * c.beta1 * u.i_i * s2;
    j[(0, 2)] = c1;
    j[(0, 3)] = s1;
    j[(1, 0)] = x.eq_p * c1 + x.ed_p * s1 + 2.0 * c.beta1 * u.i_r * s2 - 2.0 * c.beta1 * u.i_i * c2;
    j[(1, 2)] = s1;
    j[(1, 3)] = -c1;
    j
}


/// Closed-form equilibrium for a fixed rotor angle and current phasor.
///
/// Returns the state with `ω = ω₀`, the transient voltages that zero the
/// voltage dynamics for the field voltage `efd`, and the input whose
/// mechanical torque balances the resulting air-gap torque.
pub fn equilibrium(
    p: &GeneratorParams,
    delta: f64,
    efd: f64,
    i_r: f64,
    i_i: f64,
) -> (State, Input) {
    let k = p.base_ratio();
    let (s, co) = delta.sin_cos();
    let iq = i_i * s + i_r * co;
    let id = i_r * s - i_i * co;
    let eq_p = efd - k * (p.xd - p.xdp) * id;
    let ed_p = k * (p.xq - p.xqp) * iq;
    let x = State::new(delta, p.omega0, eq_p, ed_p);
    let q = intermediate_quantities(p, &x, &Input::new(0.0, efd, i_r, i_i));
    (x, Input::new(q.te, efd, i_r, i_i))
}
