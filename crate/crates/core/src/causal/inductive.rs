//! Matrix toy of the inductive construction.
//!
//! The first-order term is `S₁(x) = i L(x)` with `L(x) = η Σ_j f_j(x) K_j`,
//! `K_j` Hermitian and `f_j` real plane waves in one space and one time
//! dimension, so `L` is self-adjoint for the Krein form `η`. Higher orders
//! are time-ordered products `Sₙ = iⁿ T[L(x₁)…L(xₙ)]`. This model satisfies
//! causal factorisation exactly, which makes every identity of the
//! inductive step checkable to rounding error.

use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::C64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub t: f64,
    pub z: f64,
}

impl Event {
    pub fn new(t: f64, z: f64) -> Self {
        Self { t, z }
    }
}

/// Profile `cos(ω t − k z + φ)` multiplying one generator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Profile {
    pub frequency: f64,
    pub wavenumber: f64,
    pub phase: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ToyModel {
    eta: Vec<f64>,
    generators: Vec<(DMatrix<C64>, Profile)>,
}

impl ToyModel {
    pub fn new(eta: Vec<f64>, generators: Vec<(DMatrix<C64>, Profile)>) -> Result<Self> {
        let n = eta.len();
        if eta.iter().any(|s| s.abs() != 1.0) {
            return Err(Error::Invalid("Krein signs must be ±1".into()));
        }
        for (k, _) in &generators {
            if k.nrows() != n || k.ncols() != n {
                return Err(Error::DimensionMismatch { expected: n, got: k.nrows() });
            }
            if (k - k.adjoint()).norm() > 1e-12 * (1.0 + k.norm()) {
                return Err(Error::Invalid("generators must be Hermitian".into()));
            }
        }
        Ok(Self { eta, generators })
    }

    pub fn random<R: Rng>(eta: Vec<f64>, n_generators: usize, rng: &mut R) -> Result<Self> {
        let n = eta.len();
        let gens = (0..n_generators)
            .map(|_| {
                let a = DMatrix::<C64>::from_fn(n, n, |_, _| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
                let h = (&a + a.adjoint()) * C64::new(0.25, 0.0);
                let p = Profile {
                    frequency: rng.gen_range(0.2..2.0),
                    wavenumber: rng.gen_range(-1.5..1.5),
                    phase: rng.gen_range(0.0..6.28),
                };
                (h, p)
            })
            .collect();
        Self::new(eta, gens)
    }

    pub fn dim(&self) -> usize {
        self.eta.len()
    }

    fn eta_matrix(&self) -> DMatrix<C64> {
        DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
            self.dim(),
            self.eta.iter().map(|s| C64::new(*s, 0.0)),
        ))
    }

    /// `L(x)`.
    pub fn vertex(&self, x: Event) -> DMatrix<C64> {
        let mut k = DMatrix::<C64>::zeros(self.dim(), self.dim());
        for (g, p) in &self.generators {
            let f = (p.frequency * x.t - p.wavenumber * x.z + p.phase).cos();
            k += g * C64::new(f, 0.0);
        }
        self.eta_matrix() * k
    }

    /// `S(X)` for the events selected by `mask` (bit `j` ↔ `events[j]`).
    pub fn s(&self, events: &[Event], mask: u32) -> Result<DMatrix<C64>> {
        let mut chosen: Vec<Event> = (0..events.len()).filter(|j| mask >> j & 1 == 1).map(|j| events[j]).collect();
        chosen.sort_by(|a, b| b.t.total_cmp(&a.t));
        if chosen.windows(2).any(|w| w[0].t == w[1].t) {
            return Err(Error::Invalid("time-ordered toy needs distinct times".into()));
        }
        let mut m = DMatrix::<C64>::identity(self.dim(), self.dim());
        for e in chosen {
            m = m * self.vertex(e) * C64::new(0.0, 1.0);
        }
        Ok(m)
    }

    /// `S̄(X)` for every subset, from `Σ_{P ⊆ X} S(P) S̄(X∖P) = 0`.
    pub fn inverse_series(&self, events: &[Event]) -> Result<Vec<DMatrix<C64>>> {
        let n = events.len();
        let full = 1u32 << n;
        let s: Vec<DMatrix<C64>> = (0..full).map(|m| self.s(events, m)).collect::<Result<_>>()?;
        let mut bar = vec![DMatrix::<C64>::zeros(self.dim(), self.dim()); full as usize];
        bar[0] = DMatrix::identity(self.dim(), self.dim());
        let mut masks: Vec<u32> = (1..full).collect();
        masks.sort_by_key(|m| m.count_ones());
        for x in masks {
            let mut acc = DMatrix::<C64>::zeros(self.dim(), self.dim());
            // nonempty P ⊆ X
            let mut p = x;
            while p != 0 {
                acc -= &s[p as usize] * &bar[(x & !p) as usize];
                p = (p - 1) & x;
            }
            bar[x as usize] = acc;
        }
        Ok(bar)
    }

    /// `S̄(X) = η S(X)† η`, the unitarity route.
    pub fn inverse_krein(&self, events: &[Event], mask: u32) -> Result<DMatrix<C64>> {
        let eta = self.eta_matrix();
        Ok(&eta * self.s(events, mask)?.adjoint() * &eta)
    }
}

/// Splits `(X, Y)` of the first `n − 1` events with `X ≠ ∅`, as bit masks.
pub fn partitions(n: usize) -> Vec<(u32, u32)> {
    if n == 0 {
        return vec![];
    }
    let rest = (1u32 << (n - 1)) - 1;
    (1..=rest).map(|x| (x, rest & !x)).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArdTerms {
    pub a_prime: DMatrix<C64>,
    pub r_prime: DMatrix<C64>,
    pub d: DMatrix<C64>,
}

/// `A′ = Σ S̄(X)S(Y, xₙ)`, `R′ = Σ S(Y, xₙ)S̄(X)`, `D = R′ − A′` over the
/// splits of the first `n − 1` events; `xₙ` is the last event.
pub fn build_a_r_d(model: &ToyModel, events: &[Event]) -> Result<ArdTerms> {
    let n = events.len();
    if n < 2 {
        return Err(Error::MissingOrder(n));
    }
    let bar = model.inverse_series(events)?;
    let last = 1u32 << (n - 1);
    let mut a = DMatrix::<C64>::zeros(model.dim(), model.dim());
    let mut r = a.clone();
    for (x, y) in partitions(n) {
        let sy = model.s(events, y | last)?;
        a += &bar[x as usize] * &sy;
        r += &sy * &bar[x as usize];
    }
    let d = &r - &a;
    Ok(ArdTerms { a_prime: a, r_prime: r, d })
}

/// Outcome of the boxed-formula check at a configuration where `xₙ` is
/// earlier than all other events, so the retarded part equals `D`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoxedCheck {
    /// `‖Sₙ − (Rₙ − R′ₙ)‖_max`.
    pub s_defect: f64,
    /// `‖A′ₙ + Sₙ‖_max`; the advanced part vanishes there.
    pub advanced_residual: f64,
}

pub fn boxed_formula_check(model: &ToyModel, events: &[Event]) -> Result<BoxedCheck> {
    let n = events.len();
    if n < 2 {
        return Err(Error::MissingOrder(n));
    }
    let tn = events[n - 1].t;
    if events[..n - 1].iter().any(|e| e.t <= tn) {
        return Err(Error::Invalid("the last event must be the earliest".into()));
    }
    let terms = build_a_r_d(model, events)?;
    let sn = model.s(events, (1u32 << n) - 1)?;
    let retarded = terms.d.clone();
    let max = |m: DMatrix<C64>| m.iter().map(|z| z.norm()).fold(0.0, f64::max);
    Ok(BoxedCheck {
        s_defect: max(&sn - (&retarded - &terms.r_prime)),
        advanced_residual: max(&terms.a_prime + &sn),
    })
}
