//! Integral kernel operators `Ξ_{l,m}(κ)` on the truncated Fock space.
//!
//! A kernel with `l` creation and `m` annihilation slots stands for the
//! normal-ordered operator
//!
//! ```text
//! Ξ(κ) = Σ_{p,q} W(p) W(q) κ(p₁…p_l; q₁…q_m) a†(δ_{p₁})…a†(δ_{p_l}) a(δ_{q₁})…a(δ_{q_m})
//! ```
//!
//! where `W` is the product of quadrature weights. Acting on sector `N` this
//! is, with `t = (t₁…t_N)` running over the input tuples,
//!
//! ```text
//! (ΞΦ)(x, y) = Sym[ N!/(N−m)! · Σ_q W(q) κ(x; q) Φ_N(q_m, …, q₁, y) ]
//! ```
//!
//! The factor `N!/(N−m)!` and the reversed order of the contracted slots are
//! the whole combinatorial-factor table: they follow from iterating the
//! single-slot rule `a(w)Φₙ = n·w̄⊗₁Φₙ` and are checked against the
//! η-pairing in [`pairing_check`].

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{
    a_apply, a_dagger_apply, decode, encode, factorial, permutations, symmetrize_sector, FockVector,
    SmearedArgument, SpinMomentumGrid, C64,
};

const ZERO: C64 = C64::new(0.0, 0.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Creation,
    Annihilation,
}

/// Species and role of one kernel variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Slot {
    pub species: usize,
    pub role: Role,
}

impl Slot {
    pub fn creation(species: usize) -> Self {
        Self { species, role: Role::Creation }
    }
    pub fn annihilation(species: usize) -> Self {
        Self { species, role: Role::Annihilation }
    }
}

/// Complex array over the modes of `l + m` slots, creation slots first.
/// Each slot runs over the local modes of its species.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelLM {
    l: usize,
    m: usize,
    slots: Vec<Slot>,
    dims: Vec<usize>,
    data: Vec<C64>,
}

impl KernelLM {
    pub fn zeros(grid: &SpinMomentumGrid, creation: &[usize], annihilation: &[usize]) -> Result<Self> {
        let mut slots: Vec<Slot> = creation.iter().map(|&s| Slot::creation(s)).collect();
        slots.extend(annihilation.iter().map(|&s| Slot::annihilation(s)));
        let mut dims = Vec::with_capacity(slots.len());
        for s in &slots {
            let sp = grid
                .species()
                .get(s.species)
                .ok_or_else(|| Error::GridMismatch(format!("slot species {} not on grid", s.species)))?;
            dims.push(sp.n_modes());
        }
        let len = dims.iter().product();
        Ok(Self { l: creation.len(), m: annihilation.len(), slots, dims, data: vec![ZERO; len] })
    }

    /// Scalar kernel `(0,0)`.
    pub fn scalar(c: C64) -> Self {
        Self { l: 0, m: 0, slots: vec![], dims: vec![], data: vec![c] }
    }

    /// Kernel from a function of the local slot indices (not symmetrised).
    pub fn from_fn<F>(grid: &SpinMomentumGrid, creation: &[usize], annihilation: &[usize], mut f: F) -> Result<Self>
    where
        F: FnMut(&[usize]) -> C64,
    {
        let mut k = Self::zeros(grid, creation, annihilation)?;
        let mut t = vec![0usize; k.slots.len()];
        for idx in 0..k.data.len() {
            k.decode_index(idx, &mut t);
            k.data[idx] = f(&t);
        }
        Ok(k)
    }

    pub fn random<R: Rng>(grid: &SpinMomentumGrid, creation: &[usize], annihilation: &[usize], rng: &mut R) -> Result<Self> {
        let k = Self::from_fn(grid, creation, annihilation, |_| {
            C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        })?;
        Ok(k.symmetrized(grid))
    }

    pub fn l(&self) -> usize {
        self.l
    }
    pub fn m(&self) -> usize {
        self.m
    }
    pub fn slots(&self) -> &[Slot] {
        &self.slots
    }
    pub fn dims(&self) -> &[usize] {
        &self.dims
    }
    pub fn data(&self) -> &[C64] {
        &self.data
    }
    pub fn data_mut(&mut self) -> &mut [C64] {
        &mut self.data
    }

    pub fn same_signature(&self, other: &KernelLM) -> bool {
        self.l == other.l && self.m == other.m && self.slots == other.slots
    }

    pub(crate) fn decode_index(&self, mut idx: usize, out: &mut [usize]) {
        for k in (0..self.dims.len()).rev() {
            out[k] = idx % self.dims[k];
            idx /= self.dims[k];
        }
    }

    pub(crate) fn encode_index(&self, t: &[usize]) -> usize {
        t.iter().zip(&self.dims).fold(0, |acc, (&x, &d)| acc * d + x)
    }

    pub fn get(&self, t: &[usize]) -> C64 {
        self.data[self.encode_index(t)]
    }

    /// Slot groups sharing species and role; symmetrisation acts inside each.
    fn groups(&self) -> Vec<Vec<usize>> {
        let mut groups: Vec<Vec<usize>> = Vec::new();
        for (i, s) in self.slots.iter().enumerate() {
            match groups.iter_mut().find(|g| self.slots[g[0]] == *s) {
                Some(g) => g.push(i),
                None => groups.push(vec![i]),
            }
        }
        groups
    }

    /// (Anti)symmetrised copy: symmetric in Bose groups, antisymmetric in Fermi groups.
    pub fn symmetrized(&self, grid: &SpinMomentumGrid) -> KernelLM {
        let mut out = self.clone();
        let mut t = vec![0usize; self.slots.len()];
        let mut u = vec![0usize; self.slots.len()];
        for g in self.groups() {
            if g.len() < 2 {
                continue;
            }
            let fermi = grid.modes().fermi[grid.species_modes(self.slots[g[0]].species).start];
            let perms = permutations(g.len());
            let norm = 1.0 / factorial(g.len());
            let src = out.data.clone();
            for idx in 0..src.len() {
                out.decode_index(idx, &mut t);
                let mut acc = ZERO;
                for p in &perms {
                    u.copy_from_slice(&t);
                    for (k, &gi) in g.iter().enumerate() {
                        u[gi] = t[g[p[k]]];
                    }
                    let sign = if fermi && perm_parity(p) { -1.0 } else { 1.0 };
                    acc += src[out.encode_index(&u)] * sign;
                }
                out.data[idx] = acc * norm;
            }
        }
        out
    }

    pub fn scaled(&self, c: C64) -> KernelLM {
        let mut k = self.clone();
        k.data.iter_mut().for_each(|x| *x *= c);
        k
    }

    pub fn add_scaled(&mut self, c: C64, other: &KernelLM) -> Result<()> {
        if !self.same_signature(other) {
            return Err(Error::GridMismatch("kernels with different slot signatures".into()));
        }
        for (a, &b) in self.data.iter_mut().zip(&other.data) {
            *a += c * b;
        }
        Ok(())
    }

    pub fn max_abs_diff(&self, other: &KernelLM) -> f64 {
        self.data.iter().zip(&other.data).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }

    pub fn to_json(&self, grid: &SpinMomentumGrid) -> String {
        let doc = KernelDocument {
            l: self.l,
            m: self.m,
            slots: self
                .slots
                .iter()
                .map(|s| SlotDocument { species: grid.species()[s.species].name.clone(), role: s.role })
                .collect(),
            shape: self.dims.clone(),
            data: self.data.iter().map(|c| [c.re, c.im]).collect(),
        };
        serde_json::to_string(&doc).expect("kernel serialises")
    }

    pub fn from_json(grid: &SpinMomentumGrid, text: &str) -> Result<Self> {
        let doc: KernelDocument = serde_json::from_str(text)?;
        let mut creation = Vec::new();
        let mut annihilation = Vec::new();
        for (i, s) in doc.slots.iter().enumerate() {
            let sp = grid.species_index(&s.species)?;
            match s.role {
                Role::Creation if i < doc.l => creation.push(sp),
                Role::Annihilation if i >= doc.l => annihilation.push(sp),
                _ => return Err(Error::Invalid("creation slots must precede annihilation slots".into())),
            }
        }
        if creation.len() != doc.l || annihilation.len() != doc.m {
            return Err(Error::Invalid("slot list does not match (l, m)".into()));
        }
        let mut k = Self::zeros(grid, &creation, &annihilation)?;
        if k.dims != doc.shape {
            return Err(Error::GridMismatch(format!("shape {:?} but grid gives {:?}", doc.shape, k.dims)));
        }
        if doc.data.len() != k.data.len() {
            return Err(Error::DimensionMismatch { expected: k.data.len(), got: doc.data.len() });
        }
        k.data = doc.data.into_iter().map(|[re, im]| C64::new(re, im)).collect();
        Ok(k)
    }
}

fn perm_parity(p: &[usize]) -> bool {
    let mut inv = 0;
    for i in 0..p.len() {
        for j in i + 1..p.len() {
            if p[i] > p[j] {
                inv += 1;
            }
        }
    }
    inv % 2 == 1
}

#[derive(Serialize, Deserialize)]
struct SlotDocument {
    species: String,
    role: Role,
}

#[derive(Serialize, Deserialize)]
struct KernelDocument {
    l: usize,
    m: usize,
    slots: Vec<SlotDocument>,
    shape: Vec<usize>,
    data: Vec<[f64; 2]>,
}

/// `Ξ(κ)Φ` on the truncation of `Φ`.
pub fn xi_apply(grid: &SpinMomentumGrid, kernel: &KernelLM, phi: &FockVector) -> Result<FockVector> {
    xi_apply_capped(grid, kernel, phi, phi.n_max())
}

/// `Ξ(κ)Φ` keeping output sectors up to `out_max`; contributions above it
/// are dropped and counted as truncation loss.
pub fn xi_apply_capped(
    grid: &SpinMomentumGrid,
    kernel: &KernelLM,
    phi: &FockVector,
    out_max: usize,
) -> Result<FockVector> {
    if !crate::fock::same_modes(grid.modes(), phi.mode_table()) {
        return Err(Error::GridMismatch("kernel grid differs from vector grid".into()));
    }
    for s in kernel.slots() {
        if s.species >= grid.species().len() {
            return Err(Error::GridMismatch(format!("slot species {} not on grid", s.species)));
        }
    }
    let modes = grid.modes();
    let mm = grid.n_modes();
    let (l, m) = (kernel.l, kernel.m);
    let mut out = FockVector::zeros_on(modes.clone(), out_max);
    out.add_truncation_loss(phi.truncation_loss());
    let offsets: Vec<usize> = kernel.slots.iter().map(|s| modes.offsets[s.species]).collect();
    let create_dims = &kernel.dims[..l];
    let n_create: usize = create_dims.iter().product();
    let n_annih: usize = kernel.dims[l..].iter().product();
    let mut t = vec![0usize; phi.n_max()];
    let mut x = vec![0usize; l];
    let mut q_local = vec![0usize; m];
    let mut out_tuple = vec![0usize; phi.n_max() + l];
    for n in m..=phi.n_max() {
        let target = n - m + l;
        let sector = phi.sector(n);
        if sector.iter().all(|v| *v == ZERO) {
            continue;
        }
        if target > out_max {
            let lost = sector.iter().filter(|v| **v != ZERO).count();
            out.add_truncation_loss(lost);
            continue;
        }
        let prefactor = factorial(n) / factorial(n - m);
        let mut raw = vec![ZERO; mm.pow(target as u32)];
        for (idx, &amp) in sector.iter().enumerate() {
            if amp == ZERO {
                continue;
            }
            decode(idx, n, mm, &mut t);
            // q_j sits in input position m - j (reversed order).
            let mut ok = true;
            let mut wq = 1.0;
            for j in 0..m {
                let mode = t[m - 1 - j];
                let slot = kernel.slots[l + j];
                if modes.species[mode] != slot.species {
                    ok = false;
                    break;
                }
                q_local[j] = mode - offsets[l + j];
                wq *= modes.weight[mode];
            }
            if !ok {
                continue;
            }
            let q_index = q_local.iter().zip(&kernel.dims[l..]).fold(0, |acc, (&a, &d)| acc * d + a);
            let c = amp * (prefactor * wq);
            for (k, slot) in out_tuple[l..target].iter_mut().enumerate() {
                *slot = t[m + k];
            }
            for xi in 0..n_create {
                let kv = kernel.data[xi * n_annih + q_index];
                if kv == ZERO {
                    continue;
                }
                let mut r = xi;
                for k in (0..l).rev() {
                    x[k] = r % create_dims[k];
                    r /= create_dims[k];
                }
                for k in 0..l {
                    out_tuple[k] = x[k] + offsets[k];
                }
                raw[encode(&out_tuple[..target], mm)] += c * kv;
            }
        }
        let sym = if l == 0 { raw } else { symmetrize_sector(&raw, target, modes) };
        for (a, b) in out.sector_mut(target).iter_mut().zip(sym) {
            *a += b;
        }
    }
    Ok(out)
}

/// `η_{Φ,Ψ}(p; q) = ⟨⟨a†(δ_{p₁})…a†(δ_{p_l}) a(δ_{q₁})…a(δ_{q_m}) Φ, Ψ⟩⟩`
/// over the local modes of the given slots, returned in kernel layout.
pub fn eta_function(
    grid: &SpinMomentumGrid,
    phi: &FockVector,
    psi: &FockVector,
    creation: &[usize],
    annihilation: &[usize],
) -> Result<KernelLM> {
    phi.check_same_grid(psi)?;
    let mut eta = KernelLM::zeros(grid, creation, annihilation)?;
    let l = creation.len();
    let slots = eta.slots.clone();
    let n_annih: usize = eta.dims[l..].iter().product();
    let n_create: usize = eta.dims[..l].iter().product();
    let mut tq = vec![0usize; annihilation.len()];
    let mut tp = vec![0usize; l];
    for qi in 0..n_annih {
        let mut r = qi;
        for k in (0..annihilation.len()).rev() {
            tq[k] = r % eta.dims[l + k];
            r /= eta.dims[l + k];
        }
        let mut v = phi.clone();
        for k in (0..annihilation.len()).rev() {
            let mode = grid.species_modes(slots[l + k].species).start + tq[k];
            v = a_apply(&SmearedArgument::delta(grid, mode), &v)?;
        }
        for pi in 0..n_create {
            let mut r = pi;
            for k in (0..l).rev() {
                tp[k] = r % eta.dims[k];
                r /= eta.dims[k];
            }
            let mut w = v.clone();
            for k in (0..l).rev() {
                let mode = grid.species_modes(slots[k].species).start + tp[k];
                w = a_dagger_apply(&SmearedArgument::delta(grid, mode), &w)?;
            }
            eta.data[pi * n_annih + qi] = w.pairing(psi)?;
        }
    }
    Ok(eta)
}

/// Weighted pairing `⟨κ, η⟩ = Σ W(p)W(q) κ(p;q) η(p;q)`.
pub fn kernel_pairing(grid: &SpinMomentumGrid, kappa: &KernelLM, eta: &KernelLM) -> Result<C64> {
    if !kappa.same_signature(eta) {
        return Err(Error::GridMismatch("pairing kernels with different slots".into()));
    }
    let mut t = vec![0usize; kappa.slots.len()];
    let mut total = ZERO;
    for idx in 0..kappa.data.len() {
        kappa.decode_index(idx, &mut t);
        let w: f64 = t
            .iter()
            .zip(&kappa.slots)
            .map(|(&x, s)| grid.weight(grid.species_modes(s.species).start + x))
            .product();
        total += kappa.data[idx] * eta.data[idx] * w;
    }
    Ok(total)
}

/// `(⟨⟨Ξ(κ)Φ, Ψ⟩⟩, ⟨κ, η_{Φ,Ψ}⟩)`; the two must agree.
pub fn pairing_check(grid: &SpinMomentumGrid, kappa: &KernelLM, phi: &FockVector, psi: &FockVector) -> Result<(C64, C64)> {
    let lhs = xi_apply(grid, kappa, phi)?.pairing(psi)?;
    let creation: Vec<usize> = kappa.slots[..kappa.l].iter().map(|s| s.species).collect();
    let annihilation: Vec<usize> = kappa.slots[kappa.l..].iter().map(|s| s.species).collect();
    let eta = eta_function(grid, phi, psi, &creation, &annihilation)?;
    let rhs = kernel_pairing(grid, kappa, &eta)?;
    Ok((lhs, rhs))
}

/// Finite sum of kernels; entries with identical signatures are merged.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct OperatorSum {
    terms: Vec<KernelLM>,
}

impl OperatorSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn terms(&self) -> &[KernelLM] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn push(&mut self, coefficient: C64, kernel: KernelLM) {
        if let Some(t) = self.terms.iter_mut().find(|t| t.same_signature(&kernel)) {
            t.add_scaled(coefficient, &kernel).expect("signatures match");
        } else {
            self.terms.push(kernel.scaled(coefficient));
        }
    }

    pub fn extend(&mut self, coefficient: C64, other: &OperatorSum) {
        for t in &other.terms {
            self.push(coefficient, t.clone());
        }
    }

    pub fn apply(&self, grid: &SpinMomentumGrid, phi: &FockVector) -> Result<FockVector> {
        self.apply_capped(grid, phi, phi.n_max())
    }

    pub fn apply_capped(&self, grid: &SpinMomentumGrid, phi: &FockVector, out_max: usize) -> Result<FockVector> {
        let mut out = FockVector::zeros(grid, out_max);
        for t in &self.terms {
            let v = xi_apply_capped(grid, t, phi, out_max)?;
            out.axpy(C64::new(1.0, 0.0), &v)?;
        }
        Ok(out)
    }
}

/// One contraction pattern between two kernels: pairs of
/// (annihilation slot of the left kernel, creation slot of the right
/// kernel), both given as slot positions, and the normal-ordering sign.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelContraction {
    pub pairs: Vec<(usize, usize)>,
    pub sign: f64,
}

/// Sign of the fermionic rearrangement `order` of an operator string.
pub(crate) fn rearrangement_sign(fermi: &[bool], order: &[usize]) -> f64 {
    let mut inv = 0usize;
    for i in 0..order.len() {
        if !fermi[order[i]] {
            continue;
        }
        for j in i + 1..order.len() {
            if fermi[order[j]] && order[i] > order[j] {
                inv += 1;
            }
        }
    }
    if inv % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

fn slot_fermi(grid: &SpinMomentumGrid, s: &Slot) -> bool {
    grid.modes().fermi[grid.species_modes(s.species).start]
}

/// Layout of the product kernel for a contraction: surviving slots of the
/// operator string `[κ′ slots, κ″ slots]` in normal order, and the sign.
fn contraction_layout(
    grid: &SpinMomentumGrid,
    left: &KernelLM,
    right: &KernelLM,
    pairs: &[(usize, usize)],
) -> Result<(Vec<usize>, f64)> {
    let nl = left.slots.len();
    let mut used_left = vec![false; nl];
    let mut used_right = vec![false; right.slots.len()];
    for &(a, c) in pairs {
        let (Some(sa), Some(sc)) = (left.slots.get(a), right.slots.get(c)) else {
            return Err(Error::Scheme(format!("slot pair ({a}, {c}) out of range")));
        };
        if sa.role != Role::Annihilation || sc.role != Role::Creation {
            return Err(Error::Scheme(format!(
                "pair ({a}, {c}) must join an annihilation slot on the left to a creation slot on the right"
            )));
        }
        if sa.species != sc.species {
            return Err(Error::Scheme(format!("pair ({a}, {c}) joins different species")));
        }
        if used_left[a] || used_right[c] {
            return Err(Error::Scheme(format!("slot reused in pair ({a}, {c})")));
        }
        used_left[a] = true;
        used_right[c] = true;
    }
    let mut order = Vec::new();
    order.extend((0..left.l).filter(|&i| !used_left[i]));
    order.extend((0..right.l).filter(|&i| !used_right[i]).map(|i| nl + i));
    order.extend((left.l..nl).filter(|&i| !used_left[i]));
    order.extend((right.l..right.slots.len()).filter(|&i| !used_right[i]).map(|i| nl + i));
    let survivors = order.clone();
    for &(a, c) in pairs {
        order.push(a);
        order.push(nl + c);
    }
    let fermi: Vec<bool> = left.slots.iter().chain(&right.slots).map(|s| slot_fermi(grid, s)).collect();
    Ok((survivors, rearrangement_sign(&fermi, &order)))
}

/// Every legal contraction pattern between `left` and `right`, ordered by
/// the number of pairs and then lexicographically.
pub fn kernel_contractions(grid: &SpinMomentumGrid, left: &KernelLM, right: &KernelLM) -> Vec<KernelContraction> {
    let annih: Vec<usize> = (left.l..left.slots.len()).collect();
    let mut found: Vec<Vec<(usize, usize)>> = vec![vec![]];
    fn extend(
        left: &KernelLM,
        right: &KernelLM,
        annih: &[usize],
        start: usize,
        current: &mut Vec<(usize, usize)>,
        out: &mut Vec<Vec<(usize, usize)>>,
    ) {
        for ai in start..annih.len() {
            let a = annih[ai];
            for c in 0..right.l {
                if right.slots[c].species != left.slots[a].species || current.iter().any(|p| p.1 == c) {
                    continue;
                }
                current.push((a, c));
                out.push(current.clone());
                extend(left, right, annih, ai + 1, current, out);
                current.pop();
            }
        }
    }
    extend(left, right, &annih, 0, &mut vec![], &mut found);
    found.sort_by(|a, b| a.len().cmp(&b.len()).then(a.cmp(b)));
    found
        .into_iter()
        .map(|pairs| {
            let (_, sign) = contraction_layout(grid, left, right, &pairs).expect("enumerated pairs are legal");
            KernelContraction { pairs, sign }
        })
        .collect()
}

/// `κ′ ⊗_k κ″`: weighted sum over the contracted variables, result slots in
/// normal order (left creators, right creators, left annihilators, right
/// annihilators), then (anti)symmetrised. The scheme sign is not applied.
pub fn contract(
    grid: &SpinMomentumGrid,
    left: &KernelLM,
    right: &KernelLM,
    pairs: &[(usize, usize)],
) -> Result<KernelLM> {
    let (survivors, _) = contraction_layout(grid, left, right, pairs)?;
    let nl = left.slots.len();
    let all_slots: Vec<Slot> = left.slots.iter().chain(&right.slots).copied().collect();
    let creation: Vec<usize> =
        survivors.iter().filter(|&&i| all_slots[i].role == Role::Creation).map(|&i| all_slots[i].species).collect();
    let annihilation: Vec<usize> = survivors
        .iter()
        .filter(|&&i| all_slots[i].role == Role::Annihilation)
        .map(|&i| all_slots[i].species)
        .collect();
    let mut out = KernelLM::zeros(grid, &creation, &annihilation)?;
    let mut tl = vec![0usize; nl];
    let mut tr = vec![0usize; right.slots.len()];
    let mut tout = vec![0usize; survivors.len()];
    for (il, &vl) in left.data.iter().enumerate() {
        if vl == ZERO {
            continue;
        }
        left.decode_index(il, &mut tl);
        'right: for (ir, &vr) in right.data.iter().enumerate() {
            if vr == ZERO {
                continue;
            }
            right.decode_index(ir, &mut tr);
            let mut w = 1.0;
            for &(a, c) in pairs {
                if tl[a] != tr[c] {
                    continue 'right;
                }
                w *= grid.weight(grid.species_modes(left.slots[a].species).start + tl[a]);
            }
            for (k, &s) in survivors.iter().enumerate() {
                tout[k] = if s < nl { tl[s] } else { tr[s - nl] };
            }
            let idx = out.encode_index(&tout);
            out.data[idx] += vl * vr * w;
        }
    }
    Ok(out.symmetrized(grid))
}

/// Closed-form test function given by its four-dimensional Fourier
/// transform `φ̃(k) = P(k)·exp(−|k − c|²/(2σ²))`, optionally multiplied by
/// `exp(−ρ²/|k|²)` so that it vanishes to all orders at zero frequency.
/// `|·|` is the Euclidean norm on the four components.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestFunctionSpec {
    pub width: f64,
    #[serde(default)]
    pub centre: [f64; 4],
    /// Monomials `coefficient · k₀^a k₁^b k₂^c k₃^d`; empty means `P = 1`.
    #[serde(default)]
    pub polynomial: Vec<Monomial4>,
    #[serde(default)]
    pub vanishes_at_zero: bool,
    #[serde(default = "default_suppression")]
    pub suppression: f64,
}

fn default_suppression() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Monomial4 {
    pub powers: [u32; 4],
    pub coefficient: [f64; 2],
}

impl TestFunctionSpec {
    pub fn gaussian(width: f64) -> Self {
        Self { width, centre: [0.0; 4], polynomial: vec![], vanishes_at_zero: false, suppression: 1.0 }
    }

    pub fn centred(mut self, centre: [f64; 4]) -> Self {
        self.centre = centre;
        self
    }

    /// Same function with the zero-frequency suppression factor switched on.
    pub fn vanishing_at_zero(mut self, rho: f64) -> Self {
        self.vanishes_at_zero = true;
        self.suppression = rho;
        self
    }

    pub fn with_monomial(mut self, powers: [u32; 4], coefficient: C64) -> Self {
        self.polynomial.push(Monomial4 { powers, coefficient: [coefficient.re, coefficient.im] });
        self
    }

    /// `φ̃(k)`.
    pub fn eval(&self, k: [f64; 4]) -> C64 {
        let poly = if self.polynomial.is_empty() {
            C64::new(1.0, 0.0)
        } else {
            self.polynomial
                .iter()
                .map(|mono| {
                    let c = C64::new(mono.coefficient[0], mono.coefficient[1]);
                    c * (0..4).map(|i| k[i].powi(mono.powers[i] as i32)).product::<f64>()
                })
                .sum()
        };
        let d2: f64 = (0..4).map(|i| (k[i] - self.centre[i]).powi(2)).sum();
        let mut g = (-d2 / (2.0 * self.width * self.width)).exp();
        if self.vanishes_at_zero {
            let k2: f64 = k.iter().map(|x| x * x).sum();
            g = if k2 == 0.0 { 0.0 } else { g * (-self.suppression * self.suppression / k2).exp() };
        }
        poly * g
    }

    /// Euclidean radius outside which `φ̃` is negligible.
    pub fn reach(&self) -> f64 {
        self.centre.iter().map(|c| c * c).sum::<f64>().sqrt() + 7.0 * self.width
    }

    /// `φ̃` with reflected argument, `k ↦ φ̃(−k)`.
    pub fn reflected(&self) -> Self {
        let mut r = self.clone();
        r.centre = self.centre.map(|c| -c);
        for mono in &mut r.polynomial {
            let odd: u32 = mono.powers.iter().sum::<u32>() % 2;
            if odd == 1 {
                mono.coefficient = mono.coefficient.map(|c| -c);
            }
        }
        r
    }

    /// Largest `|φ̃|` on a shell of radius `radius` around zero; for the
    /// flagged class this falls off faster than any power of the radius.
    pub fn max_near_zero(&self, radius: f64) -> f64 {
        let dirs = [[1.0, 0.0, 0.0, 0.0], [0.0, 1.0, 0.0, 0.0], [0.0, 0.0, 1.0, 0.0], [0.0, 0.0, 0.0, 1.0], [0.5, 0.5, 0.5, 0.5]];
        dirs.iter()
            .flat_map(|d| [1.0, -1.0].map(|s| self.eval(d.map(|x| s * radius * x)).norm()))
            .fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{Species, Statistics};
    use rand::SeedableRng;

    fn grid3() -> SpinMomentumGrid {
        SpinMomentumGrid::new(vec![Species::new(
            "phi",
            Statistics::Bose,
            1.0,
            1,
            vec![[0.1, 0.0, 0.0], [0.0, 0.7, 0.0], [0.0, 0.0, -0.4]],
            vec![0.5, 1.5, 0.8],
        )])
        .unwrap()
    }

    #[test]
    fn scalar_kernel_scales() {
        let g = grid3();
        let mut rng = rand::rngs::StdRng::seed_from_u64(9);
        let v = FockVector::random(&g, 2, &mut rng);
        let r = xi_apply(&g, &KernelLM::scalar(C64::new(2.0, -1.0)), &v).unwrap();
        assert!(r.max_abs_diff(&v.scale(C64::new(2.0, -1.0))) < 1e-14);
    }

    #[test]
    fn creation_kernel_on_vacuum() {
        let g = grid3();
        let k = KernelLM::from_fn(&g, &[0], &[], |t| C64::new(t[0] as f64 + 1.0, 0.5)).unwrap();
        let r = xi_apply(&g, &k, &FockVector::vacuum(&g, 1)).unwrap();
        for q in 0..3 {
            assert!((r.sector(1)[q] - k.get(&[q])).norm() < 1e-15);
        }
    }

    #[test]
    fn diagonal_kernel_multiplies_pointwise() {
        let g = grid3();
        let f = [C64::new(1.0, 1.0), C64::new(-2.0, 0.0), C64::new(0.5, 0.3)];
        let k = KernelLM::from_fn(&g, &[0], &[0], |t| if t[0] == t[1] { f[t[0]] / g.weight(t[0]) } else { ZERO }).unwrap();
        let amp = [C64::new(0.3, 0.0), C64::new(0.0, 1.0), C64::new(-1.0, 0.2)];
        let mut v = FockVector::zeros(&g, 1);
        v.sector_mut(1).copy_from_slice(&amp);
        let r = xi_apply(&g, &k, &v).unwrap();
        for q in 0..3 {
            assert!((r.sector(1)[q] - f[q] * amp[q]).norm() < 1e-14);
        }
    }

    #[test]
    fn vacuum_eta_for_annihilator_vanishes() {
        let g = grid3();
        let v = FockVector::vacuum(&g, 2);
        let eta = eta_function(&g, &v, &v, &[], &[0]).unwrap();
        assert!(eta.data().iter().all(|x| x.norm() == 0.0));
    }

    #[test]
    fn single_contraction_is_weighted_two_point_sum() {
        let g = grid3();
        let a = KernelLM::from_fn(&g, &[], &[0], |t| C64::new(1.0 + t[0] as f64, 0.0)).unwrap();
        let c = KernelLM::from_fn(&g, &[0], &[], |t| C64::new(0.0, 2.0 - t[0] as f64)).unwrap();
        let r = contract(&g, &a, &c, &[(0, 0)]).unwrap();
        let expected: C64 = (0..3).map(|q| g.weight(q) * a.get(&[q]) * c.get(&[q])).sum();
        assert_eq!(r.l() + r.m(), 0);
        assert!((r.data()[0] - expected).norm() < 1e-15);
    }

    #[test]
    fn illegal_pairs_are_rejected() {
        let g = grid3();
        let c = KernelLM::from_fn(&g, &[0], &[], |_| C64::new(1.0, 0.0)).unwrap();
        assert!(matches!(contract(&g, &c, &c, &[(0, 0)]), Err(Error::Scheme(_))));
    }

    #[test]
    fn kernel_json_round_trip() {
        let g = grid3();
        let mut rng = rand::rngs::StdRng::seed_from_u64(1);
        let k = KernelLM::random(&g, &[0], &[0, 0], &mut rng).unwrap();
        let back = KernelLM::from_json(&g, &k.to_json(&g)).unwrap();
        assert_eq!(k, back);
    }

    #[test]
    fn flagged_test_function_vanishes_at_zero() {
        let t = TestFunctionSpec::gaussian(1.0).vanishing_at_zero(0.5);
        assert_eq!(t.eval([0.0; 4]).norm(), 0.0);
        assert!(t.max_near_zero(0.05) < 1e-12);
        assert!(TestFunctionSpec::gaussian(1.0).max_near_zero(0.05) > 0.9);
    }
}
