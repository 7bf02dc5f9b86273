//! Text form of Wick monomials.
//!
//! ```text
//! expression := [name "(" label ")" "="] group+
//! group      := ":" item+ ":" ["(" label ")"]
//! item       := "phi"
//!             | "A" "[" index "]"
//!             | "psi#" ["[" index "]"]
//!             | "psi" ["[" index "]"]
//!             | "gamma" "[" index "]"
//! index      := digits | identifier
//! ```
//!
//! `psi#` without an index opens a spinor chain that the next bare `psi`
//! closes; `gamma` matrices inside the chain are multiplied in order and the
//! spinor indices are summed. A letter index must occur exactly twice and is
//! summed over `0..4` (upper index on `gamma`, lower on `A`); numeric indices
//! are fixed. Groups with different labels are tensor factors at different
//! points; a group without a label sits at `x`.
//!
//! Example: `W(x) = :psi# gamma[nu] psi A[nu]:(x)`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{FieldFactor, WickMonomial, WickPolynomial};
use crate::error::{Error, Result};
use crate::fields::{DiracAlgebra, FieldKind};
use crate::fock::{SpinMomentumGrid, C64};

/// Grid species used for each field symbol.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpeciesBinding {
    #[serde(default = "default_scalar")]
    pub scalar: String,
    #[serde(default = "default_photon")]
    pub photon: String,
    #[serde(default = "default_dirac")]
    pub dirac: String,
}

fn default_scalar() -> String {
    "phi".into()
}
fn default_photon() -> String {
    "photon".into()
}
fn default_dirac() -> String {
    "electron".into()
}

impl Default for SpeciesBinding {
    fn default() -> Self {
        Self { scalar: default_scalar(), photon: default_photon(), dirac: default_dirac() }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Index {
    Fixed(usize),
    Summed(String),
}

#[derive(Debug, Clone, PartialEq)]
enum Item {
    Scalar,
    Potential(Index),
    Spinor { adjoint: bool, index: Index },
    Chain(Vec<Index>),
}

#[derive(Debug, Clone, PartialEq)]
struct Group {
    label: String,
    items: Vec<Item>,
}

struct Lexer<'a> {
    text: &'a str,
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn skip_ws(&mut self) {
        while let Some(ch) = self.text[self.pos..].chars().next() {
            if ch.is_whitespace() {
                self.pos += ch.len_utf8();
            } else {
                break;
            }
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.text[self.pos..].chars().next()
    }

    fn expect(&mut self, ch: char) -> Result<()> {
        match self.peek() {
            Some(c) if c == ch => {
                self.pos += 1;
                Ok(())
            }
            other => Err(self.error(format!("expected '{ch}', found {}", describe(other)))),
        }
    }

    fn word(&mut self) -> Result<String> {
        self.skip_ws();
        let start = self.pos;
        for (i, ch) in self.text[start..].char_indices() {
            if !(ch.is_ascii_alphanumeric() || ch == '_' || ch == '#') {
                self.pos = start + i;
                break;
            }
            self.pos = start + i + ch.len_utf8();
        }
        if self.pos == start {
            let found = describe(self.peek());
            return Err(self.error(format!("expected a name, found {found}")));
        }
        Ok(self.text[start..self.pos].to_string())
    }

    fn error(&self, msg: String) -> Error {
        Error::Parse { pos: self.pos, msg }
    }
}

fn describe(c: Option<char>) -> String {
    c.map(|c| format!("'{c}'")).unwrap_or_else(|| "end of input".into())
}

fn parse_index(lx: &mut Lexer) -> Result<Index> {
    lx.expect('[')?;
    let w = lx.word()?;
    lx.expect(']')?;
    if w.chars().all(|c| c.is_ascii_digit()) {
        let v: usize = w.parse().map_err(|_| lx.error("index too large".into()))?;
        if v > 3 {
            return Err(lx.error(format!("index {v} outside 0..=3")));
        }
        Ok(Index::Fixed(v))
    } else if w.chars().next().is_some_and(|c| c.is_ascii_alphabetic()) && !w.contains('#') {
        Ok(Index::Summed(w))
    } else {
        Err(lx.error(format!("malformed index '{w}'")))
    }
}

fn parse_groups(text: &str) -> Result<Vec<Group>> {
    let mut lx = Lexer { text, pos: 0 };
    if text.contains('=') {
        lx.word()?;
        lx.expect('(')?;
        lx.word()?;
        lx.expect(')')?;
        lx.expect('=')?;
    }
    let mut groups = Vec::new();
    while lx.peek().is_some() {
        lx.expect(':')?;
        let mut items = Vec::new();
        let mut chain: Option<Vec<Index>> = None;
        while lx.peek() != Some(':') {
            if lx.peek().is_none() {
                return Err(lx.error("unterminated Wick product".into()));
            }
            let start = lx.pos;
            let name = lx.word()?;
            let has_index = lx.peek() == Some('[');
            match (name.as_str(), has_index) {
                ("phi", false) => items.push(Item::Scalar),
                ("A", true) => items.push(Item::Potential(parse_index(&mut lx)?)),
                ("gamma", true) => {
                    let idx = parse_index(&mut lx)?;
                    match chain.as_mut() {
                        Some(c) => c.push(idx),
                        None => return Err(Error::Parse { pos: start, msg: "gamma outside a psi# … psi chain".into() }),
                    }
                }
                ("psi#", false) => {
                    if chain.is_some() {
                        return Err(Error::Parse { pos: start, msg: "nested spinor chain".into() });
                    }
                    chain = Some(Vec::new());
                }
                ("psi", false) => match chain.take() {
                    Some(c) => items.push(Item::Chain(c)),
                    None => return Err(Error::Parse { pos: start, msg: "bare psi needs an index outside a chain".into() }),
                },
                ("psi#" | "psi", true) => {
                    if chain.is_some() {
                        return Err(Error::Parse { pos: start, msg: "indexed spinor inside a chain".into() });
                    }
                    let index = parse_index(&mut lx)?;
                    items.push(Item::Spinor { adjoint: name == "psi#", index });
                }
                _ => return Err(Error::Parse { pos: start, msg: format!("unknown factor '{name}'") }),
            }
        }
        if chain.is_some() {
            return Err(lx.error("psi# chain not closed by psi".into()));
        }
        lx.expect(':')?;
        let label = if lx.peek() == Some('(') {
            lx.expect('(')?;
            let l = lx.word()?;
            lx.expect(')')?;
            l
        } else {
            "x".to_string()
        };
        if items.is_empty() {
            return Err(lx.error("empty Wick product".into()));
        }
        groups.push(Group { label, items });
    }
    if groups.is_empty() {
        return Err(Error::Parse { pos: 0, msg: "no Wick product found".into() });
    }
    Ok(groups)
}

fn summed_letters(groups: &[Group]) -> Result<Vec<String>> {
    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    let mut note = |i: &Index| {
        if let Index::Summed(s) = i {
            *counts.entry(s.clone()).or_default() += 1;
        }
    };
    for g in groups {
        for item in &g.items {
            match item {
                Item::Potential(i) | Item::Spinor { index: i, .. } => note(i),
                Item::Chain(c) => c.iter().for_each(&mut note),
                Item::Scalar => {}
            }
        }
    }
    for (k, &n) in &counts {
        if n != 2 {
            return Err(Error::Parse { pos: 0, msg: format!("index '{k}' occurs {n} times; summed indices occur exactly twice") });
        }
    }
    Ok(counts.into_keys().collect())
}

/// Parses and expands a monomial into its component terms on `grid`.
pub fn parse_monomial(text: &str, grid: &SpinMomentumGrid, binding: &SpeciesBinding) -> Result<WickPolynomial> {
    let groups = parse_groups(text)?;
    let letters = summed_letters(&groups)?;
    let mut labels: Vec<&str> = Vec::new();
    for g in &groups {
        if !labels.contains(&g.label.as_str()) {
            labels.push(&g.label);
        }
    }
    let needs = |f: fn(&Item) -> bool| groups.iter().any(|g| g.items.iter().any(f));
    let lookup = |name: &str| grid.species_index(name);
    let scalar = if needs(|i| matches!(i, Item::Scalar)) { Some(lookup(&binding.scalar)?) } else { None };
    let photon = if needs(|i| matches!(i, Item::Potential(_))) { Some(lookup(&binding.photon)?) } else { None };
    let dirac = if needs(|i| matches!(i, Item::Spinor { .. } | Item::Chain(_))) { Some(lookup(&binding.dirac)?) } else { None };
    let gammas = DiracAlgebra::chiral().gamma;

    let mut terms = Vec::new();
    let n_assign = 4usize.pow(letters.len() as u32);
    for assignment in 0..n_assign {
        let value = |i: &Index| match i {
            Index::Fixed(v) => *v,
            Index::Summed(s) => {
                let k = letters.iter().position(|l| l == s).expect("letter collected");
                assignment / 4usize.pow(k as u32) % 4
            }
        };
        // Partial terms: (coefficient, factors) expanded chain by chain.
        let mut partial: Vec<(C64, Vec<FieldFactor>)> = vec![(C64::new(1.0, 0.0), Vec::new())];
        for g in &groups {
            let label = labels.iter().position(|l| *l == g.label).expect("label collected");
            for item in &g.items {
                let mut next = Vec::new();
                for (coef, factors) in &partial {
                    let mut push = |c: C64, fs: &[FieldFactor]| {
                        let mut v = factors.clone();
                        v.extend_from_slice(fs);
                        next.push((*coef * c, v));
                    };
                    match item {
                        Item::Scalar => push(
                            C64::new(1.0, 0.0),
                            &[FieldFactor { kind: FieldKind::Scalar, species: scalar.unwrap(), component: 0, label }],
                        ),
                        Item::Potential(i) => push(
                            C64::new(1.0, 0.0),
                            &[FieldFactor { kind: FieldKind::EmPotential, species: photon.unwrap(), component: value(i), label }],
                        ),
                        Item::Spinor { adjoint, index } => {
                            let kind = if *adjoint { FieldKind::DiracAdjoint } else { FieldKind::Dirac };
                            push(C64::new(1.0, 0.0), &[FieldFactor { kind, species: dirac.unwrap(), component: value(index), label }])
                        }
                        Item::Chain(chain) => {
                            let mut product = nalgebra::Matrix4::<C64>::identity();
                            for i in chain {
                                product *= gammas[value(i)];
                            }
                            for a in 0..4 {
                                for b in 0..4 {
                                    let c = product[(a, b)];
                                    if c != C64::new(0.0, 0.0) {
                                        push(
                                            c,
                                            &[
                                                FieldFactor { kind: FieldKind::DiracAdjoint, species: dirac.unwrap(), component: a, label },
                                                FieldFactor { kind: FieldKind::Dirac, species: dirac.unwrap(), component: b, label },
                                            ],
                                        );
                                    }
                                }
                            }
                        }
                    }
                }
                partial = next;
            }
        }
        terms.extend(partial.into_iter().map(|(coefficient, factors)| WickMonomial { coefficient, factors }));
    }
    Ok(WickPolynomial { terms })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{Species, Statistics};

    fn qed_grid() -> SpinMomentumGrid {
        SpinMomentumGrid::new(vec![
            Species::new("electron", Statistics::Fermi, 1.0, 4, vec![[0.1, 0.2, 0.0]], vec![1.0]),
            Species::new("photon", Statistics::Bose, 0.0, 4, vec![[0.0, 0.3, 0.1]], vec![1.0]),
        ])
        .unwrap()
    }

    #[test]
    fn qed_vertex_expands_to_sixteen_terms() {
        let p = parse_monomial("W(x) = :psi# gamma[nu] psi A[nu]:(x)", &qed_grid(), &SpeciesBinding::default()).unwrap();
        // each chiral gamma has four nonzero entries
        assert_eq!(p.terms.len(), 16);
        assert!(p.terms.iter().all(|t| t.factors.len() == 3 && t.factors[2].kind == FieldKind::EmPotential));
    }

    #[test]
    fn bilinear_without_gamma() {
        let p = parse_monomial(":psi# psi:", &qed_grid(), &SpeciesBinding::default()).unwrap();
        assert_eq!(p.terms.len(), 4);
        assert!(p.terms.iter().all(|t| t.factors[0].component == t.factors[1].component));
    }

    #[test]
    fn tensor_groups_get_distinct_labels() {
        let p = parse_monomial(":A[0]:(x) :A[1]:(y)", &qed_grid(), &SpeciesBinding::default()).unwrap();
        assert_eq!(p.terms[0].factors.iter().map(|f| f.label).collect::<Vec<_>>(), vec![0, 1]);
    }

    #[test]
    fn grammar_errors_report_positions() {
        let g = qed_grid();
        let b = SpeciesBinding::default();
        assert!(matches!(parse_monomial(":psi# gamma[mu] psi:", &g, &b), Err(Error::Parse { .. })));
        assert!(matches!(parse_monomial(":gamma[0]:", &g, &b), Err(Error::Parse { .. })));
        assert!(matches!(parse_monomial(":psi# psi", &g, &b), Err(Error::Parse { .. })));
        assert!(matches!(parse_monomial(":B[0]:", &g, &b), Err(Error::Parse { pos: 1, .. })));
        assert!(matches!(parse_monomial(":A[7]:", &g, &b), Err(Error::Parse { .. })));
    }
}
