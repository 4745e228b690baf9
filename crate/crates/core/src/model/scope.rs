use crate::error::{Error, Result};
use crate::model::{Domain, VarId};

/// Ordered variable list with row-major strides; the last variable is the
/// fastest-moving one (stride 1).
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct Scope {
    vars: Vec<VarId>,
    cards: Vec<usize>,
    strides: Vec<usize>,
    size: usize,
}

impl Scope {
    pub fn new(vars: Vec<VarId>, cards: Vec<usize>) -> Result<Self> {
        if vars.len() != cards.len() {
            return Err(Error::structure("scope vars and cardinalities differ in length"));
        }
        for (i, v) in vars.iter().enumerate() {
            if vars[..i].contains(v) {
                return Err(Error::structure(format!("variable {v} repeated in scope")));
            }
        }
        if let Some(pos) = cards.iter().position(|&c| c == 0) {
            return Err(Error::structure(format!("variable {} has cardinality 0", vars[pos])));
        }
        let mut strides = vec![0; vars.len()];
        let mut size = 1usize;
        for i in (0..vars.len()).rev() {
            strides[i] = size;
            size = size
                .checked_mul(cards[i])
                .ok_or_else(|| Error::structure("scope too large"))?;
        }
        Ok(Scope { vars, cards, strides, size })
    }

    pub fn from_domain(domain: &Domain, vars: &[VarId]) -> Result<Self> {
        for v in vars {
            if !domain.contains(*v) {
                return Err(Error::structure(format!("variable {v} not in domain")));
            }
        }
        Scope::new(vars.to_vec(), domain.cards_of(vars))
    }

    pub fn empty() -> Self {
        Scope { vars: Vec::new(), cards: Vec::new(), strides: Vec::new(), size: 1 }
    }

    pub fn vars(&self) -> &[VarId] {
        &self.vars
    }

    pub fn cards(&self) -> &[usize] {
        &self.cards
    }

    pub fn strides(&self) -> &[usize] {
        &self.strides
    }

    pub fn len(&self) -> usize {
        self.vars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vars.is_empty()
    }

    /// Number of joint states (1 for the empty scope).
    pub fn size(&self) -> usize {
        self.size
    }

    pub fn position(&self, var: VarId) -> Option<usize> {
        self.vars.iter().position(|&v| v == var)
    }

    pub fn contains(&self, var: VarId) -> bool {
        self.vars.contains(&var)
    }

    pub fn card_of(&self, var: VarId) -> Option<usize> {
        self.position(var).map(|i| self.cards[i])
    }

    /// Stride of `var`, or 0 when the variable is absent.
    pub(crate) fn stride_or_zero(&self, var: VarId) -> usize {
        self.position(var).map_or(0, |i| self.strides[i])
    }

    /// Flat index of a full assignment given in scope order.
    pub fn index_of(&self, states: &[usize]) -> usize {
        debug_assert_eq!(states.len(), self.vars.len());
        states.iter().zip(&self.strides).map(|(s, st)| s * st).sum()
    }

    /// Assignment (in scope order) of a flat index.
    pub fn assignment_of(&self, mut index: usize) -> Vec<usize> {
        let mut out = vec![0; self.vars.len()];
        for i in 0..self.vars.len() {
            out[i] = index / self.strides[i];
            index %= self.strides[i];
        }
        out
    }

    /// `self`'s variables followed by `other`'s new ones.
    pub fn union(&self, other: &Scope) -> Result<Scope> {
        let mut vars = self.vars.clone();
        let mut cards = self.cards.clone();
        for (v, c) in other.vars.iter().zip(&other.cards) {
            match self.card_of(*v) {
                Some(mine) if mine != *c => {
                    return Err(Error::structure(format!(
                        "cardinality mismatch for {v}: {mine} vs {c}"
                    )))
                }
                Some(_) => {}
                None => {
                    vars.push(*v);
                    cards.push(*c);
                }
            }
        }
        Scope::new(vars, cards)
    }

    /// Sub-scope of the variables in `keep`, in `self`'s order.
    pub fn project(&self, keep: impl Fn(VarId) -> bool) -> Scope {
        let (vars, cards): (Vec<_>, Vec<_>) = self
            .vars
            .iter()
            .zip(&self.cards)
            .filter(|(v, _)| keep(**v))
            .map(|(v, c)| (*v, *c))
            .unzip();
        Scope::new(vars, cards).expect("projection of a valid scope is valid")
    }

    /// The same variables in the order given by `order`, which must be a permutation.
    pub fn permuted(&self, order: &[VarId]) -> Result<Scope> {
        if order.len() != self.vars.len() {
            return Err(Error::structure("permutation length mismatch"));
        }
        let cards = order
            .iter()
            .map(|v| self.card_of(*v).ok_or_else(|| Error::structure(format!("{v} not in scope"))))
            .collect::<Result<Vec<_>>>()?;
        Scope::new(order.to_vec(), cards)
    }
}

/// Odometer over the joint states of a scope, with companion indices into
/// other tables whose strides are given per scope position.
pub(crate) struct Odometer<'a, const N: usize> {
    cards: &'a [usize],
    strides: [Vec<usize>; N],
    state: Vec<usize>,
    pub index: [usize; N],
}

impl<'a, const N: usize> Odometer<'a, N> {
    pub fn new(cards: &'a [usize], strides: [Vec<usize>; N]) -> Self {
        Odometer { cards, strides, state: vec![0; cards.len()], index: [0; N] }
    }

    /// Advance to the next joint state (last position fastest).
    #[inline]
    pub fn advance(&mut self) {
        for l in (0..self.cards.len()).rev() {
            self.state[l] += 1;
            for k in 0..N {
                self.index[k] += self.strides[k][l];
            }
            if self.state[l] < self.cards[l] {
                return;
            }
            self.state[l] = 0;
            for k in 0..N {
                self.index[k] -= self.cards[l] * self.strides[k][l];
            }
        }
    }
}
