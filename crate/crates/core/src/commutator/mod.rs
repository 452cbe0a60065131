//! Iterated commutators `[T_1, [T_2, … [b, T_k]]]` of model operators acting
//! on disjoint blocks of axes, their exact expansion into paraproduct terms,
//! and Bloom-ratio measurement.

mod bloom;
mod telescoped;

use std::fmt;

use crate::bmo::Partition;
use crate::error::{Error, Result};
use crate::grid::{GridFunction, MultiGrid};
use crate::haar::ParamSubset;
use crate::ops::paraproduct::{composed_paraproduct, flavor_tuples, product_expansion};
use crate::ops::{ExpansionFlavor, Flavor, OperatorSpec};

pub use bloom::{bloom_ratio, worst_case_search, BloomContext, BloomRecord, SearchOutcome};
pub use telescoped::{illegal_group, telescoped_illegal_group, TelescopedGroup};

/// Where an operator sits relative to the multiplication by `b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum OpSide {
    /// Applied after multiplying by `b`.
    L,
    /// Applied to `f` before multiplying by `b`.
    R,
}

impl OpSide {
    pub fn code(self) -> char {
        match self {
            OpSide::L => 'L',
            OpSide::R => 'R',
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CommutatorSpec {
    operators: Vec<OperatorSpec>,
    partition: Partition,
    symbol: GridFunction,
}

impl CommutatorSpec {
    /// Block `i` of the partition is the active axis set of `operators[i]`.
    pub fn new(operators: Vec<OperatorSpec>, symbol: GridFunction) -> Result<Self> {
        if operators.is_empty() {
            return Err(Error::InvalidOperator("a commutator needs at least one operator".into()));
        }
        let grid = symbol.grid();
        for op in &operators {
            if op.grid() != grid {
                return Err(Error::GridMismatch(format!("{} operator lives on a different grid", op.kind())));
            }
            if !op.is_paraproduct_free() && op.axes().len() > 2 {
                return Err(Error::InvalidOperator("paraproduct-bearing operators span at most two axes".into()));
            }
        }
        let partition = Partition::new(operators.iter().map(|op| op.axes()).collect(), grid.m())?;
        Ok(Self { operators, partition, symbol })
    }

    pub fn operators(&self) -> &[OperatorSpec] {
        &self.operators
    }

    pub fn partition(&self) -> &Partition {
        &self.partition
    }

    pub fn symbol(&self) -> &GridFunction {
        &self.symbol
    }

    pub fn grid(&self) -> &MultiGrid {
        self.symbol.grid()
    }

    pub fn k(&self) -> usize {
        self.operators.len()
    }

    pub fn with_symbol(&self, symbol: GridFunction) -> Result<Self> {
        if symbol.grid() != self.grid() {
            return Err(Error::GridMismatch("symbol lives on a different grid".into()));
        }
        Ok(Self { operators: self.operators.clone(), partition: self.partition.clone(), symbol })
    }

    pub fn is_shift_only(&self) -> bool {
        self.operators.iter().all(|op| matches!(op, OperatorSpec::Shift(_)))
    }
}

/// All `2^k` side patterns; operator `i` is on the right when bit `i` of the
/// pattern index is set.
pub fn side_patterns(k: usize) -> Vec<Vec<OpSide>> {
    (0..1usize << k)
        .map(|mask| (0..k).map(|i| if mask >> i & 1 == 1 { OpSide::R } else { OpSide::L }).collect())
        .collect()
}

/// Sign of a side pattern in the expanded commutator.
pub fn pattern_sign(sides: &[OpSide]) -> f64 {
    let last = sides.len() - 1;
    sides
        .iter()
        .enumerate()
        .map(|(i, &s)| match (i == last, s) {
            (true, OpSide::R) | (false, OpSide::L) => 1.0,
            _ => -1.0,
        })
        .product()
}

fn apply_right(c: &CommutatorSpec, sides: &[OpSide], f: &GridFunction) -> Result<GridFunction> {
    let mut g = f.clone();
    for (op, &s) in c.operators.iter().zip(sides) {
        if s == OpSide::R {
            g = op.apply(&g)?;
        }
    }
    Ok(g)
}

fn apply_left(c: &CommutatorSpec, sides: &[OpSide], h: GridFunction) -> Result<GridFunction> {
    let mut h = h;
    for (op, &s) in c.operators.iter().zip(sides).rev() {
        if s == OpSide::L {
            h = op.apply(&h)?;
        }
    }
    Ok(h)
}

fn check_input(c: &CommutatorSpec, f: &GridFunction) -> Result<()> {
    if f.grid() != c.grid() {
        return Err(Error::GridMismatch("input lives on a different grid".into()));
    }
    Ok(())
}

/// The alternating sum of the `2^k` compositions `L(b · R f)`.
pub fn commutator_apply(c: &CommutatorSpec, f: &GridFunction) -> Result<GridFunction> {
    check_input(c, f)?;
    let mut out = GridFunction::zeros(c.grid());
    for sides in side_patterns(c.k()) {
        let g = apply_right(c, &sides, f)?;
        let h = apply_left(c, &sides, c.symbol.mul(&g)?)?;
        out.add_assign_unchecked(&h, pattern_sign(&sides));
    }
    Ok(out)
}

/// One composed term `sign · L(A_flavors(b, R f))`.
#[derive(Debug, Clone)]
pub struct ExpansionTerm {
    /// Flavor per axis, ascending axis order.
    pub flavors: Vec<ExpansionFlavor>,
    pub sides: Vec<OpSide>,
    /// Blocks on which `b` is non-cancellative on every axis.
    pub illegal_blocks: Vec<usize>,
    /// Axes carrying the top-average correction.
    pub correction_axes: Vec<usize>,
    pub label: String,
    pub value: GridFunction,
}

impl ExpansionTerm {
    pub fn is_fully_legal(&self) -> bool {
        self.illegal_blocks.is_empty()
    }

    pub fn is_correction(&self) -> bool {
        !self.correction_axes.is_empty()
    }
}

fn illegal_blocks(partition: &Partition, flavors: &[ExpansionFlavor]) -> Vec<usize> {
    partition
        .blocks()
        .iter()
        .enumerate()
        .filter(|(_, block)| block.iter().all(|&a| !flavors[a].tests_b()))
        .map(|(j, _)| j)
        .collect()
}

fn correction_axes(flavors: &[ExpansionFlavor]) -> Vec<usize> {
    (0..flavors.len()).filter(|&a| flavors[a] == ExpansionFlavor::Top).collect()
}

struct Joined<'a, T>(&'a [T]);

impl<T: fmt::Display> fmt::Display for Joined<'_, T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "-");
        }
        for (n, x) in self.0.iter().enumerate() {
            if n > 0 {
                write!(f, ",")?;
            }
            write!(f, "{x}")?;
        }
        Ok(())
    }
}

/// `block<j>:<flavors>,…|side:<sides>|corr:<axes>`.
pub fn term_label(partition: &Partition, flavors: &[ExpansionFlavor], sides: &[OpSide]) -> String {
    let blocks: Vec<String> = partition
        .blocks()
        .iter()
        .enumerate()
        .map(|(j, block)| format!("block{j}:{}", block.iter().map(|&a| flavors[a].code()).collect::<String>()))
        .collect();
    let sides: String = sides.iter().map(|s| s.code()).collect();
    format!("{}|side:{sides}|corr:{}", blocks.join(","), Joined(&correction_axes(flavors)))
}

/// Every composed term, `2^k · 4^m` in total; the values sum to the commutator.
pub fn commutator_expand(c: &CommutatorSpec, f: &GridFunction) -> Result<Vec<ExpansionTerm>> {
    check_input(c, f)?;
    let all = ParamSubset::all(c.grid());
    let mut out = Vec::new();
    for sides in side_patterns(c.k()) {
        let sign = pattern_sign(&sides);
        let g = apply_right(c, &sides, f)?;
        for term in product_expansion(&c.symbol, &g, &all)? {
            let value = apply_left(c, &sides, term.value)?.scaled(sign);
            out.push(ExpansionTerm {
                illegal_blocks: illegal_blocks(&c.partition, &term.flavors),
                correction_axes: correction_axes(&term.flavors),
                label: term_label(&c.partition, &term.flavors, &sides),
                flavors: term.flavors,
                sides: sides.clone(),
                value,
            });
        }
    }
    Ok(out)
}

/// Terms sharing one flavor tuple, summed over side patterns.
#[derive(Debug, Clone)]
pub struct ExpansionGroup {
    pub flavors: Vec<ExpansionFlavor>,
    pub illegal_blocks: Vec<usize>,
    pub correction_axes: Vec<usize>,
    pub value: GridFunction,
}

impl ExpansionGroup {
    pub fn is_correction(&self) -> bool {
        !self.correction_axes.is_empty()
    }

    pub fn is_fully_illegal(&self) -> bool {
        self.flavors.iter().all(|&f| f == ExpansionFlavor::Para(Flavor::A3))
    }
}

/// Groups in the lexicographic flavor order; `4^m` groups, `3^m` of them
/// without corrections.
pub fn group_terms(c: &CommutatorSpec, terms: &[ExpansionTerm]) -> Vec<ExpansionGroup> {
    flavor_tuples(c.grid().m())
        .into_iter()
        .map(|flavors| {
            let mut value = GridFunction::zeros(c.grid());
            for t in terms.iter().filter(|t| t.flavors == flavors) {
                value.add_assign_unchecked(&t.value, 1.0);
            }
            ExpansionGroup {
                illegal_blocks: illegal_blocks(&c.partition, &flavors),
                correction_axes: correction_axes(&flavors),
                flavors,
                value,
            }
        })
        .collect()
}

/// Sum of one flavor group computed directly, without the other terms.
pub fn group_value(c: &CommutatorSpec, f: &GridFunction, flavors: &[ExpansionFlavor]) -> Result<GridFunction> {
    check_input(c, f)?;
    let axes: Vec<usize> = (0..c.grid().m()).collect();
    let mut out = GridFunction::zeros(c.grid());
    for sides in side_patterns(c.k()) {
        let g = apply_right(c, &sides, f)?;
        let h = apply_left(c, &sides, composed_paraproduct(&c.symbol, &g, &axes, flavors)?)?;
        out.add_assign_unchecked(&h, pattern_sign(&sides));
    }
    Ok(out)
}
