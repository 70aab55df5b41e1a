//! XL over GF(q) in the ring reduced by the field equations x^q = x.
//!
//! Columns are ordered so that every monomial involving a variable other
//! than the last comes first and powers of the last variable come at the
//! end. After forward elimination, rows whose pivot falls in that tail are
//! univariate in the last variable; their common roots are the only values
//! worth substituting. Each substitution leaves a system in one fewer
//! variable, which is solved the same way.

use std::collections::HashMap;

use super::{finish, note_invocation, SolveBudget, SolveError, SolveReport};
use crate::ffield::{FieldElement, FieldSpec};
use crate::mqsys::MQSystem;

/// Exponent vectors are packed one byte per variable into a u128.
pub const MAX_XL_VARIABLES: usize = 16;

type Monomial = u128;

pub fn solve_xl(system: &MQSystem, degree: usize, budget: &SolveBudget) -> Result<SolveReport, SolveError> {
    note_invocation();
    if degree < 2 {
        return Err(SolveError::InvalidDegree(degree));
    }
    if system.variables() > MAX_XL_VARIABLES {
        return Err(SolveError::Unsupported(format!(
            "XL handles at most {MAX_XL_VARIABLES} variables, got {}",
            system.variables()
        )));
    }
    let mut run = Run { degree, budget, work: 0, nodes: 0, complete: true, found: Vec::new() };
    let mut suffix = Vec::with_capacity(system.variables());
    run.node(system.clone(), &mut suffix, true)?;
    let Run { found, complete, work, .. } = run;
    Ok(finish(system, found, complete, work))
}

/// Runs XL at D = 2, 3, … and returns the first complete report with the
/// degree that produced it.
pub fn solve_xl_auto(system: &MQSystem, budget: &SolveBudget) -> Result<(SolveReport, usize), SolveError> {
    let q = system.spec().order() as usize;
    // past this degree every reduced monomial is already a column
    let saturated = system.variables() * (q - 1) + 2;
    let mut last = SolveError::DegreeTooLow { degree: 2 };
    for degree in 2..=saturated.max(2) {
        match solve_xl(system, degree, budget) {
            Ok(report) if report.complete => return Ok((report, degree)),
            Ok(_) => last = SolveError::DegreeTooLow { degree },
            Err(e @ SolveError::DegreeTooLow { .. }) => last = e,
            Err(e) => return Err(e),
        }
    }
    Err(last)
}

struct Run<'a> {
    degree: usize,
    budget: &'a SolveBudget,
    work: u64,
    nodes: u64,
    complete: bool,
    found: Vec<Vec<FieldElement>>,
}

enum Outcome {
    Inconsistent,
    Roots(Vec<FieldElement>),
    Stuck,
}

impl Run<'_> {
    /// `suffix` holds the values fixed so far, last variable first.
    fn node(&mut self, sys: MQSystem, suffix: &mut Vec<FieldElement>, root: bool) -> Result<(), SolveError> {
        self.nodes += 1;
        if self.nodes > self.budget.max_candidates {
            return Err(SolveError::BudgetExceeded {
                what: "XL search nodes",
                needed: self.nodes as u128,
                limit: self.budget.max_candidates,
            });
        }
        let k = sys.variables();
        if k == 0 {
            self.work += 1;
            if (0..sys.equations()).all(|e| sys.constant(e).is_zero()) {
                self.found.push(suffix.iter().rev().copied().collect());
            }
            return Ok(());
        }
        match self.reduce(&sys)? {
            Outcome::Inconsistent => Ok(()),
            Outcome::Stuck if root => Err(SolveError::DegreeTooLow { degree: self.degree }),
            Outcome::Stuck => {
                self.complete = false;
                Ok(())
            }
            Outcome::Roots(values) => {
                for v in values {
                    suffix.push(v);
                    self.node(sys.specialize_last(v), suffix, false)?;
                    suffix.pop();
                }
                Ok(())
            }
        }
    }

    fn reduce(&mut self, sys: &MQSystem) -> Result<Outcome, SolveError> {
        let spec = sys.spec();
        let k = sys.variables();
        let cap = (spec.order() - 1) as u8;
        let space = MonomialSpace::new(k, cap, self.degree);
        let multipliers = monomials_up_to(k, cap, self.degree - 2);
        let rows = sys.equations() * multipliers.len();
        let cols = space.columns.len();
        let cells = rows as u128 * cols as u128;
        if cells > self.budget.max_matrix_cells as u128 {
            return Err(SolveError::BudgetExceeded {
                what: "Macaulay matrix cells",
                needed: cells,
                limit: self.budget.max_matrix_cells,
            });
        }

        let mut mat = Vec::with_capacity(rows * cols);
        for e in 0..sys.equations() {
            let terms = equation_terms(sys, e, cap);
            if terms.is_empty() {
                continue;
            }
            for &u in &multipliers {
                let start = mat.len();
                mat.resize(start + cols, FieldElement::ZERO);
                let row = &mut mat[start..];
                for &(t, c) in &terms {
                    let col = space.index[&reduce(u + t, k, cap)];
                    row[col] = spec.add(row[col], c);
                }
            }
        }
        let rows = mat.len() / cols;
        let pivots = self.echelon(spec, &mut mat, rows, cols);

        let mut univariate = Vec::new();
        for (r, &p) in pivots.iter().enumerate() {
            if p == cols - 1 {
                return Ok(Outcome::Inconsistent);
            }
            if p >= space.pure_start {
                univariate.push(r);
            }
        }
        if univariate.is_empty() {
            // x^q − x is implicitly in the span once D ≥ q
            return Ok(if self.degree >= spec.order() as usize {
                Outcome::Roots(spec.elements().collect())
            } else {
                Outcome::Stuck
            });
        }
        let last_shift = 8 * (k - 1);
        let roots = spec
            .elements()
            .filter(|&v| {
                univariate.iter().all(|&r| {
                    let row = &mat[r * cols..(r + 1) * cols];
                    let mut acc = FieldElement::ZERO;
                    for c in space.pure_start..cols {
                        if !row[c].is_zero() {
                            let e = (space.columns[c] >> last_shift) as u8 as u32;
                            acc = spec.add(acc, spec.mul(row[c], spec.pow(v, e)));
                        }
                    }
                    acc.is_zero()
                })
            })
            .collect();
        Ok(Outcome::Roots(roots))
    }

    /// Forward elimination to row echelon form; returns each nonzero row's
    /// pivot column in order.
    fn echelon(&mut self, spec: &FieldSpec, mat: &mut [FieldElement], rows: usize, cols: usize) -> Vec<usize> {
        let mut pivots = Vec::new();
        let mut rank = 0;
        for col in 0..cols {
            if rank == rows {
                break;
            }
            let Some(p) = (rank..rows).find(|&r| !mat[r * cols + col].is_zero()) else {
                continue;
            };
            if p != rank {
                for c in col..cols {
                    mat.swap(p * cols + c, rank * cols + c);
                }
            }
            let inv = spec.inv(mat[rank * cols + col]).expect("pivot is nonzero");
            spec.scale(&mut mat[rank * cols + col..(rank + 1) * cols], inv);
            let (top, bottom) = mat.split_at_mut((rank + 1) * cols);
            let pivot_row = &top[rank * cols + col..];
            for r in 0..rows - rank - 1 {
                let row = &mut bottom[r * cols + col..(r + 1) * cols];
                let c = row[0];
                if !c.is_zero() {
                    spec.axpy(row, spec.neg(c), pivot_row);
                    self.work += 1;
                }
            }
            pivots.push(col);
            rank += 1;
        }
        pivots
    }
}

struct MonomialSpace {
    columns: Vec<Monomial>,
    index: HashMap<Monomial, usize>,
    pure_start: usize,
}

impl MonomialSpace {
    fn new(k: usize, cap: u8, degree: usize) -> Self {
        let last_mask: Monomial = 0xff << (8 * (k - 1));
        let mut columns = monomials_up_to(k, cap, degree);
        columns.sort_by_key(|&mon| std::cmp::Reverse((mon & !last_mask != 0, total_degree(mon), mon)));
        let pure_start = columns.iter().take_while(|&&mon| mon & !last_mask != 0).count();
        let index = columns.iter().enumerate().map(|(i, &mon)| (mon, i)).collect();
        MonomialSpace { columns, index, pure_start }
    }
}

fn total_degree(mon: Monomial) -> u32 {
    mon.to_le_bytes().iter().map(|&b| b as u32).sum()
}

/// All exponent vectors in `k` variables with entries ≤ cap and total
/// degree ≤ `degree`.
fn monomials_up_to(k: usize, cap: u8, degree: usize) -> Vec<Monomial> {
    fn rec(var: usize, k: usize, cap: u8, left: usize, acc: Monomial, out: &mut Vec<Monomial>) {
        if var == k {
            out.push(acc);
            return;
        }
        for e in 0..=(cap as usize).min(left) {
            rec(var + 1, k, cap, left - e, acc | ((e as Monomial) << (8 * var)), out);
        }
    }
    let mut out = Vec::new();
    rec(0, k, cap, degree, 0, &mut out);
    out
}

/// Applies x^q = x to every exponent above q − 1.
fn reduce(mut mon: Monomial, k: usize, cap: u8) -> Monomial {
    for var in 0..k {
        let shift = 8 * var;
        let mut e = ((mon >> shift) & 0xff) as u8;
        if e > cap {
            while e > cap {
                e -= cap;
            }
            mon = (mon & !(0xff << shift)) | ((e as Monomial) << shift);
        }
    }
    mon
}

fn equation_terms(sys: &MQSystem, e: usize, cap: u8) -> Vec<(Monomial, FieldElement)> {
    let k = sys.variables();
    let unit = |i: usize| -> Monomial { 1 << (8 * i) };
    let mut terms = Vec::new();
    for i in 0..k {
        for j in i..k {
            let c = sys.quad(e, i, j);
            if !c.is_zero() {
                terms.push((reduce(unit(i) + unit(j), k, cap), c));
            }
        }
    }
    for i in 0..k {
        let c = sys.lin(e, i);
        if !c.is_zero() {
            terms.push((unit(i), c));
        }
    }
    let c = sys.constant(e);
    if !c.is_zero() {
        terms.push((0, c));
    }
    terms
}
