//! Lazy Gaussian elimination over GF(2) with b-bit right-hand sides, and
//! over GF(3).
//!
//! Variables are idle, active or solved; equations are sparse or dense.
//! Starting from all-idle, all-sparse, the solver repeatedly
//!
//! 1. turns a sparse equation with no idle variables dense (or discards it
//!    when it is an identity, or fails when it is impossible);
//! 2. solves the single idle variable of a sparse equation with one idle
//!    variable, making the equation dense and eliminating that variable from
//!    every other equation;
//! 3. otherwise activates the idle variable of largest weight.
//!
//! When no sparse equation is left, the dense equations without solved
//! variables are a small system in the active variables, solved by ordinary
//! elimination; solved variables follow by back substitution. Dense rows are
//! bit vectors (GF(2)) or packed 2-bit lanes (GF(3)) manipulated with the
//! [`bitops`](crate::bitops) kernels.

use std::collections::VecDeque;

use thiserror::Error;

use crate::bitops::{iterate_nonzero_lanes, iterate_ones, Kernels, Sign, LANES_PER_WORD};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Field {
    /// GF(2) coefficients; right-hand sides are vectors of up to 64 bits.
    Gf2,
    /// GF(3) coefficients and right-hand sides.
    Gf3,
}

impl Field {
    fn words_for(self, num_vars: usize) -> usize {
        match self {
            Field::Gf2 => num_vars.div_ceil(64),
            Field::Gf3 => num_vars.div_ceil(LANES_PER_WORD),
        }
    }

    #[inline]
    fn coeff(self, words: &[u64], var: usize) -> u8 {
        match self {
            Field::Gf2 => (words[var / 64] >> (var % 64) & 1) as u8,
            Field::Gf3 => (words[var / 32] >> (2 * (var % 32)) & 3) as u8,
        }
    }

    #[inline]
    fn set_coeff(self, words: &mut [u64], var: usize, c: u8) {
        match self {
            Field::Gf2 => {
                let bit = 1u64 << (var % 64);
                if c & 1 != 0 {
                    words[var / 64] |= bit;
                } else {
                    words[var / 64] &= !bit;
                }
            }
            Field::Gf3 => {
                let shift = 2 * (var % 32);
                words[var / 32] = words[var / 32] & !(3 << shift) | u64::from(c % 3) << shift;
            }
        }
    }

    fn support(self, words: &[u64]) -> Box<dyn Iterator<Item = usize> + '_> {
        match self {
            Field::Gf2 => Box::new(iterate_ones(words)),
            Field::Gf3 => Box::new(iterate_nonzero_lanes(words)),
        }
    }
}

/// A sparse equation `Σ coeff · x_var = rhs`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SparseEquation {
    pub terms: Vec<(usize, u8)>,
    pub rhs: u64,
}

impl SparseEquation {
    pub fn gf2(vars: &[usize], rhs: u64) -> Self {
        SparseEquation {
            terms: vars.iter().map(|&v| (v, 1)).collect(),
            rhs,
        }
    }

    pub fn gf3(terms: &[(usize, u8)], rhs: u8) -> Self {
        SparseEquation {
            terms: terms.to_vec(),
            rhs: u64::from(rhs),
        }
    }

    /// Whether `values` satisfies the equation.
    pub fn holds(&self, field: Field, values: &[u64]) -> bool {
        match field {
            Field::Gf2 => self.terms.iter().fold(0, |acc, &(v, _)| acc ^ values[v]) == self.rhs,
            Field::Gf3 => {
                let sum: u64 = self.terms.iter().map(|&(v, c)| u64::from(c) * values[v]).sum();
                sum % 3 == self.rhs % 3
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SolverOptions {
    pub field: Field,
    pub kernels: Kernels,
    /// `false` skips straight to dense elimination of the whole system.
    pub lazy: bool,
    /// Value of variables left unconstrained.
    pub free_default: u64,
    /// Re-checks the solver invariants after every step (slow).
    pub check_invariants: bool,
}

impl SolverOptions {
    pub fn new(field: Field) -> Self {
        SolverOptions {
            field,
            kernels: Kernels::Broadword,
            lazy: true,
            free_default: 0,
            check_invariants: false,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SolveStats {
    pub num_vars: usize,
    pub num_equations: usize,
    /// Size of the system handed to dense elimination.
    pub active: usize,
    pub solved: usize,
    pub discarded: usize,
}

impl SolveStats {
    pub fn active_fraction(&self) -> f64 {
        if self.num_vars == 0 {
            0.0
        } else {
            self.active as f64 / self.num_vars as f64
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Solution {
    pub values: Vec<u64>,
    pub stats: SolveStats,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Error)]
pub enum Unsolvable {
    #[error("equation {0} reduced to 0 = nonzero")]
    Impossible(usize),
    #[error("the dense subsystem is inconsistent")]
    Singular,
}

/// Coefficients and right-hand side of one dense equation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DenseRow {
    pub words: Vec<u64>,
    pub rhs: u64,
}

impl DenseRow {
    pub fn from_sparse(eq: &SparseEquation, num_vars: usize, field: Field) -> Self {
        let mut words = vec![0; field.words_for(num_vars)];
        for &(v, c) in &eq.terms {
            field.set_coeff(&mut words, v, c);
        }
        DenseRow { words, rhs: eq.rhs }
    }

    pub fn coeff(&self, field: Field, var: usize) -> u8 {
        field.coeff(&self.words, var)
    }
}

/// Rows stored back to back.
struct Rows {
    words: Vec<u64>,
    width: usize,
    rhs: Vec<u64>,
}

impl Rows {
    fn new(width: usize, count: usize) -> Self {
        Rows {
            words: vec![0; width * count],
            width,
            rhs: vec![0; count],
        }
    }

    #[inline]
    fn row(&self, i: usize) -> &[u64] {
        &self.words[i * self.width..(i + 1) * self.width]
    }

    #[inline]
    fn row_mut(&mut self, i: usize) -> &mut [u64] {
        &mut self.words[i * self.width..(i + 1) * self.width]
    }

    /// `(row dst mutably, row src)`, `dst != src`.
    #[inline]
    fn pair(&mut self, dst: usize, src: usize) -> (&mut [u64], &[u64]) {
        debug_assert_ne!(dst, src);
        let w = self.width;
        if dst < src {
            let (a, b) = self.words.split_at_mut(src * w);
            (&mut a[dst * w..(dst + 1) * w], &b[..w])
        } else {
            let (a, b) = self.words.split_at_mut(dst * w);
            (&mut b[..w], &a[src * w..(src + 1) * w])
        }
    }

    fn swap(&mut self, i: usize, j: usize) {
        if i == j {
            return;
        }
        for k in 0..self.width {
            self.words.swap(i * self.width + k, j * self.width + k);
        }
        self.rhs.swap(i, j);
    }
}

/// Subtracts the multiple of `pivot` that cancels `var` from (`dst`, `dst_rhs`).
#[inline]
#[allow(clippy::too_many_arguments)]
fn eliminate_words(
    dst: &mut [u64],
    dst_rhs: &mut u64,
    pivot: &[u64],
    pivot_rhs: u64,
    var: usize,
    field: Field,
    kernels: Kernels,
) {
    match field {
        Field::Gf2 => {
            debug_assert_eq!(field.coeff(dst, var), 1);
            kernels.xor(dst, pivot);
            *dst_rhs ^= pivot_rhs;
        }
        Field::Gf3 => {
            let cd = field.coeff(dst, var);
            let cp = field.coeff(pivot, var);
            debug_assert!(cd != 0 && cp != 0);
            // dst − (cd / cp)·pivot, and 1/c = c in GF(3).
            if cd * cp % 3 == 1 {
                kernels.mod3_addsub(dst, pivot, Sign::Minus);
                *dst_rhs = (*dst_rhs + 3 - pivot_rhs) % 3;
            } else {
                kernels.mod3_addsub(dst, pivot, Sign::Plus);
                *dst_rhs = (*dst_rhs + pivot_rhs) % 3;
            }
        }
    }
}

/// Removes `var` from `from` using `pivot`, which must contain `var`. A row
/// without `var` is left untouched.
pub fn eliminate(from: &mut DenseRow, pivot: &DenseRow, var: usize, field: Field, kernels: Kernels) {
    if field.coeff(&from.words, var) == 0 {
        return;
    }
    assert_eq!(from.words.len(), pivot.words.len());
    eliminate_words(&mut from.words, &mut from.rhs, &pivot.words, pivot.rhs, var, field, kernels);
}

#[inline]
fn negate(words: &mut [u64], rhs: &mut u64, kernels: Kernels) {
    kernels.mod3_neg(words);
    *rhs = (3 - *rhs % 3) % 3;
}

/// `Σ_j row_j · x_j`: XOR of the selected b-bit values over GF(2), or the
/// reduced scalar product of two packed vectors over GF(3).
#[inline]
fn row_times(field: Field, kernels: Kernels, row: &[u64], values: &[u64], packed: &[u64]) -> u64 {
    match field {
        Field::Gf2 => iterate_ones(row).fold(0, |acc, j| acc ^ values[j]),
        Field::Gf3 => u64::from(kernels.mod3_dot(row, packed)),
    }
}

/// Gaussian elimination on rows over `num_vars` variables. Unconstrained
/// variables get `free_default`. Fails only if the rows are inconsistent.
pub fn dense_solve(
    rows: &[DenseRow],
    num_vars: usize,
    field: Field,
    kernels: Kernels,
    free_default: u64,
) -> Result<Vec<u64>, Unsolvable> {
    let width = field.words_for(num_vars);
    let mut m = Rows::new(width, rows.len());
    for (i, r) in rows.iter().enumerate() {
        assert_eq!(r.words.len(), width);
        m.row_mut(i).copy_from_slice(&r.words);
        m.rhs[i] = r.rhs;
    }
    solve_rows(&mut m, num_vars, field, kernels, free_default)
}

fn solve_rows(m: &mut Rows, num_vars: usize, field: Field, kernels: Kernels, free_default: u64) -> Result<Vec<u64>, Unsolvable> {
    let count = m.rhs.len();
    let mut pivots = Vec::new();
    let mut next = 0;
    for col in 0..num_vars {
        if next == count {
            break;
        }
        let Some(p) = (next..count).find(|&i| field.coeff(m.row(i), col) != 0) else {
            continue;
        };
        m.swap(p, next);
        if field == Field::Gf3 && field.coeff(m.row(next), col) == 2 {
            let w = m.width;
            negate(&mut m.words[next * w..(next + 1) * w], &mut m.rhs[next], kernels);
        }
        for q in next + 1..count {
            if field.coeff(m.row(q), col) != 0 {
                let pivot_rhs = m.rhs[next];
                let mut rhs = m.rhs[q];
                let (dst, src) = m.pair(q, next);
                eliminate_words(dst, &mut rhs, src, pivot_rhs, col, field, kernels);
                m.rhs[q] = rhs;
            }
        }
        pivots.push((col, next));
        next += 1;
    }
    if m.rhs[next..].iter().any(|&r| r != 0) {
        return Err(Unsolvable::Singular);
    }

    let mut values = vec![free_default; num_vars];
    let mut packed = vec![0u64; if field == Field::Gf3 { field.words_for(num_vars) } else { 0 }];
    for &(col, _) in &pivots {
        values[col] = 0;
    }
    if field == Field::Gf3 {
        for (v, &x) in values.iter().enumerate() {
            field.set_coeff(&mut packed, v, x as u8);
        }
    }
    for &(col, row) in pivots.iter().rev() {
        let dot = row_times(field, kernels, m.row(row), &values, &packed);
        let x = match field {
            Field::Gf2 => m.rhs[row] ^ dot,
            Field::Gf3 => (m.rhs[row] + 3 - dot) % 3,
        };
        values[col] = x;
        if field == Field::Gf3 {
            field.set_coeff(&mut packed, col, x as u8);
        }
    }
    Ok(values)
}

/// Assigns solved variables from their defining equations, last solved first.
/// `solved` holds `(variable, defining row)` pairs in solve order; the rows
/// must only involve the variable itself and already assigned ones.
pub fn back_substitute(solved: &[(usize, DenseRow)], values: &mut [u64], field: Field, kernels: Kernels) {
    let mut packed = Vec::new();
    if field == Field::Gf3 {
        packed = vec![0; field.words_for(values.len())];
        for (v, &x) in values.iter().enumerate() {
            field.set_coeff(&mut packed, v, x as u8);
        }
    }
    for (var, row) in solved.iter().rev() {
        substitute_one(*var, &row.words, row.rhs, values, &mut packed, field, kernels);
    }
}

#[inline]
fn substitute_one(var: usize, row: &[u64], rhs: u64, values: &mut [u64], packed: &mut [u64], field: Field, kernels: Kernels) {
    match field {
        Field::Gf2 => {
            let others = iterate_ones(row).filter(|&j| j != var).fold(0, |acc, j| acc ^ values[j]);
            values[var] = rhs ^ others;
        }
        Field::Gf3 => {
            field.set_coeff(packed, var, 0);
            let dot = u64::from(kernels.mod3_dot(row, packed));
            let c = u64::from(field.coeff(row, var));
            // c⁻¹ = c in GF(3).
            let x = (rhs + 3 - dot) % 3 * c % 3;
            values[var] = x;
            field.set_coeff(packed, var, x as u8);
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum VarState {
    Idle,
    Active,
    Solved,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum EqState {
    Sparse,
    Dense,
    Discarded,
}

/// Solves `equations` over `num_vars` variables.
pub fn lazy_solve(equations: &[SparseEquation], num_vars: usize, opts: &SolverOptions) -> Result<Solution, Unsolvable> {
    let field = opts.field;
    let kernels = opts.kernels;
    let width = field.words_for(num_vars);
    let n_eq = equations.len();
    let mut rows = Rows::new(width, n_eq);
    for (i, eq) in equations.iter().enumerate() {
        let row = rows.row_mut(i);
        for &(v, c) in &eq.terms {
            debug_assert_eq!(field.coeff(row, v), 0, "repeated variable");
            field.set_coeff(row, v, c);
        }
        rows.rhs[i] = match field {
            Field::Gf2 => eq.rhs,
            Field::Gf3 => eq.rhs % 3,
        };
    }
    let mut stats = SolveStats {
        num_vars,
        num_equations: n_eq,
        ..Default::default()
    };

    if !opts.lazy {
        let mut values = solve_rows(&mut rows, num_vars, field, kernels, opts.free_default)?;
        let used = variables_in(equations, num_vars);
        stats.active = used.iter().filter(|&&u| u).count();
        for (v, &u) in used.iter().enumerate() {
            if !u {
                values[v] = opts.free_default;
            }
        }
        return Ok(Solution { values, stats });
    }

    // Variable → equations incidence, as compressed rows.
    let mut weight = vec![0usize; num_vars];
    for eq in equations {
        for &(v, _) in &eq.terms {
            weight[v] += 1;
        }
    }
    let mut var_start = vec![0usize; num_vars + 1];
    for v in 0..num_vars {
        var_start[v + 1] = var_start[v] + weight[v];
    }
    let mut var_eqs = vec![0usize; var_start[num_vars]];
    let mut fill = var_start.clone();
    for (i, eq) in equations.iter().enumerate() {
        for &(v, _) in &eq.terms {
            var_eqs[fill[v]] = i;
            fill[v] += 1;
        }
    }

    // Idle variables by decreasing weight, ties by increasing id (counting sort).
    let max_weight = weight.iter().copied().max().unwrap_or(0);
    let mut by_weight = vec![0usize; max_weight + 2];
    for &w in &weight {
        by_weight[max_weight - w + 1] += 1;
    }
    for i in 1..by_weight.len() {
        by_weight[i] += by_weight[i - 1];
    }
    let mut order = vec![0usize; num_vars];
    for v in 0..num_vars {
        let slot = &mut by_weight[max_weight - weight[v]];
        order[*slot] = v;
        *slot += 1;
    }

    let mut var_state = vec![VarState::Idle; num_vars];
    let mut eq_state = vec![EqState::Sparse; n_eq];
    let mut priority: Vec<usize> = equations.iter().map(|e| e.terms.len()).collect();
    let mut deque = VecDeque::new();
    for (i, &p) in priority.iter().enumerate() {
        match p {
            0 => deque.push_front(i),
            1 => deque.push_back(i),
            _ => {}
        }
    }
    let mut sparse_left = n_eq;
    let mut next_idle = 0;
    let mut solved: Vec<(usize, usize)> = Vec::new();
    let mut dense: Vec<usize> = Vec::new();

    while sparse_left > 0 {
        if let Some(e) = deque.pop_front() {
            if eq_state[e] != EqState::Sparse {
                continue;
            }
            match priority[e] {
                0 => {
                    sparse_left -= 1;
                    if rows.row(e).iter().all(|&w| w == 0) {
                        if rows.rhs[e] != 0 {
                            return Err(Unsolvable::Impossible(e));
                        }
                        eq_state[e] = EqState::Discarded;
                        stats.discarded += 1;
                    } else {
                        eq_state[e] = EqState::Dense;
                        dense.push(e);
                    }
                }
                1 => {
                    sparse_left -= 1;
                    let s = field
                        .support(rows.row(e))
                        .find(|&v| var_state[v] == VarState::Idle)
                        .expect("priority-1 equation without idle variable");
                    var_state[s] = VarState::Solved;
                    eq_state[e] = EqState::Dense;
                    solved.push((s, e));
                    for &f in &var_eqs[var_start[s]..var_start[s + 1]] {
                        if f == e || eq_state[f] != EqState::Sparse {
                            continue;
                        }
                        let pivot_rhs = rows.rhs[e];
                        let mut rhs = rows.rhs[f];
                        let (dst, src) = rows.pair(f, e);
                        eliminate_words(dst, &mut rhs, src, pivot_rhs, s, field, kernels);
                        rows.rhs[f] = rhs;
                        priority[f] -= 1;
                        match priority[f] {
                            0 => deque.push_front(f),
                            1 => deque.push_back(f),
                            _ => {}
                        }
                    }
                }
                p => unreachable!("equation of priority {p} in the deque"),
            }
        } else {
            while var_state[order[next_idle]] != VarState::Idle {
                next_idle += 1;
            }
            let v = order[next_idle];
            next_idle += 1;
            var_state[v] = VarState::Active;
            stats.active += 1;
            for &f in &var_eqs[var_start[v]..var_start[v + 1]] {
                if eq_state[f] != EqState::Sparse {
                    continue;
                }
                priority[f] -= 1;
                match priority[f] {
                    0 => deque.push_front(f),
                    1 => deque.push_back(f),
                    _ => {}
                }
            }
        }
        if opts.check_invariants {
            check_invariants(&rows, field, &var_state, &eq_state, &solved, &priority);
        }
    }
    stats.solved = solved.len();

    // Dense system on the active variables only.
    let active: Vec<usize> = (0..num_vars).filter(|&v| var_state[v] == VarState::Active).collect();
    let mut column = vec![usize::MAX; num_vars];
    for (c, &v) in active.iter().enumerate() {
        column[v] = c;
    }
    let compact_width = field.words_for(active.len());
    let mut compact = Rows::new(compact_width, dense.len());
    for (i, &e) in dense.iter().enumerate() {
        let src = &rows.words[e * width..(e + 1) * width];
        let dst = &mut compact.words[i * compact_width..(i + 1) * compact_width];
        for v in field.support(src) {
            debug_assert_eq!(var_state[v], VarState::Active);
            field.set_coeff(dst, column[v], field.coeff(src, v));
        }
        compact.rhs[i] = rows.rhs[e];
    }
    let active_values = solve_rows(&mut compact, active.len(), field, kernels, opts.free_default)?;

    let mut values = vec![opts.free_default; num_vars];
    for (&v, &x) in active.iter().zip(&active_values) {
        values[v] = x;
    }
    for &(s, _) in &solved {
        values[s] = 0;
    }
    let mut packed = Vec::new();
    if field == Field::Gf3 {
        packed = vec![0; width];
        for (v, &x) in values.iter().enumerate() {
            field.set_coeff(&mut packed, v, x as u8);
        }
    }
    for &(s, e) in solved.iter().rev() {
        substitute_one(s, rows.row(e), rows.rhs[e], &mut values, &mut packed, field, kernels);
    }
    Ok(Solution { values, stats })
}

fn variables_in(equations: &[SparseEquation], num_vars: usize) -> Vec<bool> {
    let mut used = vec![false; num_vars];
    for eq in equations {
        for &(v, _) in &eq.terms {
            used[v] = true;
        }
    }
    used
}

fn check_invariants(
    rows: &Rows,
    field: Field,
    var_state: &[VarState],
    eq_state: &[EqState],
    solved: &[(usize, usize)],
    priority: &[usize],
) {
    let mut defining = vec![0usize; var_state.len()];
    for (e, &state) in eq_state.iter().enumerate() {
        let support: Vec<usize> = field.support(rows.row(e)).collect();
        let solved_here = support.iter().filter(|&&v| var_state[v] == VarState::Solved).count();
        assert!(solved_here <= 1, "equation {e} has {solved_here} solved variables");
        match state {
            EqState::Dense => {
                assert!(support.iter().all(|&v| var_state[v] != VarState::Idle), "dense equation {e} has idle variables");
                for &v in &support {
                    if var_state[v] == VarState::Solved {
                        defining[v] += 1;
                    }
                }
            }
            EqState::Sparse => {
                let idle = support.iter().filter(|&&v| var_state[v] == VarState::Idle).count();
                assert_eq!(idle, priority[e], "priority of equation {e}");
                assert_eq!(solved_here, 0, "sparse equation {e} holds a solved variable");
            }
            EqState::Discarded => assert!(support.is_empty()),
        }
    }
    for &(s, _) in solved {
        assert_eq!(defining[s], 1, "solved variable {s} appears in {} dense equations", defining[s]);
    }
}
