use super::{finish, note_invocation, SolveBudget, SolveError, SolveReport};
use crate::ffield::{FieldElement, FieldSpec};
use crate::mqsys::{quad_index, MQSystem};

/// Enumerates all of GF(q)^n, x₀ outermost, so roots come out in
/// lexicographic order.
///
/// Fixing variables one at a time keeps, for every equation, the constant
/// and linear parts of the residual polynomial in the free variables, so a
/// leaf costs O(m) instead of O(m·n²).
pub fn solve_bruteforce(system: &MQSystem, budget: &SolveBudget) -> Result<SolveReport, SolveError> {
    note_invocation();
    let spec = system.spec();
    let (m, n) = (system.equations(), system.variables());
    let total = (spec.order() as u128).checked_pow(n as u32).unwrap_or(u128::MAX);
    if total > budget.max_candidates as u128 {
        return Err(SolveError::BudgetExceeded {
            what: "candidate assignments",
            needed: total,
            limit: budget.max_candidates,
        });
    }

    if spec.order() == 2 && m <= 64 && (1..64).contains(&n) {
        let (found, work) = gray_gf2(system);
        return Ok(finish(system, found, true, work));
    }

    // consts[d][k], lins[d][k*n + i]: residual after fixing x_0..x_{d-1}
    let mut consts = vec![vec![FieldElement::ZERO; m]; n + 1];
    let mut lins = vec![vec![FieldElement::ZERO; m * n]; n + 1];
    for k in 0..m {
        consts[0][k] = system.constant(k);
        for i in 0..n {
            lins[0][k * n + i] = system.lin(k, i);
        }
    }

    let mut search = Search {
        system,
        spec,
        m,
        n,
        consts,
        lins,
        x: vec![FieldElement::ZERO; n],
        found: Vec::new(),
        work: 0,
    };
    if n == 0 {
        if search.consts[0].iter().all(|c| c.is_zero()) {
            search.found.push(Vec::new());
        }
        search.work = 1;
    } else {
        search.descend(0);
    }
    let Search { found, work, .. } = search;
    Ok(finish(system, found, true, work))
}

/// GF(2) enumeration in Gray-code order with all m residuals packed in one
/// word. Flipping x_k adds ∂F/∂x_k, which is kept current by adding the
/// constant second derivative α_{k,j} whenever a higher bit j flipped since
/// x_k last did. Each step costs two XORs.
fn gray_gf2(system: &MQSystem) -> (Vec<Vec<FieldElement>>, u64) {
    let (m, n) = (system.equations(), system.variables());
    let word = |f: &dyn Fn(usize) -> FieldElement| -> u64 {
        (0..m).fold(0u64, |w, k| w | ((f(k).value() as u64) << k))
    };
    // second[i * n + j] for i < j
    let mut second = vec![0u64; n * n];
    for i in 0..n {
        for j in i + 1..n {
            second[i * n + j] = word(&|k| system.quad(k, i, j));
        }
    }
    // At the first flip of x_k every higher bit is 0 and among the lower
    // bits only x_{k-1} is set.
    let mut first: Vec<u64> = (0..n)
        .map(|k| {
            let d = word(&|k2| system.lin(k2, k)) ^ word(&|k2| system.quad(k2, k, k));
            if k == 0 { d } else { d ^ second[(k - 1) * n + k] }
        })
        .collect();

    let mut y = word(&|k| system.constant(k));
    let mut x = 0u64;
    let mut hits = Vec::new();
    if y == 0 {
        hits.push(x);
    }
    let total = 1u64 << n;
    for c in 1..total {
        let k1 = c.trailing_zeros() as usize;
        let rest = c & (c - 1);
        if rest != 0 {
            let k2 = rest.trailing_zeros() as usize;
            first[k1] ^= second[k1 * n + k2];
        }
        y ^= first[k1];
        x ^= 1 << k1;
        if y == 0 {
            hits.push(x);
        }
    }
    let found = hits
        .into_iter()
        .map(|bits| (0..n).map(|i| FieldElement::from_raw((bits >> i & 1) as u8)).collect())
        .collect();
    (found, total)
}

struct Search<'a> {
    system: &'a MQSystem,
    spec: &'a FieldSpec,
    m: usize,
    n: usize,
    consts: Vec<Vec<FieldElement>>,
    lins: Vec<Vec<FieldElement>>,
    x: Vec<FieldElement>,
    found: Vec<Vec<FieldElement>>,
    work: u64,
}

impl Search<'_> {
    fn descend(&mut self, d: usize) {
        let (m, n, f) = (self.m, self.n, self.spec);
        if d + 1 == n {
            for v in f.elements() {
                self.work += 1;
                let v2 = f.mul(v, v);
                let ok = (0..m).all(|k| {
                    let c = self.consts[d][k];
                    let l = self.lins[d][k * n + d];
                    let a = self.system.quad(k, d, d);
                    f.add(c, f.add(f.mul(l, v), f.mul(a, v2))).is_zero()
                });
                if ok {
                    self.x[d] = v;
                    self.found.push(self.x.clone());
                }
            }
            return;
        }
        let base = quad_index(n, d, d);
        for v in f.elements() {
            let v2 = f.mul(v, v);
            for k in 0..m {
                let eq = self.system.equation(k);
                let l = self.lins[d][k * n + d];
                self.consts[d + 1][k] = f.add(self.consts[d][k], f.add(f.mul(l, v), f.mul(eq[base], v2)));
                for i in d + 1..n {
                    // α_{d,i} follows α_{d,d} in lexicographic order
                    let alpha = eq[base + (i - d)];
                    self.lins[d + 1][k * n + i] = f.add(self.lins[d][k * n + i], f.mul(alpha, v));
                }
            }
            self.x[d] = v;
            self.descend(d + 1);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ffield::FieldSpec;
    use crate::mqsys::{derive_seed, generate_system};

    /// Second enumerator: decode each index into a vector and evaluate.
    fn naive_roots(sys: &MQSystem) -> Vec<Vec<FieldElement>> {
        let spec = sys.spec();
        let q = spec.order() as u64;
        let n = sys.variables();
        let mut out = Vec::new();
        for idx in 0..q.pow(n as u32) {
            let mut rest = idx;
            let mut x = vec![FieldElement::ZERO; n];
            for slot in x.iter_mut().rev() {
                *slot = spec.element((rest % q) as u16).unwrap();
                rest /= q;
            }
            if sys.is_solution(&x).unwrap() {
                out.push(x);
            }
        }
        out
    }

    #[test]
    fn single_linear_equation() {
        let mut sys = MQSystem::zero(FieldSpec::gf2(), 1, 1);
        sys.set_lin(0, 0, FieldElement::ONE);
        sys.set_constant(0, FieldElement::ONE);
        let r = solve_bruteforce(&sys, &SolveBudget::default()).unwrap();
        assert_eq!(r.solutions, vec![vec![FieldElement::ONE]]);
        assert!(r.complete);
    }

    #[test]
    fn zero_system_has_every_vector() {
        let sys = MQSystem::zero(FieldSpec::gf2(), 2, 3);
        let r = solve_bruteforce(&sys, &SolveBudget::default()).unwrap();
        assert_eq!(r.solutions.len(), 8);
        assert_eq!(r.solutions, naive_roots(&sys));
    }

    #[test]
    fn matches_second_enumerator_gf2_12x12() {
        let spec = FieldSpec::gf2();
        let mut total = 0;
        for nonce in 0..6u64 {
            let sys = generate_system(&derive_seed(&[0x42; 32], nonce), &spec, 12, 12);
            let r = solve_bruteforce(&sys, &SolveBudget::default()).unwrap();
            assert_eq!(r.solutions, naive_roots(&sys));
            total += r.solutions.len();
        }
        assert!(total > 0);
    }

    #[test]
    fn matches_second_enumerator_small_fields() {
        for (q, n) in [(3u16, 5usize), (4, 4), (5, 4), (16, 3), (7, 4)] {
            let spec = FieldSpec::new(q).unwrap();
            for nonce in 0..5u64 {
                let sys = generate_system(&derive_seed(&[q as u8; 32], nonce), &spec, n - 1, n);
                let r = solve_bruteforce(&sys, &SolveBudget::default()).unwrap();
                assert_eq!(r.solutions, naive_roots(&sys), "q={q} nonce={nonce}");
            }
        }
    }

    #[test]
    fn gray_code_path_matches_second_enumerator() {
        let spec = FieldSpec::gf2();
        for (m, n) in [(1usize, 1usize), (3, 2), (5, 7), (10, 10), (20, 9), (64, 6)] {
            for nonce in 0..20u64 {
                let sys = generate_system(&derive_seed(&[m as u8; 32], nonce), &spec, m, n);
                let r = solve_bruteforce(&sys, &SolveBudget::default()).unwrap();
                assert_eq!(r.solutions, naive_roots(&sys), "m={m} n={n} nonce={nonce}");
            }
        }
    }

    #[test]
    fn wide_gf2_systems_use_the_generic_path() {
        let spec = FieldSpec::gf2();
        let sys = generate_system(&derive_seed(&[1; 32], 0), &spec, 70, 5);
        let r = solve_bruteforce(&sys, &SolveBudget::default()).unwrap();
        assert_eq!(r.solutions, naive_roots(&sys));
        let zero = MQSystem::zero(spec, 70, 4);
        assert_eq!(solve_bruteforce(&zero, &SolveBudget::default()).unwrap().solutions.len(), 16);
    }

    #[test]
    fn budget_is_enforced() {
        let sys = MQSystem::zero(FieldSpec::gf16(), 1, 8);
        let err = solve_bruteforce(&sys, &SolveBudget::new(1000, 1)).unwrap_err();
        assert!(matches!(err, SolveError::BudgetExceeded { needed, .. } if needed == 1 << 32));
    }
}
