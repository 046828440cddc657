//! Seeded generator of small random linear Horn systems, as SMT-LIB text.
//!
//! Systems are kept small enough to check exhaustively on a narrow
//! domain: at most four relations of arity at most two, one to
//! six clauses, coefficients in `[-3, 3]`, and fact clauses whose integer
//! variables are range-restricted.

use std::fmt::Write;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::term::Sort;

const MAX_RELATIONS: usize = 4;
const MAX_ARITY: usize = 2;
const MAX_CLAUSES: usize = 6;
const COEFF: i64 = 3;

/// Seed for the `i`-th system of a run seeded with `seed`.
pub fn system_seed(seed: u64, i: u64) -> u64 {
    seed.wrapping_mul(1_000_003).wrapping_add(i)
}

/// `count` systems, each generated from its own [`system_seed`].
pub fn random_systems(seed: u64, count: usize) -> impl Iterator<Item = String> {
    (0..count as u64).map(move |i| {
        let mut rng = ChaCha8Rng::seed_from_u64(system_seed(seed, i));
        random_system(&mut rng)
    })
}

struct Gen<'r, R: Rng> {
    rng: &'r mut R,
    /// Variables in scope for the clause being built.
    vars: Vec<(String, Sort)>,
}

impl<R: Rng> Gen<'_, R> {
    fn coeff(&mut self) -> i64 {
        self.rng.gen_range(-COEFF..=COEFF)
    }

    fn ints(&self) -> Vec<String> {
        self.vars.iter().filter(|(_, s)| *s == Sort::Int).map(|(n, _)| n.clone()).collect()
    }

    fn bools(&self) -> Vec<String> {
        self.vars.iter().filter(|(_, s)| *s == Sort::Bool).map(|(n, _)| n.clone()).collect()
    }

    /// `c`, `v`, `(+ v c)` or `(+ (* a v) c)`.
    fn linear(&mut self) -> String {
        let ints = self.ints();
        let c = self.coeff();
        if ints.is_empty() || self.rng.gen_bool(0.15) {
            return lit(c);
        }
        let v = ints.choose(self.rng).unwrap().clone();
        match self.rng.gen_range(0..4) {
            0 => v,
            1 | 2 => format!("(+ {v} {})", lit(c)),
            _ => {
                let a = self.coeff();
                if ints.len() > 1 && self.rng.gen_bool(0.5) {
                    let w = ints.choose(self.rng).unwrap();
                    format!("(- (* {} {v}) {w})", lit(a))
                } else {
                    format!("(+ (* {} {v}) {})", lit(a), lit(c))
                }
            }
        }
    }

    fn atom(&mut self) -> String {
        let bools = self.bools();
        if !bools.is_empty() && self.rng.gen_bool(0.3) {
            let b = bools.choose(self.rng).unwrap();
            return if self.rng.gen_bool(0.5) { b.clone() } else { format!("(not {b})") };
        }
        let op = *["<", "<=", ">", ">=", "=", "distinct"].choose(self.rng).unwrap();
        let (a, b) = (self.linear(), self.linear());
        format!("({op} {a} {b})")
    }

    fn constraint(&mut self) -> String {
        match self.rng.gen_range(0..6) {
            0 => "true".into(),
            1 | 2 => self.atom(),
            3 => format!("(and {} {})", self.atom(), self.atom()),
            4 => format!("(or {} {})", self.atom(), self.atom()),
            _ => format!("(not {})", self.atom()),
        }
    }

    fn value(&mut self, sort: Sort) -> String {
        match sort {
            Sort::Int => self.linear(),
            Sort::Bool => {
                let bools = self.bools();
                match self.rng.gen_range(0..3) {
                    0 if !bools.is_empty() => bools.choose(self.rng).unwrap().clone(),
                    1 => self.atom(),
                    _ => if self.rng.gen_bool(0.5) { "true" } else { "false" }.into(),
                }
            }
        }
    }
}

fn lit(i: i64) -> String {
    if i < 0 {
        format!("(- {})", -i)
    } else {
        i.to_string()
    }
}

fn app(name: &str, args: &[String]) -> String {
    if args.is_empty() {
        name.to_string()
    } else {
        format!("({name} {})", args.join(" "))
    }
}

fn binders(vars: &[(String, Sort)]) -> String {
    let parts: Vec<String> = vars.iter().map(|(n, s)| format!("({n} {s})")).collect();
    format!("({})", parts.join(" "))
}

pub fn random_system(rng: &mut impl Rng) -> String {
    let nrel = rng.gen_range(1..=MAX_RELATIONS);
    let mut rels: Vec<(String, Vec<Sort>)> = Vec::new();
    for i in 0..nrel {
        let arity = rng.gen_range(0..=MAX_ARITY);
        let sorts = (0..arity).map(|_| if rng.gen_bool(0.15) { Sort::Bool } else { Sort::Int }).collect();
        rels.push((format!("R{i}"), sorts));
    }

    let mut out = String::from("(set-logic HORN)\n");
    for (name, sorts) in &rels {
        let s: Vec<String> = sorts.iter().map(Sort::to_string).collect();
        writeln!(out, "(declare-fun {name} ({}) Bool)", s.join(" ")).unwrap();
    }

    let nclauses = rng.gen_range(1..=MAX_CLAUSES);
    for ci in 0..nclauses {
        let mut g = Gen { rng: &mut *rng, vars: Vec::new() };
        // The first clause is always a fact so that something is derivable.
        let is_fact = ci == 0 || g.rng.gen_bool(0.25);
        let mut conj = Vec::new();
        if is_fact {
            let n = g.rng.gen_range(0..=1);
            for k in 0..n {
                let name = format!("z{k}");
                let lo = g.rng.gen_range(-2..=1);
                conj.push(format!("(<= {} {name})", lit(lo)));
                conj.push(format!("(<= {name} {})", lit(lo + 2)));
                g.vars.push((name, Sort::Int));
            }
        } else {
            let (name, sorts) = rels.choose(g.rng).unwrap().clone();
            let mut args = Vec::new();
            for (k, s) in sorts.iter().enumerate() {
                // Occasionally repeat an earlier variable of the same sort.
                let reuse = g.vars.iter().filter(|(_, t)| t == s).map(|(n, _)| n.clone()).next();
                match reuse {
                    Some(v) if g.rng.gen_bool(0.15) => args.push(v),
                    _ => {
                        let v = format!("x{k}");
                        g.vars.push((v.clone(), *s));
                        args.push(v);
                    }
                }
            }
            conj.push(app(&name, &args));
            if g.rng.gen_bool(0.25) {
                g.vars.push(("y".into(), Sort::Int));
            }
        }
        // Fact clauses mostly keep just their range restriction.
        let c = if is_fact && g.rng.gen_bool(0.6) { "true".to_string() } else { g.constraint() };
        if c != "true" || conj.is_empty() {
            conj.push(c);
        }
        let body = if conj.len() == 1 { conj.pop().unwrap() } else { format!("(and {})", conj.join(" ")) };

        let query = !is_fact && g.rng.gen_bool(0.2);
        let vars = g.vars.clone();
        let text = if query && !vars.is_empty() && g.rng.gen_bool(0.5) {
            format!("(not (exists {} {body}))", binders(&vars))
        } else {
            let head = if query {
                "false".to_string()
            } else {
                let (name, sorts) = rels.choose(g.rng).unwrap().clone();
                let args: Vec<String> = sorts.iter().map(|s| g.value(*s)).collect();
                app(&name, &args)
            };
            let clause = format!("(=> {body} {head})");
            if vars.is_empty() {
                clause
            } else {
                format!("(forall {} {clause})", binders(&vars))
            }
        };
        writeln!(out, "(assert {text})").unwrap();
    }
    out.push_str("(check-sat)\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::load_system;

    #[test]
    fn deterministic_per_seed() {
        let a: Vec<String> = random_systems(7, 5).collect();
        let b: Vec<String> = random_systems(7, 5).collect();
        assert_eq!(a, b);
        let c: Vec<String> = random_systems(8, 5).collect();
        assert_ne!(a, c);
    }

    #[test]
    fn generated_systems_load() {
        for (i, text) in random_systems(1, 300).enumerate() {
            let sys = load_system(&text, None).unwrap_or_else(|e| panic!("system {i}: {e}\n{text}"));
            assert!(sys.relations.iter().all(|r| r.arity() <= MAX_ARITY));
            assert!(sys.relations.len() <= MAX_RELATIONS + 1);
            assert!(!sys.clauses.is_empty() && sys.clauses.len() <= MAX_CLAUSES);
        }
    }
}
