//! Brute-force enumeration of factorisations in the symmetric group.
//!
//! For degree `d` we count tuples
//! `(σ₋₂, σ₋₁, [ρ⁽⁻¹⁾], σ₀..σ_{m-1}, ρ⁽ᵐ⁾..ρ⁽ᴹ⁻¹⁾)` whose product is the identity,
//! where `σ₋₂` has cycle type `λ`, `σ₋₁` has type `μ`, `σ_i` has `d - ℓ_i` cycles,
//! each `ρ⁽ʲ⁾` is a monotone run of `ℓ_j` transpositions and the optional `ρ⁽⁻¹⁾` is
//! an unrestricted run of `ℓ₋₁` transpositions. The table stores raw labeled counts;
//! signs and the `1/d!` normalisation are applied at assembly.
//!
//! The Schur-side expansion of the tau function is computed independently from
//! characters, so the two can be compared.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use num_bigint::BigInt;

use crate::model::{Error, ModelParams, Result};
use crate::ring::{unit_mono, Mono, Poly, Q, Ring, Scalar, Series, NVARS, ONE_MONO};

/// Largest supported degree.
pub const MAX_D: usize = 8;

/// A weakly decreasing list of positive parts.
pub type Partition = Vec<u32>;

/// All partitions of `d`, largest first part first.
pub fn partitions(d: usize) -> Vec<Partition> {
    fn rec(rest: u32, max: u32, cur: &mut Partition, out: &mut Vec<Partition>) {
        if rest == 0 {
            out.push(cur.clone());
            return;
        }
        for k in (1..=rest.min(max)).rev() {
            cur.push(k);
            rec(rest - k, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(d as u32, d as u32, &mut Vec::new(), &mut out);
    out
}

/// `z_λ = Π_i i^{m_i} m_i!`, the centraliser order.
pub fn z_lambda(lambda: &[u32]) -> u128 {
    let mut z: u128 = 1;
    let mut i = 0;
    while i < lambda.len() {
        let mut j = i;
        while j < lambda.len() && lambda[j] == lambda[i] {
            j += 1;
        }
        let mult = (j - i) as u128;
        for k in 1..=mult {
            z *= k * lambda[i] as u128;
        }
        i = j;
    }
    z
}

pub fn factorial(n: usize) -> u128 {
    (1..=n as u128).product()
}

/// Number of permutations of cycle type `λ`.
pub fn class_size(lambda: &[u32]) -> u128 {
    let d: u32 = lambda.iter().sum();
    factorial(d as usize) / z_lambda(lambda)
}

/// Irreducible character `χ^α(ρ)` by the Murnaghan–Nakayama rule on beta-sets.
pub fn character(alpha: &[u32], rho: &[u32]) -> i64 {
    let sa: u32 = alpha.iter().sum();
    let sr: u32 = rho.iter().sum();
    if sa != sr {
        return 0;
    }
    let k = alpha.len() as i32;
    let beta: Vec<i32> = alpha.iter().enumerate().map(|(i, &a)| a as i32 + k - 1 - i as i32).collect();
    mn_rec(&beta, rho)
}

fn mn_rec(beta: &[i32], rho: &[u32]) -> i64 {
    let Some((&r, rest)) = rho.split_first() else {
        return 1;
    };
    let r = r as i32;
    let mut total = 0;
    for (idx, &b) in beta.iter().enumerate() {
        let nb = b - r;
        if nb < 0 || beta.contains(&nb) {
            continue;
        }
        let between = beta.iter().filter(|&&c| c > nb && c < b).count();
        let sign = if between % 2 == 0 { 1 } else { -1 };
        let mut next = beta.to_vec();
        next[idx] = nb;
        next.sort_unstable_by(|a, b| b.cmp(a));
        total += sign * mn_rec(&next, rest);
    }
    total
}

/// Coefficients of `s_α(p) = Σ_λ χ^α(λ)/z_λ · p_λ`.
pub fn schur_in_power_sums(alpha: &[u32]) -> Vec<(Partition, Q)> {
    let d: u32 = alpha.iter().sum();
    partitions(d as usize)
        .into_iter()
        .filter_map(|l| {
            let chi = character(alpha, &l);
            (chi != 0).then(|| {
                let z = z_lambda(&l);
                (l, Q::new(BigInt::from(chi), BigInt::from(z)))
            })
        })
        .collect()
}

/// Contents `column - row` of the boxes of a Young diagram.
pub fn contents(alpha: &[u32]) -> Vec<i64> {
    let mut out = Vec::new();
    for (row, &len) in alpha.iter().enumerate() {
        for col in 0..len {
            out.push(col as i64 - row as i64);
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Permutations and set partitions
// ---------------------------------------------------------------------------

type PermArr = [u8; MAX_D];

fn all_perms(d: usize) -> Vec<PermArr> {
    let mut cur: Vec<u8> = (0..d as u8).collect();
    let mut out = Vec::new();
    loop {
        let mut a = [0u8; MAX_D];
        a[..d].copy_from_slice(&cur);
        out.push(a);
        // next lexicographic permutation
        let Some(i) = (0..d.saturating_sub(1)).rev().find(|&i| cur[i] < cur[i + 1]) else {
            break;
        };
        let j = (i + 1..d).rev().find(|&j| cur[j] > cur[i]).unwrap();
        cur.swap(i, j);
        cur[i + 1..].reverse();
    }
    out
}

/// Lexicographic rank, matching the order of `all_perms`.
fn rank(p: &PermArr, d: usize) -> u32 {
    let mut r: u32 = 0;
    for i in 0..d {
        let smaller = (i + 1..d).filter(|&j| p[j] < p[i]).count() as u32;
        r = r * (d - i) as u32 + smaller;
    }
    r
}

/// `(a ∘ b)(x) = a(b(x))`.
fn compose(a: &PermArr, b: &PermArr, d: usize) -> PermArr {
    let mut c = [0u8; MAX_D];
    for x in 0..d {
        c[x] = a[b[x] as usize];
    }
    c
}

fn inverse(a: &PermArr, d: usize) -> PermArr {
    let mut c = [0u8; MAX_D];
    for x in 0..d {
        c[a[x] as usize] = x as u8;
    }
    c
}

fn cycle_type(a: &PermArr, d: usize) -> Partition {
    let mut seen = [false; MAX_D];
    let mut out = Vec::new();
    for s in 0..d {
        if seen[s] {
            continue;
        }
        let mut len = 0;
        let mut x = s;
        while !seen[x] {
            seen[x] = true;
            x = a[x] as usize;
            len += 1;
        }
        out.push(len);
    }
    out.sort_unstable_by(|a, b| b.cmp(a));
    out
}

fn transposition(i: usize, j: usize, d: usize) -> PermArr {
    let mut a = [0u8; MAX_D];
    for (x, v) in a.iter_mut().enumerate().take(d) {
        *v = x as u8;
    }
    a.swap(i, j);
    a
}

/// Set partition of `0..d` encoded as a restricted growth string, four bits per element.
type Part = u64;

fn part_discrete(d: usize) -> Part {
    canon(&core::array::from_fn::<u8, MAX_D, _>(|i| i as u8), d)
}

fn canon(labels: &[u8; MAX_D], d: usize) -> Part {
    let mut map = [u8::MAX; 16];
    let mut next = 0u8;
    let mut code: u64 = 0;
    for (i, &l) in labels[..d].iter().enumerate() {
        let l = l as usize;
        if map[l] == u8::MAX {
            map[l] = next;
            next += 1;
        }
        code |= (map[l] as u64) << (4 * i);
    }
    code
}

fn labels_of(p: Part, d: usize) -> [u8; MAX_D] {
    let mut l = [0u8; MAX_D];
    for (i, v) in l.iter_mut().enumerate().take(d) {
        *v = ((p >> (4 * i)) & 0xf) as u8;
    }
    l
}

fn find(uf: &mut [u8; MAX_D], mut x: usize) -> usize {
    while uf[x] as usize != x {
        uf[x] = uf[uf[x] as usize];
        x = uf[x] as usize;
    }
    x
}

/// Finest common coarsening.
fn join(a: Part, b: Part, d: usize) -> Part {
    if a == b {
        return a;
    }
    let la = labels_of(a, d);
    let lb = labels_of(b, d);
    let mut uf: [u8; MAX_D] = core::array::from_fn(|i| i as u8);
    let mut first_a = [u8::MAX; 16];
    let mut first_b = [u8::MAX; 16];
    for i in 0..d {
        for (lab, first) in [(la[i], &mut first_a), (lb[i], &mut first_b)] {
            let f = &mut first[lab as usize];
            if *f == u8::MAX {
                *f = i as u8;
            } else {
                let x = find(&mut uf, i);
                let y = find(&mut uf, *f as usize);
                if x != y {
                    uf[x.max(y)] = x.min(y) as u8;
                }
            }
        }
    }
    let mut l = [0u8; MAX_D];
    for (i, x) in l[..d].iter_mut().enumerate() {
        *x = find(&mut uf, i) as u8;
    }
    canon(&l, d)
}

fn orbits(a: &PermArr, d: usize) -> Part {
    let mut l = [0u8; MAX_D];
    let mut seen = [false; MAX_D];
    for s in 0..d {
        if seen[s] {
            continue;
        }
        let mut x = s;
        while !seen[x] {
            seen[x] = true;
            l[x] = s as u8;
            x = a[x] as usize;
        }
    }
    canon(&l, d)
}

fn is_single_block(p: Part, d: usize) -> bool {
    labels_of(p, d)[..d].iter().all(|&l| l == 0)
}

// ---------------------------------------------------------------------------
// Runs
// ---------------------------------------------------------------------------

/// All monotone runs `(j₁ i₁)…(j_ℓ i_ℓ)` with `j_k < i_k` and `i₁ ≤ … ≤ i_ℓ`,
/// as lists of 0-based pairs `(j, i)`.
pub fn monotone_runs(d: usize, length: usize) -> Vec<Vec<(u8, u8)>> {
    fn rec(d: usize, left: usize, min_i: usize, cur: &mut Vec<(u8, u8)>, out: &mut Vec<Vec<(u8, u8)>>) {
        if left == 0 {
            out.push(cur.clone());
            return;
        }
        for i in min_i..d {
            for j in 0..i {
                cur.push((j as u8, i as u8));
                rec(d, left - 1, i, cur, out);
                cur.pop();
            }
        }
    }
    let mut out = Vec::new();
    rec(d, length, 1, &mut Vec::new(), &mut out);
    out
}

/// Product of a run of transpositions, composed left to right as written.
pub fn run_product(d: usize, run: &[(u8, u8)]) -> Vec<u8> {
    let mut acc: PermArr = core::array::from_fn(|i| i as u8);
    for &(j, i) in run {
        acc = compose(&acc, &transposition(j as usize, i as usize, d), d);
    }
    acc[..d].to_vec()
}

/// One entry of a factor distribution: statistic, orbit partition, multiplicity.
#[derive(Clone, Copy, Debug)]
struct Entry {
    stat: u8,
    part: Part,
    count: u128,
}

/// For each permutation (by rank), the ways a factor can equal it.
struct Dist {
    by_perm: Vec<Vec<Entry>>,
}

fn run_dist(d: usize, max_len: u32, monotone: bool, perms: &[PermArr]) -> Dist {
    let n = perms.len();
    let mut by_perm = vec![Vec::new(); n];
    let id = perms[0];
    // state: (rank, part, last i) -> count
    let mut states: BTreeMap<(u32, Part, u8), u128> = BTreeMap::new();
    states.insert((rank(&id, d), part_discrete(d), 0), 1);
    let trans: Vec<(usize, usize, PermArr, Part)> = (1..d)
        .flat_map(|i| (0..i).map(move |j| (j, i)))
        .map(|(j, i)| {
            let t = transposition(j, i, d);
            (j, i, t, orbits(&t, d))
        })
        .collect();
    for len in 0..=max_len {
        let mut agg: BTreeMap<(u32, Part), u128> = BTreeMap::new();
        for (&(r, p, _), &c) in &states {
            *agg.entry((r, p)).or_default() += c;
        }
        for ((r, p), c) in agg {
            by_perm[r as usize].push(Entry { stat: len as u8, part: p, count: c });
        }
        if len == max_len {
            break;
        }
        let mut next: BTreeMap<(u32, Part, u8), u128> = BTreeMap::new();
        for (&(r, p, last), &c) in &states {
            let cur = perms[r as usize];
            for &(_, i, ref t, tp) in &trans {
                if monotone && (i as u8) < last {
                    continue;
                }
                let np = compose(&cur, t, d);
                let key = (rank(&np, d), join(p, tp, d), if monotone { i as u8 } else { 0 });
                *next.entry(key).or_default() += c;
            }
        }
        states = next;
    }
    Dist { by_perm }
}

fn perm_dist(d: usize, perms: &[PermArr], stat: impl Fn(&PermArr) -> u8) -> Dist {
    Dist { by_perm: perms.iter().map(|p| vec![Entry { stat: stat(p), part: orbits(p, d), count: 1 }]).collect() }
}

// ---------------------------------------------------------------------------
// Enumeration
// ---------------------------------------------------------------------------

/// Model shape seen by the oracle: numbers of numerator and denominator colors and
/// whether an exponential run is present.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Shape {
    pub m: usize,
    pub r: usize,
    pub exp: bool,
}

/// Caps on run lengths.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LBounds {
    /// Cap on each individual `ℓ`.
    pub max_each: u32,
    /// Cap on `Σ ℓ` over all non-class factors.
    pub max_total: u32,
}

impl LBounds {
    /// Caps that keep every connected entry of genus at most `g_max`.
    pub fn for_genus(d: usize, g_max: u32) -> Self {
        let t = 2 * g_max + 2 * d as u32 - 2;
        LBounds { max_each: t, max_total: t }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Key {
    pub lambda: Partition,
    pub mu: Partition,
    /// `ℓ` for the colors `I` then `J`.
    pub ell: Vec<u32>,
    pub ell_exp: Option<u32>,
}

impl Key {
    /// Twice the genus: `Σ ℓ + 2 - ℓ(λ) - ℓ(μ)`.
    pub fn two_g(&self) -> i64 {
        let s: u32 = self.ell.iter().sum::<u32>() + self.ell_exp.unwrap_or(0);
        s as i64 + 2 - self.lambda.len() as i64 - self.mu.len() as i64
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Counts {
    pub all: u128,
    pub connected: u128,
}

/// Raw labeled counts for one degree.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub d: usize,
    pub shape: Shape,
    pub bounds: LBounds,
    pub entries: BTreeMap<Key, Counts>,
}

/// One exported record, with the count as a decimal string.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TableRecord {
    pub lambda: Partition,
    pub mu: Partition,
    pub ell: Vec<u32>,
    pub ell_exp: Option<u32>,
    pub connected: bool,
    pub genus: i64,
    pub count: String,
}

impl Table {
    pub fn merge(&mut self, other: &Table) {
        for (k, c) in &other.entries {
            let e = self.entries.entry(k.clone()).or_default();
            e.all += c.all;
            e.connected += c.connected;
        }
    }

    pub fn records(&self) -> Vec<TableRecord> {
        let mut out = Vec::new();
        for (k, c) in &self.entries {
            for (connected, n) in [(false, c.all), (true, c.connected)] {
                if n == 0 {
                    continue;
                }
                out.push(TableRecord {
                    lambda: k.lambda.clone(),
                    mu: k.mu.clone(),
                    ell: k.ell.clone(),
                    ell_exp: k.ell_exp,
                    connected,
                    genus: k.two_g() / 2,
                    count: format!("{n}"),
                });
            }
        }
        out
    }
}

/// Conjugacy-class representatives of `S_d`, one per partition, in `partitions(d)` order.
pub fn class_representatives(d: usize) -> Vec<Partition> {
    partitions(d)
}

fn rep_of(lambda: &[u32], d: usize) -> PermArr {
    let mut a = [0u8; MAX_D];
    let mut start = 0usize;
    for &len in lambda {
        let len = len as usize;
        for k in 0..len {
            a[start + k] = (start + (k + 1) % len) as u8;
        }
        start += len;
    }
    debug_assert_eq!(start, d);
    a
}

/// Enumerates all factorisations of degree `d`.
pub fn enumerate_factorisations(d: usize, shape: Shape, bounds: LBounds) -> Result<Table> {
    let mut table = empty_table(d, shape, bounds)?;
    for idx in 0..partitions(d).len() {
        table.merge(&enumerate_class(d, shape, bounds, idx)?);
    }
    Ok(table)
}

fn empty_table(d: usize, shape: Shape, bounds: LBounds) -> Result<Table> {
    if d == 0 || d > MAX_D {
        return Err(Error::Model(format!("degree {d} outside 1..={MAX_D}")));
    }
    if shape.m + shape.r == 0 && !shape.exp {
        return Err(Error::Model("need at least one color".into()));
    }
    Ok(Table { d, shape, bounds, entries: BTreeMap::new() })
}

/// The part of the table with `σ₋₂` in the conjugacy class `partitions(d)[class_index]`.
///
/// The first factor is fixed to a class representative and the counts are
/// multiplied by the class size. This is exact because the counts with a fixed
/// `σ₋₂` are constant on its conjugacy class (checked by tests against the
/// unreduced enumeration).
pub fn enumerate_class(d: usize, shape: Shape, bounds: LBounds, class_index: usize) -> Result<Table> {
    let parts = partitions(d);
    let lambda = parts.get(class_index).ok_or_else(|| Error::Model("class index out of range".into()))?.clone();
    let weight = class_size(&lambda);
    let first = rep_of(&lambda, d);
    enumerate_from(d, shape, bounds, &[(first, class_index as u8, weight)])
}

/// Enumeration with `σ₋₂` ranging over every permutation. Slow; used to validate
/// the class-representative reduction.
pub fn enumerate_unreduced(d: usize, shape: Shape, bounds: LBounds) -> Result<Table> {
    let parts = partitions(d);
    let firsts: Vec<(PermArr, u8, u128)> = all_perms(d)
        .into_iter()
        .map(|p| {
            let ct = cycle_type(&p, d);
            (p, parts.iter().position(|x| *x == ct).unwrap() as u8, 1)
        })
        .collect();
    enumerate_from(d, shape, bounds, &firsts)
}

fn enumerate_from(d: usize, shape: Shape, bounds: LBounds, firsts: &[(PermArr, u8, u128)]) -> Result<Table> {
    let mut table = empty_table(d, shape, bounds)?;
    let perms = all_perms(d);
    let parts = partitions(d);
    let class_of = |p: &PermArr| parts.iter().position(|x| *x == cycle_type(p, d)).unwrap() as u8;
    let cap = bounds.max_each.min(bounds.max_total);

    // Factor list after σ₋₂: σ₋₁, [exp run], σ_I..., ρ_J...
    let mut factors: Vec<Dist> = Vec::new();
    factors.push(perm_dist(d, &perms, class_of));
    if shape.exp {
        factors.push(run_dist(d, cap, false, &perms));
    }
    for _ in 0..shape.m {
        factors.push(perm_dist(d, &perms, |p| (d - cycle_type(p, d).len()) as u8));
    }
    let run = if shape.r > 0 { Some(run_dist(d, cap, true, &perms)) } else { None };
    for _ in 0..shape.r {
        factors.push(Dist { by_perm: run.as_ref().unwrap().by_perm.clone() });
    }
    let nstats = factors.len() + 1;
    // stats[0] = class of σ₋₂, stats[1] = class of σ₋₁, then the ℓ's in factor order.
    let ell_sum = |s: &[u8; 12]| s[2..nstats].iter().map(|&x| x as u32).sum::<u32>();

    let mut states: BTreeMap<(u32, Part, [u8; 12]), u128> = BTreeMap::new();
    for (p, cls, w) in firsts {
        let mut st = [0u8; 12];
        st[0] = *cls;
        *states.entry((rank(p, d), orbits(p, d), st)).or_default() += *w;
    }
    let (last, middle) = factors.split_last().unwrap();
    for (fi, f) in middle.iter().enumerate() {
        let mut next: BTreeMap<(u32, Part, [u8; 12]), u128> = BTreeMap::new();
        for (&(r, part, st), &c) in &states {
            let cur = perms[r as usize];
            for (pr, entries) in f.by_perm.iter().enumerate() {
                if entries.is_empty() {
                    continue;
                }
                let np = compose(&cur, &perms[pr], d);
                let nr = rank(&np, d);
                for e in entries {
                    let mut ns = st;
                    ns[fi + 1] = e.stat;
                    if fi >= 1 && (e.stat as u32 > bounds.max_each || ell_sum(&ns) > bounds.max_total) {
                        continue;
                    }
                    *next.entry((nr, join(part, e.part, d), ns)).or_default() += c * e.count;
                }
            }
        }
        states = next;
    }
    let li = factors.len();
    for (&(r, part, st), &c) in &states {
        let need = rank(&inverse(&perms[r as usize], d), d);
        for e in &last.by_perm[need as usize] {
            let mut ns = st;
            ns[li] = e.stat;
            if li >= 2 && (e.stat as u32 > bounds.max_each || ell_sum(&ns) > bounds.max_total) {
                continue;
            }
            let total = c * e.count;
            let connected = is_single_block(join(part, e.part, d), d);
            let off = if shape.exp { 3 } else { 2 };
            let key = Key {
                lambda: parts[ns[0] as usize].clone(),
                mu: parts[ns[1] as usize].clone(),
                ell: ns[off..nstats].iter().map(|&x| x as u32).collect(),
                ell_exp: shape.exp.then(|| ns[2] as u32),
            };
            let slot = table.entries.entry(key).or_default();
            slot.all += total;
            if connected {
                slot.connected += total;
            }
        }
    }
    Ok(table)
}

// ---------------------------------------------------------------------------
// Assembly
// ---------------------------------------------------------------------------

fn sign_and_weight(k: &Key, shape: Shape) -> (bool, u128) {
    let neg = k.ell[shape.m..].iter().sum::<u32>() % 2 == 1;
    (neg, factorial(k.ell_exp.unwrap_or(0) as usize))
}

fn pow_f<F: Scalar>(x: &F, e: u32) -> F {
    crate::ring::ring_pow(x, e as u64)
}

/// `u^ℓ` weight of a key, with signs and the `1/ℓ₋₁!` factor, divided by `d!`.
fn key_weight<F: Scalar>(k: &Key, shape: Shape, params: &ModelParams<F>, d: usize) -> Result<F> {
    let (num, den) = params.expanded()?;
    if num.len() != shape.m || den.len() != shape.r || params.u_exp.is_some() != shape.exp {
        return Err(Error::Model("parameters do not match the table shape".into()));
    }
    let (neg, fw) = sign_and_weight(k, shape);
    let mut w = F::from_q(&Q::new(BigInt::from(1), BigInt::from(fw * factorial(d))));
    for (u, &e) in num.iter().chain(&den).zip(&k.ell) {
        w = w.times(&pow_f(u, e));
    }
    if let (Some(u), Some(e)) = (&params.u_exp, k.ell_exp) {
        w = w.times(&pow_f(u, e));
    }
    Ok(if neg { w.negated() } else { w })
}

fn prod_p<F: Scalar>(parts: &[u32], f: impl Fn(usize) -> F) -> F {
    parts.iter().fold(F::one(), |acc, &k| acc.times(&f(k as usize)))
}

/// `[t^d] τ` from a table with all parameters substituted. Only meaningful when the
/// table holds every term, i.e. without denominator colors or exponential runs.
pub fn assemble_tau<F: Scalar>(table: &Table, params: &ModelParams<F>) -> Result<F> {
    if table.shape.r > 0 || table.shape.exp {
        return Err(Error::Model("numeric assembly needs a finite table".into()));
    }
    let mut s = F::zero();
    for (k, c) in &table.entries {
        let w = key_weight(k, table.shape, params, table.d)?;
        let term = w
            .times(&F::from_q(&Q::from_integer(BigInt::from(c.all))))
            .times(&prod_p(&k.lambda, |i| params.p_at(i)))
            .times(&prod_p(&k.mu, |i| params.q_at(i)));
        s.add_in(&term);
    }
    Ok(s)
}

/// Variable index used for the color parameters in symbolic assembly:
/// `I` colors first, then `J`, then the exponential parameter.
pub fn color_var(shape: Shape, idx: usize) -> usize {
    debug_assert!(idx <= shape.m + shape.r);
    idx
}

/// `[t^d] τ` as a polynomial in the color parameters for each `(λ, μ)`,
/// from the raw counts.
pub fn assemble_symbolic(table: &Table) -> Result<BTreeMap<(Partition, Partition), Poly<Q>>> {
    let shape = table.shape;
    if shape.m + shape.r + shape.exp as usize > NVARS {
        return Err(Error::Model("too many colors for symbolic assembly".into()));
    }
    let mut out: BTreeMap<(Partition, Partition), Poly<Q>> = BTreeMap::new();
    for (k, c) in &table.entries {
        let (neg, fw) = sign_and_weight(k, shape);
        let mut mono: Mono = ONE_MONO;
        for (i, &e) in k.ell.iter().enumerate() {
            mono[i] = e as i16;
        }
        if let Some(e) = k.ell_exp {
            mono[shape.m + shape.r] = e as i16;
        }
        let mut coef = Q::new(BigInt::from(c.all), BigInt::from(fw * factorial(table.d)));
        if neg {
            coef = -coef;
        }
        out.entry((k.lambda.clone(), k.mu.clone())).or_insert_with(Poly::zero).add_term(mono, &coef);
    }
    out.retain(|_, p| !p.is_empty());
    Ok(out)
}

/// `[t^d] τ` from characters with all parameters substituted:
/// `Σ_α s_α(p) s_α(q) Π_□ G(c(□))`.
pub fn tau_schur_degree<F: Scalar>(params: &ModelParams<F>, d: usize) -> Result<F> {
    if params.u_exp.is_some() && F::is_exact() {
        return Err(Error::Model("the exponential weight is not rational; use numeric scalars".into()));
    }
    let (num, den) = params.expanded()?;
    let mut total = F::zero();
    for alpha in partitions(d) {
        let sp = power_sum_eval(&alpha, |k| params.p_at(k));
        let sq = power_sum_eval(&alpha, |k| params.q_at(k));
        let mut g = F::one();
        for c in contents(&alpha) {
            let cf = F::from_int(c);
            for u in &num {
                g = g.times(&F::one().plus(&u.times(&cf)));
            }
            for u in &den {
                let den = F::one().plus(&u.times(&cf));
                g = g.times(&den.try_inv().ok_or_else(|| Error::Model("weight has a pole at a content".into()))?);
            }
            if let Some(u) = &params.u_exp {
                let z = u.to_c64() * (c as f64);
                g = g.times(&F::from_c64(z.exp()).expect("numeric scalars"));
            }
        }
        total.add_in(&sp.times(&sq).times(&g));
    }
    Ok(total)
}

/// The tau function through `t^T` with all parameters substituted.
pub fn tau_schur<F: Scalar>(params: &ModelParams<F>, order: usize) -> Result<Series<F>> {
    let mut c = vec![F::one()];
    for d in 1..=order {
        c.push(tau_schur_degree(params, d)?);
    }
    Ok(Series::from_coeffs(c, order))
}

fn power_sum_eval<F: Scalar>(alpha: &[u32], p: impl Fn(usize) -> F) -> F {
    let mut s = F::zero();
    for (l, coef) in schur_in_power_sums(alpha) {
        s.add_in(&F::from_q(&coef).times(&prod_p(&l, &p)));
    }
    s
}

/// `[t^d] τ` from characters as a polynomial in the color parameters, one entry
/// per `(λ, μ)`. Denominator and exponential parameters are expanded as power
/// series and truncated at degree `cap` in each of those variables.
pub fn tau_schur_symbolic(shape: Shape, d: usize, cap: u32) -> Result<BTreeMap<(Partition, Partition), Poly<Q>>> {
    let nv = shape.m + shape.r + shape.exp as usize;
    if nv > NVARS {
        return Err(Error::Model("too many colors for symbolic assembly".into()));
    }
    let capped = |p: &Poly<Q>| p.filter(|m| (shape.m..nv).all(|i| m[i] as u32 <= cap));
    let mut out: BTreeMap<(Partition, Partition), Poly<Q>> = BTreeMap::new();
    let classes = partitions(d);
    for alpha in &classes {
        let mut g = Poly::<Q>::one();
        for c in contents(alpha) {
            let cq = Q::from_int(c);
            for i in 0..shape.m {
                let f = Poly::one().plus(&Poly::monomial(unit_mono(i, 1), cq.clone()));
                g = g.times(&f);
            }
            for j in shape.m..shape.m + shape.r {
                // 1/(1 + u c) = Σ (-u c)^k
                let mut f = Poly::zero();
                for k in 0..=cap {
                    f.add_term(unit_mono(j, k as i16), &crate::ring::ring_pow(&(-cq.clone()), k as u64));
                }
                g = capped(&g.times(&f));
            }
            if shape.exp {
                let v = shape.m + shape.r;
                let mut f = Poly::zero();
                for k in 0..=cap {
                    let coef = crate::ring::ring_pow(&cq, k as u64) / Q::from_integer(BigInt::from(factorial(k as usize)));
                    f.add_term(unit_mono(v, k as i16), &coef);
                }
                g = capped(&g.times(&f));
            }
        }
        for lam in &classes {
            let cl = character(alpha, lam);
            if cl == 0 {
                continue;
            }
            for mu in &classes {
                let cm = character(alpha, mu);
                if cm == 0 {
                    continue;
                }
                let w = Q::new(BigInt::from(cl * cm), BigInt::from(z_lambda(lam) * z_lambda(mu)));
                out.entry((lam.clone(), mu.clone())).or_insert_with(Poly::zero).add_in(&g.scale(&w));
            }
        }
    }
    out.retain(|_, p| !p.is_empty());
    Ok(out)
}

/// Drops monomials whose denominator or exponential exponent exceeds `cap`.
pub fn cap_symbolic(
    m: &BTreeMap<(Partition, Partition), Poly<Q>>,
    shape: Shape,
    cap: u32,
) -> BTreeMap<(Partition, Partition), Poly<Q>> {
    let nv = shape.m + shape.r + shape.exp as usize;
    m.iter()
        .map(|(k, p)| (k.clone(), p.filter(|mo| (shape.m..nv).all(|i| mo[i] as u32 <= cap))))
        .filter(|(_, p)| !p.is_empty())
        .collect()
}

// ---------------------------------------------------------------------------
// Generating functions W_{g,n}
// ---------------------------------------------------------------------------

/// `W_{g,n}` through `t^T` from tables for degrees `1..=T`, as a series whose
/// coefficients are polynomials in `x̄_1..x̄_n` (variables `0..n`).
///
/// Internal `p_i` with `i > D₁` and `q_j` with `j > D₂` are set to zero.
pub fn wgn_oracle<F: Scalar>(tables: &[Table], params: &ModelParams<F>, g: u32, n: usize, order: usize) -> Result<Series<Poly<F>>> {
    if n == 0 || n > NVARS {
        return Err(Error::Model(format!("n = {n} outside 1..={NVARS}")));
    }
    let mut out = Series::<Poly<F>>::zero(order);
    for d in 1..=order {
        let table = tables.iter().find(|t| t.d == d).ok_or_else(|| Error::Model(format!("missing table for d = {d}")))?;
        let need = LBounds::for_genus(d, g);
        if table.bounds.max_each < need.max_each || table.bounds.max_total < need.max_total {
            return Err(Error::Model(format!("table for d = {d} was enumerated with caps too small for genus {g}")));
        }
        let mut acc = Poly::<F>::zero();
        for (k, c) in &table.entries {
            if c.connected == 0 || k.two_g() != 2 * g as i64 || k.lambda.len() < n {
                continue;
            }
            let qv = prod_p(&k.mu, |i| params.q_at(i));
            if qv.is_zero() {
                continue;
            }
            let w = key_weight(k, table.shape, params, d)?
                .times(&F::from_q(&Q::from_integer(BigInt::from(c.connected))))
                .times(&qv);
            acc.add_in(&root_parts(&k.lambda, n, params).scale(&w));
        }
        out.set_coeff(d, acc);
    }
    Ok(out)
}

/// `∇_{x_n}…∇_{x_1} p_λ` with the leftover `p`'s substituted: every ordered choice of
/// `n` distinct parts, part `k` sent to `x_j` contributing `k·x̄_j^{k+1}`.
fn root_parts<F: Scalar>(lambda: &[u32], n: usize, params: &ModelParams<F>) -> Poly<F> {
    #[allow(clippy::too_many_arguments)]
    fn rec<F: Scalar>(lambda: &[u32], used: &mut Vec<bool>, j: usize, n: usize, mono: Mono, coef: u64, params: &ModelParams<F>, out: &mut Poly<F>) {
        if j == n {
            let rest: Vec<u32> = lambda.iter().zip(used.iter()).filter(|(_, &u)| !u).map(|(&k, _)| k).collect();
            let pv = prod_p(&rest, |i| params.p_at(i));
            if !pv.is_zero() {
                out.add_term(mono, &pv.times(&F::from_int(coef as i64)));
            }
            return;
        }
        for i in 0..lambda.len() {
            if used[i] {
                continue;
            }
            used[i] = true;
            let mut m = mono;
            m[j] += lambda[i] as i16 + 1;
            rec(lambda, used, j + 1, n, m, coef * lambda[i] as u64, params, out);
            used[i] = false;
        }
    }
    let mut out = Poly::zero();
    rec(lambda, &mut vec![false; lambda.len()], 0, n, ONE_MONO, 1, params, &mut out);
    out
}

/// Tables for degrees `1..=d_max` with caps adequate for genus `g_max`.
pub fn tables_for(shape: Shape, d_max: usize, g_max: u32) -> Result<Vec<Table>> {
    (1..=d_max).map(|d| enumerate_factorisations(d, shape, LBounds::for_genus(d, g_max))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn shape(m: usize, r: usize, exp: bool) -> Shape {
        Shape { m, r, exp }
    }

    #[test]
    fn partition_counts() {
        let n: Vec<usize> = (1..=8).map(|d| partitions(d).len()).collect();
        assert_eq!(n, vec![1, 2, 3, 5, 7, 11, 15, 22]);
    }

    #[test]
    fn class_sizes_sum_to_factorial() {
        for d in 1..=7 {
            let s: u128 = partitions(d).iter().map(|l| class_size(l)).sum();
            assert_eq!(s, factorial(d));
        }
    }

    #[test]
    fn small_characters() {
        // S_3: χ^{(2,1)} = (2, 0, -1) on classes (1,1,1), (2,1), (3).
        assert_eq!(character(&[2, 1], &[1, 1, 1]), 2);
        assert_eq!(character(&[2, 1], &[2, 1]), 0);
        assert_eq!(character(&[2, 1], &[3]), -1);
        assert_eq!(character(&[1, 1, 1], &[2, 1]), -1);
        // S_4 sign character on a 4-cycle
        assert_eq!(character(&[1, 1, 1, 1], &[4]), -1);
        assert_eq!(character(&[2, 2], &[2, 2]), 2);
    }

    #[test]
    fn column_orthogonality() {
        for d in 1..=6 {
            let ps = partitions(d);
            for a in &ps {
                for b in &ps {
                    let s: i64 = ps.iter().map(|al| character(al, a) * character(al, b)).sum();
                    let expect = if a == b { z_lambda(a) as i64 } else { 0 };
                    assert_eq!(s, expect);
                }
            }
        }
    }

    #[test]
    fn monotone_run_counts() {
        // In S_3: length 0 → 1, length 1 → 3, length 2 → h_2(0, 1, 2) = 7.
        assert_eq!(monotone_runs(3, 0).len(), 1);
        assert_eq!(monotone_runs(3, 1).len(), 3);
        assert_eq!(monotone_runs(3, 2).len(), 7);
    }

    #[test]
    fn monotone_run_products_are_central() {
        // The number of runs with a given product depends only on its class.
        let d = 4;
        for len in 0..=4 {
            let mut by_perm: BTreeMap<Vec<u8>, u32> = BTreeMap::new();
            for run in monotone_runs(d, len) {
                *by_perm.entry(run_product(d, &run)).or_default() += 1;
            }
            let mut by_class: BTreeMap<Partition, u32> = BTreeMap::new();
            for p in all_perms(d) {
                let n = by_perm.get(&p[..d]).copied().unwrap_or(0);
                let ct = cycle_type(&p, d);
                if let Some(&old) = by_class.get(&ct) {
                    assert_eq!(old, n, "length {len}, class {ct:?}");
                }
                by_class.insert(ct, n);
            }
        }
    }

    #[test]
    fn degree_one_and_two() {
        let t = enumerate_factorisations(1, shape(1, 0, false), LBounds { max_each: 4, max_total: 4 }).unwrap();
        assert_eq!(t.entries.len(), 1);
        let (k, c) = t.entries.iter().next().unwrap();
        assert_eq!((k.lambda.clone(), k.mu.clone(), k.ell.clone()), (vec![1], vec![1], vec![0]));
        assert_eq!(c.all, 1);
        let t = enumerate_factorisations(2, shape(1, 0, false), LBounds { max_each: 4, max_total: 4 }).unwrap();
        let k = Key { lambda: vec![2], mu: vec![1, 1], ell: vec![1], ell_exp: None };
        assert_eq!(t.entries[&k], Counts { all: 1, connected: 1 });
        assert_eq!(k.two_g(), 0);
    }

    #[test]
    fn class_reduction_matches_full_enumeration() {
        let b = LBounds { max_each: 3, max_total: 5 };
        for s in [shape(1, 0, false), shape(1, 1, false), shape(0, 1, false), shape(0, 2, false), shape(1, 0, true), shape(0, 1, true)] {
            for d in 1..=3 {
                let a = enumerate_factorisations(d, s, b).unwrap();
                let f = enumerate_unreduced(d, s, b).unwrap();
                assert_eq!(a.entries, f.entries, "shape {s:?}, d = {d}");
            }
        }
        let s = shape(0, 1, false);
        assert_eq!(
            enumerate_factorisations(4, s, b).unwrap().entries,
            enumerate_unreduced(4, s, b).unwrap().entries
        );
    }

    #[test]
    fn single_hurwitz_genus_zero() {
        // Simple Hurwitz numbers: H_0((d), (1^d)) = d^{d-3}·(d-1)!·... checked through the
        // classical count of minimal transitive factorisations of a d-cycle into d-1
        // transpositions: d^{d-2}. Here with m = 1 the middle factor is one permutation,
        // so use r = 0, m = 1 and the exponential run instead.
        let s = shape(0, 0, true);
        for d in 2..=5 {
            let t = enumerate_factorisations(d, s, LBounds::for_genus(d, 0)).unwrap();
            let k = Key { lambda: vec![d as u32], mu: vec![1; d], ell: vec![], ell_exp: Some(d as u32 - 1) };
            // Every d-cycle: (d-1)!·d^{d-2} labeled minimal factorisations.
            let expect = factorial(d - 1) * (d as u128).pow(d as u32 - 2);
            assert_eq!(t.entries[&k].connected, expect, "d = {d}");
        }
    }

    #[test]
    fn schur_expansion_matches_enumeration() {
        let cap = 4;
        for s in [shape(1, 0, false), shape(2, 0, false), shape(1, 1, false), shape(0, 1, false), shape(1, 0, true), shape(0, 2, true)] {
            for d in 1..=3 {
                let t = enumerate_factorisations(d, s, LBounds { max_each: cap, max_total: 200 }).unwrap();
                let a = cap_symbolic(&assemble_symbolic(&t).unwrap(), s, cap);
                let b = tau_schur_symbolic(s, d, cap).unwrap();
                assert_eq!(a, b, "shape {s:?}, d = {d}");
            }
        }
    }

    #[test]
    fn numeric_tau_matches_assembly() {
        let q = |n: i64, d: i64| Q::new(BigInt::from(n), BigInt::from(d));
        let params = ModelParams::new(vec![q(1, 2), q(-2, 3)], vec![], vec![q(1, 3), q(2, 1)], vec![q(-1, 2), q(3, 4)]);
        for d in 1..=4 {
            let t = enumerate_factorisations(d, shape(2, 0, false), LBounds { max_each: 50, max_total: 50 }).unwrap();
            assert_eq!(assemble_tau(&t, &params).unwrap(), tau_schur_degree(&params, d).unwrap());
        }
    }
}
