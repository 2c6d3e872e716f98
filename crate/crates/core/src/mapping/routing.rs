use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::circuit::{Circuit, Gate, GateKind};
use crate::device::{Device, Platform};
use crate::error::{Error, Result};
use crate::synthesis::{euler_1q, lower_2q};

pub const STOCHASTIC_TRIALS: usize = 20;
pub(crate) const SABRE_LAYOUT_ROUNDS: usize = 3;
const SABRE_LOOKAHEAD: usize = 20;
const SABRE_LOOKAHEAD_WEIGHT: f64 = 0.5;
const SABRE_DECAY_STEP: f64 = 0.001;
const SABRE_DECAY_RESET: usize = 5;
const TKET_LOOKAHEAD: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RouteMethod {
    Basic,
    Stochastic,
    Sabre,
    Tket,
}

impl RouteMethod {
    pub const ALL: [RouteMethod; 4] = [
        RouteMethod::Basic,
        RouteMethod::Stochastic,
        RouteMethod::Sabre,
        RouteMethod::Tket,
    ];

    pub fn name(self) -> &'static str {
        match self {
            RouteMethod::Basic => "basic",
            RouteMethod::Stochastic => "stochastic",
            RouteMethod::Sabre => "sabre",
            RouteMethod::Tket => "tket",
        }
    }
}

/// A routed circuit plus what routing added.
#[derive(Debug, Clone, PartialEq)]
pub struct Routed {
    pub circuit: Circuit,
    pub swaps: usize,
    pub bridges: usize,
}

/// Rewrites gates into `platform`'s native set without merging anything.
fn lower_native(gates: Vec<Gate>, platform: Platform) -> Vec<Gate> {
    let mut out = Vec::new();
    for g in gates.iter().flat_map(|g| lower_2q(g, platform)) {
        if g.is_two_qubit() || platform.is_native(g.kind) {
            out.push(g);
        } else {
            out.extend(
                euler_1q(&g.matrix(), platform.euler_basis(), g.qubits[0])
                    .expect("gate matrices are unitary"),
            );
        }
    }
    out
}

/// Tracks where every virtual wire currently sits and collects the
/// physical gate list.
struct Router<'a> {
    d: &'a Device,
    /// virtual → physical
    pos: Vec<usize>,
    /// physical → virtual
    inv: Vec<Option<usize>>,
    out: Vec<Gate>,
    last_on: Vec<Option<usize>>,
    swaps: usize,
    bridges: usize,
}

impl<'a> Router<'a> {
    fn new(d: &'a Device, pos: &[usize]) -> Self {
        let mut inv = vec![None; d.num_qubits];
        for (v, &p) in pos.iter().enumerate() {
            inv[p] = Some(v);
        }
        Self {
            d,
            pos: pos.to_vec(),
            inv,
            out: Vec::new(),
            last_on: vec![None; d.num_qubits],
            swaps: 0,
            bridges: 0,
        }
    }

    fn push(&mut self, g: Gate) {
        for &q in &g.qubits {
            self.last_on[q] = Some(self.out.len());
        }
        self.out.push(g);
    }

    fn dist(&self, g: &Gate) -> u32 {
        self.d
            .distance(self.pos[g.qubits[0]], self.pos[g.qubits[1]])
    }

    /// Distance of `g` if physical qubits `x` and `y` were exchanged.
    fn dist_after(&self, g: &Gate, (x, y): (usize, usize)) -> u32 {
        let m = |p: usize| {
            if p == x {
                y
            } else if p == y {
                x
            } else {
                p
            }
        };
        self.d
            .distance(m(self.pos[g.qubits[0]]), m(self.pos[g.qubits[1]]))
    }

    fn executable(&self, g: &Gate) -> bool {
        !g.is_two_qubit() || self.dist(g) == 1
    }

    fn execute(&mut self, g: &Gate) {
        let p = g.remapped(|q| self.pos[q]);
        self.push(p);
    }

    /// The last gate emitted on both `x` and `y`, if it is one two-qubit gate.
    fn pair_gate(&self, x: usize, y: usize) -> Option<&Gate> {
        match (self.last_on[x], self.last_on[y]) {
            (Some(i), Some(j)) if i == j => Some(&self.out[i]),
            _ => None,
        }
    }

    fn swap(&mut self, x: usize, y: usize) {
        // start with the cx just emitted on this pair so the two cancel
        let (c, t) = match self.pair_gate(x, y) {
            Some(g) if g.kind == GateKind::Cx => (g.qubits[0], g.qubits[1]),
            _ => (x.min(y), x.max(y)),
        };
        let gates = vec![Gate::cx(c, t), Gate::cx(t, c), Gate::cx(c, t)];
        for g in lower_native(gates, self.d.platform) {
            self.push(g);
        }
        self.inv.swap(x, y);
        for p in [x, y] {
            if let Some(v) = self.inv[p] {
                self.pos[v] = p;
            }
        }
        self.swaps += 1;
    }

    /// cx across a middle qubit without moving anything.
    fn bridge(&mut self, g: &Gate, m: usize) {
        let (c, t) = (self.pos[g.qubits[0]], self.pos[g.qubits[1]]);
        let gates = vec![
            Gate::cx(c, m),
            Gate::cx(m, t),
            Gate::cx(c, m),
            Gate::cx(m, t),
        ];
        for g in lower_native(gates, self.d.platform) {
            self.push(g);
        }
        self.bridges += 1;
    }

    /// One step along a shortest path between the operands of `g`.
    fn forced_step(&self, g: &Gate) -> (usize, usize) {
        let path = self
            .d
            .shortest_path(self.pos[g.qubits[0]], self.pos[g.qubits[1]]);
        (path[0], path[1])
    }
}

enum Step {
    Swap(usize, usize),
    Bridge(usize, usize),
}

/// What a strategy sees when every front gate is blocked.
struct Ctx<'r, 'a, 'g> {
    gates: &'g [Gate],
    router: &'r Router<'a>,
    /// Blocked front gates, ascending.
    front: &'r [usize],
    done: &'r [bool],
}

impl Ctx<'_, '_, '_> {
    fn candidates(&self) -> Vec<(usize, usize)> {
        let mut set = BTreeSet::new();
        for &i in self.front {
            for &q in &self.gates[i].qubits {
                let p = self.router.pos[q];
                for &n in self.router.d.neighbors(p) {
                    set.insert((p.min(n), p.max(n)));
                }
            }
        }
        set.into_iter().collect()
    }

    /// The next `k` unexecuted two-qubit gates behind the front.
    fn lookahead(&self, k: usize) -> Vec<usize> {
        let start = self.front[0];
        (start..self.gates.len())
            .filter(|&i| {
                !self.done[i]
                    && self.gates[i].is_two_qubit()
                    && self.front.binary_search(&i).is_err()
            })
            .take(k)
            .collect()
    }

    fn cost(&self, set: &[usize], swap: Option<(usize, usize)>) -> u32 {
        set.iter()
            .map(|&i| match swap {
                Some(s) => self.router.dist_after(&self.gates[i], s),
                None => self.router.dist(&self.gates[i]),
            })
            .sum()
    }
}

trait Strategy {
    fn choose(&mut self, ctx: &Ctx) -> Step;
    fn swapped(&mut self, _x: usize, _y: usize) {}
    fn progressed(&mut self) {}
}

fn build_dag(gates: &[Gate], wires: usize) -> (Vec<Vec<usize>>, Vec<usize>) {
    let mut last: Vec<Option<usize>> = vec![None; wires];
    let mut succ = vec![Vec::new(); gates.len()];
    let mut npred = vec![0; gates.len()];
    for (i, g) in gates.iter().enumerate() {
        let mut preds: Vec<usize> = g.qubits.iter().filter_map(|&q| last[q]).collect();
        preds.sort_unstable();
        preds.dedup();
        for p in preds {
            succ[p].push(i);
            npred[i] += 1;
        }
        for &q in &g.qubits {
            last[q] = Some(i);
        }
    }
    (succ, npred)
}

fn stall_limit(d: &Device) -> usize {
    let diameter = d
        .all_pairs_distance()
        .iter()
        .flat_map(|r| r.iter().copied())
        .max()
        .unwrap_or(1) as usize;
    3 * diameter + 5
}

/// Front-layer routing loop shared by the SABRE, stochastic and TKET-style
/// routers. Executable gates run as soon as their predecessors have; when
/// every front gate is blocked the strategy picks a swap or a bridge. A
/// strategy that stops making progress is overridden with shortest-path
/// steps.
fn run_front<'a>(
    gates: &[Gate],
    d: &'a Device,
    pos: &[usize],
    strategy: &mut impl Strategy,
) -> Router<'a> {
    let mut router = Router::new(d, pos);
    let (succ, mut npred) = build_dag(gates, pos.len());
    let mut front: BTreeSet<usize> = (0..gates.len()).filter(|&i| npred[i] == 0).collect();
    let mut done = vec![false; gates.len()];
    let limit = stall_limit(d);
    let mut stalled = 0;

    let complete =
        |i: usize, front: &mut BTreeSet<usize>, npred: &mut Vec<usize>, done: &mut Vec<bool>| {
            front.remove(&i);
            done[i] = true;
            for &s in &succ[i] {
                npred[s] -= 1;
                if npred[s] == 0 {
                    front.insert(s);
                }
            }
        };

    loop {
        // lowest index first keeps conforming stretches in their original order
        while let Some(i) = front
            .iter()
            .copied()
            .find(|&i| router.executable(&gates[i]))
        {
            router.execute(&gates[i]);
            complete(i, &mut front, &mut npred, &mut done);
            stalled = 0;
            strategy.progressed();
        }
        let blocked: Vec<usize> = front.iter().copied().collect();
        if blocked.is_empty() {
            break;
        }
        let step = if stalled >= limit {
            let (x, y) = router.forced_step(&gates[blocked[0]]);
            Step::Swap(x, y)
        } else {
            strategy.choose(&Ctx {
                gates,
                router: &router,
                front: &blocked,
                done: &done,
            })
        };
        match step {
            Step::Swap(x, y) => {
                router.swap(x, y);
                strategy.swapped(x, y);
                stalled += 1;
            }
            Step::Bridge(i, m) => {
                router.bridge(&gates[i], m);
                complete(i, &mut front, &mut npred, &mut done);
                stalled = 0;
                strategy.progressed();
            }
        }
    }
    router
}

struct Sabre {
    rng: ChaCha8Rng,
    decay: Vec<f64>,
    since_reset: usize,
}

impl Sabre {
    fn new(d: &Device, seed: u64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
            decay: vec![1.0; d.num_qubits],
            since_reset: 0,
        }
    }
}

impl Strategy for Sabre {
    fn choose(&mut self, ctx: &Ctx) -> Step {
        let ext = ctx.lookahead(SABRE_LOOKAHEAD);
        let scored: Vec<((usize, usize), f64, bool)> = ctx
            .candidates()
            .into_iter()
            .map(|s| {
                let h = ctx.cost(ctx.front, Some(s)) as f64
                    + SABRE_LOOKAHEAD_WEIGHT * ctx.cost(&ext, Some(s)) as f64;
                let cancels = ctx
                    .router
                    .pair_gate(s.0, s.1)
                    .is_some_and(|g| g.is_two_qubit());
                (s, self.decay[s.0].max(self.decay[s.1]) * h, cancels)
            })
            .collect();
        let best = scored.iter().map(|c| c.1).fold(f64::INFINITY, f64::min);
        let tied: Vec<_> = scored.iter().filter(|c| c.1 <= best + 1e-9).collect();
        // prefer a swap that can cancel against the gate just emitted on its pair
        let pool: Vec<_> = if tied.iter().any(|c| c.2) {
            tied.into_iter().filter(|c| c.2).collect()
        } else {
            tied
        };
        let (x, y) = pool[self.rng.gen_range(0..pool.len())].0;
        Step::Swap(x, y)
    }

    fn swapped(&mut self, x: usize, y: usize) {
        self.decay[x] += SABRE_DECAY_STEP;
        self.decay[y] += SABRE_DECAY_STEP;
        self.since_reset += 1;
        if self.since_reset == SABRE_DECAY_RESET {
            self.progressed();
        }
    }

    fn progressed(&mut self) {
        self.decay.iter_mut().for_each(|v| *v = 1.0);
        self.since_reset = 0;
    }
}

struct Stochastic {
    rng: ChaCha8Rng,
}

impl Strategy for Stochastic {
    fn choose(&mut self, ctx: &Ctx) -> Step {
        let now = ctx.cost(ctx.front, None) as i64;
        let gains: Vec<((usize, usize), i64)> = ctx
            .candidates()
            .into_iter()
            .map(|s| (s, now - ctx.cost(ctx.front, Some(s)) as i64))
            .collect();
        let best = gains.iter().map(|g| g.1).max().unwrap_or(0);
        if best <= 0 {
            let (x, y) = ctx.router.forced_step(&ctx.gates[ctx.front[0]]);
            return Step::Swap(x, y);
        }
        let pool: Vec<_> = gains.iter().filter(|g| g.1 == best).collect();
        let (x, y) = pool[self.rng.gen_range(0..pool.len())].0;
        Step::Swap(x, y)
    }
}

struct Tket;

impl Strategy for Tket {
    fn choose(&mut self, ctx: &Ctx) -> Step {
        let ext = ctx.lookahead(TKET_LOOKAHEAD);
        let (front_now, ext_now) = (ctx.cost(ctx.front, None), ctx.cost(&ext, None));
        let (best, front_after, ext_after) = ctx
            .candidates()
            .into_iter()
            .map(|s| (s, ctx.cost(ctx.front, Some(s)), ctx.cost(&ext, Some(s))))
            .min_by_key(|&(s, f, e)| (f, e, s))
            .expect("a blocked gate has neighbours");

        if ext_after >= ext_now {
            let d = ctx.router.d;
            for &i in ctx.front {
                let g = &ctx.gates[i];
                if g.kind == GateKind::Cx && ctx.router.dist(g) == 2 {
                    let (c, t) = (ctx.router.pos[g.qubits[0]], ctx.router.pos[g.qubits[1]]);
                    let m = *d
                        .neighbors(c)
                        .iter()
                        .find(|&&m| d.is_coupled(m, t))
                        .expect("distance two has a middle qubit");
                    return Step::Bridge(i, m);
                }
            }
        }
        if front_after >= front_now {
            let (x, y) = ctx.router.forced_step(&ctx.gates[ctx.front[0]]);
            return Step::Swap(x, y);
        }
        Step::Swap(best.0, best.1)
    }
}

fn route_sequential<'a>(gates: &[Gate], d: &'a Device, pos: &[usize]) -> Router<'a> {
    let mut router = Router::new(d, pos);
    for g in gates {
        if !router.executable(g) {
            let path = d.shortest_path(router.pos[g.qubits[0]], router.pos[g.qubits[1]]);
            for w in path.windows(2).take(path.len() - 2) {
                router.swap(w[0], w[1]);
            }
        }
        router.execute(g);
    }
    router
}

/// Swap count and final placement of a SABRE pass over logical `gates`
/// starting from `layout` (logical → physical). Used by the layout search.
pub(crate) fn sabre_swap_count(
    gates: &[Gate],
    d: &Device,
    layout: &[usize],
    seed: u64,
) -> (usize, Vec<usize>) {
    let r = run_front(gates, d, layout, &mut Sabre::new(d, seed));
    (r.swaps, r.pos)
}

fn check(c: &Circuit, d: &Device) -> Result<()> {
    if !c.has_layout() {
        return Err(Error::MissingLayout);
    }
    if c.num_qubits != d.num_qubits {
        return Err(Error::Device {
            device: d.name.clone(),
            msg: format!(
                "circuit register has {} wires, device has {} qubits",
                c.num_qubits, d.num_qubits
            ),
        });
    }
    Ok(())
}

fn finish(c: &Circuit, r: Router) -> Routed {
    let old: Vec<usize> = c
        .final_permutation
        .clone()
        .unwrap_or_else(|| (0..c.num_qubits).collect());
    let perm: Vec<usize> = old.iter().map(|&w| r.pos[w]).collect();
    let identity = perm.iter().enumerate().all(|(i, &p)| i == p);
    Routed {
        circuit: Circuit {
            num_qubits: c.num_qubits,
            gates: r.out,
            initial_layout: c.initial_layout.clone(),
            final_permutation: (!identity || c.final_permutation.is_some()).then_some(perm),
        },
        swaps: r.swaps,
        bridges: r.bridges,
    }
}

/// Routes a laid-out circuit with the given method.
pub fn route(c: &Circuit, d: &Device, method: RouteMethod, seed: u64) -> Result<Routed> {
    check(c, d)?;
    let identity: Vec<usize> = (0..c.num_qubits).collect();
    let routed = match method {
        RouteMethod::Basic => finish(c, route_sequential(&c.gates, d, &identity)),
        RouteMethod::Sabre => finish(
            c,
            run_front(&c.gates, d, &identity, &mut Sabre::new(d, seed)),
        ),
        RouteMethod::Tket => finish(c, run_front(&c.gates, d, &identity, &mut Tket)),
        RouteMethod::Stochastic => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut best: Option<Routed> = None;
            for _ in 0..STOCHASTIC_TRIALS {
                let mut s = Stochastic {
                    rng: ChaCha8Rng::seed_from_u64(rng.gen()),
                };
                let trial = finish(c, run_front(&c.gates, d, &identity, &mut s));
                let better = best.as_ref().is_none_or(|b| {
                    (trial.swaps, trial.circuit.len()) < (b.swaps, b.circuit.len())
                });
                if better {
                    best = Some(trial);
                }
            }
            best.expect("at least one trial")
        }
    };
    debug_assert!(super::respects_coupling(&routed.circuit, d));
    Ok(routed)
}

/// Moves each blocked operand along a shortest path until it neighbours
/// its partner.
pub fn route_basic(c: &Circuit, d: &Device) -> Result<Circuit> {
    Ok(route(c, d, RouteMethod::Basic, 0)?.circuit)
}

/// Best of [`STOCHASTIC_TRIALS`] randomized greedy routings.
pub fn route_stochastic(c: &Circuit, d: &Device, seed: u64) -> Result<Circuit> {
    Ok(route(c, d, RouteMethod::Stochastic, seed)?.circuit)
}

/// Lookahead swap search scored by front and extended-set distances.
pub fn route_sabre(c: &Circuit, d: &Device, seed: u64) -> Result<Circuit> {
    Ok(route(c, d, RouteMethod::Sabre, seed)?.circuit)
}

/// Deterministic distance-greedy routing that bridges distance-two cx gates
/// when a swap would not help the gates behind them.
pub fn route_tket_style(c: &Circuit, d: &Device) -> Result<Circuit> {
    Ok(route(c, d, RouteMethod::Tket, 0)?.circuit)
}
