use std::collections::HashMap;
use std::sync::Arc;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::scalar::Thirds;
use crate::topology::{ChimeraTopology, Edge, LogicalGraph, LogicalOptions, QubitId, CELL_QUBITS};

use super::gadget::gadget_term;
use super::{InstanceClass, InstanceMeta, IsingInstance, LoopLevel, LoopTerm, SpinState, Term, TermKind};

pub const HARDWARE_ALPHA: f64 = 0.35;
pub const LOGICAL_ALPHA: f64 = 0.65;
/// Fraction of complete cells that receive a gadget.
pub const GADGET_FRACTION: f64 = 0.1;

/// Loop couplings saturate at this magnitude; edges already there are not reused.
const LOOP_SATURATION: Thirds = Thirds::units(3);

/// Most loop turns a logical cell can host while its background stays ferromagnetic.
const MAX_TURNS_PER_CELL: usize = 6;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GeneratorOptions {
    /// Random-walk attempts allowed per accepted loop.
    pub retry_budget: usize,
    /// Fresh starts of the whole instance after a stall past the first loop.
    pub max_restarts: usize,
    /// Logical class only: admit cells missing one intra-cell coupler.
    pub allow_missing_intra: bool,
}

impl Default for GeneratorOptions {
    fn default() -> Self {
        Self { retry_budget: 100_000, max_restarts: 1_000, allow_missing_intra: false }
    }
}

fn check_params(alpha: f64, p: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::param(format!("loop density must be positive, got {alpha}")));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::param(format!("gadget fraction must lie in [0, 1], got {p}")));
    }
    Ok(())
}

/// A loop could not be placed within the retry budget.
struct Stall {
    placed: usize,
    attempts: usize,
}

/// Run `round` until it places every loop. A stall on the first loop means
/// the graph admits no loop at all, so it is reported without restarting.
fn with_restarts<T>(
    opts: &GeneratorOptions,
    what: &str,
    mut round: impl FnMut() -> std::result::Result<T, Stall>,
) -> Result<T> {
    let mut restarts = 0;
    loop {
        match round() {
            Ok(v) => return Ok(v),
            Err(stall) if stall.placed > 0 && restarts < opts.max_restarts => restarts += 1,
            Err(stall) => {
                return Err(Error::Generation {
                    attempts: stall.attempts,
                    reason: format!(
                        "no admissible {what} after {} loops and {restarts} restarts",
                        stall.placed
                    ),
                })
            }
        }
    }
}

/// Non-backtracking random walk that stops at the first repeated vertex.
struct Walker {
    position: Vec<usize>,
    stamp: Vec<u32>,
    epoch: u32,
    path: Vec<u32>,
    options: Vec<u32>,
}

impl Walker {
    fn new(num_vertices: usize) -> Self {
        Self { position: vec![0; num_vertices], stamp: vec![0; num_vertices], epoch: 0, path: Vec::new(), options: Vec::new() }
    }

    /// Closed part of the walk, or `None` at a dead end.
    fn cycle<R, F>(&mut self, rng: &mut R, start: u32, mut fill: F) -> Option<&[u32]>
    where
        R: Rng + ?Sized,
        F: FnMut(u32, Option<u32>, &mut Vec<u32>),
    {
        self.epoch = self.epoch.wrapping_add(1);
        if self.epoch == 0 {
            self.stamp.iter_mut().for_each(|s| *s = 0);
            self.epoch = 1;
        }
        self.path.clear();
        let mut prev = None;
        let mut cur = start;
        loop {
            self.stamp[cur as usize] = self.epoch;
            self.position[cur as usize] = self.path.len();
            self.path.push(cur);
            self.options.clear();
            fill(cur, prev, &mut self.options);
            let &next = self.options.choose(rng)?;
            if self.stamp[next as usize] == self.epoch {
                return Some(&self.path[self.position[next as usize]..]);
            }
            prev = Some(cur);
            cur = next;
        }
    }
}

fn loop_couplings<R: Rng + ?Sized>(rng: &mut R, len: usize) -> (Vec<Thirds>, usize) {
    let flipped = rng.random_range(0..len);
    let couplings = (0..len)
        .map(|i| if i == flipped { Thirds::units(1) } else { Thirds::units(-1) })
        .collect();
    (couplings, flipped)
}

fn place_gadgets<R: Rng + ?Sized>(
    rng: &mut R,
    topo: &ChimeraTopology,
    mut eligible: Vec<usize>,
    count: usize,
) -> Result<Vec<Term>> {
    if count > eligible.len() {
        return Err(Error::param(format!(
            "{count} gadgets requested but only {} eligible cells",
            eligible.len()
        )));
    }
    let (chosen, _) = eligible.partial_shuffle(rng, count);
    let mut cells = chosen.to_vec();
    cells.sort_unstable();
    Ok(cells.into_iter().map(|c| gadget_term(topo, c)).collect())
}

/// Frustrated loops on the physical graph plus gadgets in complete cells.
pub fn gen_hardware_planted(
    topo: Arc<ChimeraTopology>,
    alpha: f64,
    p: f64,
    seed: u64,
    opts: &GeneratorOptions,
) -> Result<IsingInstance> {
    check_params(alpha, p)?;
    let side = topo.side();
    let n_loops = (alpha * (CELL_QUBITS * side * side) as f64).floor() as usize;
    let n_gadgets = (p * (side * side) as f64).floor() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let starts: Vec<QubitId> = topo.qubits().filter(|&q| !topo.adjacency(q).is_empty()).collect();
    if starts.is_empty() && n_loops > 0 {
        return Err(Error::Generation { attempts: 0, reason: "topology has no couplers".into() });
    }
    let mut walker = Walker::new(topo.num_ids());

    let mut terms = with_restarts(opts, "physical loop", || {
        let mut acc: Vec<Thirds> = vec![Thirds::ZERO; topo.couplers().len()];
        let mut terms = Vec::with_capacity(n_loops + n_gadgets);
        for placed in 0..n_loops {
            let mut attempts = 0;
            let cycle = loop {
                if attempts == opts.retry_budget {
                    return Err(Stall { placed, attempts });
                }
                attempts += 1;
                let start = *starts.choose(&mut rng).expect("non-empty");
                let Some(cycle) = walker.cycle(&mut rng, start, |cur, prev, out| {
                    out.extend(topo.adjacency(cur).iter().copied().filter(|&n| Some(n) != prev))
                }) else {
                    continue;
                };
                let saturated = (0..cycle.len()).any(|i| {
                    let idx = topo.coupler_index(cycle[i], cycle[(i + 1) % cycle.len()]).expect("walk edge");
                    acc[idx].abs() >= LOOP_SATURATION
                });
                let first_cell = ChimeraTopology::cell_of(cycle[0]);
                let multi_cell = cycle.iter().any(|&q| ChimeraTopology::cell_of(q) != first_cell);
                if !saturated && multi_cell {
                    break cycle.to_vec();
                }
            };
            let (couplings, flipped) = loop_couplings(&mut rng, cycle.len());
            let j: Vec<(Edge, Thirds)> = (0..cycle.len())
                .map(|i| (Edge::new(cycle[i], cycle[(i + 1) % cycle.len()]), couplings[i]))
                .collect();
            for &(e, v) in &j {
                acc[topo.coupler_index(e.0, e.1).expect("walk edge")] += v;
            }
            terms.push(Term {
                kind: TermKind::Loop(LoopTerm {
                    level: LoopLevel::Physical,
                    vertices: cycle,
                    couplings,
                    flipped_edge: flipped,
                }),
                h: Vec::new(),
                j,
            });
        }
        Ok(terms)
    })?;

    let complete: Vec<usize> = (0..topo.num_cells()).filter(|&c| topo.is_complete_cell(c)).collect();
    terms.extend(place_gadgets(&mut rng, &topo, complete, n_gadgets)?);

    let planted = SpinState::all_up(topo.num_ids());
    let meta = InstanceMeta { class: InstanceClass::Hardware, alpha, p, seed };
    IsingInstance::from_terms(topo, terms, planted, meta)
}

fn is_vertical(side: usize, a: usize, b: usize) -> bool {
    a.abs_diff(b) == side
}

/// Frustrated loops on the logical cell graph, embedded with ferromagnetic
/// cells, plus gadgets in a fraction of the connected cells.
///
/// Each logical loop becomes four parallel physical chains. Where a loop turns
/// inside a cell it borrows part of that cell's intra-cell background, so the
/// loop's term stays minimized by the all-up state; the rest of the background
/// forms its own ferromagnetic term.
pub fn gen_logical_planted(
    topo: Arc<ChimeraTopology>,
    alpha: f64,
    p: f64,
    seed: u64,
    opts: &GeneratorOptions,
) -> Result<IsingInstance> {
    check_params(alpha, p)?;
    let lg: LogicalGraph = topo.logical_graph_with(LogicalOptions { allow_missing_intra: opts.allow_missing_intra });
    let side = topo.side();
    let n_loops = (alpha * lg.cells().len() as f64).floor() as usize;
    let connected = lg.connected_cells();
    let n_gadgets = (p * connected.len() as f64).floor() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    if connected.is_empty() && n_loops > 0 {
        return Err(Error::Generation { attempts: 0, reason: "logical graph has no edges".into() });
    }
    let nbrs = indexed_neighbors(&lg, topo.num_cells());
    let mut walker = Walker::new(topo.num_cells());

    let (mut terms, turns) = with_restarts(opts, "logical loop with more than four cells", || {
        let mut j_log: Vec<Thirds> = vec![Thirds::ZERO; lg.edges().len()];
        let mut turns: HashMap<usize, usize> = HashMap::new();
        let mut terms = Vec::new();
        for placed in 0..n_loops {
            if !admits_long_cycle(&nbrs, &j_log) {
                return Err(Stall { placed, attempts: 0 });
            }
            let mut attempts = 0;
            let (cycle, turn_cells) = loop {
                if attempts == opts.retry_budget {
                    return Err(Stall { placed, attempts });
                }
                attempts += 1;
                let start = *connected.choose(&mut rng).expect("non-empty") as u32;
                let Some(cycle) = walker.cycle(&mut rng, start, |cur, prev, out| {
                    out.extend(
                        nbrs[cur as usize]
                            .iter()
                            .filter(|&&(n, e)| Some(n as u32) != prev && j_log[e].abs() < LOOP_SATURATION)
                            .map(|&(n, _)| n as u32),
                    )
                }) else {
                    continue;
                };
                if cycle.len() <= 4 {
                    continue;
                }
                let n = cycle.len();
                let turn_cells: Vec<usize> = (0..n)
                    .filter(|&i| {
                        let prev = cycle[(i + n - 1) % n] as usize;
                        let cur = cycle[i] as usize;
                        let next = cycle[(i + 1) % n] as usize;
                        is_vertical(side, prev, cur) != is_vertical(side, cur, next)
                    })
                    .map(|i| cycle[i] as usize)
                    .collect();
                if turn_cells.iter().all(|c| turns.get(c).copied().unwrap_or(0) < MAX_TURNS_PER_CELL) {
                    break (cycle.to_vec(), turn_cells);
                }
            };

            let (couplings, flipped) = loop_couplings(&mut rng, cycle.len());
            let mut j = Vec::new();
            for i in 0..cycle.len() {
                let (a, b) = (cycle[i] as usize, cycle[(i + 1) % cycle.len()] as usize);
                let &(_, e) = nbrs[a].iter().find(|&&(n, _)| n == b).expect("logical edge");
                j_log[e] += couplings[i];
                let links = topo.inter_cell_ids(a, b).expect("logical edge joins neighbours");
                j.extend(links.iter().map(|&e| (e, couplings[i])));
            }
            for cell in turn_cells {
                let count = turns.entry(cell).or_default();
                j.extend(turn_share(&topo, cell, count.is_multiple_of(2)));
                *count += 1;
            }
            terms.push(Term {
                kind: TermKind::Loop(LoopTerm {
                    level: LoopLevel::Logical,
                    vertices: cycle,
                    couplings,
                    flipped_edge: flipped,
                }),
                h: Vec::new(),
                j,
            });
        }
        Ok((terms, turns))
    })?;

    for &cell in lg.cells() {
        let mut borrowed: HashMap<Edge, Thirds> = HashMap::new();
        for t in 0..turns.get(&cell).copied().unwrap_or(0) {
            for (e, v) in turn_share(&topo, cell, t % 2 == 0) {
                *borrowed.entry(e).or_default() += v;
            }
        }
        let j = intra_couplers(&topo, cell)
            .map(|e| (e, Thirds::units(-3) - borrowed.get(&e).copied().unwrap_or(Thirds::ZERO)))
            .collect();
        terms.push(Term { kind: TermKind::CellBackground { cell }, h: Vec::new(), j });
    }

    let eligible: Vec<usize> = connected.iter().copied().filter(|&c| topo.is_complete_cell(c)).collect();
    terms.extend(place_gadgets(&mut rng, &topo, eligible, n_gadgets)?);

    let planted = SpinState::all_up(topo.num_ids());
    let meta = InstanceMeta { class: InstanceClass::Logical, alpha, p, seed };
    IsingInstance::from_terms(topo, terms, planted, meta)
}

/// Neighbours of each cell paired with the index of the joining logical edge.
fn indexed_neighbors(lg: &LogicalGraph, num_cells: usize) -> Vec<Vec<(usize, usize)>> {
    let mut nbrs = vec![Vec::new(); num_cells];
    for (idx, &(a, b)) in lg.edges().iter().enumerate() {
        nbrs[a].push((b, idx));
        nbrs[b].push((a, idx));
    }
    for list in &mut nbrs {
        list.sort_unstable();
    }
    nbrs
}

/// True when the unsaturated part of the logical graph has a biconnected
/// block with more than four cells. For subgraphs of the square grid this is
/// equivalent to having a simple cycle longer than four, so a walk can only
/// ever succeed when it holds.
fn admits_long_cycle(nbrs: &[Vec<(usize, usize)>], j_log: &[Thirds]) -> bool {
    struct Search<'a> {
        nbrs: &'a [Vec<(usize, usize)>],
        j_log: &'a [Thirds],
        disc: Vec<usize>,
        low: Vec<usize>,
        clock: usize,
        stack: Vec<(usize, usize)>,
    }

    impl Search<'_> {
        fn visit(&mut self, u: usize, parent_edge: Option<usize>) -> bool {
            self.clock += 1;
            self.disc[u] = self.clock;
            self.low[u] = self.clock;
            for &(v, e) in &self.nbrs[u] {
                if Some(e) == parent_edge || self.j_log[e].abs() >= LOOP_SATURATION {
                    continue;
                }
                if self.disc[v] == 0 {
                    self.stack.push((u, v));
                    if self.visit(v, Some(e)) {
                        return true;
                    }
                    self.low[u] = self.low[u].min(self.low[v]);
                    if self.low[v] >= self.disc[u] {
                        let mut cells = Vec::new();
                        while let Some((a, b)) = self.stack.pop() {
                            cells.extend([a, b]);
                            if (a, b) == (u, v) {
                                break;
                            }
                        }
                        cells.sort_unstable();
                        cells.dedup();
                        if cells.len() > 4 {
                            return true;
                        }
                    }
                } else if self.disc[v] < self.disc[u] {
                    self.stack.push((u, v));
                    self.low[u] = self.low[u].min(self.disc[v]);
                }
            }
            false
        }
    }

    let n = nbrs.len();
    let mut search = Search { nbrs, j_log, disc: vec![0; n], low: vec![0; n], clock: 0, stack: Vec::new() };
    (0..n).any(|c| search.disc[c] == 0 && search.visit(c, None))
}

fn intra_couplers(topo: &ChimeraTopology, cell: usize) -> impl Iterator<Item = Edge> + '_ {
    let base = (cell * CELL_QUBITS) as QubitId;
    (0..4)
        .flat_map(move |a| (4..8).map(move |b| Edge(base + a, base + b)))
        .filter(|e| topo.has_coupler(e.0, e.1))
}

/// Intra-cell couplings a loop takes over where it turns. Turns alternate
/// between favouring the `(k, k+4)` links and the remaining couplers, so six
/// turns use up the whole `-3` background exactly.
fn turn_share(topo: &ChimeraTopology, cell: usize, even: bool) -> impl Iterator<Item = (Edge, Thirds)> + '_ {
    intra_couplers(topo, cell).map(move |e| {
        let link = e.1 - e.0 == 4;
        (e, Thirds(if link == even { -2 } else { -1 }))
    })
}
