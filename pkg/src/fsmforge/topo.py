"""Phase-structured random topologies.

Draw order (all from one Xoshiro256 seeded with ``cfg.seed``):

1. per phase, in order: size via ``randint``; then for each non-exit member
   a forward-branch coin (and a target draw if it fires); then for each
   non-entry member a back-edge coin (and target); then a self-loop coin for
   every member;
2. per inter-phase jump: source phase via ``below(k)``, destination via
   ``below(k - 1)`` shifted past the source (no draws when k == 1).

State 0 is the reset state; phase members are numbered consecutively after it.
"""

from __future__ import annotations

from fsmforge.core import AbstractGraph, FsmError, Phase, Tier, TopoConfig
from fsmforge.rng import Xoshiro256, derive_seed


class InfeasibleConfigError(FsmError):
    pass


class _DegreeBook:
    """Edge set plus out-degree accounting against a cap."""

    def __init__(self, cap: int):
        self.cap = cap
        self.edges: set[tuple[int, int]] = set()
        self.degree: dict[int, int] = {}
        self.reserved: set[int] = set()

    def load(self, u: int) -> int:
        return self.degree.get(u, 0) + (1 if u in self.reserved else 0)

    def add(self, u: int, v: int, *, mandatory: bool = False) -> bool:
        if (u, v) in self.edges:
            return False
        if not mandatory and self.load(u) >= self.cap:
            return False
        self.edges.add((u, v))
        self.degree[u] = self.degree.get(u, 0) + 1
        return True


def _sample_phase_into(cfg: TopoConfig, rng: Xoshiro256, id_base: int, book: _DegreeBook) -> Phase:
    lo, hi = cfg.states_per_phase
    size = rng.randint(lo, hi)
    members = tuple(range(id_base, id_base + size))
    entry, exit_ = members[0], members[-1]
    book.reserved.add(exit_)
    for a, b in zip(members, members[1:]):
        book.add(a, b, mandatory=True)

    for j in range(size - 1):
        if rng.bernoulli(cfg.p_forward_branch):
            first = j + 2 if j + 2 < size else j + 1
            target = rng.randint(first, size - 1)
            book.add(members[j], members[target])
    for j in range(1, size):
        if rng.bernoulli(cfg.p_back_edge):
            target = rng.below(j)
            book.add(members[j], members[target])
    for j in range(size):
        if rng.bernoulli(cfg.p_self_loop):
            book.add(members[j], members[j])
    return Phase(entry, exit_, members)


def sample_phase(cfg: TopoConfig, rng: Xoshiro256, id_base: int) -> tuple[Phase, set[tuple[int, int]]]:
    """One phase: entry-to-exit chain plus probabilistic extra edges."""
    book = _DegreeBook(cfg.max_out_degree)
    phase = _sample_phase_into(cfg, rng, id_base, book)
    return phase, set(book.edges)


def sample_graph(cfg: TopoConfig) -> tuple[AbstractGraph, TopoConfig]:
    """Sample a full graph; the config is echoed back for provenance."""
    # chain edges use one slot, and the exit keeps one reserved for the cycle
    if cfg.max_out_degree < 1:
        raise InfeasibleConfigError("max_out_degree must leave room for chain and cycle edges")
    rng = Xoshiro256(cfg.seed)
    book = _DegreeBook(cfg.max_out_degree)
    reset = 0
    phases: list[Phase] = []
    next_id = 1
    for _ in range(cfg.num_phases):
        ph = _sample_phase_into(cfg, rng, next_id, book)
        phases.append(ph)
        next_id += len(ph.members)

    book.add(reset, phases[0].entry, mandatory=True)
    k = len(phases)
    for i, ph in enumerate(phases):
        book.reserved.discard(ph.exit)
        book.add(ph.exit, phases[(i + 1) % k].entry, mandatory=True)

    if k > 1:
        for _ in range(cfg.num_inter_phase_jumps):
            src = rng.below(k)
            dst = rng.below(k - 1)
            if dst >= src:
                dst += 1
            book.add(phases[src].exit, phases[dst].entry)

    for u, d in book.degree.items():
        if d > cfg.max_out_degree:
            raise InfeasibleConfigError(
                f"state {u} needs out-degree {d} > max_out_degree {cfg.max_out_degree}"
            )
    graph = AbstractGraph(
        states=tuple(range(next_id)),
        phases=tuple(phases),
        edges=frozenset(book.edges),
        reset_state=reset,
    )
    return graph, cfg


# Per-tier tuning. Phase counts bracket the dataset averages (2.71 / 5.24 /
# 8.83); per-phase size ranges are clipped so every sample lands inside the
# tier's state bounds; edge probabilities were calibrated so population
# mean edge counts sit near 11.95 / 32.17 / 65.39.
_PRESETS = {
    Tier.LOW: dict(phases=(2, 3), size=(2, 5), fwd=0.25, back=0.20, loop=0.15, jumps=1),
    Tier.MEDIUM: dict(phases=(4, 6), size=(3, 6), fwd=0.28, back=0.22, loop=0.20, jumps=3),
    Tier.HIGH: dict(phases=(7, 11), size=(3, 8), fwd=0.25, back=0.20, loop=0.16, jumps=6),
}
PRESET_MAX_OUT_DEGREE = 4


def preset_config(tier: Tier, seed: int) -> TopoConfig:
    p = _PRESETS[tier]
    rng = Xoshiro256(derive_seed(seed, 1))
    k = rng.randint(*p["phases"])
    n_min, n_max = tier.bounds
    # total states = 1 (reset) + sum of phase sizes
    lo = max(p["size"][0], -(-(n_min - 1) // k))
    hi = min(p["size"][1], (n_max - 1) // k)
    return TopoConfig(
        num_phases=k,
        states_per_phase=(lo, hi),
        p_forward_branch=p["fwd"],
        p_back_edge=p["back"],
        p_self_loop=p["loop"],
        max_out_degree=PRESET_MAX_OUT_DEGREE,
        num_inter_phase_jumps=p["jumps"],
        seed=seed,
    )
