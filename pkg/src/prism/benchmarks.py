"""Synthetic symmetric networks, rewiring sweeps, and the noisy-clustering benchmark.

Two experiment drivers live here. The rewiring sweep builds mirror-symmetric
random graphs, degrades them edge by edge, and tracks how the defect against
the true mirror operator rises compared to a deliberately wrong index-reversal
operator and to modularity. The noise benchmark flips edges of the embedded
34-node club graph and compares three ways of recovering the two factions:
raw Fiedler bipartition, spectral denoising with a Marchenko-Pastur cutoff,
and Fiedler bipartition of the Laplacian projected onto the commutant of the
clean graph's mirror operator.

All randomness flows from integer seeds through one splitting rule
(child_seed), so results are identical across runs and across thread counts.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .duality import DualityOperator, commutant_projection, duality_defect, validate_involution
from .errors import (
    DegenerateGraph,
    LengthMismatch,
    NonBinary,
    Saturated,
    TooSmall,
    ValidationError,
    ZeroEdges,
)
from .graphs import Graph, fiedler_vector, graph_from_edges, is_connected, laplacian, symmetric_eig
from .learn import fiedler_duality_operator
from .reporting import csv_text, json_text

MAX_GENERATION_ATTEMPTS = 100


def child_seed(*path: int) -> int:
    """Deterministic child seed for a position in a seed tree."""
    return int(np.random.SeedSequence(tuple(path)).generate_state(1, np.uint64)[0])


def resolve_threads(threads: int | None = None) -> int:
    """Worker count: explicit argument, else PRISM_THREADS, else CPU count."""
    if threads is None:
        env = os.environ.get("PRISM_THREADS", "0")
        try:
            threads = int(env)
        except ValueError:
            raise ValidationError(f"PRISM_THREADS must be an integer, got {env!r}") from None
    if threads <= 0:
        threads = os.cpu_count() or 1
    return threads


# The 34-node, 78-edge club graph and its two-faction ground truth.
KARATE_EDGES: tuple[tuple[int, int], ...] = (
    (0, 1), (0, 2), (0, 3), (0, 4), (0, 5), (0, 6), (0, 7), (0, 8), (0, 10), (0, 11),
    (0, 12), (0, 13), (0, 17), (0, 19), (0, 21), (0, 31), (1, 2), (1, 3), (1, 7), (1, 13),
    (1, 17), (1, 19), (1, 21), (1, 30), (2, 3), (2, 7), (2, 8), (2, 9), (2, 13), (2, 27),
    (2, 28), (2, 32), (3, 7), (3, 12), (3, 13), (4, 6), (4, 10), (5, 6), (5, 10), (5, 16),
    (6, 16), (8, 30), (8, 32), (8, 33), (9, 33), (13, 33), (14, 32), (14, 33), (15, 32), (15, 33),
    (18, 32), (18, 33), (19, 33), (20, 32), (20, 33), (22, 32), (22, 33), (23, 25), (23, 27), (23, 29),
    (23, 32), (23, 33), (24, 25), (24, 27), (24, 31), (25, 31), (26, 29), (26, 33), (27, 33), (28, 31),
    (28, 33), (29, 32), (29, 33), (30, 32), (30, 33), (31, 32), (31, 33), (32, 33),
)

KARATE_FACTIONS: tuple[int, ...] = (
    0, 0, 0, 0, 0, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1, 1, 0, 0, 1, 0, 1, 0, 1, 1, 1,
    1, 1, 1, 1, 1, 1, 1, 1, 1,
)


def karate_club() -> tuple[Graph, tuple[int, ...]]:
    """The standard 34-node club graph (unit weights) and faction labels."""
    labels = tuple(str(i) for i in range(34))
    return graph_from_edges(labels, KARATE_EDGES), KARATE_FACTIONS


@dataclass(frozen=True)
class SyntheticDualNetwork:
    """Random graph built to commute exactly with the group-swap operator."""

    graph: Graph
    true_operator: DualityOperator
    partition: tuple[int, ...]


def generate_dual_network(
    group_size: int,
    edge_prob_intra: float = 0.4,
    edge_prob_cross: float = 0.1,
    seed: int = 0,
) -> SyntheticDualNetwork:
    """Sample a 2m-node graph whose adjacency is invariant under i <-> i+m.

    Intra-group edges are drawn once on group A and mirrored into group B.
    Cross edges are drawn once per mirror orbit {(i, j+m), (j, i+m)} and both
    members inserted, so the swap invariance is exact by construction (integer
    mirroring, no floating error). Disconnected samples are redrawn up to 100
    times before failing.
    """
    m = group_size
    if m < 2:
        raise ValidationError(f"group_size must be at least 2, got {m}")
    for prob in (edge_prob_intra, edge_prob_cross):
        if not 0.0 <= prob <= 1.0:
            raise ValidationError(f"edge probability {prob} outside [0, 1]")
    n = 2 * m
    labels = tuple(f"A{i}" for i in range(m)) + tuple(f"B{i}" for i in range(m))
    for attempt in range(MAX_GENERATION_ATTEMPTS):
        rng = np.random.default_rng((seed, attempt))
        intra_draws = rng.random((m, m))
        cross_draws = rng.random((m, m))
        w = np.zeros((n, n))
        for i in range(m):
            for j in range(i + 1, m):
                if intra_draws[i, j] < edge_prob_intra:
                    w[i, j] = w[j, i] = 1.0
                    w[i + m, j + m] = w[j + m, i + m] = 1.0
            for j in range(i, m):
                if cross_draws[i, j] < edge_prob_cross:
                    w[i, j + m] = w[j + m, i] = 1.0
                    w[j, i + m] = w[i + m, j] = 1.0
        graph = Graph(labels=labels, weights=w)
        if not is_connected(graph):
            continue
        sigma = np.zeros((n, n))
        for i in range(m):
            sigma[i, i + m] = 1.0
            sigma[i + m, i] = 1.0
        operator = validate_involution(sigma)
        defect = duality_defect(laplacian(graph), operator)
        if defect > 1e-10:
            raise DegenerateGraph(f"swap invariance violated: defect {defect:.3e}")
        return SyntheticDualNetwork(
            graph=graph, true_operator=operator, partition=(0,) * m + (1,) * m
        )
    raise DegenerateGraph(
        f"no connected sample in {MAX_GENERATION_ATTEMPTS} attempts (seed {seed})"
    )


def rewire(g: Graph, fraction: float, seed: int) -> Graph:
    """Delete floor(fraction * |E|) distinct edges and reinsert them elsewhere.

    Each deleted edge's weight moves to a uniformly drawn currently-empty
    slot (rejection sampling, no self-loops), so the edge count is preserved
    exactly. Raises Saturated when the graph has no empty slot left.
    """
    if not 0.0 <= fraction <= 1.0:
        raise ValidationError(f"fraction {fraction} outside [0, 1]")
    edges = g.edges()
    if not edges:
        raise ValidationError("rewire requires at least one edge")
    count = math.floor(fraction * len(edges))
    if count == 0:
        return g
    rng = np.random.default_rng(seed)
    chosen = rng.choice(len(edges), size=count, replace=False)
    w = g.weights.copy()
    moved = []
    for idx in chosen:
        i, j, weight = edges[int(idx)]
        w[i, j] = w[j, i] = 0.0
        moved.append(weight)
    n = g.n
    for weight in moved:
        if np.count_nonzero(w) == n * n - n:
            raise Saturated("no non-adjacent node pair available for insertion")
        while True:
            a = int(rng.integers(n))
            b = int(rng.integers(n))
            if a != b and w[a, b] == 0.0:
                w[a, b] = w[b, a] = weight
                break
    return Graph(labels=g.labels, weights=w)


def flip_edges(g: Graph, count: int, seed: int) -> Graph:
    """Apply `count` random single-edge flips.

    Each flip removes a uniformly chosen existing edge with probability 1/2,
    otherwise adds a unit-weight edge at a uniformly chosen empty slot.
    Degenerate draws (nothing to remove / nowhere to add) fall through to the
    other action.
    """
    if count < 0:
        raise ValidationError(f"count must be nonnegative, got {count}")
    w = g.weights.copy()
    n = g.n
    rng = np.random.default_rng(seed)
    upper = [(i, j) for i in range(n) for j in range(i + 1, n)]
    for _ in range(count):
        edges = [(i, j) for i, j in upper if w[i, j] > 0.0]
        empty = [(i, j) for i, j in upper if w[i, j] == 0.0]
        remove = rng.random() < 0.5
        if remove and not edges:
            remove = False
        if not remove and not empty:
            remove = True
        if remove and not edges:
            break  # n < 2: no slots at all
        if remove:
            i, j = edges[int(rng.integers(len(edges)))]
            w[i, j] = w[j, i] = 0.0
        else:
            i, j = empty[int(rng.integers(len(empty)))]
            w[i, j] = w[j, i] = 1.0
    return Graph(labels=g.labels, weights=w)


def index_reversal_operator(n: int) -> DualityOperator:
    """The deliberately structure-blind pairing sigma(i) = n-1-i."""
    if n < 1:
        raise ValidationError(f"n must be at least 1, got {n}")
    m = np.zeros((n, n))
    for i in range(n):
        m[i, n - 1 - i] = 1.0
    return validate_involution(m)


def modularity(g: Graph, partition) -> float:
    """Newman-Girvan Q for a labeled partition, weighted form.

    Q = sum_c (e_cc - a_c^2) with e_cc the within-community fraction of edge
    weight and a_c the community's fraction of total degree.
    """
    if len(partition) != g.n:
        raise LengthMismatch(f"partition length {len(partition)} != node count {g.n}")
    total = float(g.weights.sum())  # equals 2W
    if total <= 0.0:
        raise ZeroEdges("modularity undefined for a graph with no edges")
    degrees = g.weights.sum(axis=1)
    labels = np.asarray(partition)
    q = 0.0
    for value in dict.fromkeys(partition):  # first-appearance order, deterministic
        idx = np.nonzero(labels == value)[0]
        e_cc = float(g.weights[np.ix_(idx, idx)].sum()) / total
        a_c = float(degrees[idx].sum()) / total
        q += e_cc - a_c * a_c
    return q


def fiedler_bipartition(l_or_g) -> np.ndarray:
    """Binary labels from the sign of the Fiedler vector (zero goes positive).

    Accepts a Graph (connectivity checked) or a bare symmetric matrix such as
    a projected Laplacian, for which the caller vouches.
    """
    if isinstance(l_or_g, Graph):
        v = fiedler_vector(l_or_g)
    else:
        m = np.asarray(l_or_g, dtype=float)
        if m.shape[0] < 2:
            raise TooSmall("bipartition needs at least 2 nodes")
        v = symmetric_eig(m).eigenvectors[:, 1]
    return (v >= 0.0).astype(int)


def rmt_denoise(g: Graph) -> np.ndarray:
    """Reconstruct the Laplacian from eigenvalues above the Marchenko-Pastur edge.

    The cutoff is lambda_plus = sigma^2 (1 + sqrt(q))^2 with q = 1 and
    sigma^2 the mean Laplacian eigenvalue; everything below it is zeroed.
    """
    decomp = symmetric_eig(laplacian(g))
    lam_plus = 4.0 * float(np.mean(decomp.eigenvalues))
    keep = decomp.eigenvalues >= lam_plus
    vectors = decomp.eigenvectors[:, keep]
    rebuilt = (vectors * decomp.eigenvalues[keep]) @ vectors.T
    return (rebuilt + rebuilt.T) / 2.0


def rmt_labels(g: Graph) -> np.ndarray:
    """Cluster on the eigenvector of the smallest surviving component.

    Falls back to the raw Fiedler bipartition when fewer than two eigenvalues
    survive the cutoff (the usual case for small graphs, where the mean-based
    edge sits above the whole spectrum).
    """
    decomp = symmetric_eig(laplacian(g))
    lam_plus = 4.0 * float(np.mean(decomp.eigenvalues))
    surviving = np.nonzero(decomp.eigenvalues >= lam_plus)[0]
    if len(surviving) < 2:
        return fiedler_bipartition(g)
    v = decomp.eigenvectors[:, int(surviving[0])]
    return (v >= 0.0).astype(int)


def accuracy(predicted, truth) -> float:
    """Agreement under the best of the two binary label identifications."""
    predicted = np.asarray(predicted)
    truth = np.asarray(truth)
    if predicted.shape != truth.shape:
        raise LengthMismatch(
            f"label lengths differ: {predicted.shape} vs {truth.shape}"
        )
    for labels in (predicted, truth):
        if not np.all(np.isin(labels, (0, 1))):
            raise NonBinary("labels must be 0/1")
    agree = float(np.mean(predicted == truth))
    return max(agree, 1.0 - agree)


@dataclass(frozen=True)
class RewireReport:
    """Seed-averaged defect and modularity per rewiring fraction, plus slopes."""

    rows: tuple[tuple[float, float, float, float], ...]
    sensitivity_true: float | None
    sensitivity_index: float | None
    sensitivity_modularity: float | None
    config: dict

    def __post_init__(self) -> None:
        fractions = [row[0] for row in self.rows]
        if any(b <= a for a, b in zip(fractions, fractions[1:])):
            raise ValidationError("fractions must be strictly increasing")
        for _, d_true, d_index, _ in self.rows:
            if not (0.0 <= d_true <= 2.0 and 0.0 <= d_index <= 2.0):
                raise ValidationError("defect outside [0, 2]")


def rewire_experiment(
    group_size: int,
    probs: tuple[float, float],
    fractions: list[float],
    seeds: list[int],
) -> RewireReport:
    """Average defect-vs-rewiring curves over seeds and fit their slopes.

    For each seed a fresh mirror-symmetric network is generated; each
    fraction rewires that same base network with a child seed derived from
    (seed, fraction index). Disconnected rewired graphs are kept: defect and
    modularity do not need a Fiedler vector.
    """
    if not fractions:
        raise ValidationError("fractions must be nonempty")
    if any(b <= a for a, b in zip(fractions, fractions[1:])):
        raise ValidationError("fractions must be ascending")
    if not seeds:
        raise ValidationError("seeds must be nonempty")
    intra, cross = probs
    networks = [generate_dual_network(group_size, intra, cross, s) for s in seeds]
    n = 2 * group_size
    index_op = index_reversal_operator(n)
    rows = []
    for f_idx, fraction in enumerate(fractions):
        d_true = []
        d_index = []
        q_values = []
        for s, net in zip(seeds, networks):
            rewired = rewire(net.graph, fraction, child_seed(s, f_idx))
            lap = laplacian(rewired)
            d_true.append(duality_defect(lap, net.true_operator))
            d_index.append(duality_defect(lap, index_op))
            q_values.append(modularity(rewired, net.partition))
        rows.append(
            (fraction, float(np.mean(d_true)), float(np.mean(d_index)), float(np.mean(q_values)))
        )
    if len(rows) >= 2:
        xs = np.array([row[0] for row in rows])

        def slope(column: int) -> float:
            return float(np.polyfit(xs, [row[column] for row in rows], 1)[0])

        sens_true, sens_index = slope(1), slope(2)
        sens_mod = abs(slope(3))  # reported as magnitude of decline
    else:
        sens_true = sens_index = sens_mod = None
    return RewireReport(
        rows=tuple(rows),
        sensitivity_true=sens_true,
        sensitivity_index=sens_index,
        sensitivity_modularity=sens_mod,
        config={
            "group_size": group_size,
            "edge_prob_intra": intra,
            "edge_prob_cross": cross,
            "fractions": ";".join(repr(float(f)) for f in fractions),
            "seeds": ";".join(str(s) for s in seeds),
        },
    )


REWIRE_CSV_HEADER = ("rewire_fraction", "defect_true", "defect_index", "modularity")


def rewire_report_to_csv(report: RewireReport) -> str:
    footer = []
    if report.sensitivity_true is not None:
        footer.append(
            ("sensitivity", report.sensitivity_true, report.sensitivity_index,
             report.sensitivity_modularity)
        )
    return csv_text(report.config, REWIRE_CSV_HEADER, report.rows, footer)


def rewire_report_to_json(report: RewireReport) -> str:
    return json_text({
        "config": report.config,
        "rows": [dict(zip(REWIRE_CSV_HEADER, row)) for row in report.rows],
        "sensitivity": {
            "defect_true": report.sensitivity_true,
            "defect_index": report.sensitivity_index,
            "modularity": report.sensitivity_modularity,
        },
    })


@dataclass(frozen=True)
class NoiseBenchmarkReport:
    """Per-level mean/std accuracy for the three recovery methods."""

    rows: tuple[tuple, ...]  # (level, base mean/std, rmt mean/std, prism mean/std, resampled)
    trials: int
    config: dict

    def __post_init__(self) -> None:
        for row in self.rows:
            for mean in (row[1], row[3], row[5]):
                if not 0.5 <= mean <= 1.0:
                    raise ValidationError(f"mean accuracy {mean} outside [0.5, 1.0]")


def _noise_trial(
    clean: Graph,
    truth: tuple[int, ...],
    operator: DualityOperator,
    count: int,
    seed: int,
    level_index: int,
    trial_index: int,
) -> tuple[float, float, float, int]:
    """One (level, trial) cell: returns the three accuracies and resample count."""
    for attempt in range(1000):
        noisy = flip_edges(clean, count, child_seed(seed, level_index, trial_index, attempt))
        if is_connected(noisy):
            break
    else:
        raise DegenerateGraph("could not draw a connected noisy graph in 1000 attempts")
    lap = laplacian(noisy)
    base = accuracy(fiedler_bipartition(noisy), truth)
    rmt = accuracy(rmt_labels(noisy), truth)
    projected = commutant_projection(lap, operator).projected
    prism = accuracy(fiedler_bipartition(projected), truth)
    return base, rmt, prism, attempt


def noise_benchmark(
    levels: list[float],
    trials: int,
    seed: int,
    threads: int | None = None,
) -> NoiseBenchmarkReport:
    """Flip-edges benchmark on the club graph, three methods per trial.

    Trials whose noisy graph is disconnected are resampled (with an extended
    child seed) and the number of resamples reported per level. Cells are
    independent, so the thread count never changes the result.
    """
    if any(not 0.0 <= lv <= 1.0 for lv in levels):
        raise ValidationError("noise levels must lie in [0, 1]")
    if trials < 1:
        raise ValidationError("trials must be at least 1")
    clean, truth = karate_club()
    operator = fiedler_duality_operator(clean)
    edge_total = clean.edge_count()
    counts = [math.floor(lv * edge_total) for lv in levels]
    results = np.zeros((len(levels), trials, 3))
    resamples = np.zeros((len(levels), trials), dtype=int)

    def run_cell(cell: tuple[int, int]) -> None:
        li, ti = cell
        base, rmt, prism, attempts = _noise_trial(
            clean, truth, operator, counts[li], seed, li, ti
        )
        results[li, ti] = (base, rmt, prism)
        resamples[li, ti] = attempts

    cells = [(li, ti) for li in range(len(levels)) for ti in range(trials)]
    workers = resolve_threads(threads)
    if workers == 1:
        for cell in cells:
            run_cell(cell)
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(run_cell, cells))
    rows = []
    for li, level in enumerate(levels):
        block = results[li]
        rows.append((
            float(level),
            float(np.mean(block[:, 0])), float(np.std(block[:, 0])),
            float(np.mean(block[:, 1])), float(np.std(block[:, 1])),
            float(np.mean(block[:, 2])), float(np.std(block[:, 2])),
            int(resamples[li].sum()),
        ))
    return NoiseBenchmarkReport(
        rows=tuple(rows),
        trials=trials,
        config={
            "levels": ";".join(repr(float(lv)) for lv in levels),
            "trials": trials,
            "seed": seed,
        },
    )


NOISE_CSV_HEADER = (
    "noise", "baseline_mean", "baseline_std", "rmt_mean", "rmt_std",
    "prism_mean", "prism_std", "resampled",
)


def noise_report_to_csv(report: NoiseBenchmarkReport) -> str:
    return csv_text(report.config, NOISE_CSV_HEADER, report.rows)


def noise_report_to_json(report: NoiseBenchmarkReport) -> str:
    return json_text({
        "config": report.config,
        "trials": report.trials,
        "rows": [dict(zip(NOISE_CSV_HEADER, row)) for row in report.rows],
    })
