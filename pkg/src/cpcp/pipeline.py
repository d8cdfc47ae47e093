"""End-to-end orchestration: graph construction through evaluation, for
the consensus-prior method and its baselines, plus reporting."""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import consensus, data, evaluation, graph, prior, propagation
from .clustering import ClusterAssignment, sigmoid_affinity, spectral_clustering
from .errors import ValidationError

METHODS = ("cpcp", "mmcp", "mmcp-sw", "e2cp", "baseline")


@dataclass(frozen=True)
class PipelineConfig:
    """Everything a run needs. Path fields may stay empty when arrays
    are handed to run_pipeline directly."""

    views: tuple[str, ...] = ()
    metrics: tuple[str, ...] = (graph.GAUSSIAN,)
    labels: str | None = None
    constraints: str | None = None
    budget: float | None = None
    clusters: int = 2
    method: str = "cpcp"
    eta: float = propagation.DEFAULT_ETA
    tau: float = 1.0
    eps: float = consensus.DEFAULT_EPS
    k_dense: int | None = None
    k_final: int | None = None
    embed_dim: int | None = None
    restarts: int = 10
    seed: int = 0
    manual_priors: tuple[float, ...] | None = None
    sigma_nonzero: bool = False
    nmi_normalization: str = "sqrt"
    out: str | None = None
    dump_priors: bool = False

    def echo(self) -> dict:
        d = dataclasses.asdict(self)
        d.pop("out")  # where the report lives, not part of the run
        d["views"] = list(self.views)
        d["metrics"] = list(self.metrics)
        if self.manual_priors is not None:
            d["manual_priors"] = list(self.manual_priors)
        return d


@dataclass(frozen=True)
class Dataset:
    """In-memory inputs: one feature matrix per view plus optional truth."""

    views: list[np.ndarray]
    metrics: list[str]
    truth: np.ndarray | list[list[int]] | None = None


@dataclass(frozen=True)
class ViewGraphs:
    """Per-view artifacts shared by the method cores."""

    transitions: list[np.ndarray]
    instance_given_graph: np.ndarray  # (n, S), column s sums to 1
    affinities: list[graph.Affinity]
    consistencies: np.ndarray | None = None  # (n, S), consensus path only


@dataclass(frozen=True)
class PipelineResult:
    method: str
    labels: np.ndarray
    assignment: ClusterAssignment
    scores: np.ndarray | None
    affinity: np.ndarray
    marginals: np.ndarray | None
    unified: prior.UnifiedGraph | None
    view_graphs: ViewGraphs
    conditionals: prior.PseudoConditionals | None
    constraints: propagation.ConstraintSet | None
    balance_alpha: float | None
    nmi: float | None
    restart_nmis: list[float] | None
    config: PipelineConfig


def final_neighborhood_size(n: int, n_clusters: int) -> int:
    """Sparse neighborhood size Round(log2(n / c)), clamped to [1, n-1]."""
    k = int(np.rint(np.log2(n / n_clusters)))
    return max(1, min(k, n - 1))


def effective_sizes(config: PipelineConfig, n: int) -> tuple[int, int]:
    """(k_dense, k_final) after defaults and overrides."""
    k_dense = (
        consensus.dense_neighborhood_size(n, config.clusters)
        if config.k_dense is None
        else config.k_dense
    )
    k_final = (
        final_neighborhood_size(n, config.clusters)
        if config.k_final is None
        else config.k_final
    )
    if not 1 <= k_final < n:
        raise ValidationError(f"k_final={k_final} out of range for n={n}")
    if not 2 <= k_dense < n:
        raise ValidationError(f"k_dense={k_dense} out of range for n={n}")
    return k_dense, k_final


def load_dataset(config: PipelineConfig) -> Dataset:
    """Read feature views and optional labels from the configured paths."""
    if not config.views:
        raise ValidationError("no view files configured")
    metrics = list(config.metrics)
    if len(metrics) == 1 and len(config.views) > 1:
        metrics = metrics * len(config.views)
    if len(metrics) != len(config.views):
        raise ValidationError(
            f"{len(config.views)} views but {len(metrics)} metrics"
        )
    views = [data.load_features(p) for p in config.views]
    n = views[0].shape[0]
    for path, v in zip(config.views, views):
        if v.shape[0] != n:
            raise ValidationError(
                f"{path}: {v.shape[0]} rows, expected {n} as in {config.views[0]}"
            )
    truth = data.load_labels(config.labels) if config.labels else None
    if truth is not None and len(truth) != n:
        raise ValidationError(
            f"{config.labels}: {len(truth)} labels for {n} instances"
        )
    return Dataset(views=views, metrics=metrics, truth=truth)


def resolve_constraints(
    config: PipelineConfig,
    dataset: Dataset,
    constraints: propagation.ConstraintSet | None = None,
) -> propagation.ConstraintSet | None:
    """Explicit set, file, or budget sampling, in that order of priority."""
    if constraints is not None:
        return constraints
    if config.constraints:
        return data.load_constraints(config.constraints)
    if config.budget is not None:
        if dataset.truth is None:
            raise ValidationError("budget sampling requires ground-truth labels")
        flat = data.primary_labels(dataset.truth)
        return propagation.sample_constraints(flat, config.budget, config.seed)
    return None


def consensus_view_graphs(dataset: Dataset, config: PipelineConfig) -> ViewGraphs:
    """Dense graphs, consensus pruning, consistency, and the pruned-graph
    probability tables, per view."""
    n = dataset.views[0].shape[0]
    k_dense, _ = effective_sizes(config, n)
    transitions, affinities = [], []
    inst = np.empty((n, len(dataset.views)))
    cons = np.empty((n, len(dataset.views)))
    for s, (x, metric) in enumerate(zip(dataset.views, dataset.metrics)):
        feats = graph.preprocess_features(x, metric)
        neighbors = graph.knn_neighbors(feats, k_dense, metric)
        dense = graph.affinity_from_neighbors(feats, neighbors, metric)
        counts = consensus.consensus_matrix(neighbors)
        pruned = consensus.prune_affinity(dense, counts, config.tau)
        cons[:, s] = consensus.consistency(dense, pruned, config.eps)
        full = graph.floored(pruned, config.eps)
        transitions.append(graph.transition_matrix(full))
        inst[:, s] = graph.instance_probability(full)
        affinities.append(pruned)
    return ViewGraphs(
        transitions=transitions,
        instance_given_graph=inst,
        affinities=affinities,
        consistencies=cons,
    )


def plain_view_graphs(dataset: Dataset, config: PipelineConfig) -> ViewGraphs:
    """Sparse k-NN graphs and their probability tables, per view, for the
    fixed-prior baselines."""
    n = dataset.views[0].shape[0]
    _, k_final = effective_sizes(config, n)
    transitions, affinities = [], []
    inst = np.empty((n, len(dataset.views)))
    for s, (x, metric) in enumerate(zip(dataset.views, dataset.metrics)):
        feats = graph.preprocess_features(x, metric)
        aff = graph.build_knn_affinity(feats, k_final, metric)
        full = graph.floored(aff, config.eps)
        transitions.append(graph.transition_matrix(full))
        inst[:, s] = graph.instance_probability(full)
        affinities.append(aff)
    return ViewGraphs(
        transitions=transitions,
        instance_given_graph=inst,
        affinities=affinities,
    )


def consensus_prior_graph(
    dataset: Dataset, config: PipelineConfig
) -> tuple[prior.UnifiedGraph, prior.Rank1Factors, prior.ReconcileResult, ViewGraphs]:
    """The method's front half: consensus graphs to unified affinity."""
    n = dataset.views[0].shape[0]
    _, k_final = effective_sizes(config, n)
    vg = consensus_view_graphs(dataset, config)
    pgu = prior.pseudo_graph_prior(vg.consistencies)
    pc = prior.PseudoConditionals(
        graph_given_instance=pgu,
        instance_given_graph=vg.instance_given_graph,
    )
    factors = prior.rank1_approximate(prior.quotient_matrix(pc))
    rec = prior.reconcile(pc, factors.q_hat)
    unified = prior.unified_graph(
        factors.p_instance,
        rec.conditionals.graph_given_instance,
        vg.transitions,
        k_final,
        eps=config.eps,
    )
    return unified, factors, rec, vg


def e2cp_adjust(weights: np.ndarray, scores: np.ndarray) -> np.ndarray:
    """Fold propagated scores back into a [0, 1] affinity:
    1 - (1 - W)(1 - F) where F >= 0, (1 + F) W where F < 0, floored at 0."""
    adjusted = np.where(
        scores >= 0,
        1.0 - (1.0 - weights) * (1.0 - scores),
        np.maximum(1.0 + scores, 0.0) * weights,
    )
    np.fill_diagonal(adjusted, 0.0)
    return adjusted


def fuse_e2cp(adjusted: list[np.ndarray]) -> np.ndarray:
    """Unweighted mean of per-view post-propagation affinities."""
    if not adjusted:
        raise ValidationError("nothing to fuse")
    return sum(adjusted) / len(adjusted)


def _uniform_priors(s: int) -> np.ndarray:
    return np.full(s, 1.0 / s)


def run_pipeline(
    config: PipelineConfig,
    dataset: Dataset | None = None,
    constraints: propagation.ConstraintSet | None = None,
) -> PipelineResult:
    """Execute one clustering run and optionally write its report."""
    if config.method not in METHODS:
        raise ValidationError(
            f"unknown method {config.method!r}; expected one of {METHODS}"
        )
    if dataset is None:
        dataset = load_dataset(config)
    n = dataset.views[0].shape[0]
    s_views = len(dataset.views)
    if len(dataset.metrics) != s_views:
        raise ValidationError("one metric per view is required")
    if not 2 <= config.clusters <= n:
        raise ValidationError(
            f"cluster count {config.clusters} out of range for n={n}"
        )

    constraints = resolve_constraints(config, dataset, constraints)
    needs_constraints = config.method != "baseline"
    if needs_constraints and constraints is None:
        raise ValidationError(
            f"method {config.method!r} needs --constraints or --budget"
        )

    side = (
        propagation.side_information(constraints, n)
        if constraints is not None
        else None
    )

    scores: np.ndarray | None = None
    marginals: np.ndarray | None = None
    unified: prior.UnifiedGraph | None = None
    conditionals: prior.PseudoConditionals | None = None
    balance_alpha: float | None = None

    if config.method == "cpcp":
        unified, factors, rec, vg = consensus_prior_graph(dataset, config)
        conditionals = rec.conditionals
        marginals = factors.p_graph
        balance_alpha = propagation.balance_weight(constraints)
        scores = propagation.propagate_balanced(
            unified.laplacian,
            unified.probability,
            side,
            eta=config.eta,
            balance_alpha=balance_alpha,
        )
        affinity = sigmoid_affinity(scores, nonzero_only=config.sigma_nonzero)
    elif config.method in ("mmcp", "mmcp-sw"):
        vg = plain_view_graphs(dataset, config)
        if config.method == "mmcp":
            if config.manual_priors is None:
                raise ValidationError("method 'mmcp' needs manual view priors")
            priors = np.asarray(config.manual_priors, dtype=np.float64)
            if len(priors) != s_views:
                raise ValidationError(
                    f"{len(priors)} priors for {s_views} views"
                )
        else:
            priors = _uniform_priors(s_views)
        marginals = priors
        pi, transition = propagation.mmcp_unified(
            vg.instance_given_graph, vg.transitions, priors
        )
        l_hat = propagation.mmcp_laplacian(transition, pi)
        scores = propagation.propagate_mmcp(pi, l_hat, side.y, eta=config.eta)
        affinity = sigmoid_affinity(scores, nonzero_only=config.sigma_nonzero)
    elif config.method == "e2cp":
        vg = plain_view_graphs(dataset, config)
        adjusted = []
        for aff, transition, inst in zip(
            vg.affinities, vg.transitions, vg.instance_given_graph.T
        ):
            l_hat = propagation.mmcp_laplacian(transition, inst)
            f_view = propagation.propagate_mmcp(inst, l_hat, side.y, eta=config.eta)
            adjusted.append(e2cp_adjust(aff.weights, f_view))
        affinity = fuse_e2cp(adjusted)
    else:  # baseline
        vg = plain_view_graphs(dataset, config)
        affinity = fuse_e2cp([a.weights for a in vg.affinities])

    assignment = spectral_clustering(
        affinity,
        config.clusters,
        embed_dim=config.embed_dim,
        restarts=config.restarts,
        seed=config.seed,
    )
    nmi_value, restart_nmis = _score(dataset.truth, assignment, config)
    result = PipelineResult(
        method=config.method,
        labels=assignment.labels,
        assignment=assignment,
        scores=scores,
        affinity=affinity,
        marginals=marginals,
        unified=unified,
        view_graphs=vg,
        conditionals=conditionals,
        constraints=constraints,
        balance_alpha=balance_alpha,
        nmi=nmi_value,
        restart_nmis=restart_nmis,
        config=config,
    )
    if config.out:
        write_report(result, Path(config.out))
    return result


def _score(truth, assignment: ClusterAssignment, config: PipelineConfig):
    if truth is None:
        return None, None
    if isinstance(truth, np.ndarray):
        metric = lambda pred: evaluation.nmi(pred, truth, config.nmi_normalization)
    else:
        metric = lambda pred: evaluation.multilabel_nmi(
            truth, pred, config.nmi_normalization
        )
    best = float(metric(assignment.labels))
    per_restart = [float(metric(lbl)) for lbl in assignment.restart_labels]
    return best, per_restart


def _json_ready(value):
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, (np.floating, np.integer)):
        return value.item()
    if isinstance(value, dict):
        return {k: _json_ready(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_json_ready(v) for v in value]
    return value


def write_report(result: PipelineResult, out_dir: Path) -> None:
    """assignments, marginals, metrics, and a round-trippable config echo.
    Contents are a pure function of config and seeds."""
    out_dir.mkdir(parents=True, exist_ok=True)
    data.save_labels(out_dir / "assignments.txt", result.labels)
    if result.marginals is not None:
        data.save_matrix(out_dir / "marginals.txt", result.marginals)

    report = {
        "method": result.method,
        "clusters": result.config.clusters,
        "nmi": result.nmi,
        "restart_nmis": result.restart_nmis,
        "balance_alpha": result.balance_alpha,
        "marginals": result.marginals,
        "constraints": {
            "must": 0 if result.constraints is None else len(result.constraints.must),
            "cannot": 0 if result.constraints is None else len(result.constraints.cannot),
        },
        "config": result.config.echo(),
    }
    (out_dir / "report.json").write_text(
        json.dumps(_json_ready(report), indent=2, sort_keys=True) + "\n"
    )
    _write_echo_ini(result.config, out_dir / "echo.ini")

    if result.config.dump_priors and result.view_graphs.consistencies is not None:
        data.save_matrix(out_dir / "consistency.txt", result.view_graphs.consistencies)
        if result.conditionals is not None:
            data.save_matrix(
                out_dir / "graph_given_instance.txt",
                result.conditionals.graph_given_instance,
            )


def _write_echo_ini(config: PipelineConfig, path: Path) -> None:
    lines = ["[run]"]
    for key, value in config.echo().items():
        if value is None:
            continue
        if isinstance(value, (list, tuple)):
            value = ",".join(str(v) for v in value)
        lines.append(f"{key} = {value}")
    path.write_text("\n".join(lines) + "\n")


def sweep_pipeline(
    config: PipelineConfig,
    fractions: list[float],
    repeats: int,
    dataset: Dataset | None = None,
) -> list[evaluation.SweepPoint]:
    """NMI-vs-budget table: repeats seeded runs per budget fraction."""
    if dataset is None:
        dataset = load_dataset(config)
    if dataset.truth is None:
        raise ValidationError("sweep requires ground-truth labels")
    flat = data.primary_labels(dataset.truth)
    n = len(flat)

    def run_once(fraction: float, seed: int) -> float:
        cs = propagation.sample_constraints(flat, fraction, seed)
        cfg = dataclasses.replace(config, seed=seed, budget=None, out=None)
        result = run_pipeline(cfg, dataset=dataset, constraints=cs)
        return result.nmi

    points = evaluation.sweep(run_once, n, fractions, repeats, config.seed)
    if config.out:
        write_sweep_report(points, config, Path(config.out))
    return points


def write_sweep_report(
    points: list[evaluation.SweepPoint],
    config: PipelineConfig,
    out_dir: Path,
) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    rows = ["fraction count mean best worst"]
    rows += [
        f"{p.fraction:.17g} {p.count} {p.mean:.17g} {p.best:.17g} {p.worst:.17g}"
        for p in points
    ]
    (out_dir / "sweep.txt").write_text("\n".join(rows) + "\n")
    report = {
        "points": [p.as_dict() for p in points],
        "config": config.echo(),
    }
    (out_dir / "sweep.json").write_text(
        json.dumps(_json_ready(report), indent=2, sort_keys=True) + "\n"
    )


@dataclass(frozen=True)
class EliminationStep:
    step: int
    marginals: dict[int, float]
    eliminated: int
    remaining: list[int]
    nmi: float | None


def view_selection(
    config: PipelineConfig,
    dataset: Dataset | None = None,
    constraints: propagation.ConstraintSet | None = None,
) -> list[EliminationStep]:
    """Iteratively drop the view with the smallest consensus marginal and
    re-cluster; the trace has one row per elimination (S - 1 rows)."""
    if dataset is None:
        dataset = load_dataset(config)
    if len(dataset.views) < 2:
        raise ValidationError("view selection needs at least 2 views")
    constraints = resolve_constraints(config, dataset, constraints)
    if constraints is None:
        raise ValidationError("view selection needs --constraints or --budget")

    active = list(range(len(dataset.views)))
    trace: list[EliminationStep] = []
    step = 0
    while len(active) > 1:
        step += 1
        subset = Dataset(
            views=[dataset.views[v] for v in active],
            metrics=[dataset.metrics[v] for v in active],
            truth=dataset.truth,
        )
        _, factors, _, _ = consensus_prior_graph(subset, config)
        marginals = {v: float(m) for v, m in zip(active, factors.p_graph)}
        drop = active[int(np.argmin(factors.p_graph))]
        active = [v for v in active if v != drop]

        remaining = Dataset(
            views=[dataset.views[v] for v in active],
            metrics=[dataset.metrics[v] for v in active],
            truth=dataset.truth,
        )
        result = run_pipeline(
            dataclasses.replace(config, out=None, budget=None),
            dataset=remaining,
            constraints=constraints,
        )
        trace.append(
            EliminationStep(
                step=step,
                marginals=marginals,
                eliminated=drop,
                remaining=list(active),
                nmi=result.nmi,
            )
        )
    if config.out:
        write_selection_report(trace, config, Path(config.out))
    return trace


def write_selection_report(
    trace: list[EliminationStep],
    config: PipelineConfig,
    out_dir: Path,
) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    rows = ["step eliminated remaining nmi marginals"]
    for t in trace:
        margs = ";".join(f"{v}:{m:.17g}" for v, m in sorted(t.marginals.items()))
        nmi_txt = "nan" if t.nmi is None else f"{t.nmi:.17g}"
        rows.append(
            f"{t.step} {t.eliminated} {','.join(map(str, t.remaining))} "
            f"{nmi_txt} {margs}"
        )
    (out_dir / "selection.txt").write_text("\n".join(rows) + "\n")
    report = {
        "trace": [
            {
                "step": t.step,
                "marginals": {str(k): v for k, v in t.marginals.items()},
                "eliminated": t.eliminated,
                "remaining": t.remaining,
                "nmi": t.nmi,
            }
            for t in trace
        ],
        "config": config.echo(),
    }
    (out_dir / "selection.json").write_text(
        json.dumps(_json_ready(report), indent=2, sort_keys=True) + "\n"
    )
