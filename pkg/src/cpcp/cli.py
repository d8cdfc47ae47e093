"""Command-line front end: run / sweep / select-views / synth."""

from __future__ import annotations

import argparse
import configparser
import sys
from pathlib import Path

from . import data, pipeline
from .errors import NumericalError, ValidationError

_TRUE = ("1", "true", "yes", "on")
_FALSE = ("0", "false", "no", "off")


def _parse_bool(text: str) -> bool:
    t = text.strip().lower()
    if t in _TRUE:
        return True
    if t in _FALSE:
        return False
    raise ValidationError(f"expected a boolean, got {text!r}")


def _split(text: str) -> list[str]:
    return [p.strip() for p in text.split(",") if p.strip()]


def _floats(text: str) -> list[float]:
    return [float(p) for p in _split(text)]


def _ints(text: str) -> list[int]:
    return [int(p) for p in _split(text)]


# config-file key -> caster into PipelineConfig field values
_CONFIG_KEYS = {
    "views": lambda t: tuple(_split(t)),
    "metrics": lambda t: tuple(_split(t)),
    "labels": str,
    "constraints": str,
    "budget": float,
    "clusters": int,
    "method": str,
    "eta": float,
    "tau": float,
    "eps": float,
    "k_dense": int,
    "k_final": int,
    "embed_dim": int,
    "restarts": int,
    "seed": int,
    "manual_priors": lambda t: tuple(_floats(t)),
    "sigma_nonzero": _parse_bool,
    "nmi_normalization": str,
    "out": str,
    "dump_priors": _parse_bool,
}

# keys consumed by specific verbs rather than PipelineConfig
_EXTRA_KEYS = {
    "fractions": _floats,
    "repeats": int,
}


def _read_config_file(path: str) -> dict:
    parser = configparser.ConfigParser()
    read = parser.read(path)
    if not read:
        raise ValidationError(f"cannot read config file {path}")
    merged: dict = {}
    for section in parser.sections():
        for key, raw in parser.items(section):
            key = key.replace("-", "_")
            if key in merged:
                raise ValidationError(
                    f"{path}: key {key!r} appears in more than one section"
                )
            caster = _CONFIG_KEYS.get(key) or _EXTRA_KEYS.get(key)
            if caster is None:
                raise ValidationError(f"{path}: unknown config key {key!r}")
            try:
                merged[key] = caster(raw)
            except ValueError as exc:
                raise ValidationError(f"{path}: key {key!r}: {exc}") from exc
    return merged


def _add_common_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="INI config file; flags override its keys")
    p.add_argument("--views", help="comma-separated feature files")
    p.add_argument("--metrics", help="per-view metrics (g|gaussian|cos|cosine)")
    p.add_argument("--labels", help="ground-truth labels file")
    p.add_argument("--constraints", help="constraint pairs file ('i j +/-1')")
    p.add_argument("--budget", type=float, help="constraint budget as a fraction of all pairs")
    p.add_argument("--clusters", type=int, help="number of clusters")
    p.add_argument(
        "--method",
        choices=pipeline.METHODS,
        help="clustering method (default cpcp)",
    )
    p.add_argument("--eta", type=float, help="propagation parameter")
    p.add_argument("--tau", type=float, help="consensus pruning threshold")
    p.add_argument("--eps", type=float, help="probability floor")
    p.add_argument("--k-dense", type=int, help="dense neighborhood size override")
    p.add_argument("--k-final", type=int, help="sparse neighborhood size override")
    p.add_argument("--embed-dim", type=int, help="spectral embedding dimension")
    p.add_argument("--restarts", type=int, help="k-means restarts")
    p.add_argument("--seed", type=int, help="base random seed")
    p.add_argument("--priors", dest="manual_priors", help="manual view priors (mmcp)")
    p.add_argument(
        "--sigma-nonzero",
        action="store_true",
        default=None,
        help="average only nonzero |F| for the sigmoid temperature",
    )
    p.add_argument(
        "--nmi-normalization",
        choices=("sqrt", "max"),
        help="NMI denominator convention",
    )
    p.add_argument("--out", help="report output directory")
    p.add_argument(
        "--dump-priors",
        action="store_true",
        default=None,
        help="also write consistency and view-prior tables",
    )


def _gather(args: argparse.Namespace) -> dict:
    """Config-file values overridden by any flag the user actually set."""
    merged = _read_config_file(args.config) if args.config else {}
    for key in list(_CONFIG_KEYS) + list(_EXTRA_KEYS):
        value = getattr(args, key, None)
        if value is None:
            continue
        if key in ("views", "metrics"):
            value = tuple(_split(value))
        elif key == "manual_priors":
            value = tuple(_floats(value))
        elif key == "fractions":
            value = _floats(value)
        merged[key] = value
    return merged


def _build_config(merged: dict) -> pipeline.PipelineConfig:
    fields = {k: v for k, v in merged.items() if k in _CONFIG_KEYS}
    return pipeline.PipelineConfig(**fields)


def _cmd_run(args: argparse.Namespace) -> int:
    merged = _gather(args)
    config = _build_config(merged)
    result = pipeline.run_pipeline(config)
    print(f"method: {result.method}")
    print(f"instances: {len(result.labels)}")
    if result.constraints is not None:
        print(
            f"constraints: {len(result.constraints.must)} must, "
            f"{len(result.constraints.cannot)} cannot"
        )
    if result.nmi is not None:
        print(f"nmi: {result.nmi:.6f}")
    if config.out:
        print(f"report: {config.out}")
    return 0


def _cmd_sweep(args: argparse.Namespace) -> int:
    merged = _gather(args)
    fractions = merged.pop("fractions", None)
    repeats = merged.pop("repeats", 1)
    if not fractions:
        raise ValidationError("sweep needs --fractions")
    config = _build_config(merged)
    points = pipeline.sweep_pipeline(config, fractions, repeats)
    print("fraction count mean best worst")
    for p in points:
        print(f"{p.fraction:g} {p.count} {p.mean:.6f} {p.best:.6f} {p.worst:.6f}")
    if config.out:
        print(f"report: {config.out}")
    return 0


def _cmd_select_views(args: argparse.Namespace) -> int:
    merged = _gather(args)
    config = _build_config(merged)
    trace = pipeline.view_selection(config)
    for t in trace:
        margs = " ".join(f"{v}:{m:.4f}" for v, m in sorted(t.marginals.items()))
        nmi_txt = "-" if t.nmi is None else f"{t.nmi:.6f}"
        print(
            f"step {t.step}: dropped view {t.eliminated} "
            f"(marginals {margs}); remaining {t.remaining}; nmi {nmi_txt}"
        )
    if config.out:
        print(f"report: {config.out}")
    return 0


def _cmd_synth(args: argparse.Namespace) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    fixture = data.generate_synthetic(
        n=args.n,
        clusters=args.clusters,
        view_dims=_ints(args.dims),
        noise_views=_ints(args.noise_views) if args.noise_views else (),
        separation=args.separation,
        spread=args.spread,
        seed=args.seed,
    )
    paths = []
    for v, view in enumerate(fixture.views):
        path = out / f"view_{v}.txt"
        data.save_matrix(path, view)
        paths.append(path)
    labels_path = out / "labels.txt"
    data.save_labels(labels_path, fixture.labels)
    for p in paths + [labels_path]:
        print(p)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cpcp",
        description="Multi-view constrained clustering via consensus-prior "
        "constraint propagation.",
    )
    sub = parser.add_subparsers(dest="verb", required=True)

    p_run = sub.add_parser("run", help="one clustering run")
    _add_common_flags(p_run)
    p_run.set_defaults(func=_cmd_run)

    p_sweep = sub.add_parser("sweep", help="NMI over constraint budgets")
    _add_common_flags(p_sweep)
    p_sweep.add_argument("--fractions", help="comma-separated budget fractions")
    p_sweep.add_argument("--repeats", type=int, help="seeded trials per budget")
    p_sweep.set_defaults(func=_cmd_sweep)

    p_sel = sub.add_parser("select-views", help="iterative view elimination")
    _add_common_flags(p_sel)
    p_sel.set_defaults(func=_cmd_select_views)

    p_synth = sub.add_parser("synth", help="write a synthetic multi-view dataset")
    p_synth.add_argument("--out", required=True, help="output directory")
    p_synth.add_argument("--n", type=int, default=300)
    p_synth.add_argument("--clusters", type=int, default=3)
    p_synth.add_argument("--dims", default="8,8,8", help="per-view feature dims")
    p_synth.add_argument("--noise-views", default="", help="views to replace with noise")
    p_synth.add_argument("--separation", type=float, default=6.0)
    p_synth.add_argument("--spread", type=float, default=1.0)
    p_synth.add_argument("--seed", type=int, default=0)
    p_synth.set_defaults(func=_cmd_synth)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
