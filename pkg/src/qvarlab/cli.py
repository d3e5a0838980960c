"""Experiment runner: trains readouts on state families and writes CSV tables.

Each experiment trains one observable per requested measured-qubit count m
(or, in Naimark mode, a single observable reading freshly appended ancillas)
and evaluates prediction, variance and the Fisher bound columns on a dense
label grid. Output is one CSV per m plus a sidecar text file recording the
full configuration; identical configurations produce byte-identical files.
"""
from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass, fields

import numpy as np

from . import __version__
from .circuits import Circuit, hea, hva_cluster, qcnn
from .fisher import PROB_STEP, StateFamily, bound_chain, cfi_mixture_closed
from .hamiltonians import cluster, ising, schwinger
from .mixture import (
    MixtureModel,
    qfi_commuting,
    variance_full,
    variance_partial,
)
from .observables import ParamObservable, naimark_embed, probabilities
from .states import LabeledState, ground_state
from .training import TrainConfig, TrainSet, make_trainset, train

CSV_HEADER = "alpha,prediction,sq_error,variance,inv_cfi,inv_qfi,analytic_variance,flag"

# label windows the figures use; families extend further where the states
# stay well defined so that centered stencils exist at the window edges
LABEL_RANGES = {
    "mixture": (0.0, 1.0),
    "analytic": (0.0, 1.0),
    "ising": (0.05, 2.0),
    "schwinger": (-2.0, 1.0),
    "cluster": (0.0, 1.0),
}


class ConfigError(ValueError):
    """Invalid experiment configuration (exit code 1)."""


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    n: int = 5
    m: tuple[int, ...] = (1,)
    ansatz: str = "hea"
    layers: int = 5
    train_points: int = 10
    eval_points: int = 101
    seed: int = 0
    restarts: int = 5
    max_iters: int = 500
    w_ls: float = 1.0
    w_var: float = 1e-4
    r: float = 0.25
    eps: float = 1e-2
    w: float = 1.0
    g: float = 1.0
    naimark: int = 0
    out: str = "experiment"


def _mixture_family(config: ExperimentConfig) -> StateFamily:
    return MixtureModel(n=config.n, r=config.r).family()


def _ising_family(config: ExperimentConfig) -> StateFamily:
    n = config.n

    def ev(h: float) -> LabeledState:
        return LabeledState(label=float(h), psi=ground_state(ising(n, h)))

    return StateFamily(evaluator=ev, alpha_range=(1e-3, 2.5))


def _schwinger_family(config: ExperimentConfig) -> StateFamily:
    n, w, g = config.n, config.w, config.g

    def ev(mu: float) -> LabeledState:
        return LabeledState(label=float(mu), psi=ground_state(schwinger(n, mu, w=w, g=g)))

    return StateFamily(evaluator=ev, alpha_range=(-2.2, 1.2))


def _cluster_family(config: ExperimentConfig) -> StateFamily:
    n, eps = config.n, config.eps

    def ev(x: float) -> LabeledState:
        return LabeledState(label=float(x), psi=ground_state(cluster(n, x, eps=eps)))

    return StateFamily(evaluator=ev, alpha_range=(-0.2, 1.2))


FAMILY_BUILDERS = {
    "mixture": _mixture_family,
    "analytic": _mixture_family,
    "ising": _ising_family,
    "schwinger": _schwinger_family,
    "cluster": _cluster_family,
}

ANSATZ_BUILDERS = {
    "hea": lambda n, layers: hea(n, layers),
    "qcnn": lambda n, layers: qcnn(n),
    "hva": lambda n, layers: hva_cluster(n, layers),
}


def _validate(config: ExperimentConfig) -> None:
    if config.experiment not in FAMILY_BUILDERS:
        raise ConfigError(f"unknown experiment {config.experiment!r}")
    if config.ansatz not in ANSATZ_BUILDERS:
        raise ConfigError(f"unknown ansatz {config.ansatz!r}")
    if config.n < 1:
        raise ConfigError("n must be positive")
    if config.experiment == "ising" and config.n < 2:
        raise ConfigError("ising needs n >= 2")
    if config.experiment == "schwinger" and (config.n < 2 or config.n % 2):
        raise ConfigError("schwinger needs even n >= 2")
    if config.experiment == "cluster" and config.n < 3:
        raise ConfigError("cluster needs n >= 3")
    if config.naimark < 0:
        raise ConfigError("naimark ancilla count must be nonnegative")
    if config.naimark == 0:
        if not config.m:
            raise ConfigError("need at least one m value")
        if any(not 1 <= m <= config.n for m in config.m):
            raise ConfigError(f"m values must lie in 1..{config.n}")
    if config.train_points < 2:
        raise ConfigError("train_points must be at least 2")
    if config.eval_points < 2:
        raise ConfigError("eval_points must be at least 2")
    if config.layers < 1:
        raise ConfigError("layers must be positive")
    if config.restarts < 1 or config.max_iters < 1:
        raise ConfigError("restarts and max_iters must be positive")
    if config.w_ls <= 0 or config.w_var < 0:
        raise ConfigError("need w_ls > 0 and w_var >= 0")
    if config.experiment in ("mixture", "analytic") and not 0.0 <= config.r <= 1.0:
        raise ConfigError("r must lie in [0, 1]")


def _fmt(x) -> str:
    if x is None:
        return ""
    return repr(float(x))


def _write_csv(path: str, rows: list[tuple]) -> None:
    lines = [CSV_HEADER]
    for row in rows:
        alpha, pred, sq, var, icv, iqv, ana, flag = row
        lines.append(
            ",".join(
                [_fmt(alpha), _fmt(pred), _fmt(sq), _fmt(var), _fmt(icv), _fmt(iqv), _fmt(ana), flag]
            )
        )
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def _write_sidecar(path: str, config: ExperimentConfig) -> None:
    lines = [f"version={__version__}"]
    for f in fields(config):
        value = getattr(config, f.name)
        if isinstance(value, tuple):
            value = ",".join(str(v) for v in value)
        lines.append(f"{f.name}={value}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def _analytic_rows(config: ExperimentConfig, m: int, grid: np.ndarray) -> list[tuple]:
    n, r = config.n, config.r
    if m == n:
        ana = lambda a: variance_full(a, n, r)
        p1 = np.concatenate([[max(r, 1 - r), min(r, 1 - r)], np.zeros(2**n - 2)])
    else:
        ana = lambda a: variance_partial(a, m)
        p1 = np.zeros(2**m)
        p1[0] = 1.0
    uniform = np.full(len(p1), 1.0 / len(p1))
    rows = []
    for a in grid:
        a = float(a)
        var = ana(a)
        if a >= 1.0:
            # both information quantities diverge where the noise floor closes
            rows.append((a, a, 0.0, var, None, None, var, "boundary"))
            continue
        icv = 1.0 / cfi_mixture_closed(a, p1, uniform)
        iqv = 1.0 / qfi_commuting(a, n, r)
        rows.append((a, a, 0.0, var, icv, iqv, var, ""))
    return rows


def _trained_rows(
    config: ExperimentConfig,
    family: StateFamily,
    circuit: Circuit,
    m: int,
    trainset: TrainSet,
    grid: np.ndarray,
    analytic_m,
) -> list[tuple]:
    tc = TrainConfig(
        w_ls=config.w_ls,
        w_var=config.w_var,
        seed=config.seed,
        restarts=config.restarts,
        max_iters=config.max_iters,
    )
    result = train(circuit, m, trainset, tc)
    run_flag = "" if result.converged else "nonconverged"
    obs = ParamObservable(circuit=circuit, m=m, lambdas=result.lambdas)
    interior = [float(a) for a in grid if family.contains_stencil(float(a), PROB_STEP)]
    reports = {
        rep.alpha: rep
        for rep in bound_chain(obs, result.theta, family, interior, on_violation="flag")
    }
    rows = []
    for a in grid:
        a = float(a)
        state = family.state(a)
        p = probabilities(obs, result.theta, state)
        pred = float(p @ result.lambdas)
        var = float(p @ result.lambdas**2 - pred**2)
        ana = analytic_m(a) if analytic_m is not None else None
        rep = reports.get(a)
        flags = [f for f in (run_flag,) if f]
        if rep is None:
            rows.append((a, pred, (a - pred) ** 2, var, None, None, ana, "+".join(flags + ["boundary"])))
            continue
        if rep.flag:
            flags.extend(rep.flag.split(","))
        rows.append(
            (a, pred, (a - pred) ** 2, var, rep.inv_cfi, rep.inv_qfi, ana, "+".join(flags))
        )
    return rows


def run(config: ExperimentConfig) -> list[str]:
    """Execute one experiment; returns the list of files written."""
    _validate(config)
    family = FAMILY_BUILDERS[config.experiment](config)
    lo, hi = LABEL_RANGES[config.experiment]
    grid = np.linspace(lo, hi, config.eval_points)
    written = []

    if config.experiment == "analytic":
        for m in config.m:
            path = f"{config.out}_m{m}.csv"
            _write_csv(path, _analytic_rows(config, m, grid))
            written.append(path)
    elif config.naimark > 0:
        ma = config.naimark
        n_tot = config.n + ma
        base = make_trainset(family, config.train_points, lo, hi)
        embedded = TrainSet(
            items=tuple(
                _embed_item(item, ma) for item in base.items
            )
        )
        emb_family = StateFamily(
            evaluator=lambda a: _embed_item(family.state(a), ma),
            alpha_range=family.alpha_range,
        )
        circuit = ANSATZ_BUILDERS[config.ansatz](n_tot, config.layers)
        analytic_m = None
        if config.experiment == "mixture":
            analytic_m = lambda a: variance_full(a, config.n, config.r)
        path = f"{config.out}_naimark{ma}.csv"
        _write_csv(
            path,
            _trained_rows(config, emb_family, circuit, ma, embedded, grid, analytic_m),
        )
        written.append(path)
    else:
        trainset = make_trainset(family, config.train_points, lo, hi)
        circuit = ANSATZ_BUILDERS[config.ansatz](config.n, config.layers)
        for m in config.m:
            analytic_m = None
            if config.experiment == "mixture":
                if m == config.n:
                    analytic_m = lambda a: variance_full(a, config.n, config.r)
                else:
                    analytic_m = lambda a, _m=m: variance_partial(a, _m)
            path = f"{config.out}_m{m}.csv"
            _write_csv(
                path,
                _trained_rows(config, family, circuit, m, trainset, grid, analytic_m),
            )
            written.append(path)

    sidecar = f"{config.out}_config.txt"
    _write_sidecar(sidecar, config)
    written.append(sidecar)
    return written


def _embed_item(item: LabeledState, ma: int) -> LabeledState:
    arr = naimark_embed(item.psi if item.is_pure else item.rho, ma)
    if arr.ndim == 1:
        return LabeledState(label=item.label, psi=arr)
    return LabeledState(label=item.label, rho=arr)


def _parse_m(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(part) for part in text.split(",") if part)
    except ValueError as exc:
        raise ConfigError(f"bad m list {text!r}") from exc


def _read_config_file(path: str) -> dict:
    values = {}
    with open(path) as fh:
        for raw in fh:
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"bad config line {raw.strip()!r}")
            key, value = line.split("=", 1)
            values[key.strip()] = value.strip()
    return values


_FIELD_PARSERS = {
    "experiment": str,
    "n": int,
    "m": _parse_m,
    "ansatz": str,
    "layers": int,
    "train_points": int,
    "eval_points": int,
    "seed": int,
    "restarts": int,
    "max_iters": int,
    "w_ls": float,
    "w_var": float,
    "r": float,
    "eps": float,
    "w": float,
    "g": float,
    "naimark": int,
    "out": str,
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qvarlab",
        description="Train variance-aware quantum readouts and emit CSV tables.",
    )
    parser.add_argument("experiment", nargs="?", help="mixture|ising|schwinger|cluster|analytic")
    parser.add_argument("--config", help="flat key=value config file; flags override it")
    parser.add_argument("--n", type=int)
    parser.add_argument("--m", help="comma-separated measured-qubit counts, e.g. 1,3,5")
    parser.add_argument("--ansatz", choices=sorted(ANSATZ_BUILDERS))
    parser.add_argument("--layers", type=int)
    parser.add_argument("--train-points", type=int, dest="train_points")
    parser.add_argument("--eval-points", type=int, dest="eval_points")
    parser.add_argument("--seed", type=int)
    parser.add_argument("--restarts", type=int)
    parser.add_argument("--max-iters", type=int, dest="max_iters")
    parser.add_argument("--w-ls", type=float, dest="w_ls")
    parser.add_argument("--w-var", type=float, dest="w_var")
    parser.add_argument("--r", type=float)
    parser.add_argument("--eps", type=float)
    parser.add_argument("--w", type=float)
    parser.add_argument("--g", type=float)
    parser.add_argument("--naimark", type=int)
    parser.add_argument("--out")
    return parser


def _config_from_args(args: argparse.Namespace) -> ExperimentConfig:
    values = {}
    if args.config:
        for key, raw in _read_config_file(args.config).items():
            if key not in _FIELD_PARSERS:
                raise ConfigError(f"unknown config key {key!r}")
            values[key] = _FIELD_PARSERS[key](raw)
    for key in _FIELD_PARSERS:
        arg = getattr(args, key, None)
        if arg is None:
            continue
        values[key] = _parse_m(arg) if key == "m" else arg
    if "experiment" not in values:
        raise ConfigError("an experiment name is required")
    return ExperimentConfig(**values)


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else 1
    try:
        config = _config_from_args(args)
        written = run(config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # runtime failure: report, distinct exit code
        print(f"runtime error: {exc}", file=sys.stderr)
        return 2
    for path in written:
        print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
