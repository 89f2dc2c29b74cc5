"""Command-line front end.

Subcommands: solve, place, simulate, sweep, classify, oracle.  Options come
from flags, optionally backed by a JSON config file (flags win).  Exit
codes: 0 success, 2 infeasible or invalid configuration, 3 internal
invariant violation.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import re
import sys

from . import asymptotics, delivery, density, oracle, placement
from .errors import InternalInvariantError, InvalidInputError
from .grid import GridSpec
from .popularity import Popularity, load_popularity, zipf

_JOBS_ENV = "REPLICA_GRID_JOBS"


def _fmt(value: float) -> str:
    return f"{float(value):.12g}"


def parse_m_expression(text: str, n_nodes: int, capacity: float) -> int:
    """Catalog-size expression: an integer, 'c*N', 'c*N^a' or 'K*N - c'."""
    s = text.strip().replace(" ", "")
    if re.fullmatch(r"\d+", s):
        value = int(s)
    else:
        m = re.fullmatch(r"(?:([0-9.]+)\*)?N(?:\^([0-9.]+))?", s)
        if m:
            coeff = float(m.group(1)) if m.group(1) else 1.0
            power = float(m.group(2)) if m.group(2) else 1.0
            value = int(coeff * n_nodes ** power)
        else:
            m = re.fullmatch(r"K\*N-([0-9.]+)", s)
            if m:
                value = int(capacity * n_nodes - float(m.group(1)))
            else:
                raise InvalidInputError(
                    f"cannot parse catalog size {text!r}; use an integer, "
                    "'c*N', 'c*N^a' or 'K*N - c'"
                )
    if value < 1:
        raise InvalidInputError(f"catalog size {text!r} resolves to {value} < 1")
    return value


def _load_config(path: str | None) -> dict:
    if path is None:
        return {}
    with open(path) as fh:
        doc = json.load(fh)
    if not isinstance(doc, dict):
        raise InvalidInputError(f"{path}: config must be a JSON object")
    return doc


def _resolve(args: argparse.Namespace, config: dict, key: str, default=None):
    value = getattr(args, key, None)
    if value is not None:
        return value
    if key in config:
        return config[key]
    return default


def _require(args, config, key):
    value = _resolve(args, config, key)
    if value is None:
        raise InvalidInputError(f"missing required option --{key.replace('_', '-')}")
    return value


def _resolve_instance(args, config):
    """Common (grid, capacity, popularity) resolution for most commands."""
    nu = int(_require(args, config, "nu"))
    grid = GridSpec(nu=nu)
    capacity = float(_require(args, config, "capacity"))
    pop_file = _resolve(args, config, "pop_file")
    if pop_file is not None:
        pop = load_popularity(pop_file)
    else:
        m_expr = str(_require(args, config, "m_count"))
        m = parse_m_expression(m_expr, grid.node_count, capacity)
        tau = float(_require(args, config, "tau"))
        pop = zipf(m, tau)
    return grid, capacity, pop


def _write_or_print(text: str, path: str | None) -> None:
    if path is None:
        print(text, end="" if text.endswith("\n") else "\n")
    else:
        with open(path, "w") as fh:
            fh.write(text)


def cmd_solve(args, config) -> int:
    grid, capacity, pop = _resolve_instance(args, config)
    profile = density.solve_cd(grid.node_count, capacity, pop)
    canon = density.canonical_truncate(profile)
    exact = density.cd_cost(profile, pop)
    canonical_cost = density.lower_bound(canon.densities, pop)
    print(f"l = {profile.l_index}")
    print(f"r = {profile.r_index}")
    print(f"densities = [{', '.join(_fmt(v) for v in profile.densities)}]")
    print(f"C_cd = {_fmt(exact)}")
    print(f"C_cd_canonical = {_fmt(canonical_cost)}")
    print(f"sandwich_lower_margin = {_fmt(canonical_cost - exact)}")
    upper = 2.0 * exact + math.sqrt(2.0) / 6.0
    print(f"sandwich_upper_margin = {_fmt(upper - canonical_cost)}")
    out = _resolve(args, config, "output")
    if out is not None:
        _write_or_print(profile.to_json() + "\n", out)
    return 0


def _build_placement(grid, capacity, pop):
    profile = density.solve_cd(grid.node_count, capacity, pop)
    canon = density.canonical_truncate(profile)
    cap_int = int(math.floor(capacity + 1e-12))
    if cap_int < 1:
        raise InvalidInputError(f"placement needs integer capacity >= 1, got {capacity}")
    return placement.canonical_place(grid, canon, pop, cap_int)


def cmd_place(args, config) -> int:
    grid, capacity, pop = _resolve_instance(args, config)
    placed = _build_placement(grid, capacity, pop)
    print(placement.render_matrix(placed))
    print(f"valid = {str(placement.validate_capacity(placed)).lower()}")
    out = _resolve(args, config, "output")
    if out is not None:
        _write_or_print(placed.to_json() + "\n", out)
    return 0


def cmd_simulate(args, config) -> int:
    grid, capacity, pop = _resolve_instance(args, config)
    placed = _build_placement(grid, capacity, pop)
    loads = delivery.link_loads(grid, placed, pop)
    total = float(loads.loads.sum())
    hop_total = delivery.total_hop_load(grid, placed, pop)
    residual = abs(total - hop_total) / max(abs(hop_total), 1e-300)
    avg = delivery.avg_link(loads)
    worst = delivery.worst_link(loads)
    measured = placed.measured_densities()
    lemma3 = density.lower_bound(measured, pop)
    profile = density.solve_cd(grid.node_count, capacity, pop)
    canon = density.canonical_truncate(profile)
    canonical_cost = density.lower_bound(canon.densities, pop)
    theorem9_cap = 0.25 + 0.75 * math.sqrt(2.0) * canonical_cost
    print(f"C_wn = {_fmt(worst)}")
    print(f"C_an = {_fmt(avg)}")
    print(f"load_identity_residual = {_fmt(residual)}")
    print(f"lemma3_margin = {_fmt(avg - lemma3)}")
    print(f"theorem9_margin = {_fmt(theorem9_cap - avg)}")
    out = _resolve(args, config, "output")
    if out is not None:
        _write_or_print(delivery.to_csv(loads), out)
    return 0


def cmd_sweep(args, config) -> int:
    tau = float(_require(args, config, "tau"))
    capacity = float(_require(args, config, "capacity"))
    m_expr = str(_require(args, config, "m_count"))
    nus_raw = _require(args, config, "nus")
    if isinstance(nus_raw, str):
        nus = [int(v) for v in nus_raw.split(",") if v.strip()]
    else:
        nus = [int(v) for v in nus_raw]
    result = asymptotics.sweep(
        tau, capacity, lambda n: parse_m_expression(m_expr, n, capacity), nus
    )
    print(f"predicted_law = {result.predicted_law}")
    print(f"predicted_exponent = {_fmt(result.predicted_exponent)}")
    print(f"fitted_exponent = {_fmt(result.fitted_exponent)}")
    print(f"fitted_exponent_corrected = {_fmt(result.fitted_exponent_corrected)}")
    csv_text = asymptotics.sweep_to_csv(result)
    out = _resolve(args, config, "output")
    if out is not None:
        _write_or_print(csv_text, out)
    else:
        print(csv_text, end="")
    return 0


def cmd_classify(args, config) -> int:
    tau = float(_require(args, config, "tau"))
    capacity = float(_require(args, config, "capacity"))
    nu = int(_require(args, config, "nu"))
    n = GridSpec(nu=nu).node_count
    m = parse_m_expression(str(_require(args, config, "m_count")), n, capacity)
    report = asymptotics.classify_regime(tau, capacity, m, n)
    doc = {
        "tau": report.tau,
        "capacity": report.capacity,
        "m_count": report.m_count,
        "n_nodes": report.n_nodes,
        "regime_label": report.regime_label,
        "predicted_l_hat": report.predicted_l_hat,
        "predicted_r_hat": report.predicted_r_hat,
        "predicted_law": report.predicted_law,
        "truncation_state": report.truncation_state,
    }
    print(json.dumps(doc, indent=2))
    return 0


def cmd_oracle(args, config) -> int:
    grid, capacity, pop = _resolve_instance(args, config)
    which = _resolve(args, config, "problem", "an")
    if which == "an":
        result = oracle.brute_force_an(grid, int(capacity), pop)
        print(f"best_avg_load = {_fmt(result.best_avg_load)}")
        print(f"instances_examined = {result.instances_examined}")
        print(placement.render_matrix(result.best_placement))
    elif which == "cd":
        resolution = float(_resolve(args, config, "resolution", 0.01))
        value = oracle.brute_force_cd(grid.node_count, capacity, pop, resolution)
        print(f"grid_minimum = {_fmt(value)}")
    else:
        raise InvalidInputError(f"unknown oracle problem {which!r}; use 'an' or 'cd'")
    return 0


def _add_common(sub):
    sub.add_argument("--config", help="JSON config file; flags override its values")
    sub.add_argument("--nu", type=int, help="grid exponent: side 2^nu, N = 4^nu")
    sub.add_argument("--capacity", "--K", dest="capacity", type=float, help="per-node cache size K")
    sub.add_argument(
        "--m-count",
        "--M",
        dest="m_count",
        help="catalog size: integer, 'c*N', 'c*N^a' or 'K*N - c'",
    )
    sub.add_argument("--tau", type=float, help="Zipf exponent")
    sub.add_argument("--pop-file", dest="pop_file", help="popularity file (one p per line)")
    sub.add_argument("--output", help="write the machine-readable result here")
    sub.add_argument(
        "--jobs",
        type=int,
        default=None,
        help=f"worker count (default ${_JOBS_ENV} or 1); results do not depend on it",
    )
    sub.add_argument("--seed", type=int, default=0, help="seed for randomized helpers")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="replicagrid",
        description="Optimal content replication and delivery on a toroidal grid",
    )
    subs = parser.add_subparsers(dest="command", required=True)
    handlers = {
        "solve": cmd_solve,
        "place": cmd_place,
        "simulate": cmd_simulate,
        "sweep": cmd_sweep,
        "classify": cmd_classify,
        "oracle": cmd_oracle,
    }
    helps = {
        "solve": "solve the continuous density problem and its truncation",
        "place": "compute the canonical cache placement",
        "simulate": "simulate delivery and report per-link loads",
        "sweep": "sweep grid sizes and fit the capacity growth exponent",
        "classify": "report the predicted scaling regime",
        "oracle": "brute-force baseline on a tiny instance",
    }
    for name, handler in handlers.items():
        sub = subs.add_parser(name, help=helps[name])
        _add_common(sub)
        if name == "sweep":
            sub.add_argument("--nus", help="comma-separated grid exponents, e.g. 5,6,7")
        if name == "oracle":
            sub.add_argument("--problem", choices=["an", "cd"], help="which baseline")
            sub.add_argument("--resolution", type=float, help="cd grid resolution")
        sub.set_defaults(handler=handler)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.jobs is None:
        args.jobs = int(os.environ.get(_JOBS_ENV, "1"))
    try:
        config = _load_config(args.config)
        return args.handler(args, config)
    except InternalInvariantError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (InvalidInputError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
