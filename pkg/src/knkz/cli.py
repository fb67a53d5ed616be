"""Batch front door: config parsing, command dispatch, serialization.

Subcommands: basis, pairing, structure, cocycle, kz, verify.  The config
file is a flat key = value document (comments with #); command-line flags
override file values.  Output is a self-describing JSON record, or CSV for
tabular payloads; complex numbers are always [re, im] pairs and every
numeric result carries a provenance marker (closed_form, quadrature, or
both plus the cross-check residual).

Exit codes: 0 ok, 1 verification failure, 2 configuration error,
3 violated mathematical precondition.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import io
import json
import sys
from dataclasses import dataclass, field

import numpy as np

from . import verify as verify_mod
from .algebra import cocycle_band, cocycle_chi, cocycle_gamma, kn_pairing, \
    structure_constants
from .basis import KNBasis
from .curves import INFINITY, MarkedCurve
from .errors import (ConfigError, CriticalLevelError,
                     NongenericConfigurationError, TruncationBreachError)
from .kz import assemble_kz_g0, assemble_kz_g1
from .liealg import WeightedTensorSpace, algebra_by_name

SCHEMA = "knkz/1"

EXIT_OK = 0
EXIT_VERIFY_FAILED = 1
EXIT_CONFIG = 2
EXIT_PRECONDITION = 3


# -- configuration ----------------------------------------------------------------


@dataclass
class RunConfig:
    genus: int = 0
    tau: complex = 0.3 + 1.1j
    in_points: tuple = (0.0 + 0j, 1.0 + 0j)
    out_point: complex | None = None       # genus 1 lift; genus 0 is infinity
    lambdas: tuple = (-1, 0, 1, 2)
    degree_min: int = -3
    degree_max: int = 3
    algebra: str = "sl2"
    module_weights: tuple = (1, 1)
    twists: list | None = None
    level: complex = 1.0 + 0j
    tol: float = 1e-9
    samples: int = 512
    seed: int = 7
    extras: dict = field(default_factory=dict)

    def validate(self):
        if self.genus not in (0, 1):
            raise ConfigError("genus must be 0 or 1")
        if self.tol <= 0:
            raise ConfigError("tolerances must be positive")
        if self.samples < 64 or self.samples & (self.samples - 1):
            raise ConfigError("samples must be a power of two >= 64")
        if self.degree_min > self.degree_max:
            raise ConfigError("empty degree window")
        if len(self.module_weights) != len(self.in_points):
            raise ConfigError("one module weight per in-point required")
        self.curve()  # surfaces invalid point configurations

    def curve(self) -> MarkedCurve:
        try:
            if self.genus == 0:
                return MarkedCurve(0, self.in_points)
            if self.out_point is None:
                raise ConfigError("genus 1 requires out_point")
            return MarkedCurve(1, self.in_points, out_point=self.out_point,
                               tau=self.tau)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc


def _parse_complex(text: str) -> complex:
    try:
        return complex(text.replace(" ", "").replace("i", "j"))
    except ValueError as exc:
        raise ConfigError(f"cannot parse complex number '{text}'") from exc


def _parse_list(text: str):
    return [t for t in (s.strip() for s in text.replace(";", ",").split(","))
            if t]


def load_config(path: str | None) -> RunConfig:
    cfg = RunConfig()
    if path is None:
        return cfg
    parser = configparser.ConfigParser()
    try:
        with open(path) as fh:
            parser.read_string("[config]\n" + fh.read())
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from exc
    section = parser["config"]
    known = {
        "genus": lambda v: setattr(cfg, "genus", int(v)),
        "tau": lambda v: setattr(cfg, "tau", _parse_complex(v)),
        "in_points": lambda v: setattr(
            cfg, "in_points", tuple(_parse_complex(t) for t in _parse_list(v))),
        "out_point": lambda v: setattr(
            cfg, "out_point",
            None if v.strip() in ("inf", "infinity") else _parse_complex(v)),
        "lambdas": lambda v: setattr(
            cfg, "lambdas", tuple(int(t) for t in _parse_list(v))),
        "degree_min": lambda v: setattr(cfg, "degree_min", int(v)),
        "degree_max": lambda v: setattr(cfg, "degree_max", int(v)),
        "algebra": lambda v: setattr(cfg, "algebra", v.strip()),
        "module_weights": lambda v: setattr(
            cfg, "module_weights", tuple(int(t) for t in _parse_list(v))),
        "level": lambda v: setattr(cfg, "level", _parse_complex(v)),
        "tol": lambda v: setattr(cfg, "tol", float(v)),
        "samples": lambda v: setattr(cfg, "samples", int(v)),
        "seed": lambda v: setattr(cfg, "seed", int(v)),
    }
    twists = {}
    for key, value in section.items():
        try:
            if key in known:
                known[key](value)
            elif key.startswith("twist_"):
                idx = int(key.split("_", 1)[1])
                entries = [_parse_complex(t) for t in _parse_list(value)]
                side = int(round(len(entries) ** 0.5))
                if side * side != len(entries):
                    raise ConfigError(f"twist '{key}' is not a square matrix")
                twists[idx] = np.array(entries).reshape(side, side)
            else:
                raise ConfigError(f"unknown config key '{key}'")
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"bad value for '{key}': {value}") from exc
    if twists:
        mats = [twists.get(i) for i in range(len(cfg.in_points))]
        cfg.twists = [m if m is not None else None for m in mats]
    return cfg


# -- serialization ----------------------------------------------------------------


def cnum(z) -> list:
    z = complex(z)
    return [z.real, z.imag]


def tagged(value, provenance: str, residual: float | None = None) -> dict:
    out = {"value": cnum(value), "provenance": provenance}
    if residual is not None:
        out["residual"] = float(residual)
    return out


def config_payload(cfg: RunConfig) -> dict:
    return {
        "genus": cfg.genus,
        "tau": cnum(cfg.tau) if cfg.genus == 1 else None,
        "in_points": [cnum(z) for z in cfg.in_points],
        "out_point": (cnum(cfg.out_point) if cfg.genus == 1 else "infinity"),
        "lambdas": list(cfg.lambdas),
        "degree_window": [cfg.degree_min, cfg.degree_max],
        "algebra": cfg.algebra,
        "module_weights": list(cfg.module_weights),
        "level": cnum(cfg.level),
        "tol": cfg.tol,
        "samples": cfg.samples,
        "seed": cfg.seed,
    }


def emit(payload: dict, args) -> None:
    if args.format == "json":
        text = json.dumps(payload, sort_keys=True, indent=2)
    else:
        text = to_csv(payload)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text + "\n")
    else:
        sys.stdout.write(text + "\n")


def to_csv(payload: dict) -> str:
    """CSV export: the rows of the payload's main table."""
    rows = payload.get("rows")
    if rows is None:
        raise ConfigError("csv output needs a tabular payload "
                          "(basis, pairing, structure, cocycle or kz tables)")
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    header = list(rows[0].keys())
    writer.writerow(header)
    for row in rows:
        writer.writerow([row[h] for h in header])
    return buf.getvalue().rstrip("\n")


# -- commands ----------------------------------------------------------------------


def cmd_basis(cfg: RunConfig, args) -> int:
    curve = cfg.curve()
    basis = KNBasis(curve, samples=cfg.samples)
    rng = np.random.default_rng(cfg.seed)
    if curve.genus == 1:
        probe = (rng.uniform(-0.45, 0.45, 8)
                 + rng.uniform(-0.45, 0.45, 8) * curve.lattice.tau)
    rows = []
    for lam in cfg.lambdas:
        for n in range(cfg.degree_min, cfg.degree_max + 1):
            for p in range(curve.n_points):
                f = basis.form(lam, n, p)
                orders = []
                for i, zi in enumerate(curve.in_points):
                    expect = (n + 1 - lam) - (1 if i == p else 0)
                    orders.append(basis.leading_exponent(
                        f, zi, expect - 3, expect + 4))
                row = {
                    "weight": lam, "degree": n, "point": p,
                    "orders_at_in_points": ",".join(str(o) for o in orders),
                    "terms": len(f.terms),
                }
                if curve.genus == 0:
                    term = f.terms[0]
                    row["normalization_re"], row["normalization_im"] = \
                        cnum(term.coeff)
                    row["order_at_infinity"] = basis.order_at_infinity(f)
                else:
                    term = f.terms[0]
                    row["log_normalization_re"], row["log_normalization_im"] \
                        = cnum(-complex(term.log_coeff))
                    v = f.value(probe)
                    scale = np.maximum(1.0, np.abs(v))
                    row["ellipticity_residual"] = float(max(
                        (np.abs(f.value(probe + 1) - v) / scale).max(),
                        (np.abs(f.value(probe + curve.lattice.tau) - v)
                         / scale).max()))
                rows.append(row)
    payload = {"schema": SCHEMA, "command": "basis",
               "config": config_payload(cfg), "rows": rows}
    emit(payload, args)
    return EXIT_OK


def cmd_pairing(cfg: RunConfig, args) -> int:
    curve = cfg.curve()
    basis = KNBasis(curve, samples=cfg.samples)
    degrees = list(range(cfg.degree_min, cfg.degree_max + 1))
    rows = []
    worst = 0.0
    for lam in cfg.lambdas:
        for n in degrees:
            for p in range(curve.n_points):
                f = basis.form(lam, n, p)
                for m in degrees:
                    for r in range(curve.n_points):
                        g = basis.form(1 - lam, m, r)
                        v = kn_pairing(basis, f, g)
                        expect = 1.0 if (m == -n and p == r) else 0.0
                        worst = max(worst, abs(v - expect))
                        rows.append({
                            "weight": lam, "n": n, "p": p, "m": m, "r": r,
                            "re": v.real, "im": v.imag,
                            "expected": expect,
                            "provenance": "quadrature",
                        })
    payload = {"schema": SCHEMA, "command": "pairing",
               "config": config_payload(cfg),
               "max_duality_deviation": worst, "rows": rows}
    emit(payload, args)
    return EXIT_OK


def cmd_structure(cfg: RunConfig, args) -> int:
    curve = cfg.curve()
    basis = KNBasis(curve, samples=cfg.samples)
    degrees = [d for d in range(cfg.degree_min, cfg.degree_max + 1)
               if abs(d) <= 3]
    rows = []
    bands = {}
    for tag in ("function", "vector_field"):
        tensor = structure_constants(basis, tag, degrees)
        bands[tag] = tensor.band
        for ((n, p), (m, r)), entry in sorted(tensor.entries.items()):
            for (h, s), coeff in entry:
                rows.append({
                    "algebra": tag, "n": n, "p": p, "m": m, "r": r,
                    "h": h, "s": s, "re": coeff.real, "im": coeff.imag,
                    "provenance": "quadrature",
                })
    payload = {"schema": SCHEMA, "command": "structure",
               "config": config_payload(cfg),
               "observed_bands": bands, "rows": rows}
    emit(payload, args)
    return EXIT_OK


def cmd_cocycle(cfg: RunConfig, args) -> int:
    curve = cfg.curve()
    basis = KNBasis(curve, samples=cfg.samples)
    degrees = [d for d in range(cfg.degree_min, cfg.degree_max + 1)
               if abs(d) <= 3]
    rows = []
    for n in degrees:
        for m in degrees:
            for p in range(curve.n_points):
                for r in range(curve.n_points):
                    g = cocycle_gamma(basis, basis.function(n, p),
                                      basis.function(m, r))
                    x = cocycle_chi(basis, basis.vector_field(n, p),
                                    basis.vector_field(m, r))
                    rows.append({"n": n, "p": p, "m": m, "r": r,
                                 "gamma_re": g.real, "gamma_im": g.imag,
                                 "chi_re": x.real, "chi_im": x.imag,
                                 "provenance": "quadrature"})
    band = cocycle_band(basis, degrees)
    payload = {"schema": SCHEMA, "command": "cocycle",
               "config": config_payload(cfg),
               "gamma_band_degrees": sorted(band), "rows": rows}
    emit(payload, args)
    return EXIT_OK


def cmd_kz(cfg: RunConfig, args) -> int:
    curve = cfg.curve()
    basis = KNBasis(curve, samples=cfg.samples)
    algebra = algebra_by_name(cfg.algebra)
    space = WeightedTensorSpace(algebra, cfg.module_weights, cfg.twists,
                                cfg.level)
    system = assemble_kz_g0(basis, space) if curve.genus == 0 \
        else assemble_kz_g1(basis, space)
    equations = []
    for eq in system.equations:
        terms = []
        for t in eq.terms:
            entry = {
                "operator": t.label,
                "modes": [list(t.modes[0]), list(t.modes[1])],
                "symmetrized": t.symmetrized,
                "coefficient": tagged(
                    t.coefficient,
                    "both" if t.closed_form is not None else "quadrature",
                    None if t.closed_form is None or t.quadrature is None
                    else abs(t.closed_form - t.quadrature)
                    / max(1.0, abs(t.closed_form))),
                "in_reduced_equation": t.in_reduced,
            }
            terms.append(entry)
        equations.append({"direction": {"kind": eq.direction[0],
                                        "index": eq.direction[1]},
                          "terms": terms})
    rows = []
    for (direction, n, p, m, s), e in sorted(system.table.entries.items()):
        rows.append({
            "direction": f"{direction[0]}:{direction[1]}",
            "n": n, "p": p, "m": m, "s": s,
            "classification": e.classification,
            "re": e.value.real, "im": e.value.imag,
            "provenance": e.provenance,
            "residual": "" if e.residual is None else e.residual,
        })
    payload = {
        "schema": SCHEMA, "command": "kz", "config": config_payload(cfg),
        "prefactor": tagged(system.prefactor, "closed_form"),
        "kappa": tagged(system.kappa, "closed_form"),
        "equations": equations,
        "rows": rows,
        "metadata": {
            "normalizations": {
                "reduced_coefficient": "2/(level+kappa) multiplies "
                                       "Omega_ij/(z_i-z_j) on the tensor floor",
                "classical_constant": "(level+kappa)/2 plays the classical "
                                      "normalization constant's role; both "
                                      "are reported, not identified",
            },
        },
    }
    if system.genus == 0:
        payload["reduced_matrices"] = [
            [[cnum(v) for v in row] for row in mat]
            for mat in system.reduced_matrices]
    else:
        res = system.metadata["out_point_residues"]
        payload["metadata"]["out_point_residues"] = {
            "moduli_field": cnum(res["moduli_field"]),
            "point_fields": [cnum(v) for v in res["point_fields"]],
            "correctors": [cnum(v) for v in res["correctors"]],
        }
        payload["metadata"]["diagonal_gamma_reading"] = \
            system.metadata["diagonal_gamma_reading"]
    emit(payload, args)
    return EXIT_OK


def cmd_verify(cfg: RunConfig, args) -> int:
    checks = verify_mod.run_verification(cfg)
    passed = all(c["passed"] for c in checks)
    payload = {"schema": SCHEMA, "command": "verify",
               "config": config_payload(cfg),
               "passed": passed,
               "rows": [{k: c[k] for k in
                         ("name", "passed", "max_error", "tolerance",
                          "detail")} for c in checks]}
    emit(payload, args)
    return EXIT_OK if passed else EXIT_VERIFY_FAILED


COMMANDS = {
    "basis": cmd_basis,
    "pairing": cmd_pairing,
    "structure": cmd_structure,
    "cocycle": cmd_cocycle,
    "kz": cmd_kz,
    "verify": cmd_verify,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="knkz",
        description="Krichever-Novikov bases, pairings, cocycles and "
                    "Knizhnik-Zamolodchikov systems on genus 0 and 1 curves")
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", help="flat key=value config file")
    parser.add_argument("--out", help="output path (default stdout)")
    parser.add_argument("--format", choices=("json", "csv"), default="json")
    parser.add_argument("--seed", type=int)
    parser.add_argument("--samples", type=int)
    parser.add_argument("--tol", type=float)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            cfg.seed = args.seed
        if args.samples is not None:
            cfg.samples = args.samples
        if args.tol is not None:
            cfg.tol = args.tol
        cfg.validate()
        return COMMANDS[args.command](cfg, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (CriticalLevelError, NongenericConfigurationError,
            TruncationBreachError) as exc:
        print(f"precondition violated: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION


if __name__ == "__main__":
    sys.exit(main())
