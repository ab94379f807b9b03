"""Command-line front end.

Exit status: 0 on success, 1 when a submitted process is found invalid,
2 on usage, parse, or I/O errors.
"""
from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .channels import amplitude_grid, linear_combination_unitarity
from .nogo import (
    find_violation,
    random_context,
    random_markovian_pair,
    theorem_driver,
    verify_lemma_batch,
    NoGoContext,
)
from .process import (
    NORMALIZATION_TOL,
    PSD_TOL,
    is_valid_process,
    process_from_dict,
    process_to_dict,
    switch3,
    switch4,
)
from .tensor import HADAMARD, PAULI_I, PAULI_X, PAULI_Y, PAULI_Z, operator_from_dict

COMMANDS = ("validate", "switch", "superpose", "nogo-lemma", "nogo-theorem", "unitary-superpose")

PRESETS = {
    "I": PAULI_I,
    "X": PAULI_X,
    "Y": PAULI_Y,
    "Z": PAULI_Z,
    "H": HADAMARD,
    "RAISE": (PAULI_X + 1j * PAULI_Y) / np.sqrt(2),
}


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    command: str
    dim: int = 2
    trials: int = 0
    seed: int | None = None
    tol: float = NORMALIZATION_TOL
    input: str | None = None
    output: str | None = None
    variant: int = 4
    parties: int = 3
    samples: int = 100
    alpha: str = "0.7071067811865476"
    beta: str = "0.7071067811865476"
    identity: bool = False
    u1: str = "X"
    u2: str = "Z"
    grid: int = 41
    radius: float = 2.0
    phase: float = float(np.pi / 4)

    def validate(self):
        if self.command not in COMMANDS:
            raise UsageError(f"unknown command {self.command!r}")
        if self.trials < 0:
            raise UsageError("--trials must be >= 0")
        if not self.tol > 0:
            raise UsageError("--tol must be > 0")
        if self.command in ("nogo-lemma", "nogo-theorem", "superpose"):
            if self.dim < 2:
                raise UsageError("--dim must be >= 2")
        if self.command in ("nogo-lemma", "nogo-theorem") and self.seed is None:
            raise UsageError("--seed is required")
        if self.command == "unitary-superpose" and (self.grid < 2 or not self.radius > 0):
            raise UsageError("--grid must be >= 2 and --radius > 0")
        if self.seed is not None and not 0 <= self.seed < 2**64:
            raise UsageError("--seed must be an unsigned 64-bit integer")


def _read_json(path: str | None):
    try:
        if path in (None, "-"):
            text = sys.stdin.read()
            where = "<stdin>"
        else:
            text = Path(path).read_text()
            where = path
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise UsageError(f"{where}: malformed JSON ({exc.msg} at line {exc.lineno})") from None


def _complex(text: str) -> complex:
    try:
        return complex(text.replace(" ", ""))
    except ValueError:
        raise UsageError(f"not a complex number: {text!r}") from None


def _matrix(spec: str) -> np.ndarray:
    if spec.upper() in PRESETS:
        return PRESETS[spec.upper()]
    doc = _read_json(spec)
    try:
        return operator_from_dict(doc).entries
    except ValueError as exc:
        raise UsageError(f"{spec}: {exc}") from None


def _cmd_validate(cfg: RunConfig):
    doc = _read_json(cfg.input)
    try:
        w = process_from_dict(doc)
    except (ValueError, KeyError, TypeError) as exc:
        raise UsageError(f"{cfg.input or '<stdin>'}: {exc}") from None
    report = is_valid_process(w, psd_tol=min(PSD_TOL, cfg.tol), normalization_tol=cfg.tol,
                              samples=cfg.samples, seed=cfg.seed or 0)
    return (0 if report.verdict else 1), [report.to_dict()], {"verdict": bool(report.verdict)}


def _cmd_switch(cfg: RunConfig):
    w = switch4() if cfg.variant == 4 else switch3(np.array([1.0, 0.0]))
    return 0, None, process_to_dict(w)


def _cmd_superpose(cfg: RunConfig):
    alpha, beta = _complex(cfg.alpha), _complex(cfg.beta)
    if cfg.identity:
        mats = [np.eye(cfg.dim)] * 6
    else:
        if cfg.seed is None:
            raise UsageError("--seed is required unless --identity is given")
        rand = random_context(cfg.dim, cfg.seed)
        mats = [rand.u1, rand.u2, rand.u3, rand.v1, rand.v2, rand.v3]
    try:
        ctx = NoGoContext(*mats, alpha=alpha, beta=beta)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    return 0, None, process_to_dict(ctx.superposition())


def _cmd_lemma(cfg: RunConfig):
    summary = verify_lemma_batch(cfg.dim, cfg.trials, cfg.seed)
    results = [r.to_dict() for r in summary.reports]
    status = 0 if summary.failures == 0 else 1
    return status, results, summary.to_dict()


def _cmd_theorem(cfg: RunConfig):
    results, devs = [], []
    for stream in np.random.SeedSequence(cfg.seed).spawn(cfg.trials):
        rng = np.random.default_rng(stream)
        w1, w2, o1, o2 = random_markovian_pair(cfg.parties, cfg.dim, rng)
        amp = random_context(cfg.dim, rng)
        report = theorem_driver(w1, w2, (o1, o2), amp.alpha, amp.beta, seed=rng)
        entry = report.to_dict()
        entry["orders"] = [list(o1), list(o2)]
        results.append(entry)
        devs.append(report.deviation)
    failures = sum(not r["success"] for r in results)
    summary = {
        "parties": cfg.parties,
        "dim": cfg.dim,
        "trials": cfg.trials,
        "failures": failures,
        "min_deviation": float(np.min(devs)) if devs else None,
        "max_deviation": float(np.max(devs)) if devs else None,
    }
    return (0 if failures == 0 else 1), results, summary


def _cmd_unitary(cfg: RunConfig):
    u1, u2 = _matrix(cfg.u1), _matrix(cfg.u2)
    try:
        grid = amplitude_grid(cfg.grid, cfg.radius, cfg.phase)
        scan = linear_combination_unitarity(u1, u2, grid, tol=cfg.tol)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    points = [[[a.real, a.imag], [b.real, b.imag]] for a, b in scan.unitary_points]
    summary = {
        "grid_points": len(scan.amplitudes),
        "min_residual": scan.min_residual,
        "any_unitary": scan.any_unitary,
        "unitary_points": points,
    }
    return 0, None, summary


_DISPATCH = {
    "validate": _cmd_validate,
    "switch": _cmd_switch,
    "superpose": _cmd_superpose,
    "nogo-lemma": _cmd_lemma,
    "nogo-theorem": _cmd_theorem,
    "unitary-superpose": _cmd_unitary,
}

# commands whose output is a process document rather than a report
_PROCESS_OUTPUT = {"switch", "superpose"}


def run(cfg: RunConfig) -> tuple[int, dict]:
    """Execute ``cfg`` and return ``(exit_status, document)``."""
    cfg.validate()
    start = time.perf_counter()
    status, results, summary = _DISPATCH[cfg.command](cfg)
    if cfg.command in _PROCESS_OUTPUT:
        return status, summary
    doc = {
        "command": cfg.command,
        "version": __version__,
        "config": asdict(cfg),
        "results": results or [],
        "summary": summary,
        "duration_seconds": time.perf_counter() - start,
    }
    return status, doc


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="procmat", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--out", dest="output", default=None, help="write JSON here (default: stdout)")
        p.add_argument("--tol", type=float, default=NORMALIZATION_TOL)
        return p

    p = common(sub.add_parser("validate", help="certify a process file"))
    p.add_argument("input", nargs="?", default="-", help="process JSON file, '-' for stdin")
    p.add_argument("--samples", type=int, default=100, help="random CPTP cross-check tuples")
    p.add_argument("--seed", type=int, default=0)

    p = common(sub.add_parser("switch", help="emit a quantum switch process"))
    p.add_argument("--variant", type=int, choices=(3, 4), default=4)

    p = common(sub.add_parser("superpose", help="emit a superposition of two ordered Markovian chains"))
    p.add_argument("--dim", type=int, default=2)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--alpha", default="0.7071067811865476")
    p.add_argument("--beta", default="0.7071067811865476")
    p.add_argument("--identity", action="store_true", help="use identity unitaries in both branches")

    p = common(sub.add_parser("nogo-lemma", help="witness invalidity for random four-party contexts"))
    p.add_argument("--dim", type=int, default=2)
    p.add_argument("--trials", type=int, default=200)
    p.add_argument("--seed", type=int, required=True)

    p = common(sub.add_parser("nogo-theorem", help="witness invalidity for random n-party Markovian pairs"))
    p.add_argument("--parties", type=int, default=3, help="number of parties between P and F")
    p.add_argument("--dim", type=int, default=2)
    p.add_argument("--trials", type=int, default=20)
    p.add_argument("--seed", type=int, required=True)

    p = common(sub.add_parser("unitary-superpose", help="scan alpha*U1 + beta*U2 for unitarity"))
    p.add_argument("--u1", default="X", help=f"preset {sorted(PRESETS)} or matrix JSON file")
    p.add_argument("--u2", default="Z")
    p.add_argument("--grid", type=int, default=41)
    p.add_argument("--radius", type=float, default=2.0)
    p.add_argument("--phase", type=float, default=float(np.pi / 4), help="phase of beta relative to alpha")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    fields = {k: v for k, v in vars(args).items() if k in RunConfig.__dataclass_fields__}
    cfg = RunConfig(**fields)
    try:
        status, doc = run(cfg)
    except UsageError as exc:
        print(f"procmat {cfg.command}: error: {exc}", file=sys.stderr)
        return 2
    text = json.dumps(doc, sort_keys=True, allow_nan=False) + "\n"
    if cfg.output in (None, "-"):
        sys.stdout.write(text)
    else:
        try:
            Path(cfg.output).write_text(text)
        except OSError as exc:
            print(f"procmat {cfg.command}: error: cannot write {cfg.output}: {exc.strerror}", file=sys.stderr)
            return 2
    return status


if __name__ == "__main__":
    sys.exit(main())
