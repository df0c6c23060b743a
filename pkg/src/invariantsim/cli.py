"""Declarative experiment runner.

A run spec is a JSON document naming a problem, a variant, and a sweep over
total times T, plus report toggles. Execution is deterministic for a fixed
spec: records are assembled in sorted T order and CSV bodies are
byte-identical across repeated runs. The process exit status is 0 exactly
when every enabled assertion (final fidelity, invariant residual) holds.

Verbs:
    invariantsim run <spec.json>       execute and write reports
    invariantsim validate <spec.json>  parse and check the spec only
    invariantsim demo <dj|grover>      run a canned example spec
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from . import algorithms, evolve, synth
from .algorithms import (
    BooleanFunctionSpec,
    DJVariant,
    GroverOracleSpec,
    dj_build,
    dj_classify,
    grover_build,
)
from .evolve import PropagatorOptions, lewis_riesenfeld_phase, track_invariant
from .invariant import invariant_residual, residual_profile, spectrum_flow
from .reportio import TOOL_VERSION, write_csv

DEFAULT_OUT_ENV = "INVARIANTSIM_OUT"


class SpecError(ValueError):
    """Spec validation failure, carrying the offending field path."""

    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"{path}: {message}")


@dataclass
class ReportToggles:
    residual: bool = True
    spectrum: bool = True
    trajectory: bool = False
    adiabaticity: bool = False
    phase: bool = True


@dataclass
class RunSpec:
    problem: str = "dj"
    table: str = "01"
    variant: str = "constant_H"
    poly_n: int = 1
    poly_r: int = 1
    N: int = 4
    w: int = 0
    sign: int = 1
    omega: float = 1.0
    T: list[float] = field(default_factory=lambda: [1.0])
    grid: int = 201
    steps: int = 2000
    scheme: str = "exponential_midpoint"
    out: str | None = None
    report: ReportToggles = field(default_factory=ReportToggles)
    assert_fidelity_min: float = 1.0 - 1e-8
    assert_residual_max: float = 1e-6

    def validate(self) -> None:
        if self.problem not in ("dj", "grover"):
            raise SpecError("problem", f"must be 'dj' or 'grover', got {self.problem!r}")
        if not self.T:
            raise SpecError("T", "at least one total time is required")
        if any(t <= 0 for t in self.T):
            raise SpecError("T", "total times must be positive")
        if self.grid < 2:
            raise SpecError("grid", f"grid size must be >= 2, got {self.grid}")
        if self.steps < 1:
            raise SpecError("steps", "steps must be positive")
        if self.scheme not in evolve.SCHEMES:
            raise SpecError("scheme", f"must be one of {evolve.SCHEMES}")
        if self.omega <= 0:
            raise SpecError("omega", "gap parameter must be positive")
        if self.problem == "dj":
            if not self.table or any(c not in "01" for c in self.table):
                raise SpecError("table", f"must be a bitstring, got {self.table!r}")
            try:
                BooleanFunctionSpec.from_bits(self.table)
            except ValueError as exc:
                raise SpecError("table", str(exc)) from None
            if self.variant not in algorithms.VARIANT_KINDS:
                raise SpecError("variant", f"must be one of {algorithms.VARIANT_KINDS}")
            if self.variant == "polynomial" and len(self.table) != 2:
                raise SpecError("variant", "polynomial variant is single-bit only")
            if self.poly_n < 1 or self.poly_r < 1:
                raise SpecError("poly_n", "polynomial exponents must be >= 1")
        else:
            if self.N < 2:
                raise SpecError("N", "search space must have N >= 2")
            if not 0 <= self.w < self.N:
                raise SpecError("w", f"marked index must be in [0, {self.N})")
            if self.sign not in (1, -1):
                raise SpecError("sign", "must be +1 or -1")


_SPEC_FIELDS = {
    "problem", "table", "variant", "poly_n", "poly_r", "N", "w", "sign", "omega",
    "T", "grid", "steps", "scheme", "out", "report",
    "assert_fidelity_min", "assert_residual_max",
}
_REPORT_FIELDS = {"residual", "spectrum", "trajectory", "adiabaticity", "phase"}


def parse_run_spec(text: str, strict: bool = True) -> RunSpec:
    """Parse and validate a JSON run spec.

    In strict mode (the default) unknown keys are fatal; a silently ignored
    typo in a physics parameter is the worst failure mode a runner can have.
    """
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SpecError("<document>", f"malformed JSON: {exc}") from None
    if not isinstance(raw, dict):
        raise SpecError("<document>", "spec must be a JSON object")

    unknown = set(raw) - _SPEC_FIELDS
    if unknown and strict:
        raise SpecError(sorted(unknown)[0], "unknown key (strict mode)")
    report_raw = raw.get("report", {})
    if not isinstance(report_raw, dict):
        raise SpecError("report", "must be an object of booleans")
    unknown = set(report_raw) - _REPORT_FIELDS
    if unknown and strict:
        raise SpecError(f"report.{sorted(unknown)[0]}", "unknown key (strict mode)")

    spec = RunSpec()
    for key in _SPEC_FIELDS - {"report"}:
        if key in raw:
            setattr(spec, key, raw[key])
    spec.report = ReportToggles(**{k: bool(v) for k, v in report_raw.items()
                                   if k in _REPORT_FIELDS})
    if "T" in raw:
        if not isinstance(raw["T"], list):
            raise SpecError("T", "must be a list of positive numbers")
        spec.T = [float(t) for t in raw["T"]]
    spec.sign = int(spec.sign)
    spec.validate()
    return spec


@dataclass
class RunRecord:
    T: float
    variant: str
    final_fidelity: float
    outcome: str  # classification label or found index
    certainty: float | None
    max_residual: float | None
    eigenvalue_drift: float | None
    min_gap: float | None
    min_tracking_overlap: float | None
    effective_frequency: float | None
    adiabaticity: float | None
    lr_phase_predicted: float | None
    lr_phase_propagated: float | None
    wall_time_s: float
    passed: bool
    failures: list[str]


@dataclass
class RunReport:
    spec: RunSpec
    records: list[RunRecord]

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.records)

    def to_json(self) -> str:
        payload = {
            "version": TOOL_VERSION,
            "passed": self.passed,
            "spec": asdict(self.spec),
            "records": [asdict(r) for r in self.records],
        }
        return json.dumps(payload, indent=2, sort_keys=True)


def _build_instance(spec: RunSpec, T: float):
    if spec.problem == "dj":
        f = BooleanFunctionSpec.from_bits(spec.table)
        variant = DJVariant(spec.variant, poly_n=spec.poly_n, poly_r=spec.poly_r)
        return dj_build(f, variant, T, omega=spec.omega)
    oracle = GroverOracleSpec(N=spec.N, w=spec.w)
    return grover_build(oracle, T, sign=spec.sign)


def _csv_path(out: str, name: str, T: float) -> str:
    return os.path.join(out, f"{name}_T{T:g}.csv")


def execute(spec: RunSpec, out: str | None = None) -> RunReport:
    """Run every (T,) case of the spec, writing CSVs and a JSON summary.

    Output layout under the chosen directory: one CSV per enabled toggle and
    T value, plus summary.json. Assertion failures are recorded per run and
    reflected in RunReport.passed, not raised.
    """
    spec.validate()
    out = out or spec.out
    records = []
    grid = np.linspace(0.0, 1.0, spec.grid)
    for T in sorted(spec.T):
        t0 = time.perf_counter()
        failures: list[str] = []
        instance = _build_instance(spec, T)
        opts = PropagatorOptions(steps=spec.steps, scheme=spec.scheme,
                                 record_trajectory=True)
        result = instance.run(opts)
        min_overlap = track_invariant(instance.invariant, result)

        fidelity = float(result.final_fidelity)
        if fidelity < spec.assert_fidelity_min:
            failures.append(
                f"final fidelity {fidelity:.12f} below {spec.assert_fidelity_min}"
            )

        certainty = None
        if spec.problem == "dj":
            f = BooleanFunctionSpec.from_bits(spec.table)
            label, certainty = dj_classify(result.final_state, f.n,
                                           labels_reversed=instance.labels_reversed)
            outcome = label
            if label != f.promise:
                failures.append(f"classified {label}, expected {f.promise}")
        else:
            found = int(np.argmax(np.abs(result.final_state) ** 2))
            outcome = str(found)
            if found != spec.w:
                failures.append(f"found index {found}, expected {spec.w}")

        max_residual = None
        if spec.report.residual:
            profile = residual_profile(instance.invariant, instance.hamiltonian, T, grid)
            max_residual = float(np.max(profile))
            if max_residual > spec.assert_residual_max:
                failures.append(
                    f"invariant residual {max_residual:.3e} above {spec.assert_residual_max}"
                )
            if out:
                write_csv(_csv_path(out, "residual", T), ["s", "residual"],
                          zip(grid, profile))

        drift = min_gap = None
        if spec.report.spectrum:
            gap_report = spectrum_flow(instance.invariant, grid)
            drift = float(gap_report.max_eigenvalue_drift)
            min_gap = float(gap_report.min_gap)
            if out:
                gap_report.to_csv(_csv_path(out, "spectrum", T))

        if spec.report.trajectory and out:
            result.trajectory_to_csv(_csv_path(out, "trajectory", T))

        adiabaticity = None
        if spec.report.adiabaticity:
            metric = synth.adiabaticity_metric(instance.hamiltonian, T, grid)
            adiabaticity = float(metric.value)

        lr_pred = lr_prop = None
        if spec.report.phase:
            lr_pred = float(lewis_riesenfeld_phase(
                instance.invariant, instance.hamiltonian, T,
                target=instance.target_state))
            lr_prop = float(result.global_phase)
            if evolve.phase_difference(lr_pred, lr_prop) > 1e-5:
                failures.append(
                    f"phase prediction {lr_pred:.8f} disagrees with propagation {lr_prop:.8f}"
                )

        eff = None
        if instance.hamiltonian.scalar_profile is not None:
            eff = float(synth.effective_frequency(instance.hamiltonian, T))

        records.append(RunRecord(
            T=float(T),
            variant=spec.variant if spec.problem == "dj" else "grover",
            final_fidelity=fidelity,
            outcome=outcome,
            certainty=certainty,
            max_residual=max_residual,
            eigenvalue_drift=drift,
            min_gap=min_gap,
            min_tracking_overlap=float(min_overlap),
            effective_frequency=eff,
            adiabaticity=adiabaticity,
            lr_phase_predicted=lr_pred,
            lr_phase_propagated=lr_prop,
            wall_time_s=time.perf_counter() - t0,
            passed=not failures,
            failures=failures,
        ))

    report = RunReport(spec=spec, records=records)
    if out:
        os.makedirs(out, exist_ok=True)
        with open(os.path.join(out, "summary.json"), "w", encoding="utf-8") as fh:
            fh.write(report.to_json() + "\n")
    return report


DEMO_SPECS = {
    "dj": {
        "problem": "dj",
        "table": "01",
        "variant": "oscillating",
        "T": [0.1, 1.0, 100.0],
        "report": {"residual": True, "spectrum": True, "phase": True},
    },
    "grover": {
        "problem": "grover",
        "N": 4,
        "w": 2,
        "T": [0.5, 50.0],
        "report": {"residual": True, "spectrum": True, "phase": True},
    },
}


def _print_report(report: RunReport) -> None:
    for r in report.records:
        status = "ok" if r.passed else "FAIL"
        parts = [
            f"T={r.T:g}",
            f"outcome={r.outcome}",
            f"fidelity={r.final_fidelity:.12f}",
        ]
        if r.max_residual is not None:
            parts.append(f"residual={r.max_residual:.2e}")
        if r.min_gap is not None:
            parts.append(f"gap={r.min_gap:.6f}")
        if r.lr_phase_predicted is not None:
            parts.append(f"phase={r.lr_phase_predicted:+.6f}")
        parts.append(f"[{status}]")
        print("  ".join(parts))
        for msg in r.failures:
            print(f"    failure: {msg}")
    print("PASS" if report.passed else "FAIL")


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="invariantsim",
        description="Run invariant-driven quantum computations from a JSON spec.",
    )
    parser.add_argument("--out", default=None, help="output directory for reports")
    parser.add_argument("--grid", type=int, default=None, help="override grid size")
    parser.add_argument("--steps", type=int, default=None, help="override propagator steps")
    strictness = parser.add_mutually_exclusive_group()
    strictness.add_argument("--strict", dest="strict", action="store_true", default=True,
                            help="reject unknown spec keys (default)")
    strictness.add_argument("--lenient", dest="strict", action="store_false",
                            help="ignore unknown spec keys")
    sub = parser.add_subparsers(dest="verb", required=True)
    p_run = sub.add_parser("run", help="execute a run spec")
    p_run.add_argument("spec_file")
    p_val = sub.add_parser("validate", help="validate a run spec without running it")
    p_val.add_argument("spec_file")
    p_demo = sub.add_parser("demo", help="run a canned example")
    p_demo.add_argument("which", choices=sorted(DEMO_SPECS))

    args = parser.parse_args(argv)

    try:
        if args.verb == "demo":
            spec = parse_run_spec(json.dumps(DEMO_SPECS[args.which]), strict=True)
        else:
            with open(args.spec_file, "r", encoding="utf-8") as fh:
                spec = parse_run_spec(fh.read(), strict=args.strict)
    except (OSError, SpecError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    if args.grid is not None:
        spec.grid = args.grid
    if args.steps is not None:
        spec.steps = args.steps
    try:
        spec.validate()
    except SpecError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    if args.verb == "validate":
        print(f"valid run spec: problem={spec.problem}, {len(spec.T)} T value(s)")
        return 0

    out = args.out or spec.out or os.environ.get(DEFAULT_OUT_ENV) or "runs"
    report = execute(spec, out=out)
    _print_report(report)
    print(f"reports written to {out}")
    return 0 if report.passed else 1


if __name__ == "__main__":
    sys.exit(main())
