"""Scenario configs, the built-in corpus, and the suite runner behind the CLI."""

from __future__ import annotations

import copy
import math
import os
import time
from dataclasses import dataclass
from typing import Any

import numpy as np

from . import __version__
from .analytic import AnalyticPoly, PolyRow, PsiSpec, psi_eval, validate_scenario
from .carleson import (
    BoundReport,
    basis_family,
    boundary_norm2,
    lemma_carleson_bound,
    lemma_dbar_embedding,
    main_carleson_bound,
    uchiyama_bound,
    xi_sample,
)
from .errors import LabError
from .fields import (
    alpha_fn,
    alpha_gradient_check,
    compute_fields,
    sample_nodes,
    verify_laplacian_formula,
    verify_measure_laplace,
    verify_pi_identities,
    zeros_of,
)
from .functional import TermBreakdown, decompose, functional_oracle, total_bound_constant
from .hardy import (
    COMPRESSION,
    leech_operator_constant,
    leech_psd_check,
    minimal_norm_solve,
    pick_matrix_check,
    pick_node_pool,
    ratios_nondecreasing,
    table_csv,
)
from .quadrature import DEFAULT_EPSILONS, build_boundary_quadrature, build_disc_quadrature

SCHEMA = 1
COMMANDS = ("validate", "identities", "carleson", "functional", "solve", "leech", "all")

EXIT_OK = 0
EXIT_ASSERT = 2
EXIT_INVALID = 3
EXIT_CONFIG = 4

DEFAULTS: dict[str, Any] = {
    "psi": {"kind": "exponential"},
    "grid": {"radial": 128, "angular": 256, "boundary": 512, "validate": 256},
    "fd": {"step": 1e-4},
    "truncation": {"N": [8, 16, 32, 64]},
    "coanalytic": {"K": 8, "basis": "canonical"},
    "epsilons": list(DEFAULT_EPSILONS),
    "tolerances": {
        "identity": 1e-5,
        "measure_laplace": 1e-4,
        "laplacian_formula_rel": 1e-5,
        "oracle": 1e-4,
        "solve": 1e-8,
        "psd": 1e-10,
        "slack": 0.05,
        "delta_min": 1e-6,
    },
    "samples": 200,
    "seed": 20240613,
    "expect": "pass",
}


def _parse_complex(x) -> complex:
    if isinstance(x, (int, float)):
        return complex(x)
    if isinstance(x, (list, tuple)) and len(x) == 2 and all(isinstance(v, (int, float)) for v in x):
        return complex(x[0], x[1])
    raise LabError("CONFIG", f"bad complex number {x!r}")


def _parse_poly(arr) -> AnalyticPoly:
    if not isinstance(arr, list):
        raise LabError("CONFIG", f"expected a coefficient array, got {arr!r}")
    return AnalyticPoly([_parse_complex(c) for c in arr])


def _poly_json(p: AnalyticPoly) -> list:
    return [[c.real, c.imag] for c in p.coeffs]


def _merge(base: dict, over: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


@dataclass
class ScenarioConfig:
    name: str
    F: PolyRow
    f: AnalyticPoly
    g: AnalyticPoly
    psi: PsiSpec
    raw: dict

    @property
    def grid(self) -> dict:
        return self.raw["grid"]

    @property
    def tol(self) -> dict:
        return self.raw["tolerances"]

    @property
    def step(self) -> float:
        return float(self.raw["fd"]["step"])

    @property
    def seed(self) -> int:
        return int(self.raw["seed"])

    @property
    def expect_fail(self) -> bool:
        return self.raw.get("expect") == "fail"

    @classmethod
    def from_dict(cls, d: dict) -> "ScenarioConfig":
        if not isinstance(d, dict):
            raise LabError("CONFIG", "a scenario must be a JSON object")
        for key in ("F", "g"):
            if key not in d:
                raise LabError("CONFIG", f"missing key {key!r}")
        raw = _merge(DEFAULTS, d)
        raw.setdefault("name", "scenario")
        if not isinstance(raw["F"], list) or not raw["F"]:
            raise LabError("CONFIG", "F must be a non-empty list of coefficient arrays")
        F = PolyRow(tuple(_parse_poly(e) for e in raw["F"]))
        spec_f = raw.get("f", [])
        if isinstance(spec_f, dict):
            if "power" not in spec_f:
                raise LabError("CONFIG", "generator for f needs 'power'")
            f = F.square_sum() ** int(spec_f["power"])
        else:
            f = _parse_poly(spec_f)
        g = _parse_poly(raw["g"])
        try:
            psi = PsiSpec.from_dict(raw["psi"])
        except (TypeError, ValueError) as exc:
            raise LabError("CONFIG", str(exc)) from exc
        if raw["coanalytic"].get("basis", "canonical") != "canonical":
            raise LabError("CONFIG", "only the canonical co-analytic basis is supported")
        seed_env = os.environ.get("CORONA_LAB_SEED")
        if seed_env is not None:
            try:
                raw["seed"] = int(seed_env)
            except ValueError as exc:
                raise LabError("CONFIG", f"CORONA_LAB_SEED={seed_env!r} is not an integer") from exc
        raw["resolved"] = {"f": _poly_json(f), "psi": psi.to_dict()}
        return cls(str(raw["name"]), F, f, g, psi, raw)


def parse_config(obj) -> list[ScenarioConfig]:
    """A config file holds one scenario, a list, or {"scenarios": [...]}."""
    if isinstance(obj, dict) and "scenarios" in obj:
        obj = obj["scenarios"]
    if isinstance(obj, dict):
        obj = [obj]
    if not isinstance(obj, list) or not obj:
        raise LabError("CONFIG", "no scenarios in config")
    return [ScenarioConfig.from_dict(d) for d in obj]


def _row(*entries) -> list:
    return [list(e) for e in entries]


def corpus() -> list[dict]:
    """Built-in scenarios.  Every one except the ``expect: fail`` pair passes validation.

    f is generated as (sum f_k^2)^m, so |f| <= ||F||^(2m), which phi dominates
    for the paired psi.  The [z, c] family is divided by sqrt(1 + c^2) to keep
    ||F|| <= 1 on the circle; its f vanishes at +-ic inside the disc.
    """
    g1 = [1.0]
    g2 = [1.0, 0.5]
    g3 = [0.5, 0.5]
    exp = {"kind": "exponential"}
    npow = {"kind": "normalized-power", "epsilon": 1.0}
    A = _row([0.5, 0.25], [0.25])
    n3 = _row([2 / 6, 1 / 6], [1 / 4, -1 / 8], [1 / 6])

    def zc(c):
        s = 1 / math.sqrt(1 + c * c)
        return _row([0.0, s], [c * s])

    out = [
        {"name": "trivial-F1-f0", "F": [[1.0]], "f": [], "g": g1, "psi": exp},
        {"name": "trivial-F1-f1", "F": [[1.0]], "f": [1.0], "g": g1, "psi": exp},
        {"name": "scalar-z+2", "F": [[2 / 3, 1 / 3]], "f": {"power": 2}, "g": g2, "psi": exp},
        {"name": "A-m2-g1", "F": A, "f": {"power": 2}, "g": g1, "psi": exp},
        {"name": "A-m2-g2", "F": A, "f": {"power": 2}, "g": g2, "psi": exp},
        {"name": "A-m3-g3", "F": A, "f": {"power": 3}, "g": g3, "psi": exp},
        {"name": "A-m3-npow", "F": A, "f": {"power": 3}, "g": g2, "psi": npow},
        {"name": "zc1/4-m2-g1", "F": zc(0.25), "f": {"power": 2}, "g": g1, "psi": exp},
        {"name": "zc1/2-m2-g3", "F": zc(0.5), "f": {"power": 2}, "g": g3, "psi": exp},
        {"name": "zc1/4-m3-npow", "F": zc(0.25), "f": {"power": 3}, "g": g2, "psi": npow},
        {"name": "n3-m2-g2", "F": n3, "f": {"power": 2}, "g": g2, "psi": exp},
        {"name": "n3-m3-g3", "F": n3, "f": {"power": 3}, "g": g3, "psi": exp},
        {"name": "corona-z-1-z", "F": _row([0.0, 1.0], [1.0, -1.0]), "f": [1.0], "g": g1, "psi": exp, "expect": "fail"},
        {"name": "corona-z-1-z-npow", "F": _row([0.0, 1.0], [1.0, -1.0]), "f": [1.0], "g": g1, "psi": npow, "expect": "fail"},
    ]
    return out


def corpus_scenarios() -> list[ScenarioConfig]:
    return [ScenarioConfig.from_dict(d) for d in corpus()]


class _Run:
    """Accumulates report sections and assertion outcomes for one scenario."""

    def __init__(self, sc: ScenarioConfig, slack: float | None):
        self.sc = sc
        self.slack = float(sc.tol["slack"] if slack is None else slack)
        self.report: dict[str, Any] = {
            "schema": SCHEMA,
            "version": __version__,
            "scenario": sc.raw,
            "compression": COMPRESSION,
        }
        self.assertions: list[dict] = []
        self.timing: dict[str, float] = {}
        self._q = None
        self._b = None

    @property
    def q(self):
        if self._q is None:
            self._q = build_disc_quadrature(int(self.sc.grid["radial"]), int(self.sc.grid["angular"]))
        return self._q

    @property
    def b(self):
        if self._b is None:
            self._b = build_boundary_quadrature(int(self.sc.grid["boundary"]))
        return self._b

    def check(self, name: str, ok: bool, detail: str = "") -> None:
        self.assertions.append({"name": name, "pass": bool(ok), "detail": detail})


def _suite_validate(run: _Run) -> bool:
    sc = run.sc
    rep = validate_scenario(sc.F, sc.f, sc.psi, int(sc.grid.get("validate", 256)), float(sc.tol["delta_min"]))
    run.report["hypothesis"] = rep.to_dict()
    run.report["hypothesis"]["expect"] = sc.raw.get("expect", "pass")
    return rep.ok


def _suite_identities(run: _Run) -> None:
    sc, q, tol = run.sc, run.q, run.sc.tol
    dmin = float(tol["delta_min"])
    ident = verify_pi_identities(sc.F, q, int(sc.raw["samples"]), sc.seed, sc.step, dmin)
    out = ident.to_dict()
    run.check("identities.pi", ident.max_residual <= tol["identity"], f"max residual {ident.max_residual:.3e}")

    z = sample_nodes(q, int(sc.raw["samples"]), sc.seed)
    rhs_scale = {}
    lap = {}
    for kind in ("log", "reciprocal"):
        res = verify_laplacian_formula(sc.F, kind, q, int(sc.raw["samples"]), sc.seed, sc.step, dmin)
        fl = compute_fields(sc.F, None, z, dmin)
        rhs_scale[kind] = float(max(1.0, np.max(1.0 / fl.norm2) ** (2 if kind == "log" else 3)))
        lap[kind] = {"residual": res, "relative": res / rhs_scale[kind]}
        run.check(f"identities.laplacian_{kind}", res / rhs_scale[kind] <= tol["laplacian_formula_rel"], f"{res:.3e}")
    out["laplacian_formula"] = lap

    if not sc.f.is_zero:
        ml = verify_measure_laplace(sc.F, sc.f, q, int(sc.raw["samples"]), sc.seed, sc.step, dmin)
        out["measure_laplace"] = ml
        run.check("identities.measure_laplace", ml <= tol["measure_laplace"], f"{ml:.3e}")

        keep = np.ones(q.size, dtype=bool)
        for w in zeros_of(sc.f, sc.step):
            keep &= np.abs(q.nodes - w) > 10 * sc.step
        zs = sample_nodes(q, int(sc.raw["samples"]), sc.seed, keep)
        fl = compute_fields(sc.F, sc.f, zs, dmin)
        bound = psi_eval(sc.psi, np.maximum(-np.log(fl.norm2), 0.0))
        a = fl.alpha
        run.check("identities.alpha_range", bool(np.all(a >= 0) and np.all(a <= bound + 1e-12)), f"max alpha {a.max():.3e}")
        grad, gbound = alpha_gradient_check(sc.F, sc.f, zs, sc.step, dmin)
        run.check("identities.alpha_gradient", bool(np.all(grad <= gbound * (1 + 1e-6) + 1e-8)))
        out["alpha_max"] = float(a.max())
        out["alpha_gradient_ratio_max"] = float(np.max(grad / np.maximum(gbound, 1e-300)))
    run.report["identities"] = out


def _zero_report(label: str, rhs: float, norm: float, slack: float, traced: bool = True) -> BoundReport:
    return BoundReport(0.0, rhs, norm, slack, epsilon_trace=[] if traced else None, label=label, extras={"trivial": "f = 0"})


def _suite_carleson(run: _Run) -> None:
    sc, q, b = run.sc, run.q, run.b
    dmin = float(run.sc.tol["delta_min"])
    eps = [float(e) for e in sc.raw["epsilons"]]
    reps: dict[str, BoundReport] = {}
    reps["lemma41"] = lemma_carleson_bound(sc.F, sc.psi, sc.g, q, b, run.slack, dmin)

    worst_a = worst_b = None
    for label, h in basis_family(sc.F.n, int(sc.raw["coanalytic"]["K"])):
        ra, rb = lemma_dbar_embedding(sc.F, sc.f, sc.psi, h, q, b, eps, sc.step, run.slack, dmin)
        ra.extras["h"] = rb.extras["h"] = label
        run.check(f"carleson.lemma42a[{label}]", ra.passed)
        run.check(f"carleson.lemma42b[{label}]", rb.passed and rb.trace_monotone())
        if worst_a is None or ra.ratio > worst_a.ratio:
            worst_a = ra
        if worst_b is None or rb.ratio > worst_b.ratio:
            worst_b = rb
    reps["lemma42a"], reps["lemma42b"] = worst_a, worst_b

    zeros = zeros_of(sc.f, sc.step) if not sc.f.is_zero else []
    reps["uchiyama"] = uchiyama_bound(alpha_fn(sc.F, sc.f, dmin), zeros, sc.g, q, b, eps, sc.step, run.slack)
    if sc.f.is_zero:
        reps["main"] = _zero_report("main", 2 * math.e**2 + math.e, boundary_norm2(sc.g(b.nodes), b), run.slack)
    else:
        reps["main"] = main_carleson_bound(sc.F, sc.f, sc.g, q, b, eps, sc.step, run.slack, dmin)
    for key in ("lemma41", "uchiyama", "main"):
        ok = reps[key].passed and (key == "lemma41" or key == "uchiyama" or reps[key].trace_monotone())
        run.check(f"carleson.{key}", ok, f"ratio {reps[key].ratio:.3e}")
    run.report["carleson"] = {k: v.to_dict() for k, v in reps.items()}


def _suite_functional(run: _Run) -> None:
    sc, q, b = run.sc, run.q, run.b
    dmin = float(sc.tol["delta_min"])
    eps = [float(e) for e in sc.raw["epsilons"]]
    c0, c_total = total_bound_constant()
    terms: list[TermBreakdown] = []
    for label, h in basis_family(sc.F.n, int(sc.raw["coanalytic"]["K"])):
        if sc.f.is_zero:
            xi_norm = math.sqrt(boundary_norm2(xi_sample(sc.F, h, b.nodes, dmin), b))
            g_norm = math.sqrt(boundary_norm2(sc.g(b.nodes), b))
            tb = TermBreakdown(0j, 0j, 0j, xi_norm, g_norm, functional_oracle(sc.F, sc.f, sc.g, h, b, dmin), label=label)
        else:
            tb = decompose(sc.F, sc.f, sc.g, h, q, b, eps, sc.step, dmin, label)
        terms.append(tb)
        tol = sc.tol["oracle"] * (1 + tb.xi_norm)
        run.check(f"functional.oracle[{label}]", tb.oracle_error <= tol, f"{tb.oracle_error:.3e}")
        for k, ok in tb.bounds_hold(run.slack).items():
            run.check(f"functional.bound_{k}[{label}]", ok)
    worst = max(terms, key=lambda t: abs(t.total) / max(t.xi_norm, 1e-300))
    c = lambda x: [x.real, x.imag]
    run.report["functional"] = {
        "h": worst.label,
        "I": c(worst.term_I),
        "II": c(worst.term_II),
        "III": c(worst.term_III),
        "oracle": c(worst.oracle),
        "C0": c0,
        "C_total": c_total,
        "max_oracle_error": max(t.oracle_error for t in terms),
        "terms": [t.to_dict() for t in terms],
    }


def _suite_solve(run: _Run) -> tuple[list[dict], Any]:
    sc = run.sc
    _, c_total = total_bound_constant()
    rows = []
    last = None
    for N in sc.raw["truncation"]["N"]:
        sol = minimal_norm_solve(sc.F, sc.f, sc.g, int(N), float(sc.tol["solve"]))
        rows.append({"N": int(N), "residual": sol.residual, "ratio": sol.ratio, "norm": sol.norm})
        last = sol
        run.check(f"solve.residual[N={N}]", sol.residual <= sc.tol["solve"], f"{sol.residual:.3e}")
        run.check(f"solve.ratio[N={N}]", sol.ratio <= c_total, f"{sol.ratio:.6f} <= {c_total:.4f}")
    run.check("solve.monotone", ratios_nondecreasing(rows))
    run.report["solve"] = {"table": rows, "C_total": c_total, "compression": COMPRESSION}
    return rows, last


def _suite_leech(run: _Run, rows: list[dict]) -> None:
    """Leech and Pick positivity at the worst-case section constant.

    The constant is sup over g of ||G||/||g|| on the section; the scenario's
    own ratio is recorded too, but a single g does not bound that supremum.
    """
    sc = run.sc
    psd = float(sc.tol["psd"])
    table = []
    for row in rows:
        N = row["N"]
        c_op = leech_operator_constant(sc.F, sc.f, N)
        C = max(c_op * (1 + 1e-6), 1e-6)
        res = leech_psd_check(sc.F, sc.f, C, N, psd)
        at_rho = leech_psd_check(sc.F, sc.f, max(row["ratio"] * (1 + 1e-6), 1e-6), N, psd)
        run.check(f"leech.psd[N={N}]", res.passed, f"min eig {res.min_eigenvalue:.3e}")
        run.check(f"leech.scenario_ratio_le_operator[N={N}]", row["ratio"] <= c_op * (1 + 1e-9) + 1e-15)
        table.append(
            {
                "N": N,
                "operator_constant": c_op,
                "scenario_ratio": row["ratio"],
                "min_eig": res.min_eigenvalue,
                "tolerance": res.tolerance,
                "min_eig_at_scenario_ratio": at_rho.min_eigenvalue,
            }
        )
    c_pick = max(table[-1]["operator_constant"] * 1.1, 1e-6)
    pick = pick_matrix_check(sc.F, sc.f, c_pick, pick_node_pool(), psd)
    pick_rho = pick_matrix_check(sc.F, sc.f, max(rows[-1]["ratio"] * 1.1, 1e-6), pick_node_pool(), psd)
    run.check("pick.psd", pick.passed, f"min eig {pick.min_eigenvalue:.3e}")
    run.report["leech"] = {"min_eig": table[-1]["min_eig"], "table": table}
    run.report["pick"] = {
        "min_eig": pick.min_eigenvalue,
        "C": c_pick,
        "nodes": len(pick_node_pool()),
        "min_eig_at_scenario_ratio": pick_rho.min_eigenvalue,
    }


def run_scenario(sc: ScenarioConfig, command: str = "all", slack: float | None = None) -> tuple[dict, int, dict]:
    """Run one scenario.  Returns (report, exit code, csv exports)."""
    if command not in COMMANDS:
        raise LabError("CONFIG", f"unknown command {command!r}")
    run = _Run(sc, slack)
    exports: dict[str, str] = {}

    t0 = time.perf_counter()
    valid = _suite_validate(run)
    run.timing["validate"] = time.perf_counter() - t0
    valid_as_expected = valid != sc.expect_fail
    run.check("hypothesis", valid_as_expected, "expected fail" if sc.expect_fail else "")

    if valid and command != "validate":
        suites = COMMANDS[1:-1] if command == "all" else (command,)
        rows = None
        for name in suites:
            t0 = time.perf_counter()
            try:
                if name == "identities":
                    _suite_identities(run)
                elif name == "carleson":
                    _suite_carleson(run)
                elif name == "functional":
                    _suite_functional(run)
                elif name == "solve" or (name == "leech" and rows is None):
                    rows, sol = _suite_solve(run)
                    exports["G.csv"] = sol.to_csv()
                    exports["solve.csv"] = table_csv(rows)
                if name == "leech":
                    _suite_leech(run, rows)
            except LabError as exc:
                run.check(f"{name}.error", False, str(exc))
            run.timing[name] = time.perf_counter() - t0
    elif not valid:
        run.report["skipped"] = "scenario failed validation"

    run.report["assertions"] = run.assertions
    run.report["timing"] = run.timing
    if not valid_as_expected:
        code = EXIT_INVALID
    elif all(a["pass"] for a in run.assertions):
        code = EXIT_OK
    else:
        code = EXIT_ASSERT
    run.report["exit_code"] = code
    return run.report, code, exports


def to_jsonable(obj):
    """numpy scalars and complex values into plain JSON types."""
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else repr(v)
    if isinstance(obj, (complex, np.complexfloating)):
        return [float(obj.real), float(obj.imag)]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    return obj
