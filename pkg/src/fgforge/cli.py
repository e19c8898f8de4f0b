"""Command-line driver.

    fgforge expand --spec job.json [--out coeffs.json] [--grid N] [--order K]
    fgforge verify coeffs.json
    fgforge wick coeffs.json --out lorentzian.json
    fgforge ellipticity [--seed S] [--samples N] [--degenerate]
    fgforge reference NAME [--order K] [--grid N] [--out coeffs.json] [--spec job.json]

The JSON report goes to stdout, logs go to stderr.  Exit codes: 0 success,
1 malformed input, 2 constraint violation, 3 numerical or audit failure.
Reports carry no timing so identical jobs give identical bytes; elapsed
times are logged instead.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
import time

import numpy as np

from . import ellipticity as ell
from .errors import (CancellationFailure, ConstraintViolation, FGForgeError,
                     NotPositiveDefinite, ResidualCheckFailure, SingularIndicial,
                     SingularMetric)
from .expansion import (BoundaryData, FGExpansion, audit_residual, bach_norms,
                        boundary_identities_check, curvature_decay_fit, expand,
                        g2_formula_resolution, residual_order_fit, tt_norms, wick_rotate,
                        wick_sign)
from .field import SYM_LABELS, GridSpec, SymForm, fourier_field, leading_modes
from .io import CoefficientFileError, read_coefficients, write_coefficients
from .reference import REFERENCES, ads_schwarzschild_closed, reference, warped_einstein_residual

log = logging.getLogger("fgforge")

EXIT_OK, EXIT_INPUT, EXIT_CONSTRAINT, EXIT_NUMERICAL = 0, 1, 2, 3

DEFAULT_TOLERANCES = {
    "tt_tol": 1e-10,
    "residual_tol": 1e-9,
    "rank_threshold": 1e-8,
    "bach_tol": 1e-6,
    "identity_tol": 1e-8,
    "decay_order": 2.0,
}


class SpecError(ValueError):
    pass


# -- job specs --------------------------------------------------------------


def _form_from_spec(grid: GridSpec, block: dict | None, default: np.ndarray) -> SymForm:
    """SymForm from {"constant": {...} or 3x3, "modes": [...]}."""
    block = block or {}
    if not isinstance(block, dict):
        raise SpecError("boundary data blocks must be JSON objects")
    const = block.get("constant", default)
    if isinstance(const, dict):
        mat = np.array(default, dtype=float)
        for lab, val in const.items():
            if lab not in SYM_LABELS:
                raise SpecError(f"unknown component {lab!r}")
            i, j = int(lab[0]) - 1, int(lab[1]) - 1
            mat[i, j] = mat[j, i] = float(val)
    else:
        mat = np.asarray(const, dtype=float)
        if mat.shape != (3, 3) or not np.allclose(mat, mat.T):
            raise SpecError("constant part must be a symmetric 3x3 matrix")
    per = {lab: [] for lab in SYM_LABELS}
    for mode in block.get("modes", []):
        try:
            lab = str(mode["component"])
            k = [int(v) for v in mode["wavevector"]]
            a = float(mode.get("amplitude_cos", 0.0))
            b = float(mode.get("amplitude_sin", 0.0))
        except (KeyError, TypeError, ValueError) as exc:
            raise SpecError(f"bad mode entry {mode!r}: {exc}") from None
        if lab not in SYM_LABELS:
            raise SpecError(f"unknown component {lab!r}")
        if len(k) != 3:
            raise SpecError(f"wavevector must have 3 entries, got {k}")
        if max(abs(v) for v in k) > grid.n_points // 4:
            raise SpecError(f"wavevector {k} exceeds the band limit n_points/4 = "
                            f"{grid.n_points // 4}")
        per[lab].append((np.array(k), a, b))
    comps = []
    for lab in SYM_LABELS:
        i, j = int(lab[0]) - 1, int(lab[1]) - 1
        comps.append(fourier_field(grid, mat[i, j], per[lab]))
    return SymForm(grid, np.array(comps))


def load_job(path: str | None, grid: int | None = None, order: int | None = None) -> dict:
    """Parse and validate a JobSpec file; CLI flags override grid and order."""
    doc = {}
    if path is not None:
        try:
            with open(path, encoding="utf-8") as fh:
                doc = json.load(fh)
        except OSError as exc:
            raise SpecError(f"cannot read spec {path}: {exc}") from None
        except json.JSONDecodeError as exc:
            raise SpecError(f"spec is not valid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise SpecError("spec must be a JSON object")
    n = grid if grid is not None else doc.get("grid", 16)
    k = order if order is not None else doc.get("order", 8)
    try:
        gspec = GridSpec(int(n))
    except (TypeError, ValueError) as exc:
        raise SpecError(str(exc)) from None
    if not isinstance(k, int) or k < 3:
        raise SpecError(f"order must be an integer >= 3, got {k!r}")
    tol = dict(DEFAULT_TOLERANCES)
    unknown = set(doc.get("tolerances", {})) - set(tol)
    if unknown:
        raise SpecError(f"unknown tolerances {sorted(unknown)}")
    tol.update({key: float(v) for key, v in doc.get("tolerances", {}).items()})
    ref = doc.get("reference")
    if ref is not None:
        if not isinstance(ref, dict) or ref.get("name") not in REFERENCES:
            raise SpecError(f"reference must name one of {REFERENCES}")
    return {"command": doc.get("command"), "grid": gspec, "order": k, "tolerances": tol,
            "gamma": doc.get("gamma"), "sigma": doc.get("sigma"), "reference": ref,
            "output": doc.get("output")}


def boundary_data(job: dict) -> tuple[BoundaryData, object]:
    grid = job["grid"]
    ref = None
    if job["reference"] is not None:
        try:
            ref = reference(job["reference"]["name"], job["reference"].get("params"),
                            job["order"])
        except ValueError as exc:
            raise SpecError(str(exc)) from None
        gamma = SymForm.constant(grid, ref.gamma)
        sigma = SymForm.constant(grid, ref.coefficients[3])
    else:
        gamma = _form_from_spec(grid, job["gamma"], np.eye(3))
        sigma = _form_from_spec(grid, job["sigma"], np.zeros((3, 3)))
    try:
        data = BoundaryData(gamma, sigma, job["order"], job["tolerances"]["tt_tol"])
    except NotPositiveDefinite as exc:
        raise SpecError(f"gamma is not positive definite: {exc}") from None
    return data, ref


# -- reports ----------------------------------------------------------------


def jsonable(obj):
    """Plain-JSON version of a report (non-finite floats become strings)."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else str(x)
    if isinstance(obj, complex):
        return {"re": jsonable(obj.real), "im": jsonable(obj.imag)}
    return obj


def emit(report: dict, stream=None) -> None:
    stream = stream or sys.stdout
    stream.write(json.dumps(jsonable(report), indent=1, sort_keys=True) + "\n")


def coefficient_summary(exp: FGExpansion, modes: int = 2) -> list:
    out = []
    for k, c in enumerate(exp.coeffs):
        out.append({"order": k, "sup_norm": c.sup_norm(),
                    "modes": {lab: leading_modes(c.comps[i], modes)
                              for i, lab in enumerate(SYM_LABELS)}})
    return out


def _g2_resolution(gamma: SymForm | None = None) -> dict:
    """Which printed reading of g_(2) the recursion reproduces (flat probe by default)."""
    return g2_formula_resolution(gamma if gamma is not None else SymForm.identity(GridSpec(8)))


def _error_report(command: str, exc: Exception, code: int) -> dict:
    rep = {"command": command, "status": "error", "exit_code": code,
           "error": {"type": type(exc).__name__, "message": str(exc)},
           "g2_formula_resolution": _g2_resolution()}
    for attr in ("trace_norm", "divergence_norm", "constraint", "order", "norm",
                 "min_singular", "worst_point", "value"):
        if hasattr(exc, attr):
            rep["error"][attr] = getattr(exc, attr)
    return rep


# -- commands ---------------------------------------------------------------


def cmd_expand(args) -> tuple[dict, int]:
    job = load_job(args.spec, args.grid, args.order)
    data, ref = boundary_data(job)
    tol = job["tolerances"]
    report = {"command": "expand", "grid": job["grid"].n_points, "order": job["order"],
              "tolerances": tol}
    trace_norm, div_norm = tt_norms(data.gamma, data.sigma)
    report["constraints"] = {"trace_norm": trace_norm, "divergence_norm": div_norm}
    start = time.perf_counter()
    exp = expand(data, residual_tol=tol["residual_tol"])
    log.info("expand finished in %.2f s", time.perf_counter() - start)
    diag = exp.diagnostics
    report.update({
        "status": "ok",
        "exit_code": EXIT_OK,
        "coefficients": coefficient_summary(exp),
        "residual": {"norms": diag["residual_norms"],
                     "clean_through": diag["residual_clean_through"],
                     "required_through": exp.order - 3,
                     "fit": residual_order_fit(exp)},
        "consistency": diag.get("consistency", {}),
        "g2_formula_resolution": diag["g2_formula_resolution"],
        "self_checks": {
            "cancellation": True,
            "affinity": True,
            "indicial_k3_relative_singular": diag.get("indicial_k3_relative_singular"),
            "k3_obstruction_norm": diag.get("k3_obstruction_norm"),
            "min_relative_singular": diag.get("min_relative_singular", {}),
        },
    })
    if ref is not None:
        rel = {}
        for k, c in enumerate(ref.coefficients):
            got = exp.coeffs[k].full()[..., 0, 0, 0]
            denom = max(float(np.max(np.abs(c))), 1e-300)
            rel[k] = float(np.max(np.abs(got - c))) / denom if np.any(c) else \
                float(np.max(np.abs(got)))
        report["reference"] = {"name": ref.name, "params": ref.params,
                               "max_relative_difference": rel}
    out = args.out or job["output"]
    if out:
        write_coefficients(out, exp, {"job": {"grid": job["grid"].n_points,
                                              "order": job["order"]}})
        report["output"] = out
    return report, EXIT_OK


def verify_expansion(exp: FGExpansion, tol: dict | None = None) -> dict:
    """All audits of a stored expansion; each entry carries a ``passed`` flag."""
    tol = {**DEFAULT_TOLERANCES, **(tol or {})}
    k_max = exp.order
    audits = {}
    try:
        norms = audit_residual(exp, tol["residual_tol"])
        ok = True
    except ResidualCheckFailure as exc:
        norms = exp.diagnostics["residual_norms"]
        ok = False
        log.warning("%s", exc)
    clean = exp.diagnostics["residual_clean_through"]
    # orders count powers of t in E = t^2 (Ric + 3 eps g); the same defect
    # sits two orders lower in Ric + 3 eps g itself
    first_bad = clean + 1 if clean < k_max else None
    audits["residual"] = {"passed": ok, "norms": norms, "clean_through": clean,
                          "required_through": k_max - 3,
                          "first_failing_order": first_bad,
                          "first_failing_order_unscaled": None if first_bad is None
                          else first_bad - 2}
    try:
        audits["residual"]["fit"] = residual_order_fit(exp)
    except CancellationFailure as exc:
        audits["residual"]["fit"] = {"error": str(exc)}
    bach = bach_norms(exp)
    scale = max([1.0] + [c.sup_norm() for c in exp.coeffs])
    through = k_max - 4
    bad = [k for k, v in bach.items() if k <= through and v > tol["bach_tol"] * scale]
    audits["bach"] = {"passed": not bad, "norms": bach, "required_through": through,
                      "failing_orders": bad}
    ident = boundary_identities_check(exp)
    checked = ("geodesic_ricci_identity", "scalar_relation", "mixed_identity",
               "mean_curvature")
    audits["boundary_identities"] = {
        "passed": all(ident[key] <= tol["identity_tol"] * scale for key in checked),
        "discrepancies": ident, "checked": list(checked)}
    decay = curvature_decay_fit(exp)
    audits["curvature_decay"] = {
        "passed": bool(decay["exact"] or decay["order"] >= tol["decay_order"]), **decay}
    return audits


def _load_expansion(path: str) -> tuple[FGExpansion, dict]:
    try:
        return read_coefficients(path)
    except CoefficientFileError as exc:
        raise SpecError(str(exc)) from None


def cmd_verify(args) -> tuple[dict, int]:
    exp, meta = _load_expansion(args.file)
    audits = verify_expansion(exp)
    passed = all(a["passed"] for a in audits.values())
    code = EXIT_OK if passed else EXIT_NUMERICAL
    report = {"command": "verify", "status": "ok" if passed else "audit_failed",
              "exit_code": code, "file": args.file, "grid": exp.grid.n_points,
              "order": exp.order, "signature": exp.signature, "audits": audits,
              "g2_formula_resolution": _g2_resolution(exp.gamma)}
    return report, code


def cmd_wick(args) -> tuple[dict, int]:
    exp, meta = _load_expansion(args.file)
    if exp.signature != 1:
        raise SpecError("wick expects a Riemannian coefficient file")
    out = wick_rotate(exp, DEFAULT_TOLERANCES["residual_tol"])
    diag = out.diagnostics
    report = {"command": "wick", "status": "ok", "exit_code": EXIT_OK, "file": args.file,
              "order": exp.order,
              "sign_pattern": {k: ("+" if wick_sign(k) > 0 else "-")
                               for k in range(exp.order + 1)},
              "sign_rule_failed_orders": diag["sign_rule_failed_orders"],
              "repaired_orders": diag["repaired_orders"],
              "lorentzian_residual": diag["lorentzian_residual"],
              "required_through": exp.order - 3,
              "coefficients": coefficient_summary(out),
              "g2_formula_resolution": _g2_resolution(exp.gamma)}
    if args.out:
        write_coefficients(args.out, out, {"wick_rotated_from": args.file})
        report["output"] = args.out
    return report, EXIT_OK


def cmd_ellipticity(args) -> tuple[dict, int]:
    xis = ell.sample_xi(args.samples, args.seed)
    samples = []
    for xi in xis:
        res = ell.complementing_check(ell.CotangentDatum(tuple(xi)), args.degenerate,
                                      DEFAULT_TOLERANCES["rank_threshold"])
        samples.append({"xi": xi, "passed": res["passed"], "rank": res["rank"],
                        "kernel_dim": res["kernel_dim"]})
    rng = np.random.default_rng(args.seed)
    perturbed = []
    for xi in xis:
        g = ell.perturbed_metric(rng, 1e-2)
        res = ell.complementing_check(ell.CotangentDatum(tuple(xi), tuple(map(tuple, g))),
                                      args.degenerate)
        perturbed.append(res["passed"])
    inv = ell.structure_invariants(ell.assemble_boundary_symbol(ell.CotangentDatum((1, 0, 0))))
    n_pass = sum(s["passed"] for s in samples)
    report = {"command": "ellipticity", "status": "ok", "exit_code": EXIT_OK,
              "seed": args.seed, "degenerate": args.degenerate, "samples": samples,
              "pass_fraction": n_pass / len(samples),
              "kernel_dims": sorted({s["kernel_dim"] for s in samples}),
              "perturbed_pass_fraction": sum(perturbed) / len(perturbed),
              "invariants": inv,
              "g2_formula_resolution": _g2_resolution()}
    return report, EXIT_OK


def cmd_reference(args) -> tuple[dict, int]:
    job = load_job(args.spec, args.grid, args.order)
    name = args.name or (job["reference"] or {}).get("name")
    params = (job["reference"] or {}).get("params") or {}
    if args.m is not None:
        params["m"] = args.m
    if name not in REFERENCES:
        raise SpecError(f"reference must be one of {REFERENCES}")
    try:
        ref = reference(name, params, job["order"])
    except ValueError as exc:
        raise SpecError(str(exc)) from None
    report = {"command": "reference", "status": "ok", "exit_code": EXIT_OK, "name": name,
              "params": ref.params, "order": job["order"],
              "coefficients": [np.asarray(c) for c in ref.coefficients],
              "g2_formula_resolution": _g2_resolution()}
    if name == "ads_schwarzschild_planar":
        m = ref.params["m"]
        diag = [np.diag(c) for c in ref.coefficients]
        a = np.array([d[0] for d in diag])
        b = np.array([d[1] for d in diag])
        checks = {}
        for t in (0.1, 0.2):
            ca, cb = ads_schwarzschild_closed(m, t)
            series = np.polynomial.polynomial.polyval(t, np.stack([a, b], axis=1))
            checks[str(t)] = {
                "closed_vs_series": float(np.max(np.abs(series - [ca, cb]))),
                "warped_residual": float(np.max(np.abs(
                    warped_einstein_residual([a, b, b], t))))}
        report["oracle_checks"] = checks
    if args.out:
        exp = FGExpansion(ref.forms(job["grid"]), 1, {})
        write_coefficients(args.out, exp, {"reference": name, "params": ref.params})
        report["output"] = args.out
    return report, EXIT_OK


# -- entry point ------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="fgforge", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true", help="debug logging on stderr")
    sub = p.add_subparsers(dest="command", required=True)

    e = sub.add_parser("expand", help="truncated FG expansion from a job spec")
    e.add_argument("--spec", required=True)
    e.add_argument("--out")
    e.add_argument("--grid", type=int)
    e.add_argument("--order", type=int)

    v = sub.add_parser("verify", help="audit a coefficient file")
    v.add_argument("file")

    w = sub.add_parser("wick", help="Lorentzian rotation of a coefficient file")
    w.add_argument("file")
    w.add_argument("--out")

    el = sub.add_parser("ellipticity", help="complementing condition on sampled covectors")
    el.add_argument("--seed", type=int, default=0)
    el.add_argument("--samples", type=int, default=20)
    el.add_argument("--degenerate", action="store_true")

    r = sub.add_parser("reference", help="closed-form reference expansion")
    r.add_argument("name", nargs="?")
    r.add_argument("--spec")
    r.add_argument("--out")
    r.add_argument("--grid", type=int)
    r.add_argument("--order", type=int)
    r.add_argument("--m", type=float, help="black-hole mass parameter")
    return p


COMMANDS = {"expand": cmd_expand, "verify": cmd_verify, "wick": cmd_wick,
            "ellipticity": cmd_ellipticity, "reference": cmd_reference}


def run(argv=None, stdout=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s")
    command = args.command
    try:
        report, code = COMMANDS[command](args)
    except (SpecError, CoefficientFileError) as exc:
        log.error("%s", exc)
        report, code = _error_report(command, exc, EXIT_INPUT), EXIT_INPUT
    except ConstraintViolation as exc:
        log.error("%s", exc)
        report, code = _error_report(command, exc, EXIT_CONSTRAINT), EXIT_CONSTRAINT
    except (SingularIndicial, CancellationFailure, ResidualCheckFailure, SingularMetric,
            FGForgeError) as exc:
        log.error("%s", exc)
        report, code = _error_report(command, exc, EXIT_NUMERICAL), EXIT_NUMERICAL
    emit(report, stdout)
    return code


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
