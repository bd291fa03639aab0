"""Command line front end.

Every solve-style run produces a canonical JSON result carrying the
primal and dual values, the duality gap, and diagnostics (recomputed
residuals, pivot count, wall time).  Before anything is written, the
result text is parsed back and its residuals recomputed from the
serialized numbers; a mismatch aborts with the numerical-breakdown exit
code rather than publishing an inconsistent file.

Exit codes: 0 success, 1 golden-suite failure, 2 infeasible with
certificate, 3 schema or usage error, 4 numerical breakdown.
"""

import argparse
import json
import re
import sys
import time

import numpy as np

from . import generate, golden, serialize
from .applications import (
    GridFunction,
    MomentProblem,
    conjugate,
    game_value,
    game_value_restricted,
    inf_convolution,
    moment_feasible,
    trig_moment,
)
from .chain import ChainProblem, chain_free_medium, chain_ot
from .lp import NumericalBreakdown, pivot_total
from .scalar import (
    InfeasibleTransport,
    glue_feasible,
    local_constraint_feasible,
    solve_capacity,
    solve_invariant,
    solve_multimarginal,
    solve_ot,
    solve_partial,
    strassen_feasible,
)
from .serialize import SchemaError, canonical_dumps, to_jsonable
from .tolerances import default_tol
from .vector import (
    VectorOtProblem,
    blackwell_check,
    dominates,
    dominates_n,
    dual_refinement_study,
    solve_vector_ot,
    strong_dominates,
)

EXIT_OK = 0
EXIT_GOLDEN = 1
EXIT_INFEASIBLE = 2
EXIT_SCHEMA = 3
EXIT_NUMERIC = 4

VARIANT_KIND = {
    "plain": "scalar_ot",
    "partial": "partial",
    "capacity": "capacity",
    "invariant": "invariant",
    "multi": "multi",
    "glue": "glue",
    "local": "local",
    "strassen": "strassen",
}


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on usage errors; keep 2 reserved for infeasibility
    def error(self, message):
        self.exit(EXIT_SCHEMA, f"{self.prog}: error: {message}\n")


def _marginal_residuals(plan, mu_w, nu_w):
    p = np.asarray(plan, dtype=float)
    return {
        "sourceMarginal": float(np.abs(p.sum(axis=1) - mu_w).max()),
        "targetMarginal": float(np.abs(p.sum(axis=0) - nu_w).max()),
    }


def _emit(args, result, t0, pivots0, recompute=None) -> None:
    """Finalize diagnostics, self-validate the serialized text, write it."""
    diag = result.setdefault("diagnostics", {})
    diag["pivots"] = pivot_total() - pivots0
    diag["wallMillis"] = (time.perf_counter() - t0) * 1000.0
    text = canonical_dumps(result)
    if recompute is not None:
        parsed = json.loads(text)
        fresh = recompute(parsed)
        stored = parsed["diagnostics"]["residuals"]
        for key, val in fresh.items():
            if abs(val - stored[key]) > 1e-9:
                raise NumericalBreakdown(
                    f"serialized result fails revalidation on {key}: "
                    f"{val!r} vs stored {stored[key]!r}"
                )
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(text)
        if not args.quiet:
            print(f"wrote {args.output}")
    elif not args.quiet:
        sys.stdout.write(text)


def _check_gap(result, tol) -> None:
    gap = result["gap"]
    if gap > tol * (1.0 + abs(result["value"])):
        raise NumericalBreakdown(f"duality gap {gap!r} exceeds tolerance {tol!r}")


def _optimal_result(command, value, dual_value, extra) -> dict:
    out = {
        "command": command,
        "status": "optimal",
        "value": float(value),
        "primalValue": float(value),
        "dualValue": float(dual_value),
        "gap": abs(float(value) - float(dual_value)),
    }
    out.update(extra)
    return out


def _cmd_solve_ot(args) -> int:
    kind = VARIANT_KIND[args.variant]
    data = serialize.load_payload(args.input, kind)
    tol = args.tol if args.tol is not None else default_tol()
    t0, piv0 = time.perf_counter(), pivot_total()

    if args.variant in ("glue", "local", "strassen"):
        return _feasibility_variant(args, data, t0, piv0)

    try:
        if args.variant == "plain":
            res = solve_ot(data["mu"], data["nu"], data["cost"])
            dual = float(res.psi @ data["mu"].weights + res.phi @ data["nu"].weights)
            mu_w, nu_w = data["mu"].weights, data["nu"].weights
            result = _optimal_result(
                "solve-ot", res.value, dual,
                {"psi": res.psi, "phi": res.phi, "plan": res.plan.matrix},
            )
            result["diagnostics"] = {
                "gap": result["gap"],
                "residuals": _marginal_residuals(res.plan.matrix, mu_w, nu_w),
            }
            recompute = lambda parsed: _marginal_residuals(parsed["plan"], mu_w, nu_w)
        elif args.variant == "partial":
            res = solve_partial(data["mu"], data["nu"], data["cost"], data["mass"])
            lam = res.extras["lam"]
            dual = float(
                res.psi @ data["mu"].weights + res.phi @ data["nu"].weights
                + lam * data["mass"]
            )
            p = res.plan.matrix
            residuals = {
                "rowExcess": float(np.maximum(p.sum(axis=1) - data["mu"].weights, 0.0).max()),
                "colExcess": float(np.maximum(p.sum(axis=0) - data["nu"].weights, 0.0).max()),
                "massResidual": float(abs(p.sum() - data["mass"])),
            }
            result = _optimal_result(
                "solve-ot", res.value, dual,
                {"psi": res.psi, "phi": res.phi, "lam": lam, "plan": p},
            )
            result["diagnostics"] = {"gap": result["gap"], "residuals": residuals}
            mu_w, nu_w, mass = data["mu"].weights, data["nu"].weights, data["mass"]

            def recompute(parsed):
                q = np.asarray(parsed["plan"], dtype=float)
                return {
                    "rowExcess": float(np.maximum(q.sum(axis=1) - mu_w, 0.0).max()),
                    "colExcess": float(np.maximum(q.sum(axis=0) - nu_w, 0.0).max()),
                    "massResidual": float(abs(q.sum() - mass)),
                }
        elif args.variant == "capacity":
            res = solve_capacity(data["mu"], data["nu"], data["cost"], data["cap"])
            xi = res.extras["xi"]
            dual = float(
                res.psi @ data["mu"].weights + res.phi @ data["nu"].weights
                + (xi * data["cap"].matrix).sum()
            )
            p = res.plan.matrix
            cap_m = data["cap"].matrix
            mu_w, nu_w = data["mu"].weights, data["nu"].weights
            residuals = _marginal_residuals(p, mu_w, nu_w)
            residuals["capExcess"] = float(np.maximum(p - cap_m, 0.0).max())
            result = _optimal_result(
                "solve-ot", res.value, dual,
                {"psi": res.psi, "phi": res.phi, "xi": xi, "plan": p},
            )
            result["diagnostics"] = {"gap": result["gap"], "residuals": residuals}

            def recompute(parsed):
                q = np.asarray(parsed["plan"], dtype=float)
                out = _marginal_residuals(q, mu_w, nu_w)
                out["capExcess"] = float(np.maximum(q - cap_m, 0.0).max())
                return out
        elif args.variant == "invariant":
            res = solve_invariant(data["mu"], data["mapping"], data["cost"], data["target"])
            dual = float(res.psi @ data["mu"].weights)
            p = res.plan.matrix
            mu_w = data["mu"].weights
            mapping = np.asarray(data["mapping"], dtype=int)
            ny = data["target"].size

            def invariance(q):
                marg = np.asarray(q, dtype=float).sum(axis=0)
                pushed = np.bincount(mapping, weights=marg, minlength=ny)
                return float(np.abs(pushed - marg).max())

            residuals = {
                "sourceMarginal": float(np.abs(p.sum(axis=1) - mu_w).max()),
                "invarianceResidual": invariance(p),
            }
            result = _optimal_result(
                "solve-ot", res.value, dual,
                {
                    "psi": res.psi, "phi": res.phi, "plan": p,
                    "inducedMarginal": res.extras["nu"].weights,
                },
            )
            result["diagnostics"] = {"gap": result["gap"], "residuals": residuals}

            def recompute(parsed):
                q = np.asarray(parsed["plan"], dtype=float)
                return {
                    "sourceMarginal": float(np.abs(q.sum(axis=1) - mu_w).max()),
                    "invarianceResidual": invariance(q),
                }
        else:
            res = solve_multimarginal(data["measures"], data["cost"])
            psis = res.extras["psis"]
            dual = float(
                sum(p @ m.weights for p, m in zip(psis, data["measures"]))
            )
            tensor = res.extras["tensor"]
            sizes = tuple(m.space.size for m in data["measures"])
            weights = [m.weights for m in data["measures"]]

            def axis_residuals(t):
                t = np.asarray(t, dtype=float).reshape(sizes)
                out = {}
                for axis, w in enumerate(weights):
                    marg = t.sum(axis=tuple(a for a in range(len(sizes)) if a != axis))
                    out[f"marginal{axis}"] = float(np.abs(marg - w).max())
                return out

            result = _optimal_result(
                "solve-ot", res.value, dual,
                {"potentials": psis, "tensor": tensor.ravel(), "shape": list(sizes)},
            )
            result["diagnostics"] = {"gap": result["gap"], "residuals": axis_residuals(tensor)}
            recompute = lambda parsed: axis_residuals(parsed["tensor"])
    except InfeasibleTransport as exc:
        result = {
            "command": "solve-ot",
            "status": "infeasible",
            "message": str(exc),
            "cert": to_jsonable(exc.cert),
            "diagnostics": {},
        }
        _emit(args, result, t0, piv0)
        return EXIT_INFEASIBLE

    _check_gap(result, tol)
    _emit(args, result, t0, piv0, recompute)
    return EXIT_OK


def _feasibility_variant(args, data, t0, piv0) -> int:
    if args.variant == "glue":
        res = glue_feasible(data["first"], data["second"], data["third"])
        if res.feasible:
            first = data["first"].matrix
            second = data["second"].matrix
            third = data["third"].matrix if data["third"] is not None else None

            def recompute(parsed):
                t = np.asarray(parsed["tensor"], dtype=float).reshape(
                    first.shape[0], first.shape[1], second.shape[1]
                )
                out = {
                    "firstPair": float(np.abs(t.sum(axis=2) - first).max()),
                    "secondPair": float(np.abs(t.sum(axis=0) - second).max()),
                }
                if third is not None:
                    out["thirdPair"] = float(np.abs(t.sum(axis=1) - third).max())
                return out

            residuals = recompute({"tensor": res.tensor.ravel()})
            result = {
                "command": "solve-ot", "status": "feasible",
                "tensor": res.tensor.ravel(), "shape": list(res.tensor.shape),
                "diagnostics": {"residuals": residuals},
            }
            _emit(args, result, t0, piv0, recompute)
            return EXIT_OK
    elif args.variant == "local":
        res = local_constraint_feasible(
            data["mu"], data["nu"], data["cost"], data["threshold"]
        )
        if res.feasible:
            mu_w, nu_w = data["mu"].weights, data["nu"].weights
            cost, D = data["cost"], data["threshold"]

            def recompute(parsed):
                q = np.asarray(parsed["plan"], dtype=float)
                out = _marginal_residuals(q, mu_w, nu_w)
                out["offSupportMass"] = float(q[cost > D].sum()) if np.any(cost > D) else 0.0
                return out

            residuals = recompute({"plan": res.plan.matrix})
            result = {
                "command": "solve-ot", "status": "feasible",
                "plan": res.plan.matrix,
                "diagnostics": {"residuals": residuals},
            }
            _emit(args, result, t0, piv0, recompute)
            return EXIT_OK
    else:
        res = strassen_feasible(data["mu"], data["nu"], data["constraints"])
        if res.feasible:
            mu_w, nu_w = data["mu"].weights, data["nu"].weights
            cons = data["constraints"]

            def recompute(parsed):
                q = np.asarray(parsed["plan"], dtype=float)
                out = _marginal_residuals(q, mu_w, nu_w)
                worst = 0.0
                for G, kind, rhs in cons:
                    attained = float((G * q).sum())
                    if kind == "le":
                        worst = max(worst, attained - rhs)
                    elif kind == "ge":
                        worst = max(worst, rhs - attained)
                    else:
                        worst = max(worst, abs(attained - rhs))
                out["constraintViolation"] = max(worst, 0.0)
                return out

            residuals = recompute({"plan": res.plan.matrix})
            result = {
                "command": "solve-ot", "status": "feasible",
                "plan": res.plan.matrix,
                "diagnostics": {"residuals": residuals},
            }
            _emit(args, result, t0, piv0, recompute)
            return EXIT_OK
    result = {
        "command": "solve-ot", "status": "infeasible",
        "cert": to_jsonable(res.cert), "diagnostics": {},
    }
    _emit(args, result, t0, piv0)
    return EXIT_INFEASIBLE


def _cmd_solve_vot(args) -> int:
    data = serialize.load_payload(args.input, "vector_ot")
    tol = args.tol if args.tol is not None else default_tol()
    t0, piv0 = time.perf_counter(), pivot_total()
    problem = VectorOtProblem(data["mu"], data["nu"], data["cost"], data["eta"])
    try:
        res = solve_vector_ot(problem)
    except InfeasibleTransport as exc:
        result = {
            "command": "solve-vot", "status": "infeasible",
            "message": str(exc), "cert": to_jsonable(exc.cert), "diagnostics": {},
        }
        _emit(args, result, t0, piv0)
        return EXIT_INFEASIBLE
    t = res.extras["t"]
    dual = float(res.extras["Psi"] @ t + (res.phi * data["nu"].values).sum())
    eta = problem.eta
    nu_vals = data["nu"].values

    def recompute(parsed):
        q = np.asarray(parsed["plan"], dtype=float)
        rows = np.asarray(parsed["rowSums"], dtype=float)
        pushed = q.T @ eta
        return {
            "rowSumResidual": float(np.abs(q.sum(axis=1) - rows).max()),
            "targetResidual": float(np.abs(pushed - nu_vals).max()),
        }

    result = _optimal_result(
        "solve-vot", res.value, dual,
        {
            "plan": res.plan.matrix, "rowSums": t,
            "psi": res.psi, "phi": res.phi, "scalarPotential": res.extras["Psi"],
        },
    )
    residuals = recompute({"plan": res.plan.matrix, "rowSums": t})
    result["diagnostics"] = {"gap": result["gap"], "residuals": residuals}
    _check_gap(result, tol)
    _emit(args, result, t0, piv0, recompute)
    return EXIT_OK


def _load_json(path):
    with open(path, "r", encoding="utf-8") as fh:
        try:
            return json.loads(fh.read(), parse_constant=serialize._reject_constant)
        except json.JSONDecodeError as exc:
            raise SchemaError(
                f"line {exc.lineno}, column {exc.colno}", f"parse error: {exc.msg}"
            )


def _cmd_dominate(args) -> int:
    mu = serialize.vector_measure_from_json(_load_json(args.mu), "$")
    nu = serialize.vector_measure_from_json(_load_json(args.nu), "$")
    t0, piv0 = time.perf_counter(), pivot_total()
    result = {"command": "dominate", "diagnostics": {}}
    if args.blackwell:
        rep = blackwell_check(mu, nu, g_samples=args.samples, seed=args.seed or 0)
        ok = bool(rep["dominates"])
        result["status"] = "feasible" if ok else "infeasible"
        cert = rep.pop("cert")
        if cert is not None:
            if cert.kind == "kernel":
                rep["cert"] = {"kind": "kernel", "rows": cert.payload.rows}
            else:
                rep["cert"] = {"kind": cert.kind, "payload": cert.payload}
        result["report"] = to_jsonable(rep)
    elif args.strong:
        ok, witness = strong_dominates(mu, nu)
        result["status"] = "feasible" if ok else "infeasible"
        result["strong"] = ok
        if witness is not None:
            result["witness"] = {
                "sourceAtoms": list(witness[0]), "targetAtoms": list(witness[1])
            }
    elif args.n is not None:
        ok, witness = dominates_n(mu, nu, args.n)
        result["status"] = "feasible" if ok else "infeasible"
        result["blocks"] = args.n
        if witness is not None:
            result["witness"] = {"partition": [list(b) for b in witness]}
    else:
        ok, cert = dominates(mu, nu)
        result["status"] = "feasible" if ok else "infeasible"
        if ok:
            kernel = cert.payload
            pushed = kernel.rows.T @ mu.values
            result["kernel"] = kernel.rows
            result["diagnostics"]["residuals"] = {
                "pushforwardResidual": float(np.abs(pushed - nu.values).max())
            }
            mu_vals = mu.values
            nu_vals = nu.values

            def recompute(parsed):
                rows = np.asarray(parsed["kernel"], dtype=float)
                return {
                    "pushforwardResidual": float(
                        np.abs(rows.T @ mu_vals - nu_vals).max()
                    )
                }

            result["dominates"] = True
            _emit(args, result, t0, piv0, recompute)
            return EXIT_OK
        result["cert"] = to_jsonable(cert.payload)
    result["dominates"] = bool(result["status"] == "feasible")
    _emit(args, result, t0, piv0)
    return EXIT_OK if result["dominates"] else EXIT_INFEASIBLE


_DENSITY_TERM = re.compile(r"^\s*([+-]?\d+(?:\.\d+)?)?\s*(x?)\s*$")


def parse_density(spec: str):
    """Parse component expressions like "1,2x" into a density callable."""
    terms = []
    for part in spec.split(","):
        m = _DENSITY_TERM.match(part)
        if not m or (m.group(1) is None and not m.group(2)):
            raise SchemaError("--density", f"cannot parse component {part!r}")
        coeff = float(m.group(1)) if m.group(1) is not None else 1.0
        terms.append((coeff, bool(m.group(2))))

    def density(x: float):
        return [c * x if linear else c for c, linear in terms]

    return density, len(terms)


def _cmd_refine(args) -> int:
    density, d = parse_density(args.density)
    obj = _load_json(args.targets)
    vals = serialize._matrix(
        serialize._require(obj, "values", "$"), "$.values", cols=d
    )
    ny = vals.shape[0]
    anchors = (
        serialize._float_list(obj["anchors"], "$.anchors", ny)
        if obj.get("anchors") is not None
        else [j / max(ny - 1, 1) for j in range(ny)]
    )
    power = obj.get("power", 2)
    if not isinstance(power, (int, float)) or isinstance(power, bool) or power <= 0:
        raise SchemaError("$.power", f"expected a positive exponent, got {power!r}")
    try:
        grids = [int(g) for g in args.grids.split(",")]
    except ValueError:
        raise SchemaError("--grids", f"expected comma-separated integers, got {args.grids!r}")

    def cost(x, j):
        return abs(x - anchors[j]) ** power

    t0, piv0 = time.perf_counter(), pivot_total()
    study = dual_refinement_study(density, cost, vals, grids)
    entries = [
        {
            "N": e["N"], "value": e["value"], "dualValue": e["dual_value"],
            "gap": abs(e["value"] - e["dual_value"]), "dualSpread": e["q"],
        }
        for e in study["entries"]
    ]
    result = {
        "command": "refine", "status": "optimal",
        "entries": entries, "spreadTrend": study["q_trend"],
        "diagnostics": {
            "residuals": {"worstGap": max(e["gap"] for e in entries)}
        },
    }
    _emit(args, result, t0, piv0)
    return EXIT_OK


def _cmd_chain(args) -> int:
    data = serialize.load_payload(args.input, "chain")
    hops = args.n if args.n is not None else data["hops"]
    t0, piv0 = time.perf_counter(), pivot_total()
    if args.free_medium:
        value = chain_free_medium(data["mu"], data["nu"], data["cost"], hops)
        result = {
            "command": "chain", "status": "optimal", "value": value,
            "hops": hops, "freeMedium": True, "diagnostics": {},
        }
        _emit(args, result, t0, piv0)
        return EXIT_OK
    problem = ChainProblem(
        data["space"], data["cost"], data["mu"], data["nu"], data["medium"], hops
    )
    res = chain_ot(problem)
    mats = [p.matrix for p in res.plans]
    mu_w, nu_w, med_w = (
        data["mu"].weights, data["nu"].weights, data["medium"].weights
    )

    def recompute(parsed):
        plans = [np.asarray(p, dtype=float) for p in parsed["plans"]]
        link = 0.0
        for a, b in zip(plans, plans[1:]):
            link = max(link, float(np.abs(a.sum(axis=0) - b.sum(axis=1)).max()))
        medium = np.sum([p.sum(axis=1) for p in plans[1:]], axis=0) if len(plans) > 1 else None
        out = {
            "sourceMarginal": float(np.abs(plans[0].sum(axis=1) - mu_w).max()),
            "targetMarginal": float(np.abs(plans[-1].sum(axis=0) - nu_w).max()),
            "linking": link,
        }
        out["mediumResidual"] = (
            float(np.abs(medium - hops * med_w).max()) if medium is not None else 0.0
        )
        return out

    residuals = recompute({"plans": mats})
    result = {
        "command": "chain", "status": "optimal", "value": res.value,
        "hops": hops, "f": res.medium_potential, "plans": mats,
        "stages": res.stages,
        "diagnostics": {"residuals": residuals},
    }
    _emit(args, result, t0, piv0, recompute)
    return EXIT_OK


def _cmd_game(args) -> int:
    data = serialize.load_payload(args.input, "game")
    payoff = data["payoff"]
    reference = data["restrict"]
    if args.restrict:
        reference = serialize.scalar_measure_from_json(_load_json(args.restrict), "$")
    t0, piv0 = time.perf_counter(), pivot_total()
    if reference is not None:
        res = game_value_restricted(payoff, reference)
    else:
        res = game_value(payoff)
    sigma, tau = res.row_strategy, res.col_strategy

    def recompute(parsed):
        s = np.asarray(parsed["rowStrategy"], dtype=float)
        t = np.asarray(parsed["colStrategy"], dtype=float)
        v = parsed["value"]
        lower = float(np.min(s @ payoff)) if reference is None else float(
            np.min((s @ payoff)[reference.weights > 0])
        )
        return {
            "rowShortfall": max(0.0, v - lower),
            "colOverrun": max(0.0, float(np.max(payoff @ t)) - v),
        }

    result = _optimal_result(
        "game", res.value, res.value,
        {"rowStrategy": sigma, "colStrategy": tau},
    )
    residuals = recompute({"rowStrategy": sigma, "colStrategy": tau, "value": res.value})
    result["diagnostics"] = {"gap": 0.0, "residuals": residuals}
    _emit(args, result, t0, piv0, recompute)
    return EXIT_OK


def _field(path: str, key: str, reader):
    """Read `key` from a JSON object file, or the whole file if it is bare."""
    obj = _load_json(path)
    if isinstance(obj, dict):
        return reader(serialize._require(obj, key, "$"), f"$.{key}")
    return reader(obj, "$")


def _cmd_moment(args) -> int:
    if args.input:
        data = serialize.load_payload(args.input, "moment")
        M, m = data["functions"], data["target"]
    elif args.functions and args.target:
        M = _field(args.functions, "functions", serialize._matrix)
        m = np.array(
            _field(
                args.target, "target",
                lambda x, p: serialize._float_list(x, p, M.shape[0]),
            )
        )
    else:
        raise SchemaError("moment", "provide --input, or both --M and --m")
    t0, piv0 = time.perf_counter(), pivot_total()
    res = moment_feasible(MomentProblem(M, m))
    if res.feasible:
        def recompute(parsed):
            w = np.asarray(parsed["weights"], dtype=float)
            return {"momentResidual": float(np.abs(M @ w - m).max())}

        result = {
            "command": "moment", "status": "feasible", "weights": res.weights,
            "diagnostics": {"residuals": recompute({"weights": res.weights})},
        }
        _emit(args, result, t0, piv0, recompute)
        return EXIT_OK
    result = {
        "command": "moment", "status": "infeasible", "cert": res.cert,
        "certFloor": float((res.cert @ M).min()),
        "certMargin": float(res.cert @ m),
        "diagnostics": {},
    }
    _emit(args, result, t0, piv0)
    return EXIT_INFEASIBLE


def _cmd_trig(args) -> int:
    if args.input:
        data = serialize.load_payload(args.input, "trig")
        coeffs = data["coeffs"]
        grid = args.grid if args.grid is not None else data["gridSize"]
    elif args.coeffs:
        pairs = _field(
            args.coeffs, "coeffs", lambda x, p: serialize._matrix(x, p, cols=2)
        )
        coeffs = pairs[:, 0] + 1j * pairs[:, 1]
        if args.grid is None:
            raise SchemaError("--grid", "required when --coeffs is used")
        grid = args.grid
    else:
        raise SchemaError("trig", "provide --input or --coeffs")
    t0, piv0 = time.perf_counter(), pivot_total()
    rep = trig_moment(coeffs, grid)
    result = {
        "command": "trig",
        "status": "feasible" if rep["lp_feasible"] else "infeasible",
        "minEig": rep["min_eig"], "norm": rep["norm"],
        "psd": rep["psd"], "lpFeasible": rep["lp_feasible"],
        "boundaryBand": rep["boundary_band"], "gridSize": rep["grid_size"],
        "diagnostics": {},
    }
    if rep["weights"] is not None:
        result["weights"] = rep["weights"]
    if rep["cert"] is not None:
        result["cert"] = rep["cert"]
    _emit(args, result, t0, piv0)
    return EXIT_OK if rep["lp_feasible"] else EXIT_INFEASIBLE


def _grid_function(obj, path) -> GridFunction:
    d = serialize._grid_function_json(obj, path)
    return GridFunction(d["grid"], d["values"])


def _cmd_conj(args) -> int:
    obj = _load_json(args.input)
    if isinstance(obj, dict) and "kind" in obj and "payload" in obj:
        pf = serialize.parse_problem(obj)
        if pf.kind != "conjugate":
            raise SchemaError("$.kind", f"expected 'conjugate', got {pf.kind!r}")
        payload = pf.data
    elif isinstance(obj, dict) and "f" in obj:
        payload = serialize._decode_conjugate(obj, "$")
    else:
        payload = {
            "f": serialize._grid_function_json(obj, "$"),
            "others": [], "dualGrid": None,
        }
    f = GridFunction(payload["f"]["grid"], payload["f"]["values"])
    others = [GridFunction(o["grid"], o["values"]) for o in payload["others"]]
    if args.infconv:
        others = []
        for p in args.infconv:
            o = _load_json(p)
            if isinstance(o, dict) and "f" in o:
                o = o["f"]
            others.append(_grid_function(o, "$"))
    t0, piv0 = time.perf_counter(), pivot_total()
    if others:
        out = inf_convolution(f, *others)
        op = "infConvolution"
    else:
        out = conjugate(f, payload["dualGrid"])
        op = "conjugate"
    result = {
        "command": "conj", "status": "optimal", "operation": op,
        "grid": out.grid, "values": out.values,
        "diagnostics": {},
    }
    _emit(args, result, t0, piv0)
    return EXIT_OK


def _cmd_gen(args) -> int:
    pf = generate.gen(args.kind, args.seed if args.seed is not None else 0)
    text = canonical_dumps(pf.as_dict())
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(text)
        if not args.quiet:
            print(f"wrote {args.output}")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def _cmd_verify(args) -> int:
    report = golden.run_suite(
        only=args.only, tol_override=args.tol, jobs=args.jobs or 1
    )
    for item in report["items"]:
        if item["ok"]:
            if not args.quiet:
                print(f"PASS {item['name']} ({len(item['checks'])} checks)")
            continue
        print(f"FAIL {item['name']}")
        if item.get("error"):
            print(f"  error: {item['error']}")
        for c in item["checks"]:
            if not c["ok"]:
                print(
                    f"  {c['check']}: measured {c['measured']!r}, "
                    f"expected {c['expected']!r} ({c['op']}, tol {c['tol']!r})"
                )
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(canonical_dumps(report))
    if not args.quiet:
        n_ok = sum(1 for i in report["items"] if i["ok"])
        print(f"{n_ok}/{len(report['items'])} golden items passed")
    return EXIT_OK if report["ok"] else EXIT_GOLDEN


def build_parser() -> _Parser:
    common = _Parser(add_help=False)
    common.add_argument("--input", help="input file")
    common.add_argument("--output", help="write the result here instead of stdout")
    common.add_argument("--tol", type=float, default=None, help="tolerance override")
    common.add_argument("--seed", type=int, default=None, help="random seed")
    common.add_argument("--jobs", type=int, default=None, help="parallel workers")
    common.add_argument("--quiet", action="store_true", help="suppress chatter")

    parser = _Parser(prog="vecot", description="transport and duality toolkit")
    sub = parser.add_subparsers(dest="cmd", required=True, parser_class=_Parser)

    p = sub.add_parser("solve-ot", parents=[common], help="scalar transport variants")
    p.add_argument("--variant", choices=sorted(VARIANT_KIND), default="plain")
    p.set_defaults(fn=_cmd_solve_ot, needs_input=True)

    p = sub.add_parser("solve-vot", parents=[common], help="vector-valued transport")
    p.set_defaults(fn=_cmd_solve_vot, needs_input=True)

    p = sub.add_parser("dominate", parents=[common], help="dominance queries")
    p.add_argument("--mu", required=True, help="source vector measure file")
    p.add_argument("--nu", required=True, help="target vector measure file")
    p.add_argument("--n", type=int, default=None, help="coarsening block count")
    p.add_argument("--strong", action="store_true", help="restriction-pair scan")
    p.add_argument("--blackwell", action="store_true", help="full cross-check report")
    p.add_argument("--samples", type=int, default=64, help="convex test functions")
    p.set_defaults(fn=_cmd_dominate, needs_input=False)

    p = sub.add_parser("refine", parents=[common], help="grid refinement study")
    p.add_argument("--density", required=True, help='component spec, e.g. "1,2x"')
    p.add_argument("--targets", required=True, help="target values file")
    p.add_argument("--grids", required=True, help="comma-separated grid sizes")
    p.set_defaults(fn=_cmd_refine, needs_input=False)

    p = sub.add_parser("chain", parents=[common], help="multi-hop transport")
    p.add_argument("--n", type=int, default=None, help="override the hop count")
    p.add_argument("--free-medium", action="store_true", help="leave the medium free")
    p.set_defaults(fn=_cmd_chain, needs_input=True)

    p = sub.add_parser("game", parents=[common], help="matrix game value")
    p.add_argument("--restrict", help="scalar measure restricting the column player")
    p.set_defaults(fn=_cmd_game, needs_input=True)

    p = sub.add_parser("moment", parents=[common], help="moment feasibility")
    p.add_argument("--M", dest="functions", help="moment functions file")
    p.add_argument("--m", dest="target", help="target vector file")
    p.set_defaults(fn=_cmd_moment, needs_input=False)

    p = sub.add_parser("trig", parents=[common], help="trigonometric moments")
    p.add_argument("--coeffs", help="coefficient file")
    p.add_argument("--grid", type=int, default=None, help="circle grid size")
    p.set_defaults(fn=_cmd_trig, needs_input=False)

    p = sub.add_parser("conj", parents=[common], help="discrete convex conjugate")
    p.add_argument(
        "--infconv", nargs="+", default=None,
        help="convolve the input with these grid functions instead",
    )
    p.set_defaults(fn=_cmd_conj, needs_input=True)

    p = sub.add_parser("gen", parents=[common], help="generate a seeded instance")
    p.add_argument("--kind", required=True, choices=serialize.KINDS)
    p.set_defaults(fn=_cmd_gen, needs_input=False)

    p = sub.add_parser("verify", parents=[common], help="run the golden suite")
    p.add_argument("--only", default=None, help="name substring filter")
    p.set_defaults(fn=_cmd_verify, needs_input=False)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "needs_input", False) and not args.input:
        parser.exit(EXIT_SCHEMA, f"vecot {args.cmd}: error: --input is required\n")
    try:
        return args.fn(args)
    except SchemaError as exc:
        print(f"schema error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    except FileNotFoundError as exc:
        print(f"schema error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    except NumericalBreakdown as exc:
        print(f"numerical breakdown: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"schema error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA


if __name__ == "__main__":
    sys.exit(main())
