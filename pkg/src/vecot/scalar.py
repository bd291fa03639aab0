"""Scalar transport problems and their variants, each solved as one LP.

Every solver returns dual potentials along with the optimal plan and
checks the certificate inequality of any infeasibility before raising.
Sign conventions follow the LP duals directly:

- plain:      psi(x) + phi(y) <= c(x,y),          value = psi.mu + phi.nu
- partial:    psi(x) + phi(y) + lam <= c(x,y) with psi, phi <= 0,
              value = psi.mu + phi.nu + lam*m
- capacity:   maximization; value = psi.mu + phi.nu + sum xi.cap with
              xi = [c - psi - phi]_+
- invariant:  psi(x) + phi(y) - phi(Ty) <= c(x,y), value = psi.mu
- multi:      sum_i psi_i(x_i) <= c(x_1..x_k)
"""

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .lp import LpProblem, NumericalBreakdown, farkas_margin, solve
from .measures import ScalarMeasure, TransportPlan
from .tolerances import CERT_TOL, FEAS_TOL

__all__ = [
    "OtResult",
    "FeasibilityResult",
    "GlueResult",
    "InfeasibleTransport",
    "solve_ot",
    "solve_partial",
    "solve_capacity",
    "solve_capacity_min",
    "solve_invariant",
    "solve_multimarginal",
    "glue_feasible",
    "local_constraint_feasible",
    "strassen_feasible",
]


class InfeasibleTransport(Exception):
    """Raised when a transport problem has no feasible plan.

    The `cert` attribute holds a dictionary describing a separating
    certificate; its defining inequality is validated numerically before
    the exception is raised.
    """

    def __init__(self, message: str, cert: dict):
        super().__init__(message)
        self.cert = cert


@dataclass
class OtResult:
    value: float
    plan: TransportPlan
    psi: np.ndarray
    phi: np.ndarray
    extras: dict = field(default_factory=dict)


@dataclass
class FeasibilityResult:
    feasible: bool
    plan: Optional[TransportPlan] = None
    cert: Optional[dict] = None


@dataclass
class GlueResult:
    feasible: bool
    tensor: Optional[np.ndarray] = None
    cert: Optional[dict] = None


def _check_cost(cost, nx: int, ny: int) -> np.ndarray:
    c = np.atleast_2d(np.asarray(cost, dtype=float))
    if c.shape != (nx, ny):
        raise ValueError(f"cost has shape {c.shape}, expected ({nx}, {ny})")
    if not np.all(np.isfinite(c)):
        raise ValueError("cost must be finite")
    return c


def _marginal_matrix(nx: int, ny: int) -> np.ndarray:
    """Row-sum rows followed by column-sum rows, acting on a flattened plan."""
    A = np.zeros((nx + ny, nx * ny))
    for i in range(nx):
        A[i, i * ny : (i + 1) * ny] = 1.0
    for j in range(ny):
        A[nx + j, j::ny] = 1.0
    return A


def _reinsert(mat, li, lj, nx, ny) -> np.ndarray:
    out = np.zeros((nx, ny))
    out[np.ix_(li, lj)] = mat
    return out


def _mass_mismatch_cert(mu: ScalarMeasure, nu: ScalarMeasure) -> dict:
    s = 1.0 if mu.total() > nu.total() else -1.0
    psi = np.full(mu.space.size, -s)
    phi = np.full(nu.space.size, s)
    margin = float(psi @ mu.weights + phi @ nu.weights)
    if not margin < -CERT_TOL:
        raise NumericalBreakdown("mass-mismatch certificate failed validation")
    return {"psi": psi, "phi": phi, "margin": margin}


def solve_ot(mu: ScalarMeasure, nu: ScalarMeasure, cost) -> OtResult:
    """Least-cost coupling of mu and nu.

    Raises InfeasibleTransport with a separating (psi, phi) when the total
    masses differ; otherwise returns the optimal plan and potentials with
    duality gap at most GAP_TOL * (1 + |value|).
    """
    nx, ny = mu.space.size, nu.space.size
    c = _check_cost(cost, nx, ny)
    if abs(mu.total() - nu.total()) > FEAS_TOL * max(1.0, mu.total(), nu.total()):
        raise InfeasibleTransport(
            f"total masses differ: {mu.total()!r} vs {nu.total()!r}",
            _mass_mismatch_cert(mu, nu),
        )
    li = np.nonzero(mu.weights > 0.0)[0]
    lj = np.nonzero(nu.weights > 0.0)[0]
    if li.size == 0 or lj.size == 0:
        phi = np.zeros(ny)
        psi = c.min(axis=1) if ny else np.zeros(nx)
        plan = TransportPlan(mu.space, nu.space, np.zeros((nx, ny)))
        return OtResult(0.0, plan, psi, phi)
    kx, ky = li.size, lj.size
    A = _marginal_matrix(kx, ky)
    b = np.concatenate([mu.weights[li], nu.weights[lj]])
    sub = c[np.ix_(li, lj)]
    sol = solve(LpProblem(c=sub.ravel(), A=A, b=b, kinds=["eq"] * (kx + ky)))
    if sol.status != "optimal":
        raise NumericalBreakdown(f"transport LP returned {sol.status}")
    psi_l, phi_l = sol.y[:kx], sol.y[kx:]
    psi = np.empty(nx)
    phi = np.empty(ny)
    psi[li] = psi_l
    phi[lj] = phi_l
    dead_y = np.setdiff1d(np.arange(ny), lj)
    for j in dead_y:
        phi[j] = np.min(c[li, j] - psi_l)
    dead_x = np.setdiff1d(np.arange(nx), li)
    for i in dead_x:
        psi[i] = np.min(c[i, :] - phi)
    plan = TransportPlan(
        mu.space, nu.space, _reinsert(np.maximum(sol.x, 0.0).reshape(kx, ky), li, lj, nx, ny)
    )
    return OtResult(sol.value, plan, psi, phi)


def solve_partial(mu: ScalarMeasure, nu: ScalarMeasure, cost, m: float) -> OtResult:
    """Transport a prescribed amount m of mass, m <= min(mu(X), nu(Y)).

    The returned potentials are the LP duals of the inequality-constrained
    program: psi, phi <= 0 and psi(x) + phi(y) + lam <= c(x,y), with
    value = psi.mu + phi.nu + lam * m (lam in extras["lam"]).
    """
    nx, ny = mu.space.size, nu.space.size
    c = _check_cost(cost, nx, ny)
    cap = min(mu.total(), nu.total())
    if m < -FEAS_TOL or m > cap + FEAS_TOL:
        raise ValueError(f"mass {m!r} outside [0, {cap!r}]")
    m = min(max(m, 0.0), cap)
    li = np.nonzero(mu.weights > 0.0)[0]
    lj = np.nonzero(nu.weights > 0.0)[0]
    kx, ky = li.size, lj.size
    A = np.vstack([_marginal_matrix(kx, ky), np.ones((1, kx * ky))])
    b = np.concatenate([mu.weights[li], nu.weights[lj], [m]])
    kinds = ["le"] * (kx + ky) + ["eq"]
    sol = solve(LpProblem(c=c[np.ix_(li, lj)].ravel(), A=A, b=b, kinds=kinds))
    if sol.status != "optimal":
        raise NumericalBreakdown(f"partial transport LP returned {sol.status}")
    lam = float(sol.y[-1])
    psi = np.empty(nx)
    phi = np.empty(ny)
    psi[li] = sol.y[:kx]
    phi[lj] = sol.y[kx : kx + ky]
    dead_y = np.setdiff1d(np.arange(ny), lj)
    for j in dead_y:
        lo = np.min(c[li, j] - psi[li] - lam) if kx else 0.0
        phi[j] = min(0.0, lo)
    dead_x = np.setdiff1d(np.arange(nx), li)
    for i in dead_x:
        psi[i] = min(0.0, np.min(c[i, :] - phi - lam))
    plan = TransportPlan(
        mu.space, nu.space, _reinsert(np.maximum(sol.x, 0.0).reshape(kx, ky), li, lj, nx, ny)
    )
    return OtResult(sol.value, plan, psi, phi, extras={"lam": lam})


def _capacity_dead_potentials(c, psi, phi, li, lj):
    """Fill dropped atoms so that [c - psi - phi]_+ vanishes off the live block."""
    nx, ny = c.shape
    dead_y = np.setdiff1d(np.arange(ny), lj)
    for j in dead_y:
        phi[j] = np.max(c[li, j] - psi[li]) if li.size else np.max(c[:, j])
    dead_x = np.setdiff1d(np.arange(nx), li)
    for i in dead_x:
        psi[i] = np.max(c[i, :] - phi)


def solve_capacity(
    mu: ScalarMeasure, nu: ScalarMeasure, cost, cap: TransportPlan
) -> OtResult:
    """Maximize the transported cost over plans in Pi(mu, nu) below cap.

    The dual reported in extras["xi"] is [c - psi - phi]_+; its pairing
    with the capacity reproduces the value:
    value = psi.mu + phi.nu + sum(xi * cap).  When no plan fits under the
    capacity, raises InfeasibleTransport with a certificate (psi, phi)
    for which sum([psi + phi]_+ * cap) - psi.mu - phi.nu < 0.
    """
    nx, ny = mu.space.size, nu.space.size
    c = _check_cost(cost, nx, ny)
    if cap.matrix.shape != (nx, ny):
        raise ValueError("capacity shape does not match the marginals")
    if abs(mu.total() - nu.total()) > FEAS_TOL * max(1.0, mu.total(), nu.total()):
        raise InfeasibleTransport(
            "total masses differ", _mass_mismatch_cert(mu, nu)
        )
    li = np.nonzero(mu.weights > 0.0)[0]
    lj = np.nonzero(nu.weights > 0.0)[0]
    kx, ky = li.size, lj.size
    psi = np.zeros(nx)
    phi = np.zeros(ny)
    if kx == 0 or ky == 0:
        _capacity_dead_potentials(c, psi, phi, li, lj)
        return OtResult(
            0.0,
            TransportPlan(mu.space, nu.space, np.zeros((nx, ny))),
            psi,
            phi,
            extras={"xi": np.zeros((nx, ny))},
        )
    A = _marginal_matrix(kx, ky)
    b = np.concatenate([mu.weights[li], nu.weights[lj]])
    upper = cap.matrix[np.ix_(li, lj)].ravel()
    p = LpProblem(
        c=c[np.ix_(li, lj)].ravel(),
        A=A,
        b=b,
        kinds=["eq"] * (kx + ky),
        upper=upper,
        sense="max",
    )
    sol = solve(p)
    if sol.status == "infeasible":
        # Farkas row duals negate into potentials violating the
        # Kellerer-style feasibility inequality
        psi_l, phi_l = -sol.farkas[:kx], -sol.farkas[kx:]
        psi_c = np.zeros(nx)
        phi_c = np.zeros(ny)
        psi_c[li] = psi_l
        phi_c[lj] = phi_l
        pos_part = np.maximum(psi_c[:, None] + phi_c[None, :], 0.0)
        slack = float(
            (pos_part * cap.matrix).sum() - psi_c @ mu.weights - phi_c @ nu.weights
        )
        if not slack < -CERT_TOL:
            raise NumericalBreakdown("capacity certificate failed validation")
        raise InfeasibleTransport(
            "capacity admits no coupling of the marginals",
            {"psi": psi_c, "phi": phi_c, "kellerer_slack": slack},
        )
    if sol.status != "optimal":
        raise NumericalBreakdown(f"capacity LP returned {sol.status}")
    psi[li] = sol.y[:kx]
    phi[lj] = sol.y[kx:]
    _capacity_dead_potentials(c, psi, phi, li, lj)
    xi = np.maximum(c - psi[:, None] - phi[None, :], 0.0)
    plan = TransportPlan(
        mu.space, nu.space, _reinsert(np.maximum(sol.x, 0.0).reshape(kx, ky), li, lj, nx, ny)
    )
    return OtResult(sol.value, plan, psi, phi, extras={"xi": xi})


def solve_capacity_min(
    mu: ScalarMeasure, nu: ScalarMeasure, cost, cap: TransportPlan
) -> OtResult:
    """Minimizing wrapper around solve_capacity (negated cost).

    Potentials are negated back, so value = psi.mu + phi.nu - sum(xi * cap)
    with xi = [psi + phi - c]_+ in extras["xi"].
    """
    c = _check_cost(cost, mu.space.size, nu.space.size)
    res = solve_capacity(mu, nu, -c, cap)
    psi, phi = -res.psi, -res.phi
    xi = np.maximum(psi[:, None] + phi[None, :] - c, 0.0)
    return OtResult(
        -res.value, res.plan, psi, phi, extras={"xi": xi, "orientation": "min"}
    )


def solve_invariant(mu: ScalarMeasure, mapping, cost, target) -> OtResult:
    """Cheapest coupling of mu with some T-invariant second marginal.

    mapping is a self-map T of the target space; the plan's Y-marginal nu
    (extras["nu"]) satisfies pushforward(nu, T) = nu.  The reported phi
    pairs as phi(y) - phi(Ty) in the dual constraint.  extras also holds
    the value of the written dual family max{psi.mu : psi(x) + phi(y) +
    phi(Ty) <= c(x,y)} under "family_value" (possibly +inf); both sides
    are reported without asserting they coincide.
    """
    nx, ny = mu.space.size, target.size
    c = _check_cost(cost, nx, ny)
    if callable(mapping):
        T = np.array([int(mapping(j)) for j in range(ny)])
    else:
        T = np.asarray(list(mapping), dtype=int)
    if T.shape != (ny,) or np.any(T < 0) or np.any(T >= ny):
        raise ValueError("mapping must send every target atom to a target atom")
    nvar = nx * ny
    A = np.zeros((nx + ny, nvar))
    for i in range(nx):
        A[i, i * ny : (i + 1) * ny] = 1.0
    # invariance rows: (mass entering y) - (mass entering T^{-1}-fibre of y)
    for y in range(ny):
        A[nx + y, y::ny] += 1.0
        for yp in range(ny):
            if T[yp] == y:
                A[nx + y, yp::ny] -= 1.0
    b = np.concatenate([mu.weights, np.zeros(ny)])
    sol = solve(LpProblem(c=c.ravel(), A=A, b=b, kinds=["eq"] * (nx + ny)))
    if sol.status != "optimal":
        raise NumericalBreakdown(f"invariant-marginal LP returned {sol.status}")
    plan_mat = np.maximum(sol.x, 0.0).reshape(nx, ny)
    nu = ScalarMeasure(target, plan_mat.sum(axis=0))
    psi, w = sol.y[:nx], sol.y[nx:]
    extras = {"nu": nu, "w": w}
    extras.update(_invariant_family_side(mu, T, c))
    plan = TransportPlan(mu.space, target, plan_mat)
    return OtResult(sol.value, plan, psi, w, extras=extras)


def _invariant_family_side(mu: ScalarMeasure, T: np.ndarray, c: np.ndarray) -> dict:
    """Solve max psi.mu over psi(x) + phi(y) + phi(Ty) <= c(x,y) as written."""
    nx, ny = c.shape
    nvar = nx + ny
    rows = np.zeros((nx * ny, nvar))
    rhs = np.empty(nx * ny)
    k = 0
    for i in range(nx):
        for j in range(ny):
            rows[k, i] = 1.0
            rows[k, nx + j] += 1.0
            rows[k, nx + T[j]] += 1.0
            rhs[k] = c[i, j]
            k += 1
    obj = np.concatenate([mu.weights, np.zeros(ny)])
    p = LpProblem(
        c=obj,
        A=rows,
        b=rhs,
        kinds=["le"] * (nx * ny),
        lower=np.full(nvar, -np.inf),
        sense="max",
    )
    sol = solve(p)
    if sol.status == "optimal":
        return {
            "family_value": sol.value,
            "family_psi": sol.x[:nx],
            "family_phi": sol.x[nx:],
        }
    if sol.status == "unbounded":
        return {"family_value": np.inf}
    raise NumericalBreakdown("dual-family LP reported infeasible with an empty objective")


def solve_multimarginal(measures: Sequence[ScalarMeasure], cost) -> OtResult:
    """Couple k marginals at least cost over the full product space."""
    if len(measures) < 2:
        raise ValueError("need at least two marginals")
    sizes = [m.space.size for m in measures]
    c = np.asarray(cost, dtype=float)
    if c.shape != tuple(sizes):
        raise ValueError(f"cost has shape {c.shape}, expected {tuple(sizes)}")
    ncells = int(np.prod(sizes))
    if ncells > 10**6:
        raise ValueError("product space exceeds 1e6 cells")
    totals = [m.total() for m in measures]
    for i in range(1, len(totals)):
        if abs(totals[i] - totals[0]) > FEAS_TOL * max(1.0, *totals):
            psis = [np.zeros(n) for n in sizes]
            heavy, light = (0, i) if totals[0] > totals[i] else (i, 0)
            psis[heavy] = np.full(sizes[heavy], -1.0)
            psis[light] = np.full(sizes[light], 1.0)
            margin = sum(float(p @ m.weights) for p, m in zip(psis, measures))
            if not margin < -CERT_TOL:
                raise NumericalBreakdown("mass-mismatch certificate failed validation")
            raise InfeasibleTransport(
                "marginal total masses differ", {"psis": psis, "margin": margin}
            )
    axes_idx = np.indices(tuple(sizes))
    blocks = []
    b = []
    for axis, (n, meas) in enumerate(zip(sizes, measures)):
        flat = axes_idx[axis].ravel()
        block = np.zeros((n, ncells))
        block[flat, np.arange(ncells)] = 1.0
        blocks.append(block)
        b.append(meas.weights)
    A = np.vstack(blocks)
    b = np.concatenate(b)
    sol = solve(LpProblem(c=c.ravel(), A=A, b=b, kinds=["eq"] * A.shape[0]))
    if sol.status != "optimal":
        raise NumericalBreakdown(f"multimarginal LP returned {sol.status}")
    psis = []
    at = 0
    for n in sizes:
        psis.append(sol.y[at : at + n])
        at += n
    tensor = np.maximum(sol.x, 0.0).reshape(tuple(sizes))
    plan = None
    if len(sizes) == 2:
        plan = TransportPlan(measures[0].space, measures[1].space, tensor)
    return OtResult(
        sol.value,
        plan,
        psis[0],
        psis[-1],
        extras={"psis": psis, "tensor": tensor},
    )


def glue_feasible(
    mu_xy: TransportPlan, nu_yz: TransportPlan, lam_xz: Optional[TransportPlan] = None
) -> GlueResult:
    """Find a three-space plan with the given pair marginals.

    Two-measure mode (lam_xz None): a plan on X x Y x Z with (X,Y)-marginal
    mu_xy and (Y,Z)-marginal nu_yz exists iff the Y-marginals agree; both
    the direct marginal comparison and the LP must agree, and the LP's
    Farkas certificate is returned on failure.  Passing lam_xz adds the
    (X,Z)-marginal constraint; matching pair marginals are then no longer
    sufficient, and infeasibility is certified by (psi, phi, xi) with
    psi(x,y) + phi(y,z) + xi(x,z) >= 0 everywhere but negative total
    against the data.
    """
    nx, ny = mu_xy.matrix.shape
    ny2, nz = nu_yz.matrix.shape
    if ny != ny2:
        raise ValueError("middle spaces of the two plans differ")
    ncells = nx * ny * nz
    idx = np.indices((nx, ny, nz))
    ix, iy, iz = (a.ravel() for a in idx)
    rows = []
    rhs = []
    for x in range(nx):
        for y in range(ny):
            rows.append(((ix == x) & (iy == y)).astype(float))
            rhs.append(mu_xy.matrix[x, y])
    for y in range(ny):
        for z in range(nz):
            rows.append(((iy == y) & (iz == z)).astype(float))
            rhs.append(nu_yz.matrix[y, z])
    if lam_xz is not None:
        if lam_xz.matrix.shape != (nx, nz):
            raise ValueError("third marginal shape does not match")
        for x in range(nx):
            for z in range(nz):
                rows.append(((ix == x) & (iz == z)).astype(float))
                rhs.append(lam_xz.matrix[x, z])
    A = np.vstack(rows)
    b = np.array(rhs)
    p = LpProblem(c=np.zeros(ncells), A=A, b=b, kinds=["eq"] * A.shape[0])
    sol = solve(p)
    marg_gap = float(
        np.max(np.abs(mu_xy.matrix.sum(axis=0) - nu_yz.matrix.sum(axis=1)))
    )
    if lam_xz is None:
        # two independent feasibility routes must agree
        agree = marg_gap <= FEAS_TOL * max(1.0, mu_xy.mass())
        if agree != (sol.status == "optimal"):
            raise NumericalBreakdown(
                f"marginal comparison ({marg_gap:.2e}) disagrees with LP status {sol.status}"
            )
    if sol.status == "optimal":
        return GlueResult(True, tensor=np.maximum(sol.x, 0.0).reshape(nx, ny, nz))
    if sol.status != "infeasible":
        raise NumericalBreakdown(f"gluing LP returned {sol.status}")
    if farkas_margin(p, sol.farkas) >= -CERT_TOL:
        raise NumericalBreakdown("gluing certificate failed validation")
    # the certificate's cell sums are >= 0 while its pairing with the
    # data is < 0, contradicting any nonnegative glued plan
    y = sol.farkas
    cert = {
        "psi": y[: nx * ny].reshape(nx, ny),
        "phi": y[nx * ny : nx * ny + ny * nz].reshape(ny, nz),
        "margin": float(y @ b),
    }
    if lam_xz is not None:
        cert["xi"] = y[nx * ny + ny * nz :].reshape(nx, nz)
    return GlueResult(False, cert=cert)


def local_constraint_feasible(
    mu: ScalarMeasure, nu: ScalarMeasure, cost, D: float
) -> FeasibilityResult:
    """Look for a coupling supported where the cost is at most D.

    Returns the cheapest such plan when one exists; otherwise a certificate
    (psi, phi) with psi(x) + phi(y) >= 0 on all admissible pairs and
    negative total integral.
    """
    if D < 0:
        raise ValueError("threshold D must be nonnegative")
    nx, ny = mu.space.size, nu.space.size
    c = _check_cost(cost, nx, ny)
    allowed = c <= D
    ax, ay = np.nonzero(allowed)
    if ax.size == 0:
        if mu.total() <= FEAS_TOL and nu.total() <= FEAS_TOL:
            return FeasibilityResult(
                True, TransportPlan(mu.space, nu.space, np.zeros((nx, ny)))
            )
        # no admissible pair at all: the pointwise condition is vacuous
        if mu.total() > FEAS_TOL:
            cert = {"psi": np.full(nx, -1.0), "phi": np.zeros(ny)}
            cert["margin"] = -mu.total()
        else:
            cert = {"psi": np.zeros(nx), "phi": np.full(ny, -1.0)}
            cert["margin"] = -nu.total()
        return FeasibilityResult(False, cert=cert)
    nvar = ax.size
    A = np.zeros((nx + ny, nvar))
    for k in range(nvar):
        A[ax[k], k] = 1.0
        A[nx + ay[k], k] = 1.0
    b = np.concatenate([mu.weights, nu.weights])
    p = LpProblem(c=c[ax, ay], A=A, b=b, kinds=["eq"] * (nx + ny))
    sol = solve(p)
    if sol.status == "optimal":
        mat = np.zeros((nx, ny))
        mat[ax, ay] = np.maximum(sol.x, 0.0)
        return FeasibilityResult(True, TransportPlan(mu.space, nu.space, mat))
    if sol.status != "infeasible":
        raise NumericalBreakdown(f"restricted-support LP returned {sol.status}")
    psi, phi = sol.farkas[:nx], sol.farkas[nx:]
    pointwise = psi[:, None] + phi[None, :]
    margin = float(psi @ mu.weights + phi @ nu.weights)
    if np.min(pointwise[allowed]) < -CERT_TOL or not margin < -CERT_TOL:
        raise NumericalBreakdown("support certificate failed validation")
    return FeasibilityResult(
        False, cert={"psi": psi, "phi": phi, "margin": margin}
    )


def strassen_feasible(
    mu: ScalarMeasure, nu: ScalarMeasure, constraints: Sequence
) -> FeasibilityResult:
    """Find a coupling inside a polytope of plans given by linear constraints.

    constraints is a sequence of (G, kind, rhs) triples, each meaning
    sum(G * plan) kind rhs with kind in {"le", "ge", "eq"}.  On failure the
    certificate (psi, phi) satisfies
    psi.mu + phi.nu > sup over admissible gamma of sum((psi + phi) * gamma),
    the separating inequality; the supremum bound is re-derived from the
    constraint multipliers and checked.
    """
    nx, ny = mu.space.size, nu.space.size
    nvar = nx * ny
    A_rows = [_marginal_matrix(nx, ny)]
    b = list(mu.weights) + list(nu.weights)
    kinds = ["eq"] * (nx + ny)
    for G, kind, rhs in constraints:
        G = np.asarray(G, dtype=float)
        if G.shape != (nx, ny):
            raise ValueError("constraint matrix shape does not match the plan")
        if kind not in ("le", "ge", "eq"):
            raise ValueError(f"unknown constraint kind {kind!r}")
        A_rows.append(G.ravel()[None, :])
        b.append(float(rhs))
        kinds.append(kind)
    A = np.vstack(A_rows)
    p = LpProblem(c=np.zeros(nvar), A=A, b=np.array(b), kinds=kinds)
    sol = solve(p)
    if sol.status == "optimal":
        return FeasibilityResult(
            True,
            TransportPlan(mu.space, nu.space, np.maximum(sol.x, 0.0).reshape(nx, ny)),
        )
    if sol.status != "infeasible":
        raise NumericalBreakdown(f"constrained coupling LP returned {sol.status}")
    if farkas_margin(p, sol.farkas) >= -CERT_TOL:
        raise NumericalBreakdown("separating certificate failed validation")
    psi, phi = -sol.farkas[:nx], -sol.farkas[nx : nx + ny]
    mult = sol.farkas[nx + ny :]
    lhs = float(psi @ mu.weights + phi @ nu.weights)
    bound = float(mult @ np.array(b[nx + ny :])) if mult.size else 0.0
    cert = {
        "psi": psi,
        "phi": phi,
        "multipliers": mult,
        "lhs": lhs,
        "sup_bound": bound,
    }
    if not lhs > bound + CERT_TOL:
        raise NumericalBreakdown("separating inequality failed validation")
    return FeasibilityResult(False, cert=cert)
