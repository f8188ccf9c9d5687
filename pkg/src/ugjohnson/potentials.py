"""Shift partitions and their potentials, local distributions, information
utilities, dense-subcube indicators, and the edge-covering decomposition.

Exact (integral-pair) variants are used wherever the object of study is a
concrete pair of assignments; pseudoexpectation variants evaluate the same
quantities as moments, falling back to flagged within-budget surrogates when
the degree cannot fit the full step-polynomial compositions.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from math import comb, log, sqrt
from typing import Callable, Optional, Sequence

import numpy as np

from . import monomials as mon
from .johnson import JohnsonGraph, Subcube
from .monomials import ONE, Poly, mul, poly_add, poly_mul, poly_scale, var
from .sos import (DegreeExhausted, DistributionPE, ProductPE, PseudoExpectation,
                  ShiftSymmetrizedPE, clamp_distribution, vertex_val_poly, z_poly)
from .steppoly import StepPoly, linear_surrogate
from .ug_core import UGInstance, satisfied_mask

NEAR_ZERO_PSI = 1e-9


# ---------------------------------------------------------------------------
# information-theoretic utilities (dense arrays over finite alphabets)


def entropy_nats(p: np.ndarray) -> float:
    p = np.asarray(p, dtype=float).ravel()
    nz = p > 0
    return float(-np.sum(p[nz] * np.log(p[nz])))


def mutual_information(joint: np.ndarray, axes_a: Sequence[int],
                       axes_b: Sequence[int], bits: bool = True) -> float:
    """I(A;B) for a joint array; axes_a/axes_b partition the array axes."""
    joint = np.asarray(joint, dtype=float)
    pa = joint.sum(axis=tuple(axes_b))
    pb = joint.sum(axis=tuple(axes_a))
    h = entropy_nats(pa) + entropy_nats(pb) - entropy_nats(joint)
    return h / log(2.0) if bits else h


def tv_distance(d1: np.ndarray, d2: np.ndarray) -> float:
    return 0.5 * float(np.abs(np.asarray(d1) - np.asarray(d2)).sum())


def pinsker_check(joint: np.ndarray, axes_a: Sequence[int], axes_b: Sequence[int]
                  ) -> dict:
    """TV(joint, product of marginals) <= sqrt(I_nats / 2); returns the residual."""
    joint = np.asarray(joint, dtype=float)
    pa = joint.sum(axis=tuple(axes_b))
    pb = joint.sum(axis=tuple(axes_a))
    prod = np.multiply.outer(pa, pb).reshape(joint.shape)
    lhs = tv_distance(joint, prod)
    mi_nats = mutual_information(joint, axes_a, axes_b, bits=False)
    rhs = sqrt(max(mi_nats, 0.0) / 2.0)
    return {"tv": lhs, "mi_nats": mi_nats, "bound": rhs, "residual": rhs - lhs}


def data_processing_check(joint2d: np.ndarray, g: np.ndarray, h: np.ndarray) -> dict:
    """I(g(A); h(B)) <= I(A;B) for deterministic maps given as label arrays."""
    joint2d = np.asarray(joint2d, dtype=float)
    ga, hb = np.asarray(g), np.asarray(h)
    out = np.zeros((ga.max() + 1, hb.max() + 1))
    for a in range(joint2d.shape[0]):
        for b in range(joint2d.shape[1]):
            out[ga[a], hb[b]] += joint2d[a, b]
    lhs = mutual_information(out, (0,), (1,))
    rhs = mutual_information(joint2d, (0,), (1,))
    return {"processed": lhs, "original": rhs, "residual": rhs - lhs}


# ---------------------------------------------------------------------------
# integral-pair shift partition machinery


def vertex_values(inst: UGInstance, x: np.ndarray,
                  within: Optional[set] = None) -> np.ndarray:
    """val_u(x) for every vertex; `within` restricts to edges inside a vertex set."""
    n = inst.vertex_count
    sat = satisfied_mask(inst, x)
    num = np.zeros(n)
    den = np.zeros(n)
    for k, (u, v, _) in enumerate(inst.edges):
        if within is not None and not (u in within and v in within):
            continue
        w = float(inst.weights[k])
        num[u] += w * sat[k]
        num[v] += w * sat[k]
        den[u] += w
        den[v] += w
    with np.errstate(invalid="ignore", divide="ignore"):
        out = np.where(den > 0, num / den, 0.0)
    return out


def vertex_values_and(inst: UGInstance, x: np.ndarray, xp: np.ndarray,
                      within: Optional[set] = None) -> np.ndarray:
    n = inst.vertex_count
    sat = satisfied_mask(inst, x) & satisfied_mask(inst, xp)
    num = np.zeros(n)
    den = np.zeros(n)
    for k, (u, v, _) in enumerate(inst.edges):
        if within is not None and not (u in within and v in within):
            continue
        w = float(inst.weights[k])
        num[u] += w * sat[k]
        num[v] += w * sat[k]
        den[u] += w
        den[v] += w
    with np.errstate(invalid="ignore", divide="ignore"):
        out = np.where(den > 0, num / den, 0.0)
    return out


def g_parts(inst: UGInstance, x: np.ndarray, xp: np.ndarray) -> np.ndarray:
    """Indicator parts G_s(u) = 1(x(u) - x'(u) = s); shape (q, n)."""
    d = (np.asarray(x) - np.asarray(xp)) % inst.q
    out = np.zeros((inst.q, inst.vertex_count))
    out[d, np.arange(inst.vertex_count)] = 1.0
    return out


def f_parts(inst: UGInstance, x: np.ndarray, xp: np.ndarray, p: Callable,
            within: Optional[set] = None, val_within: Optional[set] = None
            ) -> np.ndarray:
    """F_s(u) = G_s(u) p(val_u(x)) p(val_u(x')); vals over `val_within` edges."""
    G = g_parts(inst, x, xp)
    vx = vertex_values(inst, x, within=val_within)
    vxp = vertex_values(inst, xp, within=val_within)
    return G * (p(vx) * p(vxp))[None, :]


def phi_integral(inst: UGInstance, x: np.ndarray, xp: np.ndarray, p: Callable,
                 scope: Optional[Sequence[int]] = None,
                 val_within: Optional[set] = None) -> float:
    """Shift-partition size sum_s (E_{u in scope} F_s(u))^2 for one pair."""
    F = f_parts(inst, x, xp, p, val_within=val_within)
    cols = np.asarray(sorted(scope)) if scope is not None else np.arange(inst.vertex_count)
    means = F[:, cols].mean(axis=1)
    return float(np.sum(means ** 2))


def potential_restriction_check(inst: UGInstance, x: np.ndarray, xp: np.ndarray,
                           sub: Subcube, base: StepPoly, shift: float) -> dict:
    """Phi^C_{beta-shift,nu}(x,x') >= Phi_{beta,nu}(x,x')|_C - 4 nu.

    Left side: vertex values inside the subcube, threshold lowered by `shift`
    (degenerate constant step if the threshold leaves (0,1)); right side: the
    global potential restricted to the subcube.
    """
    ids = set(sub.vertex_ids())
    p_in = base.shifted(shift)
    lhs = phi_integral(inst, x, xp, p_in, scope=ids, val_within=ids)
    rhs = phi_integral(inst, x, xp, base, scope=ids, val_within=None)
    return {"phi_subcube": lhs, "phi_global_restricted": rhs,
            "slack": lhs - (rhs - 4 * base.nu),
            "ok": lhs >= rhs - 4 * base.nu - 1e-9,
            "degenerate_step": getattr(p_in, "degenerate", False)}


# ---------------------------------------------------------------------------
# dense subcubes and edge covering (indicator variants, exact on pairs)


def default_eps_schedule(r: int, c: float = 1.0) -> list[float]:
    """eps_r = min(exp(-r), c^2 exp(-r)), eps_{i-1} = eps_i^5 / 2^{6r}."""
    eps = [0.0] * (r + 1)
    eps[r] = min(np.exp(-r), c * c * np.exp(-r))
    for i in range(r, 0, -1):
        eps[i - 1] = eps[i] ** 5 / 2 ** (6 * r)
    return eps


def subcube_density(g: JohnsonGraph, members: np.ndarray, a: tuple) -> float:
    """Fraction of the subcube J|_a lying in the 0/1 vertex vector `members`."""
    ids = Subcube(g, a).vertex_ids()
    return float(np.mean(members[ids]))


def dense_subcube_indicators(g: JohnsonGraph, inst: UGInstance, x: np.ndarray,
                             xp: np.ndarray, eps: Sequence[float]) -> dict:
    """Exact indicators T_{s,a} (dense at level |a|, not dense in any proper
    sub-restriction) and the count bound E_a[T_{s,a}] <= 4 delta(G_s)/(eps_i^2 l^i).

    The count bound is the Cayley-domain statement; the realized excess on the
    Johnson graph is reported as the bridge error instead of being assumed away.
    """
    r = len(eps) - 1
    for i in range(1, r + 1):
        if eps[i - 1] > eps[i] / (2 ** (i + 1) * i) + 1e-15:
            raise ValueError("schedule must satisfy eps_{i-1} <= eps_i / (2^{i+1} i)")
    G = g_parts(inst, x, xp)
    q = inst.q
    fired: dict[tuple, list[tuple]] = {}
    rows = []
    dens_cache: dict[tuple, np.ndarray] = {}

    def dens(a: tuple) -> np.ndarray:
        if a not in dens_cache:
            ids = Subcube(g, a).vertex_ids()
            dens_cache[a] = G[:, ids].mean(axis=1)
        return dens_cache[a]

    for i in range(1, r + 1):
        total = np.zeros(q)
        count_a = 0
        for a in itertools.combinations(range(g.n), i):
            count_a += 1
            da = dens(a)
            for s in range(q):
                if da[s] < eps[i]:
                    continue
                maximal = dens(())[s] < eps[0]
                if maximal:
                    for j in range(1, i):
                        for b in itertools.combinations(a, j):
                            if dens(b)[s] >= eps[j]:
                                maximal = False
                                break
                        if not maximal:
                            break
                if maximal:
                    total[s] += 1.0
                    fired.setdefault((s, i), []).append(a)
        for s in range(q):
            lhs = total[s] / count_a
            rhs = 4.0 * float(G[s].mean()) / (eps[i] ** 2 * g.ell ** i)
            rows.append({"s": s, "i": i, "count_mean": lhs, "bound": rhs,
                         "slack": rhs - lhs, "bridge_excess": max(0.0, lhs - rhs)})
    return {"rows": rows, "fired": fired,
            "max_bridge_excess": max((r["bridge_excess"] for r in rows), default=0.0)}


def edge_cover_decompose(g: JohnsonGraph, inst: UGInstance, x: np.ndarray,
                         xp: np.ndarray, r: int,
                         eps: Optional[Sequence[float]] = None) -> dict:
    """Indicator-variant edge covering:  val_I(x ^ x') <= T_0 + ... + T_r + err.

    T_0 = sum_s 1[delta(G_s) >= eps_0] E_u[G_s(u) val_u(x^x')],
    T_i = l^i E_{a in C([n],i)}[ sum_s T_{s,a} E_{u in J|_a}[G_s(u) val^a_u(x^x')] ],
    err = 4 (1-alpha)^{r+1} + 2^{6r} max_i eps_{i-1}/eps_i^4.
    Any negative slack is reported as the Johnson<->Cayley bridging excess.
    """
    if eps is None:
        eps = default_eps_schedule(r)
    for i in range(1, r + 1):
        if eps[i - 1] > eps[i] ** 5 / 2 ** (6 * r) + 1e-18:
            raise ValueError("schedule must satisfy eps_{i-1} <= eps_i^5 / 2^{6r}")
    if eps[r] > np.exp(-r):
        raise ValueError("schedule must satisfy eps_r <= exp(-r)")
    q = inst.q
    G = g_parts(inst, x, xp)
    lhs = float(np.dot((satisfied_mask(inst, x) & satisfied_mask(inst, xp)).astype(float),
                       inst.weight_array()))
    vand = vertex_values_and(inst, x, xp)
    terms = [0.0] * (r + 1)
    for s in range(q):
        if G[s].mean() >= eps[0]:
            terms[0] += float(np.mean(G[s] * vand))
    ind = dense_subcube_indicators(g, inst, x, xp, list(eps))
    for (s, i), alist in ind["fired"].items():
        tot = 0.0
        for a in alist:
            ids = Subcube(g, a).vertex_ids()
            ids_set = set(ids)
            va = vertex_values_and(inst, x, xp, within=ids_set)
            tot += float(np.mean(G[s, ids] * va[ids]))
        terms[i] += g.ell ** i * tot / comb(g.n, i)
    err = 4 * (1 - g.alpha) ** (r + 1)
    if r >= 1:
        err += 2 ** (6 * r) * max(eps[i - 1] / eps[i] ** 4 for i in range(1, r + 1))
    rhs = sum(terms) + err
    return {"lhs": lhs, "terms": terms, "err": err, "rhs": rhs,
            "slack": rhs - lhs, "bridge_excess": max(0.0, lhs - rhs),
            "eps": list(eps), "count_report": ind["rows"]}


# ---------------------------------------------------------------------------
# pseudoexpectation-side potentials


@dataclass
class ShiftPartitionSpec:
    """Parameters of the shift partition F_s / G_s used in potentials.

    mode 'plain' uses G_s (no value weighting); 'surrogate' multiplies in the
    degree-1 stand-in for the step polynomial on vertex values; 'steppoly'
    uses the full polynomial (available on the exact support path only).
    """
    inst: UGInstance
    beta: float
    nu: float
    mode: str = "plain"
    step: Optional[StepPoly] = None
    scope: Optional[tuple[int, ...]] = None          # vertices averaged over
    val_within: Optional[frozenset] = None           # edge scope for vertex values

    def scope_vertices(self) -> list[int]:
        return list(self.scope) if self.scope is not None else list(
            range(self.inst.vertex_count))

    def p_callable(self) -> Callable:
        if self.mode == "steppoly":
            if self.step is None:
                raise ValueError("steppoly mode requires a StepPoly")
            return self.step
        if self.mode == "plain":
            return lambda v: np.ones_like(np.asarray(v, dtype=float))
        f = linear_surrogate(self.beta, self.nu)
        return lambda v: np.clip(f(v), 0.0, 1.0)


def support_pairs(prod: ProductPE) -> Optional[list[tuple[float, np.ndarray, np.ndarray]]]:
    """Explicit (weight, x, x') support of a product of distribution-backed
    pseudoexpectations (through shift-symmetrization wrappers), or None."""

    def expand(pe) -> Optional[list[tuple[float, np.ndarray]]]:
        if isinstance(pe, DistributionPE):
            return [(p, x) for p, x in pe.support]
        if isinstance(pe, ShiftSymmetrizedPE):
            inner = expand(pe.base)
            if inner is None:
                return None
            q = pe.q
            return [(p / q, (x + s) % q) for p, x in inner for s in range(q)]
        return None

    s1 = expand(prod.pe1)
    s2 = expand(prod.pe2)
    if s1 is None or s2 is None:
        return None
    out = []
    for p1, x1 in s1:
        for p2, x2 in s2:
            w = p1 * p2
            if prod.events:
                for e in prod.events:
                    w *= mon.evaluate(e.poly, x1, x2)
            if w < -1e-9:
                raise ValueError("conditioning event is negative on the support")
            if w > 0.0:
                out.append((w, x1, x2))
    tot = sum(w for w, _, _ in out)
    if tot <= 0:
        return None
    return [(w / tot, x1, x2) for w, x1, x2 in out]


def shift_fn_eval(spec: ShiftPartitionSpec, prod: ProductPE, u: int, s: int) -> float:
    """pE-moment of F_s(u) (or G_s(u) in plain mode)."""
    pairs = support_pairs(prod)
    if pairs is not None:
        p = spec.p_callable()
        acc = 0.0
        for w, x, xp in pairs:
            F = f_parts(spec.inst, x, xp, p, val_within=spec.val_within)
            acc += w * F[s, u]
        return acc
    q = prod.q
    zp = z_poly(u, s, q)
    if spec.mode == "plain":
        return prod.pE(zp)
    if spec.mode == "surrogate":
        within = set(spec.val_within) if spec.val_within is not None else None
        pu0 = _surrogate_val_poly(spec, u, copy=0, within=within)
        pu1 = _surrogate_val_poly(spec, u, copy=1, within=within)
        return prod.pE(poly_mul(poly_mul(zp, pu0), pu1))
    raise DegreeExhausted("full step-polynomial moments need the exact support path")


def _surrogate_val_poly(spec: ShiftPartitionSpec, u: int, copy: int,
                        within: Optional[set]) -> Poly:
    vp = vertex_val_poly(spec.inst, u, copy=copy, within=within)
    scale = 1.0 / (2.0 * spec.nu)
    out = poly_scale(vp, scale)
    return poly_add(out, {ONE: (spec.nu - spec.beta) * scale})


def phi_potential(spec: ShiftPartitionSpec, prod: ProductPE) -> dict:
    """Phi = pE[ sum_s (E_u F_s(u))^2 ] over the configured scope.

    Returns the value together with the representation actually used
    ('support' exact, or 'plain' G_s moments at limited degree).
    """
    verts = spec.scope_vertices()
    pairs = support_pairs(prod)
    if pairs is not None:
        p = spec.p_callable()
        acc = 0.0
        for w, x, xp in pairs:
            acc += w * phi_integral(spec.inst, x, xp, p, scope=verts,
                                    val_within=spec.val_within)
        return {"phi": acc, "representation": "support", "mode": spec.mode}
    if spec.mode != "plain":
        raise DegreeExhausted(
            "squared step-weighted parts exceed the degree budget; use plain mode")
    q = prod.q
    acc = 0.0
    nv = len(verts)
    for s in range(q):
        for u in verts:
            for v in verts:
                acc += prod.pE(poly_mul(z_poly(u, s, q), z_poly(v, s, q))) / (nv * nv)
    return {"phi": acc, "representation": "moments", "mode": "plain"}


def phi_global_restricted(spec: ShiftPartitionSpec, prod: ProductPE,
                          sub: Subcube) -> dict:
    """Same as phi_potential but averaging u over the subcube while vertex
    values are taken in the full graph."""
    restricted = ShiftPartitionSpec(spec.inst, spec.beta, spec.nu, spec.mode,
                                    spec.step, scope=tuple(sub.vertex_ids()),
                                    val_within=None)
    return phi_potential(restricted, prod)


def shift_indicator_poly(v: int, u: int, s: int, q: int, copy: int = 0) -> Poly:
    """1(X_v - X_u = s) as a degree-2 polynomial in one copy."""
    out: Poly = {}
    for a in range(q):
        m = mul(var(v, a, copy), var(u, (a - s) % q, copy))
        out[m] = out.get(m, 0.0) + 1.0
    return out


def psi_potential(pe: PseudoExpectation, inst: UGInstance,
                  scope: Optional[Sequence[int]] = None) -> float:
    """Alternate shift potential
    Psi = E_{u,v}[ sum_s pPr[X_v - X_u = s]^2 pE[val_v | X_v - X_u = s] ],
    with near-zero conditioning events contributing 0.
    """
    if pe.degree < 4:
        raise DegreeExhausted("Psi needs degree >= 4")
    n, q = pe.n_vertices, pe.q
    verts = list(scope) if scope is not None else list(range(n))
    within = set(verts) if scope is not None else None
    acc = 0.0
    val_polys = {v: vertex_val_poly(inst, v, copy=0, within=within) for v in verts}
    for v in verts:
        vp = val_polys[v]
        for u in verts:
            if u == v:
                acc += pe.pE(vp)
                continue
            for s in range(q):
                ind = shift_indicator_poly(v, u, s, q)
                pr = pe.pE(ind)
                if pr < NEAR_ZERO_PSI:
                    continue
                cond_val = pe.pE(poly_mul(vp, ind)) / pr
                acc += pr * pr * cond_val
    return acc / (len(verts) ** 2)


# ---------------------------------------------------------------------------
# local distributions


Slot = tuple[str, int]  # ("X"|"Xp"|"p"|"pp", vertex)


@dataclass
class LocalDistributionCollection:
    """Joint distributions over requested (X, p) tuples from a product
    pseudoexpectation and a step polynomial (or its surrogate)."""
    prod: ProductPE
    spec: ShiftPartitionSpec
    arity: int
    joints: dict = field(default_factory=dict)
    flags: dict = field(default_factory=dict)
    clamp_policy: float = 1e-8

    def slot_size(self, slot: Slot) -> int:
        return self.prod.q if slot[0] in ("X", "Xp") else 2

    def joint(self, slots: tuple[Slot, ...]) -> np.ndarray:
        key = tuple(slots)
        if key in self.joints:
            return self.joints[key]
        arr, flag = _build_joint(self.prod, self.spec, slots, self.clamp_policy)
        self.joints[key] = arr
        self.flags[key] = flag
        return arr


def _slot_factor_poly(spec: ShiftPartitionSpec, slot: Slot, value: int) -> Poly:
    kind, u = slot
    copy = 0 if kind in ("X", "p") else 1
    if kind in ("X", "Xp"):
        return {var(u, value, copy): 1.0}
    within = set(spec.val_within) if spec.val_within is not None else None
    base = _surrogate_val_poly(spec, u, copy=copy, within=within)
    if value == 1:
        return base
    return poly_add({ONE: 1.0}, poly_scale(base, -1.0))


def _build_joint(prod: ProductPE, spec: ShiftPartitionSpec, slots: tuple[Slot, ...],
                 clamp_policy: float) -> tuple[np.ndarray, str]:
    q = prod.q
    sizes = tuple(q if k in ("X", "Xp") else 2 for k, _ in slots)
    pairs = support_pairs(prod)
    if pairs is not None:
        p = spec.p_callable()
        within = set(spec.val_within) if spec.val_within is not None else None
        arr = np.zeros(sizes)
        for w, x, xp in pairs:
            vx = vertex_values(spec.inst, x, within=within)
            vxp = vertex_values(spec.inst, xp, within=within)
            arr_idx: list = []
            bern: list[float] = []  # success probabilities of the p-slots in order
            for (kind, u) in slots:
                if kind == "X":
                    arr_idx.append(int(x[u]))
                elif kind == "Xp":
                    arr_idx.append(int(xp[u]))
                else:
                    pv = float(p(vx[u] if kind == "p" else vxp[u]))
                    bern.append(min(max(pv, 0.0), 1.0))
                    arr_idx.append(slice(None))
            sub = np.ones(tuple([2] * len(bern)))
            for kpos, pv in enumerate(bern):
                shape = [1] * len(bern)
                shape[kpos] = 2
                sub = sub * np.asarray([1.0 - pv, pv]).reshape(shape)
            arr[tuple(arr_idx)] += w * sub
        return arr, "support"

    # moment path: X-slots exact when the degrees fit; p-slots are Bernoulli
    # factors with the clipped conditional mean of the surrogate given the
    # X-cell (the clip belongs to the surrogate's pointwise semantics, so it
    # cannot be pushed through the expectation; flagged as a truncation)
    x_slots = tuple(s for s in slots if s[0] in ("X", "Xp"))
    p_slots = tuple(s for s in slots if s[0] in ("p", "pp"))
    need0 = sum(1 for k, _ in x_slots if k == "X") + \
        (2 if any(k == "p" for k, _ in p_slots) else 0)
    need1 = sum(1 for k, _ in x_slots if k == "Xp") + \
        (2 if any(k == "pp" for k, _ in p_slots) else 0)
    if need0 <= prod.side_degree(0) and need1 <= prod.side_degree(1):
        arr = np.zeros(sizes)
        x_axes = [i for i, s in enumerate(slots) if s[0] in ("X", "Xp")]
        p_axes = [i for i, s in enumerate(slots) if s[0] in ("p", "pp")]
        for x_cell in itertools.product(*[range(prod.q) for _ in x_slots]):
            m: Poly = {ONE: 1.0}
            for slot, value in zip(x_slots, x_cell):
                m = poly_mul(m, _slot_factor_poly(spec, slot, value))
            base = prod.pE(m)
            bern = []
            for slot in p_slots:
                if base <= 1e-12:
                    bern.append(0.0)
                    continue
                pv = prod.pE(poly_mul(m, _slot_factor_poly(spec, slot, 1))) / base
                bern.append(min(max(pv, 0.0), 1.0))
            idx: list = [slice(None)] * len(slots)
            for ax, v in zip(x_axes, x_cell):
                idx[ax] = v
            if p_slots:
                # sub's axes follow p_axes, which is already the slot order
                sub = np.ones(tuple([2] * len(p_slots)))
                for kpos, pv in enumerate(bern):
                    shape = [1] * len(p_slots)
                    shape[kpos] = 2
                    sub = sub * np.asarray([1.0 - pv, pv]).reshape(shape)
                arr[tuple(idx)] = base * sub
            else:
                arr[tuple(idx)] = base
        flag = "moments" if not p_slots else "moments_surrogate"
    else:
        # factorized fallback: split by copy when possible, else halve the
        # group; flagged so callers can report the truncation
        slots0 = tuple(s for s in slots if s[0] in ("X", "p"))
        slots1 = tuple(s for s in slots if s[0] in ("Xp", "pp"))
        if not slots0 or not slots1:
            k = len(slots) // 2
            if k == 0:
                raise DegreeExhausted("a single slot exceeds the degree budget")
            slots0, slots1 = slots[:k], slots[k:]
        a0, _ = _build_joint(prod, spec, slots0, clamp_policy)
        a1, _ = _build_joint(prod, spec, slots1, clamp_policy)
        arr = np.multiply.outer(a0, a1)
        order = list(slots0) + list(slots1)
        perm = [order.index(s) for s in slots]
        arr = np.transpose(arr, perm)
        flag = "factorized"
    flat = clamp_distribution(arr.ravel(), policy=max(
        clamp_policy, 1e-6 if flag != "moments" else clamp_policy))
    return flat.reshape(sizes), flag


def extract_local(prod: ProductPE, spec: ShiftPartitionSpec,
                  tuples: Sequence[tuple[Slot, ...]],
                  arity: int = 8) -> LocalDistributionCollection:
    coll = LocalDistributionCollection(prod, spec, arity)
    for slots in tuples:
        if len(slots) > arity:
            raise ValueError("tuple exceeds the arity bound")
        coll.joint(tuple(slots))
    return coll


def y_slots(u: int, v: int, primed: bool, with_p: bool) -> tuple[Slot, ...]:
    """Slots of Y_{u,v} = (X_u, X_v, p_u, p_v) (or the primed copy)."""
    xs = "Xp" if primed else "X"
    ps = "pp" if primed else "p"
    s: list[Slot] = [(xs, u), (xs, v)]
    if with_p:
        s += [(ps, u), (ps, v)]
    return tuple(s)


def summary_report(spec: ShiftPartitionSpec, prod: ProductPE, sub: Subcube,
                   mi_stats: "MIStats", edge_cover: Optional[dict] = None) -> dict:
    """Potential/MI JSON record:
    {phi, phi_restricted: {a, value}, psi, mi: {avg, max}, edge_cover: {...}}."""
    phi = phi_potential(spec, prod)["phi"]
    phi_res = phi_global_restricted(spec, prod, sub)["phi"]
    psi = psi_potential(prod.marginal_pe(0), spec.inst)
    out = {
        "phi": phi,
        "phi_restricted": {"a": list(sub.a), "value": phi_res},
        "psi": psi,
        "mi": {"avg": mi_stats.average, "max": mi_stats.maximum},
    }
    if edge_cover is not None:
        out["edge_cover"] = {"terms": edge_cover["terms"], "err": edge_cover["err"],
                             "slack": edge_cover["slack"]}
    return out


@dataclass
class MIStats:
    pairs: list
    values: list
    average: float
    maximum: float


def pairwise_mi(coll: LocalDistributionCollection, S: Sequence[int],
                primed: bool = False, with_p: bool = False,
                max_pairs: int = 40, seed: int = 0) -> MIStats:
    """Average and max of I(Y_{u1,v1}; Y_{u2,v2}) over sampled disjoint pairs.

    Pairs sharing a vertex are excluded: their mutual information is H of the
    shared coordinate no matter how uncorrelated the distribution is, and the
    correlation machinery accounts for them separately through its 1/|S| term.
    """
    rng = np.random.default_rng(seed)
    S = list(S)
    pairs = [(u, v) for u, v in itertools.combinations(S, 2)]
    combos = [(p1, p2) for p1, p2 in itertools.combinations(range(len(pairs)), 2)
              if not set(pairs[p1]) & set(pairs[p2])]
    if len(combos) > max_pairs:
        take = rng.choice(len(combos), size=max_pairs, replace=False)
        combos = [combos[int(t)] for t in take]
    vals, used = [], []
    for (k1, k2) in combos:
        (u1, v1), (u2, v2) = pairs[k1], pairs[k2]
        slots = y_slots(u1, v1, primed, with_p) + y_slots(u2, v2, primed, with_p)
        arr = coll.joint(slots)
        half = len(slots) // 2
        val = mutual_information(arr, tuple(range(half)),
                                 tuple(range(half, len(slots))))
        vals.append(max(val, 0.0))
        used.append(((u1, v1), (u2, v2)))
    avg = float(np.mean(vals)) if vals else 0.0
    mx = float(np.max(vals)) if vals else 0.0
    return MIStats(used, vals, avg, mx)
