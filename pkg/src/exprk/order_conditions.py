"""Numerical verification of the sixteen stiff order conditions.

The conditions are operator identities in an arbitrary square matrix Z
(standing for hA) together with arbitrary interleaved matrices J, K, L and a
bilinear map B; a method satisfying the conditions of order p attains order p
with error constants independent of the stiffness of A.  Conditions 1-7 cover
orders 2-4.  The order-5 conditions (8-16) come in two modes: "strong" as
displayed, and "weakened" with condition 8 imposed only at Z = 0 and the
outer weights b_i(Z) of conditions 9-16 replaced by the scalars b_i(0) --
still sufficient for fifth order on parabolic problems.

Checking an identity over *all* matrices is impossible numerically; the
checker evaluates residuals on a batch of seeded random probes plus
structured diagonal/permutation probes chosen to separate the terms.  A
residual above tolerance on any probe disproves the identity; passing on all
probes is the (probabilistic) verdict that it holds.
"""

from dataclasses import dataclass
from fractions import Fraction
from itertools import product
from math import factorial

import numpy as np

from .operators import DenseOperator
from .phi import build_phi_cache
from .tableau import eval_combo, phi_term

__all__ = [
    "ProbeSet", "ConditionReport", "ConditionRow", "condition_residual",
    "check", "structured_probes", "draw_probe_sets", "CONDITION_ORDERS",
    "classical_order_conditions",
]

# condition id -> the order it belongs to
CONDITION_ORDERS = {1: 2, 2: 3, 3: 3, 4: 4, 5: 4, 6: 4, 7: 4,
                    8: 5, 9: 5, 10: 5, 11: 5, 12: 5, 13: 5, 14: 5, 15: 5, 16: 5}


@dataclass(frozen=True)
class ProbeSet:
    """One bundle of probe matrices: Z plays hA; J, K, L interleave; B is
    bilinear, stored as a rank-3 tensor acting by B(u, v)_r = sum T_rpq u_p v_q."""

    d: int
    Z: np.ndarray
    J: np.ndarray
    K: np.ndarray
    L: np.ndarray
    B: np.ndarray
    seed: int = -1
    label: str = ""

    def __post_init__(self):
        for name in ("Z", "J", "K", "L"):
            m = np.asarray(getattr(self, name), dtype=float)
            if m.shape != (self.d, self.d) or not np.all(np.isfinite(m)):
                raise ValueError(f"probe {name} must be finite {self.d}x{self.d}")
            object.__setattr__(self, name, m)
        b = np.asarray(self.B, dtype=float)
        if b.shape != (self.d, self.d, self.d) or not np.all(np.isfinite(b)):
            raise ValueError("probe B must be a finite rank-3 tensor")
        object.__setattr__(self, "B", b)


def draw_probe_sets(count, d=3, seed=0):
    """Seeded batch of random probes, entries i.i.d. uniform on [-1, 1]."""
    rng = np.random.default_rng(seed)
    out = []
    for k in range(count):
        mats = [rng.uniform(-1.0, 1.0, size=(d, d)) for _ in range(4)]
        tensor = rng.uniform(-1.0, 1.0, size=(d, d, d))
        out.append(ProbeSet(d, *mats, tensor, seed=seed + k, label=f"random-{k}"))
    return out


def structured_probes():
    """(Z, J) pairs with diagonal Z and permutation J that separate terms.

    The 2x2 family uses Z = diag(lambda, mu) with the swap J over a grid of
    (lambda, mu); the 3x3 family uses Z = diag(lambda, mu, nu) with the cyclic
    permutation J (J^3 = I) over a coarse grid.
    """
    swap = np.array([[0.0, 1.0], [1.0, 0.0]])
    cyc = np.array([[0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [1.0, 0.0, 0.0]])
    # the canonical separating pair leads; the rest of the grid follows
    pairs = [(np.diag([-1.0, 1.0]), swap)]
    grid2 = (-1.0, 1.0, 0.0, -10.0)
    for lam, mu in product(grid2, repeat=2):
        if (lam, mu) != (-1.0, 1.0):
            pairs.append((np.diag([lam, mu]), swap))
    grid3 = (-1.0, 1.0, -10.0)
    for lam, mu, nu in product(grid3, repeat=3):
        pairs.append((np.diag([lam, mu, nu]), cyc))
    return pairs


def _structured_probe_sets():
    out = []
    for k, (z, j) in enumerate(structured_probes()):
        d = z.shape[0]
        tensor = np.zeros((d, d, d))
        for r in range(d):
            tensor[r, r, r] = 1.0
        out.append(ProbeSet(d, z, j, j.copy(), j.copy(), tensor,
                            label=f"structured-{k}"))
    return out


def _bilinear_columns(tensor, u_mat, v_mat):
    """Columnwise lift of the bilinear map to matrix arguments."""
    return np.einsum("rpq,pc,qc->rc", tensor, u_mat, v_mat)


class _ProbeTables:
    """Everything condition evaluation needs at one probe, assembled once.

    Coefficient matrices are built from a phi cache on Z (h = 1) exactly as
    the stepper builds them, and the psi matrices are evaluated per their
    definitions (weighted row sums minus the scaled phi term), so residuals
    reflect genuine float evaluation, not pre-cancelled rationals.
    """

    def __init__(self, t, probe):
        self.t = t
        self.p = probe
        pairs = {(j, s) for j, s in t.phi_pairs()}
        pairs |= {(j, ci) for j in (2, 3, 4) for ci in t.c[1:] if ci > 0}
        pairs |= {(m, Fraction(1)) for m in (2, 3, 4, 5)}
        cache = build_phi_cache(DenseOperator(probe.Z), 1.0, pairs)
        self.get = cache.get
        self.b_mat = {i: eval_combo(v, probe.Z, cache.get) for i, v in t.b.items()}
        self.b0 = {i: float(v.at_zero()) for i, v in t.b.items()}
        self.a_mat = {k: eval_combo(v, probe.Z, cache.get) for k, v in t.a.items()}
        self.c = [float(ci) for ci in t.c]
        self.eye = np.eye(probe.d)

    def weight_indices(self):
        return sorted(self.b_mat)

    def psi_weight_mat(self, j):
        acc = -self.get(j, Fraction(1))
        for i, bm in self.b_mat.items():
            acc = acc + (self.c[i - 1] ** (j - 1) / factorial(j - 1)) * bm
        return acc

    def psi_stage_mat(self, j, i):
        ci = self.t.node(i)
        acc = -float(ci ** j) * self.get(j, ci) if ci > 0 else np.zeros_like(self.eye)
        for k in range(2, i):
            am = self.a_mat.get((i, k))
            if am is not None:
                acc = acc + (self.c[k - 1] ** (j - 1) / factorial(j - 1)) * am
        return acc

    def psi5_at_zero(self):
        acc = -1.0 / factorial(5)
        for i, b0 in self.b0.items():
            acc += b0 * self.c[i - 1] ** 4 / factorial(4)
        return acc


def _outer_weight(tab, i, mode):
    """Outer multiplier for conditions 9-16: b_i(Z), or b_i(0) when weakened."""
    if mode == "weakened":
        return tab.b0[i] * tab.eye
    return tab.b_mat[i]


def _condition_matrix(cid, tab, mode):
    """Residual matrix (or scalar for condition 8 weakened) of one condition."""
    t, p = tab.t, tab.p
    if cid in (1, 2, 4):
        return tab.psi_weight_mat({1: 2, 2: 3, 4: 4}[cid])
    if cid == 8:
        if mode == "weakened":
            return np.array([[tab.psi5_at_zero()]])
        return tab.psi_weight_mat(5)

    acc = np.zeros_like(tab.eye)
    if cid == 3:
        for i in tab.weight_indices():
            acc = acc + tab.b_mat[i] @ p.J @ tab.psi_stage_mat(2, i)
    elif cid == 5:
        for i in tab.weight_indices():
            acc = acc + tab.b_mat[i] @ p.J @ tab.psi_stage_mat(3, i)
    elif cid == 6:
        for i in tab.weight_indices():
            inner = np.zeros_like(acc)
            for j in range(2, i):
                am = tab.a_mat.get((i, j))
                if am is not None:
                    inner = inner + am @ p.J @ tab.psi_stage_mat(2, j)
            acc = acc + tab.b_mat[i] @ p.J @ inner
    elif cid == 7:
        for i in tab.weight_indices():
            acc = acc + tab.c[i - 1] * (tab.b_mat[i] @ p.K @ tab.psi_stage_mat(2, i))
    elif cid == 9:
        for i in tab.weight_indices():
            acc = acc + _outer_weight(tab, i, mode) @ p.J @ tab.psi_stage_mat(4, i)
    elif cid == 10:
        for i in tab.weight_indices():
            inner = np.zeros_like(acc)
            for j in range(2, i):
                am = tab.a_mat.get((i, j))
                if am is not None:
                    inner = inner + am @ p.J @ tab.psi_stage_mat(3, j)
            acc = acc + _outer_weight(tab, i, mode) @ p.J @ inner
    elif cid == 11:
        for i in tab.weight_indices():
            mid = np.zeros_like(acc)
            for j in range(2, i):
                am_ij = tab.a_mat.get((i, j))
                if am_ij is None:
                    continue
                inner = np.zeros_like(acc)
                for k in range(2, j):
                    am_jk = tab.a_mat.get((j, k))
                    if am_jk is not None:
                        inner = inner + am_jk @ p.J @ tab.psi_stage_mat(2, k)
                mid = mid + am_ij @ p.J @ inner
            acc = acc + _outer_weight(tab, i, mode) @ p.J @ mid
    elif cid == 12:
        for i in tab.weight_indices():
            inner = np.zeros_like(acc)
            for j in range(2, i):
                am = tab.a_mat.get((i, j))
                if am is not None:
                    inner = inner + tab.c[j - 1] * (am @ p.K @ tab.psi_stage_mat(2, j))
            acc = acc + _outer_weight(tab, i, mode) @ p.J @ inner
    elif cid == 13:
        for i in tab.weight_indices():
            acc = acc + tab.c[i - 1] * (_outer_weight(tab, i, mode) @ p.K
                                        @ tab.psi_stage_mat(3, i))
    elif cid == 14:
        for i in tab.weight_indices():
            inner = np.zeros_like(acc)
            for j in range(2, i):
                am = tab.a_mat.get((i, j))
                if am is not None:
                    inner = inner + am @ p.J @ tab.psi_stage_mat(2, j)
            acc = acc + tab.c[i - 1] * (_outer_weight(tab, i, mode) @ p.K @ inner)
    elif cid == 15:
        for i in tab.weight_indices():
            psi = tab.psi_stage_mat(2, i)
            acc = acc + _outer_weight(tab, i, mode) @ _bilinear_columns(p.B, psi, psi)
    elif cid == 16:
        for i in tab.weight_indices():
            acc = acc + tab.c[i - 1] ** 2 * (_outer_weight(tab, i, mode) @ p.L
                                             @ tab.psi_stage_mat(2, i))
    else:
        raise ValueError(f"unknown condition id {cid}")
    return acc


def condition_residual(cid, t, p, mode="strong"):
    """Max-abs residual of one condition at one probe set."""
    if cid not in CONDITION_ORDERS:
        raise ValueError(f"unknown condition id {cid}")
    if mode not in ("strong", "weakened"):
        raise ValueError("mode must be strong or weakened")
    tab = _ProbeTables(t, p)
    return float(np.abs(_condition_matrix(cid, tab, mode)).max())


@dataclass(frozen=True)
class ConditionRow:
    id: int
    mode: str
    order: int
    residual: float
    passed: bool


@dataclass(frozen=True)
class ConditionReport:
    """Outcome of checking all 16 conditions over a probe batch."""

    rows: tuple
    tolerance: float
    n_probes: int
    highest_strong_order: int
    weakened_order5: bool

    def row(self, cid, mode):
        for r in self.rows:
            if r.id == cid and r.mode == mode:
                return r
        raise KeyError((cid, mode))

    def table_text(self):
        lines = [f"{'cond':>4} {'order':>5} {'strong residual':>16} {'':>4}"
                 f" {'weakened residual':>18} {'':>4}",
                 "-" * 56]
        for cid in sorted(CONDITION_ORDERS):
            rs = self.row(cid, "strong")
            rw = self.row(cid, "weakened")
            lines.append(
                f"{cid:>4} {rs.order:>5} {rs.residual:>16.3e}"
                f" {'pass' if rs.passed else 'FAIL':>4}"
                f" {rw.residual:>18.3e} {'pass' if rw.passed else 'FAIL':>4}")
        lines.append(f"probes: {self.n_probes}   tolerance: {self.tolerance:g}")
        lines.append(f"highest strong order: {self.highest_strong_order}")
        lines.append("weakened order-5 verdict: "
                     + ("pass" if self.weakened_order5 else "FAIL"))
        return "\n".join(lines)

    def machine_rows(self):
        out = ["id,mode,residual,pass"]
        for r in self.rows:
            out.append(f"{r.id},{r.mode},{r.residual!r},{int(r.passed)}")
        return out


def check(t, tolerance=1e-9, p=None, n_probes=50, dim=3, seed=0,
          include_structured=True):
    """Run all 16 conditions in both modes over a probe batch.

    p may be a single ProbeSet or a sequence of them; by default n_probes
    seeded random probes are drawn.  Structured diagonal/permutation probes
    are appended unless include_structured is False.  The report carries the
    highest p in {1..4} whose strong conditions all pass, and the weakened
    order-5 verdict (strong 1-7 plus weakened 8-16).
    """
    if tolerance <= 0:
        raise ValueError("tolerance must be positive")
    if p is None:
        probes = draw_probe_sets(n_probes, d=dim, seed=seed)
    elif isinstance(p, ProbeSet):
        probes = [p]
    else:
        probes = list(p)
    if include_structured:
        probes = probes + _structured_probe_sets()

    worst = {(cid, mode): 0.0 for cid in CONDITION_ORDERS
             for mode in ("strong", "weakened")}
    for probe in probes:
        tab = _ProbeTables(t, probe)
        for cid in CONDITION_ORDERS:
            for mode in ("strong", "weakened"):
                res = float(np.abs(_condition_matrix(cid, tab, mode)).max())
                key = (cid, mode)
                if res > worst[key]:
                    worst[key] = res

    rows = tuple(ConditionRow(cid, mode, CONDITION_ORDERS[cid], worst[(cid, mode)],
                              worst[(cid, mode)] <= tolerance)
                 for cid in sorted(CONDITION_ORDERS) for mode in ("strong", "weakened"))
    by = {(r.id, r.mode): r for r in rows}

    highest = 1
    for order in (2, 3, 4):
        if all(by[(cid, "strong")].passed for cid in CONDITION_ORDERS
               if CONDITION_ORDERS[cid] <= order):
            highest = order
        else:
            break
    weakened5 = (all(by[(cid, "strong")].passed for cid in range(1, 8))
                 and all(by[(cid, "weakened")].passed for cid in range(8, 17)))
    return ConditionReport(rows=rows, tolerance=tolerance, n_probes=len(probes),
                           highest_strong_order=highest, weakened_order5=weakened5)


# ---------------------------------------------------------------------------
# Classical order conditions (rooted trees through order 5) in exact
# rationals, for the A = 0 Butcher limit.

def classical_order_conditions(bt):
    """All 17 rooted-tree conditions up to order 5 for a Butcher tableau.

    Returns (order, lhs, rhs) triples with exact Fraction values; a tableau
    has classical order p iff every row with order <= p has lhs == rhs.
    """
    s = len(bt.c)
    c = bt.c
    a = bt.a
    b = bt.b
    rng = range(s)

    def asum(f):
        # (A v)_i = sum_j a_ij f(j)
        return [sum((a[i][j] * f[j] for j in rng), Fraction(0)) for i in rng]

    one = [Fraction(1)] * s
    cv = list(c)
    c2 = [x * x for x in cv]
    c3 = [x ** 3 for x in cv]
    c4 = [x ** 4 for x in cv]
    ac = asum(cv)
    ac2 = asum(c2)
    ac3 = asum(c3)
    aac = asum(ac)
    aac2 = asum(ac2)
    a_cac = asum([cv[i] * ac[i] for i in rng])
    aaac = asum(aac)

    def dot(u, v=None):
        if v is None:
            v = one
        return sum((b[i] * u[i] * v[i] for i in rng), Fraction(0))

    rows = [
        (1, dot(one), Fraction(1)),
        (2, dot(cv), Fraction(1, 2)),
        (3, dot(c2), Fraction(1, 3)),
        (3, dot(ac), Fraction(1, 6)),
        (4, dot(c3), Fraction(1, 4)),
        (4, dot(cv, ac), Fraction(1, 8)),
        (4, dot(ac2), Fraction(1, 12)),
        (4, dot(aac), Fraction(1, 24)),
        (5, dot(c4), Fraction(1, 5)),
        (5, dot(c2, ac), Fraction(1, 10)),
        (5, dot(ac, ac), Fraction(1, 20)),
        (5, dot(cv, ac2), Fraction(1, 15)),
        (5, dot(cv, aac), Fraction(1, 30)),
        (5, dot(ac3), Fraction(1, 20)),
        (5, dot(a_cac), Fraction(1, 40)),
        (5, dot(aac2), Fraction(1, 60)),
        (5, dot(aaac), Fraction(1, 120)),
    ]
    return rows


def classical_order(bt, up_to=5):
    """Largest p <= up_to with all classical conditions of order <= p exact."""
    rows = classical_order_conditions(bt)
    order = 0
    for p in range(1, up_to + 1):
        if all(lhs == rhs for (o, lhs, rhs) in rows if o <= p):
            order = p
        else:
            break
    return order
