"""Experiment drivers: nested-word growth, the elliptic-radical probe,
endomorphism truncation, invariant suites and deterministic reports."""
from __future__ import annotations

import csv
import datetime
import json
import math
import os
import random
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from . import bigword as bw
from .acyl import (
    SampleSpec,
    check_power_length,
    estimate_product_constants,
    injectivity_radius,
    verify_kn_acylindrical,
)
from .groupcore import (
    GroupElement,
    GroupSpec,
    concat_reduced,
    cyclic_reduce,
    primitive_root,
)
from .hypcheck import (
    FiniteGraphBall,
    GraphPath,
    check_axis_lower_bound,
    hausdorff_distance,
    is_quasi_geodesic,
    measure_delta,
)
from .treeact import TreeAction, classify, length_function, serre_fixed_point

DATA_DIR = Path(__file__).parent / "data"
DEFAULT_LETTER_BUDGET = 10 ** 7
REPORT_VERSION = 1


class PlanError(ValueError):
    pass


def letter_budget() -> int:
    return int(os.environ.get("HEGTREE_LETTER_BUDGET", DEFAULT_LETTER_BUDGET))


def resolve_path(name, base: Optional[Path] = None) -> Path:
    """Find a data file as given, next to ``base``, or among the shipped data
    (including its ``plans`` and ``schemes`` folders)."""
    p = Path(name)
    shipped = [DATA_DIR / p, DATA_DIR / "plans" / p, DATA_DIR / "schemes" / p]
    for cand in (p, (base / p) if base else None, *shipped):
        if cand is not None and cand.exists():
            return cand
    raise FileNotFoundError(name)


def load_group(name) -> GroupSpec:
    return GroupSpec.load(resolve_path(name))


# ---------------------------------------------------------------------------
# reports

@dataclass
class Report:
    experiment: str
    inputs: dict
    tables: dict = field(default_factory=dict)      # name -> list of row dicts
    verdicts: dict = field(default_factory=dict)    # name -> bool
    provenance: dict = field(default_factory=dict)
    meta: dict = field(default_factory=dict)        # timestamp and runtime only

    @property
    def ok(self) -> bool:
        return all(self.verdicts.values())

    def body(self) -> dict:
        return {
            "version": REPORT_VERSION,
            "experiment": self.experiment,
            "inputs": self.inputs,
            "tables": self.tables,
            "verdicts": self.verdicts,
            "ok": self.ok,
            "provenance": self.provenance,
        }

    def to_json(self) -> str:
        return json.dumps({**self.body(), "meta": self.meta}, indent=2, sort_keys=True, default=str)

    def write(self, out_dir) -> list[Path]:
        """Write ``<experiment>.json`` plus one CSV per table; each file atomically."""
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        written = [_atomic_write(out / f"{self.experiment}.json", self.to_json() + "\n")]
        for name, rows in sorted(self.tables.items()):
            if not rows:
                continue
            cols = list(rows[0])
            path = out / f"{self.experiment}_{name}.csv"
            tmp = path.with_suffix(".csv.tmp")
            with open(tmp, "w", newline="") as fh:
                w = csv.DictWriter(fh, cols)
                w.writeheader()
                w.writerows(rows)
            os.replace(tmp, path)
            written.append(path)
        return written


def _atomic_write(path: Path, text: str) -> Path:
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_text(text)
    os.replace(tmp, path)
    return path


def _stamp(report: Report, started: float) -> Report:
    report.meta = {
        "timestamp": datetime.datetime.now(datetime.timezone.utc).isoformat(),
        "runtime_s": round(time.perf_counter() - started, 3),
    }
    return report


# ---------------------------------------------------------------------------
# nesting plans

@dataclass
class NestingPlan:
    """Data for the nested words ``W_{r,i} = U_r^n W_{r+1,i}^{m_r}``.

    ``n = N * L!``, ``M_i = max(|U_i^n|, i + 1)``, ``K_i`` is the exponent in
    ``U_i^{L!} = z_i^{K_i}`` with ``z_i`` a primitive root, and
    ``m_i = 2 alpha beta n M_i K_i`` unless ``m_override`` is given.
    """

    action: TreeAction
    words: list
    L: int = 1
    N: int = 1
    alpha: int = 1
    beta: int = 1
    m_override: Optional[list] = None
    name: str = "plan"
    max_depth: int = 5
    source: dict = field(default_factory=dict)
    _cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        for key in ("L", "N", "alpha", "beta"):
            if getattr(self, key) < 1:
                raise PlanError(f"{key} must be a positive integer")
        if not self.words:
            raise PlanError("plan needs at least one U word")

    @property
    def n(self) -> int:
        return self.N * math.factorial(self.L)

    def U(self, i: int) -> GroupElement:
        return self.action.spec.parse(self.words[(i - 1) % len(self.words)])

    def check_level(self, i: int) -> GroupElement:
        u = self.U(i)
        if not classify(u, self.action).is_loxodromic:
            raise PlanError(f"U_{i} = {u} is not loxodromic")
        return u

    def K(self, i: int) -> int:
        p = self.check_level(i) ** math.factorial(self.L)
        _, k = primitive_root(p)
        return k

    def M(self, i: int) -> int:
        return max(length_function(self.check_level(i) ** self.n, self.action), i + 1)

    def m(self, i: int) -> int:
        if self.m_override is not None:
            return self.m_override[(i - 1) % len(self.m_override)]
        return 2 * self.alpha * self.beta * self.n * self.M(i) * self.K(i)

    def level_table(self, depth: int) -> list[dict]:
        return [{"i": i, "U": str(self.U(i)), "K": self.K(i), "M": self.M(i), "m": self.m(i)}
                for i in range(1, depth + 1)]

    @classmethod
    def from_json(cls, data: dict, base: Optional[Path] = None) -> "NestingPlan":
        try:
            spec = GroupSpec.load(resolve_path(data["group"], base))
            return cls(TreeAction(spec), list(data["u"]), L=int(data.get("L", 1)),
                       N=int(data.get("N", 1)), alpha=int(data.get("alpha", 1)),
                       beta=int(data.get("beta", 1)), m_override=data.get("m_override"),
                       name=data.get("name", "plan"), max_depth=int(data.get("max_depth", 5)),
                       source=data)
        except KeyError as exc:
            raise PlanError(f"plan is missing {exc}") from None

    @classmethod
    def load(cls, path) -> "NestingPlan":
        path = resolve_path(path)
        with open(path) as fh:
            return cls.from_json(json.load(fh), path.parent)


def projected_sizes(plan: NestingPlan, depth: int) -> dict:
    """Unreduced letter counts of every ``W_{r,i}``, from the recursion alone."""
    sizes = {}
    for i in range(1, depth + 1):
        s = plan.n * plan.U(i).word_length
        sizes[(i, i)] = s
        for r in range(i - 1, 0, -1):
            s = plan.n * plan.U(r).word_length + plan.m(r) * s
            sizes[(r, i)] = s
    return sizes


def build_nested_word(plan: NestingPlan, r: int, i: int) -> GroupElement:
    """``W_{r,i}``, built bottom-up in normal form."""
    if not 1 <= r <= i:
        raise PlanError(f"need 1 <= r <= i, got r={r}, i={i}")
    key = (r, i)
    if key in plan._cache:
        return plan._cache[key]
    for j in range(r, i + 1):
        plan.check_level(j)
    w = plan.U(i) ** plan.n
    plan._cache[(i, i)] = w
    for s in range(i - 1, r - 1, -1):
        w = plan.U(s) ** plan.n * w ** plan.m(s)
        plan._cache[(s, i)] = w
    return w


def run_theorem_a(plan: NestingPlan, max_depth: int) -> Report:
    """Check loxodromicity, the step inequalities and the triangular bound
    for every ``W_{r,i}``, ``i <= max_depth``."""
    started = time.perf_counter()
    rep = Report("theorem_a", {"plan": plan.name, "depth": max_depth, "n": plan.n,
                               "L": plan.L, "N": plan.N, "alpha": plan.alpha, "beta": plan.beta})
    rep.provenance = {"lengths": "exact", "K": "exact", "M": "exact",
                      "N": plan.source.get("N_provenance", "plan")}
    sizes = projected_sizes(plan, max_depth)
    total = sum(sizes.values())
    budget = letter_budget()
    rep.tables["sizing"] = [{"r": r, "i": i, "projected_letters": s} for (r, i), s in sorted(sizes.items())]
    if total > budget:
        rep.verdicts["within_letter_budget"] = False
        rep.inputs["letter_budget"] = budget
        return _stamp(rep, started)
    rep.tables["levels"] = plan.level_table(max_depth)
    rows = []
    lox_ok = step_ok = tri_ok = True
    failures = []
    letters = 0
    for i in range(1, max_depth + 1):
        build_nested_word(plan, 1, i)
        lengths = {}
        for r in range(i, 0, -1):
            w = plan._cache[(r, i)]
            letters += w.word_length
            lox = classify(w, plan.action).is_loxodromic
            lengths[r] = length_function(w, plan.action)
            step = None if r == i else lengths[r] >= lengths[r + 1] + r
            rows.append({"i": i, "r": r, "length": lengths[r], "loxodromic": lox,
                         "step_ok": step, "word_letters": w.word_length})
            if not lox:
                lox_ok = False
                failures.append(f"W_{r},{i} is elliptic")
            if step is False:
                step_ok = False
                failures.append(f"|W_{r},{i}| = {lengths[r]} < |W_{r + 1},{i}| + {r} = {lengths[r + 1] + r}")
        if lengths[1] < i * (i + 1) // 2:
            tri_ok = False
            failures.append(f"|W_1,{i}| = {lengths[1]} < {i * (i + 1) // 2}")
    rep.tables["lengths"] = rows
    rep.verdicts = {"within_letter_budget": True, "all_loxodromic": lox_ok,
                    "step_inequalities": step_ok, "triangular_bound": tri_ok}
    rep.inputs["letter_budget"] = budget
    rep.tables["summary"] = [{"total_letters": letters, "projected_letters": total}]
    if failures:
        rep.tables["failures"] = [{"failure": f} for f in failures]
    return _stamp(rep, started)


# ---------------------------------------------------------------------------
# HEG probes

@dataclass
class ProbeResult:
    status: str                  # "witness" or "inconclusive"
    n: Optional[int]
    trace: list                  # (n, classification) pairs examined

    def to_json(self) -> dict:
        return {"status": self.status, "n": self.n, "trace": [list(t) for t in self.trace]}


def probe_elliptic_radical(w: bw.BigWord, n_max: int, m: int) -> ProbeResult:
    """Least ``n <= n_max`` for which ``w`` is loxodromic on ``Gamma_n``."""
    trunc = bw.project(w, m)
    bw.split_decomposition(w, 0, m)          # raises if the support exceeds m
    trace = []
    if trunc.is_trivial():
        return ProbeResult("inconclusive", None, trace)
    for n in range(1, min(n_max, m) + 1):
        c = bw.classify_in_Gamma_n(w, n, m)
        trace.append((n, c))
        if c == bw.LOXODROMIC:
            return ProbeResult("witness", n, trace)
    return ProbeResult("inconclusive", None, trace)


def check_endomorphism_truncation(images: dict, action: TreeAction) -> Optional[int]:
    """Least ``n`` such that the images of ``a_j`` (``j > n``) and their pairwise
    products are elliptic with a common fixed vertex; ``None`` if none exists.

    The scan stops before ``n = m``, where the condition would hold vacuously.
    """
    m = max(images) if images else 0
    for n in range(m):
        X = set()
        for j in range(n + 1, m + 1):
            g = images[j]
            X.update((g, g.inverse()))
        if serre_fixed_point(sorted(X), action).ok:
            return n
    return None


# ---------------------------------------------------------------------------
# invariant suites

def _suite_groupcore(spec: GroupSpec, rng: random.Random) -> list[dict]:
    pool = spec.ball(3)
    one = spec.identity()
    rows = []
    trials = [tuple(rng.choice(pool) for _ in range(3)) for _ in range(300)]
    assoc = all((a * b) * c == a * (b * c) for a, b, c in trials)
    inv = all(a * a.inverse() == one and a.inverse() * a == one for a in pool)
    unit = all(a * one == a == one * a for a in pool)
    conj = all(c * core * c.inverse() == a for a in pool for core, c in [cyclic_reduce(a)])
    rows += [{"suite": "groupcore", "check": "associativity", "cases": len(trials), "ok": assoc},
             {"suite": "groupcore", "check": "inverses", "cases": len(pool), "ok": inv},
             {"suite": "groupcore", "check": "identity", "cases": len(pool), "ok": unit},
             {"suite": "groupcore", "check": "cyclic_reduce_conjugate", "cases": len(pool), "ok": conj}]
    return rows


def _suite_treeact(action: TreeAction, rng: random.Random) -> list[dict]:
    spec = action.spec
    pool = spec.ball(3)
    radius = 6
    ball = list(action.ball(radius))
    ok_tl = True
    for g in pool:
        disp = min(action.distance(v, action.act(g, v)) for v in ball)
        ok_tl &= disp == action.translation_length(g)
    lox = [g for g in pool if classify(g, action).is_loxodromic]
    ok_law = True
    for g in lox:
        cls = classify(g, action)
        for n in range(1, 5):
            res = check_axis_lower_bound(g ** n, action.base, action)
            ok_law &= res.slack == 0 and res.translation == n * cls.length
    return [{"suite": "treeact", "check": "translation_length_vs_ball", "cases": len(pool), "ok": ok_tl},
            {"suite": "treeact", "check": "exact_tree_law", "cases": 4 * len(lox), "ok": ok_law}]


def _suite_hypcheck(action: TreeAction, rng: random.Random) -> list[dict]:
    ball = FiniteGraphBall.from_tree_action(action, 4)
    d0 = measure_delta(ball, 20_000, seed=rng.randrange(2 ** 31))
    lox = [g for g in action.spec.ball(3) if classify(g, action).is_loxodromic]
    qg = all(is_quasi_geodesic(GraphPath(tuple(classify(g, action).axis_window(2)), action)).ok
             for g in lox)
    hd = True
    for g in lox[:10]:
        c2, c3 = classify(g ** 2, action), classify(g ** 3, action)
        w2 = c2.axis_window(3)
        # the cube's axis is the same line: every window vertex is moved exactly [g^3]
        hd &= all(action.distance(v, action.act(g ** 3, v)) == c3.length for v in w2)
        hd &= hausdorff_distance(w2, w2, action) == 0
    return [{"suite": "hypcheck", "check": "tree_ball_delta_zero", "cases": len(ball), "ok": d0 == 0},
            {"suite": "hypcheck", "check": "axis_windows_geodesic", "cases": len(lox), "ok": qg},
            {"suite": "hypcheck", "check": "power_axes_coincide", "cases": min(10, len(lox)), "ok": hd}]


def _suite_acyl(action: TreeAction, rng: random.Random) -> list[dict]:
    spec = action.spec
    n_edge = len(spec.edge_group) if spec.is_amalgam else 1
    kn = verify_kn_acylindrical(action, 1, n_edge, 6).ok
    lox = [g for g in spec.ball(3) if classify(g, action).is_loxodromic]
    pl = all(check_power_length(action, g, 5).ok for g in lox)
    try:
        inj = injectivity_radius(action, 3) >= 1
    except Exception:
        inj = spec.is_finite()
    return [{"suite": "acyl", "check": f"kn_acylindrical_1_{n_edge}", "cases": 1, "ok": kn},
            {"suite": "acyl", "check": "power_length_law", "cases": len(lox), "ok": pl},
            {"suite": "acyl", "check": "injectivity_radius_positive", "cases": 1, "ok": inj}]


def _random_word(rng: random.Random, letters: int, support: int) -> tuple:
    return tuple(rng.choice((1, -1)) * rng.randint(1, support) for _ in range(letters))


def _suite_bigword(rng: random.Random) -> list[dict]:
    hom = compat = True
    for _ in range(100):
        u = bw.from_letters(_random_word(rng, rng.randint(0, 8), 8))
        v = bw.from_letters(_random_word(rng, rng.randint(0, 8), 8))
        n = rng.randint(0, 10)
        pu, pv = bw.project(u, n).word, bw.project(v, n).word
        hom &= bw.project(u * v, n).word == concat_reduced(pu, pv)
        m = n + rng.randint(0, 5)
        compat &= bw.project(bw.from_letters(bw.project(u, m).word), n) == bw.project(u, n)
    z = bw.named_tail("conjugated_sequence")
    tail = True
    for n in range(0, 21):
        head = bw.Concat(tuple(z.rule(i) for i in range(1, n + 1)))
        tail &= bw.eq_to_depth(z, head, n)
    probe = True
    for _ in range(100):
        w = bw.from_letters(_random_word(rng, rng.randint(1, 5), 6))
        if bw.project(w, 6).is_trivial():
            continue
        res = probe_elliptic_radical(w, 6, 6)
        probe &= res.status == "witness" and res.n <= bw.support_max(w)
    return [{"suite": "bigword", "check": "projection_homomorphism", "cases": 100, "ok": hom},
            {"suite": "bigword", "check": "projection_compatibility", "cases": 100, "ok": compat},
            {"suite": "bigword", "check": "tail_consistency", "cases": 21, "ok": tail},
            {"suite": "bigword", "check": "radical_probe_witness", "cases": 100, "ok": probe}]


def verify_lemmas(spec: GroupSpec, seed: int = 0, group_name: str = "") -> Report:
    started = time.perf_counter()
    action = TreeAction(spec)
    rng = random.Random(seed)
    rows = []
    rows += _suite_groupcore(spec, rng)
    rows += _suite_treeact(action, rng)
    rows += _suite_hypcheck(action, rng)
    rows += _suite_acyl(action, rng)
    rows += _suite_bigword(rng)
    rep = Report("verify_lemmas", {"group": group_name or repr(spec), "seed": seed},
                 tables={"checks": rows},
                 verdicts={f"{r['suite']}.{r['check']}": bool(r["ok"]) for r in rows},
                 provenance={"groupcore": "exact", "treeact": "exact", "hypcheck": "exact",
                             "acyl": "exact", "bigword": "sampled"})
    return _stamp(rep, started)


def estimate_constants_report(spec: GroupSpec, sample: SampleSpec, group_name: str = "") -> Report:
    started = time.perf_counter()
    res = estimate_product_constants(TreeAction(spec), sample)
    js = res.to_json()
    rows = [{"constant": k, **v} for k, v in js["constants"].items()]
    rep = Report("estimate_constants", {"group": group_name, "sample": js["sample"]},
                 tables={"constants": rows, "counts": [{**js["counts"], "partial": res.partial}]},
                 verdicts={},
                 provenance={k: v["tag"] for k, v in js["constants"].items()})
    return _stamp(rep, started)
