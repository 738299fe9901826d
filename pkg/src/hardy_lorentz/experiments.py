"""Batch experiments over seeded instances, written as CSV plus a JSON summary.

Hard invariants (exact identities, validity checks, finiteness and scale
invariance of ratios) are collected in ``hard_failures``; empirical ratio
bands are only recorded.
"""

from __future__ import annotations

import csv
import json
import math
import os
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import __version__, arith
from .atomic import coefficient_norm, decompose, dual_witness, orthogonality_check, validate_atom
from .bmo import EstimatorConfig, StoppingSequence, default_window, jn_study
from .errors import ConfigError, HardyLorentzError
from .fracint import boundedness_study, fractional_integral
from .generate import InstanceBlock, InstanceSpec, generate, pair_martingale
from .hardy import equivalence_study, summarize
from .lorentz import parse_exponent
from .process import first_crossing, predictable_cond_quad_variation
from .serialize import SCHEMA

EXPERIMENTS = ("equivalence", "jn", "duality", "fractional", "atomic-validate")
SCALE = 7
SCALE_RTOL = 1e-10


@dataclass
class ExperimentReport:
    name: str
    parameters: dict
    rows: list[dict]
    summary: dict
    seeds: list[int]
    hard_failures: list[str] = field(default_factory=list)
    version: str = __version__

    @property
    def ok(self) -> bool:
        return not self.hard_failures

    def summary_doc(self) -> dict:
        return {
            "schema": SCHEMA,
            "experiment": self.name,
            "parameters": self.parameters,
            "summary": self.summary,
            "seeds": self.seeds,
            "row_count": len(self.rows),
            "hard_failures": self.hard_failures,
            "version": self.version,
        }

    def write(self, out_dir: str) -> tuple[str, str]:
        os.makedirs(out_dir, exist_ok=True)
        csv_path = os.path.join(out_dir, f"{self.name}.csv")
        json_path = os.path.join(out_dir, f"{self.name}.json")
        cols: list[str] = []
        for r in self.rows:
            cols.extend(c for c in r if c not in cols)
        with open(csv_path, "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=cols, lineterminator="\n")
            w.writeheader()
            for r in self.rows:
                w.writerow({k: _cell(v) for k, v in r.items()})
        with open(json_path, "w") as fh:
            json.dump(self.summary_doc(), fh, sort_keys=True, indent=2)
            fh.write("\n")
        return csv_path, json_path


def _cell(v):
    if isinstance(v, float):
        return repr(v)
    return v


def _exp(x):
    v = parse_exponent(x) if isinstance(x, str) else x
    if isinstance(v, float) and v.is_integer():
        return Fraction(int(v))
    if isinstance(v, float) and math.isfinite(v):
        return Fraction(v).limit_denominator(10**6)
    return v


def instance_list(config: dict) -> list[tuple[str, InstanceSpec]]:
    """Instances from ``config["instances"]``: a list of spec documents or an
    InstanceBlock description ({"count": ..., "seed": ...})."""
    inst = config.get("instances")
    if inst is None:
        raise ConfigError("config has no 'instances'")
    try:
        if isinstance(inst, dict):
            specs = InstanceBlock(**inst).specs()
        else:
            specs = [(d.pop("id", f"i{n:05d}"), InstanceSpec.from_doc(d)) for n, d in enumerate(dict(x) for x in inst)]
    except (TypeError, HardyLorentzError) as exc:
        raise ConfigError(f"bad instance description: {exc}") from exc
    if not specs:
        raise ConfigError("empty instance list")
    return specs


def _finite_positive(x) -> bool:
    return isinstance(x, (int, float)) and math.isfinite(x) and x > 0


def _scale_ok(a: float, b: float) -> bool:
    return abs(a - b) <= SCALE_RTOL * max(abs(a), abs(b), 1e-300)


def _equivalence(specs, params, fails):
    rows = []
    for p in params.get("p", ["1/2", "1", "2"]):
        for q in params.get("q", ["1", "2"]):
            insts = [(iid, generate(s)[1]) for iid, s in specs]
            r, _ = equivalence_study(insts, (_exp(p), _exp(q)))
            rows.extend(r)
    for r in rows:
        if not _finite_positive(r["ratio"]):
            fails.append(f"{r['instance_id']}: non-finite ratio {r['norm_kind_a']}/{r['norm_kind_b']}")
    return rows, summarize(rows, ("p", "q", "norm_kind_a", "norm_kind_b"))


def _jn(specs, params, fails):
    cfg = EstimatorConfig(**params.get("estimator", {}))
    insts = [(iid, generate(s)[1]) for iid, s in specs]
    rows = jn_study(
        insts,
        r_list=tuple(params.get("r", [1, 3])),
        q=float(params.get("q", 2)),
        alpha=float(params.get("alpha", 0)),
        config=cfg,
    )
    for r in rows:
        if not _finite_positive(r["ratio"]):
            fails.append(f"{r['instance_id']}: non-finite JN ratio at r={r['r']}")
    return rows, summarize(rows, ("r",))


def _crossing_sequence(g):
    """nu_k = first crossing of s_{n+1}(g) > 2^k over the default window."""
    window = default_window(g)
    stat = np.asarray(predictable_cond_quad_variation(g).values, dtype=np.float64)
    times = {k: first_crossing(g.tree, stat, 2.0**k) for k in range(window[0], window[1] + 1)}
    return StoppingSequence(g.tree, window, times)


def _duality(specs, params, fails):
    rows = []
    kinds = params.get("kinds", ["s", "Q", "D"])
    ps = [_exp(p) for p in params.get("p", ["1/2", "1"])]
    self_pair = params.get("g", "random") == "f"
    r_wit = float(params.get("r", 2))
    q_wit = float(params.get("q", 2))
    for iid, spec in specs:
        tree, f = generate(spec)
        g = f if self_pair else pair_martingale(tree, spec.seed + 1)
        for kind in kinds:
            for p in ps:
                dec = decompose(f, p, kind)
                for row in orthogonality_check(dec, g, raise_on_fail=False):
                    exact = row["identity_exact"] if tree.mode == arith.RATIONAL else True
                    if not row["ok"] or not exact:
                        fails.append(f"{iid}: duality chain fails at kind={kind} p={p} k={row['k']}")
                    rows.append({"instance_id": iid, "row_type": "chain", "kind": kind, "p": float(p), **row})
        if any(v != 0 for v in g.terminal):
            seq = _crossing_sequence(g)
            for p in ps:
                try:
                    _, ratio = dual_witness(g, seq, p, r_wit, q_wit)
                    _, ratio7 = dual_witness(g.scale(SCALE), seq, p, r_wit, q_wit)
                except HardyLorentzError:
                    continue
                if not _finite_positive(ratio) or not _scale_ok(ratio, ratio7):
                    fails.append(f"{iid}: dual witness ratio not finite or not scale invariant")
                rows.append({"instance_id": iid, "row_type": "witness", "kind": "s", "p": float(p), "ratio": ratio})
    witness = [r for r in rows if r["row_type"] == "witness"]
    return rows, summarize(witness, ("p",))


def _fractional(specs, params, fails):
    p1, q1, p2, q2 = (_exp(params.get(k, d)) for k, d in (("p1", "1/2"), ("q1", "1/2"), ("p2", "1"), ("q2", "1")))
    alpha = _exp(params.get("alpha", 1 / p1 - 1 / p2))
    rows = []
    insts = []
    for iid, spec in specs:
        tree, f = generate(spec)
        insts.append((iid, f))
        if any(fractional_integral(f, 0).values != f.values):
            fails.append(f"{iid}: I_0 is not the identity")
    base = boundedness_study(p1, q1, p2, q2, alpha, insts)
    scaled = {r["instance_id"]: r["ratio"] for r in boundedness_study(p1, q1, p2, q2, alpha, [(i, f.scale(SCALE)) for i, f in insts])}
    for r in base:
        if not _finite_positive(r["ratio"]) or not _scale_ok(r["ratio"], scaled[r["instance_id"]]):
            fails.append(f"{r['instance_id']}: fractional ratio not finite or not scale invariant")
        rows.append(r)
    return rows, summarize(rows, ("alpha", "R")) if params.get("by_R") else summarize(rows, ("alpha",))


def _atomic_validate(specs, params, fails):
    """Reconstruction, atom validity and nu monotonicity are hard for every
    threshold base. Scale invariance of the coefficient ratio is hard only for
    the anchored base ("auto"); on the plain dyadic grid it is recorded."""
    rows = []
    kinds = params.get("kinds", ["s", "Q", "D"])
    ps = [_exp(p) for p in params.get("p", ["1/2", "1"])]
    qs = [_exp(q) for q in params.get("q", ["1", "2"])]
    bases = params.get("bases", ["dyadic", "auto"])
    for iid, spec in specs:
        tree, f = generate(spec)
        f7 = f.scale(SCALE)
        for kind in kinds:
            for p in ps:
                for base_name in bases:
                    base = None if base_name == "dyadic" else base_name
                    dec = decompose(f, p, kind, base=base)
                    rec = dec.reconstruction_exact()
                    atoms = all(validate_atom(t.atom)["ok"] for t in dec.terms)
                    mono = dec.nu_monotone()
                    if not (rec and atoms and mono):
                        fails.append(f"{iid}: kind={kind} p={p} base={base_name} reconstruction={rec} atoms={atoms} monotone={mono}")
                    dec7 = decompose(f7, p, kind, base=base)
                    for q in qs:
                        norm, ratio = coefficient_norm(dec, q)
                        _, ratio7 = coefficient_norm(dec7, q)
                        invariant = norm == 0 or _scale_ok(ratio, ratio7)
                        if norm != 0 and not _finite_positive(ratio):
                            fails.append(f"{iid}: coefficient ratio not finite at kind={kind} p={p} q={q}")
                        if base_name != "dyadic" and not invariant:
                            fails.append(f"{iid}: coefficient ratio not scale invariant at kind={kind} p={p} q={q}")
                        rows.append(
                            {
                                "instance_id": iid,
                                "kind": kind,
                                "base": base_name,
                                "p": float(p),
                                "q": float(q),
                                "terms": sum(1 for t in dec.terms if t.mu != 0),
                                "reconstruction_ok": rec,
                                "atoms_ok": atoms,
                                "monotone_ok": mono,
                                "coefficient_norm": float(norm),
                                "ratio": ratio,
                                "ratio_scaled": ratio7,
                                "scale_invariant": invariant,
                            }
                        )
    return rows, summarize(rows, ("kind", "base", "p", "q"))


_DRIVERS = {
    "equivalence": _equivalence,
    "jn": _jn,
    "duality": _duality,
    "fractional": _fractional,
    "atomic-validate": _atomic_validate,
}


def run_experiment(name: str, config: dict) -> ExperimentReport:
    if name not in _DRIVERS:
        raise ConfigError(f"unknown experiment {name!r}; choose from {EXPERIMENTS}")
    specs = instance_list(config)
    params = dict(config.get("params", {}))
    fails: list[str] = []
    rows, summary = _DRIVERS[name](specs, params, fails)
    rows.sort(key=lambda r: str(r["instance_id"]))
    return ExperimentReport(
        name=name,
        parameters={"instances": config["instances"], "params": params},
        rows=rows,
        summary=summary,
        seeds=[s.seed for _, s in specs],
        hard_failures=fails,
    )
