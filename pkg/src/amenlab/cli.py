"""Command-line front end.

Every command builds a :class:`Result` holding a JSON payload and, where the
output is tabular, rows with the fixed CSV columns ``n, g_id, value,
error_bound, pass``.  Exit codes: 0 success, 1 a check failed, 2 bad
configuration.

Element specs (``--element``, repeatable)::

    id | shift | shift:K          identity / translation
    swap:W                        cylinder swap of the word W, embedded via the orbit of p
    comm:U,V                      commutator of swap:U and swap:V
    tswap:A,B                     table transposition of the integers A and B
    path/to/file.json             a map (``{"kind": ...}``) or element (``{"radius", "rule"}``)
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import density, meanlab, stabilizer, subshift, wobbling
from .fullgroup import (
    ElementError,
    LocalRuleElement,
    commutator,
    cylinder_swap,
    element_from_json,
    element_to_json,
    embed_pi_p,
    identity_element,
    shift_element,
    verify_element,
)

CSV_COLUMNS = ("n", "g_id", "value", "error_bound", "pass")
SCHEMA_VERSION = 1


class ConfigError(ValueError):
    pass


@dataclass
class Result:
    schema: str
    payload: dict = field(default_factory=dict)
    rows: list[dict] | None = None
    ok: bool = True

    def as_json(self) -> dict:
        out = {"schema": f"amenlab.{self.schema}/{SCHEMA_VERSION}"}
        out.update(self.payload)
        if self.rows is not None:
            out["rows"] = self.rows
        out["ok"] = self.ok
        return out


def _row(n, g_id, value, error_bound=0.0, passed=True) -> dict:
    return {"n": n, "g_id": g_id, "value": value, "error_bound": error_bound, "pass": bool(passed)}


# -- argument helpers -----------------------------------------------------------

def _int_list(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise ConfigError(f"expected a comma-separated list of integers, got {text!r}") from None


def _positive(name: str, value) -> None:
    if value is not None and value <= 0:
        raise ConfigError(f"--{name} must be positive")


class Context:
    """Lazily built system plus resolved element specs."""

    def __init__(self, args: argparse.Namespace):
        self.args = args
        self._system = None
        _positive("eps", args.eps)
        _positive("window", args.window)
        _positive("horizon", args.horizon)
        _positive("k", args.k)
        self.ns = _int_list(args.n) if args.n else []
        if any(n < 1 for n in self.ns):
            raise ConfigError("--n values must be >= 1")

    @property
    def system(self) -> subshift.SubshiftSystem:
        if self._system is None:
            spec = self.args.system
            horizon = self.args.horizon
            try:
                if os.path.isfile(spec):
                    with open(spec) as fh:
                        self._system = subshift.system_from_json(json.load(fh), horizon)
                else:
                    self._system = subshift.builtin_system(spec, horizon)
            except (subshift.SubstitutionError, KeyError, json.JSONDecodeError) as exc:
                raise ConfigError(f"bad system {spec!r}: {exc}") from None
        return self._system

    def specs(self, default: Sequence[str] = ()) -> list[str]:
        specs = self.args.element or list(default)
        if not specs:
            raise ConfigError("at least one --element is required")
        return specs

    def element(self, spec: str) -> LocalRuleElement:
        kind, _, arg = spec.partition(":")
        try:
            if kind == "id":
                return identity_element(self.system)
            if kind == "shift":
                return shift_element(self.system, int(arg or 1))
            if kind == "swap":
                return cylinder_swap(self.system, arg)
            if kind == "comm":
                u, _, v = arg.partition(",")
                return commutator(cylinder_swap(self.system, u), cylinder_swap(self.system, v))
            if os.path.isfile(spec):
                with open(spec) as fh:
                    d = json.load(fh)
                if "rule" in d and "kind" not in d:
                    return element_from_json(self.system, d)
        except (ElementError, ValueError) as exc:
            raise ConfigError(f"bad element {spec!r}: {exc}") from None
        raise ConfigError(f"{spec!r} does not describe a full-group element")

    def map(self, spec: str) -> wobbling.WobblingMap:
        kind, _, arg = spec.partition(":")
        if kind == "id":
            return wobbling.identity()
        if kind == "shift":
            return wobbling.shift(int(arg or 1))
        if kind == "tswap":
            pair = _int_list(arg)
            if len(pair) != 2:
                raise ConfigError(f"tswap needs two integers, got {arg!r}")
            return wobbling.swap(*pair)
        if os.path.isfile(spec):
            with open(spec) as fh:
                d = json.load(fh)
            if "kind" in d:
                try:
                    return wobbling.from_json(d)
                except (KeyError, ValueError, wobbling.BijectivityError) as exc:
                    raise ConfigError(f"bad map file {spec!r}: {exc}") from None
        return embed_pi_p(self.element(spec))

    def maps(self, default: Sequence[str] = ()) -> list[tuple[str, wobbling.WobblingMap]]:
        return [(s, self.map(s)) for s in self.specs(default)]


# -- subshift -----------------------------------------------------------------

def cmd_subshift_language(ctx: Context) -> Result:
    L = ctx.args.length
    table = subshift.language(ctx.system, L)
    return Result("subshift.language", {"system": ctx.args.system, "L": L, "count": len(table), "words": table.sorted()})


def cmd_subshift_point(ctx: Context) -> Result:
    w = ctx.args.window or 16
    return Result("subshift.point", {"system": ctx.args.system, "lo": -w, "hi": w - 1, "word": ctx.system.window(-w, w - 1)})


def cmd_subshift_recurrence(ctx: Context) -> Result:
    scan = ctx.args.window or 10_000
    rows = []
    for L in range(1, ctx.args.length + 1):
        try:
            R = subshift.recurrence_bound(ctx.system, L, scan)
            rows.append(_row(L, ctx.args.system, R))
        except subshift.RecurrenceError:
            rows.append(_row(L, ctx.args.system, None, passed=False))
    return Result("subshift.recurrence", {"scan": scan}, rows, all(r["pass"] for r in rows))


# -- element ------------------------------------------------------------------

def cmd_element_build(ctx: Context) -> Result:
    out = []
    for spec in ctx.specs():
        a = ctx.element(spec)
        out.append({"spec": spec, "exponent_bound": a.exponent_bound, **element_to_json(a)})
    return Result("element.build", {"system": ctx.args.system, "elements": out})


def cmd_element_verify(ctx: Context) -> Result:
    window = ctx.args.window or 1000
    rows = [_row(window, spec, None, passed=verify_element(ctx.element(spec), window)) for spec in ctx.specs()]
    return Result("element.verify", {"window": window}, rows, all(r["pass"] for r in rows))


def cmd_element_embed(ctx: Context) -> Result:
    window = ctx.args.window or 20
    out = []
    for spec in ctx.specs():
        g = embed_pi_p(ctx.element(spec))
        disp = g.displacements(-window, window)
        out.append({
            "spec": spec,
            "bound": g.bound,
            "lo": -window,
            "displacements": disp.tolist(),
            "bijective": wobbling.verify_bijectivity_window(g, -window, window),
        })
    return Result("element.embed", {"elements": out}, ok=all(e["bijective"] for e in out))


# -- density ------------------------------------------------------------------

def _n_grid(ctx: Context, default: Sequence[int]) -> list[int]:
    return ctx.ns or list(default)


def cmd_density_correlate(ctx: Context) -> Result:
    eps = ctx.args.eps or 1e-10
    rows = []
    for spec, g in ctx.maps(["shift"]):
        for n in _n_grid(ctx, [1, 4, 16, 64]):
            tv = density.correlation_ratio(n, g, eps)
            rows.append(_row(n, spec, tv.value, tv.error_bound, 0 < tv.value <= 1 + tv.error_bound and tv.error_bound <= eps))
    return Result("density.correlate", {"eps": eps}, rows, all(r["pass"] for r in rows))


def cmd_density_fn(ctx: Context) -> Result:
    eps = ctx.args.eps or 1e-12
    rows = []
    for spec, g in ctx.maps(["shift"]):
        for n in _n_grid(ctx, [1, 4, 16, 64]):
            tv = density.F_n(n, g, eps)
            rows.append(_row(n, spec, tv.value, tv.error_bound, tv.error_bound <= eps))
    return Result("density.fn", {"eps": eps}, rows, all(r["pass"] for r in rows))


def _lemma_rows(ns: Sequence[int], maps: Sequence[tuple[str, wobbling.WobblingMap]]) -> list[dict]:
    rows = []
    for n in ns:
        rep = density.check_lemma_sum(n)
        rows.append(_row(n, "sum:S1", rep.S1.value, rep.S1.error_bound, rep.passed))
        rows.append(_row(n, "sum:S2", rep.S2.value, rep.S2.error_bound, rep.passed))
    z = np.linspace(-0.5, 10.0, 10_000)
    rep = density.check_log_inequality(z)
    rows.append(_row(None, "log", min(rep.min_lower_margin, rep.min_upper_margin), 0.0, rep.passed))
    for spec, g in maps:
        m = g.bound
        b = density.check_lemma_B(g, range(m + 1, m + 51))
        rows.append(_row(None, f"B:{spec}", b.margin, 0.0, b.passed))
        for n in ns:
            et = all(density.eta_theta(g, n, j).bounds_pass for j in range(-200, 201, 25))
            rows.append(_row(n, f"eta_theta:{spec}", None, 0.0, et))
            ab = density.abel_check(g, n, 100)
            rows.append(_row(n, f"abel:{spec}", ab.lhs - ab.rhs, 1e-10, ab.passed))
            d2 = density.decompose_sum2(n, g)
            rows.append(_row(n, f"sum2:{spec}", d2.main, d2.error_bound, d2.passed))
    return rows


def cmd_density_lemmas(ctx: Context) -> Result:
    rows = _lemma_rows(_n_grid(ctx, [1, 2, 4, 8, 16]), ctx.maps(["shift", "tswap:0,5"]))
    return Result("density.lemmas", {}, rows, all(r["pass"] for r in rows))


# -- mean ---------------------------------------------------------------------

def _fourier(ctx: Context, n: int) -> meanlab.ProductMeasure:
    return meanlab.fourier_measure(n, ctx.args.window or meanlab.fourier_window(n))


def cmd_mean_fourier(ctx: Context) -> Result:
    rows = []
    for n in _n_grid(ctx, [1, 4, 16, 64]):
        m = _fourier(ctx, n)
        rows.append(_row(n, "p_0", m.prob(0), m.tail_mass))
    return Result("mean.fourier", {"window": ctx.args.window}, rows)


def _require_seed(ctx: Context) -> int:
    if ctx.args.seed is None:
        raise ConfigError("--seed is required for sampling commands")
    return ctx.args.seed


def cmd_mean_sample(ctx: Context) -> Result:
    seed = _require_seed(ctx)
    n = (ctx.ns or [4])[0]
    m = _fourier(ctx, n)
    k = ctx.args.k or 1
    m = meanlab.boost_union(m, k)
    sets = meanlab.sample_set(m, seed, ctx.args.count)
    return Result("mean.sample", {"n": n, "k": k, "seed": seed, "sets": [sorted(s) for s in sets]})


def cmd_mean_boost(ctx: Context) -> Result:
    k = ctx.args.k or 5
    rows = []
    for spec, g in ctx.maps(["shift"]):
        for n in _n_grid(ctx, [1, 4, 16, 64]):
            m = _fourier(ctx, n)
            boosted = meanlab.boost_union(m, k)
            d0, dk = meanlab.pushforward_defect(m, g), meanlab.pushforward_defect(boosted, g)
            p0 = boosted.prob(0)
            ok = p0 == 1 - (1 - m.prob(0)) ** k and dk <= k * d0 + 1e-12
            rows.append(_row(n, f"{spec}|k={k}", p0, boosted.effective_tail, ok))
    return Result("mean.boost", {"k": k, "window": ctx.args.window}, rows, all(r["pass"] for r in rows))


def cmd_mean_defect(ctx: Context) -> Result:
    rows = []
    for spec, g in ctx.maps(["shift"]):
        for n in _n_grid(ctx, [1, 4, 16, 64]):
            m = _fourier(ctx, n)
            rows.append(_row(n, spec, meanlab.pushforward_defect(m, g), 2 * m.tail_mass))
            rows.append(_row(n, f"tv_bound:{spec}", meanlab.tv_upper_bound(m, g), 2 * m.tail_mass))
    return Result("mean.defect", {"window": ctx.args.window}, rows)


def _twist_record(spec: str, g: wobbling.WobblingMap) -> dict:
    return {"set": sorted(meanlab.twist(g).finite_set), "g": spec}


def cmd_mean_twist(ctx: Context) -> Result:
    records = [_twist_record(spec, g) for spec, g in ctx.maps(["shift"])]
    if len(records) == 1:
        return Result("mean.twist", records[0])
    return Result("mean.twist", {"elements": records})


# -- stab -----------------------------------------------------------------------

def _E(ctx: Context) -> frozenset:
    return frozenset(_int_list(ctx.args.E)) if ctx.args.E else frozenset()


STAB_DEFAULT = ("swap:01", "comm:01,00100")


def cmd_stab_pattern(ctx: Context) -> Result:
    maps = ctx.maps(STAB_DEFAULT)
    scan = ctx.args.window or 10_000
    rows = []
    for n in _n_grid(ctx, [2]):
        try:
            pc = stabilizer.pattern_constant([g for _, g in maps], n, scan)
            rows.append(_row(n, "+".join(s for s, _ in maps), pc.k))
        except stabilizer.PatternError:
            rows.append(_row(n, "+".join(s for s, _ in maps), None, passed=False))
    return Result("stab.pattern", {"horizon": scan}, rows, all(r["pass"] for r in rows))


def _certificate(maps: Sequence[tuple[str, wobbling.WobblingMap]], E: frozenset, window: int) -> dict:
    F = [g for _, g in maps]
    out: dict = {"F": [s for s, _ in maps], "E": sorted(E), "window": window}
    try:
        dec = stabilizer.block_decomposition(F, E, window)
    except (stabilizer.PatternError, stabilizer.DecompositionError) as exc:
        out.update(ok=False, error=str(exc))
        return out
    order = stabilizer.finite_order(F, dec)
    sizes = dec.sizes
    out.update(
        k=dec.k,
        radius=dec.radius,
        block_count=len(sizes),
        block_sizes=sorted(set(sizes)),
        max_block=max(sizes),
        max_size_bound=dec.max_size_bound,
        group_order=order,
        checks={**dec.checks, "divides_factorial_product": stabilizer.divides_factorial_product(order, dec)},
    )
    out["ok"] = all(out["checks"].values())
    return out


def cmd_stab_blocks(ctx: Context) -> Result:
    cert = _certificate(ctx.maps(STAB_DEFAULT), _E(ctx), ctx.args.window or 200)
    return Result("stab.blocks", cert, ok=cert["ok"])


def cmd_stab_order(ctx: Context) -> Result:
    maps = ctx.maps(STAB_DEFAULT)
    w = ctx.args.window or 200
    small, big = _certificate(maps, _E(ctx), w), _certificate(maps, _E(ctx), 2 * w)
    ok = small["ok"] and big["ok"] and small["group_order"] == big["group_order"]
    rows = [
        _row(w, "+".join(small["F"]), small.get("group_order"), 0.0, small["ok"]),
        _row(2 * w, "+".join(big["F"]), big.get("group_order"), 0.0, ok),
    ]
    return Result("stab.order", {"E": small["E"]}, rows, ok)


# -- report ---------------------------------------------------------------------

def cmd_report_all(ctx: Context) -> Result:
    """Full pipeline on Fibonacci; every number is deterministic given the seed."""
    seed = _require_seed(ctx)
    sys_ = subshift.builtin_system("fibonacci", ctx.args.horizon)
    ctx._system = sys_
    pool_specs = ["shift", "swap:01", "swap:001", "comm:01,00100"]
    pool = [(s, ctx.map(s)) for s in pool_specs]
    ns = ctx.ns or [1, 4, 16, 64]

    system = {
        "name": "fibonacci",
        "point": sys_.window(-16, 15),
        "language_sizes": [len(subshift.language(sys_, L)) for L in range(1, 9)],
        "recurrence": [subshift.recurrence_bound(sys_, L, 10_000) for L in range(1, 6)],
    }
    elements = []
    for spec in pool_specs:
        a = ctx.element(spec)
        elements.append({"spec": spec, "radius": a.radius, "exponent_bound": a.exponent_bound,
                         "verified": verify_element(a, 1000)})

    curves = []
    for spec, g in pool:
        for n in ns:
            corr = density.correlation_ratio(n, g, 1e-10)
            fn = density.F_n(n, g, 1e-12)
            curves.append({"n": n, "g_id": spec, "correlation": corr.value, "correlation_error": corr.error_bound,
                           "F_n": fn.value, "F_n_error": fn.error_bound})
    lemmas = _lemma_rows([1, 4, 16], pool[:2] + [("tswap:0,5", wobbling.swap(0, 5))])

    rng = np.random.default_rng(seed)
    measures = []
    for n in ns:
        m = meanlab.fourier_measure(n, meanlab.fourier_window(n))
        boosted = meanlab.boost_union(m, 5)
        measures.append({
            "n": n,
            "p_0": m.prob(0),
            "boost5_p_0": boosted.prob(0),
            "defect_shift": meanlab.pushforward_defect(m, wobbling.shift()),
            "tv_bound_shift": meanlab.tv_upper_bound(m, wobbling.shift()),
            "samples": [sorted(s) for s in meanlab.sample_set(m, rng, 3)],
        })
    twists = [_twist_record(s, g) for s, g in pool]

    F = [(s, g) for s, g in pool if s in STAB_DEFAULT]
    certificates = [_certificate(F, frozenset(E), 200) for E in ((), (2,))]

    checks = {
        "elements_verified": all(e["verified"] for e in elements),
        "lemmas": all(r["pass"] for r in lemmas),
        "certificates": all(c["ok"] for c in certificates),
    }
    payload = {
        "seed": seed,
        "system": system,
        "elements": elements,
        "density": curves,
        "lemmas": lemmas,
        "measures": measures,
        "twists": twists,
        "certificates": certificates,
        "checks": checks,
    }
    return Result("report.all", payload, ok=all(checks.values()))


# -- plumbing -------------------------------------------------------------------

COMMANDS: dict[str, dict[str, Callable[[Context], Result]]] = {
    "subshift": {"language": cmd_subshift_language, "point": cmd_subshift_point, "recurrence": cmd_subshift_recurrence},
    "element": {"build": cmd_element_build, "verify": cmd_element_verify, "embed": cmd_element_embed},
    "density": {"correlate": cmd_density_correlate, "fn": cmd_density_fn, "lemmas": cmd_density_lemmas},
    "mean": {
        "fourier": cmd_mean_fourier,
        "sample": cmd_mean_sample,
        "boost": cmd_mean_boost,
        "defect": cmd_mean_defect,
        "twist": cmd_mean_twist,
    },
    "stab": {"pattern": cmd_stab_pattern, "blocks": cmd_stab_blocks, "order": cmd_stab_order},
    "report": {"all": cmd_report_all},
}

CSV_DEFAULT = {("density", "correlate"), ("density", "fn"), ("density", "lemmas"), ("mean", "fourier"),
               ("mean", "boost"), ("mean", "defect")}


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--system", default="fibonacci", help="built-in name or substitution JSON path")
    p.add_argument("--element", action="append", help="element spec; repeat for several")
    p.add_argument("--n", help="comma-separated n values (radius for stab pattern)")
    p.add_argument("--eps", type=float)
    p.add_argument("--window", type=int)
    p.add_argument("--horizon", type=int, help="orbit horizon (default: $FGL_ORBIT_HORIZON or 65536)")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help="write output here instead of stdout")
    p.add_argument("--format", choices=("csv", "json"))
    p.add_argument("--length", type=int, default=4, help="word length L for subshift commands")
    p.add_argument("--k", type=int, help="number of unions for boosting (boost: 5, sample: 1)")
    p.add_argument("--count", type=int, default=10, help="number of sampled sets")
    p.add_argument("--E", help="comma-separated finite set E for stab commands")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="amenlab", description=__doc__.splitlines()[0])
    groups = parser.add_subparsers(dest="group", required=True)
    for group, actions in COMMANDS.items():
        gp = groups.add_parser(group)
        sub = gp.add_subparsers(dest="action", required=True)
        for action, fn in actions.items():
            _common(sub.add_parser(action, help=(fn.__doc__ or "").split("\n")[0] or None))
    return parser


def render(result: Result, fmt: str) -> str:
    if fmt == "csv":
        if result.rows is None:
            raise ConfigError("this command has no tabular output; use --format json")
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n")
        writer.writeheader()
        for r in result.rows:
            writer.writerow({k: ("" if r[k] is None else repr(r[k]) if isinstance(r[k], float) else r[k]) for k in CSV_COLUMNS})
        return buf.getvalue()
    return json.dumps(result.as_json(), indent=2, sort_keys=False, default=_json_default) + "\n"


def _json_default(x):
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.floating):
        return float(x)
    raise TypeError(f"not serializable: {type(x).__name__}")


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    fmt = args.format or ("csv" if (args.group, args.action) in CSV_DEFAULT else "json")
    try:
        ctx = Context(args)
        result = COMMANDS[args.group][args.action](ctx)
        text = render(result, fmt)
    except (ConfigError, subshift.HorizonError, subshift.SubstitutionError, density.PrecisionError) as exc:
        print(f"amenlab: error: {exc}", file=sys.stderr)
        return 2
    except (wobbling.BijectivityError, stabilizer.CapExceeded) as exc:
        print(f"amenlab: check failed: {exc}", file=sys.stderr)
        return 1
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0 if result.ok else 1


if __name__ == "__main__":
    sys.exit(main())
