"""Command-line pipeline: build-graphs -> solve -> evaluate, plus sweeps.

Every command reads an INI file (section ``[multicg]``) whose keys can be
overridden by flags. Relative paths in the file are resolved against the
file's directory. Exit codes: 0 success, 1 input error, 2 numerical
failure.
"""

from __future__ import annotations

import argparse
import configparser
import json
import logging
import os
import sys
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .consensus import SolverConfig, simple_average, solve_multicg
from .corpus import (TimeWindow, load_catalog, load_market_series,
                     parse_mention_corpus)
from .evaluation import avg_dcg, comparison_table, format_table, method_label
from .exceptions import InputError, NumericalError
from .factors import (DEFAULT_LAGS, TRUTH_IDS, CorrelationMatrix, GraphSet,
                      build_factor_set, build_ground_truth, factor_ids,
                      file_stem, read_matrix, write_matrix)
from .synth import NoiseConfig, generate_planted, score_recovery

logger = logging.getLogger("multicg")

DEFAULT_ALPHA = {"tv": 0.25, "cp": 0.15, "hv": 0.4}
DEFAULT_KS = (10, 20, 30, 40, 50)
DEFAULT_ALPHA_GRID = (0.05, 0.15, 0.25, 0.4, 0.8)


@dataclass(frozen=True)
class RunConfig:
    catalog: str = ""
    corpus: str = ""
    market_dir: str = ""
    start: str = ""
    end: str = ""
    lags: tuple[int, ...] = DEFAULT_LAGS
    sma: int = 10
    alpha: dict = field(default_factory=lambda: dict(DEFAULT_ALPHA))
    tol: float = 1e-8
    max_iter: int = 1000
    k: tuple[int, ...] = DEFAULT_KS
    vol_window: int = 21
    alpha_grid: tuple[float, ...] = DEFAULT_ALPHA_GRID
    out: str = "out"

    def window(self) -> TimeWindow:
        if not self.start or not self.end:
            raise InputError("start and end dates are required")
        try:
            return TimeWindow.parse(self.start, self.end)
        except ValueError as exc:
            if isinstance(exc, InputError):
                raise
            raise InputError(f"bad window dates: {exc}") from None

    def solver(self, indicator: str | None = None, alpha: float | None = None) -> SolverConfig:
        if alpha is None:
            alpha = self.alpha[indicator]
        return SolverConfig(alpha=alpha, tol=self.tol, max_iter=self.max_iter)

    def to_dict(self):
        d = asdict(self)
        d["lags"] = list(self.lags)
        d["k"] = list(self.k)
        d["alpha_grid"] = list(self.alpha_grid)
        return d

    def path(self, *parts):
        return os.path.join(self.out, *parts)


def _int_list(text):
    text = str(text).strip()
    if not text:
        return ()
    return tuple(int(v) for v in text.replace(" ", "").split(","))


def _float_list(text):
    return tuple(float(v) for v in str(text).replace(" ", "").split(",") if v)


def load_config(path: str | None) -> RunConfig:
    if path is None:
        return RunConfig()
    if not os.path.exists(path):
        raise InputError(f"config file {path} not found")
    parser = configparser.ConfigParser()
    parser.read(path, encoding="utf-8")
    if "multicg" not in parser:
        raise InputError(f"{path}: missing [multicg] section")
    sec = parser["multicg"]
    base = os.path.dirname(os.path.abspath(path))

    def p(key):
        v = sec.get(key, "")
        return os.path.normpath(os.path.join(base, v)) if v else ""

    try:
        alpha = dict(DEFAULT_ALPHA)
        for ind in TRUTH_IDS:
            if f"alpha_{ind}" in sec:
                alpha[ind] = sec.getfloat(f"alpha_{ind}")
        if "alpha" in sec:
            alpha = {ind: sec.getfloat("alpha") for ind in TRUTH_IDS}
        return RunConfig(
            catalog=p("catalog"), corpus=p("corpus"), market_dir=p("market_dir"),
            start=sec.get("start", ""), end=sec.get("end", ""),
            lags=_int_list(sec["lags"]) if "lags" in sec else DEFAULT_LAGS,
            sma=sec.getint("sma", 10), alpha=alpha,
            tol=sec.getfloat("tol", 1e-8), max_iter=sec.getint("max_iter", 1000),
            k=_int_list(sec["k"]) if "k" in sec else DEFAULT_KS,
            vol_window=sec.getint("vol_window", 21),
            alpha_grid=_float_list(sec["alpha_grid"]) if "alpha_grid" in sec
            else DEFAULT_ALPHA_GRID,
            out=p("out") or "out",
        )
    except ValueError as exc:
        raise InputError(f"{path}: {exc}") from None


def resolve_config(args) -> RunConfig:
    cfg = load_config(getattr(args, "config", None))
    updates = {}
    if getattr(args, "start", None):
        updates["start"] = args.start
    if getattr(args, "end", None):
        updates["end"] = args.end
    if getattr(args, "lags", None) is not None:
        updates["lags"] = _int_list(args.lags)
    if getattr(args, "sma", None) is not None:
        updates["sma"] = args.sma
    if getattr(args, "alpha", None) is not None:
        updates["alpha"] = {ind: args.alpha for ind in TRUTH_IDS}
    if getattr(args, "k", None):
        updates["k"] = _int_list(args.k)
    if getattr(args, "alphas", None):
        updates["alpha_grid"] = _float_list(args.alphas)
    if getattr(args, "out", None):
        updates["out"] = args.out
    cfg = replace(cfg, **updates)
    if not cfg.k:
        raise InputError("k list must not be empty")
    return cfg


# -- io helpers -------------------------------------------------------------

def _write_json(path, obj):
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _write_text(path, text):
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def _need(path, what):
    if not os.path.exists(path):
        raise InputError(f"missing {what}: {path} (run the earlier pipeline stage first)")
    return path


def _read_graphs(cfg) -> GraphSet:
    mats = []
    for fid in factor_ids(cfg.lags):
        path = _need(cfg.path("graphs", f"{file_stem(fid)}.csv"), f"factor matrix {fid}")
        mats.append(read_matrix(path, fid))
    return GraphSet(tuple(mats))


def _read_truth(cfg) -> dict[str, CorrelationMatrix]:
    return {ind: read_matrix(_need(cfg.path("truth", f"{ind}.csv"), f"{ind} truth"), ind)
            for ind in TRUTH_IDS}


# -- commands ---------------------------------------------------------------

def cmd_build_graphs(cfg: RunConfig) -> dict:
    window = cfg.window()
    for key in ("catalog", "corpus", "market_dir"):
        if not getattr(cfg, key):
            raise InputError(f"config is missing {key}")
    catalog = load_catalog(_need(cfg.catalog, "catalog"))
    corpus = parse_mention_corpus(_need(cfg.corpus, "corpus"), catalog)
    market = load_market_series(_need(cfg.market_dir, "market data directory"), catalog.symbols)

    graphs = build_factor_set(corpus.records, catalog, window, cfg.lags, cfg.sma)
    truth = build_ground_truth(market, window, cfg.vol_window, catalog.symbols)

    os.makedirs(cfg.path("graphs"), exist_ok=True)
    os.makedirs(cfg.path("truth"), exist_ok=True)
    undefined = {}
    for m in graphs:
        m.validate()
        write_matrix(m, cfg.path("graphs", f"{file_stem(m.factor)}.csv"))
        undefined[m.factor] = m.undefined
    for ind, m in truth.items():
        m.validate()
        write_matrix(m, cfg.path("truth", f"{ind}.csv"))
        undefined[ind] = m.undefined
    summary = {
        "config": cfg.to_dict(),
        "entities": list(catalog.symbols),
        "corpus": {"records": len(corpus), "rejected": corpus.rejected,
                   "dropped": corpus.dropped},
        "undefined_pairs": undefined,
        "factors": graphs.ids,
    }
    _write_json(cfg.path("graphs", "diagnostics.json"), summary)
    return summary


def cmd_solve(cfg: RunConfig) -> dict:
    graphs = _read_graphs(cfg)
    os.makedirs(cfg.path("solve"), exist_ok=True)
    sa = simple_average(graphs)
    write_matrix(sa, cfg.path("solve", "SA.csv"))
    _write_json(cfg.path("solve", "SA.json"),
                {"config": cfg.to_dict(), "method": "SA", "weights": [1.0] * len(graphs),
                 "views": graphs.ids})
    out = {}
    for ind in TRUTH_IDS:
        result = solve_multicg(graphs, cfg.solver(ind))
        write_matrix(result.O, cfg.path("solve", f"multicg_{ind}.csv"), order=graphs.order)
        doc = result.to_dict()
        doc.update(config_run=cfg.to_dict(), indicator=ind, views=graphs.ids,
                   order=list(graphs.order))
        _write_json(cfg.path("solve", f"multicg_{ind}.json"), doc)
        out[ind] = {"alpha": result.config.alpha, "iterations": result.iterations,
                    "converged": result.converged}
    return out


def _methods(graphs, sa, consensus):
    methods = {method_label(m.factor): m for m in graphs}
    methods["SA"] = sa
    methods["multi-CG"] = consensus
    return methods


def cmd_evaluate(cfg: RunConfig) -> dict:
    graphs = _read_graphs(cfg)
    truth = _read_truth(cfg)
    sa = read_matrix(_need(cfg.path("solve", "SA.csv"), "SA result"), "SA")
    reports = []
    tables = {}
    for ind in TRUTH_IDS:
        consensus = read_matrix(_need(cfg.path("solve", f"multicg_{ind}.csv"),
                                      f"multi-CG result for {ind}"), "multi-CG")
        methods = _methods(graphs, sa, consensus)
        for name, matrix in methods.items():
            if matrix.order != truth[ind].order:
                raise InputError(f"{name}: entity order differs from {ind} truth")
        rows = comparison_table(methods, truth[ind], cfg.k)
        _write_text(cfg.path("eval", f"avgdcg_{ind}.csv"), format_table(rows, cfg.k))
        tables[ind] = rows
        for name, matrix in methods.items():
            for k in cfg.k:
                rep = avg_dcg(matrix, truth[ind], k, method=name, truth_id=ind)
                reports.append(rep.to_dict())
    _write_json(cfg.path("eval", "reports.json"), {"config": cfg.to_dict(), "reports": reports})
    return tables


def cmd_sweep_alpha(cfg: RunConfig) -> dict:
    graphs = _read_graphs(cfg)
    truth = _read_truth(cfg)
    rows = []
    for alpha in cfg.alpha_grid:
        result = solve_multicg(graphs, cfg.solver(alpha=alpha))
        candidate = CorrelationMatrix("multi-CG", graphs.order, result.O)
        for ind in TRUTH_IDS:
            for k in cfg.k:
                rows.append((alpha, ind, k, avg_dcg(candidate, truth[ind], k).avg_dcg))
    summary = {}
    for ind in TRUTH_IDS:
        for k in cfg.k:
            vals = [r[3] for r in rows if r[1] == ind and r[2] == k]
            summary.setdefault(ind, {})[str(k)] = {
                "min": min(vals), "max": max(vals), "spread": max(vals) - min(vals),
                "mean": float(np.mean(vals))}
    lines = ["alpha,indicator,k,avg_dcg"] + [f"{a!r},{i},{k},{v:.6f}" for a, i, k, v in rows]
    _write_text(cfg.path("sweep", "sweep.csv"), "\n".join(lines) + "\n")
    _write_json(cfg.path("sweep", "sweep.json"), {"config": cfg.to_dict(), "summary": summary})
    return summary


def parse_seeds(text: str) -> list[int]:
    """``"1-50"`` or ``"1,2,7"`` or a mix like ``"1-3,9"``."""
    seeds = []
    for part in str(text).replace(" ", "").split(","):
        if not part:
            continue
        if "-" in part:
            lo, hi = part.split("-", 1)
            seeds.extend(range(int(lo), int(hi) + 1))
        else:
            seeds.append(int(part))
    if not seeds:
        raise InputError("no seeds given")
    return seeds


def run_synth(n=20, m=6, noise_scale=0.5, pattern="per-pair-random", seeds=range(1, 51),
              alpha=0.25, k=10, tol=1e-8, max_iter=1000, reliability=1.0) -> dict:
    """Compare multi-CG against simple averaging on planted scenarios."""
    cfg = NoiseConfig(noise_scale=noise_scale, reliability_pattern=pattern, n_views=m,
                      reliability=reliability)
    solver = SolverConfig(alpha=alpha, tol=tol, max_iter=max_iter)
    per_seed = []
    for seed in seeds:
        sc = generate_planted(n, cfg, seed)
        mcg = score_recovery(sc, solve_multicg(sc.views, solver).O, k)
        sa = score_recovery(sc, simple_average(sc.views), k)
        per_seed.append({"seed": int(seed), "multicg": mcg, "sa": sa, "gap": mcg - sa})
    gaps = [r["gap"] for r in per_seed]
    wins = sum(g > 0 for g in gaps)
    ties = sum(g == 0 for g in gaps)
    total = len(per_seed)
    return {
        "config": {"n": n, "noise": asdict(cfg), "solver": solver.to_dict(), "k": k,
                   "seeds": [int(s) for s in seeds]},
        "per_seed": per_seed,
        "summary": {"wins": wins, "ties": ties, "losses": total - wins - ties,
                    "win_rate": wins / total, "non_loss_rate": (wins + ties) / total,
                    "mean_gap": float(np.mean(gaps))},
    }


def cmd_synth(args) -> dict:
    k = _int_list(args.k)[0] if args.k else 10
    report = run_synth(n=args.n, m=args.m, noise_scale=args.noise, pattern=args.pattern,
                       seeds=parse_seeds(args.seeds), alpha=args.alpha or 0.25, k=k,
                       max_iter=args.max_iter, reliability=args.reliability)
    out = args.out or "out"
    _write_json(os.path.join(out, "synth", "report.json"), report)
    lines = ["seed,multicg,sa,gap"] + [
        f"{r['seed']},{r['multicg']:.6f},{r['sa']:.6f},{r['gap']:.6f}" for r in report["per_seed"]]
    _write_text(os.path.join(out, "synth", "report.csv"), "\n".join(lines) + "\n")
    return report["summary"]


# -- entry point ------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="multicg", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="INI file with a [multicg] section")
        p.add_argument("--out", help="output directory")
        p.add_argument("--start", help="window start date YYYY-MM-DD")
        p.add_argument("--end", help="window end date YYYY-MM-DD")
        p.add_argument("--lags", help="comma-separated non-zero day lags, e.g. -2,-1,1,2")
        p.add_argument("--sma", type=int, help="moving-average window in days")
        p.add_argument("--alpha", type=float, help="penalty weight for every indicator")
        p.add_argument("--k", help="comma-separated top-k cut-offs")
        return p

    common(sub.add_parser("build-graphs", help="build factor and ground-truth matrices"))
    common(sub.add_parser("solve", help="fit multi-CG and simple averaging"))
    common(sub.add_parser("evaluate", help="avgDCG tables against each indicator"))
    sw = common(sub.add_parser("sweep-alpha", help="avgDCG as a function of alpha"))
    sw.add_argument("--alphas", help="comma-separated alpha grid")

    sy = sub.add_parser("synth", help="multi-CG vs averaging on planted scenarios")
    sy.add_argument("--out")
    sy.add_argument("--n", type=int, default=20)
    sy.add_argument("--m", type=int, default=6)
    sy.add_argument("--noise", type=float, default=0.5)
    sy.add_argument("--pattern", default="per-pair-random", choices=["uniform",
                    "per-pair-random", "blockwise"])
    sy.add_argument("--reliability", type=float, default=1.0,
                    help="reliability used by the uniform pattern")
    sy.add_argument("--seeds", "--seed", default="1-50")
    sy.add_argument("--alpha", type=float)
    sy.add_argument("--k", default="10")
    sy.add_argument("--max-iter", type=int, default=1000)
    return parser


STAGES = {
    "build-graphs": cmd_build_graphs,
    "solve": cmd_solve,
    "evaluate": cmd_evaluate,
    "sweep-alpha": cmd_sweep_alpha,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "synth":
            result = cmd_synth(args)
        else:
            result = STAGES[args.command](resolve_config(args))
    except NumericalError as exc:
        print(f"multicg {args.command}: numerical failure: {exc}", file=sys.stderr)
        return 2
    except (InputError, OSError) as exc:
        print(f"multicg {args.command}: input error: {exc}", file=sys.stderr)
        return 1
    print(json.dumps(result, indent=2, sort_keys=True, default=_jsonable))
    return 0


def _jsonable(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    raise TypeError(type(obj).__name__)


if __name__ == "__main__":
    sys.exit(main())
