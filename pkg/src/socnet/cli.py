"""Command-line experiments. Each subcommand writes its result file plus a
``<result>.manifest.json`` alongside it."""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import platform
import sys
import time
import zlib
from pathlib import Path

import numpy as np

from . import __version__
from .errors import CapExceeded, ContractError

OUT_ENV = "SOCNET_OUTPUT_DIR"
DEFAULT_OUT = "results"
SUBSTREAMS = ("phase1", "phase2", "ce", "ties", "main")

SCHEMA = {
    "ingest": {"edges.csv": ["u", "v", "p"], "ids.json": "{external_id: internal_id}"},
    "diffuse": {"spread.csv": ["quantity", "value", "se", "method"]},
    "two-phase": {"two-phase.csv": ["policy", "k1", "d", "value", "se", "runs", "seeds1"]},
    "prefs-generate": {"corpus.csv": ["topic", "node", "ranking"]},
    "prefs-validate": {"validation.csv": ["metric", "value"]},
    "msm": {"msm.csv": ["i", "j", "mean_distance", "similarity"]},
    "aggregate": {"aggregate.csv": ["rank", "ranking"]},
    "select-reps": {"reps.csv": ["order", "node"], "error.csv (with --corpus)": ["k", "mean_delta", "se"]},
    "ewi": {"ewi.csv": ["mu", "sigma", "mean_delta", "se", "violated", "feasible"]},
    "formation": {"formation.csv": ["run", "n", "distance", "stable"],
                  "formation.log.json": "per run: list of events"},
    "deviation": {"deviation.csv": ["run", "n", "distance", "outcome"]},
    "ged": {"ged.json": "{distance, centers}"},
    "tu-game": {"tu-game.csv": ["node", "shapley", "gately", "tau"]},
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}\n{self.format_usage()}")


def substream(seed: int, name: str) -> np.random.Generator:
    """Independent generator per named component of one root seed."""
    key = zlib.crc32(name.encode())
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(key,)))


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (float, np.floating)):
        return "nan" if math.isnan(x) else repr(float(x))
    if isinstance(x, (list, tuple)):
        return " ".join(_fmt(v) for v in x)
    return str(x)


def _csv(header: list[str], rows) -> str:
    out = io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(x) for x in row])
    return out.getvalue()


def _read(path: str) -> str:
    try:
        return Path(path).read_text()
    except OSError as e:
        raise ContractError(f"cannot read {path}: {e.strerror}") from None


def _load_graph(path: str, directed: bool = False):
    from .graph import les_miserables, load_edge_list
    if path == "builtin:lesmis":
        return les_miserables()
    return load_edge_list(_read(path), directed=directed)


def _int_list(text: str | None) -> list[int]:
    if not text:
        return []
    return [int(x) for x in text.replace(",", " ").split()]


class Writer:
    def __init__(self, args, started: float):
        self.args = args
        self.started = started
        self.dir = Path(args.out)
        self.written: list[Path] = []

    def write(self, name: str, text: str) -> Path:
        self.dir.mkdir(parents=True, exist_ok=True)
        path = self.dir / name
        if path.exists() and not self.args.overwrite:
            raise ContractError(f"{path} exists; pass --overwrite to replace it")
        path.write_text(text)
        self.written.append(path)
        return path

    def manifests(self, extra: dict | None = None) -> None:
        import networkx
        import scipy
        config = {k: v for k, v in vars(self.args).items() if k not in ("func", "config")}
        for path in self.written:
            man = {
                "result": path.name,
                "subcommand": self.args.command,
                "config": config,
                "seed": getattr(self.args, "seed", None),
                "versions": {"socnet": __version__, "python": platform.python_version(),
                             "numpy": np.__version__, "scipy": scipy.__version__,
                             "networkx": networkx.__version__},
                "wall_time_s": round(time.time() - self.started, 3),
            }
            if extra:
                man.update(extra)
            mpath = path.with_name(path.name + ".manifest.json")
            mpath.write_text(json.dumps(man, indent=1, sort_keys=True, default=str) + "\n")


def _need_seed(args) -> int:
    if args.seed is None:
        raise UsageError(f"{args.command} is stochastic and needs --seed")
    return int(args.seed)


# subcommands --------------------------------------------------------------------------

def cmd_ingest(args, out: Writer):
    from .graph import id_map_json, to_trivalency, to_weighted_cascade
    g = _load_graph(args.graph, directed=args.directed)
    if args.model == "wc":
        g = to_weighted_cascade(g)
    elif args.model == "tv":
        g = to_trivalency(g, substream(_need_seed(args), "main"))
    out.write("edges.csv", _csv(["u", "v", "p"], g.edges))
    out.write("ids.json", id_map_json(g) + "\n")
    return {"nodes": g.n, "edges": len(g.edges)}


def _prepared_graph(args):
    from .graph import to_trivalency, to_weighted_cascade
    g = _load_graph(args.graph, directed=args.directed)
    if args.model == "wc":
        return to_weighted_cascade(g)
    if args.model == "tv":
        return to_trivalency(g, substream(_need_seed(args), "main"))
    return g.to_directed() if not g.directed else g


def cmd_diffuse(args, out: Writer):
    from .diffusion import DecaySchedule, estimate_nu, estimate_sigma, exact_nu, exact_sigma
    g = _prepared_graph(args)
    seeds = _int_list(args.seeds)
    rows = []
    decay = DecaySchedule.geometric(args.delta) if args.delta is not None else None
    if args.exact:
        rows.append(("sigma", exact_sigma(g, seeds), 0.0, "exact"))
        if decay:
            rows.append(("nu", exact_nu(g, seeds, decay), 0.0, "exact"))
    else:
        rng = substream(_need_seed(args), "main")
        est = estimate_sigma(g, seeds, args.iterations, rng)
        rows.append(("sigma", est.mean, est.se, "monte-carlo"))
        if decay:
            est = estimate_nu(g, seeds, decay, args.iterations, rng)
            rows.append(("nu", est.mean, est.se, "monte-carlo"))
    out.write("spread.csv", _csv(SCHEMA["diffuse"]["spread.csv"], rows))


def cmd_two_phase(args, out: Writer):
    from .diffusion import DecaySchedule, LivePool
    from .seeding import PoolSpread, greedy_hill_climb
    from .twophase import (STAGNATION, PoolTwoPhase, TwoPhaseConfig, default_delay_bound,
                           evaluate_two_phase_policy, first_phase_seeds, golden_section_k1,
                           h_objective)
    seed = _need_seed(args)
    g = _prepared_graph(args)
    decay = DecaySchedule.geometric(args.delta) if args.delta is not None else None
    pool = LivePool.sample(g, args.pool_size, substream(seed, "phase1"))
    evaluator = PoolTwoPhase(g, pool, decay)
    k = args.k

    def parse_d(text):
        if text in ("D", "d", "stagnation"):
            return STAGNATION
        return int(text)

    def greedy_s1(k1, d):
        if k1 == 0:
            return []
        obj = h_objective(evaluator, d, k - k1) if args.mode == "farsighted" and k1 < k \
            else PoolSpread(pool)
        return greedy_hill_climb(obj, range(g.n), k1).selected

    probes = []
    if args.k1 == "auto" or args.d == "auto":
        d_max = default_delay_bound(evaluator, k)
        fixed_k1 = None if args.k1 == "auto" else int(args.k1)
        fixed_d = None if args.d == "auto" else parse_d(args.d)

        def value(k1, d):
            dd = fixed_d if fixed_d is not None else d
            v = evaluator.value(greedy_s1(k1, dd), dd, k - k1)
            probes.append((k1, dd, v))
            return v

        if fixed_k1 is None:
            k1, d, _ = golden_section_k1(value, k, d_max)
            d = fixed_d if fixed_d is not None else d
        else:
            from .twophase import sequential_delay_max
            k1 = fixed_k1
            d = fixed_d if fixed_d is not None else \
                (0 if k1 == k else sequential_delay_max(lambda x: value(k1, x), d_max)[0])
    else:
        k1, d = int(args.k1), parse_d(args.d)
    config = TwoPhaseConfig(k=k, k1=k1, d=d, mode=args.mode, selector1=args.selector,
                            pool_size=args.pool_size, decay=decay)
    s1 = first_phase_seeds(g, config, substream(seed, "phase1"))
    rows = [("probe", pk1, pd, pv, "", "", "") for pk1, pd, pv in probes]
    est = evaluate_two_phase_policy(g, s1, d, k - k1, args.selector, args.runs,
                                    substream(seed, "phase2"), pool_size=args.pool_size)
    rows.append(("two-phase", k1, d, est.mean, est.se, args.runs, s1))
    single = TwoPhaseConfig(k=k, k1=k, d=0, selector1=args.selector, pool_size=args.pool_size)
    s_single = first_phase_seeds(g, single, substream(seed, "phase1"))
    est1 = evaluate_two_phase_policy(g, s_single, 0, 0, args.selector, args.runs,
                                     substream(seed, "phase2"), pool_size=args.pool_size)
    rows.append(("single-phase", k, 0, est1.mean, est1.se, args.runs, s_single))
    out.write("two-phase.csv", _csv(SCHEMA["two-phase"]["two-phase.csv"], rows))


def _pairs(args, n=None):
    from .preferences import read_pairs_csv
    return read_pairs_csv(_read(args.pairs), n)


def cmd_prefs_generate(args, out: Writer):
    from .prefmodels import generate
    g = _load_graph(args.graph)
    corpus = generate(g, _pairs(args, g.n), args.kind, args.topics,
                      substream(_need_seed(args), "main"), r=args.r, seed=args.seed)
    out.write("corpus.csv", corpus.to_csv())


def cmd_prefs_validate(args, out: Writer):
    from .prefmodels import read_corpus_csv, validate
    corpus = read_corpus_csv(_read(args.corpus))
    res = validate(corpus, _pairs(args, corpus.n))
    out.write("validation.csv", _csv(["metric", "value"], sorted(res.items())))


def cmd_msm(args, out: Writer):
    from .prefmodels import build_tr, msm_sp
    g = _load_graph(args.graph)
    table = build_tr(args.r)
    dist, sim = msm_sp(g, _pairs(args, g.n), table)
    rows = [(i, j, dist[i, j], sim[i, j]) for i in range(g.n) for j in range(i + 1, g.n)]
    out.write("msm.csv", _csv(SCHEMA["msm"]["msm.csv"], rows))


def cmd_aggregate(args, out: Writer):
    from .aggregation import aggregate
    from .preferences import read_profile_csv
    profile, skipped = read_profile_csv(_read(args.profile))
    res = aggregate(args.rule, profile, dictator=args.dictator, cap=args.cap)
    rows = [(i, list(p.ranking)) for i, p in enumerate(res.sorted())]
    out.write("aggregate.csv", _csv(["rank", "ranking"], rows))
    return {"skipped_rows": skipped}


def _similarity(args, n=None) -> np.ndarray:
    if args.similarity:
        return np.loadtxt(args.similarity, delimiter=",", ndmin=2)
    if args.pairs:
        model = _pairs(args, n)
        if args.graph and not args.empirical:
            from .prefmodels import build_tr, msm_sp
            _, sim = msm_sp(_load_graph(args.graph), model, build_tr(args.r))
            return sim
        sim = model.similarity()
        if np.isnan(sim).any():
            raise ContractError("pair file leaves some pairs unknown; pass --graph to complete it")
        return sim
    raise UsageError("need --similarity or --pairs")


def cmd_select_reps(args, out: Writer):
    from .aggregation import corpus_error, select_representatives
    from .prefmodels import read_corpus_csv
    rng = substream(_need_seed(args), "main")
    g = _load_graph(args.graph) if args.graph else None
    sim = _similarity(args, g.n if g else None) if (args.similarity or args.pairs) else None
    corpus = read_corpus_csv(_read(args.corpus)) if args.corpus else None
    M = select_representatives(args.method, sim, g, args.k, rng, rule=args.rule, corpus=corpus)
    out.write("reps.csv", _csv(["order", "node"], enumerate(M)))
    if corpus is not None and sim is not None:
        mean, se = corpus_error(args.rule, corpus, M, 1.0 - sim, substream(args.seed, "ties"))
        out.write("error.csv", _csv(["k", "mean_delta", "se"], [(args.k, mean, se)]))


def cmd_ewi(args, out: Writer):
    from .aggregation import ewi_test
    from .preferences import Profile, read_profile_csv
    rng = substream(_need_seed(args), "main")
    if args.profiles:
        profiles = [read_profile_csv(_read(p))[0] for p in args.profiles]
    else:
        import itertools
        perms = list(itertools.permutations(range(args.r)))
        profiles = [Profile([perms[i] for i in rng.integers(len(perms), size=args.voters)])
                    for _ in range(args.random_profiles)]
    mus = [float(x) for x in args.mu.split(",")]
    sigmas = [float(x) for x in args.sigma.split(",")]
    cells = ewi_test(args.rule, profiles, mus, sigmas, args.trials, rng)
    rows = [(c.mu, c.sigma, c.mean_delta, c.se, c.violated, c.feasible) for c in cells]
    out.write("ewi.csv", _csv(SCHEMA["ewi"]["ewi.csv"], rows))
    return {"violations": sum(c.violated for c in cells)}


def _positions(args):
    if args.position in ("low", "mid", "high", "L", "M", "H"):
        return args.position
    try:
        return json.loads(args.position)
    except json.JSONDecodeError:
        raise UsageError(f"--position must be low/mid/high or a JSON object") from None


def cmd_formation(args, out: Writer):
    from .formation import (ged_to_target, is_pairwise_stable, parse_topology, preset_base,
                            preset_conditions, run_recursive_formation)
    seed = _need_seed(args)
    top = parse_topology(args.topology)
    params = preset_conditions(top, args.delta, _positions(args), args.sigma_max)
    rows, logs = [], []
    for run in range(args.runs):
        rng = substream(seed, f"run{run}")

        def record(state):
            ok, _ = is_pairwise_stable(state, params)
            rows.append((run, state.n, ged_to_target(state, **top.ged_args).distance, ok))

        state = run_recursive_formation(params, args.n_max, rng, base=preset_base(top),
                                        round_cap=args.round_cap, on_stable=record)
        logs.append({"run": run, "edges": state.edges(), "events": state.log})
    out.write("formation.csv", _csv(SCHEMA["formation"]["formation.csv"], rows))
    out.write("formation.log.json", json.dumps(logs, default=float) + "\n")
    return {"params": {"c": params.c, "c0": params.c0, "gamma": params.gamma}}


def cmd_deviation(args, out: Writer):
    from .formation import deviation_experiment
    seed = _need_seed(args)
    rows, outcomes = [], []
    for run in range(args.runs):
        res = deviation_experiment(args.topology, args.node, args.param, args.direction,
                                   args.n_max, substream(seed, f"run{run}"),
                                   restore=_restore(args.restore), magnitude=args.magnitude,
                                   b=args.delta, sigma_max=args.sigma_max)
        outcomes.append(res.outcome)
        rows += [(run, n, d, res.outcome) for n, d in res.curve]
    out.write("deviation.csv", _csv(SCHEMA["deviation"]["deviation.csv"], rows))
    return {"outcomes": {c: outcomes.count(c) for c in sorted(set(outcomes))}}


def _restore(text):
    if text in ("low", "mid", "high", "L", "M", "H"):
        return text
    return json.loads(text)


def cmd_ged(args, out: Writer):
    from .formation import ged_to_target
    from .graph import load_edge_list
    import networkx as nx
    g = load_edge_list(_read(args.graph), directed=False)
    h = nx.Graph()
    h.add_nodes_from(range(g.n))
    h.add_edges_from((u, v) for u, v, _ in g.edges)
    target = {"kstar": "k-star", "k-star": "k-star", "star": "star", "complete": "complete",
              "bipartite": "bipartite-turan", "bipartite-turan": "bipartite-turan",
              "two-star": "two-star"}.get(args.target)
    if target is None:
        raise UsageError(f"unknown target {args.target!r}")
    res = ged_to_target(h, target, k=args.k)
    body = {"distance": int(res.distance)}
    if target in ("k-star", "two-star"):
        body["centers"] = [g.labels[c] for c in res.centers]
        body["retained"] = res.retained
    out.write("ged.json", json.dumps(body) + "\n")
    print(json.dumps(body))


def cmd_tu_game(args, out: Writer):
    from fractions import Fraction
    from .aggregation import gately, shapley_similarity, similarity_game, tau_value
    sim = _similarity(args)
    if args.exact:
        c = [[Fraction(str(x)) for x in row] for row in sim.tolist()]
    else:
        c = sim.tolist()
    n = len(c)
    if n > 16:
        raise CapExceeded(f"exact game solutions over 2^{n} coalitions", required=2 ** n)
    for i in range(n):
        c[i][i] = 0
    game = similarity_game(c)
    sh, ga = shapley_similarity(c), gately(game)
    tau, lam = tau_value(game, return_lambda=True)
    rows = [(i, float(sh[i]), float(ga[i]), float(tau[i])) for i in range(n)]
    out.write("tu-game.csv", _csv(SCHEMA["tu-game"]["tu-game.csv"], rows))
    return {"tau_lambda": str(lam)}


# parser -------------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="socnet", description="Social-network algorithm experiments.")
    p.add_argument("--schema", action="store_true", help="print result column schemas and exit")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    def add(name, func, help_text):
        sp = sub.add_parser(name, help=help_text)
        sp.add_argument("--seed", type=int)
        sp.add_argument("--out", help=f"output directory (default ${OUT_ENV} or ./{DEFAULT_OUT})")
        sp.add_argument("--overwrite", action="store_true")
        sp.add_argument("--config", help="JSON file of defaults; explicit flags win")
        sp.add_argument("--workers", type=int, default=os.cpu_count() or 1)
        sp.set_defaults(func=func)
        return sp

    def graph_args(sp, required=True):
        sp.add_argument("--graph", required=required,
                        help="edge list 'u v [p]' per line, or builtin:lesmis")
        sp.add_argument("--directed", action="store_true")

    sp = add("ingest", cmd_ingest, "parse and normalize an edge list")
    graph_args(sp)
    sp.add_argument("--model", choices=["none", "wc", "tv"], default="none")

    sp = add("diffuse", cmd_diffuse, "spread of a seed set")
    graph_args(sp)
    sp.add_argument("--model", choices=["none", "wc", "tv"], default="none")
    sp.add_argument("--seeds", required=True, help="comma-separated internal node ids")
    sp.add_argument("--iterations", type=int, default=10_000)
    sp.add_argument("--delta", type=float)
    sp.add_argument("--exact", action="store_true")

    sp = add("two-phase", cmd_two_phase, "two-phase seeding versus single phase")
    graph_args(sp)
    sp.add_argument("--model", choices=["none", "wc", "tv"], default="wc")
    sp.add_argument("--k", type=int, required=True)
    sp.add_argument("--k1", default="auto")
    sp.add_argument("--d", default="D", help="integer delay, D (stagnation) or auto")
    sp.add_argument("--selector", default="greedy", choices=["greedy", "gdd", "sd", "wd", "rmax",
                                                             "face", "spic"])
    sp.add_argument("--mode", choices=["myopic", "farsighted"], default="myopic")
    sp.add_argument("--delta", type=float)
    sp.add_argument("--runs", type=int, default=200)
    sp.add_argument("--pool-size", type=int, default=300)

    sp = add("prefs-generate", cmd_prefs_generate, "synthetic preference corpus")
    graph_args(sp)
    sp.add_argument("--pairs", required=True, help="CSV i,j,mu,sigma for edges")
    sp.add_argument("--kind", required=True, choices=["ic", "s-random", "s-mu", "s-sigma", "d", "r"])
    sp.add_argument("--topics", type=int, required=True)
    sp.add_argument("--r", type=int, default=5)

    sp = add("prefs-validate", cmd_prefs_validate, "compare a corpus with pair distance laws")
    sp.add_argument("--corpus", required=True)
    sp.add_argument("--pairs", required=True)

    sp = add("msm", cmd_msm, "complete pair distances along most similar paths")
    graph_args(sp)
    sp.add_argument("--pairs", required=True)
    sp.add_argument("--r", type=int, default=5)

    sp = add("aggregate", cmd_aggregate, "aggregate a profile")
    sp.add_argument("--profile", required=True)
    sp.add_argument("--rule", required=True)
    sp.add_argument("--dictator", type=int)
    sp.add_argument("--cap", type=int, default=5000)

    sp = add("select-reps", cmd_select_reps, "choose representatives")
    graph_args(sp, required=False)
    sp.add_argument("--method", required=True, choices=["greedy-min", "greedy-sum", "greedy-orig",
                                                        "degree-cen", "random-poll"])
    sp.add_argument("--k", type=int, required=True)
    sp.add_argument("--similarity", help="dense CSV similarity matrix")
    sp.add_argument("--pairs")
    sp.add_argument("--empirical", action="store_true", help="use --pairs as a complete model")
    sp.add_argument("--r", type=int, default=5)
    sp.add_argument("--rule", default="plurality")
    sp.add_argument("--corpus")

    sp = add("ewi", cmd_ewi, "expected weak insensitivity test of a rule")
    sp.add_argument("--rule", required=True)
    sp.add_argument("--profiles", nargs="*")
    sp.add_argument("--random-profiles", type=int, default=5)
    sp.add_argument("--voters", type=int, default=15)
    sp.add_argument("--r", type=int, default=4)
    sp.add_argument("--mu", default="0.1,0.2,0.3,0.4,0.5")
    sp.add_argument("--sigma", default="0.05,0.1,0.15,0.2")
    sp.add_argument("--trials", type=int, default=50)

    for name, func in (("formation", cmd_formation), ("deviation", cmd_deviation)):
        sp = add(name, func, "recursive network formation" if name == "formation"
                 else "single-entrant parameter deviation")
        sp.add_argument("--topology", required=True,
                        help="star, complete, diameter(d), bipartite-turan, two-star, k-star(k)")
        sp.add_argument("--n-max", type=int, default=20)
        sp.add_argument("--runs", type=int, default=1)
        sp.add_argument("--delta", type=float, default=0.8)
        sp.add_argument("--sigma-max", type=int)
        if name == "formation":
            sp.add_argument("--position", default="mid")
            sp.add_argument("--round-cap", type=int)
        else:
            sp.add_argument("--node", type=int, required=True, help="1-based entry number")
            sp.add_argument("--param", choices=["c", "c0", "gamma"], required=True)
            sp.add_argument("--direction", choices=["+", "-"], required=True)
            sp.add_argument("--restore", default="mid")
            sp.add_argument("--magnitude", type=float)

    sp = add("ged", cmd_ged, "edit distance to a reference topology")
    sp.add_argument("--graph", required=True)
    sp.add_argument("--target", required=True)
    sp.add_argument("--k", type=int)

    sp = add("tu-game", cmd_tu_game, "cooperative solutions of a similarity game")
    sp.add_argument("--similarity")
    sp.add_argument("--pairs")
    sp.add_argument("--graph")
    sp.add_argument("--empirical", action="store_true")
    sp.add_argument("--r", type=int, default=5)
    sp.add_argument("--exact", action="store_true", help="rational arithmetic")
    return p


def _config_defaults(parser, argv):
    """Install values from --config as subcommand defaults so explicit flags
    still win; options it supplies stop being required."""
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if not known.config:
        return
    try:
        conf = json.loads(_read(known.config))
    except json.JSONDecodeError as e:
        raise ContractError(f"{known.config}: {e}") from None
    if not isinstance(conf, dict):
        raise ContractError(f"{known.config}: expected a JSON object")
    command = next((a for a in argv if not a.startswith("-") and a in _subcommands(parser)), None)
    if command is None:
        return
    sub = _subcommands(parser)[command]
    dests = {act.dest: act for act in sub._actions}
    conf = {k.replace("-", "_"): v for k, v in conf.items()}
    for key in conf:
        if key not in dests:
            raise UsageError(f"config key {key!r} is not a {command} option")
        dests[key].required = False
    sub.set_defaults(**conf)


def _subcommands(parser) -> dict:
    for act in parser._actions:
        if isinstance(act, argparse._SubParsersAction):
            return act.choices
    return {}


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        _config_defaults(parser, argv)
        args = parser.parse_args(argv)
        if args.schema:
            print(json.dumps(SCHEMA, indent=1))
            return 0
        if not args.command:
            raise UsageError(parser.format_usage())
        if args.out is None:
            args.out = os.environ.get(OUT_ENV, DEFAULT_OUT)
        started = time.time()
        out = Writer(args, started)
        extra = args.func(args, out)
        out.manifests(extra if isinstance(extra, dict) else None)
        return 0
    except UsageError as e:
        print(str(e).rstrip(), file=sys.stderr)
        return 1
    except CapExceeded as e:
        print(f"refused: {e}", file=sys.stderr)
        return 3
    except ContractError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
