"""Command-line runner: INI config in, JSON report and CSV table out.

Exit codes: 0 success, 1 a checked inequality failed, 2 config error,
3 dimension cap exceeded.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import hashlib
import io
import json
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .commit import CommitmentParams, build_pair, hiding_metrics, hiding_threshold_check
from .config import DimensionCapError, LabError, Tolerances
from .extractor import (ShadowConfig, build_extractor_povm, build_list, extractor_attack, shadow_estimate,
                        success_prob_exact, success_prob_sampled, uhlmann_unitary_overlap)
from .hashfam import HashFamily, pairwise_check
from .owsg import KINDS, ToyInstance, accept_table, correctness_prob, empirical_delta, good_set_report, \
    uniform_guess_winprob
from .reduction import contradiction_check, dense_attack, identity_attack, read_unitary, run_adversary
from .svsi import near_orthogonal_svsi, orthogonal_svsi, security_accounting, to_ivowsg

EXIT_OK, EXIT_VIOLATION, EXIT_CONFIG, EXIT_CAP = 0, 1, 2, 3
COMMANDS = ("lemma1", "hiding", "binding", "extract", "hashcheck", "svsi", "report")
SLACK = 1e-9


class ConfigError(LabError):
    pass


# ---------------------------------------------------------------------------
# config


def _ints(text: str, field: str) -> tuple[int, ...]:
    text = text.strip()
    try:
        if ".." in text:
            lo, hi = text.split("..")
            return tuple(range(int(lo), int(hi) + 1))
        return tuple(int(x) for x in text.split(","))
    except ValueError:
        raise ConfigError(f"{field}: expected an integer, a comma list or lo..hi, got {text!r}") from None


def _floats(text: str, field: str) -> tuple[float, ...]:
    try:
        return tuple(float(x) for x in text.split(","))
    except ValueError:
        raise ConfigError(f"{field}: expected numbers, got {text!r}") from None


@dataclass(frozen=True)
class ExperimentConfig:
    kind: str = "bb84-pure"
    lambdas: tuple[int, ...] = (2,)
    eta: float = 0.0
    key_probs: tuple[float, ...] | None = None
    D: float = 1.0
    p: float = 2.0
    t: int = 1
    m: int | None = None
    r_values: tuple[float, ...] | None = None
    backend: str = "exact"
    epsilon: float = 1 / 8
    omega: float | None = None
    threshold: float = 3 / 4
    t_samples: int | None = None
    seed: int | None = None
    runs: int = 1000
    attack: str = "extractor"
    unitary_file: str | None = None
    z_dim: int = 1
    relabel: bool = True
    q: float | None = None
    scan_lambdas: tuple[int, ...] = ()
    hash_pairs: tuple[tuple[int, int], ...] = ((2, 1),)
    svsi_kind: str = "orthogonal"
    tol_inv: float = 0.0
    adversaries: int = 100
    workers: int = 1
    tolerances: Tolerances = Tolerances()

    def shadow(self) -> ShadowConfig:
        return ShadowConfig(self.epsilon, self.omega, self.threshold, self.backend, self.t_samples)

    def params(self, lam: int) -> CommitmentParams:
        return CommitmentParams(lam, self.D, self.t, self.p, self.m)

    def instance(self, lam: int):
        inst = ToyInstance(self.kind, lam, self.eta, self.key_probs).build()
        return replace(inst, tol=self.tolerances)

    def as_dict(self) -> dict:
        out = {}
        for name in self.__dataclass_fields__:
            v = getattr(self, name)
            out[name] = v.as_dict() if isinstance(v, Tolerances) else v
        return _jsonable(out)

    def digest(self) -> str:
        return hashlib.sha256(_dumps(self.as_dict()).encode()).hexdigest()[:16]


def parse_config(text: str, seed: int | None = None, backend: str | None = None) -> ExperimentConfig:
    cp = configparser.ConfigParser()
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse config: {exc}") from None
    known = {"instance", "params", "shadow", "binding", "hashcheck", "svsi", "run", "tolerances"}
    stray = set(cp.sections()) - known
    if stray:
        raise ConfigError(f"unknown section(s): {sorted(stray)}")
    kw: dict = {}

    def get(section, key, conv, dest=None):
        if cp.has_option(section, key):
            field = f"[{section}] {key}"
            raw = cp.get(section, key)
            try:
                kw[dest or key] = conv(raw, field)
            except ConfigError:
                raise
            except ValueError:
                raise ConfigError(f"{field}: invalid value {raw!r}") from None

    num = lambda s, f: float(s)  # noqa: E731
    integer = lambda s, f: int(s)  # noqa: E731
    text_ = lambda s, f: s.strip()  # noqa: E731
    boolean = lambda s, f: {"true": True, "false": False, "yes": True, "no": False}[s.strip().lower()]  # noqa: E731

    get("instance", "kind", text_)
    get("instance", "lambda", _ints, "lambdas")
    get("instance", "eta", num)
    get("instance", "key_probs", _floats)
    get("params", "D", num)
    get("params", "p", num)
    get("params", "t", integer)
    get("params", "m", integer)
    get("params", "r", _floats, "r_values")
    get("shadow", "backend", text_)
    get("shadow", "epsilon", num)
    get("shadow", "omega", num)
    get("shadow", "threshold", num)
    get("shadow", "t_samples", integer)
    get("shadow", "seed", integer)
    get("shadow", "runs", integer)
    get("binding", "attack", text_)
    get("binding", "unitary_file", text_)
    get("binding", "z_dim", integer)
    try:
        get("binding", "relabel", boolean)
    except KeyError:
        raise ConfigError("[binding] relabel: expected true/false") from None
    get("binding", "q", num)
    get("binding", "lambdas", _ints, "scan_lambdas")
    get("svsi", "kind", text_, "svsi_kind")
    get("svsi", "tol_inv", num)
    get("svsi", "adversaries", integer)
    get("run", "workers", integer)
    if cp.has_option("hashcheck", "pairs"):
        pairs = []
        for item in cp.get("hashcheck", "pairs").split(","):
            try:
                lam, m = (int(x) for x in item.strip().split(":"))
            except ValueError:
                raise ConfigError(f"[hashcheck] pairs: expected lam:m items, got {item.strip()!r}") from None
            pairs.append((lam, m))
        kw["hash_pairs"] = tuple(pairs)
    if cp.has_section("tolerances"):
        base = Tolerances()
        over = {}
        for key, raw in cp.items("tolerances"):
            if key not in base.as_dict():
                raise ConfigError(f"[tolerances] {key}: unknown tolerance")
            try:
                over[key] = int(raw) if key == "dense_cap" else float(raw)
            except ValueError:
                raise ConfigError(f"[tolerances] {key}: invalid value {raw!r}") from None
        kw["tolerances"] = base.with_overrides(**over)
    if seed is not None:
        kw["seed"] = seed
    if backend is not None:
        kw["backend"] = backend
    cfg = ExperimentConfig(**kw)
    validate(cfg)
    return cfg


def validate(cfg: ExperimentConfig) -> None:
    if cfg.kind not in KINDS:
        raise ConfigError(f"[instance] kind: unknown kind {cfg.kind!r}; expected one of {KINDS}")
    for lam in cfg.lambdas:
        if not 1 <= lam <= 8:
            raise ConfigError(f"[instance] lambda: {lam} outside 1..8")
    if not 0 <= cfg.eta <= 1:
        raise ConfigError("[instance] eta: must lie in [0, 1]")
    if cfg.key_probs is not None and len(cfg.lambdas) > 1:
        raise ConfigError("[instance] key_probs: only allowed with a single lambda")
    if cfg.D <= 0:
        raise ConfigError("[params] D: must be positive")
    if cfg.p <= 1:
        raise ConfigError("[params] p: must exceed 1")
    if cfg.t < 0:
        raise ConfigError("[params] t: must be non-negative")
    if cfg.m is not None and not 1 <= cfg.m <= 8:
        raise ConfigError("[params] m: outside 1..8")
    if cfg.r_values is not None and min(cfg.r_values) < 0:
        raise ConfigError("[params] r: must be non-negative")
    if cfg.backend not in ("exact", "sampled"):
        raise ConfigError(f"[shadow] backend: expected exact or sampled, got {cfg.backend!r}")
    if cfg.backend == "sampled" and cfg.seed is None:
        raise ConfigError("[shadow] seed: mandatory for the sampled backend")
    if not 0 < cfg.epsilon < cfg.threshold < 1:
        raise ConfigError("[shadow] epsilon/threshold: need 0 < epsilon < threshold < 1")
    if cfg.omega is not None and not 0 < cfg.omega < 1:
        raise ConfigError("[shadow] omega: must lie in (0, 1)")
    if cfg.runs < 1:
        raise ConfigError("[shadow] runs: must be positive")
    if cfg.attack not in ("extractor", "identity", "file"):
        raise ConfigError(f"[binding] attack: expected extractor, identity or file, got {cfg.attack!r}")
    if cfg.attack == "file" and not cfg.unitary_file:
        raise ConfigError("[binding] unitary_file: required when attack = file")
    if cfg.z_dim < 1:
        raise ConfigError("[binding] z_dim: must be positive")
    if cfg.q is not None and cfg.q <= 0:
        raise ConfigError("[binding] q: must be positive")
    for lam, m in cfg.hash_pairs:
        if not (1 <= lam <= 8 and 1 <= m <= 8):
            raise ConfigError(f"[hashcheck] pairs: ({lam}, {m}) outside 1..8")
    if cfg.svsi_kind not in ("orthogonal", "near-orthogonal"):
        raise ConfigError(f"[svsi] kind: expected orthogonal or near-orthogonal, got {cfg.svsi_kind!r}")
    if cfg.adversaries < 0:
        raise ConfigError("[svsi] adversaries: must be non-negative")
    if not 1 <= cfg.workers <= 64:
        raise ConfigError("[run] workers: must lie in 1..64")


# ---------------------------------------------------------------------------
# serialization


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple, frozenset, set)):
        items = sorted(x) if isinstance(x, (set, frozenset)) else x
        return [_jsonable(v) for v in items]
    if isinstance(x, (np.bool_, bool)):
        return bool(x)
    if isinstance(x, (np.integer, int)):
        return int(x)
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if math.isfinite(x) else ("inf" if x > 0 else "-inf" if x < 0 else "nan")
    if isinstance(x, complex):
        return {"re": _jsonable(x.real), "im": _jsonable(x.imag)}
    return x


def _dumps(obj) -> str:
    return json.dumps(_jsonable(obj), sort_keys=True, indent=2) + "\n"


def versions() -> dict:
    return {"qcommit_lab": __version__, "numpy": np.__version__, "scipy": scipy.__version__}


def _csv_text(rows: list[dict]) -> str:
    buf = io.StringIO()
    if rows:
        fields = list(rows[0])
        for r in rows[1:]:
            fields += [f for f in r if f not in fields]
        w = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: _csv_cell(v) for k, v in r.items()})
    return buf.getvalue()


def _csv_cell(v):
    v = _jsonable(v)
    if isinstance(v, (list, dict)):
        return json.dumps(v, sort_keys=True)
    return repr(v) if isinstance(v, float) else v


@dataclass(frozen=True)
class Outcome:
    results: dict
    rows: list
    ok: bool
    summary: list


def _map(cfg: ExperimentConfig, fn, items):
    """Run ``fn`` over ``items`` with bounded parallelism, keeping input order."""
    if cfg.workers == 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
        return list(pool.map(fn, items))


# ---------------------------------------------------------------------------
# commands


def cmd_lemma1(cfg: ExperimentConfig) -> Outcome:
    def one(lam):
        inst = cfg.instance(lam)
        rs = cfg.r_values if cfg.r_values is not None else (cfg.params(lam).r,)
        return lam, [good_set_report(inst, cfg.p, r) for r in rs]

    results, rows, ok, summary = {}, [], True, []
    for lam, reps in _map(cfg, one, cfg.lambdas):
        results[f"lambda={lam}"] = [rep.as_dict() for rep in reps]
        for rep in reps:
            ok &= rep.chain_holds and rep.bound_holds
            summary.append(f"lambda={lam} p={rep.p:g} r={rep.r:g} mass={rep.mass_T:.6g} "
                           f"bound={rep.mass_bound:.6g}{' (vacuous)' if rep.vacuous else ''}")
            for k, size in enumerate(rep.sizes):
                rows.append({"lambda": lam, "p": rep.p, "r": rep.r, "key": k, "G_size": size,
                             "in_T": size > 2.0**rep.r})
    return Outcome(results, rows, ok, summary)


def _hiding_one(cfg: ExperimentConfig, lam: int) -> dict:
    inst = cfg.instance(lam)
    params = cfg.params(lam)
    pair = build_pair(inst, params, cfg.tolerances)
    metrics = hiding_metrics(pair)
    fam = params.family
    if cfg.backend == "exact":
        ext = success_prob_exact(inst, fam, cfg.shadow())
    else:
        ext = success_prob_sampled(inst, fam, cfg.shadow(), cfg.seed)
    povm = build_extractor_povm(inst, fam, params.t, cfg.relabel)
    uh = uhlmann_unitary_overlap(pair, povm)
    verdict = hiding_threshold_check(metrics, ext.success, SLACK)
    overlap_sq = uh.naimark_overlap**2
    fvdg_ok = metrics.fvdg_lower_margin >= -SLACK and metrics.fvdg_upper_margin >= -SLACK
    uhlmann_ok = metrics.fid_C >= overlap_sq - SLACK
    return {
        "lambda": lam,
        "params": params.as_dict(),
        "instance": inst.name,
        "block_count": pair.block_count,
        "metrics": metrics.as_dict(),
        "extractor": ext.as_dict(),
        "overlap": uh.as_dict(),
        "overlap_sq": overlap_sq,
        "threshold_check": verdict.as_dict(),
        "checks": {"fvdg": fvdg_ok, "uhlmann_overlap": uhlmann_ok,
                   "fid_ge_s_sq": verdict.fid_ok, "td_le_sqrt_1_minus_s_sq": verdict.td_ok},
    }


def cmd_hiding(cfg: ExperimentConfig) -> Outcome:
    results, rows, summary, ok = {}, [], [], True
    for res in _map(cfg, lambda lam: _hiding_one(cfg, lam), cfg.lambdas):
        lam = res["lambda"]
        results[f"lambda={lam}"] = res
        ok &= all(res["checks"].values())
        m = res["metrics"]
        rows.append({"lambda": lam, "m": res["params"]["m"], "t": res["params"]["t"],
                     "block_count": res["block_count"], "td_C": m["td_C"], "fid_C": m["fid_C"],
                     "success": res["extractor"]["success_prob"], "overlap": res["overlap"]["naimark_overlap"],
                     **{f"check_{k}": v for k, v in res["checks"].items()}})
        summary.append(f"lambda={lam} td_C={m['td_C']:.6g} fid_C={m['fid_C']:.6g} "
                       f"s={res['extractor']['success_prob']:.6g} overlap={res['overlap']['naimark_overlap']:.6g}")
    return Outcome(results, rows, ok, summary)


def _attack(cfg: ExperimentConfig, inst, params):
    if cfg.attack == "extractor":
        return extractor_attack(build_extractor_povm(inst, params.family, params.t, cfg.relabel))
    if cfg.attack == "identity":
        return identity_attack(inst, params, cfg.z_dim)
    return dense_attack(read_unitary(cfg.unitary_file, cfg.tolerances), cfg.z_dim, name=Path(cfg.unitary_file).name)


def _binding_one(cfg: ExperimentConfig, lam: int) -> dict:
    inst = cfg.instance(lam)
    params = cfg.params(lam)
    pair = build_pair(inst, params, cfg.tolerances)
    attack = _attack(cfg, inst, params)
    rep = run_adversary(inst, params.family, attack, params, pair)
    delta = empirical_delta(inst)
    q_sym = cfg.q if cfg.q is not None else rep.q
    contra = contradiction_check(rep, delta, rep.q, params.r, cfg.D, cfg.scan_lambdas) \
        if math.isfinite(rep.q) else None
    if cfg.scan_lambdas and math.isfinite(q_sym):
        contra = contra or {}
        contra["symbolic"] = contradiction_check(None, delta, q_sym, params.r, cfg.D, cfg.scan_lambdas)
    return {"lambda": lam, "params": params.as_dict(), "attack": attack.name, "block_count": pair.block_count,
            "delta_emp": delta, "adversary": rep.as_dict(), "contradiction": contra}


def cmd_binding(cfg: ExperimentConfig) -> Outcome:
    results, rows, summary, ok = {}, [], [], True
    for res in _map(cfg, lambda lam: _binding_one(cfg, lam), cfg.lambdas):
        lam = res["lambda"]
        adv = res["adversary"]
        results[f"lambda={lam}"] = res
        ok &= adv["verdict"] == "bound satisfied" and all(adv["checks"].values())
        rows.append({"lambda": lam, "attack": res["attack"], "block_count": res["block_count"],
                     "success_in_G": adv["success_in_G"], "win_prob": adv["win_prob"], "q": adv["q"],
                     "bound_rhs_8q": adv["bound_rhs_8q"], "bound_rhs_4q": adv["bound_rhs_4q"],
                     "verdict": adv["verdict"]})
        summary.append(f"lambda={lam} attack={res['attack']} win={adv['win_prob']:.6g} q={adv['q']:.6g} "
                       f"rhs={adv['bound_rhs_8q']:.6g} verdict: {adv['verdict']}")
    return Outcome(results, rows, ok, summary)


def cmd_extract(cfg: ExperimentConfig) -> Outcome:
    shadow = cfg.shadow()

    def one(lam):
        inst = cfg.instance(lam)
        fam = cfg.params(lam).family
        table = accept_table(inst)
        seeds = np.random.SeedSequence(cfg.seed).spawn(inst.num_keys) if cfg.backend == "sampled" else None
        est = []
        for k in range(inst.num_keys):
            rng = np.random.default_rng(seeds[k]) if seeds is not None else None
            est.append(shadow_estimate(inst, k, shadow, rng, table))
        lists = [build_list(e, shadow, inst.tol) for e in est]
        if cfg.backend == "exact":
            rep = success_prob_exact(inst, fam, shadow)
        else:
            rep = success_prob_sampled(inst, fam, shadow, cfg.seed)
        return lam, inst, table, est, lists, rep

    results, rows, summary, ok = {}, [], [], True
    for lam, inst, table, est, lists, rep in _map(cfg, one, cfg.lambdas):
        d = rep.as_dict()
        d["lists"] = [sorted(L) for L in lists]
        d["t_samples"] = shadow.samples_for(lam) if cfg.backend == "sampled" else None
        results[f"lambda={lam}"] = d
        if cfg.backend == "exact":
            ok &= all(rep.sandwich)
        for k in range(inst.num_keys):
            for kp in range(inst.num_keys):
                rows.append({"lambda": lam, "key": k, "candidate": kp, "b": float(est[k][kp]),
                             "p": float(table[kp, k]), "in_L": kp in lists[k]})
        summary.append(f"lambda={lam} backend={cfg.backend} success={rep.success:.6g} "
                       f"|L|={list(rep.L_sizes)} |G|={list(rep.G_sizes)}")
    return Outcome(results, rows, ok, summary)


def cmd_hashcheck(cfg: ExperimentConfig) -> Outcome:
    results, rows, summary = {}, [], []
    devs = _map(cfg, lambda lm: pairwise_check(HashFamily(*lm)), list(cfg.hash_pairs))
    for (lam, m), dev in zip(cfg.hash_pairs, devs):
        fam = HashFamily(lam, m)
        results[f"lambda={lam},m={m}"] = {"lambda": lam, "m": m, "H_size": fam.size, "deviation": dev}
        rows.append({"lambda": lam, "m": m, "H_size": fam.size, "deviation": dev})
        summary.append(f"lambda={lam} m={m} |H|={fam.size} deviation {dev:g}")
    return Outcome(results, rows, all(r["deviation"] == 0 for r in rows), summary)


def cmd_svsi(cfg: ExperimentConfig) -> Outcome:
    if cfg.svsi_kind == "orthogonal":
        svs = [orthogonal_svsi(lam, cfg.tol_inv) for lam in cfg.lambdas]
    else:
        svs = [near_orthogonal_svsi(tol_inv=cfg.tol_inv or 0.01)]
    rng = np.random.default_rng(np.random.SeedSequence(0 if cfg.seed is None else cfg.seed))
    results, rows, summary, ok = {}, [], [], True
    for sv in svs:
        iv = to_ivowsg(sv)
        n = sv.num_keys
        corr = correctness_prob(iv)
        guess = uniform_guess_winprob(iv)
        reps = [security_accounting(sv, rng.dirichlet(np.ones(n), size=n)) for _ in range(cfg.adversaries)]
        holds = sum(r.holds for r in reps)
        ok &= holds == len(reps)
        worst = max((r.total - r.bound for r in reps), default=-math.inf)
        results[f"{sv.name},lambda={sv.lam}"] = {
            "lambda": sv.lam, "name": sv.name, "tol_inv": sv.tol_inv, "correctness": corr,
            "uniform_guess_winprob": guess, "two_pow_minus_lambda": 2.0**-sv.lam,
            "adversaries": len(reps), "bound_holds": holds, "worst_slack": worst,
        }
        rows.append({"name": sv.name, "lambda": sv.lam, "correctness": corr, "uniform_guess": guess,
                     "adversaries": len(reps), "bound_holds": holds})
        summary.append(f"{sv.name} lambda={sv.lam} correctness={corr:.6g} uniform_guess={guess:.6g} "
                       f"bound holds {holds}/{len(reps)}")
    return Outcome(results, rows, ok, summary)


RUNNERS = {"lemma1": cmd_lemma1, "hiding": cmd_hiding, "binding": cmd_binding, "extract": cmd_extract,
           "hashcheck": cmd_hashcheck, "svsi": cmd_svsi}


def run_command(command: str, cfg: ExperimentConfig, out: Path) -> tuple[int, Path, Outcome]:
    outcome = RUNNERS[command](cfg)
    digest = cfg.digest()
    run_dir = out / f"{command}-{digest}"
    run_dir.mkdir(parents=True, exist_ok=True)
    report = {
        "command": command,
        "config": cfg.as_dict(),
        "config_hash": digest,
        "versions": versions(),
        "tolerances": cfg.tolerances.as_dict(),
        "results": outcome.results,
        "ok": outcome.ok,
    }
    (run_dir / "report.json").write_text(_dumps(report))
    (run_dir / "table.csv").write_text(_csv_text(outcome.rows))
    return (EXIT_OK if outcome.ok else EXIT_VIOLATION), run_dir, outcome


def cmd_report(directory: Path) -> tuple[list[dict], list[str]]:
    """One row per (run, table row) keyed by config hash; unreadable reports become warnings."""
    rows, warnings = [], []
    if not directory.exists():
        return rows, [f"{directory}: no such directory"]
    for path in sorted(directory.glob("*/report.json")):
        try:
            rep = json.loads(path.read_text())
            command, digest = rep["command"], rep["config_hash"]
            table = list(csv.DictReader(io.StringIO((path.parent / "table.csv").read_text())))
        except (OSError, ValueError, KeyError) as exc:
            warnings.append(f"{path}: {type(exc).__name__}: {exc}")
            continue
        base = {"config_hash": digest, "command": command, "ok": rep.get("ok")}
        if not table:
            rows.append(base)
        for r in table:
            rows.append({**base, **r})
    return rows, warnings


# ---------------------------------------------------------------------------
# entry point


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="qcommit-lab", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--config", type=Path, help="INI experiment config (not used by report)")
    ap.add_argument("--out", type=Path, default=Path("runs"), help="output directory (default: runs)")
    ap.add_argument("--seed", type=int, help="override [shadow] seed")
    ap.add_argument("--backend", choices=("exact", "sampled"), help="override [shadow] backend")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "report":
        rows, warnings = cmd_report(args.out)
        for w in warnings:
            print(f"warning: {w}", file=sys.stderr)
        args.out.mkdir(parents=True, exist_ok=True)
        (args.out / "summary.csv").write_text(_csv_text(rows))
        (args.out / "summary.json").write_text(_dumps({"rows": rows, "warnings": warnings}))
        print(f"{len(rows)} row(s) -> {args.out / 'summary.csv'}")
        return EXIT_OK
    if args.config is None:
        print("error: --config is required", file=sys.stderr)
        return EXIT_CONFIG
    try:
        text = args.config.read_text()
    except OSError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        cfg = parse_config(text, args.seed, args.backend)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        code, run_dir, outcome = run_command(args.command, cfg, args.out)
    except DimensionCapError as exc:
        print(f"resource cap: {exc}", file=sys.stderr)
        return EXIT_CAP
    except (LabError, ValueError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    for line in outcome.summary:
        print(line)
    print(f"{'ok' if code == EXIT_OK else 'INEQUALITY VIOLATED'} -> {run_dir}")
    return code


if __name__ == "__main__":
    sys.exit(main())
