"""Command-line entry point: ``relsaea <command> ...``.

Every command writes into a fresh output directory together with a
``manifest.json`` from which it can be re-run (``--from-manifest``).
Existing directories are never written into.
"""

from __future__ import annotations

import argparse
import csv
import datetime as _dt
import hashlib
import json
import logging
import os
import re
import statistics
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import yaml

from . import __version__
from .backends import BACKEND_KINDS, BackendConfig, TranscriptWriter, make_backend
from .exceptions import ConfigError, DomainError, RelsaeaError
from .offline import DEFAULT_STAGES, build_offline_suite, evaluate_backend, read_suite, write_suite
from .problems import expand_suite, get_problem, list_problems
from .prompting import DEFAULT_TEMPLATE, template_hash
from .rlkit import RewardParams, gen_rl_dataset, score_response_file, write_dataset
from .saea import RunAborted, RunConfig, run

logger = logging.getLogger("relsaea")

MANIFEST_SCHEMA_VERSION = 1
EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


def _now() -> str:
    return _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")


def _sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def _fresh_dir(path: Path) -> Path:
    if path.exists():
        raise ConfigError(f"output directory {path} already exists; choose another --out")
    path.mkdir(parents=True)
    return path


def _write_manifest(path: Path, manifest: dict):
    tmp = path.with_suffix(".tmp")
    tmp.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    os.replace(tmp, path)


def _base_manifest(command: str, config: dict, template_version: str = DEFAULT_TEMPLATE) -> dict:
    return {
        "schema_version": MANIFEST_SCHEMA_VERSION,
        "command": command,
        "package_version": __version__,
        "config": config,
        "template_version": template_version,
        "template_sha256": template_hash(template_version),
        "started_at": _now(),
        "finished_at": None,
        "status": "running",
        "files": {},
    }


def _load_manifest(path, command: str) -> dict:
    path = Path(path)
    if path.is_dir():
        path = path / "manifest.json"
    try:
        m = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read manifest {path}: {exc}") from None
    if m.get("schema_version") != MANIFEST_SCHEMA_VERSION:
        raise ConfigError(f"manifest {path}: unsupported schema_version {m.get('schema_version')!r}")
    if m.get("command") != command:
        raise ConfigError(f"manifest {path} was written by '{m.get('command')}', not '{command}'")
    if m.get("template_sha256") != template_hash(m.get("template_version", DEFAULT_TEMPLATE)):
        raise ConfigError(f"manifest {path}: prompt templates changed since this manifest was written")
    return m


def _fmt(v) -> str:
    return repr(float(v))


def _add_backend_flags(p):
    p.add_argument("--backend", choices=BACKEND_KINDS, help="relation backend (default oracle)")
    p.add_argument("--endpoint-url", help="OpenAI-compatible base URL (llm backend)")
    p.add_argument("--model", help="model name (llm backend)")
    p.add_argument("--temperature", type=float)
    p.add_argument("--max-retries", type=int)
    p.add_argument("--concurrency", type=int, help="parallel requests per generation (llm backend)")
    p.add_argument("--backend-seed", type=int, help="seed of the random backend")


def _backend_overrides(args) -> dict:
    pairs = {
        "kind": args.backend,
        "endpoint_url": args.endpoint_url,
        "model_name": args.model,
        "temperature": args.temperature,
        "max_retries": args.max_retries,
        "concurrency_limit": args.concurrency,
        "seed": args.backend_seed,
    }
    return {k: v for k, v in pairs.items() if v is not None}


# --------------------------------------------------------------------------
# run


def _slug(problem_id: str) -> str:
    return re.sub(r"[^A-Za-z0-9]+", "-", problem_id).strip("-")


def run_dir_name(cfg: RunConfig) -> str:
    return f"{_slug(cfg.problem)}-d{cfg.D}-{cfg.backend.kind}-s{cfg.seed}"


def _parse_batch(text: str):
    m = re.fullmatch(r"\s*seeds\s*=\s*(.+)", text)
    if not m:
        raise ConfigError(f"--batch expects 'seeds=A..B' or 'seeds=a,b,c', got {text!r}")
    body = m.group(1).strip()
    rng = re.fullmatch(r"(-?\d+)\.\.(-?\d+)", body)
    if rng:
        lo, hi = int(rng.group(1)), int(rng.group(2))
        if hi < lo:
            raise ConfigError(f"empty seed range {body}")
        return list(range(lo, hi + 1))
    try:
        return [int(s) for s in body.split(",") if s.strip()]
    except ValueError:
        raise ConfigError(f"bad seed list {body!r}") from None


def _run_config_from_args(args) -> dict:
    data = {}
    if args.config:
        try:
            loaded = yaml.safe_load(Path(args.config).read_text(encoding="utf-8")) or {}
        except (OSError, yaml.YAMLError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from None
        if not isinstance(loaded, dict):
            raise ConfigError(f"config {args.config} must be a mapping")
        data.update(loaded)
    flags = {
        "problem": args.problem, "D": args.d, "M": args.m, "seed": args.seed,
        "max_fes": args.max_fes, "pop_size": args.pop_size, "n_eval": args.n_eval,
        "context_size": args.context_size, "criterion": args.criterion, "beta": args.beta,
    }
    data.update({k: v for k, v in flags.items() if v is not None})
    backend = dict(data.get("backend") or {})
    backend.update(_backend_overrides(args))
    data["backend"] = backend
    return data


def _write_trajectory(path: Path, result):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["fes", result.indicator])
        for i, v in enumerate(result.trajectory, 1):
            w.writerow([i, _fmt(v)])


def _write_front(path: Path, result):
    D = result.front_X.shape[1]
    M = result.front_F.shape[1]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow([f"x{i + 1}" for i in range(D)] + [f"f{j + 1}" for j in range(M)])
        for x, f in zip(result.front_X, result.front_F):
            w.writerow([_fmt(v) for v in x] + [_fmt(v) for v in f])


def _write_generations(path: Path, result):
    with open(path, "w", encoding="utf-8") as fh:
        for g in result.generations:
            fh.write(json.dumps(g, sort_keys=True) + "\n")


def _write_result_files(out: Path, result, manifest: dict):
    _write_trajectory(out / "trajectory.csv", result)
    _write_generations(out / "generations.jsonl", result)
    manifest["files"]["trajectory"] = "trajectory.csv"
    manifest["files"]["generations"] = "generations.jsonl"
    if result.front_F is not None:
        _write_front(out / "front.csv", result)
        manifest["files"]["front"] = "front.csv"
    manifest["summary"] = {
        "indicator": result.indicator,
        "final": float(result.trajectory[-1]) if len(result.trajectory) else None,
        "used_fes": result.used_fes,
        "generations": len(result.generations),
    }


def execute_run(cfg_dict: dict, out_root: str) -> tuple:
    """Run one configuration into ``out_root/<run name>``; returns (exit code, run dir)."""
    cfg = RunConfig.from_dict(cfg_dict)
    problem = get_problem(cfg.problem, cfg.D, cfg.M)
    cfg.validate(problem)
    out = _fresh_dir(Path(out_root) / run_dir_name(cfg))
    manifest = _base_manifest("run", cfg.to_dict(), cfg.template_version)
    manifest["backend"] = {"kind": cfg.backend.kind, "model": cfg.backend.model_name or None}
    manifest["seed"] = cfg.seed
    manifest["problem"] = cfg.problem
    transcript = None
    if cfg.backend.kind == "llm":
        transcript = out / "transcript.jsonl"
        transcript.touch()
        manifest["files"]["transcript"] = "transcript.jsonl"
    _write_manifest(out / "manifest.json", manifest)
    code = EXIT_OK
    try:
        result = run(cfg, transcript_path=transcript)
        manifest["status"] = "completed"
    except RunAborted as exc:
        result = exc.result
        manifest["status"] = "aborted"
        manifest["error"] = str(exc)
        logger.error("%s: run aborted (%s); partial outputs kept", out, exc)
        code = EXIT_FAIL
    _write_result_files(out, result, manifest)
    manifest["finished_at"] = _now()
    _write_manifest(out / "manifest.json", manifest)
    return code, str(out)


def _run_job(job):
    cfg_dict, out_root = job
    try:
        return execute_run(cfg_dict, out_root)
    except RelsaeaError as exc:
        logger.error("%s", exc)
        return EXIT_USAGE, None


def cmd_run(args) -> int:
    if args.from_manifest:
        cfg_dict = _load_manifest(args.from_manifest, "run")["config"]
        if args.out is None:
            raise ConfigError("--from-manifest needs --out for the re-run")
    else:
        cfg_dict = _run_config_from_args(args)
    # validate once up front so config errors surface before any directory exists
    base = RunConfig.from_dict(cfg_dict)
    base.validate(get_problem(base.problem, base.D, base.M))
    out_root = args.out or "runs"
    seeds = _parse_batch(args.batch) if args.batch else [base.seed]
    jobs = []
    for s in seeds:
        d = base.to_dict()
        d["seed"] = s
        jobs.append((d, out_root))
    if args.jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(_run_job, jobs))
    else:
        results = [_run_job(j) for j in jobs]
    worst = EXIT_OK
    for code, path in results:
        if path:
            print(f"{'ok' if code == EXIT_OK else 'aborted'}\t{path}")
        worst = max(worst, code)
    return worst


# --------------------------------------------------------------------------
# offline-eval


def cmd_offline_eval(args) -> int:
    if args.from_manifest:
        m = _load_manifest(args.from_manifest, "offline-eval")
        conf = m["config"]
        if args.out is None:
            raise ConfigError("--from-manifest needs --out for the re-run")
    else:
        if not args.build and not args.suite:
            raise ConfigError("give a suite file or --build")
        backend = BackendConfig(**_backend_overrides(args))
        if backend.kind == "random" and backend.seed is None:
            backend.seed = args.seed
        conf = {
            "suite": str(args.suite) if args.suite else None,
            "suite_sha256": _sha256_file(args.suite) if args.suite else None,
            "build": {
                "problems": expand_suite(args.problems),
                "D": args.d,
                "stages": list(args.stages),
                "criterion": args.criterion,
                "seed": args.seed,
                "n_ctx": args.n,
                "n_query": args.q,
            } if args.build else None,
            "backend": backend.to_dict(),
            "reference": args.reference,
            "limit": args.limit,
        }
    backend_cfg = BackendConfig(**conf["backend"]).validate()
    if conf["suite"]:
        if _sha256_file(conf["suite"]) != conf["suite_sha256"]:
            raise ConfigError(f"suite {conf['suite']} changed since the manifest was written")
        suite = read_suite(conf["suite"])
    else:
        suite = build_offline_suite(**conf["build"])
    if conf["limit"]:
        suite = sorted(suite, key=lambda i: i.id)[: conf["limit"]]

    out = _fresh_dir(Path(args.out or "offline-eval"))
    manifest = _base_manifest("offline-eval", conf)
    # bump when a metric definition changes
    manifest["metric_definitions"] = "v1"
    manifest["backend"] = {"kind": backend_cfg.kind, "model": backend_cfg.model_name or None}
    transcript = None
    if backend_cfg.kind == "llm":
        transcript = TranscriptWriter(out / "transcript.jsonl")
        (out / "transcript.jsonl").touch()
        manifest["files"]["transcript"] = "transcript.jsonl"
    _write_manifest(out / "manifest.json", manifest)

    write_suite(suite, out / "suite.jsonl")
    backend = make_backend(backend_cfg, transcript=transcript)
    try:
        report = evaluate_backend(suite, backend, reference=conf["reference"])
    finally:
        if hasattr(backend, "close"):
            backend.close()
    report.write_csv(out / "metrics.csv")
    report.write_instances_csv(out / "metrics_instances.csv")
    manifest["files"].update({"suite": "suite.jsonl", "metrics": "metrics.csv",
                              "metrics_instances": "metrics_instances.csv"})
    manifest["summary"] = {
        "instances": len(suite),
        "failed": report.failed,
        **{k: report.summary(k) for k in ("element_acc", "spearman_rho", "binary_acc", "rank_acc")},
    }
    manifest["status"] = "completed" if not report.failed else "partial"
    manifest["finished_at"] = _now()
    _write_manifest(out / "manifest.json", manifest)
    print(f"{len(report.rows)} instances scored, {len(report.failed)} failed -> {out}")
    for k in ("element_acc", "spearman_rho"):
        print(f"{k}\t{report.summary(k):.4f}")
    return EXIT_OK if report.rows and not report.failed else EXIT_FAIL


# --------------------------------------------------------------------------
# gen-dataset / score-responses


def cmd_gen_dataset(args) -> int:
    if args.from_manifest:
        conf = _load_manifest(args.from_manifest, "gen-dataset")["config"]
        if args.out is None:
            raise ConfigError("--from-manifest needs --out for the re-run")
    else:
        conf = {
            "problems": expand_suite(args.problems),
            "D": args.d,
            "pop_size": args.pop_size,
            "generations": args.generations,
            "snapshot_every": args.snapshot_every,
            "subsample": args.subsample,
            "criteria": list(args.criteria),
            "seed": args.seed,
            "beta": args.beta,
        }
    out = _fresh_dir(Path(args.out or "dataset"))
    manifest = _base_manifest("gen-dataset", conf)
    _write_manifest(out / "manifest.json", manifest)
    data = gen_rl_dataset(**conf)
    write_dataset(data, out / "dataset.jsonl")
    split = {c: sum(d.criterion == c for d in data) for c in conf["criteria"]}
    manifest["files"]["dataset"] = "dataset.jsonl"
    manifest["summary"] = {"instances": len(data), "per_criterion": split}
    manifest["status"] = "completed"
    manifest["finished_at"] = _now()
    _write_manifest(out / "manifest.json", manifest)
    print(f"{len(data)} instances ({', '.join(f'{c}: {n}' for c, n in split.items())}) -> {out / 'dataset.jsonl'}")
    return EXIT_OK


def cmd_score_responses(args) -> int:
    params = RewardParams()
    summary = score_response_file(args.dataset, args.responses, params)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            for id_, r in summary.rewards.items():
                fh.write(json.dumps({"id": id_, "reward": r}) + "\n")
    report = summary.to_dict()
    print(json.dumps(report, indent=2))
    if summary.unmatched_dataset_ids:
        logger.warning("%d dataset ids have no response", len(summary.unmatched_dataset_ids))
    if summary.unmatched_response_ids:
        logger.warning("%d responses match no dataset id", len(summary.unmatched_response_ids))
    return EXIT_OK


# --------------------------------------------------------------------------
# plot-export

PLOT_FILES = {"best_f": "sop_best_f.csv", "igd": "mop_igd.csv"}


def _collect_run_dirs(paths):
    dirs = []
    for p in map(Path, paths):
        if (p / "manifest.json").exists() or not p.is_dir():
            dirs.append(p)
        else:
            dirs.extend(sorted(c for c in p.iterdir() if c.is_dir()))
    return dirs


def _read_run(d: Path):
    m = json.loads((d / "manifest.json").read_text(encoding="utf-8"))
    if m.get("command") != "run":
        raise ValueError("not a run directory")
    with open(d / "trajectory.csv", newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    indicator = rows[0][1]
    if rows[0][0] != "fes" or indicator not in PLOT_FILES:
        raise ValueError("unexpected trajectory header")
    values = [(int(r[0]), float(r[1])) for r in rows[1:]]
    if not values:
        raise ValueError("empty trajectory")
    return m["config"]["problem"], m["config"]["backend"]["kind"], m["config"]["seed"], indicator, values


def cmd_plot_export(args) -> int:
    groups = {}
    for d in _collect_run_dirs(args.run_dirs):
        try:
            problem, backend, seed, indicator, values = _read_run(d)
        except (OSError, ValueError, KeyError, IndexError, TypeError, json.JSONDecodeError) as exc:
            logger.warning("skipping %s: %s", d, exc)
            continue
        groups.setdefault(indicator, {}).setdefault((problem, backend), {})[seed] = values
    if not groups:
        logger.error("no usable run directories")
        return EXIT_FAIL
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for indicator, by_key in sorted(groups.items()):
        target = out / PLOT_FILES[indicator]
        if target.exists():
            raise ConfigError(f"{target} already exists")
        with open(target, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["problem", "backend", "seed", "fes", "value"])
            for (problem, backend), runs in sorted(by_key.items()):
                for seed in sorted(runs):
                    for fes, v in runs[seed]:
                        w.writerow([problem, backend, seed, fes, _fmt(v)])
                length = min(len(v) for v in runs.values())
                for i in range(length):
                    med = statistics.median(runs[s][i][1] for s in runs)
                    w.writerow([problem, backend, "median", i + 1, _fmt(med)])
        print(f"{sum(len(r) for r in by_key.values())} runs -> {target}")
    return EXIT_OK


def cmd_list_problems(args) -> int:
    for pid in list_problems():
        print(pid)
    return EXIT_OK


# --------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="relsaea", description="Relation-surrogate evolutionary optimization toolkit")
    parser.add_argument("-v", "--verbose", action="store_true")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run the surrogate-assisted optimizer")
    p.add_argument("--config", help="YAML file with run settings; flags override it")
    p.add_argument("--problem")
    p.add_argument("--d", type=int)
    p.add_argument("--m", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--max-fes", type=int)
    p.add_argument("--pop-size", type=int)
    p.add_argument("--n-eval", type=int)
    p.add_argument("--context-size", type=int)
    p.add_argument("--criterion", choices=("c1", "c2"))
    p.add_argument("--beta", type=int)
    _add_backend_flags(p)
    p.add_argument("--batch", help="seeds=1..10 or seeds=1,4,7")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", help="parent directory for run directories (default ./runs)")
    p.add_argument("--from-manifest", help="re-run the configuration recorded in a run manifest")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("offline-eval", help="score a backend on static populations")
    p.add_argument("suite", nargs="?", help="suite JSONL file")
    p.add_argument("--build", action="store_true", help="build the suite from GA runs")
    p.add_argument("--problems", default="lzg")
    p.add_argument("--d", type=int, default=5)
    p.add_argument("--stages", type=int, nargs="+", default=list(DEFAULT_STAGES))
    p.add_argument("--criterion", choices=("c1", "c2"), default="c1")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--n", type=int, default=30, help="context size")
    p.add_argument("--q", type=int, default=30, help="query count")
    p.add_argument("--reference", choices=("vote", "fitness"), default="vote")
    p.add_argument("--limit", type=int, help="only the first N instances (by id)")
    _add_backend_flags(p)
    p.add_argument("--out")
    p.add_argument("--from-manifest")
    p.set_defaults(func=cmd_offline_eval)

    p = sub.add_parser("gen-dataset", help="build an RL prompt/ground-truth dataset")
    p.add_argument("--problems", default="lzg")
    p.add_argument("--d", type=int, default=5)
    p.add_argument("--pop-size", type=int, default=100)
    p.add_argument("--generations", type=int, default=100)
    p.add_argument("--snapshot-every", type=int, default=10)
    p.add_argument("--subsample", type=int, default=30)
    p.add_argument("--criteria", nargs="+", choices=("c1", "c2"), default=["c1"])
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--beta", type=int, default=5)
    p.add_argument("--out")
    p.add_argument("--from-manifest")
    p.set_defaults(func=cmd_gen_dataset)

    p = sub.add_parser("score-responses", help="reward model responses against a dataset")
    p.add_argument("dataset")
    p.add_argument("responses")
    p.add_argument("--out", help="per-instance rewards JSONL")
    p.set_defaults(func=cmd_score_responses)

    p = sub.add_parser("plot-export", help="tidy CSVs of convergence curves")
    p.add_argument("run_dirs", nargs="*")
    p.add_argument("--out", default="plots")
    p.set_defaults(func=cmd_plot_export)

    p = sub.add_parser("list-problems", help="print the registered problem ids")
    p.set_defaults(func=cmd_list_problems)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigError, DomainError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
