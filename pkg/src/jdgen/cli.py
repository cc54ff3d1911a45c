"""Command-line surface: tabulate | train | generate | evaluate | reproduce.

Exit codes: 0 success, 2 usage/config problems, 3 numerical failure.
JDGEN_THREADS caps BLAS/numba worker threads; --strict forces one thread.
Heavy imports happen after thread caps are applied, so keep module-level
imports light.
"""

import argparse
import json
import os
import sys
import time

TOOL_VERSION = "0.1.0"


def _apply_thread_cap(n, force=False):
    # effective only while numpy/numba are still unloaded (imports are lazy)
    for var in (
        "OPENBLAS_NUM_THREADS",
        "OMP_NUM_THREADS",
        "MKL_NUM_THREADS",
        "NUMEXPR_NUM_THREADS",
        "NUMBA_NUM_THREADS",
    ):
        if force:
            os.environ[var] = str(n)
        else:
            os.environ.setdefault(var, str(n))


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="jdgen",
        description="Jump-diffusion score-based generative sampling pipeline",
    )
    parser.add_argument("--version", action="version", version=TOOL_VERSION)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", metavar="PATH", default=None, help="JSON config file")
        p.add_argument("--seed", type=int, default=None, help="master seed override")
        p.add_argument("--strict", action="store_true",
                       help="single-threaded deterministic audit mode")

    p = sub.add_parser("tabulate", help="precompute the kernel table")
    common(p)
    p.add_argument("--force", action="store_true", help="rewrite even when up to date")

    p = sub.add_parser("train", help="fit the score network")
    common(p)
    p.add_argument("--data", metavar="CSV", default=None, help="training samples, d columns")
    p.add_argument("--synthetic-alpha", type=float, default=None,
                   help="draw the training set from the heavy-tailed target with this index")
    p.add_argument("--epochs", type=int, default=None, help="override epoch count")

    p = sub.add_parser("generate", help="sample from the trained model")
    common(p)
    p.add_argument("--mode", choices=["ode", "sde"], required=True)
    p.add_argument("--n", type=int, default=25000, help="number of samples")

    p = sub.add_parser("evaluate", help="tail metric between two sample sets")
    common(p)
    p.add_argument("--gen", metavar="CSV", required=True, help="generated samples")
    p.add_argument("--data", metavar="CSV", default=None, help="reference samples")
    p.add_argument("--synthetic-alpha", type=float, default=None,
                   help="draw the reference set from the heavy-tailed target")
    p.add_argument("--n", type=int, default=25000, help="reference draw size")

    p = sub.add_parser("reproduce", help="full pipeline: tabulate, train, generate+evaluate")
    common(p)
    p.add_argument("--runs", type=int, default=None, help="independent runs per mode")
    p.add_argument("--epochs", type=int, default=None, help="override epoch count")
    p.add_argument("--force", action="store_true", help="ignore completed stages")
    p.add_argument("--retrain-per-run", action="store_true",
                   help="retrain the network for every run instead of reusing one fit")
    return parser


class _Paths:
    def __init__(self, workdir):
        self.workdir = workdir
        self.table = os.path.join(workdir, "kernel_table.jdlk")
        self.weights = os.path.join(workdir, "score_net.jdlw")
        self.history = os.path.join(workdir, "train_history.json")
        self.manifest = os.path.join(workdir, "manifest.json")
        self.runs_dir = os.path.join(workdir, "runs")

    def samples(self, mode):
        return os.path.join(self.workdir, f"samples_{mode}.csv")

    def samples_meta(self, mode):
        return os.path.join(self.workdir, f"samples_{mode}.meta.json")

    def metrics(self, mode):
        return os.path.join(self.workdir, f"metrics_{mode}.json")

    def run_record(self, mode, index):
        return os.path.join(self.runs_dir, f"{mode}_{index:03d}.json")


def _load_run_config(args):
    from .config import load_config

    run = load_config(args.config)
    if args.seed is not None:
        run.seed = int(args.seed)
    if getattr(args, "epochs", None) is not None:
        run.train.n_epochs = int(args.epochs)
        run.train.__post_init__()
    if getattr(args, "runs", None) is not None:
        run.eval.n_runs = int(args.runs)
        run.eval.__post_init__()
    return run


def _table_up_to_date(paths, run):
    from .errors import TableMismatch
    from .kernels import load_table

    if not os.path.exists(paths.table):
        return False
    try:
        load_table(paths.table, run.model)
        return True
    except TableMismatch:
        return False


def _ensure_table(paths, run, force=False, quiet=False):
    from .kernels import load_table, save_table, tabulate

    if not force and _table_up_to_date(paths, run):
        if not quiet:
            print(f"kernel table up to date: {paths.table}")
        return load_table(paths.table, run.model)
    table = tabulate(run.model)
    os.makedirs(paths.workdir, exist_ok=True)
    save_table(table, paths.table)
    if not quiet:
        print(f"wrote kernel table: {paths.table}")
    return table


def _load_training_data(args, run):
    import numpy as np

    from .errors import ConfigError
    from .evaluation import training_dataset

    if args.data is not None and args.synthetic_alpha is not None:
        raise ConfigError("give either --data or --synthetic-alpha, not both")
    if args.data is not None:
        try:
            data = np.loadtxt(args.data, delimiter=",", ndmin=2)
        except OSError as exc:
            raise ConfigError(f"cannot read {args.data}: {exc}") from exc
        if data.shape[0] != run.train.n_train:
            run.train.n_train = data.shape[0]
            run.train.__post_init__()
        return data
    alpha = args.synthetic_alpha if args.synthetic_alpha is not None else run.eval.alpha
    return training_dataset(run.model, run.train, run.seed, alpha)


def cmd_tabulate(args):
    run = _load_run_config(args)
    paths = _Paths(run.workdir)
    _ensure_table(paths, run, force=args.force)
    return 0


def cmd_train(args):
    from .errors import ConfigError
    from .score_model import save_params
    from .training import train

    run = _load_run_config(args)
    paths = _Paths(run.workdir)
    if not os.path.exists(paths.table):
        raise ConfigError(f"kernel table missing: {paths.table} (run `jdgen tabulate` first)")
    table = _ensure_table(paths, run, quiet=True)
    data = _load_training_data(args, run)
    n_epochs = run.train.n_epochs

    def progress(epoch, loss):
        print(f"epoch {epoch + 1}/{n_epochs}  loss={loss:.6f}", flush=True)

    params, history = train(data, run.model, run.train, table, progress=progress)
    os.makedirs(paths.workdir, exist_ok=True)
    save_params(params, paths.weights)
    with open(paths.history, "w") as fh:
        json.dump(history.to_dict(), fh, indent=2)
        fh.write("\n")
    print(f"wrote weights: {paths.weights}")
    return 0


def cmd_generate(args):
    import numpy as np

    from .errors import ConfigError
    from .generation import ode_sample, sde_sample
    from .kernels import config_fingerprint
    from .score_model import load_params
    from .special_math import derive_rng

    run = _load_run_config(args)
    paths = _Paths(run.workdir)
    for needed in (paths.weights, paths.table):
        if not os.path.exists(needed):
            raise ConfigError(f"missing artifact: {needed}")
    params = load_params(paths.weights, run.model)
    sampler = ode_sample if args.mode == "ode" else sde_sample
    gen_seed = int(derive_rng(run.seed, 20 if args.mode == "ode" else 21).integers(2**63))
    result = sampler(params, run.model, args.n, gen_seed)
    np.savetxt(paths.samples(args.mode), result.samples, delimiter=",", fmt="%.17g")
    meta = {
        "mode": result.mode,
        "n_steps": result.n_steps,
        "n_samples": int(args.n),
        "seed": result.seed,
        "config_fingerprint": config_fingerprint(run.model).hex(),
    }
    with open(paths.samples_meta(args.mode), "w") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(f"wrote {args.n} samples: {paths.samples(args.mode)}")
    return 0


def cmd_evaluate(args):
    import numpy as np

    from .errors import ConfigError
    from .evaluation import make_target_dataset, msle_components
    from .special_math import derive_rng

    run = _load_run_config(args)
    try:
        gen = np.loadtxt(args.gen, delimiter=",", ndmin=2)
    except OSError as exc:
        raise ConfigError(f"cannot read {args.gen}: {exc}") from exc
    if args.data is not None:
        try:
            data = np.loadtxt(args.data, delimiter=",", ndmin=2)
        except OSError as exc:
            raise ConfigError(f"cannot read {args.data}: {exc}") from exc
    else:
        alpha = args.synthetic_alpha if args.synthetic_alpha is not None else run.eval.alpha
        seed = int(derive_rng(run.seed, 30).integers(2**63))
        data = make_target_dataset(alpha, run.model.d, args.n, seed)
    value = msle_components(data, gen, run.eval.xi)
    print(f"msle={value:.6f}")
    return 0


def _write_manifest(paths, run, stages):
    manifest = {
        "tool_version": TOOL_VERSION,
        "seed": run.seed,
        "config": run.to_dict(),
        "artifacts": {
            "table": paths.table,
            "weights": paths.weights,
            "history": paths.history,
        },
        "stages": stages,
        "updated_at": time.strftime("%Y-%m-%dT%H:%M:%S"),
    }
    with open(paths.manifest, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def cmd_reproduce(args):
    from .evaluation import run_experiment, training_dataset
    from .score_model import load_params, save_params
    from .training import train

    run = _load_run_config(args)
    paths = _Paths(run.workdir)
    os.makedirs(paths.runs_dir, exist_ok=True)
    stages = {"tabulate": False, "train": False, "runs": {}}

    table = _ensure_table(paths, run, force=args.force)
    stages["tabulate"] = True
    _write_manifest(paths, run, stages)

    n_epochs = run.train.n_epochs

    def progress(epoch, loss):
        print(f"epoch {epoch + 1}/{n_epochs}  loss={loss:.6f}", flush=True)

    params = None
    if not args.retrain_per_run:
        if not args.force and os.path.exists(paths.weights):
            params = load_params(paths.weights, run.model)
            print(f"weights up to date: {paths.weights}")
        else:
            data = training_dataset(run.model, run.train, run.seed, run.eval.alpha)
            params, history = train(data, run.model, run.train, table, progress=progress)
            save_params(params, paths.weights)
            with open(paths.history, "w") as fh:
                json.dump(history.to_dict(), fh, indent=2)
                fh.write("\n")
        stages["train"] = True
        _write_manifest(paths, run, stages)

    completed = {}
    if not args.force:
        for mode in ("ode", "sde"):
            for r in range(run.eval.n_runs):
                record_path = paths.run_record(mode, r)
                if os.path.exists(record_path):
                    with open(record_path) as fh:
                        completed[mode, r] = json.load(fh)["msle"]

    def on_run(mode, r, value, gen_seed):
        with open(paths.run_record(mode, r), "w") as fh:
            json.dump({"mode": mode, "run": r, "msle": value, "seed": gen_seed}, fh)
            fh.write("\n")
        print(f"{mode} run {r + 1}/{run.eval.n_runs}  msle={value:.5f}", flush=True)

    reports = run_experiment(
        run.model,
        run.train,
        run.eval.n_runs,
        ("ode", "sde"),
        run.seed,
        alpha=run.eval.alpha,
        n_gen=run.eval.n_gen,
        xi=run.eval.xi,
        table=table,
        params=params,
        retrain_per_run=args.retrain_per_run,
        completed=completed,
        on_run=on_run,
    )
    for mode, report in reports.items():
        with open(paths.metrics(mode), "w") as fh:
            json.dump(report.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")
        stages["runs"][mode] = len(report.runs)
        _write_manifest(paths, run, stages)

    print()
    print(f"{'Method':<10}{'MSLE':>10}{'SE':>14}")
    for mode in ("sde", "ode"):
        rep = reports[mode]
        se = f"{rep.msle_stderr:.2e}" if rep.msle_stderr is not None else "null"
        print(f"{mode.upper():<10}{rep.msle_mean:>10.4f}{se:>14}")
    return 0


def main(argv=None):
    args = _build_parser().parse_args(argv)
    cap = os.environ.get("JDGEN_THREADS")
    if args.strict:
        _apply_thread_cap(1, force=True)
    elif cap:
        _apply_thread_cap(int(cap))

    from .errors import ConfigError, NumericsError

    handlers = {
        "tabulate": cmd_tabulate,
        "train": cmd_train,
        "generate": cmd_generate,
        "evaluate": cmd_evaluate,
        "reproduce": cmd_reproduce,
    }
    try:
        return handlers[args.command](args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NumericsError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
