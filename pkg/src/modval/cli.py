"""Command-line surface: valuate, schedule, train-sim, verify, modulate.

Exit codes: 0 success, 1 validation/usage failure, 2 I/O failure. All
randomness flows from explicit ``--seed`` flags, so every invocation is
reproducible.
"""

from __future__ import annotations

import argparse
import contextlib
import sys

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from . import logio
from .errors import ModvalError
from .scheduling import modality_level_plan, sample_level_plan
from .theory import simulate_enhancement_gain, sweep_all_tables
from .valuation import ModalityValuator
from .modulation import g_blending_weights, greedy_window, ogm_ge_coeff
from .sim import (
    ModelConfig,
    ModulationConfig,
    SyntheticSpec,
    TrainConfig,
    generate_dataset,
    run_modulated,
    train,
)
from .sim.training import MODULATION_SCHEMES


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise _UsageError(message)


@contextlib.contextmanager
def _open_out(path: str | None):
    if path is None:
        yield sys.stdout
    else:
        with open(path, "w", encoding="utf-8") as handle:
            yield handle


def _cmd_valuate(args) -> int:
    errors: list = []
    records = list(
        logio.ingest(
            args.log,
            strict=not args.lenient,
            allow_partial=args.partial or args.mc is not None,
            on_error=errors.append,
        )
    )
    if errors:
        print(f"warning: skipped {len(errors)} malformed line(s)", file=sys.stderr)
        for err in errors[:5]:
            print(f"  {err}", file=sys.stderr)
    if not records:
        print("warning: no records in input", file=sys.stderr)
    if args.mc is not None:
        valuator = ModalityValuator("monte_carlo", args.mc, args.seed)
    else:
        valuator = ModalityValuator("exact")
    contributions = valuator.transform(records)
    with _open_out(args.out) as out:
        logio.write_contributions_csv(contributions, out)
    return 0


def _cmd_schedule(args) -> int:
    with open(args.contributions, encoding="utf-8") as handle:
        vectors = logio.read_contributions_csv(handle)
    if args.level == "sample":
        plan = sample_level_plan(vectors, args.fs)
        with _open_out(args.out) as out:
            logio.write_sample_plan_csv(plan, out)
        return 0
    if not vectors:
        print("error: no contribution rows to schedule from", file=sys.stderr)
        return 1
    subset_size = max(1, round(args.subset_fraction * len(vectors)))
    rng = np.random.default_rng(args.seed)
    chosen = np.sort(rng.choice(len(vectors), size=subset_size, replace=False))
    avg_phi = np.stack([vectors[i].phi for i in chosen]).mean(axis=0)
    plan = modality_level_plan(avg_phi, args.fm, subset_size)
    with _open_out(args.out) as out:
        logio.write_modality_plan_csv(plan, out)
    return 0


def _load_sim_configs(path: str, args):
    with open(path, "rb") as handle:
        raw = tomllib.load(handle)
    ds = dict(raw.get("dataset", {}))
    rename = {"modalities": "n_modalities", "classes": "num_classes", "names": "modality_names"}
    ds = {rename.get(k, k): v for k, v in ds.items()}
    for key in ("feature_dims", "separation", "modality_names"):
        if key in ds:
            ds[key] = tuple(ds[key])
    ds.setdefault("seed", args.seed)
    spec = SyntheticSpec(**ds)
    model = ModelConfig(**raw.get("model", {}))
    tr = dict(raw.get("train", {}))
    if args.strategy is not None:
        tr["strategy"] = args.strategy
    tr["seed"] = args.seed
    modulation = None
    strategy = tr.get("strategy", "baseline")
    if strategy in MODULATION_SCHEMES:
        tr.pop("strategy")
        mod_raw = dict(raw.get("modulation", {}))
        mod_raw["scheme"] = strategy
        modulation = ModulationConfig(**mod_raw)
    cfg = TrainConfig(**tr)
    return spec, model, cfg, modulation


def _cmd_train_sim(args) -> int:
    spec, model_config, train_config, modulation = _load_sim_configs(args.spec, args)
    dataset = generate_dataset(spec)
    if modulation is not None:
        report = run_modulated(dataset, model_config, train_config, modulation)
    else:
        report = train(dataset, model_config, train_config)
    with _open_out(args.out) as out:
        report.to_csv(out)
    final = report.final
    print(
        f"{report.strategy}: final train acc {final.train_accuracy:.4f}, "
        f"test acc {final.test_accuracy:.4f}",
        file=sys.stderr,
    )
    return 0


def _cmd_verify(args) -> int:
    if args.corollary == "sweep":
        report = sweep_all_tables(args.n)
        print(report.summary())
        return 0 if report.passed else 1
    if args.corollary == "1":
        report = sweep_all_tables(args.n)
        print(
            f"removal-gap bound at n={args.n}: checked "
            f"{report.full_benefit_admissible} admissible full-benefit tables, "
            f"{report.bound_violations} violations"
        )
        return 0 if report.bound_violations == 0 else 1
    enhanced = simulate_enhancement_gain(args.n, args.trials, args.seed, enhanced=True)
    disabled = simulate_enhancement_gain(args.n, args.trials, args.seed, enhanced=False)
    print(enhanced.summary())
    print(disabled.summary())
    ok = enhanced.significantly_positive and disabled.consistent_with_zero
    return 0 if ok else 1


def _require(args, parser, names: list[str]) -> None:
    missing = [f"--{n.replace('_', '-')}" for n in names if getattr(args, n) is None]
    if missing:
        parser.error(f"--scheme {args.scheme} requires {', '.join(missing)}")


def _cmd_modulate(args, parser) -> int:
    if args.scheme == "ogm-ge":
        _require(args, parser, ["g", "alpha"])
        beta = 0.1 if args.beta is None else args.beta
        k = ogm_ge_coeff(args.g, args.alpha, beta)
        print(f"k={k:.6f}")
    elif args.scheme == "g-blending":
        _require(args, parser, ["wuv", "gu", "gv", "alpha"])
        w_u, w_v = g_blending_weights(args.wuv, args.gu, args.gv, args.alpha)
        print(f"w_uv={args.wuv:g} w_u={w_u:g} w_v={w_v:g}")
    else:
        _require(args, parser, ["gu", "gv", "lam", "alpha"])
        q = greedy_window(args.gu, args.gv, args.lam, args.alpha)
        print(f"Q={q}")
    return 0


def build_parser() -> _Parser:
    parser = _Parser(prog="modval", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("valuate", help="contribution vectors from a prediction log")
    p.add_argument("log", help="line-delimited prediction log")
    p.add_argument("--mc", type=int, default=None, metavar="M",
                   help="Monte-Carlo estimate with M permutations (default: exact)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None, help="output CSV path (default: stdout)")
    p.add_argument("--lenient", action="store_true",
                   help="skip malformed lines instead of aborting")
    p.add_argument("--partial", action="store_true",
                   help="accept records that do not cover every coalition")

    p = sub.add_parser("schedule", help="re-sample plan from a contributions CSV")
    p.add_argument("contributions", help="contributions CSV from `valuate`")
    p.add_argument("--level", choices=("sample", "modality"), required=True)
    p.add_argument("--fs", default="linear", help="frequency map for sample level")
    p.add_argument("--fm", default="identity", help="probability map for modality level")
    p.add_argument("--Z", dest="subset_fraction", type=float, default=0.2,
                   help="subset fraction for the modality-level estimate")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)

    p = sub.add_parser("train-sim", help="run the synthetic training simulator")
    p.add_argument("--spec", required=True, help="TOML run configuration")
    p.add_argument("--strategy", default=None,
                   help="override the [train] strategy (re-sample strategy or "
                        "modulation scheme)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None, help="trajectory CSV path (default: stdout)")

    p = sub.add_parser("verify", help="machine-check the supporting analysis")
    p.add_argument("--corollary", choices=("1", "2", "sweep"), required=True)
    p.add_argument("--n", type=int, default=3, help="modality count")
    p.add_argument("--trials", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("modulate", help="coefficients for one modulation scheme")
    p.add_argument("--scheme", choices=("ogm-ge", "g-blending", "greedy"), required=True)
    p.add_argument("--g", type=float, default=None, help="batch-mean gap (ogm-ge)")
    p.add_argument("--gu", type=float, default=None)
    p.add_argument("--gv", type=float, default=None)
    p.add_argument("--alpha", type=float, default=None)
    p.add_argument("--beta", type=float, default=None)
    p.add_argument("--wuv", type=float, default=None, help="joint-loss weight (g-blending)")
    p.add_argument("--lambda", dest="lam", type=float, default=None,
                   help="window scale (greedy)")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command == "valuate":
            return _cmd_valuate(args)
        if args.command == "schedule":
            return _cmd_schedule(args)
        if args.command == "train-sim":
            return _cmd_train_sim(args)
        if args.command == "verify":
            return _cmd_verify(args)
        return _cmd_modulate(args, parser)
    except _UsageError:
        return 1
    except ModvalError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
