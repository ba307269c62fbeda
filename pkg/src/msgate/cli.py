"""Command-line entry point: ``msgate run | preset | validate``.

Exit codes: 0 success, 2 configuration error, 3 physics-guard violation
(truncation or norm), 4 failed check in ``--check`` mode.
"""

from __future__ import annotations

import argparse
import logging
import sys

from .errors import ConfigError, CutoffExceeded, NonNormalizable, PhysicsGuardError, PoleAtResonance
from .experiments import load_config, preset_config, run_experiment
from .experiments.runners import PRESETS

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_GUARD = 3
EXIT_CHECK = 4

_INPUT_ERRORS = (ConfigError, CutoffExceeded, NonNormalizable, PoleAtResonance)


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="msgate", description="Two-ion gate simulator")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def run_opts(sp):
        sp.add_argument("--out", help="output directory")
        sp.add_argument("--seed", type=int, help="master seed")
        sp.add_argument("--trajectories", type=int, help="number of trajectories")
        sp.add_argument("--workers", type=int, default=1, help="processes for trajectory ensembles")
        sp.add_argument("--backend", choices=("compiled", "python"), help="RK4 kernel")
        sp.add_argument("--check", action="store_true", help="exit 4 if any check fails")

    r = sub.add_parser("run", help="run an experiment from a config file")
    r.add_argument("config")
    run_opts(r)
    pr = sub.add_parser("preset", help="run a built-in preset")
    pr.add_argument("name", choices=sorted(PRESETS))
    run_opts(pr)
    v = sub.add_parser("validate", help="parse a config file and print it resolved")
    v.add_argument("config")
    return p


def _execute(cfg, args) -> int:
    res = run_experiment(cfg, out_dir=args.out, backend=args.backend, workers=args.workers)
    for k, val in res.summary.items():
        print(f"{k}: {val:.6g}" if isinstance(val, float) else f"{k}: {val}")
    for name, ok in res.checks.items():
        print(f"check {name}: {'PASS' if ok else 'FAIL'}")
    print(f"wrote {len(res.files)} files to {res.out_dir}")
    if args.check and not res.passed:
        return EXIT_CHECK
    return EXIT_OK


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "validate":
            cfg = load_config(args.config)
            sys.stdout.write(cfg.to_ini())
            return EXIT_OK
        if args.command == "preset":
            cfg = preset_config(args.name, out_dir=args.out, seed=args.seed,
                                trajectories=args.trajectories)
        else:
            from dataclasses import replace

            cfg = load_config(args.config)
            changes = {}
            if args.seed is not None:
                changes["seed"] = args.seed
            if args.trajectories is not None:
                changes["n_trajectories"] = args.trajectories
            cfg = replace(cfg, **changes).validate()
        return _execute(cfg, args)
    except _INPUT_ERRORS as exc:
        print(f"msgate: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"msgate: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except PhysicsGuardError as exc:
        print(f"msgate: physics guard: {exc}", file=sys.stderr)
        return EXIT_GUARD


if __name__ == "__main__":
    sys.exit(main())
