"""Command-line front end: run, sweep, speedup, spectral, partition-report."""

from __future__ import annotations

import argparse
import sys

from .harness import (
    ConfigError,
    load_config,
    partition_report,
    run_experiment,
    run_speedup,
    run_sweep,
    spectral_report,
)


def _add_common(p: argparse.ArgumentParser, out: bool = True):
    p.add_argument("--config", required=True, help="path to a JSON experiment config")
    if out:
        p.add_argument("--out", default=None, help="output directory for CSV traces")
        p.add_argument("--seeds", default=None, help="comma-separated seed list override")
        p.add_argument("--eval-every", type=int, default=None, help="metrics cadence override")


def _parse_seeds(raw):
    if raw is None:
        return None
    try:
        return [int(tok) for tok in raw.split(",") if tok.strip()]
    except ValueError:
        raise ConfigError(f"--seeds: expected comma-separated ints, got {raw!r}") from None


def _apply_overrides(cfg, args):
    seeds = _parse_seeds(args.seeds)
    if seeds:
        cfg["seeds"] = seeds
    if args.eval_every is not None:
        if args.eval_every < 1:
            raise ConfigError(f"--eval-every: must be >= 1, got {args.eval_every}")
        cfg["eval_every"] = args.eval_every
    return cfg


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="depositum",
        description="decentralized composite optimization experiments",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    _add_common(sub.add_parser("run", help="run one config across its seeds"))
    _add_common(sub.add_parser("sweep", help="run the config's sweep axis"))
    _add_common(sub.add_parser("speedup", help="run the config across client counts"))
    _add_common(sub.add_parser("spectral", help="print mixing diagnostics"), out=False)
    pr = sub.add_parser("partition-report", help="print per-class client shares")
    _add_common(pr, out=False)
    pr.add_argument("--seed", type=int, default=None, help="partition seed (default: first config seed)")
    args = parser.parse_args(argv)

    try:
        cfg = load_config(args.config)
        if args.command in ("run", "sweep", "speedup"):
            cfg = _apply_overrides(cfg, args)
        if args.command == "run":
            traces = run_experiment(cfg, out_dir=args.out)
            for tr in traces:
                fin = tr.final()
                print(f"seed {tr.seed}: t={fin.t} loss={fin.loss:.6g} s_over_n={fin.s_over_n:.6g}")
        elif args.command == "sweep":
            grouped = run_sweep(cfg, out_dir=args.out)
            for label, traces in grouped.items():
                losses = [t.final().loss for t in traces]
                print(f"{cfg['sweep']['axis']}={label}: mean final loss {sum(losses)/len(losses):.6g}")
        elif args.command == "speedup":
            result = run_speedup(cfg, out_dir=args.out)
            verdict = result["verdict"]
            for n in verdict["n_values"]:
                print(f"n={n}: mean final loss {verdict['mean_final_loss'][str(n)]:.6g}")
            print(f"non-increasing first to last: {verdict['non_increasing_first_to_last']}")
        elif args.command == "spectral":
            rep = spectral_report(cfg)
            print(f"n={rep['n']} lambda={rep['lambda']:.12g}")
            print(f"T0={rep['T0']} alpha_rho={rep['alpha_rho']:.12g}")
            print(f"delta1={rep['delta1']:.12g} delta2={rep['delta2']:.12g}")
            print(f"admissible alpha*rho < {rep['admissible_alpha_rho_below']:.12g}")
        else:
            classes, shares = partition_report(cfg, seed=args.seed)
            header = "class | " + " ".join(f"c{c:>5d}" for c in range(shares.shape[1]))
            print(header)
            for k, cls in enumerate(classes):
                row = " ".join(f"{shares[k, c]:6.3f}" for c in range(shares.shape[1]))
                print(f"{int(cls):>5d} | {row}")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
