"""Command-line front end.

Subcommands: ``sample`` (draw data, optionally contaminated), ``fit``
(learn a mixture), ``estimate-density``, ``eval`` (distances between
models), and ``export-system`` (textual polynomial-system dump).  Every
output file is accompanied by a ``<output>.manifest.json`` that records the
subcommand, inputs, seed, and configuration needed to reproduce it byte for
byte.

Exit codes: 0 success; 1 infeasibility past the threshold cap (guarded,
should not occur); 2 I/O or validation failure.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import __version__
from .density import (
    DensityEstimate,
    estimate_density,
    read_samples_csv,
    write_samples_csv,
)
from .learn import InfeasibleError, LearnConfig, learn
from .mixtures import MixtureParams, l1_distance, sample
from .ak import ak_distance
from .shapes import ShapePolyConfig, mixture_approx
from .system import encode_system, export_system


def _write_manifest(out_path: str, subcommand: str, inputs: dict, outputs: list,
                    seed, config: dict) -> None:
    manifest = {
        "subcommand": subcommand,
        "inputs": inputs,
        "outputs": outputs,
        "seed": seed,
        "config": config,
        "tool_version": __version__,
    }
    with open(str(out_path) + ".manifest.json", "w") as fh:
        json.dump(manifest, fh, sort_keys=True, indent=2)
        fh.write("\n")


def _load_model(path: str) -> MixtureParams:
    with open(path) as fh:
        return MixtureParams.from_json(fh.read())


def cmd_sample(args) -> int:
    model = _load_model(args.model)
    if not 0.0 <= args.contaminate < 1.0:
        raise ValueError("contamination fraction must be in [0, 1)")
    rng = np.random.default_rng(args.seed)
    n_noise = int(round(args.n * args.contaminate))
    clean = sample(model, args.n - n_noise, seed=args.seed) if args.n > n_noise else np.array([])
    noise = rng.uniform(args.contaminant_lo, args.contaminant_hi, n_noise)
    data = np.concatenate([clean, noise])
    data = data[rng.permutation(data.size)]
    write_samples_csv(args.out, data)
    _write_manifest(
        args.out, "sample",
        inputs={"model": args.model},
        outputs=[args.out],
        seed=args.seed,
        config={
            "n": args.n,
            "contaminate": args.contaminate,
            "contaminant_lo": args.contaminant_lo,
            "contaminant_hi": args.contaminant_hi,
        },
    )
    return 0


def cmd_fit(args) -> int:
    x = read_samples_csv(args.samples)
    cfg = LearnConfig(
        k=args.k,
        eps=args.eps,
        gamma=args.gamma if args.well_behaved else None,
        family=args.family,
        seed=args.seed,
    )
    report = learn(x, cfg)
    with open(args.out, "w") as fh:
        fh.write(report.params.to_json() + "\n")
    with open(args.report, "w") as fh:
        fh.write(report.to_json() + "\n")
    config = {
        "k": args.k, "eps": args.eps, "family": args.family,
        "well_behaved": args.well_behaved, "gamma": args.gamma,
    }
    for out in (args.out, args.report):
        _write_manifest(out, "fit", {"samples": args.samples},
                        [args.out, args.report], args.seed, config)
    print(f"nu={report.nu!r} l1_to_estimate={report.l1_to_estimate!r}")
    return 0


def cmd_estimate_density(args) -> int:
    x = read_samples_csv(args.samples)
    est = estimate_density(x, args.k, args.eps)
    with open(args.out, "w") as fh:
        fh.write(est.to_json() + "\n")
    _write_manifest(args.out, "estimate-density", {"samples": args.samples},
                    [args.out], None, {"k": args.k, "eps": args.eps})
    return 0


def cmd_eval(args) -> int:
    a = _load_model(args.a)
    b = _load_model(args.b)
    if args.metric == "l1":
        value = l1_distance(a, b)
    else:
        order = args.order or 4 * max(a.k, b.k)
        eps = 0.05
        cfg_a = ShapePolyConfig.build(eps, a.family)
        cfg_b = ShapePolyConfig.build(eps, b.family)
        value = ak_distance(mixture_approx(a, cfg_a), mixture_approx(b, cfg_b), order)
    record = {"a": args.a, "b": args.b, "metric": args.metric, "value": value}
    if args.out:
        with open(args.out, "w") as fh:
            json.dump(record, fh, sort_keys=True)
            fh.write("\n")
        _write_manifest(args.out, "eval", {"a": args.a, "b": args.b}, [args.out],
                        None, {"metric": args.metric, "order": args.order})
    print(repr(value))
    return 0


def cmd_export_system(args) -> int:
    with open(args.density) as fh:
        dens = DensityEstimate.from_json(fh.read())
    system = encode_system(dens, args.k, args.eps, args.order or 4 * args.k, args.nu)
    text = export_system(system)
    with open(args.out, "w") as fh:
        fh.write(text)
    _write_manifest(args.out, "export-system", {"density": args.density},
                    [args.out], None,
                    {"k": args.k, "eps": args.eps, "nu": args.nu, "order": args.order})
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gmmfit",
        description="Proper, agnostic univariate mixture fitting.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sample", help="draw samples from a mixture model")
    p.add_argument("--model", required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--contaminate", type=float, default=0.0)
    p.add_argument("--contaminant-lo", type=float, default=-5.0)
    p.add_argument("--contaminant-hi", type=float, default=5.0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("fit", help="fit a mixture to samples")
    p.add_argument("--samples", required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--family", choices=["gaussian", "exponential", "laplace"],
                   default="gaussian")
    p.add_argument("--well-behaved", action="store_true")
    p.add_argument("--gamma", type=float, default=None)
    p.add_argument("--out", required=True)
    p.add_argument("--report", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("estimate-density", help="piecewise-polynomial estimate")
    p.add_argument("--samples", required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_estimate_density)

    p = sub.add_parser("eval", help="distance between two mixture models")
    p.add_argument("--a", required=True)
    p.add_argument("--b", required=True)
    p.add_argument("--metric", choices=["l1", "ak"], default="l1")
    p.add_argument("--K", dest="order", type=int, default=None)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("export-system", help="dump the polynomial system")
    p.add_argument("--density", required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--nu", type=float, required=True)
    p.add_argument("--K", dest="order", type=int, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_export_system)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except InfeasibleError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (OSError, ValueError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
