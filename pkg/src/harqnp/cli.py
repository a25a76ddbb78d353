"""Command-line interface: ``harqnp {code gen, simulate, roc, verify, plot}``.

Failures print one JSON object on stderr (``{"error": ..., "message": ...}``)
and exit nonzero.
"""

import argparse
import json
import logging
import os
import sys
from importlib import resources

from . import alist as alist_io
from . import campaign
from . import config as config_mod
from .config import ENV_PREFIX, ConfigError
from .roc import DegenerateInput

EXIT_CONFIG, EXIT_INPUT, EXIT_FAILURE = 2, 3, 1


def shipped_configs():
    root = resources.files("harqnp") / "configs"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".yaml"))


def resolve_config(name):
    """A file path, or the name of a shipped config (``fig2``, ``fig3``, ...)."""
    if name is None:
        name = os.environ.get(ENV_PREFIX + "CONFIG")
    if name is None:
        raise ConfigError("no configuration given (use --config or HARQNP_CONFIG)")
    if os.path.exists(name):
        return config_mod.load(name)
    shipped = resources.files("harqnp") / "configs" / f"{name}.yaml"
    if shipped.is_file():
        with resources.as_file(shipped) as path:
            return config_mod.load(path)
    raise ConfigError(f"config {name!r} is neither a file nor one of {shipped_configs()}")


def _load(args):
    cfg = resolve_config(args.config)
    return config_mod.apply_overrides(cfg, args.seed, args.threads, args.out).validate()


def cmd_code_gen(args):
    cfg = resolve_config(args.config) if (args.config or os.environ.get(ENV_PREFIX + "CONFIG")) \
        else config_mod.CampaignConfig()
    for key in ("n", "k_target", "col_weight", "row_weight", "seed", "method"):
        value = getattr(args, key)
        if value is not None:
            setattr(cfg.code, key, value)
    if cfg.code.n is None and cfg.code.alist is None:
        raise ConfigError("code gen needs --n or a config with code.n")
    code, meta = campaign.build_code(cfg.code)
    text = alist_io.dumps(code.parity)
    out = args.out or os.environ.get(ENV_PREFIX + "OUT")
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    print(json.dumps(dict(meta, n=code.n, k=code.k)), file=sys.stderr if not out else sys.stdout)
    return 0


def cmd_simulate(args):
    cfg = _load(args)
    result = campaign.run_campaign(cfg)
    meta = result.metadata
    print(f"{meta['trials']} trials, {meta['successes']} decodable, "
          f"{meta['degraded_trials']} degraded -> {result.output_dir}")
    if args.report:
        _, text = campaign.write_roc_outputs(result.records, result.output_dir)
        print(text, end="")
    return 0


def cmd_roc(args):
    path = args.records
    if os.path.isdir(path):
        path = os.path.join(path, "records.ndjson")
    records = campaign.load_records(path)
    out = args.out or os.environ.get(ENV_PREFIX + "OUT") or os.path.dirname(os.path.abspath(path))
    _, text = campaign.write_roc_outputs(records, out)
    print(text, end="")
    return 0


def cmd_verify(args):
    from .verify import SUITES, run_all
    names = args.suite or None
    for name in names or []:
        if name not in SUITES:
            raise ConfigError(f"unknown suite {name!r}; choose from {sorted(SUITES)}")
    results = run_all(names, quick=args.quick)
    for r in results:
        print(r.line())
    return 0 if all(r.passed for r in results) else EXIT_FAILURE


def cmd_plot(args):
    from .plotting import plot_from_csv
    path = args.curves
    if os.path.isdir(path):
        path = os.path.join(path, "curves.csv")
    rows = campaign.read_curves_csv(path)
    if not rows:
        raise DegenerateInput(f"no curves in {path}")
    out = args.out or os.path.join(os.path.dirname(os.path.abspath(path)), "fig.svg")
    if os.path.isdir(out):
        out = os.path.join(out, "fig.svg")
    plot_from_csv(rows, out, args.title)
    print(out)
    return 0


def build_parser():
    parser = argparse.ArgumentParser(prog="harqnp", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, config=True):
        if config:
            p.add_argument("--config", help="YAML file or shipped config name")
        p.add_argument("--seed", type=int, help="master seed")
        p.add_argument("--threads", type=int, help="worker processes")
        p.add_argument("--out", help="output file or directory")

    code = sub.add_parser("code", help="code utilities")
    code_sub = code.add_subparsers(dest="code_command", required=True)
    gen = code_sub.add_parser("gen", help="construct a parity-check matrix and print it as alist")
    common(gen)
    gen.add_argument("--n", type=int)
    gen.add_argument("--k-target", dest="k_target", type=int)
    gen.add_argument("--col-weight", dest="col_weight", type=int)
    gen.add_argument("--row-weight", dest="row_weight", type=int)
    gen.add_argument("--method", choices=("auto", "peg", "gallager"))
    gen.set_defaults(func=cmd_code_gen)

    sim = sub.add_parser("simulate", help="run a campaign and write records.ndjson")
    common(sim)
    sim.add_argument("--report", action="store_true", help="also write curves.csv and report.txt")
    sim.set_defaults(func=cmd_simulate)

    roc = sub.add_parser("roc", help="curves and dominance report from a record file")
    common(roc, config=False)
    roc.add_argument("records", help="records.ndjson or the directory holding it")
    roc.set_defaults(func=cmd_roc)

    ver = sub.add_parser("verify", help="cross-route oracle suites on small codes")
    common(ver, config=False)
    ver.add_argument("--suite", action="append", help="run only this suite (repeatable)")
    ver.add_argument("--quick", action="store_true", help="smaller Monte-Carlo sizes")
    ver.set_defaults(func=cmd_verify)

    plot = sub.add_parser("plot", help="SVG of curves with a log-scale beta axis")
    common(plot, config=False)
    plot.add_argument("curves", help="curves.csv or the directory holding it")
    plot.add_argument("--title")
    plot.set_defaults(func=cmd_plot)
    return parser


def _fail(kind, message, status):
    print(json.dumps({"error": kind, "message": str(message)}), file=sys.stderr)
    return status


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        if exc.code in (0, None):
            return 0
        return _fail("UsageError", "invalid command line", EXIT_CONFIG)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        return _fail("ConfigError", exc, EXIT_CONFIG)
    except DegenerateInput as exc:
        return _fail("DegenerateInput", exc, EXIT_INPUT)
    except (OSError, ValueError) as exc:
        return _fail(type(exc).__name__, exc, EXIT_FAILURE)
    except Exception as exc:  # noqa: BLE001
        return _fail(type(exc).__name__, exc, EXIT_FAILURE)


if __name__ == "__main__":
    sys.exit(main())
