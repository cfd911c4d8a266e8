"""``wake-radon`` command line: detect, simulate, benchmark, selftest.

Exit codes: 0 success, 1 usage or configuration error, 2 I/O error,
3 numerical failure (including a failed self-test).
"""

import argparse
import json
import logging
import math
import os
import sys
import warnings

import numpy as np

from . import __version__
from .benchmark import format_table, run_benchmark
from .cauchy import cauchy_prox_scalar
from .config import RunConfig, load_config
from .detection import StageError, detect_wakes
from .errors import ConfigurationError, ImageIOError, WakeRadonError
from .image_io import read_image, write_image, write_overlay
from .selftest import run_selftest
from .simulate import SLOTS, render_scene, table1_suite

logger = logging.getLogger("wake_radon")

EXIT_OK, EXIT_USAGE, EXIT_IO, EXIT_NUMERIC = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: error: {message}")


# --- report rendering ---------------------------------------------------------------

def _clean(v):
    """JSON-safe copy: non-finite floats become null, tuples become lists."""
    if isinstance(v, float):
        return v if math.isfinite(v) else None
    if isinstance(v, dict):
        return {k: _clean(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_clean(x) for x in v]
    if isinstance(v, np.generic):
        return _clean(v.item())
    return v


def _num(v):
    if isinstance(v, float):
        return repr(v) if math.isfinite(v) else "nan"
    return str(v)


def render(doc, fmt):
    """Serialise a report document (an ordered dict of sections)."""
    if fmt == "json":
        return json.dumps(_clean(doc), indent=2) + "\n"
    out = []
    for section, body in doc.items():
        out.append(f"[{section}]")
        if isinstance(body, dict):
            for k, v in body.items():
                if isinstance(v, (list, tuple)):
                    v = " ".join(_num(x) for x in v)
                out.append(f"{k} = {_num(v)}")
        else:
            out.extend(body)
        out.append("")
    return "\n".join(out)


def _slot_rows(report):
    head = f"{'slot':<11} {'detected':>8} {'r':>7} {'theta':>7} {'half':>5} {'F_I':>10} {'peak':>10}"
    rows = [head]
    for slot, c in report.slots.items():
        if c is None:
            rows.append(f"{slot:<11} {0:>8} {'-':>7} {'-':>7} {'-':>5} {'-':>10} {'-':>10}")
            continue
        fi = f"{c.F_I:10.4f}" if math.isfinite(c.F_I) else f"{'nan':>10}"
        rows.append(
            f"{slot:<11} {int(c.confirmed):>8} {c.r:7.1f} {c.theta:7.1f} {c.half_sign:>5d} "
            f"{fi} {c.peak_value:10.4f}"
        )
    return rows


def detect_document(cfg, input_path, report, fmt):
    diag = report.diagnostics.as_dict(timing=False)
    trace = diag.pop("epsilon_trace")
    run = {"command": "detect", "input": str(input_path), "seed": cfg.seed, "version": __version__}
    if fmt == "json":
        return {
            "run": run,
            "detection": report.as_dict(timing=False),
            "config": cfg.as_dict(),
        }
    return {
        "run": run,
        "slots": _slot_rows(report),
        "flags": {"arms_from_unconfirmed_turbulent": int(report.arms_from_unconfirmed_turbulent)},
        "solver": diag | {"epsilon_trace": trace},
        "config": cfg.as_dict(),
    }


def _emit(text, path):
    if not path:
        sys.stdout.write(text)
        return
    try:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    except OSError as exc:
        raise ImageIOError(f"cannot write {path}: {exc.strerror or exc}") from exc


# --- commands ----------------------------------------------------------------------

def cmd_detect(input_path, cfg: RunConfig):
    """Detect wakes in one image; writes the report and, optionally, an overlay."""
    img = read_image(input_path)
    if img.ndim != 2 or img.shape[0] != img.shape[1]:
        raise ImageIOError(f"{input_path}: image is {img.shape[1]}x{img.shape[0]}, need a square chip")
    report = detect_wakes(img, cfg.detector_config())
    text = render(detect_document(cfg, input_path, report, cfg.format), cfg.format)
    _emit(text, cfg.output)
    if cfg.overlay:
        write_overlay(cfg.overlay, img, report)
    return report


def cmd_simulate(cfg: RunConfig, image_format="raw"):
    """Render the configured scene suite plus a ground-truth manifest."""
    outdir = cfg.output or "scenes"
    try:
        os.makedirs(outdir, exist_ok=True)
    except OSError as exc:
        raise ImageIOError(f"cannot create {outdir}: {exc.strerror or exc}") from exc
    ext = {"raw": ".raw", "png": ".png", "pgm": ".pgm"}[image_format]
    entries = []
    for idx, spec in enumerate(cfg.scene_specs()):
        name = f"row{idx + 1}" if cfg.scene == "table1" else f"{cfg.scene}{idx + 1}"
        img, gt = render_scene(spec)
        fname = name + ext
        write_image(os.path.join(outdir, fname), img, image_format)
        entries.append({
            "name": name,
            "file": fname,
            "visibility": dict(zip(SLOTS, (int(v) for v in gt.visibility))),
            "lines": [vars(line) for line in gt.lines],
        })
    manifest = {"scene": cfg.scene, "size": cfg.size, "scenes": entries}
    _emit(json.dumps(manifest, indent=2) + "\n", os.path.join(outdir, "manifest.json"))
    return manifest


def cmd_benchmark(cfg: RunConfig, workers=None):
    """Detection over the benchmark suite, scored slot by slot."""
    suite = table1_suite(
        cfg.noise_level, cfg.seed_list(), size=cfg.size, model=cfg.noise_model,
        turbulent_contrast=cfg.turbulent_contrast, arm_contrast=cfg.arm_contrast,
        width=cfg.wake_width,
    )
    result = run_benchmark(suite, cfg.detector_config(), workers)
    run = {"command": "benchmark", "seed": cfg.seed, "seeds": cfg.seeds, "version": __version__}
    if cfg.format == "json":
        doc = {"run": run, "benchmark": result.as_dict(), "config": cfg.as_dict()}
    else:
        pct = result.percentages
        doc = {
            "run": run,
            "scenes": format_table(result),
            "aggregate": {
                "evaluated_slots": result.evaluated_slots,
                **{f"{k}_percent": float(v) for k, v in pct.items()},
                "accuracy_percent": float(result.accuracy),
                "failed_scenes": len(result.failed),
            },
            "config": cfg.as_dict(),
        }
    _emit(render(doc, cfg.format), cfg.output)
    return result


def _perturbed_prox(scale):
    def prox(x, gamma, omega):
        return cauchy_prox_scalar(x, gamma, omega) * scale
    return prox


def cmd_selftest(cfg: RunConfig = RunConfig(), perturb=0.0):
    """Run the certification suite; returns the report (``report.passed``)."""
    prox = _perturbed_prox(1.0 + perturb) if perturb else cauchy_prox_scalar
    report = run_selftest(prox)
    if cfg.format == "json":
        text = json.dumps(_clean(report.as_dict()), indent=2) + "\n"
    else:
        text = "\n".join(report.lines()) + "\n"
    _emit(text, cfg.output)
    return report


# --- argument parsing -----------------------------------------------------------

def _config_epilog():
    lines = ["configuration keys (key = value in --config files, or --set key=value):"]
    for f in RunConfig.__dataclass_fields__.values():
        default = f.default
        lines.append(f"  {f.name:<20} default {default!r:<14} {f.metadata['help']}")
    return "\n".join(lines)


def build_parser():
    common = _Parser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="key = value configuration file")
    common.add_argument("--set", metavar="KEY=VALUE", action="append", default=[],
                        help="override any configuration key (repeatable)")
    common.add_argument("--seed", type=int, help="random seed (default 0)")
    common.add_argument("--gamma", type=float, help="Cauchy dispersion (default 0.01)")
    common.add_argument("--delta-over-L", dest="delta_over_L", type=float,
                        help="MYULA step times L, in [1/25, 1/10] (default 1/25)")
    common.add_argument("--max-iter", dest="max_iter", type=int, help="iteration cap (default 200)")
    common.add_argument("--tol", type=float, help="relative-change tolerance (default 1e-3)")
    common.add_argument("--format", choices=("text", "json"), help="report format (default text)")
    common.add_argument("--output", "-o", metavar="PATH",
                        help="report file (detect, benchmark, selftest) or directory (simulate)")
    common.add_argument("-v", "--verbose", action="count", default=0, help="more logging")

    parser = _Parser(
        prog="wake-radon",
        description="Ship wake detection by Cauchy-regularised Radon inversion.",
        epilog=_config_epilog(),
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="{detect,simulate,benchmark,selftest}")
    sub.required = True

    p = sub.add_parser("detect", parents=[common], help="detect wakes in an image",
                       epilog=_config_epilog(), formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("input", help="PNG (8/16-bit gray), PGM (P5) or raw float32 image")
    p.add_argument("--overlay", metavar="PATH", help="write an annotated PNG")

    p = sub.add_parser("simulate", parents=[common], help="render synthetic scenes",
                       epilog=_config_epilog(), formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("--image-format", choices=("raw", "png", "pgm"), default="raw",
                   help="scene file format (default raw, lossless)")

    p = sub.add_parser("benchmark", parents=[common], help="score the detector on simulated scenes",
                       epilog=_config_epilog(), formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("--seeds", help="comma-separated scene seeds (default 0,1,2,3,4)")
    p.add_argument("--workers", type=int, help="worker processes (default WAKE_RADON_THREADS or 1)")

    p = sub.add_parser("selftest", parents=[common], help="run the numerical certification suite")
    p.add_argument("--perturb-prox", dest="perturb_prox", type=float, default=0.0,
                   help=argparse.SUPPRESS)
    return parser


def _overrides(args):
    out = {}
    for key in ("seed", "gamma", "delta_over_L", "max_iter", "tol", "format", "output",
                "overlay", "seeds"):
        v = getattr(args, key, None)
        if v is not None:
            out[key] = v
    if args.verbose:
        out["verbose"] = args.verbose
    for item in args.set:
        if "=" not in item:
            raise UsageError(f"--set expects KEY=VALUE, got {item!r}")
        k, v = item.split("=", 1)
        out[k.strip()] = v.strip()
    return out


def main(argv=None):
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(
        level=logging.WARNING - 10 * min(args.verbose, 2),
        format="%(levelname)s %(name)s: %(message)s",
    )
    if not args.verbose:
        warnings.simplefilter("ignore", RuntimeWarning)
    try:
        cfg = load_config(args.config, _overrides(args))
        if args.command == "detect":
            cmd_detect(args.input, cfg)
        elif args.command == "simulate":
            cmd_simulate(cfg, args.image_format)
        elif args.command == "benchmark":
            cmd_benchmark(cfg, args.workers)
        else:
            report = cmd_selftest(cfg, args.perturb_prox)
            if not report.passed:
                names = ", ".join(f"{c.name} ({c.subject})" for c in report.failures)
                print(f"selftest failed: {names}", file=sys.stderr)
                return EXIT_NUMERIC
    except UsageError as exc:
        print(f"wake-radon: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except StageError as exc:
        print(f"wake-radon: stage {exc.stage} failed: {exc.cause}", file=sys.stderr)
        return exc.exit_code
    except WakeRadonError as exc:
        print(f"wake-radon: {exc}", file=sys.stderr)
        return exc.exit_code
    except (ValueError, FloatingPointError, ArithmeticError) as exc:
        print(f"wake-radon: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
