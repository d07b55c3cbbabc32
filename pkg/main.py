"""
Main Entry Point for the Hermite Spectrogram Toolkit
Command-line access to spectrogram densities, sampling and expectation experiments
"""
import argparse
import json
import sys
from typing import List, Optional

from dotenv import load_dotenv

from estimators.run_manager import COMMANDS, RunManager
from observability.langfuse_config import flush, log_run_event, tracing_enabled
from phasespace import __version__
from phasespace.errors import SpectroError
from tools.config_tools import ConfigTools
from tools.output_tools import OutputTools

load_dotenv()


def print_banner(command: str):
    """Print run banner"""
    print("=" * 60)
    print(f" Hermite spectrogram toolkit {__version__} :: {command}")
    print("=" * 60)
    print(f"Observability (Langfuse): {'on' if tracing_enabled() else 'off'}")
    print()


def print_summary(result):
    print("Summary:")
    for key, value in result.summary.items():
        print(f"  {key}: {value}")
    for path in result.outputs:
        print(f"  wrote {path}")


def add_run_flags(cmd: argparse.ArgumentParser):
    cmd.add_argument("--seed", type=int, help="master seed override")
    cmd.add_argument("--threads", type=int, help="worker threads (default: SPECTRO_THREADS or 1)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="spectro", description="Hermite spectrogram densities and expectations")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    coeffs = sub.add_parser("coeffs", help="print the exact weights of mu^N")
    coeffs.add_argument("--dim", type=int, required=True)
    coeffs.add_argument("--order", type=int, required=True)
    coeffs.add_argument("--out", help="also write the JSON to this path")
    add_run_flags(coeffs)

    for name in COMMANDS[1:]:
        cmd = sub.add_parser(name, help=f"run the {name} command from a JSON config")
        cmd.add_argument("--config", required=True, help="run configuration (JSON)")
        cmd.add_argument("--out", help="output path")
        add_run_flags(cmd)
    return parser


def run_coeffs(args) -> int:
    ConfigTools.resolve_threads(args.threads)
    payload = RunManager.coeffs(args.dim, args.order)
    meta = OutputTools.metadata(args.seed, {"dim": args.dim, "order": args.order})
    if args.out:
        OutputTools.write_json(args.out, payload, meta)
    print(json.dumps({**payload, "meta": meta}))
    return 0


def main(argv: Optional[List[str]] = None) -> int:
    """Main function; returns the process exit code"""
    args = build_parser().parse_args(argv)
    try:
        if args.command == "coeffs":
            return run_coeffs(args)
        print_banner(args.command)
        config = ConfigTools.load_config(args.config)
        manager = RunManager(config, seed=args.seed, threads=args.threads, out=args.out)
        result = manager.process(args.command)
        print_summary(result)
        return 0
    except (SpectroError, ValueError, OSError) as e:
        log_run_event("run_failed", "main", {"command": args.command, "error": str(e)})
        print(f"error: {e}", file=sys.stderr)
        return 1
    finally:
        flush()


if __name__ == "__main__":
    sys.exit(main())
