"""``corona-lab`` command line entry point."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from .errors import LabError
from .harness import COMMANDS, EXIT_CONFIG, ScenarioConfig, corpus, parse_config, run_scenario, to_jsonable

log = logging.getLogger("corona_lab")


def _load(args) -> list[ScenarioConfig]:
    if args.corpus is not None:
        items = corpus()
        if args.corpus:
            items = [d for d in items if d["name"] == args.corpus]
            if not items:
                raise LabError("CONFIG", f"no corpus scenario named {args.corpus!r}")
        return parse_config(items)
    try:
        obj = json.loads(Path(args.config).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise LabError("CONFIG", str(exc)) from exc
    return parse_config(obj)


def _one(payload):
    sc, command, slack = payload
    return run_scenario(sc, command, slack)


def _summary(report: dict) -> list[str]:
    name = report["scenario"]["name"]
    lines = [f"== {name}: exit {report['exit_code']}"]
    for a in report["assertions"]:
        mark = "PASS" if a["pass"] else "FAIL"
        detail = f"  ({a['detail']})" if a.get("detail") else ""
        lines.append(f"  {mark} {a['name']}{detail}")
    return lines


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="corona-lab", description=__doc__)
    p.add_argument("command", choices=COMMANDS + ("corpus",))
    src = p.add_mutually_exclusive_group()
    src.add_argument("--config", help="JSON scenario file")
    src.add_argument("--corpus", nargs="?", const="", default=None, metavar="NAME",
                     help="run the built-in corpus (or one scenario of it)")
    p.add_argument("--out", help="JSON report path; CSV tables are written next to it")
    p.add_argument("--jobs", type=int, default=1, help="worker processes across scenarios")
    p.add_argument("--slack", type=float, default=None, help="relative slack on bound comparisons (default 0.05)")
    p.add_argument("--dir", help="with 'corpus': directory to write scenario configs into")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")

    if args.command == "corpus":
        items = corpus()
        if args.dir:
            d = Path(args.dir)
            d.mkdir(parents=True, exist_ok=True)
            for item in items:
                fname = item["name"].replace("/", "_") + ".json"
                (d / fname).write_text(json.dumps(item, indent=2) + "\n", encoding="utf-8")
        else:
            print(json.dumps({"scenarios": items}, indent=2))
        return 0

    if args.config is None and args.corpus is None:
        print("error: one of --config or --corpus is required", file=sys.stderr)
        return EXIT_CONFIG
    try:
        scenarios = _load(args)
    except LabError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    payloads = [(sc, args.command, args.slack) for sc in scenarios]
    log.info("%s: %d scenario(s), %d job(s)", args.command, len(payloads), args.jobs)
    if args.jobs > 1 and len(payloads) > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as ex:
            results = list(ex.map(_one, payloads))
    else:
        results = []
        for p in payloads:
            log.info("running %s", p[0].name)
            results.append(_one(p))

    reports = [to_jsonable(r) for r, _, _ in results]
    codes = [c for _, c, _ in results]
    for r in reports:
        print("\n".join(_summary(r)))

    if args.out:
        out = Path(args.out)
        out.parent.mkdir(parents=True, exist_ok=True)
        doc = reports[0] if len(reports) == 1 else {"schema": 1, "reports": reports}
        out.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")
        for (_, _, exports), r in zip(results, reports):
            prefix = out.stem if len(reports) == 1 else f"{out.stem}.{r['scenario']['name'].replace('/', '_')}"
            for suffix, text in exports.items():
                (out.parent / f"{prefix}.{suffix}").write_text(text, encoding="utf-8")
    return max(codes)


if __name__ == "__main__":
    sys.exit(main())
