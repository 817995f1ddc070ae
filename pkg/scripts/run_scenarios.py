"""Run every shipped scenario through the CLI and compare with its expected values.

    python3 scripts/run_scenarios.py [--outdir results]
"""

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from battling import cli

ROOT = Path(__file__).resolve().parents[1]
RUNS = [
    ("interval_boundary.json", "solve"),
    ("interval_boundary.json", "dynamics"),
    ("interval_interior.json", "solve"),
    ("square_opposed.json", "classify"),
    ("square_diagonal.json", "classify"),
    ("diamond_wdse.json", "wdse"),
    ("square_wdse.json", "wdse"),
    ("powers_of_two.json", "finite-enumerate"),
    ("alignment.json", "align-run"),
]


def check(expected: dict, report: dict) -> list[str]:
    bad = []
    for key, want in expected.items():
        if key == "profile":
            got = report["solve"]["profile"] if "solve" in report else report["profile"]
            ok = np.allclose(got, want, atol=1e-6)
        elif key == "receiver":
            ok = np.allclose(report["receiver"], want, atol=1e-6)
        elif key == "interior_players":
            if "audit" not in report:
                continue
            ok = report["audit"]["interior_players"] == want
        elif key == "free_coordinates":
            ok = [f["free_coordinates"] for f in report["tie_faces"]] == want
        elif key == "final_actions":
            ok = report["final_actions"] == want
        elif key == "truthful_mle_range":
            ok = want[0] <= report["records"][0]["mle"] <= want[1]
        elif key == "final_mle_range":
            ok = want[0] <= report["final_mle"] <= want[1]
        elif key in report:
            ok = report[key] == want
        else:
            continue
        if not ok:
            bad.append(key)
    return bad


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--outdir", default="results")
    args = ap.parse_args(argv)
    out = Path(args.outdir)
    out.mkdir(parents=True, exist_ok=True)
    failures = 0
    for name, command in RUNS:
        path = ROOT / "scenarios" / name
        report_path = out / f"{path.stem}_{command}.json"
        code = cli.run([command, str(path), "--out", str(report_path)])
        expected = json.loads(path.read_text()).get("expected", {})
        bad = ["exit code"] if code else check(expected, json.loads(report_path.read_text()))
        failures += bool(bad)
        status = "ok" if not bad else "MISMATCH " + ", ".join(bad)
        print(f"{name:18s} {command:17s} {status}")
    return 1 if failures else 0


if __name__ == "__main__":
    sys.exit(main())
