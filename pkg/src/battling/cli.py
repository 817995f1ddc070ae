"""Command-line entry point.

Usage: ``battling <command> SCENARIO.json [flags]``. Every command writes a
deterministic JSON report (stdout, or ``--out``). Flags override the
scenario's ``options``; the scenario schema is in ``docs/schema.md``.

Exit codes: 0 success, 2 unreadable/invalid scenario, 3 solver
non-convergence, 4 audit or dominance violation, 1 anything else.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import align, finite, solvers, wdse
from .game import GameSpec, SpecError, as_profile
from .geometry import GeometryError
from .potential import receiver_aggregate
from .report import emit_report

KIND_SECTION = {"continuous": "game", "wdse": "game", "finite": "finite", "alignment": "alignment"}
COMMAND_KINDS = {
    "solve": {"continuous"},
    "dynamics": {"continuous"},
    "classify": {"continuous"},
    "wdse": {"wdse", "continuous"},
    "finite-solve": {"finite"},
    "finite-enumerate": {"finite"},
    "align-run": {"alignment"},
    "align-surface": {"alignment"},
}


class ScenarioError(ValueError):
    def __init__(self, message: str, location: str | None = None):
        super().__init__(message)
        self.location = location


def load_scenario(path) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as e:
        raise ScenarioError(f"cannot read scenario: {e.strerror}", str(path)) from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise ScenarioError(e.msg, f"line {e.lineno} column {e.colno}") from None
    if not isinstance(doc, dict):
        raise ScenarioError("scenario must be a JSON object", "$")
    kind = doc.get("kind")
    if kind not in KIND_SECTION:
        raise ScenarioError(f"kind must be one of {sorted(KIND_SECTION)}", "kind")
    present = [s for s in ("game", "finite", "alignment") if s in doc]
    if present != [KIND_SECTION[kind]]:
        raise ScenarioError(f"kind {kind!r} needs exactly one section {KIND_SECTION[kind]!r}, "
                            f"found {present}", "$")
    for key in ("options", "outputs"):
        if key in doc and not isinstance(doc[key], dict):
            raise ScenarioError(f"{key} must be an object", key)
    return doc


def _build(doc: dict):
    kind = doc["kind"]
    section = KIND_SECTION[kind]
    try:
        if section == "game":
            return GameSpec.from_dict(doc["game"])
        if section == "finite":
            return finite.FiniteGameSpec.from_dict(doc["finite"])
        return align.AlignmentScenario.from_dict(doc["alignment"])
    except SpecError as e:
        loc = section if e.location is None else f"{section}.{e.location}"
        raise ScenarioError(str(e), loc) from None
    except (GeometryError, ValueError, TypeError) as e:
        raise ScenarioError(str(e), section) from None


def _options(doc: dict, args) -> dict:
    opts = dict(doc.get("options", {}))
    for flag, key in (("seed", "seed"), ("tol", "tol"), ("restarts", "restarts"),
                      ("max_iters", "max_iters"), ("samples", "samples")):
        val = getattr(args, flag, None)
        if val is not None:
            opts[key] = val
    return opts


def _start(spec: GameSpec, opts: dict):
    if "start" in opts:
        try:
            return as_profile(spec, opts["start"])
        except SpecError as e:
            raise ScenarioError(str(e), "options.start") from None
    return spec.space.project_rows(spec.t)


def cmd_solve(spec, opts, args, outputs):
    rep = solvers.pgd_solve(spec, _start(spec, opts), step=opts.get("step"),
                            max_iters=int(opts.get("max_iters", 200_000)),
                            tol=float(opts.get("tol", 1e-9)),
                            record=bool(args.trajectory or outputs.get("trajectory")))
    if not rep.converged:
        raise solvers.NonConvergence("projected gradient descent did not converge", rep)
    ver = solvers.verify_pure_ne(spec, rep.profile, float(opts.get("eps", 1e-6)))
    out = {"command": "solve", "solve": rep.to_dict(), "verification": ver.to_dict(),
           "receiver": receiver_aggregate(spec, rep.profile).tolist(),
           "warnings": list(spec.warnings)}
    if spec.targets_distinct and ver.passed:
        out["audit"] = solvers.exaggeration_audit(spec, rep.profile).to_dict()
    else:
        out["audit"] = None
    _trajectory(rep, args, outputs)
    return out


def cmd_dynamics(spec, opts, args, outputs):
    rep = solvers.br_dynamics(spec, _start(spec, opts),
                              max_rounds=int(opts.get("max_rounds", 10_000)),
                              tol=float(opts.get("tol", 1e-9)), record=True)
    if not rep.converged:
        raise solvers.NonConvergence("best-response dynamics did not converge", rep)
    ver = solvers.verify_pure_ne(spec, rep.profile, float(opts.get("eps", 1e-6)))
    _trajectory(rep, args, outputs)
    return {"command": "dynamics", "solve": rep.to_dict(), "verification": ver.to_dict(),
            "receiver": receiver_aggregate(spec, rep.profile).tolist(),
            "steps": [{"iteration": it, "phi": phi, "profile": p.tolist()}
                      for it, phi, p in rep.trajectory]}


def cmd_classify(spec, opts, args, outputs):
    rep = solvers.classify_cardinality(spec, restarts=int(opts.get("restarts", 8)),
                                       seed=int(opts.get("seed", 0)),
                                       tol=float(opts.get("tol", 1e-9)),
                                       eps=float(opts.get("eps", 1e-6)))
    return {"command": "classify", **rep.to_dict()}


def cmd_wdse(spec, opts, args, outputs):
    res = wdse.wdse_solve(spec)
    ver = wdse.wdse_verify(spec, res.profile, samples=int(opts.get("samples", 1000)),
                           seed=int(opts.get("seed", 0)))
    return {"command": "wdse", **res.to_dict(), "verification": ver.to_dict()}


def _finite_start(spec, opts):
    if "start" in opts:
        try:
            return tuple(finite.check_action(spec, a, i) for i, a in enumerate(opts["start"]))
        except (SpecError, TypeError) as e:
            raise ScenarioError(str(e), "options.start") from None
    if "seed" in opts:
        return finite.random_start(spec, np.random.default_rng(int(opts["seed"])))
    return tuple(next(iter(spec.actions(i))) for i in range(spec.n))


def cmd_finite_solve(spec, opts, args, outputs):
    rep = finite.finite_br_dynamics(spec, _finite_start(spec, opts),
                                    max_rounds=int(opts.get("max_rounds", 1000)),
                                    enumeration_cap=int(opts.get("enumeration_cap",
                                                                 finite.ENUMERATION_CAP)))
    if not rep.converged:
        raise solvers.NonConvergence("finite best-response dynamics did not converge", rep)
    return {"command": "finite-solve", **rep.to_dict(),
            "receiver": finite.finite_receiver(spec, rep.profile).tolist(),
            "potential": finite.finite_potential(spec, rep.profile),
            "is_pure_ne": finite.is_pure_ne(spec, rep.profile)}


def cmd_finite_enumerate(spec, opts, args, outputs):
    nes = finite.enumerate_pure_ne(spec, cap=int(opts.get("profile_cap", finite.PROFILE_CAP)))
    return {"command": "finite-enumerate", "count": len(nes),
            "equilibria": [[list(a) for a in p] for p in nes]}


def cmd_align_run(scn, opts, args, outputs):
    traj = align.alignment_dynamics(scn, max_iters=int(opts.get("max_iters", 20)))
    if args.trajectory or outputs.get("trajectory"):
        traj.write_csv(args.trajectory or outputs["trajectory"])
    dataset_path = args.dataset or outputs.get("dataset")
    if dataset_path:
        pools = [align.draw_pairs(scn, j) for j in range(scn.n)]
        parts = [align.sample_labels(scn, j, [a], pools[j])
                 for j, a in enumerate(traj.final_actions)]
        align.PreferenceDataset.concat(parts).write_csv(dataset_path)
    out = {"command": "align-run", "scenario": scn.to_dict(), **traj.to_dict()}
    if scn.d == 1:
        out["theory"] = align.theoretical_ne_oracle(scn).reshape(-1).tolist()
    return out


def cmd_align_surface(scn, opts, args, outputs):
    actions = opts.get("actions", [float(t[0]) for t in scn.true_ideal])
    lo = float(opts.get("theta_lo", scn.action_interval[0]))
    hi = float(opts.get("theta_hi", scn.action_interval[1]))
    thetas = np.linspace(lo, hi, int(opts.get("points", 201)))
    pools = [align.draw_pairs(scn, j) for j in range(scn.n)]
    ds = align.PreferenceDataset.concat(align.sample_labels(scn, j, [a], pools[j])
                                        for j, a in enumerate(actions))
    ll = align.loglik_surface(ds, thetas)
    path = args.trajectory or outputs.get("surface")
    if path:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["theta", "loglik"])
            for th, v in zip(thetas, ll):
                w.writerow([repr(float(th)), repr(float(v))])
    return {"command": "align-surface", "actions": list(actions),
            "mle": align.mle_fit(ds, tol=scn.mle_tol).tolist(),
            "theta_argmax_on_grid": float(thetas[int(np.argmax(ll))]),
            "points": len(thetas)}


def _trajectory(rep, args, outputs):
    path = args.trajectory or outputs.get("trajectory")
    if path:
        if rep.trajectory is None:
            raise ValueError("trajectory requested but not recorded")
        solvers.write_trajectory_csv(rep, path)


COMMANDS = {
    "solve": cmd_solve,
    "dynamics": cmd_dynamics,
    "classify": cmd_classify,
    "wdse": cmd_wdse,
    "finite-solve": cmd_finite_solve,
    "finite-enumerate": cmd_finite_enumerate,
    "align-run": cmd_align_run,
    "align-surface": cmd_align_surface,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="battling", description=__doc__.splitlines()[0])
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("scenario", help="scenario JSON file")
    p.add_argument("--out", help="report path (default: stdout)")
    p.add_argument("--trajectory", help="CSV path for trajectories / surfaces")
    p.add_argument("--dataset", help="CSV path for final preference data (align-run)")
    p.add_argument("--seed", type=int)
    p.add_argument("--tol", type=float)
    p.add_argument("--restarts", type=int)
    p.add_argument("--max-iters", dest="max_iters", type=int)
    p.add_argument("--samples", type=int)
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def _error(kind: str, message: str, location=None, code: int = 1) -> int:
    obj = {"error": {"type": kind, "message": message, "location": location}}
    sys.stdout.write(emit_report(obj))
    return code


def run(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    try:
        doc = load_scenario(args.scenario)
        if doc["kind"] not in COMMAND_KINDS[args.command]:
            raise ScenarioError(f"command {args.command!r} cannot run a {doc['kind']!r} scenario",
                                "kind")
        obj = _build(doc)
        outputs = doc.get("outputs", {})
        report = COMMANDS[args.command](obj, _options(doc, args), args, outputs)
    except ScenarioError as e:
        return _error("ScenarioError", str(e), e.location, 2)
    except solvers.NonConvergence as e:
        return _error("NonConvergence", str(e), None, 3)
    except (solvers.AuditViolation, wdse.DominanceViolation) as e:
        return _error(type(e).__name__, str(e), None, 4)
    except (solvers.SolverError, finite.InstanceTooLarge, align.MonotonicityViolation,
            ValueError) as e:
        return _error(type(e).__name__, str(e), None, 1)
    out_path = args.out or outputs.get("report")
    text = emit_report(report, out_path)
    if out_path is None:
        sys.stdout.write(text)
    return 0


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
