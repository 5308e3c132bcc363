"""Command-line entry point: ``bsphases <command> [options]``.

Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""

import argparse
import json
import sys

import numpy as np

from .calibration import FROZEN, run_calibration, write_table
from .errors import ConfigError, DomainError, NumericalError
from .graph import assemble, build_graph
from .harness import ExperimentConfig, fit_convergence, load_config, run_validation, sweep_csv
from .model import family_from_config
from .oracle import oracle_channel
from .spectral import avoided_params, find_crossings

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL = 0, 2, 3


def _floats(text):
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise ConfigError(f"bad number list {text!r}") from exc


def _config(args):
    if args.config:
        cfg = load_config(args.config)
        family = cfg.family
        h_values, mu_values = cfg.h_values, cfg.mu_values
        tol, out, interval = cfg.oracle_tol, cfg.output_path, cfg.interval
    else:
        family, h_values, mu_values, tol, out, interval = args.family, [0.01], [0.1], 1e-9, None, None
    if args.h:
        h_values = _floats(args.h)
    if args.mu:
        mu_values = _floats(args.mu)
    if args.tol is not None:
        tol = args.tol
    if args.out:
        out = args.out
    return ExperimentConfig(family, h_values, mu_values, interval, tol, out)


def _matrix(m):
    return np.array2string(np.asarray(m), precision=6, suppress_small=True, max_line_width=160)


def _cmd_crossings(args, cfg):
    f = cfg.build_family()
    cs = find_crossings(f, cfg.interval)
    print(f"{'t_star':>16} {'pair':>7} {'lambda':>12} {'slope-':>10} {'slope+':>10}")
    for c in cs:
        print(f"{c.t_star:16.12f} {str(c.branch_pair):>7} {c.lambda_star:12.6f} "
              f"{c.slope_minus:10.6f} {c.slope_plus:10.6f}")
    if args.mu:
        for mu in cfg.mu_values:
            for c in cs:
                ap = avoided_params(f, c, mu)
                print(f"mu={list(mu)} t*={c.t_star:.6f}: gap={ap.gap:.12g} gamma0={ap.gamma0:.12g} t_min={ap.t_min:.12g}")
    return {"crossings": [c.__dict__ for c in cs]}


def _cmd_oracle(args, cfg):
    f = cfg.build_family()
    h, mu = cfg.h_values[0], cfg.mu_values[0]
    r = oracle_channel(f, mu, h, tol=cfg.oracle_tol, interval=cfg.interval)
    print(f"h={h} mu={list(mu)} steps={r.steps} est_error={r.est_error:.3e} defect={r.defect:.3e}")
    print("channel matrix:\n" + _matrix(r.s_channel))
    print("probabilities:\n" + _matrix(np.abs(r.s_channel) ** 2))
    return {"h": h, "mu": list(mu), "est_error": r.est_error,
            "s_channel_re": r.s_channel.real.tolist(), "s_channel_im": r.s_channel.imag.tolist()}


def _cmd_predict(args, cfg):
    f = cfg.build_family()
    h, mu = cfg.h_values[0], cfg.mu_values[0]
    g = build_graph(f, mu, interval=cfg.interval, h=h)
    s = assemble(g, h).s_pred
    print(f"h={h} mu={list(mu)} vertices={len(g.vertices)} cycles={len(g.cycles)}")
    for v in g.vertices:
        print(f"  vertex {v.index}: t_c={v.t_c:.10f} pair={v.pair} gamma0={v.data.gamma0:.6e}")
    for i, c in enumerate(g.cycles):
        print(f"  cycle {i}: S0={c.s0:.10f} S1={c.s1_nabla:.6f} m={c.maslov:g} |H|={abs(c.holonomy):.15f}")
    print("predicted matrix:\n" + _matrix(s))
    print("probabilities:\n" + _matrix(np.abs(s) ** 2))
    return {"h": h, "mu": list(mu), "s_pred_re": s.real.tolist(), "s_pred_im": s.imag.tolist()}


def _cmd_validate(args, cfg):
    rep = run_validation(cfg)
    for r in rep.records:
        flag = " FLAGGED" if r.flagged else ""
        print(f"h={r.h:<10g} mu={list(r.mu)} sup_err={r.sup_err:.3e} "
              f"defect_pred={r.defect_pred:.1e} defect_oracle={r.defect_oracle:.1e}{flag}")
    if len(set(cfg.h_values)) >= 2:
        try:
            rep.convergence_order = fit_convergence(rep, min_points=2, min_decades=0.0)
            print(f"fitted order in h: {rep.convergence_order:.3f}")
        except (DomainError, NumericalError):
            pass
    return rep.to_json()


def _cmd_sweep(args, cfg):
    path = sweep_csv(cfg)
    print(f"wrote {path} and {path.with_suffix('.json')}")
    return None


def _cmd_calibrate(args, cfg):
    res = run_calibration(tol=cfg.oracle_tol)
    for c in res["candidates"]:
        print(f"sigma={c['counter_sign']:+d} m={c['leg_maslov_half']:+.1f} sup_err={c['sup_err']:.4e}")
    sel = res["selected"]
    print(f"selected: sigma={sel['counter_sign']:+d} m={sel['leg_maslov_half']:+.1f} "
          f"(frozen: sigma={FROZEN.counter_sign:+d} m={FROZEN.leg_maslov_half:+.1f})")
    write_table(res, args.out or "calibration.json")
    return None


COMMANDS = {
    "crossings": _cmd_crossings,
    "oracle": _cmd_oracle,
    "predict": _cmd_predict,
    "validate": _cmd_validate,
    "sweep": _cmd_sweep,
    "calibrate": _cmd_calibrate,
}


def make_parser():
    p = argparse.ArgumentParser(prog="bsphases", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        s = sub.add_parser(name)
        s.add_argument("--config", help="YAML or JSON experiment file")
        s.add_argument("--out", help="output path")
        s.add_argument("--h", help="comma-separated h values")
        s.add_argument("--mu", help="comma-separated scalar mu values")
        s.add_argument("--tol", type=float, help="oracle tolerance")
        s.add_argument("--family", default="paper_example", help="built-in family (without --config)")
    return p


def main(argv=None):
    args = make_parser().parse_args(argv)
    try:
        cfg = _config(args)
        payload = COMMANDS[args.command](args, cfg)
        if payload is not None and args.out and args.command not in ("sweep", "calibrate"):
            with open(args.out, "w") as fh:
                json.dump(payload, fh, indent=1, default=str)
                fh.write("\n")
    except (ConfigError, DomainError, OSError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
