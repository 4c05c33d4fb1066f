"""Command-line front end.

Exit codes: 0 success, 2 usage or invalid parameters, 3 numerical failure,
4 verification failure. Tables go to stdout unless ``--output`` is given.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys

import numpy as np

from . import pulse, semiclassics, spectrum, steady
from .errors import NumericalFailure
from .params import stationary_inputs

EXIT_USAGE = 2
EXIT_NUMERICAL = 3
EXIT_VERIFY = 4

ORACLE_TOL = 1e-8
PULSE_TOL = 1e-6


class VerificationFailed(Exception):
    pass


def fmt(x) -> str:
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    if isinstance(x, str):
        return x
    return "%.17g" % float(x)


def parse_grid(text: str) -> list[float]:
    """``a:b:step`` (inclusive of ``b`` when it lies on the grid) or a comma list."""
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ValueError(f"grid must be start:stop:step, got {text!r}")
        a, b, h = (float(x) for x in parts)
        if h <= 0 or b < a:
            raise ValueError(f"invalid grid {text!r}")
        n = int(math.floor((b - a) / h + 1e-9)) + 1
        return [a + k * h for k in range(n)]
    return [float(x) for x in text.split(",") if x.strip()]


class Table:
    def __init__(self, command: str, columns: list[str], params: dict):
        self.command = command
        self.columns = columns
        self.params = params
        self.rows: list[list] = []
        self.meta: dict = {}

    def add(self, row):
        self.rows.append(list(row))

    def to_csv(self) -> str:
        lines = [f"# superlase {self.command}"]
        lines.append("# " + " ".join(f"{k}={fmt(v)}" for k, v in self.params.items()))
        for k, v in self.meta.items():
            lines.append(f"# {k}={v if isinstance(v, str) else fmt(v)}")
        lines.append(",".join(self.columns))
        lines.extend(",".join(fmt(x) for x in row) for row in self.rows)
        return "\n".join(lines) + "\n"

    def to_json(self) -> str:
        def clean(x):
            if isinstance(x, (np.floating, float)):
                return float(x)
            if isinstance(x, np.integer):
                return int(x)
            return x

        doc = {
            "command": self.command,
            "parameters": {k: clean(v) for k, v in self.params.items()},
            "metadata": {k: clean(v) for k, v in self.meta.items()},
            "columns": self.columns,
            "rows": [[clean(x) for x in r] for r in self.rows],
        }
        return json.dumps(doc, indent=1) + "\n"

    def render(self, form: str) -> str:
        return self.to_json() if form == "json" else self.to_csv()


def _emit(args, tables: list[Table], sidecar: dict | None = None):
    body = "\n".join(t.render(args.format) for t in tables)
    if args.output:
        with open(args.output, "w", newline="\n") as fh:
            fh.write(body)
        if sidecar is not None:
            with open(args.output + ".json", "w", newline="\n") as fh:
                fh.write(json.dumps(sidecar, indent=1, sort_keys=True) + "\n")
    else:
        sys.stdout.write(body)


def _pump_values(args) -> list[float]:
    if args.p is not None and args.p_grid is not None:
        raise ValueError("give either --p or --p-grid, not both")
    if args.p is None and args.p_grid is None:
        raise ValueError("one of --p or --p-grid is required")
    return [args.p] if args.p is not None else parse_grid(args.p_grid)


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("SUPERLASE_THREADS", "1")))
    except ValueError:
        return 1


def cmd_semiclassical(args):
    grid = _pump_values(args)
    for p in grid:
        stationary_inputs(args.N, args.c, p)
    t = Table("semiclassical", ["p", "S00", "S11", "S22", "alpha"], {"N": args.N, "c": args.c})
    for p in grid:
        r = semiclassics.steady(args.N, args.c, p)
        t.add([p, r.S00bar, r.S11bar, r.S22bar, r.alpha])
    _emit(args, [t])


def cmd_steady(args):
    grid = _pump_values(args)
    for p in grid:
        stationary_inputs(args.N, args.c, p)
    if args.verify_oracle and args.N > 8:
        raise ValueError("--verify-oracle is limited to N <= 8")
    cols = ["p", "S00", "S11", "S22", "trace", "var00", "var11", "var22",
            "sc_S00", "sc_S11", "sc_S22", "pt_S00", "pt_S11", "pt_S22"]
    if args.verify_oracle:
        cols.append("oracle_max_abs_diff")
    t = Table("steady", cols, {"N": args.N, "c": args.c})
    rows = steady.sweep_pump(args.N, args.c, grid, workers=_threads())
    worst = 0.0
    for row in rows:
        q = row.quantum
        out = [row.p, q.S00, q.S11, q.S22, q.total, q.var00, q.var11, q.var22,
               *row.semiclassical, *row.perturbative]
        if args.verify_oracle:
            rho = steady.stationary_state(args.N, args.c, row.p)
            orc = steady.evolve_oracle(args.N, args.c, row.p, horizon=args.oracle_horizon,
                                       stop_when_relaxed=True)
            diff = float(np.max(np.abs(rho.values - orc.rho.values)))
            worst = max(worst, diff)
            out.append(diff)
        t.add(out)
    tables = [t]
    if args.verify_oracle:
        t.meta["oracle_tolerance"] = ORACLE_TOL
        t.meta["oracle_worst"] = worst
    if args.coeff_diff:
        p_ref = max(grid)
        diff = steady.coefficient_diff(args.N, args.c, p_ref)
        d = Table("steady --coeff-diff",
                  ["row_l", "row_m", "row_r", "col_l", "col_m", "col_r", "printed", "derived", "kind"],
                  {"N": args.N, "c": args.c, "p": p_ref})
        d.meta["verdict"] = diff.verdict()
        for e in diff.entries:
            d.add([*e.row, *e.col, e.literal, e.derived, e.kind])
        tables.append(d)
    _emit(args, tables)
    if args.verify_oracle and worst > ORACLE_TOL:
        raise VerificationFailed(f"oracle disagreement {worst:.3e} > {ORACLE_TOL}")


def _pulse_sd(args):
    prm = stationary_inputs(1, args.c, args.p)
    if args.p <= 0:
        raise ValueError("pulsed regime needs p > 0")
    if args.c >= 1:
        raise ValueError("pulsed regime needs c < 1")
    return prm.s, prm.d


def cmd_pulse(args):
    s, d = _pulse_sd(args)
    taus = np.linspace(0.0, 2.0 * math.pi, args.tau_points, endpoint=False)
    params = {"p": args.p, "c": args.c, "s": s, "d": d}
    if args.both:
        ser = pulse.pulse_profile(s, d, taus, "series", n_max=args.n_max)
        quad = pulse.pulse_profile(s, d, taus, "quadrature")
        t = Table("pulse", ["tau", "Int_series", "Int_quadrature", "rel_diff"], params)
        worst = 0.0
        for tau, a, b in zip(taus, ser.values, quad.values):
            scale = max(abs(a), abs(b))
            rel = abs(a - b) / scale if scale > 0 else 0.0
            worst = max(worst, rel)
            t.add([tau, a, b, rel])
        t.meta.update({"method": "both", "n_max": ser.truncation, "max_rel_diff": worst,
                       "transient_periods": quad.diagnostics["transient_periods"]})
    else:
        prof = pulse.pulse_profile(s, d, taus, args.method, n_max=args.n_max)
        t = Table("pulse", ["tau", "Int"], params)
        for tau, v in zip(taus, prof.values):
            t.add([tau, v])
        t.meta["method"] = prof.method
        if prof.truncation is not None:
            t.meta["n_max"] = prof.truncation
        worst = 0.0
    if args.gaussian:
        g = pulse.gaussian_approx(s, d)
        t.meta.update({"tau_max": g.tau_max, "tau_min": g.tau_min, "sigma": g.width,
                       "log_peak_height": g.log_peak_height, "epsilon": g.epsilon})
    _emit(args, [t])
    if args.both and worst > PULSE_TOL:
        raise VerificationFailed(f"series/quadrature disagreement {worst:.3e} > {PULSE_TOL}")


def cmd_spectrum(args):
    s, d = _pulse_sd(args)
    grid = parse_grid(args.omega)
    if args.two_sided:
        grid = sorted(set([-w for w in grid] + grid))
    sp = spectrum.time_averaged_spectrum(s, d, grid, n_max=args.n_max, l_max=args.l_max)
    t = Table("spectrum", ["omega_over_Omega", "S"], {"p": args.p, "c": args.c, "s": s, "d": d})
    for w, v in zip(sp.omega_over_Omega, sp.values):
        t.add([w, v])
    diag = {"n_max": sp.n_max, "l_max": sp.l_max, "max_imag_residual": sp.max_imag_residual,
            "truncation_change": sp.truncation_change}
    if args.two_sided:
        vals = dict(zip(sp.omega_over_Omega.tolist(), sp.values.tolist()))
        peak = max(abs(v) for v in vals.values()) or 1.0
        diag["parity_defect"] = max(abs(vals[w] - vals[-w]) for w in vals) / peak
    t.meta.update(diag)
    _emit(args, [t], sidecar={"command": "spectrum", "p": args.p, "c": args.c, **diag})


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="superlase", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--format", choices=("csv", "json"), default="csv")
        p.add_argument("--output", "-o", default=None, help="output path (stdout if omitted)")

    def pump(p):
        p.add_argument("--N", type=int, required=True)
        p.add_argument("--c", type=float, required=True)
        p.add_argument("--p", type=float, default=None)
        p.add_argument("--p-grid", default=None, help="start:stop:step or comma list")

    sc = sub.add_parser("semiclassical", help="closed-form semiclassical occupations")
    pump(sc)
    common(sc)
    sc.set_defaults(func=cmd_semiclassical)

    st = sub.add_parser("steady", help="exact stationary occupations vs semiclassics and perturbation")
    pump(st)
    st.add_argument("--verify-oracle", action="store_true",
                    help="cross-check against time integration (N <= 8)")
    st.add_argument("--oracle-horizon", type=float, default=1000.0)
    st.add_argument("--coeff-diff", action="store_true",
                    help="append the printed-recurrence vs derived generator diff table")
    common(st)
    st.set_defaults(func=cmd_steady)

    pu = sub.add_parser("pulse", help="periodic pulse profile Int(tau)")
    pu.add_argument("--p", type=float, required=True)
    pu.add_argument("--c", type=float, required=True)
    pu.add_argument("--tau-points", type=int, default=100)
    pu.add_argument("--method", choices=("series", "quadrature"), default="series")
    pu.add_argument("--both", action="store_true", help="emit both methods and their difference")
    pu.add_argument("--gaussian", action="store_true", help="append Gaussian pulse estimate")
    pu.add_argument("--n-max", type=int, default=None)
    common(pu)
    pu.set_defaults(func=cmd_pulse)

    spc = sub.add_parser("spectrum", help="time-averaged spectrum S(omega/Omega)")
    spc.add_argument("--p", type=float, required=True)
    spc.add_argument("--c", type=float, required=True)
    spc.add_argument("--omega", required=True, help="start:stop:step or comma list")
    spc.add_argument("--two-sided", action="store_true")
    spc.add_argument("--n-max", type=int, default=None)
    spc.add_argument("--l-max", type=int, default=None)
    common(spc)
    spc.set_defaults(func=cmd_spectrum)
    return ap


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.func(args)
    except VerificationFailed as exc:
        print(f"superlase: verification failed: {exc}", file=sys.stderr)
        return EXIT_VERIFY
    except NumericalFailure as exc:
        print(f"superlase: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except ValueError as exc:
        print(f"superlase: invalid parameters: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return 0


if __name__ == "__main__":
    sys.exit(main())
