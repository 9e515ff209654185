"""Command-line runner.

Every subcommand resolves its configuration from built-in defaults, then an
optional ``key=value`` file (``--config``), then explicit flags. Results go to
``<out>/summary.jsonl`` (one JSON record per line, resolved config first) and
to CSV tables next to it. Exit status: 0 when every check passes, 1 when a
check fails or a computation refuses, 2 for configuration errors.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from fractions import Fraction

import numpy as np

from .bandset import equilibrium_measure, green_function, make_band_set
from .coffman import (assemble_free_case, classify_solution, diagonal_sum_check, find_profile_solution,
                      phi_psi_limit_check, random_decaying_system)
from .eigens import outside_spectrum, q_sum, variational_bound
from .errors import BandSetError, ParameterRangeError
from .oprl import (JacobiParams, detect_szego_limit, free_closed_form, polynomial_values, ratio_trace,
                   window_oscillation)
from .perturb import (DEFAULT_TAIL_TOL, check_condition_b, check_condition_c, make_perturbation,
                      sequence_norms)
from .torus import PeriodicJacobi, band_edge_solutions, bands_of_periodic, periodic_harmonic_measures

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


class ConfigError(ValueError):
    pass


DEFAULTS = {
    "base_a": "1",
    "base_b": "0",
    "family": "zero",
    "alpha": "",
    "omega": "",
    "x": "0+1i,1+1i",
    "N": "1000000",
    "Ns": "8000,32000",
    "stride": "10",
    "windows": "3",
    "tol": "0.01",
    "checkpoints": "1000,10000,100000,1000000",
    "kmax": "3",
    "tail_tol": str(DEFAULT_TAIL_TOL),
    "margin": "1e-8",
    "eig_tol": "1e-12",
    "bands": "-2:2",
    "E": "",
    "z": "0+0.5i",
    "m": "4:32",
    "random_systems": "0",
    "seed": "0",
    "out": ".",
}

PRESETS = {
    "free-closed-form": {"steps": ["closed-form"]},
    "example1": {"steps": ["ratio", "sums"],
                 "config": {"family": "example1", "alpha": "0.8", "omega": repr(math.sqrt(2) - 1),
                            "base_a": "1,2", "base_b": "0,0"}},
    "example2": {"steps": ["ratio", "sums", "eigs"],
                 "config": {"family": "example2", "alpha": "0.8"}},
    "example2-periodic": {"steps": ["ratio", "sums"],
                          "config": {"family": "example2", "alpha": "0.8", "base_a": "1,2", "base_b": "0,0"}},
    "variational": {"steps": ["variational"], "config": {"family": "example2", "alpha": "0.8"}},
}


def fmt_num(v) -> str:
    r = repr(float(v))
    return r[:-2] if r.endswith(".0") else r


def fmt_complex(c) -> str:
    c = complex(c)
    sign = "-" if math.copysign(1.0, c.imag) < 0 else "+"
    return f"{fmt_num(c.real)}{sign}{fmt_num(abs(c.imag))}i"


def parse_complex(s: str) -> complex:
    t = s.strip().replace(" ", "").replace("i", "j")
    try:
        return complex(t)
    except ValueError:
        raise ConfigError(f"cannot parse complex number {s!r}") from None


def _floats(s: str, key: str) -> list:
    try:
        return [float(v) for v in s.split(",") if v.strip()]
    except ValueError:
        raise ConfigError(f"{key}: expected comma-separated numbers, got {s!r}") from None


def _ints(s: str, key: str) -> list:
    try:
        return [int(float(v)) for v in s.split(",") if v.strip()]
    except ValueError:
        raise ConfigError(f"{key}: expected comma-separated integers, got {s!r}") from None


def _int(cfg, key):
    v = _ints(cfg[key], key)
    if len(v) != 1:
        raise ConfigError(f"{key}: expected one integer")
    return v[0]


def _float(cfg, key):
    v = _floats(cfg[key], key)
    if len(v) != 1:
        raise ConfigError(f"{key}: expected one number")
    return v[0]


def _positive(cfg, key):
    v = _float(cfg, key)
    if not v > 0:
        raise ConfigError(f"{key} must be positive")
    return v


def _m_range(s: str) -> list:
    if ":" in s:
        lo, hi = s.split(":")
        return list(range(int(lo), int(hi) + 1))
    return _ints(s, "m")


def read_config_file(path: str) -> dict:
    out = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected key=value")
            k, v = (p.strip() for p in line.split("=", 1))
            if k not in DEFAULTS:
                raise ConfigError(f"{path}:{lineno}: unknown key {k!r}")
            out[k] = v
    return out


def resolve(args, preset: dict | None = None) -> dict:
    cfg = dict(DEFAULTS)
    if preset:
        cfg.update(preset)
    if args.config:
        cfg.update(read_config_file(args.config))
    for k in DEFAULTS:
        v = getattr(args, k, None)
        if v is not None:
            cfg[k] = str(v)
    return cfg


def build_base(cfg) -> PeriodicJacobi:
    a, b = _floats(cfg["base_a"], "base_a"), _floats(cfg["base_b"], "base_b")
    try:
        return PeriodicJacobi(tuple(a), tuple(b))
    except ValueError as exc:
        raise ConfigError(f"base_a/base_b: {exc}") from None


def build_perturbation(cfg):
    alpha = _float(cfg, "alpha") if cfg["alpha"] else None
    omega = _float(cfg, "omega") if cfg["omega"] else None
    try:
        return make_perturbation(cfg["family"], alpha, omega)
    except ParameterRangeError as exc:
        raise ConfigError(f"family={cfg['family']}: {exc}") from None
    except ValueError as exc:
        raise ConfigError(f"family: {exc}") from None


class Report:
    """Collects summary records and CSV tables, then writes them in one go."""

    def __init__(self, cfg: dict):
        self.cfg = cfg
        self.records = [{"record": "config", "config": dict(sorted(cfg.items())), "seed": int(cfg["seed"])}]
        self.tables = {}
        self.failed = []

    def add(self, record: str, ok: bool | None = None, **fields):
        rec = {"record": record}
        rec.update(fields)
        if ok is not None:
            rec["ok"] = bool(ok)
            if not ok:
                self.failed.append(record)
        self.records.append(rec)

    def table(self, name: str, header: list, rows: list):
        self.tables[name] = (header, rows)

    def emit(self, out: str):
        os.makedirs(out, exist_ok=True)
        with open(os.path.join(out, "summary.jsonl"), "w", encoding="utf-8", newline="\n") as fh:
            for rec in self.records:
                fh.write(json.dumps(_jsonable(rec), sort_keys=True) + "\n")
        for name, (header, rows) in sorted(self.tables.items()):
            with open(os.path.join(out, name + ".csv"), "w", encoding="utf-8", newline="") as fh:
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(header)
                for row in rows:
                    w.writerow([_cell(v) for v in row])


def _cell(v):
    if isinstance(v, (complex, np.complexfloating)):
        return fmt_complex(v)
    if isinstance(v, (float, np.floating)):
        return fmt_num(v)
    if isinstance(v, (np.integer,)):
        return int(v)
    return v


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple, np.ndarray)):
        return [_jsonable(x) for x in v]
    if isinstance(v, (complex, np.complexfloating)):
        return fmt_complex(v)
    if isinstance(v, Fraction):
        return f"{v.numerator}/{v.denominator}"
    if isinstance(v, (np.floating, float)):
        f = float(v)
        return fmt_num(f) if not math.isfinite(f) else f
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, np.bool_):
        return bool(v)
    return v


# individual steps ---------------------------------------------------------

def step_closed_form(cfg, rep: Report):
    worst = 0.0
    xs = [2.5, 1j, 1 + 1j, 0.3 - 2j]
    for x in xs:
        vals, logs = polynomial_values(JacobiParams.free(), x, 100)
        ref = np.array([free_closed_form(x, n) for n in range(101)])
        worst = max(worst, float(np.max(np.abs(vals * np.exp(logs) / ref - 1))))
    rep.add("free_closed_form", ok=worst < 1e-9, max_rel_dev=worst, x=xs, n_max=100)


def step_bands(cfg, rep: Report):
    J = build_base(cfg)
    e = bands_of_periodic(J)
    hm = periodic_harmonic_measures(J)
    m = equilibrium_measure(e)
    dev = max((abs(float(f) - w) for f, w in zip(hm, m.harmonic_measures)), default=0.0)
    rep.add("bands", ok=dev < 1e-8, bands=[list(b) for b in e.bands], harmonic_measures=hm,
            equilibrium_harmonic_measures=list(m.harmonic_measures), max_dev=dev, capacity=m.capacity)


def step_equilibrium(cfg, rep: Report):
    try:
        e = make_band_set([tuple(float(v) for v in iv.split(":")) for iv in cfg["bands"].split(",")])
    except (ValueError, BandSetError) as exc:
        raise ConfigError(f"bands: {exc}") from None
    m = equilibrium_measure(e)
    ok = abs(m.mass - 1) <= 1e-10 and all(abs(r) <= 1e-10 for r in m.gap_residuals)
    ref = e.hull[1] + (e.hull[1] - e.hull[0])
    rep.add("equilibrium", ok=ok, bands=[list(b) for b in e.bands], gap_roots=list(m.gap_roots),
            harmonic_measures=list(m.harmonic_measures), capacity=m.capacity, mass=m.mass,
            gap_residuals=list(m.gap_residuals), green_at=ref, green=green_function(m, ref))


def step_torus(cfg, rep: Report):
    J = build_base(cfg)
    E = _float(cfg, "E") if cfg["E"] else bands_of_periodic(J).bands[-1][1]
    sol = band_edge_solutions(J, E)
    rep.add("torus", ok=sol.kappa > 0, E=E, kappa=sol.kappa, u_period=list(sol.u_period),
            s_period=list(sol.s_period), c1=sol.c1, c2=sol.c2, c3=sol.c3)


def step_ratio(cfg, rep: Report):
    J = build_base(cfg)
    pert = build_perturbation(cfg)
    N, stride, windows = _int(cfg, "N"), _int(cfg, "stride"), _int(cfg, "windows")
    tol = _positive(cfg, "tol")
    xs = [parse_complex(s) for s in cfg["x"].split(",")]
    if any(x.imag == 0 for x in xs):
        raise ConfigError("x: every energy must be off the real axis")
    for i, x in enumerate(xs):
        tr = ratio_trace(JacobiParams(J), JacobiParams(J, pert), x, N, stride)
        v = detect_szego_limit(tr, windows, tol)
        rep.add("ratio", ok=v.converged, x=x, N=N, status=v.status, limit=v.limit,
                oscillation=v.oscillation, windows=v.windows, decay_exponent=v.decay_exponent)
        pts = np.unique(np.geomspace(2 * stride, tr.N, 200).astype(np.int64) // stride * stride)
        idx = pts // stride - 1
        rows = [(int(n), tr.r[k].real, tr.r[k].imag, abs(tr.r[k]), window_oscillation(tr, n // 2, n))
                for n, k in zip(pts, idx) if k >= 0]
        rep.table(f"ratio_{i}", ["n", "re_r", "im_r", "abs_r", "osc_window"], rows)


def step_sums(cfg, rep: Report):
    J = build_base(cfg)
    pert = build_perturbation(cfg)
    m = equilibrium_measure(bands_of_periodic(J))
    cps = _ints(cfg["checkpoints"], "checkpoints")
    if any(b <= a for a, b in zip(cps, cps[1:])):
        raise ConfigError("checkpoints must be increasing")
    kmax, tail_tol = _int(cfg, "kmax"), _positive(cfg, "tail_tol")
    norms = sequence_norms(pert, cps[-1])
    rep.add("sequence_norms", l2=norms.l2, l1=norms.l1, l1_slope=norms.l1_slope, N=cps[-1])
    b = check_condition_b(pert, m, kmax, cps, tail_tol)
    rep.add("condition_b", ok=b.all_converged, kmax=kmax, tail_tol=tail_tol,
            flagged=[":".join(map(str, k)) for k in b.flagged],
            max_tail=max(v.tail for v in b.verdicts.values()))
    c = check_condition_c(pert, m, max(kmax, 1), cps[-1])
    rep.add("condition_c", ok=c.bounded, max_growth=c.max_growth, slope=c.slope, slope_stderr=c.slope_stderr)
    rep.table("condition_c", ["k", "sup_abs_S", "N"],
              [(":".join(map(str, k)), s, cps[-1]) for k, s in c.table()])


def step_coffman(cfg, rep: Report):
    pert = build_perturbation(cfg)
    z, N = parse_complex(cfg["z"]), _int(cfg, "N")
    tail_tol = _positive(cfg, "tail_tol")
    try:
        asm = assemble_free_case(pert, z, N)
    except ValueError as exc:
        raise ConfigError(f"z: {exc}") from None
    head, tail = asm.square_norm_tail(N // 2)
    d = diagonal_sum_check(asm, [N // 2], tail_tol)
    r = phi_psi_limit_check(asm, N=N)
    tr = ratio_trace(JacobiParams.free(), JacobiParams.free(pert), asm.x, N, 1)
    v = detect_szego_limit(tr, _int(cfg, "windows"), _positive(cfg, "tol"))
    agree = v.limit is not None and abs(r.c1 - v.limit) < 1e-3
    rep.add("coffman_free", ok=d.converged and tail < tail_tol and asm.det_deviation < 1e-10 and agree,
            z=z, x=asm.x, det_deviation=asm.det_deviation, square_norm_sum=head, square_norm_tail=tail,
            diagonal_tails=d.tails, identity_residual=d.identity_residual, c1=r.c1,
            ratio_limit=v.limit, ratio_mismatch=r.ratio_mismatch)
    rep.table("coffman_phi_psi", ["n", "B_phi", "B_psi", "ratio"],
              [(int(n), a, b, c) for n, a, b, c in zip(r.n, r.B_phi, r.B_psi, r.ratio)])
    K = _int(cfg, "random_systems")
    if K > 0:
        rng = np.random.default_rng(_int(cfg, "seed"))
        rows = []
        for k in range(K):
            sys_ = random_decaying_system(rng)
            prof = find_profile_solution(sys_, 1, 4 * 10**4, checkpoints=[10**4])
            cl = classify_solution(sys_, rng.standard_normal(sys_.d), 10**4)
            rows.append((k, sys_.d, prof.residual()[0], cl.j, cl.c))
        rep.table("coffman_random", ["system", "d", "profile_residual", "j", "c"], rows)
        rep.add("coffman_random", systems=K)


def step_eigs(cfg, rep: Report):
    J = build_base(cfg)
    pert = build_perturbation(cfg)
    Ns = _ints(cfg["Ns"], "Ns")
    if not Ns or any(b <= a for a, b in zip(Ns, Ns[1:])):
        raise ConfigError("Ns must be a non-empty increasing list")
    margin, eig_tol = _positive(cfg, "margin"), _positive(cfg, "eig_tol")
    if margin <= eig_tol:
        raise ConfigError("margin must exceed eig_tol")
    rows, q = [], []
    for N in Ns:
        r = outside_spectrum(JacobiParams(J, pert), N, margin=margin, eig_tol=eig_tol)
        qh, qq = q_sum(r, r.band_set, 0.5), q_sum(r, r.band_set, 0.25)
        rows.append((N, r.count, qh, qq))
        q.append(qh)
    rep.table("qsum", ["N", "num_outside", "qsum_0.5", "qsum_0.25"], rows)
    rep.add("qsum", ok=all(b >= a for a, b in zip(q, q[1:])), Ns=Ns, qsum_half=q, margin=margin)


def step_variational(cfg, rep: Report):
    J = build_base(cfg)
    pert = build_perturbation(cfg)
    ms = _m_range(cfg["m"])
    rows = []
    for m in ms:
        v = variational_bound(J, pert, m)
        rows.append((m, v.quotient, v.perturbation_term, v.unperturbed_term, v.norm2))
    rep.table("variational", ["m", "quotient", "perturbation_term", "unperturbed_term", "norm2"], rows)
    qs = np.array([r[1] for r in rows])
    pos = [m for m, q in zip(ms, qs) if q > 0]
    slope = float(np.polyfit(np.log(ms), np.log(qs), 1)[0]) if np.all(qs > 0) and len(ms) > 1 else float("nan")
    rep.add("variational", ok=bool(pos), first_positive_m=pos[0] if pos else None, slope=slope)


STEPS = {
    "closed-form": step_closed_form,
    "bands": step_bands,
    "equilibrium": step_equilibrium,
    "torus": step_torus,
    "ratio": step_ratio,
    "sums": step_sums,
    "coffman": step_coffman,
    "eigs": step_eigs,
    "variational": step_variational,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="finitegap", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    for name in ["bands", "equilibrium", "torus", "ratio", "sums", "coffman", "eigs", "variational", "run"]:
        sp = sub.add_parser(name)
        sp.add_argument("--config", help="key=value file; flags override it")
        if name == "run":
            sp.add_argument("--preset", required=True, choices=sorted(PRESETS))
        for k in DEFAULTS:
            sp.add_argument("--" + k.replace("_", "-"), dest=k, default=None)
    return p


def run_experiment(command: str, args) -> int:
    preset = PRESETS.get(args.preset) if command == "run" else None
    try:
        cfg = resolve(args, preset.get("config") if preset else None)
        steps = preset["steps"] if preset else [command]
        try:
            int(cfg["seed"])
        except ValueError:
            raise ConfigError("seed must be an integer") from None
        rep = Report(cfg)
        for s in steps:
            STEPS[s](cfg, rep)
    except (ConfigError, OSError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ArithmeticError, ValueError, RuntimeError) as exc:
        print(f"{command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAIL
    rep.emit(cfg["out"])
    for rec in rep.records[1:]:
        if "ok" in rec:
            print(f"{rec['record']}: {'ok' if rec['ok'] else 'FAILED'}")
    return EXIT_FAIL if rep.failed else EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return run_experiment(args.command, args)


if __name__ == "__main__":
    raise SystemExit(main())
