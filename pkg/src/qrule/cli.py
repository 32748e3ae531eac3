"""Config-driven command line front end.

Config files are line oriented: ``[section]`` headers followed by ``key=value``
pairs, several pairs per line allowed, ``#`` starts a comment::

    [potential] kind=biharmonic alpha=2 beta=3 gamma=5
    [job] type=verify window=0,4
    [numeric] n_steps=20000 n_films=4096
    [output] csv=out.csv
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import sys
from dataclasses import asdict, dataclass, field

from .errors import (
    ConfigError,
    ConvergenceError,
    InvalidParameterError,
    QRuleError,
    TurningPointError,
)
from .potential import FORBIDDEN, Potential, Segment, build, partition
from .propagate import Shooter, film_propagate, full_trace, tail_domain
from .quantize import round_half_away, verify_rule
from .solve import (
    EnergyWindow,
    match_point,
    solve_biharmonic,
    solve_double_square_well,
    solve_fd_oracle,
    solve_shooting,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_CONVERGENCE = 3
EXIT_TURNING = 4

JOBS = ("spectrum", "verify", "scan", "films")
KINDS = ("double_square_well", "biharmonic", "harmonic", "polynomial", "segments")

SPECTRUM_COLUMNS = ["n", "E_shooting", "E_analytic", "E_oracle", "max_spread", "config_hash"]
VERIFY_COLUMNS = ["n", "E", "region_index", "kind", "value_over_pi", "nearest_multiple",
                  "residual_over_pi", "total_N", "config_hash"]
SCAN_COLUMNS = ["E", "mismatch", "phase", "rule_residual_over_pi", "total_N", "config_hash"]
FILMS_COLUMNS = ["n_films", "value", "phi_out", "value_error", "phi_error", "m_total",
                 "config_hash"]


@dataclass
class JobConfig:
    kind: str
    params: dict
    job: str = "spectrum"
    window: tuple[float, float] | None = None
    grid_points: int = 512
    count: int | None = None
    branch: str = "decaying"
    energies: tuple[float, ...] | None = None
    state: int = 0
    region: int | None = None
    n_steps: int = 20000
    n_films: int = 4096
    fd_grid_n: int = 4000
    film_counts: tuple[int, ...] = (64, 128, 256, 512, 1024, 2048, 4096)
    csv: str | None = None
    source: dict = field(default_factory=dict, repr=False)

    def potential(self) -> Potential:
        if self.kind == "segments":
            return build("segments", segments=self.params["segments"])
        return build(self.kind, **self.params)

    def digest(self) -> str:
        data = asdict(self)
        data.pop("source")
        data.pop("csv")
        text = json.dumps(data, sort_keys=True, default=str)
        return hashlib.sha256(text.encode()).hexdigest()[:12]


# -- parsing ------------------------------------------------------------------

_FLOAT_KEYS = {
    "double_square_well": ("x_a", "x_b", "x_c", "x_d", "V_I", "V_0", "V_F"),
    "biharmonic": ("alpha", "beta", "gamma"),
    "harmonic": (),
    "polynomial": (),
    "segments": (),
}
_POSITIVE = {"V_I", "V_0", "V_F"}

_INT_RANGES = {
    "grid_points": 64,
    "count": 1,
    "state": 0,
    "region": 0,
    "n_steps": 2000,
    "n_films": 16,
    "fd_grid_n": 2000,
}

_SECTION_KEYS = {
    "potential": None,  # depends on kind
    "job": {"type", "window", "grid_points", "count", "branch", "energies", "state", "region"},
    "numeric": {"n_steps", "n_films", "fd_grid_n", "film_counts"},
    "output": {"csv"},
}


def _tokens(text: str):
    """Yield (line_no, section, key, value) for every pair in the text."""
    section = None
    for no, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        while line.startswith("["):
            end = line.find("]")
            if end < 0:
                raise ConfigError(f"line {no}: unterminated section header")
            section = line[1:end].strip()
            if section not in _SECTION_KEYS:
                raise ConfigError(f"line {no}: unknown section [{section}]")
            line = line[end + 1:].strip()
        for tok in line.split():
            if "=" not in tok:
                raise ConfigError(f"line {no}: expected key=value, got {tok!r}")
            if section is None:
                raise ConfigError(f"line {no}: key {tok.split('=')[0]!r} before any section")
            key, value = tok.split("=", 1)
            yield no, section, key.strip(), value.strip()


def _float(v: str, name: str, no: int) -> float:
    try:
        return float(v)
    except ValueError:
        raise ConfigError(f"line {no}: {name} expects a number, got {v!r}") from None


def _int(v: str, name: str, no: int) -> int:
    try:
        out = int(v)
    except ValueError:
        raise ConfigError(f"line {no}: {name} expects an integer, got {v!r}") from None
    lo = _INT_RANGES.get(name.split(".")[-1])
    if lo is not None and out < lo:
        raise ConfigError(f"line {no}: {name}={out} is below the minimum {lo}")
    return out


def _floats(v: str, name: str, no: int) -> tuple[float, ...]:
    return tuple(_float(x, name, no) for x in v.split(",") if x)


def _segment(v: str, no: int):
    parts = v.split(",")
    if len(parts) < 4:
        raise ConfigError(f"line {no}: potential.segment needs lo,hi,kind,params...")
    lo, hi = _float(parts[0], "potential.segment", no), _float(parts[1], "potential.segment", no)
    params = tuple(_float(x, "potential.segment", no) for x in parts[3:])
    try:
        return Segment(lo, hi, parts[2], params)
    except InvalidParameterError as exc:
        raise ConfigError(f"line {no}: potential.segment: {exc}") from None


def parse_config(text: str) -> JobConfig:
    """Parse and validate a job configuration.

    Raises:
        ConfigError: unknown key, bad type or out-of-range value; the message
            names the key and line.
    """
    pot: dict[str, tuple[int, str]] = {}
    segments = []
    rest: dict[str, tuple[int, str]] = {}
    for no, section, key, value in _tokens(text):
        if section == "potential":
            if key == "segment":
                segments.append(_segment(value, no))
                continue
            if key in pot:
                raise ConfigError(f"line {no}: duplicate key potential.{key}")
            pot[key] = (no, value)
        else:
            if key not in _SECTION_KEYS[section]:
                raise ConfigError(f"line {no}: unknown key {section}.{key}")
            name = f"{section}.{key}"
            if name in rest:
                raise ConfigError(f"line {no}: duplicate key {name}")
            rest[name] = (no, value)

    if "kind" not in pot:
        raise ConfigError("missing key potential.kind")
    kno, kind = pot.pop("kind")
    if kind not in KINDS:
        raise ConfigError(f"line {kno}: potential.kind must be one of {', '.join(KINDS)}")
    params: dict = {}
    allowed = set(_FLOAT_KEYS[kind])
    if kind == "biharmonic":
        allowed.add("regime")
    if kind == "polynomial":
        allowed.add("coeffs")
    for key, (no, value) in pot.items():
        if key not in allowed:
            raise ConfigError(f"line {no}: unknown key potential.{key} for kind {kind}")
        if key == "regime":
            if value not in ("true", "false"):
                raise ConfigError(f"line {no}: potential.regime must be true or false")
            params["regime"] = value == "true"
        elif key == "coeffs":
            params["coeffs"] = _floats(value, "potential.coeffs", no)
        else:
            params[key] = _float(value, f"potential.{key}", no)
            if key in _POSITIVE and not params[key] > 0:
                raise ConfigError(f"line {no}: potential.{key} must be positive, got {value}")
    missing = [k for k in _FLOAT_KEYS[kind] if k not in params]
    if missing:
        raise ConfigError(f"missing key(s) {', '.join('potential.' + k for k in missing)}")
    if kind == "polynomial" and "coeffs" not in params:
        raise ConfigError("missing key potential.coeffs")
    if kind == "segments":
        if not segments:
            raise ConfigError("kind=segments needs at least one potential.segment line")
        params["segments"] = tuple(segments)
    elif segments:
        raise ConfigError("potential.segment is only valid with kind=segments")

    cfg = JobConfig(kind=kind, params=params)
    for name, (no, value) in rest.items():
        key = name.split(".")[1]
        if key == "type":
            if value not in JOBS:
                raise ConfigError(f"line {no}: job.type must be one of {', '.join(JOBS)}")
            cfg.job = value
        elif key == "window":
            w = _floats(value, name, no)
            if len(w) != 2 or not w[0] < w[1]:
                raise ConfigError(f"line {no}: job.window must be lo,hi with lo < hi")
            cfg.window = w
        elif key == "branch":
            if value not in ("decaying", "growing"):
                raise ConfigError(f"line {no}: job.branch must be decaying or growing")
            cfg.branch = value
        elif key == "energies":
            cfg.energies = _floats(value, name, no)
        elif key == "film_counts":
            counts = tuple(_int(x, "numeric.n_films", no) for x in value.split(","))
            cfg.film_counts = counts
        elif key == "csv":
            cfg.csv = value
        else:
            setattr(cfg, key, _int(value, name, no))
    try:
        cfg.potential()
    except InvalidParameterError as exc:
        raise ConfigError(f"potential: {exc}") from None
    cfg.source = {"text": text}
    return cfg


# -- jobs ---------------------------------------------------------------------


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        if math.isnan(x):
            return ""
        return f"{x:.12g}"
    return str(x)


def _window(cfg: JobConfig, p: Potential) -> EnergyWindow:
    if cfg.window is not None:
        return EnergyWindow(cfg.window[0], cfg.window[1], cfg.grid_points)
    lo = p.minimum()
    hi = min(min(p.tail_limits()), lo + 10.0)
    return EnergyWindow(lo, hi, cfg.grid_points)


def _analytic(cfg: JobConfig, window: EnergyWindow):
    if cfg.kind == "double_square_well":
        q = cfg.params
        return solve_double_square_well(q["x_a"], q["x_b"], q["x_c"], q["x_d"],
                                        q["V_I"], q["V_0"], q["V_F"], window)
    if cfg.kind == "biharmonic":
        q = cfg.params
        return solve_biharmonic(q["alpha"], q["beta"], q["gamma"], window,
                                left_branch=cfg.branch, n_steps=cfg.n_steps)
    return []


def _levels(cfg: JobConfig, p: Potential):
    if cfg.energies is not None:
        return [(None, e) for e in cfg.energies]
    sols = solve_shooting(p, _window(cfg, p), cfg.n_steps)
    return [(s.index, s.energy) for s in sols]


def job_spectrum(cfg: JobConfig, p: Potential, h: str):
    window = _window(cfg, p)
    shoot = {s.index: s.energy for s in solve_shooting(p, window, cfg.n_steps)}
    analytic = {}
    for s in _analytic(cfg, window):
        analytic.setdefault(s.index, s.energy)
    top = max([*shoot, *analytic], default=-1)
    count = cfg.count if cfg.count is not None else top + 1
    oracle = {}
    if count > 0:
        oracle = {s.index: s.energy for s in solve_fd_oracle(p, None, cfg.fd_grid_n, count)}
    rows = []
    for n in sorted(set(shoot) | set(analytic)):
        vals = [v for v in (shoot.get(n), analytic.get(n), oracle.get(n)) if v is not None]
        spread = max(vals) - min(vals) if vals else None
        rows.append([n, shoot.get(n), analytic.get(n), oracle.get(n), spread, h])
    return SPECTRUM_COLUMNS, rows


def job_verify(cfg: JobConfig, p: Potential, h: str):
    rows = []
    for n, e in _levels(cfg, p):
        rep = verify_rule(p, e, cfg.n_steps, max(cfg.n_films, 1024))
        label = n if n is not None else rep.psi_nodes
        for i, c in enumerate(rep.regions):
            rows.append([label, e, i, c.kind, c.value_over_pi, c.nearest_multiple,
                         c.residual / math.pi, rep.total_N, h])
        rows.append([label, e, "total", "total", rep.total_value / math.pi,
                     round_half_away(rep.total_value / math.pi), rep.total_residual / math.pi,
                     rep.total_N, h])
    return VERIFY_COLUMNS, rows


def job_scan(cfg: JobConfig, p: Potential, h: str):
    window = _window(cfg, p)
    domain = tail_domain(p, window.hi - 1e-6 * max(1.0, abs(window.hi)))
    shooter = Shooter(p, domain, match_point(p, window, domain), cfg.n_steps)
    rows = []
    for e in window.grid():
        e = float(e)
        try:
            rep = verify_rule(p, e, cfg.n_steps, max(cfg.n_films, 1024))
            res, tot = rep.total_residual / math.pi, rep.total_N
        except TurningPointError:
            res, tot = None, None
        rows.append([e, shooter.mismatch(e), shooter.phase(e), res, tot, h])
    return SCAN_COLUMNS, rows


def job_films(cfg: JobConfig, p: Potential, h: str):
    levels = _levels(cfg, p)
    if cfg.state >= len(levels):
        raise ConvergenceError(f"state {cfg.state} not found; {len(levels)} levels in window")
    e = levels[cfg.state][1]
    part = partition(p, e)
    inner = [r for r in part.inner_regions if r.kind == FORBIDDEN]
    idx = cfg.region if cfg.region is not None else 0
    if idx >= len(inner):
        raise TurningPointError(f"no inner forbidden region {idx} at E={e}")
    r = inner[idx]
    t = full_trace(p, e, cfg.n_steps)
    forward = t.log_abs_psi_at(r.hi) >= t.log_abs_psi_at(r.lo)
    start, end = (r.lo, r.hi) if forward else (r.hi, r.lo)
    phi_in, phi_ref = t.phi_at(start), t.phi_at(end)
    ref = film_propagate(p, e, (r.lo, r.hi), 2 * max(cfg.film_counts), phi_in, not forward)
    rows = []
    for n in cfg.film_counts:
        f = film_propagate(p, e, (r.lo, r.hi), n, phi_in, not forward)
        rows.append([n, f.value, f.phi_out, abs(f.value - ref.value),
                     abs(f.phi_out - phi_ref), f.m_total, h])
    return FILMS_COLUMNS, rows


RUNNERS = {"spectrum": job_spectrum, "verify": job_verify, "scan": job_scan, "films": job_films}


def render_csv(columns, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_fmt(x) for x in row])
    return buf.getvalue()


def render_table(columns, rows) -> str:
    cells = [columns] + [[_fmt(x) for x in row] for row in rows]
    widths = [max(len(r[i]) for r in cells) for i in range(len(columns))]
    return "\n".join("  ".join(c.rjust(w) for c, w in zip(r, widths)) for r in cells)


def run(cfg: JobConfig, out=sys.stdout, quiet: bool = False) -> int:
    """Execute a job; returns the process exit code."""
    try:
        p = cfg.potential()
        h = cfg.digest()
        columns, rows = RUNNERS[cfg.job](cfg, p, h)
    except (ConfigError, InvalidParameterError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except TurningPointError as exc:
        print(f"turning-point error: {exc}", file=sys.stderr)
        return EXIT_TURNING
    except QRuleError as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE
    if cfg.csv:
        with open(cfg.csv, "w", newline="") as fh:
            fh.write(render_csv(columns, rows))
    if not quiet:
        print(render_table(columns, rows), file=out)
    return EXIT_OK


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="qrule", description=__doc__.splitlines()[0])
    ap.add_argument("config", help="path to the job configuration")
    ap.add_argument("--job", choices=JOBS, help="override job.type")
    ap.add_argument("--csv", help="override output.csv")
    ap.add_argument("--quiet", action="store_true", help="suppress the table on stdout")
    args = ap.parse_args(argv)
    try:
        with open(args.config) as fh:
            cfg = parse_config(fh.read())
    except OSError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if args.job:
        cfg.job = args.job
    if args.csv:
        cfg.csv = args.csv
    return run(cfg, quiet=args.quiet)


if __name__ == "__main__":
    sys.exit(main())
