"""Command-line interface: ``hyperscatter <subcommand> [options]``.

Configuration comes from an optional ``key = value`` file (``--config``)
overridden by flags.  CSV output uses 17 significant digits and ``\\n``
line endings; its first line carries the configuration hash.  With
``--output`` a JSON manifest is written next to the CSV.
"""

import argparse
import dataclasses
import hashlib
import io
import json
import math
import sys
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from . import __version__, channels, couplings, radial, scattering, wkb
from .errors import HyperscatterError, ParameterError

SUBCOMMANDS = ("channels", "couplings", "solve", "amplitude", "xi", "sweep", "gamma", "verify")
#: Keys that select where or how output goes; excluded from the config hash.
_PRESENTATION_KEYS = ("output", "format", "threads")


class ManifestMismatch(HyperscatterError):
    """A file listed in a manifest does not match its recorded hash."""

    exit_code = 1


@dataclass(frozen=True)
class RunConfig:
    c: float = 1.0
    k: float = 0.01
    k_min: float = 1e-3
    k_max: float = 1e-2
    k_points: int = 16
    q: float | None = None
    qr0: float = 1.0
    r0: float = 0.01
    channels: int = 3
    R_min: float | None = None
    R_max: float | None = None
    grid_points: int = 81
    rtol: float = 1e-12
    b: float = 0.0
    pin_omega: bool = False
    mode: str = "both"
    n1d: float = 1.0
    gamma_min: float = 10.0
    gamma_max: float = 1000.0
    gamma_points: int = 8
    threads: int | None = None
    output: str | None = None
    format: str = "csv"

    @property
    def well_depth(self):
        return self.q if self.q is not None else self.qr0 / self.r0

    def potential(self):
        return radial.ModelPotential(self.well_depth, self.r0, self.c)

    def k_values(self):
        return scattering.log_spaced(self.k_min, self.k_max, self.k_points)

    def physics_dict(self):
        return {f.name: getattr(self, f.name) for f in fields(self)
                if f.name not in _PRESENTATION_KEYS}

    def hash(self):
        text = json.dumps(self.physics_dict(), sort_keys=True)
        return hashlib.sha256(text.encode()).hexdigest()


_FIELDS = {f.name: f for f in fields(RunConfig)}


def _convert(key, text):
    if key not in _FIELDS:
        raise ParameterError(f"unknown configuration key {key!r}")
    kind = _FIELDS[key].type
    if isinstance(text, str):
        text = text.strip()
        if text.lower() in ("none", "") and "None" in str(kind):
            return None
    try:
        if "bool" in str(kind):
            if isinstance(text, bool):
                return text
            if text.lower() in ("1", "true", "yes", "on"):
                return True
            if text.lower() in ("0", "false", "no", "off"):
                return False
            raise ValueError(text)
        if "int" in str(kind):
            return int(text)
        if "float" in str(kind):
            return float(text)
        return str(text)
    except ValueError:
        raise ParameterError(f"cannot parse {key} = {text!r}") from None


def read_config_file(path):
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    values = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParameterError(f"{path}:{lineno}: expected key = value")
        key, val = (s.strip() for s in line.split("=", 1))
        if key in values:
            raise ParameterError(f"{path}:{lineno}: duplicate key {key!r}")
        values[key] = _convert(key, val)
    return values


def validate(cfg):
    for name in ("c", "r0", "rtol", "n1d", "k", "k_min", "k_max", "qr0"):
        if not getattr(cfg, name) > 0:
            raise ParameterError(f"{name} must be > 0")
    if cfg.q is not None and not cfg.q > 0:
        raise ParameterError("q must be > 0")
    if cfg.r0 * cfg.c > radial.MAX_CR0:
        raise ParameterError(f"r0*c = {cfg.r0 * cfg.c:g} violates r0*c <= {radial.MAX_CR0}")
    if not cfg.k_min < cfg.k_max:
        raise ParameterError("k_min < k_max required")
    if cfg.k_points < 2 or cfg.grid_points < 2 or cfg.gamma_points < 1:
        raise ParameterError("point counts must be >= 2")
    if not 1 <= cfg.channels <= couplings.MAX_CHANNELS:
        raise ParameterError(f"channels must be in 1..{couplings.MAX_CHANNELS}")
    if cfg.mode not in ("numeric", "analytic", "both"):
        raise ParameterError("mode must be numeric, analytic or both")
    if cfg.format not in ("csv", "json"):
        raise ParameterError("format must be csv or json")
    if abs(cfg.b) > 1:
        raise ParameterError("|b| <= 1 required")
    if cfg.R_min is not None and cfg.R_max is not None and not 0 < cfg.R_min < cfg.R_max:
        raise ParameterError("0 < R_min < R_max required")
    if not 0 < cfg.gamma_min <= cfg.gamma_max:
        raise ParameterError("0 < gamma_min <= gamma_max required")
    return cfg


def parse_config(path=None, overrides=None):
    """Build a validated :class:`RunConfig` from a file and flag overrides (flags win)."""
    values = read_config_file(path) if path else {}
    for key, val in (overrides or {}).items():
        if val is not None:
            values[key] = _convert(key, val) if isinstance(val, str) else val
    return validate(RunConfig(**values))


# --- output ------------------------------------------------------------------

def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return format(float(v), ".17g")


def render_csv(cfg, header, rows, comments=()):
    buf = io.StringIO(newline="")
    buf.write(f"# config_hash={cfg.hash()}\n")
    for c in comments:
        buf.write(f"# {c}\n")
    buf.write(",".join(header) + "\n")
    for row in rows:
        buf.write(",".join(_fmt(v) for v in row) + "\n")
    return buf.getvalue()


def _jsonable(obj):
    if dataclasses.is_dataclass(obj):
        return {k: _jsonable(v) for k, v in dataclasses.asdict(obj).items()}
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else str(v)
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def _sha256(data):
    return hashlib.sha256(data).hexdigest()


def emit(cfg, command, header, rows, summary, comments=(), stdout=None):
    stdout = stdout or sys.stdout
    csv_text = render_csv(cfg, header, rows, comments)
    manifest = {"command": command, "version": __version__, "config": _jsonable(cfg.physics_dict()),
                "config_hash": cfg.hash(), "summary": _jsonable(summary)}
    if cfg.output:
        out = Path(cfg.output)
        out.parent.mkdir(parents=True, exist_ok=True)
        data = csv_text.encode()
        out.write_bytes(data)
        manifest["files"] = {out.name: _sha256(data)}
        man_path = out.with_suffix(".json")
        man_path.write_bytes((json.dumps(manifest, sort_keys=True, indent=2) + "\n").encode())
    if cfg.format == "json":
        stdout.write(json.dumps(manifest, sort_keys=True, indent=2) + "\n")
    elif not cfg.output:
        stdout.write(csv_text)
    return manifest


# --- subcommands -------------------------------------------------------------

def _grid(cfg, lo_cr, hi_cr):
    lo = cfg.R_min if cfg.R_min is not None else lo_cr / cfg.c
    hi = cfg.R_max if cfg.R_max is not None else hi_cr / cfg.c
    return np.geomspace(lo, hi, cfg.grid_points)


def run_channels(cfg):
    grid = _grid(cfg, 1e-4, 1e4)
    chans = [channels.adiabatic_channel(n, cfg.c, grid) for n in range(cfg.channels)]
    header = ["R", "cR"] + [f"lambda_{n}" for n in range(cfg.channels)]
    rows = [(r, cfg.c * r, *(ch.lambdas[i] for ch in chans)) for i, r in enumerate(grid)]
    return "channels", header, rows, {"points": len(rows)}, ()


def run_couplings(cfg):
    grid = _grid(cfg, 1e-3, 1.0)
    rep = couplings.adiabaticity_report(cfg.c, grid, channels=cfg.channels)
    header = ["R", "Y00_ratio", "W00_ratio"] + [f"lambda_{n}" for n in range(cfg.channels)]
    rows = [(r, rep.y00_ratio[i], rep.w00_ratio[i], *rep.lambdas[i]) for i, r in enumerate(grid)]
    return "couplings", header, rows, {"max_Y00_ratio": rep.max_y00_ratio,
                                       "decay_exponents": rep.decay_exponents}, ()


def run_solve(cfg):
    p = cfg.potential()
    sol = radial.integrate_radial(cfg.c, cfg.k, p, R_min=cfg.R_min, R_max=cfg.R_max,
                                  rtol=cfg.rtol)
    res = sol.residual()
    summary = {"k": cfg.k, "c": cfg.c, "q": p.q, "r0": p.r0, "beta": p.beta,
               "points": int(sol.grid.size), "max_residual": float(res.max()),
               "stats": sol.stats}
    if cfg.k <= cfg.c / 50:
        basis = radial.construct_f_basis(cfg.c, cfg.k, rtol=cfg.rtol)
        summary.update({"norm_plus": basis.norm_plus,
                        "norm_plus_times_k_over_c_cubed": basis.norm_plus * (cfg.k / cfg.c) ** 3,
                        "background_phase": basis.background_phase,
                        "kappa_mix": basis.kappa_mix, "wronskian_drift": basis.wronskian_drift})
    rows = zip(sol.grid, sol.F, sol.dF, res)
    return "solve", ["R", "F", "dF", "local_residual"], list(rows), summary, ()


def run_amplitude(cfg):
    p = cfg.potential()
    params = scattering.AnalyticAmplitudeParams(cfg.c, cfg.k, p.q, p.r0, b=cfg.b,
                                                pin_omega=cfg.pin_omega)
    fa = scattering.analytic_amplitude(params)
    num = scattering.numeric_amplitude(p, cfg.k)
    match = radial.match_ratio(p, cfg.k, numeric=False)
    header = ["k", "c", "qr0", "re_f0", "im_f0", "abs_f0", "f0_analytic_re", "f0_analytic_im",
              "c1_over_c2_numeric", "c1_over_c2_closed"]
    row = (cfg.k, cfg.c, p.q * p.r0, num.f0.real, num.f0.imag, abs(num.f0), fa.real, fa.imag,
           num.diagnostics["c1_over_c2"], match.c1_over_c2)
    summary = {"numeric": num.diagnostics, "coeff_ratio": num.coeff_ratio,
               "omega": params.omega, "bracket": params.bracket,
               "relative_difference": abs(abs(num.f0) / abs(fa) - 1)}
    return "amplitude", header, [row], summary, ()


def run_xi(cfg):
    res = wkb.xi_constant()
    header = ["cR", "I_minus_3lncR", "tail_corrected", "extrapolated"]
    comments = (f"xi={res.xi:.17g}", f"omega={res.omega:.17g}")
    return "xi", header, list(res.table), {"xi": res.xi, "omega": res.omega,
                                           "spread": res.spread}, comments


def run_sweep(cfg):
    result = scattering.scaling_sweep(cfg.c, cfg.k_values(), cfg.potential(), mode=cfg.mode,
                                      b=cfg.b, pin_omega=cfg.pin_omega, threads=cfg.threads)
    return ("sweep", list(result.CSV_COLUMNS), result.table(),
            {"mode": result.mode, "slopes": result.slopes}, ())


def run_gamma(cfg):
    gammas = np.geomspace(cfg.gamma_min, cfg.gamma_max, cfg.gamma_points)
    rows = scattering.gamma_report(cfg.n1d, gammas * cfg.n1d)
    return "gamma", list(scattering.GAMMA_COLUMNS), rows, {"rows": len(rows)}, ()


RUNNERS = {"channels": run_channels, "couplings": run_couplings, "solve": run_solve,
           "amplitude": run_amplitude, "xi": run_xi, "sweep": run_sweep, "gamma": run_gamma}


def run(subcommand, cfg, stdout=None):
    """Run one subcommand and write its outputs; returns the manifest dict."""
    command, header, rows, summary, comments = RUNNERS[subcommand](cfg)
    return emit(cfg, command, header, rows, summary, comments, stdout=stdout)


def verify_manifest(path):
    """Check every file hash recorded in a manifest and the stored config hash."""
    path = Path(path)
    man = json.loads(path.read_text())
    cfg = validate(RunConfig(**{k: v for k, v in man["config"].items()}))
    if cfg.hash() != man["config_hash"]:
        raise ManifestMismatch(f"{path}: config hash does not match the config echo")
    for name, digest in man.get("files", {}).items():
        target = path.parent / name
        data = target.read_bytes()
        if _sha256(data) != digest:
            raise ManifestMismatch(f"{target}: content hash mismatch")
        first = data.split(b"\n", 1)[0].decode()
        if first != f"# config_hash={man['config_hash']}":
            raise ManifestMismatch(f"{target}: embedded config hash mismatch")
    return True


# --- argument parsing --------------------------------------------------------

def _add_common(p):
    p.add_argument("--config", help="key = value configuration file")
    for f in fields(RunConfig):
        flag = "--" + f.name.replace("_", "-")
        if "bool" in str(f.type):
            p.add_argument(flag, dest=f.name, action="store_true", default=None)
        else:
            p.add_argument(flag, dest=f.name, default=None, metavar=f.name.upper())


def build_parser():
    parser = argparse.ArgumentParser(prog="hyperscatter",
                                     description="Three-body scattering in the lowest hyperspherical channel.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in SUBCOMMANDS[:-1]:
        _add_common(sub.add_parser(name))
    ver = sub.add_parser("verify", help="check a run manifest against its files")
    ver.add_argument("manifest")
    return parser


def main(argv=None, stdout=None):
    args = build_parser().parse_args(argv)
    try:
        if args.command == "verify":
            verify_manifest(args.manifest)
            (stdout or sys.stdout).write("ok\n")
            return 0
        overrides = {f.name: getattr(args, f.name) for f in fields(RunConfig)}
        cfg = parse_config(args.config, overrides)
        run(args.command, cfg, stdout=stdout)
    except HyperscatterError as exc:
        print(f"hyperscatter: error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"hyperscatter: error: {exc}", file=sys.stderr)
        return 2
    return 0
