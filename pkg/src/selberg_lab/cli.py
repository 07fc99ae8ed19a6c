"""Command-line front end: ``selberg-lab {transforms,trace,count,bs}``.

Reports are JSON objects ``{"payload": ..., "metadata": ...}``.  The payload
depends only on the resolved configuration (and the seed); run-specific
items such as timestamps, output path and thread count live in metadata.
Exit codes: 0 success, 2 certification failure, 3 input error.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import time
from dataclasses import asdict, dataclass

import numpy as np

from . import __version__
from . import bsdiag, counting
from . import fuchsian as fu
from . import traceformula as tfm
from . import transforms as tr
from .errors import CertificationError, InputError, SelbergLabError

EXIT_OK, EXIT_CERT, EXIT_INPUT = 0, 2, 3


def _num(v) -> str:
    return repr(float(v))


@dataclass
class RunConfig:
    command: str
    surface: str = "builtin:bolza"
    spectrum: str | None = None
    window: tuple = (0.5, 5.0)
    t: float = 1.0
    family: str = "auto"
    L: tuple = (1.0,)
    samples: int = 4000
    seed: int | None = None
    C_upper: float = 1.0
    C_equiv: float = 1.0
    C_mult: float = 1.0
    C_jth: float = 1.0
    genus: float | None = None
    grid: int = 40

    def payload_dict(self):
        return asdict(self)


def _floats(text, n=None):
    try:
        vals = tuple(float(x) for x in str(text).split(","))
    except ValueError:
        raise InputError(f"cannot parse numbers from {text!r}")
    if n is not None and len(vals) != n:
        raise InputError(f"expected {n} comma-separated numbers, got {text!r}")
    return vals


def clean(obj):
    """JSON-safe copy: numpy scalars to Python, non-finite floats to strings."""
    if isinstance(obj, dict):
        return {str(k): clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return clean(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else repr(x)
    return obj


def dumps_payload(payload) -> str:
    return json.dumps(clean(payload), sort_keys=True, indent=1)


# ------------------------------------------------------------------ commands


def _family_check(cfg):
    if cfg.family not in ("B", "H", "auto"):
        raise InputError("family must be B, H or auto")


def cmd_transforms(cfg: RunConfig, threads: int = 1):
    a, b = cfg.window
    _family_check(cfg)
    tfs = tfm.split_window(a, b, cfg.t, cfg.family)
    parts = []
    for tf in tfs:
        r_grid = np.linspace(0.0, tf.r_cut + 2.0, cfg.grid)
        u_grid = np.linspace(0.0, 20.0 * max(tf.t, 1.0), cfg.grid)
        rho_grid = np.linspace(0.5, 12.0, cfg.grid)
        prof = tr.KernelProfile(tf)
        kv = tr.kernel_values(rho_grid, prof)
        g = tr.g(u_grid, tf)
        gp = tr.g_prime(np.maximum(u_grid, 1e-6), tf)
        rows = {
            "r": r_grid,
            "h": np.real(tr.h(r_grid, tf)),
            "u": u_grid,
            "g": g,
            "g_prime": gp,
            "rho": rho_grid,
            "K": kv.K,
            "K_err": kv.err,
        }
        r_sys = 2 * math.acosh(1 + math.sqrt(2))
        consts = {"kernel": tr.fit_constant(kv.K, tr.kernel_shape(rho_grid, tf, r_sys))}
        dual = {}
        if tf.family == "H":
            consts["g_prime"] = tr.fit_constant(gp[1:], tr.gprime_shape_H(u_grid[1:], tf, r_sys))
            gn = tr.numeric_g(tf, u_grid)
            rows["g_numeric"] = gn
            # dual-path K on rho <= 8, where the numeric g' noise floor is negligible
            near = rho_grid <= 8.0
            kd = tr.kernel_values(rho_grid[near], tr.KernelProfile(tf, method="direct"))
            dual = {
                "g_max_abs_delta": float(np.max(np.abs(gn - g))),
                "rho": rho_grid[near],
                "K_numeric": kd.K,
                "K_max_rel_delta": float(np.max(np.abs(kd.K - kv.K[near]) / np.maximum(kv.K_abs[near], 1e-300))),
            }
        else:
            consts["g_prime"] = tr.fit_constant(gp[1:], tr.fourier_shape(u_grid[1:], tf, r_sys))
        ri = tr.integral_remainder(tf)
        parts.append(
            {
                "test_function": tf.to_dict(),
                "g0": float(g[0]),
                "table": rows,
                "fitted_constants": consts,
                "dual_path": dual,
                "integral_remainder": ri.to_dict(),
                "bound_hypotheses": tf.bound_hypotheses(r_sys),
            }
        )
    return {"parts": parts}


def _surface(cfg: RunConfig):
    G = fu.load_surface(cfg.surface)
    spec = tfm.load_spectrum(cfg.spectrum) if cfg.spectrum else None
    return tfm.SurfaceModel(G, spec)


def _need_seed(cfg):
    if cfg.seed is None:
        raise InputError("--seed is required for Monte-Carlo commands")


def cmd_trace(cfg: RunConfig, threads: int = 1):
    _need_seed(cfg)
    _family_check(cfg)
    surf = _surface(cfg)
    a, b = cfg.window
    L = cfg.L[0]
    sample = surf.group.dirichlet_sample(cfg.samples, cfg.seed, threads=threads)
    parts = []
    for tf in tfm.split_window(a, b, cfg.t, cfg.family):
        geo = tfm.geometric_term(surf, tf, L=L, sample=sample, threads=threads)
        rep = tfm.trace_residual(surf, tf, geometric=geo, require_spectrum=False)
        d = rep.to_dict()
        d["rhs"] = rep.rhs
        parts.append(d)
    out = {"surface": surf.group.to_dict(), "volume": surf.volume, "parts": parts}
    if surf.spectrum is not None:
        out["residual_total"] = math.fsum(p["residual"] for p in parts)
        out["residual_sigma_total"] = math.sqrt(math.fsum(p["residual_sigma"] ** 2 for p in parts))
    return out


def cmd_count(cfg: RunConfig, threads: int = 1):
    a, b = cfg.window
    if cfg.genus is not None:
        g = cfg.genus
    elif cfg.spectrum is None:
        g = fu.load_surface(cfg.surface).genus
    else:
        g = 2
    consts = counting.CheckConstants(cfg.C_upper, cfg.C_equiv, cfg.C_mult, cfg.C_jth)
    out = {
        "genus": g,
        "c": counting.C_SMALL,
        "constants": consts.to_dict(),
        "window": [a, b],
        "upper_bound": counting.upper_bound_envelope(g, a, b, cfg.C_upper),
        "equivalent": counting.equivalent_envelope(g, a, b, cfg.C_equiv).to_dict(),
        "multiplicity_at_a": counting.multiplicity_envelope(g, a, cfg.C_mult),
    }
    if b <= 0.25:
        out["small_eigenvalue"] = counting.small_eigenvalue_envelope(g, b, cfg.C_upper)
    if cfg.spectrum:
        spec = tfm.load_spectrum(cfg.spectrum)
        chk = counting.check_spectrum(spec, g, consts)
        out["count"] = counting.count_window(spec, a, b)
        out["check"] = chk.to_dict()
    return out


def cmd_bs(cfg: RunConfig, threads: int = 1):
    _need_seed(cfg)
    surf = _surface(cfg)
    G = surf.group
    rows = []
    for L in cfg.L:
        est = bsdiag.thin_part_volume(G, L, cfg.samples, cfg.seed, threads)
        bound = bsdiag.bs_volume_bound(G, L)
        ok = bound["bound"] >= est.volume - 3 * est.sigma
        rows.append({"estimate": est.to_dict(), "bound": bound, "verdict": "pass" if ok else "fail"})
    g_proxy = cfg.genus if cfg.genus is not None else G.genus
    check = bsdiag.corollary_assumptions_check(G, g_proxy, n_samples=cfg.samples, seed=cfg.seed, threads=threads)
    return {"volume": G.volume, "rows": rows, "assumptions": check.to_dict(), "note": bsdiag.PRIMITIVE_NOTE}


COMMANDS = {"transforms": cmd_transforms, "trace": cmd_trace, "count": cmd_count, "bs": cmd_bs}


# ---------------------------------------------------------------------- csv


def to_csv(command: str, result: dict) -> str:
    buf = io.StringIO()
    w = csv.writer(buf)
    if command == "transforms":
        for part in result["parts"]:
            tab = part["table"]
            keys = list(tab)
            w.writerow(["family"] + keys)
            for i in range(len(tab["r"])):
                w.writerow([part["test_function"]["family"]] + [_num(tab[k][i]) for k in keys])
    elif command == "trace":
        w.writerow(["family", "a", "b", "main_term", "R_I", "R_K", "R_K_sigma", "R_K_plus", "R_K_minus", "residual"])
        for p in result["parts"]:
            tf, geo = p["test_function"], p["geometric"]
            w.writerow([tf["family"], tf["a"], tf["b"], _num(p["main_term"]), _num(p["integral_remainder"]["value"]),
                        _num(geo["value"]), _num(geo["sigma"]), _num(geo["plus"]), _num(geo["minus"]), p["residual"]])
    elif command == "count":
        w.writerow(["a", "b", "count", "main", "band_lo", "band_hi", "verdict"])
        if "check" in result:
            for r in result["check"]["windows"]:
                ok = r["upper_ok"] and r["band_ok"] and r.get("small_ok", True)
                w.writerow([_num(r["a"]), _num(r["b"]), r["count"], _num(r["main"]), _num(r["band_lo"]), _num(r["band_hi"]), "pass" if ok else "fail"])
        else:
            e = result["equivalent"]
            w.writerow([e["a"], e["b"], "", _num(e["main"]), _num(e["count_band"][0]), _num(e["count_band"][1]), ""])
    else:
        w.writerow(["L", "estimate", "sigma", "bound", "verdict"])
        for r in result["rows"]:
            w.writerow([r["estimate"]["L"], _num(r["estimate"]["volume"]), _num(r["estimate"]["sigma"]), _num(r["bound"]["bound"]), r["verdict"]])
    return buf.getvalue()


# --------------------------------------------------------------------- main


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="selberg-lab", description="Trace-formula and counting-envelope laboratory.")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        s = sub.add_parser(name)
        s.add_argument("--surface", default="builtin:bolza")
        s.add_argument("--spectrum")
        s.add_argument("--window", default="0.5,5")
        s.add_argument("--t", type=float, default=1.0)
        s.add_argument("--family", default="auto", choices=["B", "H", "auto"])
        s.add_argument("--L", default="1.0", help="threshold(s), comma separated")
        s.add_argument("--samples", type=int, default=4000)
        s.add_argument("--seed", type=int)
        s.add_argument("--C-upper", type=float, default=1.0)
        s.add_argument("--C-equiv", type=float, default=1.0)
        s.add_argument("--C-mult", type=float, default=1.0)
        s.add_argument("--C-jth", type=float, default=1.0)
        s.add_argument("--genus", type=float, help="nominal genus for envelopes")
        s.add_argument("--grid", type=int, default=40)
        s.add_argument("--out")
        s.add_argument("--format", default="json", choices=["json", "csv"])
        s.add_argument("--threads", type=int, default=1)
    return p


def config_from_args(ns) -> RunConfig:
    return RunConfig(
        command=ns.command,
        surface=ns.surface,
        spectrum=ns.spectrum,
        window=_floats(ns.window, 2),
        t=ns.t,
        family=ns.family,
        L=_floats(ns.L),
        samples=ns.samples,
        seed=ns.seed,
        C_upper=ns.C_upper,
        C_equiv=ns.C_equiv,
        C_mult=ns.C_mult,
        C_jth=ns.C_jth,
        genus=ns.genus,
        grid=ns.grid,
    )


def run(cfg: RunConfig, threads: int = 1) -> dict:
    result = COMMANDS[cfg.command](cfg, threads=threads)
    return {"config": cfg.payload_dict(), "result": result}


def _emit(text: str, out):
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def main(argv=None) -> int:
    ns = build_parser().parse_args(argv)
    start = time.time()
    meta = {"version": __version__, "threads": ns.threads, "out": ns.out}
    try:
        cfg = config_from_args(ns)
        payload = run(cfg, threads=max(1, ns.threads))
        code = EXIT_OK
    except SelbergLabError as exc:
        payload = {"error": exc.to_dict()}
        code = EXIT_CERT if isinstance(exc, CertificationError) else EXIT_INPUT
    except (OSError, json.JSONDecodeError, KeyError) as exc:
        payload = {"error": {"error": "input error", "message": str(exc)}}
        code = EXIT_INPUT
    meta["started"] = time.strftime("%Y-%m-%dT%H:%M:%S", time.gmtime(start))
    meta["elapsed_s"] = round(time.time() - start, 3)
    if ns.format == "csv" and code == EXIT_OK:
        _emit(to_csv(ns.command, payload["result"]), ns.out)
    else:
        doc = {"payload": clean(payload), "metadata": meta}
        _emit(json.dumps(doc, sort_keys=True, indent=1) + "\n", ns.out)
    if code != EXIT_OK:
        sys.stderr.write(json.dumps(payload["error"]) + "\n")
    return code


if __name__ == "__main__":
    sys.exit(main())
