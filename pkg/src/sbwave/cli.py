"""Command line: ``sbwave approx | certify | stability | export-grid | report``."""

from __future__ import annotations

import csv
import io
import logging
import sys
from importlib import resources

import click
import numpy as np

from .certificate import Certificate, file_digest, iv_from_json, write_atomic
from .errors import ConfigError, FileFormatError, SbwaveError
from .params import PRESETS, load_config, preset
from .pipeline import run_approx, run_certify, run_stability
from .sequences import CoeffSeq, IndexBox, dump_coeffs, eval_grid, load_coeffs

BUILTIN_PREFIX = "builtin:"


def _fail(msg, code=2):
    click.echo(f"error: {msg}", err=True)
    sys.exit(code)


def _resolve(path):
    """``builtin:NAME`` points at a file shipped in the package data."""
    if path.startswith(BUILTIN_PREFIX):
        name = path[len(BUILTIN_PREFIX):]
        ref = resources.files("sbwave") / "data" / f"{name}.txt"
        if not ref.is_file():
            _fail(f"no shipped data named {name!r}")
        return str(ref)
    return path


def _params(preset_name, config):
    if preset_name and config:
        _fail("give either --preset or --config, not both")
    try:
        if config:
            return load_config(config)
        if preset_name:
            return preset(preset_name)
    except ConfigError as exc:
        _fail(str(exc))
    _fail("a configuration is required (--preset or --config)")


def _load(path):
    path = _resolve(path)
    try:
        U, _ = load_coeffs(path)
    except FileFormatError as exc:
        _fail(str(exc))
    return U, file_digest(path)


def _load_guess(path, params):
    path = _resolve(path)
    if path.endswith(".npy"):
        try:
            a = np.load(path, allow_pickle=False)
        except (OSError, ValueError) as exc:
            _fail(f"cannot read guess {path}: {exc}")
        if a.ndim != 2:
            _fail("a .npy guess must be a 2-D coefficient array")
        box = IndexBox(a.shape[0] - 1, a.shape[1] - 1)
        return CoeffSeq(box, a.astype(float), params.d1, params.d2)
    U, _ = _load(path)
    return U


config_options = [
    click.option("--preset", "preset_name", type=click.Choice(sorted(PRESETS)), help="named configuration"),
    click.option("--config", type=click.Path(dir_okay=False), help="JSON configuration file"),
]
run_options = [
    click.option("--threads", type=int, default=None, help="BLAS threads (ignored with --deterministic)"),
    click.option("--deterministic/--no-deterministic", default=True, show_default=True,
                 help="single thread, no wall time in the output"),
]


def _apply(options):
    def deco(f):
        for opt in reversed(options):
            f = opt(f)
        return f
    return deco


@click.group()
@click.option("-v", "--verbose", count=True, help="more logging (repeatable)")
def main(verbose):
    """Rigorous existence and stability certificates for traveling waves."""
    level = logging.WARNING - 10 * min(verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")


@main.command()
@_apply(config_options)
@click.argument("guess")
@click.option("-o", "--out", required=True, type=click.Path(dir_okay=False))
@click.option("--tol", type=float, default=None, help="residual tolerance (default from config)")
@click.option("--max-iter", type=int, default=30, show_default=True)
def approx(preset_name, config, guess, out, tol, max_iter):
    """Newton iteration from GUESS, then projection onto the trace constraints."""
    params = _params(preset_name, config)
    U0 = _load_guess(guess, params)
    try:
        U, info = run_approx(params, U0, tol=tol, max_iter=max_iter)
    except SbwaveError as exc:
        _fail(str(exc), 1)
    write_atomic(out, dump_coeffs(U, c=params.c))
    click.echo(f"iterations {info.iterations}")
    click.echo(f"residual {info.residual:.6e}")
    click.echo(f"trace defect {info.trace_defect:.6e}")
    click.echo(f"wrote {out}")


@main.command()
@_apply(config_options)
@click.argument("coeffs")
@click.option("-o", "--out", required=True, type=click.Path(dir_okay=False))
@_apply(run_options)
def certify(preset_name, config, coeffs, out, threads, deterministic):
    """Compute Y0, Z1, Z2 and the radii for the wave in COEFFS."""
    params = _params(preset_name, config)
    U, digest = _load(coeffs)
    cert = run_certify(params, U, digest, threads=threads, deterministic=deterministic)
    cert.save(out)
    _summary(cert)
    click.echo(f"wrote {out}")
    sys.exit(0 if cert.success else 1)


@main.command()
@_apply(config_options)
@click.argument("coeffs")
@click.option("--certificate", "cert_path", required=True, type=click.Path(dir_okay=False))
@click.option("-o", "--out", required=True, type=click.Path(dir_okay=False))
@click.option("--passes", type=int, default=2, show_default=True, help="spectral passes with window refinement")
@_apply(run_options)
def stability(preset_name, config, coeffs, cert_path, out, passes, threads, deterministic):
    """Count negative eigenvalues, enclose theta and classify (new certificate file)."""
    params = _params(preset_name, config)
    U, digest = _load(coeffs)
    try:
        cert = Certificate.load(cert_path)
    except FileFormatError as exc:
        _fail(str(exc))
    if cert.coeff_digest != digest:
        _fail("the certificate was issued for a different coefficient file")
    if not cert.verify_digest():
        _fail("certificate digest does not match its contents")
    res = run_stability(params, U, cert, threads=threads, deterministic=deterministic, max_passes=passes)
    res.save(out)
    _summary(res)
    click.echo(f"wrote {out}")
    sys.exit(0 if res.success else 1)


@main.command("export-grid")
@click.argument("coeffs")
@click.option("--resolution", type=int, default=101, show_default=True, help="points per axis")
@click.option("-o", "--out", required=True, type=click.Path(dir_okay=False))
def export_grid(coeffs, resolution, out):
    """Write x1,x2,u on a uniform grid over [-d1,d1] x [-d2,d2] as CSV."""
    if resolution < 2:
        _fail("resolution must be at least 2")
    U, _ = _load(coeffs)
    U = U.mid()
    x1 = np.linspace(-U.d1, U.d1, resolution)
    x2 = np.linspace(-U.d2, U.d2, resolution)
    X1, X2 = np.meshgrid(x1, x2, indexing="ij")
    pts = np.column_stack([X1.ravel(), X2.ravel()])
    vals = eval_grid(U, pts)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["x1", "x2", "u"])
    for (a, b), v in zip(pts, vals):
        w.writerow([repr(float(a)), repr(float(b)), repr(float(v))])
    write_atomic(out, buf.getvalue())
    click.echo(f"wrote {len(vals)} points to {out}")


def _fmt(pair):
    if pair is None:
        return "-"
    iv = iv_from_json(pair)
    return f"[{iv.lo:.6e}, {iv.hi:.6e}]"


def _summary(cert):
    click.echo(f"{cert.kind} certificate: success={cert.success}")
    if cert.failed_condition:
        click.echo(f"  failed condition: {cert.failed_condition} ({cert.message})")
    b = cert.bounds or {}
    for key in ("Y0", "Z1", "Z2_coeff", "kappa2"):
        if key in b:
            click.echo(f"  {key:9s} {_fmt(b[key])}")
    if cert.radii:
        click.echo(f"  r_min     {_fmt(cert.radii.get('r_min'))}")
        click.echo(f"  r_max     {_fmt(cert.radii.get('r_max'))}")
    if cert.verdict:
        v = cert.verdict
        click.echo(f"  negative eigenvalues {v.get('n_negative')}, translation mode {v.get('zero_is_translation_mode')}")
        click.echo(f"  theta     {_fmt(v.get('theta'))}")
        click.echo(f"  verdict   {v.get('verdict')}")


@main.command()
@click.argument("cert_path", type=click.Path(dir_okay=False))
@click.option("--spectrum", is_flag=True, help="also list every Gershgorin interval")
def report(cert_path, spectrum):
    """Human-readable summary of a certificate."""
    try:
        cert = Certificate.load(cert_path)
    except FileFormatError as exc:
        _fail(str(exc))
    _summary(cert)
    click.echo(f"  digest    {cert.digest} ({'ok' if cert.verify_digest() else 'MISMATCH'})")
    if cert.parent_digest:
        click.echo(f"  parent    {cert.parent_digest}")
    if spectrum and cert.spectral:
        for sector in ("even", "odd"):
            gs = cert.spectral[sector]
            c = iv_from_json(gs["centers"])
            r = iv_from_json(gs["radii"])
            lo = np.atleast_1d((c - r).lo)
            hi = np.atleast_1d((c + r).hi)
            order = np.argsort(lo)
            click.echo(f"  {sector} sector, tail floor {iv_from_json(gs['tail_floor']).lo:.6g}")
            for i in order:
                click.echo(f"    [{lo[i]: .6e}, {hi[i]: .6e}]")


if __name__ == "__main__":  # pragma: no cover
    main()
