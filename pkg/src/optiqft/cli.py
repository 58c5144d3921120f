"""Command-line front end: curve generation, virtual calibration, trace
synthesis, fringe fitting and unitary decomposition, all file based.

Exit codes: 0 success, 2 unreadable or malformed input, 3 degenerate
physics (no interference contrast to calibrate against), 4 non-unitary
decomposition input.  Every command writes a run manifest next to its
output; re-running with the same inputs and seed reproduces the output
byte for byte.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click
import numpy as np

from . import __version__
from .calibration import DegenerateConfigError, calibrate
from .elements import CircuitDescription, compose
from .experiment import (DetectorTrace, ExperimentConfig, default_phi_grid,
                         synthesize_measured_trace, theoretical_curves)
from .fitting import FitOptions, fit, residual_report
from .synthesis import reck_decompose


def _fail(code: int, message: str):
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


def _load_config(path: str) -> ExperimentConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        _fail(2, f"cannot read config {path}: {exc}")
    try:
        return ExperimentConfig.from_json(text)
    except (ValueError, KeyError, json.JSONDecodeError) as exc:
        _fail(2, f"malformed config {path}: {exc}")


def _write_manifest(out_path: str, command: str, inputs: dict, options: dict,
                    outputs: list):
    manifest = {
        "command": command,
        "inputs": inputs,
        "options": options,
        "outputs": outputs,
        "version": __version__,
    }
    path = Path(str(out_path) + ".manifest.json")
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")


@click.group()
@click.version_option(__version__)
def main():
    """Simulate, calibrate and fit a lossy three-beam Fourier interferometer."""


@main.command()
@click.option("--config", "config_path", required=True, type=str,
              help="Experiment config JSON.")
@click.option("--out", "out_path", required=True, type=str,
              help="Output CSV path.")
@click.option("--mode", type=click.Choice(["ideal", "fixed"]), default="fixed",
              show_default=True, help="Ideal lossless circuit or lossy network.")
@click.option("--grid", type=int, default=720, show_default=True,
              help="Number of platform phases over one period.")
def curves(config_path, out_path, mode, grid):
    """Write theoretical detector curves as CSV."""
    cfg = _load_config(config_path)
    trace = theoretical_curves(cfg, mode=mode, grid=grid)
    Path(out_path).write_text(trace.to_csv())
    _write_manifest(out_path, "curves", {"config": config_path},
                    {"mode": mode, "grid": grid}, [out_path])
    click.echo(f"wrote {len(trace.phi)} rows to {out_path}")


@main.command(name="calibrate")
@click.option("--config", "config_path", required=True, type=str)
@click.option("--out", "out_path", required=True, type=str,
              help="Calibration report JSON path.")
def calibrate_cmd(config_path, out_path):
    """Run the virtual four-step adjustment and write the report."""
    cfg = _load_config(config_path)
    try:
        result = calibrate(cfg)
    except DegenerateConfigError as exc:
        _fail(3, f"degenerate configuration: {exc}")
    Path(out_path).write_text(json.dumps(result.to_dict(), indent=2,
                                         sort_keys=True) + "\n")
    _write_manifest(out_path, "calibrate", {"config": config_path}, {},
                    [out_path])
    click.echo(f"calibrated: max offset {result.max_offset:.3e} rad")


@main.command()
@click.option("--config", "config_path", required=True, type=str)
@click.option("--out", "out_path", required=True, type=str,
              help="Output trace CSV path.")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--grid", type=int, default=720, show_default=True)
@click.option("--noise", type=float, default=0.0, show_default=True,
              help="Gaussian noise standard deviation (intensity units).")
@click.option("--scale", type=str, default="1,1,1", show_default=True,
              help="Per-detector intensity scales a0,a1,a2.")
@click.option("--bias", type=str, default="0,0,0", show_default=True,
              help="Per-detector intensity biases b0,b1,b2.")
@click.option("--phase-scale", type=float, default=1.0, show_default=True)
@click.option("--phase-offset", type=float, default=0.0, show_default=True)
@click.option("--dx", type=str, default=None,
              help="Offsets from the nominal setpoints, dx1,dx2,dx3,dx4 "
                   "(overrides the config's x).")
def synth(config_path, out_path, seed, grid, noise, scale, bias,
          phase_scale, phase_offset, dx):
    """Generate a synthetic measured trace from the forward model."""
    cfg = _load_config(config_path)
    try:
        scale_v = tuple(float(v) for v in scale.split(","))
        bias_v = tuple(float(v) for v in bias.split(","))
        if len(scale_v) != 3 or len(bias_v) != 3:
            raise ValueError("need three comma-separated values")
        if dx is not None:
            offs = tuple(float(v) for v in dx.split(","))
            if len(offs) != 4:
                raise ValueError("need four comma-separated dx values")
            from .experiment import fourier_setpoints
            base = fourier_setpoints(cfg)
            cfg = cfg.replace(x=tuple(b + o for b, o in zip(base, offs)))
    except ValueError as exc:
        _fail(2, f"bad option value: {exc}")
    trace = synthesize_measured_trace(cfg, scale_v, bias_v, phase_scale,
                                      phase_offset, noise, seed, grid)
    Path(out_path).write_text(trace.to_csv())
    _write_manifest(out_path, "synth", {"config": config_path},
                    {"seed": seed, "grid": grid, "noise": noise,
                     "scale": list(scale_v), "bias": list(bias_v),
                     "phase_scale": phase_scale, "phase_offset": phase_offset,
                     "dx": dx}, [out_path])
    click.echo(f"wrote {len(trace.phi)} rows to {out_path}")


@main.command(name="fit")
@click.option("--trace", "trace_path", required=True, type=str,
              help="Measured trace CSV.")
@click.option("--config", "config_path", required=True, type=str)
@click.option("--out", "out_path", required=True, type=str,
              help="Fit result JSON path.")
@click.option("--multistart/--no-multistart", default=True, show_default=True,
              help="Scan the 81-point phase initialization grid.")
def fit_cmd(trace_path, config_path, out_path, multistart):
    """Fit the fringe model to a measured trace."""
    cfg = _load_config(config_path)
    try:
        trace = DetectorTrace.from_csv(Path(trace_path).read_text())
    except OSError as exc:
        _fail(2, f"cannot read trace {trace_path}: {exc}")
    except ValueError as exc:
        _fail(2, f"malformed trace {trace_path}: {exc}")
    options = FitOptions() if multistart else FitOptions(multistart_offsets=(0.0,))
    try:
        result = fit(trace, cfg, options=options)
    except ValueError as exc:
        _fail(2, f"cannot fit trace: {exc}")
    payload = result.to_dict()
    payload["report"] = residual_report(result, trace, cfg)
    Path(out_path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    _write_manifest(out_path, "fit", {"config": config_path, "trace": trace_path},
                    {"multistart": multistart}, [out_path])
    click.echo(f"fit residual {result.residual:.6e}, "
               f"delta_x = {[round(d, 4) for d in result.delta_x]}")


@main.command()
@click.option("--matrix", "matrix_path", required=True, type=str,
              help="Unitary JSON: {\"dim\": n, \"real\": [[..]], \"imag\": [[..]]}.")
@click.option("--out", "out_path", required=True, type=str,
              help="Netlist JSON path.")
@click.option("--tol", type=float, default=1e-10, show_default=True)
def decompose(matrix_path, out_path, tol):
    """Decompose a unitary matrix into a splitter netlist."""
    try:
        data = json.loads(Path(matrix_path).read_text())
        dim = int(data["dim"])
        u = np.asarray(data["real"], dtype=float) + 1j * np.asarray(data["imag"], dtype=float)
        if u.shape != (dim, dim):
            raise ValueError(f"matrix shape {u.shape} does not match dim {dim}")
    except OSError as exc:
        _fail(2, f"cannot read matrix {matrix_path}: {exc}")
    except (KeyError, TypeError, ValueError, json.JSONDecodeError) as exc:
        _fail(2, f"malformed matrix {matrix_path}: {exc}")
    try:
        circuit = reck_decompose(u, tol=tol)
    except ValueError as exc:
        _fail(4, str(exc))
    Path(out_path).write_text(circuit.to_json() + "\n")
    err = float(np.max(np.abs(compose(circuit) - u)))
    _write_manifest(out_path, "decompose", {"matrix": matrix_path},
                    {"tol": tol}, [out_path])
    click.echo(f"netlist with {len(circuit.elements)} elements, "
               f"reconstruction error {err:.3e}")


if __name__ == "__main__":
    main()
