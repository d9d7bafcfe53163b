"""Command line for the benchmark: a thin client of the HTTP service.

By default every command mounts the service in process (no socket); pass
``--server URL`` to target a running instance instead.  Commands exit 0 on
success, 2 on usage or configuration errors, and 3 on runtime or I/O
failures.  All option values can also come from environment variables with
the ``CVARBANDITS_`` prefix (e.g. ``CVARBANDITS_SIMULATE_RUNS``).
"""

from __future__ import annotations

import asyncio
import json
import math
from pathlib import Path

import click
import httpx
import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from .harness import (
    aggregate_filename,
    per_run_filename,
    render_config_echo,
    render_sweep_csv,
    render_trace_csv,
)
from .metrics import MetricSeries, render_metric_csv
from .policy import METHODS


class RuntimeFailure(click.ClickException):
    exit_code = 3


def _detail(resp: httpx.Response) -> str:
    try:
        detail = resp.json().get("detail")
    except Exception:
        return resp.text[:500]
    if isinstance(detail, str):
        return detail
    if isinstance(detail, list):
        parts = []
        for item in detail:
            loc = ".".join(str(x) for x in item.get("loc", ()) if x != "body")
            parts.append(f"{loc}: {item.get('msg', 'invalid value')}")
        return "; ".join(parts) or resp.text[:500]
    return str(detail)


async def _post_in_process(path: str, payload: dict) -> httpx.Response:
    from .service.app import create_app

    transport = httpx.ASGITransport(app=create_app())
    async with httpx.AsyncClient(transport=transport, base_url="http://service.local") as client:
        return await client.post(path, json=payload, timeout=None)


def _call_service(server: str | None, path: str, payload: dict) -> dict:
    if server:
        try:
            resp = httpx.post(server.rstrip("/") + path, json=payload, timeout=None)
        except httpx.HTTPError as exc:
            raise RuntimeFailure(f"service request failed: {exc}")
    else:
        resp = asyncio.run(_post_in_process(path, payload))
    if resp.status_code in (400, 422):
        raise click.UsageError(_detail(resp))
    if resp.status_code != 200:
        raise RuntimeFailure(f"service error {resp.status_code}: {resp.text[:500]}")
    return resp.json()


def _parse_float_list(text: str, what: str) -> list[float]:
    values = []
    for token in text.split(","):
        token = token.strip()
        try:
            values.append(float(token))
        except ValueError:
            raise click.UsageError(f"invalid {what} value: {token!r}")
    return values


def _resolve_method(name: str) -> str:
    """Accept full method names or any unambiguous prefix (e.g. 'dual')."""
    if name in METHODS:
        return name
    matches = [m for m in METHODS if m.startswith(name)]
    if len(matches) == 1:
        return matches[0]
    raise click.UsageError(f"unknown method {name!r}; choose from {', '.join(METHODS)}")


def _parse_methods(text: str) -> list[str]:
    names = [_resolve_method(token.strip()) for token in text.split(",") if token.strip()]
    if not names:
        raise click.UsageError("at least one method is required")
    return names


def _parse_grid(value) -> list:
    if isinstance(value, str):
        parts = _parse_float_list(value, "grid")
    else:
        parts = list(value)
    if len(parts) != 3:
        raise click.UsageError(f"grid must be MIN,MAX,COUNT, got {value!r}")
    return [float(parts[0]), float(parts[1]), int(parts[2])]


# Keys a config file may set.  'seed' matches the --seed flag and maps to the
# service's master_seed; 'out', 'per_run', and 'trace_run' are client-side.
_FILE_KEYS = (
    "runs",
    "stages",
    "arms",
    "alpha",
    "epsilon",
    "lambdas",
    "methods",
    "grid",
    "seed",
    "workers",
    "share_exploration",
    "out",
    "per_run",
    "trace_run",
)


def _load_config_file(path: str) -> dict:
    p = Path(path)
    try:
        raw = p.read_bytes()
    except OSError as exc:
        raise click.UsageError(f"cannot read config file {path}: {exc}")
    suffix = p.suffix.lower()
    if suffix == ".json":
        try:
            data = json.loads(raw.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise click.UsageError(f"invalid JSON config {path}: {exc}")
    elif suffix == ".toml":
        try:
            data = tomllib.loads(raw.decode("utf-8"))
        except (UnicodeDecodeError, tomllib.TOMLDecodeError) as exc:
            raise click.UsageError(f"invalid TOML config {path}: {exc}")
    else:
        try:
            data = tomllib.loads(raw.decode("utf-8"))
        except Exception:
            try:
                data = json.loads(raw.decode("utf-8"))
            except Exception:
                raise click.UsageError(f"config file {path} is neither valid TOML nor valid JSON")
    if not isinstance(data, dict):
        raise click.UsageError(f"config file {path} must contain a table of settings")
    for key in data:
        if key not in _FILE_KEYS:
            raise click.UsageError(f"unknown config key: {key!r}")
    return data


def _apply_setting(payload: dict, local: dict, key: str, value) -> None:
    try:
        if key in ("runs", "stages", "arms", "workers"):
            payload[key] = int(value)
        elif key in ("alpha", "epsilon"):
            payload[key] = float(value)
        elif key == "seed":
            payload["master_seed"] = int(value)
        elif key == "lambdas":
            if isinstance(value, (list, tuple)):
                payload["lambdas"] = [float(v) for v in value]
            else:
                payload["lambdas"] = _parse_float_list(str(value), "lambda")
        elif key == "methods":
            if isinstance(value, (list, tuple)):
                payload["methods"] = [_resolve_method(str(name)) for name in value]
            else:
                payload["methods"] = _parse_methods(str(value))
        elif key == "grid":
            payload["grid"] = _parse_grid(value)
        elif key == "share_exploration":
            payload["share_exploration"] = bool(value)
        elif key == "out":
            local["out"] = str(value)
        elif key == "per_run":
            local["per_run"] = bool(value)
        elif key == "trace_run":
            local["trace_run"] = int(value)
        else:  # pragma: no cover - guarded by _FILE_KEYS
            raise click.UsageError(f"unknown config key: {key!r}")
    except (TypeError, ValueError) as exc:
        raise click.UsageError(f"invalid value for {key!r}: {value!r} ({exc})")


def _resolve_experiment(config_path: str | None, flags: dict) -> tuple[dict, dict]:
    """Merge config sources into (service payload, local settings).

    Precedence: service defaults < config file < environment/flags (click
    hands env values through the same options).  Only explicitly set keys are
    sent; the service echoes the fully resolved configuration back.
    """
    payload: dict = {}
    local = {"out": "out", "per_run": False, "trace_run": None}
    if config_path:
        for key, value in _load_config_file(config_path).items():
            _apply_setting(payload, local, key, value)
    for key, value in flags.items():
        if value is None:
            continue
        _apply_setting(payload, local, key, value)
    return payload, local


def _write_text(path: Path, text: str) -> None:
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding="utf-8")
    except OSError as exc:
        raise RuntimeFailure(f"cannot write {path}: {exc}")


def _summary_table(rows: list[dict]) -> str:
    lines = [
        f"{'method':<20}{'lambda':>8}{'hit_rate_T':>14}{'avg_regret_T':>15}{'empirical_cvar_T':>18}"
    ]
    for row in rows:
        lines.append(
            f"{row['method']:<20}{row['lambda']:>8g}{row['hit_rate_T']:>14.6f}"
            f"{row['avg_regret_T']:>15.6f}{row['empirical_cvar_T']:>18.6f}"
        )
    return "\n".join(lines)


def _series_from_cell(cell: dict) -> MetricSeries:
    return MetricSeries(
        hit_rate=np.asarray(cell["hit_rate"], dtype=float),
        avg_regret=np.asarray(cell["avg_regret"], dtype=float),
        empirical_cvar=np.asarray(cell["empirical_cvar"], dtype=float),
    )


def _render_per_run_csv(entries: list[dict]) -> str:
    lines = ["run,stage,hit_rate,avg_regret,empirical_cvar"]
    for entry in entries:
        run = int(entry["run"])
        for t, (h, r, c) in enumerate(
            zip(entry["hit_rate"], entry["avg_regret"], entry["empirical_cvar"])
        ):
            lines.append(f"{run},{t + 1},{float(h)!r},{float(r)!r},{float(c)!r}")
    return "\n".join(lines) + "\n"


_EXPERIMENT_OPTIONS = (
    click.option("--config", "config_path", type=click.Path(), default=None,
                 help="TOML or JSON config file; flags override it."),
    click.option("--runs", type=int, default=None, help="Number of Monte Carlo runs."),
    click.option("--stages", type=int, default=None, help="Stages per run."),
    click.option("--alpha", type=float, default=None, help="Tail confidence level in (0, 1)."),
    click.option("--epsilon", type=float, default=None, help="Exploration probability."),
    click.option("--lambda", "lambdas", default=None,
                 help="Comma-separated decay rates, e.g. 0.1,0.5."),
    click.option("--method", "methods", default=None,
                 help=f"Comma-separated subset of: {', '.join(METHODS)}."),
    click.option("--seed", type=int, default=None, help="Master seed."),
    click.option("--workers", type=int, default=None, help="Worker processes."),
    click.option("--share-exploration/--no-share-exploration", "share_exploration",
                 default=None, help="Share exploration draws across cells of a run."),
    click.option("--out", "out", type=click.Path(file_okay=False), default=None,
                 help="Output directory (default: out)."),
)


def _experiment_options(fn):
    for option in reversed(_EXPERIMENT_OPTIONS):
        fn = option(fn)
    return fn


@click.group(context_settings={"auto_envvar_prefix": "CVARBANDITS", "help_option_names": ["-h", "--help"]})
@click.option("--server", default=None, envvar="CVARBANDITS_SERVER",
              help="Base URL of a running service; default mounts it in process.")
@click.version_option(package_name="cvarbandits")
@click.pass_context
def main(ctx: click.Context, server: str | None) -> None:
    """Risk-averse bandit benchmark: simulate, sweep decay rates, estimate CVaR."""
    ctx.ensure_object(dict)
    ctx.obj["server"] = server


@main.command()
@_experiment_options
@click.option("--per-run", "per_run", is_flag=True, default=None,
              help="Also persist every run's metric series.")
@click.option("--trace-run", "trace_run", type=int, default=None,
              help="Write the ground-truth CVaR trace of this run index (0-based).")
@click.pass_context
def simulate(ctx: click.Context, config_path, per_run, trace_run, **flags) -> None:
    """Run the benchmark and write aggregate CSVs plus a config echo."""
    out = flags.pop("out", None)
    payload, local = _resolve_experiment(
        config_path, {**flags, "out": out, "per_run": per_run, "trace_run": trace_run}
    )
    if local["per_run"]:
        payload["collect_per_run"] = True
    if local["trace_run"] is not None:
        payload["trace_run"] = local["trace_run"]
    data = _call_service(ctx.obj["server"], "/simulate", payload)

    out_dir = Path(local["out"])
    _write_text(out_dir / "config_echo.json", render_config_echo(data["config"]))
    summary_rows = []
    for cell in data["cells"]:
        _write_text(
            out_dir / aggregate_filename(cell["method"], cell["lambda"]),
            render_metric_csv(_series_from_cell(cell)),
        )
        summary_rows.append({"method": cell["method"], "lambda": cell["lambda"], **cell["finals"]})
    if data.get("per_run"):
        grouped: dict[tuple[str, float], list[dict]] = {}
        for entry in data["per_run"]:
            grouped.setdefault((entry["method"], entry["lambda"]), []).append(entry)
        for (method, lam), entries in grouped.items():
            _write_text(out_dir / per_run_filename(method, lam), _render_per_run_csv(entries))
    if data.get("trace") is not None:
        rows = [(r["stage"], r["arm"], r["true_cvar"], r["is_optimal"]) for r in data["trace"]]
        _write_text(out_dir / f"cvar_trace_run{local['trace_run']}.csv", render_trace_csv(rows))
    click.echo(_summary_table(summary_rows))
    click.echo(f"wrote {out_dir}/")


@main.command()
@_experiment_options
@click.pass_context
def sweep(ctx: click.Context, config_path, **flags) -> None:
    """Run the decay-rate sweep and write sweep.csv."""
    out = flags.pop("out", None)
    payload, local = _resolve_experiment(config_path, {**flags, "out": out})
    data = _call_service(ctx.obj["server"], "/sweep", payload)

    out_dir = Path(local["out"])
    _write_text(out_dir / "config_echo.json", render_config_echo(data["config"]))
    _write_text(out_dir / "sweep.csv", render_sweep_csv(data["rows"]))
    click.echo(_summary_table(data["rows"]))
    click.echo(f"wrote {out_dir}/sweep.csv")


def _read_loss_file(path: str) -> list[float]:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise click.UsageError(f"cannot read loss file {path}: {exc}")
    lines = text.split("\n")
    while lines and lines[-1].strip() == "":
        lines.pop()
    losses = []
    for number, line in enumerate(lines, start=1):
        try:
            value = float(line.strip())
        except ValueError:
            raise click.UsageError(f"invalid loss on line {number}: {line.strip()!r}")
        if not math.isfinite(value):
            raise click.UsageError(f"non-finite loss on line {number}: {line.strip()!r}")
        losses.append(value)
    if not losses:
        raise click.UsageError(f"loss file {path} contains no observations")
    return losses


@main.command()
@click.argument("loss_file", type=click.Path())
@click.option("--method", default="sample_average", show_default=True,
              help=f"One of: {', '.join(METHODS)}.")
@click.option("--alpha", type=float, default=0.9, show_default=True,
              help="Tail confidence level in (0, 1).")
@click.option("--lambda", "lam", type=float, default=0.5, show_default=True,
              help="Decay rate (weighted_empirical and dual_recursive).")
@click.option("--grid", default=None, help="Dual grid as MIN,MAX,COUNT.")
@click.pass_context
def estimate(ctx: click.Context, loss_file, method, alpha, lam, grid) -> None:
    """Estimate CVaR from a loss file (one loss per line, oldest first).

    Prints the estimate with 6 decimals; the dual method adds a second line
    with the minimizing grid point (its quantile estimate).
    """
    method = _resolve_method(method)
    losses = _read_loss_file(loss_file)
    payload = {"losses": losses, "method": method, "alpha": alpha, "lambda": lam}
    if grid is not None:
        payload["grid"] = _parse_grid(grid)
    data = _call_service(ctx.obj["server"], "/estimate", payload)
    click.echo(f"{data['estimate']:.6f}")
    if data.get("argmin_c") is not None:
        click.echo(f"argmin_c {data['argmin_c']:.6f}")


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8000, show_default=True)
def serve(host: str, port: int) -> None:
    """Run the HTTP service."""
    import uvicorn

    uvicorn.run("cvarbandits.service.app:app", host=host, port=port)


if __name__ == "__main__":
    main()
