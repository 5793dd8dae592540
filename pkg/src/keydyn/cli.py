"""Command-line harness: train, gen, replay, export, serve."""

from __future__ import annotations

import json
import random
import sys
from pathlib import Path

import click

from .config import THRESHOLD_MODES, EngineConfig
from .engine import AuthEngine
from .replay import LibraryTransport, load_scenario, run_scenario
from .simulate import ShiftStyle, TypistModel, simulate_session
from .store import ProfileStore, load


def _model_options(fn):
    opts = [
        click.option("--dwell-mean", type=float, default=80.0, show_default=True),
        click.option("--dwell-std", type=float, default=8.0, show_default=True),
        click.option("--flight-mean", type=float, default=100.0, show_default=True),
        click.option("--flight-std", type=float, default=12.0, show_default=True),
        click.option("--error-rate", type=float, default=0.0, show_default=True),
        click.option(
            "--shift-style",
            type=click.Choice([s.value for s in ShiftStyle]),
            default=ShiftStyle.SHIFT_KEY.value,
            show_default=True,
        ),
    ]
    for opt in reversed(opts):
        fn = opt(fn)
    return fn


def _build_model(dwell_mean, dwell_std, flight_mean, flight_std, error_rate, shift_style, seed):
    return TypistModel(
        dwell_mean=dwell_mean,
        dwell_std=dwell_std,
        flight_mean=flight_mean,
        flight_std=flight_std,
        error_rate=error_rate,
        shift_style=ShiftStyle(shift_style),
        seed=seed,
    )


def _load_store(path: str) -> ProfileStore:
    if Path(path).exists():
        return load(path)
    return ProfileStore()


@click.group(context_settings={"auto_envvar_prefix": "KEYDYN"})
def main() -> None:
    """Keystroke-dynamics authentication toolkit."""


@main.command()
@click.argument("username")
@click.argument("password")
@click.option("--store", "store_path", required=True, type=click.Path())
@click.option("--sessions-dir", type=click.Path(exists=True, file_okay=False))
@click.option("--n", "n_sessions", type=int, default=20, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--min-history", type=int, default=10, show_default=True)
@_model_options
def train(
    username, password, store_path, sessions_dir, n_sessions, seed, min_history, **model_kw
) -> None:
    """Enroll a user from recorded sessions or a simulated typist."""
    store = _load_store(store_path)
    config = EngineConfig(min_history=min_history, seed=seed)
    engine = AuthEngine(store, config, store_path=store_path)
    if sessions_dir:
        docs = [
            json.loads(p.read_text(encoding="utf-8"))
            for p in sorted(Path(sessions_dir).glob("*.json"))
        ]
    else:
        model = _build_model(seed=seed, **model_kw)
        rng = model.rng()
        docs = [
            simulate_session(model, username, password, rng).to_dict()
            for _ in range(n_sessions)
        ]
    trained = engine.enroll(username, password, docs)
    click.echo(f"trained {username} on {trained} sessions -> {store_path}")
    export = engine.cluster_export(username)
    click.echo(f"history clusters: k={export['k']}")
    for k, w in zip(export["elbow"]["k_values"], export["elbow"]["wcss_values"]):
        click.echo(f"  k={k} wcss={w:.6f}")


@main.command()
@click.argument("username")
@click.argument("password")
@click.option("--n", "n_sessions", type=int, default=20, show_default=True)
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False))
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--geo", default="ZA-GP", show_default=True)
@_model_options
def gen(username, password, n_sessions, out_dir, seed, geo, **model_kw) -> None:
    """Write simulated session documents as JSON files."""
    from .session import SessionContext

    model = _build_model(seed=seed, **model_kw)
    rng = model.rng()
    context = SessionContext(geo=geo, timezone="UTC", device_id="sim-0")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for i in range(n_sessions):
        session = simulate_session(model, username, password, rng, context=context)
        path = out / f"session-{i:04d}.json"
        path.write_text(json.dumps(session.to_dict(), indent=2), encoding="utf-8")
    click.echo(f"wrote {n_sessions} sessions to {out}")


@main.command()
@click.argument("scenario", type=click.Path(exists=True, dir_okay=False))
@click.option("--store", "store_path", required=True, type=click.Path(exists=True))
@click.option("--outbox", "outbox_path", type=click.Path(), default=None)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--min-history", type=int, default=10, show_default=True)
def replay(scenario, store_path, outbox_path, seed, min_history) -> None:
    """Replay a labeled scenario against the stored profiles."""
    store = load(store_path)
    if outbox_path is None:
        outbox_path = str(Path(store_path).with_suffix(".outbox"))
    config = EngineConfig(min_history=min_history, seed=seed)
    engine = AuthEngine(store, config, outbox_path=outbox_path)
    transport = LibraryTransport(engine, outbox_path)
    attempts = load_scenario(scenario)
    report, log = run_scenario(transport, attempts)
    for entry in log:
        challenge = f" challenge={entry.challenge_kind}" if entry.challenge_kind else ""
        reason = f" reason={entry.reason}" if entry.reason else ""
        click.echo(
            f"[{entry.index:03d}] {entry.username} truth={entry.truth} "
            f"outcome={entry.outcome} degree={entry.degree}{challenge}{reason}"
        )
    click.echo(json.dumps(report.to_dict(), indent=2))


@main.command()
@click.argument("username")
@click.option("--store", "store_path", required=True, type=click.Path(exists=True))
@click.option("--outdir", required=True, type=click.Path(file_okay=False))
@click.option("--attempt", "attempt_file", type=click.Path(exists=True, dir_okay=False))
@click.option("--min-history", type=int, default=10, show_default=True)
def export(username, store_path, outdir, attempt_file, min_history) -> None:
    """Write elbow and scatter CSVs for a user's history clusters."""
    store = load(store_path)
    engine = AuthEngine(store, EngineConfig(min_history=min_history))
    attempt_doc = None
    if attempt_file:
        attempt_doc = json.loads(Path(attempt_file).read_text(encoding="utf-8"))
    doc = engine.cluster_export(username, attempt_doc)
    out = Path(outdir)
    out.mkdir(parents=True, exist_ok=True)

    elbow_path = out / f"{username}-elbow.csv"
    rows = ["k,wcss"] + [
        f"{k},{w:.9f}"
        for k, w in zip(doc["elbow"]["k_values"], doc["elbow"]["wcss_values"])
    ]
    elbow_path.write_text("\n".join(rows) + "\n", encoding="utf-8")

    dims = doc["dimensions"]
    xi, yi = dims.index(doc["x_dim"]), dims.index(doc["y_dim"])
    scatter_rows = ["x,y,kind"]
    for point in doc["history"]:
        scatter_rows.append(f"{point[xi]:.9f},{point[yi]:.9f},history")
    for point in doc["centroids"]:
        scatter_rows.append(f"{point[xi]:.9f},{point[yi]:.9f},centroid")
    if "attempt" in doc:
        point = doc["attempt"]
        scatter_rows.append(f"{point[xi]:.9f},{point[yi]:.9f},attempt")
    scatter_path = out / f"{username}-scatter.csv"
    scatter_path.write_text("\n".join(scatter_rows) + "\n", encoding="utf-8")
    click.echo(f"wrote {elbow_path} and {scatter_path} (k={doc['k']})")


@main.command()
@click.option("--store", "store_path", required=True, type=click.Path())
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8807, show_default=True)
@click.option("--outbox", "outbox_path", type=click.Path(), default=None)
@click.option("--min-history", type=int, default=10, show_default=True)
@click.option("--radius-factor", type=float, default=2.0, show_default=True)
@click.option(
    "--threshold-mode",
    type=click.Choice(list(THRESHOLD_MODES)),
    default="radius-factor",
    show_default=True,
)
@click.option("--otp-ttl-ms", type=int, default=300_000, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--demo-dir", type=click.Path(exists=True, file_okay=False), default=None)
def serve(
    store_path,
    host,
    port,
    outbox_path,
    min_history,
    radius_factor,
    threshold_mode,
    otp_ttl_ms,
    seed,
    demo_dir,
) -> None:
    """Run the HTTP service."""
    import uvicorn

    from .service import create_app

    store = _load_store(store_path)
    if outbox_path is None:
        outbox_path = str(Path(store_path).with_suffix(".outbox"))
    config = EngineConfig(
        min_history=min_history,
        radius_factor=radius_factor,
        threshold_mode=threshold_mode,
        otp_ttl_ms=otp_ttl_ms,
        seed=seed,
    )
    engine = AuthEngine(
        store,
        config,
        store_path=store_path,
        outbox_path=outbox_path,
        rng=random.Random(seed),
    )
    app = create_app(engine, demo_dir=demo_dir)
    click.echo(f"serving on {host}:{port} (store={store_path}, outbox={outbox_path})")
    uvicorn.run(app, host=host, port=port, log_level="warning")


if __name__ == "__main__":
    sys.exit(main())
