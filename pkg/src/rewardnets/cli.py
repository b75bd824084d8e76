"""Command-line entry point: pool generation, policy training, strategy
diffusion grids, scripted experiments, analysis exports, and the session
server. Every writing subcommand drops a manifest beside its outputs so a
rerun with the same inputs is byte-identical."""

from __future__ import annotations

import json
import sys
from dataclasses import asdict
from pathlib import Path

import click

from . import abm as abm_mod
from .analysis import classify, export_tidy, lineage_stats
from .engine import GreedyQPolicy, PopulationRun, PopulationSpec
from .errors import InvalidConfig, RewardNetError, UnsatisfiableConfig
from .ioutil import atomic_write_text
from .networks import GenConfig, read_pool, write_pool
from .poolgen import DEFAULT_POOL_SIZE, POOL_NAMES, generate_pool
from .store import ExperimentStore
from .strategies import RulePolicy
from .training import TrainConfig, load_checkpoint, save_checkpoint, train

VERSION = "1.0"

EXIT_CONFIG = 3
EXIT_RUNTIME = 4


def _out_root(value: str | None) -> Path:
    import os

    root = value or os.environ.get("REWARDNETS_OUT", ".")
    path = Path(root)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _manifest(out: Path, subcommand: str, seed: int | None, params: dict):
    body = {
        "subcommand": subcommand,
        "master_seed": seed,
        "output_dir": str(out),
        "version": VERSION,
        "params": params,
    }
    atomic_write_text(out / "manifest.json", json.dumps(body, sort_keys=True, indent=2) + "\n")


def _run(fn):
    """Map the exception taxonomy onto process exit codes."""
    try:
        fn()
    except (InvalidConfig, UnsatisfiableConfig, ValueError) as e:
        click.echo(f"config error: {e}", err=True)
        sys.exit(EXIT_CONFIG)
    except RewardNetError as e:
        click.echo(f"error: {e}", err=True)
        sys.exit(EXIT_RUNTIME)


@click.group()
def main():
    """Reward-network task pipeline."""


@main.command()
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--count", type=int, default=DEFAULT_POOL_SIZE, show_default=True)
@click.option("--out", "out_dir", default=None, help="output directory (default $REWARDNETS_OUT)")
def gen(seed, count, out_dir):
    """Generate the training/validation/experiment network pools."""

    def go():
        out = _out_root(out_dir)
        for label in POOL_NAMES:
            nets, stats = generate_pool(count, seed, label, GenConfig())
            write_pool(out / f"{label}.ndjson", nets)
            click.echo(f"{label}: {stats.accepted} networks, "
                       f"rejection fraction {stats.rejection_fraction:.4f}")
        _manifest(out, "gen", seed, {"count": count})

    _run(go)


@main.command()
@click.option("--pools", "pools_dir", required=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--episodes", type=int, default=20000, show_default=True)
@click.option("--out", "out_dir", default=None)
def train_cmd(pools_dir, seed, episodes, out_dir):
    """Train the recurrent Q-policy and write checkpoint + learning curve."""

    def go():
        out = _out_root(out_dir)
        train_pool = read_pool(Path(pools_dir) / "training.ndjson")
        eval_pool = read_pool(Path(pools_dir) / "validation.ndjson")
        cfg = TrainConfig(seed=seed, episodes=episodes)
        qnet, curve = train(
            cfg, train_pool, eval_pool,
            progress=lambda p: click.echo(
                f"episode {p.episode}: reward {p.mean_reward:.0f} "
                f"level {p.mean_max_level:.2f} eps {p.epsilon:.3f}"))
        save_checkpoint(out / f"checkpoint-{seed}.npz", qnet, cfg)
        atomic_write_text(out / f"curve-{seed}.json",
                          json.dumps([p.to_dict() for p in curve]) + "\n")
        _manifest(out, "train", seed, {"episodes": episodes, "config": asdict(cfg)})

    _run(go)


main.add_command(train_cmd, name="train")


@main.command()
@click.option("--reps", type=int, default=100, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--grid", "grid_name", type=click.Choice(["default", "coarse"]),
              default="default", show_default=True)
@click.option("--figure", type=int, default=None,
              help="4 = boundary and uplift tables for the main grid figure")
@click.option("--out", "out_dir", default=None)
def abm(reps, seed, grid_name, figure, out_dir):
    """Run the strategy-diffusion grid sweep."""

    def go():
        out = _out_root(out_dir)
        if grid_name == "coarse":
            d_vals = abm_mod.default_discovery_rates(13)
            td_vals = abm_mod.default_transmission_difficulties(7)
        else:
            d_vals, td_vals = None, None
        results = {}
        for ptype in ("human_only", "mixed"):
            for mode in ("selective", "random"):
                res = abm_mod.run_grid(
                    abm_mod.AbmConfig(), population_type=ptype, selection_mode=mode,
                    discovery_rates=d_vals, transmission_difficulties=td_vals,
                    replications=reps, master_seed=seed)
                results[(ptype, mode)] = res
                name = f"adoption-{ptype}-{mode}.csv"
                _write_grid_csv(out / name, res, res.mean_adoption())
                _write_grid_csv(out / f"reward-{ptype}-{mode}.csv", res,
                                res.mean_final_reward())
                click.echo(f"{ptype}/{mode}: grid "
                           f"{res.adoption.shape[0]}x{res.adoption.shape[1]}x{reps}")
        if figure == 4:
            lines = []
            for key, res in results.items():
                for td, boundary in abm_mod.adoption_boundary(res):
                    lines.append(json.dumps({
                        "population_type": key[0], "selection_mode": key[1],
                        "transmission_difficulty": round(td, 6),
                        "boundary_difficulty": boundary}, sort_keys=True))
            atomic_write_text(out / "boundaries.ndjson",
                              "".join(l + "\n" for l in lines))
            up = abm_mod.uplift(results[("mixed", "selective")],
                                results[("human_only", "selective")])
            _write_grid_csv(out / "uplift-selective.csv",
                            results[("mixed", "selective")], up)
        _manifest(out, "abm", seed, {"reps": reps, "grid": grid_name,
                                     "figure": figure})

    _run(go)


def _write_grid_csv(path, res, matrix):
    header = "discovery_difficulty," + ",".join(
        f"{td:.6f}" for td in res.transmission_difficulties)
    rows = [header]
    for i, dd in enumerate(res.discovery_difficulty):
        rows.append(f"{dd:.6f}," + ",".join(f"{v:.6f}" for v in matrix[i]))
    atomic_write_text(path, "\n".join(rows) + "\n")


@main.command()
@click.option("--pools", "pools_dir", required=True)
@click.option("--populations", type=int, default=30, show_default=True)
@click.option("--scripted-fidelity", "fidelity", type=float, default=1.0,
              show_default=True)
@click.option("--checkpoints", "ckpt_dir", default=None,
              help="directory of checkpoint-*.npz machine policies; "
                   "omit to use the rule-based optimal player")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", "out_dir", default=None)
def experiment(pools_dir, populations, fidelity, ckpt_dir, seed, out_dir):
    """Run scripted transmission experiments, half mixed and half human-only."""

    def go():
        out = _out_root(out_dir)
        pool = read_pool(Path(pools_dir) / "experiment.ndjson")
        machines = _machine_policies(ckpt_dir)
        store = ExperimentStore(pool, machines, root=out / "data",
                                master_seed=seed)
        summary = []
        for k in range(populations):
            cond = "human_machine" if k < (populations + 1) // 2 else "human_only"
            run = store.create_population(PopulationSpec(condition=cond),
                                          population_id=f"pop-{k:03d}")
            store.scripted_fill(run.population_id, fidelity)
            cls = classify(run)
            summary.append({"population_id": run.population_id,
                            "condition": cond, "label": cls.label,
                            **lineage_stats(run)})
            click.echo(f"{run.population_id} {cond}: {cls.label}")
        atomic_write_text(out / "summary.ndjson", "".join(
            json.dumps(s, sort_keys=True) + "\n" for s in summary))
        _manifest(out, "experiment", seed, {
            "populations": populations, "fidelity": fidelity,
            "checkpoints": ckpt_dir})

    _run(go)


def _machine_policies(ckpt_dir):
    if ckpt_dir is None:
        return [RulePolicy("loss_seeking") for _ in range(3)]
    paths = sorted(Path(ckpt_dir).glob("checkpoint-*.npz"))
    if len(paths) < 3:
        raise InvalidConfig(f"need 3 checkpoints in {ckpt_dir}, found {len(paths)}")
    return [GreedyQPolicy(load_checkpoint(p)[0]) for p in paths[:3]]


@main.command()
@click.option("--in", "in_dir", required=True,
              help="directory of population snapshot JSON files")
@click.option("--export", "export_dir", required=True)
def analyze(in_dir, export_dir):
    """Classify stored populations and write the tidy tables."""

    def go():
        runs = []
        for path in sorted(Path(in_dir).glob("*.json")):
            with open(path, encoding="utf-8") as f:
                runs.append(PopulationRun.from_dict(json.load(f)))
        if not runs:
            raise InvalidConfig(f"no population snapshots in {in_dir}")
        counts = export_tidy(runs, export_dir)
        for run in runs:
            click.echo(f"{run.population_id}: {classify(run).label}")
        click.echo(f"rows: {counts}")
        _manifest(Path(export_dir), "analyze", None, {"inputs": len(runs)})

    _run(go)


@main.command()
@click.option("--pools", "pools_dir", required=True)
@click.option("--checkpoints", "ckpt_dir", default=None)
@click.option("--port", type=int, default=8000, show_default=True)
@click.option("--data", "data_dir", default=None)
@click.option("--seed", type=int, default=0, show_default=True)
def serve(pools_dir, ckpt_dir, port, data_dir, seed):
    """Serve the live session API until interrupted."""

    def go():
        import uvicorn

        from .server import create_app

        pool = read_pool(Path(pools_dir) / "experiment.ndjson")
        store = ExperimentStore(pool, _machine_policies(ckpt_dir),
                                root=data_dir, master_seed=seed)
        uvicorn.run(create_app(store), host="127.0.0.1", port=port,
                    log_level="warning")

    _run(go)


if __name__ == "__main__":
    main()
