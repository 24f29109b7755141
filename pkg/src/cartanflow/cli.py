"""Command-line pipeline: gen-data, preprocess, train, eval, sample,
export-csv.

Config files are JSON; every CLI flag overrides its config key. Exit codes
are a stable contract: 0 success, 2 usage/config error, 3 runtime failure.
Every command writes or extends a JSON manifest next to its outputs so a full
pipeline can be replayed bit-identically from the manifests alone.
"""

from __future__ import annotations

import os

_threads = os.environ.get("CARTANFLOW_THREADS")
if _threads:
    # cap BLAS pools before numpy spins them up
    for _var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        os.environ.setdefault(_var, _threads)

import argparse
import json
import sys
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import dataio
from .cnf import IntegratorConfig, default_divergence_mode, generate_samples, nll
from .energy import (
    DWParams,
    LJParams,
    McmcConfig,
    dw_energy,
    dw_init,
    lj_energy,
    lj_init,
    metropolis_sample,
)
from .fm import NoiseSpec, NonFiniteLossError, TrainConfig, train
from .linalg import NoConvergenceError
from .nn import VectorFieldModel
from .symspace import (
    SpaceDescriptor,
    default_checkerboard_scale,
    preprocess_batch,
    sample_checkerboard,
    stereographic_project,
    wrap_checkerboard,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUNTIME = 3

POTENTIAL_SPACES = {
    "dw4": ("grassmann", 2, 4),
    "lj13": ("grassmann", 3, 13),
    "lj55": ("grassmann", 3, 55),
    "checkerboard": ("sphere", 2, None),
}

GEN_DEFAULTS = {
    "walkers": 100,
    "burnin": 2000,
    "samples": 100,
    "thinning": 10,
    "seed": 0,
    "out": ".",
    "name": None,
    "proposal_std": None,  # per-potential default below
    "potential_params": {},
}

PROPOSAL_DEFAULTS = {"dw4": 0.25, "lj13": 0.12, "lj55": 0.08}


class ConfigError(Exception):
    """Bad or missing configuration; maps to exit code 2."""


def _load_config(path):
    if path is None:
        return {}
    try:
        with open(path, "r", encoding="utf-8") as fh:
            cfg = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(cfg, dict):
        raise ConfigError(f"config {path} must be a JSON object")
    return cfg


def _effective(defaults, config, args, keys):
    """defaults < config file < explicit CLI flags."""
    out = dict(defaults)
    for key, value in config.items():
        if key not in defaults and key not in keys:
            raise ConfigError(f"unknown config key: {key}")
        out[key] = value
    for key in keys:
        value = getattr(args, key, None)
        if value is not None:
            out[key] = value
    return out


def _require(cfg, key):
    if cfg.get(key) is None:
        raise ConfigError(f"missing required key: {key}")
    return cfg[key]


def _parse_space(text):
    try:
        kind, _, rest = text.partition(":")
        if kind == "sphere":
            return SpaceDescriptor.sphere(int(rest))
        if kind == "grassmann":
            k, n = rest.split(",")
            return SpaceDescriptor.grassmann(int(k), int(n))
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"cannot parse space {text!r}: {exc}") from exc
    raise ConfigError(f"unknown space kind in {text!r}")


def _space_for_potential(potential):
    kind, k, n = POTENTIAL_SPACES[potential]
    if kind == "sphere":
        return SpaceDescriptor.sphere(k)
    return SpaceDescriptor.grassmann(k, n)


def _parse_kv_params(pairs):
    out = {}
    for pair in pairs or []:
        key, sep, value = pair.partition("=")
        if not sep:
            raise ConfigError(f"--potential-param expects KEY=VALUE, got {pair!r}")
        out[key] = float(value)
    return out


# -------------------------------------------------------------------- gen-data

def cmd_gen_data(args):
    config = _load_config(args.config)
    cfg = _effective(GEN_DEFAULTS, config, args,
                     ["potential", "walkers", "burnin", "samples", "thinning",
                      "seed", "out", "name", "proposal_std"])
    potential = _require(cfg, "potential")
    if potential not in POTENTIAL_SPACES:
        raise ConfigError(f"unknown potential {potential!r}; "
                          f"choose from {sorted(POTENTIAL_SPACES)}")
    params_over = dict(cfg.get("potential_params") or {})
    params_over.update(_parse_kv_params(getattr(args, "potential_param", None)))

    out_dir = Path(cfg["out"])
    out_dir.mkdir(parents=True, exist_ok=True)
    name = cfg["name"] or potential
    data_path = out_dir / f"{name}.cflw"
    manifest = dataio.new_manifest()

    if potential == "checkerboard":
        rows = sample_checkerboard(int(cfg["samples"]), seed=int(cfg["seed"]))
        dataio.write_dataset(data_path, rows)
        dataio.append_stage(
            manifest, "gen-data",
            potential=potential, seed=int(cfg["seed"]),
            rows=int(rows.shape[0]), cols=2,
        )
        dataio.write_manifest(dataio.sidecar_path(data_path), manifest)
        print(f"wrote {rows.shape[0]} checkerboard samples to {data_path}")
        return EXIT_OK

    if potential == "dw4":
        params = DWParams(**params_over) if params_over else DWParams()
        n_particles, dim = 4, 2
        energy = lambda x: dw_energy(x, params, n_particles)  # noqa: E731
        init = dw_init(n_particles, params.d0)
    else:
        params = LJParams(**params_over) if params_over else LJParams()
        n_particles = 13 if potential == "lj13" else 55
        dim = 3
        energy = lambda x: lj_energy(x, params, n_particles)  # noqa: E731
        init = lj_init(n_particles, params.r_m)

    proposal = cfg["proposal_std"]
    if proposal is None:
        proposal = PROPOSAL_DEFAULTS[potential]
    mcmc = McmcConfig(
        walkers=int(cfg["walkers"]),
        burnin_steps=int(cfg["burnin"]),
        samples_per_walker=int(cfg["samples"]),
        proposal_std=float(proposal),
        seed=int(cfg["seed"]),
        thinning=int(cfg["thinning"]),
    )
    samples, rate = metropolis_sample(energy, n_particles * dim, mcmc, init)
    dataio.write_dataset(data_path, samples)
    dataio.append_stage(
        manifest, "gen-data",
        potential=potential,
        potential_params=asdict(params),
        pair_convention="unordered pairs i<j, printed-sign formulas",
        mcmc=asdict(mcmc),
        rows=int(samples.shape[0]),
        cols=int(samples.shape[1]),
        acceptance_rate=rate,
    )
    dataio.write_manifest(dataio.sidecar_path(data_path), manifest)
    print(f"wrote {samples.shape[0]} rows to {data_path} "
          f"(acceptance rate {rate:.3f})")
    return EXIT_OK


# ------------------------------------------------------------------ preprocess

PREPROCESS_DEFAULTS = {"out": ".", "name": None, "space": None, "scale": None,
                       "max_drop_fraction": 0.01}


def cmd_preprocess(args):
    config = _load_config(args.config)
    cfg = _effective(PREPROCESS_DEFAULTS, config, args,
                     ["dataset", "out", "name", "space", "scale"])
    data_path = Path(_require(cfg, "dataset"))
    raw = dataio.read_dataset(data_path)
    try:
        manifest = dataio.read_manifest(dataio.sidecar_path(data_path))
    except OSError:
        manifest = dataio.new_manifest()
    gen_stage = dataio.manifest_stage(manifest, "gen-data") or {}
    potential = gen_stage.get("potential")

    if cfg["space"] is not None:
        space = _parse_space(cfg["space"])
    elif potential in POTENTIAL_SPACES:
        space = _space_for_potential(potential)
    else:
        raise ConfigError("missing required key: space (no potential in manifest)")

    out_dir = Path(cfg["out"])
    out_dir.mkdir(parents=True, exist_ok=True)
    name = cfg["name"] or f"{data_path.stem}_pcoords"
    out_path = out_dir / f"{name}.cflw"

    if space.kind == "sphere":
        if raw.shape[1] != 2 or space.n != 2:
            raise ConfigError("checkerboard wrapping expects 2-d samples on sphere:2")
        scale = float(cfg["scale"]) if cfg["scale"] is not None \
            else default_checkerboard_scale(raw)
        coords = wrap_checkerboard(raw, scale)
        dataio.write_dataset(out_path, coords)
        dataio.append_stage(
            manifest, "preprocess",
            space=space.to_json(), input=str(data_path),
            wrap_scale=scale, rows=int(coords.shape[0]),
            p_dim=space.p_dim,
            flattening="natural order of the tangent vector",
        )
        dataio.write_manifest(dataio.sidecar_path(out_path), manifest)
        print(f"wrote {coords.shape[0]} p-coordinate rows to {out_path} "
              f"(scale {scale:.6f})")
        return EXIT_OK

    expected_cols = space.n * space.k
    if raw.shape[1] != expected_cols:
        raise ConfigError(f"dataset has {raw.shape[1]} columns, expected "
                          f"{expected_cols} for {space.kind}({space.k},{space.n})")
    coords, stats = preprocess_batch(raw, space)
    drop_fraction = stats.dropped / max(stats.total, 1)
    for idx in stats.dropped_indices:
        print(f"warning: dropped rank-deficient row {idx}", file=sys.stderr)
    dataio.write_dataset(out_path, coords)
    dataio.append_stage(
        manifest, "preprocess",
        space=space.to_json(), input=str(data_path),
        rows=int(coords.shape[0]),
        p_dim=space.p_dim,
        dropped_rows=stats.dropped,
        dropped_indices=list(stats.dropped_indices),
        sign_flips=stats.sign_flips,
        span_discrepancy={
            "mean": stats.span_discrepancy_mean,
            "max": stats.span_discrepancy_max,
            "checked": stats.span_checked,
        },
        flattening="row-major over the k x (n-k) block",
    )
    dataio.write_manifest(dataio.sidecar_path(out_path), manifest)
    print(f"wrote {coords.shape[0]} p-coordinate rows to {out_path} "
          f"({stats.dropped} dropped, {stats.sign_flips} sign flips)")
    if drop_fraction > float(cfg["max_drop_fraction"]):
        print(f"error: dropped {drop_fraction:.1%} of rows", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


# ----------------------------------------------------------------------- train

TRAIN_DEFAULTS = {
    "steps": 50_000, "batch_size": 512, "eval_every": 100,
    "lr": 1e-4, "weight_decay": 1e-5, "seed": 0, "t_epsilon": 1e-3,
    "sigma": 1.0, "noise_seed": None, "arch": "auto",
    "depth": None, "width": None, "gate_width": 64, "activation": "tanh",
    "space": None, "out": ".", "name": "model", "resume": None,
}


def _build_model(arch, space, cfg, seed):
    if arch == "auto":
        arch = "mlp" if space.kind == "sphere" else "concatsquash"
    if arch == "mlp":
        depth = cfg["depth"] if cfg["depth"] is not None else 3
        width = cfg["width"] if cfg["width"] is not None else 256
        return VectorFieldModel.mlp(space.p_dim, depth=int(depth), width=int(width),
                                    activation=cfg["activation"], seed=seed)
    if arch == "concatsquash":
        depth = cfg["depth"] if cfg["depth"] is not None else 3
        width = cfg["width"] if cfg["width"] is not None else 512
        return VectorFieldModel.concat_squash(
            space.p_dim, depth=int(depth), width=int(width),
            gate_width=int(cfg["gate_width"]), activation=cfg["activation"],
            seed=seed)
    raise ConfigError(f"unknown architecture {arch!r}")


def cmd_train(args):
    config = _load_config(args.config)
    cfg = _effective(TRAIN_DEFAULTS, config, args,
                     ["dataset", "steps", "batch_size", "eval_every", "lr",
                      "weight_decay", "seed", "t_epsilon", "sigma", "noise_seed",
                      "arch", "depth", "width", "gate_width", "space", "out",
                      "name", "resume"])
    data_path = Path(_require(cfg, "dataset"))
    dataset = dataio.read_dataset(data_path)
    try:
        manifest = dataio.read_manifest(dataio.sidecar_path(data_path))
    except OSError:
        manifest = dataio.new_manifest()
    pre_stage = dataio.manifest_stage(manifest, "preprocess") or {}

    if cfg["space"] is not None:
        space = _parse_space(cfg["space"])
    elif "space" in pre_stage:
        space = SpaceDescriptor.from_json(pre_stage["space"])
    else:
        raise ConfigError("missing required key: space (dataset manifest has none)")
    if dataset.shape[1] != space.p_dim:
        raise ConfigError(f"dataset has {dataset.shape[1]} columns but "
                          f"{space.kind} expects p_dim {space.p_dim}")

    seed = int(cfg["seed"])
    noise_seed = int(cfg["noise_seed"]) if cfg["noise_seed"] is not None else seed + 1
    noise = NoiseSpec(dim=space.p_dim, sigma=float(cfg["sigma"]), seed=noise_seed)
    train_cfg = TrainConfig(
        batch_size=int(cfg["batch_size"]), steps=int(cfg["steps"]),
        eval_every=int(cfg["eval_every"]), lr=float(cfg["lr"]),
        weight_decay=float(cfg["weight_decay"]), seed=seed,
        t_epsilon=float(cfg["t_epsilon"]),
    )

    start_step = 0
    if cfg["resume"]:
        model, header = dataio.load_checkpoint(cfg["resume"])
        start_step = int(header.get("step", 0))
        if model.input_dim != space.p_dim:
            raise ConfigError("resume checkpoint dimension mismatch")
    else:
        model = _build_model(cfg["arch"], space, cfg, seed)

    out_dir = Path(cfg["out"])
    out_dir.mkdir(parents=True, exist_ok=True)
    name = cfg["name"]
    ckpt_path = out_dir / f"{name}.ckpt"
    extra = {
        "space": space.to_json(),
        "noise": {"dim": noise.dim, "sigma": noise.sigma, "seed": noise.seed},
        "train": {
            "steps": train_cfg.steps, "batch_size": train_cfg.batch_size,
            "lr": train_cfg.lr, "weight_decay": train_cfg.weight_decay,
            "seed": train_cfg.seed, "t_epsilon": train_cfg.t_epsilon,
            "eval_every": train_cfg.eval_every,
        },
        "dataset": data_path.name,  # basename only: checkpoints hash identically
        "dataset_rows": int(dataset.shape[0]),
    }

    try:
        history = train(model, dataset, noise, train_cfg, start_step=start_step)
    except NonFiniteLossError as exc:
        diag = out_dir / f"{name}_diagnostic.ckpt"
        dataio.save_checkpoint(diag, model, step=exc.step, extra=extra)
        print(f"error: {exc}; diagnostic checkpoint at {diag}", file=sys.stderr)
        return EXIT_RUNTIME

    dataio.save_checkpoint(ckpt_path, model, step=train_cfg.steps, extra=extra)
    loss_path = out_dir / f"{name}_loss.csv"
    dataio.write_csv(loss_path, np.array(history, dtype=float),
                     header=["step", "loss"])
    dataio.append_stage(
        manifest, "train",
        checkpoint=str(ckpt_path), loss_csv=str(loss_path),
        architecture=model.header(), **extra,
        final_loss=history[-1][1] if history else None,
    )
    dataio.write_manifest(out_dir / f"{name}.json", manifest)
    final = f"{history[-1][1]:.6f}" if history else "n/a"
    print(f"trained {train_cfg.steps - start_step} steps; final loss {final}; "
          f"checkpoint {ckpt_path}")
    return EXIT_OK


# ------------------------------------------------------------------------ eval

EVAL_DEFAULTS = {"chunks": 10, "steps": 100, "divergence": "auto", "probes": 32,
                 "seed": 0, "sigma": None, "report": None, "out": "."}


def cmd_eval(args):
    config = _load_config(args.config)
    cfg = _effective(EVAL_DEFAULTS, config, args,
                     ["checkpoint", "testset", "chunks", "steps", "divergence",
                      "probes", "seed", "sigma", "report", "out"])
    model, header = dataio.load_checkpoint(_require(cfg, "checkpoint"))
    testset = dataio.read_dataset(_require(cfg, "testset"))
    if testset.shape[1] != model.input_dim:
        raise ConfigError(f"testset has {testset.shape[1]} columns, "
                          f"model expects {model.input_dim}")

    noise_header = header.get("noise", {})
    sigma = float(cfg["sigma"]) if cfg["sigma"] is not None \
        else float(noise_header.get("sigma", 1.0))
    noise = NoiseSpec(dim=model.input_dim, sigma=sigma,
                      seed=int(noise_header.get("seed", 0)))
    t_eps = float(header.get("train", {}).get("t_epsilon", 1e-3))
    mode = cfg["divergence"]
    if mode == "auto":
        mode = default_divergence_mode(model.input_dim)
    icfg = IntegratorConfig(steps=int(cfg["steps"]), t_start=0.0,
                            t_end=1.0 - t_eps, divergence_mode=mode,
                            probes=int(cfg["probes"]), seed=int(cfg["seed"]))
    report = nll(model, testset, noise, icfg, chunks=int(cfg["chunks"]))
    report["checkpoint"] = str(cfg["checkpoint"])
    report["testset"] = str(cfg["testset"])

    out_dir = Path(cfg["out"])
    out_dir.mkdir(parents=True, exist_ok=True)
    report_path = Path(cfg["report"]) if cfg["report"] \
        else out_dir / (Path(cfg["checkpoint"]).stem + "_eval.json")
    with open(report_path, "w", encoding="utf-8") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(f"NLL {report['nll_mean']:.4f} +/- {report['nll_std_over_chunks']:.4f} "
          f"({report['chunks']} chunks); report {report_path}")
    return EXIT_OK


# ---------------------------------------------------------------------- sample

SAMPLE_DEFAULTS = {"count": 1000, "steps": 100, "seed": None, "space": None,
                   "out": ".", "name": "samples", "svg": None}


def cmd_sample(args):
    config = _load_config(args.config)
    cfg = _effective(SAMPLE_DEFAULTS, config, args,
                     ["checkpoint", "count", "steps", "seed", "space", "out",
                      "name", "svg"])
    model, header = dataio.load_checkpoint(_require(cfg, "checkpoint"))
    if cfg["space"] is not None:
        space = _parse_space(cfg["space"])
    elif "space" in header:
        space = SpaceDescriptor.from_json(header["space"])
    else:
        raise ConfigError("missing required key: space (checkpoint header has none)")

    noise_header = header.get("noise", {})
    seed = int(cfg["seed"]) if cfg["seed"] is not None \
        else int(noise_header.get("seed", 0))
    noise = NoiseSpec(dim=space.p_dim, sigma=float(noise_header.get("sigma", 1.0)),
                      seed=seed)
    t_eps = float(header.get("train", {}).get("t_epsilon", 1e-3))
    icfg = IntegratorConfig(steps=int(cfg["steps"]), t_start=0.0, t_end=1.0 - t_eps)
    endpoints, manifold = generate_samples(model, noise, int(cfg["count"]),
                                           icfg, space)

    out_dir = Path(cfg["out"])
    out_dir.mkdir(parents=True, exist_ok=True)
    name = cfg["name"]
    p_path = out_dir / f"{name}_pcoords.cflw"
    m_path = out_dir / f"{name}_manifold.cflw"
    dataio.write_dataset(p_path, endpoints)
    point_size = int(np.prod(manifold.shape[1:]))  # reshape(-1) fails on 0 rows
    dataio.write_dataset(m_path, manifold.reshape(manifold.shape[0], point_size))

    skipped_at_pole = 0
    svg_path = cfg["svg"]
    if svg_path:
        if not (space.kind == "sphere" and space.n == 2):
            raise ConfigError("--svg is only available for sphere:2")
        keep = np.abs(1.0 + manifold[:, 2]) >= 1e-12
        skipped_at_pole = int(np.sum(~keep))
        projected = stereographic_project(manifold[keep]) if np.any(keep) \
            else np.zeros((0, 2))
        dataio.write_scatter_svg(svg_path, projected)
        if skipped_at_pole:
            print(f"skipped {skipped_at_pole} points at the projection pole")

    manifest = dataio.new_manifest()
    dataio.append_stage(
        manifest, "sample",
        checkpoint=str(cfg["checkpoint"]), space=space.to_json(),
        count=int(cfg["count"]), steps=int(cfg["steps"]), seed=seed,
        skipped_at_pole=skipped_at_pole,
        pcoords=str(p_path), manifold=str(m_path),
        svg=str(svg_path) if svg_path else None,
    )
    dataio.write_manifest(dataio.sidecar_path(p_path), manifest)
    print(f"wrote {endpoints.shape[0]} samples to {p_path} and {m_path}")
    return EXIT_OK


# ------------------------------------------------------------------ export-csv

def cmd_export_csv(args):
    data_path = Path(_require(vars(args), "dataset"))
    array = dataio.read_dataset(data_path)
    out = Path(args.out) if args.out else data_path.with_suffix(".csv")
    dataio.write_csv(out, array)
    print(f"wrote {array.shape[0]} rows to {out}")
    return EXIT_OK


# ------------------------------------------------------------------------ main

def build_parser():
    parser = argparse.ArgumentParser(prog="cartanflow",
                                     description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-data", help="generate raw datasets (MCMC or checkerboard)")
    p.add_argument("--config")
    p.add_argument("--potential", choices=sorted(POTENTIAL_SPACES))
    p.add_argument("--walkers", type=int)
    p.add_argument("--burnin", type=int)
    p.add_argument("--samples", type=int)
    p.add_argument("--thinning", type=int)
    p.add_argument("--proposal-std", dest="proposal_std", type=float)
    p.add_argument("--potential-param", action="append", metavar="KEY=VALUE")
    p.add_argument("--seed", type=int)
    p.add_argument("--out")
    p.add_argument("--name")
    p.set_defaults(func=cmd_gen_data)

    p = sub.add_parser("preprocess", help="map raw data to p-coordinates")
    p.add_argument("--config")
    p.add_argument("--dataset")
    p.add_argument("--space", help="sphere:N or grassmann:K,N")
    p.add_argument("--scale", type=float, help="checkerboard wrap scale")
    p.add_argument("--out")
    p.add_argument("--name")
    p.set_defaults(func=cmd_preprocess)

    p = sub.add_parser("train", help="flow-matching training")
    p.add_argument("--config")
    p.add_argument("--dataset")
    p.add_argument("--space")
    p.add_argument("--steps", type=int)
    p.add_argument("--batch-size", dest="batch_size", type=int)
    p.add_argument("--eval-every", dest="eval_every", type=int)
    p.add_argument("--lr", type=float)
    p.add_argument("--weight-decay", dest="weight_decay", type=float)
    p.add_argument("--sigma", type=float)
    p.add_argument("--noise-seed", dest="noise_seed", type=int)
    p.add_argument("--t-epsilon", dest="t_epsilon", type=float)
    p.add_argument("--arch", choices=["auto", "mlp", "concatsquash"])
    p.add_argument("--depth", type=int)
    p.add_argument("--width", type=int)
    p.add_argument("--gate-width", dest="gate_width", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--resume", help="checkpoint to continue from")
    p.add_argument("--out")
    p.add_argument("--name")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="negative log likelihood on a test set")
    p.add_argument("--config")
    p.add_argument("--checkpoint")
    p.add_argument("--testset")
    p.add_argument("--chunks", type=int)
    p.add_argument("--steps", type=int)
    p.add_argument("--divergence", choices=["auto", "exact", "hutchinson"])
    p.add_argument("--probes", type=int)
    p.add_argument("--sigma", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--report")
    p.add_argument("--out")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("sample", help="draw samples and map them to the manifold")
    p.add_argument("--config")
    p.add_argument("--checkpoint")
    p.add_argument("--count", type=int)
    p.add_argument("--steps", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--space")
    p.add_argument("--svg", help="scatter plot of stereographic projection (sphere:2)")
    p.add_argument("--out")
    p.add_argument("--name")
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("export-csv", help="convert a CFLW dataset to CSV")
    p.add_argument("--dataset", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_export_csv)

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (dataio.FormatError, NoConvergenceError, OSError, ValueError) as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
