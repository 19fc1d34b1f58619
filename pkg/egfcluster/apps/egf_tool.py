#!/usr/bin/env python

import argparse
from concurrent.futures import ProcessPoolExecutor
import logging
from pathlib import Path
import sys

from colorama import Fore
from colorama import Style
import numpy as np
import pandas as pd
from tabulate import tabulate

from egfcluster.cluster import cluster_points
from egfcluster.config import ConfigError
from egfcluster.config import dump_config
from egfcluster.config import field_names
from egfcluster.config import resolve_config
from egfcluster.csv_utils import load_motion
from egfcluster.csv_utils import load_points
from egfcluster.csv_utils import write_csv
from egfcluster.graph import motion_knn_graph
from egfcluster.graph import velocity_knn_graph
from egfcluster.pathint import baseline_collectiveness
from egfcluster.pathint import coefficient_profile
from egfcluster.pathint import set_descriptor
from egfcluster.sdp import init_state
from egfcluster.sdp import run_experiment
from egfcluster.sdp import simulate

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_RUNTIME = 2


def print_table(table):
    print(tabulate(table, headers="keys", tablefmt="psql", showindex=False))


def _experiment(config, n, seed):
    return run_experiment(
        n=n,
        k=config.k,
        box_size=config.box_size,
        speed=config.speed,
        r=config.r,
        eta=config.eta,
        frames=config.frames,
        seed=seed,
        tol=config.tol,
        z_reg=config.z_reg,
    )


def cmd_simulate(config, out=None):
    config.check_particle_k()
    series = _experiment(config, config.n, config.seed)
    table = series.to_frame()
    write_csv(table, out)
    if out is not None:
        gt_vs_proposed, gt_vs_baseline = series.correlations()
        print_table(
            pd.DataFrame(
                {
                    "frames": [len(series)],
                    "gt_vs_baseline": [gt_vs_baseline],
                    "gt_vs_proposed": [gt_vs_proposed],
                }
            )
        )
        print(f"Simulation is saved to {out}")
    return table


def _run_correlations(args):
    config, n, seed = args
    return _experiment(config, n, seed).correlations()


def cmd_table1(config, out=None):
    """Mean ground-truth correlations of both measures for every size in ``table_sizes``.

    Run ``i`` uses seed ``seed + i``; rows are written only after every
    run has finished.
    """
    jobs = [
        (config, n, config.seed + run_index)
        for n in config.table_sizes
        for run_index in range(config.runs)
    ]
    if config.jobs > 1:
        with ProcessPoolExecutor(max_workers=config.jobs) as executor:
            results = list(executor.map(_run_correlations, jobs))
    else:
        results = [_run_correlations(job) for job in jobs]
    results = np.array(results).reshape(len(config.table_sizes), config.runs, 2)
    table = pd.DataFrame(
        {
            "N": list(config.table_sizes),
            "gt_vs_baseline": results[:, :, 1].mean(axis=1),
            "gt_vs_proposed": results[:, :, 0].mean(axis=1),
        }
    )
    write_csv(table, out)
    if out is not None:
        print_table(table)
        print(f"Table is saved to {out}")
    return table


def exemplars_path(out):
    out = Path(out)
    return out.with_name(f"{out.stem}_exemplars{out.suffix or '.csv'}")


def cmd_cluster(points_path, config, out, exemplars_out=None):
    points = load_points(points_path)
    partition, _ = cluster_points(
        points,
        config.target_k,
        k=config.k,
        k0=config.k0,
        bandwidth_scale=config.bandwidth_scale,
        tol=config.tol,
        max_order=config.max_order,
        pair_candidates=config.pair_candidates,
    )
    labels = pd.DataFrame(
        {"point_index": np.arange(points.n), "cluster_id": partition.labels(points.n)}
    )
    exemplars = pd.DataFrame(
        {
            "cluster_id": np.arange(len(partition)),
            "exemplar_index": list(partition.exemplars),
        }
    )
    exemplars_out = exemplars_out or exemplars_path(out)
    write_csv(labels, out)
    write_csv(exemplars, exemplars_out)
    summary = exemplars.assign(size=[len(members) for members in partition.clusters])
    print_table(summary)
    print(f"Labels are saved to {out}, exemplars to {exemplars_out}")
    return labels, exemplars


def cmd_profile(config, out=None):
    """Path-length profile of the velocity graph after ``frames`` simulated frames."""
    config.check_particle_k()
    rng = np.random.default_rng(config.seed)
    state = init_state(config.n, config.box_size, config.speed, config.r, config.eta, rng)
    *_, state = simulate(state, config.frames, rng)
    profile = coefficient_profile(velocity_knn_graph(state, config.k), config.l_max)
    table = pd.DataFrame(
        {
            "l": np.arange(1, config.l_max + 1),
            "component_norm": profile.component_norms,
            "alpha_tilde": profile.alpha_tilde,
        }
    )
    write_csv(table, out)
    if out is not None:
        print(f"Largest component at l = {profile.argmax_l} (K = {config.k})")
        print(f"Profile is saved to {out}")
    return table


def cmd_measure(motion_path, config, out=None, periodic=False):
    positions, velocities = load_motion(motion_path)
    box_size = config.box_size if periodic else None
    g = motion_knn_graph(positions, velocities, config.k, box_size=box_size)
    table = pd.DataFrame(
        {
            "phi_proposed": [set_descriptor(g, config.tol, config.max_order).phi_set],
            "phi_baseline": [baseline_collectiveness(g, config.z_reg)],
        }
    )
    write_csv(table, out)
    if out is not None:
        print_table(table)
    return table


def cmd_config(config, out=None):
    text = dump_config(config)
    if out is None:
        print(text, end="")
    else:
        with open(out, "w") as f:
            f.write(text)
        print(f"Config is saved to {out}")
    return text


class _ArgumentParser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def _common_parser():
    parser = _ArgumentParser(add_help=False)
    parser.add_argument("--config", "-c", default=None, help="Path to yaml config file.")
    parser.add_argument("--out", "-o", default=None, help="Output CSV path.")
    parser.add_argument(
        "--verbose", "-v", action="store_true", help="Enable debug logging."
    )
    group = parser.add_argument_group("run parameters (override the config file)")
    for name in field_names():
        group.add_argument(
            f"--{name.replace('_', '-')}", dest=name, default=None, metavar="VALUE"
        )
    return parser


def build_parser():
    common = _common_parser()
    parser = _ArgumentParser(
        description="Path-integral collectiveness and agglomerative clustering."
    )
    subparsers = parser.add_subparsers(dest="command")

    parser_simulate = subparsers.add_parser(
        "simulate", parents=[common], help="Simulate SDP and measure every frame."
    )
    parser_simulate.set_defaults(func=lambda args, config: cmd_simulate(config, args.out))

    parser_table1 = subparsers.add_parser(
        "table1", parents=[common], help="Mean correlations over repeated runs."
    )
    parser_table1.set_defaults(func=lambda args, config: cmd_table1(config, args.out))

    parser_cluster = subparsers.add_parser(
        "cluster", parents=[common], help="Cluster points from a CSV file."
    )
    parser_cluster.add_argument("points", type=str, help="Path to point CSV.")
    parser_cluster.add_argument(
        "--exemplars-out", default=None, help="Output path for exemplars."
    )
    parser_cluster.set_defaults(
        func=lambda args, config: cmd_cluster(
            args.points,
            config,
            args.out or "clusters.csv",
            exemplars_out=args.exemplars_out,
        )
    )

    parser_profile = subparsers.add_parser(
        "profile", parents=[common], help="Path-length profile of a steady state."
    )
    parser_profile.set_defaults(func=lambda args, config: cmd_profile(config, args.out))

    parser_measure = subparsers.add_parser(
        "measure", parents=[common], help="Collectiveness of one motion snapshot."
    )
    parser_measure.add_argument("motion", type=str, help="CSV with x,y,vx,vy columns.")
    parser_measure.add_argument(
        "--periodic", action="store_true", help="Use the periodic box of size box_size."
    )
    parser_measure.set_defaults(
        func=lambda args, config: cmd_measure(
            args.motion, config, args.out, periodic=args.periodic
        )
    )

    parser_config = subparsers.add_parser(
        "config", parents=[common], help="Print the resolved configuration."
    )
    parser_config.set_defaults(func=lambda args, config: cmd_config(config, args.out))
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if not hasattr(args, "func"):
            parser.print_help()
            return EXIT_USAGE
        if args.verbose:
            logging.basicConfig(level=logging.DEBUG)
        overrides = {name: getattr(args, name) for name in field_names()}
        config = resolve_config(args.config, overrides)
    except ConfigError as e:
        print(f"{Fore.RED}Error: {e}{Style.RESET_ALL}", file=sys.stderr)
        return EXIT_USAGE
    try:
        args.func(args, config)
    except ConfigError as e:
        print(f"{Fore.RED}Error: {e}{Style.RESET_ALL}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as e:
        print(f"{Fore.RED}{type(e).__name__}: {e}{Style.RESET_ALL}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
