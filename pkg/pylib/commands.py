# -*- coding: utf-8 -*-
# This software is under the MIT License

"""Command-line front end of the C tuning tools."""

import json
import logging
import os
import sys
from dataclasses import asdict, dataclass, field, replace
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

from .baselines import GridSpec
from .cv_driver import (
    SUMMARY_HEADER,
    TuneResult,
    load_classifier,
    run_compare,
    run_grid,
    run_sncv,
    test_error,
    write_classifier,
    write_report,
    write_summary,
    write_trace,
)
from .dataio import DatasetError, parse_libsvm
from .jacobian import JacobianMode
from .newton_solver import TRACE_HEADER, SolverConfig, SolverError
from .sys_utils import (
    DEFAULT_SEED,
    VERSION,
    dataset_key,
    fmt_num,
    format_table,
    lookup_sizes,
    normpath,
    read_json,
    setup_logging,
    to_jsonable,
    write_csv,
    write_json,
)

logger = logging.getLogger(__name__)

# Output file names inside --out
SUMMARY_FILE: str = 'summary.csv'
REPORT_FILE: str = 'report.json'
TRACE_FILE: str = 'trace.csv'
GRID_FILE: str = 'grid.csv'
CLASSIFIER_FILE: str = 'classifier.json'
MANIFEST_FILE: str = 'manifest.json'

RUN_COMMANDS: Tuple[str, ...] = ('tune', 'grid', 'trace', 'compare')


@dataclass(frozen=True)
class RunManifest:
    """Everything needed to repeat a run."""

    command: str
    data: str
    folds: int
    train_size: int
    seed: int
    out: str
    format: str = 'csv'
    solver: Dict[str, Any] = field(default_factory=dict)
    grid: Optional[List[float]] = None
    workers: int = 1
    version: str = VERSION

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    @classmethod
    def load(cls, path: str) -> 'RunManifest':
        if not os.path.isfile(path):
            raise FileNotFoundError(f'Can not find manifest file "{path}"')
        data = read_json(path)
        if not isinstance(data, dict) or data.get('command') not in RUN_COMMANDS:
            raise ValueError(f'Bad manifest file "{path}"')
        try:
            return cls(**data)
        except TypeError as e:
            raise ValueError(f'Bad manifest file "{path}": {e}') from e

    def solver_config(self) -> SolverConfig:
        return SolverConfig.from_dict(self.solver)

    def grid_spec(self) -> Optional[GridSpec]:
        return None if self.grid is None else GridSpec(tuple(self.grid))


class SvcTuneCmd:
    """Select the SVC regularization parameter by cross-validation."""

    EOK: int = 0
    EFAIL: int = 1
    ENOCONV: int = 2
    EINTERRUPT: int = 254

    def __init__(self, *, cli_mode: bool = False) -> None:
        self.cli_mode: bool = cli_mode

    def check(
        self,
        status: int,
        message: Optional[Union[str, Exception]] = None,
        silence: bool = False,
    ) -> int:
        if status == 0:
            if message is not None and not silence:
                print(message, file=sys.stdout)
            return status

        if self.cli_mode:
            if message is not None and not silence:
                print(f'[ERROR] {message}', file=sys.stderr)
        else:
            if isinstance(message, Exception):
                raise message
            elif message is not None:
                raise Exception(message)
        return status

    @staticmethod
    def resolve_train_size(data: str, train_size: Optional[int]) -> int:
        if train_size is not None:
            return train_size
        sizes = lookup_sizes(data)
        if sizes is None:
            raise ValueError(
                f'--train-size is required for "{dataset_key(data)}" '
                '(not a known benchmark dataset)'
            )
        return sizes[0]

    @staticmethod
    def build_config(
        config: Optional[str] = None, **overrides: Any
    ) -> SolverConfig:
        """Defaults, then the `[solver]` table of `config`, then `overrides`."""
        cfg = SolverConfig.from_toml(config) if config else SolverConfig()
        return cfg.replace(**overrides)

    def _emit(self, fmt: str, results: Sequence[TuneResult]) -> None:
        if fmt == 'json':
            data = [r.to_dict() for r in results]
            print(json.dumps(to_jsonable(data), indent=2, sort_keys=True))
        else:
            print(
                format_table(
                    SUMMARY_HEADER,
                    [r.summary_row() for r in results],
                )
            )

    def _write_manifest(self, manifest: RunManifest) -> None:
        write_json(os.path.join(manifest.out, MANIFEST_FILE), manifest.to_dict())

    def run(self, manifest: RunManifest) -> int:
        """Execute a run described by a manifest."""
        try:
            cfg = manifest.solver_config()
            grid = manifest.grid_spec()
            ds = parse_libsvm(manifest.data)
            ds_name = dataset_key(manifest.data)
            if ds.name != ds_name:
                ds = replace(ds, name=ds_name)
            logger.info(f'Read {len(ds)} samples with {ds.n_features} features')
        except (OSError, ValueError) as e:
            return self.check(self.EFAIL, e)

        out = manifest.out
        args = (ds, manifest.folds, manifest.train_size, manifest.seed)
        try:
            if manifest.command == 'grid':
                results = [run_grid(*args, grid=grid, workers=manifest.workers)]
                rows = results[0].grid.table()
                write_csv(
                    os.path.join(out, GRID_FILE),
                    ('C', 'E_CV', 'best'),
                    rows,
                )
                if manifest.format != 'json':
                    print(format_table(('C', 'E_CV', 'best'), rows))
            elif manifest.command == 'compare':
                results = run_compare(*args, cfg=cfg, grid=grid, workers=manifest.workers)
            else:
                results = [run_sncv(*args, cfg=cfg)]
        except DatasetError as e:
            return self.check(self.EFAIL, e)
        except SolverError as e:
            self._write_manifest(manifest)
            return self.check(self.ENOCONV, e)

        if manifest.command == 'trace':
            report = results[0].solve_report
            write_trace(os.path.join(out, TRACE_FILE), report)
            if manifest.format == 'json':
                rows = [row._asdict() for row in report.trace_rows()]
                print(json.dumps(to_jsonable(rows), indent=2, sort_keys=True))
            else:
                print(format_table(TRACE_HEADER, report.trace_rows()))
        else:
            write_summary(os.path.join(out, SUMMARY_FILE), results)
            write_report(os.path.join(out, REPORT_FILE), results)
            if manifest.command in ('tune', 'grid'):
                write_classifier(
                    os.path.join(out, CLASSIFIER_FILE),
                    results[0],
                    {'dataset': ds.name, 'folds': manifest.folds, 'seed': manifest.seed},
                )
            if manifest.command == 'tune':
                write_trace(os.path.join(out, TRACE_FILE), results[0].solve_report)
            self._emit(manifest.format, results)
        self._write_manifest(manifest)
        logger.info(f'Wrote results to {normpath(out)}')

        if not all(r.converged for r in results):
            return self.check(self.ENOCONV, 'the smoothing Newton method did not converge')
        return self.EOK

    def run_command(
        self,
        command: str,
        data: str,
        folds: int = 3,
        train_size: Optional[int] = None,
        seed: int = DEFAULT_SEED,
        out: str = 'out',
        fmt: str = 'csv',
        config: Optional[str] = None,
        grid: Optional[str] = None,
        workers: int = 1,
        **overrides: Any,
    ) -> int:
        """Run `tune`, `grid`, `trace` or `compare` from command-line values."""
        try:
            cfg = self.build_config(config, **overrides)
            spec = GridSpec.parse(grid) if grid else None
            manifest = RunManifest(
                command=command,
                data=normpath(data),
                folds=folds,
                train_size=self.resolve_train_size(data, train_size),
                seed=seed,
                out=normpath(out),
                format=fmt,
                solver=cfg.to_dict(),
                grid=None if spec is None else list(spec.values),
                workers=workers,
            )
        except (OSError, ValueError) as e:
            return self.check(self.EFAIL, e)
        return self.run(manifest)

    def rerun(self, manifest_path: str) -> int:
        try:
            manifest = RunManifest.load(manifest_path)
        except (OSError, ValueError) as e:
            return self.check(self.EFAIL, e)
        if manifest.version != VERSION:
            logger.warning(
                f'Manifest was written by version {manifest.version}, running {VERSION}'
            )
        return self.run(manifest)

    def eval(self, classifier: str, data: str, fmt: str = 'csv') -> int:
        """Print the test error of a saved classifier on a LIBSVM file."""
        try:
            C_hat, w_hat, metadata = load_classifier(classifier)
            ds = parse_libsvm(data, n_features=int(w_hat.shape[0]))
            E_t = test_error(w_hat, ds.X, ds.y)
        except (OSError, ValueError) as e:
            return self.check(self.EFAIL, e)
        if fmt == 'json':
            print(json.dumps({'C_hat': C_hat, 'E_t': E_t, 'samples': len(ds)}, sort_keys=True))
        else:
            print(f'E_t = {fmt_num(E_t)}% on {len(ds)} samples (C_hat = {fmt_num(C_hat)})')
        return self.EOK

    @classmethod
    def main(cls, args: Optional[List[str]] = None) -> int:
        """Main CLI entrypoint for SvcTuneCmd."""
        args = args if args is not None else sys.argv[1:]
        try:
            from argparse import ArgumentParser, RawTextHelpFormatter

            parser = ArgumentParser(
                prog='svctune',
                formatter_class=RawTextHelpFormatter,
                description='Bilevel cross-validation for the SVC parameter C',
            )
            parser.add_argument('--version', action='version', version=VERSION)
            parser.add_argument(
                '--manifest',
                default=None,
                help='Re-run the command recorded in a manifest.json',
            )
            parser.add_argument(
                '-v', '--verbose', action='store_true', help='Log every iteration'
            )
            parser.add_argument(
                '-q', '--quiet', action='store_true', help='Only log errors'
            )
            subparsers = parser.add_subparsers(dest='command')

            def add_run_arguments(p: ArgumentParser, solver: bool = True) -> None:
                p.add_argument('--data', required=True, help='LIBSVM dataset file')
                p.add_argument(
                    '--folds', type=int, default=3, help='Number of folds T (default: 3)'
                )
                p.add_argument(
                    '--train-size',
                    type=int,
                    default=None,
                    dest='train_size',
                    help='CV pool size l1 (default: looked up by dataset name)',
                )
                p.add_argument(
                    '--seed',
                    type=int,
                    default=DEFAULT_SEED,
                    help=f'Split seed (default: {DEFAULT_SEED})',
                )
                p.add_argument('--out', default='out', help='Output directory')
                p.add_argument(
                    '--format',
                    choices=('csv', 'json'),
                    default='csv',
                    dest='fmt',
                    help='Format of the results printed to stdout',
                )
                if solver:
                    p.add_argument(
                        '--config', default=None, help='TOML file with a [solver] table'
                    )
                    p.add_argument('--tol', type=float, default=None, help='Stop at |Ê| <= tol')
                    p.add_argument(
                        '--max-outer',
                        type=int,
                        default=None,
                        dest='max_outer',
                        help='Outer iteration limit',
                    )
                    p.add_argument(
                        '--jacobian',
                        choices=[m.value for m in JacobianMode],
                        default=None,
                        dest='jacobian_mode',
                        help='Matrix-free or assembled Jacobian',
                    )
                    p.add_argument('--kappa', type=float, default=None, help='kappa > 0')
                    p.add_argument('--tau', type=float, default=None, help='tau in (0, 1]')

            def add_grid_arguments(p: ArgumentParser) -> None:
                group = p.add_mutually_exclusive_group()
                group.add_argument(
                    '--grid', default=None, help='Comma-separated C values'
                )
                group.add_argument(
                    '--grid-default',
                    action='store_true',
                    dest='grid_default',
                    help='The 18-point grid 0.5e-4 ... 1e4 (default)',
                )
                p.add_argument(
                    '--workers', type=int, default=1, help='Grid points solved at once'
                )

            # 1. tune subparser
            tune_parser = subparsers.add_parser(
                'tune', help='Smoothing Newton cross-validation'
            )
            add_run_arguments(tune_parser)

            # 2. grid subparser
            grid_parser = subparsers.add_parser('grid', help='Grid-search baseline')
            add_run_arguments(grid_parser, solver=False)
            add_grid_arguments(grid_parser)

            # 3. eval subparser
            eval_parser = subparsers.add_parser(
                'eval', help='Test error of a saved classifier'
            )
            eval_parser.add_argument(
                '--classifier', required=True, help='classifier.json from tune/grid'
            )
            eval_parser.add_argument('--data', required=True, help='LIBSVM test file')
            eval_parser.add_argument(
                '--format', choices=('csv', 'json'), default='csv', dest='fmt'
            )

            # 4. trace subparser
            trace_parser = subparsers.add_parser(
                'trace', help='Per-iteration convergence data of one solve'
            )
            add_run_arguments(trace_parser)

            # 5. compare subparser
            compare_parser = subparsers.add_parser(
                'compare', help='imSN, exSN and grid search on one split'
            )
            add_run_arguments(compare_parser)
            add_grid_arguments(compare_parser)

            namespace = parser.parse_args(args)
            setup_logging(verbose=namespace.verbose, quiet=namespace.quiet)
            inst = cls(cli_mode=True)
            cmd = namespace.command

            if namespace.manifest:
                return inst.rerun(namespace.manifest)
            if cmd in RUN_COMMANDS:
                overrides: Dict[str, Any] = {}
                if cmd != 'grid':
                    overrides = dict(
                        config=namespace.config,
                        tol=namespace.tol,
                        max_outer=namespace.max_outer,
                        jacobian_mode=namespace.jacobian_mode,
                        kappa=namespace.kappa,
                        tau=namespace.tau,
                    )
                return inst.run_command(
                    cmd,
                    data=namespace.data,
                    folds=namespace.folds,
                    train_size=namespace.train_size,
                    seed=namespace.seed,
                    out=namespace.out,
                    fmt=namespace.fmt,
                    grid=(
                        None
                        if getattr(namespace, 'grid_default', False)
                        else getattr(namespace, 'grid', None)
                    ),
                    workers=getattr(namespace, 'workers', 1),
                    **overrides,
                )
            elif cmd == 'eval':
                return inst.eval(
                    classifier=namespace.classifier,
                    data=namespace.data,
                    fmt=namespace.fmt,
                )

            parser.print_help(sys.stderr)
            return cls.EFAIL

        except KeyboardInterrupt:
            print('^C', file=sys.stderr)
            return cls.EINTERRUPT
