# -*- coding: utf-8 -*-
# This software is under the MIT License

"""LIBSVM dataset reading/writing and deterministic cross-validation splits."""

import logging
import os
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np
import scipy.sparse as sp

logger = logging.getLogger(__name__)

# Accepted raw label sets, in lookup order -> label mapped to -1
LABEL_CONVENTIONS: Tuple[Tuple[Tuple[float, ...], Optional[float]], ...] = (
    ((-1.0, 1.0), None),
    ((0.0, 1.0), 0.0),
    ((1.0, 2.0), 2.0),
)


class DatasetError(ValueError):
    """Bad dataset content or split parameters."""

    def __init__(
        self, message: str, *, path: str = '', line_no: Optional[int] = None
    ) -> None:
        self.path: str = path
        self.line_no: Optional[int] = line_no
        where = ''
        if path:
            where = f'{path}:{line_no}: ' if line_no is not None else f'{path}: '
        super().__init__(where + message)


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Dataset:
    """Labeled sparse samples with labels in {-1, +1}."""

    X: sp.csr_matrix  # (n_samples, n_features), column k <-> feature index k+1
    y: np.ndarray
    n_features: int
    name: str = ''

    def __post_init__(self) -> None:
        if self.X.shape[0] != self.y.shape[0]:
            raise DatasetError('samples and labels differ in length')
        if self.X.shape[1] != self.n_features:
            raise DatasetError('feature matrix width differs from n_features')
        if not np.all(np.abs(self.y) == 1.0):
            raise DatasetError('labels must be -1 or +1')

    def __len__(self) -> int:
        return int(self.y.shape[0])

    def dense_rows(self, indices: np.ndarray) -> np.ndarray:
        """Dense (len(indices), n_features) block of the selected samples."""
        return np.asarray(self.X[np.asarray(indices, dtype=np.intp)].toarray())

    def labels(self, indices: np.ndarray) -> np.ndarray:
        return np.asarray(self.y[np.asarray(indices, dtype=np.intp)], dtype=float)

    def negative_share(self, indices: Optional[np.ndarray] = None) -> float:
        y = self.y if indices is None else self.labels(indices)
        return float(np.mean(y < 0)) if y.size else 0.0


@dataclass(frozen=True)
class SplitPlan:
    """Hold-out set, CV pool and its T equal folds."""

    T: int
    seed: int
    test_indices: np.ndarray
    cv_indices: np.ndarray
    folds: Tuple[np.ndarray, ...]
    dropped: np.ndarray = field(default_factory=lambda: _frozen(np.zeros(0, np.intp)))

    @property
    def m1(self) -> int:
        return int(self.folds[0].shape[0]) if self.folds else 0

    @property
    def m2(self) -> int:
        return (self.T - 1) * self.m1

    @property
    def l1(self) -> int:
        return int(self.cv_indices.shape[0])

    @property
    def l2(self) -> int:
        return int(self.test_indices.shape[0])

    def training_indices(self, j: int) -> np.ndarray:
        """Union of every fold but `j`, in fold order."""
        return np.concatenate([f for i, f in enumerate(self.folds) if i != j])


def normalize_labels(raw: np.ndarray, *, path: str = '') -> np.ndarray:
    """Map a binary label set onto {-1, +1}."""
    values = set(np.unique(raw).tolist())
    for accepted, negative in LABEL_CONVENTIONS:
        if values <= set(accepted):
            if negative is None:
                return np.asarray(raw, dtype=float).copy()
            return np.where(raw == negative, -1.0, 1.0)
    shown = ', '.join(f'{v:g}' for v in sorted(values)[:6])
    raise DatasetError(f'labels are not binary: {{{shown}}}', path=path)


def _check_lines(path: str) -> int:
    """Validate `label idx:val ...` lines; returns the max feature index."""
    max_index = 0
    nonempty = 0
    with open(path, 'r', encoding='utf-8', errors='replace') as fp:
        for line_no, line in enumerate(fp, 1):
            text = line.split('#', 1)[0].strip()
            if not text:
                continue
            nonempty += 1
            tokens = text.split()
            try:
                float(tokens[0])
            except ValueError:
                raise DatasetError(
                    f'bad label "{tokens[0]}"', path=path, line_no=line_no
                ) from None
            last = 0
            for token in tokens[1:]:
                key, sep, value = token.partition(':')
                if not sep:
                    raise DatasetError(
                        f'bad feature "{token}"', path=path, line_no=line_no
                    )
                if key == 'qid':
                    continue
                try:
                    index = int(key)
                    float(value)
                except ValueError:
                    raise DatasetError(
                        f'bad feature "{token}"', path=path, line_no=line_no
                    ) from None
                if index < 1:
                    raise DatasetError(
                        f'feature index {index} is not 1-based',
                        path=path,
                        line_no=line_no,
                    )
                if index <= last:
                    raise DatasetError(
                        'feature indices are not strictly increasing',
                        path=path,
                        line_no=line_no,
                    )
                last = index
            max_index = max(max_index, last)
    if not nonempty:
        raise DatasetError('empty file', path=path)
    return max_index


def parse_libsvm(path: str, n_features: Optional[int] = None) -> Dataset:
    """Read a LIBSVM file and normalize its labels to {-1, +1}.

    Missing indices are implicit zeros. `n_features` overrides the width
    (it must cover the largest index in the file).
    """
    from sklearn.datasets import load_svmlight_file

    if not os.path.isfile(path):
        raise FileNotFoundError(f'Can not find dataset file "{path}"')

    max_index = _check_lines(path)
    if n_features is None:
        n_features = max(max_index, 1)
    elif n_features < max_index:
        raise DatasetError(
            f'n_features={n_features} is smaller than the largest index {max_index}',
            path=path,
        )

    try:
        X, raw = load_svmlight_file(
            path, n_features=n_features, zero_based=False, dtype=np.float64
        )
    except ValueError as e:
        raise DatasetError(str(e), path=path) from e

    y = normalize_labels(np.asarray(raw), path=path)
    X = sp.csr_matrix(X, dtype=np.float64)
    X.sort_indices()
    logger.debug(f'Parsed {X.shape[0]} samples with {n_features} features from {path}')
    return Dataset(
        X=X,
        y=_frozen(y),
        n_features=int(n_features),
        name=os.path.basename(path),
    )


def dump_libsvm(ds: Dataset, path: str) -> None:
    """Write a dataset in the 1-based LIBSVM text format."""
    from sklearn.datasets import dump_svmlight_file

    dir_name = os.path.dirname(path)
    if dir_name:
        os.makedirs(dir_name, exist_ok=True)
    dump_svmlight_file(ds.X, ds.y.astype(np.int64), path, zero_based=False)


def make_split(ds: Dataset, T: int, l1: int, seed: int) -> SplitPlan:
    """Shuffle once, take `l1` CV points, deal them round-robin into T folds.

    Every fold keeps exactly floor(l1/T) points; the leftovers are dropped
    from the CV pool and recorded in `SplitPlan.dropped`.
    """
    n = len(ds)
    if T < 2:
        raise DatasetError(f'need at least 2 folds, got T={T}')
    if l1 < T:
        raise DatasetError(f'train size {l1} cannot form {T} folds')
    if l1 > n:
        raise DatasetError(f'train size {l1} exceeds the dataset size {n}')

    rng = np.random.default_rng(seed)
    order = rng.permutation(n).astype(np.intp)
    pool, test = order[:l1], order[l1:]

    m1 = l1 // T
    folds: List[np.ndarray] = []
    dropped: List[np.ndarray] = []
    for j in range(T):
        dealt = pool[j::T]
        folds.append(_frozen(dealt[:m1]))
        dropped.append(dealt[m1:])
    dropped_idx = np.concatenate(dropped).astype(np.intp)
    keep = np.isin(pool, dropped_idx, invert=True)
    if dropped_idx.size:
        logger.warning(
            f'Dropped {dropped_idx.size} CV samples so that each of {T} folds has {m1}'
        )
    return SplitPlan(
        T=T,
        seed=seed,
        test_indices=_frozen(test),
        cv_indices=_frozen(pool[keep]),
        folds=tuple(folds),
        dropped=_frozen(dropped_idx),
    )
