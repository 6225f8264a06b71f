"""Train/test split: the first of every five ids goes to the test set."""

from __future__ import annotations

from dataclasses import dataclass

from ..errors import ContractError


@dataclass(frozen=True)
class DatasetSplit:
    train: tuple
    test: tuple


def split_every_fifth(ids) -> DatasetSplit:
    """ids must be strictly ascending; positions 0, 5, 10, ... become the test set."""
    ids = list(ids)
    if not ids:
        raise ContractError("cannot split an empty id list")
    if any(b <= a for a, b in zip(ids, ids[1:])):
        raise ContractError("ids must be sorted strictly ascending")
    test = tuple(v for i, v in enumerate(ids) if i % 5 == 0)
    train = tuple(v for i, v in enumerate(ids) if i % 5 != 0)
    return DatasetSplit(train=train, test=test)
