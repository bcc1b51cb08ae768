from __future__ import annotations

import pytest

from nluharness import synth
from nluharness.schema import derive_schema


def make_schema(world, train, threshold: int = 3):
    return derive_schema(train, world.descriptors(), threshold)


@pytest.fixture(scope="session")
def restaurant_world():
    return synth.restaurant_world()


@pytest.fixture(scope="session")
def restaurant_schema(restaurant_world):
    return make_schema(restaurant_world, restaurant_world.dataset(seed=3, split="train"))


@pytest.fixture(scope="session")
def toy_world():
    return synth.toy_world(n_intents=6, n_slots=14, n_general=2, seed=1)


@pytest.fixture(scope="session")
def toy_train(toy_world):
    return toy_world.dataset(seed=1, split="train")


@pytest.fixture(scope="session")
def toy_schema(toy_world, toy_train):
    return make_schema(toy_world, toy_train)
