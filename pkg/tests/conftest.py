import numpy as np
import pytest

import toonfuse as tf


def rand_image(rng: np.random.Generator, size: int) -> tf.ImageBuffer:
    return tf.ImageBuffer(rng.uniform(0.0, 1.0, (size, size, 3)))


@pytest.fixture(scope="session")
def cfg64() -> tf.GeneratorConfig:
    return tf.GeneratorConfig(max_resolution=64, D=64, seed=11)


@pytest.fixture(scope="session")
def gen64(cfg64) -> tf.Generator:
    return tf.init_generator(cfg64)


@pytest.fixture(scope="session")
def enc64(cfg64) -> tf.EncoderSet:
    return tf.init_encoders(cfg64)


@pytest.fixture(scope="session")
def cfg16() -> tf.GeneratorConfig:
    return tf.GeneratorConfig(max_resolution=16, D=16, seed=5, channel_base=8, channel_max=16)


@pytest.fixture(scope="session")
def gen16(cfg16) -> tf.Generator:
    return tf.init_generator(cfg16)


@pytest.fixture(scope="session")
def enc16(cfg16) -> tf.EncoderSet:
    return tf.init_encoders(cfg16)


@pytest.fixture()
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)
