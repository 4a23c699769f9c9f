import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from i2s import synthgen
from i2s.pose import Sequence

settings.register_profile(
    "default",
    max_examples=25,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.data_too_large],
)
settings.load_profile("default")


def make_sequence(frames, seq_id="seq", subject="s1", obj="o1", interaction="o1_use", fps=30.0):
    return Sequence(
        id=seq_id,
        subject=subject,
        object=obj,
        interaction=interaction,
        fps=fps,
        frames=np.asarray(frames, dtype=np.float64),
    )


def random_frames(rng, t=8, scale=0.5):
    return rng.normal(0.0, scale, size=(t, 42, 3))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def tiny_synth():
    """Small but fully structured dataset: 2 subjects x 2 objects x 2 verbs x 3."""
    config = synthgen.SynthConfig(
        n_subjects=2,
        n_objects=2,
        sequences_per_cell=3,
        grasp_seconds=1.0,
        use_seconds=1.5,
        seed=7,
    )
    return synthgen.generate(config)


@pytest.fixture(scope="session")
def default_synth():
    """The full default synthetic dataset (480 sequences)."""
    return synthgen.generate(synthgen.SynthConfig())
