import numpy as np
import pytest

from sensorfdi import (
    Dataset,
    SyntheticConfig,
    apply_normalization,
    compute_normalization,
    generate_synthetic_flight,
)


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20240)


def make_dataset(samples, n_x=None, dt=0.1):
    samples = np.asarray(samples, dtype=float)
    n = samples.shape[1]
    if n_x is None:
        n_x = n - 1
    x_names = tuple(f"x{i + 1}" for i in range(n_x))
    u_names = tuple(f"u{i + 1}" for i in range(n - n_x))
    return Dataset(samples, x_names, u_names, dt=dt)


@pytest.fixture(scope="session")
def small_training():
    """Normalized 5-channel synthetic training set used across modules."""
    cfg = SyntheticConfig(n_x=3, n_u=2, m=600, latent_dim=4, noise_std=0.02, seed=7)
    train = generate_synthetic_flight(cfg)
    stats = compute_normalization(train)
    return apply_normalization(train, stats)
