import numpy as np
import pytest

from clrspline import KnotConfig, TensorBasisSpec, ZBCoeffs


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def unit_spec():
    """Biquadratic basis on the unit square with three interior knots."""
    axis = KnotConfig(0.0, 1.0, (0.25, 0.5, 0.75), 2)
    return TensorBasisSpec(axis, axis)


@pytest.fixture
def asym_spec():
    """Mixed degrees and unequal domains, for generality checks."""
    return TensorBasisSpec(
        KnotConfig(0.0, 2.0, (0.5, 0.9, 1.5), 2),
        KnotConfig(-1.0, 3.0, (0.4,), 3),
    )


def random_coeffs(spec: TensorBasisSpec, rng: np.random.Generator) -> ZBCoeffs:
    return ZBCoeffs(
        rng.normal(size=(spec.n_zb_x, spec.n_zb_y)),
        rng.normal(size=spec.n_zb_x),
        rng.normal(size=spec.n_zb_y),
    )
