import pytest

from sparsejacobi import Rule, SparsifierConfig, generate_spec


@pytest.fixture(scope="session")
def sqrt_decay_spec():
    """Three levels of v_j = j^(-1/2) placed with the default search settings."""
    return generate_spec(Rule.power(0.5), 3, SparsifierConfig())
