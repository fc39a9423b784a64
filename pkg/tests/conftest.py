import pytest
from hypothesis import HealthCheck, settings

from aphomog import fields as F

settings.register_profile(
    "ci", max_examples=25, derandomize=True,
    suppress_health_check=[HealthCheck.too_slow], deadline=None)
settings.load_profile("ci")


@pytest.fixture(scope="session")
def sine_field():
    f = F.sine_scalar_field()
    F.certify_ellipticity(f, sample_count=20000, rng_seed=0)
    return f


@pytest.fixture(scope="session")
def golden_field():
    g = F.golden_ratio_field()
    F.certify_ellipticity(g, rng_seed=0)
    return g


@pytest.fixture(scope="session")
def laminate():
    f = F.laminate_field()
    F.certify_ellipticity(f, rng_seed=0)
    return f


@pytest.fixture(scope="session")
def unit_field():
    f = F.identity_field(1, 1)
    F.certify_ellipticity(f, sample_count=16, rng_seed=0)
    return f


@pytest.fixture(scope="session")
def sine_csets(sine_field):
    """Periodic-route correctors at the dyadic ladder used by several tests."""
    from aphomog.correctors import solve_corrector
    return {T: solve_corrector(sine_field, float(T), h=1 / 256)
            for T in (16, 32, 64, 128)}


@pytest.fixture(scope="session")
def golden_csets(golden_field):
    from aphomog.correctors import solve_corrector
    return {T: solve_corrector(golden_field, float(T), h=1 / 64, buffer=6.0)
            for T in (16, 32, 64, 128)}
