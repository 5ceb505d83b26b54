import pytest

from willchain.crypto import (
    PRODUCTION_GROUP,
    TOY_GROUP,
    default_params,
    keypair_from_seed,
)


@pytest.fixture(scope="session")
def toy():
    return TOY_GROUP


@pytest.fixture(scope="session")
def prod():
    return PRODUCTION_GROUP


@pytest.fixture(scope="session")
def toy_params():
    return default_params(TOY_GROUP)


@pytest.fixture(scope="session")
def prod_params():
    return default_params(PRODUCTION_GROUP)


@pytest.fixture(scope="session")
def toy_signer():
    return keypair_from_seed(TOY_GROUP, b"toy-signer")


@pytest.fixture(scope="session")
def prod_signer():
    return keypair_from_seed(PRODUCTION_GROUP, b"prod-signer")


def slow_exp(group, base: int, exponent: int) -> int:
    """Repeated-multiplication oracle, independent of Group.exp."""
    result = 1
    for _ in range(exponent % group.q):
        result = result * base % group.p
    return result


def subgroup_elements(group) -> list[int]:
    """All q elements of the toy subgroup, by repeated multiplication."""
    elems = []
    x = 1
    for _ in range(group.q):
        elems.append(x)
        x = x * group.g % group.p
    return elems
