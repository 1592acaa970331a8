import pytest

from minisim.network import instantiate
from minisim.runtime import converge_network
from minisim.topology import generate_reference_topology


def build_ladder(regions=1, per_region=6):
    """Reference topology with every AS pre-configured and converged."""
    spec = generate_reference_topology(regions, per_region)
    for asys in spec.ases:
        asys.auto_configured = True
    network = instantiate(spec)
    report = converge_network(network)
    assert report.converged
    return network


@pytest.fixture(scope="session")
def ladder6():
    """Shared converged 6-AS ladder; must not be mutated."""
    return build_ladder(1, 6)


@pytest.fixture
def make_ladder():
    """Factory for tests that mutate their network."""
    return build_ladder
