import pytest

from recgraph.datamodel import RatingDataModel
from recgraph.generator import Bigraph


@pytest.fixture
def slope_one_data():
    # users A=0, B=1, C=2; items i=0, j=1
    return RatingDataModel.from_ratings([(0, 0, 5), (0, 1, 3), (1, 0, 4), (1, 1, 2), (2, 1, 4)])


@pytest.fixture
def k22_graph():
    return Bigraph.from_edges([(0, 0, 1), (0, 1, 2), (1, 0, 3), (1, 1, 4)])
