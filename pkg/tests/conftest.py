import pytest

from hegtree.groupcore import FiniteGroup, GroupSpec
from hegtree.harness import DATA_DIR
from hegtree.treeact import TreeAction


@pytest.fixture(scope="session")
def z23():
    return GroupSpec.load(DATA_DIR / "zmod2_star_zmod3.json")


@pytest.fixture(scope="session")
def f2():
    return GroupSpec.load(DATA_DIR / "f2.json")


@pytest.fixture(scope="session")
def amalgam():
    return GroupSpec.load(DATA_DIR / "s3_amalg_z4.json")


@pytest.fixture(scope="session")
def mixed():
    return GroupSpec.load(DATA_DIR / "free_product.json")


@pytest.fixture(scope="session")
def z23_tree(z23):
    return TreeAction(z23)


@pytest.fixture(scope="session")
def f2_tree(f2):
    return TreeAction(f2)


@pytest.fixture(scope="session")
def amalgam_tree(amalgam):
    return TreeAction(amalgam)


@pytest.fixture(scope="session")
def mixed_tree(mixed):
    return TreeAction(mixed)


@pytest.fixture(scope="session")
def z2z3_groups():
    return FiniteGroup.cyclic(2, "s"), FiniteGroup.cyclic(3, "t")
