import pytest

from ncmodsym import forms, iterint, modgroup


@pytest.fixture(scope="session")
def f11():
    return forms.eta_product_coefficients(30000)


@pytest.fixture(scope="session")
def f37a():
    return forms.curve_form(forms.CURVE_37A, 37, 12000, "37a")


@pytest.fixture(scope="session")
def f37b():
    return forms.curve_form(forms.CURVE_37B, 37, 12000, "37b")


@pytest.fixture(scope="session")
def forms37(f37a, f37b):
    return (f37a, f37b)


@pytest.fixture(scope="session")
def fs37():
    return modgroup.farey_symbol(37)


@pytest.fixture(scope="session")
def cache37(fs37, forms37):
    params = iterint.EvalParams(L=2, tol=1e-10)
    return iterint.GeneratorCache(fs37, forms37, params)
