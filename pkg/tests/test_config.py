import pytest

from qes.config import RunConfig, format_config, parse_config
from qes.errors import ConfigError
from qes.generators import Case

EX1 = """\
# Example 1 with a tie
n = 2
case = sum
phi.1 = x^2/2
phi.2 = -y^2/2
lambda = auto
epsilon = 2
tie = 0.5*(x*y)^2
domain = 7
grid.1 = 201
grid.2 = 201
k = 8
"""


def test_parse_example():
    cfg = parse_config(EX1)
    assert cfg.n == 2 and cfg.case is Case.SUM
    assert cfg.phi == ("x^2/2", "-y^2/2")
    assert cfg.lambdas == "auto" and cfg.epsilon == 2.0
    assert cfg.tie == "0.5*(x*y)^2"
    assert cfg.domain == (7.0, 7.0) and cfg.grid == (201, 201)
    assert cfg.k == 8 and cfg.tol == 1e-10 and cfg.seed == 0


def test_round_trip():
    cfg = parse_config(EX1)
    assert parse_config(format_config(cfg)) == cfg


def test_explicit_lambdas_and_variables():
    text = "n = 2\ncase = product\nvariables = u, v\nphi.1 = u\nphi.2 = v\nlambda.1 = 0.5\nlambda.2 = -0.5\n" \
           "epsilon = 1\n"
    cfg = parse_config(text)
    assert cfg.lambdas == (0.5, -0.5)
    assert cfg.variables == ("u", "v")
    assert cfg.generating_set().lambdas == (0.5, -0.5)


def test_overrides():
    cfg = parse_config(EX1).with_overrides(grid=(51,), domain=(5.0, 6.0), k=None, seed=4)
    assert cfg.grid == (51, 51) and cfg.domain == (5.0, 6.0) and cfg.k == 8 and cfg.seed == 4
    with pytest.raises(ConfigError):
        cfg.with_overrides(grid=(51, 51, 51))


@pytest.mark.parametrize("text, where", [
    ("n = 2\ncase = sum\nphi.1 = x^2/2\nphi.2 = -y^2/\n", ":4:14:"),
    ("n = 2\ncase = sum\nphi.1 = x^2/2\nphi.2 = -y^2/2\nepsil", ":5:6:"),
    ("n = 2\ncase = sum\nphi.1 = x^2/2\nphi.2 = -y^2/2\n", ":4:1: missing key 'epsilon'"),
    ("n = 2\ncase = sum\nphi.1 = x^2/2\nepsilon = 1\n", "missing key 'phi.2'"),
    ("n = 2\ncase = odd\n", ":2:8:"),
    ("n = two\n", ":1:5:"),
    ("n = 2\nfoo = 1\n", ":2:1: unknown key"),
    ("n = 2\nn = 3\n", "duplicate"),
    ("n = 2\ncase = sum\nphi.1 = x + w\nphi.2 = y\nepsilon = 1\n", ":3:13: unknown identifier 'w'"),
    ("n = 2\ncase = sum\nphi.1 = x\nphi.2 = y\nphi.3 = y\nepsilon = 1\n", "outside axes"),
    ("n = 2\ncase = sum\nphi.1 = x\nphi.2 = y\nepsilon = 1\nk = 99\n", "k must be"),
    ("n = 2\ncase = sum\nphi.1 = x\nphi.2 = y\nepsilon = 1\nlambda = 3\n", "lambda must be"),
])
def test_errors_carry_location(text, where):
    with pytest.raises(ConfigError) as err:
        parse_config(text, source="run.cfg")
    assert where in str(err.value)
    assert str(err.value).startswith("run.cfg")


def test_dimension_consistency():
    with pytest.raises(ConfigError):
        RunConfig(n=2, case=Case.SUM, phi=("x",), epsilon=1.0)
