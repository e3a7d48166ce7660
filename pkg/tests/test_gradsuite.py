"""
For License information see the LICENSE file.

"""
import logging
import sys

import pytest

from jointdet.api.constants import ConfigError, GRAD_CHECK_TOLERANCE
from jointdet.gradsuite import check_names, register_check, run_suite

f = logging.Formatter(fmt='{asctime} {levelname:8.8} {process} --- [{threadName:12.12}] {name:32.32}: {message}',
                      style='{')

console = logging.StreamHandler(sys.stdout)
console.setFormatter(f)

log = logging.getLogger(__name__)

logging.basicConfig(handlers=[console], level=logging.INFO)


def test_check_names():
    names = check_names()
    for name in ("sparse_conv", "scatter_norm", "context_partition", "soft_focal_loss", "iou3d_loss", "router_ce",
                 "classify", "decode"):
        assert name in names


@pytest.mark.parametrize("name", check_names())
def test_suite(name):
    errors = run_suite([name], points=3)
    assert errors[name] < GRAD_CHECK_TOLERANCE


def test_suite_deterministic():
    assert run_suite(["bce", "router_ce"], points=2, seed=3) == run_suite(["bce", "router_ce"], points=2, seed=3)


def test_unknown_check():
    with pytest.raises(ConfigError):
        run_suite(["nothing"])


def test_duplicate_registration():
    with pytest.raises(ValueError):
        register_check("bce")(lambda rng: None)
