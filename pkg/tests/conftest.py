import pytest

from cosentinel.geo import load_site_registry
from cosentinel.report import Bucket, CampaignReport

# Published campaign tables: (site_id, bucket, mean ppm, printed description).
# Decimal commas ("32,916") read as decimal points.
CAMPAIGN_ROWS = [
    ("SITE-UNSIKA", Bucket.Morning, 32.916,
     "Classified as dangerous if we are outside the room for more than 30 minutes"),
    ("SITE-UNSIKA", Bucket.Noon, 36.0164,
     "Classified as dangerous if we are outside the room for more than 30 minutes"),
    ("SITE-UNSIKA", Bucket.Afternoon, 46.7436,
     "Classified as dangerous if we are outside the room for more than 30 minutes, can interfere with the function of the heart"),
    ("SITE-UBP", Bucket.Morning, 30.134,
     "Classified as dangerous if we are outside the room for more than 30 minutes"),
    ("SITE-UBP", Bucket.Noon, 30.3468,
     "Classified as dangerous if we are outside the room for more than 30 minutes"),
    ("SITE-UBP", Bucket.Afternoon, 41.23,
     "Classified as dangerous if we are outside the room for more than 30 minutes, can interfere with the function of the heart"),
    ("SITE-SKYBRIDGE", Bucket.Morning, 26.9292,
     "A little dangerous if we are in the room for more than 45 minutes"),
    ("SITE-SKYBRIDGE", Bucket.Noon, 31.6068,
     "Classified as dangerous if we are outside the room for more than 30 minutes"),
    ("SITE-SKYBRIDGE", Bucket.Afternoon, 41.5176,
     "Classified as dangerous if we are outside the room for more than 30 minutes, can interfere with the function of the heart"),
    ("SITE-BINTANGALAM", Bucket.Morning, 39.0796,
     "Classified as dangerous if we are outside the room for more than 30 minutes"),
    ("SITE-BINTANGALAM", Bucket.Noon, 62.3468,
     "Classified as dangerous if we are outside the room for more than 30 minutes, can make headaches"),
    ("SITE-BINTANGALAM", Bucket.Afternoon, 89.79,
     "Very dangerous if inhalation of more than 15 minutes, will make it difficult to breathe"),
    ("SITE-MCD", Bucket.Morning, 24.038,
     "Classified as safe for human"),
    ("SITE-MCD", Bucket.Noon, 32.0756,
     "Classified as dangerous if we are outside the room for more than 30 minutes"),
    ("SITE-MCD", Bucket.Afternoon, 28.7016,
     "A little dangerous if we are in the room for more than 45 minutes"),
]

SITE_COORDS = {
    "SITE-UNSIKA": (-6.323799, 107.306427),
    "SITE-UBP": (-6.323513, 107.301137),
    "SITE-SKYBRIDGE": (-6.327190, 107.291857),
    "SITE-BINTANGALAM": (-6.332336, 107.312257),
    "SITE-MCD": (-6.329349, 107.296362),
}

# Canonical frame for DEV01 at Unsika, 32.916 ppm; checksum computed by hand-XOR oracle.
GOLDEN_FRAME = "$COMO,DEV01,1583031600,-6.323799,107.306427,32.9160*72\n"


def campaign_means():
    means = {}
    for site_id, bucket, value, _ in CAMPAIGN_ROWS:
        means.setdefault(site_id, {})[bucket] = value
    return means


@pytest.fixture
def campaign_fixture():
    return CampaignReport.from_means(campaign_means(), count=30)


@pytest.fixture
def registry():
    return load_site_registry()


_acceptance_results = {}


def pytest_runtest_logreport(report):
    if "test_acceptance.py" not in report.nodeid:
        return
    if report.when == "call" or report.outcome == "failed":
        key = report.nodeid.split("::")[-1]
        if report.outcome == "failed" or key not in _acceptance_results:
            _acceptance_results[key] = report.outcome


def pytest_terminal_summary(terminalreporter):
    if not _acceptance_results:
        return
    terminalreporter.section("acceptance criteria")
    for name, outcome in sorted(_acceptance_results.items(), key=lambda kv: int(kv[0].split("_")[1][2:])):
        terminalreporter.write_line(f"{'PASS' if outcome == 'passed' else 'FAIL'}  {name}")
